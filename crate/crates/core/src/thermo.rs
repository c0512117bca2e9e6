//! Two-phase material laws.
//!
//! A [`FreeEnergyModel`] holds the free energy density ψᵢ(u) of each phase
//! together with the conductivities dᵢ(u), the kinetic undercooling
//! coefficient γ(u) and the admissible temperature window. Everything the
//! other modules need (internal energy, entropy, heat capacity, the jump
//! h(u) = [[ψ(u)]] and the latent heat l(u) = u h′(u)) is derived here from
//! analytic first and second derivatives of ψᵢ.
//!
//! Jumps follow [[v]] = v₂ − v₁, where phase one is the dispersed phase
//! enclosed by the interface and phase two is the connected outer phase.
//! All quantities are nondimensional.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Default admissible temperature window.
pub const DEFAULT_INTERVAL: (f64, f64) = (1e-3, 1e3);

/// Number of log-spaced subintervals scanned when bracketing zeros of h.
const MELT_SCAN_INTERVALS: usize = 512;

/// Number of samples used by [`FreeEnergyModel::validate`].
const VALIDATION_SAMPLES: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThermoError {
    #[error("temperature {u} outside admissible interval ({lo}, {hi})")]
    OutOfRange { u: f64, lo: f64, hi: f64 },
    #[error("h(u) = [[psi(u)]] has no sign change in ({lo}, {hi}); no melting temperature")]
    NoMeltingPoint { lo: f64, hi: f64 },
    #[error("invalid material model: {0}")]
    InvalidModel(String),
}

/// Phase index. `One` is the dispersed phase Ω₁, `Two` the connected phase Ω₂.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    One,
    Two,
}

impl Phase {
    pub const BOTH: [Phase; 2] = [Phase::One, Phase::Two];

    fn index(self) -> usize {
        match self {
            Phase::One => 0,
            Phase::Two => 1,
        }
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A caller-supplied free energy with its first two derivatives.
#[derive(Clone)]
pub struct CustomEnergy {
    pub psi: ScalarFn,
    pub psi_prime: ScalarFn,
    pub psi_second: ScalarFn,
}

impl CustomEnergy {
    pub fn new(
        psi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        psi_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        psi_second: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            psi: Arc::new(psi),
            psi_prime: Arc::new(psi_prime),
            psi_second: Arc::new(psi_second),
        }
    }
}

impl fmt::Debug for CustomEnergy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomEnergy(..)")
    }
}

/// Free energy family.
///
/// Both closed-form families are ψᵢ(u) = aᵢ + bᵢu − κᵢ u ln u; the
/// equal-heat-capacity family ties κ₁ = κ₂.
#[derive(Debug, Clone)]
pub enum EnergyFamily {
    EqualHeatCapacity { a: [f64; 2], b: [f64; 2], kappa: f64 },
    LinearInternalEnergy { a: [f64; 2], b: [f64; 2], kappa: [f64; 2] },
    Custom([CustomEnergy; 2]),
}

/// A scalar coefficient of temperature: conductivity or undercooling.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Function(ScalarFn),
}

impl Coefficient {
    pub fn function(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Function(Arc::new(f))
    }

    #[inline]
    pub fn at(&self, u: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Function(f) => f(u),
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        matches!(self, Coefficient::Constant(c) if *c == 0.0)
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// Entropy, internal energy and heat capacity of one phase at one temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derived {
    pub eta: f64,
    pub eps: f64,
    pub kappa: f64,
}

/// Zeros of h in the admissible window, in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct MeltingPoints {
    pub roots: Vec<f64>,
}

impl MeltingPoints {
    pub fn is_unique(&self) -> bool {
        self.roots.len() == 1
    }

    /// The melting temperature when it is unique.
    pub fn unique(&self) -> Option<f64> {
        self.is_unique().then(|| self.roots[0])
    }
}

#[derive(Debug, Clone)]
pub struct FreeEnergyModel {
    pub family: EnergyFamily,
    pub conductivity: [Coefficient; 2],
    pub undercooling: Coefficient,
    pub interval: (f64, f64),
}

impl FreeEnergyModel {
    /// ψᵢ(u) = aᵢ + bᵢu − κ u ln u with a common κ; unit conductivities, no undercooling.
    pub fn equal_heat_capacity(a: [f64; 2], b: [f64; 2], kappa: f64) -> Self {
        Self::with_family(EnergyFamily::EqualHeatCapacity { a, b, kappa })
    }

    /// ψᵢ(u) = aᵢ + bᵢu − κᵢ u ln u; unit conductivities, no undercooling.
    pub fn linear_internal_energy(a: [f64; 2], b: [f64; 2], kappa: [f64; 2]) -> Self {
        Self::with_family(EnergyFamily::LinearInternalEnergy { a, b, kappa })
    }

    pub fn custom(one: CustomEnergy, two: CustomEnergy) -> Self {
        Self::with_family(EnergyFamily::Custom([one, two]))
    }

    fn with_family(family: EnergyFamily) -> Self {
        Self {
            family,
            conductivity: [Coefficient::Constant(1.0), Coefficient::Constant(1.0)],
            undercooling: Coefficient::Constant(0.0),
            interval: DEFAULT_INTERVAL,
        }
    }

    pub fn with_conductivity(mut self, d1: Coefficient, d2: Coefficient) -> Self {
        self.conductivity = [d1, d2];
        self
    }

    pub fn with_undercooling(mut self, gamma: Coefficient) -> Self {
        self.undercooling = gamma;
        self
    }

    pub fn with_interval(mut self, lo: f64, hi: f64) -> Self {
        self.interval = (lo, hi);
        self
    }

    pub fn check_range(&self, u: f64) -> Result<(), ThermoError> {
        let (lo, hi) = self.interval;
        if u > lo && u < hi && u.is_finite() {
            Ok(())
        } else {
            Err(ThermoError::OutOfRange { u, lo, hi })
        }
    }

    // Unchecked analytic evaluations; callers guarantee u lies in the window.

    #[inline]
    pub(crate) fn psi_raw(&self, phase: Phase, u: f64) -> f64 {
        let i = phase.index();
        match &self.family {
            EnergyFamily::EqualHeatCapacity { a, b, kappa } => a[i] + b[i] * u - kappa * u * u.ln(),
            EnergyFamily::LinearInternalEnergy { a, b, kappa } => {
                a[i] + b[i] * u - kappa[i] * u * u.ln()
            }
            EnergyFamily::Custom(c) => (c[i].psi)(u),
        }
    }

    #[inline]
    pub(crate) fn psi_prime_raw(&self, phase: Phase, u: f64) -> f64 {
        let i = phase.index();
        match &self.family {
            EnergyFamily::EqualHeatCapacity { b, kappa, .. } => b[i] - kappa * (u.ln() + 1.0),
            EnergyFamily::LinearInternalEnergy { b, kappa, .. } => b[i] - kappa[i] * (u.ln() + 1.0),
            EnergyFamily::Custom(c) => (c[i].psi_prime)(u),
        }
    }

    #[inline]
    pub(crate) fn psi_second_raw(&self, phase: Phase, u: f64) -> f64 {
        let i = phase.index();
        match &self.family {
            EnergyFamily::EqualHeatCapacity { kappa, .. } => -kappa / u,
            EnergyFamily::LinearInternalEnergy { kappa, .. } => -kappa[i] / u,
            EnergyFamily::Custom(c) => (c[i].psi_second)(u),
        }
    }

    #[inline]
    pub(crate) fn eps_raw(&self, phase: Phase, u: f64) -> f64 {
        self.psi_raw(phase, u) - u * self.psi_prime_raw(phase, u)
    }

    #[inline]
    pub(crate) fn eta_raw(&self, phase: Phase, u: f64) -> f64 {
        -self.psi_prime_raw(phase, u)
    }

    #[inline]
    pub(crate) fn kappa_raw(&self, phase: Phase, u: f64) -> f64 {
        -u * self.psi_second_raw(phase, u)
    }

    #[inline]
    pub(crate) fn h_raw(&self, u: f64) -> f64 {
        self.psi_raw(Phase::Two, u) - self.psi_raw(Phase::One, u)
    }

    #[inline]
    pub(crate) fn h_prime_raw(&self, u: f64) -> f64 {
        self.psi_prime_raw(Phase::Two, u) - self.psi_prime_raw(Phase::One, u)
    }

    #[inline]
    pub(crate) fn latent_raw(&self, u: f64) -> f64 {
        u * self.h_prime_raw(u)
    }

    #[inline]
    pub(crate) fn d_raw(&self, phase: Phase, u: f64) -> f64 {
        self.conductivity[phase.index()].at(u)
    }

    #[inline]
    pub(crate) fn gamma_raw(&self, u: f64) -> f64 {
        self.undercooling.at(u)
    }

    /// ψ of `phase` at `u`.
    pub fn psi(&self, phase: Phase, u: f64) -> Result<f64, ThermoError> {
        self.check_range(u)?;
        Ok(self.psi_raw(phase, u))
    }

    /// η = −ψ′, ε = ψ − uψ′ and κ = −uψ″ of `phase` at `u`.
    pub fn derived(&self, phase: Phase, u: f64) -> Result<Derived, ThermoError> {
        self.check_range(u)?;
        Ok(Derived {
            eta: self.eta_raw(phase, u),
            eps: self.eps_raw(phase, u),
            kappa: self.kappa_raw(phase, u),
        })
    }

    /// h(u) = ψ₂(u) − ψ₁(u).
    pub fn jump_h(&self, u: f64) -> Result<f64, ThermoError> {
        self.check_range(u)?;
        Ok(self.h_raw(u))
    }

    /// h′(u), analytic.
    pub fn jump_h_prime(&self, u: f64) -> Result<f64, ThermoError> {
        self.check_range(u)?;
        Ok(self.h_prime_raw(u))
    }

    /// l(u) = u h′(u) = −u [[η(u)]].
    pub fn latent_l(&self, u: f64) -> Result<f64, ThermoError> {
        self.check_range(u)?;
        Ok(self.latent_raw(u))
    }

    pub fn conductivity(&self, phase: Phase, u: f64) -> Result<f64, ThermoError> {
        self.check_range(u)?;
        Ok(self.d_raw(phase, u))
    }

    pub fn undercooling(&self, u: f64) -> Result<f64, ThermoError> {
        self.check_range(u)?;
        Ok(self.gamma_raw(u))
    }

    /// True when γ ≡ 0 (no kinetic undercooling).
    pub fn without_undercooling(&self) -> bool {
        self.undercooling.is_identically_zero()
    }

    /// Inverts ε of `phase`: returns u with ε(u) = `eps`. ε is strictly
    /// increasing because κ > 0, so Newton with a bisection fallback is safe.
    pub fn eps_inverse(&self, phase: Phase, eps: f64, guess: f64) -> Result<f64, ThermoError> {
        let (lo, hi) = self.interval;
        let f = |u: f64| self.eps_raw(phase, u) - eps;
        let (mut a, mut b) = (lo, hi);
        let (fa, fb) = (f(a * (1.0 + 1e-15)), f(b));
        if fa > 0.0 || fb < 0.0 {
            return Err(ThermoError::OutOfRange { u: f64::NAN, lo, hi });
        }
        let mut u = if guess > lo && guess < hi { guess } else { (lo * hi).sqrt() };
        for _ in 0..200 {
            let fu = f(u);
            if fu == 0.0 {
                return Ok(u);
            }
            if fu < 0.0 {
                a = a.max(u);
            } else {
                b = b.min(u);
            }
            let k = self.kappa_raw(phase, u);
            let mut next = u - fu / k;
            if !(next > a && next < b) || !next.is_finite() {
                next = 0.5 * (a + b);
            }
            if (next - u).abs() <= 4.0 * f64::EPSILON * u.abs() {
                return Ok(next);
            }
            u = next;
        }
        Ok(u)
    }

    /// Zeros of h in the admissible window: a log-spaced scan with 512
    /// subintervals, each bracket refined by bisection to 1e−12 relative.
    pub fn melting_temperature(&self) -> Result<MeltingPoints, ThermoError> {
        let (lo, hi) = self.interval;
        let roots = scan_roots(|u| self.h_raw(u), lo, hi, MELT_SCAN_INTERVALS, 1e-12);
        if roots.is_empty() {
            Err(ThermoError::NoMeltingPoint { lo, hi })
        } else {
            Ok(MeltingPoints { roots })
        }
    }

    /// Checks κᵢ > 0 and dᵢ > 0 on a 1000-point sample of the window and
    /// that γ is either identically zero or strictly positive.
    pub fn validate(&self) -> Result<(), ThermoError> {
        let (lo, hi) = self.interval;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(ThermoError::InvalidModel(format!(
                "admissible interval ({lo}, {hi}) must satisfy 0 < u_lo < u_hi < inf"
            )));
        }
        match &self.family {
            EnergyFamily::EqualHeatCapacity { a, b, kappa } => {
                check_finite(a.iter().chain(b).chain(std::iter::once(kappa)))?
            }
            EnergyFamily::LinearInternalEnergy { a, b, kappa } => {
                check_finite(a.iter().chain(b).chain(kappa))?
            }
            EnergyFamily::Custom(_) => {}
        }
        let gamma_zero = self.undercooling.is_identically_zero();
        for u in log_samples(lo, hi, VALIDATION_SAMPLES) {
            for phase in Phase::BOTH {
                let k = self.kappa_raw(phase, u);
                if !(k > 0.0) {
                    return Err(ThermoError::InvalidModel(format!(
                        "heat capacity kappa{} = {k} is not positive at u = {u}",
                        phase.index() + 1
                    )));
                }
                let d = self.d_raw(phase, u);
                if !(d > 0.0) {
                    return Err(ThermoError::InvalidModel(format!(
                        "conductivity d{} = {d} is not positive at u = {u}",
                        phase.index() + 1
                    )));
                }
            }
            if !gamma_zero {
                let g = self.gamma_raw(u);
                if !(g > 0.0) {
                    return Err(ThermoError::InvalidModel(format!(
                        "undercooling gamma = {g} at u = {u}: gamma must be identically zero or positive"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_finite<'a>(values: impl Iterator<Item = &'a f64>) -> Result<(), ThermoError> {
    for v in values {
        if !v.is_finite() {
            return Err(ThermoError::InvalidModel(format!("non-finite parameter {v}")));
        }
    }
    Ok(())
}

/// `count` log-spaced points strictly inside (lo, hi).
pub(crate) fn log_samples(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    let (la, lb) = (lo.ln(), hi.ln());
    (0..count).map(move |k| (la + (lb - la) * (k as f64 + 0.5) / count as f64).exp())
}

/// Brackets sign changes of `f` on a log-spaced grid over [lo, hi] and
/// refines each by bisection. Exact zeros on grid nodes are reported once.
pub(crate) fn scan_roots(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    intervals: usize,
    rel_tol: f64,
) -> Vec<f64> {
    let (la, lb) = (lo.ln(), hi.ln());
    let nodes: Vec<f64> = (0..=intervals)
        .map(|k| (la + (lb - la) * k as f64 / intervals as f64).exp())
        .map(|u| u.clamp(lo, hi))
        .collect();
    let values: Vec<f64> = nodes.iter().map(|&u| f(u)).collect();
    let mut roots = Vec::new();
    for k in 0..intervals {
        let (a, b) = (nodes[k], nodes[k + 1]);
        let (fa, fb) = (values[k], values[k + 1]);
        if fa == 0.0 {
            if roots.last() != Some(&a) {
                roots.push(a);
            }
            continue;
        }
        if fa * fb < 0.0 {
            roots.push(bisect(&f, a, b, fa, rel_tol));
        }
    }
    if values[intervals] == 0.0 && roots.last() != Some(&nodes[intervals]) {
        roots.push(nodes[intervals]);
    }
    roots
}

/// Bisection on a bracket with f(a) = `fa` and a sign change on [a, b].
pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, rel_tol: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= rel_tol * mid.abs().max(f64::MIN_POSITIVE) {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fa * fm < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

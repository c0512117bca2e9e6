//! Spherical equilibria under energy conservation.
//!
//! At equilibrium the temperature is a constant u and the dispersed phase is
//! m balls of the common radius R(u) = σ/h(u). Eliminating R leaves the scalar
//! equation φ(u) = E₀ for the reduced energy
//!
//! ```text
//! φ(u) = |Ω| ε₂(u) − (m ωₙ/n) Rⁿ(u) [[ε(u)]] + σ m ωₙ Rⁿ⁻¹(u)/(n−1).
//! ```
//!
//! The sign of φ′ at a root, equivalently ζ − 1, separates stable from
//! unstable equilibria when the interface is connected; several spheres are
//! always unstable.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::thermo::{bisect, scan_roots, FreeEnergyModel, Phase, ThermoError};

/// Samples per admissible interval in [`EquilibriumProblem::find_equilibria`].
pub const SCAN_SAMPLES: usize = 2048;
/// Relative inward shrink of admissible interval endpoints.
pub const ENDPOINT_SHRINK: f64 = 1e-9;
/// |ζ − 1| at or below this is classified as marginal.
pub const MARGINAL_BAND: f64 = 1e-9;
const ROOT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error("h({u}) = {h} is not positive: no admissible radius")]
    NoAdmissibleRadius { u: f64, h: f64 },
    #[error("temperature {u} is outside the admissible set h(u) > sigma/R_m = {bound}")]
    OutOfRange { u: f64, bound: f64 },
    #[error("latent heat vanishes at u = {u}; zeta is infinite")]
    DegenerateLatentHeat { u: f64 },
    #[error("the admissible set h(u) > sigma/R_m = {bound} is empty")]
    NoAdmissibleRange { bound: f64 },
    #[error("invalid equilibrium problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Thermo(#[from] ThermoError),
}

/// Surface measure of the unit sphere in dimension `n` (2π or 4π).
pub fn unit_sphere_measure(n: usize) -> f64 {
    match n {
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => panic!("dimension {n} not supported"),
    }
}

/// |B_R| = ωₙ Rⁿ / n.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    unit_sphere_measure(n) * r.powi(n as i32) / n as f64
}

/// |S_R| = ωₙ Rⁿ⁻¹.
pub fn sphere_area(n: usize, r: f64) -> f64 {
    unit_sphere_measure(n) * r.powi(n as i32 - 1)
}

/// The container: dimension, volume and the largest radius R_m(m) for which
/// m disjoint balls fit. Packing radii are user input; missing entries fall
/// back to half the radius of a ball of volume |Ω|/m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub dim: usize,
    pub volume: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub packing_radius: Vec<f64>,
}

impl DomainSpec {
    pub fn new(dim: usize, volume: f64) -> Self {
        Self { dim, volume, packing_radius: Vec::new() }
    }

    pub fn with_packing_radii(mut self, radii: Vec<f64>) -> Self {
        self.packing_radius = radii;
        self
    }

    pub fn omega(&self) -> f64 {
        unit_sphere_measure(self.dim)
    }

    /// R_m(m) for `m` spheres.
    pub fn max_radius(&self, m: usize) -> f64 {
        match self.packing_radius.get(m.wrapping_sub(1)) {
            Some(&r) => r,
            None => {
                let n = self.dim as f64;
                0.5 * (self.volume * n / (self.omega() * m as f64)).powf(1.0 / n)
            }
        }
    }

    pub fn validate(&self) -> Result<(), EquilibriumError> {
        let bad = |msg: String| Err(EquilibriumError::InvalidProblem(msg));
        if self.dim != 2 && self.dim != 3 {
            return bad(format!("dimension must be 2 or 3, got {}", self.dim));
        }
        if !(self.volume > 0.0 && self.volume.is_finite()) {
            return bad(format!("domain volume must be positive, got {}", self.volume));
        }
        for (k, &r) in self.packing_radius.iter().enumerate() {
            let m = k + 1;
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("packing radius R_m({m}) = {r} must be positive"));
            }
            if k > 0 && r > self.packing_radius[k - 1] {
                return bad(format!("packing radius R_m({m}) = {r} exceeds R_m({})", m - 1));
            }
            let filled = m as f64 * ball_volume(self.dim, r);
            if filled > self.volume * (1.0 + 1e-12) {
                return bad(format!(
                    "{m} balls of radius {r} occupy {filled}, more than |Omega| = {}",
                    self.volume
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityClass {
    Stable,
    Unstable,
    Marginal,
}

impl StabilityClass {
    /// Stable iff one sphere and ζ < 1; marginal iff one sphere and ζ = 1
    /// within [`MARGINAL_BAND`]; unstable otherwise.
    pub fn classify(spheres: usize, zeta: f64) -> Self {
        if spheres > 1 {
            StabilityClass::Unstable
        } else if (zeta - 1.0).abs() <= MARGINAL_BAND {
            StabilityClass::Marginal
        } else if zeta < 1.0 {
            StabilityClass::Stable
        } else {
            StabilityClass::Unstable
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPoint {
    pub temperature: f64,
    pub radius: f64,
    /// ζ*; `f64::INFINITY` when the latent heat vanishes.
    #[serde(with = "crate::report::extended_f64")]
    pub zeta: f64,
    pub phi_prime: f64,
    pub feasible: bool,
    pub class: StabilityClass,
}

#[derive(Debug, Clone)]
pub struct EquilibriumProblem {
    pub model: FreeEnergyModel,
    pub domain: DomainSpec,
    pub sigma: f64,
    pub spheres: usize,
    pub energy: f64,
}

/// σu(κ|1)_Ω / (l² R² |Γ|), written out so that the degenerate limits can be
/// evaluated directly: a vanishing heat capacity integral gives ζ = 0 and a
/// vanishing latent heat gives ζ = ∞.
pub fn zeta_from_parts(sigma: f64, u: f64, kappa_integral: f64, latent: f64, radius: f64, area: f64) -> f64 {
    let denom = latent * latent * radius * radius * area;
    if denom == 0.0 {
        return f64::INFINITY;
    }
    sigma * u * kappa_integral / denom
}

impl EquilibriumProblem {
    pub fn new(model: FreeEnergyModel, domain: DomainSpec, sigma: f64, spheres: usize, energy: f64) -> Self {
        Self { model, domain, sigma, spheres, energy }
    }

    pub fn validate(&self) -> Result<(), EquilibriumError> {
        self.model.validate()?;
        self.domain.validate()?;
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(EquilibriumError::InvalidProblem(format!(
                "surface tension sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.spheres == 0 {
            return Err(EquilibriumError::InvalidProblem("number of spheres must be at least 1".into()));
        }
        if !self.energy.is_finite() {
            return Err(EquilibriumError::InvalidProblem("energy must be finite".into()));
        }
        Ok(())
    }

    fn n(&self) -> usize {
        self.domain.dim
    }

    fn m(&self) -> f64 {
        self.spheres as f64
    }

    /// Lower bound σ/R_m(m) on h at admissible temperatures.
    pub fn h_bound(&self) -> f64 {
        self.sigma / self.domain.max_radius(self.spheres)
    }

    /// R(u) = σ/h(u).
    pub fn radius_of_temperature(&self, u: f64) -> Result<f64, EquilibriumError> {
        let h = self.model.jump_h(u)?;
        if !(h > 0.0) {
            return Err(EquilibriumError::NoAdmissibleRadius { u, h });
        }
        Ok(self.sigma / h)
    }

    fn check_admissible(&self, u: f64) -> Result<f64, EquilibriumError> {
        let r = self.radius_of_temperature(u)?;
        let bound = self.h_bound();
        if self.model.h_raw(u) <= bound {
            return Err(EquilibriumError::OutOfRange { u, bound });
        }
        Ok(r)
    }

    /// Reduced energy without the packing constraint; only h(u) > 0 is required.
    pub fn reduced_energy(&self, u: f64) -> Result<f64, EquilibriumError> {
        let r = self.radius_of_temperature(u)?;
        Ok(self.phi_at(u, r))
    }

    fn phi_at(&self, u: f64, r: f64) -> f64 {
        let n = self.n();
        let om = self.domain.omega();
        let jump_eps = self.model.eps_raw(Phase::Two, u) - self.model.eps_raw(Phase::One, u);
        self.domain.volume * self.model.eps_raw(Phase::Two, u)
            - self.m() * ball_volume(n, r) * jump_eps
            + self.sigma * self.m() * om * r.powi(n as i32 - 1) / (n as f64 - 1.0)
    }

    /// φ(u) on the admissible set h(u) > σ/R_m.
    pub fn phi(&self, u: f64) -> Result<f64, EquilibriumError> {
        let r = self.check_admissible(u)?;
        Ok(self.phi_at(u, r))
    }

    /// The same reduced energy written through h alone:
    /// |Ω|ε₂ + cₙ (h¹⁻ⁿ + (n−1) u h′ h⁻ⁿ), cₙ = m ωₙ σⁿ / (n(n−1)).
    pub fn phi_h_form(&self, u: f64) -> Result<f64, EquilibriumError> {
        self.check_admissible(u)?;
        let n = self.n() as i32;
        let nf = n as f64;
        let h = self.model.h_raw(u);
        let hp = self.model.h_prime_raw(u);
        let cn = self.m() * self.domain.omega() * self.sigma.powi(n) / (nf * (nf - 1.0));
        Ok(self.domain.volume * self.model.eps_raw(Phase::Two, u)
            + cn * (h.powi(1 - n) + (nf - 1.0) * u * hp * h.powi(-n)))
    }

    /// (κ(u)|1)_Ω = |Ω|κ₂ − [[κ]] m|B_R|.
    pub fn heat_capacity_integral(&self, u: f64, r: f64) -> f64 {
        let k2 = self.model.kappa_raw(Phase::Two, u);
        let jump = k2 - self.model.kappa_raw(Phase::One, u);
        self.domain.volume * k2 - jump * self.m() * ball_volume(self.n(), r)
    }

    /// |Γ| = m ωₙ Rⁿ⁻¹.
    pub fn interface_area(&self, r: f64) -> f64 {
        self.m() * sphere_area(self.n(), r)
    }

    /// φ′(u) = (κ|1)_Ω − l² R² |Γ| / (σu).
    pub fn phi_prime(&self, u: f64) -> Result<f64, EquilibriumError> {
        let r = self.check_admissible(u)?;
        Ok(self.phi_prime_at(u, r))
    }

    fn phi_prime_at(&self, u: f64, r: f64) -> f64 {
        let l = self.model.latent_raw(u);
        self.heat_capacity_integral(u, r) - l * l * r * r * self.interface_area(r) / (self.sigma * u)
    }

    /// ζ(u) = σu(κ|1)_Ω / (l² R² |Γ|).
    pub fn zeta(&self, u: f64) -> Result<f64, EquilibriumError> {
        let r = self.check_admissible(u)?;
        let l = self.model.latent_raw(u);
        if l == 0.0 {
            return Err(EquilibriumError::DegenerateLatentHeat { u });
        }
        Ok(self.zeta_at(u, r))
    }

    fn zeta_at(&self, u: f64, r: f64) -> f64 {
        zeta_from_parts(
            self.sigma,
            u,
            self.heat_capacity_integral(u, r),
            self.model.latent_raw(u),
            r,
            self.interface_area(r),
        )
    }

    /// Decorates a temperature with radius, ζ, φ′, feasibility and class.
    pub fn equilibrium_at(&self, u: f64) -> Result<EquilibriumPoint, EquilibriumError> {
        let r = self.radius_of_temperature(u)?;
        let rm = self.domain.max_radius(self.spheres);
        let zeta = self.zeta_at(u, r);
        Ok(EquilibriumPoint {
            temperature: u,
            radius: r,
            zeta,
            phi_prime: self.phi_prime_at(u, r),
            feasible: r < rm && self.model.h_raw(u) > self.sigma / rm,
            class: StabilityClass::classify(self.spheres, zeta),
        })
    }

    /// Maximal subintervals of the thermodynamic window on which
    /// h(u) > σ/R_m, each shrunk inward by [`ENDPOINT_SHRINK`].
    pub fn admissible_intervals(&self) -> Result<Vec<(f64, f64)>, EquilibriumError> {
        let (lo, hi) = self.model.interval;
        let bound = self.h_bound();
        let g = |u: f64| self.model.h_raw(u) - bound;
        let mut cuts = vec![lo];
        cuts.extend(scan_roots(g, lo, hi, 4096, 1e-14));
        cuts.push(hi);
        let mut out = Vec::new();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let mid = (a * b).sqrt();
            if g(mid) > 0.0 {
                let (a2, b2) = (a * (1.0 + ENDPOINT_SHRINK), b * (1.0 - ENDPOINT_SHRINK));
                if b2 > a2 {
                    out.push((a2, b2));
                }
            }
        }
        if out.is_empty() {
            return Err(EquilibriumError::NoAdmissibleRange { bound });
        }
        Ok(out)
    }

    /// All solutions of φ(u) = E₀ on the admissible set, ordered by u.
    ///
    /// Each admissible interval is sampled at [`SCAN_SAMPLES`] log-spaced
    /// points. Sign changes are refined by bisection; local minima of
    /// |φ − E₀| without a sign change are refined by golden-section search,
    /// which exposes pairs of nearby roots and tangencies.
    pub fn find_equilibria(&self) -> Result<Vec<EquilibriumPoint>, EquilibriumError> {
        self.validate()?;
        let mut roots = Vec::new();
        for (a, b) in self.admissible_intervals()? {
            roots.extend(self.roots_on(a, b));
        }
        roots.sort_by(|x, y| x.total_cmp(y));
        roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-10 * y.abs());
        roots.into_iter().map(|u| self.equilibrium_at(u)).collect()
    }

    fn roots_on(&self, a: f64, b: f64) -> Vec<f64> {
        let e0 = self.energy;
        let f = |u: f64| self.phi_at(u, self.sigma / self.model.h_raw(u)) - e0;
        let (la, lb) = (a.ln(), b.ln());
        let nodes: Vec<f64> = (0..SCAN_SAMPLES)
            .map(|k| {
                let t = k as f64 / (SCAN_SAMPLES - 1) as f64;
                (la + (lb - la) * t).exp().clamp(a, b)
            })
            .collect();
        let values: Vec<f64> = nodes.par_iter().map(|&u| f(u)).collect();
        let scale = e0.abs().max(1.0);
        let mut roots = Vec::new();
        for k in 0..SCAN_SAMPLES - 1 {
            let (fa, fb) = (values[k], values[k + 1]);
            if fa == 0.0 {
                roots.push(nodes[k]);
            } else if fa * fb < 0.0 {
                roots.push(bisect(&f, nodes[k], nodes[k + 1], fa, ROOT_TOL));
            }
        }
        if values[SCAN_SAMPLES - 1] == 0.0 {
            roots.push(nodes[SCAN_SAMPLES - 1]);
        }
        // hidden pairs: |f| has an interior local minimum without a sign change
        for k in 1..SCAN_SAMPLES - 1 {
            let (fl, fc, fr) = (values[k - 1], values[k], values[k + 1]);
            if fl * fc <= 0.0 || fc * fr <= 0.0 {
                continue;
            }
            if fc.abs() < fl.abs() && fc.abs() < fr.abs() {
                let s = fc.signum();
                let (lo, hi) = (nodes[k - 1], nodes[k + 1]);
                let u_ext = golden_section(|u| s * f(u), lo, hi, 1e-14);
                let f_ext = f(u_ext);
                if f_ext.abs() <= 1e-13 * scale {
                    roots.push(u_ext);
                } else if f_ext * s < 0.0 {
                    roots.push(bisect(&f, lo, u_ext, fl, ROOT_TOL));
                    roots.push(bisect(&f, u_ext, hi, f_ext, ROOT_TOL));
                }
            }
        }
        roots
    }

    /// argmin of φ over [a, b] by golden-section search; φ must be unimodal there.
    pub fn minimize_phi(&self, a: f64, b: f64) -> f64 {
        golden_section(|u| self.phi_at(u, self.sigma / self.model.h_raw(u)), a, b, 1e-12)
    }
}

/// Minimizer of a unimodal `f` on [a, b].
pub(crate) fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, rel_tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..300 {
        if (b - a).abs() <= rel_tol * (a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Thermo fixture in a disc of radius 3 (|Ω| = 9π), one sphere, σ = 1.
    fn fixture_a(spheres: usize, energy: f64) -> EquilibriumProblem {
        let model = FreeEnergyModel::equal_heat_capacity([1.0, 0.0], [0.0, 1.0], 1.0);
        let domain = DomainSpec::new(2, 9.0 * PI).with_packing_radii(vec![3.0, 1.5]);
        EquilibriumProblem::new(model, domain, 1.0, spheres, energy)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn radius_of_temperature() {
        let p = fixture_a(1, 0.0);
        assert!(rel(p.radius_of_temperature(2.0).unwrap(), 1.0) < 1e-15);
        assert!(rel(p.radius_of_temperature(1.5).unwrap(), 2.0) < 1e-15);
        assert!(matches!(
            p.radius_of_temperature(1.0),
            Err(EquilibriumError::NoAdmissibleRadius { .. })
        ));
    }

    #[test]
    fn phi_fixture_values() {
        let p = fixture_a(1, 0.0);
        assert!(rel(p.phi(2.0).unwrap(), 21.0 * PI) < 1e-14);
        assert!(rel(p.phi(1.5).unwrap(), 21.5 * PI) < 1e-14);
        assert!(rel(p.phi_h_form(2.0).unwrap(), 21.0 * PI) < 1e-14);
        assert!(rel(p.phi_h_form(1.5).unwrap(), 21.5 * PI) < 1e-14);
    }

    #[test]
    fn phi_rejects_inadmissible_temperatures() {
        let p = fixture_a(1, 0.0);
        // h(1.2) = 0.2 < σ/R_m = 1/3
        assert!(matches!(p.phi(1.2), Err(EquilibriumError::OutOfRange { .. })));
        assert!(matches!(p.phi_prime(0.5), Err(EquilibriumError::NoAdmissibleRadius { .. })));
    }

    #[test]
    fn phi_blows_up_at_both_ends() {
        let p = fixture_a(1, 0.0);
        let near_melt: Vec<f64> = (1..8).map(|k| p.reduced_energy(1.0 + 10f64.powi(-k)).unwrap()).collect();
        assert!(near_melt.windows(2).all(|w| w[1] > w[0]));
        assert!(*near_melt.last().unwrap() > 1e6);
        let far: Vec<f64> = (1..6).map(|k| p.reduced_energy(10f64.powf(k as f64 * 0.5)).unwrap()).collect();
        assert!(far.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn phi_prime_and_zeta_fixture_values() {
        let p = fixture_a(1, 0.0);
        assert!(rel(p.phi_prime(2.0).unwrap(), 5.0 * PI) < 1e-13);
        assert!(rel(p.phi_prime(1.5).unwrap(), -15.0 * PI) < 1e-13);
        assert!(rel(p.zeta(2.0).unwrap(), 2.25) < 1e-14);
        assert!(rel(p.zeta(1.5).unwrap(), 0.375) < 1e-14);
        for u in [1.5, 2.0] {
            let r = p.radius_of_temperature(u).unwrap();
            let l = p.model.latent_l(u).unwrap();
            let expected = (p.zeta(u).unwrap() - 1.0) * l * l * r * r * p.interface_area(r) / (p.sigma * u);
            assert!(rel(p.phi_prime(u).unwrap(), expected) < 1e-12);
        }
        assert_eq!(p.equilibrium_at(2.0).unwrap().class, StabilityClass::Unstable);
        assert_eq!(p.equilibrium_at(1.5).unwrap().class, StabilityClass::Stable);
    }

    #[test]
    fn zeta_degenerate_limits() {
        // vanishing heat capacity (quasi-stationary limit)
        assert_eq!(zeta_from_parts(1.0, 2.0, 0.0, 3.0, 1.0, 2.0 * PI), 0.0);
        assert!(zeta_from_parts(1.0, 2.0, 1.0, 0.0, 1.0, 2.0 * PI).is_infinite());
    }

    #[test]
    fn degenerate_latent_heat_is_reported() {
        // ψ₁ = −u ln u, ψ₂ = 2 − u ln u: h ≡ 2 so l ≡ 0
        let model = FreeEnergyModel::equal_heat_capacity([0.0, 2.0], [0.0, 0.0], 1.0);
        let domain = DomainSpec::new(2, 9.0 * PI).with_packing_radii(vec![3.0]);
        let p = EquilibriumProblem::new(model, domain, 1.0, 1, 0.0);
        assert!(matches!(p.zeta(2.0), Err(EquilibriumError::DegenerateLatentHeat { .. })));
        let pt = p.equilibrium_at(2.0).unwrap();
        assert!(pt.zeta.is_infinite());
        assert_eq!(pt.class, StabilityClass::Unstable);
        assert!(rel(pt.phi_prime, p.heat_capacity_integral(2.0, 0.5)) < 1e-14);
    }

    #[test]
    fn classification_rules() {
        assert_eq!(StabilityClass::classify(1, 0.999), StabilityClass::Stable);
        assert_eq!(StabilityClass::classify(1, 1.0 + 5e-10), StabilityClass::Marginal);
        assert_eq!(StabilityClass::classify(1, 1.001), StabilityClass::Unstable);
        assert_eq!(StabilityClass::classify(2, 0.1), StabilityClass::Unstable);
        assert_eq!(StabilityClass::classify(1, f64::INFINITY), StabilityClass::Unstable);
    }

    #[test]
    fn default_packing_radius_and_validation() {
        let d = DomainSpec::new(2, 9.0 * PI);
        assert!(rel(d.max_radius(1), 1.5) < 1e-14);
        assert!(d.validate().is_ok());
        let crowded = DomainSpec::new(2, 9.0 * PI).with_packing_radii(vec![3.0, 2.5]);
        assert!(crowded.validate().is_err());
        assert!(DomainSpec::new(4, 1.0).validate().is_err());
    }

    #[test]
    fn empty_admissible_range() {
        // h ≤ 1/10 everywhere below u_hi = 1.1
        let model = FreeEnergyModel::equal_heat_capacity([1.0, 0.0], [0.0, 1.0], 1.0).with_interval(1e-3, 1.1);
        let domain = DomainSpec::new(2, 9.0 * PI).with_packing_radii(vec![3.0]);
        let p = EquilibriumProblem::new(model, domain, 1.0, 1, 60.0);
        assert!(matches!(p.find_equilibria(), Err(EquilibriumError::NoAdmissibleRange { .. })));
    }

    #[test]
    fn find_equilibria_fixture_roots() {
        let pts = fixture_a(1, 21.5 * PI).find_equilibria().unwrap();
        assert_eq!(pts.len(), 2);
        assert!(rel(pts[0].temperature, 1.5) < 1e-11);
        assert_eq!(pts[0].class, StabilityClass::Stable);
        assert_eq!(pts[1].class, StabilityClass::Unstable);
        assert!(pts.iter().all(|p| p.feasible));
    }

    #[test]
    fn no_equilibria_below_minimum() {
        assert!(fixture_a(1, 15.0 * PI).find_equilibria().unwrap().is_empty());
    }

    #[test]
    fn two_spheres_are_always_unstable() {
        // φ for m = 2 at u = 2 equals 18π + 2π·3 = 24π
        let p = fixture_a(2, 24.0 * PI);
        let pts = p.find_equilibria().unwrap();
        assert!(!pts.is_empty());
        assert!(pts.iter().any(|q| rel(q.temperature, 2.0) < 1e-11));
        assert!(pts.iter().all(|q| q.class == StabilityClass::Unstable));
    }

    #[test]
    fn hidden_root_pair_is_resolved() {
        // energy a hair above the minimum: both roots sit within one scan cell
        let p = fixture_a(1, 0.0);
        let u0 = p.minimize_phi(1.4, 3.0);
        let pmin = p.phi(u0).unwrap();
        let q = fixture_a(1, pmin * (1.0 + 1e-9));
        let pts = q.find_equilibria().unwrap();
        assert_eq!(pts.len(), 2);
        assert!(pts[0].temperature < u0 && pts[1].temperature > u0);
    }

    #[test]
    fn tiny_golden_section() {
        let x = golden_section(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-9);
    }
}

//! Radially symmetric evolution and the lumped ripening model.
//!
//! The radial solver fixes the front with a Landau map per phase
//! (r = sξ inside, r = s + (R_out − s)ξ outside) and uses cell-centred
//! finite volumes for the conserved energy Q = V ε(u). Cells follow the
//! moving faces; swept volumes are exact differences of ball volumes, so the
//! geometric conservation law holds to rounding. At the front the discrete
//! Gibbs–Thomson law is imposed at the radius s_GT with
//! σωΔ(sⁿ⁻¹)/(n−1) = σ ΔW/s_GT, which makes the total energy, bulk plus
//! surface, conserved up to the tolerance of the front iteration.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibria::{ball_volume, sphere_area, unit_sphere_measure};
use crate::linalg::solve_tridiagonal;
use crate::thermo::{scan_roots, FreeEnergyModel, Phase, ThermoError};

/// Front CFL factor: |V| dt ≤ CFL · (smallest cell).
pub const DEFAULT_CFL: f64 = 0.2;
/// Ball-condition floor as a fraction of R_out.
pub const FRONT_FLOOR_FRACTION: f64 = 1e-3;
const FRONT_TOL: f64 = 1e-13;
const MAX_FRONT_ITERATIONS: usize = 80;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("invalid simulation configuration: {0}")]
    InvalidConfig(String),
    #[error("latent heat l(u_s) = {latent} vanished at t = {t} (u_s = {u_s}) without undercooling")]
    WellPosednessLost { t: f64, u_s: f64, latent: f64 },
    #[error("temperature lost positivity at t = {t}: min u = {u_min}")]
    TemperaturePositivityLost { t: f64, u_min: f64 },
    #[error("geometry event at t = {t}: {kind} (s = {s})")]
    GeometryEvent { t: f64, s: f64, kind: String },
    #[error("energy equation has no solution at t = {t}: {reason}")]
    EnergyClosureFailed { t: f64, reason: String },
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error(transparent)]
    Thermo(#[from] ThermoError),
}

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Initial temperature u₀(r).
#[derive(Clone)]
pub enum InitialProfile {
    Constant(f64),
    /// The constant with h(u₀) = σ/s₀, i.e. compatible with the front.
    Compatible,
    /// Piecewise linear through (r, u) pairs, constant beyond the ends.
    Table(Vec<(f64, f64)>),
    Function(Profile),
}

impl std::fmt::Debug for InitialProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Constant(u) => write!(f, "Constant({u})"),
            Self::Compatible => write!(f, "Compatible"),
            Self::Table(t) => write!(f, "Table({} points)", t.len()),
            Self::Function(_) => write!(f, "Function"),
        }
    }
}

fn interpolate(table: &[(f64, f64)], r: f64) -> f64 {
    if r <= table[0].0 {
        return table[0].1;
    }
    for w in table.windows(2) {
        if r <= w[1].0 {
            let t = (r - w[0].0) / (w[1].0 - w[0].0);
            return w[0].1 + t * (w[1].1 - w[0].1);
        }
    }
    table[table.len() - 1].1
}

#[derive(Debug, Clone)]
pub struct RadialStefanConfig {
    pub model: FreeEnergyModel,
    pub sigma: f64,
    pub dim: usize,
    pub r_out: f64,
    pub s0: f64,
    pub initial: InitialProfile,
    /// Cells in the inner and outer phase.
    pub cells: [usize; 2],
    pub cfl: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub t_end: f64,
    pub max_steps: usize,
    /// ε_s; defaults to 1e−3·R_out.
    pub front_floor: f64,
    /// |l(u_s)| below this counts as loss of well-posedness when γ ≡ 0.
    pub latent_floor: f64,
    /// Record every k-th step (the first and last are always recorded).
    pub sample_every: usize,
}

impl RadialStefanConfig {
    pub fn new(model: FreeEnergyModel, sigma: f64, dim: usize, r_out: f64, s0: f64) -> Self {
        Self {
            model,
            sigma,
            dim,
            r_out,
            s0,
            initial: InitialProfile::Compatible,
            cells: [200, 200],
            cfl: DEFAULT_CFL,
            dt_min: 1e-9,
            dt_max: 1e-2,
            t_end: 1.0,
            max_steps: 1_000_000,
            front_floor: FRONT_FLOOR_FRACTION * r_out,
            latent_floor: 1e-8,
            sample_every: 1,
        }
    }

    fn undercooled(&self) -> bool {
        !self.model.without_undercooling()
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |m: String| Err(SimulationError::InvalidConfig(m));
        self.model.validate()?;
        if self.dim != 2 && self.dim != 3 {
            return bad(format!("dimension must be 2 or 3, got {}", self.dim));
        }
        if !(self.sigma > 0.0) {
            return bad("sigma must be positive".into());
        }
        if !(self.s0 > self.front_floor && self.s0 < self.r_out - self.front_floor) {
            return bad(format!("initial front {} outside ({}, {})", self.s0, self.front_floor, self.r_out - self.front_floor));
        }
        if self.cells.iter().any(|&c| c < 4) {
            return bad("each phase needs at least 4 cells".into());
        }
        if !(self.dt_min > 0.0 && self.dt_max >= self.dt_min && self.cfl > 0.0 && self.t_end >= 0.0) {
            return bad("need 0 < dt_min <= dt_max, cfl > 0 and t_end >= 0".into());
        }
        if let InitialProfile::Table(t) = &self.initial {
            if t.is_empty() || t.windows(2).any(|w| w[1].0 <= w[0].0) {
                return bad("temperature table must be nonempty with increasing radii".into());
            }
        }
        Ok(())
    }
}

/// Solves h(u) = target near `guess`.
pub fn invert_h(model: &FreeEnergyModel, target: f64, guess: f64) -> Result<f64, SimulationError> {
    let (lo, hi) = model.interval;
    let mut u = guess;
    if u > lo && u < hi {
        for _ in 0..60 {
            let f = model.h_raw(u) - target;
            let fp = model.h_prime_raw(u);
            if fp == 0.0 || !fp.is_finite() {
                break;
            }
            let next = u - f / fp;
            if !(next > lo && next < hi) {
                break;
            }
            if (next - u).abs() <= 2.0 * f64::EPSILON * u.abs() {
                return Ok(next);
            }
            u = next;
        }
    }
    let roots = scan_roots(|v| model.h_raw(v) - target, lo, hi, 4096, 1e-15);
    roots
        .into_iter()
        .min_by(|a, b| (a - guess).abs().total_cmp(&(b - guess).abs()))
        .ok_or_else(|| SimulationError::NumericalBreakdown(format!("h(u) = {target} has no solution")))
}

/// Face radii of both phases for front position s.
fn faces(cfg: &RadialStefanConfig, s: f64) -> [Vec<f64>; 2] {
    let [n1, n2] = cfg.cells;
    let inner = (0..=n1).map(|j| s * j as f64 / n1 as f64).collect();
    let outer = (0..=n2).map(|j| if j == n2 { cfg.r_out } else { s + (cfg.r_out - s) * j as f64 / n2 as f64 }).collect();
    [inner, outer]
}

/// Enclosed ball volume W(r).
fn ball(cfg: &RadialStefanConfig, r: f64) -> f64 {
    ball_volume(cfg.dim, r)
}

fn volumes(cfg: &RadialStefanConfig, f: &[f64]) -> Vec<f64> {
    f.windows(2).map(|w| ball(cfg, w[1]) - ball(cfg, w[0])).collect()
}

fn centers(f: &[f64]) -> Vec<f64> {
    f.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// Mean interface area ΔW/Δs and the Gibbs–Thomson radius s_GT between two
/// front positions, both in closed form so that Δs → 0 is harmless.
pub fn front_means(dim: usize, a: f64, b: f64) -> (f64, f64) {
    let omega = unit_sphere_measure(dim);
    if dim == 2 {
        let mean = 0.5 * (a + b);
        (omega * mean, mean)
    } else {
        let q = (a * a + a * b + b * b) / 3.0;
        (omega * q, 2.0 * q / (a + b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialState {
    pub t: f64,
    pub s: f64,
    /// Cell temperatures, inner phase from the centre outward, outer phase
    /// from the front to the wall.
    pub u: [Vec<f64>; 2],
    pub velocity: f64,
    pub u_interface: f64,
}

impl RadialState {
    pub fn min_temperature(&self) -> f64 {
        self.u.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_temperature(&self) -> f64 {
        self.u.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// One trial of the front iteration at a guessed new front position.
struct Trial {
    s_implied: f64,
    u_s: f64,
    q_new: [Vec<f64>; 2],
}

/// Front-tracked solver for the radial two-phase problem.
#[derive(Debug, Clone)]
pub struct RadialStefan {
    pub config: RadialStefanConfig,
}

impl RadialStefan {
    pub fn new(config: RadialStefanConfig) -> Result<Self, SimulationError> {
        config.validate()?;
        Ok(Self { config })
    }

    fn phase(p: usize) -> Phase {
        if p == 0 {
            Phase::One
        } else {
            Phase::Two
        }
    }

    /// Initial state with cell-centre temperatures; checks compatibility
    /// when γ ≡ 0.
    pub fn initial_state(&self) -> Result<RadialState, SimulationError> {
        let cfg = &self.config;
        let m = &cfg.model;
        let compatible = || invert_h(m, cfg.sigma / cfg.s0, m.melting_temperature().ok().and_then(|r| r.roots.first().copied()).unwrap_or(1.0) * 1.1);
        let profile: Box<dyn Fn(f64) -> f64> = match &cfg.initial {
            InitialProfile::Constant(u) => {
                let u = *u;
                Box::new(move |_| u)
            }
            InitialProfile::Compatible => {
                let u = compatible()?;
                Box::new(move |_| u)
            }
            InitialProfile::Table(t) => {
                let t = t.clone();
                Box::new(move |r| interpolate(&t, r))
            }
            InitialProfile::Function(f) => {
                let f = f.clone();
                Box::new(move |r| f(r))
            }
        };
        let u_s = profile(cfg.s0);
        m.check_range(u_s)?;
        if !cfg.undercooled() {
            let residual = m.h_raw(u_s) - cfg.sigma / cfg.s0;
            if residual.abs() > 1e-8 {
                return Err(SimulationError::InvalidConfig(format!(
                    "initial data violate the Gibbs-Thomson compatibility: h(u0(s0)) - sigma/s0 = {residual:e}"
                )));
            }
            if m.latent_raw(u_s).abs() < cfg.latent_floor {
                return Err(SimulationError::InvalidConfig("latent heat vanishes at the initial front".into()));
            }
        }
        let f = faces(cfg, cfg.s0);
        let u = [centers(&f[0]).into_iter().map(&profile).collect::<Vec<_>>(), centers(&f[1]).into_iter().map(&profile).collect()];
        let state = RadialState { t: 0.0, s: cfg.s0, u, velocity: 0.0, u_interface: u_s };
        if state.min_temperature() <= 0.0 {
            return Err(SimulationError::InvalidConfig("initial temperature must be positive".into()));
        }
        for v in state.u.iter().flatten() {
            m.check_range(*v)?;
        }
        Ok(state)
    }

    fn eps(&self, p: usize, u: f64) -> f64 {
        self.config.model.eps_raw(Self::phase(p), u)
    }

    /// E = Σ V ε(u) + σ ω sⁿ⁻¹/(n−1).
    pub fn energy(&self, state: &RadialState) -> f64 {
        let cfg = &self.config;
        let f = faces(cfg, state.s);
        let bulk: f64 = (0..2)
            .map(|p| volumes(cfg, &f[p]).iter().zip(&state.u[p]).map(|(v, &u)| v * self.eps(p, u)).sum::<f64>())
            .sum();
        bulk + cfg.sigma * sphere_area(cfg.dim, state.s) / (cfg.dim as f64 - 1.0)
    }

    /// Φ = Σ V η(u).
    pub fn entropy(&self, state: &RadialState) -> f64 {
        let cfg = &self.config;
        let f = faces(cfg, state.s);
        (0..2)
            .map(|p| {
                volumes(cfg, &f[p])
                    .iter()
                    .zip(&state.u[p])
                    .map(|(v, &u)| v * cfg.model.eta_raw(Self::phase(p), u))
                    .sum::<f64>()
            })
            .sum()
    }

    /// Σ_faces G (Δu)²/(u u′) + |Γ| γ(u_s) V²/u_s, the discrete form of
    /// ∫ d|∇u|²/u² + |Γ|γV²/u_s.
    pub fn entropy_production(&self, state: &RadialState) -> f64 {
        let cfg = &self.config;
        let m = &cfg.model;
        let f = faces(cfg, state.s);
        let area = sphere_area(cfg.dim, state.s);
        let u_s = state.u_interface;
        let mut total = 0.0;
        for p in 0..2 {
            let c = centers(&f[p]);
            let u = &state.u[p];
            let d: Vec<f64> = u.iter().map(|&x| m.d_raw(Self::phase(p), x)).collect();
            for j in 0..u.len() - 1 {
                let g = self.conductance(d[j], d[j + 1], f[p][j + 1], c[j + 1] - c[j]);
                total += g * (u[j + 1] - u[j]).powi(2) / (u[j] * u[j + 1]);
            }
            let (k, dist) = if p == 0 { (u.len() - 1, state.s - c[u.len() - 1]) } else { (0, c[0] - state.s) };
            let g = d[k] * area / dist;
            total += g * (u_s - u[k]).powi(2) / (u_s * u[k]);
        }
        total + area * m.gamma_raw(u_s) * state.velocity * state.velocity / u_s
    }

    fn conductance(&self, da: f64, db: f64, r_face: f64, dist: f64) -> f64 {
        let d = 2.0 * da * db / (da + db);
        d * sphere_area(self.config.dim, r_face) / dist
    }

    /// Linearized implicit solve of both phases for a guessed front `s_new`
    /// and interface temperature `u_s`; returns the updated energies and the
    /// interface fluxes into the inner and outer phase.
    fn solve_phases(&self, state: &RadialState, dt: f64, s_new: f64, u_s: f64) -> ([Vec<f64>; 2], f64, f64) {
        let cfg = &self.config;
        let m = &cfg.model;
        let f_old = faces(cfg, state.s);
        let f_new = faces(cfg, s_new);
        let (area_mean, _) = front_means(cfg.dim, state.s, s_new);
        let mut q_out: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        let mut flux_s = [0.0; 2];
        for p in 0..2 {
            let ph = Self::phase(p);
            let u = &state.u[p];
            let n = u.len();
            let v_old = volumes(cfg, &f_old[p]);
            let v_new = volumes(cfg, &f_new[p]);
            let c = centers(&f_new[p]);
            let d: Vec<f64> = u.iter().map(|&x| m.d_raw(ph, x)).collect();
            // swept volume through each face, upwind energy of the swept region
            let mut adv = vec![0.0; n];
            for k in 0..=n {
                let dw = ball(cfg, f_new[p][k]) - ball(cfg, f_old[p][k]);
                if dw == 0.0 {
                    continue;
                }
                let is_front = (p == 0 && k == n) || (p == 1 && k == 0);
                let e = if is_front {
                    self.eps(p, u_s)
                } else if dw > 0.0 {
                    self.eps(p, u[k])
                } else {
                    self.eps(p, u[k - 1])
                };
                // cell below the face gains, cell above loses
                if k > 0 {
                    adv[k - 1] += dw * e;
                }
                if k < n {
                    adv[k] -= dw * e;
                }
            }
            let g_int: Vec<f64> = (0..n - 1).map(|j| self.conductance(d[j], d[j + 1], f_new[p][j + 1], c[j + 1] - c[j])).collect();
            let (front_cell, dist) = if p == 0 { (n - 1, s_new - c[n - 1]) } else { (0, c[0] - s_new) };
            let g_s = d[front_cell] * area_mean / dist;

            let (mut lo, mut di, mut up, mut rhs) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
            for j in 0..n {
                let kap = m.kappa_raw(ph, u[j]);
                let q_old = v_old[j] * self.eps(p, u[j]);
                di[j] = v_new[j] * kap;
                rhs[j] = q_old + adv[j] - v_new[j] * (self.eps(p, u[j]) - kap * u[j]);
                if j > 0 {
                    di[j] += dt * g_int[j - 1];
                    lo[j] = -dt * g_int[j - 1];
                }
                if j + 1 < n {
                    di[j] += dt * g_int[j];
                    up[j] = -dt * g_int[j];
                }
            }
            di[front_cell] += dt * g_s;
            rhs[front_cell] += dt * g_s * u_s;
            let mut ul = rhs;
            if solve_tridiagonal(&lo, &di, &up, &mut ul).is_none() {
                ul = vec![f64::NAN; n];
            }
            // conservative update with the fluxes of the linearized solution
            let mut q = vec![0.0; n];
            for j in 0..n {
                q[j] = v_old[j] * self.eps(p, u[j]) + adv[j];
            }
            for j in 0..n - 1 {
                let fl = dt * g_int[j] * (ul[j + 1] - ul[j]);
                q[j] += fl;
                q[j + 1] -= fl;
            }
            let fs = g_s * (u_s - ul[front_cell]);
            q[front_cell] += dt * fs;
            flux_s[p] = fs;
            q_out[p] = q;
        }
        (q_out, flux_s[0], flux_s[1])
    }

    /// Interface condition at a guessed front: returns u_s, V and the phases.
    fn trial(&self, state: &RadialState, dt: f64, s_new: f64) -> Result<Trial, SimulationError> {
        let cfg = &self.config;
        let m = &cfg.model;
        let (area_mean, s_gt) = front_means(cfg.dim, state.s, s_new);
        let target = cfg.sigma / s_gt;
        if !cfg.undercooled() {
            let u_s = invert_h(m, target, state.u_interface)?;
            let l = m.latent_raw(u_s);
            if l.abs() < cfg.latent_floor {
                return Err(SimulationError::WellPosednessLost { t: state.t, u_s, latent: l });
            }
            let (q, f1, f2) = self.solve_phases(state, dt, s_new, u_s);
            // A[[d u_r]] = −(F₁ + F₂)
            let velocity = -(f1 + f2) / (area_mean * l);
            return Ok(Trial { s_implied: state.s + dt * velocity, u_s, q_new: q });
        }
        let vel = |u_s: f64| (m.h_raw(u_s) - target) / m.gamma_raw(u_s);
        let residual = |u_s: f64| {
            let (q, f1, f2) = self.solve_phases(state, dt, s_new, u_s);
            let v = vel(u_s);
            let jump = -(f1 + f2) / area_mean;
            (jump - v * (m.latent_raw(u_s) - m.gamma_raw(u_s) * v), q)
        };
        let mut a = state.u_interface;
        let mut b = a * (1.0 + 1e-7);
        let (mut fa, _) = residual(a);
        let (mut fb, mut qb) = residual(b);
        for _ in 0..MAX_FRONT_ITERATIONS {
            if fb == 0.0 || (b - a).abs() <= 4.0 * f64::EPSILON * b.abs() {
                break;
            }
            let next = b - fb * (b - a) / (fb - fa);
            if !next.is_finite() || next <= 0.0 {
                return Err(SimulationError::NumericalBreakdown(format!("interface temperature iteration diverged at t = {}", state.t)));
            }
            m.check_range(next)?;
            a = b;
            fa = fb;
            b = next;
            let r = residual(b);
            fb = r.0;
            qb = r.1;
        }
        let velocity = vel(b);
        Ok(Trial { s_implied: state.s + dt * velocity, u_s: b, q_new: qb })
    }

    /// Time step from the front CFL condition.
    pub fn time_step(&self, state: &RadialState) -> f64 {
        let cfg = &self.config;
        let cell = (state.s / cfg.cells[0] as f64).min((cfg.r_out - state.s) / cfg.cells[1] as f64);
        let dt = if state.velocity == 0.0 { cfg.dt_max } else { cfg.cfl * cell / state.velocity.abs() };
        dt.clamp(cfg.dt_min, cfg.dt_max)
    }

    /// Advances one step of size `dt`.
    pub fn step_with(&self, state: &RadialState, dt: f64) -> Result<RadialState, SimulationError> {
        let cfg = &self.config;
        let t_new = state.t + dt;
        let lo = 0.5 * cfg.front_floor;
        let hi = cfg.r_out - 0.5 * cfg.front_floor;
        let clamp = |s: f64| s.clamp(lo, hi);
        // secant iteration on g(s*) = s_implied(s*) − s*
        let mut sa = clamp(state.s + dt * state.velocity);
        let mut ta = self.trial(state, dt, sa)?;
        let mut ga = ta.s_implied - sa;
        let mut sb = clamp(ta.s_implied);
        let mut tb = self.trial(state, dt, sb)?;
        let mut gb = tb.s_implied - sb;
        let tol = FRONT_TOL * cfg.r_out;
        let mut converged = ga.abs() <= tol;
        if converged {
            sb = sa;
            tb = ta;
            gb = ga;
        }
        let mut iter = 0;
        while !converged && iter < MAX_FRONT_ITERATIONS {
            if gb.abs() <= tol {
                converged = true;
                break;
            }
            let next = if gb != ga { sb - gb * (sb - sa) / (gb - ga) } else { sb + gb };
            let next = if next.is_finite() { clamp(next) } else { clamp(tb.s_implied) };
            sa = sb;
            ta = tb;
            ga = gb;
            sb = next;
            tb = self.trial(state, dt, sb)?;
            gb = tb.s_implied - sb;
            iter += 1;
        }
        let _ = ta;
        if !converged && gb.abs() > tol {
            return Err(SimulationError::NumericalBreakdown(format!(
                "front iteration did not converge at t = {}: residual {gb:e}",
                state.t
            )));
        }
        let s_new = sb;
        if s_new <= cfg.front_floor || tb.s_implied <= cfg.front_floor {
            return Err(SimulationError::GeometryEvent { t: t_new, s: s_new, kind: "front collapse".into() });
        }
        if s_new >= cfg.r_out - cfg.front_floor || tb.s_implied >= cfg.r_out - cfg.front_floor {
            return Err(SimulationError::GeometryEvent { t: t_new, s: s_new, kind: "front reached the wall".into() });
        }
        let f_new = faces(cfg, s_new);
        let mut u: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        for p in 0..2 {
            let v_new = volumes(cfg, &f_new[p]);
            let mut up = Vec::with_capacity(v_new.len());
            for (j, (&q, &v)) in tb.q_new[p].iter().zip(&v_new).enumerate() {
                let e = q / v;
                let guess = state.u[p][j];
                let val = cfg.model.eps_inverse(Self::phase(p), e, guess).map_err(|_| {
                    SimulationError::TemperaturePositivityLost { t: t_new, u_min: guess.min(0.0) }
                })?;
                if !(val > 0.0) || !val.is_finite() {
                    return Err(SimulationError::TemperaturePositivityLost { t: t_new, u_min: val });
                }
                up.push(val);
            }
            u[p] = up;
        }
        Ok(RadialState { t: t_new, s: s_new, u, velocity: (s_new - state.s) / dt, u_interface: tb.u_s })
    }

    /// Advances one step with the CFL-controlled step size.
    pub fn step(&self, state: &RadialState) -> Result<RadialState, SimulationError> {
        let dt = self.time_step(state).min((self.config.t_end - state.t).max(self.config.dt_min));
        self.step_with(state, dt)
    }

    /// |h(u_s) − σ/s_GT| for the step from `a` to `b` (zero by construction
    /// up to the root solve when γ ≡ 0).
    pub fn constraint_residual(&self, a: &RadialState, b: &RadialState) -> f64 {
        let (_, s_gt) = front_means(self.config.dim, a.s, b.s);
        (self.config.model.h_raw(b.u_interface) - self.config.sigma / s_gt - self.config.model.gamma_raw(b.u_interface) * b.velocity).abs()
    }

    /// Residual of the Stefan law [[d∂_r u]] = (l − γV)V evaluated on
    /// the initial data with the Gibbs–Thomson velocity. Logged only.
    pub fn compatibility_residual(&self, state: &RadialState) -> f64 {
        let cfg = &self.config;
        let m = &cfg.model;
        let u_s = state.u_interface;
        let f = faces(cfg, state.s);
        let c = [centers(&f[0]), centers(&f[1])];
        let n1 = state.u[0].len();
        let g1 = m.d_raw(Phase::One, u_s) * (u_s - state.u[0][n1 - 1]) / (state.s - c[0][n1 - 1]);
        let g2 = m.d_raw(Phase::Two, u_s) * (state.u[1][0] - u_s) / (c[1][0] - state.s);
        let gamma = m.gamma_raw(u_s);
        let v = if gamma > 0.0 { (m.h_raw(u_s) - cfg.sigma / state.s) / gamma } else { 0.0 };
        (g2 - g1) - v * (m.latent_raw(u_s) - gamma * v)
    }

    /// Integrates until `t_end`, a stop event, or `max_steps`.
    pub fn run(&self) -> Result<RunOutput, SimulationError> {
        let cfg = &self.config;
        let mut state = self.initial_state()?;
        let e0 = self.energy(&state);
        let mut phi_prev = self.entropy(&state);
        let mut out = RunOutput {
            samples: vec![self.sample(&state)],
            stop: StopReason::EndTime,
            failed_conditions: Vec::new(),
            steps: 0,
            max_energy_drift: 0.0,
            min_entropy_increment: 0.0,
            max_constraint_residual: 0.0,
            compatibility_residual: self.compatibility_residual(&state),
            final_state: state.clone(),
        };
        while state.t < cfg.t_end * (1.0 - 1e-14) {
            if out.steps >= cfg.max_steps {
                out.stop = StopReason::MaxSteps;
                break;
            }
            let next = match self.step(&state) {
                Ok(s) => s,
                Err(e @ (SimulationError::GeometryEvent { .. }
                | SimulationError::WellPosednessLost { .. }
                | SimulationError::TemperaturePositivityLost { .. })) => {
                    out.failed_conditions = failed_conditions(&e);
                    out.stop = StopReason::Event(e.to_string());
                    out.samples.push(self.sample(&state));
                    out.final_state = state;
                    return Ok(out);
                }
                Err(e) => return Err(e),
            };
            out.steps += 1;
            let phi = self.entropy(&next);
            out.min_entropy_increment = out.min_entropy_increment.min(phi - phi_prev);
            phi_prev = phi;
            let drift = ((self.energy(&next) - e0) / e0).abs();
            out.max_energy_drift = out.max_energy_drift.max(drift);
            if !cfg.undercooled() {
                out.max_constraint_residual = out.max_constraint_residual.max(self.constraint_residual(&state, &next));
            }
            state = next;
            if out.steps % cfg.sample_every.max(1) == 0 {
                out.samples.push(self.sample(&state));
            }
        }
        if out.samples.last().map(|s| s.t) != Some(state.t) {
            out.samples.push(self.sample(&state));
        }
        out.final_state = state;
        Ok(out)
    }

    fn sample(&self, state: &RadialState) -> Sample {
        Sample {
            t: state.t,
            fronts: vec![state.s],
            u_interface: state.u_interface,
            energy: self.energy(state),
            entropy: self.entropy(state),
            production: self.entropy_production(state),
            clearance: state.s.min(self.config.r_out - state.s),
        }
    }
}

/// The global-existence conditions a stop event violates: bounded
/// temperature, |l(u)| bounded below, u bounded below, and the uniform ball
/// condition with distance to the wall.
fn failed_conditions(e: &SimulationError) -> Vec<String> {
    match e {
        SimulationError::WellPosednessLost { .. } => vec!["latent heat bounded away from zero".into()],
        SimulationError::TemperaturePositivityLost { .. } => {
            vec!["bounded temperature".into(), "temperature bounded below".into()]
        }
        SimulationError::GeometryEvent { .. } => vec!["uniform ball condition".into()],
        _ => Vec::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    /// s for the radial model, R₁..R_m for the ripening model.
    pub fronts: Vec<f64>,
    pub u_interface: f64,
    pub energy: f64,
    pub entropy: f64,
    pub production: f64,
    pub clearance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StopReason {
    EndTime,
    MaxSteps,
    Event(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    #[serde(skip)]
    pub samples: Vec<Sample>,
    pub stop: StopReason,
    pub failed_conditions: Vec<String>,
    pub steps: usize,
    pub max_energy_drift: f64,
    /// Most negative per-step change of Φ (0 if Φ never decreased).
    pub min_entropy_increment: f64,
    pub max_constraint_residual: f64,
    pub compatibility_residual: f64,
    pub final_state: RadialState,
}

/// CSV of samples: t, s or R_1..R_m, u_interface, E, Phi, production, clearance.
pub fn samples_csv(samples: &[Sample]) -> String {
    let m = samples.first().map_or(1, |s| s.fronts.len());
    let mut header: Vec<String> = vec!["t".into()];
    if m == 1 {
        header.push("s".into());
    } else {
        header.extend((1..=m).map(|i| format!("R_{i}")));
    }
    header.extend(["u_interface", "E", "Phi", "production", "clearance"].map(String::from));
    let rows: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            let mut r = vec![s.t];
            r.extend(&s.fronts);
            r.extend([s.u_interface, s.energy, s.entropy, s.production, s.clearance]);
            r
        })
        .collect();
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    crate::report::to_csv(&h, &rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares fit of ln|y| against t.
pub fn fit_exponential(t: &[f64], y: &[f64]) -> ExponentialFit {
    let pts: Vec<(f64, f64)> = t.iter().zip(y).filter(|(_, y)| y.abs() > 0.0).map(|(&t, &y)| (t, y.abs().ln())).collect();
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    ExponentialFit { slope, intercept: my - slope * mt, r_squared: sxy * sxy / (sxx * syy), points: pts.len() }
}

// ---------------------------------------------------------------------------
// Reduced multi-sphere model

/// Spatially uniform temperature, m spheres with Gibbs–Thomson kinetics
/// V_i = (h(u) − σ/R_i)/γ(u), and u fixed by E(u, R) = E₀. This is an
/// approximation of the full problem in the fast-diffusion limit.
#[derive(Debug, Clone)]
pub struct RipeningConfig {
    pub model: FreeEnergyModel,
    pub sigma: f64,
    pub dim: usize,
    pub volume: f64,
    pub radii: Vec<f64>,
    pub initial_temperature: f64,
    pub dt: f64,
    pub t_end: f64,
    pub max_steps: usize,
    /// A sphere smaller than this has dissolved and the run stops.
    pub min_radius: f64,
    pub sample_every: usize,
}

impl RipeningConfig {
    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |m: String| Err(SimulationError::InvalidConfig(m));
        self.model.validate()?;
        if self.model.without_undercooling() {
            return bad("the ripening model needs gamma > 0".into());
        }
        if self.radii.is_empty() || self.radii.iter().any(|&r| !(r > 0.0)) {
            return bad("radii must be positive".into());
        }
        let filled: f64 = self.radii.iter().map(|&r| ball_volume(self.dim, r)).sum();
        if !(filled < self.volume) {
            return bad("spheres do not fit into the domain".into());
        }
        if !(self.dt > 0.0 && self.sigma > 0.0) {
            return bad("need dt > 0 and sigma > 0".into());
        }
        self.model.check_range(self.initial_temperature)?;
        Ok(())
    }

    /// E(u, R) = |Ω|ε₂(u) − Σ|B_Rᵢ|[[ε(u)]] + σΣ ωRᵢⁿ⁻¹/(n−1).
    pub fn energy(&self, u: f64, radii: &[f64]) -> f64 {
        let m = &self.model;
        let jump = m.eps_raw(Phase::Two, u) - m.eps_raw(Phase::One, u);
        let n1 = self.dim as f64 - 1.0;
        self.volume * m.eps_raw(Phase::Two, u)
            + radii.iter().map(|&r| -ball_volume(self.dim, r) * jump + self.sigma * sphere_area(self.dim, r) / n1).sum::<f64>()
    }

    /// Φ(u, R) = |Ω|η₂(u) − Σ|B_Rᵢ|[[η(u)]].
    pub fn entropy(&self, u: f64, radii: &[f64]) -> f64 {
        let m = &self.model;
        let jump = m.eta_raw(Phase::Two, u) - m.eta_raw(Phase::One, u);
        self.volume * m.eta_raw(Phase::Two, u) - radii.iter().map(|&r| ball_volume(self.dim, r) * jump).sum::<f64>()
    }

    /// (κ|1)_Ω = |Ω|κ₂ − Σ|B_Rᵢ|[[κ]] = ∂E/∂u.
    pub fn heat_capacity_integral(&self, u: f64, radii: &[f64]) -> f64 {
        let m = &self.model;
        let jump = m.kappa_raw(Phase::Two, u) - m.kappa_raw(Phase::One, u);
        self.volume * m.kappa_raw(Phase::Two, u) - radii.iter().map(|&r| ball_volume(self.dim, r) * jump).sum::<f64>()
    }

    /// Solves E(u, R) = E₀ for u (monotone when (κ|1) > 0).
    pub fn temperature_for(&self, energy: f64, radii: &[f64], guess: f64, t: f64) -> Result<f64, SimulationError> {
        let (lo, hi) = self.model.interval;
        let f = |u: f64| self.energy(u, radii) - energy;
        let fail = |reason: String| SimulationError::EnergyClosureFailed { t, reason };
        let (a0, b0) = (lo * (1.0 + 1e-12), hi * (1.0 - 1e-12));
        let (fa, fb) = (f(a0), f(b0));
        if !(fa < 0.0 && fb > 0.0) {
            return Err(fail(format!("E(u) - E0 does not change sign on the window: {fa:e}, {fb:e}")));
        }
        let (mut a, mut b) = (a0, b0);
        let mut u = if guess > a && guess < b { guess } else { 0.5 * (a + b) };
        for _ in 0..200 {
            let fu = f(u);
            if fu == 0.0 {
                return Ok(u);
            }
            if fu < 0.0 {
                a = u;
            } else {
                b = u;
            }
            let k = self.heat_capacity_integral(u, radii);
            if !(k > 0.0) {
                return Err(fail(format!("(kappa|1) = {k} is not positive at u = {u}")));
            }
            let mut next = u - fu / k;
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - u).abs() <= 2.0 * f64::EPSILON * u {
                return Ok(next);
            }
            u = next;
        }
        Ok(u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSphereState {
    pub t: f64,
    pub u: f64,
    pub radii: Vec<f64>,
    pub volume: f64,
    pub energy: f64,
}

impl MultiSphereState {
    pub fn initial(cfg: &RipeningConfig) -> Result<Self, SimulationError> {
        cfg.validate()?;
        let u = cfg.initial_temperature;
        Ok(Self { t: 0.0, u, energy: cfg.energy(u, &cfg.radii), radii: cfg.radii.clone(), volume: cfg.volume })
    }
}

/// V_i = (h(u) − σ/R_i)/γ(u) with u re-solved from the energy; the solved
/// temperature is written back into `state.u`.
pub fn reduced_rhs(state: &mut MultiSphereState, cfg: &RipeningConfig) -> Result<Vec<f64>, SimulationError> {
    let u = cfg.temperature_for(state.energy, &state.radii, state.u, state.t)?;
    state.u = u;
    let (h, g) = (cfg.model.h_raw(u), cfg.model.gamma_raw(u));
    Ok(state.radii.iter().map(|&r| (h - cfg.sigma / r) / g).collect())
}

/// Analytic Jacobian of the reduced model at equal radii R with h(u) = σ/R:
/// [(σ/R²)I − (h′(u) l(u) |Γ₁|/(κ|1)) 𝟙𝟙ᵀ]/γ(u).
pub fn reduced_jacobian(cfg: &RipeningConfig, u: f64, radius: f64, m: usize) -> DMatrix<f64> {
    let model = &cfg.model;
    let radii = vec![radius; m];
    let rank_one = model.h_prime_raw(u) * model.latent_raw(u) * sphere_area(cfg.dim, radius) / cfg.heat_capacity_integral(u, &radii);
    let diag = cfg.sigma / (radius * radius);
    DMatrix::from_fn(m, m, |i, j| (if i == j { diag } else { 0.0 } - rank_one) / model.gamma_raw(u))
}

/// Central finite-difference Jacobian of [`reduced_rhs`] at fixed energy.
pub fn reduced_jacobian_fd(cfg: &RipeningConfig, state: &MultiSphereState, step: f64) -> Result<DMatrix<f64>, SimulationError> {
    let m = state.radii.len();
    let mut jac = DMatrix::zeros(m, m);
    for j in 0..m {
        let eval = |delta: f64| {
            let mut s = state.clone();
            s.radii[j] += delta;
            reduced_rhs(&mut s, cfg)
        };
        let h = step * state.radii[j];
        let (plus, minus) = (eval(h)?, eval(-h)?);
        for i in 0..m {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Eigenvalues with positive real part, from a dense eigensolve.
pub fn positive_eigenvalue_count(matrix: &DMatrix<f64>, tol: f64) -> usize {
    matrix.complex_eigenvalues().iter().filter(|z| z.re > tol).count()
}

/// RK4 integration of the reduced model.
pub fn run_ripening(cfg: &RipeningConfig) -> Result<RipeningOutput, SimulationError> {
    let mut state = MultiSphereState::initial(cfg)?;
    reduced_rhs(&mut state, cfg)?;
    let sample = |s: &MultiSphereState| -> Result<Sample, SimulationError> {
        let mut probe = s.clone();
        let v = reduced_rhs(&mut probe, cfg)?;
        let g = cfg.model.gamma_raw(probe.u);
        let production: f64 =
            probe.radii.iter().zip(&v).map(|(&r, &vi)| sphere_area(cfg.dim, r) * g * vi * vi).sum::<f64>() / probe.u;
        Ok(Sample {
            t: s.t,
            fronts: s.radii.clone(),
            u_interface: probe.u,
            energy: cfg.energy(probe.u, &s.radii),
            entropy: cfg.entropy(probe.u, &s.radii),
            production,
            clearance: s.radii.iter().copied().fold(f64::INFINITY, f64::min),
        })
    };
    let mut samples = vec![sample(&state)?];
    let mut stop = StopReason::EndTime;
    let mut steps = 0;
    let mut phi_prev = samples[0].entropy;
    let mut min_increment = 0.0f64;
    let mut max_drift = 0.0f64;
    while state.t < cfg.t_end * (1.0 - 1e-14) {
        if steps >= cfg.max_steps {
            stop = StopReason::MaxSteps;
            break;
        }
        let dt = cfg.dt.min(cfg.t_end - state.t);
        let stage = |base: &MultiSphereState, k: &[f64], c: f64| -> Result<Vec<f64>, SimulationError> {
            let mut s = base.clone();
            for (r, ki) in s.radii.iter_mut().zip(k) {
                *r += c * dt * ki;
            }
            if s.radii.iter().any(|&r| !(r > 0.0)) {
                return Err(SimulationError::GeometryEvent { t: base.t, s: 0.0, kind: "sphere dissolved".into() });
            }
            reduced_rhs(&mut s, cfg)
        };
        let zero = vec![0.0; state.radii.len()];
        let advanced = (|| {
            let k1 = stage(&state, &zero, 0.0)?;
            let k2 = stage(&state, &k1, 0.5)?;
            let k3 = stage(&state, &k2, 0.5)?;
            let k4 = stage(&state, &k3, 1.0)?;
            Ok::<_, SimulationError>((k1, k2, k3, k4))
        })();
        let (k1, k2, k3, k4) = match advanced {
            Ok(k) => k,
            Err(e @ SimulationError::GeometryEvent { .. }) => {
                stop = StopReason::Event(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        for i in 0..state.radii.len() {
            state.radii[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        state.t += dt;
        steps += 1;
        if state.radii.iter().any(|&r| r < cfg.min_radius) {
            samples.push(sample(&state)?);
            stop = StopReason::Event(format!("sphere dissolved at t = {}", state.t));
            break;
        }
        let s = sample(&state)?;
        min_increment = min_increment.min(s.entropy - phi_prev);
        max_drift = max_drift.max(((s.energy - state.energy) / state.energy).abs());
        phi_prev = s.entropy;
        state.u = s.u_interface;
        if steps % cfg.sample_every.max(1) == 0 {
            samples.push(s);
        }
    }
    if samples.last().map(|s| s.t) != Some(state.t) {
        samples.push(sample(&state)?);
    }
    Ok(RipeningOutput {
        model: "reduced model: spatially uniform temperature, an approximation".into(),
        samples,
        stop,
        steps,
        max_energy_drift: max_drift,
        min_entropy_increment: min_increment,
        final_state: state,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RipeningOutput {
    pub model: String,
    #[serde(skip)]
    pub samples: Vec<Sample>,
    pub stop: StopReason,
    pub steps: usize,
    pub max_energy_drift: f64,
    pub min_entropy_increment: f64,
    pub final_state: MultiSphereState,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::Coefficient;
    use std::f64::consts::PI;

    fn fixture_model() -> FreeEnergyModel {
        FreeEnergyModel::equal_heat_capacity([1.0, 0.0], [0.0, 1.0], 1.0)
    }

    fn radial(s0: f64) -> RadialStefan {
        let mut cfg = RadialStefanConfig::new(fixture_model(), 1.0, 2, 3.0, s0);
        cfg.cells = [100, 100];
        RadialStefan::new(cfg).unwrap()
    }

    #[test]
    fn front_means_limits() {
        let (a, s) = front_means(2, 2.0, 2.0);
        assert!((a - 4.0 * PI).abs() < 1e-14 && s == 2.0);
        let (a, s) = front_means(3, 1.0, 1.0);
        assert!((a - 4.0 * PI).abs() < 1e-14 && (s - 1.0).abs() < 1e-15);
        // exactness of the surface energy increment in 3-D
        let (_, s_gt) = front_means(3, 1.0, 1.2);
        let (area, _) = front_means(3, 1.0, 1.2);
        let lhs = 4.0 * PI * (1.44 - 1.0) / 2.0;
        assert!((area * 0.2 / s_gt - lhs).abs() < 1e-13);
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let sim = radial(2.0);
        let mut state = sim.initial_state().unwrap();
        assert_eq!(state.u_interface, 1.5);
        for _ in 0..50 {
            state = sim.step_with(&state, 0.01).unwrap();
        }
        assert!((state.s - 2.0).abs() < 1e-12);
        assert!(state.u.iter().flatten().all(|&u| (u - 1.5).abs() < 1e-12));
        assert!(sim.entropy_production(&state).abs() < 1e-18);
    }

    #[test]
    fn energy_and_entropy_of_constant_state() {
        let sim = radial(2.0);
        let state = sim.initial_state().unwrap();
        assert!((sim.energy(&state) - 21.5 * PI).abs() < 1e-10);
        // η₁ = −ψ₁′ = ln u + 1, η₂ = ln u + 1 − 1
        let u: f64 = 1.5;
        let hand = 4.0 * PI * (u.ln() + 1.0) + 5.0 * PI * u.ln();
        assert!((sim.entropy(&state) - hand).abs() < 1e-10);
    }

    #[test]
    fn incompatible_start_is_rejected() {
        let mut cfg = radial(2.0).config;
        cfg.initial = InitialProfile::Constant(1.6);
        assert!(matches!(RadialStefan::new(cfg).unwrap().initial_state(), Err(SimulationError::InvalidConfig(_))));
    }

    #[test]
    fn energy_is_conserved_by_moving_steps() {
        let mut cfg = radial(2.02).config;
        let uc = 1.0 + 1.0 / 2.02;
        cfg.initial = InitialProfile::Function(Arc::new(move |r| uc + 0.05 * (r - 2.02)));
        let sim = RadialStefan::new(cfg).unwrap();
        let mut state = sim.initial_state().unwrap();
        let e0 = sim.energy(&state);
        for _ in 0..200 {
            state = sim.step_with(&state, 0.005).unwrap();
        }
        assert!((state.s - 2.02).abs() > 1e-5);
        assert!(((sim.energy(&state) - e0) / e0).abs() < 1e-12);
    }

    #[test]
    fn undercooled_steps_conserve_energy_and_produce_entropy() {
        let model = fixture_model().with_undercooling(Coefficient::Constant(0.5));
        let mut cfg = RadialStefanConfig::new(model, 1.0, 2, 3.0, 1.8);
        cfg.cells = [80, 80];
        cfg.initial = InitialProfile::Constant(1.5);
        let sim = RadialStefan::new(cfg).unwrap();
        let mut state = sim.initial_state().unwrap();
        let (e0, mut phi) = (sim.energy(&state), sim.entropy(&state));
        for _ in 0..100 {
            state = sim.step_with(&state, 0.01).unwrap();
            let next_phi = sim.entropy(&state);
            assert!(next_phi - phi > -1e-10);
            assert!(sim.entropy_production(&state) >= 0.0);
            phi = next_phi;
        }
        assert!(((sim.energy(&state) - e0) / e0).abs() < 1e-12);
    }

    #[test]
    fn three_dimensional_step_conserves_energy() {
        let mut cfg = RadialStefanConfig::new(fixture_model(), 1.0, 3, 3.0, 2.0);
        cfg.cells = [60, 60];
        cfg.initial = InitialProfile::Function(Arc::new(|r: f64| 1.5 + 0.05 * ((PI * r / 3.0).cos() - (PI * 2.0 / 3.0).cos())));
        let sim = RadialStefan::new(cfg).unwrap();
        let mut state = sim.initial_state().unwrap();
        let e0 = sim.energy(&state);
        for _ in 0..50 {
            state = sim.step_with(&state, 0.01).unwrap();
        }
        assert!(((sim.energy(&state) - e0) / e0).abs() < 1e-12);
    }

    fn ripening(u: f64, r: f64, m: usize, volume: f64) -> RipeningConfig {
        RipeningConfig {
            model: fixture_model().with_undercooling(Coefficient::Constant(1.0)),
            sigma: 1.0,
            dim: 2,
            volume,
            radii: vec![r; m],
            initial_temperature: u,
            dt: 0.01,
            t_end: 1.0,
            max_steps: 100_000,
            min_radius: 1e-3,
            sample_every: 1,
        }
    }

    #[test]
    fn equal_radii_at_gibbs_thomson_are_stationary() {
        let cfg = ripening(2.0, 1.0, 3, 40.0);
        let mut state = MultiSphereState::initial(&cfg).unwrap();
        let v = reduced_rhs(&mut state, &cfg).unwrap();
        assert!((state.u - 2.0).abs() < 1e-12);
        assert!(v.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn larger_sphere_grows() {
        let mut cfg = ripening(2.0, 1.0, 2, 40.0);
        cfg.radii = vec![1.01, 0.99];
        let mut state = MultiSphereState::initial(&cfg).unwrap();
        let v = reduced_rhs(&mut state, &cfg).unwrap();
        assert!(v[0] > 0.0 && v[1] < 0.0);
    }

    #[test]
    fn jacobian_counts_and_finite_differences() {
        // ζ for m spheres: σu(κ|1)/(l²R²m|Γ₁|) with κ ≡ 1
        for (volume, expect) in [(60.0, 2), (10.0, 1)] {
            let cfg = ripening(2.0, 1.0, 2, volume);
            let mut state = MultiSphereState::initial(&cfg).unwrap();
            reduced_rhs(&mut state, &cfg).unwrap();
            let zeta = 2.0 * volume / (4.0 * 2.0 * 2.0 * PI);
            let jac = reduced_jacobian(&cfg, 2.0, 1.0, 2);
            let fd = reduced_jacobian_fd(&cfg, &state, 1e-6).unwrap();
            assert!((&jac - &fd).norm() < 1e-6 * jac.norm(), "{jac} vs {fd}");
            assert_eq!(positive_eigenvalue_count(&jac, 1e-12), expect, "zeta = {zeta}");
        }
    }

    #[test]
    fn ripening_conserves_energy_and_entropy_grows() {
        let mut cfg = ripening(2.0, 1.0, 2, 40.0);
        cfg.radii = vec![1.05, 0.95];
        cfg.t_end = 5.0;
        let out = run_ripening(&cfg).unwrap();
        assert!(out.max_energy_drift < 1e-12);
        assert!(out.min_entropy_increment > -1e-12);
        let last = out.samples.last().unwrap();
        assert!(last.fronts[0] > 1.05 && last.fronts[1] < 0.95);
    }

    #[test]
    fn exponential_fit_recovers_rate() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        let fit = fit_exponential(&t, &y);
        assert!((fit.slope + 0.7).abs() < 1e-12 && fit.r_squared > 0.999_999);
    }
}

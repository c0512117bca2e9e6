//! Eigenvalues of the linearization at a spherical equilibrium.
//!
//! Concentric case: each spherical harmonic mode decouples into two radial
//! two-point problems, and the eigenvalues are the zeros of a scalar
//! determinant in λ. Several discs in 2-D: the temperature is eliminated
//! through a discrete Neumann-to-Dirichlet map N_λ, leaving the interface
//! operator B_λ = (l²/u)λN_λ + γλ − σA*, and positive eigenvalues show up as
//! λ-values where B_λ changes its number of negative eigenvalues.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibria::{ball_volume, sphere_area};
use crate::linalg::{solve_tridiagonal, BandedSpd};
use crate::thermo::{bisect, FreeEnergyModel, Phase};

/// Points per decade of the λ scan.
pub const POINTS_PER_DECADE: usize = 512;
/// Lower end of the λ scan.
pub const LAMBDA_MIN: f64 = 1e-6;
/// Probe rate for the kernel test.
pub const KERNEL_PROBE: f64 = 1e-10;
/// |D(probe)| ≤ this × scale counts as a root at λ = 0.
pub const KERNEL_TOL: f64 = 1e-6;
const LAMBDA_CAP: f64 = 1e10;
const MAX_RADIAL_NODES: usize = 400_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("invalid spectral configuration: {0}")]
    InvalidConfig(String),
}

/// A single sphere of radius R* inside the concentric ball of radius R_out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    pub dim: usize,
    pub r_star: f64,
    pub r_out: f64,
    pub temperature: f64,
    /// κ*₁, κ*₂.
    pub kappa: [f64; 2],
    /// d*₁, d*₂.
    pub conductivity: [f64; 2],
    pub latent: f64,
    pub gamma: f64,
    pub sigma: f64,
    /// Highest mode k (n = 2) or degree l (n = 3).
    pub max_mode: usize,
    /// Initial upper end Λ of the scan; extended while not sign-stable.
    #[serde(default = "default_lambda_max")]
    pub lambda_max: f64,
    /// Radial grid nodes of the coarse solve.
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Combine the N and 2N solves by Richardson extrapolation.
    #[serde(default = "default_true")]
    pub richardson: bool,
}

fn default_lambda_max() -> f64 {
    100.0
}
fn default_nodes() -> usize {
    500
}
fn default_true() -> bool {
    true
}

impl SpectralConfig {
    /// Coefficients frozen at temperature `u` of `model`.
    pub fn from_model(
        model: &FreeEnergyModel,
        dim: usize,
        sigma: f64,
        u: f64,
        r_star: f64,
        r_out: f64,
        max_mode: usize,
    ) -> Result<Self, SpectralError> {
        let th = |e: crate::thermo::ThermoError| SpectralError::InvalidConfig(e.to_string());
        let k1 = model.derived(Phase::One, u).map_err(th)?.kappa;
        let k2 = model.derived(Phase::Two, u).map_err(th)?.kappa;
        let cfg = Self {
            dim,
            r_star,
            r_out,
            temperature: u,
            kappa: [k1, k2],
            conductivity: [model.conductivity(Phase::One, u).map_err(th)?, model.conductivity(Phase::Two, u).map_err(th)?],
            latent: model.latent_l(u).map_err(th)?,
            gamma: model.undercooling(u).map_err(th)?,
            sigma,
            max_mode,
            lambda_max: default_lambda_max(),
            nodes: default_nodes(),
            richardson: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SpectralError> {
        let bad = |m: String| Err(SpectralError::InvalidConfig(m));
        if self.dim != 2 && self.dim != 3 {
            return bad(format!("dimension must be 2 or 3, got {}", self.dim));
        }
        if !(self.r_star > 0.0 && self.r_out > self.r_star && self.r_out.is_finite()) {
            return bad(format!("need 0 < R* < R_out, got R* = {}, R_out = {}", self.r_star, self.r_out));
        }
        if !(self.temperature > 0.0) {
            return bad("temperature must be positive".into());
        }
        if !self.kappa.iter().chain(&self.conductivity).all(|&x| x > 0.0 && x.is_finite()) {
            return bad("heat capacities and conductivities must be positive".into());
        }
        if !(self.gamma >= 0.0) || !(self.sigma > 0.0) || !self.latent.is_finite() {
            return bad("need gamma >= 0, sigma > 0 and finite latent heat".into());
        }
        if self.gamma == 0.0 && self.latent == 0.0 {
            return bad("latent heat vanishes without undercooling: the linearization is ill-posed".into());
        }
        if !(self.lambda_max > LAMBDA_MIN) || self.nodes < 16 {
            return bad("need lambda_max > 1e-6 and at least 16 radial nodes".into());
        }
        Ok(())
    }

    /// c with Δ_Σ eigenvalue −c/R*²: k² (n = 2) or l(l+1) (n = 3).
    pub fn mode_c(&self, mode: usize) -> f64 {
        let k = mode as f64;
        if self.dim == 2 {
            k * k
        } else {
            k * (k + 1.0)
        }
    }

    /// Number of independent harmonics in `mode`.
    pub fn multiplicity(&self, mode: usize) -> usize {
        match (self.dim, mode) {
            (_, 0) => 1,
            (2, _) => 2,
            _ => 2 * mode + 1,
        }
    }

    /// Eigenvalue of A* on `mode`: ((n−1) − c)/((n−1)R*²).
    pub fn a_mode(&self, mode: usize) -> f64 {
        let n1 = self.dim as f64 - 1.0;
        (n1 - self.mode_c(mode)) / (n1 * self.r_star * self.r_star)
    }

    /// (κ*|1)_Ω for the concentric geometry.
    pub fn heat_capacity_integral(&self) -> f64 {
        let inner = ball_volume(self.dim, self.r_star);
        self.kappa[0] * inner + self.kappa[1] * (ball_volume(self.dim, self.r_out) - inner)
    }

    /// ζ* of the concentric configuration.
    pub fn zeta(&self) -> f64 {
        let area = sphere_area(self.dim, self.r_star);
        crate::equilibria::zeta_from_parts(
            self.sigma,
            self.temperature,
            self.heat_capacity_integral(),
            self.latent,
            self.r_star,
            area,
        )
    }

    /// Magnitude of the determinant at λ = 1, used to judge "small".
    pub fn determinant_scale(&self) -> f64 {
        let (d1, d2) = (self.conductivity[0], self.conductivity[1]);
        self.latent * self.latent + self.sigma * self.temperature * (d1 + d2) / self.r_star.powi(3)
    }
}

/// Interface flux densities d₁v₁′(R*) and d₂v₂′(R*) for v(R*) = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialFluxes {
    pub inner: f64,
    pub outer: f64,
    /// |coarse − fine| of the jump d₂w₂ − d₁w₁ before extrapolation.
    pub error_estimate: f64,
}

/// Node count resolving the boundary layer √(d/κλ) with ≥ 20 cells.
fn node_count(base: usize, length: f64, kappa: f64, d: f64, lambda: f64) -> usize {
    let layer = (d / (kappa * lambda.max(1e-300))).sqrt();
    let needed = (20.0 * length / layer).ceil();
    (base as f64).max(needed).min(MAX_RADIAL_NODES as f64) as usize
}

/// Finite-volume solve of κλv − d(v″ + (n−1)v′/r − c v/r²) = 0 with
/// radial weights r^{n−1}, returning d·v′(R*) from the half-cell balance.
fn radial_flux(cfg: &SpectralConfig, lambda: f64, c: f64, inner: bool, nodes: usize) -> Result<f64, SpectralError> {
    let n = cfg.dim as i32;
    let nf = cfg.dim as f64;
    let (k, d) = if inner { (cfg.kappa[0], cfg.conductivity[0]) } else { (cfg.kappa[1], cfg.conductivity[1]) };
    let (r0, r1) = if inner { (0.0, cfg.r_star) } else { (cfg.r_star, cfg.r_out) };
    let h = (r1 - r0) / nodes as f64;
    let r = |i: f64| r0 + i * h;
    let vol = |a: f64, b: f64| (b.powi(n) - a.powi(n)) / nf;
    // ∫ r^{n−3} dr
    let sing = |a: f64, b: f64| if cfg.dim == 2 { (b / a).ln() } else { b - a };
    let face = |rf: f64| d * rf.powi(n - 1) / h;
    let mass = |a: f64, b: f64| k * lambda * vol(a, b) + if c > 0.0 { d * c * sing(a, b) } else { 0.0 };

    let size = nodes + 1;
    let (mut lo, mut di, mut up, mut rhs) = (vec![0.0; size], vec![0.0; size], vec![0.0; size], vec![0.0; size]);
    for i in 0..size {
        let fi = i as f64;
        if (inner && i == nodes) || (!inner && i == 0) {
            di[i] = 1.0;
            rhs[i] = 1.0;
            continue;
        }
        if inner && i == 0 {
            if c > 0.0 {
                di[0] = 1.0;
            } else {
                let f = face(r(0.5));
                di[0] = mass(0.0, r(0.5)) + f;
                up[0] = -f;
            }
            continue;
        }
        let (a, b) = (r(fi - 0.5), if i == nodes { r1 } else { r(fi + 0.5) });
        let fl = face(a);
        let fr = if i == nodes { 0.0 } else { face(b) };
        di[i] = mass(a, b) + fl + fr;
        lo[i] = -fl;
        if i < nodes {
            up[i] = -fr;
        }
    }
    let mut v = rhs;
    solve_tridiagonal(&lo, &di, &up, &mut v)
        .ok_or_else(|| SpectralError::NumericalBreakdown(format!("radial solve failed at lambda = {lambda}, c = {c}")))?;
    let rn1 = cfg.r_star.powi(n - 1);
    let flux = if inner {
        let a = r(nodes as f64 - 0.5);
        face(a) * (v[nodes] - v[nodes - 1]) + mass(a, r1) * v[nodes]
    } else {
        let b = r(0.5);
        face(b) * (v[1] - v[0]) - mass(r0, b) * v[0]
    };
    if !flux.is_finite() {
        return Err(SpectralError::NumericalBreakdown(format!("non-finite flux at lambda = {lambda}, c = {c}")));
    }
    Ok(flux / rn1)
}

/// Interface fluxes for `mode` at rate λ ≥ 0.
pub fn radial_fluxes(cfg: &SpectralConfig, lambda: f64, mode: usize) -> Result<RadialFluxes, SpectralError> {
    let c = cfg.mode_c(mode);
    let n_in = node_count(cfg.nodes, cfg.r_star, cfg.kappa[0], cfg.conductivity[0], lambda);
    let n_out = node_count(cfg.nodes, cfg.r_out - cfg.r_star, cfg.kappa[1], cfg.conductivity[1], lambda);
    let coarse = (radial_flux(cfg, lambda, c, true, n_in)?, radial_flux(cfg, lambda, c, false, n_out)?);
    if !cfg.richardson {
        return Ok(RadialFluxes { inner: coarse.0, outer: coarse.1, error_estimate: f64::NAN });
    }
    let fine = (radial_flux(cfg, lambda, c, true, 2 * n_in)?, radial_flux(cfg, lambda, c, false, 2 * n_out)?);
    let extrapolate = |a: f64, b: f64| (4.0 * b - a) / 3.0;
    Ok(RadialFluxes {
        inner: extrapolate(coarse.0, fine.0),
        outer: extrapolate(coarse.1, fine.1),
        error_estimate: ((fine.1 - fine.0) - (coarse.1 - coarse.0)).abs(),
    })
}

/// l*·D(λ, mode) = l*²λ − (γ*λ − σa_mode) u* (d*₂w₂ − d*₁w₁).
///
/// This is the compatibility determinant of the Gibbs–Thomson and Stefan
/// rows multiplied by l*, which keeps it finite when l* = 0 and makes it
/// positive for large λ whatever the sign of l*.
pub fn mode_determinant(cfg: &SpectralConfig, lambda: f64, mode: usize) -> Result<f64, SpectralError> {
    if !(lambda >= 0.0) || mode > cfg.max_mode {
        return Err(SpectralError::InvalidConfig(format!("lambda = {lambda} or mode {mode} outside the scan")));
    }
    let f = radial_fluxes(cfg, lambda, mode)?;
    let l = cfg.latent;
    Ok(l * l * lambda - (cfg.gamma * lambda - cfg.sigma * cfg.a_mode(mode)) * cfg.temperature * (f.outer - f.inner))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocatedRoot {
    pub lambda: f64,
    pub bracket: (f64, f64),
    /// Determinant values at the bracket ends.
    pub values: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeResult {
    pub mode: usize,
    pub multiplicity: usize,
    pub a_mode: f64,
    pub roots: Vec<LocatedRoot>,
    /// Local minima of |D| without a sign change, too small to rule out a
    /// pair of close roots.
    pub suspect: Vec<(f64, f64)>,
    pub kernel: bool,
    pub value_at_probe: f64,
    #[serde(skip)]
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionResult {
    pub modes: Vec<ModeResult>,
    pub kernel_modes: Vec<usize>,
    pub kernel_dimension: usize,
    pub positive_count: usize,
    pub lambda_max: f64,
    /// First mode with a_mode < 0.
    pub cutoff_mode: usize,
    /// Every mode from the cutoff on has no roots and no suspects.
    pub cutoff_verified: bool,
    pub determinant_scale: f64,
    #[serde(with = "crate::report::extended_f64")]
    pub zeta: f64,
}

impl DispersionResult {
    pub fn suspect_count(&self) -> usize {
        self.modes.iter().map(|m| m.suspect.len()).sum()
    }

    /// `lambda,mode,D` rows of every scanned sample.
    pub fn samples_csv(&self) -> String {
        let rows: Vec<Vec<f64>> = self
            .modes
            .iter()
            .flat_map(|m| m.samples.iter().map(move |&(l, d)| vec![l, m.mode as f64, d]))
            .collect();
        crate::report::to_csv(&["lambda", "mode", "D"], &rows)
    }
}

/// Geometric grid with `per_decade` points per decade on [lo, hi].
pub fn geometric_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let count = (decades * per_decade as f64).ceil() as usize;
    (0..=count).map(|i| lo * (hi / lo).powf(i as f64 / count as f64)).collect()
}

/// Per-mode bracketing scan with bisection, kernel detection, and the
/// cutoff check. Λ grows tenfold until every mode's determinant keeps its
/// large-λ sign over the final decade.
pub fn count_positive_eigenvalues(cfg: &SpectralConfig) -> Result<DispersionResult, SpectralError> {
    cfg.validate()?;
    let scale = cfg.determinant_scale();
    let modes: Vec<usize> = (0..=cfg.max_mode).collect();
    let mut lambda_max = cfg.lambda_max;
    let (grid, samples) = loop {
        let grid = geometric_grid(LAMBDA_MIN, lambda_max, POINTS_PER_DECADE);
        let samples: Vec<Vec<(f64, f64)>> = modes
            .par_iter()
            .map(|&mode| {
                grid.par_iter().map(|&l| mode_determinant(cfg, l, mode).map(|d| (l, d))).collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let tail_start = lambda_max / 10.0;
        let stable = samples.iter().all(|s| s.iter().filter(|(l, _)| *l >= tail_start).all(|(_, d)| *d > 0.0));
        if stable {
            break (grid, samples);
        }
        if lambda_max >= LAMBDA_CAP {
            return Err(SpectralError::NumericalBreakdown(format!(
                "determinant not sign-stable below lambda = {LAMBDA_CAP}"
            )));
        }
        lambda_max *= 10.0;
    };
    debug_assert_eq!(grid.len(), samples[0].len());

    let mut results = Vec::with_capacity(modes.len());
    for (&mode, s) in modes.iter().zip(samples) {
        let mut roots = Vec::new();
        let mut suspect = Vec::new();
        for w in s.windows(2) {
            let ((a, fa), (b, fb)) = (w[0], w[1]);
            if fa == 0.0 || fa.signum() != fb.signum() {
                let root = if fa == 0.0 {
                    a
                } else {
                    bisect(|l| mode_determinant(cfg, l, mode).unwrap_or(f64::NAN), a, b, fa, 1e-10)
                };
                roots.push(LocatedRoot { lambda: root, bracket: (a, b), values: (fa, fb) });
            }
        }
        for w in s.windows(3) {
            let (m0, m1, m2) = (w[0].1.abs(), w[1].1.abs(), w[2].1.abs());
            let same_sign = w[0].1.signum() == w[1].1.signum() && w[1].1.signum() == w[2].1.signum();
            if same_sign && m1 < m0 && m1 < m2 && m1 <= 1e-2 * m0.max(m2) {
                suspect.push((w[0].0, w[2].0));
            }
        }
        let probe = mode_determinant(cfg, KERNEL_PROBE, mode)?;
        results.push(ModeResult {
            mode,
            multiplicity: cfg.multiplicity(mode),
            a_mode: cfg.a_mode(mode),
            roots,
            suspect,
            kernel: probe.abs() <= KERNEL_TOL * scale,
            value_at_probe: probe,
            samples: s,
        });
    }
    let cutoff_mode = (0..).find(|&m| cfg.a_mode(m) < 0.0).unwrap_or(usize::MAX);
    let cutoff_verified =
        results.iter().filter(|m| m.mode >= cutoff_mode).all(|m| m.roots.is_empty() && m.suspect.is_empty());
    let kernel_modes: Vec<usize> = results.iter().filter(|m| m.kernel).map(|m| m.mode).collect();
    Ok(DispersionResult {
        kernel_dimension: kernel_modes.iter().map(|&m| cfg.multiplicity(m)).sum(),
        kernel_modes,
        positive_count: results.iter().map(|m| m.roots.len() * m.multiplicity).sum(),
        modes: results,
        lambda_max,
        cutoff_mode,
        cutoff_verified,
        determinant_scale: scale,
        zeta: cfg.zeta(),
    })
}

/// m equal discs in the rectangle [0, W] × [0, H], phase 1 inside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiDiscConfig {
    pub width: f64,
    pub height: f64,
    pub centers: Vec<[f64; 2]>,
    pub radius: f64,
    /// Cells along x; the cell size is width/grid.
    pub grid: usize,
    /// Quadrature points per circle.
    pub quadrature: usize,
    pub temperature: f64,
    pub kappa: [f64; 2],
    pub conductivity: [f64; 2],
    pub latent: f64,
    pub gamma: f64,
    pub sigma: f64,
}

impl MultiDiscConfig {
    pub fn cell_size(&self) -> f64 {
        self.width / self.grid as f64
    }

    pub fn shape(&self) -> (usize, usize) {
        let h = self.cell_size();
        (self.grid, (self.height / h).round() as usize)
    }

    pub fn validate(&self) -> Result<(), SpectralError> {
        let bad = |m: String| Err(SpectralError::InvalidConfig(m));
        if self.centers.is_empty() {
            return bad("at least one disc is required".into());
        }
        if !(self.width > 0.0 && self.height > 0.0 && self.radius > 0.0) {
            return bad("width, height and radius must be positive".into());
        }
        let h = self.cell_size();
        if ((self.height / h).round() * h - self.height).abs() > 1e-9 * self.height {
            return bad("height must be a whole number of cells".into());
        }
        if h > self.radius / 10.0 {
            return bad(format!("cell size {h} does not resolve R*/10 = {}", self.radius / 10.0));
        }
        if self.quadrature < 8 || self.quadrature % 2 != 0 {
            return bad("quadrature size must be even and at least 8".into());
        }
        for (i, c) in self.centers.iter().enumerate() {
            let clearance = (c[0] - self.radius).min(self.width - c[0] - self.radius).min(c[1] - self.radius).min(
                self.height - c[1] - self.radius,
            );
            if clearance < h {
                return bad(format!("disc {i} is not strictly interior"));
            }
            for (j, e) in self.centers.iter().enumerate().skip(i + 1) {
                let dist = ((c[0] - e[0]).powi(2) + (c[1] - e[1]).powi(2)).sqrt();
                if dist <= 2.0 * self.radius + h {
                    return bad(format!("discs {i} and {j} overlap"));
                }
            }
        }
        if !self.kappa.iter().chain(&self.conductivity).all(|&x| x > 0.0) || !(self.sigma > 0.0) || self.gamma < 0.0 {
            return bad("need positive kappa, d, sigma and gamma >= 0".into());
        }
        if !(self.temperature > 0.0) {
            return bad("temperature must be positive".into());
        }
        Ok(())
    }

    fn inside(&self, x: f64, y: f64) -> bool {
        self.centers.iter().any(|c| (x - c[0]).powi(2) + (y - c[1]).powi(2) < self.radius * self.radius)
    }

    /// Quadrature nodes (x, y) and trapezoid weights 2πR/M, circle by circle.
    pub fn interface_points(&self) -> (Vec<[f64; 2]>, Vec<f64>) {
        let m = self.quadrature;
        let mut pts = Vec::with_capacity(m * self.centers.len());
        for c in &self.centers {
            for q in 0..m {
                let t = 2.0 * PI * q as f64 / m as f64;
                pts.push([c[0] + self.radius * t.cos(), c[1] + self.radius * t.sin()]);
            }
        }
        let w = vec![2.0 * PI * self.radius / m as f64; pts.len()];
        (pts, w)
    }

    /// |Γ*| = 2πR*·m.
    pub fn interface_measure(&self) -> f64 {
        2.0 * PI * self.radius * self.centers.len() as f64
    }

    /// Discrete (κ*|1)_Ω over the cell partition.
    pub fn heat_capacity_integral(&self) -> f64 {
        let (nx, ny) = self.shape();
        let h = self.cell_size();
        let mut total = 0.0;
        for j in 0..ny {
            for i in 0..nx {
                let (x, y) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                total += if self.inside(x, y) { self.kappa[0] } else { self.kappa[1] } * h * h;
            }
        }
        total
    }

    /// ζ* with the continuous areas.
    pub fn zeta(&self) -> f64 {
        let m = self.centers.len() as f64;
        let disc = PI * self.radius * self.radius * m;
        let kappa_int = self.kappa[0] * disc + self.kappa[1] * (self.width * self.height - disc);
        crate::equilibria::zeta_from_parts(
            self.sigma,
            self.temperature,
            kappa_int,
            self.latent,
            self.radius,
            self.interface_measure(),
        )
    }
}

/// Discrete N_λ on the interface quadrature nodes.
#[derive(Debug, Clone)]
pub struct NtdMatrix {
    pub lambda: f64,
    pub weights: Vec<f64>,
    /// W N, symmetric up to rounding.
    pub weighted: DMatrix<f64>,
}

impl NtdMatrix {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// N = W⁻¹ (W N).
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut n = self.weighted.clone();
        for (i, w) in self.weights.iter().enumerate() {
            n.row_mut(i).scale_mut(1.0 / w);
        }
        n
    }

    /// W^{−1/2} (W N) W^{−1/2}, whose spectrum is that of N.
    pub fn symmetric_form(&self) -> DMatrix<f64> {
        let s: Vec<f64> = self.weights.iter().map(|w| 1.0 / w.sqrt()).collect();
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| s[i] * self.weighted[(i, j)] * s[j])
    }

    /// ‖WN − (WN)ᵀ‖_F / ‖WN‖_F.
    pub fn symmetry_defect(&self) -> f64 {
        let a = &self.weighted;
        (a - a.transpose()).norm() / a.norm()
    }

    /// Operator norm of N in the weighted inner product.
    pub fn norm(&self) -> f64 {
        let s = self.symmetric_form();
        let sym = (&s + s.transpose()) * 0.5;
        sym.symmetric_eigenvalues().iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    /// Smallest eigenvalue of N in the weighted inner product.
    pub fn min_eigenvalue(&self) -> f64 {
        let s = self.symmetric_form();
        let sym = (&s + s.transpose()) * 0.5;
        sym.symmetric_eigenvalues().min()
    }

    /// (N g | g) in the weighted inner product, = gᵀ (WN) g.
    pub fn quadratic_form(&self, g: &[f64]) -> f64 {
        let v = nalgebra::DVector::from_column_slice(g);
        v.dot(&(&self.weighted * &v))
    }
}

/// Bilinear spreading weights of each quadrature node on cell centres.
fn spreading(cfg: &MultiDiscConfig, pts: &[[f64; 2]]) -> Vec<[(usize, f64); 4]> {
    let (nx, _) = cfg.shape();
    let h = cfg.cell_size();
    pts.iter()
        .map(|p| {
            let (fx, fy) = (p[0] / h - 0.5, p[1] / h - 0.5);
            let (i0, j0) = (fx.floor() as usize, fy.floor() as usize);
            let (tx, ty) = (fx - i0 as f64, fy - j0 as f64);
            let id = |i: usize, j: usize| j * nx + i;
            [
                (id(i0, j0), (1.0 - tx) * (1.0 - ty)),
                (id(i0 + 1, j0), tx * (1.0 - ty)),
                (id(i0, j0 + 1), (1.0 - tx) * ty),
                (id(i0 + 1, j0 + 1), tx * ty),
            ]
        })
        .collect()
}

/// Cell-centred five-point matrix of κλ − ∇·(d∇) with Neumann walls,
/// integrated over cells (so the mass term carries h²). Face conductivities
/// are harmonic means; when `pin` a unit grounding is added at cell 0.
fn assemble(cfg: &MultiDiscConfig, lambda: f64, pin: bool) -> (BandedSpd, Vec<f64>) {
    let (nx, ny) = cfg.shape();
    let h = cfg.cell_size();
    let n = nx * ny;
    let mut kap = vec![0.0; n];
    let mut dif = vec![0.0; n];
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            let phase = if cfg.inside(x, y) { 0 } else { 1 };
            kap[j * nx + i] = cfg.kappa[phase] * h * h;
            dif[j * nx + i] = cfg.conductivity[phase];
        }
    }
    let mut a = BandedSpd::zeros(n, nx);
    for p in 0..n {
        a.add(p, p, kap[p] * lambda);
        let (i, j) = (p % nx, p / nx);
        let mut link = |q: usize| {
            let df = 2.0 * dif[p] * dif[q] / (dif[p] + dif[q]);
            a.add(p, p, df);
            a.add(q, q, df);
            a.add(q, p, -df);
        };
        if i + 1 < nx {
            link(p + 1);
        }
        if j + 1 < ny {
            link(p + nx);
        }
    }
    if pin {
        a.add(0, 0, 1.0);
    }
    (a, kap)
}

/// Discrete Neumann-to-Dirichlet map: interface flux data g at the
/// quadrature nodes → trace of v solving (κλ − ∇·d∇)v = g δ_Γ with Neumann
/// walls. For λ = 0 the data are projected to mean zero and v is fixed by
/// (κ|v) = 0.
pub fn ntd_matrix(cfg: &MultiDiscConfig, lambda: f64) -> Result<NtdMatrix, SpectralError> {
    cfg.validate()?;
    if !(lambda >= 0.0) {
        return Err(SpectralError::InvalidConfig(format!("lambda = {lambda} must be nonnegative")));
    }
    let (pts, w) = cfg.interface_points();
    let spread = spreading(cfg, &pts);
    let zero = lambda == 0.0;
    let (mut a, kap) = assemble(cfg, lambda, zero);
    a.factor().map_err(|row| SpectralError::NumericalBreakdown(format!("Cholesky failed at row {row}, lambda = {lambda}")))?;
    let np = pts.len();
    let total_w: f64 = w.iter().sum();
    let total_k: f64 = kap.iter().sum();
    let columns: Vec<Vec<f64>> = (0..np)
        .into_par_iter()
        .map(|q| {
            // data e_q, projected to mean zero when λ = 0
            let mut g = vec![0.0; np];
            g[q] = 1.0;
            if zero {
                let mean = w[q] / total_w;
                g.iter_mut().for_each(|x| *x -= mean);
            }
            let mut b = vec![0.0; a.dim()];
            for (r, gr) in g.iter().enumerate() {
                if *gr != 0.0 {
                    for &(cell, s) in &spread[r] {
                        b[cell] += s * w[r] * gr;
                    }
                }
            }
            a.solve_in_place(&mut b);
            if zero {
                let mean = b.iter().zip(&kap).map(|(v, k)| v * k).sum::<f64>() / total_k;
                b.iter_mut().for_each(|v| *v -= mean);
            }
            // weighted trace: w_r · (Sᵀ v)_r
            (0..np).map(|r| w[r] * spread[r].iter().map(|&(cell, s)| s * b[cell]).sum::<f64>()).collect()
        })
        .collect();
    let weighted = DMatrix::from_fn(np, np, |r, q| columns[q][r]);
    if !weighted.iter().all(|x| x.is_finite()) {
        return Err(SpectralError::NumericalBreakdown(format!("non-finite N_lambda at lambda = {lambda}")));
    }
    Ok(NtdMatrix { lambda, weights: w, weighted })
}

/// Fourier realization of A* on one circle of M equispaced nodes: the
/// multiplier (1 − k²)/R² on the k-th mode.
pub fn circle_a_star(m: usize, radius: f64) -> DMatrix<f64> {
    let a = |k: usize| (1.0 - (k * k) as f64) / (radius * radius);
    let half = m / 2;
    DMatrix::from_fn(m, m, |q, r| {
        let dt = 2.0 * PI * (q as f64 - r as f64) / m as f64;
        let mut s = a(0);
        for k in 1..half {
            s += 2.0 * a(k) * (k as f64 * dt).cos();
        }
        s += a(half) * (half as f64 * dt).cos();
        s / m as f64
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BSpectrum {
    pub lambda: f64,
    pub eigenvalues: Vec<f64>,
    pub negative_count: usize,
}

impl BSpectrum {
    pub fn smallest(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }
}

/// Spectrum of the discretized B_λ = (l²/u)λN_λ + γλ − σA*, in the weighted
/// inner product, sorted ascending.
pub fn b_lambda_spectrum(cfg: &MultiDiscConfig, lambda: f64) -> Result<BSpectrum, SpectralError> {
    if !(lambda > 0.0) {
        return Err(SpectralError::InvalidConfig(format!("B_lambda needs lambda > 0, got {lambda}")));
    }
    let ntd = ntd_matrix(cfg, lambda)?;
    let defect = ntd.symmetry_defect();
    if defect > 1e-8 {
        return Err(SpectralError::NumericalBreakdown(format!("N_lambda asymmetric by {defect:e}")));
    }
    let mut b = ntd.symmetric_form() * (cfg.latent * cfg.latent / cfg.temperature * lambda);
    let m = cfg.quadrature;
    let astar = circle_a_star(m, cfg.radius);
    for k in 0..cfg.centers.len() {
        let mut block = b.view_mut((k * m, k * m), (m, m));
        block -= &astar * cfg.sigma;
    }
    for i in 0..b.nrows() {
        b[(i, i)] += cfg.gamma * lambda;
    }
    let sym = (&b + b.transpose()) * 0.5;
    let mut eig: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    eig.sort_by(|x, y| x.total_cmp(y));
    let tol = 1e-10 * eig.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let negative_count = eig.iter().filter(|&&e| e < -tol).count();
    Ok(BSpectrum { lambda, eigenvalues: eig, negative_count })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BScan {
    /// (λ, smallest eigenvalue, negative count) per scanned rate.
    pub samples: Vec<(f64, f64, usize)>,
    /// Total change of the negative count across the scan.
    pub crossings: usize,
    pub lambda_max: f64,
}

/// Scans B_λ over a geometric grid from `lo` upward, extending the top by
/// decades until no negative eigenvalue remains over a whole decade.
pub fn b_lambda_scan(cfg: &MultiDiscConfig, lo: f64, per_decade: usize) -> Result<BScan, SpectralError> {
    cfg.validate()?;
    let mut hi = lo * 1e4;
    let mut samples: Vec<(f64, f64, usize)> = Vec::new();
    let mut start = lo;
    loop {
        let grid = geometric_grid(start, hi, per_decade);
        let skip = usize::from(!samples.is_empty());
        let fresh: Vec<(f64, f64, usize)> = grid[skip..]
            .par_iter()
            .map(|&l| b_lambda_spectrum(cfg, l).map(|s| (l, s.smallest(), s.negative_count)))
            .collect::<Result<_, _>>()?;
        samples.extend(fresh);
        let settled = samples.iter().filter(|s| s.0 >= hi / 10.0).all(|s| s.2 == 0);
        if settled {
            break;
        }
        if hi >= LAMBDA_CAP {
            return Err(SpectralError::NumericalBreakdown("B_lambda not positive below the scan cap".into()));
        }
        start = hi;
        hi *= 10.0;
    }
    let crossings = samples.windows(2).map(|w| w[0].2.abs_diff(w[1].2)).sum();
    Ok(BScan { samples, crossings, lambda_max: hi })
}

//! Height-function geometry over a reference sphere Σ = S_R.
//!
//! A perturbed interface is Γ = {p + ρ(p) ν_Σ(p)} with ρ a [`HeightField`]
//! given by modal coefficients: Fourier modes on the circle (n = 2) or real
//! spherical harmonics (n = 3). Grid values and derivatives are evaluated
//! from the modes, so differentiation is exact up to rounding.
//!
//! Sign convention: ν is the outer normal of the enclosed ball, L_Σ = −∇_Σ ν
//! and (n−1)ℋ = tr L, so a ball of radius R has ℋ = −1/R.

use std::f64::consts::PI;
use std::fmt::Write as _;

use thiserror::Error;

/// Largest admissible surface gradient of a height function.
pub const MAX_SLOPE: f64 = 0.125;
/// Default spherical harmonic degree cap.
pub const DEFAULT_DEGREE: usize = 16;
const MIN_CIRCLE_GRID: usize = 256;
const MIN_SPHERE_GRID: usize = 48;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("height function too large: |rho|_inf = {sup} (limit {limit}), |grad rho|_inf = {slope} (limit {MAX_SLOPE})")]
    PerturbationTooLarge { sup: f64, slope: f64, limit: f64 },
    #[error("height field of dimension {field} used with a chart of dimension {chart}")]
    DimensionMismatch { field: usize, chart: usize },
    #[error("invalid chart: {0}")]
    InvalidChart(String),
}

/// Reference sphere with its tubular half-width a = R/2.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereChart {
    pub dim: usize,
    pub radius: f64,
    pub center: Vec<f64>,
    pub half_width: f64,
}

/// Principal curvatures of the reference sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct Weingarten {
    pub principal: Vec<f64>,
    pub trace: f64,
    pub norm: f64,
}

impl Weingarten {
    pub fn mean_curvature(&self) -> f64 {
        self.trace / self.principal.len() as f64
    }
}

impl SphereChart {
    pub fn new(dim: usize, radius: f64) -> Result<Self, GeometryError> {
        if dim != 2 && dim != 3 {
            return Err(GeometryError::InvalidChart(format!("dimension {dim} not supported")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::InvalidChart(format!("radius {radius} must be positive")));
        }
        // for a sphere the ball-condition radius and 1/|κ_j| both equal R
        Ok(Self { dim, radius, center: vec![0.0; dim], half_width: 0.5 * radius })
    }

    pub fn with_center(mut self, center: Vec<f64>) -> Self {
        assert_eq!(center.len(), self.dim);
        self.center = center;
        self
    }

    /// L_Σ = −P_Σ/R: all n−1 principal curvatures equal −1/R.
    pub fn weingarten(&self) -> Weingarten {
        let k = -1.0 / self.radius;
        Weingarten { principal: vec![k; self.dim - 1], trace: k * (self.dim - 1) as f64, norm: 1.0 / self.radius }
    }

    fn check_dim(&self, rho: &HeightField) -> Result<(), GeometryError> {
        if rho.dim() != self.dim {
            return Err(GeometryError::DimensionMismatch { field: rho.dim(), chart: self.dim });
        }
        Ok(())
    }

    fn check_small(&self, g: &GridData) -> Result<(), GeometryError> {
        let sup = g.f.iter().map(|f| (f - self.radius).abs()).fold(0.0, f64::max);
        let slope = (0..g.f.len()).map(|i| g.surface_gradient_norm(i, self.radius)).fold(0.0, f64::max);
        if sup > self.half_width || slope > MAX_SLOPE {
            return Err(GeometryError::PerturbationTooLarge { sup, slope, limit: self.half_width });
        }
        Ok(())
    }

    /// ℋ(ρ) on the evaluation grid.
    ///
    /// For n = 2 this evaluates α = M₀∇_Σρ, β = (1+|α|²)^{−1/2} and
    /// ℋ = β{tr[M₀(L_Σ + ∇_Σα)] − β²(M₀α | [∇_Σα]α)} along the circle. For
    /// n = 3 it uses the first and second fundamental forms of the radial
    /// graph r = R + ρ(θ, φ), which is the same quantity.
    pub fn mean_curvature(&self, rho: &HeightField) -> Result<Vec<f64>, GeometryError> {
        self.check_dim(rho)?;
        let g = rho.grid_data(self.radius);
        self.check_small(&g)?;
        Ok(match self.dim {
            2 => (0..g.f.len()).map(|i| circle_curvature(&g, i, self.radius)).collect(),
            _ => (0..g.f.len()).map(|i| sphere_curvature(&g, i)).collect(),
        })
    }

    /// ℋ′(0)ρ = ρ/R² + Δ_Σρ/(n−1), applied mode by mode.
    pub fn linearized_curvature(&self, rho: &HeightField) -> Result<HeightField, GeometryError> {
        self.check_dim(rho)?;
        Ok(rho.map_modes(|c| linearized_multiplier(self.dim, self.radius, c)))
    }

    /// Multiplier of ℋ′(0) on a mode whose Δ_Σ eigenvalue is −c/R².
    pub fn linearized_eigenvalue(&self, c: f64) -> f64 {
        linearized_multiplier(self.dim, self.radius, c)
    }

    /// β(ρ) on the evaluation grid.
    pub fn beta(&self, rho: &HeightField) -> Result<Vec<f64>, GeometryError> {
        self.check_dim(rho)?;
        let g = rho.grid_data(self.radius);
        self.check_small(&g)?;
        Ok((0..g.f.len()).map(|i| g.beta(i, self.radius)).collect())
    }

    /// V = β(ρ) ∂_tρ on the evaluation grid.
    pub fn normal_velocity(&self, rho: &HeightField, rho_t: &HeightField) -> Result<Vec<f64>, GeometryError> {
        let beta = self.beta(rho)?;
        let rt = rho_t.grid_values();
        if rt.len() != beta.len() {
            return Err(GeometryError::InvalidChart("rho and rho_t use different grids".into()));
        }
        Ok(beta.iter().zip(&rt).map(|(b, v)| b * v).collect())
    }

    /// Surface measure of Γ and the volume it encloses.
    pub fn surface_measure_and_volume(&self, rho: &HeightField) -> Result<(f64, f64), GeometryError> {
        self.check_dim(rho)?;
        let g = rho.grid_data(self.radius);
        self.check_small(&g)?;
        Ok(match self.dim {
            2 => {
                let w = 2.0 * PI / g.f.len() as f64;
                let area = g.f.iter().zip(&g.ft).map(|(f, ft)| (f * f + ft * ft).sqrt()).sum::<f64>() * w;
                let vol = g.f.iter().map(|f| 0.5 * f * f).sum::<f64>() * w;
                (area, vol)
            }
            _ => {
                let (nt, np) = (g.shape.0, g.shape.1);
                let weights = fejer_weights(nt);
                let dphi = 2.0 * PI / np as f64;
                let (mut area, mut vol) = (0.0, 0.0);
                for (j, wj) in weights.iter().enumerate() {
                    let st = g.theta[j].sin();
                    for k in 0..np {
                        let i = j * np + k;
                        let f = g.f[i];
                        let (xt, xp) = parametric_tangents(&g, i);
                        area += wj * norm3(cross(xt, xp)) / st * dphi;
                        vol += wj * f * f * f / 3.0 * dphi;
                    }
                }
                (area, vol)
            }
        })
    }

    /// CSV dump of the height function and its mean curvature on the grid:
    /// `angle,rho,H` for n = 2, `theta,phi,rho,H` for n = 3.
    pub fn curvature_csv(&self, rho: &HeightField) -> Result<String, GeometryError> {
        let h = self.mean_curvature(rho)?;
        let g = rho.grid_data(self.radius);
        let mut out = String::new();
        if self.dim == 2 {
            out.push_str("angle,rho,H\n");
            for (i, hv) in h.iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", g.theta[i], g.f[i] - self.radius, hv);
            }
        } else {
            out.push_str("theta,phi,rho,H\n");
            let np = g.shape.1;
            for (i, hv) in h.iter().enumerate() {
                let (j, k) = (i / np, i % np);
                let _ = writeln!(out, "{},{},{},{}", g.theta[j], g.phi[k], g.f[i] - self.radius, hv);
            }
        }
        Ok(out)
    }
}

fn linearized_multiplier(dim: usize, radius: f64, c: f64) -> f64 {
    (1.0 - c / (dim as f64 - 1.0)) / (radius * radius)
}

/// Modal data of a height function.
#[derive(Debug, Clone, PartialEq)]
enum Modes {
    /// `coef[k] = (a_k, b_k)` for a_k cos kθ + b_k sin kθ.
    Circle(Vec<(f64, f64)>),
    /// Real orthonormal harmonics, `coef[l*l + l + m]` for −l ≤ m ≤ l.
    Sphere { degree: usize, coef: Vec<f64> },
}

/// Perturbation ρ of the reference sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightField {
    modes: Modes,
    grid: (usize, usize),
}

impl HeightField {
    /// Fourier coefficients on the circle; entry k is (a_k, b_k).
    pub fn circle(coef: Vec<(f64, f64)>) -> Self {
        let kmax = coef.len().saturating_sub(1);
        let n = MIN_CIRCLE_GRID.max(4 * kmax);
        Self { modes: Modes::Circle(coef), grid: (n, 1) }
    }

    /// a cos kθ (or a sin kθ when `sine`).
    pub fn circle_mode(k: usize, amplitude: f64, sine: bool) -> Self {
        let mut coef = vec![(0.0, 0.0); k + 1];
        coef[k] = if sine { (0.0, amplitude) } else { (amplitude, 0.0) };
        Self::circle(coef)
    }

    /// Real spherical harmonic coefficients up to `degree`, indexed l² + l + m.
    pub fn sphere(degree: usize, coef: Vec<f64>) -> Self {
        assert_eq!(coef.len(), (degree + 1) * (degree + 1));
        let nt = MIN_SPHERE_GRID.max(4 * degree);
        Self { modes: Modes::Sphere { degree, coef }, grid: (nt, 2 * nt) }
    }

    pub fn sphere_mode(degree: usize, l: usize, m: i64, amplitude: f64) -> Self {
        let mut coef = vec![0.0; (degree + 1) * (degree + 1)];
        coef[sh_index(l, m)] = amplitude;
        Self::sphere(degree, coef)
    }

    /// ρ ≡ c.
    pub fn constant(dim: usize, c: f64) -> Self {
        match dim {
            2 => Self::circle(vec![(c, 0.0)]),
            _ => Self::sphere_mode(DEFAULT_DEGREE, 0, 0, c * (4.0 * PI).sqrt()),
        }
    }

    /// Overrides the evaluation grid: points on the circle, or (θ, φ) counts.
    pub fn with_grid(mut self, n_theta: usize, n_phi: usize) -> Self {
        self.grid = match self.modes {
            Modes::Circle(_) => (n_theta, 1),
            Modes::Sphere { .. } => (n_theta, n_phi),
        };
        self
    }

    pub fn dim(&self) -> usize {
        match self.modes {
            Modes::Circle(_) => 2,
            Modes::Sphere { .. } => 3,
        }
    }

    pub fn grid_len(&self) -> usize {
        self.grid.0 * self.grid.1
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map_modes(|_| s)
    }

    /// Multiplies each mode by `mult(c)` where −c is its Δ eigenvalue on the unit sphere.
    fn map_modes(&self, mult: impl Fn(f64) -> f64) -> Self {
        let modes = match &self.modes {
            Modes::Circle(coef) => Modes::Circle(
                coef.iter()
                    .enumerate()
                    .map(|(k, &(a, b))| {
                        let s = mult((k * k) as f64);
                        (a * s, b * s)
                    })
                    .collect(),
            ),
            Modes::Sphere { degree, coef } => {
                let mut out = coef.clone();
                for l in 0..=*degree {
                    let s = mult((l * (l + 1)) as f64);
                    for m in -(l as i64)..=(l as i64) {
                        out[sh_index(l, m)] *= s;
                    }
                }
                Modes::Sphere { degree: *degree, coef: out }
            }
        };
        Self { modes, grid: self.grid }
    }

    /// ρ on the evaluation grid.
    pub fn grid_values(&self) -> Vec<f64> {
        self.grid_data(0.0).f
    }

    /// Grid angles: θ for n = 2; (θ, φ) row-major for n = 3.
    pub fn grid_points(&self) -> Vec<Vec<f64>> {
        let g = self.grid_data(0.0);
        match self.modes {
            Modes::Circle(_) => g.theta.iter().map(|&t| vec![t]).collect(),
            Modes::Sphere { .. } => {
                let mut out = Vec::with_capacity(self.grid_len());
                for &t in &g.theta {
                    for &p in &g.phi {
                        out.push(vec![t, p]);
                    }
                }
                out
            }
        }
    }

    /// r = R + ρ and its first and second angular derivatives on the grid.
    fn grid_data(&self, radius: f64) -> GridData {
        match &self.modes {
            Modes::Circle(coef) => {
                let n = self.grid.0;
                let theta: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
                let mut g = GridData::zeros(theta, vec![0.0], (n, 1), false);
                for (i, &t) in g.theta.iter().enumerate() {
                    let (mut f, mut ft, mut ftt) = (radius, 0.0, 0.0);
                    for (k, &(a, b)) in coef.iter().enumerate() {
                        let kf = k as f64;
                        let (s, c) = (kf * t).sin_cos();
                        f += a * c + b * s;
                        ft += kf * (-a * s + b * c);
                        ftt -= kf * kf * (a * c + b * s);
                    }
                    g.f[i] = f;
                    g.ft[i] = ft;
                    g.ftt[i] = ftt;
                }
                g
            }
            Modes::Sphere { degree, coef } => {
                let (nt, np) = self.grid;
                let theta: Vec<f64> = (0..nt).map(|j| (j as f64 + 0.5) * PI / nt as f64).collect();
                let phi: Vec<f64> = (0..np).map(|k| 2.0 * PI * k as f64 / np as f64).collect();
                let mut g = GridData::zeros(theta, phi, (nt, np), true);
                for j in 0..nt {
                    let leg = NormalizedLegendre::new(*degree, g.theta[j]);
                    for k in 0..np {
                        let i = j * np + k;
                        let p = g.phi[k];
                        let (mut f, mut ft, mut fp, mut ftt, mut ftp, mut fpp) = (radius, 0.0, 0.0, 0.0, 0.0, 0.0);
                        for l in 0..=*degree {
                            for m in -(l as i64)..=(l as i64) {
                                let c = coef[sh_index(l, m)];
                                if c == 0.0 {
                                    continue;
                                }
                                let am = m.unsigned_abs() as usize;
                                let (pv, pd, pdd) = leg.get(l, am);
                                let mf = am as f64;
                                let (az, azp, azpp) = if m > 0 {
                                    let (s, co) = (mf * p).sin_cos();
                                    let r2 = 2f64.sqrt();
                                    (r2 * co, -r2 * mf * s, -r2 * mf * mf * co)
                                } else if m < 0 {
                                    let (s, co) = (mf * p).sin_cos();
                                    let r2 = 2f64.sqrt();
                                    (r2 * s, r2 * mf * co, -r2 * mf * mf * s)
                                } else {
                                    (1.0, 0.0, 0.0)
                                };
                                f += c * pv * az;
                                ft += c * pd * az;
                                fp += c * pv * azp;
                                ftt += c * pdd * az;
                                ftp += c * pd * azp;
                                fpp += c * pv * azpp;
                            }
                        }
                        g.f[i] = f;
                        g.ft[i] = ft;
                        g.fp[i] = fp;
                        g.ftt[i] = ftt;
                        g.ftp[i] = ftp;
                        g.fpp[i] = fpp;
                    }
                }
                g
            }
        }
    }
}

/// Index of the real harmonic (l, m) in a flat coefficient vector.
pub fn sh_index(l: usize, m: i64) -> usize {
    assert!(m.unsigned_abs() as usize <= l);
    ((l * l + l) as i64 + m) as usize
}

struct GridData {
    theta: Vec<f64>,
    phi: Vec<f64>,
    shape: (usize, usize),
    f: Vec<f64>,
    ft: Vec<f64>,
    ftt: Vec<f64>,
    fp: Vec<f64>,
    ftp: Vec<f64>,
    fpp: Vec<f64>,
}

impl GridData {
    fn zeros(theta: Vec<f64>, phi: Vec<f64>, shape: (usize, usize), sphere: bool) -> Self {
        let n = shape.0 * shape.1;
        let z = |on: bool| if on { vec![0.0; n] } else { Vec::new() };
        Self {
            theta,
            phi,
            shape,
            f: vec![0.0; n],
            ft: vec![0.0; n],
            ftt: vec![0.0; n],
            fp: z(sphere),
            ftp: z(sphere),
            fpp: z(sphere),
        }
    }

    fn is_sphere(&self) -> bool {
        !self.fp.is_empty()
    }

    /// |∇_Σρ| on the reference sphere of radius R.
    fn surface_gradient_norm(&self, i: usize, radius: f64) -> f64 {
        if self.is_sphere() {
            let st = self.theta[i / self.shape.1].sin();
            (self.ft[i].powi(2) + (self.fp[i] / st).powi(2)).sqrt() / radius
        } else {
            self.ft[i].abs() / radius
        }
    }

    /// β = (1 + |α|²)^{−1/2} with |α| = |M₀∇_Σρ| = |∇_Σρ| R/(R + ρ).
    fn beta(&self, i: usize, radius: f64) -> f64 {
        let alpha = self.surface_gradient_norm(i, radius) * radius / self.f[i];
        1.0 / (1.0 + alpha * alpha).sqrt()
    }
}

/// Planar curve r = R + ρ(θ): with M₀ = R/(R+ρ) on the tangent line,
/// α = a τ where a = ρ′/(R+ρ), ∇_Σα has tangential part a′/R, and the
/// general formula collapses to ℋ = β(−1 + β²a′)/(R+ρ).
fn circle_curvature(g: &GridData, i: usize, radius: f64) -> f64 {
    let r = g.f[i];
    let a_prime = g.ftt[i] / r - g.ft[i] * g.ft[i] / (r * r);
    let beta = g.beta(i, radius);
    beta * (-1.0 + beta * beta * a_prime) / r
}

fn parametric_tangents(g: &GridData, i: usize) -> ([f64; 3], [f64; 3]) {
    let np = g.shape.1;
    let (t, p) = (g.theta[i / np], g.phi[i % np]);
    let (st, ct) = t.sin_cos();
    let (sp, cp) = p.sin_cos();
    let w = [st * cp, st * sp, ct];
    let wt = [ct * cp, ct * sp, -st];
    let wp = [-st * sp, st * cp, 0.0];
    let f = g.f[i];
    let xt = add(scale(g.ft[i], w), scale(f, wt));
    let xp = add(scale(g.fp[i], w), scale(f, wp));
    (xt, xp)
}

/// Mean of the principal curvatures of X = f(θ,φ) ω(θ,φ) with respect to the
/// outward normal, negative on convex surfaces.
fn sphere_curvature(g: &GridData, i: usize) -> f64 {
    let np = g.shape.1;
    let (t, p) = (g.theta[i / np], g.phi[i % np]);
    let (st, ct) = t.sin_cos();
    let (sp, cp) = p.sin_cos();
    let w = [st * cp, st * sp, ct];
    let wt = [ct * cp, ct * sp, -st];
    let wp = [-st * sp, st * cp, 0.0];
    let wtt = [-w[0], -w[1], -w[2]];
    let wtp = [-ct * sp, ct * cp, 0.0];
    let wpp = [-st * cp, -st * sp, 0.0];
    let (f, ft, fp) = (g.f[i], g.ft[i], g.fp[i]);
    let (xt, xp) = parametric_tangents(g, i);
    let xtt = add(add(scale(g.ftt[i], w), scale(2.0 * ft, wt)), scale(f, wtt));
    let xtp = add(add(add(scale(g.ftp[i], w), scale(ft, wp)), scale(fp, wt)), scale(f, wtp));
    let xpp = add(add(scale(g.fpp[i], w), scale(2.0 * fp, wp)), scale(f, wpp));
    let nrm = cross(xt, xp);
    let nn = norm3(nrm);
    let nu = scale(1.0 / nn, nrm);
    let (e1, f1, g1) = (dot(xt, xt), dot(xt, xp), dot(xp, xp));
    let (e2, f2, g2) = (dot(xtt, nu), dot(xtp, nu), dot(xpp, nu));
    (e2 * g1 - 2.0 * f2 * f1 + g2 * e1) / (2.0 * (e1 * g1 - f1 * f1))
}

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}
fn scale(s: f64, a: [f64; 3]) -> [f64; 3] {
    [s * a[0], s * a[1], s * a[2]]
}
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}
fn norm3(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthonormal associated Legendre functions P̄ₗᵐ(cos θ) with their first and
/// second θ-derivatives, for 0 ≤ m ≤ l ≤ degree at one colatitude.
struct NormalizedLegendre {
    degree: usize,
    vals: Vec<(f64, f64, f64)>,
}

impl NormalizedLegendre {
    fn new(degree: usize, theta: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
        let size = (degree + 1) * (degree + 2) / 2;
        let mut p = vec![0.0; size];
        p[0] = (1.0 / (4.0 * PI)).sqrt();
        for m in 1..=degree {
            let mf = m as f64;
            p[idx(m, m)] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * st * p[idx(m - 1, m - 1)];
        }
        for m in 0..degree {
            p[idx(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * ct * p[idx(m, m)];
        }
        for m in 0..=degree {
            for l in (m + 2)..=degree {
                let (lf, mf) = (l as f64, m as f64);
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
                p[idx(l, m)] = a * (ct * p[idx(l - 1, m)] - b * p[idx(l - 2, m)]);
            }
        }
        let mut vals = vec![(0.0, 0.0, 0.0); size];
        for l in 0..=degree {
            for m in 0..=l {
                let (lf, mf) = (l as f64, m as f64);
                let prev = if l > m { p[idx(l - 1, m)] } else { 0.0 };
                let c = ((2.0 * lf + 1.0) / (2.0 * lf - 1.0) * (lf * lf - mf * mf)).sqrt();
                let pv = p[idx(l, m)];
                let d1 = (lf * ct * pv - if l > m { c * prev } else { 0.0 }) / st;
                // associated Legendre equation in θ
                let d2 = -ct / st * d1 - (lf * (lf + 1.0) - mf * mf / (st * st)) * pv;
                vals[idx(l, m)] = (pv, d1, d2);
            }
        }
        Self { degree, vals }
    }

    fn get(&self, l: usize, m: usize) -> (f64, f64, f64) {
        debug_assert!(l <= self.degree && m <= l);
        self.vals[l * (l + 1) / 2 + m]
    }
}

/// Fejér's first rule on θⱼ = (j + ½)π/N: Σ wⱼ g(θⱼ) ≈ ∫₀^π g(θ) sin θ dθ.
pub fn fejer_weights(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let t = (j as f64 + 0.5) * PI / n as f64;
            let s: f64 = (1..=n / 2).map(|k| (2.0 * k as f64 * t).cos() / (4.0 * (k * k) as f64 - 1.0)).sum();
            2.0 / n as f64 * (1.0 - 2.0 * s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    /// Curvature of the polar curve r(θ), negative when convex.
    fn polar_curvature(r: f64, rt: f64, rtt: f64) -> f64 {
        -(r * r + 2.0 * rt * rt - r * rtt) / (r * r + rt * rt).powf(1.5)
    }

    #[test]
    fn weingarten_of_unit_sphere() {
        for n in [2, 3] {
            let w = SphereChart::new(n, 1.0).unwrap().weingarten();
            assert!(w.principal.iter().all(|&k| k == -1.0));
            assert_eq!(w.norm, 1.0);
        }
        let w = SphereChart::new(3, 2.0).unwrap().weingarten();
        assert_eq!(w.trace, -1.0);
        assert_eq!(w.mean_curvature(), -0.5);
    }

    #[test]
    fn constant_shift_is_exact() {
        for (n, r, c) in [(2, 1.0, 0.25), (2, 2.0, -0.7), (3, 1.0, 0.3), (3, 2.0, -0.5)] {
            let chart = SphereChart::new(n, r).unwrap();
            let h = chart.mean_curvature(&HeightField::constant(n, c)).unwrap();
            let exact = -1.0 / (r + c);
            assert!(h.iter().all(|v| ((v - exact) / exact).abs() < 1e-10), "n={n} c={c}");
            let zero = chart.mean_curvature(&HeightField::constant(n, 0.0)).unwrap();
            assert!(zero.iter().all(|v| (v + 1.0 / r).abs() < 1e-12));
        }
    }

    #[test]
    fn circle_formula_matches_polar_curvature() {
        let chart = SphereChart::new(2, 1.3).unwrap();
        let rho = HeightField::circle(vec![(0.02, 0.0), (0.0, 0.03), (0.01, -0.004), (0.0, 0.0), (0.002, 0.001)]);
        let h = chart.mean_curvature(&rho).unwrap();
        let g = rho.grid_data(1.3);
        for i in 0..h.len() {
            let exact = polar_curvature(g.f[i], g.ft[i], g.ftt[i]);
            assert!((h[i] - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn translation_changes_curvature_at_second_order() {
        for n in [2, 3] {
            let chart = SphereChart::new(n, 1.0).unwrap();
            let base = if n == 2 {
                HeightField::circle_mode(1, 1.0, false)
            } else {
                HeightField::sphere_mode(4, 1, 0, 1.0)
            };
            let dev = |eps: f64| {
                let h = chart.mean_curvature(&base.scaled(eps)).unwrap();
                h.iter().map(|v| (v + 1.0).abs()).fold(0.0, f64::max)
            };
            let (d1, d2) = (dev(1e-2), dev(1e-3));
            let order = (d1 / d2).log10();
            assert!(order > 1.9 && order < 2.1, "n={n}: observed order {order}");
        }
    }

    #[test]
    fn translated_sphere_oracle() {
        // exact height of the unit circle shifted by z: z cosθ − 1 + sqrt(z² cos²θ + 1 − z²)
        let z: f64 = 0.05;
        let k = 24;
        let n = 512;
        let exact: Vec<f64> = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                z * t.cos() - 1.0 + (z * z * t.cos().powi(2) + 1.0 - z * z).sqrt()
            })
            .collect();
        // project onto cosine modes by trapezoidal quadrature
        let coef: Vec<(f64, f64)> = (0..=k)
            .map(|m| {
                let s: f64 = exact
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v * (m as f64 * 2.0 * PI * i as f64 / n as f64).cos())
                    .sum();
                (if m == 0 { s / n as f64 } else { 2.0 * s / n as f64 }, 0.0)
            })
            .collect();
        let chart = SphereChart::new(2, 1.0).unwrap();
        let h = chart.mean_curvature(&HeightField::circle(coef)).unwrap();
        assert!(h.iter().all(|v| (v + 1.0).abs() < 1e-12));
    }

    #[test]
    fn linearized_eigenvalues() {
        let chart = SphereChart::new(2, 1.0).unwrap();
        assert_eq!(chart.linearized_eigenvalue(1.0), 0.0);
        assert_eq!(chart.linearized_eigenvalue(0.0), 1.0);
        let lin = chart.linearized_curvature(&HeightField::circle_mode(3, 1.0, true)).unwrap();
        assert_eq!(lin, HeightField::circle_mode(3, -8.0, true));
        let chart3 = SphereChart::new(3, 2.0).unwrap();
        // degree one harmonics are translations on the sphere as well
        assert_eq!(chart3.linearized_eigenvalue(2.0), 0.0);
        assert_eq!(chart3.linearized_eigenvalue(6.0), -0.5);
    }

    #[test]
    fn nonlinear_curvature_linearizes_to_first_order() {
        for n in [2, 3] {
            let chart = SphereChart::new(n, 1.0).unwrap();
            let rho = if n == 2 {
                HeightField::circle(vec![(0.3, 0.0), (0.0, 0.0), (0.5, 0.2), (0.0, -0.4)])
            } else {
                let mut c = vec![0.0; 25];
                c[sh_index(0, 0)] = 0.3;
                c[sh_index(2, 1)] = 0.4;
                c[sh_index(3, -2)] = -0.3;
                HeightField::sphere(4, c)
            };
            let lin = chart.linearized_curvature(&rho).unwrap().grid_values();
            let h0 = chart.mean_curvature(&HeightField::constant(n, 0.0).with_grid(rho.grid.0, rho.grid.1)).unwrap();
            let err = |eps: f64| {
                let h = chart.mean_curvature(&rho.scaled(eps)).unwrap();
                let fd: Vec<f64> = h.iter().zip(&h0).map(|(a, b)| (a - b) / eps).collect();
                max_abs_diff(&fd, &lin)
            };
            let (e1, e2) = (err(1e-3), err(1e-4));
            assert!(e2 < 1e-2, "n={n}: {e1} {e2}");
            let order = (e1 / e2).log10();
            assert!((order - 1.0).abs() < 0.1, "n={n}: order {order}");
        }
    }

    #[test]
    fn sphere_formula_against_finite_differences() {
        // compare the analytic θ-derivatives of a harmonic field with central differences
        let mut c = vec![0.0; 36];
        c[sh_index(3, 2)] = 0.7;
        c[sh_index(5, -4)] = 0.2;
        c[sh_index(4, 0)] = 0.5;
        let leg_at = |t: f64| NormalizedLegendre::new(5, t);
        let t = 0.83;
        let dt = 1e-5;
        for l in 0..=5 {
            for m in 0..=l {
                let (_, d1, d2) = leg_at(t).get(l, m);
                let fd1 = (leg_at(t + dt).get(l, m).0 - leg_at(t - dt).get(l, m).0) / (2.0 * dt);
                let fd2 = (leg_at(t + dt).get(l, m).1 - leg_at(t - dt).get(l, m).1) / (2.0 * dt);
                assert!((d1 - fd1).abs() < 1e-8, "l={l} m={m}");
                assert!((d2 - fd2).abs() < 1e-7, "l={l} m={m}");
            }
        }
        // orthonormality under Fejér × trapezoid quadrature
        let f = HeightField::sphere(5, c.clone());
        let vals = f.grid_values();
        let (nt, np) = f.grid;
        let w = fejer_weights(nt);
        let mut norm2 = 0.0;
        for j in 0..nt {
            for k in 0..np {
                norm2 += w[j] * vals[j * np + k].powi(2) * 2.0 * PI / np as f64;
            }
        }
        let expected: f64 = c.iter().map(|x| x * x).sum();
        assert!((norm2 - expected).abs() < 1e-12);
    }

    #[test]
    fn normal_velocity_cases() {
        let chart = SphereChart::new(2, 1.0).unwrap();
        let zero = HeightField::constant(2, 0.0);
        let rt = HeightField::circle(vec![(0.3, 0.0), (0.1, 0.2)]);
        let v = chart.normal_velocity(&zero, &rt).unwrap();
        assert_eq!(v, rt.grid_values());
        let still = chart.normal_velocity(&rt.scaled(0.1), &zero).unwrap();
        assert!(still.iter().all(|&x| x == 0.0));
        // |ρ′| constant along the circle is impossible for a periodic mode, so
        // evaluate β pointwise against the hand formula instead
        let rho = HeightField::circle_mode(2, 0.03, false);
        let beta = chart.beta(&rho).unwrap();
        for (i, pt) in rho.grid_points().iter().enumerate() {
            let t = pt[0];
            let (r, rt) = (1.0 + 0.03 * (2.0 * t).cos(), -0.06 * (2.0 * t).sin());
            let alpha = rt / r;
            let hand = 1.0 / (1.0 + alpha * alpha).sqrt();
            assert!((beta[i] - hand).abs() < 1e-15);
            assert!(beta[i] <= 1.0);
        }
    }

    #[test]
    fn too_large_perturbations_are_rejected() {
        let chart = SphereChart::new(2, 1.0).unwrap();
        let big = HeightField::constant(2, 0.6);
        assert!(matches!(chart.mean_curvature(&big), Err(GeometryError::PerturbationTooLarge { .. })));
        let steep = HeightField::circle_mode(10, 0.02, false);
        assert!(matches!(chart.beta(&steep), Err(GeometryError::PerturbationTooLarge { .. })));
        let wrong = HeightField::constant(3, 0.0);
        assert!(matches!(chart.mean_curvature(&wrong), Err(GeometryError::DimensionMismatch { .. })));
    }

    #[test]
    fn area_and_volume() {
        let c2 = SphereChart::new(2, 1.0).unwrap();
        let (a, v) = c2.surface_measure_and_volume(&HeightField::constant(2, 0.0)).unwrap();
        assert!((a - 2.0 * PI).abs() < 1e-12 && (v - PI).abs() < 1e-12);
        let (a, v) = c2.surface_measure_and_volume(&HeightField::constant(2, 0.25)).unwrap();
        assert!((a / (2.5 * PI) - 1.0).abs() < 1e-8 && (v / (1.5625 * PI) - 1.0).abs() < 1e-8);
        let c3 = SphereChart::new(3, 2.0).unwrap();
        let (a, v) = c3.surface_measure_and_volume(&HeightField::constant(3, 0.0)).unwrap();
        assert!((a / (16.0 * PI) - 1.0).abs() < 1e-8 && (v / (32.0 * PI / 3.0) - 1.0).abs() < 1e-8);
        let (a, v) = c3.surface_measure_and_volume(&HeightField::constant(3, 0.4)).unwrap();
        assert!((a / (4.0 * PI * 2.4f64.powi(2)) - 1.0).abs() < 1e-8);
        assert!((v / (4.0 * PI * 2.4f64.powi(3) / 3.0) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn csv_dump_has_one_row_per_grid_point() {
        let chart = SphereChart::new(2, 1.0).unwrap();
        let rho = HeightField::circle_mode(2, 0.01, false);
        let csv = chart.curvature_csv(&rho).unwrap();
        assert_eq!(csv.lines().count(), rho.grid_len() + 1);
        assert!(csv.starts_with("angle,rho,H\n"));
    }
}

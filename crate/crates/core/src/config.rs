//! TOML run configuration: material, domain, task list, seed.
//!
//! Unknown keys are rejected everywhere and every number must be finite.
//! The seed only drives optional random perturbations of initial fronts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibria::{DomainSpec, EquilibriumProblem};
use crate::simulate::{InitialProfile, RadialStefanConfig, RipeningConfig};
use crate::spectral::{MultiDiscConfig, SpectralConfig};
use crate::thermo::{Coefficient, FreeEnergyModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid config: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilySpec {
    EqualHeatCapacity,
    LinearInternalEnergy,
}

/// ψᵢ(u) = aᵢ + bᵢu − κᵢ u ln u with constant conductivities and undercooling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    pub family: FamilySpec,
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub kappa: [f64; 2],
    pub conductivity: [f64; 2],
    pub undercooling: f64,
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
}

impl MaterialSpec {
    pub fn model(&self) -> FreeEnergyModel {
        let base = match self.family {
            FamilySpec::EqualHeatCapacity => FreeEnergyModel::equal_heat_capacity(self.a, self.b, self.kappa[0]),
            FamilySpec::LinearInternalEnergy => FreeEnergyModel::linear_internal_energy(self.a, self.b, self.kappa),
        };
        let mut m = base
            .with_conductivity(Coefficient::Constant(self.conductivity[0]), Coefficient::Constant(self.conductivity[1]))
            .with_undercooling(Coefficient::Constant(self.undercooling));
        if let Some([lo, hi]) = self.interval {
            m = m.with_interval(lo, hi);
        }
        m
    }

    fn check(&self, errors: &mut Vec<String>) {
        if self.family == FamilySpec::EqualHeatCapacity && self.kappa[0] != self.kappa[1] {
            errors.push("material.kappa: equal_heat_capacity needs kappa[0] == kappa[1]".into());
        }
        if self.undercooling < 0.0 {
            errors.push(format!(
                "material.undercooling = {}: the kinetic undercooling coefficient gamma must be >= 0",
                self.undercooling
            ));
        }
        if !(self.sigma > 0.0) {
            errors.push(format!("material.sigma = {}: surface tension must be positive", self.sigma));
        }
        if let Err(e) = self.model().validate() {
            errors.push(format!("material: {e}"));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriaTask {
    pub spheres: usize,
    pub energy: f64,
}

/// Several discs for the Neumann-to-Dirichlet and B_λ computations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscsSpec {
    pub width: f64,
    pub height: f64,
    pub centers: Vec<[f64; 2]>,
    pub grid: usize,
    pub quadrature: usize,
    pub lambda_min: f64,
    pub per_decade: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumTask {
    /// Equilibrium temperature u*; R* = σ/h(u*).
    pub temperature: f64,
    pub r_out: f64,
    pub max_mode: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discs: Option<DiscsSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    /// `"compatible"`: the constant with h(u₀) = σ/s₀.
    Keyword(String),
    Constant(f64),
    /// (r, u) pairs, linearly interpolated.
    Table(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateTask {
    pub s0: f64,
    pub r_out: f64,
    pub initial: InitialSpec,
    pub cells: [usize; 2],
    pub t_end: f64,
    pub dt_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_every: Option<usize>,
    /// Relative random perturbation of s₀ drawn from the seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s0_jitter: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RipeningTask {
    pub radii: Vec<f64>,
    pub initial_temperature: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_every: Option<usize>,
    /// Relative random perturbation of each radius drawn from the seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_jitter: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskSpec {
    Equilibria(EquilibriaTask),
    Spectrum(SpectrumTask),
    Simulate(SimulateTask),
    Ripening(RipeningTask),
    Check,
}

impl TaskSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            TaskSpec::Equilibria(_) => "equilibria",
            TaskSpec::Spectrum(_) => "spectrum",
            TaskSpec::Simulate(_) => "simulate",
            TaskSpec::Ripening(_) => "ripening",
            TaskSpec::Check => "check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub material: MaterialSpec,
    pub domain: DomainSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
    #[serde(default)]
    pub tasks: Vec<TaskSpec>,
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|sp| {
                let before = &text[..sp.start.min(text.len())];
                let line = before.matches('\n').count() + 1;
                let column = sp.start - before.rfind('\n').map_or(0, |i| i + 1) + 1;
                (line, column)
            })
            .unwrap_or((0, 0));
        ConfigError::Parse { line, column, message: e.message().to_string() }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn finite_check(value: &toml::Value, path: &str, errors: &mut Vec<String>) {
    match value {
        toml::Value::Float(x) if !x.is_finite() => errors.push(format!("{path}: non-finite number {x}")),
        toml::Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| finite_check(v, &format!("{path}[{i}]"), errors)),
        toml::Value::Table(t) => t.iter().for_each(|(k, v)| {
            let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
            finite_check(v, &p, errors)
        }),
        _ => {}
    }
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errors = Vec::new();
        if let Ok(v) = toml::Value::try_from(self) {
            finite_check(&v, "", &mut errors);
        }
        self.material.check(&mut errors);
        if let Err(e) = self.domain.validate() {
            errors.push(format!("domain: {e}"));
        }
        for (i, task) in self.tasks.iter().enumerate() {
            let at = |m: String| format!("tasks[{i}] ({}): {m}", task.kind());
            match task {
                TaskSpec::Equilibria(t) => {
                    if t.spheres == 0 {
                        errors.push(at("spheres must be at least 1".into()));
                    }
                }
                TaskSpec::Spectrum(t) => {
                    if let Err(e) = self.spectral_config(t) {
                        errors.push(at(e.to_string()));
                    } else if let Some(d) = &t.discs {
                        if let Err(e) = self.multi_disc_config(t, d).and_then(|c| c.validate().map(|_| c)) {
                            errors.push(at(e.to_string()));
                        }
                    }
                }
                TaskSpec::Simulate(t) => {
                    if let InitialSpec::Keyword(k) = &t.initial {
                        if k != "compatible" {
                            errors.push(at(format!("initial = {k:?}: expected \"compatible\", a number or a table")));
                            continue;
                        }
                    }
                    if let Err(e) = self.radial_config(t).validate() {
                        errors.push(at(e.to_string()));
                    }
                }
                TaskSpec::Ripening(t) => {
                    if let Err(e) = self.ripening_config(t).validate() {
                        errors.push(at(e.to_string()));
                    }
                }
                TaskSpec::Check => {}
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errors))
        }
    }

    pub fn model(&self) -> FreeEnergyModel {
        self.material.model()
    }

    fn rng(&self, task: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(task as u64))
    }

    pub fn equilibrium_problem(&self, t: &EquilibriaTask) -> EquilibriumProblem {
        EquilibriumProblem::new(self.model(), self.domain.clone(), self.material.sigma, t.spheres, t.energy)
    }

    pub fn spectral_config(&self, t: &SpectrumTask) -> Result<SpectralConfig, crate::spectral::SpectralError> {
        let model = self.model();
        let h = model
            .jump_h(t.temperature)
            .map_err(|e| crate::spectral::SpectralError::InvalidConfig(e.to_string()))?;
        if !(h > 0.0) {
            return Err(crate::spectral::SpectralError::InvalidConfig(format!(
                "h(u*) = {h} must be positive for an equilibrium radius"
            )));
        }
        let r_star = self.material.sigma / h;
        let mut cfg = SpectralConfig::from_model(&model, self.domain.dim, self.material.sigma, t.temperature, r_star, t.r_out, t.max_mode)?;
        if let Some(l) = t.lambda_max {
            cfg.lambda_max = l;
        }
        if let Some(n) = t.nodes {
            cfg.nodes = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn multi_disc_config(&self, t: &SpectrumTask, d: &DiscsSpec) -> Result<MultiDiscConfig, crate::spectral::SpectralError> {
        let sc = self.spectral_config(t)?;
        if self.domain.dim != 2 {
            return Err(crate::spectral::SpectralError::InvalidConfig("multi-disc spectra are two-dimensional".into()));
        }
        Ok(MultiDiscConfig {
            width: d.width,
            height: d.height,
            centers: d.centers.clone(),
            radius: sc.r_star,
            grid: d.grid,
            quadrature: d.quadrature,
            temperature: sc.temperature,
            kappa: sc.kappa,
            conductivity: sc.conductivity,
            latent: sc.latent,
            gamma: sc.gamma,
            sigma: sc.sigma,
        })
    }

    /// Radial simulation settings for task index `task` (the index seeds
    /// the optional front jitter).
    pub fn radial_config_at(&self, t: &SimulateTask, task: usize) -> RadialStefanConfig {
        let mut s0 = t.s0;
        if let Some(j) = t.s0_jitter {
            s0 *= 1.0 + j * self.rng(task).gen_range(-1.0..=1.0);
        }
        let mut cfg = RadialStefanConfig::new(self.model(), self.material.sigma, self.domain.dim, t.r_out, s0);
        cfg.initial = match &t.initial {
            InitialSpec::Keyword(_) => InitialProfile::Compatible,
            InitialSpec::Constant(u) => InitialProfile::Constant(*u),
            InitialSpec::Table(rows) => InitialProfile::Table(rows.iter().map(|r| (r[0], r[1])).collect()),
        };
        cfg.cells = t.cells;
        cfg.t_end = t.t_end;
        cfg.dt_max = t.dt_max;
        if let Some(v) = t.dt_min {
            cfg.dt_min = v;
        }
        if let Some(v) = t.cfl {
            cfg.cfl = v;
        }
        if let Some(v) = t.max_steps {
            cfg.max_steps = v;
        }
        if let Some(v) = t.sample_every {
            cfg.sample_every = v;
        }
        cfg
    }

    pub fn radial_config(&self, t: &SimulateTask) -> RadialStefanConfig {
        self.radial_config_at(t, 0)
    }

    pub fn ripening_config_at(&self, t: &RipeningTask, task: usize) -> RipeningConfig {
        let mut radii = t.radii.clone();
        if let Some(j) = t.radius_jitter {
            let mut rng = self.rng(task);
            for r in &mut radii {
                *r *= 1.0 + j * rng.gen_range(-1.0..=1.0);
            }
        }
        RipeningConfig {
            model: self.model(),
            sigma: self.material.sigma,
            dim: self.domain.dim,
            volume: self.domain.volume,
            radii,
            initial_temperature: t.initial_temperature,
            dt: t.dt,
            t_end: t.t_end,
            max_steps: 10_000_000,
            min_radius: t.min_radius.unwrap_or(1e-3),
            sample_every: t.sample_every.unwrap_or(1),
        }
    }

    pub fn ripening_config(&self, t: &RipeningTask) -> RipeningConfig {
        self.ripening_config_at(t, 0)
    }
}

/// The two-dimensional equal-heat-capacity fixture: ψ₁ = 1 − u ln u,
/// ψ₂ = u − u ln u, |Ω| = 9π, σ = 1, packing radii 3 and 1.5.
pub fn fixture_config() -> RunConfig {
    RunConfig {
        seed: 7,
        material: MaterialSpec {
            family: FamilySpec::EqualHeatCapacity,
            a: [1.0, 0.0],
            b: [0.0, 1.0],
            kappa: [1.0, 1.0],
            conductivity: [1.0, 1.0],
            undercooling: 0.0,
            sigma: 1.0,
            interval: None,
        },
        domain: DomainSpec::new(2, 9.0 * std::f64::consts::PI).with_packing_radii(vec![3.0, 1.5]),
        output: None,
        tasks: vec![
            TaskSpec::Equilibria(EquilibriaTask { spheres: 1, energy: 21.5 * std::f64::consts::PI }),
            TaskSpec::Equilibria(EquilibriaTask { spheres: 1, energy: 21.0 * std::f64::consts::PI }),
            TaskSpec::Spectrum(SpectrumTask {
                temperature: 2.0,
                r_out: 3.0,
                max_mode: 8,
                lambda_max: None,
                nodes: None,
                discs: None,
            }),
            TaskSpec::Simulate(SimulateTask {
                s0: 2.0,
                r_out: 3.0,
                initial: InitialSpec::Table(vec![[0.0, 1.4], [2.0, 1.5], [3.0, 1.55]]),
                cells: [100, 100],
                t_end: 5.0,
                dt_max: 0.01,
                dt_min: None,
                cfl: None,
                max_steps: None,
                sample_every: Some(10),
                s0_jitter: None,
            }),
            TaskSpec::Check,
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = include_str!("../fixtures/fixture_a.toml");

    #[test]
    fn shipped_fixture_round_trips_byte_identically() {
        let cfg = parse_config(FIXTURE).unwrap();
        assert_eq!(cfg, fixture_config());
        assert_eq!(cfg.to_toml(), FIXTURE);
    }

    #[test]
    fn missing_sigma_names_the_key() {
        let text = FIXTURE.replace("sigma = 1.0\n", "");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("sigma"), "{err}");
        assert!(matches!(err, ConfigError::Parse { line, .. } if line > 0));
    }

    #[test]
    fn negative_undercooling_cites_the_constraint() {
        let text = FIXTURE.replace("undercooling = 0.0", "undercooling = -0.5");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("gamma must be >= 0"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = FIXTURE.replace("seed = 7", "seed = 7\ncolour = 3");
        assert!(parse_config(&text).is_err());
        let text = FIXTURE.replace("spheres = 1", "spheres = 1\nradius = 2.0");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn non_finite_numbers_are_rejected() {
        let text = FIXTURE.replace("energy = 67.", "energy = inf\n#");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("non-finite"), "{err}");
    }

    #[test]
    fn jitter_is_deterministic() {
        let mut cfg = fixture_config();
        let task = SimulateTask {
            s0: 1.0,
            r_out: 3.0,
            initial: InitialSpec::Keyword("compatible".into()),
            cells: [10, 10],
            t_end: 1.0,
            dt_max: 0.1,
            dt_min: None,
            cfl: None,
            max_steps: None,
            sample_every: None,
            s0_jitter: Some(1e-3),
        };
        let a = cfg.radial_config_at(&task, 3).s0;
        assert_eq!(a, cfg.radial_config_at(&task, 3).s0);
        assert!((a - 1.0).abs() <= 1e-3 && a != 1.0);
        cfg.seed = 8;
        assert_ne!(a, cfg.radial_config_at(&task, 3).s0);
    }
}

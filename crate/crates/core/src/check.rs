//! Invariant suite behind the `check` command: model validation, thermo
//! identities, and equilibrium identities for every equilibria task.

use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, TaskSpec};
use crate::thermo::{log_samples, Phase};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckItem {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckItem {
    fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self { name: name.into(), measured, tolerance, passed: measured <= tolerance, detail: String::new() }
    }

    fn failure(name: impl Into<String>, detail: String) -> Self {
        Self { name: name.into(), measured: f64::NAN, tolerance: 0.0, passed: false, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub checks: Vec<CheckItem>,
    pub warnings: Vec<String>,
    pub passed: bool,
    /// True when the material itself failed validation.
    pub invalid_model: bool,
}

/// Runs every applicable invariant and collects measured values.
pub fn run_check_suite(config: &RunConfig) -> CheckReport {
    let mut checks = Vec::new();
    let mut warnings = Vec::new();
    if config.tasks.is_empty() {
        warnings.push("empty task list: nothing to check".into());
        return CheckReport { checks, warnings, passed: true, invalid_model: false };
    }
    let model = config.model();
    let invalid_model = match model.validate() {
        Ok(()) => {
            checks.push(CheckItem::at_most("material validation", 0.0, 0.0));
            false
        }
        Err(e) => {
            checks.push(CheckItem::failure("material validation", e.to_string()));
            true
        }
    };
    if !invalid_model {
        thermo_identities(config, &mut checks);
        for (i, task) in config.tasks.iter().enumerate() {
            if let TaskSpec::Equilibria(t) = task {
                equilibrium_identities(config, i, t, &mut checks);
            }
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    CheckReport { checks, warnings, passed, invalid_model }
}

fn thermo_identities(config: &RunConfig, checks: &mut Vec<CheckItem>) {
    let model = config.model();
    let (lo, hi) = model.interval;
    // stay in a moderate range where central differences are meaningful
    let (a, b) = (lo.max(1e-3), hi.min(1e3));
    let mut eps_kappa: f64 = 0.0;
    let mut latent: f64 = 0.0;
    let mut h_prime: f64 = 0.0;
    for u in log_samples(a, b, 200) {
        let du = 1e-5 * u;
        for p in Phase::BOTH {
            let fd = (model.eps_raw(p, u + du) - model.eps_raw(p, u - du)) / (2.0 * du);
            let k = model.kappa_raw(p, u);
            eps_kappa = eps_kappa.max((fd - k).abs() / k.abs().max(1.0));
        }
        let jump_eta = model.eta_raw(Phase::Two, u) - model.eta_raw(Phase::One, u);
        let l = model.latent_raw(u);
        latent = latent.max((l + u * jump_eta).abs() / l.abs().max(1.0));
        let fd = (model.h_raw(u + du) - model.h_raw(u - du)) / (2.0 * du);
        let hp = model.h_prime_raw(u);
        h_prime = h_prime.max((fd - hp).abs() / hp.abs().max(1.0));
    }
    checks.push(CheckItem::at_most("thermo: d(eps)/du = kappa (central differences)", eps_kappa, 1e-6));
    checks.push(CheckItem::at_most("thermo: l = -u [[eta]]", latent, 1e-12));
    checks.push(CheckItem::at_most("thermo: h' analytic vs central differences", h_prime, 1e-6));
}

fn equilibrium_identities(config: &RunConfig, index: usize, task: &crate::config::EquilibriaTask, checks: &mut Vec<CheckItem>) {
    let problem = config.equilibrium_problem(task);
    let label = format!("tasks[{index}] equilibria (m = {}, E0 = {})", task.spheres, task.energy);
    let points = match problem.find_equilibria() {
        Ok(p) => p,
        Err(e) => {
            checks.push(CheckItem::failure(label, e.to_string()));
            return;
        }
    };
    let mut phi_identity: f64 = 0.0;
    let mut energy_residual: f64 = 0.0;
    let mut h_form: f64 = 0.0;
    for p in &points {
        let u = p.temperature;
        let l = problem.model.latent_raw(u);
        let area = problem.interface_area(p.radius);
        let rhs = (p.zeta - 1.0) * l * l * p.radius * p.radius * area / (problem.sigma * u);
        phi_identity = phi_identity.max((p.phi_prime - rhs).abs() / p.phi_prime.abs().max(1e-300));
        if let (Ok(a), Ok(b)) = (problem.phi(u), problem.phi_h_form(u)) {
            energy_residual = energy_residual.max((a - task.energy).abs() / task.energy.abs().max(1.0));
            h_form = h_form.max((a - b).abs() / a.abs().max(1.0));
        }
    }
    let mut count = CheckItem::at_most(format!("{label}: equilibria found"), 0.0, 0.0);
    count.detail = format!("{} equilibria", points.len());
    checks.push(count);
    checks.push(CheckItem::at_most(format!("{label}: phi' = (zeta - 1) l^2 R^2 |Gamma| / (sigma u)"), phi_identity, 1e-8));
    checks.push(CheckItem::at_most(format!("{label}: phi(u*) = E0"), energy_residual, 1e-10));
    checks.push(CheckItem::at_most(format!("{label}: phi and its h-form agree"), h_form, 1e-12));
}

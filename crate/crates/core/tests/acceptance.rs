//! Acceptance gates. Runs without the libtest harness and prints one line
//! per criterion; exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use stefanlab_core::equilibria::{DomainSpec, EquilibriumPoint, EquilibriumProblem};
use stefanlab_core::geometry::{sh_index, HeightField, SphereChart};
use stefanlab_core::simulate::{
    fit_exponential, positive_eigenvalue_count, reduced_jacobian, InitialProfile, RadialStefan, RadialStefanConfig,
    RipeningConfig, RunOutput, StopReason,
};
use stefanlab_core::spectral::{
    b_lambda_scan, count_positive_eigenvalues, mode_determinant, ntd_matrix, MultiDiscConfig, SpectralConfig,
    KERNEL_PROBE,
};
use stefanlab_core::thermo::{Coefficient, FreeEnergyModel};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn model() -> FreeEnergyModel {
    FreeEnergyModel::equal_heat_capacity([1.0, 0.0], [0.0, 1.0], 1.0)
}

fn problem(energy: f64) -> EquilibriumProblem {
    let domain = DomainSpec::new(2, 9.0 * PI).with_packing_radii(vec![3.0, 1.5]);
    EquilibriumProblem::new(model(), domain, 1.0, 1, energy)
}

fn concentric(u: f64, r_star: f64) -> SpectralConfig {
    SpectralConfig::from_model(&model(), 2, 1.0, u, r_star, 3.0, 8).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn criterion_1() -> Outcome {
    let oracles = [(1.5, -15.0 * PI, 0.375), (2.0, 5.0 * PI, 2.25)];
    let mut worst: f64 = 0.0;
    let mut found = 0;
    for energy in [21.5 * PI, 21.0 * PI] {
        let p = problem(energy);
        let points = p.find_equilibria().map_err(|e| e.to_string())?;
        ensure(!points.is_empty(), format!("no equilibria for E0 = {energy}"))?;
        for q in &points {
            let u = q.temperature;
            let l = p.model.latent_l(u).unwrap();
            let rhs = (q.zeta - 1.0) * l * l * q.radius * q.radius * p.interface_area(q.radius) / (p.sigma * u);
            worst = worst.max((q.phi_prime - rhs).abs() / q.phi_prime.abs());
            found += 1;
        }
    }
    ensure(worst <= 1e-8, format!("identity defect {worst:e}"))?;
    let p = problem(21.5 * PI);
    for (u, dphi, zeta) in oracles {
        let d = p.phi_prime(u).map_err(|e| e.to_string())?;
        let z = p.zeta(u).map_err(|e| e.to_string())?;
        ensure(rel(d, dphi) < 1e-10 && rel(z, zeta) < 1e-12, format!("u = {u}: phi' = {d}, zeta = {z}"))?;
    }
    Ok(format!("{found} equilibria, max relative defect {worst:.1e}"))
}

fn criterion_2() -> Outcome {
    let p = problem(0.0);
    let intervals = p.admissible_intervals().map_err(|e| e.to_string())?;
    ensure(intervals.len() == 1, format!("expected one admissible interval, got {intervals:?}"))?;
    let (a, b) = intervals[0];
    let u_min = p.minimize_phi(a, b);
    let phi_min = p.phi(u_min).map_err(|e| e.to_string())?;
    for (factor, expect) in [(1.01, 2), (0.99, 0)] {
        let found = problem(factor * phi_min).find_equilibria().map_err(|e| e.to_string())?.len();
        ensure(found == expect, format!("E0 = {factor} min phi: {found} equilibria, expected {expect}"))?;
    }
    // strict convexity of the reduced energy above the melting temperature
    let mut worst = f64::INFINITY;
    for k in 0..200 {
        let u = 1.0 + 10f64.powf(-3.0 + 5.0 * k as f64 / 199.0);
        let h = 1e-4 * (u - 1.0);
        let f = |x: f64| p.reduced_energy(x).unwrap();
        let second = (f(u + h) - 2.0 * f(u) + f(u - h)) / (h * h);
        worst = worst.min(second);
    }
    ensure(worst > 0.0, format!("second difference {worst:e}"))?;
    Ok(format!("min phi = {phi_min:.6} at u = {u_min:.6}; min second difference {worst:.3e}"))
}

fn criterion_3() -> Outcome {
    let mut details = Vec::new();
    for (u, r) in [(2.0, 1.0), (1.5, 2.0)] {
        let cfg = concentric(u, r);
        let res = count_positive_eigenvalues(&cfg).map_err(|e| e.to_string())?;
        ensure(res.kernel_modes == vec![0, 1], format!("kernel modes {:?}", res.kernel_modes))?;
        ensure(res.kernel_dimension == 3, format!("kernel dimension {}", res.kernel_dimension))?;
        let scale = cfg.determinant_scale();
        for mode in 0..=8 {
            let d = mode_determinant(&cfg, KERNEL_PROBE, mode).map_err(|e| e.to_string())?.abs() / scale;
            if mode <= 1 {
                ensure(d <= 1e-6, format!("mode {mode}: |D|/scale = {d:e}"))?;
            } else {
                ensure(d >= 1e-2, format!("mode {mode}: |D|/scale = {d:e}"))?;
            }
        }
        details.push(format!("u = {u}: kernel modes {:?}, dimension {}", res.kernel_modes, res.kernel_dimension));
    }
    Ok(details.join("; "))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut details = Vec::new();
    for (u, r, expect) in [(2.0, 1.0, 1), (1.5, 2.0, 0)] {
        for (dscale, gamma) in [(1.0, 0.0), (2.0, 0.0), (1.0, 0.5), (2.0, 0.5)] {
            let mut cfg = concentric(u, r);
            cfg.conductivity = cfg.conductivity.map(|d| d * dscale);
            cfg.gamma = gamma;
            let res = count_positive_eigenvalues(&cfg).map_err(|e| e.to_string())?;
            ensure(
                res.positive_count == expect && res.suspect_count() == 0,
                format!(
                    "zeta = {:.3}, d x{dscale}, gamma = {gamma}: {} positive, {} suspect",
                    cfg.zeta(),
                    res.positive_count,
                    res.suspect_count()
                ),
            )?;
        }
        details.push(format!("zeta = {:.3}: {expect}", concentric(u, r).zeta()));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs <= 60.0, format!("runtime {secs:.1} s"))?;
    Ok(format!("{} ({secs:.1} s)", details.join(", ")))
}

fn two_discs(unstable: bool, grid: usize) -> MultiDiscConfig {
    let (side, radius, centers, u) = if unstable {
        (6.0, 1.0, vec![[1.5, 3.0], [4.5, 3.0]], 2.0)
    } else {
        (10.0, 2.0, vec![[2.5, 5.0], [7.5, 5.0]], 1.5)
    };
    MultiDiscConfig {
        width: side,
        height: side,
        centers,
        radius,
        grid,
        quadrature: 64,
        temperature: u,
        kappa: [1.0, 1.0],
        conductivity: [1.0, 1.0],
        latent: u,
        gamma: 0.0,
        sigma: 1.0,
    }
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let cfg = two_discs(true, 160);
    let mut norms = Vec::new();
    let mut worst_sym: f64 = 0.0;
    let mut worst_psd: f64 = 0.0;
    for lambda in [1e-4, 1.0, 10.0, 100.0] {
        let n = ntd_matrix(&cfg, lambda).map_err(|e| e.to_string())?;
        let norm = n.norm();
        worst_sym = worst_sym.max(n.symmetry_defect());
        worst_psd = worst_psd.max((-n.min_eigenvalue()).max(0.0) / norm);
        if lambda == 1e-4 {
            let ones = vec![1.0; n.dim()];
            let measured = lambda * n.quadratic_form(&ones);
            let area = cfg.interface_measure();
            let target = area * area / cfg.heat_capacity_integral();
            let dev = rel(measured, target);
            ensure(dev <= 0.02, format!("lambda (N e|e) = {measured}, expected {target} ({:.2}%)", 100.0 * dev))?;
        } else {
            norms.push(norm);
        }
    }
    ensure(worst_sym <= 1e-8 && worst_psd <= 1e-8, format!("symmetry {worst_sym:e}, PSD {worst_psd:e}"))?;
    ensure(norms.windows(2).all(|w| w[1] < w[0]), format!("norms {norms:?} not decreasing"))?;
    Ok(format!(
        "symmetry {worst_sym:.1e}, PSD {worst_psd:.1e}, norms {:.4e} > {:.4e} > {:.4e} ({:.0} s)",
        norms[0],
        norms[1],
        norms[2],
        start.elapsed().as_secs_f64()
    ))
}

fn criterion_6() -> Outcome {
    let mut details = Vec::new();
    for (unstable, expect) in [(true, 2), (false, 1)] {
        let cfg = two_discs(unstable, 80);
        let zeta = cfg.zeta();
        let scan = b_lambda_scan(&cfg, 1e-6, 16).map_err(|e| e.to_string())?;
        ensure(scan.crossings == expect, format!("zeta = {zeta:.3}: {} crossings, expected {expect}", scan.crossings))?;
        let volume = cfg.width * cfg.height;
        let ripening = RipeningConfig {
            model: model().with_undercooling(Coefficient::Constant(1.0)),
            sigma: 1.0,
            dim: 2,
            volume,
            radii: vec![cfg.radius; 2],
            initial_temperature: cfg.temperature,
            dt: 0.01,
            t_end: 1.0,
            max_steps: 1000,
            min_radius: 1e-3,
            sample_every: 1,
        };
        let jac = reduced_jacobian(&ripening, cfg.temperature, cfg.radius, 2);
        let count = positive_eigenvalue_count(&jac, 1e-12);
        ensure(count == expect, format!("zeta = {zeta:.3}: reduced Jacobian has {count} positive eigenvalues"))?;
        details.push(format!("zeta = {zeta:.3}: {expect} crossings"));
    }
    Ok(details.join(", "))
}

/// Compatible at the front, tilted in the bulk.
fn tilted(s0: f64, slope: f64) -> InitialProfile {
    // h(u) = u − 1 and σ = 1
    let uc = 1.0 + 1.0 / s0;
    InitialProfile::Function(Arc::new(move |r| uc + slope * (r - s0)))
}

fn radial(s0: f64, slope: f64, gamma: f64, dim: usize, t_end: f64) -> RadialStefan {
    let m = if gamma > 0.0 { model().with_undercooling(Coefficient::Constant(gamma)) } else { model() };
    let mut cfg = RadialStefanConfig::new(m, 1.0, dim, 3.0, s0);
    cfg.cells = [100, 100];
    cfg.initial = tilted(s0, slope);
    cfg.t_end = t_end;
    cfg.dt_max = 0.01;
    RadialStefan::new(cfg).unwrap()
}

fn check_run(out: &RunOutput, label: &str) -> Result<(), String> {
    ensure(
        out.max_energy_drift <= 1e-6 && out.min_entropy_increment >= -1e-8,
        format!("{label}: energy drift {:e}, entropy increment {:e}", out.max_energy_drift, out.min_entropy_increment),
    )
}

fn criterion_7() -> Outcome {
    let mut worst_drift: f64 = 0.0;
    let mut worst_dphi: f64 = 0.0;
    for (label, s0, slope, gamma, dim) in
        [("n=2", 2.0, 0.05, 0.0, 2), ("n=2 gamma", 1.8, 0.05, 0.5, 2), ("n=3", 1.2, -0.05, 0.0, 3)]
    {
        let sim = radial(s0, slope, gamma, dim, 2.0);
        let out = sim.run().map_err(|e| format!("{label}: {e}"))?;
        check_run(&out, label)?;
        worst_drift = worst_drift.max(out.max_energy_drift);
        worst_dphi = worst_dphi.min(out.min_entropy_increment);
    }
    // dΦ/dt from one step against the production formula, under dt halving
    // measured once the start-up transient of the rough initial data has decayed
    let sim = radial(2.0, 0.05, 0.0, 2, 1.0);
    let mut s0 = sim.initial_state().map_err(|e| e.to_string())?;
    while s0.t < 0.2 {
        s0 = sim.step(&s0).map_err(|e| e.to_string())?;
    }
    let (phi0, p0) = (sim.entropy(&s0), sim.entropy_production(&s0));
    let quotient = |dt: f64| -> Result<f64, String> {
        let s1 = sim.step_with(&s0, dt).map_err(|e| e.to_string())?;
        Ok((sim.entropy(&s1) - phi0) / dt)
    };
    let dts = [4e-3, 2e-3, 1e-3, 5e-4];
    let q: Vec<f64> = dts.iter().map(|&dt| quotient(dt)).collect::<Result<_, _>>()?;
    let ratios: Vec<f64> = q.windows(3).map(|w| (w[0] - w[1]) / (w[1] - w[2])).collect();
    ensure(ratios.iter().all(|r| (r - 2.0).abs() < 0.25), format!("halving ratios {ratios:?}"))?;
    let limit = 2.0 * q[3] - q[2];
    let mismatch = rel(limit, p0);
    ensure(mismatch < 1e-2, format!("extrapolated dPhi/dt {limit} vs production {p0}"))?;
    Ok(format!(
        "drift {worst_drift:.1e}, min dPhi {worst_dphi:.1e}, halving ratios {:.3}/{:.3}, production mismatch {mismatch:.1e}",
        ratios[0], ratios[1]
    ))
}

fn equilibrium_for(energy: f64, stable: bool) -> Result<EquilibriumPoint, String> {
    let points = problem(energy).find_equilibria().map_err(|e| e.to_string())?;
    points
        .into_iter()
        .find(|p| (p.zeta < 1.0) == stable)
        .ok_or_else(|| format!("no {} equilibrium at E0 = {energy}", if stable { "stable" } else { "unstable" }))
}

fn criterion_8() -> Outcome {
    // stable start near u = 1.5, R = 2
    let sim = radial(2.0, 0.05, 0.0, 2, 40.0);
    let out = sim.run().map_err(|e| e.to_string())?;
    check_run(&out, "stable")?;
    ensure(out.stop == StopReason::EndTime, format!("stable run stopped: {:?}", out.stop))?;
    let e0 = out.samples[0].energy;
    let eq = equilibrium_for(e0, true)?;
    let fin = &out.final_state;
    let (du, ds) = (rel(fin.u_interface, eq.temperature), rel(fin.s, eq.radius));
    ensure(du <= 5e-3 && ds <= 5e-3, format!("final (u, s) = ({}, {}) vs ({}, {})", fin.u_interface, fin.s, eq.temperature, eq.radius))?;
    let (t, y): (Vec<f64>, Vec<f64>) = out
        .samples
        .iter()
        .map(|s| (s.t, s.fronts[0] - fin.s))
        .filter(|&(t, y)| t >= 2.0 && y.abs() > 1e-9)
        .unzip();
    let fit = fit_exponential(&t, &y);
    ensure(fit.r_squared >= 0.99 && fit.slope < 0.0, format!("log-linear fit {fit:?}"))?;

    // unstable start near u = 2, R = 1
    let sim = radial(1.0, 0.01, 0.0, 2, 40.0);
    let out = sim.run().map_err(|e| e.to_string())?;
    check_run(&out, "unstable")?;
    let e1 = out.samples[0].energy;
    let star = equilibrium_for(e1, false)?;
    let dev: Vec<f64> = out.samples.iter().map(|s| (s.fronts[0] - star.radius).abs()).collect();
    let peak = dev.iter().enumerate().fold((0, 0.0), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc }).0;
    let first = dev.iter().position(|&d| d > 0.0).unwrap_or(0);
    let rising = &dev[first..=peak];
    ensure(rising.windows(2).all(|w| w[1] >= w[0]), "deviation not monotone before its peak".into())?;
    let growth = dev[peak] / dev[first];
    ensure(growth >= 10.0, format!("deviation grew only {growth:.2}x"))?;
    Ok(format!(
        "stable: rate {:.4}, R^2 {:.5}, final error ({du:.1e}, {ds:.1e}); unstable: growth {growth:.1}x, stop {:?}",
        fit.slope, fit.r_squared, out.stop
    ))
}

fn criterion_9() -> Outcome {
    let mut worst_const: f64 = 0.0;
    let mut worst_lin: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    for dim in [2, 3] {
        for r in [0.5, 1.0, 3.0] {
            let chart = SphereChart::new(dim, r).map_err(|e| e.to_string())?;
            for c in [-0.1 * r, 0.0, 0.2 * r] {
                let h = chart.mean_curvature(&HeightField::constant(dim, c)).map_err(|e| e.to_string())?;
                worst_const = h.iter().fold(worst_const, |a, v| a.max((v + 1.0 / (r + c)).abs()));
            }
        }
    }
    let chart = SphereChart::new(2, 2.0).unwrap();
    for k in 0..12usize {
        let exact = (1.0 - (k * k) as f64) / 4.0;
        worst_lin = worst_lin.max((chart.linearized_eigenvalue((k * k) as f64) - exact).abs());
        let rho = HeightField::circle_mode(k, 1.0, k % 2 == 1);
        let lin = chart.linearized_curvature(&rho).unwrap().grid_values();
        let base = rho.grid_values();
        worst_lin = lin.iter().zip(&base).fold(worst_lin, |a, (l, b)| a.max((l - exact * b).abs()));
    }
    for dim in [2, 3] {
        let chart = SphereChart::new(dim, 1.0).unwrap();
        let rho = if dim == 2 {
            HeightField::circle(vec![(0.0, 0.0), (0.3, 0.1), (0.5, -0.2), (0.0, 0.4)])
        } else {
            let mut c = vec![0.0; 25];
            c[sh_index(1, 1)] = 0.2;
            c[sh_index(2, 0)] = 0.5;
            c[sh_index(3, -2)] = -0.3;
            HeightField::sphere(4, c)
        };
        let amp = 1e-6;
        let h0 = chart.mean_curvature(&rho.scaled(0.0)).unwrap();
        let h = chart.mean_curvature(&rho.scaled(amp)).unwrap();
        let lin = chart.linearized_curvature(&rho).unwrap().grid_values();
        let norm = lin.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let err = h.iter().zip(&h0).zip(&lin).fold(0.0f64, |a, ((h, h0), l)| a.max(((h - h0) / amp - l).abs()));
        worst_fd = worst_fd.max(err / norm);
    }
    ensure(worst_const <= 1e-10, format!("constant shift {worst_const:e}"))?;
    ensure(worst_lin <= 1e-12, format!("linearized eigenvalues {worst_lin:e}"))?;
    ensure(worst_fd <= 1e-4, format!("nonlinear vs linearized {worst_fd:e}"))?;
    Ok(format!("constant shift {worst_const:.1e}, linear modes {worst_lin:.1e}, amplitude 1e-6 {worst_fd:.1e}"))
}

fn main() {
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 equilibrium identity", criterion_1),
        ("2 reduced energy structure", criterion_2),
        ("3 kernel dimension", criterion_3),
        ("4 eigenvalue counts", criterion_4),
        ("5 Neumann-to-Dirichlet map", criterion_5),
        ("6 multi-disc instability", criterion_6),
        ("7 conservation and entropy", criterion_7),
        ("8 nonlinear stability", criterion_8),
        ("9 curvature", criterion_9),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        if !only.is_empty() && !only.iter().any(|o| name.starts_with(o.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {name}: PASS [{secs:.1} s] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {name}: FAIL [{secs:.1} s] {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

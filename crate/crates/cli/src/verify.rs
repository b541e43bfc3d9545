//! Verification suites over the built-in presets.

use std::path::PathBuf;

use kyleback_core::coefficients::{Perturbed, Scaled};
use kyleback_core::deterministic::{solve_riccati_with, RiccatiOptions};
use kyleback_core::equilibrium::{
    directional_derivatives, foc_residual, objective_from, solve_optimal_g0, test_directions, G0ClosedForm,
};
use kyleback_core::simulation::{measure_checks, summarize, variance_checks, FilterOracle, Probe, Scheme};
use kyleback_core::{
    export, objective_jbar, presets, solve_riccati, Intensity, PathModel, Result, RiccatiSolution, ScenarioConfig,
    TimeFunction, TimeGrid,
};
use serde_json::json;

use crate::commands::{CHECKPOINTS, Z_TOL};
use crate::report::{RunReport, Status};

pub const FD_STEP: f64 = 1e-4;
const DEFAULT_PATHS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Riccati,
    Variational,
    Foc,
    Measure,
    Filter,
    All,
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }

    fn label(self) -> &'static str {
        match self {
            Suite::Riccati => "riccati",
            Suite::Variational => "variational",
            Suite::Foc => "foc",
            Suite::Measure => "measure",
            Suite::Filter => "filter",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyArgs {
    pub suite: Suite,
    pub out: PathBuf,
    pub paths: Option<usize>,
    pub seed: u64,
    pub corrupt_riccati: bool,
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<RunReport> {
    if args.paths == Some(0) {
        return Err(kyleback_core::KyleError::validation("n_paths", "n_paths must be ≥ 1"));
    }
    let mut report = RunReport::new(args.suite.label(), &args.out);
    let paths = args.paths.unwrap_or(DEFAULT_PATHS);
    if args.suite.includes(Suite::Riccati) {
        riccati_suite(&mut report, args.corrupt_riccati)?;
    }
    if args.suite.includes(Suite::Variational) {
        variational_suite(&mut report)?;
    }
    if args.suite.includes(Suite::Foc) {
        foc_suite(&mut report)?;
    }
    if args.suite.includes(Suite::Measure) {
        measure_suite(&mut report, paths, args.seed)?;
    }
    if args.suite.includes(Suite::Filter) {
        filter_suite(&mut report, paths, args.seed)?;
    }
    report.finish()?;
    Ok(report)
}

fn sup_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn sup_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `sup|a - b| / sup|b|`, zero when the two agree exactly.
pub fn normwise(analytic: &[f64], reference: &[f64]) -> f64 {
    let gap = sup_gap(analytic, reference);
    if gap == 0.0 {
        0.0
    } else {
        gap / sup_abs(reference)
    }
}

fn riccati(cfg: &ScenarioConfig, beta: &dyn Intensity, grid: &TimeGrid, corrupt: bool) -> Result<RiccatiSolution> {
    let opts = RiccatiOptions {
        corrupt_drift: corrupt,
        ..Default::default()
    };
    solve_riccati_with(&cfg.coefficients, beta, grid, &opts)
}

fn riccati_suite(report: &mut RunReport, corrupt: bool) -> Result<()> {
    for cfg in presets::all() {
        let c = &cfg.coefficients;
        let name = &cfg.name;
        let beta = cfg.resolve_strategy()?;
        let n = cfg.numerics.n_ode_steps;
        let fine = riccati(&cfg, &beta, &TimeGrid::uniform(cfg.t_eff(), n), corrupt);
        let coarse = riccati(&cfg, &beta, &TimeGrid::uniform(cfg.t_eff(), n / 2), corrupt);
        let closed = c.g_vanishes().then(|| G0ClosedForm::new(c)).transpose()?;
        let (ric, coarse) = match (fine, coarse) {
            (Ok(f), Ok(h)) => (f, h),
            (Err(e), _) | (_, Err(e)) => {
                log::error!("{name}: {e}");
                let mut labels = vec!["solve", "positivity", "bound", "identity", "refinement"];
                if closed.is_some() {
                    labels.push("closed_form");
                }
                for label in labels {
                    report.push(format!("riccati.{name}.{label}"), Status::Fail, f64::NAN, 0.0);
                }
                continue;
            }
        };
        report.push(format!("riccati.{name}.solve"), Status::Pass, 0.0, 0.0);
        report.check_ge(format!("riccati.{name}.positivity"), ric.min_s(), 0.0, Status::Fail);
        report.check_le(format!("riccati.{name}.bound"), ric.max_s() / ric.bound, 1.0, Status::Fail);
        report.check_le(
            format!("riccati.{name}.identity"),
            sup_abs(&ric.phi3_identity_residual()),
            1e-6,
            Status::Fail,
        );
        let every_other: Vec<f64> = ric.s.iter().step_by(2).copied().collect();
        report.check_le(
            format!("riccati.{name}.refinement"),
            sup_gap(&every_other, &coarse.s),
            1e-6,
            Status::Fail,
        );
        if let Some(form) = closed {
            let exact: Vec<f64> = ric.grid.values().iter().map(|&t| form.variance(t)).collect();
            report.check_le(format!("riccati.{name}.closed_form"), sup_gap(&ric.s, &exact), 1e-6, Status::Fail);
        }
    }
    Ok(())
}

/// Worst relative error of the five directional derivatives against central differences.
pub fn derivative_errors(
    cfg: &ScenarioConfig,
    beta: &dyn Intensity,
    xi: &TimeFunction,
    grid: &TimeGrid,
) -> Result<[(&'static str, f64); 5]> {
    let c = &cfg.coefficients;
    let d = directional_derivatives(c, beta, xi, grid)?;
    let plus = solve_riccati(c, &Perturbed { base: beta, direction: xi, step: FD_STEP }, grid)?;
    let minus = solve_riccati(c, &Perturbed { base: beta, direction: xi, step: -FD_STEP }, grid)?;
    let fd = |pick: &dyn Fn(&RiccatiSolution) -> Vec<f64>| -> Vec<f64> {
        pick(&plus)
            .iter()
            .zip(pick(&minus))
            .map(|(a, b)| (a - b) / (2.0 * FD_STEP))
            .collect()
    };
    let inverse = |r: &RiccatiSolution| r.log_phi1.iter().map(|l| (-l).exp()).collect::<Vec<f64>>();
    let fd_jbar = (objective_from(&plus)?.jbar - objective_from(&minus)?.jbar) / (2.0 * FD_STEP);
    // at a stationary point the derivative is a cancellation of O(1) terms, so
    // the error is measured against their size
    let jbar_err = (d.djbar - fd_jbar).abs() / fd_jbar.abs().max(d.djbar_scale);
    Ok([
        ("dS", normwise(&d.ds, &fd(&|r| r.s.clone()))),
        ("dphi1_t0", normwise(&d.dphi1_t0, &fd(&|r| r.phi1_t0.clone()))),
        ("dphi1_0t", normwise(&d.dphi1_0t, &fd(&inverse))),
        ("dphi3_Tt", normwise(&d.dphi3_tt, &fd(&|r| r.phi3_tt.clone()))),
        ("dJbar", jbar_err),
    ])
}

fn variational_suite(report: &mut RunReport) -> Result<()> {
    for cfg in presets::all() {
        let c = &cfg.coefficients;
        let beta = cfg.resolve_strategy()?;
        let grid = TimeGrid::uniform(cfg.t_eff(), 10_000);
        for (dir, xi) in test_directions(c.horizon) {
            for (what, err) in derivative_errors(&cfg, &beta, &xi, &grid)? {
                report.check_le(format!("variational.{}.{dir}.{what}", cfg.name), err, 1e-4, Status::Fail);
            }
        }
        if !c.g_vanishes() {
            continue;
        }
        let grid = TimeGrid::uniform(cfg.t_eff(), cfg.numerics.n_ode_steps);
        let eq = solve_optimal_g0(c, &grid)?;
        let best = objective_jbar(c, &eq.beta, &grid)?.jbar;
        for (dir, xi) in test_directions(c.horizon) {
            let d = directional_derivatives(c, &eq.beta, &xi, &grid)?;
            report.check_le(
                format!("variational.{}.{dir}.stationary", cfg.name),
                d.djbar.abs(),
                1e-3 * best.abs().max(1.0),
                Status::Fail,
            );
        }
        let mut worst = f64::NEG_INFINITY;
        for eps in [-0.1, -0.05, 0.05, 0.1] {
            let other = objective_jbar(c, &Scaled { base: &eq.beta, factor: 1.0 + eps }, &grid)?.jbar;
            worst = worst.max(other - best);
        }
        report.check_le(format!("variational.{}.local_max", cfg.name), worst, 1e-6, Status::Fail);
    }
    Ok(())
}

fn foc_suite(report: &mut RunReport) -> Result<()> {
    let mut data = serde_json::Map::new();
    for cfg in presets::all() {
        let c = &cfg.coefficients;
        let name = &cfg.name;
        let grid = TimeGrid::uniform(cfg.t_eff(), cfg.numerics.n_ode_steps);
        if !c.g_vanishes() {
            let beta = cfg.resolve_strategy()?;
            let r = foc_residual(c, &beta, &grid)?;
            data.insert(
                name.clone(),
                json!({"form": "general", "sup": r.sup, "l2": r.l2, "sup_psi": r.sup_psi, "l2_psi": r.l2_psi}),
            );
            continue;
        }
        let eq = solve_optimal_g0(c, &grid)?;
        let optimum = foc_residual(c, &eq.beta, &grid)?;
        report.check_le(format!("foc.{name}.optimum"), optimum.sup, 1e-4, Status::Fail);
        let flat = foc_residual(c, &TimeFunction::constant(1.0), &grid)?;
        report.check_ge(format!("foc.{name}.constant_intensity"), flat.sup, 0.1, Status::Fail);
        let mut sups = vec![optimum.sup];
        for eps in [0.01, 0.02, 0.04] {
            sups.push(foc_residual(c, &Scaled { base: &eq.beta, factor: 1.0 + eps }, &grid)?.sup);
        }
        let growth = sups.windows(2).map(|w| w[1] / w[0]).fold(f64::INFINITY, f64::min);
        report.check_ge(format!("foc.{name}.monotone"), growth, 1.0, Status::Fail);
        data.insert(
            name.clone(),
            json!({"form": "reduced", "sup": optimum.sup, "l2": optimum.l2, "constant_sup": flat.sup, "perturbed_sup": sups}),
        );
    }
    report.write("foc.json", &export::to_json(&data))
}

fn measure_suite(report: &mut RunReport, paths: usize, seed: u64) -> Result<()> {
    let cfg = presets::preset("static_kyle")?.with_delta(0.1)?;
    let beta = cfg.resolve_strategy()?;
    let t_eff = cfg.t_eff();
    let times = [0.25, 0.5, t_eff];
    let grid = TimeGrid::graded(t_eff, cfg.coefficients.horizon, cfg.numerics.n_sde_steps, &times);
    let model = PathModel::new(&cfg.coefficients, &beta, grid)?;
    let probe = Probe::new(&model.grid, &times);
    let reference = model.run(Scheme::Reference, paths, seed, |_, b| summarize(&model, &probe, b))?;
    let physical = model.run(Scheme::ClosedLoop, paths, seed + 1, |_, b| summarize(&model, &probe, b))?;
    let checks = measure_checks(&probe, &reference, &physical);
    for m in &checks {
        let t = m.t;
        let z_weight = if m.weight_mean == 1.0 { 0.0 } else { (m.weight_mean - 1.0).abs() / m.weight_stderr };
        report.check_le(format!("measure.weight@t={t:.4}"), z_weight, Z_TOL, Status::Fail);
        report.check_le(format!("measure.mean@t={t:.4}"), m.z_mean, Z_TOL, Status::Fail);
        report.check_le(format!("measure.variance@t={t:.4}"), m.z_variance, Z_TOL, Status::Fail);
    }
    report.write("measure.json", &export::to_json(&checks))
}

fn filter_suite(report: &mut RunReport, paths: usize, seed: u64) -> Result<()> {
    for cfg in presets::all() {
        let c = &cfg.coefficients;
        let name = &cfg.name;
        let beta = cfg.resolve_strategy()?;
        let t_eff = cfg.t_eff();

        let coarse = PathModel::new(c, &beta, TimeGrid::graded(t_eff, c.horizon, 150, &[]))?;
        let obs: Vec<f64> = (0..16).map(|k| t_eff * k as f64 / 15.0).collect();
        let oracle = FilterOracle::new(&coarse, &obs)?;
        let gap = coarse
            .simulate(Scheme::ClosedLoop, 4, seed)?
            .iter()
            .map(|p| oracle.max_gap(p))
            .fold(0.0, f64::max);
        report.check_le(format!("filter.{name}.oracle"), gap, 1e-3, Status::Fail);

        let checkpoints: Vec<f64> = CHECKPOINTS.iter().map(|f| f * t_eff).collect();
        let grid = TimeGrid::graded(t_eff, c.horizon, cfg.numerics.n_sde_steps, &checkpoints);
        let model = PathModel::new(c, &beta, grid)?;
        let probe = Probe::new(&model.grid, &checkpoints);
        let summaries = model.run(Scheme::ClosedLoop, paths, seed, |_, b| summarize(&model, &probe, b))?;
        for v in variance_checks(&model, &probe, &summaries) {
            report.check_le(format!("filter.{name}.variance@t={:.4}", v.t), v.z, Z_TOL, Status::Fail);
        }
    }
    Ok(())
}

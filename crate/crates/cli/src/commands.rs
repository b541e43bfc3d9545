use std::path::PathBuf;

use kyleback_core::coefficients::ResolvedStrategy;
use kyleback_core::equilibrium::{delta_sweep, foc_from, objective_density, objective_from, FocForm, SweepPoint};
use kyleback_core::simulation::{
    orthogonality, payoff_estimate, summarize, terminal_rows, variance_checks, Probe, Scheme,
};
use kyleback_core::{
    export, objective_jbar, solve_optimal_g0, solve_riccati, KyleError, PathModel, Result, ScenarioConfig,
    TimeFunction, TimeGrid,
};
use serde_json::json;

use crate::report::{RunReport, Status};

/// Truncations of the terminal sweep, as fractions of the horizon.
pub const SWEEP: [f64; 3] = [0.1, 0.01, 0.001];
/// Variance checkpoints, as fractions of the truncated horizon.
pub const CHECKPOINTS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
/// Monte Carlo discrepancies above this many standard errors are flagged.
pub const Z_TOL: f64 = 3.0;

#[derive(Debug, Clone, Default)]
pub struct SolveArgs {
    pub out: Option<PathBuf>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct SimulateArgs {
    pub out: Option<PathBuf>,
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    pub delta: Option<f64>,
    pub dump_paths: usize,
}

fn out_dir(cfg: &ScenarioConfig, arg: &Option<PathBuf>) -> PathBuf {
    arg.clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name))
}

fn truncated(cfg: &ScenarioConfig, delta: Option<f64>) -> Result<ScenarioConfig> {
    match delta {
        Some(d) => cfg.with_delta(d),
        None => Ok(cfg.clone()),
    }
}

fn sweep_deltas(cfg: &ScenarioConfig) -> Vec<f64> {
    SWEEP.iter().map(|f| f * cfg.coefficients.horizon).collect()
}

/// Riccati solution, objective and optimality residual of the scenario's strategy.
pub fn cmd_solve(cfg: &ScenarioConfig, args: &SolveArgs) -> Result<RunReport> {
    let cfg = truncated(cfg, args.delta)?;
    let c = &cfg.coefficients;
    let mut report = RunReport::new(&cfg.name, &out_dir(&cfg, &args.out));
    let grid = TimeGrid::uniform(cfg.t_eff(), cfg.numerics.n_ode_steps);

    let beta = match cfg.resolve_strategy() {
        Ok(b) => b,
        Err(KyleError::Degenerate(msg)) => return solve_degenerate(&cfg, &grid, report, &msg),
        Err(e) => return Err(e),
    };
    let ric = solve_riccati(c, &beta, &grid)?;
    report.write("riccati.csv", &export::riccati_csv(&ric))?;
    report.check_ge("riccati.positivity", ric.min_s(), 0.0, Status::Fail);
    report.check_le("riccati.bound", ric.max_s() / ric.bound, 1.0, Status::Fail);
    let identity = ric.phi3_identity_residual().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    report.check_le("riccati.identity", identity, 1e-6, Status::Fail);

    let objective = objective_from(&ric)?;
    let foc = foc_from(c, &ric)?;
    let t = ric.grid.values();
    let foc_text = match &foc.residual_psi {
        Some(psi) => export::columns_csv(&["t", "foc_residual", "foc_residual_psi"], &[t, &foc.residual, psi]),
        None => export::columns_csv(&["t", "foc_residual"], &[t, &foc.residual]),
    };
    report.write("foc.csv", &foc_text)?;
    let sweep: Vec<SweepPoint> = delta_sweep(c, &beta, &sweep_deltas(&cfg), cfg.numerics.n_ode_steps)?;
    let form = match foc.form {
        FocForm::Reduced => "reduced",
        FocForm::General => "general",
    };

    if let ResolvedStrategy::ClosedForm(_) = beta {
        let eq = solve_optimal_g0(c, &grid)?;
        let density = objective_density(&eq.riccati);
        report.write(
            "equilibrium.csv",
            &export::equilibrium_csv(t, &eq.riccati.beta, &eq.riccati.s, &density, &foc.residual),
        )?;
        let summary = json!({
            "strategy": cfg.strategy.kind.label(),
            "delta": cfg.numerics.delta,
            "alpha0": eq.alpha0,
            "lambda": eq.lambda,
            "J": eq.j,
            "Jbar": eq.jbar,
            "J_truncated": objective.j,
            "Jbar_truncated": objective.jbar,
            "foc_form": form,
            "foc_sup": foc.sup,
            "foc_l2": foc.l2,
            "delta_sweep": sweep,
        });
        report.write("equilibrium.json", &export::to_json(&summary))?;
        report.check_le("foc.sup", foc.sup, 1e-4, Status::Fail);
    } else {
        let summary = json!({
            "strategy": cfg.strategy.kind.label(),
            "delta": cfg.numerics.delta,
            "J_truncated": objective.j,
            "Jbar_truncated": objective.jbar,
            "foc_form": form,
            "foc_sup": foc.sup,
            "foc_l2": foc.l2,
            "foc_sup_psi": foc.sup_psi,
            "foc_l2_psi": foc.l2_psi,
            "delta_sweep": sweep,
        });
        report.write("objective.json", &export::to_json(&summary))?;
    }
    report.finish()?;
    Ok(report)
}

/// No initial uncertainty and no fundamental noise: nothing to trade on.
fn solve_degenerate(cfg: &ScenarioConfig, grid: &TimeGrid, mut report: RunReport, msg: &str) -> Result<RunReport> {
    log::warn!("{msg}; reporting the zero-information equilibrium");
    let ric = solve_riccati(&cfg.coefficients, &TimeFunction::constant(0.0), grid)?;
    report.write("riccati.csv", &export::riccati_csv(&ric))?;
    let summary = json!({
        "strategy": cfg.strategy.kind.label(),
        "delta": cfg.numerics.delta,
        "alpha0": 0.0,
        "lambda": 0.0,
        "J": 0.0,
        "Jbar": 0.0,
        "degenerate": msg,
    });
    report.write("equilibrium.json", &export::to_json(&summary))?;
    report.push("equilibrium.information", Status::Warn, 0.0, 0.0);
    report.finish()?;
    Ok(report)
}

/// Monte Carlo run of the closed-loop dynamics.
pub fn cmd_simulate(cfg: &ScenarioConfig, args: &SimulateArgs) -> Result<RunReport> {
    let mut cfg = truncated(cfg, args.delta)?;
    if let Some(n) = args.paths {
        cfg.numerics.n_paths = n;
    }
    if let Some(seed) = args.seed {
        cfg.numerics.master_seed = seed;
    }
    let c = &cfg.coefficients;
    cfg.numerics.validate(c.horizon)?;
    let mut report = RunReport::new(&cfg.name, &out_dir(&cfg, &args.out));
    let beta = cfg.resolve_strategy()?;
    let horizon = c.horizon;
    let t_eff = cfg.t_eff();
    let seed = cfg.numerics.master_seed;
    let n_paths = cfg.numerics.n_paths;

    let checkpoints: Vec<f64> = CHECKPOINTS.iter().map(|f| f * t_eff).collect();
    let deltas: Vec<f64> = sweep_deltas(&cfg)
        .into_iter()
        .filter(|&d| horizon - d <= t_eff * (1.0 + 1e-12))
        .collect();
    let mut probe_times = checkpoints.clone();
    probe_times.extend(deltas.iter().map(|d| horizon - d));
    let grid = TimeGrid::graded(t_eff, horizon, cfg.numerics.n_sde_steps, &probe_times);
    let model = PathModel::new(c, &beta, grid)?;
    let probe = Probe::new(&model.grid, &probe_times);

    let summaries = model.run(Scheme::ClosedLoop, n_paths, seed, |_, b| summarize(&model, &probe, b))?;

    let payoff = payoff_estimate(&summaries, seed);
    let quad = objective_jbar(c, &beta, &TimeGrid::uniform(t_eff, cfg.numerics.n_ode_steps))?;
    let record = json!({
        "quantity": "payoff",
        "mean": payoff.mean,
        "stderr": payoff.stderr,
        "n_paths": payoff.n_paths,
        "seed": payoff.master_seed,
        "J_quadrature": quad.j,
        "z": payoff.z_score(quad.j),
    });
    report.write("payoff.json", &export::to_json(&record))?;
    report.check_le("payoff.z", payoff.z_score(quad.j), Z_TOL, Status::Warn);

    let variance: Vec<_> = variance_checks(&model, &probe, &summaries)
        .into_iter()
        .take(checkpoints.len())
        .collect();
    let col = |f: fn(&kyleback_core::simulation::VarianceCheck) -> f64| variance.iter().map(f).collect::<Vec<f64>>();
    let (vt, vs, vd, vv, ve, vz) = (
        col(|r| r.t),
        col(|r| r.s),
        col(|r| r.s_discrete),
        col(|r| r.sample_var),
        col(|r| r.stderr),
        col(|r| r.z),
    );
    report.write(
        "variance.csv",
        &export::columns_csv(
            &["t", "S", "S_discrete", "sample_var", "stderr", "z"],
            &[&vt, &vs, &vd, &vv, &ve, &vz],
        ),
    )?;
    for r in &variance {
        report.check_le(format!("variance.z@t={:.4}", r.t), r.z, Z_TOL, Status::Warn);
    }

    let orth: Vec<_> = orthogonality(&probe, &summaries, seed)
        .into_iter()
        .take(checkpoints.len())
        .collect();
    let (om, oe): (Vec<f64>, Vec<f64>) = orth.iter().map(|e| (e.mean, e.stderr)).unzip();
    let oz: Vec<f64> = orth.iter().map(|e| e.z_score(0.0)).collect();
    report.write(
        "orthogonality.csv",
        &export::columns_csv(&["t", "mean", "stderr", "z"], &[&vt, &om, &oe, &oz]),
    )?;
    for (t, z) in vt.iter().zip(&oz) {
        report.check_le(format!("orthogonality.z@t={t:.4}"), *z, Z_TOL, Status::Warn);
    }

    let terminal = terminal_rows(&model, &probe, &summaries, &deltas, seed);
    let tcol = |f: fn(&kyleback_core::simulation::TerminalRow) -> f64| terminal.iter().map(f).collect::<Vec<f64>>();
    report.write(
        "terminal.csv",
        &export::columns_csv(
            &["delta", "t", "beta", "S", "mse", "stderr", "z"],
            &[
                &tcol(|r| r.delta),
                &tcol(|r| r.t),
                &tcol(|r| r.beta),
                &tcol(|r| r.s),
                &tcol(|r| r.mse),
                &tcol(|r| r.stderr),
                &tcol(|r| r.z),
            ],
        ),
    )?;
    for r in &terminal {
        report.check_le(format!("terminal.z@delta={}", r.delta), r.z, Z_TOL, Status::Warn);
    }

    let mut bundle = model.bundle();
    for i in 0..args.dump_paths.min(n_paths) {
        model.fill_closed_loop(seed, i, &mut bundle)?;
        report.write(&format!("paths/path_{i:05}.csv"), &export::path_csv(&bundle))?;
    }
    report.finish()?;
    Ok(report)
}

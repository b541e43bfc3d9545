use kyleback_core::coefficients::{Perturbed, Scaled, TimeFunction};
use kyleback_core::deterministic::{solve_riccati, RiccatiSolution, TimeGrid};
use kyleback_core::equilibrium::{
    delta_sweep, directional_derivatives, foc_residual, objective_from, objective_jbar, price_map_g0,
    solve_optimal_g0, test_directions,
};
use kyleback_core::presets;

const FD_STEP: f64 = 1e-4;

fn normwise(analytic: &[f64], fd: &[f64]) -> f64 {
    let gap = analytic.iter().zip(fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let size = fd.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if gap == 0.0 {
        0.0
    } else {
        gap / size
    }
}

fn central(plus: &RiccatiSolution, minus: &RiccatiSolution, pick: fn(&RiccatiSolution) -> Vec<f64>) -> Vec<f64> {
    pick(plus)
        .iter()
        .zip(pick(minus))
        .map(|(a, b)| (a - b) / (2.0 * FD_STEP))
        .collect()
}

#[test]
fn derivatives_match_central_differences_on_every_preset() {
    for cfg in presets::all() {
        let c = &cfg.coefficients;
        let beta = cfg.resolve_strategy().unwrap();
        let grid = TimeGrid::uniform(cfg.t_eff(), 10_000);
        for (name, xi) in test_directions(c.horizon) {
            let d = directional_derivatives(c, &beta, &xi, &grid).unwrap();
            let plus = solve_riccati(c, &Perturbed { base: &beta, direction: &xi, step: FD_STEP }, &grid).unwrap();
            let minus = solve_riccati(c, &Perturbed { base: &beta, direction: &xi, step: -FD_STEP }, &grid).unwrap();
            let checks = [
                ("dS", normwise(&d.ds, &central(&plus, &minus, |r| r.s.clone()))),
                ("dphi1_t0", normwise(&d.dphi1_t0, &central(&plus, &minus, |r| r.phi1_t0.clone()))),
                (
                    "dphi1_0t",
                    normwise(
                        &d.dphi1_0t,
                        &central(&plus, &minus, |r| r.log_phi1.iter().map(|l| (-l).exp()).collect()),
                    ),
                ),
                ("dphi3_Tt", normwise(&d.dphi3_tt, &central(&plus, &minus, |r| r.phi3_tt.clone()))),
            ];
            for (what, err) in checks {
                assert!(err <= 1e-4, "{} {name} {what}: {err}", cfg.name);
            }
            let fd = (objective_from(&plus).unwrap().jbar - objective_from(&minus).unwrap().jbar) / (2.0 * FD_STEP);
            let err = (d.djbar - fd).abs() / fd.abs().max(d.djbar_scale);
            assert!(err <= 1e-4, "{} {name} dJbar: {} vs {fd} ({err})", cfg.name, d.djbar);
        }
    }
}

#[test]
fn closed_form_optimum_is_stationary_and_locally_maximal() {
    for name in ["static_kyle", "back_pedersen", "g0_general"] {
        let cfg = presets::preset(name).unwrap();
        let c = &cfg.coefficients;
        let grid = TimeGrid::uniform(cfg.t_eff(), 20_000);
        let eq = solve_optimal_g0(c, &grid).unwrap();
        let best = objective_jbar(c, &eq.beta, &grid).unwrap().jbar;
        for (dir, xi) in test_directions(c.horizon) {
            let d = directional_derivatives(c, &eq.beta, &xi, &grid).unwrap();
            assert!(d.djbar.abs() <= 1e-3 * best.abs().max(1.0), "{name} {dir}: {}", d.djbar);
        }
        for eps in [-0.1, -0.05, 0.05, 0.1] {
            let scaled = Scaled { base: &eq.beta, factor: 1.0 + eps };
            let other = objective_jbar(c, &scaled, &grid).unwrap().jbar;
            assert!(other <= best + 1e-6, "{name} eps {eps}: {other} > {best}");
        }
    }
}

#[test]
fn foc_residual_grows_with_distance_from_optimum() {
    let cfg = presets::preset("g0_general").unwrap();
    let c = &cfg.coefficients;
    let grid = TimeGrid::uniform(cfg.t_eff(), 20_000);
    let eq = solve_optimal_g0(c, &grid).unwrap();
    let mut last = foc_residual(c, &eq.beta, &grid).unwrap().sup;
    assert!(last <= 1e-4);
    for eps in [0.01, 0.02, 0.04] {
        let r = foc_residual(c, &Scaled { base: &eq.beta, factor: 1.0 + eps }, &grid).unwrap().sup;
        assert!(r > last, "eps {eps}: {r} <= {last}");
        last = r;
    }
    let flat = foc_residual(c, &TimeFunction::constant(1.0), &grid).unwrap();
    assert!(flat.sup > 0.1);
    // with constant intensity S ≡ 1 and the residual peaks at e^{-2} at t = 0
    assert!((flat.sup - (-2f64).exp()).abs() < 1e-3, "{}", flat.sup);
}

#[test]
fn general_residual_reports_both_auxiliary_forms() {
    let cfg = presets::preset("g_feedback").unwrap();
    let beta = cfg.resolve_strategy().unwrap();
    let grid = TimeGrid::uniform(cfg.t_eff(), 20_000);
    let r = foc_residual(&cfg.coefficients, &beta, &grid).unwrap();
    assert!(r.sup_psi.is_some() && r.l2_psi.is_some());
    assert!(r.sup.is_finite() && r.l2 <= r.sup * cfg.t_eff().sqrt() + 1e-12);
}

#[test]
fn static_case_closed_forms() {
    let cfg = presets::preset("static_kyle").unwrap();
    let c = &cfg.coefficients;
    let eq = solve_optimal_g0(c, &TimeGrid::uniform(0.999, 20_000)).unwrap();
    let lambda = c.s0.sqrt() / c.sigma_z.square_integral(0.0, c.horizon).sqrt();
    assert!((eq.lambda - lambda).abs() <= 1e-12);
    assert!((eq.j - 1.0).abs() <= 1e-12);
    for (t, b) in eq.riccati.grid.values().iter().zip(&eq.riccati.beta) {
        let exact = 1.0 / (1.0 - t);
        assert!((b / exact - 1.0).abs() <= 1e-10);
    }
    assert!((price_map_g0(&eq, c, 0.3, 0.4).unwrap() - 0.3).abs() < 1e-12);
}

#[test]
fn truncated_static_objective_tends_to_one() {
    let cfg = presets::preset("static_kyle").unwrap();
    let c = &cfg.coefficients;
    let beta = cfg.resolve_strategy().unwrap();
    let mut previous = 0.0;
    for delta in [1e-2, 1e-3, 1e-4, 1e-5] {
        let grid = TimeGrid::graded(1.0 - delta, 1.0, 20_000, &[]);
        let jbar = objective_jbar(c, &beta, &grid).unwrap().jbar;
        let exact = 1.0 - delta - delta * (1.0 / delta).ln();
        assert!((jbar - exact).abs() < 1e-6, "delta {delta}: {jbar} vs {exact}");
        assert!(jbar > previous);
        previous = jbar;
    }
    assert!((1.0 - previous).abs() < 2e-4);
}

#[test]
fn long_lived_case() {
    let cfg = presets::preset("back_pedersen").unwrap();
    let c = &cfg.coefficients;
    let eq = solve_optimal_g0(c, &TimeGrid::uniform(0.999, 20_000)).unwrap();
    assert!((eq.j - 1.0).abs() < 1e-12);
    for (t, b) in eq.riccati.grid.values().iter().zip(&eq.riccati.beta) {
        let remaining = (1.0 - t) - c.sigma_v.square_integral(*t, 1.0);
        assert!((b * remaining - 1.0).abs() <= 1e-8, "t {t}");
    }
    assert!((price_map_g0(&eq, c, -0.7, 0.6).unwrap() + 0.7).abs() < 1e-12);
}

#[test]
fn unit_g0_scenario() {
    let cfg = presets::preset("g0_general").unwrap();
    let c = &cfg.coefficients;
    let grid = TimeGrid::uniform(0.999, 20_000);
    let eq = solve_optimal_g0(c, &grid).unwrap();
    assert!((eq.alpha0 - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    assert!((eq.j - 2f64.sqrt()).abs() < 1e-12);
    for i in 0..grid.len() {
        let t = grid.values()[i];
        let bs = eq.riccati.beta[i] * eq.riccati.s[i];
        assert!((bs - eq.alpha0 / 2.0).abs() < 1e-10);
        assert!((eq.riccati.s[i] - (1.0 - t)).abs() < 1e-12);
    }
    // the objective on [0, T_eff] approaches J as T_eff → T
    let obj = objective_jbar(c, &eq.beta, &TimeGrid::graded(1.0 - 1e-5, 1.0, 20_000, &[])).unwrap();
    assert!((obj.j - 2f64.sqrt()).abs() < 1e-3, "{}", obj.j);
}

#[test]
fn terminal_blow_up_is_exhibited_by_the_sweep() {
    for name in ["static_kyle", "back_pedersen", "g0_general"] {
        let cfg = presets::preset(name).unwrap();
        let beta = cfg.resolve_strategy().unwrap();
        let sweep = delta_sweep(&cfg.coefficients, &beta, &[1e-1, 1e-2, 1e-3], 20_000).unwrap();
        for w in sweep.windows(2) {
            assert!(w[1].beta_end > w[0].beta_end, "{name}");
            assert!(w[1].s_end < w[0].s_end, "{name}");
        }
        assert!(sweep[2].s_end <= 1.000001e-3, "{name}: {}", sweep[2].s_end);
    }
    // a constant intensity leaves information unreleased
    let cfg = presets::preset("g0_general").unwrap();
    let sweep = delta_sweep(&cfg.coefficients, &TimeFunction::constant(1.0), &[1e-1, 1e-2, 1e-3], 5_000).unwrap();
    assert!(sweep.iter().all(|p| (p.s_end - 1.0).abs() < 1e-9));
}

#[test]
fn degenerate_information_is_reported() {
    let mut c = presets::preset("static_kyle").unwrap().coefficients;
    c.s0 = 0.0;
    let err = solve_optimal_g0(&c, &TimeGrid::uniform(0.999, 1000)).unwrap_err();
    assert!(err.to_string().starts_with("DegenerateError"));
    let obj = objective_jbar(&c, &TimeFunction::constant(1.0), &TimeGrid::uniform(0.999, 1000)).unwrap();
    assert_eq!(obj.jbar, 0.0);
}

#[test]
fn feedback_rejects_closed_form() {
    let cfg = presets::preset("g_feedback").unwrap();
    let err = solve_optimal_g0(&cfg.coefficients, &TimeGrid::uniform(0.999, 1000)).unwrap_err();
    assert!(err.to_string().contains("NotApplicable: g must vanish"));
}


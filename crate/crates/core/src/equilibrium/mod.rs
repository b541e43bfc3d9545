//! The insider's objective, its directional derivatives, the first-order
//! optimality residual and the closed-form optimum for `g = 0`.

pub mod closed_form;
mod variational;

pub use closed_form::G0ClosedForm;
pub use variational::{directional_derivatives, test_directions, VariationalDerivatives};

use std::sync::Arc;

use crate::coefficients::{CoefficientSet, Intensity, ResolvedStrategy};
use crate::deterministic::{
    cumulative, quadrature, solve_riccati, solve_riccati_with, tail_cumulative, RiccatiOptions,
    RiccatiSolution, TimeGrid,
};
use crate::error::{KyleError, Result};

/// Truncated objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    /// `J̄ = ∫_0^{T_eff} β S φ₁(0,t) φ₃(T_eff,t) dt`.
    pub jbar: f64,
    /// `J = φ₂(T_eff,0) J̄`.
    pub j: f64,
}

/// Integrand `β S φ₁(0,t) φ₃(T_eff,t)` of the reduced objective.
pub fn objective_density(ric: &RiccatiSolution) -> Vec<f64> {
    (0..ric.len())
        .map(|i| ric.beta[i] * ric.s[i] * (-ric.log_phi1[i]).exp() * ric.phi3_tt[i])
        .collect()
}

pub fn objective_from(ric: &RiccatiSolution) -> Result<Objective> {
    let jbar = quadrature(&objective_density(ric), &ric.grid)?;
    Ok(Objective {
        jbar,
        j: ric.phi2_t0[ric.len() - 1] * jbar,
    })
}

/// Insider objective on `[0, T_eff]` by trapezoid quadrature of the Riccati-derived integrand.
pub fn objective_jbar<B: Intensity + ?Sized>(
    coeffs: &CoefficientSet,
    beta: &B,
    grid: &TimeGrid,
) -> Result<Objective> {
    objective_from(&solve_riccati(coeffs, beta, grid)?)
}

/// Which first-order condition was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FocForm {
    /// `φ₁₂(t) - α_t ∫_t^T β φ₁₂`, `φ₁₂ = φ₁²(t,0) φ₂(0,t)`; used when `g = 0`.
    Reduced,
    /// `A_t + Φ_t/S_t - ∫_t^T [β φ₁(·,0) φ₃(T,·) + β² Φ/σᶻ²]`.
    General,
}

#[derive(Debug, Clone)]
pub struct FocResidual {
    pub form: FocForm,
    pub grid: TimeGrid,
    /// Normalized pointwise residual.
    pub residual: Vec<f64>,
    /// Same residual with `Ψ` in place of `Φ` (general form only).
    pub residual_psi: Option<Vec<f64>>,
    pub sup: f64,
    /// `(∫ r² dt)^{1/2}`.
    pub l2: f64,
    pub sup_psi: Option<f64>,
    pub l2_psi: Option<f64>,
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2_norm(v: &[f64], grid: &TimeGrid) -> Result<f64> {
    let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
    Ok(quadrature(&sq, grid)?.sqrt())
}

/// First-order optimality residual of `beta`; the reduced form is used when `g = 0`.
pub fn foc_residual<B: Intensity + ?Sized>(
    coeffs: &CoefficientSet,
    beta: &B,
    grid: &TimeGrid,
) -> Result<FocResidual> {
    let ric = solve_riccati(coeffs, beta, grid)?;
    foc_from(coeffs, &ric)
}

pub fn foc_from(coeffs: &CoefficientSet, ric: &RiccatiSolution) -> Result<FocResidual> {
    let grid = &ric.grid;
    let t = grid.values();
    let n = t.len();
    let sz2: Vec<f64> = t.iter().map(|&x| coeffs.sigma_z.value(x).powi(2)).collect();
    let alpha: Vec<f64> = (0..n).map(|i| 2.0 * ric.beta[i] * ric.s[i] / sz2[i]).collect();

    if coeffs.g_vanishes() {
        let phi12: Vec<f64> = (0..n)
            .map(|i| (2.0 * ric.log_phi1[i]).exp() / ric.phi2_t0[i])
            .collect();
        let weighted: Vec<f64> = (0..n).map(|i| ric.beta[i] * phi12[i]).collect();
        let tail = tail_cumulative(&weighted, grid)?;
        let scale = sup_abs(&phi12);
        let residual: Vec<f64> = (0..n)
            .map(|i| (phi12[i] - alpha[i] * tail[i]) / scale)
            .collect();
        return Ok(FocResidual {
            form: FocForm::Reduced,
            sup: sup_abs(&residual),
            l2: l2_norm(&residual, grid)?,
            grid: grid.clone(),
            residual,
            residual_psi: None,
            sup_psi: None,
            l2_psi: None,
        });
    }

    let phi1 = &ric.phi1_t0;
    let gain_density: Vec<f64> = (0..n)
        .map(|i| ric.beta[i] * ric.s[i] * (-ric.log_phi1[i]).exp())
        .collect();
    // ∫_0^t β S φ₁(0,r) dr
    let gain = cumulative(&gain_density, grid)?;
    let g_end = ric.g_weighted[n - 1];
    let big_phi: Vec<f64> = (0..n)
        .map(|i| phi1[i] * phi1[i] * gain[i] * (g_end - ric.g_weighted[i]))
        .collect();
    let big_psi: Vec<f64> = (0..n)
        .map(|i| {
            let ratio = phi1[i] / ric.phi2_t0[i];
            phi1[i] * phi1[i] * (ratio - ric.phi3_tt[i]) * gain[i]
        })
        .collect();
    let lead: Vec<f64> = (0..n)
        .map(|i| phi1[i] * sz2[i] * ric.phi3_tt[i] / (2.0 * ric.beta[i] * ric.s[i]))
        .collect();
    let scale = sup_abs(&lead);
    let assemble = |aux: &[f64]| -> Result<Vec<f64>> {
        let inner: Vec<f64> = (0..n)
            .map(|i| {
                ric.beta[i] * phi1[i] * ric.phi3_tt[i]
                    + ric.beta[i] * ric.beta[i] * aux[i] / sz2[i]
            })
            .collect();
        let tail = tail_cumulative(&inner, grid)?;
        Ok((0..n)
            .map(|i| (lead[i] + aux[i] / ric.s[i] - tail[i]) / scale)
            .collect())
    };
    let residual = assemble(&big_phi)?;
    let residual_psi = assemble(&big_psi)?;
    Ok(FocResidual {
        form: FocForm::General,
        sup: sup_abs(&residual),
        l2: l2_norm(&residual, grid)?,
        sup_psi: Some(sup_abs(&residual_psi)),
        l2_psi: Some(l2_norm(&residual_psi, grid)?),
        grid: grid.clone(),
        residual,
        residual_psi: Some(residual_psi),
    })
}

/// Closed-form optimum for `g = 0` evaluated on a grid.
#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    pub alpha0: f64,
    pub beta: ResolvedStrategy,
    /// Auxiliary functions with `S` taken from the closed form.
    pub riccati: RiccatiSolution,
    /// Expected payoff over the full horizon.
    pub j: f64,
    /// `J / φ₂(T,0)`.
    pub jbar: f64,
    pub lambda: f64,
}

impl EquilibriumSolution {
    pub fn form(&self) -> &G0ClosedForm {
        self.beta.closed_form().expect("equilibrium strategy is a closed form")
    }
}

/// Builds the `g = 0` optimum. `J` uses the trapezoid rule for `∫σᶻ²` on `grid`
/// extended to the full horizon.
pub fn solve_optimal_g0(coeffs: &CoefficientSet, grid: &TimeGrid) -> Result<EquilibriumSolution> {
    let form = Arc::new(G0ClosedForm::new(coeffs)?);
    let variance = |t: f64| form.variance(t);
    let opts = RiccatiOptions {
        exact_variance: Some(&variance),
        ..Default::default()
    };
    let riccati = solve_riccati_with(coeffs, form.as_ref(), grid, &opts)?;

    let full = match grid.uniform_step() {
        Some(_) => TimeGrid::uniform(coeffs.horizon, grid.len() - 1),
        None => {
            let mut nodes = grid.values().to_vec();
            if grid.t_end() < coeffs.horizon {
                nodes.push(coeffs.horizon);
            }
            TimeGrid::from_nodes(nodes)?
        }
    };
    let sz2: Vec<f64> = full
        .values()
        .iter()
        .map(|&t| coeffs.sigma_z.value(t).powi(2))
        .collect();
    let sigma_z_total = quadrature(&sz2, &full)?;
    let alpha0 = form.alpha0();
    let jbar = 0.5 * alpha0 * sigma_z_total;
    Ok(EquilibriumSolution {
        alpha0,
        j: form.phi2(coeffs.horizon) * jbar,
        jbar,
        lambda: form.lambda(),
        riccati,
        beta: ResolvedStrategy::ClosedForm(form),
    })
}

/// Price implied by cumulative order flow `y` at time `t` under the `g = 0` optimum.
pub fn price_map_g0(eq: &EquilibriumSolution, coeffs: &CoefficientSet, y: f64, t: f64) -> Result<f64> {
    if !coeffs.g_vanishes() {
        return Err(KyleError::NotApplicable("g must vanish for the affine price map".into()));
    }
    let t_end = eq.riccati.t_eff();
    if !(0.0..=t_end).contains(&t) {
        return Err(KyleError::Domain { t, lo: 0.0, hi: t_end });
    }
    Ok(eq.form().price(t, y))
}

/// `β_{T-δ}` and `S_{T-δ}` for each truncation in `deltas`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SweepPoint {
    pub delta: f64,
    pub beta_end: f64,
    #[serde(rename = "S_end")]
    pub s_end: f64,
}

/// Terminal values of `β` and of the Riccati variance at `T - δ` for each `δ`.
pub fn delta_sweep<B: Intensity + ?Sized>(
    coeffs: &CoefficientSet,
    beta: &B,
    deltas: &[f64],
    n_steps: usize,
) -> Result<Vec<SweepPoint>> {
    deltas
        .iter()
        .map(|&delta| {
            let grid = TimeGrid::uniform(coeffs.horizon - delta, n_steps);
            let ric = solve_riccati(coeffs, beta, &grid)?;
            Ok(SweepPoint {
                delta,
                beta_end: *ric.beta.last().unwrap(),
                s_end: *ric.s.last().unwrap(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::TimeFunction;

    fn g0(sigma_v: f64, s0: f64) -> CoefficientSet {
        CoefficientSet {
            horizon: 1.0,
            v0: 0.0,
            s0,
            f: TimeFunction::constant(0.0),
            g: TimeFunction::constant(0.0),
            h: TimeFunction::constant(0.0),
            sigma_v: TimeFunction::constant(sigma_v),
            sigma_z: TimeFunction::constant(1.0),
        }
    }

    #[test]
    fn static_truncated_objective_matches_analytic_value() {
        let c = g0(0.0, 1.0);
        let eq = solve_optimal_g0(&c, &TimeGrid::uniform(0.999, 20_000)).unwrap();
        let obj = objective_from(&eq.riccati).unwrap();
        let d: f64 = 1e-3;
        let exact = 1.0 - d - d * (1.0 / d).ln();
        assert!((obj.jbar - exact).abs() < 1e-6, "{} vs {exact}", obj.jbar);
        assert!((eq.j - 1.0).abs() < 1e-12);
        assert!((eq.lambda - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_information_gives_zero_objective() {
        let c = g0(0.0, 0.0);
        let obj = objective_jbar(&c, &TimeFunction::constant(1.0), &TimeGrid::uniform(0.999, 1000))
            .unwrap();
        assert_eq!(obj.jbar, 0.0);
    }

    #[test]
    fn foc_separates_optimum_from_constant_intensity() {
        let c = g0(1.0, 1.0);
        let grid = TimeGrid::uniform(0.999, 20_000);
        let eq = solve_optimal_g0(&c, &grid).unwrap();
        let opt = foc_residual(&c, &eq.beta, &grid).unwrap();
        assert_eq!(opt.form, FocForm::Reduced);
        assert!(opt.sup < 1e-4, "optimum residual {}", opt.sup);
        let flat = foc_residual(&c, &TimeFunction::constant(1.0), &grid).unwrap();
        assert!(flat.sup > 0.1, "constant residual {}", flat.sup);
    }

    #[test]
    fn zero_direction_gives_zero_derivatives() {
        let c = g0(1.0, 1.0);
        let d = directional_derivatives(
            &c,
            &TimeFunction::constant(1.0),
            &TimeFunction::constant(0.0),
            &TimeGrid::uniform(0.999, 500),
        )
        .unwrap();
        assert!(d.ds.iter().chain(&d.dphi1_t0).chain(&d.dphi1_0t).chain(&d.dphi3_tt).all(|&x| x == 0.0));
        assert_eq!(d.djbar, 0.0);
    }

    #[test]
    fn price_map_examples() {
        let c = g0(0.0, 1.0);
        let grid = TimeGrid::uniform(0.999, 1000);
        let eq = solve_optimal_g0(&c, &grid).unwrap();
        assert!((price_map_g0(&eq, &c, 0.3, 0.5).unwrap() - 0.3).abs() < 1e-12);
        let mut c2 = c.clone();
        c2.g = TimeFunction::constant(1.0);
        assert!(price_map_g0(&eq, &c2, 0.3, 0.5).is_err());
    }
}

//! Directional derivatives of the variance, the auxiliary functions and the
//! reduced objective with respect to the trading intensity.

use crate::coefficients::{CoefficientSet, Intensity, TimeFunction};
use crate::deterministic::{quadrature, rk4_step, TimeGrid};
use crate::error::{KyleError, Result};

/// Derivatives along a direction `ξ`, all on the same grid.
#[derive(Debug, Clone)]
pub struct VariationalDerivatives {
    pub grid: TimeGrid,
    /// `∇S_t`.
    pub ds: Vec<f64>,
    /// `∇φ₁(t,0)`.
    pub dphi1_t0: Vec<f64>,
    /// `∇φ₁(0,t)`.
    pub dphi1_0t: Vec<f64>,
    /// `∇φ₃(T,t)`.
    pub dphi3_tt: Vec<f64>,
    /// `∇J̄`.
    pub djbar: f64,
    /// `∫ |∇J̄ integrand| dt`: the size of the contributions that cancel at a
    /// stationary point, used to scale errors in `djbar`.
    pub djbar_scale: f64,
    /// `J̄` itself, from the same pass.
    pub jbar: f64,
}

/// Gâteaux derivatives along `xi`.
///
/// With `α = 2βS/σᶻ²` and `ρ = β²/σᶻ²`:
///
/// * `∇S_t = -φ₁²(t,0) ∫_0^t ξ α S φ₁^{-2}(r,0) dr`
/// * `∇φ₁(t,0) = -φ₁(t,0) ∫_0^t (ξα + ρ∇S)`, `∇φ₁(0,t) = φ₁(0,t) ∫_0^t (ξα + ρ∇S)`
/// * `∇φ₃(T,t) = ∫_t^T [∇φ₁(r,0) φ₂(0,r) k_r + φ₁(r,0) φ₂(0,r)(ξα + ρ∇S)_r] dr`
/// * `∇J̄ = ∫_0^T [ξSφ₁(0,·)φ₃ + β∇Sφ₁(0,·)φ₃ + βS∇φ₁(0,·)φ₃ + βSφ₁(0,·)∇φ₃]`
///
/// The running integrals are carried through the same RK4 steps as the
/// Riccati equation; the outer `dt` integral uses the trapezoid rule, as in
/// [`super::objective_jbar`].
pub fn directional_derivatives<B: Intensity + ?Sized>(
    coeffs: &CoefficientSet,
    beta: &B,
    xi: &TimeFunction,
    grid: &TimeGrid,
) -> Result<VariationalDerivatives> {
    // state: S, log φ₁(t,0), φ₃(t,0), I₁ = ∫ξαSφ₁⁻², I₂ = ∫(ξα + ρ∇S), I₃ = running ∇φ₃ integrand
    let rhs = |t: f64, y: &[f64; 6]| -> [f64; 6] {
        let f = coeffs.f.value(t);
        let sv = coeffs.sigma_v.value(t);
        let sz2 = coeffs.sigma_z.value(t).powi(2);
        let b = beta.beta(t);
        let x = xi.value(t);
        let l2 = coeffs.drift_integral(t);
        let s = y[0];
        let k = b * b * s / sz2;
        let alpha = 2.0 * b * s / sz2;
        let rho = b * b / sz2;
        let ds = -(2.0 * y[1]).exp() * y[3];
        let dk = x * alpha + rho * ds;
        let w = (y[1] - l2).exp();
        let dphi1 = -y[1].exp() * y[4];
        [
            sv * sv + 2.0 * f * s - k * s,
            f - k,
            w * k,
            x * alpha * s * (-2.0 * y[1]).exp(),
            dk,
            dphi1 * (-l2).exp() * k + w * dk,
        ]
    };

    let t = grid.values();
    let n = t.len();
    let mut states = Vec::with_capacity(n);
    let mut y = [coeffs.s0, 0.0, 0.0, 0.0, 0.0, 0.0];
    states.push(y);
    for i in 0..n - 1 {
        y = rk4_step(t[i], t[i + 1] - t[i], &y, &rhs);
        if !y.iter().all(|v| v.is_finite()) || y[0] < 0.0 {
            return Err(KyleError::BlowUp {
                quantity: "S",
                t: t[i + 1],
                value: y[0],
            });
        }
        states.push(y);
    }

    let phi3_end = states[n - 1][2];
    let i3_end = states[n - 1][5];
    let mut ds = Vec::with_capacity(n);
    let mut dphi1_t0 = Vec::with_capacity(n);
    let mut dphi1_0t = Vec::with_capacity(n);
    let mut dphi3_tt = Vec::with_capacity(n);
    let mut base = Vec::with_capacity(n);
    let mut deriv = Vec::with_capacity(n);
    let mut magnitude = Vec::with_capacity(n);
    for (i, y) in states.iter().enumerate() {
        let b = beta.beta(t[i]);
        let x = xi.value(t[i]);
        let s = y[0];
        let phi1 = y[1].exp();
        let phi1_inv = (-y[1]).exp();
        let phi3 = phi3_end - y[2];
        let d_s = -(2.0 * y[1]).exp() * y[3];
        let d_inv = phi1_inv * y[4];
        let d_phi3 = i3_end - y[5];
        ds.push(d_s);
        dphi1_t0.push(-phi1 * y[4]);
        dphi1_0t.push(d_inv);
        dphi3_tt.push(d_phi3);
        base.push(b * s * phi1_inv * phi3);
        let terms = [
            x * s * phi1_inv * phi3,
            b * d_s * phi1_inv * phi3,
            b * s * d_inv * phi3,
            b * s * phi1_inv * d_phi3,
        ];
        deriv.push(terms.iter().sum());
        magnitude.push(terms.iter().map(|v| v.abs()).sum());
    }
    Ok(VariationalDerivatives {
        grid: grid.clone(),
        ds,
        dphi1_t0,
        dphi1_0t,
        dphi3_tt,
        djbar: quadrature(&deriv, grid)?,
        djbar_scale: quadrature(&magnitude, grid)?,
        jbar: quadrature(&base, grid)?,
    })
}

/// The fixed perturbation basis `{1, t, t², sin(πt/T)}` on `[0, T]`.
pub fn test_directions(horizon: f64) -> Vec<(&'static str, TimeFunction)> {
    let n = 512;
    let sine: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let t = horizon * i as f64 / n as f64;
            (t, (std::f64::consts::PI * t / horizon).sin())
        })
        .collect();
    vec![
        ("one", TimeFunction::constant(1.0)),
        ("t", TimeFunction::polynomial(vec![0.0, 1.0])),
        ("t2", TimeFunction::polynomial(vec![0.0, 0.0, 1.0])),
        (
            "sin",
            TimeFunction::sampled(sine).expect("sine knots are increasing"),
        ),
    ]
}

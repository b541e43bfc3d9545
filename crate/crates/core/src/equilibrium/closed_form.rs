//! Optimal intensity, variance, payoff and price map when `g = 0`.

use crate::coefficients::{CoefficientSet, Intensity};
use crate::deterministic::SimpsonTable;
use crate::error::{KyleError, Result};

const PANELS: usize = 4096;

/// Pointwise evaluator of the `g = 0` optimum.
///
/// With `φ₂(t,0) = exp ∫_0^t f` and `A = α₀²/4 = (s₀ + ∫_0^T φ₂²(0,r) σᵛ_r² dr) / ∫_0^T σᶻ²`:
///
/// * `S_t = φ₂²(t,0) ∫_t^T (A σᶻ_r² - φ₂²(0,r) σᵛ_r²) dr`
/// * `β_t = α₀ φ₂(t,0) σᶻ_t² / (2 S_t)`
/// * `J = α₀ φ₂(T,0) ∫_0^T σᶻ² / 2`
/// * `P_t = φ₂(t,0) [v₀ + ∫_0^t φ₂(0,r) h_r dr + α₀ Y_t / 2]`
#[derive(Debug, Clone)]
pub struct G0ClosedForm {
    coeffs: CoefficientSet,
    alpha0: f64,
    a: f64,
    sigma_z_total: f64,
    information: f64,
    variance_tail: SimpsonTable,
    drift_table: SimpsonTable,
}

impl G0ClosedForm {
    pub fn new(coeffs: &CoefficientSet) -> Result<Self> {
        if !coeffs.g_vanishes() {
            return Err(KyleError::NotApplicable(
                "g must vanish for the closed-form optimum".into(),
            ));
        }
        let c = coeffs.clone();
        let horizon = c.horizon;
        let decay = |r: f64| (-c.f.antiderivative(r)).exp();
        let sz2 = |r: f64| c.sigma_z.value(r).powi(2);
        let noise = |r: f64| decay(r).powi(2) * c.sigma_v.value(r).powi(2);

        let sigma_z_total = SimpsonTable::new(&sz2, horizon, PANELS).total();
        let information = c.s0 + SimpsonTable::new(&noise, horizon, PANELS).total();
        if !(information > 0.0) {
            return Err(KyleError::Degenerate(
                "s0 = 0 and sigma_v = 0: no private information to trade on".into(),
            ));
        }
        let a = information / sigma_z_total;
        let remaining = |r: f64| a * sz2(r) - noise(r);
        let variance_tail = SimpsonTable::new(&remaining, horizon, PANELS);
        let drift = |r: f64| decay(r) * c.h.value(r);
        let drift_table = SimpsonTable::new(&drift, horizon, PANELS);
        Ok(G0ClosedForm {
            alpha0: 2.0 * a.sqrt(),
            a,
            sigma_z_total,
            information,
            variance_tail,
            drift_table,
            coeffs: c,
        })
    }

    pub fn coefficients(&self) -> &CoefficientSet {
        &self.coeffs
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    /// `α₀² / 4`.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// `∫_0^T σᶻ²`.
    pub fn sigma_z_total(&self) -> f64 {
        self.sigma_z_total
    }

    /// `s₀ + ∫_0^T φ₂²(0,r) σᵛ_r² dr`.
    pub fn information(&self) -> f64 {
        self.information
    }

    /// Price sensitivity `α₀ / 2`; equals `√s₀ (∫σᶻ²)^{-1/2}` in the static case.
    pub fn lambda(&self) -> f64 {
        0.5 * self.alpha0
    }

    pub fn phi2(&self, t: f64) -> f64 {
        self.coeffs.f.antiderivative(t).exp()
    }

    fn remaining(&self, r: f64) -> f64 {
        let c = &self.coeffs;
        let decay = (-c.f.antiderivative(r)).exp();
        self.a * c.sigma_z.value(r).powi(2) - (decay * c.sigma_v.value(r)).powi(2)
    }

    pub fn variance(&self, t: f64) -> f64 {
        let tail = self.variance_tail.to_end(&|r| self.remaining(r), t);
        self.phi2(t).powi(2) * tail
    }

    pub fn beta(&self, t: f64) -> f64 {
        let sz = self.coeffs.sigma_z.value(t);
        self.alpha0 * self.phi2(t) * sz * sz / (2.0 * self.variance(t))
    }

    /// Expected payoff over the full horizon.
    pub fn payoff(&self) -> f64 {
        0.5 * self.alpha0 * self.phi2(self.coeffs.horizon) * self.sigma_z_total
    }

    /// `∫_0^t φ₂(0,r) h_r dr`.
    pub fn drift_integral(&self, t: f64) -> f64 {
        let c = &self.coeffs;
        let drift = |r: f64| (-c.f.antiderivative(r)).exp() * c.h.value(r);
        self.drift_table.from_start(&drift, t)
    }

    pub fn price(&self, t: f64, y: f64) -> f64 {
        self.phi2(t) * (self.coeffs.v0 + self.drift_integral(t) + 0.5 * self.alpha0 * y)
    }
}

impl Intensity for G0ClosedForm {
    #[inline]
    fn beta(&self, t: f64) -> f64 {
        G0ClosedForm::beta(self, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::TimeFunction;

    fn g0() -> CoefficientSet {
        CoefficientSet {
            horizon: 1.0,
            v0: 0.0,
            s0: 1.0,
            f: TimeFunction::constant(0.0),
            g: TimeFunction::constant(0.0),
            h: TimeFunction::constant(0.0),
            sigma_v: TimeFunction::constant(1.0),
            sigma_z: TimeFunction::constant(1.0),
        }
    }

    #[test]
    fn unit_scenario_values() {
        let form = G0ClosedForm::new(&g0()).unwrap();
        assert!((form.alpha0() - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        for t in [0.0, 0.3, 0.99, 0.9999] {
            assert!((form.variance(t) - (1.0 - t)).abs() < 1e-13);
            let b = 2f64.sqrt() / (1.0 - t);
            assert!((form.beta(t) / b - 1.0).abs() < 1e-10);
        }
        assert!((form.payoff() - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_feedback_and_degenerate_information() {
        let mut c = g0();
        c.g = TimeFunction::constant(0.5);
        assert!(matches!(G0ClosedForm::new(&c), Err(KyleError::NotApplicable(_))));
        let mut c = g0();
        c.s0 = 0.0;
        c.sigma_v = TimeFunction::constant(0.0);
        assert!(matches!(G0ClosedForm::new(&c), Err(KyleError::Degenerate(_))));
    }

    #[test]
    fn drift_enters_price_through_discounted_integral() {
        let mut c = g0();
        c.f = TimeFunction::constant(-0.5);
        c.h = TimeFunction::constant(2.0);
        c.v0 = 1.0;
        let form = G0ClosedForm::new(&c).unwrap();
        let t: f64 = 0.6;
        // ∫_0^t e^{r/2} 2 dr = 4 (e^{t/2} - 1)
        let expected = (-0.5 * t).exp() * (1.0 + 4.0 * ((0.5 * t).exp() - 1.0));
        assert!((form.price(t, 0.0) - expected).abs() < 1e-13);
    }
}

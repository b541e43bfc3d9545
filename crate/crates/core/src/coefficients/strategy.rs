use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{CoefficientSet, TimeFunction};
use crate::equilibrium::closed_form::G0ClosedForm;
use crate::error::{KyleError, Result};

/// A deterministic trading intensity `β_t`.
pub trait Intensity: Send + Sync {
    fn beta(&self, t: f64) -> f64;
}

impl Intensity for TimeFunction {
    #[inline]
    fn beta(&self, t: f64) -> f64 {
        self.value(t)
    }
}

impl<I: Intensity + ?Sized> Intensity for &I {
    #[inline]
    fn beta(&self, t: f64) -> f64 {
        (**self).beta(t)
    }
}

impl<I: Intensity + ?Sized> Intensity for Arc<I> {
    #[inline]
    fn beta(&self, t: f64) -> f64 {
        (**self).beta(t)
    }
}

/// `β + y ξ`.
pub struct Perturbed<'a, B: Intensity + ?Sized> {
    pub base: &'a B,
    pub direction: &'a TimeFunction,
    pub step: f64,
}

impl<B: Intensity + ?Sized> Intensity for Perturbed<'_, B> {
    #[inline]
    fn beta(&self, t: f64) -> f64 {
        self.base.beta(t) + self.step * self.direction.value(t)
    }
}

/// `c · β`.
pub struct Scaled<'a, B: Intensity + ?Sized> {
    pub base: &'a B,
    pub factor: f64,
}

impl<B: Intensity + ?Sized> Intensity for Scaled<'_, B> {
    #[inline]
    fn beta(&self, t: f64) -> f64 {
        self.factor * self.base.beta(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategyKind {
    /// Tabulated or parametric intensity, finite on `[0, T - δ]`.
    Grid { beta: TimeFunction },
    /// Optimal intensity for `g = 0`; `alpha0`, if given, must agree with the
    /// value implied by the coefficients.
    ClosedFormG0 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha0: Option<f64>,
    },
    StaticKyle,
    BackPedersen,
}

impl StrategyKind {
    pub fn label(&self) -> &'static str {
        match self {
            StrategyKind::Grid { .. } => "grid",
            StrategyKind::ClosedFormG0 { .. } => "closed_form_g0",
            StrategyKind::StaticKyle => "static_kyle",
            StrategyKind::BackPedersen => "back_pedersen",
        }
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self, StrategyKind::Grid { .. })
    }
}

/// A trading intensity together with its terminal truncation `δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    pub kind: StrategyKind,
    pub delta: f64,
}

const ALPHA0_RTOL: f64 = 1e-8;

impl Strategy {
    pub fn new(kind: StrategyKind, delta: f64) -> Self {
        Strategy { kind, delta }
    }

    /// Checks admissibility against `coeffs` and builds an evaluable intensity.
    pub fn resolve(&self, coeffs: &CoefficientSet) -> Result<ResolvedStrategy> {
        let t_eff = coeffs.horizon - self.delta;
        match &self.kind {
            StrategyKind::Grid { beta } => {
                let (lo, hi) = beta.range_on(t_eff);
                if !(lo > 0.0) || !hi.is_finite() {
                    return Err(KyleError::validation(
                        "strategy.beta",
                        format!("intensity must be finite and > 0 on [0, T - delta]; inf = {lo}"),
                    ));
                }
                Ok(ResolvedStrategy::Grid(beta.clone()))
            }
            StrategyKind::ClosedFormG0 { alpha0 } => {
                let form = G0ClosedForm::new(coeffs)?;
                if let Some(given) = alpha0 {
                    let computed = form.alpha0();
                    if (given - computed).abs() > ALPHA0_RTOL * computed.abs().max(1.0) {
                        return Err(KyleError::validation(
                            "strategy.alpha0",
                            format!("given {given} but the coefficients imply {computed}"),
                        ));
                    }
                }
                Ok(ResolvedStrategy::ClosedForm(Arc::new(form)))
            }
            StrategyKind::StaticKyle => {
                if !(coeffs.f.is_zero() && coeffs.g.is_zero() && coeffs.sigma_v.is_zero()) {
                    return Err(KyleError::NotApplicable(
                        "static_kyle requires f = g = sigma_v = 0".into(),
                    ));
                }
                if !(coeffs.s0 > 0.0) {
                    return Err(KyleError::NotApplicable("static_kyle requires s0 > 0".into()));
                }
                Ok(ResolvedStrategy::ClosedForm(Arc::new(G0ClosedForm::new(coeffs)?)))
            }
            StrategyKind::BackPedersen => {
                if !(coeffs.f.is_zero() && coeffs.g.is_zero()) {
                    return Err(KyleError::NotApplicable("back_pedersen requires f = g = 0".into()));
                }
                if coeffs.sigma_z.as_constant() != Some(1.0) {
                    return Err(KyleError::NotApplicable("back_pedersen requires sigma_z = 1".into()));
                }
                let total = coeffs.s0 + coeffs.sigma_v.square_integral(0.0, coeffs.horizon);
                if (total - coeffs.horizon).abs() > 1e-9 * coeffs.horizon {
                    return Err(KyleError::NotApplicable(format!(
                        "back_pedersen requires s0 + int sigma_v^2 = T; got {total}"
                    )));
                }
                Ok(ResolvedStrategy::ClosedForm(Arc::new(G0ClosedForm::new(coeffs)?)))
            }
        }
    }
}

/// An intensity ready for pointwise evaluation.
#[derive(Debug, Clone)]
pub enum ResolvedStrategy {
    Grid(TimeFunction),
    ClosedForm(Arc<G0ClosedForm>),
}

impl ResolvedStrategy {
    pub fn closed_form(&self) -> Option<&G0ClosedForm> {
        match self {
            ResolvedStrategy::ClosedForm(c) => Some(c),
            ResolvedStrategy::Grid(_) => None,
        }
    }
}

impl Intensity for ResolvedStrategy {
    #[inline]
    fn beta(&self, t: f64) -> f64 {
        match self {
            ResolvedStrategy::Grid(f) => f.value(t),
            ResolvedStrategy::ClosedForm(c) => c.beta(t),
        }
    }
}

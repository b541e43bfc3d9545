//! Deterministic model data: time-dependent coefficients, trading intensities
//! and the scenario file format.

mod scenario;
mod strategy;

pub use scenario::{load_scenario, parse_scenario, Numerics, ScenarioConfig};
pub use strategy::{Intensity, Perturbed, ResolvedStrategy, Scaled, Strategy, StrategyKind};

use serde::{Deserialize, Serialize};

use crate::error::{KyleError, Result};

/// Points used when scanning a coefficient for its extrema on `[0, T]`.
const SCAN_POINTS: usize = 4001;

/// A deterministic function of time on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TimeFunctionRepr", into = "TimeFunctionRepr")]
pub enum TimeFunction {
    Constant(f64),
    /// Coefficients in increasing powers of `t`.
    Polynomial(Vec<f64>),
    /// Piecewise-linear interpolation of `(t, value)` knots.
    Sampled(SampledFn),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledFn {
    t: Vec<f64>,
    v: Vec<f64>,
    // running integral from the first knot, exact for the interpolant
    cum: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum TimeFunctionRepr {
    Constant { value: f64 },
    Polynomial { coeffs: Vec<f64> },
    Sampled { points: Vec<[f64; 2]> },
}

impl TryFrom<TimeFunctionRepr> for TimeFunction {
    type Error = String;

    fn try_from(repr: TimeFunctionRepr) -> std::result::Result<Self, String> {
        match repr {
            TimeFunctionRepr::Constant { value } => Ok(TimeFunction::Constant(value)),
            TimeFunctionRepr::Polynomial { coeffs } => {
                if coeffs.is_empty() {
                    return Err("polynomial needs at least one coefficient".into());
                }
                Ok(TimeFunction::Polynomial(coeffs))
            }
            TimeFunctionRepr::Sampled { points } => {
                TimeFunction::sampled(points.iter().map(|p| (p[0], p[1])).collect())
                    .map_err(|e| e.to_string())
            }
        }
    }
}

impl From<TimeFunction> for TimeFunctionRepr {
    fn from(f: TimeFunction) -> Self {
        match f {
            TimeFunction::Constant(value) => TimeFunctionRepr::Constant { value },
            TimeFunction::Polynomial(coeffs) => TimeFunctionRepr::Polynomial { coeffs },
            TimeFunction::Sampled(s) => TimeFunctionRepr::Sampled {
                points: s.t.iter().zip(&s.v).map(|(&t, &v)| [t, v]).collect(),
            },
        }
    }
}

impl TimeFunction {
    pub fn constant(value: f64) -> Self {
        TimeFunction::Constant(value)
    }

    pub fn polynomial(coeffs: impl Into<Vec<f64>>) -> Self {
        TimeFunction::Polynomial(coeffs.into())
    }

    /// Piecewise-linear function through `points`; times must be strictly increasing.
    pub fn sampled(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(KyleError::validation("sampled", "needs at least two knots"));
        }
        let (t, v): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        if t.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(KyleError::validation("sampled", "knots must be finite"));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(KyleError::validation("sampled", "knot times must be strictly increasing"));
        }
        let mut cum = Vec::with_capacity(t.len());
        cum.push(0.0);
        for i in 1..t.len() {
            let prev = cum[i - 1];
            cum.push(prev + 0.5 * (t[i] - t[i - 1]) * (v[i] + v[i - 1]));
        }
        Ok(TimeFunction::Sampled(SampledFn { t, v, cum }))
    }

    /// Unchecked evaluation; sampled functions are held constant outside their knots.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match self {
            TimeFunction::Constant(c) => *c,
            TimeFunction::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &a| acc * t + a),
            TimeFunction::Sampled(s) => s.value(t),
        }
    }

    /// Evaluation on the model horizon `[0, horizon]`.
    pub fn eval(&self, t: f64, horizon: f64) -> Result<f64> {
        let slack = 1e-12 * horizon.abs().max(1.0);
        if !(t >= -slack && t <= horizon + slack) {
            return Err(KyleError::Domain {
                t,
                lo: 0.0,
                hi: horizon,
            });
        }
        Ok(self.value(t))
    }

    /// Exact `∫_0^t` of the function (of the interpolant for sampled data).
    pub fn antiderivative(&self, t: f64) -> f64 {
        match self {
            TimeFunction::Constant(c) => c * t,
            TimeFunction::Polynomial(c) => c
                .iter()
                .enumerate()
                .rev()
                .fold(0.0, |acc, (i, &a)| acc * t + a / (i as f64 + 1.0))
                * t,
            TimeFunction::Sampled(s) => s.primitive(t) - s.primitive(0.0),
        }
    }

    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.antiderivative(b) - self.antiderivative(a)
    }

    /// Exact `∫_a^b f²`.
    pub fn square_integral(&self, a: f64, b: f64) -> f64 {
        match self {
            TimeFunction::Constant(c) => c * c * (b - a),
            TimeFunction::Polynomial(c) => {
                let mut sq = vec![0.0; 2 * c.len() - 1];
                for (i, &x) in c.iter().enumerate() {
                    for (j, &y) in c.iter().enumerate() {
                        sq[i + j] += x * y;
                    }
                }
                TimeFunction::Polynomial(sq).integral(a, b)
            }
            TimeFunction::Sampled(s) => s.square_primitive(b) - s.square_primitive(a),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            TimeFunction::Constant(c) => *c == 0.0,
            TimeFunction::Polynomial(c) => c.iter().all(|&a| a == 0.0),
            TimeFunction::Sampled(s) => s.v.iter().all(|&a| a == 0.0),
        }
    }

    /// Constant value, if the function is a constant (including a degree-0 polynomial).
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            TimeFunction::Constant(c) => Some(*c),
            TimeFunction::Polynomial(c) if c.iter().skip(1).all(|&a| a == 0.0) => Some(c[0]),
            _ => None,
        }
    }

    /// Infimum and supremum of the function on `[0, horizon]`, scanned on a fine
    /// uniform mesh plus every knot.
    pub fn range_on(&self, horizon: f64) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut visit = |x: f64| {
            lo = lo.min(x);
            hi = hi.max(x);
        };
        for i in 0..SCAN_POINTS {
            visit(self.value(horizon * i as f64 / (SCAN_POINTS - 1) as f64));
        }
        if let TimeFunction::Sampled(s) = self {
            for (&t, &v) in s.t.iter().zip(&s.v) {
                if (0.0..=horizon).contains(&t) {
                    visit(v);
                }
            }
        }
        (lo, hi)
    }

    pub fn sup_abs_on(&self, horizon: f64) -> f64 {
        let (lo, hi) = self.range_on(horizon);
        lo.abs().max(hi.abs())
    }

    fn covers(&self, horizon: f64) -> bool {
        match self {
            TimeFunction::Sampled(s) => s.t[0] <= 0.0 && *s.t.last().unwrap() >= horizon,
            _ => true,
        }
    }
}

impl SampledFn {
    fn locate(&self, t: f64) -> usize {
        // index i with t[i] <= t < t[i+1], clamped to a valid segment
        match self.t.partition_point(|&x| x <= t) {
            0 => 0,
            p => (p - 1).min(self.t.len() - 2),
        }
    }

    fn value(&self, t: f64) -> f64 {
        let n = self.t.len();
        if t <= self.t[0] {
            return self.v[0];
        }
        if t >= self.t[n - 1] {
            return self.v[n - 1];
        }
        let i = self.locate(t);
        let w = (t - self.t[i]) / (self.t[i + 1] - self.t[i]);
        self.v[i] + w * (self.v[i + 1] - self.v[i])
    }

    fn square_primitive(&self, t: f64) -> f64 {
        // ∫ from the first knot of the squared interpolant; segments are summed
        // directly since this is only used for preset validation
        let n = self.t.len();
        let seg = |a: f64, b: f64, fa: f64, fb: f64| (b - a) * (fa * fa + fa * fb + fb * fb) / 3.0;
        if t <= self.t[0] {
            return (t - self.t[0]) * self.v[0] * self.v[0];
        }
        let mut acc = 0.0;
        for i in 0..n - 1 {
            if t <= self.t[i] {
                break;
            }
            let b = t.min(self.t[i + 1]);
            acc += seg(self.t[i], b, self.v[i], self.value(b));
        }
        if t > self.t[n - 1] {
            acc += (t - self.t[n - 1]) * self.v[n - 1] * self.v[n - 1];
        }
        acc
    }

    /// Integral of the (constantly extended) interpolant from the first knot.
    fn primitive(&self, t: f64) -> f64 {
        let n = self.t.len();
        if t <= self.t[0] {
            return (t - self.t[0]) * self.v[0];
        }
        if t >= self.t[n - 1] {
            return self.cum[n - 1] + (t - self.t[n - 1]) * self.v[n - 1];
        }
        let i = self.locate(t);
        self.cum[i] + 0.5 * (t - self.t[i]) * (self.v[i] + self.value(t))
    }
}

/// Deterministic model data `(f, g, h, σᵛ, σᶻ, T, v₀, s₀)`.
///
/// The fundamental value follows `dV = (f V + g P + h) dt + σᵛ dBᵛ` with
/// `V₀ ~ N(v₀, s₀)`; `s₀` is a variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub v0: f64,
    pub s0: f64,
    pub f: TimeFunction,
    pub g: TimeFunction,
    pub h: TimeFunction,
    pub sigma_v: TimeFunction,
    pub sigma_z: TimeFunction,
}

/// What validation measured while accepting a coefficient set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientReport {
    pub sigma_z_inf: f64,
    pub sigma_v_inf: f64,
}

impl CoefficientSet {
    pub fn validate(&self) -> Result<CoefficientReport> {
        let horizon = self.horizon;
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(KyleError::validation("T", "horizon must be finite and > 0"));
        }
        if !self.v0.is_finite() {
            return Err(KyleError::validation("v0", "must be finite"));
        }
        if !(self.s0.is_finite() && self.s0 >= 0.0) {
            return Err(KyleError::validation("s0", "initial variance must be finite and >= 0"));
        }
        for (name, func) in self.named() {
            if !func.covers(horizon) {
                return Err(KyleError::validation(name, "sampled knots must cover [0, T]"));
            }
            let (lo, hi) = func.range_on(horizon);
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(KyleError::validation(name, "must be finite on [0, T]"));
            }
        }
        let (sigma_z_inf, _) = self.sigma_z.range_on(horizon);
        if sigma_z_inf <= 0.0 {
            return Err(KyleError::validation(
                "sigma_z positivity",
                format!("inf sigma_z = {sigma_z_inf} on [0, T]; noise volatility must stay > 0"),
            ));
        }
        let (sigma_v_inf, _) = self.sigma_v.range_on(horizon);
        if sigma_v_inf < 0.0 {
            return Err(KyleError::validation(
                "sigma_v",
                format!("inf sigma_v = {sigma_v_inf} on [0, T]; volatility must be >= 0"),
            ));
        }
        Ok(CoefficientReport {
            sigma_z_inf,
            sigma_v_inf,
        })
    }

    pub fn named(&self) -> [(&'static str, &TimeFunction); 5] {
        [
            ("f", &self.f),
            ("g", &self.g),
            ("h", &self.h),
            ("sigma_v", &self.sigma_v),
            ("sigma_z", &self.sigma_z),
        ]
    }

    pub fn g_vanishes(&self) -> bool {
        self.g.is_zero()
    }

    /// `K = ‖σᵛ‖²_∞ + 2‖f‖_∞`, the growth constant of the variance bound.
    pub fn growth_constant(&self) -> f64 {
        self.sigma_v.sup_abs_on(self.horizon).powi(2) + 2.0 * self.f.sup_abs_on(self.horizon)
    }

    /// Uniform bound `e^{KT}(s₀ + KT)` on the filter error variance.
    pub fn variance_bound(&self) -> f64 {
        let kt = self.growth_constant() * self.horizon;
        kt.exp() * (self.s0 + kt)
    }

    /// `∫_0^t (f + g)`, exact.
    pub fn drift_integral(&self, t: f64) -> f64 {
        self.f.antiderivative(t) + self.g.antiderivative(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        assert_eq!(TimeFunction::constant(2.5).eval(0.7, 1.0).unwrap(), 2.5);
        assert_eq!(TimeFunction::polynomial(vec![0.0, 1.0]).eval(0.25, 1.0).unwrap(), 0.25);
        let s = TimeFunction::sampled(vec![(0.0, 0.0), (1.0, 2.0)]).unwrap();
        assert_eq!(s.eval(0.5, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn eval_outside_horizon_is_domain_error() {
        let f = TimeFunction::constant(1.0);
        assert!(matches!(f.eval(1.5, 1.0), Err(KyleError::Domain { .. })));
        assert!(matches!(f.eval(-0.1, 1.0), Err(KyleError::Domain { .. })));
    }

    #[test]
    fn antiderivatives_are_exact() {
        let p = TimeFunction::polynomial(vec![1.0, 2.0, 3.0]);
        // t + t^2 + t^3 at t = 2
        assert!((p.antiderivative(2.0) - 14.0).abs() < 1e-14);
        let s = TimeFunction::sampled(vec![(0.0, 0.0), (1.0, 2.0), (2.0, 0.0)]).unwrap();
        assert!((s.antiderivative(0.5) - 0.25).abs() < 1e-15);
        assert!((s.antiderivative(2.0) - 2.0).abs() < 1e-15);
        assert!((s.integral(0.5, 1.5) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn square_integrals_are_exact() {
        let p = TimeFunction::polynomial(vec![0.4, 0.4]);
        // ∫_0^1 (0.4 + 0.4 t)^2 dt = 0.16 * 7/3
        assert!((p.square_integral(0.0, 1.0) - 0.16 * 7.0 / 3.0).abs() < 1e-15);
        let s = TimeFunction::sampled(vec![(0.0, 0.4), (1.0, 0.8)]).unwrap();
        assert!((s.square_integral(0.0, 1.0) - 0.16 * 7.0 / 3.0).abs() < 1e-15);
        assert!((s.square_integral(0.5, 1.0) - p.square_integral(0.5, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn sampled_rejects_non_increasing_knots() {
        assert!(TimeFunction::sampled(vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(TimeFunction::sampled(vec![(0.0, 1.0)]).is_err());
    }

    fn base() -> CoefficientSet {
        CoefficientSet {
            horizon: 1.0,
            v0: 0.0,
            s0: 1.0,
            f: TimeFunction::constant(0.0),
            g: TimeFunction::constant(0.0),
            h: TimeFunction::constant(0.0),
            sigma_v: TimeFunction::constant(0.0),
            sigma_z: TimeFunction::constant(1.0),
        }
    }

    #[test]
    fn validation_reports_infima() {
        let report = base().validate().unwrap();
        assert_eq!(report.sigma_z_inf, 1.0);
        assert_eq!(report.sigma_v_inf, 0.0);
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        let mut c = base();
        c.s0 = -1.0;
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("s0"), "{err}");

        let mut c = base();
        c.sigma_z = TimeFunction::sampled(vec![(0.0, 1.0), (0.5, 0.0), (1.0, 1.0)]).unwrap();
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("sigma_z positivity"), "{err}");

        let mut c = base();
        c.f = TimeFunction::sampled(vec![(0.0, 1.0), (0.5, 1.0)]).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn variance_bound_matches_definition() {
        let mut c = base();
        c.sigma_v = TimeFunction::constant(2.0);
        c.f = TimeFunction::constant(-0.5);
        let k: f64 = 4.0 + 1.0;
        assert!((c.variance_bound() - k.exp() * (1.0 + k)).abs() < 1e-12);
    }
}

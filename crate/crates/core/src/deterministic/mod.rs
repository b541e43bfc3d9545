//! Filter-variance Riccati equation, the auxiliary functions built on it and
//! the quadrature utilities shared by the downstream modules.

mod rk4;
mod tail;

pub use rk4::rk4_step;
pub use tail::SimpsonTable;

use crate::coefficients::{CoefficientSet, Intensity};
use crate::error::{KyleError, Result};

/// Ratio `step / (T - t)` targeted by [`TimeGrid::graded`], times the node count.
pub const GRADING: f64 = 5.0;

/// Strictly increasing time nodes starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t: Vec<f64>,
    uniform_step: Option<f64>,
}

impl TimeGrid {
    /// `n` equal steps on `[0, t_end]`.
    pub fn uniform(t_end: f64, n: usize) -> Self {
        assert!(n >= 1 && t_end > 0.0, "uniform grid needs n >= 1 and t_end > 0");
        let step = t_end / n as f64;
        let mut t: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
        t.push(t_end);
        TimeGrid {
            t,
            uniform_step: Some(step),
        }
    }

    /// Arbitrary increasing nodes; the first must be 0.
    pub fn from_nodes(t: Vec<f64>) -> Result<Self> {
        if t.len() < 2 || t[0] != 0.0 {
            return Err(KyleError::validation("grid", "needs at least two nodes starting at 0"));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) || !t[t.len() - 1].is_finite() {
            return Err(KyleError::validation("grid", "nodes must be strictly increasing"));
        }
        Ok(TimeGrid {
            t,
            uniform_step: None,
        })
    }

    /// Grid on `[0, t_end]` whose step is `min(horizon / n, GRADING / n · (horizon - t))`,
    /// so the step shrinks geometrically towards a blow-up at `horizon`.
    /// Every checkpoint inside `(0, t_end)` is inserted as a node.
    pub fn graded(t_end: f64, horizon: f64, n: usize, checkpoints: &[f64]) -> Self {
        assert!(n >= 1 && t_end > 0.0 && t_end <= horizon);
        let coarse = horizon / n as f64;
        let ratio = GRADING / n as f64;
        let mut nodes = vec![0.0];
        let mut t = 0.0;
        loop {
            let step = coarse.min(ratio * (horizon - t));
            let next = t + step;
            if next > t_end - 0.5 * step {
                nodes.push(t_end);
                break;
            }
            nodes.push(next);
            t = next;
        }
        let min_gap = 1e-9 * horizon;
        for &c in checkpoints {
            if !(c > min_gap && c < t_end - min_gap) {
                continue;
            }
            let i = nodes.partition_point(|&x| x < c);
            if (nodes[i] - c).abs() <= min_gap {
                nodes[i] = c;
            } else if (c - nodes[i - 1]).abs() <= min_gap && i - 1 > 0 {
                nodes[i - 1] = c;
            } else {
                nodes.insert(i, c);
            }
        }
        TimeGrid {
            t: nodes,
            uniform_step: None,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.t
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    pub fn uniform_step(&self) -> Option<f64> {
        self.uniform_step
    }

    pub fn step(&self, i: usize) -> f64 {
        self.t[i + 1] - self.t[i]
    }

    pub fn max_step(&self) -> f64 {
        self.t.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Index of the node closest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let i = self.t.partition_point(|&x| x < t);
        if i == 0 {
            0
        } else if i == self.t.len() {
            self.t.len() - 1
        } else if (self.t[i] - t) < (t - self.t[i - 1]) {
            i
        } else {
            i - 1
        }
    }
}

fn check_len(values: &[f64], grid: &TimeGrid) -> Result<()> {
    if values.len() != grid.len() {
        return Err(KyleError::LengthMismatch {
            expected: grid.len(),
            got: values.len(),
        });
    }
    Ok(())
}

/// Composite trapezoid rule over the whole grid.
pub fn quadrature(values: &[f64], grid: &TimeGrid) -> Result<f64> {
    check_len(values, grid)?;
    let t = grid.values();
    Ok((1..t.len())
        .map(|i| 0.5 * (t[i] - t[i - 1]) * (values[i] + values[i - 1]))
        .sum())
}

/// Running trapezoid integrals `∫_0^{t_i}`.
pub fn cumulative(values: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    check_len(values, grid)?;
    let t = grid.values();
    let mut out = Vec::with_capacity(t.len());
    out.push(0.0);
    for i in 1..t.len() {
        let prev = out[i - 1];
        out.push(prev + 0.5 * (t[i] - t[i - 1]) * (values[i] + values[i - 1]));
    }
    Ok(out)
}

/// Running trapezoid integrals `∫_{t_i}^{t_end}`, accumulated from the right.
pub fn tail_cumulative(values: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    check_len(values, grid)?;
    let t = grid.values();
    let n = t.len();
    let mut out = vec![0.0; n];
    for i in (0..n - 1).rev() {
        out[i] = out[i + 1] + 0.5 * (t[i + 1] - t[i]) * (values[i] + values[i + 1]);
    }
    Ok(out)
}

/// `φ₂(t, r) = exp(∫_r^t (f + g))`, using the exact antiderivatives of the coefficients.
pub fn phi2(coeffs: &CoefficientSet, t: f64, r: f64) -> Result<f64> {
    coeffs.f.eval(t, coeffs.horizon)?;
    coeffs.f.eval(r, coeffs.horizon)?;
    Ok((coeffs.drift_integral(t) - coeffs.drift_integral(r)).exp())
}

/// Riccati solution and auxiliary functions on a shared grid ending at `T_eff`.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub grid: TimeGrid,
    pub beta: Vec<f64>,
    /// Filter error variance `S_t`.
    pub s: Vec<f64>,
    /// `k_t = β² S / σᶻ²`.
    pub k: Vec<f64>,
    /// `l_t = β S / σᶻ`.
    pub l: Vec<f64>,
    /// `log φ₁(t, 0) = ∫_0^t (f - k)`.
    pub log_phi1: Vec<f64>,
    pub phi1_t0: Vec<f64>,
    pub phi2_t0: Vec<f64>,
    /// `φ₃(t, 0) = ∫_0^t φ₁(u,0) φ₂(0,u) k_u du`.
    pub phi3_t0: Vec<f64>,
    /// `φ₃(T_eff, t)`.
    pub phi3_tt: Vec<f64>,
    /// `∫_0^t g φ₁(r,0) φ₂(0,r) dr`.
    pub g_weighted: Vec<f64>,
    /// `∫_0^t φ₂(0,r) h_r dr`.
    pub h_weighted: Vec<f64>,
    /// `e^{KT}(s₀ + KT)`.
    pub bound: f64,
}

/// Knobs for [`solve_riccati_with`].
#[derive(Default)]
pub struct RiccatiOptions<'a> {
    /// Use this closed-form variance instead of integrating the Riccati equation;
    /// the remaining auxiliary functions are integrated against it.
    pub exact_variance: Option<&'a (dyn Fn(f64) -> f64 + Sync)>,
    /// Flips the sign of the quadratic drift term. Only for exercising the
    /// verification harness.
    #[doc(hidden)]
    pub corrupt_drift: bool,
}

/// Integrates `dS/dt = σᵛ² + 2fS - (βS/σᶻ)²`, `S_0 = s₀` with fixed-step RK4 on `grid`.
pub fn solve_riccati<B: Intensity + ?Sized>(
    coeffs: &CoefficientSet,
    beta: &B,
    grid: &TimeGrid,
) -> Result<RiccatiSolution> {
    solve_riccati_with(coeffs, beta, grid, &RiccatiOptions::default())
}

pub fn solve_riccati_with<B: Intensity + ?Sized>(
    coeffs: &CoefficientSet,
    beta: &B,
    grid: &TimeGrid,
    opts: &RiccatiOptions<'_>,
) -> Result<RiccatiSolution> {
    if grid.t_end() > coeffs.horizon * (1.0 + 1e-12) {
        return Err(KyleError::Domain {
            t: grid.t_end(),
            lo: 0.0,
            hi: coeffs.horizon,
        });
    }
    let quad_sign = if opts.corrupt_drift { -1.0 } else { 1.0 };
    let exact = opts.exact_variance;
    // state: S, log φ₁(t,0), φ₃(t,0), ∫gφ₁φ₂(0,·), ∫φ₂(0,·)h
    let rhs = |t: f64, y: &[f64; 5]| -> [f64; 5] {
        let f = coeffs.f.value(t);
        let g = coeffs.g.value(t);
        let h = coeffs.h.value(t);
        let sv = coeffs.sigma_v.value(t);
        let sz = coeffs.sigma_z.value(t);
        let b = beta.beta(t);
        let l2 = coeffs.drift_integral(t);
        let s = match exact {
            Some(sf) => sf(t),
            None => y[0],
        };
        let k = b * b * s / (sz * sz);
        let ds = match exact {
            Some(_) => 0.0,
            None => sv * sv + 2.0 * f * s - quad_sign * k * s,
        };
        let w = (y[1] - l2).exp();
        [ds, f - k, w * k, g * w, (-l2).exp() * h]
    };

    let t = grid.values();
    let n = t.len();
    let bound = coeffs.variance_bound();
    let s_limit = bound * (1.0 + 1e-9) + 1e-300;
    let mut states = Vec::with_capacity(n);
    let mut y = [coeffs.s0, 0.0, 0.0, 0.0, 0.0];
    states.push(y);
    for i in 0..n - 1 {
        y = rk4_step(t[i], t[i + 1] - t[i], &y, &rhs);
        let s = match exact {
            Some(sf) => sf(t[i + 1]),
            None => y[0],
        };
        if !s.is_finite() || s < -1e-14 * s_limit || s > s_limit || !y.iter().all(|v| v.is_finite()) {
            return Err(KyleError::BlowUp {
                quantity: "S",
                t: t[i + 1],
                value: s,
            });
        }
        states.push(y);
    }

    let mut sol = RiccatiSolution {
        grid: grid.clone(),
        beta: Vec::with_capacity(n),
        s: Vec::with_capacity(n),
        k: Vec::with_capacity(n),
        l: Vec::with_capacity(n),
        log_phi1: Vec::with_capacity(n),
        phi1_t0: Vec::with_capacity(n),
        phi2_t0: Vec::with_capacity(n),
        phi3_t0: Vec::with_capacity(n),
        phi3_tt: Vec::with_capacity(n),
        g_weighted: Vec::with_capacity(n),
        h_weighted: Vec::with_capacity(n),
        bound,
    };
    let phi3_end = states[n - 1][2];
    for (i, y) in states.iter().enumerate() {
        let ti = t[i];
        let s = match exact {
            Some(sf) => sf(ti),
            None => y[0],
        };
        let b = beta.beta(ti);
        let sz = coeffs.sigma_z.value(ti);
        sol.beta.push(b);
        sol.s.push(s);
        sol.k.push(b * b * s / (sz * sz));
        sol.l.push(b * s / sz);
        sol.log_phi1.push(y[1]);
        sol.phi1_t0.push(y[1].exp());
        sol.phi2_t0.push(coeffs.drift_integral(ti).exp());
        sol.phi3_t0.push(y[2]);
        sol.phi3_tt.push(phi3_end - y[2]);
        sol.g_weighted.push(y[3]);
        sol.h_weighted.push(y[4]);
    }
    Ok(sol)
}

impl RiccatiSolution {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn t_eff(&self) -> f64 {
        self.grid.t_end()
    }

    /// `φ₁(t,0) φ₂(0,t)` at every node.
    pub fn phi12(&self) -> Vec<f64> {
        self.phi1_t0
            .iter()
            .zip(&self.phi2_t0)
            .map(|(a, b)| a / b)
            .collect()
    }

    /// `φ₃(T,t) - [φ₁(t,0)φ₂(0,t) - φ₁(T,0)φ₂(0,T) - ∫_t^T g φ₁(r,0)φ₂(0,r) dr]`.
    pub fn phi3_identity_residual(&self) -> Vec<f64> {
        let n = self.len();
        let end12 = self.phi1_t0[n - 1] / self.phi2_t0[n - 1];
        let g_end = self.g_weighted[n - 1];
        (0..n)
            .map(|i| {
                let here = self.phi1_t0[i] / self.phi2_t0[i];
                self.phi3_tt[i] - (here - end12 - (g_end - self.g_weighted[i]))
            })
            .collect()
    }

    pub fn min_s(&self) -> f64 {
        self.s.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_s(&self) -> f64 {
        self.s.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::TimeFunction;

    fn coeffs(f: f64, sigma_v: f64, s0: f64) -> CoefficientSet {
        CoefficientSet {
            horizon: 1.0,
            v0: 0.0,
            s0,
            f: TimeFunction::constant(f),
            g: TimeFunction::constant(0.0),
            h: TimeFunction::constant(0.0),
            sigma_v: TimeFunction::constant(sigma_v),
            sigma_z: TimeFunction::constant(1.0),
        }
    }

    #[test]
    fn pure_noise_accumulates_linearly() {
        let c = coeffs(0.0, 1.0, 0.0);
        let grid = TimeGrid::uniform(0.999, 1000);
        let sol = solve_riccati(&c, &TimeFunction::constant(0.0), &grid).unwrap();
        for (t, s) in grid.values().iter().zip(&sol.s) {
            assert!((s - t).abs() < 1e-13);
        }
    }

    #[test]
    fn constant_intensity_without_noise() {
        let c = coeffs(0.0, 0.0, 1.0);
        let grid = TimeGrid::uniform(0.999, 2000);
        let sol = solve_riccati(&c, &TimeFunction::constant(1.0), &grid).unwrap();
        for (t, s) in grid.values().iter().zip(&sol.s) {
            assert!((s - 1.0 / (1.0 + t)).abs() < 1e-12);
        }
        assert_eq!(sol.phi1_t0[0], 1.0);
        assert_eq!(sol.phi2_t0[0], 1.0);
        assert_eq!(*sol.phi3_tt.last().unwrap(), 0.0);
    }

    #[test]
    fn blow_up_is_reported() {
        let c = coeffs(0.0, 1.0, 1.0);
        let grid = TimeGrid::uniform(0.999, 100);
        let opts = RiccatiOptions {
            corrupt_drift: true,
            ..Default::default()
        };
        let err = solve_riccati_with(&c, &TimeFunction::constant(30.0), &grid, &opts).unwrap_err();
        assert!(matches!(err, KyleError::BlowUp { .. }));
    }

    #[test]
    fn quadrature_examples() {
        let grid = TimeGrid::uniform(1.0, 7);
        assert!((quadrature(&[1.0; 8], &grid).unwrap() - 1.0).abs() < 1e-15);
        let lin: Vec<f64> = grid.values().to_vec();
        assert!((quadrature(&lin, &grid).unwrap() - 0.5).abs() < 1e-15);
        let grid = TimeGrid::uniform(1.0, 10_000);
        let sq: Vec<f64> = grid.values().iter().map(|t| t * t).collect();
        assert!((quadrature(&sq, &grid).unwrap() - 1.0 / 3.0).abs() < 1e-8);
        assert!(matches!(
            quadrature(&[1.0, 2.0], &grid),
            Err(KyleError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn phi2_examples() {
        let c = coeffs(0.0, 1.0, 1.0);
        assert_eq!(phi2(&c, 0.7, 0.2).unwrap(), 1.0);
        let c = coeffs(1.0, 1.0, 1.0);
        assert!((phi2(&c, 1.0, 0.0).unwrap() - 1f64.exp()).abs() < 1e-15);
        let mut c = coeffs(0.0, 1.0, 1.0);
        c.f = TimeFunction::polynomial(vec![0.0, 1.0]);
        assert!((phi2(&c, 1.0, 0.0).unwrap() - 0.5f64.exp()).abs() < 1e-8);
        assert!(matches!(phi2(&c, 1.5, 0.0), Err(KyleError::Domain { .. })));
    }

    #[test]
    fn graded_grid_contains_checkpoints_and_shrinks() {
        let grid = TimeGrid::graded(0.999, 1.0, 200, &[0.25, 0.5, 0.9]);
        let t = grid.values();
        assert_eq!(t[0], 0.0);
        assert_eq!(grid.t_end(), 0.999);
        for c in [0.25, 0.5, 0.9] {
            assert!(t.contains(&c));
        }
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        let last = grid.step(grid.len() - 2);
        assert!(last < 1e-4, "last step {last}");
        assert!(grid.max_step() <= 1.0 / 200.0 + 1e-15);
    }
}

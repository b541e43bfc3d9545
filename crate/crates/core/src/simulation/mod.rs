//! Monte Carlo engine for `(V, Y, P)`.
//!
//! Three schemes share the same per-path noise:
//!
//! * closed loop: Euler-Maruyama for the value, the order flow and the
//!   recursive filter;
//! * explicit: the value and price rebuilt from stochastic integrals against
//!   the auxiliary functions of the Riccati solution;
//! * reference: the value under the measure where order flow is pure noise,
//!   carrying the log of the change-of-measure weight.
//!
//! The recursive filter uses the exact conditional-mean gain of the
//! Euler-discretized model, `G_n = (1 + fΔ) β Σ_n / (σᶻ² + β² Δ Σ_n)`, which
//! tends to `β S / σᶻ²` as the step vanishes.

mod estimators;
pub mod noise;
mod oracle;

pub use estimators::{
    estimate_payoff, measure_checks, orthogonality, path_payoff, payoff_estimate, summarize,
    terminal_convergence, terminal_rows, variance_checks, weighted_moments, MCEstimate,
    MeasureCheck, PathSummary, Probe, TerminalRow, VarianceCheck, WeightedMoments,
};
pub use oracle::FilterOracle;

use std::sync::Arc;

use crate::coefficients::{CoefficientSet, Intensity};
use crate::deterministic::{solve_riccati, RiccatiSolution, TimeGrid};
use crate::error::{KyleError, Result};
use crate::par::{map_indexed, ExecMode};

/// States beyond this magnitude abort the path.
pub const OVERFLOW_GUARD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Physical,
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ClosedLoop,
    Explicit,
    Reference,
}

/// One simulated path. In reference mode `v` holds the unobserved state `X`.
#[derive(Debug, Clone)]
pub struct PathBundle {
    pub grid: Arc<TimeGrid>,
    pub v: Vec<f64>,
    pub y: Vec<f64>,
    pub p: Vec<f64>,
    pub dbv: Vec<f64>,
    pub dbz: Vec<f64>,
    /// Standard normal behind `V_0 = v₀ + √s₀ · z0`.
    pub z0: f64,
    pub log_l: Option<Vec<f64>>,
    pub measure: Measure,
}

impl PathBundle {
    pub fn new(grid: Arc<TimeGrid>) -> Self {
        let n = grid.len();
        PathBundle {
            v: vec![0.0; n],
            y: vec![0.0; n],
            p: vec![0.0; n],
            dbv: vec![0.0; n - 1],
            dbz: vec![0.0; n - 1],
            z0: 0.0,
            log_l: None,
            measure: Measure::Physical,
            grid,
        }
    }
}

/// Coefficients, intensity and filter quantities tabulated on the simulation grid.
#[derive(Debug, Clone)]
pub struct PathModel {
    pub coeffs: CoefficientSet,
    pub grid: Arc<TimeGrid>,
    pub ric: RiccatiSolution,
    dt: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    h: Vec<f64>,
    sigma_v: Vec<f64>,
    sigma_z: Vec<f64>,
    /// Discrete filter gain.
    pub gain: Vec<f64>,
    /// Discrete filter error variance `Σ_n`.
    pub sigma_disc: Vec<f64>,
    phi1_inv: Vec<f64>,
    phi2_inv: Vec<f64>,
    mode: ExecMode,
}

impl PathModel {
    pub fn new<B: Intensity + ?Sized>(coeffs: &CoefficientSet, beta: &B, grid: TimeGrid) -> Result<Self> {
        let ric = solve_riccati(coeffs, beta, &grid)?;
        let t = grid.values();
        let n = t.len();
        let at = |func: &crate::coefficients::TimeFunction| -> Vec<f64> {
            t.iter().map(|&x| func.value(x)).collect()
        };
        let dt: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
        let f = at(&coeffs.f);
        let sigma_v = at(&coeffs.sigma_v);
        let sigma_z = at(&coeffs.sigma_z);
        let mut gain = vec![0.0; n];
        let mut sigma_disc = vec![0.0; n];
        sigma_disc[0] = coeffs.s0;
        for i in 0..n - 1 {
            let b = ric.beta[i];
            let s = sigma_disc[i];
            let sz2 = sigma_z[i] * sigma_z[i];
            let grow = 1.0 + f[i] * dt[i];
            let denom = sz2 + b * b * dt[i] * s;
            gain[i] = grow * b * s / denom;
            sigma_disc[i + 1] = grow * grow * s * sz2 / denom + sigma_v[i] * sigma_v[i] * dt[i];
        }
        gain[n - 1] = ric.beta[n - 1] * sigma_disc[n - 1] / (sigma_z[n - 1] * sigma_z[n - 1]);
        Ok(PathModel {
            coeffs: coeffs.clone(),
            phi1_inv: ric.log_phi1.iter().map(|l| (-l).exp()).collect(),
            phi2_inv: ric.phi2_t0.iter().map(|p| 1.0 / p).collect(),
            g: at(&coeffs.g),
            h: at(&coeffs.h),
            grid: Arc::new(grid),
            ric,
            dt,
            f,
            sigma_v,
            sigma_z,
            gain,
            sigma_disc,
            mode: ExecMode::default(),
        })
    }

    pub fn with_mode(mut self, mode: ExecMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn mode(&self) -> ExecMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn beta(&self) -> &[f64] {
        &self.ric.beta
    }

    pub fn bundle(&self) -> PathBundle {
        PathBundle::new(self.grid.clone())
    }

    fn draw_noise(&self, seed: u64, index: usize, out: &mut PathBundle) {
        noise::fill_increments(&mut noise::path_rng(seed, index, noise::STREAM_VALUE), &self.dt, &mut out.dbv);
        noise::fill_increments(
            &mut noise::path_rng(seed, index, noise::STREAM_ORDER_FLOW),
            &self.dt,
            &mut out.dbz,
        );
        out.z0 = noise::standard_normal(&mut noise::path_rng(seed, index, noise::STREAM_INITIAL));
    }

    fn initial_value(&self, z0: f64) -> f64 {
        self.coeffs.v0 + self.coeffs.s0.sqrt() * z0
    }

    fn guard(&self, i: usize, v: f64, p: f64, y: f64) -> Result<()> {
        let worst = v.abs().max(p.abs()).max(y.abs());
        if !(worst <= OVERFLOW_GUARD) {
            return Err(KyleError::BlowUp {
                quantity: "path state",
                t: self.grid.values()[i],
                value: worst,
            });
        }
        Ok(())
    }

    /// Euler-Maruyama for value, order flow and recursive filter.
    pub fn fill_closed_loop(&self, seed: u64, index: usize, out: &mut PathBundle) -> Result<()> {
        self.draw_noise(seed, index, out);
        out.measure = Measure::Physical;
        out.log_l = None;
        self.closed_loop_from_noise(out)
    }

    /// Closed-loop scheme driven by the increments already stored in `out`.
    pub fn closed_loop_from_noise(&self, out: &mut PathBundle) -> Result<()> {
        let beta = &self.ric.beta;
        out.v[0] = self.initial_value(out.z0);
        out.p[0] = self.coeffs.v0;
        out.y[0] = 0.0;
        for i in 0..self.dt.len() {
            let d = self.dt[i];
            let (v, p) = (out.v[i], out.p[i]);
            let dy = beta[i] * (v - p) * d + self.sigma_z[i] * out.dbz[i];
            out.v[i + 1] = v + (self.f[i] * v + self.g[i] * p + self.h[i]) * d + self.sigma_v[i] * out.dbv[i];
            out.y[i + 1] = out.y[i] + dy;
            out.p[i + 1] = p + ((self.f[i] + self.g[i]) * p + self.h[i]) * d + self.gain[i] * dy;
            self.guard(i + 1, out.v[i + 1], out.p[i + 1], out.y[i + 1])?;
        }
        Ok(())
    }

    /// Value and price from the stochastic-integral representation.
    ///
    /// With `e = V - P`, `M_t = ∫_0^t φ₁(0,r)(σᵛ dBᵛ - l dBᶻ)` and `Φ₃(t) = φ₃(t,0)`:
    ///
    /// * `e_t = φ₁(t,0) (e₀ + M_t)`
    /// * `P_t = φ₂(t,0) [v₀ + ∫_0^t φ₂(0,r) h dr + Φ₃(t)(e₀ + M_t) - ∫_0^t Φ₃ dM + ∫_0^t φ₂(0,r) l dBᶻ]`
    ///
    /// Stochastic integrals are left-point sums against the stored increments.
    pub fn fill_explicit(&self, seed: u64, index: usize, out: &mut PathBundle) -> Result<()> {
        self.draw_noise(seed, index, out);
        out.measure = Measure::Physical;
        out.log_l = None;
        self.explicit_from_noise(out)
    }

    pub fn explicit_from_noise(&self, out: &mut PathBundle) -> Result<()> {
        let ric = &self.ric;
        let e0 = self.initial_value(out.z0) - self.coeffs.v0;
        let (mut m, mut m_weighted, mut c) = (0.0, 0.0, 0.0);
        out.y[0] = 0.0;
        let n = self.len();
        for i in 0..n {
            let phi3 = ric.phi3_t0[i];
            let e = ric.phi1_t0[i] * (e0 + m);
            let p = ric.phi2_t0[i]
                * (self.coeffs.v0 + ric.h_weighted[i] + phi3 * (e0 + m) - m_weighted + c);
            out.v[i] = p + e;
            out.p[i] = p;
            if i + 1 < n {
                let dm = self.phi1_inv[i] * (self.sigma_v[i] * out.dbv[i] - ric.l[i] * out.dbz[i]);
                m += dm;
                m_weighted += phi3 * dm;
                c += self.phi2_inv[i] * ric.l[i] * out.dbz[i];
                out.y[i + 1] = out.y[i] + ric.beta[i] * e * self.dt[i] + self.sigma_z[i] * out.dbz[i];
            }
            self.guard(i, out.v[i], out.p[i], out.y[i])?;
        }
        Ok(())
    }

    /// Reference-measure scheme: `dY = σᶻ dW`, the state is driven by the filter
    /// built from `Y`, and `log L` accumulates
    /// `∫ μ/σᶻ² dY - ½ ∫ μ²/σᶻ² dt` with `μ = β (X - P)`.
    pub fn fill_reference(&self, seed: u64, index: usize, out: &mut PathBundle) -> Result<()> {
        self.draw_noise(seed, index, out);
        out.measure = Measure::Reference;
        let n = self.len();
        let mut log_l = out.log_l.take().unwrap_or_default();
        log_l.clear();
        log_l.resize(n, 0.0);
        let beta = &self.ric.beta;
        out.v[0] = self.initial_value(out.z0);
        out.p[0] = self.coeffs.v0;
        out.y[0] = 0.0;
        for i in 0..self.dt.len() {
            let d = self.dt[i];
            let (x, p) = (out.v[i], out.p[i]);
            let sz2 = self.sigma_z[i] * self.sigma_z[i];
            let dy = self.sigma_z[i] * out.dbz[i];
            let mu = beta[i] * (x - p);
            log_l[i + 1] = log_l[i] + mu * dy / sz2 - 0.5 * mu * mu * d / sz2;
            out.v[i + 1] = x + (self.f[i] * x + self.g[i] * p + self.h[i]) * d + self.sigma_v[i] * out.dbv[i];
            out.y[i + 1] = out.y[i] + dy;
            out.p[i + 1] = p + ((self.f[i] + self.g[i]) * p + self.h[i]) * d + self.gain[i] * dy;
            self.guard(i + 1, out.v[i + 1], out.p[i + 1], out.y[i + 1])?;
        }
        out.log_l = Some(log_l);
        Ok(())
    }

    pub fn fill(&self, scheme: Scheme, seed: u64, index: usize, out: &mut PathBundle) -> Result<()> {
        match scheme {
            Scheme::ClosedLoop => self.fill_closed_loop(seed, index, out),
            Scheme::Explicit => self.fill_explicit(seed, index, out),
            Scheme::Reference => self.fill_reference(seed, index, out),
        }
    }

    /// Simulates `n_paths` paths and maps each through `reduce`; results are in
    /// path-index order whatever the worker count.
    pub fn run<T, F>(&self, scheme: Scheme, n_paths: usize, seed: u64, reduce: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize, &PathBundle) -> T + Sync + Send,
    {
        let results = map_indexed(
            n_paths,
            self.mode,
            || self.bundle(),
            |buf, i| {
                self.fill(scheme, seed, i, buf)?;
                Ok(reduce(i, buf))
            },
        );
        results.into_iter().collect()
    }

    /// Materialized paths; meant for small path counts.
    pub fn simulate(&self, scheme: Scheme, n_paths: usize, seed: u64) -> Result<Vec<PathBundle>> {
        self.run(scheme, n_paths, seed, |_, b| b.clone())
    }
}

pub fn simulate_closed_loop(model: &PathModel, n_paths: usize, seed: u64) -> Result<Vec<PathBundle>> {
    model.simulate(Scheme::ClosedLoop, n_paths, seed)
}

pub fn simulate_explicit(model: &PathModel, n_paths: usize, seed: u64) -> Result<Vec<PathBundle>> {
    model.simulate(Scheme::Explicit, n_paths, seed)
}

pub fn simulate_reference(model: &PathModel, n_paths: usize, seed: u64) -> Result<Vec<PathBundle>> {
    model.simulate(Scheme::Reference, n_paths, seed)
}

//! Path summaries and Monte Carlo estimators.

use serde::Serialize;

use super::{PathBundle, PathModel};
use crate::deterministic::TimeGrid;

/// Sample mean with its standard error `sample_std / √n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: usize,
    #[serde(rename = "seed")]
    pub master_seed: u64,
}

impl MCEstimate {
    /// Samples are summed in the given order, so the result is reproducible.
    pub fn from_samples(samples: &[f64], master_seed: u64) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let ss: f64 = samples.iter().map(|x| (x - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        MCEstimate {
            mean,
            stderr,
            n_paths: n,
            master_seed,
        }
    }

    /// `|mean - target|` in units of the standard error (infinite if the error is
    /// nonzero and the standard error vanishes).
    pub fn z_score(&self, target: f64) -> f64 {
        z(self.mean - target, self.stderr)
    }
}

fn z(diff: f64, stderr: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff.abs() / stderr
    }
}

/// Grid nodes at which per-path quantities are recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub times: Vec<f64>,
    pub indices: Vec<usize>,
}

impl Probe {
    /// Snaps each time to the nearest grid node.
    pub fn new(grid: &TimeGrid, times: &[f64]) -> Self {
        let indices: Vec<usize> = times.iter().map(|&t| grid.nearest(t)).collect();
        Probe {
            times: indices.iter().map(|&i| grid.values()[i]).collect(),
            indices,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn position(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&x| (x - t).abs() < 1e-12)
    }
}

/// Per-path quantities kept for estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSummary {
    pub payoff: f64,
    pub value: Vec<f64>,
    pub price: Vec<f64>,
    /// Log change-of-measure weight at each probe (empty for physical paths).
    pub log_weight: Vec<f64>,
}

/// Insider wealth `∫_0^{T_eff} β (V - P)(P_{T_eff} - P) dt`, trapezoid in time.
pub fn path_payoff(beta: &[f64], grid: &TimeGrid, path: &PathBundle) -> f64 {
    let t = grid.values();
    let n = t.len();
    let p_end = path.p[n - 1];
    let density = |i: usize| beta[i] * (path.v[i] - path.p[i]) * (p_end - path.p[i]);
    let mut acc = 0.0;
    let mut prev = density(0);
    for i in 1..n {
        let cur = density(i);
        acc += 0.5 * (t[i] - t[i - 1]) * (prev + cur);
        prev = cur;
    }
    acc
}

pub fn summarize(model: &PathModel, probe: &Probe, path: &PathBundle) -> PathSummary {
    PathSummary {
        payoff: path_payoff(model.beta(), &model.grid, path),
        value: probe.indices.iter().map(|&i| path.v[i]).collect(),
        price: probe.indices.iter().map(|&i| path.p[i]).collect(),
        log_weight: match &path.log_l {
            Some(l) => probe.indices.iter().map(|&i| l[i]).collect(),
            None => Vec::new(),
        },
    }
}

pub fn estimate_payoff(model: &PathModel, paths: &[PathBundle], master_seed: u64) -> MCEstimate {
    let samples: Vec<f64> = paths
        .iter()
        .map(|p| path_payoff(model.beta(), &model.grid, p))
        .collect();
    MCEstimate::from_samples(&samples, master_seed)
}

pub fn payoff_estimate(summaries: &[PathSummary], master_seed: u64) -> MCEstimate {
    let samples: Vec<f64> = summaries.iter().map(|s| s.payoff).collect();
    MCEstimate::from_samples(&samples, master_seed)
}

/// Weighted first and second moments `E[wX]`, `E[wX²] - E[wX]²` with delta-method errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedMoments {
    pub mean: f64,
    pub mean_stderr: f64,
    pub variance: f64,
    pub variance_stderr: f64,
}

pub fn weighted_moments(x: &[f64], w: Option<&[f64]>) -> WeightedMoments {
    let n = x.len() as f64;
    let weight = |i: usize| w.map_or(1.0, |w| w[i]);
    let a: Vec<f64> = (0..x.len()).map(|i| weight(i) * x[i] * x[i]).collect();
    let b: Vec<f64> = (0..x.len()).map(|i| weight(i) * x[i]).collect();
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut vaa, mut vbb, mut vab) = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        let (da, db) = (a[i] - ma, b[i] - mb);
        vaa += da * da;
        vbb += db * db;
        vab += da * db;
    }
    let dof = (n - 1.0).max(1.0);
    let (vaa, vbb, vab) = (vaa / dof, vbb / dof, vab / dof);
    let var_of_var = vaa - 4.0 * mb * vab + 4.0 * mb * mb * vbb;
    WeightedMoments {
        mean: mb,
        mean_stderr: (vbb / n).sqrt(),
        variance: ma - mb * mb,
        variance_stderr: (var_of_var.max(0.0) / n).sqrt(),
    }
}

/// Sample variance of the filter error against the Riccati variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceCheck {
    pub t: f64,
    #[serde(rename = "S")]
    pub s: f64,
    /// Error variance of the discretized filter.
    pub s_discrete: f64,
    pub sample_var: f64,
    pub stderr: f64,
    pub z: f64,
}

pub fn variance_checks(model: &PathModel, probe: &Probe, summaries: &[PathSummary]) -> Vec<VarianceCheck> {
    (0..probe.len())
        .map(|k| {
            let err: Vec<f64> = summaries.iter().map(|s| s.value[k] - s.price[k]).collect();
            let m = weighted_moments(&err, None);
            let i = probe.indices[k];
            let s = model.ric.s[i];
            VarianceCheck {
                t: probe.times[k],
                s,
                s_discrete: model.sigma_disc[i],
                sample_var: m.variance,
                stderr: m.variance_stderr,
                z: z(m.variance - s, m.variance_stderr),
            }
        })
        .collect()
}

/// `E[P_t (V_t - P_t)]` at each probe.
pub fn orthogonality(probe: &Probe, summaries: &[PathSummary], master_seed: u64) -> Vec<MCEstimate> {
    (0..probe.len())
        .map(|k| {
            let x: Vec<f64> = summaries
                .iter()
                .map(|s| s.price[k] * (s.value[k] - s.price[k]))
                .collect();
            MCEstimate::from_samples(&x, master_seed)
        })
        .collect()
}

/// Mean-square filter error near the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TerminalRow {
    pub delta: f64,
    pub t: f64,
    pub beta: f64,
    #[serde(rename = "S")]
    pub s: f64,
    pub mse: f64,
    pub stderr: f64,
    pub z: f64,
}

pub fn terminal_rows(
    model: &PathModel,
    probe: &Probe,
    summaries: &[PathSummary],
    deltas: &[f64],
    master_seed: u64,
) -> Vec<TerminalRow> {
    let horizon = model.coeffs.horizon;
    deltas
        .iter()
        .filter_map(|&delta| {
            let target = horizon - delta;
            let k = (0..probe.len()).find(|&k| (probe.times[k] - target).abs() <= 1e-9 * horizon)?;
            let sq: Vec<f64> = summaries
                .iter()
                .map(|s| (s.value[k] - s.price[k]).powi(2))
                .collect();
            let est = MCEstimate::from_samples(&sq, master_seed);
            let i = probe.indices[k];
            let s = model.ric.s[i];
            Some(TerminalRow {
                delta,
                t: probe.times[k],
                beta: model.ric.beta[i],
                s,
                mse: est.mean,
                stderr: est.stderr,
                z: est.z_score(s),
            })
        })
        .collect()
}

/// Terminal table from materialized paths; `deltas` must land on grid nodes.
pub fn terminal_convergence(
    model: &PathModel,
    paths: &[PathBundle],
    deltas: &[f64],
    master_seed: u64,
) -> Vec<TerminalRow> {
    let times: Vec<f64> = deltas.iter().map(|d| model.coeffs.horizon - d).collect();
    let probe = Probe::new(&model.grid, &times);
    let summaries: Vec<PathSummary> = paths.iter().map(|p| summarize(model, &probe, p)).collect();
    terminal_rows(model, &probe, &summaries, deltas, master_seed)
}

/// Reference-measure moments reweighted by `L` against physical moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureCheck {
    pub t: f64,
    pub weight_mean: f64,
    pub weight_stderr: f64,
    pub effective_sample_size: f64,
    pub reference: WeightedMoments,
    pub physical: WeightedMoments,
    pub z_mean: f64,
    pub z_variance: f64,
}

/// Compares reweighted reference paths with independent physical paths at each probe.
pub fn measure_checks(probe: &Probe, reference: &[PathSummary], physical: &[PathSummary]) -> Vec<MeasureCheck> {
    let n = reference.len() as f64;
    (0..probe.len())
        .map(|k| {
            let w: Vec<f64> = reference.iter().map(|s| s.log_weight[k].exp()).collect();
            let weight = MCEstimate::from_samples(&w, 0);
            let second = w.iter().map(|x| x * x).sum::<f64>() / n;
            let ess = n * weight.mean * weight.mean / second;
            if ess < 0.01 * n {
                log::warn!(
                    "weight degeneracy at t = {}: effective sample size {ess:.1} of {n}",
                    probe.times[k]
                );
            }
            let x_ref: Vec<f64> = reference.iter().map(|s| s.value[k]).collect();
            let x_phys: Vec<f64> = physical.iter().map(|s| s.value[k]).collect();
            let r = weighted_moments(&x_ref, Some(&w));
            let p = weighted_moments(&x_phys, None);
            MeasureCheck {
                t: probe.times[k],
                weight_mean: weight.mean,
                weight_stderr: weight.stderr,
                effective_sample_size: ess,
                z_mean: z(r.mean - p.mean, r.mean_stderr.hypot(p.mean_stderr)),
                z_variance: z(r.variance - p.variance, r.variance_stderr.hypot(p.variance_stderr)),
                reference: r,
                physical: p,
            }
        })
        .collect()
}

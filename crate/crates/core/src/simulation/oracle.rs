//! Conditional expectation of the value given the order flow, computed from the
//! joint Gaussian law of the discretized closed-loop model rather than from the
//! recursive filter.

use nalgebra::{DMatrix, DVector};

use super::{PathBundle, PathModel};
use crate::error::{KyleError, Result};

pub const MAX_OBSERVATIONS: usize = 256;
const RIDGE: f64 = 1e-12;

/// Precomputed regression of `V_{t_k}` on the order-flow increments before `t_k`.
#[derive(Debug, Clone)]
pub struct FilterOracle {
    pub times: Vec<f64>,
    indices: Vec<usize>,
    mean_value: Vec<f64>,
    mean_flow: Vec<f64>,
    weights: Vec<Vec<f64>>,
}

/// An affine function of the primitive standard normals.
#[derive(Clone)]
struct Affine {
    c: f64,
    a: Vec<f64>,
}

impl Affine {
    fn constant(c: f64, dim: usize) -> Self {
        Affine { c, a: vec![0.0; dim] }
    }

    fn combine(terms: &[(f64, &Affine)], c: f64) -> Affine {
        let dim = terms[0].1.a.len();
        let mut out = Affine::constant(c, dim);
        for (w, x) in terms {
            out.c += w * x.c;
            for (o, v) in out.a.iter_mut().zip(&x.a) {
                *o += w * v;
            }
        }
        out
    }
}

impl FilterOracle {
    /// `obs_times` are snapped to grid nodes; at most [`MAX_OBSERVATIONS`].
    pub fn new(model: &PathModel, obs_times: &[f64]) -> Result<Self> {
        if obs_times.len() > MAX_OBSERVATIONS {
            return Err(KyleError::validation(
                "obs_times",
                format!("at most {MAX_OBSERVATIONS} observation times"),
            ));
        }
        let grid = &model.grid;
        let t = grid.values();
        let steps = t.len() - 1;
        // primitives: z0, then one normal per Bᵛ increment, then one per Bᶻ increment
        let dim = 1 + 2 * steps;
        let c = &model.coeffs;

        let mut v = Affine::constant(c.v0, dim);
        v.a[0] = c.s0.sqrt();
        let mut p = Affine::constant(c.v0, dim);
        let mut values = Vec::with_capacity(t.len());
        let mut flows: Vec<Affine> = Vec::with_capacity(steps);
        values.push(v.clone());
        for i in 0..steps {
            let d = model.dt[i];
            let (f, g, h) = (model.f[i], model.g[i], model.h[i]);
            let b = model.ric.beta[i];
            let mut dy = Affine::combine(&[(b * d, &v), (-b * d, &p)], 0.0);
            dy.a[1 + steps + i] += model.sigma_z[i] * d.sqrt();
            let mut v_next = Affine::combine(&[(1.0 + f * d, &v), (g * d, &p)], h * d);
            v_next.a[1 + i] += model.sigma_v[i] * d.sqrt();
            let p_next = Affine::combine(&[(1.0 + (f + g) * d, &p), (model.gain[i], &dy)], h * d);
            flows.push(dy);
            v = v_next;
            p = p_next;
            values.push(v.clone());
        }

        let mut indices: Vec<usize> = obs_times.iter().map(|&x| grid.nearest(x)).collect();
        indices.sort_unstable();
        indices.dedup();
        let needed = indices.last().copied().unwrap_or(0);

        // covariance of the increments observed before the last requested node
        let cov = DMatrix::from_fn(needed, needed, |r, s| dot(&flows[r].a, &flows[s].a));
        let chol = match cov.clone().cholesky() {
            Some(ch) => ch,
            None => {
                let scale = cov.diagonal().max().max(f64::MIN_POSITIVE);
                log::warn!("order-flow covariance not positive definite; adding ridge {RIDGE}");
                let ridged = cov + DMatrix::identity(needed, needed) * (RIDGE * scale);
                ridged
                    .cholesky()
                    .ok_or_else(|| KyleError::SingularCovariance(format!("{needed} increments")))?
            }
        };
        let l = chol.l();

        let mut weights = Vec::with_capacity(indices.len());
        for &m in &indices {
            if m == 0 {
                weights.push(Vec::new());
                continue;
            }
            let rhs = DVector::from_fn(m, |r, _| dot(&flows[r].a, &values[m].a));
            let lead = l.view((0, 0), (m, m));
            let half = lead
                .solve_lower_triangular(&rhs)
                .ok_or_else(|| KyleError::SingularCovariance(format!("leading block {m}")))?;
            let w = lead
                .transpose()
                .solve_upper_triangular(&half)
                .ok_or_else(|| KyleError::SingularCovariance(format!("leading block {m}")))?;
            weights.push(w.iter().copied().collect());
        }

        Ok(FilterOracle {
            times: indices.iter().map(|&i| t[i]).collect(),
            mean_value: indices.iter().map(|&i| values[i].c).collect(),
            mean_flow: flows.iter().map(|f| f.c).collect(),
            indices,
            weights,
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Oracle estimates `E[V_{t_k} | order flow up to t_k]` for one physical path.
    pub fn apply(&self, path: &PathBundle) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.mean_value)
            .map(|(w, mean)| {
                let innovation: f64 = w
                    .iter()
                    .enumerate()
                    .map(|(r, wr)| wr * (path.y[r + 1] - path.y[r] - self.mean_flow[r]))
                    .sum();
                mean + innovation
            })
            .collect()
    }

    /// Largest gap between the oracle and the recursive filter stored in `path`.
    pub fn max_gap(&self, path: &PathBundle) -> f64 {
        self.apply(path)
            .iter()
            .zip(&self.indices)
            .map(|(o, &i)| (o - path.p[i]).abs())
            .fold(0.0, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{CoefficientSet, TimeFunction};
    use crate::deterministic::TimeGrid;

    fn coeffs(sigma_v: f64, s0: f64) -> CoefficientSet {
        CoefficientSet {
            horizon: 1.0,
            v0: 0.25,
            s0,
            f: TimeFunction::constant(-0.2),
            g: TimeFunction::constant(0.3),
            h: TimeFunction::constant(0.1),
            sigma_v: TimeFunction::constant(sigma_v),
            sigma_z: TimeFunction::constant(1.0),
        }
    }

    #[test]
    fn initial_observation_returns_prior_mean() {
        let model = PathModel::new(&coeffs(1.0, 1.0), &TimeFunction::constant(1.0), TimeGrid::uniform(0.9, 100))
            .unwrap();
        let oracle = FilterOracle::new(&model, &[0.0]).unwrap();
        let path = &model.simulate(super::super::Scheme::ClosedLoop, 1, 4).unwrap()[0];
        assert_eq!(oracle.apply(path), vec![0.25]);
    }

    #[test]
    fn matches_recursive_filter_with_feedback() {
        let model = PathModel::new(&coeffs(0.5, 1.0), &TimeFunction::constant(1.5), TimeGrid::uniform(0.9, 120))
            .unwrap();
        let times: Vec<f64> = (0..16).map(|k| 0.9 * k as f64 / 15.0).collect();
        let oracle = FilterOracle::new(&model, &times).unwrap();
        for path in model.simulate(super::super::Scheme::ClosedLoop, 4, 9).unwrap() {
            assert!(oracle.max_gap(&path) < 1e-9);
        }
    }
}

//! Running integrals of smooth functions tabulated on a fine uniform mesh.
//!
//! Each panel is integrated with Simpson's rule; evaluation at an arbitrary
//! point adds one Simpson panel on the partial interval, so the result is exact
//! for cubics and the tail `∫_t^T` is accumulated from the right end to avoid
//! cancellation as `t → T`.

#[derive(Debug, Clone)]
pub struct SimpsonTable {
    end: f64,
    step: f64,
    // head[i] = ∫_0^{t_i}, tail[i] = ∫_{t_i}^{end}
    head: Vec<f64>,
    tail: Vec<f64>,
}

#[inline]
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

impl SimpsonTable {
    pub fn new<F: Fn(f64) -> f64>(f: &F, end: f64, panels: usize) -> Self {
        let panels = panels.max(1);
        let step = end / panels as f64;
        let node = |i: usize| if i == panels { end } else { i as f64 * step };
        let pieces: Vec<f64> = (0..panels).map(|i| simpson(f, node(i), node(i + 1))).collect();
        let mut head = vec![0.0; panels + 1];
        for i in 0..panels {
            head[i + 1] = head[i] + pieces[i];
        }
        let mut tail = vec![0.0; panels + 1];
        for i in (0..panels).rev() {
            tail[i] = tail[i + 1] + pieces[i];
        }
        SimpsonTable {
            end,
            step,
            head,
            tail,
        }
    }

    fn panel(&self, t: f64) -> usize {
        let n = self.head.len() - 1;
        ((t / self.step).floor().max(0.0) as usize).min(n - 1)
    }

    fn node(&self, i: usize) -> f64 {
        if i == self.head.len() - 1 {
            self.end
        } else {
            i as f64 * self.step
        }
    }

    pub fn total(&self) -> f64 {
        self.head[self.head.len() - 1]
    }

    /// `∫_0^t f`; `f` must be the function the table was built from.
    pub fn from_start<F: Fn(f64) -> f64>(&self, f: &F, t: f64) -> f64 {
        let i = self.panel(t);
        self.head[i] + simpson(f, self.node(i), t)
    }

    /// `∫_t^end f`.
    pub fn to_end<F: Fn(f64) -> f64>(&self, f: &F, t: f64) -> f64 {
        let i = self.panel(t);
        self.tail[i + 1] + simpson(f, t, self.node(i + 1))
    }
}

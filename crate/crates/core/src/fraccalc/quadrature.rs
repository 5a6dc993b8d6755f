//! Product-integration rules for the power-law kernel (t − τ)^{β−1}/Γ(β).

use super::special::gamma_positive;
use super::FracError;

/// Relative spacing tolerance used to decide whether a grid is uniform.
pub const UNIFORM_GRID_TOL: f64 = 1e-9;

/// Values sampled on a strictly increasing time grid, stored row-major
/// (one row of `dim` components per node).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    times: Vec<f64>,
    values: Vec<f64>,
    dim: usize,
}

impl SampledFunction {
    pub fn new(times: Vec<f64>, values: Vec<f64>, dim: usize) -> Result<Self, FracError> {
        if dim == 0 {
            return Err(FracError::GridMismatch("dimension must be at least 1".into()));
        }
        if values.len() != times.len() * dim {
            return Err(FracError::GridMismatch(format!(
                "{} values for {} nodes of dimension {dim}",
                values.len(),
                times.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FracError::GridMismatch("times must be strictly increasing".into()));
        }
        Ok(Self { times, values, dim })
    }

    /// Samples a scalar function on `0, step, …, n·step`.
    pub fn from_fn_uniform(step: f64, nodes: usize, f: impl Fn(f64) -> f64) -> Self {
        let times: Vec<f64> = (0..nodes).map(|i| i as f64 * step).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        Self {
            times,
            values,
            dim: 1,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.values[index * self.dim..(index + 1) * self.dim]
    }

    /// Constant step if the grid is uniform (starting anywhere).
    pub fn uniform_step(&self) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        let h = self.times[1] - self.times[0];
        let span = self.times[self.times.len() - 1] - self.times[0];
        let expected = h * (self.times.len() - 1) as f64;
        let uniform = self
            .times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= UNIFORM_GRID_TOL * h.max(span))
            && (span - expected).abs() <= UNIFORM_GRID_TOL * span.max(1.0);
        uniform.then_some(h)
    }

    fn check_index(&self, index: usize) -> Result<(), FracError> {
        if index >= self.times.len() {
            return Err(FracError::IndexOutOfRange {
                index,
                len: self.times.len(),
            });
        }
        Ok(())
    }
}

/// (k + 1)^p − k^p without cancellation for large k.
pub(crate) fn forward_power_difference(k: f64, p: f64) -> f64 {
    if k == 0.0 {
        1.0
    } else {
        k.powf(p) * (p * (1.0 / k).ln_1p()).exp_m1()
    }
}

/// b^p − a^p for b > a ≥ 0.
fn power_gap(b: f64, a: f64, p: f64) -> f64 {
    if a == 0.0 {
        b.powf(p)
    } else {
        -b.powf(p) * (p * ((a - b) / b).ln_1p()).exp_m1()
    }
}

/// Weights of the product-trapezoid rule on a uniform grid, shared by the
/// PECE corrector and the fractional integral.
///
/// On node `n` the rule reads
/// `I_n = h^β/Γ(β+2) · (c_n f_0 + Σ_{j=1}^{n−1} a_{n−1−j} f_j + f_n)`.
#[derive(Debug, Clone)]
pub(crate) struct TrapezoidWeights {
    pub(crate) scale: f64,
    /// a_k = (k+2)^{β+1} − 2(k+1)^{β+1} + k^{β+1}
    pub(crate) interior: Vec<f64>,
    /// c_n = (n−1)^{β+1} − (n−1−β)·n^β, for n ≥ 1 (c_0 unused)
    pub(crate) first: Vec<f64>,
}

impl TrapezoidWeights {
    pub(crate) fn new(beta: f64, step: f64, nodes: usize) -> Self {
        let p = beta + 1.0;
        let scale = step.powf(beta) / gamma_positive(beta + 2.0);
        let interior = (0..nodes)
            .map(|k| {
                let k = k as f64;
                forward_power_difference(k + 1.0, p) - forward_power_difference(k, p)
            })
            .collect();
        let first = (0..nodes)
            .map(|n| {
                if n == 0 {
                    0.0
                } else {
                    let m = (n - 1) as f64;
                    // m^{β+1} − (m−β)(m+1)^β = β(m+1)^β − m·((m+1)^β − m^β)
                    beta * (m + 1.0).powf(beta) - m * forward_power_difference(m, beta)
                }
            })
            .collect();
        Self {
            scale,
            interior,
            first,
        }
    }
}

/// Rectangle-rule weights b_k = (k+1)^β − k^β used by the PECE predictor,
/// scaled by h^β/Γ(β+1).
#[derive(Debug, Clone)]
pub(crate) struct RectangleWeights {
    pub(crate) scale: f64,
    pub(crate) weights: Vec<f64>,
}

impl RectangleWeights {
    pub(crate) fn new(beta: f64, step: f64, nodes: usize) -> Self {
        Self {
            scale: step.powf(beta) / gamma_positive(beta + 1.0),
            weights: (0..nodes)
                .map(|k| forward_power_difference(k as f64, beta))
                .collect(),
        }
    }
}

fn check_integral_order(beta: f64) -> Result<(), FracError> {
    if !(beta > 0.0 && beta < 2.0) {
        return Err(FracError::OrderOutOfRange { beta });
    }
    Ok(())
}

/// Kernel moments over one interval `[lo, hi]` seen from time `t ≥ hi`:
/// the rectangle weight of the left value, and the trapezoid (hat) weights
/// of the left and right values, all divided by Γ(β).
pub(crate) fn interval_weights(t: f64, lo: f64, hi: f64, beta: f64) -> (f64, f64, f64) {
    let width = hi - lo;
    let a = t - hi;
    let b = t - lo;
    let m0 = power_gap(b, a, beta) / beta;
    let m1 = power_gap(b, a, beta + 1.0) / (beta + 1.0);
    let norm = gamma_positive(beta);
    (m0 / norm, (m1 - a * m0) / width / norm, (b * m0 - m1) / width / norm)
}

/// ₀I^β f at `times[t_index]`, integrating the kernel exactly against the
/// piecewise-linear interpolant of `f`. Works on non-uniform grids; the
/// integral starts at `times[0]`.
pub fn fractional_integral(f: &SampledFunction, beta: f64, t_index: usize) -> Result<Vec<f64>, FracError> {
    check_integral_order(beta)?;
    f.check_index(t_index)?;
    let dim = f.dim;
    let mut out = vec![0.0; dim];
    let t = f.times[t_index];
    for k in 0..t_index {
        let (_, w_lo, w_hi) = interval_weights(t, f.times[k], f.times[k + 1], beta);
        let (row_lo, row_hi) = (f.row(k), f.row(k + 1));
        for c in 0..dim {
            out[c] += w_lo * row_lo[c] + w_hi * row_hi[c];
        }
    }
    Ok(out)
}

/// ₀I^β f at every node of a uniform grid (row-major, same layout as `f`).
pub fn fractional_integral_all(f: &SampledFunction, beta: f64) -> Result<Vec<f64>, FracError> {
    check_integral_order(beta)?;
    let dim = f.dim;
    let n_nodes = f.len();
    if n_nodes < 2 {
        return Ok(vec![0.0; dim * n_nodes]);
    }
    let step = f
        .uniform_step()
        .ok_or_else(|| FracError::GridMismatch("grid is not uniform".into()))?;
    let w = TrapezoidWeights::new(beta, step, n_nodes);
    let mut out = vec![0.0; dim * n_nodes];
    for n in 1..n_nodes {
        let dst = &mut out[n * dim..(n + 1) * dim];
        let c0 = w.first[n];
        for c in 0..dim {
            dst[c] = c0 * f.values[c] + f.values[n * dim + c];
        }
        for j in 1..n {
            let a = w.interior[n - 1 - j];
            let row = &f.values[j * dim..(j + 1) * dim];
            for c in 0..dim {
                dst[c] += a * row[c];
            }
        }
        for v in dst.iter_mut() {
            *v *= w.scale;
        }
    }
    Ok(out)
}

fn check_derivative_order(beta: f64) -> Result<usize, FracError> {
    if beta > 0.0 && beta < 1.0 {
        Ok(1)
    } else if beta > 1.0 && beta < 2.0 {
        Ok(2)
    } else {
        Err(FracError::OrderOutOfRange { beta })
    }
}

/// L1-type Caputo derivative at `times[t_index]` on a uniform grid.
///
/// The ⌈β⌉-th derivative is replaced by a piecewise-constant difference
/// quotient (first differences for β < 1, second differences for β > 1,
/// the first interval reusing the second difference of the next one) and
/// integrated exactly against (t − τ)^{⌈β⌉−β−1}/Γ(⌈β⌉−β).
pub fn caputo_derivative(y: &SampledFunction, beta: f64, t_index: usize) -> Result<Vec<f64>, FracError> {
    let order = check_derivative_order(beta)?;
    y.check_index(t_index)?;
    if t_index < order {
        return Err(FracError::InsufficientHistory {
            index: t_index,
            needed: order,
        });
    }
    let step = y
        .uniform_step()
        .ok_or_else(|| FracError::GridMismatch("Caputo derivative needs a uniform grid".into()))?;
    let dim = y.dim;
    let mut out = vec![0.0; dim];
    let p = order as f64 - beta;
    let n = t_index;
    for k in 0..n {
        // ∫ over [t_k, t_{k+1}] of (t_n − τ)^{p−1} is h^p/p·[(n−k)^p − (n−k−1)^p]
        let w = forward_power_difference((n - k - 1) as f64, p);
        match order {
            1 => {
                let (a, b) = (y.row(k), y.row(k + 1));
                for c in 0..dim {
                    out[c] += w * (b[c] - a[c]);
                }
            }
            _ => {
                let centre = k.max(1);
                let (a, b, d) = (y.row(centre - 1), y.row(centre), y.row(centre + 1));
                for c in 0..dim {
                    out[c] += w * (d[c] - 2.0 * b[c] + a[c]);
                }
            }
        }
    }
    let scale = step.powf(-beta) / gamma_positive(p + 1.0);
    for v in out.iter_mut() {
        *v *= scale;
    }
    Ok(out)
}

/// Riemann–Liouville derivative d/dt ₀I^{1−β} y for β ∈ (0, 1), by a backward
/// difference of the fractional integral. Diagnostic only: it differs from
/// the Caputo derivative by y(0)·t^{−β}/Γ(1−β).
pub fn riemann_liouville_derivative(y: &SampledFunction, beta: f64, t_index: usize) -> Result<Vec<f64>, FracError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(FracError::OrderOutOfRange { beta });
    }
    y.check_index(t_index)?;
    if t_index < 1 {
        return Err(FracError::InsufficientHistory {
            index: t_index,
            needed: 1,
        });
    }
    let now = fractional_integral(y, 1.0 - beta, t_index)?;
    let before = fractional_integral(y, 1.0 - beta, t_index - 1)?;
    let dt = y.times[t_index] - y.times[t_index - 1];
    Ok(now.iter().zip(&before).map(|(a, b)| (a - b) / dt).collect())
}

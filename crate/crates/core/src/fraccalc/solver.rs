//! Adams–Bashforth–Moulton predictor–corrector for Caputo systems, with a
//! classical RK4 path for integer order.

use super::quadrature::{
    fractional_integral_all, interval_weights, RectangleWeights, SampledFunction, TrapezoidWeights,
};
use super::special::gamma_positive;
use super::FracError;

/// Right-hand side of `D^β y = F(t, y)`.
///
/// `t` only carries piecewise-constant parameters (e.g. fading snapshots);
/// models here are autonomous between parameter switches.
pub trait Field {
    fn eval(&self, t: f64, state: &[f64], out: &mut [f64]);
}

impl<F> Field for F
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fn eval(&self, t: f64, state: &[f64], out: &mut [f64]) {
        self(t, state, out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdeConfig {
    pub beta: f64,
    pub step: f64,
    pub horizon: f64,
    pub initial_state: Vec<f64>,
    /// y′(0); only meaningful for β > 1, where `None` means zero.
    pub initial_velocity: Option<Vec<f64>>,
    pub corrector_iterations: usize,
}

/// Integration route selected by the fractional order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Classical,
    Fractional,
}

const NODE_COUNT_TOL: f64 = 1e-9;

impl FdeConfig {
    pub fn new(beta: f64, step: f64, horizon: f64, initial_state: Vec<f64>) -> Self {
        Self {
            beta,
            step,
            horizon,
            initial_state,
            initial_velocity: None,
            corrector_iterations: 1,
        }
    }

    pub fn with_initial_velocity(mut self, velocity: Vec<f64>) -> Self {
        self.initial_velocity = Some(velocity);
        self
    }

    pub fn with_corrector_iterations(mut self, iterations: usize) -> Self {
        self.corrector_iterations = iterations;
        self
    }

    pub fn route(&self) -> Route {
        if self.beta == 1.0 {
            Route::Classical
        } else {
            Route::Fractional
        }
    }

    /// Number of steps `horizon / step`, validated to be integral.
    pub fn steps(&self) -> Result<usize, FracError> {
        let ratio = self.horizon / self.step;
        let rounded = ratio.round();
        if (ratio - rounded).abs() > NODE_COUNT_TOL * ratio.max(1.0) {
            return Err(FracError::InvalidConfig(format!(
                "horizon {} is not an integer multiple of step {}",
                self.horizon, self.step
            )));
        }
        Ok(rounded as usize)
    }

    pub fn validate(&self) -> Result<(), FracError> {
        let beta = self.beta;
        if !(beta > 0.0 && beta < 2.0) {
            return Err(FracError::OrderOutOfRange { beta });
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(FracError::InvalidConfig(format!("step must be positive, got {}", self.step)));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.step) {
            return Err(FracError::InvalidConfig(format!(
                "horizon must be at least one step, got {}",
                self.horizon
            )));
        }
        self.steps()?;
        if self.initial_state.is_empty() {
            return Err(FracError::InvalidConfig("initial state is empty".into()));
        }
        if self.initial_state.iter().any(|v| !v.is_finite()) {
            return Err(FracError::InvalidConfig("initial state is not finite".into()));
        }
        if let Some(v) = &self.initial_velocity {
            if beta <= 1.0 {
                return Err(FracError::InvalidConfig(
                    "initial velocity is only defined for beta > 1".into(),
                ));
            }
            if v.len() != self.initial_state.len() || v.iter().any(|x| !x.is_finite()) {
                return Err(FracError::InvalidConfig(
                    "initial velocity must match the state dimension and be finite".into(),
                ));
            }
        }
        if self.corrector_iterations == 0 {
            return Err(FracError::InvalidConfig("corrector_iterations must be at least 1".into()));
        }
        Ok(())
    }

    fn velocity(&self) -> Vec<f64> {
        match (&self.initial_velocity, self.beta > 1.0) {
            (Some(v), true) => v.clone(),
            _ => vec![0.0; self.initial_state.len()],
        }
    }
}

fn check_finite(values: &[f64], node: usize) -> Result<(), FracError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(component) => Err(FracError::NonFinite { node, component }),
        None => Ok(()),
    }
}

/// Solves `D^β y = F(t, y)` on `[0, horizon]`.
///
/// β = 1 runs classical RK4; otherwise the fractional PECE scheme with the
/// full memory convolution.
pub fn fde_solve<F: Field + ?Sized>(field: &F, config: &FdeConfig) -> Result<SampledFunction, FracError> {
    config.validate()?;
    match config.route() {
        Route::Classical => solve_classical(field, config),
        Route::Fractional => solve_fractional(field, config),
    }
}

fn solve_classical<F: Field + ?Sized>(field: &F, config: &FdeConfig) -> Result<SampledFunction, FracError> {
    let steps = config.steps()?;
    let h = config.step;
    let dim = config.initial_state.len();
    let mut values = Vec::with_capacity((steps + 1) * dim);
    values.extend_from_slice(&config.initial_state);
    let mut y = config.initial_state.clone();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    for n in 0..steps {
        // all stages see the step's start time, freezing time-dependent parameters per step
        let t = n as f64 * h;
        field.eval(t, &y, &mut k1);
        check_finite(&k1, n)?;
        for c in 0..dim {
            tmp[c] = y[c] + 0.5 * h * k1[c];
        }
        field.eval(t, &tmp, &mut k2);
        for c in 0..dim {
            tmp[c] = y[c] + 0.5 * h * k2[c];
        }
        field.eval(t, &tmp, &mut k3);
        for c in 0..dim {
            tmp[c] = y[c] + h * k3[c];
        }
        field.eval(t, &tmp, &mut k4);
        for c in 0..dim {
            y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        check_finite(&y, n + 1)?;
        values.extend_from_slice(&y);
    }
    let times = (0..=steps).map(|n| n as f64 * h).collect();
    SampledFunction::new(times, values, dim)
}

/// The graded start-up layer covers about `LAYER_SCALE·√N` of the `N` steps.
const LAYER_SCALE: f64 = 1.0;
/// The graded sub-grid is refined until its widest cell is at most
/// `h / LAYER_REFINE`.
const LAYER_REFINE: f64 = 4.0;

/// Sub-grid of `[0, m·h]`: points graded like `s^{2/β}` towards the origin,
/// merged with the uniform nodes. Returns the grid and the positions of the
/// uniform nodes in it.
fn layer_grid(beta: f64, h: f64, m: usize) -> (Vec<f64>, Vec<usize>) {
    let span = m as f64 * h;
    let grading = (2.0 / beta).max(1.0);
    // widest cell is the last one, about span·grading/count
    let count = (LAYER_REFINE * grading * m as f64).ceil() as usize;
    let mut grid: Vec<f64> = (1..count)
        .map(|i| span * (i as f64 / count as f64).powf(grading))
        .filter(|&t| {
            let nearest = (t / h).round() * h;
            (t - nearest).abs() > 1e-3 * h
        })
        .collect();
    grid.extend((0..=m).map(|k| k as f64 * h));
    grid.sort_by(f64::total_cmp);
    let uniform = (0..=m)
        .map(|k| grid.iter().position(|&t| t == k as f64 * h).expect("uniform node present"))
        .collect();
    (grid, uniform)
}

/// Beyond this multiple of the layer span the layer memory is evaluated by
/// its binomial moment expansion instead of cell by cell.
const FAR_FIELD_RATIO: f64 = 2.0;
/// Expansion terms; the series ratio is at most 1/FAR_FIELD_RATIO.
const FAR_FIELD_TERMS: usize = 64;

/// Moments of the layer's field samples, for evaluating
/// `₀I^β` of the layer part at `t ≫ span` via
/// `(t − τ)^{β−1} = t^{β−1} Σ_p (1−β)_p/p! (τ/t)^p`.
struct LayerMoments {
    span: f64,
    beta: f64,
    /// span/Γ(β)
    norm: f64,
    dim: usize,
    /// (1−β)_p / p!
    coeffs: Vec<f64>,
    /// ∫₀¹ s^p g(span·s) ds for the piecewise-constant interpolant
    constant: Vec<f64>,
    /// same for the piecewise-linear interpolant
    linear: Vec<f64>,
}

impl LayerMoments {
    fn new(grid: &[f64], samples: &[f64], dim: usize, beta: f64) -> Self {
        let span = grid[grid.len() - 1];
        let mut coeffs = Vec::with_capacity(FAR_FIELD_TERMS);
        let mut acc = 1.0;
        for p in 0..FAR_FIELD_TERMS {
            coeffs.push(acc);
            acc *= (1.0 - beta + p as f64) / (p as f64 + 1.0);
        }
        let mut constant = vec![0.0; FAR_FIELD_TERMS * dim];
        let mut linear = vec![0.0; FAR_FIELD_TERMS * dim];
        for j in 0..grid.len() - 1 {
            let (lo, hi) = (grid[j] / span, grid[j + 1] / span);
            let width = hi - lo;
            let (g_lo, g_hi) = (&samples[j * dim..(j + 1) * dim], &samples[(j + 1) * dim..(j + 2) * dim]);
            let (mut lo_p1, mut hi_p1) = (lo, hi);
            for p in 0..FAR_FIELD_TERMS {
                let (lo_p2, hi_p2) = (lo_p1 * lo, hi_p1 * hi);
                // ∫ s^p ds and ∫ s^{p+1} ds over the cell
                let a = (hi_p1 - lo_p1) / (p as f64 + 1.0);
                let b = (hi_p2 - lo_p2) / (p as f64 + 2.0);
                let w_lo = (hi * a - b) / width;
                let w_hi = (b - lo * a) / width;
                for c in 0..dim {
                    constant[p * dim + c] += a * g_lo[c];
                    linear[p * dim + c] += w_lo * g_lo[c] + w_hi * g_hi[c];
                }
                lo_p1 = lo_p2;
                hi_p1 = hi_p2;
            }
        }
        Self {
            span,
            beta,
            norm: span / gamma_positive(beta),
            dim,
            coeffs,
            constant,
            linear,
        }
    }

    fn add_to(&self, t: f64, rect: &mut [f64], trap: &mut [f64]) {
        let x = self.span / t;
        let scale = t.powf(self.beta - 1.0) * self.norm;
        let mut xp = scale;
        for p in 0..FAR_FIELD_TERMS {
            let w = xp * self.coeffs[p];
            for c in 0..self.dim {
                rect[c] += w * self.constant[p * self.dim + c];
                trap[c] += w * self.linear[p * self.dim + c];
            }
            xp *= x;
        }
    }
}

fn solve_fractional<F: Field + ?Sized>(field: &F, config: &FdeConfig) -> Result<SampledFunction, FracError> {
    let steps = config.steps()?;
    let h = config.step;
    let beta = config.beta;
    let dim = config.initial_state.len();
    let nodes = steps + 1;
    let y0 = &config.initial_state;
    let v0 = config.velocity();

    let mut predictor = vec![0.0; dim];
    let mut corrector = vec![0.0; dim];
    let mut y_next = vec![0.0; dim];
    let mut f_next = vec![0.0; dim];

    // The solution behaves like t^β near the origin, which a uniform
    // piecewise-linear rule resolves poorly on the first few steps. Those
    // steps are integrated on a graded sub-grid, whose field samples then
    // stay part of the memory for every later node.
    let m = steps.min((LAYER_SCALE * (steps as f64).sqrt()).ceil() as usize);
    let (fine, uniform_at) = layer_grid(beta, h, m);
    let mut fine_f = vec![0.0; fine.len() * dim];
    let mut fine_y = vec![0.0; fine.len() * dim];
    fine_y[..dim].copy_from_slice(y0);
    field.eval(0.0, y0, &mut fine_f[..dim]);
    check_finite(&fine_f[..dim], 0)?;
    for i in 0..fine.len() - 1 {
        let t = fine[i + 1];
        // failures inside the layer are reported against the uniform node being approached
        let node = uniform_at.partition_point(|&u| u < i + 1);
        for c in 0..dim {
            predictor[c] = y0[c] + t * v0[c];
            corrector[c] = predictor[c];
        }
        let mut last_hi = 0.0;
        for j in 0..=i {
            let (r, lo, hi) = interval_weights(t, fine[j], fine[j + 1], beta);
            let row = &fine_f[j * dim..(j + 1) * dim];
            for c in 0..dim {
                predictor[c] += r * row[c];
                corrector[c] += lo * row[c];
            }
            if j < i {
                let next = &fine_f[(j + 1) * dim..(j + 2) * dim];
                for c in 0..dim {
                    corrector[c] += hi * next[c];
                }
            } else {
                last_hi = hi;
            }
        }
        y_next.copy_from_slice(&predictor);
        for _ in 0..config.corrector_iterations {
            field.eval(t, &y_next, &mut f_next);
            check_finite(&f_next, node)?;
            for c in 0..dim {
                y_next[c] = corrector[c] + last_hi * f_next[c];
            }
        }
        check_finite(&y_next, node)?;
        fine_y[(i + 1) * dim..(i + 2) * dim].copy_from_slice(&y_next);
        let slot = &mut fine_f[(i + 1) * dim..(i + 2) * dim];
        field.eval(t, &y_next, slot);
        check_finite(slot, node)?;
    }

    let mut values = Vec::with_capacity(nodes * dim);
    let mut history = vec![0.0; nodes * dim];
    for (k, &i) in uniform_at.iter().enumerate() {
        values.extend_from_slice(&fine_y[i * dim..(i + 1) * dim]);
        history[k * dim..(k + 1) * dim].copy_from_slice(&fine_f[i * dim..(i + 1) * dim]);
    }

    let far = LayerMoments::new(&fine, &fine_f, dim, beta);
    let rect = RectangleWeights::new(beta, h, nodes);
    let trap = TrapezoidWeights::new(beta, h, nodes);
    let mut uniform_pred = vec![0.0; dim];
    let mut uniform_corr = vec![0.0; dim];
    for n in m..steps {
        let t_next = (n + 1) as f64 * h;
        for c in 0..dim {
            predictor[c] = y0[c] + t_next * v0[c];
            corrector[c] = predictor[c];
        }
        if t_next >= FAR_FIELD_RATIO * far.span {
            far.add_to(t_next, &mut predictor, &mut corrector);
        } else {
            for j in 0..fine.len() - 1 {
                let (r, lo, hi) = interval_weights(t_next, fine[j], fine[j + 1], beta);
                let (a, b) = (&fine_f[j * dim..(j + 1) * dim], &fine_f[(j + 1) * dim..(j + 2) * dim]);
                for c in 0..dim {
                    predictor[c] += r * a[c];
                    corrector[c] += lo * a[c] + hi * b[c];
                }
            }
        }
        // uniform part of the memory, on [t_m, t_{n+1}]
        let first = &history[m * dim..(m + 1) * dim];
        let c0 = trap.first[n + 1 - m];
        for c in 0..dim {
            uniform_pred[c] = rect.weights[n - m] * first[c];
            uniform_corr[c] = c0 * first[c];
        }
        for j in m + 1..=n {
            let row = &history[j * dim..(j + 1) * dim];
            let b = rect.weights[n - j];
            let a = trap.interior[n - j];
            for c in 0..dim {
                uniform_pred[c] += b * row[c];
                uniform_corr[c] += a * row[c];
            }
        }
        for c in 0..dim {
            y_next[c] = predictor[c] + rect.scale * uniform_pred[c];
            corrector[c] += trap.scale * uniform_corr[c];
        }
        for _ in 0..config.corrector_iterations {
            field.eval(t_next, &y_next, &mut f_next);
            check_finite(&f_next, n + 1)?;
            for c in 0..dim {
                y_next[c] = corrector[c] + trap.scale * f_next[c];
            }
        }
        check_finite(&y_next, n + 1)?;
        values.extend_from_slice(&y_next);
        let slot = &mut history[(n + 1) * dim..(n + 2) * dim];
        field.eval(t_next, &y_next, slot);
        check_finite(slot, n + 1)?;
    }

    let times = (0..nodes).map(|n| n as f64 * h).collect();
    SampledFunction::new(times, values, dim)
}

/// Residual of the equivalent integral form
/// `X(t) = X⁰ + t·X′(0) + ₀I^β F(X(t))`, as the maximum L1 norm over nodes.
///
/// `initial_velocity` is only used for β > 1 and defaults to zero, in which
/// case this is exactly `X(t) − X⁰ − ₀I^β F(X(t))`.
pub fn volterra_residual<F: Field + ?Sized>(
    traj: &SampledFunction,
    field: &F,
    beta: f64,
    initial_velocity: Option<&[f64]>,
) -> Result<f64, FracError> {
    if !(beta > 0.0 && beta < 2.0) {
        return Err(FracError::OrderOutOfRange { beta });
    }
    let dim = traj.dim();
    if traj.len() < 2 {
        return Err(FracError::GridMismatch("trajectory needs at least two nodes".into()));
    }
    if traj.uniform_step().is_none() {
        return Err(FracError::GridMismatch("trajectory grid is not uniform".into()));
    }
    if let Some(v) = initial_velocity {
        if v.len() != dim {
            return Err(FracError::GridMismatch(format!(
                "initial velocity has {} components, trajectory has {dim}",
                v.len()
            )));
        }
    }
    let mut sampled = vec![0.0; traj.len() * dim];
    for (n, &t) in traj.times().iter().enumerate() {
        field.eval(t, traj.row(n), &mut sampled[n * dim..(n + 1) * dim]);
    }
    let forcing = SampledFunction::new(traj.times().to_vec(), sampled, dim)?;
    let integral = fractional_integral_all(&forcing, beta)?;
    let x0 = traj.row(0);
    let t0 = traj.times()[0];
    let mut worst: f64 = 0.0;
    for n in 0..traj.len() {
        let t = traj.times()[n] - t0;
        let row = traj.row(n);
        let mut norm = 0.0;
        for c in 0..dim {
            let drift = match initial_velocity {
                Some(v) if beta > 1.0 => t * v[c],
                _ => 0.0,
            };
            norm += (row[c] - x0[c] - drift - integral[n * dim + c]).abs();
        }
        worst = worst.max(norm);
    }
    Ok(worst)
}

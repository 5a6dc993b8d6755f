//! Trajectories of the replicator dynamics and the analyses built on them.
//!
//! [`run`] integrates a compiled [`GameModel`] with the classical or the
//! fractional solver. Fading enters as a piecewise-constant schedule of
//! [`FadingDraw`] snapshots, looked up by time inside the field.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fraccalc::{fde_solve, FdeConfig, FracError, SampledFunction};
use crate::game::{GameError, GameModel, Layout};
use crate::netmodel::{sample_fading, BsKind, FadingDraw};

/// Allowed simplex drift before a node is clamped and renormalised.
pub const DRIFT_TOL: f64 = 1e-6;

/// Tolerance on Σp = 1 for initial strategies passed to [`run`].
pub const INITIAL_SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Solver(#[from] FracError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("reference run did not reach ‖F‖∞ < {tol} within {horizon} s")]
    NotConverged { tol: f64, horizon: f64 },
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, DynamicsError> {
    Err(DynamicsError::InvalidConfig(msg.into()))
}

/// y′(0) for β > 1.
///
/// As β → 1⁺ the Caputo problem tends to y′ = F(y) + y′(0), so only a zero
/// initial velocity recovers the classical game in the limit.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitialVelocity {
    #[default]
    Zero,
    /// F(X⁰); drives the homogeneous preset off the simplex for every β > 1
    ClassicalRate,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum FadingSchedule {
    /// h ≡ 1 on every link
    #[default]
    None,
    /// fresh Exp(1) gains on all links every `period` seconds
    Redraw { period: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub beta: f64,
    pub delta: f64,
    pub step: f64,
    pub horizon: f64,
    /// flat initial state in layout order
    pub initial: Vec<f64>,
    pub initial_velocity: InitialVelocity,
    pub fading: FadingSchedule,
    pub corrector_iterations: usize,
}

impl RunConfig {
    pub fn new(beta: f64, delta: f64, step: f64, horizon: f64, initial: Vec<f64>) -> Self {
        Self {
            beta,
            delta,
            step,
            horizon,
            initial,
            initial_velocity: InitialVelocity::default(),
            fading: FadingSchedule::default(),
            corrector_iterations: 1,
        }
    }

    /// Defaults from the scenario's dynamics table and initial strategies.
    pub fn from_scenario(scenario: &crate::scenarios::Scenario) -> Self {
        let d = &scenario.dynamics;
        let initial = (0..scenario.users.len()).flat_map(|i| scenario.initial_strategy(i)).collect();
        Self::new(d.beta, d.delta, d.step, d.horizon, initial)
    }

    pub fn with_fading(mut self, fading: FadingSchedule) -> Self {
        self.fading = fading;
        self
    }
}

/// Fading snapshots indexed by ⌊t / period⌋.
#[derive(Debug, Clone)]
pub struct FadingTimeline {
    period: f64,
    draws: Vec<FadingDraw>,
}

impl FadingTimeline {
    pub fn new(model: &GameModel, schedule: &FadingSchedule, horizon: f64) -> Result<Option<Self>, DynamicsError> {
        match *schedule {
            FadingSchedule::None => Ok(None),
            FadingSchedule::Redraw { period, seed } => {
                if !(period > 0.0 && period.is_finite()) {
                    return invalid(format!("fading period must be positive, got {period}"));
                }
                let count = (horizon / period + 1e-9).floor() as usize + 1;
                let (stations, users) = model.fading_shape();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let draws = (0..count).map(|_| sample_fading(&mut rng, stations, users)).collect();
                Ok(Some(Self { period, draws }))
            }
        }
    }

    pub fn at(&self, t: f64) -> &FadingDraw {
        let k = (t / self.period + 1e-9).floor().max(0.0) as usize;
        &self.draws[k.min(self.draws.len() - 1)]
    }
}

/// The replicator field as a solver callback.
pub struct ReplicatorField<'a> {
    pub model: &'a GameModel,
    pub delta: f64,
    pub fading: Option<&'a FadingTimeline>,
}

impl ReplicatorField<'_> {
    fn draw(&self, t: f64) -> Option<&FadingDraw> {
        self.fading.map(|f| f.at(t))
    }
}

impl crate::fraccalc::Field for ReplicatorField<'_> {
    fn eval(&self, t: f64, state: &[f64], out: &mut [f64]) {
        if self.model.replicator_field(state, self.delta, self.draw(t), out).is_err() {
            // surfaces as a non-finite abort with the node index
            out.fill(f64::NAN);
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub layout: Layout,
    pub beta: f64,
    pub times: Vec<f64>,
    /// nodes × dim, row-major
    pub states: Vec<f64>,
    /// nodes × dim
    pub utilities: Vec<f64>,
    /// nodes × blocks
    pub avg_utilities: Vec<f64>,
    /// y′(0) used by the solver, for β > 1
    pub initial_velocity: Option<Vec<f64>>,
    /// nodes that needed clamping
    pub drift_corrections: usize,
    /// largest simplex violation seen before any correction
    pub max_drift: f64,
}

impl Trajectory {
    pub fn nodes(&self) -> usize {
        self.times.len()
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn state(&self, n: usize) -> &[f64] {
        &self.states[n * self.dim()..(n + 1) * self.dim()]
    }

    pub fn utility(&self, n: usize) -> &[f64] {
        &self.utilities[n * self.dim()..(n + 1) * self.dim()]
    }

    pub fn avg_utility(&self, n: usize, block: usize) -> f64 {
        self.avg_utilities[n * self.layout.blocks.len() + block]
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.nodes() - 1)
    }

    pub fn sampled(&self) -> SampledFunction {
        SampledFunction::new(self.times.clone(), self.states.clone(), self.dim()).expect("trajectory grid is valid")
    }
}

fn check_initial(model: &GameModel, x: &[f64]) -> Result<(), DynamicsError> {
    if x.len() != model.dim() {
        return invalid(format!("initial state has {} entries, model has {}", x.len(), model.dim()));
    }
    for b in &model.layout().blocks {
        let p = &x[b.range()];
        if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return invalid(format!("initial strategy of {} leaves [0, 1]", b.owner));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > INITIAL_SIMPLEX_TOL {
            return invalid(format!("initial strategy of {} sums to {sum}", b.owner));
        }
    }
    Ok(())
}

/// Simplex violation of one node: max of |Σp − 1| and the excursion outside [0, 1].
fn drift(layout: &Layout, x: &[f64]) -> f64 {
    layout
        .blocks
        .iter()
        .map(|b| {
            let p = &x[b.range()];
            let sum: f64 = p.iter().sum();
            let outside = p.iter().map(|&v| (-v).max(v - 1.0).max(0.0)).fold(0.0, f64::max);
            (sum - 1.0).abs().max(outside)
        })
        .fold(0.0, f64::max)
}

fn project(layout: &Layout, x: &mut [f64]) {
    for b in &layout.blocks {
        let p = &mut x[b.range()];
        for v in p.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        let sum: f64 = p.iter().sum();
        if sum > 0.0 {
            p.iter_mut().for_each(|v| *v /= sum);
        }
    }
}

/// Integrates the replicator dynamics: RK4 for β = 1, fractional PECE otherwise.
pub fn run(model: &GameModel, cfg: &RunConfig) -> Result<Trajectory, DynamicsError> {
    check_initial(model, &cfg.initial)?;
    if !cfg.delta.is_finite() {
        return invalid("delta must be finite");
    }
    if !(cfg.horizon > 0.0) {
        return invalid(format!("horizon must be positive, got {}", cfg.horizon));
    }
    let timeline = FadingTimeline::new(model, &cfg.fading, cfg.horizon)?;
    let field = ReplicatorField {
        model,
        delta: cfg.delta,
        fading: timeline.as_ref(),
    };
    let mut solver = FdeConfig::new(cfg.beta, cfg.step, cfg.horizon, cfg.initial.clone())
        .with_corrector_iterations(cfg.corrector_iterations);
    let mut velocity = None;
    if cfg.beta > 1.0 {
        let v = match &cfg.initial_velocity {
            InitialVelocity::ClassicalRate => {
                let mut v = vec![0.0; model.dim()];
                model.replicator_field(&cfg.initial, cfg.delta, field.draw(0.0), &mut v)?;
                v
            }
            InitialVelocity::Zero => vec![0.0; model.dim()],
            InitialVelocity::Explicit(v) => v.clone(),
        };
        solver = solver.with_initial_velocity(v.clone());
        velocity = Some(v);
    } else if matches!(cfg.initial_velocity, InitialVelocity::Explicit(_)) {
        return invalid("an explicit initial velocity needs beta > 1");
    }
    let solution = fde_solve(&field, &solver)?;

    let layout = model.layout().clone();
    let dim = model.dim();
    let nodes = solution.len();
    let mut states = solution.values().to_vec();
    let mut utilities = vec![0.0; nodes * dim];
    let mut avg_utilities = Vec::with_capacity(nodes * layout.blocks.len());
    let (mut corrections, mut max_drift) = (0, 0.0f64);
    for n in 0..nodes {
        let t = solution.times()[n];
        let x = &mut states[n * dim..(n + 1) * dim];
        let d = drift(&layout, x);
        max_drift = max_drift.max(d);
        if d > DRIFT_TOL {
            if corrections == 0 {
                log::warn!("simplex drift {d:.3e} at t = {t}; clamping and renormalising");
            }
            corrections += 1;
            project(&layout, x);
        }
        let u = &mut utilities[n * dim..(n + 1) * dim];
        model.utilities(x, field.draw(t), u)?;
        avg_utilities.extend(model.averages(x, u));
    }
    if corrections > 1 {
        log::warn!("{corrections} nodes exceeded the simplex drift tolerance");
    }
    Ok(Trajectory {
        layout,
        beta: cfg.beta,
        times: solution.times().to_vec(),
        states,
        utilities,
        avg_utilities,
        initial_velocity: velocity,
        drift_corrections: corrections,
        max_drift,
    })
}

/// Earliest node after which every trailing window of `window` nodes has a
/// per-coordinate range below `epsilon`. Returns that node's time and state.
pub fn detect_convergence(traj: &Trajectory, epsilon: f64, window: usize) -> Option<(f64, Vec<f64>)> {
    let nodes = traj.nodes();
    if window < 2 || nodes < window || !(epsilon > 0.0) {
        return None;
    }
    let dim = traj.dim();
    let settled = |end: usize| {
        (0..dim).all(|c| {
            let (lo, hi) = (end + 1 - window..=end)
                .map(|n| traj.states[n * dim + c])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            hi - lo < epsilon
        })
    };
    let mut first = None;
    for end in (window - 1..nodes).rev() {
        if !settled(end) {
            break;
        }
        first = Some(end);
    }
    first.map(|n| (traj.times[n], traj.state(n).to_vec()))
}

/// Trapezoidal integral of `owner`'s average utility from 0 to each node.
pub fn cumulative_utility(traj: &Trajectory, owner: &str) -> Result<Vec<f64>, DynamicsError> {
    let b = traj
        .layout
        .block_index(owner)
        .ok_or_else(|| GameError::UnknownOwner(owner.to_string()))?;
    let mut out = Vec::with_capacity(traj.nodes());
    let mut acc = 0.0;
    out.push(0.0);
    for n in 1..traj.nodes() {
        let dt = traj.times[n] - traj.times[n - 1];
        acc += 0.5 * dt * (traj.avg_utility(n - 1, b) + traj.avg_utility(n, b));
        out.push(acc);
    }
    Ok(out)
}

/// Cumulative utility averaged over all owners.
pub fn mean_cumulative_utility(traj: &Trajectory) -> Vec<f64> {
    let owners = &traj.layout.blocks;
    let mut out = vec![0.0; traj.nodes()];
    for b in owners {
        let series = cumulative_utility(traj, &b.owner).expect("owner from layout");
        for (o, v) in out.iter_mut().zip(series) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|v| *v /= owners.len() as f64);
    out
}

/// Smoothed L1 strategy speed ‖Ẋ‖₁.
///
/// Velocities use central differences (one-sided at the ends) and are then
/// averaged over a centred window of `width` nodes, truncated at the ends.
pub fn adaptation_rate(traj: &Trajectory, width: usize) -> Vec<f64> {
    let nodes = traj.nodes();
    if nodes < 2 {
        return vec![0.0; nodes];
    }
    let speed: Vec<f64> = (0..nodes)
        .map(|n| {
            let (a, b) = (n.saturating_sub(1), (n + 1).min(nodes - 1));
            let dt = traj.times[b] - traj.times[a];
            traj.state(a).iter().zip(traj.state(b)).map(|(p, q)| (q - p).abs()).sum::<f64>() / dt
        })
        .collect();
    let half = width.max(1) / 2;
    (0..nodes)
        .map(|n| {
            let (lo, hi) = (n.saturating_sub(half), (n + half).min(nodes - 1));
            speed[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Classical run from `initial` until ‖F‖∞ < `tol`.
pub fn reference_equilibrium(model: &GameModel, delta: f64, initial: &[f64], tol: f64) -> Result<Vec<f64>, DynamicsError> {
    const CHUNK: f64 = 50.0;
    const MAX_HORIZON: f64 = 1e5;
    let mut x = initial.to_vec();
    let mut f = vec![0.0; x.len()];
    let mut elapsed = 0.0;
    while elapsed < MAX_HORIZON {
        model.replicator_field(&x, delta, None, &mut f)?;
        if f.iter().all(|v| v.abs() < tol) {
            return Ok(x);
        }
        let traj = run(model, &RunConfig::new(1.0, delta, 0.01, CHUNK, x.clone()))?;
        x = traj.final_state().to_vec();
        elapsed += CHUNK;
    }
    Err(DynamicsError::NotConverged {
        tol,
        horizon: MAX_HORIZON,
    })
}

/// Replicator field on the barycentric grid of a three-choice simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionField {
    pub resolution: usize,
    /// (y_u, y_m, y_a)
    pub points: Vec<[f64; 3]>,
    pub vectors: Vec<[f64; 3]>,
    pub equilibrium: [f64; 3],
    pub equilibrium_vector: [f64; 3],
}

/// Evaluates the field at the centroids of the upward cells of an
/// `resolution`-fold subdivided simplex, giving n(n+1)/2 interior points.
pub fn direction_field(
    model: &GameModel,
    delta: f64,
    resolution: usize,
    equilibrium: &[f64],
) -> Result<DirectionField, DynamicsError> {
    if resolution < 5 {
        return invalid(format!("resolution must be at least 5, got {resolution}"));
    }
    let layout = model.layout();
    if !matches!(model.kind(), crate::game::GameKind::Homogeneous { .. }) || layout.blocks.len() != 1 || layout.dim != 3 {
        return invalid("direction fields need a three-choice homogeneous scenario");
    }
    let kinds = &layout.blocks[0].kinds;
    let index = |k: BsKind| kinds.iter().position(|&x| x == k);
    let order = match (index(BsKind::Uhf), index(BsKind::MmWave), index(BsKind::UavMmWave)) {
        (Some(u), Some(m), Some(a)) => [u, m, a],
        _ => return invalid("direction fields need one UHF, one mmWave and one UAV choice"),
    };
    let eval = |y: [f64; 3]| -> Result<[f64; 3], DynamicsError> {
        let mut x = [0.0; 3];
        for (c, &k) in order.iter().enumerate() {
            x[k] = y[c];
        }
        let mut f = [0.0; 3];
        model.replicator_field(&x, delta, None, &mut f)?;
        Ok([f[order[0]], f[order[1]], f[order[2]]])
    };
    let n = resolution as f64;
    let mut points = Vec::new();
    let mut vectors = Vec::new();
    for i in 0..resolution {
        for j in 0..resolution - i {
            let yu = (i as f64 + 1.0 / 3.0) / n;
            let ym = (j as f64 + 1.0 / 3.0) / n;
            let y = [yu, ym, 1.0 - yu - ym];
            vectors.push(eval(y)?);
            points.push(y);
        }
    }
    if equilibrium.len() != 3 {
        return invalid("equilibrium must have three components");
    }
    let eq = [equilibrium[order[0]], equilibrium[order[1]], equilibrium[order[2]]];
    Ok(DirectionField {
        resolution,
        points,
        equilibrium_vector: eval(eq)?,
        vectors,
        equilibrium: eq,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloConfig {
    pub replicates: usize,
    pub delta_fade: f64,
    pub base_seed: u64,
    /// false: every replicate uses h ≡ 1
    pub fading: bool,
    /// worker threads; `None` uses the available parallelism
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub beta: f64,
    pub replicates: usize,
    pub seed: u64,
    pub times: Vec<f64>,
    pub mean_cumulative_utility: Vec<f64>,
    /// sample standard deviation across replicates (0 for one replicate)
    pub std_cumulative_utility: Vec<f64>,
    pub baseline_cumulative_utility: Vec<f64>,
    /// baseline − mean
    pub loss: Vec<f64>,
}

/// Replicate `r` runs with fading seed `base_seed ⊕ r`; the baseline runs
/// with h ≡ 1. Results are aggregated in replicate order, so the report
/// does not depend on scheduling.
pub fn monte_carlo(model: &GameModel, base: &RunConfig, mc: &MonteCarloConfig) -> Result<MonteCarloReport, DynamicsError> {
    if mc.replicates == 0 {
        return invalid("replicates must be at least 1");
    }
    if !(mc.delta_fade > 0.0 && mc.delta_fade.is_finite()) {
        return invalid(format!("delta_fade must be positive, got {}", mc.delta_fade));
    }
    let replicate_config = |r: usize| {
        let fading = if mc.fading {
            FadingSchedule::Redraw {
                period: mc.delta_fade,
                seed: mc.base_seed ^ r as u64,
            }
        } else {
            FadingSchedule::None
        };
        base.clone().with_fading(fading)
    };
    let baseline_traj = run(model, &base.clone().with_fading(FadingSchedule::None))?;
    let baseline = mean_cumulative_utility(&baseline_traj);

    let threads = mc
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, mc.replicates);
    let mut results: Vec<Option<Result<Vec<f64>, DynamicsError>>> = (0..mc.replicates).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (w, slots) in results.chunks_mut(mc.replicates.div_ceil(threads)).enumerate() {
            let start = w * mc.replicates.div_ceil(threads);
            let replicate_config = &replicate_config;
            scope.spawn(move || {
                for (i, slot) in slots.iter_mut().enumerate() {
                    *slot = Some(run(model, &replicate_config(start + i)).map(|t| mean_cumulative_utility(&t)));
                }
            });
        }
    });
    let series: Vec<Vec<f64>> = results
        .into_iter()
        .map(|r| r.expect("every replicate ran"))
        .collect::<Result<_, _>>()?;

    let nodes = baseline.len();
    let count = mc.replicates as f64;
    let mut mean = vec![0.0; nodes];
    for s in &series {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);
    let std = (0..nodes)
        .map(|n| {
            if mc.replicates < 2 {
                return 0.0;
            }
            let ss: f64 = series.iter().map(|s| (s[n] - mean[n]).powi(2)).sum();
            (ss / (count - 1.0)).sqrt()
        })
        .collect();
    let loss = baseline.iter().zip(&mean).map(|(b, m)| b - m).collect();
    Ok(MonteCarloReport {
        beta: base.beta,
        replicates: mc.replicates,
        seed: mc.base_seed,
        times: baseline_traj.times,
        mean_cumulative_utility: mean,
        std_cumulative_utility: std,
        baseline_cumulative_utility: baseline,
        loss,
    })
}

//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fracgame::dynamics::{
    adaptation_rate, direction_field, monte_carlo, reference_equilibrium, run, MonteCarloConfig, ReplicatorField,
    RunConfig, Trajectory,
};
use fracgame::fraccalc::{fde_solve, mittag_leffler, volterra_residual, FdeConfig, SampledFunction};
use fracgame::game::{expected_uhf_rate, GameModel};
use fracgame::scenarios::{load_scenario, Scenario};

const BETAS: [f64; 3] = [0.7, 1.0, 1.3];

struct Report {
    failures: usize,
    /// (label, residual, step) of every fractional run
    residuals: Vec<(String, f64, f64)>,
}

impl Report {
    fn line(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures += 1;
        }
    }

    fn record_residual(&mut self, label: String, traj: &SampledFunction, field: &dyn Fn(f64, &[f64], &mut [f64]), beta: f64, velocity: Option<&[f64]>) {
        let step = traj.times()[1] - traj.times()[0];
        let r = volterra_residual(traj, &field, beta, velocity).expect("residual");
        self.residuals.push((label, r, step));
    }

    fn record_run(&mut self, label: String, model: &GameModel, delta: f64, traj: &Trajectory) {
        if traj.beta == 1.0 {
            return;
        }
        let field = ReplicatorField { model, delta, fading: None };
        let step = traj.times[1] - traj.times[0];
        let r = volterra_residual(&traj.sampled(), &field, traj.beta, traj.initial_velocity.as_deref()).expect("residual");
        self.residuals.push((label, r, step));
    }
}

fn homogeneous() -> (Scenario, GameModel) {
    let s = load_scenario("homogeneous-paper").expect("preset").scenario;
    let m = GameModel::compile(&s).expect("compile");
    (s, m)
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn relaxation_error(beta: f64, step: f64, report: &mut Report) -> f64 {
    let decay = |_t: f64, y: &[f64], out: &mut [f64]| out[0] = -y[0];
    let traj = fde_solve(&decay, &FdeConfig::new(beta, step, 1.0, vec![1.0])).expect("solve");
    report.record_residual(format!("relaxation beta={beta} h={step}"), &traj, &decay, beta, None);
    let err = traj
        .times()
        .iter()
        .zip(traj.values())
        .map(|(&t, &y)| (y - mittag_leffler(beta, -t.powf(beta), 1e-15).expect("oracle")).abs())
        .fold(0.0, f64::max);
    err
}

fn solver_correctness(r: &mut Report) {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut pass = true;
    for beta in [0.3, 0.7, 1.3] {
        let coarse = relaxation_error(beta, 1e-3, r);
        let fine = relaxation_error(beta, 5e-4, r);
        let ratio = coarse / fine;
        pass &= coarse < 1e-4 && ratio >= 2.0;
        details.push(format!("beta={beta} err={coarse:.2e} ratio={ratio:.2}"));
    }
    let elapsed = start.elapsed().as_secs_f64();
    pass &= elapsed < 10.0;
    r.line(
        "fractional solver vs Mittag-Leffler (err < 1e-4 at h = 1e-3, halving >= 2x, < 10 s)",
        pass,
        format!("{}; {elapsed:.2} s", details.join("; ")),
    );
}

fn integer_reduction(r: &mut Report) {
    let decay = |_t: f64, y: &[f64], out: &mut [f64]| out[0] = -y[0];
    let traj = fde_solve(&decay, &FdeConfig::new(1.0, 1e-3, 5.0, vec![1.0])).expect("solve");
    let err = traj.times().iter().zip(traj.values()).map(|(&t, &y)| (y - (-t).exp()).abs()).fold(0.0, f64::max);
    r.line("integer-order reduction (beta = 1 vs e^-t on [0, 5], < 1e-6)", err < 1e-6, format!("max err {err:.2e}"));
}

fn simplex_and_equilibrium(r: &mut Report) {
    let (s, m) = homogeneous();
    let closed = m.homogeneous_equilibrium().expect("closed form");

    let mut sim_pass = true;
    let mut sim_detail = Vec::new();
    for beta in BETAS {
        let mut cfg = RunConfig::from_scenario(&s);
        cfg.beta = beta;
        let start = Instant::now();
        let traj = run(&m, &cfg).expect("run");
        let secs = start.elapsed().as_secs_f64();
        let (mut worst_sum, mut lo, mut hi) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
        for n in 0..traj.nodes() {
            let x = traj.state(n);
            worst_sum = worst_sum.max((x.iter().sum::<f64>() - 1.0).abs());
            lo = x.iter().fold(lo, |a, &v| a.min(v));
            hi = x.iter().fold(hi, |a, &v| a.max(v));
        }
        let ok = worst_sum < 1e-6 && lo >= -1e-6 && hi <= 1.0 + 1e-6 && traj.drift_corrections == 0 && secs < 60.0;
        sim_pass &= ok;
        sim_detail.push(format!(
            "beta={beta} |sum-1|={worst_sum:.1e} range=[{lo:.4}, {hi:.4}] corrections={} {secs:.2} s",
            traj.drift_corrections
        ));
        r.record_run(format!("homogeneous beta={beta} T=120"), &m, cfg.delta, &traj);
    }
    r.line(
        "simplex conservation (homogeneous preset, T = 120, h = 1e-2)",
        sim_pass,
        sim_detail.join("; "),
    );

    let mut eq_pass = true;
    let mut eq_detail = Vec::new();
    for beta in BETAS {
        let mut cfg = RunConfig::from_scenario(&s);
        cfg.beta = beta;
        if beta != 1.0 {
            // algebraic ~t^-beta approach; see README for the horizon
            cfg.step = 0.5;
            cfg.horizon = 20000.0;
        }
        let traj = run(&m, &cfg).expect("long run");
        let mut f = vec![0.0; m.dim()];
        m.replicator_field(traj.final_state(), cfg.delta, None, &mut f).expect("field");
        let residual = max_abs(f);
        let dev = max_abs(traj.final_state().iter().zip(&closed).map(|(a, b)| a - b));
        eq_pass &= residual < 1e-4 && dev < 5e-3;
        eq_detail.push(format!("beta={beta} T={} |F|={residual:.2e} dev={dev:.2e}", cfg.horizon));
        r.record_run(format!("homogeneous beta={beta} T={}", cfg.horizon), &m, cfg.delta, &traj);
    }
    r.line(
        "equilibrium reproduction (|F(X(T))| < 1e-4, within 5e-3 of closed form)",
        eq_pass,
        format!("y* = {closed:.4?}; {}", eq_detail.join("; ")),
    );
}

fn direction_field_stability(r: &mut Report) {
    let (s, m) = homogeneous();
    let init = RunConfig::from_scenario(&s).initial;
    let eq = reference_equilibrium(&m, s.dynamics.delta, &init, 1e-10).expect("reference equilibrium");
    let df = direction_field(&m, s.dynamics.delta, 15, &eq).expect("field");
    let dist = |p: &[f64; 3]| ((p[0] - df.equilibrium[0]).powi(2) + (p[1] - df.equilibrium[1]).powi(2) + (p[2] - df.equilibrium[2]).powi(2)).sqrt();
    let mut decreased = 0;
    let mut worst_ratio: f64 = 0.0;
    for (p, v) in df.points.iter().zip(&df.vectors) {
        let next = [p[0] + 1e-2 * v[0], p[1] + 1e-2 * v[1], p[2] + 1e-2 * v[2]];
        let (before, after) = (dist(p), dist(&next));
        if after < before {
            decreased += 1;
        }
        worst_ratio = worst_ratio.max(after / before);
    }
    let n = df.points.len();
    r.line(
        "direction-field stability (15-grid, Euler step 1e-2 decreases distance to equilibrium)",
        n == 120 && decreased == n,
        format!("{decreased}/{n} points decrease, worst distance ratio {worst_ratio:.8}"),
    );
}

/// The four explicit activity cases for two co-channel interferers.
fn four_case(w: f64, share: f64, p: f64, noise: f64, p1: f64, q1: f64, p2: f64, q2: f64) -> f64 {
    let none = q1 * q2 * (1.0 + p / noise).log2();
    let first = (1.0 - q1) * q2 * (1.0 + p / (p1 + noise)).log2();
    let second = q1 * (1.0 - q2) * (1.0 + p / (p2 + noise)).log2();
    let both = (1.0 - q1) * (1.0 - q2) * (1.0 + p / (p1 + p2 + noise)).log2();
    w * share * (none + first + second + both)
}

fn four_case_formula(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let w = rng.random_range(1e6..1e8);
        let share = rng.random_range(0.0..=1.0);
        let p = 10f64.powf(rng.random_range(-13.0..-8.0));
        let noise = 10f64.powf(rng.random_range(-14.0..-11.0));
        let (p1, p2) = (10f64.powf(rng.random_range(-14.0..-9.0)), 10f64.powf(rng.random_range(-14.0..-9.0)));
        // q = ∏(1 − x) over the interferers' users
        let q = |rng: &mut ChaCha8Rng| (0..rng.random_range(1..5)).map(|_| 1.0 - rng.random_range(0.0..=1.0)).product::<f64>();
        let (q1, q2) = (q(&mut rng), q(&mut rng));
        let got = expected_uhf_rate(w, share, p, noise, &[(p1, q1), (p2, q2)]).expect("rate");
        let want = four_case(w, share, p, noise, p1, q1, p2, q2);
        worst = worst.max((got - want).abs() / want.abs().max(f64::MIN_POSITIVE));
    }
    r.line(
        "four-case interference formula (100 random 2-interferer instances, relative 1e-12)",
        worst <= 1e-12,
        format!("worst relative difference {worst:.2e}"),
    );
}

fn orderings(r: &mut Report) {
    let (s, m) = homogeneous();
    let mut peaks = Vec::new();
    for beta in [0.7, 1.3] {
        let mut cfg = RunConfig::from_scenario(&s);
        cfg.beta = beta;
        let traj = run(&m, &cfg).expect("run");
        let rate = adaptation_rate(&traj, 11);
        let peak = traj
            .times
            .iter()
            .zip(&rate)
            .filter(|(t, _)| (1.0..=10.0).contains(*t))
            .map(|(_, v)| *v)
            .fold(0.0, f64::max);
        peaks.push(peak);
    }
    r.line(
        "ordering (a): early adaptation-rate peak on t in [1, 10] s, beta 1.3 > beta 0.7",
        peaks[1] > peaks[0],
        format!("peak(0.7) = {:.4}, peak(1.3) = {:.4}", peaks[0], peaks[1]),
    );

    let mc = MonteCarloConfig {
        replicates: 100,
        delta_fade: 0.01,
        base_seed: 2024,
        fading: true,
        threads: None,
    };
    let mut pass = true;
    let mut detail = Vec::new();
    let mut losses = Vec::new();
    for beta in BETAS {
        let mut cfg = RunConfig::from_scenario(&s);
        cfg.beta = beta;
        cfg.horizon = 20.0;
        let rep = monte_carlo(&m, &cfg, &mc).expect("monte carlo");
        let n = rep.loss.len() - 1;
        let (loss, std) = (rep.loss[n], rep.std_cumulative_utility[n]);
        let stderr = std / (mc.replicates as f64).sqrt();
        pass &= loss >= -2.0 * stderr;
        detail.push(format!("beta={beta} loss={loss:.10e} stderr={stderr:.3e}"));
        losses.push(loss);
    }
    pass &= losses[2] <= losses[0];
    r.line(
        "ordering (b): 100 fading replicates, terminal loss >= -2 stderr, loss(1.3) <= loss(0.7)",
        pass,
        format!("{}; horizon 20 s", detail.join("; ")),
    );
}

fn perturbation(r: &mut Report) {
    const K: f64 = 1.0;
    let (s, m) = homogeneous();
    let mut pass = true;
    let mut detail = Vec::new();
    for beta in BETAS {
        let mut cfg = RunConfig::from_scenario(&s);
        cfg.beta = beta;
        let base = run(&m, &cfg).expect("run");
        for eta in [1e-3, 1e-2] {
            let mut p = cfg.clone();
            // L1 size eta: move eta/2 from mmWave to UHF
            p.initial[0] += eta / 2.0;
            p.initial[1] -= eta / 2.0;
            let moved = run(&m, &p).expect("perturbed run");
            r.record_run(format!("perturbed beta={beta} eta={eta}"), &m, cfg.delta, &moved);
            let sup = max_abs(base.states.iter().zip(&moved.states).map(|(a, b)| a - b));
            pass &= sup <= K * eta;
            detail.push(format!("beta={beta} eta={eta} sup/eta={:.4}", sup / eta));
        }
    }
    r.line(
        &format!("perturbation stability (sup deviation <= {K} * eta)"),
        pass,
        detail.join("; "),
    );
}

fn cli(args: &[&str], out: Option<&Path>) -> (i32, Vec<u8>) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fracgame"));
    cmd.args(args);
    if let Some(dir) = out {
        cmd.arg("--out-dir").arg(dir);
    }
    let output = cmd.output().expect("binary runs");
    (output.status.code().unwrap_or(-1), output.stdout)
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .expect("output dir")
        .map(|e| {
            let e = e.expect("entry");
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).expect("read"))
        })
        .collect();
    files.sort();
    files
}

fn determinism(r: &mut Report) {
    let tmp = tempfile::tempdir().expect("tempdir");
    let commands: [&[&str]; 4] = [
        &["simulate", "--scenario", "homogeneous-paper", "--beta", "0.7", "--fading", "--seed", "9", "--horizon", "20"],
        &["simulate", "--scenario", "heterogeneous-paper", "--beta", "1.3", "--fading", "--seed", "3", "--horizon", "10"],
        &["direction-field", "--scenario", "homogeneous-paper", "--resolution", "15"],
        &["montecarlo", "--scenario", "homogeneous-paper", "--replicates", "8", "--horizon", "2", "--seed", "5"],
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (i, args) in commands.iter().enumerate() {
        let (a, b) = (tmp.path().join(format!("{i}a")), tmp.path().join(format!("{i}b")));
        let (ca, _) = cli(args, Some(&a));
        let (cb, _) = cli(args, Some(&b));
        let same = ca == 0 && cb == 0 && dir_bytes(&a) == dir_bytes(&b);
        pass &= same;
        detail.push(format!("{}: {}", args[0], if same { "identical" } else { "DIFFERENT" }));
    }
    for preset in ["homogeneous-paper", "heterogeneous-paper"] {
        let args = ["scenario-validate", "--scenario", preset, "--print-toml"];
        let (a, b) = (cli(&args, None), cli(&args, None));
        let same = a.0 == 0 && a == b;
        pass &= same;
        detail.push(format!("scenario-validate {preset}: {}", if same { "identical" } else { "DIFFERENT" }));
    }
    r.line("determinism (CLI reruns byte-identical)", pass, detail.join("; "));
}

fn main() {
    let mut r = Report {
        failures: 0,
        residuals: Vec::new(),
    };
    solver_correctness(&mut r);
    integer_reduction(&mut r);
    simplex_and_equilibrium(&mut r);
    direction_field_stability(&mut r);
    four_case_formula(&mut r);
    orderings(&mut r);
    perturbation(&mut r);
    determinism(&mut r);

    let worst = r
        .residuals
        .iter()
        .max_by(|a, b| (a.1 / a.2).total_cmp(&(b.1 / b.2)))
        .expect("fractional runs recorded");
    let all_ok = r.residuals.iter().all(|(_, res, h)| *res < 10.0 * h);
    let count = r.residuals.len();
    let worst = format!("worst residual/step {:.2e} ({})", worst.1 / worst.2, worst.0);
    r.line(
        "Volterra consistency (residual < 10 * step for every fractional run above)",
        all_ok,
        format!("{count} runs; {worst}"),
    );

    if r.failures > 0 {
        println!("{} acceptance criteria failed", r.failures);
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}

//! Acceptance suite: one line per criterion, nonzero exit on any failure.
//!
//! Run with `cargo test -p mixthresh --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use mixthresh::cli::config;
use mixthresh::model::{objective, surrogate, GroupPenalty, PenaltySpec, Problem, ProblemShape};
use mixthresh::operators::{
    conv1d_op, diagonal_op, haar_analysis, haar_synthesis, identity_op, matrix_op, multiframe_op,
    renormalize, sum_space_op, to_dense, zero_op, AdjointOp, LinearOp, ScaledOp,
};
use mixthresh::oracle::{minimize_grid, minimize_m, minimize_separable, GridSpec};
use mixthresh::regpath::{make_schedule, run_regpath};
use mixthresh::shrinkage::{residual_bound, shrink_multi, PenaltyTerm};
use mixthresh::solver::{solve, solve_decomposition, step, SolveTrace, StopRule, MONOTONE_SLACK};
use mixthresh::CoeffVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("shrinkage matches brute-force minimizer", shrinkage_oracle),
        ("shrinkage maps are nonexpansive", nonexpansive),
        ("shrinkage residual bound", residual_bounds),
        (
            "surrogate minimality and quadratic growth",
            surrogate_growth,
        ),
        ("monotone descent and step decay", monotone_descent),
        ("solver agrees with oracles", solver_oracle),
        ("adjoint and norm certificates", certificates),
        ("decomposition equivalence", decomposition),
        ("regularization trend", regularization_trend),
        ("cli determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!(
                "criterion {:>2} PASS  {name} ({detail}; {secs:.2} s)",
                i + 1
            ),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} ({secs:.2} s)", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn term(c: f64, p: f64) -> PenaltyTerm {
    PenaltyTerm::new(c, p).unwrap()
}

fn random_exponent(rng: &mut impl Rng) -> f64 {
    match rng.random_range(0..3) {
        0 => 1.0,
        1 => rng.random_range(1.05..1.95),
        _ => 2.0,
    }
}

/// Term lists cycling through single l1, single smooth, single quadratic,
/// mixed with an l1 part and mixed without one.
fn random_terms(rng: &mut impl Rng, kind: usize) -> Vec<PenaltyTerm> {
    let mut c = || rng.random_range(0.05..3.0);
    let mut terms = match kind % 5 {
        0 => vec![term(c(), 1.0)],
        1 => vec![term(c(), 1.5)],
        2 => vec![term(c(), 2.0)],
        3 => vec![term(c(), 1.0), term(c(), 1.6), term(c(), 2.0)],
        _ => vec![term(c(), 1.3), term(c(), 1.8)],
    };
    // vary the smooth exponents away from the fixed picks above
    for t in terms
        .iter_mut()
        .filter(|t| t.exponent() > 1.0 && t.exponent() < 2.0)
    {
        *t = term(t.weight(), rng.random_range(1.05..1.95));
    }
    terms
}

fn shrinkage_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let terms = random_terms(&mut rng, i);
        let b = rng.random_range(-6.0..6.0);
        let got = shrink_multi(b, &terms);
        let want = minimize_m(b, &terms, &GridSpec::bracketing(b)).map_err(|e| e.to_string())?;
        worst = worst.max((got - want).abs());
        ensure!(
            (got - want).abs() <= 1e-6,
            "b = {b}, terms {terms:?}: {got} vs {want}"
        );
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs <= 10.0, "took {secs:.1} s");
    Ok(format!("1000 instances, max deviation {worst:.1e}"))
}

fn nonexpansive() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let kernels: Vec<Vec<PenaltyTerm>> = (0..10).map(|k| random_terms(&mut rng, k)).collect();
    let mut worst = f64::NEG_INFINITY;
    for terms in &kernels {
        for _ in 0..10_000 {
            let scale = [0.1, 1.0, 10.0][rng.random_range(0..3)];
            let x = rng.random_range(-scale..scale);
            let y = rng.random_range(-scale..scale);
            let excess = (shrink_multi(x, terms) - shrink_multi(y, terms)).abs() - (x - y).abs();
            worst = worst.max(excess);
            ensure!(
                excess <= 1e-12,
                "terms {terms:?}, x = {x}, y = {y}: excess {excess:e}"
            );
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs <= 5.0, "took {secs:.1} s");
    Ok(format!(
        "{} kernels x 10^4 pairs, max excess {worst:.1e}",
        kernels.len()
    ))
}

fn residual_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..10_000 {
        let t = term(rng.random_range(0.01..4.0), random_exponent(&mut rng));
        let x = rng.random_range(-10.0..10.0);
        let (residual, bound) = residual_bound(x, &t);
        ensure!(
            residual <= bound + 1e-12,
            "{t:?} at {x}: {residual} > {bound}"
        );
    }
    Ok("10^4 samples".into())
}

fn random_penalty(rng: &mut impl Rng, n: usize) -> PenaltySpec {
    if rng.random_bool(0.5) {
        let groups: Vec<GroupPenalty> = (0..rng.random_range(1..=3))
            .map(|_| GroupPenalty::new(random_exponent(rng), rng.random_range(0.5..2.0)))
            .collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..groups.len())).collect();
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.5)).collect();
        PenaltySpec::partitioned(&labels, &weights, &groups).unwrap()
    } else {
        let groups: Vec<GroupPenalty> = (0..2)
            .map(|_| GroupPenalty::new(random_exponent(rng), rng.random_range(0.5..2.0)))
            .collect();
        let weights: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..n).map(|_| rng.random_range(0.05..1.5)).collect())
            .collect();
        PenaltySpec::stacked(&weights, &groups).unwrap()
    }
}

fn random_vec(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

fn random_matrix(rng: &mut impl Rng, m: usize, n: usize) -> Arc<dyn LinearOp> {
    Arc::new(matrix_op((0..m).map(|_| random_vec(rng, n, 1.0)).collect()).unwrap())
}

/// Random problem with dimensions at most `max_dim`, already renormalized.
fn random_problem(rng: &mut impl Rng, max_dim: usize) -> Problem {
    let (m, n) = (rng.random_range(1..=max_dim), rng.random_range(1..=max_dim));
    let k = random_matrix(rng, m, n);
    let g = CoeffVector::new(random_vec(rng, m, 2.0)).unwrap();
    let prob = Problem::new(k, g, random_penalty(rng, n)).unwrap();
    renormalize(&prob).unwrap().0
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn surrogate_growth() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for case in 0..100 {
        let prob = random_problem(&mut rng, 16);
        let n = prob.dim();
        let a = random_vec(&mut rng, n, 2.0);
        let fmin = step(&a, &prob).map_err(|e| e.to_string())?;
        let best = surrogate(&fmin, &a, &prob).unwrap();
        for i in 0..1000 {
            let probe: Vec<f64> = if i % 4 == 0 {
                random_vec(&mut rng, n, 5.0)
            } else {
                let scale = [1e-6, 1e-3, 1e-1][i % 3];
                fmin.iter()
                    .map(|x| x + rng.random_range(-scale..scale))
                    .collect()
            };
            let value = surrogate(&probe, &a, &prob).unwrap();
            ensure!(
                value >= best - 1e-9,
                "case {case}: probe beats step by {:e}",
                best - value
            );
        }
        for _ in 0..100 {
            let scale = [1e-4, 1e-2, 1.0, 3.0][rng.random_range(0..4)];
            let h = random_vec(&mut rng, n, scale);
            let moved: Vec<f64> = fmin.iter().zip(&h).map(|(x, d)| x + d).collect();
            let value = surrogate(&moved, &a, &prob).unwrap();
            let floor = best + norm_sq(&h) - 1e-9;
            ensure!(
                value >= floor,
                "case {case}: growth short by {:e}",
                floor - value
            );
        }
    }
    Ok("100 problems, 10^3 probes and 10^2 growth directions each".into())
}

fn check_trace(trace: &SolveTrace, context: &str) -> Result<(), String> {
    trace.check_monotone(MONOTONE_SLACK).map_err(|v| {
        format!(
            "{context}: objective rose by {:e} at iteration {}",
            v.increase, v.iter
        )
    })?;
    for w in trace.records().windows(2) {
        ensure!(
            w[1].objective <= w[0].objective + MONOTONE_SLACK,
            "{context}: objective column rises at iteration {}",
            w[1].iter
        );
    }
    Ok(())
}

fn monotone_descent() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut max_iters = 0;
    for case in 0..60 {
        let (m, n) = (rng.random_range(1..=16), rng.random_range(1..=16));
        let raw = random_matrix(&mut rng, m, n);
        let bound = raw.norm_bound();
        let k: Arc<dyn LinearOp> = Arc::new(ScaledOp::new(raw, 0.9 / bound));
        ensure!(
            k.norm_bound() <= 0.9 + 1e-15,
            "case {case}: bound {}",
            k.norm_bound()
        );
        let g = CoeffVector::new(random_vec(&mut rng, m, 2.0)).unwrap();
        let prob = Problem::new(k, g, random_penalty(&mut rng, n)).unwrap();
        let f0 = random_vec(&mut rng, n, 3.0);
        let (_, trace) = solve(&f0, &prob, StopRule::default()).map_err(|e| e.to_string())?;
        check_trace(&trace, &format!("case {case}"))?;
        ensure!(
            trace.final_step_norm() <= 1e-8,
            "case {case}: final step {:e} after {} iterations",
            trace.final_step_norm(),
            trace.iterations()
        );
        max_iters = max_iters.max(trace.iterations());
    }
    Ok(format!("60 solves, at most {max_iters} iterations"))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    norm_sq(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>()).sqrt()
}

/// Solves from zero and from a random start, returning both results.
fn two_starts(
    prob: &Problem,
    rng: &mut impl Rng,
    context: &str,
) -> Result<(Vec<f64>, Vec<f64>), String> {
    let (scaled, _) = renormalize(prob).map_err(|e| e.to_string())?;
    let stop = StopRule::new(100_000, 1e-12).unwrap();
    let zero = vec![0.0; prob.dim()];
    let start = random_vec(rng, prob.dim(), 3.0);
    let (a, ta) = solve(&zero, &scaled, stop).map_err(|e| e.to_string())?;
    let (b, tb) = solve(&start, &scaled, stop).map_err(|e| e.to_string())?;
    check_trace(&ta, context)?;
    check_trace(&tb, context)?;
    Ok((a.into_vec(), b.into_vec()))
}

fn solver_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut worst_obj: f64 = 0.0;
    let mut worst_arg: f64 = 0.0;
    for case in 0..50 {
        let n = rng.random_range(1..=8);
        let diag: Vec<f64> = (0..n)
            .map(|_| {
                let d: f64 = rng.random_range(0.2..2.0);
                if rng.random_bool(0.3) {
                    -d
                } else {
                    d
                }
            })
            .collect();
        let g = CoeffVector::new(random_vec(&mut rng, n, 3.0)).unwrap();
        let prob = Problem::new(
            Arc::new(diagonal_op(&diag).unwrap()),
            g,
            random_penalty(&mut rng, n),
        )
        .unwrap();
        let context = format!("diagonal case {case}");
        let (a, b) = two_starts(&prob, &mut rng, &context)?;
        let oracle = minimize_separable(&prob).map_err(|e| e.to_string())?;
        let gap = (objective(&a, &prob).unwrap() - objective(&oracle, &prob).unwrap()).abs();
        worst_obj = worst_obj.max(gap);
        ensure!(gap <= 1e-5, "{context}: objective gap {gap:e}");
        ensure!(
            prob.uniqueness_holds(),
            "{context}: nonzero diagonal should be injective"
        );
        worst_arg = worst_arg.max(dist(&a, &b)).max(dist(&a, &oracle));
        ensure!(
            dist(&a, &b) <= 1e-4,
            "{context}: starts disagree by {:e}",
            dist(&a, &b)
        );
        ensure!(
            dist(&a, &oracle) <= 1e-4,
            "{context}: oracle argmin off by {:e}",
            dist(&a, &oracle)
        );
    }
    let mut unique = 0;
    for case in 0..20 {
        let m = rng.random_range(1..=3);
        let k = random_matrix(&mut rng, m, 2);
        let g = CoeffVector::new(random_vec(&mut rng, m, 2.0)).unwrap();
        let prob = Problem::new(k, g, random_penalty(&mut rng, 2)).unwrap();
        let context = format!("coupled case {case}");
        let (a, b) = two_starts(&prob, &mut rng, &context)?;
        let oracle =
            minimize_grid(&prob, &GridSpec::for_problem(&prob)).map_err(|e| e.to_string())?;
        let (fa, fo) = (
            objective(&a, &prob).unwrap(),
            objective(&oracle, &prob).unwrap(),
        );
        worst_obj = worst_obj.max((fa - fo).abs());
        ensure!(
            (fa - fo).abs() <= 1e-5,
            "{context}: objective {fa} vs oracle {fo}"
        );
        if prob.uniqueness_holds() {
            unique += 1;
            worst_arg = worst_arg.max(dist(&a, &b));
            ensure!(
                dist(&a, &b) <= 1e-4,
                "{context}: starts disagree by {:e}",
                dist(&a, &b)
            );
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs <= 60.0, "took {secs:.1} s");
    Ok(format!(
        "50 diagonal + 20 coupled ({unique} unique), max objective gap {worst_obj:.1e}, max argument gap {worst_arg:.1e}"
    ))
}

fn spectral_norm(op: &dyn LinearOp) -> f64 {
    to_dense(op).singular_values().max()
}

fn certificates() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let conv: Arc<dyn LinearOp> = Arc::new(conv1d_op(&[0.2, 0.6, 0.2], 16).unwrap());
    let haar: Arc<dyn LinearOp> = Arc::new(haar_analysis(16).unwrap());
    let dense = random_matrix(&mut rng, 16, 16);
    let tall = random_matrix(&mut rng, 9, 5);
    let wide = random_matrix(&mut rng, 4, 11);
    let frames = vec![
        haar.clone(),
        dense.clone(),
        Arc::new(identity_op(16)) as Arc<dyn LinearOp>,
    ];
    let multi = Arc::new(multiframe_op(conv.clone(), frames.clone()).unwrap());
    let ops: Vec<(&str, Arc<dyn LinearOp>)> = vec![
        ("matrix tall", tall.clone()),
        ("matrix wide", wide.clone()),
        (
            "diagonal",
            Arc::new(diagonal_op(&[0.5, -2.0, 1.5, 0.0]).unwrap()),
        ),
        ("identity", Arc::new(identity_op(7))),
        ("zero", Arc::new(zero_op(3, 5))),
        ("conv1d", conv.clone()),
        (
            "conv1d long kernel",
            Arc::new(conv1d_op(&[1.0, -0.5, 0.25, 0.3, -0.1], 12).unwrap()),
        ),
        ("haar analysis", haar.clone()),
        ("haar synthesis", Arc::new(haar_synthesis(32).unwrap())),
        ("sum space", Arc::new(sum_space_op(tall.clone()))),
        ("multiframe", multi.clone()),
        ("scaled", Arc::new(ScaledOp::new(wide.clone(), -0.3))),
        ("adjoint", Arc::new(AdjointOp::new(tall))),
    ];
    for (name, op) in &ops {
        for _ in 0..100 {
            let f = random_vec(&mut rng, op.domain_dim(), 1.0);
            let h = random_vec(&mut rng, op.codomain_dim(), 1.0);
            let lhs: f64 = op.forward(&f).iter().zip(&h).map(|(a, b)| a * b).sum();
            let rhs: f64 = f.iter().zip(op.adjoint(&h)).map(|(a, b)| a * b).sum();
            ensure!(
                (lhs - rhs).abs() <= 1e-9,
                "{name}: adjoint defect {:e}",
                (lhs - rhs).abs()
            );
            let gain = norm_sq(&op.forward(&f)).sqrt();
            ensure!(
                gain <= op.norm_bound() * norm_sq(&f).sqrt() + 1e-12,
                "{name}: gain {gain} exceeds bound {}",
                op.norm_bound()
            );
        }
        let sigma = spectral_norm(op.as_ref());
        ensure!(
            sigma <= op.norm_bound() * (1.0 + 1e-12),
            "{name}: norm {sigma} > bound {}",
            op.norm_bound()
        );
    }
    let b: f64 = frames.iter().map(|f| f.norm_bound().powi(2)).sum();
    let formula = conv.norm_bound() * b.sqrt();
    ensure!(
        (multi.norm_bound() - formula).abs() <= 1e-15 * formula,
        "multiframe bound {} vs {formula}",
        multi.norm_bound()
    );
    Ok(format!("{} operators, 100 random pairs each", ops.len()))
}

fn decomposition() -> Outcome {
    let rows = vec![
        vec![0.4, 0.1, 0.0, 0.0],
        vec![0.1, 0.4, 0.1, 0.0],
        vec![0.0, 0.1, 0.4, 0.1],
        vec![0.0, 0.0, 0.1, 0.4],
    ];
    let k: Arc<dyn LinearOp> = Arc::new(matrix_op(rows.clone()).unwrap());
    let g = vec![1.0, -0.5, 0.25, 2.0];
    let (w1, w2) = (0.2, 0.5);
    let spec_u = PenaltySpec::uniform(4, w1, 1.0).unwrap();
    let spec_v = PenaltySpec::uniform(4, w2, 2.0).unwrap();
    let (u0, v0) = (vec![0.3, 0.0, -0.2, 0.1], vec![0.0, 0.5, 0.1, -0.4]);
    let data = CoeffVector::new(g.clone()).unwrap();

    // u^n = S_{w1,1}(u + K^T(g - K(u + v))), v^n = S_{w2,2}(v + K^T(g - K(u + v)))
    let soft = |x: f64, t: f64| x.signum() * (x.abs() - t).max(0.0);
    let mut hand = vec![(u0.clone(), v0.clone())];
    for n in 0..3 {
        let (u, v) = &hand[n];
        let r: Vec<f64> = (0..4)
            .map(|i| g[i] - (0..4).map(|j| rows[i][j] * (u[j] + v[j])).sum::<f64>())
            .collect();
        let back: Vec<f64> = (0..4)
            .map(|j| (0..4).map(|i| rows[i][j] * r[i]).sum())
            .collect();
        let un: Vec<f64> = (0..4).map(|j| soft(u[j] + back[j], w1 / 2.0)).collect();
        let vn: Vec<f64> = (0..4).map(|j| (v[j] + back[j]) / (1.0 + w2)).collect();
        hand.push((un, vn));
    }
    for (n, (u, v)) in hand.iter().enumerate().skip(1) {
        let stop = StopRule::new(n, 0.0).unwrap();
        let d = solve_decomposition(&u0, &v0, k.clone(), data.clone(), &spec_u, &spec_v, stop)
            .map_err(|e| e.to_string())?;
        ensure!(
            d.trace.iterations() == n,
            "expected {n} iterations, ran {}",
            d.trace.iterations()
        );
        ensure!(dist(&d.u, u) <= 1e-12, "u^{n} off by {:e}", dist(&d.u, u));
        ensure!(dist(&d.v, v) <= 1e-12, "v^{n} off by {:e}", dist(&d.v, v));
    }

    let stop = StopRule::default();
    let d = solve_decomposition(&u0, &v0, k.clone(), data.clone(), &spec_u, &spec_v, stop)
        .map_err(|e| e.to_string())?;
    let stacked = Problem::new(
        Arc::new(sum_space_op(k)),
        data,
        spec_u.concat(&spec_v).unwrap(),
    )
    .unwrap();
    let (f, trace) = solve(&[u0, v0].concat(), &stacked, stop).map_err(|e| e.to_string())?;
    check_trace(&trace, "stacked")?;
    let joined = [d.u.as_slice(), d.v.as_slice()].concat();
    ensure!(
        joined
            .iter()
            .zip(f.iter())
            .all(|(a, b)| a.to_bits() == b.to_bits()),
        "decomposition and stacked solve differ"
    );
    ensure!(d.trace.records() == trace.records(), "traces differ");
    Ok(format!(
        "3 hand-traced iterations, bitwise match over {} iterations",
        trace.iterations()
    ))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn regularization_trend() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    for name in ["regpath-scalar", "regpath-diag4"] {
        let cfg =
            config::load(&configs_dir().join(format!("{name}.toml"))).map_err(|e| e.to_string())?;
        let rp = cfg.regpath.clone().ok_or("missing regpath section")?;
        let op = cfg.operator().map_err(|e| e.to_string())?;
        let penalty = cfg
            .penalty_section("penalty")
            .and_then(|p| p.build(op.domain_dim(), "penalty"))
            .map_err(|e| e.to_string())?;
        let schedule = make_schedule(
            rp.eps0,
            rp.ratio,
            rp.levels,
            rp.exponent,
            penalty.group_count(),
        )
        .map_err(|e| e.to_string())?;
        for (t, eps) in schedule.levels().iter().enumerate() {
            ensure!(
                *eps == 0.5_f64.powi(t as i32 + 1),
                "{name}: level {t} is {eps}"
            );
            ensure!(
                schedule.alphas()[t][0] == *eps,
                "{name}: alpha differs from eps"
            );
        }
        let shape = ProblemShape::new(op, penalty).unwrap();
        let seed = cfg.seed.unwrap_or(0);
        let report = run_regpath(
            &rp.truth,
            &shape,
            &schedule,
            seed,
            StopRule::default(),
            None,
        )
        .map_err(|e| e.to_string())?;
        let v = report.verdict(1e-2);
        ensure!(
            v.final_below_target,
            "{name}: final error {:e}",
            v.final_error
        );
        ensure!(
            v.final_below_first,
            "{name}: final {:e} above first {:e}",
            v.final_error,
            v.first_error
        );
        ensure!(
            v.tail_nonincreasing,
            "{name}: last three errors {:?}",
            &report.errors()[7..]
        );
        lines.push(format!("{name} final error {:.1e}", v.final_error));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs <= 30.0, "took {secs:.1} s");
    Ok(lines.join(", "))
}

fn run_cli(command: &str, config: &str, out: &Path, seed: u64) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_mixthresh"))
        .args([command, "--config"])
        .arg(configs_dir().join(config))
        .arg("--out")
        .arg(out)
        .args(["--seed", &seed.to_string(), "--quiet"])
        .status()
        .map_err(|e| e.to_string())?;
    ensure!(status.success(), "{command} {config} exited with {status}");
    Ok(())
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let runs = [
        ("shrink-table", "shrink-mixed.toml"),
        ("solve", "deconv1d.toml"),
        ("solve", "zero-data.toml"),
        ("decompose", "decompose.toml"),
        ("regpath", "regpath-diag4.toml"),
    ];
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = 0;
    for (i, (command, config)) in runs.iter().enumerate() {
        let (a, b) = (
            tmp.path().join(format!("{i}a")),
            tmp.path().join(format!("{i}b")),
        );
        run_cli(command, config, &a, 11)?;
        run_cli(command, config, &b, 11)?;
        let (sa, sb) = (snapshot(&a), snapshot(&b));
        ensure!(!sa.is_empty(), "{command} wrote nothing");
        ensure!(sa == sb, "{command} {config}: outputs differ between runs");
        files += sa.len();
    }
    Ok(format!(
        "{} commands, {files} files byte-identical",
        runs.len()
    ))
}

//! Acceptance suite. Runs without the libtest harness so each criterion
//! prints exactly one PASS/FAIL line; the process fails if any criterion does.

mod common;

use std::time::{Duration, Instant};

use cellload::bench::{count_monotonicity_violations, Method};
use cellload::learner::{smooth_monotone, smoothing_objective};
use cellload::scenario::sample_feasible;
use cellload::*;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn default_params(seed: u64) -> ScenarioParams {
    ScenarioParams { seed, ..ScenarioParams::default() }
}

/// Deployment seed 0 supports the default rate box; most criteria use it.
fn base_scenario() -> (ScenarioParams, NetworkScenario) {
    let p = default_params(0);
    let s = generate_scenario(&p).unwrap();
    (p, s)
}

fn uniform_rates(p: &ScenarioParams, rng: &mut impl Rng) -> Vec<f64> {
    (0..p.num_tp).map(|_| rng.random_range(p.rate_min..p.rate_max)).collect()
}

fn fixed_point(s: &NetworkScenario, r: &[f64]) -> FixedPointResult {
    solve_fixed_point(s, &RateVector::new(r.to_vec()).unwrap(), 1e-10, 10_000).unwrap()
}

fn eigval(s: &NetworkScenario, r: &[f64]) -> f64 {
    is_feasible(s, &RateVector::new(r.to_vec()).unwrap(), 1e-9).unwrap().eigval
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    let mut unconverged = 0;
    for seed in 0..100 {
        let p = default_params(1000 + seed);
        let s = generate_scenario(&p).unwrap();
        let mut r = uniform_rates(&p, &mut rng);
        let lambda = eigval(&s, &r);
        if lambda > 1.0 {
            // pull the draw back inside the feasible region
            let shrink = rng.random_range(0.3..0.95) / lambda;
            r.iter_mut().for_each(|v| *v *= shrink);
        }
        let fp = fixed_point(&s, &r);
        if !fp.feasible {
            unconverged += 1;
        }
        worst = worst.max(sup_residual(&s, &fp.load, &r));
    }

    let mut pair_err = 0.0f64;
    for &rate in &[1e6, 5e6, 2e7, 4e7] {
        let (s, oracle) = symmetric_pair(1e-9, 2e-10, 1e-12, 2e7, rate);
        let fp = fixed_point(&s, &[rate, rate]);
        match oracle {
            Some(x) => pair_err = pair_err.max((fp.load[0] - x).abs()).max((fp.load[1] - x).abs()),
            None => pair_err = f64::INFINITY,
        }
    }
    let elapsed = started.elapsed();
    outcome(
        worst <= 1e-8 && unconverged == 0 && pair_err <= 1e-8 && elapsed < Duration::from_secs(10),
        format!(
            "max residual {worst:.2e} (<= 1e-8), unconverged {unconverged}, symmetric pair error {pair_err:.2e} (<= 1e-8), {:.2}s (< 10s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let (p, s) = base_scenario();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (upper, _) = sample_feasible(&s, &p, 100, &mut rng).unwrap();
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    for hi in &upper {
        let lo: Vec<f64> = hi.iter().map(|v| v * rng.random_range(0.5..1.0)).collect();
        let (a, b) = (fixed_point(&s, &lo), fixed_point(&s, hi));
        let excess = a.load.iter().zip(b.load.iter()).map(|(x, y)| x - y).fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(excess);
        if excess > 1e-9 || !a.converged || !b.converged {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("{failures}/100 pairs out of order, max excess {worst:.2e} (<= 1e-9)"))
}

/// Independent feasibility decision: iterate the oracle load map from zero
/// until it settles (feasible iff it settles at loads <= 1) or blows up.
fn solvable_by_iteration(s: &NetworkScenario, r: &[f64]) -> Option<bool> {
    let mut x = vec![0.0; s.num_bs()];
    for _ in 0..200_000 {
        let next = load_map_oracle(s, &x, r);
        let change = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = next;
        if change <= 1e-13 {
            return Some(x.iter().all(|&v| v <= 1.0 + 1e-9));
        }
        if x.iter().any(|&v| v > 1e3) {
            return Some(false);
        }
    }
    None
}

fn criterion_3() -> Outcome {
    let (p, s) = base_scenario();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (base, _) = sample_feasible(&s, &p, 200, &mut rng).unwrap();
    let mut agree = 0;
    let (mut n_feasible, mut n_infeasible) = (0, 0);
    for r in &base {
        let f = rng.random_range(0.5..2.0);
        let scaled: Vec<f64> = r.iter().map(|v| v * f).collect();
        let verdict = is_feasible(&s, &RateVector::new(scaled.clone()).unwrap(), 1e-9).unwrap().feasible;
        if verdict {
            n_feasible += 1;
        } else {
            n_infeasible += 1;
        }
        if solvable_by_iteration(&s, &scaled) == Some(verdict) {
            agree += 1;
        }
    }

    let mut worst = 0.0f64;
    for r in base.iter().take(50) {
        let lambda = eigval(&s, r);
        let normalized: Vec<f64> = r.iter().map(|v| v / lambda).collect();
        worst = worst.max((eigval(&s, &normalized) - 1.0).abs());
    }
    outcome(
        agree == 200 && worst <= 1e-6,
        format!(
            "verdicts agree {agree}/200 ({n_feasible} feasible, {n_infeasible} infeasible); max |lambda(r/lambda) - 1| = {worst:.2e} (<= 1e-6)"
        ),
    )
}

/// Noiseless datasets that are compatible by construction: chains of
/// ordered rate vectors labelled by the load model, and 1-D monotone data.
fn compatible_datasets(rng: &mut ChaCha8Rng) -> Vec<TrainingSet> {
    let (p, s) = base_scenario();
    let (tops, _) = sample_feasible(&s, &p, 5, rng).unwrap();
    let mut sets = Vec::new();
    for top in &tops {
        let k = rng.random_range(10..=50);
        // per-component increasing fractions keep the anchors totally ordered
        let mut fractions: Vec<Vec<f64>> = (0..p.num_tp)
            .map(|_| {
                let mut f: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
                f.sort_by(f64::total_cmp);
                f
            })
            .collect();
        fractions.iter_mut().for_each(|f| f.dedup());
        let inputs: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..p.num_tp).map(|j| p.rate_min + fractions[j][i] * (top[j] - p.rate_min)).collect())
            .collect();
        let outputs: Vec<Vec<f64>> = inputs
            .iter()
            .map(|r| {
                let rates = RateVector::new(r.clone()).unwrap();
                solve_fixed_point(&s, &rates, 1e-14, 100_000).unwrap().load.into_inner()
            })
            .collect();
        sets.push(TrainingSet::new(inputs, outputs, 0.0).unwrap());
    }
    for _ in 0..5 {
        let h = MonotoneOracle::random(1, rng);
        let k = rng.random_range(2..=50);
        let inputs: Vec<Vec<f64>> = (0..k).map(|_| vec![rng.random_range(-1.0..2.0)]).collect();
        let outputs = inputs.iter().map(|x| vec![h.eval(x)]).collect();
        sets.push(TrainingSet::new(inputs, outputs, 0.0).unwrap());
    }
    sets
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let sets = compatible_datasets(&mut rng);

    let mut anchor_err = 0.0f64;
    let mut order_violations = 0;
    let mut midpoint_violations = 0;
    let mut queries = 0;
    for set in &sets {
        let model = fit(set, 0.0).unwrap();
        for (x, y) in set.inputs.iter().zip(&set.outputs) {
            let g = model.predict(x).unwrap();
            for (a, b) in g.iter().zip(y) {
                anchor_err = anchor_err.max((a - b).abs());
            }
        }
        let lo: Vec<f64> = (0..set.input_dim())
            .map(|j| set.inputs.iter().map(|x| x[j]).fold(f64::INFINITY, f64::min))
            .collect();
        let hi: Vec<f64> = (0..set.input_dim())
            .map(|j| set.inputs.iter().map(|x| x[j]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        for _ in 0..(1000 / sets.len()) {
            let x: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| a + rng.random::<f64>() * (b - a)).collect();
            let env = model.envelope(&x).unwrap();
            let g = model.predict(&x).unwrap();
            for i in 0..g.len() {
                // 1e-12 absorbs last-bit rounding where the envelope collapses
                if !(env.lower[i] <= g[i] + 1e-12 && g[i] <= env.upper[i] + 1e-12) {
                    order_violations += 1;
                }
                if g[i] != 0.5 * (env.lower[i] + env.upper[i]) {
                    midpoint_violations += 1;
                }
            }
            queries += 1;
        }
    }

    let mut envelope_violations = 0;
    for f in 0..100 {
        let dim = 1 + f % 2;
        let h = MonotoneOracle::random(dim, &mut rng);
        let k = rng.random_range(2..=30);
        let anchors: Vec<Vec<f64>> = (0..k).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();
        let values = anchors.iter().map(|a| vec![h.eval(a)]).collect();
        let model = LearnerModel::new(vec![h.l], 0.0, anchors, values).unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.5..1.5)).collect();
            let env = model.envelope(&x).unwrap();
            let truth = h.eval(&x);
            if env.lower[0] > truth + 1e-12 || truth > env.upper[0] + 1e-12 {
                envelope_violations += 1;
            }
        }
    }
    outcome(
        anchor_err <= 1e-12 && order_violations == 0 && midpoint_violations == 0 && envelope_violations == 0,
        format!(
            "{} datasets: anchor error {anchor_err:.2e} (<= 1e-12); {queries} queries: {order_violations} outside envelope, {midpoint_violations} off midpoint; 100 oracle functions x 100 points: {envelope_violations} envelope violations",
            sets.len()
        ),
    )
}

fn criterion_5() -> Outcome {
    let (p, s) = base_scenario();
    let data = generate_dataset(&s, &p, 200, 0.05, 55).unwrap();
    let model = fit(&data, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let width = p.rate_max - p.rate_min;
    let (mut mono, mut lip) = (0, 0);
    for _ in 0..10_000 {
        let x = uniform_rates(&p, &mut rng);
        let y: Vec<f64> = x.iter().map(|v| (v + rng.random::<f64>() * 0.2 * width).min(p.rate_max)).collect();
        let (gx, gy) = (model.predict_vec(&x), model.predict_vec(&y));
        let d = euclid(&x, &y);
        for i in 0..gx.len() {
            if gx[i] > gy[i] + 1e-12 {
                mono += 1;
            }
            if (gx[i] - gy[i]).abs() > model.lipschitz()[i] * d + 1e-12 {
                lip += 1;
            }
        }
    }
    let counted = count_monotonicity_violations(&model, p.rate_min, p.rate_max, 10_000, 5).pairs;
    outcome(
        mono == 0 && lip == 0 && counted == 0,
        format!("10000 ordered pairs: {mono} monotonicity violations, {lip} Lipschitz violations; harness counter: {counted}"),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst_gap = 0.0f64;
    let mut worst_violation = 0.0f64;
    for _ in 0..50 {
        let k = rng.random_range(2..=6);
        let dim = rng.random_range(1..=3);
        let inputs: Vec<Vec<f64>> = (0..k).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();
        let y: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let l = if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..1.5) };
        let data = TrainingSet::new(inputs.clone(), y.iter().map(|&v| vec![v]).collect(), 0.0).unwrap();

        let c: Vec<Vec<f64>> = (0..k)
            .map(|a| (0..k).map(|b| y[b] - y[a] + l * cone(&inputs[a], &inputs[b])).collect())
            .collect();
        let reference = brute_force_smoothing(&c);
        let (_, objective) = smoothing_objective(&data, 0, l).unwrap();
        worst_gap = worst_gap.max((objective - reference).abs());

        let smoothed = smooth_monotone(&data, &[l]).unwrap();
        for a in 0..k {
            for b in 0..k {
                let v = smoothed.outputs[a][0] - smoothed.outputs[b][0] - l * cone(&inputs[a], &inputs[b]);
                worst_violation = worst_violation.max(v);
            }
        }
    }
    let two = TrainingSet::new(vec![vec![1.0], vec![2.0]], vec![vec![0.6], vec![0.5]], 0.0).unwrap();
    let s = smooth_monotone(&two, &[0.0]).unwrap();
    let (a, b) = (s.outputs[0][0], s.outputs[1][0]);
    let two_ok = a == 0.55 && b == 0.55;
    outcome(
        worst_gap <= 1e-6 && worst_violation <= 1e-9 && two_ok,
        format!(
            "50 instances: max objective gap {worst_gap:.2e} (<= 1e-6), max constraint violation {worst_violation:.2e} (<= 1e-9); 2-point example -> {{{a}, {b}}}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let started = Instant::now();
    let config = BenchConfig { record_timings: false, ..BenchConfig::default() };
    let report = match run_benchmark(&config) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("benchmark failed: {e}")),
    };
    let elapsed = started.elapsed();

    let mut wins = Vec::new();
    for k in [25, 50, 100] {
        let mm = report.seed_means(k, Method::Minimax);
        let ke = report.seed_means(k, Method::Kernel);
        let nn = report.seed_means(k, Method::Knn);
        let w = (0..mm.len()).filter(|&s| mm[s].1 <= ke[s].1 && mm[s].1 <= nn[s].1).count();
        wins.push((k, w));
    }
    let a = wins.iter().all(|&(_, w)| w >= 8);

    let summary = report.summary();
    let cell = |k: usize, m: Method| summary.iter().find(|s| s.k == k && s.method == m).unwrap();
    let at600: Vec<f64> = Method::ALL.iter().map(|&m| cell(600, m).rmse_mean).collect();
    let ratio = at600.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / at600.iter().cloned().fold(f64::INFINITY, f64::min);
    let b = ratio <= 1.25;

    let rmse: Vec<f64> = config.k_grid.iter().map(|&k| cell(k, Method::Minimax).rmse_mean).collect();
    let corr: Vec<f64> = config.k_grid.iter().map(|&k| cell(k, Method::Minimax).pearson_mean).collect();
    let c = rmse.windows(2).all(|w| w[1] <= w[0]) && corr.windows(2).all(|w| w[1] >= w[0]);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
    outcome(
        a && b && c && elapsed < Duration::from_secs(900),
        format!(
            "(a) seeds where minimax wins at K=25/50/100: {:?} (>= 8/10) {}; (b) K=600 RMSE max/min {ratio:.3} (<= 1.25) {}; (c) minimax RMSE [{}] Pearson [{}] {}; {:.0}s (< 900s)",
            wins.iter().map(|w| w.1).collect::<Vec<_>>(),
            if a { "ok" } else { "FAIL" },
            if b { "ok" } else { "FAIL" },
            fmt(&rmse),
            fmt(&corr),
            if c { "ok" } else { "FAIL" },
            elapsed.as_secs_f64()
        ),
    )
}

fn best_prediction_time(model: &LearnerModel, queries: &[Vec<f64>]) -> f64 {
    let mut out = vec![0.0; model.num_bs()];
    let mut best = f64::INFINITY;
    for _ in 0..3 {
        let started = Instant::now();
        for q in queries {
            model.predict_into(q, &mut out);
            std::hint::black_box(&out);
        }
        best = best.min(started.elapsed().as_secs_f64());
    }
    best
}

fn criterion_8() -> Outcome {
    let (p, s) = base_scenario();
    let data = generate_dataset(&s, &p, 600, 0.05, 88).unwrap();
    let big = fit(&data, 0.05).unwrap();
    let small = fit(&data.prefix(25), 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let queries: Vec<Vec<f64>> = (0..10_000).map(|_| uniform_rates(&p, &mut rng)).collect();
    let t600 = best_prediction_time(&big, &queries);
    let t25 = best_prediction_time(&small, &queries);
    let ratio = t600 / t25;
    outcome(
        t600 < 5.0 && ratio < 30.0,
        format!("10000 predictions at K=600: {t600:.3}s (< 5s); K=25: {t25:.4}s; ratio {ratio:.1} (< 30)"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 fixed-point correctness", criterion_1),
        ("2 load monotone in rates", criterion_2),
        ("3 eigenvalue feasibility equivalence", criterion_3),
        ("4 interpolation and minimax envelope", criterion_4),
        ("5 predictor monotone and Lipschitz", criterion_5),
        ("6 smoothing LP optimality", criterion_6),
        ("7 benchmark trends", criterion_7),
        ("8 prediction cost linear in K", criterion_8),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let result = run();
        println!("{} criterion {name}: {}", if result.pass { "PASS" } else { "FAIL" }, result.detail);
        if !result.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

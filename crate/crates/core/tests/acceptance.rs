//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//!     cargo test -p price-disclosure --test acceptance

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use price_disclosure::cli;
use price_disclosure::disclosure::SubsetCache;
use price_disclosure::distribution::Uniform;
use price_disclosure::simulation::{by_method, TrueDensitySpec};
use price_disclosure::stats::{mean, sign_test_less};
use price_disclosure::{
    brute_force_disclose, critical_cost, full_disclose, improvement_upper_bound,
    interval_disclose, min_order_cdf, min_order_pdf, minimal_disclose, monte_carlo_disclose,
    simulate_first_position, simulate_kth_position, size_effect_experiment, subset_count,
    DisclosureConstraints, EvalSettings, Kde, Market, MarketConfig, Method, PriceDensity,
    PriceList,
};

type Outcome = Result<String, String>;

/// Id, name, optional time limit and check.
type Criterion = (u32, &'static str, Option<Duration>, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn timed<F: FnOnce() -> Outcome>(limit: Option<Duration>, f: F) -> Outcome {
    let start = Instant::now();
    let r = f();
    let elapsed = start.elapsed();
    match (r, limit) {
        (Ok(d), Some(l)) if elapsed >= l => Err(format!("{d}; took {elapsed:.2?}, limit {l:?}")),
        (Ok(d), _) => Ok(format!("{d}; {elapsed:.2?}")),
        (Err(d), _) => Err(format!("{d}; {elapsed:.2?}")),
    }
}

/// Prices (units) drawn around a level with a right skew.
fn random_prices(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let level = rng.random_range(30.0..400.0);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random_range(1e-9..1.0);
            let v: f64 = rng.random_range(0.0..1.0);
            let z = (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos();
            (level * (0.25 * z).exp() * 100.0).round() / 100.0
        })
        .collect()
}

fn printer_market(trials: usize) -> Market<f64> {
    let mut cfg = MarketConfig::new(TrueDensitySpec::builtin("printer"));
    cfg.trials = trials;
    cfg.base_seed = 2014;
    Market::from_config(cfg).expect("printer market")
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let a = subset_count(20, 10).map_err(|e| e.to_string())?;
    let b = subset_count(25, 10).map_err(|e| e.to_string())?;
    let c = subset_count(30, 10).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(
        a == BigUint::from(354_522u32)
            && b == BigUint::from(15_505_590u32)
            && c == BigUint::from(530_396_371u32)
            && elapsed < Duration::from_millis(1),
        format!("{a}, {b}, {c} in {elapsed:.2?}"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let prices = PriceList::from_prices("c2", "test", &random_prices(&mut rng, 30)).unwrap();
    let c = DisclosureConstraints::new(10);
    let s = EvalSettings::new(18);
    let i = interval_disclose::<f64>(&prices, &c, &s).map_err(|e| e.to_string())?;
    let m = minimal_disclose::<f64>(&prices, &c, &s).map_err(|e| e.to_string())?;
    check(
        i.subsets_evaluated == 231 && m.subsets_evaluated == 21,
        format!("interval {}, minimal {}", i.subsets_evaluated, m.subsets_evaluated),
    )
}

fn criterion_3() -> Outcome {
    let headline = improvement_upper_bound(4, 1);
    let mut violations = 0;
    for k in 1..=10 {
        for j in 1..=10 {
            let v = improvement_upper_bound(k, j);
            if k < 10 && improvement_upper_bound(k + 1, j) >= v {
                violations += 1;
            }
            if j < 10 && improvement_upper_bound(k, j + 1) <= v {
                violations += 1;
            }
        }
    }
    check(
        headline == 0.05 && violations == 0,
        format!("bound(4,1) = {headline}, {violations} shape violations"),
    )
}

/// Composite Simpson with 64 subintervals per panel.
fn simpson(f: impl Fn(f64) -> f64, edges: &[f64]) -> f64 {
    const M: usize = 64;
    edges
        .windows(2)
        .map(|w| {
            let h = (w[1] - w[0]) / M as f64;
            let inner: f64 = (1..M)
                .map(|i| f(w[0] + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 })
                .sum();
            h / 3.0 * (f(w[0]) + inner + f(w[1]))
        })
        .sum()
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let unit = Uniform::<f64>::unit();
    let mut worst_uniform = 0.0f64;
    for _ in 0..100 {
        let q: f64 = rng.random_range(0.0..=1.0);
        let n: u32 = rng.random_range(1..=60);
        let exact = q - (1.0 - (1.0 - q).powi(n as i32 + 1)) / (n as f64 + 1.0);
        let got = critical_cost(&unit, q, n).map_err(|e| e.to_string())?.value;
        worst_uniform = worst_uniform.max((got - exact).abs());
    }

    // Both forms integrated by a fixed composite Simpson rule, independent of
    // the adaptive integrator, from the public order-statistic functions.
    let mut worst_dual = 0.0f64;
    let mut worst_lib = 0.0f64;
    for _ in 0..1000 {
        let size = rng.random_range(2..=40);
        let xs = random_prices(&mut rng, size);
        let kde = Kde::fit(&xs, None).map_err(|e| e.to_string())?;
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let q = rng.random_range(lo..=hi.max(lo + 1e-9));
        let n: u32 = rng.random_range(1..=40);
        let pts = kde.breakpoints(kde.effective_low().max(0.0), q);
        let direct = simpson(|y| (q - y) * min_order_pdf(&kde, n, y).unwrap(), &pts);
        let dual = simpson(|y| min_order_cdf(&kde, n, y).unwrap(), &pts);
        let lib = critical_cost(&kde, q, n).map_err(|e| e.to_string())?.value;
        worst_dual = worst_dual.max((direct - dual).abs());
        worst_lib = worst_lib.max((lib - direct).abs());
    }
    check(
        worst_uniform <= 1e-6 && worst_dual <= 1e-6 && worst_lib <= 1e-6,
        format!(
            "uniform max error {worst_uniform:.2e}, dual gap {worst_dual:.2e}, library vs direct {worst_lib:.2e}"
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut q_viol, mut n_viol) = (0, 0);
    for _ in 0..500 {
        let size = rng.random_range(2..=40);
        let xs = random_prices(&mut rng, size);
        let kde = Kde::fit(&xs, None).map_err(|e| e.to_string())?;
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
        let n: u32 = rng.random_range(1..=40);
        let mut q1 = rng.random_range(lo * 0.8..hi);
        let mut q2 = rng.random_range(lo * 0.8..hi);
        if q1 > q2 {
            std::mem::swap(&mut q1, &mut q2);
        }
        let c1 = critical_cost(&kde, q1, n).map_err(|e| e.to_string())?;
        let c2 = critical_cost(&kde, q2, n).map_err(|e| e.to_string())?;
        let tol = c1.integration_error_estimate + c2.integration_error_estimate + 1e-9;
        if c2.value < c1.value - tol {
            q_viol += 1;
        }

        let size = rng.random_range(2..=40);
        let xs = random_prices(&mut rng, size);
        let kde = Kde::fit(&xs, None).map_err(|e| e.to_string())?;
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
        let q = rng.random_range(lo * 0.8..hi);
        let mut n1: u32 = rng.random_range(1..=60);
        let mut n2: u32 = rng.random_range(1..=60);
        if n1 > n2 {
            std::mem::swap(&mut n1, &mut n2);
        }
        let c1 = critical_cost(&kde, q, n1).map_err(|e| e.to_string())?;
        let c2 = critical_cost(&kde, q, n2).map_err(|e| e.to_string())?;
        let tol = c1.integration_error_estimate + c2.integration_error_estimate + 1e-9;
        if c2.value < c1.value - tol {
            n_viol += 1;
        }
    }
    check(
        q_viol == 0 && n_viol == 0,
        format!("{q_viol} violations in q, {n_viol} in N over 500 instances each"),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let c = DisclosureConstraints::new(5);
    let s = EvalSettings::new(18);
    let (mut dominance_fail, mut nesting_fail) = (0, 0);
    let (mut mc_trials, mut mc_matches) = (0, 0);
    for inst in 0..25 {
        let n = rng.random_range(8..=12);
        let prices = PriceList::from_prices("c6", "test", &random_prices(&mut rng, n)).unwrap();
        let brute = brute_force_disclose::<f64>(&prices, &c, &s).map_err(|e| e.to_string())?;
        let best = brute.critical_cost.value;
        let tol = 1e-12 * best.max(1.0);
        let interval = interval_disclose::<f64>(&prices, &c, &s).map_err(|e| e.to_string())?;
        let minimal = minimal_disclose::<f64>(&prices, &c, &s).map_err(|e| e.to_string())?;
        let full = full_disclose::<f64>(&prices, &s).map_err(|e| e.to_string())?;
        let mut cache = SubsetCache::new(1 << 16);
        let mut heuristics = vec![
            interval.critical_cost.value,
            minimal.critical_cost.value,
            full.critical_cost.value,
        ];
        for t in 0..2 {
            let seed = 1000 * inst + t;
            let r = price_disclosure::disclosure::monte_carlo_disclose_cached::<f64>(
                &prices, &c, &s, 200_000, seed, &mut cache,
            )
            .map_err(|e| e.to_string())?;
            mc_trials += 1;
            if (r.critical_cost.value - best).abs() <= tol {
                mc_matches += 1;
            }
            heuristics.push(r.critical_cost.value);
        }
        if heuristics.iter().any(|&h| h < best - tol) {
            dominance_fail += 1;
        }
        if minimal.critical_cost.value < interval.critical_cost.value - tol {
            nesting_fail += 1;
        }
    }
    let rate = mc_matches as f64 / mc_trials as f64;
    check(
        dominance_fail == 0 && nesting_fail == 0 && rate >= 0.99,
        format!(
            "brute force no worse on {}/25, nesting broken on {nesting_fail}, Monte-Carlo matched {mc_matches}/{mc_trials}",
            25 - dominance_fail
        ),
    )
}

fn criterion_7() -> Outcome {
    let market = printer_market(200);
    let reports = simulate_first_position(
        &market,
        &[Method::Interval, Method::MonteCarlo, Method::Full],
        &[231],
    )
    .map_err(|e| e.to_string())?;
    let by = by_method(&reports);
    let interval = &by[&Method::Interval].at(231).unwrap().samples;
    let mc = &by[&Method::MonteCarlo].at(231).unwrap().samples;
    let full = by[&Method::Full].full_set_cost;
    let test = sign_test_less(interval, mc);
    check(
        interval[0] < full && test.p_value < 0.05,
        format!(
            "interval {:.4} vs full {full:.4}; Monte-Carlo mean {:.4} over {} seeds, sign test {}-{} p = {:.2e}",
            interval[0],
            mean(mc),
            mc.len(),
            test.wins,
            test.losses,
            test.p_value
        ),
    )
}

fn criterion_8() -> Outcome {
    let market = printer_market(200);
    let reports = simulate_kth_position(
        &market,
        2,
        &[Method::Interval, Method::MonteCarlo, Method::Full],
        &[231],
    )
    .map_err(|e| e.to_string())?;
    let by = by_method(&reports);
    let interval = &by[&Method::Interval].at(231).unwrap().samples;
    let mc = &by[&Method::MonteCarlo].at(231).unwrap().samples;
    let full = &by[&Method::Full].full_set_samples;
    let test = sign_test_less(interval, full);
    let mc_delta = mean(mc) - mean(full);
    check(
        mean(interval) < mean(full) && test.p_value < 0.05,
        format!(
            "interval mean {:.4} vs full {:.4}, sign test {}-{} p = {:.2e}; Monte-Carlo mean {:.4} ({} than full by {:.4})",
            mean(interval),
            mean(full),
            test.wins,
            test.losses,
            test.p_value,
            mean(mc),
            if mc_delta > 0.0 { "higher" } else { "lower" },
            mc_delta.abs()
        ),
    )
}

fn criterion_9() -> Outcome {
    let market = printer_market(200);
    let mut details = vec![];
    let mut ok = true;
    for method in [Method::Interval, Method::MonteCarlo] {
        let rows = size_effect_experiment(&market, &[20, 40], method, 231).map_err(|e| e.to_string())?;
        // A deterministic method gives the same cost in every trial.
        let expand = |xs: &[f64]| {
            if xs.len() == 1 {
                vec![xs[0]; market.config.trials]
            } else {
                xs.to_vec()
            }
        };
        let (small, large) = (expand(&rows[0].samples), expand(&rows[1].samples));
        let test = sign_test_less(&large, &small);
        ok &= rows[1].mean_cost < rows[0].mean_cost && test.p_value < 0.05;
        details.push(format!(
            "{}: {:.4} -> {:.4}, sign test {}-{} over {} trials p = {:.2e}",
            method.name(),
            rows[0].mean_cost,
            rows[1].mean_cost,
            test.wins,
            test.losses,
            large.len(),
            test.p_value
        ));
    }
    check(ok, details.join("; "))
}

fn criterion_10() -> Outcome {
    let market = printer_market(40);
    let methods = [Method::MonteCarlo, Method::Interval, Method::Minimal, Method::Full];
    let budgets = [10, 50, 231];
    let a = simulate_first_position(&market, &methods, &budgets).map_err(|e| e.to_string())?;
    let b = simulate_kth_position(&market, 1, &methods, &budgets).map_err(|e| e.to_string())?;
    let bits = |rs: &[price_disclosure::SimulationReport]| -> Vec<u64> {
        rs.iter()
            .flat_map(|r| {
                let mut v = vec![r.full_set_cost.to_bits()];
                for p in &r.curve {
                    v.push(p.mean_cost.to_bits());
                    v.push(p.std_error.to_bits());
                    v.extend(p.samples.iter().map(|x| x.to_bits()));
                }
                v
            })
            .collect()
    };
    check(
        a == b && bits(&a) == bits(&b),
        format!("{} reports, {} values compared bitwise", a.len(), bits(&a).len()),
    )
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let mut out = vec![];
    let mut err = vec![];
    let code = cli::run(std::iter::once("disclose").chain(args.iter().copied()), &mut out, &mut err);
    (code, out)
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("market.json");
    std::fs::write(
        &config,
        r#"{"true_density": {"builtin": "printer"}, "trials": 12, "base_seed": 9}"#,
    )
    .map_err(|e| e.to_string())?;
    let config = config.to_str().unwrap().to_string();
    let mut failures = vec![];
    let mut compared = 0;
    let cases: Vec<Vec<&str>> = vec![
        vec!["disclose", "--builtin", "printer", "--method", "mc", "--rho", "10", "--n-new", "18", "--budget", "300", "--seed", "7"],
        vec!["disclose", "--builtin", "mouse", "--method", "mc", "--rho", "8", "--n-new", "12", "--budget", "150", "--max-size", "20"],
        vec!["disclose", "--builtin", "camera", "--method", "interval", "--rho", "10", "--n-new", "18"],
        vec!["simulate", "--config", &config, "--methods", "mc,interval,full", "--budgets", "10,60"],
        vec!["simulate", "--config", &config, "--position", "2", "--methods", "mc,minimal", "--budgets", "25", "--seed", "3"],
    ];
    for case in &cases {
        let mut outputs = vec![];
        for workers in ["1", "3", "1"] {
            let mut args = case.clone();
            args.extend(["--workers", workers]);
            let (code, out) = run_cli(&args);
            if code != 0 {
                failures.push(format!("{} exited {code}", case.join(" ")));
            }
            outputs.push(out);
        }
        compared += 1;
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            failures.push(format!("{} differs across runs", case.join(" ")));
        }
    }
    // A different seed must change the Monte-Carlo output.
    let (_, a) = run_cli(&cases[0]);
    let mut other = cases[0].clone();
    *other.last_mut().unwrap() = "8";
    let (_, b) = run_cli(&other);
    if a == b {
        failures.push("seed has no effect".into());
    }
    // Library path: the same draw under different thread pools.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let prices = PriceList::from_prices("c11", "test", &random_prices(&mut rng, 24)).unwrap();
    let c = DisclosureConstraints::new(6);
    let s = EvalSettings::new(15).with_trace(true);
    let run_in = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| monte_carlo_disclose::<f64>(&prices, &c, &s, 2500, 42).unwrap())
    };
    let (r1, r4) = (run_in(1), run_in(4));
    let trace_bits = |r: &price_disclosure::DisclosureResult64| -> Vec<u64> {
        r.trace.as_ref().unwrap().iter().map(|p| p.best_cost.to_bits()).collect()
    };
    if r1.indices != r4.indices || trace_bits(&r1) != trace_bits(&r4) {
        failures.push("library Monte-Carlo depends on thread count".into());
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{compared} CLI invocations byte-identical across --workers 1/3 and reruns; library trace identical on 1 and 4 threads")
        } else {
            failures.join("; ")
        },
    )
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "combinatorics", None, criterion_1),
        (2, "candidate counts", None, criterion_2),
        (3, "upper bound", None, criterion_3),
        (4, "critical cost vs closed form and dual", Some(Duration::from_secs(10)), criterion_4),
        (5, "monotonicity in q and N", None, criterion_5),
        (6, "brute-force oracle equivalence", Some(Duration::from_secs(300)), criterion_6),
        (7, "first-position dominance", None, criterion_7),
        (8, "second-position behaviour", None, criterion_8),
        (9, "size effect", None, criterion_9),
        (10, "k = 1 consistency", None, criterion_10),
        (11, "determinism", None, criterion_11),
    ];
    let mut failed = 0;
    for (id, name, limit, f) in criteria {
        match timed(limit, f) {
            Ok(detail) => println!("PASS {id:>2} {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id:>2} {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

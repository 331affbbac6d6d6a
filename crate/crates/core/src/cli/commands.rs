use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::{
    BenchArgs, Command, CountsArgs, CriticalCostArgs, DataSource, DiscloseArgs, EstimatorArg,
    FitArgs, MethodArg, SimulateArgs, SweepArg,
};
use crate::data::{builtin_dataset_named, load_prices, PriceFormat, PriceList};
use crate::disclosure::{
    disclose, evaluate_subset, full_disclose, interval_candidates, minimal_candidates,
    monte_carlo_candidates, DisclosureConstraints, EvalSettings, Estimator, Method, MethodParams,
};
use crate::distribution::{
    density_grid, fit_parametric, Density, DensitySummary, Family, FamilyFit, GridPoint, Kde,
};
use crate::error::{Error, Result};
use crate::search::{critical_cost, interval_subset_count, minimal_subset_count, subset_count};
use crate::simulation::{
    generate_initial_prices, simulate_kth_position, Market, MarketConfig, TrueDensitySpec,
};

const GRID_POINTS: usize = 512;

pub(super) fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::Fit(a) => fit(a, out),
        Command::CriticalCost(a) => critical_cost_cmd(a, out),
        Command::Disclose(a) => {
            let workers = a.workers;
            let (o, e) = with_workers(workers, || {
                let (mut o, mut e) = (Vec::new(), Vec::new());
                disclose_cmd(a, &mut o, &mut e).map(|_| (o, e))
            })?;
            out.write_all(&o)?;
            err.write_all(&e)?;
            Ok(())
        }
        Command::Simulate(a) => {
            let workers = a.workers;
            let o = with_workers(workers, || {
                let mut o = Vec::new();
                simulate(a, &mut o).map(|_| o)
            })?;
            out.write_all(&o)?;
            Ok(())
        }
        Command::Bench(a) => bench(a, out),
        Command::Counts(a) => counts(a, out),
    }
}

fn with_workers<R>(workers: Option<usize>, f: impl FnOnce() -> Result<R> + Send) -> Result<R>
where
    R: Send,
{
    match workers {
        None => f(),
        Some(0) => Err(Error::validation("--workers must be at least 1")),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::validation(format!("cannot start {w} workers: {e}")))?
            .install(f),
    }
}

fn load(source: &DataSource, label: Option<&str>) -> Result<PriceList> {
    let list = match (&source.data, &source.builtin) {
        (Some(d), _) if Path::new(d).exists() => load_prices(d, PriceFormat::Csv)?,
        (Some(d), _) => builtin_dataset_named(d).map_err(|_| {
            Error::NotFound(format!("{d:?} is neither a file nor a bundled dataset"))
        })?,
        (None, Some(b)) => builtin_dataset_named(b)?,
        (None, None) => return Err(Error::validation("one of --data or --builtin is required")),
    };
    match label {
        Some(l) => list.filter_source(l),
        None => Ok(list),
    }
}

/// Prices for `disclose` and `bench`. A bundled product stands for its
/// evaluation instance: `initial_n` equal-mass prices from the density of its
/// largest source, starting at that source's minimum. A file is used as is.
fn load_instance(source: &DataSource, label: Option<&str>, initial_n: usize) -> Result<PriceList> {
    match &source.builtin {
        Some(name) => {
            let mut spec = TrueDensitySpec::builtin(name);
            spec.source = label.map(str::to_string);
            let mut cfg = MarketConfig::new(spec);
            cfg.initial_set_size_n = initial_n;
            cfg.rho = 1;
            generate_initial_prices(&Market::<f64>::from_config(cfg)?)
        }
        None => load(source, label),
    }
}

fn fit_density(xs: &[f64], method: EstimatorArg, bandwidth: Option<f64>) -> Result<Density<f64>> {
    match method {
        EstimatorArg::Kde => Ok(Density::Kde(Kde::fit(xs, bandwidth)?)),
        EstimatorArg::Parametric => Ok(fit_parametric(xs, &Family::ALL)?.chosen),
    }
}

/// Writes to `path`, or to `out` when no path is given.
fn sink<'a>(path: &Option<PathBuf>, out: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(out),
    })
}

#[derive(Serialize)]
struct FitOutput {
    #[serde(flatten)]
    summary: DensitySummary,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    fits: Vec<FamilyFit>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    skipped: Vec<SkippedFamily>,
    grid: Vec<GridPoint>,
}

#[derive(Serialize)]
struct SkippedFamily {
    family: Family,
    reason: String,
}

fn fit(a: FitArgs, out: &mut dyn Write) -> Result<()> {
    let prices = load(&a.source, a.source_label.as_deref())?;
    let xs: Vec<f64> = prices.values();
    let (density, fits, skipped) = match a.method {
        EstimatorArg::Kde => (Density::Kde(Kde::fit(&xs, a.bandwidth)?), vec![], vec![]),
        EstimatorArg::Parametric => {
            let r = fit_parametric(&xs, &Family::ALL)?;
            let skipped = r
                .skipped
                .into_iter()
                .map(|(family, reason)| SkippedFamily { family, reason })
                .collect();
            (r.chosen, r.fits, skipped)
        }
    };
    let output = FitOutput {
        summary: density.summary(),
        fits,
        skipped,
        grid: density_grid(&density, GRID_POINTS)?,
    };
    let mut w = sink(&a.out, out)?;
    serde_json::to_writer_pretty(&mut w, &output)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// `from, from + step, ...` up to `to` inclusive.
fn sweep_values(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite() && to >= from) {
        return Err(Error::validation("sweep needs --step > 0 and --to >= --from"));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| from + i as f64 * step).collect())
}

fn critical_cost_cmd(a: CriticalCostArgs, out: &mut dyn Write) -> Result<()> {
    let prices = load(&a.source, a.source_label.as_deref())?;
    let density = fit_density(&prices.values::<f64>(), a.method, a.bandwidth)?;
    let q = a.q.unwrap_or_else(|| prices.min_price().to_units());
    let Some(sweep) = a.sweep else {
        let c = critical_cost(&density, q, a.n_new)?;
        writeln!(out, "q: {}", c.q)?;
        writeln!(out, "n_new: {}", c.n_new)?;
        writeln!(out, "critical_cost: {}", c.value)?;
        writeln!(out, "integration_error_estimate: {:e}", c.integration_error_estimate)?;
        return Ok(());
    };
    let values = sweep_values(
        a.from.expect("required by clap"),
        a.to.expect("required by clap"),
        a.step.expect("required by clap"),
    )?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink(&a.out, out)?);
    w.write_record(["q", "n_new", "critical_cost", "integration_error_estimate"])?;
    for v in values {
        let (q, n) = match sweep {
            SweepArg::Q => (v, a.n_new),
            SweepArg::N => {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(Error::validation(format!("N sweep needs positive integers, got {v}")));
                }
                (q, v as u32)
            }
        };
        let c = critical_cost(&density, q, n)?;
        w.write_record([
            c.q.to_string(),
            c.n_new.to_string(),
            c.value.to_string(),
            format!("{:e}", c.integration_error_estimate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Budget that fits in `deadline_ms`, from timing a few evaluations.
fn calibrate_budget(
    prices: &PriceList,
    constraints: &DisclosureConstraints,
    settings: &EvalSettings,
    seed: u64,
    deadline_ms: u64,
) -> Result<u64> {
    let sample = monte_carlo_candidates(prices, constraints, 5, seed);
    if sample.is_empty() {
        return Ok(1);
    }
    let values: Vec<f64> = prices.values();
    let start = Instant::now();
    for s in &sample {
        let xs: Vec<f64> = s.iter().map(|&i| values[i]).collect();
        evaluate_subset(&xs, settings.n_new, settings.estimator)?;
    }
    let per_eval = start.elapsed().as_secs_f64() / sample.len() as f64;
    let threads = rayon::current_num_threads() as f64;
    Ok(((deadline_ms as f64 / 1000.0) * threads / per_eval).floor().max(1.0) as u64)
}

fn disclose_cmd(a: DiscloseArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let prices = load_instance(&a.source, a.source_label.as_deref(), a.initial_n)?;
    let method: Method = a.method.into();
    let mut constraints = DisclosureConstraints::new(a.rho);
    if let Some(m) = a.max_size {
        constraints = constraints.with_max_size(m);
    }
    let settings = EvalSettings::new(a.n_new)
        .with_estimator(a.estimator.into())
        .with_trace(a.trace.is_some());
    let budget = match a.deadline_ms {
        Some(ms) if method == Method::MonteCarlo => {
            let b = calibrate_budget(&prices, &constraints, &settings, a.seed, ms)?;
            writeln!(err, "note: budget {b} calibrated from --deadline-ms {ms}; results depend on machine speed")?;
            b
        }
        _ => a.budget,
    };
    let r = disclose::<f64>(
        &prices,
        method,
        &constraints,
        &settings,
        MethodParams { budget, seed: a.seed },
    )?;
    let full = full_disclose::<f64>(&prices, &EvalSettings::new(a.n_new).with_estimator(a.estimator.into()))?;

    writeln!(out, "method: {}", r.method)?;
    writeln!(out, "rho: {}", a.rho)?;
    writeln!(out, "n_new: {}", a.n_new)?;
    if method == Method::MonteCarlo {
        writeln!(out, "seed: {}", a.seed)?;
        writeln!(out, "budget: {budget}")?;
    }
    writeln!(out, "evaluations: {}", r.subsets_evaluated)?;
    writeln!(out, "critical_cost: {}", r.critical_cost.value)?;
    writeln!(out, "full_set_cost: {}", full.critical_cost.value)?;
    let mut shown: Vec<_> = r.subset.prices().collect();
    shown.sort_unstable();
    writeln!(out, "subset_size: {}", shown.len())?;
    let listed: Vec<String> = shown.iter().map(|c| c.to_string()).collect();
    writeln!(out, "subset: {}", listed.join(","))?;
    for w in &r.warnings {
        writeln!(err, "warning: {w}")?;
    }
    if let Some(path) = &a.out {
        r.subset.write_csv(BufWriter::new(File::create(path)?))?;
    }
    if let (Some(path), Some(trace)) = (&a.trace, &r.trace) {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)?;
        w.write_record(["evaluation", "best_cost"])?;
        for p in trace {
            w.write_record([p.evaluation.to_string(), p.best_cost.to_string()])?;
        }
        w.flush()?;
    }
    Ok(())
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let text = std::fs::read_to_string(&a.config)?;
    let mut cfg = MarketConfig::from_json(&text)?;
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = a.seed {
        cfg.base_seed = s;
    }
    let market = Market::<f64>::from_config(cfg)?;
    let methods: Vec<Method> = a.methods.iter().map(|&m| m.into()).collect();
    let reports = simulate_kth_position(&market, a.position, &methods, &a.budgets)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink(&a.out, out)?);
    w.write_record([
        "method",
        "position_k",
        "budget",
        "mean_cost",
        "std_error",
        "full_set_cost",
        "trials",
        "seed",
    ])?;
    for r in &reports {
        for p in &r.curve {
            w.write_record([
                r.method.name().to_string(),
                r.position_k.to_string(),
                p.budget.to_string(),
                p.mean_cost.to_string(),
                p.std_error.to_string(),
                r.full_set_cost.to_string(),
                r.trials.to_string(),
                r.seed.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> Result<()> {
    let prices = load_instance(&a.source, a.source_label.as_deref(), a.initial_n)?;
    let constraints = DisclosureConstraints::new(a.rho);
    constraints_check(&constraints, prices.len())?;
    let estimator: Estimator = a.estimator.into();
    let values: Vec<f64> = prices.values();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink(&a.out, out)?);
    w.write_record([
        "method",
        "evaluations",
        "total_seconds",
        "mean_seconds",
        "min_seconds",
        "max_seconds",
    ])?;
    for &m in &a.methods {
        let candidates = match m {
            MethodArg::Mc => monte_carlo_candidates(&prices, &constraints, a.budget, a.seed),
            MethodArg::Interval => interval_candidates(&prices, &constraints),
            MethodArg::Minimal => minimal_candidates(&prices, &constraints),
            MethodArg::Full => vec![(0..prices.len()).collect()],
            MethodArg::Brute => {
                return Err(Error::validation("bench does not time brute force"));
            }
        };
        let mut times = Vec::with_capacity(candidates.len());
        for c in &candidates {
            let xs: Vec<f64> = c.iter().map(|&i| values[i]).collect();
            let start = Instant::now();
            evaluate_subset(&xs, a.n_new, estimator)?;
            times.push(start.elapsed().as_secs_f64());
        }
        let total: f64 = times.iter().sum();
        let count = times.len();
        let method: Method = m.into();
        w.write_record([
            method.name().to_string(),
            count.to_string(),
            total.to_string(),
            (if count > 0 { total / count as f64 } else { 0.0 }).to_string(),
            times.iter().copied().fold(f64::INFINITY, f64::min).min(total).to_string(),
            times.iter().copied().fold(0.0, f64::max).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn constraints_check(c: &DisclosureConstraints, n: usize) -> Result<()> {
    if c.rho == 0 || c.rho > n {
        return Err(Error::validation(format!("need 1 <= rho <= {n}, got {}", c.rho)));
    }
    Ok(())
}

fn counts(a: CountsArgs, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "subset_count: {}", subset_count(a.n, a.rho)?)?;
    writeln!(out, "interval_subset_count: {}", interval_subset_count(a.n, a.rho)?)?;
    writeln!(out, "minimal_subset_count: {}", minimal_subset_count(a.n, a.rho)?)?;
    Ok(())
}

//! Market experiments: a CSA holding `n` prices spread over the true price
//! density chooses what to disclose; the searcher meets it first, or after
//! `k - 1` other CSAs whose listings are random draws from that density.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{builtin_dataset_named, load_prices, Cents, PriceFormat, PriceList};
use crate::disclosure::{
    disclose, evaluate_subset, monte_carlo_disclose_cached, DisclosureConstraints,
    DisclosureResult, EvalSettings, Estimator, Method, MethodParams, SubsetCache,
};
use crate::distribution::{equal_mass_prices, Density, Kde, PriceDensity};
use crate::error::{Error, Result};
use crate::rng::{trial_seed, Role};
use crate::scalar::Scalar;
use crate::search::expected_new_prices;
use crate::stats::{mean, std_error};

const CACHE_CAPACITY: usize = 1 << 20;

/// Where the true price density comes from: a dataset (builtin name or CSV
/// path), optionally one source of it, fitted with `method`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrueDensitySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Source label to fit on; defaults to the source with most listings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default)]
    pub method: Estimator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
}

impl TrueDensitySpec {
    pub fn builtin(name: &str) -> Self {
        TrueDensitySpec {
            builtin: Some(name.to_string()),
            path: None,
            source: None,
            method: Estimator::Kde,
            bandwidth: None,
        }
    }

    /// The prices the density is fitted on.
    pub fn sample(&self) -> Result<PriceList> {
        let all = match (&self.builtin, &self.path) {
            (Some(name), None) => builtin_dataset_named(name)?,
            (None, Some(path)) => load_prices(path, PriceFormat::Csv)?,
            _ => {
                return Err(Error::validation(
                    "true_density needs exactly one of \"builtin\" or \"path\"",
                ))
            }
        };
        match &self.source {
            Some(s) => all.filter_source(s),
            None => {
                let largest = all.largest_source().to_string();
                all.filter_source(&largest)
            }
        }
    }
}

fn default_listing_mean() -> f64 {
    20.6
}
fn default_overlap() -> f64 {
    0.12
}
fn default_rho() -> usize {
    10
}
fn default_n() -> usize {
    30
}
fn default_trials() -> usize {
    100
}

/// Experiment settings, as read from a JSON config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub true_density: TrueDensitySpec,
    #[serde(default = "default_listing_mean")]
    pub csa_listing_mean: f64,
    #[serde(default = "default_overlap")]
    pub overlap_rate: f64,
    #[serde(default = "default_rho")]
    pub rho: usize,
    #[serde(default = "default_n")]
    pub initial_set_size_n: usize,
    /// The searcher's estimator.
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Lowest price of the disclosing CSA; defaults to the minimum of the
    /// density's sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<f64>,
    /// Listing size of each earlier CSA; defaults to the expected number of
    /// new prices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_csa_listing_count: Option<u32>,
}

impl MarketConfig {
    pub fn new(true_density: TrueDensitySpec) -> Self {
        MarketConfig {
            true_density,
            csa_listing_mean: default_listing_mean(),
            overlap_rate: default_overlap(),
            rho: default_rho(),
            initial_set_size_n: default_n(),
            estimator: Estimator::Kde,
            trials: default_trials(),
            base_seed: 0,
            q0: None,
            first_csa_listing_count: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.overlap_rate) {
            return Err(Error::validation(format!("overlap_rate must be in [0, 1), got {}", self.overlap_rate)));
        }
        if self.rho == 0 || self.rho > self.initial_set_size_n {
            return Err(Error::validation(format!(
                "need 1 <= rho <= initial_set_size_n, got rho = {}, n = {}",
                self.rho, self.initial_set_size_n
            )));
        }
        if self.trials == 0 {
            return Err(Error::validation("trials must be positive"));
        }
        Ok(())
    }
}

/// A configured market with its true density resolved.
#[derive(Debug, Clone)]
pub struct Market<T: Scalar> {
    pub config: MarketConfig,
    pub density: Density<T>,
    pub q0: T,
}

impl<T: Scalar> Market<T> {
    pub fn from_config(config: MarketConfig) -> Result<Self> {
        let sample = config.true_density.sample()?;
        let xs: Vec<T> = sample.values();
        let density = match config.true_density.method {
            Estimator::Kde => Density::Kde(Kde::fit(&xs, config.true_density.bandwidth.map(T::lit))?),
            Estimator::Parametric => Estimator::Parametric.fit(&xs)?,
        };
        let q0 = config.q0.map_or_else(|| sample.min_price().to_units(), T::lit);
        Market::with_density(config, density, q0)
    }

    pub fn with_density(config: MarketConfig, density: Density<T>, q0: T) -> Result<Self> {
        config.validate()?;
        Ok(Market { config, density, q0 })
    }

    /// Expected new prices per query (the searcher's `N`).
    pub fn n_new(&self) -> Result<u32> {
        expected_new_prices(self.config.csa_listing_mean, self.config.overlap_rate)
    }

    fn with_size(&self, n: usize) -> Self {
        let mut m = self.clone();
        m.config.initial_set_size_n = n;
        m
    }
}

/// The disclosing CSA's prices: equal probability mass between neighbours,
/// starting at `q0`, rounded to cents.
pub fn generate_initial_prices<T: Scalar>(market: &Market<T>) -> Result<PriceList> {
    let xs = equal_mass_prices(&market.density, market.config.initial_set_size_n, market.q0)?;
    PriceList::from_prices("simulated", "generated", &xs)
}

/// One earlier CSA's listing: i.i.d. inverse-cdf draws from the true density,
/// rounded to cents (at least one cent).
pub fn draw_csa_listing<T: Scalar, R: Rng + ?Sized>(market: &Market<T>, rng: &mut R) -> Result<PriceList> {
    let count = match market.config.first_csa_listing_count {
        Some(c) => c,
        None => market.n_new()?,
    };
    let mut entries = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let u: f64 = rng.random_range(f64::EPSILON..1.0);
        let y = market.density.quantile(T::lit(u))?;
        entries.push(crate::data::PriceEntry {
            source: "market".to_string(),
            price: Cents::from_units(y.as_f64()).max(Cents(1)),
        });
    }
    PriceList::new("simulated", entries)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub budget: u64,
    pub mean_cost: f64,
    pub std_error: f64,
    /// Per-trial costs, in trial order.
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub method: Method,
    pub position_k: usize,
    pub curve: Vec<CurvePoint>,
    pub full_set_cost: f64,
    pub full_set_samples: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

impl SimulationReport {
    /// The curve point with the largest budget not above `budget`.
    pub fn at(&self, budget: u64) -> Option<&CurvePoint> {
        self.curve.iter().rev().find(|p| p.budget <= budget)
    }
}

fn point(budget: u64, samples: Vec<f64>) -> CurvePoint {
    CurvePoint {
        budget,
        mean_cost: mean(&samples),
        std_error: std_error(&samples),
        samples,
    }
}

/// Searcher at position 1: the cost of the disclosed set itself.
pub fn simulate_first_position<T: Scalar>(
    market: &Market<T>,
    methods: &[Method],
    budgets: &[u64],
) -> Result<Vec<SimulationReport>> {
    simulate(market, 1, methods, budgets)
}

/// Searcher at position `k`: the disclosed set pooled with `k - 1` random
/// listings, refitted, with `q` the pooled minimum. `k = 1` is
/// [`simulate_first_position`].
pub fn simulate_kth_position<T: Scalar>(
    market: &Market<T>,
    k: usize,
    methods: &[Method],
    budgets: &[u64],
) -> Result<Vec<SimulationReport>> {
    if k == 0 {
        return Err(Error::validation("position k must be at least 1"));
    }
    simulate(market, k, methods, budgets)
}

fn simulate<T: Scalar>(
    market: &Market<T>,
    k: usize,
    methods: &[Method],
    budgets: &[u64],
) -> Result<Vec<SimulationReport>> {
    if budgets.is_empty() || budgets.contains(&0) {
        return Err(Error::validation("budgets must be a nonempty list of positive integers"));
    }
    if methods.is_empty() {
        return Err(Error::validation("no methods given"));
    }
    let mut budgets = budgets.to_vec();
    budgets.sort_unstable();
    budgets.dedup();
    let cfg = &market.config;
    let n_new = market.n_new()?;
    let prices = generate_initial_prices(market)?;
    let values: Vec<T> = prices.values();
    let settings = EvalSettings::new(n_new).with_estimator(cfg.estimator);
    let constraints = DisclosureConstraints::new(cfg.rho);
    let max_budget = *budgets.last().expect("nonempty");

    // Listings of the k-1 earlier CSAs, per trial; shared by every method.
    let pools: Vec<Vec<T>> = if k == 1 {
        vec![]
    } else {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.base_seed, t as u64, Role::Listing));
                let mut pooled = Vec::new();
                for _ in 1..k {
                    pooled.extend(draw_csa_listing(market, &mut rng)?.values::<T>());
                }
                Ok(pooled)
            })
            .collect::<Result<_>>()?
    };
    // Cost seen by the searcher when `indices` are disclosed in trial `t`.
    let seen_cost = |indices: &[usize], t: usize| -> Result<f64> {
        let mut xs: Vec<T> = indices.iter().map(|&i| values[i]).collect();
        if k > 1 {
            xs.extend_from_slice(&pools[t]);
        }
        Ok(evaluate_subset(&xs, n_new, cfg.estimator)?.value.as_f64())
    };
    let all: Vec<usize> = (0..prices.len()).collect();
    let trials_for = |randomized: bool| if randomized || k > 1 { cfg.trials } else { 1 };

    let full_set_samples: Vec<f64> = (0..trials_for(false))
        .into_par_iter()
        .map(|t| seen_cost(&all, t))
        .collect::<Result<_>>()?;
    let full_set_cost = mean(&full_set_samples);

    let mut reports = Vec::with_capacity(methods.len());
    for &method in methods {
        let randomized = method == Method::MonteCarlo;
        let trials = trials_for(randomized);
        // Incumbent subsets at each budget, per trial.
        let runs: Vec<Vec<Vec<usize>>> = if randomized {
            let mut cache = SubsetCache::new(CACHE_CAPACITY);
            (0..cfg.trials)
                .map(|t| {
                    let seed = trial_seed(cfg.base_seed, t as u64, Role::MonteCarlo);
                    let r = monte_carlo_disclose_cached::<T>(
                        &prices,
                        &constraints,
                        &settings,
                        max_budget,
                        seed,
                        &mut cache,
                    )?;
                    Ok(incumbents(&r, &budgets))
                })
                .collect::<Result<_>>()?
        } else {
            let r = disclose::<T>(
                &prices,
                method,
                &constraints,
                &settings,
                MethodParams { budget: max_budget, seed: cfg.base_seed },
            )?;
            vec![incumbents(&r, &budgets)]
        };
        let per_trial: Vec<Vec<f64>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let subsets = &runs[if randomized { t } else { 0 }];
                let mut memo: HashMap<&[usize], f64> = HashMap::new();
                subsets
                    .iter()
                    .map(|s| {
                        if let Some(&c) = memo.get(s.as_slice()) {
                            return Ok(c);
                        }
                        let c = seen_cost(s, t)?;
                        memo.insert(s.as_slice(), c);
                        Ok(c)
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        let curve = budgets
            .iter()
            .enumerate()
            .map(|(b, &budget)| point(budget, per_trial.iter().map(|row| row[b]).collect()))
            .collect();
        reports.push(SimulationReport {
            method,
            position_k: k,
            curve,
            full_set_cost,
            full_set_samples: full_set_samples.clone(),
            trials,
            seed: cfg.base_seed,
        });
    }
    Ok(reports)
}

/// The incumbent subset after each budget (the final one once the method has
/// run out of candidates).
fn incumbents<T: Scalar>(r: &DisclosureResult<T>, budgets: &[u64]) -> Vec<Vec<usize>> {
    budgets
        .iter()
        .map(|&b| {
            r.best_after(b)
                .or_else(|| r.improvements.first())
                .map_or_else(|| r.indices.clone(), |imp| imp.indices.clone())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeEffectRow {
    pub n: usize,
    pub mean_cost: f64,
    pub std_error: f64,
    pub samples: Vec<f64>,
}

/// First-position cost of `method` at `budget` for each initial set size.
pub fn size_effect_experiment<T: Scalar>(
    market: &Market<T>,
    sizes: &[usize],
    method: Method,
    budget: u64,
) -> Result<Vec<SizeEffectRow>> {
    if let Some(&n) = sizes.iter().find(|&&n| n < market.config.rho) {
        return Err(Error::validation(format!("size {n} is below rho = {}", market.config.rho)));
    }
    sizes
        .iter()
        .map(|&n| {
            let reports = simulate_first_position(&market.with_size(n), &[method], &[budget])?;
            let p = reports[0].curve[0].clone();
            Ok(SizeEffectRow {
                n,
                mean_cost: p.mean_cost,
                std_error: p.std_error,
                samples: p.samples,
            })
        })
        .collect()
}

/// Reports grouped by method, for callers that look results up by name.
pub fn by_method(reports: &[SimulationReport]) -> BTreeMap<Method, &SimulationReport> {
    reports.iter().map(|r| (r.method, r)).collect()
}

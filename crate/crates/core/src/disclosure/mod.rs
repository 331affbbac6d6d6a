//! Choosing which prices to disclose so that the searcher's critical cost is
//! as low as possible.
//!
//! All methods always disclose the designated minimum (the lowest-index entry
//! at the minimum price) and respect a minimum subset size `rho`.

mod brute;
mod interval;
mod monte_carlo;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use brute::{brute_force_disclose, BRUTE_FORCE_LIMIT};
pub use interval::{full_disclose, interval_disclose, minimal_disclose};
pub use monte_carlo::{monte_carlo_disclose, monte_carlo_disclose_cached};
pub(crate) use interval::{interval_candidates, minimal_candidates};
pub(crate) use monte_carlo::monte_carlo_candidates;

use crate::data::PriceList;
use crate::distribution::{fit_parametric, Density, Family, Kde};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::search::{critical_cost, CriticalCost};

/// How the searcher's density is estimated from a disclosed set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Gaussian KDE, bandwidth by Silverman's rule on the set itself.
    #[default]
    Kde,
    /// Best of the parametric families by BIC.
    Parametric,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Kde => "kde",
            Estimator::Parametric => "parametric",
        }
    }

    pub fn fit<T: Scalar>(self, samples: &[T]) -> Result<Density<T>> {
        match self {
            Estimator::Kde => Ok(Density::Kde(Kde::fit(samples, None)?)),
            Estimator::Parametric => Ok(fit_parametric(samples, &Family::ALL)?.chosen),
        }
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kde" => Ok(Estimator::Kde),
            "parametric" => Ok(Estimator::Parametric),
            _ => Err(Error::validation(format!("unknown estimator {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    BruteForce,
    MonteCarlo,
    Interval,
    Minimal,
    Full,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::BruteForce => "brute_force",
            Method::MonteCarlo => "monte_carlo",
            Method::Interval => "interval",
            Method::Minimal => "minimal",
            Method::Full => "full",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "brute" | "brute_force" | "brute-force" => Ok(Method::BruteForce),
            "mc" | "monte_carlo" | "monte-carlo" => Ok(Method::MonteCarlo),
            "interval" => Ok(Method::Interval),
            "minimal" => Ok(Method::Minimal),
            "full" => Ok(Method::Full),
            _ => Err(Error::validation(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DisclosureConstraints {
    /// Smallest number of prices that may be disclosed.
    pub rho: usize,
    /// Largest number of prices that may be disclosed.
    pub max_size: Option<usize>,
}

impl DisclosureConstraints {
    pub fn new(rho: usize) -> Self {
        DisclosureConstraints { rho, max_size: None }
    }

    pub fn with_max_size(mut self, max_size: usize) -> Self {
        self.max_size = Some(max_size);
        self
    }

    /// The minimum price is always disclosed.
    pub fn must_include_min(&self) -> bool {
        true
    }

    /// Largest admissible size for a list of `n` prices.
    pub(crate) fn size_cap(&self, n: usize) -> usize {
        self.max_size.map_or(n, |m| m.min(n))
    }

    pub(crate) fn validate(&self, n: usize) -> Result<()> {
        if self.rho == 0 {
            return Err(Error::validation("rho must be at least 1"));
        }
        if self.rho > n {
            return Err(Error::validation(format!("rho = {} exceeds the {n} available prices", self.rho)));
        }
        if let Some(m) = self.max_size {
            if m < self.rho {
                return Err(Error::validation(format!("max size {m} is below rho = {}", self.rho)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint<T> {
    pub evaluation: u64,
    pub best_cost: T,
}

/// A point where the incumbent changed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Improvement<T> {
    /// 1-based evaluation count; 0 is the full-set starting point of the
    /// Monte-Carlo search, which is not counted as an evaluation.
    pub evaluation: u64,
    pub cost: T,
    /// Entry indices, ascending.
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct DisclosureResult<T> {
    /// Entry indices of the disclosed prices in the input list, ascending.
    pub indices: Vec<usize>,
    pub subset: PriceList,
    pub critical_cost: CriticalCost<T>,
    pub method: Method,
    pub subsets_evaluated: u64,
    pub seed: Option<u64>,
    /// Best cost after each evaluation, present when requested.
    pub trace: Option<Vec<TracePoint<T>>>,
    /// Every change of incumbent, in evaluation order.
    pub improvements: Vec<Improvement<T>>,
    pub warnings: Vec<String>,
}

impl<T: Scalar> DisclosureResult<T> {
    /// The incumbent after the first `budget` evaluations, if any existed yet.
    pub fn best_after(&self, budget: u64) -> Option<&Improvement<T>> {
        self.improvements
            .iter()
            .take_while(|imp| imp.evaluation <= budget)
            .last()
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        prices: &PriceList,
        method: Method,
        best: Improvement<T>,
        improvements: Vec<Improvement<T>>,
        subsets_evaluated: u64,
        seed: Option<u64>,
        cost: CriticalCost<T>,
        want_trace: bool,
    ) -> Result<Self> {
        let trace = want_trace.then(|| expand_trace(&improvements, subsets_evaluated));
        Ok(DisclosureResult {
            subset: prices.select(&best.indices)?,
            indices: best.indices,
            critical_cost: cost,
            method,
            subsets_evaluated,
            seed,
            trace,
            improvements,
            warnings: vec![],
        })
    }
}

fn expand_trace<T: Scalar>(improvements: &[Improvement<T>], evaluated: u64) -> Vec<TracePoint<T>> {
    let first = improvements.first().map_or(1, |i| i.evaluation);
    let mut out = Vec::with_capacity((evaluated + 1 - first) as usize);
    let mut next = 0;
    let mut best = T::infinity();
    for e in first..=evaluated {
        while next < improvements.len() && improvements[next].evaluation <= e {
            best = improvements[next].cost;
            next += 1;
        }
        out.push(TracePoint {
            evaluation: e,
            best_cost: best,
        });
    }
    out
}

/// Critical cost of disclosing exactly `subset`: refit the estimator on it,
/// take its minimum as `q`, integrate.
///
/// Depends only on the multiset of prices.
pub fn evaluate_subset<T: Scalar>(subset: &[T], n_new: u32, estimator: Estimator) -> Result<CriticalCost<T>> {
    if subset.is_empty() {
        return Err(Error::validation("cannot evaluate an empty subset"));
    }
    let mut xs = subset.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite prices"));
    let density = estimator.fit(&xs)?;
    critical_cost(&density, xs[0], n_new)
}

/// Settings shared by all methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalSettings {
    pub n_new: u32,
    pub estimator: Estimator,
    /// Record the best-so-far cost after every evaluation.
    pub trace: bool,
}

impl EvalSettings {
    pub fn new(n_new: u32) -> Self {
        EvalSettings {
            n_new,
            estimator: Estimator::Kde,
            trace: false,
        }
    }

    pub fn with_estimator(mut self, estimator: Estimator) -> Self {
        self.estimator = estimator;
        self
    }

    pub fn with_trace(mut self, trace: bool) -> Self {
        self.trace = trace;
        self
    }
}

/// Prices of one list cached as scalars, for repeated subset evaluation.
pub(crate) struct Evaluator<T> {
    values: Vec<T>,
    n_new: u32,
    estimator: Estimator,
}

impl<T: Scalar> Evaluator<T> {
    pub(crate) fn new(prices: &PriceList, settings: &EvalSettings) -> Result<Self> {
        if settings.n_new == 0 {
            return Err(Error::validation("N must be at least 1"));
        }
        Ok(Evaluator {
            values: prices.values(),
            n_new: settings.n_new,
            estimator: settings.estimator,
        })
    }

    pub(crate) fn cost(&self, indices: &[usize]) -> Result<CriticalCost<T>> {
        let xs: Vec<T> = indices.iter().map(|&i| self.values[i]).collect();
        evaluate_subset(&xs, self.n_new, self.estimator)
    }

    /// Costs of many candidates, evaluated in parallel, returned in order.
    pub(crate) fn costs(&self, candidates: &[Vec<usize>]) -> Result<Vec<T>> {
        candidates
            .par_iter()
            .map(|c| self.cost(c).map(|r| r.value))
            .collect()
    }
}

/// Indices sorted ascending by `(price, index)`.
pub(crate) fn sorted_order(prices: &PriceList) -> Vec<usize> {
    let mut order: Vec<usize> = (0..prices.len()).collect();
    order.sort_by_key(|&i| (prices.price(i), i));
    order
}

/// Scans candidates in order, keeping the first strictly cheaper one.
pub(crate) struct Incumbent<T> {
    pub best: Option<Improvement<T>>,
    pub improvements: Vec<Improvement<T>>,
}

impl<T: Scalar> Incumbent<T> {
    pub(crate) fn new() -> Self {
        Incumbent {
            best: None,
            improvements: vec![],
        }
    }

    pub(crate) fn offer(&mut self, evaluation: u64, cost: T, indices: &[usize]) {
        if self.best.as_ref().is_none_or(|b| cost < b.cost) {
            let mut indices = indices.to_vec();
            indices.sort_unstable();
            let imp = Improvement {
                evaluation,
                cost,
                indices,
            };
            self.improvements.push(imp.clone());
            self.best = Some(imp);
        }
    }
}

/// Cache of subset costs keyed by sorted entry indices.
///
/// Only valid for one price list, `N` and estimator. Stops growing at
/// `capacity` entries.
#[derive(Debug, Clone)]
pub struct SubsetCache<T> {
    map: HashMap<Vec<usize>, T>,
    capacity: usize,
}

impl<T: Scalar> SubsetCache<T> {
    pub fn new(capacity: usize) -> Self {
        SubsetCache {
            map: HashMap::new(),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub(crate) fn get(&self, key: &[usize]) -> Option<T> {
        self.map.get(key).copied()
    }

    pub(crate) fn insert(&mut self, key: Vec<usize>, cost: T) {
        if self.map.len() < self.capacity {
            self.map.insert(key, cost);
        }
    }
}

/// Arguments for [`disclose`] that only some methods use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MethodParams {
    pub budget: u64,
    pub seed: u64,
}

/// Runs `method` with the given settings.
pub fn disclose<T: Scalar>(
    prices: &PriceList,
    method: Method,
    constraints: &DisclosureConstraints,
    settings: &EvalSettings,
    params: MethodParams,
) -> Result<DisclosureResult<T>> {
    match method {
        Method::BruteForce => brute_force_disclose(prices, constraints, settings),
        Method::MonteCarlo => {
            monte_carlo_disclose(prices, constraints, settings, params.budget, params.seed)
        }
        Method::Interval => interval_disclose(prices, constraints, settings),
        Method::Minimal => minimal_disclose(prices, constraints, settings),
        Method::Full => full_disclose(prices, settings),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_cost_depends_on_multiset_only() {
        let a = evaluate_subset(&[310.0f64, 297.0, 305.0], 18, Estimator::Kde).unwrap();
        let b = evaluate_subset(&[305.0f64, 310.0, 297.0], 18, Estimator::Kde).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.q, 297.0);
    }

    #[test]
    fn singleton_subset_has_positive_cost() {
        let c = evaluate_subset(&[297.0f64], 18, Estimator::Kde).unwrap();
        assert!(c.value > 0.0);
    }

    #[test]
    fn parametric_estimator_runs() {
        let c = evaluate_subset(&[297.0f64, 305.0, 312.0, 330.0, 350.0], 18, Estimator::Parametric).unwrap();
        assert!(c.value > 0.0 && c.value < 297.0);
    }

    #[test]
    fn trace_expansion() {
        let imps = vec![
            Improvement { evaluation: 0, cost: 5.0f64, indices: vec![0] },
            Improvement { evaluation: 3, cost: 4.0, indices: vec![0, 1] },
        ];
        let t = expand_trace(&imps, 4);
        let costs: Vec<f64> = t.iter().map(|p| p.best_cost).collect();
        assert_eq!(costs, [5.0, 5.0, 5.0, 4.0, 4.0]);
        assert_eq!(t[0].evaluation, 0);
    }

    #[test]
    fn parse_names() {
        assert_eq!("mc".parse::<Method>().unwrap(), Method::MonteCarlo);
        assert_eq!("brute".parse::<Method>().unwrap(), Method::BruteForce);
        assert!("nope".parse::<Method>().is_err());
        assert_eq!("parametric".parse::<Estimator>().unwrap(), Estimator::Parametric);
    }
}

//! Anytime random search over subsets that contain the minimum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    DisclosureConstraints, DisclosureResult, EvalSettings, Evaluator, Incumbent, Method,
    SubsetCache,
};
use crate::data::PriceList;
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::scalar::Scalar;

const CHUNK: u64 = 1024;

/// The subset drawn at iteration `i`: a size `k` uniform on `[rho, cap]`,
/// then `k - 1` distinct non-minimum entries by a partial Fisher-Yates
/// shuffle, plus the minimum. Returned sorted.
fn draw(keyed: &ChaCha8Rng, i: u64, min: usize, others: &[usize], rho: usize, cap: usize) -> Vec<usize> {
    let mut rng = substream(keyed, i);
    let k = rng.random_range(rho..=cap);
    let mut pool = others.to_vec();
    for j in 0..k - 1 {
        let r = rng.random_range(j..pool.len());
        pool.swap(j, r);
    }
    pool.truncate(k - 1);
    pool.push(min);
    pool.sort_unstable();
    pool
}

/// The subsets iterations `1..=budget` would evaluate; empty when no proper
/// subset is admissible.
pub(crate) fn monte_carlo_candidates(
    prices: &PriceList,
    constraints: &DisclosureConstraints,
    budget: u64,
    seed: u64,
) -> Vec<Vec<usize>> {
    let n = prices.len();
    let cap = constraints.size_cap(n).min(n - 1);
    if constraints.rho > cap {
        return vec![];
    }
    let min = prices.min_index();
    let others: Vec<usize> = (0..n).filter(|&i| i != min).collect();
    let keyed = ChaCha8Rng::seed_from_u64(seed);
    (1..=budget)
        .map(|i| draw(&keyed, i, min, &others, constraints.rho, cap))
        .collect()
}

/// Random search with exactly `budget` evaluations, starting from the full
/// set. Iteration `i` draws from its own counter-addressed stream, so the
/// result depends only on the inputs and `seed`.
pub fn monte_carlo_disclose<T: Scalar>(
    prices: &PriceList,
    constraints: &DisclosureConstraints,
    settings: &EvalSettings,
    budget: u64,
    seed: u64,
) -> Result<DisclosureResult<T>> {
    let mut cache = SubsetCache::new(0);
    monte_carlo_disclose_cached(prices, constraints, settings, budget, seed, &mut cache)
}

/// As [`monte_carlo_disclose`], reusing costs from `cache` (which must belong
/// to the same prices, `N` and estimator). Repeated draws are not counted
/// differently: `subsets_evaluated` is always `budget`.
pub fn monte_carlo_disclose_cached<T: Scalar>(
    prices: &PriceList,
    constraints: &DisclosureConstraints,
    settings: &EvalSettings,
    budget: u64,
    seed: u64,
    cache: &mut SubsetCache<T>,
) -> Result<DisclosureResult<T>> {
    let n = prices.len();
    constraints.validate(n)?;
    if budget == 0 {
        return Err(Error::validation("budget must be at least 1"));
    }
    let eval = Evaluator::<T>::new(prices, settings)?;
    let all: Vec<usize> = (0..n).collect();
    let full_cost = match cache.get(&all) {
        Some(c) => c,
        None => {
            let c = eval.cost(&all)?.value;
            cache.insert(all.clone(), c);
            c
        }
    };
    let mut inc = Incumbent::new();
    inc.offer(0, full_cost, &all);

    let min = prices.min_index();
    let others: Vec<usize> = (0..n).filter(|&i| i != min).collect();
    let cap = constraints.size_cap(n).min(n - 1);
    let mut warnings = vec![];
    let mut evaluated = budget;
    if constraints.rho > cap {
        warnings.push(format!(
            "no proper subset of size >= {} exists among {n} prices; returning the full set",
            constraints.rho
        ));
        evaluated = 0;
    } else {
        let keyed = ChaCha8Rng::seed_from_u64(seed);
        let mut start = 1;
        while start <= budget {
            let end = (start + CHUNK - 1).min(budget);
            let draws: Vec<Vec<usize>> = (start..=end)
                .map(|i| draw(&keyed, i, min, &others, constraints.rho, cap))
                .collect();
            let mut misses: Vec<Vec<usize>> = draws
                .iter()
                .filter(|d| cache.get(d).is_none())
                .cloned()
                .collect();
            misses.sort_unstable();
            misses.dedup();
            let costs = eval.costs(&misses)?;
            let mut local: std::collections::HashMap<&[usize], T> =
                misses.iter().map(Vec::as_slice).zip(costs.iter().copied()).collect();
            for (offset, d) in draws.iter().enumerate() {
                let cost = match cache.get(d) {
                    Some(c) => c,
                    None => local[d.as_slice()],
                };
                inc.offer(start + offset as u64, cost, d);
            }
            for (m, c) in misses.iter().zip(costs) {
                cache.insert(m.clone(), c);
            }
            local.clear();
            start = end + 1;
        }
    }

    let best = inc.best.clone().expect("full set offered");
    let cost = eval.cost(&best.indices)?;
    let mut result = DisclosureResult::build(
        prices,
        Method::MonteCarlo,
        best,
        inc.improvements,
        evaluated,
        Some(seed),
        cost,
        settings.trace,
    )?;
    result.warnings = warnings;
    Ok(result)
}

//! Exhaustive search, usable as an oracle on small instances.

use std::cmp::Ordering;

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::ToPrimitive;

use super::{DisclosureConstraints, DisclosureResult, EvalSettings, Evaluator, Improvement, Method};
use crate::data::{Cents, PriceList};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest number of subsets brute force will evaluate.
pub const BRUTE_FORCE_LIMIT: u64 = 5_000_000;

const CHUNK: usize = 4096;

fn admissible_count(n: usize, rho: usize, cap: usize) -> BigUint {
    let m = n - 1;
    let mut c = BigUint::from(1u32);
    let mut total = BigUint::from(0u32);
    for r in 0..=m {
        if r + 1 >= rho && r < cap {
            total += &c;
        }
        c = c * BigUint::from(m - r) / BigUint::from(r + 1);
    }
    total
}

/// Evaluates every admissible subset containing the minimum and returns the
/// cheapest. Equal costs go to the lexicographically smallest sorted price
/// sequence, then to the smallest index sequence, so the answer does not
/// depend on evaluation order.
pub fn brute_force_disclose<T: Scalar>(
    prices: &PriceList,
    constraints: &DisclosureConstraints,
    settings: &EvalSettings,
) -> Result<DisclosureResult<T>> {
    let n = prices.len();
    constraints.validate(n)?;
    let cap = constraints.size_cap(n);
    let count = admissible_count(n, constraints.rho, cap);
    if count > BigUint::from(BRUTE_FORCE_LIMIT) {
        return Err(Error::TooManySubsets {
            count: count.to_string(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let eval = Evaluator::<T>::new(prices, settings)?;
    let min = prices.min_index();
    let others: Vec<usize> = (0..n).filter(|&i| i != min).collect();
    let key = |idx: &[usize]| -> Vec<Cents> {
        let mut k: Vec<Cents> = idx.iter().map(|&i| prices.price(i)).collect();
        k.sort_unstable();
        k
    };

    let mut best: Option<(Improvement<T>, Vec<Cents>)> = None;
    let mut improvements = Vec::new();
    let mut evaluation = 0u64;
    let subsets = (constraints.rho..=cap).flat_map(|k| {
        others.iter().copied().combinations(k - 1).map(move |mut c| {
            c.push(min);
            c.sort_unstable();
            c
        })
    });
    for chunk in &subsets.chunks(CHUNK) {
        let chunk: Vec<Vec<usize>> = chunk.collect();
        let costs = eval.costs(&chunk)?;
        for (idx, cost) in chunk.into_iter().zip(costs) {
            evaluation += 1;
            let better = match &best {
                None => true,
                Some((b, bkey)) => match cost.partial_cmp(&b.cost).unwrap_or(Ordering::Greater) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => {
                        let k = key(&idx);
                        (&k, &idx) < (bkey, &b.indices)
                    }
                },
            };
            if better {
                let imp = Improvement {
                    evaluation,
                    cost,
                    indices: idx,
                };
                let k = key(&imp.indices);
                improvements.push(imp.clone());
                best = Some((imp, k));
            }
        }
    }
    let (best, _) = best.expect("at least one subset");
    let cost = eval.cost(&best.indices)?;
    DisclosureResult::build(
        prices,
        Method::BruteForce,
        best,
        improvements,
        count.to_u64().expect("below limit"),
        None,
        cost,
        settings.trace,
    )
}

//! Deterministic candidate families over the ascending price order: the
//! minimum joined with a contiguous run (interval), or with the next cheapest
//! prices only (minimal).

use super::{
    sorted_order, DisclosureConstraints, DisclosureResult, EvalSettings, Evaluator, Incumbent,
    Method,
};
use crate::data::PriceList;
use crate::error::Result;
use crate::scalar::Scalar;

/// The full set when admissible, then, for each size `k` from `rho` to the
/// cap (below `n`), the minimum joined with every run of `k - 1` consecutive
/// sorted prices. `(n-ρ+1)(n-ρ+2)/2` candidates without a size cap.
pub(crate) fn interval_candidates(prices: &PriceList, c: &DisclosureConstraints) -> Vec<Vec<usize>> {
    let order = sorted_order(prices);
    let n = order.len();
    let cap = c.size_cap(n);
    let mut out = Vec::new();
    if cap == n {
        out.push(order.clone());
    }
    for k in c.rho..=cap.min(n - 1) {
        for start in 1..=n - k + 1 {
            let mut cand = Vec::with_capacity(k);
            cand.push(order[0]);
            cand.extend_from_slice(&order[start..start + k - 1]);
            out.push(cand);
        }
    }
    out
}

/// The full set when admissible, then the `k` cheapest prices for each size
/// from `rho` to the cap (below `n`). `n - ρ + 1` candidates without a cap.
pub(crate) fn minimal_candidates(prices: &PriceList, c: &DisclosureConstraints) -> Vec<Vec<usize>> {
    let order = sorted_order(prices);
    let n = order.len();
    let cap = c.size_cap(n);
    let mut out = Vec::new();
    if cap == n {
        out.push(order.clone());
    }
    for k in c.rho..=cap.min(n - 1) {
        out.push(order[..k].to_vec());
    }
    out
}

fn scan<T: Scalar>(
    prices: &PriceList,
    candidates: Vec<Vec<usize>>,
    method: Method,
    settings: &EvalSettings,
) -> Result<DisclosureResult<T>> {
    let eval = Evaluator::<T>::new(prices, settings)?;
    let costs = eval.costs(&candidates)?;
    let mut inc = Incumbent::new();
    for (i, (cand, cost)) in candidates.iter().zip(costs).enumerate() {
        inc.offer(i as u64 + 1, cost, cand);
    }
    let best = inc.best.clone().expect("at least one candidate");
    let cost = eval.cost(&best.indices)?;
    DisclosureResult::build(
        prices,
        method,
        best,
        inc.improvements,
        candidates.len() as u64,
        None,
        cost,
        settings.trace,
    )
}

pub fn interval_disclose<T: Scalar>(
    prices: &PriceList,
    constraints: &DisclosureConstraints,
    settings: &EvalSettings,
) -> Result<DisclosureResult<T>> {
    constraints.validate(prices.len())?;
    let candidates = interval_candidates(prices, constraints);
    scan(prices, candidates, Method::Interval, settings)
}

pub fn minimal_disclose<T: Scalar>(
    prices: &PriceList,
    constraints: &DisclosureConstraints,
    settings: &EvalSettings,
) -> Result<DisclosureResult<T>> {
    constraints.validate(prices.len())?;
    let candidates = minimal_candidates(prices, constraints);
    scan(prices, candidates, Method::Minimal, settings)
}

/// Discloses everything; the baseline every method is compared against.
pub fn full_disclose<T: Scalar>(prices: &PriceList, settings: &EvalSettings) -> Result<DisclosureResult<T>> {
    let all: Vec<usize> = (0..prices.len()).collect();
    scan(prices, vec![all], Method::Full, settings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(xs: &[f64]) -> PriceList {
        PriceList::from_prices("t", "s", xs).unwrap()
    }

    #[test]
    fn interval_candidates_for_five_prices() {
        // entries out of order: sorted order is indices 1,3,0,4,2
        let p = list(&[3.0, 1.0, 5.0, 2.0, 4.0]);
        let c = interval_candidates(&p, &DisclosureConstraints::new(3));
        let expected: Vec<Vec<usize>> = vec![
            vec![1, 3, 0, 4, 2],
            vec![1, 3, 0],
            vec![1, 0, 4],
            vec![1, 4, 2],
            vec![1, 3, 0, 4],
            vec![1, 0, 4, 2],
        ];
        assert_eq!(c, expected);
    }

    #[test]
    fn candidate_counts() {
        let xs: Vec<f64> = (0..30).map(|i| 100.0 + i as f64).collect();
        let p = list(&xs);
        let c = DisclosureConstraints::new(10);
        assert_eq!(interval_candidates(&p, &c).len(), 231);
        assert_eq!(minimal_candidates(&p, &c).len(), 21);
        let p = list(&[1.0, 2.0, 3.0]);
        assert_eq!(interval_candidates(&p, &DisclosureConstraints::new(3)).len(), 1);
        assert_eq!(minimal_candidates(&p, &DisclosureConstraints::new(2)).len(), 2);
    }

    #[test]
    fn size_cap_drops_full_set() {
        let p = list(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let c = DisclosureConstraints::new(2).with_max_size(3);
        let cands = interval_candidates(&p, &c);
        assert!(cands.iter().all(|s| (2..=3).contains(&s.len())));
        assert_eq!(cands.len(), 4 + 3);
    }

    #[test]
    fn tied_minimum_uses_lowest_index() {
        let p = list(&[5.0, 2.0, 2.0, 9.0]);
        let c = minimal_candidates(&p, &DisclosureConstraints::new(2));
        assert_eq!(c[1], vec![1, 2]);
    }

    #[test]
    fn interval_never_worse_than_full() {
        let p = list(&[297.0, 305.0, 306.5, 315.0, 340.0, 352.0, 360.0, 410.0]);
        let s = EvalSettings::new(18).with_trace(true);
        let r = interval_disclose::<f64>(&p, &DisclosureConstraints::new(3), &s).unwrap();
        let full = full_disclose::<f64>(&p, &s).unwrap();
        assert!(r.critical_cost.value <= full.critical_cost.value);
        assert!(r.indices.contains(&0));
        let trace = r.trace.unwrap();
        assert_eq!(trace.len() as u64, r.subsets_evaluated);
        assert!(trace.windows(2).all(|w| w[1].best_cost <= w[0].best_cost));
    }
}

//! The searcher's stopping model: distribution of the minimum of `N` new
//! prices, the critical query cost and the termination rule.

use num_bigint::BigUint;
use serde::Serialize;

use crate::data::PriceList;
use crate::distribution::{DensityPoint, PriceDensity};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_panels, QuadOptions};
use crate::scalar::Scalar;

/// What the searcher knows after some queries.
#[derive(Debug, Clone)]
pub struct SearcherState {
    observed: PriceList,
    query_cost: f64,
    expected_new_count: u32,
}

impl SearcherState {
    pub fn new(observed: PriceList, query_cost: f64, expected_new_count: u32) -> Result<Self> {
        if !(query_cost >= 0.0 && query_cost.is_finite()) {
            return Err(Error::validation(format!("query cost must be nonnegative, got {query_cost}")));
        }
        if expected_new_count == 0 {
            return Err(Error::validation("expected new price count must be positive"));
        }
        Ok(SearcherState {
            observed,
            query_cost,
            expected_new_count,
        })
    }

    /// The lowest price seen so far (q).
    pub fn best_price(&self) -> f64 {
        self.observed.min_price().to_units()
    }

    pub fn observed(&self) -> &PriceList {
        &self.observed
    }

    pub fn query_cost(&self) -> f64 {
        self.query_cost
    }

    pub fn expected_new_count(&self) -> u32 {
        self.expected_new_count
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalCost<T> {
    pub value: T,
    pub q: T,
    pub n_new: u32,
    /// Summed Richardson estimate of the quadrature error.
    pub integration_error_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Terminate,
    ContinueSearch,
}

/// `(1 - F)^m` from whichever of `cdf`/`sf` is accurate at this point.
#[inline]
fn survival_pow<T: Scalar>(p: &DensityPoint<T>, m: T) -> T {
    if m == T::zero() {
        return T::one();
    }
    let log_s = if p.cdf < T::lit(0.5) {
        (-p.cdf).ln_1p()
    } else {
        p.sf.ln()
    };
    (m * log_s).exp()
}

fn check_n(n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::validation("N must be at least 1"));
    }
    Ok(())
}

/// Density of the minimum of `n` independent draws: `N f(y) (1 - F(y))^(N-1)`.
pub fn min_order_pdf<T: Scalar, D: PriceDensity<T> + ?Sized>(d: &D, n: u32, y: T) -> Result<T> {
    check_n(n)?;
    let p = d.point(y);
    Ok(T::lit(n as f64) * p.pdf * survival_pow(&p, T::lit((n - 1) as f64)))
}

/// Probability that the minimum of `n` draws is at most `y`: `1 - (1 - F(y))^N`.
pub fn min_order_cdf<T: Scalar, D: PriceDensity<T> + ?Sized>(d: &D, n: u32, y: T) -> Result<T> {
    check_n(n)?;
    Ok(min_order_cdf_at(&d.point(y), n))
}

#[inline]
fn min_order_cdf_at<T: Scalar>(p: &DensityPoint<T>, n: u32) -> T {
    if p.cdf == T::zero() {
        return T::zero();
    }
    let log_s = if p.cdf < T::lit(0.5) {
        (-p.cdf).ln_1p()
    } else {
        p.sf.ln()
    };
    -(T::lit(n as f64) * log_s).exp_m1()
}

/// Expected saving from one more query when the best price is `q` and the
/// query yields `n` new prices:
///
/// `∫₀^q (q - y) f_N(y) dy = ∫₀^q F_N(y) dy`.
///
/// Both forms are integrated on the same mesh. The returned value is the
/// second; disagreement beyond `max(1e-6, 1e-4·value)` is a numerical error.
pub fn critical_cost<T: Scalar, D: PriceDensity<T> + ?Sized>(
    d: &D,
    q: T,
    n: u32,
) -> Result<CriticalCost<T>> {
    check_n(n)?;
    if !q.is_finite() || q < d.support_low() {
        return Err(Error::validation(format!("q = {q} below the support")));
    }
    let lo = d.support_low().max(d.effective_low());
    if !(q > lo) {
        return Ok(CriticalCost {
            value: T::zero(),
            q,
            n_new: n,
            integration_error_estimate: 0.0,
        });
    }
    let nn = T::lit(n as f64);
    let m = T::lit((n - 1) as f64);
    let integrand = |y: T| {
        let p = d.point(y);
        let f_n = nn * p.pdf * survival_pow(&p, m);
        [(q - y) * f_n, min_order_cdf_at(&p, n)]
    };
    let points = d.breakpoints(lo, q);
    let r = integrate_panels(integrand, &points, QuadOptions::default())?;
    let [direct, dual] = r.value;
    let estimate = r.error[0].as_f64().max(r.error[1].as_f64());
    let value = dual.max(T::zero());
    let gap = (direct - dual).abs().as_f64();
    let allowed = 1e-6f64
        .max(1e-4 * value.as_f64())
        .max(64.0 * T::epsilon().as_f64() * q.as_f64());
    if !(gap <= allowed) {
        return Err(Error::Numerical {
            message: format!(
                "critical cost forms disagree: {direct} vs {dual} (q = {q}, N = {n})"
            ),
            estimate: estimate.max(gap),
        });
    }
    Ok(CriticalCost {
        value,
        q,
        n_new: n,
        integration_error_estimate: estimate,
    })
}

/// Stop iff the query cost is at least the expected saving.
pub fn decide<T: Scalar>(state: &SearcherState, cost: &CriticalCost<T>) -> Decision {
    if state.query_cost() >= cost.value.as_f64() {
        Decision::Terminate
    } else {
        Decision::ContinueSearch
    }
}

/// New prices a query is expected to reveal once overlap with what the
/// searcher has already seen is discounted. Rounded, at least 1.
pub fn expected_new_prices(avg_listings: f64, overlap_rate: f64) -> Result<u32> {
    if !(avg_listings > 0.0 && avg_listings.is_finite()) {
        return Err(Error::validation(format!("average listings must be positive, got {avg_listings}")));
    }
    if !(0.0..1.0).contains(&overlap_rate) {
        return Err(Error::validation(format!("overlap rate must be in [0, 1), got {overlap_rate}")));
    }
    Ok(((avg_listings * (1.0 - overlap_rate)).round() as u32).max(1))
}

/// Largest relative gain from being able to hide prices: `1/k - 1/(k+j)`.
pub fn improvement_upper_bound(k: u32, j: u32) -> f64 {
    let (k, j) = (k as f64, j as f64);
    j / (k * (k + j))
}

/// Number of subsets of `n` prices that contain the minimum and have at
/// least `rho` elements: `Σ_{k=ρ}^{n} C(n-1, k-1)`.
pub fn subset_count(n: usize, rho: usize) -> Result<BigUint> {
    if rho == 0 || rho > n {
        return Err(Error::validation(format!("need 1 <= rho <= n, got rho = {rho}, n = {n}")));
    }
    let m = n - 1;
    // C(m, r) for r = 0..=m by the multiplicative recurrence
    let mut c = BigUint::from(1u32);
    let mut total = BigUint::from(0u32);
    for r in 0..=m {
        if r >= rho - 1 {
            total += &c;
        }
        c = c * BigUint::from(m - r) / BigUint::from(r + 1);
    }
    Ok(total)
}

/// Candidates examined by the interval method: `(n-ρ+1)(n-ρ+2)/2`.
pub fn interval_subset_count(n: usize, rho: usize) -> Result<u64> {
    if rho == 0 || rho > n {
        return Err(Error::validation(format!("need 1 <= rho <= n, got rho = {rho}, n = {n}")));
    }
    let m = (n - rho + 1) as u64;
    Ok(m * (m + 1) / 2)
}

/// Candidates examined by the minimal method: `n - ρ + 1`.
pub fn minimal_subset_count(n: usize, rho: usize) -> Result<u64> {
    if rho == 0 || rho > n {
        return Err(Error::validation(format!("need 1 <= rho <= n, got rho = {rho}, n = {n}")));
    }
    Ok((n - rho + 1) as u64)
}

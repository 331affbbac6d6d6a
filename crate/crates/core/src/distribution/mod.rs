//! Price densities as perceived by a searcher.
//!
//! Every density lives on `[support_low, ∞)` (prices are non-negative), so
//! families defined on the whole real line are truncated at zero and
//! renormalized.

mod kde;
mod parametric;
pub(crate) mod special;

use serde::Serialize;

pub use kde::{silverman_bandwidth, Kde};
pub use parametric::{fit_parametric, Family, FamilyFit, FitReport, Parametric};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Upper mass left out when placing the last equal-mass price.
pub const TAIL_TOLERANCE: f64 = 1e-6;

/// Absolute tolerance (in price units) of [`PriceDensity::quantile`].
pub const QUANTILE_TOLERANCE: f64 = 1e-6;

/// Cap on quadrature panels produced by [`PriceDensity::breakpoints`].
pub(crate) const MAX_PANELS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityPoint<T> {
    pub pdf: T,
    pub cdf: T,
    /// `1 - cdf`, computed without cancellation where the density allows it.
    pub sf: T,
}

/// A univariate density on `[support_low, ∞)`.
pub trait PriceDensity<T: Scalar>: Send + Sync {
    fn support_low(&self) -> T {
        T::zero()
    }

    fn pdf(&self, y: T) -> T;

    fn cdf(&self, y: T) -> T;

    fn sf(&self, y: T) -> T {
        T::one() - self.cdf(y)
    }

    fn point(&self, y: T) -> DensityPoint<T> {
        DensityPoint {
            pdf: self.pdf(y),
            cdf: self.cdf(y),
            sf: self.sf(y),
        }
    }

    /// A point below which the cdf is negligible (under ~1e-18).
    fn effective_low(&self) -> T {
        self.support_low()
    }

    /// Width over which the density changes appreciably.
    fn length_scale(&self) -> T;

    /// A point in the upper bulk of the distribution; seeds quantile brackets.
    fn upper_hint(&self) -> T;

    /// Sorted panel edges covering `[lo, hi]`, endpoints included.
    fn breakpoints(&self, lo: T, hi: T) -> Vec<T> {
        if !(hi > lo) {
            return vec![lo, hi];
        }
        let width = self.length_scale() / T::lit(2.0);
        let panels = ((hi - lo) / width).ceil().as_f64();
        let panels = if panels.is_finite() {
            (panels as usize).clamp(1, MAX_PANELS)
        } else {
            MAX_PANELS
        };
        crate::quadrature::uniform_points(lo, hi, panels)
    }

    /// Smallest `y` with `cdf(y) >= p`, by bisection.
    fn quantile(&self, p: T) -> Result<T> {
        bisect_quantile(self, p)
    }
}

pub(crate) fn bisect_quantile<T: Scalar, D: PriceDensity<T> + ?Sized>(d: &D, p: T) -> Result<T> {
    if !(p >= T::zero() && p <= T::one()) {
        return Err(Error::validation(format!("probability {p} outside [0, 1]")));
    }
    let mut lo = d.support_low();
    if p == T::zero() {
        return Ok(lo);
    }
    let mut hi = d.upper_hint().max(lo + d.length_scale());
    let mut expansions = 0;
    while d.cdf(hi) < p {
        lo = hi;
        hi = hi + (hi - d.support_low()).max(d.length_scale());
        expansions += 1;
        if expansions > 200 || !hi.is_finite() {
            return Err(Error::Numerical {
                message: format!("cannot bracket quantile {p}"),
                estimate: f64::NAN,
            });
        }
    }
    let tol = T::lit(QUANTILE_TOLERANCE);
    for _ in 0..400 {
        let width_floor = T::epsilon() * hi.abs() * T::lit(4.0);
        if hi - lo <= tol.max(width_floor) {
            break;
        }
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if d.cdf(mid) >= p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `n` prices starting at `q0` with equal probability mass between neighbours.
///
/// The mass above `cdf(q0)` is split into `n - 1` equal steps; the last price
/// sits at the `1 - TAIL_TOLERANCE` quantile.
pub fn equal_mass_prices<T: Scalar, D: PriceDensity<T> + ?Sized>(
    d: &D,
    n: usize,
    q0: T,
) -> Result<Vec<T>> {
    if n < 2 {
        return Err(Error::validation(format!("need at least 2 prices, got {n}")));
    }
    if !(q0 >= d.support_low()) {
        return Err(Error::validation(format!("q0 = {q0} below the support")));
    }
    let tail = T::lit(TAIL_TOLERANCE);
    let f0 = d.cdf(q0);
    if !(f0 < T::one() - tail) {
        return Err(Error::Generation(format!(
            "no probability mass above q0 = {q0} (cdf = {f0})"
        )));
    }
    let step = (T::one() - f0) / T::lit((n - 1) as f64);
    let mut out = Vec::with_capacity(n);
    out.push(q0);
    for i in 1..n {
        let target = if i == n - 1 {
            T::one() - tail
        } else {
            f0 + step * T::lit(i as f64)
        };
        let q = d.quantile(target)?;
        let prev = *out.last().unwrap();
        if !(q > prev) {
            return Err(Error::Generation(format!(
                "mass step {step} unreachable after price {prev}"
            )));
        }
        out.push(q);
    }
    Ok(out)
}

/// Uniform density on `[low, high]`; a closed-form reference for tests and
/// calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform<T> {
    low: T,
    high: T,
}

impl<T: Scalar> Uniform<T> {
    pub fn new(low: T, high: T) -> Result<Self> {
        if !(low.is_finite() && high.is_finite() && high > low && low >= T::zero()) {
            return Err(Error::validation(format!("invalid uniform support [{low}, {high}]")));
        }
        Ok(Uniform { low, high })
    }

    pub fn unit() -> Self {
        Uniform {
            low: T::zero(),
            high: T::one(),
        }
    }
}

impl<T: Scalar> PriceDensity<T> for Uniform<T> {
    fn support_low(&self) -> T {
        self.low
    }

    fn pdf(&self, y: T) -> T {
        if y < self.low || y > self.high {
            T::zero()
        } else {
            T::one() / (self.high - self.low)
        }
    }

    fn cdf(&self, y: T) -> T {
        ((y - self.low) / (self.high - self.low)).max(T::zero()).min(T::one())
    }

    fn sf(&self, y: T) -> T {
        ((self.high - y) / (self.high - self.low)).max(T::zero()).min(T::one())
    }

    fn length_scale(&self) -> T {
        self.high - self.low
    }

    fn upper_hint(&self) -> T {
        self.high
    }
}

/// A fitted density: kernel estimate or a parametric family.
#[derive(Debug, Clone)]
pub enum Density<T: Scalar> {
    Kde(Kde<T>),
    Parametric(Parametric<T>),
}

impl<T: Scalar> Density<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            Density::Kde(_) => "kde",
            Density::Parametric(_) => "parametric",
        }
    }

    pub fn summary(&self) -> DensitySummary {
        match self {
            Density::Kde(k) => DensitySummary {
                kind: "kde".into(),
                family: None,
                parameters: vec![],
                bandwidth: Some(k.bandwidth().as_f64()),
                sample_size: k.sample_size(),
            },
            Density::Parametric(p) => DensitySummary {
                kind: "parametric".into(),
                family: Some(p.family()),
                parameters: p.parameters().to_vec(),
                bandwidth: None,
                sample_size: p.sample_size(),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DensitySummary {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub parameters: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    pub sample_size: usize,
}

macro_rules! delegate {
    ($self:ident, $d:ident => $e:expr) => {
        match $self {
            Density::Kde($d) => $e,
            Density::Parametric($d) => $e,
        }
    };
}

impl<T: Scalar> PriceDensity<T> for Density<T> {
    fn support_low(&self) -> T {
        delegate!(self, d => d.support_low())
    }
    fn pdf(&self, y: T) -> T {
        delegate!(self, d => d.pdf(y))
    }
    fn cdf(&self, y: T) -> T {
        delegate!(self, d => d.cdf(y))
    }
    fn sf(&self, y: T) -> T {
        delegate!(self, d => d.sf(y))
    }
    fn point(&self, y: T) -> DensityPoint<T> {
        delegate!(self, d => d.point(y))
    }
    fn effective_low(&self) -> T {
        delegate!(self, d => d.effective_low())
    }
    fn length_scale(&self) -> T {
        delegate!(self, d => d.length_scale())
    }
    fn upper_hint(&self) -> T {
        delegate!(self, d => d.upper_hint())
    }
    fn breakpoints(&self, lo: T, hi: T) -> Vec<T> {
        delegate!(self, d => d.breakpoints(lo, hi))
    }
    fn quantile(&self, p: T) -> Result<T> {
        delegate!(self, d => d.quantile(p))
    }
}

/// One row of a plotting grid.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridPoint {
    pub y: f64,
    pub pdf: f64,
    pub cdf: f64,
}

/// `points` evenly spaced samples between the effective support bounds.
pub fn density_grid<T: Scalar, D: PriceDensity<T> + ?Sized>(d: &D, points: usize) -> Result<Vec<GridPoint>> {
    let lo = d.effective_low();
    let hi = d.quantile(T::one() - T::lit(TAIL_TOLERANCE))?;
    let n = points.max(2);
    Ok((0..n)
        .map(|i| {
            let y = lo + (hi - lo) * T::lit(i as f64 / (n - 1) as f64);
            GridPoint {
                y: y.as_f64(),
                pdf: d.pdf(y).as_f64(),
                cdf: d.cdf(y).as_f64(),
            }
        })
        .collect())
}

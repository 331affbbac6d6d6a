//! Gaussian kernel density estimate truncated at zero.

use std::f64::consts::SQRT_2;

use super::special::{erfc, norm_cdf, INV_SQRT_2PI};
use super::{DensityPoint, PriceDensity, MAX_PANELS};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fixed-bandwidth Gaussian KDE on `[0, ∞)`.
///
/// Kernel mass that would fall below zero is cut off and the remainder
/// renormalized, so `cdf(0) = 0`.
#[derive(Debug, Clone)]
pub struct Kde<T> {
    centers: Vec<T>,
    bandwidth: T,
    /// Σ Φ(-c/h): kernel mass below zero.
    below: T,
    /// n - below.
    total: T,
}

impl<T: Scalar> Kde<T> {
    /// Fits the estimate; `bandwidth` defaults to [`silverman_bandwidth`].
    pub fn fit(samples: &[T], bandwidth: Option<T>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::validation("KDE needs at least one sample"));
        }
        if let Some(x) = samples.iter().find(|x| !x.is_finite()) {
            return Err(Error::validation(format!("non-finite sample {x}")));
        }
        let bandwidth = match bandwidth {
            Some(h) if h > T::zero() && h.is_finite() => h,
            Some(h) => return Err(Error::validation(format!("bandwidth must be positive, got {h}"))),
            None => silverman_bandwidth(samples),
        };
        let mut centers = samples.to_vec();
        centers.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let h = bandwidth.as_f64();
        let below: f64 = centers.iter().map(|c| norm_cdf(-c.as_f64() / h)).sum();
        let total = centers.len() as f64 - below;
        Ok(Kde {
            centers,
            bandwidth,
            below: T::lit(below),
            total: T::lit(total),
        })
    }

    pub fn bandwidth(&self) -> T {
        self.bandwidth
    }

    pub fn sample_size(&self) -> usize {
        self.centers.len()
    }

    /// Sorted kernel centers.
    pub fn centers(&self) -> &[T] {
        &self.centers
    }

    /// Σ Φ((y-c)/h), Σ Φ((c-y)/h) and Σ φ((y-c)/h), each summed from terms
    /// computed in their accurate tail.
    #[inline]
    fn sums(&self, y: f64) -> (f64, f64, f64) {
        let inv_h = 1.0 / self.bandwidth.as_f64();
        let (mut lower, mut upper, mut dens) = (0.0, 0.0, 0.0);
        for c in &self.centers {
            let z = (y - c.as_f64()) * inv_h;
            // beyond 40 bandwidths the tail underflows
            if z < -40.0 {
                upper += 1.0;
                continue;
            }
            if z > 40.0 {
                lower += 1.0;
                continue;
            }
            let tail = 0.5 * erfc(z.abs() / SQRT_2);
            if z < 0.0 {
                lower += tail;
                upper += 1.0 - tail;
            } else {
                lower += 1.0 - tail;
                upper += tail;
            }
            dens += (-0.5 * z * z).exp();
        }
        (lower, upper, dens)
    }
}

/// Silverman's rule of thumb, `0.9 · min(σ̂, IQR/1.34) · n^(-1/5)`.
///
/// When the IQR vanishes but σ̂ does not, σ̂ alone is used. A sample without
/// spread gets `max(0.01 · mean, 0.01)`.
pub fn silverman_bandwidth<T: Scalar>(samples: &[T]) -> T {
    let xs: Vec<f64> = samples.iter().map(|x| x.as_f64()).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut sorted = xs.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = match sd.min(iqr / 1.34) {
        s if s > 0.0 => s,
        _ => sd,
    };
    let h = if spread > 0.0 {
        0.9 * spread * n.powf(-0.2)
    } else {
        (0.01 * mean.abs()).max(0.01)
    };
    T::lit(h)
}

/// Linear-interpolation sample quantile (R type 7).
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

impl<T: Scalar> PriceDensity<T> for Kde<T> {
    fn pdf(&self, y: T) -> T {
        self.point(y).pdf
    }

    fn cdf(&self, y: T) -> T {
        self.point(y).cdf
    }

    fn sf(&self, y: T) -> T {
        self.point(y).sf
    }

    fn point(&self, y: T) -> DensityPoint<T> {
        if !(y > T::zero()) {
            return DensityPoint {
                pdf: if y == T::zero() { self.pdf_raw(0.0) } else { T::zero() },
                cdf: T::zero(),
                sf: T::one(),
            };
        }
        let (lower, upper, dens) = self.sums(y.as_f64());
        let total = self.total.as_f64();
        let h = self.bandwidth.as_f64();
        DensityPoint {
            pdf: T::lit(dens * INV_SQRT_2PI / (h * total)),
            cdf: T::lit(((lower - self.below.as_f64()) / total).clamp(0.0, 1.0)),
            sf: T::lit((upper / total).clamp(0.0, 1.0)),
        }
    }

    fn effective_low(&self) -> T {
        (self.centers[0] - T::lit(9.0) * self.bandwidth).max(T::zero())
    }

    fn length_scale(&self) -> T {
        self.bandwidth
    }

    fn upper_hint(&self) -> T {
        *self.centers.last().unwrap() + T::lit(9.0) * self.bandwidth
    }

    /// Panel edges at every kernel center inside the range, with gaps split
    /// to at most one bandwidth.
    fn breakpoints(&self, lo: T, hi: T) -> Vec<T> {
        if !(hi > lo) {
            return vec![lo, hi];
        }
        let mut knots = vec![lo];
        knots.extend(self.centers.iter().copied().filter(|&c| c > lo && c < hi));
        knots.push(hi);
        knots.dedup();
        let width = self
            .bandwidth
            .max((hi - lo) / T::lit(MAX_PANELS as f64));
        let mut out = Vec::with_capacity(knots.len() * 2);
        out.push(lo);
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let pieces = ((b - a) / width).ceil().as_f64().max(1.0) as usize;
            let step = (b - a) / T::lit(pieces as f64);
            for i in 1..pieces {
                out.push(a + step * T::lit(i as f64));
            }
            out.push(b);
        }
        out
    }
}

impl<T: Scalar> Kde<T> {
    fn pdf_raw(&self, y: f64) -> T {
        let (_, _, dens) = self.sums(y);
        T::lit(dens * INV_SQRT_2PI / (self.bandwidth.as_f64() * self.total.as_f64()))
    }
}

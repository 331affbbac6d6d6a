//! Maximum-likelihood fits of seven parametric families with BIC selection.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::marker::PhantomData;

use serde::{Deserialize, Serialize};

use super::special::{digamma, gamma_lr, gamma_ur, ln_gamma, norm_cdf, trigamma, LN_SQRT_2PI};
use super::{Density, PriceDensity};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_ITER: usize = 200;
const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Normal,
    Lognormal,
    Exponential,
    Gamma,
    Weibull,
    Logistic,
    Gumbel,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Normal,
        Family::Lognormal,
        Family::Exponential,
        Family::Gamma,
        Family::Weibull,
        Family::Logistic,
        Family::Gumbel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Lognormal => "lognormal",
            Family::Exponential => "exponential",
            Family::Gamma => "gamma",
            Family::Weibull => "weibull",
            Family::Logistic => "logistic",
            Family::Gumbel => "gumbel",
        }
    }

    pub fn parameter_count(self) -> usize {
        match self {
            Family::Exponential => 1,
            _ => 2,
        }
    }

    /// Whether the untruncated family puts mass below zero.
    fn whole_line(self) -> bool {
        matches!(self, Family::Normal | Family::Logistic | Family::Gumbel)
    }

    fn ln_pdf(self, p: [f64; 2], x: f64) -> f64 {
        let [a, b] = p;
        match self {
            Family::Normal => {
                let z = (x - a) / b;
                -0.5 * z * z - b.ln() - LN_SQRT_2PI
            }
            Family::Lognormal => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let z = (x.ln() - a) / b;
                -0.5 * z * z - b.ln() - x.ln() - LN_SQRT_2PI
            }
            Family::Exponential => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                a.ln() - a * x
            }
            Family::Gamma => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                (a - 1.0) * x.ln() - x / b - ln_gamma(a) - a * b.ln()
            }
            Family::Weibull => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let r = x / b;
                a.ln() - b.ln() + (a - 1.0) * r.ln() - r.powf(a)
            }
            Family::Logistic => {
                let z = ((x - a) / b).abs();
                -z - b.ln() - 2.0 * (-z).exp().ln_1p()
            }
            Family::Gumbel => {
                let z = (x - a) / b;
                -b.ln() - z - (-z).exp()
            }
        }
    }

    /// Untruncated (cdf, sf).
    fn cdf_sf(self, p: [f64; 2], x: f64) -> (f64, f64) {
        let [a, b] = p;
        match self {
            Family::Normal => {
                let z = (x - a) / b;
                (norm_cdf(z), norm_cdf(-z))
            }
            Family::Lognormal => {
                if x <= 0.0 {
                    return (0.0, 1.0);
                }
                let z = (x.ln() - a) / b;
                (norm_cdf(z), norm_cdf(-z))
            }
            Family::Exponential => {
                if x <= 0.0 {
                    return (0.0, 1.0);
                }
                (-(-a * x).exp_m1(), (-a * x).exp())
            }
            Family::Gamma => {
                if x <= 0.0 {
                    return (0.0, 1.0);
                }
                (gamma_lr(a, x / b), gamma_ur(a, x / b))
            }
            Family::Weibull => {
                if x <= 0.0 {
                    return (0.0, 1.0);
                }
                let t = (x / b).powf(a);
                (-(-t).exp_m1(), (-t).exp())
            }
            Family::Logistic => {
                let z = (x - a) / b;
                (1.0 / (1.0 + (-z).exp()), 1.0 / (1.0 + z.exp()))
            }
            Family::Gumbel => {
                let e = (-(x - a) / b).exp();
                ((-e).exp(), -(-e).exp_m1())
            }
        }
    }

    /// Maximum-likelihood parameters, or the reason the family cannot be fit.
    fn mle(self, xs: &[f64]) -> std::result::Result<[f64; 2], String> {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let positive_only = matches!(self, Family::Lognormal | Family::Gamma | Family::Weibull);
        if positive_only && min <= 0.0 {
            return Err(format!("support excludes observed value {min}"));
        }
        if self == Family::Exponential && min < 0.0 {
            return Err(format!("support excludes observed value {min}"));
        }
        if self != Family::Exponential && !(var > 0.0) {
            return Err("zero variance".into());
        }
        match self {
            Family::Normal => Ok([mean, var.sqrt()]),
            Family::Lognormal => {
                let logs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
                let m = logs.iter().sum::<f64>() / n;
                let v = logs.iter().map(|l| (l - m).powi(2)).sum::<f64>() / n;
                if !(v > 0.0) {
                    return Err("zero variance".into());
                }
                Ok([m, v.sqrt()])
            }
            Family::Exponential => {
                if !(mean > 0.0) {
                    return Err("zero mean".into());
                }
                Ok([1.0 / mean, 0.0])
            }
            Family::Gamma => fit_gamma(xs, mean),
            Family::Weibull => fit_weibull(xs),
            Family::Logistic => fit_logistic(xs, mean, var.sqrt()),
            Family::Gumbel => fit_gumbel(xs, mean, var.sqrt()),
        }
    }
}

/// Newton iteration on `ln k - ψ(k) = ln(mean) - mean(ln x)`, started from
/// Minka's approximation.
fn fit_gamma(xs: &[f64], mean: f64) -> std::result::Result<[f64; 2], String> {
    let n = xs.len() as f64;
    let s = mean.ln() - xs.iter().map(|x| x.ln()).sum::<f64>() / n;
    if !(s > 0.0) {
        return Err("zero variance".into());
    }
    let mut k = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
    for _ in 0..MAX_ITER {
        let g = k.ln() - digamma(k) - s;
        let dg = 1.0 / k - trigamma(k);
        let mut next = k - g / dg;
        if !(next > 0.0) || !next.is_finite() {
            next = k / 2.0;
        }
        let done = ((next - k) / k).abs() < TOL;
        k = next;
        if done {
            return Ok([k, mean / k]);
        }
    }
    Err("gamma shape did not converge".into())
}

/// Bisection in `ln k` on the Weibull profile score, with data scaled by the
/// maximum to keep `x^k` finite.
fn fit_weibull(xs: &[f64]) -> std::result::Result<[f64; 2], String> {
    let n = xs.len() as f64;
    let max = xs.iter().copied().fold(0.0, f64::max);
    let logs: Vec<f64> = xs.iter().map(|x| (x / max).ln()).collect();
    let mean_log = logs.iter().sum::<f64>() / n;
    let score = |k: f64| {
        let (mut num, mut den) = (0.0, 0.0);
        for &l in &logs {
            let w = (k * l).exp();
            num += w * l;
            den += w;
        }
        num / den - 1.0 / k - mean_log
    };
    let (mut lo, mut hi) = (1e-3f64.ln(), 1e5f64.ln());
    if score(lo.exp()) > 0.0 || score(hi.exp()) < 0.0 {
        return Err("weibull shape outside [1e-3, 1e5]".into());
    }
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if score(mid.exp()) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < TOL {
            break;
        }
    }
    let k = (0.5 * (lo + hi)).exp();
    let mean_pow = logs.iter().map(|l| (k * l).exp()).sum::<f64>() / n;
    Ok([k, max * mean_pow.powf(1.0 / k)])
}

/// Alternating one-dimensional solves of the two logistic score equations.
fn fit_logistic(xs: &[f64], mean: f64, sd: f64) -> std::result::Result<[f64; 2], String> {
    let n = xs.len() as f64;
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut mu = mean;
    let mut s = sd * 3f64.sqrt() / PI;
    for _ in 0..MAX_ITER {
        // Σ tanh((x-μ)/2s) = 0, decreasing in μ
        let loc_score = |m: f64| xs.iter().map(|x| ((x - m) / (2.0 * s)).tanh()).sum::<f64>();
        let new_mu = bisect(loc_score, min, max, true);
        // Σ z·tanh(z/2) = n with z = (x-μ)/s, decreasing in s
        let scale_score =
            |sc: f64| xs.iter().map(|x| {
                let z = (x - new_mu) / sc;
                z * (z / 2.0).tanh()
            }).sum::<f64>() - n;
        let new_s = bisect(scale_score, sd * 1e-4, sd * 10.0, true);
        let done = (new_mu - mu).abs() < TOL * sd && (new_s - s).abs() < TOL * sd;
        mu = new_mu;
        s = new_s;
        if done {
            return Ok([mu, s]);
        }
    }
    Err("logistic fit did not converge".into())
}

/// Root of the Gumbel scale equation `β = mean - Σx e^{-x/β} / Σe^{-x/β}`.
fn fit_gumbel(xs: &[f64], mean: f64, sd: f64) -> std::result::Result<[f64; 2], String> {
    let n = xs.len() as f64;
    let centered: Vec<f64> = xs.iter().map(|x| x - mean).collect();
    let cmin = centered.iter().copied().fold(f64::INFINITY, f64::min);
    let weighted_mean = |beta: f64| {
        let (mut num, mut den) = (0.0, 0.0);
        for &c in &centered {
            let w = (-(c - cmin) / beta).exp();
            num += c * w;
            den += w;
        }
        num / den
    };
    let beta = bisect(|b| b + weighted_mean(b), sd * 1e-4, sd * 10.0, false);
    // μ = -β ln(mean e^{-x/β}), via log-sum-exp around cmin
    let lse = centered.iter().map(|c| (-(c - cmin) / beta).exp()).sum::<f64>().ln() - cmin / beta;
    let mu = mean - beta * (lse - n.ln());
    if !(beta.is_finite() && mu.is_finite()) {
        return Err("gumbel fit did not converge".into());
    }
    Ok([mu, beta])
}

/// Root of a monotone function on `[lo, hi]`; `decreasing` gives its direction.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, decreasing: bool) -> f64 {
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if (v > 0.0) == decreasing {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() <= TOL * hi.abs().max(1.0) * 1e-3 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// A fitted family, truncated at zero when it lives on the whole line.
#[derive(Debug, Clone)]
pub struct Parametric<T> {
    family: Family,
    params: [f64; 2],
    /// Untruncated mass below zero.
    mass_below: f64,
    sample_size: usize,
    _scalar: PhantomData<T>,
}

impl<T: Scalar> Parametric<T> {
    pub fn new(family: Family, params: [f64; 2], sample_size: usize) -> Result<Self> {
        let valid = match family {
            Family::Normal | Family::Logistic | Family::Gumbel | Family::Lognormal => {
                params[0].is_finite() && params[1] > 0.0 && params[1].is_finite()
            }
            Family::Exponential => params[0] > 0.0 && params[0].is_finite(),
            Family::Gamma | Family::Weibull => {
                params.iter().all(|p| *p > 0.0 && p.is_finite())
            }
        };
        if !valid {
            return Err(Error::validation(format!(
                "invalid {} parameters {params:?}",
                family.name()
            )));
        }
        let mass_below = if family.whole_line() {
            family.cdf_sf(params, 0.0).0
        } else {
            0.0
        };
        if !(mass_below < 1.0) {
            return Err(Error::Fit(format!("{} has no mass above zero", family.name())));
        }
        Ok(Parametric {
            family,
            params,
            mass_below,
            sample_size,
            _scalar: PhantomData,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Family parameters: normal/lognormal (μ, σ), exponential (rate),
    /// gamma (shape, scale), weibull (shape, scale), logistic (μ, s),
    /// gumbel (μ, β).
    pub fn parameters(&self) -> &[f64] {
        &self.params[..self.family.parameter_count()]
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    fn norm(&self) -> f64 {
        1.0 - self.mass_below
    }
}

impl<T: Scalar> PriceDensity<T> for Parametric<T> {
    fn pdf(&self, y: T) -> T {
        let y = y.as_f64();
        if y < 0.0 {
            return T::zero();
        }
        let v = self.family.ln_pdf(self.params, y).exp() / self.norm();
        T::lit(if v.is_finite() { v } else { 0.0 })
    }

    fn cdf(&self, y: T) -> T {
        let y = y.as_f64();
        if y <= 0.0 {
            return T::zero();
        }
        let (c, _) = self.family.cdf_sf(self.params, y);
        T::lit(((c - self.mass_below) / self.norm()).clamp(0.0, 1.0))
    }

    fn sf(&self, y: T) -> T {
        let y = y.as_f64();
        if y <= 0.0 {
            return T::one();
        }
        let (_, s) = self.family.cdf_sf(self.params, y);
        T::lit((s / self.norm()).clamp(0.0, 1.0))
    }

    fn effective_low(&self) -> T {
        let [a, b] = self.params;
        let lo = match self.family {
            Family::Normal => a - 9.0 * b,
            Family::Lognormal => (a - 9.0 * b).exp(),
            Family::Exponential => 0.0,
            Family::Gamma if a > 50.0 => b * (a - 12.0 * a.sqrt()),
            Family::Gamma => 0.0,
            Family::Weibull => b * (-44.0 / a).exp(),
            Family::Logistic => a - 44.0 * b,
            Family::Gumbel => a - 3.8 * b,
        };
        T::lit(lo.max(0.0))
    }

    fn length_scale(&self) -> T {
        let [a, b] = self.params;
        let s = match self.family {
            Family::Normal | Family::Logistic | Family::Gumbel => b,
            Family::Lognormal => (a - b).exp() * b.min(1.0),
            Family::Exponential => 1.0 / a,
            Family::Gamma => b * a.sqrt().min(a.max(1e-3)),
            Family::Weibull => b * (1.3 / a).min(1.0),
        };
        T::lit(s)
    }

    fn upper_hint(&self) -> T {
        let [a, b] = self.params;
        let hi = match self.family {
            Family::Normal => a + 10.0 * b,
            Family::Lognormal => (a + 8.0 * b).exp(),
            Family::Exponential => 40.0 / a,
            Family::Gamma => b * (a + 10.0 * a.sqrt() + 10.0),
            Family::Weibull => b * 40f64.powf(1.0 / a),
            Family::Logistic => a + 45.0 * b,
            Family::Gumbel => a + 45.0 * b,
        };
        T::lit(hi.max(self.length_scale().as_f64()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyFit {
    pub family: Family,
    pub parameters: Vec<f64>,
    pub log_likelihood: f64,
    pub bic: f64,
}

/// Outcome of [`fit_parametric`]: fits sorted by BIC, best first.
#[derive(Debug, Clone)]
pub struct FitReport<T: Scalar> {
    pub chosen: Density<T>,
    pub fits: Vec<FamilyFit>,
    /// Families that could not be fit, with the reason.
    pub skipped: Vec<(Family, String)>,
}

impl<T: Scalar> FitReport<T> {
    pub fn chosen_family(&self) -> Family {
        self.fits[0].family
    }

    pub fn per_family_bic(&self) -> BTreeMap<Family, f64> {
        self.fits.iter().map(|f| (f.family, f.bic)).collect()
    }

    pub fn log_likelihoods(&self) -> BTreeMap<Family, f64> {
        self.fits.iter().map(|f| (f.family, f.log_likelihood)).collect()
    }
}

/// Fits each family by maximum likelihood and keeps the lowest
/// `BIC = p·ln(n) − 2·ln(L̂)`. Ties go to the earlier family in
/// [`Family::ALL`]. The likelihood is that of the untruncated family.
pub fn fit_parametric<T: Scalar>(samples: &[T], families: &[Family]) -> Result<FitReport<T>> {
    if samples.len() < 2 {
        return Err(Error::validation("parametric fit needs at least 2 samples"));
    }
    if families.is_empty() {
        return Err(Error::validation("no families to fit"));
    }
    let xs: Vec<f64> = samples.iter().map(|x| x.as_f64()).collect();
    if let Some(x) = xs.iter().find(|x| !x.is_finite()) {
        return Err(Error::validation(format!("non-finite sample {x}")));
    }
    let n = xs.len() as f64;
    let mut wanted = families.to_vec();
    wanted.sort();
    wanted.dedup();

    let mut fits = Vec::new();
    let mut skipped = Vec::new();
    for family in wanted {
        match family.mle(&xs) {
            Ok(params) => {
                let ll: f64 = xs.iter().map(|&x| family.ln_pdf(params, x)).sum();
                if !ll.is_finite() {
                    skipped.push((family, "non-finite likelihood".to_string()));
                    continue;
                }
                let p = family.parameter_count();
                fits.push(FamilyFit {
                    family,
                    parameters: params[..p].to_vec(),
                    log_likelihood: ll,
                    bic: p as f64 * n.ln() - 2.0 * ll,
                });
            }
            Err(reason) => skipped.push((family, reason)),
        }
    }
    if fits.is_empty() {
        let reasons: Vec<String> = skipped
            .iter()
            .map(|(f, r)| format!("{}: {r}", f.name()))
            .collect();
        return Err(Error::Fit(format!("every family was skipped ({})", reasons.join("; "))));
    }
    fits.sort_by(|a, b| a.bic.total_cmp(&b.bic).then(a.family.cmp(&b.family)));
    let best = &fits[0];
    let mut params = [0.0; 2];
    params[..best.parameters.len()].copy_from_slice(&best.parameters);
    let chosen = Density::Parametric(Parametric::new(best.family, params, xs.len())?);
    Ok(FitReport {
        chosen,
        fits,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn draws(family: Family, params: [f64; 2], n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.random_range(1e-12..1.0);
                let [a, b] = params;
                match family {
                    Family::Exponential => -(1.0 - u).ln() / a,
                    Family::Gumbel => a - b * (-u.ln()).ln(),
                    Family::Normal => {
                        let v: f64 = rng.random_range(1e-12..1.0);
                        a + b * (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
                    }
                    Family::Weibull => b * (-(1.0 - u).ln()).powf(1.0 / a),
                    Family::Logistic => a + b * (u / (1.0 - u)).ln(),
                    _ => unreachable!(),
                }
            })
            .collect()
    }

    #[test]
    fn normal_mle_is_sample_moments() {
        let xs = [1.0f64, 2.0, 3.0, 6.0];
        let r = fit_parametric(&xs, &[Family::Normal]).unwrap();
        let p = &r.fits[0].parameters;
        assert!((p[0] - 3.0).abs() < 1e-12);
        assert!((p[1] - 3.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.chosen_family(), Family::Normal);
    }

    #[test]
    fn degenerate_sample_is_an_error() {
        let err = fit_parametric(&[5.0f64, 5.0], &[Family::Normal]).unwrap_err();
        assert!(matches!(err, Error::Fit(_)), "{err}");
    }

    #[test]
    fn lognormal_skips_zero_but_others_fit() {
        let r = fit_parametric(&[0.0f64, 1.0, 2.5], &[Family::Lognormal, Family::Normal]).unwrap();
        assert_eq!(r.chosen_family(), Family::Normal);
        assert_eq!(r.skipped.len(), 1);
        assert_eq!(r.skipped[0].0, Family::Lognormal);
    }

    #[test]
    fn recovers_parameters() {
        let xs = draws(Family::Weibull, [2.5, 10.0], 4000, 1);
        let r = fit_parametric(&xs, &[Family::Weibull]).unwrap();
        assert!((r.fits[0].parameters[0] - 2.5).abs() < 0.15, "{:?}", r.fits[0]);
        assert!((r.fits[0].parameters[1] - 10.0).abs() < 0.3);

        let xs = draws(Family::Gumbel, [100.0, 7.0], 4000, 2);
        let r = fit_parametric(&xs, &[Family::Gumbel]).unwrap();
        assert!((r.fits[0].parameters[0] - 100.0).abs() < 0.5, "{:?}", r.fits[0]);
        assert!((r.fits[0].parameters[1] - 7.0).abs() < 0.3);

        let xs = draws(Family::Logistic, [50.0, 3.0], 4000, 3);
        let r = fit_parametric(&xs, &[Family::Logistic]).unwrap();
        assert!((r.fits[0].parameters[0] - 50.0).abs() < 0.3, "{:?}", r.fits[0]);
        assert!((r.fits[0].parameters[1] - 3.0).abs() < 0.15);
    }

    #[test]
    fn gamma_mle_satisfies_score_equation() {
        let xs = draws(Family::Exponential, [0.5, 0.0], 2000, 4);
        let r = fit_parametric(&xs, &[Family::Gamma]).unwrap();
        let k = r.fits[0].parameters[0];
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let s = mean.ln() - xs.iter().map(|x| x.ln()).sum::<f64>() / n;
        assert!((k.ln() - digamma(k) - s).abs() < 1e-9);
        assert!((k - 1.0).abs() < 0.1, "{k}");
    }

    #[test]
    fn truncated_normal_cdf_starts_at_zero() {
        let p = Parametric::<f64>::new(Family::Normal, [1.0, 2.0], 10).unwrap();
        assert_eq!(p.cdf(0.0), 0.0);
        assert!(p.pdf(0.0) > 0.0);
        assert!((p.cdf(1e3) - 1.0).abs() < 1e-12);
        for y in [0.5, 1.0, 3.0] {
            assert!((p.cdf(y) + p.sf(y) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bic_prefers_generating_family() {
        let xs = draws(Family::Exponential, [0.01, 0.0], 500, 9);
        let r = fit_parametric(&xs, &[Family::Normal, Family::Exponential]).unwrap();
        assert_eq!(r.chosen_family(), Family::Exponential);
        assert!(r.per_family_bic()[&Family::Exponential] < r.per_family_bic()[&Family::Normal]);
    }
}

//! Summary statistics and the paired sign test used to compare methods.

use serde::Serialize;

use crate::distribution::special::ln_gamma;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean; 0 for fewer than two samples.
pub fn std_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (var / xs.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignTest {
    /// Pairs where the first sample is smaller.
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    /// `P(X >= wins)` for `X ~ Binomial(wins + losses, 1/2)`.
    pub p_value: f64,
}

impl SignTest {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// One-sided exact sign test of "`a` tends to be smaller than `b`".
///
/// Ties are dropped. A sample of length one is paired with every element of
/// the other (a deterministic method compared against a random one).
pub fn sign_test_less(a: &[f64], b: &[f64]) -> SignTest {
    let m = a.len().max(b.len());
    let at = |xs: &[f64], i: usize| if xs.len() == 1 { xs[0] } else { xs[i] };
    assert!(
        a.len() == b.len() || a.len() == 1 || b.len() == 1,
        "sample lengths {} and {} cannot be paired",
        a.len(),
        b.len()
    );
    let (mut wins, mut losses, mut ties) = (0, 0, 0);
    for i in 0..m {
        let (x, y) = (at(a, i), at(b, i));
        if x < y {
            wins += 1;
        } else if x > y {
            losses += 1;
        } else {
            ties += 1;
        }
    }
    SignTest {
        wins,
        losses,
        ties,
        p_value: binomial_upper_tail(wins + losses, wins),
    }
}

/// `P(X >= k)` for `X ~ Binomial(n, 1/2)`.
fn binomial_upper_tail(n: usize, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let nf = n as f64;
    let ln_half_n = -nf * std::f64::consts::LN_2;
    let p: f64 = (k..=n)
        .map(|i| {
            let i = i as f64;
            (ln_gamma(nf + 1.0) - ln_gamma(i + 1.0) - ln_gamma(nf - i + 1.0) + ln_half_n).exp()
        })
        .sum();
    p.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_tail_reference() {
        assert!((binomial_upper_tail(10, 10) - 1.0 / 1024.0).abs() < 1e-15);
        assert!((binomial_upper_tail(10, 8) - 56.0 / 1024.0).abs() < 1e-13);
        assert_eq!(binomial_upper_tail(0, 0), 1.0);
        assert!((binomial_upper_tail(4, 2) - 11.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn sign_test_counts_and_broadcasts() {
        let t = sign_test_less(&[1.0, 2.0, 3.0, 4.0], &[2.0, 2.0, 4.0, 5.0]);
        assert_eq!((t.wins, t.losses, t.ties), (3, 0, 1));
        assert!((t.p_value - 0.125).abs() < 1e-14);
        let t = sign_test_less(&[1.0], &[2.0; 10]);
        assert_eq!(t.wins, 10);
        assert!(t.significant(0.05));
    }

    #[test]
    fn summary_stats() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert!((std_error(&[1.0, 2.0, 3.0]) - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(std_error(&[5.0]), 0.0);
    }
}

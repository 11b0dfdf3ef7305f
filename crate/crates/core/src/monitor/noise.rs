//! Additive Poisson dark counts of the PNR detector.
//!
//! The photoelectron distribution is `F = N * P₅` with `N(y) = e^{−λ}λʸ/y!`.
//! The convolution matrix is lower-triangular Toeplitz, and its inverse has
//! first column `e^{λ}(−λ)^d/d!`, so `P₅(m) = e^{λ} Σ_d (−λ)^d/d! · F(m−d)`.

use super::sampling::IntervalProbability;
use crate::error::{Error, Result};
use crate::pnd::PhotonNumberDistribution;

/// Extra noise terms summed past the truncation when computing tail mass.
const NOISE_TAIL_TERMS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundDirection {
    Lower,
    Upper,
}

fn poisson_pmf(lambda: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut term = (-lambda).exp();
    out.push(term);
    for y in 1..len {
        term *= lambda / y as f64;
        out.push(term);
    }
    out
}

/// Photoelectron distribution of a PNR detector with Poisson dark counts of mean `lambda`.
pub fn convolve_poisson_noise(
    pnd: &PhotonNumberDistribution,
    lambda: f64,
) -> Result<PhotonNumberDistribution> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::domain("lambda", lambda, "[0, ∞)"));
    }
    let n_max = pnd.n_max();
    let noise = poisson_pmf(lambda, n_max + 1 + NOISE_TAIL_TERMS);
    // noise_above[k] = P(Y > k)
    let mut noise_above = vec![0.0; noise.len()];
    let mut acc = 0.0;
    for k in (0..noise.len()).rev() {
        noise_above[k] = acc;
        acc += noise[k];
    }

    let probs = pnd.probs();
    let mut f = vec![0.0; n_max + 1];
    let mut spill = 0.0;
    for (d, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for m in d..=n_max {
            f[m] += noise[m - d] * p;
        }
        spill += p * noise_above[n_max - d];
    }
    PhotonNumberDistribution::new(f, pnd.tail_mass() + spill)
}

fn inverse_coefficients(lambda: f64, len: usize) -> Vec<f64> {
    let scale = lambda.exp();
    let mut out = Vec::with_capacity(len);
    let mut term = 1.0;
    out.push(scale);
    for d in 1..len {
        term *= -lambda / d as f64;
        out.push(scale * term);
    }
    out
}

/// Bound on `P₅(m)` from interval knowledge of `F(0..=m)`.
///
/// Each `F(m−d)` enters with coefficient `e^{λ}(−λ)^d/d!`; the lower bound takes
/// `F.lo` for positive coefficients and `F.hi` for negative ones, the upper
/// bound the reverse. The result is clamped to `[0, 1]`.
pub fn deconvolve_noise_bound(
    f_intervals: &[IntervalProbability],
    lambda: f64,
    m: usize,
    direction: BoundDirection,
) -> Result<f64> {
    if f_intervals.len() <= m {
        return Err(Error::Coverage {
            needed: m,
            available: f_intervals.len(),
        });
    }
    if !(lambda >= 0.0) {
        return Err(Error::domain("lambda", lambda, "[0, ∞)"));
    }
    let coeffs = inverse_coefficients(lambda, m + 1);
    let value: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(d, &c)| {
            let f = &f_intervals[m - d];
            let take_lo = (c >= 0.0) == (direction == BoundDirection::Lower);
            c * if take_lo { f.lo } else { f.hi }
        })
        .sum();
    Ok(value.clamp(0.0, 1.0))
}

/// Exact inverse of the noise convolution on point values, clamped to `[0, 1]`.
pub fn deconvolve_point(f: &[f64], lambda: f64, m: usize) -> Result<f64> {
    if f.len() <= m {
        return Err(Error::Coverage {
            needed: m,
            available: f.len(),
        });
    }
    let coeffs = inverse_coefficients(lambda, m + 1);
    let value: f64 = coeffs.iter().enumerate().map(|(d, &c)| c * f[m - d]).sum();
    Ok(value.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pnd::DEFAULT_N_MAX;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn intervals(f: &[f64], eps: f64) -> Vec<IntervalProbability> {
        f.iter()
            .map(|&p| IntervalProbability::new(p - eps, p + eps))
            .collect()
    }

    #[test]
    fn zero_noise_is_identity() {
        let p = PhotonNumberDistribution::poisson(0.8, DEFAULT_N_MAX).unwrap();
        let f = convolve_poisson_noise(&p, 0.0).unwrap();
        assert_eq!(f.probs(), p.probs());
        let iv = intervals(p.probs(), 1e-3);
        assert_eq!(
            deconvolve_noise_bound(&iv, 0.0, 2, BoundDirection::Lower).unwrap(),
            iv[2].lo
        );
        assert_eq!(
            deconvolve_noise_bound(&iv, 0.0, 2, BoundDirection::Upper).unwrap(),
            iv[2].hi
        );
    }

    #[test]
    fn pure_noise() {
        let f =
            convolve_poisson_noise(&PhotonNumberDistribution::vacuum(DEFAULT_N_MAX), 1.0).unwrap();
        let mut fact = 1.0;
        for m in 0..10 {
            if m > 0 {
                fact *= m as f64;
            }
            assert_abs_diff_eq!(f.get(m), (-1.0f64).exp() / fact, epsilon = 1e-15);
        }
    }

    #[test]
    fn convolution_conserves_mass() {
        let p = PhotonNumberDistribution::poisson(3.0, DEFAULT_N_MAX).unwrap();
        let f = convolve_poisson_noise(&p, 2.0).unwrap();
        let total: f64 = f.probs().iter().sum::<f64>() + f.tail_mass();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn first_order_matches_hand_expansion() {
        // a'_1 lower = e^λ(F1.lo) − λe^λ(F0.hi)
        let iv = vec![
            IntervalProbability::new(0.6, 0.62),
            IntervalProbability::new(0.3, 0.31),
        ];
        let lambda: f64 = 0.2;
        let expect = lambda.exp() * 0.3 - lambda * lambda.exp() * 0.62;
        assert_abs_diff_eq!(
            deconvolve_noise_bound(&iv, lambda, 1, BoundDirection::Lower).unwrap(),
            expect,
            epsilon = 1e-15
        );
        let upper = lambda.exp() * 0.31 - lambda * lambda.exp() * 0.6;
        assert_abs_diff_eq!(
            deconvolve_noise_bound(&iv, lambda, 1, BoundDirection::Upper).unwrap(),
            upper,
            epsilon = 1e-15
        );
    }

    #[test]
    fn third_order_uses_cubic_coefficient() {
        let iv = intervals(&[0.4, 0.3, 0.2, 0.1], 0.0);
        let l: f64 = 0.7;
        let expect = l.exp() * (0.1 - l * 0.2 + l * l / 2.0 * 0.3 - l * l * l / 6.0 * 0.4);
        assert_abs_diff_eq!(
            deconvolve_noise_bound(&iv, l, 3, BoundDirection::Lower).unwrap(),
            expect.max(0.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn coverage_error() {
        let iv = intervals(&[0.5, 0.5], 0.0);
        assert!(matches!(
            deconvolve_noise_bound(&iv, 0.5, 3, BoundDirection::Lower),
            Err(Error::Coverage { needed: 3, .. })
        ));
    }

    #[test]
    fn round_trip_recovers_distribution() {
        let p = PhotonNumberDistribution::poisson(1.3, DEFAULT_N_MAX).unwrap();
        let f = convolve_poisson_noise(&p, 0.5).unwrap();
        let iv = intervals(f.probs(), 0.0);
        for m in 0..=5 {
            let lo = deconvolve_noise_bound(&iv, 0.5, m, BoundDirection::Lower).unwrap();
            let hi = deconvolve_noise_bound(&iv, 0.5, m, BoundDirection::Upper).unwrap();
            assert_abs_diff_eq!(lo, p.get(m), epsilon = 1e-10);
            assert_abs_diff_eq!(hi, p.get(m), epsilon = 1e-10);
            assert_abs_diff_eq!(
                deconvolve_point(f.probs(), 0.5, m).unwrap(),
                p.get(m),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn interval_soundness_random_distributions() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let raw: Vec<f64> = (0..12).map(|_| rng.random::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            let mut probs = raw.iter().map(|x| x / total).collect::<Vec<_>>();
            probs.resize(DEFAULT_N_MAX + 1, 0.0);
            let tail = 1.0 - probs.iter().sum::<f64>();
            let p = PhotonNumberDistribution::new(probs, tail.max(0.0)).unwrap();
            for lambda in [0.1, 0.5, 1.0] {
                let f = convolve_poisson_noise(&p, lambda).unwrap();
                let iv = intervals(f.probs(), 1e-4);
                for m in 0..=5 {
                    let lo = deconvolve_noise_bound(&iv, lambda, m, BoundDirection::Lower).unwrap();
                    let hi = deconvolve_noise_bound(&iv, lambda, m, BoundDirection::Upper).unwrap();
                    assert!(lo <= p.get(m) + 1e-15 && p.get(m) <= hi + 1e-15);
                }
            }
        }
    }
}

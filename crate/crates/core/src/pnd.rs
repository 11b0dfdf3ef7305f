//! Truncated photon-number distributions.

use crate::error::{Error, Result};

/// Truncation order used for every series in the crate.
pub const DEFAULT_N_MAX: usize = 50;

/// `Σ probs + tail_mass` must equal 1 within this tolerance.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Tolerance for distributions read from text, which are renormalised after the check.
pub const FILE_NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Probability vector over photon number `0..=n_max` plus the mass beyond `n_max`.
///
/// Operations never assign tail mass to a specific photon number.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonNumberDistribution {
    probs: Vec<f64>,
    tail_mass: f64,
}

impl PhotonNumberDistribution {
    pub fn new(probs: Vec<f64>, tail_mass: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Scenario("empty photon-number distribution".into()));
        }
        for (n, &p) in probs.iter().enumerate() {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::Scenario(format!(
                    "P({n}) = {p} is not a probability"
                )));
            }
        }
        if !(tail_mass >= 0.0) {
            return Err(Error::domain("tail_mass", tail_mass, "[0, 1]"));
        }
        let total: f64 = probs.iter().sum::<f64>() + tail_mass;
        let deviation = (total - 1.0).abs();
        if deviation > NORMALIZATION_TOLERANCE {
            return Err(Error::Normalization {
                deviation,
                tolerance: NORMALIZATION_TOLERANCE,
            });
        }
        Ok(Self { probs, tail_mass })
    }

    /// Poisson distribution with the given mean, truncated at `n_max`.
    pub fn poisson(mean: f64, n_max: usize) -> Result<Self> {
        if !(mean >= 0.0) || !mean.is_finite() {
            return Err(Error::domain("mean", mean, "[0, ∞)"));
        }
        let mut probs = Vec::with_capacity(n_max + 1);
        let mut term = (-mean).exp();
        probs.push(term);
        for n in 1..=n_max {
            term *= mean / n as f64;
            probs.push(term);
        }
        let head: f64 = probs.iter().sum();
        let tail_mass = if head < 0.5 {
            (1.0 - head).max(0.0)
        } else {
            let mut tail = 0.0;
            let mut n = n_max + 1;
            loop {
                term *= mean / n as f64;
                tail += term;
                if term <= tail * 1e-17 || term < f64::MIN_POSITIVE {
                    break;
                }
                n += 1;
            }
            tail
        };
        Self::new(probs, tail_mass)
    }

    /// All mass at photon number `n`.
    pub fn point_mass(n: usize, n_max: usize) -> Self {
        let mut probs = vec![0.0; n_max.max(n) + 1];
        probs[n] = 1.0;
        Self {
            probs,
            tail_mass: 0.0,
        }
    }

    pub fn vacuum(n_max: usize) -> Self {
        Self::point_mass(0, n_max)
    }

    /// Parses one probability per line, index = photon number.
    ///
    /// Blank lines and `#` comments are skipped. The sum must be 1 within
    /// [`FILE_NORMALIZATION_TOLERANCE`]; the vector is then renormalised.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut probs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let p: f64 = line.parse().map_err(|_| {
                Error::Scenario(format!(
                    "line {}: cannot parse {line:?} as a probability",
                    lineno + 1
                ))
            })?;
            probs.push(p);
        }
        let total: f64 = probs.iter().sum();
        let deviation = (total - 1.0).abs();
        if !(deviation <= FILE_NORMALIZATION_TOLERANCE) {
            return Err(Error::Normalization {
                deviation,
                tolerance: FILE_NORMALIZATION_TOLERANCE,
            });
        }
        let probs = probs.into_iter().map(|p| p / total).collect::<Vec<_>>();
        let tail = (1.0 - probs.iter().sum::<f64>()).max(0.0);
        Self::new(probs, tail)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    /// `P(n)`, zero beyond the truncation.
    pub fn get(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    /// Mean photon number of the truncated part.
    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// Binomial thinning: each photon survives independently with probability `eta`.
    ///
    /// `P'(m) = Σ_{n≥m} P(n)·C(n,m)·ηᵐ·(1−η)ⁿ⁻ᵐ`.
    pub fn binomial_thin(&self, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::domain("eta", eta, "[0, 1]"));
        }
        let n_max = self.n_max();
        let mut keep = vec![1.0; n_max + 1];
        let mut lose = vec![1.0; n_max + 1];
        for k in 1..=n_max {
            keep[k] = keep[k - 1] * eta;
            lose[k] = lose[k - 1] * (1.0 - eta);
        }
        let mut out = vec![0.0; n_max + 1];
        let mut row = vec![1.0_f64; n_max + 1];
        for (n, &p) in self.probs.iter().enumerate() {
            if n > 0 {
                // Pascal row n from row n-1, updated in place right to left.
                row[n] = 1.0;
                for m in (1..n).rev() {
                    row[m] += row[m - 1];
                }
            }
            if p == 0.0 {
                continue;
            }
            for m in 0..=n {
                out[m] += p * row[m] * keep[m] * lose[n - m];
            }
        }
        Ok(Self {
            probs: out,
            tail_mass: self.tail_mass,
        })
    }
}

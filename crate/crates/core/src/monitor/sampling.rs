//! Finite-sample confidence intervals on photoelectron frequencies.

use crate::error::{Error, Result};

/// Closed interval inside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalProbability {
    pub lo: f64,
    pub hi: f64,
}

impl IntervalProbability {
    /// Clamps both ends to `[0, 1]`; swapped ends are reordered.
    pub fn new(lo: f64, hi: f64) -> Self {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        Self {
            lo: lo.clamp(0.0, 1.0),
            hi: hi.clamp(0.0, 1.0),
        }
    }

    pub fn exact(p: f64) -> Self {
        Self::new(p, p)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }
}

/// `[j/M − ε, j/M + ε]` clamped to `[0, 1]`.
pub fn sampling_interval(count: f64, trials: f64, epsilon: f64) -> Result<IntervalProbability> {
    if !(trials > 0.0) {
        return Err(Error::DegenerateSample("sampling interval"));
    }
    if !(0.0..=trials).contains(&count) {
        return Err(Error::domain("count", count, "[0, trials]"));
    }
    if !(epsilon > 0.0) {
        return Err(Error::domain("epsilon", epsilon, "(0, ∞)"));
    }
    let freq = count / trials;
    Ok(IntervalProbability::new(freq - epsilon, freq + epsilon))
}

/// Failure probability `2·exp(−M·ε²/2)` of one sampling interval.
pub fn sampling_failure(trials: f64, epsilon: f64) -> f64 {
    2.0 * (-trials * epsilon * epsilon / 2.0).exp()
}

/// Half-widths for the signal, decoy-1 and decoy-2 intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epsilons {
    pub signal: f64,
    pub decoy1: f64,
    pub decoy2: f64,
}

impl Epsilons {
    /// `2(J+1)e^{−M_s ε'²/2} + 2(J+1)e^{−M₁ε₁²/2} + 6e^{−M₂ε₂²/2}`.
    pub fn composite_failure(&self, j: usize, m_s: f64, m_1: f64, m_2: f64) -> f64 {
        let k = (j + 1) as f64;
        k * sampling_failure(m_s, self.signal)
            + k * sampling_failure(m_1, self.decoy1)
            + 3.0 * sampling_failure(m_2, self.decoy2)
    }
}

/// Splits the failure budget `1 − target` equally over the three interval families.
pub fn allocate_epsilons(
    target_confidence: f64,
    j: usize,
    m_s: f64,
    m_1: f64,
    m_2: f64,
) -> Result<Epsilons> {
    if !(target_confidence > 0.0 && target_confidence < 1.0) {
        return Err(Error::domain(
            "target confidence",
            target_confidence,
            "(0, 1)",
        ));
    }
    for (name, m) in [("signal", m_s), ("decoy-1", m_1), ("decoy-2", m_2)] {
        if !(m > 0.0) {
            return Err(Error::DegenerateSample(name));
        }
    }
    let budget = (1.0 - target_confidence) / 3.0;
    let count = 2.0 * (j + 1) as f64;
    let eps = |intervals: f64, m: f64| (2.0 * (intervals / budget).ln() / m).sqrt();
    Ok(Epsilons {
        signal: eps(count, m_s),
        decoy1: eps(count, m_1),
        decoy2: eps(6.0, m_2),
    })
}

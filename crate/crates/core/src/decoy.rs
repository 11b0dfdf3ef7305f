//! Lower bounds on the 1- and 2-photon gains of an untrusted source from
//! monitored bounds on its photon-number statistics.
//!
//! Notation: `a'ₙ` are signal-source probabilities, `aₙ` decoy-1, `bₙ`
//! decoy-2. Both gain bounds come from lower-bounding the count sums
//! `D₁`, `D₂` of 1- and 2-photon pulses; the gain bound is the signal-source
//! probability times that yield bound (`Q₁ ≥ a'₁ᴸ·D₁ᴸ/M`, `Q₂ ≥ a'₂ᴸ·D₂ᴸ/M`).

use crate::error::{Error, Result};

/// Denominators smaller than this make a bound inapplicable.
pub const DENOMINATOR_GUARD: f64 = 1e-30;

/// Interval bounds on `{a'ₘ, aₘ, bₙ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceBounds {
    pub a_prime_lo: Vec<f64>,
    pub a_prime_hi: Vec<f64>,
    pub a_lo: Vec<f64>,
    pub a_hi: Vec<f64>,
    pub b_lo: Vec<f64>,
    pub b_hi: Vec<f64>,
    /// Photon-number cutoff `J`.
    pub j_cutoff: usize,
    /// Probability that all intervals hold simultaneously.
    pub confidence: f64,
}

impl SourceBounds {
    /// Validates ordering and coverage (`0..=J` for signal/decoy-1, `0..=2` for decoy-2).
    pub fn new(
        a_prime: (Vec<f64>, Vec<f64>),
        a: (Vec<f64>, Vec<f64>),
        b: (Vec<f64>, Vec<f64>),
        j_cutoff: usize,
        confidence: f64,
    ) -> Result<Self> {
        let bounds = Self {
            a_prime_lo: a_prime.0,
            a_prime_hi: a_prime.1,
            a_lo: a.0,
            a_hi: a.1,
            b_lo: b.0,
            b_hi: b.1,
            j_cutoff,
            confidence,
        };
        let pairs: [(&str, &[f64], &[f64], usize); 3] = [
            (
                "signal",
                &bounds.a_prime_lo,
                &bounds.a_prime_hi,
                j_cutoff + 1,
            ),
            ("decoy-1", &bounds.a_lo, &bounds.a_hi, j_cutoff + 1),
            ("decoy-2", &bounds.b_lo, &bounds.b_hi, 3),
        ];
        for (name, lo, hi, need) in pairs {
            if lo.len() != hi.len() || lo.len() < need {
                return Err(Error::Coverage {
                    needed: need - 1,
                    available: lo.len().min(hi.len()),
                });
            }
            for (n, (&l, &h)) in lo.iter().zip(hi).enumerate() {
                if !(0.0 <= l && l <= h && h <= 1.0) {
                    return Err(Error::Scenario(format!(
                        "{name} bound {n}: [{l}, {h}] is not an interval in [0, 1]"
                    )));
                }
            }
        }
        Ok(bounds)
    }

    /// Zero-width bounds from exact probabilities.
    pub fn exact(a_prime: Vec<f64>, a: Vec<f64>, b: Vec<f64>, j_cutoff: usize) -> Result<Self> {
        Self::new(
            (a_prime.clone(), a_prime),
            (a.clone(), a),
            (b.clone(), b),
            j_cutoff,
            1.0,
        )
    }

    fn ap(&self, k: usize) -> f64 {
        self.a_prime_lo[k]
    }

    fn au(&self, k: usize) -> f64 {
        self.a_hi[k]
    }

    fn highest_index(&self) -> usize {
        self.a_prime_lo.len().min(self.a_hi.len()) - 1
    }
}

/// `a'ᵢᴸ/aᵢᵁ ≥ a'ⱼᴸ/aⱼᵁ` by cross-multiplication; zero denominators fail.
fn ratio_at_least(bounds: &SourceBounds, i: usize, j: usize) -> bool {
    let (ai, aj) = (bounds.au(i), bounds.au(j));
    if ai <= 0.0 || aj <= 0.0 {
        return false;
    }
    bounds.ap(i) * aj >= bounds.ap(j) * ai
}

/// Case-1 condition: `a'ₖᴸ/aₖᵁ ≥ a'₂ᴸ/a₂ᵁ ≥ a'₁ᴸ/a₁ᵁ` for `3 ≤ k ≤ k_max`.
pub fn check_case1(bounds: &SourceBounds, k_max: usize) -> bool {
    if bounds.highest_index() < k_max.max(2) {
        return false;
    }
    ratio_at_least(bounds, 2, 1) && (3..=k_max).all(|k| ratio_at_least(bounds, k, 2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    /// Case-1 ratio chain.
    pub case1_ok: bool,
    /// Case-2 ratio chain through `k = J`, plus the non-negativity of both bound determinants.
    pub case2_ratio_ok: bool,
    /// `c = 1 + [(a₃ᵁa'₁ᴸ − a'₃ᴸa₁ᵁ)/(a'₃ᴸa₂ᵁ − a₃ᵁa'₂ᴸ)]·b₂ᴸ/b₁ᴸ`; NaN when undefined.
    pub c_value: f64,
    pub case2_c_ok: bool,
}

impl ConditionReport {
    pub fn case2_ok(&self) -> bool {
        self.case2_ratio_ok && self.case2_c_ok
    }
}

/// Evaluates both condition chains (`k` up to `chain_max`) and the constant `c`.
pub fn check_conditions(bounds: &SourceBounds, chain_max: usize) -> ConditionReport {
    let case1_ok = check_case1(bounds, chain_max);
    let enough = bounds.highest_index() >= chain_max.max(3);
    let chain = enough
        && ratio_at_least(bounds, 2, 1)
        && ratio_at_least(bounds, 3, 2)
        && (4..=chain_max).all(|k| ratio_at_least(bounds, k, 3));
    let (c_value, dets_ok) = if bounds.highest_index() >= 3 {
        let det32 = bounds.ap(3) * bounds.au(2) - bounds.au(3) * bounds.ap(2);
        let det31 = bounds.ap(3) * bounds.au(1) - bounds.au(3) * bounds.ap(1);
        let b1 = bounds.b_lo[1];
        let c = if det32.abs() < DENOMINATOR_GUARD || b1 <= 0.0 {
            f64::NAN
        } else {
            1.0 + (-det31 / det32) * bounds.b_lo[2] / b1
        };
        (c, det32 >= 0.0 && det31 >= 0.0)
    } else {
        (f64::NAN, false)
    };
    ConditionReport {
        case1_ok,
        case2_ratio_ok: chain && dets_ok,
        c_value,
        case2_c_ok: c_value.is_finite() && c_value > 0.0,
    }
}

/// Case-2 conditions with the ratio chain through `J`.
pub fn check_case2(bounds: &SourceBounds) -> ConditionReport {
    check_conditions(bounds, bounds.j_cutoff.max(3))
}

/// Observed count rates and the source-class configuration that produced them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedRates {
    /// Signal count rate `N_s/(p'M)`.
    pub q_mu: f64,
    /// Decoy-1 count rate `N_d1/(p₁M)`.
    pub q_d1: f64,
    /// Decoy-2 count rate `N_d2/(p₂M)`.
    pub q_d2: f64,
    /// Vacuum-source count rate `N₀/(p₀M)`.
    pub y0_obs: f64,
    pub mu: f64,
    pub v1: f64,
    pub v2: f64,
    pub p_signal: f64,
    pub p_decoy1: f64,
    pub p_decoy2: f64,
    pub p_vacuum: f64,
    /// Total pulses `M` (infinite allowed).
    pub m_total: f64,
}

impl ObservedRates {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("q_mu", self.q_mu),
            ("q_d1", self.q_d1),
            ("q_d2", self.q_d2),
            ("y0_obs", self.y0_obs),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(name, v, "[0, 1]"));
            }
        }
        let total = self.p_signal + self.p_decoy1 + self.p_decoy2 + self.p_vacuum;
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Scenario(format!(
                "class probabilities sum to {total}"
            )));
        }
        Ok(())
    }
}

/// Lower bound on the single-photon gain of the signal source.
///
/// `Q₁ᴸ = a'₁ᴸ·[a'₂ᴸQ_d1 − a₂ᵁQ_μ − (a'₂ᴸa₀ᵁ − a'₀ᴸa₂ᵁ)Y₀] / (a'₂ᴸa₁ᵁ − a'₁ᴸa₂ᵁ)`,
/// clamped at 0.
pub fn q1_lower(bounds: &SourceBounds, rates: &ObservedRates) -> Result<f64> {
    if bounds.highest_index() < 2 {
        return Err(Error::Coverage {
            needed: 2,
            available: bounds.highest_index() + 1,
        });
    }
    let b = bounds;
    let den = b.ap(2) * b.au(1) - b.ap(1) * b.au(2);
    if den < DENOMINATOR_GUARD {
        return Err(Error::Inapplicable("a'2·a1 − a'1·a2 is not positive"));
    }
    let num = b.ap(2) * rates.q_d1
        - b.au(2) * rates.q_mu
        - (b.ap(2) * b.au(0) - b.ap(0) * b.au(2)) * rates.y0_obs;
    Ok((b.ap(1) * num / den).max(0.0))
}

/// Lower bound on the 2-photon gain of the signal source.
///
/// `a'₂ᴸ` times
/// `[a'₃ᴸQ_d1 − a₃ᵁQ_μ − (a'₃ᴸa₀ᵁ − a'₀ᴸa₃ᵁ)Y₀ − (a'₃ᴸa₁ᵁ − a'₁ᴸa₃ᵁ)(Q_d2 − b₀ᴸY₀)/b₁ᴸ] / [c·(a'₃ᴸa₂ᵁ − a'₂ᴸa₃ᵁ)]`,
/// clamped at 0. `c` is taken from `report`.
pub fn q2_lower(
    bounds: &SourceBounds,
    rates: &ObservedRates,
    report: &ConditionReport,
) -> Result<f64> {
    if bounds.highest_index() < 3 {
        return Err(Error::Coverage {
            needed: 3,
            available: bounds.highest_index() + 1,
        });
    }
    let b = bounds;
    let c = report.c_value;
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Inapplicable("c is not positive"));
    }
    let det32 = b.ap(3) * b.au(2) - b.ap(2) * b.au(3);
    if det32 < DENOMINATOR_GUARD {
        return Err(Error::Inapplicable("a'3·a2 − a'2·a3 is not positive"));
    }
    let b1 = b.b_lo[1];
    if b1 <= 0.0 {
        return Err(Error::Inapplicable("b1 lower bound is zero"));
    }
    let det31 = b.ap(3) * b.au(1) - b.ap(1) * b.au(3);
    let num = b.ap(3) * rates.q_d1
        - b.au(3) * rates.q_mu
        - (b.ap(3) * b.au(0) - b.ap(0) * b.au(3)) * rates.y0_obs
        - det31 * (rates.q_d2 - b.b_lo[0] * rates.y0_obs) / b1;
    Ok((b.ap(2) * num / (c * det32)).max(0.0))
}

/// Clopper-Pearson upper bound on the decoy-1 mass above the cutoff when no
/// pulse above it was observed: `1 − (failure/2)^{1/M₁}`.
pub fn clopper_pearson_tail(m_1: f64, failure: f64) -> Result<f64> {
    if !(m_1 >= 1.0) {
        return Err(Error::domain("m_1", m_1, "[1, ∞)"));
    }
    if !(failure > 0.0 && failure < 1.0) {
        return Err(Error::domain("failure", failure, "(0, 1)"));
    }
    Ok(-((failure / 2.0).ln() / m_1).exp_m1())
}

/// `N'_d1 = max(N_d1 − M₁·P_Jᵁ, 0)`.
pub fn tail_adjusted_decoy_count(n_d1: f64, m_1: f64, p_j_u: f64) -> Result<f64> {
    if !(n_d1 >= 0.0 && m_1 >= 0.0 && p_j_u >= 0.0) {
        return Err(Error::Scenario(
            "tail adjustment inputs must be non-negative".into(),
        ));
    }
    Ok((n_d1 - m_1 * p_j_u).max(0.0))
}

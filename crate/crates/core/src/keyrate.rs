//! Case-1 and Case-2 secure key rates from gain lower bounds.

use crate::decoy::ConditionReport;
use crate::error::{Error, Result};
use crate::math::{
    binary_entropy, ec_leakage, golden_section_min, h2max_z1_x1, phase_error_2photon,
};

/// Grid points for the adversarial error split.
pub const SPLIT_GRID_POINTS: usize = 1000;

const SPLIT_REFINE_TOL: f64 = 1e-12;

/// Error count attributable to single- and two-photon pulses.
///
/// `Q_μE_μ` minus the vacuum-pulse errors when credited, never negative.
pub fn attributable_errors(q_mu: f64, e_mu: f64, vacuum_errors: f64) -> f64 {
    (q_mu * e_mu - vacuum_errors.max(0.0)).max(0.0)
}

/// `R = max(0, −Q_μ f H₂(E_μ) + Q₁ᴸ[1 − H₂^max(e₁)])` with `e₁ = min(T/Q₁ᴸ, 1/2)`.
///
/// `vacuum_errors` is subtracted from `T = Q_μE_μ` before attribution; pass 0
/// to charge every error to single-photon pulses.
pub fn keyrate_case1(
    q1_l: f64,
    q_mu: f64,
    e_mu: f64,
    f_ec: f64,
    vacuum_errors: f64,
) -> Result<f64> {
    if !(q1_l >= 0.0) {
        return Err(Error::domain("q1_lower", q1_l, "[0, ∞)"));
    }
    let leak = ec_leakage(q_mu, e_mu, f_ec)?;
    if q1_l == 0.0 {
        return Ok(0.0);
    }
    let e1 = (attributable_errors(q_mu, e_mu, vacuum_errors) / q1_l).min(0.5);
    Ok((q1_l * (1.0 - h2max_z1_x1(e1)?) - leak).max(0.0))
}

/// Privacy-amplification credit `Q₁[1 − H₂^max(e₁)] + Q₂[1 − H₂(e_p2(e₂))]`.
pub fn split_objective(q1_l: f64, q2_l: f64, e1: f64, e2: f64) -> Result<f64> {
    let one = if q1_l > 0.0 {
        q1_l * (1.0 - h2max_z1_x1(e1)?)
    } else {
        0.0
    };
    let two = if q2_l > 0.0 {
        q2_l * (1.0 - binary_entropy(phase_error_2photon(e2)?)?)
    } else {
        0.0
    };
    Ok(one + two)
}

/// The `(e₁, e₂)` on `Q₁e₁ + Q₂e₂ = min(T, Q₁/2 + Q₂/2)` minimising [`split_objective`].
///
/// The objective is not unimodal in `e₁`, so a uniform grid locates the best
/// cell and golden-section search refines inside its neighbours.
pub fn worst_case_error_split(q1_l: f64, q2_l: f64, total_error: f64) -> Result<(f64, f64)> {
    if !(q1_l >= 0.0 && q2_l >= 0.0 && total_error >= 0.0) {
        return Err(Error::Scenario(
            "error split needs non-negative inputs".into(),
        ));
    }
    if q1_l == 0.0 && q2_l == 0.0 {
        return Ok((0.0, 0.0));
    }
    if q2_l == 0.0 {
        return Ok(((total_error / q1_l).min(0.5), 0.0));
    }
    if q1_l == 0.0 {
        return Ok((0.0, (total_error / q2_l).min(0.5)));
    }
    let budget = total_error.min(0.5 * (q1_l + q2_l));
    let lo = ((budget - 0.5 * q2_l) / q1_l).clamp(0.0, 0.5);
    let hi = (budget / q1_l).clamp(lo, 0.5);
    let e2_of = |e1: f64| ((budget - q1_l * e1) / q2_l).clamp(0.0, 0.5);
    let objective = |e1: f64| split_objective(q1_l, q2_l, e1, e2_of(e1)).unwrap_or(f64::INFINITY);
    if hi - lo <= 0.0 {
        return Ok((lo, e2_of(lo)));
    }

    let step = (hi - lo) / (SPLIT_GRID_POINTS - 1) as f64;
    let grid = |i: usize| {
        if i + 1 == SPLIT_GRID_POINTS {
            hi
        } else {
            lo + step * i as f64
        }
    };
    let (best_i, best_v) = (0..SPLIT_GRID_POINTS)
        .map(|i| (i, objective(grid(i))))
        .fold(
            (0, f64::INFINITY),
            |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
        );
    let left = grid(best_i.saturating_sub(1));
    let right = grid((best_i + 1).min(SPLIT_GRID_POINTS - 1));
    let (x, v) = golden_section_min(objective, left, right, SPLIT_REFINE_TOL);
    let e1 = if v < best_v { x } else { grid(best_i) };
    Ok((e1, e2_of(e1)))
}

/// Case-2 rate together with the error split that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Case2Rate {
    pub rate: f64,
    pub e1: f64,
    pub e2: f64,
}

/// `R = max(0, −Q_μ f H₂(E_μ) + Q₁ᴸ[1 − H₂^max(e₁)] + Q₂ᴸ[1 − H₂(e_p2)])`
/// at the adversarial split of `T = Q_μE_μ − vacuum_errors`.
pub fn keyrate_case2(
    q1_l: f64,
    q2_l: f64,
    q_mu: f64,
    e_mu: f64,
    f_ec: f64,
    vacuum_errors: f64,
) -> Result<Case2Rate> {
    if !(q1_l >= 0.0 && q2_l >= 0.0) {
        return Err(Error::Scenario("gain bounds must be non-negative".into()));
    }
    let leak = ec_leakage(q_mu, e_mu, f_ec)?;
    let total = attributable_errors(q_mu, e_mu, vacuum_errors);
    let (e1, e2) = worst_case_error_split(q1_l, q2_l, total)?;
    let credit = split_objective(q1_l, q2_l, e1, e2)?;
    Ok(Case2Rate {
        rate: (credit - leak).max(0.0),
        e1,
        e2,
    })
}

/// Everything known about one `(distance, μ)` point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateReport {
    pub distance_km: f64,
    pub mu: f64,
    pub q_mu: f64,
    pub e_mu: f64,
    pub q1_lower: f64,
    pub q2_lower: f64,
    pub e1_used: f64,
    pub e2_used: f64,
    pub rate_case1: f64,
    pub rate_case2: f64,
    pub rate_trusted_1ph: f64,
    pub rate_trusted_2ph: f64,
    pub conditions: ConditionReport,
    pub confidence: f64,
}

impl KeyRateReport {
    /// Checks rate signs, error ranges and the error-attribution constraint.
    pub fn check(&self) -> Result<()> {
        let rates = [
            self.rate_case1,
            self.rate_case2,
            self.rate_trusted_1ph,
            self.rate_trusted_2ph,
        ];
        if rates.iter().any(|&r| !(r >= 0.0)) {
            return Err(Error::Invalid(format!(
                "negative rate at {} km",
                self.distance_km
            )));
        }
        if !(0.0..=0.5).contains(&self.e1_used) || !(0.0..=0.5).contains(&self.e2_used) {
            return Err(Error::Invalid("error rates outside [0, 1/2]".into()));
        }
        if self.q1_lower * self.e1_used + self.q2_lower * self.e2_used
            > self.q_mu * self.e_mu + 1e-12
        {
            return Err(Error::Invalid(
                "error attribution exceeds observed errors".into(),
            ));
        }
        Ok(())
    }
}

/// Which rate the intensity optimisation maximises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Objective {
    Case1,
    #[default]
    Case2,
}

impl Objective {
    pub fn rate(self, report: &KeyRateReport) -> f64 {
        match self {
            Objective::Case1 => report.rate_case1,
            Objective::Case2 => report.rate_case2,
        }
    }
}

/// Evaluates `eval` at each grid intensity and returns the best `μ` and its
/// report; ties go to the smaller `μ`.
pub fn optimize_intensity<F>(
    mu_grid: &[f64],
    objective: Objective,
    mut eval: F,
) -> Result<(f64, KeyRateReport)>
where
    F: FnMut(f64) -> Result<KeyRateReport>,
{
    let mut sorted = mu_grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best: Option<(f64, KeyRateReport)> = None;
    for mu in sorted {
        let report = eval(mu)?;
        if best
            .as_ref()
            .is_none_or(|(_, b)| objective.rate(&report) > objective.rate(b))
        {
            best = Some((mu, report));
        }
    }
    best.ok_or_else(|| Error::Scenario("empty intensity grid".into()))
}

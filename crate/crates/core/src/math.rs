//! Entropy functions and error-rate kernels of the SARG04 rate formula.
//!
//! All entropies are in bits. `0·log 0` is taken as 0 everywhere.

use crate::error::{Error, Result};

/// Probabilities that miss `[0, 1]` by less than this are snapped to the boundary.
pub const SNAP_TOLERANCE: f64 = 1e-12;

/// Upper end of the search interval for the free parameter of the 2-photon phase bound.
pub const PHASE_SEARCH_MAX: f64 = 1e6;

/// `g(0) = (3 + √6)/6`.
pub const G_AT_ZERO: f64 = 0.908_248_290_463_863;

/// `lim_{x→∞} g(x) = (3 − 3√2/2)/6`.
pub const G_LIMIT: f64 = 0.146_446_609_406_726_24;

pub(crate) fn snap_unit(name: &'static str, p: f64) -> Result<f64> {
    snap_range(name, p, 1.0, "[0, 1]")
}

pub(crate) fn snap_range(name: &'static str, p: f64, hi: f64, domain: &'static str) -> Result<f64> {
    if !p.is_finite() {
        return Err(Error::domain(name, p, domain));
    }
    if (0.0..=hi).contains(&p) {
        Ok(p)
    } else if (-SNAP_TOLERANCE..0.0).contains(&p) {
        Ok(0.0)
    } else if p > hi && p <= hi + SNAP_TOLERANCE {
        Ok(hi)
    } else {
        Err(Error::domain(name, p, domain))
    }
}

fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Shannon binary entropy `H₂(p)`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    let p = snap_unit("p", p)?;
    Ok(-xlog2x(p) - xlog2x(1.0 - p))
}

/// `g(x) = [3 − 2x + (6 − 6√2·x + 4x²)^{1/2}]/6`.
///
/// Evaluated as `[3 + (6 − 6√2·x)/(s + 2x)]/6` with `s` the radical, which
/// avoids the cancellation of `−2x + s` for large `x`.
pub fn g_function(x: f64) -> f64 {
    let s = (4.0 * x * x - 6.0 * std::f64::consts::SQRT_2 * x + 6.0).sqrt();
    (3.0 + (6.0 - 6.0 * std::f64::consts::SQRT_2 * x) / (s + 2.0 * x)) / 6.0
}

/// Upper bound on the conditional phase entropy of single-photon pulses,
/// `H₂^max(Z₁|X₁) = −H₂(e₁) − e₁·log₂(e₁²) − (1−2e₁)·log₂(1−2e₁)`, clamped to `[0, 1]`.
pub fn h2max_z1_x1(e1: f64) -> Result<f64> {
    let e1 = snap_range("e1", e1, 0.5, "[0, 1/2]")?;
    let h = -binary_entropy(e1)? - 2.0 * xlog2x(e1) - xlog2x(1.0 - 2.0 * e1);
    Ok(h.clamp(0.0, 1.0))
}

/// Optimised phase-error bound of 2-photon pulses.
///
/// `p_Z2 ≤ x·e₂ + g(x) − b` holds for every `x ≥ 0`; the objective is convex
/// with a single stationary point, found by golden-section search on
/// `[0, PHASE_SEARCH_MAX]`. `e₂ = 0` returns the limit of `g`. Capped at 1/2.
pub fn phase_error_2photon(e2: f64) -> Result<f64> {
    let e2 = snap_range("e2", e2, 0.5, "[0, 1/2]")?;
    if e2 == 0.0 {
        return Ok(G_LIMIT);
    }
    let (_, best) = golden_section_min(|x| x * e2 + g_function(x), 0.0, PHASE_SEARCH_MAX, 1e-9);
    Ok(best.min(0.5))
}

/// Error-correction leakage `Q_μ·f·H₂(E_μ)`.
pub fn ec_leakage(q_mu: f64, e_mu: f64, f_ec: f64) -> Result<f64> {
    if !(q_mu >= 0.0) {
        return Err(Error::domain("q_mu", q_mu, "[0, ∞)"));
    }
    if !(f_ec >= 1.0) {
        return Err(Error::domain("f_ec", f_ec, "[1, ∞)"));
    }
    Ok(q_mu * f_ec * binary_entropy(e_mu)?)
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimisation of `f` on `[lo, hi]`.
///
/// Returns `(x, f(x))` for the best point evaluated, endpoints included.
/// Converges to the minimum for unimodal `f`; for other functions it returns
/// a local minimum within the final bracket.
pub fn golden_section_min<F>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };

    while (b - a) > tol * (1.0 + c.abs()) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            if fc < best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            if fd < best.1 {
                best = (d, fd);
            }
        }
    }
    for x in [lo, hi] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Bit/phase-error decomposition of 1- and 2-photon pulses under one-way
/// post-processing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBudget {
    /// Bit-error rate of single-photon pulses.
    pub e1: f64,
    /// Bit-error rate of 2-photon pulses.
    pub e2: f64,
    /// Joint bit-and-phase flip probability, single photon.
    pub a: f64,
    /// Joint bit-and-phase flip probability, two photons.
    pub b: f64,
    /// Free parameter of the 2-photon phase bound.
    pub x: f64,
}

impl ErrorBudget {
    pub fn new(e1: f64, e2: f64, a: f64, b: f64, x: f64) -> Result<Self> {
        let e1 = snap_range("e1", e1, 0.5, "[0, 1/2]")?;
        let e2 = snap_range("e2", e2, 0.5, "[0, 1/2]")?;
        if !(a >= e1 / 2.0 && a <= e1) {
            return Err(Error::domain("a", a, "[e1/2, e1]"));
        }
        if !(b >= 0.0 && b <= e2) {
            return Err(Error::domain("b", b, "[0, e2]"));
        }
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::domain("x", x, "[0, ∞)"));
        }
        Ok(Self { e1, e2, a, b, x })
    }

    /// Single-photon phase-error rate `p_Z1 + p_Y1 = 3e₁/2`.
    pub fn phase_error_1photon(&self) -> f64 {
        1.5 * self.e1
    }

    /// Bound on the 2-photon phase-error rate at this `x`: `x·e₂ + g(x)`.
    pub fn phase_error_2photon_bound(&self) -> f64 {
        self.x * self.e2 + g_function(self.x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // Stationary point of x·e2 + g(x): with u = 2x − 3√2/2 the condition
    // g'(x) = −e2 becomes u/√(u² + 3/2) = 1 − 3e2.
    fn closed_form_phase(e2: f64) -> f64 {
        let s = 1.0 - 3.0 * e2;
        let u = s * (1.5 / (1.0 - s * s)).sqrt();
        let x = ((u + 1.5 * std::f64::consts::SQRT_2) / 2.0).max(0.0);
        (x * e2 + g_function(x)).min(0.5)
    }

    #[test]
    fn entropy_endpoints_and_reference() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            binary_entropy(0.11).unwrap(),
            0.499_915_958_164_528,
            epsilon = 1e-14
        );
    }

    #[test]
    fn entropy_domain() {
        assert!(binary_entropy(1.1).is_err());
        assert!(binary_entropy(-0.01).is_err());
        assert_eq!(binary_entropy(-1e-13).unwrap(), 0.0);
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn g_reference_values() {
        assert_abs_diff_eq!(g_function(0.0), G_AT_ZERO, epsilon = 1e-15);
        assert_abs_diff_eq!(g_function(1e6), 0.146_446_671_906_792_5, epsilon = 1e-13);
        assert!((g_function(1e6) - G_LIMIT).abs() < 1e-4);
        assert!(g_function(1.0) > g_function(2.0));
    }

    #[test]
    fn g_monotone_and_bounded() {
        let mut prev = g_function(0.0);
        for i in 1..20_000 {
            let x = i as f64 * 0.01;
            let v = g_function(x);
            assert!(v < prev, "not decreasing at {x}");
            assert!(v > G_LIMIT && v <= G_AT_ZERO);
            prev = v;
        }
    }

    #[test]
    fn h2max_reference() {
        assert_eq!(h2max_z1_x1(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(h2max_z1_x1(0.5).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            h2max_z1_x1(0.25).unwrap(),
            0.688_721_875_540_867_1,
            epsilon = 1e-14
        );
        assert!(h2max_z1_x1(0.51).is_err());
    }

    #[test]
    fn h2max_continuous_near_endpoints() {
        for start in [0.0, 0.5 - 1e-3] {
            let mut prev = h2max_z1_x1(start).unwrap();
            for i in 1..=1000 {
                let e = (start + i as f64 * 1e-6).min(0.5);
                let v = h2max_z1_x1(e).unwrap();
                assert!((v - prev).abs() < 1e-4, "jump at {e}");
                assert!((0.0..=1.0).contains(&v));
                prev = v;
            }
        }
    }

    #[test]
    fn phase_error_examples() {
        assert_abs_diff_eq!(phase_error_2photon(0.0).unwrap(), 0.146_447, epsilon = 1e-6);
        assert_eq!(phase_error_2photon(0.5).unwrap(), 0.5);
        // mpmath evaluation of the stationary value
        assert_abs_diff_eq!(
            phase_error_2photon(0.05).unwrap(),
            0.307_008_683_833_750_1,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            phase_error_2photon(0.1).unwrap(),
            0.398_286_423_955_840_9,
            epsilon = 1e-9
        );
    }

    #[test]
    fn phase_error_matches_closed_form() {
        for i in 1..=500 {
            let e2 = i as f64 * 1e-3;
            let got = phase_error_2photon(e2).unwrap();
            assert_abs_diff_eq!(got, closed_form_phase(e2), epsilon = 1e-9);
        }
    }

    #[test]
    fn phase_error_monotone() {
        let mut prev = 0.0;
        for i in 0..=500 {
            let v = phase_error_2photon(i as f64 * 1e-3).unwrap();
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn leakage_examples() {
        assert_eq!(ec_leakage(0.0, 0.3, 1.22).unwrap(), 0.0);
        assert_eq!(ec_leakage(1.0, 0.5, 1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(
            ec_leakage(0.01, 0.02, 1.22).unwrap(),
            0.001_725_574_619_010_212,
            epsilon = 1e-16
        );
        assert!(ec_leakage(0.01, 0.02, 0.9).is_err());
    }

    #[test]
    fn golden_section_quadratic() {
        let (x, fx) = golden_section_min(|x| (x - 1.234).powi(2) + 0.5, -10.0, 10.0, 1e-12);
        assert_abs_diff_eq!(x, 1.234, epsilon = 1e-6);
        assert_abs_diff_eq!(fx, 0.5, epsilon = 1e-12);
        // boundary minimum
        let (x, _) = golden_section_min(|x| x, 0.0, 1.0, 1e-12);
        assert_eq!(x, 0.0);
    }

    #[test]
    fn error_budget_constraints() {
        let b = ErrorBudget::new(0.1, 0.05, 0.07, 0.01, 1.0).unwrap();
        assert_abs_diff_eq!(b.phase_error_1photon(), 0.15, epsilon = 1e-15);
        assert!(b.phase_error_2photon_bound() >= phase_error_2photon(0.05).unwrap());
        assert!(ErrorBudget::new(0.1, 0.05, 0.04, 0.01, 1.0).is_err());
        assert!(ErrorBudget::new(0.1, 0.05, 0.07, 0.06, 1.0).is_err());
        assert!(ErrorBudget::new(0.6, 0.05, 0.3, 0.0, 1.0).is_err());
    }
}

//! Fiber/detector model: per-photon-number yields and errors, mixture gain
//! and QBER, and trusted-source reference key rates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{binary_entropy, ec_leakage, h2max_z1_x1, phase_error_2photon};
use crate::pnd::{PhotonNumberDistribution, DEFAULT_N_MAX};

/// Largest truncation tail accepted by [`gain_qber`].
pub const MAX_TAIL_MASS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    /// Fiber loss in dB/km.
    pub alpha_db_per_km: f64,
    /// Bob-side detection efficiency.
    pub eta_bob: f64,
    /// Dark-count probability per pulse of Bob's detector.
    pub y0: f64,
    /// Probability a photon hits the wrong detector.
    pub e_det: f64,
    /// Error probability of a dark count.
    pub e0: f64,
    pub distance_km: f64,
    /// Error-correction inefficiency, `f ≥ 1`.
    pub f_ec: f64,
}

impl ChannelParams {
    /// GYS constants with `f = 1.22` at zero distance.
    pub const fn gys() -> Self {
        Self {
            alpha_db_per_km: 0.21,
            eta_bob: 0.045,
            y0: 1.7e-6,
            e_det: 0.033,
            e0: 0.5,
            distance_km: 0.0,
            f_ec: 1.22,
        }
    }

    pub fn at_distance(mut self, distance_km: f64) -> Self {
        self.distance_km = distance_km;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta_bob", self.eta_bob),
            ("y0", self.y0),
            ("e_det", self.e_det),
            ("e0", self.e0),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(name, v, "[0, 1]"));
            }
        }
        if !(self.alpha_db_per_km >= 0.0) {
            return Err(Error::domain(
                "alpha_db_per_km",
                self.alpha_db_per_km,
                "[0, ∞)",
            ));
        }
        if !(self.distance_km >= 0.0) {
            return Err(Error::domain("distance_km", self.distance_km, "[0, ∞)"));
        }
        if !(self.f_ec >= 1.0) {
            return Err(Error::domain("f_ec", self.f_ec, "[1, ∞)"));
        }
        Ok(())
    }
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self::gys()
    }
}

/// Overall transmittance `η_Bob·10^(−α·L/10)`.
pub fn transmittance(params: &ChannelParams) -> f64 {
    params.eta_bob * 10f64.powf(-params.alpha_db_per_km * params.distance_km / 10.0)
}

/// Probability that at least one of `n` photons arrives: `1 − (1−η)ⁿ`.
pub fn eta_n(eta: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    -((n as f64) * (-eta).ln_1p()).exp_m1()
}

fn yield_error_at(eta: f64, params: &ChannelParams, n: usize) -> (f64, f64) {
    let en = eta_n(eta, n);
    let y = en * (params.e_det / 2.0 + 0.25) + 0.5 * (1.0 - en) * params.y0;
    let err = if y > 0.0 {
        (en * params.e_det / 2.0 + 0.25 * (1.0 - en) * params.y0) / y
    } else {
        params.e0
    };
    (y, err)
}

/// Yield `Yₙ` and error rate `eₙ` of `n`-photon pulses.
pub fn yield_and_error(params: &ChannelParams, n: usize) -> (f64, f64) {
    yield_error_at(transmittance(params), params, n)
}

/// Yields and error rates for `n = 0..=n_max` at one distance.
#[derive(Debug, Clone, PartialEq)]
pub struct YieldTable {
    pub eta: f64,
    pub y_n: Vec<f64>,
    pub e_n: Vec<f64>,
    pub n_max: usize,
}

impl YieldTable {
    pub fn new(params: &ChannelParams, n_max: usize) -> Self {
        let eta = transmittance(params);
        let (y_n, e_n) = (0..=n_max).map(|n| yield_error_at(eta, params, n)).unzip();
        Self {
            eta,
            y_n,
            e_n,
            n_max,
        }
    }

    /// Gain and QBER of a source with this photon-number distribution.
    pub fn gain_qber(&self, pnd: &PhotonNumberDistribution) -> Result<(f64, f64)> {
        if pnd.tail_mass() > MAX_TAIL_MASS {
            return Err(Error::Truncation {
                tail: pnd.tail_mass(),
                limit: MAX_TAIL_MASS,
            });
        }
        if pnd.n_max() > self.n_max {
            return Err(Error::Scenario(format!(
                "distribution truncated at {} exceeds yield table order {}",
                pnd.n_max(),
                self.n_max
            )));
        }
        let mut q = 0.0;
        let mut qe = 0.0;
        for (n, &p) in pnd.probs().iter().enumerate() {
            q += p * self.y_n[n];
            qe += p * self.y_n[n] * self.e_n[n];
        }
        if q <= 0.0 {
            return Err(Error::ZeroGain);
        }
        Ok((q, qe / q))
    }
}

/// Gain `Q = Σ Pₙ Yₙ` and QBER `E = Σ Pₙ Yₙ eₙ / Q` of a source.
pub fn gain_qber(params: &ChannelParams, pnd: &PhotonNumberDistribution) -> Result<(f64, f64)> {
    YieldTable::new(params, pnd.n_max().max(DEFAULT_N_MAX)).gain_qber(pnd)
}

/// Which multi-photon contributions the trusted-source rate credits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrustedMode {
    OnePhoton,
    TwoPhoton,
}

/// Key rate of a trusted Poisson source with yields and errors known exactly.
pub fn trusted_keyrate(params: &ChannelParams, mu: f64, mode: TrustedMode) -> Result<f64> {
    if !(mu >= 0.0) {
        return Err(Error::domain("mu", mu, "(0, ∞)"));
    }
    let pnd = PhotonNumberDistribution::poisson(mu, DEFAULT_N_MAX)?;
    let table = YieldTable::new(params, DEFAULT_N_MAX);
    let (q_mu, e_mu) = table.gain_qber(&pnd)?;
    let q1 = pnd.get(1) * table.y_n[1];
    let mut rate = -ec_leakage(q_mu, e_mu, params.f_ec)? + q1 * (1.0 - h2max_z1_x1(table.e_n[1])?);
    if mode == TrustedMode::TwoPhoton {
        let q2 = pnd.get(2) * table.y_n[2];
        rate += q2 * (1.0 - binary_entropy(phase_error_2photon(table.e_n[2])?)?);
    }
    Ok(rate.max(0.0))
}

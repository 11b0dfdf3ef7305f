//! Untrusted-source monitoring: VOA/beam-splitter thinning, PNR detector
//! noise, finite-sample intervals and the resulting source-parameter bounds.

mod noise;
mod sampling;
mod tally;

pub use noise::{convolve_poisson_noise, deconvolve_noise_bound, deconvolve_point, BoundDirection};
pub use sampling::{
    allocate_epsilons, sampling_failure, sampling_interval, Epsilons, IntervalProbability,
};
pub use tally::{
    choose_cutoff_j, exact_bounds, expected_tallies, infinite_data_cutoff, point_estimates,
    sample_tallies, source_bounds, ClassProbabilities, Intensities, SourceScenario, TallyRecord,
    INFINITE_DATA_TAIL,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pnd::PhotonNumberDistribution;

/// Largest detector dark-count mean accepted by the monitor model.
pub const MAX_LAMBDA: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MonitorMode {
    /// Optical switch routes a random half of the pulses to a unit-efficiency PNR detector.
    Active,
    /// Beam splitter taps every pulse; PNR detector with efficiency `η_D`.
    Passive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SourceClass {
    Signal,
    Decoy1,
    Decoy2,
    Vacuum,
}

impl SourceClass {
    pub const MONITORED: [SourceClass; 3] = [
        SourceClass::Signal,
        SourceClass::Decoy1,
        SourceClass::Decoy2,
    ];
}

/// VOA attenuation per source class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoaSettings {
    pub signal: f64,
    pub decoy1: f64,
    pub decoy2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorConfig {
    pub mode: MonitorMode,
    pub voa: VoaSettings,
    /// Beam-splitter transmittance toward Bob (passive mode; 1 for active).
    pub eta_bs: f64,
    /// PNR detector efficiency (1 for active).
    pub eta_d: f64,
    /// Mean dark counts per pulse of the PNR detector.
    pub lambda: f64,
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::domain(name, v, "[0, 1]"))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=MAX_LAMBDA).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::domain("lambda", lambda, "[0, 20]"))
    }
}

impl MonitorConfig {
    pub fn active(voa: VoaSettings, lambda: f64) -> Result<Self> {
        Self::build(MonitorMode::Active, voa, 1.0, 1.0, lambda)
    }

    /// Passive monitor with `η_BS = η_D/(1+η_D)`, so that `(1−η_BS)·η_D = η_BS`.
    pub fn passive(voa: VoaSettings, eta_d: f64, lambda: f64) -> Result<Self> {
        check_unit("eta_d", eta_d)?;
        Self::build(
            MonitorMode::Passive,
            voa,
            eta_d / (1.0 + eta_d),
            eta_d,
            lambda,
        )
    }

    fn build(
        mode: MonitorMode,
        voa: VoaSettings,
        eta_bs: f64,
        eta_d: f64,
        lambda: f64,
    ) -> Result<Self> {
        check_unit("eta_signal", voa.signal)?;
        check_unit("eta_decoy1", voa.decoy1)?;
        check_unit("eta_decoy2", voa.decoy2)?;
        check_lambda(lambda)?;
        Ok(Self {
            mode,
            voa,
            eta_bs,
            eta_d,
            lambda,
        })
    }

    /// Chooses VOA settings so that the pulses leaving Alice have the given
    /// mean photon numbers, for a source at P1 with mean `source_mean`.
    pub fn for_intensities(
        mode: MonitorMode,
        eta_d: f64,
        lambda: f64,
        source_mean: f64,
        intensities: &Intensities,
    ) -> Result<Self> {
        if !(source_mean > 0.0) {
            return Err(Error::domain("source mean", source_mean, "(0, ∞)"));
        }
        let out = match mode {
            MonitorMode::Active => 1.0,
            MonitorMode::Passive => {
                check_unit("eta_d", eta_d)?;
                eta_d / (1.0 + eta_d)
            }
        };
        let scale = source_mean * out;
        let voa = VoaSettings {
            signal: intensities.mu / scale,
            decoy1: intensities.v1 / scale,
            decoy2: intensities.v2 / scale,
        };
        for (name, v) in [("mu", voa.signal), ("v1", voa.decoy1), ("v2", voa.decoy2)] {
            if v > 1.0 {
                return Err(Error::Scenario(format!(
                    "{name} needs VOA attenuation {v:.4} > 1; raise the source mean"
                )));
            }
        }
        match mode {
            MonitorMode::Active => Self::active(voa, lambda),
            MonitorMode::Passive => Self::passive(voa, eta_d, lambda),
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        self.lambda = lambda;
        Ok(self)
    }

    /// VOA attenuation for a class; the vacuum source is fully blocked.
    pub fn voa_attenuation(&self, class: SourceClass) -> f64 {
        match class {
            SourceClass::Signal => self.voa.signal,
            SourceClass::Decoy1 => self.voa.decoy1,
            SourceClass::Decoy2 => self.voa.decoy2,
            SourceClass::Vacuum => 0.0,
        }
    }

    /// Transmission from P1 to Alice's output port: `η` (active) or `η·η_BS` (passive).
    pub fn output_transmission(&self, class: SourceClass) -> f64 {
        let eta = self.voa_attenuation(class);
        match self.mode {
            MonitorMode::Active => eta,
            MonitorMode::Passive => eta * self.eta_bs,
        }
    }

    /// Transmission from P1 to the ideal part of the PNR detector.
    pub fn detector_transmission(&self, class: SourceClass) -> f64 {
        let eta = self.voa_attenuation(class);
        match self.mode {
            MonitorMode::Active => eta,
            MonitorMode::Passive => eta * (1.0 - self.eta_bs) * self.eta_d,
        }
    }
}

/// Distribution leaving Alice (P3) for the given class.
pub fn monitor_output_pnd(
    source: &PhotonNumberDistribution,
    config: &MonitorConfig,
    class: SourceClass,
) -> Result<PhotonNumberDistribution> {
    if class == SourceClass::Vacuum {
        return Ok(PhotonNumberDistribution::vacuum(source.n_max()));
    }
    source.binomial_thin(config.output_transmission(class))
}

/// Distribution of photons reaching the ideal PNR detector (P5).
pub fn monitored_pnd_at_detector(
    source: &PhotonNumberDistribution,
    config: &MonitorConfig,
    class: SourceClass,
) -> Result<PhotonNumberDistribution> {
    if class == SourceClass::Vacuum {
        return Ok(PhotonNumberDistribution::vacuum(source.n_max()));
    }
    source.binomial_thin(config.detector_transmission(class))
}

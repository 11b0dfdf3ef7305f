//! Pulse tallies (photoelectron histograms and Bob counts) and the source
//! bounds built from them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use super::noise::{
    convolve_poisson_noise, deconvolve_noise_bound, deconvolve_point, BoundDirection,
};
use super::sampling::{allocate_epsilons, sampling_interval, IntervalProbability};
use super::{monitor_output_pnd, monitored_pnd_at_detector, MonitorConfig, SourceClass};
use crate::channel::{ChannelParams, YieldTable};
use crate::decoy::SourceBounds;
use crate::error::{Error, Result};
use crate::pnd::PhotonNumberDistribution;

/// Decoy-1 tail mass below which the `M = ∞` cutoff is placed.
pub const INFINITE_DATA_TAIL: f64 = 1e-25;

/// Mean photon numbers leaving Alice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intensities {
    pub mu: f64,
    pub v1: f64,
    pub v2: f64,
}

impl Default for Intensities {
    fn default() -> Self {
        Self {
            mu: 0.3,
            v1: 0.05,
            v2: 0.01,
        }
    }
}

/// Probabilities `p', p₁, p₂, p₀` of sending each source class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassProbabilities {
    pub signal: f64,
    pub decoy1: f64,
    pub decoy2: f64,
    pub vacuum: f64,
}

impl Default for ClassProbabilities {
    fn default() -> Self {
        Self {
            signal: 0.5,
            decoy1: 0.25,
            decoy2: 0.15,
            vacuum: 0.1,
        }
    }
}

impl ClassProbabilities {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_signal", self.signal),
            ("p_decoy1", self.decoy1),
            ("p_decoy2", self.decoy2),
            ("p_vacuum", self.vacuum),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::domain(name, p, "[0, 1]"));
            }
        }
        let total = self.signal + self.decoy1 + self.decoy2 + self.vacuum;
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Scenario(format!(
                "class probabilities sum to {total}, not 1"
            )));
        }
        Ok(())
    }

    pub fn get(&self, class: SourceClass) -> f64 {
        match class {
            SourceClass::Signal => self.signal,
            SourceClass::Decoy1 => self.decoy1,
            SourceClass::Decoy2 => self.decoy2,
            SourceClass::Vacuum => self.vacuum,
        }
    }
}

/// Everything needed to generate a tally.
#[derive(Debug, Clone)]
pub struct SourceScenario {
    /// PND at P1.
    pub source: PhotonNumberDistribution,
    pub monitor: MonitorConfig,
    pub channel: ChannelParams,
    pub intensities: Intensities,
    pub class_probs: ClassProbabilities,
    /// Total pulses `M`.
    pub m_total: f64,
}

/// Per-class output (P3) and photoelectron (F) distributions.
struct ClassDistributions {
    output: [PhotonNumberDistribution; 3],
    photoelectrons: [PhotonNumberDistribution; 3],
}

impl SourceScenario {
    pub fn validate(&self) -> Result<()> {
        self.class_probs.validate()?;
        self.channel.validate()?;
        if !(self.m_total >= 0.0) {
            return Err(Error::domain("m_total", self.m_total, "[0, ∞)"));
        }
        Ok(())
    }

    fn distributions(&self) -> Result<ClassDistributions> {
        let mut output = Vec::with_capacity(3);
        let mut photoelectrons = Vec::with_capacity(3);
        for class in SourceClass::MONITORED {
            output.push(monitor_output_pnd(&self.source, &self.monitor, class)?);
            let p5 = monitored_pnd_at_detector(&self.source, &self.monitor, class)?;
            photoelectrons.push(convolve_poisson_noise(&p5, self.monitor.lambda)?);
        }
        let arr = |v: Vec<PhotonNumberDistribution>| -> [PhotonNumberDistribution; 3] {
            v.try_into().expect("three monitored classes")
        };
        Ok(ClassDistributions {
            output: arr(output),
            photoelectrons: arr(photoelectrons),
        })
    }

    /// Pulses per class; the vacuum class absorbs rounding so that the total is `M`.
    fn class_sizes(&self, round: bool) -> [f64; 4] {
        let size = |p: f64| {
            let x = p * self.m_total;
            if round {
                x.round()
            } else {
                x
            }
        };
        let m_s = size(self.class_probs.signal);
        let m_1 = size(self.class_probs.decoy1);
        let m_2 = size(self.class_probs.decoy2);
        [m_s, m_1, m_2, (self.m_total - m_s - m_1 - m_2).max(0.0)]
    }
}

/// Counts observed in one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TallyRecord {
    pub m_total: f64,
    pub m_s: f64,
    pub m_1: f64,
    pub m_2: f64,
    pub m_0: f64,
    /// Photoelectron histograms indexed by `m`.
    pub j_s: Vec<f64>,
    pub j_d1: Vec<f64>,
    pub j_d2: Vec<f64>,
    pub n_s: f64,
    pub n_d1: f64,
    pub n_d2: f64,
    pub n_0: f64,
    /// Erroneous signal counts.
    pub err_s: f64,
}

impl TallyRecord {
    fn zeros(m_total: f64, sizes: [f64; 4], len: usize) -> Self {
        Self {
            m_total,
            m_s: sizes[0],
            m_1: sizes[1],
            m_2: sizes[2],
            m_0: sizes[3],
            j_s: vec![0.0; len],
            j_d1: vec![0.0; len],
            j_d2: vec![0.0; len],
            n_s: 0.0,
            n_d1: 0.0,
            n_d2: 0.0,
            n_0: 0.0,
            err_s: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rel = 1e-9 * self.m_total.max(1.0);
        if (self.m_s + self.m_1 + self.m_2 + self.m_0 - self.m_total).abs() > rel {
            return Err(Error::Scenario("class sizes do not add up to M".into()));
        }
        for (name, hist, m) in [
            ("signal", &self.j_s, self.m_s),
            ("decoy-1", &self.j_d1, self.m_1),
            ("decoy-2", &self.j_d2, self.m_2),
        ] {
            if hist.iter().any(|&j| !(j >= 0.0)) {
                return Err(Error::Scenario(format!(
                    "{name} histogram has a negative entry"
                )));
            }
            if hist.iter().sum::<f64>() > m + rel {
                return Err(Error::Scenario(format!(
                    "{name} histogram exceeds its pulse count"
                )));
            }
        }
        let counts = [
            (self.n_s, self.m_s),
            (self.n_d1, self.m_1),
            (self.n_d2, self.m_2),
            (self.n_0, self.m_0),
            (self.err_s, self.n_s),
        ];
        if counts.iter().any(|&(n, m)| !(n >= 0.0) || n > m + rel) {
            return Err(Error::Scenario("Bob counts outside [0, pulses]".into()));
        }
        Ok(())
    }

    fn rate(count: f64, pulses: f64) -> f64 {
        if pulses > 0.0 {
            count / pulses
        } else {
            0.0
        }
    }

    pub fn q_mu(&self) -> f64 {
        Self::rate(self.n_s, self.m_s)
    }

    pub fn q_d1(&self) -> f64 {
        Self::rate(self.n_d1, self.m_1)
    }

    pub fn q_d2(&self) -> f64 {
        Self::rate(self.n_d2, self.m_2)
    }

    pub fn y0_obs(&self) -> f64 {
        Self::rate(self.n_0, self.m_0)
    }

    pub fn e_mu(&self) -> f64 {
        Self::rate(self.err_s, self.n_s)
    }
}

/// Real-valued expected tallies (no rounding).
pub fn expected_tallies(scenario: &SourceScenario) -> Result<TallyRecord> {
    scenario.validate()?;
    if !scenario.m_total.is_finite() {
        return Err(Error::Scenario("expected tallies need a finite M".into()));
    }
    let dists = scenario.distributions()?;
    let sizes = scenario.class_sizes(false);
    let len = scenario.source.n_max() + 1;
    let mut rec = TallyRecord::zeros(scenario.m_total, sizes, len);
    let yields = YieldTable::new(&scenario.channel, scenario.source.n_max());

    let hists = [&mut rec.j_s, &mut rec.j_d1, &mut rec.j_d2];
    for ((hist, f), &m_x) in hists.into_iter().zip(&dists.photoelectrons).zip(&sizes) {
        for (slot, &p) in hist.iter_mut().zip(f.probs()) {
            *slot = m_x * p;
        }
    }
    let mut gains = [0.0; 3];
    let mut e_signal = 0.0;
    for (i, out) in dists.output.iter().enumerate() {
        let (q, e) = yields.gain_qber(out)?;
        gains[i] = q;
        if i == 0 {
            e_signal = e;
        }
    }
    rec.n_s = sizes[0] * gains[0];
    rec.n_d1 = sizes[1] * gains[1];
    rec.n_d2 = sizes[2] * gains[2];
    rec.n_0 = sizes[3] * yields.y_n[0];
    rec.err_s = rec.n_s * e_signal;
    Ok(rec)
}

fn binomial(rng: &mut ChaCha8Rng, n: f64, p: f64) -> Result<f64> {
    if n < 1.0 || p <= 0.0 {
        return Ok(0.0);
    }
    let dist = Binomial::new(n as u64, p.min(1.0))
        .map_err(|e| Error::Scenario(format!("binomial draw: {e}")))?;
    Ok(dist.sample(rng) as f64)
}

/// Multinomial histogram by sequential conditional binomials; mass beyond
/// `n_max` is left unrecorded.
fn sample_histogram(
    rng: &mut ChaCha8Rng,
    trials: f64,
    f: &PhotonNumberDistribution,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; f.n_max() + 1];
    let mut remaining = trials;
    let mut mass = 1.0;
    for (slot, &p) in out.iter_mut().zip(f.probs()) {
        if remaining < 1.0 || mass <= 0.0 {
            break;
        }
        let k = binomial(rng, remaining, (p / mass).clamp(0.0, 1.0))?;
        *slot = k;
        remaining -= k;
        mass -= p;
    }
    Ok(out)
}

/// Monte-Carlo tallies with the same expectations as [`expected_tallies`].
pub fn sample_tallies(scenario: &SourceScenario, seed: u64) -> Result<TallyRecord> {
    scenario.validate()?;
    if !scenario.m_total.is_finite() || scenario.m_total > u64::MAX as f64 {
        return Err(Error::Scenario(
            "Monte-Carlo tallies need a finite M".into(),
        ));
    }
    let sizes = scenario.class_sizes(true);
    let len = scenario.source.n_max() + 1;
    let mut rec = TallyRecord::zeros(scenario.m_total.round(), sizes, len);
    if scenario.m_total < 1.0 {
        return Ok(rec);
    }
    let dists = scenario.distributions()?;
    let yields = YieldTable::new(&scenario.channel, scenario.source.n_max());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    rec.j_s = sample_histogram(&mut rng, sizes[0], &dists.photoelectrons[0])?;
    rec.j_d1 = sample_histogram(&mut rng, sizes[1], &dists.photoelectrons[1])?;
    rec.j_d2 = sample_histogram(&mut rng, sizes[2], &dists.photoelectrons[2])?;

    let (q_s, e_s) = yields.gain_qber(&dists.output[0])?;
    let (q_1, _) = yields.gain_qber(&dists.output[1])?;
    let (q_2, _) = yields.gain_qber(&dists.output[2])?;
    rec.n_s = binomial(&mut rng, sizes[0], q_s)?;
    rec.n_d1 = binomial(&mut rng, sizes[1], q_1)?;
    rec.n_d2 = binomial(&mut rng, sizes[2], q_2)?;
    rec.n_0 = binomial(&mut rng, sizes[3], yields.y_n[0])?;
    rec.err_s = binomial(&mut rng, rec.n_s, e_s)?;
    Ok(rec)
}

/// Largest `m` with at least one decoy-1 photoelectron count.
pub fn choose_cutoff_j(tally: &TallyRecord) -> Result<usize> {
    tally
        .j_d1
        .iter()
        .rposition(|&j| j >= 1.0)
        .ok_or(Error::EmptyHistogram)
}

/// Cutoff for `M = ∞`: the smallest `m` whose decoy-1 tail beyond `m` is below [`INFINITE_DATA_TAIL`].
pub fn infinite_data_cutoff(decoy1: &PhotonNumberDistribution) -> usize {
    let probs = decoy1.probs();
    let mut above = decoy1.tail_mass();
    let mut cutoff = probs.len() - 1;
    for m in (0..probs.len()).rev() {
        if above >= INFINITE_DATA_TAIL {
            break;
        }
        cutoff = m;
        above += probs[m];
    }
    cutoff
}

fn bound_pair(intervals: &[IntervalProbability], lambda: f64, m: usize) -> Result<(f64, f64)> {
    if lambda == 0.0 {
        let iv = intervals.get(m).ok_or(Error::Coverage {
            needed: m,
            available: intervals.len(),
        })?;
        return Ok((iv.lo, iv.hi));
    }
    let lo = deconvolve_noise_bound(intervals, lambda, m, BoundDirection::Lower)?;
    let hi = deconvolve_noise_bound(intervals, lambda, m, BoundDirection::Upper)?;
    Ok((lo, hi))
}

fn histogram_count(hist: &[f64], m: usize) -> f64 {
    hist.get(m).copied().unwrap_or(0.0)
}

/// Interval bounds on `{a'ₘ, aₘ, bₙ}` from a finite-data tally.
///
/// Intervals cover `m = 0..=max(J, 3)` for signal and decoy-1 and `n = 0..=2`
/// for decoy-2; `confidence` is the target for the sampling intervals alone.
pub fn source_bounds(
    tally: &TallyRecord,
    config: &MonitorConfig,
    confidence: f64,
) -> Result<SourceBounds> {
    let j = choose_cutoff_j(tally)?;
    let span = j.max(3);
    let eps = allocate_epsilons(confidence, span, tally.m_s, tally.m_1, tally.m_2)?;
    let intervals =
        |hist: &[f64], trials: f64, e: f64, top: usize| -> Result<Vec<IntervalProbability>> {
            (0..=top)
                .map(|m| sampling_interval(histogram_count(hist, m), trials, e))
                .collect()
        };
    let f_s = intervals(&tally.j_s, tally.m_s, eps.signal, span)?;
    let f_1 = intervals(&tally.j_d1, tally.m_1, eps.decoy1, span)?;
    let f_2 = intervals(&tally.j_d2, tally.m_2, eps.decoy2, 2)?;

    let split = |f: &[IntervalProbability], top: usize| -> Result<(Vec<f64>, Vec<f64>)> {
        (0..=top)
            .map(|m| bound_pair(f, config.lambda, m))
            .collect::<Result<Vec<_>>>()
            .map(|v| v.into_iter().unzip())
    };
    let achieved = 1.0 - eps.composite_failure(span, tally.m_s, tally.m_1, tally.m_2);
    SourceBounds::new(
        split(&f_s, span)?,
        split(&f_1, span)?,
        split(&f_2, 2)?,
        j,
        achieved,
    )
}

/// Zero-width bounds at the observed frequencies, deconvolved pointwise.
pub fn point_estimates(tally: &TallyRecord, config: &MonitorConfig) -> Result<SourceBounds> {
    let j = choose_cutoff_j(tally)?;
    let span = j.max(3);
    let freqs = |hist: &[f64], trials: f64, top: usize| -> Result<Vec<f64>> {
        if !(trials > 0.0) {
            return Err(Error::DegenerateSample("point estimate"));
        }
        let f: Vec<f64> = (0..=top)
            .map(|m| histogram_count(hist, m) / trials)
            .collect();
        (0..=top)
            .map(|m| deconvolve_point(&f, config.lambda, m))
            .collect()
    };
    SourceBounds::exact(
        freqs(&tally.j_s, tally.m_s, span)?,
        freqs(&tally.j_d1, tally.m_1, span)?,
        freqs(&tally.j_d2, tally.m_2, 2)?,
        j,
    )
    .map(|mut b| {
        b.confidence = 0.0;
        b
    })
}

/// Exact bounds for `M = ∞` with cutoff `j`; noise is fully resolved in this limit.
pub fn exact_bounds(
    source: &PhotonNumberDistribution,
    config: &MonitorConfig,
    j: usize,
) -> Result<SourceBounds> {
    let span = j.max(3);
    let take = |class: SourceClass, top: usize| -> Result<Vec<f64>> {
        let p5 = monitored_pnd_at_detector(source, config, class)?;
        Ok((0..=top).map(|m| p5.get(m)).collect())
    };
    SourceBounds::exact(
        take(SourceClass::Signal, span)?,
        take(SourceClass::Decoy1, span)?,
        take(SourceClass::Decoy2, 2)?,
        j,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monitor::MonitorMode;
    use crate::pnd::DEFAULT_N_MAX;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn scenario(mode: MonitorMode, lambda: f64, m_total: f64) -> SourceScenario {
        let intensities = Intensities::default();
        let monitor =
            MonitorConfig::for_intensities(mode, 0.15, lambda, 5.0, &intensities).unwrap();
        SourceScenario {
            source: PhotonNumberDistribution::poisson(5.0, DEFAULT_N_MAX).unwrap(),
            monitor,
            channel: ChannelParams::gys().at_distance(20.0),
            intensities,
            class_probs: ClassProbabilities::default(),
            m_total,
        }
    }

    fn poisson_pmf(mean: f64, m: usize) -> f64 {
        (-mean).exp() * mean.powi(m as i32) / (1..=m).map(|k| k as f64).product::<f64>()
    }

    #[test]
    fn expected_histograms_follow_output_distribution() {
        let sc = scenario(MonitorMode::Passive, 0.0, 1e12);
        let t = expected_tallies(&sc).unwrap();
        t.validate().unwrap();
        assert_eq!(t.m_s, 5e11);
        for m in 0..6 {
            assert_relative_eq!(t.j_s[m] / t.m_s, poisson_pmf(0.3, m), max_relative = 1e-12);
            assert_relative_eq!(
                t.j_d1[m] / t.m_1,
                poisson_pmf(0.05, m),
                max_relative = 1e-12
            );
        }
        assert_relative_eq!(t.j_s.iter().sum::<f64>(), t.m_s, max_relative = 1e-12);
        assert_relative_eq!(t.n_0, t.m_0 * sc.channel.y0 / 2.0, max_relative = 1e-12);
        assert_relative_eq!(t.y0_obs(), 8.5e-7, max_relative = 1e-12);
    }

    #[test]
    fn cutoff_examples() {
        // v₁ = 0.01, M₁ = 1e12: last m with M₁·pmf ≥ 1
        let intensities = Intensities {
            mu: 0.3,
            v1: 0.01,
            v2: 0.005,
        };
        let mut sc = scenario(MonitorMode::Active, 0.0, 4e12);
        sc.monitor =
            MonitorConfig::for_intensities(MonitorMode::Active, 1.0, 0.0, 5.0, &intensities)
                .unwrap();
        let t = expected_tallies(&sc).unwrap();
        assert_eq!(t.m_1, 1e12);
        let j = choose_cutoff_j(&t).unwrap();
        let oracle = (0..30)
            .rev()
            .find(|&m| 1e12 * poisson_pmf(0.01, m) >= 1.0)
            .unwrap();
        assert_eq!(j, oracle);
        // 1e12·v₁⁴e^{−v₁}/4! ≈ 412, the next term ≈ 0.82
        assert_eq!(j, 4);

        let mut vac = t.clone();
        vac.j_d1 = vec![0.0; 10];
        vac.j_d1[0] = 7.0;
        assert_eq!(choose_cutoff_j(&vac).unwrap(), 0);
        vac.j_d1[0] = 0.0;
        assert!(matches!(choose_cutoff_j(&vac), Err(Error::EmptyHistogram)));

        let mut prev = 0;
        for m in [1e8, 1e10, 1e12, 1e14] {
            sc.m_total = m;
            let j = choose_cutoff_j(&expected_tallies(&sc).unwrap()).unwrap();
            assert!(j >= prev);
            prev = j;
        }
    }

    #[test]
    fn infinite_cutoff_leaves_negligible_tail() {
        let d = PhotonNumberDistribution::poisson(0.02, DEFAULT_N_MAX).unwrap();
        let j = infinite_data_cutoff(&d);
        let beyond: f64 = d.probs()[j + 1..].iter().sum::<f64>() + d.tail_mass();
        assert!(beyond < INFINITE_DATA_TAIL);
        let with_j: f64 = beyond + d.get(j);
        assert!(with_j >= INFINITE_DATA_TAIL);
        assert_eq!(
            infinite_data_cutoff(&PhotonNumberDistribution::vacuum(10)),
            0
        );
    }

    #[test]
    fn exact_bounds_are_the_output_distribution() {
        let sc = scenario(MonitorMode::Passive, 0.0, f64::INFINITY);
        let b = exact_bounds(&sc.source, &sc.monitor, 8).unwrap();
        for m in 0..=8 {
            assert_relative_eq!(b.a_prime_lo[m], poisson_pmf(0.3, m), max_relative = 1e-12);
            assert_eq!(b.a_prime_lo[m], b.a_prime_hi[m]);
        }
        assert_eq!(b.b_lo.len(), 3);
        assert_eq!(b.confidence, 1.0);
    }

    #[test]
    fn finite_bounds_match_hand_intervals() {
        let sc = scenario(MonitorMode::Passive, 0.0, 1e12);
        let t = expected_tallies(&sc).unwrap();
        let b = source_bounds(&t, &sc.monitor, 1.0 - 1e-6).unwrap();
        let span = b.j_cutoff.max(3);
        let eps = allocate_epsilons(1.0 - 1e-6, span, t.m_s, t.m_1, t.m_2).unwrap();
        assert_abs_diff_eq!(
            b.a_prime_lo[1],
            t.j_s[1] / t.m_s - eps.signal,
            epsilon = 1e-16
        );
        assert_abs_diff_eq!(b.a_hi[2], t.j_d1[2] / t.m_1 + eps.decoy1, epsilon = 1e-16);
        assert_abs_diff_eq!(b.b_lo[1], t.j_d2[1] / t.m_2 - eps.decoy2, epsilon = 1e-16);
        assert!(b.confidence >= 1.0 - 1e-6);
    }

    #[test]
    fn noisy_bounds_use_inverse_series() {
        let lambda: f64 = 1e-3;
        let sc = scenario(MonitorMode::Passive, lambda, 1e12);
        let t = expected_tallies(&sc).unwrap();
        let b = source_bounds(&t, &sc.monitor, 1.0 - 1e-6).unwrap();
        let span = b.j_cutoff.max(3);
        let e = allocate_epsilons(1.0 - 1e-6, span, t.m_s, t.m_1, t.m_2)
            .unwrap()
            .signal;
        let f = |m: usize| t.j_s[m] / t.m_s;
        let el = lambda.exp();
        let expect =
            el * (f(2) - e) - lambda * el * (f(1) + e) + lambda * lambda / 2.0 * el * (f(0) - e);
        assert_abs_diff_eq!(b.a_prime_lo[2], expect, epsilon = 1e-15);
    }

    #[test]
    fn width_scales_as_inverse_root_m() {
        let width = |m: f64| {
            let sc = scenario(MonitorMode::Passive, 0.0, m);
            let t = expected_tallies(&sc).unwrap();
            let b = source_bounds(&t, &sc.monitor, 1.0 - 1e-6).unwrap();
            b.a_prime_hi[1] - b.a_prime_lo[1]
        };
        let ratio = width(1e10) / width(1e12);
        assert!((9.0..=11.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let sc = scenario(MonitorMode::Active, 0.0, 1e9);
        let a = sample_tallies(&sc, 7).unwrap();
        let b = sample_tallies(&sc, 7).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        assert_ne!(a, sample_tallies(&sc, 8).unwrap());
    }

    #[test]
    fn monte_carlo_zero_pulses() {
        let sc = scenario(MonitorMode::Active, 0.0, 0.0);
        let t = sample_tallies(&sc, 1).unwrap();
        assert!(t
            .j_s
            .iter()
            .chain(&t.j_d1)
            .chain(&t.j_d2)
            .all(|&j| j == 0.0));
        assert_eq!(
            (t.n_s, t.n_d1, t.n_d2, t.n_0, t.m_total),
            (0.0, 0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn monte_carlo_frequencies_within_five_sigma() {
        let sc = scenario(MonitorMode::Passive, 0.5, 1e6);
        let expect = expected_tallies(&sc).unwrap();
        for seed in 0..100 {
            let t = sample_tallies(&sc, seed).unwrap();
            for (hist, mean, trials) in
                [(&t.j_s, &expect.j_s, t.m_s), (&t.j_d1, &expect.j_d1, t.m_1)]
            {
                for m in 0..6 {
                    let p = mean[m] / trials;
                    let sigma = (p * (1.0 - p) / trials).sqrt();
                    assert!(
                        (hist[m] / trials - p).abs() <= 5.0 * sigma + 1e-12,
                        "seed {seed}, m {m}"
                    );
                }
            }
        }
    }

    #[test]
    fn point_estimates_are_zero_width() {
        let sc = scenario(MonitorMode::Passive, 0.0, 1e12);
        let t = expected_tallies(&sc).unwrap();
        let b = point_estimates(&t, &sc.monitor).unwrap();
        assert_eq!(b.a_lo, b.a_hi);
        assert_relative_eq!(b.a_prime_lo[2], poisson_pmf(0.3, 2), max_relative = 1e-12);
    }
}

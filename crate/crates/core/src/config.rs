//! TOML scenario configuration.
//!
//! Every section and key is optional; an empty file gives the GYS channel, a
//! passive monitor, a Poisson source of mean 5 and infinite data. See the
//! README for the full key list.

use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer};
use serde::Deserialize;
use thiserror::Error;

use crate::channel::ChannelParams;
use crate::keyrate::Objective;
use crate::monitor::{ClassProbabilities, Intensities, MonitorMode, MAX_LAMBDA};
use crate::pnd::{PhotonNumberDistribution, DEFAULT_N_MAX};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },

    #[error("pnd file {path}: {message}")]
    PndFile { path: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

/// One data size: a pulse count or `"infinite"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataSize(pub f64);

impl<'de> Deserialize<'de> for DataSize {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) => Ok(DataSize(n as f64)),
            Raw::Float(x) => Ok(DataSize(x)),
            Raw::Text(s) => match s.to_ascii_lowercase().as_str() {
                "inf" | "infinite" | "infinity" => Ok(DataSize(f64::INFINITY)),
                other => other.parse::<f64>().map(DataSize).map_err(|_| {
                    de::Error::custom(format!(
                        "data size `{s}` is neither a number nor \"infinite\""
                    ))
                }),
            },
        }
    }
}

/// A scalar or a list, both read as a list.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum SizeList {
    One(DataSize),
    Many(Vec<DataSize>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    channel: Option<ChannelParams>,
    #[serde(default)]
    monitor: RawMonitor,
    #[serde(default)]
    source: RawSource,
    #[serde(default)]
    intensities: RawIntensities,
    #[serde(default)]
    data: RawData,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    analysis: RawAnalysis,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawMonitor {
    mode: MonitorMode,
    eta_d: f64,
    lambda: OneOrMany,
}

impl Default for RawMonitor {
    fn default() -> Self {
        Self {
            mode: MonitorMode::Passive,
            eta_d: 0.15,
            lambda: OneOrMany::One(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SourceModel {
    #[default]
    Poisson,
    File,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawSource {
    model: SourceModel,
    mean: f64,
    pnd_file: Option<PathBuf>,
    n_max: usize,
}

impl Default for RawSource {
    fn default() -> Self {
        Self {
            model: SourceModel::Poisson,
            mean: 5.0,
            pnd_file: None,
            n_max: DEFAULT_N_MAX,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawIntensities {
    mu: f64,
    v1: f64,
    v2: f64,
    p_signal: f64,
    p_decoy1: f64,
    p_decoy2: f64,
    p_vacuum: f64,
    scale_decoys: bool,
}

impl Default for RawIntensities {
    fn default() -> Self {
        let i = Intensities::default();
        let p = ClassProbabilities::default();
        Self {
            mu: i.mu,
            v1: i.v1,
            v2: i.v2,
            p_signal: p.signal,
            p_decoy1: p.decoy1,
            p_decoy2: p.decoy2,
            p_vacuum: p.vacuum,
            scale_decoys: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DataMode {
    #[default]
    Expectation,
    MonteCarlo,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawData {
    sizes: SizeList,
    confidence: f64,
    mode: DataMode,
    seed: u64,
}

impl Default for RawData {
    fn default() -> Self {
        Self {
            sizes: SizeList::One(DataSize(f64::INFINITY)),
            confidence: 1.0 - 1e-6,
            mode: DataMode::Expectation,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
enum RawObjective {
    Case1,
    #[default]
    Case2,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawSweep {
    start_km: f64,
    stop_km: f64,
    step_km: f64,
    optimize_mu: bool,
    mu_min: f64,
    mu_max: f64,
    mu_step: f64,
    objective: RawObjective,
}

impl Default for RawSweep {
    fn default() -> Self {
        Self {
            start_km: 0.0,
            stop_km: 100.0,
            step_km: 5.0,
            optimize_mu: false,
            mu_min: 0.05,
            mu_max: 0.6,
            mu_step: 0.01,
            objective: RawObjective::Case2,
        }
    }
}

/// Whether the validity conditions are judged on observed frequencies or on interval bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ConditionBasis {
    #[default]
    Estimates,
    Bounds,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawAnalysis {
    condition_basis: ConditionBasis,
    subtract_vacuum_errors: bool,
}

impl Default for RawAnalysis {
    fn default() -> Self {
        Self {
            condition_basis: ConditionBasis::Estimates,
            subtract_vacuum_errors: true,
        }
    }
}

/// Validated scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub channel: ChannelParams,
    pub monitor_mode: MonitorMode,
    pub eta_d: f64,
    pub lambdas: Vec<f64>,
    pub source_model: SourceModel,
    /// PND at P1.
    pub source: PhotonNumberDistribution,
    pub intensities: Intensities,
    pub class_probs: ClassProbabilities,
    /// Keep `v₁/μ` and `v₂/μ` fixed when `μ` is optimised.
    pub scale_decoys: bool,
    pub data_sizes: Vec<f64>,
    pub confidence: f64,
    pub data_mode: DataMode,
    pub seed: u64,
    pub distances_km: Vec<f64>,
    /// `Some` when `μ` is optimised per distance.
    pub mu_grid: Option<Vec<f64>>,
    pub objective: Objective,
    pub condition_basis: ConditionBasis,
    pub subtract_vacuum_errors: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        parse_config("", None).expect("defaults are valid")
    }
}

impl ScenarioConfig {
    /// Mean of the P1 distribution, used to set VOA attenuations.
    pub fn source_mean(&self) -> f64 {
        self.source.mean()
    }

    /// Intensities used for signal level `mu`.
    pub fn intensities_for(&self, mu: f64) -> Intensities {
        if self.scale_decoys {
            let base = self.intensities;
            Intensities {
                mu,
                v1: base.v1 * mu / base.mu,
                v2: base.v2 * mu / base.mu,
            }
        } else {
            Intensities {
                mu,
                ..self.intensities
            }
        }
    }

    /// Signal intensities visited at each distance.
    pub fn mu_values(&self) -> Vec<f64> {
        self.mu_grid
            .clone()
            .unwrap_or_else(|| vec![self.intensities.mu])
    }
}

/// `start, start+step, …` up to `stop` inclusive (with rounding slack).
fn inclusive_range(field: &str, start: f64, stop: f64, step: f64) -> Result<Vec<f64>, ConfigError> {
    if !(start.is_finite() && stop.is_finite()) {
        return Err(invalid(field, "range ends must be finite"));
    }
    if stop < start {
        return Err(invalid(field, format!("empty range {start}..{stop}")));
    }
    if stop == start {
        return Ok(vec![start]);
    }
    if !(step > 0.0) {
        return Err(invalid(field, "step must be positive"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    if count > 1_000_000 {
        return Err(invalid(field, "range has more than a million points"));
    }
    Ok((0..=count).map(|i| start + step * i as f64).collect())
}

fn unit(field: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(field, format!("{v} is outside [0, 1]")))
    }
}

/// Parses and validates configuration text. Relative PND paths resolve against `base_dir`.
pub fn parse_config(text: &str, base_dir: Option<&Path>) -> Result<ScenarioConfig, ConfigError> {
    parse_named(text, base_dir, "<config>")
}

fn parse_named(
    text: &str,
    base_dir: Option<&Path>,
    name: &str,
) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: name.to_string(),
        message: e.to_string(),
    })?;

    let channel = raw.channel.unwrap_or_default();
    channel
        .validate()
        .map_err(|e| invalid("channel", e.to_string()))?;

    unit("monitor.eta_d", raw.monitor.eta_d)?;
    if raw.monitor.mode == MonitorMode::Passive && raw.monitor.eta_d == 0.0 {
        return Err(invalid(
            "monitor.eta_d",
            "a passive monitor needs a positive detector efficiency",
        ));
    }
    let lambdas = raw.monitor.lambda.into_vec();
    if lambdas.is_empty() {
        return Err(invalid("monitor.lambda", "at least one value is required"));
    }
    if let Some(l) = lambdas.iter().find(|l| !(0.0..=MAX_LAMBDA).contains(*l)) {
        return Err(invalid(
            "monitor.lambda",
            format!("{l} is outside [0, {MAX_LAMBDA}]"),
        ));
    }

    let src = raw.source;
    if src.n_max < 3 || src.n_max > 200 {
        return Err(invalid("source.n_max", "must be between 3 and 200"));
    }
    let source = match src.model {
        SourceModel::Poisson => {
            if src.pnd_file.is_some() {
                return Err(invalid(
                    "source.pnd_file",
                    "only used with model = \"file\"",
                ));
            }
            if !(src.mean > 0.0 && src.mean <= 0.5 * src.n_max as f64) {
                return Err(invalid(
                    "source.mean",
                    format!("{} must be in (0, n_max/2]", src.mean),
                ));
            }
            PhotonNumberDistribution::poisson(src.mean, src.n_max)
                .map_err(|e| invalid("source.mean", e.to_string()))?
        }
        SourceModel::File => {
            let rel = src
                .pnd_file
                .ok_or_else(|| invalid("source.pnd_file", "required with model = \"file\""))?;
            let path = match base_dir {
                Some(dir) if rel.is_relative() => dir.join(&rel),
                _ => rel,
            };
            let shown = path.display().to_string();
            let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Io {
                path: shown.clone(),
                source,
            })?;
            PhotonNumberDistribution::from_text(&text).map_err(|e| ConfigError::PndFile {
                path: shown,
                message: e.to_string(),
            })?
        }
    };

    let ri = raw.intensities;
    let intensities = Intensities {
        mu: ri.mu,
        v1: ri.v1,
        v2: ri.v2,
    };
    for (field, v) in [
        ("intensities.mu", ri.mu),
        ("intensities.v1", ri.v1),
        ("intensities.v2", ri.v2),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(field, format!("{v} must be positive")));
        }
    }
    let class_probs = ClassProbabilities {
        signal: ri.p_signal,
        decoy1: ri.p_decoy1,
        decoy2: ri.p_decoy2,
        vacuum: ri.p_vacuum,
    };
    for (field, p) in [
        ("intensities.p_signal", ri.p_signal),
        ("intensities.p_decoy1", ri.p_decoy1),
        ("intensities.p_decoy2", ri.p_decoy2),
        ("intensities.p_vacuum", ri.p_vacuum),
    ] {
        if !(p > 0.0 && p < 1.0) {
            return Err(invalid(field, format!("{p} is outside (0, 1)")));
        }
    }
    class_probs
        .validate()
        .map_err(|e| invalid("intensities", e.to_string()))?;

    let d = raw.data;
    let data_sizes: Vec<f64> = match d.sizes {
        SizeList::One(s) => vec![s.0],
        SizeList::Many(v) => v.into_iter().map(|s| s.0).collect(),
    };
    if data_sizes.is_empty() {
        return Err(invalid("data.sizes", "at least one value is required"));
    }
    if let Some(m) = data_sizes.iter().find(|m| !(**m >= 1.0)) {
        return Err(invalid(
            "data.sizes",
            format!("{m} must be at least 1 or \"infinite\""),
        ));
    }
    if !(d.confidence > 0.0 && d.confidence < 1.0) {
        return Err(invalid(
            "data.confidence",
            format!("{} is outside (0, 1)", d.confidence),
        ));
    }
    if d.mode == DataMode::MonteCarlo && data_sizes.iter().any(|m| !m.is_finite()) {
        return Err(invalid(
            "data.sizes",
            "Monte-Carlo mode needs finite data sizes",
        ));
    }

    let s = raw.sweep;
    let distances_km = inclusive_range("sweep", s.start_km, s.stop_km, s.step_km)?;
    if distances_km[0] < 0.0 {
        return Err(invalid("sweep.start_km", "distances must be non-negative"));
    }
    let mu_grid = if s.optimize_mu {
        if !(s.mu_min > 0.0) {
            return Err(invalid("sweep.mu_min", "must be positive"));
        }
        Some(inclusive_range("sweep.mu", s.mu_min, s.mu_max, s.mu_step)?)
    } else {
        None
    };
    let objective = match s.objective {
        RawObjective::Case1 => Objective::Case1,
        RawObjective::Case2 => Objective::Case2,
    };

    // Every signal level must be reachable with VOA attenuation ≤ 1.
    let out = match raw.monitor.mode {
        MonitorMode::Active => 1.0,
        MonitorMode::Passive => raw.monitor.eta_d / (1.0 + raw.monitor.eta_d),
    };
    let reach = source.mean() * out;
    let top_mu = mu_grid
        .as_ref()
        .map_or(ri.mu, |g| g.iter().copied().fold(ri.mu, f64::max));
    let top = if ri.scale_decoys {
        top_mu * (ri.v1.max(ri.v2) / ri.mu).max(1.0)
    } else {
        top_mu.max(ri.v1).max(ri.v2)
    };
    if top > reach {
        return Err(invalid(
            "intensities",
            format!("intensity {top} exceeds the {reach:.4} reachable from the source through the monitor"),
        ));
    }

    Ok(ScenarioConfig {
        channel,
        monitor_mode: raw.monitor.mode,
        eta_d: raw.monitor.eta_d,
        lambdas,
        source_model: src.model,
        source,
        intensities,
        class_probs,
        scale_decoys: ri.scale_decoys,
        data_sizes,
        confidence: d.confidence,
        data_mode: d.mode,
        seed: d.seed,
        distances_km,
        mu_grid,
        objective,
        condition_basis: raw.analysis.condition_basis,
        subtract_vacuum_errors: raw.analysis.subtract_vacuum_errors,
    })
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_named(&text, path.parent(), &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let c = parse_config("", None).unwrap();
        assert_eq!(c.channel, ChannelParams::gys());
        assert_eq!(c.intensities, Intensities::default());
        assert_eq!(c.class_probs, ClassProbabilities::default());
        assert_eq!(c.lambdas, vec![0.0]);
        assert!(c.data_sizes[0].is_infinite());
        assert_eq!(c.monitor_mode, MonitorMode::Passive);
        assert!(c.mu_grid.is_none());
        assert!(c.subtract_vacuum_errors);
    }

    #[test]
    fn confidence_out_of_range() {
        let err = parse_config("[data]\nconfidence = 1.5\n", None).unwrap_err();
        assert!(err.to_string().contains("data.confidence"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected_with_line() {
        let err = parse_config("[channel]\nalpha_db_per_km = 0.2\nbogus = 1\n", None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus") && msg.contains("line 3"), "{msg}");
        assert!(parse_config("[nonsense]\n", None).is_err());
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse_config("[data]\nconfidence = = 2\n", None).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn sizes_accept_numbers_and_infinite() {
        let c = parse_config("[data]\nsizes = [\"infinite\", 1e12, 1000000000]\n", None).unwrap();
        assert!(c.data_sizes[0].is_infinite());
        assert_eq!(&c.data_sizes[1..], &[1e12, 1e9]);
        assert!(parse_config("[data]\nsizes = [\"lots\"]\n", None).is_err());
        assert!(parse_config("[data]\nsizes = 0\n", None).is_err());
    }

    #[test]
    fn lambda_scalar_or_list() {
        let c = parse_config("[monitor]\nlambda = 0.5\n", None).unwrap();
        assert_eq!(c.lambdas, vec![0.5]);
        let c = parse_config("[monitor]\nlambda = [0.0, 1e-6, 1.0]\n", None).unwrap();
        assert_eq!(c.lambdas, vec![0.0, 1e-6, 1.0]);
        assert!(parse_config("[monitor]\nlambda = -1.0\n", None).is_err());
    }

    #[test]
    fn sweep_ranges() {
        let c = parse_config("[sweep]\nstart_km = 0\nstop_km = 80\nstep_km = 1\n", None).unwrap();
        assert_eq!(c.distances_km.len(), 81);
        assert_eq!(c.distances_km[80], 80.0);
        assert!(parse_config("[sweep]\nstart_km = 10\nstop_km = 0\n", None).is_err());
        let c = parse_config(
            "[sweep]\noptimize_mu = true\nmu_min = 0.1\nmu_max = 0.3\nmu_step = 0.1\n",
            None,
        )
        .unwrap();
        assert_eq!(c.mu_grid.unwrap().len(), 3);
    }

    #[test]
    fn unreachable_intensity_rejected() {
        let err = parse_config("[intensities]\nmu = 0.9\n", None).unwrap_err();
        assert!(err.to_string().contains("intensities"));
        assert!(parse_config(
            "[intensities]\nmu = 0.9\n[monitor]\nmode = \"active\"\n",
            None
        )
        .is_ok());
    }

    #[test]
    fn probabilities_must_sum_to_one() {
        assert!(parse_config("[intensities]\np_signal = 0.6\n", None).is_err());
    }

    #[test]
    fn pnd_file_normalisation_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("p.txt"), "0.5\n0.48\n").unwrap();
        let text = "[source]\nmodel = \"file\"\npnd_file = \"p.txt\"\n[monitor]\nmode = \"active\"\n[intensities]\nmu = 0.3\nv1 = 0.05\nv2 = 0.01\n";
        let err = parse_config(text, Some(dir.path())).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("tolerance"), "{msg}");

        std::fs::write(dir.path().join("p.txt"), "# custom source\n0.2\n0.3\n0.5\n").unwrap();
        let c = parse_config(text, Some(dir.path())).unwrap();
        assert_eq!(c.source_model, SourceModel::File);
        assert!((c.source_mean() - 1.3).abs() < 1e-12);
    }

    #[test]
    fn scaled_decoys_follow_mu() {
        let c = parse_config("[intensities]\nscale_decoys = true\n", None).unwrap();
        let i = c.intensities_for(0.6);
        assert!((i.v1 - 0.1).abs() < 1e-15 && (i.v2 - 0.02).abs() < 1e-15);
    }
}

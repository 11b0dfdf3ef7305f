//! Scenario sweeps: tallies → source bounds → conditions → gain bounds → key
//! rates, one row per distance, and the CSV format they are written in.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::channel::{trusted_keyrate, ChannelParams, TrustedMode, YieldTable};
use crate::config::{ConditionBasis, DataMode, ScenarioConfig};
use crate::decoy::{
    check_conditions, clopper_pearson_tail, q1_lower, q2_lower, ConditionReport, ObservedRates,
    SourceBounds,
};
use crate::error::{Error, Result};
use crate::keyrate::{keyrate_case1, keyrate_case2, optimize_intensity, KeyRateReport};
use crate::monitor::{
    choose_cutoff_j, exact_bounds, expected_tallies, infinite_data_cutoff, monitor_output_pnd,
    monitored_pnd_at_detector, point_estimates, sample_tallies, source_bounds, MonitorConfig,
    SourceClass, SourceScenario, TallyRecord,
};

/// CSV header, in column order.
pub const CSV_COLUMNS: [&str; 13] = [
    "distance_km",
    "mu",
    "rate_case1",
    "rate_case2",
    "rate_trusted_1ph",
    "rate_trusted_2ph",
    "q1_lower",
    "q2_lower",
    "e_mu",
    "cond_case1",
    "cond_case2",
    "c_value",
    "confidence",
];

/// Share of the failure budget given to the unobserved decoy-1 tail.
const TAIL_FAILURE_SHARE: f64 = 0.25;

/// One member of a sweep family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyKey {
    pub m_total: f64,
    pub lambda: f64,
}

impl FamilyKey {
    /// File-name suffix, e.g. `M-1e12_lambda-5e-1`.
    pub fn suffix(&self) -> String {
        let m = if self.m_total.is_infinite() {
            "inf".to_string()
        } else {
            format!("{:e}", self.m_total)
        };
        format!("M-{m}_lambda-{:e}", self.lambda)
    }
}

/// Rows for one `(M, λ)` member, sorted by distance.
#[derive(Debug, Clone)]
pub struct ResultTable {
    pub key: FamilyKey,
    pub rows: Vec<KeyRateReport>,
}

/// Pipeline inputs for one evaluation.
struct Point<'a> {
    config: &'a ScenarioConfig,
    distance_km: f64,
    mu: f64,
    key: FamilyKey,
    seed: u64,
}

/// Worst-case rates and the conditions that gated them.
fn gated_rates(
    config: &ScenarioConfig,
    channel: &ChannelParams,
    bounds: &SourceBounds,
    gate: ConditionReport,
    rates: &ObservedRates,
    e_mu: f64,
) -> Result<(f64, f64, f64, f64, f64, f64)> {
    let inapplicable_is_zero = |r: Result<f64>| match r {
        Ok(v) => Ok(v),
        Err(Error::Inapplicable(_)) => Ok(0.0),
        Err(e) => Err(e),
    };
    let q1 = if gate.case1_ok {
        inapplicable_is_zero(q1_lower(bounds, rates))?
    } else {
        0.0
    };
    let q2 = if gate.case2_ok() {
        inapplicable_is_zero(q2_lower(bounds, rates, &gate))?
    } else {
        0.0
    };
    let vacuum_errors = if config.subtract_vacuum_errors {
        channel.e0 * bounds.a_prime_lo[0] * rates.y0_obs
    } else {
        0.0
    };
    let rate1 = if gate.case1_ok {
        keyrate_case1(q1, rates.q_mu, e_mu, channel.f_ec, vacuum_errors)?
    } else {
        0.0
    };
    let (rate2, e1, e2) = if gate.case2_ok() {
        let r = keyrate_case2(q1, q2, rates.q_mu, e_mu, channel.f_ec, vacuum_errors)?;
        (r.rate, r.e1, r.e2)
    } else if q1 > 0.0 {
        let total = (rates.q_mu * e_mu - vacuum_errors).max(0.0);
        (0.0, (total / q1).min(0.5), 0.0)
    } else {
        (0.0, 0.0, 0.0)
    };
    Ok((q1, q2, rate1, rate2, e1, e2))
}

fn observed(tally: &TallyRecord, config: &ScenarioConfig, mu: f64) -> ObservedRates {
    let i = config.intensities_for(mu);
    ObservedRates {
        q_mu: tally.q_mu(),
        q_d1: tally.q_d1(),
        q_d2: tally.q_d2(),
        y0_obs: tally.y0_obs(),
        mu: i.mu,
        v1: i.v1,
        v2: i.v2,
        p_signal: config.class_probs.signal,
        p_decoy1: config.class_probs.decoy1,
        p_decoy2: config.class_probs.decoy2,
        p_vacuum: config.class_probs.vacuum,
        m_total: tally.m_total,
    }
}

fn evaluate(point: &Point) -> Result<KeyRateReport> {
    let config = point.config;
    let channel = config.channel.at_distance(point.distance_km);
    let intensities = config.intensities_for(point.mu);
    let monitor = MonitorConfig::for_intensities(
        config.monitor_mode,
        config.eta_d,
        point.key.lambda,
        config.source_mean(),
        &intensities,
    )?;
    let scenario = SourceScenario {
        source: config.source.clone(),
        monitor,
        channel,
        intensities,
        class_probs: config.class_probs,
        m_total: point.key.m_total,
    };

    let (bounds, gate_bounds, rates, e_mu, confidence, chain_max) =
        if point.key.m_total.is_infinite() {
            let table = YieldTable::new(&channel, config.source.n_max());
            let gains = |class| -> Result<(f64, f64)> {
                table.gain_qber(&monitor_output_pnd(&config.source, &monitor, class)?)
            };
            let (q_mu, e_mu) = gains(SourceClass::Signal)?;
            let (q_d1, _) = gains(SourceClass::Decoy1)?;
            let (q_d2, _) = gains(SourceClass::Decoy2)?;
            let decoy1 = monitored_pnd_at_detector(&config.source, &monitor, SourceClass::Decoy1)?;
            let j = infinite_data_cutoff(&decoy1);
            let bounds = exact_bounds(&config.source, &monitor, j)?;
            let rates = ObservedRates {
                q_mu,
                q_d1,
                q_d2,
                y0_obs: table.y_n[0],
                mu: intensities.mu,
                v1: intensities.v1,
                v2: intensities.v2,
                p_signal: config.class_probs.signal,
                p_decoy1: config.class_probs.decoy1,
                p_decoy2: config.class_probs.decoy2,
                p_vacuum: config.class_probs.vacuum,
                m_total: f64::INFINITY,
            };
            (bounds.clone(), bounds, rates, e_mu, 1.0, j.max(3))
        } else {
            let tally = match config.data_mode {
                DataMode::Expectation => expected_tallies(&scenario)?,
                DataMode::MonteCarlo => sample_tallies(&scenario, point.seed)?,
            };
            let failure = 1.0 - config.confidence;
            let tail_failure = TAIL_FAILURE_SHARE * failure;
            let bounds =
                source_bounds(&tally, &monitor, 1.0 - (1.0 - TAIL_FAILURE_SHARE) * failure)?;
            let p_j_u = clopper_pearson_tail(tally.m_1, tail_failure)?;
            let mut rates = observed(&tally, config, point.mu);
            rates.q_d1 = (rates.q_d1 - p_j_u).max(0.0);
            let j = choose_cutoff_j(&tally)?;
            let chain_max = if point.key.lambda > 0.0 { 3 } else { j.max(3) };
            let gate_bounds = match config.condition_basis {
                ConditionBasis::Estimates => point_estimates(&tally, &monitor)?,
                ConditionBasis::Bounds => bounds.clone(),
            };
            let confidence = 1.0 - ((1.0 - bounds.confidence) + tail_failure);
            (
                bounds,
                gate_bounds,
                rates,
                tally.e_mu(),
                confidence,
                chain_max,
            )
        };
    rates.validate()?;

    let on_bounds = check_conditions(&bounds, chain_max);
    let on_gate = check_conditions(&gate_bounds, chain_max);
    let gate = ConditionReport {
        case1_ok: on_gate.case1_ok,
        case2_ratio_ok: on_gate.case2_ratio_ok,
        c_value: on_bounds.c_value,
        case2_c_ok: on_bounds.case2_c_ok,
    };
    let (q1, q2, rate_case1, rate_case2, e1, e2) =
        gated_rates(config, &channel, &bounds, gate, &rates, e_mu)?;

    let report = KeyRateReport {
        distance_km: point.distance_km,
        mu: point.mu,
        q_mu: rates.q_mu,
        e_mu,
        q1_lower: q1,
        q2_lower: q2,
        e1_used: e1,
        e2_used: e2,
        rate_case1,
        rate_case2,
        rate_trusted_1ph: trusted_keyrate(&channel, point.mu, TrustedMode::OnePhoton)?,
        rate_trusted_2ph: trusted_keyrate(&channel, point.mu, TrustedMode::TwoPhoton)?,
        conditions: gate,
        confidence,
    };
    report.check()?;
    Ok(report)
}

/// Evaluates one distance, optimising `μ` when the config asks for it.
///
/// With optimisation, each rate column is the best over the grid for that
/// curve; the remaining fields belong to the objective's best `μ`.
fn evaluate_distance(
    config: &ScenarioConfig,
    key: FamilyKey,
    distance_km: f64,
    seed: u64,
) -> Result<KeyRateReport> {
    let run = |mu: f64| {
        evaluate(&Point {
            config,
            distance_km,
            mu,
            key,
            seed,
        })
    };
    let Some(grid) = &config.mu_grid else {
        return run(config.intensities.mu);
    };
    let mut envelope = [0.0f64; 4];
    let (_, mut best) = optimize_intensity(grid, config.objective, |mu| {
        let r = run(mu)?;
        for (slot, v) in envelope.iter_mut().zip([
            r.rate_case1,
            r.rate_case2,
            r.rate_trusted_1ph,
            r.rate_trusted_2ph,
        ]) {
            *slot = slot.max(v);
        }
        Ok(r)
    })?;
    best.rate_case1 = envelope[0];
    best.rate_case2 = envelope[1];
    best.rate_trusted_1ph = envelope[2];
    best.rate_trusted_2ph = envelope[3];
    Ok(best)
}

/// Stable per-point seed for Monte-Carlo mode.
fn point_seed(base: u64, family: usize, distance_index: usize) -> u64 {
    let mut z = base ^ ((family as u64) << 32) ^ distance_index as u64;
    // splitmix64 finaliser
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Family members in output order: data sizes as listed, then λ as listed.
pub fn family_keys(config: &ScenarioConfig) -> Vec<FamilyKey> {
    config
        .data_sizes
        .iter()
        .flat_map(|&m_total| {
            config
                .lambdas
                .iter()
                .map(move |&lambda| FamilyKey { m_total, lambda })
        })
        .collect()
}

/// Runs every family member over the distance sweep.
///
/// Points are evaluated in parallel; output order depends only on the config.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Vec<ResultTable>> {
    let keys = family_keys(config);
    let jobs: Vec<(usize, usize)> = (0..keys.len())
        .flat_map(|f| (0..config.distances_km.len()).map(move |d| (f, d)))
        .collect();
    let rows: Vec<KeyRateReport> =
        jobs.par_iter()
            .map(|&(f, d)| {
                let distance_km = config.distances_km[d];
                evaluate_distance(config, keys[f], distance_km, point_seed(config.seed, f, d))
                    .map_err(|e| Error::SweepPoint {
                        distance_km,
                        source: Box::new(e),
                    })
            })
            .collect::<Result<_>>()?;
    let per_family = config.distances_km.len();
    let mut rows = rows.into_iter();
    Ok(keys
        .into_iter()
        .map(|key| {
            let mut family: Vec<KeyRateReport> = rows.by_ref().take(per_family).collect();
            family.sort_by(|a, b| a.distance_km.total_cmp(&b.distance_km));
            ResultTable { key, rows: family }
        })
        .collect())
}

fn number(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.11e}")
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Writes a table as CSV with 12 significant digits.
pub fn write_csv<W: Write>(table: &ResultTable, out: W) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::Invalid("empty result table".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in &table.rows {
        w.write_record([
            number(r.distance_km),
            number(r.mu),
            number(r.rate_case1),
            number(r.rate_case2),
            number(r.rate_trusted_1ph),
            number(r.rate_trusted_2ph),
            number(r.q1_lower),
            number(r.q2_lower),
            number(r.e_mu),
            flag(r.conditions.case1_ok).to_string(),
            flag(r.conditions.case2_ok()).to_string(),
            number(r.conditions.c_value),
            number(r.confidence),
        ])?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "<csv>".into(),
        source,
    })?;
    Ok(())
}

pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_csv(table, std::io::BufWriter::new(file))
}

/// Output path for each table: `out` itself for a single table, otherwise
/// `<stem>_<suffix>.<ext>` next to it.
pub fn output_paths(out: &Path, tables: &[ResultTable]) -> Vec<PathBuf> {
    if tables.len() == 1 {
        return vec![out.to_path_buf()];
    }
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = out
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    tables
        .iter()
        .map(|t| out.with_file_name(format!("{stem}_{}.{ext}", t.key.suffix())))
        .collect()
}

/// Parsed CSV row, used by the validator and by tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvRow {
    pub distance_km: f64,
    pub mu: f64,
    pub rate_case1: f64,
    pub rate_case2: f64,
    pub rate_trusted_1ph: f64,
    pub rate_trusted_2ph: f64,
    pub q1_lower: f64,
    pub q2_lower: f64,
    pub e_mu: f64,
    pub cond_case1: bool,
    pub cond_case2: bool,
    pub c_value: f64,
    pub confidence: f64,
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_COLUMNS {
        return Err(Error::Invalid(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != CSV_COLUMNS.len() {
            return Err(Error::Invalid(format!(
                "line {line}: {} columns",
                rec.len()
            )));
        }
        let num = |k: usize| -> Result<f64> {
            rec[k]
                .parse::<f64>()
                .map_err(|_| Error::Invalid(format!("line {line}: `{}` is not a number", &rec[k])))
        };
        let flag = |k: usize| -> Result<bool> {
            match &rec[k] {
                "1" => Ok(true),
                "0" => Ok(false),
                other => Err(Error::Invalid(format!(
                    "line {line}: flag `{other}` is not 0 or 1"
                ))),
            }
        };
        rows.push(CsvRow {
            distance_km: num(0)?,
            mu: num(1)?,
            rate_case1: num(2)?,
            rate_case2: num(3)?,
            rate_trusted_1ph: num(4)?,
            rate_trusted_2ph: num(5)?,
            q1_lower: num(6)?,
            q2_lower: num(7)?,
            e_mu: num(8)?,
            cond_case1: flag(9)?,
            cond_case2: flag(10)?,
            c_value: num(11)?,
            confidence: num(12)?,
        });
    }
    Ok(rows)
}

/// Re-checks the row invariants of an emitted CSV; returns the row count.
pub fn validate_csv(path: &Path) -> Result<usize> {
    let rows = read_csv(path)?;
    if rows.is_empty() {
        return Err(Error::Invalid("no data rows".into()));
    }
    let mut prev = f64::NEG_INFINITY;
    for (i, r) in rows.iter().enumerate() {
        let line = i + 2;
        let bad = |what: &str| Err(Error::Invalid(format!("line {line}: {what}")));
        if !(r.distance_km >= prev) {
            return bad("rows not sorted by distance");
        }
        prev = r.distance_km;
        if !(r.mu > 0.0) {
            return bad("mu must be positive");
        }
        for (name, v) in [
            ("rate_case1", r.rate_case1),
            ("rate_case2", r.rate_case2),
            ("rate_trusted_1ph", r.rate_trusted_1ph),
            ("rate_trusted_2ph", r.rate_trusted_2ph),
            ("q1_lower", r.q1_lower),
            ("q2_lower", r.q2_lower),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(&format!("{name} = {v} is not a non-negative number"));
            }
        }
        if !(0.0..=1.0).contains(&r.e_mu) {
            return bad("e_mu outside [0, 1]");
        }
        if r.rate_case1 > 0.0 && !r.cond_case1 {
            return bad("positive case-1 rate with failing case-1 condition");
        }
        if r.rate_case2 > 0.0 && !r.cond_case2 {
            return bad("positive case-2 rate with failing case-2 condition");
        }
        if r.cond_case2 && !(r.c_value > 0.0) {
            return bad("case-2 condition set but c is not positive");
        }
        if r.q2_lower > 0.0 && !r.cond_case2 {
            return bad("q2_lower reported without case-2 condition");
        }
        if !(r.confidence > 0.0 && r.confidence <= 1.0) {
            return bad("confidence outside (0, 1]");
        }
    }
    Ok(rows.len())
}

//! File emission and parsing: CSV/JSON artifact formats shared by the
//! command-line entry points, the examples, and the test suite.
//!
//! Every writer goes through [`write_atomic`] (temp-then-rename), so a
//! failed run never leaves a partial artifact behind. All floats are
//! printed with Rust's shortest round-trip formatting, which makes outputs
//! byte-identical across repeated runs of the same configuration.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cost::CostLedger;
use crate::engine::{DiagnosticsTrace, WeightedSample};
use crate::error::{Error, Result};
use crate::mh::MoveRecord;
use crate::target::ExactTarget;
use crate::TokenId;

/// Writes a file atomically: the contents land in a sibling `.tmp` file
/// which is renamed over the destination only once fully written.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let file_name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Input(format!("not a writable file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!("{file_name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Dash-joined token rendering: `[0, 2, 1]` becomes `"0-2-1"`.
pub fn format_sequence(tokens: &[TokenId]) -> String {
    tokens
        .iter()
        .map(|t| t.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

/// Inverse of [`format_sequence`]; the empty string is the empty sequence.
pub fn parse_sequence(text: &str) -> Result<Vec<TokenId>> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split('-')
        .map(|part| {
            part.parse::<TokenId>()
                .map_err(|_| Error::Input(format!("bad token id {part:?} in sequence {text:?}")))
        })
        .collect()
}

fn fmt(x: f64) -> String {
    if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{x}")
    }
}

fn parse_f64(text: &str, what: &str) -> Result<f64> {
    text.parse::<f64>()
        .map_err(|_| Error::Input(format!("bad {what} value {text:?}")))
}

/// Sidecar metadata emitted next to an enumerated target CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSidecar {
    pub alpha: f64,
    #[serde(rename = "log_Z_alpha")]
    pub log_z_alpha: f64,
    pub num_sequences: usize,
}

/// Enumerated target: CSV columns `sequence,log_p,log_pi_alpha`.
pub fn write_target_csv(path: &Path, target: &ExactTarget) -> Result<()> {
    let mut out = String::from("sequence,log_p,log_pi_alpha\n");
    for entry in target.entries() {
        out.push_str(&format!(
            "{},{},{}\n",
            format_sequence(&entry.sequence),
            fmt(entry.log_p),
            fmt(entry.log_pi)
        ));
    }
    write_atomic(path, &out)
}

pub fn write_target_sidecar(path: &Path, target: &ExactTarget) -> Result<()> {
    let sidecar = TargetSidecar {
        alpha: target.alpha(),
        log_z_alpha: target.log_z_alpha(),
        num_sequences: target.entries().len(),
    };
    write_json(path, &sidecar)
}

/// Reads a target back from its CSV and sidecar pair.
pub fn read_target(csv_path: &Path, sidecar_path: &Path) -> Result<ExactTarget> {
    let sidecar: TargetSidecar = read_json(sidecar_path)?;
    let body = fs::read_to_string(csv_path)?;
    let mut rows = Vec::new();
    for (idx, line) in body.lines().enumerate() {
        if idx == 0 {
            if line != "sequence,log_p,log_pi_alpha" {
                return Err(Error::Input(format!(
                    "unexpected target CSV header {line:?}"
                )));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Input(format!(
                "target CSV line {} has {} fields, expected 3",
                idx + 1,
                fields.len()
            )));
        }
        rows.push(crate::target::TargetEntry {
            sequence: parse_sequence(fields[0])?,
            log_p: parse_f64(fields[1], "log_p")?,
            log_pi: parse_f64(fields[2], "log_pi_alpha")?,
        });
    }
    Ok(ExactTarget::from_rows(sidecar.alpha, sidecar.log_z_alpha, rows))
}

/// Weighted sample set: CSV columns `sequence,log_p,weight` — the target
/// columns with the normalized weight in place of the exact mass.
pub fn write_samples_csv(path: &Path, samples: &[WeightedSample]) -> Result<()> {
    let mut out = String::from("sequence,log_p,weight\n");
    for sample in samples {
        out.push_str(&format!(
            "{},{},{}\n",
            format_sequence(&sample.sequence),
            fmt(sample.log_p),
            fmt(sample.weight)
        ));
    }
    write_atomic(path, &out)
}

/// Reads a samples CSV into `(sequence, log_p, weight)` rows.
pub fn read_samples_csv(path: &Path) -> Result<Vec<(Vec<TokenId>, f64, f64)>> {
    let body = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (idx, line) in body.lines().enumerate() {
        if idx == 0 {
            if line != "sequence,log_p,weight" {
                return Err(Error::Input(format!(
                    "unexpected samples CSV header {line:?}"
                )));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Input(format!(
                "samples CSV line {} has {} fields, expected 3",
                idx + 1,
                fields.len()
            )));
        }
        rows.push((
            parse_sequence(fields[0])?,
            parse_f64(fields[1], "log_p")?,
            parse_f64(fields[2], "weight")?,
        ));
    }
    Ok(rows)
}

/// Per-step diagnostics: CSV columns
/// `step,ess,resampled,alpha_stage,log_normalizer_increment,num_done`.
pub fn write_trace_csv(path: &Path, trace: &DiagnosticsTrace) -> Result<()> {
    let mut out =
        String::from("step,ess,resampled,alpha_stage,log_normalizer_increment,num_done\n");
    for row in &trace.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.step,
            fmt(row.ess),
            u8::from(row.resampled),
            fmt(row.alpha_stage),
            fmt(row.log_normalizer_increment),
            row.num_done
        ));
    }
    write_atomic(path, &out)
}

/// MH move log: CSV columns
/// `block,move,edit_index,suffix_len,accepted,log_p_old,log_p_new`.
pub fn write_moves_csv(path: &Path, records: &[MoveRecord]) -> Result<()> {
    let mut out = String::from("block,move,edit_index,suffix_len,accepted,log_p_old,log_p_new\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.block,
            r.mv,
            r.edit_index,
            r.suffix_len,
            u8::from(r.accepted),
            fmt(r.log_p_old),
            fmt(r.log_p_new)
        ));
    }
    write_atomic(path, &out)
}

/// Per-run ledger table: CSV columns `run,token_evals,suffix_tokens`.
pub fn write_ledgers_csv(path: &Path, ledgers: &[CostLedger]) -> Result<()> {
    let mut out = String::from("run,token_evals,suffix_tokens\n");
    for (i, ledger) in ledgers.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{}\n",
            i,
            ledger.token_evals(),
            ledger.total_suffix_tokens()
        ));
    }
    write_atomic(path, &out)
}

/// Serializes any value as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    write_atomic(path, &body)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let body = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&body)?)
}

/// Summary emitted by the particle-engine commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineSummary {
    pub command: String,
    pub alpha: f64,
    pub n_particles: usize,
    pub t_max: usize,
    pub kappa: f64,
    pub resampler: String,
    pub seed: u64,
    pub log_z_estimate: f64,
    pub token_evals: u64,
    pub num_resamples: usize,
    pub sample: String,
    pub sample_terminated: bool,
}

/// Summary emitted by the MH command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MhSummary {
    pub command: String,
    pub alpha: f64,
    pub horizon: usize,
    pub block: usize,
    pub moves_per_block: usize,
    pub regime: String,
    pub tau_prop: f64,
    pub seed: u64,
    pub acceptance_rate: f64,
    pub token_evals: u64,
    pub suffix_tokens: u64,
    pub final_sequence: String,
    pub terminated: bool,
}

/// One row of a comparison report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub name: String,
    /// Total variation distance of the run's empirical distribution to the
    /// oracle target.
    pub tv: f64,
    /// The run's normalizer estimate, when its summary carried one.
    pub log_z_estimate: Option<f64>,
    /// Relative normalizer error `|Z_hat - Z| / Z`, when available.
    pub normalizer_error: Option<f64>,
    pub token_evals: Option<u64>,
    /// Token-eval ratio against the first run in the report.
    pub ledger_ratio: Option<f64>,
}

/// Comparison of one or more runs against an enumerated oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub alpha: f64,
    #[serde(rename = "log_Z_alpha")]
    pub log_z_alpha: f64,
    pub runs: Vec<CompareRow>,
}

pub fn write_compare_csv(path: &Path, report: &CompareReport) -> Result<()> {
    let mut out =
        String::from("name,tv,log_z_estimate,normalizer_error,token_evals,ledger_ratio\n");
    let opt = |x: Option<f64>| x.map(fmt).unwrap_or_default();
    for row in &report.runs {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.name,
            fmt(row.tv),
            opt(row.log_z_estimate),
            opt(row.normalizer_error),
            row.token_evals.map(|v| v.to_string()).unwrap_or_default(),
            opt(row.ledger_ratio)
        ));
    }
    write_atomic(path, &out)
}

/// Temperature-mismatch demonstration report: per-token tempering against
/// the true power target, with the engine's distance alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchReport {
    pub alpha: f64,
    /// Per-token temperature used for the mismatch column, `1 / alpha`.
    pub tau: f64,
    pub tv_temperature: f64,
    pub tv_smc: f64,
    pub n_particles: usize,
    pub seed: u64,
}

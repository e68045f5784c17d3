//! Results CSV: one row per experiment spec.

use std::path::Path;

use serde::Deserialize;

use crate::domain::ClassId;
use crate::error::{Error, Result};
use crate::runner::experiment::AggregateRecord;
use crate::runner::grid::Regime;
use crate::sampling::SamplerKind;

pub const COLUMNS: [&str; 17] = [
    "fm_id",
    "class",
    "regime",
    "train_aoi",
    "target_aoi",
    "sampler",
    "n_train",
    "n_test",
    "repetitions",
    "r_mean",
    "r_std",
    "rmse_mean",
    "rmse_std",
    "degenerate_runs",
    "infeasible",
    "wall_ms",
    "base_seed",
];

pub fn header_line() -> String {
    COLUMNS.join(",") + "\n"
}

/// Formats like C's `%.6g`: six significant digits, trailing zeros
/// trimmed, exponent form outside `[1e-4, 1e6)`.
pub fn format_sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_line(fields: &[String]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(fields).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// CSV line (with trailing newline) for `rec`. Metric columns are empty
/// when the record has no metrics.
pub fn render_record(rec: &AggregateRecord) -> String {
    let s = &rec.spec;
    let metric = |f: fn(&crate::metrics::AggregateMetrics) -> f64| {
        rec.metrics.as_ref().map(|m| format_sig6(f(m))).unwrap_or_default()
    };
    csv_line(&[
        s.fm_id.clone(),
        s.class.to_string(),
        s.regime.to_string(),
        s.train_aoi.clone(),
        s.target_aoi.clone(),
        s.sampler.to_string(),
        s.n_train.to_string(),
        s.n_test.to_string(),
        s.repetitions.to_string(),
        metric(|m| m.r_mean),
        metric(|m| m.r_std),
        metric(|m| m.rmse_mean),
        metric(|m| m.rmse_std),
        rec.degenerate_runs.to_string(),
        rec.infeasible.to_string(),
        rec.wall_ms.to_string(),
        s.base_seed.to_string(),
    ])
}

/// A parsed results row.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct ResultRow {
    pub fm_id: String,
    pub class: ClassId,
    pub regime: Regime,
    pub train_aoi: String,
    pub target_aoi: String,
    pub sampler: SamplerKind,
    pub n_train: usize,
    pub n_test: usize,
    pub repetitions: usize,
    pub r_mean: Option<f64>,
    pub r_std: Option<f64>,
    pub rmse_mean: Option<f64>,
    pub rmse_std: Option<f64>,
    pub degenerate_runs: usize,
    pub infeasible: bool,
    pub wall_ms: u64,
    pub base_seed: u64,
}

impl ResultRow {
    /// Same identity as [`crate::runner::ExperimentSpec::result_key`].
    pub fn result_key(&self) -> String {
        format!(
            "{}|{}|{}|{}|{}|{}|{}|{}|{}|{}",
            self.regime,
            self.fm_id,
            self.class,
            self.train_aoi,
            self.target_aoi,
            self.sampler,
            self.n_train,
            self.n_test,
            self.repetitions,
            self.base_seed
        )
    }

    pub fn total_elements(&self) -> usize {
        self.n_train + self.n_test
    }
}

fn parse_line(line: &str) -> Option<ResultRow> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(line.as_bytes());
    let record = rdr.records().next()?.ok()?;
    if record.len() != COLUMNS.len() {
        return None;
    }
    let headers = csv::StringRecord::from(COLUMNS.to_vec());
    record.deserialize(Some(&headers)).ok()
}

/// Reads a results file strictly; any malformed row is an error.
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines();
    if lines.next() != Some(header_line().trim_end()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "missing or unexpected header".into(),
        });
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            parse_line(l).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 2,
                message: "malformed results row".into(),
            })
        })
        .collect()
}

/// Complete rows of a possibly truncated results file, as `(key, line)`
/// with the original line text (newline included). A final line without a
/// newline, rows that fail to parse and a wrong header are all skipped.
pub fn read_existing_lines(path: &Path) -> Result<Vec<(String, String)>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(source) => {
            return Err(Error::Read {
                path: path.to_path_buf(),
                source,
            })
        }
    };
    let mut out = Vec::new();
    let mut lines = text.split_inclusive('\n');
    if lines.next() != Some(header_line().as_str()) {
        return Ok(out);
    }
    for line in lines {
        if !line.ends_with('\n') {
            break;
        }
        if let Some(row) = parse_line(line.trim_end_matches('\n')) {
            out.push((row.result_key(), line.to_string()));
        }
    }
    Ok(out)
}

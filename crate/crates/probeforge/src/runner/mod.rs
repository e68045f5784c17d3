//! Ablation grid execution.
//!
//! Every spec carries its own seed, so specs can run on any number of
//! threads in any order. Rows are appended to the results file as specs
//! finish and the file is rewritten in canonical spec order at the end.
//! Rerunning with `resume` skips specs whose rows are already present.

pub mod experiment;
pub mod grid;
pub mod results;

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;

pub use experiment::{run_experiment, run_experiment_traced, AggregateRecord, DataCatalog, RepetitionTrace};
pub use grid::{enumerate_grid, ChipCounts, ExperimentSpec, GridSpec, Regime};
pub use results::{read_results, ResultRow};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
    pub resume: bool,
    /// Record wall time per spec. Off by default: timings differ between
    /// runs and would break byte-identical results files.
    pub record_timing: bool,
}

#[derive(Clone, Debug)]
pub struct GridRunSummary {
    pub total: usize,
    pub executed: usize,
    pub skipped: usize,
    /// Records of the specs executed in this run, in canonical order.
    pub records: Vec<AggregateRecord>,
}

/// Runs `specs` in parallel and returns records in input order.
pub fn run_specs(specs: &[ExperimentSpec], data: &DataCatalog, threads: Option<usize>) -> Result<Vec<AggregateRecord>> {
    with_pool(threads, || specs.par_iter().map(|s| run_experiment(s, data)).collect::<Result<Vec<_>>>())?
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Enumerates `grid`, runs every spec not already in `out` (when resuming)
/// and leaves `out` holding one row per spec in canonical order.
pub fn run_grid(grid: &GridSpec, data: &DataCatalog, out: &Path, opts: &RunOptions) -> Result<GridRunSummary> {
    let specs = enumerate_grid(grid, Some(data))?;
    if let Some(missing) = specs.iter().find(|s| data.dataset(&s.fm_id).is_none()) {
        return Err(Error::Config(format!("no embeddings for fm {:?}", missing.fm_id)));
    }

    let mut lines: HashMap<String, String> = HashMap::new();
    if opts.resume {
        let wanted: std::collections::HashSet<String> = specs.iter().map(|s| s.result_key()).collect();
        for (key, line) in results::read_existing_lines(out)? {
            if wanted.contains(&key) {
                lines.insert(key, line);
            }
        }
    }
    let pending: Vec<&ExperimentSpec> = specs.iter().filter(|s| !lines.contains_key(&s.result_key())).collect();
    let skipped = specs.len() - pending.len();
    if pending.is_empty() && opts.resume {
        log::info!("all specs present");
    } else {
        log::info!("{} specs to run, {skipped} already present", pending.len());
    }

    // start from the rows being kept so an interrupted run leaves them intact
    let kept: String = specs.iter().filter_map(|s| lines.get(&s.result_key())).map(String::as_str).collect();
    write_atomic(out, &(results::header_line() + &kept))?;

    let sink = Mutex::new(
        OpenOptions::new()
            .append(true)
            .open(out)
            .map_err(|source| write_err(out, source))?,
    );
    let executed: Vec<(String, String, AggregateRecord)> = with_pool(opts.threads, || {
        pending
            .par_iter()
            .map(|spec| {
                let mut rec = run_experiment(spec, data)?;
                if !opts.record_timing {
                    rec.wall_ms = 0;
                }
                let line = results::render_record(&rec);
                append_line(&sink, out, &line)?;
                log::debug!("done {}", spec.canonical_key());
                Ok((spec.result_key(), line, rec))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    drop(sink);

    let mut records = Vec::with_capacity(executed.len());
    for (key, line, rec) in executed {
        lines.insert(key, line);
        records.push(rec);
    }
    let canonical: String = specs.iter().map(|s| lines[&s.result_key()].as_str()).collect();
    write_atomic(out, &(results::header_line() + &canonical))?;

    Ok(GridRunSummary {
        total: specs.len(),
        executed: records.len(),
        skipped,
        records,
    })
}

fn write_err(path: &Path, source: std::io::Error) -> Error {
    Error::Write {
        path: path.to_path_buf(),
        source,
    }
}

fn append_line(sink: &Mutex<File>, path: &Path, line: &str) -> Result<()> {
    let mut file = sink.lock().unwrap_or_else(|e| e.into_inner());
    file.write_all(line.as_bytes())
        .and_then(|_| file.flush())
        .map_err(|e| write_err(path, e))
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = PathBuf::from(path);
    let name = path
        .file_name()
        .map(|n| format!(".{}.tmp", n.to_string_lossy()))
        .unwrap_or_else(|| ".results.tmp".into());
    tmp.set_file_name(name);
    std::fs::write(&tmp, contents).map_err(|e| write_err(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| write_err(path, e))
}

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use probeforge::domain::{ClassId, FmDescriptor, Modality};
use probeforge::ingest::{load_chip_table, load_embeddings, synthesize_dataset, DataManifest, SynthSpec};
use probeforge::metrics::Thresholds;
use probeforge::report::{self, HeatmapFilter, ScatterFilter, SelectionCriterion};
use probeforge::runner::{self, DataCatalog, GridSpec, Regime, RunOptions};
use probeforge::sampling::SamplerKind;
use probeforge::{assemble_dataset, validate_dataset, Error};

const SEED_ENV: &str = "PROBEFORGE_SEED";

#[derive(Parser)]
#[command(name = "probeforge", version, about = "Linear-probe ablations on foundation-model embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Join a chip table with an embedding file and check all invariants.
    Validate {
        #[arg(long)]
        chips: PathBuf,
        #[arg(long)]
        emb: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        fm_dim: usize,
        #[arg(long, default_value = "fm")]
        fm_id: String,
    },
    /// Write a synthetic dataset directory from a JSON spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Execute an ablation grid over a data directory.
    Run {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        resume: bool,
        /// Record per-spec wall time (makes output run-dependent).
        #[arg(long)]
        timing: bool,
    },
    /// Mean-correlation matrix of models x AOI pairs for one class.
    ReportHeatmap {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        class: String,
        #[arg(long)]
        regime: Option<String>,
        #[arg(long)]
        n_train: Option<usize>,
        #[arg(long)]
        n_test: Option<usize>,
        #[arg(long)]
        sampler: Option<String>,
        /// Data manifest supplying model modalities.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Flat plot data for ablation charts.
    ReportScatter {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        class: Option<String>,
        #[arg(long)]
        regime: Option<String>,
        #[arg(long)]
        train_aoi: Option<String>,
        #[arg(long)]
        target_aoi: Option<String>,
        #[arg(long)]
        fm: Option<String>,
        #[arg(long)]
        sampler: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Best qualifying configuration per target AOI and class.
    ReportSelect {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, default_value = "least-total-elements")]
        criterion: String,
        #[arg(long, default_value_t = probeforge::metrics::R_THRESHOLD)]
        r_min: f64,
        #[arg(long, default_value_t = probeforge::metrics::STD_THRESHOLD)]
        std_max: f64,
        #[arg(long)]
        regime: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Data(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_data_error() {
            Failure::Data(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn parse_opt<T: std::str::FromStr<Err = Error>>(value: Option<String>) -> Result<Option<T>, Failure> {
    value
        .map(|v| v.parse::<T>())
        .transpose()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn write_output(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate {
            chips,
            emb,
            index,
            fm_dim,
            fm_id,
        } => {
            let fm = FmDescriptor::new(fm_id, Modality::S2, fm_dim).map_err(|e| Failure::Usage(e.to_string()))?;
            let table = load_chip_table(&chips)?;
            let embeddings = load_embeddings(&emb, &index, &fm)?;
            let ds = assemble_dataset(&table, &embeddings)?;
            let report = validate_dataset(&ds);
            print!("{report}");
            let _ = std::io::stdout().flush();
            if report.valid {
                Ok(())
            } else {
                Err(Failure::Data(format!("{} violations", report.violations.len())))
            }
        }
        Command::Synth { spec, out_dir } => {
            let text = read_text(&spec)?;
            let spec: SynthSpec =
                serde_json::from_str(&text).map_err(|e| Failure::Data(format!("{}: {e}", spec.display())))?;
            let ds = synthesize_dataset(&spec)?;
            ds.write(&out_dir)?;
            log::info!("wrote {} chips to {}", ds.table.len(), out_dir.display());
            Ok(())
        }
        Command::Run {
            grid,
            data_dir,
            out,
            threads,
            resume,
            timing,
        } => {
            let text = read_text(&grid)?;
            let mut grid_spec =
                GridSpec::from_json(&text).map_err(|e| Failure::Data(format!("{}: {e}", grid.display())))?;
            if let Ok(seed) = std::env::var(SEED_ENV) {
                grid_spec.base_seed = seed
                    .trim()
                    .parse()
                    .map_err(|_| Failure::Usage(format!("{SEED_ENV}={seed:?} is not a 64-bit decimal")))?;
            }
            let manifest = DataManifest::load(&data_dir)?;
            let catalog = DataCatalog::new(manifest.load_datasets(&data_dir)?);
            let opts = RunOptions {
                threads,
                resume,
                record_timing: timing,
            };
            let summary = runner::run_grid(&grid_spec, &catalog, &out, &opts)?;
            log::info!(
                "{} specs: {} executed, {} already present",
                summary.total,
                summary.executed,
                summary.skipped
            );
            Ok(())
        }
        Command::ReportHeatmap {
            results,
            class,
            regime,
            n_train,
            n_test,
            sampler,
            manifest,
            out,
        } => {
            let class: ClassId = class.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
            let filter = HeatmapFilter {
                regime: parse_opt::<Regime>(regime)?,
                n_train,
                n_test,
                sampler: parse_opt::<SamplerKind>(sampler)?,
            };
            let modalities = match manifest {
                Some(dir) => DataManifest::load(&dir)?.modalities(),
                None => BTreeMap::new(),
            };
            let rows = runner::read_results(&results)?;
            let heatmap = report::heatmap_matrix(&rows, class, &filter, &modalities)?;
            write_output(&out, &heatmap.to_csv())
        }
        Command::ReportScatter {
            results,
            class,
            regime,
            train_aoi,
            target_aoi,
            fm,
            sampler,
            out,
        } => {
            let filter = ScatterFilter {
                class: parse_opt::<ClassId>(class)?,
                regime: parse_opt::<Regime>(regime)?,
                train_aoi,
                target_aoi,
                fm_id: fm,
                sampler: parse_opt::<SamplerKind>(sampler)?,
            };
            let rows = runner::read_results(&results)?;
            write_output(&out, &report::scatter_csv(&report::ablation_scatter(&rows, &filter)))
        }
        Command::ReportSelect {
            results,
            criterion,
            r_min,
            std_max,
            regime,
            out,
        } => {
            let criterion: SelectionCriterion = criterion.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
            let thresholds = Thresholds { r_min, std_max };
            thresholds.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let regime = parse_opt::<Regime>(regime)?;
            let rows: Vec<_> = runner::read_results(&results)?
                .into_iter()
                .filter(|r| regime.is_none_or(|g| r.regime == g))
                .collect();
            let selections = report::selection_table(&rows, criterion, thresholds);
            write_output(&out, &report::selection_csv(&selections))?;
            print!("{}", report::selection_text(&selections));
            Ok(())
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))
}

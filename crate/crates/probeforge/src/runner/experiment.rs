use std::collections::BTreeMap;
use std::time::Instant;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{aggregate, AggregateMetrics, RunOutcome, Thresholds};
use crate::probe::{self, design_matrix};
use crate::runner::grid::{ChipCounts, ExperimentSpec, Regime};
use crate::sampling::{random_sample, sample, split_target, SampleRequest, SamplerKind};
use crate::seed::{derive_seed, TAG_REPETITION, TAG_TEST, TAG_TRAIN};

/// Per-model datasets with their AOI partitions.
#[derive(Debug, Default)]
pub struct DataCatalog {
    datasets: BTreeMap<String, Dataset>,
    by_aoi: BTreeMap<String, BTreeMap<String, Vec<usize>>>,
}

impl DataCatalog {
    pub fn new(datasets: BTreeMap<String, Dataset>) -> Self {
        let by_aoi = datasets
            .iter()
            .map(|(fm, ds)| (fm.clone(), ds.positions_by_aoi()))
            .collect();
        DataCatalog { datasets, by_aoi }
    }

    pub fn from_datasets(datasets: impl IntoIterator<Item = Dataset>) -> Self {
        Self::new(datasets.into_iter().map(|d| (d.fm().fm_id.clone(), d)).collect())
    }

    pub fn dataset(&self, fm_id: &str) -> Option<&Dataset> {
        self.datasets.get(fm_id)
    }

    pub fn fm_ids(&self) -> impl Iterator<Item = &str> {
        self.datasets.keys().map(String::as_str)
    }

    pub fn aoi_positions(&self, fm_id: &str, aoi: &str) -> &[usize] {
        self.by_aoi
            .get(fm_id)
            .and_then(|m| m.get(aoi))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

impl ChipCounts for DataCatalog {
    fn chip_count(&self, fm_id: &str, aoi: &str) -> usize {
        self.aoi_positions(fm_id, aoi).len()
    }
}

/// Outcome of one spec: the echoed spec, aggregated metrics when at least
/// two repetitions were scorable, and bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRecord {
    pub spec: ExperimentSpec,
    pub metrics: Option<AggregateMetrics>,
    pub degenerate_runs: usize,
    pub infeasible: bool,
    pub wall_ms: u64,
}

impl AggregateRecord {
    /// Fewer than two repetitions produced a correlation.
    pub fn degenerate(&self) -> bool {
        !self.infeasible && self.metrics.is_none()
    }
}

/// Train and test positions used by one repetition.
#[derive(Clone, Debug)]
pub struct RepetitionTrace<'a> {
    pub repetition: usize,
    pub train: &'a [usize],
    pub test: &'a [usize],
}

pub fn run_experiment(spec: &ExperimentSpec, data: &DataCatalog) -> Result<AggregateRecord> {
    run_experiment_traced(spec, data, &mut |_| {})
}

/// [`run_experiment`] that reports each repetition's samples to `observe`.
pub fn run_experiment_traced(
    spec: &ExperimentSpec,
    data: &DataCatalog,
    observe: &mut dyn FnMut(&RepetitionTrace),
) -> Result<AggregateRecord> {
    spec.validate()?;
    let started = Instant::now();
    let ds = data
        .dataset(&spec.fm_id)
        .ok_or_else(|| Error::Config(format!("no dataset for fm {:?}", spec.fm_id)))?;
    let train_pool = data.aoi_positions(&spec.fm_id, &spec.train_aoi);
    let target_pool = data.aoi_positions(&spec.fm_id, &spec.target_aoi);

    if spec.infeasible || !spec.fits(train_pool.len(), target_pool.len()) {
        return Ok(AggregateRecord {
            spec: ExperimentSpec {
                infeasible: true,
                ..spec.clone()
            },
            metrics: None,
            degenerate_runs: 0,
            infeasible: true,
            wall_ms: started.elapsed().as_millis() as u64,
        });
    }

    let spec_seed = spec.seed();
    let dim = ds.dim();
    let mut outcomes = Vec::with_capacity(spec.repetitions);
    for rep in 0..spec.repetitions {
        let rep_seed = derive_seed(spec_seed, TAG_REPETITION, rep as u64);
        let (train, test) = match spec.regime {
            Regime::External => {
                let train = sample(&SampleRequest {
                    candidates: train_pool,
                    k: spec.n_train,
                    seed: derive_seed(rep_seed, TAG_TRAIN, 0),
                    kind: spec.sampler,
                    data: ds,
                })?;
                let test = random_sample(&SampleRequest {
                    candidates: target_pool,
                    k: spec.n_test,
                    seed: derive_seed(rep_seed, TAG_TEST, 0),
                    kind: SamplerKind::Random,
                    data: ds,
                })?;
                (train, test)
            }
            Regime::TargetSplit => {
                let (test, train) = split_target(target_pool, spec.n_test, spec.n_train, spec.sampler, rep_seed, ds)?;
                (train, test)
            }
        };
        observe(&RepetitionTrace {
            repetition: rep,
            train: &train,
            test: &test,
        });

        let x_train = design_matrix(train.iter().map(|&p| ds.embedding(p)), dim);
        let y_train: Vec<f64> = train.iter().map(|&p| ds.fraction(p, spec.class)).collect();
        let fitted = probe::fit(&x_train, &y_train)?;
        let x_test = design_matrix(test.iter().map(|&p| ds.embedding(p)), dim);
        let y_test: Vec<f64> = test.iter().map(|&p| ds.fraction(p, spec.class)).collect();
        let predictions = probe::predict(&fitted, &x_test)?;
        outcomes.push(RunOutcome::score(&predictions, &y_test)?);
    }

    let degenerate_runs = outcomes.iter().filter(|o| matches!(o, RunOutcome::Degenerate)).count();
    let metrics = match aggregate(&outcomes, Thresholds::default()) {
        Ok(m) => Some(m),
        Err(Error::InsufficientRuns { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(AggregateRecord {
        spec: spec.clone(),
        metrics,
        degenerate_runs,
        infeasible: false,
        wall_ms: started.elapsed().as_millis() as u64,
    })
}

//! Experiment specs and grid enumeration.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::ClassId;
use crate::error::{Error, Result};
use crate::sampling::SamplerKind;
use crate::seed::{derive_seed, hash_str, TAG_SPEC};

/// Where training data comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Train on a label-rich external AOI, test on the target AOI.
    External,
    /// Split the target AOI's own labels into train and test.
    TargetSplit,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::External => "external",
            Regime::TargetSplit => "target-split",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "external" => Ok(Regime::External),
            "target-split" => Ok(Regime::TargetSplit),
            _ => Err(Error::InvalidInput(format!("unknown regime {s:?}"))),
        }
    }
}

/// One cell of the ablation grid.
///
/// For [`Regime::TargetSplit`] `train_aoi` equals `target_aoi`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExperimentSpec {
    pub fm_id: String,
    pub class: ClassId,
    pub regime: Regime,
    pub train_aoi: String,
    pub target_aoi: String,
    pub sampler: SamplerKind,
    pub n_train: usize,
    pub n_test: usize,
    pub repetitions: usize,
    pub base_seed: u64,
    /// Sample sizes cannot be met by the available chips.
    pub infeasible: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        match self.regime {
            Regime::External if self.train_aoi == self.target_aoi => Err(Error::Config(format!(
                "external regime needs distinct AOIs, got {} twice",
                self.train_aoi
            ))),
            Regime::TargetSplit if self.train_aoi != self.target_aoi => Err(Error::Config(
                "target-split regime trains and tests in one AOI".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Identity of the spec, excluding the base seed.
    pub fn canonical_key(&self) -> String {
        format!(
            "{}|{}|{}|{}|{}|{}|{}|{}|{}",
            self.regime, self.fm_id, self.class, self.train_aoi, self.target_aoi, self.sampler, self.n_train,
            self.n_test, self.repetitions
        )
    }

    /// Identity of a results row: canonical key plus base seed.
    pub fn result_key(&self) -> String {
        format!("{}|{}", self.canonical_key(), self.base_seed)
    }

    /// Depends only on the base seed and this spec's own axis values.
    pub fn seed(&self) -> u64 {
        derive_seed(self.base_seed, TAG_SPEC, hash_str(&self.canonical_key()))
    }

    /// Whether the sizes fit `train_chips` / `target_chips` available chips.
    pub fn fits(&self, train_chips: usize, target_chips: usize) -> bool {
        if self.n_train < 2 || self.n_test < 2 {
            return false;
        }
        match self.regime {
            Regime::External => self.n_train <= train_chips && self.n_test <= target_chips,
            Regime::TargetSplit => self.n_train + self.n_test <= target_chips,
        }
    }
}

fn all_regimes() -> Vec<Regime> {
    vec![Regime::External, Regime::TargetSplit]
}

fn all_classes() -> Vec<ClassId> {
    ClassId::ALL.to_vec()
}

fn default_repetitions() -> usize {
    20
}

/// Axis lists of an ablation grid. Deserialized from the grid config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "all_regimes")]
    pub regimes: Vec<Regime>,
    pub fms: Vec<String>,
    #[serde(default = "all_classes")]
    pub classes: Vec<ClassId>,
    #[serde(default)]
    pub external_aois: Vec<String>,
    #[serde(default)]
    pub target_aois: Vec<String>,
    pub samplers: Vec<SamplerKind>,
    #[serde(default)]
    pub n_train_external: Vec<usize>,
    #[serde(default)]
    pub n_train_target: Vec<usize>,
    #[serde(default)]
    pub n_test_target: Vec<usize>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
}

impl GridSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    fn check_axes(&self) -> Result<()> {
        fn axis<T: std::hash::Hash + Eq>(name: &'static str, values: &[T]) -> Result<()> {
            if values.is_empty() {
                return Err(Error::EmptyAxis(name));
            }
            let mut seen = HashSet::new();
            if !values.iter().all(|v| seen.insert(v)) {
                return Err(Error::Config(format!("duplicate value in axis {name}")));
            }
            Ok(())
        }
        axis("regimes", &self.regimes)?;
        axis("fms", &self.fms)?;
        axis("classes", &self.classes)?;
        axis("target_aois", &self.target_aois)?;
        axis("samplers", &self.samplers)?;
        axis("n_test_target", &self.n_test_target)?;
        if self.regimes.contains(&Regime::External) {
            axis("external_aois", &self.external_aois)?;
            axis("n_train_external", &self.n_train_external)?;
        }
        if self.regimes.contains(&Regime::TargetSplit) {
            axis("n_train_target", &self.n_train_target)?;
        }
        if self.repetitions < 2 {
            return Err(Error::Config("repetitions must be at least 2".into()));
        }
        Ok(())
    }
}

/// Chip counts per (fm, AOI), used to flag infeasible specs.
pub trait ChipCounts {
    fn chip_count(&self, fm_id: &str, aoi: &str) -> usize;
}

/// Expands the grid into specs in canonical order: regime, fm, class,
/// train AOI, target AOI, sampler, n_train, n_test (each axis in the order
/// given). External specs skip pairs with the train AOI equal to the target
/// AOI. With `counts`, specs the data cannot supply are flagged infeasible.
pub fn enumerate_grid(grid: &GridSpec, counts: Option<&dyn ChipCounts>) -> Result<Vec<ExperimentSpec>> {
    grid.check_axes()?;
    let mut specs = Vec::new();
    for &regime in &grid.regimes {
        let (pairs, n_trains): (Vec<(&String, &String)>, &[usize]) = match regime {
            Regime::External => (
                grid.external_aois
                    .iter()
                    .flat_map(|tr| grid.target_aois.iter().map(move |tg| (tr, tg)))
                    .filter(|(tr, tg)| tr != tg)
                    .collect(),
                &grid.n_train_external,
            ),
            Regime::TargetSplit => (grid.target_aois.iter().map(|t| (t, t)).collect(), &grid.n_train_target),
        };
        for fm in &grid.fms {
            for &class in &grid.classes {
                for &(train_aoi, target_aoi) in &pairs {
                    for &sampler in &grid.samplers {
                        for &n_train in n_trains {
                            for &n_test in &grid.n_test_target {
                                let mut spec = ExperimentSpec {
                                    fm_id: fm.clone(),
                                    class,
                                    regime,
                                    train_aoi: train_aoi.clone(),
                                    target_aoi: target_aoi.clone(),
                                    sampler,
                                    n_train,
                                    n_test,
                                    repetitions: grid.repetitions,
                                    base_seed: grid.base_seed,
                                    infeasible: false,
                                };
                                spec.infeasible = match counts {
                                    Some(c) => !spec.fits(c.chip_count(fm, train_aoi), c.chip_count(fm, target_aoi)),
                                    None => !spec.fits(usize::MAX / 2, usize::MAX / 2),
                                };
                                specs.push(spec);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(specs)
}

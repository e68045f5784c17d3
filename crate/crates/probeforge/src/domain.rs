//! Domain types shared across the harness.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The seven land-cover classes used as regression targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[repr(u8)]
pub enum ClassId {
    TreeCover = 0,
    Shrubland = 1,
    Grassland = 2,
    Cropland = 3,
    Builtup = 4,
    BareSparseVegetation = 5,
    PermanentWater = 6,
}

impl ClassId {
    pub const COUNT: usize = 7;

    pub const ALL: [ClassId; 7] = [
        ClassId::TreeCover,
        ClassId::Shrubland,
        ClassId::Grassland,
        ClassId::Cropland,
        ClassId::Builtup,
        ClassId::BareSparseVegetation,
        ClassId::PermanentWater,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<ClassId> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassId::TreeCover => "tree-cover",
            ClassId::Shrubland => "shrubland",
            ClassId::Grassland => "grassland",
            ClassId::Cropland => "cropland",
            ClassId::Builtup => "builtup",
            ClassId::BareSparseVegetation => "bare-sparse-vegetation",
            ClassId::PermanentWater => "permanent-water",
        }
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown class {s:?}")))
    }
}

/// Per-class pixel fractions of one chip, indexed by [`ClassId`].
///
/// Serialized as a JSON object keyed by class name.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Fractions(pub [f64; ClassId::COUNT]);

impl Fractions {
    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClassId, f64)> + '_ {
        ClassId::ALL.iter().map(move |&c| (c, self[c]))
    }
}

impl Index<ClassId> for Fractions {
    type Output = f64;

    fn index(&self, class: ClassId) -> &f64 {
        &self.0[class as usize]
    }
}

impl IndexMut<ClassId> for Fractions {
    fn index_mut(&mut self, class: ClassId) -> &mut f64 {
        &mut self.0[class as usize]
    }
}

#[derive(Serialize, Deserialize)]
struct FractionsRepr {
    #[serde(rename = "tree-cover")]
    tree_cover: f64,
    shrubland: f64,
    grassland: f64,
    cropland: f64,
    builtup: f64,
    #[serde(rename = "bare-sparse-vegetation")]
    bare_sparse_vegetation: f64,
    #[serde(rename = "permanent-water")]
    permanent_water: f64,
}

impl Serialize for Fractions {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let [tree_cover, shrubland, grassland, cropland, builtup, bare_sparse_vegetation, permanent_water] =
            self.0;
        FractionsRepr {
            tree_cover,
            shrubland,
            grassland,
            cropland,
            builtup,
            bare_sparse_vegetation,
            permanent_water,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Fractions {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let r = FractionsRepr::deserialize(deserializer)?;
        Ok(Fractions([
            r.tree_cover,
            r.shrubland,
            r.grassland,
            r.cropland,
            r.builtup,
            r.bare_sparse_vegetation,
            r.permanent_water,
        ]))
    }
}

/// One image tile with its labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chip {
    pub chip_id: String,
    pub aoi: String,
    pub lon: f64,
    pub lat: f64,
    pub fractions: Fractions,
    pub elevation_m: f64,
}

/// Chips with a unique-id index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChipTable {
    chips: Vec<Chip>,
    index: HashMap<String, usize>,
}

impl ChipTable {
    pub fn new(chips: Vec<Chip>) -> Result<Self> {
        let mut index = HashMap::with_capacity(chips.len());
        for (i, chip) in chips.iter().enumerate() {
            if index.insert(chip.chip_id.clone(), i).is_some() {
                return Err(Error::DuplicateChip(chip.chip_id.clone()));
            }
        }
        Ok(ChipTable { chips, index })
    }

    pub fn chips(&self) -> &[Chip] {
        &self.chips
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn position(&self, chip_id: &str) -> Option<usize> {
        self.index.get(chip_id).copied()
    }

    pub fn get(&self, chip_id: &str) -> Option<&Chip> {
        self.position(chip_id).map(|i| &self.chips[i])
    }

    pub fn into_chips(self) -> Vec<Chip> {
        self.chips
    }
}

/// Input modality a foundation model consumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modality {
    S1,
    S2,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::S1 => "S1",
            Modality::S2 => "S2",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FmDescriptor {
    pub fm_id: String,
    pub modality: Modality,
    pub dim: usize,
}

impl FmDescriptor {
    pub fn new(fm_id: impl Into<String>, modality: Modality, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("embedding dimension must be positive".into()));
        }
        Ok(FmDescriptor {
            fm_id: fm_id.into(),
            modality,
            dim,
        })
    }
}

/// Row-major embedding matrix, one row per chip id.
///
/// Values are stored as `f32`, exactly as they appear on disk. Shape and id
/// uniqueness are enforced on construction; finiteness is reported by
/// [`crate::validate_dataset`] (and enforced by the file loader).
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSet {
    fm: FmDescriptor,
    chip_ids: Vec<String>,
    data: Vec<f32>,
}

impl EmbeddingSet {
    pub fn new(fm: FmDescriptor, chip_ids: Vec<String>, data: Vec<f32>) -> Result<Self> {
        if data.len() != chip_ids.len() * fm.dim {
            return Err(Error::Format(format!(
                "embedding matrix holds {} values, expected {} rows x {} dims",
                data.len(),
                chip_ids.len(),
                fm.dim
            )));
        }
        let mut seen = std::collections::HashSet::with_capacity(chip_ids.len());
        for id in &chip_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateChip(id.clone()));
            }
        }
        Ok(EmbeddingSet { fm, chip_ids, data })
    }

    pub fn fm(&self) -> &FmDescriptor {
        &self.fm
    }

    pub fn dim(&self) -> usize {
        self.fm.dim
    }

    pub fn chip_ids(&self) -> &[String] {
        &self.chip_ids
    }

    pub fn rows(&self) -> usize {
        self.chip_ids.len()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.fm.dim..(i + 1) * self.fm.dim]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}

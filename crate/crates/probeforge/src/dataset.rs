//! Joining chip labels to embedding rows, and invariant checks.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::domain::{Chip, ChipTable, ClassId, EmbeddingSet, FmDescriptor};
use crate::error::{Error, Result};

/// Slack allowed on the seven-class fraction sum.
pub const FRACTION_SUM_TOLERANCE: f64 = 1e-9;

/// Chips paired with their embedding rows for one foundation model.
///
/// Row `i` of the embedding matrix belongs to `chips()[i]`. Rows follow the
/// chip table order.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    fm: FmDescriptor,
    chips: Vec<Chip>,
    embeddings: Vec<f32>,
    dropped_table_only: Vec<String>,
    dropped_embedding_only: Vec<String>,
}

impl Dataset {
    pub fn fm(&self) -> &FmDescriptor {
        &self.fm
    }

    pub fn dim(&self) -> usize {
        self.fm.dim
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn chips(&self) -> &[Chip] {
        &self.chips
    }

    pub fn chip(&self, pos: usize) -> &Chip {
        &self.chips[pos]
    }

    pub fn embedding(&self, pos: usize) -> &[f32] {
        let d = self.fm.dim;
        &self.embeddings[pos * d..(pos + 1) * d]
    }

    pub fn fraction(&self, pos: usize, class: ClassId) -> f64 {
        self.chips[pos].fractions[class]
    }

    /// Chip ids present in the table but missing from the embeddings.
    pub fn dropped_table_only(&self) -> &[String] {
        &self.dropped_table_only
    }

    /// Embedding rows whose chip id is not in the table.
    pub fn dropped_embedding_only(&self) -> &[String] {
        &self.dropped_embedding_only
    }

    /// Row positions grouped by AOI, each list in ascending order.
    pub fn positions_by_aoi(&self) -> BTreeMap<String, Vec<usize>> {
        let mut out: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, chip) in self.chips.iter().enumerate() {
            out.entry(chip.aoi.clone()).or_default().push(i);
        }
        out
    }
}

/// Inner join of `table` and `emb` on `chip_id`.
///
/// Records present on only one side are dropped and listed on the result.
pub fn assemble_dataset(table: &ChipTable, emb: &EmbeddingSet) -> Result<Dataset> {
    let d = emb.dim();
    if emb.data().len() != emb.rows() * d {
        return Err(Error::DimensionMismatch {
            expected: emb.rows() * d,
            found: emb.data().len(),
        });
    }
    let emb_index: HashMap<&str, usize> = emb
        .chip_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();

    let mut chips = Vec::new();
    let mut embeddings = Vec::new();
    let mut dropped_table_only = Vec::new();
    for chip in table.chips() {
        match emb_index.get(chip.chip_id.as_str()) {
            Some(&row) => {
                chips.push(chip.clone());
                embeddings.extend_from_slice(emb.row(row));
            }
            None => dropped_table_only.push(chip.chip_id.clone()),
        }
    }
    let dropped_embedding_only: Vec<String> = emb
        .chip_ids()
        .iter()
        .filter(|id| table.position(id).is_none())
        .cloned()
        .collect();

    if chips.is_empty() {
        return Err(Error::NoAlignedChips);
    }
    if !dropped_table_only.is_empty() || !dropped_embedding_only.is_empty() {
        log::warn!(
            "{}: dropped {} table-only and {} embedding-only chips",
            emb.fm().fm_id,
            dropped_table_only.len(),
            dropped_embedding_only.len()
        );
    }
    Ok(Dataset {
        fm: emb.fm().clone(),
        chips,
        embeddings,
        dropped_table_only,
        dropped_embedding_only,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub chip_id: String,
    pub rule: &'static str,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub valid: bool,
    pub n_chips: usize,
    pub dropped_table_only: usize,
    pub dropped_embedding_only: usize,
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "valid: {}", self.valid)?;
        writeln!(f, "chips: {}", self.n_chips)?;
        writeln!(f, "dropped (table only): {}", self.dropped_table_only)?;
        writeln!(f, "dropped (embeddings only): {}", self.dropped_embedding_only)?;
        writeln!(f, "violations: {}", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  {}: {}", v.chip_id, v.rule)?;
        }
        Ok(())
    }
}

/// Checks the chip and embedding invariants on every row.
pub fn validate_dataset(ds: &Dataset) -> ValidationReport {
    let mut violations = Vec::new();
    let mut push = |chip: &Chip, rule| {
        violations.push(Violation {
            chip_id: chip.chip_id.clone(),
            rule,
        })
    };
    for (pos, chip) in ds.chips.iter().enumerate() {
        let fr = &chip.fractions;
        if fr.0.iter().any(|v| !(0.0..=1.0).contains(v)) {
            push(chip, "fraction out of range");
        }
        if fr.sum() > 1.0 + FRACTION_SUM_TOLERANCE {
            push(chip, "fraction sum exceeds 1");
        }
        if !chip.elevation_m.is_finite() {
            push(chip, "non-finite elevation");
        }
        let row = ds.embedding(pos);
        if row.len() != ds.fm.dim {
            push(chip, "embedding dimension mismatch");
        }
        if row.iter().any(|v| !v.is_finite()) {
            push(chip, "non-finite embedding");
        }
    }
    ValidationReport {
        valid: violations.is_empty(),
        n_chips: ds.len(),
        dropped_table_only: ds.dropped_table_only.len(),
        dropped_embedding_only: ds.dropped_embedding_only.len(),
        violations,
    }
}

//! Data directory layout: `manifest.json` naming the chip table and one
//! embedding file pair per foundation model, all paths relative to the
//! directory.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{assemble_dataset, Dataset};
use crate::domain::{FmDescriptor, Modality};
use crate::error::{Error, Result};
use crate::ingest::{load_chip_table, load_embeddings};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestFm {
    pub fm_id: String,
    pub modality: Modality,
    pub dim: usize,
    pub data: String,
    pub index: String,
}

impl ManifestFm {
    pub fn for_descriptor(fm: &FmDescriptor) -> Self {
        ManifestFm {
            fm_id: fm.fm_id.clone(),
            modality: fm.modality,
            dim: fm.dim,
            data: format!("{}.emb", fm.fm_id),
            index: format!("{}.idx", fm.fm_id),
        }
    }

    pub fn descriptor(&self) -> Result<FmDescriptor> {
        FmDescriptor::new(self.fm_id.clone(), self.modality, self.dim)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataManifest {
    pub chips: String,
    pub fms: Vec<ManifestFm>,
}

impl DataManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|source| Error::Read {
            path: path.clone(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path,
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|source| Error::Write { path, source })
    }

    pub fn modalities(&self) -> BTreeMap<String, Modality> {
        self.fms.iter().map(|f| (f.fm_id.clone(), f.modality)).collect()
    }

    /// Loads the chip table and every model's embeddings, joined per model.
    pub fn load_datasets(&self, dir: &Path) -> Result<BTreeMap<String, Dataset>> {
        let table = load_chip_table(&dir.join(&self.chips))?;
        let mut out = BTreeMap::new();
        for entry in &self.fms {
            let fm = entry.descriptor()?;
            let emb = load_embeddings(&dir.join(&entry.data), &dir.join(&entry.index), &fm)?;
            if out.insert(fm.fm_id.clone(), assemble_dataset(&table, &emb)?).is_some() {
                return Err(Error::Config(format!("duplicate fm_id {:?} in manifest", fm.fm_id)));
            }
        }
        Ok(out)
    }
}

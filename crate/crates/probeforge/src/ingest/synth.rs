//! Synthetic chip datasets with a planted linear signal.
//!
//! Embeddings are i.i.d. standard normal rows `x`. For every class a
//! unit-norm weight vector `w_c` is drawn and the latent target is
//! `x . w_c + sigma * eps`, so `Var(x . w_c) = 1` and the correlation between
//! the noiseless and the noisy latent is `1 / sqrt(1 + sigma^2)`. The latent is
//! turned into chip fractions through a [`Link`].

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{Chip, ChipTable, ClassId, EmbeddingSet, FmDescriptor, Fractions, Modality};
use crate::error::{Error, Result};
use crate::ingest::{chips, embeddings, manifest};
use crate::seed::{derive_seed, rng, TAG_FM, TAG_META, TAG_NOISE, TAG_WEIGHTS};

pub const MAX_ELEVATION_M: f64 = 4000.0;

/// Map from the latent target to chip fractions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    /// Per-class min-max rescale of the latent into `[0, 1/7]`. Fractions are
    /// an exact positive affine function of the latent, so correlations
    /// measured on fractions equal those on the latent.
    #[default]
    Affine,
    /// Logistic squash, then division by the seven-class sum where it
    /// exceeds one. Monotone but not affine.
    Logistic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthFm {
    pub fm_id: String,
    pub modality: Modality,
    /// Standard deviation of extra isotropic noise added to the shared
    /// embeddings for this model.
    #[serde(default)]
    pub extra_noise: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_chips: usize,
    pub dim: usize,
    pub noise_sigma: f64,
    pub weight_seed: u64,
    pub data_seed: u64,
    pub n_aois: usize,
    #[serde(default)]
    pub link: Link,
    #[serde(default)]
    pub fms: Vec<SynthFm>,
}

impl SynthSpec {
    pub fn new(n_chips: usize, dim: usize, noise_sigma: f64, n_aois: usize) -> Self {
        SynthSpec {
            n_chips,
            dim,
            noise_sigma,
            weight_seed: 1,
            data_seed: 2,
            n_aois,
            link: Link::Affine,
            fms: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_chips == 0 || self.dim == 0 || self.n_aois == 0 {
            return Err(Error::Config("n_chips, dim and n_aois must be positive".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config("noise_sigma must be finite and non-negative".into()));
        }
        if self.fms.iter().any(|f| !(f.extra_noise >= 0.0 && f.extra_noise.is_finite())) {
            return Err(Error::Config("extra_noise must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Population correlation between the noiseless and noisy latent.
    pub fn latent_correlation(&self) -> f64 {
        1.0 / (1.0 + self.noise_sigma * self.noise_sigma).sqrt()
    }

    /// Noise level giving a latent correlation of `rho` (0 < rho <= 1).
    pub fn noise_for_correlation(rho: f64) -> f64 {
        (1.0 / (rho * rho) - 1.0).sqrt()
    }

    fn models(&self) -> Vec<SynthFm> {
        if self.fms.is_empty() {
            vec![SynthFm {
                fm_id: "synth".into(),
                modality: Modality::S2,
                extra_noise: 0.0,
            }]
        } else {
            self.fms.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthDataset {
    pub table: ChipTable,
    pub embeddings: Vec<EmbeddingSet>,
    /// Unit-norm weight vector per class, indexed by class code.
    pub planted: Vec<Vec<f64>>,
    /// Latent target per chip and class, before the link.
    pub latent: Vec<[f64; ClassId::COUNT]>,
}

impl SynthDataset {
    /// Writes the chip table, one embedding file pair per model and a
    /// manifest into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        let chips_name = "chips.jsonl";
        chips::save_chip_table(&self.table, &dir.join(chips_name))?;
        let mut fms = Vec::new();
        for emb in &self.embeddings {
            let entry = manifest::ManifestFm::for_descriptor(emb.fm());
            embeddings::save_embeddings(emb, &dir.join(&entry.data), &dir.join(&entry.index))?;
            fms.push(entry);
        }
        manifest::DataManifest {
            chips: chips_name.into(),
            fms,
        }
        .write(dir)
    }
}

pub fn synthesize_dataset(spec: &SynthSpec) -> Result<SynthDataset> {
    spec.validate()?;
    let (n, d) = (spec.n_chips, spec.dim);

    let mut wrng = rng(derive_seed(spec.weight_seed, TAG_WEIGHTS, 0));
    let planted: Vec<Vec<f64>> = ClassId::ALL
        .iter()
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut wrng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect();

    let mut xrng = rng(spec.data_seed);
    let base: Vec<f32> = (0..n * d)
        .map(|_| {
            let v: f64 = StandardNormal.sample(&mut xrng);
            v as f32
        })
        .collect();

    let mut nrng = rng(derive_seed(spec.data_seed, TAG_NOISE, 0));
    let latent: Vec<[f64; ClassId::COUNT]> = base
        .chunks_exact(d)
        .map(|row| {
            std::array::from_fn(|c| {
                let signal: f64 = row.iter().zip(&planted[c]).map(|(&x, w)| x as f64 * w).sum();
                let eps: f64 = StandardNormal.sample(&mut nrng);
                signal + spec.noise_sigma * eps
            })
        })
        .collect();

    let fractions = link_fractions(&latent, spec.link);

    let mut mrng = rng(derive_seed(spec.data_seed, TAG_META, 0));
    let chips = fractions
        .into_iter()
        .enumerate()
        .map(|(i, fractions)| Chip {
            chip_id: format!("chip-{i:06}"),
            aoi: format!("aoi{}", i % spec.n_aois),
            lon: mrng.random::<f64>(),
            lat: mrng.random::<f64>(),
            fractions,
            elevation_m: mrng.random::<f64>() * MAX_ELEVATION_M,
        })
        .collect::<Vec<_>>();
    let chip_ids: Vec<String> = chips.iter().map(|c| c.chip_id.clone()).collect();
    let table = ChipTable::new(chips)?;

    let embeddings = spec
        .models()
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let fm = FmDescriptor::new(m.fm_id.clone(), m.modality, d)?;
            let data = if m.extra_noise > 0.0 {
                let mut erng = rng(derive_seed(spec.data_seed, TAG_FM, k as u64));
                base.iter()
                    .map(|&x| {
                        let e: f64 = StandardNormal.sample(&mut erng);
                        (x as f64 + m.extra_noise * e) as f32
                    })
                    .collect()
            } else {
                base.clone()
            };
            EmbeddingSet::new(fm, chip_ids.clone(), data)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SynthDataset {
        table,
        embeddings,
        planted,
        latent,
    })
}

fn link_fractions(latent: &[[f64; ClassId::COUNT]], link: Link) -> Vec<Fractions> {
    match link {
        Link::Affine => {
            let mut lo = [f64::INFINITY; ClassId::COUNT];
            let mut hi = [f64::NEG_INFINITY; ClassId::COUNT];
            for row in latent {
                for c in 0..ClassId::COUNT {
                    lo[c] = lo[c].min(row[c]);
                    hi[c] = hi[c].max(row[c]);
                }
            }
            let share = 1.0 / ClassId::COUNT as f64;
            latent
                .iter()
                .map(|row| {
                    Fractions(std::array::from_fn(|c| {
                        let span = hi[c] - lo[c];
                        if span > 0.0 {
                            (row[c] - lo[c]) / span * share
                        } else {
                            0.0
                        }
                    }))
                })
                .collect()
        }
        Link::Logistic => latent
            .iter()
            .map(|row| {
                let mut f: [f64; ClassId::COUNT] = row.map(|z| 1.0 / (1.0 + (-z).exp()));
                let sum: f64 = f.iter().sum();
                if sum > 1.0 {
                    f.iter_mut().for_each(|v| *v /= sum);
                }
                Fractions(f)
            })
            .collect(),
    }
}

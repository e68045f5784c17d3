//! Training-set samplers and the target-AOI train/test split.
//!
//! All samplers take candidate *positions* (row indices into some dataset)
//! and return `k` distinct positions from that list, in selection order.
//! Ties are always broken towards the lowest candidate position and every
//! random choice comes from a private ChaCha8 stream seeded by the request,
//! so the output depends only on the request.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::domain::ClassId;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng, TAG_TEST, TAG_TRAIN};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Random,
    Esawc,
    Fps,
    Srtm,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 4] = [SamplerKind::Random, SamplerKind::Esawc, SamplerKind::Fps, SamplerKind::Srtm];

    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Random => "random",
            SamplerKind::Esawc => "esawc",
            SamplerKind::Fps => "fps",
            SamplerKind::Srtm => "srtm",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown sampler {s:?}")))
    }
}

/// Per-position auxiliary data the samplers read.
///
/// Each sampler only calls the accessor it needs; the defaults let test
/// fixtures implement just that one.
pub trait SamplingData {
    fn fraction(&self, _pos: usize, _class: ClassId) -> f64 {
        0.0
    }

    fn embedding(&self, _pos: usize) -> &[f32] {
        &[]
    }

    fn elevation(&self, _pos: usize) -> f64 {
        0.0
    }
}

impl SamplingData for Dataset {
    fn fraction(&self, pos: usize, class: ClassId) -> f64 {
        Dataset::fraction(self, pos, class)
    }

    fn embedding(&self, pos: usize) -> &[f32] {
        Dataset::embedding(self, pos)
    }

    fn elevation(&self, pos: usize) -> f64 {
        self.chip(pos).elevation_m
    }
}

/// Data for samplers that need none.
pub struct NoData;

impl SamplingData for NoData {}

pub struct SampleRequest<'a> {
    pub candidates: &'a [usize],
    pub k: usize,
    pub seed: u64,
    pub kind: SamplerKind,
    pub data: &'a dyn SamplingData,
}

impl SampleRequest<'_> {
    fn check(&self) -> Result<()> {
        if self.k > self.candidates.len() {
            return Err(Error::InvalidInput(format!(
                "cannot sample {} of {} candidates",
                self.k,
                self.candidates.len()
            )));
        }
        Ok(())
    }
}

/// Dispatches on `req.kind`.
pub fn sample(req: &SampleRequest) -> Result<Vec<usize>> {
    match req.kind {
        SamplerKind::Random => random_sample(req),
        SamplerKind::Esawc => esawc_sample(req),
        SamplerKind::Fps => fps_sample(req),
        SamplerKind::Srtm => srtm_sample(req),
    }
}

/// Uniform draw of `k` candidates without replacement.
pub fn random_sample(req: &SampleRequest) -> Result<Vec<usize>> {
    req.check()?;
    let mut rng = rng(req.seed);
    Ok(rand::seq::index::sample(&mut rng, req.candidates.len(), req.k)
        .into_iter()
        .map(|i| req.candidates[i])
        .collect())
}

/// Class-balanced draw: visit the seven classes round-robin in code order,
/// and at each turn pick one unchosen chip with probability proportional to
/// its fraction of that class. A class whose remaining chips all have zero
/// fraction is skipped; if every class is exhausted the remaining picks are
/// uniform over unchosen chips.
pub fn esawc_sample(req: &SampleRequest) -> Result<Vec<usize>> {
    req.check()?;
    let mut rng = rng(req.seed);
    let n = req.candidates.len();
    let mut taken = vec![false; n];
    let mut out = Vec::with_capacity(req.k);
    let mut exhausted = [false; ClassId::COUNT];
    let mut turn = 0usize;

    while out.len() < req.k {
        if exhausted.iter().all(|&e| e) {
            let rest: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
            let picks = rand::seq::index::sample(&mut rng, rest.len(), req.k - out.len());
            out.extend(picks.into_iter().map(|i| req.candidates[rest[i]]));
            break;
        }
        let class = ClassId::ALL[turn % ClassId::COUNT];
        turn += 1;
        if exhausted[class as usize] {
            continue;
        }
        let weight = |i: usize| {
            if taken[i] {
                0.0
            } else {
                req.data.fraction(req.candidates[i], class).max(0.0)
            }
        };
        let total: f64 = (0..n).map(weight).sum();
        if total <= 0.0 {
            exhausted[class as usize] = true;
            continue;
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for i in 0..n {
            let w = weight(i);
            if w <= 0.0 {
                continue;
            }
            chosen = Some(i);
            acc += w;
            if target < acc {
                break;
            }
        }
        // rounding can leave target == total; `chosen` is then the last
        // positive-weight chip
        let i = chosen.expect("positive total implies a positive weight");
        taken[i] = true;
        out.push(req.candidates[i]);
    }
    Ok(out)
}

/// Furthest point sampling in embedding space from a seeded random start.
pub fn fps_sample(req: &SampleRequest) -> Result<Vec<usize>> {
    req.check()?;
    if req.k == 0 {
        return Ok(Vec::new());
    }
    let start = rng(req.seed).random_range(0..req.candidates.len());
    fps_sample_from(req, start)
}

/// Furthest point sampling starting from `candidates[start]`.
///
/// Each step adds the unchosen candidate whose minimum Euclidean distance to
/// the chosen set is largest. Keeps a running minimum per candidate, so the
/// cost is `O(n k d)`.
pub fn fps_sample_from(req: &SampleRequest, start: usize) -> Result<Vec<usize>> {
    req.check()?;
    let n = req.candidates.len();
    if req.k == 0 {
        return Ok(Vec::new());
    }
    if start >= n {
        return Err(Error::InvalidInput(format!("start {start} out of {n} candidates")));
    }
    let points: Vec<&[f32]> = req.candidates.iter().map(|&p| req.data.embedding(p)).collect();
    let mut min_d2 = vec![f64::INFINITY; n];
    let mut taken = vec![false; n];
    let mut out = Vec::with_capacity(req.k);
    let mut current = start;
    loop {
        taken[current] = true;
        out.push(req.candidates[current]);
        if out.len() == req.k {
            break;
        }
        let anchor = points[current];
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if taken[i] {
                continue;
            }
            let d2 = squared_distance(anchor, points[i]);
            if d2 < min_d2[i] {
                min_d2[i] = d2;
            }
            if best.is_none_or(|(_, b)| min_d2[i] > b) {
                best = Some((i, min_d2[i]));
            }
        }
        current = best.expect("k <= n leaves an unchosen candidate").0;
    }
    Ok(out)
}

fn squared_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum()
}

/// Elevation-stratified draw: split candidates into `k` equal-count
/// quantile bins of elevation (chips tied in elevation all go to the lowest
/// bin any of them would fall in), take one chip uniformly from each
/// non-empty bin, then fill any shortfall uniformly from unchosen chips.
pub fn srtm_sample(req: &SampleRequest) -> Result<Vec<usize>> {
    req.check()?;
    let n = req.candidates.len();
    let k = req.k;
    if k == 0 {
        return Ok(Vec::new());
    }
    let elev: Vec<f64> = req.candidates.iter().map(|&p| req.data.elevation(p)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| elev[a].total_cmp(&elev[b]).then(a.cmp(&b)));

    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut bin_of_group = 0;
    for (rank, &i) in order.iter().enumerate() {
        let tentative = rank * k / n;
        let starts_group = rank == 0 || elev[order[rank - 1]] != elev[i];
        if starts_group {
            bin_of_group = tentative;
        }
        bins[bin_of_group].push(i);
    }
    for bin in &mut bins {
        bin.sort_unstable();
    }

    let mut rng = rng(req.seed);
    let mut taken = vec![false; n];
    let mut out = Vec::with_capacity(k);
    for bin in bins.iter().filter(|b| !b.is_empty()) {
        let i = bin[rng.random_range(0..bin.len())];
        taken[i] = true;
        out.push(req.candidates[i]);
    }
    if out.len() < k {
        let rest: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
        let picks = rand::seq::index::sample(&mut rng, rest.len(), k - out.len());
        out.extend(picks.into_iter().map(|i| req.candidates[rest[i]]));
    }
    Ok(out)
}

/// Disjoint test and train draws from one AOI's candidates.
///
/// The test set is drawn first, uniformly at random; the train set is then
/// drawn with `train_kind` from the remaining candidates. Both use sub-seeds
/// derived from `seed`.
pub fn split_target(
    candidates: &[usize],
    n_test: usize,
    n_train: usize,
    train_kind: SamplerKind,
    seed: u64,
    data: &dyn SamplingData,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if n_test + n_train > candidates.len() {
        return Err(Error::InvalidInput(format!(
            "{n_test} test + {n_train} train exceeds {} candidates",
            candidates.len()
        )));
    }
    let test = random_sample(&SampleRequest {
        candidates,
        k: n_test,
        seed: derive_seed(seed, TAG_TEST, 0),
        kind: SamplerKind::Random,
        data,
    })?;
    let mut in_test = test.clone();
    in_test.sort_unstable();
    let remaining: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|p| in_test.binary_search(p).is_err())
        .collect();
    let train = sample(&SampleRequest {
        candidates: &remaining,
        k: n_train,
        seed: derive_seed(seed, TAG_TRAIN, 0),
        kind: train_kind,
        data,
    })?;
    Ok((test, train))
}

mod common;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use probeforge::sampling::{
    esawc_sample, fps_sample_from, random_sample, srtm_sample, SampleRequest, SamplerKind, SamplingData,
};
use probeforge::seed::{derive_seed, TAG_REPETITION};
use probeforge::ClassId;

struct Fracs(Vec<[f64; ClassId::COUNT]>);

impl SamplingData for Fracs {
    fn fraction(&self, pos: usize, class: ClassId) -> f64 {
        self.0[pos][class as usize]
    }
}

struct Elevations(Vec<f64>);

impl SamplingData for Elevations {
    fn elevation(&self, pos: usize) -> f64 {
        self.0[pos]
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exact probability of every final chosen set, by walking the tree of all
/// draw sequences the round-robin class sampler can make.
fn esawc_tree(fr: &[[f64; ClassId::COUNT]], k: usize) -> BTreeMap<BTreeSet<usize>, f64> {
    fn walk(
        fr: &[[f64; ClassId::COUNT]],
        k: usize,
        chosen: &mut Vec<usize>,
        turn: usize,
        exhausted: [bool; ClassId::COUNT],
        p: f64,
        out: &mut BTreeMap<BTreeSet<usize>, f64>,
    ) {
        if chosen.len() == k {
            *out.entry(chosen.iter().copied().collect()).or_default() += p;
            return;
        }
        if exhausted.iter().all(|&e| e) {
            // uniform over sets completing the draw
            let rest: Vec<usize> = (0..fr.len()).filter(|i| !chosen.contains(i)).collect();
            let need = k - chosen.len();
            let combos = binomial(rest.len() as u64, need as u64);
            for mask in 0u32..(1 << rest.len()) {
                if mask.count_ones() as usize == need {
                    let mut set: BTreeSet<usize> = chosen.iter().copied().collect();
                    set.extend((0..rest.len()).filter(|b| mask & (1 << b) != 0).map(|b| rest[b]));
                    *out.entry(set).or_default() += p / combos;
                }
            }
            return;
        }
        let c = turn % ClassId::COUNT;
        if exhausted[c] {
            return walk(fr, k, chosen, turn + 1, exhausted, p, out);
        }
        let total: f64 = (0..fr.len()).filter(|i| !chosen.contains(i)).map(|i| fr[i][c]).sum();
        if total <= 0.0 {
            let mut ex = exhausted;
            ex[c] = true;
            return walk(fr, k, chosen, turn + 1, ex, p, out);
        }
        for i in 0..fr.len() {
            if chosen.contains(&i) || fr[i][c] <= 0.0 {
                continue;
            }
            chosen.push(i);
            walk(fr, k, chosen, turn + 1, exhausted, p * fr[i][c] / total, out);
            chosen.pop();
        }
    }
    let mut out = BTreeMap::new();
    walk(fr, k, &mut Vec::new(), 0, [false; ClassId::COUNT], 1.0, &mut out);
    out
}

fn check_esawc_against_tree(fr: Vec<[f64; ClassId::COUNT]>, k: usize) {
    let exact = esawc_tree(&fr, k);
    assert!((exact.values().sum::<f64>() - 1.0).abs() < 1e-12);
    let data = Fracs(fr);
    let candidates: Vec<usize> = (0..data.0.len()).collect();
    let trials = 100_000u64;
    let mut counts: BTreeMap<BTreeSet<usize>, u64> = BTreeMap::new();
    for seed in 0..trials {
        let got = esawc_sample(&SampleRequest {
            candidates: &candidates,
            k,
            seed,
            kind: SamplerKind::Esawc,
            data: &data,
        })
        .unwrap();
        let set: BTreeSet<usize> = got.iter().copied().collect();
        assert_eq!(set.len(), k, "repeated chip in {got:?}");
        *counts.entry(set).or_default() += 1;
    }
    for set in counts.keys() {
        assert!(exact.contains_key(set), "impossible set {set:?} drawn");
    }
    for (set, p) in &exact {
        let observed = *counts.get(set).unwrap_or(&0) as f64;
        let expected = trials as f64 * p;
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (observed - expected).abs() <= 3.0 * sigma,
            "{set:?}: observed {observed}, expected {expected:.1} (sigma {sigma:.1})"
        );
    }
}

#[test]
fn esawc_matches_exhaustive_tree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut fr: Vec<[f64; ClassId::COUNT]> = (0..6)
        .map(|_| std::array::from_fn(|_| rng.random_range(0.0..0.14)))
        .collect();
    // one class absent everywhere, one present on two chips only
    for row in fr.iter_mut() {
        row[ClassId::PermanentWater as usize] = 0.0;
    }
    for (i, row) in fr.iter_mut().enumerate() {
        if i >= 2 {
            row[ClassId::Builtup as usize] = 0.0;
        }
    }
    check_esawc_against_tree(fr, 4);
}

#[test]
fn esawc_fallback_matches_exhaustive_tree() {
    // only tree cover is present, on two chips: after they are taken the
    // sampler falls back to uniform picks
    let fr: Vec<[f64; ClassId::COUNT]> = (0..6)
        .map(|i| {
            let mut row = [0.0; ClassId::COUNT];
            if i < 2 {
                row[ClassId::TreeCover as usize] = 0.1 * (i + 1) as f64;
            }
            row
        })
        .collect();
    check_esawc_against_tree(fr, 4);
}

#[test]
fn esawc_gives_absent_class_no_draws() {
    // chips 0..5 only hold tree cover, chips 5..10 only cropland; no chip
    // holds any other class, so every draw comes from the round-robin over
    // the two present classes and alternates between them
    let fr: Vec<[f64; ClassId::COUNT]> = (0..10)
        .map(|i| {
            let mut row = [0.0; ClassId::COUNT];
            let class = if i < 5 { ClassId::TreeCover } else { ClassId::Cropland };
            row[class as usize] = 0.05 + 0.01 * i as f64;
            row
        })
        .collect();
    let data = Fracs(fr);
    let candidates: Vec<usize> = (0..10).collect();
    for seed in 0..200 {
        let got = esawc_sample(&SampleRequest {
            candidates: &candidates,
            k: 6,
            seed,
            kind: SamplerKind::Esawc,
            data: &data,
        })
        .unwrap();
        let trees = got.iter().filter(|&&p| p < 5).count();
        assert_eq!(trees, 3, "{got:?}");
    }
}

#[test]
fn random_inclusion_is_binomial() {
    let candidates: Vec<usize> = (0..100).collect();
    let reps = 10_000u64;
    let mut hits = [0u64; 100];
    for rep in 0..reps {
        // seeds derived as the runner derives repetition seeds
        let got = random_sample(&SampleRequest {
            candidates: &candidates,
            k: 10,
            seed: derive_seed(2024, TAG_REPETITION, rep),
            kind: SamplerKind::Random,
            data: &probeforge::sampling::NoData,
        })
        .unwrap();
        assert_eq!(got.iter().collect::<BTreeSet<_>>().len(), 10);
        for p in got {
            hits[p] += 1;
        }
    }
    let p = 0.1;
    let sigma = (reps as f64 * p * (1.0 - p)).sqrt();
    for (pos, &h) in hits.iter().enumerate() {
        assert!((h as f64 - reps as f64 * p).abs() <= 4.0 * sigma, "position {pos}: {h}");
    }
}

#[test]
fn srtm_picks_one_per_quartile() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for seed in 0..50 {
        let elev: Vec<f64> = (0..1000).map(|_| rng.random_range(0.0..4000.0)).collect();
        let mut sorted = elev.clone();
        sorted.sort_by(f64::total_cmp);
        let data = Elevations(elev.clone());
        let candidates: Vec<usize> = (0..1000).collect();
        let got = srtm_sample(&SampleRequest {
            candidates: &candidates,
            k: 4,
            seed,
            kind: SamplerKind::Srtm,
            data: &data,
        })
        .unwrap();
        let mut quartiles: Vec<usize> = got
            .iter()
            .map(|&p| sorted.iter().position(|&e| e == elev[p]).unwrap() / 250)
            .collect();
        quartiles.sort_unstable();
        assert_eq!(quartiles, vec![0, 1, 2, 3], "seed {seed}");
    }
}

#[test]
fn fps_matches_brute_force_for_all_starts() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let n = rng.random_range(2..60);
        let points: Vec<Vec<f32>> = (0..n)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0f32..1.0)).collect())
            .collect();
        let cloud = common::Cloud(points);
        let candidates: Vec<usize> = (0..n).collect();
        let k = rng.random_range(1..=n.min(20));
        for start in 0..n {
            let req = SampleRequest {
                candidates: &candidates,
                k,
                seed: 0,
                kind: SamplerKind::Fps,
                data: &cloud,
            };
            assert_eq!(
                fps_sample_from(&req, start).unwrap(),
                common::fps_brute(&cloud.0, &candidates, k, start)
            );
        }
    }
}

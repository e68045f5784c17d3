//! Acceptance criteria. Each check prints one PASS/FAIL line; the test
//! fails if any check does. Checks run one after another so the timed ones
//! are not competing with each other for cores.

mod common;

use std::collections::HashSet;
use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use probeforge::domain::Modality;
use probeforge::ingest::synth::SynthFm;
use probeforge::ingest::{
    compute_class_fractions, load_embeddings, save_embeddings, seasonal_median_composite, synthesize_dataset, CodeMap,
    ImageStack, LabelGrid, Season, SynthSpec,
};
use probeforge::ingest::raster::SeasonCalendar;
use probeforge::metrics::{pearson, rmse, Thresholds};
use probeforge::probe;
use probeforge::report::{selection_table, SelectionCriterion};
use probeforge::runner::{
    enumerate_grid, run_experiment, run_grid, DataCatalog, ExperimentSpec, GridSpec, Regime, ResultRow, RunOptions,
};
use probeforge::sampling::{fps_sample_from, SampleRequest, SamplerKind};
use probeforge::{assemble_dataset, ClassId, EmbeddingSet, FmDescriptor};

struct Check {
    pass: bool,
    detail: String,
}

impl Check {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Check {
            pass,
            detail: detail.into(),
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(f64::MIN_POSITIVE)
}

fn probe_oracle() -> Check {
    let started = Instant::now();
    let sizes = [10, 50, 100, 500];
    let dims = [8, 64, 768];
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_rel = 0.0f64;
    let mut worst_resid = 0.0f64;
    let mut failures = 0;
    for i in 0..100 {
        let n = sizes[i % 4];
        let d = dims[(i / 4) % 3];
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let x = DMatrix::from_fn(n, d, |_, _| scale * gaussian(&mut rng));
        let y: Vec<f64> = (0..n).map(|_| gaussian(&mut rng) + 3.0).collect();

        let fitted = probe::fit(&x, &y).unwrap();
        let (w, b) = common::pinv_fit(&x, &y);
        let rel = rel_err(fitted.weights(), &w);
        let b_err = (fitted.intercept() - b).abs() / (1.0 + b.abs());
        worst_rel = worst_rel.max(rel).max(b_err);
        if rel > 1e-8 || b_err > 1e-8 {
            failures += 1;
        }
        if n <= d {
            let pred = probe::predict(&fitted, &x).unwrap();
            let resid = pred.iter().zip(&y).map(|(p, t)| (p - t).abs()).fold(0.0, f64::max);
            worst_resid = worst_resid.max(resid);
            if resid > 1e-6 {
                failures += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    Check::new(
        failures == 0 && elapsed < Duration::from_secs(30),
        format!(
            "100 instances, worst relative error {worst_rel:.2e}, worst residual {worst_resid:.2e}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn fps_oracle() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut mismatches = 0;
    for cloud_idx in 0..50 {
        let n = rng.random_range(2..=200);
        let d = if cloud_idx % 2 == 0 { 2 } else { 16 };
        let k = rng.random_range(1..=20.min(n));
        let mut points: Vec<Vec<f32>> = (0..n)
            .map(|_| (0..d).map(|_| gaussian(&mut rng) as f32).collect())
            .collect();
        if cloud_idx % 5 == 0 {
            // exact duplicates force distance ties
            for i in 0..n / 3 {
                points[n - 1 - i] = points[i].clone();
            }
        }
        let cloud = common::Cloud(points);
        // candidates are a shuffled subset of positions
        let mut candidates: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            candidates.swap(i, rng.random_range(0..=i));
        }
        candidates.truncate(rng.random_range(k..=n));
        let start = rng.random_range(0..candidates.len());
        let got = fps_sample_from(
            &SampleRequest {
                candidates: &candidates,
                k,
                seed: 0,
                kind: SamplerKind::Fps,
                data: &cloud,
            },
            start,
        )
        .unwrap();
        if got != common::fps_brute(&cloud.0, &candidates, k, start) {
            mismatches += 1;
        }
    }
    let elapsed = started.elapsed();
    Check::new(
        mismatches == 0 && elapsed < Duration::from_secs(10),
        format!("50 clouds, {mismatches} mismatches, {:.2}s", elapsed.as_secs_f64()),
    )
}

fn metric_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst_r = 0.0f64;
    let mut worst_rmse = 0.0f64;
    let mut worst_affine = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(3..=500);
        let slope = rng.random_range(-2.0..2.0);
        let a: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
        let b: Vec<f64> = a.iter().map(|x| slope * x + gaussian(&mut rng)).collect();

        let r = pearson(&a, &b).unwrap();
        worst_r = worst_r.max((r - common::pearson_z(&a, &b)).abs());
        let e = rmse(&a, &b).unwrap();
        let want = common::rmse_naive(&a, &b);
        worst_rmse = worst_rmse.max((e - want).abs() / want.max(1.0));

        let (s, t) = (rng.random_range(0.1..10.0), rng.random_range(-100.0..100.0));
        let (u, v) = (rng.random_range(-10.0..-0.1), rng.random_range(-100.0..100.0));
        let a2: Vec<f64> = a.iter().map(|x| s * x + t).collect();
        let b2: Vec<f64> = b.iter().map(|y| u * y + v).collect();
        worst_affine = worst_affine.max((pearson(&a2, &b2).unwrap() + r).abs());
    }
    Check::new(
        worst_r <= 1e-12 && worst_rmse <= 1e-12 && worst_affine <= 1e-12,
        format!("1000 pairs, pearson {worst_r:.1e}, rmse {worst_rmse:.1e}, affine {worst_affine:.1e}"),
    )
}

fn external_spec(fm: &str, class: ClassId, n_train: usize, n_test: usize, repetitions: usize) -> ExperimentSpec {
    ExperimentSpec {
        fm_id: fm.into(),
        class,
        regime: Regime::External,
        train_aoi: "aoi0".into(),
        target_aoi: "aoi1".into(),
        sampler: SamplerKind::Random,
        n_train,
        n_test,
        repetitions,
        base_seed: 0,
        infeasible: false,
    }
}

fn single_model_catalog(spec: &SynthSpec) -> DataCatalog {
    let s = synthesize_dataset(spec).unwrap();
    DataCatalog::from_datasets(s.embeddings.iter().map(|e| assemble_dataset(&s.table, e).unwrap()))
}

fn synthetic_recovery() -> Check {
    let mut spec = SynthSpec::new(2000, 64, SynthSpec::noise_for_correlation(0.9), 2);
    let rho = spec.latent_correlation();
    let noisy = single_model_catalog(&spec);
    spec.noise_sigma = 0.0;
    let clean = single_model_catalog(&spec);

    let mut worst_gap = 0.0f64;
    let mut worst_clean = 1.0f64;
    for class in ClassId::ALL {
        let grid_point = external_spec("synth", class, 500, 500, 20);
        let r = run_experiment(&grid_point, &noisy).unwrap().metrics.unwrap().r_mean;
        worst_gap = worst_gap.max((r - rho).abs());
        let r0 = run_experiment(&grid_point, &clean).unwrap().metrics.unwrap().r_mean;
        worst_clean = worst_clean.min(r0);
    }
    Check::new(
        worst_gap <= 0.05 && worst_clean >= 1.0 - 1e-6,
        format!("rho {rho:.4}, worst |r_mean - rho| {worst_gap:.4} over 7 classes, noiseless min r_mean {worst_clean:.9}"),
    )
}

fn uncertainty_trend() -> Check {
    let n_tests = [10, 50, 100, 500];
    let mut sums = [0.0; 4];
    for ds in 0..10u64 {
        let spec = SynthSpec {
            weight_seed: 1000 + ds,
            data_seed: 2000 + ds,
            ..SynthSpec::new(2000, 64, SynthSpec::noise_for_correlation(0.9), 2)
        };
        let cat = single_model_catalog(&spec);
        for (slot, &n_test) in n_tests.iter().enumerate() {
            let rec = run_experiment(&external_spec("synth", ClassId::TreeCover, 500, n_test, 20), &cat).unwrap();
            sums[slot] += rec.metrics.unwrap().r_std;
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| s / 10.0).collect();
    let strict = means[3] < means[0];
    let monotone = means.windows(2).all(|w| w[1] <= w[0] + 0.005);
    Check::new(
        strict && monotone,
        format!(
            "mean r_std at n_test 10/50/100/500: {}",
            means.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>().join(" / ")
        ),
    )
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn grid_arithmetic() -> Check {
    let target = GridSpec {
        regimes: vec![Regime::TargetSplit],
        fms: names("fm", 8),
        classes: ClassId::ALL.to_vec(),
        external_aois: vec![],
        target_aois: names("t", 8),
        samplers: SamplerKind::ALL.to_vec(),
        n_train_external: vec![],
        n_train_target: vec![10, 50, 100, 500],
        n_test_target: vec![10, 50, 100, 500],
        repetitions: 20,
        base_seed: 0,
    };
    let specs = enumerate_grid(&target, None).unwrap();
    let oracle = target.fms.len()
        * target.classes.len()
        * target.target_aois.len()
        * target.samplers.len()
        * target.n_train_target.len()
        * target.n_test_target.len();
    let unique: HashSet<String> = specs.iter().map(|s| s.canonical_key()).collect();
    let target_ok = specs.len() == 28_672 && oracle == 28_672 && unique.len() == specs.len();

    let aois = names("aoi", 5);
    let external = GridSpec {
        regimes: vec![Regime::External],
        external_aois: aois.clone(),
        target_aois: aois.clone(),
        n_train_external: vec![100, 300],
        fms: names("fm", 3),
        ..target.clone()
    };
    let ext_specs = enumerate_grid(&external, None).unwrap();
    let per_pair = external.fms.len()
        * external.classes.len()
        * external.samplers.len()
        * external.n_train_external.len()
        * external.n_test_target.len();
    let pair_oracle = aois.len() * aois.len() - aois.len();
    let pairs: HashSet<(String, String)> =
        ext_specs.iter().map(|s| (s.train_aoi.clone(), s.target_aoi.clone())).collect();
    let external_ok = ext_specs.len() == per_pair * pair_oracle
        && pairs.len() == pair_oracle
        && ext_specs.iter().all(|s| s.train_aoi != s.target_aoi);

    Check::new(
        target_ok && external_ok,
        format!(
            "target-split {} specs (oracle {oracle}), external {} specs (oracle {})",
            specs.len(),
            ext_specs.len(),
            per_pair * pair_oracle
        ),
    )
}

fn determinism() -> Check {
    let spec = SynthSpec {
        fms: ["a", "b"]
            .iter()
            .map(|id| SynthFm {
                fm_id: id.to_string(),
                modality: Modality::S2,
                extra_noise: 0.3,
            })
            .collect(),
        ..SynthSpec::new(300, 8, 0.5, 3)
    };
    let cat = single_model_catalog(&spec);
    let grid = GridSpec {
        regimes: vec![Regime::External, Regime::TargetSplit],
        fms: vec!["a".into(), "b".into()],
        classes: ClassId::ALL[..5].to_vec(),
        external_aois: vec!["aoi0".into(), "aoi1".into()],
        target_aois: vec!["aoi1".into(), "aoi2".into()],
        samplers: SamplerKind::ALL.to_vec(),
        n_train_external: vec![20],
        n_train_target: vec![15],
        n_test_target: vec![25],
        repetitions: 5,
        base_seed: 77,
    };
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: usize, resume: bool| {
        let path = dir.path().join(name);
        let summary = run_grid(
            &grid,
            &cat,
            &path,
            &RunOptions {
                threads: Some(threads),
                resume,
                record_timing: false,
            },
        )
        .unwrap();
        (summary, path)
    };
    let (one, p1) = run("t1.csv", 1, false);
    let (_, p8) = run("t8.csv", 8, false);
    let bytes1 = std::fs::read(&p1).unwrap();
    let bytes8 = std::fs::read(&p8).unwrap();

    // keep the header, 120 rows and half of the next row
    let text = String::from_utf8(bytes1.clone()).unwrap();
    let cut: usize = text.split_inclusive('\n').take(121).map(str::len).sum();
    let partial_row = text[cut..].split_inclusive('\n').next().unwrap();
    let truncated = &text[..cut + partial_row.len() / 2];
    let p_resume = dir.path().join("resume.csv");
    std::fs::write(&p_resume, truncated).unwrap();
    let (resumed, _) = run("resume.csv", 8, true);
    let bytes_resumed = std::fs::read(&p_resume).unwrap();

    Check::new(
        one.total == 200 && bytes1 == bytes8 && resumed.executed == 80 && bytes_resumed == bytes1,
        format!(
            "{} specs, 1 vs 8 threads identical: {}, resume executed {} and identical: {}",
            one.total,
            bytes1 == bytes8,
            resumed.executed,
            bytes_resumed == bytes1
        ),
    )
}

fn performance() -> Check {
    let fms: Vec<SynthFm> = (0..6)
        .map(|i| SynthFm {
            fm_id: format!("fm{i}"),
            modality: Modality::S2,
            extra_noise: 0.1 * i as f64,
        })
        .collect();
    let spec = SynthSpec {
        fms,
        ..SynthSpec::new(4000, 64, 0.5, 4)
    };
    let cat = single_model_catalog(&spec);
    let aois = names("aoi", 4);
    let grid = GridSpec {
        regimes: vec![Regime::External],
        fms: (0..6).map(|i| format!("fm{i}")).collect(),
        classes: ClassId::ALL.to_vec(),
        external_aois: aois.clone(),
        target_aois: aois,
        samplers: vec![SamplerKind::Random],
        n_train_external: vec![500],
        n_train_target: vec![],
        n_test_target: vec![500],
        repetitions: 20,
        base_seed: 5,
    };
    let dir = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let summary = run_grid(&grid, &cat, &dir.path().join("perf.csv"), &RunOptions::default()).unwrap();
    let elapsed = started.elapsed();
    let fits = summary.total * grid.repetitions;
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    Check::new(
        fits >= 10_000 && elapsed <= Duration::from_secs(60),
        format!(
            "{fits} fits (n 500, d 64) in {:.1}s on {cores} core(s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn row(target: &str, fm: &str, sampler: SamplerKind, n_train: usize, n_test: usize, mean: f64, std: f64) -> ResultRow {
    ResultRow {
        fm_id: fm.into(),
        class: ClassId::TreeCover,
        regime: Regime::TargetSplit,
        train_aoi: target.into(),
        target_aoi: target.into(),
        sampler,
        n_train,
        n_test,
        repetitions: 20,
        r_mean: Some(mean),
        r_std: Some(std),
        rmse_mean: Some(0.1),
        rmse_std: Some(0.01),
        degenerate_runs: 0,
        infeasible: false,
        wall_ms: 0,
        base_seed: 0,
    }
}

fn selection_semantics() -> Check {
    let t = Thresholds::default();
    let chosen = |rows: &[ResultRow], c: SelectionCriterion| -> Option<ResultRow> {
        selection_table(rows, c, t).into_iter().next().and_then(|s| s.chosen)
    };
    let lte = SelectionCriterion::LeastTotalElements;
    let included = chosen(&[row("a", "fm", SamplerKind::Random, 50, 10, 0.71, 0.04)], lte).is_some();
    let high_std = chosen(&[row("a", "fm", SamplerKind::Random, 50, 10, 0.71, 0.06)], lte).is_none();
    let low_mean = chosen(&[row("a", "fm", SamplerKind::Random, 50, 10, 0.69, 0.01)], lte).is_none();

    let group = [
        row("colombia", "s1-fdl2024mae", SamplerKind::Fps, 100, 10, 0.947, 0.032),
        row("colombia", "s1-fdl2024mae", SamplerKind::Random, 10, 50, 0.816, 0.048),
    ];
    let least = chosen(&group, lte).map(|r| r.total_elements());
    let best = chosen(&group, SelectionCriterion::BestCorrMean).map(|r| r.total_elements());
    Check::new(
        included && high_std && low_mean && least == Some(60) && best == Some(110),
        format!(
            "(0.71,0.04) in: {included}, (0.71,0.06) out: {high_std}, (0.69,0.01) out: {low_mean}, \
             least-elements {least:?}, best-mean {best:?}"
        ),
    )
}

fn ingestion() -> Check {
    let map = CodeMap::worldcover();
    let codes = [0u8, 10, 20, 30, 40, 50, 60, 70, 80, 90, 95, 100];
    let mut rng = ChaCha8Rng::seed_from_u64(1010);

    let mut fraction_mismatch = 0;
    for _ in 0..100 {
        let (h, w) = (rng.random_range(1..40), rng.random_range(1..40));
        let mut grid: Vec<u8> = (0..h * w).map(|_| codes[rng.random_range(0..codes.len())]).collect();
        grid[0] = 10; // at least one valid pixel
        let got = compute_class_fractions(&LabelGrid::new(h, w, grid.clone(), &map).unwrap(), &map).unwrap();
        if got.0 != common::fractions_by_counting(&grid, &map) {
            fraction_mismatch += 1;
        }
    }

    let mut median_mismatch = 0;
    for _ in 0..20 {
        let (h, w, bands) = (rng.random_range(1..6), rng.random_range(1..6), rng.random_range(1..4));
        let px = h * w;
        let n_dates = rng.random_range(4..16);
        let mut dates: Vec<u32> = (0..n_dates)
            .map(|i| {
                let month = if i < 4 { [1, 4, 7, 10][i] } else { rng.random_range(1..=12) };
                20230000 + month * 100 + 1 + i as u32
            })
            .collect();
        dates.sort_unstable();
        let values: Vec<f32> = (0..n_dates * bands * px)
            .map(|_| (rng.random_range(0..50) as f32) * 0.25)
            .collect();
        let valid: Vec<bool> = (0..n_dates * px).map(|_| rng.random_bool(0.7)).collect();
        let stack = ImageStack::new(h, w, bands, dates.clone(), values.clone(), valid.clone()).unwrap();
        let calendar = SeasonCalendar::meteorological(&dates);
        let composite = seasonal_median_composite(&stack, &calendar).unwrap();
        for season in Season::ALL {
            for band in 0..bands {
                for pixel in 0..px {
                    let pool: Vec<f32> = (0..n_dates)
                        .filter(|&t| Season::of_month(dates[t] / 100 % 100) == Some(season) && valid[t * px + pixel])
                        .map(|t| values[(t * bands + band) * px + pixel])
                        .collect();
                    let want = common::median_sorted(pool);
                    let got = composite.value(season, band, pixel);
                    if !(got == want || (got.is_nan() && want.is_nan())) {
                        median_mismatch += 1;
                    }
                }
            }
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let fm = FmDescriptor::new("m", Modality::S1, 33).unwrap();
    let ids: Vec<String> = (0..57).map(|i| format!("c{i}")).collect();
    let data: Vec<f32> = (0..57 * 33)
        .map(|_| f32::from_bits(rng.random::<u32>() & 0xBF7F_FFFF))
        .collect();
    let emb = EmbeddingSet::new(fm.clone(), ids, data).unwrap();
    let (pd, pi) = (dir.path().join("m.emb"), dir.path().join("m.idx"));
    save_embeddings(&emb, &pd, &pi).unwrap();
    let back = load_embeddings(&pd, &pi, &fm).unwrap();
    let bit_exact = back.chip_ids() == emb.chip_ids()
        && back.data().iter().zip(emb.data()).all(|(a, b)| a.to_bits() == b.to_bits());

    Check::new(
        fraction_mismatch == 0 && median_mismatch == 0 && bit_exact,
        format!(
            "fractions {fraction_mismatch}/100 mismatches, medians {median_mismatch} mismatches, embeddings bit-exact: {bit_exact}"
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let checks: [(&str, fn() -> Check); 10] = [
        ("probe solver matches pseudoinverse oracle", probe_oracle),
        ("fps matches brute-force greedy", fps_oracle),
        ("pearson and rmse match oracles", metric_oracles),
        ("synthetic signal recovery", synthetic_recovery),
        ("r_std shrinks with n_test", uncertainty_trend),
        ("grid arithmetic", grid_arithmetic),
        ("determinism and resume", determinism),
        ("10,000 fits within 60 s", performance),
        ("selection semantics", selection_semantics),
        ("ingestion oracles", ingestion),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in checks.iter().enumerate() {
        let c = check();
        // written to the handle directly so the line shows without --nocapture
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "[{}] criterion {} {name}: {}", if c.pass { "PASS" } else { "FAIL" }, i + 1, c.detail);
        if !c.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

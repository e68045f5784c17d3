//! Reference implementations used as test oracles. Written for clarity,
//! not speed, and sharing no code with the library.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use probeforge::ingest::CodeMap;
use probeforge::sampling::SamplingData;
use probeforge::ClassId;

/// Minimum-norm least squares with an unpenalized intercept, via the
/// eigendecomposition of whichever Gram matrix is smaller.
pub fn pinv_fit(x: &DMatrix<f64>, y: &[f64]) -> (Vec<f64>, f64) {
    let (n, d) = x.shape();
    let means: Vec<f64> = (0..d).map(|j| x.column(j).iter().sum::<f64>() / n as f64).collect();
    let y_bar = y.iter().sum::<f64>() / n as f64;
    let xc = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - means[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_bar));

    let w = if n >= d {
        // w = (Xc' Xc)+ Xc' yc
        let g = xc.transpose() * &xc;
        gram_pinv(g) * (xc.transpose() * yc)
    } else {
        // w = Xc' (Xc Xc')+ yc
        let g = &xc * xc.transpose();
        xc.transpose() * (gram_pinv(g) * yc)
    };
    let b = y_bar - w.iter().zip(&means).map(|(a, m)| a * m).sum::<f64>();
    (w.as_slice().to_vec(), b)
}

fn gram_pinv(g: DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(g);
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
    let inv = eig
        .eigenvalues
        .map(|l| if l > 1e-12 * lmax { 1.0 / l } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

/// Greedy furthest-point selection, recomputing every distance to every
/// chosen point at each step. Ties go to the earliest candidate.
pub fn fps_brute(points: &[Vec<f32>], candidates: &[usize], k: usize, start: usize) -> Vec<usize> {
    let d2 = |a: usize, b: usize| -> f64 {
        let mut s = 0.0;
        for t in 0..points[a].len() {
            let diff = points[a][t] as f64 - points[b][t] as f64;
            s += diff * diff;
        }
        s
    };
    let mut chosen = vec![start];
    while chosen.len() < k {
        let mut best = None;
        let mut best_d = -1.0;
        for i in 0..candidates.len() {
            if chosen.contains(&i) {
                continue;
            }
            let nearest = chosen
                .iter()
                .map(|&c| d2(candidates[i], candidates[c]))
                .fold(f64::INFINITY, f64::min);
            if nearest > best_d {
                best_d = nearest;
                best = Some(i);
            }
        }
        chosen.push(best.unwrap());
    }
    chosen.into_iter().map(|i| candidates[i]).collect()
}

/// Point cloud usable as sampling data.
pub struct Cloud(pub Vec<Vec<f32>>);

impl SamplingData for Cloud {
    fn embedding(&self, pos: usize) -> &[f32] {
        &self.0[pos]
    }
}

/// Pearson correlation as the mean product of z-scores.
pub fn pearson_z(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let stats = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / n;
        let s = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
        (m, s)
    };
    let (ma, sa) = stats(a);
    let (mb, sb) = stats(b);
    a.iter()
        .zip(b)
        .map(|(x, y)| ((x - ma) / sa) * ((y - mb) / sb))
        .sum::<f64>()
        / n
}

pub fn rmse_naive(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    (s / a.len() as f64).sqrt()
}

/// Per-pixel count of each class over non-no-data pixels.
pub fn fractions_by_counting(codes: &[u8], map: &CodeMap) -> [f64; ClassId::COUNT] {
    let mut out = [0.0; ClassId::COUNT];
    let valid = codes.iter().filter(|&&c| c != map.nodata()).count();
    for class in ClassId::ALL {
        let code = map.code_of(class).unwrap();
        let hits = codes.iter().filter(|&&c| c == code).count();
        out[class as usize] = hits as f64 / valid as f64;
    }
    out
}

/// Median by full sort; NaN for an empty set.
pub fn median_sorted(mut values: Vec<f32>) -> f32 {
    if values.is_empty() {
        return f32::NAN;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        ((values[n / 2 - 1] as f64 + values[n / 2] as f64) * 0.5) as f32
    }
}

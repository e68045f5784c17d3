//! Analysis tables built from a results file: correlation heatmaps,
//! flat scatter data for ablation plots, and threshold-based selection of
//! the best configuration per target AOI and class.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{ClassId, Modality};
use crate::error::{Error, Result};
use crate::metrics::Thresholds;
use crate::runner::results::{format_sig6, ResultRow};
use crate::runner::Regime;
use crate::sampling::SamplerKind;

/// Modality from an explicit map, else from an `s1`/`s2` id prefix.
pub fn modality_of(fm_id: &str, known: &BTreeMap<String, Modality>) -> Option<Modality> {
    if let Some(m) = known.get(fm_id) {
        return Some(*m);
    }
    let lower = fm_id.to_ascii_lowercase();
    if lower.starts_with("s1") {
        Some(Modality::S1)
    } else if lower.starts_with("s2") {
        Some(Modality::S2)
    } else {
        None
    }
}

#[derive(Clone, Debug, Default)]
pub struct HeatmapFilter {
    pub regime: Option<Regime>,
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
    pub sampler: Option<SamplerKind>,
}

/// Mean correlation per (model, train AOI -> target AOI) for one class.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub class: ClassId,
    /// Row labels: S1 models, then S2, then unknown modality.
    pub fms: Vec<(String, Option<Modality>)>,
    /// Column labels, sorted.
    pub pairs: Vec<(String, String)>,
    /// `cells[row][col]`; `None` where no record (or no metric) exists.
    pub cells: Vec<Vec<Option<f64>>>,
}

impl Heatmap {
    pub fn to_csv(&self) -> String {
        let mut header = vec!["fm_id".to_string(), "modality".to_string()];
        header.extend(self.pairs.iter().map(|(tr, tg)| format!("{tr}->{tg}")));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&header).expect("in-memory write");
        for ((fm, modality), row) in self.fms.iter().zip(&self.cells) {
            let mut rec = vec![fm.clone(), modality.map(|m| m.to_string()).unwrap_or_default()];
            rec.extend(row.iter().map(|c| c.map(format_sig6).unwrap_or_default()));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

pub fn heatmap_matrix(
    rows: &[ResultRow],
    class: ClassId,
    filter: &HeatmapFilter,
    modalities: &BTreeMap<String, Modality>,
) -> Result<Heatmap> {
    if !rows.iter().any(|r| r.class == class) {
        return Err(Error::ClassAbsent(class));
    }
    let selected: Vec<&ResultRow> = rows
        .iter()
        .filter(|r| {
            r.class == class
                && filter.regime.is_none_or(|v| r.regime == v)
                && filter.n_train.is_none_or(|v| r.n_train == v)
                && filter.n_test.is_none_or(|v| r.n_test == v)
                && filter.sampler.is_none_or(|v| r.sampler == v)
        })
        .collect();
    if selected.is_empty() {
        return Err(Error::InvalidInput("no results match the heatmap filter".into()));
    }

    let mut fms: Vec<(String, Option<Modality>)> = selected
        .iter()
        .map(|r| r.fm_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(|fm| {
            let m = modality_of(&fm, modalities);
            (fm, m)
        })
        .collect();
    // None sorts first for Option, so rank unknown modality explicitly
    fms.sort_by(|a, b| (a.1.is_none(), a.1, &a.0).cmp(&(b.1.is_none(), b.1, &b.0)));
    let pairs: Vec<(String, String)> = selected
        .iter()
        .map(|r| (r.train_aoi.clone(), r.target_aoi.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut cells = vec![vec![None; pairs.len()]; fms.len()];
    let mut filled = vec![vec![false; pairs.len()]; fms.len()];
    for r in selected {
        let i = fms.iter().position(|(f, _)| *f == r.fm_id).expect("fm listed");
        let j = pairs
            .binary_search(&(r.train_aoi.clone(), r.target_aoi.clone()))
            .expect("pair listed");
        if filled[i][j] {
            return Err(Error::InvalidInput(format!(
                "several records for {} {}->{}; narrow the filter (sampler, n_train, n_test, regime)",
                r.fm_id, r.train_aoi, r.target_aoi
            )));
        }
        filled[i][j] = true;
        cells[i][j] = r.r_mean;
    }
    Ok(Heatmap {
        class,
        fms,
        pairs,
        cells,
    })
}

#[derive(Clone, Debug, Default)]
pub struct ScatterFilter {
    pub class: Option<ClassId>,
    pub regime: Option<Regime>,
    pub train_aoi: Option<String>,
    pub target_aoi: Option<String>,
    pub fm_id: Option<String>,
    pub sampler: Option<SamplerKind>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScatterPoint {
    pub regime: Regime,
    pub train_aoi: String,
    pub target_aoi: String,
    pub class: ClassId,
    pub fm_id: String,
    pub sampler: SamplerKind,
    pub n_train: usize,
    pub n_test: usize,
    pub r_mean: Option<f64>,
    pub r_std: Option<f64>,
}

/// One plot-ready point per matching record, in input order.
pub fn ablation_scatter(rows: &[ResultRow], filter: &ScatterFilter) -> Vec<ScatterPoint> {
    rows.iter()
        .filter(|r| {
            filter.class.is_none_or(|v| r.class == v)
                && filter.regime.is_none_or(|v| r.regime == v)
                && filter.train_aoi.as_ref().is_none_or(|v| r.train_aoi == *v)
                && filter.target_aoi.as_ref().is_none_or(|v| r.target_aoi == *v)
                && filter.fm_id.as_ref().is_none_or(|v| r.fm_id == *v)
                && filter.sampler.is_none_or(|v| r.sampler == v)
        })
        .map(|r| ScatterPoint {
            regime: r.regime,
            train_aoi: r.train_aoi.clone(),
            target_aoi: r.target_aoi.clone(),
            class: r.class,
            fm_id: r.fm_id.clone(),
            sampler: r.sampler,
            n_train: r.n_train,
            n_test: r.n_test,
            r_mean: r.r_mean,
            r_std: r.r_std,
        })
        .collect()
}

pub const SCATTER_COLUMNS: [&str; 10] = [
    "regime",
    "train_aoi",
    "target_aoi",
    "class",
    "fm_id",
    "sampler",
    "n_train",
    "n_test",
    "r_mean",
    "r_std",
];

pub fn scatter_csv(points: &[ScatterPoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SCATTER_COLUMNS).expect("in-memory write");
    for p in points {
        let opt = |v: Option<f64>| v.map(format_sig6).unwrap_or_default();
        w.write_record([
            p.regime.to_string(),
            p.train_aoi.clone(),
            p.target_aoi.clone(),
            p.class.to_string(),
            p.fm_id.clone(),
            p.sampler.to_string(),
            p.n_train.to_string(),
            p.n_test.to_string(),
            opt(p.r_mean),
            opt(p.r_std),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionCriterion {
    /// Fewest labeled chips (train + test).
    LeastTotalElements,
    /// Highest mean correlation.
    BestCorrMean,
}

impl FromStr for SelectionCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "least-total-elements" => Ok(SelectionCriterion::LeastTotalElements),
            "best-corr-mean" => Ok(SelectionCriterion::BestCorrMean),
            _ => Err(Error::InvalidInput(format!("unknown criterion {s:?}"))),
        }
    }
}

/// The chosen record for one (target AOI, class) group, if any qualified.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub target_aoi: String,
    pub class: ClassId,
    pub chosen: Option<ResultRow>,
}

fn qualifies(r: &ResultRow, t: &Thresholds) -> bool {
    match (r.r_mean, r.r_std) {
        (Some(m), Some(s)) => t.passes(m, s),
        _ => false,
    }
}

/// Ordering where the preferred record compares as `Less`.
fn preference(criterion: SelectionCriterion, a: &ResultRow, b: &ResultRow) -> Ordering {
    let mean = |r: &ResultRow| r.r_mean.unwrap_or(f64::NEG_INFINITY);
    let std = |r: &ResultRow| r.r_std.unwrap_or(f64::INFINITY);
    let higher_mean = mean(b).total_cmp(&mean(a));
    let lower_std = std(a).total_cmp(&std(b));
    let fewer = a.total_elements().cmp(&b.total_elements());
    let fm = a.fm_id.cmp(&b.fm_id);
    match criterion {
        SelectionCriterion::LeastTotalElements => fewer.then(higher_mean).then(lower_std).then(fm),
        SelectionCriterion::BestCorrMean => higher_mean.then(lower_std).then(fewer).then(fm),
    }
    // remaining ties resolved by the full row key for determinism
    .then_with(|| a.result_key().cmp(&b.result_key()))
}

/// Per (target AOI, class) group: keep records with `r_mean > r_min` and
/// `r_std < std_max`, then pick one by `criterion`. Groups are ordered by
/// target AOI then class code.
pub fn selection_table(rows: &[ResultRow], criterion: SelectionCriterion, thresholds: Thresholds) -> Vec<Selection> {
    let mut groups: BTreeMap<(String, ClassId), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.target_aoi.clone(), r.class)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((target_aoi, class), members)| {
            let chosen = members
                .into_iter()
                .filter(|r| qualifies(r, &thresholds))
                .min_by(|a, b| preference(criterion, a, b))
                .cloned();
            Selection {
                target_aoi,
                class,
                chosen,
            }
        })
        .collect()
}

pub const NO_CONFIGURATION: &str = "no satisfactory configuration";

pub const SELECTION_COLUMNS: [&str; 12] = [
    "target_aoi",
    "class",
    "status",
    "fm_id",
    "regime",
    "train_aoi",
    "sampler",
    "n_train",
    "n_test",
    "total_elements",
    "r_mean",
    "r_std",
];

pub fn selection_csv(selections: &[Selection]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SELECTION_COLUMNS).expect("in-memory write");
    for s in selections {
        let mut rec = vec![s.target_aoi.clone(), s.class.to_string()];
        match &s.chosen {
            Some(r) => rec.extend([
                "selected".to_string(),
                r.fm_id.clone(),
                r.regime.to_string(),
                r.train_aoi.clone(),
                r.sampler.to_string(),
                r.n_train.to_string(),
                r.n_test.to_string(),
                r.total_elements().to_string(),
                r.r_mean.map(format_sig6).unwrap_or_default(),
                r.r_std.map(format_sig6).unwrap_or_default(),
            ]),
            None => {
                rec.push(NO_CONFIGURATION.to_string());
                rec.extend(std::iter::repeat_n(String::new(), 9));
            }
        }
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Aligned plain-text table; elements read "total (test/train)" and the
/// correlation "mean ± std".
pub fn selection_text(selections: &[Selection]) -> String {
    let header = ["target aoi", "class", "train aoi", "fm", "elements (test/train)", "sampling", "corr coef"];
    let rows: Vec<[String; 7]> = selections
        .iter()
        .map(|s| match &s.chosen {
            Some(r) => [
                s.target_aoi.clone(),
                s.class.to_string(),
                r.train_aoi.clone(),
                r.fm_id.clone(),
                format!("{} ({}/{})", r.total_elements(), r.n_test, r.n_train),
                r.sampler.to_string(),
                format!("{:.3} ± {:.3}", r.r_mean.unwrap_or(f64::NAN), r.r_std.unwrap_or(f64::NAN)),
            ],
            None => [
                s.target_aoi.clone(),
                s.class.to_string(),
                String::new(),
                NO_CONFIGURATION.to_string(),
                String::new(),
                String::new(),
                String::new(),
            ],
        })
        .collect();
    let mut widths = header.map(|h| h.chars().count());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[&str]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        writeln!(out, "{}", padded.join("  ").trim_end()).expect("string write");
    };
    line(&header);
    for row in &rows {
        line(&row.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

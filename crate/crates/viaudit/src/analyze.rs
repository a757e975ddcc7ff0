//! Discrimination statistics over labeled benchmark audits: score
//! histograms, Jensen-Shannon divergence between the pristine and injected
//! score distributions, and rank-based AUC.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inject::Label;

pub const DEFAULT_BINS: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyzeError {
    #[error("histogram requires at least one bin")]
    NoBins,
    #[error("empty score list")]
    EmptyScores,
    #[error("score {0} outside [1, 5]")]
    ScoreOutOfRange(f64),
    #[error("distributions have different bin edges")]
    MismatchedEdges,
    #[error("labels and scores have different lengths ({labels} vs {scores})")]
    LengthMismatch { labels: usize, scores: usize },
    #[error("auc requires both classes; got {pristine} pristine and {injected} injected")]
    SingleClass { pristine: usize, injected: usize },
    #[error("non-finite score encountered")]
    NonFiniteScore,
    #[error("no labeled records")]
    NoLabeledRecords,
}

/// Normalized masses over equal-width bins spanning [1, 5]. Internal bins
/// are right-open; the last bin is right-closed so a score of exactly 5
/// lands in it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreDistribution {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
}

pub fn histogram(scores: &[f64], bins: usize) -> Result<ScoreDistribution, AnalyzeError> {
    if bins == 0 {
        return Err(AnalyzeError::NoBins);
    }
    if scores.is_empty() {
        return Err(AnalyzeError::EmptyScores);
    }
    let mut counts = vec![0usize; bins];
    let width = 4.0 / bins as f64;
    for &s in scores {
        if !s.is_finite() {
            return Err(AnalyzeError::NonFiniteScore);
        }
        if !(1.0..=5.0).contains(&s) {
            return Err(AnalyzeError::ScoreOutOfRange(s));
        }
        let idx = (((s - 1.0) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let total = scores.len() as f64;
    let edges = (0..=bins).map(|i| 1.0 + 4.0 * i as f64 / bins as f64).collect();
    let masses = counts.iter().map(|&c| c as f64 / total).collect();
    Ok(ScoreDistribution { edges, masses })
}

fn entropy_base2(masses: &[f64]) -> f64 {
    masses
        .iter()
        .filter(|&&m| m > 0.0)
        .map(|&m| -m * m.log2())
        .sum()
}

/// Jensen-Shannon divergence in base 2, so the value is bounded by 1.
/// Computed in entropy form JSD = H(m) - (H(p) + H(q)) / 2 with
/// m = (p + q) / 2; zero-mass terms contribute nothing.
pub fn js_divergence(p: &ScoreDistribution, q: &ScoreDistribution) -> Result<f64, AnalyzeError> {
    if p.edges != q.edges || p.masses.len() != q.masses.len() {
        return Err(AnalyzeError::MismatchedEdges);
    }
    let mixture: Vec<f64> = p
        .masses
        .iter()
        .zip(&q.masses)
        .map(|(&a, &b)| 0.5 * (a + b))
        .collect();
    let jsd = entropy_base2(&mixture) - 0.5 * entropy_base2(&p.masses) - 0.5 * entropy_base2(&q.masses);
    // Mathematically in [0, 1]; rounding can stray a few ulps outside.
    Ok(jsd.clamp(0.0, 1.0))
}

/// Rank-based (Mann-Whitney) AUC with pristine as the positive class:
/// the probability that a random pristine record outscores a random
/// injected one, ties counted half.
pub fn auc(labels: &[Label], scores: &[f64]) -> Result<f64, AnalyzeError> {
    if labels.len() != scores.len() {
        return Err(AnalyzeError::LengthMismatch { labels: labels.len(), scores: scores.len() });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(AnalyzeError::NonFiniteScore);
    }
    let n_pos = labels.iter().filter(|l| **l == Label::Pristine).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(AnalyzeError::SingleClass { pristine: n_pos, injected: n_neg });
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j averaged across the tie group.
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] == Label::Pristine {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }

    let n_pos_f = n_pos as f64;
    let n_neg_f = n_neg as f64;
    Ok((rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0) / (n_pos_f * n_neg_f))
}

/// One scored record joined with its benchmark label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub id: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtype: Option<String>,
    #[serde(default)]
    pub reverted: bool,
    pub s_l: u8,
    pub s_k: u8,
    pub s_v: u8,
    pub overall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisFractions {
    pub overall: f64,
    pub s_l: f64,
    pub s_k: f64,
    pub s_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtypeStats {
    pub count: usize,
    pub mean_overall: f64,
    pub mean_s_l: f64,
    pub mean_s_k: f64,
    pub mean_s_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationReport {
    pub n_pristine: usize,
    pub n_injected: usize,
    /// Records whose injection was reverted; excluded from every statistic.
    pub n_reverted_excluded: usize,
    pub bins: usize,
    pub bin_edges: Vec<f64>,
    pub pristine_masses: Vec<f64>,
    pub injected_masses: Vec<f64>,
    pub js_divergence: f64,
    pub auc: f64,
    /// Fractions of pristine records scoring at least 3.0, overall and per axis.
    pub pristine_fraction_ge_3: AxisFractions,
    /// Mean scores of injected records keyed by defect subtype code.
    pub per_subtype: BTreeMap<String, SubtypeStats>,
}

pub fn discrimination_report(
    records: &[LabeledRecord],
    bins: usize,
) -> Result<DiscriminationReport, AnalyzeError> {
    if records.is_empty() {
        return Err(AnalyzeError::NoLabeledRecords);
    }
    let kept: Vec<&LabeledRecord> = records.iter().filter(|r| !r.reverted).collect();
    let n_reverted_excluded = records.len() - kept.len();
    if kept.is_empty() {
        return Err(AnalyzeError::NoLabeledRecords);
    }

    let pristine: Vec<&LabeledRecord> =
        kept.iter().copied().filter(|r| r.label == Label::Pristine).collect();
    let injected: Vec<&LabeledRecord> =
        kept.iter().copied().filter(|r| r.label == Label::Injected).collect();
    let pristine_scores: Vec<f64> = pristine.iter().map(|r| r.overall).collect();
    let injected_scores: Vec<f64> = injected.iter().map(|r| r.overall).collect();
    if pristine.is_empty() || injected.is_empty() {
        return Err(AnalyzeError::SingleClass {
            pristine: pristine.len(),
            injected: injected.len(),
        });
    }

    let p_hist = histogram(&pristine_scores, bins)?;
    let q_hist = histogram(&injected_scores, bins)?;
    let jsd = js_divergence(&p_hist, &q_hist)?;

    let labels: Vec<Label> = kept.iter().map(|r| r.label).collect();
    let scores: Vec<f64> = kept.iter().map(|r| r.overall).collect();
    let auc_value = auc(&labels, &scores)?;

    let frac = |pred: &dyn Fn(&LabeledRecord) -> bool| -> f64 {
        pristine.iter().filter(|r| pred(r)).count() as f64 / pristine.len() as f64
    };
    let pristine_fraction_ge_3 = AxisFractions {
        overall: frac(&|r| r.overall >= 3.0),
        s_l: frac(&|r| r.s_l >= 3),
        s_k: frac(&|r| r.s_k >= 3),
        s_v: frac(&|r| r.s_v >= 3),
    };

    let mut per_subtype: BTreeMap<String, SubtypeStats> = BTreeMap::new();
    let mut sums: BTreeMap<String, (usize, f64, f64, f64, f64)> = BTreeMap::new();
    for r in &injected {
        if let Some(code) = &r.subtype {
            let entry = sums.entry(code.clone()).or_default();
            entry.0 += 1;
            entry.1 += r.overall;
            entry.2 += r.s_l as f64;
            entry.3 += r.s_k as f64;
            entry.4 += r.s_v as f64;
        }
    }
    for (code, (count, overall, s_l, s_k, s_v)) in sums {
        let n = count as f64;
        per_subtype.insert(
            code,
            SubtypeStats {
                count,
                mean_overall: overall / n,
                mean_s_l: s_l / n,
                mean_s_k: s_k / n,
                mean_s_v: s_v / n,
            },
        );
    }

    Ok(DiscriminationReport {
        n_pristine: pristine.len(),
        n_injected: injected.len(),
        n_reverted_excluded,
        bins,
        bin_edges: p_hist.edges,
        pristine_masses: p_hist.masses,
        injected_masses: q_hist.masses,
        js_divergence: jsd,
        auc: auc_value,
        pristine_fraction_ge_3,
        per_subtype,
    })
}

/// CSV of (bin_center, pristine_mass, injected_mass) for external plotting.
pub fn histogram_csv(report: &DiscriminationReport) -> String {
    let mut out = String::from("bin_center,pristine_mass,injected_mass\n");
    for i in 0..report.bins {
        let center = 0.5 * (report.bin_edges[i] + report.bin_edges[i + 1]);
        out.push_str(&format!(
            "{},{},{}\n",
            center, report.pristine_masses[i], report.injected_masses[i]
        ));
    }
    out
}

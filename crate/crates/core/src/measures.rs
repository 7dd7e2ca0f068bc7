//! Set algebra over solvable sets: FandE, expected FandE, ForE, the GaP
//! retention/additional ratios, and Jaccard similarity between architectures.
//!
//! ForE is the union ratio |S_F ∪ S_E| / |P| ("at least one of features and
//! edges solves it"); the intersection ratio is exactly FandE. Undefined
//! ratios (empty denominators) are reported as missing, never coerced to
//! 0 or 1.

use crate::stats::SolvableSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("universe mismatch: {left} (|P| = {left_size}) vs {right} (|P| = {right_size})")]
    UniverseMismatch {
        left: String,
        left_size: usize,
        right: String,
        right_size: usize,
    },
    #[error("dataset lists differ between architectures at position {index}")]
    DatasetListMismatch { index: usize },
    #[error("no architectures given")]
    NoArchitectures,
}

/// One GaP triple for a single GNN architecture on a single dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct GapTriple {
    pub architecture: String,
    pub feature_retention: Option<f64>,
    pub edge_retention: Option<f64>,
    pub additional: Option<f64>,
}

/// Per-dataset measure row plus the GaP triples of every architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureReport {
    pub dataset_name: String,
    pub features: f64,
    pub edges: f64,
    pub expected_fande: f64,
    pub fande: f64,
    pub fore: f64,
    /// (architecture, |S|/|P|) of the best-performing GNN.
    pub gnn_best: (String, f64),
    pub gap: Vec<GapTriple>,
    /// Propagation kind the edge-only model selection picked.
    pub selected_edge_kind: String,
    pub alpha: f64,
    pub n_runs: usize,
}

fn check_universe(a: &SolvableSet, b: &SolvableSet) -> Result<(), MeasureError> {
    if a.dataset_name != b.dataset_name || a.universe_size != b.universe_size {
        return Err(MeasureError::UniverseMismatch {
            left: format!("{}/{}", a.dataset_name, a.model_name),
            left_size: a.universe_size,
            right: format!("{}/{}", b.dataset_name, b.model_name),
            right_size: b.universe_size,
        });
    }
    Ok(())
}

/// |A ∩ B| for sorted id slices.
pub fn intersection_size(a: &[usize], b: &[usize]) -> usize {
    let mut i = 0;
    let mut j = 0;
    let mut count = 0;
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// |S_F ∩ S_E| / |P|: the actual overlap between features and edges.
pub fn fande(s_f: &SolvableSet, s_e: &SolvableSet) -> Result<f64, MeasureError> {
    check_universe(s_f, s_e)?;
    Ok(intersection_size(&s_f.prediction_ids, &s_e.prediction_ids) as f64
        / s_f.universe_size as f64)
}

/// (|S_F|/|P|) * (|S_E|/|P|): the overlap expected under independence.
pub fn expected_fande(s_f: &SolvableSet, s_e: &SolvableSet) -> Result<f64, MeasureError> {
    check_universe(s_f, s_e)?;
    Ok(s_f.ratio() * s_e.ratio())
}

/// |S_F ∪ S_E| / |P|: at least one of features and edges solves it.
pub fn fore(s_f: &SolvableSet, s_e: &SolvableSet) -> Result<f64, MeasureError> {
    check_universe(s_f, s_e)?;
    let inter = intersection_size(&s_f.prediction_ids, &s_e.prediction_ids);
    let union = s_f.len() + s_e.len() - inter;
    Ok(union as f64 / s_f.universe_size as f64)
}

/// |S_GNN ∩ S_part| / |S_part|; missing when S_part is empty.
pub fn retention(
    s_gnn: &SolvableSet,
    s_part: &SolvableSet,
) -> Result<Option<f64>, MeasureError> {
    check_universe(s_gnn, s_part)?;
    if s_part.is_empty() {
        return Ok(None);
    }
    let inter = intersection_size(&s_gnn.prediction_ids, &s_part.prediction_ids);
    Ok(Some(inter as f64 / s_part.len() as f64))
}

/// |S_GNN ∩ U| / |U| with U = P \ (S_F ∪ S_E); missing when U is empty.
/// Since S_GNN ⊆ P, the numerator equals |S_GNN \ (S_F ∪ S_E)|.
pub fn gap_additional(
    s_gnn: &SolvableSet,
    s_f: &SolvableSet,
    s_e: &SolvableSet,
) -> Result<Option<f64>, MeasureError> {
    check_universe(s_gnn, s_f)?;
    check_universe(s_gnn, s_e)?;
    let inter_fe = intersection_size(&s_f.prediction_ids, &s_e.prediction_ids);
    let union_fe = s_f.len() + s_e.len() - inter_fe;
    let unsolved = s_gnn.universe_size - union_fe;
    if unsolved == 0 {
        return Ok(None);
    }
    let in_f = intersection_size(&s_gnn.prediction_ids, &s_f.prediction_ids);
    let in_e = intersection_size(&s_gnn.prediction_ids, &s_e.prediction_ids);
    let mut in_both = 0;
    {
        // |S_GNN ∩ S_F ∩ S_E| via a three-way sorted walk
        let (a, b, c) = (
            &s_gnn.prediction_ids,
            &s_f.prediction_ids,
            &s_e.prediction_ids,
        );
        let (mut i, mut j, mut k) = (0, 0, 0);
        while i < a.len() && j < b.len() && k < c.len() {
            let m = a[i].max(b[j]).max(c[k]);
            if a[i] == m && b[j] == m && c[k] == m {
                in_both += 1;
                i += 1;
                j += 1;
                k += 1;
            } else {
                if a[i] < m {
                    i += 1;
                }
                if j < b.len() && b[j] < m {
                    j += 1;
                }
                if k < c.len() && c[k] < m {
                    k += 1;
                }
            }
        }
    }
    let outside = s_gnn.len() - (in_f + in_e - in_both);
    Ok(Some(outside as f64 / unsolved as f64))
}

/// Pooled Jaccard similarity between two architectures over all datasets:
/// prediction ids are namespaced by dataset, the per-dataset sets unioned,
/// and |∩| / |∪| taken over the pooled universe. Missing when both pooled
/// sets are empty.
pub fn jaccard_across_datasets(
    arch_a_sets: &[&SolvableSet],
    arch_b_sets: &[&SolvableSet],
) -> Result<Option<f64>, MeasureError> {
    if arch_a_sets.len() != arch_b_sets.len() {
        return Err(MeasureError::DatasetListMismatch {
            index: arch_a_sets.len().min(arch_b_sets.len()),
        });
    }
    let mut inter = 0;
    let mut union = 0;
    for (i, (a, b)) in arch_a_sets.iter().zip(arch_b_sets).enumerate() {
        if a.dataset_name != b.dataset_name {
            return Err(MeasureError::DatasetListMismatch { index: i });
        }
        check_universe(a, b)?;
        let both = intersection_size(&a.prediction_ids, &b.prediction_ids);
        inter += both;
        union += a.len() + b.len() - both;
    }
    if union == 0 {
        return Ok(None);
    }
    Ok(Some(inter as f64 / union as f64))
}

/// Architecture with the highest |S|/|P|; ties keep the earlier entry, so
/// callers pass architectures in the canonical order.
pub fn best_gnn<'a>(by_arch: &[(&'a str, &SolvableSet)]) -> Option<(&'a str, f64)> {
    let mut best: Option<(&str, f64)> = None;
    for &(name, set) in by_arch {
        let ratio = set.ratio();
        if best.is_none_or(|(_, b)| ratio > b) {
            best = Some((name, ratio));
        }
    }
    best
}

/// Assembles the full per-dataset report from the three solvable-set groups.
pub fn measure_report(
    s_f: &SolvableSet,
    s_e: &SolvableSet,
    gnn_by_arch: &[(&str, &SolvableSet)],
    selected_edge_kind: &str,
) -> Result<MeasureReport, MeasureError> {
    if gnn_by_arch.is_empty() {
        return Err(MeasureError::NoArchitectures);
    }
    let mut gap = Vec::with_capacity(gnn_by_arch.len());
    for &(arch, s_gnn) in gnn_by_arch {
        gap.push(GapTriple {
            architecture: arch.to_string(),
            feature_retention: retention(s_gnn, s_f)?,
            edge_retention: retention(s_gnn, s_e)?,
            additional: gap_additional(s_gnn, s_f, s_e)?,
        });
    }
    let (best_arch, best_ratio) = best_gnn(gnn_by_arch).expect("nonempty");
    Ok(MeasureReport {
        dataset_name: s_f.dataset_name.clone(),
        features: s_f.ratio(),
        edges: s_e.ratio(),
        expected_fande: expected_fande(s_f, s_e)?,
        fande: fande(s_f, s_e)?,
        fore: fore(s_f, s_e)?,
        gnn_best: (best_arch.to_string(), best_ratio),
        gap,
        selected_edge_kind: selected_edge_kind.to_string(),
        alpha: s_f.alpha,
        n_runs: s_f.n_runs,
    })
}

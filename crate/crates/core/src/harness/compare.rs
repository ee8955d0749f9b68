use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::{HarnessError, RowStatus, SweepRow, Variant};
use crate::metrics::Ratio;

type Key = (String, u32, Variant);

/// Collapses rows to one ratio per (scenario, B, variant). Seeds are
/// averaged. A point with any failed or non-finite row is reported as
/// `Infinite` if some seed saw an infinite ratio, otherwise `Undefined`.
pub(super) fn point_values(rows: &[SweepRow]) -> BTreeMap<Key, Ratio> {
    let mut acc: BTreeMap<Key, (f64, usize, bool, bool)> = BTreeMap::new();
    for r in rows {
        let e = acc
            .entry((r.scenario.clone(), r.buffer, r.variant))
            .or_insert((0.0, 0, false, false));
        match (r.status, r.ratio_up_down) {
            (RowStatus::Ok, Some(Ratio::Finite(x))) => {
                e.0 += x;
                e.1 += 1;
            }
            (_, Some(Ratio::Infinite)) => e.3 = true,
            _ => e.2 = true,
        }
    }
    acc.into_iter()
        .map(|(k, (sum, n, bad, inf))| {
            let v = if inf {
                Ratio::Infinite
            } else if bad || n == 0 {
                Ratio::Undefined
            } else {
                Ratio::Finite(sum / n as f64)
            };
            (k, v)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub scenario: String,
    #[serde(rename = "B")]
    pub buffer: u32,
    pub variant: Variant,
    pub reference_variant: Variant,
    pub model_ratio: Ratio,
    pub reference_ratio: Ratio,
    pub abs_error: Option<f64>,
    pub rel_error: Option<f64>,
    /// Set when either side is non-finite; such points are left out of the
    /// summary means.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantSummary {
    pub variant: Variant,
    pub points: usize,
    pub flagged: usize,
    pub mean_abs_error: Option<f64>,
    pub mean_rel_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub summary: Vec<VariantSummary>,
}

/// Matches model points against reference points on (scenario, B).
///
/// The reference side uses its simulation rows when it has any; otherwise
/// all of its rows must share one variant. The model side drops rows of the
/// reference variant unless nothing else is left.
pub fn compare(
    model_rows: &[SweepRow],
    reference_rows: &[SweepRow],
) -> Result<Comparison, HarnessError> {
    let has_sim = reference_rows
        .iter()
        .any(|r| r.variant == Variant::Simulation);
    let reference: Vec<SweepRow> = if has_sim {
        reference_rows
            .iter()
            .filter(|r| r.variant == Variant::Simulation)
            .cloned()
            .collect()
    } else {
        reference_rows.to_vec()
    };
    let ref_variant = match reference.first() {
        Some(r) => r.variant,
        None => return Err(HarnessError::DisjointGrids),
    };
    if let Some(other) = reference.iter().find(|r| r.variant != ref_variant) {
        return Err(HarnessError::AmbiguousReference(format!(
            "{} and {}",
            ref_variant, other.variant
        )));
    }
    let mut model: Vec<SweepRow> = model_rows
        .iter()
        .filter(|r| r.variant != ref_variant)
        .cloned()
        .collect();
    if model.is_empty() {
        model = model_rows.to_vec();
    }

    let refs: BTreeMap<(String, u32), Ratio> = point_values(&reference)
        .into_iter()
        .map(|((s, b, _), v)| ((s, b), v))
        .collect();
    let mut rows = Vec::new();
    for ((scenario, buffer, variant), m) in point_values(&model) {
        let Some(&r) = refs.get(&(scenario.clone(), buffer)) else {
            continue;
        };
        let (abs_error, rel_error) = match (m, r) {
            (Ratio::Finite(a), Ratio::Finite(b)) => {
                let abs = (a - b).abs();
                (Some(abs), (b != 0.0).then(|| abs / b.abs()))
            }
            _ => (None, None),
        };
        rows.push(ComparisonRow {
            scenario,
            buffer,
            variant,
            reference_variant: ref_variant,
            model_ratio: m,
            reference_ratio: r,
            abs_error,
            rel_error,
            flagged: abs_error.is_none(),
        });
    }
    if rows.is_empty() {
        return Err(HarnessError::DisjointGrids);
    }
    rows.sort_by(|a, b| {
        (&a.scenario, a.variant, a.buffer).cmp(&(&b.scenario, b.variant, b.buffer))
    });

    let mut summary: Vec<VariantSummary> = Vec::new();
    for row in &rows {
        if summary.last().map(|s| s.variant) != Some(row.variant) {
            summary.push(VariantSummary {
                variant: row.variant,
                points: 0,
                flagged: 0,
                mean_abs_error: None,
                mean_rel_error: None,
            });
        }
    }
    for s in &mut summary {
        let mine: Vec<&ComparisonRow> = rows.iter().filter(|r| r.variant == s.variant).collect();
        s.points = mine.len();
        s.flagged = mine.iter().filter(|r| r.flagged).count();
        s.mean_abs_error = mean(mine.iter().filter_map(|r| r.abs_error));
        s.mean_rel_error = mean(mine.iter().filter_map(|r| r.rel_error));
    }
    Ok(Comparison { rows, summary })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn write_comparison_csv(cmp: &Comparison, path: &Path) -> Result<(), HarnessError> {
    let to_err = |e: csv::Error| HarnessError::Csv {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    };
    let mut wtr = csv::Writer::from_path(path).map_err(to_err)?;
    for row in &cmp.rows {
        wtr.serialize(row).map_err(to_err)?;
    }
    wtr.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

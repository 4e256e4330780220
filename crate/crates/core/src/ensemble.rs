//! Flag ensemble: combines the four detector verdicts per row into a
//! priority score and orders rows for review.

use std::collections::BTreeMap;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::{ClusterModel, SilhouetteReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnomalyFlags {
    pub kmeans: bool,
    pub silhouette: bool,
    pub iforest: bool,
    pub univariate: bool,
}

impl AnomalyFlags {
    /// Number of detectors that fired.
    pub fn priority(&self) -> u8 {
        self.kmeans as u8 + self.silhouette as u8 + self.iforest as u8 + self.univariate as u8
    }

    /// Binary combination key (kmeans is the high bit); used to order flag
    /// combinations deterministically inside a priority level.
    pub fn bits(&self) -> u8 {
        (self.kmeans as u8) << 3
            | (self.silhouette as u8) << 2
            | (self.iforest as u8) << 1
            | self.univariate as u8
    }
}

/// Per-row ensemble outcome with the tie-breaking measures attached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalyScorecard {
    pub row_id: usize,
    pub flags: AnomalyFlags,
    pub priority: u8,
    pub silhouette_score: f64,
    pub prediction: f64,
}

/// Rows belonging to clusters holding less than `min_fraction` of the
/// dataset (strictly).
pub fn kmeans_anomaly_flags(model: &ClusterModel, min_fraction: f64) -> Result<Vec<bool>> {
    if !(min_fraction > 0.0 && min_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "min_fraction must be in (0, 1), got {min_fraction}"
        )));
    }
    let sizes = model.cluster_sizes();
    let n = model.assignments.len() as f64;
    let small: Vec<bool> = sizes
        .iter()
        .map(|&s| (s as f64) < min_fraction * n)
        .collect();
    Ok(model.assignments.iter().map(|&a| small[a]).collect())
}

/// Rows with a strictly negative silhouette. The report must cover every
/// row (a full report, or a sampled one at fraction 1).
pub fn silhouette_anomaly_flags(report: &SilhouetteReport) -> Result<Vec<bool>> {
    let scores = report.full_point_scores()?;
    Ok(scores.iter().map(|&s| s < 0.0).collect())
}

/// Joins per-detector flags into scorecards. All slices must align.
pub fn build_scorecards(
    row_ids: &[usize],
    kmeans: &[bool],
    silhouette: &[bool],
    iforest: &[bool],
    univariate: &[bool],
    silhouette_scores: &[f64],
    predictions: &[f64],
) -> Result<Vec<AnomalyScorecard>> {
    let n = row_ids.len();
    for (context, len) in [
        ("kmeans flags", kmeans.len()),
        ("silhouette flags", silhouette.len()),
        ("iforest flags", iforest.len()),
        ("univariate flags", univariate.len()),
        ("silhouette scores", silhouette_scores.len()),
        ("predictions", predictions.len()),
    ] {
        if len != n {
            return Err(Error::LengthMismatch {
                context,
                expected: n,
                got: len,
            });
        }
    }
    Ok((0..n)
        .map(|i| {
            let flags = AnomalyFlags {
                kmeans: kmeans[i],
                silhouette: silhouette[i],
                iforest: iforest[i],
                univariate: univariate[i],
            };
            AnomalyScorecard {
                row_id: row_ids[i],
                flags,
                priority: flags.priority(),
                silhouette_score: silhouette_scores[i],
                prediction: predictions[i],
            }
        })
        .collect())
}

/// Secondary sort key inside a priority level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewOrder {
    /// Most negative silhouette first.
    SilhouetteAsc,
    /// Highest isolation forest prediction first.
    IforestDesc,
    RowId,
}

impl FromStr for ReviewOrder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "silhouette_asc" => Ok(ReviewOrder::SilhouetteAsc),
            "iforest_desc" => Ok(ReviewOrder::IforestDesc),
            "row_id" => Ok(ReviewOrder::RowId),
            other => Err(Error::InvalidConfig(format!(
                "unknown review order {other:?}"
            ))),
        }
    }
}

/// Sorts scorecards by priority (descending), then by the chosen secondary
/// measure, then by row id. The result is a pure function of the card set:
/// shuffling the input cannot change the output.
pub fn prioritise(cards: &[AnomalyScorecard], order: ReviewOrder) -> Vec<AnomalyScorecard> {
    let mut out = cards.to_vec();
    out.sort_by(|a, b| {
        b.priority
            .cmp(&a.priority)
            .then_with(|| match order {
                ReviewOrder::SilhouetteAsc => a.silhouette_score.total_cmp(&b.silhouette_score),
                ReviewOrder::IforestDesc => b.prediction.total_cmp(&a.prediction),
                ReviewOrder::RowId => std::cmp::Ordering::Equal,
            })
            .then(a.row_id.cmp(&b.row_id))
    });
    out
}

/// One flag combination with its population per cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorityGroup {
    pub priority: u8,
    pub flags: AnomalyFlags,
    pub per_cluster: Vec<usize>,
    pub total: usize,
}

/// Distribution of flag combinations over the clusters of the selected
/// model. Groups partition the dataset: totals sum to the row count and
/// every cluster column sums to the cluster population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorityGroupTable {
    pub groups: Vec<PriorityGroup>,
    pub n_clusters: usize,
    pub cluster_populations: Vec<usize>,
    pub grand_total: usize,
}

pub fn group_distribution(
    cards: &[AnomalyScorecard],
    assignments: &[usize],
    k: usize,
) -> Result<PriorityGroupTable> {
    if assignments.len() != cards.len() {
        return Err(Error::LengthMismatch {
            context: "group distribution assignments",
            expected: cards.len(),
            got: assignments.len(),
        });
    }
    if let Some(&bad) = assignments.iter().find(|&&a| a >= k) {
        return Err(Error::InvalidConfig(format!(
            "assignment {bad} exceeds cluster count {k}"
        )));
    }
    let mut by_combo: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    let mut cluster_populations = vec![0usize; k];
    for (card, &cluster) in cards.iter().zip(assignments) {
        by_combo
            .entry(card.flags.bits())
            .or_insert_with(|| vec![0; k])[cluster] += 1;
        cluster_populations[cluster] += 1;
    }
    let mut groups: Vec<PriorityGroup> = by_combo
        .into_iter()
        .map(|(bits, per_cluster)| {
            let flags = AnomalyFlags {
                kmeans: bits & 8 != 0,
                silhouette: bits & 4 != 0,
                iforest: bits & 2 != 0,
                univariate: bits & 1 != 0,
            };
            let total = per_cluster.iter().sum();
            PriorityGroup {
                priority: flags.priority(),
                flags,
                per_cluster,
                total,
            }
        })
        .collect();
    groups.sort_by(|a, b| {
        b.priority
            .cmp(&a.priority)
            .then(a.flags.bits().cmp(&b.flags.bits()))
    });
    Ok(PriorityGroupTable {
        groups,
        n_clusters: k,
        cluster_populations,
        grand_total: cards.len(),
    })
}

impl PriorityGroupTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec![
            "priority".to_string(),
            "kmeans".to_string(),
            "silhouette".to_string(),
            "iforest".to_string(),
            "univariate".to_string(),
        ];
        header.extend((0..self.n_clusters).map(|c| format!("cluster_{c}")));
        header.push("total".to_string());
        wtr.write_record(&header)?;
        for g in &self.groups {
            let mut rec = vec![
                g.priority.to_string(),
                yes_no(g.flags.kmeans),
                yes_no(g.flags.silhouette),
                yes_no(g.flags.iforest),
                yes_no(g.flags.univariate),
            ];
            rec.extend(g.per_cluster.iter().map(usize::to_string));
            rec.push(g.total.to_string());
            wtr.write_record(&rec)?;
        }
        let mut totals = vec![
            "total".to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ];
        totals.extend(self.cluster_populations.iter().map(usize::to_string));
        totals.push(self.grand_total.to_string());
        wtr.write_record(&totals)?;
        wtr.flush()?;
        Ok(())
    }
}

fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.to_string()
}

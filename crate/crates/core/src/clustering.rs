//! k-means clustering, elbow sweeps, silhouette diagnostics and model
//! selection across encoding strategies.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{EncodingStrategy, FeatureMatrix};
use crate::error::{Error, Result};
use crate::exec::map_indices;
use crate::sampling::stratified_indices;
use crate::seeding::derive_seed;

pub const DEFAULT_K_MIN: usize = 2;
pub const DEFAULT_K_MAX: usize = 25;
pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-6;

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    pub n_features: usize,
    /// `k * n_features`, row-major.
    pub centroids: Vec<f64>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances of every point to its centroid.
    pub sse: f64,
    /// SSE after each assignment pass; non-increasing.
    pub sse_history: Vec<f64>,
    pub iterations_run: usize,
    pub seed: u64,
}

impl ClusterModel {
    pub fn centroid(&self, j: usize) -> &[f64] {
        &self.centroids[j * self.n_features..(j + 1) * self.n_features]
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    /// SSE of an arbitrary matrix under this model's centroids, assigning
    /// each row to its nearest centroid. Evaluating a dataset whose rows
    /// are duplicated doubles the result.
    pub fn evaluate_sse(&self, x: &FeatureMatrix) -> Result<f64> {
        if x.n_features() != self.n_features {
            return Err(Error::LengthMismatch {
                context: "evaluation feature count",
                expected: self.n_features,
                got: x.n_features(),
            });
        }
        let mut total = 0.0;
        for i in 0..x.n_rows() {
            let row = x.row(i);
            let mut best = f64::INFINITY;
            for j in 0..self.k {
                best = best.min(dist2(row, self.centroid(j)));
            }
            total += best;
        }
        Ok(total)
    }
}

fn nearest(centroids: &[f64], k: usize, width: usize, row: &[f64]) -> usize {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for j in 0..k {
        let d = dist2(row, &centroids[j * width..(j + 1) * width]);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

/// k-means++ style seeding: the first centroid is uniform, later ones are
/// drawn proportionally to the squared distance from the nearest chosen
/// centroid. When every remaining point coincides with a chosen centroid
/// the next unchosen row is taken.
fn seed_centroids(x: &FeatureMatrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = x.n_rows();
    let width = x.n_features();
    let mut centroids = vec![0.0; k * width];
    let mut chosen = Vec::with_capacity(k);

    let first = rng.gen_range(0..n);
    chosen.push(first);
    centroids[..width].copy_from_slice(x.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| dist2(x.row(i), x.row(first))).collect();

    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        centroids[c * width..(c + 1) * width].copy_from_slice(x.row(next));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(dist2(x.row(i), x.row(next)));
        }
    }
    centroids
}

/// Repairs empty clusters by moving the point farthest from its current
/// centroid into each empty cluster (ties to the lowest row) and placing
/// the empty centroid on that point. This can only lower the SSE, so the
/// recorded history stays monotone.
fn repair_empty_clusters(
    x: &FeatureMatrix,
    k: usize,
    centroids: &mut [f64],
    assignments: &mut [usize],
) {
    let width = x.n_features();
    let mut sizes = vec![0usize; k];
    for &a in assignments.iter() {
        sizes[a] += 1;
    }
    for j in 0..k {
        if sizes[j] > 0 {
            continue;
        }
        let mut far_row = usize::MAX;
        let mut far_d = -1.0;
        for (i, &owner) in assignments.iter().enumerate() {
            if sizes[owner] <= 1 {
                continue;
            }
            let d = dist2(x.row(i), &centroids[owner * width..(owner + 1) * width]);
            if d > far_d {
                far_d = d;
                far_row = i;
            }
        }
        if far_row == usize::MAX {
            // k == n with every point alone; nothing to move.
            continue;
        }
        sizes[assignments[far_row]] -= 1;
        assignments[far_row] = j;
        sizes[j] = 1;
        centroids[j * width..(j + 1) * width].copy_from_slice(x.row(far_row));
    }
}

fn assignment_sse(x: &FeatureMatrix, centroids: &[f64], assignments: &[usize]) -> f64 {
    let width = x.n_features();
    let mut total = 0.0;
    for (i, &a) in assignments.iter().enumerate() {
        total += dist2(x.row(i), &centroids[a * width..(a + 1) * width]);
    }
    total
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Ties in the assignment step go to the lowest centroid index. The loop
/// ends with a final assignment pass, so every returned point sits with
/// its nearest centroid and `sse` matches the final assignment.
pub fn kmeans_fit(
    x: &FeatureMatrix,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<ClusterModel> {
    let n = x.n_rows();
    if k < 2 || k > n {
        return Err(Error::InvalidK { k, n_rows: n });
    }
    if max_iter == 0 {
        return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
    }
    if tol < 0.0 || !tol.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "tolerance must be finite and non-negative, got {tol}"
        )));
    }
    let width = x.n_features();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(x, k, &mut rng);
    let mut assignments = vec![0usize; n];
    let mut sse_history = Vec::new();
    let mut iterations_run = 0;

    for it in 0..max_iter {
        assignments = map_indices(n, |i| nearest(&centroids, k, width, x.row(i)));
        repair_empty_clusters(x, k, &mut centroids, &mut assignments);
        sse_history.push(assignment_sse(x, &centroids, &assignments));
        iterations_run = it + 1;

        // Update step: centroids move to the mean of their members.
        let mut sums = vec![0.0; k * width];
        let mut counts = vec![0usize; k];
        for (i, &a) in assignments.iter().enumerate() {
            counts[a] += 1;
            for (s, v) in sums[a * width..(a + 1) * width].iter_mut().zip(x.row(i)) {
                *s += v;
            }
        }
        let mut shift: f64 = 0.0;
        for j in 0..k {
            debug_assert!(counts[j] > 0, "repair leaves no empty clusters");
            let mut moved = 0.0;
            for f in 0..width {
                let new = sums[j * width + f] / counts[j] as f64;
                let d = new - centroids[j * width + f];
                moved += d * d;
                centroids[j * width + f] = new;
            }
            shift = shift.max(moved.sqrt());
        }
        if shift < tol {
            break;
        }
    }

    // Final pass under the converged centroids.
    assignments = map_indices(n, |i| nearest(&centroids, k, width, x.row(i)));
    repair_empty_clusters(x, k, &mut centroids, &mut assignments);
    let sse = assignment_sse(x, &centroids, &assignments);
    sse_history.push(sse);

    Ok(ClusterModel {
        k,
        n_features: width,
        centroids,
        assignments,
        sse,
        sse_history,
        iterations_run,
        seed,
    })
}

/// Fits one model per k in `[k_min, k_max]`, each with a seed derived from
/// the sweep seed, so any single k can be reproduced in isolation.
pub fn sweep_models(
    x: &FeatureMatrix,
    k_min: usize,
    k_max: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<Vec<ClusterModel>> {
    if k_min < 2 || k_min > k_max {
        return Err(Error::InvalidConfig(format!(
            "need 2 <= k_min <= k_max, got {k_min}..{k_max}"
        )));
    }
    if k_max > x.n_rows() {
        return Err(Error::InvalidK {
            k: k_max,
            n_rows: x.n_rows(),
        });
    }
    let ks: Vec<usize> = (k_min..=k_max).collect();
    map_indices(ks.len(), |i| {
        kmeans_fit(
            x,
            ks[i],
            derive_seed(seed, "k", ks[i] as u64),
            max_iter,
            tol,
        )
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowPoint {
    pub k: usize,
    pub sse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowCurve {
    pub points: Vec<ElbowPoint>,
}

impl ElbowCurve {
    pub fn from_models(models: &[ClusterModel]) -> Self {
        ElbowCurve {
            points: models
                .iter()
                .map(|m| ElbowPoint { k: m.k, sse: m.sse })
                .collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["k", "sse"])?;
        for p in &self.points {
            wtr.write_record([p.k.to_string(), format!("{}", p.sse)])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Silhouette scores for a clustering, either over every row (full) or
/// over a stratified sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteReport {
    /// Rows in the clustered matrix (not the sample).
    pub n_rows: usize,
    /// One score per covered row, aligned with `sample_rows` when sampled.
    pub point_scores: Vec<f64>,
    pub overall: f64,
    pub sampled: bool,
    /// Matrix row positions covered by a sampled report, ascending.
    pub sample_rows: Option<Vec<usize>>,
}

fn silhouette_core(x: &FeatureMatrix, assignments: &[usize]) -> Result<(Vec<f64>, f64)> {
    let n = x.n_rows();
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &a in assignments {
        sizes[a] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::SingleCluster);
    }

    let scores = map_indices(n, |i| {
        let own = assignments[i];
        if sizes[own] == 1 {
            // Rousseeuw's convention for singleton clusters.
            return 0.0;
        }
        let row = x.row(i);
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if j != i {
                sums[assignments[j]] += dist2(row, x.row(j)).sqrt();
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let mut b = f64::INFINITY;
        for (c, &size) in sizes.iter().enumerate() {
            if c != own && size > 0 {
                b = b.min(sums[c] / size as f64);
            }
        }
        let denom = a.max(b);
        if denom == 0.0 {
            0.0
        } else {
            (b - a) / denom
        }
    });
    let overall = scores.iter().sum::<f64>() / n as f64;
    Ok((scores, overall))
}

/// Exact silhouette over every row: `s(i) = (b - a) / max(a, b)` with `a`
/// the mean distance to the own cluster and `b` the smallest mean distance
/// to another cluster. Points in singleton clusters score zero.
pub fn silhouette_full(x: &FeatureMatrix, assignments: &[usize]) -> Result<SilhouetteReport> {
    if assignments.len() != x.n_rows() {
        return Err(Error::LengthMismatch {
            context: "silhouette assignments",
            expected: x.n_rows(),
            got: assignments.len(),
        });
    }
    let (point_scores, overall) = silhouette_core(x, assignments)?;
    Ok(SilhouetteReport {
        n_rows: x.n_rows(),
        point_scores,
        overall,
        sampled: false,
        sample_rows: None,
    })
}

/// Silhouette over a stratified sample (⌈fraction·|cluster|⌉ rows per
/// cluster). Distances are computed within the sample only, so the cost
/// drops quadratically. With `fraction = 1.0` the result is identical to
/// the full computation.
pub fn silhouette_sampled(
    x: &FeatureMatrix,
    assignments: &[usize],
    fraction: f64,
    seed: u64,
) -> Result<SilhouetteReport> {
    if assignments.len() != x.n_rows() {
        return Err(Error::LengthMismatch {
            context: "silhouette assignments",
            expected: x.n_rows(),
            got: assignments.len(),
        });
    }
    let sample = stratified_indices(assignments, fraction, seed)?;
    let sub = x.select_rows(&sample);
    let sub_assignments: Vec<usize> = sample.iter().map(|&i| assignments[i]).collect();
    let (point_scores, overall) = silhouette_core(&sub, &sub_assignments)?;
    Ok(SilhouetteReport {
        n_rows: x.n_rows(),
        point_scores,
        overall,
        sampled: true,
        sample_rows: Some(sample),
    })
}

impl SilhouetteReport {
    /// Per-row scores aligned with the clustered matrix; errors when the
    /// report does not cover every row.
    pub fn full_point_scores(&self) -> Result<Vec<f64>> {
        match &self.sample_rows {
            None => Ok(self.point_scores.clone()),
            Some(rows) if rows.len() == self.n_rows => Ok(self.point_scores.clone()),
            Some(_) => Err(Error::SilhouetteCoverage),
        }
    }

    pub fn write_csv<W: Write>(&self, row_ids: &[usize], w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["row_id", "silhouette"])?;
        match &self.sample_rows {
            None => {
                for (i, s) in self.point_scores.iter().enumerate() {
                    wtr.write_record([row_ids[i].to_string(), format!("{s}")])?;
                }
            }
            Some(rows) => {
                for (&r, s) in rows.iter().zip(&self.point_scores) {
                    wtr.write_record([row_ids[r].to_string(), format!("{s}")])?;
                }
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureLabel {
    Strong,
    Reasonable,
    Weak,
}

impl fmt::Display for StructureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StructureLabel::Strong => "strong",
            StructureLabel::Reasonable => "reasonable",
            StructureLabel::Weak => "weak",
        };
        f.write_str(s)
    }
}

/// One clustering candidate: an encoding strategy, a k and the overall
/// silhouette coefficient of the fitted model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelCandidate {
    pub strategy: EncodingStrategy,
    pub k: usize,
    pub sc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Index of the winner within the candidate slice.
    pub index: usize,
    pub strategy: EncodingStrategy,
    pub k: usize,
    pub sc: f64,
    pub label: StructureLabel,
}

/// Picks the candidate with the highest silhouette coefficient. Ties break
/// to the smaller k, then to the earlier strategy (count, mean, median,
/// mode). Sc > 0.7 labels strong structure, Sc > 0.5 reasonable, anything
/// else weak.
pub fn select_model(candidates: &[ModelCandidate]) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("no clustering candidates".into()));
    }
    for c in candidates {
        if !c.sc.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "non-finite silhouette for strategy {} k {}",
                c.strategy, c.k
            )));
        }
    }
    let mut best = 0usize;
    for (i, c) in candidates.iter().enumerate().skip(1) {
        let b = &candidates[best];
        let wins =
            c.sc > b.sc || (c.sc == b.sc && (c.k < b.k || (c.k == b.k && c.strategy < b.strategy)));
        if wins {
            best = i;
        }
    }
    let chosen = candidates[best];
    let label = if chosen.sc > 0.7 {
        StructureLabel::Strong
    } else if chosen.sc > 0.5 {
        StructureLabel::Reasonable
    } else {
        StructureLabel::Weak
    };
    Ok(Selection {
        index: best,
        strategy: chosen.strategy,
        k: chosen.k,
        sc: chosen.sc,
        label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn matrix(points: &[(f64, f64)]) -> FeatureMatrix {
        let data: Vec<f64> = points.iter().flat_map(|&(a, b)| [a, b]).collect();
        FeatureMatrix::new(
            vec!["x".into(), "y".into()],
            (0..points.len()).collect(),
            data,
        )
        .unwrap()
    }

    fn two_pairs() -> FeatureMatrix {
        matrix(&[(0.0, 0.0), (0.0, 1.0), (10.0, 10.0), (10.0, 11.0)])
    }

    #[test]
    fn kmeans_separates_two_pairs() {
        let x = two_pairs();
        let m = kmeans_fit(&x, 2, 1, 100, 1e-6).unwrap();
        assert!((m.sse - 1.0).abs() < 1e-12, "sse {}", m.sse);
        assert_eq!(m.assignments[0], m.assignments[1]);
        assert_eq!(m.assignments[2], m.assignments[3]);
        assert_ne!(m.assignments[0], m.assignments[2]);
    }

    #[test]
    fn kmeans_rejects_bad_k() {
        let x = two_pairs();
        assert!(matches!(
            kmeans_fit(&x, 1, 1, 100, 1e-6),
            Err(Error::InvalidK { .. })
        ));
        assert!(matches!(
            kmeans_fit(&x, 5, 1, 100, 1e-6),
            Err(Error::InvalidK { .. })
        ));
    }

    #[test]
    fn kmeans_deterministic_per_seed() {
        let x = blob_matrix(60, 3, 5.0, 77);
        let a = kmeans_fit(&x, 3, 9, 100, 1e-6).unwrap();
        let b = kmeans_fit(&x, 3, 9, 100, 1e-6).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kmeans_handles_duplicates_with_k_near_n() {
        let x = matrix(&[(0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (10.0, 0.0), (20.0, 0.0)]);
        let m = kmeans_fit(&x, 4, 5, 100, 1e-6).unwrap();
        assert!(m.cluster_sizes().iter().all(|&s| s > 0));
        assert!(m.sse.abs() < 1e-12);
    }

    #[test]
    fn duplicated_rows_double_evaluated_sse() {
        let x = blob_matrix(40, 2, 4.0, 3);
        let m = kmeans_fit(&x, 3, 11, 100, 1e-6).unwrap();
        let rows: Vec<usize> = (0..x.n_rows()).chain(0..x.n_rows()).collect();
        let doubled = x.select_rows(&rows);
        let sse2 = m.evaluate_sse(&doubled).unwrap();
        let sse1 = m.evaluate_sse(&x).unwrap();
        assert!((sse2 - 2.0 * sse1).abs() <= 1e-9 * sse1.max(1.0));
    }

    /// Gaussian-ish blobs on a ring, deterministic.
    fn blob_matrix(n: usize, k: usize, spread: f64, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::with_capacity(n * 2);
        for i in 0..n {
            let c = i % k;
            let angle = c as f64 / k as f64 * std::f64::consts::TAU;
            let cx = spread * angle.cos();
            let cy = spread * angle.sin();
            data.push(cx + rng.gen::<f64>() - 0.5);
            data.push(cy + rng.gen::<f64>() - 0.5);
        }
        FeatureMatrix::new(vec!["x".into(), "y".into()], (0..n).collect(), data).unwrap()
    }

    #[test]
    fn sweep_covers_range_and_histories_decrease() {
        let x = blob_matrix(80, 4, 6.0, 21);
        let models = sweep_models(&x, 2, 6, 13, 100, 1e-6).unwrap();
        assert_eq!(models.len(), 5);
        for (m, k) in models.iter().zip(2..) {
            assert_eq!(m.k, k);
            for w in m.sse_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "history must not increase: {w:?}");
            }
        }
        let curve = ElbowCurve::from_models(&models);
        assert_eq!(curve.points.len(), 5);
        assert_eq!(curve.points[0].k, 2);
    }

    #[test]
    fn silhouette_matches_hand_computation() {
        let x = two_pairs();
        let r = silhouette_full(&x, &[0, 0, 1, 1]).unwrap();
        // For (0,0): a = 1, b = (sqrt(200) + sqrt(221)) / 2.
        let b = (200.0f64.sqrt() + 221.0f64.sqrt()) / 2.0;
        let expect = (b - 1.0) / b;
        assert!((r.point_scores[0] - expect).abs() < 1e-12);
        assert!(r.overall > 0.9);
        assert!(!r.sampled);
    }

    #[test]
    fn silhouette_singleton_scores_zero() {
        let x = matrix(&[(0.0, 0.0), (5.0, 5.0), (5.0, 6.0)]);
        let r = silhouette_full(&x, &[0, 1, 1]).unwrap();
        assert_eq!(r.point_scores[0], 0.0);
        assert!(r.point_scores[1] > 0.0);
    }

    #[test]
    fn silhouette_needs_two_clusters() {
        let x = two_pairs();
        assert!(matches!(
            silhouette_full(&x, &[0, 0, 0, 0]),
            Err(Error::SingleCluster)
        ));
    }

    #[test]
    fn sampled_with_full_fraction_is_bit_identical() {
        let x = blob_matrix(50, 3, 5.0, 2);
        let m = kmeans_fit(&x, 3, 4, 100, 1e-6).unwrap();
        let full = silhouette_full(&x, &m.assignments).unwrap();
        let sampled = silhouette_sampled(&x, &m.assignments, 1.0, 99).unwrap();
        assert_eq!(full.point_scores, sampled.point_scores);
        assert_eq!(full.overall, sampled.overall);
        assert_eq!(sampled.sample_rows.as_ref().unwrap().len(), 50);
    }

    #[test]
    fn sampled_covers_every_cluster() {
        let x = blob_matrix(90, 3, 6.0, 8);
        let m = kmeans_fit(&x, 3, 4, 100, 1e-6).unwrap();
        let r = silhouette_sampled(&x, &m.assignments, 0.1, 5).unwrap();
        let rows = r.sample_rows.as_ref().unwrap();
        let picked: std::collections::BTreeSet<usize> =
            rows.iter().map(|&i| m.assignments[i]).collect();
        assert_eq!(picked.len(), 3);
        assert!(rows.len() < 90);
        assert!(r.full_point_scores().is_err());
    }

    #[test]
    fn selection_prefers_sc_then_small_k_then_strategy() {
        use EncodingStrategy::*;
        let sel = select_model(&[
            ModelCandidate {
                strategy: Count,
                k: 5,
                sc: 0.3,
            },
            ModelCandidate {
                strategy: Mean,
                k: 4,
                sc: 0.6,
            },
            ModelCandidate {
                strategy: Mode,
                k: 8,
                sc: 0.41,
            },
        ])
        .unwrap();
        assert_eq!(sel.strategy, Mean);
        assert_eq!(sel.k, 4);
        assert_eq!(sel.label, StructureLabel::Reasonable);

        let tie_k = select_model(&[
            ModelCandidate {
                strategy: Count,
                k: 7,
                sc: 0.5,
            },
            ModelCandidate {
                strategy: Count,
                k: 3,
                sc: 0.5,
            },
        ])
        .unwrap();
        assert_eq!(tie_k.k, 3);
        assert_eq!(tie_k.label, StructureLabel::Weak);

        let tie_strategy = select_model(&[
            ModelCandidate {
                strategy: Median,
                k: 3,
                sc: 0.72,
            },
            ModelCandidate {
                strategy: Mean,
                k: 3,
                sc: 0.72,
            },
        ])
        .unwrap();
        assert_eq!(tie_strategy.strategy, Mean);
        assert_eq!(tie_strategy.label, StructureLabel::Strong);
    }

    #[test]
    fn selection_rejects_empty_and_nan() {
        assert!(select_model(&[]).is_err());
        assert!(select_model(&[ModelCandidate {
            strategy: EncodingStrategy::Count,
            k: 2,
            sc: f64::NAN
        }])
        .is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn kmeans_invariants(n in 10usize..50, k in 2usize..5, seed in 0u64..500) {
            let x = blob_matrix(n, 3, 5.0, seed);
            let m = kmeans_fit(&x, k, seed, 100, 1e-6).unwrap();
            // Every point at its nearest centroid.
            for i in 0..n {
                let assigned = dist2(x.row(i), m.centroid(m.assignments[i]));
                for j in 0..k {
                    prop_assert!(assigned <= dist2(x.row(i), m.centroid(j)) + 1e-9);
                }
            }
            // No empty clusters, monotone history, sse matches final entry.
            prop_assert!(m.cluster_sizes().iter().all(|&s| s > 0));
            for w in m.sse_history.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9);
            }
            prop_assert_eq!(*m.sse_history.last().unwrap(), m.sse);
        }

        #[test]
        fn silhouette_scores_bounded(n in 8usize..40, seed in 0u64..200) {
            let x = blob_matrix(n, 2, 4.0, seed);
            let m = kmeans_fit(&x, 2, seed, 100, 1e-6).unwrap();
            let r = silhouette_full(&x, &m.assignments).unwrap();
            for &s in &r.point_scores {
                prop_assert!((-1.0..=1.0).contains(&s));
            }
            prop_assert!((-1.0..=1.0).contains(&r.overall));
        }
    }
}

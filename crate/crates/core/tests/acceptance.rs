//! Release gate: one test per acceptance criterion. Every test prints a
//! single `acceptance: PASS` line with its measured numbers (visible with
//! `cargo test --test acceptance -- --nocapture`), so a run doubles as a
//! checklist. Oracles here are written independently from the library
//! internals: plain O(n²) loops straight from the definitions.

use std::collections::BTreeSet;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use spendscope::clustering::{silhouette_full, silhouette_sampled, sweep_models};
use spendscope::encoding::FeatureMatrix;
use spendscope::explain::{shapley_attributions, AttributionMode};
use spendscope::iforest::{
    average_path_length, iforest_threshold, predict_scores, ForestModel, IsolationTree, ScoreTable,
    TreeNode,
};
use spendscope::pipeline::{self, files, InputConfig, RunConfig, RunReport};
use spendscope::synthgen::{AnomalySpec, GenConfig};
use spendscope::univariate::{dbscan1d_flags, iqr_flags, zscore_flags};

fn matrix(n: usize, d: usize, data: Vec<f64>) -> FeatureMatrix {
    let names = (0..d).map(|j| format!("f{j}")).collect();
    FeatureMatrix::new(names, (0..n).collect(), data).unwrap()
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

// ---------------------------------------------------------------------------
// Oracle equivalence: silhouette

/// Brute-force silhouette straight from the definition: a(i) is the mean
/// distance to the rest of the own cluster, b(i) the smallest mean distance
/// to another non-empty cluster, s(i) = (b-a)/max(a,b); singletons score 0.
fn silhouette_oracle(x: &FeatureMatrix, labels: &[usize]) -> (Vec<f64>, f64) {
    let n = x.n_rows();
    let k = labels.iter().max().unwrap() + 1;
    let mut scores = vec![0.0; n];
    for i in 0..n {
        let mut dist_sum = vec![0.0f64; k];
        let mut count = vec![0usize; k];
        for j in 0..n {
            if i != j {
                dist_sum[labels[j]] += euclid(x.row(i), x.row(j));
                count[labels[j]] += 1;
            }
        }
        let own = labels[i];
        if count[own] == 0 {
            scores[i] = 0.0;
            continue;
        }
        let a = dist_sum[own] / count[own] as f64;
        let mut b = f64::INFINITY;
        for c in 0..k {
            if c != own && count[c] > 0 {
                b = b.min(dist_sum[c] / count[c] as f64);
            }
        }
        scores[i] = if a.max(b) == 0.0 {
            0.0
        } else {
            (b - a) / a.max(b)
        };
    }
    let overall = scores.iter().sum::<f64>() / n as f64;
    (scores, overall)
}

#[test]
fn oracle_silhouette_matches_brute_force() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.gen_range(20..=500);
        let d = rng.gen_range(2..=4);
        let k = rng.gen_range(2..=8);
        let mut data = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            // Pin the first k rows to distinct labels so every cluster is
            // non-empty, then assign the rest at random.
            let c = if i < k { i } else { rng.gen_range(0..k) };
            labels.push(c);
            for j in 0..d {
                let center = (c * (j + 1)) as f64 * 3.0;
                data.push(center + rng.gen::<f64>() * 4.0 - 2.0);
            }
        }
        let x = matrix(n, d, data);
        let report = silhouette_full(&x, &labels).unwrap();
        let (oracle_scores, oracle_overall) = silhouette_oracle(&x, &labels);
        for (got, want) in report.point_scores.iter().zip(&oracle_scores) {
            worst = worst.max((got - want).abs());
        }
        worst = worst.max((report.overall - oracle_overall).abs());
        assert!(
            worst < 1e-9,
            "silhouette deviates from the brute-force oracle by {worst}"
        );
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed < Duration::from_secs(30),
        "silhouette oracle sweep took {elapsed:?}"
    );
    println!(
        "acceptance: PASS silhouette full vs brute-force oracle, 50 datasets, max |delta| = {worst:.2e}, {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// Oracle equivalence: DBSCAN

/// Noise labels by literal neighbor enumeration: core = at least
/// min_neighbors other points within eps; noise = non-core with no core
/// within eps.
fn dbscan_oracle(values: &[f64], eps: f64, min_neighbors: usize) -> Vec<bool> {
    let n = values.len();
    let core: Vec<bool> = (0..n)
        .map(|i| {
            let neighbors = (0..n)
                .filter(|&j| j != i && (values[i] - values[j]).abs() <= eps)
                .count();
            neighbors >= min_neighbors
        })
        .collect();
    (0..n)
        .map(|i| {
            if core[i] {
                return false;
            }
            let touches_core =
                (0..n).any(|j| j != i && core[j] && (values[i] - values[j]).abs() <= eps);
            !touches_core
        })
        .collect()
}

#[test]
fn oracle_dbscan_matches_neighbor_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for col in 0..100 {
        let n = rng.gen_range(1..=2000);
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            let v = match rng.gen_range(0..4) {
                0 => rng.gen::<f64>() * 10.0,
                1 => 5.0 + rng.gen::<f64>(),
                2 => (rng.gen::<f64>() * 20.0).round() / 2.0, // duplicates
                _ => rng.gen::<f64>() * 1000.0,               // sparse tail
            };
            values.push(v);
        }
        // Default parameters on every third column, random otherwise.
        let (eps, min_neighbors) = if col % 3 == 0 {
            (1.0, 3)
        } else {
            (rng.gen_range(0.05..2.0), rng.gen_range(1..=6))
        };
        let got = dbscan1d_flags(&values, eps, min_neighbors);
        let want = dbscan_oracle(&values, eps, min_neighbors);
        assert_eq!(
            got, want,
            "column {col}: n={n} eps={eps} min_neighbors={min_neighbors}"
        );
    }
    println!("acceptance: PASS dbscan1d vs neighbor-enumeration oracle, 100 columns, exact match");
}

// ---------------------------------------------------------------------------
// Oracle equivalence: z-score and IQR

fn zscore_oracle(values: &[f64], threshold: f64) -> Vec<bool> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mut sum = 0.0;
    for &v in values {
        sum += v;
    }
    let mean = sum / n as f64;
    let mut sq = 0.0;
    for &v in values {
        sq += (v - mean) * (v - mean);
    }
    let std = (sq / n as f64).sqrt();
    if std == 0.0 {
        return vec![false; n];
    }
    values
        .iter()
        .map(|&v| ((v - mean) / std).abs() > threshold)
        .collect()
}

fn iqr_oracle(values: &[f64]) -> Vec<bool> {
    let n = values.len();
    if n < 4 {
        return vec![false; n];
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let quantile = |p: f64| {
        let h = p * (n - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        s[lo] + (h - lo as f64) * (s[hi] - s[lo])
    };
    let q1 = quantile(0.25);
    let q3 = quantile(0.75);
    let lower = q1 - 1.5 * (q3 - q1);
    let upper = q3 + 1.5 * (q3 - q1);
    values.iter().map(|&v| v < lower || v > upper).collect()
}

#[test]
fn oracle_zscore_iqr_match_direct_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for col in 0..100 {
        let values: Vec<f64> = match col {
            // Degenerate shapes first: empty-variance and tiny columns.
            0 => vec![7.5; 40],
            1 => vec![3.25],
            2 => vec![1.0, 2.0],
            3 => vec![1.0, 2.0, 100.0],
            4 => vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 100.0],
            _ => {
                let n = rng.gen_range(4..=1500);
                (0..n)
                    .map(|_| match rng.gen_range(0..3) {
                        0 => rng.gen::<f64>() * 10.0,
                        1 => 50.0 + rng.gen::<f64>() * 2.0,
                        _ => rng.gen::<f64>().powi(8) * 1e4, // heavy tail
                    })
                    .collect()
            }
        };
        let got_z = zscore_flags(&values, 2.5);
        let want_z = zscore_oracle(&values, 2.5);
        assert_eq!(got_z, want_z, "z-score mismatch on column {col}");

        let got_iqr = iqr_flags(&values);
        let want_iqr = iqr_oracle(&values);
        assert_eq!(got_iqr, want_iqr, "IQR mismatch on column {col}");
    }
    println!(
        "acceptance: PASS z-score and IQR vs direct formula evaluation, 100 columns incl. degenerate, exact match"
    );
}

// ---------------------------------------------------------------------------
// k-Means soundness on a full sweep

fn blob_matrix(n: usize, d: usize, blobs: usize, spread: f64, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        let c = i % blobs;
        let angle = c as f64 / blobs as f64 * std::f64::consts::TAU;
        for j in 0..d {
            let center = if j % 2 == 0 {
                spread * angle.cos()
            } else {
                spread * angle.sin()
            };
            data.push(center + rng.gen::<f64>() - 0.5);
        }
    }
    matrix(n, d, data)
}

#[test]
fn kmeans_sse_monotone_and_assignments_nearest() {
    let x = blob_matrix(5000, 4, 8, 12.0, 404);
    let models = sweep_models(&x, 2, 25, 505, 100, 1e-6).unwrap();
    assert_eq!(models.len(), 24);

    let mut violations = 0usize;
    for m in &models {
        for w in m.sse_history.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-9,
                "k={}: SSE increased from {} to {}",
                m.k,
                w[0],
                w[1]
            );
        }
        for i in 0..x.n_rows() {
            let own = euclid(x.row(i), m.centroid(m.assignments[i]));
            for j in 0..m.k {
                if euclid(x.row(i), m.centroid(j)) < own {
                    violations += 1;
                }
            }
        }
    }
    assert_eq!(violations, 0, "rows assigned to a non-nearest centroid");
    println!(
        "acceptance: PASS k-means sweep k=2..25 on 5000 rows, SSE histories non-increasing, 0 nearest-centroid violations"
    );
}

// ---------------------------------------------------------------------------
// Isolation forest formula fidelity

#[test]
fn iforest_reproduces_hand_built_path_tables() {
    // Tree over an 8-row subsample:
    //   feature 0 < 5.0 -> leaf of size 1
    //   else feature 0 < 8.0 -> leaf of size 2, else leaf of size 5
    let tree = IsolationTree {
        root: TreeNode::Internal {
            feature: 0,
            split: 5.0,
            left: Box::new(TreeNode::Leaf { size: 1 }),
            right: Box::new(TreeNode::Internal {
                feature: 0,
                split: 8.0,
                left: Box::new(TreeNode::Leaf { size: 2 }),
                right: Box::new(TreeNode::Leaf { size: 5 }),
            }),
        },
    };
    // Hand values: depth + c(leaf size), with c(1)=0, c(2)=1,
    // c(5) = 2*H(4) - 2*4/5 = 25/6 - 8/5 = 77/30.
    let path_low = 1.0;
    let path_mid = 2.0 + 1.0;
    let path_high = 2.0 + 77.0 / 30.0;
    assert!((average_path_length(5) - 77.0 / 30.0).abs() < 1e-15);

    let forest = ForestModel {
        trees: vec![tree; 100],
        sample_size: 8,
        effective_sample_size: 8,
        height_limit: 3,
        n_features: 1,
        seed: 0,
    };
    let x = matrix(3, 1, vec![3.0, 6.0, 9.0]);
    let table = predict_scores(&forest, &x).unwrap();

    // MeanLength = total / 100.
    let mut worst: f64 = 0.0;
    for (i, want) in [path_low, path_mid, path_high].iter().enumerate() {
        worst = worst.max((table.total_path_lengths[i] - 100.0 * want).abs());
        worst = worst.max((table.mean_path_lengths[i] - want).abs());
        worst = worst.max((table.mean_path_lengths[i] - table.total_path_lengths[i] / 100.0).abs());
    }

    // Prediction = (Max - Mean) / (Max - Min), computed by hand.
    let (max, min) = (path_high, path_low);
    let hand = |mean: f64| (max - mean) / (max - min);
    for (i, mean) in [path_low, path_mid, path_high].iter().enumerate() {
        worst = worst.max((table.predictions[i] - hand(*mean)).abs());
    }
    assert_eq!(table.predictions[0], 1.0, "shortest path is the anomaly");
    assert_eq!(table.predictions[2], 0.0);

    // Same formulas straight from a hand-written totals table.
    let table2 = ScoreTable::from_totals(vec![300.0, 120.0, 250.0, 180.0], 100).unwrap();
    let means = [3.0, 1.2, 2.5, 1.8];
    for (i, mean) in means.iter().enumerate() {
        worst = worst.max((table2.mean_path_lengths[i] - mean).abs());
        let want = (3.0 - mean) / (3.0 - 1.2);
        worst = worst.max((table2.predictions[i] - want).abs());
    }
    assert!(worst < 1e-12, "hand table deviates by {worst}");
    println!(
        "acceptance: PASS isolation forest prediction and mean-length formulas vs hand tables, max |delta| = {worst:.2e}"
    );
}

// ---------------------------------------------------------------------------
// Heavy fixture shared by the detection-power and ensemble checks

struct HeavyRun {
    _dir: tempfile::TempDir,
    config: RunConfig,
    report: RunReport,
    elapsed: Duration,
}

fn heavy_run() -> &'static HeavyRun {
    static RUN: OnceLock<HeavyRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let input = InputConfig::Generate {
            config: GenConfig {
                n_records: 20000,
                n_vendors: 700,
                n_requesters: 90,
                n_buyers: 10,
                n_approvers: 55,
                n_group_categories: 3,
                n_material_categories: 20,
                amount_mu: 7.05,
                amount_sigma: 1.5,
                seed: 4242,
            },
            anomalies: Some(AnomalySpec {
                rate_point: 0.01,
                rate_contextual: 0.0,
                multiplier_low: 10.0,
                multiplier_high: 20.0,
            }),
        };
        let config = RunConfig::new(input, dir.path().join("run"), 99);
        let start = Instant::now();
        let report = pipeline::run_pipeline(&config).unwrap();
        let elapsed = start.elapsed();
        HeavyRun {
            _dir: dir,
            config,
            report,
            elapsed,
        }
    })
}

fn read_csv(path: &std::path::Path) -> Vec<csv::StringRecord> {
    let text = std::fs::read_to_string(path).unwrap();
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap())
        .collect()
}

#[test]
fn detection_power_on_injected_inflation() {
    let run = heavy_run();
    let out = &run.config.output_dir;

    let injected: BTreeSet<usize> = read_csv(&out.join(files::GROUND_TRUTH))
        .iter()
        .filter(|r| &r[1] == "point")
        .map(|r| r[0].parse().unwrap())
        .collect();
    assert_eq!(injected.len(), 200, "1% of 20000 rows");

    let flagged: BTreeSet<usize> = read_csv(&out.join(files::IFOREST_SCORES))
        .iter()
        .filter(|r| &r[3] == "true")
        .map(|r| r[0].parse().unwrap())
        .collect();
    assert!(!flagged.is_empty() && flagged.len() <= 500);
    assert_eq!(flagged.len(), run.report.iforest_flagged);

    let hits = injected.intersection(&flagged).count();
    let recall = hits as f64 / injected.len() as f64;
    let baseline = flagged.len() as f64 / 20000.0;
    assert!(
        recall >= 0.05,
        "recall {recall:.3} below 5x the ~0.01 random baseline ({hits}/{} hits, {} flagged)",
        injected.len(),
        flagged.len()
    );
    assert!(
        run.elapsed < Duration::from_secs(600),
        "pipeline took {:?}",
        run.elapsed
    );
    println!(
        "acceptance: PASS detection power: recall {recall:.3} over {} forest-flagged rows (random baseline {baseline:.4}), pipeline {:?}",
        flagged.len(),
        run.elapsed
    );
}

#[test]
fn ensemble_groups_partition_the_dataset() {
    let run = heavy_run();
    let out = &run.config.output_dir;
    let k = run.report.selection.k;
    let cluster_sizes = &run.report.selection.cluster_sizes;

    let rows = read_csv(&out.join(files::GROUP_DISTRIBUTION));
    let (combos, total_row) = rows.split_at(rows.len() - 1);
    let total_row = &total_row[0];
    assert_eq!(&total_row[0], "total");

    let mut sum_of_totals = 0usize;
    let mut per_cluster = vec![0usize; k];
    for row in combos {
        let priority: u8 = row[0].parse().unwrap();
        let popcount = (1..=4).filter(|&c| &row[c] == "yes").count() as u8;
        assert_eq!(priority, popcount, "priority must equal flag popcount");

        let mut combo_total = 0usize;
        for c in 0..k {
            let v: usize = row[5 + c].parse().unwrap();
            per_cluster[c] += v;
            combo_total += v;
        }
        assert_eq!(combo_total, row[5 + k].parse::<usize>().unwrap());
        sum_of_totals += combo_total;
    }
    assert_eq!(
        sum_of_totals, 20000,
        "group totals must sum to dataset size"
    );
    for c in 0..k {
        assert_eq!(
            per_cluster[c], cluster_sizes[c],
            "cluster_{c} column must sum to its population"
        );
        assert_eq!(per_cluster[c], total_row[5 + c].parse::<usize>().unwrap());
    }
    assert_eq!(total_row[5 + k].parse::<usize>().unwrap(), 20000);

    // The review list agrees: every row's priority is its flag popcount.
    for row in read_csv(&out.join(files::REVIEW_LIST)) {
        let priority: u8 = row[1].parse().unwrap();
        let popcount = (2..=5).filter(|&c| &row[c] == "true").count() as u8;
        assert_eq!(priority, popcount);
    }
    println!(
        "acceptance: PASS ensemble integrity: {} priority groups partition 20000 rows across k={k} clusters, priority == popcount everywhere",
        combos.len()
    );
}

// ---------------------------------------------------------------------------
// Threshold counts

#[test]
fn threshold_cap_and_quantile_counts() {
    // 100000 distinct scores: the 99th-percentile count (1000) exceeds the
    // cap, so exactly 500 are flagged.
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut totals: Vec<f64> = (0..100_000).map(|i| 400.0 + i as f64 * 1e-3).collect();
    totals.shuffle(&mut rng);
    let table = ScoreTable::from_totals(totals, 100).unwrap();
    let flags = iforest_threshold(&table, 0.99, 500).unwrap();
    assert_eq!(flags.iter().filter(|&&f| f).count(), 500);

    // 10000 distinct scores: the quantile alone decides (100 < cap).
    let mut totals: Vec<f64> = (0..10_000).map(|i| 400.0 + i as f64 * 1e-3).collect();
    totals.shuffle(&mut rng);
    let table = ScoreTable::from_totals(totals, 100).unwrap();
    let flags = iforest_threshold(&table, 0.99, 500).unwrap();
    assert_eq!(flags.iter().filter(|&&f| f).count(), 100);

    println!(
        "acceptance: PASS thresholding: 100000 distinct scores -> 500 flags (cap), 10000 -> 100 flags (quantile)"
    );
}

// ---------------------------------------------------------------------------
// Shapley efficiency and sampling convergence

/// Black-box scorer with interactions across every feature pair (plus one
/// three-way term), so permutation sampling has real work to do on each
/// coordinate.
fn test_scorer(row: &[f64]) -> f64 {
    let mut v = 0.0;
    for i in 0..row.len() {
        v += 0.3 * if i % 2 == 0 { row[i] } else { -row[i] };
        for j in (i + 1)..row.len() {
            let w = ((i * 3 + j * 5) % 7 + 1) as f64 / 7.0;
            v += 0.25 * w * row[i] * row[j];
        }
    }
    v + 0.5 * row[0] * row[3] * row[6]
}

fn random_background(rng: &mut ChaCha8Rng, rows: usize, d: usize) -> FeatureMatrix {
    let data: Vec<f64> = (0..rows * d)
        .map(|_| rng.gen::<f64>() * 4.0 - 2.0)
        .collect();
    matrix(rows, d, data)
}

#[test]
fn shapley_exact_efficiency_and_sampled_convergence() {
    let d = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let background = random_background(&mut rng, 64, d);

    let mut worst: f64 = 0.0;
    let mut exact_rows = Vec::new();
    for row_id in 0..50 {
        let row: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
        let v = shapley_attributions(
            &test_scorer,
            &row,
            row_id,
            &background,
            AttributionMode::Exact,
        )
        .unwrap();
        let gap = (v.attributions.iter().sum::<f64>() - (v.prediction - v.baseline)).abs();
        worst = worst.max(gap);
        assert!(gap < 1e-9, "efficiency gap {gap} on row {row_id}");
        exact_rows.push((row, v.attributions));
    }

    // More permutations must beat fewer in distance to the exact values.
    // Both estimates share a seed (common random numbers), so the longer
    // run extends the shorter one's permutation stream.
    let mut improved = 0usize;
    for (t, (row, exact)) in exact_rows.iter().enumerate() {
        let err = |n_permutations: usize| {
            let v = shapley_attributions(
                &test_scorer,
                row,
                t,
                &background,
                AttributionMode::Sampled {
                    n_permutations,
                    seed: 900 + t as u64,
                },
            )
            .unwrap();
            v.attributions
                .iter()
                .zip(exact)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        if err(1000) < err(100) {
            improved += 1;
        }
    }
    assert!(
        improved >= 45,
        "1000-permutation estimate beat the 100-permutation one in only {improved}/50 trials"
    );
    println!(
        "acceptance: PASS shapley: exact efficiency gap <= {worst:.2e} on 50 rows (d=8); 1000 perms beat 100 perms in {improved}/50 trials"
    );
}

// ---------------------------------------------------------------------------
// Determinism of full runs

#[test]
fn identical_runs_produce_identical_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let input = InputConfig::Generate {
        config: GenConfig {
            n_records: 2500,
            n_vendors: 150,
            n_requesters: 25,
            n_buyers: 6,
            n_approvers: 12,
            n_group_categories: 3,
            n_material_categories: 10,
            amount_mu: 7.0,
            amount_sigma: 1.3,
            seed: 808,
        },
        anomalies: Some(AnomalySpec {
            rate_point: 0.01,
            rate_contextual: 0.01,
            multiplier_low: 10.0,
            multiplier_high: 20.0,
        }),
    };
    let mut config = RunConfig::new(input, dir.path().join("run"), 1234);
    config.k_max = 10;

    let first = pipeline::run_pipeline(&config).unwrap();
    let second = pipeline::run_pipeline(&config).unwrap();
    assert_eq!(first.manifest, second.manifest);
    assert_eq!(first.manifest_digest, second.manifest_digest);
    assert!(first.manifest.len() > 20);
    println!(
        "acceptance: PASS determinism: two identical runs, {} artifacts, digest {}",
        first.manifest.len(),
        first.manifest_digest
    );
}

// ---------------------------------------------------------------------------
// Sampled silhouette fidelity

#[test]
fn sampled_silhouette_tracks_full_within_tolerance() {
    // Three well-separated Gaussian-ish blobs, deliberately unequal.
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let sizes = [2500usize, 1500, 1000];
    let centers = [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)];
    let mut data = Vec::with_capacity(5000 * 2);
    let mut labels = Vec::with_capacity(5000);
    for (c, (&size, &(cx, cy))) in sizes.iter().zip(&centers).enumerate() {
        for _ in 0..size {
            let gauss = |rng: &mut ChaCha8Rng| {
                // sum of uniforms is plenty gaussian for a blob
                (0..6).map(|_| rng.gen::<f64>()).sum::<f64>() - 3.0
            };
            data.push(cx + gauss(&mut rng));
            data.push(cy + gauss(&mut rng));
            labels.push(c);
        }
    }
    let x = matrix(5000, 2, data);

    let full = silhouette_full(&x, &labels).unwrap().overall;
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let sampled = silhouette_sampled(&x, &labels, 0.1, seed).unwrap().overall;
        worst = worst.max((sampled - full).abs());
        assert!(
            (sampled - full).abs() < 0.05,
            "seed {seed}: sampled {sampled} vs full {full}"
        );
    }
    println!(
        "acceptance: PASS sampled silhouette (10%) within 0.05 of full over 20 seeds, max |delta| = {worst:.4} (full = {full:.4})"
    );
}

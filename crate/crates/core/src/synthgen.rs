//! Synthetic purchase data generation and labelled anomaly injection.
//!
//! The generator produces unlabelled datasets with realistic joint
//! structure: orders group several line items, every requester works with a
//! limited vendor pool, vendors have home material categories and material
//! categories map onto group categories. Amounts follow a lognormal
//! distribution. Vocabulary sizes are exercised exactly when the record
//! count allows it, so profiling a generated dataset reproduces the
//! configured counts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Dataset, Schema, TransactionRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_records: usize,
    pub n_vendors: usize,
    pub n_requesters: usize,
    pub n_buyers: usize,
    pub n_approvers: usize,
    pub n_group_categories: usize,
    pub n_material_categories: usize,
    /// Mean of the underlying normal of the lognormal amount distribution.
    pub amount_mu: f64,
    /// Standard deviation of the underlying normal.
    pub amount_sigma: f64,
    pub seed: u64,
}

impl GenConfig {
    /// Shaped like the first reference dataset: ~28k records, ~1k vendors,
    /// ~122 requesters, few buyers.
    pub fn company1_like(seed: u64) -> Self {
        GenConfig {
            n_records: 27779,
            n_vendors: 988,
            n_requesters: 122,
            n_buyers: 11,
            n_approvers: 76,
            n_group_categories: 3,
            n_material_categories: 23,
            amount_mu: 7.05,
            amount_sigma: 1.5,
            seed,
        }
    }

    /// Shaped like the second reference dataset: ~38k records, more buyers
    /// and approvers, larger amounts.
    pub fn company2_like(seed: u64) -> Self {
        GenConfig {
            n_records: 38162,
            n_vendors: 1126,
            n_requesters: 63,
            n_buyers: 51,
            n_approvers: 101,
            n_group_categories: 12,
            n_material_categories: 26,
            amount_mu: 7.64,
            amount_sigma: 1.5,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let counts = [
            ("n_records", self.n_records),
            ("n_vendors", self.n_vendors),
            ("n_requesters", self.n_requesters),
            ("n_buyers", self.n_buyers),
            ("n_approvers", self.n_approvers),
            ("n_group_categories", self.n_group_categories),
            ("n_material_categories", self.n_material_categories),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        if !self.amount_mu.is_finite() {
            return Err(Error::InvalidConfig("amount_mu must be finite".into()));
        }
        if !self.amount_sigma.is_finite() || self.amount_sigma < 0.0 {
            return Err(Error::InvalidConfig(
                "amount_sigma must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Anomaly injection plan. Rates are fractions of the dataset; the
/// multiplier range scales amounts of point anomalies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalySpec {
    pub rate_point: f64,
    pub rate_contextual: f64,
    pub multiplier_low: f64,
    pub multiplier_high: f64,
}

impl AnomalySpec {
    fn validate(&self) -> Result<()> {
        for (name, rate) in [
            ("rate_point", self.rate_point),
            ("rate_contextual", self.rate_contextual),
        ] {
            if !rate.is_finite() || !(0.0..=0.05).contains(&rate) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be in [0, 0.05], got {rate}"
                )));
            }
        }
        if !self.multiplier_low.is_finite() || self.multiplier_low <= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "multiplier_low must be greater than 1, got {}",
                self.multiplier_low
            )));
        }
        if !self.multiplier_high.is_finite() || self.multiplier_high < self.multiplier_low {
            return Err(Error::InvalidConfig(format!(
                "multiplier_high must be at least multiplier_low, got {}",
                self.multiplier_high
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnomalyLabel {
    None,
    Point,
    Contextual,
}

impl fmt::Display for AnomalyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AnomalyLabel::None => "none",
            AnomalyLabel::Point => "point",
            AnomalyLabel::Contextual => "contextual",
        };
        f.write_str(s)
    }
}

/// Row-aligned anomaly labels plus free-form notes about fallbacks taken
/// during injection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub labels: Vec<AnomalyLabel>,
    pub notes: Vec<String>,
}

impl GroundTruth {
    pub fn label(&self, row_id: usize) -> AnomalyLabel {
        self.labels[row_id]
    }

    pub fn count(&self, label: AnomalyLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["row_id", "label"])?;
        for (row_id, label) in self.labels.iter().enumerate() {
            wtr.write_record([row_id.to_string(), label.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|source| Error::FileAccess {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

const PAYMENT_TERMS: [&str; 4] = ["NET30", "NET60", "NET90", "IMMEDIATE"];
const ORDER_TYPES: [&str; 3] = ["STANDARD", "FRAMEWORK", "SERVICE"];
const NEW_ORDER_PROB: f64 = 0.25;
const FRESH_ITEM_PROB: f64 = 0.93;
const FRESH_DESC_PROB: f64 = 0.66;
const MATERIAL_NOISE_PROB: f64 = 0.1;

/// Generates a synthetic dataset with the standard 17-column schema.
pub fn generate(cfg: &GenConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let amount_dist = LogNormal::new(cfg.amount_mu, cfg.amount_sigma)
        .map_err(|e| Error::InvalidConfig(format!("amount distribution: {e}")))?;

    // Requester vendor pools. Every vendor gets a round-robin owner so the
    // vocabulary saturates; pools then grow with random extra vendors to a
    // heterogeneous target size.
    let base = ((1.5 * cfg.n_vendors as f64 / cfg.n_requesters as f64).round() as usize).max(1);
    let mut pools: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); cfg.n_requesters];
    for v in 0..cfg.n_vendors {
        pools[v % cfg.n_requesters].insert(v);
    }
    for pool in pools.iter_mut() {
        let target = (base + rng.gen_range(0..=base)).min(cfg.n_vendors);
        while pool.len() < target {
            pool.insert(rng.gen_range(0..cfg.n_vendors));
        }
    }
    let pools: Vec<Vec<usize>> = pools.into_iter().map(|s| s.into_iter().collect()).collect();

    let n_orgs = (cfg.n_requesters.div_ceil(8)).max(2);
    let requester_pin = cfg.n_requesters.max(cfg.n_vendors);

    let mut records = Vec::with_capacity(cfg.n_records);
    let mut order_idx = 0usize;
    // Per item: index into the description pool.
    let mut item_descs: Vec<usize> = Vec::new();
    let mut n_descs = 0usize;

    for i in 0..cfg.n_records {
        if i > 0 && rng.gen_bool(NEW_ORDER_PROB) {
            order_idx += 1;
        }

        let requester = if i < requester_pin {
            i % cfg.n_requesters
        } else {
            rng.gen_range(0..cfg.n_requesters)
        };
        let vendor = if i < cfg.n_vendors {
            i
        } else {
            let pool = &pools[requester];
            pool[rng.gen_range(0..pool.len())]
        };
        let buyer = if i < cfg.n_buyers {
            i
        } else {
            rng.gen_range(0..cfg.n_buyers)
        };
        let approver = if i < cfg.n_approvers {
            i
        } else {
            rng.gen_range(0..cfg.n_approvers)
        };
        let material = if i < cfg.n_material_categories {
            i
        } else if rng.gen_bool(MATERIAL_NOISE_PROB) {
            rng.gen_range(0..cfg.n_material_categories)
        } else {
            vendor % cfg.n_material_categories
        };
        let group = if i < cfg.n_group_categories {
            i
        } else {
            material % cfg.n_group_categories
        };

        let item = if item_descs.is_empty() || rng.gen_bool(FRESH_ITEM_PROB) {
            let desc = if n_descs == 0 || rng.gen_bool(FRESH_DESC_PROB) {
                n_descs += 1;
                n_descs - 1
            } else {
                rng.gen_range(0..n_descs)
            };
            item_descs.push(desc);
            item_descs.len() - 1
        } else {
            rng.gen_range(0..item_descs.len())
        };

        let raw: f64 = amount_dist.sample(&mut rng);
        // Round to cents; repeated exact values keep the mode statistic
        // meaningful.
        let amount = (raw * 100.0).round() / 100.0;

        records.push(TransactionRecord {
            row_id: i,
            order_id: format!("ORD{order_idx:06}"),
            item_id: format!("ITM{item:06}"),
            group_category: format!("GRP{group:02}"),
            material_category: format!("MAT{material:02}"),
            item_description: format!("DSC{:06}", item_descs[item]),
            vendor_code: format!("VND{vendor:04}"),
            requester_id: format!("REQ{requester:03}"),
            buyer_id: format!("BUY{buyer:03}"),
            approver_id: format!("APR{approver:03}"),
            org_code: format!("ORG{:02}", requester % n_orgs),
            amount: Some(amount),
            extra: vec![
                format!("PL{}", rng.gen_range(0..5u8)),
                format!("CC{:02}", rng.gen_range(0..40u8)),
                PAYMENT_TERMS[rng.gen_range(0..PAYMENT_TERMS.len())].to_string(),
                format!("PG{}", rng.gen_range(0..8u8)),
                ORDER_TYPES[rng.gen_range(0..ORDER_TYPES.len())].to_string(),
                format!("DS{:02}", rng.gen_range(0..12u8)),
            ],
        });
    }

    Ok(Dataset {
        schema: Schema::standard(),
        records,
    })
}

/// Injects labelled anomalies into a complete dataset.
///
/// Point anomalies inflate the amount by a multiplier drawn from the
/// configured range. Contextual anomalies swap the vendor for one the
/// requester has never co-occurred with; when no such vendor exists the
/// globally rarest vendor is used and a note records the fallback.
/// Anomaly rows are disjoint and chosen without replacement.
pub fn inject_anomalies(
    dataset: &Dataset,
    spec: &AnomalySpec,
    seed: u64,
) -> Result<(Dataset, GroundTruth)> {
    spec.validate()?;
    let n = dataset.len();
    if n == 0 {
        return Err(Error::EmptyDataset(
            "cannot inject into zero records".into(),
        ));
    }
    for rec in &dataset.records {
        if rec.amount.is_none() {
            return Err(Error::MissingValue {
                row: rec.row_id,
                column: "amount".into(),
            });
        }
    }

    let mut notes = Vec::new();
    let n_point = (spec.rate_point * n as f64 + 1e-9).floor() as usize;
    let n_contextual = (spec.rate_contextual * n as f64 + 1e-9).floor() as usize;
    if spec.rate_point > 0.0 && n_point == 0 {
        let msg = format!("rate_point {} selects zero rows", spec.rate_point);
        log::warn!("{msg}");
        notes.push(msg);
    }
    if spec.rate_contextual > 0.0 && n_contextual == 0 {
        let msg = format!("rate_contextual {} selects zero rows", spec.rate_contextual);
        log::warn!("{msg}");
        notes.push(msg);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut point_rows: Vec<usize> = index::sample(&mut rng, n, n_point).into_vec();
    point_rows.sort_unstable();
    let taken: BTreeSet<usize> = point_rows.iter().copied().collect();
    let remaining: Vec<usize> = (0..n).filter(|r| !taken.contains(r)).collect();
    let mut contextual_rows: Vec<usize> = index::sample(&mut rng, remaining.len(), n_contextual)
        .iter()
        .map(|p| remaining[p])
        .collect();
    contextual_rows.sort_unstable();

    // Pre-injection co-occurrence and vendor frequencies.
    let mut cooccur: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut vendor_freq: BTreeMap<&str, usize> = BTreeMap::new();
    for rec in &dataset.records {
        cooccur
            .entry(rec.requester_id.as_str())
            .or_default()
            .insert(rec.vendor_code.as_str());
        *vendor_freq.entry(rec.vendor_code.as_str()).or_default() += 1;
    }
    let all_vendors: Vec<&str> = vendor_freq.keys().copied().collect();
    let rarest_vendor = all_vendors
        .iter()
        .copied()
        .min_by_key(|v| (vendor_freq[v], *v))
        .expect("non-empty dataset has vendors");

    let mut out = dataset.clone();
    let mut labels = vec![AnomalyLabel::None; n];
    let multiplier = Uniform::new_inclusive(spec.multiplier_low, spec.multiplier_high);

    for &row in &point_rows {
        let amount = out.records[row].amount.expect("checked above");
        out.records[row].amount = Some(amount * multiplier.sample(&mut rng));
        labels[row] = AnomalyLabel::Point;
    }

    for &row in &contextual_rows {
        let requester = dataset.records[row].requester_id.as_str();
        let seen = &cooccur[requester];
        let unseen: Vec<&str> = all_vendors
            .iter()
            .copied()
            .filter(|v| !seen.contains(v))
            .collect();
        let new_vendor = if unseen.is_empty() {
            notes.push(format!(
                "row {row}: requester {requester} co-occurs with every vendor; \
                 used rarest vendor {rarest_vendor}"
            ));
            rarest_vendor
        } else {
            unseen[rng.gen_range(0..unseen.len())]
        };
        out.records[row].vendor_code = new_vendor.to_string();
        labels[row] = AnomalyLabel::Contextual;
    }

    Ok((out, GroundTruth { labels, notes }))
}

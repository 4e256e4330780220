//! End-to-end pipeline: ingest, profile, encode, detect, cluster, select,
//! score, prioritise and explain, with every artifact written to a run
//! directory and hashed into a manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clustering::{
    self, ClusterModel, ElbowCurve, ModelCandidate, Selection, StructureLabel,
};
use crate::encoding::{self, EncoderMap, EncodingStrategy, FeatureMatrix};
use crate::ensemble::{self, AnomalyScorecard, ReviewOrder};
use crate::error::{Error, Result};
use crate::explain::{self, AttributionMode, EXACT_MAX_FEATURES};
use crate::iforest;
use crate::ingest::{self, Dataset, Schema};
use crate::sampling::stratified_indices;
use crate::seeding::derive_seed;
use crate::synthgen::{self, AnomalySpec, GenConfig, GroundTruth};
use crate::univariate::{self, UnivariateParams};

/// Artifact file names within a run directory.
pub mod files {
    pub const RUN_CONFIG: &str = "run_config.json";
    pub const SCHEMA: &str = "schema.json";
    pub const DATASET: &str = "dataset.csv";
    pub const GROUND_TRUTH: &str = "ground_truth.csv";
    pub const PROFILE_JSON: &str = "profile.json";
    pub const PROFILE_CSV: &str = "profile.csv";
    pub const UNIVARIATE_SUMMARY: &str = "univariate_summary.json";
    pub const SELECTION: &str = "selection.json";
    pub const SILHOUETTE_FULL: &str = "silhouette_full_selected.csv";
    pub const IFOREST_SCORES: &str = "iforest_scores.csv";
    pub const REVIEW_LIST: &str = "review_list.csv";
    pub const UNIVARIATE_OUTLIERS: &str = "univariate_outliers.csv";
    pub const GROUP_DISTRIBUTION: &str = "group_distribution.csv";
    pub const ATTRIBUTION_SUMMARY: &str = "attribution_summary.csv";
    pub const ATTRIBUTIONS_DIR: &str = "attributions";
    pub const REPORT: &str = "report.json";
    pub const FAILED: &str = "FAILED";

    pub fn encoder(strategy: &str) -> String {
        format!("encoder_{strategy}.json")
    }
    pub fn univariate_flags(strategy: &str) -> String {
        format!("univariate_flags_{strategy}.csv")
    }
    pub fn elbow(strategy: &str) -> String {
        format!("elbow_{strategy}.csv")
    }
    pub fn silhouette(strategy: &str) -> String {
        format!("silhouette_{strategy}.csv")
    }
    pub fn attribution(row_id: usize) -> String {
        format!("row_{row_id}.json")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputConfig {
    Csv {
        path: PathBuf,
        #[serde(default)]
        schema: Option<PathBuf>,
    },
    Generate {
        config: GenConfig,
        #[serde(default)]
        anomalies: Option<AnomalySpec>,
    },
}

fn default_strategies() -> Vec<EncodingStrategy> {
    EncodingStrategy::ALL.to_vec()
}
fn default_k_min() -> usize {
    clustering::DEFAULT_K_MIN
}
fn default_k_max() -> usize {
    clustering::DEFAULT_K_MAX
}
fn default_fraction() -> f64 {
    0.1
}
fn default_z_threshold() -> f64 {
    2.5
}
fn default_eps() -> f64 {
    1.0
}
fn default_min_neighbors() -> usize {
    3
}
fn default_trees() -> usize {
    iforest::DEFAULT_N_TREES
}
fn default_sample_size() -> usize {
    iforest::DEFAULT_SAMPLE_SIZE
}
fn default_quantile() -> f64 {
    iforest::DEFAULT_QUANTILE
}
fn default_cap() -> usize {
    iforest::DEFAULT_CAP
}
fn default_min_fraction() -> f64 {
    0.01
}
fn default_explain_top() -> usize {
    10
}
fn default_permutations() -> usize {
    explain::DEFAULT_PERMUTATIONS
}
fn default_review_order() -> ReviewOrder {
    ReviewOrder::IforestDesc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: InputConfig,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<EncodingStrategy>,
    #[serde(default = "default_k_min")]
    pub k_min: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Stratified sample fraction for the per-k silhouette estimates.
    #[serde(default = "default_fraction")]
    pub silhouette_fraction: f64,
    #[serde(default = "default_z_threshold")]
    pub z_threshold: f64,
    #[serde(default = "default_eps")]
    pub dbscan_eps: f64,
    #[serde(default = "default_min_neighbors")]
    pub dbscan_min_neighbors: usize,
    #[serde(default = "default_trees")]
    pub iforest_trees: usize,
    #[serde(default = "default_sample_size")]
    pub iforest_sample_size: usize,
    #[serde(default = "default_quantile")]
    pub iforest_quantile: f64,
    #[serde(default = "default_cap")]
    pub iforest_cap: usize,
    /// Clusters holding less than this fraction of rows flag their members.
    #[serde(default = "default_min_fraction")]
    pub cluster_min_fraction: f64,
    /// Remove univariate-flagged rows before clustering and report them as
    /// a separate review stream.
    #[serde(default)]
    pub segregate_univariate: bool,
    /// Rows receiving an individual attribution file.
    #[serde(default = "default_explain_top")]
    pub explain_top: usize,
    #[serde(default = "default_permutations")]
    pub shapley_permutations: usize,
    /// Stratified fraction used for the attribution background set.
    #[serde(default = "default_fraction")]
    pub background_fraction: f64,
    #[serde(default = "default_review_order")]
    pub review_order: ReviewOrder,
}

impl RunConfig {
    pub fn new(input: InputConfig, output_dir: PathBuf, seed: u64) -> Self {
        RunConfig {
            input,
            output_dir,
            seed,
            strategies: default_strategies(),
            k_min: default_k_min(),
            k_max: default_k_max(),
            silhouette_fraction: default_fraction(),
            z_threshold: default_z_threshold(),
            dbscan_eps: default_eps(),
            dbscan_min_neighbors: default_min_neighbors(),
            iforest_trees: default_trees(),
            iforest_sample_size: default_sample_size(),
            iforest_quantile: default_quantile(),
            iforest_cap: default_cap(),
            cluster_min_fraction: default_min_fraction(),
            segregate_univariate: false,
            explain_top: default_explain_top(),
            shapley_permutations: default_permutations(),
            background_fraction: default_fraction(),
            review_order: default_review_order(),
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::FileAccess {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::InvalidConfig("no encoding strategies".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.strategies {
            if !seen.insert(*s) {
                return Err(Error::InvalidConfig(format!("duplicate strategy {s}")));
            }
        }
        if self.k_min < 2 || self.k_min > self.k_max {
            return Err(Error::InvalidConfig(format!(
                "need 2 <= k_min <= k_max, got {}..{}",
                self.k_min, self.k_max
            )));
        }
        for (name, v) in [
            ("silhouette_fraction", self.silhouette_fraction),
            ("background_fraction", self.background_fraction),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be in (0, 1], got {v}"
                )));
            }
        }
        if !(self.z_threshold > 0.0 && self.dbscan_eps > 0.0) {
            return Err(Error::InvalidConfig(
                "z_threshold and dbscan_eps must be positive".into(),
            ));
        }
        if self.dbscan_min_neighbors == 0 {
            return Err(Error::InvalidConfig(
                "dbscan_min_neighbors must be at least 1".into(),
            ));
        }
        if self.iforest_trees == 0 || self.iforest_sample_size == 0 || self.iforest_cap == 0 {
            return Err(Error::InvalidConfig(
                "isolation forest parameters must be at least 1".into(),
            ));
        }
        if !(self.iforest_quantile > 0.0 && self.iforest_quantile < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "iforest_quantile must be in (0, 1), got {}",
                self.iforest_quantile
            )));
        }
        if !(self.cluster_min_fraction > 0.0 && self.cluster_min_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "cluster_min_fraction must be in (0, 1), got {}",
                self.cluster_min_fraction
            )));
        }
        if self.shapley_permutations == 0 {
            return Err(Error::InvalidConfig(
                "shapley_permutations must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn univariate_params(&self) -> UnivariateParams {
        UnivariateParams {
            z_threshold: self.z_threshold,
            dbscan_eps: self.dbscan_eps,
            dbscan_min_neighbors: self.dbscan_min_neighbors,
        }
    }
}

/// Per-strategy outcome counts for the run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub strategy: EncodingStrategy,
    pub univariate_flagged: usize,
    pub normal: usize,
    pub total: usize,
    pub best_k: usize,
    pub best_sc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub strategy: EncodingStrategy,
    pub k: usize,
    pub sc_sampled: f64,
    pub sc_full: f64,
    pub label: StructureLabel,
    pub sse: f64,
    pub cluster_sizes: Vec<usize>,
    pub n_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub n_input_records: usize,
    pub n_removed_incomplete: usize,
    /// Rows that entered clustering (after optional segregation).
    pub n_model_rows: usize,
    pub strategies: Vec<StrategyOutcome>,
    pub selection: SelectionReport,
    pub iforest_flagged: usize,
    pub priority_histogram: BTreeMap<u8, usize>,
    pub timings_ms: Vec<(String, u64)>,
    /// Relative path → sha256 of every artifact except this report.
    pub manifest: BTreeMap<String, String>,
    pub manifest_digest: String,
}

impl RunReport {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::FileAccess {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::FileAccess {
        path: path.to_path_buf(),
        source,
    })
}

fn create_file(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|source| Error::FileAccess {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(std::io::BufWriter::new(file))
}

fn stage<T>(
    out_dir: &Path,
    timings: &mut Vec<(String, u64)>,
    name: &'static str,
    f: impl FnOnce() -> Result<T>,
) -> Result<T> {
    let start = Instant::now();
    match f() {
        Ok(v) => {
            timings.push((name.to_string(), start.elapsed().as_millis() as u64));
            log::info!("stage {name} finished in {} ms", timings.last().unwrap().1);
            Ok(v)
        }
        Err(e) => {
            let _ = std::fs::write(
                out_dir.join(files::FAILED),
                format!("stage {name} failed: {e}\n"),
            );
            Err(Error::Stage {
                stage: name,
                source: Box::new(e),
            })
        }
    }
}

/// Everything derived for one encoding strategy.
struct StrategyData {
    strategy: EncodingStrategy,
    flag_table: univariate::UnivariateFlagTable,
    /// Matrix used for clustering and the forest; row ids refer to the
    /// cleaned dataset.
    modeling: FeatureMatrix,
    univariate_flagged: usize,
}

/// Encodes, normalizes and runs the univariate detectors for one strategy;
/// optionally drops the univariate union from the modeling matrix.
fn build_strategy_matrix(
    cleaned: &Dataset,
    strategy: EncodingStrategy,
    params: &UnivariateParams,
    segregate: bool,
) -> Result<(EncoderMap, StrategyData)> {
    let encoder = encoding::fit_target_encoding(cleaned, strategy)?;
    let (raw, _) = encoding::apply_encoding(cleaned, &encoder)?;
    let (normalized, _) = encoding::gaussian_normalize(&raw)?;
    let flag_table = univariate::detect(&normalized, params)?;
    let univariate_flagged = flag_table.union_count();

    let modeling = if segregate {
        let retained: Vec<usize> = (0..cleaned.len())
            .filter(|&i| !flag_table.union[i])
            .collect();
        if retained.is_empty() {
            return Err(Error::EmptyDataset(
                "every row is univariate-flagged; nothing left to cluster".into(),
            ));
        }
        // Refit on the retained rows only, so the detectors' victims do not
        // distort the group statistics. Row ids keep pointing at the
        // cleaned dataset.
        let retained_dataset = Dataset {
            schema: cleaned.schema.clone(),
            records: retained
                .iter()
                .map(|&i| cleaned.records[i].clone())
                .collect(),
        };
        let enc2 = encoding::fit_target_encoding(&retained_dataset, strategy)?;
        let (raw2, _) = encoding::apply_encoding(&retained_dataset, &enc2)?;
        let (renorm, _) = encoding::gaussian_normalize(&raw2)?;
        renorm
    } else {
        normalized
    };

    Ok((
        encoder,
        StrategyData {
            strategy,
            flag_table,
            modeling,
            univariate_flagged,
        },
    ))
}

fn load_input(config: &RunConfig) -> Result<(Dataset, Option<GroundTruth>)> {
    match &config.input {
        InputConfig::Csv { path, schema } => {
            let schema = match schema {
                Some(p) => Schema::from_json_file(p)?,
                None => Schema::standard(),
            };
            Ok((ingest::load_transactions_file(path, &schema)?, None))
        }
        InputConfig::Generate {
            config: gen,
            anomalies,
        } => {
            let dataset = synthgen::generate(gen)?;
            match anomalies {
                Some(spec) => {
                    let (injected, truth) = synthgen::inject_anomalies(
                        &dataset,
                        spec,
                        derive_seed(gen.seed, "inject", 0),
                    )?;
                    Ok((injected, Some(truth)))
                }
                None => Ok((dataset, None)),
            }
        }
    }
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|source| Error::FileAccess {
        path: path.to_path_buf(),
        source,
    })?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex(&hasher.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn collect_files(dir: &Path, base: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|source| Error::FileAccess {
        path: dir.to_path_buf(),
        source,
    })?;
    for entry in entries {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() {
            collect_files(&path, base, out)?;
        } else {
            out.push(
                path.strip_prefix(base)
                    .expect("children of base")
                    .to_path_buf(),
            );
        }
    }
    Ok(())
}

/// Hashes every file under the run directory except the report itself and
/// the failure marker. Keys are slash-separated relative paths.
pub fn build_manifest(run_dir: &Path) -> Result<(BTreeMap<String, String>, String)> {
    let mut paths = Vec::new();
    collect_files(run_dir, run_dir, &mut paths)?;
    let mut manifest = BTreeMap::new();
    for rel in paths {
        let name = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        if name == files::REPORT || name == files::FAILED {
            continue;
        }
        manifest.insert(name, sha256_file(&run_dir.join(&rel))?);
    }
    let mut hasher = Sha256::new();
    for (name, hash) in &manifest {
        hasher.update(name.as_bytes());
        hasher.update(b":");
        hasher.update(hash.as_bytes());
        hasher.update(b"\n");
    }
    Ok((manifest.clone(), hex(&hasher.finalize())))
}

fn write_review_list<W: Write>(
    w: W,
    ordered: &[AnomalyScorecard],
    cleaned: &Dataset,
    position_of: &BTreeMap<usize, usize>,
    assignments: &[usize],
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec![
        "row_id".to_string(),
        "priority".to_string(),
        "kmeans_flag".to_string(),
        "silhouette_flag".to_string(),
        "iforest_flag".to_string(),
        "univariate_flag".to_string(),
        "silhouette".to_string(),
        "prediction".to_string(),
        "cluster".to_string(),
    ];
    header.extend(cleaned.schema.names().iter().map(|s| s.to_string()));
    wtr.write_record(&header)?;
    for card in ordered {
        let pos = position_of[&card.row_id];
        let rec = &cleaned.records[card.row_id];
        let mut cells = vec![
            card.row_id.to_string(),
            card.priority.to_string(),
            card.flags.kmeans.to_string(),
            card.flags.silhouette.to_string(),
            card.flags.iforest.to_string(),
            card.flags.univariate.to_string(),
            format!("{}", card.silhouette_score),
            format!("{}", card.prediction),
            assignments[pos].to_string(),
        ];
        for col in 0..cleaned.schema.len() {
            if col == cleaned.schema.amount_index() {
                cells.push(match rec.amount {
                    Some(a) => format!("{a}"),
                    None => String::new(),
                });
            } else {
                cells.push(cleaned.categorical_cell(card.row_id, col).to_string());
            }
        }
        wtr.write_record(&cells)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Runs the whole pipeline, writing artifacts into the configured output
/// directory. A failing stage leaves a FAILED marker naming the stage.
pub fn run_pipeline(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let out = config.output_dir.clone();
    std::fs::create_dir_all(&out).map_err(|source| Error::FileAccess {
        path: out.clone(),
        source,
    })?;
    let _ = std::fs::remove_file(out.join(files::FAILED));
    let mut timings: Vec<(String, u64)> = Vec::new();

    // Ingest: load or generate, clean, persist the working dataset.
    let (cleaned, truth, n_input, n_removed) = stage(&out, &mut timings, "ingest", || {
        let (raw, truth) = load_input(config)?;
        let n_input = raw.len();
        let (cleaned, n_removed) = ingest::clean(&raw)?;
        write_text(
            &out.join(files::RUN_CONFIG),
            &serde_json::to_string_pretty(config)?,
        )?;
        write_text(
            &out.join(files::SCHEMA),
            &serde_json::to_string_pretty(&cleaned.schema)?,
        )?;
        cleaned.write_csv_file(&out.join(files::DATASET))?;
        if let Some(t) = &truth {
            if n_removed > 0 {
                // Generated data is always complete; a removal here
                // would desynchronise the labels.
                return Err(Error::InvalidConfig(
                    "generated dataset lost rows during cleaning".into(),
                ));
            }
            t.write_csv_file(&out.join(files::GROUND_TRUTH))?;
        }
        Ok((cleaned, truth, n_input, n_removed))
    })?;
    let _ = truth;

    stage(&out, &mut timings, "profile", || {
        let report = ingest::profile(&cleaned)?;
        write_text(&out.join(files::PROFILE_JSON), &report.to_json()?)?;
        write_text(&out.join(files::PROFILE_CSV), &report.to_table_csv()?)?;
        Ok(())
    })?;

    let params = config.univariate_params();
    let strategy_data = stage(&out, &mut timings, "encode", || {
        let mut all = Vec::new();
        for &s in &config.strategies {
            let (encoder, data) =
                build_strategy_matrix(&cleaned, s, &params, config.segregate_univariate)?;
            write_text(&out.join(files::encoder(s.name())), &encoder.to_json()?)?;
            let w = create_file(&out.join(files::univariate_flags(s.name())))?;
            data.flag_table
                .write_flagged_csv(&(0..cleaned.len()).collect::<Vec<_>>(), w)?;
            all.push(data);
        }
        let summary: Vec<serde_json::Value> = all
            .iter()
            .map(|d| {
                serde_json::json!({
                    "strategy": d.strategy.name(),
                    "univariate_outliers": d.univariate_flagged,
                    "normal": cleaned.len() - d.univariate_flagged,
                    "total": cleaned.len(),
                })
            })
            .collect();
        write_text(
            &out.join(files::UNIVARIATE_SUMMARY),
            &serde_json::to_string_pretty(&summary)?,
        )?;
        Ok(all)
    })?;

    // Cluster: k sweep and sampled silhouettes per strategy.
    struct SweepResult {
        models: Vec<ClusterModel>,
        sampled_sc: Vec<f64>,
    }
    let sweeps = stage(&out, &mut timings, "cluster", || {
        let mut sweeps = Vec::new();
        for (si, data) in strategy_data.iter().enumerate() {
            let kmeans_seed = derive_seed(config.seed, "kmeans", si as u64);
            let models = clustering::sweep_models(
                &data.modeling,
                config.k_min,
                config.k_max,
                kmeans_seed,
                clustering::DEFAULT_MAX_ITER,
                clustering::DEFAULT_TOL,
            )?;
            let curve = ElbowCurve::from_models(&models);
            curve.write_csv(create_file(&out.join(files::elbow(data.strategy.name())))?)?;

            let sil_seed = derive_seed(config.seed, "silhouette", si as u64);
            let mut sampled_sc = Vec::with_capacity(models.len());
            let mut w = csv::Writer::from_writer(create_file(
                &out.join(files::silhouette(data.strategy.name())),
            )?);
            w.write_record(["k", "sc_sampled"])?;
            for m in &models {
                let report = clustering::silhouette_sampled(
                    &data.modeling,
                    &m.assignments,
                    config.silhouette_fraction,
                    derive_seed(sil_seed, "k", m.k as u64),
                )?;
                w.write_record([m.k.to_string(), format!("{}", report.overall)])?;
                sampled_sc.push(report.overall);
            }
            w.flush()?;
            sweeps.push(SweepResult { models, sampled_sc });
        }
        Ok(sweeps)
    })?;

    // Select the best (strategy, k) by sampled silhouette and verify it
    // with a full silhouette pass.
    let (selection, full_report, selection_report) = stage(&out, &mut timings, "select", || {
        let mut candidates = Vec::new();
        for (data, sweep) in strategy_data.iter().zip(&sweeps) {
            for (m, &sc) in sweep.models.iter().zip(&sweep.sampled_sc) {
                candidates.push(ModelCandidate {
                    strategy: data.strategy,
                    k: m.k,
                    sc,
                });
            }
        }
        let selection: Selection = clustering::select_model(&candidates)?;
        let si = config
            .strategies
            .iter()
            .position(|&s| s == selection.strategy)
            .expect("selected strategy comes from the configured list");
        let model = &sweeps[si].models[selection.k - config.k_min];
        let full = clustering::silhouette_full(&strategy_data[si].modeling, &model.assignments)?;
        let report = SelectionReport {
            strategy: selection.strategy,
            k: selection.k,
            sc_sampled: selection.sc,
            sc_full: full.overall,
            label: selection.label,
            sse: model.sse,
            cluster_sizes: model.cluster_sizes(),
            n_rows: strategy_data[si].modeling.n_rows(),
        };
        write_text(
            &out.join(files::SELECTION),
            &serde_json::to_string_pretty(&report)?,
        )?;
        full.write_csv(
            strategy_data[si].modeling.row_ids(),
            create_file(&out.join(files::SILHOUETTE_FULL))?,
        )?;
        Ok((selection, full, report))
    })?;

    let selected_index = config
        .strategies
        .iter()
        .position(|&s| s == selection.strategy)
        .expect("validated above");
    let selected_data = &strategy_data[selected_index];
    let selected_model = &sweeps[selected_index].models[selection.k - config.k_min];
    let modeling = &selected_data.modeling;

    // Isolation forest on the selected strategy's matrix.
    let (forest, score_table, iforest_flags) = stage(&out, &mut timings, "iforest", || {
        let forest = iforest::iforest_train(
            modeling,
            config.iforest_trees,
            config.iforest_sample_size,
            derive_seed(config.seed, "iforest", 0),
        )?;
        let table = iforest::predict_scores(&forest, modeling)?;
        let flags =
            iforest::iforest_threshold(&table, config.iforest_quantile, config.iforest_cap)?;
        table.write_csv(
            modeling.row_ids(),
            &flags,
            create_file(&out.join(files::IFOREST_SCORES))?,
        )?;
        Ok((forest, table, flags))
    })?;

    // Ensemble: combine all four detectors into the review list.
    let (cards, priority_histogram) = stage(&out, &mut timings, "ensemble", || {
        let kflags = ensemble::kmeans_anomaly_flags(selected_model, config.cluster_min_fraction)?;
        let sflags = ensemble::silhouette_anomaly_flags(&full_report)?;
        let uflags: Vec<bool> = if config.segregate_univariate {
            // The univariate victims were removed before clustering; the
            // remaining rows are by construction not univariate-flagged.
            vec![false; modeling.n_rows()]
        } else {
            selected_data.flag_table.union.clone()
        };
        let full_scores = full_report.full_point_scores()?;
        let cards = ensemble::build_scorecards(
            modeling.row_ids(),
            &kflags,
            &sflags,
            &iforest_flags,
            &uflags,
            &full_scores,
            &score_table.predictions,
        )?;

        let position_of: BTreeMap<usize, usize> = modeling
            .row_ids()
            .iter()
            .enumerate()
            .map(|(pos, &rid)| (rid, pos))
            .collect();
        let ordered = ensemble::prioritise(&cards, config.review_order);
        write_review_list(
            create_file(&out.join(files::REVIEW_LIST))?,
            &ordered,
            &cleaned,
            &position_of,
            &selected_model.assignments,
        )?;

        if config.segregate_univariate {
            let flagged: Vec<usize> = (0..cleaned.len())
                .filter(|&i| selected_data.flag_table.union[i])
                .collect();
            let mut wtr =
                csv::Writer::from_writer(create_file(&out.join(files::UNIVARIATE_OUTLIERS))?);
            let mut header = vec!["row_id".to_string()];
            header.extend(cleaned.schema.names().iter().map(|s| s.to_string()));
            wtr.write_record(&header)?;
            for i in flagged {
                let rec = &cleaned.records[i];
                let mut cells = vec![i.to_string()];
                for col in 0..cleaned.schema.len() {
                    if col == cleaned.schema.amount_index() {
                        cells.push(match rec.amount {
                            Some(a) => format!("{a}"),
                            None => String::new(),
                        });
                    } else {
                        cells.push(cleaned.categorical_cell(i, col).to_string());
                    }
                }
                wtr.write_record(&cells)?;
            }
            wtr.flush()?;
        }

        let table = ensemble::group_distribution(&cards, &selected_model.assignments, selection.k)?;
        table.write_csv(create_file(&out.join(files::GROUP_DISTRIBUTION))?)?;

        let mut histogram = BTreeMap::new();
        for c in &cards {
            *histogram.entry(c.priority).or_insert(0usize) += 1;
        }
        Ok((cards, histogram))
    })?;

    // Explain: per-row attributions for the review head, plus a global
    // importance summary over the forest-flagged rows.
    stage(&out, &mut timings, "explain", || {
        let background_rows = stratified_indices(
            &selected_model.assignments,
            config.background_fraction,
            derive_seed(config.seed, "background", 0),
        )?;
        let background = modeling.select_rows(&background_rows);
        let scorer = iforest::ForestScorer::new(&forest, &score_table);
        let score = |row: &[f64]| scorer.score(row);
        let shapley_seed = derive_seed(config.seed, "shapley", 0);
        let mode_for = |row_id: usize| {
            if modeling.n_features() <= EXACT_MAX_FEATURES {
                AttributionMode::Exact
            } else {
                AttributionMode::Sampled {
                    n_permutations: config.shapley_permutations,
                    seed: derive_seed(shapley_seed, "row", row_id as u64),
                }
            }
        };

        let dir = out.join(files::ATTRIBUTIONS_DIR);
        std::fs::create_dir_all(&dir).map_err(|source| Error::FileAccess {
            path: dir.clone(),
            source,
        })?;
        let position_of: BTreeMap<usize, usize> = modeling
            .row_ids()
            .iter()
            .enumerate()
            .map(|(pos, &rid)| (rid, pos))
            .collect();
        let ordered = ensemble::prioritise(&cards, config.review_order);
        for card in ordered.iter().take(config.explain_top) {
            let pos = position_of[&card.row_id];
            let vector = explain::shapley_attributions(
                &score,
                modeling.row(pos),
                card.row_id,
                &background,
                mode_for(card.row_id),
            )?;
            write_text(
                &dir.join(files::attribution(card.row_id)),
                &vector.to_json()?,
            )?;
        }

        let flagged_positions: Vec<usize> = (0..modeling.n_rows())
            .filter(|&i| iforest_flags[i])
            .collect();
        let targets = modeling.select_rows(&flagged_positions);
        let base_mode = if modeling.n_features() <= EXACT_MAX_FEATURES {
            AttributionMode::Exact
        } else {
            AttributionMode::Sampled {
                n_permutations: config.shapley_permutations,
                seed: shapley_seed,
            }
        };
        let summary =
            explain::global_attribution_summary(&score, &targets, &background, base_mode)?;
        summary.write_csv(create_file(&out.join(files::ATTRIBUTION_SUMMARY))?)?;
        Ok(())
    })?;

    // Report: hash all artifacts and write the run summary.
    let report = stage(&out, &mut timings, "report", || {
        let (manifest, manifest_digest) = build_manifest(&out)?;
        let strategies = strategy_data
            .iter()
            .zip(&sweeps)
            .map(|(d, sweep)| {
                let best = sweep
                    .sampled_sc
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                    .expect("non-empty sweep");
                StrategyOutcome {
                    strategy: d.strategy,
                    univariate_flagged: d.univariate_flagged,
                    normal: cleaned.len() - d.univariate_flagged,
                    total: cleaned.len(),
                    best_k: sweep.models[best.0].k,
                    best_sc: *best.1,
                }
            })
            .collect();
        Ok(RunReport {
            n_input_records: n_input,
            n_removed_incomplete: n_removed,
            n_model_rows: modeling.n_rows(),
            strategies,
            selection: selection_report.clone(),
            iforest_flagged: iforest_flags.iter().filter(|&&f| f).count(),
            priority_histogram: priority_histogram.clone(),
            timings_ms: Vec::new(),
            manifest,
            manifest_digest,
        })
    })?;
    let mut report = report;
    report.timings_ms = timings;
    write_text(
        &out.join(files::REPORT),
        &serde_json::to_string_pretty(&report)?,
    )?;
    Ok(report)
}

/// Recomputes attributions for the top rows of an existing run directory
/// without re-running the sweep. The deterministic seeding reproduces the
/// same modeling matrix, forest and background the original run used.
pub fn reexplain(run_dir: &Path, top_n: usize) -> Result<Vec<PathBuf>> {
    let config = RunConfig::from_json_file(&run_dir.join(files::RUN_CONFIG))?;
    let schema = Schema::from_json_file(&run_dir.join(files::SCHEMA))?;
    let cleaned = ingest::load_transactions_file(&run_dir.join(files::DATASET), &schema)?;
    let selection_text =
        std::fs::read_to_string(run_dir.join(files::SELECTION)).map_err(|source| {
            Error::FileAccess {
                path: run_dir.join(files::SELECTION),
                source,
            }
        })?;
    let selection: SelectionReport = serde_json::from_str(&selection_text)?;

    let si = config
        .strategies
        .iter()
        .position(|&s| s == selection.strategy)
        .ok_or_else(|| Error::InvalidConfig("selection strategy missing from run config".into()))?;
    let params = config.univariate_params();
    let (_, data) = build_strategy_matrix(
        &cleaned,
        selection.strategy,
        &params,
        config.segregate_univariate,
    )?;
    let kmeans_seed = derive_seed(config.seed, "kmeans", si as u64);
    let model = clustering::kmeans_fit(
        &data.modeling,
        selection.k,
        derive_seed(kmeans_seed, "k", selection.k as u64),
        clustering::DEFAULT_MAX_ITER,
        clustering::DEFAULT_TOL,
    )?;
    let forest = iforest::iforest_train(
        &data.modeling,
        config.iforest_trees,
        config.iforest_sample_size,
        derive_seed(config.seed, "iforest", 0),
    )?;
    let table = iforest::predict_scores(&forest, &data.modeling)?;
    let background_rows = stratified_indices(
        &model.assignments,
        config.background_fraction,
        derive_seed(config.seed, "background", 0),
    )?;
    let background = data.modeling.select_rows(&background_rows);
    let scorer = iforest::ForestScorer::new(&forest, &table);
    let score = |row: &[f64]| scorer.score(row);
    let shapley_seed = derive_seed(config.seed, "shapley", 0);

    // The review list is already ordered; its head names the target rows.
    let review = std::fs::read_to_string(run_dir.join(files::REVIEW_LIST)).map_err(|source| {
        Error::FileAccess {
            path: run_dir.join(files::REVIEW_LIST),
            source,
        }
    })?;
    let mut rdr = csv::Reader::from_reader(review.as_bytes());
    let mut target_ids = Vec::new();
    for rec in rdr.records().take(top_n) {
        let rec = rec?;
        let id: usize = rec
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidConfig("malformed review list".into()))?;
        target_ids.push(id);
    }

    let position_of: BTreeMap<usize, usize> = data
        .modeling
        .row_ids()
        .iter()
        .enumerate()
        .map(|(pos, &rid)| (rid, pos))
        .collect();
    let dir = run_dir.join(files::ATTRIBUTIONS_DIR);
    std::fs::create_dir_all(&dir).map_err(|source| Error::FileAccess {
        path: dir.clone(),
        source,
    })?;
    let mut written = Vec::new();
    for row_id in target_ids {
        let pos = *position_of.get(&row_id).ok_or_else(|| {
            Error::InvalidConfig(format!("review row {row_id} not in the modeling matrix"))
        })?;
        let mode = if data.modeling.n_features() <= EXACT_MAX_FEATURES {
            AttributionMode::Exact
        } else {
            AttributionMode::Sampled {
                n_permutations: config.shapley_permutations,
                seed: derive_seed(shapley_seed, "row", row_id as u64),
            }
        };
        let vector = explain::shapley_attributions(
            &score,
            data.modeling.row(pos),
            row_id,
            &background,
            mode,
        )?;
        let path = dir.join(files::attribution(row_id));
        write_text(&path, &vector.to_json()?)?;
        written.push(path);
    }
    Ok(written)
}

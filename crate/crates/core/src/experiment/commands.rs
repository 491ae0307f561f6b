use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::adversarial::{train, EpochRecord};
use crate::data::{
    apply_filter_threshold, featurize_cached, load_table, split, synth_table, FeatureCache, FeaturizeReport,
    FoldAssignment, InteractionTable, RemovalReport, SplitScheme, SynthConfig,
};
use crate::error::{Error, Result};
use crate::hash::StableHasher;
use crate::metrics::{aggregate, concordance_index_fast, pearson_r, pearson_r2, rmse, MetricCell, MetricReport};
use crate::nn::{Checkpoint, DtiModel, EncodedSet, FeatureStandardizer};

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn derive_seed(seed: u64, fold: usize, tag: &str) -> u64 {
    let mut h = StableHasher::new();
    h.write_u64(seed);
    h.write_u64(fold as u64);
    h.write_bytes(tag.as_bytes());
    h.finish()
}

/// Filtered table and the feature cache it was featurized into.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub table: InteractionTable,
    pub cache: FeatureCache,
    pub removal: RemovalReport,
}

fn load_filtered(cfg: &ExperimentConfig) -> Result<(InteractionTable, RemovalReport)> {
    let raw = load_table(&cfg.data.path, &cfg.data.schema)?;
    apply_filter_threshold(&raw, cfg.data.filter_threshold, cfg.data.single_pass)
}

/// Loads and filters the table and pairs it with the existing feature cache.
pub fn load_prepared(cfg: &ExperimentConfig) -> Result<PreparedData> {
    cfg.validate()?;
    let (filtered, removal) = load_filtered(cfg)?;
    let dir = cfg.cache_dir();
    let cache = FeatureCache::load(&dir, &cfg.features)?.ok_or_else(|| {
        Error::Data(format!(
            "no feature cache matching this configuration at {}; run `dti featurize` first",
            dir.display()
        ))
    })?;
    let (table, _) = cache.select(&filtered, cfg.data.skip_bad)?;
    Ok(PreparedData { table, cache, removal })
}

#[derive(Debug, Clone, Serialize)]
pub struct FeaturizeSummary {
    pub cache_dir: PathBuf,
    pub removal: RemovalReport,
    pub featurize: FeaturizeReport,
}

/// Loads, filters and featurizes the table into the cache directory. The
/// removal and featurization reports go to `{output.dir}/featurize_report.json`.
pub fn cmd_featurize(cfg: &ExperimentConfig) -> Result<FeaturizeSummary> {
    cfg.validate()?;
    let (table, removal) = load_filtered(cfg)?;
    let cache_dir = cfg.cache_dir();
    let (_, _, featurize) = featurize_cached(&table, &cfg.features, &cache_dir, cfg.data.skip_bad)?;
    let summary = FeaturizeSummary {
        cache_dir,
        removal,
        featurize,
    };
    #[derive(Serialize)]
    struct Report<'a> {
        config: serde_json::Value,
        #[serde(flatten)]
        summary: &'a FeaturizeSummary,
    }
    write_json(
        &cfg.output.dir.join("featurize_report.json"),
        &Report {
            config: cfg.echo(),
            summary: &summary,
        },
    )?;
    Ok(summary)
}

pub fn split_path(cfg: &ExperimentConfig, scheme: SplitScheme, seed: u64) -> PathBuf {
    cfg.output.dir.join("splits").join(format!("{scheme}_seed{seed}.json"))
}

#[derive(Serialize, Deserialize)]
struct FoldFile {
    config: serde_json::Value,
    #[serde(flatten)]
    assignment: FoldAssignment,
}

/// Writes one fold-assignment file per (scheme, seed).
pub fn cmd_split(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let prepared = load_prepared(cfg)?;
    let mut written = Vec::new();
    for &scheme in &cfg.split.schemes {
        for &seed in &cfg.split.seeds {
            let assignment = split(&prepared.table, scheme, cfg.split.n_folds, seed)?;
            let path = split_path(cfg, scheme, seed);
            write_json(
                &path,
                &FoldFile {
                    config: cfg.echo(),
                    assignment,
                },
            )?;
            written.push(path);
        }
    }
    Ok(written)
}

fn load_split(
    cfg: &ExperimentConfig,
    table: &InteractionTable,
    scheme: SplitScheme,
    seed: u64,
) -> Result<FoldAssignment> {
    let path = split_path(cfg, scheme, seed);
    if !path.is_file() {
        return Err(Error::Data(format!(
            "fold file {} is missing; run `dti split` first",
            path.display()
        )));
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let file: FoldFile = serde_json::from_str(&text)?;
    let a = file.assignment;
    if a.scheme != scheme || a.seed != seed || a.n_folds != cfg.split.n_folds {
        return Err(Error::Data(format!(
            "{} does not match the configured split; rerun `dti split`",
            path.display()
        )));
    }
    a.check_table(table)?;
    Ok(a)
}

pub fn cell_dir(cfg: &ExperimentConfig, scheme: SplitScheme, seed: u64, fold: usize) -> PathBuf {
    cfg.output
        .dir
        .join(cfg.model.variant.name())
        .join(scheme.name())
        .join(format!("seed{seed}"))
        .join(format!("fold{fold}"))
}

/// A trained (scheme, seed, fold) cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub scheme: SplitScheme,
    pub seed: u64,
    pub fold: usize,
    pub checkpoint: Checkpoint,
    pub history: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub scheme: SplitScheme,
    pub seed: u64,
    pub fold: usize,
    pub error: String,
}

fn encode<'a>(
    prepared: &'a PreparedData,
    indices: &[usize],
    standardizer: &FeatureStandardizer,
) -> Result<EncodedSet<'a>> {
    let records = prepared.table.records();
    EncodedSet::build(
        &prepared.cache,
        indices.iter().map(|&i| {
            let r = &records[i];
            (r.compound_id.as_str(), r.target_id.as_str(), r.affinity)
        }),
        standardizer,
    )
}

/// Trains one cell: fits the composition standardizer on the fold's training
/// records, holds out `train.inner_val_fraction` of them for early stopping
/// and trains on the rest.
pub fn run_cell(
    cfg: &ExperimentConfig,
    prepared: &PreparedData,
    assignment: &FoldAssignment,
    fold: usize,
) -> Result<CellResult> {
    let seed = assignment.seed;
    let mut training = assignment.training_indices(fold);
    if training.is_empty() {
        return Err(Error::Data(format!("fold {fold} has no training records")));
    }
    let frac = cfg.train.inner_val_fraction;
    let mut inner = Vec::new();
    if frac > 0.0 {
        let n_inner = ((training.len() as f64 * frac).round() as usize).max(1);
        if n_inner < training.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, fold, "inner-split"));
            training.shuffle(&mut rng);
            inner = training.split_off(training.len() - n_inner);
            training.sort_unstable();
            inner.sort_unstable();
        }
    }

    let records = prepared.table.records();
    let mut weights: BTreeMap<&str, usize> = BTreeMap::new();
    for &i in &training {
        *weights.entry(records[i].target_id.as_str()).or_default() += 1;
    }
    let standardizer = FeatureStandardizer::fit_weighted(
        weights
            .iter()
            .map(|(id, &w)| (prepared.cache.targets[*id].psc.as_slice(), w)),
    )?;
    let fit_set = encode(prepared, &training, &standardizer)?;
    let inner_set = encode(prepared, &inner, &standardizer)?;

    let k = cfg.train.resolved_k(fit_set.len());
    let mut model = DtiModel::new(
        &cfg.model,
        cfg.features.n_bits,
        k,
        standardizer,
        derive_seed(seed, fold, "init"),
    )?;
    let mut train_cfg = cfg.train.clone();
    train_cfg.seed = derive_seed(seed, fold, "shuffle");
    let monitor = (!inner_set.is_empty()).then_some(&inner_set);
    let outcome = train(&mut model, &fit_set, monitor, &train_cfg)?;
    Ok(CellResult {
        scheme: assignment.scheme,
        seed,
        fold,
        checkpoint: Checkpoint {
            model,
            config: cfg.echo(),
            seed,
            fold: Some(fold),
            epoch: outcome.best_epoch,
        },
        history: outcome.history,
    })
}

#[derive(Debug, Clone, Default)]
pub struct TrainSummary {
    pub trained: Vec<(SplitScheme, u64, usize)>,
    pub failures: Vec<CellFailure>,
}

#[derive(Serialize)]
struct CellConfig<'a> {
    config: serde_json::Value,
    variant: &'a str,
    scheme: SplitScheme,
    seed: u64,
    fold: usize,
    best_epoch: usize,
}

fn write_history(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in history {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Trains every (scheme, seed, fold) cell. A cell whose loss turns
/// non-finite is recorded as failed (`failure.json`) and skipped.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainSummary> {
    let prepared = load_prepared(cfg)?;
    let mut summary = TrainSummary::default();
    for &scheme in &cfg.split.schemes {
        for &seed in &cfg.split.seeds {
            let assignment = load_split(cfg, &prepared.table, scheme, seed)?;
            for fold in 0..assignment.n_folds {
                let dir = cell_dir(cfg, scheme, seed, fold);
                std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                let failure_path = dir.join("failure.json");
                log::info!("training {} {scheme} seed {seed} fold {fold}", cfg.model.variant.name());
                match run_cell(cfg, &prepared, &assignment, fold) {
                    Ok(cell) => {
                        cell.checkpoint.save(&dir.join("checkpoint.bin"))?;
                        write_history(&dir.join("history.csv"), &cell.history)?;
                        write_json(
                            &dir.join("config.json"),
                            &CellConfig {
                                config: cfg.echo(),
                                variant: cfg.model.variant.name(),
                                scheme,
                                seed,
                                fold,
                                best_epoch: cell.checkpoint.epoch,
                            },
                        )?;
                        if failure_path.exists() {
                            std::fs::remove_file(&failure_path).map_err(|e| Error::io(&failure_path, e))?;
                        }
                        summary.trained.push((scheme, seed, fold));
                    }
                    Err(e @ Error::NonFinite { .. }) => {
                        log::warn!("cell {scheme}/seed{seed}/fold{fold} failed: {e}");
                        let failure = CellFailure {
                            scheme,
                            seed,
                            fold,
                            error: e.to_string(),
                        };
                        write_json(&failure_path, &failure)?;
                        summary.failures.push(failure);
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub config: serde_json::Value,
    pub dataset: String,
    pub model: String,
    pub reports: Vec<MetricReport>,
    pub failed_cells: Vec<CellFailure>,
}

#[derive(Serialize)]
struct PredictionRow<'a> {
    compound_id: &'a str,
    target_id: &'a str,
    y: f64,
    y_hat: f64,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    dataset: &'a str,
    split: &'a str,
    model: &'a str,
    metric: &'a str,
    mean: f64,
    std: f64,
}

const METRICS: [&str; 4] = ["rmse", "ci", "r2", "r"];

fn cell_metrics(pred: &[f64], labels: &[f64]) -> Result<[Option<f64>; 4]> {
    Ok([
        Some(rmse(pred, labels)?),
        concordance_index_fast(pred, labels).ok(),
        pearson_r2(pred, labels).ok(),
        pearson_r(pred, labels).ok(),
    ])
}

/// Scores every trained cell on its validation fold, writes per-cell
/// prediction dumps and the aggregated `metrics.json` / `summary.csv`.
pub fn cmd_evaluate(cfg: &ExperimentConfig) -> Result<EvaluationReport> {
    let prepared = load_prepared(cfg)?;
    let records = prepared.table.records();
    let mut cells: BTreeMap<(SplitScheme, usize), Vec<MetricCell>> = BTreeMap::new();
    let mut failed = Vec::new();
    for &scheme in &cfg.split.schemes {
        for &seed in &cfg.split.seeds {
            let assignment = load_split(cfg, &prepared.table, scheme, seed)?;
            for fold in 0..assignment.n_folds {
                let dir = cell_dir(cfg, scheme, seed, fold);
                let failure_path = dir.join("failure.json");
                if failure_path.is_file() {
                    let text = std::fs::read_to_string(&failure_path).map_err(|e| Error::io(&failure_path, e))?;
                    failed.push(serde_json::from_str(&text)?);
                    continue;
                }
                let ckpt_path = dir.join("checkpoint.bin");
                if !ckpt_path.is_file() {
                    return Err(Error::Data(format!(
                        "checkpoint {} is missing; run `dti train` first",
                        ckpt_path.display()
                    )));
                }
                let ckpt = Checkpoint::load(&ckpt_path)?;
                let validation = assignment.validation_indices(fold);
                let set = encode(&prepared, &validation, &ckpt.model.standardizer)?;
                let pred = ckpt.model.predict(&set)?;
                let labels = set.labels();

                let mut w = csv::Writer::from_path(dir.join("predictions.csv"))?;
                for (&i, (&y, &y_hat)) in validation.iter().zip(labels.iter().zip(&pred)) {
                    w.serialize(PredictionRow {
                        compound_id: &records[i].compound_id,
                        target_id: &records[i].target_id,
                        y,
                        y_hat,
                    })?;
                }
                w.flush().map_err(|e| Error::io(&dir, e))?;

                let n_metrics = if cfg.output.report_r {
                    METRICS.len()
                } else {
                    METRICS.len() - 1
                };
                for (m, value) in cell_metrics(&pred, &labels)?.into_iter().enumerate().take(n_metrics) {
                    match value {
                        Some(value) => cells
                            .entry((scheme, m))
                            .or_default()
                            .push(MetricCell { fold, seed, value }),
                        None => log::warn!("{} undefined for {scheme} seed {seed} fold {fold}", METRICS[m]),
                    }
                }
            }
        }
    }
    let reports: Vec<MetricReport> = cells
        .iter()
        .map(|(&(scheme, m), c)| aggregate(METRICS[m], scheme.name(), c))
        .collect();
    let report = EvaluationReport {
        config: cfg.echo(),
        dataset: cfg.dataset_name(),
        model: cfg.model.variant.name().to_string(),
        reports,
        failed_cells: failed,
    };
    let base = cfg.output.dir.join(cfg.model.variant.name());
    write_json(&base.join("metrics.json"), &report)?;
    let mut w = csv::Writer::from_path(base.join("summary.csv"))?;
    for r in &report.reports {
        w.serialize(SummaryRow {
            dataset: &report.dataset,
            split: &r.scheme,
            model: &report.model,
            metric: &r.metric,
            mean: r.mean,
            std: r.std,
        })?;
    }
    w.flush().map_err(|e| Error::io(&base, e))?;
    Ok(report)
}

/// Writes a synthetic interaction table as CSV.
pub fn cmd_synth_data(cfg: &SynthConfig, path: &Path) -> Result<InteractionTable> {
    let table = synth_table(cfg)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    table.save(path)?;
    Ok(table)
}

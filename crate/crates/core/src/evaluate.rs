//! Quality gating, N-fold cross-validation and the model-family comparison.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::dataset::Dataset;
use crate::dataio::PorosityTarget;
use crate::error::{Error, Result};
use crate::features::ModelKind;
use crate::regress::Algorithm;
use crate::{Hyperparameters, TrainedModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    All,
    Pass,
    Flag,
    Fail,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::All, Category::Pass, Category::Flag, Category::Fail];

    pub fn name(self) -> &'static str {
        match self {
            Category::All => "all",
            Category::Pass => "pass",
            Category::Flag => "flag",
            Category::Fail => "fail",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown category '{s}'")))
    }
}

/// Maximum-pore-diameter thresholds in µm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityGate {
    pub pass_max_um: f64,
    pub fail_min_um: f64,
}

impl Default for QualityGate {
    fn default() -> Self {
        Self { pass_max_um: 97.10, fail_min_um: 220.40 }
    }
}

impl QualityGate {
    pub fn new(pass_max_um: f64, fail_min_um: f64) -> Result<Self> {
        if !(pass_max_um > 0.0 && pass_max_um < fail_min_um) || !fail_min_um.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "quality gate needs 0 < pass ({pass_max_um}) < fail ({fail_min_um})"
            )));
        }
        Ok(Self { pass_max_um, fail_min_um })
    }

    /// `d < pass` is pass, `pass <= d < fail` is flag, `d >= fail` is fail.
    pub fn classify(&self, max_pore_um: f64) -> Result<Category> {
        if max_pore_um.is_nan() || max_pore_um < 0.0 {
            return Err(Error::NegativeDiameter(max_pore_um));
        }
        Ok(if max_pore_um < self.pass_max_um {
            Category::Pass
        } else if max_pore_um < self.fail_min_um {
            Category::Flag
        } else {
            Category::Fail
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles `0..n_samples` with `seed` and cuts it into `n_folds` test sets
/// whose sizes differ by at most one (larger folds first).
pub fn kfold_split(n_samples: usize, n_folds: usize, seed: u64) -> Result<Vec<Fold>> {
    if n_folds < 2 || n_folds > n_samples {
        return Err(Error::FoldCount { n_folds, n_samples });
    }
    let mut order: Vec<usize> = (0..n_samples).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let base = n_samples / n_folds;
    let extra = n_samples % n_folds;
    let mut folds = Vec::with_capacity(n_folds);
    let mut start = 0;
    for f in 0..n_folds {
        let size = base + usize::from(f < extra);
        let mut test = order[start..start + size].to_vec();
        test.sort_unstable();
        let mut train: Vec<usize> = order[..start].iter().chain(&order[start + size..]).copied().collect();
        train.sort_unstable();
        folds.push(Fold { train, test });
        start += size;
    }
    Ok(folds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMetric {
    /// `|y - y'|`
    Absolute,
    /// `|y - y'| / sigma`
    Standard,
    /// `|y - y'| / y`
    Percentage,
}

impl ErrorMetric {
    pub fn name(self) -> &'static str {
        match self {
            ErrorMetric::Absolute => "absolute",
            ErrorMetric::Standard => "standard",
            ErrorMetric::Percentage => "percentage",
        }
    }

    pub fn eval(self, y: f64, y_pred: f64, sigma_pop: f64) -> Result<f64> {
        let abs = (y - y_pred).abs();
        match self {
            ErrorMetric::Absolute => Ok(abs),
            ErrorMetric::Standard => {
                if !(sigma_pop > 0.0) {
                    return Err(Error::MetricUndefined("standard error with zero target deviation"));
                }
                Ok(abs / sigma_pop)
            }
            ErrorMetric::Percentage => {
                if !(y > 0.0) {
                    return Err(Error::MetricUndefined("percentage error with non-positive target"));
                }
                Ok(abs / y)
            }
        }
    }
}

impl fmt::Display for ErrorMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorMetric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute" => Ok(ErrorMetric::Absolute),
            "standard" => Ok(ErrorMetric::Standard),
            "percentage" => Ok(ErrorMetric::Percentage),
            _ => Err(Error::InvalidParameter(format!("unknown metric '{s}'"))),
        }
    }
}

pub fn population_sdev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

pub trait Predictor: Send + Sync {
    fn predict(&self, x: &[f64]) -> Result<f64>;
}

/// Anything that can be fitted on one training fold.
pub trait Learner: Sync {
    fn fit(&self, x: &[Vec<f64>], y: &[f64]) -> Result<Box<dyn Predictor>>;
}

impl Predictor for TrainedModel {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        TrainedModel::predict(self, x)
    }
}

#[derive(Debug, Clone)]
pub struct AlgorithmLearner {
    pub algorithm: Algorithm,
    pub hyper: Hyperparameters,
}

impl Learner for AlgorithmLearner {
    fn fit(&self, x: &[Vec<f64>], y: &[f64]) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(TrainedModel::fit(self.algorithm, &self.hyper, x, y)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub n_folds: usize,
    pub metric: ErrorMetric,
    /// Mean test error of each fold.
    pub fold_errors: Vec<f64>,
    pub fold_sizes: Vec<usize>,
    /// Mean of `fold_errors`.
    pub mean_error: f64,
}

/// Fits on each training split and scores the held-out fold. Each fold's
/// error is the mean over its test samples; the report averages folds.
pub fn cross_validate(
    rows: &[Vec<f64>],
    targets: &[f64],
    learner: &dyn Learner,
    n_folds: usize,
    metric: ErrorMetric,
    seed: u64,
) -> Result<FoldReport> {
    if rows.len() != targets.len() {
        return Err(Error::DimensionMismatch { expected: rows.len(), got: targets.len() });
    }
    let folds = kfold_split(rows.len(), n_folds, seed)?;
    let mut fold_errors = Vec::with_capacity(n_folds);
    let mut fold_sizes = Vec::with_capacity(n_folds);
    for (fi, fold) in folds.iter().enumerate() {
        let wrap = |e: Error| Error::Fold { fold: fi, source: Box::new(e) };
        let train_x: Vec<Vec<f64>> = fold.train.iter().map(|&i| rows[i].clone()).collect();
        let train_y: Vec<f64> = fold.train.iter().map(|&i| targets[i]).collect();
        let sigma = population_sdev(&train_y);
        let model = learner.fit(&train_x, &train_y).map_err(wrap)?;
        let mut total = 0.0;
        for &i in &fold.test {
            let pred = model.predict(&rows[i]).map_err(wrap)?;
            total += metric.eval(targets[i], pred, sigma).map_err(wrap)?;
        }
        fold_errors.push(total / fold.test.len() as f64);
        fold_sizes.push(fold.test.len());
    }
    let mean_error = fold_errors.iter().sum::<f64>() / fold_errors.len() as f64;
    Ok(FoldReport { n_folds, metric, fold_errors, fold_sizes, mean_error })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonConfig {
    pub folds: usize,
    pub metric: ErrorMetric,
    pub seed: u64,
    pub gate: QualityGate,
    pub categories: Vec<Category>,
    pub models: Vec<ModelKind>,
    pub algorithms: Vec<Algorithm>,
    pub targets: Vec<PorosityTarget>,
    pub hyper: Hyperparameters,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            metric: ErrorMetric::Percentage,
            seed: 0,
            gate: QualityGate::default(),
            categories: Category::ALL.to_vec(),
            models: ModelKind::ALL.to_vec(),
            algorithms: Algorithm::ALL.to_vec(),
            targets: PorosityTarget::ALL.to_vec(),
            hyper: Hyperparameters::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    InsufficientData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCell {
    pub category: Category,
    pub model: ModelKind,
    pub algorithm: Algorithm,
    pub target: PorosityTarget,
    pub n_samples: usize,
    pub status: CellStatus,
    pub error: Option<f64>,
    pub fold_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonMatrix {
    pub metric: ErrorMetric,
    pub folds: usize,
    pub seed: u64,
    pub cells: Vec<ComparisonCell>,
}

impl ComparisonMatrix {
    pub fn get(&self, category: Category, model: ModelKind, algorithm: Algorithm, target: PorosityTarget) -> Option<&ComparisonCell> {
        self.cells
            .iter()
            .find(|c| c.category == category && c.model == model && c.algorithm == algorithm && c.target == target)
    }

    /// Long format: `category,model,algorithm,target,error,n_samples`; the
    /// error field is empty for insufficient-data cells.
    pub fn write_csv<W: Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["category", "model", "algorithm", "target", "error", "n_samples"])?;
        for c in &self.cells {
            w.write_record([
                c.category.name().to_string(),
                c.model.name().to_string(),
                c.algorithm.name().to_string(),
                c.target.name().to_string(),
                c.error.map(|e| e.to_string()).unwrap_or_default(),
                c.n_samples.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn category_members(dataset: &Dataset, gate: &QualityGate, category: Category) -> Result<Vec<usize>> {
    let mut idx = Vec::new();
    for (i, s) in dataset.samples.iter().enumerate() {
        if category == Category::All || gate.classify(s.porosity.max_d)? == category {
            idx.push(i);
        }
    }
    Ok(idx)
}

/// Runs every (category, model, algorithm, target) cell. All cells within a
/// category share the fold partition drawn from `config.seed`.
pub fn run_comparison(dataset: &Dataset, config: &ComparisonConfig) -> Result<ComparisonMatrix> {
    let mut jobs = Vec::new();
    for &category in &config.categories {
        let members = category_members(dataset, &config.gate, category)?;
        for &model in &config.models {
            for &algorithm in &config.algorithms {
                for &target in &config.targets {
                    jobs.push((category, members.clone(), model, algorithm, target));
                }
            }
        }
    }
    let cells = jobs
        .into_par_iter()
        .map(|(category, members, model, algorithm, target)| {
            let n_samples = members.len();
            let mut cell = ComparisonCell {
                category,
                model,
                algorithm,
                target,
                n_samples,
                status: CellStatus::InsufficientData,
                error: None,
                fold_errors: Vec::new(),
            };
            if n_samples < config.folds.max(2) {
                return Ok(cell);
            }
            let rows: Vec<Vec<f64>> = members.iter().map(|&i| dataset.samples[i].features(model).to_vec()).collect();
            let ys: Vec<f64> = members.iter().map(|&i| dataset.samples[i].porosity.get(target)).collect();
            let learner = AlgorithmLearner { algorithm, hyper: config.hyper.clone() };
            let report = cross_validate(&rows, &ys, &learner, config.folds, config.metric, config.seed)?;
            log::debug!("{category}/{model}/{algorithm}/{target}: {:.5}", report.mean_error);
            cell.status = CellStatus::Ok;
            cell.error = Some(report.mean_error);
            cell.fold_errors = report.fold_errors;
            Ok(cell)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonMatrix { metric: config.metric, folds: config.folds, seed: config.seed, cells })
}

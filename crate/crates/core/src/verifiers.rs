//! Scoring systems: the baseline DTW verifier, local- and global-threshold
//! classifiers, a feature-difference classifier shell, tanh score
//! normalization, weighted fusion, and their fitting procedures.
//!
//! Every verifier emits scores in [0,1] with the artifact-wide polarity
//! higher = more likely genuine. The global-threshold formula natively
//! assigns 1 to forgery-like distances, so its output is flipped at the
//! emission boundary.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::alignment::{dtw, AlignmentError, LocalMetric, Series};
use crate::evaluation::{compute_eer, EvalError};
use crate::features::{
    feature_difference, global_features, time_functions, Channel, FeatureError, FeatureSet,
    GlobalFeatureVector,
};
use crate::preprocess::{
    normalize_minmax_centered, normalize_symmetric, remove_zero_pressure, PreprocessError,
};
use crate::sigdata::{Signature, Truth, WritingInput};

#[derive(Debug, Error)]
pub enum VerifierError {
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("scale * f_th must exceed g_th (got scale={scale}, f_th={f_th}, g_th={g_th})")]
    InvalidThresholds { g_th: f64, f_th: f64, scale: f64 },
    #[error("forgery median {forgery_median} must exceed genuine minimum {genuine_min}")]
    DegenerateGroup { genuine_min: f64, forgery_median: f64 },
    #[error("no {class} comparisons for {input} input")]
    EmptyGroup {
        input: WritingInput,
        class: &'static str,
    },
    #[error("no fitted statistics for {input} input")]
    UnknownGroup { input: WritingInput },
    #[error("need at least 2 reference signatures, found {found}")]
    TooFewReferences { found: usize },
    #[error("sigma must be positive, got {0}")]
    BadSigma(f64),
    #[error("invalid weights: {0}")]
    BadWeights(String),
    #[error("{left} scores for {right} weights")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 score streams, found {found}")]
    TooFewStreams { found: usize },
    #[error("cannot aggregate an empty score list")]
    EmptyAggregation,
}

// ---------------------------------------------------------------------------
// score normalization and fusion

/// Location/scale pair for tanh score normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TanhParams {
    pub mu: f64,
    pub sigma: f64,
}

impl TanhParams {
    pub fn new(mu: f64, sigma: f64) -> Result<TanhParams, VerifierError> {
        if !(sigma > 0.0) {
            return Err(VerifierError::BadSigma(sigma));
        }
        Ok(TanhParams { mu, sigma })
    }
}

/// Tanh-estimator normalization onto (0,1):
/// 0.5 * (tanh(0.01 * (score - mu) / sigma) + 1). Strictly increasing.
pub fn tanh_normalize(score: f64, params: &TanhParams) -> f64 {
    0.5 * ((0.01 * (score - params.mu) / params.sigma).tanh() + 1.0)
}

/// Per-stream tanh parameters plus convex fusion weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionModel {
    streams: Vec<TanhParams>,
    weights: Vec<f64>,
}

impl FusionModel {
    pub fn new(streams: Vec<TanhParams>, weights: Vec<f64>) -> Result<FusionModel, VerifierError> {
        if streams.len() != weights.len() {
            return Err(VerifierError::LengthMismatch {
                left: streams.len(),
                right: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(VerifierError::BadWeights(
                "weights must be non-negative".to_string(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(VerifierError::BadWeights(format!(
                "weights must sum to 1, got {sum}"
            )));
        }
        Ok(FusionModel { streams, weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn streams(&self) -> &[TanhParams] {
        &self.streams
    }

    /// Tanh-normalizes raw stream scores, then fuses them.
    pub fn fuse_raw(&self, raw_scores: &[f64]) -> Result<f64, VerifierError> {
        let normalized: Vec<f64> = raw_scores
            .iter()
            .zip(&self.streams)
            .map(|(s, p)| tanh_normalize(*s, p))
            .collect();
        weighted_fusion(&normalized, self)
    }
}

/// Convex combination of already-normalized scores; stays in [0,1].
pub fn weighted_fusion(scores: &[f64], model: &FusionModel) -> Result<f64, VerifierError> {
    if scores.len() != model.weights.len() {
        return Err(VerifierError::LengthMismatch {
            left: scores.len(),
            right: model.weights.len(),
        });
    }
    Ok(scores.iter().zip(&model.weights).map(|(s, w)| s * w).sum())
}

/// All weight vectors on the simplex with step 0.05, in lexicographic order.
pub(crate) fn weight_grid(streams: usize) -> Vec<Vec<f64>> {
    const UNITS: u32 = 20;
    fn recurse(parts_left: usize, units_left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<f64>>) {
        if parts_left == 1 {
            prefix.push(units_left);
            out.push(prefix.iter().map(|u| f64::from(*u) / f64::from(UNITS)).collect());
            prefix.pop();
            return;
        }
        for u in 0..=units_left {
            prefix.push(u);
            recurse(parts_left - 1, units_left - u, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    recurse(streams, UNITS, &mut Vec::new(), &mut out);
    out
}

fn split_by_truth(scores: &[f64], labels: &[Truth]) -> (Vec<f64>, Vec<f64>) {
    let mut genuine = Vec::new();
    let mut impostor = Vec::new();
    for (s, l) in scores.iter().zip(labels) {
        match l {
            Truth::Genuine => genuine.push(*s),
            Truth::Impostor => impostor.push(*s),
        }
    }
    (genuine, impostor)
}

/// Fits tanh parameters from each stream's genuine scores (mean, population
/// std) and picks fusion weights by exhaustive simplex search with step
/// 0.05, minimizing the EER of the fused dev scores. Ties keep the
/// lexicographically smallest weight vector.
pub fn fit_fusion_weights(
    dev_score_streams: &[Vec<f64>],
    labels: &[Truth],
) -> Result<FusionModel, VerifierError> {
    if dev_score_streams.len() < 2 {
        return Err(VerifierError::TooFewStreams {
            found: dev_score_streams.len(),
        });
    }
    for stream in dev_score_streams {
        if stream.len() != labels.len() {
            return Err(VerifierError::LengthMismatch {
                left: stream.len(),
                right: labels.len(),
            });
        }
    }

    let params: Vec<TanhParams> = dev_score_streams
        .iter()
        .map(|stream| {
            let genuine: Vec<f64> = stream
                .iter()
                .zip(labels)
                .filter(|(_, l)| **l == Truth::Genuine)
                .map(|(s, _)| *s)
                .collect();
            if genuine.is_empty() {
                return Err(VerifierError::Eval(EvalError::EmptyClass("genuine")));
            }
            let mu = genuine.iter().sum::<f64>() / genuine.len() as f64;
            let var =
                genuine.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / genuine.len() as f64;
            TanhParams::new(mu, var.sqrt().max(1e-9))
        })
        .collect::<Result<_, _>>()?;

    let normalized: Vec<Vec<f64>> = dev_score_streams
        .iter()
        .zip(&params)
        .map(|(stream, p)| stream.iter().map(|s| tanh_normalize(*s, p)).collect())
        .collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    for weights in weight_grid(dev_score_streams.len()) {
        let fused: Vec<f64> = (0..labels.len())
            .map(|k| {
                normalized
                    .iter()
                    .zip(&weights)
                    .map(|(stream, w)| stream[k] * w)
                    .sum()
            })
            .collect();
        let (genuine, impostor) = split_by_truth(&fused, labels);
        let eer = compute_eer(&genuine, &impostor)?.eer_percent;
        if best.as_ref().map_or(true, |(b, _)| eer < *b) {
            best = Some((eer, weights));
        }
    }
    let (_, weights) = best.expect("grid is never empty");
    FusionModel::new(params, weights)
}

// ---------------------------------------------------------------------------
// threshold models

/// Per-reference thresholds of the local-threshold classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalThresholdModel {
    pub g_th: f64,
    pub f_th: f64,
    pub scale: f64,
}

impl LocalThresholdModel {
    pub fn new(g_th: f64, f_th: f64, scale: f64) -> Result<LocalThresholdModel, VerifierError> {
        if !(scale > 0.0) || scale * f_th <= g_th {
            return Err(VerifierError::InvalidThresholds { g_th, f_th, scale });
        }
        Ok(LocalThresholdModel { g_th, f_th, scale })
    }
}

/// Local-threshold score:
/// (scale * f_th - d) / (scale * f_th - g_th), clamped to [0,1] for
/// emission. Strictly decreasing in the distance before clamping.
pub fn local_threshold_score(distance: f64, model: &LocalThresholdModel) -> f64 {
    let upper = model.scale * model.f_th;
    let raw = (upper - distance) / (upper - model.g_th);
    raw.clamp(0.0, 1.0)
}

/// Distance statistics of one (input, expected class) group pairing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupStats {
    pub genuine_min: f64,
    pub forgery_median: f64,
}

impl GroupStats {
    pub fn new(genuine_min: f64, forgery_median: f64) -> Result<GroupStats, VerifierError> {
        if forgery_median <= genuine_min {
            return Err(VerifierError::DegenerateGroup {
                genuine_min,
                forgery_median,
            });
        }
        Ok(GroupStats {
            genuine_min,
            forgery_median,
        })
    }
}

/// Fitted global thresholds, one statistics pair per writing input.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GlobalThresholdModel {
    pub stylus: Option<GroupStats>,
    pub finger: Option<GroupStats>,
}

impl GlobalThresholdModel {
    pub fn stats_for(&self, input: WritingInput) -> Result<&GroupStats, VerifierError> {
        match input {
            WritingInput::Stylus => self.stylus.as_ref(),
            WritingInput::Finger => self.finger.as_ref(),
        }
        .ok_or(VerifierError::UnknownGroup { input })
    }
}

/// The raw global-threshold formula:
/// 1 - (forgery_median - d) / (forgery_median - genuine_min), clamped to 0
/// below the genuine minimum and to 1 above the forgery median. Increasing
/// in the distance, so 1 means forgery-like.
pub fn global_threshold_raw(distance: f64, stats: &GroupStats) -> f64 {
    if distance < stats.genuine_min {
        return 0.0;
    }
    if distance > stats.forgery_median {
        return 1.0;
    }
    1.0 - (stats.forgery_median - distance) / (stats.forgery_median - stats.genuine_min)
}

/// Emitted global-threshold score: the raw formula flipped to the
/// higher-is-genuine polarity.
pub fn global_threshold_score(
    distance: f64,
    model: &GlobalThresholdModel,
    input: WritingInput,
) -> Result<f64, VerifierError> {
    Ok(1.0 - global_threshold_raw(distance, model.stats_for(input)?))
}

/// One dev comparison reduced to its distance and ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledDistance {
    pub distance: f64,
    pub truth: Truth,
}

/// One dev comparison with its writing input, for group statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupedDistance {
    pub distance: f64,
    pub input: WritingInput,
    pub truth: Truth,
}

/// Candidate multipliers for the forgery threshold, f_th = alpha * g_th.
pub const ALPHA_GRID: [f64; 6] = [1.5, 2.0, 2.5, 3.0, 4.0, 5.0];
/// Candidate scaling parameters.
pub const SCALE_GRID: [f64; 6] = [1.0, 1.25, 1.5, 2.0, 2.5, 3.0];

/// Floor applied to the genuine threshold so identical references cannot
/// produce a degenerate zero threshold.
pub const GENUINE_THRESHOLD_FLOOR: f64 = 1e-9;

/// Fits the local-threshold model from pre-computed reference-to-reference
/// distances: g_th is the mean of the k = min(3, count) smallest distances
/// (floored at `GENUINE_THRESHOLD_FLOOR`), and (alpha, scale) come from a
/// grid search minimizing dev EER, ties resolved toward the smallest alpha
/// then the smallest scale.
pub fn fit_local_thresholds_from_distances(
    pairwise_reference_distances: &[f64],
    dev_comparisons: &[LabeledDistance],
) -> Result<LocalThresholdModel, VerifierError> {
    if pairwise_reference_distances.is_empty() {
        return Err(VerifierError::TooFewReferences { found: 1 });
    }
    let mut dists = pairwise_reference_distances.to_vec();
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = dists.len().min(3);
    let g_th = (dists[..k].iter().sum::<f64>() / k as f64).max(GENUINE_THRESHOLD_FLOOR);

    let (genuine, impostor): (Vec<f64>, Vec<f64>) = {
        let scores: Vec<f64> = dev_comparisons.iter().map(|c| c.distance).collect();
        let labels: Vec<Truth> = dev_comparisons.iter().map(|c| c.truth).collect();
        split_by_truth(&scores, &labels)
    };

    let mut best: Option<(f64, LocalThresholdModel)> = None;
    for &alpha in &ALPHA_GRID {
        for &scale in &SCALE_GRID {
            let model = LocalThresholdModel::new(g_th, alpha * g_th, scale)?;
            let g_scores: Vec<f64> = genuine
                .iter()
                .map(|d| local_threshold_score(*d, &model))
                .collect();
            let i_scores: Vec<f64> = impostor
                .iter()
                .map(|d| local_threshold_score(*d, &model))
                .collect();
            let eer = compute_eer(&g_scores, &i_scores)?.eer_percent;
            if best.as_ref().map_or(true, |(b, _)| eer < *b) {
                best = Some((eer, model));
            }
        }
    }
    Ok(best.expect("grid is never empty").1)
}

/// Fits the local-threshold model from reference signatures, computing their
/// pairwise distances with [`threshold_distance`] over the centered
/// preprocessing chain.
pub fn fit_local_thresholds(
    references: &[Signature],
    dev_comparisons: &[LabeledDistance],
) -> Result<LocalThresholdModel, VerifierError> {
    if references.len() < 2 {
        return Err(VerifierError::TooFewReferences {
            found: references.len(),
        });
    }
    let preprocessed: Vec<Signature> = references
        .iter()
        .map(|r| apply_preprocess(PreprocessKind::Centered, r))
        .collect::<Result<_, _>>()?;
    let mut pairwise = Vec::new();
    for i in 0..preprocessed.len() {
        for j in i + 1..preprocessed.len() {
            pairwise.push(threshold_distance(&preprocessed[i], &preprocessed[j])?);
        }
    }
    fit_local_thresholds_from_distances(&pairwise, dev_comparisons)
}

fn median(sorted_values: &[f64]) -> f64 {
    let n = sorted_values.len();
    if n % 2 == 1 {
        sorted_values[n / 2]
    } else {
        (sorted_values[n / 2 - 1] + sorted_values[n / 2]) / 2.0
    }
}

/// Fits per-input group statistics: the minimum genuine distance and the
/// median forgery distance of each writing input present in the dev set.
pub fn fit_global_thresholds(
    dev_comparisons: &[GroupedDistance],
) -> Result<GlobalThresholdModel, VerifierError> {
    let mut model = GlobalThresholdModel::default();
    for input in [WritingInput::Stylus, WritingInput::Finger] {
        let group: Vec<&GroupedDistance> = dev_comparisons
            .iter()
            .filter(|c| c.input == input)
            .collect();
        if group.is_empty() {
            continue;
        }
        let genuine: Vec<f64> = group
            .iter()
            .filter(|c| c.truth == Truth::Genuine)
            .map(|c| c.distance)
            .collect();
        if genuine.is_empty() {
            return Err(VerifierError::EmptyGroup {
                input,
                class: "genuine",
            });
        }
        let mut forgery: Vec<f64> = group
            .iter()
            .filter(|c| c.truth == Truth::Impostor)
            .map(|c| c.distance)
            .collect();
        if forgery.is_empty() {
            return Err(VerifierError::EmptyGroup {
                input,
                class: "forgery",
            });
        }
        forgery.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let genuine_min = genuine.iter().fold(f64::INFINITY, |acc, &d| acc.min(d));
        let stats = GroupStats::new(genuine_min, median(&forgery))?;
        match input {
            WritingInput::Stylus => model.stylus = Some(stats),
            WritingInput::Finger => model.finger = Some(stats),
        }
    }
    Ok(model)
}

// ---------------------------------------------------------------------------
// reference aggregation

/// How to combine per-reference scores for one questioned signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    #[default]
    Mean,
    Max,
}

pub fn aggregate_reference_scores(
    per_reference: &[f64],
    mode: Aggregation,
) -> Result<f64, VerifierError> {
    if per_reference.is_empty() {
        return Err(VerifierError::EmptyAggregation);
    }
    Ok(match mode {
        Aggregation::Mean => per_reference.iter().sum::<f64>() / per_reference.len() as f64,
        Aggregation::Max => per_reference.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)),
    })
}

// ---------------------------------------------------------------------------
// diff-classifier shell

/// Binary scorer over a feature-difference vector. Implementations must
/// return scores in [0,1] with higher = more likely genuine, and must not
/// increase the score when any difference component grows.
pub trait DiffClassifier: Send + Sync {
    fn score(&self, diff: &GlobalFeatureVector) -> Result<f64, VerifierError>;
}

/// Reference classifier: a logistic on the weighted feature distance,
/// sigmoid(bias - w . diff). Non-negative weights keep the score maximal at
/// zero difference.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticDiffClassifier {
    weights: Vec<f64>,
    bias: f64,
}

impl LogisticDiffClassifier {
    pub fn new(weights: Vec<f64>, bias: f64) -> Result<LogisticDiffClassifier, VerifierError> {
        if weights.is_empty() {
            return Err(VerifierError::BadWeights("no weights".to_string()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(VerifierError::BadWeights(
                "diff weights must be non-negative".to_string(),
            ));
        }
        Ok(LogisticDiffClassifier { weights, bias })
    }

    /// Uniform weights 1/dim with the given bias.
    pub fn uniform(dim: usize, bias: f64) -> Result<LogisticDiffClassifier, VerifierError> {
        LogisticDiffClassifier::new(vec![1.0 / dim as f64; dim], bias)
    }
}

impl DiffClassifier for LogisticDiffClassifier {
    fn score(&self, diff: &GlobalFeatureVector) -> Result<f64, VerifierError> {
        if diff.len() != self.weights.len() {
            return Err(VerifierError::LengthMismatch {
                left: diff.len(),
                right: self.weights.len(),
            });
        }
        let distance: f64 = diff
            .values()
            .iter()
            .zip(&self.weights)
            .map(|(d, w)| d * w)
            .sum();
        Ok(1.0 / (1.0 + (distance - self.bias).exp()))
    }
}

// ---------------------------------------------------------------------------
// verifier pipelines

/// Preprocessing chain applied before scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreprocessKind {
    /// x, y to [-1,1]; pressure to [0,1] (all ones for finger input).
    Symmetric,
    /// Zero-pressure removal (stylus only), then min-max scaling to [0,1]
    /// and mean shift per channel.
    Centered,
    None,
}

pub fn apply_preprocess(kind: PreprocessKind, sig: &Signature) -> Result<Signature, VerifierError> {
    Ok(match kind {
        PreprocessKind::Symmetric => normalize_symmetric(sig),
        PreprocessKind::Centered => {
            let cleaned = if sig.meta().input == WritingInput::Stylus {
                remove_zero_pressure(sig)?
            } else {
                sig.clone()
            };
            normalize_minmax_centered(&cleaned)
        }
        PreprocessKind::None => sig.clone(),
    })
}

/// Length-normalized DTW distance over the (x, y, pressure) channels of two
/// already-preprocessed signatures. This is the distance behind both
/// threshold verifiers and their fitting.
pub fn threshold_distance(a: &Signature, b: &Signature) -> Result<f64, VerifierError> {
    let rows_of = |sig: &Signature| -> Vec<Vec<f64>> {
        sig.samples()
            .iter()
            .map(|s| vec![s.x, s.y, s.pressure])
            .collect()
    };
    let sa = Series::from_rows(&rows_of(a))?;
    let sb = Series::from_rows(&rows_of(b))?;
    Ok(dtw(&sa, &sb, LocalMetric::Euclidean)?.normalized_score)
}

const BASELINE_CHANNELS: [Channel; 6] = [
    Channel::X,
    Channel::Y,
    Channel::Dx,
    Channel::Dy,
    Channel::Ddx,
    Channel::Ddy,
];

/// Baseline DTW similarity between two preprocessed signatures: DTW over the
/// pair-z-normalized (x, y, dx, dy, ddx, ddy) channels, with the
/// length-normalized distance mapped through exp(-d) onto (0,1].
pub fn baseline_dtw_score(
    reference: &Signature,
    questioned: &Signature,
) -> Result<f64, VerifierError> {
    let rows_r = time_functions(reference)?.rows(&BASELINE_CHANNELS);
    let rows_q = time_functions(questioned)?.rows(&BASELINE_CHANNELS);

    // z-normalize each channel over the pooled pair
    let dims = BASELINE_CHANNELS.len();
    let total = (rows_r.len() + rows_q.len()) as f64;
    let mut mean = vec![0.0; dims];
    for row in rows_r.iter().chain(&rows_q) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / total;
        }
    }
    let mut var = vec![0.0; dims];
    for row in rows_r.iter().chain(&rows_q) {
        for k in 0..dims {
            var[k] += (row[k] - mean[k]) * (row[k] - mean[k]) / total;
        }
    }
    let std: Vec<f64> = var
        .iter()
        .map(|v| if *v > 0.0 { v.sqrt() } else { 1.0 })
        .collect();
    let normalize = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
        rows.iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(k, v)| (v - mean[k]) / std[k])
                    .collect()
            })
            .collect()
    };

    let sr = Series::from_rows(&normalize(&rows_r))?;
    let sq = Series::from_rows(&normalize(&rows_q))?;
    let distance = dtw(&sr, &sq, LocalMetric::Euclidean)?.normalized_score;
    Ok((-distance).exp())
}

/// Which scoring system a pipeline runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifierKind {
    BaselineDtw,
    LocalThreshold,
    GlobalThreshold,
    FeatureDiff,
    Fused,
}

impl VerifierKind {
    fn default_preprocess(self) -> PreprocessKind {
        match self {
            VerifierKind::BaselineDtw | VerifierKind::FeatureDiff | VerifierKind::Fused => {
                PreprocessKind::Symmetric
            }
            VerifierKind::LocalThreshold | VerifierKind::GlobalThreshold => {
                PreprocessKind::Centered
            }
        }
    }
}

/// A fully resolved scoring pipeline, parsed from a key-value config file.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub verifier: VerifierKind,
    pub preprocess: Option<PreprocessKind>,
    pub feature_set: FeatureSet,
    pub aggregate: Aggregation,
    pub local: Option<LocalThresholdModel>,
    pub global: Option<GlobalThresholdModel>,
    pub diff: Option<LogisticDiffClassifier>,
    pub fusion: Option<FusionModel>,
}

impl PipelineConfig {
    /// The parameter-free baseline DTW pipeline.
    pub fn baseline() -> PipelineConfig {
        PipelineConfig {
            verifier: VerifierKind::BaselineDtw,
            preprocess: None,
            feature_set: FeatureSet::Extended,
            aggregate: Aggregation::Mean,
            local: None,
            global: None,
            diff: None,
            fusion: None,
        }
    }

    fn preprocess_for(&self, verifier: VerifierKind) -> PreprocessKind {
        self.preprocess.unwrap_or(verifier.default_preprocess())
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value `{value}` for `{key}`")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error("missing key `{key}` required by verifier `{verifier}`")]
    MissingKey {
        key: &'static str,
        verifier: &'static str,
    },
    #[error("invalid model parameters: {0}")]
    Model(#[from] VerifierError),
}

/// Parses a pipeline config file. Keys, one `key = value` per line
/// (`#` comments ignored):
///
/// * `verifier` (required): `baseline-dtw`, `local-threshold`,
///   `global-threshold`, `feature-diff`, or `fused`
/// * `preprocess`: `symmetric`, `centered`, or `none` (defaults per verifier)
/// * `feature-set`: `minimum` or `extended` (default `extended`)
/// * `aggregate`: `mean` or `max` (default `mean`)
/// * `g-th`, `f-th`, `scale`: local-threshold parameters
/// * `stylus-genuine-min`, `stylus-forgery-median`, `finger-genuine-min`,
///   `finger-forgery-median`: global-threshold group statistics
/// * `diff-weights` (comma-separated, default uniform), `diff-bias`
///   (default 2.0): feature-diff classifier parameters
/// * `weights`, `tanh-mu`, `tanh-sigma` (comma-separated pairs): fused
///   pipeline parameters over the (baseline-dtw, feature-diff) streams
pub fn parse_pipeline_file(path: &Path) -> Result<PipelineConfig, PipelineError> {
    let content = fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_pipeline_str(&content)
}

pub fn parse_pipeline_str(content: &str) -> Result<PipelineConfig, PipelineError> {
    let mut verifier = None;
    let mut preprocess = None;
    let mut feature_set = FeatureSet::Extended;
    let mut aggregate = Aggregation::Mean;
    let mut g_th = None;
    let mut f_th = None;
    let mut scale = None;
    let mut group_keys: [Option<f64>; 4] = [None; 4];
    let mut diff_weights: Option<Vec<f64>> = None;
    let mut diff_bias = 2.0;
    let mut weights: Option<Vec<f64>> = None;
    let mut tanh_mu: Option<Vec<f64>> = None;
    let mut tanh_sigma: Option<Vec<f64>> = None;

    for (idx, raw) in content.lines().enumerate() {
        let line = idx + 1;
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let (key, value) = text.split_once('=').ok_or_else(|| PipelineError::Syntax {
            line,
            text: text.to_string(),
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad = || PipelineError::BadValue {
            line,
            key: key.to_string(),
            value: value.to_string(),
        };
        let float = |v: &str| v.parse::<f64>().map_err(|_| bad());
        let floats = |v: &str| -> Result<Vec<f64>, PipelineError> {
            v.split(',').map(|p| float(p.trim())).collect()
        };
        match key {
            "verifier" => {
                verifier = Some(match value {
                    "baseline-dtw" => VerifierKind::BaselineDtw,
                    "local-threshold" => VerifierKind::LocalThreshold,
                    "global-threshold" => VerifierKind::GlobalThreshold,
                    "feature-diff" => VerifierKind::FeatureDiff,
                    "fused" => VerifierKind::Fused,
                    _ => return Err(bad()),
                })
            }
            "preprocess" => {
                preprocess = Some(match value {
                    "symmetric" => PreprocessKind::Symmetric,
                    "centered" => PreprocessKind::Centered,
                    "none" => PreprocessKind::None,
                    _ => return Err(bad()),
                })
            }
            "feature-set" => {
                feature_set = match value {
                    "minimum" => FeatureSet::Minimum,
                    "extended" => FeatureSet::Extended,
                    _ => return Err(bad()),
                }
            }
            "aggregate" => {
                aggregate = match value {
                    "mean" => Aggregation::Mean,
                    "max" => Aggregation::Max,
                    _ => return Err(bad()),
                }
            }
            "g-th" => g_th = Some(float(value)?),
            "f-th" => f_th = Some(float(value)?),
            "scale" => scale = Some(float(value)?),
            "stylus-genuine-min" => group_keys[0] = Some(float(value)?),
            "stylus-forgery-median" => group_keys[1] = Some(float(value)?),
            "finger-genuine-min" => group_keys[2] = Some(float(value)?),
            "finger-forgery-median" => group_keys[3] = Some(float(value)?),
            "diff-weights" => diff_weights = Some(floats(value)?),
            "diff-bias" => diff_bias = float(value)?,
            "weights" => weights = Some(floats(value)?),
            "tanh-mu" => tanh_mu = Some(floats(value)?),
            "tanh-sigma" => tanh_sigma = Some(floats(value)?),
            _ => {
                return Err(PipelineError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
    }

    let verifier = verifier.ok_or(PipelineError::MissingKey {
        key: "verifier",
        verifier: "(any)",
    })?;

    let mut config = PipelineConfig {
        verifier,
        preprocess,
        feature_set,
        aggregate,
        local: None,
        global: None,
        diff: None,
        fusion: None,
    };

    let feature_dim = match feature_set {
        FeatureSet::Minimum => 3,
        FeatureSet::Extended => 12,
    };
    let build_diff = |weights: &Option<Vec<f64>>| -> Result<LogisticDiffClassifier, PipelineError> {
        Ok(match weights {
            Some(w) => LogisticDiffClassifier::new(w.clone(), diff_bias)?,
            None => LogisticDiffClassifier::uniform(feature_dim, diff_bias)?,
        })
    };

    match verifier {
        VerifierKind::BaselineDtw => {}
        VerifierKind::LocalThreshold => {
            let need = |v: Option<f64>, key: &'static str| {
                v.ok_or(PipelineError::MissingKey {
                    key,
                    verifier: "local-threshold",
                })
            };
            config.local = Some(LocalThresholdModel::new(
                need(g_th, "g-th")?,
                need(f_th, "f-th")?,
                need(scale, "scale")?,
            )?);
        }
        VerifierKind::GlobalThreshold => {
            let mut model = GlobalThresholdModel::default();
            if let (Some(gmin), Some(fmed)) = (group_keys[0], group_keys[1]) {
                model.stylus = Some(GroupStats::new(gmin, fmed)?);
            }
            if let (Some(gmin), Some(fmed)) = (group_keys[2], group_keys[3]) {
                model.finger = Some(GroupStats::new(gmin, fmed)?);
            }
            if model.stylus.is_none() && model.finger.is_none() {
                return Err(PipelineError::MissingKey {
                    key: "stylus-genuine-min/stylus-forgery-median",
                    verifier: "global-threshold",
                });
            }
            config.global = Some(model);
        }
        VerifierKind::FeatureDiff => {
            config.diff = Some(build_diff(&diff_weights)?);
        }
        VerifierKind::Fused => {
            let w = weights.ok_or(PipelineError::MissingKey {
                key: "weights",
                verifier: "fused",
            })?;
            let mu = tanh_mu.ok_or(PipelineError::MissingKey {
                key: "tanh-mu",
                verifier: "fused",
            })?;
            let sigma = tanh_sigma.ok_or(PipelineError::MissingKey {
                key: "tanh-sigma",
                verifier: "fused",
            })?;
            let streams: Vec<TanhParams> = mu
                .iter()
                .zip(&sigma)
                .map(|(m, s)| TanhParams::new(*m, *s))
                .collect::<Result<_, _>>()?;
            config.fusion = Some(FusionModel::new(streams, w)?);
            config.diff = Some(build_diff(&diff_weights)?);
        }
    }
    Ok(config)
}

fn feature_diff_score(
    config: &PipelineConfig,
    reference: &Signature,
    questioned: &Signature,
) -> Result<f64, VerifierError> {
    let kind = config.preprocess_for(VerifierKind::FeatureDiff);
    let r = apply_preprocess(kind, reference)?;
    let q = apply_preprocess(kind, questioned)?;
    let fr = global_features(&r, config.feature_set)?;
    let fq = global_features(&q, config.feature_set)?;
    let diff = feature_difference(&fr, &fq)?;
    let classifier = config
        .diff
        .as_ref()
        .expect("feature-diff pipeline carries a classifier");
    classifier.score(&diff)
}

/// Scores one (reference, questioned) comparison with the configured
/// pipeline. Deterministic for fixed inputs and configuration.
pub fn score_comparison(
    config: &PipelineConfig,
    reference: &Signature,
    questioned: &Signature,
) -> Result<f64, VerifierError> {
    match config.verifier {
        VerifierKind::BaselineDtw => {
            let kind = config.preprocess_for(VerifierKind::BaselineDtw);
            let r = apply_preprocess(kind, reference)?;
            let q = apply_preprocess(kind, questioned)?;
            baseline_dtw_score(&r, &q)
        }
        VerifierKind::LocalThreshold => {
            let kind = config.preprocess_for(VerifierKind::LocalThreshold);
            let r = apply_preprocess(kind, reference)?;
            let q = apply_preprocess(kind, questioned)?;
            let d = threshold_distance(&r, &q)?;
            let model = config.local.as_ref().expect("local model present");
            Ok(local_threshold_score(d, model))
        }
        VerifierKind::GlobalThreshold => {
            let kind = config.preprocess_for(VerifierKind::GlobalThreshold);
            let r = apply_preprocess(kind, reference)?;
            let q = apply_preprocess(kind, questioned)?;
            let d = threshold_distance(&r, &q)?;
            let model = config.global.as_ref().expect("global model present");
            global_threshold_score(d, model, reference.meta().input)
        }
        VerifierKind::FeatureDiff => feature_diff_score(config, reference, questioned),
        VerifierKind::Fused => {
            let kind = config.preprocess_for(VerifierKind::Fused);
            let r = apply_preprocess(kind, reference)?;
            let q = apply_preprocess(kind, questioned)?;
            let s_baseline = baseline_dtw_score(&r, &q)?;
            let s_diff = feature_diff_score(config, reference, questioned)?;
            let fusion = config.fusion.as_ref().expect("fusion model present");
            fusion.fuse_raw(&[s_baseline, s_diff])
        }
    }
}

/// Scores a questioned signature against several enrolled references and
/// aggregates per the configured mode.
pub fn score_multi_reference(
    config: &PipelineConfig,
    references: &[Signature],
    questioned: &Signature,
) -> Result<f64, VerifierError> {
    let scores: Vec<f64> = references
        .iter()
        .map(|r| score_comparison(config, r, questioned))
        .collect::<Result<_, _>>()?;
    aggregate_reference_scores(&scores, config.aggregate)
}

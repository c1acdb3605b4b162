//! Protocol evaluation: FAR/FRR curves, equal error rate, per-task reports,
//! the comparison-protocol runner, and points-based team ranking.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::sigdata::{parse_signature_file, ComparisonTask, LabelRecord, ScoreRecord, Truth};
use crate::verifiers::{score_comparison, PipelineConfig, VerifierError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no {0} scores provided")]
    EmptyClass(&'static str),
    #[error("score/label id sets differ; missing: {missing:?}, extra: {extra:?}")]
    IdMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },
}

#[derive(Debug, Error)]
#[error("comparison `{comparison_id}` failed: {source}")]
pub struct ProtocolError {
    pub comparison_id: String,
    #[source]
    pub source: ProtocolErrorKind,
}

#[derive(Debug, Error)]
pub enum ProtocolErrorKind {
    #[error(transparent)]
    Data(#[from] crate::sigdata::DataError),
    #[error(transparent)]
    Verifier(#[from] VerifierError),
}

/// Benchmark task, by scenario/input pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Task {
    Task1,
    Task2,
    Task3,
}

impl Task {
    pub fn from_number(n: u8) -> Option<Task> {
        match n {
            1 => Some(Task::Task1),
            2 => Some(Task::Task2),
            3 => Some(Task::Task3),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Task::Task1 => 1,
            Task::Task2 => 2,
            Task::Task3 => 3,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// One evaluated operating point: fraction of impostor scores >= threshold
/// (FAR) and of genuine scores < threshold (FRR).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
}

/// The FAR/FRR crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EerPoint {
    /// Equal error rate in percent, in [0, 100].
    pub eer_percent: f64,
    pub threshold: f64,
}

/// Evaluation outcome of one task.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub task: Task,
    pub eer_percent: f64,
    pub threshold_at_eer: f64,
    pub curve: Vec<CurvePoint>,
    pub n_genuine: usize,
    pub n_impostor: usize,
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Count of elements >= threshold in an ascending slice.
fn count_ge(sorted_values: &[f64], threshold: f64) -> usize {
    sorted_values.len() - sorted_values.partition_point(|v| *v < threshold)
}

/// Count of elements < threshold in an ascending slice.
fn count_lt(sorted_values: &[f64], threshold: f64) -> usize {
    sorted_values.partition_point(|v| *v < threshold)
}

/// FAR/FRR evaluated at every distinct score, ascending. Scores follow the
/// higher-is-more-genuine polarity: a threshold accepts scores >= itself.
pub fn far_frr_curve(
    genuine_scores: &[f64],
    impostor_scores: &[f64],
) -> Result<Vec<CurvePoint>, EvalError> {
    if genuine_scores.is_empty() {
        return Err(EvalError::EmptyClass("genuine"));
    }
    if impostor_scores.is_empty() {
        return Err(EvalError::EmptyClass("impostor"));
    }
    let g = sorted(genuine_scores);
    let i = sorted(impostor_scores);
    let mut thresholds: Vec<f64> = g.iter().chain(i.iter()).copied().collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();
    Ok(thresholds
        .into_iter()
        .map(|threshold| CurvePoint {
            threshold,
            far: count_ge(&i, threshold) as f64 / i.len() as f64,
            frr: count_lt(&g, threshold) as f64 / g.len() as f64,
        })
        .collect())
}

/// Equal error rate by sweeping thresholds over the union of scores.
///
/// FAR is non-increasing and FRR non-decreasing in the threshold, so their
/// difference crosses zero once; when no evaluated threshold hits the
/// crossing exactly, both rates are linearly interpolated between the
/// bracketing thresholds. Above the top score the sweep ends at the virtual
/// operating point (FAR 0, FRR 1); a crossing in that final segment reports
/// the top score as its threshold.
pub fn compute_eer(
    genuine_scores: &[f64],
    impostor_scores: &[f64],
) -> Result<EerPoint, EvalError> {
    let curve = far_frr_curve(genuine_scores, impostor_scores)?;
    Ok(eer_from_curve(&curve))
}

pub(crate) fn eer_from_curve(curve: &[CurvePoint]) -> EerPoint {
    // virtual end point above every score
    let end = CurvePoint {
        threshold: curve[curve.len() - 1].threshold,
        far: 0.0,
        frr: 1.0,
    };
    let mut prev = curve[0];
    debug_assert!(prev.far >= prev.frr);
    for point in curve[1..].iter().chain(std::iter::once(&end)) {
        let d_prev = prev.far - prev.frr;
        let d_here = point.far - point.frr;
        if d_here == 0.0 && point.far == point.frr {
            return EerPoint {
                eer_percent: 100.0 * point.far,
                threshold: point.threshold,
            };
        }
        if d_here < 0.0 {
            // crossing inside (prev, point): interpolate both rates
            let t = d_prev / (d_prev - d_here);
            let eer = prev.far + t * (point.far - prev.far);
            let threshold = prev.threshold + t * (point.threshold - prev.threshold);
            return EerPoint {
                eer_percent: 100.0 * eer,
                threshold,
            };
        }
        prev = *point;
    }
    // unreachable: the virtual end point has far - frr = -1
    EerPoint {
        eer_percent: 100.0,
        threshold: prev.threshold,
    }
}

/// Splits scores by ground truth and computes the task report.
pub fn evaluate_task(
    scores: &[ScoreRecord],
    labels: &[LabelRecord],
    task: Task,
) -> Result<EvaluationReport, EvalError> {
    let score_ids: HashSet<&str> = scores.iter().map(|s| s.comparison_id.as_str()).collect();
    let label_ids: HashSet<&str> = labels.iter().map(|l| l.comparison_id.as_str()).collect();
    if score_ids != label_ids {
        let mut missing: Vec<String> = label_ids
            .difference(&score_ids)
            .map(|s| s.to_string())
            .collect();
        let mut extra: Vec<String> = score_ids
            .difference(&label_ids)
            .map(|s| s.to_string())
            .collect();
        missing.sort();
        extra.sort();
        return Err(EvalError::IdMismatch { missing, extra });
    }
    let truth_by_id: BTreeMap<&str, Truth> = labels
        .iter()
        .map(|l| (l.comparison_id.as_str(), l.truth))
        .collect();
    let mut genuine = Vec::new();
    let mut impostor = Vec::new();
    for record in scores {
        match truth_by_id[record.comparison_id.as_str()] {
            Truth::Genuine => genuine.push(record.score),
            Truth::Impostor => impostor.push(record.score),
        }
    }
    let curve = far_frr_curve(&genuine, &impostor)?;
    let eer = eer_from_curve(&curve);
    Ok(EvaluationReport {
        task,
        eer_percent: eer.eer_percent,
        threshold_at_eer: eer.threshold,
        curve,
        n_genuine: genuine.len(),
        n_impostor: impostor.len(),
    })
}

/// Scores every comparison with the configured pipeline. Comparisons are
/// scored concurrently but results keep input order; any unreadable file or
/// scoring failure aborts the whole run, naming the offending comparison.
pub fn run_protocol(
    tasks: &[ComparisonTask],
    pipeline: &PipelineConfig,
) -> Result<Vec<ScoreRecord>, ProtocolError> {
    let results: Vec<Result<ScoreRecord, ProtocolError>> = tasks
        .par_iter()
        .map(|task| {
            let fail = |source: ProtocolErrorKind| ProtocolError {
                comparison_id: task.comparison_id.clone(),
                source,
            };
            let reference =
                parse_signature_file(&task.reference_path).map_err(|e| fail(e.into()))?;
            let questioned =
                parse_signature_file(&task.questioned_path).map_err(|e| fail(e.into()))?;
            let score = score_comparison(pipeline, &reference, &questioned)
                .map_err(|e| fail(e.into()))?;
            Ok(ScoreRecord {
                comparison_id: task.comparison_id.clone(),
                score,
            })
        })
        .collect();
    // surface the first failure in input order, deterministically
    results.into_iter().collect()
}

/// One output row of the points ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingRow {
    pub team: String,
    pub task_points: BTreeMap<Task, u32>,
    pub total_points: u32,
}

/// Awards 3/2/1 points to the three lowest EERs of each task and ranks teams
/// by total points. Teams missing a task earn no points for it. Equal EERs
/// within a task are ordered by team name; output ties on total points are
/// broken by the best (lowest) single-task EER, then by team name.
pub fn rank_teams(per_task_eers: &BTreeMap<String, BTreeMap<Task, f64>>) -> Vec<RankingRow> {
    let mut points: BTreeMap<&str, BTreeMap<Task, u32>> = BTreeMap::new();
    for task in [Task::Task1, Task::Task2, Task::Task3] {
        let mut entries: Vec<(&str, f64)> = per_task_eers
            .iter()
            .filter_map(|(team, eers)| eers.get(&task).map(|e| (team.as_str(), *e)))
            .collect();
        entries.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(b.0)));
        for (rank, (team, _)) in entries.iter().take(3).enumerate() {
            points
                .entry(team)
                .or_default()
                .insert(task, (3 - rank) as u32);
        }
    }

    let mut rows: Vec<RankingRow> = per_task_eers
        .keys()
        .map(|team| {
            let task_points = points.get(team.as_str()).cloned().unwrap_or_default();
            let total_points = task_points.values().sum();
            RankingRow {
                team: team.clone(),
                task_points,
                total_points,
            }
        })
        .collect();

    let best_eer = |team: &str| -> f64 {
        per_task_eers[team]
            .values()
            .fold(f64::INFINITY, |acc, &e| acc.min(e))
    };
    rows.sort_by(|a, b| {
        b.total_points
            .cmp(&a.total_points)
            .then_with(|| best_eer(&a.team).partial_cmp(&best_eer(&b.team)).unwrap())
            .then_with(|| a.team.cmp(&b.team))
    });
    rows
}

//! Python bindings: the main domain types and operations exposed as the
//! `sigbench_py` extension module.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use sigbench::alignment::{self, LocalMetric, Series};
use sigbench::evaluation;
use sigbench::features::{self, Channel, FeatureSet};
use sigbench::sigdata::{
    self, Authenticity, PenState, Scenario, SignatureMeta, SignatureSample, WritingInput,
};
use sigbench::synth;
use sigbench::verifiers;

fn value_err(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn series_from(rows: Vec<Vec<f64>>) -> PyResult<Series> {
    Series::from_rows(&rows).map_err(value_err)
}

fn parse_metric(metric: &str) -> PyResult<LocalMetric> {
    match metric {
        "euclidean" => Ok(LocalMetric::Euclidean),
        "cityblock" => Ok(LocalMetric::Cityblock),
        other => Err(value_err(format!(
            "metric must be `euclidean` or `cityblock`, got `{other}`"
        ))),
    }
}

/// An on-line signature: ordered (x, y, pressure, t, pen-state) samples plus
/// acquisition metadata.
#[pyclass(name = "Signature")]
struct PySignature {
    inner: sigdata::Signature,
}

#[pymethods]
impl PySignature {
    /// Parses a signature file in the canonical text format.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<PySignature> {
        Ok(PySignature {
            inner: sigdata::parse_signature_file(&path).map_err(value_err)?,
        })
    }

    /// Builds a signature from parallel channel lists.
    #[staticmethod]
    #[pyo3(signature = (xs, ys, timestamps_ms, pressures, subject="py", input="stylus",
                        scenario="office", auth="unknown", pen_up=None))]
    #[allow(clippy::too_many_arguments)]
    fn from_channels(
        xs: Vec<f64>,
        ys: Vec<f64>,
        timestamps_ms: Vec<i64>,
        pressures: Vec<f64>,
        subject: &str,
        input: &str,
        scenario: &str,
        auth: &str,
        pen_up: Option<Vec<bool>>,
    ) -> PyResult<PySignature> {
        let n = xs.len();
        if ys.len() != n || timestamps_ms.len() != n || pressures.len() != n {
            return Err(value_err("channel lists must have equal length"));
        }
        if let Some(p) = &pen_up {
            if p.len() != n {
                return Err(value_err("pen_up must match the channel length"));
            }
        }
        let input = match input {
            "stylus" => WritingInput::Stylus,
            "finger" => WritingInput::Finger,
            other => return Err(value_err(format!("unknown input `{other}`"))),
        };
        let scenario = match scenario {
            "office" => Scenario::Office,
            "mobile" => Scenario::Mobile,
            other => return Err(value_err(format!("unknown scenario `{other}`"))),
        };
        let auth = match auth {
            "genuine" => Authenticity::Genuine,
            "skilled" => Authenticity::SkilledForgery,
            "random" => Authenticity::RandomForgery,
            "unknown" => Authenticity::Unknown,
            other => return Err(value_err(format!("unknown auth `{other}`"))),
        };
        let samples = (0..n)
            .map(|i| SignatureSample {
                x: xs[i],
                y: ys[i],
                pressure: pressures[i],
                t: timestamps_ms[i],
                pen_state: match &pen_up {
                    Some(p) if p[i] => PenState::Up,
                    _ => PenState::Down,
                },
            })
            .collect();
        let meta = SignatureMeta {
            subject_id: subject.to_string(),
            input,
            scenario,
            authenticity: auth,
            session: None,
        };
        Ok(PySignature {
            inner: sigdata::Signature::new(samples, meta).map_err(value_err)?,
        })
    }

    /// Writes the signature in the canonical text format.
    fn save(&self, path: PathBuf) -> PyResult<()> {
        sigdata::write_signature_file(&self.inner, &path).map_err(value_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn xs(&self) -> Vec<f64> {
        self.inner.xs()
    }

    #[getter]
    fn ys(&self) -> Vec<f64> {
        self.inner.ys()
    }

    #[getter]
    fn pressures(&self) -> Vec<f64> {
        self.inner.pressures()
    }

    #[getter]
    fn timestamps_ms(&self) -> Vec<i64> {
        self.inner.timestamps()
    }

    #[getter]
    fn subject_id(&self) -> String {
        self.inner.meta().subject_id.clone()
    }

    #[getter]
    fn input(&self) -> String {
        self.inner.meta().input.to_string()
    }

    #[getter]
    fn scenario(&self) -> String {
        self.inner.meta().scenario.to_string()
    }

    #[getter]
    fn auth(&self) -> String {
        self.inner.meta().authenticity.to_string()
    }

    #[getter]
    fn duration_ms(&self) -> i64 {
        self.inner.duration_ms()
    }

    /// Preprocessed copy: `symmetric` maps x,y to [-1,1] and pressure to
    /// [0,1]; `centered` removes zero-pressure stylus samples, scales to
    /// [0,1] and mean-shifts.
    fn normalized(&self, kind: &str) -> PyResult<PySignature> {
        let kind = match kind {
            "symmetric" => verifiers::PreprocessKind::Symmetric,
            "centered" => verifiers::PreprocessKind::Centered,
            "none" => verifiers::PreprocessKind::None,
            other => return Err(value_err(format!("unknown preprocess `{other}`"))),
        };
        Ok(PySignature {
            inner: verifiers::apply_preprocess(kind, &self.inner).map_err(value_err)?,
        })
    }

    /// The 12 derived time-function channels as a name -> list dict.
    fn time_functions(&self) -> PyResult<HashMap<String, Vec<f64>>> {
        let tf = features::time_functions(&self.inner).map_err(value_err)?;
        Ok(Channel::ALL
            .iter()
            .map(|c| (c.name().to_string(), tf.channel(*c).to_vec()))
            .collect())
    }

    /// Named global features (`minimum` or `extended` set).
    #[pyo3(signature = (set="extended"))]
    fn global_features(&self, set: &str) -> PyResult<HashMap<String, f64>> {
        let set = match set {
            "minimum" => FeatureSet::Minimum,
            "extended" => FeatureSet::Extended,
            other => return Err(value_err(format!("unknown feature set `{other}`"))),
        };
        let f = features::global_features(&self.inner, set).map_err(value_err)?;
        Ok(f.names()
            .iter()
            .map(|n| n.to_string())
            .zip(f.values().iter().copied())
            .collect())
    }

    /// Path-signature coefficients of the (x, y) trajectory up to `depth`,
    /// levels concatenated.
    fn path_signature(&self, depth: usize) -> PyResult<Vec<f64>> {
        Ok(features::path_signature(&self.inner, depth)
            .map_err(value_err)?
            .terms())
    }

    fn __repr__(&self) -> String {
        format!(
            "Signature(subject='{}', input='{}', samples={}, duration_ms={})",
            self.inner.meta().subject_id,
            self.inner.meta().input,
            self.inner.len(),
            self.inner.duration_ms()
        )
    }
}

/// Classical DTW between row-major sequences.
/// Returns (accumulated_cost, normalized_score, path).
#[pyfunction]
#[pyo3(signature = (a, b, metric="euclidean"))]
fn dtw(
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    metric: &str,
) -> PyResult<(f64, f64, Vec<(usize, usize)>)> {
    let r = alignment::dtw(&series_from(a)?, &series_from(b)?, parse_metric(metric)?)
        .map_err(value_err)?;
    Ok((r.accumulated_cost, r.normalized_score, r.path))
}

/// Soft-DTW with squared-Euclidean local cost.
/// Returns (value, gradient_wrt_first).
#[pyfunction]
fn soft_dtw(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, gamma: f64) -> PyResult<(f64, Vec<Vec<f64>>)> {
    let r = alignment::soft_dtw(&series_from(a)?, &series_from(b)?, gamma).map_err(value_err)?;
    Ok((r.value, r.gradient_wrt_first.rows()))
}

/// Soft-DTW triplet loss:
/// max(0, soft_dtw(anchor, positive) - soft_dtw(anchor, negative) + margin).
#[pyfunction]
fn triplet_loss(
    anchor: Vec<Vec<f64>>,
    positive: Vec<Vec<f64>>,
    negative: Vec<Vec<f64>>,
    gamma: f64,
    margin: f64,
) -> PyResult<f64> {
    alignment::triplet_loss(
        &series_from(anchor)?,
        &series_from(positive)?,
        &series_from(negative)?,
        gamma,
        margin,
    )
    .map_err(value_err)
}

/// Path-signature coefficients of a 2-D point list, levels concatenated.
#[pyfunction]
fn path_signature(points: Vec<(f64, f64)>, depth: usize) -> PyResult<Vec<f64>> {
    Ok(features::path_signature_points(&points, depth)
        .map_err(value_err)?
        .terms())
}

/// Equal error rate of higher-is-genuine scores.
/// Returns (eer_percent, threshold).
#[pyfunction]
fn compute_eer(genuine: Vec<f64>, impostor: Vec<f64>) -> PyResult<(f64, f64)> {
    let e = evaluation::compute_eer(&genuine, &impostor).map_err(value_err)?;
    Ok((e.eer_percent, e.threshold))
}

/// Tanh-estimator normalization onto (0,1).
#[pyfunction]
fn tanh_normalize(score: f64, mu: f64, sigma: f64) -> PyResult<f64> {
    let p = verifiers::TanhParams::new(mu, sigma).map_err(value_err)?;
    Ok(verifiers::tanh_normalize(score, &p))
}

/// Baseline DTW similarity in [0,1] between two signatures; applies the
/// symmetric preprocessing internally.
#[pyfunction]
fn baseline_score(reference: &PySignature, questioned: &PySignature) -> PyResult<f64> {
    verifiers::score_comparison(
        &verifiers::PipelineConfig::baseline(),
        &reference.inner,
        &questioned.inner,
    )
    .map_err(value_err)
}

/// Awards medal points per task and ranks teams. `eers` maps team name to a
/// {task_number: eer_percent} dict. Returns (team, total_points) rows in
/// ranking order.
#[pyfunction]
fn rank_teams(eers: HashMap<String, HashMap<u8, f64>>) -> PyResult<Vec<(String, u32)>> {
    let mut table = std::collections::BTreeMap::new();
    for (team, per_task) in eers {
        let mut tasks = std::collections::BTreeMap::new();
        for (n, eer) in per_task {
            let task = evaluation::Task::from_number(n)
                .ok_or_else(|| value_err(format!("task must be 1, 2, or 3, got {n}")))?;
            tasks.insert(task, eer);
        }
        table.insert(team, tasks);
    }
    Ok(evaluation::rank_teams(&table)
        .into_iter()
        .map(|r| (r.team, r.total_points))
        .collect())
}

/// Generates the deterministic synthetic dataset.
/// Returns a dict of the emitted artifact paths and counts.
#[pyfunction]
fn generate_dataset(
    py: Python<'_>,
    seed: u64,
    n_subjects: usize,
    out_dir: PathBuf,
) -> PyResult<Py<PyAny>> {
    let manifest = synth::generate_dataset(seed, n_subjects, &out_dir).map_err(value_err)?;
    let dict = pyo3::types::PyDict::new(py);
    let path_str = |p: &Path| p.display().to_string();
    dict.set_item("out_dir", path_str(&manifest.out_dir))?;
    dict.set_item("comparisons_all", path_str(&manifest.comparisons_all))?;
    dict.set_item("labels_all", path_str(&manifest.labels_all))?;
    dict.set_item("comparisons_random", path_str(&manifest.comparisons_random))?;
    dict.set_item("labels_random", path_str(&manifest.labels_random))?;
    dict.set_item("comparisons_skilled", path_str(&manifest.comparisons_skilled))?;
    dict.set_item("labels_skilled", path_str(&manifest.labels_skilled))?;
    dict.set_item("n_subjects", manifest.n_subjects)?;
    dict.set_item("n_comparisons_all", manifest.n_comparisons_all)?;
    dict.set_item(
        "signature_files",
        manifest
            .signature_files
            .iter()
            .map(|p| path_str(p))
            .collect::<Vec<_>>(),
    )?;
    Ok(dict.into())
}

/// Normalizes raw per-stream scores with tanh parameters and fuses them with
/// convex weights.
#[pyfunction]
fn fuse_scores(
    raw_scores: Vec<f64>,
    mus: Vec<f64>,
    sigmas: Vec<f64>,
    weights: Vec<f64>,
) -> PyResult<f64> {
    if mus.len() != sigmas.len() {
        return Err(value_err("mus and sigmas must have equal length"));
    }
    let streams: Vec<verifiers::TanhParams> = mus
        .iter()
        .zip(&sigmas)
        .map(|(m, s)| verifiers::TanhParams::new(*m, *s))
        .collect::<Result<_, _>>()
        .map_err(value_err)?;
    let model = verifiers::FusionModel::new(streams, weights).map_err(value_err)?;
    model.fuse_raw(&raw_scores).map_err(value_err)
}

#[pymodule]
fn sigbench_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySignature>()?;
    m.add_function(wrap_pyfunction!(dtw, m)?)?;
    m.add_function(wrap_pyfunction!(soft_dtw, m)?)?;
    m.add_function(wrap_pyfunction!(triplet_loss, m)?)?;
    m.add_function(wrap_pyfunction!(path_signature, m)?)?;
    m.add_function(wrap_pyfunction!(compute_eer, m)?)?;
    m.add_function(wrap_pyfunction!(tanh_normalize, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_score, m)?)?;
    m.add_function(wrap_pyfunction!(rank_teams, m)?)?;
    m.add_function(wrap_pyfunction!(generate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(fuse_scores, m)?)?;
    Ok(())
}

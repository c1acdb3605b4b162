//! Preprocessing applied before feature extraction: zero-pressure sample
//! removal and the two channel normalization conventions used by the
//! verifiers.
//!
//! All functions are pure; sample count and timestamps are never altered by
//! the normalizations.

use thiserror::Error;

use crate::sigdata::{Signature, SignatureSample, WritingInput, PRESSURE_FILL};

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("signature degenerates to {remaining} samples after zero-pressure removal")]
    Degenerate { remaining: usize },
}

/// Drops every sample whose pressure is zero, preserving order. Intended for
/// stylus input, where zero-pressure rows are pen-up noise; finger input
/// carries fill pressure and passes through unchanged.
pub fn remove_zero_pressure(sig: &Signature) -> Result<Signature, PreprocessError> {
    let kept: Vec<SignatureSample> = sig
        .samples()
        .iter()
        .filter(|s| s.pressure > 0.0)
        .copied()
        .collect();
    if kept.len() < 2 {
        return Err(PreprocessError::Degenerate {
            remaining: kept.len(),
        });
    }
    Ok(Signature::from_parts_unchecked(kept, sig.meta().clone()))
}

fn min_max(values: &[f64]) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    (min, max)
}

/// Min-max scales a channel to [0,1] and shifts by the mean of the scaled
/// values. Constant channels map to all zeros.
fn minmax_centered(values: &[f64]) -> Vec<f64> {
    let (min, max) = min_max(values);
    if max <= min {
        return vec![0.0; values.len()];
    }
    let scaled: Vec<f64> = values.iter().map(|v| (v - min) / (max - min)).collect();
    let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
    scaled.iter().map(|v| v - mean).collect()
}

/// Affinely maps a channel onto [lo, hi]; constant channels map to the range
/// midpoint.
fn minmax_to(values: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let (min, max) = min_max(values);
    if max <= min {
        return vec![(lo + hi) / 2.0; values.len()];
    }
    values
        .iter()
        .map(|v| lo + (hi - lo) * (v - min) / (max - min))
        .collect()
}

fn rebuild(sig: &Signature, xs: Vec<f64>, ys: Vec<f64>, ps: Vec<f64>) -> Signature {
    let samples = sig
        .samples()
        .iter()
        .zip(xs)
        .zip(ys)
        .zip(ps)
        .map(|(((s, x), y), pressure)| SignatureSample {
            x,
            y,
            pressure,
            t: s.t,
            pen_state: s.pen_state,
        })
        .collect();
    Signature::from_parts_unchecked(samples, sig.meta().clone())
}

/// Scales x, y, and pressure to [0,1] and shifts each channel by the mean of
/// its scaled values. Constant channels map to all zeros.
pub fn normalize_minmax_centered(sig: &Signature) -> Signature {
    rebuild(
        sig,
        minmax_centered(&sig.xs()),
        minmax_centered(&sig.ys()),
        minmax_centered(&sig.pressures()),
    )
}

/// Maps x and y onto [-1,1] and pressure onto [0,1]. Finger input gets an
/// all-ones pressure channel. Constant channels map to the range midpoint.
pub fn normalize_symmetric(sig: &Signature) -> Signature {
    let ps = if sig.meta().input == WritingInput::Finger {
        vec![PRESSURE_FILL; sig.len()]
    } else {
        minmax_to(&sig.pressures(), 0.0, 1.0)
    };
    rebuild(
        sig,
        minmax_to(&sig.xs(), -1.0, 1.0),
        minmax_to(&sig.ys(), -1.0, 1.0),
        ps,
    )
}

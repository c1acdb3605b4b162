//! Feature extraction: derived time-function channels, global feature
//! vectors, feature-difference vectors, and path-signature coefficients.

use std::fmt;

use thiserror::Error;

use crate::sigdata::Signature;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("need at least 2 points, found {found}")]
    TooShort { found: usize },
    #[error("series and timestamps differ in length ({series} vs {timestamps})")]
    LengthMismatch { series: usize, timestamps: usize },
    #[error("timestamps must increase strictly (violation at index {index})")]
    NonIncreasingTimestamps { index: usize },
    #[error("feature vectors have different layouts ({left} vs {right})")]
    SetMismatch { left: FeatureSet, right: FeatureSet },
    #[error("path-signature depth {depth} outside 1..=4")]
    DepthOutOfRange { depth: usize },
}

/// Differentiates a series against timestamps in milliseconds: central
/// differences at interior points, one-sided differences at the endpoints.
/// Output length equals input length.
pub fn derivative(series: &[f64], timestamps_ms: &[i64]) -> Result<Vec<f64>, FeatureError> {
    let n = series.len();
    if n != timestamps_ms.len() {
        return Err(FeatureError::LengthMismatch {
            series: n,
            timestamps: timestamps_ms.len(),
        });
    }
    if n < 2 {
        return Err(FeatureError::TooShort { found: n });
    }
    for i in 1..n {
        if timestamps_ms[i] <= timestamps_ms[i - 1] {
            return Err(FeatureError::NonIncreasingTimestamps { index: i });
        }
    }
    let t = |i: usize| timestamps_ms[i] as f64;
    let mut out = Vec::with_capacity(n);
    out.push((series[1] - series[0]) / (t(1) - t(0)));
    for i in 1..n - 1 {
        out.push((series[i + 1] - series[i - 1]) / (t(i + 1) - t(i - 1)));
    }
    out.push((series[n - 1] - series[n - 2]) / (t(n - 1) - t(n - 2)));
    Ok(out)
}

/// The 12 derived channels, in fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    X,
    Y,
    Dx,
    Dy,
    Ddx,
    Ddy,
    /// Speed: sqrt(dx^2 + dy^2).
    V,
    /// Derivative of speed.
    Dv,
    /// Acceleration magnitude: sqrt(ddx^2 + ddy^2).
    A,
    /// Path angle atan2(dy, dx), radians; 0 at zero velocity.
    Theta,
    P,
    Dp,
}

impl Channel {
    pub const ALL: [Channel; 12] = [
        Channel::X,
        Channel::Y,
        Channel::Dx,
        Channel::Dy,
        Channel::Ddx,
        Channel::Ddy,
        Channel::V,
        Channel::Dv,
        Channel::A,
        Channel::Theta,
        Channel::P,
        Channel::Dp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::X => "x",
            Channel::Y => "y",
            Channel::Dx => "dx",
            Channel::Dy => "dy",
            Channel::Ddx => "ddx",
            Channel::Ddy => "ddy",
            Channel::V => "v",
            Channel::Dv => "dv",
            Channel::A => "a",
            Channel::Theta => "theta",
            Channel::P => "p",
            Channel::Dp => "dp",
        }
    }

    fn index(self) -> usize {
        Channel::ALL.iter().position(|c| *c == self).unwrap()
    }
}

/// The 12 derived time-function channels of one signature, all of equal
/// length. Consecutive samples sharing a timestamp are collapsed (first kept)
/// before differentiation, so the length matches the deduplicated sample
/// count.
#[derive(Debug, Clone)]
pub struct TimeFunctionSet {
    channels: Vec<Vec<f64>>,
    timestamps_ms: Vec<i64>,
}

impl TimeFunctionSet {
    pub fn len(&self) -> usize {
        self.timestamps_ms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps_ms.is_empty()
    }

    pub fn channel(&self, c: Channel) -> &[f64] {
        &self.channels[c.index()]
    }

    pub fn timestamps_ms(&self) -> &[i64] {
        &self.timestamps_ms
    }

    /// Row-major matrix over the selected channels, ready for alignment.
    pub fn rows(&self, selected: &[Channel]) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|i| selected.iter().map(|c| self.channel(*c)[i]).collect())
            .collect()
    }
}

/// Extracts the 12 time-function channels from a signature.
pub fn time_functions(sig: &Signature) -> Result<TimeFunctionSet, FeatureError> {
    // collapse consecutive samples with equal timestamps, keeping the first
    let mut xs = Vec::with_capacity(sig.len());
    let mut ys = Vec::with_capacity(sig.len());
    let mut ps = Vec::with_capacity(sig.len());
    let mut ts: Vec<i64> = Vec::with_capacity(sig.len());
    for s in sig.samples() {
        if ts.last() == Some(&s.t) {
            continue;
        }
        xs.push(s.x);
        ys.push(s.y);
        ps.push(s.pressure);
        ts.push(s.t);
    }
    if ts.len() < 2 {
        return Err(FeatureError::TooShort { found: ts.len() });
    }

    let dx = derivative(&xs, &ts)?;
    let dy = derivative(&ys, &ts)?;
    let ddx = derivative(&dx, &ts)?;
    let ddy = derivative(&dy, &ts)?;
    let v: Vec<f64> = dx
        .iter()
        .zip(&dy)
        .map(|(a, b)| (a * a + b * b).sqrt())
        .collect();
    let dv = derivative(&v, &ts)?;
    let a: Vec<f64> = ddx
        .iter()
        .zip(&ddy)
        .map(|(p, q)| (p * p + q * q).sqrt())
        .collect();
    let theta: Vec<f64> = dx
        .iter()
        .zip(&dy)
        .map(|(&p, &q)| if p == 0.0 && q == 0.0 { 0.0 } else { q.atan2(p) })
        .collect();
    let dp = derivative(&ps, &ts)?;

    Ok(TimeFunctionSet {
        channels: vec![xs, ys, dx, dy, ddx, ddy, v, dv, a, theta, ps, dp],
        timestamps_ms: ts,
    })
}

/// Which global feature layout to extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSet {
    /// std_x, std_y, duration_ms.
    Minimum,
    /// Minimum plus mean_v, max_v, mean_p, std_p, sample_count, path_length,
    /// width, height, aspect_ratio.
    Extended,
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureSet::Minimum => write!(f, "minimum"),
            FeatureSet::Extended => write!(f, "extended"),
        }
    }
}

const MINIMUM_NAMES: [&str; 3] = ["std_x", "std_y", "duration_ms"];
const EXTENDED_NAMES: [&str; 12] = [
    "std_x",
    "std_y",
    "duration_ms",
    "mean_v",
    "max_v",
    "mean_p",
    "std_p",
    "sample_count",
    "path_length",
    "width",
    "height",
    "aspect_ratio",
];

/// Fixed-order named global features of one signature. NaN-free.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalFeatureVector {
    set: FeatureSet,
    values: Vec<f64>,
}

impl GlobalFeatureVector {
    pub fn set(&self) -> FeatureSet {
        self.set
    }

    pub fn names(&self) -> &'static [&'static str] {
        match self.set {
            FeatureSet::Minimum => &MINIMUM_NAMES,
            FeatureSet::Extended => &EXTENDED_NAMES,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names()
            .iter()
            .position(|n| *n == name)
            .map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
fn std_pop(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Extracts a global feature vector. Standard deviations are population
/// deviations; duration is last minus first timestamp in ms.
pub fn global_features(sig: &Signature, set: FeatureSet) -> Result<GlobalFeatureVector, FeatureError> {
    if sig.len() < 2 {
        return Err(FeatureError::TooShort { found: sig.len() });
    }
    let xs = sig.xs();
    let ys = sig.ys();
    let mut values = vec![std_pop(&xs), std_pop(&ys), sig.duration_ms() as f64];
    if set == FeatureSet::Extended {
        let tf = time_functions(sig)?;
        let v = tf.channel(Channel::V);
        let ps = sig.pressures();
        let path_length: f64 = xs
            .windows(2)
            .zip(ys.windows(2))
            .map(|(xw, yw)| {
                let dx = xw[1] - xw[0];
                let dy = yw[1] - yw[0];
                (dx * dx + dy * dy).sqrt()
            })
            .sum();
        let (min_x, max_x) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        let (min_y, max_y) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        let width = max_x - min_x;
        let height = max_y - min_y;
        let aspect = if height > 0.0 { width / height } else { 0.0 };
        values.extend([
            mean(v),
            v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            mean(&ps),
            std_pop(&ps),
            sig.len() as f64,
            path_length,
            width,
            height,
            aspect,
        ]);
    }
    debug_assert!(values.iter().all(|v| v.is_finite()));
    Ok(GlobalFeatureVector { set, values })
}

/// Elementwise absolute difference of two feature vectors with the same
/// layout.
pub fn feature_difference(
    enrolled: &GlobalFeatureVector,
    test: &GlobalFeatureVector,
) -> Result<GlobalFeatureVector, FeatureError> {
    if enrolled.set != test.set || enrolled.values.len() != test.values.len() {
        return Err(FeatureError::SetMismatch {
            left: enrolled.set,
            right: test.set,
        });
    }
    Ok(GlobalFeatureVector {
        set: enrolled.set,
        values: enrolled
            .values
            .iter()
            .zip(&test.values)
            .map(|(a, b)| (a - b).abs())
            .collect(),
    })
}

/// Iterated-integral coefficients of a 2-D path up to `depth`, stored level
/// by level: level k holds the 2^k coefficients of the words over {x, y} in
/// binary order (x = 0, y = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct PathSignatureVector {
    depth: usize,
    levels: Vec<Vec<f64>>,
}

impl PathSignatureVector {
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// All terms, levels concatenated (2 + 4 + ... + 2^depth values).
    pub fn terms(&self) -> Vec<f64> {
        self.levels.iter().flatten().copied().collect()
    }

    /// The 2^k coefficients of level `k` (1-based).
    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k - 1]
    }

    /// Coefficient of one word, e.g. `&[0, 1]` for the x-then-y integral.
    pub fn term(&self, word: &[usize]) -> f64 {
        let mut idx = 0;
        for &w in word {
            idx = idx * 2 + w;
        }
        self.levels[word.len() - 1][idx]
    }

    fn zero(depth: usize) -> PathSignatureVector {
        PathSignatureVector {
            depth,
            levels: (1..=depth).map(|k| vec![0.0; 1 << k]).collect(),
        }
    }

    /// Truncated tensor exponential of a single straight segment: the word
    /// (w1..wk) gets product(delta[w_i]) / k!.
    fn segment(delta: [f64; 2], depth: usize) -> PathSignatureVector {
        let mut sig = PathSignatureVector::zero(depth);
        let mut factorial = 1.0;
        for k in 1..=depth {
            factorial *= k as f64;
            for idx in 0..(1 << k) {
                let mut prod = 1.0;
                for pos in 0..k {
                    let digit = (idx >> (k - 1 - pos)) & 1;
                    prod *= delta[digit];
                }
                sig.levels[k - 1][idx] = prod / factorial;
            }
        }
        sig
    }
}

/// Concatenation product of two path signatures truncated at the same depth:
/// the signature of the concatenated path. For a word w of level k,
/// out(w) = a(w) + b(w) + sum over proper splits of a(prefix) * b(suffix).
pub fn chen_concat(
    a: &PathSignatureVector,
    b: &PathSignatureVector,
) -> Result<PathSignatureVector, FeatureError> {
    if a.depth != b.depth {
        return Err(FeatureError::DepthOutOfRange { depth: b.depth });
    }
    let depth = a.depth;
    let mut out = PathSignatureVector::zero(depth);
    for k in 1..=depth {
        for idx in 0..(1usize << k) {
            let mut acc = a.levels[k - 1][idx] + b.levels[k - 1][idx];
            for j in 1..k {
                let prefix = idx >> (k - j);
                let suffix = idx & ((1 << (k - j)) - 1);
                acc += a.levels[j - 1][prefix] * b.levels[k - j - 1][suffix];
            }
            out.levels[k - 1][idx] = acc;
        }
    }
    Ok(out)
}

/// Path signature of the piecewise-linear path through `points`, computed by
/// per-segment closed form and concatenation. Depth 1..=4.
pub fn path_signature_points(
    points: &[(f64, f64)],
    depth: usize,
) -> Result<PathSignatureVector, FeatureError> {
    if !(1..=4).contains(&depth) {
        return Err(FeatureError::DepthOutOfRange { depth });
    }
    if points.len() < 2 {
        return Err(FeatureError::TooShort {
            found: points.len(),
        });
    }
    let mut sig = PathSignatureVector::zero(depth);
    for w in points.windows(2) {
        let delta = [w[1].0 - w[0].0, w[1].1 - w[0].1];
        let seg = PathSignatureVector::segment(delta, depth);
        sig = chen_concat(&sig, &seg)?;
    }
    Ok(sig)
}

/// Path signature of a signature's (x, y) trajectory.
pub fn path_signature(sig: &Signature, depth: usize) -> Result<PathSignatureVector, FeatureError> {
    let points: Vec<(f64, f64)> = sig.samples().iter().map(|s| (s.x, s.y)).collect();
    path_signature_points(&points, depth)
}

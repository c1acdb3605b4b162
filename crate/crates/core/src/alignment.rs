//! Alignment kernels: classical DTW with path backtracking, the smoothed
//! soft-DTW with its gradient, and a soft-DTW triplet loss.
//!
//! All functions are pure; DP tables are per call, so independent
//! comparisons can run concurrently without shared state.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AlignmentError {
    #[error("empty input sequence")]
    EmptyInput,
    #[error("channel counts differ ({left} vs {right})")]
    ChannelMismatch { left: usize, right: usize },
    #[error("values length {len} is not a multiple of {dims} channels")]
    RaggedRows { len: usize, dims: usize },
    #[error("gamma must be positive, got {0}")]
    BadGamma(f64),
    #[error("margin must be non-negative, got {0}")]
    BadMargin(f64),
}

/// A row-major multichannel sequence: `len()` rows of `dims` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    values: Vec<f64>,
    dims: usize,
}

impl Series {
    pub fn new(values: Vec<f64>, dims: usize) -> Result<Series, AlignmentError> {
        if dims == 0 || values.is_empty() {
            return Err(AlignmentError::EmptyInput);
        }
        if values.len() % dims != 0 {
            return Err(AlignmentError::RaggedRows {
                len: values.len(),
                dims,
            });
        }
        Ok(Series { values, dims })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Series, AlignmentError> {
        let dims = rows.first().map(|r| r.len()).unwrap_or(0);
        if dims == 0 {
            return Err(AlignmentError::EmptyInput);
        }
        for r in rows {
            if r.len() != dims {
                return Err(AlignmentError::ChannelMismatch {
                    left: dims,
                    right: r.len(),
                });
            }
        }
        Series::new(rows.concat(), dims)
    }

    /// One-channel series from a flat slice.
    pub fn univariate(values: &[f64]) -> Result<Series, AlignmentError> {
        Series::new(values.to_vec(), 1)
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dims
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dims..(i + 1) * self.dims]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Local distance between aligned rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalMetric {
    Euclidean,
    Cityblock,
}

fn local_distance(a: &[f64], b: &[f64], metric: LocalMetric) -> f64 {
    match metric {
        LocalMetric::Euclidean => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt(),
        LocalMetric::Cityblock => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
    }
}

fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Outcome of a classical DTW alignment.
///
/// The path is 0-indexed, starts at (0, 0), ends at (n-1, m-1), and moves by
/// unit steps right, down, or diagonally. `normalized_score` is the
/// accumulated cost divided by the path length.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    pub accumulated_cost: f64,
    pub path: Vec<(usize, usize)>,
    pub normalized_score: f64,
}

impl AlignmentResult {
    pub fn path_length(&self) -> usize {
        self.path.len()
    }
}

fn check_pair(a: &Series, b: &Series) -> Result<(), AlignmentError> {
    if a.is_empty() || b.is_empty() {
        return Err(AlignmentError::EmptyInput);
    }
    if a.dims() != b.dims() {
        return Err(AlignmentError::ChannelMismatch {
            left: a.dims(),
            right: b.dims(),
        });
    }
    Ok(())
}

/// Classical DTW over the full DP table with the symmetric step set
/// {right, down, diagonal} and no band constraint. Backtracking prefers the
/// diagonal, then the step in the first sequence, then the second, so paths
/// (and the normalized score) are deterministic.
pub fn dtw(a: &Series, b: &Series, metric: LocalMetric) -> Result<AlignmentResult, AlignmentError> {
    check_pair(a, b)?;
    let (n, m) = (a.len(), b.len());
    let w = m + 1;
    let mut dp = vec![f64::INFINITY; (n + 1) * w];
    dp[0] = 0.0;
    for i in 1..=n {
        for j in 1..=m {
            let cost = local_distance(a.row(i - 1), b.row(j - 1), metric);
            let best = dp[(i - 1) * w + (j - 1)]
                .min(dp[(i - 1) * w + j])
                .min(dp[i * w + (j - 1)]);
            dp[i * w + j] = cost + best;
        }
    }
    let accumulated_cost = dp[n * w + m];

    let mut path = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        path.push((i - 1, j - 1));
        let diag = dp[(i - 1) * w + (j - 1)];
        let vert = dp[(i - 1) * w + j];
        let horiz = dp[i * w + (j - 1)];
        let best = diag.min(vert).min(horiz);
        if diag == best {
            i -= 1;
            j -= 1;
        } else if vert == best {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    path.reverse();

    let normalized_score = accumulated_cost / path.len() as f64;
    Ok(AlignmentResult {
        accumulated_cost,
        path,
        normalized_score,
    })
}

/// Soft minimum with temperature `gamma`, computed with the max-shift trick
/// so large cost scales cannot overflow.
fn soft_min3(a: f64, b: f64, c: f64, gamma: f64) -> f64 {
    let m = a.min(b).min(c);
    if m.is_infinite() {
        return m;
    }
    let sum = (-(a - m) / gamma).exp() + (-(b - m) / gamma).exp() + (-(c - m) / gamma).exp();
    m - gamma * sum.ln()
}

/// Outcome of a soft-DTW evaluation with squared-Euclidean local cost.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftDtwResult {
    pub gamma: f64,
    pub value: f64,
    /// d(value)/d(first input), same shape as the first input.
    pub gradient_wrt_first: Series,
}

/// Soft-DTW: the classical recursion with min replaced by a temperature-
/// `gamma` soft minimum, plus the exact gradient with respect to the first
/// input from the backward occupancy recursion.
pub fn soft_dtw(a: &Series, b: &Series, gamma: f64) -> Result<SoftDtwResult, AlignmentError> {
    check_pair(a, b)?;
    if gamma <= 0.0 {
        return Err(AlignmentError::BadGamma(gamma));
    }
    let (n, m) = (a.len(), b.len());
    let w = m + 2;
    let idx = |i: usize, j: usize| i * w + j;

    let mut cost = vec![0.0; (n + 2) * w];
    for i in 1..=n {
        for j in 1..=m {
            cost[idx(i, j)] = squared_euclidean(a.row(i - 1), b.row(j - 1));
        }
    }

    let mut r = vec![f64::INFINITY; (n + 2) * w];
    r[idx(0, 0)] = 0.0;
    for i in 1..=n {
        for j in 1..=m {
            r[idx(i, j)] = cost[idx(i, j)]
                + soft_min3(
                    r[idx(i - 1, j - 1)],
                    r[idx(i - 1, j)],
                    r[idx(i, j - 1)],
                    gamma,
                );
        }
    }
    let value = r[idx(n, m)];

    // backward occupancy pass; the padded border steers all mass to (n, m)
    for i in 1..=n {
        r[idx(i, m + 1)] = f64::NEG_INFINITY;
    }
    for j in 1..=m {
        r[idx(n + 1, j)] = f64::NEG_INFINITY;
    }
    r[idx(n + 1, m + 1)] = value;
    let mut e = vec![0.0; (n + 2) * w];
    e[idx(n + 1, m + 1)] = 1.0;
    let weight = |num: f64, den: f64, c: f64| -> f64 {
        if num.is_infinite() {
            return 0.0;
        }
        (((num - den - c) / gamma).min(700.0)).exp()
    };
    for j in (1..=m).rev() {
        for i in (1..=n).rev() {
            let wa = weight(r[idx(i + 1, j)], r[idx(i, j)], cost[idx(i + 1, j)]);
            let wb = weight(r[idx(i, j + 1)], r[idx(i, j)], cost[idx(i, j + 1)]);
            let wc = weight(r[idx(i + 1, j + 1)], r[idx(i, j)], cost[idx(i + 1, j + 1)]);
            e[idx(i, j)] = e[idx(i + 1, j)] * wa + e[idx(i, j + 1)] * wb + e[idx(i + 1, j + 1)] * wc;
        }
    }

    let d = a.dims();
    let mut grad = vec![0.0; n * d];
    for i in 1..=n {
        for j in 1..=m {
            let occupancy = e[idx(i, j)];
            if occupancy == 0.0 {
                continue;
            }
            let (ra, rb) = (a.row(i - 1), b.row(j - 1));
            for k in 0..d {
                grad[(i - 1) * d + k] += occupancy * 2.0 * (ra[k] - rb[k]);
            }
        }
    }

    Ok(SoftDtwResult {
        gamma,
        value,
        gradient_wrt_first: Series::new(grad, d)?,
    })
}

/// Soft-DTW triplet loss:
/// max(0, soft_dtw(anchor, positive) - soft_dtw(anchor, negative) + margin).
pub fn triplet_loss(
    anchor: &Series,
    positive: &Series,
    negative: &Series,
    gamma: f64,
    margin: f64,
) -> Result<f64, AlignmentError> {
    if margin < 0.0 {
        return Err(AlignmentError::BadMargin(margin));
    }
    let d_ap = soft_dtw(anchor, positive, gamma)?.value;
    let d_an = soft_dtw(anchor, negative, gamma)?.value;
    Ok((d_ap - d_an + margin).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn series(rows: &[&[f64]]) -> Series {
        Series::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    /// Exhaustive minimum over every monotone alignment path. Independent of
    /// the DP: enumerates paths recursively.
    fn brute_force_dtw(a: &[f64], b: &[f64]) -> f64 {
        fn walk(a: &[f64], b: &[f64], i: usize, j: usize, acc: f64, best: &mut f64) {
            let acc = acc + (a[i] - b[j]).abs();
            if i == a.len() - 1 && j == b.len() - 1 {
                *best = best.min(acc);
                return;
            }
            if i + 1 < a.len() {
                walk(a, b, i + 1, j, acc, best);
            }
            if j + 1 < b.len() {
                walk(a, b, i, j + 1, acc, best);
            }
            if i + 1 < a.len() && j + 1 < b.len() {
                walk(a, b, i + 1, j + 1, acc, best);
            }
        }
        let mut best = f64::INFINITY;
        walk(a, b, 0, 0, 0.0, &mut best);
        best
    }

    #[test]
    fn identical_sequences_align_on_the_diagonal() {
        let a = series(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let r = dtw(&a, &a, LocalMetric::Euclidean).unwrap();
        assert_eq!(r.accumulated_cost, 0.0);
        assert_eq!(r.path, vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!(r.normalized_score, 0.0);
    }

    #[test]
    fn two_by_two_constant_sequences() {
        let a = series(&[&[0.0], &[0.0]]);
        let b = series(&[&[1.0], &[1.0]]);
        let r = dtw(&a, &b, LocalMetric::Euclidean).unwrap();
        assert_eq!(r.accumulated_cost, 2.0);
        assert_eq!(r.path_length(), 2);
        assert_eq!(r.normalized_score, 1.0);
    }

    #[test]
    fn matches_brute_force_on_small_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(1..=5);
            let m = rng.random_range(1..=5);
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(0..3) as f64).collect();
            let b: Vec<f64> = (0..m).map(|_| rng.random_range(0..3) as f64).collect();
            let got = dtw(
                &Series::univariate(&a).unwrap(),
                &Series::univariate(&b).unwrap(),
                LocalMetric::Euclidean,
            )
            .unwrap()
            .accumulated_cost;
            assert_eq!(got, brute_force_dtw(&a, &b), "a={a:?}, b={b:?}");
        }
    }

    #[test]
    fn cityblock_metric_sums_absolute_differences() {
        let a = series(&[&[0.0, 0.0]]);
        let b = series(&[&[3.0, 4.0]]);
        let euc = dtw(&a, &b, LocalMetric::Euclidean).unwrap().accumulated_cost;
        let city = dtw(&a, &b, LocalMetric::Cityblock).unwrap().accumulated_cost;
        assert_eq!(euc, 5.0);
        assert_eq!(city, 7.0);
    }

    #[test]
    fn rejects_empty_and_mismatched_inputs() {
        assert!(matches!(
            Series::from_rows(&[]),
            Err(AlignmentError::EmptyInput)
        ));
        let a = series(&[&[1.0, 2.0]]);
        let b = series(&[&[1.0]]);
        assert!(matches!(
            dtw(&a, &b, LocalMetric::Euclidean),
            Err(AlignmentError::ChannelMismatch { left: 2, right: 1 })
        ));
    }

    fn random_series(rng: &mut ChaCha8Rng, len: usize, dims: usize) -> Series {
        let values: Vec<f64> = (0..len * dims).map(|_| rng.random_range(-2.0..2.0)).collect();
        Series::new(values, dims).unwrap()
    }

    /// Classical DTW with squared-Euclidean local cost, the gamma -> 0 limit
    /// of soft-DTW.
    fn dtw_squared(a: &Series, b: &Series) -> f64 {
        let (n, m) = (a.len(), b.len());
        let w = m + 1;
        let mut dp = vec![f64::INFINITY; (n + 1) * w];
        dp[0] = 0.0;
        for i in 1..=n {
            for j in 1..=m {
                let cost = squared_euclidean(a.row(i - 1), b.row(j - 1));
                dp[i * w + j] = cost
                    + dp[(i - 1) * w + (j - 1)]
                        .min(dp[(i - 1) * w + j])
                        .min(dp[i * w + (j - 1)]);
            }
        }
        dp[n * w + m]
    }

    #[test]
    fn soft_dtw_approaches_classical_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let (n, m) = (rng.random_range(2..=20), rng.random_range(2..=20));
            let a = random_series(&mut rng, n, 2);
            let b = random_series(&mut rng, m, 2);
            let hard = dtw_squared(&a, &b);
            let soft = soft_dtw(&a, &b, 1e-3).unwrap().value;
            assert!(
                (soft - hard).abs() <= 1e-4 * (1.0 + hard.abs()),
                "soft={soft}, hard={hard}"
            );
        }
    }

    #[test]
    fn soft_dtw_self_value_bounded_below() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = random_series(&mut rng, 12, 2);
        let gamma = 1.0;
        let v = soft_dtw(&a, &a, gamma).unwrap().value;
        let bound = -gamma * (a.len() as f64 + a.len() as f64) * 3f64.ln();
        assert!(v <= 0.0 + 1e-12, "soft-min undercuts min: {v}");
        assert!(v >= bound, "{v} >= {bound}");
    }

    #[test]
    fn soft_dtw_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let eps = 1e-5;
        for _ in 0..20 {
            let a = random_series(&mut rng, 5, 2);
            let b = random_series(&mut rng, 5, 2);
            let gamma = *[0.1, 1.0].choose(&mut rng).unwrap();
            let grad = soft_dtw(&a, &b, gamma).unwrap().gradient_wrt_first;
            for i in 0..a.len() {
                for k in 0..a.dims() {
                    let mut plus = a.rows();
                    plus[i][k] += eps;
                    let mut minus = a.rows();
                    minus[i][k] -= eps;
                    let vp = soft_dtw(&Series::from_rows(&plus).unwrap(), &b, gamma)
                        .unwrap()
                        .value;
                    let vm = soft_dtw(&Series::from_rows(&minus).unwrap(), &b, gamma)
                        .unwrap()
                        .value;
                    let fd = (vp - vm) / (2.0 * eps);
                    let got = grad.row(i)[k];
                    assert!(
                        (got - fd).abs() <= 1e-4 * (1.0 + fd.abs()),
                        "grad[{i}][{k}] = {got}, fd = {fd}"
                    );
                }
            }
        }
    }

    #[test]
    fn soft_dtw_rejects_bad_gamma() {
        let a = series(&[&[0.0], &[1.0]]);
        assert!(matches!(
            soft_dtw(&a, &a, 0.0),
            Err(AlignmentError::BadGamma(_))
        ));
    }

    #[test]
    fn triplet_loss_cases() {
        let anchor = series(&[&[0.0], &[1.0], &[2.0]]);
        let positive = series(&[&[0.1], &[1.1], &[2.1]]);
        let negative = series(&[&[5.0], &[6.0], &[7.0]]);

        // positive == negative collapses to the margin
        let l = triplet_loss(&anchor, &positive, &positive, 1.0, 0.7).unwrap();
        assert!((l - 0.7).abs() < 1e-12);

        // hinge at zero when the positive is closer and margin is 0
        let l = triplet_loss(&anchor, &positive, &negative, 1.0, 0.0).unwrap();
        assert_eq!(l, 0.0);

        assert!(matches!(
            triplet_loss(&anchor, &positive, &negative, 1.0, -0.1),
            Err(AlignmentError::BadMargin(_))
        ));
    }

    #[test]
    fn triplet_loss_direct_formula() {
        // d(a,p) = 5, d(a,n) = 3, margin = 1 -> 3, via the hinge formula on
        // fixed soft-dtw values; use degenerate one-row inputs where the
        // soft-dtw value is just the squared distance
        let anchor = series(&[&[0.0]]);
        let positive = series(&[&[f64::sqrt(5.0)]]); // d = 5
        let negative = series(&[&[f64::sqrt(3.0)]]); // d = 3
        let l = triplet_loss(&anchor, &positive, &negative, 1e-6, 1.0).unwrap();
        assert!((l - 3.0).abs() < 1e-9, "{l}");
    }

    proptest! {
        #[test]
        fn dtw_is_symmetric(
            a in proptest::collection::vec(-3.0..3.0f64, 1..12),
            b in proptest::collection::vec(-3.0..3.0f64, 1..12),
        ) {
            let sa = Series::univariate(&a).unwrap();
            let sb = Series::univariate(&b).unwrap();
            let ab = dtw(&sa, &sb, LocalMetric::Euclidean).unwrap().accumulated_cost;
            let ba = dtw(&sb, &sa, LocalMetric::Euclidean).unwrap().accumulated_cost;
            prop_assert_eq!(ab, ba);
        }

        #[test]
        fn dtw_self_cost_is_zero(
            a in proptest::collection::vec(-3.0..3.0f64, 1..12),
        ) {
            let sa = Series::univariate(&a).unwrap();
            prop_assert_eq!(dtw(&sa, &sa, LocalMetric::Euclidean).unwrap().accumulated_cost, 0.0);
        }

        // every monotone path visits all rows and all columns, so the
        // length is bracketed by max(n, m) and n + m - 1; appending a row
        // raises the lower bracket
        #[test]
        fn path_length_respects_structural_bounds(
            a in proptest::collection::vec(-3.0..3.0f64, 1..10),
            b in proptest::collection::vec(-3.0..3.0f64, 1..10),
            extra in -3.0..3.0f64,
        ) {
            let sa = Series::univariate(&a).unwrap();
            let sb = Series::univariate(&b).unwrap();
            let p1 = dtw(&sa, &sb, LocalMetric::Euclidean).unwrap().path_length();
            prop_assert!(p1 >= a.len().max(b.len()));
            prop_assert!(p1 <= a.len() + b.len() - 1);
            let mut longer = b.clone();
            longer.push(extra);
            let sb2 = Series::univariate(&longer).unwrap();
            let p2 = dtw(&sa, &sb2, LocalMetric::Euclidean).unwrap().path_length();
            prop_assert!(p2 >= a.len().max(b.len() + 1));
        }

        #[test]
        fn soft_dtw_value_non_increasing_in_gamma(
            a in proptest::collection::vec(-2.0..2.0f64, 2..10),
            b in proptest::collection::vec(-2.0..2.0f64, 2..10),
        ) {
            let sa = Series::univariate(&a).unwrap();
            let sb = Series::univariate(&b).unwrap();
            let gammas = [0.01, 0.1, 1.0, 10.0];
            let values: Vec<f64> = gammas
                .iter()
                .map(|&g| soft_dtw(&sa, &sb, g).unwrap().value)
                .collect();
            for w in values.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9, "{values:?}");
            }
        }
    }
}

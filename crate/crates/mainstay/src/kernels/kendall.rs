//! Kendall's rank correlation (tau-b, with full tie corrections): a
//! quadratic pair-enumeration form that serves as the oracle, and
//! Knight's merge-sort form that scales as n log n.

use std::sync::Arc;

use super::ensure_finite;
use crate::error::Error;
use crate::pool::ThreadPool;

/// d × d matrix of pairwise correlations: symmetric, unit diagonal,
/// entries in [-1, 1].
pub type CorrelationMatrix = Vec<Vec<f64>>;

fn validate_pair(x: &[f64], y: &[f64]) -> Result<(), Error> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    ensure_finite(x)?;
    ensure_finite(y)
}

/// Final tau-b arithmetic, shared by both algorithms so that equal counts
/// give bit-identical results: (C - D) / sqrt((n0 - n1)(n0 - n2)).
///
/// n0 = all pairs, n1 = pairs tied in x, n2 = pairs tied in y. A zero
/// factor means one variable has no untied pair, which also covers n < 2.
fn tau_from_counts(c_minus_d: i128, n0: i128, n1: i128, n2: i128) -> Result<f64, Error> {
    let untied_x = n0 - n1;
    let untied_y = n0 - n2;
    if untied_x <= 0 || untied_y <= 0 {
        return Err(Error::AllTied);
    }
    Ok(c_minus_d as f64 / ((untied_x as f64) * (untied_y as f64)).sqrt())
}

/// Tau-b by enumerating all n(n-1)/2 pairs. Quadratic; exists as the
/// independent oracle for [`kendall_tau_knight`] and for small inputs.
pub fn kendall_tau_brute(x: &[f64], y: &[f64]) -> Result<f64, Error> {
    validate_pair(x, y)?;
    let n = x.len();
    let mut concordant: i128 = 0;
    let mut discordant: i128 = 0;
    let mut tied_x: i128 = 0;
    let mut tied_y: i128 = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let x_tie = x[i] == x[j];
            let y_tie = y[i] == y[j];
            if x_tie {
                tied_x += 1;
            }
            if y_tie {
                tied_y += 1;
            }
            if !x_tie && !y_tie {
                let same_order = (x[i] < x[j]) == (y[i] < y[j]);
                if same_order {
                    concordant += 1;
                } else {
                    discordant += 1;
                }
            }
        }
    }
    let n0 = (n as i128) * (n as i128 - 1) / 2;
    tau_from_counts(concordant - discordant, n0, tied_x, tied_y)
}

/// Sum over runs of equal adjacent elements of t(t-1)/2: the number of
/// tied pairs in a sorted sequence.
fn tied_pairs<T: PartialEq>(sorted: &[T]) -> i128 {
    let mut pairs: i128 = 0;
    let mut run: i128 = 1;
    for i in 1..sorted.len() {
        if sorted[i] == sorted[i - 1] {
            run += 1;
        } else {
            pairs += run * (run - 1) / 2;
            run = 1;
        }
    }
    if !sorted.is_empty() {
        pairs += run * (run - 1) / 2;
    }
    pairs
}

/// Bottom-up merge sort that counts strict inversions (left > right),
/// taking from the left on equal keys so ties are not counted. Sorts
/// `values` in place as a side effect.
fn sort_counting_inversions(values: &mut [f64]) -> i128 {
    let n = values.len();
    let mut buf = vec![0.0f64; n];
    let mut inversions: i128 = 0;
    let mut width = 1;
    while width < n {
        let mut start = 0;
        while start + width < n {
            let mid = start + width;
            let end = (start + 2 * width).min(n);
            let (mut i, mut j) = (start, mid);
            let mut k = start;
            while i < mid && j < end {
                if values[j] < values[i] {
                    inversions += (mid - i) as i128;
                    buf[k] = values[j];
                    j += 1;
                } else {
                    buf[k] = values[i];
                    i += 1;
                }
                k += 1;
            }
            buf[k..k + (mid - i)].copy_from_slice(&values[i..mid]);
            k += mid - i;
            buf[k..k + (end - j)].copy_from_slice(&values[j..end]);
            values[start..end].copy_from_slice(&buf[start..end]);
            start = end;
        }
        width *= 2;
    }
    inversions
}

/// Tau-b via Knight's method: sort by (x, y), count the exchanges a merge
/// sort needs to order y (the discordant pairs), and correct for ties.
/// Agrees with [`kendall_tau_brute`] to within 1e-12 (bit-identical when
/// the counts match, which the tests assert on random tie-heavy inputs).
pub fn kendall_tau_knight(x: &[f64], y: &[f64]) -> Result<f64, Error> {
    validate_pair(x, y)?;
    let n = x.len();

    // Map -0.0 to 0.0 before sorting so comparison order (total_cmp) and
    // tie detection (==) agree on every value; otherwise a mixed-zero
    // x-run would not sort its y values ascending and a tied pair would
    // be miscounted as discordant. NaN is already rejected.
    let scrub = |v: &f64| if *v == 0.0 { 0.0 } else { *v };
    let sx: Vec<f64> = x.iter().map(scrub).collect();
    let sy: Vec<f64> = y.iter().map(scrub).collect();

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_unstable_by(|&a, &b| {
        sx[a]
            .total_cmp(&sx[b])
            .then_with(|| sy[a].total_cmp(&sy[b]))
    });
    let xs: Vec<f64> = idx.iter().map(|&i| sx[i]).collect();
    let mut ys: Vec<f64> = idx.iter().map(|&i| sy[i]).collect();

    // Tie-pair counts: in x (runs of equal x), jointly in (x, y).
    let tied_x = tied_pairs(&xs);
    let joint: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    let tied_both = tied_pairs(&joint);

    // Within an equal-x run, y is already ascending, so every counted
    // inversion has strictly increasing x and strictly decreasing y: the
    // discordant pairs.
    let discordant = sort_counting_inversions(&mut ys);

    // ys is now sorted; equal-y runs give the y-tie pairs.
    let tied_y = tied_pairs(&ys);

    let n0 = (n as i128) * (n as i128 - 1) / 2;
    // Pairs untied in both variables split into concordant and discordant:
    // C + D = n0 - n1 - n2 + n3, so C - D = n0 - n1 - n2 + n3 - 2D.
    let c_minus_d = n0 - tied_x - tied_y + tied_both - 2 * discordant;
    tau_from_counts(c_minus_d, n0, tied_x, tied_y)
}

/// Sequential pairwise correlation matrix; the oracle for
/// [`kendall_matrix`].
pub fn kendall_matrix_seq(data: &[Vec<f64>]) -> Result<CorrelationMatrix, Error> {
    let d = data.len();
    let mut matrix = vec![vec![0.0; d]; d];
    for i in 0..d {
        matrix[i][i] = 1.0;
        for j in (i + 1)..d {
            let tau = kendall_tau_knight(&data[i], &data[j])?;
            matrix[i][j] = tau;
            matrix[j][i] = tau;
        }
    }
    Ok(matrix)
}

/// Pairwise correlation matrix computed on a pool: one task per row `i`
/// covering the pairs (i, j) for j > i, so early rows carry the most work
/// and the pool's dynamic scheduling absorbs the imbalance. The result is
/// bitwise identical to [`kendall_matrix_seq`] for any worker count.
pub fn kendall_matrix(
    data: &Arc<Vec<Vec<f64>>>,
    pool: &ThreadPool,
) -> Result<CorrelationMatrix, Error> {
    let d = data.len();
    let mut handles = Vec::with_capacity(d);
    for i in 0..d {
        let rows = Arc::clone(data);
        handles.push(pool.push_return(move || -> Result<Vec<f64>, Error> {
            let mut taus = Vec::with_capacity(d - i - 1);
            for j in (i + 1)..d {
                taus.push(kendall_tau_knight(&rows[i], &rows[j])?);
            }
            Ok(taus)
        })?);
    }
    let mut matrix = vec![vec![0.0; d]; d];
    for (i, handle) in handles.into_iter().enumerate() {
        let taus = handle.claim()??;
        matrix[i][i] = 1.0;
        for (offset, tau) in taus.into_iter().enumerate() {
            let j = i + 1 + offset;
            matrix[i][j] = tau;
            matrix[j][i] = tau;
        }
    }
    Ok(matrix)
}

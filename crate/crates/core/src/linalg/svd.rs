//! Golub-Kahan singular value decomposition.
//!
//! Pipeline: Householder bidiagonalization, backward accumulation of the
//! orthogonal factors, then implicit-shift QR on the bidiagonal band with
//! Wilkinson shifts. Wide inputs are handled by decomposing the transpose
//! and swapping the factors.
//!
//! The decomposition is fully deterministic: no randomized pivoting, and a
//! fixed sign convention (the largest-magnitude entry of each left singular
//! vector is non-negative, lowest row index winning ties), so repeated runs
//! and different platforms produce identical factors for identical input.

use alloc::vec;
use alloc::vec::Vec;

use super::{LinalgError, Matrix};
use crate::math;

/// Iteration budget per singular value. The implicit-shift sweep deflates a
/// value every 2-3 iterations in practice; the counter resets whenever the
/// active block shrinks.
const MAX_SWEEPS_PER_VALUE: usize = 75;

/// Relative threshold below which trailing singular values are snapped to
/// exact zero, so rank-deficient inputs report clean zeros instead of noise
/// at the 1e-16 level.
const SIGMA_CLAMP_REL: f64 = 1e-12;

/// Thin SVD `a = u * diag(sigma) * v^T` with `k = min(rows, cols)`.
///
/// `u` is rows x k and `v` is cols x k, both with orthonormal columns;
/// `sigma` is sorted non-increasing and non-negative.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl SvdResult {
    /// Number of singular values (`min` of the original dimensions).
    pub fn k(&self) -> usize {
        self.sigma.len()
    }

    /// `u * diag(sigma) * v^T`, for residual checks.
    pub fn reconstruct(&self) -> Matrix {
        let m = self.u.rows();
        let n = self.v.rows();
        let k = self.sigma.len();
        let mut out = Matrix::zeros(m, n);
        for i in 0..m {
            for l in 0..k {
                let ul_s = self.u.get(i, l) * self.sigma[l];
                if ul_s == 0.0 {
                    continue;
                }
                let out_row = out.row_mut(i);
                for j in 0..n {
                    out_row[j] += ul_s * self.v.get(j, l);
                }
            }
        }
        out
    }
}

/// Computes the thin SVD of `a`.
///
/// Fails with [`LinalgError::NotFinite`] on NaN/infinite input and with
/// [`LinalgError::NoConvergence`] if a singular value refuses to deflate
/// within the per-value sweep budget.
pub fn svd(a: &Matrix) -> Result<SvdResult, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::NotFinite { op: "svd" });
    }
    let mut result = if a.rows() >= a.cols() {
        svd_tall(a)?
    } else {
        let t = svd_tall(&a.transpose())?;
        SvdResult {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        }
    };
    fix_signs(&mut result);
    Ok(result)
}

/// Truncates a decomposition to rank `r`, splitting it into the factor pair
/// `(z, p)` with `z = U_r * diag(sigma_r)` (rows x r) and `p = V_r^T`
/// (r x cols). The rows of `p` are orthonormal by construction.
pub fn truncate(decomp: &SvdResult, r: usize) -> Result<(Matrix, Matrix), LinalgError> {
    let k = decomp.k();
    if r == 0 || r > k {
        return Err(LinalgError::RankOutOfRange { rank: r, max: k });
    }
    let m = decomp.u.rows();
    let n = decomp.v.rows();
    let mut z = Matrix::zeros(m, r);
    for i in 0..m {
        for j in 0..r {
            z.set(i, j, decomp.u.get(i, j) * decomp.sigma[j]);
        }
    }
    let mut p = Matrix::zeros(r, n);
    for j in 0..r {
        for i in 0..n {
            p.set(j, i, decomp.v.get(i, j));
        }
    }
    Ok((z, p))
}

/// SVD for rows >= cols. Scales the input by its largest magnitude first so
/// squared terms inside the shift computation cannot overflow.
fn svd_tall(a: &Matrix) -> Result<SvdResult, LinalgError> {
    let m = a.rows();
    let n = a.cols();
    let scale = a
        .as_slice()
        .iter()
        .fold(0.0f64, |acc, &x| acc.max(math::abs(x)));
    if scale == 0.0 {
        // Zero matrix: any orthonormal pair works; use identity blocks.
        let mut u = Matrix::zeros(m, n);
        for j in 0..n {
            u.set(j, j, 1.0);
        }
        return Ok(SvdResult {
            u,
            sigma: vec![0.0; n],
            v: Matrix::identity(n),
        });
    }

    let mut work = Matrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            work.set(i, j, a.get(i, j) / scale);
        }
    }

    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut tau_left = vec![0.0; n];
    let mut tau_right = vec![0.0; n.saturating_sub(2)];
    bidiagonalize(&mut work, &mut diag, &mut off, &mut tau_left, &mut tau_right);

    let mut u = accumulate_u(&work, &tau_left);
    let mut v = accumulate_v(&work, &tau_right);
    qr_diagonalize(&mut diag, &mut off, &mut u, &mut v)?;

    sort_descending(&mut diag, &mut u, &mut v);
    let clamp = SIGMA_CLAMP_REL * diag[0];
    for s in diag.iter_mut() {
        if *s < clamp {
            *s = 0.0;
        } else {
            *s *= scale;
        }
    }
    Ok(SvdResult { u, sigma: diag, v })
}

/// Reduces `work` (m x n, m >= n) to upper bidiagonal form with alternating
/// left and right Householder reflections.
///
/// Storage follows the LAPACK convention: the essential part of each left
/// reflector (tail below the diagonal, unit leading entry implied) stays in
/// the column it annihilated, each right reflector's tail stays in its row,
/// and the scalar factors go to `tau_left` / `tau_right`. `diag` and `off`
/// receive the bidiagonal band itself.
fn bidiagonalize(
    work: &mut Matrix,
    diag: &mut [f64],
    off: &mut [f64],
    tau_left: &mut [f64],
    tau_right: &mut [f64],
) {
    let m = work.rows();
    let n = work.cols();
    // Scratch for one row of reflector applications, so the m x n panel is
    // walked row-major (twice) instead of column by column.
    let mut s = vec![0.0f64; n];
    for k in 0..n {
        // Left reflector: zero column k below the diagonal.
        let (beta, tau) = make_reflector_col(work, k, m);
        diag[k] = beta;
        tau_left[k] = tau;
        if tau != 0.0 && k + 1 < n {
            // s[j] = tau * (row_k + sum_i v_i * row_i)[j] over j > k.
            s[k + 1..n].copy_from_slice(&work.row(k)[k + 1..n]);
            for i in (k + 1)..m {
                let v_i = work.get(i, k);
                if v_i == 0.0 {
                    continue;
                }
                let row = work.row(i);
                for j in (k + 1)..n {
                    s[j] += v_i * row[j];
                }
            }
            for x in s[k + 1..n].iter_mut() {
                *x *= tau;
            }
            for (w, x) in work.row_mut(k)[k + 1..n].iter_mut().zip(&s[k + 1..n]) {
                *w -= x;
            }
            for i in (k + 1)..m {
                let v_i = work.get(i, k);
                if v_i == 0.0 {
                    continue;
                }
                let row = work.row_mut(i);
                for j in (k + 1)..n {
                    row[j] -= s[j] * v_i;
                }
            }
        }

        if k + 1 >= n {
            continue;
        }
        if k + 2 >= n {
            // Row already bidiagonal; just record the superdiagonal entry.
            off[k] = work.get(k, k + 1);
            continue;
        }
        // Right reflector: zero row k beyond the superdiagonal.
        let (beta, tau) = make_reflector_row(work, k, n);
        off[k] = beta;
        tau_right[k] = tau;
        if tau != 0.0 {
            for i in (k + 1)..m {
                let row = work.row(i);
                let vrow = work.row(k);
                let mut acc = row[k + 1];
                for j in (k + 2)..n {
                    acc += vrow[j] * row[j];
                }
                acc *= tau;
                // Re-borrow mutably; the reflector row k is untouched here.
                let head = acc;
                let (vk, ri) = split_rows(work, k, i);
                ri[k + 1] -= head;
                for j in (k + 2)..n {
                    ri[j] -= head * vk[j];
                }
            }
        }
    }
}

/// Disjoint borrows of rows `a` and `b` (`a < b`): `(&row_a, &mut row_b)`.
fn split_rows(m: &mut Matrix, a: usize, b: usize) -> (&[f64], &mut [f64]) {
    debug_assert!(a < b);
    let cols = m.cols();
    let (head, tail) = m.as_mut_slice().split_at_mut(b * cols);
    (&head[a * cols..(a + 1) * cols], &mut tail[..cols])
}

/// Householder reflector annihilating `work[k+1.., k]`. Returns the new
/// diagonal value and the reflector scale; the normalized tail is written
/// back below the diagonal.
fn make_reflector_col(work: &mut Matrix, k: usize, m: usize) -> (f64, f64) {
    let alpha = work.get(k, k);
    let mut tail_norm = 0.0;
    for i in (k + 1)..m {
        tail_norm = math::hypot(tail_norm, work.get(i, k));
    }
    if tail_norm == 0.0 {
        return (alpha, 0.0);
    }
    let beta = -math::copysign(math::hypot(alpha, tail_norm), alpha);
    let tau = (beta - alpha) / beta;
    // Same-sign denominator; no cancellation.
    let inv = 1.0 / (alpha - beta);
    for i in (k + 1)..m {
        let w = work.get(i, k) * inv;
        work.set(i, k, w);
    }
    (beta, tau)
}

/// Householder reflector annihilating `work[k, k+2..]`; mirror of
/// [`make_reflector_col`] acting on a row.
fn make_reflector_row(work: &mut Matrix, k: usize, n: usize) -> (f64, f64) {
    let alpha = work.get(k, k + 1);
    let mut tail_norm = 0.0;
    for j in (k + 2)..n {
        tail_norm = math::hypot(tail_norm, work.get(k, j));
    }
    if tail_norm == 0.0 {
        return (alpha, 0.0);
    }
    let beta = -math::copysign(math::hypot(alpha, tail_norm), alpha);
    let tau = (beta - alpha) / beta;
    let inv = 1.0 / (alpha - beta);
    for j in (k + 2)..n {
        let w = work.get(k, j) * inv;
        work.set(k, j, w);
    }
    (beta, tau)
}

/// Accumulates the left factor U (m x n) by applying the stored reflectors
/// to an identity block in reverse order. Columns left of `k` have no
/// support in rows `k..m` when reflector `k` is applied, so the inner loops
/// start at column `k`.
fn accumulate_u(work: &Matrix, tau_left: &[f64]) -> Matrix {
    let m = work.rows();
    let n = work.cols();
    let mut u = Matrix::zeros(m, n);
    for j in 0..n {
        u.set(j, j, 1.0);
    }
    let mut s = vec![0.0f64; n];
    for k in (0..n).rev() {
        let tau = tau_left[k];
        if tau == 0.0 {
            continue;
        }
        s[k..n].copy_from_slice(&u.row(k)[k..n]);
        for i in (k + 1)..m {
            let v_i = work.get(i, k);
            if v_i == 0.0 {
                continue;
            }
            let row = u.row(i);
            for j in k..n {
                s[j] += v_i * row[j];
            }
        }
        for x in s[k..n].iter_mut() {
            *x *= tau;
        }
        for (w, x) in u.row_mut(k)[k..n].iter_mut().zip(&s[k..n]) {
            *w -= x;
        }
        for i in (k + 1)..m {
            let v_i = work.get(i, k);
            if v_i == 0.0 {
                continue;
            }
            let row = u.row_mut(i);
            for j in k..n {
                row[j] -= s[j] * v_i;
            }
        }
    }
    u
}

/// Accumulates the right factor V (n x n) from the row reflectors.
/// Reflector `k` acts on rows `k+1..n` of V.
fn accumulate_v(work: &Matrix, tau_right: &[f64]) -> Matrix {
    let n = work.cols();
    let mut v = Matrix::identity(n);
    if n < 3 {
        return v;
    }
    let mut s = vec![0.0f64; n];
    for k in (0..n - 2).rev() {
        let tau = tau_right[k];
        if tau == 0.0 {
            continue;
        }
        s[k + 1..n].copy_from_slice(&v.row(k + 1)[k + 1..n]);
        for i in (k + 2)..n {
            let v_i = work.get(k, i);
            if v_i == 0.0 {
                continue;
            }
            let row = v.row(i);
            for j in (k + 1)..n {
                s[j] += v_i * row[j];
            }
        }
        for x in s[k + 1..n].iter_mut() {
            *x *= tau;
        }
        for (w, x) in v.row_mut(k + 1)[k + 1..n].iter_mut().zip(&s[k + 1..n]) {
            *w -= x;
        }
        for i in (k + 2)..n {
            let v_i = work.get(k, i);
            if v_i == 0.0 {
                continue;
            }
            let row = v.row_mut(i);
            for j in (k + 1)..n {
                row[j] -= s[j] * v_i;
            }
        }
    }
    v
}

/// Plane rotation `(c, s)` with `c*a + s*b = hypot(a, b)` and
/// `c*b - s*a = 0`.
#[inline]
fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else if a == 0.0 {
        (0.0, 1.0)
    } else {
        let r = math::hypot(a, b);
        (a / r, b / r)
    }
}

/// Applies a plane rotation to columns `(p, q)` of `m`:
/// `col_p <- c*col_p + s*col_q`, `col_q <- c*col_q - s*col_p`.
#[inline]
fn rotate_cols(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let cols = m.cols();
    let data = m.as_mut_slice();
    let mut base = 0;
    while base < data.len() {
        let xp = data[base + p];
        let xq = data[base + q];
        data[base + p] = c * xp + s * xq;
        data[base + q] = c * xq - s * xp;
        base += cols;
    }
}

/// Implicit-shift QR on the bidiagonal band, accumulating rotations into
/// `u` and `v`. On return `diag` holds non-negative singular values in
/// arbitrary order and `off` is zero.
fn qr_diagonalize(
    diag: &mut [f64],
    off: &mut [f64],
    u: &mut Matrix,
    v: &mut Matrix,
) -> Result<(), LinalgError> {
    let n = diag.len();
    let eps = f64::EPSILON;
    if n > 0 {
        let mut hi = n - 1;
        let mut sweeps = 0usize;
        while hi > 0 {
            // Deflate the trailing value once its coupling is negligible.
            if math::abs(off[hi - 1]) <= eps * (math::abs(diag[hi - 1]) + math::abs(diag[hi])) {
                off[hi - 1] = 0.0;
                hi -= 1;
                sweeps = 0;
                continue;
            }
            // Active block [lo, hi]: walk up to the first negligible coupling.
            let mut lo = hi - 1;
            while lo > 0 {
                let t = eps * (math::abs(diag[lo - 1]) + math::abs(diag[lo]));
                if math::abs(off[lo - 1]) <= t {
                    off[lo - 1] = 0.0;
                    break;
                }
                lo -= 1;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS_PER_VALUE {
                return Err(LinalgError::NoConvergence {
                    iterations: MAX_SWEEPS_PER_VALUE,
                });
            }

            let mut block_scale = 0.0f64;
            for i in lo..=hi {
                block_scale = block_scale.max(math::abs(diag[i]));
                if i < hi {
                    block_scale = block_scale.max(math::abs(off[i]));
                }
            }
            if block_scale == 0.0 {
                // Entire block is zero; the deflation test clears it.
                for e in off[lo..hi].iter_mut() {
                    *e = 0.0;
                }
                continue;
            }

            // A zero diagonal inside the block would stall the shifted
            // sweep; chase its coupling out of the band first.
            if let Some(i) = (lo..hi).find(|&i| math::abs(diag[i]) <= eps * block_scale) {
                chase_zero_row(diag, off, u, i, hi);
                continue;
            }
            if math::abs(diag[hi]) <= eps * block_scale {
                chase_zero_col(diag, off, v, lo, hi);
                continue;
            }

            qr_sweep(diag, off, u, v, lo, hi);
        }
    }
    // Singular values must be non-negative; fold signs into U.
    for i in 0..n {
        if diag[i] < 0.0 {
            diag[i] = -diag[i];
            negate_col(u, i);
        }
    }
    Ok(())
}

/// `diag[i]` is zero: rotate row `i` against rows `i+1..=hi` from the left,
/// pushing the stray superdiagonal entry off the end of the band.
fn chase_zero_row(diag: &mut [f64], off: &mut [f64], u: &mut Matrix, i: usize, hi: usize) {
    diag[i] = 0.0;
    let mut z = off[i];
    off[i] = 0.0;
    for j in (i + 1)..=hi {
        let (c, s) = givens(diag[j], z);
        diag[j] = c * diag[j] + s * z;
        if j < hi {
            z = -s * off[j];
            off[j] = c * off[j];
        }
        rotate_cols(u, j, i, c, s);
    }
}

/// `diag[hi]` is zero: rotate column `hi` against columns `hi-1..=lo` from
/// the right, pushing the stray entry up and out of the band.
fn chase_zero_col(diag: &mut [f64], off: &mut [f64], v: &mut Matrix, lo: usize, hi: usize) {
    diag[hi] = 0.0;
    let mut z = off[hi - 1];
    off[hi - 1] = 0.0;
    for j in (lo..hi).rev() {
        let (c, s) = givens(diag[j], z);
        diag[j] = c * diag[j] + s * z;
        if j > lo {
            z = -s * off[j - 1];
            off[j - 1] = c * off[j - 1];
        }
        rotate_cols(v, j, hi, c, s);
    }
}

/// One implicit-shift QR sweep over the block `[lo, hi]`. The shift is the
/// eigenvalue of the trailing 2x2 of B^T B closest to its last entry
/// (Wilkinson); the first rotation introduces a bulge that the remaining
/// rotation pairs chase down the band.
fn qr_sweep(
    diag: &mut [f64],
    off: &mut [f64],
    u: &mut Matrix,
    v: &mut Matrix,
    lo: usize,
    hi: usize,
) {
    let d_prev = diag[hi - 1];
    let e_prev = if hi >= 2 && hi - 2 >= lo { off[hi - 2] } else { 0.0 };
    let t11 = d_prev * d_prev + e_prev * e_prev;
    let t12 = d_prev * off[hi - 1];
    let t22 = diag[hi] * diag[hi] + off[hi - 1] * off[hi - 1];
    let delta = (t11 - t22) / 2.0;
    let denom = delta + math::copysign(math::hypot(delta, t12), delta);
    let mu = if denom == 0.0 { t22 } else { t22 - t12 * t12 / denom };

    let mut x = diag[lo] * diag[lo] - mu;
    let mut z = diag[lo] * off[lo];
    for k in lo..hi {
        let (c, s) = givens(x, z);
        if k > lo {
            off[k - 1] = c * x + s * z;
        }
        // Right rotation on columns (k, k+1) of B.
        let dk = diag[k];
        let ek = off[k];
        let dk1 = diag[k + 1];
        diag[k] = c * dk + s * ek;
        off[k] = c * ek - s * dk;
        let bulge = s * dk1;
        diag[k + 1] = c * dk1;
        rotate_cols(v, k, k + 1, c, s);

        // Left rotation on rows (k, k+1) annihilates the bulge.
        let (c2, s2) = givens(diag[k], bulge);
        diag[k] = c2 * diag[k] + s2 * bulge;
        let ek = off[k];
        let dk1 = diag[k + 1];
        off[k] = c2 * ek + s2 * dk1;
        diag[k + 1] = c2 * dk1 - s2 * ek;
        if k + 1 < hi {
            let ek1 = off[k + 1];
            off[k + 1] = c2 * ek1;
            x = off[k];
            z = s2 * ek1;
        }
        rotate_cols(u, k, k + 1, c2, s2);
    }
}

/// Selection sort, largest singular value first, swapping the matching
/// columns of U and V alongside.
fn sort_descending(sigma: &mut [f64], u: &mut Matrix, v: &mut Matrix) {
    let k = sigma.len();
    for i in 0..k {
        let mut best = i;
        for j in (i + 1)..k {
            if sigma[j] > sigma[best] {
                best = j;
            }
        }
        if best != i {
            sigma.swap(i, best);
            swap_cols(u, i, best);
            swap_cols(v, i, best);
        }
    }
}

/// Fixed sign convention: the largest-magnitude entry in each column of U
/// is made non-negative (ties broken by lowest row index), negating the
/// paired column of V to keep the product unchanged.
fn fix_signs(r: &mut SvdResult) {
    for j in 0..r.sigma.len() {
        let mut pivot = 0.0f64;
        let mut pivot_row = 0;
        for i in 0..r.u.rows() {
            let a = math::abs(r.u.get(i, j));
            if a > pivot {
                pivot = a;
                pivot_row = i;
            }
        }
        if r.u.get(pivot_row, j) < 0.0 {
            negate_col(&mut r.u, j);
            negate_col(&mut r.v, j);
        }
    }
}

fn swap_cols(m: &mut Matrix, a: usize, b: usize) {
    for i in 0..m.rows() {
        let t = m.get(i, a);
        m.set(i, a, m.get(i, b));
        m.set(i, b, t);
    }
}

fn negate_col(m: &mut Matrix, j: usize) {
    for i in 0..m.rows() {
        let x = m.get(i, j);
        m.set(i, j, -x);
    }
}

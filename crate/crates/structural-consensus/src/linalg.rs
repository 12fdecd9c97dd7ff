//! Minimal dense real matrices and a nonsymmetric eigensolver.
//!
//! Everything in this crate works on small dense matrices (N ≤ 64), so the
//! representation is a flat row-major `Vec<f64>` and the eigensolver is the
//! classic Hessenberg reduction followed by Francis double-shift QR, derived
//! from the Algol procedures `orthes`/`hqr2` (Martin & Wilkinson, Handbook for
//! Automatic Computation Vol. II) via their EISPACK/JAMA descendants, with the
//! Schur-vector bookkeeping stripped since only eigenvalues are needed.

use num_complex::Complex64;
use std::ops::{Index, IndexMut};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    /// QR iteration exhausted its sweep budget (100·N double-shift sweeps).
    #[error("eigenvalue iteration failed to converge within {0} QR sweeps")]
    NoConvergence(usize),
}

/// Dense row-major matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds from explicit rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            assert_eq!(row.len(), n_cols, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: n_rows, cols: n_cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// Square submatrix keeping the given row/column indices, in order.
    pub fn submatrix(&self, keep: &[usize]) -> Matrix {
        assert!(self.is_square());
        let mut out = Matrix::zeros(keep.len(), keep.len());
        for (i, &r) in keep.iter().enumerate() {
            for (j, &c) in keep.iter().enumerate() {
                out[(i, j)] = self[(r, c)];
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// All eigenvalues of a square real matrix, in deflation order.
///
/// Hessenberg reduction (Householder similarity) followed by Francis
/// double-shift QR with the standard exceptional shifts. The sweep budget is
/// 100·N; exceeding it returns [`LinalgError::NoConvergence`].
pub fn eigenvalues(m: &Matrix) -> Result<Vec<Complex64>, LinalgError> {
    assert!(m.is_square(), "eigenvalues of a non-square matrix");
    let n = m.rows;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h: Vec<Vec<f64>> = (0..n)
        .map(|i| m.data[i * n..(i + 1) * n].to_vec())
        .collect();
    hessenberg(&mut h);
    hqr(&mut h)
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg(h: &mut [Vec<f64>]) {
    let n = h.len();
    if n < 3 {
        return;
    }
    let high = n - 1;
    let mut ort = vec![0.0; n];
    for m in 1..high {
        let mut scale = 0.0;
        for row in h.iter().take(high + 1).skip(m) {
            scale += row[m - 1].abs();
        }
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[i][m - 1] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;
        // Similarity H <- (I - u uᵀ/hh) H (I - u uᵀ/hh).
        for j in m..n {
            let mut f = 0.0;
            for i in (m..=high).rev() {
                f += ort[i] * h[i][j];
            }
            f /= hh;
            for i in m..=high {
                h[i][j] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let mut f = 0.0;
            for j in (m..=high).rev() {
                f += ort[j] * h[i][j];
            }
            f /= hh;
            for j in m..=high {
                h[i][j] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[m][m - 1] = scale * g;
    }
    // Entries below the subdiagonal are mathematically zero now; clear the
    // stale Householder workspace.
    for i in 2..n {
        for j in 0..i - 1 {
            h[i][j] = 0.0;
        }
    }
}

/// Eigenvalues of an upper Hessenberg matrix by double-shift QR.
fn hqr(h: &mut [Vec<f64>]) -> Result<Vec<Complex64>, LinalgError> {
    let n = h.len();
    let cap = 100 * n;
    let eps = f64::EPSILON;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];

    let mut norm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            norm += h[i][j].abs();
        }
    }
    if norm == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); n]);
    }

    let mut en = n as isize - 1;
    let mut exshift = 0.0;
    let mut iter = 0usize;
    let mut sweeps = 0usize;
    let (mut p, mut q, mut r, mut s, mut w, mut x, mut y, mut z);
    r = 0.0;
    p = 0.0;
    q = 0.0;

    while en >= 0 {
        let enu = en as usize;

        // Look for a negligible subdiagonal element.
        let mut l = en;
        while l > 0 {
            let lu = l as usize;
            s = h[lu - 1][lu - 1].abs() + h[lu][lu].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[lu][lu - 1].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == en {
            // One real root.
            d[enu] = h[enu][enu] + exshift;
            e[enu] = 0.0;
            en -= 1;
            iter = 0;
        } else if l == en - 1 {
            // A 2×2 block deflates to a real or complex pair. The Schur-form
            // rotation is skipped: it only touches the deflated rows/columns.
            let enm = enu - 1;
            w = h[enu][enm] * h[enm][enu];
            p = (h[enm][enm] - h[enu][enu]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            x = h[enu][enu] + exshift;
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                d[enm] = x + z;
                d[enu] = if z != 0.0 { x - w / z } else { d[enm] };
                e[enm] = 0.0;
                e[enu] = 0.0;
            } else {
                d[enm] = x + p;
                d[enu] = x + p;
                e[enm] = z;
                e[enu] = -z;
            }
            en -= 2;
            iter = 0;
        } else {
            // Form the shift.
            x = h[enu][enu];
            y = 0.0;
            w = 0.0;
            if l < en {
                y = h[enu - 1][enu - 1];
                w = h[enu][enu - 1] * h[enu - 1][enu];
            }
            if iter == 10 {
                // Wilkinson's exceptional shift. The whole unreduced block is
                // shifted, not just rows above the current negligibility cut:
                // the cut can move lower on later sweeps and deflations there
                // still add back the accumulated exshift.
                exshift += x;
                for i in 0..=enu {
                    h[i][i] -= x;
                }
                s = h[enu][enu - 1].abs() + h[enu - 1][enu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=enu {
                        h[i][i] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            sweeps += 1;
            if sweeps > cap {
                return Err(LinalgError::NoConvergence(cap));
            }

            // Look for two consecutive small subdiagonal elements.
            let mut m = en - 2;
            while m >= l {
                let mu = m as usize;
                z = h[mu][mu];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[mu + 1][mu] + h[mu][mu + 1];
                q = h[mu + 1][mu + 1] - z - r - s;
                r = h[mu + 2][mu + 1];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[mu][mu - 1].abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (h[mu - 1][mu - 1].abs() + z.abs() + h[mu + 1][mu + 1].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=en {
                let iu = i as usize;
                h[iu][iu - 2] = 0.0;
                if i > m + 2 {
                    h[iu][iu - 3] = 0.0;
                }
            }

            // Double QR sweep on rows l..=en, columns m..=en.
            for k in m..=(en - 1) {
                let ku = k as usize;
                let notlast = k != en - 1;
                if k != m {
                    p = h[ku][ku - 1];
                    q = h[ku + 1][ku - 1];
                    r = if notlast { h[ku + 2][ku - 1] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s == 0.0 {
                    continue;
                }
                if k != m {
                    h[ku][ku - 1] = -s * x;
                } else if l != m {
                    h[ku][ku - 1] = -h[ku][ku - 1];
                }
                p += s;
                x = p / s;
                y = q / s;
                z = r / s;
                q /= p;
                r /= p;
                for j in ku..n {
                    p = h[ku][j] + q * h[ku + 1][j];
                    if notlast {
                        p += r * h[ku + 2][j];
                        h[ku + 2][j] -= p * z;
                    }
                    h[ku][j] -= p * x;
                    h[ku + 1][j] -= p * y;
                }
                let upper = enu.min(ku + 3);
                for i in 0..=upper {
                    p = x * h[i][ku] + y * h[i][ku + 1];
                    if notlast {
                        p += z * h[i][ku + 2];
                        h[i][ku + 2] -= p * r;
                    }
                    h[i][ku] -= p;
                    h[i][ku + 1] -= p * q;
                }
            }
        }
    }

    Ok(d.into_iter().zip(e).map(|(re, im)| Complex64::new(re, im)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Characteristic polynomial coefficients by the Faddeev–LeVerrier
    /// recurrence: p(λ) = λⁿ + c₁λⁿ⁻¹ + … + cₙ. Independent of the QR path.
    fn char_poly(m: &Matrix) -> Vec<f64> {
        let n = m.rows();
        let mut coeffs = Vec::with_capacity(n);
        let mut mk = m.clone();
        for k in 1..=n {
            let trace: f64 = (0..n).map(|i| mk[(i, i)]).sum();
            let ck = -trace / k as f64;
            coeffs.push(ck);
            if k == n {
                break;
            }
            // mk <- A·(mk + ck·I)
            let mut shifted = mk.clone();
            for i in 0..n {
                shifted[(i, i)] += ck;
            }
            let mut next = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for t in 0..n {
                        acc += m[(i, t)] * shifted[(t, j)];
                    }
                    next[(i, j)] = acc;
                }
            }
            mk = next;
        }
        coeffs
    }

    fn eval_poly(coeffs: &[f64], z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for &c in coeffs {
            acc = acc * z + c;
        }
        acc
    }

    /// Durand–Kerner simultaneous root iteration on the monic polynomial.
    fn poly_roots(coeffs: &[f64]) -> Vec<Complex64> {
        let n = coeffs.len();
        let seed = Complex64::new(0.4, 0.9);
        let mut roots: Vec<Complex64> = (0..n).map(|i| seed.powu(i as u32 + 1)).collect();
        for _ in 0..1000 {
            let mut shift = 0.0f64;
            for i in 0..n {
                let mut denom = Complex64::new(1.0, 0.0);
                for j in 0..n {
                    if j != i {
                        denom *= roots[i] - roots[j];
                    }
                }
                let delta = eval_poly(coeffs, roots[i]) / denom;
                roots[i] -= delta;
                shift = shift.max(delta.norm());
            }
            if shift < 1e-13 {
                break;
            }
        }
        roots
    }

    /// Greedy nearest matching: every computed eigenvalue must sit within
    /// `tol` of a distinct oracle root.
    fn assert_spectra_match(computed: &[Complex64], oracle: &[Complex64], tol: f64) {
        assert_eq!(computed.len(), oracle.len());
        let mut used = vec![false; oracle.len()];
        for c in computed {
            let mut best = None;
            let mut best_d = f64::INFINITY;
            for (i, o) in oracle.iter().enumerate() {
                if !used[i] && (c - o).norm() < best_d {
                    best_d = (c - o).norm();
                    best = Some(i);
                }
            }
            let i = best.expect("oracle root available");
            assert!(
                best_d <= tol,
                "eigenvalue {c} is {best_d:.3e} from nearest oracle root {}",
                oracle[i]
            );
            used[i] = true;
        }
    }

    #[test]
    fn triangular_two_by_two() {
        let m = Matrix::from_rows(&[vec![0.0, 0.0], vec![-1.0, 1.0]]);
        let mut eigs = eigenvalues(&m).unwrap();
        eigs.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((eigs[0] - Complex64::new(0.0, 0.0)).norm() < 1e-12);
        assert!((eigs[1] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn identity_three() {
        let eigs = eigenvalues(&Matrix::identity(3)).unwrap();
        for e in eigs {
            assert!((e - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn empty_and_singleton() {
        assert!(eigenvalues(&Matrix::zeros(0, 0)).unwrap().is_empty());
        let m = Matrix::from_rows(&[vec![4.25]]);
        assert_eq!(eigenvalues(&m).unwrap(), vec![Complex64::new(4.25, 0.0)]);
    }

    #[test]
    fn rotation_gives_pure_imaginary_pair() {
        let m = Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]);
        let eigs = eigenvalues(&m).unwrap();
        let mut ims: Vec<f64> = eigs.iter().map(|e| e.im).collect();
        ims.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ims[0] + 1.0).abs() < 1e-12 && (ims[1] - 1.0).abs() < 1e-12);
        assert!(eigs.iter().all(|e| e.re.abs() < 1e-12));
    }

    #[test]
    fn zero_matrix() {
        let eigs = eigenvalues(&Matrix::zeros(4, 4)).unwrap();
        assert!(eigs.iter().all(|e| e.norm() == 0.0));
    }

    #[test]
    fn random_matrices_match_char_poly_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..60 {
            let n = 2 + trial % 7;
            let mut m = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = rng.gen_range(-1.0..1.0);
                }
            }
            let eigs = eigenvalues(&m).unwrap();
            let oracle = poly_roots(&char_poly(&m));
            let scale = 1.0 + m.frobenius_norm();
            assert_spectra_match(&eigs, &oracle, 1e-6 * scale);
        }
    }

    #[test]
    fn characteristic_residual_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = 6;
            let mut m = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = rng.gen_range(-2.0..2.0);
                }
            }
            let coeffs = char_poly(&m);
            let scale = (1.0 + m.frobenius_norm()).powi(n as i32);
            for e in eigenvalues(&m).unwrap() {
                let residual = eval_poly(&coeffs, e).norm();
                assert!(
                    residual <= 1e-8 * scale,
                    "characteristic residual {residual:.3e} exceeds bound {:.3e}",
                    1e-8 * scale
                );
            }
        }
    }

    #[test]
    fn defective_jordan_block_converges() {
        // Eigenvalue 2 with algebraic multiplicity 3, geometric multiplicity 1.
        let m = Matrix::from_rows(&[
            vec![2.0, 1.0, 0.0],
            vec![0.0, 2.0, 1.0],
            vec![0.0, 0.0, 2.0],
        ]);
        for e in eigenvalues(&m).unwrap() {
            assert!((e - Complex64::new(2.0, 0.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn submatrix_keeps_selected_block() {
        let m = Matrix::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![4.0, 5.0, 6.0],
            vec![7.0, 8.0, 9.0],
        ]);
        let s = m.submatrix(&[0, 2]);
        assert_eq!(s, Matrix::from_rows(&[vec![1.0, 3.0], vec![7.0, 9.0]]));
    }

    #[test]
    fn mul_vec_matches_hand_computation() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(m.mul_vec(&[1.0, -1.0]), vec![-1.0, -1.0]);
    }
}

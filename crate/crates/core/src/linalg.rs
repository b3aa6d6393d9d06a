//! Small dense linear algebra: row-major matrices, PSD Cholesky, symmetric
//! eigenvalues and Householder QR.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{abs, dot, sqrt};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// y = A x.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot(self.row(i), x);
        }
    }

    /// y = Aᵀ x, accumulated row by row.
    pub fn matvec_t_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(y.len(), self.cols);
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (yj, &aij) in y.iter_mut().zip(self.row(i)) {
                *yj += aij * xi;
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.cols];
        self.matvec_t_into(x, &mut y);
        y
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                for (o, &b) in out.row_mut(i).iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Upper-left `k×k` block.
    pub fn leading_block(&self, k: usize) -> Mat {
        Mat::from_fn(k, k, |i, j| self[(i, j)])
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| f64::max(m, abs(a - b)))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| f64::max(m, abs(*a)))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self.max_abs().max(1.0);
        (0..self.rows).all(|i| (0..i).all(|j| abs(self[(i, j)] - self[(j, i)]) <= tol * scale))
    }

    /// Replaces the matrix by (A + Aᵀ)/2.
    pub fn symmetrize(&mut self) {
        for i in 0..self.rows {
            for j in 0..i {
                let m = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = m;
                self[(j, i)] = m;
            }
        }
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular L with L Lᵀ = A for symmetric PSD A.
///
/// Pivots at or below `tol · max diag` are treated as zero and their column
/// is zeroed, so rank-deficient covariances still factor. Row `i` of L
/// depends only on the leading `(i+1)×(i+1)` block of A, which makes the
/// factor of a leading block the leading block of the factor.
pub fn cholesky_psd(a: &Mat, tol: f64) -> Mat {
    let n = a.rows;
    let scale = (0..n).fold(0.0f64, |m, i| m.max(a[(i, i)]));
    let floor = tol * scale.max(f64::MIN_POSITIVE);
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
            if i == j {
                l[(i, i)] = if s > floor { sqrt(s) } else { 0.0 };
            } else {
                let ljj = l[(j, j)];
                l[(i, j)] = if ljj > 0.0 { s / ljj } else { 0.0 };
            }
        }
    }
    l
}

/// Eigenvalues of a symmetric matrix in ascending order.
///
/// Householder reduction to tridiagonal form followed by implicit QL with
/// Wilkinson-type shifts.
pub fn sym_eigenvalues(a: &Mat) -> Result<Vec<f64>> {
    if a.rows != a.cols {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            got: a.cols,
        });
    }
    let n = a.rows;
    let (mut d, mut e) = tridiagonalize(a);
    tql(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    debug_assert_eq!(d.len(), n);
    Ok(d)
}

fn tridiagonalize(a: &Mat) -> (Vec<f64>, Vec<f64>) {
    let n = a.rows;
    let mut m = a.clone();
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let lo = k + 1;
        let xnorm = sqrt((lo..n).map(|i| m[(i, k)] * m[(i, k)]).sum::<f64>());
        if xnorm == 0.0 {
            continue;
        }
        let x0 = m[(lo, k)];
        let alpha = if x0 >= 0.0 { -xnorm } else { xnorm };
        for i in lo..n {
            v[i] = m[(i, k)];
        }
        v[lo] -= alpha;
        let vtv: f64 = (lo..n).map(|i| v[i] * v[i]).sum();
        if vtv == 0.0 {
            continue;
        }
        let beta = 2.0 / vtv;
        for i in lo..n {
            p[i] = beta * dot(&m.row(i)[lo..n], &v[lo..n]);
        }
        let kk = 0.5 * beta * (lo..n).map(|i| v[i] * p[i]).sum::<f64>();
        for i in lo..n {
            p[i] -= kk * v[i];
        }
        for i in lo..n {
            let (vi, wi) = (v[i], p[i]);
            let row = m.row_mut(i);
            for j in lo..n {
                row[j] -= vi * p[j] + wi * v[j];
            }
        }
        m[(lo, k)] = alpha;
        m[(k, lo)] = alpha;
        for i in lo + 1..n {
            m[(i, k)] = 0.0;
            m[(k, i)] = 0.0;
        }
    }
    let d = (0..n).map(|i| m[(i, i)]).collect();
    let mut e: Vec<f64> = (0..n.saturating_sub(1)).map(|i| m[(i + 1, i)]).collect();
    e.push(0.0);
    (d, e)
}

fn tql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = abs(d[m]) + abs(d[m + 1]);
                if abs(e[m]) <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(Error::InvalidArgument(
                    "tridiagonal QL iteration did not converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = libm::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + libm::copysign(r, g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = libm::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Condition number λ_max/λ_min of a symmetric PSD matrix; infinite when singular.
pub fn condition_number(a: &Mat) -> Result<f64> {
    let ev = sym_eigenvalues(a)?;
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if lo <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(hi / lo)
}

/// Inverse of a symmetric positive definite matrix, failing when the
/// condition number exceeds `max_condition`.
pub fn spd_inverse(a: &Mat, max_condition: f64) -> Result<Mat> {
    let n = a.rows;
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let cond = condition_number(a)?;
    if !(cond <= max_condition) {
        return Err(Error::Singular(cond));
    }
    let l = cholesky_psd(a, 0.0);
    let mut inv = Mat::zeros(n, n);
    let mut col = vec![0.0; n];
    for k in 0..n {
        // forward solve L y = e_k
        for i in 0..n {
            let rhs = if i == k { 1.0 } else { 0.0 };
            col[i] = (rhs - dot(&l.row(i)[..i], &col[..i])) / l[(i, i)];
        }
        // back solve Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = col[i];
            for j in i + 1..n {
                s -= l[(j, i)] * col[j];
            }
            col[i] = s / l[(i, i)];
        }
        for i in 0..n {
            inv[(i, k)] = col[i];
        }
    }
    inv.symmetrize();
    Ok(inv)
}

/// Orthogonal factor of the QR decomposition of a square matrix, with
/// columns signed so that R has a positive diagonal. Applied to a matrix of
/// i.i.d. standard normals this is Haar distributed.
pub fn qr_orthogonal_factor(a: &Mat) -> Result<Mat> {
    if a.rows != a.cols {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            got: a.cols,
        });
    }
    let n = a.rows;
    // Column-major working copy so reflectors touch contiguous memory.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.col(j)).collect();
    let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n);
    let mut rdiag_sign = vec![1.0; n];
    for k in 0..n {
        let x = &cols[k][k..];
        let xnorm = sqrt(dot(x, x));
        let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vtv = dot(&v, &v);
        let beta = if vtv > 0.0 { 2.0 / vtv } else { 0.0 };
        for col in cols.iter_mut().skip(k) {
            let s = beta * dot(&v, &col[k..]);
            if s != 0.0 {
                for (c, vi) in col[k..].iter_mut().zip(&v) {
                    *c -= s * vi;
                }
            }
        }
        let rkk = if beta == 0.0 { cols[k][k] } else { alpha };
        rdiag_sign[k] = if rkk < 0.0 { -1.0 } else { 1.0 };
        reflectors.push((v, beta));
    }
    // Q = H_0 H_1 ... H_{n-1}, accumulated backwards onto the identity.
    let mut q: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut c = vec![0.0; n];
            c[j] = 1.0;
            c
        })
        .collect();
    for k in (0..n).rev() {
        let (v, beta) = &reflectors[k];
        if *beta == 0.0 {
            continue;
        }
        for col in q.iter_mut() {
            let s = beta * dot(v, &col[k..]);
            if s != 0.0 {
                for (c, vi) in col[k..].iter_mut().zip(v) {
                    *c -= s * vi;
                }
            }
        }
    }
    Ok(Mat::from_fn(n, n, |i, j| q[j][i] * rdiag_sign[j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{normal, seeded};

    fn random_sym(n: usize, seed: u64) -> Mat {
        let mut rng = seeded(seed, 0);
        let mut a = Mat::from_fn(n, n, |_, _| normal(&mut rng));
        a.symmetrize();
        a
    }

    #[test]
    fn eigenvalues_of_known_matrices() {
        let a = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let ev = sym_eigenvalues(&a).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
        let d = Mat::from_fn(4, 4, |i, j| if i == j { [3.0, -1.0, 0.5, 2.0][i] } else { 0.0 });
        assert_eq!(sym_eigenvalues(&d).unwrap(), vec![-1.0, 0.5, 2.0, 3.0]);
    }

    #[test]
    fn eigenvalues_preserve_trace_and_frobenius() {
        let a = random_sym(40, 3);
        let ev = sym_eigenvalues(&a).unwrap();
        let tr: f64 = (0..40).map(|i| a[(i, i)]).sum();
        let fro: f64 = a.data.iter().map(|x| x * x).sum();
        assert!((ev.iter().sum::<f64>() - tr).abs() < 1e-10);
        assert!((ev.iter().map(|x| x * x).sum::<f64>() - fro).abs() < 1e-9);
    }

    #[test]
    fn cholesky_reconstructs_and_nests() {
        let b = random_sym(5, 9);
        let a = b.matmul(&b.transpose()).unwrap();
        let l = cholesky_psd(&a, 1e-14);
        let back = l.matmul(&l.transpose()).unwrap();
        assert!(back.max_abs_diff(&a) < 1e-10);
        let l3 = cholesky_psd(&a.leading_block(3), 1e-14);
        assert_eq!(l3, l.leading_block(3));
    }

    #[test]
    fn cholesky_tolerates_rank_deficiency() {
        let a = Mat::from_rows(&[vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 2.0]])
            .unwrap();
        let l = cholesky_psd(&a, 1e-12);
        assert!(l.matmul(&l.transpose()).unwrap().max_abs_diff(&a) < 1e-12);
        assert_eq!(l[(1, 1)], 0.0);
    }

    #[test]
    fn spd_inverse_and_singularity() {
        let a = Mat::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let inv = spd_inverse(&a, 1e12).unwrap();
        let id = a.matmul(&inv).unwrap();
        assert!(id.max_abs_diff(&Mat::identity(2)) < 1e-14);
        let s = Mat::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(spd_inverse(&s, 1e12), Err(Error::Singular(_))));
    }

    #[test]
    fn qr_factor_is_orthogonal_with_positive_r() {
        let mut rng = seeded(4, 0);
        let a = Mat::from_fn(12, 12, |_, _| normal(&mut rng));
        let q = qr_orthogonal_factor(&a).unwrap();
        let qtq = q.transpose().matmul(&q).unwrap();
        assert!(qtq.max_abs_diff(&Mat::identity(12)) < 1e-13);
        let r = q.transpose().matmul(&a).unwrap();
        for i in 0..12 {
            assert!(r[(i, i)] > 0.0);
            for j in 0..i {
                assert!(r[(i, j)].abs() < 1e-12);
            }
        }
    }
}

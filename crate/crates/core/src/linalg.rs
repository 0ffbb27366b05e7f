//! Dense row-major matrices, covariance, and a symmetric eigenvalue solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stats;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds from equal-length columns.
    pub fn from_columns(columns: &[Vec<T>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::LengthMismatch {
                    expected: rows,
                    actual: c.len(),
                });
            }
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols + j])
            .collect()
    }

    pub fn push_row(&mut self, row: &[T]) -> Result<()> {
        if row.len() != self.cols {
            return Err(Error::LengthMismatch {
                expected: self.cols,
                actual: row.len(),
            });
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        if self.cols != other.cols {
            return Err(Error::LengthMismatch {
                expected: self.cols,
                actual: other.cols,
            });
        }
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Ok(Matrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn select_columns(&self, columns: &[usize]) -> Matrix<T> {
        let mut m = Matrix::zeros(self.rows, columns.len());
        for i in 0..self.rows {
            for (jj, &j) in columns.iter().enumerate() {
                m[(i, jj)] = self[(i, j)];
            }
        }
        m
    }

    /// Square submatrix on the given row/column indices.
    pub fn principal_submatrix(&self, indices: &[usize]) -> Matrix<T> {
        let mut m = Matrix::zeros(indices.len(), indices.len());
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                m[(a, b)] = self[(i, j)];
            }
        }
        m
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Population covariance matrix of the columns.
pub fn covariance<T: Real>(m: &Matrix<T>) -> Matrix<T> {
    let (n, p) = (m.rows(), m.cols());
    let mut cov = Matrix::zeros(p, p);
    if n == 0 {
        return cov;
    }
    let means: Vec<T> = (0..p).map(|j| stats::mean(&m.column(j))).collect();
    for i in 0..n {
        let row = m.row(i);
        for a in 0..p {
            let da = row[a] - means[a];
            for b in a..p {
                cov[(a, b)] += da * (row[b] - means[b]);
            }
        }
    }
    let nf = T::count(n);
    for a in 0..p {
        for b in a..p {
            let v = cov[(a, b)] / nf;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    cov
}

/// Correlation from a covariance entry; zero when either variance vanishes.
pub fn correlation_from_cov<T: Real>(cov_xy: T, var_x: T, var_y: T) -> T {
    let denom = (var_x * var_y).sqrt();
    if denom > T::zero() {
        (cov_xy / denom).max(-T::one()).min(T::one())
    } else {
        T::zero()
    }
}

/// Eigenvalues of a symmetric matrix, sorted descending.
///
/// Householder reduction to tridiagonal form followed by implicit QL iterations.
pub fn symmetric_eigenvalues<T: Real>(m: &Matrix<T>) -> Result<Vec<T>> {
    let n = m.rows();
    if n != m.cols() {
        return Err(Error::Invalid(format!(
            "matrix is {}x{}, not square",
            n,
            m.cols()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = m.clone();
    let (mut d, mut e) = tridiagonalize(&mut a);
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    Ok(d)
}

/// Householder reduction; returns the diagonal and the sub-diagonal (`e[0]` unused).
fn tridiagonalize<T: Real>(a: &mut Matrix<T>) -> (Vec<T>, Vec<T>) {
    let n = a.rows();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = T::zero();
        if l > 0 {
            let scale: T = (0..=l).map(|k| a[(i, k)].abs()).sum();
            if scale == T::zero() {
                e[i] = a[(i, l)];
            } else {
                for k in 0..=l {
                    a[(i, k)] /= scale;
                    h += a[(i, k)] * a[(i, k)];
                }
                let f = a[(i, l)];
                let g = if f >= T::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[(i, l)] = f - g;
                let mut f = T::zero();
                for j in 0..=l {
                    let mut g = T::zero();
                    for k in 0..=j {
                        g += a[(j, k)] * a[(i, k)];
                    }
                    for k in j + 1..=l {
                        g += a[(k, j)] * a[(i, k)];
                    }
                    e[j] = g / h;
                    f += e[j] * a[(i, j)];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        let v = f * e[k] + g * a[(i, k)];
                        a[(j, k)] -= v;
                    }
                }
            }
        } else {
            e[i] = a[(i, l)];
        }
        d[i] = h;
    }
    for (i, di) in d.iter_mut().enumerate() {
        *di = a[(i, i)];
    }
    (d, e)
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix; eigenvalues land in `d`.
fn tridiagonal_ql<T: Real>(d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let two = T::lit(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() + dd == dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Invalid(
                    "eigenvalue iteration did not converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            let sign_r = if g >= T::zero() { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eigenvalues_of_known_matrices() {
        let m = Matrix::from_vec(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let e = symmetric_eigenvalues(&m).unwrap();
        assert_abs_diff_eq!(e[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1], 1.0, epsilon = 1e-12);

        let m = Matrix::from_vec(3, 3, vec![4.0, 1.0, 2.0, 1.0, 3.0, 0.5, 2.0, 0.5, 5.0]).unwrap();
        let e = symmetric_eigenvalues(&m).unwrap();
        let trace: f64 = e.iter().sum();
        assert_abs_diff_eq!(trace, 12.0, epsilon = 1e-10);
        // characteristic polynomial vanishes at every eigenvalue
        for &l in &e {
            let det = (4.0 - l) * ((3.0 - l) * (5.0 - l) - 0.25) - 1.0 * (1.0 * (5.0 - l) - 1.0)
                + 2.0 * (0.5 - 2.0 * (3.0 - l));
            assert_abs_diff_eq!(det, 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn eigenvalues_of_larger_matrices() {
        // diagonal, identity and a rank-one matrix
        let n = 7;
        let mut diag = Matrix::zeros(n, n);
        for i in 0..n {
            diag[(i, i)] = i as f64 - 2.0;
        }
        let e = symmetric_eigenvalues(&diag).unwrap();
        assert_eq!(e, vec![4.0, 3.0, 2.0, 1.0, 0.0, -1.0, -2.0]);
        let v: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let mut r1 = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                r1[(i, j)] = v[i] * v[j];
            }
        }
        let e = symmetric_eigenvalues(&r1).unwrap();
        assert_abs_diff_eq!(e[0], v.iter().map(|x| x * x).sum::<f64>(), epsilon = 1e-9);
        assert!(e[1..].iter().all(|x| x.abs() < 1e-9));
        // tridiagonal Toeplitz 2,-1: eigenvalues 2 - 2cos(k pi/(n+1))
        let mut t = Matrix::zeros(n, n);
        for i in 0..n {
            t[(i, i)] = 2.0;
            if i + 1 < n {
                t[(i, i + 1)] = -1.0;
                t[(i + 1, i)] = -1.0;
            }
        }
        let e = symmetric_eigenvalues(&t).unwrap();
        for (k, &l) in e.iter().enumerate() {
            let want = 2.0 - 2.0 * ((n - k) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert_abs_diff_eq!(l, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn eigenvalues_f32() {
        let m = Matrix::from_vec(2, 2, vec![2.0f32, 1.0, 1.0, 2.0]).unwrap();
        let e = symmetric_eigenvalues(&m).unwrap();
        assert_abs_diff_eq!(e[0], 3.0, epsilon = 1e-5);
    }

    #[test]
    fn covariance_matches_hand_values() {
        let m =
            Matrix::from_columns(&[vec![1.0, 2.0, 3.0, 4.0], vec![2.0, 4.0, 6.0, 8.0]]).unwrap();
        let c = covariance(&m);
        assert_abs_diff_eq!(c[(0, 0)], 1.25, epsilon = 1e-12);
        assert_abs_diff_eq!(c[(1, 1)], 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[(0, 1)], 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(
            correlation_from_cov(c[(0, 1)], c[(0, 0)], c[(1, 1)]),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn vstack_and_select() {
        let a = Matrix::from_vec(1, 3, vec![1.0, 2.0, 3.0]).unwrap();
        let b = Matrix::from_vec(1, 3, vec![4.0, 5.0, 6.0]).unwrap();
        let s = a.vstack(&b).unwrap();
        assert_eq!(s.column(1), vec![2.0, 5.0]);
        assert_eq!(s.select_columns(&[2, 0]).as_slice(), &[3.0, 1.0, 6.0, 4.0]);
    }
}

//! Small dense linear algebra for the n×n coefficient matrices (n is 1 or 2
//! for the built-in domains, but nothing here assumes it).

use std::ops::{Index, IndexMut};

use crate::scalar::Scalar;

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from rows; panics if the rows are not square.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix rows must form a square");
            data.extend_from_slice(r);
        }
        Self { n, data }
    }

    pub fn from_columns(cols: &[Vec<T>]) -> Self {
        let mut m = Self::from_rows(cols);
        m.transpose_in_place();
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut m = self.clone();
        m.transpose_in_place();
        m
    }

    fn transpose_in_place(&mut self) {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                self.data.swap(i * self.n + j, j * self.n + i);
            }
        }
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| (0..self.n).fold(T::zero(), |acc, j| acc + self[(i, j)] * v[j]))
            .collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (0..n).fold(T::zero(), |acc, k| acc + self[(i, k)] * other[(k, j)]);
            }
        }
        out
    }

    /// Quadratic form `⟨u, M v⟩`.
    pub fn bilinear(&self, u: &[T], v: &[T]) -> T {
        dot(u, &self.mul_vec(v))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    /// Frobenius norm of `M - Mᵀ`.
    pub fn symmetry_defect(&self) -> T {
        let mut s = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                let d = self[(i, j)] - self[(j, i)];
                s = s + d * d;
            }
        }
        s.sqrt()
    }

    /// LU factorisation with partial pivoting; `None` when a pivot vanishes.
    fn lu(&self) -> Option<(Vec<T>, Vec<usize>, bool)> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut odd = false;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i * n + k].abs().partial_cmp(&a[j * n + k].abs()).unwrap())
                .unwrap();
            if a[p * n + k] == T::zero() {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                odd = !odd;
            }
            for i in (k + 1)..n {
                let f = a[i * n + k] / a[k * n + k];
                a[i * n + k] = f;
                for j in (k + 1)..n {
                    a[i * n + j] = a[i * n + j] - f * a[k * n + j];
                }
            }
        }
        Some((a, perm, odd))
    }

    pub fn determinant(&self) -> T {
        match self.lu() {
            None => T::zero(),
            Some((a, _, odd)) => {
                let d = (0..self.n).fold(T::one(), |acc, i| acc * a[i * self.n + i]);
                if odd {
                    -d
                } else {
                    d
                }
            }
        }
    }

    /// Solves `M x = rhs`; `None` if `M` is singular.
    pub fn solve(&self, rhs: &[T]) -> Option<Vec<T>> {
        let n = self.n;
        let (a, perm, _) = self.lu()?;
        let mut y: Vec<T> = perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            for j in 0..i {
                y[i] = y[i] - a[i * n + j] * y[j];
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                y[i] = y[i] - a[i * n + j] * y[j];
            }
            y[i] = y[i] / a[i * n + i];
        }
        Some(y)
    }

    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            cols.push(self.solve(&e)?);
        }
        Some(Self::from_columns(&cols))
    }

    /// Lower Cholesky factor of a symmetric positive-definite matrix.
    pub fn cholesky(&self) -> Option<Self> {
        let n = self.n;
        let mut l = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s = s - l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if s <= T::zero() {
                        return None;
                    }
                    l[(i, i)] = s.sqrt();
                } else {
                    l[(i, j)] = s / l[(j, j)];
                }
            }
        }
        Some(l)
    }

    /// Eigenvalues of the symmetric part `(M + Mᵀ)/2`, ascending, by cyclic
    /// Jacobi rotations.
    pub fn symmetric_eigenvalues(&self) -> Vec<T> {
        let n = self.n;
        let half = T::lit(0.5);
        let mut a = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = half * (self[(i, j)] + self[(j, i)]);
            }
        }
        let scale = a.frobenius_norm().max(T::min_positive_value());
        for _sweep in 0..64 {
            let mut off = T::zero();
            for i in 0..n {
                for j in (i + 1)..n {
                    off = off + a[(i, j)] * a[(i, j)];
                }
            }
            if off.sqrt() <= T::epsilon() * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig: Vec<T> = (0..n).map(|i| a[(i, i)]).collect();
        eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
        eig
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

pub fn dot<T: Scalar>(u: &[T], v: &[T]) -> T {
    u.iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
}

pub fn norm<T: Scalar>(v: &[T]) -> T {
    dot(v, v).sqrt()
}

/// `u + s·v`
pub fn axpy<T: Scalar>(u: &[T], s: T, v: &[T]) -> Vec<T> {
    u.iter().zip(v).map(|(&a, &b)| a + s * b).collect()
}

pub fn scale<T: Scalar>(s: T, v: &[T]) -> Vec<T> {
    v.iter().map(|&a| s * a).collect()
}

pub fn sub<T: Scalar>(u: &[T], v: &[T]) -> Vec<T> {
    u.iter().zip(v).map(|(&a, &b)| a - b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eigenvalues_of_two_by_two() {
        let m = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let e = m.symmetric_eigenvalues();
        assert_relative_eq!(e[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(e[1], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn eigenvalues_of_three_by_three_match_trace_and_determinant() {
        let m = Matrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, -0.2],
            vec![0.5, -0.2, 2.0],
        ]);
        let e = m.symmetric_eigenvalues();
        assert_relative_eq!(e.iter().sum::<f64>(), 9.0, epsilon = 1e-12);
        assert_relative_eq!(e.iter().product::<f64>(), m.determinant(), epsilon = 1e-12);
    }

    #[test]
    fn inverse_and_solve_agree() {
        let m = Matrix::from_rows(&[vec![2.0, 0.3], vec![-0.7, 1.5]]);
        let inv = m.inverse().unwrap();
        let prod = m.mul(&inv);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(prod[(i, j)], want, epsilon = 1e-14);
            }
        }
        assert_relative_eq!(m.determinant(), 2.0 * 1.5 + 0.3 * 0.7, epsilon = 1e-14);
    }

    #[test]
    fn cholesky_reconstructs() {
        let m = Matrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]);
        let l = m.cholesky().unwrap();
        let r = l.mul(&l.transpose());
        assert_relative_eq!(r[(0, 1)], 2.0, epsilon = 1e-14);
        assert_relative_eq!(r[(1, 1)], 3.0, epsilon = 1e-14);
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).cholesky().is_none());
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(m.inverse().is_none());
        assert_eq!(m.determinant(), 0.0);
    }
}

//! Small dense linear algebra: LU with partial pivoting, determinants,
//! inverses, one-sided Jacobi SVD and null spaces.
//!
//! Matrices here are at most a few dozen entries across, so everything is
//! row-major `Vec<f64>` with straightforward loops.

use crate::error::{Error, Result};
use std::ops::{Index, IndexMut};

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
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

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        crate::error::check_len(rows * cols, data.len())?;
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            crate::error::check_len(c, row.len())?;
            data.extend_from_slice(row);
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    /// `a bᵀ`.
    pub fn outer(a: &[f64], b: &[f64]) -> Self {
        Matrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        crate::error::check_len(self.cols, other.rows)?;
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        crate::error::check_len(self.cols, v.len())?;
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn scaled(&self, k: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * k).collect() }
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                got: other.rows * other.cols,
            });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn lu(&self) -> Result<Lu> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch { expected: self.rows, got: self.cols });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut singular = false;
        for k in 0..n {
            let mut p = k;
            for i in k + 1..n {
                if a[(i, k)].abs() > a[(p, k)].abs() {
                    p = i;
                }
            }
            if a[(p, k)] == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let l = a[(i, k)] / pivot;
                a[(i, k)] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        let akj = a[(k, j)];
                        a[(i, j)] -= l * akj;
                    }
                }
            }
        }
        Ok(Lu { lu: a, perm, sign, singular })
    }

    pub fn det(&self) -> Result<f64> {
        Ok(self.lu()?.det())
    }

    pub fn inverse(&self) -> Result<Matrix> {
        let lu = self.lu()?;
        let n = self.rows;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let x = lu.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = x[i];
            }
        }
        Ok(inv)
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.lu()?.solve(b)
    }

    /// Thin singular value decomposition by one-sided Jacobi rotations.
    pub fn svd(&self) -> Svd {
        jacobi_svd(self)
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        self.svd().sigma
    }

    /// Numerical rank with threshold `rel_tol · σ_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        rank_from_sigma(&self.singular_values(), rel_tol)
    }

    /// Orthonormal basis of the null space `{v : A v = 0}` at threshold
    /// `rel_tol · σ_max`, returned as vectors.
    pub fn nullspace(&self, rel_tol: f64) -> Vec<Vec<f64>> {
        // Pad with zero rows so that V is square and spans all of ℝ^cols.
        let a = if self.rows < self.cols {
            let mut p = Matrix::zeros(self.cols, self.cols);
            for i in 0..self.rows {
                for j in 0..self.cols {
                    p[(i, j)] = self[(i, j)];
                }
            }
            p
        } else {
            self.clone()
        };
        let svd = a.svd();
        let smax = svd.sigma.first().copied().unwrap_or(0.0);
        svd.sigma
            .iter()
            .enumerate()
            .filter(|(_, s)| **s <= rel_tol * smax)
            .map(|(k, _)| svd.v.col(k))
            .collect()
    }
}

pub fn rank_from_sigma(sigma: &[f64], rel_tol: f64) -> usize {
    let smax = sigma.iter().fold(0.0f64, |m, s| m.max(*s));
    if smax == 0.0 {
        return 0;
    }
    sigma.iter().filter(|s| **s > rel_tol * smax).count()
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Packed LU factors with row permutation.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

impl Lu {
    pub fn det(&self) -> f64 {
        if self.singular {
            return 0.0;
        }
        let n = self.lu.rows;
        (0..n).fold(self.sign, |d, i| d * self.lu[(i, i)])
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.lu.rows;
        crate::error::check_len(n, b.len())?;
        if self.singular {
            return Err(Error::Singular);
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.lu[(i, k)] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.lu[(i, k)] * x[k];
            }
            x[i] /= self.lu[(i, i)];
        }
        Ok(x)
    }
}

/// `A = U diag(σ) Vᵀ` with σ descending. For an `m × n` input with `m ≥ n`,
/// `U` is `m × n` and `V` is `n × n`; wide inputs are handled through the
/// transpose.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

fn jacobi_svd(a: &Matrix) -> Svd {
    if a.rows < a.cols {
        let t = jacobi_svd(&a.transpose());
        return Svd { u: t.v, sigma: t.sigma, v: t.u };
    }
    let (m, n) = (a.rows, a.cols);
    let mut w = a.clone();
    let mut v = Matrix::identity(n);
    let eps = f64::EPSILON;
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let (wp, wq) = (w[(i, p)], w[(i, q)]);
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (wp, wq) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * wp - s * wq;
                    w[(i, q)] = s * wp + c * wq;
                }
                for i in 0..n {
                    let (vp, vq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| (0..m).map(|i| w[(i, j)].powi(2)).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let mut u = Matrix::zeros(m, n);
    let mut vs = Matrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        sigma.push(s);
        for i in 0..m {
            u[(i, k)] = if s > 0.0 { w[(i, j)] / s } else { 0.0 };
        }
        for i in 0..n {
            vs[(i, k)] = v[(i, j)];
        }
    }
    Svd { u, sigma, v: vs }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn det_of_known_matrix() {
        let m = Matrix::from_rows(&[vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 4.0]]).unwrap();
        // 2(12-1) - 1(4-0) = 18
        assert!((m.det().unwrap() - 18.0).abs() < 1e-13);
    }

    #[test]
    fn inverse_residual_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in [2, 4, 6, 9] {
            let m = random(&mut rng, d, d);
            let inv = m.inverse().unwrap();
            let r = m.matmul(&inv).unwrap().sub(&Matrix::identity(d)).unwrap();
            assert!(r.max_abs() < 1e-10);
        }
    }

    #[test]
    fn singular_matrix_reports_zero_det_and_error() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(m.det().unwrap(), 0.0);
        assert_eq!(m.inverse(), Err(Error::Singular));
    }

    #[test]
    fn svd_reconstructs_and_orders() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (r, c) in [(5, 3), (3, 5), (6, 6)] {
            let a = random(&mut rng, r, c);
            let svd = a.svd();
            assert!(svd.sigma.windows(2).all(|w| w[0] >= w[1]));
            let k = svd.sigma.len();
            let rec = Matrix::from_fn(r, c, |i, j| (0..k).map(|l| svd.u[(i, l)] * svd.sigma[l] * svd.v[(j, l)]).sum());
            assert!(rec.sub(&a).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn svd_matches_determinant_magnitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random(&mut rng, 5, 5);
        let prod: f64 = a.singular_values().iter().product();
        assert!((prod - a.det().unwrap().abs()).abs() < 1e-12);
    }

    #[test]
    fn nullspace_of_wide_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random(&mut rng, 4, 5);
        let ns = a.nullspace(1e-10);
        assert_eq!(ns.len(), 1);
        let r = a.matvec(&ns[0]).unwrap();
        assert!(norm(&r) < 1e-12);
        assert!((norm(&ns[0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_detects_deficiency() {
        let a = Matrix::outer(&[1.0, 2.0, 3.0], &[1.0, -1.0, 0.5]);
        assert_eq!(a.rank(1e-10), 1);
        assert_eq!(Matrix::zeros(3, 3).rank(1e-10), 0);
    }
}

//! Group law, dilations, Korányi norm, translation map and tiling of ℍⁿ.
//!
//! A point is a slice `[u₁, …, u₂ₙ, s]`. The product is
//! `(u, s)·(v, r) = (u + v, s + r + ½ uᵀJv)` for a symplectic matrix `J`
//! (`J² = −I`, `Jᵀ = −J`).

use crate::dual::Scalar;
use crate::error::{check_len, Error, Result};
use crate::linalg::Matrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// Dimension parameter `n` together with the symplectic matrix `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupContext {
    n: usize,
    j: Matrix,
}

impl GroupContext {
    /// Standard form `J = [[0, I], [−I, 0]]`.
    pub fn standard(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        Ok(GroupContext { n, j: standard_j(n) })
    }

    /// Uses the given `J`, checking `J² = −I` and `Jᵀ = −J` to `1e-12`.
    pub fn with_j(n: usize, j: Matrix) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        check_len(2 * n, j.rows())?;
        check_len(2 * n, j.cols())?;
        let sq = j.matmul(&j)?.add(&Matrix::identity(2 * n))?;
        let skew = j.add(&j.transpose())?;
        if sq.max_abs() > 1e-12 || skew.max_abs() > 1e-12 {
            return Err(Error::InvalidParameter("J must satisfy J² = −I and Jᵀ = −J".into()));
        }
        Ok(GroupContext { n, j })
    }

    /// Admissible form `J' = AᵀJA` with `A` Haar-distributed on O(2n).
    pub fn admissible<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let a = haar_orthogonal(2 * n, rng);
        let j = a.transpose().matmul(&standard_j(n))?.matmul(&a)?;
        Self::with_j(n, j)
    }

    /// Conjugates by an orthogonal `A`: the returned context uses `A J Aᵀ`,
    /// which is the form `J` takes in coordinates `u' = A u`.
    pub fn rotated(&self, a: &Matrix) -> Result<Self> {
        let j = a.matmul(&self.j)?.matmul(&a.transpose())?;
        Self::with_j(self.n, j)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Topological dimension `2n + 1`.
    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    /// Homogeneous dimension `Q = 2n + 2`.
    pub fn homogeneous_dim(&self) -> usize {
        2 * self.n + 2
    }

    pub fn j(&self) -> &Matrix {
        &self.j
    }

    /// `J v` for a horizontal vector.
    pub fn apply_j<S: Scalar>(&self, v: &[S]) -> Vec<S> {
        let m = 2 * self.n;
        (0..m)
            .map(|i| {
                let mut acc = S::cst(0.0);
                for (k, vk) in v.iter().enumerate().take(m) {
                    let jik = self.j[(i, k)];
                    if jik != 0.0 {
                        acc = acc + vk.scale(jik);
                    }
                }
                acc
            })
            .collect()
    }

    /// `uᵀ J v`.
    pub fn symplectic<S: Scalar>(&self, u: &[S], v: &[S]) -> S {
        let m = 2 * self.n;
        let mut acc = S::cst(0.0);
        for (i, ui) in u.iter().enumerate().take(m) {
            for (k, vk) in v.iter().enumerate().take(m) {
                let jik = self.j[(i, k)];
                if jik != 0.0 {
                    acc = acc + (*ui * *vk).scale(jik);
                }
            }
        }
        acc
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        check_len(self.dim(), x.len())
    }

    /// Group product `x·y`.
    pub fn mul(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.mul_generic(x, y))
    }

    pub(crate) fn mul_generic<S: Scalar>(&self, x: &[S], y: &[S]) -> Vec<S> {
        let m = 2 * self.n;
        let mut out: Vec<S> = (0..m).map(|i| x[i] + y[i]).collect();
        out.push(x[m] + y[m] + self.symplectic(&x[..m], &y[..m]).scale(0.5));
        out
    }

    /// Inverse `x⁻¹ = −x`.
    pub fn inv(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        Ok(x.iter().map(|v| -v).collect())
    }

    /// Korányi norm `(|u|⁴ + s²)^{1/4}`.
    pub fn koranyi_norm(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(koranyi_norm_unchecked(x))
    }

    /// Non-isotropic dilation `δ_t(u, s) = (t u, t² s)`.
    pub fn dilate(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let m = 2 * self.n;
        let mut out: Vec<f64> = x[..m].iter().map(|v| t * v).collect();
        out.push(t * t * x[m]);
        Ok(out)
    }

    /// `Θ_t(x, y) = δ_{1/t}(y⁻¹·x)`.
    pub fn theta(&self, x: &[f64], y: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_point(x)?;
        self.check_point(y)?;
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
        }
        Ok(self.theta_generic(x, y, t))
    }

    pub(crate) fn theta_generic<S: Scalar>(&self, x: &[S], y: &[S], t: S) -> Vec<S> {
        let m = 2 * self.n;
        let mut out: Vec<S> = (0..m).map(|i| (x[i] - y[i]) / t).collect();
        let c = x[m] - y[m] + self.symplectic(&x[..m], &y[..m]).scale(0.5);
        out.push(c / (t * t));
        out
    }

    /// Decomposes `x = 𝔫·z` with `𝔫 ∈ ℤ^{2n+1}` and `z ∈ [−½, ½)^{2n+1}`.
    pub fn tile_of(&self, x: &[f64]) -> Result<(Vec<i64>, Vec<f64>)> {
        self.check_point(x)?;
        let m = 2 * self.n;
        let nu: Vec<f64> = x[..m].iter().map(|v| (v + 0.5).floor()).collect();
        let mut z: Vec<f64> = x[..m].iter().zip(&nu).map(|(v, k)| v - k).collect();
        let c = x[m] - 0.5 * self.symplectic(&nu, &z);
        let ns = (c + 0.5).floor();
        z.push(c - ns);
        let mut lattice: Vec<i64> = nu.iter().map(|v| *v as i64).collect();
        lattice.push(ns as i64);
        Ok((lattice, z))
    }
}

pub(crate) fn koranyi_norm_unchecked(x: &[f64]) -> f64 {
    let m = x.len() - 1;
    let u2: f64 = x[..m].iter().map(|v| v * v).sum();
    (u2 * u2 + x[m] * x[m]).sqrt().sqrt()
}

/// `[[0, I], [−I, 0]]` of size `2n`.
pub fn standard_j(n: usize) -> Matrix {
    let mut j = Matrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// Haar-distributed orthogonal matrix via Gram–Schmidt on a Gaussian matrix
/// with the sign correction that makes `R` have a positive diagonal.
pub fn haar_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Matrix {
    loop {
        let data: Vec<f64> = (0..d * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let g = Matrix::from_vec(d, d, data).expect("square");
        let mut q: Vec<Vec<f64>> = Vec::with_capacity(d);
        let mut ok = true;
        for j in 0..d {
            let mut v = g.col(j);
            for b in &q {
                let p = crate::linalg::dot(&v, b);
                v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= p * bi);
            }
            let nv = crate::linalg::norm(&v);
            if nv < 1e-10 {
                ok = false;
                break;
            }
            v.iter_mut().for_each(|vi| *vi /= nv);
            q.push(v);
        }
        if ok {
            return Matrix::from_fn(d, d, |i, j| q[j][i]);
        }
    }
}

/// Orthogonal Householder reflection mapping the unit vector `u` to `e₁`.
pub fn reflection_to_e1(u: &[f64]) -> Matrix {
    let d = u.len();
    let mut v: Vec<f64> = u.to_vec();
    v[0] -= 1.0;
    let nv2 = crate::linalg::dot(&v, &v);
    if nv2 < 1e-30 {
        return Matrix::identity(d);
    }
    Matrix::from_fn(d, d, |i, j| (if i == j { 1.0 } else { 0.0 }) - 2.0 * v[i] * v[j] / nv2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rand_point(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
        (0..d).map(|_| rng.random_range(-scale..scale)).collect()
    }

    #[test]
    fn spec_examples() {
        let g = GroupContext::standard(1).unwrap();
        assert_eq!(g.mul(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap(), vec![1.0, 1.0, 0.5]);
        assert_eq!(g.koranyi_norm(&[1.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(g.koranyi_norm(&[0.0, 0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(g.dilate(&[1.0, 2.0, 3.0], 2.0).unwrap(), vec![2.0, 4.0, 12.0]);
        let g2 = GroupContext::standard(2).unwrap();
        assert_eq!(
            g2.mul(&[1.0, 0.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0, 0.0]).unwrap()[4],
            0.0
        );
        assert_eq!(
            g2.mul(&[1.0, 0.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0, 0.0]).unwrap()[4],
            0.5
        );
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let g = GroupContext::standard(1).unwrap();
        assert!(matches!(g.mul(&[1.0, 0.0], &[0.0, 1.0, 0.0]), Err(Error::DimensionMismatch { .. })));
        assert!(g.theta(&[0.0; 3], &[0.0; 3], 0.0).is_err());
    }

    #[test]
    fn theta_at_unit_time_is_left_quotient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=3 {
            let g = GroupContext::admissible(n, &mut rng).unwrap();
            let x = rand_point(&mut rng, g.dim(), 2.0);
            let y = rand_point(&mut rng, g.dim(), 2.0);
            let a = g.theta(&x, &y, 1.0).unwrap();
            let b = g.mul(&g.inv(&y).unwrap(), &x).unwrap();
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn admissible_j_is_symplectic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = GroupContext::admissible(3, &mut rng).unwrap();
        let j = g.j();
        let sq = j.matmul(j).unwrap().add(&Matrix::identity(6)).unwrap();
        assert!(sq.max_abs() < 1e-12);
    }

    #[test]
    fn reflection_maps_to_e1() {
        let u = [0.6, 0.0, -0.8, 0.0];
        let a = reflection_to_e1(&u);
        let r = a.matvec(&u).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-15 && r[1..].iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn tiling_round_trip_and_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 1..=2 {
            let g = GroupContext::standard(n).unwrap();
            for _ in 0..500 {
                let x = rand_point(&mut rng, g.dim(), 20.0);
                let (nu, z) = g.tile_of(&x).unwrap();
                assert!(z.iter().all(|v| (-0.5..0.5).contains(v)), "{z:?}");
                let nf: Vec<f64> = nu.iter().map(|v| *v as f64).collect();
                let back = g.mul(&nf, &z).unwrap();
                for (a, b) in back.iter().zip(&x) {
                    assert!((a - b).abs() < 1e-10);
                }
            }
        }
    }
}

//! Radial Hessians, the rank-one determinant identity, the structured inverse
//! `(σI + λwwᵀ + κJ + γw(Jw)ᵀ)⁻¹` and the scalar bound used for the
//! intermediate cinematic block.

use crate::error::{Error, Result};
use crate::heisenberg::GroupContext;
use crate::linalg::{dot, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `u`, `u'` and `u''` of a radial profile `g(w) = u(|w|)`.
pub struct RadialProfile {
    u: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    du: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    d2u: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("RadialProfile")
    }
}

impl RadialProfile {
    pub fn new(
        u: impl Fn(f64) -> f64 + Send + Sync + 'static,
        du: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2u: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        RadialProfile { u: Box::new(u), du: Box::new(du), d2u: Box::new(d2u) }
    }

    /// `u(r) = c·r^k`.
    pub fn power(c: f64, k: i32) -> Self {
        let kf = k as f64;
        RadialProfile::new(
            move |r| c * r.powi(k),
            move |r| c * kf * r.powi(k - 1),
            move |r| c * kf * (kf - 1.0) * r.powi(k - 2),
        )
    }

    /// `u(r) = Σ cₖ r^{2k+2}`, an even polynomial with no constant term.
    pub fn even_polynomial(coeffs: Vec<f64>) -> Self {
        let c1 = coeffs.clone();
        let c2 = coeffs.clone();
        RadialProfile::new(
            move |r| coeffs.iter().enumerate().map(|(k, c)| c * r.powi(2 * k as i32 + 2)).sum(),
            move |r| c1.iter().enumerate().map(|(k, c)| c * (2 * k + 2) as f64 * r.powi(2 * k as i32 + 1)).sum(),
            move |r| {
                c2.iter().enumerate().map(|(k, c)| c * ((2 * k + 2) * (2 * k + 1)) as f64 * r.powi(2 * k as i32)).sum()
            },
        )
    }

    pub fn u(&self, r: f64) -> f64 {
        (self.u)(r)
    }

    pub fn du(&self, r: f64) -> f64 {
        (self.du)(r)
    }

    pub fn d2u(&self, r: f64) -> f64 {
        (self.d2u)(r)
    }
}

fn radius(w: &[f64]) -> Result<f64> {
    let r = dot(w, w).sqrt();
    if r == 0.0 {
        Err(Error::OutOfDomain("radial derivatives need w ≠ 0".into()))
    } else {
        Ok(r)
    }
}

/// `∇g(w) = (u'(r)/r) w`.
pub fn radial_grad(p: &RadialProfile, w: &[f64]) -> Result<Vec<f64>> {
    let r = radius(w)?;
    let c = p.du(r) / r;
    Ok(w.iter().map(|v| c * v).collect())
}

/// `g''(w) = (u'/r) I + (u''/r² − u'/r³) wwᵀ`.
pub fn radial_hessian(p: &RadialProfile, w: &[f64]) -> Result<Matrix> {
    let r = radius(w)?;
    let a = p.du(r) / r;
    let b = p.d2u(r) / (r * r) - p.du(r) / (r * r * r);
    Ok(Matrix::from_fn(w.len(), w.len(), |i, j| if i == j { a } else { 0.0 } + b * w[i] * w[j]))
}

/// `det g''(w) = (u'(r)/r)^{d−1} u''(r)`.
pub fn radial_hessian_det(p: &RadialProfile, w: &[f64]) -> Result<f64> {
    let r = radius(w)?;
    Ok((p.du(r) / r).powi(w.len() as i32 - 1) * p.d2u(r))
}

/// `det(I + σwwᵀ) = 1 + σ|w|²`.
pub fn det_rank_one_update(sigma: f64, w: &[f64]) -> f64 {
    1.0 + sigma * dot(w, w)
}

/// Parameters of `M = σI + λwwᵀ + κJ + γw(Jw)ᵀ`.
#[derive(Debug, Clone)]
pub struct StructuredParams {
    pub sigma: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub w: Vec<f64>,
    pub j: Matrix,
}

impl StructuredParams {
    pub fn assemble(&self) -> Matrix {
        let d = self.w.len();
        let jw = self.j.matvec(&self.w).expect("J matches w");
        Matrix::from_fn(d, d, |a, b| {
            (if a == b { self.sigma } else { 0.0 })
                + self.lambda * self.w[a] * self.w[b]
                + self.kappa * self.j[(a, b)]
                + self.gamma * self.w[a] * jw[b]
        })
    }

    /// `σ² + κ²`.
    pub fn outer_denominator(&self) -> f64 {
        self.sigma * self.sigma + self.kappa * self.kappa
    }

    /// `σ² + κ² + (σλ − γκ)|w|²`.
    pub fn inner_denominator(&self) -> f64 {
        self.outer_denominator() + (self.sigma * self.lambda - self.gamma * self.kappa) * dot(&self.w, &self.w)
    }

    /// `det M = (σ² + κ²)^{d/2 − 1} (σ² + κ² + (σλ − γκ)|w|²)`.
    pub fn det_closed(&self) -> f64 {
        let half = self.w.len() as i32 / 2;
        self.outer_denominator().powi(half - 1) * self.inner_denominator()
    }

    fn check(&self) -> Result<(f64, f64)> {
        let (o, i) = (self.outer_denominator(), self.inner_denominator());
        if o == 0.0 {
            return Err(Error::Singular);
        }
        if i == 0.0 {
            return Err(Error::OutOfDomain("σ² + κ² + (σλ − γκ)|w|² vanishes".into()));
        }
        Ok((o, i))
    }
}

/// Closed-form inverse of the structured matrix.
pub fn structured_inverse(p: &StructuredParams) -> Result<Matrix> {
    let (o, i) = p.check()?;
    let d = p.w.len();
    let jw = p.j.matvec(&p.w)?;
    let (s, k) = (p.sigma, p.kappa);
    let c1 = (p.gamma * k - s * p.lambda) / i;
    let c2 = (p.gamma * s + p.lambda * k) / i;
    let w = &p.w;
    Ok(Matrix::from_fn(d, d, |a, b| {
        let base = if a == b { s } else { 0.0 } - k * p.j[(a, b)];
        let t1 = c1 * (s * w[a] * w[b] - k * jw[a] * w[b]);
        let t2 = c2 * (-s * w[a] * jw[b] + k * jw[a] * jw[b]);
        (base + t1 + t2) / o
    }))
}

/// `M⁻¹w = (σ² + (σλ − γκ)|w|² + κ²)⁻¹ (σI − κJ) w`.
pub fn structured_inverse_apply_w(p: &StructuredParams) -> Result<Vec<f64>> {
    let (_, i) = p.check()?;
    let jw = p.j.matvec(&p.w)?;
    Ok(p.w.iter().zip(&jw).map(|(w, jw)| (p.sigma * w - p.kappa * jw) / i).collect())
}

/// `X = 4uuᵀ + 2|u|²I − (H̄/2)J − (|u|²/H̄) u(Ju)ᵀ`, as structured parameters.
pub fn intermediate_x_params(ctx: &GroupContext, uy: &[f64], hbar: f64) -> Result<StructuredParams> {
    crate::error::check_len(2 * ctx.n(), uy.len())?;
    if hbar == 0.0 {
        return Err(Error::OutOfDomain("intermediate X needs H̄ ≠ 0".into()));
    }
    let r2 = dot(uy, uy);
    Ok(StructuredParams { sigma: 2.0 * r2, lambda: 4.0, kappa: -hbar / 2.0, gamma: -r2 / hbar, w: uy.to_vec(), j: ctx.j().clone() })
}

/// The matrix `X` of the intermediate region.
pub fn intermediate_x(ctx: &GroupContext, uy: &[f64], hbar: f64) -> Result<Matrix> {
    Ok(intermediate_x_params(ctx, uy, hbar)?.assemble())
}

/// `f(u) = u(148 − 32u)/(46u + 1)`.
pub fn f_bound(u: f64) -> f64 {
    u * (148.0 - 32.0 * u) / (46.0 * u + 1.0)
}

/// `f''(u) = −13680/(46u + 1)³`.
pub fn f_bound_second_derivative(u: f64) -> f64 {
    -13680.0 / (46.0 * u + 1.0).powi(3)
}

/// Maximiser and maximum of `f` on `u ≥ 0` with the slack `3 − f_max`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FBound {
    pub u0: f64,
    pub f_max: f64,
    pub slack: f64,
    /// Golden-section maximiser on `[0, 100]`.
    pub u_numeric: f64,
    pub f_numeric: f64,
    /// Sign changes of `f'` on a sample grid of `(0, 100)`.
    pub critical_points: usize,
    /// `f'' < 0` at every sample.
    pub concave: bool,
}

/// Golden-section search for the maximum of a unimodal function.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

pub fn optimize_f_bound() -> FBound {
    let s95 = 95f64.sqrt();
    let u0 = 3.0 * s95 / 92.0 - 1.0 / 46.0;
    let f_max = 2.0 / 529.0 * (859.0 - 12.0 * s95);
    let u_numeric = golden_section_max(f_bound, 0.0, 100.0, 1e-12);
    let fp = |u: f64| {
        // f'(u) = (148 − 64u)/(46u+1) − 46u(148 − 32u)/(46u+1)²
        let q = 46.0 * u + 1.0;
        (148.0 - 64.0 * u) / q - 46.0 * u * (148.0 - 32.0 * u) / (q * q)
    };
    let grid: Vec<f64> = (1..=20000).map(|k| k as f64 * 100.0 / 20001.0).collect();
    let critical_points = grid.windows(2).filter(|w| fp(w[0]).signum() != fp(w[1]).signum()).count();
    let concave = grid.iter().all(|u| f_bound_second_derivative(*u) < 0.0);
    FBound { u0, f_max, slack: 3.0 - f_max, u_numeric, f_numeric: f_bound(u_numeric), critical_points, concave }
}

/// One row of the lemma verification table.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LemmaCheck {
    pub id: &'static str,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl LemmaCheck {
    fn new(id: &'static str, samples: usize, max_residual: f64, tolerance: f64) -> Self {
        LemmaCheck { id, samples, max_residual, tolerance, pass: max_residual <= tolerance }
    }
}

/// Random structured parameters in `[−1, 1]` with a random admissible `J`.
pub fn random_params<R: Rng + ?Sized>(rng: &mut R, d: usize) -> StructuredParams {
    let ctx = GroupContext::admissible(d / 2, rng).expect("d even and positive");
    let mut u = || rng.random_range(-1.0..1.0);
    StructuredParams { sigma: u(), lambda: u(), kappa: u(), gamma: u(), w: (0..d).map(|_| u()).collect(), j: ctx.j().clone() }
}

/// Random even-polynomial profile with positive coefficients, so `u' > 0`
/// and `u'' > 0` away from the origin.
pub fn random_profile<R: Rng + ?Sized>(rng: &mut R) -> RadialProfile {
    RadialProfile::even_polynomial((0..3).map(|_| rng.random_range(0.1..2.0)).collect())
}

/// Smallest `|σ² + κ² + (σλ − γκ)|w|²|` admitted by [`verify_lemmas`]; the
/// inverse formula and its corollaries need this denominator away from zero.
pub const INNER_DENOMINATOR_FLOOR: f64 = 1e-3;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Runs every matrix identity on `samples` random instances per dimension
/// `d ∈ {2, 4, 6}`.
pub fn verify_lemmas(samples: usize, seed: u64) -> Vec<LemmaCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut inv_res, mut apply_res, mut rank_one, mut rad_det, mut det_id) = (0f64, 0f64, 0f64, 0f64, 0f64);
    let (mut grad_res, mut hess_res) = (0f64, 0f64);
    let mut det_inv_max = 0f64;
    let dims = [2usize, 4, 6];
    for &d in &dims {
        let mut accepted = 0;
        while accepted < samples {
            let p = random_params(&mut rng, d);
            if p.inner_denominator().abs() < INNER_DENOMINATOR_FLOOR || p.outer_denominator() < INNER_DENOMINATOR_FLOOR {
                continue;
            }
            accepted += 1;
            let m = p.assemble();
            let mi = structured_inverse(&p).expect("denominators checked");
            let prod = m.matmul(&mi).expect("square");
            inv_res = inv_res.max(prod.sub(&Matrix::identity(d)).expect("same shape").max_abs());
            let mw = structured_inverse_apply_w(&p).expect("denominators checked");
            let direct = m.solve(&p.w).expect("nonsingular");
            apply_res = apply_res.max(mw.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
            det_id = det_id.max(rel(p.det_closed(), m.det().expect("square")));
            if p.outer_denominator() >= 0.25 {
                det_inv_max = det_inv_max.max(mi.det().expect("square").abs());
            }

            let sigma = rng.random_range(-2.0..2.0);
            let w: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a = Matrix::identity(d).add(&Matrix::outer(&w, &w).scaled(sigma)).expect("same shape");
            rank_one = rank_one.max(rel(det_rank_one_update(sigma, &w), a.det().expect("square")));

            let prof = random_profile(&mut rng);
            let h = radial_hessian(&prof, &w).expect("w ≠ 0");
            rad_det = rad_det.max(rel(radial_hessian_det(&prof, &w).expect("w ≠ 0"), h.det().expect("square")));
            let (gfd, hfd) = fd_grad_hessian(&|v: &[f64]| prof.u(dot(v, v).sqrt()), &w);
            let g = radial_grad(&prof, &w).expect("w ≠ 0");
            grad_res = grad_res.max(g.iter().zip(&gfd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
            hess_res = hess_res.max(h.sub(&hfd).expect("same shape").max_abs());
        }
    }
    let n = samples * dims.len();
    let f = optimize_f_bound();
    vec![
        LemmaCheck::new("structured_inverse", n, inv_res, 1e-9),
        LemmaCheck::new("structured_inverse_apply_w", n, apply_res, 1e-9),
        LemmaCheck::new("structured_det", n, det_id, 1e-9),
        LemmaCheck::new("det_rank_one_update", n, rank_one, 1e-10),
        LemmaCheck::new("radial_hessian_det", n, rad_det, 1e-10),
        LemmaCheck::new("radial_grad_fd", n, grad_res, 1e-6),
        LemmaCheck::new("radial_hessian_fd", n, hess_res, 1e-5),
        LemmaCheck { id: "inverse_det_bounded", samples: n, max_residual: det_inv_max, tolerance: f64::INFINITY, pass: det_inv_max.is_finite() },
        LemmaCheck::new("f_bound_numeric", 1, (f.f_numeric - f.f_max).abs(), 1e-10),
        LemmaCheck { id: "f_bound_slack", samples: 1, max_residual: f.slack, tolerance: 0.19, pass: f.slack >= 0.19 && f.concave && f.critical_points == 1 },
    ]
}

/// Central-difference gradient and Richardson-extrapolated Hessian, used as
/// an oracle.
fn fd_grad_hessian(f: &dyn Fn(&[f64]) -> f64, w: &[f64]) -> (Vec<f64>, Matrix) {
    let d = w.len();
    let at = |shifts: &[(usize, f64)]| {
        let mut v = w.to_vec();
        for (i, s) in shifts {
            v[*i] += s;
        }
        f(&v)
    };
    let hg = 1e-5;
    let g = (0..d).map(|i| (at(&[(i, hg)]) - at(&[(i, -hg)])) / (2.0 * hg)).collect();
    let hess = |h: f64| {
        Matrix::from_fn(d, d, |i, j| {
            (at(&[(i, h), (j, h)]) - at(&[(i, h), (j, -h)]) - at(&[(i, -h), (j, h)]) + at(&[(i, -h), (j, -h)]))
                / (4.0 * h * h)
        })
    };
    let (coarse, fine) = (hess(2e-3), hess(1e-3));
    (g, fine.scaled(4.0 / 3.0).sub(&coarse.scaled(1.0 / 3.0)).expect("same shape"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_examples() {
        let p = RadialProfile::power(0.5, 4);
        assert_eq!(radial_grad(&p, &[1.0, 0.0]).unwrap(), vec![2.0, 0.0]);
        let q = RadialProfile::power(0.5, 2);
        let w = [0.3, -0.7, 0.2, 0.1];
        let g = radial_grad(&q, &w).unwrap();
        for (a, b) in g.iter().zip(&w) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(radial_hessian(&q, &w).unwrap().sub(&Matrix::identity(4)).unwrap().max_abs() < 1e-14);
        // u = r⁴/2: g'' = 2r²I + 4wwᵀ and det = (2r²)^{d−1}·6r²
        let r2 = dot(&w, &w);
        let expect = Matrix::identity(4).scaled(2.0 * r2).add(&Matrix::outer(&w, &w).scaled(4.0)).unwrap();
        assert!(radial_hessian(&p, &w).unwrap().sub(&expect).unwrap().max_abs() < 1e-13);
        let det = radial_hessian_det(&p, &w).unwrap();
        assert!((det - (2.0 * r2).powi(3) * 6.0 * r2).abs() < 1e-13);
        assert!(radial_grad(&p, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn structured_inverse_examples() {
        let ctx = GroupContext::standard(1).unwrap();
        let mut p = StructuredParams { sigma: 1.0, lambda: 0.0, kappa: 0.0, gamma: 0.0, w: vec![0.3, 0.4], j: ctx.j().clone() };
        assert!(structured_inverse(&p).unwrap().sub(&Matrix::identity(2)).unwrap().max_abs() < 1e-15);
        assert_eq!(structured_inverse_apply_w(&p).unwrap(), vec![0.3, 0.4]);
        p.sigma = 0.0;
        p.kappa = 0.5;
        let inv = structured_inverse(&p).unwrap();
        assert!(inv.sub(&ctx.j().scaled(-2.0)).unwrap().max_abs() < 1e-15);
        p.w = vec![0.0, 0.0];
        assert_eq!(structured_inverse_apply_w(&p).unwrap(), vec![0.0, 0.0]);
        p.kappa = 0.0;
        assert!(matches!(structured_inverse(&p), Err(Error::Singular)));
    }

    #[test]
    fn f_bound_constants() {
        let f = optimize_f_bound();
        assert!((f.f_max - 2.8054).abs() < 5e-5);
        assert!(f.slack >= 0.19);
        assert!((f.u_numeric - f.u0).abs() < 1e-6);
        assert!((f.f_numeric - f.f_max).abs() < 1e-10);
        assert_eq!(f.critical_points, 1);
        assert!(f.concave);
    }

    #[test]
    fn intermediate_x_at_pole_is_scaled_j() {
        let ctx = GroupContext::standard(2).unwrap();
        let t: f64 = 1.5;
        let x = intermediate_x(&ctx, &[0.0; 4], t * t).unwrap();
        assert!(x.sub(&ctx.j().scaled(-t * t / 2.0)).unwrap().max_abs() < 1e-15);
        assert!((x.det().unwrap().abs() - (t * t / 2.0).powi(4)).abs() < 1e-12);
    }

    #[test]
    fn intermediate_x_inverse_on_uy_matches_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ctx = GroupContext::admissible(2, &mut rng).unwrap();
        let uy = [0.3, -0.2, 0.5, 0.1];
        let hbar = 1.7;
        let p = intermediate_x_params(&ctx, &uy, hbar).unwrap();
        let a = structured_inverse_apply_w(&p).unwrap();
        let b = p.assemble().solve(&uy).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
        // the closed form 4/(46|u|⁴ + H̄²)·(2|u|²I + (H̄/2)J)u
        let r2 = dot(&uy, &uy);
        let ju = ctx.apply_j(&uy);
        let c = 4.0 / (46.0 * r2 * r2 + hbar * hbar);
        for i in 0..4 {
            assert!((a[i] - c * (2.0 * r2 * uy[i] + 0.5 * hbar * ju[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn verify_suite_passes() {
        for row in verify_lemmas(200, 7) {
            assert!(row.pass, "{row:?}");
        }
    }
}

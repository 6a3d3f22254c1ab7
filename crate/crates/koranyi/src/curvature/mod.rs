//! Phase functions of the averaging operator in the three chart regions,
//! their mixed Hessians (rotational curvature), normals to the cone
//! `y ↦ ∇_{x,t}Φ(x, t, y)` and cinematic curvature matrices.
//!
//! Derivatives are exact up to rounding: phases are generic over
//! [`Scalar`] and evaluated on nested dual numbers. Implicit graphs are
//! solved in `f64` and then refined by Newton steps in the dual type. A
//! central-difference path with Richardson extrapolation is kept as an
//! independent oracle.

pub mod closed;
pub mod sampling;

use crate::dual::{part2, part3, seed1, seed2, seed3, Scalar};
use crate::error::{check_len, Error, Result};
use crate::heisenberg::GroupContext;
use crate::linalg::{rank_from_sigma, Matrix};
use crate::sphere::{graph_g_generic, one_minus_sqrt, solve_h1_generic, solve_hbar_generic, Branch};
use serde::{Deserialize, Serialize};

/// Which phase function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseKind {
    /// `ȳ·G(x, t, u_y)`.
    NorthPole,
    /// `y₁·H₁(x, t, y', ȳ)`; `Upper` takes the root with `H₁ < x₁`.
    Equator(Branch),
    /// `ȳ·H̄(x, t, u_y)`; `Upper` takes the `+√` root.
    Intermediate(Branch),
    /// `ȳ(x̄ + ½u_xᵀJu_y + t²g_ℓ((2^{−2ℓ}u_x − u_y)/t))`.
    NpRescaled(u32),
    /// The `ℓ → ∞` limit `ȳ(x̄ + ½u_xᵀJu_y + t²|u_y/t|⁴/2)`.
    NpLimit,
}

/// A phase on a fixed group context. With `transported` set the phase is
/// `Φ̃(x, t, y) = Φ(0, t, x⁻¹·y)`, the form to which left-invariance reduces.
#[derive(Debug, Clone)]
pub struct Phase {
    ctx: GroupContext,
    kind: PhaseKind,
    transported: bool,
}

/// `2^{−k}` for possibly large `k`.
fn pow2_neg(k: u32) -> f64 {
    2f64.powi(-(k as i32))
}

/// `g_ℓ(w) = 2^{4ℓ}(1 − √(1 − 2^{−4ℓ}|w|⁴))` from `|w|²`.
pub(crate) fn g_ell<S: Scalar>(w2: S, ell: u32) -> S {
    let e = pow2_neg(4 * ell);
    (w2 * w2) / (S::cst(1.0) + (S::cst(1.0) - (w2 * w2).scale(e)).sqrt())
}

impl Phase {
    pub fn new(ctx: GroupContext, kind: PhaseKind) -> Self {
        Phase { ctx, kind, transported: false }
    }

    /// The transported phase `Φ(0, t, x⁻¹·y)`.
    pub fn transported(mut self) -> Self {
        self.transported = true;
        self
    }

    pub fn is_transported(&self) -> bool {
        self.transported
    }

    pub fn ctx(&self) -> &GroupContext {
        &self.ctx
    }

    pub fn kind(&self) -> PhaseKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.ctx.dim()
    }

    /// `Φ(x, t, y)`.
    pub fn eval(&self, x: &[f64], t: f64, y: &[f64]) -> Result<f64> {
        check_len(self.dim(), x.len())?;
        check_len(self.dim(), y.len())?;
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
        }
        self.eval_generic(x, t, y)
    }

    pub(crate) fn eval_generic<S: Scalar>(&self, x: &[S], t: S, y: &[S]) -> Result<S> {
        if self.transported {
            let xinv: Vec<S> = x.iter().map(|v| -*v).collect();
            let yt = self.ctx.mul_generic(&xinv, y);
            let zero = vec![S::cst(0.0); x.len()];
            return self.eval_base(&zero, t, &yt);
        }
        self.eval_base(x, t, y)
    }

    fn eval_base<S: Scalar>(&self, x: &[S], t: S, y: &[S]) -> Result<S> {
        let ctx = &self.ctx;
        let m = 2 * ctx.n();
        match self.kind {
            PhaseKind::NorthPole => {
                let w2 = (0..m).fold(S::cst(0.0), |a, i| a + (x[i] - y[i]).sq()) / (t * t);
                if w2.re() >= 1.0 {
                    return Err(Error::OutOfDomain("pole phase needs |u_x − u_y| < t".into()));
                }
                Ok(y[m] * graph_g_generic(ctx, x, t, &y[..m]))
            }
            PhaseKind::Equator(b) => Ok(y[0] * solve_h1_generic(ctx, x, t, &y[1..m], y[m], b)?),
            PhaseKind::Intermediate(b) => Ok(y[m] * solve_hbar_generic(ctx, x, t, &y[..m], b)?),
            PhaseKind::NpRescaled(ell) => {
                let s = pow2_neg(2 * ell);
                let w2 = (0..m).fold(S::cst(0.0), |a, i| a + (x[i].scale(s) - y[i]).sq()) / (t * t);
                if w2.re() * w2.re() * pow2_neg(4 * ell) >= 1.0 {
                    return Err(Error::OutOfDomain("rescaled pole phase outside its cap".into()));
                }
                let g = g_ell(w2, ell);
                Ok(y[m] * (x[m] + ctx.symplectic(&x[..m], &y[..m]).scale(0.5) + t * t * g))
            }
            PhaseKind::NpLimit => {
                let w2 = (0..m).fold(S::cst(0.0), |a, i| a + y[i].sq()) / (t * t);
                Ok(y[m] * (x[m] + ctx.symplectic(&x[..m], &y[..m]).scale(0.5) + t * t * (w2 * w2).scale(0.5)))
            }
        }
    }

    fn eval_z<S: Scalar>(&self, z: &[S]) -> Result<S> {
        let d = self.dim();
        self.eval_generic(&z[..d], z[d], &z[d + 1..])
    }

    fn pack(&self, x: &[f64], t: f64, y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), x.len())?;
        check_len(self.dim(), y.len())?;
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
        }
        let mut z = x.to_vec();
        z.push(t);
        z.extend_from_slice(y);
        Ok(z)
    }
}

/// Equivalence used by the rescaled-pole oracle:
/// `Φ_ℓ(x, t, y) = 2^{4ℓ} Φ^NP((2^{−3ℓ}u_x, 2^{−4ℓ}x̄), t, (2^{−ℓ}u_y, ȳ))`.
pub fn rescaled_via_pole(ctx: &GroupContext, ell: u32, x: &[f64], t: f64, y: &[f64]) -> Result<f64> {
    let m = 2 * ctx.n();
    let mut xs: Vec<f64> = x[..m].iter().map(|v| v * pow2_neg(3 * ell)).collect();
    xs.push(x[m] * pow2_neg(4 * ell));
    let mut ys: Vec<f64> = y[..m].iter().map(|v| v * pow2_neg(ell)).collect();
    ys.push(y[m]);
    Ok(Phase::new(ctx.clone(), PhaseKind::NorthPole).eval(&xs, t, &ys)? * 2f64.powi(4 * ell as i32))
}

/// `1 − √(1 − a)`, exposed for the closed-form checks.
pub fn one_minus_sqrt_f64(a: f64) -> f64 {
    one_minus_sqrt(a)
}

/// `∂²Φ/∂(x,t)_a ∂y_b` as a `(2n+2) × (2n+1)` matrix; column `b` is the
/// tangent vector `Ξ_b`.
pub fn mixed_hessian(phase: &Phase, x: &[f64], t: f64, y: &[f64]) -> Result<Matrix> {
    let z = phase.pack(x, t, y)?;
    let d = phase.dim();
    let mut out = Matrix::zeros(d + 1, d);
    for a in 0..=d {
        for b in 0..d {
            let zb = d + 1 + b;
            let zs: Vec<_> = z
                .iter()
                .enumerate()
                .map(|(k, v)| seed2(*v, if k == a { 1.0 } else { 0.0 }, if k == zb { 1.0 } else { 0.0 }))
                .collect();
            out[(a, b)] = part2(phase.eval_z(&zs)?);
        }
    }
    Ok(out)
}

/// `∇_{x,t}Φ` (the point `Ξ(x, t, y)` of the cone).
pub fn xi(phase: &Phase, x: &[f64], t: f64, y: &[f64]) -> Result<Vec<f64>> {
    let z = phase.pack(x, t, y)?;
    let d = phase.dim();
    (0..=d)
        .map(|a| {
            let zs: Vec<_> = z.iter().enumerate().map(|(k, v)| seed1(*v, if k == a { 1.0 } else { 0.0 })).collect();
            Ok(phase.eval_z(&zs)?.d)
        })
        .collect()
}

/// `∇_yΦ`.
pub fn grad_y(phase: &Phase, x: &[f64], t: f64, y: &[f64]) -> Result<Vec<f64>> {
    let z = phase.pack(x, t, y)?;
    let d = phase.dim();
    (0..d)
        .map(|b| {
            let zs: Vec<_> =
                z.iter().enumerate().map(|(k, v)| seed1(*v, if k == d + 1 + b { 1.0 } else { 0.0 })).collect();
            Ok(phase.eval_z(&zs)?.d)
        })
        .collect()
}

/// Numerical rank: singular values above `max(rel_tol·σ_max, abs_floor)`.
pub fn numeric_rank(sigma: &[f64], rel_tol: f64, abs_floor: f64) -> usize {
    let smax = sigma.iter().fold(0.0f64, |m, s| m.max(*s));
    if smax <= abs_floor {
        return 0;
    }
    rank_from_sigma(sigma, rel_tol)
}

/// Tolerances for rank decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankTolerance {
    /// Relative threshold against the largest singular value.
    pub rel: f64,
    /// Singular spectra whose maximum is below this count as rank 0.
    pub abs_floor: f64,
}

impl Default for RankTolerance {
    fn default() -> Self {
        RankTolerance { rel: 1e-6, abs_floor: 1e-10 }
    }
}

/// Unit normal to the columns of the `(2n+2) × (2n+1)` mixed Hessian, with
/// the last nonzero-tie rule: last component nonnegative, and if it
/// vanishes the first nonzero component positive.
pub fn normal_from_hessian(m: &Matrix, tol: RankTolerance) -> Result<Vec<f64>> {
    let null = m.transpose().nullspace(tol.rel);
    if null.len() != 1 {
        return Err(Error::RankDeficient(format!("tangent map has {}-dimensional normal space", null.len())));
    }
    let mut nv = null.into_iter().next().expect("one vector");
    let norm = crate::linalg::norm(&nv);
    for v in nv.iter_mut() {
        *v /= norm;
    }
    let last = *nv.last().expect("nonempty");
    let flip = if last.abs() > 1e-14 { last < 0.0 } else { nv.iter().find(|v| v.abs() > 1e-14).is_some_and(|v| *v < 0.0) };
    if flip {
        for v in nv.iter_mut() {
            *v = -*v;
        }
    }
    Ok(nv)
}

/// `𝒞_ij = ∂²/∂y_i∂y_j ⟨N, ∇_{x,t}Φ⟩` with `N` frozen.
pub fn cinematic_matrix(phase: &Phase, x: &[f64], t: f64, y: &[f64], normal: &[f64]) -> Result<Matrix> {
    let z = phase.pack(x, t, y)?;
    let d = phase.dim();
    check_len(d + 1, normal.len())?;
    let mut c = Matrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let (zi, zj) = (d + 1 + i, d + 1 + j);
            let zs: Vec<_> = z
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let a = if k <= d { normal[k] } else { 0.0 };
                    seed3(*v, a, if k == zi { 1.0 } else { 0.0 }, if k == zj { 1.0 } else { 0.0 })
                })
                .collect();
            let v = part3(phase.eval_z(&zs)?);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(c)
}

/// Rotational and cinematic curvature data at one point.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureReport {
    /// `(2n+2) × (2n+1)` mixed Hessian `Φ''_{(x,t),y}`.
    pub mixed_hessian: Matrix,
    /// `det Φ''_{x,y}`.
    pub spatial_det: f64,
    pub spatial_sigma: Vec<f64>,
    pub spatial_rank: usize,
    pub normal: Vec<f64>,
    /// `max_j |⟨N, Ξ_j⟩|`.
    pub normal_residual: f64,
    pub cinematic: Matrix,
    pub cinematic_sigma: Vec<f64>,
    pub cinematic_rank: usize,
}

impl CurvatureReport {
    /// Smallest singular value counted in the cinematic rank, relative to
    /// the largest.
    pub fn cinematic_min_ratio(&self) -> f64 {
        let smax = self.cinematic_sigma.first().copied().unwrap_or(0.0);
        if self.cinematic_rank == 0 || smax == 0.0 {
            return 0.0;
        }
        self.cinematic_sigma[self.cinematic_rank - 1] / smax
    }
}

/// Full curvature report at `(x, t, y)`.
pub fn curvature_report(phase: &Phase, x: &[f64], t: f64, y: &[f64], tol: RankTolerance) -> Result<CurvatureReport> {
    let d = phase.dim();
    let mh = mixed_hessian(phase, x, t, y)?;
    let spatial = mh.submatrix(0, 0, d, d);
    let spatial_sigma = spatial.singular_values();
    let spatial_rank = numeric_rank(&spatial_sigma, tol.rel, tol.abs_floor);
    let normal = normal_from_hessian(&mh, tol)?;
    let residual = (0..d)
        .map(|j| (0..=d).map(|a| normal[a] * mh[(a, j)]).sum::<f64>().abs())
        .fold(0.0, f64::max);
    let cin = cinematic_matrix(phase, x, t, y, &normal)?;
    let cinematic_sigma = cin.singular_values();
    let cinematic_rank = numeric_rank(&cinematic_sigma, tol.rel, tol.abs_floor);
    Ok(CurvatureReport {
        spatial_det: spatial.det()?,
        mixed_hessian: mh,
        spatial_sigma,
        spatial_rank,
        normal,
        normal_residual: residual,
        cinematic: cin,
        cinematic_sigma,
        cinematic_rank,
    })
}

/// Finite-difference mixed Hessian with its error estimate.
#[derive(Debug, Clone)]
pub struct FdHessian {
    pub value: Matrix,
    /// Entrywise difference between the chosen extrapolant and its
    /// neighbour on the step ladder.
    pub error: Matrix,
}

/// Relative base step for the finite-difference oracle: `ε^{1/6}`, the
/// balance point of rounding error `ε/h²` against the `h⁴` truncation of
/// the extrapolated stencil.
pub fn fd_step() -> f64 {
    f64::EPSILON.powf(1.0 / 6.0)
}

/// Number of halvings of the base step tried by [`richardson_ladder`].
const FD_LEVELS: usize = 8;

/// Central-difference estimates `D(h_k)` on `h_k = h₀2^{−k}`, one
/// Richardson level on each consecutive pair, returning the extrapolant
/// whose distance to the next one is smallest. Near the edge of a chart
/// the high derivatives grow quickly and the best step shrinks with them.
fn richardson_ladder(mut stencil: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let d: Vec<f64> = (0..FD_LEVELS).map(|k| stencil(0.5f64.powi(k as i32))).collect::<Result<_>>()?;
    let r: Vec<f64> = d.windows(2).map(|w| (4.0 * w[1] - w[0]) / 3.0).collect();
    let mut best = (r[0], f64::INFINITY);
    for k in 0..r.len() - 1 {
        let e = (r[k + 1] - r[k]).abs();
        if e < best.1 {
            best = (r[k], e);
        }
    }
    Ok(best)
}

/// `∂²Φ/∂(x,t)_a ∂y_b` by central differences with Richardson
/// extrapolation and per-entry step selection.
pub fn mixed_hessian_fd(phase: &Phase, x: &[f64], t: f64, y: &[f64]) -> Result<FdHessian> {
    let z = phase.pack(x, t, y)?;
    let d = phase.dim();
    let at = |a: usize, ha: f64, b: usize, hb: f64| -> Result<f64> {
        let mut zz = z.clone();
        zz[a] += ha;
        zz[b] += hb;
        if zz[d] <= 0.0 {
            return Err(Error::InvalidParameter("finite-difference step crosses t = 0".into()));
        }
        phase.eval_z(&zz)
    };
    let base = fd_step();
    let mut value = Matrix::zeros(d + 1, d);
    let mut error = Matrix::zeros(d + 1, d);
    for a in 0..=d {
        for bcol in 0..d {
            let b = d + 1 + bcol;
            let (ha, hb) = (base * z[a].abs().max(1.0), base * z[b].abs().max(1.0));
            let (v, e) = richardson_ladder(|k| {
                let (ha, hb) = (ha * k, hb * k);
                Ok((at(a, ha, b, hb)? - at(a, ha, b, -hb)? - at(a, -ha, b, hb)? + at(a, -ha, b, -hb)?) / (4.0 * ha * hb))
            })?;
            value[(a, bcol)] = v;
            error[(a, bcol)] = e;
        }
    }
    if value.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("finite-difference Hessian is not finite".into()));
    }
    Ok(FdHessian { value, error })
}

/// Cinematic matrix by second central differences in `y` of
/// `⟨N, ∇_{x,t}Φ⟩`, the inner directional derivative taken exactly.
pub fn cinematic_matrix_fd(phase: &Phase, x: &[f64], t: f64, y: &[f64], normal: &[f64]) -> Result<Matrix> {
    let z = phase.pack(x, t, y)?;
    let d = phase.dim();
    check_len(d + 1, normal.len())?;
    let dir = |zz: &[f64]| -> Result<f64> {
        let zs: Vec<_> =
            zz.iter().enumerate().map(|(k, v)| seed1(*v, if k <= d { normal[k] } else { 0.0 })).collect();
        Ok(phase.eval_z(&zs)?.d)
    };
    let at = |i: usize, hi: f64, j: usize, hj: f64| -> Result<f64> {
        let mut zz = z.clone();
        zz[d + 1 + i] += hi;
        zz[d + 1 + j] += hj;
        dir(&zz)
    };
    let base = fd_step();
    let mut c = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let (hi, hj) = (base * y[i].abs().max(1.0), base * y[j].abs().max(1.0));
            c[(i, j)] = richardson_ladder(|k| {
                let (hi, hj) = (hi * k, hj * k);
                Ok((at(i, hi, j, hj)? - at(i, hi, j, -hj)? - at(i, -hi, j, hj)? + at(i, -hi, j, -hj)?) / (4.0 * hi * hj))
            })?
            .0;
        }
    }
    Ok(c)
}

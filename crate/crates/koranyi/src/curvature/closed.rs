//! Closed forms at normal-form points (`x = 0`, horizontal data along
//! `e₁`), used as cross-checks for the numerically differentiated phases.
//!
//! Equator: `Φ = y₁H₁`, evaluated at `y' = 0`, `ȳ = s`, with `H₁ = a`
//! (`a⁴ + s² = t⁴`) and frequency `y₁ = τ`.
//! Intermediate: `Φ = ȳH̄`, evaluated at `u_y`, `H̄`, frequency `ȳ = τ`.

use crate::error::{check_len, Error, Result};
use crate::heisenberg::GroupContext;
use crate::linalg::{dot, Matrix};

fn consistent(t: f64, a: f64, s: f64) -> Result<()> {
    let r = a.powi(4) + s * s - t.powi(4);
    if r.abs() > 1e-9 * t.powi(4) {
        return Err(Error::InvalidParameter(format!("(t, H, ȳ) off the sphere by {r}")));
    }
    Ok(())
}

/// Spatial mixed Hessian `Φ''_{x,y}` of the equator phase at `x = 0`,
/// `y' = 0`; rows `(u_x, x̄)`, columns `(y₁, y₂, …, y_{2n}, ȳ)`.
pub fn equator_hessian_closed(ctx: &GroupContext, t: f64, s: f64, a: f64, tau: f64) -> Result<Matrix> {
    consistent(t, a, s)?;
    let m = 2 * ctx.n();
    let d = m + 1;
    let j = ctx.j();
    let k = s / (4.0 * a * a);
    let r = tau / a;
    let mut h = Matrix::zeros(d, d);
    for i in 0..m {
        h[(i, 0)] = if i == 0 { 1.0 } else { 0.0 } + k * j[(i, 0)];
        for c in 1..m {
            h[(i, c)] = r * (if i == c { 1.0 } else { 0.0 } + k * j[(i, c)]);
        }
        h[(i, m)] = r * (1.0 + s * s / a.powi(4)) / (4.0 * a) * j[(i, 0)];
    }
    h[(m, 0)] = s / (2.0 * a.powi(3));
    h[(m, m)] = r * (1.0 / (2.0 * a * a) + 3.0 * s * s / (4.0 * a.powi(6)));
    Ok(h)
}

/// `det Φ''_{x,y} = (τ/a)^{2n} a^{2n+1} (4a³)^{−(2n+1)} det(4a²I − sJ) (2 − γ)`.
pub fn equator_det_closed(n: usize, t: f64, s: f64, a: f64, tau: f64) -> Result<f64> {
    consistent(t, a, s)?;
    let nn = n as i32;
    let base = a.powi(2 * nn + 1) * (4.0 * a.powi(3)).powi(-(2 * nn + 1)) * (16.0 * a.powi(4) + s * s).powi(nn);
    Ok((tau / a).powi(2 * nn) * base * (2.0 - equator_gamma_closed(a, s)))
}

/// `γ = −s²(46a⁴ + s²) / (a⁴(16a⁴ + s²))`.
pub fn equator_gamma_closed(a: f64, s: f64) -> f64 {
    let a4 = a.powi(4);
    -s * s * (46.0 * a4 + s * s) / (a4 * (16.0 * a4 + s * s))
}

/// `γ` from its defining inner product
/// `[−(s/(2a³))(12a²e₁ + sJe₁) + aJe₁]ᵀ (4a²I − sJ)⁻¹ (2s/a) e₁`.
pub fn equator_gamma_from_definition(ctx: &GroupContext, a: f64, s: f64) -> Result<f64> {
    let m = 2 * ctx.n();
    let mut e1 = vec![0.0; m];
    e1[0] = 1.0;
    let je1 = ctx.apply_j(&e1);
    let left: Vec<f64> =
        (0..m).map(|i| -(s / (2.0 * a.powi(3))) * (12.0 * a * a * e1[i] + s * je1[i]) + a * je1[i]).collect();
    let mat = Matrix::identity(m).scaled(4.0 * a * a).sub(&ctx.j().scaled(s))?;
    let rhs: Vec<f64> = e1.iter().map(|v| 2.0 * s / a * v).collect();
    Ok(dot(&left, &mat.solve(&rhs)?))
}

/// Lower bound on `|det Φ''_{x,y}|` implied by `γ ≤ 0`:
/// `2 |τ/a|^{2n} |a|^{2n+1} (16a⁴ + s²)^n / (4|a|³)^{2n+1}`.
pub fn equator_det_lower_bound(n: usize, s: f64, a: f64, tau: f64) -> f64 {
    let nn = n as i32;
    let aa = a.abs();
    2.0 * (tau / a).abs().powi(2 * nn) * aa.powi(2 * nn + 1) * (16.0 * a.powi(4) + s * s).powi(nn)
        / (4.0 * aa.powi(3)).powi(2 * nn + 1)
}

/// The equator cinematic matrix on the slice `x = 0`, `y' = 0`, `ȳ = 0`
/// with frequency `y₁ = t` (graph value `H₁ = −t`):
/// `(α_t/t)·[[0, 0, 0], [0, −I, −v/(4t)], [0, −vᵀ/(4t), −3/(2t²)]]` with
/// `v_j = J_{1j}`, `j = 2, …, 2n`. Its Schur complement on the last entry
/// is `(α_t/t³)(−3/2 + |v|²/16)`, nonzero for every admissible `J`.
pub fn equator_cinematic_slice(ctx: &GroupContext, t: f64, alpha_t: f64) -> Matrix {
    let m = 2 * ctx.n();
    let k = alpha_t / t;
    let mut c = Matrix::zeros(m + 1, m + 1);
    for j in 1..m {
        c[(j, j)] = -k;
        let off = -k * ctx.j()[(0, j)] / (4.0 * t);
        c[(j, m)] = off;
        c[(m, j)] = off;
    }
    c[(m, m)] = -1.5 * k / (t * t);
    c
}

/// `−3/2 + |v|²/16` from [`equator_cinematic_slice`], the last pivot in
/// units of `α_t/t³`.
pub fn equator_slice_schur(ctx: &GroupContext) -> f64 {
    let v2: f64 = (1..2 * ctx.n()).map(|j| ctx.j()[(0, j)].powi(2)).sum();
    -1.5 + v2 / 16.0
}

/// Full mixed Hessian `Φ''_{(x,t),y}` of the intermediate phase at `x = 0`;
/// rows `(u_x, x̄, t)`, columns `(u_y, ȳ)`.
pub fn intermediate_hessian_closed(ctx: &GroupContext, t: f64, uy: &[f64], hbar: f64, tau: f64) -> Result<Matrix> {
    let m = 2 * ctx.n();
    check_len(m, uy.len())?;
    let r2 = dot(uy, uy);
    let r = (t.powi(4) - r2 * r2 - hbar * hbar).abs();
    if r > 1e-9 * t.powi(4) {
        return Err(Error::InvalidParameter("(t, u_y, H̄) off the sphere".into()));
    }
    let j = ctx.j();
    let ju = ctx.apply_j(uy);
    let mut h = Matrix::zeros(m + 2, m + 1);
    let k = tau / hbar;
    for i in 0..m {
        for c in 0..m {
            let delta = if i == c { 1.0 } else { 0.0 };
            h[(i, c)] = k
                * (2.0 * r2 * delta + 4.0 * uy[i] * uy[c] + 4.0 * r2 * r2 / (hbar * hbar) * uy[i] * uy[c]
                    + 0.5 * hbar * j[(i, c)]);
        }
        h[(i, m)] = 0.5 * ju[i] + 2.0 * r2 * uy[i] / hbar;
        h[(m + 1, i)] = 4.0 * tau * t.powi(3) * r2 * uy[i] / hbar.powi(3);
    }
    h[(m, m)] = 1.0;
    h[(m + 1, m)] = 2.0 * t.powi(3) / hbar;
    Ok(h)
}

/// The matrix `X` rebuilt from derivatives of `Φ = ȳH̄` at `x = 0`:
/// `X = (H̄/τ)·A + (∇_{u_y}H̄) bᵀ` with `A_{ij} = ∂_{u_y,i}∂_{u_x,j}Φ` and
/// `b_j = ∂_ȳ∂_{u_x,j}Φ`. This is the `u_y`–`u_x` block of the mixed
/// Hessian after eliminating against the `ȳ` row, which is the form in
/// which `X` appears.
pub fn x_from_derivatives(spatial: &Matrix, grad_uy_phi: &[f64], phi: f64, tau: f64) -> Matrix {
    let m = grad_uy_phi.len();
    let hbar = phi / tau;
    Matrix::from_fn(m, m, |i, j| hbar / tau * spatial[(j, i)] + grad_uy_phi[i] / tau * spatial[(j, m)])
}

/// Parameters of the intermediate cinematic matrix at `u_y = y₁e₁`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct IntermediateCinematic {
    pub d: f64,
    pub lambda: f64,
    /// `|PB|²`.
    pub b_norm2: f64,
    /// `|D + λ⁻¹|PB|²|`.
    pub schur: f64,
}

/// `D`, `λ`, `B` for the intermediate region.
pub fn intermediate_cinematic_params(ctx: &GroupContext, y1: f64, hbar: f64) -> IntermediateCinematic {
    let m = 2 * ctx.n();
    let u4 = y1.powi(4);
    let h2 = hbar * hbar;
    let den = 46.0 * u4 + h2;
    let lambda = (16.0 * u4 + h2) / den;
    let d = 12.0 * u4 / den * (7.0 - 8.0 * u4 / h2) - 3.0;
    let coef = -(8.0 * y1 / hbar) * ((h2 + u4) / den);
    // (u_yᵀJ)_j = y₁ J_{0j}
    let b_norm2: f64 = (1..m).map(|j| (coef * y1 * ctx.j()[(0, j)]).powi(2)).sum();
    IntermediateCinematic { d, lambda, b_norm2, schur: (d + b_norm2 / lambda).abs() }
}

/// The intermediate cinematic matrix at `u_y = y₁e₁`, frequency `τ`:
/// `(2ᾱτ|u_y|²/H̄²)·[[D, BᵀPᵀ, 0], [PB, −λI, 0], [0, 0, 0]]`.
pub fn intermediate_cinematic_closed(ctx: &GroupContext, y1: f64, hbar: f64, tau: f64, abar: f64) -> Matrix {
    let m = 2 * ctx.n();
    let p = intermediate_cinematic_params(ctx, y1, hbar);
    let u4 = y1.powi(4);
    let coef = -(8.0 * y1 / hbar) * ((hbar * hbar + u4) / (46.0 * u4 + hbar * hbar));
    let pref = 2.0 * abar * tau * y1 * y1 / (hbar * hbar);
    let mut c = Matrix::zeros(m + 1, m + 1);
    c[(0, 0)] = pref * p.d;
    for j in 1..m {
        let b = coef * y1 * ctx.j()[(0, j)];
        c[(0, j)] = pref * b;
        c[(j, 0)] = pref * b;
        c[(j, j)] = -pref * p.lambda;
    }
    c
}

/// `|det X|` at the pole (`u_y = 0`, `H̄ = t²`): `X = −(t²/2)J`, so
/// `|det X| = (t²/2)^{2n}`.
pub fn pole_x_det(n: usize, t: f64) -> f64 {
    (t * t / 2.0).powi(2 * n as i32)
}

/// `g''(w) = 2|w|²I + 4wwᵀ` for `g(w) = |w|⁴/2`.
pub fn quartic_hessian(w: &[f64]) -> Matrix {
    let r2 = dot(w, w);
    Matrix::identity(w.len()).scaled(2.0 * r2).add(&Matrix::outer(w, w).scaled(4.0)).expect("same shape")
}

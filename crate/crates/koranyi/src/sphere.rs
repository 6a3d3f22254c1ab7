//! Korányi sphere geometry: defining function, graph parametrizations near
//! the pole, the equator and in the intermediate region, and region
//! classification.
//!
//! The sphere of radius `t` centred at `x` is `{y : F(x, t, y) = 0}` with
//! `F(x,t,y) = |u_x − u_y|⁴ + (x̄ − ȳ + ½ u_xᵀ J u_y)² − t⁴`.

use crate::dual::Scalar;
use crate::error::{check_len, Error, Result};
use crate::heisenberg::GroupContext;

/// Newton tolerance on `|F|` for the implicit solves.
pub const NEWTON_TOL: f64 = 1e-12;
/// Newton iteration cap for the implicit solves.
pub const NEWTON_MAX_ITER: usize = 50;

/// Point `(ρ u, ±√(1 − ρ⁴))` of the unit Korányi sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    pub rho: f64,
    /// Unit vector in ℝ²ⁿ.
    pub dir: Vec<f64>,
    /// `+1` for the northern hemisphere, `−1` for the southern.
    pub hemisphere: f64,
}

impl SpherePoint {
    /// Embeds into ℍⁿ.
    pub fn embed(&self) -> Vec<f64> {
        let mut w: Vec<f64> = self.dir.iter().map(|v| self.rho * v).collect();
        w.push(self.hemisphere * (1.0 - self.rho.powi(4)).max(0.0).sqrt());
        w
    }

    /// Recovers the parametrization of a point on the unit sphere.
    pub fn from_point(w: &[f64]) -> Self {
        let m = w.len() - 1;
        let rho = crate::linalg::norm(&w[..m]);
        let dir = if rho > 0.0 {
            w[..m].iter().map(|v| v / rho).collect()
        } else {
            let mut e = vec![0.0; m];
            e[0] = 1.0;
            e
        };
        SpherePoint { rho, dir, hemisphere: if w[m] < 0.0 { -1.0 } else { 1.0 } }
    }
}

/// `c = x̄ − ȳ + ½ u_xᵀ J u_y`, the central part of `y⁻¹x`.
pub(crate) fn central<S: Scalar>(ctx: &GroupContext, x: &[S], y: &[S]) -> S {
    let m = 2 * ctx.n();
    x[m] - y[m] + ctx.symplectic(&x[..m], &y[..m]).scale(0.5)
}

fn sq_dist<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::cst(0.0), |acc, (p, q)| acc + (*p - *q).sq())
}

/// Defining function `F(x, t, y)`.
pub fn defining_f(ctx: &GroupContext, x: &[f64], t: f64, y: &[f64]) -> Result<f64> {
    check_len(ctx.dim(), x.len())?;
    check_len(ctx.dim(), y.len())?;
    Ok(defining_f_generic(ctx, x, t, y))
}

pub(crate) fn defining_f_generic<S: Scalar>(ctx: &GroupContext, x: &[S], t: S, y: &[S]) -> S {
    let m = 2 * ctx.n();
    let d2 = sq_dist(&x[..m], &y[..m]);
    let c = central(ctx, x, y);
    d2 * d2 + c * c - t.sq().sq()
}

/// `∇_{x,t} F`, a vector of length `2n + 2`. The `t`-component is `−4t³`.
pub fn grad_f(ctx: &GroupContext, x: &[f64], t: f64, y: &[f64]) -> Result<Vec<f64>> {
    check_len(ctx.dim(), x.len())?;
    check_len(ctx.dim(), y.len())?;
    let m = 2 * ctx.n();
    let d: Vec<f64> = (0..m).map(|i| x[i] - y[i]).collect();
    let d2: f64 = d.iter().map(|v| v * v).sum();
    let c = central(ctx, x, y);
    let jy = ctx.apply_j(&y[..m]);
    let mut g: Vec<f64> = (0..m).map(|i| 4.0 * d2 * d[i] + c * jy[i]).collect();
    g.push(2.0 * c);
    g.push(-4.0 * t.powi(3));
    Ok(g)
}

/// `∂F/∂y_k` for one coordinate `k` of `y`.
fn df_dy<S: Scalar>(ctx: &GroupContext, x: &[S], t: S, y: &[S], k: usize) -> S {
    let _ = t;
    let m = 2 * ctx.n();
    let c = central(ctx, x, y);
    if k == m {
        return (c + c).neg();
    }
    let d2 = sq_dist(&x[..m], &y[..m]);
    // ∂/∂y_k (uᵀ J v) = (Jᵀu)_k = −(J u)_k
    let jx = ctx.apply_j(&x[..m]);
    let dk = x[k] - y[k];
    (d2 * dk).scale(-4.0) - c * jx[k]
}

/// Stable evaluation of `1 − √(1 − a)` as `a / (1 + √(1 − a))`.
pub(crate) fn one_minus_sqrt<S: Scalar>(a: S) -> S {
    a / (S::cst(1.0) + (S::cst(1.0) - a).sqrt())
}

/// Sheared pole graph `G(x, t, u_y) = x̄ + ½u_xᵀJu_y + t²(1 − √(1 − |w|⁴))`
/// with `w = (u_x − u_y)/t`. The sphere point itself has
/// `ȳ = G − t²`.
pub fn graph_g(ctx: &GroupContext, x: &[f64], t: f64, uy: &[f64]) -> Result<f64> {
    check_len(ctx.dim(), x.len())?;
    check_len(2 * ctx.n(), uy.len())?;
    let w4 = (sq_dist(&x[..uy.len()], uy) / (t * t)).powi(2);
    if w4 >= 1.0 {
        return Err(Error::OutOfDomain(format!("|w|⁴ = {w4} must be below 1")));
    }
    Ok(graph_g_generic(ctx, x, t, uy))
}

pub(crate) fn graph_g_generic<S: Scalar>(ctx: &GroupContext, x: &[S], t: S, uy: &[S]) -> S {
    let m = 2 * ctx.n();
    let t2 = t * t;
    let w2 = sq_dist(&x[..m], uy) / t2;
    x[m] + ctx.symplectic(&x[..m], uy).scale(0.5) + t2 * one_minus_sqrt(w2 * w2)
}

/// Branch of a two-valued graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Branch {
    Upper,
    Lower,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Upper => 1.0,
            Branch::Lower => -1.0,
        }
    }
}

fn newton_scalar(
    what: &'static str,
    mut y0: f64,
    scale: f64,
    mut f_and_df: impl FnMut(f64) -> (f64, f64),
) -> Result<f64> {
    let tol = NEWTON_TOL * scale.max(1.0);
    let mut last = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITER {
        let (f, df) = f_and_df(y0);
        last = f.abs();
        if !f.is_finite() || !df.is_finite() {
            break;
        }
        if last <= tol {
            return Ok(y0);
        }
        if df == 0.0 {
            break;
        }
        let step = f / df;
        y0 -= step;
        if step.abs() <= 4.0 * f64::EPSILON * y0.abs().max(1e-300) {
            let (f, _) = f_and_df(y0);
            last = f.abs();
            if last <= tol {
                return Ok(y0);
            }
            break;
        }
    }
    Err(Error::NoConvergence { what, iterations: NEWTON_MAX_ITER, residual: last })
}

/// Equator graph: solves `F(x, t, (y₁, y', ȳ)) = 0` for `y₁`. `branch`
/// picks `y₁ < x₁` (`Upper`, the sphere point near `+e₁` direction of
/// `Θ`) or `y₁ > x₁` (`Lower`).
pub fn solve_h1(
    ctx: &GroupContext,
    x: &[f64],
    t: f64,
    y_prime: &[f64],
    y_bar: f64,
    branch: Branch,
) -> Result<f64> {
    check_len(ctx.dim(), x.len())?;
    check_len(2 * ctx.n() - 1, y_prime.len())?;
    let guess = h1_guess(ctx, x, t, y_prime, y_bar, branch)?;
    solve_h1_from(ctx, x, t, y_prime, y_bar, guess)
}

fn assemble_eq<S: Scalar>(y1: S, y_prime: &[S], y_bar: S) -> Vec<S> {
    let mut y = Vec::with_capacity(y_prime.len() + 2);
    y.push(y1);
    y.extend_from_slice(y_prime);
    y.push(y_bar);
    y
}

/// Initial guess ignoring the dependence of the symplectic term on `y₁`.
fn h1_guess(ctx: &GroupContext, x: &[f64], t: f64, y_prime: &[f64], y_bar: f64, branch: Branch) -> Result<f64> {
    let y = assemble_eq(x[0], y_prime, y_bar);
    let c = central(ctx, x, &y);
    let r4 = t.powi(4) - c * c;
    let tail: f64 = (1..2 * ctx.n()).map(|i| (x[i] - y[i]).powi(2)).sum();
    let d1sq = r4.max(0.0).sqrt() - tail;
    if d1sq <= 0.0 {
        return Err(Error::OutOfDomain("no equator graph point for these (y', ȳ)".into()));
    }
    Ok(x[0] - branch.sign() * d1sq.sqrt())
}

fn solve_h1_from(ctx: &GroupContext, x: &[f64], t: f64, y_prime: &[f64], y_bar: f64, guess: f64) -> Result<f64> {
    newton_scalar("equator graph H1", guess, t.powi(4), |y1| {
        let y = assemble_eq(y1, y_prime, y_bar);
        (defining_f_generic(ctx, x, t, &y), df_dy(ctx, x, t, &y, 0))
    })
}

/// Generic-scalar equator graph: solves in `f64` and then refines with
/// Newton steps in the scalar type so derivative parts are exact.
pub(crate) fn solve_h1_generic<S: Scalar>(
    ctx: &GroupContext,
    x: &[S],
    t: S,
    y_prime: &[S],
    y_bar: S,
    branch: Branch,
) -> Result<S> {
    let xr: Vec<f64> = x.iter().map(|v| v.re()).collect();
    let ypr: Vec<f64> = y_prime.iter().map(|v| v.re()).collect();
    let y1 = solve_h1(ctx, &xr, t.re(), &ypr, y_bar.re(), branch)?;
    let mut s = S::cst(y1);
    for _ in 0..4 {
        let y = assemble_eq(s, y_prime, y_bar);
        s = s - defining_f_generic(ctx, x, t, &y) / df_dy(ctx, x, t, &y, 0);
    }
    Ok(s)
}

/// Intermediate graph: solves `F(x, t, (u_y, ȳ)) = 0` for `ȳ` by Newton
/// started from the closed form `x̄ + ½u_xᵀJu_y ± √(t⁴ − |u_x − u_y|⁴)`.
/// `Upper` is the `+` sign.
pub fn solve_hbar(ctx: &GroupContext, x: &[f64], t: f64, uy: &[f64], branch: Branch) -> Result<f64> {
    check_len(ctx.dim(), x.len())?;
    check_len(2 * ctx.n(), uy.len())?;
    let m = 2 * ctx.n();
    let d2 = sq_dist(&x[..m], uy);
    let rad = t.powi(4) - d2 * d2;
    if rad < 0.0 {
        return Err(Error::OutOfDomain("|u_x − u_y| exceeds t".into()));
    }
    let base = x[m] + 0.5 * ctx.symplectic(&x[..m], uy);
    let guess = base + branch.sign() * rad.sqrt();
    let mut y: Vec<f64> = uy.to_vec();
    y.push(guess);
    newton_scalar("intermediate graph Hbar", guess, t.powi(4), |yb| {
        y[m] = yb;
        (defining_f_generic(ctx, x, t, &y), df_dy(ctx, x, t, &y, m))
    })
}

pub(crate) fn solve_hbar_generic<S: Scalar>(ctx: &GroupContext, x: &[S], t: S, uy: &[S], branch: Branch) -> Result<S> {
    let xr: Vec<f64> = x.iter().map(|v| v.re()).collect();
    let ur: Vec<f64> = uy.iter().map(|v| v.re()).collect();
    let yb = solve_hbar(ctx, &xr, t.re(), &ur, branch)?;
    let m = 2 * ctx.n();
    let mut s = S::cst(yb);
    for _ in 0..4 {
        let mut y = uy.to_vec();
        y.push(s);
        s = s - defining_f_generic(ctx, x, t, &y) / df_dy(ctx, x, t, &y, m);
    }
    Ok(s)
}

/// Chart regions on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Region {
    NorthPole,
    SouthPole,
    Equator,
    Intermediate,
}

/// Thresholds for [`classify_region`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RegionThresholds {
    pub pole: f64,
    pub equator: f64,
}

impl Default for RegionThresholds {
    fn default() -> Self {
        RegionThresholds { pole: 0.35, equator: 0.2 }
    }
}

/// Classification result; for non-polar points also the orthogonal map
/// sending `u_ω/|u_ω|` to `e₁`.
#[derive(Debug, Clone)]
pub struct Classification {
    pub region: Region,
    pub rotation: Option<crate::linalg::Matrix>,
}

/// Classifies a point of the unit sphere (`|ω|_K = 1` to `1e-9`).
pub fn classify_region(ctx: &GroupContext, omega: &[f64], th: RegionThresholds) -> Result<Classification> {
    check_len(ctx.dim(), omega.len())?;
    let r = crate::heisenberg::koranyi_norm_unchecked(omega);
    if (r - 1.0).abs() > 1e-9 {
        return Err(Error::OutOfDomain(format!("|ω|_K = {r} is not 1")));
    }
    let m = 2 * ctx.n();
    let rho = crate::linalg::norm(&omega[..m]);
    if rho <= th.pole {
        let region = if omega[m] >= 0.0 { Region::NorthPole } else { Region::SouthPole };
        return Ok(Classification { region, rotation: None });
    }
    let dir: Vec<f64> = omega[..m].iter().map(|v| v / rho).collect();
    let rotation = Some(crate::heisenberg::reflection_to_e1(&dir));
    let region = if omega[m].abs() <= th.equator { Region::Equator } else { Region::Intermediate };
    Ok(Classification { region, rotation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn spec_examples() {
        let g = GroupContext::standard(1).unwrap();
        assert_eq!(defining_f(&g, &[0.0; 3], 1.0, &[1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(defining_f(&g, &[0.0; 3], 1.0, &[0.0, 0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(defining_f(&g, &[0.0; 3], 1.0, &[0.0; 3]).unwrap(), -1.0);
        let gr = grad_f(&g, &[0.0; 3], 1.0, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(gr, vec![-4.0, 0.0, 0.0, -4.0]);
        assert_eq!(graph_g(&g, &[0.0, 0.0, 1.0], 1.0, &[0.0, 0.0]).unwrap(), 1.0);
        let r = (15.0f64 / 16.0).powf(0.25);
        assert!((graph_g(&g, &[0.0; 3], 1.0, &[r, 0.0]).unwrap() - 0.75).abs() < 1e-14);
        assert!((solve_hbar(&g, &[0.0; 3], 1.0, &[0.0, 0.0], Branch::Upper).unwrap() - 1.0).abs() < 1e-14);
        assert!((solve_hbar(&g, &[0.0; 3], 1.0, &[r, 0.0], Branch::Upper).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = GroupContext::admissible(2, &mut rng).unwrap();
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-0.5..0.5)).collect();
        let y: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let t = 1.4;
        let gr = grad_f(&g, &x, t, &y).unwrap();
        let h = 1e-6;
        for k in 0..6 {
            let eval = |s: f64| {
                let mut xx = x.clone();
                let mut tt = t;
                if k < 5 {
                    xx[k] += s;
                } else {
                    tt += s;
                }
                defining_f(&g, &xx, tt, &y).unwrap()
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            assert!((fd - gr[k]).abs() < 1e-7, "k={k}: {fd} vs {}", gr[k]);
        }
    }

    #[test]
    fn graphs_lie_on_the_sphere_and_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 1..=2 {
            let g = GroupContext::admissible(n, &mut rng).unwrap();
            let m = 2 * n;
            for _ in 0..50 {
                let x: Vec<f64> = (0..=m).map(|_| rng.random_range(-0.1..0.1)).collect();
                let t = rng.random_range(1.0..2.0);
                // pole graph versus lower intermediate branch
                let uy: Vec<f64> = (0..m).map(|i| x[i] + rng.random_range(-0.3..0.3)).collect();
                let gg = graph_g(&g, &x, t, &uy).unwrap() - t * t;
                let mut y = uy.clone();
                y.push(gg);
                assert!(defining_f(&g, &x, t, &y).unwrap().abs() < 1e-12);
                let hb = solve_hbar(&g, &x, t, &uy, Branch::Lower).unwrap();
                assert!((hb - gg).abs() < 1e-12);
                // equator graph
                let yp: Vec<f64> = (1..m).map(|i| x[i] + rng.random_range(-0.05..0.05)).collect();
                let yb = x[m] + rng.random_range(-0.2..0.2);
                for br in [Branch::Upper, Branch::Lower] {
                    let h1 = solve_h1(&g, &x, t, &yp, yb, br).unwrap();
                    let y = assemble_eq(h1, &yp, yb);
                    assert!(defining_f(&g, &x, t, &y).unwrap().abs() <= 1e-12 * t.powi(4));
                    assert_eq!((x[0] - h1).signum(), br.sign());
                }
            }
        }
    }

    #[test]
    fn h1_closed_form_at_origin() {
        let g = GroupContext::standard(1).unwrap();
        for (t, yb) in [(1.0, 0.0), (1.5, 0.3), (2.0, -0.7)] {
            let h1 = solve_h1(&g, &[0.0; 3], t, &[0.0], yb, Branch::Upper).unwrap();
            let expect = -(t.powi(4) - yb * yb).powf(0.25);
            assert!((h1 - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn classification() {
        let g = GroupContext::standard(1).unwrap();
        let th = RegionThresholds::default();
        let c = classify_region(&g, &[0.0, 0.0, 1.0], th).unwrap();
        assert_eq!(c.region, Region::NorthPole);
        assert_eq!(classify_region(&g, &[0.0, 0.0, -1.0], th).unwrap().region, Region::SouthPole);
        assert_eq!(classify_region(&g, &[1.0, 0.0, 0.0], th).unwrap().region, Region::Equator);
        let p = SpherePoint { rho: 0.8, dir: vec![0.6, 0.8], hemisphere: 1.0 }.embed();
        let c = classify_region(&g, &p, th).unwrap();
        assert_eq!(c.region, Region::Intermediate);
        let r = c.rotation.unwrap().matvec(&p[..2]).unwrap();
        assert!((r[0] - 0.8).abs() < 1e-14 && r[1].abs() < 1e-14);
        assert!(classify_region(&g, &[0.5, 0.0, 0.0], th).is_err());
    }
}

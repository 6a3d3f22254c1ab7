//! Discretized spherical averages `A_t f(x) = ∫_{S_K} f(x·δ_t(ω)⁻¹) dμ(ω)`,
//! local, lacunary and global maximal functions over time grids, grid
//! functions and Riemann-sum `L^p` norms.

use crate::error::{check_len, Error, Result};
use crate::exec::{pairwise_sum, Exec};
use crate::heisenberg::GroupContext;
use crate::quadrature::QuadratureRule;
use serde::{Deserialize, Serialize};

/// A scalar field on `ℍⁿ`.
pub trait Field: Sync {
    fn eval(&self, y: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64 + Sync> Field for F {
    fn eval(&self, y: &[f64]) -> f64 {
        self(y)
    }
}

/// Values on a uniform tensor grid over an axis-aligned box, row-major with
/// the last axis fastest. Off-grid values are multilinear inside the box and
/// zero outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    lo: Vec<f64>,
    hi: Vec<f64>,
    res: Vec<usize>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, res: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        check_len(lo.len(), hi.len())?;
        check_len(lo.len(), res.len())?;
        if lo.is_empty() {
            return Err(Error::InvalidParameter("grid needs at least one axis".into()));
        }
        if let Some(r) = res.iter().find(|r| **r < 2) {
            return Err(Error::InvalidParameter(format!("grid resolution must be at least 2, got {r}")));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidParameter("grid box must have lo < hi on every axis".into()));
        }
        check_len(res.iter().product(), values.len())?;
        Ok(GridFunction { lo, hi, res, values })
    }

    /// Samples `f` at the grid nodes.
    pub fn from_field(lo: Vec<f64>, hi: Vec<f64>, res: Vec<usize>, f: &dyn Field, exec: Exec) -> Result<Self> {
        let g = GridFunction::new(lo, hi, res.clone(), vec![0.0; res.iter().product()])?;
        let values = exec.map(g.values.len(), |i| f.eval(&g.node(i)));
        Ok(GridFunction { values, ..g })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn resolution(&self) -> &[usize] {
        &self.res
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Node spacing per axis.
    pub fn spacing(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| (self.hi[k] - self.lo[k]) / (self.res[k] - 1) as f64).collect()
    }

    /// Volume attached to each node in the Riemann sum.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    /// Coordinates of the node with linear index `i`.
    pub fn node(&self, i: usize) -> Vec<f64> {
        let h = self.spacing();
        let mut out = vec![0.0; self.dim()];
        let mut r = i;
        for k in (0..self.dim()).rev() {
            out[k] = self.lo[k] + (r % self.res[k]) as f64 * h[k];
            r /= self.res[k];
        }
        out
    }

    fn linear(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.res).fold(0, |acc, (i, r)| acc * r + i)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction { values: self.values.iter().map(|v| f(*v)).collect(), ..self.clone() }
    }
}

impl Field for GridFunction {
    fn eval(&self, y: &[f64]) -> f64 {
        let d = self.dim();
        if y.len() != d {
            return f64::NAN;
        }
        let h = self.spacing();
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for k in 0..d {
            if !(y[k] >= self.lo[k] && y[k] <= self.hi[k]) {
                return 0.0;
            }
            let s = (y[k] - self.lo[k]) / h[k];
            let i = (s.floor() as usize).min(self.res[k] - 2);
            base[k] = i;
            frac[k] = s - i as f64;
        }
        let mut acc = 0.0;
        let mut idx = vec![0usize; d];
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            for k in 0..d {
                let up = (corner >> k) & 1 == 1;
                idx[k] = base[k] + up as usize;
                w *= if up { frac[k] } else { 1.0 - frac[k] };
            }
            if w != 0.0 {
                acc += w * self.values[self.linear(&idx)];
            }
        }
        acc
    }
}

/// Strictly increasing radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid(Vec<f64>);

impl TimeGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("time grid is empty".into()));
        }
        if values.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidParameter("time grid values must be positive and finite".into()));
        }
        if values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
        }
        Ok(TimeGrid(values))
    }

    /// `m` equispaced points covering `[a, b]`, endpoints included.
    pub fn uniform(a: f64, b: f64, m: usize) -> Result<Self> {
        match m {
            0 => Err(Error::InvalidParameter("time grid is empty".into())),
            1 => TimeGrid::new(vec![a]),
            _ => TimeGrid::new((0..m).map(|i| a + (b - a) * i as f64 / (m - 1) as f64).collect()),
        }
    }

    /// The default local grid: 65 points in `[1, 2]`.
    pub fn local_default() -> Self {
        TimeGrid::uniform(1.0, 2.0, 65).expect("valid")
    }

    /// `2^k` for `k` in `k0..=k1`.
    pub fn dyadic(k0: i32, k1: i32) -> Result<Self> {
        if k1 < k0 {
            return Err(Error::InvalidParameter("empty dyadic range".into()));
        }
        TimeGrid::new((k0..=k1).map(|k| 2f64.powi(k)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Whether every value lies in `[a, b]`.
    pub fn within(&self, a: f64, b: f64) -> bool {
        self.0.iter().all(|t| *t >= a && *t <= b)
    }
}

fn check_rule(ctx: &GroupContext, x: &[f64], rule: &QuadratureRule) -> Result<()> {
    check_len(ctx.dim(), x.len())?;
    if rule.n() != ctx.n() {
        return Err(Error::DimensionMismatch { expected: ctx.n(), got: rule.n() });
    }
    Ok(())
}

/// The point `x·δ_t(ω)⁻¹ = (u_x − tω_u, x̄ − t²ω̄ − (t/2)u_xᵀJω_u)`.
pub fn sphere_translate(ctx: &GroupContext, x: &[f64], t: f64, omega: &[f64], out: &mut [f64]) {
    let m = 2 * ctx.n();
    for i in 0..m {
        out[i] = x[i] - t * omega[i];
    }
    out[m] = x[m] - t * t * omega[m] - 0.5 * t * ctx.symplectic(&x[..m], &omega[..m]);
}

/// `A_t f(x)` by the quadrature rule, summed pairwise in node order.
pub fn apply_averaging(ctx: &GroupContext, f: &dyn Field, x: &[f64], t: f64, rule: &QuadratureRule) -> Result<f64> {
    check_rule(ctx, x, rule)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    let mut y = vec![0.0; ctx.dim()];
    let terms: Vec<f64> = (0..rule.len())
        .map(|i| {
            sphere_translate(ctx, x, t, rule.point(i), &mut y);
            rule.weights()[i] * f.eval(&y)
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// `max_{t ∈ grid} |A_t f(x)|` over a grid in `[1, 2]`.
pub fn local_maximal(
    ctx: &GroupContext,
    f: &dyn Field,
    x: &[f64],
    tgrid: &TimeGrid,
    rule: &QuadratureRule,
) -> Result<f64> {
    if !tgrid.within(1.0, 2.0) {
        return Err(Error::InvalidParameter("local maximal grid must lie in [1, 2]".into()));
    }
    sup_over(ctx, f, x, tgrid.values().iter().copied(), rule)
}

fn sup_over(
    ctx: &GroupContext,
    f: &dyn Field,
    x: &[f64],
    ts: impl Iterator<Item = f64>,
    rule: &QuadratureRule,
) -> Result<f64> {
    let mut best = 0.0f64;
    for t in ts {
        best = best.max(apply_averaging(ctx, f, x, t, rule)?.abs());
    }
    Ok(best)
}

/// `sup |A_t f(x)|` over `t ∈ ⋃_{k ∈ ks} 2^k·t_sub`.
pub fn global_maximal(
    ctx: &GroupContext,
    f: &dyn Field,
    x: &[f64],
    ks: std::ops::RangeInclusive<i32>,
    t_sub: &TimeGrid,
    rule: &QuadratureRule,
) -> Result<f64> {
    if ks.is_empty() {
        return Err(Error::InvalidParameter("empty dyadic range".into()));
    }
    let ts: Vec<f64> = ks.flat_map(|k| t_sub.values().iter().map(move |t| 2f64.powi(k) * t)).collect();
    sup_over(ctx, f, x, ts.into_iter(), rule)
}

/// `max_{k ∈ ks} |A_{2^k} f(x)|`.
pub fn lacunary_maximal(
    ctx: &GroupContext,
    f: &dyn Field,
    x: &[f64],
    ks: std::ops::RangeInclusive<i32>,
    rule: &QuadratureRule,
) -> Result<f64> {
    if ks.is_empty() {
        return Err(Error::InvalidParameter("empty dyadic range".into()));
    }
    sup_over(ctx, f, x, ks.map(|k| 2f64.powi(k)), rule)
}

/// `A_t f` sampled on a grid.
pub fn averaging_on_grid(
    ctx: &GroupContext,
    f: &dyn Field,
    lo: Vec<f64>,
    hi: Vec<f64>,
    res: Vec<usize>,
    t: f64,
    rule: &QuadratureRule,
    exec: Exec,
) -> Result<GridFunction> {
    let g = GridFunction::new(lo, hi, res.clone(), vec![0.0; res.iter().product()])?;
    check_rule(ctx, &g.node(0), rule)?;
    let values = exec.try_map(g.len(), |i| apply_averaging(ctx, f, &g.node(i), t, rule))?;
    Ok(GridFunction { values, ..g })
}

/// The local maximal function sampled on a grid.
pub fn maximal_on_grid(
    ctx: &GroupContext,
    f: &dyn Field,
    lo: Vec<f64>,
    hi: Vec<f64>,
    res: Vec<usize>,
    tgrid: &TimeGrid,
    rule: &QuadratureRule,
    exec: Exec,
) -> Result<GridFunction> {
    let g = GridFunction::new(lo, hi, res.clone(), vec![0.0; res.iter().product()])?;
    check_rule(ctx, &g.node(0), rule)?;
    let values = exec.try_map(g.len(), |i| local_maximal(ctx, f, &g.node(i), tgrid, rule))?;
    Ok(GridFunction { values, ..g })
}

/// Riemann-sum `‖g‖_p = (Σ |g_i|^p·vol)^{1/p}`; `p = ∞` gives `max |g_i|`.
pub fn lp_norm(g: &GridFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p must be at least 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(g.values().iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let terms: Vec<f64> = g.values().iter().map(|v| v.abs().powf(p)).collect();
    Ok((pairwise_sum(&terms) * g.cell_volume()).powf(1.0 / p))
}

/// `‖Mf‖_q / ‖f‖_p` with `Mf` the local maximal function on the output grid.
pub fn operator_ratio(
    ctx: &GroupContext,
    f: &GridFunction,
    p: f64,
    q: f64,
    out_lo: Vec<f64>,
    out_hi: Vec<f64>,
    out_res: Vec<usize>,
    tgrid: &TimeGrid,
    rule: &QuadratureRule,
    exec: Exec,
) -> Result<f64> {
    let nf = lp_norm(f, p)?;
    if nf == 0.0 {
        return Err(Error::InvalidParameter("input has zero norm".into()));
    }
    let mf = maximal_on_grid(ctx, f, out_lo, out_hi, out_res, tgrid, rule, exec)?;
    Ok(lp_norm(&mf, q)? / nf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{build_quadrature, sphere_mass_exact};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gauss(y: &[f64]) -> f64 {
        let m = y.len() - 1;
        let u2: f64 = y[..m].iter().map(|v| v * v).sum();
        (-u2 - y[m] * y[m]).exp()
    }

    #[test]
    fn constant_averages_to_mass() {
        let ctx = GroupContext::standard(1).unwrap();
        let rule = build_quadrature(1, 32, 32).unwrap();
        let one = |_: &[f64]| 1.0;
        for t in TimeGrid::local_default().values() {
            let v = apply_averaging(&ctx, &one, &[0.3, -0.1, 2.0], *t, &rule).unwrap();
            assert!((v - sphere_mass_exact(1)).abs() < 1e-8);
        }
        assert!((global_maximal(&ctx, &one, &[0.0; 3], -2..=3, &TimeGrid::uniform(1.0, 2.0, 4).unwrap(), &rule).unwrap()
            - sphere_mass_exact(1))
        .abs()
            < 1e-8);
    }

    #[test]
    fn odd_central_field_averages_to_zero() {
        let ctx = GroupContext::standard(1).unwrap();
        let rule = build_quadrature(1, 16, 16).unwrap();
        let odd = |y: &[f64]| y[2] * (1.0 + y[0] * y[0]);
        assert!(apply_averaging(&ctx, &odd, &[0.0; 3], 1.3, &rule).unwrap().abs() < 1e-12);
    }

    #[test]
    fn left_translation_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1, 2] {
            let ctx = GroupContext::admissible(n, &mut rng).unwrap();
            let rule = build_quadrature(n, 8, 8).unwrap();
            let z: Vec<f64> = (0..=2 * n).map(|_| rng.random_range(-0.5..0.5)).collect();
            let x: Vec<f64> = (0..=2 * n).map(|_| rng.random_range(-0.5..0.5)).collect();
            let shifted = |y: &[f64]| gauss(&ctx.mul(&z, y).unwrap());
            let a = apply_averaging(&ctx, &shifted, &x, 1.4, &rule).unwrap();
            let b = apply_averaging(&ctx, &gauss, &ctx.mul(&z, &x).unwrap(), 1.4, &rule).unwrap();
            assert!((a - b).abs() < 1e-8, "{a} {b}");
        }
    }

    #[test]
    fn grid_function_interpolates_multilinear_and_vanishes_outside() {
        let lin = |y: &[f64]| 1.0 + 2.0 * y[0] - y[1] + 0.5 * y[2] + y[0] * y[2];
        let g = GridFunction::from_field(vec![-1.0; 3], vec![1.0; 3], vec![5, 4, 3], &lin, Exec::Sequential).unwrap();
        for y in [[0.13, -0.4, 0.77], [1.0, 1.0, 1.0], [-1.0, 0.2, 0.0]] {
            assert!((g.eval(&y) - lin(&y)).abs() < 1e-12);
        }
        assert_eq!(g.eval(&[1.01, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn lp_norm_examples() {
        let mut v = vec![0.0; 27];
        v[13] = 1.0;
        let g = GridFunction::new(vec![0.0; 3], vec![1.0; 3], vec![3; 3], v).unwrap();
        for p in [1.0, 2.0, 3.5] {
            assert!((lp_norm(&g, p).unwrap() - 0.125f64.powf(1.0 / p)).abs() < 1e-15);
        }
        assert_eq!(lp_norm(&g, f64::INFINITY).unwrap(), 1.0);
        assert!((lp_norm(&g.map(|v| -3.0 * v), 2.0).unwrap() - 3.0 * lp_norm(&g, 2.0).unwrap()).abs() < 1e-15);
        assert!(lp_norm(&g, 0.5).is_err());
        // ∫ e^{−|y|²} over ℝ³ = π^{3/2}; on [−6, 6]³ the tails are negligible.
        let gg = GridFunction::from_field(vec![-6.0; 3], vec![6.0; 3], vec![61; 3], &gauss, Exec::Sequential).unwrap();
        let exact = std::f64::consts::PI.powf(1.5);
        assert!((lp_norm(&gg, 1.0).unwrap() - exact).abs() / exact < 1e-3);
    }

    #[test]
    fn maximal_functions_are_ordered() {
        let ctx = GroupContext::standard(1).unwrap();
        let rule = build_quadrature(1, 12, 12).unwrap();
        let coarse = TimeGrid::uniform(1.0, 2.0, 5).unwrap();
        let fine = TimeGrid::uniform(1.0, 2.0, 9).unwrap();
        let x = [0.2, 0.1, -0.3];
        let mc = local_maximal(&ctx, &gauss, &x, &coarse, &rule).unwrap();
        let mf = local_maximal(&ctx, &gauss, &x, &fine, &rule).unwrap();
        assert!(mf >= mc);
        for t in fine.values() {
            assert!(mf >= apply_averaging(&ctx, &gauss, &x, *t, &rule).unwrap());
        }
        let lac = lacunary_maximal(&ctx, &gauss, &x, 0..=3, &rule).unwrap();
        let glob = global_maximal(&ctx, &gauss, &x, 0..=3, &fine, &rule).unwrap();
        assert!(lac <= glob);
        assert!(local_maximal(&ctx, &gauss, &x, &TimeGrid::uniform(1.0, 3.0, 3).unwrap(), &rule).is_err());
    }

    #[test]
    fn far_scales_vanish_for_compact_support() {
        let ctx = GroupContext::standard(1).unwrap();
        let rule = build_quadrature(1, 12, 12).unwrap();
        let bump = |y: &[f64]| if y.iter().all(|v| v.abs() < 0.5) { 1.0 } else { 0.0 };
        for k in 3..6 {
            let t = 2f64.powi(k);
            assert_eq!(apply_averaging(&ctx, &bump, &[0.0; 3], t, &rule).unwrap(), 0.0);
        }
    }

    #[test]
    fn operator_ratio_is_scale_invariant() {
        let ctx = GroupContext::standard(1).unwrap();
        let rule = build_quadrature(1, 8, 8).unwrap();
        let f = GridFunction::from_field(vec![-2.0; 3], vec![2.0; 3], vec![9; 3], &gauss, Exec::Sequential).unwrap();
        let tg = TimeGrid::uniform(1.0, 2.0, 3).unwrap();
        let run = |g: &GridFunction| {
            operator_ratio(&ctx, g, 2.0, 4.0, vec![-1.0; 3], vec![1.0; 3], vec![3; 3], &tg, &rule, Exec::Parallel).unwrap()
        };
        let a = run(&f);
        let b = run(&f.map(|v| 7.5 * v));
        assert!((a - b).abs() < 1e-12 * a);
    }
}

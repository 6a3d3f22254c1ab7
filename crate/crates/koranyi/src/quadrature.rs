//! Quadrature for the surface measure `μ` on the unit Korányi sphere and the
//! polar-coordinates check.
//!
//! On each hemisphere `μ` has density `2ρ^{2n−1}(1 − ρ⁴)^{−1/2} dρ dσ(u)` for
//! the point `(ρu, ±√(1 − ρ⁴))`. Substituting `ρ² = sin φ`, `φ ∈ [0, π/2]`,
//! turns this into `sin^{n−1}φ dφ dσ(u)`, which is smooth, so Gauss–Legendre
//! in `φ` converges quickly. The unit sphere `S^{2n−1}` is covered by uniform
//! angles for `n = 1` and by Hopf-type coordinates
//! `u = (√(1−v) e^{iξ₁}, √v e^{iξ₂})`, `dσ = ½ dv dξ₁ dξ₂`, for `n = 2`.
//!
//! Besides full rules, [`build_window_rule`] restricts the same product rule
//! to a coordinate box. Indicator integrands supported on small patches are
//! integrated over such windows so the node spacing can be made much finer
//! than the patch.

use crate::error::{Error, Result};
use crate::exec::{pairwise_sum, Exec};
use crate::heisenberg::GroupContext;
use std::f64::consts::{FRAC_PI_2, PI};

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if m == 0 { 1.0 } else if m == 1 { x } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(m: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(m);
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    (x.iter().map(|v| c + h * v).collect(), w.iter().map(|v| h * v).collect())
}

/// Weighted nodes on the unit Korányi sphere, stored flat with stride `2n+1`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    n: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    /// Largest gap between neighbouring nodes along each product axis,
    /// horizontal and central parts.
    axis_spacing: Vec<(f64, f64)>,
}

impl QuadratureRule {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = 2 * self.n + 1;
        &self.points[i * d..(i + 1) * d]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Largest neighbour gap `(|Δu_ω|, |Δω̄|)` along any coordinate axis.
    pub fn spacing(&self) -> (f64, f64) {
        self.axis_spacing.iter().fold((0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)))
    }

    /// Per-axis neighbour gaps, in product-axis order (`[φ, θ]` for
    /// `n = 1`, `[φ, v, ξ₁, ξ₂]` for `n = 2`).
    pub fn axis_spacing(&self) -> &[(f64, f64)] {
        &self.axis_spacing
    }

    /// `Σ wᵢ`, the measure the rule assigns to its domain.
    pub fn total_mass(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// `Σ wᵢ f(ωᵢ)`.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let terms: Vec<f64> = (0..self.len()).map(|i| self.weights[i] * f(self.point(i))).collect();
        pairwise_sum(&terms)
    }

    /// Concatenates rules over disjoint domains.
    pub fn concat(rules: Vec<QuadratureRule>) -> Option<QuadratureRule> {
        let n = rules.first()?.n;
        let mut out = QuadratureRule { n, points: vec![], weights: vec![], axis_spacing: vec![(0.0, 0.0); 2 * n] };
        for r in rules {
            out.points.extend_from_slice(&r.points);
            out.weights.extend_from_slice(&r.weights);
            for (a, b) in out.axis_spacing.iter_mut().zip(&r.axis_spacing) {
                *a = (a.0.max(b.0), a.1.max(b.1));
            }
        }
        Some(out)
    }
}

/// Coordinate box on one hemisphere. `angles` holds one interval per
/// horizontal plane (one for `n = 1`, two for `n = 2`); `v` is only used for
/// `n = 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereWindow {
    pub hemisphere: f64,
    pub phi: (f64, f64),
    pub v: (f64, f64),
    pub angles: Vec<(f64, f64)>,
}

impl SphereWindow {
    /// Whole hemisphere.
    pub fn hemisphere(n: usize, sign: f64) -> Self {
        SphereWindow { hemisphere: sign, phi: (0.0, FRAC_PI_2), v: (0.0, 1.0), angles: vec![(0.0, 2.0 * PI); n] }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 1 || n == 2 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("sphere quadrature supports n ∈ {{1, 2}}, got {n}")))
    }
}

/// One axis of a product rule.
struct Axis {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn axis(lo: f64, hi: f64, m: usize, periodic_full: bool) -> Axis {
    if periodic_full {
        let h = (hi - lo) / m as f64;
        Axis { nodes: (0..m).map(|k| lo + (k as f64 + 0.5) * h).collect(), weights: vec![h; m] }
    } else {
        let (nodes, weights) = gauss_legendre_on(m, lo, hi);
        Axis { nodes, weights }
    }
}

/// Maps product coordinates to the embedded sphere point and the density
/// factor. Coordinates are `[φ, θ]` for `n = 1` and `[φ, v, ξ₁, ξ₂]` for
/// `n = 2`.
fn embed(n: usize, hemi: f64, c: &[f64], out: &mut [f64]) -> f64 {
    let (s, cphi) = c[0].sin_cos();
    let rho = s.max(0.0).sqrt();
    if n == 1 {
        out[0] = rho * c[1].cos();
        out[1] = rho * c[1].sin();
        out[2] = hemi * cphi;
        1.0
    } else {
        let v = c[1];
        let (a, b) = ((1.0 - v).max(0.0).sqrt(), v.max(0.0).sqrt());
        out[0] = rho * a * c[2].cos();
        out[1] = rho * a * c[2].sin();
        out[2] = rho * b * c[3].cos();
        out[3] = rho * b * c[3].sin();
        out[4] = hemi * cphi;
        0.5 * s
    }
}

fn window_axes(n: usize, w: &SphereWindow, m: &[usize]) -> Vec<Axis> {
    let full = |r: (f64, f64)| (r.1 - r.0 - 2.0 * PI).abs() < 1e-12;
    let mut axes = vec![axis(w.phi.0, w.phi.1, m[0], false)];
    if n == 2 {
        axes.push(axis(w.v.0, w.v.1, m[1], false));
    }
    for (k, r) in w.angles.iter().enumerate() {
        axes.push(axis(r.0, r.1, m[axes.len().min(m.len() - 1)].max(1), full(*r)));
        let _ = k;
    }
    axes
}

fn build_product(n: usize, w: &SphereWindow, m: &[usize]) -> QuadratureRule {
    let d = 2 * n + 1;
    let axes = window_axes(n, w, m);
    let counts: Vec<usize> = axes.iter().map(|a| a.nodes.len()).collect();
    let total: usize = counts.iter().product();
    let mut points = vec![0.0; total * d];
    let mut weights = vec![0.0; total];
    let mut idx = vec![0usize; axes.len()];
    let mut coords = vec![0.0; axes.len()];
    for lin in 0..total {
        let mut r = lin;
        for k in (0..axes.len()).rev() {
            idx[k] = r % counts[k];
            r /= counts[k];
        }
        let mut wt = 1.0;
        for k in 0..axes.len() {
            coords[k] = axes[k].nodes[idx[k]];
            wt *= axes[k].weights[idx[k]];
        }
        let dens = embed(n, w.hemisphere, &coords, &mut points[lin * d..(lin + 1) * d]);
        weights[lin] = wt * dens;
    }
    let axis_spacing = product_spacing(n, d, &counts, &points);
    QuadratureRule { n, points, weights, axis_spacing }
}

fn product_spacing(n: usize, d: usize, counts: &[usize], points: &[f64]) -> Vec<(f64, f64)> {
    let m = 2 * n;
    let mut strides = vec![1usize; counts.len()];
    for k in (0..counts.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * counts[k + 1];
    }
    let total: usize = counts.iter().product();
    let mut gaps = vec![(0.0f64, 0.0f64); counts.len()];
    for lin in 0..total {
        for k in 0..counts.len() {
            let ik = (lin / strides[k]) % counts[k];
            if ik + 1 < counts[k] {
                let other = lin + strides[k];
                let p = &points[lin * d..(lin + 1) * d];
                let q = &points[other * d..(other + 1) * d];
                let hu: f64 = (0..m).map(|i| (p[i] - q[i]).powi(2)).sum::<f64>().sqrt();
                gaps[k].0 = gaps[k].0.max(hu);
                gaps[k].1 = gaps[k].1.max((p[m] - q[m]).abs());
            }
        }
    }
    gaps
}

/// Full product rule on `S_K` with `n_rho` Gauss–Legendre nodes in `φ` and
/// `n_sph` angles per horizontal plane (for `n = 2` the `v` axis gets
/// `max(2, n_sph/2)` Gauss–Legendre nodes).
pub fn build_quadrature(n: usize, n_rho: usize, n_sph: usize) -> Result<QuadratureRule> {
    check_n(n)?;
    if n_rho < 2 || n_sph < 2 {
        return Err(Error::InvalidParameter(format!("quadrature sizes must be at least 2, got ({n_rho}, {n_sph})")));
    }
    let m = sizes(n, n_rho, n_sph);
    let rules = [1.0, -1.0].iter().map(|h| build_product(n, &SphereWindow::hemisphere(n, *h), &m)).collect();
    Ok(QuadratureRule::concat(rules).expect("two hemispheres"))
}

fn sizes(n: usize, n_rho: usize, n_sph: usize) -> Vec<usize> {
    if n == 1 {
        vec![n_rho, n_sph]
    } else {
        vec![n_rho, (n_sph / 2).max(2), n_sph, n_sph]
    }
}

/// Product rule restricted to the given windows with `m` nodes per axis.
pub fn build_window_rule(n: usize, windows: &[SphereWindow], m: usize) -> Result<Option<QuadratureRule>> {
    build_window_rule_axes(n, windows, &vec![m; 2 * n])
}

/// Product rule restricted to the given windows with `counts[k]` nodes on
/// product axis `k`.
pub fn build_window_rule_axes(n: usize, windows: &[SphereWindow], counts: &[usize]) -> Result<Option<QuadratureRule>> {
    check_n(n)?;
    crate::error::check_len(2 * n, counts.len())?;
    if counts.iter().any(|&c| c < 2) {
        return Err(Error::InvalidParameter(format!("need at least 2 nodes per axis, got {counts:?}")));
    }
    let rules = windows.iter().map(|w| build_product(n, w, counts)).collect();
    Ok(QuadratureRule::concat(rules))
}

fn interval_dist(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 {
        lo
    } else if hi < 0.0 {
        -hi
    } else {
        0.0
    }
}

/// Radius range and angle range of a planar box.
fn planar_box(lo: [f64; 2], hi: [f64; 2]) -> ((f64, f64), (f64, f64)) {
    let dx = interval_dist(lo[0], hi[0]);
    let dy = interval_dist(lo[1], hi[1]);
    let rmin = (dx * dx + dy * dy).sqrt();
    let corners = [(lo[0], lo[1]), (lo[0], hi[1]), (hi[0], lo[1]), (hi[0], hi[1])];
    let rmax = corners.iter().map(|(a, b)| (a * a + b * b).sqrt()).fold(0.0, f64::max);
    if rmin == 0.0 {
        return ((0.0, rmax), (0.0, 2.0 * PI));
    }
    let cref = (0.5 * (lo[1] + hi[1])).atan2(0.5 * (lo[0] + hi[0]));
    let (mut amin, mut amax) = (0.0f64, 0.0f64);
    for (a, b) in corners {
        let mut da = b.atan2(a) - cref;
        while da > PI {
            da -= 2.0 * PI;
        }
        while da <= -PI {
            da += 2.0 * PI;
        }
        amin = amin.min(da);
        amax = amax.max(da);
    }
    ((rmin, rmax), (cref + amin, cref + amax))
}

/// Conservative windows covering all `ω ∈ S_K` with
/// `x·δ_t(ω)⁻¹ ∈ [ylo, yhi]` (a coordinate box in ℍⁿ).
pub fn window_for_box(ctx: &GroupContext, x: &[f64], t: f64, ylo: &[f64], yhi: &[f64]) -> Result<Vec<SphereWindow>> {
    window_for_set(ctx, x, t, ylo, yhi, None)
}

/// As [`window_for_box`], additionally using `|u_y| ≤ u_radius` to tighten
/// the range of `|ω_u|`.
pub fn window_for_set(
    ctx: &GroupContext,
    x: &[f64],
    t: f64,
    ylo: &[f64],
    yhi: &[f64],
    u_radius: Option<f64>,
) -> Result<Vec<SphereWindow>> {
    let n = ctx.n();
    check_n(n)?;
    crate::error::check_len(ctx.dim(), x.len())?;
    crate::error::check_len(ctx.dim(), ylo.len())?;
    crate::error::check_len(ctx.dim(), yhi.len())?;
    let m = 2 * n;
    // y_u = u_x − t ω_u  ⇒  ω_u ∈ [(u_x − yhi)/t, (u_x − ylo)/t]
    let wlo: Vec<f64> = (0..m).map(|i| ((x[i] - yhi[i]) / t).max(-1.0)).collect();
    let whi: Vec<f64> = (0..m).map(|i| ((x[i] - ylo[i]) / t).min(1.0)).collect();
    if (0..m).any(|i| wlo[i] > whi[i]) {
        return Ok(vec![]);
    }
    // ȳ = x̄ − t²ω̄ − (t/2) u_xᵀJω_u, with u_xᵀJω_u = a·ω_u, a = Jᵀu_x
    let jx = ctx.apply_j(&x[..m]);
    let (mut smin, mut smax) = (0.0, 0.0);
    for i in 0..m {
        let a = -jx[i];
        let (p, q) = (a * wlo[i], a * whi[i]);
        smin += p.min(q);
        smax += p.max(q);
    }
    let t2 = t * t;
    let bar_lo = (x[m] - yhi[m] - 0.5 * t * smax) / t2;
    let bar_hi = (x[m] - ylo[m] - 0.5 * t * smin) / t2;

    // horizontal radius range
    let mut dmin2 = 0.0;
    let mut corner_max2 = 0.0;
    for i in 0..m {
        dmin2 += interval_dist(wlo[i], whi[i]).powi(2);
        corner_max2 += wlo[i].abs().max(whi[i].abs()).powi(2);
    }
    let (mut rho_min, mut rho_max) = (dmin2.sqrt(), corner_max2.sqrt());
    if let Some(r) = u_radius {
        // |u_x − tω_u| ≤ r  ⇒  | |ω_u| − |u_x|/t | ≤ r/t
        let ux = crate::linalg::norm(&x[..m]);
        rho_min = rho_min.max((ux - r) / t);
        rho_max = rho_max.min((ux + r) / t);
        if rho_min > rho_max {
            return Ok(vec![]);
        }
    }
    let (rho_min, rho_max) = (rho_min.clamp(0.0, 1.0), rho_max.min(1.0));
    let phi_from_rho = (rho_min.powi(2).asin(), rho_max.powi(2).asin());

    let mut angles = Vec::with_capacity(n);
    let mut radii = Vec::with_capacity(n);
    for k in 0..n {
        let (r, a) = planar_box([wlo[2 * k], wlo[2 * k + 1]], [whi[2 * k], whi[2 * k + 1]]);
        radii.push(r);
        angles.push(a);
    }
    let v = if n == 2 {
        let (ra, rb) = (radii[0], radii[1]);
        let lo_den = ra.1 * ra.1 + rb.0 * rb.0;
        let hi_den = ra.0 * ra.0 + rb.1 * rb.1;
        let vlo = if lo_den > 0.0 { rb.0 * rb.0 / lo_den } else { 0.0 };
        let vhi = if hi_den > 0.0 { rb.1 * rb.1 / hi_den } else { 1.0 };
        (vlo.clamp(0.0, 1.0), vhi.clamp(0.0, 1.0))
    } else {
        (0.0, 1.0)
    };

    let mut out = Vec::new();
    for h in [1.0, -1.0] {
        let (lo, hi) = if h > 0.0 { (bar_lo.max(0.0), bar_hi.min(1.0)) } else { (bar_lo.max(-1.0), bar_hi.min(0.0)) };
        if lo > hi {
            continue;
        }
        let (abs_lo, abs_hi) = if h > 0.0 { (lo, hi) } else { (-hi, -lo) };
        let phi_lo = abs_hi.min(1.0).acos().max(phi_from_rho.0);
        let phi_hi = abs_lo.max(0.0).acos().min(phi_from_rho.1);
        if phi_lo >= phi_hi {
            continue;
        }
        out.push(SphereWindow { hemisphere: h, phi: (phi_lo, phi_hi), v, angles: angles.clone() });
    }
    Ok(out)
}

/// The Korányi Gaussian `exp(−|x|_K⁴) = exp(−|u|⁴ − s²)`.
pub fn koranyi_gaussian(x: &[f64]) -> f64 {
    let m = x.len() - 1;
    let u2: f64 = x[..m].iter().map(|v| v * v).sum();
    (-u2 * u2 - x[m] * x[m]).exp()
}

/// Box and nodes that resolve [`koranyi_gaussian`] to `1e−6` relative.
pub fn gaussian_grid(n: usize) -> LebesgueGrid {
    LebesgueGrid { half_u: 2.5, half_s: 6.0, nodes: if n == 1 { 32 } else { 24 } }
}

/// Result of [`polar_check`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PolarCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

/// Lebesgue tensor grid used for the left-hand side of the polar identity.
#[derive(Debug, Clone, Copy)]
pub struct LebesgueGrid {
    /// Half-width of the box in each horizontal coordinate.
    pub half_u: f64,
    /// Half-width of the box in the central coordinate.
    pub half_s: f64,
    /// Gauss–Legendre nodes per axis.
    pub nodes: usize,
}

/// Compares `∫ f dx` (tensor Gauss–Legendre on a box) with
/// `∫₀^{r_max} ∫_{S_K} f(δ_r ω) r^{Q−1} dμ(ω) dr`.
pub fn polar_check(
    ctx: &GroupContext,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    rule: &QuadratureRule,
    r_max: f64,
    r_nodes: usize,
    grid: LebesgueGrid,
    exec: Exec,
) -> Result<PolarCheck> {
    let d = ctx.dim();
    if rule.n() != ctx.n() {
        return Err(Error::DimensionMismatch { expected: ctx.n(), got: rule.n() });
    }
    let q = ctx.homogeneous_dim() as i32;
    let (rn, rw) = gauss_legendre_on(r_nodes, 0.0, r_max);
    let shells = exec.map(r_nodes, |k| {
        let r = rn[k];
        let inner = rule.integrate(|w| {
            let y = ctx.dilate(w, r).expect("dimension checked");
            f(&y)
        });
        rw[k] * r.powi(q - 1) * inner
    });
    let rhs = pairwise_sum(&shells);

    let (un, uw) = gauss_legendre_on(grid.nodes, -grid.half_u, grid.half_u);
    let (sn, sw) = gauss_legendre_on(grid.nodes, -grid.half_s, grid.half_s);
    let m = grid.nodes;
    let inner_count = m.pow((d - 1) as u32);
    // Parallel over the first horizontal axis; the rest is an odometer.
    let slabs = exec.map(m, |i0| {
        let mut terms = Vec::with_capacity(inner_count);
        let mut idx = vec![0usize; d - 1];
        let mut y = vec![0.0; d];
        for lin in 0..inner_count {
            let mut r = lin;
            for k in (0..d - 1).rev() {
                idx[k] = r % m;
                r /= m;
            }
            y[0] = un[i0];
            let mut wt = uw[i0];
            for k in 1..d - 1 {
                y[k] = un[idx[k - 1]];
                wt *= uw[idx[k - 1]];
            }
            y[d - 1] = sn[idx[d - 2]];
            wt *= sw[idx[d - 2]];
            terms.push(wt * f(&y));
        }
        pairwise_sum(&terms)
    });
    let lhs = pairwise_sum(&slabs);
    let rel_err = (lhs - rhs).abs() / lhs.abs().max(f64::MIN_POSITIVE);
    Ok(PolarCheck { lhs, rhs, rel_err })
}

/// Total mass of the unit Korányi sphere: `2π²` for `n = 1`, and in general
/// `2 |S^{2n−1}| ∫₀^{π/2} sin^{n−1}φ dφ`.
pub fn sphere_mass_exact(n: usize) -> f64 {
    match n {
        1 => 2.0 * PI * PI,
        2 => 4.0 * PI * PI,
        _ => f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for m in [1, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(m);
            for deg in 0..(2 * m) {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "m={m} deg={deg}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn gauss_legendre_large_order_weights_sum_to_two() {
        let (_, w) = gauss_legendre(512);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_mass_examples() {
        let r = build_quadrature(1, 256, 256).unwrap();
        assert!((r.total_mass() - 2.0 * PI * PI).abs() < 1e-9);
        let r2 = build_quadrature(2, 8, 8).unwrap();
        assert!((r2.total_mass() - 4.0 * PI * PI).abs() < 1e-9);
    }

    #[test]
    fn nodes_lie_on_unit_sphere() {
        for n in 1..=2 {
            let r = build_quadrature(n, 6, 6).unwrap();
            for i in 0..r.len() {
                let k = crate::heisenberg::koranyi_norm_unchecked(r.point(i));
                assert!((k - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn unsupported_dimension_is_rejected() {
        assert!(build_quadrature(3, 4, 4).is_err());
    }

    #[test]
    fn window_rule_of_full_windows_matches_full_rule_mass() {
        let w = [SphereWindow::hemisphere(1, 1.0), SphereWindow::hemisphere(1, -1.0)];
        let r = build_window_rule(1, &w, 32).unwrap().unwrap();
        assert!((r.total_mass() - 2.0 * PI * PI).abs() < 1e-10);
    }

    #[test]
    fn window_covers_preimage_of_box() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for n in 1..=2 {
            let ctx = GroupContext::admissible(n, &mut rng).unwrap();
            let full = build_quadrature(n, 40, if n == 1 { 200 } else { 24 }).unwrap();
            for _ in 0..20 {
                let x: Vec<f64> = (0..ctx.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let t = rng.random_range(1.0..2.0);
                let c: Vec<f64> = (0..ctx.dim()).map(|_| rng.random_range(-0.5..0.5)).collect();
                let lo: Vec<f64> = c.iter().map(|v| v - 0.3).collect();
                let hi: Vec<f64> = c.iter().map(|v| v + 0.3).collect();
                let windows = window_for_box(&ctx, &x, t, &lo, &hi).unwrap();
                // every full-rule node whose image is in the box must fall in a window
                for i in 0..full.len() {
                    let w = full.point(i);
                    let winv: Vec<f64> = w.iter().map(|v| -v).collect();
                    let y = ctx.mul(&x, &ctx.dilate(&winv, t).unwrap()).unwrap();
                    let inside = (0..ctx.dim()).all(|k| y[k] >= lo[k] && y[k] <= hi[k]);
                    if inside {
                        let sp = crate::sphere::SpherePoint::from_point(w);
                        let phi = (sp.rho * sp.rho).min(1.0).asin();
                        let covered = windows.iter().any(|win| {
                            win.hemisphere == sp.hemisphere && phi >= win.phi.0 - 1e-12 && phi <= win.phi.1 + 1e-12
                        });
                        assert!(covered, "node {w:?} not covered by {windows:?}");
                    }
                }
            }
        }
    }
}

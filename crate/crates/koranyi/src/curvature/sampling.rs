//! Seeded sampling of admissible points per chart region and the
//! per-point checks built on [`super::curvature_report`].
//!
//! Points are drawn as `y = x·δ_t(ω)⁻¹`-type surface points: for a sphere
//! point `ω`, `u_y = u_x − tω_u` and `ȳ = x̄ + ½u_xᵀJu_y − t²ω̄`, so that
//! `F(x, t, y) = 0`. The phase then replaces one coordinate by a frequency
//! variable `τ`.

use super::closed::{intermediate_cinematic_params, quartic_hessian};
use super::{
    cinematic_matrix, curvature_report, mixed_hessian, normal_from_hessian, numeric_rank, CurvatureReport, Phase, PhaseKind,
    RankTolerance,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fit::{ols, LinearFit};
use crate::heisenberg::GroupContext;
use crate::linalg::{norm, Matrix};
use crate::sphere::{Branch, RegionThresholds};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Regions in which phases are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleRegion {
    NorthPole,
    Equator,
    Intermediate,
}

/// Sampling parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    /// `x` is drawn uniformly from `[−x_half, x_half]^{2n+1}`.
    pub x_half: f64,
    pub t_range: (f64, f64),
    /// Range of the frequency variable (`ȳ` at NP/IM, `y₁` at Eq).
    pub tau_range: (f64, f64),
    pub thresholds: RegionThresholds,
}

impl SampleConfig {
    pub fn new(n: usize, samples: usize, seed: u64) -> Self {
        SampleConfig {
            n,
            samples,
            seed,
            x_half: 0.05,
            t_range: (1.0, 2.0),
            tau_range: (1.0, 2.0),
            thresholds: RegionThresholds::default(),
        }
    }
}

/// One admissible sample.
#[derive(Debug, Clone)]
pub struct SamplePoint {
    pub phase: Phase,
    pub x: Vec<f64>,
    pub t: f64,
    pub y: Vec<f64>,
    /// The sphere point `ω` with `F(x, t, ·) = 0` at the underlying surface point.
    pub omega: Vec<f64>,
}

fn unit_vector<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let r = norm(&g);
        if r > 1e-3 {
            return g.into_iter().map(|v| v / r).collect();
        }
    }
}

/// The surface point `y` over `x` in direction `ω` at radius `t`.
pub fn surface_point(ctx: &GroupContext, x: &[f64], t: f64, omega: &[f64]) -> Vec<f64> {
    let m = 2 * ctx.n();
    let uy: Vec<f64> = (0..m).map(|i| x[i] - t * omega[i]).collect();
    let yb = x[m] + 0.5 * ctx.symplectic(&x[..m], &uy) - t * t * omega[m];
    let mut y = uy;
    y.push(yb);
    y
}

fn sphere_point(u: &[f64], rho: f64, bar: f64) -> Vec<f64> {
    let mut w: Vec<f64> = u.iter().map(|v| v * rho).collect();
    w.push(bar);
    w
}

/// Draws `cfg.samples` admissible points of `region`. Each point gets its
/// own random admissible `J`.
pub fn sample_points(region: SampleRegion, cfg: &SampleConfig) -> Result<Vec<SamplePoint>> {
    if cfg.n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let m = 2 * cfg.n;
    let th = cfg.thresholds;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        let ctx = GroupContext::admissible(cfg.n, &mut rng)?;
        let x: Vec<f64> = (0..=m).map(|_| rng.random_range(-cfg.x_half..=cfg.x_half)).collect();
        let t = rng.random_range(cfg.t_range.0..=cfg.t_range.1);
        let tau = rng.random_range(cfg.tau_range.0..=cfg.tau_range.1);
        let (omega, kind) = match region {
            SampleRegion::NorthPole => {
                let rho = th.pole * rng.random::<f64>();
                let u = unit_vector(m, &mut rng);
                (sphere_point(&u, rho, (1.0 - rho.powi(4)).sqrt()), PhaseKind::NorthPole)
            }
            SampleRegion::Equator => {
                let bar = rng.random_range(-th.equator..=th.equator);
                let rho = (1.0 - bar * bar).powf(0.25);
                let mut u: Vec<f64> = (0..m).map(|_| 0.1 * rng.sample::<f64, _>(StandardNormal)).collect();
                u[0] += 1.0;
                let r = norm(&u);
                u.iter_mut().for_each(|v| *v /= r);
                (sphere_point(&u, rho, bar), PhaseKind::Equator(Branch::Upper))
            }
            SampleRegion::Intermediate => {
                let hi = (1.0 - th.pole.powi(4)).sqrt();
                let mag = rng.random_range(th.equator..=hi);
                let bar = if rng.random::<bool>() { mag } else { -mag };
                let rho = (1.0 - bar * bar).powf(0.25);
                let u = unit_vector(m, &mut rng);
                let branch = if bar < 0.0 { Branch::Upper } else { Branch::Lower };
                (sphere_point(&u, rho, bar), PhaseKind::Intermediate(branch))
            }
        };
        let surf = surface_point(&ctx, &x, t, &omega);
        let y = match kind {
            PhaseKind::Equator(_) => {
                let mut y = surf.clone();
                y[0] = tau;
                y
            }
            _ => {
                let mut y = surf[..m].to_vec();
                y.push(tau);
                y
            }
        };
        out.push(SamplePoint { phase: Phase::new(ctx, kind), x, t, y, omega });
    }
    Ok(out)
}

/// Points exactly at the north pole (`u_y = u_x`) of the pole phase.
pub fn exact_pole_points(cfg: &SampleConfig) -> Result<Vec<SamplePoint>> {
    let m = 2 * cfg.n;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut out = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        let ctx = GroupContext::admissible(cfg.n, &mut rng)?;
        let x: Vec<f64> = (0..=m).map(|_| rng.random_range(-cfg.x_half..=cfg.x_half)).collect();
        let t = rng.random_range(cfg.t_range.0..=cfg.t_range.1);
        let tau = rng.random_range(cfg.tau_range.0..=cfg.tau_range.1);
        let mut omega = vec![0.0; m];
        omega.push(1.0);
        let mut y = x[..m].to_vec();
        y.push(tau);
        out.push(SamplePoint { phase: Phase::new(ctx, PhaseKind::NorthPole), x, t, y, omega });
    }
    Ok(out)
}

/// Report at one sample plus region-specific extras.
#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub x: Vec<f64>,
    pub t: f64,
    pub y: Vec<f64>,
    pub omega: Vec<f64>,
    pub report: CurvatureReport,
    /// `|D + λ⁻¹|PB|²|` for intermediate samples.
    pub im_schur: Option<f64>,
}

/// Curvature reports at every sample, in sample order.
pub fn survey(points: &[SamplePoint], tol: RankTolerance, exec: Exec) -> Result<Vec<PointReport>> {
    exec.try_map(points.len(), |i| {
        let p = &points[i];
        let report = curvature_report(&p.phase, &p.x, p.t, &p.y, tol)?;
        let im_schur = match p.phase.kind() {
            PhaseKind::Intermediate(_) => {
                // After translating x to 0 and rotating u_y to |u_y|e₁ the
                // data are |u_y| = tρ and |H̄| = t²|ω̄|.
                let m = p.omega.len() - 1;
                let rho = norm(&p.omega[..m]);
                Some(intermediate_cinematic_params(p.phase.ctx(), p.t * rho, p.t * p.t * p.omega[m].abs()).schur)
            }
            _ => None,
        };
        Ok(PointReport { x: p.x.clone(), t: p.t, y: p.y.clone(), omega: p.omega.clone(), report, im_schur })
    })
}

/// Comparison of the transported phase `Φ̃(x, t, y) = Φ(0, t, x⁻¹y)` at
/// `(x, t, y)` and at `(0, t, x⁻¹y)`.
#[derive(Debug, Clone, Serialize)]
pub struct TranslationReport {
    pub rank: (usize, usize),
    pub det: (f64, f64),
    /// `||det_a| − |det_b|| / max(|det_a|, |det_b|)`.
    pub det_rel: f64,
    /// `None` where the normal to the cone is not unique, so the cinematic
    /// matrix is undefined.
    pub cinematic_rank: (Option<usize>, Option<usize>),
}

impl TranslationReport {
    pub fn passes(&self, det_rel_tol: f64) -> bool {
        self.rank.0 == self.rank.1 && self.cinematic_rank.0 == self.cinematic_rank.1 && self.det_rel <= det_rel_tol
    }
}

struct TranslationSide {
    rank: usize,
    det: f64,
    cinematic_rank: Option<usize>,
}

fn translation_side(phase: &Phase, x: &[f64], t: f64, y: &[f64], tol: RankTolerance) -> Result<TranslationSide> {
    let d = phase.dim();
    let mh = mixed_hessian(phase, x, t, y)?;
    let spatial = mh.submatrix(0, 0, d, d);
    let rank = numeric_rank(&spatial.singular_values(), tol.rel, tol.abs_floor);
    let cinematic_rank = match normal_from_hessian(&mh, tol) {
        Ok(normal) => {
            let cin = cinematic_matrix(phase, x, t, y, &normal)?;
            Some(numeric_rank(&cin.singular_values(), tol.rel, tol.abs_floor))
        }
        Err(Error::RankDeficient(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(TranslationSide { rank, det: spatial.det()?, cinematic_rank })
}

pub fn translation_invariance_check(
    phase: &Phase,
    x: &[f64],
    t: f64,
    y: &[f64],
    tol: RankTolerance,
) -> Result<TranslationReport> {
    let tp = phase.clone().transported();
    let ctx = phase.ctx();
    let moved = ctx.mul(&ctx.inv(x)?, y)?;
    let zero = vec![0.0; x.len()];
    let a = translation_side(&tp, x, t, y, tol)?;
    let b = translation_side(&tp, &zero, t, &moved, tol)?;
    let (da, db) = (a.det.abs(), b.det.abs());
    let scale = da.max(db);
    Ok(TranslationReport {
        rank: (a.rank, b.rank),
        det: (a.det, b.det),
        det_rel: if scale == 0.0 { 0.0 } else { (da - db).abs() / scale },
        cinematic_rank: (a.cinematic_rank, b.cinematic_rank),
    })
}

/// Curvature of the rescaled pole phase with the deviation from its limit.
#[derive(Debug, Clone, Serialize)]
pub struct RescaledReport {
    pub ell: u32,
    pub report: CurvatureReport,
    /// `w = (2^{−2ℓ}u_x − u_y)/t`.
    pub w: Vec<f64>,
    /// `Δ_ℓ = (t/ȳ)𝒞̄_ℓ + 2α_{2n+2}g''(w)` on the `u_y` block.
    pub deviation: Matrix,
    pub deviation_max: f64,
}

/// Annulus on which the rescaled phase is examined.
pub const RESCALED_ANNULUS: (f64, f64) = (0.125, 0.5);

pub fn rescaled_pole_curvature(
    ctx: &GroupContext,
    ell: u32,
    x: &[f64],
    t: f64,
    y: &[f64],
    tol: RankTolerance,
) -> Result<RescaledReport> {
    let m = 2 * ctx.n();
    let e = 2f64.powi(-2 * ell as i32);
    let w: Vec<f64> = (0..m).map(|i| (e * x[i] - y[i]) / t).collect();
    let r = norm(&w);
    if r < RESCALED_ANNULUS.0 || r > RESCALED_ANNULUS.1 {
        return Err(Error::OutOfDomain(format!("|w| = {r} outside the annulus [1/8, 1/2]")));
    }
    let phase = Phase::new(ctx.clone(), PhaseKind::NpRescaled(ell));
    let report = curvature_report(&phase, x, t, y, tol)?;
    let alpha = report.normal[m + 1];
    let g2 = quartic_hessian(&w);
    let k = t / y[m];
    let deviation = Matrix::from_fn(m, m, |i, j| k * report.cinematic[(i, j)] + 2.0 * alpha * g2[(i, j)]);
    let deviation_max = deviation.max_abs();
    Ok(RescaledReport { ell, report, w, deviation, deviation_max })
}

/// A base configuration for the rescaled phase; `y` depends on `ℓ` through
/// `u_y = 2^{−2ℓ}u_x − tw` with `w` held fixed.
#[derive(Debug, Clone)]
pub struct RescaledSample {
    pub ctx: GroupContext,
    pub x: Vec<f64>,
    pub t: f64,
    pub w: Vec<f64>,
    pub tau: f64,
}

impl RescaledSample {
    pub fn y(&self, ell: u32) -> Vec<f64> {
        let e = 2f64.powi(-2 * ell as i32);
        let m = self.w.len();
        let mut y: Vec<f64> = (0..m).map(|i| e * self.x[i] - self.t * self.w[i]).collect();
        y.push(self.tau);
        y
    }
}

pub fn rescaled_samples(n: usize, count: usize, seed: u64) -> Result<Vec<RescaledSample>> {
    let m = 2 * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let ctx = GroupContext::admissible(n, &mut rng)?;
            let x: Vec<f64> = (0..=m).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let t = rng.random_range(1.0..=2.0);
            let r = rng.random_range(0.15..=0.45);
            let w: Vec<f64> = unit_vector(m, &mut rng).into_iter().map(|v| v * r).collect();
            let tau = rng.random_range(1.0..=2.0);
            Ok(RescaledSample { ctx, x, t, w, tau })
        })
        .collect()
}

/// Per-`ℓ` summary of a rescaled sweep.
#[derive(Debug, Clone, Serialize)]
pub struct RescaledLevel {
    pub ell: u32,
    pub min_cinematic_rank: usize,
    pub max_cinematic_rank: usize,
    pub deviation_max: f64,
}

/// Sweeps `ells` over `samples`, returning per-level summaries and the
/// least-squares slope of `log₂ max|Δ_ℓ|` against `ℓ`.
pub fn rescaled_sweep(
    samples: &[RescaledSample],
    ells: &[u32],
    tol: RankTolerance,
    exec: Exec,
) -> Result<(Vec<RescaledLevel>, LinearFit)> {
    let mut levels = Vec::with_capacity(ells.len());
    for &ell in ells {
        let reps = exec.try_map(samples.len(), |i| {
            let s = &samples[i];
            rescaled_pole_curvature(&s.ctx, ell, &s.x, s.t, &s.y(ell), tol)
        })?;
        levels.push(RescaledLevel {
            ell,
            min_cinematic_rank: reps.iter().map(|r| r.report.cinematic_rank).min().unwrap_or(0),
            max_cinematic_rank: reps.iter().map(|r| r.report.cinematic_rank).max().unwrap_or(0),
            deviation_max: reps.iter().map(|r| r.deviation_max).fold(0.0, f64::max),
        });
    }
    let xs: Vec<f64> = levels.iter().map(|l| l.ell as f64).collect();
    let ys: Vec<f64> = levels.iter().map(|l| l.deviation_max.log2()).collect();
    Ok((levels, ols(&xs, &ys)?))
}

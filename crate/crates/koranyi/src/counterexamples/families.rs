//! The four test-function families. Each supplies an indicator input
//! `f_δ`, a sampler of its output test set, and predicted exponents; the
//! lower bound is a low percentile of `A_t f_δ(x)` over output samples,
//! each at the family's own radius `t` (a lower bound for the maximal
//! function at `x`).
//!
//! Indicators are evaluated exactly as predicates. For the small inputs
//! (BALL, KNAPP, SINGLE_SHELL) the sphere integral runs over conservative
//! windows around the preimage of the input's bounding box, with node
//! counts doubled until the mapped node spacing is below a quarter of the
//! set size.

use crate::error::{Error, Result};
use crate::exec::{pairwise_sum, Exec};
use crate::fit::{fit_scaling, LinearFit};
use crate::heisenberg::{koranyi_norm_unchecked, GroupContext};
use crate::linalg::norm;
use crate::operators::sphere_translate;
use crate::quadrature::{build_quadrature, build_window_rule_axes, sphere_mass_exact, window_for_set, QuadratureRule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Which family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FamilyKind {
    /// Euclidean ball `|y| ≤ δ`, tested on `1 ≤ |x|_K ≤ 2` with `t = |x|_K`.
    Ball,
    /// Korányi shell `||y|_K − t| ≤ δ`, tested on `|x_i| ≤ δ/4`.
    Annulus,
    /// `|u_y| ≤ δ^{1/4}`, `|ȳ| ≤ δ`, tested on `|u_x| ≤ δ^{3/4}/4`,
    /// `|x̄ − t²| ≤ δ/4`.
    Knapp,
    /// The BALL input for the single average `t = 1`, tested on
    /// `||x|_K − 1| ≤ δ/8`.
    SingleShell,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 4] = [FamilyKind::Knapp, FamilyKind::Ball, FamilyKind::Annulus, FamilyKind::SingleShell];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Ball => "BALL",
            FamilyKind::Annulus => "ANNULUS",
            FamilyKind::Knapp => "KNAPP",
            FamilyKind::SingleShell => "SINGLE_SHELL",
        }
    }

    /// Allowed deviation of the fitted slope from the predicted one.
    pub fn slope_tolerance(self) -> f64 {
        match self {
            FamilyKind::Ball | FamilyKind::SingleShell => 0.15,
            FamilyKind::Annulus | FamilyKind::Knapp => 0.1,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        FamilyKind::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(s) || k.name().replace('_', "-").eq_ignore_ascii_case(s))
    }
}

/// Exponents `a` in `≈ δ^a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exponents {
    pub input_measure: f64,
    pub lower_bound: f64,
    pub output_measure: f64,
}

/// A family on `ℍⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub kind: FamilyKind,
    pub n: usize,
    /// Radius for ANNULUS and KNAPP; ignored otherwise.
    pub t: f64,
}

/// Per-sample random numbers, drawn once and reused across the ladder.
#[derive(Debug, Clone)]
struct UnitSample {
    u: Vec<f64>,
    a: f64,
    b: f64,
    r: f64,
    phi: f64,
    hemi: f64,
}

fn unit_samples(n: usize, count: usize, seed: u64) -> Vec<UnitSample> {
    let m = 2 * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let g: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
            let gn = norm(&g);
            UnitSample {
                u: g.iter().map(|v| v / gn).collect(),
                a: rng.random::<f64>(),
                b: rng.random_range(-1.0..=1.0),
                r: rng.random_range(1.0..=2.0),
                phi: rng.random_range(0.0..FRAC_PI_2),
                hemi: if rng.random::<bool>() { 1.0 } else { -1.0 },
            }
        })
        .collect()
}

/// Volume of the Euclidean unit ball in `ℝ^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / d as f64 * unit_ball_volume(d - 2),
    }
}

/// Volume of the unit Korányi ball, `μ(S_K)/Q`.
pub fn koranyi_ball_volume(n: usize) -> f64 {
    sphere_mass_exact(n) / (2 * n + 2) as f64
}

impl Family {
    pub fn new(kind: FamilyKind, n: usize) -> Self {
        Family { kind, n, t: 1.5 }
    }

    /// Radius at which the family is evaluated for a given sample.
    fn radius(&self, s: &UnitSample) -> f64 {
        match self.kind {
            FamilyKind::Ball => s.r,
            FamilyKind::SingleShell => 1.0,
            FamilyKind::Annulus | FamilyKind::Knapp => self.t,
        }
    }

    pub fn predicted(&self) -> Exponents {
        let n = self.n as f64;
        match self.kind {
            FamilyKind::Ball => Exponents { input_measure: 2.0 * n + 1.0, lower_bound: 2.0 * n, output_measure: 0.0 },
            FamilyKind::Annulus => Exponents { input_measure: 1.0, lower_bound: 0.0, output_measure: 2.0 * n + 1.0 },
            FamilyKind::Knapp => {
                Exponents { input_measure: n / 2.0 + 1.0, lower_bound: n / 2.0, output_measure: 1.5 * n + 1.0 }
            }
            FamilyKind::SingleShell => Exponents { input_measure: 2.0 * n + 1.0, lower_bound: 2.0 * n, output_measure: 1.0 },
        }
    }

    /// `f_δ(y)`.
    pub fn input_contains(&self, y: &[f64], delta: f64) -> bool {
        let m = 2 * self.n;
        match self.kind {
            FamilyKind::Ball | FamilyKind::SingleShell => y.iter().map(|v| v * v).sum::<f64>() <= delta * delta,
            FamilyKind::Annulus => (koranyi_norm_unchecked(y) - self.t).abs() <= delta,
            FamilyKind::Knapp => norm(&y[..m]) <= delta.powf(0.25) && y[m].abs() <= delta,
        }
    }

    /// Bound on `|u_y|` over the input.
    fn input_u_radius(&self, delta: f64) -> f64 {
        match self.kind {
            FamilyKind::Knapp => delta.powf(0.25),
            _ => delta,
        }
    }

    /// Bounding box of the input, or `None` when the full sphere is used.
    fn input_box(&self, delta: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let d = 2 * self.n + 1;
        match self.kind {
            FamilyKind::Ball | FamilyKind::SingleShell => Some((vec![-delta; d], vec![delta; d])),
            FamilyKind::Annulus => None,
            FamilyKind::Knapp => {
                let r = delta.powf(0.25);
                let mut lo = vec![-r; d];
                let mut hi = vec![r; d];
                lo[d - 1] = -delta;
                hi[d - 1] = delta;
                Some((lo, hi))
            }
        }
    }

    /// Resolution limits `(u, s)` on the mapped node spacing.
    fn guard_limits(&self, delta: f64) -> (f64, f64) {
        match self.kind {
            FamilyKind::Knapp => (delta.powf(0.25) / 4.0, delta / 4.0),
            _ => (delta / 4.0, delta / 4.0),
        }
    }

    fn output_point(&self, ctx: &GroupContext, s: &UnitSample, delta: f64) -> Vec<f64> {
        let m = 2 * self.n;
        let sphere = || {
            let rho = s.phi.sin().sqrt();
            let mut w: Vec<f64> = s.u.iter().map(|v| v * rho).collect();
            w.push(s.hemi * s.phi.cos());
            w
        };
        match self.kind {
            FamilyKind::Ball => ctx.dilate(&sphere(), s.r).expect("dimension"),
            FamilyKind::SingleShell => ctx.dilate(&sphere(), 1.0 + delta * s.b / 8.0).expect("dimension"),
            FamilyKind::Knapp => {
                let rad = delta.powf(0.75) / 4.0 * s.a.powf(1.0 / m as f64);
                let mut x: Vec<f64> = s.u.iter().map(|v| v * rad).collect();
                x.push(self.t * self.t + delta / 4.0 * s.b);
                x
            }
            FamilyKind::Annulus => {
                let mut x: Vec<f64> = s.u.iter().map(|v| v * delta / 4.0 * s.a).collect();
                x.push(delta / 4.0 * s.b);
                x
            }
        }
    }

    /// Lebesgue measure of the input set.
    pub fn input_measure(&self, delta: f64) -> f64 {
        let m = 2 * self.n;
        let q = (m + 2) as i32;
        match self.kind {
            FamilyKind::Ball | FamilyKind::SingleShell => unit_ball_volume(m + 1) * delta.powi(m as i32 + 1),
            FamilyKind::Annulus => {
                koranyi_ball_volume(self.n) * ((self.t + delta).powi(q) - (self.t - delta).powi(q))
            }
            FamilyKind::Knapp => unit_ball_volume(m) * delta.powf(m as f64 / 4.0) * 2.0 * delta,
        }
    }

    /// Lebesgue measure of the output test set.
    pub fn output_measure(&self, delta: f64) -> f64 {
        let m = 2 * self.n;
        let q = (m + 2) as i32;
        match self.kind {
            FamilyKind::Ball => koranyi_ball_volume(self.n) * (2f64.powi(q) - 1.0),
            FamilyKind::SingleShell => {
                koranyi_ball_volume(self.n) * ((1.0 + delta / 8.0).powi(q) - (1.0 - delta / 8.0).powi(q))
            }
            FamilyKind::Knapp => unit_ball_volume(m) * (delta.powf(0.75) / 4.0).powi(m as i32) * delta / 2.0,
            FamilyKind::Annulus => unit_ball_volume(m) * (delta / 4.0).powi(m as i32) * delta / 2.0,
        }
    }
}

/// Evaluation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyConfig {
    pub samples: usize,
    pub seed: u64,
    /// Reported statistic: this quantile of the sampled values.
    pub quantile: f64,
    /// Initial nodes per axis of the windowed rule.
    pub window_nodes: usize,
    /// Give up when the guard needs a windowed rule larger than this.
    pub max_rule_nodes: usize,
    /// `(N_ρ, N_sph)` of the full rule used for ANNULUS.
    pub full_rule: (usize, usize),
}

impl Default for FamilyConfig {
    fn default() -> Self {
        FamilyConfig { samples: 200, seed: 1, quantile: 0.1, window_nodes: 16, max_rule_nodes: 1 << 23, full_rule: (32, 32) }
    }
}

/// `δ` ladder: `2^{−3} … 2^{−9}` for `n = 1`, `2^{−3} … 2^{−6}` otherwise.
pub fn default_ladder(n: usize) -> Vec<f64> {
    let last = if n == 1 { 9 } else { 6 };
    (3..=last).map(|k| 2f64.powi(-k)).collect()
}

/// Linear-interpolated quantile of `values` (`q ∈ [0, 1]`).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < v.len() {
        v[i] + frac * (v[i + 1] - v[i])
    } else {
        v[i]
    }
}

/// `A_t f_δ(x)` on the windowed rule, with the resolution guard: axes whose
/// mapped node gap exceeds the limit are doubled until none does. Returns
/// the value and the rule size.
fn windowed_average(family: &Family, ctx: &GroupContext, x: &[f64], t: f64, delta: f64, cfg: &FamilyConfig) -> Result<(f64, usize)> {
    let (lo, hi) = family.input_box(delta).expect("windowed families have a box");
    let windows = window_for_set(ctx, x, t, &lo, &hi, Some(family.input_u_radius(delta)))?;
    if windows.is_empty() {
        return Ok((0.0, 0));
    }
    let (lim_u, lim_s) = family.guard_limits(delta);
    let m = 2 * ctx.n();
    let ux = norm(&x[..m]);
    let mut counts = vec![cfg.window_nodes.max(2); m];
    loop {
        let size = windows.len() * counts.iter().product::<usize>();
        if size > cfg.max_rule_nodes {
            return Err(Error::QuadratureTooCoarse { spacing: size as f64, limit: cfg.max_rule_nodes as f64 });
        }
        let rule = build_window_rule_axes(ctx.n(), &windows, &counts)?.expect("windows are nonempty");
        let mut refined = false;
        for (k, &(du, ds)) in rule.axis_spacing().iter().enumerate() {
            if t * du > lim_u || t * t * ds + 0.5 * t * ux * du > lim_s {
                counts[k] *= 2;
                refined = true;
            }
        }
        if !refined {
            return Ok((indicator_average(family, ctx, x, t, delta, &rule), rule.len()));
        }
    }
}

fn indicator_average(family: &Family, ctx: &GroupContext, x: &[f64], t: f64, delta: f64, rule: &QuadratureRule) -> f64 {
    let mut y = vec![0.0; ctx.dim()];
    let terms: Vec<f64> = (0..rule.len())
        .map(|i| {
            sphere_translate(ctx, x, t, rule.point(i), &mut y);
            if family.input_contains(&y, delta) {
                rule.weights()[i]
            } else {
                0.0
            }
        })
        .collect();
    pairwise_sum(&terms)
}

/// Lower-bound statistic at one `δ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBound {
    pub delta: f64,
    /// The configured quantile of the sampled values.
    pub value: f64,
    pub min: f64,
    pub median: f64,
    /// Largest windowed rule the guard required.
    pub max_nodes: usize,
}

pub fn evaluate_family_lower_bound(family: &Family, delta: f64, cfg: &FamilyConfig, exec: Exec) -> Result<LowerBound> {
    if !(delta > 0.0 && delta <= 0.125) {
        return Err(Error::InvalidParameter(format!("δ must lie in (0, 1/8], got {delta}")));
    }
    if cfg.samples == 0 {
        return Err(Error::InvalidParameter("need at least one output sample".into()));
    }
    let ctx = GroupContext::standard(family.n)?;
    let samples = unit_samples(family.n, cfg.samples, cfg.seed);
    let full = match family.kind {
        FamilyKind::Annulus => Some(build_quadrature(family.n, cfg.full_rule.0, cfg.full_rule.1)?),
        _ => None,
    };
    let vals = exec.try_map(samples.len(), |i| {
        let s = &samples[i];
        let x = family.output_point(&ctx, s, delta);
        let t = family.radius(s);
        match &full {
            Some(rule) => Ok((indicator_average(family, &ctx, &x, t, delta, rule), 0)),
            None => windowed_average(family, &ctx, &x, t, delta, cfg),
        }
    })?;
    let values: Vec<f64> = vals.iter().map(|v| v.0).collect();
    Ok(LowerBound {
        delta,
        value: quantile(&values, cfg.quantile),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        median: quantile(&values, 0.5),
        max_nodes: vals.iter().map(|v| v.1).max().unwrap_or(0),
    })
}

/// A ladder run with fits.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingExperiment {
    pub family: Family,
    pub predicted: Exponents,
    pub points: Vec<LowerBound>,
    /// `value·δ^{−predicted}` per ladder point.
    pub compensated: Vec<f64>,
    pub fit: LinearFit,
    pub input_measure_fit: LinearFit,
    pub output_measure_fit: LinearFit,
}

impl ScalingExperiment {
    /// `max/min` of the compensated sequence.
    pub fn compensated_spread(&self) -> f64 {
        let max = self.compensated.iter().copied().fold(0.0, f64::max);
        let min = self.compensated.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }

    /// Values do not increase as `δ` decreases (relative slack `rel`).
    pub fn monotone(&self, rel: f64) -> bool {
        self.points.windows(2).all(|w| w[1].value <= w[0].value * (1.0 + rel))
    }
}

pub fn scaling_experiment(family: &Family, ladder: &[f64], cfg: &FamilyConfig, exec: Exec) -> Result<ScalingExperiment> {
    if ladder.len() < 4 {
        return Err(Error::InvalidParameter("a ladder needs at least 4 points".into()));
    }
    if ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("ladder must be strictly decreasing".into()));
    }
    let points = ladder.iter().map(|d| evaluate_family_lower_bound(family, *d, cfg, exec)).collect::<Result<Vec<_>>>()?;
    let predicted = family.predicted();
    let compensated = points.iter().map(|p| p.value * p.delta.powf(-predicted.lower_bound)).collect();
    let values: Vec<f64> = points.iter().map(|p| p.value).collect();
    let inputs: Vec<f64> = ladder.iter().map(|d| family.input_measure(*d)).collect();
    let outputs: Vec<f64> = ladder.iter().map(|d| family.output_measure(*d)).collect();
    Ok(ScalingExperiment {
        family: *family,
        predicted,
        fit: fit_scaling(ladder, &values)?,
        input_measure_fit: fit_scaling(ladder, &inputs)?,
        output_measure_fit: fit_scaling(ladder, &outputs)?,
        points,
        compensated,
    })
}

/// `max (1 − ω̄)/δ` over sampled `ω` with `|ω_u| ≤ δ^{1/4}`, `ω̄ ≥ 0`.
/// Since `1 − ω̄ = |ω_u|⁴/(1 + ω̄)`, the ratio never exceeds 1.
pub fn knapp_geometry_ratio(n: usize, delta: f64, samples: usize, seed: u64) -> f64 {
    let m = 2 * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r_max = delta.powf(0.25);
    (0..samples)
        .map(|_| {
            let rho = r_max * rng.random::<f64>().powf(1.0 / m as f64);
            let bar = (1.0 - rho.powi(4)).sqrt();
            (1.0 - bar) / delta
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_interpolates() {
        let v = [5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert!((quantile(&v, 0.1) - 1.4).abs() < 1e-15);
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-14);
    }

    #[test]
    fn annulus_covers_whole_sphere() {
        let f = Family::new(FamilyKind::Annulus, 1);
        let cfg = FamilyConfig { samples: 50, ..FamilyConfig::default() };
        let lb = evaluate_family_lower_bound(&f, 2f64.powi(-6), &cfg, Exec::Sequential).unwrap();
        assert!((lb.min - sphere_mass_exact(1)).abs() < 1e-8);
    }

    #[test]
    fn windowed_matches_full_rule_for_a_large_ball() {
        // At δ = 1/8 a fine full rule resolves the ball; the windowed rule
        // must agree with it.
        let f = Family::new(FamilyKind::Ball, 1);
        let ctx = GroupContext::standard(1).unwrap();
        let cfg = FamilyConfig { window_nodes: 64, ..FamilyConfig::default() };
        let full = build_quadrature(1, 768, 1536).unwrap();
        for s in unit_samples(1, 5, 3) {
            let x = f.output_point(&ctx, &s, 0.125);
            let (w, _) = windowed_average(&f, &ctx, &x, s.r, 0.125, &cfg).unwrap();
            let a = indicator_average(&f, &ctx, &x, s.r, 0.125, &full);
            assert!((w - a).abs() <= 0.03 * a.max(1e-3), "{w} {a}");
        }
    }

    #[test]
    fn knapp_geometry_holds() {
        for k in 3..10 {
            assert!(knapp_geometry_ratio(1, 2f64.powi(-k), 500, 4) <= 1.0);
        }
    }

    #[test]
    fn delta_range_is_checked() {
        let f = Family::new(FamilyKind::Ball, 1);
        assert!(evaluate_family_lower_bound(&f, 0.5, &FamilyConfig::default(), Exec::Sequential).is_err());
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

use koranyi::counterexamples::{
    default_ladder, necessary_condition_report, region_vertices, scaling_experiment, Family, FamilyConfig, FamilyKind,
    RPoint,
};
use koranyi::curvature::closed::{equator_hessian_closed, x_from_derivatives};
use koranyi::curvature::sampling::{
    exact_pole_points, rescaled_samples, rescaled_sweep, sample_points, survey, translation_invariance_check,
    SampleConfig, SampleRegion,
};
use koranyi::curvature::{mixed_hessian_fd, Phase, PhaseKind, RankTolerance};
use koranyi::exec::Exec;
use koranyi::matrix_identities::{intermediate_x, optimize_f_bound, verify_lemmas};
use koranyi::operators::{apply_averaging, TimeGrid};
use koranyi::quadrature::{build_quadrature, gaussian_grid, koranyi_gaussian, polar_check, sphere_mass_exact};
use koranyi::report::{cell, Table};
use koranyi::sphere::Branch;
use koranyi::{GroupContext, Matrix};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

// C1
const LEMMA_SAMPLES: usize = 1000;
const INVERSE_RESIDUAL: f64 = 1e-9;
const DET_REL: f64 = 1e-10;
const LEMMA_BUDGET: Duration = Duration::from_secs(5);
// C2
const F_MAX_REFERENCE: f64 = 2.8054;
const F_MAX_DIGITS: f64 = 5e-5;
const F_SLACK: f64 = 0.19;
const F_NUMERIC: f64 = 1e-10;
// C3
const CURVATURE_SAMPLES: usize = 100;
const MIN_DET: f64 = 1e-3;
const MIN_SIGMA_RATIO: f64 = 1e-3;
const IM_SCHUR: f64 = 0.18;
const CURVATURE_BUDGET: Duration = Duration::from_secs(120);
// C4
const RESCALED_SAMPLES: usize = 20;
const RESCALED_LEVELS: [u32; 4] = [8, 10, 12, 14];
const RESCALED_SLOPE: (f64, f64) = (-2.4, -1.6);
// C5
const TRANSLATION_SAMPLES: usize = 100;
const TRANSLATION_DET_REL: f64 = 1e-6;
// C6
const MASS_NODES: usize = 256;
const MASS_TOL: f64 = 1e-6;
const POLAR_TOL: f64 = 1e-3;
const CONSTANT_TOL: f64 = 1e-8;
// C7
const CLOSED_FORM_POINTS: usize = 50;
const CLOSED_VS_FD: f64 = 1e-5;
// C8
const FAMILY_BUDGET: Duration = Duration::from_secs(600);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1() -> Outcome {
    let start = Instant::now();
    let rows = verify_lemmas(LEMMA_SAMPLES, 7);
    let elapsed = start.elapsed();
    let get = |id: &str| rows.iter().find(|r| r.id == id).map(|r| r.max_residual).unwrap_or(f64::INFINITY);
    let (inv, r1, rad) = (get("structured_inverse"), get("det_rank_one_update"), get("radial_hessian_det"));
    let pass = inv <= INVERSE_RESIDUAL && r1 <= DET_REL && rad <= DET_REL && elapsed <= LEMMA_BUDGET;
    outcome(
        pass,
        format!(
            "inverse residual {inv:.2e} <= {INVERSE_RESIDUAL:e}; rank-one det {r1:.2e}, radial det {rad:.2e} <= {DET_REL:e}; {:.2}s <= 5s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c2() -> Outcome {
    let f = optimize_f_bound();
    let exact = 2.0 / 529.0 * (859.0 - 12.0 * 95f64.sqrt());
    let pass = (f.f_max - exact).abs() <= 1e-14
        && (f.f_max - F_MAX_REFERENCE).abs() <= F_MAX_DIGITS
        && f.slack >= F_SLACK
        && (f.f_numeric - f.f_max).abs() <= F_NUMERIC;
    outcome(
        pass,
        format!(
            "f_max {:.10} (closed {exact:.10}, reference {F_MAX_REFERENCE}); slack {:.4} >= {F_SLACK}; numeric gap {:.1e}",
            f.f_max,
            f.slack,
            (f.f_numeric - f.f_max).abs()
        ),
    )
}

fn c3() -> Outcome {
    let start = Instant::now();
    let tol = RankTolerance::default();
    let mut pass = true;
    let mut notes = Vec::new();
    for n in [1, 2] {
        let cfg = SampleConfig::new(n, CURVATURE_SAMPLES, 3);
        for region in [SampleRegion::NorthPole, SampleRegion::Equator, SampleRegion::Intermediate] {
            let reps = survey(&sample_points(region, &cfg).expect("sampling"), tol, Exec::Parallel).expect("survey");
            let det = reps.iter().map(|r| r.report.spatial_det.abs()).fold(f64::INFINITY, f64::min);
            let rank = reps.iter().all(|r| r.report.spatial_rank == 2 * n + 1);
            pass &= rank && det >= MIN_DET;
            let mut note = format!("n={n} {region:?}: min|det| {det:.3e}");
            if region != SampleRegion::NorthPole {
                let cin = reps.iter().all(|r| r.report.cinematic_rank == 2 * n);
                let ratio = reps.iter().map(|r| r.report.cinematic_min_ratio()).fold(f64::INFINITY, f64::min);
                pass &= cin && ratio >= MIN_SIGMA_RATIO;
                note += &format!(", cinematic rank {} min σ ratio {ratio:.2e}", if cin { "2n" } else { "≠2n" });
            }
            if region == SampleRegion::Intermediate {
                let s = reps.iter().filter_map(|r| r.im_schur).map(f64::abs).fold(f64::INFINITY, f64::min);
                pass &= s >= IM_SCHUR;
                note += &format!(", min |D+λ⁻¹|PB|²| {s:.3}");
            }
            notes.push(note);
        }
        let exact = survey(&exact_pole_points(&cfg).expect("pole points"), tol, Exec::Parallel).expect("survey");
        let r0 = exact.iter().all(|r| r.report.cinematic_rank == 0);
        pass &= r0;
        notes.push(format!("n={n} exact pole cinematic rank {}", if r0 { "0" } else { "≠0" }));
    }
    let elapsed = start.elapsed();
    pass &= elapsed <= CURVATURE_BUDGET;
    outcome(pass, format!("{}; {:.2}s", notes.join("; "), elapsed.as_secs_f64()))
}

fn c4() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for n in [1, 2] {
        let samples = rescaled_samples(n, RESCALED_SAMPLES, 4).expect("samples");
        let (levels, fit) =
            rescaled_sweep(&samples, &RESCALED_LEVELS, RankTolerance::default(), Exec::Parallel).expect("sweep");
        let rank = levels.iter().all(|l| l.min_cinematic_rank == 2 * n && l.max_cinematic_rank == 2 * n);
        let ok = rank && (RESCALED_SLOPE.0..=RESCALED_SLOPE.1).contains(&fit.slope);
        pass &= ok;
        notes.push(format!("n={n}: rank 2n at all ℓ {rank}, slope {:.3} in {RESCALED_SLOPE:?}", fit.slope));
    }
    outcome(pass, notes.join("; "))
}

fn c5() -> Outcome {
    let tol = RankTolerance::default();
    let mut worst = 0.0f64;
    let mut ranks = true;
    let mut count = 0;
    for n in [1, 2] {
        let cfg = SampleConfig::new(n, TRANSLATION_SAMPLES, 5);
        for region in [SampleRegion::NorthPole, SampleRegion::Equator, SampleRegion::Intermediate] {
            let pts = sample_points(region, &cfg).expect("sampling");
            let reps = Exec::Parallel
                .try_map(pts.len(), |i| translation_invariance_check(&pts[i].phase, &pts[i].x, pts[i].t, &pts[i].y, tol))
                .expect("translation check");
            for r in reps {
                ranks &= r.rank.0 == r.rank.1 && r.cinematic_rank.0 == r.cinematic_rank.1;
                worst = worst.max(r.det_rel);
                count += 1;
            }
        }
    }
    outcome(
        ranks && worst <= TRANSLATION_DET_REL,
        format!("{count} points: ranks equal {ranks}; max |det| rel diff {worst:.2e} <= {TRANSLATION_DET_REL:e}"),
    )
}

fn c6() -> Outcome {
    let rule = build_quadrature(1, MASS_NODES, MASS_NODES).expect("rule");
    let mass_err = (rule.total_mass() - 2.0 * std::f64::consts::PI.powi(2)).abs();
    let mut polar = Vec::new();
    for n in [1, 2] {
        let ctx = GroupContext::standard(n).expect("n");
        let r = build_quadrature(n, 16, 16).expect("rule");
        let c = polar_check(&ctx, &koranyi_gaussian, &r, 3.0, 64, gaussian_grid(n), Exec::Parallel).expect("polar");
        polar.push(c.rel_err);
    }
    let ctx = GroupContext::standard(1).expect("n");
    let small = build_quadrature(1, 32, 32).expect("rule");
    let one = |_: &[f64]| 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let vals: Vec<f64> = TimeGrid::local_default()
        .values()
        .iter()
        .map(|t| apply_averaging(&ctx, &one, &x, *t, &small).expect("average"))
        .collect();
    let spread = vals.iter().map(|v| (v - sphere_mass_exact(1)).abs()).fold(0.0, f64::max);
    let polar_max = polar.iter().copied().fold(0.0, f64::max);
    outcome(
        mass_err <= MASS_TOL && polar_max <= POLAR_TOL && spread <= CONSTANT_TOL && vals.len() == 65,
        format!(
            "mass error {mass_err:.2e} <= {MASS_TOL:e}; polar rel error n=1 {:.2e}, n=2 {:.2e} <= {POLAR_TOL:e}; A_t 1 deviation over {} radii {spread:.2e} <= {CONSTANT_TOL:e}",
            polar[0],
            polar[1],
            vals.len()
        ),
    )
}

fn max_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).expect("same shape").max_abs()
}

fn c7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut eq_worst, mut im_worst) = (0.0f64, 0.0f64);
    for k in 0..CLOSED_FORM_POINTS {
        let n = 1 + k % 2;
        let m = 2 * n;
        let ctx = GroupContext::admissible(n, &mut rng).expect("n");
        let x0 = vec![0.0; m + 1];
        let t: f64 = rng.random_range(1.0..2.0);
        let tau = rng.random_range(1.0..2.0);

        // Equator: y' = 0, ȳ = s.
        let s = rng.random_range(-0.2..0.2) * t * t;
        let a = -(t.powi(4) - s * s).powf(0.25);
        let mut y = vec![0.0; m + 1];
        y[0] = tau;
        y[m] = s;
        let phase = Phase::new(ctx.clone(), PhaseKind::Equator(Branch::Upper));
        let fd = mixed_hessian_fd(&phase, &x0, t, &y).expect("fd").value;
        let closed = equator_hessian_closed(&ctx, t, s, a, tau).expect("closed");
        eq_worst = eq_worst.max(max_diff(&fd.submatrix(0, 0, m + 1, m + 1), &closed));

        // Intermediate: X rebuilt from finite differences.
        let r = rng.random_range(0.35..0.99) * t;
        let mut uy: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let scale = r / uy.iter().map(|v| v * v).sum::<f64>().sqrt();
        uy.iter_mut().for_each(|v| *v *= scale);
        let branch = if rng.random::<bool>() { Branch::Upper } else { Branch::Lower };
        let hbar = branch.sign() * (t.powi(4) - r.powi(4)).sqrt();
        let phase = Phase::new(ctx.clone(), PhaseKind::Intermediate(branch));
        let mut y = uy.clone();
        y.push(tau);
        let fd = mixed_hessian_fd(&phase, &x0, t, &y).expect("fd").value;
        let phi = phase.eval(&x0, t, &y).expect("phase");
        let h = 1e-6;
        let grad: Vec<f64> = (0..m)
            .map(|i| {
                let (mut p, mut q) = (y.clone(), y.clone());
                p[i] += h;
                q[i] -= h;
                (phase.eval(&x0, t, &p).expect("phase") - phase.eval(&x0, t, &q).expect("phase")) / (2.0 * h)
            })
            .collect();
        let xr = x_from_derivatives(&fd, &grad, phi, tau);
        let xc = intermediate_x(&ctx, &uy, hbar).expect("X");
        im_worst = im_worst.max(max_diff(&xr, &xc));
    }
    outcome(
        eq_worst <= CLOSED_VS_FD && im_worst <= CLOSED_VS_FD,
        format!(
            "{CLOSED_FORM_POINTS} points each: equator Hessian {eq_worst:.2e}, intermediate X {im_worst:.2e} <= {CLOSED_VS_FD:e}"
        ),
    )
}

fn c8() -> Outcome {
    let ladder = default_ladder(1);
    let cfg = FamilyConfig::default();
    let mut pass = true;
    let mut notes = Vec::new();
    for kind in FamilyKind::ALL {
        let start = Instant::now();
        let family = Family::new(kind, 1);
        match scaling_experiment(&family, &ladder, &cfg, Exec::Parallel) {
            Ok(e) => {
                let elapsed = start.elapsed();
                let tol = kind.slope_tolerance();
                let ok = (e.fit.slope - e.predicted.lower_bound).abs() <= tol && elapsed <= FAMILY_BUDGET;
                pass &= ok;
                notes.push(format!(
                    "{} {:.3} (want {} ± {tol}, {:.1}s)",
                    kind.name(),
                    e.fit.slope,
                    e.predicted.lower_bound,
                    elapsed.as_secs_f64()
                ));
            }
            Err(err) => {
                pass = false;
                notes.push(format!("{} failed: {err}", kind.name()));
            }
        }
    }
    outcome(pass, notes.join("; "))
}

fn c9() -> Outcome {
    let mut failures = 0;
    let mut total = 0;
    for n in 1..=6 {
        for c in necessary_condition_report(n).expect("n >= 1") {
            total += 1;
            failures += usize::from(!c.ok);
        }
    }
    let s = region_vertices(2).expect("n = 2");
    let q = |a, b| Ratio::new(a, b);
    let fig = s.q2() == RPoint::new(q(4, 5), q(4, 5))
        && s.q3() == RPoint::new(q(4, 5), q(1, 5))
        && s.q4() == RPoint::new(q(5, 7), q(1, 7));
    outcome(
        failures == 0 && fig,
        format!("{total} exact half-plane checks for n=1..6, {failures} failed; n=2 vertices Q2 {}, Q3 {}, Q4 {}", s.q2(), s.q3(), s.q4()),
    )
}

fn c10_table(threads: usize) -> String {
    koranyi::exec::with_threads(threads, || {
        let cfg = SampleConfig::new(1, 30, 10);
        let reps = survey(&sample_points(SampleRegion::Intermediate, &cfg).expect("sampling"), RankTolerance::default(), Exec::Parallel)
            .expect("survey");
        let mut t = Table::new(["sample", "det", "rank", "sigma_min"]);
        for (i, r) in reps.iter().enumerate() {
            t.push(vec![
                i.to_string(),
                cell(r.report.spatial_det),
                r.report.cinematic_rank.to_string(),
                cell(r.report.cinematic_sigma.last().copied().unwrap_or(0.0)),
            ]);
        }
        let family = Family::new(FamilyKind::Knapp, 1);
        let fc = FamilyConfig { samples: 50, ..FamilyConfig::default() };
        let e = scaling_experiment(&family, &default_ladder(1)[..4], &fc, Exec::Parallel).expect("scaling");
        for p in &e.points {
            t.push(vec!["knapp".into(), cell(p.delta), cell(p.value), cell(p.median)]);
        }
        t.to_csv("{\"check\":\"determinism\"}")
    })
}

fn c10() -> Outcome {
    let (a, b) = (c10_table(2), c10_table(2));
    let same = a == b;
    outcome(same, format!("two runs at 2 threads: {} bytes, identical {same}", a.len()))
}

type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("C1", "matrix lemma suite", c1),
        ("C2", "f-bound constants", c2),
        ("C3", "curvature ranks", c3),
        ("C4", "rescaled-pole convergence", c4),
        ("C5", "translation invariance", c5),
        ("C6", "measure and quadrature", c6),
        ("C7", "closed forms vs finite differences", c7),
        ("C8", "scaling laws (n = 1)", c8),
        ("C9", "region geometry", c9),
        ("C10", "determinism", c10),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        let o = f();
        println!("{id:<4} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

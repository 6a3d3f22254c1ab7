//! Subcommands other than `average`.

use crate::{Check, CurvatureArgs, CurvatureRegion, FamilyArg, MeshArgs, Outcome, PolarArgs, RegionArgs, ScalingArgs, VerifyArgs};
use koranyi::counterexamples::{
    default_ladder, in_region, necessary_condition_report, parse_exponent_reciprocal, region_vertices, scaling_experiment,
    Family, FamilyConfig, FamilyKind, RPoint, RegionKind,
};
use koranyi::curvature::sampling::{
    exact_pole_points, rescaled_pole_curvature, rescaled_samples, sample_points, survey, PointReport, SampleConfig,
    SampleRegion,
};
use koranyi::curvature::RankTolerance;
use koranyi::exec::Exec;
use koranyi::fit::ols;
use koranyi::matrix_identities::verify_lemmas as run_lemmas;
use koranyi::quadrature::{build_quadrature, gaussian_grid, koranyi_gaussian, polar_check as run_polar, sphere_mass_exact, LebesgueGrid};
use koranyi::report::{cell, Table};
use koranyi::{GroupContext, Result};
use serde_json::json;

pub fn verify_lemmas(a: &VerifyArgs) -> Result<Outcome> {
    let rows = run_lemmas(a.samples, a.seed);
    let mut table = Table::new(["lemma", "samples", "max_residual", "tolerance", "pass"]);
    let mut checks = Vec::new();
    for r in &rows {
        table.push(vec![r.id.into(), r.samples.to_string(), cell(r.max_residual), cell(r.tolerance), r.pass.to_string()]);
        checks.push(Check::new(r.id, r.max_residual, format!("<= {}", r.tolerance), r.pass));
    }
    Ok(Outcome { table, checks, details: json!({}) })
}

fn coord_header(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("{prefix}_{i}")).collect()
}

fn curvature_row(region: &str, index: usize, ell: Option<u32>, p: &PointReport, deviation: Option<f64>) -> Vec<String> {
    let r = &p.report;
    let smax = r.cinematic_sigma.first().copied().unwrap_or(0.0);
    let smin = if r.cinematic_rank == 0 { 0.0 } else { r.cinematic_sigma[r.cinematic_rank - 1] };
    let mut row = vec![region.to_string(), index.to_string(), ell.map(|e| e.to_string()).unwrap_or_default()];
    row.extend(p.x.iter().map(|v| cell(*v)));
    row.push(cell(p.t));
    row.extend(p.y.iter().map(|v| cell(*v)));
    row.extend([
        cell(r.spatial_det),
        r.spatial_rank.to_string(),
        r.cinematic_rank.to_string(),
        cell(smin),
        cell(smax),
        deviation.or(p.im_schur).map(cell).unwrap_or_default(),
    ]);
    row
}

pub fn curvature(a: &CurvatureArgs, exec: Exec) -> Result<Outcome> {
    let n = a.n;
    let d = 2 * n + 1;
    let tol = RankTolerance { rel: a.tol, ..RankTolerance::default() };
    let mut header: Vec<String> = vec!["region".into(), "sample".into(), "ell".into()];
    header.extend(coord_header("x", d));
    header.push("t".into());
    header.extend(coord_header("y", d));
    header.extend(
        ["det_mixed_hessian", "rank_spatial", "rank_cinematic", "sigma_min", "sigma_max", "deviation"].map(String::from),
    );
    let mut table = Table::new(header);
    let mut checks = Vec::new();
    let cfg = SampleConfig::new(n, a.samples, a.seed);

    if let CurvatureRegion::NpRescaled = a.region {
        let samples = rescaled_samples(n, a.samples, a.seed)?;
        let mut maxes = Vec::new();
        let mut rank_ok = true;
        for &ell in &a.ell {
            let reps = exec.try_map(samples.len(), |i| {
                let s = &samples[i];
                let y = s.y(ell);
                rescaled_pole_curvature(&s.ctx, ell, &s.x, s.t, &y, tol).map(|r| (y, r))
            })?;
            let mut dev = 0.0f64;
            for (i, (y, r)) in reps.iter().enumerate() {
                let s = &samples[i];
                let p = PointReport { x: s.x.clone(), t: s.t, y: y.clone(), omega: vec![], report: r.report.clone(), im_schur: None };
                table.push(curvature_row("np-rescaled", i, Some(ell), &p, Some(r.deviation_max)));
                rank_ok &= r.report.cinematic_rank == 2 * n;
                dev = dev.max(r.deviation_max);
            }
            maxes.push((ell as f64, dev));
        }
        checks.push(Check::new("rescaled cinematic rank", (2 * n) as f64, "== 2n at every ℓ", rank_ok));
        if maxes.len() >= 3 {
            let xs: Vec<f64> = maxes.iter().map(|m| m.0).collect();
            let ys: Vec<f64> = maxes.iter().map(|m| m.1.log2()).collect();
            let fit = ols(&xs, &ys)?;
            checks.push(Check::new("deviation slope", fit.slope, "in [-2.4, -1.6]", (-2.4..=-1.6).contains(&fit.slope)));
        }
        return Ok(Outcome { table, checks, details: json!({ "deviation_max": maxes }) });
    }

    let (region, name) = match a.region {
        CurvatureRegion::Np => (SampleRegion::NorthPole, "np"),
        CurvatureRegion::Eq => (SampleRegion::Equator, "eq"),
        CurvatureRegion::Im => (SampleRegion::Intermediate, "im"),
        CurvatureRegion::NpRescaled => unreachable!("handled above"),
    };
    let reports = survey(&sample_points(region, &cfg)?, tol, exec)?;
    for (i, p) in reports.iter().enumerate() {
        table.push(curvature_row(name, i, None, p, None));
    }
    let min_det = reports.iter().map(|p| p.report.spatial_det.abs()).fold(f64::INFINITY, f64::min);
    let full = reports.iter().all(|p| p.report.spatial_rank == d);
    checks.push(Check::new("rotational rank", d as f64, "== 2n+1", full));
    checks.push(Check::new("min |det|", min_det, ">= 1e-3", min_det >= 1e-3));
    match region {
        SampleRegion::NorthPole => {
            let exact = survey(&exact_pole_points(&cfg)?, tol, exec)?;
            for (i, p) in exact.iter().enumerate() {
                table.push(curvature_row("np-exact", i, None, p, None));
            }
            let max_rank = exact.iter().map(|p| p.report.cinematic_rank).max().unwrap_or(0);
            checks.push(Check::new("exact pole cinematic rank", max_rank as f64, "== 0", max_rank == 0));
        }
        SampleRegion::Equator | SampleRegion::Intermediate => {
            let rank_ok = reports.iter().all(|p| p.report.cinematic_rank == 2 * n);
            let ratio = reports.iter().map(|p| p.report.cinematic_min_ratio()).fold(f64::INFINITY, f64::min);
            checks.push(Check::new("cinematic rank", (2 * n) as f64, "== 2n", rank_ok));
            checks.push(Check::new("min σ_min/σ_max", ratio, ">= 1e-3", ratio >= 1e-3));
            if region == SampleRegion::Intermediate {
                let schur = reports.iter().filter_map(|p| p.im_schur).map(f64::abs).fold(f64::INFINITY, f64::min);
                checks.push(Check::new("min |D + λ⁻¹|PB|²|", schur, ">= 0.18", schur >= 0.18));
            }
        }
    }
    Ok(Outcome { table, checks, details: json!({}) })
}

pub fn scaling(a: &ScalingArgs, exec: Exec) -> Result<Outcome> {
    let kinds: Vec<FamilyKind> = match a.family {
        FamilyArg::Knapp => vec![FamilyKind::Knapp],
        FamilyArg::Ball => vec![FamilyKind::Ball],
        FamilyArg::Annulus => vec![FamilyKind::Annulus],
        FamilyArg::SingleShell => vec![FamilyKind::SingleShell],
        FamilyArg::All => FamilyKind::ALL.to_vec(),
    };
    let ladder: Vec<f64> = match a.k_max {
        Some(k) => (a.k_min..=k).map(|k| 2f64.powi(-k)).collect(),
        None => default_ladder(a.n).into_iter().filter(|d| *d <= 2f64.powi(-a.k_min)).collect(),
    };
    let cfg = FamilyConfig { samples: a.samples, seed: a.seed, quantile: a.quantile, ..FamilyConfig::default() };
    let mut table = Table::new([
        "family",
        "delta",
        "value",
        "min",
        "median",
        "compensated",
        "input_measure",
        "output_measure",
        "rule_nodes",
    ]);
    let mut checks = Vec::new();
    let mut details = serde_json::Map::new();
    for kind in kinds {
        let family = Family { kind, n: a.n, t: a.t };
        let e = scaling_experiment(&family, &ladder, &cfg, exec)?;
        for (p, c) in e.points.iter().zip(&e.compensated) {
            table.push(vec![
                kind.name().into(),
                cell(p.delta),
                cell(p.value),
                cell(p.min),
                cell(p.median),
                cell(*c),
                cell(family.input_measure(p.delta)),
                cell(family.output_measure(p.delta)),
                p.max_nodes.to_string(),
            ]);
        }
        let name = kind.name();
        let pred = e.predicted;
        let tol = kind.slope_tolerance();
        checks.push(Check::new(
            format!("{name} slope"),
            e.fit.slope,
            format!("{} ± {tol}", pred.lower_bound),
            (e.fit.slope - pred.lower_bound).abs() <= tol,
        ));
        checks.push(Check::new(format!("{name} monotone"), 0.0, "nonincreasing as δ decreases", e.monotone(1e-9)));
        let spread = e.compensated_spread();
        checks.push(Check::new(format!("{name} compensated spread"), spread, "< 4", spread < 4.0));
        for (label, fit, want) in [
            ("input measure slope", e.input_measure_fit.slope, pred.input_measure),
            ("output set measure slope", e.output_measure_fit.slope, pred.output_measure),
        ] {
            checks.push(Check::new(format!("{name} {label}"), fit, format!("{want} ± 0.05"), (fit - want).abs() <= 0.05));
        }
        details.insert(name.into(), serde_json::to_value(&e).expect("experiment serializes"));
    }
    Ok(Outcome { table, checks, details: serde_json::Value::Object(details) })
}

pub fn region(a: &RegionArgs) -> Result<Outcome> {
    let spec = region_vertices(a.n)?;
    let mut table = Table::new(["kind", "label", "inv_p", "inv_q", "status"]);
    let labels = [("Q1", spec.q1()), ("Q2", spec.q2()), ("Q3", spec.q3()), ("Q4", spec.q4())];
    for (l, v) in labels {
        table.push(vec!["vertex".into(), l.into(), v.x.to_string(), v.y.to_string(), String::new()]);
    }
    for (i, v) in spec.single.iter().enumerate() {
        table.push(vec!["vertex".into(), format!("T{}", i + 1), v.x.to_string(), v.y.to_string(), String::new()]);
    }
    let mut checks = Vec::new();
    let report = necessary_condition_report(a.n)?;
    let ok = report.iter().all(|c| c.ok);
    for c in &report {
        table.push(vec!["check".into(), c.label.clone(), String::new(), String::new(), if c.ok { "pass" } else { "fail" }.into()]);
    }
    checks.push(Check::new("region geometry", report.len() as f64, "all half-plane checks exact", ok));
    let mut details = json!({ "vertices": spec });
    if let (Some(p), Some(q)) = (&a.p, &a.q) {
        let pt = RPoint::new(parse_exponent_reciprocal(p)?, parse_exponent_reciprocal(q)?);
        for (which, label) in [(RegionKind::MaximalQuadrilateral, "maximal"), (RegionKind::AverageTriangle, "single")] {
            let m = in_region(&spec, pt, which);
            table.push(vec!["point".into(), label.into(), pt.x.to_string(), pt.y.to_string(), m.to_string()]);
            details[label] = json!(m);
        }
    }
    Ok(Outcome { table, checks, details })
}

pub fn sphere_mesh(a: &MeshArgs) -> Result<Outcome> {
    let rule = build_quadrature(a.n, a.n_rho, a.n_sph)?;
    let m = 2 * a.n;
    let mut header = coord_header("ubar", m);
    header.extend(["bar".to_string(), "weight".to_string()]);
    let mut table = Table::new(header);
    for i in 0..rule.len() {
        let mut row: Vec<String> = rule.point(i).iter().map(|v| cell(*v)).collect();
        row.push(cell(rule.weights()[i]));
        table.push(row);
    }
    let mass = rule.total_mass();
    let exact = sphere_mass_exact(a.n);
    let rel = (mass - exact).abs() / exact;
    let checks = vec![Check::new("total mass relative error", rel, "<= 1e-6", rel <= 1e-6)];
    Ok(Outcome { table, checks, details: json!({ "mass": mass, "exact": exact, "nodes": rule.len() }) })
}

pub fn polar_check(a: &PolarArgs, exec: Exec) -> Result<Outcome> {
    let ctx = GroupContext::standard(a.n)?;
    let grid = LebesgueGrid { nodes: a.grid_nodes.unwrap_or(gaussian_grid(a.n).nodes), ..gaussian_grid(a.n) };
    let mut table = Table::new(["n", "n_rho", "n_sph", "sphere_nodes", "lhs", "rhs", "rel_err"]);
    let mut last = f64::NAN;
    for k in 0..=a.doublings {
        let (nr, ns) = (a.n_rho << k, a.n_sph << k);
        let rule = build_quadrature(a.n, nr, ns)?;
        let c = run_polar(&ctx, &koranyi_gaussian, &rule, a.r_max, a.r_nodes, grid, exec)?;
        table.push(vec![
            a.n.to_string(),
            nr.to_string(),
            ns.to_string(),
            rule.len().to_string(),
            cell(c.lhs),
            cell(c.rhs),
            cell(c.rel_err),
        ]);
        last = c.rel_err;
    }
    let checks = vec![Check::new("polar identity relative error", last, "<= 1e-3", last <= 1e-3)];
    Ok(Outcome { table, checks, details: json!({}) })
}

//! The `average` subcommand: a JSON-configured evaluation of `A_t f` (one
//! radius) or `max_t |A_t f|` (several radii) on a tensor grid.

use crate::{Check, Outcome};
use koranyi::error::Error;
use koranyi::exec::Exec;
use koranyi::heisenberg::GroupContext;
use koranyi::operators::{apply_averaging, lp_norm, Field, GridFunction, TimeGrid};
use koranyi::quadrature::{build_quadrature, koranyi_gaussian, sphere_mass_exact};
use koranyi::report::{cell, Table};
use koranyi::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::Path;

/// Input function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// `exp(−|x|_K⁴)`.
    Gaussian {},
    /// Indicator of the Euclidean ball of the given radius.
    Ball { radius: f64 },
    /// Indicator of `|u| ≤ δ^{1/4}`, `|s| ≤ δ`.
    Knapp { delta: f64 },
    /// Indicator of `||y|_K − t| ≤ δ`.
    Annulus { delta: f64, t: f64 },
    /// Sum of `count` Gaussian bumps of width `width` centred uniformly in
    /// `[−spread, spread]^{2n+1}` (centres drawn from `seed`).
    Bumps { count: usize, width: f64, spread: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub n_rho: usize,
    pub n_sph: usize,
}

/// Radii of the averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeGridSpec {
    Single { t: f64 },
    Uniform { a: f64, b: f64, m: usize },
    LocalDefault {},
    Dyadic { k0: i32, k1: i32 },
    Values { values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    /// One row per grid node.
    Grid,
    /// `‖f‖_p`, `‖Mf‖_q` and their ratio, both on the same grid.
    Norms,
}

/// The experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AverageConfig {
    pub n: usize,
    pub function: FunctionSpec,
    #[serde(rename = "box")]
    pub grid_box: BoxSpec,
    pub resolution: Vec<usize>,
    pub quadrature: QuadratureSpec,
    pub t_grid: TimeGridSpec,
    pub output: OutputKind,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default = "two")]
    pub q: f64,
    #[serde(default)]
    pub seed: u64,
}

fn two() -> f64 {
    2.0
}

pub fn load(path: &Path) -> std::result::Result<AverageConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
}

struct TestFunction {
    spec: FunctionSpec,
    centres: Vec<Vec<f64>>,
}

impl TestFunction {
    fn new(spec: &FunctionSpec, d: usize, seed: u64) -> Self {
        let centres = match spec {
            FunctionSpec::Bumps { count, spread, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..*count).map(|_| (0..d).map(|_| rng.random_range(-*spread..=*spread)).collect()).collect()
            }
            _ => Vec::new(),
        };
        TestFunction { spec: spec.clone(), centres }
    }

    /// An upper bound for `sup |f|`.
    fn sup_bound(&self) -> f64 {
        match self.spec {
            FunctionSpec::Bumps { count, .. } => count as f64,
            _ => 1.0,
        }
    }
}

impl Field for TestFunction {
    fn eval(&self, y: &[f64]) -> f64 {
        let m = y.len() - 1;
        let ind = |b: bool| if b { 1.0 } else { 0.0 };
        match &self.spec {
            FunctionSpec::Gaussian {} => koranyi_gaussian(y),
            FunctionSpec::Ball { radius } => ind(y.iter().map(|v| v * v).sum::<f64>() <= radius * radius),
            FunctionSpec::Knapp { delta } => {
                ind(y[..m].iter().map(|v| v * v).sum::<f64>().sqrt() <= delta.powf(0.25) && y[m].abs() <= *delta)
            }
            FunctionSpec::Annulus { delta, t } => {
                let u2: f64 = y[..m].iter().map(|v| v * v).sum();
                ind(((u2 * u2 + y[m] * y[m]).powf(0.25) - t).abs() <= *delta)
            }
            FunctionSpec::Bumps { width, .. } => self
                .centres
                .iter()
                .map(|c| (-c.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (width * width)).exp())
                .sum(),
        }
    }
}

fn time_grid(spec: &TimeGridSpec) -> Result<TimeGrid> {
    match spec {
        TimeGridSpec::Single { t } => TimeGrid::new(vec![*t]),
        TimeGridSpec::Uniform { a, b, m } => TimeGrid::uniform(*a, *b, *m),
        TimeGridSpec::LocalDefault {} => Ok(TimeGrid::local_default()),
        TimeGridSpec::Dyadic { k0, k1 } => TimeGrid::dyadic(*k0, *k1),
        TimeGridSpec::Values { values } => TimeGrid::new(values.clone()),
    }
}

pub fn run(path: &Path, exec: Exec) -> Result<Outcome> {
    let cfg = load(path).map_err(Error::InvalidParameter)?;
    let ctx = GroupContext::standard(cfg.n)?;
    let d = ctx.dim();
    let f = TestFunction::new(&cfg.function, d, cfg.seed);
    let rule = build_quadrature(cfg.n, cfg.quadrature.n_rho, cfg.quadrature.n_sph)?;
    let tgrid = time_grid(&cfg.t_grid)?;
    let grid = GridFunction::new(
        cfg.grid_box.lo.clone(),
        cfg.grid_box.hi.clone(),
        cfg.resolution.clone(),
        vec![0.0; cfg.resolution.iter().product()],
    )?;
    if grid.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: grid.dim() });
    }
    let single = tgrid.values().len() == 1;
    let values = exec.try_map(grid.len(), |i| {
        let x = grid.node(i);
        let mut best = 0.0f64;
        for &t in tgrid.values() {
            let v = apply_averaging(&ctx, &f, &x, t, &rule)?;
            if single {
                return Ok(v);
            }
            best = best.max(v.abs());
        }
        Ok::<f64, Error>(best)
    })?;
    let bound = sphere_mass_exact(cfg.n) * f.sup_bound();
    let worst = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let finite = values.iter().all(|v| v.is_finite());
    let mut checks = vec![
        Check::new("values finite", 0.0, "all finite", finite),
        Check::new("max |A_t f| / (μ(S_K)·sup|f|)", worst / bound, "<= 1", worst <= bound * (1.0 + 1e-12)),
    ];
    let table = match cfg.output {
        OutputKind::Grid => {
            let mut header: Vec<String> = (1..=d).map(|i| format!("x_{i}")).collect();
            header.push(if single { "average".into() } else { "maximal".into() });
            let mut table = Table::new(header);
            for (i, v) in values.iter().enumerate() {
                let mut row: Vec<String> = grid.node(i).iter().map(|c| cell(*c)).collect();
                row.push(cell(*v));
                table.push(row);
            }
            table
        }
        OutputKind::Norms => {
            let input = GridFunction::from_field(cfg.grid_box.lo.clone(), cfg.grid_box.hi.clone(), cfg.resolution.clone(), &f, exec)?;
            let output = GridFunction::new(cfg.grid_box.lo.clone(), cfg.grid_box.hi.clone(), cfg.resolution.clone(), values)?;
            let (nf, nm) = (lp_norm(&input, cfg.p)?, lp_norm(&output, cfg.q)?);
            checks.push(Check::new("‖f‖_p > 0", nf, "> 0", nf > 0.0));
            let mut table = Table::new(["p", "q", "norm_f_p", "norm_mf_q", "ratio"]);
            table.push(vec![cell(cfg.p), cell(cfg.q), cell(nf), cell(nm), cell(nm / nf)]);
            table
        }
    };
    Ok(Outcome { table, checks, details: json!({ "grid_nodes": grid.len(), "sphere_nodes": rule.len() }) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_config_parses() {
        let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/average_gaussian.json");
        let c = load(&p).unwrap();
        assert_eq!(c.n, 1);
        assert_eq!(c.output, OutputKind::Norms);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = r#"{"n":1,"function":{"kind":"gaussian","oops":1},"box":{"lo":[0,0,0],"hi":[1,1,1]},
            "resolution":[2,2,2],"quadrature":{"n_rho":4,"n_sph":4},"t_grid":{"kind":"local_default"},"output":"grid"}"#;
        assert!(serde_json::from_str::<AverageConfig>(bad).is_err());
        let good = bad.replace(",\"oops\":1", "");
        assert!(serde_json::from_str::<AverageConfig>(&good).is_ok());
        let extra = good.replace("\"kind\":\"local_default\"", "\"kind\":\"local_default\",\"m\":3");
        assert!(serde_json::from_str::<AverageConfig>(&extra).is_err());
    }
}

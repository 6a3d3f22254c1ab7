//! Exact geometry of the `L^p → L^q` region in the `(1/p, 1/q)` square.
//!
//! The maximal-function region is the closed quadrilateral `Q₁Q₂Q₃Q₄`, the
//! single-average region the closed triangle `T₁T₂T₃`. Each edge lies on a
//! line forced by a counterexample family; [`necessary_condition_report`] checks that the
//! half-planes from those lines cut out exactly the listed vertices.

use crate::error::{Error, Result};
use num_rational::Ratio;
use serde::Serialize;
use std::fmt;

pub type Q = Ratio<i64>;

/// A point `(1/p, 1/q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RPoint {
    pub x: Q,
    pub y: Q,
}

impl RPoint {
    pub fn new(x: Q, y: Q) -> Self {
        RPoint { x, y }
    }
}

impl fmt::Display for RPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Serialize for RPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq([self.x.to_string(), self.y.to_string()])
    }
}

fn q(a: i64, b: i64) -> Q {
    Ratio::new(a, b)
}

/// Vertices of both regions for `ℍⁿ`.
#[derive(Debug, Clone, Serialize)]
pub struct RegionSpec {
    pub n: usize,
    /// `Q₁ … Q₄`, counter-clockwise.
    pub maximal: [RPoint; 4],
    /// `T₁ T₂ T₃`, counter-clockwise.
    pub single: [RPoint; 3],
}

pub fn region_vertices(n: usize) -> Result<RegionSpec> {
    if !(1..=1000).contains(&n) {
        return Err(Error::InvalidParameter(format!("n must be in 1..=1000, got {n}")));
    }
    let n = n as i64;
    let (a, b) = (2 * n, 2 * n + 1);
    let den = 2 * n * n + 2 * n + 2;
    Ok(RegionSpec {
        n: n as usize,
        maximal: [
            RPoint::new(q(0, 1), q(0, 1)),
            RPoint::new(q(n * b, den), q(n, den)),
            RPoint::new(q(a, b), q(1, b)),
            RPoint::new(q(a, b), q(a, b)),
        ],
        single: [
            RPoint::new(q(0, 1), q(0, 1)),
            RPoint::new(q(b, 2 * n + 2), q(1, 2 * n + 2)),
            RPoint::new(q(1, 1), q(1, 1)),
        ],
    })
}

impl RegionSpec {
    pub fn q1(&self) -> RPoint {
        self.maximal[0]
    }
    pub fn q2(&self) -> RPoint {
        self.maximal[3]
    }
    pub fn q3(&self) -> RPoint {
        self.maximal[2]
    }
    pub fn q4(&self) -> RPoint {
        self.maximal[1]
    }
}

/// Position relative to a closed polygon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    Interior,
    Boundary,
    Outside,
}

impl fmt::Display for Membership {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Membership::Interior => "interior",
            Membership::Boundary => "boundary",
            Membership::Outside => "outside",
        })
    }
}

fn cross(a: RPoint, b: RPoint, p: RPoint) -> Q {
    (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
}

/// Classifies `p` against a convex counter-clockwise polygon.
pub fn classify(poly: &[RPoint], p: RPoint) -> Membership {
    let zero = q(0, 1);
    let mut on_edge = false;
    for i in 0..poly.len() {
        let c = cross(poly[i], poly[(i + 1) % poly.len()], p);
        if c < zero {
            return Membership::Outside;
        }
        if c == zero {
            on_edge = true;
        }
    }
    if on_edge {
        Membership::Boundary
    } else {
        Membership::Interior
    }
}

/// Which of the two regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionKind {
    MaximalQuadrilateral,
    AverageTriangle,
}

/// Membership of `(1/p, 1/q)` in one of the regions.
pub fn in_region(spec: &RegionSpec, p: RPoint, which: RegionKind) -> Membership {
    match which {
        RegionKind::MaximalQuadrilateral => classify(&spec.maximal, p),
        RegionKind::AverageTriangle => classify(&spec.single, p),
    }
}

/// A half-plane `a·X + b·Y + c ≥ 0` with `X = 1/p`, `Y = 1/q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HalfPlane {
    pub name: &'static str,
    pub a: Q,
    pub b: Q,
    pub c: Q,
}

impl HalfPlane {
    pub fn value(&self, p: RPoint) -> Q {
        self.a * p.x + self.b * p.y + self.c
    }

    fn intersect(&self, o: &HalfPlane) -> Option<RPoint> {
        let det = self.a * o.b - self.b * o.a;
        if det == q(0, 1) {
            return None;
        }
        Some(RPoint::new((self.b * o.c - self.c * o.b) / det, (self.c * o.a - self.a * o.c) / det))
    }
}

fn hp(name: &'static str, a: i64, b: i64, c: i64) -> HalfPlane {
    HalfPlane { name, a: q(a, 1), b: q(b, 1), c: q(c, 1) }
}

/// Necessary conditions for the maximal function, in edge order
/// `Q₁Q₄, Q₄Q₃, Q₃Q₂, Q₂Q₁`.
pub fn maximal_conditions(n: usize) -> [HalfPlane; 4] {
    let n = n as i64;
    [
        hp("ANNULUS", -1, 2 * n + 1, 0),
        hp("KNAPP", -(n + 2), 3 * n, n),
        hp("BALL", -(2 * n + 1), 0, 2 * n),
        hp("p<=q", 1, -1, 0),
    ]
}

/// Necessary conditions for a single average, in edge order
/// `T₁T₂, T₂T₃, T₃T₁`.
pub fn single_conditions(n: usize) -> [HalfPlane; 3] {
    let n = n as i64;
    [hp("ANNULUS", -1, 2 * n + 1, 0), hp("SINGLE_SHELL", -(2 * n + 1), 1, 2 * n), hp("p<=q", 1, -1, 0)]
}

/// One consistency check of the region geometry.
#[derive(Debug, Clone, Serialize)]
pub struct RegionCheck {
    pub n: usize,
    pub label: String,
    pub ok: bool,
}

fn polygon_checks(n: usize, label: &str, verts: &[RPoint], lines: &[HalfPlane], out: &mut Vec<RegionCheck>) {
    let k = verts.len();
    for i in 0..k {
        // Vertex i+1 is where edge i meets edge i+1.
        let v = verts[(i + 1) % k];
        let meet = lines[i].intersect(&lines[(i + 1) % k]);
        out.push(RegionCheck {
            n,
            label: format!("{label}: {} ∩ {} = {v}", lines[i].name, lines[(i + 1) % k].name),
            ok: meet == Some(v),
        });
        out.push(RegionCheck {
            n,
            label: format!("{label}: {v} satisfies every condition"),
            ok: lines.iter().all(|l| l.value(v) >= q(0, 1)),
        });
    }
    for (i, l) in lines.iter().enumerate() {
        let (a, b) = (verts[i], verts[(i + 1) % k]);
        out.push(RegionCheck {
            n,
            label: format!("{label}: {} is tight on edge {a}{b}", l.name),
            ok: l.value(a) == q(0, 1) && l.value(b) == q(0, 1),
        });
    }
}

/// Checks both regions against their necessary conditions.
pub fn necessary_condition_report(n: usize) -> Result<Vec<RegionCheck>> {
    let spec = region_vertices(n)?;
    let mut out = Vec::new();
    polygon_checks(n, "maximal", &spec.maximal, &maximal_conditions(n), &mut out);
    polygon_checks(n, "single", &spec.single, &single_conditions(n), &mut out);
    for v in spec.maximal {
        out.push(RegionCheck {
            n,
            label: format!("maximal vertex {v} lies in the single region"),
            ok: classify(&spec.single, v) != Membership::Outside,
        });
    }
    Ok(out)
}

/// Parses an exponent `p ∈ [1, ∞]` given as an integer, a terminating
/// decimal, a fraction `a/b` or `inf`, and returns `1/p` exactly.
pub fn parse_exponent_reciprocal(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::InvalidParameter(format!("cannot parse exponent {s:?}"));
    if s.eq_ignore_ascii_case("inf") || s == "∞" {
        return Ok(q(0, 1));
    }
    let p = if let Some((a, b)) = s.split_once('/') {
        let a: i64 = a.trim().parse().map_err(|_| bad())?;
        let b: i64 = b.trim().parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(bad());
        }
        q(a, b)
    } else if let Some((i, f)) = s.split_once('.') {
        if f.len() > 12 || !f.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let scale = 10i64.pow(f.len() as u32);
        let i: i64 = if i.is_empty() { 0 } else { i.parse().map_err(|_| bad())? };
        let f: i64 = if f.is_empty() { 0 } else { f.parse().map_err(|_| bad())? };
        if i < 0 {
            return Err(bad());
        }
        q(i.checked_mul(scale).and_then(|v| v.checked_add(f)).ok_or_else(bad)?, scale)
    } else {
        q(s.parse().map_err(|_| bad())?, 1)
    };
    if p < q(1, 1) {
        return Err(Error::InvalidParameter(format!("exponent must be at least 1, got {s}")));
    }
    Ok(p.recip())
}

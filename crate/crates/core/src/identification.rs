//! Sharp identified sets for (sensitivity, specificity) of the index test.
//!
//! For fixed reference characteristics the identified set is a segment on the
//! line `θ0 = slope·θ1 + intercept`, because `P(t=1)` pins down a linear
//! combination of the two rates. Dependence restrictions only shorten the
//! segment from above.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Assumption, Error, Result};
use crate::exec::Execution;
use crate::probability::{derived_joint_ry, derived_prevalence, DerivedRY, JointTR, RefPerf, SRegion};

/// Slack allowed when deciding whether a restricted segment is empty.
const EMPTY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DependenceAssumption {
    #[default]
    NoRestriction,
    /// Among the diseased that the reference misses, the index test is at
    /// least as likely to miss too.
    WronglyAgreeY1,
    /// Same for the healthy that the reference flags.
    WronglyAgreeY0,
    WronglyAgreeBoth,
}

impl DependenceAssumption {
    pub const ALL: [DependenceAssumption; 4] = [
        DependenceAssumption::NoRestriction,
        DependenceAssumption::WronglyAgreeY1,
        DependenceAssumption::WronglyAgreeY0,
        DependenceAssumption::WronglyAgreeBoth,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            DependenceAssumption::NoRestriction => "none",
            DependenceAssumption::WronglyAgreeY1 => "wa1",
            DependenceAssumption::WronglyAgreeY0 => "wa0",
            DependenceAssumption::WronglyAgreeBoth => "both",
        }
    }

    /// Whether the restriction applies to the stratum `y = j`.
    pub fn restricts(self, j: u8) -> bool {
        matches!(
            (self, j),
            (DependenceAssumption::WronglyAgreeY1, 1)
                | (DependenceAssumption::WronglyAgreeY0, 0)
                | (DependenceAssumption::WronglyAgreeBoth, _)
        )
    }
}

impl fmt::Display for DependenceAssumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for DependenceAssumption {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "no_restriction" => Ok(DependenceAssumption::NoRestriction),
            "wa1" | "wrongly_agree_y1" => Ok(DependenceAssumption::WronglyAgreeY1),
            "wa0" | "wrongly_agree_y0" => Ok(DependenceAssumption::WronglyAgreeY0),
            "both" | "wrongly_agree_both" => Ok(DependenceAssumption::WronglyAgreeBoth),
            other => Err(Error::invalid(format!(
                "unknown assumption '{other}' (expected none, wa1, wa0 or both)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Panics in debug builds if `lo > hi`.
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval [{lo}, {hi}] is reversed");
        Self { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset_of(&self, other: &Interval, tol: f64) -> bool {
        self.lo >= other.lo - tol && self.hi <= other.hi + tol
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn clamp_unit(self) -> Interval {
        let lo = self.lo.clamp(0.0, 1.0);
        Interval { lo, hi: self.hi.clamp(lo, 1.0) }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.3}, {:.3}]", self.lo, self.hi)
    }
}

/// The sharp identified set for one value of the reference characteristics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaSegment {
    pub s: RefPerf,
    /// `(θ1, θ0)` at the lower end.
    pub lo: (f64, f64),
    /// `(θ1, θ0)` at the upper end.
    pub hi: (f64, f64),
    pub slope: f64,
    pub intercept: f64,
}

impl ThetaSegment {
    /// A degenerate segment at a single point on the given line.
    pub fn singleton(s: RefPerf, theta1: f64, theta0: f64, slope: f64) -> Self {
        Self {
            s,
            lo: (theta1, theta0),
            hi: (theta1, theta0),
            slope,
            intercept: theta0 - slope * theta1,
        }
    }

    pub fn theta1(&self) -> Interval {
        Interval::new(self.lo.0, self.hi.0)
    }

    pub fn theta0(&self) -> Interval {
        Interval::new(self.lo.1, self.hi.1)
    }

    pub fn theta(&self, j: u8) -> Interval {
        if j == 1 {
            self.theta1()
        } else {
            self.theta0()
        }
    }

    pub fn is_singleton(&self) -> bool {
        self.lo == self.hi
    }

    pub fn theta0_at(&self, theta1: f64) -> f64 {
        self.slope * theta1 + self.intercept
    }

    /// Point at fraction `u ∈ [0,1]` along the segment.
    pub fn point_at(&self, u: f64) -> (f64, f64) {
        (
            self.lo.0 + u * (self.hi.0 - self.lo.0),
            self.lo.1 + u * (self.hi.1 - self.lo.1),
        )
    }

    /// Euclidean distance from `(θ1, θ0)` to the closed segment.
    pub fn distance(&self, theta1: f64, theta0: f64) -> f64 {
        let (dx, dy) = (self.hi.0 - self.lo.0, self.hi.1 - self.lo.1);
        let len2 = dx * dx + dy * dy;
        let u = if len2 == 0.0 {
            0.0
        } else {
            (((theta1 - self.lo.0) * dx + (theta0 - self.lo.1) * dy) / len2).clamp(0.0, 1.0)
        };
        let (x, y) = self.point_at(u);
        ((theta1 - x).powi(2) + (theta0 - y).powi(2)).sqrt()
    }
}

/// Union of sharp segments over a region of reference characteristics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifiedSet {
    pub assumption: DependenceAssumption,
    pub segments: Vec<ThetaSegment>,
    /// Grid points of the region that the data refute.
    #[serde(default)]
    pub dropped: Vec<RefPerf>,
}

impl IdentifiedSet {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["s1", "s0", "theta1_lo", "theta1_hi", "theta0_lo", "theta0_hi"])?;
        for seg in &self.segments {
            out.write_record(
                [seg.s.s1, seg.s.s0, seg.lo.0, seg.hi.0, seg.lo.1, seg.hi.1].map(|x| x.to_string()),
            )?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Distance from a point to the nearest segment.
    pub fn distance(&self, theta1: f64, theta0: f64) -> f64 {
        self.segments
            .iter()
            .map(|s| s.distance(theta1, theta0))
            .fold(f64::INFINITY, f64::min)
    }
}

/// The cells that bound `θj`, relabelled so that one formula serves both
/// strata.
struct Stratum {
    /// `P(t=j, r=j)`
    agree: f64,
    /// `P(t=j, r=1-j)`
    cross: f64,
    /// `P(t=1-j, r=1-j)`
    other_agree: f64,
    /// `P(r=j, y=j)`
    ref_hit: f64,
    /// `P(r=1-j, y=j)`
    ref_miss: f64,
    /// `P(r=j, y=1-j)`
    ref_false: f64,
    p_y: f64,
}

impl Stratum {
    fn new(p: &JointTR, d: &DerivedRY, j: u8) -> Self {
        let k = 1 - j;
        Self {
            agree: p.cell(j, j),
            cross: p.cell(j, k),
            other_agree: p.cell(k, k),
            ref_hit: d.cell(j, j),
            ref_miss: d.cell(k, j),
            ref_false: d.cell(j, k),
            p_y: d.p_y(j),
        }
    }

    /// Lower and upper bounds on the two free cells `P(t=j, r=j, y=j)` and
    /// `P(t=j, r=1-j, y=j)`, in that order.
    fn parts(&self, own: bool, other: bool) -> [(f64, f64); 2] {
        let miss = if own { self.ref_miss / 2.0 } else { self.ref_miss };
        let agree = if other { self.agree - self.ref_false / 2.0 } else { self.agree };
        [
            ((self.agree - self.ref_false).max(0.0), agree.min(self.ref_hit)),
            ((self.ref_miss - self.other_agree).max(0.0), self.cross.min(miss)),
        ]
    }

    /// `None` when a restriction leaves one of the free cells without a
    /// feasible value.
    fn bounds(&self, own: bool, other: bool) -> Option<(f64, f64)> {
        let parts = self.parts(own, other);
        if parts.iter().any(|(lo, hi)| lo > &(hi + EMPTY_TOL)) {
            return None;
        }
        let lo = parts.iter().map(|p| p.0).sum::<f64>() / self.p_y;
        let hi = parts.iter().map(|p| p.0.max(p.1)).sum::<f64>() / self.p_y;
        Some((lo, hi))
    }
}

fn stratum_bounds(p: &JointTR, d: &DerivedRY, a: DependenceAssumption, j: u8) -> Option<(f64, f64)> {
    let both = a == DependenceAssumption::WronglyAgreeBoth;
    Stratum::new(p, d, j).bounds(a.restricts(j), both)
}

fn restriction_refuted(a: DependenceAssumption, s: &RefPerf) -> Error {
    Error::Refuted {
        assumptions: vec![Assumption::DependenceRestriction],
        detail: format!("no joint distribution satisfies the '{a}' restriction at s = ({}, {})", s.s1, s.s0),
    }
}

/// Sharp identified segment for one `s`.
pub fn sharp_segment(p: &JointTR, s: &RefPerf, a: DependenceAssumption) -> Result<ThetaSegment> {
    let d = derived_joint_ry(p, s)?;
    let p1 = d.prevalence;
    let p0 = 1.0 - p1;
    let slope = p1 / p0;
    let intercept = 1.0 - p.p_t1() / p0;

    let refuted = || restriction_refuted(a, s);
    let (l1, u1) = stratum_bounds(p, &d, a, 1).ok_or_else(refuted)?;
    let (l0, u0) = stratum_bounds(p, &d, a, 0).ok_or_else(refuted)?;

    // Intersect the θ1 range with the preimage of the θ0 range on the line.
    let lo1 = l1.max((l0 - intercept) / slope).max(0.0);
    let hi1 = u1.min((u0 - intercept) / slope).min(1.0);
    if lo1 > hi1 + EMPTY_TOL {
        return Err(refuted());
    }
    let hi1 = hi1.max(lo1);
    let at = |t1: f64| (slope * t1 + intercept).clamp(0.0, 1.0);
    Ok(ThetaSegment { s: *s, lo: (lo1, at(lo1)), hi: (hi1, at(hi1)), slope, intercept })
}

pub fn sharp_union(p: &JointTR, region: &SRegion, a: DependenceAssumption) -> Result<IdentifiedSet> {
    sharp_union_with(p, region, a, Execution::default())
}

pub fn sharp_union_with(
    p: &JointTR,
    region: &SRegion,
    a: DependenceAssumption,
    exec: Execution,
) -> Result<IdentifiedSet> {
    let grid = region.grid_points();
    let results = exec.map(&grid, |s| sharp_segment(p, s, a));

    let mut segments = Vec::with_capacity(grid.len());
    let mut dropped = Vec::new();
    let mut refuted: Vec<Assumption> = Vec::new();
    for (s, r) in grid.iter().zip(results) {
        match r {
            Ok(seg) => segments.push(seg),
            Err(Error::Refuted { assumptions, detail }) => {
                log::warn!("dropping s = ({}, {}): {detail}", s.s1, s.s0);
                for x in assumptions {
                    if !refuted.contains(&x) {
                        refuted.push(x);
                    }
                }
                dropped.push(*s);
            }
            Err(e) => return Err(e),
        }
    }
    if segments.is_empty() {
        return Err(Error::Refuted {
            assumptions: refuted,
            detail: "every point of the reference region is refuted by the data".into(),
        });
    }
    Ok(IdentifiedSet { assumption: a, segments, dropped })
}

/// Projection of the identified set onto `θj`.
pub fn project(set: &IdentifiedSet, j: u8) -> Interval {
    let mut it = set.segments.iter().map(|s| s.theta(j));
    let first = it.next().expect("identified set is never empty");
    it.fold(first, |acc, x| acc.hull(&x))
}

/// Bounds on `θj` from the marginals of `t` and `y` alone. Never narrower than
/// the sharp bounds.
pub fn frechet_comparator(p: &JointTR, s: &RefPerf, j: u8) -> Result<Interval> {
    let prev = derived_prevalence(p, s)?;
    let (py, py_other) = if j == 1 { (prev, 1.0 - prev) } else { (1.0 - prev, prev) };
    let pt = if j == 1 { p.p_t1() } else { 1.0 - p.p_t1() };
    let lo = (pt - py_other).max(0.0) / py;
    let hi = pt.min(py) / py;
    Ok(Interval { lo, hi }.clamp_unit())
}

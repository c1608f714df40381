//! Bounds on prevalence in a screened population and on predictive values,
//! both derived from an identified set for (θ1, θ0).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identification::{IdentifiedSet, Interval, ThetaSegment};
use crate::probability::RefPerf;

/// Tolerance on `θ1 + θ0 - 1` when deciding that the prevalence map blows up.
const DENOM_TOL: f64 = 1e-12;

/// Default number of points on the screened-positivity grid.
pub const DEFAULT_Q_GRID: usize = 201;

/// Fraction testing positive in the screened population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreeningInput {
    pub q: f64,
}

impl ScreeningInput {
    pub fn new(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::invalid(format!("screening positivity must lie in [0,1], got {q}")));
        }
        Ok(Self { q })
    }
}

/// Range of pre-test probabilities of disease.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PretestRange {
    pub pi_lo: f64,
    pub pi_hi: f64,
}

impl PretestRange {
    pub fn new(pi_lo: f64, pi_hi: f64) -> Result<Self> {
        if !(0.0 <= pi_lo && pi_lo <= pi_hi && pi_hi <= 1.0) {
            return Err(Error::invalid(format!("need 0 <= pi_lo <= pi_hi <= 1, got [{pi_lo}, {pi_hi}]")));
        }
        Ok(Self { pi_lo, pi_hi })
    }

    pub fn point(pi: f64) -> Result<Self> {
        Self::new(pi, pi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceBounds {
    pub interval: Interval,
    /// The set contains a point with `θ1 = 1 - θ0`, where the test carries no
    /// information and prevalence is unrestricted.
    pub vacuous: bool,
}

impl PrevalenceBounds {
    fn vacuous() -> Self {
        Self { interval: Interval::unit(), vacuous: true }
    }

    fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let (lo, hi) = values
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        Self { interval: Interval { lo, hi }.clamp_unit(), vacuous: false }
    }

    pub fn width(&self) -> f64 {
        self.interval.width()
    }
}

/// Hull of per-segment bounds, with the components kept since the union can
/// be disconnected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceUnion {
    pub hull: PrevalenceBounds,
    pub components: Vec<(RefPerf, PrevalenceBounds)>,
}

fn prevalence_at(q: f64, (t1, t0): (f64, f64)) -> f64 {
    (q + t0 - 1.0) / (t1 + t0 - 1.0)
}

/// True if `θ1 + θ0 - 1` vanishes at, or changes sign between, the points.
fn crosses_uninformative(points: &[(f64, f64)]) -> bool {
    let d: Vec<f64> = points.iter().map(|(a, b)| a + b - 1.0).collect();
    d.iter().any(|x| x.abs() <= DENOM_TOL)
        || (d.iter().any(|&x| x > 0.0) && d.iter().any(|&x| x < 0.0))
}

/// Sharp prevalence bounds: the map is monotone along the segment, so its
/// range is spanned by the endpoints.
pub fn prevalence_bounds_segment(seg: &ThetaSegment, q: ScreeningInput) -> PrevalenceBounds {
    let ends = [seg.lo, seg.hi];
    if crosses_uninformative(&ends) {
        return PrevalenceBounds::vacuous();
    }
    PrevalenceBounds::from_values(ends.map(|e| prevalence_at(q.q, e)))
}

/// Bounds that use only the projections of the segment, i.e. the range over
/// the rectangle `[θ1L, θ1U] × [θ0L, θ0U]`.
pub fn prevalence_bounds_rect(seg: &ThetaSegment, q: ScreeningInput) -> PrevalenceBounds {
    let corners = [
        seg.lo,
        seg.hi,
        (seg.hi.0, seg.lo.1),
        (seg.lo.0, seg.hi.1),
    ];
    if crosses_uninformative(&corners) {
        return PrevalenceBounds::vacuous();
    }
    PrevalenceBounds::from_values(corners.map(|c| prevalence_at(q.q, c)))
}

fn union_of(set: &IdentifiedSet, q: ScreeningInput, f: fn(&ThetaSegment, ScreeningInput) -> PrevalenceBounds) -> PrevalenceUnion {
    let components: Vec<_> = set.segments.iter().map(|seg| (seg.s, f(seg, q))).collect();
    let hull = components
        .iter()
        .map(|(_, b)| *b)
        .reduce(|a, b| PrevalenceBounds {
            interval: a.interval.hull(&b.interval),
            vacuous: a.vacuous || b.vacuous,
        })
        .expect("identified set is never empty");
    PrevalenceUnion { hull, components }
}

pub fn prevalence_bounds_union(set: &IdentifiedSet, q: ScreeningInput) -> PrevalenceUnion {
    union_of(set, q, prevalence_bounds_segment)
}

/// Rectangular bounds over every segment of the set.
pub fn prevalence_bounds_rect_union(set: &IdentifiedSet, q: ScreeningInput) -> PrevalenceUnion {
    union_of(set, q, prevalence_bounds_rect)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictiveBounds {
    pub ppv: Interval,
    pub npv: Interval,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

fn ppv(t1: f64, t0: f64, pi: f64) -> Option<f64> {
    ratio(t1 * pi, t1 * pi + (1.0 - t0) * (1.0 - pi))
}

fn npv(t1: f64, t0: f64, pi: f64) -> Option<f64> {
    ratio(t0 * (1.0 - pi), t0 * (1.0 - pi) + (1.0 - t1) * pi)
}

/// PPV rises with both rates and with `π`; NPV rises with both rates and
/// falls with `π`. Extremes therefore sit at segment endpoints and at the
/// ends of the pre-test range.
pub fn predictive_value_bounds(set: &IdentifiedSet, pi: PretestRange) -> PredictiveBounds {
    let mut ppv_b = Some(Interval { lo: f64::INFINITY, hi: f64::NEG_INFINITY });
    let mut npv_b = ppv_b;
    for seg in &set.segments {
        for &(t1, t0) in &[seg.lo, seg.hi] {
            for &p in &[pi.pi_lo, pi.pi_hi] {
                ppv_b = ppv_b.zip(ppv(t1, t0, p)).map(|(b, v)| Interval { lo: b.lo.min(v), hi: b.hi.max(v) });
                npv_b = npv_b.zip(npv(t1, t0, p)).map(|(b, v)| Interval { lo: b.lo.min(v), hi: b.hi.max(v) });
            }
        }
    }
    PredictiveBounds {
        ppv: ppv_b.map_or(Interval::unit(), Interval::clamp_unit),
        npv: npv_b.map_or(Interval::unit(), Interval::clamp_unit),
    }
}

/// Evenly spaced grid on `[0, 1]`.
pub fn unit_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub q: f64,
    pub sharp: PrevalenceBounds,
    pub rect: PrevalenceBounds,
}

/// Sharp and rectangular prevalence bounds across a grid of screened
/// positivity rates.
pub fn prevalence_curve(set: &IdentifiedSet, q_grid: &[f64]) -> Result<Vec<CurvePoint>> {
    q_grid
        .iter()
        .map(|&q| {
            let q = ScreeningInput::new(q)?;
            Ok(CurvePoint {
                q: q.q,
                sharp: prevalence_bounds_union(set, q).hull,
                rect: prevalence_bounds_rect_union(set, q).hull,
            })
        })
        .collect()
}

pub fn write_curve_csv<W: Write>(curve: &[CurvePoint], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["q", "sharp_lo", "sharp_hi", "sharp_width", "rect_lo", "rect_hi", "rect_width", "vacuous"])?;
    for c in curve {
        out.write_record([
            c.q.to_string(),
            c.sharp.interval.lo.to_string(),
            c.sharp.interval.hi.to_string(),
            c.sharp.width().to_string(),
            c.rect.interval.lo.to_string(),
            c.rect.interval.hi.to_string(),
            c.rect.width().to_string(),
            (c.sharp.vacuous || c.rect.vacuous).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

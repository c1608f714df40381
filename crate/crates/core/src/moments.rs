//! Moment-inequality representation of the identified sets.
//!
//! Every moment function depends on an observation only through its
//! `(t, r)` cell, so a system is stored as a 4×8 table and all sample and
//! population moments are exact weighted sums over four cells.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identification::{DependenceAssumption, Interval};
use crate::probability::{CellCounts, JointTR, RefPerf, CELLS};

/// Components after splitting the equality into two inequalities.
pub const K: usize = 8;

/// Labels of the components in storage order.
pub const COMPONENT_LABELS: [&str; K] = ["1", "2", "3", "4", "5", "6", "7a", "7b"];

/// A full parameter value `(θ1, θ0, s1, s0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaPoint {
    pub theta1: f64,
    pub theta0: f64,
    pub s: RefPerf,
}

impl ThetaPoint {
    pub fn new(theta1: f64, theta0: f64, s: RefPerf) -> Self {
        Self { theta1, theta0, s }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentSystem {
    pub assumption: DependenceAssumption,
    pub theta: ThetaPoint,
    /// `cell_values[c][j]` is component `j` evaluated at cell `c`.
    pub cell_values: [[f64; K]; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentStats {
    pub mean: [f64; K],
    pub sd: [f64; K],
}

/// Admissible `(θ1, θ0)` region under an assumption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub theta1: Interval,
    pub theta0: Interval,
}

impl ParamBox {
    pub fn contains(&self, theta1: f64, theta0: f64) -> bool {
        self.theta1.contains(theta1) && self.theta0.contains(theta0)
    }
}

pub fn param_space_box(a: DependenceAssumption, s: &RefPerf) -> ParamBox {
    let cap = |restricted: bool, sj: f64| if restricted { (1.0 + sj) / 2.0 } else { 1.0 };
    ParamBox {
        theta1: Interval::new(0.0, cap(a.restricts(1), s.s1)),
        theta0: Interval::new(0.0, cap(a.restricts(0), s.s0)),
    }
}

fn components(t: f64, r: f64, th: &ThetaPoint, a: DependenceAssumption) -> [f64; K] {
    let (t1, t0, s1, s0) = (th.theta1, th.theta0, th.s.s1, th.s.s0);
    let f = (r - 1.0 + s0) / (s1 - 1.0 + s0);
    let g = 1.0 - f;
    let m7 = (t0 - 1.0) * g - t1 * f + t;

    let m = match a {
        DependenceAssumption::WronglyAgreeY0 => [
            (s0 - t0) * g + (r - 1.0) * t,
            (1.0 - s0 - t0) * g - t * r,
            (1.0 - t0) * g - t,
            t0 * g + (t - 1.0),
            (t0 - s0) * g - r * (1.0 - t),
            (t0 + (s0 - 1.0) / 2.0) * g - (1.0 - t) * (1.0 - r),
        ],
        _ => {
            let mut m = [
                (s1 - t1) * f + (t - 1.0) * r,
                (1.0 - s1 - t1) * f + (r - 1.0) * (1.0 - t),
                (1.0 - t1) * f + (t - 1.0),
                t1 * f - t,
                (t1 - s1) * f - t * (1.0 - r),
                (t1 - 1.0 + s1) * f - t * r,
            ];
            if a != DependenceAssumption::NoRestriction {
                m[5] = (t1 + (s1 - 1.0) / 2.0) * f - t * r;
            }
            if a == DependenceAssumption::WronglyAgreeBoth {
                let adj = 0.5 * (r - s1 * f);
                m[3] += adj;
                m[5] += adj;
            }
            m
        }
    };
    [m[0], m[1], m[2], m[3], m[4], m[5], m7, -m7]
}

/// Requires `s1 > 1 - s0`, which [`RefPerf::new`] already enforces.
pub fn build_moment_system(theta: ThetaPoint, a: DependenceAssumption) -> MomentSystem {
    debug_assert!(theta.s.is_informative());
    let cell_values = CELLS.map(|(t, r)| components(t as f64, r as f64, &theta, a));
    MomentSystem { assumption: a, theta, cell_values }
}

impl MomentSystem {
    /// Weighted mean and centered standard deviation for cell weights `w`
    /// summing to one.
    #[inline]
    pub fn stats_from_weights(&self, w: &[f64; 4]) -> MomentStats {
        let mut mean = [0.0; K];
        for (c, row) in self.cell_values.iter().enumerate() {
            for j in 0..K {
                mean[j] += w[c] * row[j];
            }
        }
        let mut var = [0.0; K];
        for (c, row) in self.cell_values.iter().enumerate() {
            for j in 0..K {
                let d = row[j] - mean[j];
                var[j] += w[c] * d * d;
            }
        }
        MomentStats { mean, sd: var.map(|v| v.max(0.0).sqrt()) }
    }

    /// Population means and standard deviations under `p`.
    pub fn population(&self, p: &JointTR) -> MomentStats {
        self.stats_from_weights(&p.as_array())
    }

    /// The population inequalities hold (equality within `tol`).
    pub fn satisfied_by(&self, p: &JointTR, tol: f64) -> bool {
        self.population(p).mean.iter().all(|&m| m <= tol)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["cell", "j", "value"])?;
        for (c, (t, r)) in CELLS.iter().enumerate() {
            for (j, label) in COMPONENT_LABELS.iter().enumerate() {
                out.write_record([format!("{t}{r}"), label.to_string(), self.cell_values[c][j].to_string()])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

pub fn moment_stats(counts: &CellCounts, sys: &MomentSystem) -> Result<MomentStats> {
    let n = counts.total();
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 observations, got {n}")));
    }
    let w = counts.as_array().map(|x| x as f64 / n as f64);
    Ok(sys.stats_from_weights(&w))
}

/// Lower bound on the population variance of component `j` (storage index)
/// over all distributions whose cells are at least `eps`.
pub fn variance_floor(eps: f64, j: usize) -> Result<f64> {
    if !(eps > 0.0 && eps <= 0.25) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 0.25], got {eps}")));
    }
    match j {
        2 | 3 | 6 | 7 => Ok(2.0 * eps * (1.0 - 2.0 * eps) * (1.0 - (1.0 - 4.0 * eps).powi(2))),
        0 | 1 | 4 | 5 => Ok(eps * (1.0 - eps) * (1.0 - max_squared_correlation(eps))),
        _ => Err(Error::invalid(format!("component index {j} out of range"))),
    }
}

/// Largest squared correlation between two distinct cell indicators when each
/// cell carries at least `eps` of the mass.
fn max_squared_correlation(eps: f64) -> f64 {
    if eps < 0.2 {
        ((1.0 - eps) / (1.0 + eps)).powi(2)
    } else {
        (2.0 - 6.0 * eps) / (3.0 - 6.0 * eps)
    }
}

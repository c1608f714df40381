//! Observable and derived probability objects for a 2×2 study of an index
//! test `t` against a reference test `r`.
//!
//! Cells are always ordered `(t,r) = (1,1), (0,1), (1,0), (0,0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Assumption, Error, Result};

/// Tolerance for algebraic identities on probabilities.
pub const PROB_TOL: f64 = 1e-12;

/// Derived prevalence closer than this to 0 or 1 is treated as degenerate.
pub const PREVALENCE_GUARD: f64 = 1e-9;

/// `(t, r)` for each cell index.
pub const CELLS: [(u8, u8); 4] = [(1, 1), (0, 1), (1, 0), (0, 0)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellCounts {
    pub n11: u64,
    pub n01: u64,
    pub n10: u64,
    pub n00: u64,
}

impl CellCounts {
    pub fn new(n11: u64, n01: u64, n10: u64, n00: u64) -> Self {
        Self { n11, n01, n10, n00 }
    }

    pub fn from_array(a: [u64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn as_array(&self) -> [u64; 4] {
        [self.n11, self.n01, self.n10, self.n00]
    }

    pub fn total(&self) -> u64 {
        self.as_array().iter().sum()
    }

    pub fn min_cell(&self) -> u64 {
        *self.as_array().iter().min().unwrap()
    }

    /// Every cell observed at least once.
    pub fn all_cells_positive(&self) -> bool {
        self.min_cell() >= 1
    }

    /// Count for the outcome `(t, r)`.
    pub fn cell(&self, t: u8, r: u8) -> u64 {
        match (t, r) {
            (1, 1) => self.n11,
            (0, 1) => self.n01,
            (1, 0) => self.n10,
            _ => self.n00,
        }
    }
}

/// The identified joint distribution `P(t, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointTR {
    pub p11: f64,
    pub p01: f64,
    pub p10: f64,
    pub p00: f64,
}

impl JointTR {
    pub fn new(p11: f64, p01: f64, p10: f64, p00: f64) -> Result<Self> {
        let p = Self { p11, p01, p10, p00 };
        p.check()?;
        Ok(p)
    }

    pub fn from_array(a: [f64; 4]) -> Result<Self> {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn check(&self) -> Result<()> {
        let a = self.as_array();
        if a.iter().any(|x| !x.is_finite() || *x < 0.0 || *x > 1.0) {
            return Err(Error::invalid(format!("cell probabilities must lie in [0,1]: {a:?}")));
        }
        let sum: f64 = a.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::invalid(format!("cell probabilities sum to {sum}, not 1")));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.p11, self.p01, self.p10, self.p00]
    }

    pub fn cell(&self, t: u8, r: u8) -> f64 {
        match (t, r) {
            (1, 1) => self.p11,
            (0, 1) => self.p01,
            (1, 0) => self.p10,
            _ => self.p00,
        }
    }

    /// `P(t = 1)`.
    pub fn p_t1(&self) -> f64 {
        self.p11 + self.p10
    }

    /// `P(r = 1)`.
    pub fn p_r1(&self) -> f64 {
        self.p11 + self.p01
    }

    pub fn min_cell(&self) -> f64 {
        self.as_array().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Membership in the family of distributions whose cells are bounded
    /// below by `eps`.
    pub fn in_family(&self, eps: f64) -> bool {
        self.min_cell() >= eps
    }
}

/// Reference test sensitivity `s1` and specificity `s0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefPerf {
    pub s1: f64,
    pub s0: f64,
}

impl RefPerf {
    pub fn new(s1: f64, s0: f64) -> Result<Self> {
        let s = Self { s1, s0 };
        if !s.in_unit_square() {
            return Err(Error::invalid(format!("reference characteristics must lie in [0,1]: ({s1}, {s0})")));
        }
        if !s.is_informative() {
            return Err(Error::Refuted {
                assumptions: vec![Assumption::ReferencePerformance],
                detail: format!("s1 + s0 = {} is not above 1", s1 + s0),
            });
        }
        Ok(s)
    }

    /// A perfect reference test.
    pub fn perfect() -> Self {
        Self { s1: 1.0, s0: 1.0 }
    }

    fn in_unit_square(&self) -> bool {
        (0.0..=1.0).contains(&self.s1) && (0.0..=1.0).contains(&self.s0)
    }

    /// `s1 > 1 - s0`.
    pub fn is_informative(&self) -> bool {
        self.s1 > 1.0 - self.s0
    }

    /// `s1 + s0 - 1`, the denominator of the prevalence identity.
    pub fn youden(&self) -> f64 {
        self.s1 + self.s0 - 1.0
    }
}

/// The compact set the reference characteristics are known to lie in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SRegion {
    Points { points: Vec<RefPerf> },
    Rect { s1: (f64, f64), s0: (f64, f64), n1: usize, n0: usize },
}

/// Default number of grid points per non-degenerate axis of a rectangle.
pub const DEFAULT_S_GRID: usize = 10;

impl SRegion {
    pub fn singleton(s: RefPerf) -> Self {
        SRegion::Points { points: vec![s] }
    }

    /// Rectangle with `resolution` points along each non-degenerate axis.
    pub fn rect(s1: (f64, f64), s0: (f64, f64), resolution: usize) -> Result<Self> {
        let r = SRegion::Rect { s1, s0, n1: resolution, n0: resolution };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if let SRegion::Rect { s1, s0, n1, n0 } = self {
            for (lo, hi) in [s1, s0] {
                if !(0.0..=1.0).contains(lo) || !(0.0..=1.0).contains(hi) || lo > hi {
                    return Err(Error::invalid(format!("bad reference range [{lo}, {hi}]")));
                }
            }
            if *n1 == 0 || *n0 == 0 {
                return Err(Error::invalid("reference grid resolution must be positive"));
            }
        }
        let pts = self.grid_points();
        if pts.is_empty() {
            return Err(Error::invalid("reference region is empty"));
        }
        if let Some(bad) = pts.iter().find(|s| !s.is_informative() || !s.in_unit_square()) {
            return Err(Error::Refuted {
                assumptions: vec![Assumption::ReferencePerformance],
                detail: format!("region contains ({}, {}) with s1 <= 1 - s0", bad.s1, bad.s0),
            });
        }
        Ok(())
    }

    /// Grid points sorted by `(s1, s0)`. Degenerate axes contribute one point.
    pub fn grid_points(&self) -> Vec<RefPerf> {
        let mut pts = match self {
            SRegion::Points { points } => points.clone(),
            SRegion::Rect { s1, s0, n1, n0 } => {
                let a = linspace_axis(*s1, *n1);
                let b = linspace_axis(*s0, *n0);
                a.iter()
                    .flat_map(|&x| b.iter().map(move |&y| RefPerf { s1: x, s0: y }))
                    .collect()
            }
        };
        pts.sort_by(|a, b| a.s1.total_cmp(&b.s1).then(a.s0.total_cmp(&b.s0)));
        pts.dedup();
        pts
    }

    /// Smallest and largest `s0` among the grid points.
    pub fn s0_range(&self) -> (f64, f64) {
        self.grid_points()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.s0), hi.max(s.s0)))
    }

    /// Number of distinct grid points.
    pub fn len(&self) -> usize {
        self.grid_points().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn linspace_axis((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    if hi - lo <= 0.0 || n <= 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect()
}

/// `P(y=1)` and the implied table `P(r, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedRY {
    pub prevalence: f64,
    pub r1y1: f64,
    pub r0y1: f64,
    pub r1y0: f64,
    pub r0y0: f64,
}

impl DerivedRY {
    /// `P(r = k, y = l)`.
    pub fn cell(&self, r: u8, y: u8) -> f64 {
        match (r, y) {
            (1, 1) => self.r1y1,
            (0, 1) => self.r0y1,
            (1, 0) => self.r1y0,
            _ => self.r0y0,
        }
    }

    /// `P(y = l)`.
    pub fn p_y(&self, y: u8) -> f64 {
        if y == 1 {
            self.prevalence
        } else {
            1.0 - self.prevalence
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub p_t1: f64,
    /// Open interval `(1 - s0, s1)` that `P(t=1)` must fall in.
    pub lower: f64,
    pub upper: f64,
    pub reference_informative: bool,
    pub within_interval: bool,
    /// `P(t=1)` sits exactly on an end of the interval.
    pub at_boundary: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.reference_informative && self.within_interval
    }

    pub fn refuted(&self) -> Vec<Assumption> {
        let mut v = Vec::new();
        if !self.reference_informative {
            v.push(Assumption::ReferencePerformance);
        }
        if !self.within_interval {
            v.push(Assumption::BoundedPrevalence);
        }
        v
    }

    pub fn into_result(self) -> Result<Self> {
        if self.passed() {
            Ok(self)
        } else {
            Err(Error::Refuted {
                assumptions: self.refuted(),
                detail: format!(
                    "P(t=1) = {:.6} must lie in ({:.6}, {:.6})",
                    self.p_t1, self.lower, self.upper
                ),
            })
        }
    }
}

pub fn estimate_joint(counts: &CellCounts) -> Result<JointTR> {
    let n = counts.total();
    if n == 0 {
        return Err(Error::invalid("total count is zero"));
    }
    let n = n as f64;
    let [p11, p01, p10, p00] = counts.as_array().map(|x| x as f64 / n);
    JointTR::new(p11, p01, p10, p00)
}

/// Checks `P(t=1) ∈ (1 - s0, s1)` and `s1 > 1 - s0`. Refutation is reported,
/// not raised.
pub fn validate_assumptions(p: &JointTR, s: &RefPerf) -> ValidationReport {
    let p_t1 = p.p_t1();
    let lower = 1.0 - s.s0;
    let upper = s.s1;
    ValidationReport {
        p_t1,
        lower,
        upper,
        reference_informative: s.is_informative(),
        within_interval: p_t1 > lower && p_t1 < upper,
        at_boundary: p_t1 == lower || p_t1 == upper,
    }
}

pub fn derived_prevalence(p: &JointTR, s: &RefPerf) -> Result<f64> {
    validate_assumptions(p, s).into_result()?;
    let prev = (p.p_r1() + s.s0 - 1.0) / s.youden();
    if !(PREVALENCE_GUARD..=1.0 - PREVALENCE_GUARD).contains(&prev) {
        return Err(Error::Refuted {
            assumptions: vec![Assumption::BoundedPrevalence],
            detail: format!("derived prevalence {prev} is degenerate"),
        });
    }
    Ok(prev)
}

pub fn derived_joint_ry(p: &JointTR, s: &RefPerf) -> Result<DerivedRY> {
    let prevalence = derived_prevalence(p, s)?;
    let q = 1.0 - prevalence;
    Ok(DerivedRY {
        prevalence,
        r1y1: s.s1 * prevalence,
        r0y1: (1.0 - s.s1) * prevalence,
        r1y0: (1.0 - s.s0) * q,
        r0y0: s.s0 * q,
    })
}

/// Agreement rates with the reference, `(P(t=1|r=1), P(t=0|r=0))`.
pub fn apparent_measures(p: &JointTR) -> Result<(f64, f64)> {
    let r1 = p.p_r1();
    let r0 = p.p10 + p.p00;
    if r1 <= 0.0 || r0 <= 0.0 {
        return Err(Error::invalid("reference margin is degenerate: P(r=1) must lie in (0,1)"));
    }
    Ok((p.p11 / r1, p.p00 / r0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn eua() -> JointTR {
        estimate_joint(&CellCounts::new(99, 18, 5, 338)).unwrap()
    }

    #[test]
    fn estimate_joint_examples() {
        let p = eua();
        assert_abs_diff_eq!(p.p11, 0.215217, epsilon = 5e-7);
        assert_abs_diff_eq!(p.p01, 0.039130, epsilon = 5e-7);
        assert_abs_diff_eq!(p.p10, 0.010870, epsilon = 5e-7);
        assert_abs_diff_eq!(p.p00, 0.734783, epsilon = 5e-7);

        let p = estimate_joint(&CellCounts::new(1, 0, 0, 0)).unwrap();
        assert_eq!(p.as_array(), [1.0, 0.0, 0.0, 0.0]);

        let p = estimate_joint(&CellCounts::new(33, 15, 5, 824)).unwrap();
        assert_abs_diff_eq!(p.p11, 0.037628, epsilon = 5e-7);
    }

    #[test]
    fn zero_total_is_an_error() {
        assert!(estimate_joint(&CellCounts::new(0, 0, 0, 0)).is_err());
    }

    #[test]
    fn validation_examples() {
        let p = eua();
        let r = validate_assumptions(&p, &RefPerf::new(0.9, 1.0).unwrap());
        assert_abs_diff_eq!(r.p_t1, 0.226087, epsilon = 5e-7);
        assert!(r.passed());

        let r = validate_assumptions(&p, &RefPerf { s1: 0.2, s0: 0.7 });
        assert!(!r.passed());
        assert!(r.refuted().contains(&Assumption::BoundedPrevalence));

        let half = JointTR::new(0.25, 0.25, 0.25, 0.25).unwrap();
        assert!(validate_assumptions(&half, &RefPerf::perfect()).passed());
    }

    #[test]
    fn boundary_is_refuted() {
        // P(t=1) = 0.25 = 1 - s0
        let p = JointTR::new(0.125, 0.25, 0.125, 0.5).unwrap();
        let r = validate_assumptions(&p, &RefPerf { s1: 0.9, s0: 0.75 });
        assert!(r.at_boundary);
        assert!(!r.passed());
    }

    #[test]
    fn uninformative_reference_is_refuted() {
        let p = eua();
        let r = validate_assumptions(&p, &RefPerf { s1: 0.4, s0: 0.5 });
        assert!(r.refuted().contains(&Assumption::ReferencePerformance));
        assert!(RefPerf::new(0.4, 0.5).unwrap_err().is_refutation());
        assert!(derived_prevalence(&p, &RefPerf { s1: 0.4, s0: 0.5 }).is_err());
    }

    #[test]
    fn prevalence_examples() {
        let ex1 = JointTR::new(0.45, 0.05, 0.05, 0.45).unwrap();
        let s = RefPerf::new(0.9, 0.9).unwrap();
        assert_abs_diff_eq!(derived_prevalence(&ex1, &s).unwrap(), 0.5, epsilon = 1e-12);

        let q = JointTR::new(0.2, 0.1, 0.1, 0.6).unwrap();
        assert_abs_diff_eq!(derived_prevalence(&q, &RefPerf::perfect()).unwrap(), 0.3, epsilon = 1e-12);

        let prev = derived_prevalence(&eua(), &RefPerf::new(0.9, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(prev, 0.282609, epsilon = 5e-7);
    }

    #[test]
    fn derived_table_examples() {
        let ex1 = JointTR::new(0.45, 0.05, 0.05, 0.45).unwrap();
        let d = derived_joint_ry(&ex1, &RefPerf::new(0.9, 0.9).unwrap()).unwrap();
        assert_abs_diff_eq!(d.r1y1, 0.45, epsilon = 1e-12);
        assert_abs_diff_eq!(d.r0y1, 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(d.r1y0, 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(d.r0y0, 0.45, epsilon = 1e-12);

        let d = derived_joint_ry(&ex1, &RefPerf::perfect()).unwrap();
        assert_eq!(d.r0y1, 0.0);
        assert_eq!(d.r1y0, 0.0);

        let d = derived_joint_ry(&eua(), &RefPerf::new(0.9, 1.0).unwrap()).unwrap();
        assert_eq!(d.r1y0, 0.0);
    }

    #[test]
    fn apparent_examples() {
        let (a1, a0) = apparent_measures(&eua()).unwrap();
        assert_abs_diff_eq!(a1, 0.846, epsilon = 5e-4);
        assert_abs_diff_eq!(a0, 0.985, epsilon = 5e-4);

        let shah = estimate_joint(&CellCounts::new(199, 44, 2, 684)).unwrap();
        let (a1, a0) = apparent_measures(&shah).unwrap();
        assert_abs_diff_eq!(a1, 0.819, epsilon = 5e-4);
        assert_abs_diff_eq!(a0, 0.997, epsilon = 5e-4);

        let sym = JointTR::new(0.2, 0.2, 0.3, 0.3).unwrap();
        assert_eq!(apparent_measures(&sym).unwrap().0, 0.5);

        let degenerate = JointTR::new(0.5, 0.5, 0.0, 0.0).unwrap();
        assert!(apparent_measures(&degenerate).is_err());
    }

    #[test]
    fn rect_grid_includes_endpoints_and_collapses_degenerate_axis() {
        let r = SRegion::rect((0.8, 0.9), (1.0, 1.0), 10).unwrap();
        let pts = r.grid_points();
        assert_eq!(pts.len(), 10);
        assert_eq!(pts[0].s1, 0.8);
        assert_eq!(pts[9].s1, 0.9);
        assert!(pts.iter().all(|s| s.s0 == 1.0));
    }

    #[test]
    fn region_with_uninformative_point_is_rejected() {
        assert!(SRegion::rect((0.1, 0.9), (0.5, 0.5), 5).is_err());
    }
}

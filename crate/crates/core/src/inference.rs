//! Two-step bootstrap test of moment inequalities, confidence sets by grid
//! inversion, exact binomial intervals for the apparent measures, and a
//! Monte Carlo coverage check.
//!
//! Because every moment depends on the data only through cell frequencies, a
//! bootstrap replicate is one multinomial draw over four cells. The draws are
//! generated once per dataset and shared across the whole grid.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::identification::{DependenceAssumption, Interval};
use crate::moments::{build_moment_system, moment_stats, param_space_box, MomentStats, MomentSystem, ThetaPoint, K};
use crate::probability::{CellCounts, JointTR, RefPerf, SRegion, DEFAULT_S_GRID};

/// Standard deviations below this are treated as zero.
const SD_TOL: f64 = 1e-12;

/// Name of the bootstrap quantile rule, echoed in outputs.
pub const QUANTILE_RULE: &str = "higher";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BetaPreset {
    /// β = α/10
    #[default]
    #[serde(rename = "10")]
    Tenth,
    /// β = α/5
    #[serde(rename = "5")]
    Fifth,
    /// β = α/20
    #[serde(rename = "20")]
    Twentieth,
}

impl BetaPreset {
    pub fn divisor(self) -> f64 {
        match self {
            BetaPreset::Tenth => 10.0,
            BetaPreset::Fifth => 5.0,
            BetaPreset::Twentieth => 20.0,
        }
    }
}

impl fmt::Display for BetaPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "alpha/{}", self.divisor())
    }
}

impl FromStr for BetaPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "10" => Ok(BetaPreset::Tenth),
            "5" => Ok(BetaPreset::Fifth),
            "20" => Ok(BetaPreset::Twentieth),
            _ => Err(Error::invalid(format!("beta preset must be 10, 5 or 20, got '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub alpha: f64,
    pub beta_preset: BetaPreset,
    /// Bootstrap replicates.
    pub bootstrap: usize,
    pub seed: u64,
    /// Points per axis of the (θ1, θ0) grid.
    pub theta_grid: usize,
    /// Points per non-degenerate axis of a rectangular reference region.
    pub s_grid: usize,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            beta_preset: BetaPreset::Tenth,
            bootstrap: 500,
            seed: 20_240_601,
            theta_grid: 316,
            s_grid: DEFAULT_S_GRID,
        }
    }
}

impl TestConfig {
    pub fn beta(&self) -> f64 {
        self.alpha / self.beta_preset.divisor()
    }

    pub fn validate(&self) -> Result<()> {
        let beta = self.beta();
        if !(0.0 < beta && beta < self.alpha && self.alpha < 1.0) {
            return Err(Error::invalid(format!("need 0 < beta < alpha < 1, got alpha = {}", self.alpha)));
        }
        if self.bootstrap == 0 {
            return Err(Error::invalid("bootstrap replicates must be at least 1"));
        }
        if self.theta_grid < 2 || self.s_grid < 2 {
            return Err(Error::invalid("grids need at least 2 points per axis"));
        }
        Ok(())
    }
}

/// Bootstrap cell frequencies, one row per replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDraws {
    pub n: u64,
    pub freqs: Vec<[f64; 4]>,
}

fn multinomial<R: rand::Rng>(n: u64, p: &[f64; 4], rng: &mut R) -> [u64; 4] {
    let mut out = [0u64; 4];
    let mut left = n;
    let mut mass = 1.0;
    for c in 0..3 {
        if left == 0 {
            break;
        }
        let prob = if mass > 0.0 { (p[c] / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = Binomial::new(left, prob).expect("probability clamped to [0,1]").sample(rng);
        out[c] = k;
        left -= k;
        mass -= p[c];
    }
    out[3] = left;
    out
}

impl BootstrapDraws {
    /// Replicate `b` uses stream `b` of a ChaCha20 generator keyed by `seed`,
    /// so draws do not depend on how replicates are scheduled.
    pub fn generate(counts: &CellCounts, bootstrap: usize, seed: u64, exec: Execution) -> Self {
        let n = counts.total();
        let p = counts.as_array().map(|x| x as f64 / n as f64);
        let freqs = exec.map_range(bootstrap, |b| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            multinomial(n, &p, &mut rng).map(|x| x as f64 / n as f64)
        });
        Self { n, freqs }
    }
}

/// Draw one dataset of size `n` from `p`.
pub fn sample_counts(p: &JointTR, n: u64, seed: u64, stream: u64) -> CellCounts {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    CellCounts::from_array(multinomial(n, &p.as_array(), &mut rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub reject: bool,
    pub t_n: f64,
    /// Not defined when the statistic is infinite.
    pub crit: f64,
}

/// Upper empirical quantile: the smallest order statistic with at least a
/// fraction `level` of the sample at or below it, rounded up.
fn higher_quantile(values: &mut [f64], level: f64) -> f64 {
    let idx = ((level * (values.len() - 1) as f64).ceil() as usize).min(values.len() - 1);
    *values.select_nth_unstable_by(idx, f64::total_cmp).1
}

fn check_counts(counts: &CellCounts) -> Result<()> {
    if counts.total() < 2 {
        return Err(Error::invalid("inference needs at least 2 observations"));
    }
    if !counts.all_cells_positive() {
        return Err(Error::invalid(format!(
            "every cell needs at least one observation for inference, got {:?}",
            counts.as_array()
        )));
    }
    Ok(())
}

/// Runs the two-step test given precomputed sample moments and bootstrap draws.
pub fn rsw2_evaluate(
    stats: &MomentStats,
    sys: &MomentSystem,
    draws: &BootstrapDraws,
    alpha: f64,
    beta: f64,
) -> TestOutcome {
    let root_n = (draws.n as f64).sqrt();

    let mut active = [false; K];
    let mut t_n = 0.0f64;
    for j in 0..K {
        if stats.sd[j] > SD_TOL {
            active[j] = true;
            t_n = t_n.max(root_n * stats.mean[j] / stats.sd[j]);
        } else if stats.mean[j] > SD_TOL {
            return TestOutcome { reject: true, t_n: f64::INFINITY, crit: f64::NAN };
        }
    }
    if !active.iter().any(|&a| a) {
        return TestOutcome { reject: false, t_n: 0.0, crit: 0.0 };
    }

    let b = draws.freqs.len();
    let mut z = vec![[0.0; K]; b];
    let mut scale = vec![[0.0; K]; b];
    let mut step1 = Vec::with_capacity(b);
    for (i, w) in draws.freqs.iter().enumerate() {
        let st = sys.stats_from_weights(w);
        let mut worst = f64::NEG_INFINITY;
        for j in (0..K).filter(|&j| active[j]) {
            let sd = if st.sd[j] > SD_TOL { st.sd[j] } else { stats.sd[j] };
            scale[i][j] = root_n / sd;
            z[i][j] = (st.mean[j] - stats.mean[j]) * scale[i][j];
            worst = worst.max(-z[i][j]);
        }
        step1.push(worst);
    }
    let q1 = higher_quantile(&mut step1, 1.0 - beta);

    let mut lambda = [0.0; K];
    for j in (0..K).filter(|&j| active[j]) {
        lambda[j] = (stats.mean[j] + stats.sd[j] * q1 / root_n).min(0.0);
    }

    let mut step2: Vec<f64> = (0..b)
        .map(|i| {
            (0..K)
                .filter(|&j| active[j])
                .map(|j| z[i][j] + lambda[j] * scale[i][j])
                .fold(0.0, f64::max)
        })
        .collect();
    let crit = higher_quantile(&mut step2, 1.0 - alpha + beta);
    TestOutcome { reject: t_n > crit, t_n, crit }
}

/// Tests `H0: θ` belongs to the identified set, drawing fresh bootstrap
/// replicates from `cfg.seed`.
pub fn rsw2_test(
    counts: &CellCounts,
    theta: ThetaPoint,
    a: DependenceAssumption,
    cfg: &TestConfig,
) -> Result<TestOutcome> {
    cfg.validate()?;
    check_counts(counts)?;
    let draws = BootstrapDraws::generate(counts, cfg.bootstrap, cfg.seed, Execution::Sequential);
    rsw2_test_with_draws(counts, theta, a, cfg, &draws)
}

pub fn rsw2_test_with_draws(
    counts: &CellCounts,
    theta: ThetaPoint,
    a: DependenceAssumption,
    cfg: &TestConfig,
    draws: &BootstrapDraws,
) -> Result<TestOutcome> {
    let sys = build_moment_system(theta, a);
    let stats = moment_stats(counts, &sys)?;
    Ok(rsw2_evaluate(&stats, &sys, draws, cfg.alpha, cfg.beta()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridEval {
    pub theta1: f64,
    pub theta0: f64,
    pub s1: f64,
    pub s0: f64,
    pub t_n: f64,
    pub crit: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetainedPoint {
    pub theta1: f64,
    pub theta0: f64,
    pub s1: f64,
    pub s0: f64,
    pub t_n: f64,
    pub crit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSet {
    pub assumption: DependenceAssumption,
    pub config: TestConfig,
    pub beta: f64,
    pub quantile_rule: String,
    pub n: u64,
    pub grid_points_tested: usize,
    /// `None` when nothing is retained.
    pub theta1: Option<Interval>,
    pub theta0: Option<Interval>,
    pub retained: Vec<RetainedPoint>,
    /// Every tested point, in grid order. Only written to CSV.
    #[serde(skip)]
    pub evaluations: Vec<GridEval>,
}

impl ConfidenceSet {
    pub fn contains(&self, theta1: f64, theta0: f64, tol: f64) -> bool {
        self.retained
            .iter()
            .any(|p| (p.theta1 - theta1).abs() <= tol && (p.theta0 - theta0).abs() <= tol)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["theta1", "theta0", "s1", "s0", "Tn", "crit", "accepted"])?;
        for e in &self.evaluations {
            out.write_record([
                e.theta1.to_string(),
                e.theta0.to_string(),
                e.s1.to_string(),
                e.s0.to_string(),
                e.t_n.to_string(),
                e.crit.to_string(),
                e.accepted.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `n` evenly spaced values on `[0, 1]`.
pub fn theta_axis(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Grid points inside the parameter box, ordered by θ1, then θ0, then the
/// reference grid index.
pub fn inversion_grid(cfg: &TestConfig, region: &SRegion, a: DependenceAssumption) -> Vec<ThetaPoint> {
    let axis = theta_axis(cfg.theta_grid);
    let refs = region.grid_points();
    let boxes: Vec<_> = refs.iter().map(|s| param_space_box(a, s)).collect();
    let mut out = Vec::new();
    for &t1 in &axis {
        for &t0 in &axis {
            for (s, bx) in refs.iter().zip(&boxes) {
                if bx.contains(t1, t0) {
                    out.push(ThetaPoint::new(t1, t0, *s));
                }
            }
        }
    }
    out
}

pub fn confidence_set(
    counts: &CellCounts,
    region: &SRegion,
    a: DependenceAssumption,
    cfg: &TestConfig,
) -> Result<ConfidenceSet> {
    confidence_set_with(counts, region, a, cfg, Execution::default())
}

pub fn confidence_set_with(
    counts: &CellCounts,
    region: &SRegion,
    a: DependenceAssumption,
    cfg: &TestConfig,
    exec: Execution,
) -> Result<ConfidenceSet> {
    cfg.validate()?;
    region.validate()?;
    check_counts(counts)?;
    let draws = BootstrapDraws::generate(counts, cfg.bootstrap, cfg.seed, exec);
    let grid = inversion_grid(cfg, region, a);
    let (alpha, beta) = (cfg.alpha, cfg.beta());
    let n = counts.total() as f64;
    let w = counts.as_array().map(|x| x as f64 / n);

    let evaluations = exec.map(&grid, |th| {
        let sys = build_moment_system(*th, a);
        let out = rsw2_evaluate(&sys.stats_from_weights(&w), &sys, &draws, alpha, beta);
        GridEval {
            theta1: th.theta1,
            theta0: th.theta0,
            s1: th.s.s1,
            s0: th.s.s0,
            t_n: out.t_n,
            crit: out.crit,
            accepted: !out.reject,
        }
    });

    let retained: Vec<RetainedPoint> = evaluations
        .iter()
        .filter(|e| e.accepted)
        .map(|e| RetainedPoint { theta1: e.theta1, theta0: e.theta0, s1: e.s1, s0: e.s0, t_n: e.t_n, crit: e.crit })
        .collect();
    let project = |f: fn(&RetainedPoint) -> f64| {
        retained.iter().map(f).fold(None, |acc: Option<Interval>, x| {
            Some(acc.map_or(Interval::point(x), |i| i.hull(&Interval::point(x))))
        })
    };
    Ok(ConfidenceSet {
        assumption: a,
        config: *cfg,
        beta,
        quantile_rule: QUANTILE_RULE.to_string(),
        n: counts.total(),
        grid_points_tested: grid.len(),
        theta1: project(|p| p.theta1),
        theta0: project(|p| p.theta0),
        retained,
        evaluations,
    })
}

/// Inverse of the regularized incomplete beta function by bisection.
fn beta_quantile(p: f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beta_reg(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Exact two-sided binomial interval at level `1 - alpha`.
pub fn clopper_pearson(successes: u64, n: u64, alpha: f64) -> Result<Interval> {
    if n == 0 || successes > n {
        return Err(Error::invalid(format!("need 0 <= successes <= n and n >= 1, got {successes}/{n}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let (x, n) = (successes as f64, n as f64);
    let lo = if successes == 0 { 0.0 } else { beta_quantile(alpha / 2.0, x, n - x + 1.0) };
    let hi = if x == n { 1.0 } else { beta_quantile(1.0 - alpha / 2.0, x + 1.0, n - x) };
    Ok(Interval::new(lo, hi))
}

/// Joint rectangle for the two apparent measures: each side at level
/// `sqrt(1 - alpha)` so the product has coverage `1 - alpha` (the two
/// margins are conditionally independent given the reference results).
pub fn apparent_confidence_rect(counts: &CellCounts, alpha: f64) -> Result<(Interval, Interval)> {
    let side = 1.0 - (1.0 - alpha).sqrt();
    Ok((
        clopper_pearson(counts.n11, counts.n11 + counts.n01, side)?,
        clopper_pearson(counts.n00, counts.n00 + counts.n10, side)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub theta1: f64,
    pub theta0: f64,
    pub accepted: usize,
    pub reps: usize,
    pub coverage: f64,
}

/// Fraction of simulated datasets of size `n` from `true_p` in which each
/// `(θ1, θ0)` (at the true reference characteristics) is accepted.
#[allow(clippy::too_many_arguments)]
pub fn coverage_simulation(
    true_p: &JointTR,
    s_true: &RefPerf,
    a: DependenceAssumption,
    n: u64,
    reps: usize,
    cfg: &TestConfig,
    thetas: &[(f64, f64)],
    exec: Execution,
) -> Result<Vec<CoverageResult>> {
    cfg.validate()?;
    if reps == 0 || n < 2 {
        return Err(Error::invalid("coverage simulation needs reps >= 1 and n >= 2"));
    }
    let systems: Vec<MomentSystem> = thetas
        .iter()
        .map(|&(t1, t0)| build_moment_system(ThetaPoint::new(t1, t0, *s_true), a))
        .collect();
    let (alpha, beta) = (cfg.alpha, cfg.beta());

    let per_rep: Vec<Vec<bool>> = exec.map_range(reps, |rep| {
        let rep_seed = cfg.seed.wrapping_add(rep as u64 + 1);
        let counts = sample_counts(true_p, n, rep_seed, u64::MAX);
        if check_counts(&counts).is_err() {
            log::warn!("replicate {rep} has an empty cell; counted as a rejection");
            return vec![false; systems.len()];
        }
        let draws = BootstrapDraws::generate(&counts, cfg.bootstrap, rep_seed, Execution::Sequential);
        let w = counts.as_array().map(|x| x as f64 / n as f64);
        systems
            .iter()
            .map(|sys| !rsw2_evaluate(&sys.stats_from_weights(&w), sys, &draws, alpha, beta).reject)
            .collect()
    });

    Ok(thetas
        .iter()
        .enumerate()
        .map(|(i, &(t1, t0))| {
            let accepted = per_rep.iter().filter(|r| r[i]).count();
            CoverageResult { theta1: t1, theta0: t0, accepted, reps, coverage: accepted as f64 / reps as f64 }
        })
        .collect())
}

//! Study configuration, orchestration of a full analysis, and the files it
//! produces (JSON report, CSV tables, SVG figures).

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::derived::{
    predictive_value_bounds, prevalence_bounds_rect_union, prevalence_bounds_union, prevalence_curve, unit_grid,
    write_curve_csv, CurvePoint, PredictiveBounds, PretestRange, PrevalenceUnion, ScreeningInput, DEFAULT_Q_GRID,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::identification::{frechet_comparator, project, sharp_union_with, DependenceAssumption, IdentifiedSet, Interval};
use crate::inference::{
    apparent_confidence_rect, confidence_set_with, coverage_simulation, ConfidenceSet, CoverageResult, TestConfig,
    QUANTILE_RULE,
};
use crate::io::read_counts;
use crate::probability::{apparent_measures, estimate_joint, validate_assumptions, CellCounts, SRegion};
use crate::svg::{Chart, Window};

/// Printed with every prevalence or predictive-value result.
pub const EXTRAPOLATION_DISCLAIMER: &str = "Prevalence and predictive-value bounds transfer to another population \
only if the index test has the same sensitivity and specificity there as in the study population.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportToggles {
    pub apparent: bool,
    pub sharp: bool,
    pub frechet: bool,
    pub confidence_set: bool,
    pub prevalence: bool,
    pub prevalence_curve: bool,
    pub predictive_values: bool,
    pub coverage_sim: bool,
}

impl ReportToggles {
    pub fn none() -> Self {
        Self {
            apparent: false,
            sharp: false,
            frechet: false,
            confidence_set: false,
            prevalence: false,
            prevalence_curve: false,
            predictive_values: false,
            coverage_sim: false,
        }
    }

    /// Everything that needs no bootstrap.
    pub fn estimation() -> Self {
        Self { apparent: true, sharp: true, frechet: true, prevalence: true, prevalence_curve: true, predictive_values: true, ..Self::none() }
    }
}

impl Default for ReportToggles {
    fn default() -> Self {
        Self::estimation()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub input: PathBuf,
    pub assumption: DependenceAssumption,
    pub region: SRegion,
    pub test: TestConfig,
    pub toggles: ReportToggles,
    /// Positivity rate in a screened population, for prevalence bounds.
    pub screening_q: Option<f64>,
    pub q_grid: usize,
    pub pretest: Option<PretestRange>,
    pub coverage_reps: usize,
    /// Fraction of the data extent added on each side of plots.
    pub plot_padding: f64,
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
    #[serde(skip)]
    pub execution: Execution,
}

impl StudyConfig {
    pub fn new(input: impl Into<PathBuf>, assumption: DependenceAssumption, region: SRegion) -> Self {
        Self {
            input: input.into(),
            assumption,
            region,
            test: TestConfig::default(),
            toggles: ReportToggles::default(),
            screening_q: None,
            q_grid: DEFAULT_Q_GRID,
            pretest: None,
            coverage_reps: 200,
            plot_padding: 0.1,
            out_dir: None,
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.input.exists() {
            return Err(Error::invalid(format!("input file {} does not exist", self.input.display())));
        }
        self.region.validate()?;
        if self.toggles.confidence_set || self.toggles.coverage_sim {
            self.test.validate()?;
        }
        if let Some(q) = self.screening_q {
            ScreeningInput::new(q)?;
        }
        if self.q_grid < 2 {
            return Err(Error::invalid("prevalence curve needs at least 2 points"));
        }
        Ok(())
    }

    /// SHA-256 of the serialized configuration (output directory and
    /// execution strategy excluded).
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config always serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub beta_preset: String,
    pub quantile_rule: String,
    pub disclaimer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationEntry {
    pub s1: f64,
    pub s0: f64,
    pub p_t1: f64,
    pub passed: bool,
    pub at_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub method: String,
    pub theta1: Interval,
    pub theta0: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceReport {
    pub q: f64,
    pub sharp: PrevalenceUnion,
    pub rect: PrevalenceUnion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveReport {
    pub pretest: PretestRange,
    pub bounds: PredictiveBounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    /// `s1=…,s0=…` for a single reference point, `union` for the whole range.
    pub label: String,
    pub theta1: Interval,
    pub theta0: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub provenance: Provenance,
    pub config: StudyConfig,
    pub counts: CellCounts,
    pub validation: Vec<ValidationEntry>,
    pub estimates: Vec<EstimateRow>,
    pub false_negative_rate: Option<Interval>,
    pub identified_set: Option<IdentifiedSet>,
    pub confidence_set: Option<ConfidenceSet>,
    pub prevalence: Option<PrevalenceReport>,
    pub prevalence_curve: Option<Vec<CurvePoint>>,
    pub predictive_values: Option<PredictiveReport>,
    pub sensitivity: Option<Vec<SensitivityRow>>,
    pub coverage: Option<Vec<CoverageResult>>,
}

impl ReportBundle {
    pub fn estimate(&self, method: &str) -> Option<&EstimateRow> {
        self.estimates.iter().find(|r| r.method == method)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn estimates_csv(&self) -> Result<String> {
        let mut out = csv::Writer::from_writer(Vec::new());
        out.write_record(["method", "theta1_lo", "theta1_hi", "theta0_lo", "theta0_hi"])?;
        for r in &self.estimates {
            out.write_record([
                r.method.clone(),
                r.theta1.lo.to_string(),
                r.theta1.hi.to_string(),
                r.theta0.lo.to_string(),
                r.theta0.hi.to_string(),
            ])?;
        }
        into_string(out)
    }

    pub fn sensitivity_csv(&self) -> Result<Option<String>> {
        let Some(rows) = &self.sensitivity else { return Ok(None) };
        let mut out = csv::Writer::from_writer(Vec::new());
        out.write_record(["variant", "theta1_lo", "theta1_hi", "theta0_lo", "theta0_hi"])?;
        for r in rows {
            out.write_record([
                r.label.clone(),
                r.theta1.lo.to_string(),
                r.theta1.hi.to_string(),
                r.theta0.lo.to_string(),
                r.theta0.hi.to_string(),
            ])?;
        }
        into_string(out).map(Some)
    }

    pub fn coverage_csv(&self) -> Result<Option<String>> {
        let Some(rows) = &self.coverage else { return Ok(None) };
        let mut out = csv::Writer::from_writer(Vec::new());
        out.write_record(["theta1", "theta0", "accepted", "reps", "coverage"])?;
        for r in rows {
            out.write_record([
                r.theta1.to_string(),
                r.theta0.to_string(),
                r.accepted.to_string(),
                r.reps.to_string(),
                r.coverage.to_string(),
            ])?;
        }
        into_string(out).map(Some)
    }
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn run_analysis(cfg: &StudyConfig) -> Result<ReportBundle> {
    cfg.validate()?;
    let counts = read_counts(&cfg.input)?;
    analyze(&counts, cfg)
}

/// Runs the configured pipeline on counts already in memory.
pub fn analyze(counts: &CellCounts, cfg: &StudyConfig) -> Result<ReportBundle> {
    cfg.region.validate()?;
    let p = estimate_joint(counts)?;
    let t = &cfg.toggles;

    let validation = cfg
        .region
        .grid_points()
        .iter()
        .map(|s| {
            let v = validate_assumptions(&p, s);
            ValidationEntry { s1: s.s1, s0: s.s0, p_t1: v.p_t1, passed: v.passed(), at_boundary: v.at_boundary }
        })
        .collect::<Vec<_>>();
    if validation.iter().any(|v| v.at_boundary) {
        log::warn!("estimated P(t=1) sits on the edge of the admissible interval; continuing");
    }

    let needs_set = t.sharp || t.frechet || t.prevalence || t.prevalence_curve || t.predictive_values || t.coverage_sim;
    let set = if needs_set { Some(sharp_union_with(&p, &cfg.region, cfg.assumption, cfg.execution)?) } else { None };

    let mut estimates = Vec::new();
    if t.apparent {
        let (a1, a0) = apparent_measures(&p)?;
        estimates.push(EstimateRow { method: "apparent".into(), theta1: Interval::point(a1), theta0: Interval::point(a0) });
        let (c1, c0) = apparent_confidence_rect(counts, cfg.test.alpha)?;
        estimates.push(EstimateRow { method: "apparent_ci".into(), theta1: c1, theta0: c0 });
    }
    let mut false_negative_rate = None;
    if let (true, Some(set)) = (t.sharp, &set) {
        let (t1, t0) = (project(set, 1), project(set, 0));
        estimates.push(EstimateRow { method: "sharp".into(), theta1: t1, theta0: t0 });
        false_negative_rate = Some(Interval::new(1.0 - t1.hi, 1.0 - t1.lo));
    }
    if let (true, Some(set)) = (t.frechet, &set) {
        let mut hull: Option<(Interval, Interval)> = None;
        for seg in &set.segments {
            let f = (frechet_comparator(&p, &seg.s, 1)?, frechet_comparator(&p, &seg.s, 0)?);
            hull = Some(hull.map_or(f, |(h1, h0)| (h1.hull(&f.0), h0.hull(&f.1))));
        }
        let (f1, f0) = hull.expect("identified set is never empty");
        estimates.push(EstimateRow { method: "frechet".into(), theta1: f1, theta0: f0 });
    }

    let confidence_set = if t.confidence_set {
        let cs = confidence_set_with(counts, &cfg.region, cfg.assumption, &cfg.test, cfg.execution)?;
        if let (Some(t1), Some(t0)) = (cs.theta1, cs.theta0) {
            estimates.push(EstimateRow { method: "confidence_set".into(), theta1: t1, theta0: t0 });
        }
        Some(cs)
    } else {
        None
    };

    let prevalence = match (t.prevalence, cfg.screening_q, &set) {
        (true, Some(q), Some(set)) => {
            let q = ScreeningInput::new(q)?;
            Some(PrevalenceReport {
                q: q.q,
                sharp: prevalence_bounds_union(set, q),
                rect: prevalence_bounds_rect_union(set, q),
            })
        }
        _ => None,
    };
    let curve = match (t.prevalence_curve, &set) {
        (true, Some(set)) => Some(prevalence_curve(set, &unit_grid(cfg.q_grid))?),
        _ => None,
    };
    let predictive_values = match (t.predictive_values, cfg.pretest, &set) {
        (true, Some(pretest), Some(set)) => {
            Some(PredictiveReport { pretest, bounds: predictive_value_bounds(set, pretest) })
        }
        _ => None,
    };

    let coverage = match (t.coverage_sim, &set) {
        (true, Some(set)) => {
            let seg = set.segments[0];
            let thetas = [seg.lo, seg.point_at(0.5), seg.hi];
            Some(coverage_simulation(
                &p,
                &seg.s,
                cfg.assumption,
                counts.total(),
                cfg.coverage_reps,
                &cfg.test,
                &thetas,
                cfg.execution,
            )?)
        }
        _ => None,
    };

    Ok(ReportBundle {
        provenance: Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: cfg.hash(),
            seed: cfg.test.seed,
            beta_preset: cfg.test.beta_preset.to_string(),
            quantile_rule: QUANTILE_RULE.to_string(),
            disclaimer: EXTRAPOLATION_DISCLAIMER.to_string(),
        },
        config: cfg.clone(),
        counts: *counts,
        validation,
        estimates,
        false_negative_rate,
        identified_set: if t.sharp { set } else { None },
        confidence_set,
        prevalence,
        prevalence_curve: curve,
        predictive_values,
        sensitivity: None,
        coverage,
    })
}

/// Re-runs the analysis over `s1 ∈ s1_range` (with `grid` points) keeping the
/// configured `s0` range, and reports projections for each reference point
/// and for their union.
pub fn run_sensitivity(cfg: &StudyConfig, s1_range: (f64, f64), grid: usize) -> Result<ReportBundle> {
    cfg.validate()?;
    let counts = read_counts(&cfg.input)?;
    sensitivity(&counts, cfg, s1_range, grid)
}

pub fn sensitivity(counts: &CellCounts, cfg: &StudyConfig, s1_range: (f64, f64), grid: usize) -> Result<ReportBundle> {
    let region = SRegion::rect(s1_range, cfg.region.s0_range(), grid)?;
    let cfg = StudyConfig { region, ..cfg.clone() };
    let mut toggles = cfg.toggles;
    toggles.sharp = true;
    let cfg = StudyConfig { toggles, ..cfg };
    let mut bundle = analyze(counts, &cfg)?;
    let set = bundle.identified_set.as_ref().expect("sharp set requested");
    let mut rows: Vec<SensitivityRow> = set
        .segments
        .iter()
        .map(|seg| SensitivityRow {
            label: format!("s1={:.4},s0={:.4}", seg.s.s1, seg.s.s0),
            theta1: seg.theta1(),
            theta0: seg.theta0(),
        })
        .collect();
    rows.push(SensitivityRow { label: "union".into(), theta1: project(set, 1), theta0: project(set, 0) });
    bundle.sensitivity = Some(rows);
    Ok(bundle)
}

/// CSV of sharp and rectangular prevalence bounds (and widths) over `q_grid`.
pub fn emit_prevalence_curve(set: &IdentifiedSet, q_grid: &[f64]) -> Result<String> {
    let curve = prevalence_curve(set, q_grid)?;
    let mut buf = Vec::new();
    write_curve_csv(&curve, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OutputFormat {
    Json,
    Csv,
    Svg,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "svg" => Ok(OutputFormat::Svg),
            _ => Err(Error::invalid(format!("unknown format '{s}' (expected json, csv or svg)"))),
        }
    }
}

/// Writes the requested artifacts into `dir` and returns their paths.
pub fn write_outputs(bundle: &ReportBundle, dir: &Path, formats: &[OutputFormat]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    let formats: BTreeSet<_> = formats.iter().copied().collect();

    if formats.contains(&OutputFormat::Json) {
        put("report.json", bundle.to_json()?)?;
    }
    if formats.contains(&OutputFormat::Csv) {
        put("estimates.csv", bundle.estimates_csv()?)?;
        if let Some(set) = &bundle.identified_set {
            let mut buf = Vec::new();
            set.write_csv(&mut buf)?;
            put("identified_set.csv", String::from_utf8(buf).expect("utf-8"))?;
        }
        if let Some(cs) = &bundle.confidence_set {
            let mut buf = Vec::new();
            cs.write_csv(&mut buf)?;
            put("confidence_set.csv", String::from_utf8(buf).expect("utf-8"))?;
        }
        if let Some(curve) = &bundle.prevalence_curve {
            let mut buf = Vec::new();
            write_curve_csv(curve, &mut buf)?;
            put("prevalence_curve.csv", String::from_utf8(buf).expect("utf-8"))?;
        }
        if let Some(text) = bundle.sensitivity_csv()? {
            put("sensitivity.csv", text)?;
        }
        if let Some(text) = bundle.coverage_csv()? {
            put("coverage.csv", text)?;
        }
    }
    if formats.contains(&OutputFormat::Svg) {
        if let Some(svg) = identified_set_svg(bundle) {
            put("identified_set.svg", svg)?;
        }
        if let Some(svg) = prevalence_curve_svg(bundle) {
            put("prevalence_curve.svg", svg)?;
        }
    }
    Ok(written)
}

/// Segments of the estimated set, retained confidence-set points and the
/// apparent estimate.
pub fn identified_set_svg(bundle: &ReportBundle) -> Option<String> {
    let set = bundle.identified_set.as_ref()?;
    let cs_points: Vec<(f64, f64)> = bundle
        .confidence_set
        .as_ref()
        .map(|cs| {
            let distinct: BTreeSet<(u64, u64)> =
                cs.retained.iter().map(|p| (p.theta1.to_bits(), p.theta0.to_bits())).collect();
            distinct.into_iter().map(|(a, b)| (f64::from_bits(a), f64::from_bits(b))).collect()
        })
        .unwrap_or_default();
    let apparent = bundle.estimate("apparent").map(|r| (r.theta1.lo, r.theta0.lo));

    let extent = set
        .segments
        .iter()
        .flat_map(|s| [s.lo, s.hi])
        .chain(cs_points.iter().copied())
        .chain(apparent);
    let window = Window::around(extent, bundle.config.plot_padding);

    let mut chart = Chart::new(
        &format!("Identified set ({})", bundle.config.assumption),
        "sensitivity θ1",
        "specificity θ0",
        window,
    );
    if !cs_points.is_empty() {
        chart.dots(cs_points, "#9ecae1", 1.5).legend("confidence set", "#9ecae1");
    }
    for seg in &set.segments {
        chart.segment(seg.lo, seg.hi, "black", 2.5);
    }
    chart.legend("estimated set", "black");
    if let Some(ci) = bundle.estimate("apparent_ci") {
        let (a, b) = (ci.theta1, ci.theta0);
        chart.line(vec![(a.lo, b.lo), (a.hi, b.lo), (a.hi, b.hi), (a.lo, b.hi), (a.lo, b.lo)], "#d62728", true);
    }
    if let Some(a) = apparent {
        chart.dots(vec![a], "#d62728", 4.0).legend("apparent", "#d62728");
    }
    Some(chart.render())
}

/// Width of sharp and rectangular prevalence bounds against `P(t=1)`.
pub fn prevalence_curve_svg(bundle: &ReportBundle) -> Option<String> {
    let curve = bundle.prevalence_curve.as_ref()?;
    let sharp: Vec<_> = curve.iter().map(|c| (c.q, c.sharp.width())).collect();
    let rect: Vec<_> = curve.iter().map(|c| (c.q, c.rect.width())).collect();
    let top = rect.iter().chain(&sharp).map(|p| p.1).fold(0.0, f64::max).max(1e-3);
    let window = Window { x: (0.0, 1.0), y: (0.0, top * (1.0 + bundle.config.plot_padding)) };
    let mut chart = Chart::new("Prevalence bound width", "P(t=1) in screened population", "width", window);
    chart
        .line(sharp, "black", false)
        .legend("sharp", "black")
        .line(rect, "#ff7f0e", true)
        .legend("rectangular", "#ff7f0e");
    Some(chart.render())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::RefPerf;
    use approx::assert_abs_diff_eq;

    fn fixture(name: &str) -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
    }

    fn eua_cfg() -> StudyConfig {
        StudyConfig::new(
            fixture("eua_sx.json"),
            DependenceAssumption::WronglyAgreeY1,
            SRegion::singleton(RefPerf::new(0.9, 1.0).unwrap()),
        )
    }

    #[test]
    fn estimates_table_for_eua() {
        let b = run_analysis(&eua_cfg()).unwrap();
        let app = b.estimate("apparent").unwrap();
        assert_abs_diff_eq!(app.theta1.lo, 0.846, epsilon = 1e-3);
        assert_abs_diff_eq!(app.theta0.lo, 0.985, epsilon = 1e-3);
        let sharp = b.estimate("sharp").unwrap();
        assert_abs_diff_eq!(sharp.theta1.lo, 0.761, epsilon = 1e-3);
        assert_abs_diff_eq!(sharp.theta1.hi, 0.800, epsilon = 1e-3);
        assert_abs_diff_eq!(sharp.theta0.lo, 0.985, epsilon = 1e-3);
        assert_abs_diff_eq!(sharp.theta0.hi, 1.000, epsilon = 1e-3);
        let fnr = b.false_negative_rate.unwrap();
        assert_abs_diff_eq!(fnr.lo, 0.200, epsilon = 1e-3);
        assert_abs_diff_eq!(fnr.hi, 0.239, epsilon = 1e-3);
    }

    #[test]
    fn range_of_reference_sensitivity() {
        let cfg = StudyConfig { region: SRegion::rect((0.8, 0.9), (1.0, 1.0), 10).unwrap(), ..eua_cfg() };
        let b = run_analysis(&cfg).unwrap();
        let sharp = b.estimate("sharp").unwrap();
        assert_abs_diff_eq!(sharp.theta1.lo, 0.677, epsilon = 1e-3);
        assert_abs_diff_eq!(sharp.theta1.hi, 0.800, epsilon = 1e-3);
    }

    #[test]
    fn no_toggles_gives_metadata_only() {
        let cfg = StudyConfig { toggles: ReportToggles::none(), ..eua_cfg() };
        let b = run_analysis(&cfg).unwrap();
        assert!(b.estimates.is_empty());
        assert!(b.identified_set.is_none() && b.confidence_set.is_none() && b.prevalence_curve.is_none());
        assert_eq!(b.provenance.seed, cfg.test.seed);
        assert_eq!(b.provenance.config_hash, cfg.hash());
    }

    #[test]
    fn sensitivity_rows() {
        let cfg = StudyConfig { input: fixture("shah_asx.json"), ..eua_cfg() };
        let b = run_sensitivity(&cfg, (0.8, 0.9), 10).unwrap();
        let rows = b.sensitivity.as_ref().unwrap();
        assert_eq!(rows.len(), 11);
        let union = rows.last().unwrap();
        assert_eq!(union.label, "union");
        assert_abs_diff_eq!(union.theta1.lo, 0.550, epsilon = 1e-3);
        assert_abs_diff_eq!(union.theta1.hi, 0.669, epsilon = 1e-3);
        assert_abs_diff_eq!(union.theta0.lo, 0.994, epsilon = 1e-3);
        // At s1 = 0.8 the restricted upper end of θ1 reaches (p10 + p11) / P(y=1),
        // where θ0 = 1.
        assert_abs_diff_eq!(union.theta0.hi, 1.0, epsilon = 1e-12);

        let base = run_analysis(&cfg).unwrap();
        let flat = run_sensitivity(&cfg, (0.9, 0.9), 10).unwrap();
        assert_eq!(flat.estimate("sharp"), base.estimate("sharp"));
    }

    #[test]
    fn json_round_trip_reproduces_tables() {
        let cfg = StudyConfig { screening_q: Some(0.2), pretest: Some(PretestRange::new(0.1, 0.3).unwrap()), ..eua_cfg() };
        let b = run_sensitivity(&cfg, (0.8, 0.9), 4).unwrap();
        let text = b.to_json().unwrap();
        let back = ReportBundle::from_json(&text).unwrap();
        assert_eq!(back.to_json().unwrap(), text);
        assert_eq!(back.estimates_csv().unwrap(), b.estimates_csv().unwrap());
        assert_eq!(back.sensitivity_csv().unwrap(), b.sensitivity_csv().unwrap());
        assert_eq!(back.provenance.config_hash, back.config.hash());
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let a = eua_cfg();
        assert_eq!(a.hash(), eua_cfg().hash());
        let b = StudyConfig { test: TestConfig { seed: 1, ..a.test }, ..a.clone() };
        assert_ne!(a.hash(), b.hash());
        let c = StudyConfig { out_dir: Some("/tmp/x".into()), execution: Execution::Sequential, ..a.clone() };
        assert_eq!(a.hash(), c.hash());
    }

    #[test]
    fn missing_input_is_rejected() {
        let cfg = StudyConfig { input: fixture("nope.json"), ..eua_cfg() };
        assert!(matches!(run_analysis(&cfg), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn prevalence_curve_csv() {
        let b = run_analysis(&eua_cfg()).unwrap();
        let set = b.identified_set.unwrap();
        let csv = emit_prevalence_curve(&set, &unit_grid(201)).unwrap();
        assert_eq!(csv.lines().count(), 202);
        for c in b.prevalence_curve.unwrap() {
            assert!(c.sharp.width() <= c.rect.width() + 1e-12);
        }
    }

    #[test]
    fn writes_requested_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = StudyConfig { screening_q: Some(0.2), ..eua_cfg() };
        let b = run_analysis(&cfg).unwrap();
        let files = write_outputs(&b, dir.path(), &[OutputFormat::Json, OutputFormat::Csv, OutputFormat::Svg]).unwrap();
        let names: Vec<_> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
        for want in ["report.json", "estimates.csv", "identified_set.csv", "prevalence_curve.csv", "identified_set.svg", "prevalence_curve.svg"] {
            assert!(names.iter().any(|n| n == want), "missing {want}");
        }
        let report = fs::read_to_string(dir.path().join("report.json")).unwrap();
        assert!(report.contains(EXTRAPOLATION_DISCLAIMER));
    }
}

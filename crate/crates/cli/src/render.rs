//! Plain-text tables for the terminal.

use std::fmt::Write as _;

use dxbounds::inference::BetaPreset;
use dxbounds::moments::{MomentStats, COMPONENT_LABELS};
use dxbounds::report::ReportBundle;

pub fn header(b: &ReportBundle, with_test: bool) -> String {
    let mut s = String::new();
    let c = &b.counts;
    let _ = writeln!(
        s,
        "input: {}  n = {}  (t,r) counts 11={} 01={} 10={} 00={}",
        b.config.input.display(),
        c.total(),
        c.n11,
        c.n01,
        c.n10,
        c.n00
    );
    let _ = writeln!(s, "assumption: {}  reference region: {} point(s)", b.config.assumption, b.config.region.len());
    if with_test {
        let t = &b.config.test;
        let _ = writeln!(
            s,
            "seed: {}  beta preset: {}  alpha: {}  bootstrap: {}  theta grid: {}  quantile rule: {}",
            b.provenance.seed, b.provenance.beta_preset, t.alpha, t.bootstrap, t.theta_grid, b.provenance.quantile_rule
        );
    } else {
        let _ = writeln!(s, "seed: {}  beta preset: {}", b.provenance.seed, b.provenance.beta_preset);
    }
    let _ = writeln!(s, "config hash: {}", b.provenance.config_hash);
    s
}

pub fn validation(b: &ReportBundle) -> String {
    let failed: Vec<_> = b.validation.iter().filter(|v| !v.passed).collect();
    let edge = b.validation.iter().filter(|v| v.at_boundary).count();
    let mut s = String::new();
    if let Some(v) = b.validation.first() {
        let _ = writeln!(
            s,
            "validation: P(t=1) = {:.4}; {} of {} reference point(s) refuted",
            v.p_t1,
            failed.len(),
            b.validation.len()
        );
    }
    for v in failed.iter().take(5) {
        let _ = writeln!(s, "  refuted at s = ({}, {}): P(t=1) outside ({}, {})", v.s1, v.s0, 1.0 - v.s0, v.s1);
    }
    if edge > 0 {
        let _ = writeln!(s, "  {edge} point(s) on the edge of the admissible interval");
    }
    s
}

pub fn estimates(b: &ReportBundle) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "\n{:<16} {:<18} {:<18}", "method", "sensitivity", "specificity");
    for row in &b.estimates {
        let _ = writeln!(s, "{:<16} {:<18} {:<18}", row.method, row.theta1.to_string(), row.theta0.to_string());
    }
    if let Some(fnr) = b.false_negative_rate {
        let _ = writeln!(s, "false-negative rate: {fnr}");
    }
    s
}

pub fn confidence_set(b: &ReportBundle) -> String {
    let mut s = String::new();
    if let Some(cs) = &b.confidence_set {
        let _ = writeln!(
            s,
            "\nconfidence set: {} of {} grid points retained (beta = {:.4}, n = {})",
            cs.retained.len(),
            cs.grid_points_tested,
            cs.beta,
            cs.n
        );
        if cs.retained.is_empty() {
            let _ = writeln!(s, "  empty: every tested point is rejected");
        }
    }
    s
}

pub fn beta_comparison(rows: &[(BetaPreset, ReportBundle)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "\n{:<10} {:>9} {:<18} {:<18}", "beta", "retained", "sensitivity", "specificity");
    for (preset, b) in rows {
        let Some(cs) = &b.confidence_set else { continue };
        let show = |x: Option<dxbounds::identification::Interval>| x.map_or("empty".to_string(), |i| i.to_string());
        let _ = writeln!(
            s,
            "{:<10} {:>9} {:<18} {:<18}",
            preset.to_string(),
            cs.retained.len(),
            show(cs.theta1),
            show(cs.theta0)
        );
    }
    s
}

pub fn prevalence(b: &ReportBundle) -> String {
    let mut s = String::new();
    if let Some(p) = &b.prevalence {
        let flag = |v: bool| if v { " (vacuous: set contains an uninformative test)" } else { "" };
        let _ = writeln!(s, "\nprevalence at screening positivity q = {}:", p.q);
        let _ = writeln!(s, "  sharp:       {}{}", p.sharp.hull.interval, flag(p.sharp.hull.vacuous));
        let _ = writeln!(s, "  rectangular: {}{}", p.rect.hull.interval, flag(p.rect.hull.vacuous));
    }
    if let Some(curve) = &b.prevalence_curve {
        let _ = writeln!(s, "  width curve: {} points over q (see prevalence_curve.csv with --out)", curve.len());
    }
    let _ = writeln!(s, "note: {}", b.provenance.disclaimer);
    s
}

pub fn predictive(b: &ReportBundle) -> String {
    let mut s = String::new();
    if let Some(p) = &b.predictive_values {
        let _ = writeln!(s, "\npre-test probability in [{}, {}]:", p.pretest.pi_lo, p.pretest.pi_hi);
        let _ = writeln!(s, "  positive predictive value: {}", p.bounds.ppv);
        let _ = writeln!(s, "  negative predictive value: {}", p.bounds.npv);
    }
    let _ = writeln!(s, "note: {}", b.provenance.disclaimer);
    s
}

pub fn sensitivity(b: &ReportBundle) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "\n{:<28} {:<18} {:<18}", "reference point", "sensitivity", "specificity");
    for row in b.sensitivity.iter().flatten() {
        let _ = writeln!(s, "{:<28} {:<18} {:<18}", row.label, row.theta1.to_string(), row.theta0.to_string());
    }
    s
}

pub fn coverage(b: &ReportBundle) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "\n{:<20} {:>9} {:>6} {:>9}", "true (θ1, θ0)", "accepted", "reps", "coverage");
    for r in b.coverage.iter().flatten() {
        let _ = writeln!(
            s,
            "{:<20} {:>9} {:>6} {:>9.3}",
            format!("({:.3}, {:.3})", r.theta1, r.theta0),
            r.accepted,
            r.reps,
            r.coverage
        );
    }
    s
}

pub fn moment_stats(st: &MomentStats) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<6} {:>12} {:>12}", "j", "mean", "sd");
    for (j, label) in COMPONENT_LABELS.iter().enumerate() {
        let _ = writeln!(s, "{:<6} {:>12.6} {:>12.6}", label, st.mean[j], st.sd[j]);
    }
    s
}

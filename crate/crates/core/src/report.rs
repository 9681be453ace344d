//! Structured analysis reports: JSON serialization, a human-readable
//! text rendering and CSV curve output.

use serde::Serialize;

use crate::model::{HypothesisReport, Severity};
use crate::stability::{Outcome, Status, Verdict};
use crate::weights::AdmissibilityFit;

#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub horizon: f64,
    pub grid_n: usize,
    pub time_samples: usize,
    pub seed: u64,
    pub wall_ms: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    /// Config document the analysis ran on.
    pub problem: String,
    pub hypotheses: Option<HypothesisReport>,
    pub admissibility: Option<AdmissibilityFit>,
    /// (space label, verdict) pairs.
    pub verdicts: Vec<(String, Verdict)>,
    pub meta: RunMeta,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Overall status: worst across spaces (Unstable dominates, then
    /// Inconclusive).
    pub fn overall_status(&self) -> Status {
        let mut status = Status::Stable;
        for (_, v) in &self.verdicts {
            match (v.status, status) {
                (Status::Unstable, _) => status = Status::Unstable,
                (Status::Inconclusive, Status::Stable) => status = Status::Inconclusive,
                _ => {}
            }
        }
        status
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str("== analysis report ==\n");
        for line in self.problem.lines() {
            out.push_str(&format!("  | {}\n", line));
        }
        if let Some(h) = &self.hypotheses {
            out.push_str(&format!(
                "hypotheses: forward_complete={} injective={} smooth={}\n",
                h.forward_complete, h.injective, h.smooth
            ));
            for f in &h.findings {
                if f.severity != Severity::Info {
                    out.push_str(&format!("  [{:?}] {}: {}\n", f.severity, f.code, f.message));
                }
            }
        }
        if let Some(fit) = &self.admissibility {
            out.push_str(&format!(
                "admissibility: M = {:.6}, omega = {:.6}, refuted = {}\n",
                fit.m, fit.omega, fit.refuted
            ));
        }
        for (space, v) in &self.verdicts {
            out.push_str(&format!("[{}] verdict: {:?}\n", space, v.status));
            for c in &v.criteria {
                let mark = match c.outcome {
                    Outcome::Pass => "+",
                    Outcome::Fail => "-",
                    Outcome::Unknown => "?",
                };
                out.push_str(&format!("  {} {}: {}\n", mark, c.id, c.summary));
            }
            if let Some(w) = &v.witness {
                out.push_str(&format!(
                    "  witness: {}{}{}\n",
                    w.description,
                    w.point
                        .map(|p| format!(" at x = {:.6}", p))
                        .unwrap_or_default(),
                    w.value
                        .map(|val| format!(" (value {:.6e})", val))
                        .unwrap_or_default(),
                ));
            }
        }
        out.push_str(&format!(
            "overall: {:?} ({} ms)\n",
            self.overall_status(),
            self.meta.wall_ms
        ));
        out
    }
}

/// CSV body for a set of labelled curves sharing a time column.
/// Deterministic: fixed float formatting, '.' decimal, no locale.
pub fn curves_to_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format_float(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.is_finite() {
        format!("{:.12e}", v)
    } else {
        format!("{}", v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_is_deterministic() {
        let rows = vec![vec![0.0, 1.0], vec![0.5, 0.60653065971]];
        let a = curves_to_csv(&["t", "norm"], &rows);
        let b = curves_to_csv(&["t", "norm"], &rows);
        assert_eq!(a, b);
        assert!(a.starts_with("t,norm\n0,1.000000000000e0\n"));
    }
}

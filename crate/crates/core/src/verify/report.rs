use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Worst residual of a verification suite against its tolerance.
///
/// Composite suites keep one part per sub-check; their top-level residual
/// is the largest `max_residual / tolerance` ratio over the parts, checked
/// against a tolerance of 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub suite: String,
    pub cases_run: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub worst_case: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<ResidualReport>,
}

impl ResidualReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub(crate) fn composite(suite: &str, parts: Vec<ResidualReport>) -> Self {
        let mut worst: Option<(f64, String)> = None;
        for p in &parts {
            let ratio = p.max_residual / p.tolerance;
            let ratio = if ratio.is_nan() { f64::INFINITY } else { ratio };
            let desc = format!("{}: {}", p.suite, p.worst_case);
            worst = match worst {
                Some((w, ref d)) if w > ratio || (w == ratio && *d <= desc) => worst,
                _ => Some((ratio, desc)),
            };
        }
        let (max_residual, worst_case) = worst.unwrap_or((0.0, String::new()));
        let passed = parts.iter().all(|p| p.passed());
        ResidualReport {
            suite: suite.to_string(),
            cases_run: parts.iter().map(|p| p.cases_run).sum(),
            max_residual,
            tolerance: 1.0,
            verdict: if passed { Verdict::Pass } else { Verdict::Fail },
            worst_case,
            parts,
        }
    }
}

/// Running maximum with a deterministic tie-break on the case description.
#[derive(Debug, Default)]
pub(crate) struct Tracker {
    cases: usize,
    worst: Option<(f64, String)>,
}

impl Tracker {
    pub fn record(&mut self, residual: f64, case: impl FnOnce() -> String) {
        self.cases += 1;
        let residual = if residual.is_nan() { f64::INFINITY } else { residual };
        match &self.worst {
            Some((w, _)) if *w > residual => {}
            Some((w, d)) if *w == residual => {
                let desc = case();
                if desc < *d {
                    self.worst = Some((residual, desc));
                }
            }
            _ => self.worst = Some((residual, case())),
        }
    }

    /// Counts a case whose evaluation failed outright.
    pub fn record_error(&mut self, case: String, err: impl std::fmt::Display) {
        self.record(f64::INFINITY, || format!("{case} ({err})"));
    }

    pub fn finish(self, suite: &str, tolerance: f64) -> ResidualReport {
        let (max_residual, worst_case) = self.worst.unwrap_or((0.0, String::new()));
        ResidualReport {
            suite: suite.to_string(),
            cases_run: self.cases,
            max_residual,
            tolerance,
            verdict: if max_residual <= tolerance {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            worst_case,
            parts: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracker_ties_break_lexicographically() {
        let mut a = Tracker::default();
        a.record(1.0, || "b".into());
        a.record(1.0, || "a".into());
        let mut b = Tracker::default();
        b.record(1.0, || "a".into());
        b.record(1.0, || "b".into());
        assert_eq!(a.finish("s", 2.0), b.finish("s", 2.0));
    }

    #[test]
    fn verdict_follows_tolerance() {
        let mut t = Tracker::default();
        t.record(1e-3, || "x".into());
        assert!(t.finish("s", 1e-3).passed());
        let mut t = Tracker::default();
        t.record(f64::NAN, || "x".into());
        let r = t.finish("s", 1.0);
        assert!(!r.passed());
        assert_eq!(r.max_residual, f64::INFINITY);
    }

    #[test]
    fn composite_uses_ratios() {
        let mut a = Tracker::default();
        a.record(5e-11, || "closed".into());
        let mut b = Tracker::default();
        b.record(5e-7, || "numeric".into());
        let c = ResidualReport::composite("roundtrip", vec![a.finish("a", 1e-10), b.finish("b", 1e-6)]);
        assert!(c.passed());
        assert_eq!(c.cases_run, 2);
        assert!((c.max_residual - 0.5).abs() < 1e-12);
    }
}

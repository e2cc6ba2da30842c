//! Check reports: a named list of pass/fail results with per-check wall
//! time, rendered as an aligned text table or as JSON.

use std::time::Instant;

/// How a report document is printed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

/// One executed check.
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub millis: f64,
}

/// The result document of a verification run. Exit code 0 corresponds to
/// `all_passed()`.
pub struct ReportDocument {
    pub suite: String,
    pub checks: Vec<CheckResult>,
}

impl ReportDocument {
    pub fn new(suite: impl Into<String>) -> Self {
        ReportDocument {
            suite: suite.into(),
            checks: Vec::new(),
        }
    }

    /// Runs one named check, recording its outcome and wall time. The
    /// body returns a pass detail or a failure detail.
    pub fn run_check(&mut self, name: impl Into<String>, body: impl FnOnce() -> Result<String, String>) {
        let started = Instant::now();
        let outcome = body();
        let millis = started.elapsed().as_secs_f64() * 1e3;
        let (passed, detail) = match outcome {
            Ok(detail) => (true, detail),
            Err(detail) => (false, detail),
        };
        self.checks.push(CheckResult {
            name: name.into(),
            passed,
            detail,
            millis,
        });
    }

    pub fn merge(&mut self, other: ReportDocument) {
        self.checks.extend(other.checks);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render_text(&self) -> String {
        let name_width = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(0)
            .max(5);
        let mut out = format!("suite: {}\n", self.suite);
        for check in &self.checks {
            let status = if check.passed { "pass" } else { "FAIL" };
            out.push_str(&format!(
                "  {status}  {:<name_width$}  {:>9.3} ms  {}\n",
                check.name, check.millis, check.detail
            ));
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        out.push_str(&format!(
            "result: {passed}/{} checks passed\n",
            self.checks.len()
        ));
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "suite": self.suite,
            "passed": self.all_passed(),
            "checks": self.checks.iter().map(|c| serde_json::json!({
                "name": c.name,
                "status": if c.passed { "pass" } else { "fail" },
                "detail": c.detail,
                "millis": c.millis,
            })).collect::<Vec<_>>(),
        })
    }
}

//! Pass/fail reports shared by the validators.

use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    pub detail: String,
    /// Satisfied only with equality; reported so callers can see it.
    pub boundary: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), ok, detail: detail.into(), boundary: false });
    }

    pub fn boundary(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), ok, detail: detail.into(), boundary: true });
    }

    /// Records `|got - want| <= tol`.
    pub fn approx(&mut self, name: impl Into<String>, got: f64, want: f64, tol: f64) {
        let ok = (got - want).abs() <= tol;
        self.check(name, ok, format!("got {got:.9}, want {want:.9} (tol {tol:e})"));
    }

    /// Records `lo <= got < hi` (or `<= hi` when `hi_closed`).
    pub fn range(&mut self, name: impl Into<String>, got: f64, lo: f64, hi: f64, hi_closed: bool) {
        let ok = got >= lo && if hi_closed { got <= hi } else { got < hi };
        let close = if hi_closed { ']' } else { ')' };
        self.check(name, ok, format!("got {got:.9}, want [{lo:.9}, {hi:.9}{close}"));
    }

    pub fn less(&mut self, name: impl Into<String>, lhs: f64, rhs: f64) {
        self.check(name, lhs < rhs, format!("{lhs:.9} < {rhs:.9}"));
    }

    pub fn merge(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.ok).collect()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let mark = match (c.ok, c.boundary) {
                (true, false) => "ok  ",
                (true, true) => "ok= ",
                (false, _) => "FAIL",
            };
            writeln!(f, "{mark} {}: {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

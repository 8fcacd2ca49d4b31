//! Named numeric checks with tolerances, grouped into a verdict.

use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
    /// Informational; never fails.
    Note,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub verdict: Verdict,
    /// Module and operation that produced the number.
    pub provenance: String,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64, provenance: impl Into<String>) -> Self {
        Self::build(name, value, tolerance, Relation::AtMost, value <= tolerance, provenance)
    }

    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64, provenance: impl Into<String>) -> Self {
        Self::build(name, value, tolerance, Relation::AtLeast, value >= tolerance, provenance)
    }

    /// A boolean outcome stored as `1` (holds) or `0`.
    pub fn holds(name: impl Into<String>, ok: bool, provenance: impl Into<String>) -> Self {
        Self::build(name, ok as u8 as f64, 1.0, Relation::AtLeast, ok, provenance)
    }

    pub fn note(name: impl Into<String>, value: f64, provenance: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance: f64::NAN,
            relation: Relation::Note,
            verdict: Verdict::Pass,
            provenance: provenance.into(),
        }
    }

    fn build(
        name: impl Into<String>,
        value: f64,
        tolerance: f64,
        relation: Relation,
        ok: bool,
        provenance: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            relation,
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            provenance: provenance.into(),
        }
    }

    /// Downgrades a failure to a warning.
    pub fn soft(mut self) -> Self {
        if self.verdict == Verdict::Fail {
            self.verdict = Verdict::Warn;
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StatReport {
    pub checks: Vec<Check>,
    pub counts: BTreeMap<String, u64>,
    pub notes: Vec<String>,
}

impl StatReport {
    pub fn push(&mut self, check: Check) -> &mut Self {
        self.checks.push(check);
        self
    }

    pub fn count(&mut self, name: &str, n: u64) {
        *self.counts.entry(name.to_string()).or_default() += n;
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn extend(&mut self, other: StatReport) {
        self.checks.extend(other.checks);
        for (k, v) in other.counts {
            self.count(&k, v);
        }
        self.notes.extend(other.notes);
    }

    /// Worst verdict over all checks; an empty report passes.
    pub fn verdict(&self) -> Verdict {
        self.checks.iter().map(|c| c.verdict).max().unwrap_or(Verdict::Pass)
    }

    pub fn passed(&self) -> bool {
        self.verdict() == Verdict::Pass
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_is_worst_check() {
        let mut r = StatReport::default();
        assert_eq!(r.verdict(), Verdict::Pass);
        r.push(Check::at_most("a", 1.0, 2.0, "t"));
        r.push(Check::note("b", 5.0, "t"));
        assert!(r.passed());
        r.push(Check::at_least("c", 1.0, 2.0, "t").soft());
        assert_eq!(r.verdict(), Verdict::Warn);
        r.push(Check::holds("d", false, "t"));
        assert_eq!(r.verdict(), Verdict::Fail);
        assert_eq!(r.check("d").unwrap().value, 0.0);
    }

    #[test]
    fn counts_accumulate() {
        let mut a = StatReport::default();
        a.count("x", 2);
        let mut b = StatReport::default();
        b.count("x", 3);
        b.note("n");
        a.extend(b);
        assert_eq!(a.counts["x"], 5);
        assert_eq!(a.notes.len(), 1);
    }
}

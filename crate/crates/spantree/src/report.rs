//! Condition reports with three outcomes: within the paper's bound, within
//! the bound relaxed by the configured slack multiplier, or outside both.

use std::fmt::Write as _;

use serde::Serialize;

/// Outcome of a numeric condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    /// Holds with the paper's constants.
    Exact,
    /// Holds only after relaxing the error term by the slack multiplier.
    Slack,
    /// Fails even with slack.
    Fail,
}

impl Status {
    /// Short name used in CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            Status::Exact => "exact",
            Status::Slack => "slack",
            Status::Fail => "fail",
        }
    }
}

/// One evaluated condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    /// Condition name, e.g. `Z1`.
    pub name: String,
    /// Round or level the condition refers to.
    pub round: usize,
    /// Cluster index, or `usize::MAX` for global conditions.
    pub cluster: usize,
    /// Outcome.
    pub status: Status,
    /// Measured value.
    pub value: f64,
    /// Bound with the paper's constants.
    pub bound: f64,
}

/// Ordered list of checks.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Report {
    /// All checks in evaluation order.
    pub checks: Vec<Check>,
}

impl Report {
    /// Records `value <= bound`; slack multiplies the bound.
    pub fn upper(&mut self, name: &str, round: usize, cluster: usize, value: f64, bound: f64, slack: f64) -> Status {
        let status = if value <= bound + 1e-9 {
            Status::Exact
        } else if value <= bound * slack.max(1.0) + 1e-9 {
            Status::Slack
        } else {
            Status::Fail
        };
        self.push(name, round, cluster, status, value, bound)
    }

    /// Records `value >= main - error`; slack multiplies the error term.
    pub fn lower(&mut self, name: &str, round: usize, cluster: usize, value: f64, main: f64, error: f64, slack: f64) -> Status {
        let status = if value >= main - error - 1e-9 {
            Status::Exact
        } else if value >= main - error * slack.max(1.0) - 1e-9 {
            Status::Slack
        } else {
            Status::Fail
        };
        self.push(name, round, cluster, status, value, main - error)
    }

    /// Records `|value - target| <= error`; slack multiplies the error term.
    pub fn window(&mut self, name: &str, round: usize, cluster: usize, value: f64, target: f64, error: f64, slack: f64) -> Status {
        let dev = (value - target).abs();
        let status = if dev <= error + 1e-9 {
            Status::Exact
        } else if dev <= error * slack.max(1.0) + 1e-9 {
            Status::Slack
        } else {
            Status::Fail
        };
        self.push(name, round, cluster, status, dev, error)
    }

    /// Records an exact condition.
    pub fn exact(&mut self, name: &str, round: usize, cluster: usize, holds: bool) -> Status {
        let status = if holds { Status::Exact } else { Status::Fail };
        self.push(name, round, cluster, status, f64::from(u8::from(holds)), 1.0)
    }

    fn push(&mut self, name: &str, round: usize, cluster: usize, status: Status, value: f64, bound: f64) -> Status {
        self.checks.push(Check { name: name.to_string(), round, cluster, status, value, bound });
        status
    }

    /// Appends all checks of `other`.
    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    /// Checks with the given status.
    pub fn with_status(&self, status: Status) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.status == status).collect()
    }

    /// Whether no check failed.
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    /// Counts `(exact, slack, fail)`.
    pub fn counts(&self) -> (usize, usize, usize) {
        let mut out = (0, 0, 0);
        for c in &self.checks {
            match c.status {
                Status::Exact => out.0 += 1,
                Status::Slack => out.1 += 1,
                Status::Fail => out.2 += 1,
            }
        }
        out
    }

    /// CSV `name,round,cluster,status,value,bound`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("name,round,cluster,status,value,bound\n");
        for c in &self.checks {
            let cl = if c.cluster == usize::MAX { String::new() } else { c.cluster.to_string() };
            let _ = writeln!(s, "{},{},{},{},{},{}", c.name, c.round, cl, c.status.name(), c.value, c.bound);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statuses() {
        let mut r = Report::default();
        assert_eq!(r.upper("a", 0, 0, 1.0, 1.0, 2.0), Status::Exact);
        assert_eq!(r.upper("a", 0, 0, 1.5, 1.0, 2.0), Status::Slack);
        assert_eq!(r.upper("a", 0, 0, 2.5, 1.0, 2.0), Status::Fail);
        assert_eq!(r.lower("b", 0, 0, 5.0, 10.0, 3.0, 2.0), Status::Slack);
        assert_eq!(r.window("c", 0, 0, 9.0, 10.0, 0.5, 4.0), Status::Slack);
        assert_eq!(r.exact("d", 0, 0, false), Status::Fail);
        assert_eq!(r.counts(), (1, 3, 2));
        assert!(!r.all_pass());
    }
}

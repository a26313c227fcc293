use serde::{Deserialize, Serialize};

/// Outcome of a grid certification: the worst normalized excess of the
/// left-hand side over the right-hand side of an inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub passed: bool,
    pub max_violation: f64,
    pub witness_x: Option<f64>,
    pub witness_y: Option<f64>,
    pub points_checked: u64,
}

impl ViolationReport {
    pub(crate) fn tracker() -> ViolationTracker {
        ViolationTracker {
            max_violation: f64::NEG_INFINITY,
            witness: None,
            points: 0,
        }
    }
}

/// Running max-violation reduction. Ties keep the earliest witness, so merges
/// in a fixed order are deterministic.
#[derive(Debug, Clone)]
pub(crate) struct ViolationTracker {
    max_violation: f64,
    witness: Option<(f64, f64)>,
    points: u64,
}

impl ViolationTracker {
    pub(crate) fn observe(&mut self, violation: f64, x: f64, y: f64) {
        self.points += 1;
        // NaN counts as an infinite violation
        let v = if violation.is_nan() { f64::INFINITY } else { violation };
        if v > self.max_violation {
            self.max_violation = v;
            self.witness = Some((x, y));
        }
    }

    pub(crate) fn merge(mut self, other: ViolationTracker) -> ViolationTracker {
        self.points += other.points;
        if other.max_violation > self.max_violation {
            self.max_violation = other.max_violation;
            self.witness = other.witness;
        }
        self
    }

    pub(crate) fn finish(self, tol: f64) -> ViolationReport {
        let passed = self.max_violation <= tol;
        ViolationReport {
            passed,
            max_violation: if self.points == 0 { 0.0 } else { self.max_violation },
            witness_x: self.witness.map(|w| w.0),
            witness_y: self.witness.map(|w| w.1),
            points_checked: self.points,
        }
    }
}

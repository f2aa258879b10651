use serde::{Deserialize, Serialize};

/// Orientation of the elite metric. Fixed for the lifetime of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MetricDirection {
    pub higher_is_better: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("non-finite score in comparison ({a}, {b})")]
pub struct NonFiniteScore {
    pub a: f64,
    pub b: f64,
}

impl MetricDirection {
    pub const HIGHER: MetricDirection = MetricDirection { higher_is_better: true };
    pub const LOWER: MetricDirection = MetricDirection { higher_is_better: false };

    pub fn flipped(self) -> Self {
        MetricDirection { higher_is_better: !self.higher_is_better }
    }

    /// `+1.0` when higher is better, `-1.0` otherwise.
    pub fn sign(self) -> f64 {
        if self.higher_is_better {
            1.0
        } else {
            -1.0
        }
    }

    /// Strict comparison: ties keep the incumbent.
    pub fn better(self, a: f64, b: f64) -> Result<bool, NonFiniteScore> {
        check(a, b)?;
        Ok(self.is_better(a, b))
    }

    /// Direction-aware improvement, positive iff `child` beats `parent`.
    pub fn improvement(self, child: f64, parent: f64) -> Result<f64, NonFiniteScore> {
        check(child, parent)?;
        Ok(self.delta(child, parent))
    }

    pub(crate) fn is_better(self, a: f64, b: f64) -> bool {
        if self.higher_is_better {
            a > b
        } else {
            a < b
        }
    }

    pub(crate) fn delta(self, child: f64, parent: f64) -> f64 {
        if self.higher_is_better {
            child - parent
        } else {
            parent - child
        }
    }

    /// Best score of an iterator under this direction.
    pub fn best<I: IntoIterator<Item = f64>>(self, scores: I) -> Option<f64> {
        scores.into_iter().fold(None, |acc, s| match acc {
            Some(b) if !self.is_better(s, b) => Some(b),
            _ => Some(s),
        })
    }
}

impl Default for MetricDirection {
    fn default() -> Self {
        MetricDirection::HIGHER
    }
}

fn check(a: f64, b: f64) -> Result<(), NonFiniteScore> {
    if a.is_finite() && b.is_finite() {
        Ok(())
    } else {
        Err(NonFiniteScore { a, b })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn better_respects_direction() {
        assert!(MetricDirection::HIGHER.better(0.86, 0.82).unwrap());
        assert!(MetricDirection::LOWER.better(0.40, 0.50).unwrap());
        assert!(!MetricDirection::HIGHER.better(0.5, 0.5).unwrap());
        assert!(!MetricDirection::LOWER.better(0.5, 0.5).unwrap());
    }

    #[test]
    fn improvement_is_oriented() {
        let up = MetricDirection::HIGHER.improvement(0.86, 0.82).unwrap();
        assert!((up - 0.04).abs() < 1e-12);
        let down = MetricDirection::LOWER.improvement(0.40, 0.50).unwrap();
        assert!((down - 0.10).abs() < 1e-12);
        assert_eq!(MetricDirection::HIGHER.improvement(0.7, 0.7).unwrap(), 0.0);
        assert_eq!(MetricDirection::LOWER.improvement(0.7, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn non_finite_is_rejected() {
        assert!(MetricDirection::HIGHER.better(f64::NAN, 0.1).is_err());
        assert!(MetricDirection::LOWER.improvement(0.1, f64::INFINITY).is_err());
    }

    #[test]
    fn best_picks_direction_extreme() {
        assert_eq!(MetricDirection::HIGHER.best([0.2, 0.9, 0.5]), Some(0.9));
        assert_eq!(MetricDirection::LOWER.best([0.2, 0.9, 0.5]), Some(0.2));
        assert_eq!(MetricDirection::LOWER.best(std::iter::empty()), None);
    }
}

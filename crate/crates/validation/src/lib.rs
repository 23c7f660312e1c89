//! Bookkeeping for the acceptance run: one verdict line per criterion.

use std::fmt;
use std::time::Duration;

/// Outcome of one acceptance criterion.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub id: &'static str,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {} [{}] ({:.1}s): {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2);
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Whether `v` never increases by more than `slack[i]` between consecutive
/// entries `i` and `i + 1`.
pub fn non_increasing_within(v: &[f64], slack: &[f64]) -> bool {
    v.windows(2).zip(slack).all(|(w, s)| w[1] <= w[0] + s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        assert!((slope(&x, &y) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn monotone_with_slack() {
        assert!(non_increasing_within(&[3.0, 2.0, 2.05], &[0.0, 0.1]));
        assert!(!non_increasing_within(&[3.0, 2.0, 2.05], &[0.0, 0.01]));
    }
}

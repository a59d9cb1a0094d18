//! Classification of a sequence of quadrature values under refinement.

use core::fmt;

use crate::math;

/// Refinement behaviour of one integral across levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trend {
    /// The last three levels agree within tolerance.
    Converged,
    /// At least four levels, monotone, increments not shrinking.
    Diverging,
    Unsettled,
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Trend::Converged => "converged",
            Trend::Diverging => "diverging",
            Trend::Unsettled => "unsettled",
        })
    }
}

/// Increment ratio at or above which a monotone sequence counts as diverging.
pub const DIVERGENCE_RATIO: f64 = 0.9;

/// Classifies `values` (coarse to fine) with relative tolerance `tol`.
pub fn classify(values: &[f64], tol: f64) -> Trend {
    let n = values.len();
    if values.iter().any(|v| !v.is_finite()) {
        return if n >= 2 && !values[n - 1].is_finite() { Trend::Diverging } else { Trend::Unsettled };
    }
    if n >= 3 {
        let scale = 1f64.max(math::abs(values[n - 1]));
        let d1 = math::abs(values[n - 1] - values[n - 2]);
        let d2 = math::abs(values[n - 2] - values[n - 3]);
        if d1 <= tol * scale && d2 <= tol * scale {
            return Trend::Converged;
        }
    }
    if n >= 4 && is_diverging(values) {
        return Trend::Diverging;
    }
    Trend::Unsettled
}

fn is_diverging(values: &[f64]) -> bool {
    let inc: alloc::vec::Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let up = inc.iter().all(|d| *d > 0.0);
    let down = inc.iter().all(|d| *d < 0.0);
    if !(up || down) {
        return false;
    }
    inc.windows(2).all(|w| math::abs(w[1]) >= DIVERGENCE_RATIO * math::abs(w[0]))
}

/// Empirical order `log2(|d_k| / |d_{k+1}|)` of successive increments;
/// `None` where an increment vanishes.
pub fn empirical_orders(values: &[f64]) -> alloc::vec::Vec<Option<f64>> {
    let inc: alloc::vec::Vec<f64> = values.windows(2).map(|w| math::abs(w[1] - w[0])).collect();
    inc.windows(2)
        .map(|w| if w[0] > 0.0 && w[1] > 0.0 { Some(math::log2(w[0] / w[1])) } else { None })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converged_needs_three_agreeing_levels() {
        assert_eq!(classify(&[1.0, 1.0], 1e-6), Trend::Unsettled);
        assert_eq!(classify(&[0.5, 1.0, 1.0 + 1e-9, 1.0], 1e-6), Trend::Converged);
        assert_eq!(classify(&[1.0, 1.1, 1.0], 1e-6), Trend::Unsettled);
    }

    #[test]
    fn geometric_growth_diverges() {
        let v: alloc::vec::Vec<f64> = (0..5).map(|k| math::pow(2.0, 0.25 * k as f64)).collect();
        assert_eq!(classify(&v, 1e-6), Trend::Diverging);
        let shrinking = [1.0, 1.5, 1.75, 1.875, 1.9375];
        assert_eq!(classify(&shrinking, 1e-6), Trend::Unsettled);
    }

    #[test]
    fn orders_of_a_known_sequence() {
        let v = [1.0 + 1.0 / 16.0, 1.0 + 1.0 / 256.0, 1.0 + 1.0 / 4096.0];
        let o = empirical_orders(&v);
        assert!((o[0].unwrap() - 4.0).abs() < 1e-9);
        assert_eq!(empirical_orders(&[2.0, 2.0, 2.0]), [None]);
    }
}

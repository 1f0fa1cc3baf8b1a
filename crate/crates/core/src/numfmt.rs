//! Fixed-precision float handling for reproducible artifacts.

use crate::data::format_exact;

/// Significant digits kept in derived numeric artifacts (scores, metrics,
/// generated data).
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds `x` to [`SIGNIFICANT_DIGITS`] significant decimal digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if !x.is_finite() {
        return x;
    }
    let text = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let rounded: f64 = text.parse().expect("formatted float parses");
    // avoid emitting "-0"
    if rounded == 0.0 {
        0.0
    } else {
        rounded
    }
}

/// Formats `x` with at most [`SIGNIFICANT_DIGITS`] significant digits, in its
/// shortest form.
pub fn format_sig(x: f64) -> String {
    format_exact(round_sig(x))
}

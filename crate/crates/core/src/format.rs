//! Numeric rendering for reports, CSV and JSONL output.
//!
//! Every float leaving the crate is rounded to 12 significant digits so that
//! reports are byte-stable for fixed inputs.

use serde::Serializer;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds `x` to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        // collapses -0.0 as well
        return if x == 0.0 { 0.0 } else { x };
    }
    let s = format!("{:.*e}", digits.saturating_sub(1), x);
    let y: f64 = s.parse().expect("formatted float parses");
    if y == 0.0 {
        0.0
    } else {
        y
    }
}

pub fn round12(x: f64) -> f64 {
    round_sig(x, SIGNIFICANT_DIGITS)
}

/// Renders a float with 12 significant digits; plain decimal notation
/// unless the magnitude is tiny or huge.
pub fn fmt12(x: f64) -> String {
    let y = round12(x);
    let mag = y.abs();
    if y == 0.0 || (1e-4..1e15).contains(&mag) || !y.is_finite() {
        format!("{y}")
    } else {
        format!("{y:e}")
    }
}

pub fn serialize_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round12(*x))
}

//! Output formatting shared by the CSV writers.

use crate::scalar::Real;

/// Scientific notation with 17 significant digits; parses back to the same `f64`.
pub fn fmt_real<T: Real>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}


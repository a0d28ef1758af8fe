//! Deterministic number formatting shared by JSON and text reports.

/// Fixed 15-significant-digit scientific formatting.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".to_string() } else { "-inf".to_string() };
    }
    format!("{:.14e}", x)
}

/// Formats a quantity known only through its logarithm.
pub fn fmt_from_ln(ln: f64) -> String {
    if ln == f64::NEG_INFINITY {
        return "0".to_string();
    }
    let v = ln.exp();
    if v.is_finite() && v > 0.0 {
        return fmt_f64(v);
    }
    // Outside the f64 range: mantissa and decimal exponent from the log.
    let l10 = ln / std::f64::consts::LN_10;
    let e = l10.floor();
    let m = 10f64.powf(l10 - e);
    format!("{:.14}e{}", m, e as i64)
}

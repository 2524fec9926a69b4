//! Fixed-precision number formatting for the columnar outputs.
//!
//! Every float is rounded to 12 significant digits and printed in its
//! shortest round-trip form, so reruns produce byte-identical files.

/// Round to 12 significant digits.
pub fn round12(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

/// Format a float with 12 significant digits. Non-finite values print as
/// `inf`, `-inf` and `nan`.
pub fn fmt12(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round12(v);
    if r == 0.0 {
        return "0".into();
    }
    let a = r.abs();
    if (1e-5..1e15).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

/// Format an optional value, writing `NA` for `None`.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt12).unwrap_or_else(|| "NA".into())
}

//! Fixed-precision number formatting for CSV, JSON and text output.

/// Significant digits used for every number the tools emit.
pub const SIGNIFICANT_DIGITS: usize = 10;

/// Round to [`SIGNIFICANT_DIGITS`] significant digits. Non-finite values pass through.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Decimal text of `x` rounded to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_sig(x);
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

/// Round every number inside a JSON value.
pub fn round_json(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round_sig(f)) {
                        *n = r;
                    }
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_json),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

//! Number formatting shared by all CSV outputs.

/// Decimal rendering with 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return format!("{:.11}", 0.0);
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s == format!("-{:.decimals$}", 0.0) { s[1..].to_string() } else { s }
}

/// Like [`fmt_num`], with `None` as an empty cell.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(3.0), "3.00000000000");
        assert_eq!(fmt_num(0.0), "0.00000000000");
        assert_eq!(fmt_num(-0.25), "-0.250000000000");
        assert_eq!(fmt_num(123.456), "123.456000000");
        assert_eq!(fmt_opt(None), "");
    }
}

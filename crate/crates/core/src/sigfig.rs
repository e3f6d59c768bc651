//! Significant-digit rounding and formatting for report output.
//!
//! JSON reports round values to 12 significant digits; human tables print 6.

/// Round `x` to `digits` significant digits (digits >= 1).
pub fn round_sig(x: f64, digits: u32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits as usize - 1, x).parse().unwrap_or(x)
}

/// Render `x` with `digits` significant digits, preferring plain decimal
/// notation for moderate exponents.
pub fn format_sig(x: f64, digits: u32) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", digits as usize - 1, x);
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if exp < -4 || exp >= digits as i32 + 2 {
        return sci;
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    let plain = format!("{:.*}", decimals, round_sig(x, digits));
    if plain.contains('.') {
        plain.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        plain
    }
}

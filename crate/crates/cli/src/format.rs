//! Fixed 12-significant-digit number formatting for CSV output.

use wva_core::Amplitude;

const SIGNIFICANT: i32 = 12;

/// `0` for zero, scientific notation for `|x| < 1e-3` or `|x| ≥ 1e6`,
/// otherwise fixed notation; always 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let a = x.abs();
    if !(1e-3..1e6).contains(&a) {
        return format!("{:.*e}", (SIGNIFICANT - 1) as usize, x);
    }
    // Round first so that e.g. 9.99999999999995 is placed in the right decade.
    let rounded: f64 = format!("{:.*e}", (SIGNIFICANT - 1) as usize, x)
        .parse()
        .unwrap_or(x);
    if rounded.abs() >= 1e6 {
        return format!("{:.*e}", (SIGNIFICANT - 1) as usize, x);
    }
    let exponent = rounded.abs().log10().floor() as i32;
    let decimals = (SIGNIFICANT - 1 - exponent).max(0) as usize;
    format!("{:.*}", decimals, x)
}

pub fn fmt_complex(z: Amplitude) -> String {
    let sign = if z.im.is_sign_negative() { "-" } else { "+" };
    format!("{}{sign}{}i", fmt_num(z.re), fmt_num(z.im.abs()))
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

//! printf-style `%g` float formatting used by every CSV writer.

use alloc::format;
use alloc::string::String;

/// Formats `x` like C's `%.<sig>g`: `sig` significant digits, trailing zeros
/// stripped, scientific notation when the exponent falls outside `[-4, sig)`.
pub fn fmt_g(x: f64, sig: usize) -> String {
    let sig = sig.max(1);
    if x == 0.0 {
        return String::from("0");
    }
    if x.is_nan() {
        return String::from("nan");
    }
    if x.is_infinite() {
        return String::from(if x < 0.0 { "-inf" } else { "inf" });
    }

    // Round to `sig` digits first so the decade is decided post-rounding.
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp_str) = sci.split_once('e').expect("{:e} always has an exponent");
    let exp: i32 = exp_str.parse().expect("exponent is an integer");

    if exp < -4 || exp >= sig as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        String::from(strip_zeros(&fixed))
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_c_printf() {
        assert_eq!(fmt_g(0.0, 9), "0");
        assert_eq!(fmt_g(1.0, 9), "1");
        assert_eq!(fmt_g(0.5, 9), "0.5");
        assert_eq!(fmt_g(0.632120559, 9), "0.632120559");
        assert_eq!(fmt_g(123456789.0, 9), "123456789");
        assert_eq!(fmt_g(1234567890.0, 9), "1.23456789e+09");
        assert_eq!(fmt_g(1e-9, 9), "1e-09");
        assert_eq!(fmt_g(0.0001, 9), "0.0001");
        assert_eq!(fmt_g(-2.5e-7, 9), "-2.5e-07");
        assert_eq!(fmt_g(0.02, 9), "0.02");
    }

    #[test]
    fn rounds_into_next_decade() {
        assert_eq!(fmt_g(0.999999999999, 9), "1");
        assert_eq!(fmt_g(9.9999999999e8, 9), "1e+09");
    }
}

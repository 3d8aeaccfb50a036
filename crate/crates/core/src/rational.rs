//! Exact rational coefficients.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

pub type Coeff = BigRational;

pub fn int(n: i64) -> Coeff {
    Coeff::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Coeff {
    Coeff::new(BigInt::from(n), BigInt::from(d))
}

/// `n` or `n/d` in lowest terms.
pub fn format_exact(c: &Coeff) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

/// Explicitly signed form used by the text format: `+3/2`, `-4`, `+0`.
pub fn format_signed(c: &Coeff) -> String {
    if c.is_negative() {
        format_exact(c)
    } else {
        format!("+{}", format_exact(c))
    }
}

pub fn to_f64(c: &Coeff) -> f64 {
    c.to_f64().unwrap_or(f64::NAN)
}

pub fn abs(c: &Coeff) -> Coeff {
    c.abs()
}

pub fn is_zero(c: &Coeff) -> bool {
    c.is_zero()
}

/// Decimal rendering with `sig` significant digits, trailing zeros trimmed.
pub fn format_decimal(x: f64, sig: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (sig as i32 - 1 - magnitude).max(0) as usize;
    let mut s = format!("{:.*}", decimals, x);
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowest_terms() {
        assert_eq!(format_exact(&frac(6, 4)), "3/2");
        assert_eq!(format_signed(&frac(-8, 2)), "-4");
        assert_eq!(format_signed(&int(0)), "+0");
    }

    #[test]
    fn decimals() {
        assert_eq!(format_decimal(3.5, 12), "3.5");
        assert_eq!(format_decimal(2.5 / 3.5, 12), "0.714285714286");
        assert_eq!(format_decimal(-0.0, 12), "0");
        assert_eq!(format_decimal(-96.0, 12), "-96");
    }
}

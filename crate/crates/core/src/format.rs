//! Fixed significant-digit formatting for reported reals.

/// Formats `x` with `digits` significant digits (clamped to `1..=17`).
///
/// Plain decimal notation is used for exponents in `-5..digits`, scientific
/// notation otherwise. Rounding follows the standard library, which rounds the
/// exact binary value half-to-even.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    let digits = digits.clamp(1, 17);
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return if digits > 1 {
            format!("{:.*}", digits - 1, 0.0)
        } else {
            "0".to_string()
        };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (_, exp) = sci.split_once('e').expect("scientific notation has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if exp < -5 || exp >= digits as i32 {
        return sci;
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(2.177_947_373_6, 6), "2.17795");
        assert_eq!(fmt_sig(0.918_295_834, 6), "0.918296");
        assert_eq!(fmt_sig(1.584_962_500_7, 6), "1.58496");
        assert_eq!(fmt_sig(2.0, 6), "2.00000");
        assert_eq!(fmt_sig(123.456, 2), "1.2e2");
        assert_eq!(fmt_sig(-0.001_234_56, 3), "-0.00123");
        assert_eq!(fmt_sig(0.0, 3), "0.00");
        assert_eq!(fmt_sig(1e-9, 6), "1.00000e-9");
    }

    #[test]
    fn ties_round_to_even() {
        // exactly representable ties
        assert_eq!(fmt_sig(0.125, 2), "0.12");
        assert_eq!(fmt_sig(0.375, 2), "0.38");
        assert_eq!(fmt_sig(2.5, 1), "2");
    }

    #[test]
    fn rounding_carries_into_exponent() {
        // 9.9999996 rounds up to 10.0000 and must stay at 6 digits
        assert_eq!(fmt_sig(9.999_999_6, 6), "10.0000");
    }
}

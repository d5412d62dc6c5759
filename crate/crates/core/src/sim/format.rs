pub const CSV_HEADER: &str = "test,mechanism,epsilon,d,r,c,n,eta,alpha,trials,rejections,power,stderr,predicted_power";

/// Shortest `%g`-style rendering with 6 significant digits.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..6).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
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
    fn six_significant_digits() {
        assert_eq!(fmt_g(0.0), "0");
        assert_eq!(fmt_g(0.05), "0.05");
        assert_eq!(fmt_g(1.0), "1");
        assert_eq!(fmt_g(2.0), "2");
        assert_eq!(fmt_g(0.361231234), "0.361231");
        assert_eq!(fmt_g(13.117745), "13.1177");
        assert_eq!(fmt_g(123456.7), "123457");
        assert_eq!(fmt_g(999999.7), "1e6");
        assert_eq!(fmt_g(1.5e-7), "1.5e-7");
        assert_eq!(fmt_g(-0.25), "-0.25");
        assert_eq!(fmt_g(0.0001234567), "0.000123457");
    }
}

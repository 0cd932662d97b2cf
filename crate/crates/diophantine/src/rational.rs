//! Exact unbounded rational arithmetic helpers.
//!
//! All scalar quantities of the construction (anchor coordinates, snapped
//! psi values, fractional parts) live in `Rat`. The nearest-integer map
//! rounds half to even; `dist_to_z` is the distance to the nearest integer.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::str::FromStr;

pub type Rat = BigRational;

/// Parse "p/q" or a plain integer "p". The denominator must be positive.
pub fn parse_rat(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n = BigInt::from_str(num).map_err(|e| format!("bad numerator {num:?}: {e}"))?;
    let d = BigInt::from_str(den).map_err(|e| format!("bad denominator {den:?}: {e}"))?;
    if d.sign() != Sign::Plus {
        return Err(format!("denominator must be positive in {s:?}"));
    }
    Ok(Rat::new(n, d))
}

/// Canonical "num/den" rendering (reduced, positive denominator).
pub fn rat_to_string(x: &Rat) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Nearest integer with round-half-to-even at exact halves.
pub fn nearest_integer(x: &Rat) -> BigInt {
    let fl = x.floor().to_integer();
    let frac = x - Rat::from_integer(fl.clone());
    let half = Rat::new(BigInt::one(), BigInt::from(2));
    if frac < half {
        fl
    } else if frac > half {
        fl + 1
    } else if fl.is_even() {
        fl
    } else {
        fl + 1
    }
}

/// Distance to the nearest integer, in [0, 1/2].
pub fn dist_to_z(x: &Rat) -> Rat {
    let frac = x - Rat::from_integer(x.floor().to_integer());
    let comp = Rat::one() - &frac;
    if frac <= comp {
        frac
    } else {
        comp
    }
}

/// Fractional part x - floor(x), in [0, 1).
pub fn fract(x: &Rat) -> Rat {
    x - Rat::from_integer(x.floor().to_integer())
}

pub fn is_integer(x: &Rat) -> bool {
    x.denom().is_one()
}

/// floor(x * 2^bits) / 2^bits.
pub fn dyadic_floor(x: &Rat, bits: u32) -> Rat {
    let scale = BigInt::one() << bits;
    let scaled = (x * Rat::from_integer(scale.clone())).floor().to_integer();
    Rat::new(scaled, scale)
}

/// ceil(x * 2^bits) / 2^bits.
pub fn dyadic_ceil(x: &Rat, bits: u32) -> Rat {
    let scale = BigInt::one() << bits;
    let scaled = (x * Rat::from_integer(scale.clone())).ceil().to_integer();
    Rat::new(scaled, scale)
}

/// Two-sided enclosure [lo, hi] of sqrt(x) with hi - lo <= 2^-bits, x >= 0.
pub fn sqrt_enclosure(x: &Rat, bits: u32) -> (Rat, Rat) {
    assert!(!x.is_negative(), "sqrt of negative rational");
    if x.is_zero() {
        return (Rat::zero(), Rat::zero());
    }
    // sqrt(n/d) = sqrt(n*d)/d; scale by 2^(2*bits) before the integer sqrt
    let n = x.numer();
    let d = x.denom();
    let scaled = (n * d) << (2 * bits);
    let root = scaled.sqrt();
    let denom = d * (BigInt::one() << bits);
    let lo = Rat::new(root.clone(), denom.clone());
    let hi = Rat::new(root + 1, denom);
    (lo, hi)
}

/// Decimal rendering with `sig` significant digits, round-to-nearest
/// (ties to even). Used for CSV/report output only; never for decisions.
pub fn to_decimal_string(x: &Rat, sig: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    let neg = x.is_negative();
    let ax = x.abs();
    // decimal exponent e with 10^e <= ax < 10^(e+1)
    let mut e: i64 = 0;
    let ten = Rat::from_integer(BigInt::from(10));
    let one = Rat::one();
    let mut t = ax.clone();
    if t >= one {
        while t >= ten {
            t /= &ten;
            e += 1;
        }
    } else {
        while t < one {
            t *= &ten;
            e -= 1;
        }
    }
    // digits = round(ax * 10^(sig-1-e)), half to even
    let shift = sig as i64 - 1 - e;
    let pow = BigInt::from(10).pow(shift.unsigned_abs() as u32);
    let scaled = if shift >= 0 {
        &ax * Rat::from_integer(pow)
    } else {
        &ax / Rat::from_integer(pow)
    };
    let mut digits = nearest_integer(&scaled);
    // rounding may carry into one more digit
    let cap = BigInt::from(10).pow(sig as u32);
    if digits >= cap {
        digits /= 10;
        e += 1;
    }
    let ds = digits.to_string();
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if e >= 0 && (e as usize) < sig {
        let point = e as usize + 1;
        out.push_str(&ds[..point]);
        let tail = ds[point..].trim_end_matches('0');
        if !tail.is_empty() {
            out.push('.');
            out.push_str(tail);
        }
    } else if (-6..0).contains(&e) {
        out.push_str("0.");
        for _ in 0..(-e - 1) {
            out.push('0');
        }
        out.push_str(ds.trim_end_matches('0'));
    } else {
        out.push_str(&ds[..1]);
        let tail = ds[1..].trim_end_matches('0');
        if !tail.is_empty() {
            out.push('.');
            out.push_str(tail);
        }
        out.push('e');
        out.push_str(&e.to_string());
    }
    out
}

pub fn rat_to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rat {
        parse_rat(s).unwrap()
    }

    #[test]
    fn nearest_and_dist() {
        // x = 5/7 -> nearest 1, dist 2/7
        assert_eq!(nearest_integer(&r("5/7")), BigInt::from(1));
        assert_eq!(dist_to_z(&r("5/7")), r("2/7"));
        // x = -3/2 -> nearest -2 (half to even), dist 1/2
        assert_eq!(nearest_integer(&r("-3/2")), BigInt::from(-2));
        assert_eq!(dist_to_z(&r("-3/2")), r("1/2"));
        // x = 4 -> nearest 4, dist 0
        assert_eq!(nearest_integer(&r("4")), BigInt::from(4));
        assert!(dist_to_z(&r("4")).is_zero());
        // more half ties
        assert_eq!(nearest_integer(&r("1/2")), BigInt::from(0));
        assert_eq!(nearest_integer(&r("3/2")), BigInt::from(2));
        assert_eq!(nearest_integer(&r("5/2")), BigInt::from(2));
    }

    #[test]
    fn sqrt_enclosure_brackets() {
        for s in ["2", "10", "1/3", "104", "130877/10"] {
            let x = r(s);
            let (lo, hi) = sqrt_enclosure(&x, 128);
            assert!(&lo * &lo <= x, "lo^2 <= x for {s}");
            assert!(&hi * &hi >= x, "hi^2 >= x for {s}");
            assert!(&hi - &lo <= r("1") / Rat::from_integer(BigInt::one() << 128));
        }
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(to_decimal_string(&r("1/4"), 30), "0.25");
        assert_eq!(to_decimal_string(&r("1/3"), 5), "0.33333");
        assert_eq!(to_decimal_string(&r("-7/2"), 10), "-3.5");
        assert_eq!(to_decimal_string(&r("1000000"), 4), "1e6");
        assert_eq!(to_decimal_string(&r("0"), 10), "0");
    }

    #[test]
    fn parse_roundtrip() {
        for s in ["3/7", "-22/5", "0/1", "123456789123456789/987654321"] {
            let x = r(s);
            assert_eq!(parse_rat(&rat_to_string(&x)).unwrap(), x);
        }
        assert!(parse_rat("1/-3").is_err());
        assert!(parse_rat("abc").is_err());
    }
}

//! The real quadratic field Q(sqrt(2)) and certified decisions for
//! expressions of the form p + q*sqrt(r) with p, q, r in Q(sqrt(2)).
//!
//! Sign, floor and ceiling are decided by rational arithmetic only
//! (nested squaring case analysis); floats never decide anything here.

use crate::rational::{dyadic_ceil, dyadic_floor, rat_to_f64, sqrt_enclosure, Rat};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuadError {
    #[error("negative radicand in p + q*sqrt(r)")]
    NegativeRadicand,
    #[error("division by zero in Q(sqrt 2)")]
    DivisionByZero,
}

/// An exact element a + b*sqrt(2) of Q(sqrt 2). The representation is
/// unique since sqrt(2) is irrational.
#[derive(Clone, PartialEq, Eq)]
pub struct QuadReal {
    pub a: Rat,
    pub b: Rat,
}

impl fmt::Debug for QuadReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}*sqrt2 (~{})", self.a, self.b, self.to_f64())
    }
}

impl QuadReal {
    pub fn new(a: Rat, b: Rat) -> Self {
        QuadReal { a, b }
    }

    pub fn from_rat(a: Rat) -> Self {
        QuadReal { a, b: Rat::zero() }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rat(Rat::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn sqrt2() -> Self {
        QuadReal { a: Rat::zero(), b: Rat::one() }
    }

    /// gamma = 18/(9 - sqrt2) = (162 + 18*sqrt2)/79, the construction constant.
    pub fn gamma() -> Self {
        QuadReal {
            a: Rat::new(BigInt::from(162), BigInt::from(79)),
            b: Rat::new(BigInt::from(18), BigInt::from(79)),
        }
    }

    /// (9*gamma)^-1 = (9 - sqrt2)/162, the admissibility threshold for psi(1).
    pub fn inv_nine_gamma() -> Self {
        QuadReal {
            a: Rat::new(BigInt::from(9), BigInt::from(162)),
            b: Rat::new(BigInt::from(-1), BigInt::from(162)),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// Exact sign of a + b*sqrt(2), decided by comparing a^2 with 2b^2.
    pub fn sign(&self) -> i8 {
        let sa = rat_sign(&self.a);
        let sb = rat_sign(&self.b);
        match (sa, sb) {
            (0, 0) => 0,
            (s, 0) | (0, s) => s,
            (1, 1) => 1,
            (-1, -1) => -1,
            _ => {
                // opposite signs: |a| vs |b|*sqrt2  <=>  a^2 vs 2 b^2
                let lhs = &self.a * &self.a;
                let rhs = Rat::from_integer(BigInt::from(2)) * &self.b * &self.b;
                match lhs.cmp(&rhs) {
                    Ordering::Greater => sa,
                    Ordering::Less => -sa,
                    Ordering::Equal => 0, // impossible for nonzero rationals
                }
            }
        }
    }

    pub fn is_positive(&self) -> bool {
        self.sign() > 0
    }

    pub fn is_negative(&self) -> bool {
        self.sign() < 0
    }

    pub fn recip(&self) -> Result<QuadReal, QuadError> {
        if self.is_zero() {
            return Err(QuadError::DivisionByZero);
        }
        // 1/(a + b sqrt2) = (a - b sqrt2)/(a^2 - 2 b^2)
        let denom = &self.a * &self.a - Rat::from_integer(BigInt::from(2)) * &self.b * &self.b;
        Ok(QuadReal {
            a: &self.a / &denom,
            b: -&self.b / &denom,
        })
    }

    /// Total order on the represented reals.
    pub fn cmp_real(&self, other: &QuadReal) -> Ordering {
        match (self - other).sign() {
            1 => Ordering::Greater,
            -1 => Ordering::Less,
            _ => Ordering::Equal,
        }
    }

    /// Rational enclosure [lo, hi] with hi - lo shrinking as 2^-bits.
    pub fn enclosure(&self, bits: u32) -> (Rat, Rat) {
        let (s2lo, s2hi) = sqrt_enclosure(&Rat::from_integer(BigInt::from(2)), bits + 2);
        let (tlo, thi) = if self.b.is_negative() {
            (&self.b * s2hi, &self.b * s2lo)
        } else {
            (&self.b * s2lo, &self.b * s2hi)
        };
        (
            dyadic_floor(&(&self.a + tlo), bits),
            dyadic_ceil(&(&self.a + thi), bits),
        )
    }

    pub fn to_f64(&self) -> f64 {
        rat_to_f64(&self.a) + rat_to_f64(&self.b) * std::f64::consts::SQRT_2
    }
}

fn rat_sign(x: &Rat) -> i8 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

macro_rules! quad_binop {
    ($trait:ident, $method:ident, |$l:ident, $r:ident| $body:expr) => {
        impl<'a, 'b> $trait<&'b QuadReal> for &'a QuadReal {
            type Output = QuadReal;
            fn $method(self, rhs: &'b QuadReal) -> QuadReal {
                let $l = self;
                let $r = rhs;
                $body
            }
        }
        impl $trait<QuadReal> for QuadReal {
            type Output = QuadReal;
            fn $method(self, rhs: QuadReal) -> QuadReal {
                $trait::$method(&self, &rhs)
            }
        }
        impl<'b> $trait<&'b QuadReal> for QuadReal {
            type Output = QuadReal;
            fn $method(self, rhs: &'b QuadReal) -> QuadReal {
                $trait::$method(&self, rhs)
            }
        }
    };
}

quad_binop!(Add, add, |l, r| QuadReal { a: &l.a + &r.a, b: &l.b + &r.b });
quad_binop!(Sub, sub, |l, r| QuadReal { a: &l.a - &r.a, b: &l.b - &r.b });
quad_binop!(Mul, mul, |l, r| QuadReal {
    a: &l.a * &r.a + Rat::from_integer(BigInt::from(2)) * &l.b * &r.b,
    b: &l.a * &r.b + &l.b * &r.a,
});

// division is multiplication by the exact reciprocal; the `*` is deliberate
#[allow(clippy::suspicious_arithmetic_impl)]
impl<'b> Div<&'b QuadReal> for &QuadReal {
    type Output = QuadReal;
    fn div(self, rhs: &'b QuadReal) -> QuadReal {
        self * &rhs.recip().expect("division by zero in Q(sqrt 2)")
    }
}
impl Div<QuadReal> for QuadReal {
    type Output = QuadReal;
    fn div(self, rhs: QuadReal) -> QuadReal {
        &self / &rhs
    }
}

impl Neg for &QuadReal {
    type Output = QuadReal;
    fn neg(self) -> QuadReal {
        QuadReal { a: -&self.a, b: -&self.b }
    }
}
impl Neg for QuadReal {
    type Output = QuadReal;
    fn neg(self) -> QuadReal {
        -&self
    }
}

/// p + q*sqrt(r) with p, q, r in Q(sqrt 2), r >= 0.
#[derive(Clone, Debug)]
pub struct QuadRadical {
    pub p: QuadReal,
    pub q: QuadReal,
    pub r: QuadReal,
}

impl QuadRadical {
    pub fn new(p: QuadReal, q: QuadReal, r: QuadReal) -> Result<Self, QuadError> {
        if r.is_negative() {
            return Err(QuadError::NegativeRadicand);
        }
        Ok(QuadRadical { p, q, r })
    }

    pub fn sqrt(r: QuadReal) -> Result<Self, QuadError> {
        Self::new(QuadReal::zero(), QuadReal::one(), r)
    }

    /// Exact sign of p + q*sqrt(r), by case split on the signs of p, q
    /// and comparison of p^2 against q^2 * r inside Q(sqrt 2).
    pub fn sign(&self) -> i8 {
        let radical_vanishes = self.q.is_zero() || self.r.is_zero();
        if radical_vanishes {
            return self.p.sign();
        }
        let sp = self.p.sign();
        let sq = self.q.sign();
        match (sp, sq) {
            (0, s) => s,
            (1, 1) => 1,
            (-1, -1) => -1,
            _ => {
                // p and q*sqrt(r) have opposite signs (or q side dominates):
                // compare p^2 vs q^2 * r
                let lhs = &self.p * &self.p;
                let rhs = &(&self.q * &self.q) * &self.r;
                match (lhs - rhs).sign() {
                    1 => sp,
                    -1 => -sp,
                    _ => 0,
                }
            }
        }
    }

    /// Value shifted by an integer: (p - n) + q*sqrt(r).
    fn shifted(&self, n: &BigInt) -> QuadRadical {
        QuadRadical {
            p: &self.p - &QuadReal::from_rat(Rat::from_integer(n.clone())),
            q: self.q.clone(),
            r: self.r.clone(),
        }
    }

    /// Largest integer n with n <= p + q*sqrt(r). A dyadic enclosure
    /// proposes the candidate; `sign` certifies both brackets.
    pub fn floor(&self) -> BigInt {
        let (lo, hi) = self.enclosure(96);
        let mut n = lo.floor().to_integer();
        let hi_floor = hi.floor().to_integer();
        if hi_floor != n {
            // enclosure straddles an integer boundary; decide exactly
            if self.shifted(&hi_floor).sign() >= 0 {
                n = hi_floor;
            }
        }
        // certify n <= x < n+1
        loop {
            if self.shifted(&n).sign() < 0 {
                n -= 1;
                continue;
            }
            if self.shifted(&(&n + 1)).sign() >= 0 {
                n += 1;
                continue;
            }
            return n;
        }
    }

    /// ceil(x) = -floor(-x).
    pub fn ceil(&self) -> BigInt {
        -QuadRadical {
            p: -&self.p,
            q: -&self.q,
            r: self.r.clone(),
        }
            .floor()
    }

    pub fn enclosure(&self, bits: u32) -> (Rat, Rat) {
        let (plo, phi) = self.p.enclosure(bits + 4);
        let (qlo, qhi) = self.q.enclosure(bits + 4);
        let (rlo, rhi) = self.r.enclosure(bits + 4);
        let rlo = if rlo.is_negative() { Rat::zero() } else { rlo };
        let (slo, _) = sqrt_enclosure(&rlo, bits + 4);
        let (_, shi) = sqrt_enclosure(&rhi, bits + 4);
        // q * sqrt(r): interval product with sqrt(r) in [slo, shi] >= 0
        let t_ends = [&qlo * &slo, &qlo * &shi, &qhi * &slo, &qhi * &shi];
        let tlo = t_ends.iter().min().unwrap().clone();
        let thi = t_ends.iter().max().unwrap().clone();
        (
            dyadic_floor(&(plo + tlo), bits),
            dyadic_ceil(&(phi + thi), bits),
        )
    }

    pub fn to_f64(&self) -> f64 {
        self.p.to_f64() + self.q.to_f64() * self.r.to_f64().max(0.0).sqrt()
    }
}

/// Decide sqrt(a) + sqrt(b) < sqrt(c) exactly for non-negative rationals,
/// by two squarings: a + b + 2 sqrt(ab) < c  <=>  4ab < (c - a - b)^2
/// provided c - a - b > 0.
pub fn sqrt_sum_less_than_sqrt(a: &Rat, b: &Rat, c: &Rat) -> bool {
    debug_assert!(!a.is_negative() && !b.is_negative() && !c.is_negative());
    let s = c - a - b;
    if !s.is_positive() {
        return false;
    }
    Rat::from_integer(BigInt::from(4)) * a * b < &s * &s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse_rat;

    fn q(a: &str, b: &str) -> QuadReal {
        QuadReal::new(parse_rat(a).unwrap(), parse_rat(b).unwrap())
    }

    #[test]
    fn quad_sign_cases() {
        assert_eq!(q("0", "0").sign(), 0);
        assert_eq!(q("3", "-2").sign(), 1); // 3 - 2 sqrt2 > 0 since 9 > 8
        assert_eq!(q("1", "-1").sign(), -1); // 1 - sqrt2 < 0
        assert_eq!(q("-3", "2").sign(), -1);
        assert_eq!(q("0", "-5").sign(), -1);
        assert_eq!(q("7", "0").sign(), 1);
    }

    #[test]
    fn gamma_value() {
        // gamma = 18/(9 - sqrt2): check by multiplying back
        let g = QuadReal::gamma();
        let nine_minus = q("9", "-1");
        let prod = &g * &nine_minus;
        assert_eq!(prod, q("18", "0"));
        // display check: 2.373 +- 0.001
        assert!((g.to_f64() - 2.373).abs() < 1e-3);
        // (9 gamma)^-1 = (9 - sqrt2)/162
        let t = QuadReal::inv_nine_gamma();
        let nine_g = QuadReal::from_int(9) * &g;
        assert!((t * nine_g - QuadReal::one()).is_zero());
    }

    #[test]
    fn field_ops() {
        let x = q("3/5", "-7/2");
        let y = q("-2", "1/3");
        let z = &(&x * &y) / &y;
        assert_eq!(z, x);
        let w = &(&x + &y) - &y;
        assert_eq!(w, x);
    }

    #[test]
    fn radical_sign_cases() {
        let rad = |p: &str, qq: &str, r: &str| {
            QuadRadical::new(q(p, "0"), q(qq, "0"), q(r, "0")).unwrap()
        };
        assert_eq!(rad("0", "0", "5").sign(), 0);
        assert_eq!(rad("-2", "1", "5").sign(), 1); // sqrt5 - 2 > 0
        assert_eq!(rad("-3", "1", "5").sign(), -1);
        assert_eq!(rad("2", "-1", "5").sign(), -1);
        assert_eq!(rad("3", "-1", "9").sign(), 0); // 3 - sqrt9 = 0
        assert!(QuadRadical::new(q("0", "0"), q("1", "0"), q("-1", "0")).is_err());
    }

    #[test]
    fn radical_sign_gamma_case() {
        // p = gamma^2, q = -1, r = (2 gamma psi)^-1 with psi = 1/28:
        // gamma^2 ~ 5.63 vs sqrt(5.90) ~ 2.43, so the sign is +1...
        // the spec case is p = gamma^2 as the *subtracted* square: sign of
        // gamma^2 - sqrt(r) is +1; the negated expression is -1.
        let g = QuadReal::gamma();
        let g2 = &g * &g;
        let psi = QuadReal::new(parse_rat("1/28").unwrap(), num_traits::Zero::zero());
        let r = (QuadReal::from_int(2) * &g * psi).recip().unwrap();
        let x = QuadRadical::new(g2.clone(), QuadReal::from_int(-1), r.clone()).unwrap();
        assert_eq!(x.sign(), 1);
        let y = QuadRadical::new(-&g2, QuadReal::one(), r).unwrap();
        assert_eq!(y.sign(), -1);
    }

    #[test]
    fn radical_floor_cases() {
        let rad = |p: &str, qq: &str, r: &str| {
            QuadRadical::new(q(p, "0"), q(qq, "0"), q(r, "0")).unwrap()
        };
        assert_eq!(rad("7/2", "0", "0").floor(), BigInt::from(3));
        assert_eq!(rad("0", "1", "2").floor(), BigInt::from(1));
        assert_eq!(rad("0", "1", "4").floor(), BigInt::from(2)); // exact boundary
        assert_eq!(rad("0", "-1", "2").floor(), BigInt::from(-2));
        assert_eq!(rad("0", "1", "4").ceil(), BigInt::from(2));
        assert_eq!(rad("1/2", "1", "2").ceil(), BigInt::from(2));
    }

    #[test]
    fn base_case_radicand_floor() {
        // r = (2 gamma psi1)^-1 - gamma^2 for psi1 = 1/28 is ~0.268,
        // so floor(sqrt r) = 0 and ceil = 1
        let g = QuadReal::gamma();
        let psi = QuadReal::new(parse_rat("1/28").unwrap(), num_traits::Zero::zero());
        let r = (QuadReal::from_int(2) * &g * psi).recip().unwrap() - &g * &g;
        assert_eq!(r.sign(), 1);
        let x = QuadRadical::sqrt(r).unwrap();
        assert_eq!(x.floor(), BigInt::from(0));
        assert_eq!(x.ceil(), BigInt::from(1));
    }

    #[test]
    fn sqrt_sum_compare() {
        let r = |s: &str| parse_rat(s).unwrap();
        // sqrt(1) + sqrt(1) < sqrt(9): 2 < 3
        assert!(sqrt_sum_less_than_sqrt(&r("1"), &r("1"), &r("9")));
        // sqrt(1) + sqrt(1) < sqrt(4): 2 < 2 is false
        assert!(!sqrt_sum_less_than_sqrt(&r("1"), &r("1"), &r("4")));
        // sqrt(2) + sqrt(3) < sqrt(10): 1.414 + 1.732 = 3.146 vs 3.162
        assert!(sqrt_sum_less_than_sqrt(&r("2"), &r("3"), &r("10")));
        assert!(!sqrt_sum_less_than_sqrt(&r("2"), &r("3"), &r("9")));
    }
}

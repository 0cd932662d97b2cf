//! Planar integer lattice primitives: determinants, inner products,
//! the 90-degree rotation, span tests, and location of the unique
//! parallelogram point with a prescribed fractional inner product.

use crate::rational::Rat;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("degenerate basis: det(b, c) = 0")]
    DegenerateBasis,
    #[error("linear form is not dual-generic for this basis")]
    NotSpanEqual,
}

/// An integer lattice vector (x1, x2) in Z^2.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntVec2 {
    pub x: BigInt,
    pub y: BigInt,
}

impl fmt::Debug for IntVec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl IntVec2 {
    pub fn new(x: impl Into<BigInt>, y: impl Into<BigInt>) -> Self {
        IntVec2 { x: x.into(), y: y.into() }
    }

    pub fn sq_norm(&self) -> BigInt {
        &self.x * &self.x + &self.y * &self.y
    }

    /// Rotation by +90 degrees: (x, y) -> (-y, x).
    pub fn perp(&self) -> IntVec2 {
        IntVec2 { x: -&self.y, y: self.x.clone() }
    }

    pub fn neg(&self) -> IntVec2 {
        IntVec2 { x: -&self.x, y: -&self.y }
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    /// gcd of the coordinates is 1 (the vector is visible from the origin).
    pub fn is_primitive(&self) -> bool {
        self.x.gcd(&self.y).is_one()
    }

    pub fn scale(&self, k: &BigInt) -> IntVec2 {
        IntVec2 { x: k * &self.x, y: k * &self.y }
    }

    pub fn add(&self, other: &IntVec2) -> IntVec2 {
        IntVec2 { x: &self.x + &other.x, y: &self.y + &other.y }
    }

    pub fn sub(&self, other: &IntVec2) -> IntVec2 {
        IntVec2 { x: &self.x - &other.x, y: &self.y - &other.y }
    }
}

/// A rational vector, used for the linear forms alpha_k.
#[derive(Clone, PartialEq, Eq)]
pub struct RatVec2 {
    pub x: Rat,
    pub y: Rat,
}

impl fmt::Debug for RatVec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl RatVec2 {
    pub fn new(x: Rat, y: Rat) -> Self {
        RatVec2 { x, y }
    }

    pub fn inner_int(&self, m: &IntVec2) -> Rat {
        &self.x * Rat::from_integer(m.x.clone()) + &self.y * Rat::from_integer(m.y.clone())
    }
}

pub fn det2(b: &IntVec2, c: &IntVec2) -> BigInt {
    &b.x * &c.y - &b.y * &c.x
}

pub fn inner(a: &IntVec2, b: &IntVec2) -> BigInt {
    &a.x * &b.x + &a.y * &b.y
}

/// Does `alpha` take integer values on b and c, with d*alpha integral
/// and primitive modulo d = det(b, c)? Equivalently: the set of values
/// {<alpha, m> mod 1 : m in Z^2} equals {j/|d| : 0 <= j < |d|}.
pub fn span_equality(alpha: &RatVec2, b: &IntVec2, c: &IntVec2) -> bool {
    let d = det2(b, c);
    if d.is_zero() {
        return false;
    }
    if !alpha.inner_int(b).is_integer() || !alpha.inner_int(c).is_integer() {
        return false;
    }
    let u1 = &alpha.x * Rat::from_integer(d.clone());
    let u2 = &alpha.y * Rat::from_integer(d.clone());
    if !u1.is_integer() || !u2.is_integer() {
        return false;
    }
    let g = u1.to_integer().gcd(&u2.to_integer());
    g.gcd(&d).is_one()
}

/// The unique lattice point w = s*b + t*c with s, t in [0, 1) and
/// fractional part of <alpha, w> equal to 1/|det(b, c)|.
///
/// Solved directly: with u = d*alpha (an integer vector when alpha is
/// span-equal to the basis), the condition reads <u, w> = sign(d) mod d.
/// An extended gcd gives a point with <u, x> = gcd(u1, u2), a modular
/// inverse scales it to the right residue, and reduction of the basis
/// coordinates modulo 1 brings it into the half-open parallelogram.
pub fn find_w(alpha: &RatVec2, b: &IntVec2, c: &IntVec2) -> Result<IntVec2, LatticeError> {
    let d = det2(b, c);
    if d.is_zero() {
        return Err(LatticeError::DegenerateBasis);
    }
    if !span_equality(alpha, b, c) {
        return Err(LatticeError::NotSpanEqual);
    }
    let u1 = (&alpha.x * Rat::from_integer(d.clone())).to_integer();
    let u2 = (&alpha.y * Rat::from_integer(d.clone())).to_integer();
    let abs_d = d.abs();
    let sign_d = if d.is_negative() { BigInt::from(-1) } else { BigInt::one() };

    // x0 with <u, x0> = g = gcd(u1, u2): from u1*s + u2*t = g take
    // x0 = (s*? ...) -- we need a vector, so pair the cofactors:
    // <u, (s, t)> = u1*s + u2*t = g with (s, t) from the extended gcd.
    let eg = u1.extended_gcd(&u2);
    let g = eg.gcd.clone();
    let x0 = IntVec2 { x: eg.x, y: eg.y };
    debug_assert_eq!(&u1 * &x0.x + &u2 * &x0.y, g);

    // scale: need k with g*k = sign(d) mod |d|; gcd(g, d) = 1 by span
    // equality, so g is invertible modulo |d|.
    let g_inv = mod_inverse(&g, &abs_d).ok_or(LatticeError::NotSpanEqual)?;
    let k = (&g_inv * &sign_d).mod_floor(&abs_d);
    let x = x0.scale(&k);

    // coordinates of x in the basis (b, c): s = det(x, c)/d, t = det(b, x)/d.
    // Subtract integer multiples of b and c to land s, t in [0, 1).
    let s_num = det2(&x, c);
    let t_num = det2(b, &x);
    let s_floor = Rat::new(s_num, d.clone()).floor().to_integer();
    let t_floor = Rat::new(t_num, d).floor().to_integer();
    let w = x.sub(&b.scale(&s_floor)).sub(&c.scale(&t_floor));
    Ok(w)
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let a = a.mod_floor(m);
    let eg = a.extended_gcd(m);
    if eg.gcd.is_one() {
        Some(eg.x.mod_floor(m))
    } else {
        None
    }
}

/// All |det(b, c)| lattice points of the half-open parallelogram
/// {s*b + t*c : s, t in [0, 1)}. Exhaustive; intended for small
/// determinants (tests and audits).
pub fn parallelogram_points(b: &IntVec2, c: &IntVec2) -> Vec<IntVec2> {
    let d = det2(b, c);
    assert!(!d.is_zero(), "degenerate basis");
    let corners = [
        IntVec2::new(0, 0),
        b.clone(),
        c.clone(),
        b.add(c),
    ];
    let xs: Vec<&BigInt> = corners.iter().map(|v| &v.x).collect();
    let ys: Vec<&BigInt> = corners.iter().map(|v| &v.y).collect();
    let (xmin, xmax) = (xs.iter().min().unwrap(), xs.iter().max().unwrap());
    let (ymin, ymax) = (ys.iter().min().unwrap(), ys.iter().max().unwrap());
    let mut out = Vec::new();
    let mut x = (*xmin).clone();
    while &x <= xmax {
        let mut y = (*ymin).clone();
        while &y <= ymax {
            let p = IntVec2 { x: x.clone(), y: y.clone() };
            // s = det(p, c)/d, t = det(b, p)/d must both lie in [0, 1)
            let s = Rat::new(det2(&p, c), d.clone());
            let t = Rat::new(det2(b, &p), d.clone());
            let in_range = |u: &Rat| !u.is_negative() && u < &Rat::one();
            if in_range(&s) && in_range(&t) {
                out.push(p);
            }
            y += 1;
        }
        x += 1;
    }
    out.sort_by(|a, b| (&a.x, &a.y).cmp(&(&b.x, &b.y)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{fract, parse_rat};

    fn rv(x: &str, y: &str) -> RatVec2 {
        RatVec2::new(parse_rat(x).unwrap(), parse_rat(y).unwrap())
    }

    #[test]
    fn det_inner_perp() {
        let b = IntVec2::new(1, 0);
        let c = IntVec2::new(-1, 3);
        assert_eq!(det2(&b, &c), BigInt::from(3));
        assert_eq!(inner(&b, &c), BigInt::from(-1));
        assert_eq!(c.perp(), IntVec2::new(-3, -1));
        assert_eq!(c.sq_norm(), BigInt::from(10));
        assert!(c.is_primitive());
        assert!(!IntVec2::new(2, 4).is_primitive());
    }

    #[test]
    fn span_equality_cases() {
        let b = IntVec2::new(1, 0);
        let c = IntVec2::new(-1, 3);
        // alpha_1 = (0, 1/3): <alpha, b> = 0, <alpha, c> = 1, u = (0, 1), gcd = 1
        assert!(span_equality(&rv("0", "1/3"), &b, &c));
        // alpha = (0, 1/2): d*alpha = (0, 3/2) not integral
        assert!(!span_equality(&rv("0", "1/2"), &b, &c));
        // alpha = (1, 1): u = (3, 3), gcd(3, 3, 3) = 3
        assert!(!span_equality(&rv("1", "1"), &b, &c));
        // degenerate basis
        assert!(!span_equality(&rv("0", "1/3"), &b, &IntVec2::new(2, 0)));
    }

    #[test]
    fn parallelogram_count_and_membership() {
        let b = IntVec2::new(1, 0);
        let c = IntVec2::new(-1, 3);
        let pts = parallelogram_points(&b, &c);
        assert_eq!(pts.len(), 3);
        assert!(pts.contains(&IntVec2::new(0, 0)));
        let b2 = IntVec2::new(2, 1);
        let c2 = IntVec2::new(-1, 2);
        assert_eq!(parallelogram_points(&b2, &c2).len(), 5);
    }

    #[test]
    fn find_w_base_case() {
        // alpha_1 = (0, 1/3), basis (m_2, w-side): the unique point of the
        // parallelogram spanned by b = (1, 0), c = (-1, 3) with
        // frac(<alpha, w>) = 1/3
        let alpha = rv("0", "1/3");
        let b = IntVec2::new(1, 0);
        let c = IntVec2::new(-1, 3);
        let w = find_w(&alpha, &b, &c).unwrap();
        let val = alpha.inner_int(&w);
        assert_eq!(fract(&val), parse_rat("1/3").unwrap());
        // and w is one of the parallelogram points
        assert!(parallelogram_points(&b, &c).contains(&w));
    }

    #[test]
    fn find_w_matches_exhaustive() {
        // cross-check against exhaustive search over several small bases
        let cases = [
            (rv("2/7", "3/7"), IntVec2::new(2, 1), IntVec2::new(-1, 3)),
            (rv("1/5", "2/5"), IntVec2::new(1, 2), IntVec2::new(-2, 1)),
            (rv("0", "1/3"), IntVec2::new(1, 0), IntVec2::new(-1, 3)),
            (rv("3/11", "-5/11"), IntVec2::new(3, 1), IntVec2::new(-2, 3)),
        ];
        for (alpha, b, c) in cases {
            if !span_equality(&alpha, &b, &c) {
                continue;
            }
            let d = det2(&b, &c);
            let target = Rat::new(BigInt::one(), d.abs());
            let w = find_w(&alpha, &b, &c).unwrap();
            assert_eq!(fract(&alpha.inner_int(&w)), target);
            let hits: Vec<_> = parallelogram_points(&b, &c)
                .into_iter()
                .filter(|p| fract(&alpha.inner_int(p)) == target)
                .collect();
            assert_eq!(hits, vec![w]);
        }
    }

    #[test]
    fn find_w_rejects_bad_input() {
        let alpha = rv("1", "1");
        let b = IntVec2::new(1, 0);
        let c = IntVec2::new(-1, 3);
        assert!(matches!(find_w(&alpha, &b, &c), Err(LatticeError::NotSpanEqual)));
        assert!(matches!(
            find_w(&rv("0", "1/3"), &b, &IntVec2::new(3, 0)),
            Err(LatticeError::DegenerateBasis)
        ));
    }
}

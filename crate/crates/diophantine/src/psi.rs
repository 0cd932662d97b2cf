//! Admissible decay functions psi and their certified rational
//! evaluation. Three built-in families are supported:
//!
//!   constant        psi(t) = c
//!   power-decay     psi(t) = c * t^(-p/q)
//!   log-reciprocal  psi(t) = c / ln(shift + t)
//!
//! Evaluation returns a certified enclosure together with a snapped
//! rational value psi_hat (the enclosure's lower endpoint reduced to at
//! most 64 fractional bits, clamped to stay non-increasing).

use crate::quad::QuadReal;
use crate::rational::{dyadic_ceil, dyadic_floor, parse_rat, rat_to_string, sqrt_enclosure, Rat};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PsiError {
    #[error("inadmissible psi spec: {0}")]
    InadmissibleSpec(String),
    #[error("malformed psi spec: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PsiKind {
    #[serde(rename = "constant")]
    Constant,
    #[serde(rename = "power-decay")]
    PowerDecay,
    #[serde(rename = "log-reciprocal")]
    LogReciprocal,
}

/// Serializable description of a decay function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsiSpec {
    pub kind: PsiKind,
    pub c: Rat,
    /// p/q for power-decay; must be positive.
    pub exponent: Option<Rat>,
    /// additive shift for log-reciprocal; must be >= 1.
    pub shift: Option<Rat>,
}

#[derive(Serialize, Deserialize)]
struct PsiSpecWire {
    kind: PsiKind,
    c: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    exponent: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shift: Option<String>,
}

impl Serialize for PsiSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PsiSpecWire {
            kind: self.kind,
            c: rat_to_string(&self.c),
            exponent: self.exponent.as_ref().map(rat_to_string),
            shift: self.shift.as_ref().map(rat_to_string),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PsiSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = PsiSpecWire::deserialize(d)?;
        let parse = |s: &String| parse_rat(s).map_err(serde::de::Error::custom);
        Ok(PsiSpec {
            kind: w.kind,
            c: parse(&w.c)?,
            exponent: w.exponent.as_ref().map(parse).transpose()?,
            shift: w.shift.as_ref().map(parse).transpose()?,
        })
    }
}

/// A certified evaluation: `value` is the snapped psi_hat actually fed
/// to the construction; [lower, upper] encloses the true psi.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsiValue {
    pub value: Rat,
    pub lower: Rat,
    pub upper: Rat,
}

impl PsiValue {
    /// An exact rational psi_hat with a degenerate enclosure.
    pub fn exact(v: Rat) -> Self {
        PsiValue { value: v.clone(), lower: v.clone(), upper: v }
    }
}

impl PsiSpec {
    pub fn constant(c: Rat) -> Self {
        PsiSpec { kind: PsiKind::Constant, c, exponent: None, shift: None }
    }

    pub fn power_decay(c: Rat, exponent: Rat) -> Self {
        PsiSpec { kind: PsiKind::PowerDecay, c, exponent: Some(exponent), shift: None }
    }

    pub fn log_reciprocal(c: Rat, shift: Rat) -> Self {
        PsiSpec { kind: PsiKind::LogReciprocal, c, exponent: None, shift: Some(shift) }
    }

    /// Inline CLI syntax: `constant:1/28`, `power:1/28:1/4`, `log:1/10:3`.
    pub fn parse_inline(s: &str) -> Result<PsiSpec, PsiError> {
        let parts: Vec<&str> = s.split(':').collect();
        let rat = |t: &str| parse_rat(t).map_err(PsiError::Malformed);
        let spec = match parts.as_slice() {
            ["constant", c] => PsiSpec::constant(rat(c)?),
            ["power", c, e] => PsiSpec::power_decay(rat(c)?, rat(e)?),
            ["log", c, sh] => PsiSpec::log_reciprocal(rat(c)?, rat(sh)?),
            _ => {
                return Err(PsiError::Malformed(format!(
                    "expected constant:C, power:C:P/Q or log:C:SHIFT, got `{s}`"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Check positivity, family parameters, and psi(1) <= (9*gamma)^-1
    /// (the last comparison exact in Q(sqrt 2)).
    pub fn validate(&self) -> Result<(), PsiError> {
        if !self.c.is_positive() {
            return Err(PsiError::InadmissibleSpec("c must be positive".into()));
        }
        let threshold = QuadReal::inv_nine_gamma();
        match self.kind {
            PsiKind::Constant | PsiKind::PowerDecay => {
                if self.kind == PsiKind::PowerDecay {
                    let e = self.exponent.as_ref().ok_or_else(|| {
                        PsiError::Malformed("power-decay requires an exponent".into())
                    })?;
                    if !e.is_positive() {
                        return Err(PsiError::InadmissibleSpec(
                            "power-decay exponent must be positive".into(),
                        ));
                    }
                }
                // psi(1) = c for both families
                if (QuadReal::from_rat(self.c.clone()) - threshold).is_positive() {
                    return Err(PsiError::InadmissibleSpec(format!(
                        "psi(1) = {} exceeds (9 - sqrt2)/162",
                        self.c
                    )));
                }
            }
            PsiKind::LogReciprocal => {
                let shift = self.shift.as_ref().ok_or_else(|| {
                    PsiError::Malformed("log-reciprocal requires a shift".into())
                })?;
                if shift < &Rat::one() {
                    return Err(PsiError::InadmissibleSpec(
                        "log-reciprocal shift must be >= 1".into(),
                    ));
                }
                // psi(1) = c / ln(shift + 1), decided against a shrinking
                // enclosure of the threshold (ties cannot occur: ln is
                // transcendental at rational arguments > 1)
                let arg = shift + Rat::one();
                for bits in [96u32, 192, 384, 768, 1536] {
                    let (llo, lhi) = ln_enclosure(&arg, bits);
                    let (plo, phi) = (&self.c / &lhi, &self.c / &llo);
                    let (tlo, thi) = threshold.enclosure(bits);
                    if phi <= tlo {
                        return Ok(());
                    }
                    if plo > thi {
                        return Err(PsiError::InadmissibleSpec(format!(
                            "psi(1) = {}/ln({}) exceeds (9 - sqrt2)/162",
                            self.c, arg
                        )));
                    }
                }
                return Err(PsiError::InadmissibleSpec(
                    "psi(1) indistinguishable from the threshold at 1536 bits".into(),
                ));
            }
        }
        Ok(())
    }

    /// Human-readable family tag for diagnostics.
    pub fn describe(&self) -> String {
        match self.kind {
            PsiKind::Constant => format!("constant c={}", self.c),
            PsiKind::PowerDecay => format!(
                "power-decay c={} exponent={}",
                self.c,
                self.exponent.as_ref().map(rat_to_string).unwrap_or_default()
            ),
            PsiKind::LogReciprocal => format!(
                "log-reciprocal c={} shift={}",
                self.c,
                self.shift.as_ref().map(rat_to_string).unwrap_or_default()
            ),
        }
    }
}

/// Evaluate psi at t = sqrt(sq_norm) with a certified enclosure, snap
/// the lower endpoint to at most 64 fractional bits, and clamp against
/// the previous value so the emitted staircase is non-increasing.
pub fn psi_eval(spec: &PsiSpec, sq_norm: &BigInt, prev: Option<&PsiValue>) -> Result<PsiValue, PsiError> {
    assert!(sq_norm >= &BigInt::one(), "sq_norm must be >= 1");
    spec.validate()?;
    let (lower, upper) = match spec.kind {
        PsiKind::Constant => (spec.c.clone(), spec.c.clone()),
        PsiKind::PowerDecay => power_enclosure(spec, sq_norm)?,
        PsiKind::LogReciprocal => log_enclosure(spec, sq_norm)?,
    };
    debug_assert!(lower <= upper && lower.is_positive());

    // snap: lower endpoint, at most 64 fractional bits
    let mut value = if lower.denom().bits() <= 64 && lower.denom() <= &(BigInt::one() << 64) {
        lower.clone()
    } else {
        dyadic_floor(&lower, 64)
    };
    let mut lower = lower.min(value.clone());

    if let Some(p) = prev {
        if value > p.value {
            value = p.value.clone();
            lower = lower.min(value.clone());
        }
    }
    Ok(PsiValue { value, lower, upper })
}

/// Enclosure of c * sq_norm^(-p/(2q)) via an integer 2q-th root.
fn power_enclosure(spec: &PsiSpec, sq_norm: &BigInt) -> Result<(Rat, Rat), PsiError> {
    let e = spec.exponent.as_ref().unwrap();
    let p = e.numer().to_u32().ok_or_else(|| PsiError::Malformed("exponent numerator too large".into()))?;
    let q = e.denom().to_u32().ok_or_else(|| PsiError::Malformed("exponent denominator too large".into()))?;
    let n = 2 * q; // t^(p/q) = sq_norm^(p/(2q))
    let mut bits: u32 = 96;
    loop {
        // r = floor((s^p * 2^(n*bits))^(1/n)) gives r/2^bits <= s^(p/n) <= (r+1)/2^bits
        let shifted = sq_norm.pow(p) << (n as u64 * bits as u64);
        let root = shifted.nth_root(n);
        let scale = BigInt::one() << bits;
        let tp_lo = Rat::new(root.clone(), scale.clone());
        let tp_hi = Rat::new(root + 1, scale);
        let lo = &spec.c / tp_hi;
        let hi = &spec.c / tp_lo;
        if enclosure_tight(&lo, &hi) {
            return Ok((lo, hi));
        }
        bits *= 2;
    }
}

/// Enclosure of c / ln(shift + sqrt(sq_norm)).
fn log_enclosure(spec: &PsiSpec, sq_norm: &BigInt) -> Result<(Rat, Rat), PsiError> {
    let shift = spec.shift.as_ref().unwrap();
    let mut bits: u32 = 96;
    loop {
        let (tlo, thi) = sqrt_enclosure(&Rat::from_integer(sq_norm.clone()), bits);
        let (llo, _) = ln_enclosure(&(shift + tlo), bits);
        let (_, lhi) = ln_enclosure(&(shift + thi), bits);
        // shift >= 1 and t >= 1 give ln >= ln 2 > 0
        let lo = &spec.c / lhi;
        let hi = &spec.c / llo;
        if enclosure_tight(&lo, &hi) {
            return Ok((lo, hi));
        }
        bits *= 2;
    }
}

fn enclosure_tight(lo: &Rat, hi: &Rat) -> bool {
    lo.is_positive() && (hi - lo) * Rat::from_integer(BigInt::one() << 33) <= *lo
}

/// Certified enclosure of ln(x) for rational x >= 1. Range-reduces to
/// m in [1, 2), then ln m = 2 atanh((m-1)/(m+1)) with a truncated series
/// and directed rounding; ln 2 = 2 atanh(1/3).
pub fn ln_enclosure(x: &Rat, bits: u32) -> (Rat, Rat) {
    assert!(x >= &Rat::one(), "ln_enclosure requires x >= 1");
    let e = (x.floor().to_integer().bits() - 1) as u32;
    let m = x / Rat::from_integer(BigInt::one() << e);
    debug_assert!(m >= Rat::one() && m < Rat::from_integer(BigInt::from(2)));
    let z = (&m - Rat::one()) / (&m + Rat::one());
    let (alo, ahi) = atanh_enclosure(&z, bits + 8);
    if e == 0 {
        return (&alo + &alo, &ahi + &ahi);
    }
    let (l2lo, l2hi) = {
        let third = Rat::new(BigInt::one(), BigInt::from(3));
        let (a, b) = atanh_enclosure(&third, bits + 8);
        (&a + &a, &b + &b)
    };
    let e_rat = Rat::from_integer(BigInt::from(e));
    (&e_rat * l2lo + &alo + &alo, &e_rat * l2hi + &ahi + &ahi)
}

/// Enclosure of atanh(z) for rational 0 <= z <= 1/3 + eps, by the odd
/// power series with a geometric tail bound. Partial sums are rounded
/// dyadically in the safe direction so denominators stay bounded.
fn atanh_enclosure(z: &Rat, bits: u32) -> (Rat, Rat) {
    debug_assert!(!z.is_negative() && z < &Rat::new(BigInt::from(2), BigInt::from(5)));
    if z.is_zero() {
        return (Rat::zero(), Rat::zero());
    }
    let work = bits + 16;
    let z_lo = dyadic_floor(z, work);
    let z_hi = dyadic_ceil(z, work);
    let eps = Rat::new(BigInt::one(), BigInt::one() << (bits + 4));

    let sum_dir = |zz: &Rat, up: bool| -> Rat {
        let zz2 = zz * zz;
        let mut term = zz.clone(); // z^(2i+1)
        let mut sum = Rat::zero();
        let mut i: u64 = 0;
        loop {
            let contrib = &term / Rat::from_integer(BigInt::from(2 * i + 1));
            sum = if up {
                dyadic_ceil(&(sum + contrib), work)
            } else {
                dyadic_floor(&(sum + contrib), work)
            };
            term *= &zz2;
            i += 1;
            if &term / Rat::from_integer(BigInt::from(2 * i + 1)) < eps {
                break;
            }
        }
        if up {
            // geometric tail: sum_{j>=i} z^(2j+1)/(2j+1) <= z^(2i+1)/((2i+1)(1-z^2))
            let tail = &term
                / (Rat::from_integer(BigInt::from(2 * i + 1)) * (Rat::one() - &zz2));
            dyadic_ceil(&(sum + tail), work)
        } else {
            sum
        }
    };

    (sum_dir(&z_lo, false), sum_dir(&z_hi, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat_to_f64;

    fn r(s: &str) -> Rat {
        parse_rat(s).unwrap()
    }

    #[test]
    fn constant_family() {
        let spec = PsiSpec::constant(r("1/28"));
        let v = psi_eval(&spec, &BigInt::from(12345), None).unwrap();
        assert_eq!(v.value, r("1/28"));
        assert_eq!(v.lower, r("1/28"));
        assert_eq!(v.upper, r("1/28"));
    }

    #[test]
    fn constant_inadmissible() {
        // 1/20 = 0.05 > (9 - sqrt2)/162 ~ 0.046824
        let err = PsiSpec::constant(r("1/20")).validate().unwrap_err();
        assert!(matches!(err, PsiError::InadmissibleSpec(_)));
        // boundary from the other side: 0.0468 < threshold is fine
        PsiSpec::constant(r("468/10000")).validate().unwrap();
        // and just above: 0.0469 > threshold
        assert!(PsiSpec::constant(r("469/10000")).validate().is_err());
    }

    #[test]
    fn power_decay_example() {
        // c = 1/28, exponent 1/2, argument 10: psi = (1/28) * 10^(-1/2)
        let spec = PsiSpec::power_decay(r("1/28"), r("1/2"));
        let v = psi_eval(&spec, &BigInt::from(100), None).unwrap();
        // reference: 1/(28*sqrt(10)) = 0.011293848786315641...
        assert!(v.value > r("112/10000") && v.value < r("113/10000"));
        assert!(v.lower <= v.value && v.value <= v.upper);
        // enclosure straddles the true value: check against a finer
        // independent bracket of 10^(1/2)
        let (slo, shi) = sqrt_enclosure(&r("10"), 300);
        let (tru_lo, tru_hi) = (r("1/28") / shi, r("1/28") / slo);
        assert!(v.lower <= tru_lo && tru_hi <= v.upper);
        // width certificate
        assert!((&v.upper - &v.lower) * Rat::from_integer(BigInt::one() << 32) <= v.upper);
    }

    #[test]
    fn staircase_monotone() {
        let spec = PsiSpec::power_decay(r("1/28"), r("1/4"));
        let mut prev: Option<PsiValue> = None;
        let mut last = r("1");
        for s in [1u64, 2, 5, 9, 10, 50, 1000, 12345] {
            let v = psi_eval(&spec, &BigInt::from(s), prev.as_ref()).unwrap();
            assert!(v.value <= last);
            assert!(v.value.is_positive());
            // snapped value has at most 64 fractional bits or is the exact endpoint
            last = v.value.clone();
            prev = Some(v);
        }
    }

    #[test]
    fn ln_enclosure_reference() {
        // ln 2 = 0.6931471805599453...
        let (lo, hi) = ln_enclosure(&r("2"), 96);
        assert!(lo <= hi);
        assert!((rat_to_f64(&lo) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((rat_to_f64(&hi) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(lo < r("6931471806/10000000000") && hi > r("6931471805/10000000000"));
        // ln 10 = 2.302585092994046...
        let (lo, hi) = ln_enclosure(&r("10"), 96);
        assert!(lo < r("2302585093/1000000000") && hi > r("2302585092/1000000000"));
        // ln 1 = 0
        let (lo, hi) = ln_enclosure(&r("1"), 96);
        assert!(lo.is_zero() || lo.is_negative());
        assert!(!hi.is_negative());
        // width shrinks with bits
        let (lo, hi) = ln_enclosure(&r("7/3"), 200);
        assert!((hi - lo) < Rat::new(BigInt::one(), BigInt::one() << 190));
    }

    #[test]
    fn log_reciprocal_eval() {
        // psi(t) = (1/25) / ln(3 + t); at t = 1: 1/(25 ln 4) ~ 0.028854
        let spec = PsiSpec::log_reciprocal(r("1/25"), r("3"));
        spec.validate().unwrap();
        let v = psi_eval(&spec, &BigInt::one(), None).unwrap();
        assert!(v.value > r("288/10000") && v.value < r("289/10000"));
        // at t = 10 (sq_norm 100): 1/(25 ln 13) ~ 0.0155945
        let v = psi_eval(&spec, &BigInt::from(100), None).unwrap();
        assert!(v.value > r("1559/100000") && v.value < r("1560/100000"));
    }

    #[test]
    fn log_reciprocal_inadmissible() {
        // c = 1/10, shift = 1: psi(1) = 1/(10 ln 2) ~ 0.1443 > threshold
        let err = PsiSpec::log_reciprocal(r("1/10"), r("1")).validate().unwrap_err();
        assert!(matches!(err, PsiError::InadmissibleSpec(_)));
    }

    #[test]
    fn inline_parsing() {
        let s = PsiSpec::parse_inline("constant:1/28").unwrap();
        assert_eq!(s, PsiSpec::constant(r("1/28")));
        let s = PsiSpec::parse_inline("power:1/28:1/4").unwrap();
        assert_eq!(s, PsiSpec::power_decay(r("1/28"), r("1/4")));
        let s = PsiSpec::parse_inline("log:1/25:3").unwrap();
        assert_eq!(s, PsiSpec::log_reciprocal(r("1/25"), r("3")));
        assert!(PsiSpec::parse_inline("constant:1/20").is_err());
        assert!(PsiSpec::parse_inline("nope").is_err());
    }

    #[test]
    fn json_roundtrip() {
        let s = PsiSpec::power_decay(r("1/28"), r("1/4"));
        let j = serde_json::to_string(&s).unwrap();
        assert!(j.contains("\"power-decay\""));
        let back: PsiSpec = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
        let c: PsiSpec = serde_json::from_str(r#"{"kind":"constant","c":"1/28"}"#).unwrap();
        assert_eq!(c, PsiSpec::constant(r("1/28")));
    }
}

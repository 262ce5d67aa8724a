//! Exact rational scalars and their text form.
//!
//! Rationals travel through JSON as strings such as `"3/2"`, `"-7"` or
//! `"0.125"`; bare JSON integers are accepted as shorthand.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Rat = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse {input:?} as an exact rational")]
pub struct ParseRatError {
    pub input: String,
}

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `a`, `a/b` or a finite decimal `a.bcd` (optionally with an exponent).
pub fn parse_rat(s: &str) -> Result<Rat, ParseRatError> {
    let err = || ParseRatError { input: s.to_string() };
    let t = s.trim();
    if t.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = t.split_once('/') {
        let n = BigInt::from_str(num.trim()).map_err(|_| err())?;
        let d = BigInt::from_str(den.trim()).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rat::new(n, d));
    }
    if let Ok(n) = BigInt::from_str(t) {
        return Ok(Rat::from_integer(n));
    }
    parse_decimal(t).ok_or_else(err)
}

fn parse_decimal(t: &str) -> Option<Rat> {
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(pos) => (&t[..pos], t[pos + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (negative, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = Rat::from_integer(BigInt::from_str(&digits).ok()?);
    let scale = exponent - frac_part.len() as i32;
    let ten = Rat::from_integer(BigInt::from(10));
    let factor = num_traits::pow(ten, scale.unsigned_abs() as usize);
    if scale >= 0 {
        value *= factor;
    } else {
        value /= factor;
    }
    Some(if negative { -value } else { value })
}

pub fn format_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Very large numerators/denominators: fall back to a scaled division.
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Closest rational with a power-of-two denominator; exact for every finite f64.
pub fn from_f64(x: f64) -> Option<Rat> {
    Rat::from_float(x)
}

pub fn rat_min(a: &Rat, b: &Rat) -> Rat {
    if a <= b { a.clone() } else { b.clone() }
}

pub fn rat_max(a: &Rat, b: &Rat) -> Rat {
    if a >= b { a.clone() } else { b.clone() }
}

/// Serde adapter wrapping a [`Rat`] so it reads and writes the string form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RatStr(pub Rat);

impl fmt::Display for RatStr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rat(&self.0))
    }
}

impl Serialize for RatStr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rat(&self.0))
    }
}

impl<'de> Deserialize<'de> for RatStr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct RatVisitor;
        impl Visitor<'_> for RatVisitor {
            type Value = RatStr;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an exact rational string like \"3/2\" or an integer")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<RatStr, E> {
                parse_rat(v).map(RatStr).map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<RatStr, E> {
                Ok(RatStr(rat(v)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<RatStr, E> {
                Ok(RatStr(Rat::from_integer(BigInt::from(v))))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<RatStr, E> {
                Err(E::custom(format!(
                    "floating point literal {v} is not exact; quote it as a string"
                )))
            }
        }
        d.deserialize_any(RatVisitor)
    }
}

/// `#[serde(with = "crate::rational::serde_rat")]` for bare `Rat` fields.
pub mod serde_rat {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rat(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        RatStr::deserialize(d).map(|r| r.0)
    }
}

pub mod serde_rat_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rat], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|r| RatStr(r.clone())))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rat>, D::Error> {
        Vec::<RatStr>::deserialize(d).map(|v| v.into_iter().map(|r| r.0).collect())
    }
}

pub mod serde_rat_matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &[Vec<Rat>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<RatStr>> = m
            .iter()
            .map(|row| row.iter().map(|r| RatStr(r.clone())).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Rat>>, D::Error> {
        Vec::<Vec<RatStr>>::deserialize(d)
            .map(|m| m.into_iter().map(|row| row.into_iter().map(|r| r.0).collect()).collect())
    }
}

/// Integer matrices as JSON numbers (strings when beyond 64 bits).
pub mod serde_int_matrix {
    use super::*;
    use serde::ser::SerializeSeq;

    pub(super) struct Row<'a>(pub(super) &'a [BigInt]);

    impl Serialize for Row<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(self.0.len()))?;
            for x in self.0 {
                match x.to_i64() {
                    Some(v) => seq.serialize_element(&v)?,
                    None => seq.serialize_element(&x.to_string())?,
                }
            }
            seq.end()
        }
    }

    pub fn serialize<S: Serializer>(m: &[Vec<BigInt>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.iter().map(|r| Row(r)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<BigInt>>, D::Error> {
        let m = Vec::<Vec<RatStr>>::deserialize(d)?;
        m.into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|r| {
                        if r.0.is_integer() {
                            Ok(r.0.to_integer())
                        } else {
                            Err(de::Error::custom(format!("expected an integer, got {}", r)))
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

pub mod serde_opt_rat {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Option<Rat>, s: S) -> Result<S::Ok, S::Error> {
        r.as_ref().map(|r| RatStr(r.clone())).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rat>, D::Error> {
        Option::<RatStr>::deserialize(d).map(|r| r.map(|r| r.0))
    }
}

pub mod serde_opt_rat_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<Vec<Rat>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|v| v.iter().map(|r| RatStr(r.clone())).collect::<Vec<_>>()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Rat>>, D::Error> {
        Option::<Vec<RatStr>>::deserialize(d).map(|v| v.map(|v| v.into_iter().map(|r| r.0).collect()))
    }
}

/// Integer vectors with the same number-or-string convention as [`serde_int_matrix`].
pub mod serde_int_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        serde_int_matrix::Row(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        let v = Vec::<RatStr>::deserialize(d)?;
        v.into_iter()
            .map(|r| {
                if r.0.is_integer() {
                    Ok(r.0.to_integer())
                } else {
                    Err(de::Error::custom(format!("expected an integer, got {}", r)))
                }
            })
            .collect()
    }
}

pub mod serde_opt_int_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<Vec<BigInt>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|v| serde_int_matrix::Row(v)).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<BigInt>>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super::serde_int_vec")] Vec<BigInt>);
        Option::<Wrap>::deserialize(d).map(|v| v.map(|w| w.0))
    }
}

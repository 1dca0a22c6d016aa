//! Exact scalar arithmetic: arbitrary-precision integers and rationals.
//!
//! Rationals serialize as canonical `"p/q"` strings (`"0/1"` for zero);
//! integers serialize as plain JSON numbers of arbitrary precision.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::str::FromStr;

pub type Int = BigInt;
pub type Rat = BigRational;

pub fn int(v: i64) -> Int {
    Int::from(v)
}

pub fn rat(v: i64) -> Rat {
    Rat::from_integer(int(v))
}

pub fn rat_fr(p: i64, q: i64) -> Rat {
    Rat::new(int(p), int(q))
}

pub fn rat_of(v: &Int) -> Rat {
    Rat::from_integer(v.clone())
}

/// Floor of a rational as an integer.
pub fn rat_floor(r: &Rat) -> Int {
    r.numer().div_floor(r.denom())
}

/// Ceiling of a rational as an integer.
pub fn rat_ceil(r: &Rat) -> Int {
    r.numer().div_ceil(r.denom())
}

/// Mathematical (non-negative) remainder of `v` modulo `m`, for `m >= 1`.
pub fn rem_euclid(v: &Int, m: u64) -> u64 {
    let m_int = Int::from(m);
    let r = v.mod_floor(&m_int);
    let (_, digits) = r.to_u64_digits();
    match digits.len() {
        0 => 0,
        1 => digits[0],
        _ => unreachable!("remainder below modulus"),
    }
}

pub fn lcm_u64(a: u64, b: u64) -> u64 {
    a / a.gcd(&b) * b
}

/// Canonical `"p/q"` rendering, `"0/1"` for zero.
pub fn rat_to_string(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn rat_from_str(s: &str) -> Result<Rat, String> {
    let (p, q) = s
        .split_once('/')
        .ok_or_else(|| format!("malformed rational {s:?}: expected \"p/q\""))?;
    let p = BigInt::from_str(p).map_err(|e| format!("bad numerator {p:?}: {e}"))?;
    let q = BigInt::from_str(q).map_err(|e| format!("bad denominator {q:?}: {e}"))?;
    if !q.is_positive() {
        return Err(format!("denominator must be positive in {s:?}"));
    }
    Ok(Rat::new(p, q))
}

pub fn serialize_rat<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&rat_to_string(r))
}

pub fn deserialize_rat<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
    let s = String::deserialize(d)?;
    rat_from_str(&s).map_err(D::Error::custom)
}

/// Serialize an [`Int`] as an arbitrary-precision JSON number.
pub fn serialize_int<S: Serializer>(v: &Int, s: S) -> Result<S::Ok, S::Error> {
    let n = serde_json::Number::from_str(&v.to_string())
        .map_err(<S::Error as serde::ser::Error>::custom)?;
    n.serialize(s)
}

pub fn deserialize_int<'de, D: Deserializer<'de>>(d: D) -> Result<Int, D::Error> {
    let n = serde_json::Number::deserialize(d)?;
    BigInt::from_str(&n.to_string()).map_err(D::Error::custom)
}

/// A vector of [`Int`] with the same JSON number encoding.
pub fn serialize_int_vec<S: Serializer>(v: &[Int], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        let n = serde_json::Number::from_str(&x.to_string())
            .map_err(<S::Error as serde::ser::Error>::custom)?;
        seq.serialize_element(&n)?;
    }
    seq.end()
}

pub fn deserialize_int_vec<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Int>, D::Error> {
    let ns = Vec::<serde_json::Number>::deserialize(d)?;
    ns.iter()
        .map(|n| BigInt::from_str(&n.to_string()).map_err(D::Error::custom))
        .collect()
}

pub fn is_one(r: &Rat) -> bool {
    r.is_one()
}

pub fn is_zero(r: &Rat) -> bool {
    r.is_zero()
}

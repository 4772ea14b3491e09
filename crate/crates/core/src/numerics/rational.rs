use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact fraction. `num_rational` keeps every value reduced with a positive
/// denominator after each operation.
pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn frac(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn half() -> Rational {
    frac(1, 2)
}

pub fn is_integral(v: &Rational) -> bool {
    v.denom().is_one()
}

pub fn is_binary(v: &Rational) -> bool {
    v.is_zero() || v.is_one()
}

/// Reduced denominator as a machine integer (saturating at `u64::MAX`).
pub fn denominator_u64(v: &Rational) -> u64 {
    v.denom().to_u64().unwrap_or(u64::MAX)
}

/// Parses `"3"`, `"-7/4"` or `"0.5"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse {
        line: 0,
        msg: format!("not a rational: {s:?}"),
    };
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        if fp.is_empty() || !fp.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = ip.starts_with('-');
        let ip_abs: BigInt = if ip.is_empty() || ip == "-" {
            BigInt::zero()
        } else {
            ip.trim_start_matches('-').parse().map_err(|_| bad())?
        };
        let fnum: BigInt = fp.parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), fp.len());
        let mag = Rational::new(ip_abs * &scale + fnum, scale);
        return Ok(if neg { -mag } else { mag });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

pub fn format_rational(v: &Rational) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

/// Least common multiple of all denominators.
pub fn common_denominator<'a, I: IntoIterator<Item = &'a Rational>>(values: I) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Scales a rational vector by a positive factor to coprime integers.
/// Returns the integer vector and the factor used. All-zero input is
/// returned unchanged with factor 1.
pub fn to_coprime_integers(values: &[Rational]) -> (Vec<BigInt>, Rational) {
    let lcm = common_denominator(values);
    let ints: Vec<BigInt> = values
        .iter()
        .map(|v| (v * Rational::from_integer(lcm.clone())).to_integer())
        .collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
    if g.is_zero() {
        return (ints, Rational::one());
    }
    let ints = ints.into_iter().map(|v| v / &g).collect();
    (ints, Rational::new(lcm, g))
}

/// JSON wire form `{"num": .., "den": ..}`. Components are JSON integers
/// when they fit in 64 bits and decimal strings otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalJson {
    pub num: JsonInt,
    pub den: JsonInt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonInt {
    Small(i64),
    Big(String),
}

impl JsonInt {
    pub fn from_bigint(v: &BigInt) -> Self {
        match v.to_i64() {
            Some(s) => JsonInt::Small(s),
            None => JsonInt::Big(v.to_string()),
        }
    }

    pub fn to_bigint(&self) -> Result<BigInt> {
        match self {
            JsonInt::Small(v) => Ok(BigInt::from(*v)),
            JsonInt::Big(s) => s.parse().map_err(|_| Error::Parse {
                line: 0,
                msg: format!("bad integer {s:?}"),
            }),
        }
    }
}

impl From<&Rational> for RationalJson {
    fn from(v: &Rational) -> Self {
        RationalJson {
            num: JsonInt::from_bigint(v.numer()),
            den: JsonInt::from_bigint(v.denom()),
        }
    }
}

impl RationalJson {
    pub fn to_rational(&self) -> Result<Rational> {
        let den = self.den.to_bigint()?;
        if den.is_zero() || den.is_negative() {
            return Err(Error::Parse {
                line: 0,
                msg: "denominator must be positive".into(),
            });
        }
        Ok(Rational::new(self.num.to_bigint()?, den))
    }
}

/// Rational vectors in input files may be written either as `{"num","den"}`
/// objects, as strings like `"1/2"`, or as plain integers.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RationalInput {
    Object(RationalJson),
    Text(String),
    Int(i64),
}

impl RationalInput {
    pub fn to_rational(&self) -> Result<Rational> {
        match self {
            RationalInput::Object(o) => o.to_rational(),
            RationalInput::Text(s) => parse_rational(s),
            RationalInput::Int(v) => Ok(int(*v)),
        }
    }
}

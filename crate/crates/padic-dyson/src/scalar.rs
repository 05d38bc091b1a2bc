//! Truncated exact arithmetic in `Q_p` with certified valuations.
//!
//! A nonzero element is stored as `p^valuation * (d_0 + d_1 p + ...)` with
//! `d_0 != 0`, so the valuation is always certain and the unit part is known
//! modulo `p^precision`. Additions that cancel every representable digit do
//! not silently return zero; they return [`ZeroAtPrecision`] carrying the
//! valuation lower bound the computation still certifies.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trial-division primality check; primes in this crate are desk-scale.
pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Result of a sum that cancelled below the representable window: the value
/// is indistinguishable from 0, but is certified divisible by
/// `p^certified_min_valuation`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroAtPrecision {
    pub prime: u64,
    pub certified_min_valuation: i64,
}

/// Outcome of an addition: either a scalar with certified valuation, or
/// total cancellation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sum {
    Value(PAdicScalar),
    Cancelled(ZeroAtPrecision),
}

impl Sum {
    pub fn value(self) -> Result<PAdicScalar> {
        match self {
            Sum::Value(s) => Ok(s),
            Sum::Cancelled(z) => Err(Error::PrecisionExhausted(format!(
                "sum cancelled below precision (valuation >= {})",
                z.certified_min_valuation
            ))),
        }
    }
}

/// A truncated element of `Q_p`: `p^valuation` times a unit known modulo
/// `p^precision`. `valuation == None` encodes exact zero (valuation infinity).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PAdicScalar {
    prime: u64,
    valuation: Option<i64>,
    digits: Vec<u32>,
    precision: usize,
}

impl PAdicScalar {
    pub fn new(prime: u64, valuation: i64, digits: Vec<u32>, precision: usize) -> Result<Self> {
        if !is_prime(prime) {
            return Err(Error::NotPrime(prime));
        }
        if precision == 0 {
            return Err(Error::InvalidInput("precision must be >= 1".into()));
        }
        if digits.len() != precision {
            return Err(Error::InvalidInput(format!(
                "mantissa has {} digits, precision is {}",
                digits.len(),
                precision
            )));
        }
        if digits[0] == 0 {
            return Err(Error::InvalidInput("mantissa must be a unit (d_0 != 0)".into()));
        }
        if digits.iter().any(|&d| d as u64 >= prime) {
            return Err(Error::InvalidInput("digit out of range".into()));
        }
        Ok(PAdicScalar { prime, valuation: Some(valuation), digits, precision })
    }

    /// Exact zero (valuation infinity).
    pub fn zero(prime: u64, precision: usize) -> Self {
        PAdicScalar { prime, valuation: None, digits: Vec::new(), precision }
    }

    pub fn one(prime: u64, precision: usize) -> Self {
        let mut digits = vec![0u32; precision];
        digits[0] = 1;
        PAdicScalar { prime, valuation: Some(0), digits, precision }
    }

    /// `p^k` as an exact scalar with unit 1.
    pub fn p_power(prime: u64, k: i64, precision: usize) -> Self {
        let mut digits = vec![0u32; precision];
        digits[0] = 1;
        PAdicScalar { prime, valuation: Some(k), digits, precision }
    }

    /// Canonical representation of an integer; 0 maps to valuation infinity.
    pub fn from_integer(k: i64, prime: u64, precision: usize) -> Result<Self> {
        if !is_prime(prime) {
            return Err(Error::NotPrime(prime));
        }
        if precision == 0 {
            return Err(Error::InvalidInput("precision must be >= 1".into()));
        }
        if k == 0 {
            return Ok(Self::zero(prime, precision));
        }
        let mut mag = (k.unsigned_abs()) as u128;
        let mut val = 0i64;
        while mag % prime as u128 == 0 {
            mag /= prime as u128;
            val += 1;
        }
        let mut unit = BigUint::from(mag);
        let modulus = BigUint::from(prime).pow(precision as u32);
        unit %= &modulus;
        if k < 0 {
            unit = &modulus - unit;
        }
        let digits = digits_of(&unit, prime, precision);
        debug_assert!(digits[0] != 0);
        Ok(PAdicScalar { prime, valuation: Some(val), digits, precision })
    }

    /// Normalizes a residue known modulo `p^(base_valuation + window)` into a
    /// scalar `p^(base_valuation + k) * unit`, or total cancellation if every
    /// representable digit is zero.
    pub fn from_residue(prime: u64, base_valuation: i64, residue: &BigUint, window: usize) -> Sum {
        let modulus = BigUint::from(prime).pow(window as u32);
        let residue = residue % &modulus;
        if residue.is_zero() {
            return Sum::Cancelled(ZeroAtPrecision {
                prime,
                certified_min_valuation: base_valuation + window as i64,
            });
        }
        let all = digits_of(&residue, prime, window);
        let k = all.iter().position(|&d| d != 0).expect("nonzero residue");
        let digits: Vec<u32> = all[k..].to_vec();
        Sum::Value(PAdicScalar {
            prime,
            valuation: Some(base_valuation + k as i64),
            precision: digits.len(),
            digits,
        })
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    /// Certified valuation; `None` means exact zero (valuation infinity).
    pub fn valuation(&self) -> Option<i64> {
        self.valuation
    }

    pub fn is_zero(&self) -> bool {
        self.valuation.is_none()
    }

    /// True iff this is a unit of `Z_p` (valuation 0).
    pub fn is_unit(&self) -> bool {
        self.valuation == Some(0)
    }

    pub fn precision(&self) -> usize {
        self.precision
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    /// Unit mantissa as an integer `d_0 + d_1 p + ...`.
    pub fn unit(&self) -> BigUint {
        let mut acc = BigUint::zero();
        let p = BigUint::from(self.prime);
        for &d in self.digits.iter().rev() {
            acc = acc * &p + BigUint::from(d);
        }
        acc
    }

    /// Multiply by `p^k` (exact).
    pub fn shift(&self, k: i64) -> Self {
        let mut out = self.clone();
        out.valuation = self.valuation.map(|v| v + k);
        out
    }

    pub fn add(&self, other: &Self) -> Result<Sum> {
        if self.prime != other.prime {
            return Err(Error::PrimeMismatch(self.prime, other.prime));
        }
        match (self.valuation, other.valuation) {
            (None, None) => Ok(Sum::Value(Self::zero(self.prime, self.precision.min(other.precision)))),
            (None, Some(_)) => Ok(Sum::Value(other.clone())),
            (Some(_), None) => Ok(Sum::Value(self.clone())),
            (Some(va), Some(vb)) => {
                let base = va.min(vb);
                // each operand is known modulo p^(val + prec)
                let end = (va + self.precision as i64).min(vb + other.precision as i64);
                let window = (end - base) as usize;
                let p = BigUint::from(self.prime);
                let ra = self.unit() * p.pow((va - base) as u32);
                let rb = other.unit() * p.pow((vb - base) as u32);
                Ok(Self::from_residue(self.prime, base, &(ra + rb), window))
            }
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Sum> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        match self.valuation {
            None => self.clone(),
            Some(v) => {
                let modulus = BigUint::from(self.prime).pow(self.precision as u32);
                let unit = &modulus - self.unit();
                let digits = digits_of(&unit, self.prime, self.precision);
                PAdicScalar { prime: self.prime, valuation: Some(v), digits, precision: self.precision }
            }
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.prime != other.prime {
            return Err(Error::PrimeMismatch(self.prime, other.prime));
        }
        let prec = self.precision.min(other.precision);
        match (self.valuation, other.valuation) {
            (Some(va), Some(vb)) => {
                let modulus = BigUint::from(self.prime).pow(prec as u32);
                let unit = (self.unit() * other.unit()) % &modulus;
                let digits = digits_of(&unit, self.prime, prec);
                debug_assert!(digits[0] != 0);
                Ok(PAdicScalar { prime: self.prime, valuation: Some(va + vb), digits, precision: prec })
            }
            _ => Ok(Self::zero(self.prime, prec)),
        }
    }

    /// Multiplicative inverse to the stored precision.
    pub fn inv(&self) -> Result<Self> {
        let v = self.valuation.ok_or(Error::DivisionByZero)?;
        let modulus = BigInt::from(BigUint::from(self.prime).pow(self.precision as u32));
        let unit = BigInt::from(self.unit());
        let ext = unit.extended_gcd(&modulus);
        debug_assert!(ext.gcd.is_one());
        let mut inv = ext.x % &modulus;
        if inv.is_negative() {
            inv += &modulus;
        }
        let inv = inv.to_biguint().expect("nonnegative");
        let digits = digits_of(&inv, self.prime, self.precision);
        Ok(PAdicScalar { prime: self.prime, valuation: Some(-v), digits, precision: self.precision })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        self.mul(&other.inv()?)
    }

    /// Digitwise equality at the minimum shared certified precision.
    pub fn congruent(&self, other: &Self) -> bool {
        if self.prime != other.prime {
            return false;
        }
        match (self.valuation, other.valuation) {
            (None, None) => true,
            (Some(va), Some(vb)) => {
                let base = va.min(vb);
                let end = (va + self.precision as i64).min(vb + other.precision as i64);
                if end <= base {
                    return true; // no shared window to compare
                }
                let window = (end - base) as u32;
                let p = BigUint::from(self.prime);
                let modulus = p.pow(window);
                let ra = (self.unit() * p.pow((va - base) as u32)) % &modulus;
                let rb = (other.unit() * p.pow((vb - base) as u32)) % &modulus;
                ra == rb
            }
            // zero vs nonzero: congruent only if the nonzero value sits past
            // the zero side's certainty -- exact zero is certain everywhere.
            _ => false,
        }
    }
}

fn digits_of(x: &BigUint, prime: u64, len: usize) -> Vec<u32> {
    let p = BigUint::from(prime);
    let mut rem = x.clone();
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let (q, r) = rem.div_rem(&p);
        out.push(r.to_u32().expect("digit fits"));
        rem = q;
    }
    out
}

// JSON encoding: {"p": int, "val": int|"inf", "digits": [int,...], "prec": int}

#[derive(Serialize, Deserialize)]
struct ScalarJson {
    p: u64,
    val: ValJson,
    digits: Vec<u32>,
    prec: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ValJson {
    Finite(i64),
    Inf(String),
}

impl Serialize for PAdicScalar {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let val = match self.valuation {
            Some(v) => ValJson::Finite(v),
            None => ValJson::Inf("inf".into()),
        };
        ScalarJson { p: self.prime, val, digits: self.digits.clone(), prec: self.precision }
            .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for PAdicScalar {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let raw = ScalarJson::deserialize(de)?;
        match raw.val {
            ValJson::Finite(v) => PAdicScalar::new(raw.p, v, raw.digits, raw.prec)
                .map_err(|e| D::Error::custom(e.to_string())),
            ValJson::Inf(s) if s == "inf" => {
                if !raw.digits.is_empty() {
                    return Err(D::Error::custom("zero scalar must have empty mantissa"));
                }
                Ok(PAdicScalar::zero(raw.p, raw.prec))
            }
            ValJson::Inf(s) => Err(D::Error::custom(format!("bad valuation {s:?}"))),
        }
    }
}

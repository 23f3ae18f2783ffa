//! Exact dyadic-rational domain points.
//!
//! A [`DyadicVector`] is a list of integer numerators sharing one power-of-two
//! exponent. Doubling and halving only touch the exponent, so the scalings
//! `2ⁿx` and `x/2ⁿ` used by both iteration branches never round.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Largest admissible magnitude of the shared exponent.
pub const MAX_EXPONENT: i64 = 1024;

/// A single exact dyadic rational `num · 2^exp`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: BigInt,
    exp: i64,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic {
            num: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn new(num: BigInt, exp: i64) -> Self {
        let mut d = Dyadic { num, exp };
        d.normalize();
        d
    }

    /// Exact conversion of a finite `f64`.
    pub fn from_f64(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Parse(format!("non-finite value {value}")));
        }
        if value == 0.0 {
            return Ok(Dyadic::zero());
        }
        let bits = value.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        Ok(Dyadic::new(BigInt::from(sign) * BigInt::from(mant), exp))
    }

    pub fn numerator(&self) -> &BigInt {
        &self.num
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.num.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.num >>= tz as usize;
            self.exp += tz as i64;
        }
    }

    pub fn add(&self, other: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(other.exp);
        let a = &self.num << (self.exp - e) as usize;
        let b = &other.num << (other.exp - e) as usize;
        Dyadic::new(a + b, e)
    }

    pub fn mul(&self, other: &Dyadic) -> Dyadic {
        Dyadic::new(&self.num * &other.num, self.exp + other.exp)
    }

    pub fn mul_int(&self, k: i64) -> Dyadic {
        Dyadic::new(&self.num * BigInt::from(k), self.exp)
    }

    /// Nearest `f64`, overflow reported as an error.
    pub fn to_f64(&self) -> Result<f64> {
        bigint_ldexp(&self.num, self.exp)
    }
}

/// A point of the domain: `numerators · 2^exponent`, always kept canonical.
///
/// Canonical means: the zero vector has exponent 0; otherwise at least one
/// numerator is odd. Structural equality is therefore value equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DyadicVector {
    nums: Vec<BigInt>,
    exp: i64,
}

impl DyadicVector {
    /// Builds and canonicalizes `nums · 2^exp`.
    pub fn new(nums: Vec<BigInt>, exp: i64) -> Result<Self> {
        if nums.is_empty() {
            return Err(Error::Parse("a point needs at least one coordinate".into()));
        }
        let mut v = DyadicVector { nums, exp };
        v.normalize();
        v.check_range()?;
        Ok(v)
    }

    pub fn from_integers(values: &[i64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| BigInt::from(v)).collect(), 0)
    }

    /// Builds a vector from per-coordinate `(numerator, exponent)` pairs.
    pub fn from_parts(parts: &[(i64, i64)]) -> Result<Self> {
        let coords: Vec<Dyadic> = parts
            .iter()
            .map(|&(n, e)| Dyadic::new(BigInt::from(n), e))
            .collect();
        Self::from_coords(&coords)
    }

    pub fn from_coords(coords: &[Dyadic]) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Parse("a point needs at least one coordinate".into()));
        }
        let e = coords
            .iter()
            .filter(|c| !c.is_zero())
            .map(|c| c.exp)
            .min()
            .unwrap_or(0);
        let nums = coords
            .iter()
            .map(|c| {
                if c.is_zero() {
                    BigInt::zero()
                } else {
                    &c.num << (c.exp - e) as usize
                }
            })
            .collect();
        Self::new(nums, e)
    }

    pub fn zeros(dim: usize) -> Self {
        DyadicVector {
            nums: vec![BigInt::zero(); dim.max(1)],
            exp: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.nums.len()
    }

    pub fn numerators(&self) -> &[BigInt] {
        &self.nums
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.nums.iter().all(Zero::is_zero)
    }

    pub fn coord(&self, i: usize) -> Dyadic {
        Dyadic::new(self.nums[i].clone(), self.exp)
    }

    fn normalize(&mut self) {
        if self.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self
            .nums
            .iter()
            .filter_map(|n| n.trailing_zeros())
            .min()
            .unwrap_or(0);
        if tz > 0 {
            for n in &mut self.nums {
                *n >>= tz as usize;
            }
            self.exp += tz as i64;
        }
    }

    fn check_range(&self) -> Result<()> {
        if self.exp.abs() > MAX_EXPONENT {
            Err(Error::ExponentRange {
                exponent: self.exp,
                limit: MAX_EXPONENT,
            })
        } else {
            Ok(())
        }
    }

    fn check_dim(&self, other: &DyadicVector) -> Result<()> {
        if self.dim() != other.dim() {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            })
        } else {
            Ok(())
        }
    }

    /// `2^k · self`, exact. Fails only when the exponent leaves ±[`MAX_EXPONENT`].
    pub fn scale_pow2(&self, k: i64) -> Result<Self> {
        if self.is_zero() {
            return Ok(self.clone());
        }
        let v = DyadicVector {
            nums: self.nums.clone(),
            exp: self.exp + k,
        };
        v.check_range()?;
        Ok(v)
    }

    fn combine(&self, other: &DyadicVector, negate: bool) -> Result<Self> {
        self.check_dim(other)?;
        let e = self.exp.min(other.exp);
        let sa = (self.exp - e) as usize;
        let sb = (other.exp - e) as usize;
        let nums = self
            .nums
            .iter()
            .zip(&other.nums)
            .map(|(a, b)| {
                let a = a << sa;
                let b = b << sb;
                if negate {
                    a - b
                } else {
                    a + b
                }
            })
            .collect();
        Self::new(nums, e)
    }

    pub fn add(&self, other: &DyadicVector) -> Result<Self> {
        self.combine(other, false)
    }

    pub fn sub(&self, other: &DyadicVector) -> Result<Self> {
        self.combine(other, true)
    }

    pub fn neg(&self) -> Self {
        DyadicVector {
            nums: self.nums.iter().map(|n| -n).collect(),
            exp: self.exp,
        }
    }

    /// Concatenation `(self ‖ other)`, canonicalized.
    pub fn concat(&self, other: &DyadicVector) -> Result<Self> {
        let mut coords: Vec<Dyadic> = (0..self.dim()).map(|i| self.coord(i)).collect();
        coords.extend((0..other.dim()).map(|i| other.coord(i)));
        Self::from_coords(&coords)
    }

    /// Nearest-float coordinates.
    pub fn to_real(&self) -> Result<Vec<f64>> {
        self.nums
            .iter()
            .map(|n| bigint_ldexp(n, self.exp))
            .collect()
    }

    /// `√(Σ coordᵢ²)` of the real coordinates.
    pub fn euclidean_norm(&self) -> Result<f64> {
        let coords = self.to_real()?;
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm.is_finite() {
            Ok(norm)
        } else {
            // Squares overflowed; rescale.
            let m = coords.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
            Ok(m * coords.iter().map(|c| (c / m) * (c / m)).sum::<f64>().sqrt())
        }
    }

    /// Byte encoding of the canonical form, stable across platforms.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.nums.len());
        out.extend_from_slice(&self.exp.to_le_bytes());
        out.extend_from_slice(&(self.nums.len() as u64).to_le_bytes());
        for n in &self.nums {
            let bytes = n.to_signed_bytes_le();
            out.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
            out.extend_from_slice(&bytes);
        }
        out
    }
}

fn write_coord(f: &mut fmt::Formatter<'_>, c: &Dyadic) -> fmt::Result {
    if c.exp >= 0 {
        write!(f, "{}", &c.num << c.exp as usize)
    } else {
        write!(f, "{}/2^{}", c.num, -c.exp)
    }
}

impl fmt::Display for DyadicVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim() {
            if i > 0 {
                write!(f, ",")?;
            }
            write_coord(f, &self.coord(i))?;
        }
        Ok(())
    }
}

impl FromStr for Dyadic {
    type Err = Error;

    /// Accepts `n` or `n/2^e` (with `e` possibly negative).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("bad dyadic coordinate {s:?}, expected n or n/2^e"));
        let (num, exp) = match s.split_once('/') {
            None => (s, 0i64),
            Some((n, d)) => {
                let d = d.trim();
                let e = d.strip_prefix("2^").ok_or_else(bad)?;
                let e: i64 = e.trim().parse().map_err(|_| bad())?;
                (n.trim(), -e)
            }
        };
        let num: BigInt = num.parse().map_err(|_| bad())?;
        Ok(Dyadic::new(num, exp))
    }
}

impl FromStr for DyadicVector {
    type Err = Error;

    /// Comma-separated coordinates in the `n/2^e` syntax.
    fn from_str(s: &str) -> Result<Self> {
        let coords = s
            .split(',')
            .map(str::parse::<Dyadic>)
            .collect::<Result<Vec<_>>>()?;
        Self::from_coords(&coords)
    }
}

impl serde::Serialize for DyadicVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `x · 2^k` by exact power-of-two factors.
pub fn ldexp(mut x: f64, mut k: i64) -> f64 {
    const STEP: i64 = 1000;
    while k > STEP {
        x *= pow2(STEP as i32);
        k -= STEP;
        if x.is_infinite() {
            return x;
        }
    }
    while k < -STEP {
        x *= pow2(-STEP as i32);
        k += STEP;
        if x == 0.0 {
            return x;
        }
    }
    x * pow2(k as i32)
}

/// Exact `2^k` for `k ∈ [-1000, 1000]`.
fn pow2(k: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((k + 1023) as u64) << 52)
}

/// Correctly rounded `n · 2^e` (ties to even), except within the subnormal
/// range where a second rounding may occur.
pub fn bigint_ldexp(n: &BigInt, e: i64) -> Result<f64> {
    if n.is_zero() {
        return Ok(0.0);
    }
    let negative = n.sign() == Sign::Minus;
    let mag: BigUint = n.abs().to_biguint().expect("absolute value");
    let bits = mag.bits() as i64;
    let (mant, e) = if bits > 53 {
        let shift = (bits - 53) as usize;
        let mut q: BigUint = &mag >> shift;
        let rem: BigUint = &mag - (&q << shift);
        let half: BigUint = BigUint::one() << (shift - 1);
        if rem > half || (rem == half && q.is_odd()) {
            q += 1u32;
        }
        (q, e + shift as i64)
    } else {
        (mag, e)
    };
    let m = mant.to_f64().expect("at most 54 bits");
    let top = mant.bits() as i64 + e;
    if top > 1024 {
        return Err(Error::FloatOverflow(format!(
            "dyadic value with binary magnitude 2^{top} exceeds f64 range"
        )));
    }
    let v = ldexp(m, e);
    if v.is_infinite() {
        return Err(Error::FloatOverflow(
            "dyadic value exceeds f64 range".into(),
        ));
    }
    Ok(if negative { -v } else { v })
}

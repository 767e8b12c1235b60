//! Exact integer helpers: the iterated logarithm, bit-string codecs, the
//! suffix-free encoding and the Cole–Vishkin colour choice built on it.
//!
//! Every value here is an arbitrary-precision [`Natural`]; labels can be
//! tower-sized, so nothing may pass through floating point.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision non-negative integer.
pub type Natural = BigUint;

/// Largest tower level that is ever materialized (`tower(5) = 2^65536`).
pub const MAX_TOWER_LEVEL: u32 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericsError {
    #[error("tower({0}) is too large to materialize (max level {MAX_TOWER_LEVEL})")]
    TowerTooTall(u32),
    #[error("cv_choice needs two distinct colours, got {0} twice")]
    EqualColours(Natural),
    #[error("bit strings must be non-empty")]
    EmptyBitString,
    #[error("invalid bit character {0:?}")]
    InvalidBit(char),
}

/// `tower(0) = 1`, `tower(k) = 2^tower(k-1)`.
pub fn tower(k: u32) -> Result<Natural, NumericsError> {
    if k > MAX_TOWER_LEVEL {
        return Err(NumericsError::TowerTooTall(k));
    }
    let mut value = Natural::one();
    for _ in 0..k {
        let exp = value.to_u64().expect("tower exponent fits in u64 up to level 5");
        value = Natural::one() << exp;
    }
    Ok(value)
}

/// Iterated logarithm: 0 for `n <= 1`, otherwise the least `k` with
/// `tower(k) >= n`.
///
/// `n <= tower(k)` holds exactly when `ceil(log2 n) <= tower(k-1)`, and
/// `ceil(log2 n)` is the bit length of `n - 1`, so the recursion drops to
/// `u64` after one step.
pub fn log_star(n: &Natural) -> u32 {
    if n <= &Natural::one() {
        return 0;
    }
    let ceil_log2 = (n - 1u32).bits();
    1 + log_star_u64(ceil_log2)
}

/// [`log_star`] on a machine word.
pub fn log_star_u64(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        let ceil_log2 = u64::from(64 - (n - 1).leading_zeros());
        1 + log_star_u64(ceil_log2)
    }
}

/// Length of `binary_rep(n)`; zero is written as the single bit `0`.
pub fn bit_len(n: &Natural) -> u64 {
    n.bits().max(1)
}

/// A finite bit sequence. Index 0 is the least significant (rightmost) bit;
/// `Display`/`FromStr` use the usual MSB-first text form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    /// Builds from bits listed least significant first.
    pub fn from_lsb(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Bit at LSB-index `i`.
    pub fn get(&self, i: usize) -> Option<bool> {
        self.bits.get(i).copied()
    }

    pub fn lsb_bits(&self) -> &[bool] {
        &self.bits
    }

    /// `self · low`: `self` becomes the high part, `low` the low part.
    pub fn concat(&self, low: &BitString) -> BitString {
        let mut bits = low.bits.clone();
        bits.extend_from_slice(&self.bits);
        BitString { bits }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in self.bits.iter().rev() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = NumericsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(NumericsError::EmptyBitString);
        }
        let bits = s
            .chars()
            .rev()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(NumericsError::InvalidBit(other)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BitString { bits })
    }
}

/// Base-2 representation without leading zeros; `binary_rep(0) = "0"`.
pub fn binary_rep(n: &Natural) -> BitString {
    let len = bit_len(n);
    BitString {
        bits: (0..len).map(|i| n.bit(i)).collect(),
    }
}

/// Positional base-2 value; leading zeros are ignored.
pub fn int_val(s: &BitString) -> Natural {
    let mut value = Natural::zero();
    for (i, &b) in s.bits.iter().enumerate() {
        if b {
            value.set_bit(i as u64, true);
        }
    }
    value
}

/// Suffix-free encoding: each 0 becomes `01`, each 1 becomes `10`, then
/// `00` is prepended. Output length is `2|s| + 2`.
pub fn encode_sf(s: &BitString) -> BitString {
    let mut bits = Vec::with_capacity(2 * s.len() + 2);
    for &b in &s.bits {
        bits.push(!b);
        bits.push(b);
    }
    bits.push(false);
    bits.push(false);
    BitString { bits }
}

/// Bit `i` of `encode_sf(binary_rep(n))`, computed without materializing
/// the encoding.
fn encoded_bit(n: &Natural, len: u64, i: u64) -> bool {
    let source = i / 2;
    if source >= len {
        false
    } else if i % 2 == 1 {
        n.bit(source)
    } else {
        !n.bit(source)
    }
}

/// Least LSB-index at which `encode_sf(binary_rep(a))` and
/// `encode_sf(binary_rep(b))` differ, or `None` when `a == b`.
pub fn first_encoded_difference(a: &Natural, b: &Natural) -> Option<u64> {
    if a == b {
        return None;
    }
    let (len_a, len_b) = (bit_len(a), bit_len(b));
    let shared = len_a.min(len_b);
    let low_diff = match (a.to_u64(), b.to_u64()) {
        (Some(x), Some(y)) => u64::from((x ^ y).trailing_zeros()),
        _ => (a ^ b).trailing_zeros().unwrap_or(u64::MAX),
    };
    if low_diff < shared {
        // Both encoded positions of the first differing source bit differ;
        // the even one comes first.
        return Some(2 * low_diff);
    }
    // Equal on the shared prefix, so the lengths differ. The shorter string
    // has its `00` terminator where the longer one has `01` or `10`.
    let (longer, _) = if len_a > len_b { (a, len_a) } else { (b, len_b) };
    if longer.bit(shared) {
        Some(2 * shared + 1)
    } else {
        Some(2 * shared)
    }
}

/// Cole–Vishkin colour choice over suffix-free encodings: with `i` the first
/// differing index, returns `int_val(binary_rep(i) · my_encoded[i])`.
pub fn cv_choice(my: &Natural, other: &Natural) -> Result<Natural, NumericsError> {
    let index =
        first_encoded_difference(my, other).ok_or_else(|| NumericsError::EqualColours(my.clone()))?;
    let bit = encoded_bit(my, bit_len(my), index);
    Ok(Natural::from(index) * 2u32 + u32::from(bit))
}

//! Combinatorial skeleton of a star-network scenario with `m` central inputs
//! and `2^(m-1)` edge inputs.
//!
//! Each edge input `x` is labelled by an m-bit string; the sign matrix
//! `S[i][x]` carries the coefficient of edge observable `x` inside the i-th
//! signed combination, and the constraint family forces `2^(m-1) - m`
//! signed sums of each edge party's observables to vanish. The predicted
//! Gram matrix fixes every pairwise anticommutator as an exact rational.

use crate::error::{Error, Result};
use serde::Serialize;
use std::fmt;

/// Largest supported number of central inputs for table construction.
pub const ENCODING_M_CAP: usize = 12;

/// An m-bit label. Bit 0 is the leftmost character of the printed string
/// and selects the coefficient for central input 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<u8>,
}

impl BitString {
    /// Builds the string from a big-endian integer (leftmost bit = MSB).
    pub fn from_value(value: usize, m: usize) -> Self {
        let bits = (0..m).map(|j| ((value >> (m - 1 - j)) & 1) as u8).collect();
        BitString { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Bit at position `i` (0-based, leftmost first).
    pub fn bit(&self, i: usize) -> u8 {
        self.bits[i]
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    /// Big-endian integer value.
    pub fn value(&self) -> usize {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn complement(&self) -> Self {
        BitString {
            bits: self.bits.iter().map(|&b| 1 - b).collect(),
        }
    }

    pub fn hamming(&self, other: &Self) -> usize {
        assert_eq!(self.len(), other.len(), "length mismatch");
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// Parity of the bitwise dot product, as a sign: +1 for even, -1 for odd.
    pub fn dot_sign(&self, other: &Self) -> i8 {
        assert_eq!(self.len(), other.len(), "length mismatch");
        let parity: u8 = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| a & b)
            .fold(0, |acc, v| acc ^ v);
        if parity == 0 {
            1
        } else {
            -1
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", b)?;
        }
        Ok(())
    }
}

/// Exact rational, kept reduced with a positive denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: i64,
    pub den: i64,
}

impl Ratio {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i64;
        let sign = if den < 0 { -1 } else { 1 };
        Ratio {
            num: sign * num / g,
            den: sign * den / g,
        }
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if a == 0 && b == 0 {
        return 1;
    }
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Canonical JSON shape of an [`EncodingTable`]: bit strings as "0/1" text
/// (leftmost character = central input 1), signs as +-1 arrays, Gram entries
/// as reduced `[numerator, denominator]` pairs.
#[derive(Debug, Clone, Serialize)]
pub struct CanonicalTable {
    pub m: usize,
    pub strings: Vec<String>,
    pub signs: Vec<Vec<i8>>,
    pub constraints: Vec<String>,
    pub gram: Vec<Vec<(i64, i64)>>,
}

/// The encoding table for a scenario with `m` central inputs.
#[derive(Debug, Clone)]
pub struct EncodingTable {
    m: usize,
    strings: Vec<BitString>,
    signs: Vec<Vec<i8>>,
    constraints: Vec<BitString>,
    constraint_signs: Vec<Vec<i8>>,
    gram: Vec<Vec<Ratio>>,
}

impl EncodingTable {
    /// Builds the table for `m >= 2` central inputs.
    ///
    /// One representative is chosen from each complement pair of m-bit
    /// strings: the one of smaller Hamming weight, breaking even-m ties by
    /// requiring a leading 0. Representatives are ordered by weight, then by
    /// big-endian value. The constraint family consists of all strings of odd
    /// weight at least 3, ordered by weight then by descending value, which
    /// reproduces the known sign patterns of the small scenarios.
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Domain(format!(
                "need at least 2 central inputs, got {m}"
            )));
        }
        if m > ENCODING_M_CAP {
            return Err(Error::Resource(format!(
                "m = {m} exceeds the encoding cap {ENCODING_M_CAP}"
            )));
        }

        let mut strings: Vec<BitString> = (0..(1usize << m))
            .map(|v| BitString::from_value(v, m))
            .filter(|s| {
                let w = s.weight();
                let wc = m - w;
                w < wc || (w == wc && s.bit(0) == 0)
            })
            .collect();
        strings.sort_by_key(|s| (s.weight(), s.value()));
        debug_assert_eq!(strings.len(), 1 << (m - 1));

        let signs: Vec<Vec<i8>> = (0..m)
            .map(|i| {
                strings
                    .iter()
                    .map(|s| if s.bit(i) == 0 { 1 } else { -1 })
                    .collect()
            })
            .collect();

        let mut constraints: Vec<BitString> = (0..(1usize << m))
            .map(|v| BitString::from_value(v, m))
            .filter(|s| {
                let w = s.weight();
                w % 2 == 1 && w >= 3
            })
            .collect();
        constraints.sort_by(|a, b| {
            (a.weight(), std::cmp::Reverse(a.value())).cmp(&(b.weight(), std::cmp::Reverse(b.value())))
        });
        debug_assert_eq!(constraints.len(), (1 << (m - 1)) - m);

        let constraint_signs: Vec<Vec<i8>> = constraints
            .iter()
            .map(|s| strings.iter().map(|y| s.dot_sign(y)).collect())
            .collect();

        let n_inputs = strings.len();
        let gram: Vec<Vec<Ratio>> = (0..n_inputs)
            .map(|j| {
                (0..n_inputs)
                    .map(|j2| {
                        let p = strings[j].hamming(&strings[j2]) as i64;
                        Ratio::new(2 * m as i64 - 4 * p, m as i64)
                    })
                    .collect()
            })
            .collect();

        Ok(EncodingTable {
            m,
            strings,
            signs,
            constraints,
            constraint_signs,
            gram,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of edge-party inputs, `2^(m-1)`.
    pub fn n_inputs(&self) -> usize {
        self.strings.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn strings(&self) -> &[BitString] {
        &self.strings
    }

    /// Sign `S[i][x]` of edge input `x` in the i-th signed combination
    /// (both indices 0-based).
    pub fn sign(&self, i: usize, x: usize) -> i8 {
        self.signs[i][x]
    }

    pub fn sign_row(&self, i: usize) -> &[i8] {
        &self.signs[i]
    }

    pub fn constraints(&self) -> &[BitString] {
        &self.constraints
    }

    /// Sign `C[l][x]` of edge input `x` in the l-th constraint (0-based).
    pub fn constraint_sign(&self, l: usize, x: usize) -> i8 {
        self.constraint_signs[l][x]
    }

    pub fn constraint_row(&self, l: usize) -> &[i8] {
        &self.constraint_signs[l]
    }

    /// The set of edge inputs entering the l-th constraint with a plus sign
    /// (0-based input indices, ascending).
    pub fn constraint_membership(&self, l: usize) -> Result<Vec<usize>> {
        if l >= self.constraints.len() {
            return Err(Error::IndexOutOfRange(format!(
                "constraint {l} of {} (m = {})",
                self.constraints.len(),
                self.m
            )));
        }
        Ok((0..self.n_inputs())
            .filter(|&x| self.constraint_signs[l][x] == 1)
            .collect())
    }

    /// Predicted anticommutator value for the pair of edge inputs `(j, j2)`:
    /// `2 - 4p/m` with `p` the Hamming distance between their labels.
    pub fn predicted_gram(&self, j: usize, j2: usize) -> Result<Ratio> {
        let n = self.n_inputs();
        if j >= n || j2 >= n {
            return Err(Error::IndexOutOfRange(format!(
                "gram pair ({j}, {j2}) of {n}"
            )));
        }
        Ok(self.gram[j][j2])
    }

    pub fn gram(&self) -> &[Vec<Ratio>] {
        &self.gram
    }

    /// Canonical serialization form; fields stream in the order
    /// m, strings, signs, constraints, gram.
    pub fn canonical(&self) -> CanonicalTable {
        CanonicalTable {
            m: self.m,
            strings: self.strings.iter().map(|s| s.to_string()).collect(),
            signs: self.signs.clone(),
            constraints: self.constraints.iter().map(|s| s.to_string()).collect(),
            gram: self
                .gram
                .iter()
                .map(|row| row.iter().map(|r| (r.num, r.den)).collect())
                .collect(),
        }
    }
}

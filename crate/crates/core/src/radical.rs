//! Radical inverses with digit scrambling.
//!
//! The radical inverse `phi_b(i)` mirrors the base-`b` digits of `i` at the
//! radix point. Digit `k` of the result (weight `b^-(k+1)`) is digit `a_k(i)`
//! of the index, optionally passed through a permutation first.
//!
//! All arithmetic is done on integers: the scrambled digits form a numerator
//! over `b^D`, where `D` is the digit capacity of the base (the largest `D`
//! with `b^D <= 2^64`). Conversion to `f64` happens last.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use crate::hash::hash_words;
use crate::{Error, Result};

/// Owen scrambling depth used when none is given, in base-2 digits.
pub const OWEN_DEFAULT_DEPTH: u32 = 32;

/// Largest `f64` strictly below one.
pub const ONE_MINUS_EPSILON: f64 = 1.0 - f64::EPSILON / 2.0;

const MAX_BASE: u32 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scramble {
    Identity,
    /// `a -> (a + k) mod b` on digit position `k`.
    Zaremba,
    /// Faure's recursive permutation family, the same permutation on every
    /// digit.
    Faure,
    /// One random permutation per digit position, keyed on `(seed, base, k)`.
    RandomDigit { seed: u64 },
    /// Nested random permutations keyed on all more significant digits.
    Owen { seed: u64, depth: u32 },
}

impl Scramble {
    pub fn owen(seed: u64) -> Self {
        Scramble::Owen {
            seed,
            depth: OWEN_DEFAULT_DEPTH,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Scramble::Identity)
    }
}

impl fmt::Display for Scramble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scramble::Identity => f.write_str("none"),
            Scramble::Zaremba => f.write_str("zaremba"),
            Scramble::Faure => f.write_str("faure"),
            Scramble::RandomDigit { seed } => write!(f, "digit:{seed}"),
            Scramble::Owen { seed, depth } if *depth == OWEN_DEFAULT_DEPTH => {
                write!(f, "owen:{seed}")
            }
            Scramble::Owen { seed, depth } => write!(f, "owen:{seed}:{depth}"),
        }
    }
}

impl FromStr for Scramble {
    type Err = Error;

    /// Accepts `none`, `zaremba`, `faure`, `digit:SEED`, `owen:SEED` and
    /// `owen:SEED:DEPTH`.
    fn from_str(s: &str) -> Result<Self> {
        let parse_u64 = |v: &str| {
            v.parse::<u64>()
                .map_err(|_| Error::Parse(format!("invalid seed '{v}' in scramble '{s}'")))
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["none"] | ["identity"] => Ok(Scramble::Identity),
            ["zaremba"] => Ok(Scramble::Zaremba),
            ["faure"] => Ok(Scramble::Faure),
            ["digit", seed] => Ok(Scramble::RandomDigit {
                seed: parse_u64(seed)?,
            }),
            ["owen", seed] => Ok(Scramble::owen(parse_u64(seed)?)),
            ["owen", seed, depth] => Ok(Scramble::Owen {
                seed: parse_u64(seed)?,
                depth: depth
                    .parse()
                    .map_err(|_| Error::Parse(format!("invalid depth in '{s}'")))?,
            }),
            _ => Err(Error::Parse(format!("unknown scramble '{s}'"))),
        }
    }
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Largest `D` with `b^D <= 2^64`.
pub fn digit_capacity(base: u32) -> u32 {
    let limit = 1u128 << 64;
    let mut d = 0;
    let mut p = 1u128;
    while p * base as u128 <= limit {
        p *= base as u128;
        d += 1;
    }
    d
}

fn pow_u128(base: u32, exp: u32) -> u128 {
    (base as u128).pow(exp)
}

/// Plain radical inverse `phi_b(i)`.
pub fn radical_inverse(base: u32, index: u64) -> f64 {
    if base == 2 {
        return index.reverse_bits() as f64 * (1.0 / 18_446_744_073_709_551_616.0);
    }
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut value = 0.0;
    let mut i = index;
    while i > 0 {
        value += (i % base as u64) as f64 * scale;
        i /= base as u64;
        scale *= inv;
    }
    value.min(ONE_MINUS_EPSILON)
}

/// Zaremba's digit permutation `(a + k) mod b`.
pub fn zaremba_digit(base: u32, digit: u32, position: u32) -> u32 {
    ((digit as u64 + position as u64) % base as u64) as u32
}

/// Faure's permutation of `0..b`.
///
/// `sigma_2 = (0, 1)`. For even `b = 2c` the table is `2 sigma_c` followed by
/// `2 sigma_c + 1`. For odd `b = 2c + 1` the entries of `sigma_{b-1}` that are
/// `>= c` are incremented and `c` is inserted in the middle.
pub fn faure_permutation(base: u32) -> Arc<[u32]> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<[u32]>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(p) = cache.lock().unwrap().get(&base) {
        return p.clone();
    }
    let table: Arc<[u32]> = build_faure(base).into();
    cache.lock().unwrap().insert(base, table.clone());
    table
}

fn build_faure(base: u32) -> Vec<u32> {
    match base {
        0 | 1 => vec![0; base as usize],
        2 => vec![0, 1],
        b if b % 2 == 0 => {
            let half = build_faure(b / 2);
            half.iter()
                .map(|&v| 2 * v)
                .chain(half.iter().map(|&v| 2 * v + 1))
                .collect()
        }
        b => {
            let c = (b - 1) / 2;
            let mut table: Vec<u32> = build_faure(b - 1)
                .into_iter()
                .map(|v| if v >= c { v + 1 } else { v })
                .collect();
            table.insert(c as usize, c);
            table
        }
    }
}

fn invert_table(table: &[u32]) -> Vec<u32> {
    let mut inv = vec![0; table.len()];
    for (a, &v) in table.iter().enumerate() {
        inv[v as usize] = a as u32;
    }
    inv
}

fn pow_mod(mut base: u64, mut exp: u64, modulus: u64) -> u64 {
    let mut acc = 1 % modulus;
    base %= modulus;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % modulus;
        }
        base = base * base % modulus;
        exp >>= 1;
    }
    acc
}

/// A digit permutation `a -> (mult a + add) mod b` drawn from a hash.
///
/// `b` is prime, so every nonzero multiplier gives a bijection. In base 2
/// this is either the identity or a bit flip.
#[derive(Clone, Copy, Debug)]
struct AffineDigit {
    mult: u64,
    add: u64,
}

impl AffineDigit {
    fn from_key(base: u32, key: u64) -> Self {
        let b = base as u64;
        if b == 2 {
            return AffineDigit { mult: 1, add: key >> 63 };
        }
        AffineDigit {
            mult: 1 + key % (b - 1),
            add: (key >> 32) % b,
        }
    }

    fn apply(self, base: u32, a: u32) -> u32 {
        ((self.mult * a as u64 + self.add) % base as u64) as u32
    }

    fn invert(self, base: u32, v: u32) -> u32 {
        let b = base as u64;
        let inv = pow_mod(self.mult, b - 2, b);
        (((v as u64 + b - self.add) % b) * inv % b) as u32
    }
}

fn digit_key(seed: u64, base: u32, position: u32) -> u64 {
    hash_words(&[seed, base as u64, position as u64])
}

type Table = Arc<[u32]>;

/// A radical inverse in a prime base with a digit scramble.
#[derive(Clone, Debug)]
pub struct RadicalInverse {
    base: u32,
    scramble: Scramble,
    capacity: u32,
    denominator: u128,
    // permutation and its inverse
    table: Option<(Table, Table)>,
}

impl PartialEq for RadicalInverse {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.scramble == other.scramble
    }
}

impl RadicalInverse {
    pub fn new(base: u32, scramble: Scramble) -> Result<Self> {
        if !is_prime(base) || base >= MAX_BASE {
            return Err(Error::InvalidArgument(format!(
                "radical inverse base must be a prime below {MAX_BASE}, got {base}"
            )));
        }
        let capacity = digit_capacity(base);
        // digits past the capacity are not represented, so deeper trees
        // are cut back to it
        let scramble = match scramble {
            Scramble::Owen { depth: 0, .. } => {
                return Err(Error::InvalidArgument("Owen depth must be at least 1".into()))
            }
            Scramble::Owen { seed, depth } => Scramble::Owen {
                seed,
                depth: depth.min(capacity),
            },
            s => s,
        };
        let table = match scramble {
            Scramble::Faure => {
                let t = faure_permutation(base);
                let inv: Arc<[u32]> = invert_table(&t).into();
                Some((t, inv))
            }
            _ => None,
        };
        Ok(RadicalInverse {
            base,
            scramble,
            capacity,
            denominator: pow_u128(base, capacity),
            table,
        })
    }

    pub fn plain(base: u32) -> Result<Self> {
        Self::new(base, Scramble::Identity)
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn scramble(&self) -> Scramble {
        self.scramble
    }

    /// Number of result digits computed.
    pub fn digit_capacity(&self) -> u32 {
        self.capacity
    }

    #[inline]
    fn permute(&self, position: u32, digit: u32, node: u64) -> u32 {
        match self.scramble {
            Scramble::Identity => digit,
            Scramble::Zaremba => zaremba_digit(self.base, digit, position),
            Scramble::Faure => self.table.as_ref().unwrap().0[digit as usize],
            Scramble::RandomDigit { seed } => {
                AffineDigit::from_key(self.base, digit_key(seed, self.base, position))
                    .apply(self.base, digit)
            }
            Scramble::Owen { seed, depth } => {
                if position >= depth {
                    digit
                } else {
                    self.owen_digit(seed, position, node).apply(self.base, digit)
                }
            }
        }
    }

    #[inline]
    fn unpermute(&self, position: u32, value: u32, node: u64) -> u32 {
        match self.scramble {
            Scramble::Identity => value,
            Scramble::Zaremba => {
                let b = self.base as u64;
                ((value as u64 + b - position as u64 % b) % b) as u32
            }
            Scramble::Faure => self.table.as_ref().unwrap().1[value as usize],
            Scramble::RandomDigit { seed } => {
                AffineDigit::from_key(self.base, digit_key(seed, self.base, position))
                    .invert(self.base, value)
            }
            Scramble::Owen { seed, depth } => {
                if position >= depth {
                    value
                } else {
                    self.owen_digit(seed, position, node).invert(self.base, value)
                }
            }
        }
    }

    /// The permutation at a node of the Owen tree. The root uses the same key
    /// as random digit scrambling of position 0, so both agree on the most
    /// significant digit for equal seeds.
    fn owen_digit(&self, seed: u64, position: u32, node: u64) -> AffineDigit {
        let key = if position == 0 {
            digit_key(seed, self.base, 0)
        } else {
            hash_words(&[digit_key(seed, self.base, position), node])
        };
        AffineDigit::from_key(self.base, key)
    }

    #[inline]
    fn child(node: u64, digit: u32) -> u64 {
        hash_words(&[node, digit as u64])
    }

    /// Scrambles the digit stream produced by `source` into a numerator over
    /// `b^D`. `source(k)` is the original digit with weight `b^-(k+1)`;
    /// `significant` is the number of leading positions that may be nonzero.
    fn scramble_stream(&self, significant: u32, mut source: impl FnMut(u32) -> u32) -> u64 {
        let b = self.base as u64;
        // a zero index digit stays zero under these scrambles, so leading
        // zeros of the index need not be visited
        let significant = significant.min(self.capacity);
        let stop = match self.scramble {
            Scramble::Identity | Scramble::Faure => significant,
            Scramble::Owen { depth, .. } => significant.max(depth),
            Scramble::Zaremba | Scramble::RandomDigit { .. } => self.capacity,
        };
        let mut numerator = 0u64;
        let mut node = 0u64;
        for k in 0..stop {
            let a = if k < significant { source(k) } else { 0 };
            numerator = numerator * b + self.permute(k, a, node) as u64;
            if matches!(self.scramble, Scramble::Owen { .. }) {
                node = Self::child(node, a);
            }
        }
        let rest = self.capacity - stop;
        // numerator * b^rest < b^D <= 2^64
        (numerator as u128 * pow_u128(self.base, rest)) as u64
    }

    /// Scrambled digits of `phi_b(index)` as a numerator over `b^D`.
    pub fn numerator(&self, index: u64) -> u64 {
        if self.base == 2 && self.scramble.is_identity() {
            return index.reverse_bits();
        }
        let b = self.base as u64;
        let mut digits = [0u32; 64];
        let mut n = 0;
        let mut i = index;
        while i > 0 {
            digits[n] = (i % b) as u32;
            i /= b;
            n += 1;
        }
        self.scramble_stream(n as u32, |k| digits[k as usize])
    }

    /// The scrambled radical inverse of `index`, in `[0, 1)`.
    pub fn value(&self, index: u64) -> f64 {
        self.numerator_to_unit(self.numerator(index))
    }

    fn numerator_to_unit(&self, numerator: u64) -> f64 {
        (numerator as f64 / self.denominator as f64).min(ONE_MINUS_EPSILON)
    }

    fn check_digits(&self, digits: u32) -> Result<()> {
        if digits > self.capacity {
            return Err(Error::Capacity(format!(
                "{digits} digits exceed the capacity {} of base {}",
                self.capacity, self.base
            )));
        }
        Ok(())
    }

    /// `floor(b^m * value(index))`, computed exactly.
    pub fn prefix(&self, index: u64, digits: u32) -> Result<u64> {
        self.check_digits(digits)?;
        let scale = pow_u128(self.base, self.capacity - digits);
        Ok((self.numerator(index) as u128 / scale) as u64)
    }

    /// Fractional part of `b^m * value(index)`.
    pub fn fraction_after(&self, index: u64, digits: u32) -> Result<f64> {
        self.check_digits(digits)?;
        let scale = pow_u128(self.base, self.capacity - digits);
        let rem = self.numerator(index) as u128 % scale;
        Ok((rem as f64 / scale as f64).min(ONE_MINUS_EPSILON))
    }

    /// The residue `i mod b^m` of every index whose first `m` result digits
    /// equal `prefix`. This inverts [`RadicalInverse::prefix`].
    pub fn residue_for_prefix(&self, prefix: u64, digits: u32) -> Result<u64> {
        self.check_digits(digits)?;
        let b = self.base as u64;
        let cells = pow_u128(self.base, digits);
        if prefix as u128 >= cells {
            return Err(Error::IndexOutOfRange {
                index: prefix,
                len: cells.min(u64::MAX as u128) as u64,
            });
        }
        let mut out = [0u32; 64];
        let mut p = prefix;
        for k in (0..digits as usize).rev() {
            out[k] = (p % b) as u32;
            p /= b;
        }
        let mut node = 0u64;
        let mut residue = 0u128;
        let mut weight = 1u128;
        for k in 0..digits {
            let a = self.unpermute(k, out[k as usize], node);
            if matches!(self.scramble, Scramble::Owen { .. }) {
                node = Self::child(node, a);
            }
            residue += a as u128 * weight;
            weight *= b as u128;
        }
        Ok(residue as u64)
    }
}

/// Owen scrambling of a base-2 value with at most `depth` significant bits.
///
/// Bits beyond `depth` are truncated. Equals
/// `RadicalInverse::new(2, Owen { seed, depth }).value(i)` when `x = phi_2(i)`
/// and `i < 2^depth`.
pub fn owen_scramble(seed: u64, depth: u32, x: f64) -> Result<f64> {
    let ri = RadicalInverse::new(2, Scramble::Owen { seed, depth })?;
    let bits = (x.clamp(0.0, ONE_MINUS_EPSILON) * (1u128 << depth) as f64) as u64;
    let numerator = ri.scramble_stream(depth, |k| ((bits >> (depth - 1 - k)) & 1) as u32);
    Ok(ri.numerator_to_unit(numerator))
}

/// Random digit scrambling of a base-2 value, truncated to `digits` bits.
pub fn digit_scramble(seed: u64, digits: u32, x: f64) -> Result<f64> {
    let ri = RadicalInverse::new(2, Scramble::RandomDigit { seed })?;
    ri.check_digits(digits)?;
    let bits = (x.clamp(0.0, ONE_MINUS_EPSILON) * (1u128 << digits) as f64) as u64;
    let numerator = ri.scramble_stream(digits, |k| ((bits >> (digits - 1 - k)) & 1) as u32);
    Ok(ri.numerator_to_unit(numerator))
}

fn checked_cells(base: u32, digits: u32) -> Result<u64> {
    (base as u64)
        .checked_pow(digits)
        .ok_or_else(|| Error::Capacity(format!("{base}^{digits} overflows 64 bits")))
}

/// The unique `i < b^m` with `phi_b(i) = j / b^m`: the `m`-digit reversal of
/// `j`.
pub fn inverse_radical(base: u32, digits: u32, j: u64) -> Result<u64> {
    let cells = checked_cells(base, digits)?;
    if j >= cells {
        return Err(Error::IndexOutOfRange {
            index: j,
            len: cells,
        });
    }
    RadicalInverse::plain(base)?.residue_for_prefix(j, digits)
}

/// `floor(b^m phi_b(i))`. Over any aligned window of `b^m` indices these
/// labels form a permutation of `0..b^m`.
pub fn partition_label(base: u32, digits: u32, index: u64) -> Result<u64> {
    checked_cells(base, digits)?;
    RadicalInverse::plain(base)?.prefix(index, digits)
}

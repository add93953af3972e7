//! Multi-dimensional low discrepancy sequences.

use std::ops::Index;
use std::path::Path;

use crate::radical::{RadicalInverse, Scramble, ONE_MINUS_EPSILON};
use crate::{Error, Result};

/// The first 64 primes, one Halton base per dimension.
pub const PRIMES: [u32; 64] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223, 227, 229, 233, 239, 241, 251, 257, 263, 269, 271, 277, 281, 283, 293, 307,
    311,
];

pub const MAX_HALTON_DIMENSIONS: usize = PRIMES.len();

/// A point in the unit cube, every component in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SamplePoint(Vec<f64>);

impl SamplePoint {
    pub fn new(values: Vec<f64>) -> Self {
        SamplePoint(values)
    }

    pub fn zeros(dims: usize) -> Self {
        SamplePoint(vec![0.0; dims])
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Index<usize> for SamplePoint {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for SamplePoint {
    fn from(v: Vec<f64>) -> Self {
        SamplePoint(v)
    }
}

/// The Halton sequence: dimension `k` is the radical inverse in the `k`-th
/// prime, each with its own scramble.
#[derive(Clone, Debug, PartialEq)]
pub struct Halton {
    components: Vec<RadicalInverse>,
}

impl Halton {
    pub fn new(scrambles: &[Scramble]) -> Result<Self> {
        if scrambles.is_empty() || scrambles.len() > MAX_HALTON_DIMENSIONS {
            return Err(Error::InvalidArgument(format!(
                "Halton dimension count must be in 1..={MAX_HALTON_DIMENSIONS}, got {}",
                scrambles.len()
            )));
        }
        let components = scrambles
            .iter()
            .zip(PRIMES)
            .map(|(&s, b)| RadicalInverse::new(b, s))
            .collect::<Result<_>>()?;
        Ok(Halton { components })
    }

    /// All dimensions with the same scramble.
    pub fn uniform(dims: usize, scramble: Scramble) -> Result<Self> {
        Self::new(&vec![scramble; dims])
    }

    pub fn plain(dims: usize) -> Result<Self> {
        Self::uniform(dims, Scramble::Identity)
    }

    /// The "improved" Halton sequence: Faure permutations on every digit.
    pub fn faure(dims: usize) -> Result<Self> {
        Self::uniform(dims, Scramble::Faure)
    }

    pub fn dims(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, dim: usize) -> &RadicalInverse {
        &self.components[dim]
    }

    pub fn components(&self) -> &[RadicalInverse] {
        &self.components
    }

    pub fn scrambles(&self) -> Vec<Scramble> {
        self.components.iter().map(|c| c.scramble()).collect()
    }

    pub fn value(&self, dim: usize, index: u64) -> f64 {
        self.components[dim].value(index)
    }

    pub fn point(&self, index: u64) -> SamplePoint {
        SamplePoint(self.components.iter().map(|c| c.value(index)).collect())
    }
}

/// Owen depth is given in base-2 digits; larger bases hold fewer digits.
/// An extensible rank-1 lattice sequence in base 2.
///
/// Component `k` of point `i` is the fractional part of `phi_2(i) z[k]`,
/// evaluated in 32-bit fixed point as `(rev32(i) z[k]) mod 2^32`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    generator: Vec<u32>,
}

impl Lattice {
    pub fn new(generator: Vec<u32>) -> Result<Self> {
        match generator.first() {
            None => Err(Error::InvalidArgument(
                "generating vector must not be empty".into(),
            )),
            Some(z) if z % 2 == 0 => Err(Error::InvalidArgument(format!(
                "first generator component must be odd, got {z}"
            ))),
            _ => Ok(Lattice { generator }),
        }
    }

    /// The shipped generating vector truncated to `dims` components.
    pub fn default_with_dims(dims: usize) -> Result<Self> {
        let z = default_generating_vector();
        if dims == 0 || dims > z.len() {
            return Err(Error::InvalidArgument(format!(
                "lattice dimension must be in 1..={}, got {dims}",
                z.len()
            )));
        }
        Self::new(z[..dims].to_vec())
    }

    pub fn dims(&self) -> usize {
        self.generator.len()
    }

    pub fn generator(&self) -> &[u32] {
        &self.generator
    }

    pub fn point_fixed(&self, index: u64) -> Vec<u32> {
        let r = (index as u32).reverse_bits();
        self.generator.iter().map(|&z| r.wrapping_mul(z)).collect()
    }

    pub fn point(&self, index: u64) -> SamplePoint {
        SamplePoint(
            self.point_fixed(index)
                .into_iter()
                .map(|v| v as f64 * (1.0 / 4_294_967_296.0))
                .collect(),
        )
    }
}

/// Componentwise `(p + shift) mod 1`; never returns 1.0.
pub fn cranley_patterson(p: &SamplePoint, shift: &SamplePoint) -> Result<SamplePoint> {
    if p.dims() != shift.dims() {
        return Err(Error::DimensionMismatch {
            expected: p.dims(),
            actual: shift.dims(),
        });
    }
    Ok(SamplePoint(
        p.0.iter()
            .zip(&shift.0)
            .map(|(&a, &s)| wrap_unit(a + s))
            .collect(),
    ))
}

fn wrap_unit(v: f64) -> f64 {
    let r = v - v.floor();
    if r >= 1.0 {
        // v was a tiny negative number
        ONE_MINUS_EPSILON
    } else {
        r
    }
}

const DEFAULT_GENERATOR: &str = include_str!("../data/lattice_generator.txt");

/// The shipped generating vector, found by [`search_generating_vector`].
pub fn default_generating_vector() -> Vec<u32> {
    parse_generating_vector(DEFAULT_GENERATOR).expect("shipped generating vector is valid")
}

/// Parses a generating vector: one unsigned integer per line, line `k` holds
/// `z[k]`. A trailing newline is allowed.
pub fn parse_generating_vector(text: &str) -> Result<Vec<u32>> {
    let text = text.strip_suffix('\n').unwrap_or(text);
    let z = text
        .split('\n')
        .enumerate()
        .map(|(line, s)| {
            s.trim().parse::<u32>().map_err(|_| {
                Error::Parse(format!("line {}: invalid generator component '{s}'", line + 1))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Lattice::new(z.clone())?;
    Ok(z)
}

pub fn load_generating_vector(path: &Path) -> Result<Vec<u32>> {
    parse_generating_vector(&std::fs::read_to_string(path)?)
}

pub fn format_generating_vector(z: &[u32]) -> String {
    z.iter().map(|v| format!("{v}\n")).collect()
}

/// Length of the shortest nonzero vector of the 2-D dual lattice
/// `{h : h0 + a h1 = 0 mod n}` divided by the largest value any lattice of
/// `n` points can achieve (the hexagonal lattice).
pub fn spectral_merit_2d(a: u64, n: u64) -> f64 {
    // Lagrange-Gauss reduction of the basis (n, 0), (-a, 1).
    let mut u = (n as i128, 0i128);
    let mut v = (-((a % n) as i128), 1i128);
    let norm = |w: (i128, i128)| w.0 * w.0 + w.1 * w.1;
    if norm(u) < norm(v) {
        std::mem::swap(&mut u, &mut v);
    }
    loop {
        // keep v the shorter vector
        let nv = norm(v);
        let dot = u.0 * v.0 + u.1 * v.1;
        let q = (dot as f64 / nv as f64).round() as i128;
        let r = (u.0 - q * v.0, u.1 - q * v.1);
        if norm(r) >= nv {
            break;
        }
        u = v;
        v = r;
    }
    let shortest = (norm(v) as f64).sqrt();
    let best = (2.0 * n as f64 / 3f64.sqrt()).sqrt();
    shortest / best
}

fn inverse_mod_pow2(z: u64) -> u64 {
    // Newton iteration for odd z modulo 2^64
    let mut x = z;
    for _ in 0..6 {
        x = x.wrapping_mul(2u64.wrapping_sub(z.wrapping_mul(x)));
    }
    x
}

/// Figure of merit of candidate `c` joined to the existing generator: the
/// minimum normalized 2-D spectral merit over all pairs with earlier
/// components and over every prefix size `2^m` with `m` in `levels`.
pub fn candidate_merit(existing: &[u32], candidate: u32, levels: std::ops::RangeInclusive<u32>) -> f64 {
    let mut worst = f64::INFINITY;
    for &z in existing {
        let ratio = (candidate as u64).wrapping_mul(inverse_mod_pow2(z as u64));
        for m in levels.clone() {
            let n = 1u64 << m;
            worst = worst.min(spectral_merit_2d(ratio & (n - 1), n));
        }
    }
    worst
}

/// Greedy component-wise search for an extensible generating vector.
///
/// `z[0] = 1`; every further component is the odd value below `2^bits`
/// maximizing [`candidate_merit`] (ties go to the smaller value).
pub fn search_generating_vector(
    dims: usize,
    bits: u32,
    levels: std::ops::RangeInclusive<u32>,
) -> Vec<u32> {
    use rayon::prelude::*;
    let mut z = vec![1u32];
    while z.len() < dims {
        let best = (0..1u32 << (bits - 1))
            .into_par_iter()
            .map(|k| {
                let c = 2 * k + 1;
                (candidate_merit(&z, c, levels.clone()), c)
            })
            .reduce(
                || (f64::NEG_INFINITY, u32::MAX),
                |a, b| {
                    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                        b
                    } else {
                        a
                    }
                },
            );
        z.push(best.1);
    }
    z
}

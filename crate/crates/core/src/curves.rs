//! Space-filling curves on square pixel grids.
//!
//! Every curve is a bijection between `0..N` and the pixels of a
//! `side x side` grid, where `side = base^level` and `N = side^2`.
//! Coordinates have their origin in the bottom-left corner with `y` pointing
//! up.
//!
//! Conventions fixed by this module:
//!
//! * Morton: `x` occupies the least significant interleaved bit, so the
//!   parity of the index equals the parity of `x`.
//! * Hilbert: the level-1 order is `(0,0) -> (0,1) -> (1,1) -> (1,0)`; the
//!   curve starts in the origin and ends in the bottom-right corner.
//! * Moore: four Hilbert sub-curves of half the side joined into a closed
//!   loop. It starts at `(side/2 - 1, 0)`, runs up the left half, down the
//!   right half and ends at `(side/2, 0)`.
//! * Peano: the serpentine base-3 construction, columns first. It starts in
//!   the origin going up and ends in the top-right corner.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CurveKind {
    Morton,
    Hilbert,
    Moore,
    Peano,
}

impl CurveKind {
    pub const ALL: [CurveKind; 4] = [
        CurveKind::Morton,
        CurveKind::Hilbert,
        CurveKind::Moore,
        CurveKind::Peano,
    ];

    pub fn base(self) -> u32 {
        match self {
            CurveKind::Peano => 3,
            _ => 2,
        }
    }

    /// Largest supported level: side 2^15 in base 2 and 3^9 in base 3.
    pub fn max_level(self) -> u32 {
        match self {
            CurveKind::Peano => 9,
            _ => 15,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CurveKind::Morton => "morton",
            CurveKind::Hilbert => "hilbert",
            CurveKind::Moore => "moore",
            CurveKind::Peano => "peano",
        }
    }
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CurveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "morton" | "z" | "zorder" => Ok(CurveKind::Morton),
            "hilbert" => Ok(CurveKind::Hilbert),
            "moore" => Ok(CurveKind::Moore),
            "peano" => Ok(CurveKind::Peano),
            _ => Err(Error::Parse(format!("unknown curve '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PixelCoord {
    pub x: u32,
    pub y: u32,
}

impl PixelCoord {
    pub const fn new(x: u32, y: u32) -> Self {
        PixelCoord { x, y }
    }

    pub fn manhattan(self, other: PixelCoord) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl fmt::Display for PixelCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Width and height of an image; not necessarily powers of a curve base.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ImageDims {
    width: u32,
    height: u32,
}

impl ImageDims {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(ImageDims { width, height })
    }

    pub fn width(self) -> u32 {
        self.width
    }

    pub fn height(self) -> u32 {
        self.height
    }

    pub fn pixel_count(self) -> u64 {
        self.width as u64 * self.height as u64
    }

    pub fn contains(self, p: PixelCoord) -> bool {
        p.x < self.width && p.y < self.height
    }

    /// Row-major offset of `p`, row 0 being the bottom row.
    pub fn offset(self, p: PixelCoord) -> usize {
        p.y as usize * self.width as usize + p.x as usize
    }

    pub fn check(self, p: PixelCoord) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                x: p.x,
                y: p.y,
                width: self.width,
                height: self.height,
            })
        }
    }

    /// Pixels in row-major order, bottom row first.
    pub fn pixels(self) -> impl Iterator<Item = PixelCoord> {
        let w = self.width;
        (0..self.height).flat_map(move |y| (0..w).map(move |x| PixelCoord::new(x, y)))
    }
}

/// A curve of a given kind and level on a `side x side` grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridSpec {
    kind: CurveKind,
    level: u32,
}

impl GridSpec {
    pub fn new(kind: CurveKind, level: u32) -> Result<Self> {
        if level > kind.max_level() {
            return Err(Error::Capacity(format!(
                "{kind} level {level} exceeds the supported maximum {}",
                kind.max_level()
            )));
        }
        Ok(GridSpec { kind, level })
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn base(&self) -> u32 {
        self.kind.base()
    }

    pub fn side(&self) -> u32 {
        self.base().pow(self.level)
    }

    /// Number of pixels on the curve, `base^(2 level)`.
    pub fn len(&self) -> u64 {
        (self.base() as u64).pow(2 * self.level)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dims(&self) -> ImageDims {
        ImageDims {
            width: self.side(),
            height: self.side(),
        }
    }

    pub fn contains(&self, p: PixelCoord) -> bool {
        p.x < self.side() && p.y < self.side()
    }

    pub fn point(&self, index: u64) -> Result<PixelCoord> {
        curve_point(*self, index)
    }

    pub fn index(&self, p: PixelCoord) -> Result<u64> {
        curve_index(*self, p)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} level {} ({}x{})", self.kind, self.level, self.side(), self.side())
    }
}

/// Smallest grid of the given kind covering `dims`.
pub fn fit_grid(kind: CurveKind, dims: ImageDims) -> Result<GridSpec> {
    let needed = dims.width().max(dims.height()) as u64;
    let base = kind.base() as u64;
    let mut level = 0;
    let mut side = 1u64;
    while side < needed {
        side *= base;
        level += 1;
    }
    GridSpec::new(kind, level).map_err(|_| {
        Error::Capacity(format!(
            "{}x{} needs {kind} level {level}, maximum is {}",
            dims.width(),
            dims.height(),
            kind.max_level()
        ))
    })
}

/// The `index`-th pixel visited by the curve.
pub fn curve_point(grid: GridSpec, index: u64) -> Result<PixelCoord> {
    let len = grid.len();
    if index >= len {
        return Err(Error::IndexOutOfRange { index, len });
    }
    Ok(match grid.kind {
        CurveKind::Morton => morton_point(index),
        CurveKind::Hilbert => hilbert_point(grid.side(), index),
        CurveKind::Moore => moore_point(grid.level, index),
        CurveKind::Peano => peano_point(grid.level, index),
    })
}

/// Position of pixel `p` along the curve; inverse of [`curve_point`].
pub fn curve_index(grid: GridSpec, p: PixelCoord) -> Result<u64> {
    grid.dims().check(p)?;
    Ok(match grid.kind {
        CurveKind::Morton => morton_index(p),
        CurveKind::Hilbert => hilbert_index(grid.side(), p),
        CurveKind::Moore => moore_index(grid.level, p),
        CurveKind::Peano => peano_index(grid.level, p),
    })
}

/// Number of in-image pixels strictly preceding `p` along the curve.
///
/// Computed by decomposing the index prefix into aligned curve blocks, each of
/// which covers an aligned square of the grid, and intersecting those squares
/// with the image rectangle.
pub fn in_image_rank(grid: GridSpec, dims: ImageDims, p: PixelCoord) -> Result<u64> {
    dims.check(p)?;
    let index = curve_index(grid, p)?;
    let b = grid.base() as u64;
    let fanout = b * b;
    let mut rank = 0;
    let mut span = grid.len();
    let mut block_side = grid.side() as u64;
    for _ in 0..grid.level {
        let child_span = span / fanout;
        let child_side = block_side / b;
        let start = index / span * span;
        let digit = (index - start) / child_span;
        for c in 0..digit {
            let q = curve_point(grid, start + c * child_span)?;
            let ox = q.x as u64 / child_side * child_side;
            let oy = q.y as u64 / child_side * child_side;
            rank += overlap(ox, child_side, dims.width() as u64)
                * overlap(oy, child_side, dims.height() as u64);
        }
        span = child_span;
        block_side = child_side;
    }
    Ok(rank)
}

fn overlap(origin: u64, side: u64, limit: u64) -> u64 {
    limit.min(origin + side).saturating_sub(origin)
}

/// Number of maximal runs of consecutive curve indices among the pixels of
/// the 3x3 neighborhood of `p`, clipped to the grid.
pub fn neighborhood_segments(grid: GridSpec, p: PixelCoord) -> Result<u32> {
    grid.dims().check(p)?;
    let side = grid.side();
    let mut indices = Vec::with_capacity(9);
    for y in p.y.saturating_sub(1)..=(p.y + 1).min(side - 1) {
        for x in p.x.saturating_sub(1)..=(p.x + 1).min(side - 1) {
            indices.push(curve_index(grid, PixelCoord::new(x, y))?);
        }
    }
    Ok(count_runs(&mut indices))
}

pub(crate) fn count_runs(indices: &mut [u64]) -> u32 {
    indices.sort_unstable();
    1 + indices.windows(2).filter(|w| w[1] != w[0] + 1).count() as u32
}

/// Precomputed curve order restricted to an image.
///
/// Holds the compact rank of every in-image pixel and the pixels in curve
/// order, built by one sweep over the grid.
#[derive(Clone, Debug)]
pub struct ImageOrder {
    grid: GridSpec,
    dims: ImageDims,
    ranks: Vec<u64>,
    order: Vec<PixelCoord>,
}

impl ImageOrder {
    pub fn new(grid: GridSpec, dims: ImageDims) -> Result<Self> {
        if dims.width() > grid.side() || dims.height() > grid.side() {
            return Err(Error::Capacity(format!(
                "{}x{} image does not fit on {grid}",
                dims.width(),
                dims.height()
            )));
        }
        let count = dims.pixel_count() as usize;
        let mut ranks = vec![0; count];
        let mut order = Vec::with_capacity(count);
        for i in 0..grid.len() {
            let p = curve_point(grid, i)?;
            if dims.contains(p) {
                ranks[dims.offset(p)] = order.len() as u64;
                order.push(p);
            }
        }
        Ok(ImageOrder {
            grid,
            dims,
            ranks,
            order,
        })
    }

    pub fn fitted(kind: CurveKind, dims: ImageDims) -> Result<Self> {
        Self::new(fit_grid(kind, dims)?, dims)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn dims(&self) -> ImageDims {
        self.dims
    }

    pub fn rank(&self, p: PixelCoord) -> Result<u64> {
        self.dims.check(p)?;
        Ok(self.ranks[self.dims.offset(p)])
    }

    /// In-image pixels in curve order.
    pub fn pixels(&self) -> &[PixelCoord] {
        &self.order
    }
}

// Morton

fn morton_point(index: u64) -> PixelCoord {
    PixelCoord::new(compact_bits(index), compact_bits(index >> 1))
}

fn morton_index(p: PixelCoord) -> u64 {
    spread_bits(p.x) | (spread_bits(p.y) << 1)
}

fn spread_bits(v: u32) -> u64 {
    let mut x = v as u64;
    x = (x | (x << 16)) & 0x0000_ffff_0000_ffff;
    x = (x | (x << 8)) & 0x00ff_00ff_00ff_00ff;
    x = (x | (x << 4)) & 0x0f0f_0f0f_0f0f_0f0f;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    x = (x | (x << 1)) & 0x5555_5555_5555_5555;
    x
}

fn compact_bits(v: u64) -> u32 {
    let mut x = v & 0x5555_5555_5555_5555;
    x = (x | (x >> 1)) & 0x3333_3333_3333_3333;
    x = (x | (x >> 2)) & 0x0f0f_0f0f_0f0f_0f0f;
    x = (x | (x >> 4)) & 0x00ff_00ff_00ff_00ff;
    x = (x | (x >> 8)) & 0x0000_ffff_0000_ffff;
    x = (x | (x >> 16)) & 0x0000_0000_ffff_ffff;
    x as u32
}

// Hilbert

fn hilbert_rotate(n: u64, x: &mut u64, y: &mut u64, rx: u64, ry: u64) {
    if ry == 0 {
        if rx == 1 {
            *x = n - 1 - *x;
            *y = n - 1 - *y;
        }
        std::mem::swap(x, y);
    }
}

fn hilbert_point(side: u32, index: u64) -> PixelCoord {
    let n = side as u64;
    let (mut x, mut y) = (0u64, 0u64);
    let mut t = index;
    let mut s = 1u64;
    while s < n {
        let rx = 1 & (t / 2);
        let ry = 1 & (t ^ rx);
        hilbert_rotate(s, &mut x, &mut y, rx, ry);
        x += s * rx;
        y += s * ry;
        t /= 4;
        s *= 2;
    }
    PixelCoord::new(x as u32, y as u32)
}

fn hilbert_index(side: u32, p: PixelCoord) -> u64 {
    let n = side as u64;
    let (mut x, mut y) = (p.x as u64, p.y as u64);
    let mut d = 0u64;
    let mut s = n / 2;
    while s > 0 {
        let rx = ((x & s) > 0) as u64;
        let ry = ((y & s) > 0) as u64;
        d += s * s * ((3 * rx) ^ ry);
        hilbert_rotate(n, &mut x, &mut y, rx, ry);
        s /= 2;
    }
    d
}

// Moore: quadrants 0..4 are lower-left, upper-left, upper-right, lower-right.
// Quadrant 0 is the Hilbert curve of half the side, transposed and mirrored
// in x so that it runs from (half-1, 0) up to (half-1, half-1). Quadrant 1 is its
// translate, and quadrants 2 and 3 are quadrants 1 and 0 rotated by 180
// degrees about the grid center.

fn moore_point(level: u32, index: u64) -> PixelCoord {
    if level == 0 {
        return PixelCoord::new(0, 0);
    }
    let half = 1u32 << (level - 1);
    let side = half * 2;
    let quarter = (half as u64) * (half as u64);
    let q = index / quarter;
    let h = hilbert_point(half, index % quarter);
    let mx = half - 1 - h.y;
    let my = h.x;
    match q {
        0 => PixelCoord::new(mx, my),
        1 => PixelCoord::new(mx, my + half),
        2 => PixelCoord::new(side - 1 - mx, side - 1 - my),
        _ => PixelCoord::new(side - 1 - mx, half - 1 - my),
    }
}

fn moore_index(level: u32, p: PixelCoord) -> u64 {
    if level == 0 {
        return 0;
    }
    let half = 1u32 << (level - 1);
    let side = half * 2;
    let quarter = (half as u64) * (half as u64);
    let (q, mx, my) = match (p.x < half, p.y < half) {
        (true, true) => (0, p.x, p.y),
        (true, false) => (1, p.x, p.y - half),
        (false, false) => (2, side - 1 - p.x, side - 1 - p.y),
        (false, true) => (3, side - 1 - p.x, half - 1 - p.y),
    };
    let h = PixelCoord::new(my, half - 1 - mx);
    q * quarter + hilbert_index(half, h)
}

// Peano: the index is read as base-3 digit pairs (x digit, y digit), most
// significant first. A y digit is complemented when the x digits read so far
// (including the current one) sum to an odd number; an x digit is
// complemented when the preceding y digits sum to an odd number.

fn peano_point(level: u32, index: u64) -> PixelCoord {
    let mut digits = vec![0u32; 2 * level as usize];
    let mut t = index;
    for d in digits.iter_mut().rev() {
        *d = (t % 3) as u32;
        t /= 3;
    }
    let (mut x, mut y) = (0u32, 0u32);
    let (mut sum_x, mut sum_y) = (0u32, 0u32);
    for pair in digits.chunks_exact(2) {
        let (a, b) = (pair[0], pair[1]);
        let dx = if sum_y % 2 == 1 { 2 - a } else { a };
        sum_x += a;
        let dy = if sum_x % 2 == 1 { 2 - b } else { b };
        sum_y += b;
        x = x * 3 + dx;
        y = y * 3 + dy;
    }
    PixelCoord::new(x, y)
}

fn peano_index(level: u32, p: PixelCoord) -> u64 {
    let mut xd = vec![0u32; level as usize];
    let mut yd = vec![0u32; level as usize];
    let (mut x, mut y) = (p.x, p.y);
    for k in (0..level as usize).rev() {
        xd[k] = x % 3;
        yd[k] = y % 3;
        x /= 3;
        y /= 3;
    }
    let (mut sum_x, mut sum_y) = (0u32, 0u32);
    let mut index = 0u64;
    for k in 0..level as usize {
        let a = if sum_y % 2 == 1 { 2 - xd[k] } else { xd[k] };
        sum_x += a;
        let b = if sum_x % 2 == 1 { 2 - yd[k] } else { yd[k] };
        sum_y += b;
        index = index * 9 + (a * 3 + b) as u64;
    }
    index
}

//! Correlation diagnostics for curves and sequences, and uniformity metrics.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::curves::{
    count_runs, curve_index, GridSpec, ImageDims, ImageOrder, PixelCoord,
};
use crate::image::ImageBuffer;
use crate::radical::RadicalInverse;
use crate::strategies::{SampleRequest, Strategy};
use crate::{Error, Result};

/// Per-pixel radical inverse values of the first sample of each pixel's
/// block: channel `c` is `phi_{b_c}(rank * spp)`. One channel gives a gray
/// image, two or three an RGB image (missing channels stay zero).
pub fn dither_map(
    grid: GridSpec,
    dims: ImageDims,
    channels: &[RadicalInverse],
    spp: u64,
) -> Result<ImageBuffer> {
    if channels.is_empty() || channels.len() > 3 {
        return Err(Error::InvalidArgument(format!(
            "dither maps take 1 to 3 bases, got {}",
            channels.len()
        )));
    }
    if spp == 0 {
        return Err(Error::InvalidArgument("samples per pixel must be at least 1".into()));
    }
    let order = ImageOrder::new(grid, dims)?;
    let mut img = ImageBuffer::new(dims, if channels.len() == 1 { 1 } else { 3 })?;
    for (rank, &p) in order.pixels().iter().enumerate() {
        let index = (rank as u64)
            .checked_mul(spp)
            .ok_or_else(|| Error::Capacity("dither index overflows 64 bits".into()))?;
        for (c, ri) in channels.iter().enumerate() {
            img.set(p, c, ri.value(index));
        }
    }
    Ok(img)
}

/// Absolute curve-index differences across every edge between 4-adjacent
/// pixels of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeDiffMap {
    side: u32,
    // edge (x, y)-(x+1, y) at y * (side - 1) + x
    horizontal: Vec<u64>,
    // edge (x, y)-(x, y+1) at y * side + x
    vertical: Vec<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: PixelCoord,
    pub to: PixelCoord,
    pub diff: u64,
}

impl EdgeDiffMap {
    pub fn side(&self) -> u32 {
        self.side
    }

    /// Difference between `(x, y)` and `(x + 1, y)`.
    pub fn horizontal(&self, x: u32, y: u32) -> u64 {
        assert!(x + 1 < self.side && y < self.side);
        self.horizontal[(y * (self.side - 1) + x) as usize]
    }

    /// Difference between `(x, y)` and `(x, y + 1)`.
    pub fn vertical(&self, x: u32, y: u32) -> u64 {
        assert!(x < self.side && y + 1 < self.side);
        self.vertical[(y * self.side + x) as usize]
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        let s = self.side;
        let h = (0..s).flat_map(move |y| {
            (0..s.saturating_sub(1)).map(move |x| Edge {
                from: PixelCoord::new(x, y),
                to: PixelCoord::new(x + 1, y),
                diff: self.horizontal(x, y),
            })
        });
        let v = (0..s.saturating_sub(1)).flat_map(move |y| {
            (0..s).map(move |x| Edge {
                from: PixelCoord::new(x, y),
                to: PixelCoord::new(x, y + 1),
                diff: self.vertical(x, y),
            })
        });
        h.chain(v)
    }

    /// Number of edges with difference one, i.e. curve steps between
    /// neighboring pixels.
    pub fn unit_edges(&self) -> usize {
        self.edges().filter(|e| e.diff == 1).count()
    }

    /// Multiset of the differences larger than one.
    pub fn summary(&self) -> BTreeMap<u64, usize> {
        let mut m = BTreeMap::new();
        for e in self.edges().filter(|e| e.diff > 1) {
            *m.entry(e.diff).or_insert(0) += 1;
        }
        m
    }

    /// Largest difference on any edge touching each pixel.
    pub fn max_per_pixel(&self) -> Vec<u64> {
        let s = self.side as usize;
        let mut out = vec![0u64; s * s];
        for e in self.edges() {
            for p in [e.from, e.to] {
                let o = p.y as usize * s + p.x as usize;
                out[o] = out[o].max(e.diff);
            }
        }
        out
    }
}

pub fn diff_map(grid: GridSpec) -> Result<EdgeDiffMap> {
    let side = grid.side();
    let mut index = vec![0u64; side as usize * side as usize];
    for p in grid.dims().pixels() {
        index[(p.y * side + p.x) as usize] = curve_index(grid, p)?;
    }
    let at = |x: u32, y: u32| index[(y * side + x) as usize];
    let mut horizontal = Vec::with_capacity(((side - 1) * side) as usize);
    for y in 0..side {
        for x in 0..side - 1 {
            horizontal.push(at(x, y).abs_diff(at(x + 1, y)));
        }
    }
    let mut vertical = Vec::with_capacity(((side - 1) * side) as usize);
    for y in 0..side - 1 {
        for x in 0..side {
            vertical.push(at(x, y).abs_diff(at(x, y + 1)));
        }
    }
    Ok(EdgeDiffMap {
        side,
        horizontal,
        vertical,
    })
}

/// Segment counts of the 3x3 neighborhoods of a whole grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentStats {
    pub side: u32,
    /// Row-major, bottom row first.
    pub counts: Vec<u32>,
    pub histogram: BTreeMap<u32, usize>,
    pub max: u32,
}

impl SegmentStats {
    pub fn at(&self, x: u32, y: u32) -> u32 {
        self.counts[(y * self.side + x) as usize]
    }
}

pub fn segment_stats(grid: GridSpec) -> Result<SegmentStats> {
    let side = grid.side();
    let mut index = vec![0u64; side as usize * side as usize];
    for p in grid.dims().pixels() {
        index[(p.y * side + p.x) as usize] = curve_index(grid, p)?;
    }
    let mut counts = Vec::with_capacity(index.len());
    let mut window = Vec::with_capacity(9);
    for p in grid.dims().pixels() {
        window.clear();
        for y in p.y.saturating_sub(1)..=(p.y + 1).min(side - 1) {
            for x in p.x.saturating_sub(1)..=(p.x + 1).min(side - 1) {
                window.push(index[(y * side + x) as usize]);
            }
        }
        counts.push(count_runs(&mut window));
    }
    let mut histogram = BTreeMap::new();
    for &c in &counts {
        *histogram.entry(c).or_insert(0) += 1;
    }
    let max = counts.iter().copied().max().unwrap_or(0);
    Ok(SegmentStats {
        side,
        counts,
        histogram,
        max,
    })
}

/// Exact star discrepancy of values in `[0, 1)`.
pub fn star_discrepancy_1d(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("empty point set".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    Ok(v.iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max))
}

pub const MAX_DISCREPANCY_POINTS: usize = 4096;

/// Exact star discrepancy of a 2-D point set over origin-anchored boxes.
///
/// The supremum is attained in the limit at boxes whose upper corner
/// coordinates are point coordinates or 1: closed boxes for the excess of
/// points, open boxes for the excess of volume. All such corners are swept in
/// `O(n^2)`.
pub fn star_discrepancy_2d(points: &[[f64; 2]]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("empty point set".into()));
    }
    if points.len() > MAX_DISCREPANCY_POINTS {
        return Err(Error::Capacity(format!(
            "at most {MAX_DISCREPANCY_POINTS} points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mut ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let y_rank = |y: f64| ys.partition_point(|&v| v < y);
    let mut by_x: Vec<(f64, usize)> = points.iter().map(|p| (p[0], y_rank(p[1]))).collect();
    by_x.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut per_row = vec![0usize; ys.len()];
    let mut worst = 0.0f64;
    let mut k = 0;
    let mut x_values: Vec<f64> = by_x.iter().map(|p| p.0).collect();
    x_values.dedup();
    x_values.push(1.0);
    for &a in &x_values {
        // open in x: points with x < a
        while k < by_x.len() && by_x[k].0 < a {
            per_row[by_x[k].1] += 1;
            k += 1;
        }
        let mut below = 0usize;
        for (r, &b) in ys.iter().enumerate() {
            worst = worst.max(a * b - below as f64 / n);
            below += per_row[r];
        }
        worst = worst.max(a - below as f64 / n);

        // closed in x: points with x <= a
        let mut k_closed = k;
        let mut extra = Vec::new();
        while k_closed < by_x.len() && by_x[k_closed].0 <= a {
            per_row[by_x[k_closed].1] += 1;
            extra.push(by_x[k_closed].1);
            k_closed += 1;
        }
        let mut upto = 0usize;
        for (r, &b) in ys.iter().enumerate() {
            upto += per_row[r];
            worst = worst.max(upto as f64 / n - a * b);
        }
        for r in extra {
            per_row[r] -= 1;
        }
    }
    Ok(worst)
}

/// `pixel_x,pixel_y,metric` rows, row-major from the bottom row.
pub fn write_metric_csv<W: Write, T: Display>(
    mut out: W,
    dims: ImageDims,
    values: &[T],
) -> io::Result<()> {
    assert_eq!(values.len() as u64, dims.pixel_count());
    writeln!(out, "pixel_x,pixel_y,metric")?;
    for (p, v) in dims.pixels().zip(values) {
        writeln!(out, "{},{},{v}", p.x, p.y)?;
    }
    Ok(())
}

/// Windowed 1-D star discrepancy of one sample dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformityReport {
    /// Per-pixel discrepancy, row-major from the bottom row.
    pub per_pixel: Vec<f64>,
    pub mean: f64,
    pub max: f64,
}

/// For each pixel, gathers component `dimension` of every sample of every
/// pixel in the `window x window` neighborhood (clipped to the image) and
/// computes the exact 1-D star discrepancy of those values.
pub fn neighborhood_uniformity(
    strategy: &Strategy,
    spp: u64,
    window: u32,
    dimension: usize,
) -> Result<UniformityReport> {
    if window.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("window must be odd, got {window}")));
    }
    if dimension >= strategy.integrand_dims() {
        return Err(Error::DimensionMismatch {
            expected: strategy.integrand_dims(),
            actual: dimension + 1,
        });
    }
    let dims = strategy.dims();
    let pixels: Vec<PixelCoord> = dims.pixels().collect();
    let values: Vec<Vec<f64>> = pixels
        .par_iter()
        .map(|&p| {
            (0..spp)
                .map(|s| Ok(strategy.assign(SampleRequest::new(p, s))?.point[dimension]))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let r = window / 2;
    let per_pixel: Vec<f64> = pixels
        .par_iter()
        .map(|&p| {
            let mut gathered = Vec::new();
            for y in p.y.saturating_sub(r)..=(p.y + r).min(dims.height() - 1) {
                for x in p.x.saturating_sub(r)..=(p.x + r).min(dims.width() - 1) {
                    gathered.extend_from_slice(&values[dims.offset(PixelCoord::new(x, y))]);
                }
            }
            star_discrepancy_1d(&gathered)
        })
        .collect::<Result<_>>()?;
    let mean = per_pixel.iter().sum::<f64>() / per_pixel.len() as f64;
    let max = per_pixel.iter().copied().fold(0.0, f64::max);
    Ok(UniformityReport {
        per_pixel,
        mean,
        max,
    })
}

//! Desk-scale renderer over analytic integrands and error metrics.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::curves::{CurveKind, ImageDims, ImageOrder, PixelCoord};
use crate::image::ImageBuffer;
use crate::sequences::Halton;
use crate::strategies::{HilbertBlocks, SampleRequest, Strategy};
use crate::{Error, Result};

/// Edge length of the square tiles used by the splotchiness metric.
pub const TILE: u32 = 8;

/// Per-pixel budget of the oversampled reference.
pub const REFERENCE_SPP: u64 = 1 << 14;

/// Analytic stand-ins for pixel integrals. Dimensions 0 and 1 are the
/// offset inside the pixel wherever the integrand is spatial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Integrand {
    Constant(f64),
    /// `scale(pixel) * u0 * u1` with a scale varying slowly over the image.
    Gradient,
    /// Coverage of a disk centered in the image with radius `0.35 min(W, H)`.
    Disk,
    /// A hard visibility step in `(u0, u1)` times an area light term in
    /// `(u2, u3)`.
    SoftShadow,
}

impl Integrand {
    pub const NAMES: [&'static str; 4] = ["constant", "gradient", "disk", "soft-shadow"];

    pub fn name(&self) -> &'static str {
        match self {
            Integrand::Constant(_) => "constant",
            Integrand::Gradient => "gradient",
            Integrand::Disk => "disk",
            Integrand::SoftShadow => "soft-shadow",
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            Integrand::Constant(_) => 0,
            Integrand::Gradient | Integrand::Disk => 2,
            Integrand::SoftShadow => 4,
        }
    }

    pub fn eval(&self, pixel: PixelCoord, dims: ImageDims, u: &[f64]) -> f64 {
        match *self {
            Integrand::Constant(c) => c,
            Integrand::Gradient => gradient_scale(pixel, dims) * u[0] * u[1],
            Integrand::Disk => {
                let (cx, cy, r) = disk_geometry(dims);
                let dx = pixel.x as f64 + u[0] - cx;
                let dy = pixel.y as f64 + u[1] - cy;
                if dx * dx + dy * dy < r * r {
                    1.0
                } else {
                    0.0
                }
            }
            Integrand::SoftShadow => {
                if u[0] + u[1] > shadow_edge(pixel, dims) {
                    0.5 * (u[2] + u[3])
                } else {
                    0.0
                }
            }
        }
    }

    /// Exact pixel integral, when one is known.
    pub fn reference(&self, pixel: PixelCoord, dims: ImageDims) -> Option<f64> {
        Some(match *self {
            Integrand::Constant(c) => c,
            Integrand::Gradient => gradient_scale(pixel, dims) / 4.0,
            Integrand::Disk => {
                let (cx, cy, r) = disk_geometry(dims);
                let x0 = pixel.x as f64 - cx;
                let y0 = pixel.y as f64 - cy;
                disk_rect_area(r, x0, x0 + 1.0, y0, y0 + 1.0)
            }
            Integrand::SoftShadow => {
                let e = shadow_edge(pixel, dims);
                // P(u0 + u1 > e) for uniform u on the unit square
                let lit = if e <= 1.0 {
                    1.0 - 0.5 * e * e
                } else {
                    0.5 * (2.0 - e) * (2.0 - e)
                };
                0.5 * lit
            }
        })
    }
}

impl fmt::Display for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Integrand::Constant(c) if *c != 0.5 => write!(f, "constant:{c}"),
            _ => f.write_str(self.name()),
        }
    }
}

impl FromStr for Integrand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(v) = s.strip_prefix("constant:") {
            let c: f64 = v
                .parse()
                .map_err(|_| Error::Parse(format!("bad constant '{v}'")))?;
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::Parse(format!("constant {c} outside [0, 1]")));
            }
            return Ok(Integrand::Constant(c));
        }
        match s {
            "constant" => Ok(Integrand::Constant(0.5)),
            "gradient" | "smooth-gradient" => Ok(Integrand::Gradient),
            "disk" => Ok(Integrand::Disk),
            "soft-shadow" => Ok(Integrand::SoftShadow),
            _ => Err(Error::Parse(format!(
                "unknown integrand '{s}' (expected one of {})",
                Self::NAMES.join(", ")
            ))),
        }
    }
}

fn pixel_center(pixel: PixelCoord, dims: ImageDims) -> (f64, f64) {
    (
        (pixel.x as f64 + 0.5) / dims.width() as f64,
        (pixel.y as f64 + 0.5) / dims.height() as f64,
    )
}

fn gradient_scale(pixel: PixelCoord, dims: ImageDims) -> f64 {
    let (sx, sy) = pixel_center(pixel, dims);
    0.25 + 0.75 * (sx + sy) / 2.0
}

fn shadow_edge(pixel: PixelCoord, dims: ImageDims) -> f64 {
    let (sx, sy) = pixel_center(pixel, dims);
    sx + sy
}

fn disk_geometry(dims: ImageDims) -> (f64, f64, f64) {
    let (w, h) = (dims.width() as f64, dims.height() as f64);
    (w / 2.0, h / 2.0, 0.35 * w.min(h))
}

// Antiderivative of sqrt(r^2 - t^2).
fn half_chord_integral(r: f64, t: f64) -> f64 {
    let t = t.clamp(-r, r);
    0.5 * (t * (r * r - t * t).max(0.0).sqrt() + r * r * (t / r).asin())
}

// Area of the origin-centered disk of radius r below y and left of x.
fn quadrant_area(r: f64, x: f64, y: f64) -> f64 {
    let x = x.clamp(-r, r);
    if x <= -r || y <= -r {
        return 0.0;
    }
    let chord = |a: f64, b: f64| half_chord_integral(r, b) - half_chord_integral(r, a);
    if y >= r {
        return 2.0 * chord(-r, x);
    }
    // the column at t holds the chord length clipped at y: min(y, h) + h
    let ts = (r * r - y * y).sqrt();
    let clip = |a: f64, b: f64| (a.max(-r), b.min(x));
    let mut area = 0.0;
    let (a, b) = clip(-ts, ts);
    if b > a {
        area += y * (b - a) + chord(a, b);
    }
    if y > 0.0 {
        for (a, b) in [clip(-r, -ts), clip(ts, r)] {
            if b > a {
                area += 2.0 * chord(a, b);
            }
        }
    }
    area
}

/// Area of the intersection of the origin-centered disk of radius `r` with
/// the rectangle `[x0, x1] x [y0, y1]`.
pub fn disk_rect_area(r: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let a = quadrant_area(r, x1, y1) - quadrant_area(r, x0, y1) - quadrant_area(r, x1, y0)
        + quadrant_area(r, x0, y0);
    a.max(0.0)
}

/// Renders an image: each pixel is the mean of the integrand over samples
/// `0..spp` of the strategy, accumulated in sample order.
pub fn render(strategy: &Strategy, integrand: &Integrand, spp: u64) -> Result<ImageBuffer> {
    if spp == 0 {
        return Err(Error::InvalidArgument("samples per pixel must be at least 1".into()));
    }
    if strategy.integrand_dims() < integrand.dims() {
        return Err(Error::DimensionMismatch {
            expected: integrand.dims(),
            actual: strategy.integrand_dims(),
        });
    }
    let dims = strategy.dims();
    let pixels: Vec<PixelCoord> = dims.pixels().collect();
    let values = pixels
        .par_iter()
        .map(|&p| {
            let mut sum = 0.0;
            for s in 0..spp {
                let a = strategy.assign(SampleRequest::new(p, s))?;
                sum += integrand.eval(p, dims, a.point.as_slice());
            }
            Ok(sum / spp as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    ImageBuffer::from_gray(dims, values)
}

/// Closed-form reference image.
pub fn reference(integrand: &Integrand, dims: ImageDims) -> Result<ImageBuffer> {
    let values = dims
        .pixels()
        .map(|p| integrand.reference(p, dims))
        .collect::<Option<Vec<f64>>>();
    match values {
        Some(v) => ImageBuffer::from_gray(dims, v),
        None => reference_by_oversampling(integrand, dims, REFERENCE_SPP),
    }
}

/// Reference by brute force: Hilbert-ordered blocks of `spp` Halton points
/// per pixel.
pub fn reference_by_oversampling(
    integrand: &Integrand,
    dims: ImageDims,
    spp: u64,
) -> Result<ImageBuffer> {
    let order = Arc::new(ImageOrder::fitted(CurveKind::Hilbert, dims)?);
    let halton = Halton::faure(integrand.dims().max(2))?;
    let strategy = Strategy::HilbertBlocks(HilbertBlocks::new(order, halton, spp)?);
    render(&strategy, integrand, spp)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport {
    pub rmse: f64,
    /// Population variance of the mean signed error over 8x8 tiles, tiles
    /// clipped at the image border. A proxy for how blotchy the error looks.
    pub tile_splotchiness: f64,
    pub max_abs: f64,
}

pub fn compare(image: &ImageBuffer, reference: &ImageBuffer) -> Result<ErrorReport> {
    if image.dims() != reference.dims() || image.channels() != reference.channels() {
        return Err(Error::DimensionMismatch {
            expected: reference.values().len(),
            actual: image.values().len(),
        });
    }
    let dims = image.dims();
    let channels = image.channels();
    let err: Vec<f64> = image
        .values()
        .iter()
        .zip(reference.values())
        .map(|(a, b)| a - b)
        .collect();
    let rmse = (err.iter().map(|e| e * e).sum::<f64>() / err.len() as f64).sqrt();
    let max_abs = err.iter().fold(0.0f64, |m, e| m.max(e.abs()));

    let tiles_x = dims.width().div_ceil(TILE);
    let tiles_y = dims.height().div_ceil(TILE);
    let mut sums = vec![0.0; (tiles_x * tiles_y) as usize];
    let mut counts = vec![0usize; sums.len()];
    for p in dims.pixels() {
        let t = ((p.y / TILE) * tiles_x + p.x / TILE) as usize;
        for c in 0..channels {
            sums[t] += err[dims.offset(p) * channels + c];
            counts[t] += 1;
        }
    }
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &n)| s / n as f64).collect();
    let mean = means.iter().sum::<f64>() / means.len() as f64;
    let tile_splotchiness =
        means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / means.len() as f64;
    Ok(ErrorReport {
        rmse,
        tile_splotchiness,
        max_abs,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRow {
    pub strategy: String,
    pub integrand: String,
    pub spp: u64,
    pub report: ErrorReport,
}

pub fn write_error_csv<W: Write>(mut out: W, rows: &[ErrorRow]) -> io::Result<()> {
    writeln!(out, "strategy,integrand,spp,rmse,splotchiness,max_abs")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:e},{:e},{:e}",
            r.strategy, r.integrand, r.spp, r.report.rmse, r.report.tile_splotchiness, r.report.max_abs
        )?;
    }
    Ok(())
}

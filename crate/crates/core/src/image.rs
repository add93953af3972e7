//! Gray and RGB float images with binary PGM/PPM and CSV output.
//!
//! Pixel `(x, y)` has its origin in the bottom-left corner. Files are written
//! top row first, as the netpbm formats require.

use std::io::{self, BufRead, Write};

use crate::curves::{ImageDims, PixelCoord};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    channels: usize,
    data: Vec<f64>,
}

/// 8-bit quantization: `floor(255 v + 1/2)` after clamping to `[0, 1]`.
pub fn quantize(v: f64) -> u8 {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    (v * 255.0 + 0.5).floor() as u8
}

impl ImageBuffer {
    pub fn new(dims: ImageDims, channels: usize) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        Ok(ImageBuffer {
            width: dims.width(),
            height: dims.height(),
            channels,
            data: vec![0.0; dims.pixel_count() as usize * channels],
        })
    }

    pub fn gray(dims: ImageDims) -> Self {
        Self::new(dims, 1).unwrap()
    }

    pub fn rgb(dims: ImageDims) -> Self {
        Self::new(dims, 3).unwrap()
    }

    /// A gray image from row-major values, bottom row first.
    pub fn from_gray(dims: ImageDims, values: Vec<f64>) -> Result<Self> {
        if values.len() as u64 != dims.pixel_count() {
            return Err(Error::DimensionMismatch {
                expected: dims.pixel_count() as usize,
                actual: values.len(),
            });
        }
        let mut img = Self::gray(dims);
        for (d, v) in img.data.iter_mut().zip(values) {
            *d = v.clamp(0.0, 1.0);
        }
        Ok(img)
    }

    pub fn dims(&self) -> ImageDims {
        ImageDims::new(self.width, self.height).unwrap()
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, p: PixelCoord, channel: usize) -> usize {
        assert!(p.x < self.width && p.y < self.height && channel < self.channels);
        (p.y as usize * self.width as usize + p.x as usize) * self.channels + channel
    }

    pub fn get(&self, p: PixelCoord, channel: usize) -> f64 {
        self.data[self.offset(p, channel)]
    }

    /// Stores `v` clamped to `[0, 1]`.
    pub fn set(&mut self, p: PixelCoord, channel: usize, v: f64) {
        let o = self.offset(p, channel);
        self.data[o] = v.clamp(0.0, 1.0);
    }

    /// Binary P5 (gray) or P6 (RGB) with maxval 255.
    pub fn write_pnm<W: Write>(&self, mut out: W) -> io::Result<()> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        write!(out, "{magic}\n{} {}\n255\n", self.width, self.height)?;
        let row = self.width as usize * self.channels;
        let mut bytes = Vec::with_capacity(self.data.len());
        for y in (0..self.height as usize).rev() {
            bytes.extend(self.data[y * row..(y + 1) * row].iter().map(|&v| quantize(v)));
        }
        out.write_all(&bytes)
    }

    /// `pixel_x,pixel_y,metric` for gray images, `pixel_x,pixel_y,r,g,b` for
    /// RGB, rows in row-major order from the bottom row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        if self.channels == 1 {
            writeln!(out, "pixel_x,pixel_y,metric")?;
        } else {
            writeln!(out, "pixel_x,pixel_y,r,g,b")?;
        }
        for p in self.dims().pixels() {
            write!(out, "{},{}", p.x, p.y)?;
            for c in 0..self.channels {
                write!(out, ",{}", self.get(p, c))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn to_pnm_bytes(&self) -> Vec<u8> {
        let mut v = Vec::new();
        self.write_pnm(&mut v).expect("writing to memory");
        v
    }
}

/// An 8-bit netpbm image as read back from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct Pnm {
    pub width: u32,
    pub height: u32,
    pub channels: usize,
    /// Top row first, as stored.
    pub bytes: Vec<u8>,
}

impl Pnm {
    /// Sample at `(x, y)` with the bottom-left origin used by [`ImageBuffer`].
    pub fn get(&self, x: u32, y: u32, channel: usize) -> u8 {
        let row = self.height - 1 - y;
        self.bytes[(row as usize * self.width as usize + x as usize) * self.channels + channel]
    }
}

fn header_token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut tok = String::new();
    let mut byte = [0u8];
    loop {
        if r.read(&mut byte)? == 0 {
            break;
        }
        let c = byte[0] as char;
        if c == '#' && tok.is_empty() {
            let mut skip = String::new();
            r.read_line(&mut skip)?;
            continue;
        }
        if c.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            break;
        }
        tok.push(c);
    }
    if tok.is_empty() {
        return Err(Error::Parse("truncated netpbm header".into()));
    }
    Ok(tok)
}

/// Reads a binary P5/P6 file with maxval 255.
pub fn read_pnm<R: BufRead>(mut r: R) -> Result<Pnm> {
    let magic = header_token(&mut r)?;
    let channels = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        m => return Err(Error::Parse(format!("unsupported netpbm magic '{m}'"))),
    };
    let mut num = || -> Result<u32> {
        header_token(&mut r)?
            .parse()
            .map_err(|_| Error::Parse("invalid netpbm header number".into()))
    };
    let (width, height, maxval) = (num()?, num()?, num()?);
    if maxval != 255 {
        return Err(Error::Parse(format!("unsupported maxval {maxval}")));
    }
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != width as usize * height as usize * channels {
        return Err(Error::Parse(format!(
            "expected {} pixel bytes, found {}",
            width as usize * height as usize * channels,
            bytes.len()
        )));
    }
    Ok(Pnm {
        width,
        height,
        channels,
        bytes,
    })
}

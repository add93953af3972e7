//! The `sfcqmc` command line.
//!
//! Every subcommand writes its result files into `--out` (default `.`) and a
//! short summary to standard output. Exit codes: 0 on success, 2 on usage
//! errors, 1 on runtime errors. `SFCQMC_THREADS` caps the worker threads;
//! outputs do not depend on it.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{diff_map, dither_map, segment_stats, star_discrepancy_1d, star_discrepancy_2d, write_metric_csv};
use crate::curves::{curve_index, CurveKind, GridSpec, ImageDims};
use crate::harness::{compare, reference, render, write_error_csv, ErrorRow, Integrand};
use crate::image::ImageBuffer;
use crate::radical::{RadicalInverse, Scramble};
use crate::sequences::{load_generating_vector, Halton};
use crate::strategies::Preset;
use crate::{Error, Result};

pub const THREADS_ENV: &str = "SFCQMC_THREADS";

#[derive(Parser, Debug)]
#[command(name = "sfcqmc", version, about = "Quasi-Monte Carlo sampling along space-filling curves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Seed for every random choice.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Pgm,
    Ppm,
    Csv,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Pgm => "pgm",
            Format::Ppm => "ppm",
            Format::Csv => "csv",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    #[arg(long, value_parser = parse_curve)]
    pub curve: CurveKind,
    #[arg(long)]
    pub level: u32,
}

impl GridArgs {
    fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.curve, self.level)
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Curve index of every pixel.
    CurveMap {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value = "pgm")]
        format: Format,
        #[command(flatten)]
        common: Common,
    },
    /// Segments of the curve inside each 3x3 neighborhood.
    Segments {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Index differences across neighboring pixels.
    DiffMap {
        #[command(flatten)]
        grid: GridArgs,
        /// csv lists every edge; pgm shows the largest difference per pixel.
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[command(flatten)]
        common: Common,
    },
    /// Radical inverse of the first sample of each pixel.
    Dither {
        #[command(flatten)]
        grid: GridArgs,
        /// Comma separated prime bases, one per channel (at most three).
        #[arg(long, value_delimiter = ',', default_value = "2")]
        bases: Vec<u32>,
        /// none, zaremba, faure, digit[:SEED] or owen[:SEED[:DEPTH]].
        #[arg(long, default_value = "none")]
        scramble: String,
        #[arg(long, default_value_t = 1)]
        spp: u64,
        /// Defaults to pgm for one base and ppm otherwise.
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[command(flatten)]
        common: Common,
    },
    /// Renders an analytic integrand and reports the error.
    Render {
        #[arg(long, value_parser = parse_preset)]
        strategy: Preset,
        #[arg(long, value_parser = parse_integrand)]
        integrand: Integrand,
        #[arg(long)]
        width: u32,
        #[arg(long)]
        height: u32,
        #[arg(long, default_value_t = 1)]
        spp: u64,
        #[arg(long, value_parser = parse_curve, default_value = "hilbert")]
        curve: CurveKind,
        /// Generating vector file for the shifted lattice, one integer per line.
        #[arg(long)]
        generator: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "pgm")]
        format: Format,
        #[command(flatten)]
        common: Common,
    },
    /// Star discrepancy of a point set.
    Discrepancy {
        /// Text file with one point per line, coordinates separated by
        /// commas or whitespace.
        #[arg(long, conflicts_with = "halton", required_unless_present = "halton")]
        points: Option<PathBuf>,
        /// The first n points of the d-dimensional Halton sequence, d in {1, 2}.
        #[arg(long, value_parser = parse_halton_spec)]
        halton: Option<(usize, u64)>,
        #[arg(long, default_value = "none")]
        scramble: String,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_curve(s: &str) -> std::result::Result<CurveKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_integrand(s: &str) -> std::result::Result<Integrand, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_halton_spec(s: &str) -> std::result::Result<(usize, u64), String> {
    let (d, n) = s.split_once(':').ok_or("expected d:n")?;
    let d: usize = d.parse().map_err(|_| format!("bad dimension '{d}'"))?;
    let n: u64 = n.parse().map_err(|_| format!("bad point count '{n}'"))?;
    if !(1..=2).contains(&d) {
        return Err(format!("dimension must be 1 or 2, got {d}"));
    }
    if n == 0 {
        return Err("point count must be positive".into());
    }
    Ok((d, n))
}

/// Scramble flags may leave the seed out, in which case `--seed` is used.
fn resolve_scramble(spec: &str, seed: u64) -> Result<Scramble> {
    match spec {
        "digit" => Ok(Scramble::RandomDigit { seed }),
        "owen" => Ok(Scramble::owen(seed)),
        _ => spec.parse(),
    }
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_image(img: &ImageBuffer, dir: &Path, stem: &str, format: Format) -> Result<PathBuf> {
    match format {
        Format::Pgm if img.channels() != 1 => {
            return Err(Error::InvalidArgument("pgm output needs a single channel".into()))
        }
        Format::Ppm if img.channels() != 3 => {
            return Err(Error::InvalidArgument("ppm output needs three channels".into()))
        }
        _ => {}
    }
    let name = format!("{stem}.{}", format.extension());
    let mut out = create(dir, &name)?;
    if format == Format::Csv {
        img.write_csv(&mut out)?;
    } else {
        img.write_pnm(&mut out)?;
    }
    out.flush()?;
    Ok(dir.join(name))
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Some(n),
            _ => {
                let _ = writeln!(stderr, "error: {THREADS_ENV} must be a positive integer, got '{v}'");
                return 2;
            }
        },
        Err(_) => None,
    };
    let mut summary = Vec::new();
    let result = match threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cli.command, &mut summary)),
            Err(e) => Err(Error::InvalidArgument(e.to_string())),
        },
        None => execute(&cli.command, &mut summary),
    };
    let result = result.and_then(|()| Ok(stdout.write_all(&summary)?));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn execute(command: &Command, stdout: &mut Vec<u8>) -> Result<()> {
    match command {
        Command::CurveMap { grid, format, common } => {
            let g = grid.grid()?;
            let stem = format!("curve-map-{}-{}", g.kind(), g.level());
            let indices = g
                .dims()
                .pixels()
                .map(|p| curve_index(g, p))
                .collect::<Result<Vec<u64>>>()?;
            let path = if *format == Format::Csv {
                let name = format!("{stem}.csv");
                let mut out = create(&common.out, &name)?;
                write_metric_csv(&mut out, g.dims(), &indices)?;
                out.flush()?;
                common.out.join(name)
            } else {
                let top = (g.len() - 1).max(1) as f64;
                let img = ImageBuffer::from_gray(g.dims(), indices.iter().map(|&i| i as f64 / top).collect())?;
                write_image(&img, &common.out, &stem, *format)?
            };
            writeln!(stdout, "{}", path.display())?;
        }
        Command::Segments { grid, common } => {
            let g = grid.grid()?;
            let stats = segment_stats(g)?;
            let stem = format!("segments-{}-{}", g.kind(), g.level());
            let mut out = create(&common.out, &format!("{stem}.csv"))?;
            write_metric_csv(&mut out, g.dims(), &stats.counts)?;
            out.flush()?;
            let top = stats.max.max(1) as f64;
            let img = ImageBuffer::from_gray(
                g.dims(),
                stats.counts.iter().map(|&c| c as f64 / top).collect(),
            )?;
            write_image(&img, &common.out, &stem, Format::Pgm)?;
            let mut summary = create(&common.out, &format!("{stem}-summary.csv"))?;
            let mut text = format!("curve,level,max\n{},{},{}\n", g.kind(), g.level(), stats.max);
            text.push_str("segments,pixels\n");
            for (k, n) in &stats.histogram {
                text.push_str(&format!("{k},{n}\n"));
            }
            summary.write_all(text.as_bytes())?;
            summary.flush()?;
            stdout.write_all(text.as_bytes())?;
        }
        Command::DiffMap { grid, format, common } => {
            let g = grid.grid()?;
            let map = diff_map(g)?;
            let stem = format!("diff-map-{}-{}", g.kind(), g.level());
            match format {
                Format::Csv => {
                    let mut out = create(&common.out, &format!("{stem}.csv"))?;
                    writeln!(out, "x0,y0,x1,y1,diff")?;
                    for e in map.edges() {
                        writeln!(out, "{},{},{},{},{}", e.from.x, e.from.y, e.to.x, e.to.y, e.diff)?;
                    }
                    out.flush()?;
                }
                Format::Pgm => {
                    let maxima = map.max_per_pixel();
                    let top = (g.len() - 1).max(1) as f64;
                    let img = ImageBuffer::from_gray(g.dims(), maxima.iter().map(|&d| d as f64 / top).collect())?;
                    write_image(&img, &common.out, &stem, Format::Pgm)?;
                }
                Format::Ppm => return Err(Error::InvalidArgument("diff maps are csv or pgm".into())),
            }
            writeln!(stdout, "diff,edges")?;
            writeln!(stdout, "1,{}", map.unit_edges())?;
            for (d, n) in map.summary() {
                writeln!(stdout, "{d},{n}")?;
            }
        }
        Command::Dither {
            grid,
            bases,
            scramble,
            spp,
            format,
            common,
        } => {
            let g = grid.grid()?;
            let scramble = resolve_scramble(scramble, common.seed)?;
            let channels = bases
                .iter()
                .map(|&b| RadicalInverse::new(b, scramble))
                .collect::<Result<Vec<_>>>()?;
            let img = dither_map(g, g.dims(), &channels, *spp)?;
            let format = format.unwrap_or(if img.channels() == 1 { Format::Pgm } else { Format::Ppm });
            let joined: Vec<String> = bases.iter().map(u32::to_string).collect();
            let stem = format!(
                "dither-{}-{}-b{}-{}-s{}",
                g.kind(),
                g.level(),
                joined.join("_"),
                file_safe(&scramble.to_string()),
                spp
            );
            let path = write_image(&img, &common.out, &stem, format)?;
            writeln!(stdout, "{}", path.display())?;
        }
        Command::Render {
            strategy,
            integrand,
            width,
            height,
            spp,
            curve,
            generator,
            format,
            common,
        } => {
            let dims = ImageDims::new(*width, *height)?;
            let mut s = strategy.build(*curve, dims, *spp, integrand.dims(), common.seed)?;
            if let Some(path) = generator {
                s = s.with_generator(&load_generating_vector(path)?)?;
            }
            let img = render(&s, integrand, *spp)?;
            let report = compare(&img, &reference(integrand, dims)?)?;
            let stem = format!(
                "render-{}-{}-{}-{}x{}-s{}",
                file_safe(&strategy.to_string()),
                file_safe(&integrand.to_string()),
                curve,
                width,
                height,
                spp
            );
            write_image(&img, &common.out, &stem, *format)?;
            let rows = [ErrorRow {
                strategy: strategy.to_string(),
                integrand: integrand.to_string(),
                spp: *spp,
                report,
            }];
            let mut out = create(&common.out, &format!("errors-{}.csv", &stem["render-".len()..]))?;
            write_error_csv(&mut out, &rows)?;
            out.flush()?;
            write_error_csv(stdout, &rows)?;
        }
        Command::Discrepancy {
            points,
            halton,
            scramble,
            common,
        } => {
            let pts = match (points, halton) {
                (Some(path), _) => read_points(&fs::read_to_string(path)?)?,
                (None, Some((d, n))) => {
                    let scramble = resolve_scramble(scramble, common.seed)?;
                    let h = Halton::uniform(*d, scramble)?;
                    (0..*n).map(|i| h.point(i).into_vec()).collect()
                }
                (None, None) => unreachable!("clap requires one source"),
            };
            let d = pts[0].len();
            let value = if d == 1 {
                star_discrepancy_1d(&pts.iter().map(|p| p[0]).collect::<Vec<_>>())?
            } else {
                star_discrepancy_2d(&pts.iter().map(|p| [p[0], p[1]]).collect::<Vec<_>>())?
            };
            let text = format!("points,dims,discrepancy\n{},{d},{value:e}\n", pts.len());
            let mut out = create(&common.out, "discrepancy.csv")?;
            out.write_all(text.as_bytes())?;
            out.flush()?;
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

/// Points in `[0, 1)^d`, d in {1, 2}, one per line. Blank lines, `#`
/// comments and a non-numeric header line are skipped.
pub fn read_points(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut pts: Vec<Vec<f64>> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let p = match parsed {
            Ok(p) => p,
            Err(_) if pts.is_empty() && n == 0 => continue,
            Err(_) => return Err(Error::Parse(format!("line {}: '{line}'", n + 1))),
        };
        if !(1..=2).contains(&p.len()) {
            return Err(Error::Parse(format!("line {}: expected 1 or 2 coordinates", n + 1)));
        }
        if p.iter().any(|v| !(0.0..1.0).contains(v)) {
            return Err(Error::Parse(format!("line {}: coordinates must lie in [0, 1)", n + 1)));
        }
        if let Some(first) = pts.first() {
            if first.len() != p.len() {
                return Err(Error::Parse(format!("line {}: mixed dimensions", n + 1)));
            }
        }
        pts.push(p);
    }
    if pts.is_empty() {
        return Err(Error::InvalidArgument("empty point set".into()));
    }
    Ok(pts)
}

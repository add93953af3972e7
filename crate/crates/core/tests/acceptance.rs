//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL line
//! each and exits non-zero if any failed.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use sfcqmc::analysis::{dither_map, segment_stats};
use sfcqmc::curves::{CurveKind, GridSpec, ImageDims, PixelCoord};
use sfcqmc::harness::{compare, reference, render, Integrand};
use sfcqmc::radical::{inverse_radical, partition_label, RadicalInverse, Scramble};
use sfcqmc::sequences::Halton;
use sfcqmc::strategies::{ImagePlaneCrt, Preset, SampleRequest, Strategy};

type Outcome = Result<String, String>;

// name, check, time limit in seconds
type Criterion = (&'static str, fn() -> Outcome, u64);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !($cond) {
            return Err(format!($($msg)+));
        }
    };
}

fn grid(kind: CurveKind, level: u32) -> GridSpec {
    GridSpec::new(kind, level).unwrap()
}

fn dims(w: u32, h: u32) -> ImageDims {
    ImageDims::new(w, h).unwrap()
}

fn curves_round_trip() -> Outcome {
    let mut checked = 0u64;
    for kind in CurveKind::ALL {
        let max_level = if kind.base() == 2 { 6 } else { 3 };
        for level in 0..=max_level {
            let g = grid(kind, level);
            let mut seen = vec![false; g.len() as usize];
            let mut prev: Option<PixelCoord> = None;
            for i in 0..g.len() {
                let p = g.point(i).map_err(|e| e.to_string())?;
                ensure!(g.index(p).unwrap() == i, "{kind} level {level}: index {i} does not round trip");
                let o = (p.y * g.side() + p.x) as usize;
                ensure!(!seen[o], "{kind} level {level}: {p} visited twice");
                seen[o] = true;
                if kind != CurveKind::Morton {
                    if let Some(q) = prev {
                        ensure!(q.manhattan(p) == 1, "{kind} level {level}: step {q} -> {p}");
                    }
                }
                prev = Some(p);
                checked += 1;
            }
            if kind == CurveKind::Moore && level > 0 {
                let first = g.point(0).unwrap();
                let last = g.point(g.len() - 1).unwrap();
                ensure!(first.manhattan(last) == 1, "Moore level {level} is not closed");
            }
        }
    }
    Ok(format!("{checked} indices"))
}

// Expected 3x3 segment counts on the 8x8 grids, rows from the top (y = 7) down.
const MORTON_LABELS: [[u32; 8]; 8] = [
    [1, 2, 2, 3, 3, 2, 2, 1],
    [2, 4, 4, 5, 5, 4, 4, 2],
    [2, 4, 4, 5, 5, 4, 4, 2],
    [2, 4, 4, 5, 5, 4, 4, 2],
    [2, 4, 4, 5, 5, 4, 4, 2],
    [2, 4, 4, 5, 5, 4, 4, 2],
    [2, 4, 4, 5, 5, 4, 4, 2],
    [1, 2, 2, 3, 3, 2, 2, 1],
];
const HILBERT_LABELS: [[u32; 8]; 8] = [
    [1, 1, 1, 2, 2, 1, 1, 1],
    [1, 2, 2, 2, 2, 2, 2, 1],
    [2, 3, 3, 3, 3, 3, 3, 2],
    [2, 3, 3, 4, 4, 3, 3, 2],
    [1, 3, 3, 3, 3, 3, 3, 1],
    [2, 3, 2, 3, 3, 2, 3, 2],
    [2, 3, 2, 3, 3, 2, 3, 2],
    [1, 2, 1, 2, 2, 1, 2, 1],
];
const MOORE_LABELS: [[u32; 8]; 8] = [
    [1, 1, 2, 1, 1, 2, 1, 1],
    [1, 2, 3, 3, 3, 3, 2, 1],
    [1, 2, 3, 4, 4, 3, 2, 1],
    [2, 2, 3, 3, 3, 3, 2, 2],
    [2, 2, 3, 3, 3, 3, 2, 2],
    [1, 2, 3, 4, 4, 3, 2, 1],
    [1, 2, 3, 4, 4, 3, 2, 1],
    [1, 1, 2, 2, 2, 2, 1, 1],
];

fn segment_labels() -> Outcome {
    let cases = [
        (CurveKind::Morton, &MORTON_LABELS, 5),
        (CurveKind::Hilbert, &HILBERT_LABELS, 4),
        (CurveKind::Moore, &MOORE_LABELS, 4),
    ];
    for (kind, labels, max) in cases {
        let stats = segment_stats(grid(kind, 3)).unwrap();
        for (row, expected) in labels.iter().enumerate() {
            let y = 7 - row as u32;
            for (x, &e) in expected.iter().enumerate() {
                let got = stats.at(x as u32, y);
                ensure!(got == e, "{kind} ({x}, {y}): {got} segments, expected {e}");
            }
        }
        ensure!(stats.max == max, "{kind}: max {} instead of {max}", stats.max);
    }
    Ok("192 pixels, maxima 5/4/4".into())
}

fn morton_parity() -> Outcome {
    let ri = [RadicalInverse::plain(2).unwrap()];
    for level in 1..=6 {
        let g = grid(CurveKind::Morton, level);
        let img = dither_map(g, g.dims(), &ri, 1).unwrap();
        for p in g.dims().pixels() {
            let v = img.get(p, 0);
            let ok = if p.x % 2 == 0 { v < 0.5 } else { v >= 0.5 };
            ensure!(ok, "level {level}, {p}: value {v}");
        }
    }
    Ok("levels 1..=6".into())
}

// m-digit reversal of the low digits of i
fn reversed(b: u64, m: u32, mut i: u64) -> u64 {
    let mut r = 0;
    for _ in 0..m {
        r = r * b + i % b;
        i /= b;
    }
    r
}

fn partition_permutation() -> Outcome {
    for b in [2u32, 3] {
        for m in 0..=8 {
            let n = (b as u64).pow(m);
            for window in 0..3u64 {
                let mut hit = vec![false; n as usize];
                for i in window * n..(window + 1) * n {
                    let label = partition_label(b, m, i).unwrap();
                    ensure!(label == reversed(b as u64, m, i), "b={b} m={m} i={i}: label {label}");
                    ensure!(!hit[label as usize], "b={b} m={m}: label {label} repeats in window {window}");
                    hit[label as usize] = true;
                }
            }
            for j in 0..n {
                let i = inverse_radical(b, m, j).unwrap();
                ensure!(i < n && partition_label(b, m, i).unwrap() == j, "b={b} m={m}: inverse of {j}");
            }
        }
    }
    Ok("b in {2,3}, m <= 8, 3 windows each".into())
}

fn index_coverage() -> Outcome {
    for (w, h) in [(8, 8), (5, 7)] {
        let d = dims(w, h);
        for spp in [1u64, 4] {
            let s = Preset::HilbertBlocks.build(CurveKind::Hilbert, d, spp, 2, 0).unwrap();
            let mut seen = BTreeSet::new();
            for p in d.pixels() {
                for k in 0..spp {
                    let i = s.assign(SampleRequest::new(p, k)).unwrap().index.unwrap();
                    ensure!(seen.insert(i), "{w}x{h} spp {spp}: index {i} assigned twice");
                }
            }
            let total = spp * d.pixel_count();
            ensure!(
                seen.len() as u64 == total && seen.last() == Some(&(total - 1)),
                "{w}x{h} spp {spp}: indices do not fill 0..{total}"
            );
        }
        for preset in [Preset::Partitioned, Preset::PartitionedInverse] {
            let s = preset.build(CurveKind::Hilbert, d, 4, 2, 0).unwrap();
            let Strategy::Partitioned(part) = &s else {
                return Err("partitioned preset built another strategy".into());
            };
            let n = part.grid().len();
            for k in 0..4u64 {
                let mut seen = BTreeSet::new();
                for p in d.pixels() {
                    let i = s.assign(SampleRequest::new(p, k)).unwrap().index.unwrap();
                    ensure!(i / n == k, "{preset} {w}x{h}: sample {k} index {i} outside window {k}");
                    ensure!(seen.insert(i), "{preset} {w}x{h}: index {i} twice");
                }
                if d.pixel_count() == n {
                    ensure!(seen.len() as u64 == n, "{preset}: window {k} not covered");
                }
            }
        }
    }
    Ok("8x8 and 5x7".into())
}

fn crt_oracle() -> Outcome {
    let d = dims(8, 9);
    for halton in [Halton::plain(2).unwrap(), Halton::faure(3).unwrap()] {
        let crt = ImagePlaneCrt::new(d, halton.clone()).unwrap();
        let mut cells: BTreeMap<(u32, u32), Vec<u64>> = BTreeMap::new();
        for i in 0..8 * 9 * 4u64 {
            // every phi_3 value here has a denominator dividing 3^6
            let x = (8.0 * halton.value(0, i)).floor() as u32;
            let y = (9.0 * halton.value(1, i) + 1e-9).floor() as u32;
            cells.entry((x, y)).or_default().push(i);
        }
        ensure!(cells.len() == 72, "brute force binned into {} cells", cells.len());
        for ((x, y), indices) in cells {
            ensure!(indices.len() == 4, "cell ({x}, {y}) holds {} points", indices.len());
            for (s, &expected) in indices.iter().enumerate() {
                let a = crt.assign(SampleRequest::new(PixelCoord::new(x, y), s as u64)).unwrap();
                ensure!(a.index == Some(expected), "cell ({x}, {y}) sample {s}: {:?} vs {expected}", a.index);
            }
        }
    }
    Ok("72 cells x 4 samples, plain and Faure".into())
}

fn scrambling_identities() -> Outcome {
    for b in [2u32, 3, 5, 7] {
        for seed in 0..64u64 {
            let owen = RadicalInverse::new(b, Scramble::Owen { seed, depth: 1 }).unwrap();
            let digit = RadicalInverse::new(b, Scramble::RandomDigit { seed }).unwrap();
            for i in 0..(b as u64).pow(2) {
                ensure!(
                    owen.prefix(i, 1).unwrap() == digit.prefix(i, 1).unwrap(),
                    "b={b} seed={seed} i={i}: leading digits differ"
                );
            }
        }
    }
    // one point per elementary interval, in 1-D and for the (2, 3) pair
    for b in [2u32, 3, 5] {
        for seed in [1u64, 2, 3] {
            let ri = RadicalInverse::new(b, Scramble::owen(seed)).unwrap();
            for m in 0..=6 {
                let n = (b as u64).pow(m);
                for block in 0..2u64 {
                    let mut hit = vec![false; n as usize];
                    for i in block * n..(block + 1) * n {
                        let cell = (ri.value(i) * n as f64).floor() as usize;
                        ensure!(!hit[cell], "b={b} seed={seed} m={m}: interval {cell} hit twice");
                        hit[cell] = true;
                    }
                }
            }
        }
    }
    let h = Halton::new(&[Scramble::owen(7), Scramble::owen(8)]).unwrap();
    for a in 0..=6u32 {
        for c in 0..=(6 - a) {
            let (nx, ny) = (1u64 << a, 3u64.pow(c));
            let mut hit = vec![false; (nx * ny) as usize];
            for i in 0..nx * ny {
                let p = h.point(i);
                let cell = (p[0] * nx as f64).floor() as u64 * ny + (p[1] * ny as f64).floor() as u64;
                ensure!(!hit[cell as usize], "2^{a} x 3^{c} box hit twice");
                hit[cell as usize] = true;
            }
        }
    }
    Ok("leading digits match; occupancy kept for m <= 6".into())
}

fn gradient_trend() -> Outcome {
    let d = dims(64, 64);
    let f = Integrand::Gradient;
    let truth = reference(&f, d).unwrap();
    let mut lines = Vec::new();
    for spp in [1u64, 4] {
        let report = |preset: Preset| {
            let s = preset.build(CurveKind::Hilbert, d, spp, f.dims(), 0).unwrap();
            compare(&render(&s, &f, spp).unwrap(), &truth).unwrap()
        };
        let hb = report(Preset::HilbertBlocks);
        let crt = report(Preset::BaselineCrt);
        let ratio = hb.rmse / crt.rmse;
        lines.push(format!(
            "spp {spp}: rmse {:.4}/{:.4}, splotchiness {:.3e}/{:.3e}",
            hb.rmse, crt.rmse, hb.tile_splotchiness, crt.tile_splotchiness
        ));
        ensure!((0.8..=1.25).contains(&ratio), "spp {spp}: rmse ratio {ratio:.3} ({})", lines.join("; "));
        ensure!(
            hb.tile_splotchiness < crt.tile_splotchiness,
            "spp {spp}: splotchiness not lower ({})",
            lines.join("; ")
        );
    }
    Ok(format!("proxy metric; curve vs image plane, {}", lines.join("; ")))
}

fn consistency() -> Outcome {
    let d = dims(64, 64);
    let f = Integrand::Disk;
    let truth = reference(&f, d).unwrap();
    let mut lines = Vec::new();
    for preset in Preset::deterministic() {
        let rmse = |spp: u64| {
            let s = preset.build(CurveKind::Hilbert, d, spp, f.dims(), 0).unwrap();
            compare(&render(&s, &f, spp).unwrap(), &truth).unwrap().rmse
        };
        let (r1, r64) = (rmse(1), rmse(64));
        lines.push(format!("{preset} {r1:.4}->{r64:.4}"));
        ensure!(r64 < r1 / 4.0, "{preset}: rmse {r1} at 1 spp, {r64} at 64 spp");
    }
    Ok(lines.join(", "))
}

fn cli_runs(out: &Path, threads: &str) -> Result<(), String> {
    let o = out.to_str().unwrap();
    let runs: Vec<Vec<&str>> = vec![
        vec!["curve-map", "--curve", "hilbert", "--level", "4"],
        vec!["curve-map", "--curve", "peano", "--level", "2", "--format", "csv"],
        vec!["segments", "--curve", "moore", "--level", "3"],
        vec!["diff-map", "--curve", "morton", "--level", "3"],
        vec!["diff-map", "--curve", "hilbert", "--level", "3", "--format", "pgm"],
        vec!["dither", "--curve", "morton", "--level", "5", "--bases", "2", "--spp", "1"],
        vec!["dither", "--curve", "hilbert", "--level", "5", "--bases", "2,3,5", "--scramble", "owen", "--spp", "4", "--seed", "3"],
        vec!["render", "--strategy", "hilbert-blocks", "--integrand", "disk", "--width", "32", "--height", "24", "--spp", "4"],
        vec!["render", "--strategy", "randomized:partitioned", "--integrand", "soft-shadow", "--width", "16", "--height", "16", "--spp", "4", "--seed", "5"],
        vec!["render", "--strategy", "shifted-lattice", "--integrand", "gradient", "--width", "16", "--height", "16", "--spp", "8", "--format", "csv"],
        vec!["discrepancy", "--halton", "2:256", "--scramble", "faure"],
    ];
    for args in runs {
        let status = Command::new(env!("CARGO_BIN_EXE_sfcqmc"))
            .args(&args)
            .args(["--out", o])
            .env("SFCQMC_THREADS", threads)
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(
            status.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&status.stderr)
        );
    }
    Ok(())
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn cli_determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    cli_runs(a.path(), "1")?;
    cli_runs(b.path(), "8")?;
    let (fa, fb) = (read_dir(a.path()), read_dir(b.path()));
    ensure!(fa.keys().eq(fb.keys()), "different file sets");
    for (name, bytes) in &fa {
        ensure!(bytes == &fb[name], "{name} differs between 1 and 8 threads");
    }
    Ok(format!("{} files identical", fa.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("curve round trip, adjacency, Moore closure", curves_round_trip, 5),
        ("8x8 segment counts match the reference labels", segment_labels, 1),
        ("Morton dither parity", morton_parity, 1),
        ("partition permutations", partition_permutation, 5),
        ("index coverage", index_coverage, 1),
        ("CRT baseline vs brute force", crt_oracle, 1),
        ("scrambling identities", scrambling_identities, 2),
        ("gradient rmse parity and splotchiness", gradient_trend, 10),
        ("disk consistency", consistency, 30),
        ("CLI determinism across thread counts", cli_determinism, 60),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| {
                Err(p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panicked".into()))
            });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > Duration::from_secs(*limit) => {
                Err(format!("{msg}; took {elapsed:.2?}, limit {limit} s"))
            }
            other => other,
        };
        match outcome {
            Ok(msg) => println!("criterion {:2} PASS {name} [{elapsed:.2?}] {msg}", n + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:2} FAIL {name} [{elapsed:.2?}] {msg}", n + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Regenerates `data/lattice_generator.txt`.
//!
//! Usage: `cargo run --release --example lattice_search -- [DIMS] [BITS]`

use sfcqmc::sequences::{format_generating_vector, search_generating_vector};

fn main() {
    let mut args = std::env::args().skip(1);
    let dims: usize = args.next().map_or(8, |a| a.parse().expect("DIMS"));
    let bits: u32 = args.next().map_or(16, |a| a.parse().expect("BITS"));
    let z = search_generating_vector(dims, bits, 4..=16);
    print!("{}", format_generating_vector(&z));
}

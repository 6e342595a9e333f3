//! Write a generated English-like treebank to stdout.
//!
//! Usage: generate <sentences> <seed>

use std::io::{self, BufWriter};

use punctkit::write_conll;
use punctkit_synth::EnglishGenerator;

fn main() -> io::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (n, seed) = match args.as_slice() {
        [n, seed] => (n.parse(), seed.parse()),
        _ => {
            eprintln!("usage: generate <sentences> <seed>");
            std::process::exit(1);
        }
    };
    let (Ok(n), Ok(seed)) = (n, seed) else {
        eprintln!("sentences and seed must be non-negative integers");
        std::process::exit(1);
    };
    let document = EnglishGenerator::new(seed).document("generated", n);
    write_conll(&document, BufWriter::new(io::stdout().lock()))
}

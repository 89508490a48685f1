//! Parse an experiment config, print its canonical form, and run it.
//!
//! `cargo run --release --example config_file -- configs/fig4.cfg out/`

use std::path::PathBuf;

use qinverse::experiment::run;
use qinverse::ExperimentConfig;

fn main() -> qinverse::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = PathBuf::from(args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/fig4.cfg").into()));
    let out = PathBuf::from(args.next().unwrap_or_else(|| std::env::temp_dir().join("qinverse-example").display().to_string()));
    let cfg = ExperimentConfig::load(&path)?;
    print!("{cfg}");
    for file in run(&cfg, &out)? {
        println!("wrote {}", file.display());
    }
    Ok(())
}

//! Qubit amplitudes recovered from counts in three cells, with the
//! convergence trace thinned to a few checkpoints.
//!
//! `cargo run --release --example fig4_reconstruction -- [K] [seed]`

use qinverse::experiment::{convergence_trace, truth};
use qinverse::inverse::{reconstruct, solve_counts};
use qinverse::pointer::reading_density;
use qinverse::sampler::{count, sample};
use qinverse::{scenarios, PointerConfig};

fn main() -> qinverse::Result<()> {
    let mut args = std::env::args().skip(1);
    let k: usize = args.next().map_or(100_000, |s| s.parse().expect("K"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));

    let system = scenarios::fig4_system();
    let cfg = PointerConfig::new(scenarios::FIG4_DELTA_F, vec![1.0, -1.0])?;
    let partition = scenarios::fig4_partition();
    let t = truth(&system, &cfg, &partition, 0)?;
    println!("cell probabilities {:?}", t.cell_probabilities);
    println!("truth: |A1| = {:.5}  |A2| = {:.5}  phi = {:.5}", t.moduli[0], t.moduli[1], t.phases[1]);

    let record = sample(&reading_density(&system.path_amplitudes(), &cfg)?, k, seed);
    let trace = convergence_trace(&record.readings, &partition, &cfg, 0, 100);
    println!("{:>8} {:>9} {:>9} {:>9}", "K", "|A1|", "|A2|", "phi");
    let mut next = 100;
    for row in &trace {
        if row.trials == next || row.trials == k {
            println!(
                "{:>8} {:>9.5} {:>9.5} {:>9.5}",
                row.trials, row.moduli[0], row.moduli[1], row.phases[1]
            );
            next *= 10;
        }
    }

    let rec = reconstruct(&solve_counts(&count(&record, &partition), &partition, &cfg)?, &cfg, 0)?;
    let se = rec.standard_errors.as_ref().expect("sampled fit");
    println!(
        "final: |A1| = {:.5} ± {:.5}  |A2| = {:.5} ± {:.5}  phi = {:.5} ± {:.5}",
        rec.moduli[0], se.moduli[0], rec.moduli[1], se.moduli[1], rec.phases[1], se.phases[1]
    );
    Ok(())
}

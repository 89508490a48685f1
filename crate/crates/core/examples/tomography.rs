//! State at the coupling time rebuilt from sampled amplitudes, in both
//! conjugation branches.

use qinverse::experiment::tomography;
use qinverse::inverse::{reconstruct, solve_counts};
use qinverse::pointer::reading_density;
use qinverse::sampler::{count, sample};
use qinverse::{scenarios, PointerConfig};

fn main() -> qinverse::Result<()> {
    let system = scenarios::fig4_system();
    let cfg = PointerConfig::new(scenarios::FIG4_DELTA_F, vec![1.0, -1.0])?;
    let partition = scenarios::fig4_partition();
    for k in [10_000, 100_000, 1_000_000] {
        let record = sample(&reading_density(&system.path_amplitudes(), &cfg)?, k, 7);
        let rec = reconstruct(&solve_counts(&count(&record, &partition), &partition, &cfg)?, &cfg, 0)?;
        let out = tomography(&rec, &system)?;
        println!(
            "K = {k:>8}: fidelity {:.6} (direct {:.4}, conjugate {:.4})",
            out.fidelity, out.fidelity_direct, out.fidelity_conjugate
        );
    }
    Ok(())
}

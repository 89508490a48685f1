//! Conditioning of the three-cell design, arrival probability and sampled
//! reconstruction error over six decades of pointer width.

use qinverse::inverse::conditioning_sweep;
use qinverse::numerics::logspace;
use qinverse::pointer::{decohered_arrival, unperturbed_arrival};
use qinverse::scenarios;

fn main() -> qinverse::Result<()> {
    let system = scenarios::fig4_system();
    let amps = system.path_amplitudes();
    let widths = logspace(2e-3, 2e3, 25);
    let rows = conditioning_sweep(&system, &scenarios::fig4_partition(), &widths, 100_000, 6)?;
    println!("{:>10} {:>10} {:>10} {:>10} {:>10}", "delta_f", "|det|", "sigma_min", "error", "arrival");
    for r in &rows {
        println!(
            "{:>10.3e} {:>10.3e} {:>10.3e} {:>10.4} {:>10.6}",
            r.delta_f, r.abs_det, r.sigma_min, r.recon_error, r.arrival_prob
        );
    }
    println!(
        "limits: sum |A|^2 = {:.6}, |sum A|^2 = {:.6}",
        decohered_arrival(&amps),
        unperturbed_arrival(&amps)
    );
    Ok(())
}

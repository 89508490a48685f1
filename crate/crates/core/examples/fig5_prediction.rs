//! Densities at other pointer widths predicted from one reconstructed Gram
//! matrix, against the exact forward densities.

use qinverse::inverse::{predict_commuting, predict_with_band, solve_counts};
use qinverse::pointer::reading_density;
use qinverse::sampler::{count, sample};
use qinverse::{scenarios, PointerConfig};

fn main() -> qinverse::Result<()> {
    let system = scenarios::fig4_system();
    let amps = system.path_amplitudes();
    let c = [1.0, -1.0];
    let cfg = PointerConfig::new(scenarios::FIG4_DELTA_F, c.to_vec())?;
    let partition = scenarios::fig4_partition();
    let record = sample(&reading_density(&amps, &cfg)?, 100_000, 5);
    let fit = solve_counts(&count(&record, &partition), &partition, &cfg)?;

    for df in [0.5, 2.0] {
        let exact = reading_density(&amps, &PointerConfig::new(df, c.to_vec())?)?;
        let band = predict_with_band(&fit, &c, df)?;
        println!("Δf = {df}: max |predicted - exact| = {:.2e}", band.density.max_abs_difference(&exact));
        println!("{:>8} {:>10} {:>10} {:>10}", "f", "predicted", "se", "exact");
        let stride = exact.axis.len() / 12;
        for i in (0..exact.axis.len()).step_by(stride) {
            println!(
                "{:>8.3} {:>10.5} {:>10.5} {:>10.5}",
                exact.axis[i], band.density.values[i], band.standard_error[i], exact.values[i]
            );
        }
    }

    // Doubling both eigenvalues is another observable diagonal in the same basis.
    let doubled = predict_commuting(&fit.gram, &[2.0, -2.0], 1.0)?;
    println!("mean reading for 2σz at Δf = 1: {:.4}", doubled.mean());
    Ok(())
}

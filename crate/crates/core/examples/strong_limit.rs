//! Narrow pointer: cell masses approach the Born weights of the paths, and
//! a projector merges the rest of the spectrum coherently.

use qinverse::pointer::{interval_probability, strong_limit_stats};
use qinverse::{scenarios, PointerConfig};

fn main() -> qinverse::Result<()> {
    let amps = scenarios::fig4_system().path_amplitudes();
    let total = amps.sum_of_squares();
    for df in [0.5, 0.1, 0.002] {
        let cfg = PointerConfig::new(df, vec![1.0, -1.0])?;
        let p = interval_probability(&amps, &cfg, (0.0, f64::INFINITY), true)?;
        println!("Δf = {df:>5}: P(f > 0) = {p:.6}");
    }
    println!("|A1|^2 / Σ|A|^2 = {:.6}", amps.0[0].norm_sqr() / total);

    let a = scenarios::random_system(3, 41).path_amplitudes();
    let s = strong_limit_stats(&a, &[1.0, 0.0, 0.0])?;
    println!("projector mean {:.5}, with the complement split {:.5}", s.mean, s.distinct_mean);
    Ok(())
}

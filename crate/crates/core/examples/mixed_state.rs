//! A mixed preparation: reading density and the strong and weak means.

use qinverse::pointer::mixed_reading_density;
use qinverse::{scenarios, MixedState, PointerConfig, QuantumState};

fn main() -> qinverse::Result<()> {
    let system = scenarios::fig4_system();
    let mixed = MixedState::new(vec![
        (0.3, QuantumState::basis(2, 0)?),
        (0.7, QuantumState::basis(2, 1)?),
    ])?;
    for df in [0.01, 0.8, 100.0] {
        let cfg = PointerConfig::new(df, vec![1.0, -1.0])?;
        let out = mixed_reading_density(&mixed, &system, &cfg)?;
        println!(
            "Δf = {df:>6}: <f> = {:>8.5}  strong {:.5}  weak {:.5}  arrival {:.5}  weights {:.4?}",
            out.exact_mean, out.strong_mean, out.weak_mean, out.arrival_probability, out.effective_weights
        );
    }
    Ok(())
}

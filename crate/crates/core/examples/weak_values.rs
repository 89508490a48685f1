//! Weak-pointer means for projectors, their convergence to the relative
//! amplitudes, and recovery of those amplitudes from sampled readings.

use qinverse::inverse::{weak_reconstruct, WeakInput, WEAK_REGIME_RATIO};
use qinverse::pointer::{
    exact_mean_momentum, exact_mean_reading, momentum_density, reading_density, relative_amplitudes,
    weak_limit_stats,
};
use qinverse::sampler::sample_stream;
use qinverse::{scenarios, PointerConfig};

fn main() -> qinverse::Result<()> {
    let amps = scenarios::fig4_system().path_amplitudes();
    let alpha = relative_amplitudes(&amps)?;
    println!("α = {:.5}, {:.5}", alpha[0], alpha[1]);

    let projector = [1.0, 0.0];
    for df in [5.0, 10.0, 20.0, 40.0] {
        let cfg = PointerConfig::new(df, projector.to_vec())?;
        let exact = exact_mean_reading(&amps, &cfg)?;
        println!("Δf = {df:>4}: <f> = {exact:.6}  |<f> - Re α1| = {:.2e}", (exact - alpha[0].re).abs());
    }

    let df = 50.0;
    let cfg = PointerConfig::new(df, projector.to_vec())?;
    let weak = weak_limit_stats(&amps, &projector, df)?;
    println!(
        "Δf = 50: <λ> from the momentum density {:.4e}, weak formula {:.4e}",
        momentum_density(&amps, &cfg)?.mean(),
        weak.mean_momentum
    );

    let inputs: Vec<WeakInput> = (0..2)
        .map(|n| {
            let mut proj = vec![0.0; 2];
            proj[n] = 1.0;
            let cfg = PointerConfig::new(df, proj)?;
            let record = sample_stream(&reading_density(&amps, &cfg)?, 1_000_000, 11, n as u64);
            WeakInput::from_readings(&record.readings, exact_mean_momentum(&amps, &cfg)?, 0.0)
        })
        .collect::<qinverse::Result<_>>()?;
    let est = weak_reconstruct(&inputs, df, 1.0, WEAK_REGIME_RATIO)?;
    for n in 0..2 {
        println!("α{} = {:.4} ± {:.4} (truth {:.4})", n + 1, est.alpha[n], est.se_re[n], alpha[n]);
    }
    println!(
        "|Σα - 1| = {:.2e}, consistent: {}, cost factor {}",
        est.sum_rule_deviation, est.consistent, est.relative_cost
    );
    Ok(())
}

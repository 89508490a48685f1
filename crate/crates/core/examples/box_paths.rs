//! Three paths where two amplitudes cancel. Opening the whole box never
//! finds the particle, yet each half does; weakly, the half-box projector
//! reads nonzero while the whole box reads zero.

use qinverse::pointer::{strong_limit_stats, weak_limit_stats};
use qinverse::scenarios;

fn main() -> qinverse::Result<()> {
    let a = scenarios::box_system().path_amplitudes();
    for (j, x) in a.as_slice().iter().enumerate() {
        println!("A{} = {:.5}", j + 1, x);
    }
    let distinct = strong_limit_stats(&a, &[1.0, 2.0, 3.0])?;
    let whole = strong_limit_stats(&a, &[1.0, 1.0, 0.0])?;
    println!("distinct eigenvalues: masses {:?}", distinct.masses);
    println!(
        "box projector: class values {:?}, masses {:?}",
        whole.class_values, whole.masses
    );
    for (name, c) in [("half box", [1.0, 0.0, 0.0]), ("whole box", [1.0, 1.0, 0.0])] {
        let w = weak_limit_stats(&a, &c, 100.0)?;
        println!("weak {name}: <f> = {:.3e}", w.mean_reading);
    }
    Ok(())
}

//! Path amplitudes for a chain of measurements: Born rule for one step,
//! coherent sums over degenerate outcomes, and post-selection.

use qinverse::paths::{marginalize_last, outcome_distribution, path_amplitude, postselected_distribution};
use qinverse::scenarios;

fn main() -> qinverse::Result<()> {
    let chain = scenarios::random_chain(3, 2, 17);
    let a = path_amplitude(&chain, &[0, 1])?;
    println!("A(c_1 <- c_0 <- b) = {a:.5}");

    let dist = outcome_distribution(&chain)?;
    println!("total probability {:.12}", dist.total());
    let first = marginalize_last(&dist)?;
    println!("marginal of the first step {:?}", first);

    let system = scenarios::fig4_system();
    let post = postselected_distribution(&system.chain(), 0)?;
    println!("qubit, post-selected on d: {post:?}");
    Ok(())
}

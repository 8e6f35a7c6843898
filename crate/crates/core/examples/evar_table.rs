//! EMean/EVar of each approximate loss against exact SkewIoU on random pairs.
//!
//! cargo run --release --example evar_table [seed]

use kfiou::consistency::{simulate, strictly_increasing, EvarMode, Method, PairProtocol, SimOptions};

fn main() -> kfiou::error::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let protocol = PairProtocol { seed, ..PairProtocol::default() };
    for mode in [EvarMode::Error, EvarMode::Literal] {
        let opts = SimOptions { evar_mode: mode, ..SimOptions::default() };
        let sim = simulate(&protocol, &Method::TABLE, &opts)?;
        println!("EVar mode {mode:?}, seed {seed}, {} pairs", protocol.n_samples);
        print!("{}", sim.summary_csv());
        println!("strictly increasing: {}\n", strictly_increasing(&sim.evars()));
    }
    Ok(())
}

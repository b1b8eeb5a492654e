//! Join two half-chain ground states and watch the entanglement grow.
//!
//! cargo run --release --example local_quench -- [L] [t_max]

use reggeon::chain::ChainModel;
use reggeon::quench::{local_quench, uniform_times, QuenchOptions};

fn main() -> reggeon::Result<()> {
    let mut args = std::env::args().skip(1);
    let sites: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(16);
    let t_max: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(20.0);
    let model = ChainModel::HeisenbergProxy { sites, periodic: true };
    let opts = QuenchOptions::halves(&model, uniform_times(t_max, 0.1));
    let run = local_quench(&model, &opts)?;

    for (t, s) in run.trace.times.iter().zip(&run.trace.values).step_by(5) {
        println!("{t:6.2}  {s:.6}");
    }
    println!("saturation time  {:?}", run.saturation_time);
    println!(
        "fit window {:?}: c_eff = {:?}, tau_eff = {:?}, rms = {:?}",
        run.window, run.fit.map(|f| f.c_eff), run.fit.map(|f| f.tau_eff), run.fit.map(|f| f.residual)
    );
    println!("linear envelope {:?}", run.envelope);
    println!("invariants: {:?}", run.trace.checks);
    Ok(())
}

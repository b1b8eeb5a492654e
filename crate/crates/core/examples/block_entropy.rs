//! Block entanglement of the periodic Heisenberg ground state and the chord-length fit.
//!
//! cargo run --release --example block_entropy -- [L]

use reggeon::chain;
use reggeon::quench;

fn main() -> reggeon::Result<()> {
    let sites: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(16);
    let h = chain::heisenberg_proxy(sites, true, Some(sites / 2))?;
    let gs = quench::ground_state(&h)?;
    println!("L = {sites}: E0 = {:.12} (residual {:.1e})", gs.energy, gs.residual);
    let ells: Vec<usize> = (1..sites).collect();
    let scan = quench::static_block_entropy_scan(&gs.state, &ells)?;
    for (l, s) in scan.ells.iter().zip(&scan.values) {
        println!("  l = {l:2}  S = {s:.10}");
    }
    println!("c_eff = {:.4}, rms {:.1e}", scan.fit.c_eff, scan.fit.residual);
    Ok(())
}

//! Ground energies E(L) at fixed chemical potential and the 1/L fit for c.
//!
//! cargo run --release --example central_charge -- [h]

use reggeon::finite_size::{self, FitOptions, SeriesOptions};

fn main() {
    let h: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let lengths = [32, 64, 128, 256, 512];
    let series = match finite_size::ground_energy_series(h, &lengths, &SeriesOptions::default()) {
        Ok(s) => s,
        Err(e) => {
            // At h = 0.5 the exterior equations give a negative filling; report it.
            eprintln!("no series at h = {h}: {e}");
            std::process::exit(3);
        }
    };
    for e in &series.entries {
        println!("L = {:4}  N = {:4}  E - hN = {:+.12}", e.length, e.roots, e.energy);
    }
    match finite_size::extract_central_charge(&series, &FitOptions::default()) {
        Ok(est) => println!("c = {:.4} +- {:.4} (v_F {:.6})", est.c, est.stderr, est.fermi_velocity),
        Err(e) => eprintln!("fit failed: {e}"),
    }
}

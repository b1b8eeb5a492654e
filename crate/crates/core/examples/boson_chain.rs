//! The s = -1 chain in a truncated boson basis.
//!
//! Shows the two-site J spectrum approaching -2, -3, ... and the three-site
//! ring matching Bethe energies once the cutoff holds the charge sector.
//!
//! cargo run --release --example boson_chain

use reggeon::chain;

fn main() -> reggeon::Result<()> {
    for n_max in [2, 4, 8, 16] {
        let rep = chain::boson_spin_operators(1.0, 2.0, n_max)?;
        let j = chain::two_site_j(&rep)?;
        println!(
            "n_max {n_max:2}: J leading {:?}, series deviation {:.2e}",
            j.leading_values(4).iter().map(|v| (v * 1e6).round() / 1e6).collect::<Vec<_>>(),
            chain::j_series_deviation(&rep, 7)?
        );
    }
    for n_max in [2, 4, chain::DEFAULT_N_MAX] {
        let cmp = chain::compare_with_bethe(3, n_max, 6, 6)?;
        println!("L = 3, charge 6, n_max {n_max}: deviation {:.2e}", cmp.deviation);
        for (a, b) in cmp.chain.iter().zip(&cmp.bethe) {
            println!("    chain {a:+.10}  bethe {b:+.10}");
        }
    }
    Ok(())
}

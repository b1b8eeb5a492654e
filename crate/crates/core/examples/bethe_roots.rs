//! Ground state of the s = -1 chain, its transfer matrix check, and the one-magnon branches.
//!
//! cargo run --example bethe_roots -- [L] [N]

use reggeon::bethe;

fn main() -> reggeon::Result<()> {
    let mut args = std::env::args().skip(1);
    let length: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(12);
    let roots: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(4);

    let gs = bethe::ground_state(length, roots)?;
    println!("L = {length}, N = {roots}, quantum numbers {:?}", gs.quantum_numbers.values());
    for (i, r) in gs.roots.iter().enumerate() {
        println!("  lambda_{i} = {r:+.15}");
    }
    println!("E = {:.15}", gs.energy());
    println!("counting residual {:.2e}, T-Q residual {:.2e}", gs.residual, bethe::tq_polynomiality_residual(&gs)?);

    println!("single magnon, lambda = -cot(pi n / L):");
    for n in 1..length as i64 {
        println!("  n = {n:2}  {:+.12}", bethe::closed_form_single_root(length, n)?);
    }
    Ok(())
}

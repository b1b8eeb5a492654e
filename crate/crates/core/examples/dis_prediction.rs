//! Entropy and small-x exponent for a DIS configuration.
//!
//! cargo run --example dis_prediction -- [x] [Q] [c]

use reggeon::dis::{self, DisKinematics};

fn main() -> reggeon::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<f64>().ok());
    let x = args.next().flatten().unwrap_or(0.01);
    let q = args.next().flatten().unwrap_or(2.0);
    let c = args.next().flatten().unwrap_or(1.0);
    let p = dis::predict(&DisKinematics::new(0.938, x, q)?, c)?;
    println!("ell = {:.4} GeV^-1 = {:.4} fm", p.geometry.ell, p.geometry_fm.ell);
    println!("tau = {:.4} fm, r = {:.4} fm", p.geometry_fm.tau, p.geometry_fm.r);
    println!("S(x = {x}) = {:.6}", p.entropy);
    println!("{}", p.exponent.note);
    for t in [1.0, 5.0, 25.0, 125.0, 625.0] {
        let t = t / 0.938;
        println!("  t = {t:8.2} GeV^-1  S = {:.6}", dis::entropy_vs_time(c, 0.938, t, x)?);
    }
    Ok(())
}

//! Linear integral equations on the exterior domain |lambda| > q.
//!
//! Prints the Fermi point, filling and velocity for a chemical potential, and
//! how they move when the quadrature resolution doubles.
//!
//! cargo run --release --example thermo_equations -- [h]

use reggeon::thermo;

fn main() -> reggeon::Result<()> {
    let h: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let (q, scan) = thermo::find_fermi_point_scan(h, 128)?;
    println!("h = {h}: q = {q:.10} after {} sign changes", scan.sign_changes);
    for res in [64, 128, 256] {
        let sea = thermo::sea_at(q, h, res)?;
        println!(
            "  resolution {res:4}: filling {:+.10}, v_F {:.8}, e_inf {:+.10}, condition {:.1e}",
            sea.filling, sea.fermi_velocity, sea.bulk_energy, sea.condition
        );
    }
    let eps = thermo::solve_dressed_energy(q, h, 128)?;
    for x in [q, 2.0 * q, 5.0 * q, 20.0 * q] {
        println!("  eps({x:9.3}) = {:+.3e}", thermo::dressed_energy_at(&eps, x));
    }
    Ok(())
}

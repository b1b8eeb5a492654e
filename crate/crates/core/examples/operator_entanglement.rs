//! Operator space entanglement of 1/2 - S^z under Heisenberg evolution.
//!
//! cargo run --release --example operator_entanglement -- [L] [t_max]

use reggeon::chain::ChainModel;
use reggeon::entropy::ChainOperator;
use reggeon::krylov::PropagationOptions;
use reggeon::quench;

fn main() -> reggeon::Result<()> {
    let mut args = std::env::args().skip(1);
    let sites: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(8);
    let t_max: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(4.0);
    let model = ChainModel::HeisenbergProxy { sites, periodic: false };
    let op = ChainOperator::site_diagonal(sites, 2, sites / 2, &[1.0, 0.0])?;
    let times = quench::uniform_times(t_max, 0.25);
    let trace = quench::operator_entropy_trace(&model, &op, &times, sites / 2, &PropagationOptions::default())?;
    for (t, s) in trace.times.iter().zip(&trace.values) {
        println!("{t:5.2}  {s:.8}");
    }
    let fit = quench::fit_log_growth(&trace, (1.0, t_max))?;
    println!("S ~ {:.3} ln t + const (norm drift {:.1e})", fit.c_eff / 3.0, trace.checks.norm_drift);
    Ok(())
}

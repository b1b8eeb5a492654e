use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use reggeon::basis::ProductBasis;
use reggeon::bethe::{self, ModelParams, QuantumNumbers};
use reggeon::dis;
use reggeon::entropy::{self, Bipartition};
use reggeon::quench::StateVector;

fn normalized_state(sites: usize, charge: Option<usize>, raw: &[(f64, f64)]) -> Option<StateVector> {
    let basis = Arc::new(ProductBasis::with_charge(sites, 2, charge).unwrap());
    let amps: Vec<Complex64> = (0..basis.dim()).map(|i| Complex64::new(raw[i % raw.len()].0, raw[(i * 7 + 3) % raw.len()].1)).collect();
    let n = reggeon::krylov::norm(&amps);
    if n < 1e-6 {
        return None;
    }
    StateVector::new(basis, amps.iter().map(|z| z / n).collect()).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn schmidt_symmetry_and_mutual_information(
        raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5..40),
        sites in 2usize..9,
        mask in 1u32..255,
    ) {
        let in_a: Vec<bool> = (0..sites).map(|k| mask >> k & 1 == 1).collect();
        prop_assume!(in_a.iter().any(|&b| b) && in_a.iter().any(|&b| !b));
        let Some(psi) = normalized_state(sites, Some(sites / 2), &raw) else { return Ok(()) };
        let a = Bipartition::from_sites(sites, &in_a.iter().enumerate().filter(|p| *p.1).map(|p| p.0).collect::<Vec<_>>()).unwrap();
        let sa = entropy::entropy_of(&psi, &a).unwrap();
        let sb = entropy::entropy_of(&psi, &a.complement()).unwrap();
        prop_assert!((sa - sb).abs() < 1e-10);
        prop_assert!((entropy::mutual_information(&psi, &a).unwrap() - 2.0 * sa).abs() < 1e-10);
        let na = in_a.iter().filter(|&&b| b).count().min(sites - in_a.iter().filter(|&&b| b).count());
        prop_assert!(sa >= 0.0 && sa <= na as f64 * std::f64::consts::LN_2 + 1e-12);
        let probs = entropy::schmidt_spectrum(&psi, &a).unwrap();
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_magnon_roots_follow_the_cotangent(l in 2usize..60, pick in 0.0f64..1.0) {
        let n = 1 + ((l - 1) as f64 * pick) as i64 % (l as i64 - 1);
        let st = bethe::solve_bethe(&ModelParams::holomorphic(l, 1), &QuantumNumbers::single_branch(l, n), None).unwrap();
        let exact = bethe::closed_form_single_root(l, n).unwrap();
        prop_assert!((st.roots[0] - exact).abs() <= 1e-12 * (1.0 + exact.abs()));
        prop_assert!(bethe::tq_polynomiality_residual(&st).unwrap() < 1e-8);
    }

    #[test]
    fn mirrored_quantum_numbers_mirror_the_roots(l in 6usize..14, n in 2usize..4) {
        let gs = bethe::ground_state(l, n).unwrap();
        let p = ModelParams::holomorphic(l, n);
        let mirror = bethe::solve_bethe(&p, &gs.quantum_numbers.mirrored(), None).unwrap();
        let mut a: Vec<f64> = gs.roots.iter().map(|r| -r).collect();
        a.sort_by(f64::total_cmp);
        let mut b = mirror.roots.clone();
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        prop_assert!((gs.energy() - mirror.energy()).abs() < 1e-10);
    }

    #[test]
    fn dis_entropy_is_monotone_and_saturates(c in 0.1f64..3.0, x in 1e-5f64..0.5, m in 0.1f64..5.0) {
        let s_x = dis::entropy_at_x(c, x).unwrap();
        prop_assert!(s_x > 0.0);
        prop_assert!(dis::entropy_at_x(c, x * 0.5).unwrap() > s_x);
        let t_c = 1.0 / (m * x);
        let before = dis::entropy_vs_time(c, m, 0.5 * (1.0 / m + t_c), x).unwrap();
        prop_assert!(before <= s_x + 1e-12);
        prop_assert_eq!(dis::entropy_vs_time(c, m, 3.0 * t_c, x).unwrap(), s_x);
    }
}

//! Bethe roots of the s = -1 chain and its lattice NLS parent.
//!
//! Equations are solved in logarithmic form,
//!
//! ```text
//! 2L atan(lambda_k Delta / 2) + sum_{j != k} 2 atan((lambda_k - lambda_j) / kappa) = 2 pi J_k,
//! ```
//!
//! with `J_k` in `Z + (L - N - 1)/2` and `|J_k| <= (L + N - 3)/2`. For the
//! holomorphic preset (`kappa = 1`, `Delta = 2`) this is the logarithm of
//! `((lambda - i)/(lambda + i))^L = prod_{j != k} (lambda_k - lambda_j + i)/(lambda_k - lambda_j - i)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::numeric::Compensated;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub length: usize,
    pub roots: usize,
    pub spin: f64,
    pub kappa: f64,
    pub delta: f64,
}

impl ModelParams {
    /// The s = -1 chain with `kappa = 1`, `Delta = 2`.
    pub fn holomorphic(length: usize, roots: usize) -> Self {
        Self { length, roots, spin: -1.0, kappa: 1.0, delta: 2.0 }
    }

    pub fn lattice_nls(length: usize, roots: usize, kappa: f64, delta: f64) -> Result<Self> {
        let p = Self { length, roots, spin: -2.0 / (kappa * delta), kappa, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::domain("chain length must be positive"));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::domain(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::domain(format!("Delta must be positive, got {}", self.delta)));
        }
        let s = -2.0 / (self.kappa * self.delta);
        if (self.spin - s).abs() > 1e-12 * s.abs() {
            return Err(Error::domain(format!(
                "spin {} inconsistent with -2/(kappa Delta) = {s}",
                self.spin
            )));
        }
        Ok(())
    }

    fn shift(&self) -> f64 {
        2.0 / self.delta
    }
}

/// Sorted, distinct half-integers stored as `2J`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct QuantumNumbers {
    twice: Vec<i64>,
}

impl QuantumNumbers {
    pub fn new(values: &[f64]) -> Result<Self> {
        let mut twice = Vec::with_capacity(values.len());
        for &v in values {
            let t = 2.0 * v;
            if !t.is_finite() || (t - t.round()).abs() > 1e-9 {
                return Err(Error::domain(format!("quantum number {v} is not a half-integer")));
            }
            twice.push(t.round() as i64);
        }
        Self::from_twice(twice)
    }

    pub fn from_twice(mut twice: Vec<i64>) -> Result<Self> {
        twice.sort_unstable();
        if twice.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::domain("quantum numbers must be distinct"));
        }
        Ok(Self { twice })
    }

    pub fn empty() -> Self {
        Self { twice: Vec::new() }
    }

    /// Quantum number of the single magnon on closed-form branch `n`, `J = n - L/2`.
    pub fn single_branch(length: usize, n: i64) -> Self {
        Self { twice: vec![2 * n - length as i64] }
    }

    pub fn len(&self) -> usize {
        self.twice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.twice.is_empty()
    }

    pub fn twice(&self) -> &[i64] {
        &self.twice
    }

    pub fn values(&self) -> Vec<f64> {
        self.twice.iter().map(|&t| t as f64 / 2.0).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.twice.len();
        (0..n).all(|k| self.twice[k] == -self.twice[n - 1 - k])
    }

    pub fn mirrored(&self) -> Self {
        let mut twice: Vec<i64> = self.twice.iter().map(|t| -t).collect();
        twice.sort_unstable();
        Self { twice }
    }

    /// Largest admissible `2|J|` for the given chain.
    pub fn max_twice(length: usize, roots: usize) -> i64 {
        length as i64 + roots as i64 - 3
    }

    pub fn check_against(&self, params: &ModelParams) -> Result<()> {
        if self.len() != params.roots {
            return Err(Error::DimensionMismatch { expected: params.roots, found: self.len() });
        }
        let parity = (params.length as i64 - params.roots as i64 - 1).rem_euclid(2);
        let bound = Self::max_twice(params.length, params.roots);
        for &t in &self.twice {
            if t.rem_euclid(2) != parity {
                return Err(Error::domain(format!(
                    "J = {} has the wrong parity for L = {}, N = {}",
                    t as f64 / 2.0,
                    params.length,
                    params.roots
                )));
            }
            if t.abs() > bound {
                return Err(Error::domain(format!(
                    "|J| = {} exceeds the vacancy bound {} (root at infinity)",
                    t.abs() as f64 / 2.0,
                    bound as f64 / 2.0
                )));
            }
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for QuantumNumbers {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(&v)
    }
}

impl From<QuantumNumbers> for Vec<f64> {
    fn from(q: QuantumNumbers) -> Self {
        q.values()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetheState {
    pub params: ModelParams,
    pub quantum_numbers: QuantumNumbers,
    pub roots: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

impl BetheState {
    /// Wraps arbitrary roots, e.g. to test a perturbed configuration.
    pub fn from_roots(params: ModelParams, quantum_numbers: QuantumNumbers, roots: Vec<f64>) -> Result<Self> {
        params.validate()?;
        quantum_numbers.check_against(&params)?;
        let res = counting_residual(&params, &quantum_numbers, &roots)?;
        let residual = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        Ok(Self { params, quantum_numbers, roots, residual, iterations: 0 })
    }

    pub fn energy(&self) -> f64 {
        energy(self)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_roots: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 200, max_roots: 8192 }
    }
}

/// `2 atan(x)` split as `m pi + r` with `|r| <= pi/2`.
fn two_atan_split(x: f64) -> (i64, f64) {
    if x.abs() <= 1.0 {
        (0, 2.0 * x.atan())
    } else if x > 0.0 {
        (1, -2.0 * (1.0 / x).atan())
    } else {
        (-1, -2.0 * (1.0 / x).atan())
    }
}

fn check_roots(roots: &[f64]) -> Result<()> {
    for (i, r) in roots.iter().enumerate() {
        if !r.is_finite() {
            return Err(Error::domain(format!("root {i} is not finite")));
        }
    }
    let mut order: Vec<usize> = (0..roots.len()).collect();
    order.sort_by(|&a, &b| roots[a].total_cmp(&roots[b]));
    for w in order.windows(2) {
        let (a, b) = (roots[w[0]], roots[w[1]]);
        if (b - a).abs() <= 1e-14 * (1.0 + a.abs().max(b.abs())) {
            return Err(Error::DegenerateRoots { first: w[0].min(w[1]), second: w[0].max(w[1]) });
        }
    }
    Ok(())
}

fn counting_residual(params: &ModelParams, qn: &QuantumNumbers, roots: &[f64]) -> Result<Vec<f64>> {
    if roots.len() != qn.len() {
        return Err(Error::DimensionMismatch { expected: qn.len(), found: roots.len() });
    }
    check_roots(roots)?;
    let l = params.length as i64;
    let half_delta = params.delta / 2.0;
    let out = (0..roots.len())
        .map(|k| {
            let (m0, r0) = two_atan_split(roots[k] * half_delta);
            let mut ints = l * m0 - qn.twice[k];
            let mut acc = Compensated::new();
            acc.add(l as f64 * r0);
            for (j, &lj) in roots.iter().enumerate() {
                if j != k {
                    let (m, r) = two_atan_split((roots[k] - lj) / params.kappa);
                    ints += m;
                    acc.add(r);
                }
            }
            acc.add(PI * ints as f64);
            acc.value()
        })
        .collect();
    Ok(out)
}

/// Residual of the logarithmic Bethe equations, one entry per root.
pub fn log_bethe_residual(state: &BetheState) -> Result<Vec<f64>> {
    counting_residual(&state.params, &state.quantum_numbers, &state.roots)
}

fn jacobian(params: &ModelParams, roots: &[f64]) -> DMatrix<f64> {
    let n = roots.len();
    let l = params.length as f64;
    let hd = params.delta / 2.0;
    let kappa = params.kappa;
    let mut jac = DMatrix::zeros(n, n);
    for k in 0..n {
        let x = roots[k] * hd;
        let mut diag = l * params.delta / (1.0 + x * x);
        for j in 0..n {
            if j != k {
                let d = roots[k] - roots[j];
                let kern = 2.0 * kappa / (kappa * kappa + d * d);
                diag += kern;
                jac[(k, j)] = -kern;
            }
        }
        jac[(k, k)] = diag;
    }
    jac
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Decoupled initial guess: each root feels the others through a uniform phase shift.
pub fn initial_guess(params: &ModelParams, qn: &QuantumNumbers) -> Vec<f64> {
    let denom = (params.length + params.roots) as f64 - 1.0;
    qn.values().iter().map(|j| params.shift() * (PI * j / denom).tan()).collect()
}

pub fn solve_bethe(params: &ModelParams, qn: &QuantumNumbers, guess: Option<&[f64]>) -> Result<BetheState> {
    solve_bethe_with(params, qn, guess, &SolverOptions::default())
}

/// Damped Newton iteration. The Jacobian is symmetric positive definite, so each
/// step is a Cholesky solve; steps are halved until the residual decreases.
pub fn solve_bethe_with(
    params: &ModelParams,
    qn: &QuantumNumbers,
    guess: Option<&[f64]>,
    opts: &SolverOptions,
) -> Result<BetheState> {
    params.validate()?;
    qn.check_against(params)?;
    if params.roots > opts.max_roots {
        return Err(Error::domain(format!(
            "N = {} exceeds the configured maximum filling {}",
            params.roots, opts.max_roots
        )));
    }
    let mut roots = match guess {
        Some(g) => {
            if g.len() != params.roots {
                return Err(Error::DimensionMismatch { expected: params.roots, found: g.len() });
            }
            g.to_vec()
        }
        None => initial_guess(params, qn),
    };
    if roots.is_empty() {
        return Ok(BetheState { params: *params, quantum_numbers: qn.clone(), roots, residual: 0.0, iterations: 0 });
    }
    let mut f = counting_residual(params, qn, &roots)?;
    let mut norm = max_abs(&f);
    let mut history = vec![norm];
    for iter in 0..opts.max_iter {
        if norm <= opts.tol {
            return Ok(BetheState { params: *params, quantum_numbers: qn.clone(), roots, residual: norm, iterations: iter });
        }
        let chol = jacobian(params, &roots).cholesky().ok_or(Error::SingularJacobian)?;
        let step = chol.solve(&nalgebra::DVector::from_column_slice(&f));
        if step.iter().any(|s| !s.is_finite()) {
            return Err(Error::SingularJacobian);
        }
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let trial: Vec<f64> = roots.iter().zip(step.iter()).map(|(r, s)| r - t * s).collect();
            if let Ok(ft) = counting_residual(params, qn, &trial) {
                let nt = max_abs(&ft);
                if nt < norm {
                    roots = trial;
                    f = ft;
                    norm = nt;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        history.push(norm);
        if !accepted {
            break;
        }
    }
    if norm <= opts.tol {
        let iterations = history.len() - 1;
        return Ok(BetheState { params: *params, quantum_numbers: qn.clone(), roots, residual: norm, iterations });
    }
    Err(Error::NonConvergence { stage: "bethe newton", iterations: history.len() - 1, residual: norm, history })
}

/// Single-magnon root on branch `n`: `lambda = -(2/Delta) cot(pi n / L)`.
pub fn closed_form_single_root(length: usize, n: i64) -> Result<f64> {
    closed_form_single_root_for(&ModelParams::holomorphic(length, 1), n)
}

pub fn closed_form_single_root_for(params: &ModelParams, n: i64) -> Result<f64> {
    let l = params.length as i64;
    if l == 0 {
        return Err(Error::domain("chain length must be positive"));
    }
    if n.rem_euclid(l) == 0 {
        return Err(Error::RootAtInfinity { length: params.length, branch: n });
    }
    if n <= 0 || n >= l {
        return Err(Error::domain(format!("branch n = {n} outside 0 < n < {l}")));
    }
    let a = PI * n as f64 / l as f64;
    Ok(-params.shift() * a.cos() / a.sin())
}

/// Energy of the s = -1 chain, `sum_j 2 / (lambda_j^2 + 1)`.
pub fn energy(state: &BetheState) -> f64 {
    crate::numeric::neumaier_sum(state.roots.iter().map(|l| 2.0 / (l * l + 1.0)))
}

/// Transfer-matrix eigenvalue `Lambda(z)` from Baxter's T-Q relation.
pub fn transfer_eigenvalue(state: &BetheState, z: Complex64) -> Complex64 {
    let p = &state.params;
    let a = Complex64::new(0.0, p.shift());
    let ik = Complex64::new(0.0, p.kappa);
    let l = p.length as i32;
    let mut down = Complex64::new(1.0, 0.0);
    let mut up = Complex64::new(1.0, 0.0);
    for &r in &state.roots {
        let d = z - r;
        down *= (d - ik) / d;
        up *= (d + ik) / d;
    }
    (z - a).powi(l) * down + (z + a).powi(l) * up
}

/// Largest scaled residue of the T-Q relation at the roots, in `[0, 1]`.
///
/// It vanishes exactly when the Bethe equations hold, i.e. when `Lambda` is a polynomial.
pub fn tq_polynomiality_residual(state: &BetheState) -> Result<f64> {
    check_roots(&state.roots)?;
    let p = &state.params;
    let a = Complex64::new(0.0, p.shift());
    let ik = Complex64::new(0.0, p.kappa);
    let mut worst = 0.0f64;
    for (k, &lk) in state.roots.iter().enumerate() {
        let z = Complex64::new(lk, 0.0);
        let mut r = -((z - a) / (z + a)).powi(p.length as i32);
        for (j, &lj) in state.roots.iter().enumerate() {
            if j != k {
                let d = z - lj;
                r *= (d - ik) / (d + ik);
            }
        }
        worst = worst.max((Complex64::new(1.0, 0.0) + r).norm() / 2.0);
    }
    Ok(worst)
}

/// All ways to put `N` roots in the vacancy range, as `2J` lists.
pub fn enumerate_configurations(length: usize, roots: usize) -> Vec<QuantumNumbers> {
    let bound = QuantumNumbers::max_twice(length, roots);
    let slots: Vec<i64> = (-bound..=bound).step_by(2).collect();
    let mut out = Vec::new();
    let mut pick = Vec::with_capacity(roots);
    fn rec(slots: &[i64], start: usize, need: usize, pick: &mut Vec<i64>, out: &mut Vec<QuantumNumbers>) {
        if need == 0 {
            out.push(QuantumNumbers { twice: pick.clone() });
            return;
        }
        for i in start..=slots.len().saturating_sub(need) {
            pick.push(slots[i]);
            rec(slots, i + 1, need - 1, pick, out);
            pick.pop();
        }
    }
    if roots <= slots.len() {
        rec(&slots, 0, roots, &mut pick, &mut out);
    }
    out
}

/// Edge-block configuration with `bottom` roots at the lowest vacancies and the rest at the top.
pub fn edge_blocks(length: usize, roots: usize, bottom: usize) -> QuantumNumbers {
    let bound = QuantumNumbers::max_twice(length, roots);
    let top = roots - bottom;
    let mut twice: Vec<i64> = (0..bottom as i64).map(|i| -bound + 2 * i).collect();
    twice.extend((0..top as i64).rev().map(|i| bound - 2 * i));
    QuantumNumbers { twice }
}

/// Symmetric edge-block candidates: one for even `N`, the two mirror images for odd `N`.
pub fn ground_state_candidates(length: usize, roots: usize) -> Vec<QuantumNumbers> {
    if roots.is_multiple_of(2) {
        vec![edge_blocks(length, roots, roots / 2)]
    } else {
        vec![edge_blocks(length, roots, roots / 2), edge_blocks(length, roots, roots / 2 + 1)]
    }
}

/// Ground state in the `N`-magnon sector: the roots fill the outer edges of the
/// vacancy range symmetrically, leaving the region around zero empty.
/// For odd `N` the two mirror images are degenerate and the one with more
/// roots on the positive side is returned.
pub fn ground_state(length: usize, roots: usize) -> Result<BetheState> {
    ground_state_with(length, roots, &SolverOptions::default())
}

pub fn ground_state_with(length: usize, roots: usize, opts: &SolverOptions) -> Result<BetheState> {
    let params = ModelParams::holomorphic(length, roots);
    if roots > opts.max_roots {
        return Err(Error::domain(format!("N = {roots} exceeds the configured maximum filling {}", opts.max_roots)));
    }
    if roots > 0 && length < 2 {
        return Err(Error::domain(format!("no vacancies for N = {roots} on L = {length}")));
    }
    let mut attempted = Vec::new();
    let mut best: Option<BetheState> = None;
    for qn in ground_state_candidates(length, roots).into_iter().rev() {
        attempted.push(qn.values());
        let Ok(state) = solve_bethe_with(&params, &qn, None, opts) else { continue };
        let better = match &best {
            None => true,
            Some(b) => state.energy() < b.energy() - 1e-12 * (1.0 + b.energy().abs()),
        };
        if better {
            best = Some(state);
        }
    }
    best.ok_or(Error::NoConvergentConfiguration { attempted })
}

pub fn ground_state_quantum_numbers(length: usize, roots: usize) -> Result<QuantumNumbers> {
    Ok(ground_state(length, roots)?.quantum_numbers)
}

/// Energies of every highest-weight state with at most `max_roots` roots, ascending.
///
/// A chain sector with total charge `N` holds one descendant of each of these
/// for `max_roots = N`, so this is its exact spectrum.
pub fn highest_weight_energies(length: usize, max_roots: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0];
    for n in 1..=max_roots {
        let params = ModelParams::holomorphic(length, n);
        for qn in enumerate_configurations(length, n) {
            out.push(solve_bethe(&params, &qn, None)?.energy());
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branch_one_of_four_sites() {
        let root = closed_form_single_root(4, 1).unwrap();
        assert!((root + 1.0).abs() < 1e-15);
        let qn = QuantumNumbers::single_branch(4, 1);
        assert_eq!(qn.values(), vec![-1.0]);
        let st = solve_bethe(&ModelParams::holomorphic(4, 1), &qn, None).unwrap();
        assert!((st.roots[0] + 1.0).abs() < 1e-12);
        assert!((st.energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn highest_weight_counts() {
        // Sector N of three sites has C(N + 2, 2) states.
        for n in 0..=4 {
            assert_eq!(highest_weight_energies(3, n).unwrap().len(), (n + 1) * (n + 2) / 2);
        }
    }

    #[test]
    fn branch_zero_is_at_infinity() {
        assert!(matches!(closed_form_single_root(4, 0), Err(Error::RootAtInfinity { .. })));
        assert!(matches!(closed_form_single_root(4, 8), Err(Error::RootAtInfinity { .. })));
    }

    #[test]
    fn closed_form_matches_solver_on_all_branches() {
        for l in 2..40usize {
            let p = ModelParams::holomorphic(l, 1);
            for n in 1..l as i64 {
                let exact = closed_form_single_root(l, n).unwrap();
                let st = solve_bethe(&p, &QuantumNumbers::single_branch(l, n), None).unwrap();
                assert!((st.roots[0] - exact).abs() <= 1e-12 * (1.0 + exact.abs()), "L={l} n={n}");
            }
        }
    }

    #[test]
    fn parity_and_range_are_enforced() {
        let p = ModelParams::holomorphic(4, 2);
        assert!(QuantumNumbers::new(&[0.0, 1.0]).unwrap().check_against(&p).is_err());
        assert!(QuantumNumbers::new(&[-2.5, 0.5]).unwrap().check_against(&p).is_err());
        assert!(QuantumNumbers::new(&[-1.5, 0.5]).unwrap().check_against(&p).is_ok());
        assert!(QuantumNumbers::new(&[0.3]).is_err());
        assert!(QuantumNumbers::new(&[0.5, 0.5]).is_err());
    }

    #[test]
    fn coincident_roots_are_rejected() {
        let p = ModelParams::holomorphic(6, 2);
        let qn = QuantumNumbers::new(&[-0.5, 0.5]).unwrap();
        let err = BetheState::from_roots(p, qn, vec![0.3, 0.3]).unwrap_err();
        assert!(matches!(err, Error::DegenerateRoots { .. }));
    }

    #[test]
    fn residual_vanishes_only_at_solution() {
        let p = ModelParams::holomorphic(10, 3);
        let qn = QuantumNumbers::new(&[-5.0, 0.0, 5.0]).unwrap();
        let st = solve_bethe(&p, &qn, None).unwrap();
        assert!(max_abs(&log_bethe_residual(&st).unwrap()) <= 1e-12);
        assert!(tq_polynomiality_residual(&st).unwrap() < 1e-10);
        let mut bad = st.roots.clone();
        bad[1] += 1e-3;
        let perturbed = BetheState::from_roots(p, qn, bad).unwrap();
        assert!(perturbed.residual > 1e-5);
        assert!(tq_polynomiality_residual(&perturbed).unwrap() > 1e-6);
    }

    #[test]
    fn empty_sector_transfer_eigenvalue() {
        let st = solve_bethe(&ModelParams::holomorphic(5, 0), &QuantumNumbers::empty(), None).unwrap();
        let z = Complex64::new(0.3, -0.7);
        let i = Complex64::new(0.0, 1.0);
        let expect = (z - i).powi(5) + (z + i).powi(5);
        assert!((transfer_eigenvalue(&st, z) - expect).norm() < 1e-12);
        assert_eq!(st.energy(), 0.0);
    }

    #[test]
    fn ground_state_is_symmetric_for_even_filling() {
        let st = ground_state(6, 2).unwrap();
        assert_eq!(st.quantum_numbers.values(), vec![-2.5, 2.5]);
        assert!(st.roots[0] < 0.0 && st.roots[1] > 0.0);
        assert!((st.roots[0] + st.roots[1]).abs() < 1e-12);
    }

    #[test]
    fn edge_block_ground_state_beats_every_configuration() {
        for l in 2..=8usize {
            for n in 1..=3usize {
                let p = ModelParams::holomorphic(l, n);
                let gs = ground_state(l, n).unwrap();
                for qn in enumerate_configurations(l, n) {
                    let Ok(st) = solve_bethe(&p, &qn, None) else { continue };
                    assert!(st.energy() >= gs.energy() - 1e-10, "L={l} N={n} {:?}", qn.values());
                }
            }
        }
    }

    #[test]
    fn lattice_nls_parameters_are_checked() {
        assert!(ModelParams::lattice_nls(4, 1, 1.0, 2.0).is_ok());
        assert!(ModelParams::lattice_nls(4, 1, -1.0, 2.0).is_err());
        let bad = ModelParams { spin: -0.5, ..ModelParams::holomorphic(4, 1) };
        assert!(bad.validate().is_err());
    }
}

//! Many-body Hamiltonians: the Fock-truncated s = -1 chain and the spin-1/2 proxy.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

use crate::basis::ProductBasis;
use crate::sparse::CsrMatrix;
use crate::special::{digamma, digamma_finite_part, pole_order};
use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Default Fock cutoff.
pub const DEFAULT_N_MAX: usize = 8;
/// Default memory budget for sparse assembly and operator storage.
pub const DEFAULT_MEMORY_BUDGET: u64 = 4 << 30;
/// Largest proxy chain accepted.
pub const MAX_PROXY_SITES: usize = 28;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Boson realization of the spin algebra with `s = -2/(kappa Delta)` on levels `0..=n_max`.
#[derive(Debug, Clone)]
pub struct BosonSiteRep {
    pub n_max: usize,
    pub kappa: f64,
    pub delta: f64,
    pub psi: CMatrix,
    pub psi_dag: CMatrix,
    pub rho: CMatrix,
    pub sx: CMatrix,
    pub sy: CMatrix,
    pub sz: CMatrix,
}

pub fn boson_spin_operators(kappa: f64, delta: f64, n_max: usize) -> Result<BosonSiteRep> {
    if !(kappa > 0.0 && kappa.is_finite()) || !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::domain(format!("kappa = {kappa} and Delta = {delta} must be positive")));
    }
    if n_max < 2 {
        return Err(Error::domain(format!("Fock cutoff n_max = {n_max} must be at least 2")));
    }
    let d = n_max + 1;
    let kd = kappa * delta;
    let psi = CMatrix::from_fn(d, d, |i, j| if j == i + 1 { c((j as f64).sqrt()) } else { c(0.0) });
    let psi_dag = psi.adjoint();
    let number = &psi_dag * &psi;
    let rho = CMatrix::from_fn(d, d, |i, j| if i == j { c((1.0 + kd / 4.0 * number[(i, i)].re).sqrt()) } else { c(0.0) });
    let i = Complex64::new(0.0, 1.0);
    let sx = (&psi_dag * &rho + &rho * &psi) * (i / kd.sqrt());
    let sy = (&rho * &psi - &psi_dag * &rho) * c(1.0 / kd.sqrt());
    let sz = (CMatrix::identity(d, d) + number * c(kd / 2.0)) * c(-2.0 / kd);
    Ok(BosonSiteRep { n_max, kappa, delta, psi, psi_dag, rho, sx, sy, sz })
}

impl BosonSiteRep {
    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn spin(&self) -> f64 {
        -2.0 / (self.kappa * self.delta)
    }

    pub fn casimir(&self) -> CMatrix {
        &self.sx * &self.sx + &self.sy * &self.sy + &self.sz * &self.sz
    }

    /// Largest entry of the three su(2) commutators on levels `0..levels`.
    pub fn su2_defect(&self, levels: usize) -> f64 {
        let i = Complex64::new(0.0, 1.0);
        let c1 = &self.sx * &self.sy - &self.sy * &self.sx - &self.sz * i;
        let c2 = &self.sy * &self.sz - &self.sz * &self.sy - &self.sx * i;
        let c3 = &self.sz * &self.sx - &self.sx * &self.sz - &self.sy * i;
        let k = levels.min(self.dim());
        [c1, c2, c3]
            .iter()
            .map(|m| m.view((0, 0), (k, k)).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// Largest entry of `[psi, psi^dagger] - 1` below the top level.
    pub fn ccr_defect(&self) -> f64 {
        let comm = &self.psi * &self.psi_dag - &self.psi_dag * &self.psi - CMatrix::identity(self.dim(), self.dim());
        let k = self.dim() - 1;
        comm.view((0, 0), (k, k)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Dense operator on two sites; basis index `a * d + b` for digit `a` on the
/// first site and `b` on the second (Kronecker order).
#[derive(Debug, Clone)]
pub struct TwoSiteOperator {
    pub local_dim: usize,
    pub matrix: CMatrix,
}

impl TwoSiteOperator {
    pub fn new(local_dim: usize, matrix: CMatrix) -> Result<Self> {
        let d2 = local_dim * local_dim;
        if matrix.nrows() != d2 || matrix.ncols() != d2 {
            return Err(Error::DimensionMismatch { expected: d2, found: matrix.nrows() });
        }
        Ok(Self { local_dim, matrix })
    }

    pub fn hermitian_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry connecting pair states of different total occupation.
    pub fn charge_violation(&self) -> f64 {
        let d = self.local_dim;
        let mut worst = 0.0f64;
        for r in 0..d * d {
            for col in 0..d * d {
                if r / d + r % d != col / d + col % d {
                    worst = worst.max(self.matrix[(r, col)].norm());
                }
            }
        }
        worst
    }

    /// Pair indices with total occupation `n`.
    pub fn pair_sector(&self, n: usize) -> Vec<usize> {
        let d = self.local_dim;
        (0..d * d).filter(|p| p / d + p % d == n).collect()
    }

    pub fn swap(local_dim: usize) -> Self {
        let d = local_dim;
        let m = CMatrix::from_fn(d * d, d * d, |r, col| if r == (col % d) * d + col / d { c(1.0) } else { c(0.0) });
        Self { local_dim, matrix: m }
    }
}

pub fn spin_dot(rep: &BosonSiteRep) -> TwoSiteOperator {
    let m = rep.sx.kronecker(&rep.sx) + rep.sy.kronecker(&rep.sy) + rep.sz.kronecker(&rep.sz);
    TwoSiteOperator { local_dim: rep.dim(), matrix: m }
}

/// Eigen-decomposition of `M = 2 S_1.S_2 + 2 s(s+1)` and `J = -1/2 - sqrt(M + 1/4)`.
#[derive(Debug, Clone)]
pub struct TwoSiteJ {
    pub local_dim: usize,
    pub m: CMatrix,
    pub m_values: Vec<f64>,
    pub j_values: Vec<f64>,
    /// `M + 1/4 < 0`: no real J, a truncation artifact.
    pub flagged: Vec<bool>,
    /// Two-site occupation of each eigenvector.
    pub sector: Vec<usize>,
    pub vectors: CMatrix,
}

impl TwoSiteJ {
    /// Applies `f(J)` eigenvalue-wise; flagged eigenvalues map to zero.
    pub fn functional<F: Fn(f64) -> f64>(&self, f: F) -> TwoSiteOperator {
        let vals: Vec<Complex64> =
            self.j_values.iter().zip(&self.flagged).map(|(&j, &bad)| if bad { c(0.0) } else { c(f(j)) }).collect();
        let scaled = CMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |r, k| self.vectors[(r, k)] * vals[k]);
        TwoSiteOperator { local_dim: self.local_dim, matrix: scaled * self.vectors.adjoint() }
    }

    pub fn operator(&self) -> TwoSiteOperator {
        self.functional(|j| j)
    }

    /// `max |(J^2 + J) v - M v|` over retained eigenvectors.
    pub fn reconstruction_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.j_values.len() {
            if self.flagged[k] {
                continue;
            }
            let v = self.vectors.column(k);
            let j = self.j_values[k];
            let lhs = v * c(j * j + j);
            let rhs = &self.m * v;
            worst = worst.max((lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        worst
    }

    /// Retained J eigenvalues sorted from the top (closest to -1/2) downwards.
    pub fn leading_values(&self, count: usize) -> Vec<f64> {
        let mut v: Vec<f64> = self.j_values.iter().zip(&self.flagged).filter(|(_, &b)| !b).map(|(&j, _)| j).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v.truncate(count);
        v
    }
}

pub fn two_site_j(rep: &BosonSiteRep) -> Result<TwoSiteJ> {
    let s = rep.spin();
    let d = rep.dim();
    let dot = spin_dot(rep);
    let m = dot.matrix.map(|z| z * 2.0) + CMatrix::identity(d * d, d * d) * c(2.0 * s * (s + 1.0));
    let mut vectors = CMatrix::zeros(d * d, d * d);
    let mut m_values = Vec::with_capacity(d * d);
    let mut sector = Vec::with_capacity(d * d);
    let mut col = 0;
    for n in 0..=2 * rep.n_max {
        let idx = dot.pair_sector(n);
        let block = CMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])]);
        let eig = block.symmetric_eigen();
        let mut order: Vec<usize> = (0..idx.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        for k in order {
            for (a, &p) in idx.iter().enumerate() {
                vectors[(p, col)] = eig.eigenvectors[(a, k)];
            }
            m_values.push(eig.eigenvalues[k]);
            sector.push(n);
            col += 1;
        }
    }
    let flagged: Vec<bool> = m_values.iter().map(|&x| x + 0.25 < 0.0).collect();
    if flagged.iter().all(|&b| b) {
        return Err(Error::CutoffTooSmall { n_max: rep.n_max });
    }
    let j_values = m_values.iter().map(|&x| if x + 0.25 < 0.0 { f64::NAN } else { -0.5 - (x + 0.25).sqrt() }).collect();
    Ok(TwoSiteJ { local_dim: d, m, m_values, j_values, flagged, sector, vectors })
}

#[derive(Debug, Clone)]
pub struct LocalHamiltonian {
    pub op: TwoSiteOperator,
    pub j: TwoSiteJ,
    /// Eigenvalues where an argument of psi sits on a pole.
    pub pole_count: usize,
    /// Eigenvalues with `M + 1/4 < 0`, projected out.
    pub artifact_count: usize,
    /// Energy of the two-site Fock vacuum.
    pub vacuum_energy: f64,
}

impl LocalHamiltonian {
    /// Shifted so that the Fock vacuum has zero energy.
    pub fn normalized(&self) -> TwoSiteOperator {
        let n = self.op.matrix.nrows();
        TwoSiteOperator {
            local_dim: self.op.local_dim,
            matrix: &self.op.matrix - CMatrix::identity(n, n) * c(self.vacuum_energy),
        }
    }
}

/// `H = psi(-J) + psi(J+1) - 2 psi(1)` by functional calculus.
///
/// Every exact eigenvalue `J = -2 - k` puts `J + 1` on the pole of psi at `-1 - k`.
/// There the regular part of the Laurent expansion is used,
/// `psi(-p) -> psi(p + 1)`, which gives `2 psi(2 + k) + 2 gamma`: the exact
/// spectrum up to the constant `2` per bond carried by the Fock vacuum.
/// `vacuum_energy` records that constant and `normalized` removes it.
pub fn local_hamiltonian_s_minus1(rep: &BosonSiteRep) -> Result<LocalHamiltonian> {
    if (rep.spin() + 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!("representation has spin {}, expected -1", rep.spin())));
    }
    let j = two_site_j(rep)?;
    let psi1 = digamma(1.0);
    let mut pole_count = 0;
    for (k, &jv) in j.j_values.iter().enumerate() {
        if !j.flagged[k] && (pole_order(-jv).is_some() || pole_order(jv + 1.0).is_some()) {
            pole_count += 1;
        }
    }
    let artifact_count = j.flagged.iter().filter(|&&b| b).count();
    let mut op = j.functional(|jv| digamma_finite_part(-jv) + digamma_finite_part(jv + 1.0) - 2.0 * psi1);
    let d = op.local_dim;
    for r in 0..d * d {
        for col in 0..d * d {
            if r / d + r % d != col / d + col % d {
                op.matrix[(r, col)] = c(0.0);
            }
        }
    }
    let vacuum_energy = op.matrix[(0, 0)].re;
    Ok(LocalHamiltonian { op, j, pole_count, artifact_count, vacuum_energy })
}

/// `S.S - 1/4` on two spin-1/2 sites, local state 1 = up (charge counts up spins).
pub fn heisenberg_bond() -> TwoSiteOperator {
    let mut m = CMatrix::zeros(4, 4);
    m[(1, 1)] = c(-0.5);
    m[(2, 2)] = c(-0.5);
    m[(1, 2)] = c(0.5);
    m[(2, 1)] = c(0.5);
    TwoSiteOperator { local_dim: 2, matrix: m }
}

#[derive(Debug, Clone)]
pub struct ChainHamiltonian {
    pub sites: usize,
    pub local_dim: usize,
    pub periodic: bool,
    pub bonds: Vec<(usize, usize)>,
    pub basis: Arc<ProductBasis>,
    pub matrix: CsrMatrix,
}

impl ChainHamiltonian {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.matrix.apply(x)
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.matrix.hermitian_defect()
    }

    /// All eigenvalues, ascending (dense; small sectors only).
    pub fn dense_spectrum(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.matrix.to_dense().symmetric_eigen().eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

pub fn chain_bonds(sites: usize, periodic: bool) -> Vec<(usize, usize)> {
    let mut b: Vec<(usize, usize)> = (0..sites.saturating_sub(1)).map(|k| (k, k + 1)).collect();
    if periodic && sites >= 2 {
        b.push((sites - 1, 0));
    }
    b
}

pub fn assemble_chain(
    local: &TwoSiteOperator,
    sites: usize,
    periodic: bool,
    charge: Option<usize>,
) -> Result<ChainHamiltonian> {
    assemble_chain_with_budget(local, sites, periodic, charge, DEFAULT_MEMORY_BUDGET)
}

pub fn assemble_chain_with_budget(
    local: &TwoSiteOperator,
    sites: usize,
    periodic: bool,
    charge: Option<usize>,
    budget: u64,
) -> Result<ChainHamiltonian> {
    if sites == 0 {
        return Err(Error::domain("chain needs at least one site"));
    }
    let d = local.local_dim;
    if local.matrix.nrows() != d * d {
        return Err(Error::DimensionMismatch { expected: d * d, found: local.matrix.nrows() });
    }
    if charge.is_some() && local.charge_violation() > 0.0 {
        return Err(Error::domain("local operator does not conserve charge; a charge sector cannot be used"));
    }
    let bonds = chain_bonds(sites, periodic);
    let local_rows: Vec<Vec<(usize, Complex64)>> = (0..d * d)
        .map(|p| (0..d * d).filter_map(|q| Some((q, local.matrix[(p, q)])).filter(|e| e.1 != c(0.0))).collect())
        .collect();
    let max_row = local_rows.iter().map(|r| r.len()).max().unwrap_or(0) as u64;
    let dim = crate::basis::sector_dim_or_full(sites, d, charge)?;
    let estimate = dim * (1 + bonds.len() as u64 * max_row) * 20 + dim * 16;
    if estimate > budget {
        return Err(Error::MemoryBudget { required_bytes: estimate, budget_bytes: budget });
    }
    let basis = Arc::new(ProductBasis::with_charge(sites, d, charge)?);
    let rows: Vec<Vec<(u32, Complex64)>> = (0..basis.dim())
        .into_par_iter()
        .map(|r| {
            let cfg = basis.config(r);
            let mut out = Vec::new();
            for &(i, j) in &bonds {
                let a = basis.digit(cfg, i);
                let b = basis.digit(cfg, j);
                for &(q, v) in &local_rows[a * d + b] {
                    let t = basis.set_digit(basis.set_digit(cfg, i, q / d), j, q % d);
                    if let Some(col) = basis.index_of(t) {
                        out.push((col as u32, v));
                    }
                }
            }
            out
        })
        .collect();
    let matrix = CsrMatrix::from_rows(basis.dim(), rows)?;
    Ok(ChainHamiltonian { sites, local_dim: d, periodic, bonds, basis, matrix })
}

pub fn heisenberg_proxy(sites: usize, periodic: bool, charge: Option<usize>) -> Result<ChainHamiltonian> {
    if !(2..=MAX_PROXY_SITES).contains(&sites) {
        return Err(Error::domain(format!("proxy chain length {sites} outside 2..={MAX_PROXY_SITES}")));
    }
    assemble_chain(&heisenberg_bond(), sites, periodic, charge)
}

/// A chain family that can be built in any charge sector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ChainModel {
    HeisenbergProxy { sites: usize, periodic: bool },
    BosonSMinus1 { sites: usize, n_max: usize, periodic: bool },
}

impl ChainModel {
    pub fn sites(&self) -> usize {
        match *self {
            ChainModel::HeisenbergProxy { sites, .. } | ChainModel::BosonSMinus1 { sites, .. } => sites,
        }
    }

    pub fn local_dim(&self) -> usize {
        match *self {
            ChainModel::HeisenbergProxy { .. } => 2,
            ChainModel::BosonSMinus1 { n_max, .. } => n_max + 1,
        }
    }

    pub fn max_charge(&self) -> usize {
        self.sites() * (self.local_dim() - 1)
    }

    pub fn local_operator(&self) -> Result<TwoSiteOperator> {
        match *self {
            ChainModel::HeisenbergProxy { .. } => Ok(heisenberg_bond()),
            ChainModel::BosonSMinus1 { n_max, .. } => {
                let rep = boson_spin_operators(1.0, 2.0, n_max)?;
                Ok(local_hamiltonian_s_minus1(&rep)?.normalized())
            }
        }
    }

    pub fn hamiltonian(&self, charge: Option<usize>) -> Result<ChainHamiltonian> {
        match *self {
            ChainModel::HeisenbergProxy { sites, periodic } => heisenberg_proxy(sites, periodic, charge),
            ChainModel::BosonSMinus1 { sites, periodic, .. } => {
                assemble_chain(&self.local_operator()?, sites, periodic, charge)
            }
        }
    }
}

/// `max_k min |J - (-2 - k)|` for `k < count`: distance of the retained J spectrum
/// from the exact discrete series.
pub fn j_series_deviation(rep: &BosonSiteRep, count: usize) -> Result<f64> {
    let j = two_site_j(rep)?;
    let kept: Vec<f64> = j.j_values.iter().zip(&j.flagged).filter(|(_, &b)| !b).map(|(&v, _)| v).collect();
    Ok((0..count)
        .map(|k| {
            let target = -2.0 - k as f64;
            kept.iter().map(|v| (v - target).abs()).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize)]
pub struct SectorComparison {
    pub sites: usize,
    pub n_max: usize,
    pub charge: usize,
    pub compared: usize,
    /// `max |E_chain - E_Bethe|` over the lowest `compared` levels.
    pub deviation: f64,
    pub chain: Vec<f64>,
    pub bethe: Vec<f64>,
}

/// Lowest `count` levels of the periodic truncated s = -1 ring in one charge
/// sector against the Bethe energies of the same sector.
pub fn compare_with_bethe(sites: usize, n_max: usize, charge: usize, count: usize) -> Result<SectorComparison> {
    let model = ChainModel::BosonSMinus1 { sites, n_max, periodic: true };
    let mut chain = model.hamiltonian(Some(charge))?.dense_spectrum();
    let mut bethe = crate::bethe::highest_weight_energies(sites, charge)?;
    let compared = count.min(chain.len()).min(bethe.len());
    chain.truncate(compared);
    bethe.truncate(compared);
    let deviation = chain.iter().zip(&bethe).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(SectorComparison { sites, n_max, charge, compared, deviation, chain, bethe })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boson_rep_matches_printed_formulas() {
        let rep = boson_spin_operators(1.0, 2.0, 6).unwrap();
        assert_eq!(rep.sz[(0, 0)], c(-1.0));
        for n in 0..=6 {
            assert!((rep.sz[(n, n)].re - (-1.0 - n as f64)).abs() < 1e-14);
        }
        assert!(rep.su2_defect(5) < 1e-12);
        assert!(rep.ccr_defect() < 1e-14);
        assert!(rep.casimir()[(0, 0)].norm() < 1e-12);
        assert!(boson_spin_operators(0.0, 2.0, 4).is_err());
        assert!(boson_spin_operators(1.0, 2.0, 1).is_err());
    }

    #[test]
    fn j_eigenvalues_follow_the_discrete_series() {
        let rep = boson_spin_operators(1.0, 2.0, 8).unwrap();
        let j = two_site_j(&rep).unwrap();
        let top = j.leading_values(1);
        assert!((top[0] + 2.0).abs() < 1e-10);
        assert!(j.reconstruction_defect() < 1e-10);
        // Sector N2 = k is complete below the cutoff and holds J = -2 .. -2-k.
        for k in 0..=8 {
            let mut vals: Vec<f64> =
                (0..j.j_values.len()).filter(|&i| j.sector[i] == k && !j.flagged[i]).map(|i| j.j_values[i]).collect();
            vals.sort_by(|a, b| b.total_cmp(a));
            for (i, v) in vals.iter().enumerate() {
                assert!((v + 2.0 + i as f64).abs() < 1e-9, "N2={k}: {vals:?}");
            }
        }
    }

    #[test]
    fn local_hamiltonian_is_hermitian_and_charge_conserving() {
        let rep = boson_spin_operators(1.0, 2.0, 6).unwrap();
        let h = local_hamiltonian_s_minus1(&rep).unwrap();
        assert!(h.op.hermitian_defect() < 1e-12);
        assert_eq!(h.op.charge_violation(), 0.0);
        assert!((h.vacuum_energy - 2.0).abs() < 1e-12);
        assert!(h.pole_count > 0);
        assert!(local_hamiltonian_s_minus1(&boson_spin_operators(1.0, 1.0, 4).unwrap()).is_err());
    }

    #[test]
    fn proxy_small_chains() {
        let h2 = heisenberg_proxy(2, false, None).unwrap();
        assert!((h2.dense_spectrum()[0] + 1.0).abs() < 1e-14);
        // Ring of four: sum S.S = -2, minus 1/4 per bond.
        let h4 = heisenberg_proxy(4, true, None).unwrap();
        assert!((h4.dense_spectrum()[0] + 3.0).abs() < 1e-12);
        assert_eq!(h4.hermitian_defect(), 0.0);
    }

    #[test]
    fn two_site_ring_doubles_the_bond() {
        let local = heisenberg_bond();
        let ring = assemble_chain(&local, 2, true, None).unwrap().matrix.to_dense();
        let open = assemble_chain(&local, 2, false, None).unwrap().matrix.to_dense();
        assert!((ring - open * c(2.0)).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn open_and_periodic_differ_by_one_bond() {
        let rep = boson_spin_operators(1.0, 2.0, 3).unwrap();
        let local = local_hamiltonian_s_minus1(&rep).unwrap().normalized();
        let per = assemble_chain(&local, 3, true, None).unwrap().matrix.to_dense();
        let open = assemble_chain(&local, 3, false, None).unwrap().matrix.to_dense();
        let d = local.local_dim;
        let n = d * d * d;
        let wrap = CMatrix::from_fn(n, n, |r, col| {
            let (r0, r1, r2) = (r % d, (r / d) % d, r / (d * d));
            let (c0, c1, c2) = (col % d, (col / d) % d, col / (d * d));
            if r1 != c1 {
                return c(0.0);
            }
            local.matrix[(r2 * d + r0, c2 * d + c0)]
        });
        let diff = per - open - wrap;
        assert!(diff.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn periodic_chain_is_translation_invariant() {
        let h = heisenberg_proxy(6, true, Some(3)).unwrap();
        let b = &h.basis;
        let shift = |cfg: u64| -> u64 {
            let d = b.digits(cfg);
            (0..6).map(|k| d[(k + 5) % 6] as u64 * b.power(k)).sum()
        };
        for r in 0..h.dim() {
            for (col, v) in h.matrix.row(r) {
                let r2 = b.index_of(shift(b.config(r))).unwrap();
                let c2 = b.index_of(shift(b.config(col))).unwrap();
                assert_eq!(h.matrix.get(r2, c2), v);
            }
        }
    }

    #[test]
    fn memory_budget_is_enforced() {
        let err = assemble_chain_with_budget(&heisenberg_bond(), 20, true, None, 1 << 20).unwrap_err();
        assert!(matches!(err, Error::MemoryBudget { .. }));
    }

    #[test]
    fn three_site_ring_matches_bethe_once_the_sector_fits() {
        let exact = compare_with_bethe(3, 4, 3, 10).unwrap();
        assert_eq!(exact.compared, 10);
        assert!(exact.deviation < 1e-10, "{}", exact.deviation);
        let cut = compare_with_bethe(3, 2, 4, 10).unwrap();
        assert!(cut.deviation > 1e-3);
    }

    #[test]
    fn j_series_converges_with_cutoff() {
        let devs: Vec<f64> =
            [2, 4, 8, 16].iter().map(|&n| j_series_deviation(&boson_spin_operators(1.0, 2.0, n).unwrap(), 7).unwrap()).collect();
        assert!(devs.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{devs:?}");
        assert!(devs[3] < 1e-10);
    }
}

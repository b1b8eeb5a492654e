//! Entanglement of states and operators across a bipartition.
//!
//! States with fixed total charge are block diagonal in the charge of
//! region A, so the Schmidt decomposition is done one charge block at a time.
//! Charge-conserving operators are treated the same way, with the block label
//! `q_A(row) - q_A(col)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::sync::Arc;

use crate::basis::ProductBasis;
use crate::chain::CMatrix;
use crate::quench::StateVector;
use crate::{Error, Result};

/// Probabilities below this are SVD round-off and are dropped; each would add less than 1e-28.
const P_FLOOR: f64 = 1e-30;

pub fn von_neumann(p: &[f64]) -> f64 {
    (-p.iter().filter(|&&x| x > P_FLOOR).map(|&x| x * x.ln()).sum::<f64>()).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    pub sites: usize,
    pub in_a: Vec<bool>,
}

impl Bipartition {
    /// A = sites `0..cut`.
    pub fn cut(sites: usize, cut: usize) -> Result<Self> {
        if cut > sites {
            return Err(Error::domain(format!("cut {cut} outside 0..={sites}")));
        }
        Ok(Self { sites, in_a: (0..sites).map(|k| k < cut).collect() })
    }

    pub fn from_sites(sites: usize, a: &[usize]) -> Result<Self> {
        let mut in_a = vec![false; sites];
        for &k in a {
            if k >= sites {
                return Err(Error::domain(format!("site {k} outside chain of {sites}")));
            }
            in_a[k] = true;
        }
        Ok(Self { sites, in_a })
    }

    pub fn complement(&self) -> Self {
        Self { sites: self.sites, in_a: self.in_a.iter().map(|b| !b).collect() }
    }

    fn a_sites(&self) -> Vec<usize> {
        (0..self.sites).filter(|&k| self.in_a[k]).collect()
    }

    fn b_sites(&self) -> Vec<usize> {
        (0..self.sites).filter(|&k| !self.in_a[k]).collect()
    }
}

struct Split {
    a_sites: Vec<usize>,
    b_sites: Vec<usize>,
}

impl Split {
    fn new(part: &Bipartition) -> Self {
        Self { a_sites: part.a_sites(), b_sites: part.b_sites() }
    }

    /// `(a, b, q_a)` with `a`, `b` the digit strings packed in base `d`.
    fn of(&self, basis: &ProductBasis, cfg: u64) -> (u64, u64, usize) {
        let d = basis.local_dim() as u64;
        let mut a = 0u64;
        let mut qa = 0usize;
        for &k in self.a_sites.iter().rev() {
            let s = basis.digit(cfg, k);
            a = a * d + s as u64;
            qa += s;
        }
        let mut b = 0u64;
        for &k in self.b_sites.iter().rev() {
            b = b * d + basis.digit(cfg, k) as u64;
        }
        (a, b, qa)
    }
}

fn check_state(psi: &StateVector, part: &Bipartition) -> Result<()> {
    if part.sites != psi.basis.sites() {
        return Err(Error::DimensionMismatch { expected: psi.basis.sites(), found: part.sites });
    }
    let n = psi.norm();
    if (n - 1.0).abs() > 1e-8 {
        return Err(Error::domain(format!("state is not normalized (norm {n})")));
    }
    Ok(())
}

/// Amplitude matrices, one per charge of A (a single block if the total charge is not fixed).
fn amplitude_blocks(psi: &StateVector, part: &Bipartition) -> Vec<CMatrix> {
    let split = Split::new(part);
    let fixed = psi.basis.charge().is_some();
    let mut groups: BTreeMap<usize, Vec<(u64, u64, Complex64)>> = BTreeMap::new();
    for (i, &amp) in psi.amps.iter().enumerate() {
        let (a, b, qa) = split.of(&psi.basis, psi.basis.config(i));
        groups.entry(if fixed { qa } else { 0 }).or_default().push((a, b, amp));
    }
    groups
        .into_values()
        .map(|entries| {
            let mut rows: Vec<u64> = entries.iter().map(|e| e.0).collect();
            rows.sort_unstable();
            rows.dedup();
            let mut cols: Vec<u64> = entries.iter().map(|e| e.1).collect();
            cols.sort_unstable();
            cols.dedup();
            let mut m = CMatrix::zeros(rows.len(), cols.len());
            for (a, b, amp) in entries {
                let r = rows.binary_search(&a).unwrap();
                let c = cols.binary_search(&b).unwrap();
                m[(r, c)] = amp;
            }
            m
        })
        .collect()
}

fn squared_singular_values(blocks: Vec<CMatrix>) -> Vec<f64> {
    let mut p: Vec<f64> = blocks
        .into_par_iter()
        .map(|m| m.singular_values().iter().map(|s| s * s).collect::<Vec<f64>>())
        .collect::<Vec<_>>()
        .concat();
    p.sort_by(|a, b| b.total_cmp(a));
    p
}

/// Schmidt probabilities across the bipartition, descending.
pub fn schmidt_spectrum(psi: &StateVector, part: &Bipartition) -> Result<Vec<f64>> {
    check_state(psi, part)?;
    Ok(squared_singular_values(amplitude_blocks(psi, part)))
}

pub fn entropy_of(psi: &StateVector, part: &Bipartition) -> Result<f64> {
    Ok(von_neumann(&schmidt_spectrum(psi, part)?))
}

/// Entropy of sites `0..cut` against the rest.
pub fn entanglement_entropy(psi: &StateVector, cut: usize) -> Result<f64> {
    entropy_of(psi, &Bipartition::cut(psi.basis.sites(), cut)?)
}

/// Eigenvalues of the reduced density matrix of A, from `rho_A = M M^dagger` block by block.
pub fn reduced_density_spectrum(psi: &StateVector, part: &Bipartition) -> Result<Vec<f64>> {
    check_state(psi, part)?;
    let mut p: Vec<f64> = amplitude_blocks(psi, part)
        .into_par_iter()
        .map(|m| {
            let rho = &m * m.adjoint();
            rho.symmetric_eigen().eigenvalues.iter().map(|&x| x.max(0.0)).collect::<Vec<f64>>()
        })
        .collect::<Vec<_>>()
        .concat();
    p.sort_by(|a, b| b.total_cmp(a));
    Ok(p)
}

/// Entropy from the reduced density matrix, an independent route to `entropy_of`.
pub fn entropy_via_density_matrix(psi: &StateVector, part: &Bipartition) -> Result<f64> {
    Ok(von_neumann(&reduced_density_spectrum(psi, part)?))
}

/// `I(A;B) = 2 S_A` for a pure state.
pub fn mutual_information(psi: &StateVector, part: &Bipartition) -> Result<f64> {
    Ok(2.0 * entropy_of(psi, part)?)
}

/// `S_A + S_B - S_AB` with each term computed from its own density matrix.
pub fn mutual_information_from_marginals(psi: &StateVector, part: &Bipartition) -> Result<f64> {
    let sa = entropy_via_density_matrix(psi, part)?;
    let sb = entropy_via_density_matrix(psi, &part.complement())?;
    let sab = von_neumann(&[psi.norm().powi(2)]);
    Ok(sa + sb - sab)
}

/// Operator on a chain, stored as one dense block per conserved-charge sector.
#[derive(Debug, Clone)]
pub struct ChainOperator {
    pub sites: usize,
    pub local_dim: usize,
    pub blocks: Vec<(Arc<ProductBasis>, CMatrix)>,
}

impl ChainOperator {
    fn sectors(sites: usize, local_dim: usize) -> Result<Vec<Arc<ProductBasis>>> {
        (0..=sites * (local_dim - 1)).map(|q| ProductBasis::sector(sites, local_dim, q).map(Arc::new)).collect()
    }

    pub fn identity(sites: usize, local_dim: usize) -> Result<Self> {
        let blocks = Self::sectors(sites, local_dim)?
            .into_iter()
            .map(|b| {
                let n = b.dim();
                (b, CMatrix::identity(n, n))
            })
            .collect();
        Ok(Self { sites, local_dim, blocks })
    }

    /// `f(s_site)` acting on one site, diagonal in the local basis.
    pub fn site_diagonal(sites: usize, local_dim: usize, site: usize, values: &[f64]) -> Result<Self> {
        if site >= sites {
            return Err(Error::domain(format!("site {site} outside chain of {sites}")));
        }
        if values.len() != local_dim {
            return Err(Error::DimensionMismatch { expected: local_dim, found: values.len() });
        }
        let blocks = Self::sectors(sites, local_dim)?
            .into_iter()
            .map(|b| {
                let n = b.dim();
                let m = CMatrix::from_fn(n, n, |r, c| {
                    if r == c { Complex64::new(values[b.digit(b.config(r), site)], 0.0) } else { Complex64::new(0.0, 0.0) }
                });
                (b, m)
            })
            .collect();
        Ok(Self { sites, local_dim, blocks })
    }

    /// Splits a dense operator on the full space; it must conserve charge.
    pub fn from_dense(sites: usize, local_dim: usize, m: &CMatrix) -> Result<Self> {
        let full = ProductBasis::full(sites, local_dim)?;
        if m.nrows() != full.dim() || m.ncols() != full.dim() {
            return Err(Error::DimensionMismatch { expected: full.dim(), found: m.nrows() });
        }
        for r in 0..full.dim() {
            for c in 0..full.dim() {
                if m[(r, c)] != Complex64::new(0.0, 0.0) && full.config_charge(r as u64) != full.config_charge(c as u64) {
                    return Err(Error::domain("operator does not conserve charge"));
                }
            }
        }
        let blocks = Self::sectors(sites, local_dim)?
            .into_iter()
            .map(|b| {
                let n = b.dim();
                let blk = CMatrix::from_fn(n, n, |r, c| m[(b.config(r) as usize, b.config(c) as usize)]);
                (b, blk)
            })
            .collect();
        Ok(Self { sites, local_dim, blocks })
    }

    pub fn to_dense(&self) -> CMatrix {
        let n = self.local_dim.pow(self.sites as u32);
        let mut m = CMatrix::zeros(n, n);
        for (b, blk) in &self.blocks {
            for r in 0..b.dim() {
                for c in 0..b.dim() {
                    m[(b.config(r) as usize, b.config(c) as usize)] = blk[(r, c)];
                }
            }
        }
        m
    }

    pub fn hs_norm(&self) -> f64 {
        self.blocks.iter().map(|(_, m)| m.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum::<f64>().sqrt()
    }

    pub fn storage_bytes(sites: usize, local_dim: usize) -> u64 {
        (0..=sites * (local_dim - 1))
            .map(|q| {
                let d = crate::basis::sector_dim(sites, local_dim, q);
                (d * d * 16).min(u64::MAX as u128) as u64
            })
            .fold(0u64, |a, b| a.saturating_add(b))
    }
}

/// Operator-space entanglement entropy across `0..cut | cut..L` with the Hilbert-Schmidt normalization.
pub fn osee(op: &ChainOperator, cut: usize) -> Result<f64> {
    let norm = op.hs_norm();
    if !(norm > 0.0) {
        return Err(Error::domain("operator space entanglement of the zero operator"));
    }
    let part = Bipartition::cut(op.sites, cut)?;
    let split = Split::new(&part);
    let d = op.local_dim as u64;
    let da = d.pow(split.a_sites.len() as u32);
    let db = d.pow(split.b_sites.len() as u32);
    let mut groups: BTreeMap<i64, Vec<(u64, u64, Complex64)>> = BTreeMap::new();
    for (b, m) in &op.blocks {
        let parts: Vec<(u64, u64, usize)> = (0..b.dim()).map(|i| split.of(b, b.config(i))).collect();
        for r in 0..b.dim() {
            for c in 0..b.dim() {
                let v = m[(r, c)];
                if v == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let (ar, br, qr) = parts[r];
                let (ac, bc, qc) = parts[c];
                groups.entry(qr as i64 - qc as i64).or_default().push((ar * da + ac, br * db + bc, v / norm));
            }
        }
    }
    let blocks: Vec<CMatrix> = groups
        .into_values()
        .map(|entries| {
            let mut rows: Vec<u64> = entries.iter().map(|e| e.0).collect();
            rows.sort_unstable();
            rows.dedup();
            let mut cols: Vec<u64> = entries.iter().map(|e| e.1).collect();
            cols.sort_unstable();
            cols.dedup();
            let mut m = DMatrix::zeros(rows.len(), cols.len());
            for (r, c, v) in entries {
                m[(rows.binary_search(&r).unwrap(), cols.binary_search(&c).unwrap())] += v;
            }
            m
        })
        .collect();
    let p = squared_singular_values(blocks);
    let total: f64 = p.iter().sum();
    let p: Vec<f64> = p.iter().map(|x| x / total).collect();
    Ok(von_neumann(&p))
}

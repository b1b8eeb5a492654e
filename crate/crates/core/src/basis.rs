//! Product bases of `L` sites with `d` local states, optionally restricted
//! to fixed total charge (sum of local occupations).
//!
//! A configuration is the integer `sum_k s_k d^k`: site 0 is the least
//! significant digit. Configurations are kept sorted so lookups are binary searches.

use crate::{Error, Result};

/// Largest basis dimension we are willing to enumerate.
pub const MAX_BASIS_DIM: usize = 1 << 28;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductBasis {
    sites: usize,
    local_dim: usize,
    charge: Option<usize>,
    powers: Vec<u64>,
    configs: Vec<u64>,
}

impl ProductBasis {
    pub fn full(sites: usize, local_dim: usize) -> Result<Self> {
        let powers = powers(sites, local_dim)?;
        let total = powers[sites];
        if total as usize > MAX_BASIS_DIM {
            return Err(Error::MemoryBudget { required_bytes: total * 16, budget_bytes: MAX_BASIS_DIM as u64 * 16 });
        }
        Ok(Self { sites, local_dim, charge: None, configs: (0..total).collect(), powers })
    }

    pub fn sector(sites: usize, local_dim: usize, charge: usize) -> Result<Self> {
        let powers = powers(sites, local_dim)?;
        let dim = sector_dim(sites, local_dim, charge);
        if dim > MAX_BASIS_DIM as u128 {
            return Err(Error::MemoryBudget { required_bytes: (dim * 16) as u64, budget_bytes: MAX_BASIS_DIM as u64 * 16 });
        }
        let mut configs = Vec::with_capacity(dim as usize);
        fill(sites, local_dim, charge, 0, &powers, &mut configs);
        configs.sort_unstable();
        Ok(Self { sites, local_dim, charge: Some(charge), powers, configs })
    }

    pub fn with_charge(sites: usize, local_dim: usize, charge: Option<usize>) -> Result<Self> {
        match charge {
            Some(q) => Self::sector(sites, local_dim, q),
            None => Self::full(sites, local_dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn charge(&self) -> Option<usize> {
        self.charge
    }

    pub fn configs(&self) -> &[u64] {
        &self.configs
    }

    pub fn config(&self, index: usize) -> u64 {
        self.configs[index]
    }

    pub fn index_of(&self, config: u64) -> Option<usize> {
        self.configs.binary_search(&config).ok()
    }

    pub fn power(&self, site: usize) -> u64 {
        self.powers[site]
    }

    pub fn digit(&self, config: u64, site: usize) -> usize {
        ((config / self.powers[site]) % self.local_dim as u64) as usize
    }

    pub fn set_digit(&self, config: u64, site: usize, value: usize) -> u64 {
        let old = self.digit(config, site) as u64;
        config - old * self.powers[site] + value as u64 * self.powers[site]
    }

    pub fn digits(&self, config: u64) -> Vec<usize> {
        (0..self.sites).map(|k| self.digit(config, k)).collect()
    }

    pub fn config_charge(&self, config: u64) -> usize {
        (0..self.sites).map(|k| self.digit(config, k)).sum()
    }
}

/// Dimension of a sector (or of the full space), checked against `MAX_BASIS_DIM`.
pub fn sector_dim_or_full(sites: usize, local_dim: usize, charge: Option<usize>) -> Result<u64> {
    let dim = match charge {
        Some(q) => sector_dim(sites, local_dim, q),
        None => (local_dim as u128).checked_pow(sites as u32).unwrap_or(u128::MAX),
    };
    if dim > MAX_BASIS_DIM as u128 {
        return Err(Error::MemoryBudget {
            required_bytes: dim.saturating_mul(16).min(u64::MAX as u128) as u64,
            budget_bytes: MAX_BASIS_DIM as u64 * 16,
        });
    }
    Ok(dim as u64)
}

fn powers(sites: usize, local_dim: usize) -> Result<Vec<u64>> {
    if local_dim < 2 {
        return Err(Error::domain("local dimension must be at least 2"));
    }
    let mut p = vec![1u64; sites + 1];
    for k in 1..=sites {
        p[k] = p[k - 1]
            .checked_mul(local_dim as u64)
            .ok_or_else(|| Error::domain(format!("{local_dim}^{sites} overflows the configuration index")))?;
    }
    Ok(p)
}

/// Number of digit strings of length `sites` in `0..d` summing to `charge`.
pub fn sector_dim(sites: usize, local_dim: usize, charge: usize) -> u128 {
    let mut ways = vec![0u128; charge + 1];
    ways[0] = 1;
    for _ in 0..sites {
        let mut next = vec![0u128; charge + 1];
        for (q, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for s in 0..local_dim.min(charge - q + 1) {
                next[q + s] += w;
            }
        }
        ways = next;
    }
    ways[charge]
}

fn fill(sites_left: usize, d: usize, charge: usize, prefix: u64, powers: &[u64], out: &mut Vec<u64>) {
    if sites_left == 0 {
        if charge == 0 {
            out.push(prefix);
        }
        return;
    }
    let site = sites_left - 1;
    let max_rest = (d - 1) * site;
    for s in 0..d.min(charge + 1) {
        if charge - s > max_rest {
            continue;
        }
        fill(site, d, charge - s, prefix + s as u64 * powers[site], powers, out);
    }
}

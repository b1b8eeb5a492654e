//! Linear integral equations on the exterior Fermi sea `|lambda| >= q`.
//!
//! Each tail `[q, inf)` is mapped to `(0, 1]` by `u = q / lambda`. Because the
//! kernel and the driving terms are even, unknowns live on the positive tail
//! only and the kernel is folded, `K(l - m) + K(l + m)`; mirrored values are
//! then equal by construction.
//!
//! Sign conventions: `rho_p` solves `2 pi rho_p = K + int_ext K rho_p`,
//! and the dressed energy solves `eps - (1/2pi) int_ext K eps = 2/(l^2+1) - h`,
//! so `eps < 0` on occupied states far from the Fermi point.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::f64::consts::PI;

use crate::numeric::{brent, fejer_first, gauss_legendre};
use crate::{Error, Result};

/// Smallest Fermi point accepted by the solvers.
pub const Q_MIN: f64 = 1e-3;
/// Condition estimate above which a Nystrom system is rejected.
pub const MAX_CONDITION: f64 = 1e12;
/// Smallest resolution accepted by the solvers.
pub const MIN_RESOLUTION: usize = 32;
/// Tolerance on `eps(q)` required of a Fermi point.
pub const FERMI_TOL: f64 = 1e-10;

pub fn kernel(lambda: f64, mu: f64) -> f64 {
    let d = lambda - mu;
    2.0 / (1.0 + d * d)
}

fn kernel_derivative(x: f64) -> f64 {
    let s = 1.0 + x * x;
    -4.0 * x / (s * s)
}

pub fn bare_energy(lambda: f64, h: f64) -> f64 {
    2.0 / (lambda * lambda + 1.0) - h
}

fn bare_energy_derivative(lambda: f64) -> f64 {
    let s = 1.0 + lambda * lambda;
    -4.0 * lambda / (s * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    GaussLegendre,
    Fejer,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExteriorGrid {
    pub q: f64,
    pub rule: QuadratureRule,
    /// Positive-tail nodes, ascending.
    pub tail_nodes: Vec<f64>,
    /// Weights of the positive-tail nodes in `lambda`.
    pub tail_weights: Vec<f64>,
}

impl ExteriorGrid {
    pub fn new(q: f64, resolution: usize) -> Result<Self> {
        Self::with_rule(q, resolution, QuadratureRule::GaussLegendre)
    }

    pub fn with_rule(q: f64, resolution: usize, rule: QuadratureRule) -> Result<Self> {
        if !q.is_finite() || q <= 0.0 {
            return Err(Error::domain(format!("Fermi point must be positive, got {q}")));
        }
        if resolution == 0 {
            return Err(Error::domain("resolution must be positive"));
        }
        let (x, w) = match rule {
            QuadratureRule::GaussLegendre => gauss_legendre(resolution),
            QuadratureRule::Fejer => fejer_first(resolution),
        };
        // x ascending in [-1, 1] -> u ascending in (0, 1) -> lambda descending.
        let mut tail_nodes = Vec::with_capacity(resolution);
        let mut tail_weights = Vec::with_capacity(resolution);
        for i in (0..resolution).rev() {
            let u = 0.5 * (x[i] + 1.0);
            tail_nodes.push(q / u);
            tail_weights.push(0.5 * w[i] * q / (u * u));
        }
        Ok(Self { q, rule, tail_nodes, tail_weights })
    }

    pub fn resolution(&self) -> usize {
        self.tail_nodes.len()
    }

    /// All nodes ascending: negative tail, then positive tail.
    pub fn nodes(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.tail_nodes.iter().rev().map(|x| -x).collect();
        out.extend_from_slice(&self.tail_nodes);
        out
    }

    pub fn weights(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.tail_weights.iter().rev().copied().collect();
        out.extend_from_slice(&self.tail_weights);
        out
    }

    /// Integral over `[q, inf)`.
    pub fn integrate_tail<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.tail_nodes.iter().zip(&self.tail_weights).map(|(&x, w)| w * f(x)).sum()
    }

    /// Integral over the whole exterior domain.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.integrate_tail(&f) + self.integrate_tail(|x| f(-x))
    }

    fn mirror<T: Copy>(&self, tail: &[T]) -> Vec<T> {
        let mut out: Vec<T> = tail.iter().rev().copied().collect();
        out.extend_from_slice(tail);
        out
    }
}

/// `I - (1/2pi) (K(l_i - m_j) + K(l_i + m_j)) w_j`, factored once.
struct Nystrom {
    grid: ExteriorGrid,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    matrix: DMatrix<f64>,
    condition: f64,
}

impl Nystrom {
    fn new(q: f64, resolution: usize, rule: QuadratureRule) -> Result<Self> {
        if !(q > Q_MIN) {
            return Err(Error::SingularRegime { q, q_min: Q_MIN });
        }
        if resolution < MIN_RESOLUTION {
            return Err(Error::domain(format!("resolution {resolution} below minimum {MIN_RESOLUTION}")));
        }
        let grid = ExteriorGrid::with_rule(q, resolution, rule)?;
        let n = resolution;
        let (x, w) = (&grid.tail_nodes, &grid.tail_weights);
        let matrix = DMatrix::from_fn(n, n, |i, j| {
            let folded = kernel(x[i], x[j]) + kernel(x[i], -x[j]);
            let delta = if i == j { 1.0 } else { 0.0 };
            delta - folded * w[j] / (2.0 * PI)
        });
        let lu = matrix.clone().lu();
        let inv = lu.try_inverse().ok_or(Error::IllConditioned { condition: f64::INFINITY })?;
        let condition = one_norm(&matrix) * one_norm(&inv);
        if !(condition < MAX_CONDITION) {
            return Err(Error::IllConditioned { condition });
        }
        Ok(Self { grid, lu, matrix, condition })
    }

    fn solve(&self, rhs: Vec<f64>) -> Result<(Vec<f64>, f64)> {
        let b = DVector::from_vec(rhs);
        let x = self.lu.solve(&b).ok_or(Error::IllConditioned { condition: self.condition })?;
        let r = &self.matrix * &x - &b;
        Ok((x.iter().copied().collect(), r.amax()))
    }
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct DensitySolution {
    pub grid: ExteriorGrid,
    /// Particle density at the positive-tail nodes.
    pub rho_p_tail: Vec<f64>,
    pub h: Option<f64>,
    pub residual: f64,
    pub condition: f64,
}

impl DensitySolution {
    /// Values at all nodes, ordered as `grid.nodes()`.
    pub fn rho_p(&self) -> Vec<f64> {
        self.grid.mirror(&self.rho_p_tail)
    }

    /// Hole density on the occupied domain, identically zero.
    pub fn rho_h(&self) -> Vec<f64> {
        vec![0.0; 2 * self.grid.resolution()]
    }

    /// Particle number per site, `int_ext rho_p`.
    pub fn filling(&self) -> f64 {
        2.0 * self.grid.tail_weights.iter().zip(&self.rho_p_tail).map(|(w, r)| w * r).sum::<f64>()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DressedEnergySolution {
    pub grid: ExteriorGrid,
    pub eps_tail: Vec<f64>,
    pub h: f64,
    pub q: f64,
    pub residual: f64,
    pub condition: f64,
}

impl DressedEnergySolution {
    pub fn eps(&self) -> Vec<f64> {
        self.grid.mirror(&self.eps_tail)
    }
}

pub fn solve_density(q: f64, resolution: usize) -> Result<DensitySolution> {
    solve_density_with_rule(q, resolution, QuadratureRule::GaussLegendre)
}

pub fn solve_density_with_rule(q: f64, resolution: usize, rule: QuadratureRule) -> Result<DensitySolution> {
    let ny = Nystrom::new(q, resolution, rule)?;
    let rhs = ny.grid.tail_nodes.iter().map(|&x| kernel(x, 0.0) / (2.0 * PI)).collect();
    let (rho, residual) = ny.solve(rhs)?;
    Ok(DensitySolution { rho_p_tail: rho, h: None, residual, condition: ny.condition, grid: ny.grid })
}

/// `rho_t(lambda) = (1/2pi) [ int_ext K(lambda - mu) rho_p(mu) dmu + K(lambda) ]`, any real `lambda`.
pub fn vacancy_density(dens: &DensitySolution, lambda: f64) -> f64 {
    let g = &dens.grid;
    let s: f64 = g
        .tail_nodes
        .iter()
        .zip(&g.tail_weights)
        .zip(&dens.rho_p_tail)
        .map(|((&m, w), r)| w * (kernel(lambda, m) + kernel(lambda, -m)) * r)
        .sum();
    (s + kernel(lambda, 0.0)) / (2.0 * PI)
}

pub fn solve_dressed_energy(q: f64, h: f64, resolution: usize) -> Result<DressedEnergySolution> {
    solve_dressed_energy_with_rule(q, h, resolution, QuadratureRule::GaussLegendre)
}

pub fn solve_dressed_energy_with_rule(
    q: f64,
    h: f64,
    resolution: usize,
    rule: QuadratureRule,
) -> Result<DressedEnergySolution> {
    if !h.is_finite() {
        return Err(Error::domain("chemical potential must be finite"));
    }
    let ny = Nystrom::new(q, resolution, rule)?;
    dressed_from(&ny, h)
}

fn dressed_from(ny: &Nystrom, h: f64) -> Result<DressedEnergySolution> {
    let rhs = ny.grid.tail_nodes.iter().map(|&x| bare_energy(x, h)).collect();
    let (eps, residual) = ny.solve(rhs)?;
    Ok(DressedEnergySolution { grid: ny.grid.clone(), eps_tail: eps, h, q: ny.grid.q, residual, condition: ny.condition })
}

/// Nystrom interpolant of the dressed energy at any `lambda`.
pub fn dressed_energy_at(sol: &DressedEnergySolution, lambda: f64) -> f64 {
    let g = &sol.grid;
    let s: f64 = g
        .tail_nodes
        .iter()
        .zip(&g.tail_weights)
        .zip(&sol.eps_tail)
        .map(|((&m, w), e)| w * (kernel(lambda, m) + kernel(lambda, -m)) * e)
        .sum();
    bare_energy(lambda, sol.h) + s / (2.0 * PI)
}

/// Derivative of the Nystrom interpolant.
pub fn dressed_energy_derivative(sol: &DressedEnergySolution, lambda: f64) -> f64 {
    let g = &sol.grid;
    let s: f64 = g
        .tail_nodes
        .iter()
        .zip(&g.tail_weights)
        .zip(&sol.eps_tail)
        .map(|((&m, w), e)| w * (kernel_derivative(lambda - m) + kernel_derivative(lambda + m)) * e)
        .sum();
    bare_energy_derivative(lambda) + s / (2.0 * PI)
}

/// `eps_q(q)` for the equation posed with Fermi point `q`.
pub fn fermi_mismatch(q: f64, h: f64, resolution: usize) -> Result<f64> {
    let ny = Nystrom::new(q, resolution, QuadratureRule::GaussLegendre)?;
    let sol = dressed_from(&ny, h)?;
    Ok(dressed_energy_at(&sol, q))
}

#[derive(Debug, Clone, Serialize)]
pub struct FermiScan {
    pub q_lo: f64,
    pub q_hi: f64,
    pub samples: usize,
    pub sign_changes: usize,
    pub rejected: Vec<(f64, f64)>,
}

/// Fermi point `q` with `eps(q) = 0`.
///
/// `eps_q(q)` is scanned on a geometric grid from large `q` downwards; each
/// sign change is refined with Brent's method and accepted only if the
/// mismatch there is below `FERMI_TOL`, which rejects sign flips across poles.
pub fn find_fermi_point(h: f64, resolution: usize) -> Result<f64> {
    find_fermi_point_scan(h, resolution).map(|(q, _)| q)
}

pub fn find_fermi_point_scan(h: f64, resolution: usize) -> Result<(f64, FermiScan)> {
    if !(h > 0.0 && h < 2.0) {
        return Err(Error::domain(format!("chemical potential h = {h} outside (0, 2)")));
    }
    let q_hi = (20.0 * (2.0 / h).sqrt()).max(50.0);
    let q_lo = 2.0 * Q_MIN;
    let samples = 400;
    let ratio = (q_lo / q_hi).powf(1.0 / (samples - 1) as f64);
    let f = |q: f64| fermi_mismatch(q, h, resolution).unwrap_or(f64::NAN);
    let mut scan = FermiScan { q_lo, q_hi, samples, sign_changes: 0, rejected: Vec::new() };
    let mut prev_q = q_hi;
    let mut prev_f = f(q_hi);
    for k in 1..samples {
        let q = q_hi * ratio.powi(k as i32);
        let fq = f(q);
        if prev_f.is_finite() && fq.is_finite() && prev_f.signum() != fq.signum() {
            scan.sign_changes += 1;
            if let Some(root) = brent(f, q, prev_q, 1e-15, 200) {
                let m = f(root);
                if m.abs() <= FERMI_TOL {
                    return Ok((root, scan));
                }
                scan.rejected.push((root, m));
            }
        }
        prev_q = q;
        prev_f = fq;
    }
    Err(Error::NoBracket { lo: q_lo, hi: q_hi })
}

/// `v_F = |eps'(q)| / (2 pi rho_t(q))`.
///
/// `eps` decreases through zero at `q` towards the occupied tail, so `eps'(q) < 0`
/// and the velocity is its magnitude.
pub fn fermi_velocity(q: f64, h: f64, resolution: usize) -> Result<f64> {
    let dens = solve_density(q, resolution)?;
    let eps = solve_dressed_energy(q, h, resolution)?;
    let rho_t = vacancy_density(&dens, q);
    if !(rho_t.abs() > 1e-12) {
        return Err(Error::domain(format!("vacancy density at the Fermi point is {rho_t:e}")));
    }
    Ok(dressed_energy_derivative(&eps, q).abs() / (2.0 * PI * rho_t.abs()))
}

/// `eps_inf = int_ext eps_0 rho_p`, the coefficient of `L` in the ground energy.
pub fn bulk_energy_density(q: f64, h: f64, resolution: usize) -> Result<f64> {
    bulk_energy_density_with_rule(q, h, resolution, QuadratureRule::GaussLegendre)
}

pub fn bulk_energy_density_with_rule(q: f64, h: f64, resolution: usize, rule: QuadratureRule) -> Result<f64> {
    let dens = solve_density_with_rule(q, resolution, rule)?;
    let g = &dens.grid;
    let s: f64 = g
        .tail_nodes
        .iter()
        .zip(&g.tail_weights)
        .zip(&dens.rho_p_tail)
        .map(|((&x, w), r)| w * bare_energy(x, h) * r)
        .sum();
    Ok(2.0 * s)
}

/// Everything the finite-size analysis needs at one chemical potential.
#[derive(Debug, Clone, Serialize)]
pub struct FermiSea {
    pub h: f64,
    pub q: f64,
    pub resolution: usize,
    pub filling: f64,
    pub fermi_velocity: f64,
    pub bulk_energy: f64,
    pub density_residual: f64,
    pub energy_residual: f64,
    pub fermi_mismatch: f64,
    pub condition: f64,
}

pub fn fermi_sea(h: f64, resolution: usize) -> Result<FermiSea> {
    sea_at(find_fermi_point(h, resolution)?, h, resolution)
}

/// The same quantities at a prescribed `q`, which need not be the Fermi point.
pub fn sea_at(q: f64, h: f64, resolution: usize) -> Result<FermiSea> {
    let dens = solve_density(q, resolution)?;
    let eps = solve_dressed_energy(q, h, resolution)?;
    Ok(FermiSea {
        h,
        q,
        resolution,
        filling: dens.filling(),
        fermi_velocity: fermi_velocity(q, h, resolution)?,
        bulk_energy: bulk_energy_density(q, h, resolution)?,
        density_residual: dens.residual,
        energy_residual: eps.residual,
        fermi_mismatch: dressed_energy_at(&eps, q),
        condition: dens.condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        assert_eq!(kernel(0.0, 0.0), 2.0);
        assert_eq!(kernel(1.0, 0.0), 1.0);
        assert!((kernel(7.5, 4.5) - 0.2).abs() < 1e-15);
        assert_eq!(kernel(0.3, -1.2), kernel(-1.2, 0.3));
    }

    #[test]
    fn exterior_quadrature_is_exact_for_the_kernel_tail() {
        for q in [0.1, 0.5, 1.0, 2.0, 10.0, 50.0] {
            for rule in [QuadratureRule::GaussLegendre, QuadratureRule::Fejer] {
                let g = ExteriorGrid::with_rule(q, 128, rule).unwrap();
                let exact = PI - 2.0 * q.atan();
                assert!((g.integrate_tail(|x| 2.0 / (1.0 + x * x)) - exact).abs() < 1e-10, "q={q} {rule:?}");
                assert!((g.integrate(|x| 2.0 / (1.0 + x * x)) - 2.0 * exact).abs() < 1e-10);
                assert!(g.nodes().iter().all(|x| x.abs() >= q));
                assert!(g.weights().iter().all(|&w| w > 0.0));
            }
        }
    }

    #[test]
    fn solutions_are_even_at_mirrored_nodes() {
        let d = solve_density(1.0, 64).unwrap();
        let rho = d.rho_p();
        let n = rho.len();
        for i in 0..n {
            assert_eq!(rho[i], rho[n - 1 - i]);
        }
        let nodes = d.grid.nodes();
        assert!((vacancy_density(&d, nodes[3]) - vacancy_density(&d, -nodes[3])).abs() < 1e-12);
    }

    #[test]
    fn discrete_equations_are_satisfied() {
        for q in [0.5, 1.0, 50.0] {
            let d = solve_density(q, 64).unwrap();
            assert!(d.residual < 1e-12 * d.condition.max(1.0));
            let e = solve_dressed_energy(q, 0.3, 64).unwrap();
            for (x, v) in e.grid.tail_nodes.iter().zip(&e.eps_tail).step_by(5) {
                assert!((dressed_energy_at(&e, *x) - v).abs() < 1e-9 * (1.0 + v.abs()));
            }
        }
    }

    #[test]
    fn fermi_edge_is_not_decoupled() {
        // At the edge half of the kernel weight lies inside the domain, so the
        // integral term is never negligible next to the driving term.
        let d = solve_density(50.0, 64).unwrap();
        let bare = kernel(50.0, 0.0) / (2.0 * PI);
        assert!(vacancy_density(&d, 50.0) > 1.5 * bare);
    }

    #[test]
    fn on_domain_vacancy_density_matches_nodes() {
        let d = solve_density(2.0, 64).unwrap();
        for (x, r) in d.grid.tail_nodes.iter().zip(&d.rho_p_tail).step_by(7) {
            assert!((vacancy_density(&d, *x) - r).abs() < 1e-9 * (1.0 + r.abs()));
        }
    }

    #[test]
    fn small_fermi_point_is_singular() {
        assert!(matches!(solve_density(1e-4, 64), Err(Error::SingularRegime { .. })));
        assert!(solve_density(1.0, 8).is_err());
        assert!(find_fermi_point(2.0, 64).is_err());
        assert!(find_fermi_point(-0.1, 64).is_err());
    }
}

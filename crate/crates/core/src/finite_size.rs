//! Finite-size ground energies and the central charge from the `1/L` term.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::bethe::{ground_state_with, SolverOptions};
use crate::numeric::least_squares;
use crate::thermo::{fermi_sea, FermiSea};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ScalingEntry {
    pub length: usize,
    pub roots: usize,
    /// Grand-canonical energy `E - h N`.
    pub energy: f64,
    pub bethe_energy: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingSeries {
    pub h: f64,
    pub entries: Vec<ScalingEntry>,
    pub fermi_velocity: Option<f64>,
    pub bulk_energy: Option<f64>,
    pub sea: Option<FermiSea>,
}

#[derive(Debug, Clone, Copy)]
pub struct SeriesOptions {
    pub resolution: usize,
    pub solver: SolverOptions,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self { resolution: 128, solver: SolverOptions::default() }
    }
}

/// Even filling closest to `L * density`.
pub fn filling(length: usize, density: f64) -> Result<usize> {
    if !density.is_finite() || density < 0.0 {
        return Err(Error::domain(format!(
            "thermodynamic particle density {density} is not a valid filling (rho_p must be positive)"
        )));
    }
    Ok(2 * ((length as f64 * density / 2.0).round() as usize))
}

pub fn ground_energy_series(h: f64, lengths: &[usize], opts: &SeriesOptions) -> Result<ScalingSeries> {
    if !h.is_finite() {
        return Err(Error::domain("chemical potential must be finite"));
    }
    if lengths.is_empty() {
        return Err(Error::domain("empty list of chain lengths"));
    }
    if lengths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("chain lengths must be strictly increasing"));
    }
    if let Some(l) = lengths.iter().find(|&&l| l % 2 == 1 || l < 2) {
        return Err(Error::domain(format!("chain length {l} must be even and at least 2")));
    }
    let sea = if h >= 2.0 { None } else { Some(fermi_sea(h, opts.resolution)?) };
    let density = sea.as_ref().map_or(0.0, |s| s.filling);
    let fillings = lengths.iter().map(|&l| filling(l, density)).collect::<Result<Vec<_>>>()?;
    let entries = lengths
        .par_iter()
        .zip(fillings.par_iter())
        .map(|(&l, &n)| {
            let st = ground_state_with(l, n, &opts.solver)
                .map_err(|e| Error::AtLength { length: l, source: Box::new(e) })?;
            let e = st.energy();
            Ok(ScalingEntry { length: l, roots: n, energy: e - h * n as f64, bethe_energy: e, residual: st.residual })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalingSeries {
        h,
        entries,
        fermi_velocity: sea.as_ref().map(|s| s.fermi_velocity),
        bulk_energy: sea.as_ref().map(|s| s.bulk_energy),
        sea,
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FitOptions {
    /// Adds an `a / L^2` term.
    pub nuisance: bool,
    pub min_length: Option<usize>,
    pub max_length: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CentralChargeEstimate {
    pub c: f64,
    pub stderr: f64,
    pub fit_window: (usize, usize),
    pub residuals: Vec<f64>,
    /// Fitted coefficient of `L`.
    pub bulk_fit: f64,
    pub fermi_velocity: f64,
    pub nuisance: Option<f64>,
}

/// Fits `E(L) = e L + b / L (+ a / L^2)` and returns `c = -6 b / (pi v_F)`.
///
/// The bulk coefficient is a free parameter of the fit.
pub fn extract_central_charge(series: &ScalingSeries, opts: &FitOptions) -> Result<CentralChargeEstimate> {
    let v_f = series
        .fermi_velocity
        .ok_or_else(|| Error::DegenerateFit("series has no Fermi velocity (no Fermi sea)".into()))?;
    if !(v_f.is_finite() && v_f > 0.0) {
        return Err(Error::DegenerateFit(format!("Fermi velocity {v_f} is not positive")));
    }
    let pts: Vec<&ScalingEntry> = series
        .entries
        .iter()
        .filter(|e| opts.min_length.is_none_or(|m| e.length >= m) && opts.max_length.is_none_or(|m| e.length <= m))
        .collect();
    if pts.len() < 4 {
        return Err(Error::DegenerateFit(format!("{} points in the fit window, need at least 4", pts.len())));
    }
    let cols = if opts.nuisance { 3 } else { 2 };
    let design = DMatrix::from_fn(pts.len(), cols, |i, j| {
        let l = pts[i].length as f64;
        match j {
            0 => l,
            1 => 1.0 / l,
            _ => 1.0 / (l * l),
        }
    });
    let y: Vec<f64> = pts.iter().map(|e| e.energy).collect();
    let fit = least_squares(&design, &y).map_err(|e| match e {
        Error::DegenerateFit(m) => Error::DegenerateFit(format!("{m}; widen the range of L")),
        other => other,
    })?;
    let scale = -6.0 / (PI * v_f);
    Ok(CentralChargeEstimate {
        c: scale * fit.coef[1],
        stderr: scale.abs() * fit.stderr[1],
        fit_window: (pts[0].length, pts[pts.len() - 1].length),
        residuals: fit.residuals,
        bulk_fit: fit.coef[0],
        fermi_velocity: v_f,
        nuisance: if opts.nuisance { Some(fit.coef[2]) } else { None },
    })
}

//! Deep inelastic scattering observables from the chain's central charge.
//!
//! Lengths and times are in GeV^-1 (natural units); `gev_inv_to_fm` is the only
//! place femtometres appear.

use serde::Serialize;

use crate::{Error, Result};

/// `hbar c` in GeV fm.
pub const HBAR_C_GEV_FM: f64 = 0.1973269804;
/// Small-x gluon exponent quoted from experiment.
pub const EXPERIMENTAL_DELTA: f64 = 0.3;

pub fn gev_inv_to_fm(length: f64) -> f64 {
    length * HBAR_C_GEV_FM
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisKinematics {
    /// Target mass, GeV.
    pub m: f64,
    /// Bjorken x.
    pub x: f64,
    /// Momentum transfer, GeV.
    pub q: f64,
}

impl DisKinematics {
    pub fn new(m: f64, x: f64, q: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::domain(format!("target mass m = {m} must be positive")));
        }
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::domain(format!("Bjorken x = {x} must lie in (0, 1)")));
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::domain(format!("momentum transfer Q = {q} must be positive")));
        }
        Ok(Self { m, x, q })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeGeometry {
    /// Probed length `1/(m x)`.
    pub ell: f64,
    /// Tube radius `1/Q`.
    pub r: f64,
    /// Characteristic time `1/m`.
    pub tau: f64,
    /// Saturation time, equal to `ell`.
    pub t_c: f64,
}

impl ProbeGeometry {
    pub fn in_fm(&self) -> Self {
        Self { ell: gev_inv_to_fm(self.ell), r: gev_inv_to_fm(self.r), tau: gev_inv_to_fm(self.tau), t_c: gev_inv_to_fm(self.t_c) }
    }
}

pub fn probe_geometry(k: &DisKinematics) -> Result<ProbeGeometry> {
    let k = DisKinematics::new(k.m, k.x, k.q)?;
    let ell = 1.0 / (k.m * k.x);
    Ok(ProbeGeometry { ell, r: 1.0 / k.q, tau: 1.0 / k.m, t_c: ell })
}

fn check_x(x: f64) -> Result<()> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::domain(format!("Bjorken x = {x} must lie in (0, 1]")));
    }
    Ok(())
}

/// `S = (c/3) ln(1/x)`.
pub fn entropy_at_x(c: f64, x: f64) -> Result<f64> {
    check_x(x)?;
    Ok(c / 3.0 * (1.0 / x).ln())
}

/// `(c/3) ln(m t)` up to `t_c = 1/(m x)`, then the plateau `(c/3) ln(1/x)`.
pub fn entropy_vs_time(c: f64, m: f64, t: f64, x: f64) -> Result<f64> {
    check_x(x)?;
    if !(m > 0.0) {
        return Err(Error::domain(format!("target mass m = {m} must be positive")));
    }
    if !(t >= 1.0 / m) {
        return Err(Error::domain(format!("t = {t} precedes the quench time 1/m = {}", 1.0 / m)));
    }
    let t_c = 1.0 / (m * x);
    if t >= t_c {
        entropy_at_x(c, x)
    } else {
        Ok(c / 3.0 * (m * t).ln())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentComparison {
    pub central_charge: f64,
    pub delta: f64,
    pub experimental: f64,
    pub difference: f64,
    pub note: String,
}

/// `delta = c/3`, the exponent in `x G(x) ~ x^-delta`.
pub fn structure_function_exponent(c: f64) -> Result<ExponentComparison> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::domain(format!("central charge c = {c} must be positive")));
    }
    let delta = c / 3.0;
    let difference = delta - EXPERIMENTAL_DELTA;
    Ok(ExponentComparison {
        central_charge: c,
        delta,
        experimental: EXPERIMENTAL_DELTA,
        difference,
        note: format!("delta = {delta:.4} against the measured delta ~ {EXPERIMENTAL_DELTA} (difference {difference:+.4})"),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DisPrediction {
    pub kinematics: DisKinematics,
    pub geometry: ProbeGeometry,
    pub geometry_fm: ProbeGeometry,
    pub central_charge: f64,
    pub entropy: f64,
    pub exponent: ExponentComparison,
}

pub fn predict(k: &DisKinematics, c: f64) -> Result<DisPrediction> {
    let geometry = probe_geometry(k)?;
    Ok(DisPrediction {
        kinematics: *k,
        geometry,
        geometry_fm: geometry.in_fm(),
        central_charge: c,
        entropy: entropy_at_x(c, k.x)?,
        exponent: structure_function_exponent(c)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry() {
        let g = probe_geometry(&DisKinematics { m: 1.0, x: 0.1, q: 1.0 }).unwrap();
        assert!((g.ell - 10.0).abs() < 1e-12 && g.tau == 1.0 && g.t_c == g.ell && g.r == 1.0);
        let g = probe_geometry(&DisKinematics { m: 0.938, x: 0.01, q: 2.0 }).unwrap();
        assert!((g.ell - 106.6098).abs() < 1e-4);
        assert!((g.in_fm().ell - 21.037).abs() < 1e-3);
        let g = probe_geometry(&DisKinematics { m: 2.0, x: 1.0 - 1e-12, q: 1.0 }).unwrap();
        assert!((g.ell - g.tau).abs() < 1e-11);
        assert!(probe_geometry(&DisKinematics { m: 1.0, x: 1.5, q: 1.0 }).is_err());
        assert!(DisKinematics::new(-1.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn entropy_curves() {
        assert!((entropy_at_x(1.0, 0.01).unwrap() - 100f64.ln() / 3.0).abs() < 1e-15);
        assert_eq!(entropy_at_x(2.3, 1.0).unwrap(), 0.0);
        assert!((entropy_at_x(1.0, (-3f64).exp()).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(entropy_vs_time(1.0, 2.0, 0.5, 0.1).unwrap(), 0.0);
        assert!((entropy_vs_time(1.0, 1.0, std::f64::consts::E, 0.01).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let (m, x) = (0.938, 0.01);
        assert_eq!(entropy_vs_time(1.0, m, 1.0 / (m * x), x).unwrap(), entropy_at_x(1.0, x).unwrap());
        assert!(entropy_vs_time(1.0, 1.0, 0.5, 0.1).is_err());
        let mut prev = 0.0;
        for k in 0..200 {
            let s = entropy_vs_time(1.0, 1.0, 1.0 + 0.7 * k as f64, 0.01).unwrap();
            assert!(s >= prev);
            prev = s;
        }
    }

    #[test]
    fn exponent() {
        assert!((structure_function_exponent(1.0).unwrap().delta - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(structure_function_exponent(3.0).unwrap().delta, 1.0);
        assert!(structure_function_exponent(0.0).is_err());
        let p = predict(&DisKinematics::new(0.938, 0.01, 2.0).unwrap(), 1.0).unwrap();
        assert!((p.entropy - 1.5351).abs() < 1e-4);
    }
}

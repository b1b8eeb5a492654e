//! Run configuration: one TOML file with a section per subcommand.
//!
//! Unknown keys are rejected at parse time; `validate` then checks ranges and
//! reports the offending field as a dotted path such as `thermo.h`.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub bethe: Option<BetheConfig>,
    pub thermo: Option<ThermoConfig>,
    pub central_charge: Option<CentralChargeConfig>,
    pub quench: Option<QuenchConfig>,
    pub osee: Option<OseeConfig>,
    pub dis: Option<DisConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetheConfig {
    pub length: usize,
    pub roots: usize,
    /// Explicit quantum numbers; the ground state is used when absent.
    pub quantum_numbers: Option<Vec<f64>>,
    #[serde(default = "default_bethe_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_bethe_tol() -> f64 {
    1e-12
}

fn default_max_iter() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermoConfig {
    pub h: f64,
    /// Fermi point; found from `eps(q) = 0` when absent.
    pub q: Option<f64>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn default_resolution() -> usize {
    128
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CentralChargeConfig {
    pub h: f64,
    pub lengths: Vec<usize>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub nuisance: bool,
    pub min_length: Option<usize>,
    pub max_length: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    HeisenbergProxy,
    BosonSMinus1,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchConfig {
    #[serde(default = "default_model")]
    pub model: ModelKind,
    pub sites: usize,
    #[serde(default = "default_true")]
    pub periodic: bool,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    pub t_max: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Region A is sites `0..cut`; defaults to the junction.
    pub cut: Option<usize>,
    /// Charges of the two halves; default to half filling.
    pub left_charge: Option<usize>,
    pub right_charge: Option<usize>,
    pub window: Option<[f64; 2]>,
    #[serde(default = "default_saturation_eps")]
    pub saturation_eps: f64,
    /// Block lengths for a static scan of the periodic ground state.
    pub block_lengths: Option<Vec<usize>>,
}

fn default_model() -> ModelKind {
    ModelKind::HeisenbergProxy
}

fn default_true() -> bool {
    true
}

fn default_n_max() -> usize {
    crate::chain::DEFAULT_N_MAX
}

fn default_dt() -> f64 {
    0.1
}

fn default_saturation_eps() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// `1/2 - S^z` on one site: the projector on the lowered state.
    HalfMinusSz,
    Sz,
    Identity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OseeConfig {
    pub sites: usize,
    #[serde(default)]
    pub periodic: bool,
    #[serde(default = "default_operator")]
    pub operator: OperatorKind,
    /// Site the operator acts on; defaults to the middle.
    pub site: Option<usize>,
    pub cut: Option<usize>,
    pub t_max: f64,
    #[serde(default = "default_osee_dt")]
    pub dt: f64,
    pub window: Option<[f64; 2]>,
}

fn default_operator() -> OperatorKind {
    OperatorKind::HalfMinusSz
}

fn default_osee_dt() -> f64 {
    0.25
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisConfig {
    pub m: f64,
    pub x: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    /// Central charge; `pipeline` replaces it with the fitted value.
    #[serde(default = "default_c")]
    pub c: f64,
    /// Bjorken x values for the `S(x)` curve.
    pub x_grid: Option<Vec<f64>>,
    #[serde(default = "default_time_points")]
    pub time_points: usize,
}

fn default_c() -> f64 {
    1.0
}

fn default_time_points() -> usize {
    64
}

fn need<T>(v: &Option<T>, section: &str) -> Result<()> {
    if v.is_none() {
        return Err(Error::config(section, "section is required by this subcommand"));
    }
    Ok(())
}

fn positive(path: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::config(path, format!("must be positive and finite, got {v}")));
    }
    Ok(())
}

fn finite(path: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::config(path, format!("must be finite, got {v}")));
    }
    Ok(())
}

fn window(path: &str, w: &Option<[f64; 2]>) -> Result<()> {
    if let Some([a, b]) = *w {
        if !(a > 0.0 && b > a) {
            return Err(Error::config(path, format!("needs 0 < t_min < t_max, got [{a}, {b}]")));
        }
    }
    Ok(())
}

impl BetheConfig {
    pub fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return Err(Error::config("bethe.length", "must be at least 2"));
        }
        if self.roots + 1 > self.length && self.roots > 0 {
            return Err(Error::config("bethe.roots", format!("must be below the length {}", self.length)));
        }
        if let Some(q) = &self.quantum_numbers {
            if q.len() != self.roots {
                return Err(Error::config("bethe.quantum_numbers", format!("has {} entries, expected {}", q.len(), self.roots)));
            }
        }
        positive("bethe.tol", self.tol)?;
        if self.max_iter == 0 {
            return Err(Error::config("bethe.max_iter", "must be positive"));
        }
        Ok(())
    }
}

impl ThermoConfig {
    pub fn validate(&self) -> Result<()> {
        positive("thermo.h", self.h)?;
        if let Some(q) = self.q {
            positive("thermo.q", q)?;
        }
        if self.resolution < crate::thermo::MIN_RESOLUTION {
            return Err(Error::config("thermo.resolution", format!("must be at least {}", crate::thermo::MIN_RESOLUTION)));
        }
        Ok(())
    }
}

impl CentralChargeConfig {
    pub fn validate(&self) -> Result<()> {
        positive("central_charge.h", self.h)?;
        if self.lengths.len() < 4 {
            return Err(Error::config("central_charge.lengths", "needs at least four chain lengths"));
        }
        if self.lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("central_charge.lengths", "must be strictly increasing"));
        }
        if let Some((i, l)) = self.lengths.iter().enumerate().find(|(_, &l)| l < 2 || l % 2 == 1) {
            return Err(Error::config(format!("central_charge.lengths[{i}]"), format!("{l} must be even and at least 2")));
        }
        if self.resolution < crate::thermo::MIN_RESOLUTION {
            return Err(Error::config("central_charge.resolution", format!("must be at least {}", crate::thermo::MIN_RESOLUTION)));
        }
        Ok(())
    }
}

impl QuenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 {
            return Err(Error::config("quench.sites", "must be at least 2"));
        }
        if self.model == ModelKind::HeisenbergProxy && self.sites > crate::chain::MAX_PROXY_SITES {
            return Err(Error::config("quench.sites", format!("must be at most {}", crate::chain::MAX_PROXY_SITES)));
        }
        if self.model == ModelKind::BosonSMinus1 && self.n_max < 1 {
            return Err(Error::config("quench.n_max", "must be at least 1"));
        }
        positive("quench.t_max", self.t_max)?;
        positive("quench.dt", self.dt)?;
        if let Some(c) = self.cut {
            if c > self.sites {
                return Err(Error::config("quench.cut", format!("must not exceed sites = {}", self.sites)));
            }
        }
        window("quench.window", &self.window)?;
        positive("quench.saturation_eps", self.saturation_eps)?;
        if let Some(ls) = &self.block_lengths {
            if let Some((i, l)) = ls.iter().enumerate().find(|(_, &l)| l >= self.sites) {
                return Err(Error::config(format!("quench.block_lengths[{i}]"), format!("{l} must be below sites = {}", self.sites)));
            }
        }
        Ok(())
    }

    pub fn chain_model(&self) -> crate::chain::ChainModel {
        use crate::chain::ChainModel;
        match self.model {
            ModelKind::HeisenbergProxy => ChainModel::HeisenbergProxy { sites: self.sites, periodic: self.periodic },
            ModelKind::BosonSMinus1 => ChainModel::BosonSMinus1 { sites: self.sites, n_max: self.n_max, periodic: self.periodic },
        }
    }
}

impl OseeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=16).contains(&self.sites) {
            return Err(Error::config("osee.sites", "must lie in 2..=16 (operators are stored densely per sector)"));
        }
        if let Some(s) = self.site {
            if s >= self.sites {
                return Err(Error::config("osee.site", format!("must be below sites = {}", self.sites)));
            }
        }
        if let Some(c) = self.cut {
            if c > self.sites {
                return Err(Error::config("osee.cut", format!("must not exceed sites = {}", self.sites)));
            }
        }
        positive("osee.t_max", self.t_max)?;
        positive("osee.dt", self.dt)?;
        window("osee.window", &self.window)
    }
}

impl DisConfig {
    pub fn validate(&self) -> Result<()> {
        positive("dis.m", self.m)?;
        if !(self.x > 0.0 && self.x < 1.0) {
            return Err(Error::config("dis.x", format!("must lie in (0, 1), got {}", self.x)));
        }
        positive("dis.Q", self.q)?;
        finite("dis.c", self.c)?;
        positive("dis.c", self.c)?;
        if let Some(g) = &self.x_grid {
            if let Some((i, x)) = g.iter().enumerate().find(|(_, &x)| !(x > 0.0 && x <= 1.0)) {
                return Err(Error::config(format!("dis.x_grid[{i}]"), format!("{x} must lie in (0, 1]")));
            }
        }
        if self.time_points < 2 {
            return Err(Error::config("dis.time_points", "must be at least 2"));
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let span = e.span().map(|s| line_of(text, s.start)).map(|l| format!("line {l}")).unwrap_or_else(|| "document".into());
            Error::config(span, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot read config: {e}")))?;
        Self::parse(&text)
    }

    /// Checks that the sections `subcommand` needs are present and valid.
    pub fn validate_for(&self, subcommand: &str) -> Result<()> {
        match subcommand {
            "bethe" => {
                need(&self.bethe, "bethe")?;
                self.bethe.as_ref().unwrap().validate()
            }
            "thermo" => {
                need(&self.thermo, "thermo")?;
                self.thermo.as_ref().unwrap().validate()
            }
            "central-charge" => {
                need(&self.central_charge, "central_charge")?;
                self.central_charge.as_ref().unwrap().validate()
            }
            "quench" => {
                need(&self.quench, "quench")?;
                self.quench.as_ref().unwrap().validate()
            }
            "osee" => {
                need(&self.osee, "osee")?;
                self.osee.as_ref().unwrap().validate()
            }
            "dis" => {
                need(&self.dis, "dis")?;
                self.dis.as_ref().unwrap().validate()
            }
            "pipeline" => {
                need(&self.central_charge, "central_charge")?;
                need(&self.dis, "dis")?;
                self.central_charge.as_ref().unwrap().validate()?;
                self.dis.as_ref().unwrap().validate()
            }
            other => Err(Error::config("subcommand", format!("unknown subcommand `{other}`"))),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_defaults() {
        let cfg = RunConfig::parse("[thermo]\nh = 0.5\n\n[dis]\nm = 0.938\nx = 0.01\nQ = 2.0\n").unwrap();
        assert_eq!(cfg.thermo.as_ref().unwrap().resolution, 128);
        assert_eq!(cfg.dis.as_ref().unwrap().c, 1.0);
        cfg.validate_for("thermo").unwrap();
        cfg.validate_for("dis").unwrap();
        assert!(matches!(cfg.validate_for("bethe"), Err(Error::Config { path, .. }) if path == "bethe"));
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = RunConfig::parse("[thermo]\nh = 0.5\nresolutoin = 64\n").unwrap_err();
        match err {
            Error::Config { path, message } => {
                assert_eq!(path, "line 3");
                assert!(message.contains("resolutoin"), "{message}");
            }
            e => panic!("{e}"),
        }
        assert!(RunConfig::parse("[thermos]\nh = 1\n").is_err());
    }

    #[test]
    fn range_errors_name_the_field() {
        let cfg = RunConfig::parse("[central_charge]\nh = -0.5\nlengths = [4, 8, 16, 32]\n").unwrap();
        match cfg.validate_for("central-charge").unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "central_charge.h"),
            e => panic!("{e}"),
        }
        let cfg = RunConfig::parse("[central_charge]\nh = 0.5\nlengths = [4, 8, 15, 32]\n").unwrap();
        match cfg.validate_for("central-charge").unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "central_charge.lengths[2]"),
            e => panic!("{e}"),
        }
    }
}

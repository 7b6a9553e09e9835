//! Experiment configuration (TOML).
//!
//! ```toml
//! beta = 1.0
//! eps_list = [0.25, 0.125, 0.0625]
//! seed = 7
//!
//! [model]
//! d = 1
//! radial = [1.0, 0.5]        # h0 = |z|^2 + 0.5 |z|^4
//! # perturbation = [{ i = [1], j = [0], re = 0.1 }, { i = [0], j = [1], re = 0.1 }]
//!
//! [grid]                     # optional; default chosen from the growth bound
//! scheme = "uniform-tensor"
//! radius = 8.0
//! spacing = 0.08
//!
//! [tolerances]
//! identity = 1e-8
//! certification = 1e-8
//! check_cutoff = true
//! check_grid = false
//!
//! [recovery]                 # gamma-upper only
//! center = [[0.5, 0.25]]
//! variance = 0.1
//!
//! [lattice]                  # lattice-divergence only
//! delta = 1.0
//! m_list = [1, 2, 3]
//! sigma = 0.3
//!
//! [output]
//! dir = "out"
//! ```

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::Admissibility;
use crate::quadrature::Scheme;
use crate::quantize::{H0Block, PolySymbol, SymbolClassS, SymbolTerm};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub d: usize,
    /// Coefficients `λ_p` of `|z|^{2p}`, `p = 1, 2, ...`.
    pub radial: Vec<f64>,
    #[serde(default)]
    pub perturbation: Vec<SymbolTerm>,
}

impl ModelConfig {
    pub fn harmonic() -> Self {
        ModelConfig {
            d: 1,
            radial: vec![1.0],
            perturbation: vec![],
        }
    }

    pub fn to_symbol(&self) -> Result<SymbolClassS> {
        let blocks: Vec<H0Block> = self
            .radial
            .iter()
            .enumerate()
            .filter(|(_, l)| **l != 0.0)
            .map(|(k, &l)| H0Block::radial(k as u32 + 1, l))
            .collect();
        let v = if self.perturbation.is_empty() {
            PolySymbol::zero(self.d)
        } else {
            PolySymbol::try_from(self.perturbation.clone())?
        };
        SymbolClassS::new(self.d, blocks, v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_tol")]
    pub identity: f64,
    #[serde(default = "default_tol")]
    pub certification: f64,
    #[serde(default)]
    pub check_cutoff: bool,
    #[serde(default)]
    pub check_grid: bool,
}

fn default_tol() -> f64 {
    1e-8
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identity: default_tol(),
            certification: default_tol(),
            check_cutoff: false,
            check_grid: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveryConfig {
    /// Center as `[re, im]` pairs, one per mode.
    pub center: Vec<[f64; 2]>,
    pub variance: f64,
}

impl RecoveryConfig {
    pub fn center(&self) -> Vec<Complex64> {
        self.center.iter().map(|c| Complex64::new(c[0], c[1])).collect()
    }
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            center: vec![[0.5, 0.25]],
            variance: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub delta: f64,
    pub m_list: Vec<u32>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_policy")]
    pub admissibility: Admissibility,
}

fn default_sigma() -> f64 {
    0.3
}

fn default_policy() -> Admissibility {
    Admissibility::NearDependenceOnly
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig {
            delta: 1.0,
            m_list: vec![1, 2, 3],
            sigma: default_sigma(),
            admissibility: default_policy(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_dir() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub beta: f64,
    #[serde(default)]
    pub eps_list: Vec<f64>,
    #[serde(default)]
    pub grid: Option<Scheme>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub recovery: Option<RecoveryConfig>,
    #[serde(default)]
    pub lattice: Option<LatticeConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    20240607
}

/// `ε = 2^{-k}`, `k = 2..=8`.
pub fn default_eps_list() -> Vec<f64> {
    (2..=8).map(|k| 0.5f64.powi(k)).collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: ModelConfig::harmonic(),
            beta: 1.0,
            eps_list: default_eps_list(),
            grid: None,
            tolerances: Tolerances::default(),
            recovery: None,
            lattice: None,
            output: OutputConfig::default(),
            seed: default_seed(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if self.model.d == 0 {
            return bad("model.d must be at least 1".into());
        }
        if self.model.radial.is_empty() {
            return bad("model.radial needs at least one coefficient".into());
        }
        if self.eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return bad("eps_list entries must be positive".into());
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return bad("eps_list must be strictly decreasing".into());
        }
        let t = &self.tolerances;
        if !(t.identity > 0.0 && t.certification > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if let Some(r) = &self.recovery {
            if !(r.variance > 0.0) || r.center.len() != self.model.d {
                return bad("recovery needs a positive variance and one center per mode".into());
            }
        }
        if let Some(l) = &self.lattice {
            if !(l.delta >= 0.0) || l.m_list.is_empty() || !(l.sigma > 0.0) {
                return bad("lattice needs delta >= 0, sigma > 0 and a non-empty m_list".into());
            }
        }
        self.model
            .to_symbol()
            .map_err(|e| Error::Config(format!("model: {e}")))?;
        Ok(())
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn hash(&self) -> Result<String> {
        let canon = self.to_toml()?;
        Ok(Sha256::digest(canon.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.lattice = Some(LatticeConfig::default());
        cfg.recovery = Some(RecoveryConfig::default());
        cfg.model.perturbation = vec![SymbolTerm {
            i: vec![1],
            j: vec![0],
            re: 0.1,
            im: 0.0,
        }, SymbolTerm {
            i: vec![0],
            j: vec![1],
            re: 0.1,
            im: 0.0,
        }];
        let text = cfg.to_toml().unwrap();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash().unwrap(), back.hash().unwrap());
    }

    #[test]
    fn rejects_increasing_eps() {
        let text = "beta = 1.0\neps_list = [0.1, 0.2]\n[model]\nd = 1\nradial = [1.0]\n";
        assert!(ExperimentConfig::from_toml(text).unwrap_err().is_config());
    }

    #[test]
    fn parse_error_mentions_line() {
        let text = "beta = 1.0\n[model]\nd = \n";
        let msg = ExperimentConfig::from_toml(text).unwrap_err().to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }
}

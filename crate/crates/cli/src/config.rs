//! Run configuration: one JSON document, every section optional.

use std::path::{Path, PathBuf};

use multiwell::continuation::Direction;
use multiwell::dynamics::SplittingOrder;
use multiwell::stationary::{SignFilter, DEFAULT_SEED};
use multiwell::{Error, ModelParams, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub spectrum: SpectrumConfig,
    pub sweep: SweepConfig,
    pub branches: BranchesConfig,
    pub census: CensusConfig,
    pub bif_table: BifTableConfig,
    pub evolve: EvolveConfig,
    pub linear1d: Linear1dConfig,
    pub output_path: PathBuf,
    /// Seed of every random choice (currently the census multistart).
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            spectrum: SpectrumConfig::default(),
            sweep: SweepConfig::default(),
            branches: BranchesConfig::default(),
            census: CensusConfig::default(),
            bif_table: BifTableConfig::default(),
            evolve: EvolveConfig::default(),
            linear1d: Linear1dConfig::default(),
            output_path: PathBuf::from("out"),
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub n: usize,
    pub sigma: f64,
    pub lambda_d: f64,
    pub beta: f64,
    pub eta: f64,
    pub hbar: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { n: 4, sigma: 1.0, lambda_d: 0.0, beta: 1.0, eta: -12.0, hbar: 1.0 }
    }
}

impl ModelConfig {
    pub fn params(&self) -> Result<ModelParams<f64>> {
        ModelParams::new(self.n, self.sigma, self.lambda_d, self.beta, self.eta, self.hbar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingKind {
    Line,
    Graph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub coupling: CouplingKind,
    /// 0/1 adjacency for graph coupling; defaults to the four-well square.
    pub adjacency: Option<Vec<Vec<u8>>>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { coupling: CouplingKind::Line, adjacency: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub sigmas: Vec<f64>,
    /// `q` samples on each side of 1/4.
    pub points: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { sigmas: vec![1.0, 2.0, 3.0], points: 400 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BranchesConfig {
    pub eta_min: f64,
    pub eta_max: f64,
    /// Linear modes (1-based) continued from `eta = 0`; empty means all.
    pub modes: Vec<usize>,
    /// Also continue the asymmetric branch born at each pitchfork.
    pub follow_pitchforks: bool,
    pub max_eta_step: f64,
}

impl Default for BranchesConfig {
    fn default() -> Self {
        Self { eta_min: -20.0, eta_max: 20.0, modes: vec![], follow_pitchforks: true, max_eta_step: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CensusConfig {
    pub sign_filter: SignFilter,
    pub random_starts: usize,
    pub linear_continuation: bool,
    pub anticontinuum: bool,
    pub symmetric_family: bool,
}

impl Default for CensusConfig {
    fn default() -> Self {
        Self {
            sign_filter: SignFilter::AllPositive,
            random_starts: 2000,
            linear_continuation: true,
            anticontinuum: true,
            symmetric_family: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BifTableConfig {
    pub n_list: Vec<usize>,
}

impl Default for BifTableConfig {
    fn default() -> Self {
        Self { n_list: vec![2, 4, 6, 8] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum InitialState {
    /// Linear mode `j` (1-based).
    Mode(usize),
    /// All amplitude in one well (1-based).
    Site(usize),
    /// Explicit `[re, im]` pairs; normalized before use.
    Amplitudes(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    pub initial: InitialState,
    pub t_end: f64,
    pub dt: f64,
    pub stride: usize,
    pub order: SplittingOrder,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self { initial: InitialState::Site(1), t_end: 100.0, dt: 0.01, stride: 10, order: SplittingOrder::Sixth }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Linear1dConfig {
    pub depth: f64,
    pub radius: f64,
    pub spacing: f64,
    pub hbar: f64,
    pub n_points: usize,
    pub wells: Vec<usize>,
}

impl Default for Linear1dConfig {
    fn default() -> Self {
        Self { depth: 5.0, radius: 1.0, spacing: 2.5, hbar: 0.3, n_points: 4000, wells: vec![2, 3, 4] }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parameter(format!("config {}: {e}", path.display())))
    }

    /// SHA-256 of the resolved configuration serialized as compact JSON.
    /// The output location is left out so relocated runs hash the same.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output_path = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn branch_direction(&self) -> Direction {
        Direction::Both
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"model": {"n": 4, "bogus": 1}}"#);
        assert!(err.is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"extra": 1}"#).is_err());
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"model": {"n": 6}, "census": {"sign_filter": "any"}}"#).unwrap();
        assert_eq!(c.model.n, 6);
        assert_eq!(c.model.eta, -12.0);
        assert_eq!(c.census.sign_filter, SignFilter::Any);
        let e: RunConfig = serde_json::from_str(r#"{"evolve": {"initial": {"mode": 2}, "order": "second"}}"#).unwrap();
        assert_eq!(e.evolve.initial, InitialState::Mode(2));
        assert_eq!(e.evolve.order, SplittingOrder::Second);
    }

    #[test]
    fn digest_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.seed += 1;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
        let moved = RunConfig { output_path: PathBuf::from("elsewhere"), ..a.clone() };
        assert_eq!(a.digest(), moved.digest());
    }
}

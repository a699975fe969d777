//! Scenario files and the parameters of each command.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use wavelab_core::euler::{FieldKind, WaveKind};
use wavelab_core::interaction::{Thresholds, WaveScenario};
use wavelab_core::liealg::{FitOptions, GradedElement};
use wavelab_core::solver::{Convention, Profile, Shape};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Analyze,
    Simulate,
    Index,
    Algebra,
    Geometry,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Analyze => "analyze",
            Self::Simulate => "simulate",
            Self::Index => "index",
            Self::Algebra => "algebra",
            Self::Geometry => "geometry",
        }
    }
}

/// A scenario file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub command: Command,
    /// Command-specific object; validated when the command runs.
    #[serde(default)]
    pub parameters: serde_json::Value,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("wavelab-out")
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })?;
        Self::from_json(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))
    }

    /// Parses `parameters` strictly; a missing object means all defaults.
    pub fn parameters<P: DeserializeOwned>(&self) -> Result<P> {
        let value = match &self.parameters {
            serde_json::Value::Null => serde_json::Value::Object(Default::default()),
            v => v.clone(),
        };
        serde_json::from_value(value).map_err(|e| CliError::Schema(format!("parameters of `{}`: {e}", self.name)))
    }
}

// ---------------------------------------------------------------------------
// Presets

pub const PRESETS: [(&str, &str); 5] = [
    ("elastic-spsm", include_str!("../presets/elastic-spsm.json")),
    ("nonelastic-spe", include_str!("../presets/nonelastic-spe.json")),
    ("reduced-kappa3", include_str!("../presets/reduced-kappa3.json")),
    ("algebra-closure", include_str!("../presets/algebra-closure.json")),
    ("phi-geometry", include_str!("../presets/phi-geometry.json")),
];

pub fn preset(name: &str) -> Result<Scenario> {
    let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| CliError::UnknownPreset(name.into()))?;
    Scenario::from_json(text)
}

// ---------------------------------------------------------------------------
// Parameters

fn kappa_default() -> f64 {
    1.4
}
fn kappa3() -> f64 {
    3.0
}
fn yes() -> bool {
    true
}
fn one() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeParams {
    #[serde(default = "kappa_default")]
    pub kappa: f64,
    /// Families tested for quasi-rectifiability.
    #[serde(default = "default_families")]
    pub families: Vec<Vec<FieldKind>>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Values of `κ` at which the commutator identities are checked.
    #[serde(default = "default_kappas")]
    pub commutator_kappas: Vec<f64>,
    #[serde(default = "default_commutator_samples")]
    pub commutator_samples: usize,
    /// Check the sound-speed rescaling of `{γ+, γ−}`.
    #[serde(default = "yes")]
    pub rescaling: bool,
}

fn default_families() -> Vec<Vec<FieldKind>> {
    use FieldKind::*;
    vec![
        vec![GammaPlus, GammaMinus],
        vec![GammaPlus, GammaZero],
        vec![GammaMinus, GammaZero],
        vec![GammaPlus, GammaZero, GammaMinus],
        vec![W1, W2, GammaZero],
    ]
}
fn default_samples() -> usize {
    200
}
fn default_kappas() -> Vec<f64> {
    vec![1.4, 2.0, 3.0]
}
fn default_commutator_samples() -> usize {
    300
}

/// What `simulate` integrates.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SimulateParams {
    /// The full system from a wave scenario.
    Euler {
        scenario: WaveScenario<f64>,
        /// Record every `stride`-th step.
        #[serde(default = "one")]
        stride: usize,
    },
    /// The reduced `κ = 3` system next to the full one on refined grids.
    ReducedKappa3(ReducedParams),
    /// Residuals of the closed-form solutions.
    ExactResiduals {
        #[serde(default)]
        convention: Convention,
        #[serde(default = "default_points")]
        points_per_axis: usize,
    },
    /// Self-convergence of a smooth simple wave.
    Convergence(ConvergenceParams),
}

fn default_points() -> usize {
    8
}

/// A single simple wave on a constant background.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothWave {
    #[serde(default = "default_wave")]
    pub wave: WaveKind,
    #[serde(default = "default_background")]
    pub background: [f64; 3],
    #[serde(default = "default_profile")]
    pub profile: Profile<f64>,
    #[serde(default)]
    pub convention: Convention,
}

impl Default for SmoothWave {
    fn default() -> Self {
        Self { wave: default_wave(), background: default_background(), profile: default_profile(), convention: Convention::Negated }
    }
}

fn default_wave() -> WaveKind {
    WaveKind::SPlus
}
fn default_background() -> [f64; 3] {
    [1.0, 1.0, 0.0]
}
fn default_profile() -> Profile<f64> {
    Profile::new(Shape::Cosine, 0.5, 0.25, 0.05)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedParams {
    #[serde(default = "kappa3")]
    pub kappa: f64,
    #[serde(default)]
    pub initial: SmoothWave,
    #[serde(default = "default_refinements")]
    pub nx: Vec<usize>,
    #[serde(default = "default_reduced_t_end")]
    pub t_end: f64,
    /// Random states at which the reduced matrix is checked.
    #[serde(default = "default_matrix_samples")]
    pub matrix_samples: usize,
}

fn default_refinements() -> Vec<usize> {
    vec![101, 201, 401]
}
fn default_reduced_t_end() -> f64 {
    0.1
}
fn default_matrix_samples() -> usize {
    100
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceParams {
    #[serde(default = "kappa_default")]
    pub kappa: f64,
    #[serde(default)]
    pub initial: SmoothWave,
    /// Coarsest grid; the study adds `2nx − 1` and `4nx − 3`.
    #[serde(default = "default_convergence_nx")]
    pub nx: usize,
    #[serde(default = "default_convergence_t_end")]
    pub t_end: f64,
}

fn default_convergence_nx() -> usize {
    101
}
fn default_convergence_t_end() -> f64 {
    0.15
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexParams {
    pub scenario: WaveScenario<f64>,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// Further profile shapes with which the verdict is recomputed.
    #[serde(default)]
    pub shapes: Vec<Shape>,
    /// Frames between rows of the contribution table.
    #[serde(default = "default_csv_stride")]
    pub csv_stride: usize,
}

fn default_csv_stride() -> usize {
    5
}

/// Expected quotient invariants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedQuotient {
    pub derived_dimension: usize,
    pub center_dimension: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraParams {
    #[serde(default = "kappa_default")]
    pub kappa: f64,
    #[serde(default = "default_max_grade")]
    pub max_grade: usize,
    #[serde(default = "wavelab_core::liealg::characteristic_seed")]
    pub seed: Vec<GradedElement>,
    #[serde(default)]
    pub fit: FitOptions,
    /// Candidate ideal; defaults to the elements added by the closure.
    #[serde(default)]
    pub ideal: Option<Vec<GradedElement>>,
    #[serde(default = "default_expected_quotient")]
    pub expected_quotient: Option<ExpectedQuotient>,
    /// Also close the seed extended by `ρ⁻¹w1` and test its `w1` ideal.
    #[serde(default = "yes")]
    pub w1_variant: bool,
    /// Bases whose graded families are scanned for the Witt pattern.
    #[serde(default = "default_witt_bases")]
    pub witt_bases: Vec<FieldKind>,
}

fn default_max_grade() -> usize {
    wavelab_core::liealg::DEFAULT_MAX_GRADE
}
fn default_expected_quotient() -> Option<ExpectedQuotient> {
    Some(ExpectedQuotient { derived_dimension: 1, center_dimension: 1 })
}
fn default_witt_bases() -> Vec<FieldKind> {
    vec![FieldKind::GammaPlus, FieldKind::W2]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryParams {
    #[serde(default = "default_leaves")]
    pub leaves: Vec<f64>,
    /// Points per parameter direction on each leaf.
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    /// Number of random leaves for the disjointness check.
    #[serde(default = "default_random_leaves")]
    pub random_leaves: usize,
    #[serde(default = "default_t3_range")]
    pub t3_range: [f64; 2],
    #[serde(default = "default_foliation_samples")]
    pub foliation_samples: usize,
}

fn default_leaves() -> Vec<f64> {
    vec![-1.0, -0.5, 0.0, 0.5, 1.0]
}
fn default_grid() -> usize {
    50
}
fn default_fd_step() -> f64 {
    1e-5
}
fn default_random_leaves() -> usize {
    10
}
fn default_t3_range() -> [f64; 2] {
    [-3.0, 3.0]
}
fn default_foliation_samples() -> usize {
    40
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_with_their_parameters() {
        for (name, _) in PRESETS {
            let s = preset(name).unwrap();
            assert_eq!(s.name, name);
            match s.command {
                Command::Analyze => drop(s.parameters::<AnalyzeParams>().unwrap()),
                Command::Simulate => drop(s.parameters::<SimulateParams>().unwrap()),
                Command::Index => drop(s.parameters::<IndexParams>().unwrap()),
                Command::Algebra => drop(s.parameters::<AlgebraParams>().unwrap()),
                Command::Geometry => drop(s.parameters::<GeometryParams>().unwrap()),
            }
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Scenario::from_json(r#"{"name": "x", "command": "geometry", "colour": 1}"#).is_err());
        let s = Scenario::from_json(r#"{"name": "x", "command": "geometry", "parameters": {"grid": 4, "leafs": []}}"#).unwrap();
        assert!(s.parameters::<GeometryParams>().is_err());
        let s = Scenario::from_json(r#"{"name": "x", "command": "simulate", "parameters": {"system": "exact-residuals", "extra": 0}}"#)
            .unwrap();
        assert!(s.parameters::<SimulateParams>().is_err());
        let s =
            Scenario::from_json(r#"{"name": "x", "command": "simulate", "parameters": {"system": "reduced-kappa3", "nxx": [3]}}"#).unwrap();
        assert!(s.parameters::<SimulateParams>().is_err());
    }

    #[test]
    fn missing_parameters_mean_defaults() {
        let s = Scenario::from_json(r#"{"name": "x", "command": "algebra"}"#).unwrap();
        let p: AlgebraParams = s.parameters().unwrap();
        assert_eq!((p.kappa, p.max_grade, p.seed.len()), (1.4, 6, 3));
        assert_eq!(s.output_dir, PathBuf::from("wavelab-out"));
    }
}

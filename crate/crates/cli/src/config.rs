use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use driftlab::experiments::WalkConfig;
use driftlab::models::{FlatTorusPoint, FrickePoint, FrickeTraces, Model, ModelKind, Point, SearchConfig};
use driftlab::walk::{Measure, Orientation};
use driftlab::GroupElement;

/// Either `"flat"` / `"fricke"` or an object that also fixes the base point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Name(ModelKind),
    Full {
        kind: ModelKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau: Option<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        traces: Option<[f64; 3]>,
    },
}

impl ModelSpec {
    pub fn build(&self) -> anyhow::Result<Model> {
        Ok(match self {
            ModelSpec::Name(ModelKind::Flat) => Model::flat(),
            ModelSpec::Name(ModelKind::Fricke) => Model::fricke(),
            ModelSpec::Full { kind: ModelKind::Flat, tau, traces } => {
                anyhow::ensure!(traces.is_none(), "traces given for the flat model");
                let [re, im] = tau.unwrap_or([0.0, 1.0]);
                Model::with_base(Point::Flat(FlatTorusPoint::at(Complex64::new(re, im))?))
            }
            ModelSpec::Full { kind: ModelKind::Fricke, tau, traces } => {
                anyhow::ensure!(tau.is_none(), "tau given for the Fricke model");
                let [x, y, z] = traces.unwrap_or([3.0, 3.0, 3.0]);
                Model::with_base(Point::Fricke(FrickePoint::at(FrickeTraces::new(x, y, z)?)))
            }
        })
    }

    /// The explicit form, with the default base point filled in.
    pub fn resolved(&self) -> ModelSpec {
        match self {
            ModelSpec::Name(ModelKind::Flat) => ModelSpec::Full { kind: ModelKind::Flat, tau: Some([0.0, 1.0]), traces: None },
            ModelSpec::Name(ModelKind::Fricke) => {
                ModelSpec::Full { kind: ModelKind::Fricke, tau: None, traces: Some([3.0, 3.0, 3.0]) }
            }
            ModelSpec::Full { kind: ModelKind::Flat, tau, .. } => {
                ModelSpec::Full { kind: ModelKind::Flat, tau: Some(tau.unwrap_or([0.0, 1.0])), traces: None }
            }
            ModelSpec::Full { kind: ModelKind::Fricke, traces, .. } => {
                ModelSpec::Full { kind: ModelKind::Fricke, tau: None, traces: Some(traces.unwrap_or([3.0, 3.0, 3.0])) }
            }
        }
    }
}

pub trait Resolve {
    fn workers(&mut self) -> &mut Option<usize>;

    fn resolve_model(&mut self) {}
}

macro_rules! resolve {
    ($($t:ty),*) => {$(
        impl Resolve for $t {
            fn workers(&mut self) -> &mut Option<usize> {
                &mut self.workers
            }
        }
    )*};
    ($($t:ty),* ; model) => {$(
        impl Resolve for $t {
            fn workers(&mut self) -> &mut Option<usize> {
                &mut self.workers
            }

            fn resolve_model(&mut self) {
                self.model = self.model.resolved();
            }
        }
    )*};
}

fn default_boundary_steps() -> usize {
    64
}

fn default_delta() -> f64 {
    0.1
}

fn default_dihedral_grid() -> Vec<u32> {
    (2..=64).collect()
}

fn default_k_max() -> u32 {
    4
}

fn default_radius() -> f64 {
    0.5
}

fn default_radii() -> Vec<f64> {
    vec![0.25, 0.5, 1.0, 2.0]
}

fn default_epsilon() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftConfig {
    pub model: ModelSpec,
    pub measure: Measure,
    pub steps: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub orientation: Orientation,
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusemannConfig {
    pub model: ModelSpec,
    pub measure: Measure,
    pub boundary_samples: usize,
    #[serde(default = "default_boundary_steps")]
    pub boundary_steps: usize,
    pub seed: u64,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub model: ModelSpec,
    pub measure: Measure,
    pub steps: usize,
    pub pairs: usize,
    pub seed: u64,
    #[serde(default = "default_boundary_steps")]
    pub boundary_steps: usize,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuityConfig {
    pub model: ModelSpec,
    /// μ_t = t·a + (1 − t)·b
    pub a: Measure,
    pub b: Measure,
    pub params: Vec<f64>,
    pub walk: WalkConfig,
    #[serde(default)]
    pub lipschitz: Option<f64>,
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NsConfig {
    pub model: ModelSpec,
    pub g: GroupElement,
    pub h: GroupElement,
    pub grid: Vec<u32>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub walk: WalkConfig,
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeroDriftConfig {
    pub model: ModelSpec,
    pub a: GroupElement,
    pub g: GroupElement,
    pub grid: Vec<u32>,
    pub walk: WalkConfig,
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DihedralConfig {
    #[serde(default = "default_dihedral_grid")]
    pub grid: Vec<u32>,
    pub steps: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EqualityConfig {
    pub measure: Measure,
    pub walk: WalkConfig,
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyConfig {
    pub measure: Measure,
    pub n_max: usize,
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropySweepConfig {
    pub a: Measure,
    pub b: Measure,
    pub params: Vec<f64>,
    pub n_max: usize,
    #[serde(default)]
    pub lipschitz: Option<f64>,
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShadowsConfig {
    pub measure: Measure,
    pub seed: u64,
    #[serde(default = "default_k_max")]
    pub k_max: u32,
    #[serde(default = "default_radius")]
    pub radius: f64,
    pub directions: usize,
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    pub centres: usize,
    pub walk_length: usize,
    pub boundary_samples: usize,
    #[serde(default = "default_boundary_steps")]
    pub boundary_steps: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub workers: Option<usize>,
}

resolve!(DihedralConfig, EqualityConfig, EntropyConfig, EntropySweepConfig, ShadowsConfig);
resolve!(DriftConfig, BusemannConfig, CompareConfig, ContinuityConfig, NsConfig, ZeroDriftConfig; model);

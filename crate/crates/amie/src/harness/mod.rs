//! Seeded, resumable experiment pipelines.
//!
//! Every replicate draws its world from `derive(seed, [REPLICATE, nodes,
//! density bits, replicate])`, so the same replicate index pairs worlds
//! across latent counts and across model kinds. Results are sorted before
//! they are written, which keeps output bytes independent of scheduling.

pub mod figures;
pub mod inducing;
pub mod output;
pub mod semi;
pub mod synthetic;
pub mod verify;

use amie_core::explain::{Threshold, DEFAULT_ALPHA};
use amie_core::learn::{ForestParams, LogRegParams, ModelKind};
use amie_core::seed::{derive, stream};
use amie_core::stats::pairwise_sum;
use amie_core::synth::{GenConfig, LatentMode};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

/// Bumped whenever a result file layout changes.
pub const RESULT_SCHEMA_VERSION: u32 = 1;

/// Tolerance for recomputed aggregates on load.
pub const AGGREGATE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    NoLatent,
    ConnectedLatent,
    StandaloneLatent,
    InducingPathCount,
    SemiSynthetic,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::NoLatent => "no-latent",
            Self::ConnectedLatent => "connected-latent",
            Self::StandaloneLatent => "standalone",
            Self::InducingPathCount => "inducing-count",
            Self::SemiSynthetic => "semisynthetic",
        }
    }

    pub fn latent_mode(self) -> LatentMode {
        match self {
            Self::NoLatent | Self::SemiSynthetic => LatentMode::None,
            Self::ConnectedLatent | Self::InducingPathCount => LatentMode::ConnectedOnly,
            Self::StandaloneLatent => LatentMode::StandaloneDc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub nodes: usize,
    pub density: f64,
    pub latents: usize,
}

impl Cell {
    fn key(&self) -> (usize, u64, usize) {
        (self.nodes, self.density.to_bits(), self.latents)
    }
}

/// Grid experiment over random networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub nodes: Vec<usize>,
    pub densities: Vec<f64>,
    pub latents: Vec<usize>,
    pub replicates: usize,
    pub samples: usize,
    pub models: Vec<ModelKind>,
    /// Absolute non-zero cut-off for every model; `None` uses each model's default.
    pub epsilon: Option<f64>,
    pub alpha: f64,
    pub train_fraction: f64,
    pub seed: u64,
    pub cpt_margin: f64,
    pub min_effect: f64,
    pub logreg: LogRegParams,
    /// `seed` is ignored; each replicate derives its own.
    pub forest: ForestParams,
}

impl ExperimentSpec {
    /// Minutes-scale grid.
    pub fn desk(kind: ExperimentKind) -> Self {
        let base = GenConfig::default();
        let mut spec = Self {
            kind,
            nodes: vec![40],
            densities: vec![2.0],
            latents: vec![0],
            replicates: 10,
            samples: 10_000,
            models: vec![ModelKind::LogReg, ModelKind::RandomForest],
            epsilon: None,
            alpha: DEFAULT_ALPHA,
            train_fraction: 0.7,
            seed: 0,
            cpt_margin: base.cpt_margin,
            min_effect: base.min_effect,
            logreg: LogRegParams::default(),
            forest: ForestParams::default(),
        };
        match kind {
            ExperimentKind::NoLatent | ExperimentKind::SemiSynthetic => {}
            ExperimentKind::ConnectedLatent => {
                spec.latents = vec![2, 4, 6];
                spec.models.push(ModelKind::Oracle);
            }
            ExperimentKind::StandaloneLatent => {
                spec.densities = vec![4.0];
                spec.latents = vec![2, 4, 6];
            }
            ExperimentKind::InducingPathCount => {
                spec.nodes = vec![40, 60, 80];
                spec.densities = vec![2.0, 4.0, 6.0];
                spec.latents = vec![0, 2, 4, 6];
                spec.replicates = 100;
                spec.models = Vec::new();
            }
        }
        spec
    }

    /// Full-scale grid sizes.
    pub fn full(kind: ExperimentKind) -> Self {
        let mut spec = Self::desk(kind);
        match kind {
            ExperimentKind::NoLatent => {
                spec.nodes = vec![40, 60, 80];
                spec.densities = vec![2.0, 4.0, 6.0];
                spec.replicates = 30;
            }
            ExperimentKind::ConnectedLatent => {
                spec.nodes = vec![40, 60, 80];
                spec.densities = vec![2.0, 4.0, 6.0];
                spec.replicates = 100;
            }
            ExperimentKind::StandaloneLatent => {
                spec.nodes = vec![40, 60, 80];
                spec.replicates = 100;
            }
            ExperimentKind::InducingPathCount | ExperimentKind::SemiSynthetic => {}
        }
        spec
    }

    pub fn validate(&self) -> AppResult<()> {
        let usage = |m: String| Err(AppError::Usage(m));
        if self.kind == ExperimentKind::SemiSynthetic {
            return usage("semi-synthetic runs take a network spec, not a grid".into());
        }
        if self.nodes.is_empty() || self.densities.is_empty() || self.latents.is_empty() {
            return usage("node, density and latent grids must be non-empty".into());
        }
        if self.replicates == 0 {
            return usage("replicates must be at least 1".into());
        }
        if self.kind == ExperimentKind::NoLatent && self.latents.iter().any(|&l| l != 0) {
            return usage("no-latent runs take latents = 0".into());
        }
        if self.kind != ExperimentKind::InducingPathCount {
            if self.models.is_empty() {
                return usage("at least one model is required".into());
            }
            if self.samples < 10 {
                return usage(format!("{} samples are too few to split", self.samples));
            }
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return usage(format!("train fraction {} outside (0, 1)", self.train_fraction));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return usage(format!("alpha {} outside (0, 1)", self.alpha));
        }
        if let Some(e) = self.epsilon {
            if !(e.is_finite() && e >= 0.0) {
                return usage(format!("epsilon {e} must be non-negative"));
            }
        }
        for cell in self.cells() {
            self.gen_config(cell, 0).validate().map_err(|e| AppError::Usage(e.to_string()))?;
        }
        Ok(())
    }

    /// Grid cells in nodes, density, latents order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &nodes in &self.nodes {
            for &density in &self.densities {
                for &latents in &self.latents {
                    out.push(Cell { nodes, density, latents });
                }
            }
        }
        out
    }

    pub fn threshold(&self, kind: ModelKind) -> Threshold {
        self.epsilon.map_or_else(|| Threshold::default_for(kind), Threshold::Absolute)
    }

    /// World seed of a replicate; independent of the latent count.
    pub fn world_seed(&self, cell: Cell, replicate: usize) -> u64 {
        derive(self.seed, &[stream::REPLICATE, cell.nodes as u64, cell.density.to_bits(), replicate as u64])
    }

    pub fn gen_config(&self, cell: Cell, replicate: usize) -> GenConfig {
        GenConfig {
            total_nodes: cell.nodes,
            edge_ratio: cell.density,
            latent_count: cell.latents,
            latent_mode: self.kind.latent_mode(),
            cpt_margin: self.cpt_margin,
            min_effect: self.min_effect,
            seed: self.world_seed(cell, replicate),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    /// Parameters not captured by the spec itself.
    pub notes: Vec<String>,
}

impl Provenance {
    pub fn new(seed: u64, notes: Vec<String>) -> Self {
        Self { tool: env!("CARGO_PKG_NAME").into(), version: env!("CARGO_PKG_VERSION").into(), seed, notes }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub count: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = pairwise_sum(values) / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
            (pairwise_sum(&sq) / (n - 1) as f64).sqrt()
        };
        Some(Self { mean, std, count: n })
    }
}

/// Structural equality of two JSON values with numbers compared to `tol`.
pub(crate) fn json_close(a: &serde_json::Value, b: &serde_json::Value, tol: f64) -> bool {
    use serde_json::Value as V;
    match (a, b) {
        (V::Number(x), V::Number(y)) => match (x.as_f64(), y.as_f64()) {
            (Some(x), Some(y)) => x == y || (x - y).abs() <= tol,
            _ => x == y,
        },
        (V::Array(x), V::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| json_close(p, q, tol)),
        (V::Object(x), V::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| json_close(v, w, tol)))
        }
        _ => a == b,
    }
}

pub(crate) fn check_aggregates<T: Serialize>(stored: &T, recomputed: &T) -> AppResult<()> {
    let a = serde_json::to_value(stored).map_err(|e| AppError::Invariant(e.to_string()))?;
    let b = serde_json::to_value(recomputed).map_err(|e| AppError::Invariant(e.to_string()))?;
    if json_close(&a, &b, AGGREGATE_TOLERANCE) {
        Ok(())
    } else {
        Err(AppError::Invariant("stored cell statistics differ from the per-replicate rows".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stat_of_single_value_has_zero_spread() {
        let s = Stat::of(&[0.75]).unwrap();
        assert_eq!((s.mean, s.std, s.count), (0.75, 0.0, 1));
        assert!(Stat::of(&[]).is_none());
        let s = Stat::of(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.std), (2.0, 1.0));
    }

    #[test]
    fn world_seed_ignores_latents() {
        let spec = ExperimentSpec::desk(ExperimentKind::ConnectedLatent);
        let a = Cell { nodes: 40, density: 2.0, latents: 2 };
        let b = Cell { latents: 6, ..a };
        assert_eq!(spec.world_seed(a, 3), spec.world_seed(b, 3));
        assert_ne!(spec.world_seed(a, 3), spec.world_seed(a, 4));
    }

    #[test]
    fn desk_specs_validate() {
        for kind in [
            ExperimentKind::NoLatent,
            ExperimentKind::ConnectedLatent,
            ExperimentKind::StandaloneLatent,
            ExperimentKind::InducingPathCount,
        ] {
            ExperimentSpec::desk(kind).validate().unwrap();
            ExperimentSpec::full(kind).validate().unwrap();
        }
        let mut bad = ExperimentSpec::desk(ExperimentKind::NoLatent);
        bad.replicates = 0;
        assert!(matches!(bad.validate(), Err(AppError::Usage(_))));
    }

    #[test]
    fn json_close_tolerates_rounding() {
        let a = serde_json::json!({"x": [1.0, 2.0], "y": "s"});
        let b = serde_json::json!({"x": [1.0, 2.0 + 1e-14], "y": "s"});
        assert!(json_close(&a, &b, 1e-12));
        assert!(!json_close(&a, &serde_json::json!({"x": [1.0, 2.1], "y": "s"}), 1e-12));
    }
}

//! How often random masked DAGs contain an inducing path from a
//! non-causal feature to the outcome.

use amie_core::graph::{classify_false_positive, classify_roles, has_inducing_path, RoleConfig, RoleKind};
use amie_core::graph::{CausalDag, FalsePositiveCase};
use amie_core::synth::{generate_dag, mask_latents};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_aggregates, Cell, ExperimentKind, ExperimentSpec, Provenance, RESULT_SCHEMA_VERSION};
use crate::error::{AppError, AppResult, CoreContext};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducingRow {
    pub nodes: usize,
    pub density: f64,
    pub latents: usize,
    pub replicate: usize,
    pub world_seed: u64,
    /// Role-`Other` features with a strict inducing path.
    pub strict_features: usize,
    /// Role-`Other` features with only a relaxed inducing path.
    pub relaxed_features: usize,
    /// Features whose first applicable false-positive case is case 3.
    pub case3_features: usize,
}

impl InducingRow {
    pub fn has_path(&self) -> bool {
        self.strict_features + self.relaxed_features > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducingCell {
    pub nodes: usize,
    pub density: f64,
    pub latents: usize,
    pub replicates: usize,
    /// DAGs with at least one strict or relaxed inducing path.
    pub dags_with_path: usize,
    pub dags_with_strict_path: usize,
    /// DAGs where some inducing-path feature is not already a case-1 or
    /// case-2 false positive.
    pub dags_with_case3: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducingResult {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    pub provenance: Provenance,
    pub spec: ExperimentSpec,
    pub cells: Vec<InducingCell>,
    pub rows: Vec<InducingRow>,
}

impl InducingResult {
    pub fn verify(&self) -> AppResult<()> {
        check_aggregates(&self.cells, &summarize(&self.spec, &self.rows))
    }

    pub fn cell(&self, nodes: usize, density: f64, latents: usize) -> Option<&InducingCell> {
        self.cells.iter().find(|c| c.nodes == nodes && c.density == density && c.latents == latents)
    }
}

/// Per-feature inducing-path tallies of one masked DAG.
pub fn scan_dag(dag: &CausalDag) -> amie_core::Result<(usize, usize, usize)> {
    let roles = classify_roles(dag, RoleConfig::default());
    let (mut strict, mut relaxed, mut case3) = (0, 0, 0);
    for x in dag.feature_nodes() {
        if roles.kind(x) != Some(RoleKind::Other) {
            continue;
        }
        if has_inducing_path(dag, x, false)?.is_some() {
            strict += 1;
        } else if has_inducing_path(dag, x, true)?.is_some() {
            relaxed += 1;
        } else {
            continue;
        }
        if matches!(classify_false_positive(dag, &roles, x)?, FalsePositiveCase::InducingPath { .. }) {
            case3 += 1;
        }
    }
    Ok((strict, relaxed, case3))
}

fn summarize(spec: &ExperimentSpec, rows: &[InducingRow]) -> Vec<InducingCell> {
    spec.cells()
        .into_iter()
        .map(|c| {
            let mine: Vec<&InducingRow> = rows
                .iter()
                .filter(|r| r.nodes == c.nodes && r.density == c.density && r.latents == c.latents)
                .collect();
            InducingCell {
                nodes: c.nodes,
                density: c.density,
                latents: c.latents,
                replicates: mine.len(),
                dags_with_path: mine.iter().filter(|r| r.has_path()).count(),
                dags_with_strict_path: mine.iter().filter(|r| r.strict_features > 0).count(),
                dags_with_case3: mine.iter().filter(|r| r.case3_features > 0).count(),
            }
        })
        .collect()
}

pub fn count_inducing_paths(spec: &ExperimentSpec) -> AppResult<InducingResult> {
    if spec.kind != ExperimentKind::InducingPathCount {
        return Err(AppError::Usage(format!("expected an inducing-count spec, got {}", spec.kind.name())));
    }
    spec.validate()?;
    let jobs: Vec<(Cell, usize)> =
        spec.cells().into_iter().flat_map(|c| (0..spec.replicates).map(move |r| (c, r))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(cell, r)| {
            let cfg = spec.gen_config(cell, r);
            let ctx = || {
                format!(
                    "replicate {r} of nodes={} d={} l={} (world seed {})",
                    cell.nodes, cell.density, cell.latents, cfg.seed
                )
            };
            let dag = mask_latents(&generate_dag(&cfg).context(ctx)?, &cfg).context(ctx)?;
            let (strict_features, relaxed_features, case3_features) = scan_dag(&dag).context(ctx)?;
            Ok(InducingRow {
                nodes: cell.nodes,
                density: cell.density,
                latents: cell.latents,
                replicate: r,
                world_seed: cfg.seed,
                strict_features,
                relaxed_features,
                case3_features,
            })
        })
        .collect::<AppResult<Vec<_>>>()?;
    let cells = summarize(spec, &rows);
    Ok(InducingResult {
        schema_version: RESULT_SCHEMA_VERSION,
        kind: spec.kind,
        provenance: Provenance::new(spec.seed, vec!["ConnectedOnly latent masking".into()]),
        spec: spec.clone(),
        cells,
        rows,
    })
}

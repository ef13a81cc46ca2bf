//! Consistency studies on random networks: no latents, connected latents and
//! standalone latent direct causes.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use amie_core::data::split;
use amie_core::explain::{build_report, consistency, AmieReport, ReportOptions};
use amie_core::graph::{FalsePositiveCase, RoleConfig};
use amie_core::learn::{accuracy, fit_forest, fit_logreg, ForestParams, ModelKind, ProbModel};
use amie_core::seed::{derive, stream};
use amie_core::synth::{generate_dag, mask_latents, random_cpts, sample, BayesNet, OracleModel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_aggregates, Cell, ExperimentKind, ExperimentSpec, Provenance, Stat, RESULT_SCHEMA_VERSION};
use crate::error::{AppError, AppResult, CoreContext};

/// One model on one replicate world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub nodes: usize,
    pub density: f64,
    pub latents: usize,
    pub replicate: usize,
    pub world_seed: u64,
    pub model: ModelKind,
    pub features: usize,
    pub truth_size: usize,
    pub nonzero_size: usize,
    /// Non-zero features that pass the independence filter.
    pub kept_size: usize,
    /// `None` when the truth set is empty.
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
    pub recall_filtered: Option<f64>,
    pub precision_filtered: Option<f64>,
    pub accuracy: f64,
    pub case1: usize,
    pub case2: usize,
    pub case3: usize,
    pub case3_relaxed: usize,
    pub unexplained: usize,
    pub undefined_rows: usize,
}

impl ReplicateRecord {
    fn cell(&self) -> Cell {
        Cell { nodes: self.nodes, density: self.density, latents: self.latents }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub nodes: usize,
    pub density: f64,
    pub latents: usize,
    pub model: ModelKind,
    pub replicates: usize,
    /// Standard deviations are 0 because only one replicate ran.
    pub single_replicate: bool,
    pub recall: Option<Stat>,
    pub precision: Option<Stat>,
    pub f1: Option<Stat>,
    pub recall_filtered: Option<Stat>,
    pub precision_filtered: Option<Stat>,
    pub accuracy: Option<Stat>,
    pub case1: usize,
    pub case2: usize,
    pub case3: usize,
    pub case3_relaxed: usize,
    pub unexplained: usize,
    /// Replicates with a case-1 or case-2 false positive where the filter
    /// lowered precision.
    pub filter_lowered_precision: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    pub provenance: Provenance,
    pub spec: ExperimentSpec,
    pub summaries: Vec<CellSummary>,
    pub records: Vec<ReplicateRecord>,
}

impl ExperimentResult {
    /// Checks the stored summaries against the per-replicate rows.
    pub fn verify(&self) -> AppResult<()> {
        check_aggregates(&self.summaries, &summarize(&self.spec, &self.records))
    }

    pub fn summary(&self, cell: Cell, model: ModelKind) -> Option<&CellSummary> {
        self.summaries.iter().find(|s| {
            s.nodes == cell.nodes && s.density == cell.density && s.latents == cell.latents && s.model == model
        })
    }

    pub fn records_for(&self, cell: Cell, model: ModelKind) -> impl Iterator<Item = &ReplicateRecord> {
        self.records.iter().filter(move |r| r.cell().key() == cell.key() && r.model == model)
    }
}

pub fn summarize(spec: &ExperimentSpec, records: &[ReplicateRecord]) -> Vec<CellSummary> {
    let mut out = Vec::new();
    for cell in spec.cells() {
        for &model in &spec.models {
            let rows: Vec<&ReplicateRecord> =
                records.iter().filter(|r| r.cell().key() == cell.key() && r.model == model).collect();
            let collect = |f: fn(&ReplicateRecord) -> Option<f64>| -> Option<Stat> {
                Stat::of(&rows.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
            };
            let total = |f: fn(&ReplicateRecord) -> usize| rows.iter().map(|r| f(r)).sum();
            out.push(CellSummary {
                nodes: cell.nodes,
                density: cell.density,
                latents: cell.latents,
                model,
                replicates: rows.len(),
                single_replicate: rows.len() == 1,
                recall: collect(|r| r.recall),
                precision: collect(|r| r.precision),
                f1: collect(|r| r.f1),
                recall_filtered: collect(|r| r.recall_filtered),
                precision_filtered: collect(|r| r.precision_filtered),
                accuracy: collect(|r| Some(r.accuracy)),
                case1: total(|r| r.case1),
                case2: total(|r| r.case2),
                case3: total(|r| r.case3),
                case3_relaxed: total(|r| r.case3_relaxed),
                unexplained: total(|r| r.unexplained),
                filter_lowered_precision: rows
                    .iter()
                    .filter(|r| {
                        r.case1 + r.case2 > 0
                            && matches!((r.precision, r.precision_filtered), (Some(p), Some(q)) if q < p)
                    })
                    .count(),
            });
        }
    }
    out
}

/// The replicate's network: DAG, latent mask and CPTs.
pub fn replicate_world(spec: &ExperimentSpec, cell: Cell, replicate: usize) -> amie_core::Result<BayesNet> {
    let cfg = spec.gen_config(cell, replicate);
    let dag = mask_latents(&generate_dag(&cfg)?, &cfg)?;
    random_cpts(&dag, &cfg)
}

fn record_from(
    cell: Cell,
    replicate: usize,
    world_seed: u64,
    report: &AmieReport,
    accuracy: f64,
) -> amie_core::Result<ReplicateRecord> {
    let truth = report.truth();
    let (c, cf) = if truth.is_empty() {
        (None, None)
    } else {
        (Some(consistency(&truth, &report.nonzero())?), Some(consistency(&truth, &report.kept())?))
    };
    let mut cases = [0usize; 5];
    for f in &report.features {
        match &f.fp_case {
            Some(FalsePositiveCase::ParentOfProxy { .. }) => cases[0] += 1,
            Some(FalsePositiveCase::SharedUnobservedAncestorWithProxy { .. }) => cases[1] += 1,
            Some(FalsePositiveCase::InducingPath { relaxed: false, .. }) => cases[2] += 1,
            Some(FalsePositiveCase::InducingPath { relaxed: true, .. }) => cases[3] += 1,
            Some(FalsePositiveCase::Unexplained) => cases[4] += 1,
            None => {}
        }
    }
    Ok(ReplicateRecord {
        nodes: cell.nodes,
        density: cell.density,
        latents: cell.latents,
        replicate,
        world_seed,
        model: report.model,
        features: report.features.len(),
        truth_size: truth.len(),
        nonzero_size: report.nonzero().len(),
        kept_size: report.kept().len(),
        recall: c.map(|c| c.recall),
        precision: c.map(|c| c.precision),
        f1: c.map(|c| c.f1),
        recall_filtered: cf.map(|c| c.recall),
        precision_filtered: cf.map(|c| c.precision),
        accuracy,
        case1: cases[0],
        case2: cases[1],
        case3: cases[2],
        case3_relaxed: cases[3],
        unexplained: cases[4],
        undefined_rows: report.undefined_rows,
    })
}

/// Runs every model of the spec on one replicate world.
pub fn run_replicate(spec: &ExperimentSpec, cell: Cell, replicate: usize) -> AppResult<Vec<ReplicateRecord>> {
    let world_seed = spec.world_seed(cell, replicate);
    let ctx = || {
        format!(
            "replicate {replicate} of cell nodes={} d={} l={} (world seed {world_seed})",
            cell.nodes, cell.density, cell.latents
        )
    };
    let l = cell.latents as u64;
    let net = replicate_world(spec, cell, replicate).context(ctx)?;
    let data = sample(&net, spec.samples, derive(world_seed, &[stream::SAMPLE, l])).context(ctx)?.data;
    let data = split(&data, spec.train_fraction, derive(world_seed, &[stream::SPLIT, l])).context(ctx)?;
    let (train, test) = (data.train(), data.test());
    let mut out = Vec::with_capacity(spec.models.len());
    for &kind in &spec.models {
        let model: Box<dyn ProbModel> = match kind {
            ModelKind::LogReg => Box::new(fit_logreg(&train, &spec.logreg).context(ctx)?),
            ModelKind::RandomForest => {
                let params = ForestParams { seed: derive(world_seed, &[stream::FOREST, l]), ..spec.forest };
                Box::new(fit_forest(&train, &params).context(ctx)?)
            }
            ModelKind::Oracle => Box::new(OracleModel::new(net.clone()).context(ctx)?),
        };
        let options =
            ReportOptions { threshold: spec.threshold(kind), alpha: spec.alpha, roles: RoleConfig::default() };
        let report = build_report(model.as_ref(), &test, &options, Some(net.dag())).context(ctx)?;
        let acc = accuracy(model.as_ref(), &test).context(ctx)?;
        out.push(record_from(cell, replicate, world_seed, &report, acc).context(ctx)?);
    }
    Ok(out)
}

type JobKey = (usize, u64, usize, usize);

fn job_key(cell: Cell, replicate: usize) -> JobKey {
    let (n, d, l) = cell.key();
    (n, d, l, replicate)
}

/// Completed replicates from a checkpoint file. The first line holds the
/// spec that produced it; a truncated last line is ignored.
fn load_checkpoint(path: &Path, spec: &ExperimentSpec) -> AppResult<BTreeMap<JobKey, Vec<ReplicateRecord>>> {
    let mut done: BTreeMap<JobKey, Vec<ReplicateRecord>> = BTreeMap::new();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(done),
        Err(e) => return Err(AppError::io(path, e)),
    };
    let mut lines = BufReader::new(file).lines();
    match lines.next() {
        None => return Ok(done),
        Some(header) => {
            let header = header.map_err(|e| AppError::io(path, e))?;
            if serde_json::from_str::<ExperimentSpec>(&header).ok().as_ref() != Some(spec) {
                return Err(AppError::Usage(format!(
                    "{} was written for a different experiment; remove it to start over",
                    path.display()
                )));
            }
        }
    }
    for line in lines {
        let line = line.map_err(|e| AppError::io(path, e))?;
        let Ok(batch) = serde_json::from_str::<Vec<ReplicateRecord>>(&line) else {
            continue;
        };
        if let Some(first) = batch.first() {
            done.insert(job_key(first.cell(), first.replicate), batch);
        }
    }
    Ok(done)
}

fn open_checkpoint(path: &Path, spec: &ExperimentSpec) -> AppResult<File> {
    let existing = std::fs::read(path).unwrap_or_default();
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| AppError::io(path, e))?;
    let prefix = if existing.is_empty() {
        serde_json::to_string(spec).map_err(|e| AppError::Invariant(e.to_string()))? + "\n"
    } else if existing.last() != Some(&b'\n') {
        "\n".to_string()
    } else {
        String::new()
    };
    f.write_all(prefix.as_bytes()).map_err(|e| AppError::io(path, e))?;
    Ok(f)
}

/// Runs the grid; with a checkpoint path, finished replicates are appended
/// to it as JSON lines and reused on the next run.
pub fn run_grid(spec: &ExperimentSpec, checkpoint: Option<&Path>) -> AppResult<ExperimentResult> {
    spec.validate()?;
    if spec.kind == ExperimentKind::InducingPathCount {
        return Err(AppError::Usage("inducing-path counts use count_inducing_paths".into()));
    }
    let mut done = match checkpoint {
        Some(p) => load_checkpoint(p, spec)?,
        None => BTreeMap::new(),
    };
    let jobs: Vec<(Cell, usize)> = spec
        .cells()
        .into_iter()
        .flat_map(|c| (0..spec.replicates).map(move |r| (c, r)))
        .filter(|&(c, r)| !done.contains_key(&job_key(c, r)))
        .collect();
    let sink = match checkpoint {
        Some(p) => Some(Mutex::new(open_checkpoint(p, spec)?)),
        None => None,
    };
    let fresh: Vec<Vec<ReplicateRecord>> = jobs
        .par_iter()
        .map(|&(cell, r)| {
            let batch = run_replicate(spec, cell, r)?;
            if let (Some(sink), Some(path)) = (&sink, checkpoint) {
                let line = serde_json::to_string(&batch).map_err(|e| AppError::Invariant(e.to_string()))?;
                let mut f = sink.lock().map_err(|_| AppError::Invariant("checkpoint lock poisoned".into()))?;
                writeln!(f, "{line}").and_then(|_| f.flush()).map_err(|e| AppError::io(path, e))?;
            }
            Ok(batch)
        })
        .collect::<AppResult<_>>()?;
    for batch in fresh {
        if let Some(first) = batch.first() {
            done.insert(job_key(first.cell(), first.replicate), batch);
        }
    }
    let order: BTreeMap<(usize, u64, usize), usize> =
        spec.cells().iter().enumerate().map(|(i, c)| (c.key(), i)).collect();
    let model_pos = |m: ModelKind| spec.models.iter().position(|&k| k == m).unwrap_or(usize::MAX);
    let mut records: Vec<ReplicateRecord> = done
        .into_values()
        .flatten()
        .filter(|r| order.contains_key(&r.cell().key()) && r.replicate < spec.replicates)
        .collect();
    records.sort_by_key(|r| (order[&r.cell().key()], r.replicate, model_pos(r.model)));
    let summaries = summarize(spec, &records);
    Ok(ExperimentResult {
        schema_version: RESULT_SCHEMA_VERSION,
        kind: spec.kind,
        provenance: Provenance::new(spec.seed, vec!["DAG and CPTs are redrawn for every replicate".into()]),
        spec: spec.clone(),
        summaries,
        records,
    })
}

fn expect_kind(spec: &ExperimentSpec, kind: ExperimentKind) -> AppResult<()> {
    if spec.kind == kind {
        Ok(())
    } else {
        Err(AppError::Usage(format!("expected a {} spec, got {}", kind.name(), spec.kind.name())))
    }
}

pub fn run_no_latent(spec: &ExperimentSpec) -> AppResult<ExperimentResult> {
    expect_kind(spec, ExperimentKind::NoLatent)?;
    run_grid(spec, None)
}

pub fn run_connected_latent(spec: &ExperimentSpec) -> AppResult<ExperimentResult> {
    expect_kind(spec, ExperimentKind::ConnectedLatent)?;
    run_grid(spec, None)
}

pub fn run_standalone_latent(spec: &ExperimentSpec) -> AppResult<ExperimentResult> {
    expect_kind(spec, ExperimentKind::StandaloneLatent)?;
    run_grid(spec, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind) -> ExperimentSpec {
        let mut spec = ExperimentSpec::desk(kind);
        spec.nodes = vec![10];
        spec.densities = vec![1.5];
        spec.replicates = 3;
        spec.samples = 600;
        spec.forest.tree_count = 10;
        spec
    }

    #[test]
    fn oracle_recovers_parents_without_latents() {
        let mut spec = small(ExperimentKind::NoLatent);
        spec.models = vec![ModelKind::Oracle];
        let res = run_no_latent(&spec).unwrap();
        assert_eq!(res.records.len(), 3);
        for r in &res.records {
            assert_eq!(r.recall, Some(1.0));
            assert_eq!(r.precision, Some(1.0));
        }
        res.verify().unwrap();
    }

    #[test]
    fn standalone_with_zero_latents_matches_no_latent() {
        let mut a = small(ExperimentKind::NoLatent);
        a.models = vec![ModelKind::LogReg];
        let mut b = a.clone();
        b.kind = ExperimentKind::StandaloneLatent;
        let ra = run_grid(&a, None).unwrap();
        let rb = run_grid(&b, None).unwrap();
        assert_eq!(ra.records, rb.records);
    }

    #[test]
    fn resume_reproduces_uninterrupted_run() {
        let mut spec = small(ExperimentKind::ConnectedLatent);
        spec.latents = vec![2];
        let full = run_grid(&spec, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let ck = dir.path().join("run.checkpoint.jsonl");
        // a partial run: first replicate only, plus a truncated line
        let first = run_replicate(&spec, spec.cells()[0], 0).unwrap();
        let header = serde_json::to_string(&spec).unwrap();
        let batch = serde_json::to_string(&first).unwrap();
        std::fs::write(&ck, format!("{header}\n{batch}\n{{\"trunc")).unwrap();
        let resumed = run_grid(&spec, Some(&ck)).unwrap();
        assert_eq!(resumed.records, full.records);
        assert_eq!(resumed.summaries, full.summaries);
        // a second resume finds every replicate in the file
        assert_eq!(run_grid(&spec, Some(&ck)).unwrap().records, full.records);
        let mut other = spec.clone();
        other.seed = 1;
        assert!(matches!(run_grid(&other, Some(&ck)), Err(AppError::Usage(_))));
    }

    #[test]
    fn tampered_summary_fails_verification() {
        let mut spec = small(ExperimentKind::NoLatent);
        spec.models = vec![ModelKind::LogReg];
        let mut res = run_grid(&spec, None).unwrap();
        res.verify().unwrap();
        res.summaries[0].accuracy.as_mut().unwrap().mean += 1e-6;
        assert!(matches!(res.verify(), Err(AppError::Invariant(_))));
    }

    #[test]
    fn wrong_kind_is_a_usage_error() {
        let spec = small(ExperimentKind::NoLatent);
        assert!(matches!(run_connected_latent(&spec), Err(AppError::Usage(_))));
    }
}

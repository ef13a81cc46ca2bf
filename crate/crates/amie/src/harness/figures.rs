//! Small hand-built worlds around the independence filter: two where a
//! flagged feature is marginally independent of the outcome and one where
//! it is not.

use amie_core::explain::amie;
use amie_core::graph::CausalDag;
use amie_core::seed::{derive, rng, stream};
use amie_core::stats::{contingency_2x2, pearson_2x2};
use amie_core::synth::{sample, BayesNet, OracleModel};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Provenance, RESULT_SCHEMA_VERSION};
use crate::error::{AppError, AppResult, CoreContext};

/// Contrast every parent must reach in every row of its child's table.
pub const FIGURE_MIN_EFFECT: f64 = 0.2;
const FIGURE_MARGIN: f64 = 0.1;
const MAX_DRAWS: u64 = 100_000;

/// Tables in which each parent moves its child the same way in every row,
/// by at least [`FIGURE_MIN_EFFECT`]. With mixed signs the contributions of
/// a dependent path can cancel and leave a graph-dependent pair nearly
/// independent in distribution.
pub fn monotone_cpts(dag: &CausalDag, seed: u64) -> AppResult<BayesNet> {
    let mut tables = Vec::with_capacity(dag.node_count());
    for v in 0..dag.node_count() {
        let k = dag.parents(v).len();
        let mut r = rng(seed, &[stream::CPT, v as u64]);
        let table = (0..MAX_DRAWS)
            .map(|_| (0..1usize << k).map(|_| r.gen_range(FIGURE_MARGIN..=1.0 - FIGURE_MARGIN)).collect::<Vec<f64>>())
            .find(|t| (0..k).all(|j| monotone(t, j)))
            .ok_or_else(|| AppError::Invariant(format!("no monotone table for `{}`", dag.label(v))))?;
        tables.push(table);
    }
    BayesNet::new(dag.clone(), tables).context(|| "figure network".into())
}

fn monotone(table: &[f64], k: usize) -> bool {
    let bit = 1usize << k;
    let diffs: Vec<f64> = (0..table.len()).filter(|r| r & bit == 0).map(|r| table[r | bit] - table[r]).collect();
    diffs.iter().all(|&d| d >= FIGURE_MIN_EFFECT) || diffs.iter().all(|&d| d <= -FIGURE_MIN_EFFECT)
}

/// Labels, edges, observed flags and outcome index of a fixed world.
type Layout = (&'static [&'static str], &'static [(usize, usize)], &'static [bool], usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FigureWorld {
    /// `Xj -> Xi <- Ui -> Y`: `Xj` is the parent of a proxy.
    ParentOfProxy,
    /// `Xj <- Uj -> Xi <- Ui -> Y`: `Xj` shares a latent ancestor with a proxy.
    SharedAncestor,
    /// `Xj -> Xm <- U -> Y`, `Xm -> Y`: `Xj` reaches `Y` through `Xm`.
    InducingPath,
}

impl FigureWorld {
    pub const ALL: [FigureWorld; 3] = [Self::ParentOfProxy, Self::SharedAncestor, Self::InducingPath];

    pub fn name(self) -> &'static str {
        match self {
            Self::ParentOfProxy => "parent-of-proxy",
            Self::SharedAncestor => "shared-ancestor",
            Self::InducingPath => "inducing-path",
        }
    }

    /// Whether the flagged feature is marginally independent of the outcome.
    pub fn independent(self) -> bool {
        !matches!(self, Self::InducingPath)
    }

    /// The graph; the flagged feature is node 0 and feature column 0.
    pub fn dag(self) -> CausalDag {
        let (labels, edges, observed, y): Layout = match self {
            Self::ParentOfProxy => (&["Xj", "Xi", "Ui", "Y"], &[(0, 1), (2, 1), (2, 3)], &[true, true, false, true], 3),
            Self::SharedAncestor => (
                &["Xj", "Uj", "Xi", "Ui", "Y"],
                &[(1, 0), (1, 2), (3, 2), (3, 4)],
                &[true, false, true, false, true],
                4,
            ),
            Self::InducingPath => {
                (&["Xj", "Xm", "U", "Y"], &[(0, 1), (2, 1), (2, 3), (1, 3)], &[true, true, false, true], 3)
            }
        };
        CausalDag::new(labels.iter().map(|s| s.to_string()).collect(), edges, observed.to_vec(), y)
            .expect("fixed figure graph is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureRun {
    pub run: usize,
    pub seed: u64,
    pub statistic: f64,
    pub p_value: f64,
    pub filtered: bool,
    /// Oracle AMIE of the flagged feature on the sample.
    pub oracle_amie: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSummary {
    pub world: FigureWorld,
    pub independent: bool,
    pub runs: usize,
    pub filtered: usize,
    /// Runs that ended on the correct side of the filter.
    pub correct: usize,
    pub correct_rate: f64,
    pub oracle_nonzero: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureResult {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub samples: usize,
    pub alpha: f64,
    pub summaries: Vec<FigureSummary>,
    pub runs: Vec<(FigureWorld, Vec<FigureRun>)>,
}

/// Samples `runs` fresh CPT draws of each world and applies the filter to
/// the flagged feature.
pub fn run_figure_suite(runs: usize, samples: usize, alpha: f64, seed: u64) -> AppResult<FigureResult> {
    if runs == 0 || samples == 0 {
        return Err(AppError::Usage("runs and samples must be positive".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AppError::Usage(format!("alpha {alpha} outside (0, 1)")));
    }
    let mut summaries = Vec::new();
    let mut all = Vec::new();
    for (w, world) in FigureWorld::ALL.into_iter().enumerate() {
        let dag = world.dag();
        let rows = (0..runs)
            .into_par_iter()
            .map(|run| {
                let s = derive(seed, &[w as u64, run as u64]);
                let ctx = || format!("{} world, run {run} (seed {s})", world.name());
                let net = monotone_cpts(&dag, s)?;
                let data = sample(&net, samples, s).context(ctx)?.data;
                let test = pearson_2x2(contingency_2x2(&data.column(0), data.outcome()).context(ctx)?);
                let oracle = OracleModel::new(net).context(ctx)?;
                let a = amie(&oracle, &data, 0).context(ctx)?;
                Ok(FigureRun {
                    run,
                    seed: s,
                    statistic: test.statistic,
                    p_value: test.p_value,
                    filtered: test.p_value > alpha,
                    oracle_amie: a.value,
                })
            })
            .collect::<AppResult<Vec<_>>>()?;
        let filtered = rows.iter().filter(|r| r.filtered).count();
        let correct = if world.independent() { filtered } else { runs - filtered };
        summaries.push(FigureSummary {
            world,
            independent: world.independent(),
            runs,
            filtered,
            correct,
            correct_rate: correct as f64 / runs as f64,
            oracle_nonzero: rows.iter().filter(|r| r.oracle_amie.abs() > 1e-9).count(),
        });
        all.push((world, rows));
    }
    Ok(FigureResult {
        schema_version: RESULT_SCHEMA_VERSION,
        provenance: Provenance::new(seed, vec![format!("monotone CPTs, minimum row contrast {FIGURE_MIN_EFFECT}")]),
        samples,
        alpha,
        summaries,
        runs: all,
    })
}

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;

use super::{BayesNet, GenConfig, LatentMode, MAX_PARENTS};
use crate::error::{Error, Result};
use crate::graph::{classify_roles, CausalDag, RoleConfig};
use crate::seed::{self, stream};

pub const MAX_RETRIES: usize = 1000;

/// Maps a linear index over the pairs `i < j` (row-major) to the pair.
fn decode_pair(mut k: usize, n: usize) -> (usize, usize) {
    for i in 0..n {
        let row = n - 1 - i;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
    }
    unreachable!("pair index out of range")
}

/// Random DAG over nodes in topological order `0..n` with the last node as the
/// outcome, which always receives at least one parent.
pub fn generate_dag(config: &GenConfig) -> Result<CausalDag> {
    config.validate()?;
    let n = config.total_nodes;
    let capacity = config.edge_capacity();
    let budget = config.edge_budget();
    let outcome = n - 1;
    for attempt in 0..MAX_RETRIES {
        let mut rng = seed::rng(config.seed, &[stream::DAG, attempt as u64]);
        let mut edges: Vec<(usize, usize)> =
            index::sample(&mut rng, capacity, budget).into_iter().map(|k| decode_pair(k, n)).collect();
        if !edges.iter().any(|&(_, to)| to == outcome) {
            continue;
        }
        edges.sort_unstable();
        return CausalDag::from_edges(n, &edges, outcome, &[]);
    }
    Err(Error::RetriesExhausted { what: "outcome without parents", attempts: MAX_RETRIES })
}

/// Applies the configured latent mode.
pub fn mask_latents(dag: &CausalDag, config: &GenConfig) -> Result<CausalDag> {
    config.validate()?;
    let l = config.latent_count;
    match config.latent_mode {
        LatentMode::None => Ok(dag.clone()),
        LatentMode::ConnectedOnly => {
            let candidates: Vec<usize> = (0..dag.node_count()).filter(|&v| v != dag.outcome()).collect();
            if l >= candidates.len() {
                return Err(Error::InvalidArgument(format!(
                    "cannot hide {l} of {} non-outcome nodes",
                    candidates.len()
                )));
            }
            for attempt in 0..MAX_RETRIES {
                let mut rng = seed::rng(config.seed, &[stream::MASK, l as u64, attempt as u64]);
                let mut chosen: Vec<usize> =
                    index::sample(&mut rng, candidates.len(), l).into_iter().map(|k| candidates[k]).collect();
                chosen.sort_unstable();
                let masked = relabel_hidden(&dag.with_latents(&chosen)?)?;
                if !classify_roles(&masked, RoleConfig::default()).has_standalone() {
                    return Ok(masked);
                }
            }
            Err(Error::RetriesExhausted { what: "latent selection without standalone causes", attempts: MAX_RETRIES })
        }
        LatentMode::StandaloneDc => add_standalone_latents(dag, l),
    }
}

/// Renames default `X{i}` labels of hidden nodes to `U{i}`.
fn relabel_hidden(dag: &CausalDag) -> Result<CausalDag> {
    let labels = (0..dag.node_count())
        .map(|v| {
            let label = dag.label(v);
            if !dag.is_observed(v) && label == format!("X{v}") {
                format!("U{v}")
            } else {
                label.into()
            }
        })
        .collect();
    CausalDag::new(labels, &dag.edges(), dag.observed_flags().to_vec(), dag.outcome())
}

/// Inserts `l` latent roots just before the outcome, each with the single edge
/// into it. Existing non-outcome indices are unchanged.
fn add_standalone_latents(dag: &CausalDag, l: usize) -> Result<CausalDag> {
    let n = dag.node_count();
    let y = dag.outcome();
    // old outcome moves to the end; nodes after it shift down by one
    let remap = |v: usize| -> usize {
        if v == y {
            n + l - 1
        } else if v > y {
            v - 1
        } else {
            v
        }
    };
    let mut labels: Vec<String> = vec![String::new(); n + l];
    let mut observed = vec![true; n + l];
    for v in 0..n {
        labels[remap(v)] = dag.label(v).into();
        observed[remap(v)] = dag.is_observed(v);
    }
    let mut edges: Vec<(usize, usize)> = dag.edges().into_iter().map(|(a, b)| (remap(a), remap(b))).collect();
    let mut suffix = 0;
    for k in 0..l {
        let u = n - 1 + k;
        loop {
            let name = format!("S{suffix}");
            suffix += 1;
            if dag.index_of(&name).is_none() {
                labels[u] = name;
                break;
            }
        }
        observed[u] = false;
        edges.push((u, n + l - 1));
    }
    CausalDag::new(labels, &edges, observed, n + l - 1)
}

/// Max over rows of `|P(1 | parent k = 1, rest) - P(1 | parent k = 0, rest)|`.
pub(crate) fn max_contrast(table: &[f64], k: usize) -> f64 {
    let bit = 1usize << k;
    (0..table.len()).filter(|r| r & bit == 0).map(|r| libm::fabs(table[r | bit] - table[r])).fold(0.0, f64::max)
}

/// Draws every table uniformly from `[margin, 1 - margin]`, redrawing a node's
/// table until each of its parents reaches the minimum contrast.
pub fn random_cpts(dag: &CausalDag, config: &GenConfig) -> Result<BayesNet> {
    config.validate()?;
    let (lo, hi) = (config.cpt_margin, 1.0 - config.cpt_margin);
    let mut tables = Vec::with_capacity(dag.node_count());
    for v in 0..dag.node_count() {
        let k = dag.parents(v).len();
        if k > MAX_PARENTS {
            return Err(Error::InvalidGraph(format!("`{}` has {k} parents", dag.label(v))));
        }
        let mut accepted = None;
        for attempt in 0..MAX_RETRIES {
            let mut rng = seed::rng(config.seed, &[stream::CPT, v as u64, attempt as u64]);
            let table: Vec<f64> = (0..1usize << k).map(|_| rng.gen_range(lo..=hi)).collect();
            if (0..k).all(|j| max_contrast(&table, j) >= config.min_effect) {
                accepted = Some(table);
                break;
            }
        }
        tables.push(
            accepted
                .ok_or(Error::RetriesExhausted { what: "table meeting the minimum contrast", attempts: MAX_RETRIES })?,
        );
    }
    BayesNet::new(dag.clone(), tables)
}

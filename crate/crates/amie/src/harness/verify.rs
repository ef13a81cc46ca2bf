//! Property suites runnable from the command line: graph algorithms against
//! exhaustive enumeration, chi-square calibration, and exact recovery of the
//! outcome's parents by the oracle.

use amie_core::explain::{build_report, ReportOptions, Threshold};
use amie_core::graph::{d_separated, enumerate, has_inducing_path, CausalDag, RoleConfig};
use amie_core::seed::{derive, rng};
use amie_core::stats::pearson_2x2;
use amie_core::synth::{generate_dag, random_cpts, sample, GenConfig, OracleModel};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult, CoreContext};

const GRAPH_STREAM: u64 = 0x4752_4150;
const CHI_STREAM: u64 = 0x4348_4931;

/// Random DAG on 3 to `max_nodes` nodes: edges follow a shuffled order, the
/// last node of that order is the outcome, other nodes are latent with
/// probability 0.3.
pub fn random_small_dag(seed: u64, max_nodes: usize) -> CausalDag {
    let mut r = rng(seed, &[GRAPH_STREAM]);
    let n = r.gen_range(3..=max_nodes.max(3));
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut r);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.gen_bool(0.35) {
                edges.push((perm[i], perm[j]));
            }
        }
    }
    let outcome = perm[n - 1];
    let latent: Vec<usize> = (0..n).filter(|&v| v != outcome && r.gen_bool(0.3)).collect();
    CausalDag::from_edges(n, &edges, outcome, &latent).expect("forward edges form a DAG")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEquivalence {
    pub dags: usize,
    pub dsep_queries: usize,
    pub dsep_disagreements: usize,
    pub inducing_queries: usize,
    pub inducing_disagreements: usize,
    /// Seeds of DAGs with any disagreement.
    pub failing_seeds: Vec<u64>,
}

/// Compares the reachability algorithms with path enumeration. Each DAG
/// gets 20 random `(x, y, Z)` separation queries and a strict and relaxed
/// inducing-path query per feature.
pub fn graph_equivalence(dags: usize, seed: u64) -> AppResult<GraphEquivalence> {
    let per_dag = (0..dags)
        .into_par_iter()
        .map(|k| {
            let s = derive(seed, &[k as u64]);
            let dag = random_small_dag(s, 10);
            let n = dag.node_count();
            let mut r = rng(s, &[GRAPH_STREAM, 1]);
            let ctx = || format!("graph equivalence DAG {k} (seed {s})");
            let (mut dq, mut dd, mut iq, mut id) = (0, 0, 0, 0);
            for _ in 0..20 {
                let x = r.gen_range(0..n);
                let y = r.gen_range(0..n);
                if x == y {
                    continue;
                }
                let z: Vec<usize> = (0..n).filter(|&v| v != x && v != y && r.gen_bool(0.3)).collect();
                dq += 1;
                let fast = d_separated(&dag, x, y, &z).context(ctx)?;
                dd += usize::from(fast != enumerate::d_separated(&dag, x, y, &z).context(ctx)?);
            }
            for x in dag.feature_nodes() {
                for relaxed in [false, true] {
                    iq += 1;
                    let fast = has_inducing_path(&dag, x, relaxed).context(ctx)?;
                    let slow = enumerate::inducing_paths(&dag, x, relaxed).context(ctx)?;
                    let witness_ok = fast.as_ref().is_none_or(|p| enumerate::path_is_inducing(&dag, &p.nodes, relaxed));
                    id += usize::from(fast.is_some() == slow.is_empty() || !witness_ok);
                }
            }
            Ok((s, dq, dd, iq, id))
        })
        .collect::<AppResult<Vec<_>>>()?;
    let mut out = GraphEquivalence {
        dags,
        dsep_queries: 0,
        dsep_disagreements: 0,
        inducing_queries: 0,
        inducing_disagreements: 0,
        failing_seeds: Vec::new(),
    };
    for (s, dq, dd, iq, id) in per_dag {
        out.dsep_queries += dq;
        out.dsep_disagreements += dd;
        out.inducing_queries += iq;
        out.inducing_disagreements += id;
        if dd + id > 0 {
            out.failing_seeds.push(s);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareCalibration {
    pub tables: usize,
    pub samples_per_table: usize,
    pub alpha: f64,
    pub rejections: usize,
    pub rejection_rate: f64,
    pub degenerate: usize,
    pub fixture_statistic: f64,
    pub fixture_p_value: f64,
}

/// Rejection rate of the 2x2 test on independent binary pairs whose margins
/// are drawn uniformly from [0.2, 0.8] per table.
pub fn chi_square_calibration(tables: usize, n: usize, alpha: f64, seed: u64) -> AppResult<ChiSquareCalibration> {
    if tables == 0 || n == 0 {
        return Err(AppError::Usage("tables and samples must be positive".into()));
    }
    let tests: Vec<(bool, bool)> = (0..tables)
        .into_par_iter()
        .map(|k| {
            let mut r = rng(seed, &[CHI_STREAM, k as u64]);
            let px: f64 = r.gen_range(0.2..0.8);
            let py: f64 = r.gen_range(0.2..0.8);
            let mut t = [[0u64; 2]; 2];
            for _ in 0..n {
                t[usize::from(r.gen_bool(px))][usize::from(r.gen_bool(py))] += 1;
            }
            let test = pearson_2x2(t);
            (test.p_value <= alpha, test.degenerate)
        })
        .collect();
    let rejections = tests.iter().filter(|t| t.0).count();
    let fixture = pearson_2x2([[30, 10], [10, 30]]);
    Ok(ChiSquareCalibration {
        tables,
        samples_per_table: n,
        alpha,
        rejections,
        rejection_rate: rejections as f64 / tables as f64,
        degenerate: tests.iter().filter(|t| t.1).count(),
        fixture_statistic: fixture.statistic,
        fixture_p_value: fixture.p_value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentRecoveryRun {
    pub net: usize,
    pub seed: u64,
    pub nodes: usize,
    pub density: f64,
    pub parents: Vec<usize>,
    pub nonzero: Vec<usize>,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentRecovery {
    pub nets: usize,
    pub exact: usize,
    pub exact_rate: f64,
    pub runs: Vec<ParentRecoveryRun>,
}

/// Oracle AMIEs on no-latent networks of 8 to 12 nodes with `d` in {1, 2}:
/// how often the non-zero set is exactly the outcome's parent set.
pub fn parent_recovery(nets: usize, eval_rows: usize, seed: u64) -> AppResult<ParentRecovery> {
    if nets == 0 || eval_rows == 0 {
        return Err(AppError::Usage("nets and rows must be positive".into()));
    }
    let runs = (0..nets)
        .into_par_iter()
        .map(|k| {
            let s = derive(seed, &[k as u64]);
            let nodes = 8 + k % 5;
            let density = if k % 2 == 0 { 1.0 } else { 2.0 };
            let cfg = GenConfig {
                total_nodes: nodes,
                edge_ratio: density,
                cpt_margin: 0.1,
                min_effect: 0.05,
                seed: s,
                ..GenConfig::default()
            };
            let ctx = || format!("parent recovery net {k} (seed {s})");
            let dag = generate_dag(&cfg).context(ctx)?;
            let net = random_cpts(&dag, &cfg).context(ctx)?;
            let data = sample(&net, eval_rows, s).context(ctx)?.data;
            let oracle = OracleModel::new(net).context(ctx)?;
            let options = ReportOptions {
                threshold: Threshold::Absolute(Threshold::ORACLE_EPSILON),
                alpha: 0.05,
                roles: RoleConfig::default(),
            };
            let report = build_report(&oracle, &data, &options, Some(&dag)).context(ctx)?;
            let features = dag.feature_nodes();
            let parents: Vec<usize> = dag
                .parents(dag.outcome())
                .iter()
                .map(|p| features.iter().position(|f| f == p).expect("parents are features"))
                .collect();
            let nonzero = report.nonzero();
            Ok(ParentRecoveryRun { net: k, seed: s, nodes, density, exact: nonzero == parents, parents, nonzero })
        })
        .collect::<AppResult<Vec<_>>>()?;
    let exact = runs.iter().filter(|r| r.exact).count();
    Ok(ParentRecovery { nets, exact, exact_rate: exact as f64 / nets as f64, runs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_equivalence_sweep_agrees() {
        let r = graph_equivalence(60, 1).unwrap();
        assert_eq!(r.dsep_disagreements + r.inducing_disagreements, 0, "{r:?}");
        assert!(r.dsep_queries > 0 && r.inducing_queries > 0);
    }

    #[test]
    fn calibration_is_near_nominal() {
        let c = chi_square_calibration(2000, 400, 0.05, 4).unwrap();
        assert!((c.rejection_rate - 0.05).abs() < 0.02, "{c:?}");
        assert!((c.fixture_statistic - 20.0).abs() < 1e-9);
    }

    #[test]
    fn oracle_recovers_parents() {
        let r = parent_recovery(10, 200, 3).unwrap();
        assert!(r.exact >= 9, "{r:?}");
    }
}

//! Rankings on samples from public discrete networks.
//!
//! The outcome's descendants are dropped before sampling: they are effects
//! of the outcome, and a model fed with them would rank them first.

use std::path::PathBuf;

use amie_core::data::{one_hot_encode, split, LevelTable};
use amie_core::explain::{abs_ranking, build_report, ReportOptions, Threshold, DEFAULT_ALPHA};
use amie_core::graph::RoleConfig;
use amie_core::learn::{accuracy, fit_forest, fit_logreg, permutation_importance, ForestParams, LogRegParams};
use amie_core::learn::{ModelKind, ProbModel};
use amie_core::network::DiscreteNet;
use amie_core::seed::{derive, stream};
use serde::{Deserialize, Serialize};

use super::{Provenance, RESULT_SCHEMA_VERSION};
use crate::error::{AppError, AppResult, CoreContext};
use crate::formats::bif::parse_bif;

pub const INSURANCE_BIF: &str = include_str!("../../data/insurance.bif");
pub const WATER_BIF: &str = include_str!("../../data/water.bif");

/// Where the network text comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetworkSource {
    Insurance,
    Water,
    File(PathBuf),
}

impl NetworkSource {
    pub fn parse(s: &str) -> Self {
        match s {
            "insurance" => Self::Insurance,
            "water" => Self::Water,
            path => Self::File(PathBuf::from(path)),
        }
    }

    pub fn text(&self) -> AppResult<String> {
        match self {
            Self::Insurance => Ok(INSURANCE_BIF.to_string()),
            Self::Water => Ok(WATER_BIF.to_string()),
            Self::File(p) => std::fs::read_to_string(p).map_err(|e| AppError::io(p, e)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiSpec {
    pub network: NetworkSource,
    pub outcome: String,
    /// `None` picks the outcome's most frequent sampled level.
    pub positive_levels: Option<Vec<String>>,
    /// Variables whose one-hot columns count as ground-truth direct causes.
    pub truth_groups: Vec<String>,
    /// Commonly quoted node and edge counts of the network, for comparison.
    pub reference_counts: Option<(usize, usize)>,
    pub reference_features: Option<usize>,
    pub samples: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub top_k: usize,
    pub importance_repeats: usize,
    pub models: Vec<ModelKind>,
    pub epsilon: Option<f64>,
    pub alpha: f64,
    pub logreg: LogRegParams,
    pub forest: ForestParams,
}

/// One-hot columns of a variable are collinear, which slows gradient descent
/// badly; at the default budget the ranking still drifts between epochs.
pub const SEMI_LOGREG: LogRegParams =
    LogRegParams { l2_penalty: 1e-4, learning_rate: 0.5, max_epochs: 10_000, grad_tolerance: 1e-6 };

impl SemiSpec {
    fn base(network: NetworkSource, outcome: &str, truth: &[&str]) -> Self {
        Self {
            network,
            outcome: outcome.into(),
            positive_levels: None,
            truth_groups: truth.iter().map(|s| s.to_string()).collect(),
            reference_counts: None,
            reference_features: None,
            samples: 20_000,
            train_fraction: 0.7,
            seed: 0,
            top_k: 10,
            importance_repeats: 5,
            models: vec![ModelKind::LogReg, ModelKind::RandomForest],
            epsilon: None,
            alpha: DEFAULT_ALPHA,
            logreg: SEMI_LOGREG,
            forest: ForestParams::default(),
        }
    }

    pub fn insurance() -> Self {
        Self {
            reference_counts: Some((26, 50)),
            reference_features: Some(80),
            positive_levels: Some(vec!["Thousand".into()]),
            ..Self::base(NetworkSource::Insurance, "ThisCarCost", &["ThisCarDam", "CarValue", "Theft"])
        }
    }

    pub fn water() -> Self {
        Self {
            reference_counts: Some((32, 66)),
            reference_features: Some(61),
            positive_levels: Some(vec!["0_5_MG_L".into()]),
            ..Self::base(NetworkSource::Water, "CNOD_12_45", &["CBODD_12_30", "CNOD_12_30", "CNON_12_30"])
        }
    }

    /// Built-in spec for a network name, or a bare spec for a file.
    pub fn for_network(source: NetworkSource, outcome: Option<&str>) -> AppResult<Self> {
        let mut spec = match &source {
            NetworkSource::Insurance => Self::insurance(),
            NetworkSource::Water => Self::water(),
            NetworkSource::File(_) => {
                let outcome = outcome.ok_or_else(|| AppError::Usage("a network file needs --outcome".into()))?;
                Self::base(source.clone(), outcome, &[])
            }
        };
        if let Some(o) = outcome {
            if o != spec.outcome {
                spec.outcome = o.into();
                spec.truth_groups.clear();
                spec.reference_features = None;
                spec.positive_levels = None;
            }
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkCounts {
    pub parsed_nodes: usize,
    pub parsed_edges: usize,
    pub dropped: Vec<String>,
    pub kept_nodes: usize,
    pub kept_edges: usize,
    pub feature_columns: usize,
    pub reference_counts: Option<(usize, usize)>,
    pub reference_features: Option<usize>,
    /// Readable notes on every mismatch with the reference counts.
    pub discrepancies: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub rank: usize,
    pub name: String,
    pub variable: String,
    pub score: f64,
    pub truth_group: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiModelResult {
    pub model: ModelKind,
    pub accuracy: f64,
    pub epsilon: f64,
    pub nonzero: usize,
    pub amie_top: Vec<RankedFeature>,
    /// `coefficient` for logistic regression, `permutation-importance` for forests.
    pub baseline: String,
    pub baseline_top: Vec<RankedFeature>,
    pub truth_in_amie_top: usize,
    pub truth_in_baseline_top: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiResult {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub spec: SemiSpec,
    pub counts: NetworkCounts,
    pub positive_levels: Vec<String>,
    pub positive_rate: f64,
    pub models: Vec<SemiModelResult>,
}

impl SemiResult {
    pub fn model(&self, kind: ModelKind) -> Option<&SemiModelResult> {
        self.models.iter().find(|m| m.model == kind)
    }
}

/// Drops the outcome's descendants; returns the reduced net and their names.
pub fn drop_outcome_descendants(net: &DiscreteNet, outcome: &str) -> AppResult<(DiscreteNet, Vec<String>)> {
    let y = net.index_of(outcome).ok_or_else(|| AppError::Usage(format!("network has no variable `{outcome}`")))?;
    let desc = net.descendants(y);
    let names = desc.iter().map(|&v| net.names()[v].clone()).collect();
    let kept = net.without(&desc).context(|| "dropping outcome descendants".into())?;
    Ok((kept, names))
}

/// Owning variable of each one-hot column, in encoding order.
fn column_variables(table: &LevelTable, outcome: &str) -> Vec<String> {
    let mut out = Vec::new();
    for (v, name) in table.names.iter().enumerate() {
        if name != outcome {
            out.extend(std::iter::repeat_n(name.clone(), table.levels[v].len()));
        }
    }
    out
}

fn ranked(
    order: &[usize],
    scores: &[f64],
    names: &[String],
    vars: &[String],
    truth: &[String],
    k: usize,
) -> Vec<RankedFeature> {
    order
        .iter()
        .take(k)
        .enumerate()
        .map(|(pos, &c)| RankedFeature {
            rank: pos + 1,
            name: names[c].clone(),
            variable: vars[c].clone(),
            score: scores[c],
            truth_group: truth.contains(&vars[c]),
        })
        .collect()
}

pub fn run_semisynthetic(spec: &SemiSpec) -> AppResult<SemiResult> {
    if spec.samples < 10 || spec.top_k == 0 || spec.models.is_empty() {
        return Err(AppError::Usage("samples >= 10, top_k >= 1 and one model are required".into()));
    }
    if spec.models.contains(&ModelKind::Oracle) {
        return Err(AppError::Usage("semi-synthetic runs fit trained models only".into()));
    }
    let label = format!("{:?}", spec.network);
    let net = parse_bif(&spec.network.text()?).context(|| label.clone())?;
    let (kept, dropped) = drop_outcome_descendants(&net, &spec.outcome)?;
    for g in &spec.truth_groups {
        if kept.index_of(g).is_none() {
            return Err(AppError::Usage(format!("truth group `{g}` is not a kept variable")));
        }
    }
    let table = kept.sample(spec.samples, derive(spec.seed, &[stream::SAMPLE]));
    let y = table.index_of(&spec.outcome).expect("outcome survives the drop");
    let positive: Vec<String> = match &spec.positive_levels {
        Some(levels) => levels.clone(),
        None => {
            return Err(AppError::Usage(format!(
                "positive levels of `{}` are required; levels are {} (most frequent {})",
                spec.outcome,
                table.levels[y].join(", "),
                table.levels[y][table.most_frequent_level(y)]
            )))
        }
    };
    let pos_refs: Vec<&str> = positive.iter().map(String::as_str).collect();
    let data = one_hot_encode(&table, &spec.outcome, &pos_refs).context(|| "one-hot encoding".into())?;
    let vars = column_variables(&table, &spec.outcome);

    let edges = |n: &DiscreteNet| n.edge_count();
    let mut discrepancies = Vec::new();
    if let Some((rn, re)) = spec.reference_counts {
        if (net.node_count(), edges(&net)) != (rn, re) {
            discrepancies.push(format!(
                "parsed network has {} nodes / {} edges, reference {rn} / {re}",
                net.node_count(),
                edges(&net)
            ));
            if (kept.node_count(), edges(&kept)) != (rn, re) {
                discrepancies.push(format!(
                    "after dropping outcome descendants: {} nodes / {} edges",
                    kept.node_count(),
                    edges(&kept)
                ));
            }
        }
    }
    if let Some(rf) = spec.reference_features {
        if data.n_features() != rf {
            discrepancies.push(format!("{} one-hot feature columns, reference {rf}", data.n_features()));
        }
    }
    let counts = NetworkCounts {
        parsed_nodes: net.node_count(),
        parsed_edges: edges(&net),
        dropped,
        kept_nodes: kept.node_count(),
        kept_edges: edges(&kept),
        feature_columns: data.n_features(),
        reference_counts: spec.reference_counts,
        reference_features: spec.reference_features,
        discrepancies,
    };

    let data = split(&data, spec.train_fraction, derive(spec.seed, &[stream::SPLIT])).context(|| "split".into())?;
    let (train, test) = (data.train(), data.test());
    let names = test.feature_names().to_vec();
    let mut models = Vec::new();
    for &kind in &spec.models {
        let ctx = || format!("{} on {label}", kind.as_str());
        let (model, baseline, baseline_scores): (Box<dyn ProbModel>, &str, Vec<f64>) = match kind {
            ModelKind::LogReg => {
                let m = fit_logreg(&train, &spec.logreg).context(ctx)?;
                let coef = m.coefficients.clone();
                (Box::new(m), "coefficient", coef)
            }
            _ => {
                let params = ForestParams { seed: derive(spec.seed, &[stream::FOREST]), ..spec.forest };
                let m = fit_forest(&train, &params).context(ctx)?;
                let imp =
                    permutation_importance(&m, &test, spec.importance_repeats, derive(spec.seed, &[stream::PERMUTE]))
                        .context(ctx)?;
                (Box::new(m), "permutation-importance", imp)
            }
        };
        let threshold = spec.epsilon.map_or_else(|| Threshold::default_for(kind), Threshold::Absolute);
        let options = ReportOptions { threshold, alpha: spec.alpha, roles: RoleConfig::default() };
        let report = build_report(model.as_ref(), &test, &options, None).context(ctx)?;
        let amies = report.amies();
        let amie_top = ranked(&report.ranking, &amies, &names, &vars, &spec.truth_groups, spec.top_k);
        // importance is signed; coefficients rank by magnitude
        let base_order = if kind == ModelKind::LogReg {
            abs_ranking(&baseline_scores)
        } else {
            let mut o: Vec<usize> = (0..baseline_scores.len()).collect();
            o.sort_by(|&a, &b| baseline_scores[b].total_cmp(&baseline_scores[a]).then(a.cmp(&b)));
            o
        };
        let baseline_top = ranked(&base_order, &baseline_scores, &names, &vars, &spec.truth_groups, spec.top_k);
        models.push(SemiModelResult {
            model: kind,
            accuracy: accuracy(model.as_ref(), &test).context(ctx)?,
            epsilon: report.epsilon,
            nonzero: report.nonzero().len(),
            truth_in_amie_top: amie_top.iter().filter(|r| r.truth_group).count(),
            truth_in_baseline_top: baseline_top.iter().filter(|r| r.truth_group).count(),
            amie_top,
            baseline: baseline.into(),
            baseline_top,
        });
    }
    Ok(SemiResult {
        schema_version: RESULT_SCHEMA_VERSION,
        provenance: Provenance::new(
            spec.seed,
            vec![format!("{} samples", spec.samples), "outcome descendants dropped before sampling".into()],
        ),
        spec: spec.clone(),
        counts,
        positive_rate: data.positive_rate(),
        positive_levels: positive,
        models,
    })
}

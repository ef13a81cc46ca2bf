//! JSON and CSV serialization of result files.
//!
//! JSON holds everything; CSV flattens the tables a spreadsheet needs. Both
//! are written from sorted data with fixed float formatting, so a rerun with
//! the same spec produces the same bytes.

use std::path::{Path, PathBuf};

use amie_core::explain::{AmieReport, REPORT_SCHEMA_VERSION};
use serde::de::DeserializeOwned;
use serde::Serialize;

use super::figures::FigureResult;
use super::inducing::InducingResult;
use super::semi::SemiResult;
use super::synthetic::ExperimentResult;
use super::Stat;
use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "json" => Some(Self::Json),
            "csv" => Some(Self::Csv),
            _ => None,
        }
    }
}

/// A result that can be written as JSON and, optionally, as CSV tables.
pub trait Export: Serialize {
    /// `(file suffix, CSV text)` pairs; empty when only JSON makes sense.
    fn tables(&self) -> AppResult<Vec<(&'static str, String)>> {
        Ok(Vec::new())
    }
}

fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> AppResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|source| AppError::Csv { path: PathBuf::from("<memory>"), source })?;
    }
    let bytes = w.into_inner().map_err(|e| AppError::Invariant(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| AppError::Invariant(e.to_string()))
}

pub fn to_json<T: Serialize>(value: &T) -> AppResult<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|source| AppError::Json { path: PathBuf::from("<memory>"), source })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> AppResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| AppError::Json { path: path.into(), source })
}

fn write(path: &Path, text: &str) -> AppResult<()> {
    std::fs::write(path, text).map_err(|e| AppError::io(path, e))
}

/// Writes `<dir>/<name>.json`, or `<dir>/<name>_<table>.csv` per table.
/// Returns the written paths.
pub fn write_result<T: Export>(dir: &Path, name: &str, format: Format, value: &T) -> AppResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let tables = if format == Format::Csv { value.tables()? } else { Vec::new() };
    if tables.is_empty() {
        let path = dir.join(format!("{name}.json"));
        write(&path, &to_json(value)?)?;
        return Ok(vec![path]);
    }
    let mut out = Vec::new();
    for (suffix, text) in tables {
        let path = dir.join(format!("{name}_{suffix}.csv"));
        write(&path, &text)?;
        out.push(path);
    }
    Ok(out)
}

fn stat_cols(s: Option<Stat>) -> (Option<f64>, Option<f64>) {
    s.map_or((None, None), |s| (Some(s.mean), Some(s.std)))
}

#[derive(Serialize)]
struct SummaryRow {
    nodes: usize,
    density: f64,
    latents: usize,
    model: &'static str,
    replicates: usize,
    single_replicate: bool,
    recall_mean: Option<f64>,
    recall_std: Option<f64>,
    precision_mean: Option<f64>,
    precision_std: Option<f64>,
    recall_filtered_mean: Option<f64>,
    precision_filtered_mean: Option<f64>,
    accuracy_mean: Option<f64>,
    accuracy_std: Option<f64>,
    case1: usize,
    case2: usize,
    case3: usize,
    case3_relaxed: usize,
    unexplained: usize,
    filter_lowered_precision: usize,
}

impl Export for ExperimentResult {
    fn tables(&self) -> AppResult<Vec<(&'static str, String)>> {
        let summary = self.summaries.iter().map(|s| {
            let (recall_mean, recall_std) = stat_cols(s.recall);
            let (precision_mean, precision_std) = stat_cols(s.precision);
            let (accuracy_mean, accuracy_std) = stat_cols(s.accuracy);
            SummaryRow {
                nodes: s.nodes,
                density: s.density,
                latents: s.latents,
                model: s.model.as_str(),
                replicates: s.replicates,
                single_replicate: s.single_replicate,
                recall_mean,
                recall_std,
                precision_mean,
                precision_std,
                recall_filtered_mean: stat_cols(s.recall_filtered).0,
                precision_filtered_mean: stat_cols(s.precision_filtered).0,
                accuracy_mean,
                accuracy_std,
                case1: s.case1,
                case2: s.case2,
                case3: s.case3,
                case3_relaxed: s.case3_relaxed,
                unexplained: s.unexplained,
                filter_lowered_precision: s.filter_lowered_precision,
            }
        });
        Ok(vec![("summary", to_csv(summary)?), ("replicates", to_csv(&self.records)?)])
    }
}

impl Export for InducingResult {
    fn tables(&self) -> AppResult<Vec<(&'static str, String)>> {
        Ok(vec![("cells", to_csv(&self.cells)?), ("replicates", to_csv(&self.rows)?)])
    }
}

#[derive(Serialize)]
struct RankingRow<'a> {
    model: &'static str,
    method: &'a str,
    rank: usize,
    name: &'a str,
    variable: &'a str,
    score: f64,
    truth_group: bool,
}

impl Export for SemiResult {
    fn tables(&self) -> AppResult<Vec<(&'static str, String)>> {
        let mut rows = Vec::new();
        for m in &self.models {
            for (method, list) in [("amie", &m.amie_top), (m.baseline.as_str(), &m.baseline_top)] {
                rows.extend(list.iter().map(|r| RankingRow {
                    model: m.model.as_str(),
                    method,
                    rank: r.rank,
                    name: &r.name,
                    variable: &r.variable,
                    score: r.score,
                    truth_group: r.truth_group,
                }));
            }
        }
        Ok(vec![("rankings", to_csv(rows)?)])
    }
}

impl Export for FigureResult {
    fn tables(&self) -> AppResult<Vec<(&'static str, String)>> {
        Ok(vec![("summary", to_csv(&self.summaries)?)])
    }
}

#[derive(Serialize)]
struct FeatureRow<'a> {
    schema_version: u32,
    index: usize,
    name: &'a str,
    amie: f64,
    abs_rank: usize,
    nonzero: bool,
    chi_square: f64,
    marginal_p_value: f64,
    degenerate: bool,
    filtered: bool,
    defined_rows: usize,
    true_role: &'static str,
    fp_case: &'static str,
}

impl Export for AmieReport {
    fn tables(&self) -> AppResult<Vec<(&'static str, String)>> {
        let rows = self.features.iter().map(|f| FeatureRow {
            schema_version: REPORT_SCHEMA_VERSION,
            index: f.index,
            name: &f.name,
            amie: f.amie,
            abs_rank: f.abs_rank,
            nonzero: f.nonzero,
            chi_square: f.chi_square,
            marginal_p_value: f.marginal_p_value,
            degenerate: f.degenerate,
            filtered: f.filtered,
            defined_rows: f.defined_rows,
            true_role: f.true_role.map_or("", |r| r.as_str()),
            fp_case: f.fp_case.as_ref().map_or("", |c| c.as_str()),
        });
        Ok(vec![("features", to_csv(rows)?)])
    }
}

impl Export for super::verify::GraphEquivalence {}
impl Export for super::verify::ChiSquareCalibration {}
impl Export for super::verify::ParentRecovery {}
impl Export for serde_json::Value {}

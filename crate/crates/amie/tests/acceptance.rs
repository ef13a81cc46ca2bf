//! Acceptance run: one `[PASS]`/`[FAIL]` line per criterion, nonzero exit
//! if any criterion outside `KNOWN_FAILURES` fails. Every result file is produced twice and compared byte for
//! byte for the determinism criterion.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use amie::harness::figures::run_figure_suite;
use amie::harness::inducing::count_inducing_paths;
use amie::harness::output::{write_result, Export, Format};
use amie::harness::semi::{run_semisynthetic, SemiSpec};
use amie::harness::synthetic::{run_grid, ExperimentResult};
use amie::harness::verify::{chi_square_calibration, graph_equivalence, parent_recovery};
use amie::harness::{Cell, ExperimentKind, ExperimentSpec};
use amie::AppResult;
use amie_core::learn::ModelKind;

const SEED: u64 = 0;

/// Criteria that fail on this generator for reasons recorded with the
/// project decisions; they still print `[FAIL]` but do not fail the run
/// unless `AMIE_ACCEPTANCE_STRICT` is set.
const KNOWN_FAILURES: &[u32] = &[7];

struct Outcome {
    results: Vec<(u32, bool, String)>,
}

impl Outcome {
    fn report(&mut self, id: u32, pass: bool, detail: String) {
        println!("[{}] criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.results.push((id, pass, detail));
    }
}

fn save<T: Export>(dir: &Path, name: &str, value: &T) -> AppResult<()> {
    write_result(dir, name, Format::Json, value).map(drop)
}

fn mean_recall(res: &ExperimentResult, cell: Cell, model: ModelKind) -> f64 {
    res.summary(cell, model).and_then(|s| s.recall).map_or(f64::NAN, |s| s.mean)
}

fn mean_accuracy(res: &ExperimentResult, cell: Cell, model: ModelKind) -> f64 {
    res.summary(cell, model).and_then(|s| s.accuracy).map_or(f64::NAN, |s| s.mean)
}

fn cell(nodes: usize, density: f64, latents: usize) -> Cell {
    Cell { nodes, density, latents }
}

/// Replicates where recall at `hi` latents is at most recall at `lo`, out of
/// those where both are defined.
fn paired_non_increasing(res: &ExperimentResult, lo: Cell, hi: Cell, model: ModelKind) -> (usize, usize) {
    let low: Vec<_> = res.records_for(lo, model).map(|r| (r.replicate, r.recall)).collect();
    let (mut ok, mut total) = (0, 0);
    for r in res.records_for(hi, model) {
        if let (Some(h), Some(&(_, Some(l)))) = (r.recall, low.iter().find(|(k, _)| *k == r.replicate)) {
            total += 1;
            ok += usize::from(h <= l);
        }
    }
    (ok, total)
}

fn timed<T>(f: impl FnOnce() -> AppResult<T>) -> AppResult<(T, Duration)> {
    let t = Instant::now();
    f().map(|v| (v, t.elapsed()))
}

/// Runs every criterion, writing its result files into `dir`. Only the
/// first pass reports.
fn run_all(dir: &Path, out: &mut Option<&mut Outcome>) -> AppResult<()> {
    let mut report = |id, pass, detail: String| {
        if let Some(o) = out.as_deref_mut() {
            o.report(id, pass, detail);
        }
    };

    let (r, t) = timed(|| parent_recovery(50, 1000, SEED))?;
    save(dir, "c1_parents", &r)?;
    report(
        1,
        r.exact_rate >= 0.95 && t < Duration::from_secs(120),
        format!("oracle non-zero set equals parent set on {}/{} nets ({:.1?})", r.exact, r.nets, t),
    );

    let spec = ExperimentSpec::desk(ExperimentKind::NoLatent);
    let (res, t) = timed(|| run_grid(&spec, None))?;
    res.verify()?;
    save(dir, "c2_no_latent", &res)?;
    let c = cell(40, 2.0, 0);
    let (lr, rf) = (mean_recall(&res, c, ModelKind::LogReg), mean_recall(&res, c, ModelKind::RandomForest));
    report(
        2,
        lr >= 0.90 && rf >= 0.90 && t < Duration::from_secs(600),
        format!("no-latent mean recall LR {lr:.3}, RF {rf:.3} (need >= 0.90; {t:.1?})"),
    );

    let spec = ExperimentSpec { latents: vec![2, 6], ..ExperimentSpec::desk(ExperimentKind::ConnectedLatent) };
    let res = run_grid(&spec, None)?;
    res.verify()?;
    save(dir, "c3_connected_latent", &res)?;
    let (l2, l6) = (cell(40, 2.0, 2), cell(40, 2.0, 6));
    let lr = mean_recall(&res, l2, ModelKind::LogReg);
    let (ok, total) = paired_non_increasing(&res, l2, l6, ModelKind::LogReg);
    let (rf_ok, rf_total) = paired_non_increasing(&res, l2, l6, ModelKind::RandomForest);
    report(
        3,
        lr >= 0.85 && ok >= 7,
        format!(
            "l=2 mean recall LR {lr:.3} (need >= 0.85), RF {:.3}, oracle {:.3}; recall(l=6) <= recall(l=2) in {ok}/{total} LR pairs, {rf_ok}/{rf_total} RF pairs (need >= 7)",
            mean_recall(&res, l2, ModelKind::RandomForest),
            mean_recall(&res, l2, ModelKind::Oracle),
        ),
    );
    let oracle: Vec<_> = res.records.iter().filter(|r| r.model == ModelKind::Oracle).collect();
    let unexplained: usize = oracle.iter().map(|r| r.unexplained).sum();
    report(
        5,
        unexplained == 0 && !oracle.is_empty(),
        format!("{unexplained} unexplained non-zero role-Other features over {} oracle replicates", oracle.len()),
    );

    let spec = ExperimentSpec { latents: vec![2, 6], ..ExperimentSpec::desk(ExperimentKind::StandaloneLatent) };
    let res = run_grid(&spec, None)?;
    res.verify()?;
    save(dir, "c4_standalone", &res)?;
    let (l2, l6) = (cell(40, 4.0, 2), cell(40, 4.0, 6));
    let m = ModelKind::LogReg;
    let (a2, a6, r2, r6) =
        (mean_accuracy(&res, l2, m), mean_accuracy(&res, l6, m), mean_recall(&res, l2, m), mean_recall(&res, l6, m));
    let rf = ModelKind::RandomForest;
    report(
        4,
        a6 < a2 && r6 < r2,
        format!(
            "standalone LR accuracy {a2:.3} -> {a6:.3}, recall {r2:.3} -> {r6:.3}; RF accuracy {:.3} -> {:.3}, recall {:.3} -> {:.3}",
            mean_accuracy(&res, l2, rf),
            mean_accuracy(&res, l6, rf),
            mean_recall(&res, l2, rf),
            mean_recall(&res, l6, rf),
        ),
    );

    let fig = run_figure_suite(100, 10_000, 0.05, SEED)?;
    save(dir, "c6_figures", &fig)?;
    let detail: Vec<String> =
        fig.summaries.iter().map(|s| format!("{} {}/{}", s.world.name(), s.correct, s.runs)).collect();
    report(
        6,
        fig.summaries.iter().all(|s| s.correct_rate >= 0.9),
        format!("filter on the correct side: {} (need >= 90%)", detail.join(", ")),
    );

    let res = count_inducing_paths(&ExperimentSpec::desk(ExperimentKind::InducingPathCount))?;
    res.verify()?;
    save(dir, "c7_inducing_count", &res)?;
    let latent_cells: Vec<_> = res.cells.iter().filter(|c| c.latents > 0).collect();
    let worst = latent_cells.iter().max_by_key(|c| c.dags_with_path).expect("grid has latent cells");
    let over = latent_cells.iter().filter(|c| c.dags_with_path > 20).count();
    let zero_ok = res.cells.iter().filter(|c| c.latents == 0).all(|c| c.dags_with_path == 0);
    report(
        7,
        over == 0 && zero_ok,
        format!(
            "{over}/{} latent cells exceed 20 DAGs per 100 (max {} at nodes={} d={} l={}); l=0 cells all zero: {zero_ok}",
            latent_cells.len(),
            worst.dags_with_path,
            worst.nodes,
            worst.density,
            worst.latents
        ),
    );

    let g = graph_equivalence(1000, SEED)?;
    save(dir, "c8_graph", &g)?;
    report(
        8,
        g.dsep_disagreements == 0 && g.inducing_disagreements == 0,
        format!(
            "{} DAGs: d-separation {}/{} and inducing {}/{} disagreements",
            g.dags, g.dsep_disagreements, g.dsep_queries, g.inducing_disagreements, g.inducing_queries
        ),
    );

    let c = chi_square_calibration(10_000, 1000, 0.05, SEED)?;
    save(dir, "c9_chi_square", &c)?;
    let p_rel = (c.fixture_p_value - 7.7e-6).abs() / 7.7e-6;
    report(
        9,
        (c.rejection_rate - 0.05).abs() <= 0.02 && (c.fixture_statistic - 20.0).abs() <= 1e-9 && p_rel <= 0.1,
        format!(
            "rejection rate {:.4}; fixture statistic {} p {:.3e} ({:.1}% from 7.7e-6)",
            c.rejection_rate,
            c.fixture_statistic,
            c.fixture_p_value,
            100.0 * p_rel
        ),
    );

    let spec = SemiSpec { models: vec![ModelKind::LogReg], ..SemiSpec::insurance() };
    let res = run_semisynthetic(&spec)?;
    save(dir, "c10_insurance", &res)?;
    let lr = res.model(ModelKind::LogReg).expect("LR was requested");
    let top3: Vec<&str> = lr.amie_top.iter().take(3).map(|r| r.name.as_str()).collect();
    report(
        10,
        lr.truth_in_amie_top >= 4 && lr.amie_top.len() >= 3 && top3.iter().all(|n| n.starts_with("ThisCarDam_")),
        format!(
            "{} truth columns in LR top 10 (need >= 4); top 3 {top3:?}; {}",
            lr.truth_in_amie_top,
            res.counts.discrepancies.join("; ")
        ),
    );
    Ok(())
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut outcome = Outcome { results: Vec::new() };
    let (a, b) = (tempfile::tempdir().expect("temp dir"), tempfile::tempdir().expect("temp dir"));
    let run = run_all(a.path(), &mut Some(&mut outcome)).and_then(|()| run_all(b.path(), &mut None));
    if let Err(e) = run {
        eprintln!("acceptance run aborted: {e}");
        return ExitCode::FAILURE;
    }

    let mut names: Vec<_> =
        std::fs::read_dir(a.path()).expect("listing results").map(|e| e.expect("dir entry").file_name()).collect();
    names.sort();
    let differing: Vec<String> = names
        .iter()
        .filter(|n| std::fs::read(a.path().join(n)).ok() != std::fs::read(b.path().join(n)).ok())
        .map(|n| n.to_string_lossy().into_owned())
        .collect();
    outcome.report(
        11,
        differing.is_empty() && names.len() == 9,
        format!("{} result files rerun with seed {SEED}; differing: {differing:?}", names.len()),
    );

    outcome.results.sort_by_key(|r| r.0);
    let failed: Vec<u32> = outcome.results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    println!(
        "{} of {} criteria passed in {:.0?}{}",
        outcome.results.len() - failed.len(),
        outcome.results.len(),
        start.elapsed(),
        if failed.is_empty() { String::new() } else { format!("; failed: {failed:?}") }
    );
    for id in KNOWN_FAILURES.iter().filter(|id| !failed.contains(id)) {
        println!("note: criterion {id} is listed as a known failure but passed");
    }
    let strict = std::env::var_os("AMIE_ACCEPTANCE_STRICT").is_some();
    let blocking: Vec<u32> = failed.into_iter().filter(|id| strict || !KNOWN_FAILURES.contains(id)).collect();
    if blocking.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("blocking failures: {blocking:?}");
        ExitCode::FAILURE
    }
}

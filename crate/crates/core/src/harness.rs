//! Experiment orchestration: run cells of a (method, seed) grid, resume from
//! files on disk, and assemble comparison reports.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::AcquisitionConfig;
use crate::error::{Error, Result};
use crate::init::{InitMethod, InitializerSpec, OasiParams};
use crate::mobo::{run_mobo, write_archive_jsonl, write_progression_csv, FairnessMode, RunOptions, RunRecord};
use crate::objectives::{Bounds, ObjectiveProblem};
use crate::pareto::{generational_distance, hypervolume_2d, non_dominated_with_ids, rank_tchebycheff, ParetoFront, ProgressPoint};
use crate::space::ConfigId;
use crate::stats::{compare_methods, median, Outcome, StatReport};

/// Environment variable naming the default output root.
pub const OUTPUT_ENV: &str = "MOBO_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "mobo-output";

/// `explicit`, else `$MOBO_OUTPUT_DIR`, else `./mobo-output`.
pub fn resolve_output_dir(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os(OUTPUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

fn default_methods() -> Vec<InitMethod> {
    InitMethod::ALL.to_vec()
}
fn default_seeds() -> Vec<u64> {
    (1..=10).collect()
}
fn default_budget() -> usize {
    60
}
fn default_n_init() -> usize {
    10
}
fn default_checkpoint() -> usize {
    1
}
fn default_top_n() -> usize {
    5
}
fn default_problem() -> String {
    "kws".into()
}
/// Chains sized to spend half of the default budget.
pub fn default_experiment_oasi() -> OasiParams {
    OasiParams { n_chains: 3, n_iter: 9, ..OasiParams::default() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_problem")]
    pub problem: String,
    #[serde(default = "default_methods")]
    pub methods: Vec<InitMethod>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_budget")]
    pub budget: usize,
    /// Surrogate seed-set size shared by every method.
    #[serde(default = "default_n_init")]
    pub n_init: usize,
    #[serde(default = "default_experiment_oasi")]
    pub oasi: OasiParams,
    #[serde(default)]
    pub sobol_scramble: bool,
    /// Full initializer overrides keyed by method name.
    #[serde(default)]
    pub initializers: BTreeMap<InitMethod, InitializerSpec>,
    #[serde(default)]
    pub fairness: FairnessMode,
    #[serde(default)]
    pub acquisition: AcquisitionConfig,
    #[serde(default = "default_checkpoint")]
    pub checkpoint_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; `None` uses available parallelism.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_top_n")]
    pub top_n: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn initializer(&self, method: InitMethod) -> InitializerSpec {
        if let Some(spec) = self.initializers.get(&method) {
            return spec.clone();
        }
        let mut spec = InitializerSpec::new(method, self.n_init);
        match method {
            InitMethod::Oasi => spec.oasi = Some(self.oasi.clone()),
            InitMethod::Sobol => spec.scramble = self.sobol_scramble,
            _ => {}
        }
        spec
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            acquisition: self.acquisition.clone(),
            fairness: self.fairness,
            checkpoint_every: self.checkpoint_every,
        }
    }

    pub fn problem(&self) -> Result<ObjectiveProblem> {
        ObjectiveProblem::by_name(&self.problem)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        self.problem()?;
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.methods.iter().collect::<HashSet<_>>().len() != self.methods.len() {
            return bad("methods must be distinct".into());
        }
        if self.seeds.iter().collect::<HashSet<_>>().len() != self.seeds.len() {
            return bad("seeds must be distinct".into());
        }
        if self.checkpoint_every == 0 {
            return bad("checkpoint_every must be positive".into());
        }
        if self.top_n == 0 {
            return bad("top_n must be positive".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be positive".into());
        }
        if self.acquisition.pool_size == 0 || self.acquisition.ref_margin.is_nan() || self.acquisition.ref_margin < 0.0 {
            return bad("pool_size must be positive and ref_margin nonnegative".into());
        }
        for &m in &self.methods {
            let spec = self.initializer(m);
            if spec.method != m {
                return bad(format!("initializer override for `{m}` has method `{}`", spec.method));
            }
            spec.validate()?;
            let total = self.fairness.effective_budget(&spec, self.budget);
            if total <= spec.evaluation_cost() {
                return Err(Error::BudgetTooSmall { budget: total, init_cost: spec.evaluation_cost() });
            }
        }
        Ok(())
    }
}

/// File locations of one (method, seed) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellPaths {
    pub record: PathBuf,
    pub archive: PathBuf,
    pub progression: PathBuf,
    pub timing: PathBuf,
}

impl CellPaths {
    pub fn new(dir: &Path, method: &str, seed: u64) -> Self {
        let stem = format!("{method}_seed{seed}");
        Self {
            record: dir.join(format!("{stem}.json")),
            archive: dir.join(format!("{stem}.jsonl")),
            progression: dir.join(format!("{stem}_progression.csv")),
            timing: dir.join(format!("{stem}_timing.json")),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Timing {
    wall_time_s: f64,
}

/// Writes the record JSON, archive JSONL and progression CSV, all
/// deterministic for a given cell.
pub fn write_run_files(problem: &ObjectiveProblem, record: &RunRecord, paths: &CellPaths) -> Result<()> {
    if let Some(dir) = paths.record.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut json = serde_json::to_string_pretty(record)?;
    json.push('\n');
    fs::write(&paths.record, json)?;
    let mut out = BufWriter::new(fs::File::create(&paths.archive)?);
    write_archive_jsonl(&problem.space, &record.archive, &mut out)?;
    std::io::Write::flush(&mut out)?;
    write_progression_csv(&record.progression, fs::File::create(&paths.progression)?)?;
    Ok(())
}

/// Sidecar holding the real elapsed time, which varies between invocations.
pub fn write_timing(record: &RunRecord, paths: &CellPaths) -> Result<()> {
    fs::write(&paths.timing, serde_json::to_string(&Timing { wall_time_s: record.wall_time_s })?)?;
    Ok(())
}

/// Loads a record and its timing sidecar (if present).
pub fn load_run_record(path: &Path) -> Result<RunRecord> {
    let mut record: RunRecord = serde_json::from_str(&fs::read_to_string(path)?)?;
    record.validate()?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    let timing = path.with_file_name(format!("{stem}_timing.json"));
    if let Ok(text) = fs::read_to_string(timing) {
        if let Ok(t) = serde_json::from_str::<Timing>(&text) {
            record.wall_time_s = t.wall_time_s;
        }
    }
    Ok(record)
}

/// Whether the stored record was produced by exactly this cell definition.
fn matches_cell(r: &RunRecord, problem: &str, spec: &InitializerSpec, seed: u64, budget: usize, opts: &RunOptions) -> bool {
    r.problem == problem && r.seed == seed && r.nominal_budget == budget && &r.initializer == spec && &r.options == opts
}

/// Runs one cell, or reuses a complete matching record already on disk.
///
/// A missing, corrupt or mismatched record is recomputed unless `strict`,
/// in which case a corrupt or mismatched one is an error.
pub fn run_cell(
    cfg: &ExperimentConfig,
    problem: &ObjectiveProblem,
    method: InitMethod,
    seed: u64,
    runs_dir: &Path,
    strict: bool,
) -> Result<RunRecord> {
    let spec = cfg.initializer(method);
    let opts = cfg.run_options();
    let paths = CellPaths::new(runs_dir, method.as_str(), seed);
    if paths.record.exists() {
        match load_run_record(&paths.record) {
            Ok(r) if matches_cell(&r, &problem.name, &spec, seed, cfg.budget, &opts) && paths.archive.exists() => {
                return Ok(r)
            }
            Ok(_) if strict => {
                return Err(Error::InvalidArgument(format!(
                    "{} does not match the experiment configuration",
                    paths.record.display()
                )))
            }
            Err(e) if strict => return Err(e),
            _ => {}
        }
    }
    let record = run_mobo(problem, &spec, cfg.budget, seed, &opts).map_err(|f| {
        // Keep what was evaluated before the failure.
        let partial = paths.archive.with_extension("partial.jsonl");
        if let Ok(file) = fs::File::create(&partial) {
            let _ = write_archive_jsonl(&problem.space, &f.partial, BufWriter::new(file));
        }
        Error::from(f)
    })?;
    write_run_files(problem, &record, &paths)?;
    write_timing(&record, &paths)?;
    Ok(record)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub method: String,
    pub runs: usize,
    pub median_hv: f64,
    pub median_gd: f64,
    pub median_sim_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub method: String,
    pub seed: u64,
    pub hv: f64,
    pub gd: f64,
    pub sim_time_s: f64,
    pub front_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopRow {
    pub rank: usize,
    pub label: String,
    pub accuracy: f64,
    pub size_mb: f64,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub problem: String,
    pub methods: Vec<String>,
    pub reference_point: (f64, f64),
    pub reference_front_size: usize,
    pub metrics: Vec<MethodMetrics>,
    pub runs: Vec<RunMetrics>,
    /// Present when at least two methods each have three or more seeds.
    pub stats: Option<StatReport>,
    pub top: Vec<TopRow>,
    pub progression: BTreeMap<String, Vec<ProgressPoint>>,
}

fn normalized_front(front: &ParetoFront, bounds: &Bounds) -> Result<ParetoFront> {
    front.normalize(bounds)
}

/// Builds the comparison from finished runs, all on `problem`. Methods keep
/// first-appearance order; runs are sorted by (method order, seed).
pub fn build_report(problem: &ObjectiveProblem, runs: &[RunRecord], top_n: usize) -> Result<ComparisonReport> {
    if runs.is_empty() {
        return Err(Error::Empty("no run records".into()));
    }
    if let Some(r) = runs.iter().find(|r| r.problem != problem.name) {
        return Err(Error::InvalidArgument(format!("run on `{}` mixed into a `{}` report", r.problem, problem.name)));
    }
    let mut methods: Vec<String> = Vec::new();
    for r in runs {
        if !methods.contains(&r.method) {
            methods.push(r.method.clone());
        }
    }
    let mut runs: Vec<&RunRecord> = runs.iter().collect();
    runs.sort_by_key(|r| (methods.iter().position(|m| *m == r.method), r.seed));
    for w in runs.windows(2) {
        if w[0].method == w[1].method && w[0].seed == w[1].seed {
            return Err(Error::InvalidArgument(format!("duplicate run {} seed {}", w[0].method, w[0].seed)));
        }
    }
    let reference_vec = runs[0].options.acquisition.reference();
    if let Some(r) = runs.iter().find(|r| r.options.acquisition.reference() != reference_vec) {
        return Err(Error::InvalidArgument(format!("run {} seed {} uses a different reference point", r.method, r.seed)));
    }
    let bounds = problem.nominal_bounds;

    let union_pts: Vec<_> =
        runs.iter().flat_map(|r| r.final_front.points.iter().map(|p| (p.objectives, p.id))).collect();
    let union = normalized_front(&non_dominated_with_ids(&union_pts)?, &bounds)?;

    let mut run_metrics = Vec::with_capacity(runs.len());
    for r in &runs {
        let front = normalized_front(&r.final_front, &bounds)?;
        let inside: Vec<_> = front.points.iter().copied().filter(|p| p.objectives.strictly_dominates(&reference_vec)).collect();
        let hv = hypervolume_2d(&ParetoFront { points: inside, normalized: true }, &reference_vec)?;
        let gd = generational_distance(&front, &union)?;
        run_metrics.push(RunMetrics {
            method: r.method.clone(),
            seed: r.seed,
            hv,
            gd,
            sim_time_s: r.simulated_time_s,
            front_size: r.final_front.len(),
        });
    }
    let metrics = methods
        .iter()
        .map(|m| {
            let rows: Vec<&RunMetrics> = run_metrics.iter().filter(|x| &x.method == m).collect();
            let col = |f: fn(&RunMetrics) -> f64| median(&rows.iter().map(|x| f(x)).collect::<Vec<_>>());
            MethodMetrics {
                method: m.clone(),
                runs: rows.len(),
                median_hv: col(|x| x.hv),
                median_gd: col(|x| x.gd),
                median_sim_time_s: col(|x| x.sim_time_s),
            }
        })
        .collect();

    let owned: Vec<RunRecord> = runs.iter().map(|r| (*r).clone()).collect();
    let stats = if methods.len() >= 2 && methods.iter().all(|m| owned.iter().filter(|r| &r.method == m).count() >= 3) {
        Some(compare_methods(&owned, Outcome::FinalHv)?)
    } else {
        None
    };

    let top = top_models(problem, &runs, top_n)?;

    let mut progression = BTreeMap::new();
    for m in &methods {
        let curves: Vec<&Vec<ProgressPoint>> = runs.iter().filter(|r| &r.method == m).map(|r| &r.progression).collect();
        progression.insert(m.clone(), average_progression(&curves)?);
    }

    Ok(ComparisonReport {
        problem: problem.name.clone(),
        methods,
        reference_point: (reference_vec.f1, reference_vec.f2),
        reference_front_size: union.len(),
        metrics,
        runs: run_metrics,
        stats,
        top,
        progression,
    })
}

/// Tchebycheff ranking (equal weights, normalized objectives) over every
/// run's final front; a configuration found by several runs is listed once,
/// under the first run that found it.
fn top_models(problem: &ObjectiveProblem, runs: &[&RunRecord], top_n: usize) -> Result<Vec<TopRow>> {
    let bounds = problem.nominal_bounds;
    let mut seen: HashSet<ConfigId> = HashSet::new();
    let mut raw = BTreeMap::new();
    let mut fronts = Vec::new();
    for r in runs {
        let mut pts = Vec::new();
        for p in &r.final_front.points {
            if seen.insert(p.id) {
                raw.insert(p.id, p.objectives);
                pts.push(*p);
            }
        }
        let front = ParetoFront { points: pts, normalized: false }.normalize(&bounds)?;
        fronts.push((format!("{}-s{}", r.method, r.seed), front));
    }
    let ranked = rank_tchebycheff(&fronts, (0.5, 0.5), None)?;
    Ok(ranked
        .into_iter()
        .take(top_n)
        .map(|p| {
            let y = raw[&p.id];
            TopRow {
                rank: p.rank,
                label: format!("{}-{}", p.label, p.id),
                accuracy: if problem.is_kws() { -y.f1 } else { y.f1 },
                size_mb: y.f2 / 1e6,
                score: p.score,
            }
        })
        .collect())
}

/// Pointwise mean of curves sharing the same checkpoints.
pub fn average_progression(curves: &[&Vec<ProgressPoint>]) -> Result<Vec<ProgressPoint>> {
    let Some(first) = curves.first() else {
        return Err(Error::Empty("no progression curves".into()));
    };
    if curves.iter().any(|c| c.len() != first.len() || c.iter().zip(first.iter()).any(|(a, b)| a.eval_index != b.eval_index)) {
        return Err(Error::InvalidArgument("progression checkpoints differ between runs".into()));
    }
    let n = curves.len() as f64;
    Ok((0..first.len())
        .map(|i| {
            let mean = |f: fn(&ProgressPoint) -> f64| curves.iter().map(|c| f(&c[i])).sum::<f64>() / n;
            ProgressPoint {
                eval_index: first[i].eval_index,
                elapsed_s: mean(|p| p.elapsed_s),
                best_acc: mean(|p| p.best_acc),
                hv: mean(|p| p.hv),
                best_j: mean(|p| p.best_j),
            }
        })
        .collect())
}

/// Output rendering of a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Text,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// Sections a report rendering may include.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Section {
    Metrics,
    Dunn,
    Ranking,
    Progression,
}

impl Section {
    pub const ALL: [Section; 4] = [Section::Metrics, Section::Dunn, Section::Ranking, Section::Progression];
}

impl std::str::FromStr for Section {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "metrics" => Ok(Section::Metrics),
            "dunn" => Ok(Section::Dunn),
            "ranking" => Ok(Section::Ranking),
            "progression" => Ok(Section::Progression),
            other => Err(Error::InvalidArgument(format!("unknown section `{other}`"))),
        }
    }
}

fn csv_string(rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

impl ComparisonReport {
    pub fn metrics_csv(&self) -> Result<String> {
        let mut rows = vec![["method", "median_hv", "median_gd", "median_sim_time_s"].map(String::from).to_vec()];
        for m in &self.metrics {
            rows.push(vec![
                m.method.clone(),
                m.median_hv.to_string(),
                m.median_gd.to_string(),
                m.median_sim_time_s.to_string(),
            ]);
        }
        csv_string(rows)
    }

    pub fn ranking_csv(&self) -> Result<String> {
        let mut rows = vec![["rank", "model", "accuracy", "size_mb"].map(String::from).to_vec()];
        for t in &self.top {
            rows.push(vec![t.rank.to_string(), t.label.clone(), t.accuracy.to_string(), t.size_mb.to_string()]);
        }
        csv_string(rows)
    }

    pub fn dunn_csv(&self) -> Result<String> {
        let Some(s) = &self.stats else {
            return Ok(String::new());
        };
        let mut header = vec![String::new()];
        header.extend(s.labels.iter().cloned());
        let mut rows = vec![header];
        for (l, row) in s.labels.iter().zip(&s.dunn_matrix) {
            let mut r = vec![l.clone()];
            r.extend(row.iter().map(|v| v.to_string()));
            rows.push(r);
        }
        csv_string(rows)
    }

    pub fn progression_csv(&self, method: &str) -> Result<String> {
        let mut out = Vec::new();
        write_progression_csv(self.progression.get(method).map(Vec::as_slice).unwrap_or_default(), &mut out)?;
        Ok(String::from_utf8(out).expect("csv output is utf-8"))
    }

    /// Renders the requested sections.
    pub fn render(&self, format: Format, sections: &[Section]) -> Result<String> {
        let mut sections = sections.to_vec();
        sections.sort();
        sections.dedup();
        match format {
            Format::Json => {
                let mut obj = serde_json::Map::new();
                obj.insert("problem".into(), self.problem.clone().into());
                for s in &sections {
                    let (key, value) = match s {
                        Section::Metrics => ("metrics", serde_json::to_value(&self.metrics)?),
                        Section::Dunn => ("stats", serde_json::to_value(&self.stats)?),
                        Section::Ranking => ("ranking", serde_json::to_value(&self.top)?),
                        Section::Progression => ("progression", serde_json::to_value(&self.progression)?),
                    };
                    obj.insert(key.into(), value);
                }
                let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(obj))?;
                s.push('\n');
                Ok(s)
            }
            Format::Csv => {
                let mut out = String::new();
                for s in &sections {
                    match s {
                        Section::Metrics => {
                            out.push_str("# metrics\n");
                            out.push_str(&self.metrics_csv()?);
                        }
                        Section::Dunn => {
                            out.push_str("# dunn\n");
                            out.push_str(&self.dunn_csv()?);
                        }
                        Section::Ranking => {
                            out.push_str("# ranking\n");
                            out.push_str(&self.ranking_csv()?);
                        }
                        Section::Progression => {
                            for m in &self.methods {
                                let _ = writeln!(out, "# progression {m}");
                                out.push_str(&self.progression_csv(m)?);
                            }
                        }
                    }
                }
                Ok(out)
            }
            Format::Text => {
                let mut out = String::new();
                for s in &sections {
                    match s {
                        Section::Metrics => out.push_str(&self.metrics_text()),
                        Section::Dunn => match &self.stats {
                            Some(st) => out.push_str(&st.render_text()),
                            None => out.push_str("Statistics need at least 2 methods with 3 or more seeds each\n"),
                        },
                        Section::Ranking => out.push_str(&self.ranking_text()),
                        Section::Progression => {
                            for m in &self.methods {
                                let last = self.progression[m].last().expect("nonempty progression");
                                let _ = writeln!(
                                    out,
                                    "{m}: mean final hv {:.4} at evaluation {}",
                                    last.hv, last.eval_index
                                );
                            }
                        }
                    }
                    out.push('\n');
                }
                Ok(out)
            }
        }
    }

    fn metrics_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<10} {:>5} {:>10} {:>10} {:>14}", "method", "runs", "HV", "GD", "sim time (s)");
        for m in &self.metrics {
            let _ = writeln!(
                s,
                "{:<10} {:>5} {:>10.4} {:>10.4} {:>14.1}",
                m.method, m.runs, m.median_hv, m.median_gd, m.median_sim_time_s
            );
        }
        s
    }

    fn ranking_text(&self) -> String {
        let w = self.top.iter().map(|t| t.label.len()).max().unwrap_or(5).max(5);
        let mut s = String::new();
        let _ = writeln!(s, "{:>4}  {:<w$}  {:>8}  {:>9}", "rank", "model", "accuracy", "size (MB)");
        for t in &self.top {
            let _ = writeln!(s, "{:>4}  {:<w$}  {:>8.4}  {:>9.4}", t.rank, t.label, t.accuracy, t.size_mb);
        }
        s
    }

    /// Writes the report files into `dir` and returns their paths.
    pub fn write_files(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |name: String, content: String| -> Result<()> {
            let p = dir.join(name);
            fs::write(&p, content)?;
            written.push(p);
            Ok(())
        };
        put("metrics.csv".into(), self.metrics_csv()?)?;
        put("ranking.csv".into(), self.ranking_csv()?)?;
        let mut stats = serde_json::to_string_pretty(&self.stats)?;
        stats.push('\n');
        put("stats.json".into(), stats)?;
        put("dunn.txt".into(), self.render(Format::Text, &[Section::Dunn])?)?;
        put("report.json".into(), self.render(Format::Json, &Section::ALL)?)?;
        put("report.txt".into(), self.render(Format::Text, &Section::ALL)?)?;
        for m in &self.methods {
            put(format!("progression_{m}.csv"), self.progression_csv(m)?)?;
        }
        Ok(written)
    }
}

/// Result of [`compare`]: the report plus where everything was written.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub report: ComparisonReport,
    pub runs: Vec<RunRecord>,
    pub files: Vec<PathBuf>,
}

/// Runs (or resumes) every cell on a worker pool and writes the report under
/// `out/report`; run files go to `out/runs`.
pub fn compare(cfg: &ExperimentConfig, out: &Path, strict: bool) -> Result<Comparison> {
    cfg.validate()?;
    let problem = cfg.problem()?;
    let runs_dir = out.join("runs");
    fs::create_dir_all(&runs_dir)?;
    let cells: Vec<(InitMethod, u64)> =
        cfg.methods.iter().flat_map(|&m| cfg.seeds.iter().map(move |&s| (m, s))).collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let runs: Vec<RunRecord> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(m, s)| run_cell(cfg, &problem, m, s, &runs_dir, strict))
            .collect::<Result<Vec<_>>>()
    })?;
    let report = build_report(&problem, &runs, cfg.top_n)?;
    let report_dir = out.join("report");
    let mut files = report.write_files(&report_dir)?;
    // Real elapsed times vary between invocations, so they live apart from
    // the reproducible report files.
    let mut rows = vec![["method", "seed", "wall_time_s"].map(String::from).to_vec()];
    for r in &runs {
        rows.push(vec![r.method.clone(), r.seed.to_string(), r.wall_time_s.to_string()]);
    }
    let wall = report_dir.join("wall_time.csv");
    fs::write(&wall, csv_string(rows)?)?;
    files.push(wall);
    Ok(Comparison { report, runs, files })
}

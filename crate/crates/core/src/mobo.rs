//! The outer optimizer: initialize, then fit surrogates, propose, evaluate
//! and archive until the budget is spent.

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{propose_next, AcquisitionConfig, AcquisitionState};
use crate::error::{Error, Result};
use crate::gp::GpModel;
use crate::init::{initialize, InitMethod, InitializerSpec};
use crate::objectives::{ObjectiveProblem, ObjectiveVector};
use crate::pareto::{non_dominated_with_ids, normalize_objectives, progression_curves, ParetoFront, ProgressPoint};
use crate::space::{Configuration, SearchSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Init,
    Bo,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Init => "init",
            Phase::Bo => "bo",
        }
    }
}

/// How the budget is shared between initialization and optimization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FairnessMode {
    /// Every evaluation, including annealing chains, counts against `T`.
    #[default]
    EqualTotal,
    /// `T` counts surrogate seed points only; chain evaluations beyond
    /// `n_points` are added on top, so every method gets the same number of
    /// optimization iterations.
    EqualD0,
}

impl FairnessMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            FairnessMode::EqualTotal => "equal-total",
            FairnessMode::EqualD0 => "equal-d0",
        }
    }

    /// Total evaluations a run with nominal budget `budget` performs.
    pub fn effective_budget(&self, spec: &InitializerSpec, budget: usize) -> usize {
        match self {
            FairnessMode::EqualTotal => budget,
            FairnessMode::EqualD0 => budget + spec.evaluation_cost().saturating_sub(spec.n_points),
        }
    }
}

impl std::str::FromStr for FairnessMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal-total" => Ok(FairnessMode::EqualTotal),
            "equal-d0" => Ok(FairnessMode::EqualD0),
            other => Err(Error::InvalidArgument(format!("unknown fairness mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunOptions {
    pub acquisition: AcquisitionConfig,
    pub fairness: FairnessMode,
    pub checkpoint_every: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { acquisition: AcquisitionConfig::default(), fairness: FairnessMode::default(), checkpoint_every: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    /// 1-based evaluation counter.
    pub eval_index: usize,
    pub config: Configuration,
    pub objectives: ObjectiveVector,
    /// Cumulative simulated evaluation cost in seconds.
    pub elapsed_s: f64,
    pub phase: Phase,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub problem: String,
    pub seed: u64,
    /// Evaluations actually performed (after the fairness adjustment).
    pub budget: usize,
    pub nominal_budget: usize,
    pub initializer: InitializerSpec,
    pub options: RunOptions,
    pub init_evaluations: usize,
    /// Initializer returned fewer distinct seed points than requested.
    pub init_short: bool,
    /// Evaluations whose objectives fell outside the nominal bounds.
    pub clamped_count: usize,
    pub simulated_time_s: f64,
    pub archive: Vec<ArchiveEntry>,
    pub final_front: ParetoFront,
    pub progression: Vec<ProgressPoint>,
    /// Real elapsed time; kept out of serialized records so they stay
    /// deterministic.
    #[serde(skip)]
    pub wall_time_s: f64,
}

/// A run that stopped early, with everything evaluated before the error.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub partial: Vec<ArchiveEntry>,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} evaluations)", self.error, self.partial.len())
    }
}

impl std::error::Error for RunFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<RunFailure> for Error {
    fn from(f: RunFailure) -> Self {
        f.error
    }
}

fn fail(error: Error, partial: &[ArchiveEntry]) -> RunFailure {
    RunFailure { error, partial: partial.to_vec() }
}

/// Runs one optimization. Initialization and the optimization phase draw
/// from separate ChaCha8 streams keyed by `seed`.
pub fn run_mobo(
    problem: &ObjectiveProblem,
    spec: &InitializerSpec,
    budget: usize,
    seed: u64,
    options: &RunOptions,
) -> std::result::Result<RunRecord, RunFailure> {
    let start = Instant::now();
    let prelim = |e: Error| fail(e, &[]);
    spec.validate().map_err(prelim)?;
    problem.nominal_bounds.validate().map_err(prelim)?;
    if options.checkpoint_every == 0 {
        return Err(prelim(Error::InvalidArgument("checkpoint_every must be positive".into())));
    }
    let init_cost = spec.evaluation_cost();
    let total = options.fairness.effective_budget(spec, budget);
    if total <= init_cost {
        return Err(prelim(Error::BudgetTooSmall { budget: total, init_cost }));
    }
    let space = &problem.space;
    let bounds = problem.nominal_bounds;
    let reference = options.acquisition.reference();

    let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
    init_rng.set_stream(0);
    let mut bo_rng = ChaCha8Rng::seed_from_u64(seed);
    bo_rng.set_stream(1);

    let init = initialize(problem, spec, &mut init_rng).map_err(prelim)?;
    let mut archive: Vec<ArchiveEntry> = Vec::with_capacity(total);
    let mut elapsed = 0.0;
    for (cfg, y) in &init.archive.entries {
        elapsed += problem.eval_cost_seconds(cfg);
        archive.push(ArchiveEntry {
            eval_index: archive.len() + 1,
            config: cfg.clone(),
            objectives: *y,
            elapsed_s: elapsed,
            phase: Phase::Init,
        });
    }

    let mut clamped = 0usize;
    let mut normalized = Vec::with_capacity(total);
    for e in &archive {
        let (n, c) = normalize_objectives(&e.objectives, &bounds).map_err(|e| fail(e, &archive))?;
        clamped += c as usize;
        normalized.push(n);
    }
    let mut train_x = Vec::new();
    let mut train_y = Vec::new();
    for &i in &init.seed_indices {
        train_x.push(space.encode(&archive[i].config).map_err(|e| fail(e, &archive))?);
        train_y.push(normalized[i]);
    }
    let mut evaluated: HashSet<_> = archive.iter().map(|e| e.config.id()).collect();

    while archive.len() < total {
        let mut step = || -> Result<(Configuration, ObjectiveVector)> {
            let y1: Vec<f64> = train_y.iter().map(|y: &ObjectiveVector| y.f1).collect();
            let y2: Vec<f64> = train_y.iter().map(|y: &ObjectiveVector| y.f2).collect();
            let m1 = GpModel::fit(&train_x, &y1)?;
            let m2 = GpModel::fit(&train_x, &y2)?;
            let state = AcquisitionState::from_points(&normalized, reference)?;
            let proposal = propose_next(space, &evaluated, (&m1, &m2), &state, &options.acquisition, &mut bo_rng)?;
            let y = problem.evaluate(&proposal.config)?;
            Ok((proposal.config, y))
        };
        let (cfg, y) = step().map_err(|e| fail(e, &archive))?;
        let (n, c) = normalize_objectives(&y, &bounds).map_err(|e| fail(e, &archive))?;
        clamped += c as usize;
        train_x.push(space.encode(&cfg).map_err(|e| fail(e, &archive))?);
        train_y.push(n);
        normalized.push(n);
        evaluated.insert(cfg.id());
        elapsed += problem.eval_cost_seconds(&cfg);
        archive.push(ArchiveEntry {
            eval_index: archive.len() + 1,
            config: cfg,
            objectives: y,
            elapsed_s: elapsed,
            phase: Phase::Bo,
        });
    }

    let finish = || -> Result<(ParetoFront, Vec<ProgressPoint>)> {
        let front = final_front(&archive)?;
        let entries: Vec<_> = archive.iter().map(|e| (e.eval_index, e.elapsed_s, e.objectives)).collect();
        let progression = progression_curves(&entries, &bounds, &reference, options.checkpoint_every)?;
        Ok((front, progression))
    };
    let (final_front, progression) = finish().map_err(|e| fail(e, &archive))?;
    Ok(RunRecord {
        method: spec.method.as_str().to_string(),
        problem: problem.name.clone(),
        seed,
        budget: total,
        nominal_budget: budget,
        initializer: spec.clone(),
        options: options.clone(),
        init_evaluations: init_cost,
        init_short: init.short,
        clamped_count: clamped,
        simulated_time_s: elapsed,
        archive,
        final_front,
        progression,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Non-dominated subset of the raw archive objectives.
pub fn final_front(archive: &[ArchiveEntry]) -> Result<ParetoFront> {
    let pts: Vec<_> = archive.iter().map(|e| (e.objectives, e.config.id())).collect();
    non_dominated_with_ids(&pts)
}

impl RunRecord {
    pub fn method_kind(&self) -> InitMethod {
        self.initializer.method
    }

    pub fn objectives(&self) -> Vec<ObjectiveVector> {
        self.archive.iter().map(|e| e.objectives).collect()
    }

    /// Checks the structural invariants a record must satisfy.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(format!("corrupt run record: {m}")));
        if self.archive.len() != self.budget {
            return bad(format!("{} archive entries for budget {}", self.archive.len(), self.budget));
        }
        let mut last = 0.0;
        for (i, e) in self.archive.iter().enumerate() {
            if e.eval_index != i + 1 {
                return bad(format!("entry {i} has index {}", e.eval_index));
            }
            if e.elapsed_s < last {
                return bad(format!("elapsed time decreases at index {}", e.eval_index));
            }
            last = e.elapsed_s;
        }
        if final_front(&self.archive)? != self.final_front {
            return bad("final front does not match archive".into());
        }
        if self.progression.is_empty() {
            return bad("empty progression".into());
        }
        Ok(())
    }
}

/// One archive entry per line:
/// `{"index":..,"phase":..,"config":{..},"f1":..,"f2":..,"elapsed_s":..}`.
pub fn write_archive_jsonl<W: Write>(space: &SearchSpace, archive: &[ArchiveEntry], mut out: W) -> Result<()> {
    for e in archive {
        let line = serde_json::json!({
            "index": e.eval_index,
            "phase": e.phase.as_str(),
            "config": space.to_json_object(&e.config),
            "f1": e.objectives.f1,
            "f2": e.objectives.f2,
            "elapsed_s": e.elapsed_s,
        });
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct JsonlLine {
    index: usize,
    phase: Phase,
    config: serde_json::Map<String, serde_json::Value>,
    f1: f64,
    f2: f64,
    elapsed_s: f64,
}

pub fn read_archive_jsonl<R: BufRead>(space: &SearchSpace, input: R) -> Result<Vec<ArchiveEntry>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let l: JsonlLine = serde_json::from_str(&line)?;
        out.push(ArchiveEntry {
            eval_index: l.index,
            config: space.from_json_object(&l.config)?,
            objectives: ObjectiveVector::new(l.f1, l.f2),
            elapsed_s: l.elapsed_s,
            phase: l.phase,
        });
    }
    Ok(out)
}

pub const PROGRESSION_HEADER: [&str; 5] = ["eval_index", "elapsed_s", "best_acc", "hv", "best_J"];

pub fn write_progression_csv<W: Write>(points: &[ProgressPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROGRESSION_HEADER)?;
    for p in points {
        w.write_record([
            p.eval_index.to_string(),
            p.elapsed_s.to_string(),
            p.best_acc.to_string(),
            p.hv.to_string(),
            p.best_j.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mobo_core::harness::{
    self, load_run_record, resolve_output_dir, write_run_files, CellPaths, Format, Section, OUTPUT_ENV,
};
use mobo_core::mobo::{run_mobo, write_archive_jsonl};
use mobo_core::objectives::PROBLEM_NAMES;
use mobo_core::{ExperimentConfig, FairnessMode, InitMethod, ObjectiveProblem, RunRecord};

#[derive(Parser)]
#[command(name = "mobo", version, about = "Multi-objective BO experiments with pluggable initial designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one optimization run and write its record, archive and progression.
    Run(RunArgs),
    /// Run every (method, seed) cell of an experiment config and write the report.
    Compare(CompareArgs),
    /// Render tables from existing run records.
    Report(ReportArgs),
    /// List the available problems.
    Problems,
    /// Print a problem's search space as JSON.
    Spaces {
        #[arg(long, default_value = "kws")]
        problem: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Base experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    method: InitMethod,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    n_init: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    chain_iters: Option<usize>,
    #[arg(long)]
    t_acc0: Option<f64>,
    #[arg(long)]
    t_size0: Option<f64>,
    #[arg(long)]
    alpha_acc: Option<f64>,
    #[arg(long)]
    alpha_size: Option<f64>,
    /// Digitally shift the Sobol points.
    #[arg(long)]
    scramble: bool,
    #[arg(long)]
    pool_size: Option<usize>,
    #[arg(long)]
    ref_margin: Option<f64>,
    #[arg(long)]
    fairness: Option<FairnessMode>,
    #[arg(long)]
    checkpoint_every: Option<usize>,
    /// Output root; run files go to `<out>/runs`.
    #[arg(long, env = OUTPUT_ENV)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Experiment config (JSON).
    config: PathBuf,
    /// Output root; overrides the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fail on corrupt or mismatched run files instead of re-running them.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Run record files (`*_seed<N>.json`) or directories containing them.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value = "text")]
    format: String,
    /// Comma-separated subset of metrics,dunn,ranking,progression.
    #[arg(long, value_delimiter = ',')]
    sections: Vec<String>,
    #[arg(long, default_value_t = 5)]
    top_n: usize,
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Report(a) => cmd_report(a),
        Command::Problems => cmd_problems(),
        Command::Spaces { problem } => cmd_spaces(&problem),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run_config(a: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(p) => serde_json::from_str(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(p) = &a.problem {
        cfg.problem = p.clone();
    }
    cfg.methods = vec![a.method];
    cfg.seeds = vec![a.seed];
    macro_rules! set {
        ($($flag:ident => $($field:ident).+),* $(,)?) => {
            $(if let Some(v) = a.$flag { cfg.$($field).+ = v; })*
        };
    }
    set!(
        budget => budget,
        n_init => n_init,
        chains => oasi.n_chains,
        chain_iters => oasi.n_iter,
        t_acc0 => oasi.t_acc0,
        t_size0 => oasi.t_size0,
        alpha_acc => oasi.alpha_acc,
        alpha_size => oasi.alpha_size,
        pool_size => acquisition.pool_size,
        ref_margin => acquisition.ref_margin,
        fairness => fairness,
        checkpoint_every => checkpoint_every,
    );
    cfg.sobol_scramble |= a.scramble;
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let cfg = run_config(&a)?;
    let problem = cfg.problem()?;
    let runs_dir = resolve_output_dir(a.out.clone().or_else(|| cfg.output_dir.clone())).join("runs");
    fs::create_dir_all(&runs_dir).with_context(|| format!("creating {}", runs_dir.display()))?;
    let paths = CellPaths::new(&runs_dir, a.method.as_str(), a.seed);
    let record = match run_mobo(&problem, &cfg.initializer(a.method), cfg.budget, a.seed, &cfg.run_options()) {
        Ok(r) => r,
        Err(failure) => {
            let partial = paths.archive.with_extension("partial.jsonl");
            let mut w = BufWriter::new(fs::File::create(&partial)?);
            write_archive_jsonl(&problem.space, &failure.partial, &mut w)?;
            w.flush()?;
            eprintln!("partial archive ({} evaluations) written to {}", failure.partial.len(), partial.display());
            return Err(failure.error.into());
        }
    };
    write_run_files(&problem, &record, &paths)?;
    let last = record.progression.last().expect("progression is nonempty");
    println!(
        "{} seed {} on {}: {} evaluations, hv {:.4}, front {} points, wall {:.2} s",
        record.method,
        record.seed,
        record.problem,
        record.archive.len(),
        last.hv,
        record.final_front.len(),
        record.wall_time_s
    );
    for p in [&paths.record, &paths.archive, &paths.progression] {
        println!("{}", p.display());
    }
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::from_json_file(&a.config).with_context(|| format!("loading {}", a.config.display()))?;
    if a.workers.is_some() {
        cfg.workers = a.workers;
    }
    cfg.validate()?;
    let out = resolve_output_dir(a.out.or_else(|| cfg.output_dir.clone()));
    let cmp = harness::compare(&cfg, &out, a.strict)?;
    print!("{}", cmp.report.render(Format::Text, &[Section::Metrics, Section::Dunn, Section::Ranking])?);
    println!("report written to {}", out.join("report").display());
    Ok(())
}

fn collect_records(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let is_record = |p: &Path| {
        p.extension().is_some_and(|e| e == "json")
            && p.file_stem().and_then(|s| s.to_str()).is_some_and(|s| {
                s.rsplit_once("_seed").is_some_and(|(_, n)| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))
            })
    };
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .with_context(|| format!("listing {}", input.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| is_record(p))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }
    if files.is_empty() {
        bail!("no run records found");
    }
    Ok(files)
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let format: Format = a.format.parse()?;
    let sections = if a.sections.is_empty() {
        Section::ALL.to_vec()
    } else {
        a.sections.iter().map(|s| s.parse()).collect::<Result<Vec<Section>, _>>()?
    };
    let mut runs: Vec<RunRecord> = collect_records(&a.inputs)?
        .iter()
        .map(|p| load_run_record(p).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<_>>()?;
    // Same method order as `compare`, whatever the file order.
    runs.sort_by_key(|r| {
        let rank = r.method.parse::<InitMethod>().ok().and_then(|m| InitMethod::ALL.iter().position(|&x| x == m));
        (rank.unwrap_or(usize::MAX), r.method.clone(), r.seed)
    });
    let problem = ObjectiveProblem::by_name(&runs[0].problem)?;
    let report = harness::build_report(&problem, &runs, a.top_n)?;
    let text = report.render(format, &sections)?;
    match a.output {
        Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_problems() -> Result<()> {
    for name in PROBLEM_NAMES {
        let p = ObjectiveProblem::by_name(name)?;
        let b = p.nominal_bounds;
        println!(
            "{name:<20} dims {:>2}  f1 [{}, {}]  f2 [{}, {}]",
            p.space.len(),
            b.f1.0,
            b.f1.1,
            b.f2.0,
            b.f2.1
        );
    }
    Ok(())
}

fn cmd_spaces(problem: &str) -> Result<()> {
    let p = ObjectiveProblem::by_name(problem)?;
    println!("{}", serde_json::to_string_pretty(&p.space)?);
    Ok(())
}

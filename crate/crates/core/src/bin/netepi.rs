use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use netepi::scenario::{self, stages, Artifact, Scenario, ScenarioConfig};
use netepi::{Error, Result};

#[derive(Parser)]
#[command(name = "netepi", version, about = "Seeded SIRVD epidemic scenarios on contact networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or load the scenario graph and write graph.csv.
    GenerateGraph(StageArgs),
    /// Run every strategy's ensemble and write time series and node states.
    Simulate(StageArgs),
    /// Run the strategy comparison and write summary.json.
    Compare(StageArgs),
    /// Train the node-state classifier and write model.json and embeddings.
    TrainGcn(StageArgs),
    /// Compute attributions and write attributions.csv.
    Explain(StageArgs),
    /// Run the whole pipeline into a fresh run directory with a manifest.
    RunScenario(StageArgs),
    /// Check a run directory against its manifest.
    Verify {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
    /// Print the scenario config JSON schema.
    Schema,
}

#[derive(Args)]
struct StageArgs {
    /// Scenario config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's `root_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress progress messages on stderr.
    #[arg(long)]
    quiet: bool,
}

struct Loaded {
    scenario: Scenario,
    out: PathBuf,
    quiet: bool,
}

fn load(args: &StageArgs) -> Result<Loaded> {
    let mut cfg = ScenarioConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.root_seed = seed;
    }
    let out = match (&args.out, &cfg.output_dir) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => o.clone(),
        (None, None) => return Err(Error::Config("no output directory: pass --out or set output_dir".into())),
    };
    Ok(Loaded {
        scenario: Scenario::new(cfg)?,
        out,
        quiet: args.quiet,
    })
}

fn report(out: &Path, artifacts: &[String]) {
    let doc = serde_json::json!({ "out": out, "artifacts": artifacts });
    println!("{doc}");
}

fn run_stage(args: &StageArgs, name: &str, f: fn(&Scenario, &Path) -> Result<Vec<Artifact>>) -> Result<()> {
    let l = load(args)?;
    if !l.quiet {
        eprintln!("netepi: {name} -> {}", l.out.display());
    }
    let arts = f(&l.scenario, &l.out)?;
    report(&l.out, &arts.into_iter().map(|a| a.path).collect::<Vec<_>>());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenerateGraph(a) => run_stage(&a, "generate-graph", stages::generate_graph),
        Command::Simulate(a) => run_stage(&a, "simulate", stages::simulate),
        Command::Compare(a) => run_stage(&a, "compare", stages::compare),
        Command::TrainGcn(a) => run_stage(&a, "train-gcn", stages::train_gcn),
        Command::Explain(a) => run_stage(&a, "explain", stages::explain),
        Command::RunScenario(a) => {
            let l = load(&a)?;
            let manifest = scenario::run_scenario(l.scenario.config(), &l.out, |stage| {
                if !l.quiet {
                    eprintln!("netepi: {stage}");
                }
            })?;
            let mut names: Vec<String> = manifest.artifacts.into_iter().map(|r| r.path).collect();
            names.push(scenario::MANIFEST_FILE.to_string());
            report(&l.out, &names);
            Ok(())
        }
        Command::Verify { out, quiet } => {
            let m = scenario::verify_run_directory(&out)?;
            if !quiet {
                eprintln!("netepi: {} artifacts verified", m.artifacts.len());
            }
            report(&out, &m.artifacts.into_iter().map(|r| r.path).collect::<Vec<_>>());
            Ok(())
        }
        Command::Schema => {
            print!("{}", scenario::SCENARIO_SCHEMA);
            Ok(())
        }
    }
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "error": { "kind": kind, "message": message } }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim_end(), 2),
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = if matches!(e, Error::Config(_)) { 2 } else { 1 };
            fail(e.kind(), &e.to_string(), code)
        }
    }
}

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use mgx::coverage::check_assumptions;
use mgx::datagen::{
    corrupt, read_dataset, sample_dataset, write_dataset, write_learner_view, BehaviorPolicy, CorruptionSpec, Dataset,
    SliceMode,
};
use mgx::expcli::{
    emit_plots, read_results, run_bench, run_sweep, write_bench_csv, BenchAdversary, BenchConfig, BenchEstimator,
    ExpError, ExperimentConfig, Learner, LearnerKind,
};
use mgx::game::{load_game, ne_backward_induction, save_game, subopt_gap_at_start, GameFile};
use mgx::instances::{build_agnostic_pair, build_tree_pair, random_linear, random_tabular};
use mgx::pmvi::{BonusKind, PmviError};

#[derive(Parser)]
#[command(name = "mgx", version, about = "Robust offline Nash equilibrium learning in zero-sum Markov games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config-driven sweep and write results.csv plus charts.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render SVG charts from a results CSV.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Learning from a dataset file.
    #[command(subcommand)]
    Pmvi(PmviCommand),
    /// Coverage diagnostics.
    #[command(subcommand)]
    Coverage(CoverageCommand),
    /// Instance construction.
    #[command(subcommand)]
    Instances(InstancesCommand),
    /// Dataset sampling and corruption.
    #[command(subcommand)]
    Data(DataCommand),
    /// Robust estimator benchmark on planted problems.
    Bench(BenchArgs),
}

#[derive(Subcommand)]
enum PmviCommand {
    Run(PmviRunArgs),
}

#[derive(Args)]
struct PmviRunArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "scram")]
    estimator: String,
    #[arg(long, default_value = "zero")]
    bonus: String,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Covariance floor for the RLS oracle.
    #[arg(long, default_value_t = 0.0)]
    kappa: f64,
    #[arg(long, default_value_t = 1.0)]
    c_bonus: f64,
    /// Use sample means instead of filtering (filter estimator only).
    #[arg(long)]
    no_filter: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum CoverageCommand {
    Report {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum InstanceKind {
    Tree,
    Agnostic,
    RandomTabular,
    RandomLinear,
}

#[derive(Subcommand)]
enum InstancesCommand {
    Make(MakeArgs),
}

#[derive(Args)]
struct MakeArgs {
    #[arg(long, value_enum)]
    kind: InstanceKind,
    #[arg(long, default_value_t = 3)]
    states: usize,
    #[arg(long, default_value_t = 2)]
    max_actions: usize,
    #[arg(long, default_value_t = 2)]
    min_actions: usize,
    #[arg(long, default_value_t = 3)]
    horizon: usize,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Feature dimension (random-linear).
    #[arg(long)]
    dim: Option<usize>,
    /// Reward gap scale (tree).
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Behavior mass on the first max action (agnostic).
    #[arg(long, default_value_t = 0.2)]
    p: f64,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// Dataset size (agnostic).
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum DataCommand {
    /// Sample K episodes from a game.
    Sample {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Behavior policy JSON (or a JSON object with a `rho` field); uniform if absent.
        #[arg(long)]
        behavior: Option<PathBuf>,
        #[arg(long, default_value = "timestep")]
        mode: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply a corruption spec (JSON) to a dataset.
    Corrupt {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        /// Omit the corruption flags from the output.
        #[arg(long)]
        learner_view: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "scram,rls,filter")]
    estimators: Vec<String>,
    #[arg(long, default_value_t = 5)]
    d: usize,
    #[arg(long, default_value_t = 4000)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.02,0.05,0.1,0.2")]
    epsilons: Vec<f64>,
    #[arg(long, default_value_t = 100.0)]
    magnitude: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value = "outlier")]
    adversary: String,
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                ExpError::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn config_error(e: impl std::fmt::Display) -> ExpError {
    ExpError::Config(e.to_string())
}

fn option_error(e: PmviError) -> ExpError {
    match e {
        PmviError::InvalidConfig(msg) => ExpError::Config(msg),
        other => ExpError::Config(other.to_string()),
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), ExpError> {
    let file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(file, value).map_err(|e| ExpError::Io(e.into()))?;
    Ok(())
}

fn load_data(path: &Path) -> Result<Dataset, ExpError> {
    Ok(read_dataset(BufReader::new(File::open(path)?))?)
}

fn run(command: Command) -> Result<ExitCode, ExpError> {
    match command {
        Command::Sweep { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            std::fs::create_dir_all(&out)?;
            let csv = out.join(cfg.output.csv_name());
            let outcome = run_sweep(&cfg, Some(&csv))?;
            log::info!(
                "{} rows ({} resumed, {} failed) in {}",
                outcome.rows.len(),
                outcome.resumed,
                outcome.failures,
                csv.display()
            );
            match emit_plots(&outcome.rows, &out.join(cfg.output.figures_name())) {
                Ok(_) | Err(ExpError::EmptySelection) => {}
                Err(e) => return Err(e),
            }
            Ok(if outcome.failures > 0 { ExitCode::from(3) } else { ExitCode::SUCCESS })
        }
        Command::Plot { csv, out } => {
            let rows = read_results(&csv)?;
            for path in emit_plots(&rows, &out)? {
                println!("{}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Pmvi(PmviCommand::Run(a)) => {
            let game = load_game(&a.game)?;
            let data = load_data(&a.data)?;
            let learner = Learner {
                kind: a.estimator.parse::<LearnerKind>().map_err(option_error)?,
                bonus: a.bonus.parse::<BonusKind>().map_err(option_error)?,
                kappa: a.kappa,
                c_bonus: a.c_bonus,
                use_filter: !a.no_filter,
            };
            let mg = game.tabular();
            let out = learner.learn(data.observations(), &game.features(), a.epsilon, mg.gamma(), a.delta, a.seed)?;
            let gap = subopt_gap_at_start(mg, &out.pair)?;
            write_json(
                &a.out,
                &json!({
                    "estimator": a.estimator,
                    "bonus": a.bonus,
                    "epsilon": a.epsilon,
                    "delta": a.delta,
                    "seed": a.seed,
                    "subopt": gap,
                    "output": out,
                }),
            )?;
            println!("subopt {gap}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Coverage(CoverageCommand::Report { game, data, out }) => {
            let game = load_game(&game)?;
            let data = load_data(&data)?;
            let ne = ne_backward_induction(game.tabular())?;
            let report = check_assumptions(data.observations(), game.tabular(), &ne.pair)?;
            write_json(&out, &report)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Instances(InstancesCommand::Make(a)) => {
            make_instance(&a)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Data(DataCommand::Sample { game, k, seed, behavior, mode, out }) => {
            let game = load_game(&game)?;
            let mg = game.tabular();
            let rho = match behavior {
                None => BehaviorPolicy::uniform(mg.shape()),
                Some(path) => read_behavior(&path)?,
            };
            let mode: SliceMode = mode.parse()?;
            let d = sample_dataset(mg, &rho, k, seed)?.with_mode(mode);
            write_dataset(BufWriter::new(File::create(&out)?), &d)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Data(DataCommand::Corrupt { data, spec, learner_view, out }) => {
            let d = load_data(&data)?;
            let spec: CorruptionSpec =
                serde_json::from_reader(BufReader::new(File::open(&spec)?)).map_err(config_error)?;
            let c = corrupt(&d, &spec)?;
            let file = BufWriter::new(File::create(&out)?);
            if learner_view {
                write_learner_view(file, c.observations())?;
            } else {
                write_dataset(file, &c)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench(a) => {
            let estimators = a
                .estimators
                .iter()
                .map(|e| match e.as_str() {
                    "scram" => Ok(BenchEstimator::Scram),
                    "rls" => Ok(BenchEstimator::Rls),
                    "filter" => Ok(BenchEstimator::Filter),
                    other => Err(ExpError::Config(format!("unknown estimator '{other}'"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let adversary = match a.adversary.as_str() {
                "outlier" => BenchAdversary::Outlier,
                "tilt" => BenchAdversary::Tilt,
                other => return Err(ExpError::Config(format!("unknown adversary '{other}'"))),
            };
            let cfg = BenchConfig {
                estimators,
                d: a.d,
                n: a.n,
                epsilons: a.epsilons,
                magnitude: a.magnitude,
                gamma: a.gamma,
                adversary,
                seeds: (0..a.seeds).collect(),
            };
            let rows = run_bench(&cfg)?;
            write_bench_csv(BufWriter::new(File::create(&a.out)?), &rows)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn read_behavior(path: &Path) -> Result<BehaviorPolicy, ExpError> {
    let value: serde_json::Value =
        serde_json::from_reader(BufReader::new(File::open(path)?)).map_err(config_error)?;
    let inner = value.get("rho").cloned().unwrap_or(value);
    serde_json::from_value(inner).map_err(config_error)
}

fn sibling(out: &Path, name: &str) -> PathBuf {
    out.parent().unwrap_or(Path::new(".")).join(name)
}

fn make_instance(a: &MakeArgs) -> Result<(), ExpError> {
    match a.kind {
        InstanceKind::RandomTabular => {
            let mg = random_tabular(a.states, a.max_actions, a.min_actions, a.horizon, a.gamma, a.seed)?;
            save_game(&a.out, &GameFile::from(&mg))?;
        }
        InstanceKind::RandomLinear => {
            let d = a.dim.unwrap_or(a.states * a.max_actions * a.min_actions);
            let mg = random_linear(a.states, a.max_actions, a.min_actions, a.horizon, d, a.gamma, a.seed)?;
            save_game(&a.out, &GameFile::from(&mg))?;
        }
        InstanceKind::Tree => {
            let pair = build_tree_pair(a.states, a.max_actions, a.min_actions, a.horizon, a.alpha)?;
            save_game(&a.out, &GameFile::from(&pair.g))?;
            save_game(&sibling(&a.out, &prime_name(&a.out)), &GameFile::from(&pair.g_prime))?;
            let tuples = pair.g.shape().tuples() as f64;
            write_json(
                &sibling(&a.out, "attack.json"),
                &json!({
                    "kind": "tree",
                    "target": pair.target,
                    "alpha": pair.alpha,
                    "q": pair.q,
                    "ne_path": pair.ne_path,
                    "epsilon": 2.0 * pair.alpha / tuples,
                    "rho": pair.rho,
                }),
            )?;
        }
        InstanceKind::Agnostic => {
            let pair = build_agnostic_pair(a.p, a.epsilon, a.n)?;
            save_game(&a.out, &GameFile::from(&pair.g1))?;
            save_game(&sibling(&a.out, &prime_name(&a.out)), &GameFile::from(&pair.g2))?;
            write_json(
                &sibling(&a.out, "attack.json"),
                &json!({
                    "kind": "agnostic",
                    "p": pair.p,
                    "epsilon": pair.epsilon,
                    "n": pair.n,
                    "coupling_law": pair.coupling_law(),
                    "rho": pair.rho,
                }),
            )?;
        }
    }
    Ok(())
}

fn prime_name(out: &Path) -> String {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "g".into());
    format!("{stem}_prime.json")
}

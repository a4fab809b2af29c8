use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use d3c_cli::emit::{git_describe, summarize, write_csv, write_summary};
use d3c_cli::{run_experiment, Algo, Experiment, ExperimentConfig};
use d3c_core::exact::surrogate_fd_error;
use d3c_core::games::{
    jacobian_fd_error, BilinearSimplexGame, ElectionGame, Game, LinearTightnessGame, NashParadoxGame, PdGame,
    TrafficNetwork, UnfairGame,
};
use d3c_core::poa::{cointegration_coeff, harmonic_mean_p, permutation_pvalue};
use d3c_core::MixingMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "d3c", version, about = "Run D3C experiments on analytic games and small RL worlds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// n-player prisoner's dilemma
    Pd(RunArgs),
    /// Four drivers on the fixed Braess network
    Traffic(RunArgs),
    /// Randomly generated Braess networks, one per run
    BraessBatch(RunArgs),
    /// Two-player game whose Nash point is worse than the optimum
    Game1(RunArgs),
    /// Two-player game with an unbounded social optimum
    Game2(RunArgs),
    /// Two parties of two candidates
    Election(RunArgs),
    /// Basin of the cooperative flow in a bilinear simplex game
    Bilinear(RunArgs),
    /// Trust-Your-Brother ring world
    Trust(RunArgs),
    /// Two-agent coins gridworld
    Coins(RunArgs),
    /// Finite-difference checks of every analytic gradient
    Gradcheck {
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long, env = "D3C_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Co-integration of attention trajectories in a record CSV
    Reciprocity {
        csv: PathBuf,
        #[arg(long, default_value_t = 0)]
        agent_i: usize,
        #[arg(long, default_value_t = 1)]
        agent_j: usize,
        #[arg(long, default_value_t = 1000)]
        resamples: usize,
        #[arg(long, env = "D3C_SEED", default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Config file; command-line options override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    algo: Option<Algo>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    /// Master seed; run i uses seed ^ i
    #[arg(long, env = "D3C_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    c: Option<f64>,
    /// Players frozen at the origin
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    no_shortcut: bool,
    /// Run counts of the original figures instead of desk-scale ones
    #[arg(long)]
    paper_scale: bool,
    /// Any config key, e.g. `--set exact.eta_a=0.05`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory for the CSV and JSON files
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn build_config(experiment: Experiment, args: &RunArgs) -> Result<ExperimentConfig, String> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let cfg = ExperimentConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            if cfg.experiment != experiment {
                return Err(format!("config is for {}, not {experiment}", cfg.experiment));
            }
            cfg
        }
        None => ExperimentConfig::defaults(experiment),
    };
    if args.paper_scale
        && matches!(experiment, Experiment::Pd | Experiment::Traffic | Experiment::BraessBatch | Experiment::Trust)
    {
        cfg.runs = 1000;
    }
    let mut set = |k: &str, v: String| cfg.set(k, &v).map_err(|e| e.to_string());
    if let Some(a) = args.algo {
        set("algo", a.to_string())?;
    }
    if let Some(v) = args.runs {
        set("runs", v.to_string())?;
    }
    if let Some(v) = args.steps {
        set("steps", v.to_string())?;
    }
    if let Some(v) = args.seed {
        set("seed", v.to_string())?;
    }
    if let Some(v) = args.n {
        set("game.n", v.to_string())?;
    }
    if let Some(v) = args.c {
        set("game.c", v.to_string())?;
    }
    if let Some(v) = args.m {
        set("game.m", v.to_string())?;
    }
    if let Some(v) = args.kappa {
        set("game.kappa", v.to_string())?;
    }
    if let Some(v) = args.delta {
        set("game.delta", v.to_string())?;
    }
    if args.no_shortcut {
        set("game.shortcut", "false".into())?;
    }
    for o in &args.overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got `{o}`"))?;
        set(k.trim(), v.trim().to_string())?;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn run(experiment: Experiment, args: &RunArgs) -> Result<bool, String> {
    let cfg = build_config(experiment, args)?;
    let output = run_experiment(&cfg).map_err(|e| e.to_string())?;
    fs::create_dir_all(&args.out).map_err(|e| e.to_string())?;
    let stem = format!("{}_{}", cfg.experiment, cfg.algo);
    let csv_path = args.out.join(format!("{stem}.csv"));
    let json_path = args.out.join(format!("{stem}.json"));
    let create = |p: &Path| File::create(p).map(BufWriter::new).map_err(|e| format!("{}: {e}", p.display()));
    write_csv(&output.records, create(&csv_path)?).map_err(|e| e.to_string())?;
    let summary = summarize(&output, git_describe());
    write_summary(&summary, create(&json_path)?).map_err(|e| e.to_string())?;
    for (k, v) in &summary.extras {
        println!("{k} = {v}");
    }
    println!("max_budget_violation = {:e}", summary.max_budget_violation);
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(summary.gates_passed)
}

fn gradcheck(tol: f64, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let games: Vec<(&str, Box<dyn Game>)> = vec![
        ("pd n=2", Box::new(PdGame::new(2, 1.0))),
        ("pd n=10", Box::new(PdGame::new(10, 1.0))),
        ("traffic", Box::new(TrafficNetwork::figure(true))),
        ("traffic no shortcut", Box::new(TrafficNetwork::figure(false))),
        ("game1", Box::new(NashParadoxGame::new(0.5))),
        ("game2", Box::new(UnfairGame::new())),
        ("election", Box::new(ElectionGame::default())),
        ("bilinear", Box::new(BilinearSimplexGame::new(0.0, -0.75, -1.0, 0.0))),
        ("linear", Box::new(LinearTightnessGame::new(0.5))),
    ];
    let mut ok = true;
    for (name, game) in &games {
        let mut worst_jac: f64 = 0.0;
        let mut worst_sur: f64 = 0.0;
        for _ in 0..20 {
            let x: Vec<f64> = (0..game.dim()).map(|_| rng.random_range(0.05..0.95)).collect();
            worst_jac = worst_jac.max(jacobian_fd_error(game.as_ref(), &x, 1e-6));
            let n = game.n_players();
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
                    let s: f64 = w.iter().sum();
                    w.iter().map(|v| v / s).collect()
                })
                .collect();
            let a = MixingMatrix::from_rows(rows).expect("normalized rows");
            for i in 0..n {
                // A large offset keeps the ReLU on its linear piece.
                worst_sur = worst_sur.max(surrogate_fd_error(game.as_ref(), &x, &a, i, 1e3, 1e-6));
            }
        }
        let pass = worst_jac < tol && worst_sur < tol;
        ok &= pass;
        println!(
            "{} {name}: jacobian {worst_jac:.2e}, mixing surrogate {worst_sur:.2e}",
            if pass { "PASS" } else { "FAIL" }
        );
    }
    ok
}

fn reciprocity(path: &Path, ai: usize, aj: usize, resamples: usize, seed: u64) -> Result<(), String> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or(format!("missing column {name}"));
    let (c_run, c_agent, c_att) = (col("run")?, col("agent")?, col("attention")?);
    let mut series: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| e.to_string())?;
        let parse = |c: usize| row[c].parse::<f64>().map_err(|e| format!("{}: {e}", &row[c]));
        let run = parse(c_run)? as usize;
        let agent = parse(c_agent)? as usize;
        let entry = series.entry(run).or_default();
        if agent == ai {
            entry.0.push(parse(c_att)?);
        } else if agent == aj {
            entry.1.push(parse(c_att)?);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pvalues = Vec::new();
    for (run, (t1, t2)) in &series {
        if t1.len() != t2.len() || t1.len() < 3 {
            continue;
        }
        let coef = cointegration_coeff(t1, t2);
        let p = permutation_pvalue(t1, t2, resamples, &mut rng);
        println!("run {run}: coefficient {coef:.4}, p {p:.4}");
        pvalues.push(p);
    }
    if pvalues.is_empty() {
        return Err("no run has usable attention series".into());
    }
    println!("harmonic mean p over {} runs: {:.4}", pvalues.len(), harmonic_mean_p(&pvalues));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let experiment = match &cli.command {
        Command::Pd(a) => Some((Experiment::Pd, a)),
        Command::Traffic(a) => Some((Experiment::Traffic, a)),
        Command::BraessBatch(a) => Some((Experiment::BraessBatch, a)),
        Command::Game1(a) => Some((Experiment::Game1, a)),
        Command::Game2(a) => Some((Experiment::Game2, a)),
        Command::Election(a) => Some((Experiment::Election, a)),
        Command::Bilinear(a) => Some((Experiment::Bilinear, a)),
        Command::Trust(a) => Some((Experiment::Trust, a)),
        Command::Coins(a) => Some((Experiment::Coins, a)),
        _ => None,
    };
    let result = match (experiment, &cli.command) {
        (Some((e, args)), _) => run(e, args),
        (None, Command::Gradcheck { tol, seed }) => Ok(gradcheck(*tol, *seed)),
        (None, Command::Reciprocity { csv, agent_i, agent_j, resamples, seed }) => {
            reciprocity(csv, *agent_i, *agent_j, *resamples, *seed).map(|_| true)
        }
        _ => unreachable!(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("a gate failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

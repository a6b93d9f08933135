use std::io::{self, BufReader};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use svarm::games::BridgeServer;
use svarm::Algorithm;
use svarm_bench::{run_experiment, BenchError, ExperimentConfig, GameSpec};

/// Run Shapley estimators over a grid of budgets and write the errors as CSV.
#[derive(Parser, Debug)]
#[command(name = "bench", version, args_conflicts_with_subcommands = true, subcommand_negates_reqs = true)]
struct Cli {
    /// shoe:n=<even> | airport[:n=<k>] | soug:n=<n>,m=<m>,seed=<s> | table:<path> |
    /// bridge:cmd="<command>" | bridge:tcp=<host:port>
    #[arg(long, required = true)]
    game: Option<GameSpec>,

    /// Comma-separated estimator names.
    #[arg(long, value_delimiter = ',', default_value = "svarm,s-svarm,s-svarm-plus,approshapley")]
    algos: Vec<Algorithm>,

    /// Comma-separated evaluation budgets.
    #[arg(long, value_delimiter = ',', required = true)]
    budgets: Vec<u64>,

    /// Repetitions per (algorithm, budget) cell.
    #[arg(long, default_value_t = 100)]
    reps: u32,

    /// Master seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Output directory for runs.csv, aggregate.csv and timings.csv.
    #[arg(long, default_value = "results")]
    out: PathBuf,

    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Serve a game over the bridge protocol on stdin/stdout.
    Serve {
        #[arg(long)]
        game: GameSpec,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Some(Command::Serve { game }) => serve(&game),
        None => run(cli),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn serve(spec: &GameSpec) -> Result<(), BenchError> {
    let game = spec.build()?;
    let stdin = io::stdin().lock();
    BridgeServer::new(game).serve(BufReader::new(stdin), io::stdout().lock())?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), BenchError> {
    let config = ExperimentConfig {
        game: cli.game.expect("required by clap"),
        algorithms: cli.algos,
        budgets: cli.budgets,
        reps: cli.reps,
        seed: cli.seed,
        threads: cli.threads,
    };
    let result = run_experiment(&config)?;
    for (algo, budget) in &result.skipped {
        eprintln!(
            "skipping {algo} at T={budget}: below its minimum budget of {}",
            algo.min_budget(result.n)
        );
    }
    result.write_csv(&cli.out)?;

    println!("{:<22} {:>8} {:>14} {:>12}", "algo", "T", "mean_mse", "stderr");
    for row in result.aggregate() {
        let stderr = row.stderr.map(|s| format!("{s:.3e}")).unwrap_or_else(|| "-".into());
        println!("{:<22} {:>8} {:>14.6e} {:>12}", row.algo.name(), row.budget, row.mean_mse, stderr);
    }
    println!("wrote {}", cli.out.display());
    Ok(())
}

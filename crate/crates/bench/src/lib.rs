//! Seeded experiment harness: runs estimators over a grid of budgets and
//! repetitions and records the per-run error against reference values.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Instant;

use svarm::games::{load_table_game, AirportGame, BridgeGame, ShoeGame, SougGame};
use svarm::{derive_seed, exact_shapley, seeded_rng, Algorithm, BudgetedGame, Game, ShapleyVector};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("bad game spec `{spec}`: {msg}")]
    GameSpec { spec: String, msg: String },

    #[error("no reference values for `{game}`: no closed form and {n} players is too many to enumerate")]
    NoReference { game: String, n: usize },

    #[error("{algo} failed at T={budget}, repetition {rep}: {source}")]
    Run {
        algo: Algorithm,
        budget: u64,
        rep: u32,
        source: svarm::Error,
    },

    #[error(transparent)]
    Core(#[from] svarm::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;

/// Games that one loaded instance can serve to every worker.
pub type SharedGame = Arc<dyn Game + Send + Sync>;

/// A game named on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GameSpec {
    Shoe { n: usize },
    /// The standard 100-player profile, or its first `n` players.
    Airport { n: Option<usize> },
    Soug { n: usize, m: usize, seed: u64 },
    Table { path: PathBuf },
    BridgeCommand { command: String },
    BridgeTcp { addr: String },
}

fn spec_err(spec: &str, msg: impl Into<String>) -> BenchError {
    BenchError::GameSpec {
        spec: spec.to_string(),
        msg: msg.into(),
    }
}

fn key_values<'a>(spec: &str, params: &'a str) -> Result<Vec<(&'a str, &'a str)>> {
    params
        .split(',')
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| spec_err(spec, format!("expected key=value, found `{p}`")))
        })
        .collect()
}

fn parse_num<T: FromStr>(spec: &str, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| spec_err(spec, format!("`{key}` must be a non-negative integer, found `{value}`")))
}

fn strip_quotes(s: &str) -> &str {
    let s = s.trim();
    for q in ['"', '\''] {
        if let Some(inner) = s.strip_prefix(q).and_then(|r| r.strip_suffix(q)) {
            return inner;
        }
    }
    s
}

impl FromStr for GameSpec {
    type Err = BenchError;

    fn from_str(spec: &str) -> Result<Self> {
        let (kind, params) = spec.split_once(':').unwrap_or((spec, ""));
        match kind.trim() {
            "shoe" => {
                let mut n = None;
                for (k, v) in key_values(spec, params)? {
                    match k {
                        "n" => n = Some(parse_num(spec, k, v)?),
                        _ => return Err(spec_err(spec, format!("unknown shoe parameter `{k}`"))),
                    }
                }
                Ok(GameSpec::Shoe {
                    n: n.ok_or_else(|| spec_err(spec, "shoe needs n"))?,
                })
            }
            "airport" => {
                let mut n = None;
                for (k, v) in key_values(spec, params)? {
                    match k {
                        "n" => n = Some(parse_num(spec, k, v)?),
                        _ => return Err(spec_err(spec, format!("unknown airport parameter `{k}`"))),
                    }
                }
                Ok(GameSpec::Airport { n })
            }
            "soug" => {
                let (mut n, mut m, mut seed) = (None, 50, 0);
                for (k, v) in key_values(spec, params)? {
                    match k {
                        "n" => n = Some(parse_num(spec, k, v)?),
                        "m" => m = parse_num(spec, k, v)?,
                        "seed" => seed = parse_num(spec, k, v)?,
                        _ => return Err(spec_err(spec, format!("unknown soug parameter `{k}`"))),
                    }
                }
                Ok(GameSpec::Soug {
                    n: n.ok_or_else(|| spec_err(spec, "soug needs n"))?,
                    m,
                    seed,
                })
            }
            "table" if !params.is_empty() => Ok(GameSpec::Table {
                path: PathBuf::from(params),
            }),
            "bridge" => {
                if let Some(cmd) = params.strip_prefix("cmd=") {
                    Ok(GameSpec::BridgeCommand {
                        command: strip_quotes(cmd).to_string(),
                    })
                } else if let Some(addr) = params.strip_prefix("tcp=") {
                    Ok(GameSpec::BridgeTcp {
                        addr: strip_quotes(addr).to_string(),
                    })
                } else {
                    Err(spec_err(spec, "bridge needs cmd=\"...\" or tcp=host:port"))
                }
            }
            _ => Err(spec_err(spec, "expected shoe, airport, soug, table or bridge")),
        }
    }
}

impl fmt::Display for GameSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameSpec::Shoe { n } => write!(f, "shoe:n={n}"),
            GameSpec::Airport { n: None } => write!(f, "airport"),
            GameSpec::Airport { n: Some(n) } => write!(f, "airport:n={n}"),
            GameSpec::Soug { n, m, seed } => write!(f, "soug:n={n},m={m},seed={seed}"),
            GameSpec::Table { path } => write!(f, "table:{}", path.display()),
            GameSpec::BridgeCommand { command } => write!(f, "bridge:cmd=\"{command}\""),
            GameSpec::BridgeTcp { addr } => write!(f, "bridge:tcp={addr}"),
        }
    }
}

impl GameSpec {
    /// Bridge games hold a connection each; everything else is shared.
    pub fn is_bridge(&self) -> bool {
        matches!(self, GameSpec::BridgeCommand { .. } | GameSpec::BridgeTcp { .. })
    }

    pub fn build(&self) -> Result<SharedGame> {
        Ok(match self {
            GameSpec::Shoe { n } => Arc::new(ShoeGame::new(*n)?),
            GameSpec::Airport { n: None } => Arc::new(AirportGame::standard()),
            GameSpec::Airport { n: Some(n) } => Arc::new(AirportGame::standard().truncated(*n)?),
            GameSpec::Soug { n, m, seed } => Arc::new(SougGame::generate(&mut seeded_rng(*seed), *n, *m)?),
            GameSpec::Table { path } => Arc::new(load_table_game(path)?),
            GameSpec::BridgeCommand { command } => Arc::new(BridgeGame::spawn(command)?),
            GameSpec::BridgeTcp { addr } => Arc::new(BridgeGame::connect(addr.as_str())?),
        })
    }
}

/// Closed-form values when the game has them, otherwise full enumeration
/// for games small enough to enumerate.
pub fn reference_values(game: &dyn Game, name: &str) -> Result<ShapleyVector> {
    if let Some(phi) = game.closed_form_shapley() {
        return Ok(phi);
    }
    match exact_shapley(game) {
        Err(svarm::Error::TooLarge { n, .. }) => Err(BenchError::NoReference {
            game: name.to_string(),
            n,
        }),
        other => Ok(other?),
    }
}

/// FNV-1a, used to fold the game name into run seeds. Unlike std's hasher
/// its output is fixed across Rust releases.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Seed of one run. Depends only on its own coordinates, so results do not
/// change with thread count or with what else is in the grid.
pub fn run_seed(master: u64, game: &str, algo: Algorithm, budget: u64, rep: u32) -> u64 {
    let algo_index = Algorithm::ALL.iter().position(|&a| a == algo).expect("listed algorithm") as u64;
    derive_seed(master, &[fnv1a(game.as_bytes()), algo_index, budget, rep as u64])
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub game: GameSpec,
    pub algorithms: Vec<Algorithm>,
    pub budgets: Vec<u64>,
    pub reps: u32,
    pub seed: u64,
    /// Worker threads; `None` uses the available parallelism.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub algo: Algorithm,
    pub budget: u64,
    pub rep: u32,
    pub mse: f64,
    /// Evaluations charged (drawn empty coalitions are free).
    pub spent: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub algo: Algorithm,
    pub budget: u64,
    pub mean_mse: f64,
    /// Standard error of the mean; `None` with fewer than two repetitions.
    pub stderr: Option<f64>,
    pub reps: u32,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub game: String,
    pub n: usize,
    pub reference: ShapleyVector,
    /// In grid order: algorithm, then budget, then repetition.
    pub runs: Vec<RunRecord>,
    /// Cells whose budget is below the algorithm's minimum.
    pub skipped: Vec<(Algorithm, u64)>,
}

impl ExperimentResult {
    pub fn aggregate(&self) -> Vec<AggregateRow> {
        let mut rows: Vec<AggregateRow> = Vec::new();
        for chunk in self.runs.chunk_by(|a, b| a.algo == b.algo && a.budget == b.budget) {
            let k = chunk.len() as f64;
            let mean = chunk.iter().map(|r| r.mse).sum::<f64>() / k;
            let stderr = (chunk.len() > 1).then(|| {
                let var = chunk.iter().map(|r| (r.mse - mean).powi(2)).sum::<f64>() / (k - 1.0);
                (var / k).sqrt()
            });
            rows.push(AggregateRow {
                algo: chunk[0].algo,
                budget: chunk[0].budget,
                mean_mse: mean,
                stderr,
                reps: chunk.len() as u32,
            });
        }
        rows
    }

    /// Writes `runs.csv`, `aggregate.csv` and `timings.csv` into `dir`.
    /// The first two depend only on the configuration; wall times live in
    /// the third.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;

        let mut runs = csv::Writer::from_path(dir.join("runs.csv"))?;
        runs.write_record(["game", "algo", "T", "rep", "mse", "spent"])?;
        for r in &self.runs {
            runs.write_record([
                self.game.clone(),
                r.algo.to_string(),
                r.budget.to_string(),
                r.rep.to_string(),
                r.mse.to_string(),
                r.spent.to_string(),
            ])?;
        }
        runs.flush()?;

        let mut agg = csv::Writer::from_path(dir.join("aggregate.csv"))?;
        agg.write_record(["game", "algo", "T", "mean_mse", "stderr", "reps"])?;
        for row in self.aggregate() {
            agg.write_record([
                self.game.clone(),
                row.algo.to_string(),
                row.budget.to_string(),
                row.mean_mse.to_string(),
                row.stderr.map(|s| s.to_string()).unwrap_or_default(),
                row.reps.to_string(),
            ])?;
        }
        agg.flush()?;

        let mut timings = csv::Writer::from_path(dir.join("timings.csv"))?;
        timings.write_record(["game", "algo", "T", "rep", "seconds"])?;
        for r in &self.runs {
            timings.write_record([
                self.game.clone(),
                r.algo.to_string(),
                r.budget.to_string(),
                r.rep.to_string(),
                r.seconds.to_string(),
            ])?;
        }
        timings.flush()?;
        Ok(())
    }
}

struct Task {
    algo: Algorithm,
    budget: u64,
    rep: u32,
}

fn run_one(game: &dyn Game, name: &str, reference: &ShapleyVector, master: u64, task: &Task) -> Result<RunRecord> {
    let wrap = |source| BenchError::Run {
        algo: task.algo,
        budget: task.budget,
        rep: task.rep,
        source,
    };
    let start = Instant::now();
    let mut rng = seeded_rng(run_seed(master, name, task.algo, task.budget, task.rep));
    let mut metered = BudgetedGame::with_limit(game, task.budget);
    let phi = task.algo.run(&mut metered, task.budget, &mut rng).map_err(wrap)?;
    Ok(RunRecord {
        algo: task.algo,
        budget: task.budget,
        rep: task.rep,
        mse: phi.mse(reference),
        spent: metered.spent(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs every (algorithm, budget, repetition) cell. Workers pull cells from
/// a shared counter; each run has its own seed, so the records do not
/// depend on scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let name = config.game.to_string();
    let game = config.game.build()?;
    let n = game.n();
    let reference = reference_values(game.as_ref(), &name)?;

    let mut tasks = Vec::new();
    let mut skipped = Vec::new();
    for &algo in &config.algorithms {
        for &budget in &config.budgets {
            if budget < algo.min_budget(n) {
                skipped.push((algo, budget));
                continue;
            }
            tasks.extend((0..config.reps).map(|rep| Task { algo, budget, rep }));
        }
    }

    let threads = config
        .threads
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, |p| p.get()))
        .clamp(1, tasks.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<RunRecord>>>> = tasks.iter().map(|_| Mutex::new(None)).collect();

    thread::scope(|scope| -> Result<()> {
        let mut workers = Vec::with_capacity(threads);
        for w in 0..threads {
            // bridge games get one connection per worker
            let local = if config.game.is_bridge() && w > 0 {
                config.game.build()?
            } else {
                Arc::clone(&game)
            };
            let (next, slots, tasks, name, reference) = (&next, &slots, &tasks, &name, &reference);
            workers.push(scope.spawn(move || loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(task) = tasks.get(k) else { break };
                let record = run_one(local.as_ref(), name, reference, config.seed, task);
                let failed = record.is_err();
                *slots[k].lock().expect("slot") = Some(record);
                if failed {
                    next.store(tasks.len(), Ordering::Relaxed);
                    break;
                }
            }));
        }
        for w in workers {
            w.join().expect("worker panicked");
        }
        Ok(())
    })?;

    let mut runs = Vec::with_capacity(tasks.len());
    // cells left empty were skipped after a failure, which is reported here
    for slot in slots {
        if let Some(record) = slot.into_inner().expect("slot") {
            runs.push(record?);
        }
    }
    debug_assert_eq!(runs.len(), tasks.len());

    Ok(ExperimentResult {
        game: name,
        n,
        reference,
        runs,
        skipped,
    })
}

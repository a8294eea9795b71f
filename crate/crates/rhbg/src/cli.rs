//! Command-line front end. Exit codes: 0 on success (and on HOLDS-style
//! positive results), 1 for bad input or negative results (FAILS, guarded
//! sizes), 2 for internal errors and cross-check disagreements.

use std::io::{BufRead, Write as _};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_traits::{Signed, Zero};

use crate::analysis::{sweep, sweep_csv};
use crate::avgprop::check_average_property;
use crate::game::{
    parse_candidate_file, validate_candidate, Configuration, Game, SolveMethod, ThresholdMap,
};
use crate::milp::{build_milp, export_lp};
use crate::rational::{format_rational, parse_rational, rat, to_f64, Rational};
use crate::simulator::{
    run_play, strategy_avg_p1, strategy_avg_p2, Action, PlayTrace, ScriptStrategy, Strategy,
    Terminal,
};
use crate::solver::{auto_method, solve_with, SolveError};
use crate::strength::classify;

#[derive(Parser)]
#[command(name = "rhbg", version, about = "Robin Hood bidding game solver")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct SolveOpts {
    /// auto, dag, iterate, enumerate, or milp
    #[arg(long, default_value = "auto")]
    method: String,
    /// Stopping tolerance for the iterative method
    #[arg(long, default_value = "1e-12")]
    tol: String,
    #[arg(long, default_value_t = 200_000)]
    max_iters: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute per-vertex threshold budgets
    Solve {
        game: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
        /// Re-solve with a second method and compare
        #[arg(long)]
        cross_check: bool,
    },
    /// Check a candidate value map for the average property
    Check {
        game: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
    },
    /// Classify vertices as one-strong, two-strong, or weak
    Classify { game: PathBuf },
    /// Run a play between two strategies
    Simulate {
        game: PathBuf,
        #[arg(long)]
        vertex: String,
        /// Player 1's starting budget
        #[arg(long)]
        budget: String,
        /// avg or script:FILE
        #[arg(long, default_value = "avg")]
        p1: String,
        /// avg, eps:E0, or script:FILE
        #[arg(long, default_value = "avg")]
        p2: String,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        /// Also write the trace as JSON to this file
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Play interactively against the optimal strategy
    Play {
        game: PathBuf,
        /// Which side you play: p1 or p2
        #[arg(long = "as")]
        side: String,
        #[arg(long)]
        vertex: String,
        /// Player 1's starting budget
        #[arg(long)]
        budget: String,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
    },
    /// Threshold of one vertex across a grid of lambda values, as CSV
    Sweep {
        game: PathBuf,
        #[arg(long)]
        vertex: String,
        /// Comma-separated values, or range:START:END:STEPS
        #[arg(long)]
        grid: String,
        #[command(flatten)]
        opts: SolveOpts,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the big-M mixed-integer model in LP format
    ExportLp {
        game: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    /// Bad input or a negative result; exit 1.
    Usage(String),
    /// A bug or a failed consistency check; exit 2.
    Internal(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Internal(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Internal(m) => m,
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn load_game(path: &PathBuf) -> Result<Game, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let (game, warnings) = Game::parse(&text).map_err(usage)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(game)
}

fn solve_error(e: SolveError) -> CliError {
    match e {
        SolveError::Internal(m) => CliError::Internal(m),
        other => CliError::Usage(other.to_string()),
    }
}

fn parse_method(s: &str, game: &Game) -> Result<SolveMethod, CliError> {
    Ok(match s {
        "auto" => auto_method(game),
        "dag" => SolveMethod::Dag,
        "iterate" => SolveMethod::Iterate,
        "enumerate" => SolveMethod::Enumerate,
        "milp" => SolveMethod::Milp,
        other => return Err(CliError::Usage(format!("unknown method `{other}`"))),
    })
}

fn vertex_index(game: &Game, name: &str) -> Result<usize, CliError> {
    game.vertex_index(name)
        .ok_or_else(|| CliError::Usage(format!("unknown vertex `{name}`")))
}

fn write_out(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_thresholds(game: &Game, th: &ThresholdMap) {
    for v in 0..game.vertex_count() {
        let x = &th.values[v];
        println!("{} = {} ({})", game.vertex_name(v), format_rational(x), to_f64(x));
    }
    println!(
        "method: {}, residual: {}",
        th.method,
        format_rational(&th.residual)
    );
}

fn run_solve(
    game: &Game,
    opts: &SolveOpts,
    cross_check: bool,
) -> Result<(), CliError> {
    let method = parse_method(&opts.method, game)?;
    let tol = parse_rational(&opts.tol).map_err(usage)?;
    let th = solve_with(game, method, &tol, opts.max_iters).map_err(solve_error)?;
    print_thresholds(game, &th);
    if cross_check {
        let alt = match method {
            SolveMethod::Milp => SolveMethod::Enumerate,
            _ => SolveMethod::Milp,
        };
        let other = solve_with(game, alt, &tol, opts.max_iters).map_err(solve_error)?;
        // Exact methods must agree exactly; the iterative method gets slack
        // proportional to its stopping tolerance.
        let slack = if th.is_exact() {
            Rational::zero()
        } else {
            &tol * rat(1000, 1)
        };
        for v in 0..game.vertex_count() {
            let d = (&th.values[v] - &other.values[v]).abs();
            if d > slack {
                return Err(CliError::Internal(format!(
                    "cross-check disagreement at {}: {} vs {} ({})",
                    game.vertex_name(v),
                    format_rational(&th.values[v]),
                    format_rational(&other.values[v]),
                    alt
                )));
            }
        }
        println!("cross-check: OK ({alt})");
    }
    Ok(())
}

fn run_check(game: &Game, candidate: &PathBuf) -> Result<(), CliError> {
    let text = std::fs::read_to_string(candidate)
        .map_err(|e| usage(format!("cannot read {}: {e}", candidate.display())))?;
    let values = parse_candidate_file(&text).map_err(usage)?;
    let values = match validate_candidate(&values, game) {
        Ok(v) => v,
        Err(violations) => {
            for v in violations {
                eprintln!("{}: {}", v.vertex, v.problem);
            }
            return Err(CliError::Usage("candidate file is invalid".to_string()));
        }
    };
    let report = check_average_property(&values, game);
    print!("{}", report.describe(game));
    if report.holds {
        Ok(())
    } else {
        Err(CliError::Usage(String::new()))
    }
}

fn solve_for_strategies(game: &Game) -> Result<ThresholdMap, CliError> {
    crate::solver::solve_exact(game).map_err(solve_error)
}

fn run_classify(game: &Game) -> Result<(), CliError> {
    let th = solve_for_strategies(game)?;
    let classes = classify(game, &th).map_err(|e| CliError::Usage(e.to_string()))?;
    for v in 0..game.vertex_count() {
        println!(
            "{}: threshold {} ({}), {}",
            game.vertex_name(v),
            format_rational(&th.values[v]),
            to_f64(&th.values[v]),
            classes[v]
        );
    }
    Ok(())
}

fn parse_strategy(
    spec: &str,
    is_p1: bool,
    game: &Game,
    th: &Option<ThresholdMap>,
) -> Result<Box<dyn Strategy>, CliError> {
    if spec == "avg" || spec.starts_with("eps:") {
        let th = th
            .as_ref()
            .ok_or_else(|| CliError::Usage("built-in strategies need exact thresholds".into()))?;
        if is_p1 {
            if spec != "avg" {
                return Err(CliError::Usage("eps: applies to player 2 only".into()));
            }
            return Ok(Box::new(
                strategy_avg_p1(&th.values, game).map_err(|e| CliError::Internal(e.to_string()))?,
            ));
        }
        let eps0 = match spec.strip_prefix("eps:") {
            Some(e) => parse_rational(e).map_err(usage)?,
            None => rat(1, 1000),
        };
        return Ok(Box::new(
            strategy_avg_p2(&th.values, game, eps0)
                .map_err(|e| CliError::Internal(e.to_string()))?,
        ));
    }
    if let Some(path) = spec.strip_prefix("script:") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read {path}: {e}")))?;
        let name = if is_p1 { "script-p1" } else { "script-p2" };
        return Ok(Box::new(ScriptStrategy::parse(name, &text).map_err(usage)?));
    }
    Err(CliError::Usage(format!("unknown strategy `{spec}`")))
}

fn report_trace(game: &Game, trace: &PlayTrace, json: &Option<PathBuf>) -> Result<(), CliError> {
    print!("{}", trace.render(game));
    if let Some(path) = json {
        let text = serde_json::to_string_pretty(&trace.to_json(game)).expect("serializable");
        std::fs::write(path, text)
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_simulate(
    game: &Game,
    vertex: &str,
    budget: &str,
    p1: &str,
    p2: &str,
    max_steps: usize,
    json: &Option<PathBuf>,
) -> Result<(), CliError> {
    let v = vertex_index(game, vertex)?;
    let b = parse_rational(budget).map_err(usage)?;
    let start = Configuration::new(v, b).map_err(usage)?;
    let needs_solve = p1 == "avg" || p2 == "avg" || p2.starts_with("eps:");
    let th = if needs_solve {
        Some(solve_for_strategies(game)?)
    } else {
        None
    };
    let mut s1 = parse_strategy(p1, true, game, &th)?;
    let mut s2 = parse_strategy(p2, false, game, &th)?;
    let trace = run_play(game, start, s1.as_mut(), s2.as_mut(), max_steps);
    report_trace(game, &trace, json)
}

/// Reads actions from stdin: one line per round, `BID VERTEX`. Three strikes
/// on invalid input forfeit the round.
struct StdinStrategy {
    side: &'static str,
}

impl Strategy for StdinStrategy {
    fn name(&self) -> &str {
        self.side
    }

    fn act(&mut self, game: &Game, vertex: usize, own: &Rational, opp: &Rational) -> Action {
        let neighbors: Vec<&str> = game
            .neighbors(vertex)
            .iter()
            .map(|&u| game.vertex_name(u))
            .collect();
        println!(
            "[{}] token at {}, your budget {} ({}), opponent {} ({})",
            self.side,
            game.vertex_name(vertex),
            format_rational(own),
            to_f64(own),
            format_rational(opp),
            to_f64(opp)
        );
        let stdin = std::io::stdin();
        for _ in 0..3 {
            print!("bid and move ({}): ", neighbors.join(", "));
            std::io::stdout().flush().ok();
            let mut line = String::new();
            if stdin.lock().read_line(&mut line).unwrap_or(0) == 0 {
                break;
            }
            let mut parts = line.split_whitespace();
            let (Some(bid_s), Some(mv)) = (parts.next(), parts.next()) else {
                eprintln!("expected: BID VERTEX");
                continue;
            };
            let Ok(bid) = parse_rational(bid_s) else {
                eprintln!("cannot parse bid `{bid_s}`");
                continue;
            };
            if bid.is_negative() {
                eprintln!("negative bid");
                continue;
            }
            if bid > *own {
                eprintln!("bid exceeds your budget");
                continue;
            }
            let Some(m) = game.vertex_index(mv) else {
                eprintln!("unknown vertex `{mv}`");
                continue;
            };
            if !game.neighbors(vertex).contains(&m) {
                eprintln!("{mv} is not a neighbor");
                continue;
            }
            return Action { bid, move_to: m };
        }
        println!("[{}] no valid action; forfeiting the round", self.side);
        Action {
            bid: own + rat(1, 1),
            move_to: game.neighbors(vertex)[0],
        }
    }
}

fn run_play_cmd(
    game: &Game,
    side: &str,
    vertex: &str,
    budget: &str,
    max_steps: usize,
) -> Result<(), CliError> {
    let v = vertex_index(game, vertex)?;
    let b = parse_rational(budget).map_err(usage)?;
    let start = Configuration::new(v, b).map_err(usage)?;
    let th = solve_for_strategies(game)?;
    let trace = match side {
        "p1" => {
            let mut human = StdinStrategy { side: "p1" };
            let mut opp = strategy_avg_p2(&th.values, game, rat(1, 1000))
                .map_err(|e| CliError::Internal(e.to_string()))?;
            run_play(game, start, &mut human, &mut opp, max_steps)
        }
        "p2" => {
            let mut human = StdinStrategy { side: "p2" };
            let mut opp = strategy_avg_p1(&th.values, game)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            run_play(game, start, &mut opp, &mut human, max_steps)
        }
        other => return Err(CliError::Usage(format!("--as must be p1 or p2, got `{other}`"))),
    };
    print!("{}", trace.render(game));
    let verdict = match (side, trace.terminal) {
        ("p1", Terminal::P1Wins) | ("p2", Terminal::P2Wins) => "you win",
        (_, Terminal::Truncated) => "step cap reached",
        _ => "you lose",
    };
    println!("{verdict}");
    Ok(())
}

fn parse_grid(spec: &str) -> Result<Vec<Rational>, CliError> {
    if let Some(rest) = spec.strip_prefix("range:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [start, end, steps] = parts.as_slice() else {
            return Err(CliError::Usage("expected range:START:END:STEPS".into()));
        };
        let start = parse_rational(start).map_err(usage)?;
        let end = parse_rational(end).map_err(usage)?;
        let steps: usize = steps
            .parse()
            .map_err(|_| CliError::Usage("STEPS must be a positive integer".into()))?;
        if steps == 0 {
            return Err(CliError::Usage("STEPS must be a positive integer".into()));
        }
        if steps == 1 {
            return Ok(vec![start]);
        }
        let h = (&end - &start) / rat((steps - 1) as i64, 1);
        return Ok((0..steps).map(|i| &start + &h * rat(i as i64, 1)).collect());
    }
    spec.split(',')
        .map(|s| parse_rational(s.trim()).map_err(usage))
        .collect()
}

fn run_sweep(
    game: &Game,
    vertex: &str,
    grid: &str,
    opts: &SolveOpts,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    let v = vertex_index(game, vertex)?;
    let grid = parse_grid(grid)?;
    let tol = parse_rational(&opts.tol).map_err(usage)?;
    let method = if opts.method == "auto" {
        None
    } else {
        Some(parse_method(&opts.method, game)?)
    };
    let points = sweep(game, v, &grid, method, &tol, opts.max_iters);
    write_out(out, &sweep_csv(&points))
}

fn run_export_lp(game: &Game, out: &Option<PathBuf>) -> Result<(), CliError> {
    let model = build_milp(game);
    write_out(out, &export_lp(&model))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Solve {
            game,
            opts,
            cross_check,
        } => run_solve(&load_game(&game)?, &opts, cross_check),
        Cmd::Check { game, candidate } => run_check(&load_game(&game)?, &candidate),
        Cmd::Classify { game } => run_classify(&load_game(&game)?),
        Cmd::Simulate {
            game,
            vertex,
            budget,
            p1,
            p2,
            max_steps,
            json,
        } => run_simulate(&load_game(&game)?, &vertex, &budget, &p1, &p2, max_steps, &json),
        Cmd::Play {
            game,
            side,
            vertex,
            budget,
            max_steps,
        } => run_play_cmd(&load_game(&game)?, &side, &vertex, &budget, max_steps),
        Cmd::Sweep {
            game,
            vertex,
            grid,
            opts,
            out,
        } => run_sweep(&load_game(&game)?, &vertex, &grid, &opts, &out),
        Cmd::ExportLp { game, out } => run_export_lp(&load_game(&game)?, &out),
    }
}

fn init_threads() {
    if let Ok(n) = std::env::var("RHBG_THREADS") {
        if let Ok(n) = n.parse::<usize>() {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .ok();
        } else {
            eprintln!("warning: ignoring unparsable RHBG_THREADS={n}");
        }
    }
}

/// Full CLI entry point; returns the process exit code.
pub fn run_cli<I>(args: I) -> i32
where
    I: IntoIterator,
    I::Item: Into<std::ffi::OsString> + Clone,
{
    init_threads();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            e.print().ok();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            if !e.message().is_empty() {
                eprintln!("error: {}", e.message());
            }
            e.code()
        }
    }
}

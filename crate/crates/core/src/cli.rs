//! Command-line driver. Each subcommand reads the experiment config, runs one
//! pipeline stage, prints a short report and writes its artifacts to the
//! output directory.
//!
//! Exit codes: 0 on success, 1 on a runtime or solver failure, 2 on a
//! config, usage or parse error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bayesian::{solve_bayesian, BayesianSolution, BayesianSpec, PayoffMode};
use crate::config::ExperimentConfig;
use crate::equilibria::{
    deviation_gap, lemke_howson, solve_bimatrix, support_enumeration, zero_sum_value, EquilibriumResult,
    MixedStrategy, StageGame, SUPPORT_ENUMERATION_MAX,
};
use crate::error::{Error, Result};
use crate::estimation::SteadySummary;
use crate::game::{BoundednessGuard, GameState};
use crate::io;
use crate::nashq::{nash_q_learn, shapley_value_iteration, ORACLE_TOL};
use crate::structure::{analyze_monotone, MonotoneAnalysis};

#[derive(Debug, Parser)]
#[command(name = "jamming-game", version, about = "Remote estimation under DoS jamming as a stochastic game")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady-state covariance, spectral radius and holding-time traces.
    Steady(Common),
    /// Value-iteration oracle: Q-tables and stationary policies.
    Solve(Common),
    /// Nash Q-learning with a convergence curve.
    Learn(Common),
    /// Every solver on a stage game read from a matrix file.
    Equilibrium(EquilibriumArgs),
    /// Sufficient-condition and monotone-policy checks on the oracle.
    Monotone(Common),
    /// Incomplete-information game: type-contingent strategies.
    Bayes(Common),
    /// Closed-loop rollout under stored policies.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `learn.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `learn.episodes`.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Also solve the oracle and report the gap to it.
    #[arg(long)]
    pub oracle: bool,
    /// Overrides `output_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EquilibriumArgs {
    /// Two whitespace-separated matrices (row player, then column player)
    /// separated by a blank line; one matrix means zero-sum.
    pub matrix: PathBuf,
    /// Also report the deviation gap of a given point, written as
    /// `x1,x2,...;y1,y2,...`.
    #[arg(long)]
    pub candidate: Option<String>,
    /// Write `equilibrium.json` here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Policies JSON; overrides `simulate.policies`.
    #[arg(long)]
    pub policies: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return 2;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    match dispatch(&cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_input_error() {
        2
    } else {
        1
    }
}

fn dispatch(cmd: &Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Steady(c) => cmd_steady(&load(c)?, out).map(drop),
        Command::Solve(c) => cmd_solve(&load(c)?, out).map(drop),
        Command::Learn(c) => cmd_learn(&load(c)?, c.oracle, out).map(drop),
        Command::Equilibrium(a) => cmd_equilibrium(a, out).map(drop),
        Command::Monotone(c) => cmd_monotone(&load(c)?, out).map(drop),
        Command::Bayes(c) => cmd_bayes(&load(c)?, out).map(drop),
        Command::Simulate(a) => {
            let mut cfg = load(&a.common)?;
            if let Some(p) = &a.policies {
                cfg.simulate.policies = Some(p.display().to_string());
            }
            cmd_simulate(&cfg, out).map(drop)
        }
    }
}

/// Reads the config and applies command-line overrides.
pub fn load(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(&c.config)?;
    if let Some(seed) = c.seed {
        cfg.learn.seed = seed;
    }
    if let Some(n) = c.episodes {
        cfg.learn.episodes = n;
    }
    if let Some(dir) = &c.out {
        cfg.output_dir = dir.display().to_string();
    }
    Ok(cfg)
}

fn output_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = PathBuf::from(&cfg.output_dir);
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn w(out: &mut dyn Write, line: std::fmt::Arguments) -> Result<()> {
    out.write_fmt(line)?;
    out.write_all(b"\n")?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SteadyReport {
    pub steady: SteadySummary,
    pub boundedness_threshold: f64,
    pub guard: BoundednessGuard,
}

pub fn cmd_steady(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<SteadyReport> {
    let spec = cfg.game_spec()?;
    let steady = spec.steady().clone();
    let report = SteadyReport {
        boundedness_threshold: steady.boundedness_threshold(),
        guard: spec.guard(),
        steady,
    };
    let s = &report.steady;
    w(out, format_args!("P_bar = {:?}", s.p_bar))?;
    w(out, format_args!("rho(A) = {}", s.rho_a))?;
    w(out, format_args!("iterations = {}, residual = {:e}", s.iterations, s.residual))?;
    if report.boundedness_threshold < 0.0 {
        w(out, format_args!("boundedness threshold = {} (< 0: stable plant, any arrival rate keeps the error bounded)", report.boundedness_threshold))?;
    } else {
        w(out, format_args!("boundedness threshold = {}", report.boundedness_threshold))?;
    }
    w(
        out,
        format_args!(
            "min arrival probability = {} ({})",
            report.guard.min_arrival,
            if report.guard.holds { "above threshold" } else { "NOT above threshold" }
        ),
    )?;
    for (m, t) in s.trace_table.iter().enumerate() {
        w(out, format_args!("Tr[h^{m}(P_bar)] = {t}"))?;
    }
    io::write_json(&output_dir(cfg)?.join("steady.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub sweeps: usize,
    pub final_delta: f64,
    pub q1_sup_norm: f64,
    pub mirror_gap: f64,
    pub max_policy_gap: f64,
}

pub fn cmd_solve(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<SolveReport> {
    let spec = cfg.game_spec()?;
    let sol = shapley_value_iteration(&spec, ORACLE_TOL)?;
    let dir = output_dir(cfg)?;
    io::write_qtables_json(&dir.join("oracle_qtables.json"), &spec, &sol.tables)?;
    io::write_qtable_csv(&dir.join("oracle_qtables.csv"), &spec, &sol.tables)?;
    io::write_policies_json(&dir.join("oracle_policies.json"), &spec, &sol.policies)?;
    let mut wtr = csv::Writer::from_path(dir.join("oracle_sweeps.csv"))?;
    wtr.write_record(["sweep", "delta"])?;
    for (i, d) in sol.sweep_deltas.iter().enumerate() {
        wtr.write_record([(i + 1).to_string(), d.to_string()])?;
    }
    wtr.flush()?;
    let report = SolveReport {
        sweeps: sol.sweep_deltas.len(),
        final_delta: sol.sweep_deltas.last().copied().unwrap_or(0.0),
        q1_sup_norm: sol.tables.q1_sup_norm(),
        mirror_gap: sol.tables.mirror_gap(),
        max_policy_gap: sol.policies.iter().map(|p| p.deviation_gap).fold(0.0, f64::max),
    };
    w(out, format_args!("value iteration: {} sweeps, last delta {:e}", report.sweeps, report.final_delta))?;
    w(out, format_args!("|Q1*| = {}, |Q1* + Q2*| = {:e}", report.q1_sup_norm, report.mirror_gap))?;
    for (s, p) in sol.policies.iter().enumerate() {
        let st = spec.state_of(s);
        let (gs, ga) = spec.gains_of(st);
        w(
            out,
            format_args!(
                "s{s} (tau={}, g_s={gs}, g_a={ga}): v1 = {:.6}, attacker {:?}, sensor {:?}",
                st.tau,
                p.value_p1,
                p.strat_p1.probs(),
                p.strat_p2.probs()
            ),
        )?;
    }
    io::write_json(&dir.join("solve.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct LearnReport {
    pub episodes: usize,
    pub seed: u64,
    pub steps: u64,
    pub max_mirror_gap: f64,
    /// `‖Q¹ − Q¹*‖∞` when the oracle was requested.
    pub oracle_gap: Option<f64>,
    /// `0.05·(1 + ‖Q¹*‖∞)`.
    pub oracle_bound: Option<f64>,
}

pub fn cmd_learn(cfg: &ExperimentConfig, with_oracle: bool, out: &mut dyn Write) -> Result<LearnReport> {
    let spec = cfg.game_spec()?;
    let outcome = nash_q_learn(&spec, &cfg.learn)?;
    let dir = output_dir(cfg)?;
    io::write_qtables_json(&dir.join("learned_qtables.json"), &spec, &outcome.tables)?;
    io::write_qtable_csv(&dir.join("learned_qtables.csv"), &spec, &outcome.tables)?;
    io::write_policies_json(&dir.join("learned_policies.json"), &spec, &outcome.policies)?;
    io::write_curve_csv(&dir.join("convergence.csv"), &spec, &outcome.curve)?;
    let (oracle_gap, oracle_bound) = if with_oracle {
        let sol = shapley_value_iteration(&spec, ORACLE_TOL)?;
        (
            Some(outcome.tables.q1_distance(&sol.tables)),
            Some(0.05 * (1.0 + sol.tables.q1_sup_norm())),
        )
    } else {
        (None, None)
    };
    let report = LearnReport {
        episodes: cfg.learn.episodes,
        seed: cfg.learn.seed,
        steps: outcome.steps,
        max_mirror_gap: outcome.max_mirror_gap,
        oracle_gap,
        oracle_bound,
    };
    w(out, format_args!("Nash Q-learning: {} episodes, {} steps, seed {}", report.episodes, report.steps, report.seed))?;
    w(out, format_args!("max |Q1 + Q2| during learning = {:e}", report.max_mirror_gap))?;
    if let (Some(g), Some(b)) = (oracle_gap, oracle_bound) {
        w(
            out,
            format_args!("sup-norm gap to oracle = {g:.6} (bound {b:.6}: {})", if g <= b { "within" } else { "EXCEEDED" }),
        )?;
    }
    io::write_json(&dir.join("learn.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverOutput {
    pub method: String,
    pub result: Option<EquilibriumResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub rows: usize,
    pub cols: usize,
    pub zero_sum: bool,
    pub solvers: Vec<SolverOutput>,
    pub support_enumeration: Option<Vec<EquilibriumResult>>,
    /// Deviation gap of `--candidate`, if given.
    pub candidate_gap: Option<f64>,
}

pub fn cmd_equilibrium(args: &EquilibriumArgs, out: &mut dyn Write) -> Result<EquilibriumReport> {
    let game = io::read_matrix_file(&args.matrix)?;
    let candidate = args.candidate.as_deref().map(|c| parse_candidate(c, &game)).transpose()?;
    let report = equilibrium_report(&game, candidate.as_ref());
    w(out, format_args!("{}x{} game, zero-sum: {}", report.rows, report.cols, report.zero_sum))?;
    for s in &report.solvers {
        match (&s.result, &s.error) {
            (Some(r), _) => print_eq(out, &s.method, r)?,
            (None, Some(e)) => w(out, format_args!("{}: failed ({e})", s.method))?,
            _ => {}
        }
    }
    if let Some(all) = &report.support_enumeration {
        w(out, format_args!("support enumeration: {} equilibria", all.len()))?;
        for r in all {
            print_eq(out, "  ", r)?;
        }
    }
    if let Some(g) = report.candidate_gap {
        let verdict = if g <= crate::equilibria::CERTIFICATION_TOL { "is an equilibrium" } else { "is NOT an equilibrium" };
        w(out, format_args!("candidate deviation gap = {g:.6}: {verdict}"))?;
    }
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        io::write_json(&dir.join("equilibrium.json"), &report)?;
    }
    if report.solvers.iter().all(|s| s.result.is_none()) {
        return Err(Error::NoEquilibrium("every solver failed".into()));
    }
    Ok(report)
}

/// Runs every applicable solver on `game`.
pub fn equilibrium_report(game: &StageGame, candidate: Option<&(MixedStrategy, MixedStrategy)>) -> EquilibriumReport {
    let mut solvers = Vec::new();
    let mut push = |method: &str, r: Result<EquilibriumResult>| {
        let (result, error) = match r {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        };
        solvers.push(SolverOutput {
            method: method.into(),
            result,
            error,
        });
    };
    push("lemke-howson (label 0)", lemke_howson(game, 0));
    push("bimatrix (first certified)", solve_bimatrix(game));
    let zero_sum = game.is_zero_sum();
    if zero_sum {
        push("linear program", zero_sum_value(game));
    }
    let small = game.rows() <= SUPPORT_ENUMERATION_MAX && game.cols() <= SUPPORT_ENUMERATION_MAX;
    EquilibriumReport {
        rows: game.rows(),
        cols: game.cols(),
        zero_sum,
        solvers,
        support_enumeration: small.then(|| support_enumeration(game)),
        candidate_gap: candidate.map(|(x, y)| deviation_gap(game, x, y)),
    }
}

fn print_eq(out: &mut dyn Write, label: &str, r: &EquilibriumResult) -> Result<()> {
    w(
        out,
        format_args!(
            "{label}: row {:?}, col {:?}, values ({:.6}, {:.6}), gap {:e}",
            r.strat_p1.probs(),
            r.strat_p2.probs(),
            r.value_p1,
            r.value_p2,
            r.deviation_gap
        ),
    )
}

/// `x1,x2;y1,y2` into a strategy pair sized for `game`.
pub fn parse_candidate(text: &str, game: &StageGame) -> Result<(MixedStrategy, MixedStrategy)> {
    let (x, y) = text
        .split_once(';')
        .ok_or_else(|| Error::Parse("candidate must look like `x1,x2;y1,y2`".into()))?;
    let parse = |s: &str, n: usize| -> Result<MixedStrategy> {
        let v = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("`{t}` is not a number"))))
            .collect::<Result<Vec<f64>>>()?;
        if v.len() != n {
            return Err(Error::Parse(format!("candidate needs {n} probabilities, got {}", v.len())));
        }
        // printed mixes are rounded, so renormalize
        MixedStrategy::normalized(v).map_err(|e| Error::Parse(e.to_string()))
    };
    Ok((parse(x, game.rows())?, parse(y, game.cols())?))
}

pub fn cmd_monotone(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<MonotoneAnalysis> {
    let spec = cfg.game_spec()?;
    let sol = shapley_value_iteration(&spec, ORACLE_TOL)?;
    let report = analyze_monotone(&spec, &sol.tables, &sol.policies)?;
    let c = &report.condition;
    w(out, format_args!("epsilon_max = {} (all arrival differences positive: {})", report.epsilon_max, report.epsilon_condition))?;
    match c.product_witness {
        None => w(out, format_args!("action-product condition: holds"))?,
        Some([a1p, a1m, a2p, a2m]) => w(
            out,
            format_args!("action-product condition: fails at a2+ a1- = {} < a2- a1+ = {}", a2p * a1m, a2m * a1p),
        )?,
    }
    for r in &c.ratios {
        match r.chi {
            Some(chi) => w(out, format_args!("m = {}: chi = {chi:.6} ({})", r.m, if r.holds { "> epsilon_max" } else { "fails" }))?,
            None => w(out, format_args!("m = {}: chi undefined (equal values)", r.m))?,
        }
    }
    w(out, format_args!("condition holds at holding times {:?}, threshold {:?}", c.holding_times, c.threshold))?;
    let vacuous = |n: usize| if n == 0 { " (vacuous)" } else { "" };
    w(
        out,
        format_args!(
            "Q2* supermodular on {} restricted pairs: {}{}",
            report.supermodular.pairs_checked,
            report.supermodular.holds,
            vacuous(report.supermodular.pairs_checked)
        ),
    )?;
    w(
        out,
        format_args!(
            "policy monotone on {} restricted state pairs: expected power {}, most likely power {}",
            report.monotone.pairs_checked, report.monotone.expected.holds, report.monotone.argmax.holds
        ),
    )?;
    w(
        out,
        format_args!(
            "policy monotone on all {} state pairs: expected power {}, most likely power {}",
            report.monotone_all_states.pairs_checked,
            report.monotone_all_states.expected.holds,
            report.monotone_all_states.argmax.holds
        ),
    )?;
    w(out, format_args!("max |delta1| = {}", report.delta1_max_abs))?;
    io::write_json(&output_dir(cfg)?.join("monotone.json"), &report)?;
    Ok(report)
}

pub fn cmd_bayes(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<BayesianSolution> {
    let bayes = cfg
        .bayes
        .as_ref()
        .ok_or_else(|| Error::config("bayes", "section is required for this command"))?;
    let spec = cfg.game_spec()?;
    let values = match bayes.payoff {
        PayoffMode::Stage => None,
        PayoffMode::Lookahead => Some(shapley_value_iteration(&spec, ORACLE_TOL)?.values_p1()),
    };
    let bs = BayesianSpec::from_game(&spec, bayes.m, bayes.belief, bayes.payoff, values.as_deref())?;
    let sol = solve_bayesian(&bs)?;
    let dir = output_dir(cfg)?;
    io::write_type_strategy_csv(&dir.join("bayes_attacker.csv"), &sol.attacker, "g_a")?;
    io::write_type_strategy_csv(&dir.join("bayes_sensor.csv"), &sol.sensor, "g_s")?;
    io::write_json(&dir.join("bayes.json"), &sol)?;
    w(out, format_args!("Bayesian game at m = {}: value {:.6}, deviation gap {:e}", bayes.m, sol.value, sol.deviation_gap))?;
    print_type_table(out, "attacker", "a", "g_a", &sol.attacker)?;
    print_type_table(out, "sensor", "b", "g_s", &sol.sensor)?;
    Ok(sol)
}

fn print_type_table(
    out: &mut dyn Write,
    who: &str,
    action: &str,
    ty: &str,
    s: &crate::bayesian::TypeStrategy,
) -> Result<()> {
    let header: Vec<String> = s.types.iter().map(|t| format!("{ty}={t}")).collect();
    w(out, format_args!("{who}:  {}", header.join("  ")))?;
    for (k, a) in s.actions.iter().enumerate() {
        let cells: Vec<String> = (0..s.types.len()).map(|t| format!("{:.4}", s.prob(t, k))).collect();
        w(out, format_args!("  Pr({action}={a}|{ty})  {}", cells.join("  ")))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub horizon: usize,
    pub seed: u64,
    pub arrivals: usize,
    pub discounted_return: f64,
}

pub fn cmd_simulate(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<SimulateReport> {
    let path = cfg
        .simulate
        .policies
        .as_ref()
        .ok_or_else(|| Error::config("simulate.policies", "no policy file given (use --policies)"))?;
    let spec = cfg.game_spec()?;
    let policies = io::read_policies_json(Path::new(path), &spec)?;
    let start = cfg.simulate.start.unwrap_or(GameState { tau: 0, gs: 0, ga: 0 });
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.learn.seed);
    let traj = spec.simulate_trajectory(&policies, start, cfg.simulate.horizon, &mut rng)?;
    let dir = output_dir(cfg)?;
    io::write_trajectory_csv(&dir.join("trajectory.csv"), &traj)?;
    let report = SimulateReport {
        horizon: traj.len(),
        seed: cfg.learn.seed,
        arrivals: traj.iter().filter(|s| s.gamma).count(),
        discounted_return: crate::game::discounted_return(&traj, spec.beta()),
    };
    w(
        out,
        format_args!(
            "{} steps from {:?}: {} packets received, discounted attacker return {:.6}",
            report.horizon, start, report.arrivals, report.discounted_return
        ),
    )?;
    Ok(report)
}

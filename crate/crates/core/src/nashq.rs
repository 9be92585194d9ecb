//! Nash Q-learning and the value-iteration oracle it is checked against.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::sample_index;
use crate::equilibria::{solve_stage, EquilibriumResult, MixedStrategy, Selection, StageGame};
use crate::error::{Error, Result};
use crate::game::{discounted_return, GameSpec, PolicyPair};

/// Sup-norm stopping tolerance of the oracle.
pub const ORACLE_TOL: f64 = 1e-10;
const ORACLE_MAX_SWEEPS: usize = 1_000_000;

/// Both players' Q-tables plus per-cell visit counts, indexed
/// `(state, attacker action, sensor action)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QTables {
    n_states: usize,
    n_a: usize,
    n_b: usize,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub visits: Vec<u64>,
}

impl QTables {
    pub fn zeros(n_states: usize, n_a: usize, n_b: usize) -> Self {
        let len = n_states * n_a * n_b;
        Self {
            n_states,
            n_a,
            n_b,
            q1: vec![0.0; len],
            q2: vec![0.0; len],
            visits: vec![0; len],
        }
    }

    pub fn for_spec(spec: &GameSpec) -> Self {
        Self::zeros(spec.num_states(), spec.n_attacker(), spec.n_sensor())
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_attacker(&self) -> usize {
        self.n_a
    }

    pub fn n_sensor(&self) -> usize {
        self.n_b
    }

    #[inline]
    pub fn idx(&self, s: usize, a: usize, b: usize) -> usize {
        (s * self.n_a + a) * self.n_b + b
    }

    pub fn q1(&self, s: usize, a: usize, b: usize) -> f64 {
        self.q1[self.idx(s, a, b)]
    }

    pub fn q2(&self, s: usize, a: usize, b: usize) -> f64 {
        self.q2[self.idx(s, a, b)]
    }

    /// Slice of player 1's values at state `s`, row-major over actions.
    pub fn q1_state(&self, s: usize) -> &[f64] {
        let w = self.n_a * self.n_b;
        &self.q1[s * w..(s + 1) * w]
    }

    pub fn q2_state(&self, s: usize) -> &[f64] {
        let w = self.n_a * self.n_b;
        &self.q2[s * w..(s + 1) * w]
    }

    /// Stage game at `s`: attacker on rows with `Q¹`, sensor on columns with `Q²`.
    pub fn stage_game(&self, s: usize) -> StageGame {
        StageGame::from_flat(self.n_a, self.n_b, self.q1_state(s).to_vec(), self.q2_state(s).to_vec())
            .expect("stage game shape is consistent by construction")
    }

    /// `max |Q¹ + Q²|`.
    pub fn mirror_gap(&self) -> f64 {
        self.q1
            .iter()
            .zip(&self.q2)
            .map(|(a, b)| (a + b).abs())
            .fold(0.0, f64::max)
    }

    pub fn q1_sup_norm(&self) -> f64 {
        self.q1.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// `max |Q¹ − other.Q¹|`.
    pub fn q1_distance(&self, other: &QTables) -> f64 {
        self.q1
            .iter()
            .zip(&other.q1)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn total_visits(&self) -> u64 {
        self.visits.iter().sum()
    }

    pub fn check_spec(&self, spec: &GameSpec) -> Result<()> {
        if (self.n_states, self.n_a, self.n_b) != (spec.num_states(), spec.n_attacker(), spec.n_sensor()) {
            return Err(Error::Dimension(format!(
                "Q-table is {}x{}x{}, game is {}x{}x{}",
                self.n_states,
                self.n_a,
                self.n_b,
                spec.num_states(),
                spec.n_attacker(),
                spec.n_sensor()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnConfig {
    pub episodes: usize,
    #[serde(default = "default_steps")]
    pub steps_per_episode: usize,
    #[serde(default = "default_lr_numerator")]
    pub lr_numerator: f64,
    #[serde(default = "default_lr_offset")]
    pub lr_offset: f64,
    #[serde(default = "default_exploration")]
    pub exploration: f64,
    pub seed: u64,
    #[serde(default)]
    pub selection: Selection,
    /// Episodes between two points of the convergence curve; 0 disables it.
    #[serde(default = "default_curve_every")]
    pub curve_every: usize,
}

fn default_steps() -> usize {
    20
}
fn default_lr_numerator() -> f64 {
    10.0
}
fn default_lr_offset() -> f64 {
    15.0
}
fn default_exploration() -> f64 {
    0.2
}
fn default_curve_every() -> usize {
    100
}

impl LearnConfig {
    pub fn new(episodes: usize, seed: u64) -> Self {
        Self {
            episodes,
            steps_per_episode: default_steps(),
            lr_numerator: default_lr_numerator(),
            lr_offset: default_lr_offset(),
            exploration: default_exploration(),
            seed,
            selection: Selection::default(),
            curve_every: default_curve_every(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps_per_episode == 0 {
            return Err(Error::config("learn.steps_per_episode", "must be positive"));
        }
        if !(self.lr_numerator > 0.0) || !self.lr_numerator.is_finite() {
            return Err(Error::config("learn.lr_numerator", "must be positive"));
        }
        if !(self.lr_offset > 0.0) || !self.lr_offset.is_finite() {
            return Err(Error::config("learn.lr_offset", "must be positive"));
        }
        if self.lr_numerator > self.lr_offset + 1.0 {
            return Err(Error::config(
                "learn.lr_numerator",
                "first learning rate lr_numerator/(lr_offset+1) exceeds 1",
            ));
        }
        if !(0.0..=1.0).contains(&self.exploration) {
            return Err(Error::config("learn.exploration", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Learning rate after `count` visits, the current one included.
    pub fn learning_rate(&self, count: u64) -> f64 {
        self.lr_numerator / (self.lr_offset + count as f64)
    }
}

/// One point of the convergence curve: player 1's Q-values at state 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: u64,
    pub q1_s0: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub tables: QTables,
    pub policies: Vec<EquilibriumResult>,
    pub curve: Vec<CurvePoint>,
    /// Largest `|Q¹ + Q²|` seen after any update.
    pub max_mirror_gap: f64,
    pub steps: u64,
}

/// Per-state equilibria that are recomputed only after the state's table
/// changed.
struct EquilibriumCache {
    entries: Vec<Option<EquilibriumResult>>,
    selection: Selection,
}

impl EquilibriumCache {
    fn new(n: usize, selection: Selection) -> Self {
        Self {
            entries: vec![None; n],
            selection,
        }
    }

    fn get(&mut self, tables: &QTables, s: usize) -> Result<&EquilibriumResult> {
        if self.entries[s].is_none() {
            let eq = solve_stage(&tables.stage_game(s), self.selection).map_err(|e| Error::StageSolve {
                state: s,
                source: Box::new(e),
            })?;
            self.entries[s] = Some(eq);
        }
        Ok(self.entries[s].as_ref().unwrap())
    }

    fn invalidate(&mut self, s: usize) {
        self.entries[s] = None;
    }
}

pub fn nash_q_learn(spec: &GameSpec, cfg: &LearnConfig) -> Result<LearnOutcome> {
    nash_q_learn_with(spec, cfg, |_, _| {})
}

/// Like [`nash_q_learn`], calling `observer(episodes_done, tables)` after each
/// episode.
pub fn nash_q_learn_with<F>(spec: &GameSpec, cfg: &LearnConfig, mut observer: F) -> Result<LearnOutcome>
where
    F: FnMut(usize, &QTables),
{
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tables = QTables::for_spec(spec);
    let mut cache = EquilibriumCache::new(spec.num_states(), cfg.selection);
    let (na, nb) = (spec.n_attacker(), spec.n_sensor());
    let beta = spec.beta();
    let eps = cfg.exploration;
    let mut mix_a = vec![0.0; na];
    let mut mix_b = vec![0.0; nb];
    let mut curve = Vec::new();
    let mut max_mirror_gap = 0.0_f64;
    let mut steps = 0u64;

    let record = |curve: &mut Vec<CurvePoint>, tables: &QTables, steps: u64| {
        curve.push(CurvePoint {
            step: steps,
            q1_s0: tables.q1_state(0).to_vec(),
        });
    };
    if cfg.curve_every > 0 {
        record(&mut curve, &tables, 0);
    }

    for episode in 0..cfg.episodes {
        let mut s = rng.random_range(0..spec.num_states());
        for _ in 0..cfg.steps_per_episode {
            let state = spec.state_of(s);
            {
                let eq = cache.get(&tables, s)?;
                for (m, p) in mix_a.iter_mut().zip(eq.strat_p1.probs()) {
                    *m = (1.0 - eps) * p + eps / na as f64;
                }
                for (m, p) in mix_b.iter_mut().zip(eq.strat_p2.probs()) {
                    *m = (1.0 - eps) * p + eps / nb as f64;
                }
            }
            let a = sample_index(&mix_a, &mut rng);
            let b = sample_index(&mix_b, &mut rng);
            let r1 = spec.reward(state.tau, a, b);
            let r2 = -r1;
            let (next, _) = spec.sample_next(state, a, b, &mut rng);
            let s_next = spec.index_of(next);

            let cell = tables.idx(s, a, b);
            tables.visits[cell] += 1;
            let lr = cfg.learning_rate(tables.visits[cell]);
            let (v1, v2) = {
                let eq = cache.get(&tables, s_next)?;
                (eq.value_p1, eq.value_p2)
            };
            tables.q1[cell] = (1.0 - lr) * tables.q1[cell] + lr * (r1 + beta * v1);
            tables.q2[cell] = (1.0 - lr) * tables.q2[cell] + lr * (r2 + beta * v2);
            max_mirror_gap = max_mirror_gap.max((tables.q1[cell] + tables.q2[cell]).abs());
            cache.invalidate(s);

            steps += 1;
            s = s_next;
        }
        if cfg.curve_every > 0 && (episode + 1) % cfg.curve_every == 0 {
            record(&mut curve, &tables, steps);
        }
        observer(episode + 1, &tables);
    }

    let policies = extract_policy(&tables, cfg.selection)?;
    Ok(LearnOutcome {
        tables,
        policies,
        curve,
        max_mirror_gap,
        steps,
    })
}

/// Per-state stage-game equilibria of a pair of Q-tables.
pub fn extract_policy(tables: &QTables, selection: Selection) -> Result<Vec<EquilibriumResult>> {
    (0..tables.n_states())
        .map(|s| {
            solve_stage(&tables.stage_game(s), selection).map_err(|e| Error::StageSolve {
                state: s,
                source: Box::new(e),
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub tables: QTables,
    pub policies: Vec<EquilibriumResult>,
    /// `‖Q¹_{n+1} − Q¹_n‖∞` for every sweep.
    pub sweep_deltas: Vec<f64>,
}

impl OracleSolution {
    /// Player 1's equilibrium value at each state.
    pub fn values_p1(&self) -> Vec<f64> {
        self.policies.iter().map(|e| e.value_p1).collect()
    }

    pub fn values_p2(&self) -> Vec<f64> {
        self.policies.iter().map(|e| e.value_p2).collect()
    }
}

/// Solves the Q fixed point by synchronous sweeps
/// `Qⁱ ← rⁱ + β Σ Pr(s'|s,a,b) valⁱ(s')`, with `valⁱ` the zero-sum value of the
/// stage game at `s'`.
pub fn shapley_value_iteration(spec: &GameSpec, tol: f64) -> Result<OracleSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let n = spec.num_states();
    let (na, nb) = (spec.n_attacker(), spec.n_sensor());
    let beta = spec.beta();
    let mut tables = QTables::for_spec(spec);
    let mut deltas = Vec::new();
    let mut v1 = vec![0.0; n];
    let mut v2 = vec![0.0; n];

    for _ in 0..ORACLE_MAX_SWEEPS {
        for s in 0..n {
            let eq = solve_stage(&tables.stage_game(s), Selection::ZeroSum).map_err(|e| Error::StageSolve {
                state: s,
                source: Box::new(e),
            })?;
            v1[s] = eq.value_p1;
            v2[s] = eq.value_p2;
        }
        let mut delta = 0.0_f64;
        for s in 0..n {
            let tau = spec.state_of(s).tau;
            for a in 0..na {
                for b in 0..nb {
                    let (mut e1, mut e2) = (0.0, 0.0);
                    for &(t, p) in spec.transition_distribution(s, a, b) {
                        e1 += p * v1[t];
                        e2 += p * v2[t];
                    }
                    let r1 = spec.reward(tau, a, b);
                    let cell = tables.idx(s, a, b);
                    let new1 = r1 + beta * e1;
                    delta = delta.max((new1 - tables.q1[cell]).abs());
                    tables.q1[cell] = new1;
                    tables.q2[cell] = -r1 + beta * e2;
                }
            }
        }
        deltas.push(delta);
        if delta <= tol {
            let policies = extract_policy(&tables, Selection::ZeroSum)?;
            return Ok(OracleSolution {
                tables,
                policies,
                sweep_deltas: deltas,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: ORACLE_MAX_SWEEPS,
        last_step: deltas.last().copied().unwrap_or(f64::NAN),
    })
}

/// Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

/// Smallest horizon with `β^h ≤ 1e-6`.
pub fn horizon_for(beta: f64) -> usize {
    if beta <= 0.0 {
        return 1;
    }
    ((1e-6_f64).ln() / beta.ln()).ceil().max(1.0) as usize
}

/// Average discounted attacker reward `Σ β^k r¹_k` over independent rollouts
/// from `start`.
pub fn empirical_return<R: Rng + ?Sized>(
    spec: &GameSpec,
    policies: &PolicyPair,
    start: usize,
    horizon: usize,
    n_rollouts: usize,
    rng: &mut R,
) -> Result<MonteCarloEstimate> {
    if n_rollouts == 0 || horizon == 0 {
        return Err(Error::InvalidArgument("need at least one rollout of positive length".into()));
    }
    if start >= spec.num_states() {
        return Err(Error::InvalidArgument(format!("start state {start} out of range")));
    }
    let start = spec.state_of(start);
    let mut returns = Vec::with_capacity(n_rollouts);
    for _ in 0..n_rollouts {
        let traj = spec.simulate_trajectory(policies, start, horizon, rng)?;
        returns.push(discounted_return(&traj, spec.beta()));
    }
    let n = n_rollouts as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = if n_rollouts > 1 {
        returns.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(MonteCarloEstimate {
        mean,
        std_error: (var / n).sqrt(),
        n: n_rollouts,
    })
}

/// Policies of both players as plain mixes.
pub fn policy_pair(policies: &[EquilibriumResult]) -> PolicyPair {
    PolicyPair::from_equilibria(policies)
}

/// Uniform mixes everywhere; used before any learning has happened.
pub fn uniform_policies(spec: &GameSpec) -> PolicyPair {
    let n = spec.num_states();
    PolicyPair {
        attacker: vec![MixedStrategy::uniform(spec.n_attacker()); n],
        sensor: vec![MixedStrategy::uniform(spec.n_sensor()); n],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelSpec;
    use crate::game::tests::{default_channel, default_model, default_params, default_spec};
    use crate::game::{GameParams, GameState};

    /// A one-state game: single gain, tau_max 0.
    fn single_state(alpha_s: f64, alpha_a: f64, beta: f64) -> GameSpec {
        let ch = ChannelSpec::new(vec![1.0], vec![vec![1.0]], 0.5, 1.0).unwrap();
        let params = GameParams {
            tau_max: 0,
            alpha_s,
            alpha_a,
            beta,
            ..default_params()
        };
        GameSpec::new(default_model(), ch, params).unwrap()
    }

    #[test]
    fn learning_rate_schedule() {
        let cfg = LearnConfig::new(1, 0);
        assert_eq!(cfg.learning_rate(1), 10.0 / 16.0);
        assert_eq!(cfg.learning_rate(85), 0.1);
        let mut bad = cfg.clone();
        bad.exploration = 1.5;
        assert!(bad.validate().is_err());
        bad = cfg.clone();
        bad.lr_numerator = 20.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_episodes_give_zero_tables() {
        let spec = default_spec();
        let out = nash_q_learn(&spec, &LearnConfig::new(0, 3)).unwrap();
        assert!(out.tables.q1.iter().all(|&v| v == 0.0));
        assert_eq!(out.steps, 0);
        assert_eq!(out.policies.len(), 20);
    }

    #[test]
    fn myopic_single_state_converges_to_rewards() {
        let spec = single_state(1.0, 1.0, 1e-9);
        let mut cfg = LearnConfig::new(2000, 5);
        cfg.exploration = 1.0;
        let out = nash_q_learn(&spec, &cfg).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let r = spec.reward(0, a, b);
                assert!((out.tables.q1(0, a, b) - r).abs() < 1e-6, "{a} {b}");
            }
        }
    }

    #[test]
    fn visit_counts_total_steps_and_one_cell_per_step() {
        let spec = default_spec();
        let mut cfg = LearnConfig::new(50, 11);
        cfg.steps_per_episode = 7;
        let mut prev: Option<QTables> = None;
        let out = nash_q_learn_with(&spec, &cfg, |_, t| {
            if let Some(p) = &prev {
                assert!(p.visits.iter().zip(&t.visits).all(|(a, b)| a <= b));
                let changed = p.visits.iter().zip(&t.visits).map(|(a, b)| b - a).sum::<u64>();
                assert_eq!(changed, 7);
                let touched = p.q1.iter().zip(&t.q1).filter(|(a, b)| a != b).count();
                assert!(touched <= 7);
            }
            prev = Some(t.clone());
        })
        .unwrap();
        assert_eq!(out.tables.total_visits(), 350);
        assert_eq!(out.max_mirror_gap, 0.0);
    }

    #[test]
    fn determinism() {
        let spec = default_spec();
        let cfg = LearnConfig::new(200, 42);
        let a = nash_q_learn(&spec, &cfg).unwrap();
        let b = nash_q_learn(&spec, &cfg).unwrap();
        assert_eq!(a.tables, b.tables);
        let c = nash_q_learn(&spec, &LearnConfig::new(200, 43)).unwrap();
        assert_ne!(a.tables, c.tables);
    }

    #[test]
    fn oracle_myopic_and_constant() {
        let spec = single_state(1.0, 1.0, 1e-12);
        let sol = shapley_value_iteration(&spec, 1e-12).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert!((sol.tables.q1(0, a, b) - spec.reward(0, a, b)).abs() < 1e-10);
            }
        }

        // without action costs the reward is Tr P̄ at every cell
        let spec = single_state(0.0, 0.0, 0.5);
        let c = spec.reward(0, 0, 0);
        let sol = shapley_value_iteration(&spec, 1e-12).unwrap();
        for &v in &sol.tables.q1 {
            assert!((v - c / 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn oracle_is_contraction_and_fixed_point() {
        let spec = default_spec();
        let sol = shapley_value_iteration(&spec, ORACLE_TOL).unwrap();
        for w in sol.sweep_deltas.windows(2).skip(1) {
            assert!(w[1] <= spec.beta() * w[0] + 1e-9);
        }
        assert_eq!(sol.tables.mirror_gap(), 0.0);
        for p in &sol.policies {
            assert!(p.deviation_gap <= 1e-8);
        }
        // residual of the Bellman equation at the returned tables
        let v = sol.values_p1();
        for s in 0..spec.num_states() {
            let tau = spec.state_of(s).tau;
            for a in 0..2 {
                for b in 0..2 {
                    let e: f64 = spec.transition_distribution(s, a, b).iter().map(|&(t, p)| p * v[t]).sum();
                    let rhs = spec.reward(tau, a, b) + spec.beta() * e;
                    assert!((sol.tables.q1(s, a, b) - rhs).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn geometric_return_when_always_received() {
        let mut params = default_params();
        params.alpha_s = 0.0;
        params.alpha_a = 0.0;
        let spec = GameSpec::new(default_model(), default_channel(1e6), params).unwrap();
        let pol = PolicyPair::pure(&spec, 0, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = horizon_for(spec.beta());
        let est = empirical_return(&spec, &pol, 0, h, 10, &mut rng).unwrap();
        let c = spec.steady().trace_table[0];
        let exact = c * (1.0 - spec.beta().powi(h as i32)) / (1.0 - spec.beta());
        assert!((est.mean - exact).abs() < 1e-9);
        assert!(est.std_error < 1e-9);
    }

    #[test]
    fn return_matches_oracle_value() {
        let spec = default_spec();
        let sol = shapley_value_iteration(&spec, ORACLE_TOL).unwrap();
        let pol = policy_pair(&sol.policies);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let est = empirical_return(&spec, &pol, 0, horizon_for(spec.beta()), 4000, &mut rng).unwrap();
        let v0 = sol.policies[0].value_p1;
        assert!((est.mean - v0).abs() <= 3.0 * est.std_error + 1e-6, "{est:?} vs {v0}");
        assert_eq!(spec.state_of(0), GameState { tau: 0, gs: 1, ga: 1 });
    }
}

//! The attacker–sensor stochastic game.
//!
//! A state is `(τ, g_s, g_a)`: the holding time since the last received packet
//! and both players' current channel gains. The attacker (player 1) picks a
//! jamming power, the sensor (player 2) a transmission power. The attacker's
//! stage reward is `Tr[h^τ(P̄)] + α_s·b − α_a·a` and the sensor receives its
//! negation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_arrival, sample_index, ChannelSpec, StationaryDist};
use crate::equilibria::{EquilibriumResult, MixedStrategy};
use crate::error::{Error, Result};
use crate::estimation::{steady_state_covariance, SteadySummary, SystemModel, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Bits of resolution kept below the largest reward term.
const REWARD_GRID_BITS: i32 = 48;

/// How the next block's gains are drawn inside the game transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainMode {
    /// Independently from the stationary distribution `μ`.
    #[default]
    Stationary,
    /// From the kernel rows of the current gains.
    Markov,
}

/// Scalar parameters of the game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameParams {
    pub actions_attacker: Vec<f64>,
    pub actions_sensor: Vec<f64>,
    pub alpha_s: f64,
    pub alpha_a: f64,
    pub beta: f64,
    pub tau_max: usize,
    #[serde(default)]
    pub gain_mode: GainMode,
}

/// `(τ, g_s, g_a)` with gains stored as indices into the ascending gain set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GameState {
    pub tau: usize,
    pub gs: usize,
    pub ga: usize,
}

/// Whether the worst-case arrival probability clears `1 − 1/ρ(A)²`. When it
/// does not, the attacker can drive the expected error covariance unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundednessGuard {
    pub min_arrival: f64,
    pub threshold: f64,
    pub holds: bool,
}

#[derive(Debug, Clone)]
pub struct GameSpec {
    params: GameParams,
    channel: ChannelSpec,
    model: SystemModel,
    steady: SteadySummary,
    stationary: StationaryDist,
    /// q indexed `[a][b][gs][ga]`
    arrival: Vec<f64>,
    /// sparse next-state law indexed `[s][a][b]`
    transitions: Vec<Vec<(usize, f64)>>,
    /// attacker reward indexed `[m][a][b]`
    rewards: Vec<f64>,
    guard: BoundednessGuard,
}

impl GameSpec {
    pub fn new(model: SystemModel, channel: ChannelSpec, params: GameParams) -> Result<Self> {
        let steady = steady_state_covariance(&model, DEFAULT_TOL, DEFAULT_MAX_ITER, params.tau_max)?;
        Self::with_steady(model, channel, params, steady)
    }

    /// Builds the game from an already computed steady-state summary; the
    /// summary must tabulate traces at least up to `tau_max`.
    pub fn with_steady(
        model: SystemModel,
        channel: ChannelSpec,
        params: GameParams,
        steady: SteadySummary,
    ) -> Result<Self> {
        validate_actions("actions_attacker", &params.actions_attacker)?;
        validate_actions("actions_sensor", &params.actions_sensor)?;
        if !(params.beta > 0.0 && params.beta < 1.0) {
            return Err(Error::InvalidGame(format!("beta must lie in (0, 1), got {}", params.beta)));
        }
        for (name, v) in [("alpha_s", params.alpha_s), ("alpha_a", params.alpha_a)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidGame(format!("{name} must be nonnegative")));
            }
        }
        if steady.trace_table.len() < params.tau_max + 1 {
            return Err(Error::InvalidGame("trace table shorter than tau_max".into()));
        }
        let mut steady = steady;
        steady.trace_table.truncate(params.tau_max + 1);
        let stationary = channel.stationary_distribution()?;

        let (na, nb, l) = (params.actions_attacker.len(), params.actions_sensor.len(), channel.len());
        let mut arrival = Vec::with_capacity(na * nb * l * l);
        for &pa in &params.actions_attacker {
            for &ps in &params.actions_sensor {
                for &gs in channel.gains() {
                    for &ga in channel.gains() {
                        arrival.push(channel.packet_arrival_prob(ps, gs, pa, ga));
                    }
                }
            }
        }
        let min_arrival = arrival.iter().copied().fold(f64::INFINITY, f64::min);
        let threshold = steady.boundedness_threshold();
        let guard = BoundednessGuard {
            min_arrival,
            threshold,
            holds: min_arrival > threshold,
        };

        let mut spec = Self {
            params,
            channel,
            model,
            steady,
            stationary,
            arrival,
            transitions: Vec::new(),
            rewards: Vec::new(),
            guard,
        };
        spec.transitions = spec.build_transitions();
        spec.rewards = spec.build_rewards();
        Ok(spec)
    }

    pub fn params(&self) -> &GameParams {
        &self.params
    }

    pub fn channel(&self) -> &ChannelSpec {
        &self.channel
    }

    pub fn model(&self) -> &SystemModel {
        &self.model
    }

    pub fn steady(&self) -> &SteadySummary {
        &self.steady
    }

    pub fn stationary(&self) -> &StationaryDist {
        &self.stationary
    }

    pub fn guard(&self) -> BoundednessGuard {
        self.guard
    }

    pub fn beta(&self) -> f64 {
        self.params.beta
    }

    pub fn tau_max(&self) -> usize {
        self.params.tau_max
    }

    pub fn gain_mode(&self) -> GainMode {
        self.params.gain_mode
    }

    pub fn actions_attacker(&self) -> &[f64] {
        &self.params.actions_attacker
    }

    pub fn actions_sensor(&self) -> &[f64] {
        &self.params.actions_sensor
    }

    pub fn n_attacker(&self) -> usize {
        self.params.actions_attacker.len()
    }

    pub fn n_sensor(&self) -> usize {
        self.params.actions_sensor.len()
    }

    pub fn num_states(&self) -> usize {
        let l = self.channel.len();
        (self.params.tau_max + 1) * l * l
    }

    /// States in index order: τ ascending, then `g_s` descending, then `g_a`
    /// descending.
    pub fn enumerate_states(&self) -> Vec<GameState> {
        (0..self.num_states()).map(|i| self.state_of(i)).collect()
    }

    pub fn state_of(&self, index: usize) -> GameState {
        let l = self.channel.len();
        let tau = index / (l * l);
        let rem = index % (l * l);
        GameState {
            tau,
            gs: l - 1 - rem / l,
            ga: l - 1 - rem % l,
        }
    }

    pub fn index_of(&self, s: GameState) -> usize {
        let l = self.channel.len();
        s.tau * l * l + (l - 1 - s.gs) * l + (l - 1 - s.ga)
    }

    /// Gain values `(g_s, g_a)` of a state.
    pub fn gains_of(&self, s: GameState) -> (f64, f64) {
        (self.channel.gains()[s.gs], self.channel.gains()[s.ga])
    }

    /// Arrival probability by action and gain indices.
    pub fn arrival(&self, a: usize, b: usize, gs: usize, ga: usize) -> f64 {
        let (nb, l) = (self.n_sensor(), self.channel.len());
        self.arrival[((a * nb + b) * l + gs) * l + ga]
    }

    /// Attacker reward by holding time and action indices.
    #[inline]
    pub fn reward(&self, m: usize, a: usize, b: usize) -> f64 {
        let (na, nb) = (self.n_attacker(), self.n_sensor());
        self.rewards[(m * na + a) * nb + b]
    }

    /// Both reward terms are snapped to a common dyadic grid before they are
    /// added, so every sum and difference of rewards below is exact and the
    /// holding-time and action terms cancel bit for bit.
    fn build_rewards(&self) -> Vec<f64> {
        let p = &self.params;
        let action_term = |a: usize, b: usize| p.alpha_s * p.actions_sensor[b] - p.alpha_a * p.actions_attacker[a];
        let mut largest = self.steady.trace_table.iter().fold(1.0_f64, |m, t| m.max(t.abs()));
        for a in 0..self.n_attacker() {
            for b in 0..self.n_sensor() {
                largest = largest.max(action_term(a, b).abs());
            }
        }
        let step = 2f64.powi(largest.log2().ceil() as i32 - REWARD_GRID_BITS);
        let snap = |x: f64| (x / step).round() * step;
        let mut out = Vec::with_capacity(self.steady.trace_table.len() * self.n_attacker() * self.n_sensor());
        for &t in &self.steady.trace_table {
            for a in 0..self.n_attacker() {
                for b in 0..self.n_sensor() {
                    out.push(snap(t) + snap(action_term(a, b)));
                }
            }
        }
        out
    }

    /// `r¹(m, a, b) = Tr[h^m(P̄)] + α_s·b − α_a·a` for action values `a`, `b`.
    pub fn reward_attacker(&self, m: usize, a: f64, b: f64) -> Result<f64> {
        let (ai, bi) = self.action_indices(a, b)?;
        if m > self.params.tau_max {
            return Err(Error::InvalidArgument(format!(
                "holding time {m} exceeds tau_max {}",
                self.params.tau_max
            )));
        }
        Ok(self.reward(m, ai, bi))
    }

    /// `r² = −r¹`.
    pub fn reward_sensor(&self, m: usize, a: f64, b: f64) -> Result<f64> {
        self.reward_attacker(m, a, b).map(|r| -r)
    }

    fn action_indices(&self, a: f64, b: f64) -> Result<(usize, usize)> {
        let ai = self.params.actions_attacker.iter().position(|&x| x == a);
        let bi = self.params.actions_sensor.iter().position(|&x| x == b);
        match (ai, bi) {
            (Some(ai), Some(bi)) => Ok((ai, bi)),
            _ => Err(Error::InvalidArgument(format!(
                "action pair ({a}, {b}) is not in the action sets"
            ))),
        }
    }

    /// Weight of next gain `to` given current gain `from`.
    fn gain_weight(&self, from: usize, to: usize) -> f64 {
        match self.params.gain_mode {
            GainMode::Stationary => self.stationary.mu[to],
            GainMode::Markov => self.channel.kernel()[from][to],
        }
    }

    fn build_transitions(&self) -> Vec<Vec<(usize, f64)>> {
        let (na, nb, l) = (self.n_attacker(), self.n_sensor(), self.channel.len());
        let mut out = Vec::with_capacity(self.num_states() * na * nb);
        for s in self.enumerate_states() {
            let fail_tau = (s.tau + 1).min(self.params.tau_max);
            for a in 0..na {
                for b in 0..nb {
                    let q = self.arrival(a, b, s.gs, s.ga);
                    let mut dist: Vec<(usize, f64)> = Vec::with_capacity(2 * l * l);
                    for t in 0..l {
                        for e in 0..l {
                            let w = self.gain_weight(s.gs, t) * self.gain_weight(s.ga, e);
                            if w == 0.0 {
                                continue;
                            }
                            let ok = self.index_of(GameState { tau: 0, gs: t, ga: e });
                            let fail = self.index_of(GameState { tau: fail_tau, gs: t, ga: e });
                            push_mass(&mut dist, ok, q * w);
                            push_mass(&mut dist, fail, (1.0 - q) * w);
                        }
                    }
                    dist.retain(|&(_, p)| p > 0.0);
                    dist.sort_by_key(|&(i, _)| i);
                    out.push(dist);
                }
            }
        }
        out
    }

    /// Next-state distribution as `(state index, probability)` pairs sorted by
    /// index.
    pub fn transition_distribution(&self, s: usize, a: usize, b: usize) -> &[(usize, f64)] {
        let (na, nb) = (self.n_attacker(), self.n_sensor());
        &self.transitions[(s * na + a) * nb + b]
    }

    /// Samples the successor of `s` under actions `(a, b)`; also returns the
    /// arrival indicator.
    pub fn sample_next<R: Rng + ?Sized>(&self, s: GameState, a: usize, b: usize, rng: &mut R) -> (GameState, bool) {
        let q = self.arrival(a, b, s.gs, s.ga);
        let gamma = sample_arrival(q, rng);
        let (gs, ga) = match self.params.gain_mode {
            GainMode::Stationary => (
                sample_index(&self.stationary.mu, rng),
                sample_index(&self.stationary.mu, rng),
            ),
            GainMode::Markov => (self.channel.step_gain(s.gs, rng), self.channel.step_gain(s.ga, rng)),
        };
        let tau = if gamma { 0 } else { (s.tau + 1).min(self.params.tau_max) };
        (GameState { tau, gs, ga }, gamma)
    }

    /// Closed-loop rollout under stationary policies.
    pub fn simulate_trajectory<R: Rng + ?Sized>(
        &self,
        policies: &PolicyPair,
        start: GameState,
        horizon: usize,
        rng: &mut R,
    ) -> Result<Vec<TrajectoryStep>> {
        policies.check(self)?;
        self.check_state(start)?;
        let mut s = start;
        let mut out = Vec::with_capacity(horizon);
        for step in 0..horizon {
            let idx = self.index_of(s);
            let a = sample_index(policies.attacker[idx].probs(), rng);
            let b = sample_index(policies.sensor[idx].probs(), rng);
            let q = self.arrival(a, b, s.gs, s.ga);
            let (next, gamma) = self.sample_next(s, a, b, rng);
            let (g_s, g_a) = self.gains_of(s);
            out.push(TrajectoryStep {
                step,
                tau: s.tau,
                g_s,
                g_a,
                a: self.params.actions_attacker[a],
                b: self.params.actions_sensor[b],
                q,
                gamma,
                trace_p: self.steady.trace_table[s.tau],
                r1: self.reward(s.tau, a, b),
            });
            s = next;
        }
        Ok(out)
    }

    pub fn check_state(&self, s: GameState) -> Result<()> {
        let l = self.channel.len();
        if s.tau > self.params.tau_max || s.gs >= l || s.ga >= l {
            return Err(Error::InvalidArgument(format!("state {s:?} is out of range")));
        }
        Ok(())
    }
}

fn validate_actions(name: &str, actions: &[f64]) -> Result<()> {
    if actions.is_empty() {
        return Err(Error::InvalidGame(format!("{name} is empty")));
    }
    if actions.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
        return Err(Error::InvalidGame(format!("{name} must be positive")));
    }
    if actions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGame(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

fn push_mass(dist: &mut Vec<(usize, f64)>, idx: usize, p: f64) {
    match dist.iter_mut().find(|(i, _)| *i == idx) {
        Some((_, m)) => *m += p,
        None => dist.push((idx, p)),
    }
}

/// Stationary strategies of both players, one mix per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyPair {
    pub attacker: Vec<MixedStrategy>,
    pub sensor: Vec<MixedStrategy>,
}

impl PolicyPair {
    pub fn from_equilibria(eqs: &[EquilibriumResult]) -> Self {
        Self {
            attacker: eqs.iter().map(|e| e.strat_p1.clone()).collect(),
            sensor: eqs.iter().map(|e| e.strat_p2.clone()).collect(),
        }
    }

    /// Both players always play the given action indices.
    pub fn pure(spec: &GameSpec, a: usize, b: usize) -> Self {
        let n = spec.num_states();
        Self {
            attacker: vec![MixedStrategy::pure(spec.n_attacker(), a); n],
            sensor: vec![MixedStrategy::pure(spec.n_sensor(), b); n],
        }
    }

    pub fn check(&self, spec: &GameSpec) -> Result<()> {
        let n = spec.num_states();
        if self.attacker.len() != n || self.sensor.len() != n {
            return Err(Error::InvalidArgument(format!(
                "policies cover {}/{} states, expected {n}",
                self.attacker.len(),
                self.sensor.len()
            )));
        }
        if self.attacker.iter().any(|m| m.len() != spec.n_attacker())
            || self.sensor.iter().any(|m| m.len() != spec.n_sensor())
        {
            return Err(Error::InvalidArgument("policy action dimension mismatch".into()));
        }
        Ok(())
    }
}

/// One step of a closed-loop rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub step: usize,
    pub tau: usize,
    pub g_s: f64,
    pub g_a: f64,
    pub a: f64,
    pub b: f64,
    pub q: f64,
    pub gamma: bool,
    pub trace_p: f64,
    pub r1: f64,
}

/// `Σ_k β^k r¹_k` along a recorded trajectory.
pub fn discounted_return(steps: &[TrajectoryStep], beta: f64) -> f64 {
    let mut disc = 1.0;
    let mut total = 0.0;
    for s in steps {
        total += disc * s.r1;
        disc *= beta;
    }
    total
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn default_model() -> SystemModel {
        SystemModel::scalar(1.2, 0.7, 0.8, 0.8).unwrap()
    }

    pub(crate) fn default_channel(alpha: f64) -> ChannelSpec {
        ChannelSpec::new(vec![0.6, 0.8], vec![vec![0.5, 0.5], vec![0.5, 0.5]], 0.5, alpha).unwrap()
    }

    pub(crate) fn default_params() -> GameParams {
        GameParams {
            actions_attacker: vec![1.0, 6.0],
            actions_sensor: vec![2.0, 5.0],
            alpha_s: 1.0,
            alpha_a: 1.0,
            beta: 0.75,
            tau_max: 4,
            gain_mode: GainMode::Stationary,
        }
    }

    pub(crate) fn default_spec() -> GameSpec {
        GameSpec::new(default_model(), default_channel(1.0), default_params()).unwrap()
    }

    fn p_bar_oracle() -> f64 {
        (-0.04 + (0.04_f64 * 0.04 + 4.0 * 0.7056 * 0.64).sqrt()) / (2.0 * 0.7056)
    }

    #[test]
    fn rewards() {
        let mut params = default_params();
        params.alpha_s = 0.0;
        params.alpha_a = 0.0;
        let spec = GameSpec::new(default_model(), default_channel(1.0), params).unwrap();
        assert!((spec.reward_attacker(0, 1.0, 2.0).unwrap() - p_bar_oracle()).abs() < 1e-10);

        let spec = default_spec();
        let r = spec.reward_attacker(0, 1.0, 2.0).unwrap();
        assert!((r - (p_bar_oracle() + 2.0 - 1.0)).abs() < 1e-10);
        assert!((r - 1.9245).abs() < 1e-4);
        assert!(spec.reward_attacker(5, 1.0, 2.0).is_err());
        assert!(spec.reward_attacker(0, 2.0, 2.0).is_err());
        for m in 0..=4 {
            for &a in spec.actions_attacker() {
                for &b in spec.actions_sensor() {
                    let r1 = spec.reward_attacker(m, a, b).unwrap();
                    assert_eq!(r1 + spec.reward_sensor(m, a, b).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn reward_monotone_over_grid() {
        let spec = default_spec();
        for m in 0..4 {
            for a in 0..2 {
                for b in 0..2 {
                    assert!(spec.reward(m + 1, a, b) > spec.reward(m, a, b));
                }
            }
        }
        for m in 0..=4 {
            assert!(spec.reward(m, 0, 1) > spec.reward(m, 0, 0));
            assert!(spec.reward(m, 1, 0) < spec.reward(m, 0, 0));
        }
    }

    #[test]
    fn state_enumeration() {
        let spec = default_spec();
        let states = spec.enumerate_states();
        assert_eq!(states.len(), 20);
        // s0 = (0, 0.8, 0.8), s1 = (0, 0.8, 0.6), s4 = (1, 0.8, 0.8)
        assert_eq!(spec.gains_of(states[0]), (0.8, 0.8));
        assert_eq!(spec.gains_of(states[1]), (0.8, 0.6));
        assert_eq!(spec.gains_of(states[2]), (0.6, 0.8));
        assert_eq!(states[4].tau, 1);
        assert_eq!(states[12], GameState { tau: 3, gs: 1, ga: 1 });
        for (i, s) in states.iter().enumerate() {
            assert_eq!(spec.index_of(*s), i);
        }

        let mut p = default_params();
        p.tau_max = 0;
        let one = ChannelSpec::new(vec![1.0], vec![vec![1.0]], 0.5, 1.0).unwrap();
        let spec = GameSpec::new(default_model(), one, p).unwrap();
        assert_eq!(spec.enumerate_states().len(), 1);
    }

    #[test]
    fn transitions_sum_to_one_with_two_tau_targets() {
        for mode in [GainMode::Stationary, GainMode::Markov] {
            let mut p = default_params();
            p.gain_mode = mode;
            let ch = ChannelSpec::new(vec![0.6, 0.8], vec![vec![0.7, 0.3], vec![0.6, 0.4]], 0.5, 1.0).unwrap();
            let spec = GameSpec::new(default_model(), ch, p).unwrap();
            for s in 0..spec.num_states() {
                let st = spec.state_of(s);
                for a in 0..2 {
                    for b in 0..2 {
                        let d = spec.transition_distribution(s, a, b);
                        let total: f64 = d.iter().map(|x| x.1).sum();
                        assert!((total - 1.0).abs() < 1e-12);
                        for &(n, _) in d {
                            let t = spec.state_of(n).tau;
                            assert!(t == 0 || t == (st.tau + 1).min(4));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn stationary_mode_splits_evenly() {
        let spec = default_spec();
        let s = spec.index_of(GameState { tau: 2, gs: 1, ga: 0 });
        let q = spec.arrival(1, 0, 1, 0);
        let d = spec.transition_distribution(s, 1, 0);
        assert_eq!(d.len(), 8);
        for &(n, p) in d {
            let expected = if spec.state_of(n).tau == 0 { q } else { 1.0 - q } * 0.25;
            assert!((p - expected).abs() < 1e-15);
        }
        // next-gain marginal is μ⊗μ
        for t in 0..2 {
            for e in 0..2 {
                let m: f64 = d
                    .iter()
                    .filter(|(n, _)| {
                        let st = spec.state_of(*n);
                        st.gs == t && st.ga == e
                    })
                    .map(|x| x.1)
                    .sum();
                assert!((m - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn degenerate_arrival_extremes() {
        // huge α: q = 1 everywhere
        let spec = GameSpec::new(default_model(), default_channel(1e6), default_params()).unwrap();
        for s in 0..spec.num_states() {
            for &(n, p) in spec.transition_distribution(s, 1, 0) {
                assert!(spec.state_of(n).tau == 0 || p == 0.0);
            }
        }
        // vanishing α: q ≈ 0
        let spec = GameSpec::new(default_model(), default_channel(1e-300), default_params()).unwrap();
        let s = spec.index_of(GameState { tau: 4, gs: 0, ga: 0 });
        let mass_at_cap: f64 = spec
            .transition_distribution(s, 0, 0)
            .iter()
            .filter(|(n, _)| spec.state_of(*n).tau == 4)
            .map(|x| x.1)
            .sum();
        assert!((mass_at_cap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trajectory_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let start = GameState { tau: 0, gs: 1, ga: 1 };

        let spec = GameSpec::new(default_model(), default_channel(1e6), default_params()).unwrap();
        let pol = PolicyPair::pure(&spec, 1, 0);
        let traj = spec.simulate_trajectory(&pol, start, 50, &mut rng).unwrap();
        assert!(traj.iter().all(|s| s.tau == 0 && s.trace_p == spec.steady().trace_table[0]));

        let spec = GameSpec::new(default_model(), default_channel(1e-300), default_params()).unwrap();
        let traj = spec.simulate_trajectory(&pol, start, 50, &mut rng).unwrap();
        for (k, s) in traj.iter().enumerate() {
            assert_eq!(s.tau, k.min(4));
        }
    }

    #[test]
    fn empirical_arrival_frequency() {
        let spec = default_spec();
        let pol = PolicyPair::pure(&spec, 1, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let start = GameState { tau: 0, gs: 1, ga: 0 };
        let traj = spec.simulate_trajectory(&pol, start, 100_000, &mut rng).unwrap();
        // gains are redrawn each step, so average the exact q over μ⊗μ
        let exact: f64 = (0..2)
            .flat_map(|gs| (0..2).map(move |ga| (gs, ga)))
            .map(|(gs, ga)| 0.25 * spec.arrival(1, 0, gs, ga))
            .sum();
        let freq = traj.iter().filter(|s| s.gamma).count() as f64 / traj.len() as f64;
        assert!((freq - exact).abs() < 0.01, "{freq} vs {exact}");
    }

    #[test]
    fn invalid_params() {
        let mut p = default_params();
        p.beta = 1.0;
        assert!(GameSpec::new(default_model(), default_channel(1.0), p).is_err());
        let mut p = default_params();
        p.actions_attacker = vec![6.0, 1.0];
        assert!(GameSpec::new(default_model(), default_channel(1.0), p).is_err());
        let mut p = default_params();
        p.actions_sensor.clear();
        assert!(GameSpec::new(default_model(), default_channel(1.0), p).is_err());
    }

    #[test]
    fn guard_is_reported_both_ways() {
        let spec = default_spec();
        let g = spec.guard();
        assert!((g.threshold - (1.0 - 1.0 / 1.44)).abs() < 1e-12);
        assert_eq!(g.holds, g.min_arrival > g.threshold);
        let weak = GameSpec::new(default_model(), default_channel(0.01), default_params()).unwrap();
        assert!(!weak.guard().holds);
        let strong = GameSpec::new(default_model(), default_channel(50.0), default_params()).unwrap();
        assert!(strong.guard().holds);
    }
}

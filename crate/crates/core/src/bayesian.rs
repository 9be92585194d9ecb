//! The incomplete-information game: each player knows only its own channel
//! gain.
//!
//! A pure strategy is a map from own type to action, so a player with `|Θ|`
//! types and `|A|` actions has `|A|^|Θ|` of them. The expanded matrix game over
//! those maps is zero-sum and solved by linear programming; the optimal mix is
//! then marginalized into one action distribution per type.

use serde::{Deserialize, Serialize};

use crate::equilibria::{zero_sum_value, MixedStrategy, StageGame, NORMALIZATION_TOL};
use crate::error::{Error, Result};
use crate::game::{GameSpec, GameState};

/// Cap on type-contingent pure strategies per player.
pub const MAX_PURE_STRATEGIES: usize = 64;

/// Joint prior over `(g_s, g_a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeliefMode {
    /// `μ(g_s)·μ(g_a)`: independent draws from the stationary distribution.
    #[default]
    Product,
    /// `μ(g_s)·Π(g_a | g_s)`: the attacker's gain is one kernel step from the
    /// sensor's.
    Kernel,
}

/// What a type pair and action pair pay the attacker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffMode {
    /// Immediate reward `r¹(m, a, b)` at a fixed holding time.
    #[default]
    Stage,
    /// `r¹(m, a, b) + β Σ Pr(s') v¹*(s')` with externally supplied values.
    Lookahead,
}

/// A two-player zero-sum Bayesian game with a common prior.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesianSpec {
    types_sensor: Vec<f64>,
    types_attacker: Vec<f64>,
    actions_attacker: Vec<f64>,
    actions_sensor: Vec<f64>,
    /// `belief[gs][ga]`
    belief: Vec<Vec<f64>>,
    /// attacker payoff, flat `[gs][ga][a][b]`
    payoff: Vec<f64>,
}

impl BayesianSpec {
    /// `payoff[gs][ga]` is the attacker's `|A_a| × |A_s|` matrix for that type
    /// pair.
    pub fn new(
        types_sensor: Vec<f64>,
        types_attacker: Vec<f64>,
        actions_attacker: Vec<f64>,
        actions_sensor: Vec<f64>,
        belief: Vec<Vec<f64>>,
        payoff: Vec<Vec<Vec<Vec<f64>>>>,
    ) -> Result<Self> {
        let (ts, ta) = (types_sensor.len(), types_attacker.len());
        let (na, nb) = (actions_attacker.len(), actions_sensor.len());
        if ts == 0 || ta == 0 || na == 0 || nb == 0 {
            return Err(Error::InvalidGame("types and actions must be nonempty".into()));
        }
        if belief.len() != ts || belief.iter().any(|r| r.len() != ta) {
            return Err(Error::Dimension(format!("belief must be {ts}x{ta}")));
        }
        if belief.iter().flatten().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidGame("belief has a negative or non-finite entry".into()));
        }
        let total: f64 = belief.iter().flatten().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidGame(format!("belief sums to {total}")));
        }
        for (name, marg) in [("sensor", row_sums(&belief)), ("attacker", col_sums(&belief))] {
            if marg.iter().any(|&p| p <= 0.0) {
                return Err(Error::InvalidGame(format!("{name} type with zero prior mass")));
            }
        }
        let mut flat: Vec<f64> = Vec::with_capacity(ts * ta * na * nb);
        if payoff.len() != ts {
            return Err(Error::Dimension("payoff must have one block per sensor type".into()));
        }
        for row in &payoff {
            if row.len() != ta {
                return Err(Error::Dimension("payoff must have one block per attacker type".into()));
            }
            for m in row {
                if m.len() != na || m.iter().any(|r| r.len() != nb) {
                    return Err(Error::Dimension(format!("payoff blocks must be {na}x{nb}")));
                }
                flat.extend(m.iter().flatten());
            }
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGame("payoff has a non-finite entry".into()));
        }
        Ok(Self {
            types_sensor,
            types_attacker,
            actions_attacker,
            actions_sensor,
            belief,
            payoff: flat,
        })
    }

    /// Bayesian version of the jamming game at holding time `m`. Types are the
    /// channel gains. `values` are the attacker's state values and are only
    /// read in [`PayoffMode::Lookahead`].
    pub fn from_game(
        spec: &GameSpec,
        m: usize,
        belief: BeliefMode,
        payoff: PayoffMode,
        values: Option<&[f64]>,
    ) -> Result<Self> {
        if m > spec.tau_max() {
            return Err(Error::InvalidArgument(format!(
                "holding time {m} exceeds tau_max {}",
                spec.tau_max()
            )));
        }
        let l = spec.channel().len();
        let mu = &spec.stationary().mu;
        let kernel = spec.channel().kernel();
        let prior: Vec<Vec<f64>> = (0..l)
            .map(|gs| {
                (0..l)
                    .map(|ga| match belief {
                        BeliefMode::Product => mu[gs] * mu[ga],
                        BeliefMode::Kernel => mu[gs] * kernel[gs][ga],
                    })
                    .collect()
            })
            .collect();
        let values = match payoff {
            PayoffMode::Stage => None,
            PayoffMode::Lookahead => {
                let v = values.ok_or_else(|| {
                    Error::InvalidArgument("lookahead payoff needs state values".into())
                })?;
                if v.len() != spec.num_states() {
                    return Err(Error::Dimension(format!(
                        "{} state values for {} states",
                        v.len(),
                        spec.num_states()
                    )));
                }
                Some(v)
            }
        };
        let (na, nb) = (spec.n_attacker(), spec.n_sensor());
        let table: Vec<Vec<Vec<Vec<f64>>>> = (0..l)
            .map(|gs| {
                (0..l)
                    .map(|ga| {
                        let s = spec.index_of(GameState { tau: m, gs, ga });
                        (0..na)
                            .map(|a| {
                                (0..nb)
                                    .map(|b| {
                                        let r = spec.reward(m, a, b);
                                        match values {
                                            None => r,
                                            Some(v) => {
                                                let ev: f64 = spec
                                                    .transition_distribution(s, a, b)
                                                    .iter()
                                                    .map(|&(t, p)| p * v[t])
                                                    .sum();
                                                r + spec.beta() * ev
                                            }
                                        }
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let gains = spec.channel().gains().to_vec();
        Self::new(
            gains.clone(),
            gains,
            spec.actions_attacker().to_vec(),
            spec.actions_sensor().to_vec(),
            prior,
            table,
        )
    }

    /// One type per player: the complete-information game `game` (attacker
    /// rows).
    pub fn single_type(game: &StageGame, actions_attacker: Vec<f64>, actions_sensor: Vec<f64>) -> Result<Self> {
        Self::new(vec![0.0], vec![0.0], actions_attacker, actions_sensor, vec![vec![1.0]], vec![vec![game.payoff_p1()]])
    }

    pub fn types_sensor(&self) -> &[f64] {
        &self.types_sensor
    }

    pub fn types_attacker(&self) -> &[f64] {
        &self.types_attacker
    }

    pub fn actions_attacker(&self) -> &[f64] {
        &self.actions_attacker
    }

    pub fn actions_sensor(&self) -> &[f64] {
        &self.actions_sensor
    }

    pub fn belief(&self) -> &[Vec<f64>] {
        &self.belief
    }

    pub fn payoff(&self, gs: usize, ga: usize, a: usize, b: usize) -> f64 {
        let (ta, na, nb) = (self.types_attacker.len(), self.actions_attacker.len(), self.actions_sensor.len());
        self.payoff[((gs * ta + ga) * na + a) * nb + b]
    }

    /// Number of type-contingent pure strategies `(attacker, sensor)`, or
    /// `None` on overflow.
    pub fn strategy_counts(&self) -> (Option<usize>, Option<usize>) {
        (
            checked_pow(self.actions_attacker.len(), self.types_attacker.len()),
            checked_pow(self.actions_sensor.len(), self.types_sensor.len()),
        )
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    base.checked_pow(u32::try_from(exp).ok()?)
}

fn row_sums(m: &[Vec<f64>]) -> Vec<f64> {
    m.iter().map(|r| r.iter().sum()).collect()
}

fn col_sums(m: &[Vec<f64>]) -> Vec<f64> {
    (0..m[0].len()).map(|j| m.iter().map(|r| r[j]).sum()).collect()
}

/// Action chosen by pure strategy `k` for `ty`: digit `ty` of `k` in base
/// `n_actions`.
#[inline]
fn action_of(k: usize, ty: usize, n_actions: usize) -> usize {
    (k / n_actions.pow(ty as u32)) % n_actions
}

/// One action distribution per own type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeStrategy {
    pub types: Vec<f64>,
    pub actions: Vec<f64>,
    pub per_type: Vec<MixedStrategy>,
}

impl TypeStrategy {
    pub fn new(types: Vec<f64>, actions: Vec<f64>, per_type: Vec<MixedStrategy>) -> Result<Self> {
        if per_type.len() != types.len() || per_type.iter().any(|m| m.len() != actions.len()) {
            return Err(Error::Dimension(format!(
                "need {} mixes over {} actions",
                types.len(),
                actions.len()
            )));
        }
        Ok(Self { types, actions, per_type })
    }

    /// The same mix for every type.
    pub fn type_blind(types: Vec<f64>, actions: Vec<f64>, mix: MixedStrategy) -> Result<Self> {
        let per_type = vec![mix; types.len()];
        Self::new(types, actions, per_type)
    }

    pub fn prob(&self, ty: usize, action: usize) -> f64 {
        self.per_type[ty].probs()[action]
    }
}

/// Expected attacker payoff over type-contingent pure strategies: rows are
/// attacker maps `g_a → a`, columns sensor maps `g_s → b`.
pub fn expand_matrix(spec: &BayesianSpec) -> Result<StageGame> {
    let (na, nb) = (spec.actions_attacker.len(), spec.actions_sensor.len());
    let (ta, ts) = (spec.types_attacker.len(), spec.types_sensor.len());
    let (rows, cols) = match spec.strategy_counts() {
        (Some(r), Some(c)) if r <= MAX_PURE_STRATEGIES && c <= MAX_PURE_STRATEGIES => (r, c),
        (r, c) => {
            return Err(Error::TooLarge(format!(
                "{} x {} type-contingent strategies (limit {MAX_PURE_STRATEGIES})",
                r.map_or("overflow".into(), |v| v.to_string()),
                c.map_or("overflow".into(), |v| v.to_string())
            )))
        }
    };
    let mut p1 = vec![0.0; rows * cols];
    for k in 0..rows {
        for l in 0..cols {
            let mut acc = 0.0;
            for gs in 0..ts {
                let b = action_of(l, gs, nb);
                for ga in 0..ta {
                    let w = spec.belief[gs][ga];
                    if w != 0.0 {
                        acc += w * spec.payoff(gs, ga, action_of(k, ga, na), b);
                    }
                }
            }
            p1[k * cols + l] = acc;
        }
    }
    let p2 = p1.iter().map(|v| -v).collect();
    StageGame::from_flat(rows, cols, p1, p2)
}

/// Per-type marginals of a mix over type-contingent pure strategies.
pub fn marginalize(mix: &MixedStrategy, types: &[f64], actions: &[f64]) -> Result<TypeStrategy> {
    let n = actions.len();
    let mut per_type = Vec::with_capacity(types.len());
    for ty in 0..types.len() {
        let mut probs = vec![0.0; n];
        for (k, &p) in mix.probs().iter().enumerate() {
            probs[action_of(k, ty, n)] += p;
        }
        let sum: f64 = probs.iter().sum();
        debug_assert!((sum - 1.0).abs() <= 1e-9, "marginal sums to {sum}");
        let mixed = if (sum - 1.0).abs() <= NORMALIZATION_TOL {
            MixedStrategy::new(probs)?
        } else {
            MixedStrategy::normalized(probs)?
        };
        per_type.push(mixed);
    }
    TypeStrategy::new(types.to_vec(), actions.to_vec(), per_type)
}

/// Solution of the Bayesian game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesianSolution {
    pub attacker: TypeStrategy,
    pub sensor: TypeStrategy,
    /// Ex-ante attacker value.
    pub value: f64,
    pub deviation_gap: f64,
}

/// Expands, solves by linear programming, and marginalizes to per-type
/// strategies.
pub fn solve_bayesian(spec: &BayesianSpec) -> Result<BayesianSolution> {
    let game = expand_matrix(spec)?;
    let eq = zero_sum_value(&game)?;
    let attacker = marginalize(&eq.strat_p1, &spec.types_attacker, &spec.actions_attacker)?;
    let sensor = marginalize(&eq.strat_p2, &spec.types_sensor, &spec.actions_sensor)?;
    let deviation_gap = bayes_deviation_gap(spec, &attacker, &sensor);
    Ok(BayesianSolution {
        attacker,
        sensor,
        value: eq.value_p1,
        deviation_gap,
    })
}

/// Ex-ante attacker payoff of a pair of type strategies.
pub fn expected_payoff(spec: &BayesianSpec, attacker: &TypeStrategy, sensor: &TypeStrategy) -> f64 {
    let mut acc = 0.0;
    for (gs, row) in spec.belief.iter().enumerate() {
        for (ga, &w) in row.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let x = attacker.per_type[ga].probs();
            let y = sensor.per_type[gs].probs();
            let mut cell = 0.0;
            for (a, &pa) in x.iter().enumerate() {
                for (b, &pb) in y.iter().enumerate() {
                    cell += pa * pb * spec.payoff(gs, ga, a, b);
                }
            }
            acc += w * cell;
        }
    }
    acc
}

/// Largest interim gain any type of either player gets from switching to a
/// pure action, with opponent types weighted by the conditional belief.
pub fn bayes_deviation_gap(spec: &BayesianSpec, attacker: &TypeStrategy, sensor: &TypeStrategy) -> f64 {
    let (na, nb) = (spec.actions_attacker.len(), spec.actions_sensor.len());
    let mut gap = 0.0_f64;

    for ga in 0..spec.types_attacker.len() {
        let mass: f64 = spec.belief.iter().map(|r| r[ga]).sum();
        let utility: Vec<f64> = (0..na)
            .map(|a| {
                spec.belief
                    .iter()
                    .enumerate()
                    .map(|(gs, r)| {
                        let y = sensor.per_type[gs].probs();
                        r[ga] / mass * (0..nb).map(|b| y[b] * spec.payoff(gs, ga, a, b)).sum::<f64>()
                    })
                    .sum()
            })
            .collect();
        let best = utility.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        gap = gap.max(best - attacker.per_type[ga].expectation(&utility));
    }

    for gs in 0..spec.types_sensor.len() {
        let row = &spec.belief[gs];
        let mass: f64 = row.iter().sum();
        // sensor payoff is the negated attacker payoff
        let utility: Vec<f64> = (0..nb)
            .map(|b| {
                row.iter()
                    .enumerate()
                    .map(|(ga, &w)| {
                        let x = attacker.per_type[ga].probs();
                        -w / mass * (0..na).map(|a| x[a] * spec.payoff(gs, ga, a, b)).sum::<f64>()
                    })
                    .sum()
            })
            .collect();
        let best = utility.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        gap = gap.max(best - sensor.per_type[gs].expectation(&utility));
    }
    gap.max(0.0)
}

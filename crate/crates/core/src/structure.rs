//! Checks of the monotone structure of the game: strict supermodularity of
//! `Q*`, the channel constant `ε_max`, the ratio/action-product sufficient
//! condition, and strict monotonicity of equilibrium policies.
//!
//! States are ordered componentwise on `(τ, g_s, g_a)` and a state pair
//! `s₁ ≻ s₂` requires every coordinate to be strictly larger.

use serde::{Deserialize, Serialize};

use crate::equilibria::EquilibriumResult;
use crate::error::{Error, Result};
use crate::game::{GameSpec, GameState};
use crate::nashq::QTables;

/// Ratios closer than this to an undefined `0/0` are reported as undefined.
const RATIO_EPS: f64 = 1e-12;

/// A real function on a finite product of chains, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFunction {
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl LatticeFunction {
    pub fn new(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let len: usize = dims.iter().product();
        if dims.is_empty() || dims.contains(&0) || len != values.len() {
            return Err(Error::Dimension(format!(
                "lattice of shape {dims:?} cannot hold {} values",
                values.len()
            )));
        }
        Ok(Self { dims, values })
    }

    /// Tabulates `f` over the grid.
    pub fn from_fn(dims: Vec<usize>, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let len: usize = dims.iter().product();
        let mut values = Vec::with_capacity(len);
        let mut point = vec![0; dims.len()];
        for flat in 0..len {
            unflatten(&dims, flat, &mut point);
            values.push(f(&point));
        }
        Self::new(dims, values)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn get(&self, point: &[usize]) -> f64 {
        self.values[flatten(&self.dims, point)]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, flat: usize) -> Vec<usize> {
        let mut p = vec![0; self.dims.len()];
        unflatten(&self.dims, flat, &mut p);
        p
    }
}

fn flatten(dims: &[usize], point: &[usize]) -> usize {
    dims.iter().zip(point).fold(0, |acc, (&d, &p)| acc * d + p)
}

fn unflatten(dims: &[usize], mut flat: usize, out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = flat % dims[k];
        flat /= dims[k];
    }
}

fn weakly_below(x: &[usize], y: &[usize]) -> bool {
    x.iter().zip(y).all(|(a, b)| a <= b)
}

/// `(x, y, f(x∨y) + f(x∧y) − f(x) − f(y))` for a failing pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupermodularWitness {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupermodularReport {
    pub holds: bool,
    pub pairs_checked: usize,
    /// Smallest margin over checked pairs; `None` when nothing was checked.
    pub min_margin: Option<f64>,
    pub witness: Option<SupermodularWitness>,
}

/// Brute-force strict supermodularity over every incomparable pair `{x, y}`
/// accepted by `filter`. The filter sees each unordered pair once per
/// orientation and the pair is checked if either orientation is accepted.
pub fn check_supermodular_with<F>(f: &LatticeFunction, filter: F) -> SupermodularReport
where
    F: Fn(&[usize], &[usize]) -> bool,
{
    let n = f.len();
    let points: Vec<Vec<usize>> = (0..n).map(|i| f.point(i)).collect();
    let mut join = vec![0; f.dims.len()];
    let mut meet = vec![0; f.dims.len()];
    let mut pairs = 0usize;
    let mut min_margin: Option<f64> = None;
    let mut witness: Option<SupermodularWitness> = None;

    for i in 0..n {
        for j in i + 1..n {
            let (x, y) = (&points[i], &points[j]);
            if weakly_below(x, y) || weakly_below(y, x) {
                continue;
            }
            if !filter(x, y) && !filter(y, x) {
                continue;
            }
            for k in 0..x.len() {
                join[k] = x[k].max(y[k]);
                meet[k] = x[k].min(y[k]);
            }
            let margin = f.get(&join) + f.get(&meet) - f.values[i] - f.values[j];
            pairs += 1;
            if min_margin.is_none_or(|m| margin < m) {
                min_margin = Some(margin);
            }
            if !(margin > 0.0) && witness.is_none() {
                witness = Some(SupermodularWitness {
                    x: x.clone(),
                    y: y.clone(),
                    margin,
                });
            }
        }
    }
    SupermodularReport {
        holds: witness.is_none(),
        pairs_checked: pairs,
        min_margin,
        witness,
    }
}

/// Strict supermodularity over all incomparable pairs.
pub fn check_supermodular(f: &LatticeFunction) -> SupermodularReport {
    check_supermodular_with(f, |_, _| true)
}

/// Which player's table to view as a lattice function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Player {
    Attacker,
    Sensor,
}

/// `Qⁱ` on the lattice `(τ, g_s, g_a, a₁, a₂)`, gains and powers ascending.
pub fn q_lattice(spec: &GameSpec, tables: &QTables, player: Player) -> Result<LatticeFunction> {
    tables.check_spec(spec)?;
    let l = spec.channel().len();
    let dims = vec![spec.tau_max() + 1, l, l, spec.n_attacker(), spec.n_sensor()];
    LatticeFunction::from_fn(dims, |p| {
        let s = spec.index_of(GameState {
            tau: p[0],
            gs: p[1],
            ga: p[2],
        });
        match player {
            Player::Attacker => tables.q1(s, p[3], p[4]),
            Player::Sensor => tables.q2(s, p[3], p[4]),
        }
    })
}

/// Pairs `x = (s', a⁻)`, `y = (s, a⁺)` with `s' ≻ s` and `a⁺ ≻ a⁻` strictly in
/// every coordinate and the lower holding time `s.τ` accepted by `tau_ok`.
/// These are the pairs whose four-point difference is
/// `Q(s',a⁺) + Q(s,a⁻) − Q(s',a⁻) − Q(s,a⁺)`.
pub fn state_action_filter(tau_ok: impl Fn(usize) -> bool) -> impl Fn(&[usize], &[usize]) -> bool {
    move |x, y| {
        x[0] > y[0] && x[1] > y[1] && x[2] > y[2] && x[3] < y[3] && x[4] < y[4] && tau_ok(y[0])
    }
}

/// One enumerated `ε` tuple; gains and actions are given as values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonTuple {
    pub g_s: f64,
    pub g_a: f64,
    pub g_s_next: f64,
    pub g_a_next: f64,
    pub a1_plus: f64,
    pub a1_minus: f64,
    pub a2_plus: f64,
    pub a2_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonEntry {
    pub tuple: EpsilonTuple,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonReport {
    pub entries: Vec<EpsilonEntry>,
    /// Tuples whose denominator vanishes; they do not enter the maximum.
    pub excluded: Vec<EpsilonTuple>,
    pub epsilon_max: f64,
    /// Every arrival-probability difference `q(a⁺, g) − q(a⁻, g)` is positive,
    /// the monotonicity the sufficient condition relies on.
    pub condition_holds: bool,
    pub witness: Option<EpsilonTuple>,
}

/// Enumerates `ε = u(g_a)u(g_s)Δq(g) / (u(g'_a)u(g'_s)Δq(g'))` over all gain
/// quadruples and strictly ordered action pairs, `u` being the stationary
/// distribution and `Δq(g) = q(a₁⁺, a₂⁺, g) − q(a₁⁻, a₂⁻, g)`.
pub fn epsilon_max(spec: &GameSpec) -> Result<EpsilonReport> {
    let (na, nb) = (spec.n_attacker(), spec.n_sensor());
    if na < 2 || nb < 2 {
        return Err(Error::InvalidArgument("epsilon needs at least two actions per player".into()));
    }
    let gains = spec.channel().gains();
    let mu = &spec.stationary().mu;
    let l = gains.len();
    let (pa, ps) = (spec.actions_attacker(), spec.actions_sensor());

    let mut entries = Vec::new();
    let mut excluded = Vec::new();
    let mut witness = None;
    for a1p in 0..na {
        for a1m in 0..a1p {
            for a2p in 0..nb {
                for a2m in 0..a2p {
                    let dq = |gs: usize, ga: usize| spec.arrival(a1p, a2p, gs, ga) - spec.arrival(a1m, a2m, gs, ga);
                    for gs in 0..l {
                        for ga in 0..l {
                            for gs2 in 0..l {
                                for ga2 in 0..l {
                                    let tuple = EpsilonTuple {
                                        g_s: gains[gs],
                                        g_a: gains[ga],
                                        g_s_next: gains[gs2],
                                        g_a_next: gains[ga2],
                                        a1_plus: pa[a1p],
                                        a1_minus: pa[a1m],
                                        a2_plus: ps[a2p],
                                        a2_minus: ps[a2m],
                                    };
                                    let (num_q, den_q) = (dq(gs, ga), dq(gs2, ga2));
                                    if witness.is_none() && !(num_q > 0.0 && den_q > 0.0) {
                                        witness = Some(tuple.clone());
                                    }
                                    let den = mu[ga2] * mu[gs2] * den_q;
                                    if den == 0.0 {
                                        excluded.push(tuple);
                                        continue;
                                    }
                                    let epsilon = mu[ga] * mu[gs] * num_q / den;
                                    entries.push(EpsilonEntry { tuple, epsilon });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    if entries.is_empty() {
        return Err(Error::Degenerate("every epsilon denominator is zero".into()));
    }
    let epsilon_max = entries.iter().map(|e| e.epsilon).fold(f64::NEG_INFINITY, f64::max);
    Ok(EpsilonReport {
        entries,
        excluded,
        epsilon_max,
        condition_holds: witness.is_none(),
        witness,
    })
}

/// `a₂⁺a₁⁻ ≥ a₂⁻a₁⁺` over all strictly ordered action pairs; returns the
/// first violating `(a₁⁺, a₁⁻, a₂⁺, a₂⁻)`.
pub fn action_product_condition(attacker: &[f64], sensor: &[f64]) -> Option<[f64; 4]> {
    for (i, &a1p) in attacker.iter().enumerate() {
        for &a1m in &attacker[..i] {
            for (j, &a2p) in sensor.iter().enumerate() {
                for &a2m in &sensor[..j] {
                    if a2p * a1m < a2m * a1p {
                        return Some([a1p, a1m, a2p, a2m]);
                    }
                }
            }
        }
    }
    None
}

/// The ratio `χ(m)` at one holding time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEntry {
    pub m: usize,
    /// `None` when `v(0) = v(m+1)`.
    pub chi: Option<f64>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCondition {
    pub epsilon_max: f64,
    /// Gain-averaged values `W_k`, `k = 0..=τ_max`.
    pub averaged_values: Vec<f64>,
    pub ratios: Vec<RatioEntry>,
    pub product_condition: bool,
    pub product_witness: Option<[f64; 4]>,
    /// Holding times `m` at which both conditions hold.
    pub holding_times: Vec<usize>,
    /// Smallest such `m`.
    pub threshold: Option<usize>,
    /// States whose holding time is in `holding_times`.
    pub states: Vec<usize>,
    pub holds: bool,
}

impl MonotoneCondition {
    pub fn holds_at(&self, m: usize) -> bool {
        self.holding_times.contains(&m)
    }
}

/// Evaluates `χ(m) = (W₀ − W_{m+2}) / (W₀ − W_{m+1}) > ε_max` for
/// `m = 0..τ_max`, where `W_k` averages the per-state values at holding time
/// `k` over `μ⊗μ` and indices past `τ_max` saturate, together with the
/// action-product condition. `values` are one player's equilibrium values per
/// state.
pub fn check_monotone_condition(spec: &GameSpec, values: &[f64], eps: &EpsilonReport) -> Result<MonotoneCondition> {
    if values.len() != spec.num_states() {
        return Err(Error::Dimension(format!(
            "{} values for {} states",
            values.len(),
            spec.num_states()
        )));
    }
    let tau_max = spec.tau_max();
    let l = spec.channel().len();
    let mu = &spec.stationary().mu;
    let w: Vec<f64> = (0..=tau_max)
        .map(|k| {
            let mut acc = 0.0;
            for gs in 0..l {
                for ga in 0..l {
                    acc += mu[gs] * mu[ga] * values[spec.index_of(GameState { tau: k, gs, ga })];
                }
            }
            acc
        })
        .collect();
    let scale = w.iter().map(|v| v.abs()).fold(1.0, f64::max);

    let product_witness = action_product_condition(spec.actions_attacker(), spec.actions_sensor());
    let product_condition = product_witness.is_none();
    let mut ratios = Vec::new();
    for m in 0..tau_max {
        let den = w[0] - w[m + 1];
        let num = w[0] - w[(m + 2).min(tau_max)];
        let chi = if den.abs() <= RATIO_EPS * scale {
            None
        } else {
            Some(num / den)
        };
        let holds = chi.is_some_and(|c| c > eps.epsilon_max);
        ratios.push(RatioEntry { m, chi, holds });
    }
    let holding_times: Vec<usize> = if product_condition {
        ratios.iter().filter(|r| r.holds).map(|r| r.m).collect()
    } else {
        Vec::new()
    };
    let states = (0..spec.num_states())
        .filter(|&s| holding_times.contains(&spec.state_of(s).tau))
        .collect();
    Ok(MonotoneCondition {
        epsilon_max: eps.epsilon_max,
        averaged_values: w,
        ratios,
        product_condition,
        product_witness,
        threshold: holding_times.first().copied(),
        holds: !holding_times.is_empty(),
        holding_times,
        states,
    })
}

/// A comparable state pair `upper ≻ lower` whose summaries are not strictly
/// increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneViolation {
    pub player: Player,
    pub upper: usize,
    pub lower: usize,
    pub upper_summary: f64,
    pub lower_summary: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCheck {
    pub holds: bool,
    pub violations: Vec<MonotoneViolation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub pairs_checked: usize,
    /// Expected power under the mix.
    pub expected: SummaryCheck,
    /// Power with the largest probability.
    pub argmax: SummaryCheck,
}

pub fn state_succ(a: GameState, b: GameState) -> bool {
    a.tau > b.tau && a.gs > b.gs && a.ga > b.ga
}

/// Strict monotonicity of both players' policies over all comparable state
/// pairs `s₁ ≻ s₂` whose lower state passes `lower_ok`.
pub fn check_monotone_policy_with(
    spec: &GameSpec,
    policies: &[EquilibriumResult],
    lower_ok: impl Fn(GameState) -> bool,
) -> Result<MonotoneReport> {
    if policies.len() != spec.num_states() {
        return Err(Error::Dimension(format!(
            "{} policies for {} states",
            policies.len(),
            spec.num_states()
        )));
    }
    let states = spec.enumerate_states();
    let summaries = |argmax: bool| -> Vec<[f64; 2]> {
        policies
            .iter()
            .map(|p| {
                let pa = spec.actions_attacker();
                let ps = spec.actions_sensor();
                if argmax {
                    [pa[p.strat_p1.argmax()], ps[p.strat_p2.argmax()]]
                } else {
                    [p.strat_p1.expectation(pa), p.strat_p2.expectation(ps)]
                }
            })
            .collect()
    };
    let (exp, arg) = (summaries(false), summaries(true));
    let mut pairs = 0;
    let mut exp_v = Vec::new();
    let mut arg_v = Vec::new();
    for (u, su) in states.iter().enumerate() {
        for (l, sl) in states.iter().enumerate() {
            if !state_succ(*su, *sl) || !lower_ok(*sl) {
                continue;
            }
            pairs += 1;
            for (k, player) in [Player::Attacker, Player::Sensor].into_iter().enumerate() {
                for (table, out) in [(&exp, &mut exp_v), (&arg, &mut arg_v)] {
                    if !(table[u][k] > table[l][k]) {
                        out.push(MonotoneViolation {
                            player,
                            upper: u,
                            lower: l,
                            upper_summary: table[u][k],
                            lower_summary: table[l][k],
                        });
                    }
                }
            }
        }
    }
    Ok(MonotoneReport {
        pairs_checked: pairs,
        expected: SummaryCheck {
            holds: exp_v.is_empty(),
            violations: exp_v,
        },
        argmax: SummaryCheck {
            holds: arg_v.is_empty(),
            violations: arg_v,
        },
    })
}

pub fn check_monotone_policy(spec: &GameSpec, policies: &[EquilibriumResult]) -> Result<MonotoneReport> {
    check_monotone_policy_with(spec, policies, |_| true)
}

/// `r(m+1, a⁺) + r(m, a⁻) − r(m+1, a⁻) − r(m, a⁺)` for the attacker's reward,
/// grouped so that the holding-time terms cancel first.
pub fn delta1(spec: &GameSpec, m: usize, plus: (usize, usize), minus: (usize, usize)) -> f64 {
    let r = |m: usize, a: (usize, usize)| spec.reward(m, a.0, a.1);
    (r(m + 1, plus) - r(m + 1, minus)) - (r(m, plus) - r(m, minus))
}

/// Appendix-style `Δ₂` for the pair `s' = (m+1, g')`, `s = (m, g)` under the
/// given per-state values:
/// `u(g')Δq(g')[W₀ − W_{m+2}] − u(g)Δq(g)[W₀ − W_{m+1}]`, with `u` the product
/// of stationary weights.
pub fn delta2(
    spec: &GameSpec,
    averaged_values: &[f64],
    m: usize,
    g: (usize, usize),
    g_next: (usize, usize),
    plus: (usize, usize),
    minus: (usize, usize),
) -> f64 {
    let tau_max = spec.tau_max();
    let mu = &spec.stationary().mu;
    let w = averaged_values;
    let dq = |gs: usize, ga: usize| spec.arrival(plus.0, plus.1, gs, ga) - spec.arrival(minus.0, minus.1, gs, ga);
    let u = |gs: usize, ga: usize| mu[gs] * mu[ga];
    u(g_next.0, g_next.1) * dq(g_next.0, g_next.1) * (w[0] - w[(m + 2).min(tau_max)])
        - u(g.0, g.1) * dq(g.0, g.1) * (w[0] - w[(m + 1).min(tau_max)])
}

/// Every `Δ₁` over holding times and strictly ordered action pairs.
pub fn all_delta1(spec: &GameSpec) -> Vec<f64> {
    let mut out = Vec::new();
    for m in 0..spec.tau_max() {
        for a1p in 0..spec.n_attacker() {
            for a1m in 0..a1p {
                for a2p in 0..spec.n_sensor() {
                    for a2m in 0..a2p {
                        out.push(delta1(spec, m, (a1p, a2p), (a1m, a2m)));
                    }
                }
            }
        }
    }
    out
}

/// Everything the monotone pipeline reports for one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneAnalysis {
    pub epsilon_max: f64,
    /// Every `q(a⁺) − q(a⁻)` positive.
    pub epsilon_condition: bool,
    pub epsilon_witness: Option<EpsilonTuple>,
    /// Ratio and product conditions on the sensor's values.
    pub condition: MonotoneCondition,
    /// `Q²*` on state-action pairs whose lower holding time satisfies the
    /// condition.
    pub supermodular: SupermodularReport,
    /// Policies on state pairs whose lower holding time satisfies the
    /// condition.
    pub monotone: MonotoneReport,
    /// Policies on every comparable state pair, for reference.
    pub monotone_all_states: MonotoneReport,
    /// Largest `|Δ₁|`; zero when the reward is exactly additive.
    pub delta1_max_abs: f64,
}

impl MonotoneAnalysis {
    /// Condition holds somewhere and every check restricted to it passes.
    pub fn passes(&self) -> bool {
        self.condition.holds
            && self.supermodular.holds
            && self.supermodular.pairs_checked > 0
            && self.monotone.expected.holds
            && self.delta1_max_abs == 0.0
    }
}

/// Runs the sufficient-condition checks on a solved game. The sensor's
/// values and `Q²*` are used: with `W₀ > W_k` it is the sensor's four-point
/// differences that come out positive.
pub fn analyze_monotone(spec: &GameSpec, tables: &QTables, policies: &[EquilibriumResult]) -> Result<MonotoneAnalysis> {
    let values: Vec<f64> = policies.iter().map(|p| p.value_p2).collect();
    let eps = epsilon_max(spec)?;
    let condition = check_monotone_condition(spec, &values, &eps)?;
    let q2 = q_lattice(spec, tables, Player::Sensor)?;
    let supermodular = check_supermodular_with(&q2, state_action_filter(|m| condition.holds_at(m)));
    let monotone = check_monotone_policy_with(spec, policies, |s| condition.holds_at(s.tau))?;
    let monotone_all_states = check_monotone_policy(spec, policies)?;
    let delta1_max_abs = all_delta1(spec).iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    Ok(MonotoneAnalysis {
        epsilon_max: eps.epsilon_max,
        epsilon_condition: eps.condition_holds,
        epsilon_witness: eps.witness,
        condition,
        supermodular,
        monotone,
        monotone_all_states,
        delta1_max_abs,
    })
}

//! Equilibria of finite two-player stage games.
//!
//! Three independent routes are provided: Lemke-Howson complementary pivoting
//! for general bimatrix games, the maximin linear program for zero-sum games,
//! and exhaustive support enumeration as an oracle for small games. Every
//! result carries its deviation gap measured on the caller's (unshifted)
//! payoff matrices.

mod lemke_howson;
mod lp;
mod support;

pub use lemke_howson::lemke_howson;
pub use lp::zero_sum_value;
pub use support::support_enumeration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability vectors must sum to one within this tolerance.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// An accepted equilibrium has a deviation gap no larger than this.
pub const CERTIFICATION_TOL: f64 = 1e-8;
/// Agreement required between game values from different solvers.
pub const VALUE_TOL: f64 = 1e-7;
/// Two payoff matrices summing to zero within this are treated as zero-sum.
pub const ZERO_SUM_TOL: f64 = 1e-9;
/// Largest dimension accepted by support enumeration.
pub const SUPPORT_ENUMERATION_MAX: usize = 5;

/// Bimatrix game: `payoff_p1[i][j]` and `payoff_p2[i][j]` are the row and
/// column player's payoffs when row `i` meets column `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct StageGame {
    rows: usize,
    cols: usize,
    p1: Vec<f64>,
    p2: Vec<f64>,
}

impl StageGame {
    pub fn new(payoff_p1: Vec<Vec<f64>>, payoff_p2: Vec<Vec<f64>>) -> Result<Self> {
        let rows = payoff_p1.len();
        let cols = payoff_p1.first().map_or(0, Vec::len);
        let shape_ok = |m: &Vec<Vec<f64>>| m.len() == rows && m.iter().all(|r| r.len() == cols);
        if rows == 0 || cols == 0 || !shape_ok(&payoff_p1) || !shape_ok(&payoff_p2) {
            return Err(Error::Dimension(
                "payoff matrices must be nonempty, rectangular and of equal shape".into(),
            ));
        }
        Self::from_flat(
            rows,
            cols,
            payoff_p1.into_iter().flatten().collect(),
            payoff_p2.into_iter().flatten().collect(),
        )
    }

    /// Row-major constructor.
    pub fn from_flat(rows: usize, cols: usize, p1: Vec<f64>, p2: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || p1.len() != rows * cols || p2.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {rows}x{cols} payoffs, got {} and {} entries",
                p1.len(),
                p2.len()
            )));
        }
        if p1.iter().chain(&p2).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("payoffs must be finite".into()));
        }
        Ok(Self { rows, cols, p1, p2 })
    }

    /// The zero-sum game in which the column player receives `-payoff`.
    pub fn zero_sum(payoff_p1: Vec<Vec<f64>>) -> Result<Self> {
        let p2 = payoff_p1
            .iter()
            .map(|r| r.iter().map(|v| -v).collect())
            .collect();
        Self::new(payoff_p1, p2)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn p1(&self, i: usize, j: usize) -> f64 {
        self.p1[i * self.cols + j]
    }

    pub fn p2(&self, i: usize, j: usize) -> f64 {
        self.p2[i * self.cols + j]
    }

    pub fn payoff_p1(&self) -> Vec<Vec<f64>> {
        self.p1.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn payoff_p2(&self) -> Vec<Vec<f64>> {
        self.p2.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn is_zero_sum(&self) -> bool {
        self.p1
            .iter()
            .zip(&self.p2)
            .all(|(a, b)| (a + b).abs() <= ZERO_SUM_TOL)
    }

    /// Swaps the players' roles (transposes both matrices).
    pub fn transposed(&self) -> Self {
        let mut p1 = Vec::with_capacity(self.p1.len());
        let mut p2 = Vec::with_capacity(self.p2.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                p1.push(self.p2(i, j));
                p2.push(self.p1(i, j));
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            p1,
            p2,
        }
    }

    /// `xᵀ U y` for `U = payoff_p1`.
    pub fn value_p1(&self, x: &[f64], y: &[f64]) -> f64 {
        bilinear(&self.p1, self.cols, x, y)
    }

    /// `xᵀ U y` for `U = payoff_p2`.
    pub fn value_p2(&self, x: &[f64], y: &[f64]) -> f64 {
        bilinear(&self.p2, self.cols, x, y)
    }

    /// Builds a certified result from a strategy pair.
    pub fn evaluate(&self, x: Vec<f64>, y: Vec<f64>) -> Result<EquilibriumResult> {
        let strat_p1 = MixedStrategy::new(x)?;
        let strat_p2 = MixedStrategy::new(y)?;
        let gap = deviation_gap(self, &strat_p1, &strat_p2);
        Ok(EquilibriumResult {
            value_p1: self.value_p1(strat_p1.probs(), strat_p2.probs()),
            value_p2: self.value_p2(strat_p1.probs(), strat_p2.probs()),
            strat_p1,
            strat_p2,
            deviation_gap: gap,
        })
    }
}

fn bilinear(m: &[f64], cols: usize, x: &[f64], y: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        let row = &m[i * cols..(i + 1) * cols];
        let mut acc = 0.0;
        for (u, &yj) in row.iter().zip(y) {
            acc += u * yj;
        }
        total += xi * acc;
    }
    total
}

/// Probability vector over one player's actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MixedStrategy(Vec<f64>);

impl MixedStrategy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("empty strategy".into()));
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidArgument(format!("negative probability in {probs:?}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidArgument(format!("probabilities sum to {sum}")));
        }
        Ok(Self(probs))
    }

    /// Clips tiny negatives and renormalizes solver output.
    pub fn normalized(mut probs: Vec<f64>) -> Result<Self> {
        for p in probs.iter_mut() {
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::InvalidArgument("strategy has no mass".into()));
        }
        probs.iter_mut().for_each(|p| *p /= sum);
        Self::new(probs)
    }

    pub fn pure(n: usize, idx: usize) -> Self {
        let mut v = vec![0.0; n];
        v[idx] = 1.0;
        Self(v)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Mean of `values` under this distribution.
    pub fn expectation(&self, values: &[f64]) -> f64 {
        self.0.iter().zip(values).map(|(p, v)| p * v).sum()
    }

    /// Index of the largest probability; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub strat_p1: MixedStrategy,
    pub strat_p2: MixedStrategy,
    pub value_p1: f64,
    pub value_p2: f64,
    pub deviation_gap: f64,
}

impl EquilibriumResult {
    pub fn is_certified(&self) -> bool {
        self.deviation_gap <= CERTIFICATION_TOL
    }
}

/// Largest gain either player could obtain by a unilateral switch to a pure
/// action.
pub fn deviation_gap(game: &StageGame, s1: &MixedStrategy, s2: &MixedStrategy) -> f64 {
    assert_eq!(s1.len(), game.rows, "row strategy dimension");
    assert_eq!(s2.len(), game.cols, "column strategy dimension");
    let x = s1.probs();
    let y = s2.probs();
    let current_p1 = game.value_p1(x, y);
    let current_p2 = game.value_p2(x, y);
    let best_row = (0..game.rows)
        .map(|i| (0..game.cols).map(|j| game.p1(i, j) * y[j]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let best_col = (0..game.cols)
        .map(|j| (0..game.rows).map(|i| game.p2(i, j) * x[i]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    (best_row - current_p1).max(best_col - current_p2).max(0.0)
}

/// How the equilibrium of a stage game is selected when several exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Maximin/minimax solution of a zero-sum game.
    #[default]
    ZeroSum,
    /// First certified Lemke-Howson path in label order.
    LemkeHowson,
}

/// Deterministic general-purpose solver: Lemke-Howson from labels
/// `0, 1, …` in order, then support enumeration for small games, then the
/// zero-sum program when applicable.
pub fn solve_bimatrix(game: &StageGame) -> Result<EquilibriumResult> {
    for label in 0..game.rows + game.cols {
        if let Ok(res) = lemke_howson(game, label) {
            if res.is_certified() {
                return Ok(res);
            }
        }
    }
    if game.rows <= SUPPORT_ENUMERATION_MAX && game.cols <= SUPPORT_ENUMERATION_MAX {
        if let Some(res) = support_enumeration(game).into_iter().next() {
            return Ok(res);
        }
    }
    if game.is_zero_sum() {
        return zero_sum_value(game);
    }
    Err(Error::NoEquilibrium(format!(
        "no certified equilibrium for a {}x{} game",
        game.rows, game.cols
    )))
}

/// Solves a stage game under the given selection rule.
pub fn solve_stage(game: &StageGame, selection: Selection) -> Result<EquilibriumResult> {
    match selection {
        Selection::ZeroSum => zero_sum_value(game),
        Selection::LemkeHowson => solve_bimatrix(game),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn matching_pennies() -> StageGame {
        StageGame::zero_sum(vec![vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap()
    }

    #[test]
    fn gap_examples() {
        let g = matching_pennies();
        let res = g
            .evaluate(vec![1.0, 0.0], vec![0.5, 0.5])
            .unwrap();
        // row player is indifferent; column player switches to column 1 and
        // moves from 0 to +1
        assert!((res.deviation_gap - 1.0).abs() < 1e-15);

        let constant = StageGame::new(vec![vec![3.0; 3]; 2], vec![vec![-1.0; 3]; 2]).unwrap();
        let gap = deviation_gap(&constant, &MixedStrategy::uniform(2), &MixedStrategy::uniform(3));
        assert_eq!(gap, 0.0);

        let eq = g.evaluate(vec![0.5, 0.5], vec![0.5, 0.5]).unwrap();
        assert!(eq.is_certified());
    }

    #[test]
    fn strategy_validation() {
        assert!(MixedStrategy::new(vec![0.5, 0.6]).is_err());
        assert!(MixedStrategy::new(vec![-0.1, 1.1]).is_err());
        assert!(MixedStrategy::new(vec![]).is_err());
        let s = MixedStrategy::normalized(vec![2.0, -1e-17, 2.0]).unwrap();
        assert_eq!(s.probs(), &[0.5, 0.0, 0.5]);
        assert_eq!(s.argmax(), 0);
        assert_eq!(s.expectation(&[1.0, 5.0, 3.0]), 2.0);
    }

    #[test]
    fn zero_sum_flag_and_shapes() {
        assert!(matching_pennies().is_zero_sum());
        let g = StageGame::new(vec![vec![1.0, 0.0]], vec![vec![1.0, 0.0]]).unwrap();
        assert!(!g.is_zero_sum());
        assert!(StageGame::new(vec![vec![1.0, 0.0]], vec![vec![1.0]]).is_err());
        assert!(StageGame::new(vec![], vec![]).is_err());
        let t = g.transposed();
        assert_eq!((t.rows(), t.cols()), (2, 1));
        assert_eq!(t.p1(1, 0), 0.0);
    }

    #[test]
    fn selection_is_deterministic() {
        let bos = StageGame::new(
            vec![vec![2.0, 0.0], vec![0.0, 1.0]],
            vec![vec![1.0, 0.0], vec![0.0, 2.0]],
        )
        .unwrap();
        let a = solve_bimatrix(&bos).unwrap();
        let b = solve_bimatrix(&bos).unwrap();
        assert_eq!(a, b);
        assert!(a.is_certified());
    }
}

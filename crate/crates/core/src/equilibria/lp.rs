//! Zero-sum matrix games by linear programming.
//!
//! With the payoff shifted to be at least one, the column player's problem is
//! `max Σw  s.t.  A w ≤ 1, w ≥ 0`. The origin is feasible, so a dense simplex
//! with Bland's rule solves it without a phase one. The row player's optimal
//! strategy is read off the slack reduced costs (the dual solution).

use super::{MixedStrategy, StageGame};
use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-12;

/// Maximin strategies and value of a zero-sum game (row player maximizes
/// `payoff_p1`).
pub fn zero_sum_value(game: &StageGame) -> Result<super::EquilibriumResult> {
    if !game.is_zero_sum() {
        return Err(Error::InvalidArgument(
            "zero_sum_value requires payoff_p1 + payoff_p2 = 0".into(),
        ));
    }
    let (m, n) = (game.rows(), game.cols());
    let min = game.p1.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = 1.0 - min;

    // m constraint rows over n structural + m slack columns, rhs last
    let width = n + m + 1;
    let mut t = vec![0.0; m * width];
    for i in 0..m {
        for j in 0..n {
            t[i * width + j] = game.p1(i, j) + shift;
        }
        t[i * width + n + i] = 1.0;
        t[i * width + width - 1] = 1.0;
    }
    // reduced costs of the minimization form (min −Σw)
    let mut obj = vec![0.0; width];
    obj[..n].iter_mut().for_each(|c| *c = -1.0);
    let mut basis: Vec<usize> = (n..n + m).collect();

    let budget = 50 * (m + n + 1) * (m + n + 1);
    let mut pivots = 0;
    while let Some(enter) = (0..n + m).find(|&j| obj[j] < -PIVOT_EPS) {
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = t[i * width + enter];
            if a > PIVOT_EPS {
                let ratio = t[i * width + width - 1] / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best - PIVOT_EPS
                            || (ratio <= best + PIVOT_EPS && basis[i] < basis[r])
                        {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
        }
        let Some((row, _)) = leave else {
            return Err(Error::NoEquilibrium("unbounded matrix-game program".into()));
        };
        pivot(&mut t, &mut obj, width, m, row, enter);
        basis[row] = enter;
        pivots += 1;
        if pivots > budget {
            return Err(Error::NoEquilibrium("simplex pivot budget exhausted".into()));
        }
    }

    let mut w = vec![0.0; n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            w[b] = t[i * width + width - 1];
        }
    }
    let u: Vec<f64> = (0..m).map(|i| obj[n + i]).collect();
    let x = MixedStrategy::normalized(u)?;
    let y = MixedStrategy::normalized(w)?;
    game.evaluate(x.probs().to_vec(), y.probs().to_vec())
}

fn pivot(t: &mut [f64], obj: &mut [f64], width: usize, m: usize, row: usize, col: usize) {
    let p = t[row * width + col];
    for k in 0..width {
        t[row * width + k] /= p;
    }
    for i in 0..m {
        if i == row {
            continue;
        }
        let f = t[i * width + col];
        if f != 0.0 {
            for k in 0..width {
                t[i * width + k] -= f * t[row * width + k];
            }
        }
    }
    let f = obj[col];
    if f != 0.0 {
        for k in 0..width {
            obj[k] -= f * t[row * width + k];
        }
    }
}

//! Lemke-Howson complementary pivoting on the two best-response polytopes
//!
//! `P = { x ≥ 0 : Bᵀx ≤ 1 }` and `Q = { y ≥ 0 : A y ≤ 1 }`, with both payoff
//! matrices shifted to be positive. Labels `0..m` belong to the row player's
//! actions and `m..m+n` to the column player's. Ties in the ratio test are
//! broken lexicographically, which keeps the path well defined on degenerate
//! games.

use super::{EquilibriumResult, StageGame};
use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-12;
const TIE_EPS: f64 = 1e-12;

struct Tableau {
    /// rows × (nvars + 1), rhs in the last column
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// variables that form the initial (slack) basis, in order
    lex_cols: Vec<usize>,
}

impl Tableau {
    fn ratio_row(&self, col: usize) -> Option<usize> {
        let rhs = self.rows.first().map_or(0, |r| r.len() - 1);
        let mut best: Option<usize> = None;
        for (i, row) in self.rows.iter().enumerate() {
            if row[col] <= PIVOT_EPS {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(b) => {
                    if self.lex_less(i, b, col, rhs) {
                        Some(i)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        best
    }

    /// Is row `i`'s key lexicographically smaller than row `j`'s?
    fn lex_less(&self, i: usize, j: usize, col: usize, rhs: usize) -> bool {
        let (ri, rj) = (&self.rows[i], &self.rows[j]);
        let keys = std::iter::once(rhs).chain(self.lex_cols.iter().copied());
        for k in keys {
            let a = ri[k] / ri[col];
            let b = rj[k] / rj[col];
            let scale = 1.0_f64.max(a.abs()).max(b.abs());
            if a < b - TIE_EPS * scale {
                return true;
            }
            if a > b + TIE_EPS * scale {
                return false;
            }
        }
        false
    }

    fn pivot(&mut self, row: usize, col: usize) -> usize {
        let p = self.rows[row][col];
        self.rows[row].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                r[col] = 0.0;
            }
        }
        std::mem::replace(&mut self.basis[row], col)
    }

    fn value_of(&self, var: usize) -> f64 {
        self.basis
            .iter()
            .position(|&b| b == var)
            .map_or(0.0, |i| *self.rows[i].last().unwrap())
    }
}

/// Follows the Lemke-Howson path that starts by dropping `initial_label`.
///
/// The returned pair is checked against the original matrices; a result whose
/// deviation gap exceeds the certification tolerance is reported as an error
/// so that callers can fall back to another method.
pub fn lemke_howson(game: &StageGame, initial_label: usize) -> Result<EquilibriumResult> {
    let (m, n) = (game.rows(), game.cols());
    let k = m + n;
    if initial_label >= k {
        return Err(Error::InvalidArgument(format!(
            "label {initial_label} out of range 0..{k}"
        )));
    }
    let shift = |v: &[f64]| 1.0 - v.iter().copied().fold(f64::INFINITY, f64::min);
    let (sa, sb) = (shift(&game.p1), shift(&game.p2));

    // Variable ids: x_i = i, y_j = m + j, r_i = k + i, s_j = k + m + j.
    let nvars = 2 * k;
    let width = nvars + 1;
    let mut t_q = Tableau {
        rows: (0..m)
            .map(|i| {
                let mut r = vec![0.0; width];
                for j in 0..n {
                    r[m + j] = game.p1(i, j) + sa;
                }
                r[k + i] = 1.0;
                r[nvars] = 1.0;
                r
            })
            .collect(),
        basis: (k..k + m).collect(),
        lex_cols: (k..k + m).collect(),
    };
    let mut t_p = Tableau {
        rows: (0..n)
            .map(|j| {
                let mut r = vec![0.0; width];
                for (i, v) in r[..m].iter_mut().enumerate() {
                    *v = game.p2(i, j) + sb;
                }
                r[k + m + j] = 1.0;
                r[nvars] = 1.0;
                r
            })
            .collect(),
        basis: (k + m..nvars).collect(),
        lex_cols: (k + m..nvars).collect(),
    };

    let budget = 10 * k * k;
    let mut entering = initial_label;
    let mut pivots = 0;
    loop {
        // x and s live in P's tableau, y and r in Q's
        let in_p = entering < m || entering >= k + m;
        let tab = if in_p { &mut t_p } else { &mut t_q };
        let row = tab
            .ratio_row(entering)
            .ok_or_else(|| Error::NoEquilibrium("ray termination in Lemke-Howson".into()))?;
        let leaving = tab.pivot(row, entering);
        pivots += 1;
        if leaving % k == initial_label {
            break;
        }
        if pivots >= budget {
            return Err(Error::PivotBudget { budget });
        }
        entering = (leaving + k) % nvars;
    }

    let x: Vec<f64> = (0..m).map(|i| t_p.value_of(i).max(0.0)).collect();
    let y: Vec<f64> = (0..n).map(|j| t_q.value_of(m + j).max(0.0)).collect();
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    if !(sx > 0.0 && sy > 0.0) {
        return Err(Error::NoEquilibrium("Lemke-Howson ended at the artificial point".into()));
    }
    let res = game.evaluate(
        super::MixedStrategy::normalized(x)?.probs().to_vec(),
        super::MixedStrategy::normalized(y)?.probs().to_vec(),
    )?;
    if !res.is_certified() {
        return Err(Error::NoEquilibrium(format!(
            "Lemke-Howson endpoint has deviation gap {:e}",
            res.deviation_gap
        )));
    }
    Ok(res)
}

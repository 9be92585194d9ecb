//! Exhaustive support enumeration, used as an independent oracle on small
//! games.

use nalgebra::{DMatrix, DVector};

use super::{EquilibriumResult, StageGame, SUPPORT_ENUMERATION_MAX};

const FEAS_EPS: f64 = 1e-10;
const DEDUP_EPS: f64 = 1e-9;

/// All equilibria found by solving the indifference conditions on every pair
/// of supports. Equal-size supports are tried first (sufficient for
/// nondegenerate games); unequal sizes are tried by least squares only when
/// the equal-size pass finds nothing. Returns an empty list for games larger
/// than [`SUPPORT_ENUMERATION_MAX`] in either dimension.
pub fn support_enumeration(game: &StageGame) -> Vec<EquilibriumResult> {
    let (m, n) = (game.rows(), game.cols());
    if m > SUPPORT_ENUMERATION_MAX || n > SUPPORT_ENUMERATION_MAX {
        return Vec::new();
    }
    let row_sets = subsets(m);
    let col_sets = subsets(n);
    let mut found: Vec<EquilibriumResult> = Vec::new();

    for square_only in [true, false] {
        for rs in &row_sets {
            for cs in &col_sets {
                if (rs.len() == cs.len()) != square_only {
                    continue;
                }
                let Some(y) = indifference(rs, cs, n, |i, j| game.p1(i, j)) else {
                    continue;
                };
                let Some(x) = indifference(cs, rs, m, |j, i| game.p2(i, j)) else {
                    continue;
                };
                let Ok(res) = game.evaluate(x, y) else {
                    continue;
                };
                if res.is_certified() && !found.iter().any(|f| same_point(f, &res)) {
                    found.push(res);
                }
            }
        }
        if !found.is_empty() {
            break;
        }
    }
    found
}

/// Finds the opponent mix on `support` (length `dim`) that makes the player
/// indifferent across `own` under `payoff(own_action, opp_action)`.
fn indifference(
    own: &[usize],
    support: &[usize],
    dim: usize,
    payoff: impl Fn(usize, usize) -> f64,
) -> Option<Vec<f64>> {
    let (r, c) = (own.len(), support.len());
    // unknowns: mix on `support`, then the common value v
    let mut sys = DMatrix::<f64>::zeros(r + 1, c + 1);
    let mut rhs = DVector::<f64>::zeros(r + 1);
    for (a, &i) in own.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            sys[(a, b)] = payoff(i, j);
        }
        sys[(a, c)] = -1.0;
    }
    for b in 0..c {
        sys[(r, b)] = 1.0;
    }
    rhs[r] = 1.0;

    let sol = if r == c {
        sys.clone().lu().solve(&rhs)?
    } else {
        let svd = sys.clone().svd(true, true);
        let sol = svd.solve(&rhs, 1e-12).ok()?;
        if (&sys * &sol - &rhs).amax() > 1e-9 {
            return None;
        }
        sol
    };
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut mix = vec![0.0; dim];
    for (b, &j) in support.iter().enumerate() {
        if sol[b] < -FEAS_EPS {
            return None;
        }
        mix[j] = sol[b].max(0.0);
    }
    let total: f64 = mix.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    Some(mix.into_iter().map(|p| p / total).collect())
}

fn same_point(a: &EquilibriumResult, b: &EquilibriumResult) -> bool {
    let close = |u: &[f64], v: &[f64]| u.iter().zip(v).all(|(p, q)| (p - q).abs() <= DEDUP_EPS);
    close(a.strat_p1.probs(), b.strat_p1.probs()) && close(a.strat_p2.probs(), b.strat_p2.probs())
}

/// Nonempty subsets of `0..n`, by size then lexicographically.
fn subsets(n: usize) -> Vec<Vec<usize>> {
    let mut all: Vec<Vec<usize>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|&i| mask & (1 << i) != 0).collect())
        .collect();
    all.sort_by(|a: &Vec<usize>, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    all
}

use jamming_game::bayesian::{expand_matrix, marginalize, solve_bayesian, BayesianSpec};
use jamming_game::channel::{arrival_from_sinr, sinr, stationary_distribution, ChannelSpec};
use jamming_game::equilibria::{
    deviation_gap, lemke_howson, solve_bimatrix, zero_sum_value, MixedStrategy, StageGame, CERTIFICATION_TOL,
};
use jamming_game::estimation::{steady_state_covariance, SystemModel, DEFAULT_MAX_ITER, DEFAULT_TOL};
use jamming_game::game::{GainMode, GameParams, GameSpec};
use jamming_game::io::parse_matrix_file;
use jamming_game::nashq::{nash_q_learn, shapley_value_iteration, LearnConfig, ORACLE_TOL};
use jamming_game::structure::{check_supermodular, LatticeFunction};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0..10.0_f64, cols), rows)
}

fn shape() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=4, 1usize..=4)
}

fn bimatrix() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    shape().prop_flat_map(|(m, n)| (matrix(m, n), matrix(m, n)))
}

fn zero_sum() -> impl Strategy<Value = Vec<Vec<f64>>> {
    shape().prop_flat_map(|(m, n)| matrix(m, n))
}

/// Row-stochastic kernel with strictly positive entries, hence ergodic.
fn kernel() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=5).prop_flat_map(|l| {
        prop::collection::vec(prop::collection::vec(0.05..1.0_f64, l), l).prop_map(|rows| {
            rows.into_iter()
                .map(|r| {
                    let s: f64 = r.iter().sum();
                    r.into_iter().map(|v| v / s).collect()
                })
                .collect()
        })
    })
}

fn increasing(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.5..3.0_f64, len).prop_map(|steps| {
        steps
            .iter()
            .scan(0.0, |acc, s| {
                *acc += s;
                Some(*acc)
            })
            .collect()
    })
}

fn game_spec() -> impl Strategy<Value = GameSpec> {
    (
        increasing(1..=3),
        increasing(1..=3),
        0.0..2.0_f64,
        0.0..2.0_f64,
        0.3..0.9_f64,
        1usize..=4,
        any::<bool>(),
    )
        .prop_map(|(att, sen, alpha_s, alpha_a, beta, tau_max, markov)| {
            let model = SystemModel::scalar(1.2, 0.7, 0.8, 0.8).unwrap();
            let channel = ChannelSpec::new(vec![0.6, 0.8], vec![vec![0.3, 0.7], vec![0.6, 0.4]], 0.5, 1.0).unwrap();
            let params = GameParams {
                actions_attacker: att,
                actions_sensor: sen,
                alpha_s,
                alpha_a,
                beta,
                tau_max,
                gain_mode: if markov { GainMode::Markov } else { GainMode::Stationary },
            };
            GameSpec::new(model, channel, params).unwrap()
        })
}

proptest! {
    #[test]
    fn stationary_distribution_is_invariant(k in kernel()) {
        let mu = stationary_distribution(&k).unwrap().mu;
        prop_assert!((mu.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for j in 0..k.len() {
            let flow: f64 = (0..k.len()).map(|i| mu[i] * k[i][j]).sum();
            prop_assert!((flow - mu[j]).abs() <= 1e-12);
            prop_assert!(mu[j] > 0.0);
        }
    }

    #[test]
    fn arrival_probability_is_monotone(ps in 0.1..10.0_f64, pa in 0.1..10.0_f64, gs in 0.1..1.0_f64, ga in 0.1..1.0_f64, bump in 0.01..2.0_f64) {
        let q = |ps: f64, pa: f64| arrival_from_sinr(1.0, sinr(ps, gs, pa, ga, 0.5));
        let base = q(ps, pa);
        prop_assert!((0.0..=1.0).contains(&base));
        prop_assert!(q(ps + bump, pa) >= base);
        prop_assert!(q(ps, pa + bump) <= base);
    }

    #[test]
    fn trace_table_is_nondecreasing(a in 0.2..1.5_f64, c in 0.2..2.0_f64, q in 0.1..2.0_f64, r in 0.1..2.0_f64) {
        let model = SystemModel::scalar(a, c, q, r).unwrap();
        let s = steady_state_covariance(&model, DEFAULT_TOL, DEFAULT_MAX_ITER, 5).unwrap();
        prop_assert!(s.residual <= 1e-9);
        for w in s.trace_table.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn deviation_gap_is_nonnegative((p1, p2) in bimatrix(), seed in any::<u64>()) {
        let g = StageGame::new(p1, p2).unwrap();
        let mix = |n: usize, salt: u64| {
            let w: Vec<f64> = (0..n).map(|i| 1.0 + ((seed ^ salt).rotate_left(i as u32 * 7) % 97) as f64).collect();
            MixedStrategy::normalized(w).unwrap()
        };
        prop_assert!(deviation_gap(&g, &mix(g.rows(), 1), &mix(g.cols(), 2)) >= 0.0);
    }

    #[test]
    fn bimatrix_solver_is_certified((p1, p2) in bimatrix()) {
        let g = StageGame::new(p1, p2).unwrap();
        let r = solve_bimatrix(&g).unwrap();
        prop_assert!((r.strat_p1.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(r.strat_p1.probs().iter().chain(r.strat_p2.probs()).all(|&p| p >= 0.0));
        prop_assert!(deviation_gap(&g, &r.strat_p1, &r.strat_p2) <= CERTIFICATION_TOL);
    }

    #[test]
    fn zero_sum_value_lies_between_pure_bounds(a in zero_sum()) {
        let g = StageGame::zero_sum(a.clone()).unwrap();
        let r = zero_sum_value(&g).unwrap();
        let maximin = a.iter().map(|row| row.iter().cloned().fold(f64::INFINITY, f64::min)).fold(f64::NEG_INFINITY, f64::max);
        let minimax = (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max)).fold(f64::INFINITY, f64::min);
        prop_assert!(maximin - 1e-9 <= r.value_p1 && r.value_p1 <= minimax + 1e-9);
        prop_assert!(r.deviation_gap <= CERTIFICATION_TOL);
        if let Ok(lh) = lemke_howson(&g, 0) {
            prop_assert!((lh.value_p1 - r.value_p1).abs() <= 1e-7);
        }
    }

    #[test]
    fn matrix_file_round_trips((p1, p2) in bimatrix()) {
        let render = |m: &[Vec<f64>]| m.iter().map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")).collect::<Vec<_>>().join("\n");
        let text = format!("# generated\n{}\n\n{}\n", render(&p1), render(&p2));
        let g = parse_matrix_file(&text).unwrap();
        prop_assert_eq!(g.payoff_p1(), p1);
        prop_assert_eq!(g.payoff_p2(), p2);
    }

    #[test]
    fn convex_function_of_the_sum_is_supermodular(d0 in 2usize..5, d1 in 2usize..5, d2 in 1usize..4, w in 0.1..5.0_f64) {
        let f = LatticeFunction::from_fn(vec![d0, d1, d2], |p| w * ((p[0] + p[1] + p[2]) as f64).powi(2) + (p[0] as f64).sin()).unwrap();
        prop_assert!(check_supermodular(&f).holds);
        let g = LatticeFunction::from_fn(vec![d0, d1, d2], |p| -w * (p[0] * p[1]) as f64).unwrap();
        prop_assert!(!check_supermodular(&g).holds);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn transition_rows_sum_to_one(spec in game_spec()) {
        for s in 0..spec.num_states() {
            for a in 0..spec.n_attacker() {
                for b in 0..spec.n_sensor() {
                    let row = spec.transition_distribution(s, a, b);
                    let total: f64 = row.iter().map(|&(_, p)| p).sum();
                    prop_assert!((total - 1.0).abs() <= 1e-12);
                    prop_assert!(row.iter().all(|&(t, p)| t < spec.num_states() && p >= 0.0));
                }
            }
        }
    }

    #[test]
    fn oracle_is_a_mirrored_contraction(spec in game_spec()) {
        let sol = shapley_value_iteration(&spec, ORACLE_TOL).unwrap();
        prop_assert_eq!(sol.tables.mirror_gap(), 0.0);
        for w in sol.sweep_deltas.windows(2) {
            prop_assert!(w[1] <= spec.beta() * w[0] + 1e-9);
        }
        for p in &sol.policies {
            prop_assert!(p.deviation_gap <= CERTIFICATION_TOL);
        }
    }

    #[test]
    fn learner_keeps_the_mirror_and_is_reproducible(spec in game_spec(), seed in any::<u64>()) {
        let cfg = LearnConfig::new(50, seed);
        let a = nash_q_learn(&spec, &cfg).unwrap();
        let b = nash_q_learn(&spec, &cfg).unwrap();
        prop_assert!(a.max_mirror_gap <= 1e-9);
        prop_assert_eq!(a.tables, b.tables);
    }

    #[test]
    fn bayesian_marginals_match_the_bilinear_form(
        types in 1usize..=2,
        acts in 1usize..=2,
        payoff in prop::collection::vec(-5.0..5.0_f64, 16),
        weights in prop::collection::vec(0.1..1.0_f64, 4),
    ) {
        let total: f64 = weights[..types * types].iter().sum();
        let belief: Vec<Vec<f64>> = (0..types).map(|i| (0..types).map(|j| weights[i * types + j] / total).collect()).collect();
        let table: Vec<Vec<Vec<Vec<f64>>>> = (0..types).map(|gs| (0..types).map(|ga| (0..acts).map(|a| (0..acts).map(|b| payoff[((gs * 2 + ga) * 2 + a) * 2 + b]).collect()).collect()).collect()).collect();
        let ty: Vec<f64> = (0..types).map(|t| 0.6 + 0.2 * t as f64).collect();
        let ac: Vec<f64> = (1..=acts).map(|a| a as f64).collect();
        let spec = BayesianSpec::new(ty.clone(), ty.clone(), ac.clone(), ac.clone(), belief, table).unwrap();
        let g = expand_matrix(&spec).unwrap();
        let sol = solve_bayesian(&spec).unwrap();
        prop_assert!(sol.deviation_gap <= CERTIFICATION_TOL);
        let eq = zero_sum_value(&g).unwrap();
        let att = marginalize(&eq.strat_p1, &ty, &ac).unwrap();
        for t in 0..types {
            let s: f64 = (0..acts).map(|a| att.prob(t, a)).sum();
            prop_assert!((s - 1.0).abs() <= 1e-12);
        }
        prop_assert!((sol.value - eq.value_p1).abs() <= 1e-9);
    }
}

//! The partial-information game: each player sees only its own gain.
//! Prints per-type strategy tables for the static and lookahead payoffs.

use jamming_game::bayesian::{expand_matrix, solve_bayesian, BayesianSpec, BeliefMode, PayoffMode, TypeStrategy};
use jamming_game::channel::ChannelSpec;
use jamming_game::estimation::SystemModel;
use jamming_game::game::{GainMode, GameParams, GameSpec};
use jamming_game::nashq::{shapley_value_iteration, ORACLE_TOL};

fn table(title: &str, label: &str, ty: &str, s: &TypeStrategy) {
    println!("{title}");
    print!("{:>16}", "");
    for t in &s.types {
        print!("  {ty}={t:<5}");
    }
    println!();
    for (k, a) in s.actions.iter().enumerate() {
        print!("{:>16}", format!("Pr({label}={a}|{ty})"));
        for t in 0..s.types.len() {
            print!("  {:>9.4}", s.prob(t, k));
        }
        println!();
    }
}

fn main() -> jamming_game::Result<()> {
    let spec = GameSpec::new(
        SystemModel::scalar(1.2, 0.7, 0.8, 0.8)?,
        ChannelSpec::new(vec![0.6, 0.8], vec![vec![0.5, 0.5], vec![0.5, 0.5]], 0.5, 1.0)?,
        GameParams {
            actions_attacker: vec![1.0, 6.0],
            actions_sensor: vec![2.0, 5.0],
            alpha_s: 1.0,
            alpha_a: 0.25,
            beta: 0.75,
            tau_max: 4,
            gain_mode: GainMode::Stationary,
        },
    )?;
    let values = shapley_value_iteration(&spec, ORACLE_TOL)?.values_p1();

    for (mode, v) in [(PayoffMode::Stage, None), (PayoffMode::Lookahead, Some(values.as_slice()))] {
        let bs = BayesianSpec::from_game(&spec, 1, BeliefMode::Product, mode, v)?;
        let g = expand_matrix(&bs)?;
        let sol = solve_bayesian(&bs)?;
        println!("== {mode:?} payoff: {}x{} expanded game, value {:.4}, gap {:e}", g.rows(), g.cols(), sol.value, sol.deviation_gap);
        table("attacker", "a", "g_a", &sol.attacker);
        table("sensor", "b", "g_s", &sol.sensor);
    }
    Ok(())
}

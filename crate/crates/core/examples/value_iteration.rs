//! Shapley value iteration on the 20-state game: the Q* table, the
//! per-sweep contraction and the equilibrium policies.

use jamming_game::channel::ChannelSpec;
use jamming_game::estimation::SystemModel;
use jamming_game::game::{GainMode, GameParams, GameSpec};
use jamming_game::nashq::{shapley_value_iteration, ORACLE_TOL};

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
    let sol = shapley_value_iteration(&spec, ORACLE_TOL)?;

    let d = &sol.sweep_deltas;
    println!("{} sweeps; delta ratios (should stay <= beta = {}):", d.len(), spec.beta());
    for k in 1..d.len().min(8) {
        println!("  |D{}| / |D{}| = {:.4}", k + 1, k, d[k] / d[k - 1]);
    }

    println!("\nQ1*(s, a, b)      (1,2)     (1,5)     (6,2)     (6,5)");
    for s in 0..spec.num_states() {
        let st = spec.state_of(s);
        let (gs, ga) = spec.gains_of(st);
        let q = sol.tables.q1_state(s);
        println!("s{s:<2} ({},{gs},{ga})  {:>8.3}  {:>8.3}  {:>8.3}  {:>8.3}", st.tau, q[0], q[1], q[2], q[3]);
    }
    println!("\nmirror |Q1* + Q2*| = {:e}", sol.tables.mirror_gap());
    Ok(())
}

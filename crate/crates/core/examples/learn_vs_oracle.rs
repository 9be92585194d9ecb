//! Nash Q-learning on the 20-state profile, compared against value iteration
//! at a few checkpoints.

use std::time::Instant;

use jamming_game::channel::ChannelSpec;
use jamming_game::estimation::SystemModel;
use jamming_game::game::{GainMode, GameParams, GameSpec};
use jamming_game::nashq::{nash_q_learn_with, shapley_value_iteration, LearnConfig, ORACLE_TOL};

fn main() -> jamming_game::Result<()> {
    let model = SystemModel::scalar(1.2, 0.7, 0.8, 0.8)?;
    let channel = ChannelSpec::new(vec![0.6, 0.8], vec![vec![0.5, 0.5], vec![0.5, 0.5]], 0.5, 1.0)?;
    let params = GameParams {
        actions_attacker: vec![1.0, 6.0],
        actions_sensor: vec![2.0, 5.0],
        alpha_s: 1.0,
        alpha_a: 0.25,
        beta: 0.75,
        tau_max: 4,
        gain_mode: GainMode::Stationary,
    };
    let spec = GameSpec::new(model, channel, params)?;

    let oracle = shapley_value_iteration(&spec, ORACLE_TOL)?;
    let scale = 1.0 + oracle.tables.q1_sup_norm();
    println!("oracle: {} sweeps, |Q*| = {:.4}", oracle.sweep_deltas.len(), scale - 1.0);

    let episodes = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(50_000);
    let cfg = LearnConfig::new(episodes, 7);
    let start = Instant::now();
    let out = nash_q_learn_with(&spec, &cfg, |ep, tables| {
        if ep % 10_000 == 0 {
            let gap = tables.q1_distance(&oracle.tables);
            println!("episode {ep:>6}: gap {gap:.4} ({:.4} of scale)", gap / scale);
        }
    })?;
    println!(
        "{} steps in {:.2?}, max |Q1+Q2| = {:e}",
        out.steps,
        start.elapsed(),
        out.max_mirror_gap
    );
    let mut cells: Vec<usize> = (0..out.tables.q1.len()).collect();
    cells.sort_by(|&a, &b| {
        let da = (out.tables.q1[a] - oracle.tables.q1[a]).abs();
        let db = (out.tables.q1[b] - oracle.tables.q1[b]).abs();
        db.partial_cmp(&da).unwrap()
    });
    for &c in cells.iter().take(8) {
        println!(
            "cell {c:>3} (s{}) learned {:.3} oracle {:.3} visits {}",
            c / 4,
            out.tables.q1[c],
            oracle.tables.q1[c],
            out.tables.visits[c]
        );
    }
    for (s, p) in oracle.policies.iter().enumerate() {
        println!("s{s}: {:?} {:?}", p.strat_p1.probs(), p.strat_p2.probs());
    }
    println!("final gap {:.4}, bound {:.4}", out.tables.q1_distance(&oracle.tables), 0.05 * scale);
    Ok(())
}

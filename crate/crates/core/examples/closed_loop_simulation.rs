//! Rollouts of the closed loop: arrival frequency under fixed powers, and
//! the Monte-Carlo return under the equilibrium policies against v*.

use jamming_game::channel::ChannelSpec;
use jamming_game::estimation::SystemModel;
use jamming_game::game::{GainMode, GameParams, GameSpec, PolicyPair};
use jamming_game::nashq::{empirical_return, horizon_for, policy_pair, shapley_value_iteration, ORACLE_TOL};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

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
            gain_mode: GainMode::Markov,
        },
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    let pure = PolicyPair::pure(&spec, 1, 0);
    let traj = spec.simulate_trajectory(&pure, spec.state_of(0), 100_000, &mut rng)?;
    let hits = traj.iter().filter(|s| s.gamma).count() as f64 / traj.len() as f64;
    let expected: f64 = traj.iter().map(|s| s.q).sum::<f64>() / traj.len() as f64;
    println!("p_a = 6, p_s = 2: arrival frequency {hits:.4}, mean analytic q {expected:.4}");
    let worst = traj.iter().map(|s| s.tau).max().unwrap_or(0);
    println!("longest holding time reached: {worst}");

    let sol = shapley_value_iteration(&spec, ORACLE_TOL)?;
    let pol = policy_pair(&sol.policies);
    let est = empirical_return(&spec, &pol, 0, horizon_for(spec.beta()), 10_000, &mut rng)?;
    let v = sol.policies[0].value_p1;
    println!(
        "state s0: v1* = {v:.4}, Monte Carlo {:.4} ± {:.4} ({:.2} standard errors)",
        est.mean,
        est.std_error,
        (est.mean - v).abs() / est.std_error
    );
    Ok(())
}

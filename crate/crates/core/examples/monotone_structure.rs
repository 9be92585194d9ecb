//! The sufficient condition for a monotone equilibrium, checked end to end on
//! a game built to satisfy it.

use std::path::Path;

use jamming_game::config::ExperimentConfig;
use jamming_game::nashq::{shapley_value_iteration, ORACLE_TOL};
use jamming_game::structure::{action_product_condition, analyze_monotone};

fn main() -> jamming_game::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/monotone.json");
    let spec = ExperimentConfig::from_file(&path)?.game_spec()?;
    let sol = shapley_value_iteration(&spec, ORACLE_TOL)?;
    let r = analyze_monotone(&spec, &sol.tables, &sol.policies)?;

    // 7·3 = 21 ≥ 2·9 = 18
    println!("action product: {:?}", action_product_condition(&[3.0, 9.0], &[2.0, 7.0]).is_none());
    println!("epsilon_max = {:.4}", r.epsilon_max);
    for c in &r.condition.ratios {
        println!("  chi({}) = {:?}, holds {}", c.m, c.chi, c.holds);
    }
    println!("threshold holding time {:?}", r.condition.threshold);
    println!("Q2* supermodular ({} pairs): {}", r.supermodular.pairs_checked, r.supermodular.holds);
    println!("expected power monotone ({} pairs): {}", r.monotone.pairs_checked, r.monotone.expected.holds);
    println!("  over all state pairs: {}", r.monotone_all_states.expected.holds);
    println!("delta1 exact zero: {}", r.delta1_max_abs == 0.0);

    for (s, p) in sol.policies.iter().enumerate() {
        let st = spec.state_of(s);
        println!(
            "s{s:<2} {:?}: E[a] = {:.3}, E[b] = {:.3}",
            (st.tau, st.gs, st.ga),
            p.strat_p1.expectation(spec.actions_attacker()),
            p.strat_p2.expectation(spec.actions_sensor())
        );
    }
    Ok(())
}

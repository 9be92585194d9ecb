//! Every stage-game solver on three small games, with deviation gaps.

use jamming_game::equilibria::{
    deviation_gap, lemke_howson, support_enumeration, zero_sum_value, MixedStrategy, StageGame,
};

fn show(name: &str, g: &StageGame) -> jamming_game::Result<()> {
    println!("== {name}");
    for label in 0..g.rows() + g.cols() {
        match lemke_howson(g, label) {
            Ok(r) => println!("  LH label {label}: {:?} {:?} gap {:e}", r.strat_p1.probs(), r.strat_p2.probs(), r.deviation_gap),
            Err(e) => println!("  LH label {label}: {e}"),
        }
    }
    if g.is_zero_sum() {
        let r = zero_sum_value(g)?;
        println!("  LP: value {:.6}, {:?} {:?}", r.value_p1, r.strat_p1.probs(), r.strat_p2.probs());
    }
    for r in support_enumeration(g) {
        println!("  support: {:?} {:?}", r.strat_p1.probs(), r.strat_p2.probs());
    }
    Ok(())
}

fn main() -> jamming_game::Result<()> {
    // Sensor rows {2, 5}, attacker columns {1, 6}.
    let dominant = StageGame::zero_sum(vec![vec![-1.9906, -4.9245], vec![3.0094, 0.0755]])?;
    show("stage game at s' (row differences constant: dominance)", &dominant)?;
    let reported = (
        MixedStrategy::normalized(vec![0.4718, 0.5282])?,
        MixedStrategy::normalized(vec![0.2297, 0.7703])?,
    );
    println!(
        "  reported mixed point has deviation gap {:.4}, so it is not an equilibrium of this matrix",
        deviation_gap(&dominant, &reported.0, &reported.1)
    );

    show("matching pennies", &StageGame::zero_sum(vec![vec![1.0, -1.0], vec![-1.0, 1.0]])?)?;
    show(
        "battle of the sexes",
        &StageGame::new(vec![vec![2.0, 0.0], vec![0.0, 1.0]], vec![vec![1.0, 0.0], vec![0.0, 2.0]])?,
    )?;
    Ok(())
}

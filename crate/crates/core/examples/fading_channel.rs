//! Markov fading channel: stationary gains, ergodicity checks and the
//! SINR-based packet arrival probability.

use jamming_game::channel::{is_irreducible, period, sample_arrival, ChannelSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> jamming_game::Result<()> {
    let ch = ChannelSpec::new(vec![0.6, 0.8], vec![vec![0.7, 0.3], vec![0.4, 0.6]], 0.5, 1.0)?;
    let mu = ch.stationary_distribution()?;
    println!("stationary gains: {:?}", mu.mu);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut g = 0;
    let mut counts = [0usize; 2];
    let n = 200_000;
    for _ in 0..n {
        g = ch.step_gain(g, &mut rng);
        counts[g] += 1;
    }
    println!("empirical:        [{:.4}, {:.4}]", counts[0] as f64 / n as f64, counts[1] as f64 / n as f64);

    let reducible = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let periodic = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
    println!("identity kernel irreducible: {}", is_irreducible(&reducible));
    println!("swap kernel period: {}", period(&periodic));
    println!("rejected: {}", ChannelSpec::new(vec![0.6, 0.8], reducible, 0.5, 1.0).is_err());

    println!("\narrival probability q(p_s, g_s, p_a, g_a):");
    for &ps in &[2.0, 5.0] {
        for &pa in &[1.0, 6.0] {
            let q = ch.packet_arrival_prob(ps, 0.8, pa, 0.6);
            let hits = (0..100_000).filter(|_| sample_arrival(q, &mut rng)).count();
            println!("  p_s={ps} p_a={pa}: q = {q:.4}, sampled {:.4}", hits as f64 / 1e5);
        }
    }
    Ok(())
}

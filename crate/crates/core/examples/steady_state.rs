//! Steady-state Kalman covariance of the scalar plant and the error growth
//! while packets are being dropped.

use jamming_game::estimation::{steady_state_covariance, SystemModel, DEFAULT_MAX_ITER, DEFAULT_TOL};

fn main() -> jamming_game::Result<()> {
    let model = SystemModel::scalar(1.2, 0.7, 0.8, 0.8)?;
    let s = steady_state_covariance(&model, DEFAULT_TOL, DEFAULT_MAX_ITER, 6)?;

    // For a scalar plant the fixed point solves a quadratic; compare.
    let (a, b, c) = (0.7056, 0.04, -0.64);
    let root = (-b + f64::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);
    println!("P_bar = {:.10} (quadratic root {:.10})", s.p_bar[0][0], root);
    println!("{} iterations, residual {:e}", s.iterations, s.residual);
    println!("rho(A) = {}, arrival rate must exceed {:.4}", s.rho_a, s.boundedness_threshold());

    println!("\n m   Tr[h^m(P_bar)]");
    for (m, t) in s.trace_table.iter().enumerate() {
        println!("{m:>2}   {t:.6}");
    }
    Ok(())
}

//! Equilibrium of a matrix game and of a small random Markov game.

use mgx::game::{ne_backward_induction, solve_matrix_game, subopt_gap_at_start, DEFAULT_TOL};
use mgx::instances::random_tabular;
use nalgebra::dmatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rps = dmatrix![0.0, -1.0, 1.0; 1.0, 0.0, -1.0; -1.0, 1.0, 0.0];
    let sol = solve_matrix_game(&rps, DEFAULT_TOL)?;
    println!("rock-paper-scissors: x = {:.3?}, y = {:.3?}, value = {:.3}", sol.x, sol.y, sol.value);

    let mg = random_tabular(3, 2, 2, 3, 0.0, 1)?;
    let ne = ne_backward_induction(&mg)?;
    println!("random game: value {:.4}, NE gap {:.2e}", ne.start_value(&mg), subopt_gap_at_start(&mg, &ne.pair)?);
    Ok(())
}

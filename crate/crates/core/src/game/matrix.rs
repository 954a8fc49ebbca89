//! Exact zero-sum matrix games via a dense simplex on the standard LP pair.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::GameError;

/// Default duality-gap tolerance for stage games.
pub const DEFAULT_TOL: f64 = 1e-9;

const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixGameSolution {
    /// Row (max player) strategy.
    pub x: Vec<f64>,
    /// Column (min player) strategy.
    pub y: Vec<f64>,
    pub value: f64,
    /// `max_a (Q y)_a - min_b (xᵀ Q)_b`.
    pub duality_gap: f64,
}

/// Solves `max_x min_y xᵀ Q y` for a payoff matrix whose rows belong to the
/// maximizer.
///
/// The column player's LP `max 1ᵀu  s.t.  P u ≤ 1, u ≥ 0` is solved on the
/// shifted matrix `P = Q - min(Q) + 1 > 0`; the row strategy is read off the
/// slack duals. Bland's rule makes the returned vertex deterministic. A
/// constant matrix returns uniform strategies for both players.
pub fn solve_matrix_game(q: &DMatrix<f64>, tol: f64) -> Result<MatrixGameSolution, GameError> {
    let (rows, cols) = q.shape();
    if rows == 0 || cols == 0 {
        return Err(GameError::DimensionMismatch("empty payoff matrix".into()));
    }
    if !(tol > 0.0) {
        return Err(GameError::InvalidModel(format!("tolerance {tol} must be positive")));
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(GameError::NonFinitePayoff);
    }
    let lo = q.min();
    let hi = q.max();
    if hi == lo {
        return Ok(MatrixGameSolution {
            x: vec![1.0 / rows as f64; rows],
            y: vec![1.0 / cols as f64; cols],
            value: lo,
            duality_gap: 0.0,
        });
    }

    let shift = 1.0 - lo;
    let (u, duals) = simplex_column_lp(q, shift)?;
    let x = normalize(duals)?;
    let y = normalize(u)?;

    let qy = q * DMatrix::from_column_slice(cols, 1, &y);
    let xq = DMatrix::from_row_slice(1, rows, &x) * q;
    let upper = qy.max();
    let lower = xq.min();
    // Rounding can put `upper` a few ulps below `lower`.
    let duality_gap = (upper - lower).max(0.0);
    if duality_gap > tol {
        return Err(GameError::SolverFailure(format!(
            "duality gap {duality_gap:e} exceeds tolerance {tol:e}"
        )));
    }
    let value = x
        .iter()
        .zip(qy.iter())
        .map(|(xa, qya)| xa * qya)
        .sum::<f64>()
        .clamp(lower.min(upper), upper.max(lower));
    Ok(MatrixGameSolution {
        x,
        y,
        value,
        duality_gap,
    })
}

/// Returns the primal solution `u` (columns) and the duals of the row
/// constraints.
fn simplex_column_lp(q: &DMatrix<f64>, shift: f64) -> Result<(Vec<f64>, Vec<f64>), GameError> {
    let (m, n) = q.shape();
    let width = n + m + 1;
    // Constraint rows 0..m, objective row m. Column layout: u_0..u_{n-1},
    // slack_0..slack_{m-1}, rhs.
    let mut t = vec![0.0; (m + 1) * width];
    for i in 0..m {
        for j in 0..n {
            t[i * width + j] = q[(i, j)] + shift;
        }
        t[i * width + n + i] = 1.0;
        t[i * width + width - 1] = 1.0;
    }
    for j in 0..n {
        t[m * width + j] = -1.0;
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let cap = 1000 + 200 * (m + n);
    let mut optimal = false;
    for _ in 0..cap {
        let Some(enter) = (0..n + m).find(|&j| t[m * width + j] < -PIVOT_EPS) else {
            optimal = true;
            break;
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            let a = t[i * width + enter];
            if a > PIVOT_EPS {
                let ratio = t[i * width + width - 1] / a;
                let better = match leave {
                    None => true,
                    Some(l) => {
                        ratio < best - PIVOT_EPS
                            || ((ratio - best).abs() <= PIVOT_EPS && basis[i] < basis[l])
                    }
                };
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(row) = leave else {
            return Err(GameError::SolverFailure("LP unbounded".into()));
        };
        pivot(&mut t, width, m + 1, row, enter);
        basis[row] = enter;
    }
    if !optimal {
        return Err(GameError::SolverFailure(format!("no optimum after {cap} pivots")));
    }

    let mut u = vec![0.0; n];
    for (i, &var) in basis.iter().enumerate() {
        if var < n {
            u[var] = t[i * width + width - 1];
        }
    }
    let duals = (0..m).map(|i| t[m * width + n + i]).collect();
    Ok((u, duals))
}

fn pivot(t: &mut [f64], width: usize, rows: usize, row: usize, col: usize) {
    let p = t[row * width + col];
    for k in 0..width {
        t[row * width + k] /= p;
    }
    for i in 0..rows {
        if i == row {
            continue;
        }
        let factor = t[i * width + col];
        if factor == 0.0 {
            continue;
        }
        for k in 0..width {
            t[i * width + k] -= factor * t[row * width + k];
        }
        t[i * width + col] = 0.0;
    }
}

fn normalize(mut v: Vec<f64>) -> Result<Vec<f64>, GameError> {
    for e in v.iter_mut() {
        if *e < 0.0 {
            *e = 0.0;
        }
    }
    let total: f64 = v.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(GameError::SolverFailure("degenerate LP solution".into()));
    }
    for e in v.iter_mut() {
        *e /= total;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Value of a 2-row game: max over the row mix of the lower envelope,
    /// attained at an endpoint or a column crossing.
    fn two_row_value(q: &DMatrix<f64>) -> f64 {
        let envelope = |x: f64| {
            (0..q.ncols())
                .map(|j| x * q[(0, j)] + (1.0 - x) * q[(1, j)])
                .fold(f64::INFINITY, f64::min)
        };
        let mut candidates = vec![0.0, 1.0];
        for i in 0..q.ncols() {
            for j in i + 1..q.ncols() {
                let di = q[(0, i)] - q[(1, i)];
                let dj = q[(0, j)] - q[(1, j)];
                if (di - dj).abs() > 1e-12 {
                    let x = (q[(1, j)] - q[(1, i)]) / (di - dj);
                    if (0.0..=1.0).contains(&x) {
                        candidates.push(x);
                    }
                }
            }
        }
        candidates.into_iter().map(envelope).fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn rock_paper_scissors_is_uniform() {
        let q = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 1.0, 1.0, 0.0, -1.0, -1.0, 1.0, 0.0]);
        let sol = solve_matrix_game(&q, DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(sol.value, 0.0, epsilon = 1e-12);
        for p in sol.x.iter().chain(&sol.y) {
            assert_abs_diff_eq!(*p, 1.0 / 3.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn saddle_point_is_pure() {
        let q = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 4.0, 2.0]);
        let sol = solve_matrix_game(&q, DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(sol.value, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.x[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.y[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_matrix_gives_uniform() {
        let q = DMatrix::from_element(2, 3, 0.7);
        let sol = solve_matrix_game(&q, DEFAULT_TOL).unwrap();
        assert_eq!(sol.x, vec![0.5; 2]);
        assert_eq!(sol.y, vec![1.0 / 3.0; 3]);
        assert_eq!(sol.value, 0.7);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(solve_matrix_game(&DMatrix::zeros(0, 2), DEFAULT_TOL).is_err());
        let q = DMatrix::from_row_slice(1, 2, &[f64::NAN, 0.0]);
        assert!(matches!(solve_matrix_game(&q, DEFAULT_TOL), Err(GameError::NonFinitePayoff)));
        assert!(solve_matrix_game(&DMatrix::zeros(2, 2), 0.0).is_err());
    }

    #[test]
    fn near_constant_matrix_does_not_panic() {
        let base = 0.3148128158064592;
        let q = DMatrix::from_row_slice(2, 2, &[base, base - 5e-17, base, base - 5e-17]);
        let sol = solve_matrix_game(&q, DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(sol.value, base, epsilon = 1e-15);
    }

    fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
        (1..=max_rows, 1..=max_cols).prop_flat_map(|(m, n)| {
            prop::collection::vec(-5.0..5.0f64, m * n).prop_map(move |v| DMatrix::from_row_slice(m, n, &v))
        })
    }

    proptest! {
        #[test]
        fn solution_is_an_equilibrium(q in matrix(8, 8)) {
            let sol = solve_matrix_game(&q, DEFAULT_TOL).unwrap();
            prop_assert!(sol.duality_gap <= 1e-9);
            prop_assert!((sol.x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!((sol.y.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(sol.x.iter().chain(&sol.y).all(|p| *p >= 0.0));
        }

        #[test]
        fn two_row_value_matches_envelope(q in (1..=6usize).prop_flat_map(|n| {
            prop::collection::vec(-5.0..5.0f64, 2 * n).prop_map(move |v| DMatrix::from_row_slice(2, n, &v))
        })) {
            let sol = solve_matrix_game(&q, DEFAULT_TOL).unwrap();
            prop_assert!((sol.value - two_row_value(&q)).abs() < 1e-8);
            // Transposed and negated game has the negated value.
            let dual = solve_matrix_game(&(-q.transpose()), DEFAULT_TOL).unwrap();
            prop_assert!((dual.value + sol.value).abs() < 1e-8);
        }
    }
}

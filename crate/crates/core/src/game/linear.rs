use serde::{Deserialize, Serialize};

use super::{GameError, GameShape, InitialState, TabularMG};

const NORM_TOL: f64 = 1e-12;
const INDUCED_TOL: f64 = 1e-9;

/// Explicit feature table `φ(s, a, b) ∈ R^d` over a finite tuple space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Features {
    shape: GameShape,
    dim: usize,
    // [tuple][d]
    table: Vec<f64>,
}

impl Features {
    pub fn new(shape: GameShape, dim: usize, table: Vec<f64>) -> Result<Self, GameError> {
        shape.validate()?;
        if dim == 0 || table.len() != shape.tuples() * dim {
            return Err(GameError::DimensionMismatch(format!(
                "feature table has {} entries for {} tuples of dimension {dim}",
                table.len(),
                shape.tuples()
            )));
        }
        for (t, phi) in table.chunks(dim).enumerate() {
            if phi.iter().any(|v| !v.is_finite()) {
                return Err(GameError::InvalidModel(format!("non-finite feature at tuple {t}")));
            }
            let norm = l2(phi);
            if norm > 1.0 + NORM_TOL {
                return Err(GameError::InvalidModel(format!(
                    "feature norm {norm} > 1 at tuple {t}"
                )));
            }
        }
        Ok(Self { shape, dim, table })
    }

    /// `φ(s, a, b) = e_{(s,a,b)}` with `d = S·A·B`.
    pub fn one_hot(shape: GameShape) -> Self {
        let n = shape.tuples();
        let mut table = vec![0.0; n * n];
        for t in 0..n {
            table[t * n + t] = 1.0;
        }
        Self {
            shape,
            dim: n,
            table,
        }
    }

    pub fn shape(&self) -> GameShape {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn phi(&self, tuple: usize) -> &[f64] {
        &self.table[tuple * self.dim..(tuple + 1) * self.dim]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn min_norm(&self) -> f64 {
        self.table.chunks(self.dim).map(l2).fold(f64::INFINITY, f64::min)
    }

    /// Whether every tuple's feature is a standard basis vector, each used once.
    pub fn is_one_hot(&self) -> bool {
        self.dim == self.shape.tuples()
            && self.table.chunks(self.dim).enumerate().all(|(t, phi)| {
                phi.iter()
                    .enumerate()
                    .all(|(j, v)| *v == if j == t { 1.0 } else { 0.0 })
            })
    }
}

/// Linear Markov game: `r_h = φᵀθ_h`, `p_h(·|s,a,b) = φ(s,a,b)ᵀ μ_h`.
///
/// The finite-state tabular game it induces is built and validated at
/// construction; exact evaluation runs on it.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMG {
    features: Features,
    theta: Vec<Vec<f64>>,
    // [h] -> d x S, row-major
    mu: Vec<Vec<f64>>,
    gamma: f64,
    c2: Option<f64>,
    induced: TabularMG,
}

impl LinearMG {
    pub fn new(
        features: Features,
        theta: Vec<Vec<f64>>,
        mu: Vec<Vec<f64>>,
        gamma: f64,
        c2: Option<f64>,
        initial: InitialState,
    ) -> Result<Self, GameError> {
        let shape = features.shape;
        let d = features.dim;
        let sqrt_d = (d as f64).sqrt();
        if theta.len() != shape.horizon || mu.len() != shape.horizon {
            return Err(GameError::DimensionMismatch(format!(
                "need {} theta and mu entries, got {} and {}",
                shape.horizon,
                theta.len(),
                mu.len()
            )));
        }
        for (h, (th, m)) in theta.iter().zip(&mu).enumerate() {
            if th.len() != d || m.len() != d * shape.states {
                return Err(GameError::DimensionMismatch(format!(
                    "step {h}: theta has {} entries and mu {}, expected {d} and {}",
                    th.len(),
                    m.len(),
                    d * shape.states
                )));
            }
            if l2(th) > sqrt_d + NORM_TOL {
                return Err(GameError::InvalidModel(format!("step {h}: ‖theta‖ exceeds sqrt(d)")));
            }
            let mass: Vec<f64> = m.chunks(shape.states).map(|row| row.iter().sum()).collect();
            if l2(&mass) > sqrt_d + INDUCED_TOL {
                return Err(GameError::InvalidModel(format!("step {h}: ‖mu·1‖ exceeds sqrt(d)")));
            }
        }
        if let Some(c) = c2 {
            let min = features.min_norm();
            if min + NORM_TOL < c {
                return Err(GameError::InvalidModel(format!(
                    "smallest feature norm {min} is below the declared lower bound {c}"
                )));
            }
        }

        let n = shape.tuples();
        let s_count = shape.states;
        let mut rewards = Vec::with_capacity(shape.horizon * n);
        let mut transitions = Vec::with_capacity(shape.horizon * n * s_count);
        for h in 0..shape.horizon {
            for t in 0..n {
                let phi = features.phi(t);
                let r = dot(phi, &theta[h]);
                if !(-INDUCED_TOL..=1.0 + INDUCED_TOL).contains(&r) {
                    return Err(GameError::InvalidModel(format!(
                        "induced reward {r} outside [0, 1] at step {h}, tuple {t}"
                    )));
                }
                rewards.push(r.clamp(0.0, 1.0));
                let mut row = vec![0.0; s_count];
                for (j, phi_j) in phi.iter().enumerate() {
                    if *phi_j == 0.0 {
                        continue;
                    }
                    for (sp, acc) in row.iter_mut().enumerate() {
                        *acc += phi_j * mu[h][j * s_count + sp];
                    }
                }
                let sum: f64 = row.iter().sum();
                if row.iter().any(|p| *p < -INDUCED_TOL) || (sum - 1.0).abs() > INDUCED_TOL {
                    return Err(GameError::InvalidModel(format!(
                        "induced transition at step {h}, tuple {t} is not a distribution"
                    )));
                }
                if sum != 1.0 || row.iter().any(|p| *p < 0.0) {
                    row.iter_mut().for_each(|p| *p = p.max(0.0));
                    let total: f64 = row.iter().sum();
                    row.iter_mut().for_each(|p| *p /= total);
                }
                transitions.extend(row);
            }
        }
        let induced =
            TabularMG::new(shape, transitions, rewards, gamma)?.with_initial(initial)?;
        Ok(Self {
            features,
            theta,
            mu,
            gamma,
            c2,
            induced,
        })
    }

    pub fn shape(&self) -> GameShape {
        self.features.shape
    }

    pub fn dim(&self) -> usize {
        self.features.dim
    }

    pub fn features(&self) -> &Features {
        &self.features
    }

    pub fn theta(&self, h: usize) -> &[f64] {
        &self.theta[h]
    }

    /// `μ_h` as a row-major `d × S` table.
    pub fn mu(&self, h: usize) -> &[f64] {
        &self.mu[h]
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn c2(&self) -> Option<f64> {
        self.c2
    }

    /// The tabular game with the same rewards and transitions.
    pub fn induced(&self) -> &TabularMG {
        &self.induced
    }

    /// One-hot embedding of a tabular game. The induced game is the input
    /// itself, so reward laws carry over unchanged.
    pub fn one_hot(mg: &TabularMG) -> Self {
        let shape = mg.shape();
        let n = shape.tuples();
        let theta = (0..shape.horizon).map(|h| mg.reward_table(h).to_vec()).collect();
        let per_step = n * shape.states;
        let mu = mg
            .transitions_flat()
            .chunks(per_step)
            .map(<[f64]>::to_vec)
            .collect();
        Self {
            features: Features::one_hot(shape),
            theta,
            mu,
            gamma: mg.gamma(),
            c2: Some(1.0),
            induced: mg.clone(),
        }
    }
}

impl AsRef<TabularMG> for LinearMG {
    fn as_ref(&self) -> &TabularMG {
        &self.induced
    }
}

/// One-hot featurization: `d = S·A·B`, `θ_h` is the flattened reward table
/// and the rows of `μ_h` are the transition rows.
pub fn one_hot_featurize(mg: &TabularMG) -> LinearMG {
    LinearMG::one_hot(mg)
}

pub(crate) fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

//! JSON game documents.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    BernoulliCell, Features, GameError, GameShape, InitialState, LinearMG, TabularMG,
};

type Nested4 = Vec<Vec<Vec<Vec<f64>>>>;
type Nested5 = Vec<Vec<Vec<Vec<Vec<f64>>>>>;

/// On-disk game document. Linear games also carry the induced `p` and `r`
/// tables; on load they are checked against the features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameFile {
    pub kind: String,
    #[serde(rename = "S")]
    pub states: usize,
    #[serde(rename = "A")]
    pub max_actions: usize,
    #[serde(rename = "B")]
    pub min_actions: usize,
    #[serde(rename = "H")]
    pub horizon: usize,
    pub gamma: f64,
    /// `p[h][s][a][b][s']`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Nested5>,
    /// `r[h][s][a][b]`, reward means.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Nested4>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_distribution: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bernoulli: Vec<BernoulliCell>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// `theta[h][j]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<Vec<f64>>>,
    /// `mu[h][j][s']`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<Vec<Vec<f64>>>>,
    /// `phi_table[s][a][b][j]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_table: Option<Nested4>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
}

/// A game read from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedGame {
    Tabular(TabularMG),
    Linear(LinearMG),
}

impl LoadedGame {
    pub fn tabular(&self) -> &TabularMG {
        match self {
            LoadedGame::Tabular(g) => g,
            LoadedGame::Linear(g) => g.induced(),
        }
    }

    /// Learner-facing features: the stored map for linear games, one-hot
    /// for tabular ones.
    pub fn features(&self) -> Features {
        match self {
            LoadedGame::Tabular(g) => Features::one_hot(g.shape()),
            LoadedGame::Linear(g) => g.features().clone(),
        }
    }
}

impl AsRef<TabularMG> for LoadedGame {
    fn as_ref(&self) -> &TabularMG {
        self.tabular()
    }
}

impl From<&TabularMG> for GameFile {
    fn from(mg: &TabularMG) -> Self {
        let shape = mg.shape();
        let (s1, initial_distribution) = initial_fields(mg.initial());
        GameFile {
            kind: "tabular".into(),
            states: shape.states,
            max_actions: shape.max_actions,
            min_actions: shape.min_actions,
            horizon: shape.horizon,
            gamma: mg.gamma(),
            p: Some(nest_transitions(mg)),
            r: Some(nest_rewards(mg)),
            s1,
            initial_distribution,
            bernoulli: mg.bernoulli_cells().to_vec(),
            d: None,
            theta: None,
            mu: None,
            phi_table: None,
            c2: None,
        }
    }
}

impl From<&LinearMG> for GameFile {
    fn from(lg: &LinearMG) -> Self {
        let shape = lg.shape();
        let d = lg.dim();
        let mut file = GameFile::from(lg.induced());
        file.kind = "linear".into();
        file.d = Some(d);
        file.theta = Some((0..shape.horizon).map(|h| lg.theta(h).to_vec()).collect());
        file.mu = Some(
            (0..shape.horizon)
                .map(|h| lg.mu(h).chunks(shape.states).map(<[f64]>::to_vec).collect())
                .collect(),
        );
        let phi = lg.features();
        file.phi_table = Some(
            (0..shape.states)
                .map(|s| {
                    (0..shape.max_actions)
                        .map(|a| {
                            (0..shape.min_actions)
                                .map(|b| phi.phi(shape.tuple_index(s, a, b)).to_vec())
                                .collect()
                        })
                        .collect()
                })
                .collect(),
        );
        file.c2 = lg.c2();
        file
    }
}

impl GameFile {
    pub fn shape(&self) -> GameShape {
        GameShape::new(self.states, self.max_actions, self.min_actions, self.horizon)
    }

    fn initial(&self) -> InitialState {
        match (&self.initial_distribution, self.s1) {
            (Some(d), _) => InitialState::Distribution(d.clone()),
            (None, Some(s)) => InitialState::State(s),
            (None, None) => InitialState::State(0),
        }
    }

    pub fn into_game(self) -> Result<LoadedGame, GameError> {
        let shape = self.shape();
        shape.validate()?;
        match self.kind.as_str() {
            "tabular" => {
                let p = self.p.as_ref().ok_or_else(|| missing("p"))?;
                let r = self.r.as_ref().ok_or_else(|| missing("r"))?;
                let transitions = flatten5(p, shape)?;
                let rewards = flatten4(r, reward_dims(shape))?;
                let mg = TabularMG::new(shape, transitions, rewards, self.gamma)?
                    .with_initial(self.initial())?
                    .with_bernoulli_cells(self.bernoulli.clone())?;
                Ok(LoadedGame::Tabular(mg))
            }
            "linear" => {
                let d = self.d.ok_or_else(|| missing("d"))?;
                let theta = self.theta.clone().ok_or_else(|| missing("theta"))?;
                let mu_nested = self.mu.as_ref().ok_or_else(|| missing("mu"))?;
                let phi_nested = self.phi_table.as_ref().ok_or_else(|| missing("phi_table"))?;
                let table = flatten4(
                    phi_nested,
                    [shape.states, shape.max_actions, shape.min_actions, d],
                )?;
                let mu = mu_nested
                    .iter()
                    .map(|m| m.iter().flatten().copied().collect())
                    .collect();
                let features = Features::new(shape, d, table)?;
                let lg = LinearMG::new(features, theta, mu, self.gamma, self.c2, self.initial())?;
                if !self.bernoulli.is_empty() {
                    return Err(GameError::InvalidModel(
                        "Bernoulli reward cells are only supported for tabular games".into(),
                    ));
                }
                if let Some(r) = &self.r {
                    let stored = flatten4(r, reward_dims(shape))?;
                    let diff = stored
                        .iter()
                        .zip(lg.induced().rewards_flat())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    if diff > 1e-9 {
                        return Err(GameError::InvalidModel(format!(
                            "stored rewards differ from the features' by {diff}"
                        )));
                    }
                }
                Ok(LoadedGame::Linear(lg))
            }
            other => Err(GameError::InvalidModel(format!("unknown game kind '{other}'"))),
        }
    }
}

fn reward_dims(shape: GameShape) -> [usize; 4] {
    [shape.horizon, shape.states, shape.max_actions, shape.min_actions]
}

fn missing(field: &str) -> GameError {
    GameError::InvalidModel(format!("missing field '{field}'"))
}

fn initial_fields(initial: &InitialState) -> (Option<usize>, Option<Vec<f64>>) {
    match initial {
        InitialState::State(s) => (Some(*s), None),
        InitialState::Distribution(d) => (None, Some(d.clone())),
    }
}

fn nest_rewards(mg: &TabularMG) -> Nested4 {
    let shape = mg.shape();
    (0..shape.horizon)
        .map(|h| {
            (0..shape.states)
                .map(|s| {
                    (0..shape.max_actions)
                        .map(|a| (0..shape.min_actions).map(|b| mg.reward_mean(h, s, a, b)).collect())
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn nest_transitions(mg: &TabularMG) -> Nested5 {
    let shape = mg.shape();
    (0..shape.horizon)
        .map(|h| {
            (0..shape.states)
                .map(|s| {
                    (0..shape.max_actions)
                        .map(|a| {
                            (0..shape.min_actions)
                                .map(|b| mg.next_state_dist(h, s, a, b).to_vec())
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn flatten4(nested: &Nested4, dims: [usize; 4]) -> Result<Vec<f64>, GameError> {
    let bad = || GameError::DimensionMismatch(format!("nested table does not have shape {dims:?}"));
    if nested.len() != dims[0] {
        return Err(bad());
    }
    let mut out = Vec::with_capacity(dims.iter().product());
    for l1 in nested {
        if l1.len() != dims[1] {
            return Err(bad());
        }
        for l2 in l1 {
            if l2.len() != dims[2] {
                return Err(bad());
            }
            for l3 in l2 {
                if l3.len() != dims[3] {
                    return Err(bad());
                }
                out.extend_from_slice(l3);
            }
        }
    }
    Ok(out)
}

fn flatten5(nested: &Nested5, shape: GameShape) -> Result<Vec<f64>, GameError> {
    let bad = || GameError::DimensionMismatch("transition table has the wrong shape".into());
    if nested.len() != shape.horizon {
        return Err(bad());
    }
    let mut out = Vec::with_capacity(shape.horizon * shape.tuples() * shape.states);
    for per_h in nested {
        if per_h.len() != shape.states {
            return Err(bad());
        }
        for per_s in per_h {
            if per_s.len() != shape.max_actions {
                return Err(bad());
            }
            for per_a in per_s {
                if per_a.len() != shape.min_actions {
                    return Err(bad());
                }
                for row in per_a {
                    if row.len() != shape.states {
                        return Err(bad());
                    }
                    out.extend_from_slice(row);
                }
            }
        }
    }
    Ok(out)
}

pub fn save_game(path: &Path, game: &GameFile) -> Result<(), GameError> {
    let text = serde_json::to_string_pretty(game)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_game(path: &Path) -> Result<LoadedGame, GameError> {
    let text = std::fs::read_to_string(path)?;
    let file: GameFile = serde_json::from_str(&text)?;
    file.into_game()
}

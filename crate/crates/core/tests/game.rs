use mgx::game::{
    load_game, ne_backward_induction, save_game, Features, GameFile, GameShape, InitialState, LinearMG, LoadedGame,
};
use mgx::instances::{build_tree_pair, random_linear, random_tabular};
use mgx::rng::{derive_seed, reward_rng, stream_rng};
use rand::Rng;

fn temp_path(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("mgx-game-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn tabular_round_trip_keeps_bernoulli_cells() {
    let pair = build_tree_pair(3, 2, 2, 4, 0.1).unwrap();
    let path = temp_path("tree.json");
    save_game(&path, &GameFile::from(&pair.g_prime)).unwrap();
    match load_game(&path).unwrap() {
        LoadedGame::Tabular(g) => assert_eq!(g, pair.g_prime),
        LoadedGame::Linear(_) => panic!("expected a tabular game"),
    }
}

#[test]
fn linear_round_trip() {
    let lg = random_linear(3, 2, 2, 3, 4, 0.1, 9).unwrap();
    let path = temp_path("linear.json");
    save_game(&path, &GameFile::from(&lg)).unwrap();
    let loaded = load_game(&path).unwrap();
    assert_eq!(loaded.features(), *lg.features());
    let a = loaded.tabular();
    let b = lg.induced();
    for (x, y) in a.rewards_flat().iter().zip(b.rewards_flat()) {
        assert!((x - y).abs() < 1e-12);
    }
    for (x, y) in a.transitions_flat().iter().zip(b.transitions_flat()) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn one_hot_linear_game_induces_the_tabular_game() {
    let mg = random_tabular(3, 2, 3, 3, 0.0, 4).unwrap();
    let shape = mg.shape();
    let theta = (0..shape.horizon).map(|h| mg.reward_table(h).to_vec()).collect();
    let per_step = shape.tuples() * shape.states;
    let mu = mg.transitions_flat().chunks(per_step).map(<[f64]>::to_vec).collect();
    let lg = LinearMG::new(Features::one_hot(shape), theta, mu, 0.0, Some(1.0), InitialState::State(0)).unwrap();
    assert_eq!(lg.induced().rewards_flat(), mg.rewards_flat());
    for (x, y) in lg.induced().transitions_flat().iter().zip(mg.transitions_flat()) {
        assert!((x - y).abs() < 1e-15);
    }
    let v1 = ne_backward_induction(&lg).unwrap().start_value(lg.induced());
    let v2 = ne_backward_induction(&mg).unwrap().start_value(&mg);
    assert!((v1 - v2).abs() < 1e-12);
}

#[test]
fn malformed_documents_are_rejected() {
    let mg = random_tabular(2, 2, 2, 2, 0.0, 1).unwrap();
    let mut file = GameFile::from(&mg);
    file.r.as_mut().unwrap()[0][0][0][0] = 1.5;
    assert!(file.clone().into_game().is_err());

    let mut file = GameFile::from(&mg);
    file.p.as_mut().unwrap()[1][1][0][1] = vec![0.7, 0.7];
    assert!(file.into_game().is_err());

    let mut file = GameFile::from(&mg);
    file.horizon = 3;
    assert!(file.into_game().is_err());

    assert!(GameShape::new(0, 1, 1, 1).validate().is_err());
}

#[test]
fn linear_game_rejects_oversized_theta() {
    let shape = GameShape::new(2, 1, 1, 1);
    let features = Features::new(shape, 1, vec![1.0, 1.0]).unwrap();
    let mu = vec![vec![0.5, 0.5]];
    let err = LinearMG::new(features, vec![vec![1.5]], mu, 0.0, None, InitialState::State(0));
    assert!(err.is_err());
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let draw = |mut r: rand_chacha::ChaCha8Rng| (0..4).map(|_| r.random::<u64>()).collect::<Vec<_>>();
    assert_eq!(draw(stream_rng(5, 0)), draw(stream_rng(5, 0)));
    assert_ne!(draw(stream_rng(5, 0)), draw(stream_rng(5, 1)));
    assert_ne!(draw(stream_rng(5, 0)), draw(stream_rng(6, 0)));
    assert_ne!(draw(reward_rng(5, 0)), draw(stream_rng(5, 0)));
    assert_ne!(derive_seed(1, 2), derive_seed(2, 1));
    assert_eq!(derive_seed(1, 2), derive_seed(1, 2));
}

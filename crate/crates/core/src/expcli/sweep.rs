use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BehaviorSpec, ExpError, ExperimentConfig, InstanceSpec};
use crate::datagen::{
    corrupt, least_covered_attack, sample_dataset, AttackTarget, BehaviorPolicy, CorruptionSpec, Dataset, TupleTarget,
};
use crate::game::{load_game, subopt_gap_at_start, Features, StrategyPair, TabularMG};
use crate::instances::{build_agnostic_pair, build_tree_pair, random_linear, random_tabular};
use crate::rng::derive_seed;

/// Versioned header of the results CSV.
pub const CSV_HEADER: [&str; 9] = ["v1", "instance_id", "algorithm", "K", "epsilon", "seed", "subopt", "runtime_ms", "digest"];

const CORRUPTION_SALT: u64 = 0xC0;
const LEARNER_SALT: u64 = 0x1E;

/// One learner run. Failed runs carry no gap and an `error:<code>` digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub instance_id: String,
    pub algorithm: String,
    pub k: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub subopt: Option<f64>,
    pub runtime_ms: u64,
    pub digest: String,
}

impl ResultRow {
    pub fn is_error(&self) -> bool {
        self.subopt.is_none()
    }

    fn key(&self) -> (String, usize, u64, u64) {
        (self.algorithm.clone(), self.k, self.epsilon.to_bits(), self.seed)
    }

    fn record(&self) -> [String; 9] {
        [
            "v1".into(),
            self.instance_id.clone(),
            self.algorithm.clone(),
            self.k.to_string(),
            self.epsilon.to_string(),
            self.seed.to_string(),
            self.subopt.map(|g| g.to_string()).unwrap_or_default(),
            self.runtime_ms.to_string(),
            self.digest.clone(),
        ]
    }

    pub(crate) fn from_record(r: &csv::StringRecord) -> Option<Self> {
        if r.len() != CSV_HEADER.len() || &r[0] != "v1" {
            return None;
        }
        let subopt = if r[6].is_empty() { None } else { Some(r[6].parse().ok()?) };
        Some(Self {
            instance_id: r[1].to_string(),
            algorithm: r[2].to_string(),
            k: r[3].parse().ok()?,
            epsilon: r[4].parse().ok()?,
            seed: r[5].parse().ok()?,
            subopt,
            runtime_ms: r[7].parse().ok()?,
            digest: r[8].to_string(),
        })
    }
}

/// An instance ready for sampling: the evaluation game, its features, the
/// behavior policy and, for pair instances, the attack target.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedInstance {
    pub id: String,
    pub game: TabularMG,
    pub features: Features,
    pub rho: BehaviorPolicy,
    pub target: Option<TupleTarget>,
}

impl AttackTarget for PreparedInstance {
    fn attack_target(&self) -> TupleTarget {
        self.target.expect("least-covered attack on an instance without a target")
    }

    fn tuple_count(&self) -> usize {
        self.game.shape().tuples()
    }
}

pub fn prepare_instance(spec: &InstanceSpec, behavior: &BehaviorSpec) -> Result<PreparedInstance, ExpError> {
    let (id, game, features, own_rho, target) = match spec {
        InstanceSpec::RandomTabular { states, max_actions, min_actions, horizon, gamma, seed } => {
            let mg = random_tabular(*states, *max_actions, *min_actions, *horizon, *gamma, *seed)?;
            let features = Features::one_hot(mg.shape());
            let id = format!("random-tabular-{states}x{max_actions}x{min_actions}-h{horizon}-s{seed}");
            (id, mg, features, None, None)
        }
        InstanceSpec::RandomLinear { states, max_actions, min_actions, horizon, dim, gamma, seed } => {
            let lin = random_linear(*states, *max_actions, *min_actions, *horizon, *dim, *gamma, *seed)?;
            let id = format!("random-linear-{states}x{max_actions}x{min_actions}-h{horizon}-d{dim}-s{seed}");
            (id, lin.induced().clone(), lin.features().clone(), None, None)
        }
        InstanceSpec::Tree { states, max_actions, min_actions, horizon, alpha } => {
            let pair = build_tree_pair(*states, *max_actions, *min_actions, *horizon, *alpha)?;
            let features = Features::one_hot(pair.g.shape());
            let id = format!("tree-{states}x{max_actions}x{min_actions}-h{horizon}-a{alpha}");
            (id, pair.g, features, Some(pair.rho), Some(pair.target))
        }
        InstanceSpec::Agnostic { p, epsilon, n } => {
            let pair = build_agnostic_pair(*p, *epsilon, *n)?;
            let features = Features::one_hot(pair.g1.shape());
            (format!("agnostic-p{p}-e{epsilon}-n{n}"), pair.g1, features, Some(pair.rho), None)
        }
        InstanceSpec::File { path } => {
            let loaded = load_game(Path::new(path))?;
            let id = Path::new(path)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "file".into());
            (id, loaded.tabular().clone(), loaded.features(), None, None)
        }
    };
    let shape = game.shape();
    let rho = match behavior {
        BehaviorSpec::Auto => own_rho.unwrap_or_else(|| BehaviorPolicy::uniform(shape)),
        BehaviorSpec::Uniform => BehaviorPolicy::uniform(shape),
        BehaviorSpec::Stationary { joint } => BehaviorPolicy::stationary(shape, joint)?,
    };
    Ok(PreparedInstance { id, game, features, rho, target })
}

/// FNV-1a over the bit patterns of both strategies, as 16 hex digits.
pub fn pair_digest(pair: &StrategyPair) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for policy in [&pair.max, &pair.min] {
        for h in 0..policy.horizon() {
            for s in 0..policy.states() {
                for x in policy.row(h, s) {
                    for byte in x.to_bits().to_le_bytes() {
                        hash ^= u64::from(byte);
                        hash = hash.wrapping_mul(0x0100_0000_01b3);
                    }
                }
            }
        }
    }
    format!("{hash:016x}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    /// All rows in canonical order, including ones found on resume.
    pub rows: Vec<ResultRow>,
    pub failures: usize,
    /// Rows already present in the output CSV.
    pub resumed: usize,
}

/// Datasets shared by all algorithms of one `(K, ε, seed)` cell.
fn cell_dataset(cfg: &ExperimentConfig, inst: &PreparedInstance, k: usize, epsilon: f64, seed: u64) -> Result<Dataset, ExpError> {
    let data_seed = derive_seed(seed, k as u64);
    let clean = sample_dataset(&inst.game, &inst.rho, k, data_seed)?.with_mode(cfg.slice_mode);
    if epsilon == 0.0 {
        return Ok(clean);
    }
    if cfg.attack.least_covered {
        return Ok(least_covered_attack(&clean, inst, epsilon)?);
    }
    match cfg.attack.adversary {
        None => Ok(clean),
        Some(adversary) => Ok(corrupt(
            &clean,
            &CorruptionSpec {
                epsilon,
                model: cfg.attack.model,
                adversary,
                seed: derive_seed(data_seed, CORRUPTION_SALT),
                replacements: None,
                space: Some(inst.game.shape()),
            },
        )?),
    }
}

fn run_cell(
    cfg: &ExperimentConfig,
    inst: &PreparedInstance,
    (k, epsilon, seed): (usize, f64, u64),
    wanted: &[usize],
) -> Vec<ResultRow> {
    let row = |alg: usize, subopt, runtime_ms, digest| ResultRow {
        instance_id: inst.id.clone(),
        algorithm: cfg.algorithms[alg].name.clone(),
        k,
        epsilon,
        seed,
        subopt,
        runtime_ms,
        digest,
    };
    let data = match cell_dataset(cfg, inst, k, epsilon, seed) {
        Ok(d) => d,
        Err(e) => {
            log::warn!("cell K={k} eps={epsilon} seed={seed}: {e}");
            return wanted.iter().map(|&a| row(a, None, 0, format!("error:{}", e.code()))).collect();
        }
    };
    let learner_seed = derive_seed(derive_seed(seed, k as u64), LEARNER_SALT);
    wanted
        .iter()
        .map(|&alg| {
            let start = Instant::now();
            let result = cfg.algorithms[alg]
                .learner()
                .learn(data.observations(), &inst.features, epsilon, inst.game.gamma(), cfg.delta, learner_seed)
                .map_err(ExpError::from)
                .and_then(|out| Ok((subopt_gap_at_start(&inst.game, &out.pair)?, pair_digest(&out.pair))));
            let ms = start.elapsed().as_millis() as u64;
            match result {
                Ok((gap, digest)) => row(alg, Some(gap), ms, digest),
                Err(e) => {
                    log::warn!("{} at K={k} eps={epsilon} seed={seed}: {e}", cfg.algorithms[alg].name);
                    row(alg, None, ms, format!("error:{}", e.code()))
                }
            }
        })
        .collect()
}

fn read_existing(path: &Path) -> Result<Vec<ResultRow>, ExpError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_path(path)?;
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(ExpError::Config(format!("{} has a different CSV header", path.display())));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        match record.ok().as_ref().and_then(ResultRow::from_record) {
            Some(r) => rows.push(r),
            // A torn final line from an interrupted run.
            None => break,
        }
    }
    Ok(rows)
}

fn write_rows(out: &mut impl Write, rows: &[ResultRow]) -> Result<(), ExpError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every `(K, ε, seed, algorithm)` combination.
///
/// Cells run in parallel in chunks; each chunk's rows are appended in
/// canonical order (`K`, then `ε`, then seed, then algorithm), so the file
/// is always a prefix of the full result and a rerun after interruption
/// skips completed rows and produces the same file. Failed cells become
/// error rows and do not stop the sweep.
pub fn run_sweep(cfg: &ExperimentConfig, csv_path: Option<&Path>) -> Result<SweepOutcome, ExpError> {
    cfg.validate()?;
    let inst = prepare_instance(&cfg.instance, &cfg.behavior)?;

    let mut rows = Vec::new();
    let mut writer: Option<File> = None;
    if let Some(path) = csv_path {
        if path.exists() {
            rows = read_existing(path)?;
        }
        let mut file = File::create(path)?;
        writeln!(file, "{}", CSV_HEADER.join(","))?;
        write_rows(&mut file, &rows)?;
        drop(file);
        writer = Some(OpenOptions::new().append(true).open(path)?);
    }
    let resumed = rows.len();
    let done: HashSet<_> = rows.iter().map(ResultRow::key).collect();

    let mut cells = Vec::new();
    for &k in &cfg.k_grid {
        for &eps in &cfg.epsilon_grid {
            for &seed in &cfg.seeds {
                let wanted: Vec<usize> = (0..cfg.algorithms.len())
                    .filter(|&a| !done.contains(&(cfg.algorithms[a].name.clone(), k, eps.to_bits(), seed)))
                    .collect();
                if !wanted.is_empty() {
                    cells.push(((k, eps, seed), wanted));
                }
            }
        }
    }
    let chunk = 4 * rayon::current_num_threads().max(1);
    for (i, batch) in cells.chunks(chunk).enumerate() {
        let results: Vec<Vec<ResultRow>> =
            batch.par_iter().map(|(cell, wanted)| run_cell(cfg, &inst, *cell, wanted)).collect();
        let new: Vec<ResultRow> = results.into_iter().flatten().collect();
        if let Some(file) = writer.as_mut() {
            write_rows(file, &new)?;
            file.sync_data()?;
        }
        log::info!("{}: chunk {} of {} done", cfg.name, i + 1, cells.len().div_ceil(chunk));
        rows.extend(new);
    }
    let failures = rows.iter().filter(|r| r.is_error()).count();
    Ok(SweepOutcome { rows, failures, resumed })
}

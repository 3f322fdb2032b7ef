//! Genetic search over network architectures. Each candidate is trained and
//! scored on held-out strides by its joint-angle error, the progress error of
//! the estimator driven by its thigh prediction and its computing cost.

use crate::gait_data::GaitTrajectory;
use crate::harness::{replay, LatencyModel, ReplayConfig};
use crate::predictor::{
    adjust_swing, spec_with_output, Activation, Example, FeatureConfig, LayerKind, LayerSpec, NetworkSpec, Predictor,
    PredictorError, TrainConfig, TrainHistory,
};
use crate::seeds::derive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

pub const MAX_LAYERS: usize = 5;
pub const WIDTH_RANGE: (usize, usize) = (4, 128);
pub const DROPOUT_LEVELS: [f64; 6] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
/// Fitness of a candidate whose training or evaluation failed.
pub const PENALTY: f64 = 1.0e6;

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("invalid GA config: {0}")]
    InvalidConfig(String),
    #[error("dataset needs at least {needed} training and 1 held-out example, got {train} and {holdout}")]
    DatasetTooSmall { train: usize, holdout: usize, needed: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerGene {
    pub kind: LayerKind,
    pub width: usize,
    pub activation: Activation,
    /// Index into [`DROPOUT_LEVELS`].
    pub dropout: usize,
}

impl LayerGene {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        Self {
            kind: random_kind(rng),
            width: random_width(rng),
            activation: random_activation(rng),
            dropout: rng.random_range(0..DROPOUT_LEVELS.len()),
        }
    }
}

fn random_kind(rng: &mut ChaCha8Rng) -> LayerKind {
    if rng.random::<bool>() {
        LayerKind::Dense
    } else {
        LayerKind::Attention
    }
}

fn random_width(rng: &mut ChaCha8Rng) -> usize {
    rng.random_range(WIDTH_RANGE.0..=WIDTH_RANGE.1)
}

fn random_activation(rng: &mut ChaCha8Rng) -> Activation {
    Activation::ALL[rng.random_range(0..Activation::ALL.len())]
}

/// Hidden layers of a candidate. Decoding appends the dense identity output
/// layer that produces both trajectories.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Genome {
    pub layers: Vec<LayerGene>,
}

impl Genome {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let count = rng.random_range(1..=MAX_LAYERS);
        Self { layers: (0..count).map(|_| LayerGene::random(rng)).collect() }
    }

    pub fn is_valid(&self) -> bool {
        (1..=MAX_LAYERS).contains(&self.layers.len())
            && self.layers.iter().all(|g| {
                (WIDTH_RANGE.0..=WIDTH_RANGE.1).contains(&g.width) && g.dropout < DROPOUT_LEVELS.len()
            })
    }

    pub fn decode(&self, features: &FeatureConfig) -> NetworkSpec {
        let hidden = self
            .layers
            .iter()
            .map(|g| LayerSpec {
                kind: g.kind,
                width: g.width,
                activation: g.activation,
                dropout: DROPOUT_LEVELS[g.dropout],
            })
            .collect();
        spec_with_output(hidden, features)
    }

    /// Short text form, e.g. `dense:64:tanh:0.1|attention:16:relu:0`.
    pub fn describe(&self) -> String {
        self.layers
            .iter()
            .map(|g| {
                let kind = match g.kind {
                    LayerKind::Dense => "dense",
                    LayerKind::Attention => "attention",
                };
                let act = match g.activation {
                    Activation::Relu => "relu",
                    Activation::Tanh => "tanh",
                    Activation::Sigmoid => "sigmoid",
                    Activation::Identity => "identity",
                };
                format!("{kind}:{}:{act}:{}", g.width, DROPOUT_LEVELS[g.dropout])
            })
            .collect::<Vec<_>>()
            .join("|")
    }
}

/// Single cut point in each parent's layer list; the child takes the head of
/// `a` and the tail of `b`, trimmed or padded back into `[1, MAX_LAYERS]`.
pub fn crossover(a: &Genome, b: &Genome, rng: &mut ChaCha8Rng) -> Genome {
    let cut_a = rng.random_range(0..=a.layers.len());
    let cut_b = rng.random_range(0..=b.layers.len());
    let mut layers: Vec<LayerGene> = a.layers[..cut_a].iter().chain(&b.layers[cut_b..]).copied().collect();
    layers.truncate(MAX_LAYERS);
    if layers.is_empty() {
        layers.push(if rng.random::<bool>() { a.layers[0] } else { b.layers[b.layers.len() - 1] });
    }
    Genome { layers }
}

/// Every gene, the layer count included, is redrawn with probability `rate`.
pub fn mutate(g: &Genome, rate: f64, rng: &mut ChaCha8Rng) -> Genome {
    let mut layers = g.layers.clone();
    if rng.random::<f64>() < rate {
        let count = rng.random_range(1..=MAX_LAYERS);
        layers.truncate(count);
        while layers.len() < count {
            layers.push(LayerGene::random(rng));
        }
    }
    for l in &mut layers {
        if rng.random::<f64>() < rate {
            l.kind = random_kind(rng);
        }
        if rng.random::<f64>() < rate {
            l.width = random_width(rng);
        }
        if rng.random::<f64>() < rate {
            l.activation = random_activation(rng);
        }
        if rng.random::<f64>() < rate {
            l.dropout = rng.random_range(0..DROPOUT_LEVELS.len());
        }
    }
    Genome { layers }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitnessWeights {
    pub angle: f64,
    pub progress: f64,
    pub time: f64,
}

impl Default for FitnessWeights {
    fn default() -> Self {
        Self { angle: 1.0, progress: 1.0, time: 0.01 }
    }
}

/// How the computing-cost term is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum TimeCost {
    /// Wall-clock seconds of training and inference. Not reproducible.
    Measured,
    /// Multiply-accumulates actually performed, at a nominal rate.
    Modeled { macs_per_second: f64 },
}

impl Default for TimeCost {
    fn default() -> Self {
        Self::Modeled { macs_per_second: 1.0e9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub elites: usize,
    pub generations: usize,
    pub crossover_ratio: f64,
    pub mutation_rate: f64,
    pub tournament: usize,
    pub weights: FitnessWeights,
    pub time_cost: TimeCost,
    pub rng_seed: u64,
    pub features: FeatureConfig,
    /// Per-candidate training budget. Its seed is replaced per candidate.
    pub train: TrainConfig,
    /// Replay settings for the progress term.
    pub replay: ReplayConfig,
    /// Held-out strides replayed for the progress term.
    pub progress_strides: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 20,
            elites: 3,
            generations: 20,
            crossover_ratio: 0.8,
            mutation_rate: 0.1,
            tournament: 3,
            weights: FitnessWeights::default(),
            time_cost: TimeCost::default(),
            rng_seed: 0,
            features: FeatureConfig::default(),
            train: TrainConfig::default(),
            replay: ReplayConfig { rate_hz: 50.0, latency: LatencyModel::Fixed { ms: 0.0 }, ..Default::default() },
            progress_strides: 4,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        let bad = |m: String| Err(EvolutionError::InvalidConfig(m));
        if self.population < 2 {
            return bad(format!("population must be >= 2, got {}", self.population));
        }
        if self.elites >= self.population {
            return bad(format!("elites ({}) must be below population ({})", self.elites, self.population));
        }
        for (name, v) in [("crossover_ratio", self.crossover_ratio), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        if self.tournament == 0 {
            return bad("tournament must be >= 1".into());
        }
        let w = self.weights;
        if [w.angle, w.progress, w.time].iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return bad("fitness weights must be finite and >= 0".into());
        }
        if let TimeCost::Modeled { macs_per_second } = self.time_cost {
            if !(macs_per_second > 0.0) {
                return bad("macs_per_second must be positive".into());
            }
        }
        self.train.validate().map_err(|e| EvolutionError::InvalidConfig(e.to_string()))?;
        self.replay.validate().map_err(|e| EvolutionError::InvalidConfig(e.to_string()))?;
        Ok(())
    }
}

/// Training strides, and held-out strides with their full sessions for replay.
#[derive(Debug, Clone)]
pub struct EvolutionData {
    pub train: Vec<Example>,
    pub holdout: Vec<(GaitTrajectory, Example)>,
}

impl EvolutionData {
    pub fn from_sessions(
        train: &[GaitTrajectory],
        holdout: &[GaitTrajectory],
        features: &FeatureConfig,
    ) -> Result<Self, PredictorError> {
        Ok(Self {
            train: train.iter().map(|t| Example::from_trajectory(t, features)).collect::<Result<_, _>>()?,
            holdout: holdout
                .iter()
                .map(|t| Ok((t.clone(), Example::from_trajectory(t, features)?)))
                .collect::<Result<_, PredictorError>>()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessRecord {
    /// Progress RMSE in percentage points.
    pub error1: f64,
    /// Joint-angle RMSE in degrees, thigh and knee together.
    pub error2: f64,
    pub time_cost: f64,
    pub total: f64,
}

impl FitnessRecord {
    fn penalty() -> Self {
        Self { error1: PENALTY, error2: PENALTY, time_cost: PENALTY, total: PENALTY }
    }
}

fn spec_macs(spec: &NetworkSpec) -> f64 {
    let mut inputs = spec.input_len;
    let mut macs = 0.0;
    for l in &spec.layers {
        let factor = if l.kind == LayerKind::Attention { 2.0 } else { 1.0 };
        macs += factor * (inputs * l.width) as f64;
        inputs = l.width;
    }
    macs
}

#[derive(Debug, Clone)]
pub struct Evaluated {
    pub fitness: FitnessRecord,
    pub predictor: Option<Predictor>,
    pub history: Option<TrainHistory>,
}

/// Trains the decoded network and scores it on the held-out strides.
/// Failures score [`PENALTY`] instead of aborting the search.
pub fn evaluate_fitness(genome: &Genome, data: &EvolutionData, cfg: &GaConfig, seed: u64) -> Evaluated {
    let started = Instant::now();
    let spec = genome.decode(&cfg.features);
    let train_cfg = TrainConfig { rng_seed: seed, ..cfg.train };
    let failed = Evaluated { fitness: FitnessRecord::penalty(), predictor: None, history: None };
    let Ok((predictor, history)) = Predictor::fit(spec.clone(), cfg.features, &data.train, &train_cfg) else {
        return failed;
    };

    let mut se = 0.0;
    let mut count = 0.0;
    let mut preds = Vec::with_capacity(data.holdout.len());
    for (_, ex) in &data.holdout {
        let Ok(p) = predictor.predict_example(ex) else {
            return failed;
        };
        let p = adjust_swing(&p, ex.knee_at_event);
        for (a, b) in p.thigh_pred.iter().chain(&p.knee_pred).zip(ex.thigh.iter().chain(&ex.knee)) {
            se += (a - b).powi(2);
            count += 1.0;
        }
        preds.push(p);
    }
    let error2 = (se / count).sqrt();

    let mut pe = 0.0;
    let mut runs = 0.0;
    for ((traj, _), p) in data.holdout.iter().zip(&preds).take(cfg.progress_strides.max(1)) {
        match replay(traj, p, &cfg.replay) {
            Ok(out) => {
                pe += out.metrics.progress_rmse_pct.powi(2);
                runs += 1.0;
            }
            Err(_) => return failed,
        }
    }
    let error1 = (pe / runs).sqrt();

    let time_cost = match cfg.time_cost {
        TimeCost::Measured => started.elapsed().as_secs_f64(),
        TimeCost::Modeled { macs_per_second } => {
            // Forward and backward passes over the training split, then inference.
            let fwd = spec_macs(&spec);
            let fit_rows = history.epochs_run as f64 * data.train.len() as f64;
            (3.0 * fwd * fit_rows + fwd * data.holdout.len() as f64) / macs_per_second
        }
    };
    if !(error1.is_finite() && error2.is_finite()) {
        return failed;
    }
    let w = cfg.weights;
    let total = w.progress * error1 + w.angle * error2 + w.time * time_cost;
    Evaluated {
        fitness: FitnessRecord { error1, error2, time_cost, total },
        predictor: Some(predictor),
        history: Some(history),
    }
}

#[derive(Debug, Clone)]
pub struct Individual {
    pub genome: Genome,
    pub fitness: FitnessRecord,
    pub predictor: Option<Predictor>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_total: f64,
    pub mean_total: f64,
    pub best_error1: f64,
    pub best_error2: f64,
    pub best_time: f64,
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub best: Individual,
    /// Generation 0 is the initial population.
    pub history: Vec<GenerationStats>,
    pub population: Vec<Individual>,
}

pub fn history_csv(history: &[GenerationStats]) -> String {
    use crate::numfmt::sig9;
    let mut out = String::from("generation,best_total,mean_total,best_error1,best_error2,best_time\n");
    for h in history {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            h.generation,
            sig9(h.best_total),
            sig9(h.mean_total),
            sig9(h.best_error1),
            sig9(h.best_error2),
            sig9(h.best_time)
        ));
    }
    out
}

fn rank(pop: &mut [Individual]) {
    // Stable, so equal totals keep their earlier order.
    pop.sort_by(|a, b| a.fitness.total.total_cmp(&b.fitness.total));
}

fn stats(generation: usize, pop: &[Individual]) -> GenerationStats {
    let best = &pop[0].fitness;
    GenerationStats {
        generation,
        best_total: best.total,
        mean_total: pop.iter().map(|i| i.fitness.total).sum::<f64>() / pop.len() as f64,
        best_error1: best.error1,
        best_error2: best.error2,
        best_time: best.time_cost,
    }
}

fn evaluate_all(genomes: Vec<Genome>, data: &EvolutionData, cfg: &GaConfig, generation: usize) -> Vec<Individual> {
    genomes
        .into_par_iter()
        .enumerate()
        .map(|(k, genome)| {
            let seed = derive(cfg.rng_seed, &[generation as u64, k as u64]);
            let e = evaluate_fitness(&genome, data, cfg, seed);
            Individual { genome, fitness: e.fitness, predictor: e.predictor }
        })
        .collect()
}

fn tournament<'a>(pool: &'a [Individual], size: usize, rng: &mut ChaCha8Rng) -> &'a Individual {
    (0..size)
        .map(|_| &pool[rng.random_range(0..pool.len())])
        .min_by(|a, b| a.fitness.total.total_cmp(&b.fitness.total))
        .expect("tournament size >= 1")
}

/// Runs the GA. Elites pass unchanged, keeping their trained networks and
/// fitness. Of the remaining slots, `crossover_ratio` are filled by crossover
/// children and the rest by mutated copies of tournament winners drawn from
/// the non-elite members.
pub fn evolve(cfg: &GaConfig, data: &EvolutionData) -> Result<EvolutionResult, EvolutionError> {
    cfg.validate()?;
    if data.train.len() < crate::predictor::MIN_DATASET || data.holdout.is_empty() {
        return Err(EvolutionError::DatasetTooSmall {
            train: data.train.len(),
            holdout: data.holdout.len(),
            needed: crate::predictor::MIN_DATASET,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive(cfg.rng_seed, &[u64::MAX]));
    let initial: Vec<Genome> = (0..cfg.population).map(|_| Genome::random(&mut rng)).collect();
    let mut pop = evaluate_all(initial, data, cfg, 0);
    rank(&mut pop);
    let mut history = vec![stats(0, &pop)];

    let rest = cfg.population - cfg.elites;
    let n_cross = (cfg.crossover_ratio * rest as f64).round() as usize;
    for generation in 1..=cfg.generations {
        let pool = if cfg.elites < pop.len() { &pop[cfg.elites..] } else { &pop[..] };
        let mut children = Vec::with_capacity(rest);
        for k in 0..rest {
            let child = if k < n_cross {
                let a = tournament(pool, cfg.tournament, &mut rng);
                let b = tournament(pool, cfg.tournament, &mut rng);
                crossover(&a.genome, &b.genome, &mut rng)
            } else {
                mutate(&tournament(pool, cfg.tournament, &mut rng).genome, cfg.mutation_rate, &mut rng)
            };
            debug_assert!(child.is_valid());
            children.push(child);
        }
        let mut next: Vec<Individual> = pop[..cfg.elites].to_vec();
        next.extend(evaluate_all(children, data, cfg, generation));
        rank(&mut next);
        pop = next;
        history.push(stats(generation, &pop));
    }
    Ok(EvolutionResult { best: pop[0].clone(), history, population: pop })
}

#[cfg(test)]
mod tests;

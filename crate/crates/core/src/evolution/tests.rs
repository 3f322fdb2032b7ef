use super::*;
use crate::gait_data::{generate_synthetic, SyntheticGaitConfig};

fn sessions(seeds: std::ops::Range<u64>) -> Vec<GaitTrajectory> {
    seeds.map(|s| generate_synthetic(&SyntheticGaitConfig::varied(s, 50.0)).unwrap()).collect()
}

fn small_cfg() -> GaConfig {
    GaConfig {
        population: 6,
        elites: 2,
        generations: 3,
        features: FeatureConfig { ankle_len: 10, pre_len: 5, trajectory_len: 40 },
        train: TrainConfig { max_epochs: 25, patience_epochs: 10, ..Default::default() },
        progress_strides: 2,
        ..Default::default()
    }
}

fn small_data(cfg: &GaConfig) -> EvolutionData {
    EvolutionData::from_sessions(&sessions(0..14), &sessions(100..103), &cfg.features).unwrap()
}

#[test]
fn operators_keep_genomes_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let fc = FeatureConfig::default();
    let mut pool: Vec<Genome> = (0..10).map(|_| Genome::random(&mut rng)).collect();
    for _ in 0..2000 {
        let a = &pool[rng.random_range(0..pool.len())];
        let b = &pool[rng.random_range(0..pool.len())];
        let child = if rng.random::<bool>() { crossover(a, b, &mut rng) } else { mutate(a, 0.5, &mut rng) };
        assert!(child.is_valid(), "{child:?}");
        assert!(child.decode(&fc).validate().is_ok());
        let k = rng.random_range(0..pool.len());
        pool[k] = child;
    }
}

#[test]
fn zero_mutation_rate_copies_genome() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g = Genome::random(&mut rng);
    assert_eq!(mutate(&g, 0.0, &mut rng), g);
}

#[test]
fn crossover_of_identical_parents_stays_within_their_layers() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = Genome::random(&mut rng);
    for _ in 0..50 {
        let c = crossover(&g, &g, &mut rng);
        assert!(c.layers.iter().all(|l| g.layers.contains(l)));
    }
}

#[test]
fn decode_appends_output_layer() {
    let g = Genome {
        layers: vec![LayerGene { kind: LayerKind::Attention, width: 16, activation: Activation::Tanh, dropout: 2 }],
    };
    let spec = g.decode(&FeatureConfig::default());
    assert_eq!(spec.input_len, 71);
    assert_eq!(spec.layers.len(), 2);
    assert_eq!(spec.layers[0].dropout, 0.2);
    assert_eq!(spec.layers[1], LayerSpec::dense(200, Activation::Identity));
    assert_eq!(g.describe(), "attention:16:tanh:0.2");
}

#[test]
fn fitness_is_deterministic_and_weighted() {
    let cfg = small_cfg();
    let data = small_data(&cfg);
    let g = Genome {
        layers: vec![LayerGene { kind: LayerKind::Dense, width: 12, activation: Activation::Tanh, dropout: 0 }],
    };
    let a = evaluate_fitness(&g, &data, &cfg, 7).fitness;
    let b = evaluate_fitness(&g.clone(), &data, &cfg, 7).fitness;
    assert_eq!(a, b);
    assert!(a.error1 >= 0.0 && a.error2 >= 0.0 && a.time_cost > 0.0);
    assert!((a.total - (a.error1 + a.error2 + 0.01 * a.time_cost)).abs() < 1e-12);

    let no_time = GaConfig { weights: FitnessWeights { time: 0.0, ..Default::default() }, ..cfg };
    let c = evaluate_fitness(&g, &data, &no_time, 7).fitness;
    assert_eq!(c.total, c.error1 + c.error2);
}

#[test]
fn reasonable_network_beats_one_neuron_bottleneck() {
    let cfg = GaConfig { train: TrainConfig { max_epochs: 120, patience_epochs: 30, ..Default::default() }, ..small_cfg() };
    let data = small_data(&cfg);
    let gene = |width, activation| LayerGene { kind: LayerKind::Dense, width, activation, dropout: 0 };
    let good = Genome { layers: vec![gene(32, Activation::Tanh)] };
    let degenerate = Genome { layers: vec![gene(1, Activation::Sigmoid)] };
    let fg = evaluate_fitness(&good, &data, &cfg, 1).fitness;
    let fd = evaluate_fitness(&degenerate, &data, &cfg, 1).fitness;
    assert!(fg.total <= fd.total, "{fg:?} vs {fd:?}");
}

#[test]
fn zero_generations_returns_best_initial() {
    let cfg = GaConfig { generations: 0, ..small_cfg() };
    let data = small_data(&cfg);
    let res = evolve(&cfg, &data).unwrap();
    assert_eq!(res.history.len(), 1);
    let best = res.population.iter().map(|i| i.fitness.total).fold(f64::INFINITY, f64::min);
    assert_eq!(res.best.fitness.total, best);
    assert_eq!(res.history[0].best_total, best);
}

#[test]
fn small_run_is_elitist_and_reproducible() {
    let cfg = small_cfg();
    let data = small_data(&cfg);
    let a = evolve(&cfg, &data).unwrap();
    let b = evolve(&cfg, &data).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(history_csv(&a.history), history_csv(&b.history));
    assert_eq!(a.history.len(), cfg.generations + 1);
    assert_eq!(a.population.len(), cfg.population);
    for w in a.history.windows(2) {
        assert!(w[1].best_total <= w[0].best_total);
    }
    assert!(a.population.iter().all(|i| i.genome.is_valid()));
}

#[test]
fn config_limits_are_checked() {
    let data = small_data(&small_cfg());
    for cfg in [
        GaConfig { population: 1, ..small_cfg() },
        GaConfig { elites: 6, ..small_cfg() },
        GaConfig { crossover_ratio: 1.5, ..small_cfg() },
    ] {
        assert!(matches!(evolve(&cfg, &data), Err(EvolutionError::InvalidConfig(_))));
    }
}

//! Every pairing with a tuned learning rate should, at n = 10⁴ over 20 seeds,
//! have less than half the regret of the player that ignores feedback.

use std::sync::Arc;

use osmd::engine::{uninformed_regret, Engine, EstimatorChoice, EtaChoice, OsmdConfig};
use osmd::environments::{InstanceKind, LossSource, ProblemInstance};
use osmd::graph::GraphSpec;
use osmd::potentials::{lp_norm, Potential};
use osmd::suites::gap_means;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const N: usize = 10_000;
const SEEDS: u64 = 20;

fn ratio(potential: Potential, estimator: EstimatorChoice, instance: ProblemInstance) -> f64 {
    let instance = Arc::new(instance);
    let engine = Engine::new(OsmdConfig {
        potential,
        estimator,
        instance: instance.clone(),
        eta: EtaChoice::Auto,
        seed: 11,
        checkpoints: vec![N],
    })
    .unwrap();
    let (alg, base): (Vec<f64>, Vec<f64>) = (0..SEEDS)
        .into_par_iter()
        .map(|r| (engine.run(r).unwrap().checkpoints[0].1, uninformed_regret(&instance, 11, r).unwrap()))
        .unzip();
    alg.iter().sum::<f64>() / base.iter().sum::<f64>()
}

fn bandit() -> ProblemInstance {
    ProblemInstance::new(InstanceKind::KArmedBandit { k: 5 }, LossSource::Bernoulli { means: gap_means(5) }, N).unwrap()
}

#[test]
fn negentropy_importance_weighted() {
    let r = ratio(Potential::Negentropy, EstimatorChoice::ImportanceWeighted, bandit());
    assert!(r < 0.5, "{r}");
}

#[test]
fn tsallis_importance_weighted() {
    let r = ratio(Potential::TsallisHalf, EstimatorChoice::ImportanceWeighted, bandit());
    assert!(r < 0.5, "{r}");
}

#[test]
fn tsallis_shifted() {
    let r = ratio(Potential::TsallisHalf, EstimatorChoice::Shifted, bandit());
    assert!(r < 0.5, "{r}");
}

#[test]
fn graph_tsallis_hybrid() {
    let k = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let graph = Arc::new(GraphSpec::random_strongly_observable(k, 0.3, 0.5, &mut rng).unwrap());
    let instance = ProblemInstance::new(
        InstanceKind::GraphBandit { graph },
        LossSource::Bernoulli { means: gap_means(k) },
        N,
    )
    .unwrap();
    let r = ratio(Potential::graph_tsallis(k).unwrap(), EstimatorChoice::GraphHybrid, instance);
    assert!(r < 0.5, "{r}");
}

#[test]
fn clipped_lp_full_information() {
    // drifting losses: a fixed direction plus bounded noise, inside the dual ball
    let (p, d) = (1.5, 20);
    let q = p / (p - 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dir: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dn = lp_norm(&dir, q);
    let rows: Vec<Vec<f64>> = (0..N)
        .map(|_| {
            let noise: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let nn = lp_norm(&noise, q);
            dir.iter().zip(&noise).map(|(a, b)| 0.5 * a / dn + 0.5 * b / nn).collect()
        })
        .collect();
    let instance = ProblemInstance::new(InstanceKind::LpFullInfo { p, d }, LossSource::FixedSequence(rows), N).unwrap();
    let r = ratio(Potential::clipped_lp(p, d).unwrap(), EstimatorChoice::FullInformation, instance);
    assert!(r < 0.5, "{r}");
}

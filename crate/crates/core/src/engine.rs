//! The online stochastic mirror descent loop.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{stability_constants, tune_eta, Tuning};
use crate::environments::{Action, InstanceKind, ProblemInstance};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorKind, EstimatorSpec};
use crate::mirror::{constrained_step, MirrorStepRequest};
use crate::potentials::{Geometry, Potential};
use crate::seeding::{round_stream, Purpose};

/// Learning rate: a number or tuned to the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaChoice {
    Fixed(f64),
    Auto,
}

impl Serialize for EtaChoice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            EtaChoice::Fixed(v) => s.serialize_f64(*v),
            EtaChoice::Auto => s.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for EtaChoice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(EtaChoice::Fixed(v)),
            Raw::Text(t) if t == "auto" => Ok(EtaChoice::Auto),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("eta must be a number or \"auto\", got \"{t}\""))),
        }
    }
}

/// Estimator family; parameters (learning rate, graph) come from the rest of
/// the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorChoice {
    ImportanceWeighted,
    Shifted,
    GraphHybrid,
    FullInformation,
}

#[derive(Debug, Clone)]
pub struct OsmdConfig {
    pub potential: Potential,
    pub estimator: EstimatorChoice,
    pub instance: Arc<ProblemInstance>,
    pub eta: EtaChoice,
    pub seed: u64,
    /// Rounds at which cumulative regret is recorded; empty means powers of
    /// two plus the final round.
    pub checkpoints: Vec<usize>,
}

/// Cumulative regret of one run at its checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretTrace {
    pub run_id: u64,
    pub checkpoints: Vec<(usize, f64)>,
    pub final_iterate: Vec<f64>,
    pub eta: f64,
}

/// What the observer sees after each round.
#[derive(Debug)]
pub struct RoundRecord<'a> {
    pub t: usize,
    /// The iterate the action was sampled from.
    pub x: &'a [f64],
    pub action: &'a Action,
    pub loss: &'a [f64],
    pub estimate: &'a [f64],
    /// The next iterate.
    pub next: &'a [f64],
}

/// Powers of two up to `n`, plus `n`.
pub fn default_checkpoints(n: usize) -> Vec<usize> {
    let mut out: Vec<usize> = std::iter::successors(Some(1usize), |&t| t.checked_mul(2))
        .take_while(|&t| t <= n)
        .collect();
    if out.last() != Some(&n) {
        out.push(n);
    }
    out
}

/// `P_x`: the categorical distribution `x` on the simplex, the point mass at
/// `x` on the ball.
pub fn sampling_scheme(x: &[f64], geometry: &Geometry) -> Vec<(Action, f64)> {
    match geometry {
        Geometry::Simplex { .. } => x
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| (Action::Arm(i), p))
            .collect(),
        Geometry::LpBall { .. } => vec![(Action::Point(x.to_vec()), 1.0)],
    }
}

/// Inverse-CDF draw of an arm from `x`.
pub fn sample_arm<R: Rng + ?Sized>(x: &[f64], rng: &mut R) -> usize {
    let total: f64 = x.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in x.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// A configuration with its learning rate and estimator resolved.
/// Action, loss, loss estimate and next iterate of one round.
type Step = (Action, Vec<f64>, Vec<f64>, Vec<f64>);

#[derive(Debug, Clone)]
pub struct Engine {
    config: OsmdConfig,
    estimator: EstimatorSpec,
    eta: f64,
    tuning: Option<Tuning>,
    checkpoints: Vec<usize>,
}

impl Engine {
    pub fn new(config: OsmdConfig) -> Result<Self> {
        config.potential.validate()?;
        let inst = &config.instance;
        let k = inst.dim();
        let geometry = inst.geometry();
        // fails early for potentials that do not live on this geometry
        config.potential.minimizer(&geometry)?;
        if let (Potential::ClippedLp(c), Geometry::LpBall { p, d }) = (&config.potential, geometry) {
            if c.p() != p || c.d() != d {
                return Err(Error::Unsupported(format!(
                    "clipped lp potential (p={}, d={}) on a ball with p={p}, d={d}",
                    c.p(),
                    c.d()
                )));
            }
        }

        let build = |eta: f64| -> Result<EstimatorSpec> {
            let kind = match (config.estimator, inst.kind()) {
                (EstimatorChoice::ImportanceWeighted, InstanceKind::KArmedBandit { .. }) => {
                    EstimatorKind::ImportanceWeighted
                }
                (EstimatorChoice::Shifted, InstanceKind::KArmedBandit { .. }) => {
                    EstimatorKind::ShiftedImportanceWeighted { eta }
                }
                (EstimatorChoice::GraphHybrid, InstanceKind::GraphBandit { graph }) => {
                    EstimatorKind::GraphHybrid(graph.clone())
                }
                (EstimatorChoice::FullInformation, InstanceKind::LpFullInfo { .. }) => EstimatorKind::FullInformation,
                (choice, kind) => {
                    return Err(Error::Unsupported(format!(
                        "{choice:?} estimator cannot read the signal of {kind:?}"
                    )))
                }
            };
            EstimatorSpec::new(kind, k)
        };

        let (eta, tuning) = match config.eta {
            EtaChoice::Fixed(eta) => {
                if !(eta > 0.0 && eta.is_finite()) {
                    return Err(Error::InvalidInput(format!("learning rate must be positive, got {eta}")));
                }
                (eta, None)
            }
            EtaChoice::Auto => {
                // constants do not depend on η, so a placeholder rate is fine here
                let (a, b) = stability_constants(&config.potential, &build(1.0)?)?;
                let diam = config.potential.diameter_upper_bound(&geometry)?;
                if diam == 0.0 {
                    // a single arm: every rate plays identically
                    (1.0, None)
                } else {
                    let t = tune_eta(diam, a, b, inst.horizon())?;
                    (t.eta, Some(t))
                }
            }
        };
        let estimator = build(eta)?;

        let n = inst.horizon();
        let checkpoints = if config.checkpoints.is_empty() {
            default_checkpoints(n)
        } else {
            let c = &config.checkpoints;
            if c.windows(2).any(|w| w[0] >= w[1]) || c[0] == 0 || *c.last().unwrap() > n {
                return Err(Error::InvalidInput(format!(
                    "checkpoints must be strictly increasing within 1..={n}"
                )));
            }
            c.clone()
        };
        Ok(Self {
            config,
            estimator,
            eta,
            tuning,
            checkpoints,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn tuning(&self) -> Option<Tuning> {
        self.tuning
    }

    pub fn estimator(&self) -> &EstimatorSpec {
        &self.estimator
    }

    pub fn config(&self) -> &OsmdConfig {
        &self.config
    }

    pub fn checkpoints(&self) -> &[usize] {
        &self.checkpoints
    }

    pub fn run(&self, run_id: u64) -> Result<RegretTrace> {
        self.run_observed(run_id, |_| {})
    }

    /// Runs one repetition, calling `observe` after every round.
    pub fn run_observed(&self, run_id: u64, mut observe: impl FnMut(&RoundRecord<'_>)) -> Result<RegretTrace> {
        let inst = &self.config.instance;
        let geometry = inst.geometry();
        let potential = &self.config.potential;
        let seed = self.config.seed;
        let n = inst.horizon();
        let dim = inst.dim();

        let mut x = potential.minimizer(&geometry)?;
        let mut total = vec![0.0; dim];
        let mut played = 0.0;
        let mut snapshots: Vec<(usize, f64, Vec<f64>)> = Vec::with_capacity(self.checkpoints.len());
        let mut next_checkpoint = self.checkpoints.iter().peekable();

        for t in 1..=n {
            let step = || -> Result<Step> {
                let loss = inst.loss_for_round(seed, run_id, t)?;
                let action = match geometry {
                    Geometry::Simplex { .. } => {
                        let mut rng = round_stream(seed, run_id, Purpose::Actions, t as u64);
                        Action::Arm(sample_arm(&x, &mut rng))
                    }
                    Geometry::LpBall { .. } => Action::Point(x.clone()),
                };
                let obs = inst.signal(&action, &loss)?;
                let estimate = self.estimator.estimate(&x, &action, &obs)?;
                let next = if dim == 1 && matches!(geometry, Geometry::Simplex { .. }) {
                    x.clone()
                } else {
                    constrained_step(&MirrorStepRequest::new(potential, geometry, &x, &estimate, self.eta))?
                };
                Ok((action, loss, estimate, next))
            };
            let (action, loss, estimate, next) = step().map_err(|e| e.at_round(t))?;
            played += action.loss(&loss);
            for (s, l) in total.iter_mut().zip(&loss) {
                *s += l;
            }
            observe(&RoundRecord {
                t,
                x: &x,
                action: &action,
                loss: &loss,
                estimate: &estimate,
                next: &next,
            });
            x = next;
            if next_checkpoint.peek() == Some(&&t) {
                next_checkpoint.next();
                snapshots.push((t, played, total.clone()));
            }
        }

        // comparator: the best fixed action over the whole horizon
        let (best, _) = inst.best_fixed_action(&total);
        let checkpoints = snapshots
            .into_iter()
            .map(|(t, played, cum)| (t, played - best.loss(&cum)))
            .collect();
        Ok(RegretTrace {
            run_id,
            checkpoints,
            final_iterate: x,
            eta: self.eta,
        })
    }
}

/// Regret of the player that ignores all feedback: uniform play on the
/// simplex, the origin (the mean of any symmetric random play) on the ball.
pub fn uninformed_regret(instance: &ProblemInstance, seed: u64, run_id: u64) -> Result<f64> {
    let dim = instance.dim() as f64;
    let mut total = vec![0.0; instance.dim()];
    let mut played = 0.0;
    for t in 1..=instance.horizon() {
        let loss = instance.loss_for_round(seed, run_id, t)?;
        if !instance.is_ball() {
            played += loss.iter().sum::<f64>() / dim;
        }
        for (s, l) in total.iter_mut().zip(&loss) {
            *s += l;
        }
    }
    Ok(played - instance.best_fixed_action(&total).1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::LossSource;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bandit(rows: Vec<Vec<f64>>) -> Arc<ProblemInstance> {
        let k = rows[0].len();
        let n = rows.len();
        Arc::new(ProblemInstance::new(InstanceKind::KArmedBandit { k }, LossSource::FixedSequence(rows), n).unwrap())
    }

    fn config(potential: Potential, estimator: EstimatorChoice, instance: Arc<ProblemInstance>, eta: EtaChoice) -> OsmdConfig {
        OsmdConfig {
            potential,
            estimator,
            instance,
            eta,
            seed: 3,
            checkpoints: vec![],
        }
    }

    #[test]
    fn checkpoint_schedule() {
        assert_eq!(default_checkpoints(1), vec![1]);
        assert_eq!(default_checkpoints(8), vec![1, 2, 4, 8]);
        assert_eq!(default_checkpoints(10), vec![1, 2, 4, 8, 10]);
    }

    #[test]
    fn single_arm_has_zero_regret() {
        let inst = bandit(vec![vec![0.7]; 50]);
        let engine = Engine::new(config(Potential::TsallisHalf, EstimatorChoice::ImportanceWeighted, inst, EtaChoice::Auto)).unwrap();
        let trace = engine.run(0).unwrap();
        assert!(trace.checkpoints.iter().all(|&(_, r)| r == 0.0));
    }

    #[test]
    fn exp3_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for case in 0..50 {
            let k = rng.gen_range(2..=6);
            let n = 200;
            let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| rng.gen::<f64>()).collect()).collect();
            let eta = rng.gen_range(0.01..0.5);
            let engine = Engine::new(config(
                Potential::Negentropy,
                EstimatorChoice::ImportanceWeighted,
                bandit(rows),
                EtaChoice::Fixed(eta),
            ))
            .unwrap();
            let mut cum = vec![0.0; k];
            engine
                .run_observed(case, |r| {
                    // X_t ∝ exp(−η Σ_{s<t} ℓ̂_s)
                    let m = cum.iter().cloned().fold(f64::INFINITY, f64::min);
                    let w: Vec<f64> = cum.iter().map(|c| (-eta * (c - m)).exp()).collect();
                    let s: f64 = w.iter().sum();
                    for (xi, wi) in r.x.iter().zip(&w) {
                        assert!((xi - wi / s).abs() < 1e-9, "case {case} round {}", r.t);
                    }
                    for (c, e) in cum.iter_mut().zip(r.estimate) {
                        *c += e;
                    }
                })
                .unwrap();
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let inst = Arc::new(
            ProblemInstance::new(
                InstanceKind::KArmedBandit { k: 3 },
                LossSource::Bernoulli { means: vec![0.3, 0.5, 0.6] },
                500,
            )
            .unwrap(),
        );
        let engine = Engine::new(config(Potential::TsallisHalf, EstimatorChoice::Shifted, inst, EtaChoice::Auto)).unwrap();
        assert_eq!(engine.run(4).unwrap(), engine.run(4).unwrap());
        assert_ne!(engine.run(4).unwrap(), engine.run(5).unwrap());
    }

    #[test]
    fn sampling_scheme_has_mean_x() {
        let x = [0.2, 0.8];
        let dist = sampling_scheme(&x, &Geometry::Simplex { k: 2 });
        assert_eq!(dist, vec![(Action::Arm(0), 0.2), (Action::Arm(1), 0.8)]);
        let ball = sampling_scheme(&[0.1, -0.3], &Geometry::LpBall { p: 1.5, d: 2 });
        assert_eq!(ball, vec![(Action::Point(vec![0.1, -0.3]), 1.0)]);

        let x = [0.1, 0.25, 0.4, 0.25];
        let draws = 100_000;
        let mut counts = [0usize; 4];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..draws {
            counts[sample_arm(&x, &mut rng)] += 1;
        }
        for (c, p) in counts.iter().zip(&x) {
            let sigma = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((*c as f64 / draws as f64 - p).abs() < 4.0 * sigma);
        }
    }

    #[test]
    fn auto_eta_pairings() {
        let inst = bandit(vec![vec![0.5, 0.5]; 10]);
        let e = Engine::new(config(Potential::Negentropy, EstimatorChoice::ImportanceWeighted, inst.clone(), EtaChoice::Auto)).unwrap();
        assert!((e.eta() - (2.0 * 2f64.ln() / (10.0 * 2.0)).sqrt()).abs() < 1e-15);
        assert!(Engine::new(config(Potential::Negentropy, EstimatorChoice::Shifted, inst.clone(), EtaChoice::Auto)).is_err());
        assert!(Engine::new(config(Potential::TsallisHalf, EstimatorChoice::FullInformation, inst.clone(), EtaChoice::Auto)).is_err());
        assert!(Engine::new(config(Potential::clipped_lp(1.5, 2).unwrap(), EstimatorChoice::ImportanceWeighted, inst, EtaChoice::Fixed(0.1))).is_err());
    }

    #[test]
    fn ball_runs_with_point_mass_play() {
        let inst = Arc::new(ProblemInstance::new(InstanceKind::LpFullInfo { p: 1.5, d: 5 }, LossSource::Rademacher, 256).unwrap());
        let engine = Engine::new(config(
            Potential::clipped_lp(1.5, 5).unwrap(),
            EstimatorChoice::FullInformation,
            inst,
            EtaChoice::Auto,
        ))
        .unwrap();
        let trace = engine.run(0).unwrap();
        assert_eq!(trace.checkpoints.len(), 9);
        assert!(crate::potentials::lp_norm(&trace.final_iterate, 1.5) <= 1.0 + 1e-9);
    }

    #[test]
    fn eta_choice_serde() {
        let e: EtaChoice = serde_json::from_str("\"auto\"").unwrap();
        assert_eq!(e, EtaChoice::Auto);
        let e: EtaChoice = serde_json::from_str("0.25").unwrap();
        assert_eq!(e, EtaChoice::Fixed(0.25));
        assert!(serde_json::from_str::<EtaChoice>("\"fast\"").is_err());
        assert_eq!(serde_json::to_string(&EtaChoice::Auto).unwrap(), "\"auto\"");
    }
}

//! Modified Thompson sampling over finite atomic priors, with an exact
//! Bayesian-regret oracle by enumeration of every history.
//!
//! Signals are deterministic functions of the action and the loss, so the
//! posterior is a consistency filter: an atom keeps its weight while every
//! observation it would have produced matches the one seen.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    information_ratio, simplex_diameter, stability_constants, stability_exact, InformationRatio, StabilityContext,
};
use crate::engine::{sample_arm, sampling_scheme};
use crate::environments::{Action, ProblemInstance};
use crate::error::{Error, Result};
use crate::estimators::EstimatorSpec;
use crate::potentials::{Geometry, Potential};
use crate::seeding::{round_stream, run_stream, Purpose};

/// Size guards for exhaustive enumeration.
pub const MAX_ENUM_ARMS: usize = 3;
pub const MAX_ENUM_HORIZON: usize = 5;
pub const MAX_ENUM_ATOMS: usize = 16;

const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub weight: f64,
    pub losses: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomicPrior {
    pub horizon: usize,
    pub atoms: Vec<Atom>,
}

impl AtomicPrior {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Checks weights, horizon and that every loss lies in the instance's
    /// loss space.
    pub fn validate(&self, instance: &ProblemInstance) -> Result<()> {
        if self.atoms.is_empty() {
            return Err(Error::InvalidInput("prior has no atoms".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidInput("prior horizon must be positive".into()));
        }
        if let Some(a) = self.atoms.iter().find(|a| !(a.weight >= 0.0 && a.weight.is_finite())) {
            return Err(Error::InvalidInput(format!("atom weight {} is not a nonnegative number", a.weight)));
        }
        let total: f64 = self.atoms.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidInput(format!("atom weights sum to {total}, not 1")));
        }
        for (j, atom) in self.atoms.iter().enumerate() {
            if atom.losses.len() != self.horizon {
                return Err(Error::InvalidInput(format!(
                    "atom {j} has {} rounds, horizon is {}",
                    atom.losses.len(),
                    self.horizon
                )));
            }
            for (t, l) in atom.losses.iter().enumerate() {
                instance
                    .check_loss(l)
                    .map_err(|e| Error::InvalidInput(format!("atom {j}: {}", e.at_round(t + 1))))?;
            }
        }
        Ok(())
    }

    fn total_loss(&self, j: usize, dim: usize) -> Vec<f64> {
        let mut total = vec![0.0; dim];
        for l in &self.atoms[j].losses {
            for (s, v) in total.iter_mut().zip(l) {
                *s += v;
            }
        }
        total
    }
}

/// `A* = argmin_a Σ_t ⟨a, ℓ_t⟩`, lowest index on ties.
pub fn optimal_action(instance: &ProblemInstance, losses: &[Vec<f64>]) -> Action {
    let mut total = vec![0.0; instance.dim()];
    for l in losses {
        for (s, v) in total.iter_mut().zip(l) {
            *s += v;
        }
    }
    instance.best_fixed_action(&total).0
}

fn action_vector(a: &Action, dim: usize) -> Vec<f64> {
    match a {
        Action::Arm(i) => {
            let mut v = vec![0.0; dim];
            v[*i] = 1.0;
            v
        }
        Action::Point(p) => p.clone(),
    }
}

/// Per-atom weights given the history so far.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub weights: Vec<f64>,
}

impl Posterior {
    pub fn new(prior: &AtomicPrior) -> Self {
        Self {
            weights: prior.atoms.iter().map(|a| a.weight).collect(),
        }
    }

    /// Keeps the atoms whose round-`t` loss (1-indexed) would have produced
    /// `obs` under action `a`, then renormalises.
    pub fn update(
        &mut self,
        prior: &AtomicPrior,
        instance: &ProblemInstance,
        a: &Action,
        obs: &crate::environments::Observation,
        t: usize,
    ) -> Result<()> {
        let feedback = instance.feedback();
        let mut total = 0.0;
        for (w, atom) in self.weights.iter_mut().zip(&prior.atoms) {
            if *w > 0.0 {
                let loss = atom.losses.get(t - 1).ok_or(Error::Exhausted {
                    round: t,
                    len: atom.losses.len(),
                })?;
                if feedback.observe(a, loss)? != *obs {
                    *w = 0.0;
                }
            }
            total += *w;
        }
        if total <= 0.0 {
            return Err(Error::ImpossibleObservation { round: t });
        }
        self.weights.iter_mut().for_each(|w| *w /= total);
        Ok(())
    }

    /// `𝔼[A* | history]`.
    pub fn mean_optimal_action(&self, optimal: &[Vec<f64>]) -> Vec<f64> {
        let mut x = vec![0.0; optimal[0].len()];
        for (w, a) in self.weights.iter().zip(optimal) {
            if *w > 0.0 {
                for (xi, ai) in x.iter_mut().zip(a) {
                    *xi += w * ai;
                }
            }
        }
        x
    }
}

/// One sampled MTS run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MtsTrace {
    pub run_id: u64,
    /// The atom the losses were drawn from.
    pub atom: usize,
    /// `Σ_{s ≤ t} ⟨A_s − A*, ℓ_s⟩` for `t = 1..=n`.
    pub cumulative_regret: Vec<f64>,
    pub iterates: Vec<Vec<f64>>,
}

/// Samples an atom from the prior, then plays MTS against it.
pub fn mts_run(prior: &AtomicPrior, instance: &ProblemInstance, seed: u64, run_id: u64) -> Result<MtsTrace> {
    prior.validate(instance)?;
    let dim = instance.dim();
    let optimal: Vec<Vec<f64>> = (0..prior.atoms.len())
        .map(|j| action_vector(&instance.best_fixed_action(&prior.total_loss(j, dim)).0, dim))
        .collect();

    let mut rng = run_stream(seed, run_id, Purpose::Prior);
    let u = rng.gen::<f64>();
    let weights: Vec<f64> = prior.atoms.iter().map(|a| a.weight).collect();
    let atom = {
        let mut acc = 0.0;
        let mut pick = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        for (j, &w) in weights.iter().enumerate() {
            acc += w;
            if w > 0.0 && u < acc {
                pick = j;
                break;
            }
        }
        pick
    };
    let a_star = &optimal[atom];

    let geometry = instance.geometry();
    let mut posterior = Posterior::new(prior);
    let mut cumulative = 0.0;
    let mut trace = MtsTrace {
        run_id,
        atom,
        cumulative_regret: Vec::with_capacity(prior.horizon),
        iterates: Vec::with_capacity(prior.horizon + 1),
    };
    for t in 1..=prior.horizon {
        let x = posterior.mean_optimal_action(&optimal);
        let action = match geometry {
            Geometry::Simplex { .. } => {
                let mut rng = round_stream(seed, run_id, Purpose::Actions, t as u64);
                Action::Arm(sample_arm(&x, &mut rng))
            }
            Geometry::LpBall { .. } => Action::Point(x.clone()),
        };
        let loss = &prior.atoms[atom].losses[t - 1];
        let obs = instance.signal(&action, loss)?;
        let best: f64 = a_star.iter().zip(loss).map(|(a, l)| a * l).sum();
        cumulative += action.loss(loss) - best;
        trace.cumulative_regret.push(cumulative);
        trace.iterates.push(x);
        posterior.update(prior, instance, &action, &obs, t)?;
    }
    trace.iterates.push(posterior.mean_optimal_action(&optimal));
    Ok(trace)
}

/// Exact conditional quantities at one history node.
#[derive(Debug, Clone, Serialize)]
pub struct NodeReport {
    pub round: usize,
    pub probability: f64,
    pub x: Vec<f64>,
    /// `𝔼_{t−1}[Δ_t]`.
    pub expected_regret: f64,
    /// `𝔼_{t−1}[D_F(X_{t+1}, X_t)]`.
    pub expected_divergence: f64,
    pub information_ratio: InformationRatio,
    /// The per-round rate `√(2 𝔼_{t−1}[D_F] / ess-sup stab)`, diagnostic only.
    pub adaptive_eta: f64,
    /// `max_i |𝔼_{t−1}[X_{t+1}]_i − X_{t,i}|`.
    pub martingale_error: f64,
}

/// Analysis settings for the enumeration: the potential and estimator in
/// whose terms the bounds are stated, and the rates at which the mirror
/// descent bound is evaluated.
#[derive(Debug, Clone)]
pub struct BayesAnalysis {
    pub potential: Potential,
    pub estimator: EstimatorSpec,
    pub etas: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnumerationReport {
    pub bayes_regret: f64,
    /// `sup F − inf F` over the action hull.
    pub diameter: f64,
    /// `𝔼[Σ_t D_F(X_{t+1}, X_t)]`.
    pub expected_divergence_sum: f64,
    /// `𝔼[F(X_{n+1})] − F(X_1)`.
    pub expected_potential_gain: f64,
    pub max_martingale_error: f64,
    /// Stability constant used as the essential supremum.
    pub ess_sup_stability: f64,
    /// `(η, 𝔼[Σ_t stab_t(X_t; η)], diam/η + η/2 · 𝔼[Σ stab])`.
    pub mirror_bounds: Vec<(f64, f64, f64)>,
    /// `√(2 · diam · ess-sup stab · n)`.
    pub tuned_bound: f64,
    pub nodes: Vec<NodeReport>,
}

impl EnumerationReport {
    /// Largest information ratio over nodes with a defined value, and whether
    /// any node was degenerate.
    pub fn max_information_ratio(&self) -> (f64, bool) {
        let mut max = 0.0f64;
        let mut degenerate = false;
        for n in &self.nodes {
            match n.information_ratio {
                InformationRatio::Value(v) => max = max.max(v),
                InformationRatio::Degenerate { .. } => degenerate = true,
                InformationRatio::Undefined => {}
            }
        }
        (max, degenerate)
    }
}

fn check_budget(prior: &AtomicPrior, instance: &ProblemInstance) -> Result<()> {
    let simplex = !instance.is_ball();
    let k = if simplex { instance.dim() } else { 1 };
    let required = (k as u128).saturating_pow(prior.horizon as u32).saturating_mul(prior.atoms.len() as u128);
    let limit = (MAX_ENUM_ARMS as u128).pow(MAX_ENUM_HORIZON as u32) * MAX_ENUM_ATOMS as u128;
    if k > MAX_ENUM_ARMS || prior.horizon > MAX_ENUM_HORIZON || prior.atoms.len() > MAX_ENUM_ATOMS || required > limit {
        return Err(Error::BudgetExceeded {
            required,
            limit,
            detail: format!(
                "k = {k}, n = {}, {} atoms; enumeration allows k ≤ {MAX_ENUM_ARMS}, n ≤ {MAX_ENUM_HORIZON}, ≤ {MAX_ENUM_ATOMS} atoms",
                prior.horizon,
                prior.atoms.len()
            ),
        });
    }
    Ok(())
}

struct Enumerator<'a> {
    prior: &'a AtomicPrior,
    instance: &'a ProblemInstance,
    analysis: Option<&'a BayesAnalysis>,
    optimal: Vec<Vec<f64>>,
    ess_sup: f64,
    bayes_regret: f64,
    divergence_sum: f64,
    final_potential: f64,
    stability_sums: Vec<f64>,
    max_martingale_error: f64,
    nodes: Vec<NodeReport>,
}

impl Enumerator<'_> {
    fn mean(&self, masses: &[f64]) -> Vec<f64> {
        let total: f64 = masses.iter().sum();
        let mut x = vec![0.0; self.instance.dim()];
        for (m, a) in masses.iter().zip(&self.optimal) {
            if *m > 0.0 {
                for (xi, ai) in x.iter_mut().zip(a) {
                    *xi += m / total * ai;
                }
            }
        }
        x
    }

    fn visit(&mut self, t: usize, masses: Vec<f64>) -> Result<()> {
        let prob: f64 = masses.iter().sum();
        if prob <= 0.0 {
            return Ok(());
        }
        let x = self.mean(&masses);
        if t > self.prior.horizon {
            if let Some(a) = self.analysis {
                self.final_potential += prob * a.potential.value(&x)?;
            }
            return Ok(());
        }
        let geometry = self.instance.geometry();
        let feedback = self.instance.feedback();
        let dim = self.instance.dim();
        let live: Vec<usize> = (0..masses.len()).filter(|&j| masses[j] > 0.0).collect();

        let mut expected_regret = 0.0;
        let mut expected_divergence = 0.0;
        let mut next_mean = vec![0.0; dim];
        let mut children = Vec::new();
        for (action, p) in sampling_scheme(&x, &geometry) {
            let av = action_vector(&action, dim);
            // group consistent atoms by the observation they produce
            let mut groups: Vec<(crate::environments::Observation, Vec<usize>)> = Vec::new();
            for &j in &live {
                let loss = &self.prior.atoms[j].losses[t - 1];
                let regret: f64 = av.iter().zip(&self.optimal[j]).zip(loss).map(|((a, s), l)| (a - s) * l).sum();
                expected_regret += masses[j] / prob * p * regret;
                let obs = feedback.observe(&action, loss)?;
                match groups.iter_mut().find(|(o, _)| *o == obs) {
                    Some((_, members)) => members.push(j),
                    None => groups.push((obs, vec![j])),
                }
            }
            for (_, members) in groups {
                let mut child = vec![0.0; masses.len()];
                for &j in &members {
                    child[j] = masses[j] * p;
                }
                let child_prob: f64 = child.iter().sum();
                let y = self.mean(&child);
                for (n, yi) in next_mean.iter_mut().zip(&y) {
                    *n += child_prob / prob * yi;
                }
                if let Some(a) = self.analysis {
                    expected_divergence += child_prob / prob * a.potential.bregman_extended(&y, &x)?;
                }
                children.push(child);
            }
        }
        self.bayes_regret += prob * expected_regret;
        self.divergence_sum += prob * expected_divergence;
        let martingale_error = next_mean.iter().zip(&x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        self.max_martingale_error = self.max_martingale_error.max(martingale_error);

        if let Some(a) = self.analysis {
            for (sum, &eta) in self.stability_sums.iter_mut().zip(&a.etas) {
                for &j in &live {
                    let ctx = StabilityContext {
                        potential: &a.potential,
                        estimator: &a.estimator,
                        geometry,
                        x: &x,
                        loss: &self.prior.atoms[j].losses[t - 1],
                        eta,
                    };
                    *sum += masses[j] * stability_exact(&ctx)?;
                }
            }
            self.nodes.push(NodeReport {
                round: t,
                probability: prob,
                x: x.clone(),
                expected_regret,
                expected_divergence,
                information_ratio: information_ratio(expected_regret, expected_divergence),
                adaptive_eta: (2.0 * expected_divergence / self.ess_sup).sqrt(),
                martingale_error,
            });
        }
        for child in children {
            self.visit(t + 1, child)?;
        }
        Ok(())
    }
}

fn run_enumeration<'a>(
    prior: &'a AtomicPrior,
    instance: &'a ProblemInstance,
    analysis: Option<&'a BayesAnalysis>,
) -> Result<Enumerator<'a>> {
    prior.validate(instance)?;
    check_budget(prior, instance)?;
    let dim = instance.dim();
    let optimal = (0..prior.atoms.len())
        .map(|j| action_vector(&instance.best_fixed_action(&prior.total_loss(j, dim)).0, dim))
        .collect();
    let ess_sup = match analysis {
        Some(a) => stability_constants(&a.potential, &a.estimator)?.0,
        None => 1.0,
    };
    let mut e = Enumerator {
        prior,
        instance,
        analysis,
        optimal,
        ess_sup,
        bayes_regret: 0.0,
        divergence_sum: 0.0,
        final_potential: 0.0,
        stability_sums: vec![0.0; analysis.map_or(0, |a| a.etas.len())],
        max_martingale_error: 0.0,
        nodes: Vec::new(),
    };
    e.visit(1, prior.atoms.iter().map(|a| a.weight).collect())?;
    Ok(e)
}

/// `𝔅𝔯_n = 𝔼[Σ_t ⟨A_t − A*, ℓ_t⟩]` for MTS, computed exactly.
pub fn exhaustive_bayes_regret(prior: &AtomicPrior, instance: &ProblemInstance) -> Result<f64> {
    Ok(run_enumeration(prior, instance, None)?.bayes_regret)
}

/// Exact enumeration together with every Bayesian check quantity.
pub fn enumerate(prior: &AtomicPrior, instance: &ProblemInstance, analysis: &BayesAnalysis) -> Result<EnumerationReport> {
    let geometry = instance.geometry();
    let diameter = match geometry {
        Geometry::Simplex { k } => simplex_diameter(&analysis.potential, k)?,
        Geometry::LpBall { .. } => analysis.potential.diameter_upper_bound(&geometry)?,
    };
    let e = run_enumeration(prior, instance, Some(analysis))?;
    let x1 = e.mean(&prior.atoms.iter().map(|a| a.weight).collect::<Vec<_>>());
    let expected_potential_gain = e.final_potential - analysis.potential.value(&x1)?;
    let mirror_bounds = analysis
        .etas
        .iter()
        .zip(&e.stability_sums)
        .map(|(&eta, &s)| (eta, s, diameter / eta + eta / 2.0 * s))
        .collect();
    Ok(EnumerationReport {
        bayes_regret: e.bayes_regret,
        diameter,
        expected_divergence_sum: e.divergence_sum,
        expected_potential_gain,
        max_martingale_error: e.max_martingale_error,
        ess_sup_stability: e.ess_sup,
        mirror_bounds,
        tuned_bound: (2.0 * diameter * e.ess_sup * prior.horizon as f64).sqrt(),
        nodes: e.nodes,
    })
}

/// A random prior for tests and check suites: `atoms` sequences with
/// `{0, ½, 1}`-valued losses and random weights.
pub fn random_prior<R: Rng + ?Sized>(k: usize, n: usize, atoms: usize, rng: &mut R) -> AtomicPrior {
    let raw: Vec<f64> = (0..atoms).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut atoms: Vec<Atom> = raw
        .iter()
        .map(|w| Atom {
            weight: w / total,
            losses: (0..n)
                .map(|_| (0..k).map(|_| [0.0, 0.5, 1.0][rng.gen_range(0..3)]).collect())
                .collect(),
        })
        .collect();
    // absorb rounding so the weights sum to one within tolerance
    let s: f64 = atoms.iter().map(|a| a.weight).sum();
    atoms[0].weight += 1.0 - s;
    AtomicPrior { horizon: n, atoms }
}

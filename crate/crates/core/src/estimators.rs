//! Loss estimators `E(x, a, σ)`.

use std::sync::Arc;

use crate::environments::{Action, Feedback, Observation};
use crate::error::{Error, Result};
use crate::graph::GraphSpec;

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorKind {
    /// `ℓ_i 1{a = i} / x_i`.
    ImportanceWeighted,
    /// Importance weighting shifted by `c_i = ½ 1{x_i ≥ η²}`.
    ShiftedImportanceWeighted { eta: f64 },
    /// Neighbourhood importance weighting, with the complementary estimator
    /// on a loopless vertex of mass above ½.
    GraphHybrid(Arc<GraphSpec>),
    /// The observed loss vector itself.
    FullInformation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub k: usize,
}

impl EstimatorSpec {
    pub fn new(kind: EstimatorKind, k: usize) -> Result<Self> {
        match &kind {
            EstimatorKind::ShiftedImportanceWeighted { eta } if !(*eta > 0.0 && eta.is_finite()) => {
                return Err(Error::InvalidInput(format!("shift needs a positive learning rate, got {eta}")))
            }
            EstimatorKind::GraphHybrid(g) if g.k() != k => {
                return Err(Error::InvalidInput(format!("graph has {} vertices, expected {k}", g.k())))
            }
            _ => {}
        }
        if k == 0 {
            return Err(Error::InvalidInput("estimator dimension must be positive".into()));
        }
        Ok(Self { kind, k })
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            EstimatorKind::ImportanceWeighted => "importance_weighted",
            EstimatorKind::ShiftedImportanceWeighted { .. } => "shifted",
            EstimatorKind::GraphHybrid(_) => "graph_hybrid",
            EstimatorKind::FullInformation => "full_information",
        }
    }

    /// The signal function this estimator consumes.
    pub fn feedback(&self) -> Feedback {
        match &self.kind {
            EstimatorKind::ImportanceWeighted | EstimatorKind::ShiftedImportanceWeighted { .. } => {
                Feedback::Bandit { k: self.k }
            }
            EstimatorKind::GraphHybrid(g) => Feedback::Graph(g.clone()),
            EstimatorKind::FullInformation => Feedback::Full { d: self.k },
        }
    }

    /// Shift `c_i` applied by the shifted estimator (zero otherwise).
    pub fn shift(&self, x: &[f64]) -> Vec<f64> {
        match self.kind {
            EstimatorKind::ShiftedImportanceWeighted { eta } => {
                x.iter().map(|&xi| if xi >= eta * eta { 0.5 } else { 0.0 }).collect()
            }
            _ => vec![0.0; x.len()],
        }
    }

    /// The vertex using the complementary estimator at `x`, if any.
    pub fn complementary_vertex(&self, x: &[f64]) -> Option<usize> {
        match &self.kind {
            EstimatorKind::GraphHybrid(g) => (0..self.k).find(|&i| !g.has_self_loop(i) && x[i] > 0.5),
            _ => None,
        }
    }

    pub fn estimate(&self, x: &[f64], action: &Action, obs: &Observation) -> Result<Vec<f64>> {
        if x.len() != self.k {
            return Err(Error::InvalidInput(format!("x has dimension {}, expected {}", x.len(), self.k)));
        }
        let arm = || -> Result<usize> {
            match action {
                Action::Arm(a) if *a < self.k => Ok(*a),
                _ => Err(Error::SignalMismatch(format!("{} needs an arm in 0..{}", self.name(), self.k))),
            }
        };
        match (&self.kind, obs) {
            (EstimatorKind::ImportanceWeighted, Observation::Scalar(l)) => {
                let a = arm()?;
                let mut est = vec![0.0; self.k];
                est[a] = l / x[a];
                Ok(est)
            }
            (EstimatorKind::ShiftedImportanceWeighted { .. }, Observation::Scalar(l)) => {
                let a = arm()?;
                let mut est = self.shift(x);
                est[a] += (l - est[a]) / x[a];
                Ok(est)
            }
            (EstimatorKind::GraphHybrid(g), Observation::Partial(pairs)) => {
                let a = arm()?;
                let observed = g.observes(a);
                if pairs.len() != observed.len() || pairs.iter().zip(observed).any(|(&(j, _), &o)| j != o) {
                    return Err(Error::SignalMismatch(format!(
                        "observation does not list the vertices revealed by arm {a}"
                    )));
                }
                let mut est = vec![0.0; self.k];
                for &(j, l) in pairs {
                    let denom: f64 = g.revealers(j).iter().map(|&b| x[b]).sum();
                    est[j] = l / denom;
                }
                if let Some(i) = self.complementary_vertex(x) {
                    est[i] = if a == i {
                        1.0
                    } else {
                        // strong observability: every other arm reveals i
                        let l = pairs.iter().find(|p| p.0 == i).map(|p| p.1).ok_or_else(|| {
                            Error::SignalMismatch(format!("arm {a} does not reveal loopless vertex {i}"))
                        })?;
                        // mass off i summed directly: 1 − x_i cancels when x_i ≈ 1
                        let rest: f64 = x.iter().enumerate().filter(|&(b, _)| b != i).map(|(_, v)| v).sum();
                        (l - 1.0) / rest + 1.0
                    };
                }
                Ok(est)
            }
            (EstimatorKind::FullInformation, Observation::Full(l)) if l.len() == self.k => Ok(l.clone()),
            _ => Err(Error::SignalMismatch(format!(
                "{} cannot use observation {obs:?}",
                self.name()
            ))),
        }
    }

    /// `max_i |Σ_a x_a E(x, a, Φ(a, ℓ))_i − ℓ_i|`, enumerating the arms (or
    /// the point mass at `x` for full information).
    pub fn check_unbiased(&self, x: &[f64], loss: &[f64]) -> Result<f64> {
        let feedback = self.feedback();
        let mut mean = vec![0.0; self.k];
        if let EstimatorKind::FullInformation = self.kind {
            let a = Action::Point(x.to_vec());
            mean = self.estimate(x, &a, &feedback.observe(&a, loss)?)?;
        } else {
            for (a, &w) in x.iter().enumerate() {
                let action = Action::Arm(a);
                let est = self.estimate(x, &action, &feedback.observe(&action, loss)?)?;
                for (m, e) in mean.iter_mut().zip(est) {
                    *m += w * e;
                }
            }
        }
        Ok(mean.iter().zip(loss).fold(0.0, |m, (e, l)| m.max((e - l).abs())))
    }
}

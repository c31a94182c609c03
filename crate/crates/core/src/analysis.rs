//! Stability measurements, their chord upper bounds, learning-rate tuning and
//! the information ratio.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::environments::{Action, Observation};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorKind, EstimatorSpec};
use crate::mirror::{constrained_step, unconstrained_step, MirrorStepRequest};
use crate::potentials::{Geometry, Potential};

/// Points sampled along a chord before local refinement.
pub const CHORD_SAMPLES: usize = 1000;

/// One stability evaluation: potential, estimator, iterate, true loss and
/// learning rate.
#[derive(Debug, Clone, Copy)]
pub struct StabilityContext<'a> {
    pub potential: &'a Potential,
    pub estimator: &'a EstimatorSpec,
    pub geometry: Geometry,
    pub x: &'a [f64],
    pub loss: &'a [f64],
    pub eta: f64,
}

/// Which chord the Hessian supremum runs over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChordRoute {
    /// `[x, f_t(x, A)]`, always available.
    Constrained,
    /// `[x, g_tc(x, A)]` with the estimate shifted by `c·1`; simplex only
    /// when `c ≠ 0`.
    Unconstrained { shift: f64 },
}

/// An action in the support of `P_x`, its probability, and the estimate it
/// induces.
struct Branch {
    weight: f64,
    estimate: Vec<f64>,
}

impl StabilityContext<'_> {
    fn branches(&self) -> Result<Vec<Branch>> {
        if self.x.len() != self.geometry.dim() || self.loss.len() != self.geometry.dim() {
            return Err(Error::InvalidInput("stability context has mismatched dimensions".into()));
        }
        let feedback = self.estimator.feedback();
        match self.geometry {
            Geometry::LpBall { .. } => {
                let a = Action::Point(self.x.to_vec());
                let estimate = self.estimator.estimate(self.x, &a, &feedback.observe(&a, self.loss)?)?;
                Ok(vec![Branch { weight: 1.0, estimate }])
            }
            Geometry::Simplex { .. } => {
                let mut out = Vec::new();
                for (i, &w) in self.x.iter().enumerate() {
                    if w > 0.0 {
                        let a = Action::Arm(i);
                        let obs: Observation = feedback.observe(&a, self.loss)?;
                        out.push(Branch {
                            weight: w,
                            estimate: self.estimator.estimate(self.x, &a, &obs)?,
                        });
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Support of a simplex point, or every coordinate on the ball.
fn support(geometry: &Geometry, x: &[f64]) -> Vec<usize> {
    match geometry {
        Geometry::Simplex { .. } => (0..x.len()).filter(|&i| x[i] > 0.0).collect(),
        Geometry::LpBall { .. } => (0..x.len()).collect(),
    }
}

fn restrict(v: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| v[i]).collect()
}

fn embed(v: &[f64], idx: &[usize], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (&i, &vi) in idx.iter().zip(v) {
        out[i] = vi;
    }
    out
}

/// Constrained mirror step that also accepts simplex points on a face: the
/// entropy-type potentials keep zero coordinates at zero, so the step is
/// taken on the support.
pub fn face_step(potential: &Potential, geometry: Geometry, x: &[f64], estimate: &[f64], eta: f64) -> Result<Vec<f64>> {
    let Geometry::Simplex { k } = geometry else {
        return constrained_step(&MirrorStepRequest::new(potential, geometry, x, estimate, eta));
    };
    let idx = support(&geometry, x);
    if idx.len() == k {
        return constrained_step(&MirrorStepRequest::new(potential, geometry, x, estimate, eta));
    }
    if idx.len() == 1 {
        return Ok(x.to_vec());
    }
    let xs = restrict(x, &idx);
    let es = restrict(estimate, &idx);
    let fs = constrained_step(&MirrorStepRequest::new(
        potential,
        Geometry::Simplex { k: idx.len() },
        &xs,
        &es,
        eta,
    ))?;
    Ok(embed(&fs, &idx, k))
}

/// `(2/η) 𝔼_{A∼P_x}[⟨x − f, E⟩ − D_F(f, x)/η]` by exact enumeration.
pub fn stability_exact(ctx: &StabilityContext<'_>) -> Result<f64> {
    let idx = support(&ctx.geometry, ctx.x);
    let xs = restrict(ctx.x, &idx);
    let mut total = 0.0;
    for b in ctx.branches()? {
        let f = face_step(ctx.potential, ctx.geometry, ctx.x, &b.estimate, ctx.eta)?;
        let linear: f64 = ctx.x.iter().zip(&f).zip(&b.estimate).map(|((x, f), e)| (x - f) * e).sum();
        let divergence = ctx.potential.bregman_extended(&restrict(&f, &idx), &xs)?;
        total += b.weight * (linear - divergence / ctx.eta);
    }
    Ok(2.0 / ctx.eta * total)
}

/// `sup_{z ∈ [x, y]} ‖v‖²_{∇^{-2}F(z)}` by dense sampling plus a
/// golden-section refinement around the best sample.
pub fn chord_sup(potential: &Potential, v: &[f64], x: &[f64], y: &[f64]) -> f64 {
    let mut z = vec![0.0; x.len()];
    let mut eval = |s: f64| {
        for ((zi, &xi), &yi) in z.iter_mut().zip(x).zip(y) {
            *zi = xi + s * (yi - xi);
        }
        potential.dual_norm_sq(v, &z)
    };
    let mut best_s = 0.0;
    let mut best = f64::NEG_INFINITY;
    for j in 0..=CHORD_SAMPLES {
        let s = j as f64 / CHORD_SAMPLES as f64;
        let val = eval(s);
        if val > best {
            best = val;
            best_s = s;
        }
    }
    let step = 1.0 / CHORD_SAMPLES as f64;
    let (mut lo, mut hi) = ((best_s - step).max(0.0), (best_s + step).min(1.0));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (eval(a), eval(b));
    for _ in 0..60 {
        if fa > fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = eval(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = eval(b);
        }
    }
    best.max(fa).max(fb)
}

/// `𝔼_{A∼P_x}[sup_{z ∈ chord} ‖E + c·1‖²_{∇^{-2}F(z)}]`, or `None` when the
/// unconstrained point does not exist for some action in the support.
pub fn stability_chord_bound(ctx: &StabilityContext<'_>, route: ChordRoute) -> Result<Option<f64>> {
    if let (ChordRoute::Unconstrained { shift }, Geometry::LpBall { .. }) = (route, ctx.geometry) {
        if shift != 0.0 {
            return Err(Error::Unsupported("shifted chord bound needs the simplex".into()));
        }
    }
    let idx = support(&ctx.geometry, ctx.x);
    let xs = restrict(ctx.x, &idx);
    let mut total = 0.0;
    for b in ctx.branches()? {
        let (vector, end) = match route {
            ChordRoute::Constrained => {
                let f = face_step(ctx.potential, ctx.geometry, ctx.x, &b.estimate, ctx.eta)?;
                (restrict(&b.estimate, &idx), restrict(&f, &idx))
            }
            ChordRoute::Unconstrained { shift } => {
                let shifted: Vec<f64> = restrict(&b.estimate, &idx).iter().map(|e| e + shift).collect();
                let geometry = match ctx.geometry {
                    Geometry::Simplex { .. } => Geometry::Simplex { k: idx.len() },
                    g => g,
                };
                let req = MirrorStepRequest::new(ctx.potential, geometry, &xs, &shifted, ctx.eta);
                match unconstrained_step(&req)? {
                    Some(g) => (shifted, g),
                    None => return Ok(None),
                }
            }
        };
        total += b.weight * chord_sup(ctx.potential, &vector, &xs, &end);
    }
    Ok(Some(total))
}

/// Learning rate from the diameter and a stability bound `a + bη`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tuning {
    pub eta: f64,
    /// `√(2·a·diam·n) + b·diam/a`.
    pub implied_bound: f64,
}

/// `η = √(2·diam/(n·a))`.
pub fn tune_eta(diam: f64, a: f64, b: f64, n: usize) -> Result<Tuning> {
    if !(diam > 0.0 && a > 0.0 && b >= 0.0 && n > 0) || !(diam.is_finite() && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "tuning needs diam > 0, a > 0, b ≥ 0, n > 0 (got {diam}, {a}, {b}, {n})"
        )));
    }
    let n = n as f64;
    Ok(Tuning {
        eta: (2.0 * diam / (n * a)).sqrt(),
        implied_bound: (2.0 * a * diam * n).sqrt() + b * diam / a,
    })
}

/// Stability constants `(a, b)` with `stab ≤ a + bη` for the supported
/// pairings, keyed by dimension `k`.
pub fn stability_constants(potential: &Potential, estimator: &EstimatorSpec) -> Result<(f64, f64)> {
    let k = estimator.k as f64;
    match (potential, &estimator.kind) {
        (Potential::Negentropy, EstimatorKind::ImportanceWeighted) => Ok((k, 0.0)),
        (Potential::TsallisHalf, EstimatorKind::ImportanceWeighted) => Ok((2.0 * k.sqrt(), 0.0)),
        (Potential::TsallisHalf, EstimatorKind::ShiftedImportanceWeighted { .. }) => Ok((k.sqrt() / 2.0, 12.0 * k)),
        (Potential::TsallisAlpha { .. }, EstimatorKind::GraphHybrid(g)) => {
            let alpha = g.independence_number().value as f64;
            Ok((graph_stability_bound(alpha, k), 0.0))
        }
        (Potential::ClippedLp(_), EstimatorKind::FullInformation) => Ok((2.0, 0.0)),
        _ => Err(Error::Unsupported(format!(
            "no stability constants for {} with the {} estimator",
            potential.name(),
            estimator.name()
        ))),
    }
}

/// `sup F − inf F` over the simplex: `h(1) + (k−1)h(0) − k·h(1/k)`.
pub fn simplex_diameter(potential: &Potential, k: usize) -> Result<f64> {
    if !potential.is_orthant() || k == 0 {
        return Err(Error::Unsupported(format!("{} has no simplex diameter", potential.name())));
    }
    let kf = k as f64;
    Ok(potential.h(1.0) + (kf - 1.0) * potential.h(0.0) - kf * potential.h(1.0 / kf))
}

/// `8α(log(4k/α) + log²k) + 9`.
pub fn graph_stability_bound(alpha: f64, k: f64) -> f64 {
    8.0 * alpha * ((4.0 * k / alpha).ln() + k.ln().powi(2)) + 9.0
}

/// `𝔼_{t−1}[Δ_t]² / 𝔼_{t−1}[D_F(X_{t+1}, X_t)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum InformationRatio {
    Value(f64),
    /// Zero expected regret and zero movement.
    Undefined,
    /// Positive expected regret while the iterate does not move.
    Degenerate { expected_regret: f64 },
}

pub fn information_ratio(expected_regret: f64, expected_divergence: f64) -> InformationRatio {
    const ZERO: f64 = 1e-15;
    if expected_divergence > ZERO {
        InformationRatio::Value(expected_regret * expected_regret / expected_divergence)
    } else if expected_regret.abs() <= 1e-12 {
        InformationRatio::Undefined
    } else {
        InformationRatio::Degenerate { expected_regret }
    }
}

/// JSON-serialisable stability report.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub context_hash: String,
    pub potential: String,
    pub estimator: String,
    pub x: Vec<f64>,
    pub loss: Vec<f64>,
    pub eta: f64,
    pub exact: f64,
    pub chord_bound: Option<f64>,
    pub shifted_chord_bound: Option<f64>,
    pub shift: Option<f64>,
    pub reference_bound: Option<f64>,
    pub margin: Option<f64>,
}

impl StabilityReport {
    /// Evaluates the exact value, the constrained chord bound and (when `shift`
    /// is given) the shifted unconstrained bound. `reference_bound` is a closed
    /// form compared against `exact`.
    pub fn evaluate(ctx: &StabilityContext<'_>, shift: Option<f64>, reference_bound: Option<f64>) -> Result<Self> {
        let exact = stability_exact(ctx)?;
        let chord_bound = stability_chord_bound(ctx, ChordRoute::Constrained)?;
        let shifted_chord_bound = match shift {
            Some(c) => stability_chord_bound(ctx, ChordRoute::Unconstrained { shift: c })?,
            None => None,
        };
        let mut hasher = Sha256::new();
        hasher.update(ctx.potential.name().as_bytes());
        hasher.update(ctx.estimator.name().as_bytes());
        for v in ctx.x.iter().chain(ctx.loss).chain(std::iter::once(&ctx.eta)) {
            hasher.update(v.to_le_bytes());
        }
        let digest = hasher.finalize();
        Ok(Self {
            context_hash: digest.iter().map(|b| format!("{b:02x}")).collect(),
            potential: ctx.potential.name(),
            estimator: ctx.estimator.name().to_string(),
            x: ctx.x.to_vec(),
            loss: ctx.loss.to_vec(),
            eta: ctx.eta,
            exact,
            chord_bound,
            shifted_chord_bound,
            shift,
            reference_bound,
            margin: reference_bound.map(|b| b - exact),
        })
    }
}

//! Numerical check suites behind `osmd check`.
//!
//! Each suite returns named checks with the observed worst case and the
//! threshold it is compared against, so failures carry their margin.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{graph_stability_bound, stability_exact, stability_chord_bound, ChordRoute, StabilityContext};
use crate::engine::{uninformed_regret, Engine, EstimatorChoice, EtaChoice, OsmdConfig};
use crate::environments::{InstanceKind, LossSource, ProblemInstance};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorKind, EstimatorSpec};
use crate::graph::GraphSpec;
use crate::mts::{enumerate, exhaustive_bayes_regret, mts_run, random_prior, AtomicPrior, BayesAnalysis};
use crate::potentials::{conjugate_exponent, lp_norm, Geometry, Potential};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Unbiased,
    Exp3,
    Lemma4,
    Graph,
    Lp,
    Bayes,
}

impl Suite {
    pub const ALL: [Suite; 6] = [Suite::Unbiased, Suite::Exp3, Suite::Lemma4, Suite::Graph, Suite::Lp, Suite::Bayes];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Unbiased => "unbiased",
            Suite::Exp3 => "exp3",
            Suite::Lemma4 => "lemma4",
            Suite::Graph => "graph",
            Suite::Lp => "lp",
            Suite::Bayes => "bayes",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst observed value.
    pub observed: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `observed ≤ threshold`.
    fn at_most(name: impl Into<String>, observed: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: observed <= threshold,
            observed,
            threshold,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
    pub elapsed_secs: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let checks = match suite {
        Suite::Unbiased => unbiased(seed)?,
        Suite::Exp3 => exp3(seed)?,
        Suite::Lemma4 => shifted_stability(seed)?,
        Suite::Graph => graph(seed)?,
        Suite::Lp => lp(seed)?,
        Suite::Bayes => bayes(seed)?,
    };
    Ok(SuiteReport {
        suite,
        checks,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

/// A simplex point with log-uniform spread, occasionally with one heavy
/// coordinate so complementary and clipped regimes are exercised.
fn random_simplex<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let spread = rng.gen_range(0.0..12.0);
    let mut raw: Vec<f64> = (0..k).map(|_| (spread * rng.gen::<f64>()).exp()).collect();
    if rng.gen_bool(0.3) {
        let i = rng.gen_range(0..k);
        raw[i] *= k as f64 * rng.gen_range(1.0..50.0);
    }
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

fn unit_losses<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.gen::<f64>()).collect()
}

/// A point of the ℓ_r unit ball with random direction and radius.
fn ball_point<R: Rng + ?Sized>(rng: &mut R, d: usize, r: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n = lp_norm(&raw, r);
    let radius = if rng.gen_bool(0.2) { 1.0 } else { rng.gen::<f64>() };
    raw.iter().map(|v| v / n * radius).collect()
}

const CONTEXTS: usize = 1000;

fn unbiased(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = ["importance_weighted", "shifted", "graph_hybrid", "full_information"];
    let mut worst = [0.0f64; 4];
    let mut complementary_hits = 0usize;
    for _ in 0..CONTEXTS {
        let k = rng.gen_range(2..=10);
        let x = random_simplex(&mut rng, k);
        let loss = unit_losses(&mut rng, k);
        let graph = Arc::new(GraphSpec::random_strongly_observable(k, rng.gen_range(0.1..0.6), rng.gen_range(0.0..1.0), &mut rng)?);
        let specs = [
            EstimatorSpec::new(EstimatorKind::ImportanceWeighted, k)?,
            EstimatorSpec::new(EstimatorKind::ShiftedImportanceWeighted { eta: rng.gen_range(0.001..0.5) }, k)?,
            EstimatorSpec::new(EstimatorKind::GraphHybrid(graph), k)?,
            EstimatorSpec::new(EstimatorKind::FullInformation, k)?,
        ];
        if specs[2].complementary_vertex(&x).is_some() {
            complementary_hits += 1;
        }
        for (w, spec) in worst.iter_mut().zip(&specs) {
            *w = w.max(spec.check_unbiased(&x, &loss)?);
        }
    }
    Ok(names
        .iter()
        .zip(worst)
        .map(|(n, w)| {
            let detail = if *n == "graph_hybrid" {
                format!("{CONTEXTS} contexts, {complementary_hits} with a complementary vertex")
            } else {
                format!("{CONTEXTS} contexts")
            };
            Check::at_most(format!("max bias, {n}"), w, 1e-12, detail)
        })
        .collect())
}

fn exp3(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rounds = 1000;
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for case in 0..5u64 {
        let k = rng.gen_range(2..=8);
        let rows: Vec<Vec<f64>> = (0..rounds).map(|_| unit_losses(&mut rng, k)).collect();
        let eta = rng.gen_range(0.005..0.2);
        let instance = Arc::new(ProblemInstance::new(InstanceKind::KArmedBandit { k }, LossSource::FixedSequence(rows), rounds)?);
        let engine = Engine::new(OsmdConfig {
            potential: Potential::Negentropy,
            estimator: EstimatorChoice::ImportanceWeighted,
            instance,
            eta: EtaChoice::Fixed(eta),
            seed,
            checkpoints: Vec::new(),
        })?;
        let mut cum = vec![0.0; k];
        engine.run_observed(case, |r| {
            let m = cum.iter().cloned().fold(f64::INFINITY, f64::min);
            let w: Vec<f64> = cum.iter().map(|c| (-eta * (c - m)).exp()).collect();
            let s: f64 = w.iter().sum();
            for (xi, wi) in r.x.iter().zip(&w) {
                worst = worst.max((xi - wi / s).abs());
            }
            for (c, e) in cum.iter_mut().zip(r.estimate) {
                *c += e;
            }
        })?;
        detail.push(format!("k={k} eta={eta:.4}"));
    }
    Ok(vec![Check::at_most(
        "closed-form iterate error",
        worst,
        1e-9,
        format!("5 sequences x {rounds} rounds ({})", detail.join(", ")),
    )])
}

fn shifted_stability(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut plain_excess = f64::NEG_INFINITY;
    for (ki, &k) in [2usize, 5, 10].iter().enumerate() {
        for (ei, &eta) in [0.01, 0.1, 0.4].iter().enumerate() {
            let shifted = EstimatorSpec::new(EstimatorKind::ShiftedImportanceWeighted { eta }, k)?;
            let plain = EstimatorSpec::new(EstimatorKind::ImportanceWeighted, k)?;
            let bound = (k as f64).sqrt() / 2.0 + 12.0 * k as f64 * eta;
            let cell_seed = seed.wrapping_mul(31).wrapping_add((ki * 3 + ei) as u64);
            let cells: Vec<(f64, f64)> = (0..CONTEXTS as u64)
                .into_par_iter()
                .map(|i| -> Result<(f64, f64)> {
                    let mut rng = ChaCha8Rng::seed_from_u64(cell_seed);
                    rng.set_stream(i);
                    let x = random_simplex(&mut rng, k);
                    let loss = unit_losses(&mut rng, k);
                    let ctx = |potential, estimator| StabilityContext {
                        potential,
                        estimator,
                        geometry: Geometry::Simplex { k },
                        x: &x,
                        loss: &loss,
                        eta,
                    };
                    let s = stability_exact(&ctx(&Potential::TsallisHalf, &shifted))?;
                    let p = stability_exact(&ctx(&Potential::Negentropy, &plain))?;
                    Ok((s, p))
                })
                .collect::<Result<_>>()?;
            let worst = cells.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
            plain_excess = plain_excess.max(cells.iter().map(|c| c.1 - k as f64).fold(f64::NEG_INFINITY, f64::max));
            checks.push(Check::at_most(
                format!("shifted stability, k={k} eta={eta}"),
                worst,
                bound,
                format!("{CONTEXTS} contexts"),
            ));
        }
    }
    checks.push(Check::at_most(
        "plain stability minus k",
        plain_excess,
        0.0,
        "negentropy with importance weighting, all cells",
    ));
    Ok(checks)
}

/// A graph where every vertex observes itself plus random extra edges.
fn self_looped_graph<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Result<GraphSpec> {
    let q = rng.gen_range(0.0..0.7);
    let mut edges: Vec<(usize, usize)> = (0..k).map(|i| (i, i)).collect();
    for i in 0..k {
        for j in 0..k {
            if i != j && rng.gen_bool(q) {
                edges.push((i, j));
            }
        }
    }
    GraphSpec::new(k, edges)
}

/// One good arm at 0.45, the rest at 0.55.
pub fn gap_means(k: usize) -> Vec<f64> {
    (0..k).map(|i| if i == 0 { 0.45 } else { 0.55 }).collect()
}

/// Mean final regret of `engine` and of the uniform player over `runs`.
fn mean_final_regret(engine: &Engine, runs: u64) -> Result<(f64, f64)> {
    let instance = engine.config().instance.clone();
    let seed = engine.config().seed;
    let pairs: Vec<(f64, f64)> = (0..runs)
        .into_par_iter()
        .map(|r| -> Result<(f64, f64)> {
            let trace = engine.run(r)?;
            Ok((trace.checkpoints.last().map_or(0.0, |c| c.1), uninformed_regret(&instance, seed, r)?))
        })
        .collect::<Result<_>>()?;
    let n = runs as f64;
    Ok((pairs.iter().map(|p| p.0).sum::<f64>() / n, pairs.iter().map(|p| p.1).sum::<f64>() / n))
}

fn graph(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let mut worst_ratio = 0.0f64;
    for _ in 0..CONTEXTS {
        let k = rng.gen_range(1..=10);
        let g = self_looped_graph(&mut rng, k)?;
        let mut p = random_simplex(&mut rng, k);
        // respect the floor min p ≥ 1e-6
        for v in p.iter_mut() {
            *v = v.max(1e-6);
        }
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= s);
        let lhs = g.lemma5_lhs(&p)?;
        let rhs = g.lemma5_rhs(&p)?;
        if !g.independence_number().exact {
            return Err(Error::InvalidInput("independence number not exact".into()));
        }
        worst_ratio = worst_ratio.max(lhs / rhs);
    }
    checks.push(Check::at_most(
        "independence sum lhs / rhs",
        worst_ratio,
        1.0,
        format!("{CONTEXTS} self-looped graphs, k <= 10"),
    ));

    let mut worst = f64::NEG_INFINITY;
    for _ in 0..200 {
        let k = rng.gen_range(3..=10);
        let g = Arc::new(GraphSpec::random_strongly_observable(k, rng.gen_range(0.1..0.6), rng.gen_range(0.0..1.0), &mut rng)?);
        let alpha = g.independence_number().value as f64;
        let potential = Potential::graph_tsallis(k)?;
        let spec = EstimatorSpec::new(EstimatorKind::GraphHybrid(g), k)?;
        let x = random_simplex(&mut rng, k);
        let loss = unit_losses(&mut rng, k);
        let eta = rng.gen_range(0.001..0.2);
        let s = stability_exact(&StabilityContext {
            potential: &potential,
            estimator: &spec,
            geometry: Geometry::Simplex { k },
            x: &x,
            loss: &loss,
            eta,
        })?;
        worst = worst.max(s / graph_stability_bound(alpha, k as f64));
    }
    checks.push(Check::at_most(
        "graph stability / bound",
        worst,
        1.0,
        "200 random strongly observable graphs",
    ));

    let k = 10;
    let n = 10_000;
    let mut grng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let g = Arc::new(GraphSpec::random_strongly_observable(k, 0.3, 0.5, &mut grng)?);
    let alpha = g.independence_number().value;
    let instance = Arc::new(ProblemInstance::new(
        InstanceKind::GraphBandit { graph: g },
        LossSource::Bernoulli { means: gap_means(k) },
        n,
    )?);
    let engine = Engine::new(OsmdConfig {
        potential: Potential::graph_tsallis(k)?,
        estimator: EstimatorChoice::GraphHybrid,
        instance,
        eta: EtaChoice::Auto,
        seed,
        checkpoints: Vec::new(),
    })?;
    let (mean, uniform) = mean_final_regret(&engine, 20)?;
    checks.push(Check::at_most(
        "graph bandit regret / uniform player",
        mean / uniform,
        0.5,
        format!("k={k}, independence number {alpha}, n={n}, 20 seeds: {mean:.2} vs {uniform:.2}"),
    ));
    Ok(checks)
}

fn lp(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let ps = [1.0, 1.01, 1.1, 1.5, 1.9, 2.0];
    let ds = [2usize, 10, 100];

    // h'' = min{|x|^{p−2}, d}, and the branches meet at the knot
    let mut curvature_err = 0.0f64;
    let mut knot_err = 0.0f64;
    for &p in &ps {
        for &d in &ds {
            let f = Potential::clipped_lp(p, d)?;
            for _ in 0..200 {
                let x = rng.gen_range(-1.0..1.0f64) * 10f64.powf(rng.gen_range(-4.0..0.0));
                let want = x.abs().powf(p - 2.0).min(d as f64);
                curvature_err = curvature_err.max((f.d2h(x) - want).abs() / want);
            }
            let Potential::ClippedLp(c) = f else { unreachable!() };
            let tau = c.knot();
            if tau > 0.0 && tau < 1.0 {
                let (lo, hi) = (tau * (1.0 - 1e-13), tau * (1.0 + 1e-13));
                let scale = |v: f64| v.abs().max(1.0);
                knot_err = knot_err
                    .max((f.h(lo) - f.h(hi)).abs() / scale(f.h(tau)))
                    .max((f.dh(lo) - f.dh(hi)).abs() / scale(f.dh(tau)))
                    .max((f.d2h(lo) - f.d2h(hi)).abs() / scale(f.d2h(tau)));
                // quadratic branch values at the knot
                let df = d as f64;
                knot_err = knot_err
                    .max((f.h(tau) - 0.5 * df * tau * tau).abs() / scale(f.h(tau)))
                    .max((f.dh(tau) - df * tau).abs() / scale(f.dh(tau)));
            }
        }
    }
    checks.push(Check::at_most("curvature clip identity (relative)", curvature_err, 1e-9, "p x d grid, 200 points each"));
    checks.push(Check::at_most("knot continuity of h, h', h''", knot_err, 1e-9, "p x d grid"));

    let mut worst_diam = f64::NEG_INFINITY;
    for &p in &ps {
        for &d in &ds {
            let f = Potential::clipped_lp(p, d)?;
            let geo = Geometry::LpBall { p, d };
            let bound = f.diameter_upper_bound(&geo)?;
            let f0 = f.value(&f.minimizer(&geo)?)?;
            let mut best = f64::NEG_INFINITY;
            let mut probe = |x: Vec<f64>| -> Result<()> {
                best = best.max(f.value(&x)? - f0);
                Ok(())
            };
            let mut vertex = vec![0.0; d];
            vertex[0] = 1.0;
            probe(vertex)?;
            probe(vec![(d as f64).powf(-1.0 / p); d])?;
            for _ in 0..500 {
                let s = rng.gen_range(1..=d);
                let mut x = vec![0.0; d];
                let head = ball_point(&mut rng, s, p);
                x[..s].copy_from_slice(&head);
                probe(x)?;
            }
            worst_diam = worst_diam.max(best - bound);
        }
    }
    checks.push(Check::at_most("sampled diameter minus bound", worst_diam, 0.0, "p x d grid, 502 points each"));

    let mut worst_chord = 0.0f64;
    for _ in 0..CONTEXTS {
        let d = rng.gen_range(2..=50);
        let p = rng.gen_range(1.01..2.0);
        let q = conjugate_exponent(p);
        let potential = Potential::clipped_lp(p, d)?;
        let spec = EstimatorSpec::new(EstimatorKind::FullInformation, d)?;
        let loss = ball_point(&mut rng, d, q);
        let x = ball_point(&mut rng, d, p);
        let x: Vec<f64> = x.iter().map(|v| v * 0.999).collect();
        let ctx = StabilityContext {
            potential: &potential,
            estimator: &spec,
            geometry: Geometry::LpBall { p, d },
            x: &x,
            loss: &loss,
            eta: rng.gen_range(0.01..1.0),
        };
        let bound = stability_chord_bound(&ctx, ChordRoute::Constrained)
            .map_err(|e| Error::InvalidInput(format!("p={p} d={d} eta={} x={x:?} loss={loss:?}: {e}", ctx.eta)))?
            .ok_or_else(|| Error::Unsupported("no chord bound on the ball".into()))?;
        worst_chord = worst_chord.max(bound);
    }
    checks.push(Check::at_most("ball stability bound", worst_chord, 2.0, format!("{CONTEXTS} random losses in the dual ball")));

    let (p, d, n) = (1.1, 50, 10_000);
    let instance = Arc::new(ProblemInstance::new(InstanceKind::LpFullInfo { p, d }, LossSource::Rademacher, n)?);
    let potential = Potential::clipped_lp(p, d)?;
    let diam = potential.diameter_upper_bound(&instance.geometry())?;
    let engine = Engine::new(OsmdConfig {
        potential,
        estimator: EstimatorChoice::FullInformation,
        instance,
        eta: EtaChoice::Auto,
        seed,
        checkpoints: Vec::new(),
    })?;
    let (mean, _) = mean_final_regret(&engine, 20)?;
    let bound = (2.0 * diam * 2.0 * n as f64).sqrt();
    checks.push(Check::at_most(
        "ball regret, Rademacher losses",
        mean,
        bound,
        format!("p={p}, d={d}, n={n}, 20 seeds, eta={:.5}", engine.eta()),
    ));
    Ok(checks)
}

fn bandit_instance(k: usize, n: usize) -> Result<ProblemInstance> {
    ProblemInstance::new(InstanceKind::KArmedBandit { k }, LossSource::FixedSequence(Vec::new()), n)
}

/// Sampled versus enumerated Bayesian regret for one prior.
fn monte_carlo(prior: &AtomicPrior, instance: &ProblemInstance, runs: u64, seed: u64) -> Result<(f64, f64, f64)> {
    let exact = exhaustive_bayes_regret(prior, instance)?;
    let samples: Vec<f64> = (0..runs)
        .into_par_iter()
        .map(|r| mts_run(prior, instance, seed, r).map(|t| t.cumulative_regret.last().copied().unwrap_or(0.0)))
        .collect::<Result<_>>()?;
    let n = runs as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((exact, mean, (var / n).sqrt()))
}

fn bayes(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let prior = random_prior(3, 4, 16, &mut rng);
    let inst = bandit_instance(3, 4)?;
    let (exact, mean, se) = monte_carlo(&prior, &inst, 1_000_000, seed)?;
    checks.push(Check::at_most(
        "enumerated vs sampled regret, in standard errors",
        if se > 0.0 { (mean - exact).abs() / se } else { (mean - exact).abs() },
        3.0,
        format!("k=3, n=4, 16 atoms, 10^6 runs: exact {exact:.6}, sampled {mean:.6} +- {se:.6}"),
    ));

    let etas = [0.1, 0.5, 1.0];
    let mut mirror_bounds = [f64::NEG_INFINITY; 3];
    let (mut telescope, mut potential_gain, mut ratio, mut tuned, mut martingale) =
        (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0f64);
    let mut degenerate = 0usize;
    let priors = 50;
    for _ in 0..priors {
        let k = rng.gen_range(2..=3);
        let n = rng.gen_range(1..=4);
        let atoms = rng.gen_range(1..=16);
        let prior = random_prior(k, n, atoms, &mut rng);
        let inst = bandit_instance(k, n)?;
        for potential in [Potential::Negentropy, Potential::TsallisHalf] {
            let r = enumerate(
                &prior,
                &inst,
                &BayesAnalysis {
                    potential,
                    estimator: EstimatorSpec::new(EstimatorKind::ImportanceWeighted, k)?,
                    etas: etas.to_vec(),
                },
            )?;
            for (slot, &(_, _, bound)) in mirror_bounds.iter_mut().zip(&r.mirror_bounds) {
                *slot = slot.max(r.bayes_regret - bound);
            }
            telescope = telescope.max(r.expected_divergence_sum - r.expected_potential_gain);
            potential_gain = potential_gain.max(r.expected_potential_gain - r.diameter);
            let (max_ratio, degen) = r.max_information_ratio();
            degenerate += usize::from(degen);
            ratio = ratio.max(max_ratio - 2.0 * r.ess_sup_stability);
            tuned = tuned.max(r.bayes_regret - r.tuned_bound);
            martingale = martingale.max(r.max_martingale_error);
        }
    }
    let tol = 1e-10;
    let detail = format!("{priors} random priors x {{negentropy, tsallis_half}}, k <= 3, n <= 4, <= 16 atoms");
    for (eta, excess) in etas.iter().zip(mirror_bounds) {
        checks.push(Check::at_most(format!("regret minus mirror bound, eta={eta}"), excess, tol, detail.clone()));
    }
    checks.push(Check::at_most("divergence sum minus potential gain", telescope, tol, detail.clone()));
    checks.push(Check::at_most("potential gain minus diameter", potential_gain, tol, detail.clone()));
    checks.push(Check::at_most("martingale error", martingale, tol, detail.clone()));
    checks.push(Check::at_most(
        "information ratio minus twice ess-sup stability",
        ratio,
        tol,
        format!("{detail}; {degenerate} degenerate"),
    ));
    checks.push(Check {
        passed: degenerate == 0,
        ..Check::at_most("degenerate information ratios", degenerate as f64, 0.0, "positive regret with a still iterate")
    });
    checks.push(Check::at_most("regret minus tuned bound", tuned, 0.0, detail));
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(Suite::parse(s.name()).unwrap(), s);
        }
        assert!(Suite::parse("nope").is_err());
    }

    #[test]
    fn fast_suites_pass() {
        for s in [Suite::Unbiased, Suite::Exp3] {
            let r = run_suite(s, 1).unwrap();
            assert!(r.passed(), "{:?}", r.checks);
        }
    }
}

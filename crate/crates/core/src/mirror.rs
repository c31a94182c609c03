//! The mirror step `argmin_{y ∈ 𝒳} η⟨y, ℓ̂⟩ + D_F(y, x)` and its
//! unconstrained counterpart over `int(dom F)`.
//!
//! On the simplex the minimiser satisfies `h'(y_i) = h'(x_i) − ηℓ̂_i + λ` for a
//! single normalisation multiplier `λ`, found by safeguarded Newton on
//! `log Σ y_i(λ) = 0`. On the ℓp-ball the unconstrained dual step is taken
//! first and, if it leaves the ball, the KKT multiplier of `‖y‖_p ≤ 1` is found
//! by a bracketed one-dimensional search.

use crate::error::{Error, Result};
use crate::potentials::{lp_norm, ClippedLp, Geometry, Potential};

/// Coordinates of simplex iterates never drop below this value.
pub const SIMPLEX_FLOOR: f64 = 1e-300;

const SIMPLEX_TOL: f64 = 1e-12;
const SIMPLEX_MAX_ITER: usize = 200;
const BALL_TOL: f64 = 1e-10;
const BALL_MAX_ITER: usize = 200;

/// One mirror-descent update.
#[derive(Debug, Clone, Copy)]
pub struct MirrorStepRequest<'a> {
    pub potential: &'a Potential,
    pub geometry: Geometry,
    /// Current iterate.
    pub x: &'a [f64],
    pub loss_estimate: &'a [f64],
    /// Learning rate.
    pub eta: f64,
}

impl<'a> MirrorStepRequest<'a> {
    pub fn new(
        potential: &'a Potential,
        geometry: Geometry,
        x: &'a [f64],
        loss_estimate: &'a [f64],
        eta: f64,
    ) -> Self {
        Self {
            potential,
            geometry,
            x,
            loss_estimate,
            eta,
        }
    }

    fn validate(&self) -> Result<()> {
        let dim = self.geometry.dim();
        if self.x.len() != dim || self.loss_estimate.len() != dim {
            return Err(Error::InvalidInput(format!(
                "mirror step: dimension {dim} but x has {} and loss estimate {} coordinates",
                self.x.len(),
                self.loss_estimate.len()
            )));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidInput(format!("learning rate must be positive, got {}", self.eta)));
        }
        if let Some(i) = self.loss_estimate.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("loss estimate coordinate {i} is not finite")));
        }
        match (self.potential, self.geometry) {
            (Potential::ClippedLp(_), Geometry::Simplex { .. }) => Err(Error::Unsupported(
                "clipped lp potential is not Legendre on the simplex".into(),
            )),
            (Potential::ClippedLp(c), Geometry::LpBall { p, d }) if c.p() != p || c.d() != d => {
                Err(Error::Unsupported(format!(
                    "clipped lp potential (p={}, d={}) on a ball with p={p}, d={d}",
                    c.p(),
                    c.d()
                )))
            }
            (Potential::ClippedLp(_), Geometry::LpBall { .. }) => {
                if lp_norm(self.x, self.ball_p()) > 1.0 + 1e-9 {
                    return Err(Error::Domain("iterate lies outside the ball".into()));
                }
                Ok(())
            }
            (_, Geometry::LpBall { .. }) => Err(Error::Unsupported(format!(
                "{} on the lp ball",
                self.potential.name()
            ))),
            (_, Geometry::Simplex { .. }) => {
                if let Some(i) = self.x.iter().position(|&v| !(v > 0.0)) {
                    return Err(Error::Domain(format!(
                        "simplex iterate must be interior, coordinate {i} is {}",
                        self.x[i]
                    )));
                }
                let s: f64 = self.x.iter().sum();
                if (s - 1.0).abs() > 1e-9 {
                    return Err(Error::Domain(format!("simplex iterate sums to {s}")));
                }
                Ok(())
            }
        }
    }

    fn ball_p(&self) -> f64 {
        match self.geometry {
            Geometry::LpBall { p, .. } => p,
            Geometry::Simplex { .. } => 1.0,
        }
    }

    /// Dual point `∇F(x) − ηℓ̂`.
    fn dual_target(&self) -> Vec<f64> {
        self.x
            .iter()
            .zip(self.loss_estimate)
            .map(|(&xi, &li)| self.potential.dh(xi) - self.eta * li)
            .collect()
    }

    /// `η⟨y, ℓ̂⟩ + D_F(y, x)`.
    pub fn objective(&self, y: &[f64]) -> Result<f64> {
        let linear: f64 = y.iter().zip(self.loss_estimate).map(|(a, b)| a * b).sum();
        Ok(self.eta * linear + self.potential.bregman(y, self.x)?)
    }
}

/// `f_t(x, ·)`: the constrained mirror step on either geometry.
pub fn constrained_step(req: &MirrorStepRequest<'_>) -> Result<Vec<f64>> {
    req.validate()?;
    if req.loss_estimate.iter().all(|&v| v == 0.0) {
        return Ok(req.x.to_vec());
    }
    match req.geometry {
        Geometry::Simplex { .. } => simplex_step(req),
        Geometry::LpBall { .. } => ball_step_validated(req),
    }
}

/// `g_t(x, ·)`: the minimiser over `int(dom F)`, or `None` when
/// `∇F(x) − ηℓ̂` leaves the gradient range of `F`.
pub fn unconstrained_step(req: &MirrorStepRequest<'_>) -> Result<Option<Vec<f64>>> {
    req.validate()?;
    Ok(dual_inverse(req.potential, &req.dual_target()))
}

/// Coordinatewise `(∇F)^{-1}`.
pub(crate) fn dual_inverse(potential: &Potential, dual: &[f64]) -> Option<Vec<f64>> {
    dual.iter().map(|&y| potential.dh_inv(y)).collect()
}

/// The ℓp-ball step: dual step, then Bregman projection if it left the ball.
pub fn ball_step(req: &MirrorStepRequest<'_>) -> Result<Vec<f64>> {
    if !matches!(req.geometry, Geometry::LpBall { .. }) {
        return Err(Error::Unsupported("ball_step needs lp ball geometry".into()));
    }
    req.validate()?;
    if req.loss_estimate.iter().all(|&v| v == 0.0) {
        return Ok(req.x.to_vec());
    }
    ball_step_validated(req)
}

fn simplex_step(req: &MirrorStepRequest<'_>) -> Result<Vec<f64>> {
    let f = req.potential;
    let k = req.x.len();
    let theta = req.dual_target();
    let top = theta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // shift so the largest coordinate sits at 0; y_i(μ) = h'^{-1}(δ_i + μ)
    let delta: Vec<f64> = theta.iter().map(|t| t - top).collect();
    let eval = |mu: f64| -> (f64, f64, Vec<f64>) {
        let mut sum = 0.0;
        let mut slope = 0.0;
        let y: Vec<f64> = delta
            .iter()
            .map(|&d| {
                let yi = f.dh_inv(d + mu).unwrap_or(f64::INFINITY);
                sum += yi;
                if yi > 0.0 && yi.is_finite() {
                    slope += 1.0 / f.d2h(yi);
                }
                yi
            })
            .collect();
        (sum, slope, y)
    };

    // at μ = h'(1) the largest coordinate equals 1, at μ = h'(1/k) none exceeds 1/k
    let mut hi = f.dh(1.0);
    let mut lo = f.dh(1.0 / k as f64);
    let mut mu = lo;
    let mut residual = f64::INFINITY;
    for _ in 0..SIMPLEX_MAX_ITER {
        let (sum, slope, y) = eval(mu);
        residual = sum - 1.0;
        if residual.abs() <= SIMPLEX_TOL {
            return Ok(finish_simplex(y, sum));
        }
        if residual > 0.0 {
            hi = mu;
        } else {
            lo = mu;
        }
        // Newton on log S(μ)
        let step = sum.ln() * sum / slope;
        let candidate = mu - step;
        mu = if step.is_finite() && candidate > lo && candidate < hi {
            candidate
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()) {
            let (sum, _, y) = eval(mu);
            if (sum - 1.0).abs() <= 1e-10 {
                return Ok(finish_simplex(y, sum));
            }
        }
    }
    Err(Error::NotConverged {
        solver: "simplex normalisation multiplier",
        iterations: SIMPLEX_MAX_ITER,
        residual,
    })
}

fn finish_simplex(mut y: Vec<f64>, sum: f64) -> Vec<f64> {
    y.iter_mut().for_each(|v| *v = (*v / sum).max(SIMPLEX_FLOOR));
    y
}

fn ball_step_validated(req: &MirrorStepRequest<'_>) -> Result<Vec<f64>> {
    let Potential::ClippedLp(c) = req.potential else {
        return Err(Error::Unsupported("ball step needs the clipped lp potential".into()));
    };
    let p = c.p();
    let theta = req.dual_target();
    let free: Vec<f64> = theta.iter().map(|&t| req.potential.dh_inv(t).unwrap_or(0.0)).collect();
    if lp_norm(&free, p) <= 1.0 {
        return Ok(free);
    }
    project_onto_ball(c, p, &theta)
}

/// Solves `h'(y_i) + μ ∂_i(Σ|y|^p) = θ_i` with `μ ≥ 0` chosen so `‖y‖_p = 1`.
fn project_onto_ball(c: &ClippedLp, p: f64, theta: &[f64]) -> Result<Vec<f64>> {
    let pot = Potential::ClippedLp(*c);
    let solve = |mu: f64| -> Result<Vec<f64>> {
        theta
            .iter()
            .map(|&t| penalised_inverse(&pot, p, mu, t))
            .collect()
    };
    let excess = |y: &[f64]| lp_norm(y, p) - 1.0;

    let (mut lo, mut g_lo) = (0.0, excess(&solve(0.0)?));
    let mut hi = 1.0;
    let mut y_hi = solve(hi)?;
    let mut g_hi = excess(&y_hi);
    let mut doublings = 0;
    while g_hi > 0.0 {
        lo = hi;
        g_lo = g_hi;
        hi *= 2.0;
        y_hi = solve(hi)?;
        g_hi = excess(&y_hi);
        doublings += 1;
        if doublings > 2000 {
            return Err(Error::NotConverged {
                solver: "lp ball multiplier bracket",
                iterations: doublings,
                residual: g_hi,
            });
        }
    }
    if g_hi.abs() <= BALL_TOL {
        return Ok(rescale_into_ball(y_hi, p));
    }

    // Illinois regula falsi on g(μ) = ‖y(μ)‖_p − 1, decreasing in μ.
    let mut side = 0i8;
    let mut residual = g_hi;
    for _ in 0..BALL_MAX_ITER {
        let mut mu = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        if !(mu > lo && mu < hi) {
            mu = 0.5 * (lo + hi);
        }
        let y = solve(mu)?;
        let g = excess(&y);
        residual = g;
        if g.abs() <= BALL_TOL || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(rescale_into_ball(y, p));
        }
        if g > 0.0 {
            lo = mu;
            g_lo = g;
            if side == 1 {
                g_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = mu;
            g_hi = g;
            if side == -1 {
                g_lo *= 0.5;
            }
            side = -1;
        }
    }
    Err(Error::NotConverged {
        solver: "lp ball projection multiplier",
        iterations: BALL_MAX_ITER,
        residual,
    })
}

fn rescale_into_ball(mut y: Vec<f64>, p: f64) -> Vec<f64> {
    let n = lp_norm(&y, p);
    if n > 1.0 {
        y.iter_mut().for_each(|v| *v /= n);
    }
    y
}

/// Solves `h'(u) + μ p u^{p−1} = |θ|` for `u ≥ 0` (soft threshold at p = 1)
/// and restores the sign of `θ`.
fn penalised_inverse(pot: &Potential, p: f64, mu: f64, theta: f64) -> Result<f64> {
    let s = theta.abs();
    if s == 0.0 {
        return Ok(0.0);
    }
    let inv = |v: f64| pot.dh_inv(v).unwrap_or(0.0);
    if mu == 0.0 {
        return Ok(theta.signum() * inv(s));
    }
    if p == 1.0 {
        return Ok(theta.signum() * inv((s - mu).max(0.0)));
    }
    // φ is increasing in u; for p near 1 the root can sit far below any
    // bracket reachable by bisection on u, so iterate on v = ln u instead.
    let phi = |u: f64| pot.dh(u) + mu * p * u.powf(p - 1.0) - s;
    let dphi = |u: f64| pot.d2h(u) + mu * p * (p - 1.0) * u.powf(p - 2.0);
    let (mut lo, mut hi) = (f64::MIN_POSITIVE.ln(), inv(s).ln());
    if !(hi > lo) || phi(lo.exp()) >= 0.0 {
        return Ok(0.0);
    }
    let mut v = hi;
    let mut value = phi(v.exp());
    for _ in 0..400 {
        if value.abs() <= 4.0 * f64::EPSILON * s {
            return Ok(theta.signum() * v.exp());
        }
        if value > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let u = v.exp();
        let mut next = v - value / (u * dphi(u));
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - v).abs() <= 4.0 * f64::EPSILON * v.abs().max(1.0) || hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
            return Ok(theta.signum() * next.exp());
        }
        v = next;
        value = phi(v.exp());
    }
    Err(Error::NotConverged {
        solver: "penalised scalar inverse",
        iterations: 400,
        residual: value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn penalised_inverse_near_p_one() {
        let p = 1.034440085716603;
        let pot = Potential::clipped_lp(p, 37).unwrap();
        for &(mu, theta) in &[(0.5, 1e-3), (2.0, -0.05), (10.0, 0.3), (1e-6, 4.0), (0.9, 0.9)] {
            let u = penalised_inverse(&pot, p, mu, theta).unwrap();
            assert!(u == 0.0 || u.signum() == theta.signum());
            let a = u.abs();
            if a > 0.0 {
                let resid = pot.dh(a) + mu * p * a.powf(p - 1.0) - theta.abs();
                assert!(resid.abs() <= 1e-12 * theta.abs().max(1.0), "mu={mu} theta={theta}: {resid}");
            }
        }
    }

    fn simplex(k: usize) -> Geometry {
        Geometry::Simplex { k }
    }

    fn random_simplex(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
        let e: Vec<f64> = (0..k).map(|_| -rng.gen_range(1e-12f64..1.0).ln()).collect();
        let s: f64 = e.iter().sum();
        e.iter().map(|v| v / s).collect()
    }

    #[test]
    fn exp3_single_step() {
        let f = Potential::Negentropy;
        let x = [0.5, 0.5];
        let l = [1.0, 0.0];
        let y = constrained_step(&MirrorStepRequest::new(&f, simplex(2), &x, &l, 1.0)).unwrap();
        let e = (-1.0f64).exp();
        assert!((y[0] - e / (1.0 + e)).abs() < 1e-15);
        assert!((y[1] - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((y[0] - 0.26894).abs() < 1e-5);
    }

    #[test]
    fn zero_loss_is_a_fixed_point() {
        let x = [0.2, 0.3, 0.5];
        for f in [Potential::Negentropy, Potential::TsallisHalf, Potential::tsallis_alpha(0.6).unwrap()] {
            let y = constrained_step(&MirrorStepRequest::new(&f, simplex(3), &x, &[0.0; 3], 0.7)).unwrap();
            assert_eq!(y, x.to_vec());
        }
        let c = Potential::clipped_lp(1.5, 3).unwrap();
        let b = Geometry::LpBall { p: 1.5, d: 3 };
        let xb = [0.1, -0.2, 0.3];
        assert_eq!(ball_step(&MirrorStepRequest::new(&c, b, &xb, &[0.0; 3], 0.5)).unwrap(), xb.to_vec());
    }

    #[test]
    fn unconstrained_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let x = random_simplex(&mut rng, 4);
            let l: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let eta = rng.gen_range(0.01..2.0);
            let g = unconstrained_step(&MirrorStepRequest::new(&Potential::Negentropy, simplex(4), &x, &l, eta))
                .unwrap()
                .unwrap();
            for i in 0..4 {
                let expected = x[i] * (-eta * l[i]).exp();
                assert!((g[i] - expected).abs() <= 1e-14 * expected);
            }
        }
        let x = [0.25, 0.75];
        let g = unconstrained_step(&MirrorStepRequest::new(&Potential::TsallisHalf, simplex(2), &x, &[2.0, 0.0], 0.1))
            .unwrap()
            .unwrap();
        assert!((g[0] - 0.25 / 1.21).abs() < 1e-15);
        assert!((g[0] - 0.20661).abs() < 1e-5);
        // 1 + η ℓ̂ √x ≤ 0: the dual point leaves the gradient range
        let none = unconstrained_step(&MirrorStepRequest::new(&Potential::TsallisHalf, simplex(2), &x, &[-25.0, 0.0], 0.1))
            .unwrap();
        assert!(none.is_none());
    }

    #[test]
    fn tsallis_matches_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = Potential::TsallisHalf;
        for _ in 0..5 {
            let x = random_simplex(&mut rng, 3);
            let l: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..4.0)).collect();
            let eta = rng.gen_range(0.05..1.0);
            let req = MirrorStepRequest::new(&f, simplex(3), &x, &l, eta);
            let y = constrained_step(&req).unwrap();
            let ours = req.objective(&y).unwrap();
            let n = 1000;
            let mut best = f64::INFINITY;
            let mut arg = [0.0; 2];
            for i in 0..=n {
                for j in 0..=(n - i) {
                    let (a, b) = (i as f64 / n as f64, j as f64 / n as f64);
                    let v = req.objective(&[a, b, (1.0 - a - b).max(0.0)]).unwrap();
                    if v < best {
                        best = v;
                        arg = [a, b];
                    }
                }
            }
            // nested local grids around the incumbent
            let mut half = 2e-3;
            for _ in 0..3 {
                let center = arg;
                for i in -40..=40 {
                    for j in -40..=40 {
                        let a = center[0] + half * i as f64 / 40.0;
                        let b = center[1] + half * j as f64 / 40.0;
                        if a < 0.0 || b < 0.0 || a + b > 1.0 {
                            continue;
                        }
                        let v = req.objective(&[a, b, (1.0 - a - b).max(0.0)]).unwrap();
                        if v < best {
                            best = v;
                            arg = [a, b];
                        }
                    }
                }
                half /= 20.0;
            }
            assert!(ours <= best + 1e-12, "solver worse than grid: {ours} vs {best}");
            assert!(best - ours <= 1e-5, "grid gap {}", best - ours);
        }
    }

    #[test]
    fn constrained_beats_random_feasible_probes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for f in [Potential::Negentropy, Potential::TsallisHalf, Potential::graph_tsallis(6).unwrap()] {
            for _ in 0..20 {
                let x = random_simplex(&mut rng, 6);
                let l: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..5.0)).collect();
                let req = MirrorStepRequest::new(&f, simplex(6), &x, &l, rng.gen_range(0.01..1.0));
                let y = constrained_step(&req).unwrap();
                assert!((y.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                let ours = req.objective(&y).unwrap();
                for _ in 0..1000 {
                    let probe = random_simplex(&mut rng, 6);
                    assert!(ours <= req.objective(&probe).unwrap() + 1e-12);
                }
                // first-order optimality: ∇F(y) − ∇F(x) + ηℓ̂ is constant
                let lambdas: Vec<f64> = (0..6)
                    .map(|i| f.dh(y[i]) - f.dh(x[i]) + req.eta * l[i])
                    .collect();
                let spread = lambdas.iter().cloned().fold(f64::MIN, f64::max)
                    - lambdas.iter().cloned().fold(f64::MAX, f64::min);
                assert!(spread <= 1e-8 * (1.0 + lambdas[0].abs()), "spread {spread}");
            }
        }
    }

    #[test]
    fn shift_invariance_on_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for f in [Potential::Negentropy, Potential::TsallisHalf, Potential::tsallis_alpha(0.4).unwrap()] {
            for _ in 0..200 {
                let x = random_simplex(&mut rng, 5);
                let l: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..3.0)).collect();
                let c = rng.gen_range(-2.0..2.0);
                let shifted: Vec<f64> = l.iter().map(|v| v + c).collect();
                let eta = rng.gen_range(0.01..1.0);
                let a = constrained_step(&MirrorStepRequest::new(&f, simplex(5), &x, &l, eta)).unwrap();
                let b = constrained_step(&MirrorStepRequest::new(&f, simplex(5), &x, &shifted, eta)).unwrap();
                for i in 0..5 {
                    assert!((a[i] - b[i]).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn monotone_shrinkage_for_nonnegative_losses() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for f in [Potential::Negentropy, Potential::TsallisHalf, Potential::tsallis_alpha(0.7).unwrap()] {
            for _ in 0..500 {
                let x = random_simplex(&mut rng, 4);
                let l: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..10.0)).collect();
                let g = unconstrained_step(&MirrorStepRequest::new(&f, simplex(4), &x, &l, rng.gen_range(0.001..2.0)))
                    .unwrap()
                    .unwrap();
                for i in 0..4 {
                    assert!(g[i] <= x[i]);
                }
            }
        }
    }

    #[test]
    fn interior_unconstrained_point_is_the_constrained_step() {
        // pick ℓ̂ so that g lands on the simplex: for negentropy ℓ̂ = c·1
        let f = Potential::Negentropy;
        let x = [0.1, 0.2, 0.7];
        let req = MirrorStepRequest::new(&f, simplex(3), &x, &[0.0, 0.0, 0.0], 0.3);
        let g = unconstrained_step(&req).unwrap().unwrap();
        let y = constrained_step(&req).unwrap();
        for i in 0..3 {
            assert!((g[i] - y[i]).abs() <= 1e-9);
        }
        // ball: small step stays inside
        let c = Potential::clipped_lp(1.5, 3).unwrap();
        let geo = Geometry::LpBall { p: 1.5, d: 3 };
        let xb = [0.1, -0.1, 0.05];
        let req = MirrorStepRequest::new(&c, geo, &xb, &[0.01, 0.02, -0.01], 0.1);
        let g = unconstrained_step(&req).unwrap().unwrap();
        assert!(lp_norm(&g, 1.5) <= 1.0);
        let y = constrained_step(&req).unwrap();
        for i in 0..3 {
            assert!((g[i] - y[i]).abs() <= 1e-9);
        }
    }

    #[test]
    fn ball_interior_case_at_p2() {
        let c = Potential::clipped_lp(2.0, 5).unwrap();
        let geo = Geometry::LpBall { p: 2.0, d: 5 };
        let x = [0.0; 5];
        let y = ball_step(&MirrorStepRequest::new(&c, geo, &x, &[1.0, 0.0, 0.0, 0.0, 0.0], 0.1)).unwrap();
        assert!((y[0] + 0.1).abs() < 1e-15);
        assert!(y[1..].iter().all(|&v| v == 0.0));
    }

    fn ball_grid_check(p: f64, d_dim: usize, x: &[f64], l: &[f64], eta: f64) {
        let c = Potential::clipped_lp(p, d_dim).unwrap();
        let geo = Geometry::LpBall { p, d: d_dim };
        let req = MirrorStepRequest::new(&c, geo, x, l, eta);
        let free = unconstrained_step(&req).unwrap().unwrap();
        assert!(lp_norm(&free, p) > 1.0, "test case should hit the boundary");
        let y = ball_step(&req).unwrap();
        assert!(lp_norm(&y, p) <= 1.0 + 1e-12);
        assert!((lp_norm(&y, p) - 1.0).abs() <= 1e-9);
        let ours = req.objective(&y).unwrap();
        let n = 200;
        let mut best = f64::INFINITY;
        let mut arg = [0.0; 3];
        let visit = |q: [f64; 3], best: &mut f64, arg: &mut [f64; 3]| {
            if lp_norm(&q, p) <= 1.0 {
                let v = req.objective(&q).unwrap();
                if v < *best {
                    *best = v;
                    *arg = q;
                }
            }
        };
        for i in 0..=n {
            for j in 0..=n {
                for k in 0..=n {
                    let q = [
                        -1.0 + 2.0 * i as f64 / n as f64,
                        -1.0 + 2.0 * j as f64 / n as f64,
                        -1.0 + 2.0 * k as f64 / n as f64,
                    ];
                    visit(q, &mut best, &mut arg);
                }
            }
        }
        let mut half = 2e-2;
        for _ in 0..3 {
            let c = arg;
            for i in -20..=20 {
                for j in -20..=20 {
                    for k in -20..=20 {
                        let s = half / 20.0;
                        visit([c[0] + s * i as f64, c[1] + s * j as f64, c[2] + s * k as f64], &mut best, &mut arg);
                    }
                }
            }
            half /= 10.0;
        }
        assert!(ours <= best + 1e-9, "solver worse than grid: {ours} vs {best}");
        assert!(best - ours <= 1e-3, "grid gap {}", best - ours);
    }

    #[test]
    fn ball_boundary_matches_grid_search() {
        ball_grid_check(1.5, 3, &[0.2, -0.1, 0.3], &[-4.0, 2.0, -1.0], 1.0);
        ball_grid_check(1.5, 3, &[0.0, 0.0, 0.0], &[3.0, 3.0, -0.5], 0.8);
        ball_grid_check(1.0, 3, &[0.1, 0.1, 0.1], &[-2.0, -1.5, 0.3], 1.0);
        ball_grid_check(2.0, 3, &[0.0, 0.5, 0.0], &[-3.0, 0.0, 1.0], 1.0);
    }

    #[test]
    fn rejects_bad_requests() {
        let f = Potential::Negentropy;
        let bad_x = [0.0, 1.0];
        assert!(matches!(
            constrained_step(&MirrorStepRequest::new(&f, simplex(2), &bad_x, &[1.0, 0.0], 0.1)),
            Err(Error::Domain(_))
        ));
        let x = [0.5, 0.5];
        assert!(constrained_step(&MirrorStepRequest::new(&f, simplex(2), &x, &[1.0, 0.0], 0.0)).is_err());
        assert!(constrained_step(&MirrorStepRequest::new(&f, simplex(3), &x, &[1.0, 0.0], 0.1)).is_err());
        let c = Potential::clipped_lp(1.5, 2).unwrap();
        assert!(matches!(
            constrained_step(&MirrorStepRequest::new(&c, simplex(2), &x, &[1.0, 0.0], 0.1)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn extreme_importance_weights_stay_feasible() {
        for f in [Potential::Negentropy, Potential::TsallisHalf, Potential::tsallis_alpha(0.5).unwrap()] {
            let x = [1e-12, 1.0 - 2e-12, 1e-12];
            let l = [1e12, 0.0, 0.0];
            let y = constrained_step(&MirrorStepRequest::new(&f, simplex(3), &x, &l, 0.5)).unwrap();
            assert!((y.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(y.iter().all(|&v| v >= SIMPLEX_FLOOR));
        }
    }
}

//! Separable Legendre potentials `F(x) = Σ_i h(x_i)`.
//!
//! | kind | h(x) | h''(x) | domain |
//! |------|------|--------|--------|
//! | `Negentropy` | x log x − x | 1/x | x ≥ 0 |
//! | `TsallisHalf` | −2√x | x^{−3/2}/2 | x ≥ 0 |
//! | `TsallisAlpha(α)` | −x^α / (α(1−α)) | x^{α−2} | x ≥ 0 |
//! | `ClippedLp(p, d)` | piecewise, see [`ClippedLp`] | min{\|x\|^{p−2}, d} | ℝ |
//!
//! Entropy-type potentials take the value `0` at the boundary (`0 log 0 = 0`)
//! but have no gradient there, so only [`Potential::value`] and
//! [`Potential::bregman_extended`] accept boundary points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feasible set of an online learning problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    /// Probability simplex in ℝ^k.
    Simplex { k: usize },
    /// Unit ℓp-ball in ℝ^d.
    LpBall { p: f64, d: usize },
}

impl Geometry {
    pub fn dim(&self) -> usize {
        match *self {
            Geometry::Simplex { k } => k,
            Geometry::LpBall { d, .. } => d,
        }
    }

    /// Checks that `x` lies in the set, with slack `tol` on the defining
    /// constraint.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match *self {
            Geometry::Simplex { .. } => {
                x.iter().all(|&v| v >= 0.0) && (x.iter().sum::<f64>() - 1.0).abs() <= tol
            }
            Geometry::LpBall { p, .. } => lp_norm(x, p) <= 1.0 + tol,
        }
    }
}

/// ℓp norm for `p ∈ [1, ∞]`.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return x.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    if p == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * x.iter().map(|v| (v.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Hölder conjugate `q` with `1/p + 1/q = 1`.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `(e^y − 1)/y − 1`, accurate near zero.
fn expm1_ratio_minus_one(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        y / 2.0 + y * y / 6.0 + y * y * y / 24.0
    } else {
        (y.exp_m1() - y) / y
    }
}

/// `ln(1 + y)/y`, accurate near zero.
fn ln1p_ratio(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        1.0 - y / 2.0 + y * y / 3.0 - y * y * y / 4.0
    } else {
        y.ln_1p() / y
    }
}

/// The clipped ℓp potential on the ball: `h'' = min{|x|^{p−2}, d}`.
///
/// With threshold `τ = d^{1/(p−2)}` the closed form is `d x²/2` on `|x| ≤ τ`
/// and `(p−2)/(p−1) τ^{p−1}|x| + |x|^p/(p(p−1)) + (2−p)/(2p) τ^p` outside.
/// That expression cancels badly as `p → 1` and is undefined at `p = 1`, so the
/// outer branch is evaluated as the double integral of `h''` from the knot:
///
/// ```text
/// L = ln(|x|/τ),  ε = p − 1
/// h'(x) = sign(x) τ^ε (1 + (e^{εL} − 1)/ε)
/// h(x)  = dτ²/2 + τ^ε(|x| − τ) + (τ^ε/p)(|x|ψ + |x|L − |x| + τ),   ψ = (e^{εL} − 1)/ε − L
/// ```
///
/// which reduces to `|x| log(d|x|) + 1/(2d)` at `p = 1`. At `p = 2` (or when
/// `τ` underflows) the quadratic branch is empty and `h = |x|^p/(p(p−1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ClippedLpParams", into = "ClippedLpParams")]
pub struct ClippedLp {
    p: f64,
    d: usize,
    eps: f64,
    /// knot τ = d^{1/(p−2)}; zero when the quadratic branch is empty
    knot: f64,
    ln_knot: f64,
    /// h'(τ) = τ^{p−1} = dτ
    knot_slope: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClippedLpParams {
    p: f64,
    d: usize,
}

impl TryFrom<ClippedLpParams> for ClippedLp {
    type Error = Error;
    fn try_from(v: ClippedLpParams) -> Result<Self> {
        ClippedLp::new(v.p, v.d)
    }
}

impl From<ClippedLp> for ClippedLpParams {
    fn from(v: ClippedLp) -> Self {
        ClippedLpParams { p: v.p, d: v.d }
    }
}

impl ClippedLp {
    pub fn new(p: f64, d: usize) -> Result<Self> {
        if !(1.0..=2.0).contains(&p) {
            return Err(Error::InvalidInput(format!(
                "clipped lp potential needs p in [1, 2], got {p}"
            )));
        }
        if d == 0 {
            return Err(Error::InvalidInput("clipped lp potential needs d >= 1".into()));
        }
        let df = d as f64;
        let eps = p - 1.0;
        let (knot, ln_knot) = if p == 2.0 {
            (0.0, f64::NEG_INFINITY)
        } else {
            let ln_knot = df.ln() / (p - 2.0);
            (ln_knot.exp(), ln_knot)
        };
        let knot_slope = df * knot;
        Ok(Self {
            p,
            d,
            eps,
            knot,
            ln_knot,
            knot_slope,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// The knot `d^{1/(p−2)}` where the clip switches off.
    pub fn knot(&self) -> f64 {
        self.knot
    }

    fn pure_power(&self) -> bool {
        self.knot == 0.0
    }

    fn h(&self, x: f64) -> f64 {
        let u = x.abs();
        let (p, df) = (self.p, self.d as f64);
        if self.pure_power() {
            return u.powf(p) / (p * (p - 1.0));
        }
        if u <= self.knot {
            return 0.5 * df * u * u;
        }
        let t = self.knot;
        let l = u.ln() - self.ln_knot;
        let psi = l * expm1_ratio_minus_one(self.eps * l);
        0.5 * df * t * t + self.knot_slope * (u - t) + self.knot_slope / p * (u * psi + u * l - u + t)
    }

    fn dh(&self, x: f64) -> f64 {
        let u = x.abs();
        if self.pure_power() {
            return x.signum() * u.powf(self.p - 1.0) / (self.p - 1.0);
        }
        if u <= self.knot {
            return self.d as f64 * x;
        }
        let l = u.ln() - self.ln_knot;
        x.signum() * self.knot_slope * (1.0 + l * (1.0 + expm1_ratio_minus_one(self.eps * l)))
    }

    fn d2h(&self, x: f64) -> f64 {
        let u = x.abs();
        let df = self.d as f64;
        if !self.pure_power() && u <= self.knot {
            return df;
        }
        // u^{p-2} overflows to +inf at u = 0, which the min absorbs.
        u.powf(self.p - 2.0).min(df)
    }

    fn dh_inv(&self, y: f64) -> f64 {
        let s = y.abs();
        if self.pure_power() {
            return y.signum() * ((self.p - 1.0) * s).powf(1.0 / (self.p - 1.0));
        }
        if s <= self.knot_slope {
            return y / self.d as f64;
        }
        let r = s / self.knot_slope - 1.0;
        let l = r * ln1p_ratio(self.eps * r);
        y.signum() * (self.ln_knot + l).exp()
    }

    /// `min{2/(p−1), 2 log d + 1}`.
    pub fn diameter_bound(&self) -> f64 {
        let log_bound = 2.0 * (self.d as f64).ln() + 1.0;
        if self.p == 1.0 {
            log_bound
        } else {
            (2.0 / (self.p - 1.0)).min(log_bound)
        }
    }
}

/// A separable Legendre potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// Unnormalised negentropy `Σ x log x − x`.
    Negentropy,
    /// ½-Tsallis entropy `−2 Σ √x`.
    TsallisHalf,
    /// α-Tsallis entropy `−Σ x^α / (α(1−α))`.
    TsallisAlpha { alpha: f64 },
    /// Clipped ℓp potential for the ℓp-ball.
    ClippedLp(ClippedLp),
}

impl Potential {
    pub fn tsallis_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidInput(format!(
                "tsallis exponent must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(Potential::TsallisAlpha { alpha })
    }

    /// α-Tsallis with `α = 1 − 1/log k`, the exponent used for graph feedback.
    /// Needs `k ≥ 3` so that α is positive.
    pub fn graph_tsallis(k: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::InvalidInput(format!(
                "graph tsallis exponent 1 - 1/log(k) needs k >= 3, got {k}"
            )));
        }
        Self::tsallis_alpha(1.0 - 1.0 / (k as f64).ln())
    }

    pub fn clipped_lp(p: f64, d: usize) -> Result<Self> {
        ClippedLp::new(p, d).map(Potential::ClippedLp)
    }

    /// Validates parameters of a deserialized value.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Potential::TsallisAlpha { alpha } => Self::tsallis_alpha(alpha).map(|_| ()),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Potential::Negentropy => "negentropy".into(),
            Potential::TsallisHalf => "tsallis_half".into(),
            Potential::TsallisAlpha { alpha } => format!("tsallis_alpha({alpha})"),
            Potential::ClippedLp(c) => format!("clipped_lp(p={}, d={})", c.p, c.d),
        }
    }

    /// Whether the domain is the nonnegative orthant (as opposed to ℝ^d).
    pub fn is_orthant(&self) -> bool {
        !matches!(self, Potential::ClippedLp(_))
    }

    // Scalar kernels. Callers guarantee the argument is in the domain.

    pub(crate) fn h(&self, x: f64) -> f64 {
        match *self {
            Potential::Negentropy => {
                if x == 0.0 {
                    0.0
                } else {
                    x * x.ln() - x
                }
            }
            Potential::TsallisHalf => -2.0 * x.sqrt(),
            Potential::TsallisAlpha { alpha } => -x.powf(alpha) / (alpha * (1.0 - alpha)),
            Potential::ClippedLp(ref c) => c.h(x),
        }
    }

    pub(crate) fn dh(&self, x: f64) -> f64 {
        match *self {
            Potential::Negentropy => x.ln(),
            Potential::TsallisHalf => -1.0 / x.sqrt(),
            Potential::TsallisAlpha { alpha } => -x.powf(alpha - 1.0) / (1.0 - alpha),
            Potential::ClippedLp(ref c) => c.dh(x),
        }
    }

    pub(crate) fn d2h(&self, x: f64) -> f64 {
        match *self {
            Potential::Negentropy => 1.0 / x,
            Potential::TsallisHalf => 0.5 * x.powf(-1.5),
            Potential::TsallisAlpha { alpha } => x.powf(alpha - 2.0),
            Potential::ClippedLp(ref c) => c.d2h(x),
        }
    }

    /// Inverse of `h'`, or `None` when `y` is outside the range of `h'`.
    pub(crate) fn dh_inv(&self, y: f64) -> Option<f64> {
        if y.is_nan() {
            return None;
        }
        match *self {
            Potential::Negentropy => Some(y.exp()),
            Potential::TsallisHalf => (y < 0.0).then(|| 1.0 / (y * y)),
            Potential::TsallisAlpha { alpha } => {
                (y < 0.0).then(|| ((-y) * (1.0 - alpha)).powf(1.0 / (alpha - 1.0)))
            }
            Potential::ClippedLp(ref c) => y.is_finite().then(|| c.dh_inv(y)),
        }
    }

    /// Per-coordinate Bregman divergence `h(x) − h(y) − h'(y)(x − y)`,
    /// written to avoid cancellation when `x ≈ y`.
    pub(crate) fn bregman_scalar(&self, x: f64, y: f64) -> f64 {
        match *self {
            Potential::Negentropy => {
                if x == 0.0 {
                    return y;
                }
                let r = (x - y) / y;
                if r.abs() < 1e-3 {
                    y * r * r * (0.5 - r / 6.0 + r * r / 12.0 - r * r * r / 20.0)
                } else if r < -0.5 {
                    // x ≪ y: 1 + r may round to zero
                    x * (x.ln() - y.ln()) - x + y
                } else {
                    y * ((1.0 + r) * r.ln_1p() - r)
                }
            }
            Potential::TsallisHalf => {
                let diff = x.sqrt() - y.sqrt();
                diff * diff / y.sqrt()
            }
            Potential::TsallisAlpha { alpha } => {
                let r = (x - y) / y;
                let a = alpha;
                let omega = if r.abs() < 1e-3 {
                    let c2 = a * (a - 1.0) / 2.0;
                    let c3 = c2 * (a - 2.0) / 3.0;
                    let c4 = c3 * (a - 3.0) / 4.0;
                    let c5 = c4 * (a - 4.0) / 5.0;
                    -(r * r * (c2 + r * (c3 + r * (c4 + r * c5))))
                } else {
                    1.0 + a * r - (a * r.ln_1p()).exp()
                };
                y.powf(a) / (a * (1.0 - a)) * omega
            }
            Potential::ClippedLp(ref c) => {
                if x.abs() <= c.knot && y.abs() <= c.knot {
                    0.5 * c.d as f64 * (x - y) * (x - y)
                } else {
                    (c.h(x) - c.h(y) - c.dh(y) * (x - y)).max(0.0)
                }
            }
        }
    }

    fn check_point(&self, x: &[f64], interior: bool, what: &str) -> Result<()> {
        for (i, &v) in x.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Domain(format!("{what}: coordinate {i} is not finite ({v})")));
            }
            if self.is_orthant() && (v < 0.0 || (interior && v == 0.0)) {
                let need = if interior { "positive" } else { "nonnegative" };
                return Err(Error::Domain(format!(
                    "{what}: {} needs {need} coordinates, coordinate {i} is {v}",
                    self.name()
                )));
            }
        }
        Ok(())
    }

    /// `F(x)`.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x, false, "value")?;
        Ok(x.iter().map(|&v| self.h(v)).sum())
    }

    /// `∇F(x)`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x, true, "gradient")?;
        Ok(x.iter().map(|&v| self.dh(v)).collect())
    }

    /// Diagonal of `∇²F(x)`.
    pub fn hessian_diag(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x, true, "hessian")?;
        Ok(x.iter().map(|&v| self.d2h(v)).collect())
    }

    /// `D_F(x, y) = F(x) − F(y) − ⟨∇F(y), x − y⟩` for interior `y`.
    pub fn bregman(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::InvalidInput(format!(
                "bregman: length mismatch {} vs {}",
                x.len(),
                y.len()
            )));
        }
        self.check_point(x, false, "bregman x")?;
        self.check_point(y, true, "bregman y")?;
        Ok(x.iter().zip(y).map(|(&a, &b)| self.bregman_scalar(a, b)).sum())
    }

    /// Bregman divergence allowing boundary `y` for entropy-type potentials:
    /// a coordinate with `y_i = 0` contributes 0 if `x_i = 0` and `+∞`
    /// otherwise. Needed for posterior means that have collapsed onto a face.
    pub fn bregman_extended(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::InvalidInput("bregman: length mismatch".into()));
        }
        self.check_point(x, false, "bregman x")?;
        self.check_point(y, false, "bregman y")?;
        let mut total = 0.0;
        for (&a, &b) in x.iter().zip(y) {
            if self.is_orthant() && b == 0.0 {
                if a != 0.0 {
                    return Ok(f64::INFINITY);
                }
                continue;
            }
            total += self.bregman_scalar(a, b);
        }
        Ok(total)
    }

    /// Closed-form upper bound on `sup_{x,y ∈ 𝒳} F(x) − F(y)`.
    ///
    /// * negentropy on the simplex: `log k`
    /// * ½-Tsallis on the simplex: `2√k`
    /// * α-Tsallis on the simplex: `k^{1−α}/(α(1−α))`
    /// * clipped ℓp on the matching ball: `min{2/(p−1), 2 log d + 1}`
    pub fn diameter_upper_bound(&self, geometry: &Geometry) -> Result<f64> {
        match (*self, *geometry) {
            (Potential::Negentropy, Geometry::Simplex { k }) if k >= 1 => Ok((k as f64).ln()),
            (Potential::TsallisHalf, Geometry::Simplex { k }) if k >= 1 => Ok(2.0 * (k as f64).sqrt()),
            (Potential::TsallisAlpha { alpha }, Geometry::Simplex { k }) if k >= 1 => {
                Ok((k as f64).powf(1.0 - alpha) / (alpha * (1.0 - alpha)))
            }
            (Potential::ClippedLp(c), Geometry::LpBall { p, d }) if c.p == p && c.d == d => {
                Ok(c.diameter_bound())
            }
            (pot, geo) => Err(Error::Unsupported(format!(
                "no diameter bound for {} on {geo:?}",
                pot.name()
            ))),
        }
    }

    /// `argmin_{x ∈ 𝒳} F(x)`: the uniform distribution on the simplex, the
    /// origin on the ball.
    pub fn minimizer(&self, geometry: &Geometry) -> Result<Vec<f64>> {
        match (self.is_orthant(), *geometry) {
            (true, Geometry::Simplex { k }) if k >= 1 => Ok(vec![1.0 / k as f64; k]),
            (false, Geometry::LpBall { d, .. }) => Ok(vec![0.0; d]),
            _ => Err(Error::Unsupported(format!(
                "{} on {geometry:?}",
                self.name()
            ))),
        }
    }

    /// `Σ v_i² / h''(z_i)`, the squared local dual norm `‖v‖²_{∇^{-2}F(z)}`.
    pub fn dual_norm_sq(&self, v: &[f64], z: &[f64]) -> f64 {
        v.iter()
            .zip(z)
            .map(|(&vi, &zi)| if vi == 0.0 { 0.0 } else { vi * vi / self.d2h(zi) })
            .sum()
    }
}

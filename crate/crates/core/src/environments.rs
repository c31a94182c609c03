//! Problem instances: action sets, signal functions and oblivious loss
//! generators.

use std::path::Path;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::GraphSpec;
use crate::potentials::{conjugate_exponent, lp_norm, Geometry};
use crate::seeding::{round_stream, Purpose};

/// Slack allowed when checking that a loss lies in its loss space.
const LOSS_TOL: f64 = 1e-12;

/// A played action: a vertex of the simplex or a point of the ball.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Arm(usize),
    Point(Vec<f64>),
}

impl Action {
    /// `⟨a, ℓ⟩`.
    pub fn loss(&self, loss: &[f64]) -> f64 {
        match self {
            Action::Arm(i) => loss[*i],
            Action::Point(a) => a.iter().zip(loss).map(|(x, l)| x * l).sum(),
        }
    }

    pub fn arm(&self) -> Option<usize> {
        match self {
            Action::Arm(i) => Some(*i),
            Action::Point(_) => None,
        }
    }
}

/// Output of a signal function.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    /// Loss of the played arm.
    Scalar(f64),
    /// `(vertex, loss)` pairs for every vertex revealed by the played arm.
    Partial(Vec<(usize, f64)>),
    /// The whole loss vector.
    Full(Vec<f64>),
}

/// Signal function `Φ(a, ℓ)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Feedback {
    Bandit { k: usize },
    Graph(Arc<GraphSpec>),
    Full { d: usize },
}

impl Feedback {
    pub fn dim(&self) -> usize {
        match self {
            Feedback::Bandit { k } => *k,
            Feedback::Graph(g) => g.k(),
            Feedback::Full { d } => *d,
        }
    }

    pub fn observe(&self, action: &Action, loss: &[f64]) -> Result<Observation> {
        if loss.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "loss has dimension {}, expected {}",
                loss.len(),
                self.dim()
            )));
        }
        let arm = |a: &Action| -> Result<usize> {
            match a {
                Action::Arm(i) if *i < loss.len() => Ok(*i),
                Action::Arm(i) => Err(Error::InvalidInput(format!("arm {i} out of range"))),
                Action::Point(_) => Err(Error::InvalidInput("expected an arm, got a point".into())),
            }
        };
        Ok(match self {
            Feedback::Bandit { .. } => Observation::Scalar(loss[arm(action)?]),
            Feedback::Graph(g) => {
                Observation::Partial(g.observes(arm(action)?).iter().map(|&j| (j, loss[j])).collect())
            }
            Feedback::Full { .. } => Observation::Full(loss.to_vec()),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceKind {
    KArmedBandit { k: usize },
    GraphBandit { graph: Arc<GraphSpec> },
    LpFullInfo { p: f64, d: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum LossSource {
    /// Round `t` uses row `t − 1`.
    FixedSequence(Vec<Vec<f64>>),
    /// Independent Bernoulli coordinates.
    Bernoulli { means: Vec<f64> },
    /// Independent uniform signs scaled by `d^{−1/q}`, so `‖ℓ‖_q = 1`.
    Rademacher,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    kind: InstanceKind,
    source: LossSource,
    horizon: usize,
}

impl ProblemInstance {
    pub fn new(kind: InstanceKind, source: LossSource, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidInput("horizon must be positive".into()));
        }
        let inst = Self { kind, source, horizon };
        match &inst.kind {
            InstanceKind::KArmedBandit { k } if *k == 0 => {
                return Err(Error::InvalidInput("bandit needs at least one arm".into()))
            }
            InstanceKind::LpFullInfo { p, d } => {
                if !(*p >= 1.0 && *p <= 2.0) || *d == 0 {
                    return Err(Error::InvalidInput(format!("ball needs p in [1, 2] and d ≥ 1, got p = {p}, d = {d}")));
                }
            }
            InstanceKind::GraphBandit { graph } if !graph.is_strongly_observable() => {
                return Err(Error::InvalidInput("feedback graph is not strongly observable".into()))
            }
            _ => {}
        }
        match &inst.source {
            LossSource::FixedSequence(rows) => {
                for (t, row) in rows.iter().enumerate() {
                    inst.check_loss(row).map_err(|e| e.at_round(t + 1))?;
                }
            }
            LossSource::Bernoulli { means } => {
                if inst.is_ball() {
                    return Err(Error::Unsupported("Bernoulli losses on the ball".into()));
                }
                if means.len() != inst.dim() || means.iter().any(|m| !(0.0..=1.0).contains(m)) {
                    return Err(Error::InvalidInput(format!(
                        "Bernoulli needs {} means in [0, 1]",
                        inst.dim()
                    )));
                }
            }
            LossSource::Rademacher => {
                if !inst.is_ball() {
                    return Err(Error::Unsupported("Rademacher losses outside the ball".into()));
                }
            }
        }
        Ok(inst)
    }

    pub fn kind(&self) -> &InstanceKind {
        &self.kind
    }

    pub fn source(&self) -> &LossSource {
        &self.source
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            InstanceKind::KArmedBandit { k } => *k,
            InstanceKind::GraphBandit { graph } => graph.k(),
            InstanceKind::LpFullInfo { d, .. } => *d,
        }
    }

    pub fn is_ball(&self) -> bool {
        matches!(self.kind, InstanceKind::LpFullInfo { .. })
    }

    /// Convex hull of the action set.
    pub fn geometry(&self) -> Geometry {
        match &self.kind {
            InstanceKind::LpFullInfo { p, d } => Geometry::LpBall { p: *p, d: *d },
            _ => Geometry::Simplex { k: self.dim() },
        }
    }

    pub fn feedback(&self) -> Feedback {
        match &self.kind {
            InstanceKind::KArmedBandit { k } => Feedback::Bandit { k: *k },
            InstanceKind::GraphBandit { graph } => Feedback::Graph(graph.clone()),
            InstanceKind::LpFullInfo { d, .. } => Feedback::Full { d: *d },
        }
    }

    /// Checks `loss ∈ ℒ`: `[0, 1]^k` on the simplex, `B_q^d` on the ball.
    pub fn check_loss(&self, loss: &[f64]) -> Result<()> {
        if loss.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "loss has dimension {}, expected {}",
                loss.len(),
                self.dim()
            )));
        }
        match &self.kind {
            InstanceKind::LpFullInfo { p, .. } => {
                let q = conjugate_exponent(*p);
                let norm = lp_norm(loss, q);
                if !(norm <= 1.0 + LOSS_TOL) {
                    return Err(Error::Domain(format!("loss has q-norm {norm} > 1")));
                }
            }
            _ => {
                if let Some(v) = loss.iter().find(|v| !(-LOSS_TOL..=1.0 + LOSS_TOL).contains(*v)) {
                    return Err(Error::Domain(format!("loss coordinate {v} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }

    fn check_action(&self, action: &Action) -> Result<()> {
        match (action, &self.kind) {
            (Action::Point(a), InstanceKind::LpFullInfo { p, d }) => {
                if a.len() != *d || !(lp_norm(a, *p) <= 1.0 + 1e-9) {
                    return Err(Error::Domain("action outside the unit ball".into()));
                }
            }
            (Action::Arm(i), InstanceKind::KArmedBandit { .. } | InstanceKind::GraphBandit { .. }) => {
                if *i >= self.dim() {
                    return Err(Error::InvalidInput(format!("arm {i} out of range")));
                }
            }
            _ => return Err(Error::InvalidInput("action kind does not match the instance".into())),
        }
        Ok(())
    }

    /// `Φ(a, ℓ)`.
    pub fn signal(&self, action: &Action, loss: &[f64]) -> Result<Observation> {
        self.check_action(action)?;
        self.check_loss(loss)?;
        self.feedback().observe(action, loss)
    }

    /// Loss of round `t` (1-indexed).
    pub fn draw_loss<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> Result<Vec<f64>> {
        if t == 0 || t > self.horizon {
            return Err(Error::InvalidInput(format!("round {t} outside 1..={}", self.horizon)));
        }
        Ok(match &self.source {
            LossSource::FixedSequence(rows) => rows
                .get(t - 1)
                .cloned()
                .ok_or(Error::Exhausted { round: t, len: rows.len() })?,
            LossSource::Bernoulli { means } => {
                means.iter().map(|&m| if rng.gen_bool(m) { 1.0 } else { 0.0 }).collect()
            }
            LossSource::Rademacher => {
                let InstanceKind::LpFullInfo { p, d } = self.kind else {
                    unreachable!("validated at construction")
                };
                // d^{-1/q} = d^{1/p - 1}
                let scale = (d as f64).powf(1.0 / p - 1.0);
                (0..d).map(|_| if rng.gen::<bool>() { scale } else { -scale }).collect()
            }
        })
    }

    /// Loss of round `t` for run `run`, from its own reproducible stream.
    pub fn loss_for_round(&self, seed: u64, run: u64, t: usize) -> Result<Vec<f64>> {
        let mut rng = round_stream(seed, run, Purpose::Losses, t as u64);
        self.draw_loss(t, &mut rng)
    }

    /// The whole oblivious loss sequence of a run.
    pub fn losses_for_run(&self, seed: u64, run: u64) -> Result<Vec<Vec<f64>>> {
        (1..=self.horizon).map(|t| self.loss_for_round(seed, run, t)).collect()
    }

    /// Best fixed action against the cumulative loss `total`, and its value.
    pub fn best_fixed_action(&self, total: &[f64]) -> (Action, f64) {
        match &self.kind {
            InstanceKind::LpFullInfo { p, .. } => {
                let a = ball_comparator(total, *p);
                let value = Action::Point(a.clone()).loss(total);
                (Action::Point(a), value)
            }
            _ => {
                let (i, v) = total
                    .iter()
                    .enumerate()
                    .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
                (Action::Arm(i), v)
            }
        }
    }

    /// `Σ_t ⟨A_t, ℓ_t⟩ − min_a Σ_t ⟨a, ℓ_t⟩`.
    pub fn regret(&self, actions: &[Action], losses: &[Vec<f64>]) -> Result<f64> {
        if actions.len() != losses.len() {
            return Err(Error::InvalidInput(format!(
                "{} actions but {} losses",
                actions.len(),
                losses.len()
            )));
        }
        let mut total = vec![0.0; self.dim()];
        let mut played = 0.0;
        for (t, (a, l)) in actions.iter().zip(losses).enumerate() {
            self.check_action(a).map_err(|e| e.at_round(t + 1))?;
            self.check_loss(l).map_err(|e| e.at_round(t + 1))?;
            played += a.loss(l);
            for (s, v) in total.iter_mut().zip(l) {
                *s += v;
            }
        }
        Ok(played - self.best_fixed_action(&total).1)
    }
}

/// Minimiser of `⟨a, L⟩` over the unit `p`-ball: the dual point
/// `−sign(L)|L|^{q−1}/‖L‖_q^{q−1}`, with value `−‖L‖_q`.
pub fn ball_comparator(total: &[f64], p: f64) -> Vec<f64> {
    let q = conjugate_exponent(p);
    let norm = lp_norm(total, q);
    let mut a = vec![0.0; total.len()];
    if norm == 0.0 {
        return a;
    }
    if q.is_infinite() {
        let j = total
            .iter()
            .enumerate()
            .fold(0, |b, (i, v)| if v.abs() > total[b].abs() { i } else { b });
        a[j] = -total[j].signum();
        return a;
    }
    for (ai, &l) in a.iter_mut().zip(total) {
        *ai = -l.signum() * (l.abs() / norm).powf(q - 1.0);
    }
    a
}

/// Reads a loss matrix from CSV: one row per round, one column per
/// coordinate. A first row that does not parse as numbers is a header.
pub fn load_loss_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut rows = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if n == 0 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    what: format!("{} row {}", path.display(), n + 1),
                    detail: e.to_string(),
                })
            }
        }
    }
    if let Some(width) = rows.first().map(Vec::len) {
        if let Some(n) = rows.iter().position(|r| r.len() != width) {
            return Err(Error::Parse {
                what: path.display().to_string(),
                detail: format!("row {} has {} columns, expected {width}", n + 1, rows[n].len()),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn bandit(k: usize, rows: Vec<Vec<f64>>) -> ProblemInstance {
        let n = rows.len();
        ProblemInstance::new(InstanceKind::KArmedBandit { k }, LossSource::FixedSequence(rows), n).unwrap()
    }

    #[test]
    fn signal_examples() {
        let inst = bandit(2, vec![vec![0.1, 0.9]]);
        assert_eq!(inst.signal(&Action::Arm(1), &[0.1, 0.9]).unwrap(), Observation::Scalar(0.9));

        let g = GraphSpec::new(3, [(0, 0), (0, 1), (1, 1), (2, 2)]).unwrap();
        let inst = ProblemInstance::new(
            InstanceKind::GraphBandit { graph: Arc::new(g) },
            LossSource::Bernoulli { means: vec![0.5; 3] },
            10,
        )
        .unwrap();
        assert_eq!(
            inst.signal(&Action::Arm(0), &[0.3, 0.4, 0.5]).unwrap(),
            Observation::Partial(vec![(0, 0.3), (1, 0.4)])
        );

        let ball = ProblemInstance::new(InstanceKind::LpFullInfo { p: 1.5, d: 3 }, LossSource::Rademacher, 5).unwrap();
        let l = [0.2, -0.1, 0.3];
        assert_eq!(
            ball.signal(&Action::Point(vec![0.1, 0.0, 0.0]), &l).unwrap(),
            Observation::Full(l.to_vec())
        );
        assert!(ball.signal(&Action::Arm(0), &l).is_err());
        assert!(inst.signal(&Action::Arm(0), &[0.3, 1.4, 0.5]).is_err());
    }

    #[test]
    fn signal_reveals_expected_coordinates() {
        let g = Arc::new(GraphSpec::erdos_renyi(6, 0.4, true, 4).unwrap());
        let feedback = Feedback::Graph(g.clone());
        let loss = vec![0.5; 6];
        for a in 0..6 {
            match feedback.observe(&Action::Arm(a), &loss).unwrap() {
                Observation::Partial(pairs) => assert_eq!(pairs.len(), g.observes(a).len()),
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn draw_loss_examples() {
        let inst = bandit(2, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(inst.loss_for_round(0, 0, 2).unwrap(), vec![1.0, 0.0]);

        let short = ProblemInstance {
            horizon: 3,
            ..inst.clone()
        };
        assert!(matches!(short.loss_for_round(0, 0, 3), Err(Error::Exhausted { round: 3, len: 2 })));

        let ball = ProblemInstance::new(InstanceKind::LpFullInfo { p: 1.3, d: 4 }, LossSource::Rademacher, 100).unwrap();
        for t in 1..=100 {
            let l = ball.loss_for_round(1, 0, t).unwrap();
            assert!(lp_norm(&l, conjugate_exponent(1.3)) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn bernoulli_means_within_three_sigma() {
        let means = vec![0.45, 0.55, 0.55, 0.55, 0.55];
        let n = 100_000;
        let inst = ProblemInstance::new(
            InstanceKind::KArmedBandit { k: 5 },
            LossSource::Bernoulli { means: means.clone() },
            n,
        )
        .unwrap();
        let mut sum = [0.0; 5];
        for t in 1..=n {
            for (s, v) in sum.iter_mut().zip(inst.loss_for_round(3, 0, t).unwrap()) {
                *s += v;
            }
        }
        for (s, m) in sum.iter().zip(&means) {
            let sigma = (m * (1.0 - m) / n as f64).sqrt();
            assert!((s / n as f64 - m).abs() <= 3.0 * sigma);
        }
    }

    #[test]
    fn regret_examples() {
        let inst = bandit(2, vec![vec![0.0, 1.0]]);
        assert_eq!(inst.regret(&[Action::Arm(0)], &[vec![0.0, 1.0]]).unwrap(), 0.0);
        let inst = bandit(2, vec![vec![1.0, 0.0]; 2]);
        let r = inst.regret(&[Action::Arm(0), Action::Arm(0)], &[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(r, 2.0);
        assert!(inst.regret(&[Action::Arm(0)], &[]).is_err());
    }

    #[test]
    fn ball_comparator_matches_boundary_grid() {
        for &p in &[1.0, 1.3, 1.5, 2.0] {
            let total = [0.7, -1.2, 0.4];
            let a = ball_comparator(&total, p);
            let value: f64 = a.iter().zip(&total).map(|(x, l)| x * l).sum();
            assert!((lp_norm(&a, p) - 1.0).abs() < 1e-12);
            assert!((value + lp_norm(&total, conjugate_exponent(p))).abs() < 1e-12);
            // scan the boundary with spherical angles
            let steps = 1000;
            let mut best = f64::INFINITY;
            for i in 0..=steps {
                let th = std::f64::consts::PI * i as f64 / steps as f64;
                for j in 0..(2 * steps) {
                    let ph = std::f64::consts::PI * j as f64 / steps as f64;
                    let u = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
                    let norm = lp_norm(&u, p);
                    let v: f64 = u.iter().zip(&total).map(|(x, l)| x * l / norm).sum();
                    best = best.min(v);
                }
            }
            // the grid cannot beat the closed form, and gets close to it
            assert!(best >= value - 1e-12, "p = {p}");
            assert!(best - value < if p == 1.0 { 1e-2 } else { 1e-4 }, "p = {p}: {best} vs {value}");
        }
    }

    #[test]
    fn csv_loader_handles_headers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "a,b\n0,1\n0.5, 0.25").unwrap();
        assert_eq!(load_loss_csv(&path).unwrap(), vec![vec![0.0, 1.0], vec![0.5, 0.25]]);
        std::fs::write(&path, "0,1\n1,0\n").unwrap();
        assert_eq!(load_loss_csv(&path).unwrap().len(), 2);
        std::fs::write(&path, "0,1\nx,0\n").unwrap();
        assert!(load_loss_csv(&path).is_err());
    }

    #[test]
    fn construction_rejects_bad_losses() {
        let err = ProblemInstance::new(
            InstanceKind::KArmedBandit { k: 2 },
            LossSource::FixedSequence(vec![vec![0.5, 2.0]]),
            1,
        );
        assert!(err.is_err());
        let weak = Arc::new(GraphSpec::new(2, [(0, 0)]).unwrap());
        assert!(ProblemInstance::new(InstanceKind::GraphBandit { graph: weak }, LossSource::Bernoulli { means: vec![0.5; 2] }, 1).is_err());
    }
}

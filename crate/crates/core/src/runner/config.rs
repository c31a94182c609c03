//! Experiment configuration files.
//!
//! Validation collects every offending field before failing, so a bad file
//! is reported in one pass.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::engine::{Engine, EstimatorChoice, EtaChoice, OsmdConfig};
use crate::environments::{load_loss_csv, InstanceKind, LossSource, ProblemInstance};
use crate::error::{Error, Result};
use crate::graph::GraphSource;
use crate::potentials::Potential;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    /// Used as the CSV file stem.
    pub name: String,
    pub potential: Potential,
    pub estimator: EstimatorChoice,
    pub eta: EtaChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossConfig {
    Bernoulli {
        means: Vec<f64>,
    },
    /// Inline rows or a CSV file (exactly one of the two).
    FixedSequence {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rows: Option<Vec<Vec<f64>>>,
    },
    Rademacher,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceConfig {
    KArmedBandit { k: usize, losses: LossConfig },
    GraphBandit { graph: GraphSource, losses: LossConfig },
    LpFullInfo { p: f64, d: usize, losses: LossConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: String,
    pub algorithms: Vec<AlgorithmConfig>,
    pub instance: InstanceConfig,
    pub horizon: usize,
    pub repeats: u64,
    pub seed: u64,
    pub out: PathBuf,
    /// Empty means powers of two plus the final round.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checkpoints: Vec<usize>,
}

const FIELDS: &[&str] = &[
    "experiment",
    "algorithms",
    "instance",
    "horizon",
    "repeats",
    "seed",
    "out",
    "checkpoints",
];

fn field<T: DeserializeOwned>(obj: &serde_json::Map<String, Value>, name: &str, errors: &mut Vec<String>) -> Option<T> {
    match obj.get(name) {
        None => {
            errors.push(format!("{name}: missing"));
            None
        }
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| errors.push(format!("{name}: {e}")))
            .ok(),
    }
}

fn safe_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.') && s != "." && s != ".."
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: Value = serde_json::from_str(&text)?;
        let mut cfg = Self::from_value(&value)?;
        // relative loss files are resolved against the config's directory
        if let Some(dir) = path.parent() {
            cfg.rebase_paths(dir);
        }
        Ok(cfg)
    }

    fn rebase_paths(&mut self, dir: &Path) {
        let losses = match &mut self.instance {
            InstanceConfig::KArmedBandit { losses, .. }
            | InstanceConfig::GraphBandit { losses, .. }
            | InstanceConfig::LpFullInfo { losses, .. } => losses,
        };
        if let LossConfig::FixedSequence { path: Some(p), .. } = losses {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        if let InstanceConfig::GraphBandit {
            graph: GraphSource::File { path },
            ..
        } = &mut self.instance
        {
            if Path::new(path).is_relative() {
                *path = dir.join(&*path).to_string_lossy().into_owned();
            }
        }
    }

    /// Parses and validates, reporting every offending field.
    pub fn from_value(value: &Value) -> Result<Self> {
        let Some(obj) = value.as_object() else {
            return Err(Error::Config(vec!["configuration must be a JSON object".into()]));
        };
        let mut errors: Vec<String> = obj
            .keys()
            .filter(|k| !FIELDS.contains(&k.as_str()))
            .map(|k| format!("{k}: unknown field"))
            .collect();
        let experiment: Option<String> = field(obj, "experiment", &mut errors);
        let algorithms: Option<Vec<AlgorithmConfig>> = match obj.get("algorithms") {
            Some(Value::Array(items)) => {
                let mut out = Vec::new();
                for (i, item) in items.iter().enumerate() {
                    match serde_json::from_value(item.clone()) {
                        Ok(a) => out.push(a),
                        Err(e) => errors.push(format!("algorithms[{i}]: {e}")),
                    }
                }
                Some(out)
            }
            Some(_) => {
                errors.push("algorithms: expected a list".into());
                None
            }
            None => {
                errors.push("algorithms: missing".into());
                None
            }
        };
        let instance: Option<InstanceConfig> = field(obj, "instance", &mut errors);
        let horizon: Option<usize> = field(obj, "horizon", &mut errors);
        let repeats: Option<u64> = field(obj, "repeats", &mut errors);
        let seed: Option<u64> = field(obj, "seed", &mut errors);
        let out: Option<PathBuf> = field(obj, "out", &mut errors);
        let checkpoints: Vec<usize> = if obj.contains_key("checkpoints") {
            field(obj, "checkpoints", &mut errors).unwrap_or_default()
        } else {
            Vec::new()
        };

        if let Some(e) = &experiment {
            if !safe_name(e) {
                errors.push(format!("experiment: `{e}` must be a plain file name"));
            }
        }
        if horizon == Some(0) {
            errors.push("horizon: must be positive".into());
        }
        if repeats == Some(0) {
            errors.push("repeats: must be positive".into());
        }
        if let Some(algs) = &algorithms {
            if algs.is_empty() && obj.get("algorithms").is_some_and(|v| v.as_array().is_some_and(|a| a.is_empty())) {
                errors.push("algorithms: at least one is required".into());
            }
            for (i, a) in algs.iter().enumerate() {
                if !safe_name(&a.name) {
                    errors.push(format!("algorithms[{i}].name: `{}` must be a plain file name", a.name));
                }
                if algs[..i].iter().any(|b| b.name == a.name) {
                    errors.push(format!("algorithms[{i}].name: duplicate `{}`", a.name));
                }
                if let EtaChoice::Fixed(eta) = a.eta {
                    if !(eta > 0.0 && eta.is_finite()) {
                        errors.push(format!("algorithms[{i}].eta: must be positive, got {eta}"));
                    }
                }
                if let Err(e) = a.potential.validate() {
                    errors.push(format!("algorithms[{i}].potential: {e}"));
                }
            }
        }
        if let Some(h) = horizon {
            if !checkpoints.is_empty()
                && (checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints[0] == 0 || *checkpoints.last().unwrap() > h)
            {
                errors.push(format!("checkpoints: must be strictly increasing within 1..={h}"));
            }
        }

        if !errors.is_empty() {
            return Err(Error::Config(errors));
        }
        Ok(Self {
            experiment: experiment.unwrap(),
            algorithms: algorithms.unwrap(),
            instance: instance.unwrap(),
            horizon: horizon.unwrap(),
            repeats: repeats.unwrap(),
            seed: seed.unwrap(),
            out: out.unwrap(),
            checkpoints,
        })
    }

    pub fn build_instance(&self) -> Result<Arc<ProblemInstance>> {
        let source = |losses: &LossConfig| -> Result<LossSource> {
            Ok(match losses {
                LossConfig::Bernoulli { means } => LossSource::Bernoulli { means: means.clone() },
                LossConfig::Rademacher => LossSource::Rademacher,
                LossConfig::FixedSequence { path: Some(p), rows: None } => LossSource::FixedSequence(load_loss_csv(p)?),
                LossConfig::FixedSequence { path: None, rows: Some(r) } => LossSource::FixedSequence(r.clone()),
                LossConfig::FixedSequence { .. } => {
                    return Err(Error::Config(vec![
                        "instance.losses: fixed_sequence needs exactly one of `path` or `rows`".into(),
                    ]))
                }
            })
        };
        let (kind, losses) = match &self.instance {
            InstanceConfig::KArmedBandit { k, losses } => (InstanceKind::KArmedBandit { k: *k }, losses),
            InstanceConfig::GraphBandit { graph, losses } => (
                InstanceKind::GraphBandit {
                    graph: Arc::new(graph.build()?),
                },
                losses,
            ),
            InstanceConfig::LpFullInfo { p, d, losses } => (InstanceKind::LpFullInfo { p: *p, d: *d }, losses),
        };
        Ok(Arc::new(ProblemInstance::new(kind, source(losses)?, self.horizon)?))
    }

    /// One engine per algorithm, with learning rates resolved. Every failing
    /// algorithm is reported.
    pub fn build_engines(&self) -> Result<Vec<(AlgorithmConfig, Engine)>> {
        let instance = self
            .build_instance()
            .map_err(|e| match e {
                Error::Config(v) => Error::Config(v),
                other => Error::Config(vec![format!("instance: {other}")]),
            })?;
        let mut errors = Vec::new();
        let mut out = Vec::new();
        for (i, a) in self.algorithms.iter().enumerate() {
            let cfg = OsmdConfig {
                potential: a.potential,
                estimator: a.estimator,
                instance: instance.clone(),
                eta: a.eta,
                seed: self.seed,
                checkpoints: self.checkpoints.clone(),
            };
            match Engine::new(cfg) {
                Ok(e) => out.push((a.clone(), e)),
                Err(e) => errors.push(format!("algorithms[{i}] ({}): {e}", a.name)),
            }
        }
        if !errors.is_empty() {
            return Err(Error::Config(errors));
        }
        Ok(out)
    }

    /// The configuration with every `auto` learning rate replaced by its value.
    pub fn resolved(&self, engines: &[(AlgorithmConfig, Engine)]) -> Self {
        let mut cfg = self.clone();
        for (a, (_, e)) in cfg.algorithms.iter_mut().zip(engines) {
            a.eta = EtaChoice::Fixed(e.eta());
        }
        cfg
    }
}

/// A base configuration and a grid of overrides. Grid keys are JSON pointers
/// into the base (`/horizon`, `/algorithms/0/eta`, ...); every combination of
/// values becomes one experiment named `<base>_<index>`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: Value,
    pub grid: std::collections::BTreeMap<String, Vec<Value>>,
}

/// One point of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepVariant {
    pub experiment: String,
    pub overrides: Vec<(String, Value)>,
    #[serde(skip)]
    pub config: RunConfig,
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<(Self, Option<PathBuf>)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Config(vec![e.to_string()]))?;
        Ok((cfg, path.parent().map(Path::to_path_buf)))
    }

    pub fn expand(&self, base_dir: Option<&Path>) -> Result<Vec<SweepVariant>> {
        let base_name = self
            .base
            .get("experiment")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Config(vec!["base.experiment: missing".into()]))?
            .to_string();
        let mut errors = Vec::new();
        for (pointer, values) in &self.grid {
            if self.base.pointer(pointer).is_none() {
                errors.push(format!("grid `{pointer}`: not present in the base configuration"));
            }
            if values.is_empty() {
                errors.push(format!("grid `{pointer}`: no values"));
            }
        }
        if !errors.is_empty() {
            return Err(Error::Config(errors));
        }
        let axes: Vec<(&String, &Vec<Value>)> = self.grid.iter().collect();
        let total: usize = axes.iter().map(|(_, v)| v.len()).product();
        let mut variants = Vec::with_capacity(total);
        for index in 0..total {
            let mut value = self.base.clone();
            let mut rest = index;
            let mut overrides = Vec::new();
            for (pointer, values) in axes.iter().rev() {
                let v = &values[rest % values.len()];
                rest /= values.len();
                *value.pointer_mut(pointer).expect("checked above") = v.clone();
                overrides.push(((*pointer).clone(), v.clone()));
            }
            overrides.reverse();
            let experiment = format!("{base_name}_{index:03}");
            value["experiment"] = Value::String(experiment.clone());
            let mut config = RunConfig::from_value(&value).map_err(|e| match e {
                Error::Config(v) => Error::Config(v.into_iter().map(|m| format!("{experiment}: {m}")).collect()),
                other => other,
            })?;
            if let Some(dir) = base_dir {
                config.rebase_paths(dir);
            }
            variants.push(SweepVariant {
                experiment,
                overrides,
                config,
            });
        }
        Ok(variants)
    }
}

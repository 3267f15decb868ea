use std::path::PathBuf;

use crate::attack::{AttackConfig, Method};
use crate::error::{Error, Result};
use crate::kv::{parse_list, KeyValues};
use crate::metrics::{DEFAULT_ACTIVE_EPS, DEFAULT_DYNAMIC_RANGE};
use crate::tensor::{Dims, DEFAULT_RANK_TOL};

use super::dataset::DatasetKind;
use super::model_spec::ModelSpec;

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub dims: Dims,
    pub n: usize,
    pub kind: DatasetKind,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self { dims: [32, 32, 3, 16], n: 10, kind: DatasetKind::Smooth, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedAttack {
    pub name: String,
    pub method: Method,
    /// `seed` here is the master seed; sample `i` runs with `split_seed(seed, i)`.
    pub config: AttackConfig,
    /// `query_budget` came from the built-in default.
    pub default_budget: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsSettings {
    pub active_eps: f64,
    pub rank_tol: f64,
    pub dynamic_range: f64,
}

impl Default for MetricsSettings {
    fn default() -> Self {
        Self { active_eps: DEFAULT_ACTIVE_EPS, rank_tol: DEFAULT_RANK_TOL, dynamic_range: DEFAULT_DYNAMIC_RANGE }
    }
}

/// A benchmark run, read from a flat config:
///
/// ```text
/// out_dir = results/run1
/// attacks = tenad, baseline
/// dataset.dims = 16, 16, 3, 16
/// dataset.n = 100
/// dataset.kind = smooth          # smooth | gaussian | rank-k
/// dataset.seed = 1
/// model.kind = linear            # linear | centroid | subprocess
/// model.classes = 2
/// attack.tenad.query_budget = 5000
/// attack.fast.method = tenad     # entries not named after a method need `method`
/// metrics.active_eps = 1e-8
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub model: ModelSpec,
    pub attacks: Vec<NamedAttack>,
    pub metrics: MetricsSettings,
    pub out_dir: PathBuf,
}

const TOP_KEYS: &[&str] = &["out_dir", "attacks"];
const DATASET_KEYS: &[&str] = &["dims", "n", "kind", "seed"];
const METRICS_KEYS: &[&str] = &["active_eps", "rank_tol", "dynamic_range"];

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_kv(&KeyValues::parse(text)?)
    }

    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        for key in kv.keys() {
            let known = TOP_KEYS.contains(&key)
                || ["dataset.", "model.", "attack.", "metrics."].iter().any(|p| key.starts_with(p));
            if !known {
                return Err(Error::Config(format!("unknown key `{key}`")));
            }
        }

        let ds = kv.section("dataset");
        ds.expect_only(DATASET_KEYS)?;
        let mut dataset = DatasetSpec::default();
        if let Some(v) = ds.get("dims") {
            let d: Vec<usize> = parse_list(v)?;
            dataset.dims =
                <[usize; 4]>::try_from(d).map_err(|_| Error::Config("dataset.dims needs 4 extents".into()))?;
        }
        if let Some(v) = ds.parsed("n")? {
            dataset.n = v;
        }
        if let Some(v) = ds.get("kind") {
            dataset.kind = v.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
        }
        if let Some(v) = ds.parsed("seed")? {
            dataset.seed = v;
        }
        if dataset.dims.contains(&0) {
            return Err(Error::Config("dataset.dims must be positive".into()));
        }
        if dataset.n == 0 {
            return Err(Error::Config("dataset.n must be >= 1".into()));
        }

        let model = ModelSpec::from_kv(&kv.section("model"))?;

        let names: Vec<String> = match kv.get("attacks") {
            Some(v) => parse_list(v)?,
            None => vec!["tenad".into(), "baseline".into()],
        };
        if names.is_empty() {
            return Err(Error::Config("`attacks` is empty".into()));
        }
        let all_attack = kv.section("attack");
        for key in all_attack.keys() {
            let name = key.split('.').next().unwrap_or("");
            if !names.iter().any(|n| n == name) {
                return Err(Error::Config(format!("`attack.{key}` belongs to no listed attack")));
            }
        }
        let mut attacks = Vec::with_capacity(names.len());
        for name in names {
            if name.is_empty() || name.contains(['/', '\\', '.']) {
                return Err(Error::Config(format!("bad attack name {name:?}")));
            }
            if attacks.iter().any(|a: &NamedAttack| a.name == name) {
                return Err(Error::Config(format!("attack `{name}` listed twice")));
            }
            let mut section = kv.section(&format!("attack.{name}"));
            let method: Method = match section.get("method") {
                Some(m) => m.parse()?,
                None => name
                    .parse()
                    .map_err(|_| Error::Config(format!("attack `{name}` needs `method = tenad|baseline`")))?,
            };
            section = strip_key(&section, "method");
            let default_budget = section.get("query_budget").is_none();
            attacks.push(NamedAttack { name, method, config: AttackConfig::from_kv(&section)?, default_budget });
        }

        let ms = kv.section("metrics");
        ms.expect_only(METRICS_KEYS)?;
        let mut metrics = MetricsSettings::default();
        if let Some(v) = ms.parsed("active_eps")? {
            metrics.active_eps = v;
        }
        if let Some(v) = ms.parsed("rank_tol")? {
            metrics.rank_tol = v;
        }
        if let Some(v) = ms.parsed("dynamic_range")? {
            metrics.dynamic_range = v;
        }
        if !(metrics.active_eps > 0.0
            && metrics.rank_tol > 0.0
            && metrics.rank_tol < 1.0
            && metrics.dynamic_range > 0.0)
        {
            return Err(Error::Config("metrics settings out of range".into()));
        }

        let out_dir = PathBuf::from(kv.get("out_dir").unwrap_or("results"));
        Ok(Self { dataset, model, attacks, metrics, out_dir })
    }

    /// Canonical text of the fully resolved configuration (defaults included).
    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        kv.insert("out_dir", self.out_dir.display().to_string());
        let names: Vec<&str> = self.attacks.iter().map(|a| a.name.as_str()).collect();
        kv.insert("attacks", names.join(", "));
        let d = self.dataset.dims;
        kv.insert("dataset.dims", format!("{},{},{},{}", d[0], d[1], d[2], d[3]));
        kv.insert("dataset.n", self.dataset.n.to_string());
        kv.insert("dataset.kind", self.dataset.kind.to_string());
        kv.insert("dataset.seed", self.dataset.seed.to_string());
        for (k, v) in pairs(&self.model.to_kv()) {
            kv.insert(format!("model.{k}"), v);
        }
        for a in &self.attacks {
            kv.insert(format!("attack.{}.method", a.name), a.method.to_string());
            for (k, v) in pairs(&a.config.to_kv()) {
                if k == "query_budget" && a.default_budget {
                    continue;
                }
                kv.insert(format!("attack.{}.{k}", a.name), v);
            }
        }
        kv.insert("metrics.active_eps", self.metrics.active_eps.to_string());
        kv.insert("metrics.rank_tol", self.metrics.rank_tol.to_string());
        kv.insert("metrics.dynamic_range", self.metrics.dynamic_range.to_string());
        kv
    }
}

fn pairs(kv: &KeyValues) -> Vec<(String, String)> {
    kv.keys().map(|k| (k.to_string(), kv.get(k).unwrap_or_default().to_string())).collect()
}

fn strip_key(kv: &KeyValues, key: &str) -> KeyValues {
    let mut out = KeyValues::default();
    for (k, v) in pairs(kv) {
        if k != key {
            out.insert(k, v);
        }
    }
    out
}

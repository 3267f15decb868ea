use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kv::{parse_list, KeyValues};
use crate::models::{BlackBoxModel, CentroidModel, LinearThresholdModel, SubprocessModel, DEFAULT_QUERY_TIMEOUT};
use crate::tensor::{Dims, Tensor4};

use super::dataset::{generate_synthetic_dataset, DatasetKind, PIXEL_MID};

/// Which oracle to attack, and how to build it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModelSpec {
    /// Gaussian weights; `classes - 1` thresholds spaced one score standard
    /// deviation apart around the score of a mid-gray input.
    Linear {
        classes: usize,
        seed: u64,
    },
    /// `classes` centroids drawn from the smooth generator.
    Centroid {
        classes: usize,
        seed: u64,
    },
    Subprocess {
        command: Vec<String>,
        timeout: Duration,
    },
}

pub type DynModel = Box<dyn BlackBoxModel<f64> + Send>;

const MODEL_KEYS: &[&str] = &["kind", "classes", "seed", "command", "timeout_secs"];

impl ModelSpec {
    /// Score spread used to place linear thresholds: the standard deviation of
    /// `⟨w, x⟩` for smooth samples, approximated by `SPREAD_SCALE · ‖w‖_F`.
    const SPREAD_SCALE: f64 = 12.0;

    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        kv.expect_only(MODEL_KEYS)?;
        let classes = kv.parsed("classes")?;
        let seed = kv.parsed("seed")?.unwrap_or(0);
        let spec = match kv.get("kind").unwrap_or("linear") {
            "linear" => ModelSpec::Linear { classes: classes.unwrap_or(2), seed },
            "centroid" => ModelSpec::Centroid { classes: classes.unwrap_or(3), seed },
            "subprocess" => {
                let command: Vec<String> = match kv.get("command") {
                    Some(c) => c.split_whitespace().map(String::from).collect(),
                    None => Vec::new(),
                };
                if command.is_empty() {
                    return Err(Error::Config("subprocess model needs `command`".into()));
                }
                let timeout = match kv.parsed::<f64>("timeout_secs")? {
                    Some(t) if t > 0.0 && t.is_finite() => Duration::from_secs_f64(t),
                    Some(_) => return Err(Error::Config("timeout_secs must be positive".into())),
                    None => DEFAULT_QUERY_TIMEOUT,
                };
                ModelSpec::Subprocess { command, timeout }
            }
            other => return Err(Error::Config(format!("unknown model kind {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Parses the compact CLI form `linear[:classes[:seed]]`,
    /// `centroid[:classes[:seed]]` or `subprocess:<command line>`.
    pub fn parse_compact(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut kv = KeyValues::default();
        kv.insert("kind", kind);
        if kind == "subprocess" {
            kv.insert("command", rest);
        } else if !rest.is_empty() {
            let parts: Vec<u64> = parse_list(&rest.replace(':', ","))?;
            match parts.as_slice() {
                [c] => kv.insert("classes", c.to_string()),
                [c, seed] => {
                    kv.insert("classes", c.to_string());
                    kv.insert("seed", seed.to_string());
                }
                _ => return Err(Error::Config(format!("bad model spec {s:?}"))),
            }
        }
        Self::from_kv(&kv)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Linear { classes, .. } | ModelSpec::Centroid { classes, .. } if *classes < 2 => {
                Err(Error::Config("a toy model needs at least 2 classes".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        match self {
            ModelSpec::Linear { classes, seed } | ModelSpec::Centroid { classes, seed } => {
                let kind = if matches!(self, ModelSpec::Linear { .. }) { "linear" } else { "centroid" };
                kv.insert("kind", kind);
                kv.insert("classes", classes.to_string());
                kv.insert("seed", seed.to_string());
            }
            ModelSpec::Subprocess { command, timeout } => {
                kv.insert("kind", "subprocess");
                kv.insert("command", command.join(" "));
                kv.insert("timeout_secs", timeout.as_secs_f64().to_string());
            }
        }
        kv
    }

    /// A fresh instance with its own query counter.
    pub fn build(&self, dims: Dims) -> Result<DynModel> {
        Ok(match self {
            ModelSpec::Linear { .. } => Box::new(self.build_linear(dims)?),
            ModelSpec::Centroid { classes, seed } => {
                Box::new(CentroidModel::new(generate_synthetic_dataset(dims, *classes, DatasetKind::Smooth, *seed)?)?)
            }
            ModelSpec::Subprocess { command, timeout } => Box::new(SubprocessModel::spawn(command, dims, *timeout)?),
        })
    }

    /// The concrete linear model (for closed-form checks).
    pub fn build_linear(&self, dims: Dims) -> Result<LinearThresholdModel<f64>> {
        let ModelSpec::Linear { classes, seed } = *self else {
            return Err(Error::InvalidArgument("not a linear model spec".into()));
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = dims.iter().product();
        let w = Tensor4::new(dims, (0..len).map(|_| rng.sample(StandardNormal)).collect())?;
        let center = PIXEL_MID * w.data().iter().sum::<f64>();
        let spread = Self::SPREAD_SCALE * w.frobenius_norm();
        let half = (classes - 2) as f64 / 2.0;
        let thresholds = (0..classes - 1).map(|k| center + (k as f64 - half) * spread).collect();
        LinearThresholdModel::new(w, thresholds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_forms() {
        assert_eq!(ModelSpec::parse_compact("linear").unwrap(), ModelSpec::Linear { classes: 2, seed: 0 });
        assert_eq!(ModelSpec::parse_compact("centroid:4:9").unwrap(), ModelSpec::Centroid { classes: 4, seed: 9 });
        match ModelSpec::parse_compact("subprocess:python3 model.py").unwrap() {
            ModelSpec::Subprocess { command, timeout } => {
                assert_eq!(command, vec!["python3", "model.py"]);
                assert_eq!(timeout, DEFAULT_QUERY_TIMEOUT);
            }
            other => panic!("{other:?}"),
        }
        assert!(ModelSpec::parse_compact("linear:1").is_err());
        assert!(ModelSpec::parse_compact("subprocess").is_err());
        assert!(ModelSpec::parse_compact("cnn").is_err());
    }

    #[test]
    fn kv_round_trip() {
        for spec in [ModelSpec::Linear { classes: 3, seed: 4 }, ModelSpec::Centroid { classes: 2, seed: 1 }] {
            assert_eq!(ModelSpec::from_kv(&spec.to_kv()).unwrap(), spec);
        }
    }

    #[test]
    fn linear_labels_vary_on_smooth_data() {
        let dims = [8, 8, 3, 16];
        let mut m = ModelSpec::Linear { classes: 2, seed: 3 }.build(dims).unwrap();
        let xs = generate_synthetic_dataset(dims, 40, DatasetKind::Smooth, 11).unwrap();
        let ones = xs.iter().filter(|x| m.predict(x).unwrap().0 == 1).count();
        assert!(ones > 5 && ones < 35, "{ones}");
    }
}

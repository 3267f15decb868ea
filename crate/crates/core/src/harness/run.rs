use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{run_attack, split_seed, AttackConfig};
use crate::error::{Error, Result};
use crate::kv::KeyValues;
use crate::metrics::{MetricsReport, Outcome, SampleInput};
use crate::models::Label;
use crate::tensor::{load_ten4, save_ten4, Tensor4};

use super::config::{ExperimentConfig, MetricsSettings};
use super::dataset::generate_synthetic_dataset;
use super::record::{AttackRecord, ResultRecord};

pub const CONFIG_FILE: &str = "config.txt";
pub const CLEAN_FILE: &str = "clean.ten4";
pub const SUMMARY_FILE: &str = "summary.json";
pub const COMPARISON_FILE: &str = "comparison.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleError {
    pub sample: usize,
    pub attack: Option<String>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackSetup {
    pub name: String,
    pub config: AttackConfig,
    /// `query_budget` was not set in the experiment file, so the built-in
    /// default applied.
    pub default_budget: bool,
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub samples: usize,
    pub attacks: Vec<AttackSetup>,
    pub reports: Vec<MetricsReport>,
    pub errors: Vec<SampleError>,
}

pub fn sample_dir(out_dir: &Path, sample: usize) -> PathBuf {
    out_dir.join("samples").join(format!("{sample:04}"))
}

struct SampleRun {
    clean: Tensor4<f64>,
    adversarial: Vec<Option<(Tensor4<f64>, Outcome)>>,
    errors: Vec<SampleError>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn run_sample(cfg: &ExperimentConfig, id: usize, x: Tensor4<f64>) -> Result<SampleRun> {
    let dir = sample_dir(&cfg.out_dir, id);
    fs::create_dir_all(&dir)?;
    save_ten4(&x, dir.join(CLEAN_FILE))?;
    let dims = x.dims();
    let mut errors = Vec::new();

    let true_label: Option<Label> = match cfg.model.build(dims).and_then(|mut m| m.predict(&x)) {
        Ok(l) => Some(l),
        Err(e) => {
            errors.push(SampleError { sample: id, attack: None, message: e.to_string() });
            None
        }
    };

    let mut adversarial = Vec::with_capacity(cfg.attacks.len());
    for a in &cfg.attacks {
        let config = AttackConfig { seed: split_seed(a.config.seed, id as u64), ..a.config.clone() };
        let mut record = AttackRecord {
            sample: id,
            attack: a.name.clone(),
            config: config.clone(),
            true_label,
            model_queries: 0,
            adversarial_file: None,
            result: None,
            error: None,
        };
        let outcome = match true_label {
            None => Err(Error::ModelUnavailable { reason: "labeling failed".into(), queries: 0 }),
            Some(_) => cfg.model.build(dims).and_then(|mut model| {
                let r = run_attack(a.method, &mut model, &x, &config);
                record.model_queries = model.query_count();
                r
            }),
        };
        match outcome {
            Ok(r) => {
                let file = format!("{}.ten4", a.name);
                save_ten4(&r.adversarial, dir.join(&file))?;
                record.adversarial_file = Some(file);
                record.result = Some(ResultRecord::from(&r));
                adversarial.push(Some((r.adversarial.clone(), Outcome::from(&r))));
            }
            Err(e) => {
                log::warn!("sample {id}, attack {}: {e}", a.name);
                record.error = Some(e.to_string());
                errors.push(SampleError { sample: id, attack: Some(a.name.clone()), message: e.to_string() });
                adversarial.push(None);
            }
        }
        write_json(&dir.join(format!("{}.json", a.name)), &record)?;
    }
    Ok(SampleRun { clean: x, adversarial, errors })
}

fn comparison_csv(reports: &[MetricsReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(["attack", "n", "successes", "MQ", "MAP", "MAP*", "SSIM", "SSIM*", "FR", "rank"]).map_err(err)?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    for r in reports {
        w.write_record([
            r.attack.clone(),
            r.n.to_string(),
            r.successes.to_string(),
            opt(r.mq),
            opt(r.map),
            opt(r.map_star),
            opt(r.mssim),
            opt(r.ssim_star),
            r.fr.to_string(),
            r.error_rank.modal.map_or(String::new(), |m| m.to_string()),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

fn write_reports(out_dir: &Path, reports: &[MetricsReport]) -> Result<()> {
    for r in reports {
        write_json(&out_dir.join(format!("metrics_{}.json", r.attack)), r)?;
        fs::write(out_dir.join(format!("metrics_{}.csv", r.attack)), r.to_csv()?)?;
    }
    fs::write(out_dir.join(COMPARISON_FILE), comparison_csv(reports)?)?;
    Ok(())
}

/// Generates the dataset, attacks every sample with every configured attack
/// (samples in parallel, each attack on its own model instance), and writes:
///
/// - `config.txt`: the resolved configuration
/// - `samples/NNNN/`: `clean.ten4`, and per attack `<name>.ten4` and `<name>.json`
/// - `metrics_<name>.json`, `metrics_<name>.csv`, `comparison.csv`, `summary.json`
///
/// A failing sample is recorded in `errors` and excluded from that attack's
/// metrics; the other samples are unaffected. Outputs carry no timestamps, so
/// equal configurations give byte-identical files.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    let data = generate_synthetic_dataset(cfg.dataset.dims, cfg.dataset.n, cfg.dataset.kind, cfg.dataset.seed)?;
    fs::create_dir_all(&cfg.out_dir)?;
    fs::write(cfg.out_dir.join(CONFIG_FILE), cfg.to_kv().to_text())?;

    let started = std::time::Instant::now();
    let runs: Vec<SampleRun> =
        data.into_par_iter().enumerate().map(|(i, x)| run_sample(cfg, i, x)).collect::<Result<_>>()?;
    log::info!("{} samples attacked in {:.1?}", runs.len(), started.elapsed());

    let mut reports = Vec::with_capacity(cfg.attacks.len());
    for (k, a) in cfg.attacks.iter().enumerate() {
        let inputs: Vec<SampleInput<'_, f64>> = runs
            .iter()
            .enumerate()
            .filter_map(|(i, run)| {
                run.adversarial[k].as_ref().map(|(adv, o)| SampleInput {
                    id: i,
                    clean: &run.clean,
                    adversarial: adv,
                    outcome: *o,
                })
            })
            .collect();
        if inputs.is_empty() {
            log::warn!("attack {}: no sample completed", a.name);
            continue;
        }
        let m = cfg.metrics;
        reports.push(MetricsReport::compute(&a.name, &inputs, m.active_eps, m.rank_tol, m.dynamic_range)?);
    }
    write_reports(&cfg.out_dir, &reports)?;

    let summary = ExperimentSummary {
        samples: cfg.dataset.n,
        attacks: cfg
            .attacks
            .iter()
            .map(|a| AttackSetup { name: a.name.clone(), config: a.config.clone(), default_budget: a.default_budget })
            .collect(),
        reports,
        errors: runs.into_iter().flat_map(|r| r.errors).collect(),
    };
    write_json(&cfg.out_dir.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

/// Sample id, clean tensor, adversarial tensor and outcome read back from disk.
type StoredSample = (usize, Tensor4<f64>, Tensor4<f64>, Outcome);

/// Rebuilds the metrics reports from an experiment directory's stored
/// records and tensors, and rewrites the metric files.
pub fn recompute_metrics(out_dir: &Path, settings: Option<MetricsSettings>) -> Result<Vec<MetricsReport>> {
    let stored = match fs::read_to_string(out_dir.join(CONFIG_FILE)) {
        Ok(text) => Some(ExperimentConfig::from_kv(&KeyValues::parse(&text)?)?),
        Err(_) => None,
    };
    let settings = settings.or(stored.as_ref().map(|c| c.metrics)).unwrap_or_default();
    // Reports follow the configured attack order; unknown names go last, by name.
    let order: Vec<String> = stored.map(|c| c.attacks.into_iter().map(|a| a.name).collect()).unwrap_or_default();
    let samples_root = out_dir.join("samples");
    let mut dirs: Vec<PathBuf> =
        fs::read_dir(&samples_root)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
    dirs.retain(|p| p.is_dir());
    dirs.sort();

    let mut grouped: Vec<(String, Vec<StoredSample>)> = Vec::new();
    for dir in dirs {
        let mut records: Vec<PathBuf> = fs::read_dir(&dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect();
        records.sort();
        let clean: Tensor4<f64> = load_ten4(dir.join(CLEAN_FILE))?;
        for path in records {
            let rec: AttackRecord = serde_json::from_str(&fs::read_to_string(&path)?)?;
            let (Some(file), Some(result)) = (&rec.adversarial_file, &rec.result) else {
                continue;
            };
            let adv = load_ten4(dir.join(file))?;
            let outcome = Outcome { success: result.success, queries: result.queries_used };
            let entry = match grouped.iter_mut().position(|g| g.0 == rec.attack) {
                Some(i) => &mut grouped[i].1,
                None => {
                    grouped.push((rec.attack.clone(), Vec::new()));
                    &mut grouped.last_mut().expect("just pushed").1
                }
            };
            entry.push((rec.sample, clean.clone(), adv, outcome));
        }
    }
    let rank = |name: &str| order.iter().position(|n| n == name).unwrap_or(order.len());
    grouped.sort_by(|a, b| (rank(&a.0), &a.0).cmp(&(rank(&b.0), &b.0)));
    if grouped.is_empty() {
        return Err(Error::InvalidArgument(format!("no attack records under {}", samples_root.display())));
    }

    let mut reports = Vec::new();
    for (name, mut items) in grouped {
        items.sort_by_key(|i| i.0);
        let inputs: Vec<SampleInput<'_, f64>> =
            items.iter().map(|(id, c, a, o)| SampleInput { id: *id, clean: c, adversarial: a, outcome: *o }).collect();
        reports.push(MetricsReport::compute(
            &name,
            &inputs,
            settings.active_eps,
            settings.rank_tol,
            settings.dynamic_range,
        )?);
    }
    write_reports(out_dir, &reports)?;
    Ok(reports)
}

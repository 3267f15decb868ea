use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use serde_json::json;

use tenad::attack::{run_attack, AttackConfig, Method};
use tenad::harness::{
    demo_rank1_constant, generate_synthetic_dataset, recompute_metrics, run_experiment, DatasetKind, ExperimentConfig,
    MetricsSettings, ModelSpec, ResultRecord,
};
use tenad::kv::{parse_list, KeyValues};
use tenad::metrics::MetricsReport;
use tenad::tensor::{hosvd, load_ten4, save_ten4, RankTuple};
use tenad::{Error, Tensor};

const EXIT_CONFIG: u8 = 2;
const EXIT_MODEL: u8 = 3;
const EXIT_PARTIAL: u8 = 4;

#[derive(Parser)]
#[command(name = "tenad", version, about = "Low-rank hard-label attacks on order-4 video tensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Attack a single TEN4 sample.
    Attack {
        #[arg(long)]
        input: PathBuf,
        /// `linear[:classes[:seed]]`, `centroid[:classes[:seed]]` or `subprocess:<command>`.
        #[arg(long)]
        model: String,
        /// Flat `key = value` attack configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "tenad")]
        method: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full experiment described by a config file.
    Bench {
        config: PathBuf,
        /// Overrides `out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides every attack's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recompute metric reports from a finished experiment directory.
    Metrics {
        dir: PathBuf,
        #[arg(long)]
        active_eps: Option<f64>,
        #[arg(long)]
        rank_tol: Option<f64>,
        #[arg(long)]
        dynamic_range: Option<f64>,
    },
    /// HOSVD of a TEN4 tensor: prints per-mode singular values, writes factors and core.
    Hosvd {
        #[arg(long)]
        input: PathBuf,
        /// Truncation ranks `r1,r2,r3,r4`.
        #[arg(long)]
        ranks: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic dataset as TEN4 files.
    Gen {
        #[arg(long, default_value = "smooth")]
        kind: String,
        #[arg(long, default_value = "32,32,3,16")]
        dims: String,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Add a constant (rank-one) perturbation and report its rank and MAP.
    DemoRank1 {
        /// Defaults to a smooth 32x32x3x16 sample.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 256.0)]
        magnitude: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_dims(s: &str) -> anyhow::Result<[usize; 4]> {
    let v: Vec<usize> = parse_list(s)?;
    <[usize; 4]>::try_from(v).map_err(|_| Error::Config(format!("expected 4 extents, got {s:?}")).into())
}

fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn print_reports(reports: &[MetricsReport]) {
    let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
    println!(
        "{:<12} {:>10} {:>10} {:>10} {:>8} {:>8} {:>7}  rank",
        "attack", "MQ", "MAP", "MAP*", "SSIM", "SSIM*", "FR"
    );
    for r in reports {
        println!(
            "{:<12} {:>10} {:>10} {:>10} {:>8} {:>8} {:>7.2}  {}",
            r.attack,
            f(r.mq),
            f(r.map),
            f(r.map_star),
            f(r.mssim),
            f(r.ssim_star),
            r.fr,
            r.error_rank.modal.map_or("-".to_string(), |m| m.to_string())
        );
    }
}

fn attack(
    input: &Path,
    model: &str,
    config: Option<&Path>,
    seed: Option<u64>,
    method: &str,
    out: &Path,
) -> anyhow::Result<u8> {
    let x: Tensor = load_ten4(input).with_context(|| format!("reading {}", input.display()))?;
    let spec = ModelSpec::parse_compact(model)?;
    let mut cfg = match config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            AttackConfig::from_kv(&KeyValues::parse(&text)?)?
        }
        None => AttackConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let method: Method = method.parse()?;
    let mut m = spec.build(x.dims())?;
    let r = run_attack(method, &mut m, &x, &cfg)?;
    fs::create_dir_all(out)?;
    save_ten4(&r.adversarial, out.join("adversarial.ten4"))?;
    write_json(&out.join("result.json"), &json!({ "config": cfg, "result": ResultRecord::from(&r) }))?;
    println!(
        "{method}: success={} queries={} g*={} label {} -> {}",
        r.success,
        r.queries_used,
        r.g_star.map_or("-".to_string(), |g| g.to_string()),
        r.original_label,
        r.adversarial_label.map_or("-".to_string(), |l| l.to_string())
    );
    Ok(0)
}

fn bench(path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> anyhow::Result<u8> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(o) = out {
        cfg.out_dir = o;
    }
    if let Some(s) = seed {
        cfg.attacks.iter_mut().for_each(|a| a.config.seed = s);
    }
    let summary = run_experiment(&cfg)?;
    print_reports(&summary.reports);
    println!("outputs in {}", cfg.out_dir.display());
    if summary.errors.is_empty() {
        return Ok(0);
    }
    for e in &summary.errors {
        eprintln!("sample {} {}: {}", e.sample, e.attack.as_deref().unwrap_or("(label)"), e.message);
    }
    Ok(EXIT_PARTIAL)
}

fn metrics(dir: &Path, eps: Option<f64>, tol: Option<f64>, range: Option<f64>) -> anyhow::Result<u8> {
    let settings = if eps.is_some() || tol.is_some() || range.is_some() {
        let d = MetricsSettings::default();
        Some(MetricsSettings {
            active_eps: eps.unwrap_or(d.active_eps),
            rank_tol: tol.unwrap_or(d.rank_tol),
            dynamic_range: range.unwrap_or(d.dynamic_range),
        })
    } else {
        None
    };
    print_reports(&recompute_metrics(dir, settings)?);
    Ok(0)
}

fn hosvd_cmd(input: &Path, ranks: Option<&str>, out: Option<&Path>) -> anyhow::Result<u8> {
    let x: Tensor = load_ten4(input)?;
    let ranks = ranks.map(|r| r.parse::<RankTuple>()).transpose()?;
    let h = hosvd(&x, ranks)?;
    for (j, s) in h.singular_values.iter().enumerate() {
        let list: Vec<String> = s.iter().map(|v| format!("{v:.6e}")).collect();
        println!("mode {}: {}", j + 1, list.join(" "));
    }
    println!("core dims {:?}", h.core.dims());
    if let Some(out) = out {
        fs::create_dir_all(out)?;
        save_ten4(&h.core, out.join("core.ten4"))?;
        let factors: Vec<_> =
            h.factors.iter().map(|u| json!({ "rows": u.rows(), "cols": u.cols(), "data": u.data() })).collect();
        write_json(&out.join("factors.json"), &json!({ "factors": factors, "singular_values": h.singular_values }))?;
    }
    Ok(0)
}

fn gen(kind: &str, dims: &str, n: usize, seed: u64, out: &Path) -> anyhow::Result<u8> {
    let kind: DatasetKind = kind.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
    let dims = parse_dims(dims)?;
    let data = generate_synthetic_dataset(dims, n, kind, seed)?;
    fs::create_dir_all(out)?;
    for (i, x) in data.iter().enumerate() {
        save_ten4(x, out.join(format!("sample_{i:04}.ten4")))?;
    }
    println!("wrote {n} {kind} samples of dims {dims:?} to {}", out.display());
    Ok(0)
}

fn demo(input: Option<&Path>, magnitude: f64, out: Option<&Path>) -> anyhow::Result<u8> {
    if !magnitude.is_finite() {
        bail!(Error::Config("magnitude must be finite".into()));
    }
    let x: Tensor = match input {
        Some(p) => load_ten4(p)?,
        None => generate_synthetic_dataset([32, 32, 3, 16], 1, DatasetKind::Smooth, 0)?.remove(0),
    };
    let d = demo_rank1_constant(&x, magnitude)?;
    println!("perturbation rank {}", d.rank);
    println!("MAP {}", d.map);
    if let Some(out) = out {
        save_ten4(&d.perturbed, out)?;
    }
    Ok(0)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_)) => EXIT_CONFIG,
        Some(Error::ModelUnavailable { .. }) => EXIT_MODEL,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Attack { input, model, config, seed, method, out } => {
            attack(input, model, config.as_deref(), *seed, method, out)
        }
        Command::Bench { config, out, seed } => bench(config, out.clone(), *seed),
        Command::Metrics { dir, active_eps, rank_tol, dynamic_range } => {
            metrics(dir, *active_eps, *rank_tol, *dynamic_range)
        }
        Command::Hosvd { input, ranks, out } => hosvd_cmd(input, ranks.as_deref(), out.as_deref()),
        Command::Gen { kind, dims, n, seed, out } => gen(kind, dims, *n, *seed, out),
        Command::DemoRank1 { input, magnitude, out } => demo(input.as_deref(), *magnitude, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

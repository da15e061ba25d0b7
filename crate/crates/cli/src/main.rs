use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use gplab::exec::Execution;
use gplab::gnn::{init_frozen_model, target_embedding, Arch, ModelFile, ModelSettings};
use gplab::graphs::{generate_dataset, write_tu_dataset, DataOperationSpec, DatasetSpec};
use gplab::lab::{
    emit_report, run_experiment, DataOperationSettings, ExperimentConfig, ExperimentName, Format,
};
use gplab::numerics::{sub_vec, RngStream};
use gplab::optim::propagation_gain;
use gplab::theory::{
    fit_chi_fixed_dof, fit_error_distribution, gaussian_projection_samples,
    multi_prompt_upper_bound, single_prompt_lower_bound, subspace_residual_oracle, Family,
    FitReport,
};

#[derive(Parser)]
#[command(
    name = "gplab",
    version,
    about = "Graph prompting lab: prompt training over frozen GNNs and bound checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Write seeded frozen models as JSON.
    GenModel(Common),
    /// Write a synthetic dataset in TU format.
    GenData(Common),
    /// Run one experiment and write its report.
    Run {
        experiment: ExperimentName,
        #[command(flatten)]
        common: Common,
        /// Worker threads; 1 runs sequentially. Defaults to the config, then all cores.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_delimiter = ',', default_values = ["csv", "json"])]
        format: Vec<FormatArg>,
    },
    /// Fit the four error families to a sample.
    FitDist(Common),
    /// Closed-form single- and multi-prompt bounds on a linear model.
    Bounds(Common),
}

fn read_config(path: Option<&Path>) -> Result<Value> {
    match path {
        None => Ok(json!({})),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn parse<T: for<'de> Deserialize<'de>>(value: Value, what: &str) -> Result<T> {
    serde_json::from_value(value).with_context(|| format!("invalid {what} config"))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

#[derive(Deserialize)]
#[serde(default)]
struct GenModelConfig {
    model: ModelSettings,
    count: usize,
    seed: u64,
}

impl Default for GenModelConfig {
    fn default() -> Self {
        GenModelConfig {
            model: ModelSettings::default(),
            count: 1,
            seed: 0,
        }
    }
}

fn gen_model(c: &Common) -> Result<()> {
    let mut cfg: GenModelConfig = parse(read_config(c.config.as_deref())?, "gen-model")?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    create_out(&c.out)?;
    let root = RngStream::new(cfg.seed, 0);
    for i in 0..cfg.count {
        let model = init_frozen_model(&cfg.model, root.derive(i as u64))?;
        let path = c.out.join(format!("model_{i}.json"));
        write_json(
            &path,
            &ModelFile {
                model,
                prompt: None,
            },
        )?;
        println!("{}", path.display());
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(default)]
struct GenDataConfig {
    name: String,
    dataset: DatasetSpec,
    seed: u64,
}

impl Default for GenDataConfig {
    fn default() -> Self {
        GenDataConfig {
            name: "SYNTH".into(),
            dataset: DatasetSpec {
                n_graphs: 100,
                feature_dim: 25,
                n_avg: 20,
                density: 0.15,
            },
            seed: 0,
        }
    }
}

fn gen_data(c: &Common) -> Result<()> {
    let mut cfg: GenDataConfig = parse(read_config(c.config.as_deref())?, "gen-data")?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    let graphs = generate_dataset(&cfg.dataset, RngStream::new(cfg.seed, 0))?;
    write_tu_dataset(&c.out, &cfg.name, &graphs)?;
    println!(
        "{} graphs written to {} as {}_*.txt",
        graphs.len(),
        c.out.display(),
        cfg.name
    );
    Ok(())
}

fn run(
    c: &Common,
    experiment: ExperimentName,
    workers: Option<usize>,
    formats: &[FormatArg],
) -> Result<bool> {
    let mut cfg = ExperimentConfig::from_overrides(experiment, &read_config(c.config.as_deref())?)?;
    if let Some(s) = c.seed {
        cfg.root_seed = s;
    }
    if workers.is_some() {
        cfg.workers = workers;
    }
    let report = run_experiment(&cfg, Execution::from_workers(cfg.workers))?;
    let formats: Vec<Format> = formats
        .iter()
        .map(|f| match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        })
        .collect();
    for path in emit_report(&report, &c.out, &formats)? {
        println!("{}", path.display());
    }
    if !report.complete() {
        eprintln!(
            "{} of {} trials failed",
            report.n_failed,
            report.trials.len()
        );
    }
    Ok(report.complete())
}

#[derive(Deserialize)]
#[serde(default)]
struct ProjectionSamples {
    f: usize,
    r: usize,
    c: f64,
    n: usize,
}

impl Default for ProjectionSamples {
    fn default() -> Self {
        ProjectionSamples {
            f: 25,
            r: 5,
            c: 1.0,
            n: 1000,
        }
    }
}

#[derive(Default, Deserialize)]
#[serde(default)]
struct FitConfig {
    /// Explicit samples.
    samples: Option<Vec<f64>>,
    /// A report JSON written by `run`; its completed trial values are fitted.
    report: Option<PathBuf>,
    /// Otherwise draw `n` projection-residual norms with these parameters.
    synthetic: ProjectionSamples,
    /// Also fit chi with the degrees of freedom fixed at this value.
    fixed_dof: Option<usize>,
    seed: u64,
}

fn fit_dist(c: &Common) -> Result<()> {
    let mut cfg: FitConfig = parse(read_config(c.config.as_deref())?, "fit-dist")?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    let samples = match (&cfg.samples, &cfg.report) {
        (Some(s), _) => s.clone(),
        (None, Some(path)) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let report: Value = serde_json::from_str(&text)?;
            report["trials"]
                .as_array()
                .context("report has no trials")?
                .iter()
                .filter(|t| t["completed"].as_bool() == Some(true))
                .filter_map(|t| t["statistic"].as_f64())
                .filter(|v| *v > 0.0)
                .collect()
        }
        (None, None) => {
            let s = &cfg.synthetic;
            gaussian_projection_samples(s.f, s.r, s.c, s.n, RngStream::new(cfg.seed, 0))?
        }
    };
    let mut fits: Vec<FitReport> = Family::ALL
        .iter()
        .map(|&f| fit_error_distribution(&samples, f))
        .collect::<Result<_, _>>()?;
    let dof = cfg
        .fixed_dof
        .or(if cfg.samples.is_none() && cfg.report.is_none() {
            Some(cfg.synthetic.r)
        } else {
            None
        });
    if let Some(d) = dof {
        fits.push(fit_chi_fixed_dof(&samples, d)?);
    }
    for f in &fits {
        println!(
            "{:<12} fixed_dof={:<5} D={:.4} p={:.4} {:?}",
            f.family.name(),
            f.fixed_dof,
            f.ks_statistic,
            f.p_value,
            f.params
        );
    }
    create_out(&c.out)?;
    write_json(&c.out.join("fits.json"), &fits)?;
    Ok(())
}

#[derive(Deserialize)]
#[serde(default)]
struct BoundsConfig {
    model: ModelSettings,
    dataset: DatasetSpec,
    data_operation: DataOperationSettings,
    tokens: Vec<usize>,
    oracle_iterations: usize,
    seed: u64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            model: ModelSettings {
                arch: Arch::GcnLinear,
                ..ModelSettings::default()
            },
            dataset: DatasetSpec {
                n_graphs: 20,
                feature_dim: 25,
                n_avg: 20,
                density: 0.15,
            },
            data_operation: DataOperationSettings::default(),
            tokens: vec![1, 2, 5, 10, 20],
            oracle_iterations: 500,
            seed: 0,
        }
    }
}

fn bounds(c: &Common) -> Result<()> {
    let mut cfg: BoundsConfig = parse(read_config(c.config.as_deref())?, "bounds")?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if cfg.model.arch != Arch::GcnLinear {
        bail!("closed-form bounds need the gcn_linear architecture");
    }
    cfg.dataset.feature_dim = cfg.model.feature_dim;
    let root = RngStream::new(cfg.seed, 0);
    let model = init_frozen_model(&cfg.model, root.derive(0))?;
    let graphs = generate_dataset(&cfg.dataset, root.derive(1))?;
    let mut offsets = Vec::new();
    let mut gains = Vec::new();
    for (i, g) in graphs.iter().enumerate() {
        let op = &cfg.data_operation;
        let spec = DataOperationSpec {
            intensity: op.intensity,
            enabled_ops: op.ops.clone(),
            add_density: op.add_density,
            rng: root.derive_path(&[2, i as u64]),
        };
        let target = target_embedding(&model, g, &spec)?;
        offsets.push(sub_vec(&target, &model.model_output(g)?));
        gains.push(propagation_gain(&model, g)?);
    }
    let single = single_prompt_lower_bound(&offsets, &gains)?;
    println!(
        "single prompt: J_min={:.6e} rmse_bound={:.6e}",
        single.j_min, single.rmse_bound
    );
    let m = offsets.len() as f64;
    let mut multi = Vec::new();
    for &k in &cfg.tokens {
        let b = multi_prompt_upper_bound(&offsets, k)?;
        let oracle = subspace_residual_oracle(
            &offsets,
            k,
            cfg.oracle_iterations,
            root.derive_path(&[3, k as u64]),
        )?;
        let oracle_eps = (oracle / m).sqrt();
        println!(
            "k={k:<3} eps_star={:.6e} oracle={:.6e}",
            b.epsilon_star, oracle_eps
        );
        multi.push(json!({"k": k, "epsilon_star": b.epsilon_star, "oracle_epsilon": oracle_eps}));
    }
    create_out(&c.out)?;
    write_json(
        &c.out.join("bounds.json"),
        &json!({"seed": cfg.seed, "single_prompt": single, "multi_prompt": multi}),
    )?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::GenModel(c) => gen_model(c).map(|_| true),
        Command::GenData(c) => gen_data(c).map(|_| true),
        Command::Run {
            experiment,
            common,
            workers,
            format,
        } => run(common, *experiment, *workers, format),
        Command::FitDist(c) => fit_dist(c).map(|_| true),
        Command::Bounds(c) => bounds(c).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{Aggregation, ExperimentConfig, ExperimentName, GridAxis};
use crate::error::{Error, Result};
use crate::exec::{map_ordered, Execution};
use crate::gnn::{init_frozen_model, target_embedding, Arch, FrozenModel, ModelSettings};
use crate::graphs::{generate_dataset, read_tu_dataset, DataOperationSpec, DatasetSpec, Graph};
use crate::numerics::{norm, sub_vec, RngStream};
use crate::optim::{linear_gpf_solve, multi_restart_train, propagation_gain, TrialRecord};
use crate::prompts::PromptKind;
use crate::theory::{
    fit_chi_fixed_dof, fit_error_distribution, modulus_estimate, multi_prompt_upper_bound,
    single_prompt_lower_bound, BoundKind, BoundReport, Family, FitReport, MIN_FIT_SAMPLES,
};

// stream tags under the root seed
const MODEL_STREAM: u64 = 1;
const GRAPH_STREAM: u64 = 2;
const TARGET_STREAM: u64 = 3;
const PROMPT_STREAM: u64 = 4;

/// Label used for closed-form rows of the linear experiment.
pub const CLOSED_FORM: &str = "closed_form";

/// One unit of work and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialEntry {
    pub grid_value: String,
    pub prompt_kind: String,
    pub arch: String,
    pub model_index: usize,
    pub repeat_index: usize,
    pub n_graphs: usize,
    pub n_tokens: usize,
    /// `sqrt(mean ‖C(Gᵢ)‖²)` over the trial's graphs.
    #[serde(deserialize_with = "crate::numerics::nonfinite::nan_if_null")]
    pub target_norm: f64,
    /// The trial's value: best `ε` (or RMSE for batches), or the closed-form residual.
    #[serde(deserialize_with = "crate::numerics::nonfinite::nan_if_null")]
    pub statistic: f64,
    /// Closed-form bound for this trial, when the model admits one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(default)]
    pub restart_epsilons: Vec<f64>,
    /// Best restart.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<TrialRecord>,
    pub completed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialEntry {
    pub fn normalized(&self) -> f64 {
        if self.target_norm > 0.0 {
            self.statistic / self.target_norm
        } else {
            f64::NAN
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(deserialize_with = "crate::numerics::nonfinite::nan_if_null")]
    pub mean: f64,
    #[serde(deserialize_with = "crate::numerics::nonfinite::nan_if_null")]
    pub std: f64,
    #[serde(deserialize_with = "crate::numerics::nonfinite::nan_if_null")]
    pub min: f64,
    #[serde(deserialize_with = "crate::numerics::nonfinite::nan_if_null")]
    pub max: f64,
}

impl Summary {
    /// Mean, sample standard deviation (0 for one value), min and max.
    pub fn of(values: &[f64]) -> Summary {
        if values.is_empty() {
            return Summary {
                mean: f64::NAN,
                std: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Summary {
            mean,
            std,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub grid_value: String,
    pub prompt_kind: String,
    pub arch: String,
    pub stat: Summary,
    /// Same aggregation applied to `ε / ‖C(G)‖`.
    pub normalized: Summary,
    pub n_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub experiment: ExperimentName,
    pub config: ExperimentConfig,
    pub rows: Vec<SweepRow>,
    pub trials: Vec<TrialEntry>,
    #[serde(default)]
    pub fits: Vec<FitReport>,
    #[serde(default)]
    pub bounds: Vec<BoundReport>,
    pub n_failed: usize,
}

impl SweepReport {
    pub fn complete(&self) -> bool {
        self.n_failed == 0
    }

    /// Rows rebuilt from the retained trials; equal to `rows` by construction.
    pub fn recompute_rows(&self) -> Vec<SweepRow> {
        aggregate_rows(&self.trials, self.config.aggregation)
    }

    /// Completed-trial values in one row.
    pub fn row_values(&self, grid_value: &str, prompt_kind: &str, arch: &str) -> Vec<f64> {
        self.trials
            .iter()
            .filter(|t| {
                t.completed
                    && t.grid_value == grid_value
                    && t.prompt_kind == prompt_kind
                    && t.arch == arch
            })
            .map(|t| t.statistic)
            .collect()
    }
}

/// Rows in first-appearance order of `(grid_value, prompt_kind, arch)`.
pub fn aggregate_rows(trials: &[TrialEntry], aggregation: Aggregation) -> Vec<SweepRow> {
    let mut order: Vec<(String, String, String)> = Vec::new();
    let mut groups: HashMap<(String, String, String), Vec<&TrialEntry>> = HashMap::new();
    for t in trials.iter().filter(|t| t.completed) {
        let key = (t.grid_value.clone(), t.prompt_kind.clone(), t.arch.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(t);
    }
    order
        .into_iter()
        .map(|key| {
            let members = &groups[&key];
            let collapse = |value: &dyn Fn(&TrialEntry) -> f64| -> Vec<f64> {
                match aggregation {
                    Aggregation::PerTrial => members.iter().map(|t| value(t)).collect(),
                    Aggregation::MaxPerModel | Aggregation::MinPerModel => {
                        let mut models: Vec<usize> =
                            members.iter().map(|t| t.model_index).collect();
                        models.sort_unstable();
                        models.dedup();
                        models
                            .iter()
                            .map(|&m| {
                                let vals = members
                                    .iter()
                                    .filter(|t| t.model_index == m)
                                    .map(|t| value(t));
                                if aggregation == Aggregation::MaxPerModel {
                                    vals.fold(f64::NEG_INFINITY, f64::max)
                                } else {
                                    vals.fold(f64::INFINITY, f64::min)
                                }
                            })
                            .collect()
                    }
                }
            };
            SweepRow {
                stat: Summary::of(&collapse(&|t| t.statistic)),
                // zero targets have no defined ratio and are left out
                normalized: Summary::of(
                    &collapse(&|t| t.normalized())
                        .into_iter()
                        .filter(|v| v.is_finite())
                        .collect::<Vec<_>>(),
                ),
                n_trials: members.len(),
                grid_value: key.0,
                prompt_kind: key.1,
                arch: key.2,
            }
        })
        .collect()
}

/// Where a trial's graphs come from.
enum GraphSource {
    Synthetic,
    Fixed(Vec<Graph>),
}

#[derive(Debug, Clone)]
struct Task {
    grid_index: usize,
    grid_value: String,
    settings: ModelSettings,
    arch_index: usize,
    kind_index: usize,
    kind: PromptKind,
    k: usize,
    n_graphs: usize,
    n_avg: usize,
    model_index: usize,
    repeat_index: usize,
}

fn format_grid(v: f64) -> String {
    format!("{v}")
}

fn build_tasks(cfg: &ExperimentConfig, fixed_dim: Option<usize>) -> Vec<Task> {
    let protocol = cfg.protocol();
    let axis = protocol.grid_axis();
    // (grid label, settings, M, k, n_avg) per grid point
    let mut points = Vec::new();
    for (gi, &g) in cfg.grid.iter().enumerate() {
        let mut settings = cfg.model.clone();
        let mut n_graphs = 1;
        let mut n_avg = cfg.graphs.n_avg;
        let gv = g.round() as usize;
        match axis {
            GridAxis::RankLoss => settings.rank_loss = gv,
            GridAxis::FeatureDim => settings.feature_dim = gv,
            GridAxis::GraphSize => n_avg = gv,
            GridAxis::Layers => settings.n_layers = gv,
            GridAxis::GraphCount => n_graphs = gv,
        }
        if let Some(f) = fixed_dim {
            settings.feature_dim = f;
        }
        if protocol == ExperimentName::TokenGraphSurface {
            for &k in &cfg.token_grid {
                points.push((
                    gi,
                    format!("M={gv};k={k}"),
                    settings.clone(),
                    n_graphs,
                    Some(k),
                    n_avg,
                ));
            }
        } else {
            points.push((gi, format_grid(g), settings, n_graphs, None, n_avg));
        }
    }
    let mut tasks = Vec::new();
    for (point_index, (_gi, label, settings, n_graphs, k, n_avg)) in points.into_iter().enumerate()
    {
        for (ai, &arch) in cfg.archs.iter().enumerate() {
            for (ki, &kind) in cfg.prompt_kinds.iter().enumerate() {
                let k = match kind {
                    PromptKind::Gpf => 1,
                    _ => k.unwrap_or(cfg.n_tokens),
                };
                for m in 0..cfg.n_models {
                    for j in 0..cfg.n_repeats {
                        tasks.push(Task {
                            grid_index: point_index,
                            grid_value: label.clone(),
                            settings: ModelSettings {
                                arch,
                                ..settings.clone()
                            },
                            arch_index: ai,
                            kind_index: ki,
                            kind,
                            k,
                            n_graphs,
                            n_avg,
                            model_index: m,
                            repeat_index: j,
                        });
                    }
                }
            }
        }
    }
    tasks
}

fn trial_graphs(
    cfg: &ExperimentConfig,
    source: &GraphSource,
    task: &Task,
    root: RngStream,
) -> Result<Vec<Graph>> {
    let stream = root.derive_path(&[
        GRAPH_STREAM,
        task.model_index as u64,
        task.repeat_index as u64,
    ]);
    match source {
        GraphSource::Synthetic => generate_dataset(
            &DatasetSpec {
                n_graphs: task.n_graphs,
                feature_dim: task.settings.feature_dim,
                n_avg: task.n_avg,
                density: cfg.graphs.density,
            },
            stream,
        ),
        GraphSource::Fixed(all) => {
            let start = stream.rng().random_range(0..all.len());
            Ok((0..task.n_graphs)
                .map(|i| all[(start + i) % all.len()].clone())
                .collect())
        }
    }
}

fn failed(task: &Task, kind: &str, message: String) -> TrialEntry {
    TrialEntry {
        grid_value: task.grid_value.clone(),
        prompt_kind: kind.to_string(),
        arch: task.settings.arch.name().to_string(),
        model_index: task.model_index,
        repeat_index: task.repeat_index,
        n_graphs: task.n_graphs,
        n_tokens: task.k,
        target_norm: f64::NAN,
        statistic: f64::NAN,
        bound: None,
        restart_epsilons: Vec::new(),
        record: None,
        completed: false,
        error: Some(message),
    }
}

/// Running best, sampled at `points` evenly spaced epochs (always including the last).
fn thin_trace(record: &mut TrialRecord, points: usize) {
    let best = record.best_so_far();
    if best.len() <= points {
        record.loss_trace = best;
        return;
    }
    let last = best.len() - 1;
    let mut idx: Vec<usize> = (0..points)
        .map(|i| i * last / (points - 1).max(1))
        .collect();
    idx.dedup();
    record.loss_trace = idx.into_iter().map(|i| best[i]).collect();
}

fn linear_bound(
    model: &FrozenModel,
    graphs: &[Graph],
    targets: &[Vec<f64>],
    kind: PromptKind,
    k: usize,
) -> Result<Option<f64>> {
    if model.arch() != Arch::GcnLinear {
        return Ok(None);
    }
    // reachable outputs are F(Gᵢ) + λᵢ·(prompt)·W₁⋯Wₙ, so the bounds apply to the offsets
    let mut offsets = Vec::with_capacity(graphs.len());
    let mut gains = Vec::with_capacity(graphs.len());
    for (g, t) in graphs.iter().zip(targets) {
        offsets.push(sub_vec(t, &model.model_output(g)?));
        gains.push(propagation_gain(model, g)?);
    }
    Ok(match kind {
        PromptKind::Gpf => Some(single_prompt_lower_bound(&offsets, &gains)?.rmse_bound),
        PromptKind::GpfPlus => Some(multi_prompt_upper_bound(&offsets, k)?.epsilon_star),
        PromptKind::AllInOne => None,
    })
}

fn run_task(cfg: &ExperimentConfig, source: &GraphSource, task: &Task) -> Vec<TrialEntry> {
    match try_run_task(cfg, source, task) {
        Ok(entries) => entries,
        Err(e) => vec![failed(task, task.kind.name(), e.to_string())],
    }
}

fn try_run_task(
    cfg: &ExperimentConfig,
    source: &GraphSource,
    task: &Task,
) -> Result<Vec<TrialEntry>> {
    let root = RngStream::new(cfg.root_seed, 0);
    let (m, j) = (task.model_index as u64, task.repeat_index as u64);
    let model = init_frozen_model(
        &task.settings,
        root.derive_path(&[MODEL_STREAM, task.arch_index as u64, m]),
    )?;
    let graphs = trial_graphs(cfg, source, task, root)?;
    let targets: Vec<Vec<f64>> = graphs
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let spec = DataOperationSpec {
                intensity: cfg.data_operation.intensity,
                enabled_ops: cfg.data_operation.ops.clone(),
                add_density: cfg.data_operation.add_density,
                rng: root.derive_path(&[TARGET_STREAM, m, j, i as u64]),
            };
            target_embedding(&model, g, &spec)
        })
        .collect::<Result<_>>()?;
    let target_norm =
        (targets.iter().map(|t| norm(t).powi(2)).sum::<f64>() / targets.len() as f64).sqrt();
    let base = TrialEntry {
        grid_value: task.grid_value.clone(),
        prompt_kind: task.kind.name().to_string(),
        arch: task.settings.arch.name().to_string(),
        model_index: task.model_index,
        repeat_index: task.repeat_index,
        n_graphs: graphs.len(),
        n_tokens: task.k,
        target_norm,
        statistic: f64::NAN,
        bound: None,
        restart_epsilons: Vec::new(),
        record: None,
        completed: true,
        error: None,
    };

    let mut entries = Vec::new();
    if cfg.protocol() == ExperimentName::LinearExact && task.kind_index == 0 {
        let sol = linear_gpf_solve(&model, &graphs[0], &targets[0])?;
        entries.push(TrialEntry {
            prompt_kind: CLOSED_FORM.to_string(),
            n_tokens: 1,
            statistic: sol.residual,
            ..base.clone()
        });
    }

    let prompt_stream = root.derive_path(&[
        PROMPT_STREAM,
        task.grid_index as u64,
        task.arch_index as u64,
        task.kind_index as u64,
        m,
        j,
    ]);
    let outcome = multi_restart_train(
        &model,
        &graphs,
        &targets,
        task.kind,
        task.k,
        &cfg.hyperparams,
        prompt_stream,
    )?;
    let mut record = outcome.best_record().clone();
    let completed = record.completed();
    if !cfg.keep_traces {
        thin_trace(&mut record, cfg.trace_points);
    }
    if let serde_json::Value::Object(map) = &mut record.config {
        map.insert("grid_value".into(), json!(task.grid_value));
        map.insert("model_index".into(), json!(task.model_index));
        map.insert("repeat_index".into(), json!(task.repeat_index));
    }
    entries.push(TrialEntry {
        statistic: record.final_epsilon,
        bound: linear_bound(&model, &graphs, &targets, task.kind, task.k)?,
        restart_epsilons: outcome.records.iter().map(|r| r.final_epsilon).collect(),
        completed,
        error: record.diagnostic.clone(),
        record: Some(record),
        ..base
    });
    Ok(entries)
}

fn bound_reports(
    cfg: &ExperimentConfig,
    trials: &[TrialEntry],
    rows: &[SweepRow],
) -> Vec<BoundReport> {
    let mut out = Vec::new();
    for t in trials.iter().filter(|t| t.completed) {
        if let Some(b) = t.bound {
            let kind = if t.prompt_kind == PromptKind::Gpf.name() {
                BoundKind::SinglePromptLower
            } else {
                BoundKind::MultiPromptUpper
            };
            let slack = match kind {
                BoundKind::SinglePromptLower => 1e-6,
                _ => 1e-3,
            };
            out.push(BoundReport::new(
                kind,
                b,
                t.statistic,
                slack,
                json!({
                    "grid_value": t.grid_value, "prompt_kind": t.prompt_kind, "arch": t.arch,
                    "model_index": t.model_index, "repeat_index": t.repeat_index,
                    "n_graphs": t.n_graphs, "n_tokens": t.n_tokens,
                }),
            ));
        }
    }
    if cfg.aggregation == Aggregation::MaxPerModel {
        for row in rows {
            let members: Vec<&TrialEntry> = trials
                .iter()
                .filter(|t| {
                    t.completed
                        && t.grid_value == row.grid_value
                        && t.prompt_kind == row.prompt_kind
                        && t.arch == row.arch
                })
                .collect();
            let eps: Vec<f64> = members.iter().map(|t| t.statistic).collect();
            let norms: Vec<f64> = members.iter().map(|t| t.target_norm).collect();
            if let Ok(mu) = modulus_estimate(&eps, &norms) {
                let worst = eps.iter().copied().fold(0.0, f64::max);
                out.push(BoundReport::new(
                    BoundKind::Modulus,
                    mu,
                    worst,
                    0.0,
                    json!({"grid_value": row.grid_value, "prompt_kind": row.prompt_kind, "arch": row.arch}),
                ));
            }
        }
    }
    out
}

fn distribution_fits(cfg: &ExperimentConfig, trials: &[TrialEntry]) -> Vec<FitReport> {
    let samples: Vec<f64> = trials
        .iter()
        .filter(|t| t.completed && t.statistic > 0.0 && t.statistic.is_finite())
        .map(|t| t.statistic)
        .collect();
    if samples.len() < MIN_FIT_SAMPLES {
        return Vec::new();
    }
    let mut fits: Vec<FitReport> = Family::ALL
        .iter()
        .filter_map(|&f| fit_error_distribution(&samples, f).ok())
        .collect();
    let r = cfg.grid[0].round() as usize;
    if r > 0 {
        if let Ok(fixed) = fit_chi_fixed_dof(&samples, r) {
            fits.push(fixed);
        }
    }
    fits
}

/// Runs every trial of `cfg` on `exec`. Trial failures are recorded in the
/// report (see [`SweepReport::n_failed`]); only configuration and dataset
/// errors abort.
pub fn run_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<SweepReport> {
    cfg.validate()?;
    let protocol = cfg.protocol();
    let (source, fixed_dim) = match (&cfg.name, &cfg.tu) {
        (ExperimentName::TuBenchmark, Some(tu)) => {
            let graphs = read_tu_dataset(&tu.dir, &tu.name)?;
            let dim = graphs
                .first()
                .map(Graph::feature_dim)
                .ok_or_else(|| Error::invalid("TU dataset is empty"))?;
            (GraphSource::Fixed(graphs), Some(dim))
        }
        _ => (GraphSource::Synthetic, None),
    };
    if let GraphSource::Fixed(all) = &source {
        if cfg
            .grid
            .iter()
            .any(|&m| protocol.grid_axis() == GridAxis::GraphCount && m as usize > all.len())
        {
            return Err(Error::invalid("batch size exceeds the dataset"));
        }
    }
    let tasks = build_tasks(cfg, fixed_dim);
    let trials: Vec<TrialEntry> = map_ordered(exec, &tasks, |t| run_task(cfg, &source, t))
        .into_iter()
        .flatten()
        .collect();
    let rows = aggregate_rows(&trials, cfg.aggregation);
    let fits = if protocol == ExperimentName::ErrorDistribution {
        distribution_fits(cfg, &trials)
    } else {
        Vec::new()
    };
    let bounds = bound_reports(cfg, &trials, &rows);
    let n_failed = trials.iter().filter(|t| !t.completed).count();
    Ok(SweepReport {
        experiment: cfg.name,
        config: cfg.clone(),
        rows,
        trials,
        fits,
        bounds,
        n_failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(name: ExperimentName) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default_for(name);
        cfg.model.feature_dim = 4;
        cfg.model.n_layers = 2;
        cfg.graphs.n_avg = 5;
        cfg.n_models = 2;
        cfg.n_repeats = 2;
        cfg.hyperparams.max_epochs = 20;
        cfg.hyperparams.patience = 20;
        cfg.hyperparams.restarts = 2;
        cfg
    }

    #[test]
    fn rows_are_recomputable_and_complete() {
        let mut cfg = tiny(ExperimentName::RankLossSweep);
        cfg.grid = vec![0.0, 2.0];
        let report = run_experiment(&cfg, Execution::Sequential).unwrap();
        assert!(report.complete());
        assert_eq!(report.trials.len(), 2 * 2 * 2 * 2);
        assert_eq!(report.rows.len(), 4);
        assert_eq!(report.rows, report.recompute_rows());
        for row in &report.rows {
            assert_eq!(row.n_trials, 4);
            let vals = report.row_values(&row.grid_value, &row.prompt_kind, &row.arch);
            assert!(row.stat.max <= vals.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
        // thinned traces end at the best loss
        for t in &report.trials {
            let r = t.record.as_ref().unwrap();
            assert_eq!(*r.loss_trace.last().unwrap(), r.final_epsilon);
            assert_eq!(t.restart_epsilons.len(), 2);
        }
    }

    #[test]
    fn single_trial_degenerates_to_one_training() {
        let mut cfg = tiny(ExperimentName::RankLossSweep);
        cfg.grid = vec![1.0];
        cfg.n_models = 1;
        cfg.n_repeats = 1;
        cfg.prompt_kinds = vec![PromptKind::Gpf];
        let report = run_experiment(&cfg, Execution::Sequential).unwrap();
        assert_eq!(report.trials.len(), 1);
        let row = &report.rows[0];
        assert_eq!(row.stat.mean, report.trials[0].statistic);
        assert_eq!(row.stat.std, 0.0);
    }

    #[test]
    fn linear_runs_report_closed_form_and_bounds() {
        let mut cfg = tiny(ExperimentName::LinearExact);
        cfg.n_models = 2;
        cfg.n_repeats = 1;
        let report = run_experiment(&cfg, Execution::Sequential).unwrap();
        assert_eq!(report.trials.len(), 4);
        let closed: Vec<&TrialEntry> = report
            .trials
            .iter()
            .filter(|t| t.prompt_kind == CLOSED_FORM)
            .collect();
        assert_eq!(closed.len(), 2);
        assert!(closed.iter().all(|t| t.statistic < 1e-8));
        assert_eq!(report.bounds.len(), 2);

        let mut cfg = tiny(ExperimentName::TokenGraphSurface);
        cfg.model.arch = Arch::GcnLinear;
        cfg.archs = vec![Arch::GcnLinear];
        cfg.prompt_kinds = vec![PromptKind::GpfPlus];
        cfg.grid = vec![3.0];
        cfg.token_grid = vec![1, 3];
        cfg.n_models = 1;
        cfg.n_repeats = 1;
        let report = run_experiment(&cfg, Execution::Sequential).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.rows[0].grid_value, "M=3;k=1");
        let bounds: Vec<f64> = report.bounds.iter().map(|b| b.theoretical_value).collect();
        assert_eq!(bounds.len(), 2);
        assert!(bounds[0] > 0.0 && bounds[1] == 0.0);
    }

    #[test]
    fn failed_trials_survive_json() {
        let cfg = tiny(ExperimentName::RankLossSweep);
        let task = &build_tasks(&cfg, None)[0];
        let entry = failed(task, "gpf", "boom".into());
        let back: TrialEntry =
            serde_json::from_str(&serde_json::to_string(&entry).unwrap()).unwrap();
        assert!(back.statistic.is_nan() && back.target_norm.is_nan());
        assert_eq!(back.error.as_deref(), Some("boom"));

        let mut cfg = cfg;
        cfg.hyperparams.stop_tol = f64::INFINITY;
        let back: ExperimentConfig =
            serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back.hyperparams.stop_tol, f64::INFINITY);
    }

    #[test]
    fn error_distribution_fits_all_families() {
        let mut cfg = tiny(ExperimentName::ErrorDistribution);
        cfg.grid = vec![2.0];
        cfg.n_models = 4;
        cfg.n_repeats = 10;
        cfg.hyperparams.restarts = 1;
        let report = run_experiment(&cfg, Execution::Sequential).unwrap();
        let families: Vec<Family> = report
            .fits
            .iter()
            .filter(|f| !f.fixed_dof)
            .map(|f| f.family)
            .collect();
        assert_eq!(families, Family::ALL.to_vec());
        assert!(report.fits.iter().any(|f| f.fixed_dof));
    }
}

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::{Arch, ModelSettings};
use crate::graphs::DataOp;
use crate::optim::Hyperparams;
use crate::prompts::PromptKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    Convergence,
    RankLossSweep,
    FeatureDimSweep,
    GraphSizeSweep,
    LayerSweep,
    MinErrorVsGraphs,
    TokenGraphSurface,
    ErrorDistribution,
    LinearExact,
    TuBenchmark,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 10] = [
        ExperimentName::Convergence,
        ExperimentName::RankLossSweep,
        ExperimentName::FeatureDimSweep,
        ExperimentName::GraphSizeSweep,
        ExperimentName::LayerSweep,
        ExperimentName::MinErrorVsGraphs,
        ExperimentName::TokenGraphSurface,
        ExperimentName::ErrorDistribution,
        ExperimentName::LinearExact,
        ExperimentName::TuBenchmark,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentName::Convergence => "convergence",
            ExperimentName::RankLossSweep => "rank_loss_sweep",
            ExperimentName::FeatureDimSweep => "feature_dim_sweep",
            ExperimentName::GraphSizeSweep => "graph_size_sweep",
            ExperimentName::LayerSweep => "layer_sweep",
            ExperimentName::MinErrorVsGraphs => "min_error_vs_graphs",
            ExperimentName::TokenGraphSurface => "token_graph_surface",
            ExperimentName::ErrorDistribution => "error_distribution",
            ExperimentName::LinearExact => "linear_exact",
            ExperimentName::TuBenchmark => "tu_benchmark",
        }
    }

    /// Which model/dataset knob the one-dimensional grid sets.
    pub fn grid_axis(self) -> GridAxis {
        match self {
            ExperimentName::Convergence
            | ExperimentName::RankLossSweep
            | ExperimentName::ErrorDistribution
            | ExperimentName::LinearExact
            | ExperimentName::TuBenchmark => GridAxis::RankLoss,
            ExperimentName::FeatureDimSweep => GridAxis::FeatureDim,
            ExperimentName::GraphSizeSweep => GridAxis::GraphSize,
            ExperimentName::LayerSweep => GridAxis::Layers,
            ExperimentName::MinErrorVsGraphs | ExperimentName::TokenGraphSurface => {
                GridAxis::GraphCount
            }
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentName::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAxis {
    RankLoss,
    FeatureDim,
    GraphSize,
    Layers,
    GraphCount,
}

/// How per-trial values collapse into one number per grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Every trial is a sample.
    PerTrial,
    /// Max over repeats within each model; statistics across models.
    MaxPerModel,
    /// Min over repeats within each model; statistics across models.
    MinPerModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataOperationSettings {
    pub intensity: f64,
    pub ops: Vec<DataOp>,
    pub add_density: f64,
}

impl Default for DataOperationSettings {
    fn default() -> Self {
        DataOperationSettings {
            intensity: 0.7,
            ops: vec![DataOp::DeleteNode, DataOp::DeleteEdge, DataOp::MaskFeature],
            add_density: 0.15,
        }
    }
}

/// Synthetic graph generation; the feature dimension follows the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphSettings {
    /// Node counts are uniform on `[ceil(n_avg / 2), floor(3 n_avg / 2)]`.
    pub n_avg: usize,
    pub density: f64,
}

impl Default for GraphSettings {
    fn default() -> Self {
        GraphSettings {
            n_avg: 20,
            density: 0.15,
        }
    }
}

/// Graphs drawn from a TU-format dataset instead of the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuSource {
    pub dir: PathBuf,
    pub name: String,
    /// The protocol to run on the real graphs; batch protocols are not supported.
    #[serde(default = "default_tu_base")]
    pub base: ExperimentName,
}

fn default_tu_base() -> ExperimentName {
    ExperimentName::RankLossSweep
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: ExperimentName,
    pub root_seed: u64,
    pub model: ModelSettings,
    pub graphs: GraphSettings,
    pub prompt_kinds: Vec<PromptKind>,
    pub archs: Vec<Arch>,
    /// Tokens per prompt outside of `token_graph_surface`.
    pub n_tokens: usize,
    pub hyperparams: Hyperparams,
    pub grid: Vec<f64>,
    /// Second axis (token counts) of `token_graph_surface`.
    pub token_grid: Vec<usize>,
    pub n_models: usize,
    pub n_repeats: usize,
    pub aggregation: Aggregation,
    pub data_operation: DataOperationSettings,
    /// Keep full loss traces; otherwise traces are thinned to the running best.
    pub keep_traces: bool,
    pub trace_points: usize,
    pub histogram_bins: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tu: Option<TuSource>,
}

impl ExperimentConfig {
    /// Desk-scale defaults for each experiment.
    pub fn default_for(name: ExperimentName) -> Self {
        let mut cfg = ExperimentConfig {
            name,
            root_seed: 0,
            model: ModelSettings::default(),
            graphs: GraphSettings::default(),
            prompt_kinds: vec![PromptKind::Gpf, PromptKind::AllInOne],
            archs: vec![Arch::Gcn],
            n_tokens: 1,
            hyperparams: Hyperparams {
                learning_rate: 1e-2,
                ..Hyperparams::default()
            },
            grid: vec![0.0],
            token_grid: vec![1],
            n_models: 5,
            n_repeats: 30,
            aggregation: Aggregation::MaxPerModel,
            data_operation: DataOperationSettings::default(),
            keep_traces: false,
            trace_points: 50,
            histogram_bins: 30,
            workers: None,
            tu: None,
        };
        match name {
            ExperimentName::Convergence => {
                cfg.archs = vec![Arch::Gcn, Arch::Gat];
                cfg.hyperparams.max_epochs = 5000;
                cfg.hyperparams.patience = 500;
                cfg.hyperparams.restarts = 1;
                cfg.n_models = 5;
                cfg.n_repeats = 2;
                cfg.aggregation = Aggregation::PerTrial;
                cfg.keep_traces = true;
            }
            ExperimentName::RankLossSweep => {
                cfg.grid = (0..=10).map(f64::from).collect();
            }
            ExperimentName::FeatureDimSweep => {
                cfg.model.rank_loss = 5;
                cfg.grid = vec![10.0, 15.0, 20.0, 25.0, 30.0];
            }
            ExperimentName::GraphSizeSweep => {
                cfg.model.rank_loss = 5;
                cfg.grid = vec![10.0, 20.0, 30.0, 40.0];
            }
            ExperimentName::LayerSweep => {
                cfg.model.rank_loss = 5;
                cfg.grid = vec![1.0, 2.0, 3.0, 4.0];
            }
            ExperimentName::MinErrorVsGraphs => {
                cfg.prompt_kinds = vec![PromptKind::Gpf];
                cfg.grid = vec![1.0, 5.0, 10.0, 20.0, 40.0];
                cfg.aggregation = Aggregation::MinPerModel;
                cfg.n_repeats = 3;
            }
            ExperimentName::TokenGraphSurface => {
                cfg.prompt_kinds = vec![PromptKind::GpfPlus, PromptKind::AllInOne];
                cfg.grid = vec![5.0, 10.0, 20.0, 40.0];
                cfg.token_grid = vec![1, 2, 5, 10, 20];
                cfg.aggregation = Aggregation::MinPerModel;
                cfg.n_repeats = 3;
            }
            ExperimentName::ErrorDistribution => {
                cfg.prompt_kinds = vec![PromptKind::Gpf];
                cfg.grid = vec![5.0];
                cfg.n_repeats = 40;
                cfg.aggregation = Aggregation::PerTrial;
            }
            ExperimentName::LinearExact => {
                cfg.model.arch = Arch::GcnLinear;
                cfg.archs = vec![Arch::GcnLinear];
                cfg.prompt_kinds = vec![PromptKind::Gpf];
                cfg.n_models = 20;
                cfg.n_repeats = 1;
                cfg.hyperparams.weight_decay = 0.0;
                // ill-conditioned weight products converge slowly
                cfg.hyperparams.max_epochs = 200_000;
                cfg.hyperparams.patience = 5000;
                cfg.hyperparams.restarts = 1;
                cfg.hyperparams.learning_rate = 3e-2;
                cfg.aggregation = Aggregation::PerTrial;
            }
            ExperimentName::TuBenchmark => {
                cfg.grid = (0..=10).map(f64::from).collect();
                cfg.tu = Some(TuSource {
                    dir: PathBuf::from("data"),
                    name: "NCI1".into(),
                    base: ExperimentName::RankLossSweep,
                });
            }
        }
        cfg
    }

    /// Defaults for `name`, overridden field by field (recursively) by `overrides`.
    pub fn from_overrides(name: ExperimentName, overrides: &serde_json::Value) -> Result<Self> {
        let mut base = serde_json::to_value(Self::default_for(name))?;
        merge(&mut base, overrides);
        base["name"] = serde_json::Value::String(name.name().into());
        let cfg: ExperimentConfig = serde_json::from_value(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses a JSON config whose `name` field picks the defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let name = v
            .get("name")
            .and_then(|n| n.as_str())
            .ok_or_else(|| Error::invalid("config needs a \"name\" field"))?
            .parse()?;
        Self::from_overrides(name, &v)
    }

    /// Protocol actually executed (the base protocol for TU runs).
    pub fn protocol(&self) -> ExperimentName {
        match (&self.name, &self.tu) {
            (ExperimentName::TuBenchmark, Some(tu)) => tu.base,
            (name, _) => *name,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::invalid("experiment grid is empty"));
        }
        if self.grid.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::invalid("grid values must be finite and nonnegative"));
        }
        if self.n_models == 0 || self.n_repeats == 0 || self.n_tokens == 0 {
            return Err(Error::invalid(
                "n_models, n_repeats and n_tokens must be at least 1",
            ));
        }
        if self.prompt_kinds.is_empty() || self.archs.is_empty() {
            return Err(Error::invalid(
                "at least one prompt kind and one architecture are required",
            ));
        }
        if self.name == ExperimentName::TokenGraphSurface
            && (self.token_grid.is_empty() || self.token_grid.contains(&0))
        {
            return Err(Error::invalid(
                "token grid must be nonempty with positive entries",
            ));
        }
        if self.name == ExperimentName::TuBenchmark {
            let tu = self
                .tu
                .as_ref()
                .ok_or_else(|| Error::invalid("tu_benchmark needs a tu source"))?;
            if matches!(
                tu.base,
                ExperimentName::TuBenchmark
                    | ExperimentName::FeatureDimSweep
                    | ExperimentName::GraphSizeSweep
            ) {
                return Err(Error::invalid(format!(
                    "{} cannot run on a fixed dataset",
                    tu.base
                )));
            }
        }
        if let GridAxis::GraphCount
        | GridAxis::GraphSize
        | GridAxis::FeatureDim
        | GridAxis::Layers = self.protocol().grid_axis()
        {
            if self.grid.iter().any(|&g| g < 1.0) {
                return Err(Error::invalid(
                    "grid values must be at least 1 for this experiment",
                ));
            }
        }
        if self.name != ExperimentName::TuBenchmark {
            let axis = self.protocol().grid_axis();
            let bad = self.grid.iter().any(|&g| {
                let (r, f) = match axis {
                    GridAxis::RankLoss => (g as usize, self.model.feature_dim),
                    GridAxis::FeatureDim => (self.model.rank_loss, g as usize),
                    _ => (self.model.rank_loss, self.model.feature_dim),
                };
                r >= f
            });
            if bad {
                return Err(Error::invalid(
                    "rank loss must be below the feature dim at every grid point",
                ));
            }
        }
        if self.histogram_bins == 0 || self.trace_points == 0 {
            return Err(Error::invalid(
                "histogram_bins and trace_points must be positive",
            ));
        }
        if self.graphs.n_avg == 0 || !(self.graphs.density > 0.0 && self.graphs.density < 1.0) {
            return Err(Error::invalid(
                "graphs need n_avg >= 1 and density in (0, 1)",
            ));
        }
        self.hyperparams.validate()?;
        Ok(())
    }
}

fn merge(base: &mut serde_json::Value, overrides: &serde_json::Value) {
    match (base, overrides) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

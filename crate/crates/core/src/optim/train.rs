use serde::{Deserialize, Serialize};
use serde_json::json;

use super::grad::value_and_gradient;
use crate::error::{Error, Result};
use crate::gnn::FrozenModel;
use crate::graphs::Graph;
use crate::numerics::RngStream;
use crate::prompts::{init_prompt, Prompt, PromptKind};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
/// Minimum drop in best loss that counts as progress for the patience window.
const MIN_IMPROVEMENT: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub restarts: usize,
    /// Stop once the loss drops below this. A non-finite value disables the check.
    #[serde(deserialize_with = "crate::numerics::nonfinite::inf_if_null")]
    pub stop_tol: f64,
    pub patience: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            learning_rate: 1e-4,
            weight_decay: 5e-5,
            max_epochs: 2000,
            restarts: 3,
            stop_tol: 1e-8,
            patience: 100,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::invalid(format!(
                "weight decay {} must be nonnegative",
                self.weight_decay
            )));
        }
        if self.max_epochs == 0 || self.restarts == 0 || self.patience == 0 {
            return Err(Error::invalid(
                "max_epochs, restarts and patience must be at least 1",
            ));
        }
        if self.patience > self.max_epochs {
            return Err(Error::invalid(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        if self.stop_tol.is_nan() || self.stop_tol < 0.0 {
            return Err(Error::invalid("stop_tol must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Converged,
    Stalled,
    MaxEpochs,
    Diverged,
}

/// One training run. Losses are `sqrt(Σ εᵢ² / M)`, i.e. `ε` for a single graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: RngStream,
    pub config: serde_json::Value,
    pub loss_trace: Vec<f64>,
    /// Best loss seen; `NaN` only if the very first evaluation diverged.
    #[serde(deserialize_with = "crate::numerics::nonfinite::nan_if_null")]
    pub final_epsilon: f64,
    pub epochs_run: usize,
    pub status: TrialStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl TrialRecord {
    pub fn completed(&self) -> bool {
        self.status != TrialStatus::Diverged
    }

    /// Running minimum of the loss trace.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.loss_trace
            .iter()
            .map(|&l| {
                best = best.min(l);
                best
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub record: TrialRecord,
    /// Best-iterate parameters.
    pub prompt: Prompt,
}

#[derive(Debug, Clone)]
pub struct MultiRestartOutcome {
    pub best: usize,
    pub records: Vec<TrialRecord>,
    pub best_prompt: Prompt,
}

impl MultiRestartOutcome {
    pub fn best_record(&self) -> &TrialRecord {
        &self.records[self.best]
    }
}

fn check_inputs(model: &FrozenModel, graphs: &[Graph], targets: &[Vec<f64>]) -> Result<()> {
    if graphs.is_empty() {
        return Err(Error::invalid("training needs at least one graph"));
    }
    if graphs.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} graphs but {} targets",
            graphs.len(),
            targets.len()
        )));
    }
    let f = model.feature_dim();
    for (i, (g, t)) in graphs.iter().zip(targets).enumerate() {
        if g.feature_dim() != f || t.len() != f {
            return Err(Error::Shape(format!(
                "graph {i} or its target does not have dimension {f}"
            )));
        }
    }
    Ok(())
}

/// Adam on a freshly initialized prompt of the given kind.
pub fn train_prompt(
    model: &FrozenModel,
    graphs: &[Graph],
    targets: &[Vec<f64>],
    kind: PromptKind,
    k: usize,
    hp: &Hyperparams,
    rng: RngStream,
) -> Result<TrainOutcome> {
    check_inputs(model, graphs, targets)?;
    let counts: Vec<usize> = graphs.iter().map(Graph::n_nodes).collect();
    let prompt = init_prompt(kind, k, model.feature_dim(), graphs.len(), &counts, rng)?;
    train_from(model, graphs, targets, prompt, hp, rng)
}

/// Adam from a given starting prompt; `rng` is only recorded.
pub fn train_from(
    model: &FrozenModel,
    graphs: &[Graph],
    targets: &[Vec<f64>],
    mut prompt: Prompt,
    hp: &Hyperparams,
    rng: RngStream,
) -> Result<TrainOutcome> {
    check_inputs(model, graphs, targets)?;
    hp.validate()?;
    let config = json!({
        "prompt_kind": prompt.kind().name(),
        "k": prompt.n_tokens(),
        "arch": model.arch().name(),
        "feature_dim": model.feature_dim(),
        "n_layers": model.layers().len(),
        "rank_loss": model.rank_loss(),
        "n_graphs": graphs.len(),
        "hyperparams": hp,
    });

    let mut theta = prompt.params();
    let mut best_theta = theta.clone();
    let mut m1 = vec![0.0; theta.len()];
    let mut m2 = vec![0.0; theta.len()];
    let mut trace = Vec::with_capacity(hp.max_epochs.min(1 << 16));
    let mut best = f64::INFINITY;
    let mut window_start_best = f64::INFINITY;
    let mut window_start = 0;
    let mut status = TrialStatus::MaxEpochs;
    let mut diagnostic = None;

    for epoch in 0..hp.max_epochs {
        prompt.set_params(&theta)?;
        let step = value_and_gradient(model, &prompt, graphs, targets);
        let (loss, grad) = match step {
            Ok((l, g)) if l.is_finite() && g.iter().all(|v| v.is_finite()) => (l.sqrt(), g),
            Ok(_) => {
                status = TrialStatus::Diverged;
                diagnostic = Some(format!("non-finite loss or gradient at epoch {epoch}"));
                break;
            }
            Err(Error::NonFinite(msg)) => {
                status = TrialStatus::Diverged;
                diagnostic = Some(format!("epoch {epoch}: {msg}"));
                break;
            }
            Err(e) => return Err(e),
        };
        trace.push(loss);
        if loss < best {
            best = loss;
            best_theta.clone_from(&theta);
        }
        if hp.stop_tol.is_finite() && loss < hp.stop_tol {
            status = TrialStatus::Converged;
            break;
        }
        if epoch + 1 - window_start >= hp.patience {
            if window_start_best - best <= MIN_IMPROVEMENT && window_start_best.is_finite() {
                status = TrialStatus::Stalled;
                break;
            }
            window_start = epoch + 1;
            window_start_best = best;
        }
        if epoch + 1 == hp.max_epochs {
            break;
        }

        let t = (epoch + 1) as f64;
        let c1 = 1.0 - ADAM_BETA1.powf(t);
        let c2 = 1.0 - ADAM_BETA2.powf(t);
        for i in 0..theta.len() {
            m1[i] = ADAM_BETA1 * m1[i] + (1.0 - ADAM_BETA1) * grad[i];
            m2[i] = ADAM_BETA2 * m2[i] + (1.0 - ADAM_BETA2) * grad[i] * grad[i];
            let update = (m1[i] / c1) / ((m2[i] / c2).sqrt() + ADAM_EPS);
            theta[i] -= hp.learning_rate * (update + hp.weight_decay * theta[i]);
        }
    }

    prompt.set_params(&best_theta)?;
    let epochs_run = trace.len();
    let final_epsilon = if best.is_finite() { best } else { f64::NAN };
    Ok(TrainOutcome {
        record: TrialRecord {
            seed: rng,
            config,
            loss_trace: trace,
            final_epsilon,
            epochs_run,
            status,
            diagnostic,
        },
        prompt,
    })
}

/// `hp.restarts` independent runs from streams `rng.derive(i)`; keeps the
/// lowest final loss (earliest on ties, diverged runs last).
pub fn multi_restart_train(
    model: &FrozenModel,
    graphs: &[Graph],
    targets: &[Vec<f64>],
    kind: PromptKind,
    k: usize,
    hp: &Hyperparams,
    rng: RngStream,
) -> Result<MultiRestartOutcome> {
    hp.validate()?;
    let mut records = Vec::with_capacity(hp.restarts);
    let mut best: Option<(usize, f64, Prompt)> = None;
    for i in 0..hp.restarts {
        let out = train_prompt(model, graphs, targets, kind, k, hp, rng.derive(i as u64))?;
        let eps = out.record.final_epsilon;
        let better = match &best {
            None => true,
            Some((_, b, _)) => eps < *b || (b.is_nan() && !eps.is_nan()),
        };
        if better {
            best = Some((i, eps, out.prompt));
        }
        records.push(out.record);
    }
    let (best, _, best_prompt) = best.expect("restarts >= 1");
    Ok(MultiRestartOutcome {
        best,
        records,
        best_prompt,
    })
}

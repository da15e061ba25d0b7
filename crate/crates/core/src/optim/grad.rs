use crate::error::{Error, Result};
use crate::gnn::FrozenModel;
use crate::graphs::Graph;
use crate::numerics::{norm, sub_vec};
use crate::prompts::Prompt;

fn check_batch(graphs: &[Graph], targets: &[Vec<f64>]) -> Result<()> {
    if graphs.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    if graphs.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} graphs but {} targets",
            graphs.len(),
            targets.len()
        )));
    }
    Ok(())
}

/// Training objective `L = Σ εᵢ² / M` (just `ε²` for one graph).
pub fn objective(
    model: &FrozenModel,
    prompt: &Prompt,
    graphs: &[Graph],
    targets: &[Vec<f64>],
) -> Result<f64> {
    check_batch(graphs, targets)?;
    let mut total = 0.0;
    for (i, (g, t)) in graphs.iter().zip(targets).enumerate() {
        let out = model.model_output(&prompt.apply(g, i)?.graph)?;
        total += sub_vec(&out, t).iter().map(|r| r * r).sum::<f64>();
    }
    Ok(total / graphs.len() as f64)
}

/// `L` and `∂L/∂ω` by one forward and one reverse pass per graph.
pub fn value_and_gradient(
    model: &FrozenModel,
    prompt: &Prompt,
    graphs: &[Graph],
    targets: &[Vec<f64>],
) -> Result<(f64, Vec<f64>)> {
    check_batch(graphs, targets)?;
    let m = graphs.len() as f64;
    let mut grad = vec![0.0; prompt.n_params()];
    let mut total = 0.0;
    for (i, (g, t)) in graphs.iter().zip(targets).enumerate() {
        if t.len() != model.feature_dim() {
            return Err(Error::Shape(format!("target {i} has length {}", t.len())));
        }
        let pg = prompt.apply(g, i)?;
        let tape = model.forward_tape(&pg.graph)?;
        let residual = sub_vec(&tape.output, t);
        total += residual.iter().map(|r| r * r).sum::<f64>();
        let d_out: Vec<f64> = residual.iter().map(|r| 2.0 * r / m).collect();
        let g_grad = model.backward(&tape, &pg.graph, &d_out)?;
        prompt.accumulate_gradient(i, &pg, &g_grad, &mut grad)?;
    }
    Ok((total / m, grad))
}

/// Exact `∂L/∂ω` for `L = Σ εᵢ² / M`.
pub fn prompt_gradient(
    model: &FrozenModel,
    prompt: &Prompt,
    graphs: &[Graph],
    targets: &[Vec<f64>],
) -> Result<Vec<f64>> {
    Ok(value_and_gradient(model, prompt, graphs, targets)?.1)
}

/// Central differences of `L`, one parameter at a time.
pub fn finite_diff_gradient(
    model: &FrozenModel,
    prompt: &Prompt,
    graphs: &[Graph],
    targets: &[Vec<f64>],
    step: f64,
) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let base = prompt.params();
    let mut probe = prompt.clone();
    let mut out = Vec::with_capacity(base.len());
    for k in 0..base.len() {
        let mut theta = base.clone();
        theta[k] = base[k] + step;
        probe.set_params(&theta)?;
        let plus = objective(model, &probe, graphs, targets)?;
        theta[k] = base[k] - step;
        probe.set_params(&theta)?;
        let minus = objective(model, &probe, graphs, targets)?;
        out.push((plus - minus) / (2.0 * step));
    }
    Ok(out)
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        norm(&sub_vec(a, b)) / scale
    }
}

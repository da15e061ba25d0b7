use crate::error::{Error, Result};
use crate::gnn::FrozenModel;
use crate::numerics::{norm, sub_vec};
use crate::prompts::PromptedGraph;

/// `ε = ‖F(G_p) − C(G)‖`.
pub fn epsilon_loss(model: &FrozenModel, pg: &PromptedGraph, target: &[f64]) -> Result<f64> {
    if target.len() != model.feature_dim() {
        return Err(Error::Shape(format!(
            "target has length {}, model outputs {}",
            target.len(),
            model.feature_dim()
        )));
    }
    let out = model.model_output(&pg.graph)?;
    Ok(norm(&sub_vec(&out, target)))
}

/// `sqrt(Σ εᵢ² / M)`.
pub fn batch_rmse_loss(
    model: &FrozenModel,
    prompted: &[PromptedGraph],
    targets: &[Vec<f64>],
) -> Result<f64> {
    if prompted.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    if prompted.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} graphs but {} targets",
            prompted.len(),
            targets.len()
        )));
    }
    let mut total = 0.0;
    for (pg, t) in prompted.iter().zip(targets) {
        total += epsilon_loss(model, pg, t)?.powi(2);
    }
    Ok((total / prompted.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::{Arch, Readout};
    use crate::graphs::{DiffusionScheme, Graph};
    use crate::numerics::Matrix;

    fn unit_model() -> FrozenModel {
        FrozenModel::from_layers(
            Arch::GcnLinear,
            vec![Matrix::identity(2)],
            0.2,
            Readout::Mean,
            DiffusionScheme::RawSelfLoop,
        )
        .unwrap()
    }

    fn zero_node() -> PromptedGraph {
        PromptedGraph {
            graph: Graph::edgeless(Matrix::zeros(1, 2)).unwrap(),
            n_original: 1,
        }
    }

    #[test]
    fn epsilon_examples() {
        let m = unit_model();
        assert_eq!(epsilon_loss(&m, &zero_node(), &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(epsilon_loss(&m, &zero_node(), &[0.0, 0.0]).unwrap(), 0.0);
        assert!(epsilon_loss(&m, &zero_node(), &[0.0]).is_err());
    }

    #[test]
    fn rmse_examples() {
        let m = unit_model();
        let single = batch_rmse_loss(&m, &[zero_node()], &[vec![3.0, 4.0]]).unwrap();
        assert_eq!(single, 5.0);
        let two = batch_rmse_loss(
            &m,
            &[zero_node(), zero_node()],
            &[vec![3.0, 0.0], vec![0.0, 4.0]],
        )
        .unwrap();
        assert!((two - 3.5355339059327378).abs() < 1e-12);
        assert!(batch_rmse_loss(&m, &[], &[]).is_err());
        assert!(batch_rmse_loss(&m, &[zero_node()], &[]).is_err());
    }
}

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::model::MlpModel;
use crate::error::{Error, Result};

/// Lower clamp applied to predictions before taking logs in the BCE term.
pub const BCE_CLAMP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// Σ over outputs of the squared error, averaged over rows.
    Mse,
    /// −[y log p + (1−y) log(1−p)] summed over outputs, averaged over rows.
    Bce,
}

/// Binary cross-entropy of one prediction with the clamp applied.
pub fn bce(pred: f64, target: f64) -> f64 {
    let p = pred.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}

/// Data term and its gradient with respect to `pred`, without any
/// regularization.
pub fn data_loss(kind: LossKind, pred: &Array2<f64>, target: &Array2<f64>) -> Result<(f64, Array2<f64>)> {
    if pred.dim() != target.dim() {
        return Err(Error::Shape(format!(
            "prediction {:?} and target {:?} differ",
            pred.dim(),
            target.dim()
        )));
    }
    let n = pred.nrows();
    if n == 0 {
        return Err(Error::Shape("empty batch".into()));
    }
    let inv_n = 1.0 / n as f64;
    match kind {
        LossKind::Mse => {
            let err = pred - target;
            let loss = err.iter().map(|e| e * e).sum::<f64>() * inv_n;
            Ok((loss, err * (2.0 * inv_n)))
        }
        LossKind::Bce => {
            let mut loss = 0.0;
            let mut grad = Array2::zeros(pred.dim());
            for ((g, &p), &y) in grad.iter_mut().zip(pred.iter()).zip(target.iter()) {
                loss += bce(p, y);
                let pc = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
                *g = (pc - y) / (pc * (1.0 - pc)) * inv_n;
            }
            Ok((loss * inv_n, grad))
        }
    }
}

/// Data term plus `l2_lambda · Σ‖W‖²` over the model's dense weights. The
/// returned gradient covers the data term only; the weight-decay gradient is
/// applied by the optimizer.
pub fn loss_and_grad(
    kind: LossKind,
    pred: &Array2<f64>,
    target: &Array2<f64>,
    model: &MlpModel,
    l2_lambda: f64,
) -> Result<(f64, Array2<f64>)> {
    let (data, grad) = data_loss(kind, pred, target)?;
    let reg = if l2_lambda == 0.0 {
        0.0
    } else {
        l2_lambda * model.weight_sq_norm()
    };
    Ok((data + reg, grad))
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;
    use crate::nn::LayerSpec;

    fn model() -> MlpModel {
        MlpModel::init(&[LayerSpec::dense(2, 1)], 3).unwrap()
    }

    #[test]
    fn bce_at_half_is_ln_two() {
        let (l, _) = loss_and_grad(LossKind::Bce, &array![[0.5]], &array![[1.0]], &model(), 0.0).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn mse_of_exact_prediction_is_zero() {
        let p = array![[0.3, -1.0], [2.0, 0.0]];
        let (l, g) = loss_and_grad(LossKind::Mse, &p, &p, &model(), 0.0).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bce_is_finite_at_the_edges() {
        let (l, g) = data_loss(LossKind::Bce, &array![[0.0, 1.0]], &array![[1.0, 0.0]]).unwrap();
        assert!(l.is_finite() && g.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn bce_gradient_matches_central_differences() {
        let pred = array![[0.2, 0.7], [0.55, 0.9], [0.01, 0.4]];
        let target = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let (_, grad) = data_loss(LossKind::Bce, &pred, &target).unwrap();
        let eps = 1e-6;
        for idx in 0..pred.len() {
            let (r, c) = (idx / 2, idx % 2);
            let mut plus = pred.clone();
            plus[[r, c]] += eps;
            let mut minus = pred.clone();
            minus[[r, c]] -= eps;
            let fd = (data_loss(LossKind::Bce, &plus, &target).unwrap().0
                - data_loss(LossKind::Bce, &minus, &target).unwrap().0)
                / (2.0 * eps);
            let rel = (fd - grad[[r, c]]).abs() / fd.abs().max(grad[[r, c]].abs());
            assert!(rel < 1e-4, "entry {idx}: {rel}");
        }
    }

    #[test]
    fn l2_term_adds_exactly() {
        let m = model();
        let p = array![[0.1], [0.4]];
        let t = array![[0.0], [1.0]];
        let lambda = 0.37;
        let (l0, _) = loss_and_grad(LossKind::Mse, &p, &t, &m, 0.0).unwrap();
        let (l1, _) = loss_and_grad(LossKind::Mse, &p, &t, &m, lambda).unwrap();
        // exact up to the rounding of the final addition
        let expected = lambda * m.weight_sq_norm();
        assert!((l1 - l0 - expected).abs() <= 2.0 * f64::EPSILON * l1.abs());
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        assert!(data_loss(LossKind::Mse, &array![[1.0, 2.0]], &array![[1.0]]).is_err());
    }
}

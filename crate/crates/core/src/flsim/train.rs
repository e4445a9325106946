//! Local minibatch SGD and update aggregation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::data::{LocalDataset, ModelState, Sample};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("model diverged: non-finite weight after epoch {epoch}")]
    NonFinite { epoch: usize },
    #[error("cannot train on an empty dataset")]
    EmptyDataset,
    #[error("model has {model} weights but samples have {data} features")]
    DimensionMismatch { model: usize, data: usize },
}

/// Per-sample loss with an accumulating gradient.
pub trait Loss: Send + Sync {
    fn loss(&self, weights: &[f64], sample: &Sample) -> f64;
    /// Adds the gradient at `sample` into `out`.
    fn grad_into(&self, weights: &[f64], sample: &Sample, out: &mut [f64]);
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

// log(1 + e^z) without overflow for large |z|.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Binary cross-entropy on a sigmoid score; labels in {0, 1}.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogisticLoss;

impl Loss for LogisticLoss {
    fn loss(&self, weights: &[f64], sample: &Sample) -> f64 {
        let z = dot(weights, &sample.features);
        softplus(z) - sample.label * z
    }

    fn grad_into(&self, weights: &[f64], sample: &Sample, out: &mut [f64]) {
        let z = dot(weights, &sample.features);
        let p = 1.0 / (1.0 + (-z).exp());
        let factor = p - sample.label;
        for (o, x) in out.iter_mut().zip(&sample.features) {
            *o += factor * x;
        }
    }
}

/// Squared error `(w.x - y)^2 / 2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SquaredLoss;

impl Loss for SquaredLoss {
    fn loss(&self, weights: &[f64], sample: &Sample) -> f64 {
        let r = dot(weights, &sample.features) - sample.label;
        0.5 * r * r
    }

    fn grad_into(&self, weights: &[f64], sample: &Sample, out: &mut [f64]) {
        let r = dot(weights, &sample.features) - sample.label;
        for (o, x) in out.iter_mut().zip(&sample.features) {
            *o += r * x;
        }
    }
}

/// The message a satellite sends back after local training.
#[derive(Debug, Clone)]
pub struct LocalUpdate {
    pub weights: Vec<f64>,
    pub data_size: usize,
}

/// Runs `epochs` passes of shuffled minibatch SGD from `model` and
/// returns the trained weights. The shuffle order is fully determined by
/// `seed`. A zero learning rate leaves the weights exactly unchanged.
pub fn local_train(
    model: &ModelState,
    data: &LocalDataset,
    loss: &dyn Loss,
    epochs: usize,
    batch_size: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<LocalUpdate, TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if data.dim() != model.dim() {
        return Err(TrainError::DimensionMismatch { model: model.dim(), data: data.dim() });
    }
    let mut weights = model.weights.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batch = batch_size.max(1);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad = vec![0.0; weights.len()];
    for epoch in 0..epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in chunk {
                loss.grad_into(&weights, &data.samples[i], &mut grad);
            }
            let step = learning_rate / chunk.len() as f64;
            for (w, g) in weights.iter_mut().zip(&grad) {
                *w -= step * *g;
            }
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(TrainError::NonFinite { epoch });
        }
    }
    Ok(LocalUpdate { weights, data_size: data.len() })
}

/// Combines updates into the next global model. By default each update is
/// weighted by its share of the participating data; `by_participants`
/// switches to a plain average. No updates yields the zero model.
pub fn aggregate(updates: &[LocalUpdate], dim: usize, by_participants: bool) -> ModelState {
    let mut weights = vec![0.0; dim];
    if updates.is_empty() {
        return ModelState { weights };
    }
    let total_data: f64 = updates.iter().map(|u| u.data_size as f64).sum();
    for update in updates {
        let share = if by_participants {
            1.0 / updates.len() as f64
        } else {
            update.data_size as f64 / total_data
        };
        for (w, u) in weights.iter_mut().zip(&update.weights) {
            *w += share * u;
        }
    }
    ModelState { weights }
}

/// Sum of per-sample losses over one dataset, with the sample count.
pub fn dataset_loss(model: &ModelState, data: &LocalDataset, loss: &dyn Loss) -> (f64, usize) {
    let sum = data.samples.iter().map(|s| loss.loss(&model.weights, s)).sum();
    (sum, data.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn finite_difference_check(loss: &dyn Loss, sample: &Sample, weights: &[f64]) {
        let mut grad = vec![0.0; weights.len()];
        loss.grad_into(weights, sample, &mut grad);
        let h = 1e-6;
        for i in 0..weights.len() {
            let mut wp = weights.to_vec();
            let mut wm = weights.to_vec();
            wp[i] += h;
            wm[i] -= h;
            let numeric = (loss.loss(&wp, sample) - loss.loss(&wm, sample)) / (2.0 * h);
            assert_relative_eq!(grad[i], numeric, epsilon = 1e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let sample = Sample { features: vec![0.8, -1.3, 1.0], label: 1.0 };
        let weights = [0.4, 0.9, -0.2];
        finite_difference_check(&LogisticLoss, &sample, &weights);
        finite_difference_check(&SquaredLoss, &sample, &weights);
        let sample0 = Sample { features: vec![-0.5, 2.1, 1.0], label: 0.0 };
        finite_difference_check(&LogisticLoss, &sample0, &weights);
        finite_difference_check(&SquaredLoss, &sample0, &weights);
    }

    #[test]
    fn logistic_loss_is_stable_at_extreme_scores() {
        let far = Sample { features: vec![1000.0], label: 1.0 };
        let loss_pos = LogisticLoss.loss(&[1.0], &far);
        let loss_neg = LogisticLoss.loss(&[-1.0], &far);
        assert!(loss_pos.is_finite() && loss_pos >= 0.0 && loss_pos < 1e-12);
        assert_relative_eq!(loss_neg, 1000.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let data = LocalDataset::synthetic(11, 60, 3);
        let model = ModelState { weights: vec![0.3, -0.7, 0.1, 0.05] };
        let update = local_train(&model, &data, &LogisticLoss, 4, 8, 0.0, 99).unwrap();
        assert_eq!(update.weights, model.weights);
        assert_eq!(update.data_size, 60);
    }

    #[test]
    fn training_reduces_loss_on_separable_data() {
        let data = LocalDataset::synthetic(5, 300, 4);
        let model = ModelState::zeros(5);
        let before = dataset_loss(&model, &data, &LogisticLoss).0;
        let update = local_train(&model, &data, &LogisticLoss, 5, 16, 0.2, 42).unwrap();
        let after = dataset_loss(&ModelState { weights: update.weights }, &data, &LogisticLoss).0;
        assert!(after < 0.8 * before, "loss {after} vs {before}");
    }

    #[test]
    fn training_is_deterministic_in_the_seed() {
        let data = LocalDataset::synthetic(21, 120, 3);
        let model = ModelState::zeros(4);
        let a = local_train(&model, &data, &LogisticLoss, 3, 10, 0.1, 7).unwrap();
        let b = local_train(&model, &data, &LogisticLoss, 3, 10, 0.1, 7).unwrap();
        assert_eq!(a.weights, b.weights);
        let c = local_train(&model, &data, &LogisticLoss, 3, 10, 0.1, 8).unwrap();
        assert_ne!(a.weights, c.weights);
    }

    #[test]
    fn aggregate_weights_by_data_size() {
        let updates = [
            LocalUpdate { weights: vec![1.0, 0.0], data_size: 300 },
            LocalUpdate { weights: vec![0.0, 2.0], data_size: 100 },
        ];
        let model = aggregate(&updates, 2, false);
        assert_relative_eq!(model.weights[0], 0.75);
        assert_relative_eq!(model.weights[1], 0.5);
        let flat = aggregate(&updates, 2, true);
        assert_relative_eq!(flat.weights[0], 0.5);
        assert_relative_eq!(flat.weights[1], 1.0);
    }

    #[test]
    fn aggregate_of_nothing_is_zero() {
        let model = aggregate(&[], 3, false);
        assert_eq!(model.weights, vec![0.0; 3]);
    }

    #[test]
    fn divergence_is_reported() {
        let data = LocalDataset::synthetic(2, 50, 3);
        let model = ModelState::zeros(4);
        let err = local_train(&model, &data, &SquaredLoss, 50, 50, 1e6, 1).unwrap_err();
        assert!(matches!(err, TrainError::NonFinite { .. }));
    }
}

//! Synthetic per-satellite datasets and the shared linear model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// One labeled example. The last feature is a constant 1 bias term.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    /// Class label in {0, 1} (also usable as a regression target).
    pub label: f64,
}

/// The examples held on board one satellite. Never leaves the satellite;
/// only model updates do.
#[derive(Debug, Clone)]
pub struct LocalDataset {
    pub samples: Vec<Sample>,
}

impl LocalDataset {
    /// Two spherical Gaussian clusters with labels 0 and 1, means at
    /// `+-mu` along the normalized all-ones direction, unit variance, and
    /// a bias feature appended. The separation shrinks with dimension so
    /// the problem stays learnable but not trivial.
    pub fn synthetic(seed: u64, len: usize, feature_dim: usize) -> Self {
        assert!(feature_dim >= 1, "feature_dim must be at least 1");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = 1.5 / (feature_dim as f64).sqrt();
        let samples = (0..len)
            .map(|_| {
                let label = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
                let mean = if label > 0.5 { mu } else { -mu };
                let mut features: Vec<f64> = (0..feature_dim)
                    .map(|_| mean + rng.sample::<f64, _>(StandardNormal))
                    .collect();
                features.push(1.0);
                Sample { features, label }
            })
            .collect();
        Self { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Model dimension these samples expect (features including bias).
    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.features.len())
    }
}

/// Weights of the shared linear model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub weights: Vec<f64>,
}

impl ModelState {
    pub fn zeros(dim: usize) -> Self {
        Self { weights: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_is_deterministic_per_seed() {
        let a = LocalDataset::synthetic(7, 40, 3);
        let b = LocalDataset::synthetic(7, 40, 3);
        for (sa, sb) in a.samples.iter().zip(&b.samples) {
            assert_eq!(sa.label, sb.label);
            assert_eq!(sa.features, sb.features);
        }
        let c = LocalDataset::synthetic(8, 40, 3);
        assert!(a.samples.iter().zip(&c.samples).any(|(x, y)| x.features != y.features));
    }

    #[test]
    fn synthetic_shape_and_bias() {
        let d = LocalDataset::synthetic(1, 25, 4);
        assert_eq!(d.len(), 25);
        assert_eq!(d.dim(), 5);
        assert!(d.samples.iter().all(|s| s.features.last() == Some(&1.0)));
        assert!(d.samples.iter().all(|s| s.label == 0.0 || s.label == 1.0));
    }

    #[test]
    fn clusters_sit_on_opposite_sides() {
        let d = LocalDataset::synthetic(3, 400, 2);
        let mean_along = |label: f64| {
            let picked: Vec<f64> = d
                .samples
                .iter()
                .filter(|s| s.label == label)
                .map(|s| s.features[0] + s.features[1])
                .collect();
            picked.iter().sum::<f64>() / picked.len() as f64
        };
        assert!(mean_along(1.0) > 0.5);
        assert!(mean_along(0.0) < -0.5);
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::LabeledPoint;
use crate::scalar::Scalar;

/// Isotropic Gaussian mixture with one component per class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MogConfig {
    pub class_means: Vec<Vec<f64>>,
    pub sigma: f64,
    pub per_class: usize,
    pub seed: u64,
}

impl MogConfig {
    /// Three overlapping 2-D blobs, 50 points each.
    pub fn defaults(seed: u64) -> Self {
        Self {
            class_means: vec![vec![0.0, 0.0], vec![4.0, 0.0], vec![2.0, 3.5]],
            sigma: 0.75,
            per_class: 50,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_means.len() < 2 {
            return Err(Error::InvalidConfig("a mixture needs at least 2 classes".into()));
        }
        let d = self.class_means[0].len();
        if d == 0 || self.class_means.iter().any(|m| m.len() != d) {
            return Err(Error::InvalidConfig("class means must share a positive dimension".into()));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidConfig(format!("sigma must be > 0, got {}", self.sigma)));
        }
        Ok(())
    }
}

/// Samples `per_class` points per class, grouped by class in label order.
pub fn generate_mog<T: Scalar>(cfg: &MogConfig) -> Result<Vec<LabeledPoint<T>>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points = Vec::with_capacity(cfg.per_class * cfg.class_means.len());
    for (label, mean) in cfg.class_means.iter().enumerate() {
        for _ in 0..cfg.per_class {
            let x = mean
                .iter()
                .map(|&m| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    T::of(m + cfg.sigma * z)
                })
                .collect();
            points.push(LabeledPoint::new(x, label));
        }
    }
    Ok(points)
}

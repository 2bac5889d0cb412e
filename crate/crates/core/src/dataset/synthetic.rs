use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

/// Isotropic Gaussian blobs with controllable overlap.
///
/// Class centres point in random directions with norm `separation / √2`, so
/// in high dimension (nearly orthogonal directions) centres sit roughly
/// `separation` apart. Samples are `centre + noise_std · N(0, I)`; classes
/// are balanced (`label = i mod n_classes`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlobSpec {
    pub name: String,
    pub n_samples: usize,
    pub dim: usize,
    pub n_classes: usize,
    pub separation: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        Self {
            name: "blobs".into(),
            n_samples: 1000,
            dim: 64,
            n_classes: 4,
            separation: 4.0,
            noise_std: 1.0,
            seed: 0,
        }
    }
}

pub fn synthetic_blobs(spec: &BlobSpec) -> Result<Dataset> {
    if spec.n_classes < 2 || spec.n_samples < spec.n_classes || spec.dim == 0 {
        return Err(Error::Argument(format!(
            "blob spec needs n_classes >= 2, n_samples >= n_classes and dim >= 1: {spec:?}"
        )));
    }
    if !(spec.separation >= 0.0 && spec.noise_std > 0.0) {
        return Err(Error::Argument("separation must be >= 0 and noise_std > 0".into()));
    }
    let mut centre_rng = Rng::new(spec.seed).child(0);
    let radius = spec.separation / std::f64::consts::SQRT_2;
    let centres: Vec<Vec<f64>> = (0..spec.n_classes)
        .map(|_| {
            let v: Vec<f64> = (0..spec.dim).map(|_| StandardNormal.sample(&mut centre_rng)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            v.into_iter().map(|a| a * radius / norm).collect()
        })
        .collect();

    let mut noise_rng = Rng::new(spec.seed).child(1);
    let mut data = Vec::with_capacity(spec.n_samples * spec.dim);
    let mut labels = Vec::with_capacity(spec.n_samples);
    for i in 0..spec.n_samples {
        let c = i % spec.n_classes;
        for &mu in &centres[c] {
            let z: f64 = StandardNormal.sample(&mut noise_rng);
            data.push(mu + spec.noise_std * z);
        }
        labels.push(c);
    }
    Dataset::from_parts(spec.name.clone(), Matrix::from_vec(spec.n_samples, spec.dim, data)?, labels)
}

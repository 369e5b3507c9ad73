use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::workflow::TaskSpec;

/// Multiplicative noise on profiled runtimes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RuntimeNoise {
    #[default]
    Deterministic,
    /// `exp(sigma * Z - sigma^2 / 2)`, which has mean 1.
    Lognormal { sigma: f64 },
}

impl RuntimeNoise {
    pub fn factor<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            RuntimeNoise::Deterministic => 1.0,
            RuntimeNoise::Lognormal { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                (sigma * z - sigma * sigma / 2.0).exp()
            }
        }
    }
}

/// Realized runtime of `task` on a reference-speed worker, seconds.
pub fn sample_runtime<R: Rng + ?Sized>(task: &TaskSpec, noise: RuntimeNoise, rng: &mut R) -> f64 {
    task.runtime_s * noise.factor(rng)
}

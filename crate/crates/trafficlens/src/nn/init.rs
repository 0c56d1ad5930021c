//! Deterministic He-uniform parameter initialization.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

use super::tensor::Tensor;
use super::{ModelConfig, ModelState};

/// Weights drawn from `U(−√(6/fan_in), +√(6/fan_in))`.
pub fn he_uniform<T: Scalar>(shape: &[usize], fan_in: usize, rng: &mut ChaCha8Rng) -> Tensor<T> {
    let bound = T::from_f64((6.0 / fan_in as f64).sqrt());
    let mut tensor = Tensor::zeros(shape);
    for v in tensor.data_mut() {
        *v = rng.random_range(-bound..bound);
    }
    tensor
}

/// Fresh model parameters: He-uniform weights, zero biases, zero Adam state.
///
/// Parameters are drawn in the fixed declaration order of
/// [`super::ParamId::ALL`], so equal seeds give bit-identical models.
pub fn init_params<T: Scalar>(config: ModelConfig, seed: u64) -> ModelState<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = ModelState::zeroed(config);
    for id in super::ParamId::ALL {
        let spec = config.param_spec(id);
        if spec.is_weight {
            *state.param_mut(id) = he_uniform(&spec.shape, spec.fan_in, &mut rng);
        }
        // biases stay exactly zero
    }
    state
}

use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::rng;

/// Layer tensors in storage order. Weight layouts follow the usual
/// `out x in x kh x kw` (conv) and `out x in` (dense) conventions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tensor {
    Conv1Weight,
    Conv1Bias,
    Conv2Weight,
    Conv2Bias,
    Fc1Weight,
    Fc1Bias,
    Fc2Weight,
    Fc2Bias,
}

impl Tensor {
    pub const ALL: [Tensor; 8] = [
        Tensor::Conv1Weight,
        Tensor::Conv1Bias,
        Tensor::Conv2Weight,
        Tensor::Conv2Bias,
        Tensor::Fc1Weight,
        Tensor::Fc1Bias,
        Tensor::Fc2Weight,
        Tensor::Fc2Bias,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tensor::Conv1Weight => "conv1.weight",
            Tensor::Conv1Bias => "conv1.bias",
            Tensor::Conv2Weight => "conv2.weight",
            Tensor::Conv2Bias => "conv2.bias",
            Tensor::Fc1Weight => "fc1.weight",
            Tensor::Fc1Bias => "fc1.bias",
            Tensor::Fc2Weight => "fc2.weight",
            Tensor::Fc2Bias => "fc2.bias",
        }
    }

    pub fn shape(self) -> &'static [usize] {
        match self {
            Tensor::Conv1Weight => &[16, 1, 3, 3],
            Tensor::Conv1Bias => &[16],
            Tensor::Conv2Weight => &[32, 16, 3, 3],
            Tensor::Conv2Bias => &[32],
            Tensor::Fc1Weight => &[128, 1568],
            Tensor::Fc1Bias => &[128],
            Tensor::Fc2Weight => &[10, 128],
            Tensor::Fc2Bias => &[10],
        }
    }

    pub fn len(self) -> usize {
        self.shape().iter().product()
    }

    /// Inputs feeding one output unit of the owning layer.
    pub fn fan_in(self) -> usize {
        match self {
            Tensor::Conv1Weight | Tensor::Conv1Bias => 9,
            Tensor::Conv2Weight | Tensor::Conv2Bias => 16 * 9,
            Tensor::Fc1Weight | Tensor::Fc1Bias => 1568,
            Tensor::Fc2Weight | Tensor::Fc2Bias => 128,
        }
    }

    fn offset(self) -> usize {
        Tensor::ALL
            .iter()
            .take_while(|&&t| t != self)
            .map(|t| t.len())
            .sum()
    }
}

/// Total scalar parameter count implied by the tensor shapes.
pub const PARAM_COUNT: usize = 16 * 9 + 16 + 32 * 16 * 9 + 32 + 128 * 1568 + 128 + 10 * 128 + 10;

/// All weights and biases in one flat buffer, in [`Tensor::ALL`] order.
///
/// Gradients share the same type so an SGD step is a single axpy.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    values: Vec<f64>,
}

impl NetworkParams {
    pub fn zeros() -> Self {
        Self {
            values: vec![0.0; PARAM_COUNT],
        }
    }

    /// Every tensor drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`, each
    /// tensor from its own substream of `seed`.
    pub fn init(seed: u64) -> Self {
        let mut params = Self::zeros();
        for (i, t) in Tensor::ALL.into_iter().enumerate() {
            let bound = 1.0 / (t.fan_in() as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
            let mut r = rng::seeded_rng(rng::derive_seed(seed, &[0x1417, i as u64]));
            for v in params.tensor_mut(t) {
                *v = dist.sample(&mut r);
            }
        }
        params
    }

    pub fn from_flat(values: Vec<f64>) -> Result<Self> {
        if values.len() != PARAM_COUNT {
            return Err(Error::ShapeMismatch(format!(
                "{} parameters, expected {PARAM_COUNT}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameters"));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn tensor(&self, t: Tensor) -> &[f64] {
        let start = t.offset();
        &self.values[start..start + t.len()]
    }

    pub fn tensor_mut(&mut self, t: Tensor) -> &mut [f64] {
        let start = t.offset();
        &mut self.values[start..start + t.len()]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &NetworkParams) {
        for (v, g) in self.values.iter_mut().zip(&other.values) {
            *v += alpha * g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_count() {
        let from_shapes: usize = Tensor::ALL.iter().map(|t| t.len()).sum();
        assert_eq!(from_shapes, 206_922);
        assert_eq!(PARAM_COUNT, 206_922);
        assert_eq!(NetworkParams::zeros().len(), 206_922);
    }

    #[test]
    fn tensors_tile_the_buffer() {
        let mut end = 0;
        for t in Tensor::ALL {
            assert_eq!(t.offset(), end);
            end += t.len();
        }
        assert_eq!(end, PARAM_COUNT);
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = NetworkParams::init(1);
        assert_eq!(a, NetworkParams::init(1));
        assert_ne!(a, NetworkParams::init(2));
        for t in Tensor::ALL {
            let bound = 1.0 / (t.fan_in() as f64).sqrt();
            assert!(a.tensor(t).iter().all(|v| v.abs() <= bound));
        }
    }

    #[test]
    fn from_flat_validates() {
        assert!(NetworkParams::from_flat(vec![0.0; 3]).is_err());
        let mut v = vec![0.0; PARAM_COUNT];
        v[7] = f64::NAN;
        assert!(matches!(NetworkParams::from_flat(v), Err(Error::NonFinite(_))));
    }
}

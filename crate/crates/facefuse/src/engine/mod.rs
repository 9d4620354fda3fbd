//! Numerical core: tensors, layer passes, loss, optimizer, gradient checks.

mod gradcheck;
mod ops;
mod tensor;

pub use gradcheck::{grad_check, GradCheckReport};
pub use ops::{
    accumulate_grads, conv2d_backward, conv2d_forward, fc_backward, fc_forward, maxpool_backward,
    maxpool_forward, relu, relu_backward, scale_grads, sgd_step, softmax_cross_entropy,
    ConvParams, FcParams, GradientBundle, LayerParams, PoolIndices,
};
pub use tensor::{Scalar, Tensor};

//! Central-difference verification of the analytic gradients.

use crate::engine::{softmax_cross_entropy, LayerParams, Tensor};
use crate::error::Result;
use crate::model::{backward, forward, Network};

/// Outcome of one gradient check.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    /// Worst relative error over every parameter of the fragment.
    pub max_rel_error: f64,
    /// How many parameters were perturbed.
    pub checked_parameters: usize,
}

fn loss_of(net: &Network<f64>, input: &Tensor<f64>, label: usize) -> Result<f64> {
    let trace = forward(net, input)?;
    let (loss, _, _) = softmax_cross_entropy(trace.logits(), label)?;
    Ok(loss)
}

fn perturbed(net: &Network<f64>, layer: usize, weight: bool, idx: usize, delta: f64) -> Network<f64> {
    let mut n = net.clone();
    let t = match &mut n.params[layer] {
        LayerParams::Conv(p) => {
            if weight {
                &mut p.weights
            } else {
                &mut p.bias
            }
        }
        LayerParams::Fc(p) => {
            if weight {
                &mut p.weights
            } else {
                &mut p.bias
            }
        }
    };
    t.data_mut()[idx] += delta;
    n
}

/// Compares every parameter's analytic gradient against the central
/// difference `(f(θ+eps) − f(θ−eps)) / 2eps` of the softmax cross-entropy
/// loss on one input. Runs in 64-bit precision.
///
/// The relative error denominator is floored at 1e-6 so parameters whose true
/// gradient is zero (dead ReLU paths) report the difference-quotient noise
/// instead of blowing up.
pub fn grad_check(
    net: &Network<f64>,
    input: &Tensor<f64>,
    label: usize,
    eps: f64,
) -> Result<GradCheckReport> {
    let trace = forward(net, input)?;
    let (_, _, logit_grad) = softmax_cross_entropy(trace.logits(), label)?;
    let analytic = backward(net, &trace, &logit_grad)?;

    let mut max_rel: f64 = 0.0;
    let mut checked = 0usize;
    for (layer, bundle) in analytic.iter().enumerate() {
        for (weight, grad) in [(true, &bundle.weights), (false, &bundle.bias)] {
            for idx in 0..grad.len() {
                let hi = loss_of(&perturbed(net, layer, weight, idx, eps), input, label)?;
                let lo = loss_of(&perturbed(net, layer, weight, idx, -eps), input, label)?;
                let numeric = (hi - lo) / (2.0 * eps);
                let a = grad.data()[idx];
                let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-6);
                if rel > max_rel {
                    max_rel = rel;
                }
                checked += 1;
            }
        }
    }
    Ok(GradCheckReport {
        max_rel_error: max_rel,
        checked_parameters: checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InputShape, LayerSpec, NetworkSpec};
    use rand::Rng;

    fn random_input(seed: u64, shape: &[usize]) -> Tensor<f64> {
        let mut rng = crate::rng::chacha(seed);
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Tensor::from_vec(shape, data).unwrap()
    }

    #[test]
    fn linear_layer_error_is_tiny() {
        let net: Network<f64> = Network::instantiate(NetworkSpec {
            input: InputShape::Flat(6),
            layers: vec![
                LayerSpec::Fc { units: 5, relu: false },
                LayerSpec::Fc { units: 3, relu: false },
            ],
            seed: 5,
        })
        .unwrap();
        let report = grad_check(&net, &random_input(1, &[6]), 1, 1e-5).unwrap();
        assert!(report.max_rel_error < 1e-7, "error {}", report.max_rel_error);
        assert_eq!(report.checked_parameters, 6 * 5 + 5 + 5 * 3 + 3);
    }

    #[test]
    fn tiny_backbone_error_under_threshold() {
        // 8x8 input: conv3 -> pool2 -> fc -> fc
        let net: Network<f64> = Network::instantiate(NetworkSpec {
            input: InputShape::Image { channels: 1, height: 8, width: 8 },
            layers: vec![
                LayerSpec::Conv {
                    out_channels: 2,
                    kernel: 3,
                    stride: 1,
                    padding: 0,
                    relu: true,
                    pool: Some(2),
                },
                LayerSpec::Fc { units: 6, relu: true },
                LayerSpec::Fc { units: 3, relu: false },
            ],
            seed: 9,
        })
        .unwrap();
        let report = grad_check(&net, &random_input(2, &[1, 8, 8]), 0, 1e-5).unwrap();
        assert!(report.max_rel_error < 1e-4, "error {}", report.max_rel_error);
    }

    #[test]
    fn zero_parameter_fragment_reports_zero() {
        // Empty layer list: logits are the input itself; nothing to perturb.
        let net = Network::<f64> {
            spec: NetworkSpec {
                input: InputShape::Flat(3),
                layers: vec![],
                seed: 0,
            },
            params: vec![],
            feature_tap: 0,
        };
        let report = grad_check(&net, &random_input(3, &[3]), 0, 1e-5).unwrap();
        assert_eq!(report.max_rel_error, 0.0);
        assert_eq!(report.checked_parameters, 0);
    }
}

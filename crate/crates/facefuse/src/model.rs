//! Declarative network construction: task backbones, cross-task heads, and
//! fusion heads, plus forward/backward over an instantiated network.
//!
//! Architecture constants: the three conv layers use 16/32/64 filters with
//! 5x5, 5x5, 3x3 kernels, each followed by ReLU and a 2x2/stride-2 max-pool;
//! heads are two 64-unit hidden layers. The feature layer is 200 units for
//! the identity task and 50 for the others.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::Task;
use crate::engine::{
    conv2d_backward, conv2d_forward, fc_backward, fc_forward, maxpool_backward, maxpool_forward,
    relu, relu_backward, ConvParams, FcParams, GradientBundle, LayerParams, PoolIndices, Scalar,
    Tensor,
};
use crate::error::{Error, Result};
use crate::rng;

/// Filters per conv layer in the backbone.
pub const CONV_CHANNELS: [usize; 3] = [16, 32, 64];
/// Kernel sizes of the three conv layers.
pub const CONV_KERNELS: [usize; 3] = [5, 5, 3];
/// Hidden width of cross-task and fusion heads.
pub const HEAD_HIDDEN: usize = 64;
/// Feature layer width for the identity backbone.
pub const ID_FEATURE_DIM: usize = 200;
/// Feature layer width for the age/race/gender backbones.
pub const ATTR_FEATURE_DIM: usize = 50;

const CONV_INIT_STD: f64 = 0.01;

/// A task plus its class count and high-level feature width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskDescriptor {
    pub task: Task,
    pub class_count: usize,
    pub feature_dim: usize,
}

impl TaskDescriptor {
    /// Descriptor with the default feature width for the task. `id_classes`
    /// is the dataset's identity count and is ignored for the other tasks.
    pub fn new(task: Task, id_classes: usize) -> Result<TaskDescriptor> {
        let class_count = task.fixed_class_count().unwrap_or(id_classes);
        if class_count < 2 {
            return Err(Error::config(format!(
                "task {task} needs at least 2 classes, got {class_count}"
            )));
        }
        let feature_dim = match task {
            Task::Id => ID_FEATURE_DIM,
            _ => ATTR_FEATURE_DIM,
        };
        Ok(TaskDescriptor { task, class_count, feature_dim })
    }
}

/// One layer of a network specification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerSpec {
    Conv {
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        relu: bool,
        /// Window (== stride) of the max-pool applied after the activation.
        pool: Option<usize>,
    },
    Fc {
        units: usize,
        relu: bool,
    },
}

/// Shape of the network input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputShape {
    Image { channels: usize, height: usize, width: usize },
    Flat(usize),
}

impl InputShape {
    pub fn dims(&self) -> Vec<usize> {
        match *self {
            InputShape::Image { channels, height, width } => vec![channels, height, width],
            InputShape::Flat(n) => vec![n],
        }
    }
}

/// Declarative layer list plus the seed its parameters are drawn from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    pub input: InputShape,
    pub layers: Vec<LayerSpec>,
    pub seed: u64,
}

impl NetworkSpec {
    /// Output shape of every layer in order, or a configuration error naming
    /// the stage that cannot be built.
    pub fn layer_output_shapes(&self) -> Result<Vec<Vec<usize>>> {
        let mut shapes: Vec<Vec<usize>> = Vec::with_capacity(self.layers.len());
        let mut cur = self.input.dims();
        for (i, layer) in self.layers.iter().enumerate() {
            cur = match *layer {
                LayerSpec::Conv { out_channels, kernel, stride, padding, pool, .. } => {
                    let (h, w) = match cur[..] {
                        [_, h, w] => (h, w),
                        _ => {
                            return Err(Error::config(format!(
                                "stage {i}: conv layer needs a [C,H,W] input, has {cur:?}"
                            )))
                        }
                    };
                    let span = |extent: usize| -> Result<usize> {
                        let padded = extent + 2 * padding;
                        if padded < kernel || (padded - kernel) % stride != 0 {
                            return Err(Error::config(format!(
                                "stage {i}: conv kernel {kernel} (stride {stride}, pad {padding}) does not fit extent {extent}"
                            )));
                        }
                        Ok((padded - kernel) / stride + 1)
                    };
                    let (mut oh, mut ow) = (span(h)?, span(w)?);
                    if let Some(window) = pool {
                        if window > oh || window > ow {
                            return Err(Error::config(format!(
                                "stage {i}: pool window {window} larger than conv output {oh}x{ow}"
                            )));
                        }
                        oh = (oh - window) / window + 1;
                        ow = (ow - window) / window + 1;
                    }
                    vec![out_channels, oh, ow]
                }
                LayerSpec::Fc { units, .. } => {
                    if units == 0 {
                        return Err(Error::config(format!("stage {i}: fc layer with 0 units")));
                    }
                    vec![units]
                }
            };
            shapes.push(cur.clone());
        }
        Ok(shapes)
    }

    /// Human-readable key/value block stored inside checkpoints.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self.input {
            InputShape::Image { channels, height, width } => {
                out.push_str(&format!("input image {channels} {height} {width}\n"));
            }
            InputShape::Flat(n) => out.push_str(&format!("input flat {n}\n")),
        }
        for layer in &self.layers {
            match *layer {
                LayerSpec::Conv { out_channels, kernel, stride, padding, relu, pool } => {
                    out.push_str(&format!(
                        "layer conv channels={out_channels} kernel={kernel} stride={stride} pad={padding} relu={} pool={}\n",
                        relu as u8,
                        pool.unwrap_or(0)
                    ));
                }
                LayerSpec::Fc { units, relu } => {
                    out.push_str(&format!("layer fc units={units} relu={}\n", relu as u8));
                }
            }
        }
        out.push_str(&format!("seed {}\n", self.seed));
        out
    }

    /// Parses the block written by [`NetworkSpec::to_text`].
    pub fn from_text(text: &str) -> Result<NetworkSpec> {
        let bad = |line: &str, why: &str| Error::Checkpoint(format!("spec line '{line}': {why}"));
        let mut input = None;
        let mut layers = Vec::new();
        let mut seed = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("input") => {
                    let kind = parts.next().ok_or_else(|| bad(line, "missing input kind"))?;
                    let nums: Vec<usize> = parts
                        .map(|p| p.parse().map_err(|_| bad(line, "bad integer")))
                        .collect::<Result<_>>()?;
                    input = Some(match (kind, nums.len()) {
                        ("image", 3) => InputShape::Image {
                            channels: nums[0],
                            height: nums[1],
                            width: nums[2],
                        },
                        ("flat", 1) => InputShape::Flat(nums[0]),
                        _ => return Err(bad(line, "unrecognized input shape")),
                    });
                }
                Some("layer") => {
                    let kind = parts.next().ok_or_else(|| bad(line, "missing layer kind"))?;
                    let mut kv = std::collections::BTreeMap::new();
                    for p in parts {
                        let (k, v) = p.split_once('=').ok_or_else(|| bad(line, "expected key=value"))?;
                        let v: usize = v.parse().map_err(|_| bad(line, "bad integer"))?;
                        kv.insert(k.to_string(), v);
                    }
                    let get = |k: &str| kv.get(k).copied().ok_or_else(|| bad(line, &format!("missing {k}")));
                    layers.push(match kind {
                        "conv" => LayerSpec::Conv {
                            out_channels: get("channels")?,
                            kernel: get("kernel")?,
                            stride: get("stride")?,
                            padding: get("pad")?,
                            relu: get("relu")? != 0,
                            pool: match get("pool")? {
                                0 => None,
                                w => Some(w),
                            },
                        },
                        "fc" => LayerSpec::Fc {
                            units: get("units")?,
                            relu: get("relu")? != 0,
                        },
                        _ => return Err(bad(line, "unknown layer kind")),
                    });
                }
                Some("seed") => {
                    let v = parts.next().ok_or_else(|| bad(line, "missing seed"))?;
                    seed = Some(v.parse().map_err(|_| bad(line, "bad seed"))?);
                }
                _ => return Err(bad(line, "unknown directive")),
            }
        }
        Ok(NetworkSpec {
            input: input.ok_or_else(|| Error::Checkpoint("spec block missing input line".into()))?,
            layers,
            seed: seed.ok_or_else(|| Error::Checkpoint("spec block missing seed line".into()))?,
        })
    }
}

/// An instantiated network: spec, parameters, and the feature-tap index.
#[derive(Debug, Clone)]
pub struct Network<T> {
    pub spec: NetworkSpec,
    pub params: Vec<LayerParams<T>>,
    /// Index of the last hidden FC layer; its activation is the extracted feature.
    pub feature_tap: usize,
}

impl<T: Scalar> Network<T> {
    /// Instantiates parameters for a spec: zero-mean Gaussian weights
    /// (std 0.01 for conv, 1/sqrt(fan_in) for FC), zero biases.
    pub fn instantiate(spec: NetworkSpec) -> Result<Network<T>> {
        let shapes = parameter_shapes(&spec)?;
        let mut rng = rng::chacha(spec.seed);
        let mut gauss = |std: f64| -> T {
            let x: f64 = rng.sample(StandardNormal);
            T::from_f64(x * std)
        };
        let mut params = Vec::with_capacity(spec.layers.len());
        for (layer, (w_shape, bias_len)) in spec.layers.iter().zip(&shapes) {
            let n: usize = w_shape.iter().product();
            match layer {
                LayerSpec::Conv { .. } => {
                    let data = (0..n).map(|_| gauss(CONV_INIT_STD)).collect();
                    params.push(LayerParams::Conv(ConvParams {
                        weights: Tensor::from_vec(w_shape, data)?,
                        bias: Tensor::zeros(&[*bias_len]),
                    }));
                }
                LayerSpec::Fc { .. } => {
                    let fan_in = w_shape[1];
                    let std = 1.0 / (fan_in as f64).sqrt();
                    let data = (0..n).map(|_| gauss(std)).collect();
                    params.push(LayerParams::Fc(FcParams {
                        weights: Tensor::from_vec(w_shape, data)?,
                        bias: Tensor::zeros(&[*bias_len]),
                    }));
                }
            }
        }
        let feature_tap = feature_tap_index(&spec.layers);
        Ok(Network { spec, params, feature_tap })
    }

    /// Width of the feature-tap layer.
    pub fn feature_dim(&self) -> usize {
        match self.spec.layers[self.feature_tap] {
            LayerSpec::Fc { units, .. } => units,
            _ => unreachable!("feature tap always points at an FC layer"),
        }
    }

    /// Width of the output layer.
    pub fn class_count(&self) -> usize {
        match *self.spec.layers.last().expect("network has layers") {
            LayerSpec::Fc { units, .. } => units,
            _ => unreachable!("output layer is always FC"),
        }
    }
}

fn feature_tap_index(layers: &[LayerSpec]) -> usize {
    // Last hidden FC layer: the one before the output layer.
    debug_assert!(layers.len() >= 2);
    layers.len() - 2
}

/// Weight shape and bias length of every layer, in order. Shared by
/// initialization and the checkpoint loader.
pub fn parameter_shapes(spec: &NetworkSpec) -> Result<Vec<(Vec<usize>, usize)>> {
    let output_shapes = spec.layer_output_shapes()?;
    let mut out = Vec::with_capacity(spec.layers.len());
    let mut in_dims = spec.input.dims();
    for (layer, out_shape) in spec.layers.iter().zip(&output_shapes) {
        match *layer {
            LayerSpec::Conv { out_channels, kernel, .. } => {
                out.push((vec![out_channels, in_dims[0], kernel, kernel], out_channels));
            }
            LayerSpec::Fc { units, .. } => {
                let fan_in: usize = in_dims.iter().product();
                out.push((vec![units, fan_in], units));
            }
        }
        in_dims = out_shape.clone();
    }
    Ok(out)
}

/// The shared task backbone: three conv(+pool) stages, a feature FC layer,
/// and the class output layer.
pub fn build_backbone<T: Scalar>(
    task: &TaskDescriptor,
    input: InputShape,
    seed: u64,
) -> Result<Network<T>> {
    if let InputShape::Flat(_) = input {
        return Err(Error::config("backbone input must be an image [C,H,W]"));
    }
    let mut layers = Vec::new();
    for (channels, kernel) in CONV_CHANNELS.iter().zip(CONV_KERNELS) {
        layers.push(LayerSpec::Conv {
            out_channels: *channels,
            kernel,
            stride: 1,
            padding: 0,
            relu: true,
            pool: Some(2),
        });
    }
    layers.push(LayerSpec::Fc { units: task.feature_dim, relu: true });
    layers.push(LayerSpec::Fc { units: task.class_count, relu: false });
    Network::instantiate(NetworkSpec { input, layers, seed })
}

/// Head for training one target task on features produced by another task's
/// backbone: two hidden FC layers before the output layer.
pub fn build_cross_task_head<T: Scalar>(
    feature_dim: usize,
    target_class_count: usize,
    seed: u64,
) -> Result<Network<T>> {
    build_fusion_head(&[feature_dim], target_class_count, seed)
}

/// Head over concatenated features. The input width is the sum of the
/// declared feature widths; a single-element list degenerates to a
/// cross-task head.
pub fn build_fusion_head<T: Scalar>(
    feature_dims: &[usize],
    target_class_count: usize,
    seed: u64,
) -> Result<Network<T>> {
    if feature_dims.is_empty() {
        return Err(Error::config("fusion head needs at least one feature dim"));
    }
    if feature_dims.iter().any(|&d| d == 0) {
        return Err(Error::config(format!("non-positive feature dim in {feature_dims:?}")));
    }
    if target_class_count < 2 {
        return Err(Error::config(format!(
            "head needs at least 2 output classes, got {target_class_count}"
        )));
    }
    let input = InputShape::Flat(feature_dims.iter().sum());
    let layers = vec![
        LayerSpec::Fc { units: HEAD_HIDDEN, relu: true },
        LayerSpec::Fc { units: HEAD_HIDDEN, relu: true },
        LayerSpec::Fc { units: target_class_count, relu: false },
    ];
    Network::instantiate(NetworkSpec { input, layers, seed })
}

/// Per-layer activations cached by [`forward`] for the backward pass.
pub struct ForwardTrace<T> {
    input: Tensor<T>,
    preacts: Vec<Tensor<T>>,
    pools: Vec<Option<PoolIndices>>,
    outputs: Vec<Tensor<T>>,
}

impl<T: Scalar> ForwardTrace<T> {
    pub fn logits(&self) -> &Tensor<T> {
        self.outputs.last().unwrap_or(&self.input)
    }

    pub fn layer_output(&self, index: usize) -> &Tensor<T> {
        &self.outputs[index]
    }

    fn layer_input(&self, index: usize) -> &Tensor<T> {
        if index == 0 {
            &self.input
        } else {
            &self.outputs[index - 1]
        }
    }
}

/// Runs the network on one input, caching every intermediate activation.
pub fn forward<T: Scalar>(net: &Network<T>, input: &Tensor<T>) -> Result<ForwardTrace<T>> {
    let want = net.spec.input.dims();
    if input.shape() != want {
        return Err(Error::dimension(
            "forward",
            format!("input shape {:?} does not match spec {want:?}", input.shape()),
        ));
    }
    let mut trace = ForwardTrace {
        input: input.clone(),
        preacts: Vec::with_capacity(net.spec.layers.len()),
        pools: Vec::with_capacity(net.spec.layers.len()),
        outputs: Vec::with_capacity(net.spec.layers.len()),
    };
    let mut x = input.clone();
    for (layer, params) in net.spec.layers.iter().zip(&net.params) {
        let (preact, pool, out) = match (layer, params) {
            (&LayerSpec::Conv { stride, padding, relu: act, pool, .. }, LayerParams::Conv(p)) => {
                let z = conv2d_forward(&x, p, stride, padding)?;
                let a = if act { relu(&z) } else { z.clone() };
                match pool {
                    Some(window) => {
                        let (pooled, idx) = maxpool_forward(&a, window, window)?;
                        (z, Some(idx), pooled)
                    }
                    None => (z, None, a),
                }
            }
            (&LayerSpec::Fc { relu: act, .. }, LayerParams::Fc(p)) => {
                let z = fc_forward(&x.flattened(), p)?;
                let a = if act { relu(&z) } else { z.clone() };
                (z, None, a)
            }
            _ => return Err(Error::config("layer spec and parameters disagree")),
        };
        trace.preacts.push(preact);
        trace.pools.push(pool);
        x = out.clone();
        trace.outputs.push(out);
    }
    Ok(trace)
}

/// Forward pass returning the output logits and the feature-tap activation.
pub fn forward_full<T: Scalar>(
    net: &Network<T>,
    input: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let trace = forward(net, input)?;
    let feature = trace.layer_output(net.feature_tap).clone();
    Ok((trace.logits().clone(), feature))
}

/// Chain-rule pass over a cached forward trace; returns one gradient bundle
/// per layer, aligned with `net.params`.
pub fn backward<T: Scalar>(
    net: &Network<T>,
    trace: &ForwardTrace<T>,
    logit_grad: &Tensor<T>,
) -> Result<Vec<GradientBundle<T>>> {
    let mut grads: Vec<Option<GradientBundle<T>>> = (0..net.params.len()).map(|_| None).collect();
    let mut g = logit_grad.clone();
    for (i, (layer, params)) in net.spec.layers.iter().zip(&net.params).enumerate().rev() {
        if let Some(idx) = &trace.pools[i] {
            g = maxpool_backward(idx, &g)?;
        }
        let acts = match layer {
            LayerSpec::Conv { relu, .. } | LayerSpec::Fc { relu, .. } => *relu,
        };
        if acts {
            g = relu_backward(&trace.preacts[i], &g);
        }
        let layer_input = trace.layer_input(i);
        let bundle = match params {
            LayerParams::Conv(p) => {
                let (stride, padding) = match *layer {
                    LayerSpec::Conv { stride, padding, .. } => (stride, padding),
                    _ => unreachable!(),
                };
                conv2d_backward(layer_input, p, &g, stride, padding)?
            }
            LayerParams::Fc(p) => fc_backward(&layer_input.flattened(), p, &g)?,
        };
        g = bundle.input.reshaped(layer_input.shape())?;
        grads[i] = Some(bundle);
    }
    Ok(grads.into_iter().map(|g| g.expect("all layers visited")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id_task() -> TaskDescriptor {
        TaskDescriptor::new(Task::Id, 77).unwrap()
    }

    fn image_32() -> InputShape {
        InputShape::Image { channels: 1, height: 32, width: 32 }
    }

    #[test]
    fn backbone_feature_widths_follow_task() {
        let id: Network<f64> = build_backbone(&id_task(), image_32(), 1).unwrap();
        assert_eq!(id.feature_dim(), 200);
        assert_eq!(id.class_count(), 77);

        let race: Network<f64> =
            build_backbone(&TaskDescriptor::new(Task::Race, 77).unwrap(), image_32(), 1).unwrap();
        assert_eq!(race.feature_dim(), 50);
        assert_eq!(race.class_count(), 4);
    }

    #[test]
    fn backbone_kernel_chain_is_5_5_3() {
        let net: Network<f64> = build_backbone(&id_task(), image_32(), 1).unwrap();
        let kernels: Vec<usize> = net
            .spec
            .layers
            .iter()
            .filter_map(|l| match l {
                LayerSpec::Conv { kernel, .. } => Some(*kernel),
                _ => None,
            })
            .collect();
        assert_eq!(kernels, [5, 5, 3]);
        let channels: Vec<usize> = net
            .params
            .iter()
            .filter_map(|p| match p {
                LayerParams::Conv(c) => Some(c.weights.shape()[0]),
                _ => None,
            })
            .collect();
        assert_eq!(channels, CONV_CHANNELS);
    }

    #[test]
    fn too_small_input_reports_failing_stage() {
        let err = build_backbone::<f64>(
            &id_task(),
            InputShape::Image { channels: 1, height: 12, width: 12 },
            1,
        )
        .unwrap_err();
        match err {
            Error::Config(detail) => assert!(detail.contains("stage"), "{detail}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn head_shapes() {
        let head: Network<f64> = build_cross_task_head(200, 3, 2).unwrap();
        assert_eq!(head.spec.input, InputShape::Flat(200));
        assert_eq!(head.class_count(), 3);
        assert_eq!(head.feature_tap, 1);

        let head: Network<f64> = build_cross_task_head(50, 2, 2).unwrap();
        assert_eq!(head.spec.input, InputShape::Flat(50));
        assert_eq!(head.class_count(), 2);
    }

    #[test]
    fn zero_feature_vector_gives_uniform_softmax() {
        // Biases start at zero, so a zero input stays zero through every layer.
        let head: Network<f64> = build_cross_task_head(50, 4, 3).unwrap();
        let (logits, _) = forward_full(&head, &Tensor::zeros(&[50])).unwrap();
        let (_, probs, _) = crate::engine::softmax_cross_entropy(&logits, 0).unwrap();
        for &p in probs.data() {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn fusion_input_width_is_sum_of_dims() {
        let all: Network<f64> = build_fusion_head(&[200, 50, 50, 50], 77, 4).unwrap();
        assert_eq!(all.spec.input, InputShape::Flat(350));
        let other: Network<f64> = build_fusion_head(&[50, 50, 50], 3, 4).unwrap();
        assert_eq!(other.spec.input, InputShape::Flat(150));
        assert!(build_fusion_head::<f64>(&[], 3, 4).is_err());
    }

    #[test]
    fn single_dim_fusion_head_equals_cross_task_head() {
        let a: Network<f64> = build_fusion_head(&[200], 3, 5).unwrap();
        let b: Network<f64> = build_cross_task_head(200, 3, 5).unwrap();
        assert_eq!(a.spec, b.spec);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn forward_full_shapes_and_zero_weights() {
        let net: Network<f64> = build_backbone(&id_task(), image_32(), 7).unwrap();
        let input = Tensor::zeros(&[1, 32, 32]);
        let (logits, feature) = forward_full(&net, &input).unwrap();
        assert_eq!(logits.shape(), [77]);
        assert_eq!(feature.shape(), [200]);

        // Zeroed parameters: logits are exactly zero.
        let mut zeroed = net.clone();
        for p in &mut zeroed.params {
            match p {
                LayerParams::Conv(c) => c.weights = Tensor::zeros(c.weights.shape()),
                LayerParams::Fc(f) => f.weights = Tensor::zeros(f.weights.shape()),
            }
        }
        let mut r = crate::rng::chacha(3);
        let data = (0..1024).map(|_| rand::Rng::gen_range(&mut r, 0.0..1.0)).collect();
        let input = Tensor::from_vec(&[1, 32, 32], data).unwrap();
        let (logits, _) = forward_full(&zeroed, &input).unwrap();
        assert!(logits.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shape_propagation_matches_spec_layerwise() {
        let net: Network<f64> = build_backbone(&id_task(), image_32(), 7).unwrap();
        let expected = net.spec.layer_output_shapes().unwrap();
        assert_eq!(
            expected,
            vec![
                vec![16, 14, 14], // 32 -> conv5 -> 28 -> pool -> 14
                vec![32, 5, 5],   // 14 -> conv5 -> 10 -> pool -> 5
                vec![64, 1, 1],   // 5 -> conv3 -> 3 -> pool -> 1
                vec![200],
                vec![77],
            ]
        );
        let trace = forward(&net, &Tensor::zeros(&[1, 32, 32])).unwrap();
        for (i, shape) in expected.iter().enumerate() {
            assert_eq!(trace.layer_output(i).shape(), &shape[..], "layer {i}");
        }
    }

    #[test]
    fn same_seed_same_parameters() {
        let a: Network<f32> = build_backbone(&id_task(), image_32(), 99).unwrap();
        let b: Network<f32> = build_backbone(&id_task(), image_32(), 99).unwrap();
        assert_eq!(a.params, b.params);
        let c: Network<f32> = build_backbone(&id_task(), image_32(), 100).unwrap();
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn spec_text_round_trip() {
        let net: Network<f64> = build_backbone(&id_task(), image_32(), 42).unwrap();
        let text = net.spec.to_text();
        let parsed = NetworkSpec::from_text(&text).unwrap();
        assert_eq!(parsed, net.spec);

        let head: Network<f64> = build_fusion_head(&[200, 50], 3, 6).unwrap();
        let parsed = NetworkSpec::from_text(&head.spec.to_text()).unwrap();
        assert_eq!(parsed, head.spec);

        assert!(NetworkSpec::from_text("layer conv nonsense").is_err());
        assert!(NetworkSpec::from_text("input image 1 32 32\n").is_err()); // missing seed
    }

    #[test]
    fn rejects_mismatched_input_shape() {
        let net: Network<f64> = build_backbone(&id_task(), image_32(), 1).unwrap();
        assert!(matches!(
            forward(&net, &Tensor::zeros(&[1, 16, 16])),
            Err(Error::Dimension { .. })
        ));
    }
}

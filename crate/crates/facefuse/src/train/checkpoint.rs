//! Checkpoint file format.
//!
//! Layout: magic `FFCK`, little-endian u32 version, u32 length-prefixed
//! human-readable text block (run metadata plus the network spec), raw
//! little-endian tensor payloads per layer (weights then bias, in layer
//! order, at the declared precision), and a trailing CRC32 over everything
//! before it.

use std::path::Path;

use crate::engine::{ConvParams, FcParams, LayerParams, Scalar, Tensor};
use crate::error::{Error, Result};
use crate::model::{parameter_shapes, LayerSpec, Network, NetworkSpec};
use crate::train::Precision;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"FFCK";
const CHECKPOINT_VERSION: u32 = 1;

/// Run metadata stored next to the network spec.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CheckpointMeta {
    /// Training iterations completed when the checkpoint was written.
    pub iteration: usize,
    /// Producing task name; empty for networks without one.
    pub task: String,
    /// Text form of the training RNG state.
    pub rng_state: String,
    /// One-line JSON echo of the training configuration.
    pub config_json: String,
}

fn compose_text<T: Scalar>(net: &Network<T>, meta: &CheckpointMeta) -> String {
    let mut text = String::new();
    text.push_str(&format!("precision {}\n", T::NAME));
    text.push_str(&format!("iteration {}\n", meta.iteration));
    if !meta.task.is_empty() {
        text.push_str(&format!("task {}\n", meta.task));
    }
    if !meta.rng_state.is_empty() {
        text.push_str(&format!("rng {}\n", meta.rng_state));
    }
    if !meta.config_json.is_empty() {
        text.push_str(&format!("config {}\n", meta.config_json));
    }
    text.push_str(&net.spec.to_text());
    text
}

fn split_text(text: &str) -> (Vec<(&str, &str)>, String) {
    let mut meta = Vec::new();
    let mut spec = String::new();
    for line in text.lines() {
        let key = line.split_whitespace().next().unwrap_or("");
        match key {
            "precision" | "iteration" | "task" | "rng" | "config" => {
                let value = line[key.len()..].trim_start();
                meta.push((key, value));
            }
            _ => {
                spec.push_str(line);
                spec.push('\n');
            }
        }
    }
    (meta, spec)
}

/// Writes the network and metadata to `path`.
pub fn save_checkpoint<T: Scalar>(net: &Network<T>, meta: &CheckpointMeta, path: &Path) -> Result<()> {
    let text = compose_text(net, meta);
    let mut bytes = Vec::new();
    bytes.extend_from_slice(CHECKPOINT_MAGIC);
    bytes.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(text.len() as u32).to_le_bytes());
    bytes.extend_from_slice(text.as_bytes());
    for layer in &net.params {
        for v in layer.weights().data() {
            v.write_le(&mut bytes);
        }
        for v in layer.bias().data() {
            v.write_le(&mut bytes);
        }
    }
    let mut hasher = crc32fast::Hasher::new();
    hasher.update(&bytes);
    bytes.extend_from_slice(&hasher.finalize().to_le_bytes());
    std::fs::write(path, bytes)?;
    Ok(())
}

struct Parsed {
    precision: Precision,
    meta: CheckpointMeta,
    spec: NetworkSpec,
    payload_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Parsed> {
    let bad = |why: &str| Error::Checkpoint(why.to_string());
    if bytes.len() < 16 {
        return Err(bad("file too short"));
    }
    if &bytes[0..4] != CHECKPOINT_MAGIC {
        return Err(bad("bad magic (not a checkpoint file)"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let stored_crc = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    let mut hasher = crc32fast::Hasher::new();
    hasher.update(&bytes[..bytes.len() - 4]);
    if hasher.finalize() != stored_crc {
        return Err(bad("CRC mismatch (corrupted or truncated file)"));
    }
    let text_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let text_end = 12 + text_len;
    if text_end + 4 > bytes.len() {
        return Err(bad("declared text block exceeds file size"));
    }
    let text = std::str::from_utf8(&bytes[12..text_end]).map_err(|_| bad("text block is not UTF-8"))?;
    let (meta_lines, spec_text) = split_text(text);

    let mut precision = None;
    let mut meta = CheckpointMeta::default();
    for (key, value) in meta_lines {
        match key {
            "precision" => precision = Some(Precision::parse(value).map_err(|e| bad(&e.to_string()))?),
            "iteration" => {
                meta.iteration = value.parse().map_err(|_| bad("bad iteration"))?;
            }
            "task" => meta.task = value.to_string(),
            "rng" => meta.rng_state = value.to_string(),
            "config" => meta.config_json = value.to_string(),
            _ => unreachable!(),
        }
    }
    let spec = NetworkSpec::from_text(&spec_text)?;
    if spec.layers.len() < 2 {
        return Err(bad("network spec has fewer than 2 layers"));
    }
    Ok(Parsed {
        precision: precision.ok_or_else(|| bad("missing precision line"))?,
        meta,
        spec,
        payload_offset: text_end,
    })
}

/// Reads just the stored precision, so callers can pick the right
/// instantiation before loading.
pub fn checkpoint_precision(path: &Path) -> Result<Precision> {
    let bytes = std::fs::read(path)?;
    Ok(parse_header(&bytes)?.precision)
}

/// Loads a checkpoint written by [`save_checkpoint`]. The requested element
/// type must match the stored precision; reloaded networks reproduce the
/// saved model's outputs bit for bit.
pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<(Network<T>, CheckpointMeta)> {
    let bytes = std::fs::read(path)?;
    let parsed = parse_header(&bytes)?;
    if parsed.precision.name() != T::NAME {
        return Err(Error::Checkpoint(format!(
            "stored precision is {}, requested {}",
            parsed.precision.name(),
            T::NAME
        )));
    }
    let shapes = parameter_shapes(&parsed.spec)?;
    let expected: usize = shapes.iter().map(|(w, b)| (w.iter().product::<usize>() + b) * T::BYTES).sum();
    let payload = &bytes[parsed.payload_offset..bytes.len() - 4];
    if payload.len() != expected {
        return Err(Error::Checkpoint(format!(
            "parameter payload is {} bytes, spec needs {expected}",
            payload.len()
        )));
    }

    let mut cursor = 0usize;
    let mut read_tensor = |shape: &[usize]| -> Tensor<T> {
        let n: usize = shape.iter().product();
        let data: Vec<T> = (0..n)
            .map(|i| T::read_le(&payload[cursor + i * T::BYTES..]))
            .collect();
        cursor += n * T::BYTES;
        Tensor::from_vec(shape, data).expect("shape matches data length")
    };
    let mut params = Vec::with_capacity(parsed.spec.layers.len());
    for (layer, (w_shape, bias_len)) in parsed.spec.layers.iter().zip(&shapes) {
        let weights = read_tensor(w_shape);
        let bias = read_tensor(&[*bias_len]);
        params.push(match layer {
            LayerSpec::Conv { .. } => LayerParams::Conv(ConvParams { weights, bias }),
            LayerSpec::Fc { .. } => LayerParams::Fc(FcParams { weights, bias }),
        });
    }
    let feature_tap = parsed.spec.layers.len() - 2;
    Ok((
        Network {
            spec: parsed.spec,
            params,
            feature_tap,
        },
        parsed.meta,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Task;
    use crate::model::{build_backbone, forward_full, InputShape, TaskDescriptor};
    use rand::Rng;

    fn small_backbone(seed: u64) -> Network<f32> {
        build_backbone(
            &TaskDescriptor::new(Task::Gender, 8).unwrap(),
            InputShape::Image { channels: 1, height: 32, width: 32 },
            seed,
        )
        .unwrap()
    }

    fn meta() -> CheckpointMeta {
        CheckpointMeta {
            iteration: 17,
            task: "gender".into(),
            rng_state: "chacha12 seed=3 words=99".into(),
            config_json: "{\"batch_size\":4}".into(),
        }
    }

    #[test]
    fn round_trip_preserves_outputs_bitwise() {
        let net = small_backbone(5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.ck");
        save_checkpoint(&net, &meta(), &path).unwrap();

        assert_eq!(checkpoint_precision(&path).unwrap(), Precision::F32);
        let (loaded, m) = load_checkpoint::<f32>(&path).unwrap();
        assert_eq!(m, meta());
        assert_eq!(loaded.params, net.params);
        assert_eq!(loaded.spec, net.spec);

        let mut r = crate::rng::chacha(8);
        for _ in 0..3 {
            let data: Vec<f32> = (0..1024).map(|_| r.gen_range(-1.0..1.0)).collect();
            let input = Tensor::from_vec(&[1, 32, 32], data).unwrap();
            let (a_logits, a_feat) = forward_full(&net, &input).unwrap();
            let (b_logits, b_feat) = forward_full(&loaded, &input).unwrap();
            assert_eq!(a_logits.data(), b_logits.data());
            assert_eq!(a_feat.data(), b_feat.data());
        }
    }

    #[test]
    fn precision_mismatch_is_rejected() {
        let net = small_backbone(5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.ck");
        save_checkpoint(&net, &meta(), &path).unwrap();
        assert!(matches!(load_checkpoint::<f64>(&path), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn corrupted_and_truncated_files_are_rejected() {
        let net = small_backbone(6);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.ck");
        save_checkpoint(&net, &meta(), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        // Truncation
        let cut = dir.path().join("cut.ck");
        std::fs::write(&cut, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load_checkpoint::<f32>(&cut), Err(Error::Checkpoint(_))));

        // Bit flip in the payload
        let mut flipped = bytes.clone();
        let mid = flipped.len() / 2;
        flipped[mid] ^= 0xff;
        let bad = dir.path().join("bad.ck");
        std::fs::write(&bad, flipped).unwrap();
        assert!(matches!(load_checkpoint::<f32>(&bad), Err(Error::Checkpoint(_))));

        // Wrong magic
        let mut wrong = bytes;
        wrong[0] = b'X';
        let nope = dir.path().join("nope.ck");
        std::fs::write(&nope, wrong).unwrap();
        assert!(matches!(load_checkpoint::<f32>(&nope), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn saving_is_byte_deterministic() {
        let net = small_backbone(7);
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.ck");
        let b = dir.path().join("b.ck");
        save_checkpoint(&net, &meta(), &a).unwrap();
        save_checkpoint(&net, &meta(), &b).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }
}

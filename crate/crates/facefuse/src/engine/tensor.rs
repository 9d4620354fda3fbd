//! Shape-tagged row-major tensors and the scalar abstraction.
//!
//! Everything the engine touches (images, activations, weights, gradients) is
//! a [`Tensor`]. Runs pick their element type once: `f64` for verification,
//! `f32` for faster training.

use std::fmt;

use crate::error::{Error, Result};

/// Element type for engine arithmetic. Implemented for `f32` and `f64`.
pub trait Scalar:
    num_traits::Float + Copy + Send + Sync + fmt::Debug + fmt::Display + 'static
{
    /// Size of the little-endian encoding in bytes.
    const BYTES: usize;
    /// Type tag used in checkpoint headers ("f32" / "f64").
    const NAME: &'static str;

    fn from_f64(x: f64) -> Self;
    fn as_f64(self) -> f64;
    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
    /// Parses the exact text produced by `Display`.
    fn parse(s: &str) -> Option<Self>;
}

impl Scalar for f32 {
    const BYTES: usize = 4;
    const NAME: &'static str = "f32";

    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes[..4].try_into().unwrap())
    }
    fn parse(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}

impl Scalar for f64 {
    const BYTES: usize = 8;
    const NAME: &'static str = "f64";

    fn from_f64(x: f64) -> Self {
        x
    }
    fn as_f64(self) -> f64 {
        self
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes[..8].try_into().unwrap())
    }
    fn parse(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}

/// Row-major n-dimensional array of scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    /// Zero-filled tensor of the given shape.
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![T::zero(); len],
        }
    }

    /// Builds a tensor from flat row-major data; the length must match the shape.
    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        let want: usize = shape.iter().product();
        if data.len() != want {
            return Err(Error::dimension(
                "tensor",
                format!("shape {shape:?} needs {want} elements, got {}", data.len()),
            ));
        }
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::dimension("tensor", format!("zero extent in shape {shape:?}")));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Reinterprets the tensor as a flat vector of the same length.
    pub fn flattened(&self) -> Tensor<T> {
        Tensor {
            shape: vec![self.data.len()],
            data: self.data.clone(),
        }
    }

    /// Same data under a new shape of equal total length.
    pub fn reshaped(&self, shape: &[usize]) -> Result<Tensor<T>> {
        let want: usize = shape.iter().product();
        if want != self.data.len() {
            return Err(Error::dimension(
                "reshape",
                format!("cannot view {} elements as shape {shape:?}", self.data.len()),
            ));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data: self.data.clone(),
        })
    }

    /// The shape as `[C, H, W]`, or a dimension error naming the rank.
    pub fn dims3(&self, op: &'static str) -> Result<(usize, usize, usize)> {
        match self.shape[..] {
            [c, h, w] => Ok((c, h, w)),
            _ => Err(Error::dimension(
                op,
                format!("expected rank-3 [C,H,W] tensor, got shape {:?}", self.shape),
            )),
        }
    }

    /// True when every element is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Converts elements to a different precision.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| U::from_f64(v.as_f64())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_checks_length() {
        assert!(Tensor::from_vec(&[2, 2], vec![1.0f64; 4]).is_ok());
        let err = Tensor::from_vec(&[2, 2], vec![1.0f64; 3]).unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
    }

    #[test]
    fn from_vec_rejects_zero_extent() {
        assert!(Tensor::<f64>::from_vec(&[2, 0], vec![]).is_err());
    }

    #[test]
    fn le_round_trip() {
        let mut buf = Vec::new();
        1.5f32.write_le(&mut buf);
        (-2.25f64).write_le(&mut buf);
        assert_eq!(f32::read_le(&buf[..4]), 1.5);
        assert_eq!(f64::read_le(&buf[4..]), -2.25);
    }
}

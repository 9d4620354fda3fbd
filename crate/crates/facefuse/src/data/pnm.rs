//! Binary PGM (P5) and PPM (P6) image codec, maxval 255.

use std::path::Path;

use crate::engine::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Decodes a binary PGM/PPM file into a `[1,H,W]` or `[3,H,W]` tensor with
/// values scaled to `[0,1]`.
pub fn decode_image<T: Scalar>(path: &Path) -> Result<Tensor<T>> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::ingest(path, None, format!("cannot read image: {e}")))?;
    decode_image_bytes(&bytes).map_err(|e| match e {
        Error::Ingest { line, detail, .. } => Error::ingest(path, line, detail),
        other => other,
    })
}

/// Decodes an in-memory PGM/PPM payload.
pub fn decode_image_bytes<T: Scalar>(bytes: &[u8]) -> Result<Tensor<T>> {
    let bad = |detail: &str| Error::ingest("<bytes>", None, detail);
    let mut pos = 0usize;

    let magic = take_token(bytes, &mut pos).ok_or_else(|| bad("missing PNM magic"))?;
    let channels = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(bad(&format!("unsupported magic '{other}' (want P5 or P6)"))),
    };
    let width: usize = parse_field(bytes, &mut pos, "width")?;
    let height: usize = parse_field(bytes, &mut pos, "height")?;
    let maxval: usize = parse_field(bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(bad("zero image dimension"));
    }
    if maxval != 255 {
        return Err(bad(&format!("unsupported maxval {maxval} (want 255)")));
    }
    // Exactly one whitespace byte separates the header from the payload.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(bad("malformed header: missing payload separator")),
    }
    let need = width * height * channels;
    let payload = bytes
        .get(pos..pos + need)
        .ok_or_else(|| bad(&format!("truncated payload: need {need} bytes, have {}", bytes.len() - pos)))?;

    // Interleaved rows -> planar [C,H,W].
    let mut data = vec![T::zero(); need];
    let scale = 1.0 / 255.0;
    for (i, &b) in payload.iter().enumerate() {
        let c = i % channels;
        let pixel = i / channels;
        data[c * width * height + pixel] = T::from_f64(b as f64 * scale);
    }
    Tensor::from_vec(&[channels, height, width], data)
}

fn take_token(bytes: &[u8], pos: &mut usize) -> Option<String> {
    // Skip whitespace and '#' comment lines, then read one token.
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if *pos > start {
        Some(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    } else {
        None
    }
}

fn parse_field(bytes: &[u8], pos: &mut usize, name: &str) -> Result<usize> {
    let tok = take_token(bytes, pos)
        .ok_or_else(|| Error::ingest("<bytes>", None, format!("missing {name} in header")))?;
    tok.parse()
        .map_err(|_| Error::ingest("<bytes>", None, format!("malformed {name} '{tok}'")))
}

fn quantize<T: Scalar>(v: T) -> u8 {
    let x = v.as_f64().clamp(0.0, 1.0);
    (x * 255.0).round() as u8
}

/// Encodes a `[1,H,W]` tensor as binary PGM, quantizing to 8 bits.
pub fn encode_pgm<T: Scalar>(image: &Tensor<T>) -> Result<Vec<u8>> {
    let (c, h, w) = image.dims3("encode_pgm")?;
    if c != 1 {
        return Err(Error::dimension(
            "encode_pgm",
            format!("grayscale output needs 1 channel, got {c}"),
        ));
    }
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(image.data().iter().map(|&v| quantize(v)));
    Ok(out)
}

/// Encodes a `[3,H,W]` tensor as binary PPM, quantizing to 8 bits.
pub fn encode_ppm<T: Scalar>(image: &Tensor<T>) -> Result<Vec<u8>> {
    let (c, h, w) = image.dims3("encode_ppm")?;
    if c != 3 {
        return Err(Error::dimension(
            "encode_ppm",
            format!("color output needs 3 channels, got {c}"),
        ));
    }
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    let plane = h * w;
    for pixel in 0..plane {
        for ch in 0..3 {
            out.push(quantize(image.data()[ch * plane + pixel]));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p5_scaling() {
        let bytes = b"P5\n2 2\n255\n\x00\xff\x00\xff";
        let img: Tensor<f64> = decode_image_bytes(bytes).unwrap();
        assert_eq!(img.shape(), [1, 2, 2]);
        assert_eq!(img.data(), &[0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn p6_layout_is_planar() {
        // One pixel: r=255, g=0, b=255.
        let bytes = b"P6\n1 1\n255\n\xff\x00\xff";
        let img: Tensor<f64> = decode_image_bytes(bytes).unwrap();
        assert_eq!(img.shape(), [3, 1, 1]);
        assert_eq!(img.data(), &[1.0, 0.0, 1.0]);
    }

    #[test]
    fn header_comments_are_skipped() {
        let bytes = b"P5\n# a comment\n2 1\n255\n\x10\x20";
        let img: Tensor<f64> = decode_image_bytes(bytes).unwrap();
        assert_eq!(img.shape(), [1, 1, 2]);
    }

    #[test]
    fn malformed_and_truncated_inputs_error() {
        assert!(decode_image_bytes::<f64>(b"P7\n1 1\n255\n\x00").is_err());
        assert!(decode_image_bytes::<f64>(b"P5\n2 2\n255\n\x00\x01").is_err());
        assert!(decode_image_bytes::<f64>(b"P5\n2 x\n255\n\x00\x01\x02\x03").is_err());
        assert!(decode_image_bytes::<f64>(b"P5\n2 2\n65535\n\x00\x01\x02\x03").is_err());
    }

    #[test]
    fn encode_decode_round_trip_is_lossless_at_8_bits() {
        // Values on the 1/255 grid survive the round trip exactly.
        let data: Vec<f64> = (0..16).map(|i| (i * 17) as f64 / 255.0).collect();
        let img = Tensor::from_vec(&[1, 4, 4], data).unwrap();
        let encoded = encode_pgm(&img).unwrap();
        let back: Tensor<f64> = decode_image_bytes(&encoded).unwrap();
        assert_eq!(back.data(), img.data());

        let rgb = Tensor::from_vec(&[3, 1, 2], vec![0.0, 1.0, 0.5019607843137255, 0.0, 1.0, 0.0])
            .unwrap();
        let encoded = encode_ppm(&rgb).unwrap();
        let back: Tensor<f64> = decode_image_bytes(&encoded).unwrap();
        assert_eq!(back.data(), rgb.data());
    }
}

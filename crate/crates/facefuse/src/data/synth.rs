//! Synthetic multi-attribute face-stand-in generator.
//!
//! Each attribute controls a distinct visual factor so all four tasks are
//! learnable from one image set: race sets the background intensity band,
//! age sets the ellipse size/aspect, gender picks a corner glyph, and every
//! identity gets a fixed texture pattern inside the ellipse. Identities are
//! nested inside the 2x3x4 attribute subgroups. Output is fully determined
//! by the config.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{encode_pgm, Labels, Manifest, SampleRecord, AGE_CLASSES, GENDER_CLASSES, RACE_CLASSES};
use crate::engine::Tensor;
use crate::error::{Error, Result};
use crate::rng;

/// Background intensity band per race class.
const RACE_BANDS: [f64; RACE_CLASSES] = [0.14, 0.38, 0.62, 0.86];
/// Ellipse vertical radius per age class, as a fraction of the resolution.
const AGE_RADIUS: [f64; AGE_CLASSES] = [0.22, 0.29, 0.36];
/// Ellipse aspect (rx/ry) per age class.
const AGE_ASPECT: [f64; AGE_CLASSES] = [1.0, 0.78, 0.60];
/// Fixed interior intensity of the face ellipse (the race cue survives
/// per-image mean subtraction because this stays constant).
const FACE_LEVEL: f64 = 0.5;
/// Identity texture grid and amplitude.
const TEXTURE_CELLS: usize = 6;
const TEXTURE_CONTRAST: f64 = 0.16;
/// Glyph intensity and size fraction.
const GLYPH_LEVEL: f64 = 1.0;
const GLYPH_FRAC: f64 = 0.20;
/// Pose jitter: ellipse center offset and scale range.
const CENTER_JITTER: f64 = 0.05;
const SCALE_JITTER: (f64, f64) = (0.95, 1.05);
/// Background jitter amplitude (suppressed when noise_level is 0).
const BG_JITTER: f64 = 0.03;

/// Settings for the synthetic dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Identities per (gender, age, race) subgroup; total ids = 24x this.
    pub ids_per_subgroup: usize,
    pub images_per_id: usize,
    /// Square image side in pixels.
    pub resolution: usize,
    /// Standard deviation of additive pixel noise; 0 leaves only pose jitter.
    pub noise_level: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            ids_per_subgroup: 1,
            images_per_id: 50,
            resolution: 32,
            noise_level: 0.02,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ids_per_subgroup == 0 || self.images_per_id == 0 {
            return Err(Error::config("synth: counts must be positive"));
        }
        if self.resolution < 8 {
            return Err(Error::config("synth: resolution must be at least 8"));
        }
        if !(self.noise_level >= 0.0) {
            return Err(Error::config("synth: noise level must be non-negative"));
        }
        Ok(())
    }

    pub fn total_ids(&self) -> usize {
        GENDER_CLASSES * AGE_CLASSES * RACE_CLASSES * self.ids_per_subgroup
    }
}

/// Attribute triple of one identity. Identities enumerate subgroups in
/// (gender, age, race) nesting order.
fn id_attributes(id: usize, ids_per_subgroup: usize) -> Labels {
    let subgroup = id / ids_per_subgroup;
    let race = subgroup % RACE_CLASSES;
    let age = (subgroup / RACE_CLASSES) % AGE_CLASSES;
    let gender = subgroup / (RACE_CLASSES * AGE_CLASSES);
    Labels { id, age, race, gender }
}

/// Renders one image of one identity as a `[1,R,R]` tensor in `[0,1]`.
pub fn render_image(config: &SynthConfig, id: usize, image_index: usize) -> Tensor<f64> {
    let res = config.resolution;
    let labels = id_attributes(id, config.ids_per_subgroup);

    // The texture pattern is a function of the identity only.
    let mut texture = [[0.0f64; TEXTURE_CELLS]; TEXTURE_CELLS];
    let mut trng = rng::chacha(rng::mix(config.seed, &[0x54455854, id as u64]));
    for row in texture.iter_mut() {
        for cell in row.iter_mut() {
            *cell = if trng.gen_bool(0.5) {
                TEXTURE_CONTRAST
            } else {
                -TEXTURE_CONTRAST
            };
        }
    }

    let mut r = rng::chacha(rng::mix(config.seed, &[0x494D4147, id as u64, image_index as u64]));
    let cx = (0.5 + r.gen_range(-CENTER_JITTER..=CENTER_JITTER)) * res as f64;
    let cy = (0.5 + r.gen_range(-CENTER_JITTER..=CENTER_JITTER)) * res as f64;
    let pose_scale = r.gen_range(SCALE_JITTER.0..=SCALE_JITTER.1);
    let background = if config.noise_level > 0.0 {
        RACE_BANDS[labels.race] + r.gen_range(-BG_JITTER..=BG_JITTER)
    } else {
        RACE_BANDS[labels.race]
    };

    let ry = AGE_RADIUS[labels.age] * res as f64 * pose_scale;
    let rx = ry * AGE_ASPECT[labels.age];
    let cell = 2.0 * ry / TEXTURE_CELLS as f64;

    let mut data = vec![background; res * res];
    for y in 0..res {
        for x in 0..res {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            if (dx / rx).powi(2) + (dy / ry).powi(2) <= 1.0 {
                // Texture cells are anchored to the ellipse center so the
                // identity cue moves with the pose.
                let ti = (((dy + ry) / cell) as isize).clamp(0, TEXTURE_CELLS as isize - 1);
                let tj = (((dx + ry) / cell) as isize).clamp(0, TEXTURE_CELLS as isize - 1);
                data[y * res + x] = FACE_LEVEL + texture[ti as usize][tj as usize];
            }
        }
    }

    // Gender glyph in the top-left corner: filled square for male, hollow
    // square for female (shape survives horizontal flips).
    let gs = ((res as f64 * GLYPH_FRAC) as usize).max(3);
    for y in 2..2 + gs {
        for x in 2..2 + gs {
            let on_border = y == 2 || y == 1 + gs || x == 2 || x == 1 + gs;
            if labels.gender == 0 || on_border {
                data[y * res + x] = GLYPH_LEVEL;
            }
        }
    }

    if config.noise_level > 0.0 {
        for v in data.iter_mut() {
            let n: f64 = r.sample(StandardNormal);
            *v += n * config.noise_level;
        }
    }
    for v in data.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    Tensor::from_vec(&[1, res, res], data).expect("render buffer matches shape")
}

#[derive(Serialize)]
struct ManifestLine<'a> {
    path: &'a str,
    id: usize,
    age: usize,
    race: usize,
    gender: usize,
}

/// Generates the image files and `manifest.jsonl` under `out_dir`, returning
/// the loaded-equivalent manifest. Identical configs yield byte-identical
/// files.
pub fn synth_generate(config: &SynthConfig, out_dir: &Path) -> Result<Manifest> {
    config.validate()?;
    let images_dir = out_dir.join("images");
    std::fs::create_dir_all(&images_dir)?;

    let mut records = Vec::new();
    let mut manifest_text = String::new();
    for id in 0..config.total_ids() {
        let labels = id_attributes(id, config.ids_per_subgroup);
        for i in 0..config.images_per_id {
            let image = render_image(config, id, i);
            let rel = format!("images/id{id:04}_{i:04}.pgm");
            std::fs::write(out_dir.join(&rel), encode_pgm(&image)?)?;
            let line = ManifestLine {
                path: &rel,
                id: labels.id,
                age: labels.age,
                race: labels.race,
                gender: labels.gender,
            };
            manifest_text.push_str(&serde_json::to_string(&line).expect("serializable"));
            manifest_text.push('\n');
            records.push(SampleRecord {
                path: rel.clone(),
                source_key: rel,
                labels,
            });
        }
    }
    std::fs::write(out_dir.join("manifest.jsonl"), manifest_text)?;

    Ok(Manifest {
        records,
        id_names: (0..config.total_ids()).map(|i| i.to_string()).collect(),
        base_dir: out_dir.to_path_buf(),
    })
}

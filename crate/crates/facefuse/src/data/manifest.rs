//! JSONL manifest ingestion: one object per line with keys `path`, `id`,
//! `age`, `race`, `gender`, and optional `source_key` (defaults to `path`).
//!
//! Attribute labels may be non-negative integers or the built-in names
//! (age: young/adult/old; race: asian/latin/african/white; gender:
//! male/female). Identity labels are either all integers (used as-is, must be
//! dense) or all strings (mapped to dense indices in order of first
//! appearance).

use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::data::{Labels, AGE_CLASSES, GENDER_CLASSES, RACE_CLASSES};
use crate::error::{Error, Result};

/// One manifest entry; `path` is relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRecord {
    pub path: String,
    pub source_key: String,
    pub labels: Labels,
}

impl SampleRecord {
    /// Absolute location of the image file.
    pub fn resolve(&self, manifest_dir: &Path) -> PathBuf {
        manifest_dir.join(&self.path)
    }
}

/// A validated list of samples plus the identity label map.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub records: Vec<SampleRecord>,
    /// Identity class names, indexed by label (decimal strings for integer ids).
    pub id_names: Vec<String>,
    /// Directory the record paths are relative to.
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn id_classes(&self) -> usize {
        self.id_names.len()
    }
}

const AGE_NAMES: [&str; AGE_CLASSES] = ["young", "adult", "old"];
const RACE_NAMES: [&str; RACE_CLASSES] = ["asian", "latin", "african", "white"];
const GENDER_NAMES: [&str; GENDER_CLASSES] = ["male", "female"];

fn attr_label(value: &Value, names: &[&str], field: &str) -> std::result::Result<usize, String> {
    match value {
        Value::Number(n) => {
            let v = n
                .as_u64()
                .ok_or_else(|| format!("{field} must be a non-negative integer, got {n}"))?;
            let v = v as usize;
            if v >= names.len() {
                return Err(format!("{field} label {v} out of range (max {})", names.len() - 1));
            }
            Ok(v)
        }
        Value::String(s) => {
            let lower = s.to_ascii_lowercase();
            // "latin-american" is accepted as an alias for "latin".
            let key = if lower == "latin-american" { "latin" } else { lower.as_str() };
            names
                .iter()
                .position(|n| *n == key)
                .ok_or_else(|| format!("{field} label '{s}' has no label-map entry"))
        }
        other => Err(format!("{field} must be an integer or string, got {other}")),
    }
}

enum RawId {
    Index(usize),
    Name(String),
}

/// Loads and validates a manifest file.
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::ingest(path, None, format!("cannot open manifest: {e}")))?;
    let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();

    let mut raw: Vec<(usize, String, String, RawId, usize, usize, usize)> = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::ingest(path, Some(lineno), e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let obj: Value = serde_json::from_str(&line)
            .map_err(|e| Error::ingest(path, Some(lineno), format!("invalid JSON: {e}")))?;
        let get = |key: &str| -> Result<&Value> {
            obj.get(key)
                .ok_or_else(|| Error::ingest(path, Some(lineno), format!("missing key '{key}'")))
        };
        let img_path = get("path")?
            .as_str()
            .ok_or_else(|| Error::ingest(path, Some(lineno), "'path' must be a string"))?
            .to_string();
        let id = match get("id")? {
            Value::Number(n) => RawId::Index(n.as_u64().ok_or_else(|| {
                Error::ingest(path, Some(lineno), format!("id must be non-negative, got {n}"))
            })? as usize),
            Value::String(s) => RawId::Name(s.clone()),
            other => {
                return Err(Error::ingest(
                    path,
                    Some(lineno),
                    format!("id must be an integer or string, got {other}"),
                ))
            }
        };
        let age = attr_label(get("age")?, &AGE_NAMES, "age")
            .map_err(|e| Error::ingest(path, Some(lineno), e))?;
        let race = attr_label(get("race")?, &RACE_NAMES, "race")
            .map_err(|e| Error::ingest(path, Some(lineno), e))?;
        let gender = attr_label(get("gender")?, &GENDER_NAMES, "gender")
            .map_err(|e| Error::ingest(path, Some(lineno), e))?;
        let source_key = match obj.get("source_key") {
            None => img_path.clone(),
            Some(Value::String(s)) => s.clone(),
            Some(other) => {
                return Err(Error::ingest(
                    path,
                    Some(lineno),
                    format!("source_key must be a string, got {other}"),
                ))
            }
        };
        if !base_dir.join(&img_path).is_file() {
            return Err(Error::ingest(
                path,
                Some(lineno),
                format!("unreadable image path '{img_path}'"),
            ));
        }
        raw.push((lineno, img_path, source_key, id, age, race, gender));
    }
    if raw.is_empty() {
        return Err(Error::ingest(path, None, "manifest has no records"));
    }

    // Resolve identities: all-integer (dense) or all-string (first appearance).
    let all_int = raw.iter().all(|r| matches!(r.3, RawId::Index(_)));
    let all_str = raw.iter().all(|r| matches!(r.3, RawId::Name(_)));
    if !all_int && !all_str {
        return Err(Error::ingest(
            path,
            None,
            "manifest mixes integer and string id labels",
        ));
    }

    let mut id_names: Vec<String> = Vec::new();
    let mut name_index: HashMap<String, usize> = HashMap::new();
    let mut records = Vec::with_capacity(raw.len());
    if all_int {
        let max_id = raw
            .iter()
            .map(|r| match r.3 {
                RawId::Index(i) => i,
                _ => unreachable!(),
            })
            .max()
            .unwrap();
        let mut seen = vec![false; max_id + 1];
        for (_, _, _, id, _, _, _) in &raw {
            if let RawId::Index(i) = id {
                seen[*i] = true;
            }
        }
        if let Some(hole) = seen.iter().position(|s| !s) {
            return Err(Error::ingest(
                path,
                None,
                format!("id classes must be dense: id {hole} has no records (max id {max_id})"),
            ));
        }
        id_names = (0..=max_id).map(|i| i.to_string()).collect();
    }
    for (lineno, img_path, source_key, id, age, race, gender) in raw {
        let id = match id {
            RawId::Index(i) => i,
            RawId::Name(name) => *name_index.entry(name.clone()).or_insert_with(|| {
                id_names.push(name);
                id_names.len() - 1
            }),
        };
        let labels = Labels::new(id, age, race, gender)
            .map_err(|e| Error::ingest(path, Some(lineno), e.to_string()))?;
        records.push(SampleRecord {
            path: img_path,
            source_key,
            labels,
        });
    }

    Ok(Manifest {
        records,
        id_names,
        base_dir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_manifest(dir: &Path, lines: &[&str]) -> PathBuf {
        // A real decodable image so path validation passes.
        std::fs::write(dir.join("img.pgm"), b"P5\n1 1\n255\n\x00").unwrap();
        let path = dir.join("manifest.jsonl");
        let mut f = std::fs::File::create(&path).unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        path
    }

    #[test]
    fn valid_three_line_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_manifest(
            dir.path(),
            &[
                r#"{"path":"img.pgm","id":0,"age":0,"race":0,"gender":0}"#,
                r#"{"path":"img.pgm","id":1,"age":1,"race":2,"gender":1}"#,
                r#"{"path":"img.pgm","id":2,"age":2,"race":3,"gender":0}"#,
            ],
        );
        let m = load_manifest(&path).unwrap();
        assert_eq!(m.records.len(), 3);
        assert_eq!(m.id_classes(), 3);
        assert_eq!(m.records[0].source_key, "img.pgm");
    }

    #[test]
    fn unknown_string_label_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_manifest(
            dir.path(),
            &[
                r#"{"path":"img.pgm","id":0,"age":"young","race":0,"gender":0}"#,
                r#"{"path":"img.pgm","id":0,"age":"elder","race":0,"gender":0}"#,
            ],
        );
        match load_manifest(&path).unwrap_err() {
            Error::Ingest { line, detail, .. } => {
                assert_eq!(line, Some(2));
                assert!(detail.contains("elder"));
            }
            other => panic!("expected ingest error, got {other:?}"),
        }
    }

    #[test]
    fn string_labels_map_through_builtin_names() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_manifest(
            dir.path(),
            &[
                r#"{"path":"img.pgm","id":"alice","age":"old","race":"latin-american","gender":"female"}"#,
                r#"{"path":"img.pgm","id":"bob","age":"adult","race":"White","gender":"male"}"#,
            ],
        );
        let m = load_manifest(&path).unwrap();
        assert_eq!(m.records[0].labels, Labels::new(0, 2, 1, 1).unwrap());
        assert_eq!(m.records[1].labels, Labels::new(1, 1, 3, 0).unwrap());
        assert_eq!(m.id_names, ["alice", "bob"]);
    }

    #[test]
    fn missing_key_and_missing_image_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_manifest(dir.path(), &[r#"{"path":"img.pgm","id":0,"age":0,"race":0}"#]);
        assert!(matches!(load_manifest(&path), Err(Error::Ingest { line: Some(1), .. })));

        let path = write_manifest(
            dir.path(),
            &[r#"{"path":"nope.pgm","id":0,"age":0,"race":0,"gender":0}"#],
        );
        assert!(load_manifest(&path).is_err());
    }

    #[test]
    fn sparse_integer_ids_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_manifest(
            dir.path(),
            &[
                r#"{"path":"img.pgm","id":0,"age":0,"race":0,"gender":0}"#,
                r#"{"path":"img.pgm","id":2,"age":0,"race":0,"gender":0}"#,
            ],
        );
        assert!(load_manifest(&path).is_err());
    }

    #[test]
    fn out_of_range_attribute_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_manifest(
            dir.path(),
            &[r#"{"path":"img.pgm","id":0,"age":7,"race":0,"gender":0}"#],
        );
        assert!(matches!(load_manifest(&path), Err(Error::Ingest { line: Some(1), .. })));
    }
}

//! Text feature-set files: a header line `task=<tag> dim=<d> split=<s>
//! count=<n>`, then one line per sample with the source reference, the four
//! labels, and the feature values in locale-independent decimal form.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::data::Labels;
use crate::engine::Scalar;
use crate::error::{Error, Result};
use crate::expt::{FeatureRow, FeatureSet, SplitTag};

pub fn write_features<T: Scalar>(set: &FeatureSet<T>, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        out,
        "task={} dim={} split={} count={}",
        set.tag,
        set.dim,
        set.split.name(),
        set.rows.len()
    )?;
    for row in &set.rows {
        write!(
            out,
            "{} {} {} {} {}",
            row.reference, row.labels.id, row.labels.age, row.labels.race, row.labels.gender
        )?;
        for v in &row.vector {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_features<T: Scalar>(path: &Path) -> Result<FeatureSet<T>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::ingest(path, None, format!("cannot open feature file: {e}")))?;
    let mut lines = BufReader::new(file).lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::ingest(path, Some(1), "empty feature file"))?;
    let header = header.map_err(|e| Error::ingest(path, Some(1), e.to_string()))?;
    let mut tag = None;
    let mut dim = None;
    let mut split = None;
    let mut count = None;
    for field in header.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| Error::ingest(path, Some(1), format!("bad header field '{field}'")))?;
        match k {
            "task" => tag = Some(v.to_string()),
            "dim" => dim = v.parse().ok(),
            "split" => split = Some(SplitTag::parse(v).map_err(|e| Error::ingest(path, Some(1), e.to_string()))?),
            "count" => count = v.parse().ok(),
            _ => return Err(Error::ingest(path, Some(1), format!("unknown header key '{k}'"))),
        }
    }
    let tag = tag.ok_or_else(|| Error::ingest(path, Some(1), "header missing task"))?;
    let dim: usize = dim.ok_or_else(|| Error::ingest(path, Some(1), "header missing dim"))?;
    let split = split.ok_or_else(|| Error::ingest(path, Some(1), "header missing split"))?;
    let count: usize = count.ok_or_else(|| Error::ingest(path, Some(1), "header missing count"))?;

    let mut rows = Vec::with_capacity(count);
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::ingest(path, Some(lineno), e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut tok = line.split_whitespace();
        let reference = tok
            .next()
            .ok_or_else(|| Error::ingest(path, Some(lineno), "missing reference"))?
            .to_string();
        let mut label = |name: &str| -> Result<usize> {
            tok.next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::ingest(path, Some(lineno), format!("bad {name} label")))
        };
        let labels = Labels::new(label("id")?, label("age")?, label("race")?, label("gender")?)
            .map_err(|e| Error::ingest(path, Some(lineno), e.to_string()))?;
        let vector: Vec<T> = tok
            .map(|t| T::parse(t).ok_or_else(|| Error::ingest(path, Some(lineno), format!("bad value '{t}'"))))
            .collect::<Result<_>>()?;
        if vector.len() != dim {
            return Err(Error::ingest(
                path,
                Some(lineno),
                format!("row has {} values, header says {dim}", vector.len()),
            ));
        }
        rows.push(FeatureRow { reference, labels, vector });
    }
    if rows.len() != count {
        return Err(Error::ingest(
            path,
            None,
            format!("feature file has {} rows, header says {count}", rows.len()),
        ));
    }
    Ok(FeatureSet { tag, dim, split, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn round_trip_preserves_values_exactly() {
        let mut r = crate::rng::chacha(31);
        let rows: Vec<FeatureRow<f32>> = (0..5)
            .map(|i| FeatureRow {
                reference: format!("img{i}.pgm#aug{i}"),
                labels: Labels::new(i, i % 3, i % 4, i % 2).unwrap(),
                vector: (0..7).map(|_| r.gen_range(-2.0..2.0)).collect(),
            })
            .collect();
        let set = FeatureSet { tag: "id".into(), dim: 7, split: SplitTag::Test, rows };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("id.features");
        write_features(&set, &path).unwrap();
        let back: FeatureSet<f32> = read_features(&path).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn writing_twice_is_byte_identical() {
        let set = FeatureSet::<f64> {
            tag: "age".into(),
            dim: 2,
            split: SplitTag::Train,
            rows: vec![FeatureRow {
                reference: "a".into(),
                labels: Labels::new(0, 0, 0, 0).unwrap(),
                vector: vec![0.1, -0.25],
            }],
        };
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.features");
        let p2 = dir.path().join("b.features");
        write_features(&set, &p1).unwrap();
        write_features(&set, &p2).unwrap();
        assert_eq!(std::fs::read(p1).unwrap(), std::fs::read(p2).unwrap());
    }

    #[test]
    fn malformed_rows_are_rejected_with_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.features");
        std::fs::write(&path, "task=id dim=2 split=train count=1\nref 0 0 0 0 1.0\n").unwrap();
        match read_features::<f64>(&path).unwrap_err() {
            Error::Ingest { line, detail, .. } => {
                assert_eq!(line, Some(2));
                assert!(detail.contains("1 values"));
            }
            other => panic!("unexpected {other:?}"),
        }

        std::fs::write(&path, "task=id dim=2 split=nowhere count=0\n").unwrap();
        assert!(read_features::<f64>(&path).is_err());
    }
}

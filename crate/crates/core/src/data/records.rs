use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::NUM_CLASSES;
use crate::error::{Error, Result};
use crate::perturb::{Family, Level};

/// One inference result. Serialized as a single JSON object per line with
/// exactly these field names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sample_id: u64,
    pub true_label: u8,
    pub softmax: Vec<f64>,
    pub predicted_label: u8,
    pub perturbation_type: Option<Family>,
    pub perturbation_level: Option<u32>,
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl PredictionRecord {
    pub fn new(
        sample_id: u64,
        true_label: u8,
        softmax: Vec<f64>,
        perturbation: Option<(Family, Level)>,
    ) -> Self {
        let predicted_label = argmax(&softmax) as u8;
        Self {
            sample_id,
            true_label,
            softmax,
            predicted_label,
            perturbation_type: perturbation.map(|(f, _)| f),
            perturbation_level: perturbation.map(|(_, l)| l.get()),
        }
    }

    pub fn is_correct(&self) -> bool {
        self.true_label == self.predicted_label
    }

    pub fn perturbation(&self) -> Option<(Family, Level)> {
        match (self.perturbation_type, self.perturbation_level) {
            (Some(f), Some(l)) => Level::new(l).ok().map(|l| (f, l)),
            _ => None,
        }
    }

    /// Check every record invariant, returning a description of the first
    /// violation.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.true_label as usize >= NUM_CLASSES {
            return Err(format!("true_label {} out of range", self.true_label));
        }
        if self.softmax.len() != NUM_CLASSES {
            return Err(format!("softmax has {} entries", self.softmax.len()));
        }
        if self.softmax.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err("softmax entries must be finite and non-negative".into());
        }
        let sum: f64 = self.softmax.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(format!("softmax sums to {sum}"));
        }
        if self.predicted_label as usize != argmax(&self.softmax) {
            return Err(format!(
                "predicted_label {} is not the softmax argmax",
                self.predicted_label
            ));
        }
        match (self.perturbation_type, self.perturbation_level) {
            (None, None) => Ok(()),
            (Some(_), Some(l)) if (1..=10).contains(&l) => Ok(()),
            (Some(_), Some(l)) => Err(format!("perturbation_level {l} outside 1..=10")),
            _ => Err("perturbation_type and perturbation_level must appear together".into()),
        }
    }
}

/// Streaming JSON-lines writer.
pub struct RecordWriter {
    path: PathBuf,
    out: BufWriter<File>,
    written: usize,
}

impl RecordWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_owned(),
            out: BufWriter::new(file),
            written: 0,
        })
    }

    pub fn write(&mut self, record: &PredictionRecord) -> Result<()> {
        record.validate().map_err(|reason| Error::MalformedLine {
            line: self.written + 1,
            reason,
        })?;
        serde_json::to_writer(&mut self.out, record)
            .map_err(|e| Error::io(&self.path, e.into()))?;
        self.out
            .write_all(b"\n")
            .map_err(|e| Error::io(&self.path, e))?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> usize {
        self.written
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<usize> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.written)
    }
}

/// Streaming JSON-lines reader; blank lines are skipped.
pub struct RecordReader {
    path: PathBuf,
    lines: std::io::Lines<BufReader<File>>,
    line: usize,
}

impl RecordReader {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_owned(),
            lines: BufReader::new(file).lines(),
            line: 0,
        })
    }
}

pub fn parse_record_line(text: &str, line: usize) -> Result<PredictionRecord> {
    let record: PredictionRecord =
        serde_json::from_str(text).map_err(|e| Error::MalformedLine {
            line,
            reason: e.to_string(),
        })?;
    record
        .validate()
        .map_err(|reason| Error::MalformedLine { line, reason })?;
    Ok(record)
}

impl Iterator for RecordReader {
    type Item = Result<PredictionRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line += 1;
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => return Some(Err(Error::io(&self.path, e))),
            };
            if text.trim().is_empty() {
                continue;
            }
            return Some(parse_record_line(&text, self.line));
        }
    }
}

pub fn write_records(records: &[PredictionRecord], path: &Path) -> Result<()> {
    let mut w = RecordWriter::create(path)?;
    for r in records {
        w.write(r)?;
    }
    w.finish().map(drop)
}

pub fn read_records(path: &Path) -> Result<Vec<PredictionRecord>> {
    RecordReader::open(path)?.collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn uniform_record() -> PredictionRecord {
        PredictionRecord::new(3, 9, vec![0.1; 10], None)
    }

    #[test]
    fn empty_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        write_records(&[], &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap().len(), 0);
        assert!(read_records(&path).unwrap().is_empty());
    }

    #[test]
    fn single_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let rec = uniform_record();
        write_records(std::slice::from_ref(&rec), &path).unwrap();
        assert_eq!(read_records(&path).unwrap(), vec![rec]);
    }

    #[test]
    fn field_names_on_the_wire() {
        let rec = PredictionRecord::new(
            42,
            3,
            vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            Some((Family::Fog, Level::new(3).unwrap())),
        );
        let json: serde_json::Value = serde_json::to_value(&rec).unwrap();
        let obj = json.as_object().unwrap();
        let mut keys: Vec<_> = obj.keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "perturbation_level",
                "perturbation_type",
                "predicted_label",
                "sample_id",
                "softmax",
                "true_label"
            ]
        );
        assert_eq!(obj["perturbation_type"], "Fog");
        assert_eq!(obj["perturbation_level"], 3);
    }

    #[test]
    fn rejects_invariant_violations() {
        let bad = [
            r#"{"sample_id":0,"true_label":1,"softmax":[0.5,0.5],"predicted_label":0,"perturbation_type":null,"perturbation_level":null}"#,
            r#"{"sample_id":0,"true_label":1,"softmax":[0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1],"predicted_label":4,"perturbation_type":null,"perturbation_level":null}"#,
            r#"{"sample_id":0,"true_label":1,"softmax":[0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1],"predicted_label":0,"perturbation_type":"Fog","perturbation_level":null}"#,
            r#"{"sample_id":0,"true_label":1,"softmax":[0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1],"predicted_label":0,"perturbation_type":"Fog","perturbation_level":11}"#,
            r#"{"sample_id":0,"true_label":1,"softmax":[0.2,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1],"predicted_label":0,"perturbation_type":null,"perturbation_level":null}"#,
            r#"{"sample_id":0,"true_label":12,"softmax":[0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1],"predicted_label":0,"perturbation_type":null,"perturbation_level":null}"#,
            r#"{"sample_id":0,"true_label":1,"softmax":[0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1],"predicted_label":0,"perturbation_type":"Haze","perturbation_level":2}"#,
            "not json",
        ];
        for (i, line) in bad.iter().enumerate() {
            assert!(
                matches!(parse_record_line(line, i + 1), Err(Error::MalformedLine { .. })),
                "line {i} accepted"
            );
        }
    }

    fn random_record(rng: &mut rng::Rng, id: u64) -> PredictionRecord {
        let raw: Vec<f64> = (0..10).map(|_| rng::unit_f64(rng) + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        let softmax = raw.iter().map(|v| v / total).collect();
        let perturbation = (rng::below(rng, 2) == 1).then(|| {
            (
                Family::ALL[rng::below(rng, 12) as usize],
                Level::new(1 + rng::below(rng, 10) as u32).unwrap(),
            )
        });
        PredictionRecord::new(id, rng::below(rng, 10) as u8, softmax, perturbation)
    }

    #[test]
    fn random_records_are_stable() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
        let mut rng = rng::seeded_rng(2024);
        let records: Vec<_> = (0..1000).map(|i| random_record(&mut rng, i)).collect();
        write_records(&records, &a).unwrap();
        let back = read_records(&a).unwrap();
        assert_eq!(back.len(), records.len());
        for (x, y) in records.iter().zip(&back) {
            assert_eq!(x.sample_id, y.sample_id);
            assert_eq!(x.true_label, y.true_label);
            assert_eq!(x.predicted_label, y.predicted_label);
            assert_eq!(x.perturbation_type, y.perturbation_type);
            assert_eq!(x.perturbation_level, y.perturbation_level);
            // Shortest round-trip formatting makes this exact.
            assert_eq!(x.softmax, y.softmax);
        }
        write_records(&back, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn concatenated_files_concatenate_records() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b, ab) = (
            dir.path().join("a"),
            dir.path().join("b"),
            dir.path().join("ab"),
        );
        let mut rng = rng::seeded_rng(5);
        let first: Vec<_> = (0..20).map(|i| random_record(&mut rng, i)).collect();
        let second: Vec<_> = (0..13).map(|i| random_record(&mut rng, i)).collect();
        write_records(&first, &a).unwrap();
        write_records(&second, &b).unwrap();
        let mut joined = std::fs::read(&a).unwrap();
        joined.extend(std::fs::read(&b).unwrap());
        std::fs::write(&ab, joined).unwrap();
        assert_eq!(read_records(&ab).unwrap(), [first, second].concat());
    }
}

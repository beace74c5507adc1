//! Line-delimited JSON codec for the interchange record kinds.
//!
//! Every line holds one JSON object. Reads keep file order and report the
//! 1-based line of the first bad record. Writes sort by each kind's primary
//! key and render reals as 17 significant digits, so two writes of the same
//! records are byte-identical and every `f64` survives a round trip.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use super::records::{check_id, check_unit, PredictionRecord, RelationRecord, ScoreRecord};
use crate::error::{Error, Result};

/// A record kind that can live in a line-delimited interchange file.
pub trait Record: DeserializeOwned + Sized {
    /// Field names this kind understands; anything else counts as unknown.
    const FIELDS: &'static [&'static str];

    /// Invariant check run on every read and write.
    fn check(&self) -> std::result::Result<(), String>;

    /// Key that must be unique within a file, if the kind has one.
    fn unique_key(&self) -> Option<&str> {
        None
    }

    /// Order used when writing.
    fn write_order(&self, other: &Self) -> Ordering;

    /// Append the record as a single JSON line (without the newline).
    fn render(&self, out: &mut String);
}

/// Records read from a file, plus the number of ignored unknown fields.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordFile<T> {
    pub records: Vec<T>,
    pub unknown_fields: usize,
}

pub fn read_records<T: Record>(path: impl AsRef<Path>) -> Result<RecordFile<T>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_records(BufReader::new(file), path)
}

/// Parse records from any buffered source; `path` is used only in messages.
pub fn parse_records<T: Record>(input: impl BufRead, path: &Path) -> Result<RecordFile<T>> {
    let mut records = Vec::new();
    let mut unknown_fields = 0;
    let mut seen = HashSet::new();
    for (index, line) in input.lines().enumerate() {
        let line_no = index + 1;
        let bad = |message: String| Error::Record {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let line = line.map_err(|e| bad(format!("read failure: {e}")))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(trimmed).map_err(|e| bad(format!("invalid JSON: {e}")))?;
        let Value::Object(object) = value else {
            return Err(bad("record must be a JSON object".into()));
        };
        unknown_fields += count_unknown(&object, T::FIELDS);
        let record: T = serde_json::from_value(Value::Object(object))
            .map_err(|e| bad(format!("invalid record: {e}")))?;
        record.check().map_err(bad)?;
        if let Some(key) = record.unique_key() {
            if !seen.insert(key.to_string()) {
                return Err(bad(format!("duplicate choice_id '{key}'")));
            }
        }
        records.push(record);
    }
    Ok(RecordFile {
        records,
        unknown_fields,
    })
}

fn count_unknown(object: &Map<String, Value>, fields: &[&str]) -> usize {
    object
        .keys()
        .filter(|k| !fields.contains(&k.as_str()))
        .count()
}

/// Render records sorted by primary key, one per line.
pub fn render_records<T: Record>(records: &[T]) -> Result<String> {
    let mut sorted: Vec<&T> = records.iter().collect();
    sorted.sort_by(|a, b| a.write_order(b));
    let mut out = String::new();
    let mut seen = HashSet::new();
    for record in sorted {
        record.check().map_err(Error::schema)?;
        if let Some(key) = record.unique_key() {
            if !seen.insert(key) {
                return Err(Error::schema(format!("duplicate choice_id '{key}'")));
            }
        }
        record.render(&mut out);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_records<T: Record>(records: &[T], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = render_records(records)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Real number with 17 significant digits; exact for every finite `f64`.
pub(crate) fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

impl Record for ScoreRecord {
    const FIELDS: &'static [&'static str] = &["choice_id", "p_true"];

    fn check(&self) -> std::result::Result<(), String> {
        check_id("choice_id", &self.choice_id)?;
        check_unit("p_true", self.p_true)
    }

    fn unique_key(&self) -> Option<&str> {
        Some(&self.choice_id)
    }

    fn write_order(&self, other: &Self) -> Ordering {
        self.choice_id.cmp(&other.choice_id)
    }

    fn render(&self, out: &mut String) {
        out.push_str(&format!(
            "{{\"choice_id\": {}, \"p_true\": {}}}",
            string(&self.choice_id),
            real(self.p_true)
        ));
    }
}

impl Record for PredictionRecord {
    const FIELDS: &'static [&'static str] = &["choice_id", "label", "p_true"];

    fn check(&self) -> std::result::Result<(), String> {
        check_id("choice_id", &self.choice_id)?;
        check_unit("p_true", self.p_true)
    }

    fn unique_key(&self) -> Option<&str> {
        Some(&self.choice_id)
    }

    fn write_order(&self, other: &Self) -> Ordering {
        self.choice_id.cmp(&other.choice_id)
    }

    fn render(&self, out: &mut String) {
        out.push_str(&format!(
            "{{\"choice_id\": {}, \"label\": {}, \"p_true\": {}}}",
            string(&self.choice_id),
            self.label,
            real(self.p_true)
        ));
    }
}

impl Record for RelationRecord {
    const FIELDS: &'static [&'static str] = &["group_id", "src", "dst", "probs"];

    fn check(&self) -> std::result::Result<(), String> {
        check_id("group_id", &self.group_id)?;
        check_id("src", &self.src)?;
        check_id("dst", &self.dst)?;
        if self.src == self.dst {
            return Err(format!("src and dst are both '{}'", self.src));
        }
        self.probs.check()
    }

    fn write_order(&self, other: &Self) -> Ordering {
        (&self.group_id, &self.src, &self.dst).cmp(&(&other.group_id, &other.src, &other.dst))
    }

    fn render(&self, out: &mut String) {
        out.push_str(&format!(
            "{{\"group_id\": {}, \"src\": {}, \"dst\": {}, \"probs\": {{\"entail\": {}, \"contradict\": {}, \"neutral\": {}}}}}",
            string(&self.group_id),
            string(&self.src),
            string(&self.dst),
            real(self.probs.entail),
            real(self.probs.contradict),
            real(self.probs.neutral),
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::records::{Relation, RelationProbs};
    use std::io::Cursor;

    fn parse<T: Record>(text: &str) -> Result<RecordFile<T>> {
        parse_records(Cursor::new(text), Path::new("mem.jsonl"))
    }

    #[test]
    fn reads_three_scores() {
        let text = "{\"choice_id\": \"a\", \"p_true\": 0.93}\n{\"choice_id\": \"b\", \"p_true\": 0}\n\n{\"choice_id\": \"c\", \"p_true\": 1}\n";
        let file = parse::<ScoreRecord>(text).unwrap();
        assert_eq!(file.records.len(), 3);
        assert_eq!(file.records[0].p_true, 0.93);
        assert_eq!(file.unknown_fields, 0);
    }

    #[test]
    fn relation_line_argmax() {
        let text = r#"{"group_id": "g", "src": "a", "dst": "b", "probs": {"entail": 0.7, "contradict": 0.2, "neutral": 0.1}}"#;
        let file = parse::<RelationRecord>(text).unwrap();
        assert_eq!(file.records[0].argmax().0, Relation::Entail);
    }

    #[test]
    fn out_of_range_score_cites_line() {
        let err = parse::<ScoreRecord>("{\"choice_id\": \"a\", \"p_true\": 1.3}\n").unwrap_err();
        match err {
            Error::Record { line, message, .. } => {
                assert_eq!(line, 1);
                assert!(message.contains("p_true"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_score_is_schema_error() {
        let text = "{\"choice_id\": \"a\", \"p_true\": 0.1}\n{\"choice_id\": \"a\", \"p_true\": 0.2}\n";
        let err = parse::<ScoreRecord>(text).unwrap_err();
        assert!(matches!(err, Error::Record { line: 2, .. }));
    }

    #[test]
    fn bad_sum_is_schema_error() {
        let text = r#"{"group_id": "g", "src": "a", "dst": "b", "probs": {"entail": 0.7, "contradict": 0.2, "neutral": 0.2}}"#;
        assert!(matches!(
            parse::<RelationRecord>(text).unwrap_err(),
            Error::Record { line: 1, .. }
        ));
    }

    #[test]
    fn self_relation_rejected() {
        let text = r#"{"group_id": "g", "src": "a", "dst": "a", "probs": {"entail": 1, "contradict": 0, "neutral": 0}}"#;
        assert!(parse::<RelationRecord>(text).is_err());
    }

    #[test]
    fn unknown_fields_are_counted() {
        let text = "{\"choice_id\": \"a\", \"p_true\": 0.5, \"model\": \"x\", \"rank\": 3}\n";
        let file = parse::<ScoreRecord>(text).unwrap();
        assert_eq!(file.unknown_fields, 2);
    }

    #[test]
    fn malformed_json_cites_line() {
        let text = "{\"choice_id\": \"a\", \"p_true\": 0.5}\n{\"choice_id\": \n";
        assert!(matches!(
            parse::<ScoreRecord>(text).unwrap_err(),
            Error::Record { line: 2, .. }
        ));
    }

    #[test]
    fn empty_list_round_trips() {
        let text = render_records::<ScoreRecord>(&[]).unwrap();
        assert!(text.is_empty());
        assert!(parse::<ScoreRecord>(&text).unwrap().records.is_empty());
    }

    #[test]
    fn writes_sorted_with_full_precision() {
        let records = vec![
            ScoreRecord {
                choice_id: "b".into(),
                p_true: 0.1,
            },
            ScoreRecord {
                choice_id: "a".into(),
                p_true: 0.93,
            },
        ];
        let text = render_records(&records).unwrap();
        assert_eq!(
            text,
            "{\"choice_id\": \"a\", \"p_true\": 9.3000000000000005e-1}\n{\"choice_id\": \"b\", \"p_true\": 1.0000000000000001e-1}\n"
        );
    }

    #[test]
    fn relation_render_parses_back() {
        let record = RelationRecord {
            group_id: "q\"1".into(),
            src: "a".into(),
            dst: "b".into(),
            probs: RelationProbs::new(0.1, 0.2, 0.7),
        };
        let text = render_records(std::slice::from_ref(&record)).unwrap();
        let back = parse::<RelationRecord>(&text).unwrap();
        assert_eq!(back.records, vec![record]);
    }
}

//! Adapter for the MultiRC JSON release.
//!
//! Layout: `{"data": [{"paragraph": {"text", "questions": [{"question",
//! "answers": [{"text", "isAnswer"}]}]}}]}`. Other fields are ignored.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::ParsedDataset;
use crate::error::{Error, Result};
use crate::model::{validate_dataset, Choice, Dataset, Paragraph, Question};

#[derive(Deserialize)]
struct MultircFile {
    data: Vec<MultircEntry>,
}

#[derive(Deserialize)]
struct MultircEntry {
    paragraph: MultircParagraph,
}

#[derive(Deserialize)]
struct MultircParagraph {
    text: String,
    questions: Vec<MultircQuestion>,
}

#[derive(Deserialize)]
struct MultircQuestion {
    question: String,
    answers: Vec<MultircAnswer>,
}

#[derive(Deserialize)]
struct MultircAnswer {
    text: String,
    #[serde(rename = "isAnswer")]
    is_answer: Option<bool>,
}

pub fn parse_multirc(path: impl AsRef<Path>) -> Result<ParsedDataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_multirc_bytes(&bytes, path)
}

pub fn parse_multirc_bytes(bytes: &[u8], path: &Path) -> Result<ParsedDataset> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let file: MultircFile = serde_path_to_error::deserialize(de).map_err(|e| {
        Error::schema(format!("{}: at '{}': {}", path.display(), e.path(), e.inner()))
    })?;

    let mut dataset = Dataset::default();
    let mut missing_gold = 0;
    for (pi, entry) in file.data.into_iter().enumerate() {
        let pid = format!("p{pi}");
        for (qi, question) in entry.paragraph.questions.into_iter().enumerate() {
            let qid = format!("{pid}-q{qi}");
            for (ci, answer) in question.answers.into_iter().enumerate() {
                if answer.is_answer.is_none() {
                    missing_gold += 1;
                }
                dataset.choices.push(Choice {
                    id: format!("{qid}-c{ci}"),
                    question_id: qid.clone(),
                    text: answer.text,
                    gold: answer.is_answer,
                });
            }
            dataset.questions.push(Question {
                id: qid,
                paragraph_id: pid.clone(),
                text: question.question,
            });
        }
        dataset.paragraphs.push(Paragraph {
            id: pid,
            text: entry.paragraph.text,
        });
    }

    let report = validate_dataset(&dataset);
    Ok(ParsedDataset {
        dataset,
        report,
        missing_gold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = r#"{"data": [{"id": "news-1", "paragraph": {"text": "Sent 1: ...", "questions": [
        {"question": "Who?", "idx": "0", "answers": [
            {"text": "A", "isAnswer": true, "scores": {}},
            {"text": "B", "isAnswer": false},
            {"text": "C", "isAnswer": true}]},
        {"question": "Why?", "idx": "1", "answers": [
            {"text": "D", "isAnswer": false},
            {"text": "E"}]}
    ]}}]}"#;

    #[test]
    fn fixture_counts() {
        let parsed = parse_multirc_bytes(FIXTURE.as_bytes(), Path::new("m.json")).unwrap();
        let ds = &parsed.dataset;
        assert_eq!((ds.paragraphs.len(), ds.questions.len(), ds.choices.len()), (1, 2, 5));
        assert_eq!(parsed.missing_gold, 1);
        assert!(parsed.report.is_valid());
        assert_eq!(ds.choices[2].id, "p0-q0-c2");
        assert_eq!(ds.choices[2].text, "C");
        assert_eq!(ds.choices[4].gold, None);
    }

    #[test]
    fn truncated_file_is_schema_error() {
        let cut = &FIXTURE.as_bytes()[..FIXTURE.len() / 2];
        assert!(matches!(
            parse_multirc_bytes(cut, Path::new("m.json")),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn missing_field_names_location() {
        let bad = r#"{"data": [{"paragraph": {"text": "x", "questions": [{"question": "q", "answers": [{"isAnswer": true}]}]}}]}"#;
        let err = parse_multirc_bytes(bad.as_bytes(), Path::new("m.json")).unwrap_err();
        assert!(err.to_string().contains("data[0].paragraph.questions[0].answers[0]"), "{err}");
    }

    #[test]
    fn parsing_is_idempotent() {
        let a = parse_multirc_bytes(FIXTURE.as_bytes(), Path::new("m.json")).unwrap();
        let b = parse_multirc_bytes(FIXTURE.as_bytes(), Path::new("m.json")).unwrap();
        assert_eq!(a.dataset, b.dataset);
    }
}

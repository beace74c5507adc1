//! The canonical dataset document: one nested JSON object.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Choice, Dataset, Paragraph, Question};

#[derive(Debug, Serialize, Deserialize)]
struct DocumentRepr {
    paragraphs: Vec<ParagraphRepr>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ParagraphRepr {
    id: String,
    #[serde(default)]
    text: String,
    questions: Vec<QuestionRepr>,
}

#[derive(Debug, Serialize, Deserialize)]
struct QuestionRepr {
    id: String,
    #[serde(default)]
    text: String,
    choices: Vec<ChoiceRepr>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ChoiceRepr {
    id: String,
    #[serde(default)]
    text: String,
    gold: Option<bool>,
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&bytes, path)
}

pub fn parse_dataset(bytes: &[u8], path: &Path) -> Result<Dataset> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let doc: DocumentRepr = serde_path_to_error::deserialize(de).map_err(|e| {
        Error::schema(format!(
            "{}: at '{}': {}",
            path.display(),
            e.path(),
            e.inner()
        ))
    })?;

    let mut dataset = Dataset::default();
    for p in doc.paragraphs {
        for q in p.questions {
            for c in q.choices {
                dataset.choices.push(Choice {
                    id: c.id,
                    question_id: q.id.clone(),
                    text: c.text,
                    gold: c.gold,
                });
            }
            dataset.questions.push(Question {
                id: q.id,
                paragraph_id: p.id.clone(),
                text: q.text,
            });
        }
        dataset.paragraphs.push(Paragraph {
            id: p.id,
            text: p.text,
        });
    }
    Ok(dataset)
}

/// Render the dataset as a pretty-printed nested document.
///
/// Entities keep dataset order under their parents. Datasets with dangling
/// references cannot be nested and are rejected.
pub fn render_dataset(dataset: &Dataset) -> Result<String> {
    let mut questions_of: HashMap<&str, Vec<&Question>> = HashMap::new();
    for q in &dataset.questions {
        questions_of.entry(q.paragraph_id.as_str()).or_default().push(q);
    }
    let choices_of = dataset.choices_by_question();

    let mut placed_questions = 0;
    let mut placed_choices = 0;
    let doc = DocumentRepr {
        paragraphs: dataset
            .paragraphs
            .iter()
            .map(|p| ParagraphRepr {
                id: p.id.clone(),
                text: p.text.clone(),
                questions: questions_of
                    .get(p.id.as_str())
                    .into_iter()
                    .flatten()
                    .map(|q| {
                        placed_questions += 1;
                        QuestionRepr {
                            id: q.id.clone(),
                            text: q.text.clone(),
                            choices: choices_of
                                .get(q.id.as_str())
                                .into_iter()
                                .flatten()
                                .map(|c| {
                                    placed_choices += 1;
                                    ChoiceRepr {
                                        id: c.id.clone(),
                                        text: c.text.clone(),
                                        gold: c.gold,
                                    }
                                })
                                .collect(),
                        }
                    })
                    .collect(),
            })
            .collect(),
    };
    if placed_questions != dataset.questions.len() || placed_choices != dataset.choices.len() {
        return Err(Error::schema(
            "dataset has dangling references and cannot be written as a document",
        ));
    }
    let mut text = serde_json::to_string_pretty(&doc).expect("document always serializes");
    text.push('\n');
    Ok(text)
}

pub fn write_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = render_dataset(dataset)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{"paragraphs": [{"id": "p0", "text": "t", "questions": [
        {"id": "q0", "text": "?", "choices": [{"id": "c0", "text": "a", "gold": true}, {"id": "c1", "text": "b", "gold": null}]},
        {"id": "q1", "text": "?", "choices": [{"id": "c2", "text": "c", "gold": false}]}
    ]}]}"#;

    #[test]
    fn parses_nested_document() {
        let ds = parse_dataset(DOC.as_bytes(), Path::new("d.json")).unwrap();
        assert_eq!((ds.paragraphs.len(), ds.questions.len(), ds.choices.len()), (1, 2, 3));
        assert_eq!(ds.choices[1].gold, None);
        assert_eq!(ds.choices[2].question_id, "q1");
    }

    #[test]
    fn round_trips_through_text() {
        let ds = parse_dataset(DOC.as_bytes(), Path::new("d.json")).unwrap();
        let text = render_dataset(&ds).unwrap();
        assert_eq!(parse_dataset(text.as_bytes(), Path::new("d.json")).unwrap(), ds);
        assert_eq!(render_dataset(&ds).unwrap(), text);
    }

    #[test]
    fn error_names_document_path() {
        let bad = r#"{"paragraphs": [{"id": "p0", "questions": [{"id": "q0", "choices": [{"text": "x"}]}]}]}"#;
        let err = parse_dataset(bad.as_bytes(), Path::new("d.json")).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("paragraphs[0].questions[0].choices[0]"), "{message}");
    }
}

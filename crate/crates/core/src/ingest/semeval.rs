//! Adapter for the SemEval-2018 Task 11 XML release.
//!
//! Layout: `<data><instance id><text/><questions><question id text>
//! <answer id text correct="True|False"/></question></questions></instance></data>`.

use std::fs;
use std::path::Path;

use roxmltree::{Document, Node};

use super::ParsedDataset;
use crate::error::{Error, Result};
use crate::model::{validate_dataset, validate_exactly_one, Choice, Dataset, Paragraph, Question};

pub fn parse_semeval(path: impl AsRef<Path>) -> Result<ParsedDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_semeval_str(&text, path)
}

fn elements<'a, 'input>(node: Node<'a, 'input>, name: &'a str) -> impl Iterator<Item = Node<'a, 'input>> {
    node.children()
        .filter(move |n| n.is_element() && n.tag_name().name() == name)
}

pub fn parse_semeval_str(text: &str, path: &Path) -> Result<ParsedDataset> {
    let fail = |at: &str, message: &str| {
        Error::schema(format!("{}: at '{at}': {message}", path.display()))
    };
    let doc = Document::parse(text).map_err(|e| fail("/", &e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "data" {
        return Err(fail("/", "root element must be <data>"));
    }
    let attr = |node: Node, name: &str, at: &str| {
        node.attribute(name)
            .map(str::to_string)
            .ok_or_else(|| fail(at, &format!("missing attribute '{name}'")))
    };

    let mut dataset = Dataset::default();
    let mut missing_gold = 0;
    for (ii, instance) in elements(root, "instance").enumerate() {
        let at = format!("data/instance[{ii}]");
        let pid = format!("p{}", attr(instance, "id", &at)?);
        let passage = elements(instance, "text")
            .next()
            .ok_or_else(|| fail(&at, "missing <text>"))?
            .text()
            .unwrap_or("")
            .trim()
            .to_string();
        let questions = elements(instance, "questions")
            .next()
            .ok_or_else(|| fail(&at, "missing <questions>"))?;
        for (qi, question) in elements(questions, "question").enumerate() {
            let at = format!("{at}/questions/question[{qi}]");
            let qid = format!("{pid}-q{}", attr(question, "id", &at)?);
            let question_text = attr(question, "text", &at)?;
            for (ai, answer) in elements(question, "answer").enumerate() {
                let at = format!("{at}/answer[{ai}]");
                let gold = match answer.attribute("correct") {
                    None => {
                        missing_gold += 1;
                        None
                    }
                    Some(v) if v.eq_ignore_ascii_case("true") => Some(true),
                    Some(v) if v.eq_ignore_ascii_case("false") => Some(false),
                    Some(v) => return Err(fail(&at, &format!("bad 'correct' value '{v}'"))),
                };
                dataset.choices.push(Choice {
                    id: format!("{qid}-c{}", attr(answer, "id", &at)?),
                    question_id: qid.clone(),
                    text: attr(answer, "text", &at)?,
                    gold,
                });
            }
            dataset.questions.push(Question {
                id: qid,
                paragraph_id: pid.clone(),
                text: question_text,
            });
        }
        dataset.paragraphs.push(Paragraph { id: pid, text: passage });
    }

    let mut report = validate_dataset(&dataset);
    report
        .violations
        .extend(validate_exactly_one(&dataset, Some(2)));
    Ok(ParsedDataset {
        dataset,
        report,
        missing_gold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Violation;

    const FIXTURE: &str = r#"<?xml version="1.0" encoding="utf-8"?>
<data>
  <instance id="3" scenario="making an omelette">
    <text>I cracked the eggs once the pan was hot.</text>
    <questions>
      <question id="0" text="When were the eggs added?" type="text">
        <answer correct="False" id="0" text="When they turned on the stove"/>
        <answer correct="True" id="1" text="When the pan was the right temperature"/>
      </question>
      <question id="1" text="Why did they use the stove?" type="commonsense">
        <answer correct="False" id="0" text="They used a microwave"/>
        <answer correct="True" id="1" text="To heat up the pan"/>
      </question>
    </questions>
  </instance>
</data>"#;

    #[test]
    fn fixture_counts() {
        let parsed = parse_semeval_str(FIXTURE, Path::new("s.xml")).unwrap();
        let ds = &parsed.dataset;
        assert_eq!((ds.paragraphs.len(), ds.questions.len(), ds.choices.len()), (1, 2, 4));
        assert!(parsed.report.is_valid(), "{:?}", parsed.report.violations);
        assert_eq!(ds.choices[1].id, "p3-q0-c1");
        assert_eq!(ds.choices[1].gold, Some(true));
        assert!(ds.is_exactly_one_regime());
    }

    #[test]
    fn double_true_is_flagged_not_fixed() {
        let text = FIXTURE.replacen("correct=\"False\"", "correct=\"True\"", 1);
        let parsed = parse_semeval_str(&text, Path::new("s.xml")).unwrap();
        assert_eq!(parsed.dataset.choices[0].gold, Some(true));
        assert_eq!(
            parsed.report.violations,
            vec![Violation::GoldTrueCount {
                question: "p3-q0".into(),
                expected: 1,
                found: 2
            }]
        );
    }

    #[test]
    fn malformed_xml_is_schema_error() {
        let cut = &FIXTURE[..FIXTURE.len() - 40];
        assert!(matches!(
            parse_semeval_str(cut, Path::new("s.xml")),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn missing_attribute_names_location() {
        let text = FIXTURE.replace(" text=\"To heat up the pan\"", "");
        let err = parse_semeval_str(&text, Path::new("s.xml")).unwrap_err();
        assert!(err.to_string().contains("question[1]/answer[1]"), "{err}");
    }

    #[test]
    fn unlabeled_answers_are_counted() {
        let text = FIXTURE
            .replace("correct=\"False\" ", "")
            .replace("correct=\"True\" ", "");
        let parsed = parse_semeval_str(&text, Path::new("s.xml")).unwrap();
        assert_eq!(parsed.missing_gold, 4);
        assert!(parsed.report.is_valid());
    }
}

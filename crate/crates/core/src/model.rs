//! Paragraphs, questions, choices and the inference groups built over them.
//!
//! A [`Dataset`] is stored as three flat lists linked by id. Every operation
//! downstream works on [`InferenceGroup`]s: the set of choices whose truth
//! values are decided jointly by one integer program.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub id: String,
    #[serde(default)]
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub paragraph_id: String,
    #[serde(default)]
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Choice {
    pub id: String,
    pub question_id: String,
    #[serde(default)]
    pub text: String,
    /// Gold truth value, absent for unlabeled data.
    pub gold: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub paragraphs: Vec<Paragraph>,
    pub questions: Vec<Question>,
    pub choices: Vec<Choice>,
}

impl Dataset {
    pub fn is_empty(&self) -> bool {
        self.paragraphs.is_empty() && self.questions.is_empty() && self.choices.is_empty()
    }

    /// Choices of each question, in dataset order.
    pub fn choices_by_question(&self) -> HashMap<&str, Vec<&Choice>> {
        let mut map: HashMap<&str, Vec<&Choice>> = HashMap::new();
        for choice in &self.choices {
            map.entry(choice.question_id.as_str())
                .or_default()
                .push(choice);
        }
        map
    }

    /// Gold labels keyed by choice id; unlabeled choices are omitted.
    pub fn gold_labels(&self) -> HashMap<&str, bool> {
        self.choices
            .iter()
            .filter_map(|c| c.gold.map(|g| (c.id.as_str(), g)))
            .collect()
    }

    pub fn choice(&self, id: &str) -> Option<&Choice> {
        self.choices.iter().find(|c| c.id == id)
    }

    /// True when every question is labeled and has exactly one gold-true choice.
    pub fn is_exactly_one_regime(&self) -> bool {
        if self.questions.is_empty() {
            return false;
        }
        let by_question = self.choices_by_question();
        self.questions.iter().all(|q| {
            let choices = by_question.get(q.id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            !choices.is_empty()
                && choices.iter().all(|c| c.gold.is_some())
                && choices.iter().filter(|c| c.gold == Some(true)).count() == 1
        })
    }
}

/// One integrity problem found by [`validate_dataset`] or a format-specific check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyId { entity: &'static str },
    DuplicateId { entity: &'static str, id: String },
    DanglingParagraph { question: String, paragraph: String },
    DanglingQuestion { choice: String, question: String },
    EmptyQuestion { question: String },
    ChoiceCount { question: String, expected: usize, found: usize },
    GoldTrueCount { question: String, expected: usize, found: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyId { entity } => write!(f, "{entity} with empty id"),
            Violation::DuplicateId { entity, id } => write!(f, "duplicate {entity} id '{id}'"),
            Violation::DanglingParagraph { question, paragraph } => {
                write!(f, "question '{question}' references missing paragraph '{paragraph}'")
            }
            Violation::DanglingQuestion { choice, question } => {
                write!(f, "choice '{choice}' references missing question '{question}'")
            }
            Violation::EmptyQuestion { question } => {
                write!(f, "question '{question}' has no choices")
            }
            Violation::ChoiceCount {
                question,
                expected,
                found,
            } => write!(f, "question '{question}' has {found} choices, expected {expected}"),
            Violation::GoldTrueCount {
                question,
                expected,
                found,
            } => write!(
                f,
                "question '{question}' has {found} gold-true choices, expected {expected}"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub paragraphs: usize,
    pub questions: usize,
    pub choices: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Count entities and list every referential-integrity problem.
///
/// Violations are collected, never thrown: a report on a broken dataset is
/// still a useful answer.
pub fn validate_dataset(dataset: &Dataset) -> ValidationReport {
    let mut violations = Vec::new();

    let mut check_ids = |entity: &'static str, ids: &mut dyn Iterator<Item = &str>| {
        let mut seen = HashSet::new();
        for id in ids {
            if id.is_empty() {
                violations.push(Violation::EmptyId { entity });
            } else if !seen.insert(id) {
                violations.push(Violation::DuplicateId {
                    entity,
                    id: id.to_string(),
                });
            }
        }
    };
    check_ids("paragraph", &mut dataset.paragraphs.iter().map(|p| p.id.as_str()));
    check_ids("question", &mut dataset.questions.iter().map(|q| q.id.as_str()));
    check_ids("choice", &mut dataset.choices.iter().map(|c| c.id.as_str()));

    let paragraph_ids: HashSet<&str> = dataset.paragraphs.iter().map(|p| p.id.as_str()).collect();
    for q in &dataset.questions {
        if !paragraph_ids.contains(q.paragraph_id.as_str()) {
            violations.push(Violation::DanglingParagraph {
                question: q.id.clone(),
                paragraph: q.paragraph_id.clone(),
            });
        }
    }

    let question_ids: HashSet<&str> = dataset.questions.iter().map(|q| q.id.as_str()).collect();
    let mut answered: HashSet<&str> = HashSet::new();
    for c in &dataset.choices {
        if question_ids.contains(c.question_id.as_str()) {
            answered.insert(c.question_id.as_str());
        } else {
            violations.push(Violation::DanglingQuestion {
                choice: c.id.clone(),
                question: c.question_id.clone(),
            });
        }
    }
    for q in &dataset.questions {
        if !answered.contains(q.id.as_str()) {
            violations.push(Violation::EmptyQuestion {
                question: q.id.clone(),
            });
        }
    }

    ValidationReport {
        paragraphs: dataset.paragraphs.len(),
        questions: dataset.questions.len(),
        choices: dataset.choices.len(),
        violations,
    }
}

/// Shape check for two-choice, exactly-one-true data.
///
/// Returns one violation per question whose choice count differs from
/// `choices_per_question` or whose labeled choices do not contain exactly one
/// gold-true. Questions without any gold labels are only checked for shape.
pub fn validate_exactly_one(dataset: &Dataset, choices_per_question: Option<usize>) -> Vec<Violation> {
    let by_question = dataset.choices_by_question();
    let mut violations = Vec::new();
    for q in &dataset.questions {
        let choices = by_question.get(q.id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        if let Some(expected) = choices_per_question {
            if choices.len() != expected && !choices.is_empty() {
                violations.push(Violation::ChoiceCount {
                    question: q.id.clone(),
                    expected,
                    found: choices.len(),
                });
            }
        }
        if choices.iter().any(|c| c.gold.is_some()) {
            let trues = choices.iter().filter(|c| c.gold == Some(true)).count();
            if trues != 1 {
                violations.push(Violation::GoldTrueCount {
                    question: q.id.clone(),
                    expected: 1,
                    found: trues,
                });
            }
        }
    }
    violations
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupingMode {
    /// One group per question: relations among the choices of a question.
    #[default]
    WithinQuestion,
    /// One group per paragraph: relations across all its questions.
    CrossQuestion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExactlyOnePolicy {
    /// On when the whole dataset is labeled with exactly one true choice per question.
    #[default]
    Auto,
    On,
    Off,
}

impl ExactlyOnePolicy {
    pub fn resolve(self, dataset: &Dataset) -> bool {
        match self {
            ExactlyOnePolicy::On => true,
            ExactlyOnePolicy::Off => false,
            ExactlyOnePolicy::Auto => dataset.is_exactly_one_regime(),
        }
    }
}

/// Choices decided jointly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferenceGroup {
    pub group_id: String,
    /// Sorted, no duplicates. Positions in this list are the variable indices
    /// of the group's integer program.
    pub choice_ids: Vec<String>,
    /// One block per question when the exactly-one constraint applies; each sorted.
    pub exactly_one_blocks: Vec<Vec<String>>,
}

impl InferenceGroup {
    pub fn index_of(&self, choice_id: &str) -> Option<usize> {
        self.choice_ids
            .binary_search_by(|c| c.as_str().cmp(choice_id))
            .ok()
    }

    pub fn len(&self) -> usize {
        self.choice_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choice_ids.is_empty()
    }
}

/// Partition the dataset's choices into inference groups.
///
/// Groups come back sorted by id and choices inside a group sorted by id, so
/// the output does not depend on dataset order.
pub fn build_groups(
    dataset: &Dataset,
    mode: GroupingMode,
    exactly_one: ExactlyOnePolicy,
) -> Result<Vec<InferenceGroup>> {
    let report = validate_dataset(dataset);
    if let Some(first) = report.violations.first() {
        return Err(Error::schema(format!(
            "dataset has {} integrity violation(s), first: {first}",
            report.violations.len()
        )));
    }
    let with_blocks = exactly_one.resolve(dataset);

    let question_paragraph: HashMap<&str, &str> = dataset
        .questions
        .iter()
        .map(|q| (q.id.as_str(), q.paragraph_id.as_str()))
        .collect();

    // group id -> question id -> choice ids
    let mut grouped: BTreeMap<&str, BTreeMap<&str, BTreeSet<&str>>> = BTreeMap::new();
    for c in &dataset.choices {
        let question = c.question_id.as_str();
        let key = match mode {
            GroupingMode::WithinQuestion => question,
            GroupingMode::CrossQuestion => question_paragraph[question],
        };
        grouped
            .entry(key)
            .or_default()
            .entry(question)
            .or_default()
            .insert(c.id.as_str());
    }

    Ok(grouped
        .into_iter()
        .map(|(group_id, questions)| {
            let mut choice_ids: Vec<String> = questions
                .values()
                .flatten()
                .map(|s| s.to_string())
                .collect();
            choice_ids.sort();
            let exactly_one_blocks = if with_blocks {
                questions
                    .values()
                    .map(|ids| ids.iter().map(|s| s.to_string()).collect())
                    .collect()
            } else {
                Vec::new()
            };
            InferenceGroup {
                group_id: group_id.to_string(),
                choice_ids,
                exactly_one_blocks,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paragraph_with(questions: &[&[Option<bool>]]) -> Dataset {
        let mut ds = Dataset::default();
        ds.paragraphs.push(Paragraph {
            id: "p0".into(),
            text: String::new(),
        });
        for (qi, golds) in questions.iter().enumerate() {
            let qid = format!("p0-q{qi}");
            ds.questions.push(Question {
                id: qid.clone(),
                paragraph_id: "p0".into(),
                text: String::new(),
            });
            for (ci, gold) in golds.iter().enumerate() {
                ds.choices.push(Choice {
                    id: format!("{qid}-c{ci}"),
                    question_id: qid.clone(),
                    text: String::new(),
                    gold: *gold,
                });
            }
        }
        ds
    }

    #[test]
    fn within_question_single_group() {
        let ds = paragraph_with(&[&[Some(true), Some(false), None, None, None]]);
        let groups = build_groups(&ds, GroupingMode::WithinQuestion, ExactlyOnePolicy::Off).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].group_id, "p0-q0");
        assert_eq!(groups[0].choice_ids.len(), 5);
        assert!(groups[0].exactly_one_blocks.is_empty());
    }

    #[test]
    fn cross_question_blocks() {
        let t = Some(true);
        let f = Some(false);
        let ds = paragraph_with(&[&[t, f], &[f, t], &[t, f]]);
        let groups = build_groups(&ds, GroupingMode::CrossQuestion, ExactlyOnePolicy::On).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].group_id, "p0");
        assert_eq!(groups[0].choice_ids.len(), 6);
        assert_eq!(groups[0].exactly_one_blocks.len(), 3);
        assert!(groups[0].exactly_one_blocks.iter().all(|b| b.len() == 2));
        for block in &groups[0].exactly_one_blocks {
            assert!(block.iter().all(|id| groups[0].choice_ids.contains(id)));
        }
    }

    #[test]
    fn empty_dataset_has_no_groups() {
        let groups = build_groups(
            &Dataset::default(),
            GroupingMode::CrossQuestion,
            ExactlyOnePolicy::Auto,
        )
        .unwrap();
        assert!(groups.is_empty());
    }

    #[test]
    fn auto_policy_follows_dataset_regime() {
        let t = Some(true);
        let f = Some(false);
        let semeval = paragraph_with(&[&[t, f], &[f, t]]);
        let groups = build_groups(&semeval, GroupingMode::WithinQuestion, ExactlyOnePolicy::Auto).unwrap();
        assert!(groups.iter().all(|g| g.exactly_one_blocks.len() == 1));

        // one question with two trues switches the whole dataset off
        let multi = paragraph_with(&[&[t, f], &[t, t]]);
        let groups = build_groups(&multi, GroupingMode::WithinQuestion, ExactlyOnePolicy::Auto).unwrap();
        assert!(groups.iter().all(|g| g.exactly_one_blocks.is_empty()));

        let unlabeled = paragraph_with(&[&[None, None]]);
        let groups = build_groups(&unlabeled, GroupingMode::WithinQuestion, ExactlyOnePolicy::Auto).unwrap();
        assert!(groups[0].exactly_one_blocks.is_empty());
    }

    #[test]
    fn well_formed_counts() {
        let ds = paragraph_with(&[&[None, None], &[None, None]]);
        let report = validate_dataset(&ds);
        assert_eq!((report.paragraphs, report.questions, report.choices), (1, 2, 4));
        assert!(report.is_valid());
    }

    #[test]
    fn dangling_choice_is_reported() {
        let mut ds = paragraph_with(&[&[None, None]]);
        ds.choices.push(Choice {
            id: "orphan".into(),
            question_id: "nowhere".into(),
            text: String::new(),
            gold: None,
        });
        let report = validate_dataset(&ds);
        assert_eq!(report.violations.len(), 1);
        assert!(report.violations[0].to_string().contains("orphan"));
        assert!(build_groups(&ds, GroupingMode::WithinQuestion, ExactlyOnePolicy::Off).is_err());
    }

    #[test]
    fn duplicates_and_empty_questions_are_reported() {
        let mut ds = paragraph_with(&[&[None]]);
        ds.questions.push(Question {
            id: "p0-q9".into(),
            paragraph_id: "p0".into(),
            text: String::new(),
        });
        ds.choices.push(ds.choices[0].clone());
        ds.questions.push(Question {
            id: "q-x".into(),
            paragraph_id: "missing".into(),
            text: String::new(),
        });
        let report = validate_dataset(&ds);
        assert!(report.violations.contains(&Violation::EmptyQuestion {
            question: "p0-q9".into()
        }));
        assert!(report.violations.contains(&Violation::DuplicateId {
            entity: "choice",
            id: "p0-q0-c0".into()
        }));
        assert!(report.violations.contains(&Violation::DanglingParagraph {
            question: "q-x".into(),
            paragraph: "missing".into()
        }));
    }

    #[test]
    fn exactly_one_shape_check() {
        let t = Some(true);
        let f = Some(false);
        let ds = paragraph_with(&[&[t, t], &[f, t], &[t, f, f]]);
        let v = validate_exactly_one(&ds, Some(2));
        assert_eq!(v.len(), 2);
        assert!(matches!(&v[0], Violation::GoldTrueCount { found: 2, .. }));
        assert!(matches!(&v[1], Violation::ChoiceCount { found: 3, .. }));
    }
}

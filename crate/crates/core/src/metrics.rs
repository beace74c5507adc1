//! Exact match, accuracy and McNemar's test.
//!
//! Functions return percentages at full precision; [`EvalReport`] rounds them
//! half-up to two decimals from the underlying integer counts.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::PredictionRecord;
use crate::model::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Choice,
    Question,
}

/// `(gold, predicted)` for every gold-labeled choice, grouped by question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tally {
    /// Questions with at least one gold-labeled choice, sorted by id; choices
    /// inside a question sorted by id.
    pub questions: Vec<(String, Vec<(bool, bool)>)>,
    /// Predictions for choices that have no gold label; they are ignored.
    pub unlabeled_predictions: usize,
}

impl Tally {
    pub fn choice_count(&self) -> usize {
        self.questions.iter().map(|(_, c)| c.len()).sum()
    }

    fn errors(&self) -> impl Iterator<Item = usize> + '_ {
        self.questions
            .iter()
            .map(|(_, choices)| choices.iter().filter(|(g, p)| g != p).count())
    }
}

/// Pair predictions with gold labels.
///
/// A prediction for an unknown choice, a duplicate prediction, or a
/// gold-labeled choice without a prediction is a schema error.
pub fn tally(dataset: &Dataset, predictions: &[PredictionRecord]) -> Result<Tally> {
    let mut predicted: HashMap<&str, bool> = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if predicted.insert(p.choice_id.as_str(), p.label).is_some() {
            return Err(Error::schema(format!("duplicate prediction for choice '{}'", p.choice_id)));
        }
    }
    let mut unlabeled_predictions = 0;
    let mut known = HashSet::with_capacity(dataset.choices.len());
    let mut by_question: BTreeMap<&str, Vec<(&str, bool, bool)>> = BTreeMap::new();
    for choice in &dataset.choices {
        known.insert(choice.id.as_str());
        let prediction = predicted.get(choice.id.as_str()).copied();
        match (choice.gold, prediction) {
            (Some(gold), Some(label)) => by_question
                .entry(choice.question_id.as_str())
                .or_default()
                .push((choice.id.as_str(), gold, label)),
            (Some(_), None) => {
                return Err(Error::schema(format!("no prediction for choice '{}'", choice.id)))
            }
            (None, Some(_)) => unlabeled_predictions += 1,
            (None, None) => {}
        }
    }
    if let Some(p) = predictions.iter().find(|p| !known.contains(p.choice_id.as_str())) {
        return Err(Error::schema(format!("prediction for unknown choice '{}'", p.choice_id)));
    }
    let questions = by_question
        .into_iter()
        .map(|(question, mut choices)| {
            choices.sort_by(|a, b| a.0.cmp(b.0));
            (question.to_string(), choices.into_iter().map(|(_, g, p)| (g, p)).collect())
        })
        .collect();
    Ok(Tally {
        questions,
        unlabeled_predictions,
    })
}

fn percent(correct: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * correct as f64 / total as f64
    }
}

/// `100 * correct / total` rounded half-up to two decimals; 0 when `total` is 0.
pub fn percent_2dp(correct: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let (correct, total) = (correct as u128, total as u128);
    ((20_000 * correct + total) / (2 * total)) as f64 / 100.0
}

fn em_count(tally: &Tally, k: usize) -> usize {
    tally.errors().filter(|&e| e <= k).count()
}

/// Percentage of questions with at most `k` misclassified choices.
pub fn exact_match(dataset: &Dataset, predictions: &[PredictionRecord], k: usize) -> Result<f64> {
    let tally = tally(dataset, predictions)?;
    Ok(percent(em_count(&tally, k), tally.questions.len()))
}

fn question_hits(tally: &Tally) -> Result<usize> {
    let mut hits = 0;
    for (question, choices) in &tally.questions {
        let gold_true = choices.iter().filter(|(g, _)| *g).count();
        if gold_true != 1 {
            return Err(Error::domain(format!(
                "question '{question}' has {gold_true} gold-true choices, question accuracy needs exactly one"
            )));
        }
        let predicted_true: Vec<bool> = choices.iter().filter(|(_, p)| *p).map(|(g, _)| *g).collect();
        hits += (predicted_true == [true]) as usize;
    }
    Ok(hits)
}

pub fn accuracy(dataset: &Dataset, predictions: &[PredictionRecord], level: Level) -> Result<f64> {
    let tally = tally(dataset, predictions)?;
    Ok(match level {
        Level::Choice => {
            let correct = tally.questions.iter().flat_map(|(_, c)| c).filter(|(g, p)| g == p).count();
            percent(correct, tally.choice_count())
        }
        Level::Question => percent(question_hits(&tally)?, tally.questions.len()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    /// A right, B wrong.
    pub b: usize,
    /// A wrong, B right.
    pub c: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub corrected: bool,
}

/// McNemar's test from the discordant counts.
pub fn mcnemar_counts(b: usize, c: usize, corrected: bool) -> McNemarResult {
    let n = (b + c) as f64;
    let statistic = if b + c == 0 {
        0.0
    } else {
        let diff = (b as f64 - c as f64).abs();
        let diff = if corrected { (diff - 1.0).max(0.0) } else { diff };
        diff * diff / n
    };
    McNemarResult {
        b,
        c,
        statistic,
        p_value: chi2_1_survival(statistic),
        corrected,
    }
}

/// Upper tail of the chi-squared distribution with one degree of freedom.
pub fn chi2_1_survival(statistic: f64) -> f64 {
    libm::erfc((statistic / 2.0).sqrt()).clamp(0.0, 1.0)
}

pub fn mcnemar(
    dataset: &Dataset,
    preds_a: &[PredictionRecord],
    preds_b: &[PredictionRecord],
    corrected: bool,
) -> Result<McNemarResult> {
    let a = tally(dataset, preds_a)?;
    let b = tally(dataset, preds_b)?;
    let (mut right_wrong, mut wrong_right) = (0, 0);
    for ((qa, ca), (_, cb)) in a.questions.iter().zip(&b.questions) {
        debug_assert_eq!(ca.len(), cb.len(), "question {qa}");
        for (&(gold, pa), &(_, pb)) in ca.iter().zip(cb) {
            match (pa == gold, pb == gold) {
                (true, false) => right_wrong += 1,
                (false, true) => wrong_right += 1,
                _ => {}
            }
        }
    }
    Ok(mcnemar_counts(right_wrong, wrong_right, corrected))
}

/// Everything the evaluation reports, percentages rounded to two decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub em0: f64,
    pub em1: f64,
    /// From 0 up to the largest question size, where it reaches 100.
    pub em_by_k: BTreeMap<usize, f64>,
    pub choice_accuracy: f64,
    /// Present when every question has exactly one gold-true choice.
    pub question_accuracy: Option<f64>,
    pub question_count: usize,
    pub choice_count: usize,
    pub unlabeled_predictions: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mcnemar: Option<McNemarResult>,
}

pub fn evaluate(dataset: &Dataset, predictions: &[PredictionRecord]) -> Result<EvalReport> {
    let tally = tally(dataset, predictions)?;
    let questions = tally.questions.len();
    let largest = tally.questions.iter().map(|(_, c)| c.len()).max().unwrap_or(0);
    let em_by_k: BTreeMap<usize, f64> = (0..=largest.max(1))
        .map(|k| (k, percent_2dp(em_count(&tally, k), questions)))
        .collect();
    let correct = tally.questions.iter().flat_map(|(_, c)| c).filter(|(g, p)| g == p).count();
    let question_accuracy = question_hits(&tally).ok().map(|hits| percent_2dp(hits, questions));
    Ok(EvalReport {
        em0: em_by_k[&0],
        em1: em_by_k[&1],
        em_by_k,
        choice_accuracy: percent_2dp(correct, tally.choice_count()),
        question_accuracy,
        question_count: questions,
        choice_count: tally.choice_count(),
        unlabeled_predictions: tally.unlabeled_predictions,
        mcnemar: None,
    })
}

//! Noisy relation labels for retraining the relation model.
//!
//! A predicted entailment is kept when both choices are gold-true, and a
//! predicted contradiction is kept when the source is gold-true and the
//! destination gold-false. Everything else is dropped rather than labeled
//! neutral.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{check_id, string, Record, Relation, RelationRecord};
use crate::model::{build_groups, Dataset, ExactlyOnePolicy, GroupingMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairLabel {
    Entailment,
    Contradiction,
}

impl PairLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            PairLabel::Entailment => "entailment",
            PairLabel::Contradiction => "contradiction",
        }
    }

    /// The relation class a correct model would predict for this label.
    pub fn relation(self) -> Relation {
        match self {
            PairLabel::Entailment => Relation::Entail,
            PairLabel::Contradiction => Relation::Contradict,
        }
    }
}

impl fmt::Display for PairLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledPair {
    pub src: String,
    pub dst: String,
    pub label: PairLabel,
}

impl Record for LabeledPair {
    const FIELDS: &'static [&'static str] = &["src", "dst", "label"];

    fn check(&self) -> std::result::Result<(), String> {
        check_id("src", &self.src)?;
        check_id("dst", &self.dst)?;
        if self.src == self.dst {
            return Err(format!("src and dst are both '{}'", self.src));
        }
        Ok(())
    }

    fn write_order(&self, other: &Self) -> Ordering {
        (&self.src, &self.dst).cmp(&(&other.src, &other.dst))
    }

    fn render(&self, out: &mut String) {
        out.push_str(&format!(
            "{{\"src\": {}, \"dst\": {}, \"label\": \"{}\"}}",
            string(&self.src),
            string(&self.dst),
            self.label
        ));
    }
}

/// The protocol for one pair: predicted class plus the two gold labels.
pub fn pair_label(predicted: Relation, gold_src: bool, gold_dst: bool) -> Option<PairLabel> {
    match (predicted, gold_src, gold_dst) {
        (Relation::Entail, true, true) => Some(PairLabel::Entailment),
        (Relation::Contradict, true, false) => Some(PairLabel::Contradiction),
        _ => None,
    }
}

fn gold_of(gold: &HashMap<&str, bool>, id: &str) -> Result<bool> {
    gold.get(id)
        .copied()
        .ok_or_else(|| Error::schema(format!("no gold label for choice '{id}'")))
}

fn sort_pairs(pairs: &mut [LabeledPair]) {
    pairs.sort_by(|a, b| a.write_order(b));
}

/// Keep the model's predictions that agree with the gold pattern.
pub fn filter_labels(predicted: &[RelationRecord], gold: &HashMap<&str, bool>) -> Result<Vec<LabeledPair>> {
    let mut pairs = Vec::new();
    for record in predicted {
        let src = gold_of(gold, &record.src)?;
        let dst = gold_of(gold, &record.dst)?;
        if let Some(label) = pair_label(record.argmax().0, src, dst) {
            pairs.push(LabeledPair {
                src: record.src.clone(),
                dst: record.dst.clone(),
                label,
            });
        }
    }
    sort_pairs(&mut pairs);
    Ok(pairs)
}

/// Label every ordered in-group pair from gold alone: true-true is
/// entailment, true-false contradiction.
pub fn gold_pairs(dataset: &Dataset, mode: GroupingMode) -> Result<Vec<LabeledPair>> {
    let gold = dataset.gold_labels();
    let groups = build_groups(dataset, mode, ExactlyOnePolicy::Off)?;
    let mut pairs = Vec::new();
    for group in &groups {
        let labels = group
            .choice_ids
            .iter()
            .map(|id| gold_of(&gold, id))
            .collect::<Result<Vec<bool>>>()?;
        for (i, src) in group.choice_ids.iter().enumerate() {
            if !labels[i] {
                continue;
            }
            for (j, dst) in group.choice_ids.iter().enumerate() {
                if i == j {
                    continue;
                }
                let label = if labels[j] {
                    PairLabel::Entailment
                } else {
                    PairLabel::Contradiction
                };
                pairs.push(LabeledPair {
                    src: src.clone(),
                    dst: dst.clone(),
                    label,
                });
            }
        }
    }
    sort_pairs(&mut pairs);
    Ok(pairs)
}

/// Per-class accuracy of relation predictions against labeled pairs.
///
/// Accuracies are percentages at full precision. With no labeled pairs of a
/// class its accuracy is 0; `defined` is false when there are no pairs at all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationAccuracyReport {
    pub entail_acc: f64,
    pub contradict_acc: f64,
    pub overall_acc: f64,
    pub entail_correct: usize,
    pub entail_total: usize,
    pub contradict_correct: usize,
    pub contradict_total: usize,
    pub defined: bool,
}

fn percent(correct: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * correct as f64 / total as f64
    }
}

pub fn relation_accuracy(predicted: &[RelationRecord], labeled: &[LabeledPair]) -> Result<RelationAccuracyReport> {
    let mut by_pair: HashMap<(&str, &str), Relation> = HashMap::with_capacity(predicted.len());
    for record in predicted {
        if by_pair
            .insert((record.src.as_str(), record.dst.as_str()), record.argmax().0)
            .is_some()
        {
            return Err(Error::schema(format!(
                "duplicate prediction for {} -> {}",
                record.src, record.dst
            )));
        }
    }
    let mut seen = HashSet::new();
    let mut counts = [[0usize; 2]; 2];
    for pair in labeled {
        let key = (pair.src.as_str(), pair.dst.as_str());
        if !seen.insert(key) {
            return Err(Error::schema(format!("duplicate labeled pair {} -> {}", pair.src, pair.dst)));
        }
        let predicted = by_pair.get(&key).ok_or_else(|| {
            Error::schema(format!("no prediction for labeled pair {} -> {}", pair.src, pair.dst))
        })?;
        let class = match pair.label {
            PairLabel::Entailment => 0,
            PairLabel::Contradiction => 1,
        };
        counts[class][1] += 1;
        counts[class][0] += (*predicted == pair.label.relation()) as usize;
    }
    let [[entail_correct, entail_total], [contradict_correct, contradict_total]] = counts;
    let total = entail_total + contradict_total;
    Ok(RelationAccuracyReport {
        entail_acc: percent(entail_correct, entail_total),
        contradict_acc: percent(contradict_correct, contradict_total),
        overall_acc: percent(entail_correct + contradict_correct, total),
        entail_correct,
        entail_total,
        contradict_correct,
        contradict_total,
        defined: total > 0,
    })
}

//! Deterministic lexical relation scorer.
//!
//! Stands in for a trained NLI model so the pipeline can run end to end.
//! High token overlap reads as entailment, unless exactly one side carries an
//! odd number of negation words, which flips it to contradiction. Low overlap
//! reads as neutral.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::ingest::{RelationProbs, RelationRecord};
use crate::model::{Dataset, InferenceGroup};

/// Negation words. `t` catches the tail of split contractions such as `didn't`.
pub const NEGATION_TOKENS: [&str; 10] = [
    "not", "no", "never", "none", "nobody", "nothing", "neither", "nor", "cannot", "t",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    /// Jaccard overlap at or above which a pair is entail or contradict.
    pub overlap_threshold: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            overlap_threshold: 0.5,
        }
    }
}

/// Lowercased maximal alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn negation_parity(tokens: &[String]) -> bool {
    tokens
        .iter()
        .filter(|t| NEGATION_TOKENS.contains(&t.as_str()))
        .count()
        % 2
        == 1
}

fn jaccard(a: &[String], b: &[String]) -> f64 {
    let a: HashSet<&str> = a.iter().map(String::as_str).collect();
    let b: HashSet<&str> = b.iter().map(String::as_str).collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// Relation distribution for two texts. Symmetric in its arguments.
pub fn score_pair(a: &str, b: &str, config: &BaselineConfig) -> RelationProbs {
    let ta = tokenize(a);
    let tb = tokenize(b);
    let j = jaccard(&ta, &tb);
    let rest = (1.0 - j) / 2.0;
    if j >= config.overlap_threshold {
        if negation_parity(&ta) == negation_parity(&tb) {
            RelationProbs::new(j, rest, rest)
        } else {
            RelationProbs::new(rest, j, rest)
        }
    } else {
        RelationProbs::new(j / 2.0, j / 2.0, 1.0 - j)
    }
}

/// One record per ordered pair of distinct choices in every group.
pub fn baseline_relations(
    dataset: &Dataset,
    groups: &[InferenceGroup],
    config: &BaselineConfig,
) -> Result<Vec<RelationRecord>> {
    let texts: HashMap<&str, &str> = dataset
        .choices
        .iter()
        .map(|c| (c.id.as_str(), c.text.as_str()))
        .collect();
    let mut records = Vec::new();
    for group in groups {
        let group_texts = group
            .choice_ids
            .iter()
            .map(|id| {
                texts
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::schema(format!("group '{}' names unknown choice '{id}'", group.group_id)))
            })
            .collect::<Result<Vec<&str>>>()?;
        for (i, src) in group.choice_ids.iter().enumerate() {
            for (j, dst) in group.choice_ids.iter().enumerate() {
                if i == j {
                    continue;
                }
                records.push(RelationRecord {
                    group_id: group.group_id.clone(),
                    src: src.clone(),
                    dst: dst.clone(),
                    probs: score_pair(group_texts[i], group_texts[j], config),
                });
            }
        }
    }
    Ok(records)
}

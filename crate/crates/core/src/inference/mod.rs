//! Consistency inference over answer choices.
//!
//! Two rules are grounded over every ordered pair of choices in a group:
//!
//! * if `c_i` is true and `c_i` entails `c_j`, then `c_j` is true;
//! * if `c_i` is true and `c_i` contradicts `c_j`, then `c_j` is false.
//!
//! Each group becomes a small 0/1 program whose local terms come from the QA
//! confidences and whose rule weights come from the relation confidences. The
//! program is solved exactly and the assignment is the final prediction.

mod problem;
mod solver;

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{PredictionRecord, Relation, RelationRecord, ScoreRecord};
use crate::model::{build_groups, Dataset, ExactlyOnePolicy, GroupingMode, InferenceGroup};

pub use problem::{ConstraintMode, GroundedRule, IlpProblem, RuleKind, Solution, SolveStatus};
pub use solver::{brute_force, solve, BRUTE_FORCE_MAX_VARS, TIE_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OnInfeasible {
    Error,
    #[default]
    FallbackSoft,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub constraint_mode: ConstraintMode,
    /// Scale applied to relation confidences to obtain soft rule weights.
    pub lambda: f64,
    /// Minimum argmax probability for a relation to become a rule.
    pub tau_rel: f64,
    pub on_infeasible: OnInfeasible,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            constraint_mode: ConstraintMode::Soft,
            lambda: 1.0,
            tau_rel: 0.5,
            on_infeasible: OnInfeasible::FallbackSoft,
        }
    }
}

impl SolverConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::domain(format!("lambda must be a finite value >= 0, got {}", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.tau_rel) {
            return Err(Error::domain(format!("tau must lie in [0, 1], got {}", self.tau_rel)));
        }
        Ok(())
    }
}

/// Turn a group's relation records into weighted rules.
///
/// The argmax class of each record decides the rule; neutral yields nothing and
/// records whose argmax probability is below `tau_rel` are dropped.
pub fn ground_rules(
    group: &InferenceGroup,
    scores: &HashMap<&str, f64>,
    relations: &[&RelationRecord],
    config: &SolverConfig,
) -> Result<Vec<GroundedRule>> {
    if let Some(missing) = group.choice_ids.iter().find(|id| !scores.contains_key(id.as_str())) {
        return Err(Error::schema(format!("no score for choice '{missing}'")));
    }
    let mut seen = HashSet::new();
    let mut rules = Vec::new();
    for record in relations {
        let index = |id: &str| {
            group.index_of(id).ok_or_else(|| {
                Error::schema(format!(
                    "relation {} -> {} references choice '{id}' outside group '{}'",
                    record.src, record.dst, group.group_id
                ))
            })
        };
        let src = index(&record.src)?;
        let dst = index(&record.dst)?;
        if src == dst {
            return Err(Error::schema(format!("relation from '{}' to itself", record.src)));
        }
        if !seen.insert((src, dst)) {
            return Err(Error::schema(format!(
                "duplicate relation {} -> {} in group '{}'",
                record.src, record.dst, group.group_id
            )));
        }
        let kind = match record.argmax() {
            (Relation::Neutral, _) => continue,
            (_, confidence) if confidence < config.tau_rel => continue,
            (Relation::Entail, _) => RuleKind::Entail,
            (Relation::Contradict, _) => RuleKind::Contradict,
        };
        rules.push(GroundedRule {
            kind,
            src,
            dst,
            weight: config.lambda * record.argmax().1,
        });
    }
    rules.sort_by_key(|r| (r.src, r.dst));
    Ok(rules)
}

pub fn compile(
    group: &InferenceGroup,
    scores: &HashMap<&str, f64>,
    rules: Vec<GroundedRule>,
    config: &SolverConfig,
) -> Result<IlpProblem> {
    let p_true = group
        .choice_ids
        .iter()
        .map(|id| {
            scores
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::schema(format!("no score for choice '{id}'")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let blocks = group
        .exactly_one_blocks
        .iter()
        .map(|block| {
            block
                .iter()
                .map(|id| {
                    group
                        .index_of(id)
                        .ok_or_else(|| Error::schema(format!("block member '{id}' outside group")))
                })
                .collect::<Result<Vec<usize>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    IlpProblem::from_probabilities(&p_true, rules, blocks, config.constraint_mode, config.lambda)
}

/// Predictions for a whole dataset plus the groups that needed the soft fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceOutput {
    /// Sorted by choice id.
    pub predictions: Vec<PredictionRecord>,
    pub fell_back: Vec<String>,
}

/// How many worker threads to use for independent groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Threads {
    #[default]
    Auto,
    Fixed(usize),
}

pub(crate) fn score_map<'a>(dataset: &Dataset, scores: &'a [ScoreRecord]) -> Result<HashMap<&'a str, f64>> {
    let known: HashSet<&str> = dataset.choices.iter().map(|c| c.id.as_str()).collect();
    let mut map = HashMap::with_capacity(scores.len());
    for s in scores {
        if !known.contains(s.choice_id.as_str()) {
            return Err(Error::schema(format!("score for unknown choice '{}'", s.choice_id)));
        }
        if !(0.0..=1.0).contains(&s.p_true) {
            return Err(Error::schema(format!("score of '{}' outside [0, 1]", s.choice_id)));
        }
        if map.insert(s.choice_id.as_str(), s.p_true).is_some() {
            return Err(Error::schema(format!("duplicate score for choice '{}'", s.choice_id)));
        }
    }
    if let Some(missing) = dataset.choices.iter().find(|c| !map.contains_key(c.id.as_str())) {
        return Err(Error::schema(format!("no score for choice '{}'", missing.id)));
    }
    Ok(map)
}

/// Predict by thresholding each score at 0.5; exactly 0.5 is false.
pub fn threshold_predictions(dataset: &Dataset, scores: &[ScoreRecord]) -> Result<Vec<PredictionRecord>> {
    let map = score_map(dataset, scores)?;
    let mut predictions: Vec<PredictionRecord> = map
        .into_iter()
        .map(|(id, p)| PredictionRecord {
            choice_id: id.to_string(),
            label: p > 0.5,
            p_true: p,
        })
        .collect();
    predictions.sort_by(|a, b| a.choice_id.cmp(&b.choice_id));
    Ok(predictions)
}

struct GroupOutcome {
    labels: Vec<bool>,
    fell_back: bool,
}

fn infer_group(
    group: &InferenceGroup,
    scores: &HashMap<&str, f64>,
    relations: &[&RelationRecord],
    config: &SolverConfig,
) -> Result<GroupOutcome> {
    let rules = ground_rules(group, scores, relations, config)?;
    let problem = compile(group, scores, rules, config)?;
    let solution = solve(&problem)?;
    if solution.is_optimal() {
        return Ok(GroupOutcome {
            labels: solution.assignment,
            fell_back: false,
        });
    }
    match config.on_infeasible {
        OnInfeasible::Error => Err(Error::Infeasible {
            group: group.group_id.clone(),
        }),
        OnInfeasible::FallbackSoft => {
            let soft = solve(&problem.softened())?;
            if !soft.is_optimal() {
                // only exactly-one blocks remain, and those are always satisfiable
                return Err(Error::Infeasible {
                    group: group.group_id.clone(),
                });
            }
            Ok(GroupOutcome {
                labels: soft.assignment,
                fell_back: true,
            })
        }
    }
}

/// Group, ground, compile and solve every group of the dataset.
///
/// Groups are solved independently, in parallel unless `threads` is
/// `Fixed(1)`. Output is sorted, and the first error in group order is the
/// one reported, so results never depend on scheduling.
pub fn infer_dataset(
    dataset: &Dataset,
    scores: &[ScoreRecord],
    relations: &[RelationRecord],
    mode: GroupingMode,
    exactly_one: ExactlyOnePolicy,
    config: &SolverConfig,
    threads: Threads,
) -> Result<InferenceOutput> {
    config.check()?;
    let groups = build_groups(dataset, mode, exactly_one)?;
    let scores_by_id = score_map(dataset, scores)?;

    let mut relations_by_group: BTreeMap<&str, Vec<&RelationRecord>> =
        groups.iter().map(|g| (g.group_id.as_str(), Vec::new())).collect();
    for record in relations {
        relations_by_group
            .get_mut(record.group_id.as_str())
            .ok_or_else(|| Error::schema(format!("relation references unknown group '{}'", record.group_id)))?
            .push(record);
    }

    let run = |group: &InferenceGroup| {
        infer_group(group, &scores_by_id, &relations_by_group[group.group_id.as_str()], config)
    };
    let outcomes: Vec<Result<GroupOutcome>> = match threads {
        Threads::Fixed(1) => groups.iter().map(run).collect(),
        Threads::Fixed(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::domain(format!("cannot start {n} threads: {e}")))?
            .install(|| groups.par_iter().map(run).collect()),
        Threads::Auto => groups.par_iter().map(run).collect(),
    };

    let mut predictions = Vec::with_capacity(dataset.choices.len());
    let mut fell_back = Vec::new();
    for (group, outcome) in groups.iter().zip(outcomes) {
        let outcome = outcome?;
        if outcome.fell_back {
            fell_back.push(group.group_id.clone());
        }
        for (id, label) in group.choice_ids.iter().zip(outcome.labels) {
            predictions.push(PredictionRecord {
                choice_id: id.clone(),
                label,
                p_true: scores_by_id[id.as_str()],
            });
        }
    }
    predictions.sort_by(|a, b| a.choice_id.cmp(&b.choice_id));
    Ok(InferenceOutput {
        predictions,
        fell_back,
    })
}

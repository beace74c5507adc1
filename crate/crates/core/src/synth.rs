//! Seeded synthetic benchmarks with known gold and controlled noise.
//!
//! Gold labels, true relations, scores and relation noise each come from their
//! own ChaCha8 stream of the configured seed, so changing one noise level does
//! not reshuffle the others.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{infer_dataset, threshold_predictions, SolverConfig, Threads};
use crate::ingest::{render_dataset, render_records, Relation, RelationProbs, RelationRecord, ScoreRecord};
use crate::metrics::{evaluate, EvalReport};
use crate::model::{build_groups, Choice, Dataset, ExactlyOnePolicy, GroupingMode, Paragraph, Question};

const STRUCTURE_STREAM: u64 = 0;
const SCORE_STREAM: u64 = 1;
const RELATION_NOISE_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Paragraphs. In within-question mode every question is its own group.
    pub groups: usize,
    pub questions_per_group: usize,
    pub choices_per_question: usize,
    /// Chance that a choice is gold-true, within-question mode only.
    pub p_true: f64,
    /// Chance that an ordered in-group pair gets a relation.
    pub relation_density: f64,
    /// Chance that a score is a confident error.
    pub eps: f64,
    /// Distance of every score from 0.5.
    pub delta: f64,
    /// Chance that a relation is replaced by a wrong class.
    pub rho: f64,
    pub mode: GroupingMode,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            groups: 100,
            questions_per_group: 1,
            choices_per_question: 4,
            p_true: 0.5,
            relation_density: 0.5,
            eps: 0.2,
            delta: 0.1,
            rho: 0.0,
            mode: GroupingMode::WithinQuestion,
            seed: 0,
        }
    }
}

fn check_unit(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must lie in [0, 1], got {value}")))
    }
}

impl SynthConfig {
    pub fn check(&self) -> Result<()> {
        if self.questions_per_group == 0 || self.choices_per_question == 0 {
            return Err(Error::domain(
                "questions_per_group and choices_per_question must be at least 1",
            ));
        }
        check_unit("p_true", self.p_true)?;
        check_unit("relation_density", self.relation_density)?;
        check_unit("eps", self.eps)?;
        check_unit("rho", self.rho)?;
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::domain(format!("delta must lie in (0, 0.5), got {}", self.delta)));
        }
        Ok(())
    }

    /// Exactly-one blocks apply in the cross-question regime.
    pub fn exactly_one(&self) -> ExactlyOnePolicy {
        match self.mode {
            GroupingMode::WithinQuestion => ExactlyOnePolicy::Off,
            GroupingMode::CrossQuestion => ExactlyOnePolicy::On,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthBundle {
    pub dataset: Dataset,
    pub scores: Vec<ScoreRecord>,
    /// `true_relations` after relation noise.
    pub relations: Vec<RelationRecord>,
    pub true_relations: Vec<RelationRecord>,
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn width(count: usize) -> usize {
    count.saturating_sub(1).to_string().len()
}

/// Whether a relation class is consistent with the gold labels of its pair
/// under the two rules.
pub fn gold_consistent(relation: Relation, gold_src: bool, gold_dst: bool) -> bool {
    match relation {
        Relation::Entail => !(gold_src && !gold_dst),
        Relation::Contradict => !(gold_src && gold_dst),
        Relation::Neutral => true,
    }
}

fn build_dataset(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Dataset {
    let (gw, qw, cw) = (
        width(config.groups),
        width(config.questions_per_group),
        width(config.choices_per_question),
    );
    let mut dataset = Dataset::default();
    for g in 0..config.groups {
        let pid = format!("g{g:0gw$}");
        dataset.paragraphs.push(Paragraph {
            id: pid.clone(),
            text: format!("synthetic paragraph {g}"),
        });
        for q in 0..config.questions_per_group {
            let qid = format!("{pid}-q{q:0qw$}");
            let golds: Vec<bool> = match config.mode {
                GroupingMode::WithinQuestion => (0..config.choices_per_question)
                    .map(|_| rng.gen_bool(config.p_true))
                    .collect(),
                GroupingMode::CrossQuestion => {
                    let truth = rng.gen_range(0..config.choices_per_question);
                    (0..config.choices_per_question).map(|c| c == truth).collect()
                }
            };
            for (c, gold) in golds.into_iter().enumerate() {
                dataset.choices.push(Choice {
                    id: format!("{qid}-c{c:0cw$}"),
                    question_id: qid.clone(),
                    text: format!("synthetic choice {c}"),
                    gold: Some(gold),
                });
            }
            dataset.questions.push(Question {
                id: qid,
                paragraph_id: pid.clone(),
                text: format!("synthetic question {q}"),
            });
        }
    }
    dataset
}

fn true_relations(dataset: &Dataset, config: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Vec<RelationRecord>> {
    let gold = dataset.gold_labels();
    let mut relations = Vec::new();
    for group in build_groups(dataset, config.mode, ExactlyOnePolicy::Off)? {
        for src in &group.choice_ids {
            for dst in &group.choice_ids {
                if src == dst || !rng.gen_bool(config.relation_density) {
                    continue;
                }
                let (gs, gd) = (gold[src.as_str()], gold[dst.as_str()]);
                let allowed: Vec<Relation> = [Relation::Entail, Relation::Contradict]
                    .into_iter()
                    .filter(|&r| gold_consistent(r, gs, gd))
                    .collect();
                let relation = *allowed.choose(rng).expect("some class is always consistent");
                relations.push(RelationRecord {
                    group_id: group.group_id.clone(),
                    src: src.clone(),
                    dst: dst.clone(),
                    probs: RelationProbs::one_hot(relation),
                });
            }
        }
    }
    Ok(relations)
}

/// Draw a dataset with gold labels, gold-consistent relations, and their
/// noisy versions.
pub fn generate(config: &SynthConfig) -> Result<SynthBundle> {
    config.check()?;
    let mut structure = rng(config.seed, STRUCTURE_STREAM);
    let dataset = build_dataset(config, &mut structure);
    let true_relations = true_relations(&dataset, config, &mut structure)?;
    let scores = perturb_scores(&dataset, config.eps, config.delta, config.seed)?;
    let relations = perturb_relations(&true_relations, config.rho, config.seed)?;
    Ok(SynthBundle {
        dataset,
        scores,
        relations,
        true_relations,
    })
}

/// Scores that agree with gold by at least `delta`, except that with
/// probability `eps` a choice gets a score from the opposite range.
///
/// Agreeing scores are uniform on `[0.5 + delta, 1]` for gold-true choices and
/// on `[0, 0.5 - delta]` for gold-false ones. Output is sorted by choice id.
pub fn perturb_scores(dataset: &Dataset, eps: f64, delta: f64, seed: u64) -> Result<Vec<ScoreRecord>> {
    check_unit("eps", eps)?;
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::domain(format!("delta must lie in (0, 0.5), got {delta}")));
    }
    let mut rng = rng(seed, SCORE_STREAM);
    let mut scores = dataset
        .choices
        .iter()
        .map(|choice| {
            let gold = choice
                .gold
                .ok_or_else(|| Error::domain(format!("choice '{}' has no gold label", choice.id)))?;
            let flipped = rng.gen_bool(eps);
            let p_true = if gold != flipped {
                rng.gen_range(0.5 + delta..=1.0)
            } else {
                rng.gen_range(0.0..=0.5 - delta)
            };
            Ok(ScoreRecord {
                choice_id: choice.id.clone(),
                p_true,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(|a, b| a.choice_id.cmp(&b.choice_id));
    Ok(scores)
}

/// With probability `rho` replace each record by a one-hot pick of one of the
/// two classes other than its argmax.
pub fn perturb_relations(relations: &[RelationRecord], rho: f64, seed: u64) -> Result<Vec<RelationRecord>> {
    check_unit("rho", rho)?;
    let mut rng = rng(seed, RELATION_NOISE_STREAM);
    Ok(relations
        .iter()
        .map(|record| {
            if !rng.gen_bool(rho) {
                return record.clone();
            }
            let current = record.argmax().0;
            let others: Vec<Relation> = Relation::ALL.into_iter().filter(|&r| r != current).collect();
            RelationRecord {
                probs: RelationProbs::one_hot(others[rng.gen_range(0..2)]),
                ..record.clone()
            }
        })
        .collect())
}

/// Thresholded scores against inference on the same bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: SynthConfig,
    pub solver: SolverConfig,
    pub baseline: EvalReport,
    pub inferred: EvalReport,
    /// Groups whose hard program was infeasible and were solved softly.
    pub fell_back: Vec<String>,
}

pub fn run_experiment(config: &SynthConfig, solver: &SolverConfig) -> Result<ExperimentReport> {
    let bundle = generate(config)?;
    let baseline = threshold_predictions(&bundle.dataset, &bundle.scores)?;
    let inferred = infer_dataset(
        &bundle.dataset,
        &bundle.scores,
        &bundle.relations,
        config.mode,
        config.exactly_one(),
        solver,
        Threads::Auto,
    )?;
    Ok(ExperimentReport {
        config: *config,
        solver: *solver,
        baseline: evaluate(&bundle.dataset, &baseline)?,
        inferred: evaluate(&bundle.dataset, &inferred.predictions)?,
        fell_back: inferred.fell_back,
    })
}

/// File names of a bundle written to a directory.
pub const BUNDLE_FILES: [&str; 5] = [
    "dataset.json",
    "scores.jsonl",
    "relations.jsonl",
    "true_relations.jsonl",
    "config.json",
];

/// Render every file of the bundle, in [`BUNDLE_FILES`] order.
pub fn render_bundle(bundle: &SynthBundle, config: &SynthConfig) -> Result<Vec<(&'static str, String)>> {
    let mut echo = serde_json::to_string_pretty(config).map_err(|e| Error::schema(e.to_string()))?;
    echo.push('\n');
    let contents = [
        render_dataset(&bundle.dataset)?,
        render_records(&bundle.scores)?,
        render_records(&bundle.relations)?,
        render_records(&bundle.true_relations)?,
        echo,
    ];
    Ok(BUNDLE_FILES.into_iter().zip(contents).collect())
}

pub fn write_bundle(bundle: &SynthBundle, config: &SynthConfig, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let files = render_bundle(bundle, config)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, text) in files {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

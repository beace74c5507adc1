use std::fmt;

use serde::{Deserialize, Serialize};

/// Tolerance on the sum of a relation distribution.
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

/// Natural-language relation between an ordered pair of choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Entail,
    Contradict,
    Neutral,
}

impl Relation {
    pub const ALL: [Relation; 3] = [Relation::Entail, Relation::Contradict, Relation::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Entail => "entail",
            Relation::Contradict => "contradict",
            Relation::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Distribution over the three relation classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationProbs {
    pub entail: f64,
    pub contradict: f64,
    pub neutral: f64,
}

impl RelationProbs {
    pub fn new(entail: f64, contradict: f64, neutral: f64) -> Self {
        RelationProbs {
            entail,
            contradict,
            neutral,
        }
    }

    pub fn one_hot(relation: Relation) -> Self {
        let mut probs = RelationProbs::new(0.0, 0.0, 0.0);
        *probs.get_mut(relation) = 1.0;
        probs
    }

    /// Convert a single label plus confidence into a distribution, spreading
    /// the remaining mass evenly over the other two classes.
    pub fn from_label(relation: Relation, confidence: f64) -> Self {
        let rest = (1.0 - confidence) / 2.0;
        let mut probs = RelationProbs::new(rest, rest, rest);
        *probs.get_mut(relation) = confidence;
        probs
    }

    pub fn get(&self, relation: Relation) -> f64 {
        match relation {
            Relation::Entail => self.entail,
            Relation::Contradict => self.contradict,
            Relation::Neutral => self.neutral,
        }
    }

    fn get_mut(&mut self, relation: Relation) -> &mut f64 {
        match relation {
            Relation::Entail => &mut self.entail,
            Relation::Contradict => &mut self.contradict,
            Relation::Neutral => &mut self.neutral,
        }
    }

    /// Most probable class and its probability. Ties go to the class listed
    /// first in entail, contradict, neutral order.
    pub fn argmax(&self) -> (Relation, f64) {
        let mut best = (Relation::Entail, self.entail);
        for relation in [Relation::Contradict, Relation::Neutral] {
            let p = self.get(relation);
            if p > best.1 {
                best = (relation, p);
            }
        }
        best
    }

    pub fn check(&self) -> Result<(), String> {
        for relation in Relation::ALL {
            let p = self.get(relation);
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("probability of {relation} is {p}, outside [0, 1]"));
            }
        }
        let sum = self.entail + self.contradict + self.neutral;
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(format!("probabilities sum to {sum}, not 1"));
        }
        Ok(())
    }
}

/// Stand-alone QA confidence that a choice is true.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub choice_id: String,
    pub p_true: f64,
}

/// Relation confidences for an ordered choice pair inside one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationRecord {
    pub group_id: String,
    pub src: String,
    pub dst: String,
    pub probs: RelationProbs,
}

impl RelationRecord {
    pub fn argmax(&self) -> (Relation, f64) {
        self.probs.argmax()
    }
}

/// Final truth value for a choice, with the upstream score echoed for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub choice_id: String,
    pub label: bool,
    pub p_true: f64,
}

pub(crate) fn check_unit(name: &str, value: f64) -> Result<(), String> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(format!("{name} = {value} is outside [0, 1]"))
    }
}

pub(crate) fn check_id(name: &str, value: &str) -> Result<(), String> {
    if value.is_empty() {
        Err(format!("{name} is empty"))
    } else {
        Ok(())
    }
}

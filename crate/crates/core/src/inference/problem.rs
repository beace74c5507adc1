use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    /// `x_src` true forces `x_dst` true.
    Entail,
    /// `x_src` true forces `x_dst` false.
    Contradict,
}

/// A rule instantiated over two variables of one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundedRule {
    pub kind: RuleKind,
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

impl GroundedRule {
    pub fn is_violated(&self, assignment: &[bool]) -> bool {
        let (s, d) = (assignment[self.src], assignment[self.dst]);
        match self.kind {
            RuleKind::Entail => s && !d,
            RuleKind::Contradict => s && d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintMode {
    /// Violations cost `weight` in the objective.
    #[default]
    Soft,
    /// Violations are forbidden.
    Hard,
}

/// A 0/1 program over one group's choices.
///
/// Maximize `sum_j local_j(x_j) - sum_r weight_r * [rule r violated]`, where the
/// penalty term applies in soft mode only; in hard mode violated rules make the
/// assignment infeasible. Every exactly-one block must contain exactly one
/// true variable in either mode.
#[derive(Debug, Clone, PartialEq)]
pub struct IlpProblem {
    pub n: usize,
    /// `(score if true, score if false)` per variable.
    pub local: Vec<(f64, f64)>,
    pub rules: Vec<GroundedRule>,
    pub exactly_one_blocks: Vec<Vec<usize>>,
    pub mode: ConstraintMode,
    pub lambda: f64,
}

impl IlpProblem {
    /// Problem with local scores `(p, 1 - p)` from truth probabilities.
    pub fn from_probabilities(
        p_true: &[f64],
        rules: Vec<GroundedRule>,
        exactly_one_blocks: Vec<Vec<usize>>,
        mode: ConstraintMode,
        lambda: f64,
    ) -> Result<Self> {
        let problem = IlpProblem {
            n: p_true.len(),
            local: p_true.iter().map(|&p| (p, 1.0 - p)).collect(),
            rules,
            exactly_one_blocks,
            mode,
            lambda,
        };
        problem.check()?;
        Ok(problem)
    }

    pub fn check(&self) -> Result<()> {
        if self.local.len() != self.n {
            return Err(Error::domain("local score count differs from n"));
        }
        for (j, &(t, f)) in self.local.iter().enumerate() {
            if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&f) {
                return Err(Error::domain(format!("local scores of variable {j} outside [0, 1]")));
            }
        }
        for rule in &self.rules {
            if rule.src >= self.n || rule.dst >= self.n || rule.src == rule.dst {
                return Err(Error::domain(format!(
                    "rule {} -> {} is out of range or reflexive",
                    rule.src, rule.dst
                )));
            }
            if !(rule.weight >= 0.0 && rule.weight.is_finite()) {
                return Err(Error::domain(format!("rule weight {} is invalid", rule.weight)));
            }
        }
        for block in &self.exactly_one_blocks {
            if block.iter().any(|&j| j >= self.n) {
                return Err(Error::domain("exactly-one block index out of range"));
            }
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::domain(format!("lambda {} is invalid", self.lambda)));
        }
        Ok(())
    }

    pub fn is_feasible(&self, assignment: &[bool]) -> bool {
        let blocks_ok = self
            .exactly_one_blocks
            .iter()
            .all(|b| b.iter().filter(|&&j| assignment[j]).count() == 1);
        let rules_ok = self.mode == ConstraintMode::Soft
            || self.rules.iter().all(|r| !r.is_violated(assignment));
        blocks_ok && rules_ok
    }

    /// Objective of a complete assignment, `None` when it is infeasible.
    ///
    /// This is the single evaluation both solvers compare with, so ties are
    /// decided on identical floating-point values.
    pub fn objective(&self, assignment: &[bool]) -> Option<f64> {
        debug_assert_eq!(assignment.len(), self.n);
        if !self.is_feasible(assignment) {
            return None;
        }
        let mut total = 0.0;
        for (&(t, f), &x) in self.local.iter().zip(assignment) {
            total += if x { t } else { f };
        }
        if self.mode == ConstraintMode::Soft {
            for rule in &self.rules {
                if rule.is_violated(assignment) {
                    total -= rule.weight;
                }
            }
        }
        Some(total)
    }

    /// Same problem with hard rules turned into penalties.
    pub fn softened(&self) -> IlpProblem {
        IlpProblem {
            mode: ConstraintMode::Soft,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    /// Empty when infeasible.
    pub assignment: Vec<bool>,
    /// `-inf` when infeasible.
    pub objective: f64,
    /// Set when a hard problem was re-solved in soft mode.
    pub fell_back: bool,
}

impl Solution {
    pub(crate) fn optimal(assignment: Vec<bool>, objective: f64) -> Self {
        Solution {
            status: SolveStatus::Optimal,
            assignment,
            objective,
            fell_back: false,
        }
    }

    pub(crate) fn infeasible() -> Self {
        Solution {
            status: SolveStatus::Infeasible,
            assignment: Vec::new(),
            objective: f64::NEG_INFINITY,
            fell_back: false,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

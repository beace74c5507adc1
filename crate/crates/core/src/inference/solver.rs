//! Exact solvers for [`IlpProblem`].
//!
//! [`solve`] is a depth-first branch and bound over `x_1..x_n`, trying `false`
//! before `true`. An incumbent is replaced only by an objective better by more
//! than [`TIE_TOLERANCE`], so among equal optima the lexicographically smallest
//! assignment survives. [`brute_force`] enumerates in the same order with the
//! same replacement rule and is the reference the search is tested against.

use super::problem::{ConstraintMode, IlpProblem, RuleKind, Solution};
use crate::error::{Error, Result};

/// Largest problem [`brute_force`] accepts.
pub const BRUTE_FORCE_MAX_VARS: usize = 25;

/// Objectives closer than this count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Allowance for rounding between the bound and the exact objective.
const BOUND_ROUNDING: f64 = 1e-12;

fn improves(value: f64, incumbent: Option<&(f64, Vec<bool>)>) -> bool {
    incumbent.is_none_or(|(best, _)| value > best + TIE_TOLERANCE)
}

pub fn brute_force(problem: &IlpProblem) -> Result<Solution> {
    problem.check()?;
    let n = problem.n;
    if n > BRUTE_FORCE_MAX_VARS {
        return Err(Error::domain(format!(
            "brute force is limited to {BRUTE_FORCE_MAX_VARS} variables, got {n}"
        )));
    }
    let mut best: Option<(f64, Vec<bool>)> = None;
    let mut assignment = vec![false; n];
    // x_1 is the most significant bit, so counting up is lexicographic order.
    for mask in 0u64..(1u64 << n) {
        for (j, x) in assignment.iter_mut().enumerate() {
            *x = mask >> (n - 1 - j) & 1 == 1;
        }
        if let Some(value) = problem.objective(&assignment) {
            if improves(value, best.as_ref()) {
                best = Some((value, assignment.clone()));
            }
        }
    }
    Ok(match best {
        Some((objective, assignment)) => Solution::optimal(assignment, objective),
        None => Solution::infeasible(),
    })
}

pub fn solve(problem: &IlpProblem) -> Result<Solution> {
    problem.check()?;
    let mut search = Search::new(problem);
    search.descend(0);
    Ok(match search.best {
        Some((objective, assignment)) => Solution::optimal(assignment, objective),
        None => Solution::infeasible(),
    })
}

struct Search<'a> {
    problem: &'a IlpProblem,
    /// Rules touching each variable.
    rules_of: Vec<Vec<usize>>,
    block_of: Vec<Option<usize>>,
    /// Highest variable index of each block.
    block_last: Vec<usize>,
    assignment: Vec<bool>,
    best: Option<(f64, Vec<bool>)>,
}

impl<'a> Search<'a> {
    fn new(problem: &'a IlpProblem) -> Self {
        let n = problem.n;
        let mut rules_of = vec![Vec::new(); n];
        for (r, rule) in problem.rules.iter().enumerate() {
            rules_of[rule.src].push(r);
            rules_of[rule.dst].push(r);
        }
        let mut block_of = vec![None; n];
        let mut block_last = Vec::with_capacity(problem.exactly_one_blocks.len());
        for (b, block) in problem.exactly_one_blocks.iter().enumerate() {
            for &j in block {
                block_of[j] = Some(b);
            }
            block_last.push(block.iter().copied().max().unwrap_or(0));
        }
        Search {
            problem,
            rules_of,
            block_of,
            block_last,
            assignment: vec![false; n],
            best: None,
        }
    }

    fn hard(&self) -> bool {
        self.problem.mode == ConstraintMode::Hard
    }

    /// Variables `0..depth` are fixed; decide `depth`.
    fn descend(&mut self, depth: usize) {
        if depth == self.problem.n {
            if let Some(value) = self.problem.objective(&self.assignment) {
                if improves(value, self.best.as_ref()) {
                    self.best = Some((value, self.assignment.clone()));
                }
            }
            return;
        }
        for value in [false, true] {
            self.assignment[depth] = value;
            if !self.consistent_at(depth) {
                continue;
            }
            let Some(bound) = self.upper_bound(depth + 1) else {
                continue;
            };
            // No completion below can replace the incumbent.
            if let Some((best, _)) = &self.best {
                if bound < best + TIE_TOLERANCE - BOUND_ROUNDING {
                    continue;
                }
            }
            self.descend(depth + 1);
        }
    }

    /// Constraints whose variables are all fixed once `depth` is set.
    fn consistent_at(&self, depth: usize) -> bool {
        let x = &self.assignment;
        if self.hard() {
            for &r in &self.rules_of[depth] {
                let rule = &self.problem.rules[r];
                if rule.src <= depth && rule.dst <= depth && rule.is_violated(x) {
                    return false;
                }
            }
        }
        if let Some(b) = self.block_of[depth] {
            let block = &self.problem.exactly_one_blocks[b];
            let trues = block.iter().filter(|&&j| j <= depth && x[j]).count();
            if trues > 1 || (depth == self.block_last[b] && trues == 0) {
                return false;
            }
        }
        true
    }

    /// Admissible bound over all completions of `0..fixed`: exact score of the
    /// fixed part, plus for each free variable its best value counting only
    /// penalties and hard rules shared with fixed variables. `None` when some
    /// free variable has no admissible value.
    fn upper_bound(&self, fixed: usize) -> Option<f64> {
        let problem = self.problem;
        let x = &self.assignment;
        let mut bound = 0.0;
        for (&(t, f), &xj) in problem.local[..fixed].iter().zip(x) {
            bound += if xj { t } else { f };
        }
        if !self.hard() {
            for rule in &problem.rules {
                if rule.src < fixed && rule.dst < fixed && rule.is_violated(x) {
                    bound -= rule.weight;
                }
            }
        }

        // Per block: number of fixed trues and number of free members.
        let mut block_trues = vec![0usize; problem.exactly_one_blocks.len()];
        let mut block_free = vec![0usize; problem.exactly_one_blocks.len()];
        for (b, block) in problem.exactly_one_blocks.iter().enumerate() {
            for &j in block {
                if j < fixed {
                    block_trues[b] += x[j] as usize;
                } else {
                    block_free[b] += 1;
                }
            }
        }

        for j in fixed..problem.n {
            let (t, f) = problem.local[j];
            let mut score = [f, t];
            let mut allowed = [true, true];
            if let Some(b) = self.block_of[j] {
                if block_trues[b] > 0 {
                    allowed[1] = false;
                } else if block_free[b] == 1 {
                    allowed[0] = false;
                }
            }
            for &r in &self.rules_of[j] {
                let rule = &problem.rules[r];
                let other = if rule.src == j { rule.dst } else { rule.src };
                if other >= fixed {
                    continue;
                }
                for v in [false, true] {
                    let (s, d) = if rule.src == j { (v, x[other]) } else { (x[other], v) };
                    let violated = match rule.kind {
                        RuleKind::Entail => s && !d,
                        RuleKind::Contradict => s && d,
                    };
                    if violated {
                        if self.hard() {
                            allowed[v as usize] = false;
                        } else {
                            score[v as usize] -= rule.weight;
                        }
                    }
                }
            }
            bound += match allowed {
                [true, true] => score[0].max(score[1]),
                [true, false] => score[0],
                [false, true] => score[1],
                [false, false] => return None,
            };
        }
        Some(bound)
    }
}

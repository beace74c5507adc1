//! Consistency inference for multiple-choice reading comprehension.
//!
//! A question-answering model scores each answer choice on its own, and a
//! relation model says whether one choice entails or contradicts another. This
//! crate combines the two: every group of related choices becomes a small 0/1
//! program that trades the stand-alone scores against two rules,
//!
//! * if `c_i` is true and `c_i` entails `c_j`, then `c_j` is true;
//! * if `c_i` is true and `c_i` contradicts `c_j`, then `c_j` is false,
//!
//! and the program is solved exactly. Around the solver sit readers for the
//! datasets and interchange files, a lexical relation baseline, the attention
//! layer used by the relation model, self-training label generation,
//! evaluation metrics and a synthetic benchmark generator.
//!
//! ```
//! use mcinfer::inference::{solve, ConstraintMode, GroundedRule, IlpProblem, RuleKind};
//!
//! // Choice 0 is confidently true and entails choice 1.
//! let rule = GroundedRule { kind: RuleKind::Entail, src: 0, dst: 1, weight: 0.9 };
//! let problem =
//!     IlpProblem::from_probabilities(&[0.9, 0.4], vec![rule], vec![], ConstraintMode::Soft, 1.0)?;
//! assert_eq!(solve(&problem)?.assignment, [true, true]);
//! # Ok::<(), mcinfer::Error>(())
//! ```

pub mod attention;
pub mod baseline;
pub mod cli;
pub mod error;
pub mod inference;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod selftrain;
pub mod synth;

pub use error::{Error, Result};

/// Chapters of the guide in `book/`, compiled as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/data-model.md")]
    pub struct DataModel;
    #[doc = include_str!("../../../book/src/interchange.md")]
    pub struct Interchange;
    #[doc = include_str!("../../../book/src/inference.md")]
    pub struct Inference;
    #[doc = include_str!("../../../book/src/attention.md")]
    pub struct Attention;
    #[doc = include_str!("../../../book/src/self-training.md")]
    pub struct SelfTraining;
    #[doc = include_str!("../../../book/src/metrics.md")]
    pub struct Metrics;
    #[doc = include_str!("../../../book/src/synthetic.md")]
    pub struct Synthetic;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}

//! Sequence attention and self-attention over word embeddings.
//!
//! For a query `u` and a sequence `v_1..v_n`, the attention weights are
//! `alpha = softmax_i( f(W u) . f(W v_i) )` and the output is `sum_i alpha_i v_i`.
//! Self-attention attends every element of a sequence over the whole sequence.
//!
//! Nothing here is trained. `W` is supplied by the caller or seeded, which is
//! enough to exercise and verify the numerics.

mod embedding;
mod jacobian;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use embedding::{load_embeddings, parse_embeddings, EmbeddingTable};
pub use jacobian::{
    jacobian_check, numeric_jacobian, seq_attention_jacobian, softmax_jacobian, JacobianTarget,
};

pub type Vector = DVector<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    #[default]
    Relu,
    Tanh,
    Identity,
}

impl Nonlinearity {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Nonlinearity::Relu => x.max(0.0),
            Nonlinearity::Tanh => x.tanh(),
            Nonlinearity::Identity => x,
        }
    }

    /// Derivative; relu uses 0 at the kink.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Nonlinearity::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Nonlinearity::Tanh => 1.0 - x.tanh().powi(2),
            Nonlinearity::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    weight: DMatrix<f64>,
    nonlinearity: Nonlinearity,
}

impl AttentionParams {
    /// `weight` is `out_dim x in_dim`.
    pub fn new(weight: DMatrix<f64>, nonlinearity: Nonlinearity) -> Result<Self> {
        if weight.nrows() == 0 || weight.ncols() == 0 {
            return Err(Error::domain("attention weight must be at least 1x1"));
        }
        if weight.iter().any(|w| !w.is_finite()) {
            return Err(Error::domain("attention weight has non-finite entries"));
        }
        Ok(AttentionParams {
            weight,
            nonlinearity,
        })
    }

    pub fn identity(dim: usize, nonlinearity: Nonlinearity) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim), nonlinearity)
    }

    /// Weights drawn uniformly from [-0.1, 0.1].
    pub fn seeded(out_dim: usize, in_dim: usize, nonlinearity: Nonlinearity, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weight = DMatrix::from_fn(out_dim, in_dim, |_, _| rng.gen_range(-0.1..=0.1));
        Self::new(weight, nonlinearity)
    }

    pub fn weight(&self) -> &DMatrix<f64> {
        &self.weight
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        self.nonlinearity
    }

    pub fn in_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.nrows()
    }

    /// Pre-activation `W x`.
    pub(crate) fn project(&self, x: &Vector) -> Vector {
        &self.weight * x
    }

    pub(crate) fn activate(&self, z: &Vector) -> Vector {
        z.map(|x| self.nonlinearity.apply(x))
    }
}

/// Normalized attention weights: non-negative, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights(Vec<f64>);

impl AttentionWeights {
    pub fn alphas(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Max-subtracted softmax.
pub fn softmax(xs: &[f64]) -> Result<AttentionWeights> {
    if xs.is_empty() {
        return Err(Error::domain("softmax of an empty sequence"));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("softmax input has non-finite entries"));
    }
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(AttentionWeights(exps.into_iter().map(|e| e / total).collect()))
}

fn check_inputs(u: &Vector, vs: &[Vector], params: &AttentionParams) -> Result<()> {
    if vs.is_empty() {
        return Err(Error::domain("attention over an empty sequence"));
    }
    let dim = params.in_dim();
    for (i, v) in std::iter::once(u).chain(vs).enumerate() {
        if v.len() != dim {
            return Err(Error::domain(format!(
                "input {i} has dimension {}, attention expects {dim}",
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain(format!("input {i} has non-finite entries")));
        }
    }
    Ok(())
}

/// Raw attention scores `f(W u) . f(W v_i)`.
pub(crate) fn attention_scores(u: &Vector, vs: &[Vector], params: &AttentionParams) -> Vec<f64> {
    let query = params.activate(&params.project(u));
    vs.iter()
        .map(|v| query.dot(&params.activate(&params.project(v))))
        .collect()
}

/// Attend `u` over `vs`; returns the convex combination and its weights.
pub fn seq_attention(
    u: &Vector,
    vs: &[Vector],
    params: &AttentionParams,
) -> Result<(Vector, AttentionWeights)> {
    check_inputs(u, vs, params)?;
    let weights = softmax(&attention_scores(u, vs, params))?;
    let mut out = Vector::zeros(params.in_dim());
    for (alpha, v) in weights.alphas().iter().zip(vs) {
        out.axpy(*alpha, v, 1.0);
    }
    Ok((out, weights))
}

pub fn self_attention(vs: &[Vector], params: &AttentionParams) -> Result<Vec<Vector>> {
    vs.iter()
        .map(|v| seq_attention(v, vs, params).map(|(out, _)| out))
        .collect()
}

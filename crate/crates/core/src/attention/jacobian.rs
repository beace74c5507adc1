//! Analytic Jacobians and a central-difference check against them.

use nalgebra::DMatrix;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{attention_scores, check_inputs, seq_attention, softmax, AttentionParams, Nonlinearity, Vector};
use crate::error::Result;

/// Floor on the relative-error denominator.
const DENOMINATOR_FLOOR: f64 = 1e-8;

/// Function whose Jacobian is checked.
#[derive(Debug, Clone)]
pub enum JacobianTarget {
    Softmax(Vec<f64>),
    /// Jacobian with respect to `u` followed by each `v_i`.
    SeqAttention {
        u: Vector,
        vs: Vec<Vector>,
        params: AttentionParams,
    },
}

impl JacobianTarget {
    /// Seeded attention case: `d` in 2..=5, 1..=6 vectors with entries uniform
    /// in [-2, 2], and a `(d + 1) x d` weight from [`AttentionParams::seeded`].
    pub fn seeded(seed: u64, nonlinearity: Nonlinearity) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.gen_range(2..=5);
        let n = rng.gen_range(1..=6);
        let mut draw = || Vector::from_fn(d, |_, _| rng.gen_range(-2.0..2.0));
        let u = draw();
        let vs = (0..n).map(|_| draw()).collect();
        let params = AttentionParams::seeded(d + 1, d, nonlinearity, seed).expect("positive dimensions");
        JacobianTarget::SeqAttention { u, vs, params }
    }
}

/// `d alpha_i / d x_j = alpha_i (delta_ij - alpha_j)`.
pub fn softmax_jacobian(xs: &[f64]) -> Result<DMatrix<f64>> {
    let alphas = softmax(xs)?.into_vec();
    let n = alphas.len();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        alphas[i] * (delta - alphas[j])
    }))
}

/// Jacobian of the attention output, `d x (d * (n + 1))`, columns ordered
/// `u, v_1, .., v_n`.
pub fn seq_attention_jacobian(u: &Vector, vs: &[Vector], params: &AttentionParams) -> Result<DMatrix<f64>> {
    check_inputs(u, vs, params)?;
    let (out, weights) = seq_attention(u, vs, params)?;
    let alphas = weights.alphas();
    let d = params.in_dim();
    let w = params.weight();
    let f = params.nonlinearity();

    let z_u = params.project(u);
    let a = params.activate(&z_u);
    let da = z_u.map(|x| f.derivative(x));

    let mut jac = DMatrix::zeros(d, d * (vs.len() + 1));
    let mut d_u = DMatrix::zeros(d, d);
    for (j, v) in vs.iter().enumerate() {
        let z_v = params.project(v);
        let b = params.activate(&z_v);
        let db = z_v.map(|x| f.derivative(x));
        let centered = v - &out;

        // d s_j / d u and d s_j / d v_j
        let h = w.transpose() * da.component_mul(&b);
        let g = w.transpose() * db.component_mul(&a);

        d_u += alphas[j] * &centered * h.transpose();
        let block = DMatrix::identity(d, d) * alphas[j] + alphas[j] * &centered * g.transpose();
        jac.columns_mut(d * (j + 1), d).copy_from(&block);
    }
    jac.columns_mut(0, d).copy_from(&d_u);
    Ok(jac)
}

/// Central-difference Jacobian of `f` at `x` with step `h`.
pub fn numeric_jacobian<F>(f: F, x: &[f64], h: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let rows = f(x).len();
    let mut jac = DMatrix::zeros(rows, x.len());
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        probe[j] = x[j] + h;
        let plus = f(&probe);
        probe[j] = x[j] - h;
        let minus = f(&probe);
        probe[j] = x[j];
        for i in 0..rows {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    jac
}

fn max_relative_error(analytic: &DMatrix<f64>, numeric: &DMatrix<f64>) -> f64 {
    analytic
        .iter()
        .zip(numeric.iter())
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(DENOMINATOR_FLOOR))
        .fold(0.0, f64::max)
}

/// Largest relative error between the analytic Jacobian and central
/// differences with step `h`.
pub fn jacobian_check(target: &JacobianTarget, h: f64) -> Result<f64> {
    match target {
        JacobianTarget::Softmax(xs) => {
            let analytic = softmax_jacobian(xs)?;
            let numeric = numeric_jacobian(
                |x| softmax(x).expect("perturbed input stays valid").into_vec(),
                xs,
                h,
            );
            Ok(max_relative_error(&analytic, &numeric))
        }
        JacobianTarget::SeqAttention { u, vs, params } => {
            let analytic = seq_attention_jacobian(u, vs, params)?;
            let d = params.in_dim();
            let mut flat: Vec<f64> = u.iter().copied().collect();
            for v in vs {
                flat.extend(v.iter());
            }
            let forward = |x: &[f64]| {
                let u = Vector::from_column_slice(&x[..d]);
                let vs: Vec<Vector> = x[d..].chunks(d).map(Vector::from_column_slice).collect();
                let alphas = softmax(&attention_scores(&u, &vs, params))
                    .expect("perturbed input stays valid")
                    .into_vec();
                let mut out = Vector::zeros(d);
                for (alpha, v) in alphas.iter().zip(&vs) {
                    out.axpy(*alpha, v, 1.0);
                }
                out.iter().copied().collect::<Vec<f64>>()
            };
            let numeric = numeric_jacobian(forward, &flat, h);
            Ok(max_relative_error(&analytic, &numeric))
        }
    }
}

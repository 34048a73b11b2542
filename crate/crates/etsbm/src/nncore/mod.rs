//! Minimal differentiable-computation kernel: a dense softplus MLP with
//! analytic backpropagation, reparameterized Gaussian sampling, stable
//! softmax/log-sum-exp primitives, Adam, and finite-difference verification.
//!
//! Everything is `f64` and explicitly seeded; forward/backward are pure
//! functions of the parameter values.

mod adam;
mod encoder;
mod fd;

pub use adam::AdamState;
pub use encoder::{EncoderCache, EncoderGrads, EncoderOutput, EncoderParams};
pub use fd::{finite_diff_check, FdBlockReport, FdReport};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("non-finite input at {0}")]
    NonFinite(&'static str),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// log(sum(exp(x))) with max-subtraction.
pub fn logsumexp(x: &[f64]) -> f64 {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = x.iter().map(|&v| (v - m).exp()).sum();
    m + s.ln()
}

/// Numerically stable softmax; output sums to 1.
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    softmax_inplace(&mut out);
    out
}

/// In-place softmax over a slice.
pub fn softmax_inplace(x: &mut [f64]) {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in x.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    for v in x.iter_mut() {
        *v /= s;
    }
}

/// log-softmax: x - logsumexp(x), computed stably.
pub fn log_softmax(x: &[f64]) -> Vec<f64> {
    let lse = logsumexp(x);
    x.iter().map(|&v| v - lse).collect()
}

/// softplus(x) = ln(1 + e^x), overflow-safe.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Logistic sigmoid, the derivative of softplus.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Draws `delta = mu + exp(log_var / 2) .* eps` with `eps ~ N(0, I)`.
///
/// Returns the noise alongside the sample so gradients can be routed through
/// the deterministic path.
pub fn sample_reparam(mu: &[f64], log_var: &[f64], seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_reparam_with(mu, log_var, &mut rng)
}

/// As [`sample_reparam`] but drawing from a caller-owned RNG stream.
pub fn sample_reparam_with<R: rand::Rng>(
    mu: &[f64],
    log_var: &[f64],
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(mu.len(), log_var.len(), "mu/log_var length mismatch");
    let eps: Vec<f64> = (0..mu.len())
        .map(|_| StandardNormal.sample(rng))
        .collect();
    let delta = mu
        .iter()
        .zip(log_var)
        .zip(&eps)
        .map(|((&m, &lv), &e)| m + (0.5 * lv).exp() * e)
        .collect();
    (delta, eps)
}

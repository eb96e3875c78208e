//! One-dimensional search for the `λ` minimising a transfer error.

use rayon::prelude::*;

use super::{Protocol, ProtocolParams};
use crate::error::{Error, Result};
use crate::hilbert::CvState;

pub const LAMBDA_RANGE: (f64, f64) = (0.02, 0.8);
pub const COARSE_POINTS: usize = 30;
const GOLDEN_TOL: f64 = 1e-4;
const GOLDEN_MAX_ITER: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaOptimum {
    pub lambda: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// `n` log-spaced points covering `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Coarse grid over `range` followed by golden-section refinement inside
/// the bracket around the best grid point.
pub fn optimize_lambda<F>(range: (f64, f64), objective: F) -> Result<LambdaOptimum>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidParameter {
            name: "lambda range",
            value: lo,
            reason: "need 0 < low < high",
        });
    }
    let grid = log_grid(lo, hi, COARSE_POINTS);
    let values: Vec<f64> = grid.par_iter().map(|&l| objective(l)).collect::<Result<_>>()?;
    let best = (0..grid.len())
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .expect("non-empty grid");
    let mut evaluations = grid.len();
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(grid.len() - 1)];

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = objective(c)?;
    let mut fd = objective(d)?;
    evaluations += 2;
    let mut iter = 0;
    while (b - a) > GOLDEN_TOL * (a + b) / 2.0 {
        if iter == GOLDEN_MAX_ITER {
            return Err(Error::RootBracket {
                what: "golden-section lambda search",
                target: GOLDEN_TOL,
                low: a,
                high: b,
            });
        }
        iter += 1;
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d)?;
        }
        evaluations += 1;
    }
    let (mut lambda, mut value) = if fc < fd { (c, fc) } else { (d, fd) };
    if values[best] < value {
        lambda = grid[best];
        value = values[best];
    }
    Ok(LambdaOptimum { lambda, value, evaluations })
}

/// How `ε` is evaluated during a `λ` search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluator {
    /// Full joint simulation at truncation `dim`. Values of `λ` whose
    /// encoding pushes more than [`EDGE_LIMIT`] into the top tenth of the
    /// Fock basis are rejected as unresolved.
    Fock { dim: usize },
    /// Branch integral against the exact pointer state; no joint truncation.
    Position,
}

/// Largest top-decile population accepted from a Fock-space evaluation.
pub const EDGE_LIMIT: f64 = 1e-6;

impl Evaluator {
    /// `ε(input)` at `(λ, N)`, or `+∞` when the truncation cannot resolve it.
    pub fn epsilon(&self, input: &CvState, lambda: f64, n_qubits: usize) -> Result<f64> {
        match *self {
            Evaluator::Fock { dim } => {
                let proto = Protocol::new(ProtocolParams::new(lambda, n_qubits, dim)?)?;
                let reg = proto.encoded_register(input)?;
                Ok(if reg.edge_population > EDGE_LIMIT {
                    f64::INFINITY
                } else {
                    reg.epsilon
                })
            }
            Evaluator::Position => crate::oracle::position_epsilon(input, lambda, n_qubits),
        }
    }
}

/// Minimises `ε(input)` over `λ ∈ range` for fixed `N`.
pub fn optimize_lambda_for(
    input: &CvState,
    n_qubits: usize,
    evaluator: Evaluator,
    range: (f64, f64),
) -> Result<LambdaOptimum> {
    let opt = optimize_lambda(range, |lambda| evaluator.epsilon(input, lambda, n_qubits))?;
    if !opt.value.is_finite() {
        return Err(Error::Truncation {
            leakage: f64::INFINITY,
            threshold: EDGE_LIMIT,
        });
    }
    Ok(opt)
}

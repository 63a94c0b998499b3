//! Index computations: the determinant-sign block formula, a numerical-rank
//! index on the dense truncation, and winding numbers of sampled circle curves.
//!
//! The two indices are computed independently and reported side by side; no
//! agreement between them is assumed.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::operator_assembly::{to_dense, BlockOperator};

pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-8;

/// A determinant counts as real when `|Im det| <= DET_IMAG_TOLERANCE * |det|`.
pub const DET_IMAG_TOLERANCE: f64 = 1e-9;

/// Largest accepted phase step between consecutive samples. Principal-branch
/// increments never exceed π, so the useful resolution check is stricter.
pub const MAX_PHASE_STEP: f64 = PI / 2.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContributingPair {
    pub pi: Vec<i64>,
    pub rho: Vec<i64>,
    /// `d_π · d_ρ`.
    pub weight: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaIndex {
    pub index: i64,
    pub contributing_pairs: Vec<ContributingPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericalIndex {
    pub rank: usize,
    pub kernel_dim: usize,
    pub cokernel_dim: usize,
    pub index: i64,
    pub rank_tolerance: f64,
}

/// Both index computations for one operator. The formula side is `None` when it
/// does not apply, with the reason in `formula_error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub formula_index: Option<i64>,
    pub contributing_pairs: Vec<ContributingPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula_error: Option<String>,
    pub numerical_kernel_dim: usize,
    pub numerical_cokernel_dim: usize,
    pub numerical_index: i64,
    pub rank_tolerance: f64,
}

impl IndexReport {
    pub fn new(formula: Result<FormulaIndex>, numerical: NumericalIndex) -> Self {
        let (formula_index, contributing_pairs, formula_error) = match formula {
            Ok(f) => (Some(f.index), f.contributing_pairs, None),
            Err(e) => (None, Vec::new(), Some(e.to_string())),
        };
        IndexReport {
            formula_index,
            contributing_pairs,
            formula_error,
            numerical_kernel_dim: numerical.kernel_dim,
            numerical_cokernel_dim: numerical.cokernel_dim,
            numerical_index: numerical.index,
            rank_tolerance: numerical.rank_tolerance,
        }
    }
}

/// `Σ d_π d_ρ` over stored blocks with `det T(π, ρ) < 0`.
pub fn index_formula(op: &BlockOperator) -> Result<FormulaIndex> {
    let mut index = 0;
    let mut contributing_pairs = Vec::new();
    for (&(pi, rho), block) in op.blocks() {
        let inapplicable = |reason: String| Error::FormulaInapplicable {
            pi: op.codomain().label(pi).index().to_vec(),
            rho: op.domain().label(rho).index().to_vec(),
            reason,
        };
        let (r, c) = block.shape();
        if r != c {
            return Err(inapplicable(format!("block is {r}x{c}, not square")));
        }
        let det: Complex64 = block.clone().determinant();
        if det.im.abs() > DET_IMAG_TOLERANCE * det.norm() {
            return Err(inapplicable(format!("determinant {det} is not real")));
        }
        if det.re < 0.0 {
            let weight = (r * c) as i64;
            index += weight;
            contributing_pairs.push(ContributingPair {
                pi: op.codomain().label(pi).index().to_vec(),
                rho: op.domain().label(rho).index().to_vec(),
                weight,
            });
        }
    }
    Ok(FormulaIndex {
        index,
        contributing_pairs,
    })
}

/// Kernel and cokernel dimensions of the dense truncation from its numerical
/// rank `#{s > tol · σ_max}`.
pub fn numerical_index(op: &BlockOperator, rank_tolerance: f64) -> Result<NumericalIndex> {
    if !(rank_tolerance.is_finite() && rank_tolerance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "rank tolerance must be positive, got {rank_tolerance}"
        )));
    }
    let dense = to_dense(op)?;
    let values = linalg::singular_values(&dense)?;
    let top = values.first().copied().unwrap_or(0.0);
    let rank = if top > 0.0 {
        values.iter().filter(|&&s| s > rank_tolerance * top).count()
    } else {
        0
    };
    let (n_out, n_in) = dense.shape();
    Ok(NumericalIndex {
        rank,
        kernel_dim: n_in - rank,
        cokernel_dim: n_out - rank,
        index: (n_in - rank) as i64 - (n_out - rank) as i64,
        rank_tolerance,
    })
}

/// Formula and numerical index together; only a numerical failure is an error.
pub fn index_report(op: &BlockOperator, rank_tolerance: f64) -> Result<IndexReport> {
    let numerical = numerical_index(op, rank_tolerance)?;
    Ok(IndexReport::new(index_formula(op), numerical))
}

/// Winding number of the closed curve through `samples` (taken in order, the
/// last joined back to the first).
pub fn winding_number(samples: &[Complex64], tolerance: f64) -> Result<i64> {
    if samples.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 samples, got {}",
            samples.len()
        )));
    }
    if let Some((position, z)) = samples
        .iter()
        .enumerate()
        .find(|(_, z)| z.norm() <= tolerance || z.norm().is_nan())
    {
        return Err(Error::VanishingSample {
            position,
            modulus: z.norm(),
        });
    }
    let n = samples.len();
    let mut total = 0.0;
    for i in 0..n {
        let step = (samples[(i + 1) % n] / samples[i]).arg();
        if step.abs() >= MAX_PHASE_STEP {
            return Err(Error::InsufficientResolution {
                position: i,
                increment: step,
            });
        }
        total += step;
    }
    Ok((total / TAU).round() as i64)
}

/// `f(θ_j)` at `θ_j = 2πj / n`.
pub fn sample_circle(n: usize, f: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
    (0..n).map(|j| f(TAU * j as f64 / n as f64)).collect()
}

/// Samples of `φ(θ) = Σ_k φ̂(k) e^{ikθ}`.
pub fn fourier_samples(coeffs: &BTreeMap<i64, Complex64>, n: usize) -> Vec<Complex64> {
    sample_circle(n, |theta| {
        coeffs
            .iter()
            .map(|(&k, &c)| c * Complex64::from_polar(1.0, k as f64 * theta))
            .sum()
    })
}

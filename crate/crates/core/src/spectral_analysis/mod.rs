//! Singular values, Schatten norms and the boundedness / compactness /
//! Schatten-membership criteria evaluated on truncations.

mod criteria;
mod series;

pub use criteria::{
    carleson_test, compactness_report, criterion_registry, norm_equivalence_check, schur_bound,
    schur_bound_with_norm, schur_constant, Criterion, CriterionContext,
};
pub use series::{
    factor_two_ladder, schatten_series_scan, series_registry, CriterionSeries, ExactSeries,
    SeriesKind, SeriesRung, SeriesScan, CONVERGENCE_RATIO,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::operator_assembly::{to_dense, BlockOperator};

/// Singular values of one weighted block `T(π, ρ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpectrum {
    pub pi: Vec<i64>,
    pub rho: Vec<i64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchattenEntry {
    pub p: f64,
    /// `(Σ s_n^p)^{1/p}` over the global singular values.
    pub norm: f64,
    /// `Σ d_π d_ρ ‖T(π,ρ)‖_HS^p`, the block-sum series of the membership criterion.
    pub criterion_series: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// All `min(N_out, N_in)` singular values of the dense operator, descending.
    pub singular_values: Vec<f64>,
    pub per_block: Vec<BlockSpectrum>,
    pub operator_norm: f64,
    pub schatten: Vec<SchattenEntry>,
}

impl SpectrumReport {
    /// Singular values above `rel_tol * operator_norm` (none for the zero operator).
    pub fn nonzero_singular_values(&self, rel_tol: f64) -> Vec<f64> {
        let floor = rel_tol * self.operator_norm;
        self.singular_values
            .iter()
            .copied()
            .filter(|&s| s > floor && s > 0.0)
            .collect()
    }

    /// Multiset union of the per-block singular values, descending.
    pub fn block_union(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .per_block
            .iter()
            .flat_map(|b| b.values.iter().copied())
            .collect();
        all.sort_by(|a, b| b.total_cmp(a));
        all
    }
}

/// Largest pointwise gap between two descending lists after dropping values at
/// or below `floor` from both; `None` when the remaining counts differ.
pub fn multiset_deviation(a: &[f64], b: &[f64], floor: f64) -> Option<f64> {
    let a: Vec<f64> = a.iter().copied().filter(|&s| s > floor).collect();
    let b: Vec<f64> = b.iter().copied().filter(|&s| s > floor).collect();
    (a.len() == b.len()).then(|| {
        a.iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    })
}

/// Schatten exponents reported by [`spectrum`].
pub const DEFAULT_SCHATTEN_P: [f64; 2] = [1.0, 2.0];

pub fn spectrum(op: &BlockOperator) -> Result<SpectrumReport> {
    spectrum_with(op, &DEFAULT_SCHATTEN_P)
}

/// Dense SVD of the whole operator plus an SVD of every stored block.
pub fn spectrum_with(op: &BlockOperator, ps: &[f64]) -> Result<SpectrumReport> {
    let singular_values = linalg::singular_values(&to_dense(op)?)?;
    let per_block = op
        .blocks()
        .iter()
        .map(|(&(pi, rho), block)| {
            Ok(BlockSpectrum {
                pi: op.codomain().label(pi).index().to_vec(),
                rho: op.domain().label(rho).index().to_vec(),
                values: linalg::singular_values(block)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let operator_norm = singular_values.first().copied().unwrap_or(0.0);
    let mut report = SpectrumReport {
        singular_values,
        per_block,
        operator_norm,
        schatten: Vec::new(),
    };
    for &p in ps {
        let norm = schatten_norm(&report, p)?;
        report.schatten.push(SchattenEntry {
            p,
            norm,
            criterion_series: criterion_block_series(op, p),
        });
    }
    Ok(report)
}

/// `(Σ s_n^p)^{1/p}` over the report's global singular values.
pub fn schatten_norm(report: &SpectrumReport, p: f64) -> Result<f64> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Schatten exponent must be a positive finite number, got {p}"
        )));
    }
    let top = report.operator_norm;
    if top == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = report
        .singular_values
        .iter()
        .map(|&s| (s / top).powf(p))
        .sum();
    Ok(top * sum.powf(1.0 / p))
}

/// `Σ d_π d_ρ ‖T(π,ρ)‖_HS^p` over stored blocks.
pub fn criterion_block_series(op: &BlockOperator, p: f64) -> f64 {
    op.blocks()
        .iter()
        .map(|(&(pi, rho), block)| {
            let d = (op.codomain().label(pi).dim() * op.domain().label(rho).dim()) as f64;
            d * linalg::hs_norm(block).powf(p)
        })
        .sum()
}

/// Outcome of one executable criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionVerdict {
    pub name: String,
    pub bound_value: f64,
    pub measured_value: f64,
    pub satisfied: bool,
    pub detail: String,
}

//! Schatten-membership series for the diagonal SU(2) family
//! `a(l, l) = (1+l)^{-α} I`, decided on a ladder of cutoffs.
//!
//! Convergence proxy: with partial sums `S_k` at increasing cutoffs, the Cauchy
//! increments `S_{k+1} - S_k` must shrink by a factor below
//! [`CONVERGENCE_RATIO`] at every step.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dual_catalog::{DualCatalog, GroupKind, Weight};
use crate::error::{Error, Result};
use crate::operator_assembly::assemble;
use crate::registry::{Named, Registry};
use crate::symbol_space::diagonal_symbol;

use super::{schatten_norm, spectrum_with, CriterionVerdict};

pub const CONVERGENCE_RATIO: f64 = 0.75;

/// Rungs whose diagonal operator has at most this dense dimension also get an
/// exact Schatten norm from the assembled operator.
pub const EXACT_CROSSCHECK_DIM: usize = 300;

/// Summand of a series over integer spins.
pub trait SeriesKind: Named + Send + Sync {
    fn term(&self, l: f64, p: f64, alpha: f64) -> f64;
}

/// `(2l+1)² (1+l)^{-pα}`, the block-sum criterion series.
pub struct CriterionSeries;

/// `(2l+1) (1+l)^{-pα}`, which is `‖A‖_{S_p}^p` of the truncated diagonal operator.
pub struct ExactSeries;

impl Named for CriterionSeries {
    fn name(&self) -> &'static str {
        "criterion"
    }
}

impl SeriesKind for CriterionSeries {
    fn term(&self, l: f64, p: f64, alpha: f64) -> f64 {
        (2.0 * l + 1.0).powi(2) * (1.0 + l).powf(-p * alpha)
    }
}

impl Named for ExactSeries {
    fn name(&self) -> &'static str {
        "exact"
    }
}

impl SeriesKind for ExactSeries {
    fn term(&self, l: f64, p: f64, alpha: f64) -> f64 {
        (2.0 * l + 1.0) * (1.0 + l).powf(-p * alpha)
    }
}

pub fn series_registry() -> Registry<dyn SeriesKind> {
    let mut reg: Registry<dyn SeriesKind> = Registry::new("series");
    reg.register(Box::new(CriterionSeries))
        .register(Box::new(ExactSeries));
    reg
}

/// Casimir cutoffs `L(L+1)` for `L = l_start · 2^k`, `k < rungs`.
pub fn factor_two_ladder(l_start: u32, rungs: u32) -> Vec<f64> {
    (0..rungs)
        .map(|k| {
            let l = f64::from(l_start) * 2f64.powi(k as i32);
            l * (l + 1.0)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRung {
    pub cutoff: f64,
    pub max_spin: f64,
    pub partial_sum: f64,
    /// `‖A‖_{S_p}` of the assembled diagonal operator at this cutoff, when small
    /// enough to materialize.
    pub exact_schatten_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesScan {
    pub series: String,
    pub p: f64,
    pub alpha: f64,
    pub rungs: Vec<SeriesRung>,
    /// Successive Cauchy increment ratios.
    pub increment_ratios: Vec<f64>,
    pub verdict: CriterionVerdict,
}

fn exact_norm(catalog: &DualCatalog, p: f64, alpha: f64) -> Result<f64> {
    let cat = Arc::new(catalog.clone());
    let sym = diagonal_symbol(cat, |l| {
        Complex64::new((1.0 + l.spin().unwrap_or(0.0)).powf(-alpha), 0.0)
    });
    let op = assemble(sym, Weight::unit(), Weight::unit())?;
    schatten_norm(&spectrum_with(&op, &[])?, p)
}

/// Partial sums of `kind` over the integer-spin SU(2) dual at each cutoff.
pub fn schatten_series_scan(
    group: &GroupKind,
    alpha: f64,
    p: f64,
    cutoffs: &[f64],
    kind: &dyn SeriesKind,
) -> Result<SeriesScan> {
    if *group != GroupKind::su2_integer() {
        return Err(Error::InvalidGroup(format!(
            "the series scan runs over the integer-spin SU(2) dual, got {group:?}"
        )));
    }
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Schatten exponent must be positive, got {p}"
        )));
    }
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha must be finite, got {alpha}")));
    }
    if cutoffs.len() < 3 || cutoffs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "the cutoff ladder needs at least three strictly increasing rungs".into(),
        ));
    }
    let top = DualCatalog::enumerate(GroupKind::su2_integer(), cutoffs[cutoffs.len() - 1])?;

    let mut rungs = Vec::with_capacity(cutoffs.len());
    let mut labels = top.labels().iter().peekable();
    let mut sum = 0.0;
    let mut max_spin = 0.0;
    for &cutoff in cutoffs {
        while let Some(l) = labels.next_if(|l| l.casimir() <= cutoff) {
            let spin = l.spin().expect("SU(2) label");
            sum += kind.term(spin, p, alpha);
            max_spin = spin;
        }
        let catalog = top.truncate(cutoff)?;
        let exact_schatten_norm = if catalog.dense_dim() <= EXACT_CROSSCHECK_DIM {
            Some(exact_norm(&catalog, p, alpha)?)
        } else {
            None
        };
        rungs.push(SeriesRung {
            cutoff,
            max_spin,
            partial_sum: sum,
            exact_schatten_norm,
        });
    }

    let increments: Vec<f64> = rungs
        .windows(2)
        .map(|w| w[1].partial_sum - w[0].partial_sum)
        .collect();
    let increment_ratios: Vec<f64> = increments
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else if w[1] > 0.0 { f64::INFINITY } else { 0.0 })
        .collect();
    let worst = increment_ratios.iter().copied().fold(0.0, f64::max);
    let satisfied = worst < CONVERGENCE_RATIO;
    let verdict = CriterionVerdict {
        name: format!("schatten-series:{}", kind.name()),
        bound_value: CONVERGENCE_RATIO,
        measured_value: worst,
        satisfied,
        detail: format!(
            "p = {p}, alpha = {alpha}, p·alpha = {}, {} (max increment ratio {worst:.4})",
            p * alpha,
            if satisfied { "converges" } else { "diverges" }
        ),
    };
    Ok(SeriesScan {
        series: kind.name().to_string(),
        p,
        alpha,
        rungs,
        increment_ratios,
        verdict,
    })
}

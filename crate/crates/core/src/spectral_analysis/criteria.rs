use crate::dual_catalog::{DualCatalog, Weight};
use crate::error::{Error, Result};
use crate::linalg;
use crate::operator_assembly::{assemble, BlockOperator};
use crate::registry::{Named, Registry};
use crate::symbol_space::{class_norm, weighted_block_at, Symbol, SymbolClassParams};

use super::{spectrum, CriterionVerdict};

/// Slack on both sides of the norm inequalities, relative to `max(1, bound)`.
const NORM_SLACK: f64 = 1e-9;

/// Relative growth of the Carleson sum between cutoffs `Λ/2` and `Λ` below
/// which the sum is treated as finite.
pub const CARLESON_GROWTH_LIMIT: f64 = 0.05;

/// A compactness indicator fires when its tail value is at most this fraction
/// of its head value.
pub const COMPACTNESS_DECAY_RATIO: f64 = 0.5;

/// Singular values at or below this fraction of the norm count as zero.
const NULL_RATIO: f64 = 1e-12;

fn slack(bound: f64) -> f64 {
    NORM_SLACK * bound.abs().max(1.0)
}

/// `C` with `C² = (Σ_ρ d_ρ (1+λ_ρ)^{-n}) (Σ_π (1+λ_π)^{-m})` over the truncation.
pub fn schur_constant(domain: &DualCatalog, codomain: &DualCatalog, m: f64, n: f64) -> f64 {
    let rho_sum: f64 = domain
        .labels()
        .iter()
        .map(|l| l.dim() as f64 * (1.0 + l.casimir()).powf(-n))
        .sum();
    let pi_sum: f64 = codomain
        .labels()
        .iter()
        .map(|l| (1.0 + l.casimir()).powf(-m))
        .sum();
    (rho_sum * pi_sum).sqrt()
}

/// Schur estimate `‖A‖ <= C·M` with the operator norm supplied by the caller.
pub fn schur_bound_with_norm(
    symbol: &Symbol,
    params: &SymbolClassParams,
    operator_norm: f64,
) -> Result<CriterionVerdict> {
    let c = schur_constant(symbol.domain(), symbol.codomain(), params.m, params.n);
    let m = class_norm(symbol, params)?;
    let bound = c * m;
    Ok(CriterionVerdict {
        name: "schur-bound".into(),
        bound_value: bound,
        measured_value: operator_norm,
        satisfied: operator_norm <= bound + slack(bound),
        detail: format!("C = {c:.6e}, M = {m:.6e}, m = {}, n = {}", params.m, params.n),
    })
}

/// Schur estimate `‖A‖ <= C·M`, assembling the operator with the parameter weights.
pub fn schur_bound(symbol: &Symbol, params: &SymbolClassParams) -> Result<CriterionVerdict> {
    let op = assemble(symbol.clone(), params.mu.clone(), params.nu.clone())?;
    let norm = spectrum(&op)?.operator_norm;
    schur_bound_with_norm(symbol, params, norm)
}

fn max_block_norm(symbol: &Symbol, mu: &Weight, nu: &Weight) -> Result<f64> {
    let mut best = 0.0f64;
    for &key in symbol.blocks().keys() {
        best = best.max(linalg::operator_norm(&weighted_block_at(symbol, mu, nu, key)?)?);
    }
    Ok(best)
}

/// Two-sided estimate `max_blocks ‖T(π,ρ)‖ <= ‖A‖ <= C·M`.
pub fn norm_equivalence_check(
    symbol: &Symbol,
    params: &SymbolClassParams,
) -> Result<CriterionVerdict> {
    let op = assemble(symbol.clone(), params.mu.clone(), params.nu.clone())?;
    let measured = spectrum(&op)?.operator_norm;
    norm_equivalence_with_norm(symbol, params, measured)
}

fn norm_equivalence_with_norm(
    symbol: &Symbol,
    params: &SymbolClassParams,
    measured: f64,
) -> Result<CriterionVerdict> {
    let lower = max_block_norm(symbol, &params.mu, &params.nu)?;
    let upper = schur_constant(symbol.domain(), symbol.codomain(), params.m, params.n)
        * class_norm(symbol, params)?;
    let satisfied = lower - slack(lower) <= measured && measured <= upper + slack(upper);
    Ok(CriterionVerdict {
        name: "norm-equivalence".into(),
        bound_value: upper,
        measured_value: measured,
        satisfied,
        detail: format!("lower = {lower:.6e}, measured = {measured:.6e}, upper = {upper:.6e}"),
    })
}

fn carleson_sum(nu: &Weight, catalog: &DualCatalog, t: f64) -> Result<f64> {
    if catalog.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for l in catalog.labels() {
        let d = l.dim() as f64;
        let sigma = d * nu.eval(l)?.powi(2);
        sum += d * sigma / (1.0 + l.casimir()).powf(t);
    }
    let inv_dim = catalog
        .labels()
        .iter()
        .map(|l| 1.0 / l.dim() as f64)
        .fold(0.0, f64::max);
    Ok(inv_dim * sum)
}

/// Carleson condition for `σ({ρ}) = d_ρ ν(ρ)²`, decided by the relative growth
/// of the truncated supremum between cutoffs `Λ/2` and `Λ`.
pub fn carleson_test(nu: &Weight, catalog: &DualCatalog, t: f64) -> Result<CriterionVerdict> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Carleson exponent t must be positive, got {t}"
        )));
    }
    let full = carleson_sum(nu, catalog, t)?;
    let half = carleson_sum(nu, &catalog.truncate(catalog.cutoff() / 2.0)?, t)?;
    let growth = if half > 0.0 {
        (full - half) / half
    } else if full > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(CriterionVerdict {
        name: "carleson".into(),
        bound_value: CARLESON_GROWTH_LIMIT,
        measured_value: growth,
        satisfied: growth < CARLESON_GROWTH_LIMIT,
        detail: format!(
            "t = {t}, sum(Λ/2) = {half:.6e}, sum(Λ) = {full:.6e}, Λ = {}",
            catalog.cutoff()
        ),
    })
}

struct Indicator {
    fired: bool,
    ratio: f64,
    note: String,
}

fn non_increasing(values: &[f64]) -> bool {
    values
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-300)
}

/// Column profile `g(ρ) = (1+λ_ρ)^{n/2} max_π ‖T(π,ρ)‖` grouped by Casimir level,
/// restricted to levels above `Λ/2`.
fn decay_indicator(op: &BlockOperator, n: f64) -> Result<Indicator> {
    let domain = op.domain();
    let mut column = vec![0.0f64; domain.len()];
    for (&(_, rho), block) in op.blocks() {
        column[rho] = column[rho].max(linalg::operator_norm(block)?);
    }
    let mut levels: Vec<(f64, f64)> = Vec::new();
    for (rho, label) in domain.labels().iter().enumerate() {
        let lam = label.casimir();
        let g = (1.0 + lam).powf(n / 2.0) * column[rho];
        match levels.last_mut() {
            Some((l, v)) if *l == lam => *v = v.max(g),
            _ => levels.push((lam, g)),
        }
    }
    let head = levels.iter().map(|&(_, v)| v).fold(0.0, f64::max);
    let outer: Vec<f64> = levels
        .iter()
        .filter(|&&(lam, _)| lam > domain.cutoff() / 2.0)
        .map(|&(_, v)| v)
        .collect();
    if outer.len() < 2 || head == 0.0 {
        return Ok(Indicator {
            fired: false,
            ratio: f64::NAN,
            note: format!("only {} outer Casimir levels", outer.len()),
        });
    }
    let ratio = outer[outer.len() - 1] / head;
    let fired = non_increasing(&outer) && ratio <= COMPACTNESS_DECAY_RATIO;
    Ok(Indicator {
        fired,
        ratio,
        note: format!("tail/head = {ratio:.4e} over {} outer levels", outer.len()),
    })
}

/// Smallest retained singular value at cutoffs `Λ/4, Λ/2, Λ`.
fn spectral_indicator(op: &BlockOperator) -> Result<Indicator> {
    let (dom, cod) = (op.domain().cutoff(), op.codomain().cutoff());
    let mut trail = Vec::new();
    for frac in [0.25, 0.5, 1.0] {
        let sub = op.truncate(dom * frac, cod * frac)?;
        let report = spectrum(&sub)?;
        if let Some(&s) = report.nonzero_singular_values(NULL_RATIO).last() {
            trail.push(s);
        }
    }
    if trail.len() < 2 {
        return Ok(Indicator {
            fired: false,
            ratio: f64::NAN,
            note: format!("{} cutoffs with nonzero spectrum", trail.len()),
        });
    }
    let ratio = trail[trail.len() - 1] / trail[0];
    Ok(Indicator {
        fired: non_increasing(&trail) && ratio <= COMPACTNESS_DECAY_RATIO,
        ratio,
        note: format!(
            "smallest singular values [{}]",
            trail
                .iter()
                .map(|s| format!("{s:.4e}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    })
}

/// Decay and spectral compactness indicators. `n` is the decay exponent applied
/// to the domain Casimir eigenvalues.
pub fn compactness_report(op: &BlockOperator, n: f64) -> Result<CriterionVerdict> {
    if op.is_zero() {
        return Ok(CriterionVerdict {
            name: "compactness".into(),
            bound_value: COMPACTNESS_DECAY_RATIO,
            measured_value: 0.0,
            satisfied: true,
            detail: "zero operator: vacuously compact".into(),
        });
    }
    let decay = decay_indicator(op, n)?;
    let spectral = spectral_indicator(op)?;
    let fired = |b: bool| if b { "fired" } else { "not fired" };
    Ok(CriterionVerdict {
        name: "compactness".into(),
        bound_value: COMPACTNESS_DECAY_RATIO,
        measured_value: spectral.ratio,
        satisfied: decay.fired && spectral.fired,
        detail: format!(
            "decay indicator {} ({}); spectral indicator {} ({})",
            fired(decay.fired),
            decay.note,
            fired(spectral.fired),
            spectral.note
        ),
    })
}

/// Inputs shared by every registered criterion. The symbol-class weights are
/// the operator's own weights.
pub struct CriterionContext<'a> {
    pub op: &'a BlockOperator,
    pub m: f64,
    pub n: f64,
    pub carleson_t: f64,
    pub operator_norm: f64,
}

impl CriterionContext<'_> {
    fn params(&self) -> Result<SymbolClassParams> {
        SymbolClassParams::new(self.m, self.n, self.op.mu().clone(), self.op.nu().clone())
    }
}

pub trait Criterion: Named + Send + Sync {
    fn evaluate(&self, ctx: &CriterionContext<'_>) -> Result<CriterionVerdict>;
}

struct SchurBound;
struct NormEquivalence;
struct Compactness;
struct Carleson;

impl Named for SchurBound {
    fn name(&self) -> &'static str {
        "schur-bound"
    }
}

impl Criterion for SchurBound {
    fn evaluate(&self, ctx: &CriterionContext<'_>) -> Result<CriterionVerdict> {
        schur_bound_with_norm(ctx.op.symbol(), &ctx.params()?, ctx.operator_norm)
    }
}

impl Named for NormEquivalence {
    fn name(&self) -> &'static str {
        "norm-equivalence"
    }
}

impl Criterion for NormEquivalence {
    fn evaluate(&self, ctx: &CriterionContext<'_>) -> Result<CriterionVerdict> {
        norm_equivalence_with_norm(ctx.op.symbol(), &ctx.params()?, ctx.operator_norm)
    }
}

impl Named for Compactness {
    fn name(&self) -> &'static str {
        "compactness"
    }
}

impl Criterion for Compactness {
    fn evaluate(&self, ctx: &CriterionContext<'_>) -> Result<CriterionVerdict> {
        compactness_report(ctx.op, ctx.n)
    }
}

impl Named for Carleson {
    fn name(&self) -> &'static str {
        "carleson"
    }
}

impl Criterion for Carleson {
    fn evaluate(&self, ctx: &CriterionContext<'_>) -> Result<CriterionVerdict> {
        carleson_test(ctx.op.nu(), ctx.op.domain(), ctx.carleson_t)
    }
}

/// All built-in criteria, keyed by name.
pub fn criterion_registry() -> Registry<dyn Criterion> {
    let mut reg: Registry<dyn Criterion> = Registry::new("criterion");
    reg.register(Box::new(SchurBound))
        .register(Box::new(NormEquivalence))
        .register(Box::new(Compactness))
        .register(Box::new(Carleson));
    reg
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use num_complex::Complex64;

    use super::*;
    use crate::dual_catalog::{GroupKind, LabelSubset};
    use crate::linalg::CMatrix;
    use crate::symbol_space::{diagonal_symbol, random_partial_matching, random_symbol};

    fn su2(cutoff: f64) -> Arc<DualCatalog> {
        Arc::new(DualCatalog::enumerate(GroupKind::su2(), cutoff).unwrap())
    }

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn schur_bound_holds_on_random_symbols() {
        for seed in 0..20 {
            let sym = random_symbol(su2(6.0), su2(12.0), 0.4, seed).unwrap();
            let params = SymbolClassParams::new(
                2.0,
                2.0,
                Weight::power_law(0.3).unwrap(),
                Weight::power_law(-0.4).unwrap(),
            )
            .unwrap();
            let v = schur_bound(&sym, &params).unwrap();
            assert!(v.satisfied, "{v:?}");
        }
    }

    #[test]
    fn schur_zero_symbol() {
        let cat = su2(6.0);
        let v = schur_bound(
            &Symbol::empty(Arc::clone(&cat), cat),
            &SymbolClassParams::unweighted(2.0, 2.0).unwrap(),
        )
        .unwrap();
        assert_eq!((v.bound_value, v.measured_value, v.satisfied), (0.0, 0.0, true));
    }

    #[test]
    fn schur_single_block_singleton_catalogs() {
        let cat = su2(0.0);
        let mut sym = Symbol::empty(Arc::clone(&cat), cat);
        sym.insert((0, 0), CMatrix::from_element(1, 1, Complex64::new(-2.5, 1.0)))
            .unwrap();
        let v = schur_bound(&sym, &SymbolClassParams::unweighted(0.0, 0.0).unwrap()).unwrap();
        assert_eq!(schur_constant(sym.domain(), sym.codomain(), 0.0, 0.0), 1.0);
        assert!(v.bound_value >= Complex64::new(-2.5, 1.0).norm() - 1e-15);
        assert!(v.satisfied);
    }

    #[test]
    fn norm_equivalence_block_diagonal_measures_lower() {
        for seed in 0..5 {
            let sym = random_partial_matching(su2(6.0), su2(6.0), 0.9, seed).unwrap();
            let params = SymbolClassParams::unweighted(1.0, 1.0).unwrap();
            let v = norm_equivalence_check(&sym, &params).unwrap();
            assert!(v.satisfied);
            let lower = max_block_norm(&sym, &params.mu, &params.nu).unwrap();
            assert!((v.measured_value - lower).abs() < 1e-12 * lower.max(1.0));
        }
    }

    #[test]
    fn norm_equivalence_zero_and_dense() {
        let cat = su2(2.0);
        let params = SymbolClassParams::unweighted(2.0, 2.0).unwrap();
        let v = norm_equivalence_check(&Symbol::empty(Arc::clone(&cat), cat), &params).unwrap();
        assert_eq!((v.bound_value, v.measured_value), (0.0, 0.0));
        assert!(v.satisfied);
        let dense = random_symbol(su2(6.0), su2(6.0), 1.0, 77).unwrap();
        assert!(norm_equivalence_check(&dense, &params).unwrap().satisfied);
    }

    /// Partial sums of `Σ d² ν² / (1+λ)^t` by direct iteration over spins.
    fn su2_carleson_oracle(s: f64, t: f64, cutoff: f64) -> f64 {
        let mut k = 0i64;
        let mut sum = 0.0;
        loop {
            let l = k as f64 / 2.0;
            let lam = l * (l + 1.0);
            if lam > cutoff {
                return sum;
            }
            let d = 2.0 * l + 1.0;
            sum += d * d * (1.0 + l).powf(-2.0 * s) / (1.0 + lam).powf(t);
            k += 1;
        }
    }

    #[test]
    fn carleson_torus_bounded() {
        let cat = DualCatalog::enumerate(GroupKind::torus(1), 100.0).unwrap();
        let v = carleson_test(&Weight::power_law(-1.0).unwrap(), &cat, 3.0).unwrap();
        assert!(v.satisfied, "{v:?}");
    }

    #[test]
    fn carleson_su2_matches_oracle() {
        for (s, t, cutoff) in [(1.0, 1.0, 100.0), (1.0, 1.0, 10_000.0), (0.0, 1.0, 10_000.0)] {
            let cat = DualCatalog::enumerate(GroupKind::su2(), cutoff).unwrap();
            let v = carleson_test(&Weight::power_law(-s).unwrap(), &cat, t).unwrap();
            let full = su2_carleson_oracle(s, t, cutoff);
            let half = su2_carleson_oracle(s, t, cutoff / 2.0);
            let growth = (full - half) / half;
            assert!((v.measured_value - growth).abs() < 1e-12);
            assert_eq!(v.satisfied, growth < CARLESON_GROWTH_LIMIT);
        }
        // Unweighted: terms tend to a constant, partial sums grow without bound.
        let cat = DualCatalog::enumerate(GroupKind::su2(), 10_000.0).unwrap();
        assert!(!carleson_test(&Weight::unit(), &cat, 1.0).unwrap().satisfied);
        // s = 1, t = 1: terms decay like 4/l², so a large cutoff settles.
        let v = carleson_test(&Weight::power_law(-1.0).unwrap(), &cat, 1.0).unwrap();
        assert!(v.satisfied);
    }

    #[test]
    fn carleson_rejects_nonpositive_t() {
        let cat = DualCatalog::enumerate(GroupKind::su2(), 2.0).unwrap();
        assert!(carleson_test(&Weight::unit(), &cat, 0.0).is_err());
    }

    fn diagonal_family(s: f64, cutoff: f64) -> BlockOperator {
        let sym = diagonal_symbol(su2(cutoff), |_| one());
        assemble(sym, Weight::unit(), Weight::power_law(-s).unwrap()).unwrap()
    }

    #[test]
    fn compactness_decaying_diagonal_fires_both() {
        let v = compactness_report(&diagonal_family(2.0, 30.0), 0.0).unwrap();
        assert!(v.satisfied, "{}", v.detail);
        assert!(v.detail.starts_with("decay indicator fired"));
    }

    #[test]
    fn compactness_identity_fails_spectral() {
        let v = compactness_report(&diagonal_family(0.0, 30.0), 0.0).unwrap();
        assert!(!v.satisfied);
        assert!(v.detail.contains("spectral indicator not fired"));
        assert_eq!(v.measured_value, 1.0);
    }

    #[test]
    fn compactness_zero_symbol() {
        let cat = su2(6.0);
        let op = assemble(Symbol::empty(Arc::clone(&cat), cat), Weight::unit(), Weight::unit())
            .unwrap();
        assert!(compactness_report(&op, 1.0).unwrap().satisfied);
    }

    #[test]
    fn compactness_on_circle_hankel_subset() {
        let cat = Arc::new(
            DualCatalog::enumerate_subset(GroupKind::torus(1), 64.0, LabelSubset::NonNegative)
                .unwrap(),
        );
        let sym = diagonal_symbol(cat, |l| one() / (1.0 + l.casimir()));
        let op = assemble(sym, Weight::unit(), Weight::unit()).unwrap();
        assert!(compactness_report(&op, 0.0).unwrap().satisfied);
    }

    #[test]
    fn registry_has_all_criteria() {
        let reg = criterion_registry();
        assert_eq!(
            reg.names(),
            vec!["carleson", "compactness", "norm-equivalence", "schur-bound"]
        );
        let op = diagonal_family(1.0, 6.0);
        let ctx = CriterionContext {
            op: &op,
            m: 0.0,
            n: 0.0,
            carleson_t: 2.0,
            operator_norm: spectrum(&op).unwrap().operator_norm,
        };
        for c in reg.iter() {
            let v = c.evaluate(&ctx).unwrap();
            assert_eq!(v.name, c.name());
        }
    }
}

use std::sync::Arc;

use muhankel::dual_catalog::{DualCatalog, GroupKind, Weight};
use muhankel::fredholm::{numerical_index, DEFAULT_RANK_TOLERANCE};
use muhankel::inverse_recovery::{forward, recover_bandlimited, tikhonov_recover, Unweighted};
use muhankel::linalg::{self, CVector};
use muhankel::operator_assembly::{adjoint, apply, assemble, to_dense};
use muhankel::spectral_analysis::{schatten_norm, schur_bound, spectrum_with};
use muhankel::symbol_space::{
    class_norm, difference, hs_sum_norm, max_entry_error, random_partial_matching, random_symbol,
    Symbol, SymbolClassParams,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn su2(cutoff: f64) -> Arc<DualCatalog> {
    Arc::new(DualCatalog::enumerate(GroupKind::su2(), cutoff).unwrap())
}

fn random_vector(n: usize, seed: u64) -> CVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CVector::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im)
    })
}

fn group() -> impl Strategy<Value = GroupKind> {
    prop_oneof![
        Just(GroupKind::su2()),
        Just(GroupKind::su2_integer()),
        Just(GroupKind::torus(1)),
        Just(GroupKind::torus(2)),
        Just(GroupKind::product(vec![GroupKind::su2(), GroupKind::torus(1)])),
    ]
}

fn cutoff() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(0.75), Just(2.0), Just(3.75), Just(6.0)]
}

fn exponent() -> impl Strategy<Value = f64> {
    -1.5f64..1.5
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-3.0f64..3.0, -3.0f64..3.0)
        .prop_filter("nonzero", |(a, b)| a.hypot(*b) > 1e-3)
        .prop_map(|(a, b)| Complex64::new(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enumeration_is_monotone(g in group(), a in 0.0f64..12.0, b in 0.0f64..12.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let small = DualCatalog::enumerate(g.clone(), lo).unwrap();
        let large = DualCatalog::enumerate(g, hi).unwrap();
        prop_assert!(small.len() <= large.len());
        for l in small.labels() {
            prop_assert!(large.position(l.index()).is_some());
            prop_assert!(l.casimir() <= lo);
        }
        for w in large.labels().windows(2) {
            prop_assert!(w[0].casimir() <= w[1].casimir());
        }
    }

    #[test]
    fn class_norm_is_homogeneous(
        seed in any::<u64>(), c in complex(), m in 0.0f64..3.0, n in 0.0f64..3.0,
        s in exponent(), t in exponent(),
    ) {
        let sym = random_symbol(su2(3.75), su2(2.0), 0.6, seed).unwrap();
        let params = SymbolClassParams::new(m, n, Weight::power_law(s).unwrap(), Weight::power_law(t).unwrap()).unwrap();
        let base = class_norm(&sym, &params).unwrap();
        let scaled = class_norm(&sym.scaled(c), &params).unwrap();
        prop_assert!((scaled - c.norm() * base).abs() <= 1e-10 * (1.0 + scaled));
    }

    #[test]
    fn weight_scaling_scales_the_operator(
        seed in any::<u64>(), factor in 0.1f64..10.0, s in exponent(),
    ) {
        let sym = random_symbol(su2(3.75), su2(3.75), 0.5, seed).unwrap();
        let mu = Weight::power_law(s).unwrap();
        let base = to_dense(&assemble(sym.clone(), mu.clone(), Weight::unit()).unwrap()).unwrap();
        let scaled_mu = mu.tabulate(sym.codomain(), factor).unwrap();
        let scaled = to_dense(&assemble(sym, scaled_mu, Weight::unit()).unwrap()).unwrap();
        let expected = base.map(|z| z * factor);
        prop_assert!(linalg::max_abs_diff(&scaled, &expected) <= 1e-12 * (1.0 + linalg::hs_norm(&expected)));
    }

    #[test]
    fn apply_is_linear(seed in any::<u64>(), a in complex(), b in complex()) {
        let sym = random_symbol(su2(3.75), su2(2.0), 0.5, seed).unwrap();
        let op = assemble(sym, Weight::power_law(0.5).unwrap(), Weight::unit()).unwrap();
        let n = op.domain().dense_dim();
        let f = random_vector(n, seed ^ 1);
        let g = random_vector(n, seed ^ 2);
        let lhs = apply(&op, &(&f * a + &g * b)).unwrap();
        let rhs = apply(&op, &f).unwrap() * a + apply(&op, &g).unwrap() * b;
        prop_assert!((lhs - &rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
    }

    #[test]
    fn symbol_to_operator_is_linear(seed in any::<u64>(), c in complex()) {
        let x = random_symbol(su2(2.0), su2(2.0), 0.5, seed).unwrap();
        let y = random_symbol(su2(2.0), su2(2.0), 0.5, seed.wrapping_add(1)).unwrap();
        let sum = difference(&x.scaled(c), &y.scaled(-Complex64::new(1.0, 0.0))).unwrap();
        let dense = |s: Symbol| to_dense(&assemble(s, Weight::power_law(1.0).unwrap(), Weight::unit()).unwrap()).unwrap();
        let expected = dense(x) * c + dense(y);
        prop_assert!(linalg::max_abs_diff(&dense(sum), &expected) <= 1e-12 * (1.0 + linalg::hs_norm(&expected)));
    }

    #[test]
    fn adjoint_pairing(seed in any::<u64>(), s in exponent(), t in exponent()) {
        let sym = random_symbol(su2(6.0), su2(2.0), 0.5, seed).unwrap();
        let op = assemble(sym, Weight::power_law(s).unwrap(), Weight::power_law(t).unwrap()).unwrap();
        let adj = adjoint(&op);
        prop_assert_eq!(to_dense(&adj).unwrap(), to_dense(&op).unwrap().adjoint());
        let f = random_vector(op.domain().dense_dim(), seed ^ 3);
        let g = random_vector(op.codomain().dense_dim(), seed ^ 4);
        let lhs = apply(&op, &f).unwrap().dotc(&g);
        let rhs = f.dotc(&apply(&adj, &g).unwrap());
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn schatten_norm_is_nonincreasing_in_p(seed in any::<u64>(), p in 0.5f64..4.0, dp in 0.0f64..4.0) {
        let sym = random_symbol(su2(3.75), su2(3.75), 0.5, seed).unwrap();
        let op = assemble(sym, Weight::unit(), Weight::unit()).unwrap();
        let report = spectrum_with(&op, &[]).unwrap();
        let a = schatten_norm(&report, p).unwrap();
        let b = schatten_norm(&report, p + dp).unwrap();
        prop_assert!(b <= a * (1.0 + 1e-12));
        prop_assert!(report.operator_norm <= b * (1.0 + 1e-12));
    }

    #[test]
    fn singular_values_scale_with_the_symbol(seed in any::<u64>(), c in complex()) {
        let sym = random_symbol(su2(3.75), su2(2.0), 0.6, seed).unwrap();
        let sv = |s: Symbol| spectrum_with(&assemble(s, Weight::unit(), Weight::unit()).unwrap(), &[]).unwrap().singular_values;
        let base = sv(sym.clone());
        let scaled = sv(sym.scaled(c));
        for (x, y) in base.iter().zip(&scaled) {
            prop_assert!((y - c.norm() * x).abs() <= 1e-10 * (1.0 + y));
        }
    }

    #[test]
    fn weyl_continuity(seed in any::<u64>(), eps in 1e-6f64..1.0) {
        let a = random_symbol(su2(3.75), su2(3.75), 0.6, seed).unwrap();
        let e = random_symbol(su2(3.75), su2(3.75), 0.6, seed.wrapping_add(7)).unwrap();
        let e_norm = hs_sum_norm(&e, &Weight::unit(), &Weight::unit()).unwrap();
        prop_assume!(e_norm > 0.0);
        let e = e.scaled(Complex64::new(eps / e_norm, 0.0));
        let b = difference(&a, &e).unwrap();
        let sa = spectrum_with(&assemble(a, Weight::unit(), Weight::unit()).unwrap(), &[]).unwrap().singular_values;
        let sb = spectrum_with(&assemble(b, Weight::unit(), Weight::unit()).unwrap(), &[]).unwrap().singular_values;
        let gap = sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(gap <= eps * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn tikhonov_error_grows_with_alpha(seed in any::<u64>(), a1 in 0.0f64..2.0, da in 0.0f64..2.0) {
        let sym = random_partial_matching(su2(3.75), su2(3.75), 1.0, seed).unwrap();
        let mu = Weight::power_law(0.5).unwrap();
        let data = forward(&assemble(sym.clone(), mu.clone(), Weight::unit()).unwrap()).unwrap();
        prop_assume!(data.check_attributed().is_ok());
        let err = |alpha: f64| {
            let rec = tikhonov_recover(&data, &mu, &Weight::unit(), alpha, &Unweighted).unwrap();
            hs_sum_norm(&difference(&rec, &sym).unwrap(), &Weight::unit(), &Weight::unit()).unwrap()
        };
        prop_assert!(err(a1) <= err(a1 + da) * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn recovery_commutes_with_weight_rescaling(seed in any::<u64>(), c in 0.1f64..10.0) {
        let sym = random_partial_matching(su2(3.75), su2(3.75), 1.0, seed).unwrap();
        let mu = Weight::power_law(1.0).unwrap().tabulate(sym.codomain(), c).unwrap();
        let data = forward(&assemble(sym.clone(), mu.clone(), Weight::unit()).unwrap()).unwrap();
        prop_assume!(data.check_attributed().is_ok());
        let rec = recover_bandlimited(&data, &mu, &Weight::unit()).unwrap();
        prop_assert!(max_entry_error(&rec, &sym).unwrap() < 1e-9);
    }

    #[test]
    fn numerical_index_ignores_nonzero_scalars(seed in any::<u64>(), c in complex()) {
        let sym = random_symbol(su2(3.75), su2(2.0), 0.3, seed).unwrap();
        let idx = |s: Symbol| numerical_index(&assemble(s, Weight::unit(), Weight::unit()).unwrap(), DEFAULT_RANK_TOLERANCE).unwrap();
        let a = idx(sym.clone());
        let b = idx(sym.scaled(c));
        prop_assert_eq!(a.rank, b.rank);
        prop_assert_eq!(a.index, b.index);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn schur_bound_is_never_violated(
        seed in any::<u64>(), density in 0.05f64..1.0, m in 0.0f64..3.0, n in 0.0f64..3.0,
        s in exponent(), t in exponent(), dom in cutoff(), cod in cutoff(),
    ) {
        let sym = random_symbol(su2(dom), su2(cod), density, seed).unwrap();
        let params = SymbolClassParams::new(m, n, Weight::power_law(s).unwrap(), Weight::power_law(t).unwrap()).unwrap();
        let v = schur_bound(&sym, &params).unwrap();
        prop_assert!(v.satisfied, "{:?}", v);
    }
}

use std::sync::{Arc, OnceLock};

use appell_core::measures::{ComponentMeasure, ProductMeasure};
use appell_core::multi_index::{factorial, multi_indices, MultiIndex};
use appell_core::operators::{BlackboxOptions, OperatorKernel};
use appell_core::transforms::{c_transform_germ, inverse_s, s_transform, s_transform_series, GermFunction, Locality};
use appell_core::{AppellSystem, ChaosFunctional, ChaosVector, HilbertScale, PowerSeries, SymTensor, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn complex() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| C64::new(a, b))
}

fn cvec(d: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec(complex(), d)
}

fn tensor(d: usize, n: usize) -> impl Strategy<Value = SymTensor> {
    let len = multi_indices(d, n).len();
    prop::collection::vec(complex(), len).prop_map(move |v| SymTensor::from_coeffs(d, n, v).unwrap())
}

fn series(d: usize, order: usize) -> impl Strategy<Value = PowerSeries> {
    let len: usize = (0..=order).map(|n| multi_indices(d, n).len()).sum();
    prop::collection::vec(complex(), len).prop_map(move |v| PowerSeries::from_coeffs(d, order, v).unwrap())
}

fn catalog() -> Vec<ComponentMeasure> {
    vec![
        ComponentMeasure::standard_gaussian(),
        ComponentMeasure::Gaussian { mean: 0.5, variance: 2.0 },
        ComponentMeasure::Poisson { rate: 1.0 },
        ComponentMeasure::Gamma { shape: 2.0, scale: 1.0 },
        ComponentMeasure::Uniform { a: -1.0, b: 2.0 },
        ComponentMeasure::TwoPoint { x1: -1.0, x2: 2.0, p1: 0.3 },
    ]
}

fn system(d: usize, order: usize, which: usize) -> Arc<AppellSystem> {
    let comps: Vec<ComponentMeasure> = (0..d).map(|i| catalog()[(which + i) % 4].clone()).collect();
    AppellSystem::build(ProductMeasure::new(comps).unwrap(), order, HilbertScale::default_for(d)).unwrap()
}

fn vector(sys: &Arc<AppellSystem>, vals: &[C64]) -> ChaosVector {
    let d = sys.dim();
    let mut it = vals.iter().cycle();
    let coeffs = (0..=sys.order())
        .map(|n| SymTensor::from_fn(d, n, |_| *it.next().unwrap() / factorial(n)))
        .collect();
    ChaosVector::new(sys.clone(), coeffs).unwrap()
}

fn functional(sys: &Arc<AppellSystem>, vals: &[C64]) -> ChaosFunctional {
    let d = sys.dim();
    let mut it = vals.iter().cycle();
    let coeffs = (0..=sys.order())
        .map(|n| SymTensor::from_fn(d, n, |_| *it.next().unwrap()))
        .collect();
    ChaosFunctional::new(sys.clone(), coeffs).unwrap()
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pairing_is_bilinear_and_symmetric(
        (_d, _n, a, b, e, s) in (1usize..=3, 0usize..=6).prop_flat_map(|(d, n)| {
            (Just(d), Just(n), tensor(d, n), tensor(d, n), tensor(d, n), complex())
        })
    ) {
        let ab = a.pairing(&b).unwrap();
        prop_assert!(close(ab, b.pairing(&a).unwrap(), 1e-13));
        let lhs = a.scale(s).add(&e).unwrap().pairing(&b).unwrap();
        let rhs = s * ab + e.pairing(&b).unwrap();
        prop_assert!(close(lhs, rhs, 1e-12));
    }

    #[test]
    fn rank_one_norm_is_multiplicative(
        (d, n, xi) in (1usize..=3, 0usize..=6).prop_flat_map(|(d, n)| (Just(d), Just(n), cvec(d))),
        p in -2i32..=2,
    ) {
        let scale = HilbertScale::default_for(d);
        let t = SymTensor::rank_one(&xi, n);
        let want = scale.norm(&xi, p).powi(n as i32);
        prop_assert!((t.scale_norm(&scale, p) - want).abs() <= 1e-12 * want.max(1e-300));
    }

    #[test]
    fn monomial_class_pairing_matches_dense(
        (n, a, b) in (0usize..=4).prop_flat_map(|n| (Just(n), tensor(2, n), tensor(2, n)))
    ) {
        let mut dense = c(0.0);
        for bits in 0..1usize << n {
            let ones = bits.count_ones();
            let alpha = MultiIndex::new(vec![n as u32 - ones, ones]);
            dense += a.get(&alpha) * b.get(&alpha);
        }
        prop_assert!(close(dense, a.pairing(&b).unwrap(), 1e-12));
    }

    #[test]
    fn scale_norm_is_monotone(
        (d, n, t) in (1usize..=3, 0usize..=5).prop_flat_map(|(d, n)| (Just(d), Just(n), tensor(d, n))),
        p in -2i32..2,
    ) {
        let _ = n;
        let scale = HilbertScale::default_for(d);
        prop_assert!(t.scale_norm(&scale, p) <= t.scale_norm(&scale, p + 1) * (1.0 + 1e-15));
    }

    #[test]
    fn series_product_is_associative_and_commutative(
        (a, b, e) in (1usize..=2, 0usize..=8).prop_flat_map(|(d, n)| (series(d, n), series(d, n), series(d, n)))
    ) {
        let ab = a.mul(&b).unwrap();
        for (x, y) in ab.coeffs().iter().zip(b.mul(&a).unwrap().coeffs()) {
            prop_assert!((x - y).norm() <= 1e-14 * x.norm().max(1.0));
        }
        let left = ab.mul(&e).unwrap();
        let right = a.mul(&b.mul(&e).unwrap()).unwrap();
        for (x, y) in left.coeffs().iter().zip(right.coeffs()) {
            prop_assert!((x - y).norm() <= 1e-13 * x.norm().max(1.0));
        }
    }

    #[test]
    fn reciprocal_inverts(
        (a, shift) in (1usize..=2, 0usize..=8).prop_flat_map(|(d, n)| (series(d, n), complex()))
    ) {
        // keep the constant term away from zero
        let mut a = a;
        let zero = MultiIndex::zeros(a.dim());
        a.set_coeff(&zero, c(2.0) + shift).unwrap();
        let prod = a.mul(&a.reciprocal().unwrap()).unwrap();
        let one = PowerSeries::one(a.dim(), a.order());
        let scale: f64 = a.coeffs().iter().map(|z| z.norm()).sum();
        for (x, y) in prod.coeffs().iter().zip(one.coeffs()) {
            prop_assert!((x - y).norm() <= 1e-12 * scale.powi(a.order() as i32 + 1).max(1.0));
        }
    }

    #[test]
    fn eval_is_multiplicative_for_small_arguments(
        (a, b, xi) in (1usize..=2).prop_flat_map(|d| (series(d, 8), series(d, 8), cvec(d)))
    ) {
        let xi: Vec<C64> = xi.iter().map(|z| z * 0.05).collect();
        let lhs = a.mul(&b).unwrap().eval(&xi).unwrap();
        let rhs = a.eval(&xi).unwrap() * b.eval(&xi).unwrap();
        // discarded product terms have degree ≥ 9 with |ξ| ≤ 0.0708
        let r: f64 = xi.iter().map(|z| z.norm()).sum();
        let bound = 200.0 * (9..=16).map(|k| r.powi(k)).sum::<f64>() * 4.0;
        prop_assert!((lhs - rhs).norm() <= bound + 1e-14);
    }

    #[test]
    fn quadrature_reproduces_moments(which in 0usize..6, order in 1usize..=8) {
        let comp = catalog()[which].clone();
        let m = ProductMeasure::iid(comp, 1).unwrap();
        for k in 0..=2 * order {
            let alpha = MultiIndex::new(vec![k as u32]);
            let got = m.integrate(order + 1, |x| c(x[0].powi(k as i32))).unwrap().re;
            let want = m.moment(&alpha).unwrap();
            let size = m.integrate(order + 1, |x| c(x[0].abs().powi(k as i32))).unwrap().re;
            prop_assert!((got - want).abs() <= 1e-10 * size.max(1.0), "k={} {} vs {}", k, got, want);
        }
    }

    #[test]
    fn unitriangular_kernels(which in 0usize..6, d in 1usize..=2) {
        let comps: Vec<ComponentMeasure> = (0..d).map(|i| catalog()[(which + i) % 6].clone()).collect();
        let m = ProductMeasure::new(comps).unwrap();
        let order = if m.min_support().is_some() { 1 } else { 6 };
        let sys = AppellSystem::build(m, order, HilbertScale::default_for(d)).unwrap();
        for n in 0..=order {
            for g in multi_indices(d, n) {
                prop_assert_eq!(sys.kernel_coeff(&g, &g), c(1.0));
            }
        }
    }

    #[test]
    fn generating_function_identity(which in 0usize..4, x in -3.0f64..3.0, t in -1.0f64..1.0) {
        let sys = system(1, 10, which);
        let radius = sys.measure().components()[0].laplace_radius().min(1.0);
        let xi = [c(t * radius / 4.0)];
        let xs = [c(x)];
        let closed = sys.e_mu_closed(&xi, &xs).unwrap();
        let series = sys.e_mu_series(&xi, &xs).unwrap();
        prop_assert!((closed - series).norm() <= 1e-6 * closed.norm().max(1.0), "{} vs {}", closed, series);
    }

    #[test]
    fn test_norm_monotone_dual_norm_antitone(
        vals in prop::collection::vec(complex(), 16),
        which in 0usize..4,
        p in -1i32..2,
        q in -1i32..2,
    ) {
        let sys = system(2, 4, which);
        let v = vector(&sys, &vals);
        let f = functional(&sys, &vals);
        prop_assert!(v.test_norm(p, q) <= v.test_norm(p + 1, q) * (1.0 + 1e-14));
        prop_assert!(v.test_norm(p, q) <= v.test_norm(p, q + 1) * (1.0 + 1e-14));
        prop_assert!(f.dual_norm(p + 1, q) <= f.dual_norm(p, q) * (1.0 + 1e-14));
        prop_assert!(f.dual_norm(p, q + 1) <= f.dual_norm(p, q) * (1.0 + 1e-14));
    }

    #[test]
    fn duality_estimate(
        a in prop::collection::vec(complex(), 12),
        b in prop::collection::vec(complex(), 12),
        which in 0usize..4,
        p in -1i32..2,
        q in -1i32..2,
    ) {
        let sys = system(2, 4, which);
        let v = vector(&sys, &a);
        let f = functional(&sys, &b);
        let pair = sys.q_pair(&f, &v).unwrap().norm();
        prop_assert!(pair <= f.dual_norm(p, q) * v.test_norm(p, q) * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn e_vector_norm_identity(eta in cvec(2), p in -1i32..=1, q in 0i32..=2) {
        static SYS: OnceLock<Arc<AppellSystem>> = OnceLock::new();
        let sys = SYS.get_or_init(|| {
            AppellSystem::build(ProductMeasure::standard_gaussian(2), 60, HilbertScale::default_for(2)).unwrap()
        });
        let scale = sys.scale().clone();
        let r0 = 2f64.powi(q) * scale.norm(&eta, p).powi(2);
        prop_assume!(r0 > 0.0);
        // rescale into 2^q|η|_p² ≤ 0.5 so the truncation tail is below 1e-18
        let eta: Vec<C64> = eta.iter().map(|z| z * (0.5 / r0).sqrt().min(1.0)).collect();
        let r = 2f64.powi(q) * scale.norm(&eta, p).powi(2);
        let e = sys.e_vector(&eta).unwrap();
        let got = e.test_norm(p, q).powi(2);
        let want = 1.0 / (1.0 - r) - r.powi(61) / (1.0 - r);
        prop_assert!((got - want).abs() <= 1e-10 * want);
    }

    #[test]
    fn s_inverse_round_trips(vals in prop::collection::vec(complex(), 15), which in 0usize..4) {
        let sys = system(2, 4, which);
        let f = functional(&sys, &vals);
        let back = inverse_s(&s_transform_series(&f), sys.clone()).unwrap();
        for (x, y) in back.coeffs().iter().zip(f.coeffs()) {
            for (a, b) in x.coeffs().iter().zip(y.coeffs()) {
                prop_assert!((a - b).norm() <= 1e-15 * b.norm().max(1.0));
            }
        }
        let g = GermFunction::new(PowerSeries::from_fn(2, 4, |a| vals[a.degree() % 15] / a.multinomial()), Locality::default());
        let there = s_transform_series(&inverse_s(&g, sys).unwrap());
        for (x, y) in there.series.coeffs().iter().zip(g.series.coeffs()) {
            prop_assert!((x - y).norm() <= 1e-15 * y.norm().max(1.0));
        }
    }

    #[test]
    fn c_germ_is_p_content(vals in prop::collection::vec(complex(), 15), which in 0usize..4) {
        let sys = system(2, 4, which);
        let v = vector(&sys, &vals);
        let germ = c_transform_germ(&v);
        for t in v.coeffs() {
            for (alpha, x) in t.iter() {
                prop_assert_eq!(germ.coeff(&alpha), x * alpha.multinomial());
            }
        }
    }

    #[test]
    fn s_of_rho_is_exponential(xi in cvec(2), eta in cvec(2), which in 0usize..4) {
        let sys = system(2, 8, which);
        let r = sys.rho(&xi).unwrap();
        let s = xi[0] * eta[0] + xi[1] * eta[1];
        let got = s_transform(&r, &eta, None).unwrap();
        let tail: f64 = (9..60).map(|n| s.norm().powi(n) / factorial(n as usize)).sum();
        prop_assert!((got - (-s).exp()).norm() <= tail + 1e-14);
    }

    #[test]
    fn locality_boundary(theta in -1.0f64..1.0, p in -1i32..=1, q in 0i32..=3) {
        let sys = AppellSystem::standard_gaussian(1, 3);
        let f = ChaosFunctional::constant(sys.clone(), c(1.0));
        let u = Locality::new(p, q, Default::default());
        let inside = sys.scale().norm(&[c(theta)], p).powi(2) < u.bound_value();
        prop_assert_eq!(s_transform(&f, &[c(theta)], Some(&u)).is_ok(), inside);
    }

    #[test]
    fn symbol_consistency(vals in prop::collection::vec(complex(), 40), xi in cvec(2), eta in cvec(2), which in 0usize..4) {
        let sys_in = system(2, 4, which);
        let sys_out = system(2, 4, which + 1);
        let mut it = vals.iter().cycle();
        let k = OperatorKernel::from_fn(sys_in, sys_out, |m, n, _, _| *it.next().unwrap() / (factorial(m) * factorial(n))).unwrap();
        let a = k.cs_symbol(&xi, &eta).unwrap();
        let b = k.symbol_by_pairing(&xi, &eta).unwrap();
        prop_assert!(close(a, b, 1e-11));
        let germ = k.symbol_series();
        let back = OperatorKernel::reconstruct_exact(&germ, k.sys_in().clone(), k.sys_out().clone()).unwrap();
        prop_assert!(back.max_abs_difference(&k).unwrap() <= 1e-17);
    }

    #[test]
    fn d_operators_commute(a in cvec(2), b in cvec(2), vals in prop::collection::vec(complex(), 15), which in 0usize..4) {
        let sys = system(2, 4, which);
        let da = OperatorKernel::d_operator(sys.clone(), &SymTensor::from_coeffs(2, 1, a).unwrap()).unwrap();
        let db = OperatorKernel::d_operator(sys.clone(), &SymTensor::from_coeffs(2, 1, b).unwrap()).unwrap();
        let v = vector(&sys, &vals);
        let ab = da.apply(&db.apply(&v).unwrap()).unwrap();
        let ba = db.apply(&da.apply(&v).unwrap()).unwrap();
        for (x, y) in ab.coeffs().iter().zip(ba.coeffs()) {
            for (s, t) in x.coeffs().iter().zip(y.coeffs()) {
                prop_assert!((s - t).norm() <= 1e-12 * s.norm().max(1.0));
            }
        }
    }

    #[test]
    fn norm_chain_inequality(vals in prop::collection::vec(complex(), 40), phi in prop::collection::vec(complex(), 15),
                             p in 0i32..=2, q in 0i32..=2, p0 in -1i32..=1, q0 in -1i32..=1, which in 0usize..4) {
        let sys_in = system(2, 4, which);
        let sys_out = system(2, 4, which + 2);
        let mut it = vals.iter().cycle();
        let k = OperatorKernel::from_fn(sys_in.clone(), sys_out, |_, _, _, _| *it.next().unwrap()).unwrap();
        let chain = k.norm_chain(&vector(&sys_in, &phi), p, q, p0, q0).unwrap();
        prop_assert!(chain.holds(), "{:?}", chain);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn blackbox_round_trip(vals in prop::collection::vec(complex(), 30), d in 1usize..=2, which in 0usize..4) {
        let sys = system(d, 4, which);
        let mut it = vals.iter().cycle();
        let k = OperatorKernel::from_fn(sys.clone(), sys.clone(), |m, n, _, _| *it.next().unwrap() / (factorial(m) * factorial(n))).unwrap();
        let germ = k.symbol_series();
        let (b, _) = OperatorKernel::reconstruct_blackbox(|x, y| germ.eval(x, y).unwrap(), sys.clone(), sys, &BlackboxOptions::new(4)).unwrap();
        let err = appell_core::operators::max_relative_error(&b, &k, 1e-300).unwrap();
        prop_assert!(err <= 1e-6, "relative error {}", err);
    }

    #[test]
    fn embed_is_injective(which in 0usize..4) {
        let sys = system(2, 3, which);
        let basis: Vec<(usize, MultiIndex)> = (0..=3).flat_map(|n| multi_indices(2, n).into_iter().map(move |a| (n, a))).collect();
        let vecs: Vec<ChaosVector> = basis
            .iter()
            .map(|(_, a)| ChaosVector::single(sys.clone(), SymTensor::basis(2, a)).unwrap())
            .collect();
        let embedded: Vec<ChaosFunctional> = vecs.iter().map(|v| v.embed_l2().unwrap()).collect();
        let gram = DMatrix::from_fn(vecs.len(), vecs.len(), |i, j| sys.q_pair(&embedded[i], &vecs[j]).unwrap());
        let svd = gram.svd(false, false);
        let smin = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        prop_assert!(smin > 1e-10 * smax, "condition {}", smax / smin);
    }
}

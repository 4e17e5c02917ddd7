//! Acceptance criteria 1-11. Each criterion prints one PASS/FAIL line;
//! run with `cargo test -p appell-core --test acceptance -- --nocapture`.

use std::sync::Arc;

use appell_core::measures::{ComponentMeasure, ProductMeasure};
use appell_core::multi_index::{factorial, multi_indices_up_to, MultiIndex};
use appell_core::operators::{max_relative_error, BlackboxOptions, OperatorKernel};
use appell_core::transforms::{
    c_transform_integral, c_transform_series, gaussian_coincidence, sample_grid, transform_deviation,
};
use appell_core::{AppellSystem, ChaosFunctional, ChaosVector, HilbertScale, PowerSeries, SymTensor, C64};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn rc(rng: &mut StdRng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn system(components: Vec<ComponentMeasure>, order: usize) -> Arc<AppellSystem> {
    let d = components.len();
    AppellSystem::build(ProductMeasure::new(components).unwrap(), order, HilbertScale::default_for(d)).unwrap()
}

fn gaussian() -> ComponentMeasure {
    ComponentMeasure::standard_gaussian()
}

fn poisson() -> ComponentMeasure {
    ComponentMeasure::Poisson { rate: 1.0 }
}

fn gamma() -> ComponentMeasure {
    ComponentMeasure::Gamma { shape: 2.0, scale: 1.0 }
}

fn random_kernel(rng: &mut StdRng, sys_in: &Arc<AppellSystem>, sys_out: &Arc<AppellSystem>) -> OperatorKernel {
    OperatorKernel::from_fn(sys_in.clone(), sys_out.clone(), |m, n, _, _| {
        rc(rng) / (factorial(m) * factorial(n))
    })
    .unwrap()
}

fn random_vector(rng: &mut StdRng, sys: &Arc<AppellSystem>) -> ChaosVector {
    let coeffs = (0..=sys.order())
        .map(|n| SymTensor::from_fn(sys.dim(), n, |_| rc(rng) / factorial(n)))
        .collect();
    ChaosVector::new(sys.clone(), coeffs).unwrap()
}

/// Gram matrix of Q-basis against P-basis by the moment route, normalized
/// by the expected diagonal; returns the largest deviation from identity.
fn biorthogonality_deviation(sys: &Arc<AppellSystem>) -> f64 {
    let d = sys.dim();
    let basis: Vec<MultiIndex> = multi_indices_up_to(d, sys.order());
    let expected = |a: &MultiIndex| factorial(a.degree()) * a.multinomial();
    let mut worst = 0.0f64;
    for beta in &basis {
        let q = ChaosFunctional::single(sys.clone(), SymTensor::basis(d, beta)).unwrap();
        for alpha in &basis {
            let p = ChaosVector::single(sys.clone(), SymTensor::basis(d, alpha)).unwrap();
            let got = sys.q_pair_by_moments(&q, &p).unwrap();
            let want = if alpha == beta { expected(alpha) } else { 0.0 };
            let norm = (expected(alpha) * expected(beta)).sqrt();
            worst = worst.max((got - c(want)).norm() / norm);
        }
    }
    worst
}

fn criterion_1() -> Outcome {
    let systems = [
        ("gaussian", system(vec![gaussian()], 8)),
        ("poisson(1)", system(vec![poisson()], 8)),
        ("gamma(2,1)", system(vec![gamma()], 8)),
        ("poisson x gaussian", system(vec![poisson(), gaussian()], 5)),
    ];
    let mut detail = Vec::new();
    let mut pass = true;
    for (name, sys) in &systems {
        let dev = biorthogonality_deviation(sys);
        pass &= dev <= 1e-10;
        detail.push(format!("{name} {dev:.2e}"));
    }

    // quadrature path: Q densities against explicit P polynomials
    let sys = system(vec![gaussian()], 8);
    let mut worst = 0.0f64;
    for n in 0..=8 {
        for m in 0..=8 {
            let p = sys.p_entry_polynomial(&MultiIndex::new(vec![m as u32]));
            let got = sys
                .measure()
                .integrate(12, |x| c(sys.q_density_1d(n, x[0]).unwrap()) * p.eval(&[c(x[0])]).unwrap())
                .unwrap();
            let want = if m == n { factorial(n) } else { 0.0 };
            worst = worst.max((got - c(want)).norm() / (factorial(n) * factorial(m)).sqrt());
        }
    }
    pass &= worst <= 1e-8;
    detail.push(format!("gaussian quadrature {worst:.2e}"));
    Outcome {
        pass,
        detail: detail.join(", "),
    }
}

fn criterion_2() -> Outcome {
    let sys = system(vec![gaussian()], 10);
    let mut h: Vec<Vec<f64>> = vec![vec![1.0], vec![0.0, 1.0]];
    for n in 1..10 {
        let mut next = vec![0.0; n + 2];
        for (k, v) in h[n].iter().enumerate() {
            next[k + 1] += v;
        }
        for (k, v) in h[n - 1].iter().enumerate() {
            next[k] -= n as f64 * v;
        }
        h.push(next);
    }
    let mut worst = 0.0f64;
    for (n, hn) in h.iter().enumerate() {
        let p = sys.p_entry_polynomial(&MultiIndex::new(vec![n as u32]));
        for (k, want) in hn.iter().enumerate() {
            let got = p.coeffs()[k];
            worst = worst.max((got - c(*want)).norm() / want.abs().max(1.0));
        }
    }
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("max deviation {worst:.2e} over n <= 10"),
    }
}

fn criterion_3() -> Outcome {
    // The finite family has norm² Σ_{n≤N} r^n; the closed form 1/(1−r) is
    // compared after removing the exact geometric tail r^{N+1}/(1−r).
    const N: usize = 60;
    let systems: Vec<Arc<AppellSystem>> =
        vec![system(vec![gaussian()], N), system(vec![gaussian(), poisson()], N)];
    let mut rng = StdRng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut max_r = 0.0f64;
    for trial in 0..100 {
        let sys = &systems[trial % 2];
        let d = sys.dim();
        let p = rng.gen_range(-1..=2);
        let q = rng.gen_range(-1..=3);
        let eta: Vec<C64> = (0..d).map(|_| rc(&mut rng)).collect();
        let raw = 2f64.powi(q) * sys.scale().norm(&eta, p).powi(2);
        let target = rng.gen_range(0.0..0.9);
        let eta: Vec<C64> = eta.iter().map(|z| z * (target / raw).sqrt()).collect();
        let r = 2f64.powi(q) * sys.scale().norm(&eta, p).powi(2);
        max_r = max_r.max(r);
        let e = sys.e_vector(&eta).unwrap();
        let got = e.test_norm(p, q).powi(2);
        let closed = 1.0 / (1.0 - r);
        let tail = r.powi(N as i32 + 1) / (1.0 - r);
        worst = worst.max((got + tail - closed).abs() / closed);
    }
    Outcome {
        pass: worst <= 1e-10 && max_r <= 0.9,
        detail: format!("max relative deviation {worst:.2e}, N = {N}, max 2^q|eta|_p^2 = {max_r:.3}"),
    }
}

fn criterion_4() -> Outcome {
    const N: usize = 10;
    let systems = [
        system(vec![gaussian()], N),
        system(vec![poisson()], N),
        system(vec![gamma()], N),
        system(vec![poisson(), gaussian()], N),
    ];
    let mut rng = StdRng::seed_from_u64(4);
    let mut violations = 0;
    let mut worst_ratio = 0.0f64;
    for sys in &systems {
        for _ in 0..25 {
            let d = sys.dim();
            let xi: Vec<C64> = (0..d).map(|_| rc(&mut rng)).collect();
            let eta: Vec<C64> = (0..d).map(|_| rc(&mut rng)).collect();
            let s: C64 = xi.iter().zip(&eta).map(|(a, b)| a * b).sum();
            let target = rng.gen_range(0.05..1.0);
            let eta: Vec<C64> = eta.iter().map(|z| z * (target / s.norm())).collect();
            let s: C64 = xi.iter().zip(&eta).map(|(a, b)| a * b).sum();
            let got = sys.q_pair(&sys.rho(&xi).unwrap(), &sys.e_vector(&eta).unwrap()).unwrap();
            let bound = 2.0 * s.norm().powi(N as i32 + 1) / factorial(N + 1);
            let err = (got - (-s).exp()).norm();
            // a few ulps of floating-point slack on top of the series remainder
            if err > bound + 4.0 * f64::EPSILON {
                violations += 1;
            }
            worst_ratio = worst_ratio.max(err / (bound + 4.0 * f64::EPSILON));
        }
    }
    Outcome {
        pass: violations == 0,
        detail: format!("{violations} violations in 100 samples, max error/bound {worst_ratio:.3}"),
    }
}

fn criterion_5() -> Outcome {
    let sys = system(vec![gaussian(), poisson()], 10);
    let mut violations = 0;
    let mut count = 0;
    let mut worst = 0.0f64;
    for i in 0..10 {
        for j in 0..10 {
            let radius = 0.3 * (i + 1) as f64;
            let angle = 2.0 * std::f64::consts::PI * j as f64 / 10.0;
            let xi = [C64::from_polar(radius, angle), C64::from_polar(0.5 * radius, -angle)];
            let minus: Vec<C64> = xi.iter().map(|z| -z).collect();
            let rho = sys.rho(&minus).unwrap();
            for (p0, q0) in [(0, 0), (1, 1), (-1, 2)] {
                count += 1;
                let lhs = rho.dual_norm(p0, q0);
                let rhs = (sys.scale().norm(&xi, -p0) / 2f64.powf(q0 as f64 / 2.0)).exp();
                worst = worst.max(lhs / rhs);
                if lhs > rhs {
                    violations += 1;
                }
            }
        }
    }
    Outcome {
        pass: violations == 0,
        detail: format!("{violations} violations in {count} evaluations, max ratio {worst:.3}"),
    }
}

fn criterion_6() -> Outcome {
    let mut rng = StdRng::seed_from_u64(6);
    let systems = [
        system(vec![gaussian()], 6),
        system(vec![gamma()], 6),
        system(vec![gaussian(), gaussian()], 6),
        system(vec![gamma(), gaussian()], 6),
    ];
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let sys = &systems[trial % systems.len()];
        let d = sys.dim();
        let degree = rng.gen_range(0..=6);
        let poly = PowerSeries::from_fn(d, 6, |a| if a.degree() <= degree { rc(&mut rng) } else { c(0.0) });
        let phi = ChaosVector::to_appell(&poly, sys.clone()).unwrap();
        for _ in 0..3 {
            let xi: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let xc: Vec<C64> = xi.iter().map(|&x| c(x)).collect();
            let a = c_transform_series(&phi, &xc).unwrap();
            let b = c_transform_integral(&phi, &xi).unwrap();
            worst = worst.max((a - b).norm() / a.norm().max(1.0));
        }
    }
    Outcome {
        pass: worst <= 1e-8,
        detail: format!("max deviation {worst:.2e} over 50 polynomials"),
    }
}

fn criterion_7() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for d in 1..=2 {
        let sys = system(vec![gaussian(); d], 6);
        let grid = sample_grid(d, 5);
        for _ in 0..5 {
            let degree = rng.gen_range(0..=6);
            let poly = PowerSeries::from_fn(d, 6, |a| if a.degree() <= degree { rc(&mut rng) } else { c(0.0) });
            let phi = ChaosVector::to_appell(&poly, sys.clone()).unwrap();
            worst = worst.max(gaussian_coincidence(&phi, &grid).unwrap());
        }
    }
    let sys = system(vec![poisson()], 6);
    let x = PowerSeries::from_fn(1, 6, |a| c(if a.degree() == 1 { 1.0 } else { 0.0 }));
    let phi = ChaosVector::to_appell(&x, sys).unwrap();
    let control = transform_deviation(&phi, &sample_grid(1, 11)).unwrap();
    Outcome {
        pass: worst <= 1e-8 && control > 1e-2,
        detail: format!("gaussian max deviation {worst:.2e}, poisson control {control:.3e}"),
    }
}

fn criterion_8() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let catalog = [gaussian(), poisson(), gamma()];
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let d = 1 + trial % 2;
        let order = 2 + trial % 4;
        let pick = |k: usize| (0..d).map(|i| catalog[(k + i) % 3].clone()).collect::<Vec<_>>();
        let sys_in = system(pick(trial), order);
        let sys_out = system(pick(trial + 1), order);
        let k = random_kernel(&mut rng, &sys_in, &sys_out);
        let xi: Vec<C64> = (0..d).map(|_| rc(&mut rng)).collect();
        let eta: Vec<C64> = (0..d).map(|_| rc(&mut rng)).collect();
        let a = k.cs_symbol(&xi, &eta).unwrap();
        let b = k.symbol_by_pairing(&xi, &eta).unwrap();
        worst = worst.max((a - b).norm() / a.norm().max(1.0));
    }

    let sys_nu = system(vec![poisson()], 10);
    let sys_mu = system(vec![gaussian()], 10);
    let b = OperatorKernel::measure_change(sys_nu, sys_mu).unwrap();
    let mut exp_violations = 0;
    for i in 0..=20 {
        let s = -1.0 + 0.1 * i as f64;
        for (xi, eta) in [(c(s), c(1.0)), (C64::new(0.0, s), c(1.0)), (c(1.0), C64::new(0.6 * s, 0.8 * s))] {
            let prod = xi * eta;
            let got = b.cs_symbol(&[xi], &[eta]).unwrap();
            let bound = 2.0 * prod.norm().powi(11) / factorial(11) + 4.0 * f64::EPSILON;
            if (got - prod.exp()).norm() > bound {
                exp_violations += 1;
            }
        }
    }
    Outcome {
        pass: worst <= 1e-11 && exp_violations == 0,
        detail: format!(
            "symbol vs pairing {worst:.2e} over 20 kernels, {exp_violations} exp-remainder violations"
        ),
    }
}

fn criterion_9() -> Outcome {
    let mut rng = StdRng::seed_from_u64(9);
    let mut exact_ok = true;
    let mut worst = 0.0f64;
    let mut evaluations = 0;
    for trial in 0..6 {
        let d = 1 + trial % 2;
        let comps = if trial % 3 == 0 { vec![gaussian(); d] } else { vec![poisson(); d] };
        let sys_in = system(comps, 4);
        let sys_out = system(vec![gaussian(); d], 4);
        let k = random_kernel(&mut rng, &sys_in, &sys_out);
        let germ = k.symbol_series();
        let back = OperatorKernel::reconstruct_exact(&germ, sys_in.clone(), sys_out.clone()).unwrap();
        exact_ok &= back == k;
        let (bb, report) = OperatorKernel::reconstruct_blackbox(
            |x, y| germ.eval(x, y).unwrap(),
            sys_in,
            sys_out,
            &BlackboxOptions::new(4),
        )
        .unwrap();
        evaluations += report.evaluations;
        worst = worst.max(max_relative_error(&bb, &k, f64::MIN_POSITIVE).unwrap());
    }
    Outcome {
        pass: exact_ok && worst <= 1e-6,
        detail: format!(
            "exact round trip identical: {exact_ok}, black-box max relative error {worst:.2e} ({evaluations} symbol evaluations)"
        ),
    }
}

fn criterion_10() -> Outcome {
    let mut rng = StdRng::seed_from_u64(10);
    let systems = [system(vec![gaussian()], 8), system(vec![poisson(), gamma()], 8)];
    let mut worst = 0.0f64;
    let mut zero_branch = 0usize;
    for sys in &systems {
        let d = sys.dim();
        let points: Vec<Vec<C64>> = (0..3)
            .map(|_| (0..d).map(|_| c(rng.gen_range(-2.0..2.0))).collect())
            .collect();
        for k in 0..=3 {
            let phi_k = SymTensor::from_fn(d, k, |_| rc(&mut rng));
            let dk = OperatorKernel::d_operator(sys.clone(), &phi_k).unwrap();
            for alpha in multi_indices_up_to(d, 8) {
                let m = alpha.degree();
                let e = SymTensor::basis(d, &alpha);
                let out = dk.apply(&ChaosVector::single(sys.clone(), e.clone()).unwrap()).unwrap();
                if m < k {
                    zero_branch += 1;
                    let size: f64 = out.coeffs().iter().map(|t| t.coeffs().iter().map(|z| z.norm()).sum::<f64>()).sum();
                    worst = worst.max(size);
                    continue;
                }
                for x in &points {
                    let got = out.eval(x).unwrap();
                    let p = sys.p_tensor(m - k, x).unwrap();
                    let want = p.symmetrize_product(&phi_k).unwrap().pairing(&e).unwrap() * factorial(m)
                        / factorial(m - k);
                    worst = worst.max((got - want).norm() / want.norm().max(1.0));
                }
            }
        }
    }
    Outcome {
        pass: worst <= 1e-11,
        detail: format!("max deviation {worst:.2e}, {zero_branch} zero-branch cases"),
    }
}

fn criterion_11() -> Outcome {
    let mut rng = StdRng::seed_from_u64(11);
    let mut violations = 0;
    let mut tightest = f64::INFINITY;
    for trial in 0..20 {
        let d = 1 + trial % 2;
        let sys_in = system(vec![if trial % 3 == 0 { poisson() } else { gamma() }; d], 4);
        let sys_out = system(vec![gaussian(); d], 4);
        let k = OperatorKernel::from_fn(sys_in.clone(), sys_out, |_, _, _, _| rc(&mut rng)).unwrap();
        let phi = random_vector(&mut rng, &sys_in);
        let (p, q) = (rng.gen_range(0..=2), rng.gen_range(0..=2));
        let (p0, q0) = (rng.gen_range(-1..=1), rng.gen_range(-1..=1));
        let chain = k.norm_chain(&phi, p, q, p0, q0).unwrap();
        if chain.lhs > chain.rhs {
            violations += 1;
        }
        tightest = tightest.min(chain.rhs / chain.lhs);
    }
    Outcome {
        pass: violations == 0,
        detail: format!("{violations} violations in 20 pairs, min rhs/lhs {tightest:.3}"),
    }
}

#[test]
fn acceptance_suite() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("biorthogonality", criterion_1),
        ("hermite degeneration", criterion_2),
        ("closed-form e_nu norm", criterion_3),
        ("rho pairing identity", criterion_4),
        ("rho norm estimate", criterion_5),
        ("C-transform double definition", criterion_6),
        ("gaussian coincidence", criterion_7),
        ("CS-symbol identity", criterion_8),
        ("reconstruction", criterion_9),
        ("D-operator law", criterion_10),
        ("norm-chain inequality", criterion_11),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {name}: {tag} ({})", i + 1, outcome.detail);
        if !outcome.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

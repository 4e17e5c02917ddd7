use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use appell_core::io::{format_f64, from_json, to_canonical_json, AppellTables, KernelFile};
use appell_core::multi_index::{factorial, multi_indices_up_to, MultiIndex};
use appell_core::operators::{max_block_relative_error, BlackboxOptions, ExtractionReport, OperatorKernel};
use appell_core::transforms::{c_transform_integral, c_transform_series, gaussian_coincidence, sample_grid};
use appell_core::{AppellSystem, ChaosFunctional, ChaosVector, PowerSeries, SymTensor, C64};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::config::{ExperimentConfig, OperatorSource};

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
    let mut echo = cfg.clone();
    echo.out = None;
    write(dir, "config.json", &to_canonical_json(&echo)?)?;
    Ok(())
}

/// `gen`: P-kernel tables and reciprocal Laplace series.
pub fn cmd_gen(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let sys_in = cfg.system_in()?;
    write_config(out, cfg)?;
    write(out, "appell_in.json", &to_canonical_json(&AppellTables::of(&sys_in))?)?;
    if cfg.measures_out.is_some() {
        let sys_out = cfg.system_out()?;
        write(out, "appell_out.json", &to_canonical_json(&AppellTables::of(&sys_out))?)?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub check: String,
    pub max_deviation: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub status: String,
}

impl Check {
    fn measured(check: impl Into<String>, deviation: f64, tolerance: f64) -> Self {
        let pass = deviation <= tolerance;
        Check {
            check: check.into(),
            max_deviation: Some(deviation),
            tolerance,
            pass,
            status: if pass { "ok".into() } else { "failed".into() },
        }
    }

    fn skipped(check: impl Into<String>, tolerance: f64, reason: &str) -> Self {
        Check {
            check: check.into(),
            max_deviation: None,
            tolerance,
            pass: true,
            status: format!("skipped: {reason}"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub pass: bool,
    pub checks: Vec<Check>,
}

fn rc(rng: &mut StdRng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn random_kernel(rng: &mut StdRng, sys_in: &Arc<AppellSystem>, sys_out: &Arc<AppellSystem>, max: usize) -> Result<OperatorKernel> {
    Ok(OperatorKernel::from_fn(sys_in.clone(), sys_out.clone(), |m, n, _, _| {
        let v = rc(rng) / (factorial(m) * factorial(n));
        if m <= max && n <= max {
            v
        } else {
            c(0.0)
        }
    })?)
}

fn random_vector(rng: &mut StdRng, sys: &Arc<AppellSystem>) -> Result<ChaosVector> {
    let coeffs = (0..=sys.order())
        .map(|n| SymTensor::from_fn(sys.dim(), n, |_| rc(rng) / factorial(n)))
        .collect();
    Ok(ChaosVector::new(sys.clone(), coeffs)?)
}

fn random_polynomial(rng: &mut StdRng, sys: &Arc<AppellSystem>) -> Result<ChaosVector> {
    let poly = PowerSeries::from_fn(sys.dim(), sys.order(), |_| rc(rng));
    Ok(ChaosVector::to_appell(&poly, sys.clone())?)
}

fn points(given: &[Vec<f64>], d: usize, fallback: &[f64]) -> Vec<Vec<C64>> {
    if given.is_empty() {
        fallback.iter().map(|&s| vec![c(s); d]).collect()
    } else {
        given.iter().map(|p| p.iter().map(|&x| c(x)).collect()).collect()
    }
}

fn check_biorthogonality(sys: &Arc<AppellSystem>, tol: f64) -> Result<Check> {
    let d = sys.dim();
    let basis = multi_indices_up_to(d, sys.order());
    let expected = |a: &MultiIndex| factorial(a.degree()) * a.multinomial();
    let mut worst = 0.0f64;
    for beta in &basis {
        let q = ChaosFunctional::single(sys.clone(), SymTensor::basis(d, beta))?;
        for alpha in &basis {
            let p = ChaosVector::single(sys.clone(), SymTensor::basis(d, alpha))?;
            let got = sys.q_pair_by_moments(&q, &p)?;
            let want = if alpha == beta { expected(alpha) } else { 0.0 };
            worst = worst.max((got - c(want)).norm() / (expected(alpha) * expected(beta)).sqrt());
        }
    }
    Ok(Check::measured("biorthogonality", worst, tol))
}

fn check_quadrature(sys: &Arc<AppellSystem>, tol: f64) -> Result<Check> {
    const NAME: &str = "biorthogonality_quadrature";
    if sys.dim() != 1 || !sys.measure().is_gaussian() {
        return Ok(Check::skipped(NAME, tol, "requires d = 1 and a Gaussian measure"));
    }
    let order = sys.order();
    let mut worst = 0.0f64;
    for n in 0..=order {
        for m in 0..=order {
            let p = sys.p_entry_polynomial(&MultiIndex::new(vec![m as u32]));
            let got = sys.measure().integrate(order + 2, |x| {
                c(sys.q_density_1d(n, x[0]).unwrap_or(f64::NAN)) * p.eval(&[c(x[0])]).unwrap_or(c(f64::NAN))
            })?;
            let want = if m == n { factorial(n) } else { 0.0 };
            worst = worst.max((got - c(want)).norm() / (factorial(n) * factorial(m)).sqrt());
        }
    }
    Ok(Check::measured(NAME, if worst.is_nan() { f64::INFINITY } else { worst }, tol))
}

fn check_hermite(sys: &Arc<AppellSystem>, tol: f64) -> Result<Check> {
    const NAME: &str = "hermite";
    let standard = sys.dim() == 1
        && sys.measure().components()[0] == appell_core::ComponentMeasure::standard_gaussian();
    if !standard {
        return Ok(Check::skipped(NAME, tol, "requires the standard Gaussian in d = 1"));
    }
    let mut h: Vec<Vec<f64>> = vec![vec![1.0], vec![0.0, 1.0]];
    for n in 1..sys.order().max(1) {
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
    for (n, hn) in h.iter().enumerate().take(sys.order() + 1) {
        let p = sys.p_entry_polynomial(&MultiIndex::new(vec![n as u32]));
        for (k, want) in hn.iter().enumerate() {
            worst = worst.max((p.coeffs()[k] - c(*want)).norm() / want.abs().max(1.0));
        }
    }
    Ok(Check::measured(NAME, worst, tol))
}

fn check_e_norms(cfg: &ExperimentConfig, sys: &Arc<AppellSystem>) -> Result<Vec<Check>> {
    let tol = cfg.tolerances.e_norm;
    let etas = points(&cfg.verify.eta, sys.dim(), &[0.1, -0.2]);
    let mut checks = Vec::new();
    for view in &cfg.views {
        let name = format!("e_norm(p={},q={})", view.p, view.q);
        let mut worst = None::<f64>;
        let mut outside = 0;
        for eta in &etas {
            let r = 2f64.powi(view.q) * sys.scale().norm(eta, view.p).powi(2);
            if r >= 1.0 {
                outside += 1;
                continue;
            }
            let e = sys.e_vector(eta)?;
            let got = e.test_norm(view.p, view.q).powi(2);
            let want = (1.0 - r.powi(sys.order() as i32 + 1)) / (1.0 - r);
            let dev = (got - want).abs() / want;
            worst = Some(worst.map_or(dev, |w: f64| w.max(dev)));
        }
        let mut check = match worst {
            None => Check::skipped(name, tol, "outside U_{p,q}"),
            Some(w) => Check::measured(name, w, tol),
        };
        if outside > 0 && check.max_deviation.is_some() {
            check.status = format!("{} ({outside} of {} points outside U_{{p,q}} skipped)", check.status, etas.len());
        }
        checks.push(check);
    }
    Ok(checks)
}

fn check_rho_pairing(cfg: &ExperimentConfig, sys: &Arc<AppellSystem>) -> Result<Check> {
    let xis = points(&cfg.verify.xi, sys.dim(), &[0.3, -0.5]);
    let etas = points(&cfg.verify.eta, sys.dim(), &[0.1, -0.2]);
    let n = sys.order();
    let mut worst = 0.0f64;
    for xi in &xis {
        let rho = sys.rho(xi)?;
        for eta in &etas {
            let s: C64 = xi.iter().zip(eta).map(|(a, b)| a * b).sum();
            let got = sys.q_pair(&rho, &sys.e_vector(eta)?)?;
            let remainder: f64 = (n + 1..n + 60).map(|k| s.norm().powi(k as i32) / factorial(k)).sum();
            let excess = ((got - (-s).exp()).norm() - remainder).max(0.0);
            worst = worst.max(excess);
        }
    }
    Ok(Check::measured("rho_pairing", worst, cfg.tolerances.rho_pairing))
}

fn check_c_transform(cfg: &ExperimentConfig, sys: &Arc<AppellSystem>, rng: &mut StdRng) -> Result<Check> {
    const NAME: &str = "c_transform";
    let tol = cfg.tolerances.c_transform;
    if sys.dim() > 3 {
        return Ok(Check::skipped(NAME, tol, "quadrature needs d <= 3"));
    }
    let mut worst = 0.0f64;
    for _ in 0..cfg.verify.samples {
        let phi = random_polynomial(rng, sys)?;
        let xi: Vec<f64> = (0..sys.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let xc: Vec<C64> = xi.iter().map(|&x| c(x)).collect();
        let a = c_transform_series(&phi, &xc)?;
        let b = c_transform_integral(&phi, &xi)?;
        worst = worst.max((a - b).norm() / a.norm().max(1.0));
    }
    Ok(Check::measured(NAME, worst, tol))
}

fn check_coincidence(cfg: &ExperimentConfig, sys: &Arc<AppellSystem>, rng: &mut StdRng) -> Result<Check> {
    const NAME: &str = "gaussian_coincidence";
    let tol = cfg.tolerances.coincidence;
    if !sys.measure().is_gaussian() {
        return Ok(Check::skipped(NAME, tol, "non-Gaussian measure"));
    }
    if sys.dim() > 3 {
        return Ok(Check::skipped(NAME, tol, "quadrature needs d <= 3"));
    }
    let grid = sample_grid(sys.dim(), 3);
    let mut worst = 0.0f64;
    for _ in 0..cfg.verify.samples {
        let phi = random_polynomial(rng, sys)?;
        worst = worst.max(gaussian_coincidence(&phi, &grid)?);
    }
    Ok(Check::measured(NAME, worst, tol))
}

fn check_symbols(
    cfg: &ExperimentConfig,
    sys_in: &Arc<AppellSystem>,
    sys_out: &Arc<AppellSystem>,
    rng: &mut StdRng,
) -> Result<Vec<Check>> {
    let d = sys_in.dim();
    let mut kernels = vec![OperatorKernel::measure_change(sys_in.clone(), sys_out.clone())?];
    for _ in 0..cfg.verify.samples {
        kernels.push(random_kernel(rng, sys_in, sys_out, sys_in.order())?);
    }
    let mut consistency = 0.0f64;
    let mut round_trip = 0.0f64;
    for k in &kernels {
        for _ in 0..3 {
            let xi: Vec<C64> = (0..d).map(|_| rc(rng)).collect();
            let eta: Vec<C64> = (0..d).map(|_| rc(rng)).collect();
            let a = k.cs_symbol(&xi, &eta)?;
            let b = k.symbol_by_pairing(&xi, &eta)?;
            consistency = consistency.max((a - b).norm() / a.norm().max(1.0));
        }
        let back = OperatorKernel::reconstruct_exact(&k.symbol_series(), sys_in.clone(), sys_out.clone())?;
        round_trip = round_trip.max(back.max_abs_difference(k)?);
    }
    let mut checks = vec![
        Check::measured("symbol_consistency", consistency, cfg.tolerances.symbol),
        Check::measured("round_trip_exact", round_trip, cfg.tolerances.round_trip_exact),
    ];

    let tol = cfg.tolerances.round_trip_blackbox;
    if d > 2 {
        checks.push(Check::skipped("round_trip_blackbox", tol, "black-box extraction is checked for d <= 2"));
    } else {
        let big_m = cfg.verify.blackbox_degree.min(sys_in.order());
        let k = random_kernel(rng, sys_in, sys_out, big_m)?;
        let germ = k.symbol_series();
        let (b, _) = OperatorKernel::reconstruct_blackbox(
            |x, y| germ.eval(x, y).unwrap_or(c(f64::NAN)),
            sys_in.clone(),
            sys_out.clone(),
            &BlackboxOptions::new(big_m),
        )?;
        let err = max_block_relative_error(&b, &k)?;
        checks.push(Check::measured("round_trip_blackbox", err, tol));
    }
    Ok(checks)
}

fn check_d_operator(cfg: &ExperimentConfig, sys: &Arc<AppellSystem>, rng: &mut StdRng) -> Result<Check> {
    let d = sys.dim();
    let xs: Vec<Vec<C64>> = (0..2)
        .map(|_| (0..d).map(|_| c(rng.gen_range(-1.5..1.5))).collect())
        .collect();
    let mut worst = 0.0f64;
    for k in 0..=sys.order().min(2) {
        let phi_k = SymTensor::from_fn(d, k, |_| rc(rng));
        let dk = OperatorKernel::d_operator(sys.clone(), &phi_k)?;
        for alpha in multi_indices_up_to(d, sys.order()) {
            let m = alpha.degree();
            let e = SymTensor::basis(d, &alpha);
            let out = dk.apply(&ChaosVector::single(sys.clone(), e.clone())?)?;
            for x in &xs {
                let got = out.eval(x)?;
                let want = if m >= k {
                    sys.p_tensor(m - k, x)?.symmetrize_product(&phi_k)?.pairing(&e)? * factorial(m)
                        / factorial(m - k)
                } else {
                    c(0.0)
                };
                worst = worst.max((got - want).norm() / want.norm().max(1.0));
            }
        }
    }
    Ok(Check::measured("d_operator", worst, cfg.tolerances.d_operator))
}

fn check_norm_chain(
    cfg: &ExperimentConfig,
    sys_in: &Arc<AppellSystem>,
    sys_out: &Arc<AppellSystem>,
    rng: &mut StdRng,
) -> Result<Check> {
    let mut worst = 0.0f64;
    for view in &cfg.views {
        for _ in 0..cfg.verify.samples.max(1) {
            let k = OperatorKernel::from_fn(sys_in.clone(), sys_out.clone(), |_, _, _, _| rc(rng))?;
            let phi = random_vector(rng, sys_in)?;
            let chain = k.norm_chain(&phi, view.p + 1, view.q + 1, view.p, view.q)?;
            if chain.rhs > 0.0 {
                worst = worst.max(chain.lhs / chain.rhs);
            }
        }
    }
    Ok(Check::measured("norm_chain", worst, 1.0 + 1e-12))
}

/// `verify`: runs every suite and writes `report.json`. Returns whether all
/// checks passed.
pub fn cmd_verify(cfg: &ExperimentConfig, out: &Path) -> Result<bool> {
    let sys_in = cfg.system_in()?;
    let sys_out = cfg.system_out()?;
    let mut rng = StdRng::seed_from_u64(cfg.verify.seed);
    let tol = &cfg.tolerances;

    let mut checks = vec![
        check_biorthogonality(&sys_in, tol.biorthogonality)?,
        check_quadrature(&sys_in, tol.quadrature)?,
        check_hermite(&sys_in, tol.hermite)?,
    ];
    checks.extend(check_e_norms(cfg, &sys_in)?);
    checks.push(check_rho_pairing(cfg, &sys_in)?);
    checks.push(check_c_transform(cfg, &sys_in, &mut rng)?);
    checks.push(check_coincidence(cfg, &sys_in, &mut rng)?);
    checks.extend(check_symbols(cfg, &sys_in, &sys_out, &mut rng)?);
    checks.push(check_d_operator(cfg, &sys_in, &mut rng)?);
    checks.push(check_norm_chain(cfg, &sys_in, &sys_out, &mut rng)?);

    let pass = checks.iter().all(|c| c.pass);
    write_config(out, cfg)?;
    write(out, "report.json", &to_canonical_json(&Report { pass, checks })?)?;
    Ok(pass)
}

fn load_operator(cfg: &ExperimentConfig, base: &Path) -> Result<OperatorKernel> {
    Ok(match &cfg.symbol.operator {
        OperatorSource::MeasureChange => OperatorKernel::measure_change(cfg.system_in()?, cfg.system_out()?)?,
        OperatorSource::Zero => OperatorKernel::zero(cfg.system_in()?, cfg.system_out()?)?,
        OperatorSource::Constant { value } => {
            OperatorKernel::constant(cfg.system_in()?, cfg.system_out()?, c(*value))?
        }
        OperatorSource::File { path } => {
            let path = base.join(path);
            let text = fs::read_to_string(&path).with_context(|| format!("reading operator {}", path.display()))?;
            let file: KernelFile = from_json(&text).with_context(|| format!("parsing operator {}", path.display()))?;
            file.to_kernel().with_context(|| format!("malformed operator {}", path.display()))?
        }
    })
}

fn direction(given: &Option<Vec<f64>>, d: usize) -> Result<Vec<C64>> {
    match given {
        Some(v) if v.len() == d => Ok(v.iter().map(|&x| c(x)).collect()),
        Some(v) => anyhow::bail!("direction {v:?} does not have {d} coordinates"),
        None => {
            let mut e = vec![c(0.0); d];
            e[0] = c(1.0);
            Ok(e)
        }
    }
}

#[derive(Serialize)]
struct RoundTrip {
    max_degree: usize,
    max_block_relative_error: f64,
    max_abs_error: f64,
    tolerance: f64,
    pass: bool,
    extraction: ExtractionReport,
}

/// `symbol`: CSV of the symbol on a grid, plus an optional black-box round trip.
pub fn cmd_symbol(cfg: &ExperimentConfig, base: &Path, out: &Path) -> Result<()> {
    let k = load_operator(cfg, base)?;
    let d = k.dim();
    let u = direction(&cfg.symbol.xi_direction, d)?;
    let w = direction(&cfg.symbol.eta_direction, d)?;

    let mut csv = String::from("xi,eta,re,im\n");
    for &s in &cfg.symbol.xi_grid {
        let xi: Vec<C64> = u.iter().map(|z| z * s).collect();
        for &t in &cfg.symbol.eta_grid {
            let eta: Vec<C64> = w.iter().map(|z| z * t).collect();
            let v = k.cs_symbol(&xi, &eta)?;
            csv.push_str(&format!(
                "{},{},{},{}\n",
                format_f64(s),
                format_f64(t),
                format_f64(v.re + 0.0),
                format_f64(v.im + 0.0)
            ));
        }
    }
    write_config(out, cfg)?;
    write(out, "kernel.json", &to_canonical_json(&KernelFile::from_kernel(&k)?)?)?;
    write(out, "symbol.csv", &csv)?;

    if cfg.symbol.reconstruct {
        let opts = cfg
            .symbol
            .blackbox
            .clone()
            .unwrap_or_else(|| BlackboxOptions::new(k.in_order().min(k.out_order())));
        let germ = k.symbol_series();
        let (b, report) = OperatorKernel::reconstruct_blackbox(
            |x, y| germ.eval(x, y).unwrap_or(c(f64::NAN)),
            k.sys_in().clone(),
            k.sys_out().clone(),
            &opts,
        )?;
        let rel = max_block_relative_error(&b, &k)?;
        let summary = RoundTrip {
            max_degree: opts.max_degree,
            max_block_relative_error: rel,
            max_abs_error: b.max_abs_difference(&k)?,
            tolerance: cfg.tolerances.round_trip_blackbox,
            pass: rel <= cfg.tolerances.round_trip_blackbox,
            extraction: report,
        };
        write(out, "reconstructed_kernel.json", &to_canonical_json(&KernelFile::from_kernel(&b)?)?)?;
        write(out, "round_trip.json", &to_canonical_json(&summary)?)?;
    }
    Ok(())
}

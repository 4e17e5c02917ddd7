//! Kernel operators between chaos spaces, their CS-symbols, and
//! reconstruction of kernels from symbols.
//!
//! An operator is stored as bigraded kernels `f_{m,n}` acting by
//! `(Bφ)_m = Σ_n n!·contract(f_{m,n}, φ_n)`. Its symbol is
//! `F(ξ, η) = Σ_{m,n} ⟨f_{m,n} | ξ^{⊗m} ⊗ η^{⊗n}⟩`, with `ξ` in the output
//! slots.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::appell::AppellSystem;
use crate::chaos::ChaosVector;
use crate::error::{Error, Result};
use crate::multi_index::{factorial, multi_indices, MultiIndex};
use crate::series::PowerSeries;
use crate::tensor::{BiSymTensor, SymTensor};
use crate::C64;

/// Blocks whose largest entry is below this are stored as exact zeros.
pub const ZERO_BLOCK_THRESHOLD: f64 = 1e-14;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

#[derive(Clone, Debug)]
pub struct OperatorKernel {
    sys_in: Arc<AppellSystem>,
    sys_out: Arc<AppellSystem>,
    blocks: Vec<Vec<BiSymTensor>>,
}

impl PartialEq for OperatorKernel {
    fn eq(&self, other: &Self) -> bool {
        self.sys_in.is_compatible(&other.sys_in)
            && self.sys_out.is_compatible(&other.sys_out)
            && self.blocks == other.blocks
    }
}

impl OperatorKernel {
    pub fn zero(sys_in: Arc<AppellSystem>, sys_out: Arc<AppellSystem>) -> Result<Self> {
        if sys_in.dim() != sys_out.dim() {
            return Err(Error::DimensionMismatch {
                expected: sys_out.dim(),
                got: sys_in.dim(),
            });
        }
        let d = sys_in.dim();
        let blocks = (0..=sys_out.order())
            .map(|m| (0..=sys_in.order()).map(|n| BiSymTensor::zeros(d, m, n)).collect())
            .collect();
        Ok(OperatorKernel {
            sys_in,
            sys_out,
            blocks,
        })
    }

    /// Kernel with entries `f(m, n, γ, δ)`.
    pub fn from_fn(
        sys_in: Arc<AppellSystem>,
        sys_out: Arc<AppellSystem>,
        mut f: impl FnMut(usize, usize, &MultiIndex, &MultiIndex) -> C64,
    ) -> Result<Self> {
        let mut k = OperatorKernel::zero(sys_in, sys_out)?;
        let d = k.dim();
        for (m, row) in k.blocks.iter_mut().enumerate() {
            for (n, b) in row.iter_mut().enumerate() {
                *b = BiSymTensor::from_fn(d, m, n, |g, dl| f(m, n, g, dl));
            }
        }
        Ok(k)
    }

    /// Identity on the constant chaos: only `f_{0,0} = c`.
    pub fn constant(sys_in: Arc<AppellSystem>, sys_out: Arc<AppellSystem>, c: C64) -> Result<Self> {
        let mut k = OperatorKernel::zero(sys_in, sys_out)?;
        k.blocks[0][0].coeffs_mut()[0] = c;
        Ok(k)
    }

    pub fn sys_in(&self) -> &Arc<AppellSystem> {
        &self.sys_in
    }

    pub fn sys_out(&self) -> &Arc<AppellSystem> {
        &self.sys_out
    }

    pub fn dim(&self) -> usize {
        self.sys_in.dim()
    }

    pub fn out_order(&self) -> usize {
        self.sys_out.order()
    }

    pub fn in_order(&self) -> usize {
        self.sys_in.order()
    }

    pub fn block(&self, m: usize, n: usize) -> &BiSymTensor {
        &self.blocks[m][n]
    }

    pub fn set_block(&mut self, block: BiSymTensor) -> Result<()> {
        if block.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: block.dim(),
            });
        }
        let (m, n) = (block.out_degree(), block.in_degree());
        if m > self.out_order() || n > self.in_order() {
            return Err(Error::DegreeTooHigh {
                degree: m.max(n),
                max: self.out_order().min(self.in_order()),
            });
        }
        self.blocks[m][n] = block;
        Ok(())
    }

    /// Nonzero blocks in `(m, n)` order.
    pub fn nonzero_blocks(&self) -> impl Iterator<Item = &BiSymTensor> {
        self.blocks.iter().flatten().filter(|b| !b.is_zero())
    }

    /// Largest entrywise difference to another kernel of the same shape.
    pub fn max_abs_difference(&self, other: &OperatorKernel) -> Result<f64> {
        if self.out_order() != other.out_order() || self.in_order() != other.in_order() {
            return Err(Error::TruncationMismatch {
                expected: self.out_order(),
                got: other.out_order(),
            });
        }
        let mut worst = 0.0f64;
        for (a, b) in self.blocks.iter().flatten().zip(other.blocks.iter().flatten()) {
            for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                worst = worst.max((x - y).norm());
            }
        }
        Ok(worst)
    }

    fn zero_small_blocks(&mut self) {
        for b in self.blocks.iter_mut().flatten() {
            if b.max_abs() < ZERO_BLOCK_THRESHOLD {
                b.coeffs_mut().iter_mut().for_each(|c| *c = zero());
            }
        }
    }

    /// `(Bφ)_m = Σ_n n!·contract(f_{m,n}, φ_n)`.
    pub fn apply(&self, phi: &ChaosVector) -> Result<ChaosVector> {
        if !phi.system().is_compatible(&self.sys_in) {
            return Err(Error::SystemMismatch);
        }
        let d = self.dim();
        let coeffs = self
            .blocks
            .par_iter()
            .enumerate()
            .map(|(m, row)| {
                let mut acc = SymTensor::zeros(d, m);
                for (n, (f, pn)) in row.iter().zip(phi.coeffs()).enumerate() {
                    if f.is_zero() || pn.is_zero() {
                        continue;
                    }
                    let c = f.contract(pn)?.scale(C64::new(factorial(n), 0.0));
                    acc = acc.add(&c)?;
                }
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()?;
        ChaosVector::new(self.sys_out.clone(), coeffs)
    }

    /// `Σ_{m,n} ⟨f_{m,n} | ξ^{⊗m} ⊗ η^{⊗n}⟩`.
    pub fn cs_symbol(&self, xi: &[C64], eta: &[C64]) -> Result<C64> {
        self.check_point(xi)?;
        self.check_point(eta)?;
        Ok(self
            .blocks
            .iter()
            .flatten()
            .filter(|b| !b.is_zero())
            .map(|b| b.pair_rank_one(xi, eta))
            .sum())
    }

    /// The symbol by its definition: `⟨⟨ρ_μ(−ξ), B e_ν(η)⟩⟩`.
    pub fn symbol_by_pairing(&self, xi: &[C64], eta: &[C64]) -> Result<C64> {
        self.check_point(xi)?;
        let minus_xi: Vec<C64> = xi.iter().map(|z| -z).collect();
        let rho = self.sys_out.rho(&minus_xi)?;
        let image = self.apply(&self.sys_in.e_vector(eta)?)?;
        self.sys_out.q_pair(&rho, &image)
    }

    fn check_point(&self, z: &[C64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok(())
    }

    /// The symbol as a bigraded germ; entries are copied verbatim.
    pub fn symbol_series(&self) -> SymbolGerm {
        let blocks = self
            .blocks
            .iter()
            .flatten()
            .filter(|b| !b.is_zero())
            .map(|b| SymbolBlock {
                m: b.out_degree(),
                n: b.in_degree(),
                entries: b
                    .iter()
                    .filter(|(_, _, v)| v.norm_sqr() != 0.0)
                    .map(|(gamma, delta, value)| SymbolEntry { gamma, delta, value })
                    .collect(),
            })
            .collect();
        SymbolGerm {
            d: self.dim(),
            blocks,
            cylinder: Cylinder::default(),
        }
    }

    /// Reads the kernels off the bigraded blocks of `germ`.
    pub fn reconstruct_exact(
        germ: &SymbolGerm,
        sys_in: Arc<AppellSystem>,
        sys_out: Arc<AppellSystem>,
    ) -> Result<Self> {
        let mut k = OperatorKernel::zero(sys_in, sys_out)?;
        if germ.d != k.dim() {
            return Err(Error::DimensionMismatch {
                expected: k.dim(),
                got: germ.d,
            });
        }
        let d = k.dim();
        let mut seen = std::collections::BTreeSet::new();
        for block in &germ.blocks {
            let (m, n) = (block.m, block.n);
            if !seen.insert((m, n)) {
                return Err(Error::MalformedGerm(format!("block ({m}, {n}) appears twice")));
            }
            if m > k.out_order() || n > k.in_order() {
                if block.entries.iter().all(|e| e.value.norm_sqr() == 0.0) {
                    continue;
                }
                return Err(Error::DegreeTooHigh {
                    degree: m.max(n),
                    max: k.out_order().min(k.in_order()),
                });
            }
            let target = &mut k.blocks[m][n];
            let mut filled = std::collections::BTreeSet::new();
            for e in &block.entries {
                if e.gamma.dim() != d || e.delta.dim() != d {
                    return Err(Error::MalformedGerm(format!(
                        "entry in block ({m}, {n}) has the wrong number of variables"
                    )));
                }
                if e.gamma.degree() != m || e.delta.degree() != n {
                    return Err(Error::MalformedGerm(format!(
                        "block ({m}, {n}) is not homogeneous: entry {:?} x {:?}",
                        e.gamma.entries(),
                        e.delta.entries()
                    )));
                }
                if !filled.insert((e.gamma.clone(), e.delta.clone())) {
                    return Err(Error::MalformedGerm(format!(
                        "duplicate entry {:?} x {:?} in block ({m}, {n})",
                        e.gamma.entries(),
                        e.delta.entries()
                    )));
                }
                target.set(&e.gamma, &e.delta, e.value);
            }
        }
        k.zero_small_blocks();
        Ok(k)
    }

    /// Recovers the kernels of an evaluable symbol by Cauchy integrals over
    /// circles `|s| = R_m`, `|t| = δ` of `F(s u, t w)`, followed by
    /// polarization over principal-lattice directions.
    pub fn reconstruct_blackbox<F>(
        symbol: F,
        sys_in: Arc<AppellSystem>,
        sys_out: Arc<AppellSystem>,
        opts: &BlackboxOptions,
    ) -> Result<(Self, ExtractionReport)>
    where
        F: Fn(&[C64], &[C64]) -> C64 + Sync,
    {
        let mut k = OperatorKernel::zero(sys_in, sys_out)?;
        let d = k.dim();
        let big_m = opts.max_degree;
        if big_m > k.out_order() || big_m > k.in_order() {
            return Err(Error::DegreeTooHigh {
                degree: big_m,
                max: k.out_order().min(k.in_order()),
            });
        }
        let radii = opts.radii_for()?;
        let kk = opts.points.unwrap_or(4 * (big_m + 1));
        if kk < 2 * (big_m + 1) {
            return Err(Error::InvalidArgument(format!(
                "need at least {} Fourier points for degree {big_m}, got {kk}",
                2 * (big_m + 1)
            )));
        }
        if !(opts.delta > 0.0) {
            return Err(Error::InvalidArgument("delta must be positive".into()));
        }

        let u_sets: Vec<Vec<Vec<f64>>> = (0..=big_m).map(|m| lattice_points(d, m)).collect();
        let mut w_all: Vec<Vec<f64>> = Vec::new();
        let w_index: Vec<Vec<usize>> = u_sets
            .iter()
            .map(|set| {
                set.iter()
                    .map(|w| match w_all.iter().position(|x| x == w) {
                        Some(i) => i,
                        None => {
                            w_all.push(w.clone());
                            w_all.len() - 1
                        }
                    })
                    .collect()
            })
            .collect();

        let tasks: Vec<(usize, usize)> = (0..=big_m)
            .flat_map(|m| (0..u_sets[m].len()).map(move |i| (m, i)))
            .collect();
        let grid = FourierGrid::new(kk);
        let results: Vec<TaskResult> = tasks
            .par_iter()
            .map(|&(m, i)| {
                let u = &u_sets[m][i];
                let mut out = TaskResult::default();
                for w in &w_all {
                    let r = grid.extract(&symbol, u, w, m, radii[m], opts.delta, big_m);
                    out.rows.push(r.coeffs);
                    out.residual = out.residual.max(r.residual);
                    out.convergence = out.convergence.max(r.convergence);
                }
                out
            })
            .collect();

        let mut report = ExtractionReport {
            residual: 0.0,
            convergence: 0.0,
            evaluations: tasks.len() * w_all.len() * 4 * kk * kk,
        };
        for r in &results {
            report.residual = report.residual.max(r.residual);
            report.convergence = report.convergence.max(r.convergence);
        }
        if !(report.residual <= opts.residual_tol) {
            return Err(Error::ExtractionFailure {
                residual: report.residual,
                tolerance: opts.residual_tol,
            });
        }
        if !(report.convergence <= opts.coefficient_tol) {
            return Err(Error::ExtractionFailure {
                residual: report.convergence,
                tolerance: opts.coefficient_tol,
            });
        }

        let mut offset = vec![0usize; big_m + 2];
        for m in 0..=big_m {
            offset[m + 1] = offset[m] + u_sets[m].len();
        }
        for m in 0..=big_m {
            let gammas = multi_indices(d, m);
            let u_mat = vandermonde(&u_sets[m], &gammas);
            for n in 0..=big_m {
                let deltas = multi_indices(d, n);
                let w_mat = vandermonde(&u_sets[n], &deltas);
                let a = DMatrix::from_fn(gammas.len(), deltas.len(), |i, j| {
                    results[offset[m] + i].rows[w_index[n][j]][n]
                });
                let x = u_mat
                    .clone()
                    .lu()
                    .solve(&a)
                    .ok_or_else(|| Error::InvalidArgument("singular direction set".into()))?;
                let ct = w_mat
                    .lu()
                    .solve(&x.transpose())
                    .ok_or_else(|| Error::InvalidArgument("singular direction set".into()))?;
                let block = BiSymTensor::from_fn(d, m, n, |g, dl| {
                    let gi = gammas.iter().position(|x| x == g).expect("same enumeration");
                    let di = deltas.iter().position(|x| x == dl).expect("same enumeration");
                    ct[(di, gi)] / (g.multinomial() * dl.multinomial())
                });
                k.blocks[m][n] = block;
            }
        }
        k.zero_small_blocks();
        Ok((k, report))
    }

    /// Kernels of `D(Φ_k)`:
    /// `f_{m,m+k}[γ, δ] = δ!/((m+k)! m!) · (k!/β!) Φ_β` with `β = δ − γ ≥ 0`.
    pub fn d_operator(sys: Arc<AppellSystem>, phi_k: &SymTensor) -> Result<Self> {
        if phi_k.dim() != sys.dim() {
            return Err(Error::DimensionMismatch {
                expected: sys.dim(),
                got: phi_k.dim(),
            });
        }
        let k = phi_k.degree();
        if k > sys.order() {
            return Err(Error::DegreeTooHigh {
                degree: k,
                max: sys.order(),
            });
        }
        OperatorKernel::from_fn(sys.clone(), sys, |m, n, g, dl| {
            if n != m + k {
                return zero();
            }
            match dl.checked_sub(g) {
                Some(beta) => {
                    phi_k.get(&beta) * (dl.factorial() / (factorial(n) * factorial(m)))
                        * beta.multinomial()
                }
                None => zero(),
            }
        })
    }

    /// The operator `⟨P_{n,ν} | w⟩ ↦ ⟨P_{n,μ} | w⟩`:
    /// `f_{m,m}[γ, δ] = δ_{γδ} γ!/(m!)²`.
    pub fn measure_change(sys_in: Arc<AppellSystem>, sys_out: Arc<AppellSystem>) -> Result<Self> {
        if sys_in.dim() != sys_out.dim() {
            return Err(Error::DimensionMismatch {
                expected: sys_out.dim(),
                got: sys_in.dim(),
            });
        }
        if sys_in.order() != sys_out.order() {
            return Err(Error::TruncationMismatch {
                expected: sys_out.order(),
                got: sys_in.order(),
            });
        }
        OperatorKernel::from_fn(sys_in, sys_out, |m, n, g, dl| {
            if m == n && g == dl {
                C64::new(g.factorial() / factorial(m).powi(2), 0.0)
            } else {
                zero()
            }
        })
    }

    /// Estimates `C` in `|F(ξ, η)| ≤ C e^{ε|ξ|_{−p₀}}` on a sample grid.
    pub fn growth_bound_check(&self, p0: i32, epsilon: f64, sample: &GrowthSample) -> Result<GrowthReport> {
        let scale = self.sys_out.scale();
        let mut profile = Vec::with_capacity(sample.radii.len());
        for &r in &sample.radii {
            let mut worst = 0.0f64;
            for dir in &sample.directions {
                self.check_point(dir)?;
                let len = scale.norm(dir, -p0);
                if len == 0.0 {
                    continue;
                }
                let xi: Vec<C64> = dir.iter().map(|z| z * (r / len)).collect();
                for eta in &sample.etas {
                    let v = self.cs_symbol(&xi, eta)?.norm() * (-epsilon * r).exp();
                    worst = worst.max(v);
                }
            }
            profile.push(worst);
        }
        let c_est = profile.iter().copied().fold(0.0, f64::max);
        let diverging = is_diverging(&profile);
        Ok(GrowthReport {
            c_est,
            radii: sample.radii.clone(),
            profile,
            diverging,
        })
    }

    /// Both sides of the norm-chain estimate
    /// `Σ_m (m!)² 2^{mq₀} |b_mφ|²_{p₀} ≤ ‖φ‖²_{p,q} Σ_m (m!)² 2^{mq₀} Σ_n 2^{−nq} |f_{m,n}|²_{p₀,−p}`.
    pub fn norm_chain(&self, phi: &ChaosVector, p: i32, q: i32, p0: i32, q0: i32) -> Result<NormChain> {
        let image = self.apply(phi)?;
        let out_scale = self.sys_out.scale();
        let in_scale = self.sys_in.scale();
        let lhs: f64 = image
            .coeffs()
            .iter()
            .enumerate()
            .map(|(m, b)| factorial(m).powi(2) * 2f64.powi(m as i32 * q0) * b.scale_norm(out_scale, p0).powi(2))
            .sum();
        let kernel_factor: f64 = self
            .blocks
            .iter()
            .enumerate()
            .map(|(m, row)| {
                let inner: f64 = row
                    .iter()
                    .enumerate()
                    .map(|(n, f)| 2f64.powi(-(n as i32) * q) * f.scale_norm_with(out_scale, p0, in_scale, -p).powi(2))
                    .sum();
                factorial(m).powi(2) * 2f64.powi(m as i32 * q0) * inner
            })
            .sum();
        let phi_norm_sq = phi.test_norm(p, q).powi(2);
        Ok(NormChain {
            lhs,
            phi_norm_sq,
            kernel_factor,
            rhs: phi_norm_sq * kernel_factor,
        })
    }
}

/// A profile diverges when its last value is its maximum and exceeds the
/// first half of the grid by more than a factor of 1.5.
fn is_diverging(profile: &[f64]) -> bool {
    if profile.len() < 3 {
        return false;
    }
    let last = profile[profile.len() - 1];
    let head = profile[..profile.len() / 2].iter().copied().fold(0.0, f64::max);
    let peak = profile.iter().copied().fold(0.0, f64::max);
    last >= peak && last > 1.5 * head
}

/// Applies `D(Φ_k)` to a polynomial given by monomial coefficients,
/// through `D(Φ_k)⟨x^{⊗n} | ψ_n⟩ = n!/(n−k)! ⟨x^{⊗(n−k)} | ψ_n ⌟ Φ_k⟩`.
pub fn differentiate_monomial(poly: &PowerSeries, phi_k: &SymTensor) -> Result<PowerSeries> {
    let d = poly.dim();
    if phi_k.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: phi_k.dim(),
        });
    }
    let k = phi_k.degree();
    let mut out = PowerSeries::zero(d, poly.order());
    for n in k..=poly.order() {
        let psi = SymTensor::from_fn(d, n, |a| poly.coeff(a) / a.multinomial());
        if psi.is_zero() {
            continue;
        }
        let factor = factorial(n) / factorial(n - k);
        let reduced = psi.split(n - k)?.contract(phi_k)?;
        for (alpha, v) in reduced.iter() {
            let prev = out.coeff(&alpha);
            out.set_coeff(&alpha, prev + v * factor * alpha.multinomial())?;
        }
    }
    Ok(out)
}

/// Principal lattice `{γ/m : |γ| = m}` on the simplex, unisolvent for
/// homogeneous polynomials of degree `m`. Degree 0 uses the first vertex.
pub fn lattice_points(d: usize, m: usize) -> Vec<Vec<f64>> {
    if m == 0 {
        let mut e = vec![0.0; d];
        e[0] = 1.0;
        return vec![e];
    }
    multi_indices(d, m)
        .iter()
        .map(|g| g.entries().iter().map(|&a| a as f64 / m as f64).collect())
        .collect()
}

fn vandermonde(points: &[Vec<f64>], exps: &[MultiIndex]) -> DMatrix<C64> {
    DMatrix::from_fn(points.len(), exps.len(), |i, j| {
        let p: Vec<C64> = points[i].iter().map(|&x| C64::new(x, 0.0)).collect();
        exps[j].monomial(&p)
    })
}

#[derive(Default)]
struct TaskResult {
    rows: Vec<Vec<C64>>,
    residual: f64,
    convergence: f64,
}

struct Extraction {
    coeffs: Vec<C64>,
    residual: f64,
    convergence: f64,
}

/// Twiddle tables for a `2K`-point circle, with the `K`-point circle as
/// its even subgrid.
struct FourierGrid {
    k: usize,
    roots: Vec<C64>,
}

impl FourierGrid {
    fn new(k: usize) -> Self {
        let n = 2 * k;
        let roots = (0..n)
            .map(|j| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / n as f64))
            .collect();
        FourierGrid { k, roots }
    }

    /// `ω^{−a j}` for a possibly negative frequency `a`.
    fn twiddle(&self, a: i64, j: usize) -> C64 {
        let n = self.roots.len() as i64;
        let idx = (-a * j as i64).rem_euclid(n) as usize;
        self.roots[idx]
    }

    #[allow(clippy::too_many_arguments)]
    fn extract<F>(&self, f: &F, u: &[f64], w: &[f64], m: usize, r: f64, delta: f64, big_m: usize) -> Extraction
    where
        F: Fn(&[C64], &[C64]) -> C64,
    {
        let n = 2 * self.k;
        let half = self.k / 2;
        let mut samples = vec![zero(); n * n];
        let mut scale = 0.0f64;
        for j in 0..n {
            let s = self.roots[j] * r;
            let xi: Vec<C64> = u.iter().map(|&x| s * x).collect();
            for kk in 0..n {
                let t = self.roots[kk] * delta;
                let eta: Vec<C64> = w.iter().map(|&x| t * x).collect();
                let v = f(&xi, &eta);
                scale = scale.max(v.norm());
                samples[j * n + kk] = v;
            }
        }

        // s-direction transforms for the wanted frequency and the negative band
        let row = |a: i64, stride: usize| -> Vec<C64> {
            let pts = n / stride;
            (0..n)
                .step_by(stride)
                .map(|kk| {
                    (0..n)
                        .step_by(stride)
                        .map(|j| samples[j * n + kk] * self.twiddle(a, j))
                        .sum::<C64>()
                        / pts as f64
                })
                .collect()
        };
        let t_coeff = |vals: &[C64], b: i64, stride: usize| -> C64 {
            vals.iter()
                .enumerate()
                .map(|(i, v)| v * self.twiddle(b, i * stride))
                .sum::<C64>()
                / vals.len() as f64
        };

        let fine = row(m as i64, 1);
        let coarse = row(m as i64, 2);
        let mut coeffs = Vec::with_capacity(big_m + 1);
        let mut convergence = 0.0f64;
        for b in 0..=big_m {
            let cf = t_coeff(&fine, b as i64, 1);
            let cc = t_coeff(&coarse, b as i64, 2);
            convergence = convergence.max((cf - cc).norm());
            coeffs.push(cf / (r.powi(m as i32) * delta.powi(b as i32)));
        }
        let mut leak = 0.0f64;
        for b in 1..=half as i64 {
            leak = leak.max(t_coeff(&fine, -b, 1).norm());
        }
        for a in 1..=half as i64 {
            for v in row(-a, 1) {
                leak = leak.max(v.norm());
            }
        }
        let (residual, convergence) = if scale > 0.0 {
            (leak / scale, convergence / scale)
        } else {
            (0.0, 0.0)
        };
        Extraction {
            coeffs,
            residual,
            convergence,
        }
    }
}

/// Settings for [`OperatorKernel::reconstruct_blackbox`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlackboxOptions {
    /// Highest degree `M` extracted in each of `ξ` and `η`.
    pub max_degree: usize,
    /// Sets the default radii `R_m = max(1, m/ε)`.
    pub epsilon: f64,
    /// Explicit radii `R_0..=R_M`, overriding `epsilon`.
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    /// Radius of the `η` circle.
    pub delta: f64,
    /// Points `K` per circle; defaults to `4(M+1)`.
    #[serde(default)]
    pub points: Option<usize>,
    pub residual_tol: f64,
    pub coefficient_tol: f64,
}

impl BlackboxOptions {
    pub fn new(max_degree: usize) -> Self {
        BlackboxOptions {
            max_degree,
            epsilon: 1.0,
            radii: None,
            delta: 0.5,
            points: None,
            residual_tol: 1e-9,
            coefficient_tol: 1e-6,
        }
    }

    fn radii_for(&self) -> Result<Vec<f64>> {
        match &self.radii {
            Some(r) => {
                if r.len() != self.max_degree + 1 || r.iter().any(|x| !(*x > 0.0)) {
                    return Err(Error::InvalidArgument(format!(
                        "expected {} positive radii",
                        self.max_degree + 1
                    )));
                }
                Ok(r.clone())
            }
            None => {
                if !(self.epsilon > 0.0) {
                    return Err(Error::InvalidArgument("epsilon must be positive".into()));
                }
                Ok((0..=self.max_degree)
                    .map(|m| (m as f64 / self.epsilon).max(1.0))
                    .collect())
            }
        }
    }
}

/// Quality measures of a black-box extraction, relative to the largest
/// sampled value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    /// Largest negative-frequency Fourier content.
    pub residual: f64,
    /// Largest change of an extracted coefficient between `K` and `2K` points.
    pub convergence: f64,
    pub evaluations: usize,
}

/// Points at which [`OperatorKernel::growth_bound_check`] samples the symbol:
/// `ξ = r · dir / |dir|_{−p₀}` for each radius and direction, against every `η`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthSample {
    pub directions: Vec<Vec<C64>>,
    pub radii: Vec<f64>,
    pub etas: Vec<Vec<C64>>,
}

impl GrowthSample {
    /// Coordinate and diagonal rays (real and imaginary), radii up to
    /// `max_radius`, and `η` on the coordinate axes at distance `eta_radius`.
    pub fn rays(d: usize, eta_radius: f64, max_radius: f64, steps: usize) -> Self {
        let mut directions = Vec::new();
        for i in 0..d {
            let mut e = vec![zero(); d];
            e[i] = C64::new(1.0, 0.0);
            directions.push(e.clone());
            e[i] = C64::new(0.0, 1.0);
            directions.push(e);
        }
        directions.push(vec![C64::new(1.0, 0.0); d]);
        let mut etas = vec![vec![zero(); d]];
        for i in 0..d {
            for sign in [1.0, -1.0] {
                let mut e = vec![zero(); d];
                e[i] = C64::new(sign * eta_radius, 0.0);
                etas.push(e);
            }
        }
        let steps = steps.max(2);
        let radii = (0..steps)
            .map(|s| max_radius * s as f64 / (steps - 1) as f64)
            .collect();
        GrowthSample { directions, radii, etas }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub c_est: f64,
    pub radii: Vec<f64>,
    /// Largest weighted symbol value at each radius.
    pub profile: Vec<f64>,
    pub diverging: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormChain {
    pub lhs: f64,
    pub phi_norm_sq: f64,
    pub kernel_factor: f64,
    pub rhs: f64,
}

impl NormChain {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-12)
    }
}

/// Symmetric-tensor entry `f_{γδ}`; the Taylor coefficient of `ξ^γ η^δ`
/// is `(m!/γ!)(n!/δ!) f_{γδ}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolEntry {
    pub gamma: MultiIndex,
    pub delta: MultiIndex,
    pub value: C64,
}

/// Terms of bidegree `(m, n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolBlock {
    pub m: usize,
    pub n: usize,
    pub entries: Vec<SymbolEntry>,
}

/// Validity region `𝒩_ℂ × {η : |η|_p² < 2^{−q}}`, with `delta` the radius
/// used for black-box sampling in `η`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub p: i32,
    pub q: i32,
    pub delta: f64,
}

impl Default for Cylinder {
    fn default() -> Self {
        Cylinder { p: 0, q: 0, delta: 0.5 }
    }
}

/// Bigraded series `F(ξ, η) = Σ_{m,n} ⟨f_{m,n} | ξ^{⊗m} ⊗ η^{⊗n}⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolGerm {
    pub d: usize,
    pub blocks: Vec<SymbolBlock>,
    #[serde(default)]
    pub cylinder: Cylinder,
}

impl SymbolGerm {
    pub fn zero(d: usize) -> Self {
        SymbolGerm {
            d,
            blocks: Vec::new(),
            cylinder: Cylinder::default(),
        }
    }

    /// Splits a series in `2d` variables into `(ξ, η)` blocks, `ξ` first.
    pub fn from_joint_series(series: &PowerSeries, d: usize) -> Result<Self> {
        if series.dim() != 2 * d {
            return Err(Error::DimensionMismatch {
                expected: 2 * d,
                got: series.dim(),
            });
        }
        let mut blocks: Vec<SymbolBlock> = Vec::new();
        for (alpha, v) in series.iter() {
            if v.norm_sqr() == 0.0 {
                continue;
            }
            let gamma = MultiIndex::new(alpha.entries()[..d].to_vec());
            let delta = MultiIndex::new(alpha.entries()[d..].to_vec());
            let (m, n) = (gamma.degree(), delta.degree());
            let value = v / (gamma.multinomial() * delta.multinomial());
            let entry = SymbolEntry { gamma, delta, value };
            match blocks.iter_mut().find(|b| b.m == m && b.n == n) {
                Some(b) => b.entries.push(entry),
                None => blocks.push(SymbolBlock {
                    m,
                    n,
                    entries: vec![entry],
                }),
            }
        }
        blocks.sort_by_key(|b| (b.m, b.n));
        Ok(SymbolGerm {
            d,
            blocks,
            cylinder: Cylinder::default(),
        })
    }

    pub fn eval(&self, xi: &[C64], eta: &[C64]) -> Result<C64> {
        for z in [xi, eta] {
            if z.len() != self.d {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    got: z.len(),
                });
            }
        }
        Ok(self
            .blocks
            .iter()
            .flat_map(|b| &b.entries)
            .map(|e| {
                e.value * (e.gamma.multinomial() * e.delta.multinomial()) * e.gamma.monomial(xi) * e.delta.monomial(eta)
            })
            .sum())
    }

    pub fn is_zero(&self) -> bool {
        self.blocks
            .iter()
            .flat_map(|b| &b.entries)
            .all(|e| e.value.norm_sqr() == 0.0)
    }
}

/// Largest `|f|` relative error per coefficient, with a floor of `floor`
/// on the reference magnitude.
pub fn max_relative_error(got: &OperatorKernel, want: &OperatorKernel, floor: f64) -> Result<f64> {
    if got.out_order() != want.out_order() || got.in_order() != want.in_order() {
        return Err(Error::TruncationMismatch {
            expected: want.out_order(),
            got: got.out_order(),
        });
    }
    let mut worst = 0.0f64;
    for (a, b) in got.blocks.iter().flatten().zip(want.blocks.iter().flatten()) {
        for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
            worst = worst.max((x - y).norm() / y.norm().max(floor));
        }
    }
    Ok(worst)
}

/// Largest coefficient error in each `(m, n)` block, divided by the largest
/// reference coefficient of that block. Zero reference blocks count the
/// absolute error.
pub fn max_block_relative_error(got: &OperatorKernel, want: &OperatorKernel) -> Result<f64> {
    if got.out_order() != want.out_order() || got.in_order() != want.in_order() {
        return Err(Error::TruncationMismatch {
            expected: want.out_order(),
            got: got.out_order(),
        });
    }
    let mut worst = 0.0f64;
    for (a, b) in got.blocks.iter().flatten().zip(want.blocks.iter().flatten()) {
        let scale = b.max_abs();
        let err = a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        worst = worst.max(if scale > 0.0 { err / scale } else { err });
    }
    Ok(worst)
}

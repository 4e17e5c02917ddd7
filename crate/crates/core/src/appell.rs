//! The biorthogonal Appell system of a product measure.
//!
//! The normalized exponential `e_μ(ξ; x) = exp⟨x, ξ⟩ / L_μ(ξ)` expands as
//! `Σ_γ ξ^γ / γ! · v_γ(x)`, where `v_γ` is the entry of the symmetric
//! tensor `P_{|γ|}(x)`. Writing `r = 1/L_μ` gives the unitriangular table
//! `v_γ(x) = Σ_{α ≤ γ} K[γ, α] x^α` with `K[γ, α] = γ! r_{γ−α} / α!`.
//!
//! The dual Q-system is kept abstract: a distribution `Σ Q_n(Φ_n)` is its
//! coefficient family, and it acts on test functions through
//! `⟨⟨Q_n(Φ_n), ⟨P_m | φ_m⟩⟩⟩ = δ_{mn} n! ⟨Φ_n | φ_n⟩`.

use std::sync::Arc;

use crate::chaos::{ChaosFunctional, ChaosVector};
use crate::error::{Error, Result};
use crate::multi_index::{factorial, graded_rank, multi_indices, multi_indices_up_to, MultiIndex};
use crate::measures::ProductMeasure;
use crate::series::{for_each_below, PowerSeries};
use crate::tensor::{HilbertScale, SymTensor};
use crate::C64;

/// Default truncation degree.
pub const DEFAULT_ORDER: usize = 8;

/// `|L_μ(ξ)|` below this is treated as a zero of the Laplace transform.
const LAPLACE_ZERO: f64 = 1e-300;

/// One row of the P-kernel table: `(graded rank of α, K[γ, α])`.
type KernelRow = Vec<(usize, C64)>;

#[derive(Debug)]
pub struct AppellSystem {
    measure: ProductMeasure,
    order: usize,
    scale: HilbertScale,
    laplace: PowerSeries,
    recip: PowerSeries,
    /// `kernels[n][rank of γ]`, for `|γ| = n`.
    kernels: Vec<Vec<KernelRow>>,
}

impl AppellSystem {
    pub fn build(measure: ProductMeasure, order: usize, scale: HilbertScale) -> Result<Arc<Self>> {
        let d = measure.dim();
        if scale.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: scale.dim(),
            });
        }
        if !measure.check_nondegenerate(order) {
            return Err(Error::Degenerate {
                support: measure.min_support().unwrap_or(0),
                order,
            });
        }
        if let Some(r) = measure.laplace_radius_hint() {
            if r <= 0.0 {
                return Err(Error::Domain("Laplace transform has zero radius of convergence".into()));
            }
        }
        let laplace = measure.laplace_series(order)?;
        let recip = laplace.reciprocal()?;
        let kernels = (0..=order)
            .map(|n| {
                multi_indices(d, n)
                    .iter()
                    .map(|gamma| {
                        let gf = gamma.factorial();
                        let mut row = Vec::new();
                        for_each_below(gamma, |alpha| {
                            let rest = gamma.checked_sub(alpha).expect("alpha <= gamma");
                            let r = recip.coeff(&rest);
                            if r.norm_sqr() != 0.0 {
                                row.push((graded_rank(alpha), r * (gf / alpha.factorial())));
                            }
                        });
                        row.sort_by_key(|e| e.0);
                        row
                    })
                    .collect()
            })
            .collect();
        Ok(Arc::new(AppellSystem {
            measure,
            order,
            scale,
            laplace,
            recip,
            kernels,
        }))
    }

    /// Standard Gaussian on `ℝ^d` with the default scale.
    pub fn standard_gaussian(d: usize, order: usize) -> Arc<Self> {
        AppellSystem::build(ProductMeasure::standard_gaussian(d), order, HilbertScale::default_for(d))
            .expect("the standard Gaussian is non-degenerate")
    }

    pub fn measure(&self) -> &ProductMeasure {
        &self.measure
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.measure.dim()
    }

    pub fn scale(&self) -> &HilbertScale {
        &self.scale
    }

    pub fn laplace_series(&self) -> &PowerSeries {
        &self.laplace
    }

    pub fn reciprocal(&self) -> &PowerSeries {
        &self.recip
    }

    /// Same measure, truncation and scale.
    pub fn is_compatible(&self, other: &AppellSystem) -> bool {
        std::ptr::eq(self, other)
            || (self.order == other.order && self.measure == other.measure && self.scale == other.scale)
    }

    /// `K[γ, α]`, zero unless `α ≤ γ`.
    pub fn kernel_coeff(&self, gamma: &MultiIndex, alpha: &MultiIndex) -> C64 {
        let n = gamma.degree();
        if n > self.order || !alpha.le(gamma) {
            return C64::new(0.0, 0.0);
        }
        let row = &self.kernels[n][crate::multi_index::rank_in_degree(gamma)];
        let key = graded_rank(alpha);
        row.binary_search_by_key(&key, |e| e.0)
            .map(|i| row[i].1)
            .unwrap_or(C64::new(0.0, 0.0))
    }

    /// Row `γ` of the kernel table as `(α, K[γ, α])` pairs.
    pub fn kernel_row(&self, gamma: &MultiIndex) -> Vec<(MultiIndex, C64)> {
        let all = multi_indices_up_to(self.dim(), gamma.degree());
        self.kernels[gamma.degree()][crate::multi_index::rank_in_degree(gamma)]
            .iter()
            .map(|(k, v)| (all[*k].clone(), *v))
            .collect()
    }

    /// The entry `v_γ` of `P_{|γ|}` as a polynomial in `x`.
    pub fn p_entry_polynomial(&self, gamma: &MultiIndex) -> PowerSeries {
        let mut poly = PowerSeries::zero(self.dim(), self.order);
        for (alpha, k) in self.kernel_row(gamma) {
            poly.set_coeff(&alpha, k).expect("degree <= order");
        }
        poly
    }

    /// `x^α` for every `|α| ≤ N`, in graded order.
    pub(crate) fn monomials(&self, x: &[C64]) -> Vec<C64> {
        multi_indices_up_to(self.dim(), self.order)
            .iter()
            .map(|a| a.monomial(x))
            .collect()
    }

    pub(crate) fn p_tensor_from_monomials(&self, n: usize, mono: &[C64]) -> SymTensor {
        let coeffs = self.kernels[n]
            .iter()
            .map(|row| row.iter().map(|(k, v)| v * mono[*k]).sum())
            .collect();
        SymTensor::from_coeffs(self.dim(), n, coeffs).expect("kernel table shape")
    }

    /// `P_n(x)` as a symmetric tensor.
    pub fn p_tensor(&self, n: usize, x: &[C64]) -> Result<SymTensor> {
        self.check_point(x)?;
        if n > self.order {
            return Err(Error::DegreeTooHigh {
                degree: n,
                max: self.order,
            });
        }
        Ok(self.p_tensor_from_monomials(n, &self.monomials(x)))
    }

    /// `P_0(x) … P_N(x)`.
    pub fn p_tensors(&self, x: &[C64]) -> Result<Vec<SymTensor>> {
        self.check_point(x)?;
        let mono = self.monomials(x);
        Ok((0..=self.order).map(|n| self.p_tensor_from_monomials(n, &mono)).collect())
    }

    fn check_point(&self, x: &[C64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `exp⟨x, ξ⟩ / L_μ(ξ)` with `L_μ` in closed form.
    pub fn e_mu_closed(&self, xi: &[C64], x: &[C64]) -> Result<C64> {
        self.check_point(x)?;
        let l = self.measure.laplace_closed(xi)?;
        if l.norm() < LAPLACE_ZERO {
            return Err(Error::Singularity);
        }
        let inner: C64 = x.iter().zip(xi).map(|(a, b)| a * b).sum();
        Ok(inner.exp() / l)
    }

    /// `Σ_{n ≤ N} (1/n!) ⟨P_n(x) | ξ^{⊗n}⟩`.
    pub fn e_mu_series(&self, xi: &[C64], x: &[C64]) -> Result<C64> {
        self.check_point(xi)?;
        Ok(self
            .p_tensors(x)?
            .iter()
            .enumerate()
            .map(|(n, p)| p.pair_rank_one(xi) / factorial(n))
            .sum())
    }

    /// The coefficient family `η^{⊗n} / n!` of `e_μ(η; ·)`.
    pub fn e_vector(self: &Arc<Self>, eta: &[C64]) -> Result<ChaosVector> {
        self.check_point(eta)?;
        let coeffs = (0..=self.order)
            .map(|n| SymTensor::rank_one(eta, n).scale(C64::new(1.0 / factorial(n), 0.0)))
            .collect();
        ChaosVector::new(self.clone(), coeffs)
    }

    /// `ρ_μ(ξ) = Σ (−1)^n Q_n(ξ^{⊗n} / n!)`.
    pub fn rho(self: &Arc<Self>, xi: &[C64]) -> Result<ChaosFunctional> {
        self.check_point(xi)?;
        let coeffs = (0..=self.order)
            .map(|n| {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                SymTensor::rank_one(xi, n).scale(C64::new(sign / factorial(n), 0.0))
            })
            .collect();
        ChaosFunctional::new(self.clone(), coeffs)
    }

    /// Dual pairing `⟨⟨Φ, φ⟩⟩_μ = Σ_n n! ⟨Φ_n | φ_n⟩`.
    pub fn q_pair(&self, big_phi: &ChaosFunctional, phi: &ChaosVector) -> Result<C64> {
        for sys in [big_phi.system(), phi.system()] {
            if sys.order != self.order {
                return Err(Error::TruncationMismatch {
                    expected: self.order,
                    got: sys.order,
                });
            }
            if !self.is_compatible(sys) {
                return Err(Error::SystemMismatch);
            }
        }
        let mut acc = C64::new(0.0, 0.0);
        for (n, (a, b)) in big_phi.coeffs().iter().zip(phi.coeffs()).enumerate() {
            acc += a.pairing(b)? * factorial(n);
        }
        Ok(acc)
    }

    /// `Q_n(x) = (−1)^n p^{(n)}(x) / p(x)` for a one-dimensional measure
    /// with a smooth density (Gaussian only).
    pub fn q_density_1d(&self, n: usize, x: f64) -> Result<f64> {
        if self.dim() != 1 {
            return Err(Error::Unsupported(format!(
                "density formula is one-dimensional, system has d = {}",
                self.dim()
            )));
        }
        let h = self.measure.components()[0].density_derivative_ratio(n)?;
        let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(sign * h.iter().rev().fold(0.0, |acc, c| acc * x + c))
    }

    /// `⟨⟨Φ, φ⟩⟩_μ` from the definition `Q_n(Φ_n) = D(Φ_n)^* 1`: each
    /// `D(Φ_n)` acts on the monomial expansion of `φ` and the result is
    /// integrated with the exact moments of `μ`. Independent of
    /// [`AppellSystem::q_pair`].
    pub fn q_pair_by_moments(&self, big_phi: &ChaosFunctional, phi: &ChaosVector) -> Result<C64> {
        let poly = phi.to_monomial();
        let mut acc = C64::new(0.0, 0.0);
        for t in big_phi.coeffs() {
            if t.is_zero() {
                continue;
            }
            let derived = crate::operators::differentiate_monomial(&poly, t)?;
            for (alpha, c) in derived.iter() {
                if c.norm_sqr() != 0.0 {
                    acc += c * self.measure.moment(&alpha)?;
                }
            }
        }
        Ok(acc)
    }
}

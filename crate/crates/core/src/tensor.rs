//! Symmetric tensors over `ℂ^d` in monomial-class form and the weighted
//! Hilbert scale `|·|_p` used for all norms.
//!
//! A symmetric tensor of degree `n` is stored by its distinct entries: for
//! each multi-index `α` with `|α| = n`, `v_α` is the common value of the
//! full tensor on every index tuple of type `α`. There are `n!/α!` such
//! tuples, which is the multiplicity applied in pairings and norms.
//! Pairings are bilinear (no conjugation).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multi_index::{count_in_degree, multi_indices, rank_in_degree, MultiIndex};
use crate::C64;

/// Diagonal weights `λ₁ … λ_d` defining `|ξ|_p² = Σ λᵢ^{2p} |ξᵢ|²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HilbertScale {
    weights: Vec<f64>,
}

impl HilbertScale {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("scale needs at least one weight".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "scale weights must be finite and >= 1, got {w}"
            )));
        }
        Ok(HilbertScale { weights })
    }

    /// `λᵢ = i + 1` for `i = 1 … d`.
    pub fn default_for(d: usize) -> Self {
        HilbertScale {
            weights: (1..=d).map(|i| (i + 1) as f64).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `|ξ|_p` for a vector; negative `p` gives the dual norm.
    pub fn norm(&self, xi: &[C64], p: i32) -> f64 {
        self.weights
            .iter()
            .zip(xi)
            .map(|(l, x)| l.powi(2 * p) * x.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `λ^{2pα} = Πᵢ λᵢ^{2p αᵢ}`
    pub fn weight(&self, alpha: &MultiIndex, p: i32) -> f64 {
        self.weights
            .iter()
            .zip(alpha.entries())
            .map(|(l, &a)| l.powi(2 * p * a as i32))
            .product()
    }
}

/// Scaled Euclidean accumulation that neither overflows nor underflows on
/// the squares of very small or very large terms.
pub(crate) fn scaled_norm(terms: impl Iterator<Item = f64>) -> f64 {
    let mut scale = 0.0f64;
    let mut ssq = 1.0f64;
    for t in terms {
        let a = t.abs();
        if a == 0.0 {
            continue;
        }
        if scale < a {
            ssq = 1.0 + ssq * (scale / a) * (scale / a);
            scale = a;
        } else {
            ssq += (a / scale) * (a / scale);
        }
    }
    scale * ssq.sqrt()
}

/// Degree-`n` symmetric tensor over `ℂ^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensor {
    dim: usize,
    degree: usize,
    coeffs: Vec<C64>,
}

impl SymTensor {
    pub fn zeros(dim: usize, degree: usize) -> Self {
        SymTensor {
            dim,
            degree,
            coeffs: vec![C64::new(0.0, 0.0); count_in_degree(dim, degree)],
        }
    }

    /// Coefficients in graded lexicographic order of the degree-`n` indices.
    pub fn from_coeffs(dim: usize, degree: usize, coeffs: Vec<C64>) -> Result<Self> {
        let expected = count_in_degree(dim, degree);
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: coeffs.len(),
            });
        }
        Ok(SymTensor { dim, degree, coeffs })
    }

    pub fn from_fn(dim: usize, degree: usize, mut f: impl FnMut(&MultiIndex) -> C64) -> Self {
        let coeffs = multi_indices(dim, degree).iter().map(&mut f).collect();
        SymTensor { dim, degree, coeffs }
    }

    /// `ξ^{⊗n}`, whose entries are `v_α = ξ^α`.
    pub fn rank_one(xi: &[C64], degree: usize) -> Self {
        SymTensor::from_fn(xi.len(), degree, |a| a.monomial(xi))
    }

    /// Constant tensor of degree 0.
    pub fn scalar(dim: usize, value: C64) -> Self {
        SymTensor {
            dim,
            degree: 0,
            coeffs: vec![value],
        }
    }

    /// Tensor with a single nonzero entry class.
    pub fn basis(dim: usize, alpha: &MultiIndex) -> Self {
        let mut t = SymTensor::zeros(dim, alpha.degree());
        t.coeffs[rank_in_degree(alpha)] = C64::new(1.0, 0.0);
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn get(&self, alpha: &MultiIndex) -> C64 {
        debug_assert_eq!(alpha.degree(), self.degree);
        self.coeffs[rank_in_degree(alpha)]
    }

    pub fn set(&mut self, alpha: &MultiIndex, value: C64) {
        debug_assert_eq!(alpha.degree(), self.degree);
        self.coeffs[rank_in_degree(alpha)] = value;
    }

    pub fn iter(&self) -> impl Iterator<Item = (MultiIndex, C64)> + '_ {
        multi_indices(self.dim, self.degree)
            .into_iter()
            .zip(self.coeffs.iter().copied())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm_sqr() == 0.0)
    }

    pub fn scale(&self, factor: C64) -> SymTensor {
        SymTensor {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add(&self, other: &SymTensor) -> Result<SymTensor> {
        self.check_same_shape(other)?;
        Ok(SymTensor {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    fn check_same_shape(&self, other: &SymTensor) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch {
                expected: self.degree,
                got: other.degree,
            });
        }
        Ok(())
    }

    /// Bilinear pairing `Σ_α (n!/α!) t_α s_α`.
    pub fn pairing(&self, other: &SymTensor) -> Result<C64> {
        self.check_same_shape(other)?;
        Ok(multi_indices(self.dim, self.degree)
            .iter()
            .zip(self.coeffs.iter().zip(&other.coeffs))
            .map(|(a, (t, s))| t * s * a.multinomial())
            .sum())
    }

    /// Pairing with `ξ^{⊗n}` without materializing the rank-one tensor.
    pub fn pair_rank_one(&self, xi: &[C64]) -> C64 {
        debug_assert_eq!(xi.len(), self.dim);
        multi_indices(self.dim, self.degree)
            .iter()
            .zip(&self.coeffs)
            .map(|(a, t)| t * a.monomial(xi) * a.multinomial())
            .sum()
    }

    /// `|T|_p = sqrt(Σ_α (n!/α!) λ^{2pα} |v_α|²)`.
    pub fn scale_norm(&self, scale: &HilbertScale, p: i32) -> f64 {
        debug_assert_eq!(scale.dim(), self.dim);
        scaled_norm(
            multi_indices(self.dim, self.degree)
                .iter()
                .zip(&self.coeffs)
                .map(|(a, v)| (a.multinomial() * scale.weight(a, p)).sqrt() * v.norm()),
        )
    }

    /// Symmetrized tensor product `T ⊗̂ S`.
    ///
    /// For a tuple of type `γ`, the fraction of its orderings whose first
    /// `a` slots have type `α` is `(a!/α!)(b!/β!)/(n!/γ!)`.
    pub fn symmetrize_product(&self, other: &SymTensor) -> Result<SymTensor> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let d = self.dim;
        let mut out = SymTensor::zeros(d, self.degree + other.degree);
        for (alpha, t) in self.iter() {
            if t.norm_sqr() == 0.0 {
                continue;
            }
            let wa = alpha.multinomial();
            for (beta, s) in other.iter() {
                let gamma = alpha.add(&beta);
                let w = wa * beta.multinomial() / gamma.multinomial();
                out.coeffs[rank_in_degree(&gamma)] += t * s * w;
            }
        }
        Ok(out)
    }

    /// View a degree-`m + n` tensor as a kernel with `m` output and `n`
    /// input slots: `f_{γ,δ} = v_{γ+δ}`.
    pub fn split(&self, out_degree: usize) -> Result<BiSymTensor> {
        if out_degree > self.degree {
            return Err(Error::DegreeMismatch {
                expected: self.degree,
                got: out_degree,
            });
        }
        let in_degree = self.degree - out_degree;
        Ok(BiSymTensor::from_fn(self.dim, out_degree, in_degree, |g, dl| {
            self.get(&g.add(dl))
        }))
    }
}

/// Kernel in `(ℂ^d)^{⊗̂m} ⊗ (ℂ^d)^{⊗̂n}`, symmetric within each group.
///
/// Stored row-major: rows are degree-`m` indices `γ`, columns degree-`n`
/// indices `δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiSymTensor {
    dim: usize,
    out_degree: usize,
    in_degree: usize,
    coeffs: Vec<C64>,
}

impl BiSymTensor {
    pub fn zeros(dim: usize, out_degree: usize, in_degree: usize) -> Self {
        let len = count_in_degree(dim, out_degree) * count_in_degree(dim, in_degree);
        BiSymTensor {
            dim,
            out_degree,
            in_degree,
            coeffs: vec![C64::new(0.0, 0.0); len],
        }
    }

    pub fn from_fn(
        dim: usize,
        out_degree: usize,
        in_degree: usize,
        mut f: impl FnMut(&MultiIndex, &MultiIndex) -> C64,
    ) -> Self {
        let rows = multi_indices(dim, out_degree);
        let cols = multi_indices(dim, in_degree);
        let mut coeffs = Vec::with_capacity(rows.len() * cols.len());
        for g in &rows {
            for dl in &cols {
                coeffs.push(f(g, dl));
            }
        }
        BiSymTensor {
            dim,
            out_degree,
            in_degree,
            coeffs,
        }
    }

    /// `u^{⊗m} ⊗ w^{⊗n}` scaled by `c`.
    pub fn rank_one(u: &[C64], w: &[C64], out_degree: usize, in_degree: usize, c: C64) -> Self {
        BiSymTensor::from_fn(u.len(), out_degree, in_degree, |g, dl| {
            c * g.monomial(u) * dl.monomial(w)
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn out_degree(&self) -> usize {
        self.out_degree
    }

    pub fn in_degree(&self) -> usize {
        self.in_degree
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    fn cols(&self) -> usize {
        count_in_degree(self.dim, self.in_degree)
    }

    pub fn get(&self, gamma: &MultiIndex, delta: &MultiIndex) -> C64 {
        self.coeffs[rank_in_degree(gamma) * self.cols() + rank_in_degree(delta)]
    }

    pub fn set(&mut self, gamma: &MultiIndex, delta: &MultiIndex, value: C64) {
        let cols = self.cols();
        self.coeffs[rank_in_degree(gamma) * cols + rank_in_degree(delta)] = value;
    }

    pub fn iter(&self) -> impl Iterator<Item = (MultiIndex, MultiIndex, C64)> + '_ {
        let cols = multi_indices(self.dim, self.in_degree);
        multi_indices(self.dim, self.out_degree)
            .into_iter()
            .flat_map(move |g| cols.clone().into_iter().map(move |dl| (g.clone(), dl)))
            .zip(self.coeffs.iter().copied())
            .map(|((g, dl), v)| (g, dl, v))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm_sqr() == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Contraction over the input slots:
    /// `result_γ = Σ_δ (n!/δ!) f_{γ,δ} s_δ`.
    pub fn contract(&self, s: &SymTensor) -> Result<SymTensor> {
        if s.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: s.dim(),
            });
        }
        if s.degree() != self.in_degree {
            return Err(Error::DegreeMismatch {
                expected: self.in_degree,
                got: s.degree(),
            });
        }
        let weighted: Vec<C64> = multi_indices(self.dim, self.in_degree)
            .iter()
            .zip(s.coeffs())
            .map(|(dl, v)| v * dl.multinomial())
            .collect();
        let cols = weighted.len();
        let coeffs = self
            .coeffs
            .chunks(cols.max(1))
            .map(|row| row.iter().zip(&weighted).map(|(f, v)| f * v).sum())
            .collect();
        SymTensor::from_coeffs(self.dim, self.out_degree, coeffs)
    }

    /// `⟨f | ξ^{⊗m} ⊗ η^{⊗n}⟩ = Σ (m!/γ!)(n!/δ!) f_{γδ} ξ^γ η^δ`.
    pub fn pair_rank_one(&self, xi: &[C64], eta: &[C64]) -> C64 {
        let rows: Vec<C64> = multi_indices(self.dim, self.out_degree)
            .iter()
            .map(|g| g.monomial(xi) * g.multinomial())
            .collect();
        let cols: Vec<C64> = multi_indices(self.dim, self.in_degree)
            .iter()
            .map(|dl| dl.monomial(eta) * dl.multinomial())
            .collect();
        let ncols = cols.len();
        self.coeffs
            .chunks(ncols.max(1))
            .zip(&rows)
            .map(|(row, r)| r * row.iter().zip(&cols).map(|(f, c)| f * c).sum::<C64>())
            .sum()
    }

    /// `|f|_{p_out, p_in}` with multiplicities `(m!/γ!)(n!/δ!)` and weights
    /// `λ^{2 p_out γ} λ^{2 p_in δ}`.
    pub fn scale_norm(&self, scale: &HilbertScale, p_out: i32, p_in: i32) -> f64 {
        self.scale_norm_with(scale, p_out, scale, p_in)
    }

    /// Like [`BiSymTensor::scale_norm`] with separate scales for the two sides.
    pub fn scale_norm_with(
        &self,
        out_scale: &HilbertScale,
        p_out: i32,
        in_scale: &HilbertScale,
        p_in: i32,
    ) -> f64 {
        let rows: Vec<f64> = multi_indices(self.dim, self.out_degree)
            .iter()
            .map(|g| g.multinomial() * out_scale.weight(g, p_out))
            .collect();
        let cols: Vec<f64> = multi_indices(self.dim, self.in_degree)
            .iter()
            .map(|dl| dl.multinomial() * in_scale.weight(dl, p_in))
            .collect();
        let ncols = cols.len();
        scaled_norm(self.coeffs.iter().enumerate().map(|(k, f)| {
            (rows[k / ncols] * cols[k % ncols]).sqrt() * f.norm()
        }))
    }
}

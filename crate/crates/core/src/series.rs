//! Truncated multivariate power series `Σ_{|α| ≤ N} c_α ξ^α`.
//!
//! All operations truncate eagerly at the series order `N`. Coefficients
//! are stored densely in graded lexicographic order (see
//! [`crate::multi_index`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multi_index::{count_up_to, graded_rank, multi_indices_up_to, MultiIndex};
use crate::C64;

/// Below this modulus of the constant term, [`PowerSeries::reciprocal`]
/// logs a conditioning warning.
const SMALL_CONSTANT: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerSeries {
    dim: usize,
    order: usize,
    coeffs: Vec<C64>,
    /// Advisory radius of convergence; `None` means entire / unknown.
    radius_hint: Option<f64>,
}

impl PowerSeries {
    pub fn zero(dim: usize, order: usize) -> Self {
        PowerSeries {
            dim,
            order,
            coeffs: vec![C64::new(0.0, 0.0); count_up_to(dim, order)],
            radius_hint: None,
        }
    }

    pub fn constant(dim: usize, order: usize, value: C64) -> Self {
        let mut s = PowerSeries::zero(dim, order);
        s.coeffs[0] = value;
        s
    }

    pub fn one(dim: usize, order: usize) -> Self {
        PowerSeries::constant(dim, order, C64::new(1.0, 0.0))
    }

    pub fn from_fn(dim: usize, order: usize, mut f: impl FnMut(&MultiIndex) -> C64) -> Self {
        PowerSeries {
            dim,
            order,
            coeffs: multi_indices_up_to(dim, order).iter().map(&mut f).collect(),
            radius_hint: None,
        }
    }

    pub fn from_coeffs(dim: usize, order: usize, coeffs: Vec<C64>) -> Result<Self> {
        let expected = count_up_to(dim, order);
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: coeffs.len(),
            });
        }
        Ok(PowerSeries {
            dim,
            order,
            coeffs,
            radius_hint: None,
        })
    }

    /// Series of `exp⟨x, ξ⟩` in `ξ`: `c_α = x^α / α!`.
    pub fn exp_linear(x: &[C64], order: usize) -> Self {
        PowerSeries::from_fn(x.len(), order, |a| a.monomial(x) / a.factorial())
    }

    /// Embed a univariate series as a function of coordinate `axis` of `ℂ^d`.
    pub fn lift(&self, dim: usize, axis: usize) -> Result<Self> {
        if self.dim != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: self.dim,
            });
        }
        if axis >= dim {
            return Err(Error::InvalidArgument(format!("axis {axis} out of range for d = {dim}")));
        }
        let mut out = PowerSeries::zero(dim, self.order);
        for k in 0..=self.order {
            out.coeffs[graded_rank(&MultiIndex::unit(dim, axis, k as u32))] = self.coeffs[k];
        }
        out.radius_hint = self.radius_hint;
        Ok(out)
    }

    pub fn with_radius_hint(mut self, radius: Option<f64>) -> Self {
        self.radius_hint = radius;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn radius_hint(&self) -> Option<f64> {
        self.radius_hint
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> C64 {
        if alpha.degree() > self.order {
            return C64::new(0.0, 0.0);
        }
        self.coeffs[graded_rank(alpha)]
    }

    pub fn set_coeff(&mut self, alpha: &MultiIndex, value: C64) -> Result<()> {
        if alpha.degree() > self.order {
            return Err(Error::DegreeTooHigh {
                degree: alpha.degree(),
                max: self.order,
            });
        }
        self.coeffs[graded_rank(alpha)] = value;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (MultiIndex, C64)> + '_ {
        multi_indices_up_to(self.dim, self.order)
            .into_iter()
            .zip(self.coeffs.iter().copied())
    }

    /// Largest degree carrying a nonzero coefficient.
    pub fn effective_degree(&self) -> Option<usize> {
        self.iter()
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(a, _)| a.degree())
            .max()
    }

    fn check_compatible(&self, other: &PowerSeries) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        if self.order != other.order {
            return Err(Error::TruncationMismatch {
                expected: self.order,
                got: other.order,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &PowerSeries) -> Result<PowerSeries> {
        self.check_compatible(other)?;
        Ok(PowerSeries {
            dim: self.dim,
            order: self.order,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
            radius_hint: min_radius(self.radius_hint, other.radius_hint),
        })
    }

    pub fn scale(&self, factor: C64) -> PowerSeries {
        PowerSeries {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
            ..self.clone()
        }
    }

    /// Truncated Cauchy product `c_γ = Σ_{α+β=γ} a_α b_β`.
    pub fn mul(&self, other: &PowerSeries) -> Result<PowerSeries> {
        self.check_compatible(other)?;
        let idx = multi_indices_up_to(self.dim, self.order);
        let mut coeffs = vec![C64::new(0.0, 0.0); idx.len()];
        for (i, a) in idx.iter().enumerate() {
            let ca = self.coeffs[i];
            if ca.norm_sqr() == 0.0 {
                continue;
            }
            let room = self.order - a.degree();
            for (j, b) in idx.iter().enumerate() {
                // idx is graded, so degrees only grow from here on.
                if b.degree() > room {
                    break;
                }
                coeffs[graded_rank(&a.add(b))] += ca * other.coeffs[j];
            }
        }
        Ok(PowerSeries {
            dim: self.dim,
            order: self.order,
            coeffs,
            radius_hint: min_radius(self.radius_hint, other.radius_hint),
        })
    }

    /// Multiplicative inverse by the graded recursion
    /// `b₀ = 1/a₀`, `b_γ = −(1/a₀) Σ_{0<β≤γ} a_β b_{γ−β}`.
    pub fn reciprocal(&self) -> Result<PowerSeries> {
        let a0 = self.coeffs[0];
        if a0.norm() == 0.0 {
            return Err(Error::SingularGerm(a0.norm()));
        }
        if a0.norm() < SMALL_CONSTANT {
            log::warn!(
                "reciprocal of a germ with small constant term |a0| = {:e}; radius hint kept",
                a0.norm()
            );
        }
        let inv0 = a0.inv();
        let idx = multi_indices_up_to(self.dim, self.order);
        let mut b = vec![C64::new(0.0, 0.0); idx.len()];
        b[0] = inv0;
        for (k, gamma) in idx.iter().enumerate().skip(1) {
            let mut acc = C64::new(0.0, 0.0);
            for_each_below(gamma, |beta| {
                if beta.degree() == 0 {
                    return;
                }
                let ab = self.coeffs[graded_rank(beta)];
                if ab.norm_sqr() != 0.0 {
                    let rest = gamma.checked_sub(beta).expect("beta <= gamma");
                    acc += ab * b[graded_rank(&rest)];
                }
            });
            b[k] = -inv0 * acc;
        }
        Ok(PowerSeries {
            dim: self.dim,
            order: self.order,
            coeffs: b,
            radius_hint: self.radius_hint,
        })
    }

    /// `Σ c_α ξ^α`. The caller is responsible for `ξ` lying inside the
    /// radius hint.
    pub fn eval(&self, xi: &[C64]) -> Result<C64> {
        if xi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: xi.len(),
            });
        }
        Ok(self
            .iter()
            .filter(|(_, c)| c.norm_sqr() != 0.0)
            .map(|(a, c)| c * a.monomial(xi))
            .sum())
    }
}

fn min_radius(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Visit every multi-index `β ≤ γ` componentwise.
pub(crate) fn for_each_below(gamma: &MultiIndex, mut f: impl FnMut(&MultiIndex)) {
    let bounds = gamma.entries();
    let mut current = vec![0u32; bounds.len()];
    loop {
        f(&MultiIndex::new(current.clone()));
        let mut i = 0;
        loop {
            if i == bounds.len() {
                return;
            }
            if current[i] < bounds[i] {
                current[i] += 1;
                break;
            }
            current[i] = 0;
            i += 1;
        }
    }
}

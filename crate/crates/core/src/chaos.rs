//! Test functions `φ = Σ ⟨P_n | φ_n⟩` and distributions `Φ = Σ Q_n(Φ_n)`
//! as graded coefficient families, with the `(p, q)` norms
//!
//! ```text
//! ‖φ‖²_{p,q}   = Σ (n!)² 2^{qn} |φ_n|_p²
//! ‖Φ‖²_{−p,−q} = Σ 2^{−qn} |Φ_n|_{−p}²
//! ```
//!
//! `(p, q)` select a view on the same data; nothing is stored per space.

use std::sync::Arc;

use crate::appell::AppellSystem;
use crate::error::{Error, Result};
use crate::multi_index::{factorial, multi_indices, multi_indices_up_to};
use crate::series::PowerSeries;
use crate::tensor::{scaled_norm, SymTensor};
use crate::C64;

fn check_family(sys: &AppellSystem, coeffs: &[SymTensor]) -> Result<()> {
    if coeffs.len() != sys.order() + 1 {
        return Err(Error::TruncationMismatch {
            expected: sys.order(),
            got: coeffs.len().saturating_sub(1),
        });
    }
    for (n, t) in coeffs.iter().enumerate() {
        if t.dim() != sys.dim() {
            return Err(Error::DimensionMismatch {
                expected: sys.dim(),
                got: t.dim(),
            });
        }
        if t.degree() != n {
            return Err(Error::DegreeMismatch {
                expected: n,
                got: t.degree(),
            });
        }
    }
    Ok(())
}

fn zero_family(sys: &AppellSystem) -> Vec<SymTensor> {
    (0..=sys.order()).map(|n| SymTensor::zeros(sys.dim(), n)).collect()
}

fn single_family(sys: &AppellSystem, t: SymTensor) -> Result<Vec<SymTensor>> {
    let n = t.degree();
    if n > sys.order() {
        return Err(Error::DegreeTooHigh {
            degree: n,
            max: sys.order(),
        });
    }
    let mut coeffs = zero_family(sys);
    coeffs[n] = t;
    check_family(sys, &coeffs)?;
    Ok(coeffs)
}

fn two_power(q: i32, n: usize) -> f64 {
    2f64.powf(q as f64 * n as f64)
}

/// Test function in the P-basis.
#[derive(Clone, Debug)]
pub struct ChaosVector {
    sys: Arc<AppellSystem>,
    coeffs: Vec<SymTensor>,
}

impl PartialEq for ChaosVector {
    fn eq(&self, other: &Self) -> bool {
        self.sys.is_compatible(&other.sys) && self.coeffs == other.coeffs
    }
}

impl ChaosVector {
    pub fn new(sys: Arc<AppellSystem>, coeffs: Vec<SymTensor>) -> Result<Self> {
        check_family(&sys, &coeffs)?;
        Ok(ChaosVector { sys, coeffs })
    }

    pub fn zero(sys: Arc<AppellSystem>) -> Self {
        let coeffs = zero_family(&sys);
        ChaosVector { sys, coeffs }
    }

    pub fn constant(sys: Arc<AppellSystem>, value: C64) -> Self {
        let mut v = ChaosVector::zero(sys);
        v.coeffs[0] = SymTensor::scalar(v.sys.dim(), value);
        v
    }

    /// `⟨P_n | t⟩` for a single degree `n = t.degree()`.
    pub fn single(sys: Arc<AppellSystem>, t: SymTensor) -> Result<Self> {
        let coeffs = single_family(&sys, t)?;
        Ok(ChaosVector { sys, coeffs })
    }

    pub fn system(&self) -> &Arc<AppellSystem> {
        &self.sys
    }

    pub fn coeffs(&self) -> &[SymTensor] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<SymTensor> {
        self.coeffs
    }

    pub fn add(&self, other: &ChaosVector) -> Result<ChaosVector> {
        if !self.sys.is_compatible(&other.sys) {
            return Err(Error::SystemMismatch);
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_>>()?;
        Ok(ChaosVector {
            sys: self.sys.clone(),
            coeffs,
        })
    }

    pub fn scale(&self, factor: C64) -> ChaosVector {
        ChaosVector {
            sys: self.sys.clone(),
            coeffs: self.coeffs.iter().map(|t| t.scale(factor)).collect(),
        }
    }

    /// `‖φ‖_{p,q}`.
    pub fn test_norm(&self, p: i32, q: i32) -> f64 {
        let scale = self.sys.scale();
        scaled_norm(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(n, t)| factorial(n) * two_power(q, n).sqrt() * t.scale_norm(scale, p)),
        )
    }

    /// `φ(x) = Σ ⟨P_n(x) | φ_n⟩`, valid at complex points.
    pub fn eval(&self, x: &[C64]) -> Result<C64> {
        let ps = self.sys.p_tensors(x)?;
        let mut acc = C64::new(0.0, 0.0);
        for (p, t) in ps.iter().zip(&self.coeffs) {
            acc += p.pairing(t)?;
        }
        Ok(acc)
    }

    /// Monomial coefficients `c_α` of `φ(x) = Σ c_α x^α`.
    pub fn to_monomial(&self) -> PowerSeries {
        let d = self.sys.dim();
        let mut out = vec![C64::new(0.0, 0.0); crate::multi_index::count_up_to(d, self.sys.order())];
        for (n, t) in self.coeffs.iter().enumerate() {
            for (gamma, v) in multi_indices(d, n).iter().zip(t.coeffs()) {
                if v.norm_sqr() == 0.0 {
                    continue;
                }
                let w = v * gamma.multinomial();
                for (alpha, k) in self.sys.kernel_row(gamma) {
                    out[crate::multi_index::graded_rank(&alpha)] += w * k;
                }
            }
        }
        PowerSeries::from_coeffs(d, self.sys.order(), out).expect("shape")
    }

    /// Unique P-basis coefficients of a polynomial of degree `≤ N`, by
    /// back substitution through the unitriangular kernel table.
    pub fn to_appell(poly: &PowerSeries, sys: Arc<AppellSystem>) -> Result<ChaosVector> {
        if poly.dim() != sys.dim() {
            return Err(Error::DimensionMismatch {
                expected: sys.dim(),
                got: poly.dim(),
            });
        }
        if let Some(deg) = poly.effective_degree() {
            if deg > sys.order() {
                return Err(Error::DegreeTooHigh {
                    degree: deg,
                    max: sys.order(),
                });
            }
        }
        let d = sys.dim();
        let order = sys.order();
        // Residual monomial coefficients still to be explained.
        let mut residual: Vec<C64> = multi_indices_up_to(d, order)
            .iter()
            .map(|a| poly.coeff(a))
            .collect();
        let mut coeffs = zero_family(&sys);
        for n in (0..=order).rev() {
            for (rank, gamma) in multi_indices(d, n).iter().enumerate() {
                let top = residual[crate::multi_index::graded_rank(gamma)];
                if top.norm_sqr() == 0.0 {
                    continue;
                }
                let v = top / gamma.multinomial();
                coeffs[n].coeffs_mut()[rank] = v;
                let w = v * gamma.multinomial();
                for (alpha, k) in sys.kernel_row(gamma) {
                    residual[crate::multi_index::graded_rank(&alpha)] -= w * k;
                }
            }
        }
        ChaosVector::new(sys, coeffs)
    }

    /// The distribution `∫ φ · (·) dμ` in the Q-basis:
    /// `Φ_m[γ] = ∫ φ v_γ^{(m)} dμ / m!`, by tensorized quadrature.
    pub fn embed_l2(&self) -> Result<ChaosFunctional> {
        let sys = &self.sys;
        let d = sys.dim();
        let order = sys.order();
        let nodes = order + 2;
        let mut acc: Vec<Vec<C64>> = (0..=order)
            .map(|m| vec![C64::new(0.0, 0.0); crate::multi_index::count_in_degree(d, m)])
            .collect();
        if d > 3 {
            return Err(Error::Unsupported(format!(
                "L2 embedding uses tensorized quadrature, limited to d <= 3, got d = {d}"
            )));
        }
        let rules: Vec<_> = sys
            .measure()
            .components()
            .iter()
            .map(|c| c.quadrature_rule(nodes))
            .collect();
        crate::quadrature::for_each_tensor_node(&rules, |x, w| {
            let xc: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
            let mono = sys.monomials(&xc);
            let ps: Vec<SymTensor> = (0..=order).map(|n| sys.p_tensor_from_monomials(n, &mono)).collect();
            let phi_x: C64 = ps
                .iter()
                .zip(&self.coeffs)
                .map(|(p, t)| p.pairing(t).expect("family shape checked on construction"))
                .sum();
            let weighted = phi_x * w;
            for (m, p) in ps.iter().enumerate() {
                for (slot, v) in acc[m].iter_mut().zip(p.coeffs()) {
                    *slot += weighted * v;
                }
            }
        });
        let coeffs = acc
            .into_iter()
            .enumerate()
            .map(|(m, c)| {
                let c = c.into_iter().map(|v| v / factorial(m)).collect();
                SymTensor::from_coeffs(d, m, c)
            })
            .collect::<Result<_>>()?;
        ChaosFunctional::new(sys.clone(), coeffs)
    }
}

/// Distribution in the Q-basis.
#[derive(Clone, Debug)]
pub struct ChaosFunctional {
    sys: Arc<AppellSystem>,
    coeffs: Vec<SymTensor>,
}

impl PartialEq for ChaosFunctional {
    fn eq(&self, other: &Self) -> bool {
        self.sys.is_compatible(&other.sys) && self.coeffs == other.coeffs
    }
}

impl ChaosFunctional {
    pub fn new(sys: Arc<AppellSystem>, coeffs: Vec<SymTensor>) -> Result<Self> {
        check_family(&sys, &coeffs)?;
        Ok(ChaosFunctional { sys, coeffs })
    }

    pub fn zero(sys: Arc<AppellSystem>) -> Self {
        let coeffs = zero_family(&sys);
        ChaosFunctional { sys, coeffs }
    }

    pub fn constant(sys: Arc<AppellSystem>, value: C64) -> Self {
        let mut f = ChaosFunctional::zero(sys);
        f.coeffs[0] = SymTensor::scalar(f.sys.dim(), value);
        f
    }

    /// `Q_n(t)` for `n = t.degree()`.
    pub fn single(sys: Arc<AppellSystem>, t: SymTensor) -> Result<Self> {
        let coeffs = single_family(&sys, t)?;
        Ok(ChaosFunctional { sys, coeffs })
    }

    pub fn system(&self) -> &Arc<AppellSystem> {
        &self.sys
    }

    pub fn coeffs(&self) -> &[SymTensor] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<SymTensor> {
        self.coeffs
    }

    pub fn scale(&self, factor: C64) -> ChaosFunctional {
        ChaosFunctional {
            sys: self.sys.clone(),
            coeffs: self.coeffs.iter().map(|t| t.scale(factor)).collect(),
        }
    }

    /// `‖Φ‖_{−p,−q}`; `p` and `q` are the positive view indices.
    pub fn dual_norm(&self, p: i32, q: i32) -> f64 {
        let scale = self.sys.scale();
        scaled_norm(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(n, t)| two_power(-q, n).sqrt() * t.scale_norm(scale, -p)),
        )
    }
}

//! S- and C-transforms on truncated coefficient families.
//!
//! `S Φ(θ) = Σ_n ⟨Φ_n | θ^{⊗n}⟩` is the pairing of `Φ` with `e_μ(θ; ·)`;
//! `C φ(ξ) = Σ_n ⟨ξ^{⊗n} | φ_n⟩` is the pairing of `ρ_μ(−ξ)` with `φ`, and
//! also equals `∫ φ(x + ξ) dμ(x)`. Both have Taylor coefficients
//! `(n!/α!) t_α` at `|α| = n`, so the germ conversions are exact.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::appell::AppellSystem;
use crate::chaos::{ChaosFunctional, ChaosVector};
use crate::error::{Error, Result};
use crate::multi_index::MultiIndex;
use crate::series::PowerSeries;
use crate::tensor::{HilbertScale, SymTensor};
use crate::C64;

/// Which radius bounds the neighborhood `{θ : |θ|_p² < bound}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `2^{−q}`, the neighborhood on which `e_μ(θ; ·)` has finite `(p, q)` norm.
    #[default]
    TestSpace,
    /// `2^{−q−1}`, the smaller neighborhood used for operator symbols.
    Symbol,
}

/// The neighborhood `U_{p,q} = {θ : |θ|_p² < bound(q)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct Locality {
    pub p: i32,
    pub q: i32,
    #[serde(default)]
    pub bound: BoundKind,
}

impl Locality {
    pub fn new(p: i32, q: i32, bound: BoundKind) -> Self {
        Locality { p, q, bound }
    }

    pub fn bound_value(&self) -> f64 {
        match self.bound {
            BoundKind::TestSpace => 2f64.powi(-self.q),
            BoundKind::Symbol => 2f64.powi(-self.q - 1),
        }
    }

    pub fn contains(&self, scale: &HilbertScale, theta: &[C64]) -> bool {
        scale.norm(theta, self.p).powi(2) < self.bound_value()
    }
}

/// Truncated germ of a function holomorphic at 0, with its declared domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GermFunction {
    pub series: PowerSeries,
    pub domain: Locality,
}

impl GermFunction {
    pub fn new(series: PowerSeries, domain: Locality) -> Self {
        GermFunction { series, domain }
    }

    pub fn eval(&self, theta: &[C64]) -> Result<C64> {
        self.series.eval(theta)
    }
}

fn family_to_series(d: usize, order: usize, coeffs: &[SymTensor]) -> PowerSeries {
    let mut s = PowerSeries::zero(d, order);
    for t in coeffs {
        for (alpha, v) in t.iter() {
            s.set_coeff(&alpha, v * alpha.multinomial()).expect("degree <= order");
        }
    }
    s
}

fn series_to_family(series: &PowerSeries, sys: &AppellSystem) -> Result<Vec<SymTensor>> {
    if series.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: series.dim(),
        });
    }
    if let Some(deg) = series.effective_degree() {
        if deg > sys.order() {
            return Err(Error::DegreeTooHigh {
                degree: deg,
                max: sys.order(),
            });
        }
    }
    Ok((0..=sys.order())
        .map(|n| SymTensor::from_fn(sys.dim(), n, |a| series.coeff(a) / a.multinomial()))
        .collect())
}

/// `S Φ(θ)`. With `locality = Some(u)` the point must lie in `u`
/// (measured in the scale of `Φ`'s system); `None` skips the check, which
/// is always safe for truncated data.
pub fn s_transform(big_phi: &ChaosFunctional, theta: &[C64], locality: Option<&Locality>) -> Result<C64> {
    let sys = big_phi.system();
    if theta.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: theta.len(),
        });
    }
    if let Some(u) = locality {
        let r2 = sys.scale().norm(theta, u.p).powi(2);
        if r2 >= u.bound_value() {
            return Err(Error::Domain(format!(
                "|theta|_{}^2 = {r2} is not below {} (q = {})",
                u.p,
                u.bound_value(),
                u.q
            )));
        }
    }
    Ok(big_phi.coeffs().iter().map(|t| t.pair_rank_one(theta)).sum())
}

/// Taylor series of `S Φ`, tagged with the default domain `U_{0,0}`.
pub fn s_transform_series(big_phi: &ChaosFunctional) -> GermFunction {
    let sys = big_phi.system();
    GermFunction::new(
        family_to_series(sys.dim(), sys.order(), big_phi.coeffs()),
        Locality::default(),
    )
}

/// The unique `Φ` with `S Φ = G`.
pub fn inverse_s(germ: &GermFunction, sys: Arc<AppellSystem>) -> Result<ChaosFunctional> {
    let coeffs = series_to_family(&germ.series, &sys)?;
    ChaosFunctional::new(sys, coeffs)
}

/// `C φ(ξ) = Σ_n ⟨ξ^{⊗n} | φ_n⟩`.
pub fn c_transform_series(phi: &ChaosVector, xi: &[C64]) -> Result<C64> {
    let sys = phi.system();
    if xi.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: xi.len(),
        });
    }
    Ok(phi.coeffs().iter().map(|t| t.pair_rank_one(xi)).sum())
}

/// Taylor series of `C φ`.
pub fn c_transform_germ(phi: &ChaosVector) -> PowerSeries {
    let sys = phi.system();
    family_to_series(sys.dim(), sys.order(), phi.coeffs())
}

/// `∫ φ(x + ξ) dμ(x)` by quadrature, for real shifts.
pub fn c_transform_integral(phi: &ChaosVector, xi: &[f64]) -> Result<C64> {
    let sys = phi.system();
    if xi.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: xi.len(),
        });
    }
    let poly = phi.to_monomial();
    let nodes = sys.order() / 2 + 2;
    sys.measure().integrate(nodes, |x| {
        let shifted: Vec<C64> = x.iter().zip(xi).map(|(a, b)| C64::new(a + b, 0.0)).collect();
        poly.eval(&shifted).expect("dimension checked")
    })
}

/// `sup_θ |C φ(θ) − S(embed φ)(θ)|` over the grid, for any system.
pub fn transform_deviation(phi: &ChaosVector, grid: &[Vec<C64>]) -> Result<f64> {
    let embedded = phi.embed_l2()?;
    let mut worst = 0.0f64;
    for theta in grid {
        let c = c_transform_series(phi, theta)?;
        let s = s_transform(&embedded, theta, None)?;
        worst = worst.max((c - s).norm());
    }
    Ok(worst)
}

/// [`transform_deviation`] restricted to Gaussian systems, where the C-
/// and S-transforms coincide.
pub fn gaussian_coincidence(phi: &ChaosVector, grid: &[Vec<C64>]) -> Result<f64> {
    if !phi.system().measure().is_gaussian() {
        return Err(Error::Unsupported(
            "the C/S coincidence holds for Gaussian measures only".into(),
        ));
    }
    transform_deviation(phi, grid)
}

/// Tensor grid over `[−0.5, 0.5]^d` with `per_axis` real points per axis.
pub fn sample_grid(d: usize, per_axis: usize) -> Vec<Vec<C64>> {
    let per_axis = per_axis.max(2);
    let axis: Vec<f64> = (0..per_axis)
        .map(|i| -0.5 + i as f64 / (per_axis - 1) as f64)
        .collect();
    let mut grid = vec![Vec::new()];
    for _ in 0..d {
        grid = grid
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&a| {
                    let mut q = p.clone();
                    q.push(C64::new(a, 0.0));
                    q
                })
            })
            .collect();
    }
    grid
}

/// Monomial coefficients of `θ ↦ ⟨a, θ⟩`.
pub fn linear_form(a: &[C64], order: usize) -> PowerSeries {
    let d = a.len();
    let mut s = PowerSeries::zero(d, order);
    if order >= 1 {
        for (i, ai) in a.iter().enumerate() {
            s.set_coeff(&MultiIndex::unit(d, i, 1), *ai).expect("order >= 1");
        }
    }
    s
}

//! Catalog of one-dimensional measures and their products on ℝ^d.
//!
//! Every catalog entry has an analytic Laplace transform at the origin and
//! closed-form moments. New entries need: a moment recurrence, a closed-form
//! Laplace transform with its radius, a support size, and a quadrature rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multi_index::{factorial, MultiIndex};
use crate::quadrature::{self, for_each_tensor_node, Rule};
use crate::series::PowerSeries;
use crate::C64;

/// Highest moment order kept in a [`ProductMeasure`]'s moment table.
pub const MAX_MOMENT_ORDER: usize = 48;

/// Tail mass below which the Poisson sum is cut off.
const POISSON_TAIL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComponentMeasure {
    Gaussian { mean: f64, variance: f64 },
    Gamma { shape: f64, scale: f64 },
    Poisson { rate: f64 },
    Uniform { a: f64, b: f64 },
    TwoPoint { x1: f64, x2: f64, p1: f64 },
}

impl ComponentMeasure {
    pub fn standard_gaussian() -> Self {
        ComponentMeasure::Gaussian {
            mean: 0.0,
            variance: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        use ComponentMeasure::*;
        let ok = match *self {
            Gaussian { mean, variance } => mean.is_finite() && variance.is_finite() && variance > 0.0,
            Gamma { shape, scale } => shape.is_finite() && scale.is_finite() && shape > 0.0 && scale > 0.0,
            Poisson { rate } => rate.is_finite() && rate > 0.0,
            Uniform { a, b } => a.is_finite() && b.is_finite() && a < b,
            TwoPoint { x1, x2, p1 } => x1.is_finite() && x2.is_finite() && (0.0..=1.0).contains(&p1),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidMeasure(format!("{self:?}")))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ComponentMeasure::Gaussian { .. } => "gaussian",
            ComponentMeasure::Gamma { .. } => "gamma",
            ComponentMeasure::Poisson { .. } => "poisson",
            ComponentMeasure::Uniform { .. } => "uniform",
            ComponentMeasure::TwoPoint { .. } => "two_point",
        }
    }

    /// Raw moments `m_0 … m_{kmax}`.
    pub fn moments(&self, kmax: usize) -> Vec<f64> {
        use ComponentMeasure::*;
        let mut m = vec![0.0; kmax + 1];
        m[0] = 1.0;
        match *self {
            Gaussian { mean, variance } => {
                for k in 1..=kmax {
                    let prev2 = if k >= 2 { m[k - 2] } else { 0.0 };
                    m[k] = mean * m[k - 1] + (k - 1) as f64 * variance * prev2;
                }
            }
            Gamma { shape, scale } => {
                for k in 1..=kmax {
                    m[k] = m[k - 1] * scale * (shape + (k - 1) as f64);
                }
            }
            Poisson { rate } => {
                // m_{k+1} = λ Σ_j C(k, j) m_j
                for k in 0..kmax {
                    let mut binom = 1.0;
                    let mut acc = 0.0;
                    for j in 0..=k {
                        acc += binom * m[j];
                        binom = binom * (k - j) as f64 / (j + 1) as f64;
                    }
                    m[k + 1] = rate * acc;
                }
            }
            Uniform { a, b } => {
                for (k, mk) in m.iter_mut().enumerate().skip(1) {
                    // (b^{k+1} − a^{k+1}) / ((k+1)(b−a)) = Σ_j a^j b^{k−j} / (k+1)
                    let s: f64 = (0..=k).map(|j| a.powi(j as i32) * b.powi((k - j) as i32)).sum();
                    *mk = s / (k + 1) as f64;
                }
            }
            TwoPoint { x1, x2, p1 } => {
                for (k, mk) in m.iter_mut().enumerate().skip(1) {
                    *mk = p1 * x1.powi(k as i32) + (1.0 - p1) * x2.powi(k as i32);
                }
            }
        }
        m
    }

    /// Radius of the disc on which the Laplace transform is analytic.
    pub fn laplace_radius(&self) -> f64 {
        match *self {
            ComponentMeasure::Gamma { scale, .. } => 1.0 / scale,
            _ => f64::INFINITY,
        }
    }

    /// Closed-form `L(ξ) = E[e^{xξ}]`; the caller checks the radius.
    pub fn laplace_closed(&self, xi: C64) -> C64 {
        use ComponentMeasure::*;
        match *self {
            Gaussian { mean, variance } => (xi * mean + xi * xi * (0.5 * variance)).exp(),
            Gamma { shape, scale } => (-(C64::new(1.0, 0.0) - xi * scale).ln() * shape).exp(),
            Poisson { rate } => ((xi.exp() - 1.0) * rate).exp(),
            Uniform { a, b } => {
                let z = xi * (b - a);
                // e^{aξ} (e^z − 1)/z, with the series near 0
                let ratio = if z.norm() < 1e-4 {
                    C64::new(1.0, 0.0) + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
                } else {
                    (z.exp() - 1.0) / z
                };
                (xi * a).exp() * ratio
            }
            TwoPoint { x1, x2, p1 } => (xi * x1).exp() * p1 + (xi * x2).exp() * (1.0 - p1),
        }
    }

    /// Univariate Laplace series `Σ m_k ξ^k / k!` with the radius as hint.
    pub fn laplace_series(&self, order: usize) -> PowerSeries {
        let m = self.moments(order);
        let coeffs = (0..=order).map(|k| C64::new(m[k] / factorial(k), 0.0)).collect();
        let radius = self.laplace_radius();
        PowerSeries::from_coeffs(1, order, coeffs)
            .expect("univariate length")
            .with_radius_hint(radius.is_finite().then_some(radius))
    }

    /// Number of support points; `None` for infinite support.
    pub fn support_size(&self) -> Option<usize> {
        match *self {
            ComponentMeasure::TwoPoint { x1, x2, p1 } => {
                if x1 == x2 || p1 == 0.0 || p1 == 1.0 {
                    Some(1)
                } else {
                    Some(2)
                }
            }
            _ => None,
        }
    }

    /// A rule exact for polynomials of degree `≤ 2·order − 1` (Poisson: up
    /// to the tail cutoff; two-point: exact for every function).
    pub fn quadrature_rule(&self, order: usize) -> Rule {
        use ComponentMeasure::*;
        let order = order.max(1);
        match *self {
            Gaussian { mean, variance } => quadrature::gauss_hermite(order, mean, variance),
            Gamma { shape, scale } => quadrature::gauss_laguerre(order, shape, scale),
            Uniform { a, b } => quadrature::gauss_legendre(order, a, b),
            Poisson { rate } => poisson_rule(rate, 2 * order - 1),
            TwoPoint { x1, x2, p1 } => Rule {
                nodes: vec![x1, x2],
                weights: vec![p1, 1.0 - p1],
            },
        }
    }

    /// Polynomial `h_n` (ascending coefficients) with `p^{(n)} = h_n · p`
    /// for the smooth density `p`; only the Gaussian qualifies.
    pub fn density_derivative_ratio(&self, n: usize) -> Result<Vec<f64>> {
        let ComponentMeasure::Gaussian { mean, variance } = *self else {
            return Err(Error::Unsupported(format!(
                "{} has no smooth positive density on all of R with the required decay",
                self.name()
            )));
        };
        // (log p)' = −(x − m)/σ², so h_{k+1} = h_k' − ((x − m)/σ²) h_k.
        let mut h = vec![1.0];
        for _ in 0..n {
            let mut next = vec![0.0; h.len() + 1];
            for (j, c) in h.iter().enumerate().skip(1) {
                next[j - 1] += j as f64 * c;
            }
            for (j, c) in h.iter().enumerate() {
                next[j + 1] -= c / variance;
                next[j] += c * mean / variance;
            }
            h = next;
        }
        Ok(h)
    }
}

/// Poisson weights at `0 … K`, with `K` large enough that the tail mass is
/// below the cutoff and the terms `k^deg P(k)` have stopped contributing.
fn poisson_rule(rate: f64, deg: usize) -> Rule {
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut p = (-rate).exp();
    let mut cumulative = 0.0;
    let scale = ComponentMeasure::Poisson { rate }.moments(deg)[deg].max(1.0);
    let mut k = 0usize;
    loop {
        nodes.push(k as f64);
        weights.push(p);
        cumulative += p;
        let tail = (1.0 - cumulative).max(0.0);
        let contribution = p * (k as f64).powi(deg as i32);
        if k as f64 > rate && tail < POISSON_TAIL && contribution < 1e-17 * scale {
            break;
        }
        if k > 2000 {
            break;
        }
        k += 1;
        p *= rate / k as f64;
    }
    Rule { nodes, weights }
}

/// Product of one-dimensional components, one per coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ComponentMeasure>", into = "Vec<ComponentMeasure>")]
pub struct ProductMeasure {
    components: Vec<ComponentMeasure>,
    #[serde(skip)]
    moments: Vec<Vec<f64>>,
}

impl TryFrom<Vec<ComponentMeasure>> for ProductMeasure {
    type Error = Error;

    fn try_from(components: Vec<ComponentMeasure>) -> Result<Self> {
        ProductMeasure::new(components)
    }
}

impl From<ProductMeasure> for Vec<ComponentMeasure> {
    fn from(m: ProductMeasure) -> Self {
        m.components
    }
}

impl ProductMeasure {
    pub fn new(components: Vec<ComponentMeasure>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidMeasure("product of zero components".into()));
        }
        for c in &components {
            c.validate()?;
        }
        let moments = components.iter().map(|c| c.moments(MAX_MOMENT_ORDER)).collect();
        Ok(ProductMeasure { components, moments })
    }

    /// `d` copies of the same component.
    pub fn iid(component: ComponentMeasure, d: usize) -> Result<Self> {
        ProductMeasure::new(vec![component; d])
    }

    pub fn standard_gaussian(d: usize) -> Self {
        ProductMeasure::iid(ComponentMeasure::standard_gaussian(), d).expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[ComponentMeasure] {
        &self.components
    }

    pub fn is_gaussian(&self) -> bool {
        self.components
            .iter()
            .all(|c| matches!(c, ComponentMeasure::Gaussian { .. }))
    }

    /// Mixed moment `E[x^α] = Πᵢ m^{(i)}_{αᵢ}`.
    pub fn moment(&self, alpha: &MultiIndex) -> Result<f64> {
        if alpha.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: alpha.dim(),
            });
        }
        let mut acc = 1.0;
        for (m, &a) in self.moments.iter().zip(alpha.entries()) {
            let a = a as usize;
            if a > MAX_MOMENT_ORDER {
                return Err(Error::MomentOutOfRange {
                    order: a,
                    max: MAX_MOMENT_ORDER,
                });
            }
            acc *= m[a];
        }
        Ok(acc)
    }

    /// `c_α = Πᵢ m^{(i)}_{αᵢ} / αᵢ!` up to total degree `order`.
    pub fn laplace_series(&self, order: usize) -> Result<PowerSeries> {
        let d = self.dim();
        let mut acc = PowerSeries::one(d, order);
        for (i, c) in self.components.iter().enumerate() {
            acc = acc.mul(&c.laplace_series(order).lift(d, i)?)?;
        }
        Ok(acc.with_radius_hint(self.laplace_radius_hint()))
    }

    /// Smallest component radius, `None` if all are entire.
    pub fn laplace_radius_hint(&self) -> Option<f64> {
        let r = self
            .components
            .iter()
            .map(|c| c.laplace_radius())
            .fold(f64::INFINITY, f64::min);
        r.is_finite().then_some(r)
    }

    /// Closed-form `L_μ(ξ)`, failing outside the polydisc of analyticity.
    pub fn laplace_closed(&self, xi: &[C64]) -> Result<C64> {
        if xi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: xi.len(),
            });
        }
        let mut acc = C64::new(1.0, 0.0);
        for (c, x) in self.components.iter().zip(xi) {
            let r = c.laplace_radius();
            if x.norm() >= r {
                return Err(Error::Domain(format!(
                    "|xi| = {} is not inside the Laplace radius {r} of the {} component",
                    x.norm(),
                    c.name()
                )));
            }
            acc *= c.laplace_closed(*x);
        }
        Ok(acc)
    }

    /// Tensorized Gauss-type quadrature of `f` against the measure.
    pub fn integrate(&self, order: usize, f: impl Fn(&[f64]) -> C64) -> Result<C64> {
        if self.dim() > 3 {
            return Err(Error::Unsupported(format!(
                "tensorized quadrature is limited to d <= 3, got d = {}",
                self.dim()
            )));
        }
        let rules: Vec<Rule> = self.components.iter().map(|c| c.quadrature_rule(order)).collect();
        let mut acc = C64::new(0.0, 0.0);
        for_each_tensor_node(&rules, |x, w| acc += f(x) * w);
        Ok(acc)
    }

    /// Every component has more than `order` support points, so no nonzero
    /// polynomial of degree `≤ order` vanishes almost everywhere.
    pub fn check_nondegenerate(&self, order: usize) -> bool {
        self.components
            .iter()
            .all(|c| c.support_size().is_none_or(|s| s > order))
    }

    /// Smallest finite support size over the components.
    pub fn min_support(&self) -> Option<usize> {
        self.components.iter().filter_map(|c| c.support_size()).min()
    }
}

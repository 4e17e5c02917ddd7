//! One-dimensional Gauss rules from three-term recurrence coefficients
//! (Golub–Welsch), and their tensor products.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights of a discrete measure approximating (or equal to) a
/// probability measure on ℝ.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

/// Gauss rule with `n` nodes for the monic recurrence
/// `π_{k+1}(x) = (x − a_k) π_k(x) − b_k π_{k−1}(x)`, total mass 1.
///
/// `a` needs `n` entries and `b` needs `n − 1` entries (`b₁ … b_{n−1}`).
pub fn golub_welsch(a: &[f64], b: &[f64]) -> Rule {
    let n = a.len();
    assert_eq!(b.len() + 1, n.max(1), "recurrence length mismatch");
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jacobi[(i, i)] = a[i];
        if i + 1 < n {
            let off = b[i].sqrt();
            jacobi[(i, i + 1)] = off;
            jacobi[(i + 1, i)] = off;
        }
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| (eig.eigenvalues[j], eig.eigenvectors[(0, j)].powi(2)))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1 / total).collect(),
    }
}

/// Gauss–Hermite rule for `N(mean, variance)`.
pub fn gauss_hermite(n: usize, mean: f64, variance: f64) -> Rule {
    let a = vec![mean; n];
    let b: Vec<f64> = (1..n).map(|k| k as f64 * variance).collect();
    golub_welsch(&a, &b)
}

/// Generalized Gauss–Laguerre rule for `Gamma(shape, scale)`.
pub fn gauss_laguerre(n: usize, shape: f64, scale: f64) -> Rule {
    let a: Vec<f64> = (0..n).map(|k| scale * (2.0 * k as f64 + shape)).collect();
    let b: Vec<f64> = (1..n)
        .map(|k| scale * scale * k as f64 * (k as f64 + shape - 1.0))
        .collect();
    golub_welsch(&a, &b)
}

/// Gauss–Legendre rule for the uniform distribution on `[lo, hi]`.
pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> Rule {
    let half = 0.5 * (hi - lo);
    let a = vec![0.5 * (lo + hi); n];
    let b: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            half * half * k * k / (4.0 * k * k - 1.0)
        })
        .collect();
    golub_welsch(&a, &b)
}

/// Visit every node of the tensor-product rule with its product weight.
pub fn for_each_tensor_node(rules: &[Rule], mut f: impl FnMut(&[f64], f64)) {
    if rules.iter().any(|r| r.is_empty()) {
        return;
    }
    let d = rules.len();
    let mut pos = vec![0usize; d];
    let mut point = vec![0.0; d];
    loop {
        let mut w = 1.0;
        for i in 0..d {
            point[i] = rules[i].nodes[pos[i]];
            w *= rules[i].weights[pos[i]];
        }
        f(&point, w);
        let mut i = 0;
        loop {
            if i == d {
                return;
            }
            pos[i] += 1;
            if pos[i] < rules[i].len() {
                break;
            }
            pos[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_normal_moments() {
        let r = gauss_hermite(6, 0.0, 1.0);
        let expected = [1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0, 0.0, 105.0, 0.0, 945.0];
        for (k, m) in expected.iter().enumerate() {
            let got = r.integrate(|x| x.powi(k as i32));
            assert!((got - m).abs() < 1e-10 * m.max(1.0), "k={k}: {got}");
        }
    }

    #[test]
    fn laguerre_reproduces_gamma_moments() {
        let (shape, scale) = (2.5, 0.5);
        let r = gauss_laguerre(8, shape, scale);
        let mut m = 1.0;
        for k in 0..16 {
            let got = r.integrate(|x| x.powi(k));
            assert!((got - m).abs() < 1e-11 * m, "k={k}: {got} vs {m}");
            m *= scale * (shape + k as f64);
        }
    }

    #[test]
    fn legendre_reproduces_uniform_moments() {
        let r = gauss_legendre(5, -1.0, 2.0);
        for k in 0..10 {
            let exact = (2f64.powi(k + 1) - (-1f64).powi(k + 1)) / ((k + 1) as f64 * 3.0);
            assert!((r.integrate(|x| x.powi(k)) - exact).abs() < 1e-13 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn tensor_nodes_cover_the_grid() {
        let rules = vec![gauss_hermite(3, 0.0, 1.0), gauss_legendre(2, 0.0, 1.0)];
        let mut count = 0;
        let mut mass = 0.0;
        for_each_tensor_node(&rules, |_, w| {
            count += 1;
            mass += w;
        });
        assert_eq!(count, 6);
        assert!((mass - 1.0).abs() < 1e-15);
    }
}

//! Multi-indices in graded lexicographic order.
//!
//! Within a fixed degree `n` the indices are ordered lexicographically
//! from the largest first entry down, e.g. for `d = 2, n = 2`:
//! `(2,0), (1,1), (0,2)`. Across degrees they are ordered by degree first.
//! [`rank_in_degree`] and [`graded_rank`] invert these enumerations without
//! a lookup table.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Exponent vector `α = (α₁, …, α_d)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zeros(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    /// `e_i` scaled by `k`.
    pub fn unit(d: usize, i: usize, k: u32) -> Self {
        let mut e = vec![0; d];
        e[i] = k;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    /// `α! = Πᵢ αᵢ!`
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&a| factorial(a as usize)).product()
    }

    /// `|α|! / α!`, the number of index tuples of type `α`.
    pub fn multinomial(&self) -> f64 {
        let mut acc = 1.0;
        let mut total = 0usize;
        for &a in &self.0 {
            total += a as usize;
            acc *= binomial(total, a as usize) as f64;
        }
        acc
    }

    /// Componentwise `α ≤ β`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self − other`, `None` unless `other ≤ self`.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// Monomial `x^α` evaluated at a point of the same dimension.
    pub fn monomial<T>(&self, x: &[T]) -> T
    where
        T: Copy + num_complex::ComplexFloat,
    {
        debug_assert_eq!(x.len(), self.0.len());
        let mut acc = T::one();
        for (xi, &a) in x.iter().zip(&self.0) {
            if a > 0 {
                acc = acc * xi.powi(a as i32);
            }
        }
        acc
    }

    /// The `k`-th index tuple position of coordinate labels, i.e. the
    /// sorted tuple `(0,…,0,1,…,1,…)` of type `α`.
    pub fn to_tuple(&self) -> Vec<usize> {
        let mut t = Vec::with_capacity(self.degree());
        for (i, &a) in self.0.iter().enumerate() {
            t.extend(std::iter::repeat_n(i, a as usize));
        }
        t
    }

    /// Type of an index tuple over `d` coordinates.
    pub fn from_tuple(d: usize, tuple: &[usize]) -> MultiIndex {
        let mut e = vec![0u32; d];
        for &i in tuple {
            e[i] += 1;
        }
        MultiIndex(e)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

const FACTORIALS: [f64; 171] = {
    let mut table = [1.0f64; 171];
    let mut i = 1;
    while i < 171 {
        table[i] = table[i - 1] * i as f64;
        i += 1;
    }
    table
};

/// `n!` as a float; infinite beyond 170.
pub fn factorial(n: usize) -> f64 {
    if n < FACTORIALS.len() {
        FACTORIALS[n]
    } else {
        f64::INFINITY
    }
}

/// `m! / (m − k)!`
pub fn falling_factorial(m: usize, k: usize) -> f64 {
    ((m - k + 1)..=m).map(|i| i as f64).product()
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of multi-indices of degree `n` in `d` variables.
pub fn count_in_degree(d: usize, n: usize) -> usize {
    if d == 0 {
        return usize::from(n == 0);
    }
    binomial(n + d - 1, d - 1) as usize
}

/// Number of multi-indices of degree `≤ n` in `d` variables.
pub fn count_up_to(d: usize, n: usize) -> usize {
    binomial(n + d, d) as usize
}

/// All multi-indices of degree exactly `n`, in graded lexicographic order.
pub fn multi_indices(d: usize, n: usize) -> Vec<MultiIndex> {
    let mut out = Vec::with_capacity(count_in_degree(d, n));
    let mut current = vec![0u32; d];
    fill(&mut out, &mut current, 0, n);
    out
}

fn fill(out: &mut Vec<MultiIndex>, current: &mut [u32], pos: usize, remaining: usize) {
    let d = current.len();
    if d == 0 {
        if remaining == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return;
    }
    if pos == d - 1 {
        current[pos] = remaining as u32;
        out.push(MultiIndex(current.to_vec()));
        return;
    }
    for a in (0..=remaining).rev() {
        current[pos] = a as u32;
        fill(out, current, pos + 1, remaining - a);
    }
    current[pos] = 0;
}

/// All multi-indices of degree `≤ n`, grouped by degree.
pub fn multi_indices_up_to(d: usize, n: usize) -> Vec<MultiIndex> {
    (0..=n).flat_map(|k| multi_indices(d, k)).collect()
}

/// Position of `α` within [`multi_indices`]`(d, |α|)`.
pub fn rank_in_degree(alpha: &MultiIndex) -> usize {
    let e = alpha.entries();
    let d = e.len();
    let mut remaining = alpha.degree();
    let mut rank = 0;
    for i in 0..d.saturating_sub(1) {
        let a = e[i] as usize;
        // Earlier entries at position i are those with a larger exponent.
        for b in (a + 1)..=remaining {
            rank += count_in_degree(d - i - 1, remaining - b);
        }
        remaining -= a;
    }
    rank
}

/// Position of `α` within [`multi_indices_up_to`].
pub fn graded_rank(alpha: &MultiIndex) -> usize {
    let n = alpha.degree();
    let offset = if n == 0 { 0 } else { count_up_to(alpha.dim(), n - 1) };
    offset + rank_in_degree(alpha)
}

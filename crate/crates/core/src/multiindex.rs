//! Multi-index combinatorics and derivative symbols.
//!
//! A multi-index alpha in N^d addresses the derivative
//! D^alpha = d^{a_1}/dx_1^{a_1} ... d^{a_d}/dx_d^{a_d} and the tensor slots of
//! the coefficient field. Every module stores order-m slots in the order
//! produced by [`enumerate`], so the layout of cache files and reports is
//! pinned here.

use crate::error::Error;
use num_complex::Complex64;

/// Multi-index alpha in N^d.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Self {
        assert!(!components.is_empty(), "multi-index needs d >= 1");
        MultiIndex(components)
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    /// Ambient dimension d.
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// |alpha| = sum of components.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// alpha! = product of component factorials.
    pub fn factorial(&self) -> Result<u128, Error> {
        let mut acc: u128 = 1;
        for &a in &self.0 {
            for k in 2..=(a as u128) {
                acc = acc.checked_mul(k).ok_or(Error::FactorialOverflow)?;
            }
        }
        Ok(acc)
    }

    /// (2 pi i xi)^alpha for an integer frequency vector xi.
    pub fn fourier_symbol(&self, xi: &[i64]) -> Complex64 {
        assert_eq!(xi.len(), self.dim(), "frequency vector length mismatch");
        let mut acc = Complex64::new(1.0, 0.0);
        for (&a, &x) in self.0.iter().zip(xi) {
            let factor = Complex64::new(0.0, 2.0 * std::f64::consts::PI * x as f64);
            for _ in 0..a {
                acc *= factor;
            }
        }
        acc
    }

    /// x^alpha for a real point x.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim());
        let mut acc = 1.0;
        for (&a, &v) in self.0.iter().zip(x) {
            acc *= v.powi(a as i32);
        }
        acc
    }

    /// xi^alpha for a real frequency vector (used in even-order symbols).
    pub fn real_power(&self, xi: &[f64]) -> f64 {
        self.monomial(xi)
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (k, a) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// All multi-indices of order exactly `k` in dimension `d`, in the canonical
/// ordering: lexicographic, descending in the first component. Every tensor
/// layout in the crate (cache files included) uses this ordering.
pub fn enumerate(d: usize, k: u32) -> Vec<MultiIndex> {
    assert!(d >= 1);
    let mut out = Vec::with_capacity(count(d, k));
    let mut buf = vec![0u32; d];
    fill(&mut out, &mut buf, 0, k);
    out
}

fn fill(out: &mut Vec<MultiIndex>, buf: &mut Vec<u32>, pos: usize, rest: u32) {
    if pos == buf.len() - 1 {
        buf[pos] = rest;
        out.push(MultiIndex::new(buf.clone()));
        return;
    }
    for a in (0..=rest).rev() {
        buf[pos] = a;
        fill(out, buf, pos + 1, rest - a);
    }
}

/// All multi-indices of order at most `k`, grouped by ascending order, each
/// group in the canonical ordering.
pub fn enumerate_up_to(d: usize, k: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for j in 0..=k {
        out.extend(enumerate(d, j));
    }
    out
}

/// C(k+d-1, d-1), the number of order-k multi-indices in dimension d.
pub fn count(d: usize, k: u32) -> usize {
    let n = k as u128 + d as u128 - 1;
    let r = (d - 1) as u128;
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) / (i + 1);
    }
    acc as usize
}

/// Position of `mi` in `enumerate(d, |mi|)`; the lists are small enough that a
/// linear scan is the whole cost.
pub fn position(list: &[MultiIndex], mi: &MultiIndex) -> Option<usize> {
    list.iter().position(|x| x == mi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerate_matches_quoted_cases() {
        let e22: Vec<Vec<u32>> = enumerate(2, 2)
            .iter()
            .map(|m| m.components().to_vec())
            .collect();
        assert_eq!(e22, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(enumerate(3, 2).len(), 6);
        assert_eq!(
            enumerate(1, 5)[0].components(),
            &[5],
            "single index in 1D"
        );
        assert_eq!(enumerate(1, 5).len(), 1);
    }

    #[test]
    fn enumerate_counts_and_uniqueness() {
        for d in 1..=3 {
            for k in 0..=4 {
                let list = enumerate(d, k);
                assert_eq!(list.len(), count(d, k), "d={d} k={k}");
                for mi in &list {
                    assert_eq!(mi.order(), k);
                    assert_eq!(mi.dim(), d);
                }
                let mut seen = std::collections::HashSet::new();
                for mi in &list {
                    assert!(seen.insert(mi.components().to_vec()), "duplicate in d={d} k={k}");
                }
                for (idx, mi) in list.iter().enumerate() {
                    assert_eq!(position(&list, mi), Some(idx), "round trip");
                }
            }
        }
    }

    #[test]
    fn enumerate_is_lexicographic_descending() {
        for d in 1..=3 {
            for k in 0..=4 {
                let list = enumerate(d, k);
                for w in list.windows(2) {
                    assert!(
                        w[0].components() > w[1].components(),
                        "ordering violated at {:?} vs {:?}",
                        w[0],
                        w[1]
                    );
                }
            }
        }
    }

    #[test]
    fn factorial_cases() {
        assert_eq!(MultiIndex::new(vec![2, 1]).factorial().unwrap(), 2);
        assert_eq!(MultiIndex::new(vec![0, 0, 0]).factorial().unwrap(), 1);
        assert_eq!(MultiIndex::new(vec![3, 2]).factorial().unwrap(), 12);
    }

    #[test]
    fn symbol_cases() {
        let tau = 2.0 * std::f64::consts::PI;
        let s = MultiIndex::new(vec![1, 0]).fourier_symbol(&[1, 0]);
        assert!((s - Complex64::new(0.0, tau)).norm() < 1e-14);

        let s = MultiIndex::new(vec![2]).fourier_symbol(&[3]);
        assert!((s - Complex64::new(-(3.0 * tau) * (3.0 * tau), 0.0)).norm() < 1e-9);

        let s = MultiIndex::new(vec![0, 0]).fourier_symbol(&[7, -4]);
        assert!((s - Complex64::new(1.0, 0.0)).norm() == 0.0);
    }

    #[test]
    fn symbol_is_multiplicative_in_the_index() {
        let cases = [
            (vec![1u32, 2], vec![0u32, 1], vec![2i64, -3]),
            (vec![2, 0], vec![1, 1], vec![5, 1]),
            (vec![3], vec![2], vec![-2]),
        ];
        for (a, b, xi) in cases {
            let alpha = MultiIndex::new(a.clone());
            let beta = MultiIndex::new(b.clone());
            let sum = MultiIndex::new(
                a.iter().zip(&b).map(|(x, y)| x + y).collect::<Vec<_>>(),
            );
            let lhs = sum.fourier_symbol(&xi);
            let rhs = alpha.fourier_symbol(&xi) * beta.fourier_symbol(&xi);
            assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0));
        }
    }
}

use std::collections::HashMap;
use std::sync::OnceLock;

use super::{MAX_DIM, MAX_ORDER};

/// Exponent vector of a monomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    exponents: Vec<u32>,
}

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self { exponents }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(vec![0; dim])
    }

    pub fn unit(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        Self::new(e)
    }

    /// Multi-index of the mixed partial ∂_{i_1}…∂_{i_k}.
    pub fn from_partials(dim: usize, vars: &[usize]) -> Self {
        let mut e = vec![0; dim];
        for &v in vars {
            e[v] += 1;
        }
        Self::new(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn degree(&self) -> usize {
        self.exponents.iter().map(|&e| e as usize).sum()
    }

    /// α! = Π α_i!
    pub fn factorial(&self) -> f64 {
        self.exponents
            .iter()
            .map(|&e| (1..=e).map(f64::from).product::<f64>())
            .product()
    }

    fn plus(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex::new(
            self.exponents
                .iter()
                .zip(&other.exponents)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

/// Monomial bookkeeping shared by every jet of a given (dim, order).
///
/// Monomials are stored in graded-lexicographic order: by degree, then
/// lexicographically with larger exponents of earlier variables first.
#[derive(Debug)]
pub struct Layout {
    dim: usize,
    order: usize,
    monomials: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    degree_start: Vec<usize>,
    products: Vec<(u32, u32, u32)>,
    // partials[i][k] = (source slot, factor) producing slot k of ∂_i in the
    // layout of order - 1
    partials: Vec<Vec<(u32, f64)>>,
}

impl Layout {
    fn build(dim: usize, order: usize) -> Self {
        let mut monomials = Vec::new();
        let mut degree_start = Vec::with_capacity(order + 2);
        for d in 0..=order {
            degree_start.push(monomials.len());
            let mut current = vec![0u32; dim];
            push_degree(&mut monomials, &mut current, 0, d as u32);
        }
        degree_start.push(monomials.len());
        let lookup: HashMap<MultiIndex, usize> = monomials
            .iter()
            .enumerate()
            .map(|(k, m)| (m.clone(), k))
            .collect();

        let mut products = Vec::new();
        for (i, a) in monomials.iter().enumerate() {
            let da = a.degree();
            for (j, b) in monomials.iter().enumerate() {
                if da + b.degree() > order {
                    // monomials are sorted by degree
                    break;
                }
                let k = lookup[&a.plus(b)];
                products.push((i as u32, j as u32, k as u32));
            }
        }

        let partials = if order == 0 {
            Vec::new()
        } else {
            let lower = degree_start[order];
            (0..dim)
                .map(|i| {
                    monomials[..lower]
                        .iter()
                        .map(|m| {
                            let mut e = m.exponents.clone();
                            e[i] += 1;
                            let factor = f64::from(e[i]);
                            (lookup[&MultiIndex::new(e)] as u32, factor)
                        })
                        .collect()
                })
                .collect()
        };

        Self {
            dim,
            order,
            monomials,
            lookup,
            degree_start,
            products,
            partials,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[MultiIndex] {
        &self.monomials
    }

    pub fn index_of(&self, alpha: &MultiIndex) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    /// Slot range holding the monomials of degree `d`.
    pub fn degree_range(&self, d: usize) -> std::ops::Range<usize> {
        self.degree_start[d]..self.degree_start[d + 1]
    }

    pub(crate) fn products(&self) -> &[(u32, u32, u32)] {
        &self.products
    }

    pub(crate) fn partial_map(&self, i: usize) -> &[(u32, f64)] {
        &self.partials[i]
    }
}

fn push_degree(out: &mut Vec<MultiIndex>, current: &mut [u32], pos: usize, remaining: u32) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(MultiIndex::new(current.to_vec()));
        current[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        push_degree(out, current, pos + 1, remaining - e);
    }
    current[pos] = 0;
}

static LAYOUTS: [[OnceLock<Layout>; MAX_ORDER + 1]; MAX_DIM + 1] =
    [const { [const { OnceLock::new() }; MAX_ORDER + 1] }; MAX_DIM + 1];

/// Shared layout for `dim` variables up to total degree `order`.
///
/// Panics if the pair is outside `1..=MAX_DIM` × `0..=MAX_ORDER`; public
/// entry points validate first.
pub fn layout(dim: usize, order: usize) -> &'static Layout {
    assert!(
        (1..=MAX_DIM).contains(&dim) && order <= MAX_ORDER,
        "jet layout ({dim}, {order}) out of range"
    );
    LAYOUTS[dim][order].get_or_init(|| Layout::build(dim, order))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn sizes_match_binomials() {
        for dim in 1..=MAX_DIM {
            for order in 0..=MAX_ORDER {
                assert_eq!(layout(dim, order).len(), binom(dim + order, order));
            }
        }
    }

    #[test]
    fn graded_lex_order() {
        let l = layout(2, 2);
        let got: Vec<Vec<u32>> = l.monomials().iter().map(|m| m.exponents().to_vec()).collect();
        assert_eq!(
            got,
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        assert_eq!(l.degree_range(1), 1..3);
    }

    #[test]
    fn factorial_of_index() {
        assert_eq!(MultiIndex::new(vec![2, 0, 3]).factorial(), 12.0);
        assert_eq!(MultiIndex::zero(4).factorial(), 1.0);
    }
}

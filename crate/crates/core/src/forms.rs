//! Dense symmetric forms: determinant, adjugate, bordered determinant,
//! inverse and inertia.
//!
//! Determinants and adjugates use division-free subset expansions, so they
//! are exact polynomial expressions in the entries and behave well at the
//! rank-deficient locus where the adjugate of a corank-one form is rank one.
//! The cost is O(2^m m) per determinant and O(2^m m) for all cofactors, which
//! is negligible for m ≤ 12.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::Scalar;

pub const DEFAULT_TOL: f64 = 1e-10;

macro_rules! packed_form {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name<T = f64> {
            dim: usize,
            entries: Vec<T>,
        }

        impl<T: Clone> $name<T> {
            /// Builds a form from a packed upper triangle (row-major).
            pub fn new(dim: usize, entries: Vec<T>) -> Result<Self> {
                if dim == 0 || entries.len() != dim * (dim + 1) / 2 {
                    return Err(Error::Argument(format!(
                        "{} entries do not pack a {dim}x{dim} symmetric form",
                        entries.len()
                    )));
                }
                Ok(Self { dim, entries })
            }

            pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
                let mut entries = Vec::with_capacity(dim * (dim + 1) / 2);
                for i in 0..dim {
                    for j in i..dim {
                        entries.push(f(i, j));
                    }
                }
                Self { dim, entries }
            }

            /// Reads the upper triangle of a square row-major matrix.
            pub fn from_rows(rows: &[Vec<T>]) -> Self {
                Self::from_fn(rows.len(), |i, j| rows[i][j].clone())
            }

            pub fn dim(&self) -> usize {
                self.dim
            }

            pub fn entries(&self) -> &[T] {
                &self.entries
            }

            pub fn get(&self, i: usize, j: usize) -> &T {
                let (i, j) = if i <= j { (i, j) } else { (j, i) };
                &self.entries[i * self.dim - i * (i + 1) / 2 + j]
            }

            pub fn to_rows(&self) -> Vec<Vec<T>> {
                (0..self.dim)
                    .map(|i| (0..self.dim).map(|j| self.get(i, j).clone()).collect())
                    .collect()
            }

            pub fn to_dense(&self) -> Vec<T> {
                let n = self.dim;
                let mut out = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        out.push(self.get(i, j).clone());
                    }
                }
                out
            }

            pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> $name<U> {
                $name {
                    dim: self.dim,
                    entries: self.entries.iter().map(f).collect(),
                }
            }
        }

        impl<T: Scalar> $name<T> {
            /// Σ_j a_ij v_j
            pub fn apply(&self, v: &[T]) -> Vec<T> {
                (0..self.dim)
                    .map(|i| {
                        let mut acc = self.get(i, 0).clone() * v[0].clone();
                        for j in 1..self.dim {
                            acc = acc + self.get(i, j).clone() * v[j].clone();
                        }
                        acc
                    })
                    .collect()
            }

            /// Σ_ij a_ij v_i w_j
            pub fn pair(&self, v: &[T], w: &[T]) -> T {
                dot(v, &self.apply(w))
            }

            pub fn scale(&self, c: &T) -> Self {
                self.map(|e| e.clone() * c.clone())
            }
        }

        impl $name<f64> {
            pub fn identity(dim: usize) -> Self {
                Self::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
            }

            pub fn max_abs(&self) -> f64 {
                self.entries.iter().fold(0.0, |m, e| m.max(e.abs()))
            }
        }
    };
}

packed_form!(
    /// Covariant symmetric 2-tensor (F_ij, sff_ij, k_ij, m_ij).
    SymForm
);
packed_form!(
    /// Contravariant symmetric 2-tensor (U^ij, sff^ij, k^ij).
    ContraForm
);

pub(crate) fn dot<T: Scalar>(v: &[T], w: &[T]) -> T {
    let mut acc = v[0].clone() * w[0].clone();
    for (a, b) in v.iter().zip(w).skip(1) {
        acc = acc + a.clone() * b.clone();
    }
    acc
}

/// Positive, negative and zero pivot counts of a symmetric form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl Inertia {
    pub fn new(positive: usize, negative: usize, zero: usize) -> Self {
        Self {
            positive,
            negative,
            zero,
        }
    }
}

impl fmt::Display for Inertia {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.positive, self.negative, self.zero)
    }
}

fn signed<T: Scalar>(acc: T, term: T, negative: bool) -> T {
    if negative {
        acc - term
    } else {
        acc + term
    }
}

// top[S] = det(rows 0..|S|, columns S)
fn leading_minors<T: Scalar>(n: usize, a: &[T], one: &T) -> Vec<T> {
    let mut top = vec![one.zero_like(); 1 << n];
    top[0] = one.clone();
    for mask in 1usize..(1 << n) {
        let k = mask.count_ones() as usize - 1;
        let mut acc = one.zero_like();
        let mut pos = 0;
        for j in 0..n {
            if mask & (1 << j) != 0 {
                let term = a[k * n + j].clone() * top[mask ^ (1 << j)].clone();
                acc = signed(acc, term, (pos + k) % 2 == 1);
                pos += 1;
            }
        }
        top[mask] = acc;
    }
    top
}

// bottom[S] = det(rows n-|S|..n, columns S)
fn trailing_minors<T: Scalar>(n: usize, a: &[T], one: &T) -> Vec<T> {
    let mut bottom = vec![one.zero_like(); 1 << n];
    bottom[0] = one.clone();
    for mask in 1usize..(1 << n) {
        let r = n - mask.count_ones() as usize;
        let mut acc = one.zero_like();
        let mut pos = 0;
        for j in 0..n {
            if mask & (1 << j) != 0 {
                let term = a[r * n + j].clone() * bottom[mask ^ (1 << j)].clone();
                acc = signed(acc, term, pos % 2 == 1);
                pos += 1;
            }
        }
        bottom[mask] = acc;
    }
    bottom
}

/// Determinant of a dense row-major n×n matrix by Laplace expansion.
pub fn dense_determinant<T: Scalar>(n: usize, a: &[T]) -> T {
    assert!(n >= 1 && a.len() == n * n, "dense_determinant: bad shape");
    let top = leading_minors(n, a, &a[0].one_like());
    top[(1 << n) - 1].clone()
}

/// Permanent of |a|: the sum of the absolute values of all terms in the
/// Laplace expansion of det a, hence the natural scale of its rounding error.
pub fn dense_abs_permanent(n: usize, a: &[f64]) -> f64 {
    assert!(n >= 1 && a.len() == n * n, "dense_abs_permanent: bad shape");
    let mut top = vec![0.0; 1 << n];
    top[0] = 1.0;
    for mask in 1usize..(1 << n) {
        let k = mask.count_ones() as usize - 1;
        top[mask] = (0..n)
            .filter(|j| mask & (1 << j) != 0)
            .map(|j| a[k * n + j].abs() * top[mask ^ (1 << j)])
            .sum();
    }
    top[(1 << n) - 1]
}

/// Abs-permanent of the bordered matrix [[a, v], [vᵀ, 0]].
pub fn bordered_abs_permanent(a: &SymForm<f64>, v: &[f64]) -> f64 {
    let n = a.dim();
    let m = n + 1;
    let mut dense = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            dense.push(match (i < n, j < n) {
                (true, true) => *a.get(i, j),
                (true, false) => v[i],
                (false, true) => v[j],
                (false, false) => 0.0,
            });
        }
    }
    dense_abs_permanent(m, &dense)
}

/// Adjugate (transposed cofactor matrix) of a dense row-major matrix.
pub fn dense_adjugate<T: Scalar>(n: usize, a: &[T]) -> Vec<T> {
    assert!(n >= 1 && a.len() == n * n, "dense_adjugate: bad shape");
    let one = a[0].one_like();
    let top = leading_minors(n, a, &one);
    let bottom = trailing_minors(n, a, &one);
    let full = (1usize << n) - 1;
    let mut adj = vec![one.zero_like(); n * n];
    for j in 0..n {
        let cols = full & !(1 << j);
        let mut minors = vec![one.zero_like(); n];
        // generalized Laplace expansion of the minor without column j along
        // its first i rows, for every i at once
        let mut s = cols;
        loop {
            let i = s.count_ones() as usize;
            let mut pos_sum = 0usize;
            for t in 0..n {
                if s & (1 << t) != 0 {
                    pos_sum += (cols & ((1 << t) - 1)).count_ones() as usize;
                }
            }
            let parity = (pos_sum + i * (i.saturating_sub(1)) / 2) % 2 == 1;
            let term = top[s].clone() * bottom[cols & !s].clone();
            minors[i] = signed(minors[i].clone(), term, parity);
            if s == 0 {
                break;
            }
            s = (s - 1) & cols;
        }
        for (i, minor) in minors.into_iter().enumerate() {
            adj[j * n + i] = if (i + j) % 2 == 1 { -minor } else { minor };
        }
    }
    adj
}

pub fn determinant<T: Scalar>(a: &SymForm<T>) -> T {
    dense_determinant(a.dim(), &a.to_dense())
}

pub fn adjugate<T: Scalar>(a: &SymForm<T>) -> ContraForm<T> {
    let n = a.dim();
    let adj = dense_adjugate(n, &a.to_dense());
    ContraForm::from_fn(n, |i, j| adj[i * n + j].clone())
}

/// −det [[a, v], [vᵀ, 0]], which equals v·adj(a)·v.
pub fn bordered_determinant<T: Scalar>(a: &SymForm<T>, v: &[T]) -> T {
    let n = a.dim();
    assert_eq!(v.len(), n, "bordered_determinant: covector length");
    let m = n + 1;
    let zero = v[0].zero_like();
    let mut dense = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            dense.push(match (i < n, j < n) {
                (true, true) => a.get(i, j).clone(),
                (true, false) => v[i].clone(),
                (false, true) => v[j].clone(),
                (false, false) => zero.clone(),
            });
        }
    }
    -dense_determinant(m, &dense)
}

/// adj(a)/det(a) without a singularity check.
pub fn inverse_unchecked<T: Scalar>(a: &SymForm<T>) -> ContraForm<T> {
    let n = a.dim();
    let dense = a.to_dense();
    let det = dense_determinant(n, &dense);
    let adj = dense_adjugate(n, &dense);
    ContraForm::from_fn(n, |i, j| adj[i * n + j].clone() / det.clone())
}

pub fn inverse(a: &SymForm<f64>, tol: f64) -> Result<ContraForm<f64>> {
    let n = a.dim();
    let det = determinant(a);
    let threshold = tol * a.max_abs().powi(n as i32);
    if !(det.abs() > threshold) || a.max_abs() == 0.0 {
        return Err(Error::SingularForm { det, threshold });
    }
    let adj = adjugate(a);
    Ok(adj.map(|e| e / det))
}

/// Inertia from a Bunch–Kaufman symmetric pivoted LDLᵀ factorization; a
/// pivot counts as zero when |pivot| ≤ tol · max|entry|.
pub fn inertia(a: &SymForm<f64>, tol: f64) -> Inertia {
    inertia_dense(a.dim(), &a.to_dense(), tol)
}

pub fn inertia_dense(n: usize, a: &[f64], tol: f64) -> Inertia {
    let scale = a.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let mut out = Inertia::new(0, 0, 0);
    if scale == 0.0 {
        out.zero = n;
        return out;
    }
    let thr = tol * scale;
    let alpha = (1.0 + 17f64.sqrt()) / 8.0;
    let mut m = a.to_vec();
    let at = |m: &[f64], i: usize, j: usize| m[i * n + j];
    let classify = |d: f64, out: &mut Inertia| {
        if d.abs() <= thr {
            out.zero += 1;
        } else if d > 0.0 {
            out.positive += 1;
        } else {
            out.negative += 1;
        }
    };
    let swap = |m: &mut [f64], p: usize, q: usize| {
        if p == q {
            return;
        }
        for c in 0..n {
            m.swap(p * n + c, q * n + c);
        }
        for r in 0..n {
            m.swap(r * n + p, r * n + q);
        }
    };

    let mut k = 0;
    while k < n {
        let akk = at(&m, k, k).abs();
        let (mut r, mut lambda) = (k, 0.0f64);
        for i in k + 1..n {
            if at(&m, i, k).abs() > lambda {
                lambda = at(&m, i, k).abs();
                r = i;
            }
        }
        if akk.max(lambda) <= thr {
            out.zero += 1;
            k += 1;
            continue;
        }
        let two_by_two = if akk >= alpha * lambda {
            false
        } else {
            let sigma = (k..n)
                .filter(|&j| j != r)
                .fold(0.0f64, |s, j| s.max(at(&m, r, j).abs()));
            if akk * sigma >= alpha * lambda * lambda {
                false
            } else if at(&m, r, r).abs() >= alpha * sigma {
                swap(&mut m, k, r);
                false
            } else {
                swap(&mut m, k + 1, r);
                true
            }
        };
        if !two_by_two {
            let d = at(&m, k, k);
            classify(d, &mut out);
            if d.abs() > thr {
                for i in k + 1..n {
                    let f = at(&m, i, k) / d;
                    for j in k + 1..n {
                        m[i * n + j] -= f * at(&m, k, j);
                    }
                }
            }
            k += 1;
        } else {
            let (p, q, s) = (at(&m, k, k), at(&m, k, k + 1), at(&m, k + 1, k + 1));
            let det = p * s - q * q;
            let half_tr = 0.5 * (p + s);
            let disc = (0.25 * (p - s) * (p - s) + q * q).sqrt();
            classify(half_tr + disc, &mut out);
            classify(half_tr - disc, &mut out);
            let (i00, i01, i11) = (s / det, -q / det, p / det);
            for i in k + 2..n {
                let (ui, vi) = (at(&m, i, k), at(&m, i, k + 1));
                let (wi, zi) = (i00 * ui + i01 * vi, i01 * ui + i11 * vi);
                for j in k + 2..n {
                    m[i * n + j] -= wi * at(&m, k, j) + zi * at(&m, k + 1, j);
                }
            }
            k += 2;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> SymForm {
        SymForm::from_fn(v.len(), |i, j| if i == j { v[i] } else { 0.0 })
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(determinant(&SymForm::identity(3)), 1.0);
        assert_eq!(determinant(&diag(&[2.0, 2.0])), 4.0);
        // Hessian of x11 x22 - x12²/2 in (x11, x12, x22)
        let h = SymForm::from_rows(&[
            vec![0.0, 0.0, 1.0],
            vec![0.0, -1.0, 0.0],
            vec![1.0, 0.0, 0.0],
        ]);
        assert_eq!(determinant(&h), 1.0);
        assert_eq!(inertia(&h, DEFAULT_TOL), Inertia::new(1, 2, 0));
    }

    #[test]
    fn adjugate_examples() {
        let adj = adjugate(&diag(&[2.0, 3.0]));
        assert_eq!(adj.to_rows(), vec![vec![3.0, 0.0], vec![0.0, 2.0]]);
        let z = adjugate(&SymForm::from_fn(3, |_, _| 0.0));
        assert!(z.entries().iter().all(|&e| e == 0.0));
        let one = adjugate(&diag(&[5.0]));
        assert_eq!(one.entries(), &[1.0]);
    }

    #[test]
    fn adjugate_of_general_matrix() {
        // hand-computed 3x3 example
        let a = [2.0, -1.0, 0.0, 1.0, 3.0, 4.0, 0.0, 5.0, 6.0];
        let adj = dense_adjugate(3, &a);
        assert_eq!(adj, vec![-2.0, 6.0, -4.0, -6.0, 12.0, -8.0, 5.0, -10.0, 7.0]);
        assert_eq!(dense_determinant(3, &a), 2.0);
    }

    #[test]
    fn bordered_examples() {
        let b = bordered_determinant(&SymForm::identity(2), &[1.0, 0.0]);
        assert_eq!(b, 1.0);
    }

    #[test]
    fn inverse_examples() {
        let inv = inverse(&diag(&[2.0, 4.0]), DEFAULT_TOL).unwrap();
        assert_eq!(inv.to_rows(), vec![vec![0.5, 0.0], vec![0.0, 0.25]]);
        assert!(matches!(
            inverse(&SymForm::from_fn(2, |_, _| 0.0), DEFAULT_TOL),
            Err(Error::SingularForm { .. })
        ));
    }

    #[test]
    fn inertia_examples() {
        assert_eq!(inertia(&diag(&[1.0, -1.0, 0.0]), DEFAULT_TOL), Inertia::new(1, 1, 1));
        let hyperbolic = SymForm::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(inertia(&hyperbolic, DEFAULT_TOL), Inertia::new(1, 1, 0));
        assert_eq!(inertia(&SymForm::from_fn(4, |_, _| 0.0), DEFAULT_TOL), Inertia::new(0, 0, 4));
        // rank one: v vᵀ
        let v = [1.0, -2.0, 0.5];
        let r1 = SymForm::from_fn(3, |i, j| v[i] * v[j]);
        assert_eq!(inertia(&r1, DEFAULT_TOL), Inertia::new(1, 0, 2));
    }
}

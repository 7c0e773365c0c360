use equiaffine::forms::{
    adjugate, bordered_determinant, dense_adjugate, dense_determinant, determinant, inertia, Inertia, SymForm,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn sym_matrix(max_dim: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_dim).prop_flat_map(|n| {
        prop::collection::vec(-2.0f64..2.0, n * n).prop_map(move |v| {
            let a = DMatrix::from_row_slice(n, n, &v);
            (&a + a.transpose()) * 0.5
        })
    })
}

fn to_form(a: &DMatrix<f64>) -> SymForm<f64> {
    SymForm::from_fn(a.nrows(), |i, j| a[(i, j)])
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn determinant_matches_lu(a in sym_matrix(7)) {
        let d = determinant(&to_form(&a));
        prop_assert!(rel(d, a.clone().determinant()) < 1e-10);
    }

    #[test]
    fn dense_determinant_of_nonsymmetric(v in prop::collection::vec(-2.0f64..2.0, 25)) {
        let a = DMatrix::from_row_slice(5, 5, &v);
        prop_assert!(rel(dense_determinant(5, &v), a.determinant()) < 1e-10);
    }

    #[test]
    fn adjugate_times_form_is_det_identity(a in sym_matrix(6)) {
        let f = to_form(&a);
        let n = a.nrows();
        let adj = adjugate(&f).to_rows();
        let d = determinant(&f);
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| adj[i][k] * a[(k, j)]).sum();
                let e = if i == j { d } else { 0.0 };
                prop_assert!((s - e).abs() < 1e-10 * (1.0 + d.abs()));
            }
        }
    }

    /// bordered_determinant = −det[[A, v], [vᵀ, 0]] = vᵀ adj(A) v.
    #[test]
    fn bordered_determinant_identity(a in sym_matrix(6), seed in prop::collection::vec(-2.0f64..2.0, 6)) {
        let n = a.nrows();
        let v = &seed[..n];
        let f = to_form(&a);
        let adj = adjugate(&f).to_rows();
        let q: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| v[i] * adj[i][j] * v[j]).sum();
        let mut b = DMatrix::zeros(n + 1, n + 1);
        b.view_mut((0, 0), (n, n)).copy_from(&a);
        for i in 0..n {
            b[(i, n)] = v[i];
            b[(n, i)] = v[i];
        }
        let bd = bordered_determinant(&f, v);
        prop_assert!(rel(bd, q) < 1e-10);
        prop_assert!(rel(bd, -b.determinant()) < 1e-10);
    }

    /// Sylvester: inertia is the sign count of the eigenvalues and survives
    /// congruence by an invertible matrix.
    #[test]
    fn inertia_is_a_congruence_invariant(
        eig in prop::collection::vec(prop_oneof![-3.0f64..-0.2, 0.2f64..3.0, Just(0.0)], 1..6),
        q in prop::collection::vec(-1.0f64..1.0, 36),
        p in prop::collection::vec(-0.3f64..0.3, 36),
    ) {
        let n = eig.len();
        let qr = DMatrix::from_row_slice(6, 6, &q).view((0, 0), (n, n)).into_owned().qr();
        let orth = qr.q();
        let a = &orth * DMatrix::from_diagonal(&DVector::from_vec(eig.clone())) * orth.transpose();
        let expected = Inertia::new(
            eig.iter().filter(|&&e| e > 0.0).count(),
            eig.iter().filter(|&&e| e < 0.0).count(),
            eig.iter().filter(|&&e| e == 0.0).count(),
        );
        prop_assert_eq!(inertia(&to_form(&a), 1e-9), expected);
        let m = DMatrix::identity(n, n) + DMatrix::from_row_slice(6, 6, &p).view((0, 0), (n, n)).into_owned();
        prop_assume!(m.clone().determinant().abs() > 0.1);
        let c = m.transpose() * &a * &m;
        prop_assert_eq!(inertia(&to_form(&c), 1e-9), expected);
        let eigs = c.symmetric_eigenvalues();
        prop_assert_eq!(eigs.iter().filter(|&&e| e > 1e-9).count(), expected.positive);
    }

    /// A corank-one form has a rank-one adjugate: every 2×2 minor vanishes.
    #[test]
    fn corank_one_adjugate_is_rank_one(
        eig in prop::collection::vec(prop_oneof![-3.0f64..-0.2, 0.2f64..3.0], 1..6),
        q in prop::collection::vec(-1.0f64..1.0, 49),
    ) {
        let n = eig.len() + 1;
        let mut d = eig.clone();
        d.push(0.0);
        let orth = DMatrix::from_row_slice(7, 7, &q).view((0, 0), (n, n)).into_owned().qr().q();
        let a = &orth * DMatrix::from_diagonal(&DVector::from_vec(d)) * orth.transpose();
        let dense: Vec<f64> = a.transpose().iter().copied().collect();
        let adj = dense_adjugate(n, &dense);
        let scale = adj.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert!(scale > 1e-6);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let minor = adj[i * n + k] * adj[j * n + l] - adj[i * n + l] * adj[j * n + k];
                        prop_assert!(minor.abs() <= 1e-10 * scale * scale);
                    }
                }
            }
        }
        // the kernel direction spans the image of the adjugate
        let kernel = orth.column(n - 1);
        let expected: f64 = eig.iter().product();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((adj[i * n + j] - expected * kernel[i] * kernel[j]).abs() < 1e-10 * scale.max(1.0));
            }
        }
    }
}

#[test]
fn packed_layout_round_trip() {
    let rows = vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 5.0], vec![3.0, 5.0, 6.0]];
    let f = SymForm::from_rows(&rows);
    assert_eq!(f.entries(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    assert_eq!(f.to_rows(), rows);
    assert!(SymForm::new(3, vec![1.0; 5]).is_err());
}

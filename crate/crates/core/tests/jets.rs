use equiaffine::exprlang::{Ast, BinOp};
use equiaffine::jets::{ElemFn, Jet};
use equiaffine::parse;
use proptest::prelude::*;

const NAMES: [&str; 3] = ["x", "y", "z"];

fn names() -> Vec<String> {
    NAMES.iter().map(|s| s.to_string()).collect()
}

/// Expressions that are smooth everywhere on [-1, 1]^3 and stay moderate.
fn smooth_ast() -> impl Strategy<Value = Ast> {
    let leaf = prop_oneof![
        (0usize..3).prop_map(Ast::Var),
        (-2.0f64..2.0).prop_map(Ast::Const),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ast::Binary(BinOp::Add, Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ast::Binary(BinOp::Sub, Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ast::Binary(BinOp::Mul, Box::new(a), Box::new(b))),
            inner.clone().prop_map(|a| Ast::Call(ElemFn::Sin, Box::new(a))),
            inner.clone().prop_map(|a| Ast::Call(ElemFn::Tanh, Box::new(a))),
            inner.clone().prop_map(|a| Ast::Call(ElemFn::Exp, Box::new(Ast::Call(ElemFn::Cos, Box::new(a))))),
            inner.prop_map(|a| Ast::Pow(Box::new(a), 2.0)),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 3)
}

fn jet_of(ast: &Ast, x: &[f64], order: usize) -> Jet {
    let vars = Jet::variables(x, order).unwrap();
    ast.eval(&vars).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_matches_central_differences(ast in smooth_ast(), x in point()) {
        let j = jet_of(&ast, &x, 1);
        prop_assert!(close(j.value(), ast.eval_f64(&x).unwrap(), 1e-14));
        let h = 1e-5;
        for i in 0..3 {
            let mut p = x.clone();
            p[i] += h;
            let fp = ast.eval_f64(&p).unwrap();
            p[i] -= 2.0 * h;
            let fm = ast.eval_f64(&p).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            prop_assert!(close(j.gradient()[i], fd, 1e-6), "d{} {} vs {}", i, j.gradient()[i], fd);
        }
    }

    #[test]
    fn hessian_matches_differenced_gradient(ast in smooth_ast(), x in point()) {
        let hess = jet_of(&ast, &x, 2).hessian();
        let h = 1e-5;
        for i in 0..3 {
            let mut p = x.clone();
            p[i] += h;
            let gp = jet_of(&ast, &p, 1).gradient();
            p[i] -= 2.0 * h;
            let gm = jet_of(&ast, &p, 1).gradient();
            for k in 0..3 {
                let fd = (gp[k] - gm[k]) / (2.0 * h);
                prop_assert!(close(hess[i][k], fd, 1e-5));
                prop_assert!(close(hess[i][k], hess[k][i], 1e-12));
            }
        }
    }

    #[test]
    fn third_order_from_differenced_hessians(ast in smooth_ast(), x in point()) {
        let j = jet_of(&ast, &x, 3);
        let h = 1e-4;
        let mut p = x.clone();
        p[0] += h;
        let hp = jet_of(&ast, &p, 2).hessian();
        p[0] -= 2.0 * h;
        let hm = jet_of(&ast, &p, 2).hessian();
        let fd = (hp[1][2] - hm[1][2]) / (2.0 * h);
        prop_assert!(close(j.derivative(&[0, 1, 2]).unwrap(), fd, 1e-5));
    }

    /// f∘(g∘h) = (f∘g)∘h through the jet chain rule, and both equal the
    /// direct evaluation of the nested expression.
    #[test]
    fn composition_is_associative(
        f in prop::collection::vec(smooth_ast(), 1),
        g in prop::collection::vec(smooth_ast(), 3),
        hmap in prop::collection::vec(smooth_ast(), 3),
        x in point(),
    ) {
        let order = 3;
        let hj: Vec<Jet> = hmap.iter().map(|a| jet_of(a, &x, order)).collect();
        let hx: Vec<f64> = hj.iter().map(Jet::value).collect();
        let gj: Vec<Jet> = g.iter().map(|a| jet_of(a, &hx, order)).collect();
        let gx: Vec<f64> = gj.iter().map(Jet::value).collect();
        let fj = jet_of(&f[0], &gx, order);

        let gh: Vec<Jet> = gj.iter().map(|j| j.compose(&hj).unwrap()).collect();
        let left = fj.compose(&gh).unwrap();
        let fg = fj.compose(&gj).unwrap();
        let right = fg.compose(&hj).unwrap();

        let vars = Jet::variables(&x, order).unwrap();
        let inner: Vec<Jet> = hmap.iter().map(|a| a.eval(&vars).unwrap()).collect();
        let mid: Vec<Jet> = g.iter().map(|a| a.eval(&inner).unwrap()).collect();
        let direct = f[0].eval(&mid).unwrap();

        for ((a, b), c) in left.coeffs().iter().zip(right.coeffs()).zip(direct.coeffs()) {
            prop_assert!(close(*a, *b, 1e-9), "{} vs {}", a, b);
            prop_assert!(close(*a, *c, 1e-9), "{} vs {}", a, c);
        }
    }
}

#[test]
fn symbolic_derivatives() {
    let ast = parse("sin(x)*y^3 + exp(x*z)", 3, &names()).unwrap();
    let (x, y, z) = (0.3, -0.7, 1.2);
    let j = jet_of(&ast, &[x, y, z], 4);
    let cases: [(&[usize], f64); 6] = [
        (&[0], x.cos() * y.powi(3) + z * (x * z).exp()),
        (&[1, 1], 6.0 * x.sin() * y),
        (&[0, 1, 1], 6.0 * x.cos() * y),
        (&[0, 2], (1.0 + x * z) * (x * z).exp()),
        (&[1, 1, 1, 1], 0.0),
        (&[0, 0, 2, 2], (2.0 + 4.0 * x * z + x * x * z * z) * (x * z).exp()),
    ];
    for (vars, expected) in cases {
        let got = j.derivative(vars).unwrap();
        assert!(close(got, expected, 1e-13), "{vars:?}: {got} vs {expected}");
    }
}

#[test]
fn univariate_series_coefficients() {
    // log(1 + t) = t − t²/2 + t³/3 − t⁴/4
    let ast = parse("log(1 + x)", 1, &["x"]).unwrap();
    let j = jet_of(&ast, &[0.0], 4);
    let expected = [0.0, 1.0, -0.5, 1.0 / 3.0, -0.25];
    for (c, e) in j.coeffs().iter().zip(expected) {
        assert!((c - e).abs() < 1e-15);
    }
}

#[test]
fn domain_errors_carry_the_argument() {
    let ast = parse("sqrt(x - 2)", 1, &["x"]).unwrap();
    let err = ast.eval(&Jet::variables(&[1.0], 2).unwrap()).unwrap_err();
    assert!(matches!(err, equiaffine::Error::Domain { .. }), "{err}");
}

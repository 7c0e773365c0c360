use equiaffine::exprlang::{default_vars, idempotent, Ast, BinOp};
use equiaffine::jets::ElemFn;
use equiaffine::{builtin, parse, Error, FieldSpec};
use proptest::prelude::*;

fn any_ast(dim: usize) -> impl Strategy<Value = Ast> {
    let leaf = prop_oneof![
        (0..dim).prop_map(Ast::Var),
        (-5.0f64..5.0).prop_map(Ast::Const),
        (0u8..20).prop_map(|k| Ast::Const(k as f64)),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        let op = prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)];
        let f = (0..ElemFn::ALL.len()).prop_map(|i| ElemFn::ALL[i]);
        prop_oneof![
            (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| Ast::Binary(o, Box::new(a), Box::new(b))),
            inner.clone().prop_map(|a| Ast::Neg(Box::new(a))),
            (inner.clone(), prop_oneof![Just(2.0), Just(3.0), Just(-1.0), Just(0.5), Just(1.5)])
                .prop_map(|(a, e)| Ast::Pow(Box::new(a), e)),
            (f, inner).prop_map(|(f, a)| Ast::Call(f, Box::new(a))),
        ]
    })
}

fn same_value(a: f64, b: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Printing then parsing keeps values, and a parsed tree survives the
    /// round trip unchanged (the parser folds `-literal`, so the first pass
    /// may normalize).
    #[test]
    fn print_parse_round_trip(ast in any_ast(3), x in prop::collection::vec(-2.0f64..2.0, 3)) {
        let vars = default_vars(3);
        let text = ast.print(&vars);
        let back = parse(&text, 3, &vars).unwrap();
        prop_assert_eq!(&parse(&back.print(&vars), 3, &vars).unwrap(), &back);
        match (ast.eval_f64(&x), back.eval_f64(&x)) {
            (Ok(a), Ok(b)) => prop_assert!(same_value(a, b), "{}: {} vs {}", text, a, b),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{}: {:?} vs {:?}", text, a, b),
        }
    }

    /// Random bytes never panic the parser.
    #[test]
    fn parser_is_total(text in "[x1-9a-z+*/^(). -]{0,30}") {
        let _ = parse(&text, 2, &["x1", "x2"]);
    }
}

#[test]
fn accepted_corpus() {
    let vars = ["x", "y"];
    let cases: [(&str, f64); 14] = [
        ("1", 1.0),
        ("x + y*2", 0.5 + 2.0 * -1.5),
        ("(x + y)*2", (0.5 - 1.5) * 2.0),
        ("-x^2", -0.25),
        ("2^3^2", 512.0),
        ("x - y - 1", 0.5 + 1.5 - 1.0),
        ("x / y / 2", 0.5 / -1.5 / 2.0),
        ("sin(x)^2 + cos(x)^2", 1.0),
        ("exp(log(2))", 2.0),
        ("sqrt(abs(y))", 1.5f64.sqrt()),
        ("sech(0) + tanh(0) + sinh(0) + cosh(0)", 2.0),
        ("1.5e1 + 2E-1", 15.2),
        ("pi", std::f64::consts::PI),
        ("  x*y  ", -0.75),
    ];
    for (text, expected) in cases {
        let ast = parse(text, 2, &vars).unwrap_or_else(|e| panic!("{text}: {e}"));
        let v = ast.eval_f64(&[0.5, -1.5]).unwrap();
        assert!((v - expected).abs() < 1e-14, "{text}: {v} vs {expected}");
    }
}

#[test]
fn rejected_corpus_reports_byte_offsets() {
    let vars = ["x", "y"];
    let cases: [(&str, usize); 7] = [
        ("", 0),
        ("x +", 3),
        ("(x + y", 6),
        ("x + * y", 4),
        ("sin(x", 5),
        ("x y", 2),
        ("2 ^ ", 4),
    ];
    for (text, offset) in cases {
        match parse(text, 2, &vars) {
            Err(Error::Syntax { offset: o, .. }) => assert_eq!(o, offset, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
    for (text, bad, offset) in [("x + zz", "zz", 4), ("sin x", "sin", 0)] {
        match parse(text, 2, &vars) {
            Err(Error::UnknownIdentifier { name, offset: o }) => {
                assert_eq!(name, bad);
                assert_eq!(o, offset);
            }
            other => panic!("{text}: {other:?}"),
        }
    }
}

fn jets_agree(a: &FieldSpec, b: &FieldSpec, point: &[f64]) {
    let ja = a.eval(point, 4).unwrap();
    let jb = b.eval(point, 4).unwrap();
    for (x, y) in ja.coeffs().iter().zip(jb.coeffs()) {
        assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{}: {x} vs {y}", a.label());
    }
}

#[test]
fn builtins_match_their_expressions() {
    let h = builtin("helicoid3", &[]).unwrap();
    let hx = FieldSpec::from_expr("x*sin(u) + y*cos(u)", &["u", "x", "y"]).unwrap();
    jets_agree(&h, &hx, &[0.7, -1.2, 2.5]);

    let gn = builtin("gn", &[]).unwrap();
    let gx = FieldSpec::from_expr("x1^2*x3 + x1*x2*x4 + x2^2*x5", &default_vars(5)).unwrap();
    jets_agree(&gn, &gx, &[0.3, -0.4, 1.1, 0.2, -2.0]);

    let p = builtin("paraboloid", &["3"]).unwrap();
    let px = FieldSpec::from_expr("x4 - (x1^2 + x2^2 + x3^2)/2", &default_vars(4)).unwrap();
    jets_agree(&p, &px, &[0.3, -0.4, 1.1, 0.2]);

    // symdet coordinates carry √2 on the off-diagonal entries
    let s = builtin("symdet", &["3"]).unwrap();
    let v = s.vars().to_vec();
    let text = format!(
        "{a}*{b}*{c} + 2*{d}*{f}*{e}/2^1.5 - {a}*{f}^2/2 - {b}*{e}^2/2 - {c}*{d}^2/2",
        a = v[0], d = v[1], e = v[2], b = v[3], f = v[4], c = v[5]
    );
    let sx = FieldSpec::from_expr(&text, &v).unwrap();
    jets_agree(&s, &sx, &[1.3, 0.2, -0.5, 0.9, 0.4, 2.0]);

    let cy = builtin("cheng_yau_det", &["2"]).unwrap();
    let v = cy.vars().to_vec();
    let text = format!("-1.5*(log({a}*{c} - {b}^2/2) - log(1.5))", a = v[0], b = v[1], c = v[2]);
    let cx = FieldSpec::from_expr(&text, &v).unwrap();
    jets_agree(&cy, &cx, &[1.3, 0.2, 0.9]);

    let genhel = builtin("genhel", &["x1*x2"]).unwrap();
    let point: [f64; 5] = [0.4, -0.3, 1.0, 2.0, -0.5];
    let (x1, x2) = (point[0], point[1]);
    let (s, c) = ((x2 * x1.cosh().powi(2)).sin(), (x2 * x1.cosh().powi(2)).cos());
    let expected = point[2] * c / x1.cosh() + point[3] * s / x1.cosh() + point[4] * x1.tanh() + x1 * x2;
    assert!((genhel.value(&point).unwrap() - expected).abs() < 1e-14);
}

#[test]
fn idempotents_are_unit_level_points() {
    for n in 1..=4 {
        let s = builtin("symdet", &[&n.to_string()]).unwrap();
        for p in 0..=n / 2 {
            let e = idempotent(n, p).unwrap();
            assert_eq!(s.value(&e).unwrap(), 1.0, "n={n} p={p}");
        }
    }
}


use std::fmt;
use std::sync::Arc;

use serde_json::json;

use super::ast::Ast;
use super::parser::parse;
use crate::error::{Error, Result};
use crate::forms::dense_determinant;
use crate::jets::{Jet, MAX_DIM, MAX_ORDER};

/// A scalar field that evaluates itself on jets, for fields that are not
/// expression trees (e.g. normalizations that need derivatives of another
/// field).
pub trait JetField: Send + Sync {
    fn dim(&self) -> usize;
    fn max_order(&self) -> usize;
    /// Evaluates on input jets that all share one shape; their constant
    /// terms form the base point.
    fn eval_jets(&self, inputs: &[Jet]) -> Result<Jet>;
    fn describe(&self) -> String;
}

enum Kind {
    Expr(Ast),
    Helicoid3,
    Symdet(usize),
    ChengYauDet(usize),
    Paraboloid(usize),
    Compose {
        psi: Ast,
        inner: FieldSpec,
    },
    Affine {
        inner: FieldSpec,
        matrix: Vec<f64>,
        offset: Vec<f64>,
    },
    Projective {
        inner: FieldSpec,
        a: Vec<f64>,
        b: Vec<f64>,
        c: Vec<f64>,
        d: f64,
    },
    Custom(Arc<dyn JetField>),
}

/// A scalar field on R^m in equiaffine coordinates.
#[derive(Clone)]
pub struct FieldSpec {
    dim: usize,
    vars: Vec<String>,
    label: String,
    kind: Arc<Kind>,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("vars", &self.vars)
            .finish()
    }
}

pub fn default_vars(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("x{i}")).collect()
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::Argument(format!("field dimension {dim} outside 1..={MAX_DIM}")))
    }
}

fn symdet_vars(n: usize) -> Vec<String> {
    let mut v = Vec::new();
    for i in 1..=n {
        for j in i..=n {
            v.push(format!("x{i}{j}"));
        }
    }
    v
}

fn symdet_size(n: usize) -> Result<usize> {
    let m = n * (n + 1) / 2;
    if n < 1 || m > MAX_DIM {
        return Err(Error::Argument(format!("symdet size {n} outside 1..=4")));
    }
    Ok(m)
}

impl FieldSpec {
    fn make(dim: usize, vars: Vec<String>, label: impl Into<String>, kind: Kind) -> Self {
        Self {
            dim,
            vars,
            label: label.into(),
            kind: Arc::new(kind),
        }
    }

    pub fn from_expr<S: AsRef<str>>(text: &str, vars: &[S]) -> Result<Self> {
        check_dim(vars.len())?;
        let ast = parse(text, vars.len(), vars)?;
        let vars: Vec<String> = vars.iter().map(|s| s.as_ref().to_string()).collect();
        Ok(Self::make(vars.len(), vars, "expr", Kind::Expr(ast)))
    }

    pub fn from_ast(ast: Ast, vars: Vec<String>, label: impl Into<String>) -> Result<Self> {
        check_dim(vars.len())?;
        if let Some(i) = ast.max_var() {
            if i >= vars.len() {
                return Err(Error::Argument(format!(
                    "expression uses variable {i} but the field has dimension {}",
                    vars.len()
                )));
            }
        }
        Ok(Self::make(vars.len(), vars, label, Kind::Expr(ast)))
    }

    pub fn custom(field: Arc<dyn JetField>, vars: Vec<String>) -> Result<Self> {
        check_dim(field.dim())?;
        if vars.len() != field.dim() {
            return Err(Error::Argument("variable names do not match dimension".into()));
        }
        let label = field.describe();
        Ok(Self::make(field.dim(), vars, label, Kind::Custom(field)))
    }

    /// F(u, x, y) = x sin u + y cos u.
    pub fn helicoid3() -> Self {
        Self::make(
            3,
            vec!["u".into(), "x".into(), "y".into()],
            "helicoid3",
            Kind::Helicoid3,
        )
    }

    /// Determinant on symmetric n×n matrices, with off-diagonal coordinates
    /// x_ij = 2^{1/2} X_ij so that the coordinate volume is the invariant one.
    pub fn symdet(n: usize) -> Result<Self> {
        let m = symdet_size(n)?;
        Ok(Self::make(m, symdet_vars(n), format!("symdet({n})"), Kind::Symdet(n)))
    }

    /// −((n+1)/2)(log P − (n/2) log((n+1)/2)) on positive definite matrices.
    pub fn cheng_yau_det(n: usize) -> Result<Self> {
        let m = symdet_size(n)?;
        Ok(Self::make(
            m,
            symdet_vars(n),
            format!("cheng_yau_det({n})"),
            Kind::ChengYauDet(n),
        ))
    }

    /// x_{m+1} − |x|²/2 on R^{m+1}.
    pub fn paraboloid(m: usize) -> Result<Self> {
        check_dim(m + 1)?;
        Ok(Self::make(
            m + 1,
            default_vars(m + 1),
            format!("paraboloid({m})"),
            Kind::Paraboloid(m),
        ))
    }

    /// x_{m+1} − f(x_1, …, x_m).
    pub fn graph(f: &Ast, m: usize) -> Result<Self> {
        check_dim(m + 1)?;
        if f.max_var().is_some_and(|i| i >= m) {
            return Err(Error::Argument(format!("graph function uses more than {m} variables")));
        }
        let ast = Ast::Var(m) - f.clone();
        let vars = default_vars(m + 1);
        let label = format!("graph({})", f.print(&vars));
        Self::from_ast(ast, vars, label)
    }

    /// a·x3 + b·x4 + c·x5 with a, b, c functions of (x1, x2).
    pub fn gn(a: &Ast, b: &Ast, c: &Ast) -> Result<Self> {
        for p in [a, b, c] {
            if p.max_var().is_some_and(|i| i >= 2) {
                return Err(Error::Argument("gn coefficients must depend on x1, x2 only".into()));
            }
        }
        let ast = a.clone() * Ast::Var(2) + b.clone() * Ast::Var(3) + c.clone() * Ast::Var(4);
        Self::from_ast(ast, default_vars(5), "gn")
    }

    /// The concrete example x1²x3 + x1x2x4 + x2²x5.
    pub fn gn_concrete() -> Self {
        let (x1, x2) = (Ast::Var(0), Ast::Var(1));
        Self::gn(&x1.clone().pow(2.0), &(x1 * x2.clone()), &x2.pow(2.0)).expect("valid coefficients")
    }

    /// Reparameterized field ψ∘F; `psi` is an expression in one variable.
    pub fn compose_psi(&self, psi: &Ast) -> Result<Self> {
        if psi.max_var().is_some_and(|i| i > 0) {
            return Err(Error::Argument("psi must be a function of one variable".into()));
        }
        Ok(Self::make(
            self.dim,
            self.vars.clone(),
            format!("psi∘{}", self.label),
            Kind::Compose {
                psi: psi.clone(),
                inner: self.clone(),
            },
        ))
    }

    /// G(x) = F(M x + c), `matrix` row-major.
    pub fn precompose_affine(&self, matrix: &[f64], offset: &[f64]) -> Result<Self> {
        let m = self.dim;
        if matrix.len() != m * m || offset.len() != m {
            return Err(Error::Argument("affine map shape does not match field".into()));
        }
        Ok(Self::make(
            m,
            self.vars.clone(),
            format!("{}∘affine", self.label),
            Kind::Affine {
                inner: self.clone(),
                matrix: matrix.to_vec(),
                offset: offset.to_vec(),
            },
        ))
    }

    /// G(x) = F((A x + b)/(c·x + d)), `a` row-major.
    pub fn precompose_projective(&self, a: &[f64], b: &[f64], c: &[f64], d: f64) -> Result<Self> {
        let m = self.dim;
        if a.len() != m * m || b.len() != m || c.len() != m {
            return Err(Error::Argument("projective map shape does not match field".into()));
        }
        Ok(Self::make(
            m,
            self.vars.clone(),
            format!("{}∘projective", self.label),
            Kind::Projective {
                inner: self.clone(),
                a: a.to_vec(),
                b: b.to_vec(),
                c: c.to_vec(),
                d,
            },
        ))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn ast(&self) -> Option<&Ast> {
        match &*self.kind {
            Kind::Expr(a) => Some(a),
            _ => None,
        }
    }

    pub fn convention(&self) -> &'static str {
        match &*self.kind {
            Kind::Symdet(_) | Kind::ChengYauDet(_) => {
                "equiaffine; off-diagonal coordinates x_ij = 2^(1/2) X_ij"
            }
            _ => "equiaffine; standard volume dx1^...^dxm",
        }
    }

    /// Highest jet order the field can produce.
    pub fn max_order(&self) -> usize {
        match &*self.kind {
            Kind::Compose { inner, .. }
            | Kind::Affine { inner, .. }
            | Kind::Projective { inner, .. } => inner.max_order(),
            Kind::Custom(f) => f.max_order().min(MAX_ORDER),
            _ => MAX_ORDER,
        }
    }

    /// Jet of the field at `point` up to `order`.
    pub fn eval(&self, point: &[f64], order: usize) -> Result<Jet> {
        if point.len() != self.dim {
            return Err(Error::Argument(format!(
                "point has {} coordinates, field dimension is {}",
                point.len(),
                self.dim
            )));
        }
        if order > self.max_order() {
            return Err(Error::Argument(format!(
                "field `{}` supports jets up to order {}",
                self.label,
                self.max_order()
            )));
        }
        let inputs = Jet::variables(point, order)?;
        self.eval_jets(&inputs)
    }

    pub fn value(&self, point: &[f64]) -> Result<f64> {
        if let Kind::Expr(ast) = &*self.kind {
            if point.len() != self.dim {
                return Err(Error::Argument("point dimension mismatch".into()));
            }
            return ast.eval_f64(point);
        }
        Ok(self.eval(point, 0)?.value())
    }

    /// Evaluates on arbitrary input jets (chain rule through the field).
    pub fn eval_jets(&self, x: &[Jet]) -> Result<Jet> {
        if x.len() != self.dim {
            return Err(Error::Argument(format!(
                "{} inputs for a field of dimension {}",
                x.len(),
                self.dim
            )));
        }
        match &*self.kind {
            Kind::Expr(ast) => ast.eval_named(x, &self.vars),
            Kind::Helicoid3 => Ok(&(&x[1] * &x[0].sin()) + &(&x[2] * &x[0].cos())),
            Kind::Symdet(n) => Ok(symdet_jet(*n, x)),
            Kind::ChengYauDet(n) => {
                let nf = *n as f64;
                let p = symdet_jet(*n, x);
                let log_p = p.ln().map_err(|e| match e {
                    Error::Domain { func, value, .. } => Error::Domain {
                        func,
                        value,
                        context: "cheng_yau_det needs det X > 0".into(),
                    },
                    other => other,
                })?;
                let c = 0.5 * nf * (0.5 * (nf + 1.0)).ln();
                Ok((log_p - c) * (-0.5 * (nf + 1.0)))
            }
            Kind::Paraboloid(m) => {
                let mut acc = x[*m].clone();
                for xi in &x[..*m] {
                    acc = &acc - &(xi * xi).scale(0.5);
                }
                Ok(acc)
            }
            Kind::Compose { psi, inner } => {
                let f = inner.eval_jets(x)?;
                psi.eval(&[f])
            }
            Kind::Affine {
                inner,
                matrix,
                offset,
            } => {
                let m = self.dim;
                let y: Vec<Jet> = (0..m).map(|i| affine_row(&matrix[i * m..(i + 1) * m], offset[i], x)).collect();
                inner.eval_jets(&y)
            }
            Kind::Projective { inner, a, b, c, d } => {
                let m = self.dim;
                let den = affine_row(c, *d, x);
                if den.value() == 0.0 {
                    return Err(Error::SingularMap("projective denominator vanishes".into()));
                }
                let inv = den.recip()?;
                let y: Vec<Jet> = (0..m)
                    .map(|i| &affine_row(&a[i * m..(i + 1) * m], b[i], x) * &inv)
                    .collect();
                inner.eval_jets(&y)
            }
            Kind::Custom(f) => f.eval_jets(x),
        }
    }

    /// Closed-form expression in `vars()`, when the field has one.
    pub fn closed_form(&self) -> Option<String> {
        match &*self.kind {
            Kind::Expr(ast) => Some(ast.print(&self.vars)),
            Kind::Helicoid3 => Some("x*sin(u) + y*cos(u)".into()),
            Kind::Symdet(n) => Some(symdet_text(*n)),
            Kind::ChengYauDet(n) => {
                let nf = *n as f64;
                Some(format!(
                    "-{}*(log({}) - {}*log({}))",
                    super::ast::format_number(0.5 * (nf + 1.0)),
                    symdet_text(*n),
                    super::ast::format_number(0.5 * nf),
                    super::ast::format_number(0.5 * (nf + 1.0)),
                ))
            }
            Kind::Paraboloid(m) => {
                let squares: Vec<String> = (1..=*m).map(|i| format!("x{i}^2")).collect();
                Some(format!("x{} - ({})/2", m + 1, squares.join(" + ")))
            }
            _ => None,
        }
    }

    pub fn describe(&self) -> serde_json::Value {
        json!({
            "label": self.label,
            "dim": self.dim,
            "vars": self.vars,
            "expr": self.closed_form(),
            "convention": self.convention(),
        })
    }
}

fn affine_row(row: &[f64], shift: f64, x: &[Jet]) -> Jet {
    let mut acc = x[0].constant_like(shift);
    for (c, xi) in row.iter().zip(x) {
        if *c != 0.0 {
            acc = &acc + &xi.scale(*c);
        }
    }
    acc
}

fn symdet_jet(n: usize, x: &[Jet]) -> Jet {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut entries = vec![x[0].constant_like(0.0); n * n];
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            let e = if i == j { x[k].clone() } else { x[k].scale(s) };
            entries[i * n + j] = e.clone();
            entries[j * n + i] = e;
            k += 1;
        }
    }
    dense_determinant(n, &entries)
}

// Leibniz expansion of det X in symdet coordinates.
fn symdet_text(n: usize) -> String {
    let entry = |i: usize, j: usize| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        if a == b {
            format!("x{}{}", a + 1, b + 1)
        } else {
            format!("(x{}{}*{:?})", a + 1, b + 1, std::f64::consts::FRAC_1_SQRT_2)
        }
    };
    let mut terms = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    permutations(&mut perm, 0, &mut |p, sign| {
        let factors: Vec<String> = (0..n).map(|i| entry(i, p[i])).collect();
        terms.push((sign, factors.join("*")));
    });
    let mut out = String::new();
    for (k, (sign, t)) in terms.iter().enumerate() {
        match (k, sign) {
            (0, s) if *s < 0 => out.push_str(&format!("-{t}")),
            (0, _) => out.push_str(t),
            (_, s) if *s < 0 => out.push_str(&format!(" - {t}")),
            _ => out.push_str(&format!(" + {t}")),
        }
    }
    out
}

fn permutations(p: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize], i32)) {
    if k == p.len() {
        let mut sign = 1;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                if p[i] > p[j] {
                    sign = -sign;
                }
            }
        }
        visit(p, sign);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, visit);
        p.swap(k, i);
    }
}

/// Coordinates of a symmetric matrix in symdet coordinates.
pub fn symdet_coords(x: &[Vec<f64>]) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            out.push(if i == j { x[i][i] } else { std::f64::consts::SQRT_2 * x[i][j] });
        }
    }
    out
}

/// Symmetric matrix from symdet coordinates.
pub fn symdet_matrix(n: usize, coords: &[f64]) -> Vec<Vec<f64>> {
    let mut x = vec![vec![0.0; n]; n];
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            let v = if i == j { coords[k] } else { coords[k] * std::f64::consts::FRAC_1_SQRT_2 };
            x[i][j] = v;
            x[j][i] = v;
            k += 1;
        }
    }
    x
}

/// E_p: diagonal with n − 2p entries +1 followed by 2p entries −1.
pub fn idempotent(n: usize, p: usize) -> Result<Vec<f64>> {
    if 2 * p > n {
        return Err(Error::Argument(format!("E{p} needs 2p ≤ n = {n}")));
    }
    let x: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match (i == j, i < n - 2 * p) {
                    (false, _) => 0.0,
                    (true, true) => 1.0,
                    (true, false) => -1.0,
                })
                .collect()
        })
        .collect();
    Ok(symdet_coords(&x))
}

fn arity(tag: &str, expected: &str, got: usize) -> Error {
    Error::Arity {
        tag: tag.into(),
        expected: expected.into(),
        got,
    }
}

fn parse_count(tag: &str, s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Argument(format!("{tag}: `{s}` is not a non-negative integer")))
}

/// Builtin registry. Parameters are strings: sizes as integers, functions
/// as expressions.
///
/// | tag | params |
/// |---|---|
/// | `helicoid3` | none |
/// | `genhel` | `[Q(x1,x2)]`, default `0` |
/// | `gn` | `[a, b, c]` in x1, x2; none for the concrete example |
/// | `symdet` | `n` |
/// | `graph` | `f(x1..xm)`, `[m]` (default 2) |
/// | `paraboloid` | `[m]` (default 2) |
/// | `cheng_yau_det` | `n` |
/// | `ruled` | `a1;…;a(n+1)`, `[Q]`, `[u-vars]` |
pub fn builtin(tag: &str, params: &[&str]) -> Result<FieldSpec> {
    let xs = default_vars(2);
    match tag {
        "helicoid3" => {
            if !params.is_empty() {
                return Err(arity(tag, "0", params.len()));
            }
            Ok(FieldSpec::helicoid3())
        }
        "genhel" => {
            let q = match params {
                [] => Ast::Const(0.0),
                [q] => parse(q, 2, &xs)?,
                _ => return Err(arity(tag, "0 or 1", params.len())),
            };
            Ok(crate::ruled::examples::genhel(&q)?.field().clone())
        }
        "gn" => match params {
            [] => Ok(FieldSpec::gn_concrete()),
            [a, b, c] => FieldSpec::gn(&parse(a, 2, &xs)?, &parse(b, 2, &xs)?, &parse(c, 2, &xs)?),
            _ => Err(arity(tag, "0 or 3", params.len())),
        },
        "symdet" => match params {
            [n] => FieldSpec::symdet(parse_count(tag, n)?),
            _ => Err(arity(tag, "1", params.len())),
        },
        "cheng_yau_det" => match params {
            [n] => FieldSpec::cheng_yau_det(parse_count(tag, n)?),
            _ => Err(arity(tag, "1", params.len())),
        },
        "paraboloid" => match params {
            [] => FieldSpec::paraboloid(2),
            [m] => FieldSpec::paraboloid(parse_count(tag, m)?),
            _ => Err(arity(tag, "0 or 1", params.len())),
        },
        "graph" => {
            let (f, m) = match params {
                [f] => (*f, 2),
                [f, m] => (*f, parse_count(tag, m)?),
                _ => return Err(arity(tag, "1 or 2", params.len())),
            };
            check_dim(m + 1)?;
            FieldSpec::graph(&parse(f, m, &default_vars(m))?, m)
        }
        "ruled" => {
            let (components, q, vars) = match params {
                [a] => (*a, "0", None),
                [a, q] => (*a, *q, None),
                [a, q, v] => (*a, *q, Some(*v)),
                _ => return Err(arity(tag, "1 to 3", params.len())),
            };
            let comps: Vec<&str> = components.split(';').map(str::trim).collect();
            let n = comps.len().saturating_sub(1);
            let vars: Vec<String> = match vars {
                Some(v) => v.split(',').map(|s| s.trim().to_string()).collect(),
                None => crate::ruled::default_immersion_vars(n),
            };
            let a = crate::ruled::CentroaffineImmersion::from_exprs(&comps, &vars)?;
            let q = parse(q, vars.len(), &vars)?;
            Ok(crate::ruled::RuledField::from_parts(a, q)?.field().clone())
        }
        _ => Err(Error::UnknownBuiltin(tag.into())),
    }
}

//! Field and point parsing shared by the subcommands.

use std::fmt;

use equiaffine::exprlang::idempotent;
use equiaffine::invariants::Tolerances;
use equiaffine::ruled::{build_ruled_field, examples, CentroaffineImmersion, RuledField};
use equiaffine::{builtin, parse, Ast, Error, FieldSpec};

use crate::args::{FieldArgs, PointArgs, TolArgs};
use crate::{EXIT_GEOMETRIC, EXIT_USAGE};

/// A failure that ends the command with `code`.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: if e.is_geometric() { EXIT_GEOMETRIC } else { EXIT_USAGE },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::usage(e.to_string())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;

pub fn field(args: &FieldArgs) -> Outcome<FieldSpec> {
    match (&args.source.builtin, &args.source.expr) {
        (Some(tag), None) => {
            let params: Vec<&str> = args.params.iter().map(String::as_str).collect();
            Ok(builtin(tag, &params)?)
        }
        (None, Some(text)) => {
            if args.vars.is_empty() {
                return Err(Failure::usage("--expr needs --vars"));
            }
            Ok(FieldSpec::from_expr(text, &args.vars)?)
        }
        _ => Err(Failure::usage("give exactly one of --builtin and --expr")),
    }
}

pub fn tolerances(args: &TolArgs) -> Outcome<Tolerances> {
    for (name, v) in [("--tol-regular", args.tol_regular), ("--tol-nondegen", args.tol_nondegen)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Failure::usage(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(Tolerances {
        regular: args.tol_regular,
        nondegen: args.tol_nondegen,
        ..Tolerances::default()
    })
}

/// Points from --point and --points-file, in that order.
pub fn points(args: &PointArgs, dim: usize) -> Outcome<Vec<Vec<f64>>> {
    let mut tokens: Vec<String> = args.points.clone();
    if let Some(path) = &args.points_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        tokens.extend(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(String::from),
        );
    }
    if tokens.is_empty() {
        return Err(Failure::usage("no points given (use --point or --points-file)"));
    }
    tokens.iter().map(|t| point(t, dim)).collect()
}

/// `x1,x2,...` or `E<p>`, the idempotent diag(1,...,1,−1,...,−1) with 2p
/// negative entries in symdet coordinates.
pub fn point(token: &str, dim: usize) -> Outcome<Vec<f64>> {
    let token = token.trim();
    if let Some(p) = token.strip_prefix('E').and_then(|p| p.parse::<usize>().ok()) {
        let n = triangular_root(dim)
            .ok_or_else(|| Failure::usage(format!("`{token}` needs a symmetric-matrix field, dimension {dim} is not n(n+1)/2")))?;
        return Ok(idempotent(n, p)?);
    }
    let coords = token
        .split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|_| Failure::usage(format!("bad coordinate `{c}` in point `{token}`")))
        })
        .collect::<Outcome<Vec<f64>>>()?;
    if coords.len() != dim {
        return Err(Failure::usage(format!(
            "point `{token}` has {} coordinates, the field has {dim}",
            coords.len()
        )));
    }
    if coords.iter().any(|c| !c.is_finite()) {
        return Err(Failure::usage(format!("point `{token}` is not finite")));
    }
    Ok(coords)
}

fn triangular_root(m: usize) -> Option<usize> {
    (1..=m).find(|n| n * (n + 1) / 2 == m)
}

/// The ruled fields with a closed-form level parameterization.
pub fn ruled_field(tag: &str, params: &[String]) -> Outcome<RuledField> {
    let xs = ["x1", "x2"];
    match (tag, params) {
        ("helicoid3", []) => Ok(examples::helicoid_field()),
        ("genhel", []) => Ok(examples::genhel(&Ast::Const(0.0))?),
        ("genhel", [q]) => Ok(examples::genhel(&parse(q, 2, &xs)?)?),
        ("ruled", [a, rest @ ..]) if rest.len() <= 2 => {
            let comps: Vec<&str> = a.split(';').map(str::trim).collect();
            let n = comps.len().saturating_sub(1);
            let vars: Vec<String> = match rest.get(1) {
                Some(v) => v.split(',').map(|s| s.trim().to_string()).collect(),
                None => equiaffine::ruled::default_immersion_vars(n),
            };
            let immersion = CentroaffineImmersion::from_exprs(&comps, &vars)?;
            let q = parse(rest.first().map_or("0", String::as_str), vars.len(), &vars)?;
            Ok(build_ruled_field(immersion, q)?)
        }
        ("helicoid3" | "genhel" | "ruled", _) => Err(Error::Arity {
            tag: tag.into(),
            expected: match tag {
                "helicoid3" => "0",
                "genhel" => "0 or 1",
                _ => "1 to 3",
            }
            .into(),
            got: params.len(),
        }
        .into()),
        _ => Err(Failure::usage(format!(
            "`{tag}` is not a ruled builtin (expected helicoid3, genhel or ruled)"
        ))),
    }
}

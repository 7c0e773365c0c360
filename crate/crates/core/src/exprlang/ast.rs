use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::jets::{ElemFn, Jet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

/// Expression tree. Exponents of `^` are folded to literals at parse time.
#[derive(Debug, Clone, PartialEq)]
pub enum Ast {
    Const(f64),
    Var(usize),
    Neg(Box<Ast>),
    Binary(BinOp, Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, f64),
    Call(ElemFn, Box<Ast>),
}

const PREC_UNARY: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

impl Ast {
    pub fn var(i: usize) -> Ast {
        Ast::Var(i)
    }

    pub fn constant(c: f64) -> Ast {
        Ast::Const(c)
    }

    pub fn pow(self, e: f64) -> Ast {
        Ast::Pow(Box::new(self), e)
    }

    pub fn call(f: ElemFn, arg: Ast) -> Ast {
        Ast::Call(f, Box::new(arg))
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Ast::Const(_) => None,
            Ast::Var(i) => Some(*i),
            Ast::Neg(a) | Ast::Pow(a, _) | Ast::Call(_, a) => a.max_var(),
            Ast::Binary(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// Replaces `Var(i)` by `replacements[i]`.
    pub fn substitute(&self, replacements: &[Ast]) -> Ast {
        match self {
            Ast::Const(c) => Ast::Const(*c),
            Ast::Var(i) => replacements[*i].clone(),
            Ast::Neg(a) => Ast::Neg(Box::new(a.substitute(replacements))),
            Ast::Binary(op, a, b) => Ast::Binary(
                *op,
                Box::new(a.substitute(replacements)),
                Box::new(b.substitute(replacements)),
            ),
            Ast::Pow(a, e) => Ast::Pow(Box::new(a.substitute(replacements)), *e),
            Ast::Call(f, a) => Ast::Call(*f, Box::new(a.substitute(replacements))),
        }
    }

    /// Renames variables by index: `Var(i)` becomes `Var(map[i])`.
    pub fn reindex(&self, map: &[usize]) -> Ast {
        let repl: Vec<Ast> = map.iter().map(|&j| Ast::Var(j)).collect();
        self.substitute(&repl)
    }

    /// Value of a variable-free tree.
    pub fn const_value(&self) -> Option<f64> {
        match self {
            Ast::Const(c) => Some(*c),
            Ast::Var(_) => None,
            Ast::Neg(a) => a.const_value().map(|v| -v),
            Ast::Binary(op, a, b) => {
                let (x, y) = (a.const_value()?, b.const_value()?);
                Some(match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                })
            }
            Ast::Pow(a, e) => a.const_value().map(|v| v.powf(*e)),
            Ast::Call(f, a) => a.const_value().map(|v| f.apply_f64(v)),
        }
    }

    /// Evaluates over jets; `inputs[i]` is substituted for variable i.
    pub fn eval(&self, inputs: &[Jet]) -> Result<Jet> {
        self.eval_in(inputs, None)
    }

    fn eval_in(&self, inputs: &[Jet], names: Option<&[String]>) -> Result<Jet> {
        match self {
            Ast::Const(c) => Ok(inputs[0].constant_like(*c)),
            Ast::Var(i) => inputs.get(*i).cloned().ok_or_else(|| {
                Error::Argument(format!("variable {i} has no input ({} given)", inputs.len()))
            }),
            Ast::Neg(a) => Ok(-a.eval_in(inputs, names)?),
            Ast::Binary(op, a, b) => {
                let x = a.eval_in(inputs, names)?;
                let y = b.eval_in(inputs, names)?;
                match op {
                    BinOp::Add => Ok(&x + &y),
                    BinOp::Sub => Ok(&x - &y),
                    BinOp::Mul => Ok(&x * &y),
                    BinOp::Div => x.checked_div(&y).map_err(|_| {
                        Error::SingularPoint(format!(
                            "division by zero in `{}`",
                            self.print_with(names)
                        ))
                    }),
                }
            }
            Ast::Pow(a, e) => {
                let x = a.eval_in(inputs, names)?;
                let r = if e.fract() == 0.0 && e.abs() <= 64.0 {
                    x.pow_int(*e as i32)
                } else {
                    x.pow_real(*e)
                };
                r.map_err(|err| self.locate(err, names))
            }
            Ast::Call(f, a) => {
                let x = a.eval_in(inputs, names)?;
                crate::jets::jet_elem(*f, &x).map_err(|err| self.locate(err, names))
            }
        }
    }

    fn locate(&self, err: Error, names: Option<&[String]>) -> Error {
        let context = format!("in `{}`", self.print_with(names));
        match err {
            Error::Domain { func, value, .. } => Error::Domain {
                func,
                value,
                context,
            },
            Error::SingularPoint(msg) => Error::SingularPoint(format!("{msg} {context}")),
            other => other,
        }
    }

    /// Evaluates with named variables so errors quote the source.
    pub fn eval_named(&self, inputs: &[Jet], names: &[String]) -> Result<Jet> {
        self.eval_in(inputs, Some(names))
    }

    /// Plain floating-point evaluation with the same domain rules as jets.
    pub fn eval_f64(&self, x: &[f64]) -> Result<f64> {
        match self {
            Ast::Const(c) => Ok(*c),
            Ast::Var(i) => x.get(*i).copied().ok_or_else(|| {
                Error::Argument(format!("variable {i} has no input ({} given)", x.len()))
            }),
            Ast::Neg(a) => Ok(-a.eval_f64(x)?),
            Ast::Binary(op, a, b) => {
                let (u, v) = (a.eval_f64(x)?, b.eval_f64(x)?);
                match op {
                    BinOp::Add => Ok(u + v),
                    BinOp::Sub => Ok(u - v),
                    BinOp::Mul => Ok(u * v),
                    BinOp::Div if v == 0.0 => Err(Error::SingularPoint("division by zero".into())),
                    BinOp::Div => Ok(u / v),
                }
            }
            Ast::Pow(a, e) => {
                let u = a.eval_f64(x)?;
                if e.fract() == 0.0 && e.abs() <= 64.0 {
                    if u == 0.0 && *e < 0.0 {
                        return Err(Error::SingularPoint("division by zero".into()));
                    }
                    Ok(u.powi(*e as i32))
                } else if u <= 0.0 {
                    Err(crate::jets::domain("pow", u))
                } else {
                    Ok(u.powf(*e))
                }
            }
            Ast::Call(f, a) => {
                let u = a.eval_f64(x)?;
                let bad = match f {
                    ElemFn::Log | ElemFn::Sqrt => u <= 0.0,
                    ElemFn::Abs | ElemFn::Sign => u == 0.0,
                    ElemFn::Tan => u.cos() == 0.0,
                    _ => false,
                };
                if bad {
                    Err(crate::jets::domain(f.name(), u))
                } else {
                    Ok(f.apply_f64(u))
                }
            }
        }
    }

    /// Pretty-prints with the given variable names. The output re-parses to
    /// the same tree up to folding of `-literal` into a negative constant.
    pub fn print(&self, names: &[String]) -> String {
        let mut out = String::new();
        self.write(&mut out, 0, &|i| names[i].clone());
        out
    }

    fn print_with(&self, names: Option<&[String]>) -> String {
        let mut out = String::new();
        match names {
            Some(n) => self.write(&mut out, 0, &|i| n.get(i).cloned().unwrap_or(format!("x{}", i + 1))),
            None => self.write(&mut out, 0, &|i| format!("x{}", i + 1)),
        }
        out
    }

    fn precedence(&self) -> u8 {
        match self {
            Ast::Const(c) if *c < 0.0 => PREC_UNARY,
            Ast::Const(_) | Ast::Var(_) | Ast::Call(..) => PREC_ATOM,
            Ast::Neg(_) => PREC_UNARY,
            Ast::Binary(op, ..) => op.precedence(),
            Ast::Pow(..) => PREC_POW,
        }
    }

    fn write(&self, out: &mut String, min_prec: u8, name: &dyn Fn(usize) -> String) {
        let paren = self.precedence() < min_prec;
        if paren {
            out.push('(');
        }
        match self {
            Ast::Const(c) => out.push_str(&format_number(*c)),
            Ast::Var(i) => out.push_str(&name(*i)),
            Ast::Neg(a) => {
                out.push('-');
                a.write(out, PREC_UNARY, name);
            }
            Ast::Binary(op, a, b) => {
                let p = op.precedence();
                a.write(out, p, name);
                out.push_str(op.symbol());
                b.write(out, p + 1, name);
            }
            Ast::Pow(a, e) => {
                a.write(out, PREC_ATOM, name);
                out.push('^');
                out.push_str(&format_number(*e));
            }
            Ast::Call(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.write(out, 0, name);
                out.push(')');
            }
        }
        if paren {
            out.push(')');
        }
    }
}

/// Shortest decimal that parses back to the same double.
pub(crate) fn format_number(c: f64) -> String {
    if c.fract() == 0.0 && c.abs() < 1e15 {
        format!("{}", c as i64)
    } else {
        format!("{c:?}")
    }
}

macro_rules! ast_ops {
    ($($tr:ident $m:ident $op:ident),*) => {$(
        impl $tr for Ast {
            type Output = Ast;
            fn $m(self, rhs: Ast) -> Ast {
                Ast::Binary(BinOp::$op, Box::new(self), Box::new(rhs))
            }
        }
        impl $tr<f64> for Ast {
            type Output = Ast;
            fn $m(self, rhs: f64) -> Ast {
                Ast::Binary(BinOp::$op, Box::new(self), Box::new(Ast::Const(rhs)))
            }
        }
    )*};
}

ast_ops!(Add add Add, Sub sub Sub, Mul mul Mul, Div div Div);

impl Neg for Ast {
    type Output = Ast;
    fn neg(self) -> Ast {
        Ast::Neg(Box::new(self))
    }
}

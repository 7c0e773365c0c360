//! Recursive-descent parser for field expressions.
//!
//! Precedence, loosest first: `+ -`, `* /`, unary `-`, `^`. Binary
//! operators associate to the left except `^`, which associates to the
//! right and must have a constant exponent.

use super::ast::{Ast, BinOp};
use crate::error::{Error, Result};
use crate::jets::ElemFn;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn syntax(offset: usize, expected: &[&str]) -> Error {
    Error::Syntax {
        offset,
        expected: expected.iter().map(|s| s.to_string()).collect(),
    }
}

const OPERAND: &[&str] = &["number", "identifier", "(", "-"];

fn lex(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let value: f64 = text[start..i]
                .parse()
                .map_err(|_| syntax(start, &["number"]))?;
            out.push(Token {
                tok: Tok::Num(value),
                offset: start,
            });
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(text[start..i].to_string()),
                offset: start,
            });
        } else if b"+-*/^()".contains(&c) {
            out.push(Token {
                tok: Tok::Sym(c as char),
                offset: start,
            });
            i += 1;
        } else {
            return Err(syntax(
                start,
                &["number", "identifier", "+", "-", "*", "/", "^", "(", ")"],
            ));
        }
    }
    out.push(Token {
        tok: Tok::End,
        offset: text.len(),
    });
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    vars: &'a [String],
    depth: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Ast> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Ast::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Ast> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Ast::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Ast> {
        if self.peek().tok == Tok::Sym('-') {
            self.bump();
            let operand = self.unary()?;
            // a negated constant is stored as a negative literal
            return Ok(match operand {
                Ast::Const(c) => Ast::Const(-c),
                other => Ast::Neg(Box::new(other)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Ast> {
        let base = self.primary()?;
        if self.peek().tok != Tok::Sym('^') {
            return Ok(base);
        }
        self.bump();
        let at = self.peek().offset;
        let exponent = self.unary()?;
        match exponent.const_value() {
            Some(e) if e.is_finite() => Ok(Ast::Pow(Box::new(base), e)),
            _ => Err(syntax(at, &["constant exponent"])),
        }
    }

    fn primary(&mut self) -> Result<Ast> {
        let t = self.bump();
        match t.tok {
            Tok::Num(v) => Ok(Ast::Const(v)),
            Tok::Sym('(') => {
                self.depth += 1;
                let inner = self.expr()?;
                self.close()?;
                self.depth -= 1;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if self.peek().tok == Tok::Sym('(') {
                    let Some(f) = ElemFn::from_name(&name) else {
                        return Err(Error::UnknownIdentifier {
                            name,
                            offset: t.offset,
                        });
                    };
                    self.bump();
                    self.depth += 1;
                    let arg = self.expr()?;
                    self.close()?;
                    self.depth -= 1;
                    return Ok(Ast::Call(f, Box::new(arg)));
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    Ok(Ast::Var(i))
                } else if name == "pi" {
                    Ok(Ast::Const(std::f64::consts::PI))
                } else {
                    Err(Error::UnknownIdentifier {
                        name,
                        offset: t.offset,
                    })
                }
            }
            _ => Err(syntax(t.offset, OPERAND)),
        }
    }

    fn close(&mut self) -> Result<()> {
        let t = self.bump();
        if t.tok == Tok::Sym(')') {
            Ok(())
        } else {
            Err(syntax(t.offset, &[")", "+", "-", "*", "/", "^"]))
        }
    }
}

/// Parses `text` over the variables `var_names` (variable i is the i-th
/// name).
pub fn parse<S: AsRef<str>>(text: &str, dim: usize, var_names: &[S]) -> Result<Ast> {
    if var_names.len() != dim {
        return Err(Error::Argument(format!(
            "{} variable names for dimension {dim}",
            var_names.len()
        )));
    }
    let vars: Vec<String> = var_names.iter().map(|s| s.as_ref().to_string()).collect();
    if let Some(bad) = vars.iter().find(|v| {
        let mut c = v.chars();
        !matches!(c.next(), Some(ch) if ch.is_ascii_alphabetic() || ch == '_')
            || !v.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
    }) {
        return Err(Error::Argument(format!("invalid variable name `{bad}`")));
    }
    let mut p = Parser {
        tokens: lex(text)?,
        pos: 0,
        vars: &vars,
        depth: 0,
    };
    let ast = p.expr()?;
    let t = p.peek().clone();
    if t.tok != Tok::End {
        let expected: &[&str] = if t.tok == Tok::Sym(')') {
            &["end of input", "+", "-", "*", "/", "^"]
        } else {
            &["+", "-", "*", "/", "^", "end of input"]
        };
        return Err(syntax(t.offset, expected));
    }
    debug_assert_eq!(p.depth, 0);
    Ok(ast)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn helicoid_tree() {
        let ast = parse("x*sin(u)+y*cos(u)", 3, &["u", "x", "y"]).unwrap();
        let expected = Ast::Var(1) * Ast::call(ElemFn::Sin, Ast::Var(0))
            + Ast::Var(2) * Ast::call(ElemFn::Cos, Ast::Var(0));
        assert_eq!(ast, expected);
    }

    #[test]
    fn gordan_noether_tree() {
        let v = ["x1", "x2", "x3", "x4", "x5"];
        let ast = parse("x1^2*x3 + x1*x2*x4 + x2^2*x5", 5, &v).unwrap();
        let x = |i| Ast::Var(i);
        let expected = x(0).pow(2.0) * x(2) + x(0) * x(1) * x(3) + x(1).pow(2.0) * x(4);
        assert_eq!(ast, expected);
    }

    #[test]
    fn unbalanced_paren() {
        match parse("sin(", 1, &["x"]) {
            Err(Error::Syntax { offset, expected }) => {
                assert_eq!(offset, 4);
                assert!(expected.contains(&"number".to_string()));
                assert!(expected.contains(&"(".to_string()));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        match parse("x + zeta", 1, &["x"]) {
            Err(Error::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "zeta");
                assert_eq!(offset, 4);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse("foo(x)", 1, &["x"]),
            Err(Error::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn precedence_and_associativity() {
        let v = ["a", "b", "c"];
        let (a, b, c) = (Ast::Var(0), Ast::Var(1), Ast::Var(2));
        assert_eq!(parse("a-b-c", 3, &v).unwrap(), (a.clone() - b.clone()) - c.clone());
        assert_eq!(parse("a/b*c", 3, &v).unwrap(), (a.clone() / b.clone()) * c.clone());
        assert_eq!(parse("-a^2", 3, &v).unwrap(), -(a.clone().pow(2.0)));
        assert_eq!(parse("-a*b", 3, &v).unwrap(), (-a.clone()) * b.clone());
        assert_eq!(parse("a^2^3", 3, &v).unwrap(), a.clone().pow(8.0));
        assert_eq!(parse("a^-1", 3, &v).unwrap(), a.clone().pow(-1.0));
        assert_eq!(parse("a^(1/2)", 3, &v).unwrap(), a.pow(0.5));
        assert!(matches!(parse("a^b", 3, &v), Err(Error::Syntax { offset: 2, .. })));
        assert_eq!(parse(" 2 *\tpi ", 3, &v).unwrap(), Ast::Const(2.0) * Ast::Const(std::f64::consts::PI));
    }

    #[test]
    fn trailing_tokens() {
        assert!(matches!(parse("x y", 1, &["x"]), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse("x)", 1, &["x"]), Err(Error::Syntax { offset: 1, .. })));
        assert!(matches!(parse("", 1, &["x"]), Err(Error::Syntax { offset: 0, .. })));
        assert!(matches!(parse("x # 2", 1, &["x"]), Err(Error::Syntax { offset: 2, .. })));
    }

    #[test]
    fn numbers() {
        let v: [&str; 0] = [];
        assert_eq!(parse("1.5e-3", 0, &v).unwrap(), Ast::Const(1.5e-3));
        assert_eq!(parse(".25", 0, &v).unwrap(), Ast::Const(0.25));
        assert_eq!(parse("-2", 0, &v).unwrap(), Ast::Const(-2.0));
        assert!(parse("2e", 0, &v).is_err());
    }

    #[test]
    fn printing_round_trips() {
        let v = names(&["u", "x", "y"]);
        for s in ["x*sin(u) + y*cos(u)", "-(x + y)^3", "(-2)^3", "x - (y - u)", "x/(y*u)", "x^-0.5"] {
            let ast = parse(s, 3, &v).unwrap();
            let printed = ast.print(&v);
            assert_eq!(parse(&printed, 3, &v).unwrap(), ast, "{s} -> {printed}");
        }
    }
}

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::index::{layout, Layout, MultiIndex};
use super::{MAX_DIM, MAX_ORDER};
use crate::error::{Error, Result};

/// Truncated Taylor expansion of a scalar field about a base point.
///
/// `coeffs[k]` is the coefficient of the k-th monomial of the layout, i.e.
/// the partial derivative divided by α!.
#[derive(Clone)]
pub struct Jet {
    layout: &'static Layout,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.dim())
            .field("order", &self.order())
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.same_shape(other) && self.coeffs == other.coeffs
    }
}

fn check_shape(dim: usize, order: usize) -> Result<()> {
    if !(1..=MAX_DIM).contains(&dim) {
        return Err(Error::Argument(format!(
            "jet dimension {dim} outside 1..={MAX_DIM}"
        )));
    }
    if order > MAX_ORDER {
        return Err(Error::Argument(format!(
            "jet order {order} exceeds {MAX_ORDER}"
        )));
    }
    Ok(())
}

pub(crate) fn domain(func: &'static str, value: f64) -> Error {
    Error::Domain {
        func,
        value,
        context: String::new(),
    }
}

/// Jet of the coordinate function x_{var} at `point`.
pub fn seed(point: &[f64], var: usize, order: usize) -> Result<Jet> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::Argument(format!(
            "seed order {order} outside 1..={MAX_ORDER}"
        )));
    }
    Jet::variable(point, var, order)
}

impl Jet {
    /// Coordinate jet; unlike [`seed`] this accepts order 0.
    pub fn variable(point: &[f64], var: usize, order: usize) -> Result<Jet> {
        check_shape(point.len(), order)?;
        if var >= point.len() {
            return Err(Error::Argument(format!(
                "variable index {var} out of range for dimension {}",
                point.len()
            )));
        }
        let l = layout(point.len(), order);
        let mut coeffs = vec![0.0; l.len()];
        coeffs[0] = point[var];
        if order >= 1 {
            coeffs[1 + var] = 1.0;
        }
        Ok(Jet { layout: l, coeffs })
    }

    /// All coordinate jets at `point`.
    pub fn variables(point: &[f64], order: usize) -> Result<Vec<Jet>> {
        (0..point.len())
            .map(|i| Jet::variable(point, i, order))
            .collect()
    }

    pub fn constant(dim: usize, order: usize, value: f64) -> Result<Jet> {
        check_shape(dim, order)?;
        Ok(Jet::constant_in(layout(dim, order), value))
    }

    pub(crate) fn constant_in(layout: &'static Layout, value: f64) -> Jet {
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[0] = value;
        Jet { layout, coeffs }
    }

    /// Builds a jet from coefficients in graded-lex order.
    pub fn from_coeffs(dim: usize, order: usize, coeffs: Vec<f64>) -> Result<Jet> {
        check_shape(dim, order)?;
        let l = layout(dim, order);
        if coeffs.len() != l.len() {
            return Err(Error::Argument(format!(
                "expected {} coefficients, got {}",
                l.len(),
                coeffs.len()
            )));
        }
        Ok(Jet { layout: l, coeffs })
    }

    /// A jet with the same shape as `self` and constant value `value`.
    pub fn constant_like(&self, value: f64) -> Jet {
        Jet::constant_in(self.layout, value)
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn order(&self) -> usize {
        self.layout.order()
    }

    pub fn layout(&self) -> &'static Layout {
        self.layout
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> Option<f64> {
        self.layout.index_of(alpha).map(|k| self.coeffs[k])
    }

    pub fn same_shape(&self, other: &Jet) -> bool {
        std::ptr::eq(self.layout, other.layout)
    }

    /// ∂^α at the base point, i.e. α! times the coefficient.
    pub fn extract(&self, alpha: &MultiIndex) -> Result<f64> {
        if alpha.dim() != self.dim() {
            return Err(Error::Argument(format!(
                "multi-index of dimension {} for a jet of dimension {}",
                alpha.dim(),
                self.dim()
            )));
        }
        match self.coeff(alpha) {
            Some(c) => Ok(alpha.factorial() * c),
            None => Err(Error::Argument(format!(
                "derivative of degree {} exceeds jet order {}",
                alpha.degree(),
                self.order()
            ))),
        }
    }

    /// Mixed partial ∂_{vars[0]}…∂_{vars[k-1]} at the base point.
    pub fn derivative(&self, vars: &[usize]) -> Result<f64> {
        if let Some(&v) = vars.iter().find(|&&v| v >= self.dim()) {
            return Err(Error::Argument(format!("variable index {v} out of range")));
        }
        self.extract(&MultiIndex::from_partials(self.dim(), vars))
    }

    pub fn gradient(&self) -> Vec<f64> {
        assert!(self.order() >= 1, "gradient of an order-0 jet");
        self.coeffs[1..=self.dim()].to_vec()
    }

    pub fn hessian(&self) -> Vec<Vec<f64>> {
        assert!(self.order() >= 2, "hessian of a jet of order < 2");
        let m = self.dim();
        let mut h = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in i..m {
                let v = self.derivative(&[i, j]).expect("order checked");
                h[i][j] = v;
                h[j][i] = v;
            }
        }
        h
    }

    /// ∂_i of the expansion, one order lower.
    pub fn partial(&self, i: usize) -> Result<Jet> {
        if self.order() == 0 {
            return Err(Error::Argument("partial of an order-0 jet".into()));
        }
        if i >= self.dim() {
            return Err(Error::Argument(format!("variable index {i} out of range")));
        }
        let lower = layout(self.dim(), self.order() - 1);
        let coeffs = self
            .layout
            .partial_map(i)
            .iter()
            .map(|&(src, factor)| factor * self.coeffs[src as usize])
            .collect();
        Ok(Jet {
            layout: lower,
            coeffs,
        })
    }

    /// Drops every monomial of degree above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.order(), "cannot raise jet order by truncation");
        let l = layout(self.dim(), order);
        Jet {
            layout: l,
            coeffs: self.coeffs[..l.len()].to_vec(),
        }
    }

    /// Chain rule: substitutes `inputs` (jets whose values are the base point
    /// of `self`) for the variables of `self`.
    pub fn compose(&self, inputs: &[Jet]) -> Result<Jet> {
        if inputs.len() != self.dim() {
            return Err(Error::Argument(format!(
                "composition needs {} inputs, got {}",
                self.dim(),
                inputs.len()
            )));
        }
        let target = inputs[0].layout;
        if inputs.iter().any(|j| !std::ptr::eq(j.layout, target)) {
            return Err(Error::Argument("composition inputs differ in shape".into()));
        }
        if target.order() > self.order() {
            return Err(Error::Argument(format!(
                "outer jet of order {} cannot produce order {}",
                self.order(),
                target.order()
            )));
        }
        let shifts: Vec<Jet> = inputs
            .iter()
            .map(|j| {
                let mut h = j.clone();
                h.coeffs[0] = 0.0;
                h
            })
            .collect();
        let count = self.layout.degree_range(target.order()).end;
        let mut powers: Vec<Jet> = Vec::with_capacity(count);
        let mut out = Jet::constant_in(target, self.coeffs[0]);
        powers.push(Jet::constant_in(target, 1.0));
        for (k, alpha) in self.layout.monomials()[1..count].iter().enumerate() {
            let e = alpha.exponents();
            let j = (0..e.len()).rev().find(|&j| e[j] > 0).expect("degree ≥ 1");
            let mut prev = e.to_vec();
            prev[j] -= 1;
            let p = self
                .layout
                .index_of(&MultiIndex::new(prev))
                .expect("lower monomial present");
            let term = &powers[p] * &shifts[j];
            out.axpy(self.coeffs[k + 1], &term);
            powers.push(term);
        }
        Ok(out)
    }

    fn axpy(&mut self, a: f64, x: &Jet) {
        if a != 0.0 {
            for (o, v) in self.coeffs.iter_mut().zip(&x.coeffs) {
                *o += a * v;
            }
        }
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet {
            layout: self.layout,
            coeffs: self.coeffs.iter().map(|v| v * c).collect(),
        }
    }

    /// f(self) given the Taylor coefficients c_k = f^{(k)}(a0)/k! at the
    /// constant term a0.
    pub(crate) fn series(&self, c: &[f64]) -> Jet {
        let order = self.order();
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut acc = Jet::constant_in(self.layout, c[order]);
        for k in (0..order).rev() {
            acc = &acc * &h;
            acc.coeffs[0] += c[k];
        }
        acc
    }

    fn recip_unchecked(&self) -> Jet {
        let a0 = self.value();
        let inv = 1.0 / a0;
        let mut c = Vec::with_capacity(self.order() + 1);
        let mut t = inv;
        for _ in 0..=self.order() {
            c.push(t);
            t *= -inv;
        }
        self.series(&c)
    }

    pub fn recip(&self) -> Result<Jet> {
        if self.value() == 0.0 {
            return Err(Error::SingularPoint(
                "division by a jet with zero constant term".into(),
            ));
        }
        Ok(self.recip_unchecked())
    }

    pub fn checked_div(&self, rhs: &Jet) -> Result<Jet> {
        Ok(self * &rhs.recip()?)
    }

    /// Integer power by repeated squaring.
    pub fn pow_int(&self, n: i32) -> Result<Jet> {
        let mut base = if n < 0 { self.recip()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = self.constant_like(1.0);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(acc)
    }

    pub(crate) fn powf_unchecked(&self, r: f64) -> Jet {
        let a0 = self.value();
        let mut c = Vec::with_capacity(self.order() + 1);
        let mut t = a0.powf(r);
        for k in 0..=self.order() {
            c.push(t);
            t *= (r - k as f64) / ((k + 1) as f64 * a0);
        }
        self.series(&c)
    }

    pub fn pow_real(&self, r: f64) -> Result<Jet> {
        if self.value() <= 0.0 {
            return Err(domain("pow", self.value()));
        }
        Ok(self.powf_unchecked(r))
    }

    fn cyclic(&self, vals: [f64; 4]) -> Jet {
        let mut fact = 1.0;
        let c: Vec<f64> = (0..=self.order())
            .map(|k| {
                if k > 0 {
                    fact *= k as f64;
                }
                vals[k % 4] / fact
            })
            .collect();
        self.series(&c)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.cyclic([e; 4])
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.cyclic([s, c, -s, -c])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.cyclic([c, -s, -c, s])
    }

    pub fn sinh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.cyclic([s, c, s, c])
    }

    pub fn cosh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.cyclic([c, s, c, s])
    }

    pub fn tanh(&self) -> Jet {
        &self.sinh() * &self.sech()
    }

    pub fn sech(&self) -> Jet {
        self.cosh().recip_unchecked()
    }

    pub fn tan(&self) -> Result<Jet> {
        let c = self.cos();
        if c.value() == 0.0 {
            return Err(domain("tan", self.value()));
        }
        Ok(&self.sin() * &c.recip_unchecked())
    }

    pub(crate) fn ln_unchecked(&self) -> Jet {
        let a0 = self.value();
        let mut c = vec![a0.ln()];
        let mut t = 1.0 / a0;
        for k in 1..=self.order() {
            c.push(t / k as f64);
            t *= -1.0 / a0;
        }
        self.series(&c)
    }

    pub fn ln(&self) -> Result<Jet> {
        if self.value() <= 0.0 {
            return Err(domain("log", self.value()));
        }
        Ok(self.ln_unchecked())
    }

    pub fn sqrt(&self) -> Result<Jet> {
        if self.value() <= 0.0 {
            return Err(domain("sqrt", self.value()));
        }
        Ok(self.powf_unchecked(0.5))
    }

    pub fn abs(&self) -> Result<Jet> {
        let v = self.value();
        if v == 0.0 {
            return Err(domain("abs", v));
        }
        Ok(if v < 0.0 { -self } else { self.clone() })
    }

    pub fn sign(&self) -> Result<Jet> {
        let v = self.value();
        if v == 0.0 {
            return Err(domain("sign", v));
        }
        Ok(self.constant_like(v.signum()))
    }
}

/// Elementary functions understood by jets and the expression language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElemFn {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Sech,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sign,
}

impl ElemFn {
    pub const ALL: [ElemFn; 12] = [
        ElemFn::Sin,
        ElemFn::Cos,
        ElemFn::Tan,
        ElemFn::Sinh,
        ElemFn::Cosh,
        ElemFn::Tanh,
        ElemFn::Sech,
        ElemFn::Exp,
        ElemFn::Log,
        ElemFn::Sqrt,
        ElemFn::Abs,
        ElemFn::Sign,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ElemFn::Sin => "sin",
            ElemFn::Cos => "cos",
            ElemFn::Tan => "tan",
            ElemFn::Sinh => "sinh",
            ElemFn::Cosh => "cosh",
            ElemFn::Tanh => "tanh",
            ElemFn::Sech => "sech",
            ElemFn::Exp => "exp",
            ElemFn::Log => "log",
            ElemFn::Sqrt => "sqrt",
            ElemFn::Abs => "abs",
            ElemFn::Sign => "sign",
        }
    }

    pub fn from_name(name: &str) -> Option<ElemFn> {
        ElemFn::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn apply_f64(self, x: f64) -> f64 {
        match self {
            ElemFn::Sin => x.sin(),
            ElemFn::Cos => x.cos(),
            ElemFn::Tan => x.tan(),
            ElemFn::Sinh => x.sinh(),
            ElemFn::Cosh => x.cosh(),
            ElemFn::Tanh => x.tanh(),
            ElemFn::Sech => 1.0 / x.cosh(),
            ElemFn::Exp => x.exp(),
            ElemFn::Log => x.ln(),
            ElemFn::Sqrt => x.sqrt(),
            ElemFn::Abs => x.abs(),
            ElemFn::Sign => x.signum(),
        }
    }
}

pub fn jet_elem(f: ElemFn, arg: &Jet) -> Result<Jet> {
    match f {
        ElemFn::Sin => Ok(arg.sin()),
        ElemFn::Cos => Ok(arg.cos()),
        ElemFn::Tan => arg.tan(),
        ElemFn::Sinh => Ok(arg.sinh()),
        ElemFn::Cosh => Ok(arg.cosh()),
        ElemFn::Tanh => Ok(arg.tanh()),
        ElemFn::Sech => Ok(arg.sech()),
        ElemFn::Exp => Ok(arg.exp()),
        ElemFn::Log => arg.ln(),
        ElemFn::Sqrt => arg.sqrt(),
        ElemFn::Abs => arg.abs(),
        ElemFn::Sign => arg.sign(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    PowInt,
    PowReal,
}

#[derive(Debug, Clone, Copy)]
pub enum Operand<'a> {
    Jet(&'a Jet),
    Real(f64),
}

pub fn jet_arith(op: ArithOp, lhs: &Jet, rhs: Operand<'_>) -> Result<Jet> {
    let rhs_jet = match rhs {
        Operand::Jet(j) => {
            if !lhs.same_shape(j) {
                return Err(Error::Argument(format!(
                    "operands differ in shape: ({}, {}) vs ({}, {})",
                    lhs.dim(),
                    lhs.order(),
                    j.dim(),
                    j.order()
                )));
            }
            j.clone()
        }
        Operand::Real(r) => lhs.constant_like(r),
    };
    match op {
        ArithOp::Add => Ok(lhs + &rhs_jet),
        ArithOp::Sub => Ok(lhs - &rhs_jet),
        ArithOp::Mul => Ok(lhs * &rhs_jet),
        ArithOp::Div => lhs.checked_div(&rhs_jet),
        ArithOp::PowInt | ArithOp::PowReal => {
            let Operand::Real(r) = rhs else {
                return Err(Error::Argument("exponent must be a real number".into()));
            };
            if op == ArithOp::PowInt {
                if r.fract() != 0.0 || r.abs() > f64::from(i32::MAX) {
                    return Err(Error::Argument(format!("{r} is not an integer exponent")));
                }
                lhs.pow_int(r as i32)
            } else {
                lhs.pow_real(r)
            }
        }
    }
}

pub fn extract(jet: &Jet, alpha: &MultiIndex) -> Result<f64> {
    jet.extract(alpha)
}

// Operator impls panic on shape mismatch; that is a programming error
// inside the crate, while `jet_arith` reports it as an argument error.

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &'a Jet) -> Jet {
        assert!(self.same_shape(rhs), "jet shape mismatch");
        Jet {
            layout: self.layout,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &'a Jet) -> Jet {
        assert!(self.same_shape(rhs), "jet shape mismatch");
        Jet {
            layout: self.layout,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &'a Jet) -> Jet {
        assert!(self.same_shape(rhs), "jet shape mismatch");
        let mut out = vec![0.0; self.coeffs.len()];
        for &(i, j, k) in self.layout.products() {
            out[k as usize] += self.coeffs[i as usize] * rhs.coeffs[j as usize];
        }
        Jet {
            layout: self.layout,
            coeffs: out,
        }
    }
}

impl<'a> Div<&'a Jet> for &'a Jet {
    type Output = Jet;
    /// Unchecked quotient: a zero divisor yields non-finite coefficients.
    fn div(self, rhs: &'a Jet) -> Jet {
        self * &rhs.recip_unchecked()
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &'a Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
        impl $tr<f64> for Jet {
            type Output = Jet;
            fn $m(self, rhs: f64) -> Jet {
                let c = self.constant_like(rhs);
                (&self).$m(&c)
            }
        }
    )*};
}

owned_ops!(Add add, Sub sub, Mul mul, Div div);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

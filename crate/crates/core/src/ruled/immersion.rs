use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::exprlang::{default_vars, parse, Ast};
use crate::forms::dense_determinant;
use crate::jets::{Jet, MAX_DIM};

/// Names used for the immersion variables when none are given: `u` for
/// curves, x1..xn otherwise.
pub fn default_immersion_vars(n: usize) -> Vec<String> {
    if n == 1 {
        vec!["u".into()]
    } else {
        default_vars(n)
    }
}

/// A map A: M ⊂ R^n → R^{n+1} given by n+1 component expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroaffineImmersion {
    n: usize,
    components: Vec<Ast>,
    vars: Vec<String>,
    domain: Vec<(f64, f64)>,
}

impl CentroaffineImmersion {
    pub fn from_exprs<S: AsRef<str>>(components: &[S], vars: &[String]) -> Result<Self> {
        let asts = components
            .iter()
            .map(|c| parse(c.as_ref(), vars.len(), vars))
            .collect::<Result<Vec<_>>>()?;
        Self::from_asts(asts, vars.to_vec())
    }

    pub fn from_asts(components: Vec<Ast>, vars: Vec<String>) -> Result<Self> {
        let n = vars.len();
        if n == 0 || 2 * n + 1 > MAX_DIM {
            return Err(Error::Argument(format!(
                "immersion dimension {n} outside 1..={}",
                (MAX_DIM - 1) / 2
            )));
        }
        if components.len() != n + 1 {
            return Err(Error::Argument(format!(
                "an immersion of dimension {n} needs {} components, got {}",
                n + 1,
                components.len()
            )));
        }
        if components.iter().any(|c| c.max_var().is_some_and(|i| i >= n)) {
            return Err(Error::Argument("component uses an undeclared variable".into()));
        }
        Ok(Self {
            n,
            components,
            vars,
            domain: vec![(-2.0, 2.0); n],
        })
    }

    pub fn with_domain(mut self, domain: Vec<(f64, f64)>) -> Result<Self> {
        if domain.len() != self.n || domain.iter().any(|(a, b)| !(a < b)) {
            return Err(Error::Argument("domain box must have one interval per variable".into()));
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> &[Ast] {
        &self.components
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    fn check_point(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.n {
            return Err(Error::Argument(format!(
                "immersion point has {} coordinates, expected {}",
                u.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// Jets of the components at u.
    pub fn eval(&self, u: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.check_point(u)?;
        let x = Jet::variables(u, order)?;
        self.eval_jets(&x)
    }

    pub(crate) fn eval_jets(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        self.components
            .iter()
            .map(|c| c.eval_named(x, &self.vars))
            .collect()
    }

    pub fn value(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_point(u)?;
        self.components.iter().map(|c| c.eval_f64(u)).collect()
    }

    /// dA as an (n+1)×n matrix, entry [i][I] = ∂a^i/∂u^I.
    pub fn differential(&self, u: &[f64]) -> Result<Vec<Vec<f64>>> {
        Ok(self.eval(u, 1)?.iter().map(Jet::gradient).collect())
    }

    /// det[A | dA] with columns A, A_1, …, A_n.
    pub fn bracket(&self, u: &[f64]) -> Result<f64> {
        let jets = self.eval(u, 1)?;
        let m = self.n + 1;
        let mut a = Vec::with_capacity(m * m);
        for j in &jets {
            a.push(j.value());
            a.extend(j.gradient());
        }
        Ok(dense_determinant(m, &a))
    }

    /// V^i = (−1)^{i+1} dA^{(i)} (1-based i), dA^{(i)} the minor of dA with
    /// row i deleted. ⟨A, V⟩ = det[A | dA].
    pub fn minors(&self, u: &[f64]) -> Result<Vec<f64>> {
        let da = self.differential(u)?;
        Ok(minors_of(&da))
    }

    /// Uniform samples in the domain box.
    pub fn sample<R: Rng>(&self, rng: &mut R, count: usize) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| self.domain.iter().map(|&(a, b)| rng.gen_range(a..b)).collect())
            .collect()
    }

    pub fn describe(&self) -> serde_json::Value {
        json!({
            "vars": self.vars,
            "components": self.components.iter().map(|c| c.print(&self.vars)).collect::<Vec<_>>(),
            "domain": self.domain,
        })
    }
}

pub(crate) fn minors_of(da: &[Vec<f64>]) -> Vec<f64> {
    let m = da.len();
    let n = m - 1;
    (0..m)
        .map(|i| {
            let rest: Vec<f64> = da
                .iter()
                .enumerate()
                .filter(|&(r, _)| r != i)
                .flat_map(|(_, row)| row.iter().copied())
                .collect();
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * dense_determinant(n, &rest)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub kappa: f64,
    /// max |det[A|dA] − κ| / |κ| over the samples
    pub max_dev: f64,
}

impl Calibration {
    pub const TOL: f64 = 1e-9;

    pub fn is_constant(&self) -> bool {
        self.max_dev <= Self::TOL
    }
}

/// Mean of det[A | dA] over the samples and its largest relative deviation.
pub fn calibrate_kappa(a: &CentroaffineImmersion, samples: &[Vec<f64>]) -> Result<Calibration> {
    if samples.is_empty() {
        return Err(Error::Argument("calibration needs at least one sample".into()));
    }
    let values = samples
        .iter()
        .map(|u| {
            let d = a.bracket(u)?;
            if d.abs() <= 1e-12 {
                return Err(Error::NonCentroaffine {
                    value: d,
                    point: u.clone(),
                });
            }
            Ok(d)
        })
        .collect::<Result<Vec<_>>>()?;
    let kappa = values.iter().sum::<f64>() / values.len() as f64;
    let max_dev = values
        .iter()
        .map(|d| (d - kappa).abs() / kappa.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(Calibration { kappa, max_dev })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WronskianReport {
    pub kappa: f64,
    pub max_dev: f64,
    pub constant: bool,
}

/// The curve t ↦ (a(t), b(t)); its Wronskian ab′ − a′b is the bracket.
pub fn wronskian_pair(a: &Ast, b: &Ast) -> Result<(CentroaffineImmersion, WronskianReport)> {
    let imm = CentroaffineImmersion::from_asts(vec![a.clone(), b.clone()], default_immersion_vars(1))?;
    let samples = imm.calibration_samples();
    let report = match calibrate_kappa(&imm, &samples) {
        Ok(c) => WronskianReport {
            kappa: c.kappa,
            max_dev: c.max_dev,
            constant: c.is_constant(),
        },
        Err(Error::NonCentroaffine { value, .. }) => WronskianReport {
            kappa: value,
            max_dev: f64::INFINITY,
            constant: false,
        },
        Err(e) => return Err(e),
    };
    Ok((imm, report))
}

impl CentroaffineImmersion {
    /// Fixed sample set used when a caller does not supply one: a regular
    /// grid over the domain box (9 points per axis, at most 729 points).
    pub fn calibration_samples(&self) -> Vec<Vec<f64>> {
        let per_axis = match self.n {
            1 => 33,
            2 => 9,
            3 => 5,
            _ => 3,
        };
        let mut out = vec![Vec::new()];
        for &(lo, hi) in &self.domain {
            let mut next = Vec::with_capacity(out.len() * per_axis);
            for p in &out {
                for k in 0..per_axis {
                    let t = (k as f64 + 0.5) / per_axis as f64;
                    let mut q = p.clone();
                    q.push(lo + t * (hi - lo));
                    next.push(q);
                }
            }
            out = next;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftReport {
    /// measured mean of det[A | dA]
    pub kappa_bar: f64,
    /// mean of |κ_B (ab′ − a′b)(ac)^{n−1}| over the samples
    pub predicted: f64,
    pub max_dev: f64,
    pub calibrated: bool,
}

/// A(t, u) = (a(t)·B(u·c(t)), b(t)) on I × M. The lifted variables are
/// x1 = t followed by the variables of B.
pub fn extension_lift(
    base: &CentroaffineImmersion,
    a: &Ast,
    b: &Ast,
    c: &Ast,
) -> Result<(CentroaffineImmersion, LiftReport)> {
    for f in [a, b, c] {
        if f.max_var().is_some_and(|i| i > 0) {
            return Err(Error::Argument("a, b, c must be functions of one variable".into()));
        }
    }
    let nb = base.n();
    let n = nb + 1;
    let interval = (-2.0, 2.0);
    let grid: Vec<f64> = (0..=200).map(|k| interval.0 + (interval.1 - interval.0) * k as f64 / 200.0).collect();
    let mut sign0 = 0.0;
    for &t in &grid {
        let v = a.eval_f64(&[t])?;
        if v.abs() <= 1e-12 || (sign0 != 0.0 && v.signum() != sign0) {
            return Err(Error::Precondition(format!("a vanishes on the interval near t = {t}")));
        }
        sign0 = v.signum();
    }
    let t = Ast::Var(0);
    let scaled: Vec<Ast> = (0..nb)
        .map(|k| Ast::Var(k + 1) * c.substitute(std::slice::from_ref(&t)))
        .collect();
    let mut comps: Vec<Ast> = base
        .components()
        .iter()
        .map(|bi| a.clone() * bi.substitute(&scaled))
        .collect();
    comps.push(b.clone());
    let lifted = CentroaffineImmersion::from_asts(comps, default_immersion_vars(n))?;
    let samples = lifted.calibration_samples();
    let cal = calibrate_kappa(&lifted, &samples)?;
    let base_cal = calibrate_kappa(base, &base.calibration_samples())?;
    let mut predicted = 0.0;
    for u in &samples {
        let tj = Jet::variable(&[u[0]], 0, 1)?;
        let (aj, bj) = (a.eval(std::slice::from_ref(&tj))?, b.eval(std::slice::from_ref(&tj))?);
        let cv = c.eval_f64(&[u[0]])?;
        let w = aj.value() * bj.derivative(&[0])? - aj.derivative(&[0])? * bj.value();
        predicted += (base_cal.kappa * w * (aj.value() * cv).powi(n as i32 - 1)).abs();
    }
    predicted /= samples.len() as f64;
    let report = LiftReport {
        kappa_bar: cal.kappa,
        predicted,
        max_dev: cal.max_dev,
        calibrated: cal.max_dev <= 1e-8,
    };
    Ok((lifted, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(text: &str) -> Ast {
        parse(text, 1, &["t"]).unwrap()
    }

    #[test]
    fn helicoid_bracket_and_minors() {
        let a = CentroaffineImmersion::from_exprs(&["sin(u)", "cos(u)"], &default_immersion_vars(1)).unwrap();
        let u = [0.7];
        assert!((a.bracket(&u).unwrap() + 1.0).abs() < 1e-15);
        let v = a.minors(&u).unwrap();
        assert!((v[0] + 0.7f64.sin()).abs() < 1e-15);
        assert!((v[1] + 0.7f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn wronskians() {
        let (_, r) = wronskian_pair(&one("sin(t)"), &one("cos(t)")).unwrap();
        assert!(r.constant && (r.kappa + 1.0).abs() < 1e-12);
        let (_, r) = wronskian_pair(&one("exp(-t)"), &one("-exp(t)")).unwrap();
        assert!(r.constant && (r.kappa.abs() - 2.0).abs() < 1e-12);
        let (_, r) = wronskian_pair(&one("t"), &one("t^2")).unwrap();
        assert!(!r.constant);
    }

    #[test]
    fn zero_bracket_is_an_error() {
        let a = CentroaffineImmersion::from_exprs(&["u", "2*u"], &default_immersion_vars(1)).unwrap();
        assert!(matches!(
            calibrate_kappa(&a, &[vec![0.5]]),
            Err(Error::NonCentroaffine { .. })
        ));
    }

    #[test]
    fn lift_requires_nonvanishing_a() {
        let circle = CentroaffineImmersion::from_exprs(&["cos(u)", "sin(u)"], &default_immersion_vars(1)).unwrap();
        let e = extension_lift(&circle, &one("t"), &one("1"), &one("1"));
        assert!(matches!(e, Err(Error::Precondition(_))));
    }

    #[test]
    fn grid_samples_cover_box() {
        let a = CentroaffineImmersion::from_exprs(&["1", "x1", "x2"], &default_immersion_vars(2)).unwrap();
        let s = a.calibration_samples();
        assert_eq!(s.len(), 81);
        assert!(s.iter().all(|p| p.iter().all(|x| x.abs() < 2.0)));
    }
}

//! Checks on a single level set: flatness of μ against ρ, the graph form of
//! the normal, the Euclidean Gauss–Kronecker curvature, and agreement of the
//! computed normal with the volume characterization.

use serde::Serialize;

use super::{analyze, is_regular, InvariantReport};
use crate::error::{Error, Result};
use crate::exprlang::{Ast, FieldSpec};
use crate::forms::{dense_adjugate, dense_determinant, SymForm};
use crate::jets::{Jet, Scalar};
use crate::numeric::{dot, kernel_basis, norm, rel_err, rel_err_vec, sign, sin_angle};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatnessReport {
    pub samples: usize,
    /// max |μ∧ρ| / max(1, |μ||ρ|)
    pub wedge: f64,
    /// max relative gap between nm and −sign(Ucal)|Ucal|^{−(n+1)/(n+2)} N
    pub normal_residual: f64,
    /// max sine of the angle between nm and N
    pub angle: f64,
    /// max |κ_namc − κ_eq|
    pub namc_residual: f64,
    pub flat: bool,
    pub namc_matches: bool,
}

fn wedge_norm(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let c = a[i] * b[j] - a[j] * b[i];
            s += c * c;
        }
    }
    s.sqrt()
}

fn normal_part(r: &InvariantReport) -> Result<(&[f64], &[f64], &[f64], f64)> {
    match (&r.mu, &r.rho, &r.nm, r.kappa_eq) {
        (Some(mu), Some(rho), Some(nm), Some(k)) => Ok((mu, rho, nm, k)),
        _ => Err(Error::Degenerate(r.ucal)),
    }
}

/// Flatness diagnostics over a sample of points.
pub fn level_flatness_test(field: &FieldSpec, points: &[Vec<f64>]) -> Result<FlatnessReport> {
    const FLAT_TOL: f64 = 1e-9;
    const NAMC_TOL: f64 = 1e-8;
    let mut out = FlatnessReport {
        samples: points.len(),
        wedge: 0.0,
        normal_residual: 0.0,
        angle: 0.0,
        namc_residual: 0.0,
        flat: true,
        namc_matches: true,
    };
    for p in points {
        let r = analyze(field, p)?;
        let (mu, rho, nm, kappa) = normal_part(&r)?;
        let n = r.n() as f64;
        let w = wedge_norm(mu, rho) / 1f64.max(norm(mu) * norm(rho));
        let c = -sign(r.ucal) * r.ucal.abs().powf(-(n + 1.0) / (n + 2.0));
        let flat_nm: Vec<f64> = r.n_vec.iter().map(|x| c * x).collect();
        out.wedge = out.wedge.max(w);
        out.normal_residual = out.normal_residual.max(rel_err_vec(nm, &flat_nm));
        out.angle = out.angle.max(sin_angle(nm, &r.n_vec));
        let namc = r.kappa_routes.map_or(f64::NAN, |k| k.namc);
        out.namc_residual = out.namc_residual.max((namc - kappa).abs());
    }
    out.flat = out.wedge <= FLAT_TOL;
    out.namc_matches = out.flat && out.namc_residual <= NAMC_TOL;
    Ok(out)
}

/// Normal of the graph x_{m+1} = f(x) at x, from the graph formula
/// nm = −|H(f)|^{1/(n+2)}(v + Z), where v = ∂_{m+1} and Z is the lift to the
/// graph of g^{IQ}∂_Q log|H(f)|^{1/(n+2)}, g^{IQ} being the inverse of the
/// Hessian of F = x_{m+1} − f along the graph directions, i.e. −f^{IQ}.
/// Agrees with `analyze` on x_{m+1} − f.
pub fn graph_normal(f: &Ast, m: usize, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < m {
        return Err(Error::Argument(format!("graph base needs {m} coordinates")));
    }
    let base = &x[..m];
    let vars = Jet::variables(base, 3)?;
    let jet = f.eval(&vars)?;
    let grad: Vec<f64> = jet.gradient();
    let p1: Vec<Jet> = (0..m).map(|i| jet.partial(i)).collect::<Result<_>>()?;
    let mut hess = Vec::with_capacity(m * m);
    for a in &p1 {
        for b in 0..m {
            hess.push(a.partial(b)?.truncate(1));
        }
    }
    let h = dense_determinant(m, &hess);
    let hv = h.value();
    let hv_scale = hess.iter().map(|j| j.value().abs()).fold(0.0, f64::max).powi(m as i32);
    if hv.abs() <= 1e-12 * hv_scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Degenerate(hv));
    }
    let e = 1.0 / (m as f64 + 2.0);
    let log_h = Scalar::ln(&Scalar::abs(&h)) * e;
    let dlog: Vec<f64> = (0..m).map(|q| log_h.derivative(&[q])).collect::<Result<_>>()?;
    let hvals: Vec<f64> = hess.iter().map(Jet::value).collect();
    let adj = dense_adjugate(m, &hvals);
    let z: Vec<f64> = (0..m)
        .map(|i| -(0..m).map(|q| adj[i * m + q] * dlog[q]).sum::<f64>() / hv)
        .collect();
    let scale = hv.abs().powf(e);
    let mut nm: Vec<f64> = z.iter().map(|zi| -scale * zi).collect();
    nm.push(-scale * (1.0 + dot(&grad, &z)));
    Ok(nm)
}

/// Euclidean Gauss–Kronecker curvature from the second fundamental form of
/// the level set with respect to E = −dF/|dF|.
pub fn gauss_kronecker_direct(field: &FieldSpec, point: &[f64]) -> Result<f64> {
    let jet = field.eval(point, 2)?;
    let df = jet.gradient();
    let hess = jet.hessian();
    let hs = SymForm::from_rows(&hess);
    if !is_regular(&df, &hs, point, super::Tolerances::default().regular) {
        return Err(Error::CriticalPoint(norm(&df)));
    }
    let m = df.len();
    let len = norm(&df);
    let e: Vec<f64> = df.iter().map(|x| -x / len).collect();
    let he: Vec<f64> = (0..m).map(|i| dot(&hess[i], &e)).collect();
    let ehe = dot(&e, &he);
    let mut lambda = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let pi = (hess[i][j] - he[i] * e[j] - he[j] * e[i] + ehe * e[i] * e[j]) / len;
            lambda.push(pi + e[i] * e[j]);
        }
    }
    Ok(dense_determinant(m, &lambda))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalAgreement {
    /// max_T |Σ T^i ∂_i nm^j ρ_j| over a tangent basis, scaled by |T|
    pub tau: f64,
    /// relative gap between |det[T_1..T_n, nm]| and |det h_T|^{1/2}
    pub volume: f64,
}

impl NormalAgreement {
    pub fn max_residual(&self) -> f64 {
        self.tau.max(self.volume)
    }
}

/// Checks that the computed normal is the one fixed by the classical
/// conditions: its derivative along the level set stays tangent (τ = 0) and
/// the volume it spans with a tangent frame equals the volume of the
/// induced second fundamental form in that frame.
pub fn normal_agreement(field: &FieldSpec, point: &[f64]) -> Result<NormalAgreement> {
    let r = analyze(field, point)?;
    let (_, rho, nm, _) = normal_part(&r)?;
    let grad_nm = r.grad_nm.as_ref().ok_or(Error::Degenerate(r.ucal))?;
    let m = point.len();
    let basis = kernel_basis(&r.df);
    let mut tau: f64 = 0.0;
    for t in &basis {
        let dnm: Vec<f64> = (0..m).map(|j| (0..m).map(|i| t[i] * grad_nm[i][j]).sum()).collect();
        tau = tau.max(dot(&dnm, rho).abs() / norm(t));
    }
    let df_nm = dot(&r.df, nm);
    let n = basis.len();
    let mut h = Vec::with_capacity(n * n);
    for a in &basis {
        for b in &basis {
            let hab: f64 = (0..m)
                .map(|i| (0..m).map(|j| a[i] * r.hess[i][j] * b[j]).sum::<f64>())
                .sum();
            h.push(-hab / df_nm);
        }
    }
    let mut frame = vec![0.0; m * m];
    for (col, v) in basis.iter().chain(std::iter::once(&nm.to_vec())).enumerate() {
        for row in 0..m {
            frame[row * m + col] = v[row];
        }
    }
    let lhs = dense_determinant(m, &frame).abs();
    let rhs = dense_determinant(n, &h).abs().sqrt();
    Ok(NormalAgreement {
        tau,
        volume: rel_err(lhs, rhs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::{builtin, idempotent, parse};

    fn xs(m: usize) -> Vec<String> {
        crate::exprlang::default_vars(m)
    }

    #[test]
    fn helicoid_is_flat() {
        let pts = vec![vec![0.3, 1.0, 2.0], vec![-1.2, 0.4, 0.1]];
        let r = level_flatness_test(&FieldSpec::helicoid3(), &pts).unwrap();
        assert!(r.flat && r.namc_matches, "{r:?}");
        assert!(r.angle < 1e-12);
    }

    #[test]
    fn symdet_is_flat() {
        let f = builtin("symdet", &["2"]).unwrap();
        let r = level_flatness_test(&f, &[idempotent(2, 0).unwrap()]).unwrap();
        assert!(r.flat && r.namc_matches, "{r:?}");
    }

    #[test]
    fn generic_field_is_not_flat() {
        let f = FieldSpec::from_expr("x3 - x1^4 - x1^2 - x2^2", &xs(3)).unwrap();
        let r = level_flatness_test(&f, &[vec![0.8, 0.2, 0.0]]).unwrap();
        assert!(r.wedge > 1e-3, "{r:?}");
        assert!(!r.flat);
    }

    #[test]
    fn graph_normals_agree() {
        for (text, x) in [
            ("(x1^2 + x2^2)/2", [0.3, -0.4]),
            ("x1*x2", [0.0, 0.0]),
            ("x1^4 + x1^2 + x2^2", [1.0, 1.0]),
        ] {
            let f = parse(text, 2, &xs(2)).unwrap();
            let g = graph_normal(&f, 2, &x).unwrap();
            let field = FieldSpec::graph(&f, 2).unwrap();
            let r = analyze(&field, &[x[0], x[1], 0.5]).unwrap();
            assert!(rel_err_vec(&g, r.nm.as_ref().unwrap()) < 1e-12, "{text}: {g:?}");
        }
    }

    #[test]
    fn paraboloid_graph_normal() {
        let f = parse("(x1^2 + x2^2)/2", 2, &xs(2)).unwrap();
        assert_eq!(graph_normal(&f, 2, &[0.7, 0.1]).unwrap(), vec![-0.0, -0.0, -1.0]);
    }

    #[test]
    fn gauss_kronecker_examples() {
        let sphere = FieldSpec::from_expr("(x1^2 + x2^2 + x3^2)/2", &xs(3)).unwrap();
        let k = gauss_kronecker_direct(&sphere, &[0.6, 0.0, 0.8]).unwrap();
        assert!((k - 1.0).abs() < 1e-14);
        let k = gauss_kronecker_direct(&FieldSpec::helicoid3(), &[0.0, 0.0, 0.0]).unwrap();
        assert!((k + 1.0).abs() < 1e-14);
        let k = gauss_kronecker_direct(&FieldSpec::gn_concrete(), &[1.0, 2.0, 0.5, -1.0, 3.0]).unwrap();
        assert!(k.abs() < 1e-12);
    }

    #[test]
    fn gauss_kronecker_matches_ucal() {
        let f = FieldSpec::from_expr("x3 - x1^4 - x1^2 - x2^2 + x1*x3^2", &xs(3)).unwrap();
        let p = [0.4, -0.3, 0.7];
        let r = analyze(&f, &p).unwrap();
        let k = gauss_kronecker_direct(&f, &p).unwrap();
        assert!(rel_err(k, r.gauss_kronecker) < 1e-12);
    }

    #[test]
    fn normal_agreement_on_quartic() {
        let f = FieldSpec::from_expr("x3 - x1^4 - x1^2 - x2^2 + 0.2*x1*x2*x3", &xs(3)).unwrap();
        let a = normal_agreement(&f, &[0.5, -0.6, 0.3]).unwrap();
        assert!(a.max_residual() < 1e-10, "{a:?}");
        let g = builtin("genhel", &["x1*x2"]).unwrap();
        let a = normal_agreement(&g, &[0.2, 0.1, -0.4, 0.9, 1.3]).unwrap();
        assert!(a.max_residual() < 1e-10, "{a:?}");
    }
}

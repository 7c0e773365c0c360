//! Pointwise equiaffine invariants of the level sets of a scalar field.
//!
//! Everything is computed from one order-4 jet of F. Quantities that must
//! be differentiated once more (μ, the normal, the conormal) are computed by
//! running the same generic pipeline over jets of lower order whose entries
//! are the partial derivatives of that jet, so no finite differences appear.

mod level;
mod transforms;

pub use level::{
    gauss_kronecker_direct, graph_normal, level_flatness_test, normal_agreement,
    FlatnessReport, NormalAgreement,
};
pub use transforms::{
    affine_transform, homogeneity_check, projective_transform, reilly_normalize,
    reparam_transform, AffineRecord, HomogeneityResidual, ProjectiveRecord, ReparamRecord,
    ReparamSide,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exprlang::FieldSpec;
use crate::forms::{
    adjugate, bordered_abs_permanent, bordered_determinant, dense_determinant, determinant, inertia_dense,
    inverse_unchecked, ContraForm, Inertia, SymForm,
};
use crate::jets::{Jet, Scalar};
use crate::numeric::{kernel_basis, norm, sign};

/// Tolerances for the regularity and nondegeneracy tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// |dF| ≤ regular · max(1, ‖Hess‖·|x|) counts as a critical point.
    pub regular: f64,
    /// |Ucal| ≤ nondegen · perm|[[Hess, dF], [dFᵀ, 0]]| counts as degenerate;
    /// the permanent of the absolute bordered matrix bounds every term of the
    /// expansion of Ucal.
    pub nondegen: f64,
    /// Pivot tolerance for inertia.
    pub pivot: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            regular: 1e-12,
            nondegen: 1e-10,
            pivot: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    pub regular_point: bool,
    pub nondegenerate: bool,
    #[serde(rename = "Ucal_sign")]
    pub ucal_sign: i8,
}

/// The four routes to the equiaffine mean curvature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaRoutes {
    /// trace S / n
    pub trace: f64,
    /// divergence form
    pub amc: f64,
    /// divergence form with det ∇ρ
    pub detrho: f64,
    /// closed form valid when μ ∧ ρ = 0
    pub namc: f64,
}

/// All pointwise data at one regular point. Normal-dependent entries are
/// absent when the level set is degenerate there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub point: Vec<f64>,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "dF")]
    pub df: Vec<f64>,
    pub hess: Vec<Vec<f64>>,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "U")]
    pub u: Vec<Vec<f64>>,
    #[serde(rename = "Ucal")]
    pub ucal: f64,
    #[serde(rename = "N")]
    pub n_vec: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sff: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sff_inv: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k_inv: Option<Vec<Vec<f64>>>,
    /// Inertia of k restricted to the tangent space of the level set.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k_inertia: Option<Inertia>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mu: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub nm: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rho: Option<Vec<f64>>,
    /// S[i][j] = S_i^j
    #[serde(rename = "S", skip_serializing_if = "Option::is_none", default)]
    pub s: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kappa_eq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kappa_routes: Option<KappaRoutes>,
    pub gauss_kronecker: f64,
    pub flags: Flags,
    /// grad_nm[i][j] = ∂_i nm^j
    #[serde(skip)]
    pub grad_nm: Option<Vec<Vec<f64>>>,
}

impl InvariantReport {
    /// Hypersurface dimension n = m − 1.
    pub fn n(&self) -> usize {
        self.point.len() - 1
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }

    /// Shape operator applied to a vector: (S X)^j = X^i S_i^j.
    pub fn shape_apply(&self, x: &[f64]) -> Option<Vec<f64>> {
        let s = self.s.as_ref()?;
        let m = x.len();
        Some((0..m).map(|j| (0..m).map(|i| x[i] * s[i][j]).sum()).collect())
    }
}

/// H, U, Ucal and N from dF and Hess over any scalar type.
pub(crate) fn hessian_data<T: Scalar>(
    df: &[T],
    hess: &SymForm<T>,
) -> (T, ContraForm<T>, T, Vec<T>) {
    let h = determinant(hess);
    let u = adjugate(hess);
    let ucal = bordered_determinant(hess, df);
    let n = u.apply(df);
    (h, u, ucal, n)
}

/// sff_ij and sff^ij, the latter through m_ij of the given q.
pub(crate) fn sff_pair<T: Scalar>(
    df: &[T],
    hess: &SymForm<T>,
    h: &T,
    ucal: &T,
    n: &[T],
    q: f64,
) -> (SymForm<T>, ContraForm<T>) {
    let m = df.len();
    let c = h.clone() / ucal.clone();
    let sff = SymForm::from_fn(m, |i, j| {
        hess.get(i, j).clone() - c.clone() * df[i].clone() * df[j].clone()
    });
    let d = ucal.constant_like(q) / ucal.clone();
    let mm = SymForm::from_fn(m, |i, j| {
        sff.get(i, j).clone() + d.clone() * df[i].clone() * df[j].clone()
    });
    let minv = inverse_unchecked(&mm);
    let e = (ucal.clone() * q).powf(-1.0);
    let sff_inv = ContraForm::from_fn(m, |i, j| {
        minv.get(i, j).clone() - e.clone() * n[i].clone() * n[j].clone()
    });
    (sff, sff_inv)
}

/// A q for which the rank-one term of m_ij has the size of sff_ij, so that
/// inverting m loses no more digits than sff itself carries. sff^ij does not
/// depend on q.
pub(crate) fn balanced_q(df: &[f64], hess: &SymForm<f64>, h: f64, ucal: f64) -> f64 {
    let c = h / ucal;
    let m = df.len();
    let mut scale: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            scale = scale.max((hess.get(i, j) - c * df[i] * df[j]).abs());
        }
    }
    let q = scale * ucal.abs() / norm(df).powi(2);
    if q.is_finite() && q > 0.0 {
        q
    } else {
        1.0
    }
}

/// Order-2 jets of dF and Hess (and the order-2 jet of F) from an order-4 jet.
pub(crate) fn derivative_jets(jet: &Jet) -> Result<(Jet, Vec<Jet>, SymForm<Jet>)> {
    let m = jet.dim();
    let target = jet.order() - 2;
    let p1: Vec<Jet> = (0..m).map(|i| jet.partial(i)).collect::<Result<_>>()?;
    let mut hess = Vec::with_capacity(m * (m + 1) / 2);
    for i in 0..m {
        for j in i..m {
            hess.push(p1[i].partial(j)?.truncate(target));
        }
    }
    let df = p1.iter().map(|p| p.truncate(target)).collect();
    Ok((jet.truncate(target), df, SymForm::new(m, hess)?))
}

fn rows<T: Clone>(a: &SymForm<T>) -> Vec<Vec<T>> {
    a.to_rows()
}

fn contra_rows(a: &ContraForm<f64>) -> Vec<Vec<f64>> {
    a.to_rows()
}

fn values(v: &[Jet]) -> Vec<f64> {
    v.iter().map(Jet::value).collect()
}

fn sym_values(a: &SymForm<Jet>) -> SymForm<f64> {
    a.map(Jet::value)
}

pub(crate) fn is_regular(df: &[f64], hess: &SymForm<f64>, point: &[f64], tol: f64) -> bool {
    norm(df) > tol * 1f64.max(hess.max_abs() * norm(point))
}

pub(crate) fn is_nondegenerate(ucal: f64, df: &[f64], hess: &SymForm<f64>, tol: f64) -> bool {
    let scale = bordered_abs_permanent(hess, df).max(f64::MIN_POSITIVE);
    ucal.abs() > tol * scale
}

/// Inertia of a covariant form restricted to ker(df).
pub fn tangent_inertia(form: &SymForm<f64>, df: &[f64], tol: f64) -> Inertia {
    let basis = kernel_basis(df);
    let r = basis.len();
    let mut dense = Vec::with_capacity(r * r);
    for a in &basis {
        for b in &basis {
            dense.push(form.pair(a, b));
        }
    }
    inertia_dense(r, &dense, tol)
}

pub fn analyze(field: &FieldSpec, point: &[f64]) -> Result<InvariantReport> {
    analyze_with(field, point, &Tolerances::default())
}

pub fn analyze_with(field: &FieldSpec, point: &[f64], tol: &Tolerances) -> Result<InvariantReport> {
    if field.max_order() < 4 {
        return Err(Error::Argument(format!(
            "analyze needs order-4 jets; field `{}` supports order {}",
            field.label(),
            field.max_order()
        )));
    }
    let jet = field.eval(point, 4)?;
    let m = jet.dim();
    let n = m - 1;
    let nf = n as f64;
    let (f2, df2, hess2) = derivative_jets(&jet)?;
    let df = values(&df2);
    let hess = sym_values(&hess2);
    if !is_regular(&df, &hess, point, tol.regular) {
        return Err(Error::CriticalPoint(norm(&df)));
    }
    let (h, u, ucal, nvec) = hessian_data(&df, &hess);
    let gauss_kronecker = ucal / norm(&df).powi(m as i32 + 1);
    let nondegenerate = is_nondegenerate(ucal, &df, &hess, tol.nondegen);
    let mut report = InvariantReport {
        point: point.to_vec(),
        f: f2.value(),
        df: df.clone(),
        hess: rows(&hess),
        h,
        u: contra_rows(&u),
        ucal,
        n_vec: nvec.clone(),
        sff: None,
        sff_inv: None,
        k: None,
        k_inv: None,
        k_inertia: None,
        mu: None,
        nm: None,
        rho: None,
        s: None,
        kappa_eq: None,
        kappa_routes: None,
        gauss_kronecker,
        flags: Flags {
            regular_point: true,
            nondegenerate,
            ucal_sign: if nondegenerate { sign(ucal) as i8 } else { 0 },
        },
        grad_nm: None,
    };
    if !nondegenerate {
        return Ok(report);
    }

    // μ needs first derivatives of Ucal: order-2 jets give them exactly.
    let ucal2 = bordered_determinant(&hess2, &df2);
    let ucal1 = ucal2.truncate(1);
    let mu1: Vec<Jet> = (0..m)
        .map(|i| Ok(ucal2.partial(i)? / (ucal1.clone() * (nf + 2.0))))
        .collect::<Result<_>>()?;

    let df1: Vec<Jet> = df2.iter().map(|j| j.truncate(1)).collect();
    let hess1 = hess2.map(|j| j.truncate(1));
    let (h1, _, _, n1) = hessian_data(&df1, &hess1);
    let (sff1, sff_inv1) = sff_pair(&df1, &hess1, &h1, &ucal1, &n1, balanced_q(&df, &hess, h, ucal));
    let a1 = Scalar::abs(&ucal1).powf(1.0 / (nf + 2.0));
    let kinv1 = sff_inv1.scale(&a1);
    let kinv_mu1 = kinv1.apply(&mu1);
    let nm1: Vec<Jet> = (0..m)
        .map(|j| -(a1.clone() * n1[j].clone() / ucal1.clone()) - kinv_mu1[j].clone())
        .collect();
    let rho1: Vec<Jet> = df1.iter().map(|fj| -(fj.clone() / a1.clone())).collect();

    let d = |x: &Jet, i: usize| x.derivative(&[i]).expect("order-1 jet");
    let grad_nm: Vec<Vec<f64>> = (0..m).map(|i| nm1.iter().map(|v| d(v, i)).collect()).collect();
    let grad_rho: Vec<f64> = (0..m)
        .flat_map(|i| rho1.iter().map(move |r| (i, r)))
        .map(|(i, r)| d(r, i))
        .collect();
    let div: f64 = (0..m).map(|p| d(&kinv_mu1[p], p)).sum();

    let a = a1.value();
    let mu = values(&mu1);
    let nm = values(&nm1);
    let rho = values(&rho1);
    let n_mu = crate::numeric::dot(&nvec, &mu);
    let c = (n_mu - h) / ucal;
    let s: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| -grad_nm[i][j] + c * df[i] * nm[j]).collect())
        .collect();
    let trace: f64 = (0..m).map(|i| s[i][i]).sum();
    let det_grad_rho = dense_determinant(m, &grad_rho);
    let routes = KappaRoutes {
        trace: trace / nf,
        amc: (div + (nf + 2.0) * a * (h - n_mu) / ucal) / nf,
        detrho: (div
            + if n % 2 == 0 { -1.0 } else { 1.0 } * (nf + 2.0) * sign(ucal) * det_grad_rho)
            / nf,
        namc: (nf + 2.0) * sign(ucal) * ucal.abs().powf(-(nf + 1.0) / (nf + 2.0)) * (h - n_mu) / nf,
    };

    let sff = sym_values(&sff1);
    let k = sff.map(|x| x / a);
    let k_inv = kinv1.map(Jet::value);
    report.k_inertia = Some(tangent_inertia(&k, &df, tol.pivot));
    report.sff = Some(rows(&sff));
    report.sff_inv = Some(sff_inv1.map(Jet::value).to_rows());
    report.k = Some(rows(&k));
    report.k_inv = Some(k_inv.to_rows());
    report.mu = Some(mu);
    report.nm = Some(nm);
    report.rho = Some(rho);
    report.s = Some(s);
    report.kappa_eq = Some(routes.trace);
    report.kappa_routes = Some(routes);
    report.grad_nm = Some(grad_nm);
    Ok(report)
}

/// H(F) = det Hess F.
pub fn hessian_determinant(field: &FieldSpec, point: &[f64]) -> Result<f64> {
    let jet = field.eval(point, 2)?;
    Ok(determinant(&SymForm::from_rows(&jet.hessian())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UInvariant {
    #[serde(rename = "Ucal")]
    pub ucal: f64,
    #[serde(rename = "N")]
    pub n: Vec<f64>,
    #[serde(rename = "U")]
    pub u: Vec<Vec<f64>>,
    #[serde(rename = "H")]
    pub h: f64,
    /// |Ucal − dF(N)| / max(1, |Ucal|)
    pub consistency: f64,
}

/// Ucal as minus the bordered determinant, with N = U·dF.
pub fn u_invariant(field: &FieldSpec, point: &[f64]) -> Result<UInvariant> {
    let jet = field.eval(point, 2)?;
    let df = jet.gradient();
    let hess = SymForm::from_rows(&jet.hessian());
    let (h, u, ucal, n) = hessian_data(&df, &hess);
    let via_n = crate::numeric::dot(&df, &n);
    Ok(UInvariant {
        ucal,
        consistency: crate::numeric::rel_err(ucal, via_n),
        n,
        u: u.to_rows(),
        h,
    })
}

/// sff^ij computed through m_ij with an arbitrary nonzero q.
pub fn sff_inverse_with_q(field: &FieldSpec, point: &[f64], q: f64) -> Result<ContraForm<f64>> {
    if q == 0.0 {
        return Err(Error::Argument("q must be nonzero".into()));
    }
    let jet = field.eval(point, 2)?;
    let df = jet.gradient();
    let hess = SymForm::from_rows(&jet.hessian());
    let (h, _, ucal, n) = hessian_data(&df, &hess);
    if !is_nondegenerate(ucal, &df, &hess, Tolerances::default().nondegen) {
        return Err(Error::Degenerate(ucal));
    }
    Ok(sff_pair(&df, &hess, &h, &ucal, &n, q).1)
}

/// det m_ij for the given q; equals q when the level set is nondegenerate.
pub fn m_determinant(field: &FieldSpec, point: &[f64], q: f64) -> Result<f64> {
    let jet = field.eval(point, 2)?;
    let df = jet.gradient();
    let hess = SymForm::from_rows(&jet.hessian());
    let (h, _, ucal, _) = hessian_data(&df, &hess);
    let c = (q - h) / ucal;
    let m = SymForm::from_fn(df.len(), |i, j| hess.get(i, j) + c * df[i] * df[j]);
    Ok(determinant(&m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::{builtin, idempotent};

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn helicoid_at_reference_point() {
        let r = analyze(&FieldSpec::helicoid3(), &[0.0, 1.0, 1.0]).unwrap();
        close(r.ucal, -1.0, 1e-14);
        close(r.h, 0.0, 1e-14);
        let nm = r.nm.unwrap();
        close(nm[0], 0.0, 1e-14);
        close(nm[1], 0.0, 1e-14);
        close(nm[2], -1.0, 1e-14);
        close(r.kappa_eq.unwrap(), 0.0, 1e-13);
    }

    #[test]
    fn paraboloid_graph() {
        let f = FieldSpec::paraboloid(2).unwrap();
        let r = analyze(&f, &[0.4, -1.3, 2.0]).unwrap();
        close(r.ucal, 1.0, 1e-14);
        assert_eq!(r.nm.unwrap(), vec![0.0, 0.0, -1.0]);
        close(r.kappa_eq.unwrap(), 0.0, 1e-14);
    }

    #[test]
    fn symdet_two_at_identity() {
        let f = builtin("symdet", &["2"]).unwrap();
        let p = idempotent(2, 0).unwrap();
        let r = analyze(&f, &p).unwrap();
        close(r.h, 1.0, 1e-14);
        close(r.ucal, 2.0, 1e-14);
        let c = 2f64.powf(-0.75);
        for (x, y) in r.nm.as_ref().unwrap().iter().zip(&p) {
            close(*x, -c * y, 1e-14);
        }
        let routes = r.kappa_routes.unwrap();
        for k in [routes.trace, routes.amc, routes.detrho, routes.namc] {
            close(k, c, 1e-13);
        }
    }

    #[test]
    fn gordan_noether_is_partial() {
        let r = analyze(&FieldSpec::gn_concrete(), &[1.0; 5]).unwrap();
        assert!(!r.flags.nondegenerate);
        assert!(r.nm.is_none() && r.kappa_eq.is_none());
        assert!(r.ucal.abs() < 1e-12);
        assert!(r.gauss_kronecker.abs() < 1e-12);
        let json = r.to_json();
        assert!(json.get("nm").is_none());
        assert_eq!(json["flags"]["nondegenerate"], false);
    }

    #[test]
    fn critical_point_is_an_error() {
        let f = FieldSpec::from_expr("x^2 + y^2 + z^2", &["x", "y", "z"]).unwrap();
        assert!(matches!(analyze(&f, &[0.0; 3]), Err(Error::CriticalPoint(_))));
    }

    #[test]
    fn transversality_and_kernel() {
        let f = FieldSpec::from_expr("x3 - x1^4 - x1^2 - x2^2 + 0.3*x1*x2*x3", &["x1", "x2", "x3"])
            .unwrap();
        let r = analyze(&f, &[0.7, -0.4, 0.2]).unwrap();
        let nm = r.nm.as_ref().unwrap();
        let n = r.n() as f64;
        let dfnm = crate::numeric::dot(&r.df, nm);
        close(dfnm, -r.ucal.abs().powf(1.0 / (n + 2.0)), 1e-12);
        let s = r.s.as_ref().unwrap();
        for row in s {
            close(crate::numeric::dot(row, &r.df), 0.0, 1e-11);
        }
        let routes = r.kappa_routes.unwrap();
        close(routes.trace, routes.amc, 1e-10);
        close(routes.trace, routes.detrho, 1e-10);
    }

    #[test]
    fn sff_inverse_independent_of_q() {
        let f = builtin("genhel", &["x1*x2"]).unwrap();
        let p = [0.3, -0.2, 0.5, 1.1, -0.7];
        let a = sff_inverse_with_q(&f, &p, 1.0).unwrap();
        let b = sff_inverse_with_q(&f, &p, 7.3).unwrap();
        for (x, y) in a.entries().iter().zip(b.entries()) {
            close(*x, *y, 1e-11 * 1f64.max(x.abs()));
        }
        close(m_determinant(&f, &p, 2.5).unwrap(), 2.5, 1e-10);
    }

    #[test]
    fn u_invariant_examples() {
        let f = FieldSpec::from_expr("(x^2 + y^2 + z^2)/2", &["x", "y", "z"]).unwrap();
        let u = u_invariant(&f, &[1.0, 2.0, -2.0]).unwrap();
        close(u.ucal, 9.0, 1e-13);
        assert!(u.consistency < 1e-15);
        let g = builtin("genhel", &[]).unwrap();
        close(u_invariant(&g, &[0.4, 1.2, -0.3, 0.8, 2.0]).unwrap().ucal, 1.0, 1e-12);
    }

    #[test]
    fn hessian_determinant_examples() {
        let f = FieldSpec::from_expr("x1^2 + x2^2 + x3^2 + x4^2", &["x1", "x2", "x3", "x4"]).unwrap();
        close(hessian_determinant(&f, &[0.1, 0.2, 0.3, 0.4]).unwrap(), 16.0, 1e-12);
        close(hessian_determinant(&FieldSpec::helicoid3(), &[0.3, 1.0, 2.0]).unwrap(), 0.0, 1e-15);
    }
}

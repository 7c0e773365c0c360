//! Behaviour of H, U and the normal under reparameterization of F and
//! under affine and projective changes of the ambient coordinates.

use std::sync::Arc;

use serde::Serialize;

use super::{analyze, derivative_jets, hessian_data, is_nondegenerate, u_invariant, Tolerances};
use crate::error::{Error, Result};
use crate::exprlang::{Ast, FieldSpec, JetField};
use crate::forms::{bordered_determinant, dense_determinant, SymForm};
use crate::jets::{Jet, Scalar};
use crate::numeric::{max_abs, rel_err, rel_err_vec, sign};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityResidual {
    /// |(λ−1)·Ucal − λ·H·F|
    pub ucal: f64,
    /// max |(λ−1)·N − H·x|
    pub n: f64,
}

/// Residuals of the identities satisfied by a field positively homogeneous
/// of degree λ about the origin. Nothing is assumed; a non-homogeneous
/// field simply produces large residuals.
pub fn homogeneity_check(field: &FieldSpec, point: &[f64], lambda: f64) -> Result<HomogeneityResidual> {
    let u = u_invariant(field, point)?;
    let f = field.value(point)?;
    let n = u
        .n
        .iter()
        .zip(point)
        .map(|(ni, xi)| ((lambda - 1.0) * ni - u.h * xi).abs())
        .fold(0.0, f64::max);
    Ok(HomogeneityResidual {
        ucal: ((lambda - 1.0) * u.ucal - lambda * u.h * f).abs(),
        n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReparamSide {
    #[serde(rename = "Ucal")]
    pub ucal: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "N")]
    pub n: Vec<f64>,
    pub nm: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReparamRecord {
    pub original: ReparamSide,
    pub composed: ReparamSide,
    /// ψ′ and ψ″ at F(point)
    pub psi1: f64,
    pub psi2: f64,
    pub upsif: f64,
    pub hpsif: f64,
    pub psifn: f64,
    /// nm(ψ∘F) against sign(ψ′)·nm(F); absent at degenerate points.
    pub nm_sign: Option<f64>,
}

impl ReparamRecord {
    pub fn max_residual(&self) -> f64 {
        [self.upsif, self.hpsif, self.psifn, self.nm_sign.unwrap_or(0.0)]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn side(field: &FieldSpec, point: &[f64]) -> Result<ReparamSide> {
    let jet = field.eval(point, field.max_order().min(4))?;
    let hess = SymForm::from_rows(&jet.hessian());
    let (h, _, ucal, n) = hessian_data(&jet.gradient(), &hess);
    let nm = if field.max_order() >= 4 {
        analyze(field, point).ok().and_then(|r| r.nm)
    } else {
        None
    };
    Ok(ReparamSide { ucal, h, n, nm })
}

/// Compares (Ucal, H, N, nm) of F and ψ∘F at one point.
pub fn reparam_transform(field: &FieldSpec, psi: &Ast, point: &[f64]) -> Result<ReparamRecord> {
    let f = field.value(point)?;
    let t = Jet::variable(&[f], 0, 2)?;
    let p = psi.eval(&[t])?;
    let (psi1, psi2) = (p.derivative(&[0])?, p.derivative(&[0, 0])?);
    if psi1.abs() <= 1e-12 * 1f64.max(p.value().abs()) {
        return Err(Error::StationaryPsi(psi1));
    }
    let composed_field = field.compose_psi(psi)?;
    let original = side(field, point)?;
    let composed = side(&composed_field, point)?;
    let n = (point.len() - 1) as i32;
    let upsif = rel_err(composed.ucal, psi1.powi(n + 2) * original.ucal);
    let hpsif = rel_err(
        composed.h,
        psi1.powi(n + 1) * (original.h + psi2 / psi1 * original.ucal),
    );
    let scaled: Vec<f64> = original.n.iter().map(|x| psi1.powi(n + 1) * x).collect();
    let psifn = rel_err_vec(&composed.n, &scaled);
    let nm_sign = match (&original.nm, &composed.nm) {
        (Some(a), Some(b)) => {
            let flipped: Vec<f64> = a.iter().map(|x| sign(psi1) * x).collect();
            Some(rel_err_vec(b, &flipped))
        }
        _ => None,
    };
    Ok(ReparamRecord {
        original,
        composed,
        psi1,
        psi2,
        upsif,
        hpsif,
        psifn,
        nm_sign,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineRecord {
    /// det of the linear part
    pub det: f64,
    /// H(G)(y) against det²·H(F)(My + c)
    pub h: f64,
    /// Ucal(G)(y) against det²·Ucal(F)(My + c)
    pub ucal: f64,
    /// nm(G)(y) against |det|^{2/(n+2)} M⁻¹ nm(F)(My + c)
    pub nm: Option<f64>,
}

impl AffineRecord {
    pub fn max_residual(&self) -> f64 {
        self.h.max(self.ucal).max(self.nm.unwrap_or(0.0))
    }
}

fn solve(m: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    // Cramer's rule is enough at these sizes and keeps the oracle independent
    // of the factorizations in `forms`.
    let det = dense_determinant(m, a);
    (0..m)
        .map(|j| {
            let mut aj = a.to_vec();
            for i in 0..m {
                aj[i * m + j] = b[i];
            }
            dense_determinant(m, &aj) / det
        })
        .collect()
}

/// Compares G = F(M·+c) with F at y and at My + c.
pub fn affine_transform(
    field: &FieldSpec,
    matrix: &[f64],
    offset: &[f64],
    point: &[f64],
) -> Result<AffineRecord> {
    let m = field.dim();
    if matrix.len() != m * m || offset.len() != m || point.len() != m {
        return Err(Error::Argument("affine map shape does not match field".into()));
    }
    let det = dense_determinant(m, matrix);
    if det.abs() <= 1e-12 * max_abs(matrix).powi(m as i32) {
        return Err(Error::SingularMap(format!("det of linear part = {det:e}")));
    }
    let image: Vec<f64> = (0..m)
        .map(|i| offset[i] + (0..m).map(|j| matrix[i * m + j] * point[j]).sum::<f64>())
        .collect();
    let g = field.precompose_affine(matrix, offset)?;
    let before = side(field, &image)?;
    let after = side(&g, point)?;
    let d2 = det * det;
    let nm = match (&before.nm, &after.nm) {
        (Some(a), Some(b)) => {
            let n = (m - 1) as f64;
            let c = det.abs().powf(2.0 / (n + 2.0));
            let expected: Vec<f64> = solve(m, matrix, a).iter().map(|x| c * x).collect();
            Some(rel_err_vec(b, &expected))
        }
        _ => None,
    };
    Ok(AffineRecord {
        det,
        h: rel_err(after.h, d2 * before.h),
        ucal: rel_err(after.ucal, d2 * before.ucal),
        nm,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectiveRecord {
    /// det TΦ at the point
    pub jacobian: f64,
    /// Ucal(F∘Φ)(x) against (det TΦ)²·Ucal(F)(Φ(x))
    pub ucal: f64,
}

/// Compares F∘Φ with F for Φ(x) = (Ax + b)/(c·x + d). The Jacobian
/// determinant comes from the closed form det[[A, b], [cᵀ, d]]/(c·x + d)^{m+1}.
pub fn projective_transform(
    field: &FieldSpec,
    a: &[f64],
    b: &[f64],
    c: &[f64],
    d: f64,
    point: &[f64],
) -> Result<ProjectiveRecord> {
    let m = field.dim();
    if point.len() != m {
        return Err(Error::Argument("point dimension mismatch".into()));
    }
    let g = field.precompose_projective(a, b, c, d)?;
    let den = d + c.iter().zip(point).map(|(ci, xi)| ci * xi).sum::<f64>();
    if den == 0.0 {
        return Err(Error::SingularMap("projective denominator vanishes".into()));
    }
    let mut block = Vec::with_capacity((m + 1) * (m + 1));
    for i in 0..m {
        block.extend_from_slice(&a[i * m..(i + 1) * m]);
        block.push(b[i]);
    }
    block.extend_from_slice(c);
    block.push(d);
    let jacobian = dense_determinant(m + 1, &block) / den.powi(m as i32 + 1);
    if jacobian == 0.0 {
        return Err(Error::SingularMap("projective map is not invertible".into()));
    }
    let image: Vec<f64> = (0..m)
        .map(|i| (b[i] + (0..m).map(|j| a[i * m + j] * point[j]).sum::<f64>()) / den)
        .collect();
    let before = u_invariant(field, &image)?.ucal;
    let after = u_invariant(&g, point)?.ucal;
    Ok(ProjectiveRecord {
        jacobian,
        ucal: rel_err(after, jacobian * jacobian * before),
    })
}

/// G = |U(F)|^{−1/(n+2)}(F − r), evaluated by computing the jet of U(F)
/// from a jet of F two orders higher.
struct ReillyField {
    inner: FieldSpec,
    r: f64,
}

impl JetField for ReillyField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn max_order(&self) -> usize {
        self.inner.max_order().saturating_sub(2)
    }

    fn eval_jets(&self, inputs: &[Jet]) -> Result<Jet> {
        let base: Vec<f64> = inputs.iter().map(Jet::value).collect();
        let k = inputs[0].order();
        let jet = self.inner.eval(&base, k + 2)?;
        let (f, df, hess) = derivative_jets(&jet)?;
        let ucal = bordered_determinant(&hess, &df);
        if ucal.value() == 0.0 {
            return Err(Error::Degenerate(0.0));
        }
        let n = (self.dim() - 1) as f64;
        let g = Scalar::abs(&ucal).powf(-1.0 / (n + 2.0)) * (f - self.r);
        g.compose(inputs)
    }

    fn describe(&self) -> String {
        format!("reilly({})", self.inner.label())
    }
}

/// The normalized field of the level set through `point`.
pub fn reilly_normalize(field: &FieldSpec, point: &[f64]) -> Result<FieldSpec> {
    if field.max_order() < 3 {
        return Err(Error::Argument("normalization needs jets of order ≥ 3".into()));
    }
    let jet = field.eval(point, 2)?;
    let df = jet.gradient();
    let hess = SymForm::from_rows(&jet.hessian());
    let (_, _, ucal, _) = hessian_data(&df, &hess);
    if !is_nondegenerate(ucal, &df, &hess, Tolerances::default().nondegen) {
        return Err(Error::Degenerate(ucal));
    }
    let r = jet.value();
    FieldSpec::custom(
        Arc::new(ReillyField {
            inner: field.clone(),
            r,
        }),
        field.vars().to_vec(),
    )
}

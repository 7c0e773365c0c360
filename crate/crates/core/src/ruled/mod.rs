//! Ruled hypersurfaces F(u, x) = ⟨A(u), x⟩ + Q(u) built from centroaffine
//! immersions A: M ⊂ R^n → R^{n+1}.
//!
//! Ambient coordinates are the n immersion variables followed by the n+1
//! fiber variables x_1..x_{n+1}.

mod contact;
pub mod examples;
mod immersion;

pub use contact::{contact_symplectic_check, ContactReport};
pub use immersion::{
    calibrate_kappa, default_immersion_vars, extension_lift, wronskian_pair, Calibration,
    CentroaffineImmersion, LiftReport, WronskianReport,
};

use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::exprlang::{default_vars, Ast, FieldSpec};
use crate::forms::{adjugate, dense_determinant, SymForm};
use crate::invariants::analyze;
use crate::numeric::{dot, max_abs, norm, rel_err, rel_err_vec};

fn fiber_vars(vars: &[String]) -> Vec<String> {
    let n = vars.len();
    if n == 1 && vars[0] == "u" {
        vec!["x".into(), "y".into()]
    } else if vars == default_vars(n).as_slice() {
        (n + 1..=2 * n + 1).map(|i| format!("x{i}")).collect()
    } else {
        (1..=n + 1).map(|i| format!("y{i}")).collect()
    }
}

/// The field F(u, x) = Σ a^i(u) x_i + Q(u) with its measured κ.
#[derive(Debug, Clone)]
pub struct RuledField {
    immersion: CentroaffineImmersion,
    q: Ast,
    field: FieldSpec,
    calibration: Calibration,
}

impl RuledField {
    /// Builds the field without insisting that det[A | dA] be constant; the
    /// measured calibration is recorded either way.
    pub fn from_parts(immersion: CentroaffineImmersion, q: Ast) -> Result<Self> {
        let n = immersion.n();
        if q.max_var().is_some_and(|i| i >= n) {
            return Err(Error::Argument("Q must depend on the immersion variables only".into()));
        }
        let mut f = q.clone();
        for (i, a) in immersion.components().iter().enumerate() {
            f = f + a.clone() * Ast::Var(n + i);
        }
        let mut vars = immersion.vars().to_vec();
        vars.extend(fiber_vars(immersion.vars()));
        let label = format!("ruled({})", immersion.describe()["components"]);
        let field = FieldSpec::from_ast(f, vars, label)?;
        let calibration = calibrate_kappa(&immersion, &immersion.calibration_samples())
            .unwrap_or(Calibration {
                kappa: 0.0,
                max_dev: f64::INFINITY,
            });
        Ok(Self {
            immersion,
            q,
            field,
            calibration,
        })
    }

    pub fn immersion(&self) -> &CentroaffineImmersion {
        &self.immersion
    }

    pub fn q(&self) -> &Ast {
        &self.q
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn kappa(&self) -> f64 {
        self.calibration.kappa
    }

    pub fn calibration(&self) -> Calibration {
        self.calibration
    }

    pub fn n(&self) -> usize {
        self.immersion.n()
    }

    /// Random ambient points: u from the domain box, x from [−2, 2]^{n+1}.
    pub fn sample<R: Rng>(&self, rng: &mut R, count: usize) -> Vec<Vec<f64>> {
        let n = self.n();
        self.immersion
            .sample(rng, count)
            .into_iter()
            .map(|mut u| {
                u.extend((0..=n).map(|_| rng.gen_range(-2.0..2.0)));
                u
            })
            .collect()
    }

    /// V(u) as an ambient vector (zero in the u slots).
    pub fn v_ambient(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut v = vec![0.0; self.n()];
        v.extend(self.immersion.minors(u)?);
        Ok(v)
    }

    /// Y_I = a^{I+1} ∂_{x_I} − a^I ∂_{x_{I+1}}, I = 1..n, as ambient vectors.
    /// Where two consecutive components vanish together the frame falls back
    /// to a pivoted basis of ker A(u).
    pub fn ruling_frame(&self, u: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = self.n();
        let a = self.immersion.value(u)?;
        let scale = max_abs(&a);
        let tridiagonal_ok = a.windows(2).all(|w| w[0].abs().max(w[1].abs()) > 1e-8 * scale);
        let fiber: Vec<Vec<f64>> = if tridiagonal_ok {
            (0..n)
                .map(|i| {
                    let mut y = vec![0.0; n + 1];
                    y[i] = a[i + 1];
                    y[i + 1] = -a[i];
                    y
                })
                .collect()
        } else {
            crate::numeric::kernel_basis(&a)
        };
        Ok(fiber
            .into_iter()
            .map(|y| {
                let mut v = vec![0.0; n];
                v.extend(y);
                v
            })
            .collect())
    }

    pub fn describe(&self) -> serde_json::Value {
        json!({
            "immersion": self.immersion.describe(),
            "Q": self.q.print(self.immersion.vars()),
            "vars": self.field.vars(),
            "kappa": self.calibration.kappa,
            "max_dev": self.calibration.max_dev,
        })
    }
}

/// Checked construction: A must be calibrated to 1e−9.
pub fn build_ruled_field(immersion: CentroaffineImmersion, q: Ast) -> Result<RuledField> {
    calibrate_kappa(&immersion, &immersion.calibration_samples())?;
    let rf = RuledField::from_parts(immersion, q)?;
    if !rf.calibration.is_constant() {
        return Err(Error::Calibration {
            max_dev: rf.calibration.max_dev,
        });
    }
    Ok(rf)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VFieldRecord {
    pub v: Vec<f64>,
    /// ‖Hess F · V‖ / (‖Hess F‖‖V‖)
    pub radical: f64,
    #[serde(rename = "dF_V")]
    pub df_v: f64,
    /// det[A | dA] at the point
    pub bracket: f64,
    /// ‖adj Hess F − (−1)^n V⊗V‖ / max(1, ‖V⊗V‖)
    pub adjugate: f64,
}

pub fn v_field(rf: &RuledField, point: &[f64]) -> Result<VFieldRecord> {
    let n = rf.n();
    let u = &point[..n];
    let v = rf.v_ambient(u)?;
    let jet = rf.field().eval(point, 2)?;
    let hess = jet.hessian();
    let hv: Vec<f64> = hess.iter().map(|row| dot(row, &v)).collect();
    let hs = SymForm::from_rows(&hess);
    let radical = norm(&hv) / (hs.max_abs() * norm(&v)).max(f64::MIN_POSITIVE);
    let adj = adjugate(&hs);
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let m = point.len();
    let mut diff: f64 = 0.0;
    let mut big: f64 = 1.0;
    for i in 0..m {
        for j in 0..m {
            let vv = sign * v[i] * v[j];
            diff = diff.max((adj.get(i, j) - vv).abs());
            big = big.max(vv.abs());
        }
    }
    Ok(VFieldRecord {
        df_v: dot(&jet.gradient(), &v),
        bracket: rf.immersion().bracket(u)?,
        radical,
        adjugate: diff / big,
        v,
    })
}

/// Φ(t, r, s) = (r, Σ s^I Y_I(r) + κ_r^{−1}(t − Q(r)) V(r)) with κ_r the
/// bracket at r, so that F(Φ(t, r, s)) = t.
pub fn level_parameterization(rf: &RuledField, t: f64, r: &[f64], s: &[f64]) -> Result<Vec<f64>> {
    let n = rf.n();
    if r.len() != n || s.len() != n {
        return Err(Error::Argument(format!("r and s need {n} coordinates each")));
    }
    let kappa = rf.immersion().bracket(r)?;
    if kappa == 0.0 {
        return Err(Error::NonCentroaffine {
            value: 0.0,
            point: r.to_vec(),
        });
    }
    let q = rf.q().eval_f64(r)?;
    let v = rf.v_ambient(r)?;
    let frame = rf.ruling_frame(r)?;
    let c = (t - q) / kappa;
    let mut p: Vec<f64> = v.iter().map(|x| c * x).collect();
    for (si, y) in s.iter().zip(&frame) {
        for (pk, yk) in p.iter_mut().zip(y) {
            *pk += si * yk;
        }
    }
    p[..n].copy_from_slice(r);
    Ok(p)
}

/// Inverse of Φ: (t, r, s) with Φ(t, r, s) = point. s is the least-squares
/// solution, exact when the point lies in the image.
pub fn ruled_coordinates(rf: &RuledField, point: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let n = rf.n();
    let r = point[..n].to_vec();
    let t = rf.field().value(point)?;
    let kappa = rf.immersion().bracket(&r)?;
    let q = rf.q().eval_f64(&r)?;
    let v = rf.v_ambient(&r)?;
    let c = (t - q) / kappa;
    let rest: Vec<f64> = (n..2 * n + 1).map(|k| point[k] - c * v[k]).collect();
    let frame: Vec<Vec<f64>> = rf.ruling_frame(&r)?.into_iter().map(|y| y[n..].to_vec()).collect();
    let mut gram = Vec::with_capacity(n * n);
    for a in &frame {
        for b in &frame {
            gram.push(dot(a, b));
        }
    }
    let rhs: Vec<f64> = frame.iter().map(|y| dot(y, &rest)).collect();
    let det = dense_determinant(n, &gram);
    let s = (0..n)
        .map(|j| {
            let mut g = gram.clone();
            for i in 0..n {
                g[i * n + j] = rhs[i];
            }
            dense_determinant(n, &g) / det
        })
        .collect();
    Ok((t, r, s))
}

/// φ(t, r, s) = Φ(−|κ|^{2/(n+2)} t, r, s): the affine normal flow through
/// Φ(0, r, s).
pub fn exact_ruled_flow(rf: &RuledField, t: f64, r: &[f64], s: &[f64]) -> Result<Vec<f64>> {
    let n = rf.n() as f64;
    let kappa = rf.immersion().bracket(r)?;
    level_parameterization(rf, -kappa.abs().powf(2.0 / (n + 2.0)) * t, r, s)
}

/// The exact flow started from an arbitrary point of the ruled region.
pub fn exact_flow_from(rf: &RuledField, start: &[f64], t: f64) -> Result<Vec<f64>> {
    let (t0, r, s) = ruled_coordinates(rf, start)?;
    let n = rf.n() as f64;
    let kappa = rf.immersion().bracket(&r)?;
    level_parameterization(rf, t0 - kappa.abs().powf(2.0 / (n + 2.0)) * t, &r, &s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineSphereVerdict {
    pub improper: bool,
    /// max over sample pairs of ‖V(p) − V(q)‖∞
    pub variation: f64,
    /// p with ⟨A, p⟩ = 1, reported when V is constant
    pub hyperplane: Option<Vec<f64>>,
}

/// Improper affine sphere exactly when V is constant, i.e. when the image
/// of A lies in a hyperplane ⟨·, p⟩ = 1.
pub fn affine_sphere_test(a: &CentroaffineImmersion, points: &[Vec<f64>]) -> Result<AffineSphereVerdict> {
    let vs = points.iter().map(|u| a.minors(u)).collect::<Result<Vec<_>>>()?;
    let mut variation: f64 = 0.0;
    for (i, v) in vs.iter().enumerate() {
        for w in &vs[i + 1..] {
            let d = v.iter().zip(w).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            variation = variation.max(d);
        }
    }
    let improper = variation <= 1e-9;
    let hyperplane = match (improper, vs.first(), points.first()) {
        (true, Some(v), Some(u)) => {
            let kappa = a.bracket(u)?;
            Some(v.iter().map(|x| x / kappa).collect())
        }
        _ => None,
    };
    Ok(AffineSphereVerdict {
        improper,
        variation,
        hyperplane,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuledSuiteReport {
    pub samples: usize,
    pub kappa: f64,
    /// max |κ_eq|
    pub kappa_eq: f64,
    /// max relative gap between nm and −sign(κ)|κ|^{−n/(n+2)} V
    pub normal: f64,
    /// max |Ucal − (−1)^n κ²| relative
    pub ucal: f64,
    /// max entry of S² scaled by max(1, max entry of S)²
    pub s_squared: f64,
    /// every sampled k restricted to the level set has inertia (n, n, 0)
    pub split_signature: bool,
    /// max |S T_I| / |T_I|
    pub ruling_kernel: f64,
    /// max |k(T_I, T_J)| / (|T_I||T_J|)
    pub ruling_isotropic: f64,
    /// max radical and adjugate residuals from `v_field`
    pub radical: f64,
    pub adjugate: f64,
}

impl RuledSuiteReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.normal,
            self.ucal,
            self.s_squared,
            self.ruling_kernel,
            self.ruling_isotropic,
            self.radical,
            self.adjugate,
        ]
        .into_iter()
        .fold(self.kappa_eq.abs(), f64::max)
    }
}

pub fn ruled_invariant_suite(rf: &RuledField, points: &[Vec<f64>]) -> Result<RuledSuiteReport> {
    let n = rf.n();
    let nf = n as f64;
    let mut out = RuledSuiteReport {
        samples: points.len(),
        kappa: rf.kappa(),
        kappa_eq: 0.0,
        normal: 0.0,
        ucal: 0.0,
        s_squared: 0.0,
        split_signature: true,
        ruling_kernel: 0.0,
        ruling_isotropic: 0.0,
        radical: 0.0,
        adjugate: 0.0,
    };
    let sign_n = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    for p in points {
        let u = &p[..n];
        let kappa = rf.immersion().bracket(u)?;
        let r = analyze(rf.field(), p)?;
        let (Some(nm), Some(s), Some(k), Some(kappa_eq), Some(inertia)) =
            (&r.nm, &r.s, &r.k, r.kappa_eq, r.k_inertia)
        else {
            return Err(Error::Degenerate(r.ucal));
        };
        out.kappa_eq = out.kappa_eq.max(kappa_eq.abs());
        let v = rf.v_ambient(u)?;
        let c = -kappa.signum() * kappa.abs().powf(-nf / (nf + 2.0));
        let expected: Vec<f64> = v.iter().map(|x| c * x).collect();
        out.normal = out.normal.max(rel_err_vec(nm, &expected));
        out.ucal = out.ucal.max(rel_err(r.ucal, sign_n * kappa * kappa));

        let s_max = s.iter().map(|row| max_abs(row)).fold(0.0, f64::max);
        let m = p.len();
        let mut s2: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let e: f64 = (0..m).map(|q| s[i][q] * s[q][j]).sum();
                s2 = s2.max(e.abs());
            }
        }
        out.s_squared = out.s_squared.max(s2 / 1f64.max(s_max).powi(2));
        if inertia.positive != n || inertia.negative != n || inertia.zero != 0 {
            out.split_signature = false;
        }
        let frame = rf.ruling_frame(u)?;
        let kf = SymForm::from_rows(k);
        for a in &frame {
            let sa = r.shape_apply(a).expect("nondegenerate report");
            out.ruling_kernel = out.ruling_kernel.max(norm(&sa) / norm(a));
            for b in &frame {
                let kab = kf.pair(a, b) / (norm(a) * norm(b));
                out.ruling_isotropic = out.ruling_isotropic.max(kab.abs());
            }
        }
        let vr = v_field(rf, p)?;
        out.radical = out.radical.max(vr.radical);
        out.adjugate = out.adjugate.max(vr.adjugate);
    }
    Ok(out)
}

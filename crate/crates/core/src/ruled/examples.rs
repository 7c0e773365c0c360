//! Immersions and ruled fields used throughout the checks.

use super::{build_ruled_field, default_immersion_vars, extension_lift, CentroaffineImmersion, RuledField};
use crate::error::Result;
use crate::exprlang::{parse, Ast};

fn immersion(components: &[&str], n: usize) -> CentroaffineImmersion {
    CentroaffineImmersion::from_exprs(components, &default_immersion_vars(n)).expect("valid example")
}

fn one(text: &str) -> Ast {
    parse(text, 1, &["t"]).expect("valid example")
}

/// u ↦ (sin u, cos u), bracket −1.
pub fn helicoid() -> CentroaffineImmersion {
    immersion(&["sin(u)", "cos(u)"], 1)
}

/// u ↦ (cos u, sin u), bracket 1.
pub fn circle() -> CentroaffineImmersion {
    immersion(&["cos(u)", "sin(u)"], 1)
}

/// t ↦ (e^{−t}, −e^t).
pub fn exp_pair() -> CentroaffineImmersion {
    immersion(&["exp(-u)", "-exp(u)"], 1)
}

/// (sech x1 cos(x2 cosh²x1), sech x1 sin(x2 cosh²x1), tanh x1).
pub fn ahelic() -> CentroaffineImmersion {
    immersion(
        &[
            "sech(x1)*cos(x2*cosh(x1)^2)",
            "sech(x1)*sin(x2*cosh(x1)^2)",
            "tanh(x1)",
        ],
        2,
    )
}

/// The circle lifted with a = sech, b = tanh, c = cosh².
pub fn ahelic_lift() -> CentroaffineImmersion {
    extension_lift(&circle(), &one("sech(t)"), &one("tanh(t)"), &one("cosh(t)^2"))
        .expect("valid lift")
        .0
}

/// The circle lifted with a = cosh, b = sinh, c = sech.
pub fn cosh_sinh_lift() -> CentroaffineImmersion {
    extension_lift(&circle(), &one("cosh(t)"), &one("sinh(t)"), &one("sech(t)"))
        .expect("valid lift")
        .0
}

/// (u1, u2, 1): image in a hyperplane, bracket 1.
pub fn hyperplane_immersion() -> CentroaffineImmersion {
    immersion(&["x1", "x2", "1"], 2)
}

/// (g + κ0, u1, u2) with g = (u1² + u2²)^{1/2}, on a box away from the
/// singular line u = 0.
pub fn graph_style(kappa0: f64) -> CentroaffineImmersion {
    let first = format!("(x1^2 + x2^2)^0.5 + {kappa0}");
    immersion(&[first.as_str(), "x1", "x2"], 2)
        .with_domain(vec![(0.25, 2.0), (-2.0, 2.0)])
        .expect("valid box")
}

/// Spherical polar coordinates on the upper half sphere; bracket not
/// constant.
pub fn spherical_polar() -> CentroaffineImmersion {
    immersion(&["sin(x1)*cos(x2)", "sin(x1)*sin(x2)", "cos(x1)"], 2)
        .with_domain(vec![(0.2, 1.4), (-2.0, 2.0)])
        .expect("valid box")
}

pub fn helicoid_field() -> RuledField {
    build_ruled_field(helicoid(), Ast::Const(0.0)).expect("calibrated")
}

/// F = x3 A1 + x4 A2 + x5 A3 + Q(x1, x2) over the `ahelic` immersion.
pub fn genhel(q: &Ast) -> Result<RuledField> {
    build_ruled_field(ahelic(), q.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ruled::calibrate_kappa;

    fn kappa(a: &CentroaffineImmersion) -> (f64, f64) {
        let c = calibrate_kappa(a, &a.calibration_samples()).unwrap();
        (c.kappa, c.max_dev)
    }

    #[test]
    fn calibrated_examples() {
        let (k, d) = kappa(&ahelic());
        assert!((k + 1.0).abs() < 1e-12 && d < 1e-10);
        let (k, d) = kappa(&hyperplane_immersion());
        assert!((k - 1.0).abs() < 1e-14 && d < 1e-14);
        let (k, d) = kappa(&graph_style(1.5));
        assert!((k.abs() - 1.5).abs() < 1e-12 && d < 1e-10, "{k}");
        let (k, _) = kappa(&exp_pair());
        assert!((k.abs() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn spherical_polar_is_not_calibrated() {
        let (_, d) = kappa(&spherical_polar());
        assert!(d > 1e-3);
    }

    #[test]
    fn lifts_have_unit_bracket() {
        for a in [ahelic_lift(), cosh_sinh_lift()] {
            let (k, d) = kappa(&a);
            assert!((k.abs() - 1.0).abs() < 1e-10 && d < 1e-10, "{k} {d}");
        }
    }

    #[test]
    fn ahelic_lift_is_ahelic() {
        let (a, b) = (ahelic_lift(), ahelic());
        for u in [[0.3, -1.2], [1.1, 0.4]] {
            let (x, y) = (a.value(&u).unwrap(), b.value(&u).unwrap());
            for (p, q) in x.iter().zip(&y) {
                assert!((p - q).abs() < 1e-14);
            }
        }
    }
}

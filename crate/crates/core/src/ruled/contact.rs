//! The contact form β = Σ a^i dx_i and its differential Ω = dβ, evaluated
//! with a small exterior algebra over the coordinate coframe.

use serde::Serialize;

use super::RuledField;
use crate::error::Result;
use crate::forms::dense_determinant;
use crate::numeric::{dot, kernel_basis, norm};

/// A form on R^d stored as coefficients indexed by bitmasks of basis
/// covectors.
#[derive(Debug, Clone)]
struct Form {
    coeffs: Vec<f64>,
}

impl Form {
    fn zero(d: usize) -> Self {
        Self {
            coeffs: vec![0.0; 1 << d],
        }
    }

    fn wedge(&self, other: &Form) -> Form {
        let mut out = Form {
            coeffs: vec![0.0; self.coeffs.len()],
        };
        for (a, &x) in self.coeffs.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (b, &y) in other.coeffs.iter().enumerate() {
                if y == 0.0 || a & b != 0 {
                    continue;
                }
                out.coeffs[a | b] += reorder_sign(a, b) * x * y;
            }
        }
        out
    }
}

/// Sign of the permutation that sorts e_a ∧ e_b into increasing order.
fn reorder_sign(a: usize, b: usize) -> f64 {
    let mut swaps = 0u32;
    let mut bits = b;
    while bits != 0 {
        let j = bits.trailing_zeros();
        swaps += (a >> (j + 1)).count_ones();
        bits &= bits - 1;
    }
    if swaps.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactReport {
    pub samples: usize,
    pub kappa: f64,
    /// max |β∧Ω^n − (−1)^{n(n+1)/2} n! κ Υ| / max(1, |κ| n!)
    pub volume: f64,
    /// min over samples of |det Ω| on a unit tangent frame of the level set
    pub restricted_det: f64,
    /// max |Ω(T_I, T_J)| over the ruling frame
    pub lagrangian: f64,
    /// max |Ω(V, ·)|
    pub reeb_kernel: f64,
    /// max |β(V) − κ|
    pub reeb_value: f64,
    pub contact: bool,
}

impl ContactReport {
    pub fn max_residual(&self) -> f64 {
        self.volume.max(self.lagrangian).max(self.reeb_kernel).max(self.reeb_value)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Ω(X, Y) = Σ a^i_I (X^{u_I} Y^{x_i} − X^{x_i} Y^{u_I}).
fn omega(da: &[Vec<f64>], n: usize, x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for (i, row) in da.iter().enumerate() {
        for (k, aik) in row.iter().enumerate() {
            s += aik * (x[k] * y[n + i] - x[n + i] * y[k]);
        }
    }
    s
}

/// β∧(dβ)^n volume identity, nondegeneracy of dβ on level sets, the
/// Lagrangian ruling and the Reeb property of V.
pub fn contact_symplectic_check(rf: &RuledField, points: &[Vec<f64>]) -> Result<ContactReport> {
    let a = rf.immersion();
    let n = a.n();
    let d = 2 * n + 1;
    let sign = if (n * (n + 1) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut report = ContactReport {
        samples: points.len(),
        kappa: rf.kappa(),
        volume: 0.0,
        restricted_det: f64::INFINITY,
        lagrangian: 0.0,
        reeb_kernel: 0.0,
        reeb_value: 0.0,
        contact: true,
    };
    for p in points {
        let u = &p[..n];
        let av = a.value(u)?;
        let da = a.differential(u)?;
        let kappa = a.bracket(u)?;

        let mut beta = Form::zero(d);
        for (i, ai) in av.iter().enumerate() {
            beta.coeffs[1 << (n + i)] = *ai;
        }
        let mut om = Form::zero(d);
        for (i, row) in da.iter().enumerate() {
            for (k, aik) in row.iter().enumerate() {
                // du_k ∧ dx_i, k < n + i so already ordered
                om.coeffs[(1 << k) | (1 << (n + i))] += aik;
            }
        }
        let mut top = beta;
        for _ in 0..n {
            top = top.wedge(&om);
        }
        let vol = top.coeffs[(1 << d) - 1];
        let expected = sign * factorial(n) * kappa;
        report.volume = report
            .volume
            .max((vol - expected).abs() / 1f64.max(expected.abs()));

        let df = rf.field().eval(p, 1)?.gradient();
        let basis: Vec<Vec<f64>> = kernel_basis(&df)
            .into_iter()
            .map(|v| {
                let l = norm(&v);
                v.into_iter().map(|x| x / l).collect()
            })
            .collect();
        let mut w = Vec::with_capacity(4 * n * n);
        for x in &basis {
            for y in &basis {
                w.push(omega(&da, n, x, y));
            }
        }
        report.restricted_det = report.restricted_det.min(dense_determinant(2 * n, &w).abs());

        let frame = rf.ruling_frame(u)?;
        for x in &frame {
            for y in &frame {
                report.lagrangian = report.lagrangian.max(omega(&da, n, x, y).abs());
            }
        }
        let v = rf.v_ambient(u)?;
        for k in 0..d {
            let mut e = vec![0.0; d];
            e[k] = 1.0;
            report.reeb_kernel = report.reeb_kernel.max(omega(&da, n, &v, &e).abs());
        }
        let beta_v = dot(&av, &v[n..]);
        report.reeb_value = report.reeb_value.max((beta_v - kappa).abs());
        if kappa.abs() <= 1e-12 {
            report.contact = false;
        }
    }
    if report.restricted_det <= 1e-10 {
        report.contact = false;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reorder_signs() {
        // e0 ∧ e1 is ordered, e1 ∧ e0 is not
        assert_eq!(reorder_sign(0b01, 0b10), 1.0);
        assert_eq!(reorder_sign(0b10, 0b01), -1.0);
        // e2 ∧ (e0 ∧ e1): two transpositions
        assert_eq!(reorder_sign(0b100, 0b011), 1.0);
    }

    #[test]
    fn wedge_of_covectors() {
        let mut a = Form::zero(3);
        let mut b = Form::zero(3);
        a.coeffs[0b001] = 1.0;
        b.coeffs[0b010] = 2.0;
        let ab = a.wedge(&b);
        let ba = b.wedge(&a);
        assert_eq!(ab.coeffs[0b011], 2.0);
        assert_eq!(ba.coeffs[0b011], -2.0);
    }
}

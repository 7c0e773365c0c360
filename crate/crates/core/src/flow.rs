//! The affine normal flow dφ/dt = nm(φ), integrated with fixed-step RK4.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exprlang::FieldSpec;
use crate::invariants::{analyze_with, Tolerances};
use crate::numeric::{max_abs, norm};
use crate::par::Exec;
use crate::ruled::{exact_flow_from, RuledField};

/// Why a trajectory stopped before `t_end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// |Ucal| fell below the nondegeneracy tolerance at a stage.
    Degenerate,
    /// dF vanished at a stage.
    Critical,
    /// the field could not be evaluated (log of a negative number, ...)
    Domain,
}

impl Truncation {
    pub fn code(self) -> &'static str {
        match self {
            Truncation::Degenerate => "degenerate",
            Truncation::Critical => "critical",
            Truncation::Domain => "domain",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    #[serde(rename = "F_values")]
    pub f_values: Vec<f64>,
    /// max over steps of h·max_{a,b} ‖k_a − k_b‖∞, the spread of the RK4
    /// stage slopes; zero when nm is constant along the step
    pub step_stats: f64,
    pub truncated: Option<Truncation>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.points.last().expect("trajectory has a start point")
    }

    /// CSV with header `t,<vars...>,F`.
    pub fn to_csv(&self, vars: &[String]) -> String {
        let mut out = String::from("t");
        for v in vars {
            out.push(',');
            out.push_str(v);
        }
        out.push_str(",F\n");
        for ((t, p), f) in self.times.iter().zip(&self.points).zip(&self.f_values) {
            out.push_str(&format!("{t:?}"));
            for x in p {
                out.push(',');
                out.push_str(&format!("{x:?}"));
            }
            out.push(',');
            out.push_str(&format!("{f:?}"));
            out.push('\n');
        }
        out
    }
}

enum Stage {
    Ok(Vec<f64>, f64),
    Stop(Truncation),
}

fn slope(field: &FieldSpec, x: &[f64], tol: &Tolerances) -> Stage {
    match analyze_with(field, x, tol) {
        Ok(r) => match r.nm {
            Some(nm) => Stage::Ok(nm, r.f),
            None => Stage::Stop(Truncation::Degenerate),
        },
        Err(Error::CriticalPoint(_)) => Stage::Stop(Truncation::Critical),
        Err(_) => Stage::Stop(Truncation::Domain),
    }
}

fn axpy(x: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    x.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

pub fn integrate(field: &FieldSpec, start: &[f64], t_end: f64, steps: usize) -> Result<Trajectory> {
    integrate_with(field, start, t_end, steps, &Tolerances::default())
}

/// Classical RK4 with `steps` equal steps from 0 to `t_end` (which may be
/// negative). A degenerate or critical start is an error; later failures
/// truncate the trajectory.
pub fn integrate_with(
    field: &FieldSpec,
    start: &[f64],
    t_end: f64,
    steps: usize,
    tol: &Tolerances,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::Argument("steps must be at least 1".into()));
    }
    if !t_end.is_finite() {
        return Err(Error::Argument("t_end must be finite".into()));
    }
    let first = analyze_with(field, start, tol)?;
    let Some(mut k1) = first.nm else {
        return Err(Error::Degenerate(first.ucal));
    };
    let mut traj = Trajectory {
        times: vec![0.0],
        points: vec![start.to_vec()],
        f_values: vec![first.f],
        step_stats: 0.0,
        truncated: None,
    };
    if t_end == 0.0 {
        return Ok(traj);
    }
    let h = t_end / steps as f64;
    let mut x = start.to_vec();
    for step in 1..=steps {
        let mut stages = vec![k1.clone()];
        for (c, w) in [(0.5, 0.5), (0.5, 0.5), (1.0, 1.0)] {
            let _ = c;
            let y = axpy(&x, w * h, stages.last().expect("stage"));
            match slope(field, &y, tol) {
                Stage::Ok(k, _) => stages.push(k),
                Stage::Stop(reason) => {
                    traj.truncated = Some(reason);
                    return Ok(traj);
                }
            }
        }
        let m = x.len();
        let next: Vec<f64> = (0..m)
            .map(|i| {
                x[i] + h / 6.0 * (stages[0][i] + 2.0 * stages[1][i] + 2.0 * stages[2][i] + stages[3][i])
            })
            .collect();
        let mut spread: f64 = 0.0;
        for a in &stages {
            for b in &stages {
                let d: Vec<f64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
                spread = spread.max(max_abs(&d));
            }
        }
        traj.step_stats = traj.step_stats.max(h.abs() * spread);
        match slope(field, &next, tol) {
            Stage::Ok(k, f) => {
                k1 = k;
                traj.times.push(step as f64 * h);
                traj.points.push(next.clone());
                traj.f_values.push(f);
                x = next;
            }
            Stage::Stop(reason) => {
                traj.truncated = Some(reason);
                return Ok(traj);
            }
        }
    }
    Ok(traj)
}

/// Exact flow of symdet(2): nm = −sign(P)|2P|^{−3/4}X, so X(t) = λ(t)X0
/// with λ = (1 − (3/2)ct)^{2/3}, c = sign(P0)|2P0|^{−3/4}.
pub fn symdet2_exact_flow(start: &[f64], t: f64) -> Result<Vec<f64>> {
    if start.len() != 3 {
        return Err(Error::Argument("symdet(2) points have 3 coordinates".into()));
    }
    let p0 = start[0] * start[2] - 0.5 * start[1] * start[1];
    if p0 == 0.0 {
        return Err(Error::Degenerate(0.0));
    }
    let c = p0.signum() * (2.0 * p0).abs().powf(-0.75);
    let base = 1.0 - 1.5 * c * t;
    if base <= 0.0 {
        return Err(Error::Domain {
            func: "pow",
            value: base,
            context: "symdet(2) flow reaches the cone".into(),
        });
    }
    let lambda = base.powf(2.0 / 3.0);
    Ok(start.iter().map(|x| lambda * x).collect())
}

/// Max distance between RK4 nodes and an exact solution.
pub fn sup_error(traj: &Trajectory, exact: impl Fn(f64) -> Result<Vec<f64>>) -> Result<f64> {
    let mut e: f64 = 0.0;
    for (t, p) in traj.times.iter().zip(&traj.points) {
        let q = exact(*t)?;
        let d: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a - b).collect();
        e = e.max(max_abs(&d));
    }
    Ok(e)
}

/// RK4 against the closed-form ruled flow from the same start.
pub fn compare_exact(rf: &RuledField, start: &[f64], t_end: f64, steps: usize) -> Result<f64> {
    let traj = integrate(rf.field(), start, t_end, steps)?;
    if let Some(reason) = traj.truncated {
        return Err(Error::Precondition(format!("trajectory truncated ({})", reason.code())));
    }
    sup_error(&traj, |t| exact_flow_from(rf, start, t))
}

/// Observed order log2(e(h)/e(h/2)) against an exact solution. None when
/// the coarse error is already at rounding level.
pub fn convergence_order(
    field: &FieldSpec,
    start: &[f64],
    t_end: f64,
    steps: usize,
    exact: impl Fn(f64) -> Result<Vec<f64>>,
) -> Result<Option<f64>> {
    let coarse = sup_error(&integrate(field, start, t_end, steps)?, &exact)?;
    let fine = sup_error(&integrate(field, start, t_end, 2 * steps)?, &exact)?;
    if coarse <= 1e-13 * 1f64.max(norm(start)) || fine == 0.0 {
        return Ok(None);
    }
    Ok(Some((coarse / fine).log2()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartReport {
    pub start: Vec<f64>,
    /// max |F(φ(t)) − F(start) + |Ucal|^{1/(n+2)} t| when Ucal is constant
    /// along the trajectory
    pub linearity: Option<f64>,
    /// Richardson order log2(|x_N − x_2N| / |x_2N − x_4N|) at t_end
    pub order: Option<f64>,
    /// F strictly monotone along the nodes
    pub monotone: bool,
    pub step_stats: f64,
    pub truncated: Option<Truncation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowReport {
    pub t_end: f64,
    pub steps: usize,
    pub starts: Vec<StartReport>,
}

impl FlowReport {
    pub fn max_linearity(&self) -> Option<f64> {
        self.starts.iter().filter_map(|s| s.linearity).reduce(f64::max)
    }
}

fn start_report(field: &FieldSpec, start: &[f64], t_end: f64, steps: usize) -> Result<StartReport> {
    let traj = integrate(field, start, t_end, steps)?;
    let n = (start.len() - 1) as f64;
    let ucals = traj
        .points
        .iter()
        .map(|p| Ok(analyze_with(field, p, &Tolerances::default())?.ucal))
        .collect::<Result<Vec<f64>>>()?;
    let u0 = ucals[0];
    let constant = ucals.iter().all(|u| (u - u0).abs() <= 1e-9 * u0.abs().max(1.0));
    let linearity = constant.then(|| {
        let rate = u0.abs().powf(1.0 / (n + 2.0));
        traj.times
            .iter()
            .zip(&traj.f_values)
            .map(|(t, f)| (f - traj.f_values[0] + rate * t).abs())
            .fold(0.0, f64::max)
    });
    let diffs: Vec<f64> = traj.f_values.windows(2).map(|w| w[1] - w[0]).collect();
    let monotone = diffs.iter().all(|d| *d > 0.0) || diffs.iter().all(|d| *d < 0.0);
    let order = if traj.truncated.is_none() {
        let a = traj.last().to_vec();
        let b = integrate(field, start, t_end, 2 * steps)?;
        let c = integrate(field, start, t_end, 4 * steps)?;
        if b.truncated.is_none() && c.truncated.is_none() {
            let d1: Vec<f64> = a.iter().zip(b.last()).map(|(x, y)| x - y).collect();
            let d2: Vec<f64> = b.last().iter().zip(c.last()).map(|(x, y)| x - y).collect();
            let (e1, e2) = (max_abs(&d1), max_abs(&d2));
            let floor = 1e-13 * 1f64.max(norm(start));
            (e1 > floor && e2 > 0.0).then(|| (e1 / e2).log2())
        } else {
            None
        }
    } else {
        None
    };
    Ok(StartReport {
        start: start.to_vec(),
        linearity,
        order,
        monotone,
        step_stats: traj.step_stats,
        truncated: traj.truncated,
    })
}

/// Per-start linearity, monotonicity and Richardson order.
pub fn flow_report(
    field: &FieldSpec,
    starts: &[Vec<f64>],
    t_end: f64,
    steps: usize,
    exec: Exec,
) -> Result<FlowReport> {
    let starts = exec
        .map(starts, |s| start_report(field, s, t_end, steps))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(FlowReport { t_end, steps, starts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::{builtin, idempotent};
    use crate::ruled::examples;

    #[test]
    fn helicoid_level_moves_linearly() {
        let t = integrate(&FieldSpec::helicoid3(), &[0.0, 1.0, 0.0], 1.0, 100).unwrap();
        assert_eq!(t.times.len(), 101);
        for (time, f) in t.times.iter().zip(&t.f_values) {
            assert!((f - (0.0 - time)).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_time_and_bad_steps() {
        let t = integrate(&FieldSpec::helicoid3(), &[0.0, 1.0, 0.0], 0.0, 10).unwrap();
        assert_eq!(t.points.len(), 1);
        assert!(integrate(&FieldSpec::helicoid3(), &[0.0, 1.0, 0.0], 1.0, 0).is_err());
    }

    #[test]
    fn degenerate_start() {
        let e = integrate(&FieldSpec::gn_concrete(), &[1.0; 5], 1.0, 10);
        assert!(matches!(e, Err(Error::Degenerate(_))));
    }

    #[test]
    fn exact_helicoid_flow() {
        let rf = examples::helicoid_field();
        let e = compare_exact(&rf, &[0.3, 0.5, -1.0], 1.0, 100).unwrap();
        assert!(e < 1e-10, "{e}");
    }

    #[test]
    fn symdet_order_is_four() {
        let f = builtin("symdet", &["2"]).unwrap();
        let x0 = idempotent(2, 0).unwrap();
        let order = convergence_order(&f, &x0, 0.5, 8, |t| symdet2_exact_flow(&x0, t))
            .unwrap()
            .unwrap();
        assert!((3.5..4.5).contains(&order), "{order}");
    }

    #[test]
    fn time_reversal() {
        let f = FieldSpec::from_expr("x3 - x1^2 - x2^2 - 0.1*x1^4", &["x1", "x2", "x3"]).unwrap();
        let fwd = integrate(&f, &[0.2, 0.1, 0.3], 0.5, 200).unwrap();
        let back = integrate(&f, fwd.last(), -0.5, 200).unwrap();
        let d: Vec<f64> = back.last().iter().zip([0.2, 0.1, 0.3]).map(|(a, b)| a - b).collect();
        assert!(max_abs(&d) < 1e-7);
    }

    #[test]
    fn report_on_helicoid() {
        let starts = vec![vec![0.0, 1.0, 0.0], vec![0.5, -1.0, 2.0]];
        let r = flow_report(&FieldSpec::helicoid3(), &starts, 1.0, 50, Exec::Sequential).unwrap();
        assert!(r.max_linearity().unwrap() < 1e-8);
        assert!(r.starts.iter().all(|s| s.monotone));
    }
}

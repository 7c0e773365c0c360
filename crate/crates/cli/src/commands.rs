use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use equiaffine::flow::{compare_exact, flow_report, integrate_with, Trajectory};
use equiaffine::invariants::analyze_with;
use equiaffine::par::Exec;
use equiaffine::ruled::level_parameterization;
use equiaffine::verify::{format_table, run_suite, CriterionReport, VerifyConfig};
use equiaffine::{Error, FieldSpec, InvariantReport};

use crate::args::{FlowArgs, Format, InvariantsArgs, SampleArgs, VerifyArgs};
use crate::input::{self, Failure, Outcome};
use crate::{EXIT_GEOMETRIC, EXIT_OK, EXIT_USAGE};

/// Largest |F − t| accepted for a sampled row.
const LEVEL_TOL: f64 = 1e-9;

fn emit(out: Option<&Path>, text: &str) -> Outcome<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> Outcome<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::usage(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::CriticalPoint(_) => "critical_point",
        Error::Degenerate(_) => "degenerate",
        Error::Domain { .. } => "domain",
        Error::SingularPoint(_) => "singular_point",
        _ => "other",
    }
}

pub fn invariants(args: &InvariantsArgs) -> Outcome<u8> {
    let field = input::field(&args.field)?;
    let tol = input::tolerances(&args.tol)?;
    let points = input::points(&args.points, field.dim())?;
    let results = Exec::Parallel.map(&points, |p| analyze_with(&field, p, &tol));

    let mut code = EXIT_OK;
    for r in &results {
        let c = match r {
            Ok(rep) if rep.flags.nondegenerate => EXIT_OK,
            Ok(_) => EXIT_GEOMETRIC,
            Err(e) if e.is_geometric() => EXIT_GEOMETRIC,
            Err(_) => EXIT_USAGE,
        };
        // a usage-class failure outranks a geometric one
        code = match (code, c) {
            (EXIT_USAGE, _) | (_, EXIT_USAGE) => EXIT_USAGE,
            (a, b) => a.max(b),
        };
    }

    let text = match args.format {
        Format::Json => {
            let mut s = String::new();
            for (p, r) in points.iter().zip(&results) {
                let v = match r {
                    Ok(rep) => rep.to_json(),
                    Err(e) => json!({
                        "point": p,
                        "error": {"kind": error_kind(e), "message": e.to_string()},
                    }),
                };
                s.push_str(&v.to_string());
                s.push('\n');
            }
            s
        }
        Format::Csv => invariants_csv(&field, &points, &results)?,
    };
    emit(args.out.as_deref(), &text)?;
    Ok(code)
}

fn invariants_csv(
    field: &FieldSpec,
    points: &[Vec<f64>],
    results: &[equiaffine::Result<InvariantReport>],
) -> Outcome<String> {
    let vars = field.vars();
    let mut header: Vec<String> = vars.to_vec();
    header.extend(
        ["F", "H", "Ucal", "kappa_eq", "gauss_kronecker", "regular_point", "nondegenerate", "Ucal_sign"]
            .map(String::from),
    );
    header.extend(vars.iter().map(|v| format!("nm_{v}")));
    header.push("error".into());
    let rows: Vec<Vec<String>> = points
        .iter()
        .zip(results)
        .map(|(p, r)| {
            let mut row: Vec<String> = p.iter().copied().map(num).collect();
            match r {
                Ok(rep) => {
                    row.extend([
                        num(rep.f),
                        num(rep.h),
                        num(rep.ucal),
                        opt(rep.kappa_eq),
                        num(rep.gauss_kronecker),
                        rep.flags.regular_point.to_string(),
                        rep.flags.nondegenerate.to_string(),
                        rep.flags.ucal_sign.to_string(),
                    ]);
                    match &rep.nm {
                        Some(nm) => row.extend(nm.iter().copied().map(num)),
                        None => row.extend(std::iter::repeat_n(String::new(), p.len())),
                    }
                    row.push(String::new());
                }
                Err(e) => {
                    row.extend(std::iter::repeat_n(String::new(), 8 + p.len()));
                    row.push(error_kind(e).into());
                }
            }
            row
        })
        .collect();
    csv_text(&header, &rows)
}

pub fn verify(args: &VerifyArgs) -> Outcome<u8> {
    let cfg = VerifyConfig {
        seed: args.seed,
        exec: if args.sequential { Exec::Sequential } else { Exec::Parallel },
    };
    let reports = run_suite(&args.suite, &cfg)?;
    let text = match args.format {
        None => {
            let mut s = String::new();
            for r in &reports {
                s.push_str(&r.summary_line());
                s.push('\n');
            }
            s.push('\n');
            s.push_str(&format_table(&reports));
            let passed = reports.iter().filter(|r| r.pass()).count();
            s.push_str(&format!(
                "\nsuite {} (seed {}): {passed} of {} criteria pass\n",
                args.suite,
                args.seed,
                reports.len()
            ));
            s
        }
        Some(Format::Json) => {
            let v = json!({
                "suite": args.suite,
                "seed": args.seed,
                "pass": reports.iter().all(CriterionReport::pass),
                "criteria": reports.iter().map(|r| {
                    let mut v = serde_json::to_value(r).expect("report serializes");
                    v["pass"] = Value::Bool(r.pass());
                    v
                }).collect::<Vec<_>>(),
            });
            format!("{v}\n")
        }
        Some(Format::Csv) => {
            let header = ["criterion", "label", "value", "bound", "kind", "pass"].map(String::from);
            let rows: Vec<Vec<String>> = reports
                .iter()
                .flat_map(|r| {
                    r.checks.iter().map(move |c| {
                        vec![
                            r.id.to_string(),
                            c.label.clone(),
                            num(c.value),
                            num(c.bound),
                            serde_json::to_value(c.kind).expect("kind serializes").as_str().unwrap_or_default().into(),
                            c.pass.to_string(),
                        ]
                    })
                })
                .collect();
            csv_text(&header, &rows)?
        }
    };
    emit(args.out.as_deref(), &text)?;
    Ok(if reports.iter().all(CriterionReport::pass) { EXIT_OK } else { EXIT_USAGE })
}

/// Grid counts per axis: `N` for all axes or `A x B x ...` with one count per
/// axis.
fn grid_counts(spec: &str, axes: usize) -> Outcome<Vec<usize>> {
    let counts = spec
        .split(['x', 'X'])
        .map(|c| {
            c.trim()
                .parse::<usize>()
                .ok()
                .filter(|&k| k > 0)
                .ok_or_else(|| Failure::usage(format!("bad grid count `{c}` in `{spec}`")))
        })
        .collect::<Outcome<Vec<usize>>>()?;
    match counts.len() {
        1 => Ok(vec![counts[0]; axes]),
        k if k == axes => Ok(counts),
        k => Err(Failure::usage(format!("grid `{spec}` has {k} axes, the field needs {axes}"))),
    }
}

fn linspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect()
}

/// Range of each fiber coordinate s in the sampled grid.
const S_RANGE: (f64, f64) = (-2.0, 2.0);

pub fn sample(args: &SampleArgs) -> Outcome<u8> {
    if !args.t.is_finite() {
        return Err(Failure::usage("--t must be finite"));
    }
    let rf = input::ruled_field(&args.builtin, &args.params)?;
    let n = rf.n();
    let counts = grid_counts(&args.grid, 2 * n)?;
    let mut axes: Vec<Vec<f64>> = rf
        .immersion()
        .domain()
        .iter()
        .zip(&counts)
        .map(|(&(a, b), &k)| linspace(a, b, k))
        .collect();
    axes.extend(counts[n..].iter().map(|&k| linspace(S_RANGE.0, S_RANGE.1, k)));

    let total: usize = counts.iter().product();
    let coords: Vec<Vec<f64>> = (0..total)
        .map(|mut idx| {
            let mut c = vec![0.0; 2 * n];
            for a in (0..2 * n).rev() {
                c[a] = axes[a][idx % counts[a]];
                idx /= counts[a];
            }
            c
        })
        .collect();
    let rows = Exec::Parallel
        .map(&coords, |c| -> equiaffine::Result<(Vec<f64>, f64)> {
            let p = level_parameterization(&rf, args.t, &c[..n], &c[n..])?;
            let f = rf.field().value(&p)?;
            Ok((p, f))
        })
        .into_iter()
        .collect::<equiaffine::Result<Vec<_>>>()?;
    if let Some((p, f)) = rows.iter().find(|(_, f)| (f - args.t).abs() > LEVEL_TOL) {
        return Err(Failure {
            code: EXIT_GEOMETRIC,
            message: format!("sample point {p:?} has F = {f}, off the level {} by more than {LEVEL_TOL:e}", args.t),
        });
    }

    let vars = rf.field().vars();
    let text = match args.format {
        Format::Csv => {
            let mut header = vars.to_vec();
            header.push("F".into());
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|(p, f)| p.iter().chain(std::iter::once(f)).copied().map(num).collect())
                .collect();
            csv_text(&header, &body)?
        }
        Format::Json => {
            let v = json!({
                "field": rf.describe(),
                "vars": vars,
                "t": args.t,
                "grid": counts,
                "points": rows.iter().map(|(p, _)| p).collect::<Vec<_>>(),
                "F": rows.iter().map(|(_, f)| f).collect::<Vec<_>>(),
            });
            format!("{v}\n")
        }
    };
    emit(args.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

pub fn flow(args: &FlowArgs) -> Outcome<u8> {
    if args.steps == 0 {
        return Err(Failure::usage("--steps must be at least 1"));
    }
    if !args.t_end.is_finite() {
        return Err(Failure::usage("--t-end must be finite"));
    }
    let tol = input::tolerances(&args.tol)?;
    let (field, ruled) = if args.exact {
        let Some(tag) = &args.field.source.builtin else {
            return Err(Failure::usage("--exact needs a ruled --builtin (helicoid3, genhel or ruled)"));
        };
        let rf = input::ruled_field(tag, &args.field.params)?;
        (rf.field().clone(), Some(rf))
    } else {
        (input::field(&args.field)?, None)
    };
    let starts = input::points(&args.points, field.dim())?;

    let trajectories = Exec::Parallel
        .map(&starts, |s| integrate_with(&field, s, args.t_end, args.steps, &tol))
        .into_iter()
        .collect::<equiaffine::Result<Vec<Trajectory>>>()?;
    let report = flow_report(&field, &starts, args.t_end, args.steps, Exec::Parallel)?;
    let exact: Option<Vec<f64>> = match &ruled {
        Some(rf) => Some(
            Exec::Parallel
                .map(&starts, |s| compare_exact(rf, s, args.t_end, args.steps))
                .into_iter()
                .collect::<equiaffine::Result<Vec<f64>>>()?,
        ),
        None => None,
    };

    let text = match args.format {
        Format::Csv => {
            let mut header = vec!["start".to_string(), "t".to_string()];
            header.extend(field.vars().iter().cloned());
            header.push("F".into());
            let mut rows = Vec::new();
            for (i, tr) in trajectories.iter().enumerate() {
                for ((t, p), f) in tr.times.iter().zip(&tr.points).zip(&tr.f_values) {
                    let mut row = vec![i.to_string(), num(*t)];
                    row.extend(p.iter().copied().map(num));
                    row.push(num(*f));
                    rows.push(row);
                }
            }
            let mut summary = String::new();
            for (i, s) in report.starts.iter().enumerate() {
                summary.push_str(&format!(
                    "start {i}: linearity={} order={} monotone={} step_stats={:?} truncated={}",
                    opt(s.linearity),
                    opt(s.order),
                    s.monotone,
                    s.step_stats,
                    s.truncated.map_or("none", |t| t.code()),
                ));
                if let Some(e) = &exact {
                    summary.push_str(&format!(" exact_max_error={:?}", e[i]));
                }
                summary.push('\n');
            }
            eprint!("{summary}");
            csv_text(&header, &rows)?
        }
        Format::Json => {
            let mut v = json!({
                "field": field.label(),
                "vars": field.vars(),
                "trajectories": trajectories,
                "report": report,
            });
            if let Some(e) = exact {
                v["exact_max_error"] = json!(e);
            }
            format!("{v}\n")
        }
    };
    emit(args.out.as_deref(), &text)?;
    let truncated = trajectories.iter().any(|t| t.truncated.is_some());
    Ok(if truncated { EXIT_GEOMETRIC } else { EXIT_OK })
}

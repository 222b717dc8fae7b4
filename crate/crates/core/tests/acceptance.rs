//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line
//! straight to stdout so the summary survives output capture.

use std::io::Write;
use std::time::Instant;

use semiconj_core::verify::{fig4_value, fig4_zero_hit_time, fig5_value};
use semiconj_core::{
    figdata, flow, make_builtin, run_suite, FlowStatus, IntegratorConfig, Params, ResidualReport,
    State, Suite, SuiteOptions,
};

struct Line {
    id: u32,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn report_line(line: &Line) {
    let verdict = if line.passed { "PASS" } else { "FAIL" };
    let text = format!(
        "acceptance {:>2} {verdict} {}: {}\n",
        line.id, line.name, line.detail
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    let _ = out.flush();
}

fn describe(r: &ResidualReport) -> String {
    if !r.parts.is_empty() {
        let parts: Vec<String> = r
            .parts
            .iter()
            .map(|p| format!("{} {}", p.suite, describe(p)))
            .collect();
        return parts.join("; ");
    }
    format!(
        "{} cases, max residual {:.3e} (tol {:.0e})",
        r.cases_run, r.max_residual, r.tolerance
    )
}

fn suite(s: Suite) -> ResidualReport {
    run_suite(s, &SuiteOptions::default()).expect("suite runs")
}

fn criterion_1() -> Line {
    let start = Instant::now();
    let closed = suite(Suite::ConjugacyClosed);
    let numeric = suite(Suite::ConjugacyNumeric);
    let elapsed = start.elapsed().as_secs_f64();
    Line {
        id: 1,
        name: "conjugacy",
        passed: closed.passed() && numeric.passed() && elapsed < 30.0,
        detail: format!(
            "closed {}; numeric {}; {elapsed:.2} s",
            describe(&closed),
            describe(&numeric)
        ),
    }
}

fn criterion_from_suite(id: u32, name: &'static str, s: Suite) -> Line {
    let r = suite(s);
    Line {
        id,
        name,
        passed: r.passed(),
        detail: describe(&r),
    }
}

fn criterion_4() -> Line {
    let ln2 = 2f64.ln();
    let expected = |t: f64| {
        if t <= ln2 {
            2.0 * (-t).exp()
        } else if t <= ln2 + 1.0 {
            (1.0 - (t - ln2)).powi(2)
        } else {
            0.0
        }
    };
    let table = figdata(4).expect("fig 4");
    let curve_err = table
        .rows
        .iter()
        .map(|row| (row[1] - expected(row[0])).abs())
        .fold(0.0, f64::max);
    let at = fig4_value(ln2).unwrap();
    let right = fig4_value(ln2 + 1e-12).unwrap();
    let continuity = (at - 2.0 * (-ln2).exp())
        .abs()
        .max((right - (1.0 - 1e-12f64).powi(2)).abs());
    let hit = fig4_zero_hit_time().unwrap();
    let hit_err = (hit - (ln2 + 1.0)).abs();
    let after_zero = [hit, hit + 1e-6, hit + 0.5, 3.0]
        .iter()
        .all(|&t| fig4_value(t).unwrap() == 0.0);
    Line {
        id: 4,
        name: "fig4",
        passed: curve_err <= 1e-9 && continuity <= 1e-9 && hit_err <= 1e-9 && after_zero,
        detail: format!(
            "curve err {curve_err:.3e}, continuity {continuity:.3e}, zero hit err {hit_err:.3e}, stays zero {after_zero}"
        ),
    }
}

fn criterion_5() -> Line {
    let expected = |t: f64| {
        if t <= 1.0 {
            2.0 - t
        } else {
            (-(t - 1.0) / 2.0).exp()
        }
    };
    let table = figdata(5).expect("fig 5");
    let curve_err = table
        .rows
        .iter()
        .map(|row| (row[1] - expected(row[0])).abs())
        .fold(0.0, f64::max);
    let left = fig5_value(1.0).unwrap();
    let right = fig5_value(1.0 + 1e-12).unwrap();
    let continuity = (left - 1.0).abs().max((right - 1.0).abs());
    let positive = table.rows.iter().all(|row| row[1] > 0.0) && fig5_value(10.0).unwrap() > 0.0;
    Line {
        id: 5,
        name: "fig5",
        passed: curve_err <= 1e-9 && continuity <= 1e-9 && positive,
        detail: format!(
            "curve err {curve_err:.3e}, continuity {continuity:.3e}, positive {positive}"
        ),
    }
}

fn criterion_9() -> Line {
    let r = suite(Suite::Case2);
    Line {
        id: 9,
        name: "case2 outer radius",
        passed: r.passed(),
        detail: describe(&r),
    }
}

fn arrival(name: &str, n: usize, x: &[f64]) -> Option<f64> {
    let sys = make_builtin(name, n, &Params::new()).unwrap().without_closed_flow();
    let cfg = IntegratorConfig::numeric();
    let res = flow(&sys, &State::from_column_slice(x), 50.0, &cfg).ok()?;
    match res.status {
        FlowStatus::ReachedEquilibrium { arrival_time } => Some(arrival_time),
        _ => None,
    }
}

fn criterion_10() -> Line {
    let normalized = arrival("normalized", 2, &[1.2, 1.6]);
    let axis = arrival("x0-plane", 2, &[0.0, 1.0]);
    let off_axis = arrival("x0-plane", 2, &[0.05, 1.0]);
    let arrival_err = normalized.map_or(f64::INFINITY, |t| (t - 2.0).abs());
    let ratio = match (axis, off_axis) {
        (Some(a), Some(b)) => b / a,
        _ => f64::NAN,
    };
    Line {
        id: 10,
        name: "finite-time arrival",
        passed: arrival_err <= 1e-4 && ratio >= 5.0,
        detail: format!(
            "normalized arrival err {arrival_err:.3e}, x0-plane ball-time ratio {ratio:.3}"
        ),
    }
}

#[test]
fn acceptance_criteria() {
    let lines = vec![
        criterion_1(),
        criterion_from_suite(2, "gamma oracle", Suite::Gamma),
        criterion_from_suite(3, "interior branch", Suite::Interior),
        criterion_4(),
        criterion_5(),
        criterion_from_suite(6, "scalar conjugacy", Suite::Scalar),
        criterion_from_suite(7, "semigroup", Suite::Semigroup),
        criterion_from_suite(8, "roundtrip", Suite::Roundtrip),
        criterion_9(),
        criterion_10(),
    ];
    for line in &lines {
        report_line(line);
    }
    let failed: Vec<u32> = lines.iter().filter(|l| !l.passed).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}

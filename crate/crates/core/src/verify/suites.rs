//! Named residual suites. Every suite draws its samples from a seeded
//! ChaCha stream, evaluates cases in parallel and reduces them in input
//! order, so reports are reproducible bit for bit.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::report::{ResidualReport, Tracker};
use crate::conjugacy::closed_form::{normalized_flow, scalar_power_map};
use crate::conjugacy::ConjugacyMap;
use crate::error::{Error, Result};
use crate::flow::{flow, IntegratorConfig};
use crate::systems::{make_builtin, Params, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    ConjugacyClosed,
    ConjugacyNumeric,
    Semigroup,
    Roundtrip,
    Gamma,
    Case2,
    Scalar,
    Reverse,
    Interior,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::ConjugacyClosed,
        Suite::ConjugacyNumeric,
        Suite::Semigroup,
        Suite::Roundtrip,
        Suite::Gamma,
        Suite::Case2,
        Suite::Scalar,
        Suite::Reverse,
        Suite::Interior,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::ConjugacyClosed => "conjugacy-closed",
            Suite::ConjugacyNumeric => "conjugacy-numeric",
            Suite::Semigroup => "semigroup",
            Suite::Roundtrip => "roundtrip",
            Suite::Gamma => "gamma",
            Suite::Case2 => "case2",
            Suite::Scalar => "scalar",
            Suite::Reverse => "reverse",
            Suite::Interior => "interior",
        }
    }

    /// Pass threshold used when no override is given.
    pub fn default_tolerance(self) -> f64 {
        match self {
            Suite::ConjugacyClosed => 1e-9,
            Suite::ConjugacyNumeric => 1e-5,
            Suite::Semigroup => 1e-5,
            Suite::Roundtrip => 1.0,
            Suite::Gamma => 1e-6,
            Suite::Case2 => 1e-6,
            Suite::Scalar => 1e-12,
            Suite::Reverse => 1e-9,
            Suite::Interior => 1e-9,
        }
    }

    fn stream(self) -> u64 {
        Suite::ALL.iter().position(|s| *s == self).unwrap() as u64 + 1
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .iter()
            .copied()
            .find(|suite| suite.as_str() == s)
            .ok_or_else(|| Error::UnknownSuite(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SuiteOptions {
    /// Replaces the tolerance of every check in the suite.
    pub tolerance: Option<f64>,
    pub seed: u64,
}

impl SuiteOptions {
    fn tol(&self, default: f64) -> f64 {
        self.tolerance.unwrap_or(default)
    }

    fn rng(&self, suite: Suite) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(suite.stream());
        rng
    }
}

const RADII: [f64; 3] = [0.5, 1.0, 2.0];
const CONJUGACY_SAMPLES: usize = 100;
const T_POINTS: usize = 20;

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<ResidualReport> {
    if let Some(t) = opts.tolerance {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "tol".into(),
                value: t,
                reason: "tolerance must be positive and finite".into(),
            });
        }
    }
    match suite {
        Suite::ConjugacyClosed => conjugacy(suite, false, opts),
        Suite::ConjugacyNumeric => conjugacy(suite, true, opts),
        Suite::Semigroup => semigroup(opts),
        Suite::Roundtrip => roundtrip(opts),
        Suite::Gamma => gamma(opts),
        Suite::Case2 => case2(opts),
        Suite::Scalar => scalar(opts),
        Suite::Reverse => reverse(opts),
        Suite::Interior => interior(opts),
    }
}

/// Looks a suite up by name first.
pub fn run_suite_named(name: &str, opts: &SuiteOptions) -> Result<ResidualReport> {
    run_suite(name.parse()?, opts)
}

fn random_direction(rng: &mut impl Rng, n: usize) -> State {
    loop {
        let g = State::from_fn(n, |_, _| StandardNormal.sample(rng));
        let norm = g.norm();
        if norm > 1e-9 {
            return g / norm;
        }
    }
}

fn normalized_map(n: usize, r: f64, numeric: bool) -> Result<ConjugacyMap> {
    let mut sys = make_builtin("normalized", n, &Params::new())?;
    if numeric {
        sys = sys.without_closed_flow();
    }
    ConjugacyMap::with_defaults(sys, 0.5, r)
}

fn grid(end: f64, points: usize) -> impl Iterator<Item = f64> {
    (0..points).map(move |k| end * k as f64 / (points - 1) as f64)
}

fn fmt_vec(x: &State) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:.6}")).collect();
    format!("({})", parts.join(", "))
}

/// `h(phi^t(h^{-1}(y)))` against `e^{-t} y` for `|y| >= r`, `t <= gamma_r(|y| - r)`.
fn conjugacy(suite: Suite, numeric: bool, opts: &SuiteOptions) -> Result<ResidualReport> {
    let mut rng = opts.rng(suite);
    let mut cases = Vec::new();
    for n in 1..=3 {
        for r in RADII {
            for _ in 0..CONJUGACY_SAMPLES {
                let norm = rng.random_range(r..=5.0 * r);
                cases.push((n, r, random_direction(&mut rng, n) * norm));
            }
        }
    }
    let maps: Vec<((usize, f64), ConjugacyMap)> = (1..=3)
        .flat_map(|n| RADII.map(|r| (n, r)))
        .map(|(n, r)| normalized_map(n, r, numeric).map(|m| ((n, r), m)))
        .collect::<Result<_>>()?;
    let lookup = |n: usize, r: f64| &maps.iter().find(|(k, _)| *k == (n, r)).unwrap().1;

    let outcomes: Vec<Vec<(f64, String)>> = cases
        .par_iter()
        .map(|(n, r, y)| {
            let map = lookup(*n, *r);
            let label = |t: f64| format!("n={n} r={r} y={} t={t:.6}", fmt_vec(y));
            let window = match map.gamma_r(y.norm() - r) {
                Ok(g) => g,
                Err(e) => return vec![(f64::INFINITY, format!("{} ({e})", label(0.0)))],
            };
            let x = match map.h_inverse(y) {
                Ok(x) => x,
                Err(e) => return vec![(f64::INFINITY, format!("{} ({e})", label(0.0)))],
            };
            grid(window, T_POINTS)
                .map(|t| {
                    let image = flow(map.system(), &x, t, map.integrator())
                        .and_then(|res| map.h_map(&res.state));
                    match image {
                        Ok(img) => ((img - y * (-t).exp()).norm(), label(t)),
                        Err(e) => (f64::INFINITY, format!("{} ({e})", label(t))),
                    }
                })
                .collect()
        })
        .collect();

    let mut tracker = Tracker::default();
    for (res, desc) in outcomes.into_iter().flatten() {
        tracker.record(res, || desc);
    }
    Ok(tracker.finish(suite.as_str(), opts.tol(suite.default_tolerance())))
}

/// Identity and semigroup axioms on the x0-plane field (numeric path only).
fn semigroup(opts: &SuiteOptions) -> Result<ResidualReport> {
    let sys = make_builtin("x0-plane", 2, &Params::new())?;
    let cfg = IntegratorConfig::numeric();
    let mut rng = opts.rng(Suite::Semigroup);
    let cases: Vec<(State, f64, f64)> = (0..200)
        .map(|_| {
            let x = random_direction(&mut rng, 2) * rng.random_range(0.2..=2.0);
            (x, rng.random_range(0.0..=2.0), rng.random_range(0.0..=2.0))
        })
        .collect();
    let outcomes: Vec<(f64, String)> = cases
        .par_iter()
        .map(|(x, s, t)| {
            let label = format!("x={} s={s:.6} t={t:.6}", fmt_vec(x));
            let eval = || -> Result<f64> {
                let identity = (flow(&sys, x, 0.0, &cfg)?.state - x).norm();
                let first = flow(&sys, x, *s, &cfg)?.state;
                let chained = flow(&sys, &first, *t, &cfg)?.state;
                let direct = flow(&sys, x, s + t, &cfg)?.state;
                Ok(identity.max((chained - direct).norm()))
            };
            match eval() {
                Ok(res) => (res, label),
                Err(e) => (f64::INFINITY, format!("{label} ({e})")),
            }
        })
        .collect();
    let mut tracker = Tracker::default();
    for (res, desc) in outcomes {
        tracker.record(res, || desc);
    }
    Ok(tracker.finish(
        Suite::Semigroup.as_str(),
        opts.tol(Suite::Semigroup.default_tolerance()),
    ))
}

fn roundtrip_part(
    name: &str,
    map: &ConjugacyMap,
    points: &[State],
    tolerance: f64,
) -> ResidualReport {
    let outcomes: Vec<(f64, String)> = points
        .par_iter()
        .map(|x| {
            let label = format!("x={}", fmt_vec(x));
            match map.h_map(x).and_then(|y| map.h_inverse(&y)) {
                Ok(back) => ((back - x).norm(), label),
                Err(e) => (f64::INFINITY, format!("{label} ({e})")),
            }
        })
        .collect();
    let mut tracker = Tracker::default();
    for (res, desc) in outcomes {
        tracker.record(res, || desc);
    }
    tracker.finish(name, tolerance)
}

/// `h^{-1}(h(x)) = x` in closed form (normalized) and numerically (x0-plane).
fn roundtrip(opts: &SuiteOptions) -> Result<ResidualReport> {
    let mut rng = opts.rng(Suite::Roundtrip);
    let mut parts = Vec::new();
    for n in 1..=3 {
        let map = normalized_map(n, 1.0, false)?;
        let points: Vec<State> = (0..100)
            .map(|_| random_direction(&mut rng, n) * rng.random_range(0.05..=5.0))
            .collect();
        parts.push(roundtrip_part(
            &format!("roundtrip-closed-n{n}"),
            &map,
            &points,
            opts.tol(1e-10),
        ));
    }
    let x0 = make_builtin("x0-plane", 2, &Params::new())?;
    let map = ConjugacyMap::with_defaults(x0, 0.25, 1.0)?;
    let points: Vec<State> = (0..100)
        .map(|_| random_direction(&mut rng, 2) * rng.random_range(0.1..=2.0))
        .collect();
    parts.push(roundtrip_part(
        "roundtrip-numeric-x0",
        &map,
        &points,
        opts.tol(1e-6),
    ));
    Ok(ResidualReport::composite(Suite::Roundtrip.as_str(), parts))
}

/// `gamma_r(s)` against `ln((s + r) / r)` on `s = 0.1, 0.2, ..., 10`,
/// plus `gamma_r(0) = 0` and strict monotonicity.
fn gamma(opts: &SuiteOptions) -> Result<ResidualReport> {
    let configs = [(1, 1.0), (2, 0.5), (2, 1.0), (2, 2.0), (3, 1.0)];
    let mut tracker = Tracker::default();
    for (n, r) in configs {
        let map = normalized_map(n, r, false)?;
        let s_grid: Vec<f64> = (0..=100).map(|k| 0.1 * k as f64).collect();
        let values: Vec<Result<f64>> = s_grid.par_iter().map(|s| map.gamma_r(*s)).collect();
        let mut prev: Option<f64> = None;
        for (s, value) in s_grid.iter().zip(values) {
            let label = format!("n={n} r={r} s={s:.1}");
            match value {
                Ok(g) => {
                    let expected = ((s + r) / r).ln();
                    tracker.record((g - expected).abs(), || label.clone());
                    if let Some(p) = prev {
                        if g <= p {
                            tracker.record(f64::INFINITY, || format!("{label} not increasing"));
                        }
                    }
                    prev = Some(g);
                }
                Err(e) => tracker.record_error(label, e),
            }
        }
    }
    Ok(tracker.finish(
        Suite::Gamma.as_str(),
        opts.tol(Suite::Gamma.default_tolerance()),
    ))
}

/// Bounded normalized field: `R = r e^{sqrt(2C) - 1}` and `R > r`.
fn case2(opts: &SuiteOptions) -> Result<ResidualReport> {
    let sys = make_builtin("normalized-bounded", 2, &Params::new())?;
    let mut tracker = Tracker::default();
    for r in RADII {
        let map = ConjugacyMap::with_defaults(sys.clone(), 0.5, r)?;
        for c in [0.6, 1.0, 1.5] {
            let label = format!("r={r} C={c}");
            match map.outer_radius(c) {
                Ok(big_r) => {
                    let expected = r * ((2.0 * c).sqrt() - 1.0).exp();
                    let res = if big_r > r {
                        (big_r - expected).abs()
                    } else {
                        f64::INFINITY
                    };
                    tracker.record(res, || label);
                }
                Err(e) => tracker.record_error(label, e),
            }
        }
    }
    Ok(tracker.finish(
        Suite::Case2.as_str(),
        opts.tol(Suite::Case2.default_tolerance()),
    ))
}

/// `h(e^{-at} x) = e^{-bt} h(x)` for the scalar power map, measured
/// relative to `max(1, |e^{-bt} h(x)|)`.
fn scalar(opts: &SuiteOptions) -> Result<ResidualReport> {
    let mut rng = opts.rng(Suite::Scalar);
    let mut tracker = Tracker::default();
    for _ in 0..1000 {
        let a = rng.random_range(0.1..=10.0);
        let b = rng.random_range(0.1..=10.0);
        let x = rng.random_range(-2.0..=2.0);
        let t = rng.random_range(0.0..=3.0);
        let lhs = scalar_power_map(a, b, (-a * t).exp() * x);
        let rhs = (-b * t).exp() * scalar_power_map(a, b, x);
        let res = (lhs - rhs).abs() / rhs.abs().max(1.0);
        tracker.record(res, || format!("a={a:.6} b={b:.6} x={x:.6} t={t:.6}"));
    }
    Ok(tracker.finish(
        Suite::Scalar.as_str(),
        opts.tol(Suite::Scalar.default_tolerance()),
    ))
}

/// `h^{-1}(e^{-t} h(x))` against the normalized semiflow for `|x| >= 1`,
/// `t <= tau'(x)`.
fn reverse(opts: &SuiteOptions) -> Result<ResidualReport> {
    let mut rng = opts.rng(Suite::Reverse);
    let mut tracker = Tracker::default();
    for n in 1..=3 {
        for r in RADII {
            let map = normalized_map(n, r, false)?;
            let points: Vec<State> = (0..50)
                .map(|_| random_direction(&mut rng, n) * rng.random_range(1.0..=5.0))
                .collect();
            let outcomes: Vec<Vec<(f64, String)>> = points
                .par_iter()
                .map(|x| {
                    let label = |t: f64| format!("n={n} r={r} x={} t={t:.6}", fmt_vec(x));
                    let (window, hx) = match map
                        .context()
                        .tau_prime(x)
                        .and_then(|tau| Ok((tau, map.h_map(x)?)))
                    {
                        Ok(v) => v,
                        Err(e) => return vec![(f64::INFINITY, format!("{} ({e})", label(0.0)))],
                    };
                    grid(window, T_POINTS)
                        .map(|t| match map.h_inverse(&(&hx * (-t).exp())) {
                            Ok(back) => ((back - normalized_flow(x, t)).norm(), label(t)),
                            Err(e) => (f64::INFINITY, format!("{} ({e})", label(t))),
                        })
                        .collect()
                })
                .collect();
            for (res, desc) in outcomes.into_iter().flatten() {
                tracker.record(res, || desc);
            }
        }
    }
    Ok(tracker.finish(
        Suite::Reverse.as_str(),
        opts.tol(Suite::Reverse.default_tolerance()),
    ))
}

/// Inside `B(0, r)`: `h(phi^t(h^{-1}(y))) = r (sqrt(|y| / r) - t)^2 y / |y|`
/// for `t <= sqrt(|y| / r)`.
fn interior(opts: &SuiteOptions) -> Result<ResidualReport> {
    let mut rng = opts.rng(Suite::Interior);
    let mut tracker = Tracker::default();
    for n in 1..=3 {
        for r in RADII {
            let map = normalized_map(n, r, false)?;
            let mut cases = Vec::new();
            for k in 1..=9 {
                let theta = 0.1 * k as f64;
                for _ in 0..4 {
                    cases.push((theta, random_direction(&mut rng, n) * (theta * r)));
                }
            }
            let outcomes: Vec<Vec<(f64, String)>> = cases
                .par_iter()
                .map(|(theta, y)| {
                    let label = |t: f64| format!("n={n} r={r} y={} t={t:.6}", fmt_vec(y));
                    let x = match map.h_inverse(y) {
                        Ok(x) => x,
                        Err(e) => return vec![(f64::INFINITY, format!("{} ({e})", label(0.0)))],
                    };
                    let unit = y / y.norm();
                    grid(theta.sqrt(), T_POINTS)
                        .map(|t| {
                            let expected = &unit * (r * (theta.sqrt() - t).powi(2));
                            let image = flow(map.system(), &x, t, map.integrator())
                                .and_then(|res| map.h_map(&res.state));
                            match image {
                                Ok(img) => ((img - expected).norm(), label(t)),
                                Err(e) => (f64::INFINITY, format!("{} ({e})", label(t))),
                            }
                        })
                        .collect()
                })
                .collect();
            for (res, desc) in outcomes.into_iter().flatten() {
                tracker.record(res, || desc);
            }
        }
    }
    Ok(tracker.finish(
        Suite::Interior.as_str(),
        opts.tol(Suite::Interior.default_tolerance()),
    ))
}

//! Semiflow evaluation: exact where a closed form is known, adaptive
//! integration otherwise, with finite-time arrival detected by the snap rule.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{self, Stop};
use crate::roots;
use crate::systems::{State, SystemSpec};

/// Step-size control, snapping and event tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Distance to the equilibrium below which the state snaps onto it.
    pub snap_radius: f64,
    /// Hard cap on the integration horizon.
    pub t_max: f64,
    pub event_tol: f64,
}

impl IntegratorConfig {
    pub fn closed_form() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            snap_radius: 1e-9,
            t_max: 1e3,
            event_tol: 1e-10,
        }
    }

    pub fn numeric() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            snap_radius: 1e-6,
            t_max: 1e3,
            event_tol: 1e-7,
        }
    }

    /// Defaults matching whether `sys` evaluates its flow in closed form.
    pub fn for_system(sys: &SystemSpec) -> Self {
        if sys.has_closed_flow() {
            Self::closed_form()
        } else {
            Self::numeric()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("snap_radius", self.snap_radius),
            ("t_max", self.t_max),
            ("event_tol", self.event_tol),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: name.to_string(),
                    value,
                    reason: "integrator settings must be positive and finite".to_string(),
                });
            }
        }
        Ok(())
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self::numeric()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum FlowStatus {
    Interior,
    ReachedEquilibrium { arrival_time: f64 },
    /// Signed time at which the orbit crossed the domain boundary.
    LeftDomain { exit_time: f64 },
    Capped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub state: State,
    /// Signed elapsed time the result is valid for.
    pub time_reached: f64,
    pub status: FlowStatus,
}

/// Exact semiflow `phi^t(x)`, or `Ok(None)` when the system has no closed form.
///
/// Negative times run the orbit backwards; whether it stays in the domain is
/// the caller's concern.
pub fn closed_form_flow(sys: &SystemSpec, x: &State, t: f64) -> Result<Option<State>> {
    sys.check_point(x)?;
    if t < 0.0 && sys.distance_to_equilibrium(x) == 0.0 {
        return Err(Error::BackwardFromEquilibrium);
    }
    Ok(sys.closed_flow_unchecked(x, t))
}

/// Evaluates `phi^t(x)`; `t < 0` runs the reversed field.
pub fn flow(sys: &SystemSpec, x: &State, t: f64, cfg: &IntegratorConfig) -> Result<FlowResult> {
    sys.check_point(x)?;
    cfg.validate()?;
    if !t.is_finite() {
        return Err(Error::InvalidParameter {
            name: "t".into(),
            value: t,
            reason: "flow time must be finite".into(),
        });
    }
    if t == 0.0 {
        return Ok(FlowResult {
            state: x.clone(),
            time_reached: 0.0,
            status: FlowStatus::Interior,
        });
    }
    if t < 0.0 && sys.distance_to_equilibrium(x) < cfg.snap_radius {
        return Err(Error::BackwardFromEquilibrium);
    }
    if sys.has_closed_flow() {
        closed_path(sys, x, t, cfg)
    } else {
        numeric_path(sys, x, t, cfg)
    }
}

fn closed_path(sys: &SystemSpec, x: &State, t: f64, cfg: &IntegratorConfig) -> Result<FlowResult> {
    let span = t.abs().min(cfg.t_max);
    let capped = t.abs() > cfg.t_max;
    let exact = |s: f64| sys.closed_flow_unchecked(x, s).expect("closed form enabled");

    if t > 0.0 {
        if let Some(arrival) = sys.closed_arrival_time(x).filter(|a| *a <= span) {
            return Ok(FlowResult {
                state: sys.equilibrium().clone(),
                time_reached: t,
                status: FlowStatus::ReachedEquilibrium {
                    arrival_time: arrival,
                },
            });
        }
        return Ok(FlowResult {
            state: exact(span),
            time_reached: span,
            status: if capped {
                FlowStatus::Capped
            } else {
                FlowStatus::Interior
            },
        });
    }

    let end = exact(-span);
    if !sys.in_domain(&end) {
        let exit = roots::bisect(
            0.0,
            span,
            |s| if sys.in_domain(&exact(-s)) { 1.0 } else { -1.0 },
            0.0,
        );
        return Ok(FlowResult {
            state: exact(-exit),
            time_reached: -exit,
            status: FlowStatus::LeftDomain { exit_time: -exit },
        });
    }
    Ok(FlowResult {
        state: end,
        time_reached: -span,
        status: if capped {
            FlowStatus::Capped
        } else {
            FlowStatus::Interior
        },
    })
}

fn numeric_path(sys: &SystemSpec, x: &State, t: f64, cfg: &IntegratorConfig) -> Result<FlowResult> {
    let backward = t < 0.0;
    let sign = if backward { -1.0 } else { 1.0 };
    let out = integrator::integrate(sys, x, t.abs(), backward, cfg, None)?;
    let result = match out.stop {
        Stop::Completed | Stop::Event => FlowResult {
            state: out.state,
            time_reached: sign * out.elapsed,
            status: FlowStatus::Interior,
        },
        Stop::Snapped => FlowResult {
            state: out.state,
            time_reached: t,
            status: FlowStatus::ReachedEquilibrium {
                arrival_time: out.elapsed,
            },
        },
        Stop::LeftDomain => FlowResult {
            state: out.state,
            time_reached: sign * out.elapsed,
            status: FlowStatus::LeftDomain {
                exit_time: sign * out.elapsed,
            },
        },
        Stop::Capped => FlowResult {
            state: out.state,
            time_reached: sign * out.elapsed,
            status: FlowStatus::Capped,
        },
    };
    Ok(result)
}

/// Samples the orbit of `x` on a nondecreasing time grid by chaining flows
/// between consecutive grid points.
pub fn trajectory(
    sys: &SystemSpec,
    x: &State,
    t_grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<(f64, State)>> {
    if t_grid.windows(2).any(|w| w[1].partial_cmp(&w[0]).is_none_or(|o| o.is_lt())) {
        return Err(Error::InvalidConfig("time grid must be nondecreasing".into()));
    }
    let mut out = Vec::with_capacity(t_grid.len());
    let mut prev: Option<(f64, State)> = None;
    for &t in t_grid {
        let (start_t, start_x) = match &prev {
            Some((pt, px)) => (*pt, px.clone()),
            None => (0.0, x.clone()),
        };
        let step = t - start_t;
        let res = flow(sys, &start_x, step, cfg)?;
        match res.status {
            FlowStatus::LeftDomain { .. } => {
                return Err(Error::OutsideDomain {
                    state: res.state.iter().copied().collect(),
                })
            }
            FlowStatus::Capped => return Err(Error::HorizonExceeded { t_max: cfg.t_max }),
            _ => {}
        }
        out.push((t, res.state.clone()));
        prev = Some((t, res.state));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{make_builtin, Params};
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> State {
        State::from_column_slice(xs)
    }

    fn normalized(n: usize) -> SystemSpec {
        make_builtin("normalized", n, &Params::new()).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let sys = normalized(2);
        let x = v(&[3.0, 4.0]);
        assert_eq!(closed_form_flow(&sys, &x, 5.0).unwrap(), Some(v(&[0.0, 0.0])));
        let half = closed_form_flow(&sys, &x, 2.5).unwrap().unwrap();
        assert_abs_diff_eq!(half[0], 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(half[1], 2.0, epsilon = 1e-15);
        let back = closed_form_flow(&sys, &x, -1.0).unwrap().unwrap();
        assert_abs_diff_eq!(back[0], 3.6, epsilon = 1e-15);
        assert_abs_diff_eq!(back[1], 4.8, epsilon = 1e-15);
        assert_eq!(
            closed_form_flow(&sys, &v(&[0.0, 0.0]), -1.0),
            Err(Error::BackwardFromEquilibrium)
        );
        let x0 = make_builtin("x0-plane", 2, &Params::new()).unwrap();
        assert_eq!(closed_form_flow(&x0, &x, 1.0).unwrap(), None);
    }

    #[test]
    fn sqrt_scalar_closed_form_satisfies_identity_and_ode() {
        let sys = make_builtin("sqrt-scalar", 1, &Params::new()).unwrap();
        let s0 = 2.25;
        let at = |t: f64| closed_form_flow(&sys, &v(&[s0]), t).unwrap().unwrap()[0];
        assert_eq!(at(0.0), s0);
        // (sqrt(2.25) - 1/2)^2 = 1
        assert_abs_diff_eq!(at(1.0), 1.0, epsilon = 1e-15);
        assert_eq!(at(3.0), 0.0);
        let h = 1e-6;
        for t in [0.2, 1.0, 2.5] {
            let deriv = (at(t + h) - at(t - h)) / (2.0 * h);
            assert_abs_diff_eq!(deriv, -at(t).sqrt(), epsilon = 1e-8);
        }
    }

    #[test]
    fn identity_axiom_is_exact() {
        let x0 = make_builtin("x0-plane", 2, &Params::new()).unwrap();
        let x = v(&[0.3, -0.7]);
        let r = flow(&x0, &x, 0.0, &IntegratorConfig::numeric()).unwrap();
        assert_eq!(r.state, x);
        assert_eq!(r.status, FlowStatus::Interior);
    }

    #[test]
    fn x0_plane_axis_arrival() {
        let x0 = make_builtin("x0-plane", 2, &Params::new()).unwrap();
        let r = flow(&x0, &v(&[0.0, 0.5]), 1.0, &IntegratorConfig::numeric()).unwrap();
        match r.status {
            FlowStatus::ReachedEquilibrium { arrival_time } => {
                assert!((arrival_time - 0.5).abs() < 1e-4, "{arrival_time}")
            }
            other => panic!("unexpected status {other:?}"),
        }
        assert_eq!(r.state, v(&[0.0, 0.0]));
    }

    #[test]
    fn x0_plane_long_horizon_settles() {
        let x0 = make_builtin("x0-plane", 2, &Params::new()).unwrap();
        let r = flow(&x0, &v(&[1.0, 1.0]), 10.0, &IntegratorConfig::numeric()).unwrap();
        assert!(r.state.norm() < 1e-3);
        assert!(matches!(
            r.status,
            FlowStatus::ReachedEquilibrium { .. } | FlowStatus::Interior
        ));
        // x1 decouples: x1(t) = e^{-t}
        if r.status == FlowStatus::Interior {
            assert!((r.state[0] - (-10f64).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn numeric_normalized_matches_closed_form() {
        let sys = normalized(3);
        let num = sys.without_closed_flow();
        let cfg = IntegratorConfig::numeric();
        for (k, norm) in [0.1, 0.7, 2.0, 9.5].into_iter().enumerate() {
            let dir = v(&[1.0, -2.0 + k as f64, 0.5]).normalize();
            let x = &dir * norm;
            for frac in [0.0, 0.3, 0.9, 0.999] {
                let t = frac * norm;
                let exact = closed_form_flow(&sys, &x, t).unwrap().unwrap();
                let approx = flow(&num, &x, t, &cfg).unwrap().state;
                assert!((exact - approx).norm() < 1e-5);
            }
        }
    }

    #[test]
    fn numeric_arrival_for_normalized() {
        let num = normalized(2).without_closed_flow();
        let r = flow(&num, &v(&[2.0, 0.0]), 3.0, &IntegratorConfig::numeric()).unwrap();
        match r.status {
            FlowStatus::ReachedEquilibrium { arrival_time } => {
                assert!((arrival_time - 2.0).abs() < 1e-4)
            }
            other => panic!("unexpected status {other:?}"),
        }
        let closed = flow(&normalized(2), &v(&[2.0, 0.0]), 3.0, &IntegratorConfig::closed_form())
            .unwrap();
        assert_eq!(
            closed.status,
            FlowStatus::ReachedEquilibrium { arrival_time: 2.0 }
        );
    }

    #[test]
    fn backward_errors_and_domain_exit() {
        let sys = normalized(2);
        assert_eq!(
            flow(&sys, &v(&[0.0, 0.0]), -1.0, &IntegratorConfig::closed_form()),
            Err(Error::BackwardFromEquilibrium)
        );
        let bounded = make_builtin("normalized-bounded", 2, &Params::new()).unwrap();
        for s in [bounded.clone(), bounded.without_closed_flow()] {
            let r = flow(&s, &v(&[1.0, 0.0]), -3.0, &IntegratorConfig::for_system(&s)).unwrap();
            match r.status {
                FlowStatus::LeftDomain { exit_time } => {
                    assert!((exit_time + 1.0).abs() < 1e-9, "{exit_time}")
                }
                other => panic!("unexpected status {other:?}"),
            }
        }
    }

    #[test]
    fn trajectory_examples() {
        let sys = normalized(2);
        let cfg = IntegratorConfig::closed_form();
        let traj = trajectory(&sys, &v(&[2.0, 0.0]), &[0.0, 1.0, 2.0, 3.0], &cfg).unwrap();
        let states: Vec<State> = traj.into_iter().map(|(_, s)| s).collect();
        assert_eq!(
            states,
            vec![v(&[2.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 0.0]), v(&[0.0, 0.0])]
        );

        let mut p = Params::new();
        p.insert("a".into(), 1.0);
        let lin = make_builtin("linear-scaled", 1, &p).unwrap();
        let traj = trajectory(&lin, &v(&[1.0]), &[0.0, 2f64.ln()], &cfg).unwrap();
        assert_eq!(traj[0].1[0], 1.0);
        assert_abs_diff_eq!(traj[1].1[0], 0.5, epsilon = 1e-15);

        assert!(trajectory(&lin, &v(&[1.0]), &[], &cfg).unwrap().is_empty());
        assert!(trajectory(&lin, &v(&[1.0]), &[1.0, 0.5], &cfg).is_err());
    }

    #[test]
    fn capped_horizon_is_reported() {
        let mut p = Params::new();
        p.insert("a".into(), 0.5);
        let lin = make_builtin("linear-scaled", 1, &p).unwrap();
        let mut cfg = IntegratorConfig::closed_form();
        cfg.t_max = 1.0;
        let r = flow(&lin, &v(&[1.0]), 4.0, &cfg).unwrap();
        assert_eq!(r.status, FlowStatus::Capped);
        assert_eq!(r.time_reached, 1.0);
    }

    #[test]
    fn config_validation() {
        let mut cfg = IntegratorConfig::numeric();
        cfg.event_tol = 0.0;
        assert!(cfg.validate().is_err());
        assert!(IntegratorConfig::closed_form().validate().is_ok());
    }
}

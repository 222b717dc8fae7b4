//! Adaptive integration of the built-in fields.
//!
//! The driver runs the Dormand–Prince 5(4) pair with step rejection and
//! Hairer's stiffness test. Once the test fires repeatedly it hands the rest
//! of the interval to a linearly implicit Rosenbrock 4(3) method, which is
//! what keeps the x0-plane field tractable near the x1 = 0 axis where its
//! second component relaxes at rate 1 / x1^2.
//!
//! Forward steps are capped so that a single step never moves more than half
//! the distance to the equilibrium; the normalized field is not Lipschitz
//! there and would otherwise overshoot.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::flow::IntegratorConfig;
use crate::systems::{Domain, State, SystemSpec};

const MAX_STEPS: usize = 2_000_000;
const STIFF_TRIGGER: usize = 15;
const STIFF_RESET: usize = 6;
const STIFF_THRESHOLD: f64 = 3.25;

/// Why integration stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Stop {
    Completed,
    /// Entered the snap ball; the state was replaced by the equilibrium.
    Snapped,
    /// The event function changed sign.
    Event,
    LeftDomain,
    /// The horizon cap was hit before the requested duration.
    Capped,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    /// Elapsed (nonnegative) integration time.
    pub elapsed: f64,
    pub state: State,
    pub stop: Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    DormandPrince,
    Rosenbrock,
}

struct Rhs<'a> {
    sys: &'a SystemSpec,
    sign: f64,
}

impl Rhs<'_> {
    fn eval(&self, x: &State) -> State {
        self.sys.field_unchecked(x) * self.sign
    }

    fn jacobian(&self, x: &State) -> DMatrix<f64> {
        self.sys.field_jacobian(x) * self.sign
    }
}

struct Trial {
    state: State,
    /// Field at `state` (first-same-as-last for Dormand–Prince).
    field: State,
    error: f64,
    stiffness: Option<f64>,
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn error_norm(err: &State, x: &State, x_new: &State, cfg: &IntegratorConfig) -> f64 {
    let n = err.len().max(1) as f64;
    let sum: f64 = err
        .iter()
        .zip(x.iter().zip(x_new.iter()))
        .map(|(e, (a, b))| {
            let scale = cfg.abs_tol + cfg.rel_tol * a.abs().max(b.abs());
            (e / scale).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

fn dormand_prince(rhs: &Rhs, x: &State, fx: &State, h: f64, cfg: &IntegratorConfig) -> Trial {
    let k1 = fx;
    let k2 = rhs.eval(&(x + k1 * (h * A21)));
    let k3 = rhs.eval(&(x + (k1 * A31 + &k2 * A32) * h));
    let k4 = rhs.eval(&(x + (k1 * A41 + &k2 * A42 + &k3 * A43) * h));
    let k5 = rhs.eval(&(x + (k1 * A51 + &k2 * A52 + &k3 * A53 + &k4 * A54) * h));
    let y6 = x + (k1 * A61 + &k2 * A62 + &k3 * A63 + &k4 * A64 + &k5 * A65) * h;
    let k6 = rhs.eval(&y6);
    let x_new = x + (k1 * B1 + &k3 * B3 + &k4 * B4 + &k5 * B5 + &k6 * B6) * h;
    let k7 = rhs.eval(&x_new);
    let err = (k1 * E1 + &k3 * E3 + &k4 * E4 + &k5 * E5 + &k6 * E6 + &k7 * E7) * h;
    let error = error_norm(&err, x, &x_new, cfg);
    let den = (&x_new - &y6).norm();
    let stiffness = (den > 0.0).then(|| h * (&k7 - &k6).norm() / den);
    Trial {
        state: x_new,
        field: k7,
        error,
        stiffness,
    }
}

// Shampine's Rosenbrock 4(3) parameters.
const R_GAMMA: f64 = 0.5;
const R_A21: f64 = 2.0;
const R_A31: f64 = 48.0 / 25.0;
const R_A32: f64 = 6.0 / 25.0;
const R_C21: f64 = -8.0;
const R_C31: f64 = 372.0 / 25.0;
const R_C32: f64 = 12.0 / 5.0;
const R_C41: f64 = -112.0 / 125.0;
const R_C42: f64 = -54.0 / 125.0;
const R_C43: f64 = -2.0 / 5.0;
const R_B1: f64 = 19.0 / 9.0;
const R_B2: f64 = 1.0 / 2.0;
const R_B3: f64 = 25.0 / 108.0;
const R_B4: f64 = 125.0 / 108.0;
const R_E1: f64 = 17.0 / 54.0;
const R_E2: f64 = 7.0 / 36.0;
const R_E3: f64 = 0.0;
const R_E4: f64 = 125.0 / 108.0;

fn rosenbrock(rhs: &Rhs, x: &State, fx: &State, h: f64, cfg: &IntegratorConfig) -> Option<Trial> {
    let n = x.len();
    let matrix = DMatrix::identity(n, n) / (R_GAMMA * h) - rhs.jacobian(x);
    let lu = matrix.lu();
    let g1 = lu.solve(fx)?;
    let f2 = rhs.eval(&(x + &g1 * R_A21));
    let g2 = lu.solve(&(f2 + &g1 * (R_C21 / h)))?;
    let f3 = rhs.eval(&(x + &g1 * R_A31 + &g2 * R_A32));
    let g3 = lu.solve(&(&f3 + (&g1 * R_C31 + &g2 * R_C32) / h))?;
    let g4 = lu.solve(&(&f3 + (&g1 * R_C41 + &g2 * R_C42 + &g3 * R_C43) / h))?;
    let x_new = x + &g1 * R_B1 + &g2 * R_B2 + &g3 * R_B3 + &g4 * R_B4;
    let err = &g1 * R_E1 + &g2 * R_E2 + &g3 * R_E3 + &g4 * R_E4;
    let error = error_norm(&err, x, &x_new, cfg);
    let field = rhs.eval(&x_new);
    Some(Trial {
        state: x_new,
        field,
        error,
        stiffness: None,
    })
}

fn attempt(
    method: Method,
    rhs: &Rhs,
    x: &State,
    fx: &State,
    h: f64,
    cfg: &IntegratorConfig,
) -> Option<Trial> {
    let trial = match method {
        Method::DormandPrince => Some(dormand_prince(rhs, x, fx, h, cfg)),
        Method::Rosenbrock => rosenbrock(rhs, x, fx, h, cfg),
    }?;
    let finite = trial.state.iter().all(|v| v.is_finite()) && trial.error.is_finite();
    finite.then_some(trial)
}

fn order(method: Method) -> f64 {
    match method {
        Method::DormandPrince => 5.0,
        Method::Rosenbrock => 4.0,
    }
}

fn domain_margin(sys: &SystemSpec, x: &State) -> Option<f64> {
    match sys.domain() {
        Domain::FullSpace => None,
        Domain::OpenBall { radius } => Some(radius - sys.distance_to_equilibrium(x)),
    }
}

/// Integrates `x0` for `duration >= 0` time units, backwards (reversed field)
/// when `backward` is set, stopping early at the first sign change of
/// `event`, on domain exit, or (forward only) on entering the snap ball.
pub(crate) fn integrate(
    sys: &SystemSpec,
    x0: &State,
    duration: f64,
    backward: bool,
    cfg: &IntegratorConfig,
    event: Option<&dyn Fn(&State) -> f64>,
) -> Result<Outcome> {
    let rhs = Rhs {
        sys,
        sign: if backward { -1.0 } else { 1.0 },
    };
    let target = duration.min(cfg.t_max);
    let capped = duration > cfg.t_max;

    let mut t = 0.0;
    let mut x = x0.clone();
    let mut fx = rhs.eval(&x);
    let g0 = event.map(|g| g(&x));
    if g0 == Some(0.0) {
        return Ok(Outcome {
            elapsed: 0.0,
            state: x,
            stop: Stop::Event,
        });
    }
    if !backward && sys.distance_to_equilibrium(&x) < cfg.snap_radius {
        return Ok(Outcome {
            elapsed: 0.0,
            state: sys.equilibrium().clone(),
            stop: Stop::Snapped,
        });
    }

    let mut method = Method::DormandPrince;
    let mut stiff_hits = 0usize;
    let mut calm_hits = 0usize;
    let mut h = target.clamp(f64::MIN_POSITIVE, 1e-2);
    let mut last_rejected = false;

    for _ in 0..MAX_STEPS {
        let remaining = target - t;
        if remaining <= 1e-15 * (1.0 + t) {
            if remaining > 0.0 {
                x += &fx * remaining;
            }
            return Ok(Outcome {
                elapsed: target,
                state: x,
                stop: if capped { Stop::Capped } else { Stop::Completed },
            });
        }
        h = h.min(remaining);
        if !backward {
            let speed = fx.norm();
            if speed > 0.0 {
                h = h.min(0.5 * sys.distance_to_equilibrium(&x) / speed);
            }
        }
        let h_min = 1e-15 * (1.0 + t);
        if h < h_min {
            return Err(Error::IntegrationFailure {
                t: rhs.sign * t,
                last_state: x.iter().copied().collect(),
                reason: format!("step size underflow (h = {h:e})"),
            });
        }

        let Some(trial) = attempt(method, &rhs, &x, &fx, h, cfg) else {
            h *= 0.25;
            last_rejected = true;
            continue;
        };

        if trial.error > 1.0 {
            let fac = (0.9 * trial.error.powf(-1.0 / order(method))).clamp(0.2, 1.0);
            h *= fac;
            last_rejected = true;
            continue;
        }

        // accepted; the sub-step map is exact for locating events inside it
        let sub_step = |theta: f64| -> State {
            if theta <= 0.0 {
                return x.clone();
            }
            attempt(method, &rhs, &x, &fx, theta * h, cfg)
                .map(|tr| tr.state)
                .unwrap_or_else(|| trial.state.clone())
        };

        if let Some(margin) = domain_margin(sys, &trial.state) {
            if margin <= 0.0 {
                let theta = crate::roots::bisect(
                    0.0,
                    1.0,
                    |th| domain_margin(sys, &sub_step(th)).unwrap_or(1.0),
                    1e-15,
                );
                return Ok(Outcome {
                    elapsed: t + theta * h,
                    state: sub_step(theta),
                    stop: Stop::LeftDomain,
                });
            }
        }

        if let (Some(g), Some(g_start)) = (event, g0) {
            let g_new = g(&trial.state);
            if g_new == 0.0 || (g_new > 0.0) != (g_start > 0.0) {
                let theta = crate::roots::bisect(0.0, 1.0, |th| g(&sub_step(th)), 1e-15);
                return Ok(Outcome {
                    elapsed: t + theta * h,
                    state: sub_step(theta),
                    stop: Stop::Event,
                });
            }
        }

        t += h;
        x = trial.state;
        fx = trial.field;

        if !backward && sys.distance_to_equilibrium(&x) < cfg.snap_radius {
            return Ok(Outcome {
                elapsed: t,
                state: sys.equilibrium().clone(),
                stop: Stop::Snapped,
            });
        }

        if method == Method::DormandPrince {
            match trial.stiffness {
                Some(ratio) if ratio > STIFF_THRESHOLD => {
                    calm_hits = 0;
                    stiff_hits += 1;
                    if stiff_hits >= STIFF_TRIGGER {
                        log::debug!("stiffness detected at t = {t}; switching to Rosenbrock");
                        method = Method::Rosenbrock;
                    }
                }
                _ => {
                    calm_hits += 1;
                    if calm_hits >= STIFF_RESET {
                        stiff_hits = 0;
                    }
                }
            }
        }

        let mut fac = if trial.error > 0.0 {
            0.9 * trial.error.powf(-1.0 / order(method))
        } else {
            5.0
        };
        fac = fac.clamp(0.2, 5.0);
        if last_rejected {
            fac = fac.min(1.0);
        }
        last_rejected = false;
        h *= fac;
    }

    Err(Error::IntegrationFailure {
        t: rhs.sign * t,
        last_state: x.iter().copied().collect(),
        reason: format!("step budget of {MAX_STEPS} exhausted"),
    })
}

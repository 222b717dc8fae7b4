//! Level-set crossing times and the collar coordinates `(tau', rho')`.
//!
//! Outside the sublevel set `U_eps = {V < eps}` a point is described by the
//! time it needs to reach `L_eps = {V = eps}` and the point where it gets
//! there; inside, the time coordinate is `ln(V / eps)` and the base point is
//! found by running the orbit backwards onto `L_eps`.

use crate::error::{Error, Result};
use crate::flow::IntegratorConfig;
use crate::integrator::{self, Stop};
use crate::roots::{bisect, bracket_by_doubling};
use crate::sampling::{star_check_count, unit_directions};
use crate::systems::{Domain, State, SystemSpec};

const RAY_LIMIT: f64 = 1e8;
const STAR_GRID: usize = 64;

/// The inner level `eps` and the outcome of its star-shapedness check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelFrame {
    pub epsilon: f64,
    pub star_shaped_ok: bool,
}

impl LevelFrame {
    /// Validates that every sampled ray from the equilibrium crosses
    /// `{V = epsilon}` exactly once inside the domain.
    pub fn new(sys: &SystemSpec, epsilon: f64, seed: u64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "epsilon".into(),
                value: epsilon,
                reason: "level must be positive and finite".into(),
            });
        }
        check_star_shaped(sys, epsilon, seed)?;
        Ok(Self {
            epsilon,
            star_shaped_ok: true,
        })
    }
}

/// Checks single crossing of `{V = level}` along the standard direction set.
pub fn check_star_shaped(sys: &SystemSpec, level: f64, seed: u64) -> Result<()> {
    let n = sys.dimension();
    for u in unit_directions(n, star_check_count(n), seed) {
        let s_star = ray_parameter(sys, &u, level)?;
        let limit = match sys.domain() {
            Domain::FullSpace => 2.0 * s_star,
            Domain::OpenBall { radius } => (2.0 * s_star).min(radius * (1.0 - 1e-9)),
        };
        let mut prev_sign = -1.0;
        let mut changes = 0;
        for k in 1..=STAR_GRID {
            let s = limit * k as f64 / STAR_GRID as f64;
            let g = sys.lyapunov_unchecked(&(sys.equilibrium() + &u * s)) - level;
            let sign = if g > 0.0 { 1.0 } else { -1.0 };
            if sign != prev_sign {
                changes += 1;
            }
            prev_sign = sign;
        }
        if changes > 1 {
            return Err(Error::NotStarShaped {
                level,
                direction: u.iter().copied().collect(),
            });
        }
    }
    Ok(())
}

fn ray_parameter(sys: &SystemSpec, u: &State, level: f64) -> Result<f64> {
    let center = sys.equilibrium();
    let (limit, bounded) = match sys.domain() {
        Domain::FullSpace => (RAY_LIMIT, false),
        Domain::OpenBall { radius } => (radius * (1.0 - 1e-12), true),
    };
    let g = |s: f64| sys.lyapunov_unchecked(&(center + u * s)) - level;
    let Some((lo, hi)) = bracket_by_doubling(0.25_f64.min(limit), limit, g) else {
        let direction = u.iter().copied().collect();
        return Err(if bounded {
            Error::LevelOutsideDomain { level, direction }
        } else {
            Error::NoBracket { level, direction }
        });
    };
    Ok(bisect(lo, hi, g, 0.0))
}

/// Time and point at which an orbit meets a level set.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingResult {
    pub time: f64,
    pub point: State,
}

/// A system together with a validated level frame and integrator settings;
/// the context in which `tau'`, `rho'` and the sphere projection live.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelContext {
    pub system: SystemSpec,
    pub frame: LevelFrame,
    pub integrator: IntegratorConfig,
}

impl LevelContext {
    pub fn new(system: SystemSpec, epsilon: f64, integrator: IntegratorConfig) -> Result<Self> {
        Self::with_seed(system, epsilon, integrator, 0)
    }

    pub fn with_seed(
        system: SystemSpec,
        epsilon: f64,
        integrator: IntegratorConfig,
        seed: u64,
    ) -> Result<Self> {
        integrator.validate()?;
        let frame = LevelFrame::new(&system, epsilon, seed)?;
        Ok(Self {
            system,
            frame,
            integrator,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.frame.epsilon
    }

    fn is_equilibrium(&self, x: &State) -> bool {
        self.system.distance_to_equilibrium(x) == 0.0
    }

    /// `T+_eps(x)`: first forward time at which `V(phi^t(x)) = eps`.
    pub fn crossing_time_forward(&self, x: &State) -> Result<CrossingResult> {
        self.forward_to_level(x, self.epsilon())
    }

    /// `T-_eps(x)`: first backward time at which `V(phi^{-t}(x)) = eps`.
    pub fn crossing_time_backward(&self, x: &State) -> Result<CrossingResult> {
        self.backward_to_level(x, self.epsilon())
    }

    /// First forward time at which `V` drops to `level`.
    pub fn forward_to_level(&self, x: &State, level: f64) -> Result<CrossingResult> {
        let sys = &self.system;
        sys.check_point(x)?;
        let v0 = sys.lyapunov_unchecked(x);
        if v0 == level {
            return Ok(CrossingResult {
                time: 0.0,
                point: x.clone(),
            });
        }
        if v0 < level {
            return Err(Error::BelowLevel { value: v0, level });
        }

        if sys.has_closed_flow() {
            let at = |t: f64| sys.closed_flow_unchecked(x, t).expect("closed form enabled");
            let g = |t: f64| sys.lyapunov_unchecked(&at(t)) - level;
            let (lo, hi) = match sys.closed_arrival_time(x) {
                Some(arrival) => (0.0, arrival),
                None => bracket_by_doubling(1.0, self.integrator.t_max, g).ok_or(
                    Error::HorizonExceeded {
                        t_max: self.integrator.t_max,
                    },
                )?,
            };
            let time = bisect(lo, hi, g, 0.0);
            return Ok(CrossingResult {
                time,
                point: at(time),
            });
        }

        let g = |y: &State| sys.lyapunov_unchecked(y) - level;
        let out = integrator::integrate(sys, x, self.integrator.t_max, false, &self.integrator, Some(&g))?;
        match out.stop {
            Stop::Event => Ok(CrossingResult {
                time: out.elapsed,
                point: out.state,
            }),
            Stop::Snapped => Err(Error::IntegrationFailure {
                t: out.elapsed,
                last_state: out.state.iter().copied().collect(),
                reason: format!("reached the snap ball before the level {level}"),
            }),
            Stop::LeftDomain => Err(Error::LeftDomainBeforeLevel {
                exit_time: out.elapsed,
            }),
            Stop::Completed | Stop::Capped => Err(Error::HorizonExceeded {
                t_max: self.integrator.t_max,
            }),
        }
    }

    /// First backward time at which `V` rises to `level`.
    pub fn backward_to_level(&self, x: &State, level: f64) -> Result<CrossingResult> {
        let sys = &self.system;
        sys.check_point(x)?;
        if self.is_equilibrium(x) {
            return Err(Error::AtEquilibrium);
        }
        let v0 = sys.lyapunov_unchecked(x);
        if v0 == level {
            return Ok(CrossingResult {
                time: 0.0,
                point: x.clone(),
            });
        }
        if v0 > level {
            return Err(Error::AboveLevel { value: v0, level });
        }

        if sys.has_closed_flow() {
            let at = |s: f64| sys.closed_flow_unchecked(x, -s).expect("closed form enabled");
            // leaving the domain counts as overshooting the level
            let g = |s: f64| {
                let y = at(s);
                if sys.in_domain(&y) {
                    sys.lyapunov_unchecked(&y) - level
                } else {
                    f64::INFINITY
                }
            };
            let (lo, hi) = bracket_by_doubling(1.0, self.integrator.t_max, g).ok_or(
                Error::HorizonExceeded {
                    t_max: self.integrator.t_max,
                },
            )?;
            let time = bisect(lo, hi, g, 0.0);
            let point = at(time);
            if !sys.in_domain(&point) {
                return Err(Error::LeftDomainBeforeLevel { exit_time: -time });
            }
            return Ok(CrossingResult { time, point });
        }

        let g = |y: &State| sys.lyapunov_unchecked(y) - level;
        let out = integrator::integrate(sys, x, self.integrator.t_max, true, &self.integrator, Some(&g))?;
        match out.stop {
            Stop::Event => Ok(CrossingResult {
                time: out.elapsed,
                point: out.state,
            }),
            Stop::LeftDomain => Err(Error::LeftDomainBeforeLevel {
                exit_time: -out.elapsed,
            }),
            Stop::Snapped | Stop::Completed | Stop::Capped => Err(Error::HorizonExceeded {
                t_max: self.integrator.t_max,
            }),
        }
    }

    /// `tau'(x)`: the flow time to `L_eps` outside `U_eps`, `ln(V / eps)` inside.
    pub fn tau_prime(&self, x: &State) -> Result<f64> {
        self.system.check_point(x)?;
        if self.is_equilibrium(x) {
            return Err(Error::AtEquilibrium);
        }
        let v = self.system.lyapunov_unchecked(x);
        if v >= self.epsilon() {
            Ok(self.crossing_time_forward(x)?.time)
        } else {
            Ok((v / self.epsilon()).ln())
        }
    }

    /// `rho'(x)`: the point of `L_eps` on the orbit through `x`.
    pub fn rho_prime(&self, x: &State) -> Result<State> {
        self.system.check_point(x)?;
        if self.is_equilibrium(x) {
            return Err(Error::AtEquilibrium);
        }
        let v = self.system.lyapunov_unchecked(x);
        if v >= self.epsilon() {
            Ok(self.crossing_time_forward(x)?.point)
        } else {
            Ok(self.crossing_time_backward(x)?.point)
        }
    }

    /// Radial projection of a point of `L_eps` onto the unit sphere.
    pub fn sphere_projection(&self, p: &State) -> Result<State> {
        let sys = &self.system;
        if p.len() != sys.dimension() {
            return Err(Error::DimensionMismatch {
                context: "sphere projection".into(),
                expected: sys.dimension(),
                got: p.len(),
            });
        }
        if self.is_equilibrium(p) {
            return Err(Error::AtEquilibrium);
        }
        let gap = (sys.lyapunov_unchecked(p) - self.epsilon()).abs();
        if gap > self.integrator.event_tol {
            return Err(Error::OffLevelSet {
                point: p.iter().copied().collect(),
                gap,
            });
        }
        Ok((p - sys.equilibrium()).normalize())
    }

    /// The point where the ray from the equilibrium along `u` meets `L_eps`.
    /// `u` is normalized first.
    pub fn ray_level_point(&self, u: &State) -> Result<State> {
        self.ray_point_at_level(u, self.epsilon())
    }

    pub fn ray_point_at_level(&self, u: &State, level: f64) -> Result<State> {
        let sys = &self.system;
        if u.len() != sys.dimension() {
            return Err(Error::DimensionMismatch {
                context: "ray direction".into(),
                expected: sys.dimension(),
                got: u.len(),
            });
        }
        let norm = u.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidConfig("ray direction must be nonzero".into()));
        }
        let u = u / norm;
        let s = ray_parameter(sys, &u, level)?;
        Ok(sys.equilibrium() + u * s)
    }
}

//! The linearizing homeomorphism `h_r(x) = r e^{tau'(x)} P(rho'(x))`, its
//! inverse, the guaranteed time window `gamma_r`, and the bounded-domain
//! variant with outer radius `R`.
//!
//! Under `h_r` the semiflow agrees with `y -> e^{-t} y` for every `y` with
//! `|y| >= r` and `0 <= t <= gamma_r(|y| - r)`.

pub mod closed_form;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{flow, FlowStatus, IntegratorConfig};
use crate::levelset::LevelContext;
use crate::sampling::{minimize_on_sphere, SamplerConfig};
use crate::systems::{validate, State, SystemSpec};

/// How the offset `V(x) - V(C)` of the bounded-domain time coordinate reads
/// the scalar level `C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffsetReading {
    /// Subtract the level value `C` itself.
    #[default]
    LevelValue,
    /// Subtract `V` evaluated at distance `C` from the equilibrium along the
    /// first coordinate axis.
    LyapunovAtRadius,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjugacyMap {
    context: LevelContext,
    radius: f64,
    sampler: SamplerConfig,
    offset: OffsetReading,
}

impl ConjugacyMap {
    /// Validates the system and the level frame and fixes the image radius `r`
    /// of `L_eps`.
    pub fn build(
        system: SystemSpec,
        epsilon: f64,
        radius: f64,
        integrator: IntegratorConfig,
        sampler: SamplerConfig,
    ) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "r".into(),
                value: radius,
                reason: "image radius must be positive and finite".into(),
            });
        }
        if sampler.directions == 0 {
            return Err(Error::InvalidConfig("sampler needs at least one direction".into()));
        }
        validate(&system)?;
        let context = LevelContext::with_seed(system, epsilon, integrator, sampler.seed)?;
        Ok(Self {
            context,
            radius,
            sampler,
            offset: OffsetReading::default(),
        })
    }

    /// Shorthand using the integrator defaults for `system`.
    pub fn with_defaults(system: SystemSpec, epsilon: f64, radius: f64) -> Result<Self> {
        let integrator = IntegratorConfig::for_system(&system);
        Self::build(system, epsilon, radius, integrator, SamplerConfig::default())
    }

    pub fn with_offset_reading(mut self, offset: OffsetReading) -> Self {
        self.offset = offset;
        self
    }

    pub fn context(&self) -> &LevelContext {
        &self.context
    }

    pub fn system(&self) -> &SystemSpec {
        &self.context.system
    }

    pub fn epsilon(&self) -> f64 {
        self.context.epsilon()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn integrator(&self) -> &IntegratorConfig {
        &self.context.integrator
    }

    pub fn sampler(&self) -> &SamplerConfig {
        &self.sampler
    }

    pub fn offset_reading(&self) -> OffsetReading {
        self.offset
    }

    fn is_equilibrium(&self, x: &State) -> bool {
        self.system().distance_to_equilibrium(x) == 0.0
    }

    /// `(tau'(x), rho'(x))` from a single crossing computation.
    fn collar_coordinates(&self, x: &State) -> Result<(f64, State)> {
        let ctx = &self.context;
        let v = self.system().lyapunov_unchecked(x);
        if v >= self.epsilon() {
            let c = ctx.crossing_time_forward(x)?;
            Ok((c.time, c.point))
        } else {
            let c = ctx.crossing_time_backward(x)?;
            Ok(((v / self.epsilon()).ln(), c.point))
        }
    }

    /// `h_r(x)`; the equilibrium maps to the origin.
    pub fn h_map(&self, x: &State) -> Result<State> {
        self.system().check_point(x)?;
        if self.is_equilibrium(x) {
            return Ok(State::zeros(x.len()));
        }
        let (tau, base) = self.collar_coordinates(x)?;
        let direction = self.context.sphere_projection(&base)?;
        Ok(direction * (self.radius * tau.exp()))
    }

    /// `h_r^{-1}(y)`: run backwards from `L_eps` for `ln(|y| / r)` when
    /// `|y| >= r`, otherwise forwards until `V = eps |y| / r`.
    pub fn h_inverse(&self, y: &State) -> Result<State> {
        let sys = self.system();
        if y.len() != sys.dimension() {
            return Err(Error::DimensionMismatch {
                context: "h_inverse argument".into(),
                expected: sys.dimension(),
                got: y.len(),
            });
        }
        let norm = y.norm();
        if !norm.is_finite() {
            return Err(Error::OutsideImage {
                y: y.iter().copied().collect(),
            });
        }
        if norm == 0.0 {
            return Ok(sys.equilibrium().clone());
        }
        let base = self.context.ray_level_point(y)?;
        let ratio = norm / self.radius;
        if ratio >= 1.0 {
            let back = ratio.ln();
            if back == 0.0 {
                return Ok(base);
            }
            let res = flow(sys, &base, -back, self.integrator())?;
            match res.status {
                FlowStatus::LeftDomain { .. } => Err(Error::OutsideImage {
                    y: y.iter().copied().collect(),
                }),
                FlowStatus::Capped => Err(Error::HorizonExceeded {
                    t_max: self.integrator().t_max,
                }),
                _ => Ok(res.state),
            }
        } else {
            Ok(self
                .context
                .forward_to_level(&base, self.epsilon() * ratio)?
                .point)
        }
    }

    /// `gamma_r(s)`: sampled infimum of `T+_eps(h_r^{-1}(y))` over `|y| = s + r`.
    pub fn gamma_r(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "s".into(),
                value: s,
                reason: "gamma_r is defined on [0, inf)".into(),
            });
        }
        if s == 0.0 {
            return Ok(0.0);
        }
        let norm = s + self.radius;
        let n = self.system().dimension();
        let objective = |u: &State| {
            let x = self.h_inverse(&(u * norm)).ok()?;
            self.context.crossing_time_forward(&x).ok().map(|c| c.time)
        };
        minimize_on_sphere(n, &self.sampler, objective)
            .map(|(_, value)| value)
            .ok_or_else(|| Error::OutsideImage {
                y: vec![norm; n],
            })
    }

    fn check_case2(&self, c: f64) -> Result<()> {
        if self.system().backward_complete() {
            return Err(Error::RequiresBoundedDomain);
        }
        if c.is_nan() || c <= self.epsilon() {
            return Err(Error::LevelOrder {
                c,
                epsilon: self.epsilon(),
            });
        }
        Ok(())
    }

    fn offset_value(&self, c: f64) -> f64 {
        match self.offset {
            OffsetReading::LevelValue => c,
            OffsetReading::LyapunovAtRadius => {
                let sys = self.system();
                let mut p = sys.equilibrium().clone();
                p[0] += c;
                sys.lyapunov_unchecked(&p)
            }
        }
    }

    /// Time coordinate of the bounded-domain construction: `tau` on
    /// `K = V^{-1}([eps, C])`, `tau + (V - C)` beyond it and `ln(V / eps)`
    /// inside `U_eps`.
    pub fn tau_case2(&self, c: f64, x: &State) -> Result<f64> {
        self.check_case2(c)?;
        self.system().check_point(x)?;
        if self.is_equilibrium(x) {
            return Err(Error::AtEquilibrium);
        }
        let v = self.system().lyapunov_unchecked(x);
        if v < self.epsilon() {
            return Ok((v / self.epsilon()).ln());
        }
        let tau = self.context.crossing_time_forward(x)?.time;
        if v > c {
            Ok(tau + (v - self.offset_value(c)))
        } else {
            Ok(tau)
        }
    }

    /// `R = inf_{x in L_C} r e^{tau_C(x)}`, sampled over directions.
    pub fn outer_radius(&self, c: f64) -> Result<f64> {
        self.check_case2(c)?;
        let n = self.system().dimension();
        let objective = |u: &State| {
            let p = self.context.ray_point_at_level(u, c).ok()?;
            let tau = self.tau_case2(c, &p).ok()?;
            Some(self.radius * tau.exp())
        };
        let (_, value) = minimize_on_sphere(n, &self.sampler, objective).ok_or(
            Error::LevelOutsideDomain {
                level: c,
                direction: vec![],
            },
        )?;
        if value <= self.radius {
            return Err(Error::InvalidConfig(format!(
                "outer radius {value} does not exceed r = {}",
                self.radius
            )));
        }
        Ok(value)
    }
}

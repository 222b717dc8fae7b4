//! Built-in vector fields with their equilibria, domains and Lyapunov functions.
//!
//! Every field is single-valued and locally Lipschitz away from its equilibrium.
//! At the equilibrium the stability-forced selection `0` is returned, so the
//! Filippov regularization never has to be materialized elsewhere.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the state space.
pub type State = DVector<f64>;

/// Default radius of the `normalized-bounded` domain.
pub const DEFAULT_BOUNDED_RADIUS: f64 = 2.0;

/// Names of the built-in systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    Normalized,
    NormalizedBounded,
    LinearScaled,
    SqrtScalar,
    X0Plane,
}

impl Builtin {
    pub const ALL: [Builtin; 5] = [
        Builtin::Normalized,
        Builtin::NormalizedBounded,
        Builtin::LinearScaled,
        Builtin::SqrtScalar,
        Builtin::X0Plane,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Builtin::Normalized => "normalized",
            Builtin::NormalizedBounded => "normalized-bounded",
            Builtin::LinearScaled => "linear-scaled",
            Builtin::SqrtScalar => "sqrt-scalar",
            Builtin::X0Plane => "x0-plane",
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Builtin::ALL
            .iter()
            .copied()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::UnknownSystem(s.to_string()))
    }
}

/// Where the semiflow lives.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Domain {
    FullSpace,
    /// Open ball around the equilibrium.
    OpenBall { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Field {
    /// `-x / |x|`
    Normalized,
    /// `-a x`
    Linear { a: f64 },
    /// `-sgn(s) sqrt(|s|)`
    Sqrt,
    /// `(-x1, -x2 / (|x2| + x1^2))`
    X0,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Lyapunov {
    /// `|x|^2 / 2`
    HalfSquaredNorm,
    /// `|x|^2`
    SquaredNorm,
}

/// A vector field together with its equilibrium, domain and Lyapunov function.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    builtin: Builtin,
    dimension: usize,
    field: Field,
    lyapunov: Lyapunov,
    equilibrium: State,
    domain: Domain,
    backward_complete: bool,
    closed_flow_enabled: bool,
}

impl SystemSpec {
    pub fn builtin(&self) -> Builtin {
        self.builtin
    }

    pub fn name(&self) -> &'static str {
        self.builtin.as_str()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn equilibrium(&self) -> &State {
        &self.equilibrium
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Whether `(-inf, 0] x (B(x*) \ {x*})` lies in the semiflow domain.
    pub fn backward_complete(&self) -> bool {
        self.backward_complete
    }

    pub fn has_closed_flow(&self) -> bool {
        self.closed_flow_enabled && self.field_has_closed_flow()
    }

    fn field_has_closed_flow(&self) -> bool {
        !matches!(self.field, Field::X0)
    }

    /// Same system with the closed-form semiflow switched off, so every
    /// evaluation goes through numerical integration.
    pub fn without_closed_flow(&self) -> SystemSpec {
        SystemSpec {
            closed_flow_enabled: false,
            ..self.clone()
        }
    }

    pub fn in_domain(&self, x: &State) -> bool {
        match self.domain {
            Domain::FullSpace => x.iter().all(|v| v.is_finite()),
            Domain::OpenBall { radius } => (x - &self.equilibrium).norm() < radius,
        }
    }

    pub(crate) fn check_point(&self, x: &State) -> Result<()> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                context: format!("state for {}", self.name()),
                expected: self.dimension,
                got: x.len(),
            });
        }
        if !self.in_domain(x) {
            return Err(Error::OutsideDomain {
                state: x.iter().copied().collect(),
            });
        }
        Ok(())
    }

    pub(crate) fn distance_to_equilibrium(&self, x: &State) -> f64 {
        (x - &self.equilibrium).norm()
    }

    /// Field value at `x`; the equilibrium maps to `0`.
    pub fn eval_field(&self, x: &State) -> Result<State> {
        self.check_point(x)?;
        Ok(self.field_unchecked(x))
    }

    pub(crate) fn field_unchecked(&self, x: &State) -> State {
        let z = x - &self.equilibrium;
        if z.iter().all(|v| *v == 0.0) {
            return State::zeros(self.dimension);
        }
        match self.field {
            Field::Normalized => {
                let norm = z.norm();
                -z / norm
            }
            Field::Linear { a } => -a * z,
            Field::Sqrt => z.map(|s| -s.signum() * s.abs().sqrt()),
            Field::X0 => {
                let (x1, x2) = (z[0], z[1]);
                let denom = x2.abs() + x1 * x1;
                State::from_vec(vec![-x1, -x2 / denom])
            }
        }
    }

    /// Analytic Jacobian of the field away from the equilibrium.
    pub(crate) fn field_jacobian(&self, x: &State) -> DMatrix<f64> {
        let n = self.dimension;
        let z = x - &self.equilibrium;
        match self.field {
            Field::Normalized => {
                let norm = z.norm();
                if norm == 0.0 {
                    return DMatrix::zeros(n, n);
                }
                let u = &z / norm;
                -(DMatrix::identity(n, n) - &u * u.transpose()) / norm
            }
            Field::Linear { a } => DMatrix::identity(n, n) * (-a),
            Field::Sqrt => {
                let s = z[0].abs();
                if s == 0.0 {
                    return DMatrix::zeros(1, 1);
                }
                DMatrix::from_element(1, 1, -0.5 / s.sqrt())
            }
            Field::X0 => {
                let (x1, x2) = (z[0], z[1]);
                let denom = x2.abs() + x1 * x1;
                if denom == 0.0 {
                    return DMatrix::zeros(2, 2);
                }
                let d2 = denom * denom;
                DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 2.0 * x1 * x2 / d2, -x1 * x1 / d2])
            }
        }
    }

    /// Lyapunov function value; exactly `0` at the equilibrium.
    pub fn eval_lyapunov(&self, x: &State) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.lyapunov_unchecked(x))
    }

    pub(crate) fn lyapunov_unchecked(&self, x: &State) -> f64 {
        let sq = (x - &self.equilibrium).norm_squared();
        match self.lyapunov {
            Lyapunov::HalfSquaredNorm => 0.5 * sq,
            Lyapunov::SquaredNorm => sq,
        }
    }

    pub fn lyapunov_gradient(&self, x: &State) -> Result<State> {
        self.check_point(x)?;
        let z = x - &self.equilibrium;
        Ok(match self.lyapunov {
            Lyapunov::HalfSquaredNorm => z,
            Lyapunov::SquaredNorm => 2.0 * z,
        })
    }

    /// Exact semiflow, when one is known and enabled. Negative times run the
    /// orbit backwards; the caller handles domain exit.
    pub(crate) fn closed_flow_unchecked(&self, x: &State, t: f64) -> Option<State> {
        if !self.has_closed_flow() {
            return None;
        }
        let z = x - &self.equilibrium;
        let moved = match self.field {
            Field::Normalized => {
                let norm = z.norm();
                if norm == 0.0 || t >= norm {
                    State::zeros(self.dimension)
                } else {
                    z * (1.0 - t / norm)
                }
            }
            Field::Linear { a } => z * (-a * t).exp(),
            Field::Sqrt => z.map(|s| {
                let root = s.abs().sqrt();
                if t >= 2.0 * root {
                    0.0
                } else {
                    let r = root - 0.5 * t;
                    s.signum() * r * r
                }
            }),
            Field::X0 => return None,
        };
        Some(&self.equilibrium + moved)
    }

    /// Exact finite arrival time at the equilibrium under the closed form,
    /// `None` when arrival is only asymptotic or no closed form is enabled.
    pub(crate) fn closed_arrival_time(&self, x: &State) -> Option<f64> {
        if !self.has_closed_flow() {
            return None;
        }
        let z = x - &self.equilibrium;
        match self.field {
            Field::Normalized => Some(z.norm()),
            Field::Sqrt => Some(2.0 * z[0].abs().sqrt()),
            Field::Linear { .. } | Field::X0 => {
                if z.iter().all(|v| *v == 0.0) {
                    Some(0.0)
                } else {
                    None
                }
            }
        }
    }
}

/// Key-value parameters accepted by [`make_builtin`].
pub type Params = BTreeMap<String, f64>;

/// Builds one of the built-in systems.
///
/// Recognized parameters: `a` (linear-scaled rate, default 1) and `rho_dom`
/// (normalized-bounded radius, default 2).
pub fn make_builtin(name: &str, n: usize, params: &Params) -> Result<SystemSpec> {
    let builtin: Builtin = name.parse()?;
    if n == 0 {
        return Err(Error::DimensionMismatch {
            context: builtin.to_string(),
            expected: 1,
            got: 0,
        });
    }
    let allowed: &[&str] = match builtin {
        Builtin::LinearScaled => &["a"],
        Builtin::NormalizedBounded => &["rho_dom"],
        _ => &[],
    };
    if let Some((key, value)) = params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        return Err(Error::InvalidParameter {
            name: key.clone(),
            value: *value,
            reason: format!("not a parameter of {builtin}"),
        });
    }
    let positive = |key: &str, default: f64| -> Result<f64> {
        let value = params.get(key).copied().unwrap_or(default);
        if value > 0.0 && value.is_finite() {
            Ok(value)
        } else {
            Err(Error::InvalidParameter {
                name: key.to_string(),
                value,
                reason: "must be positive and finite".to_string(),
            })
        }
    };
    let fixed_dimension = |expected: usize| -> Result<()> {
        if n == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                context: builtin.to_string(),
                expected,
                got: n,
            })
        }
    };

    let (field, lyapunov, domain, backward_complete) = match builtin {
        Builtin::Normalized => (
            Field::Normalized,
            Lyapunov::HalfSquaredNorm,
            Domain::FullSpace,
            true,
        ),
        Builtin::NormalizedBounded => (
            Field::Normalized,
            Lyapunov::HalfSquaredNorm,
            Domain::OpenBall {
                radius: positive("rho_dom", DEFAULT_BOUNDED_RADIUS)?,
            },
            false,
        ),
        Builtin::LinearScaled => (
            Field::Linear {
                a: positive("a", 1.0)?,
            },
            Lyapunov::HalfSquaredNorm,
            Domain::FullSpace,
            true,
        ),
        Builtin::SqrtScalar => {
            fixed_dimension(1)?;
            (Field::Sqrt, Lyapunov::HalfSquaredNorm, Domain::FullSpace, true)
        }
        Builtin::X0Plane => {
            fixed_dimension(2)?;
            (Field::X0, Lyapunov::SquaredNorm, Domain::FullSpace, true)
        }
    };

    Ok(SystemSpec {
        builtin,
        dimension: n,
        field,
        lyapunov,
        equilibrium: State::zeros(n),
        domain,
        backward_complete,
        closed_flow_enabled: true,
    })
}

/// Outcome of the sampled regularity checks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub samples: usize,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }
}

const PROBES_PER_DECADE: usize = 64;

/// Probes positivity of `V`, its decrease along the field and local Lipschitz
/// continuity of the field on deterministic samples.
///
/// Positivity or decrease failures are hard errors. Lipschitz probes that
/// look discontinuous only produce warnings.
pub fn validate(sys: &SystemSpec) -> Result<ValidationReport> {
    let n = sys.dimension();
    let max_scale = match sys.domain() {
        Domain::FullSpace => 10.0,
        Domain::OpenBall { radius } => 0.95 * radius,
    };
    let mut report = ValidationReport::default();
    let golden = 0.5 * (5f64.sqrt() - 1.0);

    for decade in -2..1 {
        let lo = 10f64.powi(decade);
        for k in 0..PROBES_PER_DECADE {
            let frac = (k as f64 + 0.5) / PROBES_PER_DECADE as f64;
            let scale = (lo * 10f64.powf(frac)).min(max_scale);
            // quasi-random direction from a golden-ratio sequence
            let dir = State::from_fn(n, |i, _| {
                let phase = ((k * (i + 1)) as f64 * golden + 0.1 * i as f64).fract();
                (2.0 * std::f64::consts::PI * phase).cos() + 0.25 * (i as f64 + 1.0) * phase
            });
            let dir = if dir.norm() > 0.0 {
                &dir / dir.norm()
            } else {
                State::from_element(n, 1.0 / (n as f64).sqrt())
            };
            let x = sys.equilibrium() + &dir * scale;
            report.samples += 1;

            let v = sys.lyapunov_unchecked(&x);
            if v.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                return Err(Error::InvalidConfig(format!(
                    "{}: V({:?}) = {v} is not positive",
                    sys.name(),
                    x.as_slice()
                )));
            }
            let f = sys.field_unchecked(&x);
            let vdot = sys.lyapunov_gradient(&x)?.dot(&f);
            if vdot >= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{}: V does not decrease at {:?} (dV/dt = {vdot})",
                    sys.name(),
                    x.as_slice()
                )));
            }

            // the ratio must stay bounded as the pair distance shrinks
            let perturb = State::from_fn(n, |i, _| if i % 2 == 0 { 1.0 } else { -0.5 });
            let perturb = &perturb / perturb.norm();
            let ratio_at = |delta: f64| {
                let y = &x + &perturb * (delta * scale);
                (sys.field_unchecked(&y) - &f).norm() / (delta * scale)
            };
            let coarse = ratio_at(1e-4);
            let fine = ratio_at(1e-6);
            if !fine.is_finite() || fine > 10.0 * coarse.max(1e-12) + 1e-9 {
                report.warnings.push(format!(
                    "{}: Lipschitz probe at {:?} grew from {coarse:.3e} to {fine:.3e}",
                    sys.name(),
                    x.as_slice()
                ));
            }
        }
    }
    for w in &report.warnings {
        log::warn!("{w}");
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> State {
        State::from_column_slice(xs)
    }

    fn none() -> Params {
        Params::new()
    }

    #[test]
    fn normalized_field_and_lyapunov() {
        let sys = make_builtin("normalized", 2, &none()).unwrap();
        let f = sys.eval_field(&v(&[3.0, 4.0])).unwrap();
        assert_abs_diff_eq!(f[0], -0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(f[1], -0.8, epsilon = 1e-15);
        assert_eq!(sys.eval_field(&v(&[0.0, 0.0])).unwrap(), v(&[0.0, 0.0]));
        assert_eq!(sys.eval_lyapunov(&v(&[3.0, 4.0])).unwrap(), 12.5);
        assert_eq!(sys.eval_lyapunov(&v(&[0.0, 0.0])).unwrap(), 0.0);
        assert!(sys.has_closed_flow());
        assert!(sys.backward_complete());
    }

    #[test]
    fn x0_plane_values() {
        let sys = make_builtin("x0-plane", 2, &none()).unwrap();
        let f = sys.eval_field(&v(&[1.0, 1.0])).unwrap();
        assert_eq!(f, v(&[-1.0, -0.5]));
        assert_eq!(sys.eval_lyapunov(&v(&[1.0, 1.0])).unwrap(), 2.0);
        assert!(!sys.has_closed_flow());
    }

    #[test]
    fn linear_scaled_closed_flow() {
        let mut p = none();
        p.insert("a".into(), 1.0);
        let sys = make_builtin("linear-scaled", 1, &p).unwrap();
        let x = sys.closed_flow_unchecked(&v(&[1.0]), 2f64.ln()).unwrap();
        assert_abs_diff_eq!(x[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            make_builtin("x0-plane", 3, &none()),
            Err(Error::DimensionMismatch {
                context: "x0-plane".into(),
                expected: 2,
                got: 3
            })
        );
        assert!(matches!(
            make_builtin("sqrt-scalar", 2, &none()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            make_builtin("nope", 2, &none()),
            Err(Error::UnknownSystem(_))
        ));
        let mut p = none();
        p.insert("a".into(), -1.0);
        assert!(matches!(
            make_builtin("linear-scaled", 2, &p),
            Err(Error::InvalidParameter { .. })
        ));
        let mut p = none();
        p.insert("rho_dom".into(), 0.0);
        assert!(matches!(
            make_builtin("normalized-bounded", 2, &p),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            make_builtin("normalized", 0, &none()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bounded_domain_rejects_outside_points() {
        let sys = make_builtin("normalized-bounded", 2, &none()).unwrap();
        assert!(!sys.backward_complete());
        assert!(matches!(
            sys.eval_field(&v(&[2.0, 0.0])),
            Err(Error::OutsideDomain { .. })
        ));
        assert!(sys.eval_lyapunov(&v(&[1.9, 0.0])).is_ok());
    }

    #[test]
    fn normalized_field_has_unit_speed() {
        let sys = make_builtin("normalized", 3, &none()).unwrap();
        for k in 1..50 {
            let t = k as f64 * 0.37;
            let x = v(&[t.sin() * t, t.cos() - 0.3, 0.1 * t]);
            let f = sys.eval_field(&x).unwrap();
            assert_abs_diff_eq!(f.norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn x0_field_continuous_across_horizontal_axis() {
        let sys = make_builtin("x0-plane", 2, &none()).unwrap();
        for x1 in [-2.0, -0.5, 0.1, 1.0, 3.0] {
            let above = sys.eval_field(&v(&[x1, 1e-12])).unwrap();
            let below = sys.eval_field(&v(&[x1, -1e-12])).unwrap();
            let on = sys.eval_field(&v(&[x1, 0.0])).unwrap();
            assert!((above[1] - on[1]).abs() < 1e-9);
            assert!((below[1] - on[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut p = none();
        p.insert("a".into(), 2.5);
        let systems = [
            (make_builtin("normalized", 3, &none()).unwrap(), v(&[0.4, -1.2, 0.7])),
            (make_builtin("linear-scaled", 2, &p).unwrap(), v(&[0.4, -1.2])),
            (make_builtin("sqrt-scalar", 1, &none()).unwrap(), v(&[0.8])),
            (make_builtin("x0-plane", 2, &none()).unwrap(), v(&[0.6, -0.3])),
        ];
        for (sys, x) in systems {
            let jac = sys.field_jacobian(&x);
            let h = 1e-6;
            for j in 0..sys.dimension() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let col = (sys.field_unchecked(&xp) - sys.field_unchecked(&xm)) / (2.0 * h);
                for i in 0..sys.dimension() {
                    assert!(
                        (jac[(i, j)] - col[i]).abs() < 1e-6,
                        "{} J[{i},{j}] = {} vs {}",
                        sys.name(),
                        jac[(i, j)],
                        col[i]
                    );
                }
            }
        }
    }

    #[test]
    fn builtins_validate() {
        let mut p = none();
        p.insert("a".into(), 0.7);
        let systems = vec![
            make_builtin("normalized", 1, &none()).unwrap(),
            make_builtin("normalized", 3, &none()).unwrap(),
            make_builtin("normalized-bounded", 2, &none()).unwrap(),
            make_builtin("linear-scaled", 4, &p).unwrap(),
            make_builtin("sqrt-scalar", 1, &none()).unwrap(),
            make_builtin("x0-plane", 2, &none()).unwrap(),
        ];
        for sys in systems {
            let report = validate(&sys).unwrap();
            assert_eq!(report.samples, 3 * PROBES_PER_DECADE);
            assert!(report.is_clean(), "{}: {:?}", sys.name(), report.warnings);
        }
    }

    #[test]
    fn names_round_trip() {
        for b in Builtin::ALL {
            assert_eq!(b.as_str().parse::<Builtin>().unwrap(), b);
        }
    }
}

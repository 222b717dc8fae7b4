//! Closed-form maps for the normalized field with `V = |x|^2 / 2`, `eps = 1/2`,
//! and the scalar power conjugacy between `x' = -a x` and `y' = -b y`.
//!
//! These are written out directly from their formulas and never call into
//! the flow or level-set machinery, so they serve as independent oracles.

use crate::error::{Error, Result};
use crate::systems::State;

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "r".into(),
            value: r,
            reason: "radius must be positive and finite".into(),
        })
    }
}

/// `tau'(x)` for the normalized field: `|x| - 1` outside the unit ball,
/// `ln(|x|^2)` inside.
pub fn example_a_tau(x_norm: f64) -> f64 {
    if x_norm >= 1.0 {
        x_norm - 1.0
    } else {
        (x_norm * x_norm).ln()
    }
}

/// `h_r(x) = r e^{tau'(x)} x / |x|`, `h_r(0) = 0`.
pub fn example_a_h(r: f64, x: &State) -> Result<State> {
    check_radius(r)?;
    let norm = x.norm();
    if norm == 0.0 {
        return Ok(State::zeros(x.len()));
    }
    Ok(x * (r * example_a_tau(norm).exp() / norm))
}

/// `alpha_r(y)`: `ln(|y| / r) + 1` for `|y| >= r`, `(|y| / r)^{1/2}` below.
pub fn example_a_alpha(r: f64, y: &State) -> Result<f64> {
    check_radius(r)?;
    let ratio = y.norm() / r;
    Ok(if ratio >= 1.0 {
        ratio.ln() + 1.0
    } else {
        ratio.sqrt()
    })
}

/// `h_r^{-1}(y) = alpha_r(y) y / |y|`, `h_r^{-1}(0) = 0`.
pub fn example_a_h_inverse(r: f64, y: &State) -> Result<State> {
    let alpha = example_a_alpha(r, y)?;
    let norm = y.norm();
    if norm == 0.0 {
        return Ok(State::zeros(y.len()));
    }
    Ok(y * (alpha / norm))
}

/// `gamma_r(s) = ln((s + r) / r)`.
pub fn example_a_gamma(r: f64, s: f64) -> Result<f64> {
    check_radius(r)?;
    Ok(((s + r) / r).ln())
}

/// The normalized semiflow `(1 - t / |x|) x` for `t <= |x|`, else `0`.
pub fn normalized_flow(x: &State, t: f64) -> State {
    let norm = x.norm();
    if norm == 0.0 || t >= norm {
        State::zeros(x.len())
    } else {
        x * (1.0 - t / norm)
    }
}

/// `|h_r(phi^t(h_r^{-1}(y)))|` for a start with `|y| = y_norm`.
pub fn transformed_norm(r: f64, y_norm: f64, t: f64) -> Result<f64> {
    let y = State::from_element(1, y_norm);
    let x = example_a_h_inverse(r, &y)?;
    Ok(example_a_h(r, &normalized_flow(&x, t))?.norm())
}

/// `|h_r^{-1}(e^{-t} h_r(x))|` for a start with `|x| = x_norm`.
pub fn reverse_transformed_norm(r: f64, x_norm: f64, t: f64) -> Result<f64> {
    let x = State::from_element(1, x_norm);
    let y = example_a_h(r, &x)? * (-t).exp();
    Ok(example_a_h_inverse(r, &y)?.norm())
}

/// `sgn(x) |x|^{b/a}`, which conjugates `x' = -a x` to `y' = -b y`.
/// Nonpositive rates give NaN.
pub fn scalar_power_map(a: f64, b: f64, x: f64) -> f64 {
    if !(a > 0.0 && b > 0.0) {
        return f64::NAN;
    }
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(b / a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> State {
        State::from_column_slice(xs)
    }

    #[test]
    fn h_and_alpha_examples() {
        let y = example_a_h(1.0, &v(&[2.0, 0.0])).unwrap();
        assert_abs_diff_eq!(y[0], std::f64::consts::E, epsilon = 1e-15);
        assert_eq!(y[1], 0.0);
        assert_eq!(example_a_alpha(1.0, &v(&[0.6, 0.8])).unwrap(), 1.0);
        assert_abs_diff_eq!(
            example_a_alpha(1.0, &v(&[0.0, 2.0])).unwrap(),
            1.0 + 2f64.ln(),
            epsilon = 1e-15
        );
        assert!(example_a_alpha(0.0, &v(&[1.0])).is_err());
        assert!(example_a_h(-1.0, &v(&[1.0])).is_err());
    }

    #[test]
    fn scalar_examples() {
        assert_eq!(scalar_power_map(1.0, 2.0, 4.0), 16.0);
        assert_eq!(scalar_power_map(3.0, 0.5, 0.0), 0.0);
        assert_eq!(scalar_power_map(2.0, 1.0, -9.0), -3.0);
        assert!(scalar_power_map(0.0, 1.0, 1.0).is_nan());
    }

    #[test]
    fn figure_curves_at_breakpoints() {
        let ln2 = 2f64.ln();
        assert_abs_diff_eq!(transformed_norm(1.0, 2.0, 0.0).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(transformed_norm(1.0, 2.0, ln2).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(transformed_norm(1.0, 2.0, ln2 + 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(reverse_transformed_norm(1.0, 2.0, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(reverse_transformed_norm(1.0, 2.0, 0.5).unwrap(), 1.5, epsilon = 1e-15);
    }
}

//! Time to reach a small ball around the origin for the x0-plane field,
//! measured at the level `V = radius^2`.

use semiconj_core::{make_builtin, IntegratorConfig, LevelContext, Params, State};

fn ball_time(ctx: &LevelContext, x: &[f64], radius: f64) -> f64 {
    ctx.forward_to_level(&State::from_column_slice(x), radius * radius)
        .unwrap()
        .time
}

#[test]
fn off_axis_delay_grows_as_ball_shrinks() {
    let sys = make_builtin("x0-plane", 2, &Params::new()).unwrap();
    let ctx = LevelContext::new(sys, 0.25, IntegratorConfig::numeric()).unwrap();
    let ratios: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&rho| ball_time(&ctx, &[0.05, 1.0], rho) / ball_time(&ctx, &[0.0, 1.0], rho))
        .collect();
    // x1 decays like e^{-t}, so the off-axis start needs about ln(0.05 / rho).
    assert!((ratios[1] - (0.05f64 / 1e-3).ln()).abs() < 0.1, "{ratios:?}");
    assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
}

#[test]
fn on_axis_arrival_is_unit_speed() {
    let sys = make_builtin("x0-plane", 2, &Params::new()).unwrap();
    let ctx = LevelContext::new(sys, 0.25, IntegratorConfig::numeric()).unwrap();
    let t = ball_time(&ctx, &[0.0, 1.0], 1e-3);
    assert!((t - (1.0 - 1e-3)).abs() < 1e-4, "{t}");
}

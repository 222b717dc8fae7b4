//! Deterministic direction sets on the unit sphere and sampled infima.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::roots::golden_section_min;
use crate::systems::State;

/// Direction sampling used by infima over spheres and level-set validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SamplerConfig {
    /// Directions sampled before refinement.
    pub directions: usize,
    /// Golden-section iterations along each refinement arc.
    pub refine_iterations: usize,
    /// Seed for the quasi-random directions used when n > 3.
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            directions: 128,
            refine_iterations: 40,
            seed: 0,
        }
    }
}

/// Number of directions checked for star-shapedness in dimension `n`.
pub fn star_check_count(n: usize) -> usize {
    if n <= 3 {
        256
    } else {
        1024
    }
}

/// `count` unit vectors in `R^n`: both signs for n = 1, equiangular for n = 2,
/// a Fibonacci lattice for n = 3 and seeded Gaussian directions beyond.
pub fn unit_directions(n: usize, count: usize, seed: u64) -> Vec<State> {
    match n {
        0 => Vec::new(),
        1 => vec![State::from_element(1, 1.0), State::from_element(1, -1.0)],
        2 => (0..count)
            .map(|k| {
                let angle = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                State::from_vec(vec![angle.cos(), angle.sin()])
            })
            .collect(),
        3 => {
            let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let ring = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden_angle * k as f64;
                    State::from_vec(vec![ring * phi.cos(), ring * phi.sin(), z])
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::with_capacity(count);
            while out.len() < count {
                let g = State::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                let norm = g.norm();
                if norm > 1e-12 {
                    out.push(g / norm);
                }
            }
            out
        }
    }
}

fn arc_point(u: &State, w: &State, theta: f64) -> State {
    (u * theta.cos() + w * theta.sin()).normalize()
}

/// Approximates `inf_{|u| = 1} f(u)` by evaluating every sampled direction
/// (in parallel, reduced in index order) and then running golden-section
/// searches along the arcs joining the incumbent to its two nearest
/// neighbours. Directions where `f` returns `None` are skipped.
pub fn minimize_on_sphere<F>(n: usize, cfg: &SamplerConfig, f: F) -> Option<(State, f64)>
where
    F: Fn(&State) -> Option<f64> + Sync,
{
    let dirs = unit_directions(n, cfg.directions, cfg.seed);
    let values: Vec<Option<f64>> = dirs.par_iter().map(&f).collect();

    let (best_idx, best_val) = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.filter(|x| !x.is_nan()).map(|x| (i, x)))
        .fold(None, |acc: Option<(usize, f64)>, (i, x)| match acc {
            Some((_, bx)) if bx <= x => acc,
            _ => Some((i, x)),
        })?;
    let incumbent = dirs[best_idx].clone();
    if n == 1 || cfg.refine_iterations == 0 {
        return Some((incumbent, best_val));
    }

    let mut neighbours: Vec<(usize, f64)> = dirs
        .iter()
        .enumerate()
        .filter(|(i, d)| *i != best_idx && d.dot(&incumbent) < 1.0 - 1e-15)
        .map(|(i, d)| (i, d.dot(&incumbent)))
        .collect();
    neighbours.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut best = (incumbent.clone(), best_val);
    for &(idx, cos) in neighbours.iter().take(2) {
        let v = &dirs[idx];
        let w = v - &incumbent * cos;
        let w_norm = w.norm();
        if w_norm < 1e-14 {
            continue;
        }
        let w = w / w_norm;
        let alpha = cos.clamp(-1.0, 1.0).acos();
        let objective = |theta: f64| f(&arc_point(&incumbent, &w, theta)).unwrap_or(f64::INFINITY);
        let (theta, value) = golden_section_min(-alpha, alpha, objective, cfg.refine_iterations);
        if value < best.1 {
            best = (arc_point(&incumbent, &w, theta), value);
        }
    }
    Some(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_are_unit_and_deterministic() {
        for n in 1..=5 {
            let a = unit_directions(n, 64, 7);
            let b = unit_directions(n, 64, 7);
            assert_eq!(a, b);
            for d in &a {
                assert!((d.norm() - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(unit_directions(1, 64, 0).len(), 2);
        assert_eq!(unit_directions(3, 128, 0).len(), 128);
    }

    #[test]
    fn seed_changes_high_dimensional_directions() {
        assert_ne!(unit_directions(4, 8, 0), unit_directions(4, 8, 1));
    }

    #[test]
    fn refinement_finds_off_grid_minimum() {
        let target = State::from_vec(vec![0.3f64.cos(), 0.3f64.sin()]);
        let cfg = SamplerConfig {
            directions: 16,
            ..Default::default()
        };
        let (u, val) = minimize_on_sphere(2, &cfg, |u| Some(1.0 - u.dot(&target))).unwrap();
        assert!(val < 1e-12);
        assert!((u - target).norm() < 1e-6);
    }

    #[test]
    fn skips_undefined_directions() {
        let cfg = SamplerConfig::default();
        let res = minimize_on_sphere(2, &cfg, |u| (u[0] > 0.5).then_some(u[1].abs()));
        let (u, val) = res.unwrap();
        assert!(u[0] > 0.5);
        assert!(val < 1e-9);
        assert!(minimize_on_sphere(2, &cfg, |_| None).is_none());
    }
}

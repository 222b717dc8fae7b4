//! Tables behind the figures. The first column is the abscissa (`t` or
//! `norm`), the rest are named series.

use rayon::prelude::*;

use crate::conjugacy::ConjugacyMap;
use crate::error::{Error, Result};
use crate::flow::{flow, trajectory, FlowStatus, IntegratorConfig};
use crate::systems::{make_builtin, Params, State};

const CURVE_POINTS: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct FigureTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FigureTable {
    /// Header line plus one line per row, every value at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

pub fn figdata(figure: u32) -> Result<FigureTable> {
    match figure {
        1 => fig1(),
        3 => fig3(),
        4 => fig4(),
        5 => fig5(),
        other => Err(Error::UnknownFigure(other)),
    }
}

fn fig1() -> Result<FigureTable> {
    let sys = make_builtin("x0-plane", 2, &Params::new())?;
    let cfg = IntegratorConfig::for_system(&sys);
    let ticks = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let starts: Vec<State> = ticks
        .iter()
        .flat_map(|&a| ticks.iter().map(move |&b| State::from_column_slice(&[a, b])))
        .collect();
    let grid = linspace(0.0, 4.0, CURVE_POINTS);
    let paths: Vec<Vec<(f64, State)>> = starts
        .par_iter()
        .map(|x| trajectory(&sys, x, &grid, &cfg))
        .collect::<Result<_>>()?;
    let mut columns = vec!["t".to_string()];
    for i in 0..starts.len() {
        columns.push(format!("p{i}_x1"));
        columns.push(format!("p{i}_x2"));
    }
    let rows = grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let mut row = vec![t];
            for path in &paths {
                row.push(path[k].1[0]);
                row.push(path[k].1[1]);
            }
            row
        })
        .collect();
    Ok(FigureTable { columns, rows })
}

fn fig3() -> Result<FigureTable> {
    let map = unit_map()?;
    let rows = (1..=CURVE_POINTS)
        .map(|k| {
            let norm = 0.01 * k as f64;
            let x = State::from_column_slice(&[norm, 0.0]);
            let tau = map.context().tau_prime(&x)?;
            Ok(vec![norm, tau, map.radius() * tau.exp()])
        })
        .collect::<Result<_>>()?;
    Ok(FigureTable {
        columns: vec!["norm".into(), "tau_prime".into(), "r_exp_tau_prime".into()],
        rows,
    })
}

fn unit_map() -> Result<ConjugacyMap> {
    let sys = make_builtin("normalized", 2, &Params::new())?;
    ConjugacyMap::with_defaults(sys, 0.5, 1.0)
}

fn fig4_with(map: &ConjugacyMap, t: f64) -> Result<f64> {
    let y = State::from_column_slice(&[2.0, 0.0]);
    let x = map.h_inverse(&y)?;
    let moved = flow(map.system(), &x, t, map.integrator())?;
    Ok(map.h_map(&moved.state)?.norm())
}

fn fig5_with(map: &ConjugacyMap, t: f64) -> Result<f64> {
    let x = State::from_column_slice(&[2.0, 0.0]);
    let y = map.h_map(&x)? * (-t).exp();
    Ok(map.h_inverse(&y)?.norm())
}

/// `|h(phi^t(h^{-1}(y)))|` for `r = 1`, `|y| = 2`.
pub fn fig4_value(t: f64) -> Result<f64> {
    fig4_with(&unit_map()?, t)
}

/// `|h^{-1}(e^{-t} h(x))|` for `r = 1`, `|x| = 2`.
pub fn fig5_value(t: f64) -> Result<f64> {
    fig5_with(&unit_map()?, t)
}

/// Time at which the orbit behind `fig4_value` reaches the origin.
pub fn fig4_zero_hit_time() -> Result<f64> {
    let map = unit_map()?;
    let x = map.h_inverse(&State::from_column_slice(&[2.0, 0.0]))?;
    let horizon = map.integrator().t_max;
    match flow(map.system(), &x, horizon, map.integrator())?.status {
        FlowStatus::ReachedEquilibrium { arrival_time } => Ok(arrival_time),
        _ => Err(Error::HorizonExceeded { t_max: horizon }),
    }
}

fn curve(end: f64, name: &str, f: impl Fn(&ConjugacyMap, f64) -> Result<f64> + Sync) -> Result<FigureTable> {
    let map = unit_map()?;
    let grid = linspace(0.0, end, CURVE_POINTS);
    let rows = grid
        .par_iter()
        .map(|&t| Ok(vec![t, f(&map, t)?]))
        .collect::<Result<_>>()?;
    Ok(FigureTable {
        columns: vec!["t".into(), name.into()],
        rows,
    })
}

fn fig4() -> Result<FigureTable> {
    curve(3.0, "norm", fig4_with)
}

fn fig5() -> Result<FigureTable> {
    curve(10.0, "norm", fig5_with)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_figure() {
        assert_eq!(figdata(2), Err(Error::UnknownFigure(2)));
    }

    #[test]
    fn fig3_anchor() {
        let table = figdata(3).unwrap();
        let row = &table.rows[99];
        assert!((row[0] - 1.0).abs() < 1e-15);
        assert!(row[1].abs() < 1e-9);
        assert_eq!(table.rows.len(), 400);
    }

    #[test]
    fn csv_contract() {
        let table = FigureTable {
            columns: vec!["t".into(), "v".into()],
            rows: vec![vec![0.1, 1.0 / 3.0]],
        };
        assert_eq!(
            table.to_csv(),
            "t,v\n1.0000000000000001e-1,3.3333333333333331e-1\n"
        );
    }
}

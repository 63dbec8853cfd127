//! Desk-scale brute-force minimization of the deviation functional on a
//! parameter grid, for validating the linear pipeline. The amplitudes enter
//! the model linearly, so they are profiled out exactly at every grid point.

use serde::Serialize;

use super::omega;
use crate::error::{Error, Result};
use crate::polyalg::Scalar;
use crate::recover::{recover_amplitudes, Generator};
use crate::signalkit::{Family, Signal};

/// Hard cap on the number of grid points the oracle will evaluate.
pub const ORACLE_BUDGET: u128 = 10_000_000;

/// Inclusive linspace over one parameter; `count == 1` pins the value to `lo`.
#[derive(Debug, Clone, Copy)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl ParamRange {
    pub fn new(lo: f64, hi: f64, count: usize) -> Self {
        assert!(count >= 1 && hi >= lo);
        Self { lo, hi, count }
    }

    pub fn fixed(value: f64) -> Self {
        Self {
            lo: value,
            hi: value,
            count: 1,
        }
    }

    fn value(&self, idx: usize) -> f64 {
        if self.count == 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * idx as f64 / (self.count - 1) as f64
        }
    }
}

/// Search grid: per-parameter ranges for each component, in the family's
/// natural parameter order (gaussian and chirp: alpha then beta; custom: the
/// generator coefficients themselves, low degree first).
#[derive(Debug, Clone)]
pub struct OracleGrid {
    pub family: Family,
    pub ranges1: Vec<ParamRange>,
    pub ranges2: Vec<ParamRange>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    /// Concatenated (component 1, component 2) parameters at the minimum.
    pub best_params: Vec<f64>,
    /// Functional value at the minimum.
    pub best_value: f64,
    /// Per-dimension grid index of the minimum.
    pub best_index: Vec<usize>,
    pub grid_points: u128,
}

fn generator_from_params<T: Scalar>(family: Family, params: &[f64]) -> Generator<T> {
    match family {
        // (alpha, beta) -> P = beta + 2 alpha t
        Family::Gaussian => Generator::polynomial(T::one(), &[params[1], 2.0 * params[0]]),
        // (alpha, beta) -> P = i (alpha + 2 beta t)
        Family::LfmChirp => {
            Generator::polynomial(T::from_re_im(0.0, 1.0), &[params[0], 2.0 * params[1]])
        }
        Family::Custom => Generator::polynomial(T::one(), params),
    }
}

fn expected_arity(family: Family, len: usize) -> Result<()> {
    match family {
        Family::Gaussian | Family::LfmChirp if len != 2 => Err(Error::InvalidSpec(format!(
            "family {} takes 2 parameters per component, got {len}",
            family.name()
        ))),
        _ => Ok(()),
    }
}

/// Exhaustively evaluate the deviation functional over the parameter grid,
/// profiling the amplitudes out at each point, and return the grid argmin.
pub fn brute_force_oracle<T: Scalar>(
    f: &Signal<T>,
    grid_spec: &OracleGrid,
) -> Result<OracleResult> {
    expected_arity(grid_spec.family, grid_spec.ranges1.len())?;
    expected_arity(grid_spec.family, grid_spec.ranges2.len())?;
    let ranges: Vec<ParamRange> = grid_spec
        .ranges1
        .iter()
        .chain(&grid_spec.ranges2)
        .copied()
        .collect();
    if ranges.is_empty() {
        return Err(Error::InvalidSpec("oracle needs at least one range".into()));
    }
    let points: u128 = ranges.iter().map(|r| r.count as u128).product();
    if points > ORACLE_BUDGET {
        return Err(Error::BudgetExceeded {
            points,
            budget: ORACLE_BUDGET,
        });
    }

    let split = grid_spec.ranges1.len();
    let mut index = vec![0usize; ranges.len()];
    let mut best: Option<(f64, Vec<f64>, Vec<usize>)> = None;
    loop {
        let params: Vec<f64> = ranges
            .iter()
            .zip(&index)
            .map(|(r, &i)| r.value(i))
            .collect();
        let g1 = generator_from_params::<T>(grid_spec.family, &params[..split]);
        let g2 = generator_from_params::<T>(grid_spec.family, &params[split..]);
        // overflowing or degenerate cells simply lose the argmin race
        if let Ok((a1, a2, _)) = recover_amplitudes(f, &g1, &g2) {
            if let Ok(value) = omega(f, &g1, &g2, a1, a2) {
                if best.as_ref().is_none_or(|(b, _, _)| value < *b) {
                    best = Some((value, params, index.clone()));
                }
            }
        }

        // mixed-radix increment, last dimension fastest
        let mut dim = ranges.len();
        loop {
            if dim == 0 {
                let (best_value, best_params, best_index) =
                    best.ok_or(Error::NonFinite("oracle sweep"))?;
                return Ok(OracleResult {
                    best_params,
                    best_value,
                    best_index,
                    grid_points: points,
                });
            }
            dim -= 1;
            index[dim] += 1;
            if index[dim] < ranges[dim].count {
                break;
            }
            index[dim] = 0;
        }
    }
}

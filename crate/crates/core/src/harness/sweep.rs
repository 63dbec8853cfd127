//! Monte-Carlo noise sweeps: regenerate noise per trial from a derived seed,
//! run the full pipeline, and aggregate best-permutation parameter errors.
//! Trials are independent and run in parallel; aggregation is order-free, so
//! reports are bit-identical for a fixed root seed.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use super::{best_permutation_error, separate, PipelineConfig};
use crate::error::{Error, Result};
use crate::polyalg::Scalar;
use crate::signalkit::{add_noise, generate, GeneratorSpec, Grid};

/// Error metric declaration, written at the top of every report.
pub const METRIC_NOTE: &str =
    "per-coefficient relative error max_j |p_hat_ij - p_ij| / max(1, |p_ij|), \
minimized over the component permutation; failure: pipeline error or error > 0.5";

/// A trial fails outright past this error (wrong basin, useless recovery).
pub const FAILURE_ERROR: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct LevelStats {
    pub sigma: f64,
    pub trials: usize,
    pub completed: usize,
    /// Median error over completed trials (NaN when none completed).
    pub median_err: f64,
    /// 90th percentile error over completed trials.
    pub p90_err: f64,
    /// Fraction of trials that errored in some stage or exceeded
    /// [`FAILURE_ERROR`].
    pub fail_rate: f64,
    /// (trial index, failing stage) for every pipeline error.
    pub failures: Vec<(usize, String)>,
    /// Wall-clock time spent on this level (not serialized to CSV).
    pub elapsed_ms: u128,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub levels: Vec<LevelStats>,
}

/// SplitMix64 finalizer; decorrelates nearby seeds.
fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-trial seed derived from the root seed, the level index and the trial
/// index; independent of execution order.
pub fn trial_seed(root: u64, level_idx: usize, trial: usize) -> u64 {
    const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
    let a = mix64(root ^ (level_idx as u64 + 1).wrapping_mul(GOLDEN));
    mix64(a ^ (trial as u64 + 1).wrapping_mul(GOLDEN))
}

/// Interpolated quantile of an ascending slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Sweep the pipeline over noise levels, `trials` independent noisy
/// realizations each. The plant is generated once; each trial perturbs it
/// with noise seeded by [`trial_seed`].
pub fn noise_sweep<T: Scalar>(
    plant: &GeneratorSpec,
    cfg: &PipelineConfig<T>,
    noise_levels: &[f64],
    trials: usize,
) -> Result<SweepReport> {
    if trials == 0 {
        return Err(Error::InvalidSpec("sweep needs at least one trial".into()));
    }
    cfg.validate()?;
    let grid = Grid::new(cfg.n)?;
    let (f_clean, _, _) = generate::<T>(plant, grid)?;

    let mut levels = Vec::with_capacity(noise_levels.len());
    for (level_idx, &sigma) in noise_levels.iter().enumerate() {
        let started = Instant::now();
        let outcomes: Vec<std::result::Result<f64, String>> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let noisy = add_noise(&f_clean, sigma, trial_seed(cfg.seed, level_idx, trial));
                match separate(&noisy, cfg) {
                    Ok(r) => {
                        let err = best_permutation_error(&r.p1, &r.p2, &plant.p1, &plant.p2);
                        if err.is_finite() {
                            Ok(err)
                        } else {
                            Err("non-finite error".to_string())
                        }
                    }
                    Err(e) => Err(e.stage().unwrap_or("pipeline").to_string()),
                }
            })
            .collect();

        let mut errors: Vec<f64> = Vec::with_capacity(trials);
        let mut failures = Vec::new();
        for (trial, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(err) => errors.push(err),
                Err(stage) => failures.push((trial, stage)),
            }
        }
        let completed = errors.len();
        let exceeded = errors.iter().filter(|&&e| e > FAILURE_ERROR).count();
        let fail_rate = (failures.len() + exceeded) as f64 / trials as f64;
        errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
        levels.push(LevelStats {
            sigma,
            trials,
            completed,
            median_err: quantile(&errors, 0.5),
            p90_err: quantile(&errors, 0.9),
            fail_rate,
            failures,
            elapsed_ms: started.elapsed().as_millis(),
        });
    }
    Ok(SweepReport { levels })
}

impl SweepReport {
    /// CSV rendering: a metric comment, a header, one row per level.
    /// Timing is deliberately excluded so reports are reproducible.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# metric: {METRIC_NOTE}\n"));
        out.push_str("level,median_err,p90_err,fail_rate,trials\n");
        for level in &self.levels {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                level.sigma, level.median_err, level.p90_err, level.fail_rate, level.trials
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

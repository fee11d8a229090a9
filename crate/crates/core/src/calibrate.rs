//! Calibration of the delay exponent `d`.
//!
//! The delay law leaves `d` free, so it has to be fixed empirically: sweep
//! candidate exponents, run the full generate-and-analyze pipeline for
//! each, and score the two-particle averages against the singlet
//! prediction `-cos 2(alpha - beta)`. The score for one exponent is the
//! worst absolute deviation over the setting pairs that collected enough
//! coincidences to make the comparison meaningful.

use crate::analysis::{count_coincidences, station_mean_outcome, AnalysisConfig};
use crate::eprb::{run_experiment, ExperimentConfig, SourceMode, StationConfig};
use crate::oracle::singlet_e;
use crate::stream::{RandomStream, StreamRole};
use crate::{Error, Result};

/// A setting pair enters the score only with at least this many
/// coincidences. Below that the estimate's granularity (2 / count) swamps
/// the tolerance being tested.
pub const MIN_PAIR_COINCIDENCES: u64 = 20;

/// An exponent needs at least this many scoreable pairs to be ranked.
pub const MIN_QUALIFYING_PAIRS: usize = 3;

/// Outcome of one exponent in the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DCalibrationPoint {
    pub d: f64,
    pub coincidences: u64,
    /// Pairs with at least [`MIN_PAIR_COINCIDENCES`] coincidences.
    pub qualifying_pairs: usize,
    /// Worst `|E_sim - E_singlet|` over qualifying pairs; `None` when too
    /// few pairs qualify.
    pub max_abs_err: Option<f64>,
    /// Whole-dataset mean outcomes per station.
    pub mean_x1: f64,
    pub mean_x2: f64,
}

/// Sweep result: per-exponent scores and the selected exponent, if any
/// exponent produced enough well-sampled pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DCalibration {
    pub points: Vec<DCalibrationPoint>,
    pub best: Option<DCalibrationPoint>,
}

/// Run the sweep: `events` pairs per exponent with `m` random angles per
/// station (drawn once from the setting streams and shared by every
/// exponent), analyzed at `(tau, window)`.
pub fn calibrate_d(
    events: u64,
    m: u32,
    d_values: &[f64],
    tau: f64,
    window: f64,
    seed: u64,
) -> Result<DCalibration> {
    if d_values.is_empty() {
        return Err(Error::invalid("need at least one exponent candidate"));
    }
    let mut s1 = RandomStream::for_role(seed, StreamRole::SettingsStation1);
    let mut s2 = RandomStream::for_role(seed, StreamRole::SettingsStation2);
    let angles1 = StationConfig::with_random_angles(m, 1.0, 0.0, &mut s1)?.angles_deg;
    let angles2 = StationConfig::with_random_angles(m, 1.0, 0.0, &mut s2)?.angles_deg;
    let analysis = AnalysisConfig::new(tau, window)?;

    let mut points = Vec::with_capacity(d_values.len());
    for &d in d_values {
        let cfg = ExperimentConfig {
            events,
            mode: SourceMode::SingletRandom,
            station1: StationConfig::new(angles1.clone(), 1.0, d)?,
            station2: StationConfig::new(angles2.clone(), 1.0, d)?,
            seed,
        };
        let (d1, d2) = run_experiment(&cfg)?;
        let table = count_coincidences(&d1, &d2, &analysis)?;
        let mut qualifying = 0usize;
        let mut worst = 0.0f64;
        for m1 in 1..=table.settings1() {
            for m2 in 1..=table.settings2() {
                let Some(stats) = table.stats(m1, m2) else {
                    continue;
                };
                if stats.coincidences < MIN_PAIR_COINCIDENCES {
                    continue;
                }
                qualifying += 1;
                let reference = singlet_e(
                    d1.angle_rad(m1),
                    d2.angle_rad(m2),
                );
                worst = worst.max((stats.e - reference).abs());
            }
        }
        points.push(DCalibrationPoint {
            d,
            coincidences: table.total(),
            qualifying_pairs: qualifying,
            max_abs_err: (qualifying >= MIN_QUALIFYING_PAIRS).then_some(worst),
            mean_x1: station_mean_outcome(&d1),
            mean_x2: station_mean_outcome(&d2),
        });
    }

    let best = points
        .iter()
        .filter(|p| p.max_abs_err.is_some())
        .min_by(|a, b| a.max_abs_err.unwrap().total_cmp(&b.max_abs_err.unwrap()))
        .copied();
    Ok(DCalibration { points, best })
}

//! Event-by-event generation of the two station datasets of an idealized
//! photon-pair experiment: source, setting selection, sign detection, and
//! angle-dependent random time delays.
//!
//! A pair leaves the source carrying polarization angles `(xi, xi + pi/2)`
//! for the two stations (or configured fixed angles). Each station draws a
//! setting index on its own stream, rotates by the selected angle `gamma`,
//! detects `x = sign(cos 2(p - gamma))`, and assigns a time-tag drawn
//! uniformly from `[0, T0 |sin 2(p - gamma)|^d]` on its delay stream, where
//! `p` is the incoming polarization.

use crate::dataset::{EventRecord, StationDataset};
use crate::stream::{RandomStream, StreamRole};
use crate::{Error, Result};
use std::f64::consts::{FRAC_PI_2, TAU};

/// How the source chooses the pair's polarization angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceMode {
    /// Fresh uniform `xi` in `[0, 2pi)` per pair; station 2 receives the
    /// orthogonal angle `xi + pi/2`.
    SingletRandom,
    /// The same configured angles (radians) for every pair; they need not
    /// be orthogonal.
    FixedPolarization { xi1: f64, xi2: f64 },
}

impl SourceMode {
    fn validate(&self) -> Result<()> {
        if let SourceMode::FixedPolarization { xi1, xi2 } = self {
            if !xi1.is_finite() || !xi2.is_finite() {
                return Err(Error::invalid("fixed polarization angles must be finite"));
            }
        }
        Ok(())
    }
}

/// Polarization angles carried by one pair, per station (radians).
pub fn emit_pair(mode: SourceMode, source: &mut RandomStream) -> (f64, f64) {
    match mode {
        SourceMode::SingletRandom => {
            let xi = source.next_angle(TAU);
            (xi, xi + FRAC_PI_2)
        }
        SourceMode::FixedPolarization { xi1, xi2 } => (xi1, xi2),
    }
}

/// Detector outcome for incoming polarization `p` and setting `gamma`:
/// `sign(cos 2(p - gamma))`, with the tie `cos = 0` mapped to +1 so replay
/// is deterministic.
pub fn detect(polarization: f64, gamma: f64) -> i8 {
    if (2.0 * (polarization - gamma)).cos() >= 0.0 {
        1
    } else {
        -1
    }
}

/// Time-tag for one detection: `u * T0 |sin 2(p - gamma)|^d` with `u` drawn
/// uniformly from `[0, 1)`. `d = 0` disables the angle dependence entirely
/// (`0^0 = 1`), so tags become uniform on `[0, T0)`.
pub fn delay(polarization: f64, gamma: f64, t0: f64, d: f64, delays: &mut RandomStream) -> f64 {
    let span = (2.0 * (polarization - gamma)).sin().abs().powf(d);
    delays.next_uniform() * t0 * span
}

/// Per-station configuration: the list of candidate rotation angles
/// (degrees, as they appear in config files), the time unit `T0`, and the
/// delay exponent `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationConfig {
    pub angles_deg: Vec<f64>,
    pub t0: f64,
    pub d: f64,
}

impl StationConfig {
    pub fn new(angles_deg: Vec<f64>, t0: f64, d: f64) -> Result<Self> {
        let cfg = StationConfig { angles_deg, t0, d };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.angles_deg.is_empty() {
            return Err(Error::invalid("station needs at least one setting angle"));
        }
        if self.angles_deg.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("setting angles must be finite"));
        }
        if !(self.t0 > 0.0) {
            return Err(Error::invalid(format!("t0 must be positive, got {}", self.t0)));
        }
        if !(self.d >= 0.0) {
            return Err(Error::invalid(format!(
                "delay exponent d must be non-negative, got {}",
                self.d
            )));
        }
        Ok(())
    }

    pub fn settings(&self) -> u32 {
        self.angles_deg.len() as u32
    }

    /// Fill a station with `m` uniform random angles from `[0, 360)`.
    pub fn with_random_angles(
        m: u32,
        t0: f64,
        d: f64,
        settings_stream: &mut RandomStream,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("m must be at least 1"));
        }
        let angles = (0..m).map(|_| settings_stream.next_angle(360.0)).collect();
        StationConfig::new(angles, t0, d)
    }
}

/// Everything one run of the experiment depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub events: u64,
    pub mode: SourceMode,
    pub station1: StationConfig,
    pub station2: StationConfig,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.events == 0 {
            return Err(Error::invalid("event count must be at least 1"));
        }
        self.mode.validate()?;
        self.station1.validate()?;
        self.station2.validate()?;
        if self.station1.t0 != self.station2.t0 {
            return Err(Error::invalid(format!(
                "stations must share the same time unit, got t0 = {} and {}",
                self.station1.t0, self.station2.t0
            )));
        }
        Ok(())
    }
}

/// Run the experiment, handing each generated record pair to `sink` in
/// event order. This is the streaming core; file writers hook in here so
/// memory stays bounded for long runs.
pub fn generate(
    cfg: &ExperimentConfig,
    mut sink: impl FnMut(&EventRecord, &EventRecord) -> Result<()>,
) -> Result<()> {
    cfg.validate()?;
    let mut source = RandomStream::for_role(cfg.seed, StreamRole::Source);
    let mut settings1 = RandomStream::for_role(cfg.seed, StreamRole::SettingsStation1);
    let mut settings2 = RandomStream::for_role(cfg.seed, StreamRole::SettingsStation2);
    let mut delays1 = RandomStream::for_role(cfg.seed, StreamRole::DelaysStation1);
    let mut delays2 = RandomStream::for_role(cfg.seed, StreamRole::DelaysStation2);

    let m1 = cfg.station1.settings();
    let m2 = cfg.station2.settings();
    for n in 1..=cfg.events {
        let (p1, p2) = emit_pair(cfg.mode, &mut source);
        let i1 = settings1.next_index(m1)?;
        let i2 = settings2.next_index(m2)?;
        let g1_deg = cfg.station1.angles_deg[(i1 - 1) as usize];
        let g2_deg = cfg.station2.angles_deg[(i2 - 1) as usize];
        let g1 = g1_deg.to_radians();
        let g2 = g2_deg.to_radians();
        let r1 = EventRecord {
            n,
            m: i1,
            x: detect(p1, g1),
            t: delay(p1, g1, cfg.station1.t0, cfg.station1.d, &mut delays1),
            gamma_deg: g1_deg,
        };
        let r2 = EventRecord {
            n,
            m: i2,
            x: detect(p2, g2),
            t: delay(p2, g2, cfg.station2.t0, cfg.station2.d, &mut delays2),
            gamma_deg: g2_deg,
        };
        sink(&r1, &r2)?;
    }
    Ok(())
}

/// Run the experiment and collect both station datasets in memory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(StationDataset, StationDataset)> {
    let mut d1 = StationDataset::for_config(1, &cfg.station1, cfg.seed, cfg.events);
    let mut d2 = StationDataset::for_config(2, &cfg.station2, cfg.seed, cfg.events);
    generate(cfg, |r1, r2| {
        d1.records.push(r1.clone());
        d2.records.push(r2.clone());
        Ok(())
    })?;
    Ok((d1, d2))
}

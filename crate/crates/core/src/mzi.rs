//! Two-machine interferometer network.
//!
//! Events enter channel 0 of the first beam splitter. The two outgoing
//! paths carry phase shifts `phi0` and `phi1`; the fold mirrors are
//! identity on messages (their phases are absorbed into `phi0`, `phi1`)
//! and route each path into the opposite input channel of the second beam
//! splitter. With that wiring the channel-0 output of the second machine
//! follows `cos^2((phi0 - phi1) / 2)`.

use crate::dlm::{Channel, DlmBeamSplitter};
use crate::message::PhaseMessage;
use crate::stream::{RandomStream, StreamRole};
use crate::{Error, Result};

/// How the input phase `psi0` is chosen for a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputPhasePolicy {
    /// Fixed `psi0` (radians) for every event.
    Fixed(f64),
    /// One uniform draw from `[0, 2pi)` at the start of the run. This is
    /// the mode used for interference sweeps: the machines build up phase
    /// memory across events, so the source must be coherent within a run.
    RandomPerRun,
    /// A fresh uniform draw per event. Kept for completeness: uncorrelated
    /// input phases leave nothing for the second machine's registers to
    /// interfere with, so both outputs settle at 1/2 regardless of the
    /// path phases.
    RandomPerEvent,
}

/// Detector counts after a run: `n0`, `n1` behind the first machine's two
/// outputs, `n2`, `n3` behind the second machine's.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MziCounts {
    pub n0: u64,
    pub n1: u64,
    pub n2: u64,
    pub n3: u64,
}

impl MziCounts {
    /// Fraction of events detected at `n2`.
    pub fn n2_fraction(&self) -> f64 {
        self.n2 as f64 / (self.n2 + self.n3) as f64
    }

    pub fn n0_fraction(&self) -> f64 {
        self.n0 as f64 / (self.n0 + self.n1) as f64
    }
}

/// Route taken by one event: which path it left the first machine on and
/// which detector it reached (`C0` = detector 2, `C1` = detector 3).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventRoute {
    pub path: Channel,
    pub detector: Channel,
}

/// The interferometer network: two machines, two path phases, four counters.
#[derive(Debug, Clone)]
pub struct MziNetwork {
    bs1: DlmBeamSplitter,
    bs2: DlmBeamSplitter,
    phi0: f64,
    phi1: f64,
    counts: MziCounts,
}

impl MziNetwork {
    pub fn new(alpha: f64, phi0: f64, phi1: f64) -> Result<Self> {
        if !phi0.is_finite() || !phi1.is_finite() {
            return Err(Error::invalid(format!(
                "path phases must be finite, got phi0={phi0}, phi1={phi1}"
            )));
        }
        Ok(MziNetwork {
            bs1: DlmBeamSplitter::new(alpha)?,
            bs2: DlmBeamSplitter::new(alpha)?,
            phi0,
            phi1,
            counts: MziCounts::default(),
        })
    }

    pub fn counts(&self) -> MziCounts {
        self.counts
    }

    /// Route one event through the network.
    pub fn process_event(
        &mut self,
        input: PhaseMessage,
        stream: &mut RandomStream,
    ) -> Result<EventRoute> {
        let (path, msg) = self.bs1.process(Channel::C0, input, stream)?;
        let (phase, bs2_in) = match path {
            Channel::C0 => {
                self.counts.n0 += 1;
                (self.phi0, Channel::C1) // paths cross at the mirrors
            }
            Channel::C1 => {
                self.counts.n1 += 1;
                (self.phi1, Channel::C0)
            }
        };
        let (detector, _) = self.bs2.process(bs2_in, msg.rotated(phase), stream)?;
        match detector {
            Channel::C0 => self.counts.n2 += 1,
            Channel::C1 => self.counts.n3 += 1,
        }
        Ok(EventRoute { path, detector })
    }
}

/// Run `events` single-photon events through a fresh network and return the
/// four detector counts. All events enter channel 0 of the first machine.
pub fn run_mzi(
    events: u64,
    phi0: f64,
    phi1: f64,
    policy: InputPhasePolicy,
    alpha: f64,
    seed: u64,
) -> Result<MziCounts> {
    run_mzi_traced(events, phi0, phi1, policy, alpha, seed, |_, _| {})
}

/// Like [`run_mzi`], invoking `on_event` with the 1-based event index and
/// the route of every event.
pub fn run_mzi_traced(
    events: u64,
    phi0: f64,
    phi1: f64,
    policy: InputPhasePolicy,
    alpha: f64,
    seed: u64,
    mut on_event: impl FnMut(u64, EventRoute),
) -> Result<MziCounts> {
    if events == 0 {
        return Err(Error::invalid("event count must be at least 1"));
    }
    if let InputPhasePolicy::Fixed(psi0) = policy {
        if !psi0.is_finite() {
            return Err(Error::invalid("fixed input phase must be finite"));
        }
    }
    let mut network = MziNetwork::new(alpha, phi0, phi1)?;
    let mut source = RandomStream::for_role(seed, StreamRole::Source);
    let mut emission = RandomStream::for_role(seed, StreamRole::DlmEmission);
    let run_phase = match policy {
        InputPhasePolicy::Fixed(psi0) => psi0,
        InputPhasePolicy::RandomPerRun => source.next_angle(std::f64::consts::TAU),
        InputPhasePolicy::RandomPerEvent => 0.0,
    };
    for n in 1..=events {
        let psi0 = if policy == InputPhasePolicy::RandomPerEvent {
            source.next_angle(std::f64::consts::TAU)
        } else {
            run_phase
        };
        let route = network.process_event(PhaseMessage::from_angle(psi0), &mut emission)?;
        on_event(n, route);
    }
    Ok(network.counts())
}

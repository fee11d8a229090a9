//! The learning machine that simulates a beam splitter one event at a time.
//!
//! The machine has three stages. Stage one stores the incoming message in
//! the register of the channel it arrived on and moves an internal
//! probability vector `x` toward that channel by an exponential moving
//! average with parameter `alpha`. Stage two combines the two registers and
//! `x` into a candidate output pair `(w, z)` whose squared norms always sum
//! to one. Stage three picks the output channel by comparing `|w|^2` with a
//! uniform random number and emits the renormalized candidate.

use crate::message::PhaseMessage;
use crate::stream::RandomStream;
use crate::{Error, Result};

/// Squared-norm floor below which a selected candidate is considered
/// degenerate (norm below 1e-9).
const DEGENERATE_NORM_SQ: f64 = 1e-18;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// One of the two channels of a beam splitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    C0,
    C1,
}

impl Channel {
    pub fn index(self) -> usize {
        match self {
            Channel::C0 => 0,
            Channel::C1 => 1,
        }
    }

    pub fn other(self) -> Channel {
        match self {
            Channel::C0 => Channel::C1,
            Channel::C1 => Channel::C0,
        }
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Candidate output messages before channel selection.
///
/// Whenever the machine state is valid, `|w|^2 + |z|^2 = 1`; the squared
/// norm of `w` is the probability of emitting on channel 0.
#[derive(Debug, Clone, Copy)]
pub struct CandidatePair {
    pub w: [f64; 2],
    pub z: [f64; 2],
}

impl CandidatePair {
    pub fn w_norm_sq(&self) -> f64 {
        self.w[0] * self.w[0] + self.w[1] * self.w[1]
    }

    pub fn z_norm_sq(&self) -> f64 {
        self.z[0] * self.z[0] + self.z[1] * self.z[1]
    }
}

/// Full mutable state of one beam-splitter machine.
#[derive(Debug, Clone)]
pub struct DlmBeamSplitter {
    alpha: f64,
    x: [f64; 2],
    registers: [PhaseMessage; 2],
    events_processed: u64,
}

impl DlmBeamSplitter {
    /// New machine with learning parameter `alpha` in (0, 1).
    ///
    /// Initial state: `x = (1/2, 1/2)`, both registers `(1, 0)`. Any valid
    /// initial state works; the transient decays like `alpha^n`.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!(
                "learning parameter alpha must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(DlmBeamSplitter {
            alpha,
            x: [0.5, 0.5],
            registers: [PhaseMessage::from_angle(0.0); 2],
            events_processed: 0,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Internal probability vector `(x0, x1)`.
    pub fn x(&self) -> [f64; 2] {
        self.x
    }

    pub fn register(&self, channel: Channel) -> PhaseMessage {
        self.registers[channel.index()]
    }

    pub fn events_processed(&self) -> u64 {
        self.events_processed
    }

    /// Stage one: store the message and update the probability vector.
    ///
    /// `x_k <- alpha * x_k + (1 - alpha)` on the hit channel and
    /// `x_j <- alpha * x_j` on the other, so `x0 + x1 = 1` is preserved.
    pub fn store_and_learn(&mut self, channel: Channel, y: PhaseMessage) {
        let k = channel.index();
        self.registers[k] = y;
        self.x[k] = self.alpha * self.x[k] + (1.0 - self.alpha);
        self.x[1 - k] *= self.alpha;
        self.events_processed += 1;
    }

    /// Stage two: combine registers and `x` into the candidate pair.
    pub fn transform(&self) -> CandidatePair {
        let r0 = self.x[0].sqrt();
        let r1 = self.x[1].sqrt();
        let (c0, s0) = (self.registers[0].y1(), self.registers[0].y2());
        let (c1, s1) = (self.registers[1].y1(), self.registers[1].y2());
        CandidatePair {
            w: [
                (c0 * r0 - s1 * r1) * FRAC_1_SQRT_2,
                (c1 * r1 + s0 * r0) * FRAC_1_SQRT_2,
            ],
            z: [
                (c1 * r1 - s0 * r0) * FRAC_1_SQRT_2,
                (c0 * r0 + s1 * r1) * FRAC_1_SQRT_2,
            ],
        }
    }

    /// Stage three: channel 0 if `|w|^2 > r`, channel 1 otherwise. The
    /// emitted message is the selected candidate renormalized to unit length.
    pub fn emit(pair: &CandidatePair, r: f64) -> Result<(Channel, PhaseMessage)> {
        let w_sq = pair.w_norm_sq();
        if w_sq > r {
            if w_sq < DEGENERATE_NORM_SQ {
                return Err(Error::DegenerateEmission { norm_sq: w_sq });
            }
            Ok((Channel::C0, PhaseMessage::normalized(pair.w[0], pair.w[1])))
        } else {
            let z_sq = pair.z_norm_sq();
            if z_sq < DEGENERATE_NORM_SQ {
                return Err(Error::DegenerateEmission { norm_sq: z_sq });
            }
            Ok((Channel::C1, PhaseMessage::normalized(pair.z[0], pair.z[1])))
        }
    }

    /// Process one event: store, transform, emit. Exactly one output event
    /// per input event.
    pub fn process(
        &mut self,
        channel: Channel,
        y: PhaseMessage,
        stream: &mut RandomStream,
    ) -> Result<(Channel, PhaseMessage)> {
        self.store_and_learn(channel, y);
        let pair = self.transform();
        Self::emit(&pair, stream.next_uniform())
    }
}

/// Closed-form value of the probability vector after a given event sequence:
/// `alpha^n * x0 + (1 - alpha) * sum_i alpha^(n-1-i) * v_{i+1}` with one-hot
/// event vectors `v`. Evaluated with explicit powers and compensated
/// summation so it serves as an independent check of the per-event update.
pub fn closed_form_x(x0: [f64; 2], events: &[Channel], alpha: f64) -> [f64; 2] {
    let n = events.len();
    let mut pow = 1.0; // alpha^(n-1-i), starting at i = n-1
    let mut sum = [0.0f64; 2];
    let mut comp = [0.0f64; 2]; // Kahan compensation
    for &ev in events.iter().rev() {
        let k = ev.index();
        let term = (1.0 - alpha) * pow;
        let y = term - comp[k];
        let t = sum[k] + y;
        comp[k] = (t - sum[k]) - y;
        sum[k] = t;
        pow *= alpha;
    }
    let lead = alpha.powi(n as i32);
    [lead * x0[0] + sum[0], lead * x0[1] + sum[1]]
}

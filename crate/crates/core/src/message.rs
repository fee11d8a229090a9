//! Phase messages passed between processing units.

use crate::{Error, Result};

/// Norm deviation above which an incoming message is rejected.
pub const MESSAGE_NORM_TOLERANCE: f64 = 1e-6;

/// A two-dimensional unit vector `(cos psi, sin psi)` carrying an event's
/// phase between processing units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMessage {
    y1: f64,
    y2: f64,
}

impl PhaseMessage {
    /// Build from raw components, rejecting vectors whose squared norm
    /// deviates from 1 by more than [`MESSAGE_NORM_TOLERANCE`].
    pub fn new(y1: f64, y2: f64) -> Result<Self> {
        let deviation = (y1 * y1 + y2 * y2 - 1.0).abs();
        if !deviation.is_finite() || deviation > MESSAGE_NORM_TOLERANCE {
            return Err(Error::InvalidMessage { deviation });
        }
        Ok(PhaseMessage { y1, y2 })
    }

    /// Message with phase `psi` (radians).
    pub fn from_angle(psi: f64) -> Self {
        PhaseMessage {
            y1: psi.cos(),
            y2: psi.sin(),
        }
    }

    /// Cosine component.
    pub fn y1(self) -> f64 {
        self.y1
    }

    /// Sine component.
    pub fn y2(self) -> f64 {
        self.y2
    }

    pub fn norm_sq(self) -> f64 {
        self.y1 * self.y1 + self.y2 * self.y2
    }

    /// Rotate the message by `phi` radians. This realizes a phase shifter:
    /// the carried phase advances by `phi` while the norm is preserved.
    pub fn rotated(self, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        PhaseMessage {
            y1: self.y1 * c - self.y2 * s,
            y2: self.y1 * s + self.y2 * c,
        }
    }

    /// Exact renormalization, used on emission.
    pub(crate) fn normalized(y1: f64, y2: f64) -> Self {
        let n = (y1 * y1 + y2 * y2).sqrt();
        PhaseMessage {
            y1: y1 / n,
            y2: y2 / n,
        }
    }
}

//! Closed-form reference predictions. Pure functions, no state; every
//! simulation acceptance check compares against these.

use crate::{Error, Result};
use std::f64::consts::{PI, SQRT_2, TAU};

/// Largest CHSH value a quantum system can reach.
pub const CHSH_QUANTUM_MAX: f64 = 2.0 * SQRT_2;

/// Largest CHSH value reachable with the sign-model correlation
/// [`bell_triangle_e`].
pub const CHSH_SIGN_MODEL_MAX: f64 = 2.0;

/// Input description for a single beam splitter: channel-0 event
/// probability and the two input phases (radians).
#[derive(Debug, Clone, Copy)]
pub struct BsInput {
    pub p0: f64,
    pub psi0: f64,
    pub psi1: f64,
}

impl BsInput {
    pub fn new(p0: f64, psi0: f64, psi1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(Error::invalid(format!("p0 must lie in [0, 1], got {p0}")));
        }
        if !psi0.is_finite() || !psi1.is_finite() {
            return Err(Error::invalid("input phases must be finite"));
        }
        Ok(BsInput { p0, psi0, psi1 })
    }
}

/// Detector intensities behind one beam splitter:
/// `I0 = (1 + 2 sqrt(p0 (1 - p0)) sin(psi0 - psi1)) / 2`, `I1 = 1 - I0`.
pub fn bs_intensities(input: &BsInput) -> (f64, f64) {
    let cross = 2.0 * (input.p0 * (1.0 - input.p0)).sqrt();
    let i0 = (1.0 + cross * (input.psi0 - input.psi1).sin()) / 2.0;
    (i0, 1.0 - i0)
}

/// Interferometer output probabilities
/// `(cos^2((phi0 - phi1) / 2), sin^2((phi0 - phi1) / 2))`.
pub fn mzi_probabilities(phi0: f64, phi1: f64) -> (f64, f64) {
    let half = (phi0 - phi1) / 2.0;
    let c = half.cos();
    let s = half.sin();
    (c * c, s * s)
}

/// Two-particle correlation of the singlet state: `-cos 2(alpha - beta)`.
pub fn singlet_e(alpha: f64, beta: f64) -> f64 {
    -(2.0 * (alpha - beta)).cos()
}

/// The CHSH combination `E(a,c) - E(a,d) + E(b,c) + E(b,d)`.
pub fn chsh_s(e: impl Fn(f64, f64) -> f64, a: f64, b: f64, c: f64, d: f64) -> f64 {
    e(a, c) - e(a, d) + e(b, c) + e(b, d)
}

/// Constant `2 sqrt 2`, the quantum CHSH bound.
pub fn chsh_quantum_max() -> f64 {
    CHSH_QUANTUM_MAX
}

/// Correlation of the plain sign model without any time-window selection:
/// the average of `sign(cos 2(xi - alpha)) * sign(-cos 2(xi - beta))` over
/// uniform `xi`. It is a triangle wave of period pi in `alpha - beta`,
/// equal to -1 at multiples of pi and +1 at odd multiples of pi/2:
/// `E = 2 c / pi - 1` with `c = |2(alpha - beta)| folded into [0, pi]`.
pub fn bell_triangle_e(alpha: f64, beta: f64) -> f64 {
    let mut c = (2.0 * (alpha - beta)).rem_euclid(TAU);
    if c > PI {
        c = TAU - c;
    }
    2.0 * c / PI - 1.0
}

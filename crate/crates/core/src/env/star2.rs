//! Integer observation encoding of the CartPoleStar2 variant.
//!
//! Each native component is clamped to a symmetric bound, mapped linearly onto
//! [-50, 50] and rounded half away from zero.

use super::Observation;

/// Native bounds: cart position (m), cart velocity (m/s), pole angle (rad),
/// pole angular velocity (rad/s). The velocity bounds are clamps; the native
/// velocities are unbounded.
pub const STAR2_BOUNDS: [f64; 4] = [4.8, 5.0, 0.418, 5.0];

const SCALE: f64 = 50.0;

pub fn normalize_star2(raw: &Observation) -> Observation {
    Observation(
        raw.values()
            .iter()
            .zip(STAR2_BOUNDS)
            .map(|(&v, bound)| (v.clamp(-bound, bound) / bound * SCALE).round() + 0.0)
            .collect(),
    )
}

/// Maps encoded integers back to native units. Only exact on the grid points.
pub fn denormalize_star2(encoded: &Observation) -> Observation {
    Observation(
        encoded
            .values()
            .iter()
            .zip(STAR2_BOUNDS)
            .map(|(&v, bound)| v / SCALE * bound)
            .collect(),
    )
}

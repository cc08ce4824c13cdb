//! Normalized transition shapes on `τ ∈ [0, 1]`, each rising from 0 to 1.

/// Minimum-jerk quintic `10τ³ − 15τ⁴ + 6τ⁵`.
pub fn min_jerk(tau: f64) -> f64 {
    let t = tau.clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

/// First derivative of [`min_jerk`], `30τ²(1 − τ)²`. Peaks at 1.875.
pub fn min_jerk_velocity(tau: f64) -> f64 {
    let t = tau.clamp(0.0, 1.0);
    30.0 * t * t * (1.0 - t) * (1.0 - t)
}

/// Second derivative of [`min_jerk`].
pub fn min_jerk_acceleration(tau: f64) -> f64 {
    let t = tau.clamp(0.0, 1.0);
    60.0 * t - 180.0 * t * t + 120.0 * t * t * t
}

/// Symmetric seven-segment jerk-limited profile.
///
/// Segments, in normalized time: jerk ramp `j`, constant acceleration `a`,
/// jerk ramp `j`, cruise `c`, then the mirror image, with `4j + 2a + c = 1`.
/// The jerk magnitude is solved so the displacement is exactly 1. Segments of
/// zero length are skipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SCurve {
    segments: [(f64, f64); 7],
}

impl SCurve {
    /// Smallest jerk-ramp fraction used when the move is fast.
    pub const MIN_RAMP: f64 = 1.0 / 24.0;
    /// Largest jerk-ramp fraction; at this value the cruise vanishes.
    pub const MAX_RAMP: f64 = 1.0 / 6.0;

    /// Profile with jerk ramps and constant-acceleration phases of equal
    /// length `ramp`; the cruise takes the remainder.
    pub fn with_ramp(ramp: f64) -> Self {
        let j = ramp.clamp(Self::MIN_RAMP, Self::MAX_RAMP);
        let a = j;
        let c = (1.0 - 4.0 * j - 2.0 * a).max(0.0);
        let peak_velocity = 1.0 / (2.0 * j + a + c);
        let jerk = peak_velocity / (j * (j + a));
        SCurve {
            segments: [
                (j, jerk),
                (a, 0.0),
                (j, -jerk),
                (c, 0.0),
                (j, -jerk),
                (a, 0.0),
                (j, jerk),
            ],
        }
    }

    /// Shape for a move of `distance` degrees in `motion_time` seconds whose
    /// cruise speed should be `v_max` where that is reachable.
    ///
    /// With ramp fraction `j`, the normalized peak velocity is `1 / (1 − 3j)`;
    /// matching it to `v_max` gives `j = (1 − r) / 3` with
    /// `r = distance / (motion_time · v_max)`. Slow moves saturate at
    /// [`Self::MAX_RAMP`] (no cruise), fast ones at [`Self::MIN_RAMP`].
    pub fn for_move(distance: f64, motion_time: f64, v_max: f64) -> Self {
        let r = if motion_time > 0.0 {
            distance.abs() / (motion_time * v_max)
        } else {
            1.0
        };
        Self::with_ramp((1.0 - r) / 3.0)
    }

    /// Position, velocity and acceleration at normalized time `tau`.
    pub fn state(&self, tau: f64) -> (f64, f64, f64) {
        if tau >= 1.0 {
            return (1.0, 0.0, 0.0);
        }
        let mut remaining = tau.max(0.0);
        let (mut p, mut v, mut a) = (0.0, 0.0, 0.0);
        for &(dur, jerk) in &self.segments {
            let dt = remaining.min(dur);
            p += v * dt + a * dt * dt / 2.0 + jerk * dt * dt * dt / 6.0;
            v += a * dt + jerk * dt * dt / 2.0;
            a += jerk * dt;
            remaining -= dt;
            if remaining <= 0.0 {
                break;
            }
        }
        (p, v, a)
    }

    pub fn position(&self, tau: f64) -> f64 {
        self.state(tau).0
    }

    pub fn peak_velocity(&self) -> f64 {
        self.state(0.5).1
    }
}

/// Linear ramp quantized to whole `step` increments toward the goal.
///
/// Returns the offset from the start, for a move of `delta` at normalized
/// time `tau`.
pub fn staircase(delta: f64, step: f64, tau: f64) -> f64 {
    if tau >= 1.0 {
        return delta;
    }
    let ideal = delta.abs() * tau.max(0.0);
    delta.signum() * step * (ideal / step).floor()
}

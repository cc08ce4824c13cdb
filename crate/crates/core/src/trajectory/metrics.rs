use serde::Serialize;
use thiserror::Error;

use super::SampledTrajectory;
use crate::decoder::JointTargets;

/// Half-width of the centered moving average used for jitter (window 5).
const JITTER_HALF_WINDOW: usize = 2;

/// Boundary offsets below this many sample periods count as on schedule.
const ON_GRID_SAMPLES: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MotionMetrics {
    /// Largest gap between a frame boundary's sample time and its scheduled
    /// cumulative time, seconds.
    pub timing_deviation: f64,
    /// Mean squared jerk over joints and samples, (deg/s³)².
    pub smoothness: f64,
    /// RMS residual after removing a centered 5-sample moving average, degrees.
    pub jitter: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("trajectory has {boundaries} frame boundaries but {scheduled} frames were scheduled")]
    LengthMismatch { boundaries: usize, scheduled: usize },
    #[error("frame {frame} has {found} joints, trajectory has {expected}")]
    JointMismatch {
        frame: usize,
        expected: usize,
        found: usize,
    },
    #[error("frame boundary {index} is past the end of the trajectory")]
    BoundaryOutOfRange { index: usize },
}

/// Scores a sampled trajectory against its schedule.
///
/// Jerk uses the third-order central difference
/// `(p[k+2] − 2p[k+1] + 2p[k−1] − p[k−2]) / 2h³`; both jerk and jitter are
/// evaluated on samples with two neighbours on each side and are zero for
/// trajectories shorter than five samples.
pub fn metrics(
    traj: &SampledTrajectory,
    scheduled: &[JointTargets],
) -> Result<MotionMetrics, MetricsError> {
    if traj.frame_boundaries.len() != scheduled.len() {
        return Err(MetricsError::LengthMismatch {
            boundaries: traj.frame_boundaries.len(),
            scheduled: scheduled.len(),
        });
    }
    let n = traj.joint_count();
    if let Some(t) = scheduled.iter().find(|t| t.angles.len() != n) {
        return Err(MetricsError::JointMismatch {
            frame: t.frame_index,
            expected: n,
            found: t.angles.len(),
        });
    }

    let mut timing_deviation = 0.0_f64;
    let mut elapsed = std::time::Duration::ZERO;
    for (&b, target) in traj.frame_boundaries.iter().zip(scheduled) {
        elapsed += target.duration;
        if b >= traj.len() {
            return Err(MetricsError::BoundaryOutOfRange { index: b });
        }
        // Measured in sample periods so that a boundary landing on its
        // scheduled grid point reads as exactly zero despite rounding in
        // `k / rate`.
        let off = (b as f64 - elapsed.as_secs_f64() * traj.sample_rate).abs();
        if off > ON_GRID_SAMPLES {
            timing_deviation = timing_deviation.max(off / traj.sample_rate);
        }
    }

    let (smoothness, jitter) = if traj.len() < 2 * JITTER_HALF_WINDOW + 1 || n == 0 {
        (0.0, 0.0)
    } else {
        let h = 1.0 / traj.sample_rate;
        let scale = 2.0 * h * h * h;
        let p = &traj.angles;
        let mut jerk_sq = 0.0;
        let mut resid_sq = 0.0;
        let mut count = 0usize;
        for k in JITTER_HALF_WINDOW..traj.len() - JITTER_HALF_WINDOW {
            #[allow(clippy::needless_range_loop)]
            for j in 0..n {
                let jerk =
                    (p[k + 2][j] - 2.0 * p[k + 1][j] + 2.0 * p[k - 1][j] - p[k - 2][j]) / scale;
                jerk_sq += jerk * jerk;
                let resid: f64 = (k - JITTER_HALF_WINDOW..=k + JITTER_HALF_WINDOW)
                    .map(|m| p[k][j] - p[m][j])
                    .sum::<f64>()
                    / (2 * JITTER_HALF_WINDOW + 1) as f64;
                resid_sq += resid * resid;
                count += 1;
            }
        }
        let count = count as f64;
        (jerk_sq / count, (resid_sq / count).sqrt())
    };

    Ok(MotionMetrics {
        timing_deviation,
        smoothness,
        jitter,
    })
}

//! Time-parameterized joint trajectories.
//!
//! Each frame's duration `T` covers a transition followed by a dwell at the
//! frame's targets. The planner samples the whole score on a uniform grid;
//! every frame boundary lands on a grid sample where the angles equal the
//! decoded targets exactly.

mod metrics;
pub mod profiles;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::decoder::JointTargets;
use profiles::{min_jerk, staircase, SCurve};

pub use metrics::{metrics, MetricsError, MotionMetrics};

/// Boundary times within this many samples of a grid point snap onto it.
const GRID_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProfileKind {
    /// Synchronized linear joint motion under a speed cap; all moving joints
    /// start and arrive together.
    VendorDefault,
    /// Fixed-angle staircase smoothed by a 3-sample moving average.
    LinearSmoothed,
    /// Quintic minimum-jerk transition over `ρ·T`.
    MinJerk,
    /// Seven-segment jerk-limited transition over `ρ·T`.
    SCurve,
}

impl ProfileKind {
    pub const ALL: [ProfileKind; 4] = [
        ProfileKind::VendorDefault,
        ProfileKind::LinearSmoothed,
        ProfileKind::MinJerk,
        ProfileKind::SCurve,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProfileKind::VendorDefault => "vendor_default",
            ProfileKind::LinearSmoothed => "linear_smoothed",
            ProfileKind::MinJerk => "min_jerk",
            ProfileKind::SCurve => "s_curve",
        }
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProfileKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProfileKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ConfigError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error(
        "unknown profile {0:?} (expected vendor_default, linear_smoothed, min_jerk or s_curve)"
    )]
    UnknownKind(String),
    #[error("v_max must be positive, got {0}")]
    VMax(f64),
    #[error("transition fraction must be in (0, 1], got {0}")]
    TransitionFraction(f64),
    #[error("step must be positive, got {0}")]
    Step(f64),
    #[error("sample rate must be positive, got {0}")]
    SampleRate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileConfig {
    pub kind: ProfileKind,
    /// Joint speed cap in degrees per second.
    pub v_max: f64,
    /// Fraction of each frame's duration spent moving (`ρ`).
    pub transition_fraction: f64,
    /// Staircase increment for [`ProfileKind::LinearSmoothed`], degrees.
    pub step_deg: f64,
    /// Hz.
    pub sample_rate: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            kind: ProfileKind::VendorDefault,
            v_max: 90.0,
            transition_fraction: 0.7,
            step_deg: 2.0,
            sample_rate: 100.0,
        }
    }
}

impl ProfileConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.v_max) {
            return Err(ConfigError::VMax(self.v_max));
        }
        if !(positive(self.transition_fraction) && self.transition_fraction <= 1.0) {
            return Err(ConfigError::TransitionFraction(self.transition_fraction));
        }
        if !positive(self.step_deg) {
            return Err(ConfigError::Step(self.step_deg));
        }
        if !positive(self.sample_rate) {
            return Err(ConfigError::SampleRate(self.sample_rate));
        }
        Ok(())
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.sample_rate
    }

    /// Motion time for a frame of `duration` seconds whose largest joint
    /// change is `max_delta` degrees.
    ///
    /// For the vendor profile this is `max_delta / v_max` and may exceed the
    /// duration; callers decide whether that is an error.
    pub fn motion_time(&self, max_delta: f64, duration: f64) -> f64 {
        match self.kind {
            ProfileKind::VendorDefault => max_delta / self.v_max,
            _ => self.transition_fraction * duration,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("nothing to plan: no frames")]
    NoTargets,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("frame {frame} has {found} joints, expected {expected}")]
    JointCount {
        frame: usize,
        expected: usize,
        found: usize,
    },
    #[error(
        "frame {frame}: moving at {v_max} deg/s needs {required_s:.3} s but the frame lasts {available_s:.3} s; raise v_max or lengthen T"
    )]
    DurationTooShort {
        frame: usize,
        required_s: f64,
        available_s: f64,
        v_max: f64,
    },
    #[error("frame {frame} is shorter than one sample period at {sample_rate} Hz")]
    FrameShorterThanSample { frame: usize, sample_rate: f64 },
}

/// Uniformly sampled joint angles.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrajectory {
    pub sample_rate: f64,
    /// `k / sample_rate` for `k = 0..len`.
    pub timestamps: Vec<f64>,
    /// One angle vector per sample, degrees.
    pub angles: Vec<Vec<f64>>,
    /// Sample index at which each frame's schedule ends.
    pub frame_boundaries: Vec<usize>,
}

impl SampledTrajectory {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn joint_count(&self) -> usize {
        self.angles.first().map_or(0, Vec::len)
    }

    pub fn joint_series(&self, joint: usize) -> Vec<f64> {
        self.angles.iter().map(|a| a[joint]).collect()
    }

    pub fn duration(&self) -> f64 {
        self.timestamps.last().copied().unwrap_or(0.0)
    }
}

/// Grid index of the last sample at or before `t` seconds.
fn grid_index(t: f64, rate: f64) -> usize {
    (t * rate + GRID_EPS).floor() as usize
}

/// Samples the transitions `start → targets[0] → targets[1] → …`.
///
/// Frame `i` owns the samples after the previous boundary up to and including
/// its own boundary, placed at the last grid sample not after the cumulative
/// duration. The motion takes `t_m` (see [`ProfileConfig::motion_time`],
/// capped at the frame's span on the grid) and the rest of the frame dwells
/// at the target.
pub fn plan(
    start: &[f64],
    targets: &[JointTargets],
    config: &ProfileConfig,
) -> Result<SampledTrajectory, PlanError> {
    config.validate()?;
    if targets.is_empty() {
        return Err(PlanError::NoTargets);
    }
    let n = start.len();
    if let Some(t) = targets.iter().find(|t| t.angles.len() != n) {
        return Err(PlanError::JointCount {
            frame: t.frame_index,
            expected: n,
            found: t.angles.len(),
        });
    }
    let rate = config.sample_rate;

    let mut boundaries = Vec::with_capacity(targets.len());
    let mut elapsed = std::time::Duration::ZERO;
    let mut prev_boundary = 0;
    for (i, target) in targets.iter().enumerate() {
        elapsed += target.duration;
        let b = grid_index(elapsed.as_secs_f64(), rate);
        if b <= prev_boundary {
            return Err(PlanError::FrameShorterThanSample {
                frame: i,
                sample_rate: rate,
            });
        }
        boundaries.push(b);
        prev_boundary = b;
    }

    let total = *boundaries.last().expect("nonempty") + 1;
    let timestamps: Vec<f64> = (0..total).map(|k| k as f64 / rate).collect();
    let mut angles = Vec::with_capacity(total);
    angles.push(start.to_vec());

    let mut from = start;
    let mut first = 0;
    for (i, target) in targets.iter().enumerate() {
        let last = boundaries[i];
        let to = target.angles.as_slice();
        let deltas: Vec<f64> = from.iter().zip(to).map(|(a, b)| b - a).collect();
        let max_delta = deltas.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
        let duration = target.duration_s();
        let span = (last - first) as f64 / rate;

        let mut motion = config.motion_time(max_delta, duration);
        if config.kind == ProfileKind::VendorDefault && motion > duration * (1.0 + 1e-12) {
            return Err(PlanError::DurationTooShort {
                frame: i,
                required_s: motion,
                available_s: duration,
                v_max: config.v_max,
            });
        }
        motion = motion.min(span);

        let shape = |delta: f64, tau: f64| -> f64 {
            match config.kind {
                ProfileKind::VendorDefault => delta * tau,
                ProfileKind::MinJerk => delta * min_jerk(tau),
                ProfileKind::SCurve => {
                    delta * SCurve::for_move(delta, motion, config.v_max).position(tau)
                }
                ProfileKind::LinearSmoothed => staircase(delta, config.step_deg, tau),
            }
        };

        for k in first + 1..=last {
            let local = (k - first) as f64 / rate;
            if motion <= 0.0 || local >= motion {
                angles.push(to.to_vec());
                continue;
            }
            let tau = local / motion;
            angles.push(
                from.iter()
                    .zip(&deltas)
                    .map(|(&q0, &d)| if d == 0.0 { q0 } else { q0 + shape(d, tau) })
                    .collect(),
            );
        }

        if config.kind == ProfileKind::LinearSmoothed {
            smooth_interior(&mut angles, first, last);
        }
        from = to;
        first = last;
    }

    Ok(SampledTrajectory {
        sample_rate: rate,
        timestamps,
        angles,
        frame_boundaries: boundaries,
    })
}

/// Centered 3-sample moving average over samples strictly between `first` and
/// `last`; the boundary samples keep their exact values.
fn smooth_interior(angles: &mut [Vec<f64>], first: usize, last: usize) {
    if last <= first + 1 {
        return;
    }
    let raw: Vec<Vec<f64>> = angles[first..=last].to_vec();
    for k in 1..raw.len() - 1 {
        let out = &mut angles[first + k];
        for (j, v) in out.iter_mut().enumerate() {
            *v = (raw[k - 1][j] + raw[k][j] + raw[k + 1][j]) / 3.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn target(angles: &[f64], secs: f64, index: usize) -> JointTargets {
        JointTargets {
            angles: angles.to_vec(),
            frame_index: index,
            duration: Duration::from_secs_f64(secs),
        }
    }

    fn config(kind: ProfileKind, rate: f64) -> ProfileConfig {
        ProfileConfig {
            kind,
            sample_rate: rate,
            ..ProfileConfig::default()
        }
    }

    #[test]
    fn zero_motion_is_constant() {
        for kind in ProfileKind::ALL {
            let traj = plan(
                &[10.0, -5.0],
                &[target(&[10.0, -5.0], 1.0, 0)],
                &config(kind, 100.0),
            )
            .unwrap();
            assert_eq!(traj.len(), 101);
            assert!(traj.angles.iter().all(|a| a == &[10.0, -5.0]), "{kind}");
        }
    }

    #[test]
    fn vendor_two_joint_timing() {
        let traj = plan(
            &[0.0, 0.0],
            &[target(&[90.0, 45.0], 2.0, 0)],
            &config(ProfileKind::VendorDefault, 100.0),
        )
        .unwrap();
        // t_m = 90 / 90 = 1 s; both joints arrive at sample 100.
        assert_eq!(traj.angles[100], [90.0, 45.0]);
        assert!(traj.angles[99][0] < 90.0 && traj.angles[99][1] < 45.0);
        // Joint 2 moves at 45 deg/s.
        assert!((traj.angles[50][1] - 22.5).abs() < 1e-12);
        assert!((traj.angles[51][1] - traj.angles[50][1] - 0.45).abs() < 1e-12);
        assert_eq!(traj.frame_boundaries, [200]);
    }

    #[test]
    fn vendor_too_slow() {
        let err = plan(
            &[0.0],
            &[target(&[175.0], 1.0, 0)],
            &config(ProfileKind::VendorDefault, 100.0),
        )
        .unwrap_err();
        assert!(matches!(err, PlanError::DurationTooShort { frame: 0, .. }));
    }

    #[test]
    fn boundaries_exact_for_every_profile() {
        let targets = [
            target(&[45.0, -90.0, 0.0], 2.0, 0),
            target(&[-45.0, 90.0, 175.0], 2.5, 1),
            target(&[0.0, 0.0, 0.0], 3.0, 2),
        ];
        for kind in ProfileKind::ALL {
            let mut cfg = config(kind, 250.0);
            cfg.v_max = 120.0;
            let traj = plan(&[0.0; 3], &targets, &cfg).unwrap();
            assert_eq!(traj.frame_boundaries, [500, 1125, 1875]);
            for (b, t) in traj.frame_boundaries.iter().zip(&targets) {
                assert_eq!(traj.angles[*b], t.angles, "{kind}");
            }
            assert_eq!(traj.duration(), 7.5);
        }
    }

    #[test]
    fn off_grid_durations_snap_down() {
        let traj = plan(
            &[0.0],
            &[target(&[10.0], 0.255, 0), target(&[0.0], 0.255, 1)],
            &config(ProfileKind::MinJerk, 100.0),
        )
        .unwrap();
        assert_eq!(traj.frame_boundaries, [25, 51]);
        assert_eq!(traj.angles[25], [10.0]);
        assert_eq!(traj.angles[51], [0.0]);
    }

    #[test]
    fn frame_shorter_than_sample() {
        let err = plan(
            &[0.0],
            &[target(&[0.0], 1.0, 0), target(&[0.0], 0.001, 1)],
            &config(ProfileKind::MinJerk, 100.0),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            PlanError::FrameShorterThanSample { frame: 1, .. }
        ));
    }

    #[test]
    fn rejects_bad_input() {
        let cfg = ProfileConfig::default();
        assert_eq!(plan(&[0.0], &[], &cfg), Err(PlanError::NoTargets));
        assert!(matches!(
            plan(&[0.0], &[target(&[0.0, 1.0], 1.0, 0)], &cfg),
            Err(PlanError::JointCount { .. })
        ));
        let bad = ProfileConfig {
            transition_fraction: 0.0,
            ..cfg
        };
        assert!(matches!(
            plan(&[0.0], &[target(&[0.0], 1.0, 0)], &bad),
            Err(PlanError::Config(ConfigError::TransitionFraction(_)))
        ));
    }

    #[test]
    fn min_jerk_dwell_starts_at_rho() {
        let traj = plan(
            &[0.0],
            &[target(&[90.0], 2.0, 0)],
            &config(ProfileKind::MinJerk, 100.0),
        )
        .unwrap();
        // rho = 0.7 -> motion ends at 1.4 s.
        assert_eq!(traj.angles[140], [90.0]);
        assert!(traj.angles[139][0] < 90.0);
        assert!((traj.angles[70][0] - 45.0).abs() < 1e-12);
    }

    #[test]
    fn profile_kind_names() {
        for k in ProfileKind::ALL {
            assert_eq!(k.name().parse::<ProfileKind>(), Ok(k));
        }
        assert!("cubic".parse::<ProfileKind>().is_err());
    }
}

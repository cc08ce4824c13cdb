//! Frame decoding: symbol lookup, hold resolution, clipping and coupling
//! compensation between a driver and a driven joint.

use std::time::Duration;

use thiserror::Error;

use crate::notation::{Codebook, Frame, MotionFlag, Score};

/// Commanded angles for one frame, in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTargets {
    pub angles: Vec<f64>,
    pub frame_index: usize,
    pub duration: Duration,
}

impl JointTargets {
    pub fn duration_s(&self) -> f64 {
        self.duration.as_secs_f64()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CouplingError {
    #[error("kappa must be finite")]
    NonFinite,
    #[error("driver and driven joint must differ")]
    SameJoint,
    #[error("joint s{index} is out of range for {servo_count} servos", index = .index + 1)]
    OutOfRange { index: usize, servo_count: usize },
}

/// Linear static coupling: the driven joint's effective angle is its
/// commanded angle plus `kappa` times the driver's commanded angle.
///
/// Indices are 0-based (`driver = 4` is servo s5). With `kappa == 0` the
/// model is inactive and the indices are not checked against the servo count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingModel {
    pub kappa: f64,
    pub driver: usize,
    pub driven: usize,
}

impl Default for CouplingModel {
    fn default() -> Self {
        CouplingModel {
            kappa: 0.0,
            driver: 4,
            driven: 5,
        }
    }
}

impl CouplingModel {
    pub fn is_active(&self) -> bool {
        self.kappa != 0.0
    }

    pub fn validate(&self, servo_count: usize) -> Result<(), CouplingError> {
        if !self.kappa.is_finite() {
            return Err(CouplingError::NonFinite);
        }
        if self.driver == self.driven {
            return Err(CouplingError::SameJoint);
        }
        if self.is_active() {
            for index in [self.driver, self.driven] {
                if index >= servo_count {
                    return Err(CouplingError::OutOfRange { index, servo_count });
                }
            }
        }
        Ok(())
    }

    /// Command for the driven joint so that its effective angle hits `desired`.
    pub fn compensate(&self, desired: f64, driver_command: f64) -> f64 {
        desired - self.kappa * driver_command
    }

    /// Angle the driven joint actually reaches for the given commands.
    pub fn effective(&self, driven_command: f64, driver_command: f64) -> f64 {
        driven_command + self.kappa * driver_command
    }
}

/// Resolves one frame into commanded angles.
///
/// Held joints keep `prev` (or `home` when there is no previous frame);
/// dynamic joints take the clipped codebook angle. When the coupling is active
/// and the driven joint is dynamic, its command is compensated for the
/// driver's command and clipped again. A held driven joint is never changed.
pub fn decode_frame(
    frame: &Frame,
    frame_index: usize,
    prev: Option<&JointTargets>,
    codebook: &Codebook,
    coupling: &CouplingModel,
    home: &[f64],
) -> JointTargets {
    let base = prev.map_or(home, |p| p.angles.as_slice());
    let mut angles: Vec<f64> = frame
        .symbols
        .iter()
        .zip(&frame.flags)
        .enumerate()
        .map(|(j, (&symbol, &flag))| match flag {
            MotionFlag::Hold => base.get(j).copied().unwrap_or(0.0),
            MotionFlag::Dynamic => codebook
                .lookup(symbol)
                .expect("frame symbols are validated against the codebook"),
        })
        .collect();
    if coupling.is_active() && frame.flags.get(coupling.driven) == Some(&MotionFlag::Dynamic) {
        let desired = angles[coupling.driven];
        let driver = angles[coupling.driver];
        angles[coupling.driven] = codebook.clip(coupling.compensate(desired, driver));
    }
    JointTargets {
        angles,
        frame_index,
        duration: frame.duration,
    }
}

/// Decodes every frame in order, threading the previous targets through.
///
/// `home` must have `score.servo_count` entries; missing entries read as 0.
pub fn decode_score(score: &Score, coupling: &CouplingModel, home: &[f64]) -> Vec<JointTargets> {
    let mut out: Vec<JointTargets> = Vec::with_capacity(score.frames.len());
    for (i, frame) in score.frames.iter().enumerate() {
        let next = decode_frame(frame, i, out.last(), &score.codebook, coupling, home);
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notation::{default_codebook, parse_score, Symbol};

    fn frame(symbols: &str, flags: &str) -> Frame {
        Frame {
            symbols: symbols.chars().map(|c| Symbol::new(c).unwrap()).collect(),
            flags: flags
                .chars()
                .map(|c| MotionFlag::from_char(c).unwrap())
                .collect(),
            duration: Duration::from_secs(1),
            label: None,
        }
    }

    #[test]
    fn single_frame_angles() {
        let t = decode_frame(
            &frame("ABHHAD", "DDDDDD"),
            0,
            None,
            &default_codebook(),
            &CouplingModel::default(),
            &[0.0; 6],
        );
        assert_eq!(t.angles, [0.0, 45.0, -45.0, -45.0, 0.0, 135.0]);
    }

    #[test]
    fn hold_uses_prev_then_home() {
        let cb = default_codebook();
        let prev = JointTargets {
            angles: vec![10.0; 6],
            frame_index: 0,
            duration: Duration::from_secs(1),
        };
        let held = frame("BBBBBB", "HHHHHH");
        let c = CouplingModel::default();
        assert_eq!(
            decode_frame(&held, 1, Some(&prev), &cb, &c, &[0.0; 6]).angles,
            [10.0; 6]
        );
        assert_eq!(
            decode_frame(&held, 0, None, &cb, &c, &[3.0; 6]).angles,
            [3.0; 6]
        );
    }

    #[test]
    fn compensation_algebra() {
        // s5 commanded 40, s6 desired 90, kappa 0.5.
        let cb = Codebook::new(vec![0.0, 40.0, 90.0], 175.0).unwrap();
        let c = CouplingModel {
            kappa: 0.5,
            ..CouplingModel::default()
        };
        let t = decode_frame(&frame("AAAABC", "DDDDDD"), 0, None, &cb, &c, &[0.0; 6]);
        assert_eq!(t.angles[5], 70.0);
        assert_eq!(c.effective(t.angles[5], t.angles[4]), 90.0);
    }

    #[test]
    fn clipped_compensation_error_is_the_clipped_amount() {
        let cb = Codebook::new(vec![0.0, 170.0, -170.0], 175.0).unwrap();
        let c = CouplingModel {
            kappa: 1.0,
            ..CouplingModel::default()
        };
        // desired s6 = 170, s5 = -170 -> wants 340, clipped to 175.
        let t = decode_frame(&frame("AAAACB", "DDDDDD"), 0, None, &cb, &c, &[0.0; 6]);
        assert_eq!(t.angles[5], 175.0);
        let err = 170.0 - c.effective(t.angles[5], t.angles[4]);
        assert_eq!(err, 340.0 - 175.0);
    }

    #[test]
    fn held_driven_joint_is_not_compensated() {
        let cb = default_codebook();
        let c = CouplingModel {
            kappa: 0.5,
            ..CouplingModel::default()
        };
        let prev = JointTargets {
            angles: vec![0.0, 0.0, 0.0, 0.0, 0.0, 20.0],
            frame_index: 0,
            duration: Duration::from_secs(1),
        };
        let t = decode_frame(
            &frame("AAAACA", "DDDDDH"),
            1,
            Some(&prev),
            &cb,
            &c,
            &[0.0; 6],
        );
        assert_eq!(t.angles[5], 20.0);
    }

    #[test]
    fn kappa_zero_is_identity() {
        let score = parse_score(
            "ropera 1\nservos 6\nframe S=ABCDEF M=DDDDDD T=1\nframe S=GHIABC M=DHDHDH T=1",
        )
        .unwrap();
        let off = decode_score(&score, &CouplingModel::default(), &[0.0; 6]);
        let zero = CouplingModel {
            kappa: 0.0,
            driver: 0,
            driven: 1,
        };
        assert_eq!(decode_score(&score, &zero, &[0.0; 6]), off);
    }

    #[test]
    fn decode_score_folds_holds() {
        let score =
            parse_score("ropera 1\nservos 3\nframe S=BCD M=DDD T=1\nframe S=AAA M=HHH T=0.5")
                .unwrap();
        let targets = decode_score(&score, &CouplingModel::default(), &[0.0; 3]);
        assert_eq!(targets.len(), 2);
        assert_eq!(targets[0].angles, targets[1].angles);
        assert_eq!(targets[1].frame_index, 1);
        assert_eq!(targets[1].duration, Duration::from_millis(500));
    }

    #[test]
    fn coupling_validation() {
        assert!(CouplingModel::default().validate(1).is_ok());
        let active = CouplingModel {
            kappa: 0.1,
            ..CouplingModel::default()
        };
        assert!(active.validate(6).is_ok());
        assert!(matches!(
            active.validate(5),
            Err(CouplingError::OutOfRange { .. })
        ));
        let same = CouplingModel {
            driver: 2,
            driven: 2,
            ..active
        };
        assert_eq!(same.validate(6), Err(CouplingError::SameJoint));
    }
}

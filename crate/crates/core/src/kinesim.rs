//! Forward kinematics of a serial arm described by standard
//! Denavit–Hartenberg rows, evaluated along sampled trajectories.

use nalgebra::{Isometry3, Point3, Translation3, UnitQuaternion, Vector3};
use thiserror::Error;

use crate::notation::tokenize;
use crate::trajectory::SampledTrajectory;

/// One link in standard DH convention:
/// `Rz(θ + theta_offset) · Tz(d) · Tx(a) · Rx(alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhRow {
    /// mm
    pub a: f64,
    /// rad
    pub alpha: f64,
    /// mm
    pub d: f64,
    /// rad
    pub theta_offset: f64,
}

impl DhRow {
    fn transform(&self, theta: f64) -> Isometry3<f64> {
        let rz = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), theta + self.theta_offset);
        let rx = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), self.alpha);
        Isometry3::from_parts(Translation3::identity(), rz)
            * Isometry3::from_parts(Translation3::new(self.a, 0.0, self.d), rx)
    }
}

/// A point fixed to a link frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub name: String,
    /// 0 is the base frame; `k` is the frame after joint `k`.
    pub link: usize,
    /// mm, in the link frame.
    pub offset: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicChain {
    pub joints: Vec<DhRow>,
    pub markers: Vec<Marker>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinError {
    #[error("expected {expected} joint angles, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("chain file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid chain: {0}")]
    Invalid(String),
}

/// Default chain text; see [`KinematicChain::parse`] for the format.
pub const DEFAULT_CHAIN: &str = include_str!("../assets/chain.dh");

impl Default for KinematicChain {
    /// Desktop six-axis arm of roughly 280 mm reach. The geometry is a
    /// plausible stand-in, not a measured calibration.
    fn default() -> Self {
        KinematicChain::parse(DEFAULT_CHAIN).expect("bundled chain parses")
    }
}

impl KinematicChain {
    /// Reads a chain description.
    ///
    /// ```text
    /// # one line per joint, base to tip; angles in degrees, lengths in mm
    /// joint a=0 alpha=90 d=131.22 offset=0
    /// # markers: name, link frame (0 = base), offset in that frame
    /// marker tip link=6 at=20,0,25
    /// ```
    pub fn parse(text: &str) -> Result<Self, KinError> {
        let mut joints = Vec::new();
        let mut markers = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let err = |message: String| KinError::Parse {
                line: i + 1,
                message,
            };
            let tokens = tokenize(line).map_err(|_| err("unterminated quote".into()))?;
            let Some((head, args)) = tokens.split_first() else {
                continue;
            };
            match head.text.as_str() {
                "joint" => {
                    let mut row = DhRow {
                        a: 0.0,
                        alpha: 0.0,
                        d: 0.0,
                        theta_offset: 0.0,
                    };
                    for tok in args {
                        let (key, value) = tok.key_value().ok_or_else(|| {
                            err(format!("expected key=value, got {:?}", tok.text))
                        })?;
                        let v = value
                            .parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| err(format!("bad number {value:?}")))?;
                        match key {
                            "a" => row.a = v,
                            "alpha" => row.alpha = v.to_radians(),
                            "d" => row.d = v,
                            "offset" => row.theta_offset = v.to_radians(),
                            other => return Err(err(format!("unknown joint key {other:?}"))),
                        }
                    }
                    joints.push(row);
                }
                "marker" => {
                    let (name, rest) = args
                        .split_first()
                        .ok_or_else(|| err("marker needs a name".into()))?;
                    let mut link = None;
                    let mut offset = [0.0; 3];
                    for tok in rest {
                        match tok.key_value() {
                            Some(("link", v)) => {
                                link = Some(
                                    v.parse::<usize>()
                                        .map_err(|_| err(format!("bad link {v:?}")))?,
                                )
                            }
                            Some(("at", v)) => {
                                let parts: Vec<f64> = v
                                    .split(',')
                                    .map(|p| p.parse::<f64>().ok().filter(|x| x.is_finite()))
                                    .collect::<Option<_>>()
                                    .ok_or_else(|| err(format!("bad offset {v:?}")))?;
                                offset = parts
                                    .try_into()
                                    .map_err(|_| err("offset needs three components".into()))?;
                            }
                            _ => return Err(err(format!("unexpected {:?}", tok.text))),
                        }
                    }
                    markers.push(Marker {
                        name: name.text.clone(),
                        link: link.ok_or_else(|| err("marker needs link=".into()))?,
                        offset,
                    });
                }
                other => return Err(err(format!("unknown directive {other:?}"))),
            }
        }
        let chain = KinematicChain { joints, markers };
        chain.validate()?;
        Ok(chain)
    }

    pub fn validate(&self) -> Result<(), KinError> {
        if self.joints.is_empty() {
            return Err(KinError::Invalid("no joints".into()));
        }
        if self.markers.is_empty() {
            return Err(KinError::Invalid("no markers".into()));
        }
        if let Some(m) = self.markers.iter().find(|m| m.link > self.joints.len()) {
            return Err(KinError::Invalid(format!(
                "marker {:?} is on link {} of a {}-joint chain",
                m.name,
                m.link,
                self.joints.len()
            )));
        }
        Ok(())
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    /// Sum of link lengths and marker offsets; bounds any marker's distance
    /// from the base origin.
    pub fn reach(&self) -> f64 {
        let links: f64 = self.joints.iter().map(|r| r.a.abs() + r.d.abs()).sum();
        let marker = self
            .markers
            .iter()
            .map(|m| Vector3::from(m.offset).norm())
            .fold(0.0, f64::max);
        links + marker
    }

    /// Frames `0..=N`: base, then after each joint.
    fn frames(&self, angles_deg: &[f64]) -> Vec<Isometry3<f64>> {
        let mut frames = Vec::with_capacity(self.joints.len() + 1);
        let mut pose = Isometry3::identity();
        frames.push(pose);
        for (row, deg) in self.joints.iter().zip(angles_deg) {
            pose *= row.transform(deg.rem_euclid(360.0).to_radians());
            frames.push(pose);
        }
        frames
    }
}

/// Marker positions in the base frame, mm, in chain marker order.
pub fn fk(chain: &KinematicChain, angles_deg: &[f64]) -> Result<Vec<[f64; 3]>, KinError> {
    if angles_deg.len() != chain.joint_count() {
        return Err(KinError::LengthMismatch {
            expected: chain.joint_count(),
            found: angles_deg.len(),
        });
    }
    let frames = chain.frames(angles_deg);
    Ok(chain
        .markers
        .iter()
        .map(|m| {
            let p = frames[m.link] * Point3::from(m.offset);
            [p.x, p.y, p.z]
        })
        .collect())
}

/// Marker positions per trajectory sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianTrace {
    pub timestamps: Vec<f64>,
    pub marker_names: Vec<String>,
    /// `positions[sample][marker]`, mm.
    pub positions: Vec<Vec<[f64; 3]>>,
}

impl CartesianTrace {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn marker_path(&self, marker: usize) -> Vec<[f64; 3]> {
        self.positions.iter().map(|s| s[marker]).collect()
    }
}

pub fn trace(chain: &KinematicChain, traj: &SampledTrajectory) -> Result<CartesianTrace, KinError> {
    let positions = traj
        .angles
        .iter()
        .map(|q| fk(chain, q))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CartesianTrace {
        timestamps: traj.timestamps.clone(),
        marker_names: chain.markers.iter().map(|m| m.name.clone()).collect(),
        positions,
    })
}

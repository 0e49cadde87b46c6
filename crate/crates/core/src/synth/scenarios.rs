//! Ready-made scenarios: spinning disc, hand-shaken camera, diverging
//! tail lights, approaching target and a moving edge-driven blob.

use std::sync::Arc;

use nalgebra::{Vector2, Vector3};

use super::trajectory::{ConstantVelocity, EgoMotion, Expanding, Expansion, SinusoidalRotation, Spinning};
use super::{Contrast, PolarityModel, RateProfile, Scenario, TargetSpec};
use crate::error::{Error, Result};
use crate::model::CameraIntrinsics;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinningParams {
    pub radius: f64,
    pub center: Vector2<f64>,
    pub rev_start: f64,
    pub rev_end: f64,
    pub lambda: Vector2<f64>,
    pub rate: f64,
    /// Background rate as a fraction of the inlier rate.
    pub background_fraction: f64,
    pub duration: f64,
    pub sensor: (f64, f64),
}

impl Default for SpinningParams {
    fn default() -> Self {
        Self {
            radius: 300.0,
            center: Vector2::new(350.0, 350.0),
            rev_start: 0.05,
            rev_end: 6.1,
            lambda: Vector2::new(5.0, 3.0),
            rate: 50_000.0,
            background_fraction: 0.05,
            duration: 90.0,
            sensor: (700.0, 700.0),
        }
    }
}

impl SpinningParams {
    pub fn trajectory(&self) -> Spinning {
        Spinning {
            center: self.center,
            radius: self.radius,
            rev_start: self.rev_start,
            rev_end: self.rev_end,
            duration: self.duration,
            lambda: self.lambda,
        }
    }

    pub fn peak_flow(&self) -> f64 {
        self.trajectory().flow(self.duration)
    }
}

pub fn spinning_scenario(params: &SpinningParams, seed: u64) -> Result<Scenario> {
    let (w, h) = params.sensor;
    let s = Scenario::new(w, h, params.duration, seed)
        .with_target(TargetSpec {
            trajectory: Arc::new(params.trajectory()),
            rate: RateProfile::Constant(params.rate),
            polarity: PolarityModel::Flicker,
        })
        .with_background(params.rate * params.background_fraction);
    s.validate()?;
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShakeParams {
    pub intrinsics: CameraIntrinsics,
    pub start: Vector2<f64>,
    /// Peak pan flow at the principal point, px/s.
    pub peak_flow: f64,
    pub frequency: f64,
    /// Peak roll rate, rad/s.
    pub roll_rate: f64,
    pub lambda: Vector2<f64>,
    pub rate: f64,
    pub background_rate: f64,
    pub duration: f64,
    pub sensor: (f64, f64),
}

impl Default for ShakeParams {
    fn default() -> Self {
        Self {
            intrinsics: CameraIntrinsics {
                f: 500.0,
                principal_point: Vector2::new(320.0, 240.0),
            },
            start: Vector2::new(330.0, 250.0),
            peak_flow: 1000.0,
            frequency: 6.0,
            roll_rate: 0.5,
            lambda: Vector2::new(4.0, 3.0),
            rate: 50_000.0,
            background_rate: 2_000.0,
            duration: 2.0,
            sensor: (640.0, 480.0),
        }
    }
}

impl ShakeParams {
    /// Yaw at the nominal frequency, pitch slightly detuned so the image
    /// path is a Lissajous figure rather than a line.
    pub fn rotation(&self) -> SinusoidalRotation {
        let a = self.peak_flow / self.intrinsics.f;
        SinusoidalRotation {
            amplitude: Vector3::new(0.6 * a, a, self.roll_rate),
            frequency: Vector3::new(0.9 * self.frequency, self.frequency, 0.5 * self.frequency),
            phase: Vector3::new(0.5, 0.0, 1.0),
        }
    }
}

pub fn shake_scenario(params: &ShakeParams, seed: u64) -> Result<Scenario> {
    let rotation = params.rotation();
    let traj = EgoMotion::integrate(
        params.start,
        0.0,
        params.lambda,
        &rotation,
        &params.intrinsics,
        params.duration,
        1e-4,
    )?;
    let (w, h) = params.sensor;
    let mut s = Scenario::new(w, h, params.duration, seed)
        .with_target(TargetSpec {
            trajectory: Arc::new(traj),
            rate: RateProfile::Constant(params.rate),
            polarity: PolarityModel::Flicker,
        })
        .with_background(params.background_rate);
    s.rotation = Some(Arc::new(rotation));
    s.validate()?;
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaillightParams {
    pub center: Vector2<f64>,
    pub initial_separation: f64,
    pub expansion: Expansion,
    pub lambda: Vector2<f64>,
    /// Inlier rate of each light.
    pub rate: f64,
    pub background_rate: f64,
    pub duration: f64,
    pub sensor: (f64, f64),
}

impl Default for TaillightParams {
    fn default() -> Self {
        Self {
            center: Vector2::new(320.0, 240.0),
            initial_separation: 250.0,
            expansion: Expansion::Linear { s0: 250.0, c: 100.0 },
            lambda: Vector2::new(3.0, 3.0),
            rate: 50_000.0,
            background_rate: 1_000.0,
            duration: 1.5,
            sensor: (640.0, 480.0),
        }
    }
}

/// Left light is target 0, right light is target 1. The lights sit at
/// `center ± (initial_separation / 2)·g(t)` along x, so a linear
/// expansion should use `s0 = initial_separation`.
pub fn taillight_scenario(params: &TaillightParams, seed: u64) -> Result<Scenario> {
    if !(params.initial_separation > 0.0) {
        return Err(Error::Config("initial separation must be > 0".into()));
    }
    let half = Vector2::new(params.initial_separation / 2.0, 0.0);
    let light = |offset: Vector2<f64>| TargetSpec {
        trajectory: Arc::new(Expanding {
            focus: params.center,
            offset,
            expansion: params.expansion,
            theta: 0.0,
            lambda0: params.lambda,
            grow_lambda: false,
        }),
        rate: RateProfile::Constant(params.rate),
        polarity: PolarityModel::Flicker,
    };
    let (w, h) = params.sensor;
    let s = Scenario::new(w, h, params.duration, seed)
        .with_target(light(-half))
        .with_target(light(half))
        .with_background(params.background_rate);
    s.validate()?;
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproachParams {
    pub diameter_m: f64,
    pub intrinsics: CameraIntrinsics,
    pub range_start: f64,
    pub range_end: f64,
    /// Minor to major axis ratio of the blob.
    pub aspect: f64,
    pub rate: f64,
    pub background_rate: f64,
    pub duration: f64,
    pub sensor: (f64, f64),
}

impl Default for ApproachParams {
    fn default() -> Self {
        Self {
            diameter_m: 0.3,
            intrinsics: CameraIntrinsics {
                f: 500.0,
                principal_point: Vector2::new(320.0, 240.0),
            },
            range_start: 17.0,
            range_end: 8.0,
            aspect: 0.7,
            rate: 50_000.0,
            background_rate: 1_000.0,
            duration: 4.0,
            sensor: (640.0, 480.0),
        }
    }
}

impl ApproachParams {
    pub fn expansion(&self) -> Expansion {
        Expansion::Approach {
            z0: self.range_start,
            speed: (self.range_start - self.range_end) / self.duration,
        }
    }

    /// True range in metres at time `t` seconds.
    pub fn range_at(&self, t: f64) -> f64 {
        self.range_start / self.expansion().scale(t)
    }

    /// `λmax = a·f / range`.
    pub fn lambda_max_at(&self, t: f64) -> f64 {
        self.diameter_m * self.intrinsics.f / self.range_at(t)
    }
}

pub fn approach_scenario(params: &ApproachParams, seed: u64) -> Result<Scenario> {
    if !(params.diameter_m > 0.0 && params.range_start > params.range_end && params.range_end > 0.0) {
        return Err(Error::Config("approach needs diameter > 0 and start > end > 0".into()));
    }
    if !(params.aspect > 0.0 && params.aspect <= 1.0) {
        return Err(Error::Config("aspect must be in (0, 1]".into()));
    }
    let l0 = params.diameter_m * params.intrinsics.f / params.range_start;
    let (w, h) = params.sensor;
    let s = Scenario::new(w, h, params.duration, seed)
        .with_target(TargetSpec {
            trajectory: Arc::new(Expanding {
                focus: params.intrinsics.principal_point,
                offset: Vector2::zeros(),
                expansion: params.expansion(),
                theta: 0.3,
                lambda0: Vector2::new(l0, params.aspect * l0),
                grow_lambda: true,
            }),
            rate: RateProfile::Constant(params.rate),
            polarity: PolarityModel::Flicker,
        })
        .with_background(params.background_rate);
    s.validate()?;
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeParams {
    pub start: Vector2<f64>,
    pub velocity: Vector2<f64>,
    pub offset: f64,
    pub contrast: Contrast,
    pub lambda: Vector2<f64>,
    pub rate: f64,
    pub background_rate: f64,
    pub duration: f64,
    pub sensor: (f64, f64),
}

impl Default for EdgeParams {
    fn default() -> Self {
        Self {
            start: Vector2::new(120.0, 200.0),
            velocity: Vector2::new(150.0, 40.0),
            offset: 4.0,
            contrast: Contrast::BrightOnDark,
            lambda: Vector2::new(3.0, 2.0),
            rate: 30_000.0,
            background_rate: 1_000.0,
            duration: 1.5,
            sensor: (640.0, 480.0),
        }
    }
}

/// Non-flickering blob translating at constant velocity.
pub fn edge_scenario(params: &EdgeParams, seed: u64) -> Result<Scenario> {
    let (w, h) = params.sensor;
    let s = Scenario::new(w, h, params.duration, seed)
        .with_target(TargetSpec {
            trajectory: Arc::new(ConstantVelocity {
                p0: params.start,
                v: params.velocity,
                theta: 0.0,
                lambda: params.lambda,
            }),
            rate: RateProfile::Constant(params.rate),
            polarity: PolarityModel::NonFlicker {
                offset: params.offset,
                contrast: params.contrast,
            },
        })
        .with_background(params.background_rate);
    s.validate()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn approach_lambda_by_substitution() {
        let p = ApproachParams {
            diameter_m: 0.3,
            intrinsics: CameraIntrinsics {
                f: 1000.0,
                principal_point: Vector2::new(320.0, 240.0),
            },
            range_start: 20.0,
            range_end: 5.0,
            duration: 10.0,
            ..ApproachParams::default()
        };
        // range 10 m at t = 6.667 s
        let t = 10.0 / 1.5;
        assert_relative_eq!(p.range_at(t), 10.0, epsilon = 1e-9);
        assert_relative_eq!(p.lambda_max_at(t), 30.0, epsilon = 1e-9);
        assert_relative_eq!(p.lambda_max_at(10.0), 2.0 * p.lambda_max_at(t), epsilon = 1e-9);
        let s = approach_scenario(&p, 0).unwrap();
        assert_relative_eq!(s.truth_at(0, 6_666_667).lambda_max(), 30.0, epsilon = 1e-4);
    }

    #[test]
    fn default_spin_exceeds_table_flow() {
        assert!(SpinningParams::default().peak_flow() > 11_320.0);
    }

    #[test]
    fn shake_without_amplitude_is_static() {
        let p = ShakeParams {
            peak_flow: 0.0,
            roll_rate: 0.0,
            ..ShakeParams::default()
        };
        let s = shake_scenario(&p, 1).unwrap();
        assert_eq!(s.truth_at(0, 1_500_000).p, p.start);
        assert!(super::super::gyro_samples(&s).iter().all(|g| g.omega == Vector3::zeros()));
    }

    #[test]
    fn taillight_separation_follows_expansion() {
        let p = TaillightParams::default();
        let s = taillight_scenario(&p, 0).unwrap();
        for t in [0, 500_000, 1_900_000] {
            let sep = (s.truth_at(1, t).p - s.truth_at(0, t).p).norm();
            let expect = p.initial_separation * p.expansion.scale(t as f64 * 1e-6);
            assert_relative_eq!(sep, expect, max_relative = 1e-12);
        }
    }
}

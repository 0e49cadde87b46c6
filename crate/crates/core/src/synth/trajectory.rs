//! Scripted ground-truth motion for synthetic targets.

use std::f64::consts::TAU;
use std::fmt::Debug;

use nalgebra::{Vector2, Vector3};

use crate::ekf::ego_motion_flow;
use crate::error::{Error, Result};
use crate::model::{CameraIntrinsics, TrackState};

/// Ground-truth blob state as a function of time in seconds.
pub trait Trajectory: Debug + Send + Sync {
    fn state(&self, t: f64) -> TrackState;
}

/// Camera angular velocity in rad/s as a function of time.
pub trait AngularVelocity: Debug + Send + Sync {
    fn omega(&self, t: f64) -> Vector3<f64>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fixed {
    pub p: Vector2<f64>,
    pub theta: f64,
    pub lambda: Vector2<f64>,
}

impl Trajectory for Fixed {
    fn state(&self, _t: f64) -> TrackState {
        TrackState {
            theta: self.theta,
            ..TrackState::at_rest(self.p, self.lambda)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantVelocity {
    pub p0: Vector2<f64>,
    pub v: Vector2<f64>,
    pub theta: f64,
    pub lambda: Vector2<f64>,
}

impl Trajectory for ConstantVelocity {
    fn state(&self, t: f64) -> TrackState {
        TrackState {
            v: self.v,
            theta: self.theta,
            ..TrackState::at_rest(self.p0 + self.v * t, self.lambda)
        }
    }
}

/// Circle whose revolution rate ramps linearly from `rev_start` to
/// `rev_end` (rev/s) over `duration`. The blob's major axis stays
/// tangential, so `θ` follows the phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spinning {
    pub center: Vector2<f64>,
    pub radius: f64,
    pub rev_start: f64,
    pub rev_end: f64,
    pub duration: f64,
    pub lambda: Vector2<f64>,
}

impl Spinning {
    /// Revolution rate at `t`, rev/s.
    pub fn rate(&self, t: f64) -> f64 {
        self.rev_start + (self.rev_end - self.rev_start) * t / self.duration
    }

    pub fn phase(&self, t: f64) -> f64 {
        TAU * (self.rev_start * t + (self.rev_end - self.rev_start) * t * t / (2.0 * self.duration))
    }

    /// Image-plane speed of the blob centre, px/s.
    pub fn flow(&self, t: f64) -> f64 {
        TAU * self.rate(t) * self.radius
    }
}

impl Trajectory for Spinning {
    fn state(&self, t: f64) -> TrackState {
        let phi = self.phase(t);
        let q = TAU * self.rate(t);
        let (s, c) = phi.sin_cos();
        TrackState {
            p: self.center + Vector2::new(c, s) * self.radius,
            v: Vector2::new(-s, c) * (self.radius * q),
            theta: phi + std::f64::consts::FRAC_PI_2,
            q,
            lambda: self.lambda,
            delta: None,
        }
    }
}

/// Scale law `g(t)` for a pattern expanding about a fixed image point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Expansion {
    /// `g = e^{kt}`; inverse time-to-contact is `k`.
    Exponential { k: f64 },
    /// `g = 1 + c t / s0`, i.e. separation `s0 + c t`.
    Linear { s0: f64, c: f64 },
    /// Constant closing speed: `g = z0 / (z0 − speed·t)`.
    Approach { z0: f64, speed: f64 },
}

impl Expansion {
    pub fn scale(&self, t: f64) -> f64 {
        match *self {
            Self::Exponential { k } => (k * t).exp(),
            Self::Linear { s0, c } => 1.0 + c * t / s0,
            Self::Approach { z0, speed } => z0 / (z0 - speed * t),
        }
    }

    pub fn rate(&self, t: f64) -> f64 {
        match *self {
            Self::Exponential { k } => k * (k * t).exp(),
            Self::Linear { s0, c } => c / s0,
            Self::Approach { z0, speed } => z0 * speed / (z0 - speed * t).powi(2),
        }
    }

    /// `ġ / g`, the analytic inverse time-to-contact.
    pub fn inverse_ttc(&self, t: f64) -> f64 {
        self.rate(t) / self.scale(t)
    }
}

/// Blob at `focus + offset·g(t)`. With `grow_lambda` the shape scales
/// with `g` as well.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Expanding {
    pub focus: Vector2<f64>,
    pub offset: Vector2<f64>,
    pub expansion: Expansion,
    pub theta: f64,
    pub lambda0: Vector2<f64>,
    pub grow_lambda: bool,
}

impl Trajectory for Expanding {
    fn state(&self, t: f64) -> TrackState {
        let g = self.expansion.scale(t);
        let lambda = if self.grow_lambda { self.lambda0 * g } else { self.lambda0 };
        TrackState {
            v: self.offset * self.expansion.rate(t),
            theta: self.theta,
            ..TrackState::at_rest(self.focus + self.offset * g, lambda)
        }
    }
}

/// Per-axis sinusoid `Ω_i(t) = a_i sin(2π f_i t + φ_i)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SinusoidalRotation {
    pub amplitude: Vector3<f64>,
    pub frequency: Vector3<f64>,
    pub phase: Vector3<f64>,
}

impl AngularVelocity for SinusoidalRotation {
    fn omega(&self, t: f64) -> Vector3<f64> {
        Vector3::from_fn(|i, _| self.amplitude[i] * (TAU * self.frequency[i] * t + self.phase[i]).sin())
    }
}

/// World-fixed blob seen by a rotating camera. The image trajectory is
/// tabulated by RK4 on `ṗ = f_p(p, Ω)`, `θ̇ = −Ω_z` and linearly
/// interpolated. The reported `v` is zero: all motion is ego-motion.
#[derive(Clone, Debug, PartialEq)]
pub struct EgoMotion {
    step: f64,
    p: Vec<Vector2<f64>>,
    theta: Vec<f64>,
    lambda: Vector2<f64>,
}

impl EgoMotion {
    pub fn integrate(
        p0: Vector2<f64>,
        theta0: f64,
        lambda: Vector2<f64>,
        rotation: &dyn AngularVelocity,
        intrinsics: &CameraIntrinsics,
        duration: f64,
        step: f64,
    ) -> Result<Self> {
        if !(step > 0.0) || !(duration >= 0.0) {
            return Err(Error::Domain(format!("bad integration grid: step {step}, duration {duration}")));
        }
        let steps = (duration / step).ceil() as usize + 1;
        let mut p = Vec::with_capacity(steps + 1);
        let mut theta = Vec::with_capacity(steps + 1);
        let (mut pk, mut th) = (p0, theta0);
        p.push(pk);
        theta.push(th);
        let rhs = |t: f64, x: &Vector2<f64>| ego_motion_flow(x, &rotation.omega(t), intrinsics);
        let yaw = |t: f64| -rotation.omega(t).z;
        for k in 0..steps {
            let t = k as f64 * step;
            let k1 = rhs(t, &pk);
            let k2 = rhs(t + step / 2.0, &(pk + k1 * (step / 2.0)));
            let k3 = rhs(t + step / 2.0, &(pk + k2 * (step / 2.0)));
            let k4 = rhs(t + step, &(pk + k3 * step));
            pk += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (step / 6.0);
            th += (yaw(t) + 4.0 * yaw(t + step / 2.0) + yaw(t + step)) * (step / 6.0);
            p.push(pk);
            theta.push(th);
        }
        Ok(Self { step, p, theta, lambda })
    }
}

impl Trajectory for EgoMotion {
    fn state(&self, t: f64) -> TrackState {
        let last = self.p.len() - 1;
        let s = (t / self.step).clamp(0.0, last as f64);
        let i = (s.floor() as usize).min(last.saturating_sub(1));
        let w = (s - i as f64).clamp(0.0, 1.0);
        let j = (i + 1).min(last);
        TrackState {
            theta: self.theta[i] * (1.0 - w) + self.theta[j] * w,
            ..TrackState::at_rest(self.p[i] * (1.0 - w) + self.p[j] * w, self.lambda)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spin() -> Spinning {
        Spinning {
            center: Vector2::new(320.0, 320.0),
            radius: 300.0,
            rev_start: 0.05,
            rev_end: 6.0,
            duration: 90.0,
            lambda: Vector2::new(6.0, 4.0),
        }
    }

    #[test]
    fn spinning_peak_flow() {
        assert!((spin().flow(90.0) - 11309.7).abs() < 0.1);
    }

    #[test]
    fn spinning_mid_ramp_rate_interpolates() {
        let s = spin();
        assert_relative_eq!(s.rate(45.0), 0.5 * (0.05 + 6.0), epsilon = 1e-12);
    }

    #[test]
    fn zero_rate_is_static() {
        let s = Spinning {
            rev_start: 0.0,
            rev_end: 0.0,
            ..spin()
        };
        assert_eq!(s.state(0.0).p, s.state(10.0).p);
        assert_eq!(s.state(3.0).v, Vector2::zeros());
    }

    #[test]
    fn spinning_velocity_is_position_derivative() {
        let s = spin();
        let h = 1e-6;
        for t in [0.0, 10.0, 44.4, 89.0] {
            let fd = (s.state(t + h).p - s.state(t - h).p) / (2.0 * h);
            assert!((fd - s.state(t).v).norm() < 1e-4 * s.state(t).v.norm().max(1.0));
            assert_relative_eq!(s.state(t).v.norm(), s.flow(t), max_relative = 1e-12);
        }
    }

    #[test]
    fn expansion_inverse_ttc() {
        let e = Expansion::Exponential { k: 0.4 };
        assert_relative_eq!(e.inverse_ttc(1.3), 0.4, epsilon = 1e-12);
        let l = Expansion::Linear { s0: 50.0, c: 10.0 };
        assert_relative_eq!(l.inverse_ttc(2.0), 10.0 / 70.0, epsilon = 1e-12);
        for exp in [e, l, Expansion::Approach { z0: 17.0, speed: 4.5 }] {
            let h = 1e-6;
            for t in [0.1, 0.8, 1.5] {
                let fd = (exp.scale(t + h).ln() - exp.scale(t - h).ln()) / (2.0 * h);
                assert_relative_eq!(fd, exp.inverse_ttc(t), max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn ego_motion_matches_fine_euler() {
        let intr = CameraIntrinsics::new(500.0, 320.0, 240.0).unwrap();
        let rot = SinusoidalRotation {
            amplitude: Vector3::new(1.5, 2.0, 0.5),
            frequency: Vector3::new(6.0, 5.0, 3.0),
            phase: Vector3::new(0.0, 0.7, 0.2),
        };
        let p0 = Vector2::new(300.0, 250.0);
        let traj = EgoMotion::integrate(p0, 0.0, Vector2::new(3.0, 3.0), &rot, &intr, 0.5, 1e-4).unwrap();
        // independent forward Euler at a much finer step
        let h = 1e-7;
        let (mut p, mut th) = (p0, 0.0);
        for k in 0..5_000_000 {
            let t = k as f64 * h;
            let w = rot.omega(t);
            p += ego_motion_flow(&p, &w, &intr) * h;
            th -= w.z * h;
        }
        let s = traj.state(0.5);
        assert!((s.p - p).norm() < 1e-3, "{} vs {}", s.p, p);
        assert!((s.theta - th).abs() < 1e-5);
    }

    #[test]
    fn pure_roll_leaves_principal_point_fixed() {
        let intr = CameraIntrinsics::new(500.0, 320.0, 240.0).unwrap();
        let rot = SinusoidalRotation {
            amplitude: Vector3::new(0.0, 0.0, 3.0),
            frequency: Vector3::new(0.0, 0.0, 6.0),
            phase: Vector3::zeros(),
        };
        let pp = intr.principal_point;
        let traj = EgoMotion::integrate(pp, 0.0, Vector2::new(3.0, 3.0), &rot, &intr, 0.3, 1e-4).unwrap();
        for t in [0.05, 0.1, 0.29] {
            assert!((traj.state(t).p - pp).norm() < 1e-9);
        }
    }
}

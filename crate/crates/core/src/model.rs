//! Domain types and the geometry of the Gaussian event-blob model.
//!
//! A blob is described by its centre `p` and a square-root covariance
//! `Λ = R(θ)·diag(λ¹, λ²)·R(θ)ᵀ`. Events scatter around the centre as
//! `ξ = p + Λη` with `η ~ N(0, I₂)`.

use std::f64::consts::PI;

use nalgebra::{Matrix2, SMatrix, SVector, Vector2, Vector3};

use crate::error::{Error, Result};

/// Timestamps on the wire are integer microseconds.
pub type Micros = i64;

/// Smallest principal correlation the filter will hold, in pixels.
pub const LAMBDA_FLOOR: f64 = 0.1;

/// State dimension in flickering mode.
pub const FLICKER_DIM: usize = 8;
/// State dimension with the polarity offset appended.
pub const NON_FLICKER_DIM: usize = 10;

/// Index ranges of the state partition `(p, v, θ, q, λ[, Δ])`.
pub mod idx {
    pub const P: usize = 0;
    pub const V: usize = 2;
    pub const THETA: usize = 4;
    pub const Q: usize = 5;
    pub const LAMBDA: usize = 6;
    pub const DELTA: usize = 8;
}

pub fn micros_to_secs(t: Micros) -> f64 {
    t as f64 * 1e-6
}

pub fn secs_to_micros(t: f64) -> Micros {
    (t * 1e6).floor() as Micros
}

/// Rotation matrix `R(θ)`.
#[inline]
pub fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    Negative,
    Positive,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Negative => -1.0,
            Polarity::Positive => 1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Polarity::Negative => -1,
            Polarity::Positive => 1,
        }
    }

    /// Accepts `1`/`-1` and the common `1`/`0` export convention.
    pub fn from_i64(v: i64) -> Option<Self> {
        match v {
            1 => Some(Polarity::Positive),
            -1 | 0 => Some(Polarity::Negative),
            _ => None,
        }
    }
}

/// A single camera event.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub t: Micros,
    pub xi: Vector2<f64>,
    pub polarity: Polarity,
}

impl Event {
    pub fn new(t: Micros, x: f64, y: f64, polarity: Polarity) -> Self {
        Self {
            t,
            xi: Vector2::new(x, y),
            polarity,
        }
    }
}

/// Angular velocity sample from a camera-mounted gyroscope, rad/s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GyroSample {
    pub t: Micros,
    pub omega: Vector3<f64>,
}

/// Pinhole intrinsics: focal length and principal point, both in pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraIntrinsics {
    pub f: f64,
    pub principal_point: Vector2<f64>,
}

impl CameraIntrinsics {
    pub fn new(f: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(f > 0.0) || !f.is_finite() {
            return Err(Error::Domain(format!("focal length must be > 0, got {f}")));
        }
        Ok(Self {
            f,
            principal_point: Vector2::new(cx, cy),
        })
    }
}

/// Estimated (or true) blob state.
///
/// `theta` is never wrapped. `delta` is only present for non-flickering
/// targets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackState {
    pub p: Vector2<f64>,
    pub v: Vector2<f64>,
    pub theta: f64,
    pub q: f64,
    pub lambda: Vector2<f64>,
    pub delta: Option<Vector2<f64>>,
}

impl TrackState {
    pub fn at_rest(p: Vector2<f64>, lambda: Vector2<f64>) -> Self {
        Self {
            p,
            v: Vector2::zeros(),
            theta: 0.0,
            q: 0.0,
            lambda,
            delta: None,
        }
    }

    pub fn with_delta(mut self, delta: Vector2<f64>) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn dim(&self) -> usize {
        if self.delta.is_some() {
            NON_FLICKER_DIM
        } else {
            FLICKER_DIM
        }
    }

    pub fn shape(&self) -> ShapeMatrix {
        ShapeMatrix {
            theta: self.theta,
            lambda: self.lambda,
        }
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda.x.max(self.lambda.y)
    }

    /// Packs into the filter vector. A missing `delta` packs as zero in
    /// 10-dim mode.
    pub fn to_vector<const D: usize>(&self) -> Result<SVector<f64, D>> {
        check_dim(D)?;
        let mut x = SVector::<f64, D>::zeros();
        x.fixed_rows_mut::<2>(idx::P).copy_from(&self.p);
        x.fixed_rows_mut::<2>(idx::V).copy_from(&self.v);
        x[idx::THETA] = self.theta;
        x[idx::Q] = self.q;
        x.fixed_rows_mut::<2>(idx::LAMBDA).copy_from(&self.lambda);
        if D == NON_FLICKER_DIM {
            let d = self.delta.unwrap_or_else(Vector2::zeros);
            x.fixed_rows_mut::<2>(idx::DELTA).copy_from(&d);
        }
        Ok(x)
    }

    pub fn from_vector<const D: usize>(x: &SVector<f64, D>) -> Self {
        Self {
            p: x.fixed_rows::<2>(idx::P).into_owned(),
            v: x.fixed_rows::<2>(idx::V).into_owned(),
            theta: x[idx::THETA],
            q: x[idx::Q],
            lambda: x.fixed_rows::<2>(idx::LAMBDA).into_owned(),
            delta: (D == NON_FLICKER_DIM).then(|| x.fixed_rows::<2>(idx::DELTA).into_owned()),
        }
    }
}

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if d == FLICKER_DIM || d == NON_FLICKER_DIM {
        Ok(())
    } else {
        Err(Error::InvalidDimension(d))
    }
}

/// Estimate covariance `Σ̂`, `D×D` with `D ∈ {8, 10}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackCovariance<const D: usize> {
    pub sigma: SMatrix<f64, D, D>,
}

impl<const D: usize> TrackCovariance<D> {
    pub fn new(sigma: SMatrix<f64, D, D>) -> Self {
        Self { sigma }
    }

    pub fn from_diagonal(diag: &SVector<f64, D>) -> Self {
        Self {
            sigma: SMatrix::from_diagonal(diag),
        }
    }

    pub fn symmetrize(&mut self) {
        self.sigma = (self.sigma + self.sigma.transpose()) * 0.5;
    }

    pub fn diagonal(&self) -> SVector<f64, D> {
        self.sigma.diagonal()
    }

    pub fn trace(&self) -> f64 {
        self.sigma.trace()
    }

    /// Largest relative asymmetry `max|Σᵢⱼ − Σⱼᵢ| / max|Σᵢⱼ|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.sigma.amax().max(f64::MIN_POSITIVE);
        (self.sigma - self.sigma.transpose()).amax() / scale
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (self.sigma + self.sigma.transpose()) * 0.5;
        let dynamic = nalgebra::DMatrix::from_column_slice(D, D, sym.as_slice());
        dynamic.symmetric_eigenvalues().min()
    }
}

/// Shape parameters `(θ, λ)` of the blob.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeMatrix {
    pub theta: f64,
    pub lambda: Vector2<f64>,
}

impl ShapeMatrix {
    pub fn new(theta: f64, lambda: Vector2<f64>) -> Result<Self> {
        check_lambda(&lambda)?;
        Ok(Self { theta, lambda })
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        rotated_diag(self.theta, self.lambda.x, self.lambda.y)
    }

    pub fn inverse(&self) -> Matrix2<f64> {
        rotated_diag(self.theta, 1.0 / self.lambda.x, 1.0 / self.lambda.y)
    }

    pub fn det(&self) -> f64 {
        self.lambda.x * self.lambda.y
    }
}

fn check_lambda(lambda: &Vector2<f64>) -> Result<()> {
    if lambda.x > 0.0 && lambda.y > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "principal correlations must be positive, got ({}, {})",
            lambda.x, lambda.y
        )))
    }
}

/// `R(θ)·diag(a, b)·R(θ)ᵀ` expanded in closed form.
#[inline]
pub(crate) fn rotated_diag(theta: f64, a: f64, b: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    let off = (a - b) * s * c;
    Matrix2::new(a * c * c + b * s * s, off, off, a * s * s + b * c * c)
}

/// `Λ = R(θ)·diag(λ)·R(θ)ᵀ`.
pub fn make_shape_matrix(theta: f64, lambda: Vector2<f64>) -> Result<Matrix2<f64>> {
    Ok(ShapeMatrix::new(theta, lambda)?.matrix())
}

/// `Λ⁻¹ = R(θ)·diag(1/λ)·R(θ)ᵀ`.
pub fn shape_inverse(theta: f64, lambda: Vector2<f64>) -> Result<Matrix2<f64>> {
    Ok(ShapeMatrix::new(theta, lambda)?.inverse())
}

/// Conditional spatial event density at `xi`: a Gaussian with mean `p`
/// and covariance `Λ²`.
pub fn blob_likelihood(xi: &Vector2<f64>, state: &TrackState) -> f64 {
    let shape = state.shape();
    let r = shape.inverse() * (xi - state.p);
    (-0.5 * r.norm_squared()).exp() / (2.0 * PI * shape.det())
}

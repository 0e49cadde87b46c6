//! Two-stage pseudo measurements.
//!
//! The first stage normalises the current event by the estimated shape,
//! `H = Λ⁻¹(ξ − p)`, whose value under the true state is `N(0, I₂)`; the
//! filter consumes it against a pseudo measurement of zero. The second
//! stage forms `G = Σⱼ ‖χⱼ‖²` over a buffer of the `n` previous events and
//! their pre-update predictions. Under the true shape `G` is approximately
//! `N(2n, 4n)` and is consumed against a pseudo measurement of `2n`. `G`
//! is what makes `λ` observable.

use std::collections::VecDeque;

use nalgebra::{Matrix2, Matrix3, RowSVector, SMatrix, SVector, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::model::{idx, rotated_diag, rotation, Event, Polarity, NON_FLICKER_DIM};

/// One buffered event with the filter prediction made just before it
/// was consumed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiRecord {
    pub p_minus: Vector2<f64>,
    pub theta_minus: f64,
    pub xi: Vector2<f64>,
    pub polarity: Polarity,
}

/// Ring buffer of the last `n` records, newest first.
#[derive(Clone, Debug)]
pub struct ChiBuffer {
    entries: VecDeque<ChiRecord>,
    n: usize,
    beta_bound: f64,
}

impl ChiBuffer {
    pub fn new(n: usize, beta_bound: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("chi buffer length must be >= 1".into()));
        }
        if !(beta_bound >= 0.0) || !beta_bound.is_finite() {
            return Err(Error::Config(format!(
                "beta_bound must be finite and >= 0, got {beta_bound}"
            )));
        }
        Ok(Self {
            entries: VecDeque::with_capacity(n + 1),
            n,
            beta_bound,
        })
    }

    pub fn push(&mut self, record: ChiRecord) {
        self.entries.push_front(record);
        self.entries.truncate(self.n);
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() == self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.n
    }

    pub fn beta_bound(&self) -> f64 {
        self.beta_bound
    }

    /// Records `j = 1..n`, newest first.
    pub fn iter(&self) -> impl Iterator<Item = &ChiRecord> {
        self.entries.iter()
    }

    fn require_full(&self) -> Result<()> {
        if self.is_full() {
            Ok(())
        } else {
            Err(Error::BufferNotFull {
                have: self.entries.len(),
                need: self.n,
            })
        }
    }
}

/// `R = diag(1, 1, 4n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementNoise {
    pub r: Matrix3<f64>,
}

impl MeasurementNoise {
    pub fn for_buffer(n: usize) -> Self {
        Self {
            r: Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 4.0 * n as f64)),
        }
    }
}

fn delta_of<const D: usize>(x: &SVector<f64, D>) -> Option<Vector2<f64>> {
    (D == NON_FLICKER_DIM).then(|| x.fixed_rows::<2>(idx::DELTA).into_owned())
}

fn lambda_of<const D: usize>(x: &SVector<f64, D>) -> Vector2<f64> {
    x.fixed_rows::<2>(idx::LAMBDA).into_owned()
}

fn offset(xi: &Vector2<f64>, p: &Vector2<f64>, polarity: Polarity, delta: Option<Vector2<f64>>) -> Vector2<f64> {
    match delta {
        Some(d) => xi - d * polarity.sign() - p,
        None => xi - p,
    }
}

/// First-stage residual `Λ⁻¹(ξ − ρΔ − p)` (the `Δ` term only in 10-dim
/// mode).
pub fn h_residual<const D: usize>(x: &SVector<f64, D>, xi: &Vector2<f64>, polarity: Polarity) -> Vector2<f64> {
    let p = x.fixed_rows::<2>(idx::P).into_owned();
    let lambda = lambda_of(x);
    let inv = rotated_diag(x[idx::THETA], 1.0 / lambda.x, 1.0 / lambda.y);
    inv * offset(xi, &p, polarity, delta_of(x))
}

/// `χ = (1/(1+β))·Λ̂⁻¹(ξ − ρΔ − p̂⁻)` with `Λ̂` built from the current `λ`
/// and the buffered orientation.
pub fn chi_term(entry: &ChiRecord, lambda_k: &Vector2<f64>, beta_bound: f64, delta: Option<Vector2<f64>>) -> Vector2<f64> {
    let inv = rotated_diag(entry.theta_minus, 1.0 / lambda_k.x, 1.0 / lambda_k.y);
    inv * offset(&entry.xi, &entry.p_minus, entry.polarity, delta) / (1.0 + beta_bound)
}

/// `G = Σⱼ ‖χⱼ‖²` over a full buffer. Never reads the current event.
pub fn g_statistic<const D: usize>(x: &SVector<f64, D>, buffer: &ChiBuffer) -> Result<f64> {
    buffer.require_full()?;
    let lambda = lambda_of(x);
    let delta = delta_of(x);
    Ok(buffer
        .iter()
        .map(|e| chi_term(e, &lambda, buffer.beta_bound, delta).norm_squared())
        .sum())
}

/// Analytic Jacobian of [`h_residual`].
pub fn jacobian_h<const D: usize>(x: &SVector<f64, D>, xi: &Vector2<f64>, polarity: Polarity) -> SMatrix<f64, 2, D> {
    let p = x.fixed_rows::<2>(idx::P).into_owned();
    let theta = x[idx::THETA];
    let lambda = lambda_of(x);
    let delta = delta_of(x);
    let rot = rotation(theta);
    let inv = rotated_diag(theta, 1.0 / lambda.x, 1.0 / lambda.y);
    let w = rot.transpose() * offset(xi, &p, polarity, delta);

    let mut c = SMatrix::<f64, 2, D>::zeros();
    c.fixed_view_mut::<2, 2>(0, idx::P).copy_from(&(-inv));

    // D_λ H = −R(θ)·diag(μ²·R(−θ)(ξ − p))
    let d_lambda = -rot * Matrix2::new(w.x / (lambda.x * lambda.x), 0.0, 0.0, w.y / (lambda.y * lambda.y));
    c.fixed_view_mut::<2, 2>(0, idx::LAMBDA).copy_from(&d_lambda);

    // D_θ H = R(θ)·[Ωμ − μΩ]·R(−θ)(ξ − p), Ω the 90° generator
    let k = 1.0 / lambda.x - 1.0 / lambda.y;
    let d_theta = rot * Vector2::new(k * w.y, k * w.x);
    c.fixed_view_mut::<2, 1>(0, idx::THETA).copy_from(&d_theta);

    if delta.is_some() {
        c.fixed_view_mut::<2, 2>(0, idx::DELTA).copy_from(&(-inv * polarity.sign()));
    }
    c
}

/// Analytic Jacobian of [`g_statistic`]. Only the `λ` block is populated.
pub fn jacobian_g<const D: usize>(x: &SVector<f64, D>, buffer: &ChiBuffer) -> Result<RowSVector<f64, D>> {
    buffer.require_full()?;
    let lambda = lambda_of(x);
    let delta = delta_of(x);
    let beta = buffer.beta_bound;
    let mut sum = RowSVector::<f64, 2>::zeros();
    for e in buffer.iter() {
        let chi = chi_term(e, &lambda, beta, delta);
        let rot = rotation(e.theta_minus);
        let w = rot.transpose() * offset(&e.xi, &e.p_minus, e.polarity, delta);
        let scaled = Matrix2::new(w.x / (lambda.x * lambda.x), 0.0, 0.0, w.y / (lambda.y * lambda.y));
        // ζ = χᵀ·R(θ̂⁻)·diag(μ²·R(−θ̂⁻)(ξ − p̂⁻))
        sum += chi.transpose() * rot * scaled;
    }
    let mut row = RowSVector::<f64, D>::zeros();
    row.fixed_columns_mut::<2>(idx::LAMBDA)
        .copy_from(&(sum * (-2.0 / (1.0 + beta))));
    Ok(row)
}

/// Linearised stacked measurement for one event.
#[derive(Clone, Copy, Debug)]
pub struct StackedMeasurement<const D: usize> {
    /// `(H; G)` evaluated at the linearisation point.
    pub predicted: Vector3<f64>,
    /// Pseudo measurement `m = (0, 0, 2n)`.
    pub target: Vector3<f64>,
    pub c: SMatrix<f64, 3, D>,
    pub r: Matrix3<f64>,
}

impl<const D: usize> StackedMeasurement<D> {
    pub fn innovation(&self) -> Vector3<f64> {
        self.target - self.predicted
    }
}

pub fn stack_measurement<const D: usize>(x: &SVector<f64, D>, event: &Event, buffer: &ChiBuffer) -> Result<StackedMeasurement<D>> {
    let h = h_residual(x, &event.xi, event.polarity);
    let g = g_statistic(x, buffer)?;
    let mut c = SMatrix::<f64, 3, D>::zeros();
    c.fixed_rows_mut::<2>(0).copy_from(&jacobian_h(x, &event.xi, event.polarity));
    c.fixed_rows_mut::<1>(2).copy_from(&jacobian_g(x, buffer)?);
    let n = buffer.capacity();
    Ok(StackedMeasurement {
        predicted: Vector3::new(h.x, h.y, g),
        target: Vector3::new(0.0, 0.0, 2.0 * n as f64),
        c,
        r: MeasurementNoise::for_buffer(n).r,
    })
}

//! Per-event prediction and correction of a single blob track.
//!
//! Prediction integrates the noise-free dynamics
//!
//! ```text
//! ṗ = v + f_p(p, Ω)    v̇ = J v    θ̇ = q − Ω_z    q̇ = 0    λ̇ = 0    [Δ̇ = J Δ]
//! ```
//!
//! with one Euler step per event interval and diffuses the covariance
//! through the linearisation `A`. Correction is a standard EKF step on the
//! stacked pseudo measurement from [`crate::pseudo_meas`].

use nalgebra::{Matrix2, SMatrix, SVector, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::model::{check_dim, idx, CameraIntrinsics, Event, Micros, TrackCovariance, LAMBDA_FLOOR, NON_FLICKER_DIM};
use crate::pseudo_meas::{h_residual, jacobian_h, stack_measurement, ChiBuffer};

/// Continuous-time process noise spectral densities (units per second).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProcessNoise {
    pub qp: Matrix2<f64>,
    pub qv: Matrix2<f64>,
    pub qtheta: f64,
    pub qq: f64,
    pub qlambda: Matrix2<f64>,
    pub qdelta: Option<Matrix2<f64>>,
}

impl ProcessNoise {
    /// Diagonal blocks with equal entries.
    pub fn isotropic(qp: f64, qv: f64, qtheta: f64, qq: f64, qlambda: f64, qdelta: Option<f64>) -> Self {
        Self {
            qp: Matrix2::identity() * qp,
            qv: Matrix2::identity() * qv,
            qtheta,
            qq,
            qlambda: Matrix2::identity() * qlambda,
            qdelta: qdelta.map(|q| Matrix2::identity() * q),
        }
    }

    /// Block-diagonal `Q`. Fails unless every block is positive definite.
    pub fn assemble<const D: usize>(&self) -> Result<SMatrix<f64, D, D>> {
        check_dim(D)?;
        let spd = |name: &str, m: &Matrix2<f64>| -> Result<()> {
            let symmetric = (m - m.transpose()).amax() <= 1e-12 * m.amax();
            if symmetric && m.cholesky().is_some() {
                Ok(())
            } else {
                Err(Error::Config(format!("process noise block {name} is not SPD")))
            }
        };
        spd("q_p", &self.qp)?;
        spd("q_v", &self.qv)?;
        spd("q_lambda", &self.qlambda)?;
        if !(self.qtheta > 0.0) || !(self.qq > 0.0) {
            return Err(Error::Config("q_theta and q_q must be > 0".into()));
        }
        let mut q = SMatrix::<f64, D, D>::zeros();
        q.fixed_view_mut::<2, 2>(idx::P, idx::P).copy_from(&self.qp);
        q.fixed_view_mut::<2, 2>(idx::V, idx::V).copy_from(&self.qv);
        q[(idx::THETA, idx::THETA)] = self.qtheta;
        q[(idx::Q, idx::Q)] = self.qq;
        q.fixed_view_mut::<2, 2>(idx::LAMBDA, idx::LAMBDA).copy_from(&self.qlambda);
        if D == NON_FLICKER_DIM {
            let qd = self
                .qdelta
                .ok_or_else(|| Error::Config("q_delta is required for the polarity offset state".into()))?;
            spd("q_delta", &qd)?;
            q.fixed_view_mut::<2, 2>(idx::DELTA, idx::DELTA).copy_from(&qd);
        }
        Ok(q)
    }
}

/// Which pseudo measurements drive the correction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MeasurementMode {
    /// `(H; G)` once the chi buffer is warm, `H` alone before that.
    #[default]
    Combined,
    /// `H` only. Exists for ablation; `λ` drifts upwards in this mode.
    PositionOnly,
}

/// `J = [[0, Ω_z], [−Ω_z, 0]]`.
#[inline]
pub fn spin_matrix(omega: &Vector3<f64>) -> Matrix2<f64> {
    Matrix2::new(0.0, omega.z, -omega.z, 0.0)
}

/// Image-plane flow at `p` induced by camera rotation `Ω` under a pinhole
/// model.
pub fn ego_motion_flow(p: &Vector2<f64>, omega: &Vector3<f64>, intrinsics: &CameraIntrinsics) -> Vector2<f64> {
    let f = intrinsics.f;
    let (px, py) = (p.x - intrinsics.principal_point.x, p.y - intrinsics.principal_point.y);
    let (wx, wy, wz) = (omega.x, omega.y, omega.z);
    Vector2::new(
        wx * px * py / f - wy * (f + px * px / f) + wz * py,
        wx * (f + py * py / f) - wy * px * py / f - wz * px,
    )
}

/// `∂f_p/∂p` at `p_hat`.
pub fn ego_motion_jacobian(p_hat: &Vector2<f64>, omega: &Vector3<f64>, intrinsics: &CameraIntrinsics) -> Matrix2<f64> {
    let f = intrinsics.f;
    let (px, py) = (p_hat.x - intrinsics.principal_point.x, p_hat.y - intrinsics.principal_point.y);
    let (wx, wy, wz) = (omega.x, omega.y, omega.z);
    Matrix2::new(
        py * wx / f - 2.0 * px * wy / f,
        wz + px * wx / f,
        -wz - py * wy / f,
        2.0 * py * wx / f - px * wy / f,
    )
}

/// Linearised dynamics about `p_hat`:
///
/// ```text
/// ⎡A_p̂ I₂ 0 0 0 [0]⎤
/// ⎢ 0   J  0 0 0 [0]⎥
/// ⎢ 0   0  0 1 0 [0]⎥
/// ⎢ 0   0  0 0 0 [0]⎥
/// ⎢ 0   0  0 0 0 [0]⎥
/// ⎣[0  0  0 0 0  J ]⎦
/// ```
pub fn assemble_a<const D: usize>(p_hat: &Vector2<f64>, omega: &Vector3<f64>, intrinsics: &CameraIntrinsics) -> Result<SMatrix<f64, D, D>> {
    check_dim(D)?;
    let mut a = SMatrix::<f64, D, D>::zeros();
    let j = spin_matrix(omega);
    a.fixed_view_mut::<2, 2>(idx::P, idx::P)
        .copy_from(&ego_motion_jacobian(p_hat, omega, intrinsics));
    a.fixed_view_mut::<2, 2>(idx::P, idx::V).copy_from(&Matrix2::identity());
    a.fixed_view_mut::<2, 2>(idx::V, idx::V).copy_from(&j);
    a[(idx::THETA, idx::Q)] = 1.0;
    if D == NON_FLICKER_DIM {
        a.fixed_view_mut::<2, 2>(idx::DELTA, idx::DELTA).copy_from(&j);
    }
    Ok(a)
}

/// Noise-free state derivative, including the affine ego-motion terms.
pub fn drift<const D: usize>(x: &SVector<f64, D>, omega: &Vector3<f64>, intrinsics: &CameraIntrinsics) -> SVector<f64, D> {
    let j = spin_matrix(omega);
    let p = x.fixed_rows::<2>(idx::P).into_owned();
    let v = x.fixed_rows::<2>(idx::V).into_owned();
    let mut dx = SVector::<f64, D>::zeros();
    dx.fixed_rows_mut::<2>(idx::P)
        .copy_from(&(v + ego_motion_flow(&p, omega, intrinsics)));
    dx.fixed_rows_mut::<2>(idx::V).copy_from(&(j * v));
    dx[idx::THETA] = x[idx::Q] - omega.z;
    if D == NON_FLICKER_DIM {
        let delta = x.fixed_rows::<2>(idx::DELTA).into_owned();
        dx.fixed_rows_mut::<2>(idx::DELTA).copy_from(&(j * delta));
    }
    dx
}

/// Position the track is expected to occupy after `dt` seconds. Used by
/// association, which must not touch the covariance.
pub fn predict_position<const D: usize>(x: &SVector<f64, D>, omega: &Vector3<f64>, intrinsics: &CameraIntrinsics, dt: f64) -> Vector2<f64> {
    let p = x.fixed_rows::<2>(idx::P).into_owned();
    let v = x.fixed_rows::<2>(idx::V).into_owned();
    p + (v + ego_motion_flow(&p, omega, intrinsics)) * dt
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PredictedState<const D: usize> {
    pub x_minus: SVector<f64, D>,
    pub sigma_minus: TrackCovariance<D>,
    pub t: Micros,
}

/// One Euler step of length `dt` seconds:
/// `x⁻ = x + dt·drift(x)`, `Σ⁻ = (I + dt·A)Σ(I + dt·A)ᵀ + dt·Q`.
pub fn predict<const D: usize>(
    x: &SVector<f64, D>,
    cov: &TrackCovariance<D>,
    q: &SMatrix<f64, D, D>,
    omega: &Vector3<f64>,
    intrinsics: &CameraIntrinsics,
    dt: f64,
) -> Result<(SVector<f64, D>, TrackCovariance<D>)> {
    if dt < 0.0 || dt.is_nan() {
        return Err(Error::NegativeTimeStep(dt));
    }
    if dt == 0.0 {
        return Ok((*x, *cov));
    }
    let p = x.fixed_rows::<2>(idx::P).into_owned();
    let a = assemble_a::<D>(&p, omega, intrinsics)?;
    let f = SMatrix::<f64, D, D>::identity() + a * dt;
    let x_minus = x + drift(x, omega, intrinsics) * dt;
    let mut sigma = TrackCovariance::new(f * cov.sigma * f.transpose() + q * dt);
    sigma.symmetrize();
    Ok((x_minus, sigma))
}

fn correct<const D: usize, const M: usize>(
    x: &SVector<f64, D>,
    sigma: &SMatrix<f64, D, D>,
    c: &SMatrix<f64, M, D>,
    innovation: &SVector<f64, M>,
    r: &SMatrix<f64, M, M>,
) -> Result<(SVector<f64, D>, TrackCovariance<D>)> {
    let pct = sigma * c.transpose();
    let s = c * pct + r;
    let s_inv = s.try_inverse().ok_or(Error::SingularInnovation)?;
    if !s_inv.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularInnovation);
    }
    let k = pct * s_inv;
    let mut x_new = x + k * innovation;
    // Joseph form keeps Σ positive semi-definite under rounding.
    let ikc = SMatrix::<f64, D, D>::identity() - k * c;
    let mut cov = TrackCovariance::new(ikc * sigma * ikc.transpose() + k * r * k.transpose());
    cov.symmetrize();
    for i in idx::LAMBDA..idx::LAMBDA + 2 {
        if x_new[i] < LAMBDA_FLOOR {
            x_new[i] = LAMBDA_FLOOR;
        }
    }
    Ok((x_new, cov))
}

/// EKF correction for one associated event.
///
/// Until `buffer` holds `n` records only the position residual is used
/// (`R = I₂`); afterwards the full `(H; G)` stack with `R = diag(1, 1, 4n)`.
pub fn update<const D: usize>(
    pred: &PredictedState<D>,
    event: &Event,
    buffer: &ChiBuffer,
    mode: MeasurementMode,
) -> Result<(SVector<f64, D>, TrackCovariance<D>)> {
    let x = &pred.x_minus;
    if mode == MeasurementMode::Combined && buffer.is_full() {
        let m = stack_measurement(x, event, buffer)?;
        correct(x, &pred.sigma_minus.sigma, &m.c, &m.innovation(), &m.r)
    } else {
        let c = jacobian_h(x, &event.xi, event.polarity);
        let innovation = -h_residual(x, &event.xi, event.polarity);
        correct(x, &pred.sigma_minus.sigma, &c, &innovation, &Matrix2::identity())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Polarity, TrackState};
    use crate::pseudo_meas::ChiRecord;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn intr() -> CameraIntrinsics {
        CameraIntrinsics::new(500.0, 320.0, 240.0).unwrap()
    }

    fn noise() -> ProcessNoise {
        ProcessNoise::isotropic(1.0, 100.0, 0.1, 0.1, 0.01, Some(0.01))
    }

    #[test]
    fn flow_vanishes_without_rotation() {
        let f = ego_motion_flow(&Vector2::new(10.0, 400.0), &Vector3::zeros(), &intr());
        assert_eq!(f, Vector2::zeros());
    }

    #[test]
    fn flow_at_principal_point_is_pure_pan() {
        let k = intr();
        let f = ego_motion_flow(&k.principal_point, &Vector3::new(0.0, 0.7, 0.0), &k);
        assert_relative_eq!(f, Vector2::new(-0.7 * 500.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn flow_matches_direct_evaluation() {
        // p̄ = (10, 20), f = 500, Ω = (0.1, −0.2, 0.3):
        // x: 0.1·200/500 + 0.2·(500 + 100/500) + 0.3·20 = 0.04 + 100.04 + 6 = 106.08
        // y: 0.1·(500 + 400/500) + 0.2·200/500 − 0.3·10 = 50.08 + 0.08 − 3 = 47.16
        let k = intr();
        let p = k.principal_point + Vector2::new(10.0, 20.0);
        let f = ego_motion_flow(&p, &Vector3::new(0.1, -0.2, 0.3), &k);
        assert_relative_eq!(f, Vector2::new(106.08, 47.16), epsilon = 1e-10);
    }

    #[test]
    fn jacobian_special_cases() {
        let k = intr();
        let p = Vector2::new(17.0, 93.0);
        assert_eq!(ego_motion_jacobian(&p, &Vector3::zeros(), &k), Matrix2::zeros());
        let j = ego_motion_jacobian(&p, &Vector3::new(0.0, 0.0, 1.5), &k);
        assert_eq!(j, Matrix2::new(0.0, 1.5, -1.5, 0.0));
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let k = intr();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let p = Vector2::new(rng.gen_range(0.0..640.0), rng.gen_range(0.0..480.0));
            let w = Vector3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let analytic = ego_motion_jacobian(&p, &w, &k);
            let h = 1e-4;
            for col in 0..2 {
                let mut e = Vector2::zeros();
                e[col] = h;
                let fd = (ego_motion_flow(&(p + e), &w, &k) - ego_motion_flow(&(p - e), &w, &k)) / (2.0 * h);
                for row in 0..2 {
                    let err = (analytic[(row, col)] - fd[row]).abs();
                    assert!(err <= 1e-5 * analytic[(row, col)].abs().max(1.0), "({row},{col}) {err}");
                }
            }
        }
    }

    #[test]
    fn a_matrix_structure() {
        let k = intr();
        let a = assemble_a::<8>(&Vector2::new(1.0, 2.0), &Vector3::zeros(), &k).unwrap();
        for r in 0..8 {
            for c in 0..8 {
                let expected = match (r, c) {
                    (0, 2) | (1, 3) | (4, 5) => 1.0,
                    _ => 0.0,
                };
                assert_eq!(a[(r, c)], expected, "A[{r},{c}]");
            }
        }
        let a = assemble_a::<10>(&Vector2::new(1.0, 2.0), &Vector3::new(0.0, 0.0, 2.0), &k).unwrap();
        let j = Matrix2::new(0.0, 2.0, -2.0, 0.0);
        assert_eq!(a.fixed_view::<2, 2>(2, 2).into_owned(), j);
        assert_eq!(a.fixed_view::<2, 2>(8, 8).into_owned(), j);
        assert!(matches!(
            assemble_a::<7>(&Vector2::zeros(), &Vector3::zeros(), &k),
            Err(Error::InvalidDimension(7))
        ));
    }

    #[test]
    fn a_matrix_matches_hand_assembly() {
        let k = intr();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let p = Vector2::new(rng.gen_range(0.0..640.0), rng.gen_range(0.0..480.0));
            let w = Vector3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let a = assemble_a::<10>(&p, &w, &k).unwrap();
            let (px, py) = (p.x - 320.0, p.y - 240.0);
            let mut oracle = [[0.0f64; 10]; 10];
            oracle[0][0] = py * w.x / 500.0 - 2.0 * px * w.y / 500.0;
            oracle[0][1] = w.z + px * w.x / 500.0;
            oracle[1][0] = -w.z - py * w.y / 500.0;
            oracle[1][1] = 2.0 * py * w.x / 500.0 - px * w.y / 500.0;
            oracle[0][2] = 1.0;
            oracle[1][3] = 1.0;
            oracle[2][3] = w.z;
            oracle[3][2] = -w.z;
            oracle[4][5] = 1.0;
            oracle[8][9] = w.z;
            oracle[9][8] = -w.z;
            for r in 0..10 {
                for c in 0..10 {
                    assert_relative_eq!(a[(r, c)], oracle[r][c], epsilon = 1e-12);
                }
            }
        }
    }

    fn base_state() -> (SVector<f64, 8>, TrackCovariance<8>) {
        let s = TrackState {
            v: Vector2::new(100.0, 0.0),
            theta: 0.3,
            q: 0.5,
            ..TrackState::at_rest(Vector2::new(200.0, 150.0), Vector2::new(4.0, 3.0))
        };
        let diag = SVector::<f64, 8>::from_column_slice(&[1.0, 1.0, 50.0, 50.0, 0.1, 0.5, 0.2, 0.2]);
        (s.to_vector::<8>().unwrap(), TrackCovariance::from_diagonal(&diag))
    }

    #[test]
    fn predict_zero_dt_is_identity() {
        let (x, cov) = base_state();
        let q = noise().assemble::<8>().unwrap();
        let (x2, c2) = predict(&x, &cov, &q, &Vector3::new(0.1, 0.2, 0.3), &intr(), 0.0).unwrap();
        assert_eq!(x2, x);
        assert_eq!(c2, cov);
    }

    #[test]
    fn predict_rejects_negative_dt() {
        let (x, cov) = base_state();
        let q = noise().assemble::<8>().unwrap();
        assert!(matches!(
            predict(&x, &cov, &q, &Vector3::zeros(), &intr(), -1e-6),
            Err(Error::NegativeTimeStep(_))
        ));
    }

    #[test]
    fn predict_constant_velocity() {
        let (mut x, cov) = base_state();
        x[idx::Q] = 0.0;
        let q = noise().assemble::<8>().unwrap();
        let (x2, _) = predict(&x, &cov, &q, &Vector3::zeros(), &intr(), 1e-3).unwrap();
        assert_relative_eq!(x2[0], x[0] + 0.1, epsilon = 1e-12);
        assert_eq!(x2[1], x[1]);
        assert_eq!(x2.fixed_rows::<4>(4), x.fixed_rows::<4>(4));
    }

    #[test]
    fn covariance_matches_substep_oracle() {
        let k = intr();
        let q = noise().assemble::<8>().unwrap();
        let (x, cov) = base_state();
        let omega = Vector3::new(0.5, -0.3, 1.0);
        let gap = |dt: f64| {
            let (_, one) = predict(&x, &cov, &q, &omega, &k, dt).unwrap();
            // Ten Euler substeps of Σ̇ = AΣ + ΣAᵀ + Q with A frozen at x.
            let p = x.fixed_rows::<2>(0).into_owned();
            let a = assemble_a::<8>(&p, &omega, &k).unwrap();
            let h = dt / 10.0;
            let mut s = cov.sigma;
            for _ in 0..10 {
                let f = SMatrix::<f64, 8, 8>::identity() + a * h;
                s = f * s * f.transpose() + q * h;
            }
            (one.sigma - s).norm()
        };
        for dt in [1e-5, 1e-4] {
            assert!(gap(dt) < 1e-6 * cov.sigma.norm(), "dt {dt}: {}", gap(dt));
        }
        // The residual is second order in dt.
        let ratio = gap(1e-3) / gap(1e-4);
        assert!((ratio - 100.0).abs() < 5.0, "ratio {ratio}");
    }

    proptest::proptest! {
        #[test]
        fn stationary_predict_is_linear(scale in 0.1f64..10.0, dt in 0.0f64..1e-2) {
            let (x, cov) = base_state();
            let q = noise().assemble::<8>().unwrap();
            let k = intr();
            let (a, _) = predict(&x, &cov, &q, &Vector3::zeros(), &k, dt).unwrap();
            let (b, _) = predict(&(x * scale), &cov, &q, &Vector3::zeros(), &k, dt).unwrap();
            proptest::prop_assert!(((b - x * scale) - (a - x) * scale).amax() < 1e-9 * scale.max(1.0));
        }
    }

    fn pred_at(x: SVector<f64, 8>, cov: TrackCovariance<8>) -> PredictedState<8> {
        PredictedState {
            x_minus: x,
            sigma_minus: cov,
            t: 0,
        }
    }

    #[test]
    fn event_at_centre_with_balanced_buffer_is_a_fixed_point() {
        // Buffer residuals chosen so that G = 2n exactly and ∂G/∂λ ≠ 0.
        let s = TrackState::at_rest(Vector2::new(50.0, 50.0), Vector2::new(2.0, 2.0));
        let x = s.to_vector::<8>().unwrap();
        let n = 4;
        let mut buf = ChiBuffer::new(n, 0.0).unwrap();
        for _ in 0..n {
            buf.push(ChiRecord {
                p_minus: s.p,
                theta_minus: 0.0,
                xi: s.p + Vector2::new(2.0, 2.0),
                polarity: Polarity::Positive,
            });
        }
        let cov = TrackCovariance::from_diagonal(&SVector::<f64, 8>::from_element(1.0));
        let ev = Event::new(10, 50.0, 50.0, Polarity::Positive);
        let (x2, _) = update(&pred_at(x, cov), &ev, &buf, MeasurementMode::Combined).unwrap();
        assert_relative_eq!(x2, x, epsilon = 1e-12);
    }

    #[test]
    fn scalar_gain_pulls_towards_event_without_overshoot() {
        // Axis-aligned, diagonal prior: the x-axis decouples into a scalar
        // Kalman problem with measurement variance λ₁².
        let s = TrackState::at_rest(Vector2::new(10.0, 10.0), Vector2::new(3.0, 2.0));
        let x = s.to_vector::<8>().unwrap();
        let mut diag = SVector::<f64, 8>::from_element(1e-12);
        diag[0] = 4.0;
        let cov = TrackCovariance::from_diagonal(&diag);
        let buf = ChiBuffer::new(8, 0.0).unwrap();
        let ev = Event::new(0, 16.0, 10.0, Polarity::Positive);
        let (x2, c2) = update(&pred_at(x, cov), &ev, &buf, MeasurementMode::Combined).unwrap();
        let gain = 4.0 / (4.0 + 9.0);
        assert_relative_eq!(x2[0], 10.0 + gain * 6.0, epsilon = 1e-9);
        assert!(x2[0] > 10.0 && x2[0] < 16.0);
        assert_relative_eq!(c2.sigma[(0, 0)], (1.0 - gain) * 4.0, epsilon = 1e-9);
    }

    #[test]
    fn static_blob_converges() {
        // RMS over seeds; the sampling floor is sqrt((1.2² + 0.8²) / 500) ≈ 0.065 px.
        let truth = TrackState {
            theta: 0.4,
            ..TrackState::at_rest(Vector2::new(120.0, 80.0), Vector2::new(1.2, 0.8))
        };
        let lam = truth.shape().matrix();
        let k = intr();
        let q = ProcessNoise::isotropic(0.01, 1.0, 0.1, 0.1, 1.0, None).assemble::<8>().unwrap();
        let run = |seed: u64| {
            let init = TrackState::at_rest(Vector2::new(121.0, 79.5), Vector2::new(3.0, 3.0));
            let mut x = init.to_vector::<8>().unwrap();
            let diag = SVector::<f64, 8>::from_column_slice(&[4.0, 4.0, 40.0, 40.0, 0.5, 0.5, 4.0, 4.0]);
            let mut cov = TrackCovariance::from_diagonal(&diag);
            let mut buf = ChiBuffer::new(8, 0.01).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in 0..500 {
                let eta = Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                let xi = truth.p + lam * eta;
                let ev = Event::new(i * 20, xi.x, xi.y, Polarity::Positive);
                let (xm, cm) = predict(&x, &cov, &q, &Vector3::zeros(), &k, 20e-6).unwrap();
                let pred = PredictedState { x_minus: xm, sigma_minus: cm, t: ev.t };
                let (xn, cn) = update(&pred, &ev, &buf, MeasurementMode::Combined).unwrap();
                buf.push(ChiRecord {
                    p_minus: xm.fixed_rows::<2>(0).into_owned(),
                    theta_minus: xm[idx::THETA],
                    xi: ev.xi,
                    polarity: ev.polarity,
                });
                x = xn;
                cov = cn;
                assert!(cov.asymmetry() < 1e-9);
                assert!(cov.min_eigenvalue() >= -1e-9 * cov.trace());
            }
            (x.fixed_rows::<2>(0) - truth.p).norm_squared()
        };
        let seeds = 20;
        let rms = ((0..seeds).map(run).sum::<f64>() / seeds as f64).sqrt();
        assert!(rms < 0.1, "position rms {rms}");
    }

    #[test]
    fn q_assembly_validates_blocks() {
        assert!(noise().assemble::<8>().is_ok());
        assert!(noise().assemble::<10>().is_ok());
        let mut bad = noise();
        bad.qdelta = None;
        assert!(bad.assemble::<10>().is_err());
        let mut bad = noise();
        bad.qv = Matrix2::new(1.0, 2.0, 2.0, 1.0);
        assert!(bad.assemble::<8>().is_err());
    }
}

//! Event routing and multi-track management.
//!
//! Each event goes to the nearest live track whose predicted centre lies
//! within that track's dynamic threshold `σ`, or is discarded. `σ` is a
//! low-pass filtered multiple of the estimated blob size.

use nalgebra::{SMatrix, SVector, Vector2, Vector3};

use crate::ekf::{self, MeasurementMode, PredictedState, ProcessNoise};
use crate::error::{Error, Result};
use crate::model::{
    check_dim, idx, micros_to_secs, CameraIntrinsics, Event, GyroSample, Micros, TrackCovariance, TrackState,
    NON_FLICKER_DIM,
};
use crate::pseudo_meas::{ChiBuffer, ChiRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrackId(pub u32);

impl std::fmt::Display for TrackId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Association radius `σ`, driven by `σ̇ = −ασ + bα·max(λ̂)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DynamicThreshold {
    pub sigma: f64,
    pub alpha: f64,
    pub b: f64,
    pub last_t: Micros,
}

impl DynamicThreshold {
    pub fn new(sigma: f64, alpha: f64, b: f64, t: Micros) -> Result<Self> {
        if !(sigma > 0.0) || !(alpha > 0.0) || !(b >= 1.0) {
            return Err(Error::Config(format!(
                "threshold needs sigma > 0, alpha > 0, b >= 1 (got {sigma}, {alpha}, {b})"
            )));
        }
        Ok(Self {
            sigma,
            alpha,
            b,
            last_t: t,
        })
    }

    /// Exact discretisation over `[last_t, t]` holding `lambda_max` fixed.
    pub fn advanced(&self, t: Micros, lambda_max: f64) -> Result<Self> {
        if t < self.last_t {
            return Err(Error::OutOfOrder { t, last: self.last_t });
        }
        let discount = (-self.alpha * micros_to_secs(t - self.last_t)).exp();
        Ok(Self {
            sigma: discount * self.sigma + self.b * (1.0 - discount) * lambda_max,
            last_t: t,
            ..*self
        })
    }
}

/// Diagonal prior variances for a freshly seeded track.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovariancePrior {
    pub p: f64,
    pub v: f64,
    pub theta: f64,
    pub q: f64,
    pub lambda: f64,
    pub delta: f64,
}

impl Default for CovariancePrior {
    fn default() -> Self {
        Self {
            p: 4.0,
            v: 1.0e4,
            theta: 0.5,
            q: 5.0,
            lambda: 4.0,
            delta: 4.0,
        }
    }
}

impl CovariancePrior {
    fn diagonal<const D: usize>(&self) -> SVector<f64, D> {
        let mut d = SVector::<f64, D>::zeros();
        d[idx::P] = self.p;
        d[idx::P + 1] = self.p;
        d[idx::V] = self.v;
        d[idx::V + 1] = self.v;
        d[idx::THETA] = self.theta;
        d[idx::Q] = self.q;
        d[idx::LAMBDA] = self.lambda;
        d[idx::LAMBDA + 1] = self.lambda;
        if D == NON_FLICKER_DIM {
            d[idx::DELTA] = self.delta;
            d[idx::DELTA + 1] = self.delta;
        }
        d
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutOfOrderPolicy {
    #[default]
    Drop,
    Abort,
}

/// Everything a [`Tracker`] needs besides the event stream.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackerConfig {
    pub n_buffer: usize,
    pub beta_bound: f64,
    pub alpha: f64,
    pub b: f64,
    pub process_noise: ProcessNoise,
    pub prior: CovariancePrior,
    /// Initial principal correlations. Pick at least twice the largest
    /// expected blob size.
    pub init_lambda: Vector2<f64>,
    /// Seconds without an associated event before a track is marked lost.
    pub lost_timeout: f64,
    pub out_of_order: OutOfOrderPolicy,
    pub measurement: MeasurementMode,
    pub intrinsics: CameraIntrinsics,
    pub sensor_width: f64,
    pub sensor_height: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            n_buffer: 8,
            beta_bound: 1e-2,
            alpha: 50.0,
            b: 3.0,
            process_noise: ProcessNoise::isotropic(10.0, 1.0e6, 1.0, 10.0, 10.0, Some(10.0)),
            prior: CovariancePrior::default(),
            init_lambda: Vector2::new(10.0, 10.0),
            lost_timeout: 0.5,
            out_of_order: OutOfOrderPolicy::Drop,
            measurement: MeasurementMode::Combined,
            intrinsics: CameraIntrinsics {
                f: 500.0,
                principal_point: Vector2::new(320.0, 240.0),
            },
            sensor_width: 640.0,
            sensor_height: 480.0,
        }
    }
}

impl TrackerConfig {
    /// Sets `init_lambda` to twice the expected blob size.
    pub fn with_expected_blob_size(mut self, size: f64) -> Self {
        self.init_lambda = Vector2::new(2.0 * size, 2.0 * size);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(2..=64).contains(&self.n_buffer) {
            return bad(format!("n_buffer must be in 2..=64, got {}", self.n_buffer));
        }
        if !(self.beta_bound >= 0.0) {
            return bad(format!("beta_bound must be >= 0, got {}", self.beta_bound));
        }
        if !(self.alpha > 0.0) || !(self.b >= 1.0) {
            return bad(format!("need alpha > 0 and b >= 1, got {} and {}", self.alpha, self.b));
        }
        if !(self.init_lambda.x > 0.0 && self.init_lambda.y > 0.0) {
            return bad("init_lambda must be positive".into());
        }
        if !(self.lost_timeout > 0.0) {
            return bad(format!("lost_timeout must be > 0, got {}", self.lost_timeout));
        }
        let p = &self.prior;
        if [p.p, p.v, p.theta, p.q, p.lambda, p.delta].iter().any(|v| !(*v > 0.0)) {
            return bad("covariance prior entries must be > 0".into());
        }
        if !(self.intrinsics.f > 0.0) {
            return bad("focal length must be > 0".into());
        }
        if !(self.sensor_width > 0.0 && self.sensor_height > 0.0) {
            return bad("sensor dimensions must be > 0".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrackStatus {
    Active,
    Lost { at: Micros },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TrackStats {
    pub updates: u64,
    pub rejected: u64,
    pub first_update: Option<Micros>,
    pub last_update: Option<Micros>,
}

/// One tracked blob: filter state, chi buffer, threshold and bookkeeping.
#[derive(Clone, Debug)]
pub struct Track<const D: usize> {
    id: TrackId,
    x: SVector<f64, D>,
    cov: TrackCovariance<D>,
    buffer: ChiBuffer,
    threshold: DynamicThreshold,
    t: Micros,
    born: Micros,
    status: TrackStatus,
    stats: TrackStats,
}

impl<const D: usize> Track<D> {
    pub fn id(&self) -> TrackId {
        self.id
    }

    pub fn state(&self) -> TrackState {
        TrackState::from_vector(&self.x)
    }

    pub fn state_vector(&self) -> &SVector<f64, D> {
        &self.x
    }

    pub fn covariance(&self) -> &TrackCovariance<D> {
        &self.cov
    }

    pub fn buffer(&self) -> &ChiBuffer {
        &self.buffer
    }

    pub fn threshold(&self) -> &DynamicThreshold {
        &self.threshold
    }

    /// Time of the latest state estimate.
    pub fn timestamp(&self) -> Micros {
        self.t
    }

    pub fn born(&self) -> Micros {
        self.born
    }

    pub fn status(&self) -> TrackStatus {
        self.status
    }

    pub fn stats(&self) -> &TrackStats {
        &self.stats
    }

    pub fn is_active(&self) -> bool {
        self.status == TrackStatus::Active
    }
}

/// Output emitted for every event that updated a track.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackOutput<const D: usize> {
    pub t: Micros,
    pub id: TrackId,
    pub x: SVector<f64, D>,
    pub sigma_diag: SVector<f64, D>,
}

impl<const D: usize> TrackOutput<D> {
    pub fn state(&self) -> TrackState {
        TrackState::from_vector(&self.x)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub events: u64,
    pub matched: u64,
    pub unmatched: u64,
    pub dropped_out_of_order: u64,
    pub rejected_updates: u64,
}

/// Zero-order hold over a gyro stream. Reports zero rotation before the
/// first sample and when the stream is empty.
#[derive(Clone, Debug, Default)]
pub struct GyroSource {
    samples: Vec<GyroSample>,
    cursor: usize,
}

impl GyroSource {
    pub fn new(samples: Vec<GyroSample>) -> Self {
        Self { samples, cursor: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Latest sample at or before `t`.
    pub fn omega_at(&mut self, t: Micros) -> Vector3<f64> {
        if self.samples.is_empty() {
            return Vector3::zeros();
        }
        if self.cursor < self.samples.len() && self.samples[self.cursor].t > t {
            // Queried backwards in time.
            self.cursor = self.samples.partition_point(|s| s.t <= t).saturating_sub(1);
        }
        while self.cursor + 1 < self.samples.len() && self.samples[self.cursor + 1].t <= t {
            self.cursor += 1;
        }
        let s = &self.samples[self.cursor];
        if s.t <= t {
            s.omega
        } else {
            Vector3::zeros()
        }
    }
}

/// Nearest live track whose predicted centre is within its threshold.
/// Equal distances resolve to the lower id.
pub fn associate<const D: usize>(
    event: &Event,
    tracks: &[Track<D>],
    omega: &Vector3<f64>,
    intrinsics: &CameraIntrinsics,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, track) in tracks.iter().enumerate() {
        if !track.is_active() || event.t < track.t {
            continue;
        }
        let dt = micros_to_secs(event.t - track.t);
        let p = ekf::predict_position(&track.x, omega, intrinsics, dt);
        let dist = (event.xi - p).norm();
        if dist < track.threshold.sigma && best.map_or(true, |(_, d)| dist < d) {
            best = Some((i, dist));
        }
    }
    best.map(|(i, _)| i)
}

/// Streaming multi-target tracker. `D = 8` tracks flickering blobs,
/// `D = 10` adds the polarity offset for non-flickering ones.
#[derive(Clone, Debug)]
pub struct Tracker<const D: usize> {
    config: TrackerConfig,
    q: SMatrix<f64, D, D>,
    tracks: Vec<Track<D>>,
    gyro: GyroSource,
    last_t: Option<Micros>,
    counters: Counters,
}

pub type FlickerTracker = Tracker<8>;
pub type NonFlickerTracker = Tracker<10>;

impl<const D: usize> Tracker<D> {
    pub fn new(config: TrackerConfig) -> Result<Self> {
        check_dim(D)?;
        config.validate()?;
        let q = config.process_noise.assemble::<D>()?;
        Ok(Self {
            config,
            q,
            tracks: Vec::new(),
            gyro: GyroSource::default(),
            last_t: None,
            counters: Counters::default(),
        })
    }

    pub fn with_gyro(mut self, samples: Vec<GyroSample>) -> Self {
        self.gyro = GyroSource::new(samples);
        self
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn tracks(&self) -> &[Track<D>] {
        &self.tracks
    }

    pub fn track(&self, id: TrackId) -> Option<&Track<D>> {
        self.tracks.iter().find(|t| t.id == id)
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    /// Seeds a new track at rest at `seed`, valid from time `t`.
    pub fn init_track(&mut self, seed: Vector2<f64>, t: Micros) -> Result<TrackId> {
        let (w, h) = (self.config.sensor_width, self.config.sensor_height);
        if !(seed.x >= 0.0 && seed.x < w && seed.y >= 0.0 && seed.y < h) {
            return Err(Error::SeedOutOfBounds {
                x: seed.x,
                y: seed.y,
                width: w,
                height: h,
            });
        }
        let init = TrackState::at_rest(seed, self.config.init_lambda);
        let init = if D == NON_FLICKER_DIM {
            init.with_delta(Vector2::zeros())
        } else {
            init
        };
        let id = TrackId(self.tracks.len() as u32);
        let sigma0 = self.config.b * init.lambda_max();
        self.tracks.push(Track {
            id,
            x: init.to_vector::<D>()?,
            cov: TrackCovariance::from_diagonal(&self.config.prior.diagonal::<D>()),
            buffer: ChiBuffer::new(self.config.n_buffer, self.config.beta_bound)?,
            threshold: DynamicThreshold::new(sigma0, self.config.alpha, self.config.b, t)?,
            t,
            born: t,
            status: TrackStatus::Active,
            stats: TrackStats::default(),
        });
        Ok(id)
    }

    fn expire(&mut self, now: Micros) {
        let timeout = self.config.lost_timeout;
        for track in self.tracks.iter_mut().filter(|t| t.is_active()) {
            if micros_to_secs(now - track.t) > timeout {
                track.status = TrackStatus::Lost { at: now };
            }
        }
    }

    /// Routes one event and, if it matched, runs predict → update →
    /// buffer append → threshold advance on that track.
    pub fn process_event(&mut self, event: &Event) -> Result<Option<TrackOutput<D>>> {
        self.counters.events += 1;
        if let Some(last) = self.last_t {
            if event.t < last {
                return match self.config.out_of_order {
                    OutOfOrderPolicy::Drop => {
                        self.counters.dropped_out_of_order += 1;
                        Ok(None)
                    }
                    OutOfOrderPolicy::Abort => Err(Error::OutOfOrder { t: event.t, last }),
                };
            }
        }
        self.last_t = Some(event.t);
        self.expire(event.t);

        let omega = self.gyro.omega_at(event.t);
        let intrinsics = self.config.intrinsics;
        let Some(i) = associate(event, &self.tracks, &omega, &intrinsics) else {
            self.counters.unmatched += 1;
            return Ok(None);
        };
        self.counters.matched += 1;

        let mode = self.config.measurement;
        let track = &mut self.tracks[i];
        let dt = micros_to_secs(event.t - track.t);
        let (x_minus, sigma_minus) = ekf::predict(&track.x, &track.cov, &self.q, &omega, &intrinsics, dt)?;
        let pred = PredictedState {
            x_minus,
            sigma_minus,
            t: event.t,
        };
        match ekf::update(&pred, event, &track.buffer, mode) {
            Ok((x, cov)) => {
                track.x = x;
                track.cov = cov;
                track.stats.updates += 1;
            }
            Err(Error::SingularInnovation) => {
                track.x = x_minus;
                track.cov = sigma_minus;
                track.stats.rejected += 1;
                self.counters.rejected_updates += 1;
            }
            Err(e) => return Err(e),
        }
        track.t = event.t;
        track.stats.first_update.get_or_insert(event.t);
        track.stats.last_update = Some(event.t);
        track.buffer.push(ChiRecord {
            p_minus: x_minus.fixed_rows::<2>(idx::P).into_owned(),
            theta_minus: x_minus[idx::THETA],
            xi: event.xi,
            polarity: event.polarity,
        });
        let lambda_max = track.x[idx::LAMBDA].max(track.x[idx::LAMBDA + 1]);
        track.threshold = track.threshold.advanced(event.t, lambda_max)?;

        Ok(Some(TrackOutput {
            t: event.t,
            id: track.id,
            x: track.x,
            sigma_diag: track.cov.diagonal(),
        }))
    }

    /// Processes a whole stream, collecting every output record.
    pub fn run<'a, I>(&mut self, events: I) -> Result<Vec<TrackOutput<D>>>
    where
        I: IntoIterator<Item = &'a Event>,
    {
        let mut out = Vec::new();
        for ev in events {
            if let Some(o) = self.process_event(ev)? {
                out.push(o);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Polarity;
    use approx::assert_relative_eq;

    #[test]
    fn threshold_zero_interval_keeps_sigma() {
        let th = DynamicThreshold::new(12.0, 50.0, 3.0, 1_000).unwrap();
        assert_eq!(th.advanced(1_000, 4.0).unwrap().sigma, 12.0);
    }

    #[test]
    fn threshold_steady_state() {
        let th = DynamicThreshold::new(12.0, 50.0, 3.0, 0).unwrap();
        let th = th.advanced(10_000_000, 4.0).unwrap();
        assert_relative_eq!(th.sigma, 12.0, epsilon = 1e-12);
        let th = th.advanced(20_000_000, 5.0).unwrap();
        assert_relative_eq!(th.sigma, 15.0, epsilon = 1e-12);
    }

    #[test]
    fn threshold_closed_form() {
        let th = DynamicThreshold::new(20.0, 10.0, 3.0, 0).unwrap();
        let th = th.advanced(100_000, 5.0).unwrap();
        let e = (-1.0f64).exp();
        assert_relative_eq!(th.sigma, e * 20.0 + 15.0 * (1.0 - e), epsilon = 1e-12);
        assert!((th.sigma - 16.84).abs() < 0.005);
    }

    #[test]
    fn threshold_fixed_point_under_constant_input() {
        let mut th = DynamicThreshold::new(15.0, 50.0, 3.0, 0).unwrap();
        for k in 1..1000 {
            th = th.advanced(k * 37, 5.0).unwrap();
        }
        assert_eq!(th.sigma, 15.0);
    }

    #[test]
    fn threshold_rejects_time_reversal() {
        let th = DynamicThreshold::new(20.0, 10.0, 3.0, 500).unwrap();
        assert!(matches!(th.advanced(499, 1.0), Err(Error::OutOfOrder { .. })));
    }

    fn tracker() -> FlickerTracker {
        Tracker::new(TrackerConfig::default().with_expected_blob_size(5.0)).unwrap()
    }

    #[test]
    fn empty_set_matches_nothing() {
        let mut t = tracker();
        let ev = Event::new(0, 10.0, 10.0, Polarity::Positive);
        assert!(associate(&ev, t.tracks(), &Vector3::zeros(), &t.config.intrinsics).is_none());
        assert!(t.process_event(&ev).unwrap().is_none());
        assert_eq!(t.counters().unmatched, 1);
    }

    #[test]
    fn init_defaults() {
        let mut t = tracker();
        let a = t.init_track(Vector2::new(100.0, 200.0), 0).unwrap();
        let b = t.init_track(Vector2::new(300.0, 200.0), 0).unwrap();
        assert_ne!(a, b);
        let s = t.track(a).unwrap().state();
        assert_eq!(s.lambda, Vector2::new(10.0, 10.0));
        assert_eq!(s.v, Vector2::zeros());
        assert_eq!(s.q, 0.0);
        assert_eq!(t.track(a).unwrap().threshold().sigma, 30.0);
        assert_eq!(t.track(b).unwrap().state().p, Vector2::new(300.0, 200.0));
        assert!(t.init_track(Vector2::new(-1.0, 5.0), 0).is_err());
        assert!(t.init_track(Vector2::new(5.0, 480.0), 0).is_err());

        let mut nf = NonFlickerTracker::new(TrackerConfig::default()).unwrap();
        let id = nf.init_track(Vector2::new(10.0, 10.0), 0).unwrap();
        let track = nf.track(id).unwrap();
        assert_eq!(track.state().dim(), 10);
        assert_eq!(track.state().delta, Some(Vector2::zeros()));
    }

    #[test]
    fn nearest_of_overlapping_tracks_wins() {
        let mut t = tracker();
        t.init_track(Vector2::new(100.0, 100.0), 0).unwrap();
        let b = t.init_track(Vector2::new(110.0, 100.0), 0).unwrap();
        let ev = Event::new(10, 106.0, 100.0, Polarity::Positive);
        let i = associate(&ev, t.tracks(), &Vector3::zeros(), &t.config.intrinsics).unwrap();
        assert_eq!(t.tracks()[i].id(), b);
        // exact tie goes to the lower id
        let ev = Event::new(10, 105.0, 100.0, Polarity::Positive);
        let i = associate(&ev, t.tracks(), &Vector3::zeros(), &t.config.intrinsics).unwrap();
        assert_eq!(t.tracks()[i].id(), TrackId(0));
    }

    #[test]
    fn single_track_within_half_sigma() {
        let mut t = tracker();
        let id = t.init_track(Vector2::new(100.0, 100.0), 0).unwrap();
        let ev = Event::new(50, 115.0, 100.0, Polarity::Positive);
        let out = t.process_event(&ev).unwrap().unwrap();
        assert_eq!(out.id, id);
        assert_eq!(t.track(id).unwrap().timestamp(), 50);
        assert_eq!(t.track(id).unwrap().buffer().len(), 1);
    }

    #[test]
    fn far_event_leaves_state_untouched() {
        let mut t = tracker();
        let id = t.init_track(Vector2::new(100.0, 100.0), 0).unwrap();
        let before = t.track(id).unwrap().clone();
        assert!(t.process_event(&Event::new(5, 400.0, 400.0, Polarity::Negative)).unwrap().is_none());
        let after = t.track(id).unwrap();
        assert_eq!(after.state_vector(), before.state_vector());
        assert_eq!(after.timestamp(), before.timestamp());
    }

    #[test]
    fn out_of_order_policies() {
        let mut t = tracker();
        t.init_track(Vector2::new(100.0, 100.0), 0).unwrap();
        t.process_event(&Event::new(100, 100.0, 100.0, Polarity::Positive)).unwrap();
        assert!(t.process_event(&Event::new(50, 100.0, 100.0, Polarity::Positive)).unwrap().is_none());
        assert_eq!(t.counters().dropped_out_of_order, 1);

        let cfg = TrackerConfig {
            out_of_order: OutOfOrderPolicy::Abort,
            ..TrackerConfig::default()
        };
        let mut t = FlickerTracker::new(cfg).unwrap();
        t.process_event(&Event::new(100, 1.0, 1.0, Polarity::Positive)).unwrap();
        assert!(t.process_event(&Event::new(99, 1.0, 1.0, Polarity::Positive)).is_err());
    }

    #[test]
    fn unborn_tracks_are_skipped() {
        let mut t = tracker();
        t.init_track(Vector2::new(100.0, 100.0), 1_000).unwrap();
        assert!(t.process_event(&Event::new(500, 100.0, 100.0, Polarity::Positive)).unwrap().is_none());
        assert!(t.process_event(&Event::new(1_500, 100.0, 100.0, Polarity::Positive)).unwrap().is_some());
    }

    #[test]
    fn silent_tracks_are_lost() {
        let mut t = tracker();
        let id = t.init_track(Vector2::new(100.0, 100.0), 0).unwrap();
        t.process_event(&Event::new(600_000, 400.0, 400.0, Polarity::Positive)).unwrap();
        assert_eq!(t.track(id).unwrap().status(), TrackStatus::Lost { at: 600_000 });
        assert!(t.process_event(&Event::new(600_010, 100.0, 100.0, Polarity::Positive)).unwrap().is_none());
    }

    #[test]
    fn gyro_zero_order_hold() {
        let s = |t, z| GyroSample {
            t,
            omega: Vector3::new(0.0, 0.0, z),
        };
        let mut g = GyroSource::new(vec![s(100, 1.0), s(200, 2.0), s(300, 3.0)]);
        assert_eq!(g.omega_at(50).z, 0.0);
        assert_eq!(g.omega_at(100).z, 1.0);
        assert_eq!(g.omega_at(250).z, 2.0);
        assert_eq!(g.omega_at(1000).z, 3.0);
        assert_eq!(g.omega_at(150).z, 1.0);
        let mut one = GyroSource::new(vec![s(0, 0.5)]);
        assert_eq!(one.omega_at(1_000_000).z, 0.5);
        assert_eq!(GyroSource::default().omega_at(10), Vector3::zeros());
    }

    #[test]
    fn config_validation() {
        let mut c = TrackerConfig::default();
        c.n_buffer = 1;
        assert!(FlickerTracker::new(c.clone()).is_err());
        c.n_buffer = 65;
        assert!(c.validate().is_err());
        let c = TrackerConfig {
            b: 0.5,
            ..TrackerConfig::default()
        };
        assert!(c.validate().is_err());
        assert!(Tracker::<9>::new(TrackerConfig::default()).is_err());
    }
}

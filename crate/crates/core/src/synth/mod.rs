//! Synthetic event streams sampled from the blob generative model.
//!
//! Time is cut into fixed chunks, each with its own RNG stream derived
//! from the scenario seed, so output is identical whether chunks are
//! produced sequentially, in parallel or lazily through [`EventStream`].

pub mod scenarios;
pub mod trajectory;

use std::sync::Arc;

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{micros_to_secs, secs_to_micros, Event, GyroSample, Micros, Polarity, TrackState};
use crate::par::Parallelism;
use trajectory::{AngularVelocity, Trajectory};

pub const DEFAULT_CHUNK_US: Micros = 10_000;

/// Temporal event rate `γ(t)` in events/s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateProfile {
    Constant(f64),
    /// Linear ramp from `start` at t = 0 to `end` at t = `duration`.
    Linear { start: f64, end: f64, duration: f64 },
}

impl RateProfile {
    pub fn rate(&self, t: f64) -> f64 {
        match *self {
            Self::Constant(r) => r,
            Self::Linear { start, end, duration } => start + (end - start) * (t / duration).clamp(0.0, 1.0),
        }
    }

    fn max_over(&self, t0: f64, t1: f64) -> f64 {
        self.rate(t0).max(self.rate(t1))
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Constant(r) => r >= 0.0 && r.is_finite(),
            Self::Linear { start, end, duration } => start >= 0.0 && end >= 0.0 && duration > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid rate profile {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Contrast {
    BrightOnDark,
    DarkOnBright,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PolarityModel {
    /// Polarity is a fair coin, independent of position.
    Flicker,
    /// Edge events displaced by `±offset` px along the direction of
    /// motion. Bright-on-dark puts positive events on the leading edge.
    NonFlicker { offset: f64, contrast: Contrast },
}

impl PolarityModel {
    /// Offset `Δ` such that inliers sit at `p + ρΔ + Λη`.
    pub fn delta(&self, state: &TrackState) -> Vector2<f64> {
        match *self {
            Self::Flicker => Vector2::zeros(),
            Self::NonFlicker { offset, contrast } => {
                let speed = state.v.norm();
                if speed == 0.0 {
                    return Vector2::zeros();
                }
                let sign = match contrast {
                    Contrast::BrightOnDark => 1.0,
                    Contrast::DarkOnBright => -1.0,
                };
                state.v * (sign * offset / speed)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct TargetSpec {
    pub trajectory: Arc<dyn Trajectory>,
    pub rate: RateProfile,
    pub polarity: PolarityModel,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub targets: Vec<TargetSpec>,
    /// Uniform background rate over the whole sensor, events/s.
    pub background_rate: f64,
    pub duration: f64,
    pub width: f64,
    pub height: f64,
    pub rotation: Option<Arc<dyn AngularVelocity>>,
    pub gyro_rate_hz: f64,
    pub truth_rate_hz: f64,
    pub seed: u64,
    pub chunk_us: Micros,
}

impl Scenario {
    pub fn new(width: f64, height: f64, duration: f64, seed: u64) -> Self {
        Self {
            targets: Vec::new(),
            background_rate: 0.0,
            duration,
            width,
            height,
            rotation: None,
            gyro_rate_hz: 1000.0,
            truth_rate_hz: 1000.0,
            seed,
            chunk_us: DEFAULT_CHUNK_US,
        }
    }

    pub fn with_target(mut self, target: TargetSpec) -> Self {
        self.targets.push(target);
        self
    }

    pub fn with_background(mut self, rate: f64) -> Self {
        self.background_rate = rate;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(Error::Config(format!("zero-area sensor {}x{}", self.width, self.height)));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::Config(format!("invalid duration {}", self.duration)));
        }
        if !(self.background_rate >= 0.0) {
            return Err(Error::Config("background rate must be >= 0".into()));
        }
        if self.chunk_us <= 0 || !(self.gyro_rate_hz > 0.0) || !(self.truth_rate_hz > 0.0) {
            return Err(Error::Config("chunk length and sample rates must be > 0".into()));
        }
        self.targets.iter().try_for_each(|t| t.rate.validate())
    }

    pub fn duration_us(&self) -> Micros {
        secs_to_micros(self.duration)
    }

    pub fn chunk_count(&self) -> usize {
        let d = self.duration_us();
        ((d + self.chunk_us - 1) / self.chunk_us).max(0) as usize
    }

    pub fn truth_at(&self, target: usize, t: Micros) -> TrackState {
        self.targets[target].trajectory.state(micros_to_secs(t))
    }

    fn in_bounds(&self, xi: &Vector2<f64>) -> bool {
        xi.x >= 0.0 && xi.x < self.width && xi.y >= 0.0 && xi.y < self.height
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Source {
    Target(usize),
    Background,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabeledEvent {
    pub event: Event,
    pub source: Source,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruthSample {
    pub t: Micros,
    pub state: TrackState,
}

#[derive(Clone, Debug, Default)]
pub struct SynthOutput {
    pub events: Vec<Event>,
    pub sources: Vec<Source>,
    pub gyro: Vec<GyroSample>,
    /// One trace per target.
    pub truth: Vec<Vec<TruthSample>>,
}

fn poisson_count(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

fn fair_polarity(rng: &mut ChaCha8Rng) -> Polarity {
    if rng.gen::<bool>() {
        Polarity::Positive
    } else {
        Polarity::Negative
    }
}

/// Events whose timestamps fall in chunk `k`, sorted by time.
pub fn generate_chunk(scenario: &Scenario, k: usize) -> Vec<LabeledEvent> {
    let start = k as Micros * scenario.chunk_us;
    let end = (start + scenario.chunk_us).min(scenario.duration_us());
    if end <= start {
        return Vec::new();
    }
    let span_us = (end - start) as f64;
    let span = micros_to_secs(end - start);
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    rng.set_stream(k as u64);

    // (continuous offset in µs, event) so ties inside a microsecond keep
    // their sampled order
    let mut out: Vec<(f64, LabeledEvent)> = Vec::new();
    let stamp = |u: f64| (start + u.floor() as Micros).min(end - 1);

    for (i, target) in scenario.targets.iter().enumerate() {
        let (t0, t1) = (micros_to_secs(start), micros_to_secs(end));
        let rmax = target.rate.max_over(t0, t1);
        let count = poisson_count(&mut rng, rmax * span);
        for _ in 0..count {
            let u: f64 = rng.gen::<f64>() * span_us;
            let accept: f64 = rng.gen();
            let eta = Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            let polarity = fair_polarity(&mut rng);
            let t = stamp(u);
            let ts = micros_to_secs(t);
            if accept * rmax >= target.rate.rate(ts) {
                continue;
            }
            let state = target.trajectory.state(ts);
            let shape = state.shape().matrix();
            let xi = state.p + polarity.sign() * target.polarity.delta(&state) + shape * eta;
            if scenario.in_bounds(&xi) {
                out.push((
                    u,
                    LabeledEvent {
                        event: Event { t, xi, polarity },
                        source: Source::Target(i),
                    },
                ));
            }
        }
    }

    let count = poisson_count(&mut rng, scenario.background_rate * span);
    for _ in 0..count {
        let u: f64 = rng.gen::<f64>() * span_us;
        let xi = Vector2::new(rng.gen::<f64>() * scenario.width, rng.gen::<f64>() * scenario.height);
        let polarity = fair_polarity(&mut rng);
        out.push((
            u,
            LabeledEvent {
                event: Event { t: stamp(u), xi, polarity },
                source: Source::Background,
            },
        ));
    }

    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.into_iter().map(|(_, e)| e).collect()
}

/// Gyro stream at the scenario's sample rate; empty without rotation.
pub fn gyro_samples(scenario: &Scenario) -> Vec<GyroSample> {
    let Some(rot) = &scenario.rotation else {
        return Vec::new();
    };
    sample_times(scenario.duration, scenario.gyro_rate_hz)
        .map(|t| GyroSample {
            t,
            omega: rot.omega(micros_to_secs(t)),
        })
        .collect()
}

pub fn truth_samples(scenario: &Scenario) -> Vec<Vec<TruthSample>> {
    (0..scenario.targets.len())
        .map(|i| {
            sample_times(scenario.duration, scenario.truth_rate_hz)
                .map(|t| TruthSample {
                    t,
                    state: scenario.truth_at(i, t),
                })
                .collect()
        })
        .collect()
}

fn sample_times(duration: f64, rate_hz: f64) -> impl Iterator<Item = Micros> {
    let n = (duration * rate_hz).floor() as u64;
    (0..=n).map(move |k| secs_to_micros(k as f64 / rate_hz))
}

/// Materialises the whole scenario.
pub fn generate(scenario: &Scenario, par: Parallelism) -> Result<SynthOutput> {
    scenario.validate()?;
    let chunks = par.map_indexed(scenario.chunk_count(), |k| generate_chunk(scenario, k));
    let total = chunks.iter().map(Vec::len).sum();
    let mut events = Vec::with_capacity(total);
    let mut sources = Vec::with_capacity(total);
    for e in chunks.into_iter().flatten() {
        events.push(e.event);
        sources.push(e.source);
    }
    Ok(SynthOutput {
        events,
        sources,
        gyro: gyro_samples(scenario),
        truth: truth_samples(scenario),
    })
}

/// Lazily generated event stream with memory bounded by one chunk.
#[derive(Debug)]
pub struct EventStream<'a> {
    scenario: &'a Scenario,
    next_chunk: usize,
    chunks: usize,
    current: std::vec::IntoIter<LabeledEvent>,
}

impl<'a> EventStream<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self> {
        scenario.validate()?;
        Ok(Self {
            scenario,
            next_chunk: 0,
            chunks: scenario.chunk_count(),
            current: Vec::new().into_iter(),
        })
    }
}

impl Iterator for EventStream<'_> {
    type Item = LabeledEvent;

    fn next(&mut self) -> Option<LabeledEvent> {
        loop {
            if let Some(e) = self.current.next() {
                return Some(e);
            }
            if self.next_chunk >= self.chunks {
                return None;
            }
            self.current = generate_chunk(self.scenario, self.next_chunk).into_iter();
            self.next_chunk += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::trajectory::Fixed;
    use super::*;

    fn blob(rate: f64) -> TargetSpec {
        TargetSpec {
            trajectory: Arc::new(Fixed {
                p: Vector2::new(100.0, 80.0),
                theta: 0.3,
                lambda: Vector2::new(3.0, 2.0),
            }),
            rate: RateProfile::Constant(rate),
            polarity: PolarityModel::Flicker,
        }
    }

    #[test]
    fn zero_area_sensor_rejected() {
        let s = Scenario::new(0.0, 10.0, 1.0, 1);
        assert!(generate(&s, Parallelism::Sequential).is_err());
    }

    #[test]
    fn poisson_count_in_three_sigma() {
        let s = Scenario::new(200.0, 200.0, 1.0, 3).with_target(blob(1000.0));
        let n = generate(&s, Parallelism::Sequential).unwrap().events.len();
        assert!((905..=1095).contains(&n), "{n}");
    }

    #[test]
    fn timestamps_sorted_and_in_range() {
        let s = Scenario::new(200.0, 200.0, 0.25, 5).with_target(blob(20_000.0)).with_background(5_000.0);
        let out = generate(&s, Parallelism::Sequential).unwrap();
        assert!(out.events.windows(2).all(|w| w[0].t <= w[1].t));
        assert!(out.events.iter().all(|e| (0..250_000).contains(&e.t)));
        assert_eq!(out.events.len(), out.sources.len());
    }

    #[test]
    fn stream_matches_batch_and_parallel() {
        let s = Scenario::new(200.0, 200.0, 0.1, 9).with_target(blob(30_000.0)).with_background(10_000.0);
        let a = generate(&s, Parallelism::Sequential).unwrap();
        let b = generate(&s, Parallelism::Rayon).unwrap();
        let c: Vec<Event> = EventStream::new(&s).unwrap().map(|e| e.event).collect();
        assert_eq!(a.events, b.events);
        assert_eq!(a.events, c);
        let d = generate(&s.clone().with_seed(10), Parallelism::Sequential).unwrap();
        assert_ne!(a.events, d.events);
    }

    #[test]
    fn linear_rate_thins() {
        let mut t = blob(0.0);
        t.rate = RateProfile::Linear {
            start: 0.0,
            end: 20_000.0,
            duration: 1.0,
        };
        let s = Scenario::new(200.0, 200.0, 1.0, 2).with_target(t);
        let ev = generate(&s, Parallelism::Sequential).unwrap().events;
        // expected 10_000 total, 2_500 in the first half
        assert!((ev.len() as f64 - 10_000.0).abs() < 400.0);
        let early = ev.iter().filter(|e| e.t < 500_000).count() as f64;
        assert!((early - 2_500.0).abs() < 200.0, "{early}");
    }

    #[test]
    fn sample_grids() {
        let mut s = Scenario::new(10.0, 10.0, 0.01, 0);
        assert!(gyro_samples(&s).is_empty());
        s.rotation = Some(Arc::new(trajectory::SinusoidalRotation {
            amplitude: nalgebra::Vector3::zeros(),
            frequency: nalgebra::Vector3::zeros(),
            phase: nalgebra::Vector3::zeros(),
        }));
        let g = gyro_samples(&s);
        assert_eq!(g.len(), 11);
        assert_eq!(g[1].t, 1000);
        assert!(g.iter().all(|x| x.omega == nalgebra::Vector3::zeros()));
    }
}

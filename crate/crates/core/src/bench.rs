//! Throughput measurement of the tracking loop over growing stream sizes.
//!
//! Events are generated ahead of the clock in batches of chunks; only
//! `process_event` calls are timed.

use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::Vector2;

use crate::assoc::{FlickerTracker, TrackerConfig};
use crate::ekf::ProcessNoise;
use crate::error::{Error, Result};
use crate::par::Parallelism;
use crate::synth::trajectory::Spinning;
use crate::synth::{generate_chunk, PolarityModel, RateProfile, Scenario, TargetSpec};

pub const DEFAULT_SIZES: [u64; 3] = [100_000, 1_000_000, 10_000_000];

const TARGETS: usize = 4;
const INLIER_RATE: f64 = 50_000.0;
const BACKGROUND_RATE: f64 = 300_000.0;
const BATCH_CHUNKS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchPoint {
    pub events: u64,
    pub matched: u64,
    pub elapsed: Duration,
}

impl BenchPoint {
    pub fn events_per_sec(&self) -> f64 {
        self.events as f64 / self.elapsed.as_secs_f64()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub points: Vec<BenchPoint>,
    /// Slope of log time against log size.
    pub exponent: f64,
}

/// Four blobs circling at 0.5 rev/s over 300 kev/s of background.
pub fn bench_scenario(events: u64, seed: u64) -> Scenario {
    let total = TARGETS as f64 * INLIER_RATE + BACKGROUND_RATE;
    // 2% headroom so the stream never runs short of `events`
    let duration = (events as f64 / total * 1.02).max(0.01);
    let mut s = Scenario::new(640.0, 480.0, duration, seed).with_background(BACKGROUND_RATE);
    for i in 0..TARGETS {
        let center = Vector2::new(160.0 + 320.0 * (i % 2) as f64, 120.0 + 240.0 * (i / 2) as f64);
        s = s.with_target(TargetSpec {
            trajectory: Arc::new(Spinning {
                center,
                radius: 60.0,
                rev_start: 0.5,
                rev_end: 0.5,
                duration,
                lambda: Vector2::new(4.0, 3.0),
            }),
            rate: RateProfile::Constant(INLIER_RATE),
            polarity: PolarityModel::Flicker,
        });
    }
    s
}

/// Tracker seeded on every target of a [`bench_scenario`].
pub fn bench_tracker(scenario: &Scenario) -> Result<FlickerTracker> {
    let cfg = TrackerConfig {
        process_noise: ProcessNoise::isotropic(1.0, 1.0e6, 1.0, 10.0, 1.0, None),
        ..TrackerConfig::default()
    }
    .with_expected_blob_size(4.0);
    let mut tracker = FlickerTracker::new(cfg)?;
    for i in 0..scenario.targets.len() {
        tracker.init_track(scenario.truth_at(i, 0).p, 0)?;
    }
    Ok(tracker)
}

/// Times the tracker over the first `events` events of the bench stream.
pub fn time_stream(events: u64, seed: u64, par: Parallelism) -> Result<BenchPoint> {
    let scenario = bench_scenario(events, seed);
    scenario.validate()?;
    let mut tracker = bench_tracker(&scenario)?;
    let chunks = scenario.chunk_count();
    let mut remaining = events;
    let mut elapsed = Duration::ZERO;
    let mut next = 0;
    while remaining > 0 && next < chunks {
        let batch = BATCH_CHUNKS.min(chunks - next);
        let base = next;
        let generated = par.map_indexed(batch, |k| generate_chunk(&scenario, base + k));
        next += batch;
        let start = Instant::now();
        for e in generated.iter().flatten() {
            if remaining == 0 {
                break;
            }
            tracker.process_event(&e.event)?;
            remaining -= 1;
        }
        elapsed += start.elapsed();
    }
    if remaining > 0 {
        return Err(Error::Domain(format!("bench stream ran {remaining} events short")));
    }
    Ok(BenchPoint {
        events,
        matched: tracker.counters().matched,
        elapsed,
    })
}

/// Least-squares slope of `ln t` on `ln n`.
pub fn fit_exponent(points: &[BenchPoint]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Domain("need at least two sizes to fit an exponent".into()));
    }
    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|p| ((p.events as f64).ln(), p.elapsed.as_secs_f64().max(1e-9).ln()))
        .collect();
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("sizes must differ to fit an exponent".into()));
    }
    Ok(xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

pub fn run_bench(sizes: &[u64], seed: u64, par: Parallelism) -> Result<BenchReport> {
    if sizes.iter().any(|&n| n == 0) {
        return Err(Error::Domain("bench sizes must be > 0".into()));
    }
    let points = sizes
        .iter()
        .map(|&n| time_stream(n, seed, par))
        .collect::<Result<Vec<_>>>()?;
    let exponent = fit_exponent(&points)?;
    Ok(BenchReport { points, exponent })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(events: u64, secs: f64) -> BenchPoint {
        BenchPoint {
            events,
            matched: 0,
            elapsed: Duration::from_secs_f64(secs),
        }
    }

    #[test]
    fn exponent_of_power_laws() {
        let lin = [point(10, 1.0), point(100, 10.0), point(1000, 100.0)];
        assert!((fit_exponent(&lin).unwrap() - 1.0).abs() < 1e-9);
        let quad = [point(10, 1.0), point(100, 100.0)];
        assert!((fit_exponent(&quad).unwrap() - 2.0).abs() < 1e-9);
        assert!(fit_exponent(&lin[..1]).is_err());
    }

    #[test]
    fn small_stream_processes_exact_count() {
        let p = time_stream(20_000, 1, Parallelism::Sequential).unwrap();
        assert_eq!(p.events, 20_000);
        assert!(p.matched > 0 && p.matched < 20_000);
    }
}

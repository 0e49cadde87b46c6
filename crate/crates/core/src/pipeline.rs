//! End-to-end tracking run: events in, track/summary/TTC/range CSVs out.

use std::io::Write;

use nalgebra::Vector2;

use crate::analytics::{range_estimate, TtcSampler};
use crate::assoc::{Counters, TrackId, Tracker};
use crate::config::{Mode, RunConfig};
use crate::error::Result;
use crate::io::{counters_metadata, summary_row, ttc_row, CsvOut, Metadata, TrackCsv, RANGE_HEADER, SUMMARY_HEADER, TTC_HEADER};
use crate::model::{Event, GyroSample, FLICKER_DIM, NON_FLICKER_DIM};

/// Output destinations. TTC and range sinks are only written when the
/// configuration asks for pairs or targets.
pub struct Sinks<W: Write> {
    pub tracks: W,
    pub summary: W,
    pub ttc: Option<W>,
    pub range: Option<W>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunSummary {
    pub counters: Counters,
    pub ttc_samples: u64,
    pub ttc_skipped: u64,
    pub range_samples: u64,
}

pub fn run_track<I, W>(config: &RunConfig, events: I, gyro: Vec<GyroSample>, extra: &Metadata, sinks: Sinks<W>) -> Result<RunSummary>
where
    I: IntoIterator<Item = Result<Event>>,
    W: Write,
{
    match config.mode {
        Mode::Flicker => run::<FLICKER_DIM, I, W>(config, events, gyro, extra, sinks),
        Mode::NonFlicker => run::<NON_FLICKER_DIM, I, W>(config, events, gyro, extra, sinks),
    }
}

fn run<const D: usize, I, W>(config: &RunConfig, events: I, gyro: Vec<GyroSample>, extra: &Metadata, sinks: Sinks<W>) -> Result<RunSummary>
where
    I: IntoIterator<Item = Result<Event>>,
    W: Write,
{
    config.validate()?;
    let mut meta = config.to_metadata();
    meta.extend(extra.iter().cloned());

    let mut tracker = Tracker::<D>::new(config.tracker.clone())?.with_gyro(gyro);
    for s in &config.seeds {
        tracker.init_track(Vector2::new(s.x, s.y), s.t)?;
    }
    let mut samplers: Vec<TtcSampler> = config
        .ttc_pairs
        .iter()
        .map(|&(l, r)| TtcSampler::new(TrackId(l), TrackId(r), config.ttc_threshold))
        .collect();

    let mut track_csv = TrackCsv::new(sinks.tracks, &meta, D)?;
    let mut ttc_csv = match sinks.ttc {
        Some(w) if !samplers.is_empty() => Some(CsvOut::new(w, &meta, &TTC_HEADER)?),
        _ => None,
    };
    let mut range_csv = match sinks.range {
        Some(w) if !config.range_targets.is_empty() => Some(CsvOut::new(w, &meta, &RANGE_HEADER)?),
        _ => None,
    };

    let mut summary = RunSummary::default();
    let intrinsics = config.tracker.intrinsics;
    for ev in events {
        let Some(out) = tracker.process_event(&ev?)? else {
            continue;
        };
        track_csv.write(&out)?;
        for s in samplers.iter_mut() {
            if let Some(sample) = s.push(&out) {
                summary.ttc_samples += 1;
                if let Some(w) = ttc_csv.as_mut() {
                    w.row(ttc_row(s.left.0, s.right.0, &sample))?;
                }
            }
        }
        for target in config.range_targets.iter().filter(|r| r.id == out.id.0) {
            let r = range_estimate(&out.state(), target.diameter_m, &intrinsics)?;
            summary.range_samples += 1;
            if let Some(w) = range_csv.as_mut() {
                w.row([out.t.to_string(), out.id.to_string(), r.to_string()])?;
            }
        }
    }
    track_csv.finish()?;
    if let Some(w) = ttc_csv {
        w.finish()?;
    }
    if let Some(w) = range_csv {
        w.finish()?;
    }

    summary.counters = *tracker.counters();
    summary.ttc_skipped = samplers.iter().map(TtcSampler::skipped).sum();
    let mut summary_meta = meta;
    summary_meta.extend(counters_metadata(&summary.counters));
    summary_meta.push(("ttc_samples".into(), summary.ttc_samples.to_string()));
    summary_meta.push(("ttc_skipped".into(), summary.ttc_skipped.to_string()));
    let mut summary_csv = CsvOut::new(sinks.summary, &summary_meta, &SUMMARY_HEADER)?;
    for t in tracker.tracks() {
        summary_csv.row(summary_row(t))?;
    }
    summary_csv.finish()?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{KeyValues, TrackSeed};

    fn sinks() -> Sinks<Vec<u8>> {
        Sinks {
            tracks: Vec::new(),
            summary: Vec::new(),
            ttc: Some(Vec::new()),
            range: Some(Vec::new()),
        }
    }

    #[test]
    fn empty_stream_gives_empty_outputs() {
        let cfg = RunConfig::from_kv(&KeyValues::parse("track=10,10").unwrap()).unwrap();
        let s = run_track(&cfg, std::iter::empty(), Vec::new(), &Metadata::new(), sinks()).unwrap();
        assert_eq!(s.counters, Counters::default());
    }

    #[test]
    fn writes_one_row_per_matched_event() {
        let mut cfg = RunConfig::default();
        cfg.seeds.push(TrackSeed { x: 100.0, y: 100.0, t: 0 });
        let events: Vec<Result<Event>> = (0..50)
            .map(|i| Ok(Event::new(i * 10, 100.0 + (i % 3) as f64, 100.0, crate::model::Polarity::Positive)))
            .chain(std::iter::once(Ok(Event::new(1000, 500.0, 400.0, crate::model::Polarity::Negative))))
            .collect();
        let mut tracks = Vec::new();
        let mut summary = Vec::new();
        let s = run_track(
            &cfg,
            events,
            Vec::new(),
            &Metadata::new(),
            Sinks {
                tracks: &mut tracks,
                summary: &mut summary,
                ttc: None,
                range: None,
            },
        )
        .unwrap();
        assert_eq!(s.counters.matched, 50);
        assert_eq!(s.counters.unmatched, 1);
        let text = String::from_utf8(tracks).unwrap();
        let rows = text.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(rows, 51);
        assert!(String::from_utf8(summary).unwrap().contains("# events_matched=50"));
    }
}

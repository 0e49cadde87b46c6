//! CSV readers and writers for events, gyro, ground truth and outputs.
//!
//! Every file starts with optional `# key=value` comment lines followed
//! by a one-line header. Readers stream row by row; writers emit the
//! metadata block first.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Vector3;

use crate::analytics::TtcSample;
use crate::assoc::{Counters, OutOfOrderPolicy, Track, TrackOutput, TrackStatus};
use crate::error::{Error, Result};
use crate::model::{idx, Event, GyroSample, Micros, Polarity, NON_FLICKER_DIM};
use crate::synth::TruthSample;

pub const EVENT_HEADER: [&str; 4] = ["t_us", "x", "y", "p"];
pub const GYRO_HEADER: [&str; 4] = ["t_us", "wx", "wy", "wz"];
pub const TRUTH_HEADER: [&str; 9] = ["t_us", "px", "py", "vx", "vy", "theta", "q", "l1", "l2"];
pub const TTC_HEADER: [&str; 7] = ["t_us", "left", "right", "s", "v_rel", "inv_tau", "flag"];
pub const RANGE_HEADER: [&str; 3] = ["t_us", "track_id", "range_m"];
pub const SUMMARY_HEADER: [&str; 7] = ["track_id", "born_us", "first_update_us", "last_update_us", "updates", "rejected", "status"];

/// Ordered `key=value` pairs written as comment lines.
pub type Metadata = Vec<(String, String)>;

fn csv_reader<R: Read>(inner: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(inner)
}

fn check_header<R: Read>(reader: &mut csv::Reader<R>, expected: &[&str], path: &str) -> Result<()> {
    let header = reader.headers()?.clone();
    if header.is_empty() && reader.is_done() {
        return Ok(());
    }
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse {
            path: path.to_string(),
            line: header.position().map_or(1, |p| p.line()),
            msg: format!("expected header '{}', got '{}'", expected.join(","), header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    Ok(())
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize, name: &str, path: &str) -> Result<T> {
    let line = record.position().map_or(0, |p| p.line());
    let raw = record.get(i).ok_or_else(|| Error::Parse {
        path: path.to_string(),
        line,
        msg: format!("missing column '{name}'"),
    })?;
    raw.parse().map_err(|_| Error::Parse {
        path: path.to_string(),
        line,
        msg: format!("bad value '{raw}' for '{name}'"),
    })
}

fn expect_width(record: &csv::StringRecord, n: usize, path: &str) -> Result<()> {
    if record.len() != n {
        return Err(Error::Parse {
            path: path.to_string(),
            line: record.position().map_or(0, |p| p.line()),
            msg: format!("expected {n} columns, got {}", record.len()),
        });
    }
    Ok(())
}

/// Streaming event reader enforcing non-decreasing timestamps.
pub struct EventReader<R: Read> {
    reader: csv::Reader<R>,
    record: csv::StringRecord,
    path: String,
    policy: OutOfOrderPolicy,
    last_t: Option<Micros>,
    dropped: u64,
}

impl<R: Read> EventReader<R> {
    pub fn new(inner: R, path: &str, policy: OutOfOrderPolicy) -> Result<Self> {
        let mut reader = csv_reader(inner);
        check_header(&mut reader, &EVENT_HEADER, path)?;
        Ok(Self {
            reader,
            record: csv::StringRecord::new(),
            path: path.to_string(),
            policy,
            last_t: None,
            dropped: 0,
        })
    }

    /// Rows discarded for going back in time.
    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    fn parse(&self) -> Result<Event> {
        let r = &self.record;
        expect_width(r, 4, &self.path)?;
        let t: Micros = field(r, 0, "t_us", &self.path)?;
        let x: f64 = field(r, 1, "x", &self.path)?;
        let y: f64 = field(r, 2, "y", &self.path)?;
        let p: i64 = field(r, 3, "p", &self.path)?;
        let polarity = Polarity::from_i64(p).ok_or_else(|| Error::Parse {
            path: self.path.clone(),
            line: r.position().map_or(0, |p| p.line()),
            msg: format!("bad polarity {p}"),
        })?;
        Ok(Event::new(t, x, y, polarity))
    }
}

impl EventReader<BufReader<File>> {
    pub fn open(path: &Path, policy: OutOfOrderPolicy) -> Result<Self> {
        let file = BufReader::new(File::open(path)?);
        Self::new(file, &path.display().to_string(), policy)
    }
}

impl<R: Read> Iterator for EventReader<R> {
    type Item = Result<Event>;

    fn next(&mut self) -> Option<Result<Event>> {
        loop {
            match self.reader.read_record(&mut self.record) {
                Ok(false) => return None,
                Ok(true) => {}
                Err(e) => return Some(Err(e.into())),
            }
            let ev = match self.parse() {
                Ok(ev) => ev,
                Err(e) => return Some(Err(e)),
            };
            if let Some(last) = self.last_t {
                if ev.t < last {
                    match self.policy {
                        OutOfOrderPolicy::Drop => {
                            self.dropped += 1;
                            continue;
                        }
                        OutOfOrderPolicy::Abort => return Some(Err(Error::OutOfOrder { t: ev.t, last })),
                    }
                }
            }
            self.last_t = Some(ev.t);
            return Some(Ok(ev));
        }
    }
}

pub fn read_events(path: &Path) -> Result<Vec<Event>> {
    EventReader::open(path, OutOfOrderPolicy::Abort)?.collect()
}

/// Whole gyro file, sorted by time. Gyro streams are small compared to
/// event streams, so they are loaded eagerly.
pub fn read_gyro_from<R: Read>(inner: R, path: &str) -> Result<Vec<GyroSample>> {
    let mut reader = csv_reader(inner);
    check_header(&mut reader, &GYRO_HEADER, path)?;
    let mut out: Vec<GyroSample> = Vec::new();
    for record in reader.records() {
        let r = record?;
        expect_width(&r, 4, path)?;
        let t: Micros = field(&r, 0, "t_us", path)?;
        let omega = Vector3::new(field(&r, 1, "wx", path)?, field(&r, 2, "wy", path)?, field(&r, 3, "wz", path)?);
        if let Some(prev) = out.last() {
            if t < prev.t {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: r.position().map_or(0, |p| p.line()),
                    msg: format!("gyro timestamp {t} before {}", prev.t),
                });
            }
        }
        out.push(GyroSample { t, omega });
    }
    Ok(out)
}

pub fn read_gyro(path: &Path) -> Result<Vec<GyroSample>> {
    read_gyro_from(BufReader::new(File::open(path)?), &path.display().to_string())
}

pub fn read_truth(path: &Path) -> Result<Vec<TruthSample>> {
    let name = path.display().to_string();
    let mut reader = csv_reader(BufReader::new(File::open(path)?));
    check_header(&mut reader, &TRUTH_HEADER, &name)?;
    reader
        .records()
        .map(|record| {
            let r = record?;
            expect_width(&r, 9, &name)?;
            let g = |i: usize| field::<f64>(&r, i, TRUTH_HEADER[i], &name);
            let state = crate::model::TrackState {
                p: nalgebra::Vector2::new(g(1)?, g(2)?),
                v: nalgebra::Vector2::new(g(3)?, g(4)?),
                theta: g(5)?,
                q: g(6)?,
                lambda: nalgebra::Vector2::new(g(7)?, g(8)?),
                delta: None,
            };
            Ok(TruthSample {
                t: field(&r, 0, "t_us", &name)?,
                state,
            })
        })
        .collect()
}

/// CSV writer preceded by a metadata comment block.
pub struct CsvOut<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> CsvOut<W> {
    pub fn new(mut sink: W, metadata: &Metadata, header: &[&str]) -> Result<Self> {
        for (k, v) in metadata {
            writeln!(sink, "# {k}={v}")?;
        }
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
        inner.write_record(header)?;
        Ok(Self { inner })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

impl CsvOut<BufWriter<File>> {
    pub fn create(path: &Path, metadata: &Metadata, header: &[&str]) -> Result<Self> {
        Self::new(BufWriter::new(File::create(path)?), metadata, header)
    }
}

pub fn write_events<W: Write>(sink: W, metadata: &Metadata, events: &[Event]) -> Result<W> {
    let mut out = CsvOut::new(sink, metadata, &EVENT_HEADER)?;
    for e in events {
        out.row([e.t.to_string(), e.xi.x.to_string(), e.xi.y.to_string(), e.polarity.as_i8().to_string()])?;
    }
    out.finish()
}

pub fn write_gyro<W: Write>(sink: W, metadata: &Metadata, gyro: &[GyroSample]) -> Result<W> {
    let mut out = CsvOut::new(sink, metadata, &GYRO_HEADER)?;
    for g in gyro {
        out.row([g.t.to_string(), g.omega.x.to_string(), g.omega.y.to_string(), g.omega.z.to_string()])?;
    }
    out.finish()
}

pub fn write_truth<W: Write>(sink: W, metadata: &Metadata, truth: &[TruthSample]) -> Result<W> {
    let mut out = CsvOut::new(sink, metadata, &TRUTH_HEADER)?;
    for s in truth {
        let x = &s.state;
        out.row([
            s.t.to_string(),
            x.p.x.to_string(),
            x.p.y.to_string(),
            x.v.x.to_string(),
            x.v.y.to_string(),
            x.theta.to_string(),
            x.q.to_string(),
            x.lambda.x.to_string(),
            x.lambda.y.to_string(),
        ])?;
    }
    out.finish()
}

const STATE_NAMES: [&str; 10] = ["px", "py", "vx", "vy", "theta", "q", "l1", "l2", "dx", "dy"];

/// Header of the per-event track CSV for a `D`-dimensional state.
pub fn track_header(dim: usize) -> Vec<String> {
    let mut h = vec!["t_us".to_string(), "track_id".to_string()];
    h.extend(STATE_NAMES[..dim].iter().map(|s| s.to_string()));
    h.extend(STATE_NAMES[..dim].iter().map(|s| format!("var_{s}")));
    h
}

pub struct TrackCsv<W: Write> {
    out: CsvOut<W>,
}

impl<W: Write> TrackCsv<W> {
    pub fn new(sink: W, metadata: &Metadata, dim: usize) -> Result<Self> {
        let header = track_header(dim);
        let refs: Vec<&str> = header.iter().map(String::as_str).collect();
        Ok(Self {
            out: CsvOut::new(sink, metadata, &refs)?,
        })
    }

    pub fn write<const D: usize>(&mut self, o: &TrackOutput<D>) -> Result<()> {
        let fields = [o.t.to_string(), o.id.to_string()]
            .into_iter()
            .chain(o.x.iter().map(f64::to_string))
            .chain(o.sigma_diag.iter().map(f64::to_string));
        self.out.row(fields)
    }

    pub fn finish(self) -> Result<W> {
        self.out.finish()
    }
}

/// Parsed row of a track CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackRow {
    pub t: Micros,
    pub id: u32,
    pub state: crate::model::TrackState,
}

pub fn read_tracks(path: &Path) -> Result<Vec<TrackRow>> {
    let name = path.display().to_string();
    let mut reader = csv_reader(BufReader::new(File::open(path)?));
    let header = reader.headers()?.clone();
    let dim = match header.len() {
        n if n == 2 + 2 * 8 => 8,
        n if n == 2 + 2 * NON_FLICKER_DIM => NON_FLICKER_DIM,
        n => {
            return Err(Error::Parse {
                path: name,
                line: 1,
                msg: format!("unexpected track header width {n}"),
            })
        }
    };
    reader
        .records()
        .map(|record| {
            let r = record?;
            let g = |i: usize| field::<f64>(&r, 2 + i, STATE_NAMES[i], &name);
            let v2 = |i: usize| -> Result<nalgebra::Vector2<f64>> { Ok(nalgebra::Vector2::new(g(i)?, g(i + 1)?)) };
            Ok(TrackRow {
                t: field(&r, 0, "t_us", &name)?,
                id: field(&r, 1, "track_id", &name)?,
                state: crate::model::TrackState {
                    p: v2(idx::P)?,
                    v: v2(idx::V)?,
                    theta: g(idx::THETA)?,
                    q: g(idx::Q)?,
                    lambda: v2(idx::LAMBDA)?,
                    delta: if dim == NON_FLICKER_DIM { Some(v2(idx::DELTA)?) } else { None },
                },
            })
        })
        .collect()
}

pub fn ttc_row(left: u32, right: u32, s: &TtcSample) -> [String; 7] {
    [
        s.t.to_string(),
        left.to_string(),
        right.to_string(),
        s.s.to_string(),
        s.v_rel.to_string(),
        s.inv_tau.to_string(),
        s.flag.as_str().to_string(),
    ]
}

pub fn counters_metadata(c: &Counters) -> Metadata {
    vec![
        ("events_read".into(), c.events.to_string()),
        ("events_matched".into(), c.matched.to_string()),
        ("events_unmatched".into(), c.unmatched.to_string()),
        ("events_dropped_out_of_order".into(), c.dropped_out_of_order.to_string()),
        ("updates_rejected".into(), c.rejected_updates.to_string()),
    ]
}

pub fn summary_row<const D: usize>(track: &Track<D>) -> [String; 7] {
    let opt = |t: Option<Micros>| t.map_or(String::new(), |t| t.to_string());
    let stats = track.stats();
    let status = match track.status() {
        TrackStatus::Active => "active".to_string(),
        TrackStatus::Lost { at } => format!("lost@{at}"),
    };
    [
        track.id().to_string(),
        track.born().to_string(),
        opt(stats.first_update),
        opt(stats.last_update),
        stats.updates.to_string(),
        stats.rejected.to_string(),
        status,
    ]
}

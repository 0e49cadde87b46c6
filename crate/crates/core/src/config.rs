//! Run configuration from `key=value` text with command-line overrides.
//!
//! Precedence is overrides > file > defaults. Keys may repeat where a
//! list is expected (`track`, `ttc_pair`, `range_target`). Keys under the
//! `synth.` prefix belong to the generator front end and are ignored here.

use std::path::Path;
use std::str::FromStr;

use nalgebra::{Matrix2, Vector2};

use crate::analytics::DEFAULT_TTC_THRESHOLD;
use crate::assoc::{CovariancePrior, OutOfOrderPolicy, TrackerConfig};
use crate::ekf::MeasurementMode;
use crate::error::{Error, Result};
use crate::io::Metadata;
use crate::model::{CameraIntrinsics, Micros};

/// Ordered `key=value` entries. Later entries win for scalar keys.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key=value, got '{line}'", n + 1)))?;
            entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(Self { entries })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses `key=value` override strings.
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let text: Vec<String> = pairs.into_iter().map(|s| s.as_ref().to_string()).collect();
        Self::parse(&text.join("\n"))
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    /// Layers `other` on top. List keys present in `other` replace the
    /// base list rather than appending to it.
    pub fn overlay(&self, other: &KeyValues) -> KeyValues {
        let mut entries: Vec<(String, String)> = self
            .entries
            .iter()
            .filter(|(k, _)| !LIST_KEYS.contains(&k.as_str()) || other.get_all(k).next().is_none())
            .cloned()
            .collect();
        entries.extend(other.entries.iter().cloned());
        KeyValues { entries }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries.iter().filter(move |(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| Error::Config(format!("bad value '{v}' for '{key}'"))))
            .transpose()
    }
}

const LIST_KEYS: [&str; 3] = ["track", "ttc_pair", "range_target"];

const SCALAR_KEYS: [&str; 28] = [
    "mode",
    "n_buffer",
    "beta_bound",
    "alpha",
    "b",
    "q_p",
    "q_v",
    "q_theta",
    "q_q",
    "q_lambda",
    "q_delta",
    "prior_p",
    "prior_v",
    "prior_theta",
    "prior_q",
    "prior_lambda",
    "prior_delta",
    "init_lambda",
    "blob_size",
    "lost_timeout",
    "out_of_order",
    "measurement",
    "f",
    "cx",
    "cy",
    "width",
    "height",
    "ttc_threshold",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    #[default]
    Flicker,
    NonFlicker,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flicker" => Ok(Self::Flicker),
            "non_flicker" | "nonflicker" => Ok(Self::NonFlicker),
            other => Err(Error::Config(format!("unknown mode '{other}'"))),
        }
    }
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Flicker => "flicker",
            Self::NonFlicker => "non_flicker",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Self::Flicker => crate::model::FLICKER_DIM,
            Self::NonFlicker => crate::model::NON_FLICKER_DIM,
        }
    }
}

/// Track seed at pixel `(x, y)`, active from time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackSeed {
    pub x: f64,
    pub y: f64,
    pub t: Micros,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeTarget {
    pub id: u32,
    pub diameter_m: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub tracker: TrackerConfig,
    pub seeds: Vec<TrackSeed>,
    pub ttc_pairs: Vec<(u32, u32)>,
    pub ttc_threshold: f64,
    pub range_targets: Vec<RangeTarget>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Flicker,
            tracker: TrackerConfig::default(),
            seeds: Vec::new(),
            ttc_pairs: Vec::new(),
            ttc_threshold: DEFAULT_TTC_THRESHOLD,
            range_targets: Vec::new(),
        }
    }
}

fn floats(v: &str, key: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number '{s}' in '{key}'"))))
        .collect()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        for k in kv.keys() {
            if !k.starts_with("synth.") && !SCALAR_KEYS.contains(&k) && !LIST_KEYS.contains(&k) {
                return Err(Error::Config(format!("unknown key '{k}'")));
            }
        }
        let mut c = RunConfig::default();
        let t = &mut c.tracker;
        if let Some(m) = kv.parsed("mode")? {
            c.mode = m;
        }
        macro_rules! set {
            ($key:literal, $place:expr) => {
                if let Some(v) = kv.parsed($key)? {
                    $place = v;
                }
            };
        }
        set!("n_buffer", t.n_buffer);
        set!("beta_bound", t.beta_bound);
        set!("alpha", t.alpha);
        set!("b", t.b);
        set!("lost_timeout", t.lost_timeout);
        set!("prior_p", t.prior.p);
        set!("prior_v", t.prior.v);
        set!("prior_theta", t.prior.theta);
        set!("prior_q", t.prior.q);
        set!("prior_lambda", t.prior.lambda);
        set!("prior_delta", t.prior.delta);
        set!("f", t.intrinsics.f);
        set!("cx", t.intrinsics.principal_point.x);
        set!("cy", t.intrinsics.principal_point.y);
        set!("width", t.sensor_width);
        set!("height", t.sensor_height);
        set!("ttc_threshold", c.ttc_threshold);

        let noise = &mut t.process_noise;
        let scalar_block = |key: &str| -> Result<Option<Matrix2<f64>>> { Ok(kv.parsed::<f64>(key)?.map(|q| Matrix2::identity() * q)) };
        if let Some(m) = scalar_block("q_p")? {
            noise.qp = m;
        }
        if let Some(m) = scalar_block("q_v")? {
            noise.qv = m;
        }
        if let Some(m) = scalar_block("q_lambda")? {
            noise.qlambda = m;
        }
        if let Some(m) = scalar_block("q_delta")? {
            noise.qdelta = Some(m);
        }
        set!("q_theta", noise.qtheta);
        set!("q_q", noise.qq);

        if let Some(size) = kv.parsed::<f64>("blob_size")? {
            t.init_lambda = Vector2::new(2.0 * size, 2.0 * size);
        }
        if let Some(v) = kv.get("init_lambda") {
            t.init_lambda = match floats(v, "init_lambda")?.as_slice() {
                [a] => Vector2::new(*a, *a),
                [a, b] => Vector2::new(*a, *b),
                _ => return Err(Error::Config("init_lambda takes one or two values".into())),
            };
        }
        if let Some(v) = kv.get("out_of_order") {
            t.out_of_order = match v {
                "drop" => OutOfOrderPolicy::Drop,
                "abort" => OutOfOrderPolicy::Abort,
                other => return Err(Error::Config(format!("unknown out_of_order policy '{other}'"))),
            };
        }
        if let Some(v) = kv.get("measurement") {
            t.measurement = match v {
                "combined" => MeasurementMode::Combined,
                "position_only" => MeasurementMode::PositionOnly,
                other => return Err(Error::Config(format!("unknown measurement mode '{other}'"))),
            };
        }

        for v in kv.get_all("track") {
            c.seeds.push(match floats(v, "track")?.as_slice() {
                [x, y] => TrackSeed { x: *x, y: *y, t: 0 },
                [x, y, t] => TrackSeed {
                    x: *x,
                    y: *y,
                    t: *t as Micros,
                },
                _ => return Err(Error::Config(format!("track expects x,y[,t_us], got '{v}'"))),
            });
        }
        for v in kv.get_all("ttc_pair") {
            let ids: Vec<u32> = v
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| Error::Config(format!("bad ttc_pair '{v}'"))))
                .collect::<Result<_>>()?;
            match ids.as_slice() {
                [l, r] if l != r => c.ttc_pairs.push((*l, *r)),
                _ => return Err(Error::Config(format!("ttc_pair expects two distinct ids, got '{v}'"))),
            }
        }
        for v in kv.get_all("range_target") {
            let (id, d) = v
                .split_once(',')
                .ok_or_else(|| Error::Config(format!("range_target expects id,diameter_m, got '{v}'")))?;
            c.range_targets.push(RangeTarget {
                id: id.trim().parse().map_err(|_| Error::Config(format!("bad id in '{v}'")))?,
                diameter_m: d.trim().parse().map_err(|_| Error::Config(format!("bad diameter in '{v}'")))?,
            });
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(file: Option<&Path>, overrides: &KeyValues) -> Result<Self> {
        let base = match file {
            Some(p) => KeyValues::from_file(p)?,
            None => KeyValues::default(),
        };
        Self::from_kv(&base.overlay(overrides))
    }

    pub fn validate(&self) -> Result<()> {
        self.tracker.validate()?;
        CameraIntrinsics::new(
            self.tracker.intrinsics.f,
            self.tracker.intrinsics.principal_point.x,
            self.tracker.intrinsics.principal_point.y,
        )?;
        let n = self.seeds.len() as u32;
        for &(l, r) in &self.ttc_pairs {
            if l >= n || r >= n {
                return Err(Error::UnknownTrack(l.max(r)));
            }
        }
        for t in &self.range_targets {
            if t.id >= n {
                return Err(Error::UnknownTrack(t.id));
            }
            if !(t.diameter_m > 0.0) {
                return Err(Error::Config(format!("range target {} needs diameter > 0", t.id)));
            }
        }
        if !(self.ttc_threshold.is_finite()) {
            return Err(Error::Config("ttc_threshold must be finite".into()));
        }
        Ok(())
    }

    /// Every effective value as `key=value` pairs, in a form that
    /// [`RunConfig::from_kv`] reads back to an identical configuration.
    pub fn to_metadata(&self) -> Metadata {
        let t = &self.tracker;
        let q = &t.process_noise;
        let p = &t.prior;
        let mut m: Metadata = vec![
            ("mode".into(), self.mode.as_str().into()),
            ("n_buffer".into(), t.n_buffer.to_string()),
            ("beta_bound".into(), t.beta_bound.to_string()),
            ("alpha".into(), t.alpha.to_string()),
            ("b".into(), t.b.to_string()),
            ("q_p".into(), q.qp[(0, 0)].to_string()),
            ("q_v".into(), q.qv[(0, 0)].to_string()),
            ("q_theta".into(), q.qtheta.to_string()),
            ("q_q".into(), q.qq.to_string()),
            ("q_lambda".into(), q.qlambda[(0, 0)].to_string()),
        ];
        if let Some(d) = q.qdelta {
            m.push(("q_delta".into(), d[(0, 0)].to_string()));
        }
        let CovariancePrior {
            p: pp,
            v,
            theta,
            q: pq,
            lambda,
            delta,
        } = *p;
        m.extend([
            ("prior_p".into(), pp.to_string()),
            ("prior_v".into(), v.to_string()),
            ("prior_theta".into(), theta.to_string()),
            ("prior_q".into(), pq.to_string()),
            ("prior_lambda".into(), lambda.to_string()),
            ("prior_delta".into(), delta.to_string()),
            ("init_lambda".into(), fmt_list(&[t.init_lambda.x, t.init_lambda.y])),
            ("lost_timeout".into(), t.lost_timeout.to_string()),
            (
                "out_of_order".into(),
                match t.out_of_order {
                    OutOfOrderPolicy::Drop => "drop",
                    OutOfOrderPolicy::Abort => "abort",
                }
                .into(),
            ),
            (
                "measurement".into(),
                match t.measurement {
                    MeasurementMode::Combined => "combined",
                    MeasurementMode::PositionOnly => "position_only",
                }
                .into(),
            ),
            ("f".into(), t.intrinsics.f.to_string()),
            ("cx".into(), t.intrinsics.principal_point.x.to_string()),
            ("cy".into(), t.intrinsics.principal_point.y.to_string()),
            ("width".into(), t.sensor_width.to_string()),
            ("height".into(), t.sensor_height.to_string()),
            ("ttc_threshold".into(), self.ttc_threshold.to_string()),
        ]);
        m.extend(self.seeds.iter().map(|s| ("track".into(), format!("{},{},{}", s.x, s.y, s.t))));
        m.extend(self.ttc_pairs.iter().map(|(l, r)| ("ttc_pair".into(), format!("{l},{r}"))));
        m.extend(
            self.range_targets
                .iter()
                .map(|r| ("range_target".into(), format!("{},{}", r.id, r.diameter_m))),
        );
        m
    }
}

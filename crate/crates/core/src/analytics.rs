//! Time-to-contact between a blob pair and range from a blob of known size.

use nalgebra::Vector2;

use crate::assoc::{TrackId, TrackOutput};
use crate::error::{Error, Result};
use crate::model::{CameraIntrinsics, Micros, TrackState};

pub const DEFAULT_TTC_THRESHOLD: f64 = 0.3;

/// Separations below this are treated as coincident.
pub const MIN_SEPARATION: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TtcFlag {
    None,
    Approaching,
    AboveThreshold,
    Diverging,
}

impl TtcFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Approaching => "approaching",
            Self::AboveThreshold => "above_threshold",
            Self::Diverging => "diverging",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TtcSample {
    pub t: Micros,
    /// Separation, px.
    pub s: f64,
    /// Rate of change of separation, px/s.
    pub v_rel: f64,
    pub inv_tau: f64,
    pub flag: TtcFlag,
}

/// `1/τ = (v_L − v_R)ᵀ(p_L − p_R) / ‖p_L − p_R‖²`.
pub fn inverse_ttc(
    t: Micros,
    (p_l, v_l): (&Vector2<f64>, &Vector2<f64>),
    (p_r, v_r): (&Vector2<f64>, &Vector2<f64>),
    threshold: f64,
) -> Result<TtcSample> {
    let d = p_l - p_r;
    let s = d.norm();
    if !(s > MIN_SEPARATION) {
        return Err(Error::CoincidentBlobs(s));
    }
    let v_rel = (v_l - v_r).dot(&d) / s;
    let inv_tau = v_rel / s;
    let flag = if inv_tau > threshold {
        TtcFlag::AboveThreshold
    } else if inv_tau > 0.0 {
        TtcFlag::Approaching
    } else if inv_tau < 0.0 {
        TtcFlag::Diverging
    } else {
        TtcFlag::None
    };
    Ok(TtcSample {
        t,
        s,
        v_rel,
        inv_tau,
        flag,
    })
}

/// Emits a TTC sample whenever either track of the pair updates, holding
/// the other track's latest state.
#[derive(Clone, Debug)]
pub struct TtcSampler {
    pub left: TrackId,
    pub right: TrackId,
    pub threshold: f64,
    latest_left: Option<TrackState>,
    latest_right: Option<TrackState>,
    skipped: u64,
}

impl TtcSampler {
    pub fn new(left: TrackId, right: TrackId, threshold: f64) -> Self {
        Self {
            left,
            right,
            threshold,
            latest_left: None,
            latest_right: None,
            skipped: 0,
        }
    }

    /// Coincident-blob samples skipped so far.
    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    pub fn push<const D: usize>(&mut self, out: &TrackOutput<D>) -> Option<TtcSample> {
        self.push_state(out.t, out.id, out.state())
    }

    pub fn push_state(&mut self, t: Micros, id: TrackId, state: TrackState) -> Option<TtcSample> {
        if id == self.left {
            self.latest_left = Some(state);
        } else if id == self.right {
            self.latest_right = Some(state);
        } else {
            return None;
        }
        let (l, r) = (self.latest_left.as_ref()?, self.latest_right.as_ref()?);
        match inverse_ttc(t, (&l.p, &l.v), (&r.p, &r.v), self.threshold) {
            Ok(sample) => Some(sample),
            Err(_) => {
                self.skipped += 1;
                None
            }
        }
    }
}

/// `range = a·f / max(λ¹, λ²)` in the units of `diameter`.
pub fn range_estimate(state: &TrackState, diameter: f64, intrinsics: &CameraIntrinsics) -> Result<f64> {
    let l = state.lambda_max();
    if !(l > 0.0) || !(diameter > 0.0) {
        return Err(Error::Domain(format!("range needs lambda > 0 and diameter > 0 (got {l}, {diameter})")));
    }
    Ok(diameter * intrinsics.f / l)
}

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Lower end of the operating frequency band, Hz.
pub const DEFAULT_FLOOR_HZ: f64 = 0.6;
/// Upper end of the operating frequency band, Hz.
pub const DEFAULT_CEILING_HZ: f64 = 2.3;

/// Piecewise-linear velocity→frequency map through curated `(m/s, Hz)` knots.
///
/// Outside the knot range the first (last) segment is continued linearly and
/// the result clamped into `[floor, ceiling]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FrequencyMap {
    pairs: Vec<(f64, f64)>,
    floor: f64,
    ceiling: f64,
}

impl FrequencyMap {
    pub fn new(pairs: Vec<(f64, f64)>, floor: f64, ceiling: f64) -> Result<Self> {
        if pairs.len() < 2 {
            return Err(Error::Curation(alloc::format!(
                "a frequency map needs at least 2 knots, got {}",
                pairs.len()
            )));
        }
        if !(floor.is_finite() && ceiling.is_finite() && floor > 0.0 && floor < ceiling) {
            return Err(Error::Curation(alloc::format!("invalid clamp band [{floor}, {ceiling}]")));
        }
        for w in pairs.windows(2) {
            let ((v0, f0), (v1, f1)) = (w[0], w[1]);
            if !(v1 > v0) {
                return Err(Error::Curation(alloc::format!(
                    "velocities must be strictly increasing: {v0} then {v1}"
                )));
            }
            if !(f1 > f0) {
                return Err(Error::Curation(alloc::format!(
                    "frequencies must be strictly increasing with velocity: {f0} Hz at {v0} m/s then {f1} Hz at {v1} m/s"
                )));
            }
        }
        if pairs.iter().any(|&(v, f)| !(v.is_finite() && v >= 0.0 && f.is_finite() && f > 0.0)) {
            return Err(Error::Curation("map knots must be finite with v >= 0 and f > 0".into()));
        }
        Ok(FrequencyMap { pairs, floor, ceiling })
    }

    pub fn with_default_band(pairs: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(pairs, DEFAULT_FLOOR_HZ, DEFAULT_CEILING_HZ)
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn ceiling(&self) -> f64 {
        self.ceiling
    }

    pub fn frequency(&self, velocity: f64) -> f64 {
        let p = &self.pairs;
        // segment whose left knot is the last one at or below `velocity`
        let i = match p.iter().rposition(|&(v, _)| v <= velocity) {
            None => 0,
            Some(i) => i.min(p.len() - 2),
        };
        let ((v0, f0), (v1, f1)) = (p[i], p[i + 1]);
        let f = if velocity == v1 {
            f1
        } else {
            f0 + (velocity - v0) * (f1 - f0) / (v1 - v0)
        };
        f.clamp(self.floor, self.ceiling)
    }
}

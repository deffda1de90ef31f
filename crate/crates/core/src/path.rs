use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Right-continuous step function `[0, horizon] -> states`.
///
/// `values[k]` holds on `[breakpoints[k], breakpoints[k + 1])`, and the last value on
/// `[breakpoints[K], horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PathJson")]
pub struct PiecewisePath {
    breakpoints: Vec<f64>,
    values: Vec<usize>,
    horizon: f64,
}

#[derive(Deserialize)]
struct PathJson {
    breakpoints: Vec<f64>,
    values: Vec<usize>,
    horizon: f64,
}

impl TryFrom<PathJson> for PiecewisePath {
    type Error = Error;
    fn try_from(p: PathJson) -> Result<Self> {
        PiecewisePath::new(p.breakpoints, p.values, p.horizon)
    }
}

impl PiecewisePath {
    pub fn new(breakpoints: Vec<f64>, values: Vec<usize>, horizon: f64) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(Error::invalid("a path needs matching, nonempty breakpoints and values"));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::invalid("a path must start at time 0"));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("breakpoints must be strictly increasing"));
        }
        let last = *breakpoints.last().unwrap();
        if !(horizon >= last) || !horizon.is_finite() {
            return Err(Error::invalid(format!("horizon {horizon} precedes the last breakpoint {last}")));
        }
        Ok(PiecewisePath { breakpoints, values, horizon })
    }

    pub fn constant(value: usize, horizon: f64) -> Self {
        PiecewisePath { breakpoints: vec![0.0], values: vec![value], horizon }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of jumps (breakpoints after time 0).
    pub fn n_jumps(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn start(&self) -> usize {
        self.values[0]
    }

    pub fn end(&self) -> usize {
        *self.values.last().unwrap()
    }

    /// Index of the segment containing `t`.
    pub fn segment_at(&self, t: f64) -> usize {
        self.breakpoints.partition_point(|&s| s <= t).saturating_sub(1)
    }

    pub fn value_at(&self, t: f64) -> usize {
        self.values[self.segment_at(t)]
    }

    pub fn max_value(&self) -> usize {
        self.values.iter().copied().max().unwrap()
    }

    /// Appends a jump to `value` at time `t`, extending the horizon if needed.
    pub(crate) fn push_jump(&mut self, t: f64, value: usize) {
        debug_assert!(t > *self.breakpoints.last().unwrap());
        self.breakpoints.push(t);
        self.values.push(value);
        if t > self.horizon {
            self.horizon = t;
        }
    }

    pub(crate) fn set_horizon(&mut self, horizon: f64) {
        debug_assert!(horizon >= *self.breakpoints.last().unwrap());
        self.horizon = horizon;
    }

    /// This path on `[0, t)` followed by `other` on `[t, horizon]`.
    pub(crate) fn splice(&self, t: f64, other: &PiecewisePath) -> PiecewisePath {
        let mut breakpoints = Vec::new();
        let mut values = Vec::new();
        for (&s, &v) in self.breakpoints.iter().zip(&self.values) {
            if s >= t {
                break;
            }
            breakpoints.push(s);
            values.push(v);
        }
        let k = other.segment_at(t);
        if breakpoints.is_empty() || *values.last().unwrap() != other.values[k] {
            breakpoints.push(t);
            values.push(other.values[k]);
        }
        for (&s, &v) in other.breakpoints[k + 1..].iter().zip(&other.values[k + 1..]) {
            breakpoints.push(s);
            values.push(v);
        }
        PiecewisePath { breakpoints, values, horizon: self.horizon.min(other.horizon) }
    }

    /// First time in `[0, horizon]` at which the two paths agree.
    pub fn first_meeting(&self, other: &PiecewisePath) -> Option<f64> {
        let horizon = self.horizon.min(other.horizon);
        let (mut i, mut j) = (0, 0);
        let mut t = 0.0;
        loop {
            if self.values[i] == other.values[j] {
                return Some(t);
            }
            let next_i = self.breakpoints.get(i + 1).copied().unwrap_or(f64::INFINITY);
            let next_j = other.breakpoints.get(j + 1).copied().unwrap_or(f64::INFINITY);
            t = next_i.min(next_j);
            if t > horizon {
                return None;
            }
            if next_i == t {
                i += 1;
            }
            if next_j == t {
                j += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(b: &[f64], v: &[usize], h: f64) -> PiecewisePath {
        PiecewisePath::new(b.to_vec(), v.to_vec(), h).unwrap()
    }

    #[test]
    fn right_continuous_lookup() {
        let p = path(&[0.0, 1.0, 2.5], &[3, 1, 4], 5.0);
        assert_eq!(p.value_at(0.0), 3);
        assert_eq!(p.value_at(0.999), 3);
        assert_eq!(p.value_at(1.0), 1);
        assert_eq!(p.value_at(2.5), 4);
        assert_eq!(p.value_at(5.0), 4);
    }

    #[test]
    fn rejects_malformed_paths() {
        assert!(PiecewisePath::new(vec![0.0, 1.0, 1.0], vec![0, 1, 2], 3.0).is_err());
        assert!(PiecewisePath::new(vec![0.5], vec![0], 3.0).is_err());
        assert!(PiecewisePath::new(vec![0.0, 4.0], vec![0, 1], 3.0).is_err());
        assert!(PiecewisePath::new(vec![0.0], vec![], 3.0).is_err());
    }

    #[test]
    fn meeting_and_splicing() {
        let a = path(&[0.0, 1.0, 3.0], &[0, 1, 2], 10.0);
        let b = path(&[0.0, 2.0, 4.0], &[5, 1, 2], 10.0);
        assert_eq!(a.first_meeting(&b), Some(2.0));
        let s = a.splice(2.0, &b);
        // a is already at 1 when b arrives there, so no breakpoint is added at 2
        assert_eq!(s.breakpoints(), &[0.0, 1.0, 4.0]);
        assert_eq!(s.values(), &[0, 1, 2]);
        let c = path(&[0.0], &[9], 10.0);
        assert_eq!(a.first_meeting(&c), None);
        assert_eq!(c.first_meeting(&c), Some(0.0));
    }

    #[test]
    fn json_validates() {
        let ok: PiecewisePath = serde_json::from_str(r#"{"breakpoints":[0,1.5],"values":[2,0],"horizon":4}"#).unwrap();
        assert_eq!(ok.value_at(2.0), 0);
        let bad = serde_json::from_str::<PiecewisePath>(r#"{"breakpoints":[0,1.5,1.0],"values":[2,0,1],"horizon":4}"#);
        assert!(bad.is_err());
        let text = serde_json::to_string(&ok).unwrap();
        assert_eq!(serde_json::from_str::<PiecewisePath>(&text).unwrap(), ok);
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntervalError {
    #[error("empty interval [{0},{1}]")]
    Empty(String, String),
    #[error("operator range [{0},{1}] must satisfy 0 <= lo <= hi")]
    BadRange(i64, i64),
}

/// A nonempty interval of integers. `lo == None` is -inf, `hi == None` is +inf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Interval {
    lo: Option<i64>,
    hi: Option<i64>,
}

fn show(v: Option<i64>, inf: &str) -> String {
    v.map_or_else(|| inf.to_string(), |x| x.to_string())
}

impl Interval {
    pub fn new(lo: Option<i64>, hi: Option<i64>) -> Result<Self, IntervalError> {
        match (lo, hi) {
            (Some(l), Some(h)) if l > h => Err(IntervalError::Empty(l.to_string(), h.to_string())),
            _ => Ok(Interval { lo, hi }),
        }
    }

    pub fn finite(lo: i64, hi: i64) -> Result<Self, IntervalError> {
        Self::new(Some(lo), Some(hi))
    }

    pub fn point(t: i64) -> Self {
        Interval { lo: Some(t), hi: Some(t) }
    }

    pub fn all() -> Self {
        Interval { lo: None, hi: None }
    }

    pub fn lo(&self) -> Option<i64> {
        self.lo
    }

    pub fn hi(&self) -> Option<i64> {
        self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_some() && self.hi.is_some()
    }

    pub fn contains(&self, t: i64) -> bool {
        self.lo.is_none_or(|l| l <= t) && self.hi.is_none_or(|h| t <= h)
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        let lo_ok = match (other.lo, self.lo) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => a <= b,
        };
        let hi_ok = match (other.hi, self.hi) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => b <= a,
        };
        lo_ok && hi_ok
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = match (self.lo, other.lo) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => Some(a.max(b)),
        };
        let hi = match (self.hi, other.hi) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => Some(a.min(b)),
        };
        Interval::new(lo, hi).ok()
    }

    /// `ι + k`; infinite endpoints saturate.
    pub fn shift(&self, k: i64) -> Interval {
        Interval { lo: self.lo.map(|x| x + k), hi: self.hi.map(|x| x + k) }
    }

    /// `[w1,w2] - [r1,r2] = [w1-r2, w2-r1]`.
    pub fn minus(&self, r: OpRange) -> Interval {
        Interval { lo: self.lo.map(|x| x - r.hi_i64()), hi: self.hi.map(|x| x - r.lo_i64()) }
    }

    /// `[w1,w2] + [r1,r2] = [w1+r1, w2+r2]`.
    pub fn plus(&self, r: OpRange) -> Interval {
        Interval { lo: self.lo.map(|x| x + r.lo_i64()), hi: self.hi.map(|x| x + r.hi_i64()) }
    }

    /// Union of two intervals when it is itself an interval over ℤ
    /// (overlapping or adjacent).
    pub fn union_if_contiguous(&self, other: &Interval) -> Option<Interval> {
        let (first, second) = if self.lo_key() <= other.lo_key() { (self, other) } else { (other, self) };
        let touches = match (first.hi, second.lo) {
            (None, _) | (_, None) => true,
            (Some(h), Some(l)) => l <= h.saturating_add(1),
        };
        if !touches {
            return None;
        }
        let hi = match (first.hi, second.hi) {
            (None, _) | (_, None) => None,
            (Some(a), Some(b)) => Some(a.max(b)),
        };
        Some(Interval { lo: first.lo, hi })
    }

    fn lo_key(&self) -> (bool, i64) {
        self.lo.map_or((false, 0), |x| (true, x))
    }

    /// Finite points of the interval clipped to `window`.
    pub fn points_in(&self, window: &Interval) -> Vec<i64> {
        match self.intersect(window) {
            Some(Interval { lo: Some(l), hi: Some(h) }) => (l..=h).collect(),
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", show(self.lo, "-inf"), show(self.hi, "inf"))
    }
}

/// Finite interval with non-negative endpoints used as a metric operator bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OpRange {
    pub lo: u32,
    pub hi: u32,
}

impl OpRange {
    pub fn new(lo: i64, hi: i64) -> Result<Self, IntervalError> {
        if lo < 0 || lo > hi || hi > u32::MAX as i64 {
            return Err(IntervalError::BadRange(lo, hi));
        }
        Ok(OpRange { lo: lo as u32, hi: hi as u32 })
    }

    pub fn lo_i64(&self) -> i64 {
        i64::from(self.lo)
    }

    pub fn hi_i64(&self) -> i64 {
        i64::from(self.hi)
    }

    pub fn contains(&self, k: i64) -> bool {
        self.lo_i64() <= k && k <= self.hi_i64()
    }
}

impl fmt::Display for OpRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// Merges a list of intervals into maximal pairwise non-contiguous ones,
/// sorted by lower endpoint.
pub fn coalesce(mut ivs: Vec<Interval>) -> Vec<Interval> {
    ivs.sort_by_key(|i| (i.lo_key(), i.hi.map_or((true, 0), |h| (false, h))));
    let mut out: Vec<Interval> = Vec::new();
    for iv in ivs {
        if let Some(last) = out.last_mut() {
            if let Some(u) = last.union_if_contiguous(&iv) {
                *last = u;
                continue;
            }
        }
        out.push(iv);
    }
    out
}

/// Maximal intervals formed by the points of `points` (any order).
pub fn intervals_from_points(points: &[i64]) -> Vec<Interval> {
    coalesce(points.iter().map(|&t| Interval::point(t)).collect())
}

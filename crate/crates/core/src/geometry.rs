//! Point and segment geometry in `R^d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

/// A closed segment between two distinct points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSegment", into = "RawSegment")]
pub struct LineSegment {
    a: Vec<f64>,
    b: Vec<f64>,
    length: f64,
}

#[derive(Serialize, Deserialize)]
struct RawSegment {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl TryFrom<RawSegment> for LineSegment {
    type Error = Error;
    fn try_from(raw: RawSegment) -> Result<Self> {
        LineSegment::new(raw.a, raw.b)
    }
}

impl From<LineSegment> for RawSegment {
    fn from(s: LineSegment) -> Self {
        RawSegment { a: s.a, b: s.b }
    }
}

impl LineSegment {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() || a.is_empty() {
            return Err(Error::Data(format!(
                "segment endpoints have dimensions {} and {}",
                a.len(),
                b.len()
            )));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::Data("segment endpoint is not finite".into()));
        }
        let length = distance(&a, &b);
        if length <= 0.0 {
            return Err(Error::Data("segment endpoints coincide".into()));
        }
        Ok(Self { a, b, length })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// Point at arc-length `t` from `a`.
    pub fn point_at(&self, t: f64) -> Vec<f64> {
        let s = t / self.length;
        self.a.iter().zip(&self.b).map(|(a, b)| a + s * (b - a)).collect()
    }

    pub fn translated(&self, v: &[f64]) -> Result<Self> {
        let shift = |p: &[f64]| p.iter().zip(v).map(|(x, d)| x + d).collect();
        Self::new(shift(&self.a), shift(&self.b))
    }
}

/// Closest point of a segment to a query point.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Arc-length position of the foot, measured from `a`, in `[0, L]`.
    pub t: f64,
    pub dist: f64,
    pub foot: Vec<f64>,
}

pub fn project(p: &[f64], seg: &LineSegment) -> Projection {
    let (a, b) = (seg.a(), seg.b());
    let len2 = seg.length * seg.length;
    let along: f64 = p
        .iter()
        .zip(a)
        .zip(b)
        .map(|((p, a), b)| (p - a) * (b - a))
        .sum();
    let s = (along / len2).clamp(0.0, 1.0);
    let foot: Vec<f64> = a.iter().zip(b).map(|(a, b)| a + s * (b - a)).collect();
    Projection {
        t: s * seg.length,
        dist: distance(p, &foot),
        foot,
    }
}

pub fn point_segment_distance(p: &[f64], seg: &LineSegment) -> f64 {
    project(p, seg).dist
}

/// Minimum distance between two closed segments of equal dimension.
pub fn segment_distance(s1: &LineSegment, s2: &LineSegment) -> f64 {
    // Closest points of two segments, parameterised as a1 + s*d1 and a2 + t*d2.
    let d1: Vec<f64> = s1.b.iter().zip(&s1.a).map(|(b, a)| b - a).collect();
    let d2: Vec<f64> = s2.b.iter().zip(&s2.a).map(|(b, a)| b - a).collect();
    let r: Vec<f64> = s1.a.iter().zip(&s2.a).map(|(x, y)| x - y).collect();
    let a = dot(&d1, &d1);
    let e = dot(&d2, &d2);
    let f = dot(&d2, &r);
    let c = dot(&d1, &r);
    let b = dot(&d1, &d2);
    let denom = a * e - b * b;

    let mut s = if denom > 0.0 {
        ((b * f - c * e) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    let p1: Vec<f64> = s1.a.iter().zip(&d1).map(|(x, d)| x + s * d).collect();
    let p2: Vec<f64> = s2.a.iter().zip(&d2).map(|(x, d)| x + t * d).collect();
    distance(&p1, &p2)
}

fn orientation(p: &[f64], q: &[f64], r: &[f64]) -> i8 {
    let v = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// For collinear `p, q, r`: does `r` lie within the bounding box of `pq`?
fn within_box(p: &[f64], q: &[f64], r: &[f64]) -> bool {
    r[0] >= p[0].min(q[0]) && r[0] <= p[0].max(q[0]) && r[1] >= p[1].min(q[1]) && r[1] <= p[1].max(q[1])
}

/// Closed-segment intersection.
///
/// In the plane this is the exact orientation test, with touching endpoints
/// counted as an intersection. On the real line it is interval overlap. In
/// higher dimensions segments "intersect" when they come closer than
/// `proximity`.
pub fn segments_intersect(s1: &LineSegment, s2: &LineSegment, proximity: f64) -> bool {
    match s1.dim() {
        1 => {
            let (lo1, hi1) = (s1.a[0].min(s1.b[0]), s1.a[0].max(s1.b[0]));
            let (lo2, hi2) = (s2.a[0].min(s2.b[0]), s2.a[0].max(s2.b[0]));
            lo1 <= hi2 && lo2 <= hi1
        }
        2 => {
            let (p1, q1, p2, q2) = (s1.a(), s1.b(), s2.a(), s2.b());
            let o1 = orientation(p1, q1, p2);
            let o2 = orientation(p1, q1, q2);
            let o3 = orientation(p2, q2, p1);
            let o4 = orientation(p2, q2, q1);
            if o1 != o2 && o3 != o4 {
                return true;
            }
            (o1 == 0 && within_box(p1, q1, p2))
                || (o2 == 0 && within_box(p1, q1, q2))
                || (o3 == 0 && within_box(p2, q2, p1))
                || (o4 == 0 && within_box(p2, q2, q1))
        }
        _ => segment_distance(s1, s2) < proximity,
    }
}

/// Indices `(i, j)`, `i < j`, of the pair of points furthest apart.
///
/// Ties keep the lexicographically first pair.
pub fn furthest_pair<P: AsRef<[f64]>>(points: &[P]) -> Option<(usize, usize)> {
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = squared_distance(points[i].as_ref(), points[j].as_ref());
            if best.is_none_or(|(bd, _, _)| d > bd) {
                best = Some((d, i, j));
            }
        }
    }
    best.map(|(_, i, j)| (i, j))
}

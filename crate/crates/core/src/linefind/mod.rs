//! Finding line segments that pass through or near the class centroids.
//!
//! Each algorithm implements [`LineFinder`] and is looked up by name in a
//! [`FinderRegistry`], so front ends can select it at runtime.

mod attraction;
mod brute;
mod cluster;
mod regression;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{CentroidSet, Dataset};
use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, LineSegment};

pub use attraction::{distance_attraction, DistanceAttraction};
pub use brute::{brute_force, BruteForce};
pub use cluster::{single_linkage, ClusterPartition};
pub use regression::{fit_regression, recursive_regression, RecursiveRegression, RegressionLine};

/// Segments plus the class → segment mapping produced by a line-finder.
#[derive(Debug, Clone, PartialEq)]
pub struct LineAssignment {
    pub segments: Vec<LineSegment>,
    /// Class id → index into `segments`.
    pub assignment: BTreeMap<usize, usize>,
    /// Classes that no segment houses.
    pub uncovered: Vec<usize>,
}

impl LineAssignment {
    /// Class ids assigned to segment `seg`, ascending.
    pub fn classes_on(&self, seg: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .filter(|&(_, &s)| s == seg)
            .map(|(&c, _)| c)
            .collect()
    }

    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.segments.len()];
        for (&c, &s) in &self.assignment {
            groups[s].push(c);
        }
        groups
    }

    /// Checks the structural invariants against a class count.
    pub fn validate(&self, class_count: usize) -> Result<()> {
        let mut seen = vec![false; class_count];
        for (&c, &s) in &self.assignment {
            if c >= class_count || s >= self.segments.len() || seen[c] {
                return Err(Error::LineFinding(format!("bad assignment of class {c} to segment {s}")));
            }
            seen[c] = true;
        }
        for &c in &self.uncovered {
            if c >= class_count || seen[c] {
                return Err(Error::LineFinding(format!("class {c} both covered and uncovered")));
            }
            seen[c] = true;
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::LineFinding(format!("class {c} missing from assignment")));
        }
        if let Some(s) = self.groups().iter().position(Vec::is_empty) {
            return Err(Error::LineFinding(format!("segment {s} has no classes")));
        }
        Ok(())
    }

    /// Assigns every uncovered class to its nearest segment (ties → lowest index).
    pub fn fold_uncovered(&mut self, cs: &CentroidSet) {
        for c in std::mem::take(&mut self.uncovered) {
            if let Some(s) = nearest_segment(cs.get(c), &self.segments) {
                self.assignment.insert(c, s);
            }
        }
    }
}

/// Index of the segment closest to `p`; ties go to the lowest index.
pub fn nearest_segment(p: &[f64], segments: &[LineSegment]) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (i, s) in segments.iter().enumerate() {
        let d = point_segment_distance(p, s);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| i)
}

/// Sum over covered classes of the centroid's distance to its segment.
pub fn score(cs: &CentroidSet, la: &LineAssignment) -> f64 {
    la.assignment
        .iter()
        .map(|(&c, &s)| point_segment_distance(cs.get(c), &la.segments[s]))
        .sum()
}

/// What the brute-force search sums when scoring a set of lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreMode {
    /// One distance per class centroid.
    #[default]
    Centroids,
    /// Every point of each class, measured to the line nearest its centroid.
    AllPoints,
}

impl fmt::Display for ScoreMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreMode::Centroids => "centroids",
            ScoreMode::AllPoints => "all-points",
        })
    }
}

/// Parameters common to every line-finder.
#[derive(Debug, Clone, PartialEq)]
pub struct FindParams {
    /// Number of lines (brute force) or preliminary clusters (RR, DA).
    pub lines: usize,
    pub eps_reg: f64,
    /// Proximity below which segments in more than two dimensions count as intersecting.
    pub eps_opt: f64,
    pub score_mode: ScoreMode,
}

impl FindParams {
    pub fn new(lines: usize) -> Self {
        Self {
            lines,
            eps_reg: crate::ToleranceConfig::DEFAULT_EPS_REG,
            eps_opt: crate::ToleranceConfig::DEFAULT_EPS_OPT,
            score_mode: ScoreMode::Centroids,
        }
    }
}

/// Input to a line-finder: the centroids, and optionally the dataset they came from.
#[derive(Debug, Clone, Copy)]
pub struct FindInput<'a> {
    pub centroids: &'a CentroidSet,
    pub data: Option<&'a Dataset>,
}

impl<'a> FindInput<'a> {
    pub fn centroids(centroids: &'a CentroidSet) -> Self {
        Self { centroids, data: None }
    }
}

pub trait LineFinder: Send + Sync {
    /// Registry key, e.g. `"brute"`.
    fn name(&self) -> &'static str;

    fn find(&self, input: FindInput<'_>, params: &FindParams) -> Result<LineAssignment>;
}

/// Name → line-finder lookup.
pub struct FinderRegistry {
    finders: Vec<Box<dyn LineFinder>>,
}

impl FinderRegistry {
    pub fn empty() -> Self {
        Self { finders: Vec::new() }
    }

    /// Replaces any finder already registered under the same name.
    pub fn register(&mut self, finder: Box<dyn LineFinder>) {
        self.finders.retain(|f| f.name() != finder.name());
        self.finders.push(finder);
    }

    pub fn get(&self, name: &str) -> Result<&dyn LineFinder> {
        self.finders
            .iter()
            .find(|f| f.name() == name)
            .map(|f| f.as_ref())
            .ok_or_else(|| Error::Usage(format!("unknown line-finding method `{name}` (known: {})", self.names().join(", "))))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.finders.iter().map(|f| f.name()).collect()
    }
}

impl Default for FinderRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(BruteForce));
        r.register(Box::new(RecursiveRegression));
        r.register(Box::new(DistanceAttraction));
        r
    }
}

/// Builds a segment through two centroids, reporting coincident ones as a line-finding failure.
pub(crate) fn segment_between(cs: &CentroidSet, i: usize, j: usize) -> Result<LineSegment> {
    LineSegment::new(cs.get(i).to_vec(), cs.get(j).to_vec())
        .map_err(|_| Error::LineFinding(format!("centroids of classes {i} and {j} coincide")))
}

//! Distilling labelled data into soft-label prototype lines and classifying
//! with the hierarchical soft-label prototype kNN rule.
//!
//! The pipeline: class [`centroids`] → a [`linefind::LineFinder`] covers them
//! with segments → [`softlabel::optimize_prototypes`] fits two soft-label
//! prototypes per segment → [`PrototypeModel`] classifies by picking the
//! nearest segment and weighing its prototypes by inverse distance.

pub mod classify;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linefind;
pub mod softlabel;
pub mod synth;

pub use classify::{accuracy, centroid_1nn, confusion_matrix, distill, DistillOptions, PrototypeModel, Provenance};
pub use dataset::{centroids, load_csv, CentroidSet, CsvSpec, Dataset, LoadReport, ToleranceConfig};
pub use error::{Error, ErrorCategory, Result};
pub use geometry::LineSegment;
pub use linefind::{FindParams, FinderRegistry, LineAssignment, LineFinder, ScoreMode};
pub use softlabel::{BoundaryMode, MarginPolicy, PrototypeLine, SoftLabelPrototype};

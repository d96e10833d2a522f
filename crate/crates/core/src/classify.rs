//! Prototype-line models, the hierarchical soft-label prototype kNN rule and
//! the nearest-centroid baseline.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{centroids, CentroidSet, Dataset};
use crate::error::{Error, Result};
use crate::geometry::{distance, point_segment_distance, squared_distance};
use crate::linefind::{FindInput, FindParams, LineFinder, ScoreMode};
use crate::softlabel::{optimize_prototypes, BoundaryMode, MarginPolicy, PrototypeLine, SoftLabelOptions, SoftLabelPrototype};

pub const MODEL_FORMAT: &str = "protolines-model";
pub const MODEL_VERSION: u32 = 1;

/// How a model was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub method: String,
    /// Requested number of lines or preliminary clusters.
    pub lines: usize,
    pub eps_reg: f64,
    pub eps_opt: f64,
    pub score_mode: ScoreMode,
    pub boundary: BoundaryMode,
    pub margin_policy: MarginPolicy,
    pub fold_uncovered: bool,
    /// Classes left without a line; they can never be predicted.
    #[serde(default)]
    pub uncovered: Vec<usize>,
}

/// Options for [`distill`].
#[derive(Debug, Clone, PartialEq)]
pub struct DistillOptions {
    pub find: FindParams,
    pub boundary: BoundaryMode,
    pub margin_policy: MarginPolicy,
    pub fold_uncovered: bool,
}

impl DistillOptions {
    pub fn new(lines: usize) -> Self {
        Self {
            find: FindParams::new(lines),
            boundary: BoundaryMode::Midpoint,
            margin_policy: MarginPolicy::Strict,
            fold_uncovered: false,
        }
    }

    pub fn soft_label(&self) -> SoftLabelOptions {
        SoftLabelOptions {
            eps_opt: self.find.eps_opt,
            boundary: self.boundary,
            margin_policy: self.margin_policy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeModel {
    pub dim: usize,
    pub class_names: Vec<String>,
    pub lines: Vec<PrototypeLine>,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: PrototypeModel,
}

/// Un-normalized influence mass per class id.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftPrediction {
    pub scores: Vec<f64>,
}

impl SoftPrediction {
    /// Highest-scoring class; ties go to the lowest class id.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (c, &s) in self.scores.iter().enumerate() {
            if s > self.scores[best] {
                best = c;
            }
        }
        best
    }
}

/// Soft-label kNN influence of `protos` at `p`: for each prototype, its label
/// divided by the guarded distance `|p − location| + eps_opt`. Label entry `k`
/// is credited to `class_ids[k]` in a vector of `class_count` scores.
pub fn slap_influence<'a>(
    p: &[f64],
    protos: impl IntoIterator<Item = &'a SoftLabelPrototype>,
    class_ids: &[usize],
    class_count: usize,
    eps_opt: f64,
) -> SoftPrediction {
    let mut scores = vec![0.0; class_count];
    for proto in protos {
        let w = 1.0 / (distance(p, &proto.location) + eps_opt);
        for (&c, &l) in class_ids.iter().zip(&proto.label) {
            scores[c] += l * w;
        }
    }
    SoftPrediction { scores }
}

impl PrototypeModel {
    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn eps_opt(&self) -> f64 {
        self.provenance.eps_opt
    }

    pub fn prototype_count(&self) -> usize {
        self.lines.iter().map(|l| l.prototypes().count()).sum()
    }

    /// Index of the line whose segment is closest to `p`; ties → lowest index.
    pub fn nearest_line(&self, p: &[f64]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, line) in self.lines.iter().enumerate() {
            let d = point_segment_distance(p, &line.layout.segment);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    pub fn soft_predict(&self, p: &[f64]) -> SoftPrediction {
        let line = &self.lines[self.nearest_line(p)];
        slap_influence(p, line.prototypes(), &line.layout.class_ids, self.class_count(), self.eps_opt())
    }

    pub fn predict_one(&self, p: &[f64]) -> usize {
        self.soft_predict(p).argmax()
    }

    /// Classifies a row-major `n × dim` block of points.
    pub fn predict(&self, points: &[f64]) -> Result<Vec<usize>> {
        if self.lines.is_empty() {
            return Err(Error::Model("model has no lines".into()));
        }
        if !points.len().is_multiple_of(self.dim) {
            return Err(Error::Data(format!(
                "{} values do not form rows of dimension {}",
                points.len(),
                self.dim
            )));
        }
        Ok(points.par_chunks(self.dim).map(|p| self.predict_one(p)).collect())
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<usize>> {
        if ds.dim() != self.dim {
            return Err(Error::Data(format!("dataset has dimension {}, model {}", ds.dim(), self.dim)));
        }
        self.predict(ds.points())
    }

    /// Checks the structural invariants of a loaded or hand-built model.
    pub fn validate(&self) -> Result<()> {
        let n = self.class_count();
        if self.dim == 0 || n == 0 {
            return Err(Error::Model("model needs a positive dimension and at least one class".into()));
        }
        if self.eps_opt().is_nan() || self.eps_opt() <= 0.0 {
            return Err(Error::Model("eps_opt must be positive".into()));
        }
        let mut seen = vec![false; n];
        for (i, line) in self.lines.iter().enumerate() {
            let l = &line.layout;
            let k = l.class_ids.len();
            if l.segment.dim() != self.dim {
                return Err(Error::Model(format!("line {i} has dimension {}", l.segment.dim())));
            }
            if k == 0 || l.t.len() != k || l.mids.len() + 1 != k {
                return Err(Error::Model(format!("line {i} has an inconsistent layout")));
            }
            for proto in line.prototypes() {
                if proto.location.len() != self.dim || proto.label.len() != k {
                    return Err(Error::Model(format!("line {i} has a malformed prototype")));
                }
                if proto.label.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::Model(format!("line {i} has a label entry outside [0, 1]")));
                }
            }
            for &c in &l.class_ids {
                if c >= n || seen[c] {
                    return Err(Error::Model(format!("class {c} is out of range or on two lines")));
                }
                seen[c] = true;
            }
        }
        for &c in &self.provenance.uncovered {
            if c >= n || seen[c] {
                return Err(Error::Model(format!("uncovered class {c} is out of range or on a line")));
            }
            seen[c] = true;
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::Model(format!("class {c} is neither on a line nor listed as uncovered")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Model(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
        if doc.format != MODEL_FORMAT {
            return Err(Error::Model(format!("unexpected format `{}`", doc.format)));
        }
        if doc.version != MODEL_VERSION {
            return Err(Error::Model(format!("unsupported version {}", doc.version)));
        }
        doc.model.validate()?;
        Ok(doc.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.to_json()?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Runs a line-finder on the dataset's centroids and fits two soft-label
/// prototypes per resulting line.
pub fn distill(ds: &Dataset, finder: &dyn LineFinder, opts: &DistillOptions) -> Result<PrototypeModel> {
    let cs = centroids(ds);
    let input = FindInput {
        centroids: &cs,
        data: Some(ds),
    };
    let mut found = finder.find(input, &opts.find)?;
    found.validate(cs.len())?;
    if opts.fold_uncovered {
        found.fold_uncovered(&cs);
    }
    let soft = opts.soft_label();
    let lines = found
        .groups()
        .into_par_iter()
        .zip(found.segments.par_iter())
        .map(|(members, seg)| optimize_prototypes(seg, &cs, &members, &soft))
        .collect::<Result<Vec<_>>>()?;
    let model = PrototypeModel {
        dim: ds.dim(),
        class_names: ds.class_names().to_vec(),
        lines,
        provenance: Provenance {
            method: finder.name().into(),
            lines: opts.find.lines,
            eps_reg: opts.find.eps_reg,
            eps_opt: opts.find.eps_opt,
            score_mode: opts.find.score_mode,
            boundary: opts.boundary,
            margin_policy: opts.margin_policy,
            fold_uncovered: opts.fold_uncovered,
            uncovered: found.uncovered.clone(),
        },
    };
    model.validate()?;
    Ok(model)
}

/// Nearest-centroid rule; ties → lowest class id.
pub fn centroid_1nn(cs: &CentroidSet, points: &[f64]) -> Result<Vec<usize>> {
    let d = cs.dim();
    if !points.len().is_multiple_of(d) {
        return Err(Error::Data(format!("{} values do not form rows of dimension {d}", points.len())));
    }
    Ok(points
        .par_chunks(d)
        .map(|p| {
            let mut best = (f64::INFINITY, 0);
            for (c, row) in cs.rows().iter().enumerate() {
                let d2 = squared_distance(p, row);
                if d2 < best.0 {
                    best = (d2, c);
                }
            }
            best.1
        })
        .collect())
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() || truth.is_empty() {
        return Err(Error::Usage(format!(
            "cannot score {} predictions against {} labels",
            pred.len(),
            truth.len()
        )));
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// `m[truth][pred]` counts.
pub fn confusion_matrix(pred: &[usize], truth: &[usize], class_count: usize) -> Vec<Vec<usize>> {
    let mut m = vec![vec![0; class_count]; class_count];
    for (&p, &t) in pred.iter().zip(truth) {
        m[t][p] += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LineSegment;
    use crate::linefind::BruteForce;
    use crate::softlabel::fit_layout;
    use crate::softlabel::layout;

    fn proto(location: Vec<f64>, label: Vec<f64>) -> SoftLabelPrototype {
        SoftLabelPrototype { location, label }
    }

    fn two_class_line() -> PrototypeLine {
        let seg = LineSegment::new(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        let cs = CentroidSet::from_rows(vec![vec![1.0 / 3.0, 0.0], vec![2.0 / 3.0, 0.0]]).unwrap();
        fit_layout(layout(&seg, &cs, &[0, 1]).unwrap(), &SoftLabelOptions::new(0.01)).unwrap()
    }

    fn model(lines: Vec<PrototypeLine>, classes: usize) -> PrototypeModel {
        PrototypeModel {
            dim: 2,
            class_names: (0..classes).map(|c| format!("c{c}")).collect(),
            lines,
            provenance: Provenance {
                method: "manual".into(),
                lines: 1,
                eps_reg: 0.1,
                eps_opt: 0.01,
                score_mode: ScoreMode::Centroids,
                boundary: BoundaryMode::Midpoint,
                margin_policy: MarginPolicy::Strict,
                fold_uncovered: false,
                uncovered: vec![],
            },
        }
    }

    #[test]
    fn pole_dominates() {
        let ps = [proto(vec![0.0, 0.0], vec![1.0, 0.0]), proto(vec![10.0, 0.0], vec![0.0, 1.0])];
        let s = slap_influence(&[0.0, 0.0], &ps, &[0, 1], 2, 0.01);
        assert_eq!(s.argmax(), 0);
        assert_eq!(s.scores[0], 100.0);
    }

    #[test]
    fn mirrored_labels_are_symmetric() {
        let ps = [proto(vec![0.0, 0.0], vec![0.7, 0.3]), proto(vec![2.0, 0.0], vec![0.3, 0.7])];
        let s = slap_influence(&[1.0, 0.0], &ps, &[0, 1], 2, 0.01);
        assert!((s.scores[0] - s.scores[1]).abs() <= 1e-9);
        let off = slap_influence(&[1.0, 5.0], &ps, &[1, 0], 3, 0.01);
        assert_eq!(off.scores[2], 0.0);
    }

    #[test]
    fn argmax_ties_low() {
        assert_eq!(SoftPrediction { scores: vec![1.0, 2.0, 2.0] }.argmax(), 1);
    }

    #[test]
    fn symmetric_line_midpoint_ties() {
        let m = model(vec![two_class_line()], 2);
        let s = m.soft_predict(&[0.5, 0.0]);
        assert!((s.scores[0] - s.scores[1]).abs() <= 1e-9 * s.scores[0]);
        assert_eq!(m.predict_one(&[1.0 / 3.0, 0.0]), 0);
        assert_eq!(m.predict_one(&[2.0 / 3.0, 0.0]), 1);
    }

    #[test]
    fn single_class_model() {
        let seg = LineSegment::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let cs = CentroidSet::from_rows(vec![vec![0.5, 0.5]]).unwrap();
        let line = fit_layout(layout(&seg, &cs, &[0]).unwrap(), &SoftLabelOptions::new(0.01)).unwrap();
        let m = model(vec![line], 1);
        let preds = m.predict(&[3.0, -2.0, 0.0, 0.0, 100.0, 100.0]).unwrap();
        assert_eq!(preds, vec![0, 0, 0]);
    }

    #[test]
    fn equidistant_lines_pick_lower_index() {
        let mut a = two_class_line();
        let mut b = a.clone();
        b.layout.segment = LineSegment::new(vec![0.0, 2.0], vec![1.0, 2.0]).unwrap();
        b.layout.class_ids = vec![2, 3];
        a.layout.class_ids = vec![0, 1];
        let m = model(vec![a, b], 4);
        assert_eq!(m.nearest_line(&[0.5, 1.0]), 0);
    }

    #[test]
    fn one_nn_ties_low() {
        let cs = CentroidSet::from_rows(vec![vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(centroid_1nn(&cs, &[1.0, 0.0, 2.0, 0.0, 0.0, 0.0]).unwrap(), vec![0, 1, 0]);
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0], &[1, 1]).unwrap(), 0.0);
        let truth: Vec<usize> = (0..10).collect();
        let mut pred = truth.clone();
        pred[4] = 9;
        assert_eq!(accuracy(&pred, &truth).unwrap(), 0.9);
        assert!(accuracy(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn confusion_counts() {
        let m = confusion_matrix(&[0, 1, 1], &[0, 0, 1], 2);
        assert_eq!(m, vec![vec![1, 1], vec![0, 1]]);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                let c = (i % 6) as f64;
                vec![c * 3.1 + (i as f64 * 0.37).sin() / 7.0, (c * 1.3).cos() * 5.0 + (i as f64).cos() / 9.0]
            })
            .collect();
        let labels: Vec<usize> = (0..60).map(|i| i % 6).collect();
        let ds = Dataset::from_rows(&rows, labels).unwrap();
        let m = distill(&ds, &BruteForce, &DistillOptions::new(2)).unwrap();
        let back = PrototypeModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(m.prototype_count(), 2 * m.lines.len());
    }

    #[test]
    fn rejects_foreign_documents() {
        let m = model(vec![two_class_line()], 2);
        let text = m.to_json().unwrap().replace(MODEL_FORMAT, "other");
        assert!(matches!(PrototypeModel::from_json(&text), Err(Error::Model(_))));
        let text = m.to_json().unwrap().replace("\"version\": 1", "\"version\": 7");
        assert!(PrototypeModel::from_json(&text).is_err());
    }
}

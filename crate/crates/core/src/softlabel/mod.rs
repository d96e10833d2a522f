//! Soft labels for the two endpoint prototypes of a line.
//!
//! A segment of length `L` is parameterised by arc length, with the first
//! prototype at `0` and the second at `L`. With `x[j]` and `x[N + j]` the
//! weights of class `j` in the two labels, the influence of class `j` at
//! coordinate `u` is
//!
//! ```text
//! f_j(u) = x[j] / (u + eps) + x[N + j] / (L - u + eps)
//! ```
//!
//! The labels come from a linear program that makes every class dominate at
//! its own centroid's projection, makes neighbouring classes tie at the
//! boundary between them, and maximizes the dominance margins.

pub mod lp;

use serde::{Deserialize, Serialize};

use crate::dataset::{CentroidSet, ToleranceConfig};
use crate::error::{Error, InfeasibleLine, Result};
use crate::geometry::{project, LineSegment};
use lp::{LinearProgram, Relation, SolveError};

/// Classes housed by one segment, ordered along it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineClassLayout {
    pub segment: LineSegment,
    /// Sorted by projection, ties by class id.
    pub class_ids: Vec<usize>,
    /// Arc-length projections, ascending, in `[0, L]`.
    pub t: Vec<f64>,
    /// `mids[k] = (t[k] + t[k + 1]) / 2`.
    pub mids: Vec<f64>,
}

impl LineClassLayout {
    pub fn len(&self) -> usize {
        self.class_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_ids.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.segment.length()
    }
}

pub fn layout(seg: &LineSegment, cs: &CentroidSet, assigned: &[usize]) -> Result<LineClassLayout> {
    if assigned.is_empty() {
        return Err(Error::Usage("a prototype line needs at least one class".into()));
    }
    if let Some(&c) = assigned.iter().find(|&&c| c >= cs.len()) {
        return Err(Error::Usage(format!("class {c} has no centroid")));
    }
    let mut placed: Vec<(f64, usize)> = assigned.iter().map(|&c| (project(cs.get(c), seg).t, c)).collect();
    placed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let t: Vec<f64> = placed.iter().map(|p| p.0).collect();
    let mids = t.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
    Ok(LineClassLayout {
        segment: seg.clone(),
        class_ids: placed.iter().map(|p| p.1).collect(),
        t,
        mids,
    })
}

/// Where neighbouring classes are required to tie.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    /// Halfway between the two neighbouring projections.
    #[default]
    Midpoint,
    /// Halfway between the first prototype and the later projection, `t[k + 1] / 2`.
    Pseudocode,
}

impl BoundaryMode {
    fn coordinate(self, layout: &LineClassLayout, k: usize) -> f64 {
        match self {
            BoundaryMode::Midpoint => layout.mids[k],
            BoundaryMode::Pseudocode => layout.t[k + 1] / 2.0,
        }
    }
}

/// What to do when the strict dominance margin makes a line infeasible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarginPolicy {
    /// Fail with the conflicting constraints.
    #[default]
    Strict,
    /// Retry with the margin divided by 10 up to six times, then with no margin.
    Relax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftLabelOptions {
    pub eps_opt: f64,
    pub boundary: BoundaryMode,
    pub margin_policy: MarginPolicy,
}

impl SoftLabelOptions {
    pub fn new(eps_opt: f64) -> Self {
        Self {
            eps_opt,
            boundary: BoundaryMode::Midpoint,
            margin_policy: MarginPolicy::Strict,
        }
    }
}

impl From<&ToleranceConfig> for SoftLabelOptions {
    fn from(t: &ToleranceConfig) -> Self {
        Self::new(t.eps_opt)
    }
}

/// The program for one line. Variables `0..2N` are the label weights; for
/// three or more classes they are followed by the free scalar `s` and one
/// slack `u_i ≥ 0` per class, which linearize the sum of the two smallest
/// margins.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabelLp {
    pub program: LinearProgram,
    pub classes: usize,
    /// Per class `i`: `f_i(t_i) − Σ_{j≠i} f_j(t_i)` as a row over the label weights.
    pub margin_rows: Vec<Vec<f64>>,
}

fn influence_row(n: usize, j: usize, u: f64, len: f64, eps: f64) -> Vec<f64> {
    let mut row = vec![0.0; 2 * n];
    row[j] = 1.0 / (u + eps);
    row[n + j] = 1.0 / (len - u + eps);
    row
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn padded(row: &[f64], n_vars: usize) -> Vec<f64> {
    let mut r = row.to_vec();
    r.resize(n_vars, 0.0);
    r
}

pub fn build_lp(layout: &LineClassLayout, eps_opt: f64, margin: f64, boundary: BoundaryMode) -> Result<SoftLabelLp> {
    let n = layout.len();
    if n == 0 {
        return Err(Error::Usage("a prototype line needs at least one class".into()));
    }
    if eps_opt.is_nan() || eps_opt <= 0.0 || margin.is_nan() || margin < 0.0 {
        return Err(Error::Usage(format!("bad tolerances eps_opt={eps_opt} margin={margin}")));
    }
    let len = layout.length();
    let ids = &layout.class_ids;
    let f = |j: usize, u: f64| influence_row(n, j, u, len, eps_opt);

    let aux = if n >= 3 { n + 1 } else { 0 };
    let n_vars = 2 * n + aux;
    let mut program = LinearProgram::new(n_vars);
    for b in program.bounds.iter_mut().take(2 * n) {
        *b = (0.0, 1.0);
    }

    let mut margin_rows = Vec::with_capacity(n);
    for i in 0..n {
        let own = f(i, layout.t[i]);
        let mut a = own.clone();
        for j in (0..n).filter(|&j| j != i) {
            let other = f(j, layout.t[i]);
            program.add(
                format!("dominance: class {} over class {} at {}", ids[i], ids[j], layout.t[i]),
                padded(&sub(&own, &other), n_vars),
                Relation::Ge,
                margin,
            );
            a = sub(&a, &other);
        }
        margin_rows.push(a);
    }
    for k in 0..n.saturating_sub(1) {
        let u = boundary.coordinate(layout, k);
        program.add(
            format!("boundary: class {} ties class {} at {u}", ids[k], ids[k + 1]),
            padded(&sub(&f(k, u), &f(k + 1, u)), n_vars),
            Relation::Eq,
            0.0,
        );
    }
    let mut first = vec![0.0; n_vars];
    let mut second = vec![0.0; n_vars];
    first[..n].fill(1.0);
    second[n..2 * n].fill(1.0);
    program.add("first label sums to one", first, Relation::Eq, 1.0);
    program.add("second label sums to one", second, Relation::Eq, 1.0);

    // Maximize Σ A·x + (sum of the two smallest entries of A·x).
    let weight = if n == 2 { 2.0 } else { 1.0 };
    for a in &margin_rows {
        for (o, v) in program.objective.iter_mut().zip(a) {
            *o += weight * v;
        }
    }
    if n >= 3 {
        let s = 2 * n;
        program.bounds[s] = (f64::NEG_INFINITY, f64::INFINITY);
        program.objective[s] = 2.0;
        for (i, a) in margin_rows.iter().enumerate() {
            let u = s + 1 + i;
            program.objective[u] = -1.0;
            let mut row = vec![0.0; n_vars];
            for (r, v) in row.iter_mut().zip(a) {
                *r = -v;
            }
            row[s] = 1.0;
            row[u] = -1.0;
            program.add(format!("smallest-margin bound for class {}", ids[i]), row, Relation::Le, 0.0);
        }
    }
    Ok(SoftLabelLp {
        program,
        classes: n,
        margin_rows,
    })
}

/// A prototype and its distribution over the classes of its line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftLabelPrototype {
    pub location: Vec<f64>,
    /// Indexed like the owning layout's `class_ids`.
    pub label: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeLine {
    pub layout: LineClassLayout,
    /// At the segment's first endpoint.
    pub p1: SoftLabelPrototype,
    /// At the segment's second endpoint.
    pub p2: SoftLabelPrototype,
    /// Additional prototypes; generation never produces any.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra: Vec<SoftLabelPrototype>,
    /// Dominance margin the labels were fitted with.
    pub margin: f64,
}

impl PrototypeLine {
    pub fn prototypes(&self) -> impl Iterator<Item = &SoftLabelPrototype> {
        [&self.p1, &self.p2].into_iter().chain(&self.extra)
    }

    /// `f_j(u)` for every class on the line, in layout order.
    pub fn influence_at(&self, u: f64, eps_opt: f64) -> Vec<f64> {
        let len = self.layout.length();
        self.p1
            .label
            .iter()
            .zip(&self.p2.label)
            .map(|(a, b)| a / (u + eps_opt) + b / (len - u + eps_opt))
            .collect()
    }
}

fn normalize(raw: &[f64]) -> Result<Vec<f64>> {
    let clamped: Vec<f64> = raw.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let sum: f64 = clamped.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::Solver(format!("label sums to {sum} before normalization")));
    }
    Ok(clamped.iter().map(|v| v / sum).collect())
}

/// Margins tried in order under [`MarginPolicy::Relax`].
pub fn margin_schedule(eps_opt: f64, policy: MarginPolicy) -> Vec<f64> {
    let strict = eps_opt * eps_opt;
    match policy {
        MarginPolicy::Strict => vec![strict],
        MarginPolicy::Relax => (0..=6)
            .map(|k| strict / 10f64.powi(k))
            .chain(std::iter::once(0.0))
            .collect(),
    }
}

/// Solves for the two endpoint labels of a single line.
pub fn optimize_prototypes(
    seg: &LineSegment,
    cs: &CentroidSet,
    assigned: &[usize],
    opts: &SoftLabelOptions,
) -> Result<PrototypeLine> {
    let layout = layout(seg, cs, assigned)?;
    fit_layout(layout, opts)
}

pub fn fit_layout(layout: LineClassLayout, opts: &SoftLabelOptions) -> Result<PrototypeLine> {
    let n = layout.len();
    let mut last_conflicts = Vec::new();
    for margin in margin_schedule(opts.eps_opt, opts.margin_policy) {
        let lp = build_lp(&layout, opts.eps_opt, margin, opts.boundary)?;
        match lp.program.solve() {
            Ok(sol) => {
                let p1 = normalize(&sol.x[..n])?;
                let p2 = normalize(&sol.x[n..2 * n])?;
                if margin < opts.eps_opt * opts.eps_opt {
                    log::warn!(
                        "classes {:?}: dominance margin relaxed to {margin:e}",
                        layout.class_ids
                    );
                }
                return Ok(PrototypeLine {
                    p1: SoftLabelPrototype {
                        location: layout.segment.a().to_vec(),
                        label: p1,
                    },
                    p2: SoftLabelPrototype {
                        location: layout.segment.b().to_vec(),
                        label: p2,
                    },
                    extra: Vec::new(),
                    margin,
                    layout,
                });
            }
            Err(SolveError::Infeasible { conflicts }) => last_conflicts = conflicts,
            // Near the feasibility edge the solver can miss the tolerance; a smaller margin may not.
            Err(e @ SolveError::Inaccurate { .. }) if opts.margin_policy == MarginPolicy::Relax => {
                log::warn!("classes {:?}: margin {margin:e}: {e}", layout.class_ids);
            }
            Err(e) => return Err(Error::Solver(format!("classes {:?}: {e}", layout.class_ids))),
        }
    }
    Err(Error::Infeasible(InfeasibleLine {
        class_ids: layout.class_ids.clone(),
        positions: layout.t.clone(),
        length: layout.length(),
        conflicts: last_conflicts,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit() -> LineSegment {
        LineSegment::new(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap()
    }

    fn on_axis(ts: &[f64]) -> CentroidSet {
        CentroidSet::from_rows(ts.iter().map(|&t| vec![t, 0.3]).collect()).unwrap()
    }

    fn fit(ts: &[f64]) -> PrototypeLine {
        let cs = on_axis(ts);
        let ids: Vec<usize> = (0..ts.len()).collect();
        optimize_prototypes(&unit(), &cs, &ids, &SoftLabelOptions::new(0.01)).unwrap()
    }

    #[test]
    fn layout_projects_and_sorts() {
        let cs = CentroidSet::from_rows(vec![vec![0.75, -1.0], vec![0.25, 1.0]]).unwrap();
        let l = layout(&unit(), &cs, &[0, 1]).unwrap();
        assert_eq!(l.class_ids, vec![1, 0]);
        assert_eq!(l.t, vec![0.25, 0.75]);
        assert_eq!(l.mids, vec![0.5]);
    }

    #[test]
    fn layout_ties_by_class_id() {
        let cs = CentroidSet::from_rows(vec![vec![0.5, 1.0], vec![0.5, -1.0], vec![0.1, 0.0]]).unwrap();
        let l = layout(&unit(), &cs, &[1, 0, 2]).unwrap();
        assert_eq!(l.class_ids, vec![2, 0, 1]);
        assert_eq!(l.mids[1], 0.5);
    }

    #[test]
    fn layout_single_class() {
        let cs = on_axis(&[0.4]);
        let l = layout(&unit(), &cs, &[0]).unwrap();
        assert_eq!(l.t, vec![0.4]);
        assert!(l.mids.is_empty());
        assert!(layout(&unit(), &cs, &[]).is_err());
    }

    #[test]
    fn single_class_takes_everything() {
        let line = fit(&[0.3]);
        assert_eq!(line.p1.label, vec![1.0]);
        assert_eq!(line.p2.label, vec![1.0]);
    }

    #[test]
    fn symmetric_pair_mirrors() {
        let line = fit(&[1.0 / 3.0, 2.0 / 3.0]);
        assert_abs_diff_eq!(line.p1.label[0], line.p2.label[1], epsilon = 1e-4);
        assert_abs_diff_eq!(line.p1.label[1], line.p2.label[0], epsilon = 1e-4);
    }

    #[test]
    fn three_classes_residuals() {
        let l = layout(&unit(), &on_axis(&[0.25, 0.5, 0.75]), &[0, 1, 2]).unwrap();
        let lp = build_lp(&l, 0.01, 1e-4, BoundaryMode::Midpoint).unwrap();
        let sol = lp.program.solve().unwrap();
        assert!(sol.max_violation <= 1e-7);
    }

    #[test]
    fn three_classes_form_ordered_intervals() {
        let line = fit(&[0.1, 0.5, 0.9]);
        let mut runs: Vec<usize> = Vec::new();
        for k in 0..10_000 {
            let u = k as f64 / 9_999.0;
            let f = line.influence_at(u, 0.01);
            let best = (0..f.len()).fold(0, |b, j| if f[j] > f[b] { j } else { b });
            if runs.last() != Some(&best) {
                runs.push(best);
            }
        }
        assert_eq!(runs, vec![0, 1, 2]);
    }

    #[test]
    fn dominance_and_boundary_hold() {
        let line = fit(&[0.05, 0.3, 0.45, 0.8]);
        let l = &line.layout;
        for i in 0..l.len() {
            let f = line.influence_at(l.t[i], 0.01);
            let rival = (0..f.len()).filter(|&j| j != i).map(|j| f[j]).fold(f64::MIN, f64::max);
            assert!(f[i] - rival >= 1e-4 * (1.0 - 1e-3));
        }
        for (k, &m) in l.mids.iter().enumerate() {
            let f = line.influence_at(m, 0.01);
            assert!((f[k] - f[k + 1]).abs() <= 1e-6 * f[k].max(1.0));
        }
    }

    #[test]
    fn objective_term_count() {
        let l2 = layout(&unit(), &on_axis(&[0.2, 0.7]), &[0, 1]).unwrap();
        assert_eq!(build_lp(&l2, 0.01, 1e-4, BoundaryMode::Midpoint).unwrap().program.n_vars(), 4);
        let l4 = layout(&unit(), &on_axis(&[0.1, 0.2, 0.7, 0.9]), &[0, 1, 2, 3]).unwrap();
        assert_eq!(build_lp(&l4, 0.01, 1e-4, BoundaryMode::Midpoint).unwrap().program.n_vars(), 8 + 5);
    }

    #[test]
    fn crowded_classes_are_infeasible_then_relaxed() {
        // Four classes packed into the first 3% of a long segment.
        let seg = LineSegment::new(vec![0.0, 0.0], vec![1388.0, 0.0]).unwrap();
        let cs = CentroidSet::from_rows([0.0, 18.0, 21.2, 44.9, 1388.0].iter().map(|&t| vec![t, 1.0]).collect())
            .unwrap();
        let ids = [0, 1, 2, 3, 4];
        let mut opts = SoftLabelOptions::new(0.01);
        let err = optimize_prototypes(&seg, &cs, &ids, &opts).unwrap_err();
        match err {
            Error::Infeasible(info) => {
                assert_eq!(info.class_ids, ids);
                assert!(!info.conflicts.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
        opts.margin_policy = MarginPolicy::Relax;
        let line = optimize_prototypes(&seg, &cs, &ids, &opts).unwrap();
        assert!(line.margin < 1e-4);
    }

    #[test]
    fn relax_steps_past_an_inaccurate_margin() {
        let len = 0.5456601314981312;
        let seg = LineSegment::new(vec![0.0, 0.0], vec![len, 0.0]).unwrap();
        let cs = CentroidSet::from_rows([0.0, 0.35985426548594446, len].iter().map(|&t| vec![t, 0.1]).collect())
            .unwrap();
        let mut opts = SoftLabelOptions::new(0.01);
        opts.boundary = BoundaryMode::Pseudocode;
        opts.margin_policy = MarginPolicy::Relax;
        let line = optimize_prototypes(&seg, &cs, &[0, 1, 2], &opts).unwrap();
        assert!(line.margin < 1e-4);
    }

    #[test]
    fn pseudocode_boundary_coordinate() {
        let l = layout(&unit(), &on_axis(&[0.2, 0.6]), &[0, 1]).unwrap();
        assert_eq!(BoundaryMode::Pseudocode.coordinate(&l, 0), 0.3);
        assert_eq!(BoundaryMode::Midpoint.coordinate(&l, 0), 0.4);
    }
}

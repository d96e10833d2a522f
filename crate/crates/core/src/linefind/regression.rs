use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::{segment_between, single_linkage, FindInput, FindParams, LineAssignment, LineFinder};
use crate::dataset::CentroidSet;
use crate::error::{Error, Result};
use crate::geometry::furthest_pair;

/// Ordinary least-squares fit of the last coordinate on the others.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionLine {
    pub slopes: Vec<f64>,
    pub intercept: f64,
}

impl RegressionLine {
    /// Slopes followed by the intercept.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut c = self.slopes.clone();
        c.push(self.intercept);
        c
    }

    /// Euclidean norm of the coefficient difference, intercept included.
    pub fn drift(&self, other: &RegressionLine) -> f64 {
        self.coefficients()
            .iter()
            .zip(other.coefficients())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Fits `last = intercept + Σ slope_k · x_k` over the given points.
///
/// Fails when the covariate design is rank-deficient, e.g. two points that
/// share every covariate (a vertical line).
pub fn fit_regression<P: AsRef<[f64]>>(points: &[P]) -> Result<RegressionLine> {
    let n = points.len();
    let d = points.first().map_or(0, |p| p.as_ref().len());
    if n < 2 || d == 0 {
        return Err(Error::LineFinding("regression needs at least two points".into()));
    }
    let design = DMatrix::from_fn(n, d, |r, c| if c == 0 { 1.0 } else { points[r].as_ref()[c - 1] });
    let response = DVector::from_fn(n, |r, _| points[r].as_ref()[d - 1]);
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = (n.max(d) as f64) * f64::EPSILON * smax.max(1.0);
    if svd.rank(tol) < d {
        return Err(Error::LineFinding("rank-deficient regression design".into()));
    }
    let beta = svd
        .solve(&response, tol)
        .map_err(|e| Error::LineFinding(format!("regression solve failed: {e}")))?;
    Ok(RegressionLine {
        slopes: beta.iter().skip(1).copied().collect(),
        intercept: beta[0],
    })
}

/// Forward selection of near-collinear centroids within each preliminary cluster.
pub struct RecursiveRegression;

impl LineFinder for RecursiveRegression {
    fn name(&self) -> &'static str {
        "rr"
    }

    fn find(&self, input: FindInput<'_>, params: &FindParams) -> Result<LineAssignment> {
        recursive_regression(input.centroids, params.lines, params.eps_reg)
    }
}

/// One accepted centroid and the coefficient drift it caused.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Acceptance {
    pub class: usize,
    pub drift: f64,
}

pub fn recursive_regression(cs: &CentroidSet, m: usize, eps_reg: f64) -> Result<LineAssignment> {
    recursive_regression_traced(cs, m, eps_reg).map(|(la, _)| la)
}

pub(crate) fn recursive_regression_traced(
    cs: &CentroidSet,
    m: usize,
    eps_reg: f64,
) -> Result<(LineAssignment, Vec<Acceptance>)> {
    if eps_reg.is_nan() || eps_reg <= 0.0 {
        return Err(Error::Usage(format!("eps_reg must be positive, got {eps_reg}")));
    }
    let partition = single_linkage(cs, m)?;
    let mut segments = Vec::new();
    let mut assignment = BTreeMap::new();
    let mut uncovered = Vec::new();
    let mut trace = Vec::new();

    for cluster in &partition.clusters {
        let pts: Vec<&[f64]> = cluster.iter().map(|&c| cs.get(c)).collect();
        let (i, j) = furthest_pair(&pts).expect("clusters hold at least two centroids");
        let mut captured = vec![cluster[i], cluster[j]];
        let mut rest: Vec<usize> = cluster.iter().copied().filter(|c| !captured.contains(c)).collect();

        match fit_regression(&[cs.get(captured[0]), cs.get(captured[1])]) {
            Ok(base) => {
                while !rest.is_empty() {
                    let mut best: Option<(f64, usize)> = None;
                    for (pos, &c) in rest.iter().enumerate() {
                        let mut trial: Vec<&[f64]> = captured.iter().map(|&a| cs.get(a)).collect();
                        trial.push(cs.get(c));
                        let drift = fit_regression(&trial).map_or(f64::INFINITY, |b| base.drift(&b));
                        if best.is_none_or(|(bd, _)| drift < bd) {
                            best = Some((drift, pos));
                        }
                    }
                    let (drift, pos) = best.expect("rest is non-empty");
                    if drift > eps_reg {
                        break;
                    }
                    let c = rest.remove(pos);
                    trace.push(Acceptance { class: c, drift });
                    captured.push(c);
                }
            }
            Err(_) => {
                log::debug!("degenerate regression for pair {captured:?}; keeping the bare pair");
            }
        }
        uncovered.extend(rest);

        let cap_pts: Vec<&[f64]> = captured.iter().map(|&c| cs.get(c)).collect();
        let (a, b) = furthest_pair(&cap_pts).expect("captured holds at least two centroids");
        let seg_idx = segments.len();
        segments.push(segment_between(cs, captured[a], captured[b])?);
        for c in captured {
            assignment.insert(c, seg_idx);
        }
    }
    uncovered.sort_unstable();
    Ok((
        LineAssignment {
            segments,
            assignment,
            uncovered,
        },
        trace,
    ))
}

use std::collections::BTreeMap;

use super::{FindInput, FindParams, LineAssignment, LineFinder, ScoreMode};
use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, segments_intersect, LineSegment};

/// Exhaustive search over every non-intersecting set of centroid-pair lines.
pub struct BruteForce;

impl LineFinder for BruteForce {
    fn name(&self) -> &'static str {
        "brute"
    }

    fn find(&self, input: FindInput<'_>, params: &FindParams) -> Result<LineAssignment> {
        brute_force(input, params)
    }
}

/// Returns the lowest-scoring combination of `params.lines` centroid-pair
/// segments in which no two segments intersect. Ties keep the combination
/// enumerated first (lexicographic over pair indices).
pub fn brute_force(input: FindInput<'_>, params: &FindParams) -> Result<LineAssignment> {
    let cs = input.centroids;
    let n = cs.len();
    let m = params.lines;
    if n < 2 {
        return Err(Error::LineFinding("brute force needs at least two classes".into()));
    }
    if m == 0 {
        return Err(Error::Usage("number of lines must be at least 1".into()));
    }

    let mut cands = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if let Ok(seg) = LineSegment::new(cs.get(i).to_vec(), cs.get(j).to_vec()) {
                cands.push(seg);
            }
        }
    }
    let p = cands.len();
    if m > p {
        return Err(Error::LineFinding(format!(
            "cannot choose {m} lines from {p} centroid pairs"
        )));
    }

    // dist[c * p + k]: centroid c to candidate k; cost is what the score adds.
    let dist: Vec<f64> = (0..n)
        .flat_map(|c| cands.iter().map(move |k| point_segment_distance(cs.get(c), k)))
        .collect();
    let cost = match (params.score_mode, input.data) {
        (ScoreMode::Centroids, _) => dist.clone(),
        (ScoreMode::AllPoints, Some(ds)) => {
            let mut cost = vec![0.0; n * p];
            for (row, &label) in ds.rows().zip(ds.labels()) {
                for (k, cand) in cands.iter().enumerate() {
                    cost[label * p + k] += point_segment_distance(row, cand);
                }
            }
            cost
        }
        (ScoreMode::AllPoints, None) => {
            return Err(Error::Usage("all-points scoring needs the dataset".into()));
        }
    };
    let mut crosses = vec![false; p * p];
    for a in 0..p {
        for b in a + 1..p {
            let x = segments_intersect(&cands[a], &cands[b], params.eps_opt);
            crosses[a * p + b] = x;
            crosses[b * p + a] = x;
        }
    }

    let nearest = |c: usize, comb: &[usize]| -> usize {
        let mut best = 0;
        for (slot, &k) in comb.iter().enumerate().skip(1) {
            if dist[c * p + k] < dist[c * p + comb[best]] {
                best = slot;
            }
        }
        best
    };

    let mut comb: Vec<usize> = (0..m).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let clear = (0..m).all(|a| (a + 1..m).all(|b| !crosses[comb[a] * p + comb[b]]));
        if clear {
            let total: f64 = (0..n).map(|c| cost[c * p + comb[nearest(c, &comb)]]).sum();
            if best.as_ref().is_none_or(|(s, _)| total < *s) {
                best = Some((total, comb.clone()));
            }
        }
        // Advance to the next combination in lexicographic order.
        let Some(i) = (0..m).rev().find(|&i| comb[i] < p - m + i) else {
            break;
        };
        comb[i] += 1;
        for j in i + 1..m {
            comb[j] = comb[j - 1] + 1;
        }
    }

    let (_, comb) = best.ok_or(Error::NoValidCombination { lines: m })?;
    let mut groups = vec![Vec::new(); m];
    for c in 0..n {
        groups[nearest(c, &comb)].push(c);
    }
    let mut segments = Vec::new();
    let mut assignment = BTreeMap::new();
    for (slot, members) in groups.into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        for c in members {
            assignment.insert(c, segments.len());
        }
        segments.push(cands[comb[slot]].clone());
    }
    Ok(LineAssignment {
        segments,
        assignment,
        uncovered: Vec::new(),
    })
}

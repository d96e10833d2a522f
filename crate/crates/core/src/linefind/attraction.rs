use std::collections::BTreeMap;

use super::{nearest_segment, segment_between, single_linkage, FindInput, FindParams, LineAssignment, LineFinder};
use crate::dataset::CentroidSet;
use crate::error::{Error, Result};
use crate::geometry::{furthest_pair, LineSegment};

/// Centroids attach to the nearest preliminary line, then each group's line is
/// re-drawn through its own furthest-apart pair.
pub struct DistanceAttraction;

impl LineFinder for DistanceAttraction {
    fn name(&self) -> &'static str {
        "da"
    }

    fn find(&self, input: FindInput<'_>, params: &FindParams) -> Result<LineAssignment> {
        distance_attraction(input.centroids, params.lines)
    }
}

fn span(cs: &CentroidSet, members: &[usize]) -> Result<LineSegment> {
    let pts: Vec<&[f64]> = members.iter().map(|&c| cs.get(c)).collect();
    let (i, j) = furthest_pair(&pts).ok_or_else(|| Error::LineFinding("empty group".into()))?;
    segment_between(cs, members[i], members[j])
}

/// Groups that attract fewer than two centroids do not get a segment of their
/// own; their lone centroid joins the nearest surviving segment.
pub fn distance_attraction(cs: &CentroidSet, m: usize) -> Result<LineAssignment> {
    let partition = single_linkage(cs, m)?;
    let pre: Vec<LineSegment> = partition
        .clusters
        .iter()
        .map(|cl| span(cs, cl))
        .collect::<Result<_>>()?;

    let mut groups = vec![Vec::new(); pre.len()];
    for c in 0..cs.len() {
        let g = nearest_segment(cs.get(c), &pre).expect("at least one preliminary line");
        groups[g].push(c);
    }

    let mut segments = Vec::new();
    let mut assignment = BTreeMap::new();
    let mut strays = Vec::new();
    for members in groups {
        match members.len() {
            0 => {}
            1 => strays.push(members[0]),
            _ => {
                let seg = span(cs, &members)?;
                for &c in &members {
                    assignment.insert(c, segments.len());
                }
                segments.push(seg);
            }
        }
    }
    if segments.is_empty() {
        return Err(Error::LineFinding("no attraction group kept two or more centroids".into()));
    }
    for c in strays {
        let s = nearest_segment(cs.get(c), &segments).expect("segments is non-empty");
        assignment.insert(c, s);
    }
    Ok(LineAssignment {
        segments,
        assignment,
        uncovered: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cs(rows: &[[f64; 2]]) -> CentroidSet {
        CentroidSet::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn two_separated_groups() {
        let c = cs(&[[0.0, 0.0], [1.0, 0.1], [2.0, 0.0], [10.0, 10.0], [11.0, 11.0]]);
        let la = distance_attraction(&c, 2).unwrap();
        assert_eq!(la.segments.len(), 2);
        assert_eq!(la.classes_on(0), vec![0, 1, 2]);
        assert_eq!(la.classes_on(1), vec![3, 4]);
        assert_eq!(la.segments[0].a(), &[0.0, 0.0]);
        assert_eq!(la.segments[0].b(), &[2.0, 0.0]);
        la.validate(5).unwrap();
    }

    #[test]
    fn centroid_moves_to_closer_preliminary_line() {
        // Centroid 6 links to the upper cluster (3.1 < √10) but lies 3.0 from
        // the lower cluster's line and 3.1 from the upper one.
        let c = cs(&[
            [0.0, 0.0],
            [2.0, 0.0],
            [4.0, 0.0],
            [6.0, 0.0],
            [8.0, 0.0],
            [10.0, 0.0],
            [5.0, 3.0],
            [1.0, 6.1],
            [5.0, 6.1],
            [9.0, 6.1],
        ]);
        let p = single_linkage(&c, 2).unwrap();
        assert_eq!(p.clusters, vec![vec![0, 1, 2, 3, 4, 5], vec![6, 7, 8, 9]]);
        let la = distance_attraction(&c, 2).unwrap();
        la.validate(10).unwrap();
        assert_eq!(la.classes_on(0), vec![0, 1, 2, 3, 4, 5, 6]);
        assert_eq!(la.classes_on(1), vec![7, 8, 9]);
        assert_eq!(la.segments[1].a(), &[1.0, 6.1]);
        assert_eq!(la.segments[1].b(), &[9.0, 6.1]);
    }

    #[test]
    fn endpoints_are_assigned_centroids() {
        let rows: Vec<[f64; 2]> = (0..30)
            .map(|i| {
                let x = (i * 7 % 13) as f64;
                let y = (i * 11 % 17) as f64 * 0.5;
                [x + 0.01 * i as f64, y]
            })
            .collect();
        let c = cs(&rows);
        for m in 1..=8 {
            let la = distance_attraction(&c, m).unwrap();
            la.validate(30).unwrap();
            assert!(la.segments.len() <= m);
            for (s, seg) in la.segments.iter().enumerate() {
                let on = la.classes_on(s);
                assert!(on.iter().any(|&k| c.get(k) == seg.a()));
                assert!(on.iter().any(|&k| c.get(k) == seg.b()));
            }
        }
    }
}

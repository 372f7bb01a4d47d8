use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Keypoint;

/// Proximity graph over the keypoints of one region.
///
/// `members` and `edges` hold leaf indices into the owning graph's leaf list.
/// Edges are stored once as `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snng {
    pub region: usize,
    pub members: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub tau: f64,
}

fn plane_distance(a: &Keypoint, b: &Keypoint) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Connect every pair of members whose image-plane distance is strictly
/// below `tau`.
pub fn build_snng(leaves: &[Keypoint], members: &[usize], region: usize, tau: f64) -> Result<Snng> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParam(format!("tau must be positive, got {tau}")));
    }
    let mut members = members.to_vec();
    members.sort_unstable();
    let mut edges = Vec::new();
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            if plane_distance(&leaves[i], &leaves[j]) < tau {
                edges.push((i, j));
            }
        }
    }
    Ok(Snng {
        region,
        members,
        edges,
        tau,
    })
}

/// Complete variant: the threshold is set one pixel above the largest
/// pairwise distance, so every pair is connected.
pub fn build_snngc(leaves: &[Keypoint], members: &[usize], region: usize) -> Result<Snng> {
    if members.is_empty() {
        return Err(Error::EmptyInput("snngc members"));
    }
    let mut max_dist: f64 = 0.0;
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            max_dist = max_dist.max(plane_distance(&leaves[i], &leaves[j]));
        }
    }
    build_snng(leaves, members, region, max_dist + 1.0)
}

impl Snng {
    /// For every member, its neighbors ordered nearest first (ties by index).
    pub fn adjacency_lists(&self, leaves: &[Keypoint]) -> Vec<(usize, Vec<usize>)> {
        self.members
            .iter()
            .map(|&m| {
                let mut ns: Vec<usize> = self
                    .edges
                    .iter()
                    .filter_map(|&(i, j)| match (i == m, j == m) {
                        (true, _) => Some(j),
                        (_, true) => Some(i),
                        _ => None,
                    })
                    .collect();
                ns.sort_by(|&a, &b| {
                    plane_distance(&leaves[m], &leaves[a])
                        .total_cmp(&plane_distance(&leaves[m], &leaves[b]))
                        .then(a.cmp(&b))
                });
                (m, ns)
            })
            .collect()
    }
}

//! The three-level image graph: an implicit root for the image, the region
//! adjacency graph, and keypoint leaves hanging off their containing region.

mod document;
mod snng;

pub use document::{deserialize, serialize};
pub use snng::{build_snng, build_snngc, Snng};

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::features::Keypoint;
use crate::rag::RegionGraph;
use crate::segmentation::LabelMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageInfo {
    pub id: String,
    pub width: usize,
    pub height: usize,
}

/// How leaves are organized below each region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeafConfig {
    /// Leaves only carry the vertical region -> keypoint edge.
    RegionBased,
    /// Additionally, leaves of one region closer than `tau` pixels are joined.
    RegionGraphBased { tau: f64 },
}

impl LeafConfig {
    pub fn tau(&self) -> Option<f64> {
        match *self {
            LeafConfig::RegionBased => None,
            LeafConfig::RegionGraphBased { tau } => Some(tau),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arsrg {
    image: ImageInfo,
    regions: RegionGraph,
    leaves: Vec<Keypoint>,
    leaf_region: Vec<usize>,
    region_leaves: Vec<Vec<usize>>,
    config: LeafConfig,
    snngs: Option<Vec<Snng>>,
}

impl Arsrg {
    pub fn image(&self) -> &ImageInfo {
        &self.image
    }

    /// Same graph under a different image id.
    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.image.id = id.into();
        self
    }

    pub fn regions(&self) -> &RegionGraph {
        &self.regions
    }

    pub fn leaves(&self) -> &[Keypoint] {
        &self.leaves
    }

    /// Region index of every leaf.
    pub fn leaf_region(&self) -> &[usize] {
        &self.leaf_region
    }

    /// Leaf indices of one region, ascending.
    pub fn region_leaves(&self, region: usize) -> &[usize] {
        &self.region_leaves[region]
    }

    pub fn config(&self) -> LeafConfig {
        self.config
    }

    /// Per-region proximity graphs; present only for [`LeafConfig::RegionGraphBased`].
    pub fn snngs(&self) -> Option<&[Snng]> {
        self.snngs.as_deref()
    }

    /// All leaf-leaf edges, sorted.
    pub fn leaf_edges(&self) -> Option<Vec<(usize, usize)>> {
        self.snngs.as_ref().map(|gs| {
            let mut all: Vec<_> = gs.iter().flat_map(|g| g.edges.iter().copied()).collect();
            all.sort_unstable();
            all
        })
    }

    /// Dense binary leaf adjacency matrix, row-major.
    pub fn sift_adjacency_matrix(&self) -> Option<Vec<u8>> {
        let n = self.leaves.len();
        self.leaf_edges().map(|edges| {
            let mut m = vec![0u8; n * n];
            for (i, j) in edges {
                m[i * n + j] = 1;
                m[j * n + i] = 1;
            }
            m
        })
    }

    /// Assemble from already-built parts and check every structural invariant.
    pub fn from_parts(
        image: ImageInfo,
        regions: RegionGraph,
        leaves: Vec<Keypoint>,
        leaf_region: Vec<usize>,
        config: LeafConfig,
        leaf_edges: Option<Vec<(usize, usize)>>,
    ) -> Result<Self> {
        if leaf_region.len() != leaves.len() {
            return Err(Error::field(
                "leaf_region",
                format!("{} entries for {} leaves", leaf_region.len(), leaves.len()),
            ));
        }
        let n = regions.num_regions();
        if let Some(i) = leaf_region.iter().position(|&r| r >= n) {
            return Err(Error::field(
                format!("leaf_region[{i}]"),
                format!("region {} out of range for {n} regions", leaf_region[i]),
            ));
        }
        let region_leaves = group_by_region(&leaf_region, n);
        let snngs = match (config, leaf_edges) {
            (LeafConfig::RegionBased, None) => None,
            (LeafConfig::RegionBased, Some(_)) => {
                return Err(Error::field("leaf_edges", "region configuration carries no leaf edges"))
            }
            (LeafConfig::RegionGraphBased { .. }, None) => {
                return Err(Error::field("leaf_edges", "region-graph configuration requires leaf edges"))
            }
            (LeafConfig::RegionGraphBased { tau }, Some(edges)) => {
                if !(tau > 0.0) {
                    return Err(Error::field("tau", format!("must be positive, got {tau}")));
                }
                let mut per_region: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
                for (k, &(a, b)) in edges.iter().enumerate() {
                    let path = format!("leaf_edges[{k}]");
                    if a >= leaves.len() || b >= leaves.len() {
                        return Err(Error::field(path, "leaf index out of range"));
                    }
                    if a == b {
                        return Err(Error::field(path, "self-loop"));
                    }
                    if leaf_region[a] != leaf_region[b] {
                        return Err(Error::field(path, "edge crosses regions"));
                    }
                    per_region[leaf_region[a]].push((a.min(b), a.max(b)));
                }
                Some(
                    per_region
                        .into_iter()
                        .enumerate()
                        .map(|(r, mut edges)| {
                            edges.sort_unstable();
                            edges.dedup();
                            Snng {
                                region: r,
                                members: region_leaves[r].clone(),
                                edges,
                                tau,
                            }
                        })
                        .collect(),
                )
            }
        };
        Ok(Self {
            image,
            regions,
            leaves,
            leaf_region,
            region_leaves,
            config,
            snngs,
        })
    }
}

fn group_by_region(leaf_region: &[usize], n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); n];
    for (leaf, &r) in leaf_region.iter().enumerate() {
        out[r].push(leaf);
    }
    out
}

/// Region index of the pixel nearest to each keypoint, clamped at the
/// border. Keypoints outside `[0, w) x [0, h)` are rejected.
pub fn assign_keypoints(lm: &LabelMap, kps: &[Keypoint]) -> Result<Vec<usize>> {
    let (w, h) = (lm.width(), lm.height());
    kps.iter()
        .enumerate()
        .map(|(index, k)| {
            let inside = k.x >= 0.0 && k.y >= 0.0 && k.x < w as f64 && k.y < h as f64;
            if !inside {
                return Err(Error::OutOfBounds {
                    index,
                    x: k.x,
                    y: k.y,
                    width: w,
                    height: h,
                });
            }
            let px = (k.x.round() as usize).min(w - 1);
            let py = (k.y.round() as usize).min(h - 1);
            Ok(lm.label_at(px, py) as usize - 1)
        })
        .collect()
}

pub fn build_arsrg(
    image_id: impl Into<String>,
    lm: &LabelMap,
    rg: &RegionGraph,
    kps: Vec<Keypoint>,
    config: LeafConfig,
) -> Result<Arsrg> {
    if lm.num_regions() != rg.num_regions() || lm.region_sizes() != rg.region_sizes() {
        return Err(Error::InvalidParam(
            "label map and region graph describe different regions".into(),
        ));
    }
    let leaf_region = assign_keypoints(lm, &kps)?;
    let region_leaves = group_by_region(&leaf_region, rg.num_regions());
    let snngs = match config {
        LeafConfig::RegionBased => None,
        LeafConfig::RegionGraphBased { tau } => {
            let regions: Vec<usize> = (0..rg.num_regions()).collect();
            Some(exec::try_map_slice(ExecMode::default(), &regions, |&r| {
                build_snng(&kps, &region_leaves[r], r, tau)
            })?)
        }
    };
    Ok(Arsrg {
        image: ImageInfo {
            id: image_id.into(),
            width: lm.width(),
            height: lm.height(),
        },
        regions: rg.clone(),
        leaves: kps,
        leaf_region,
        region_leaves,
        config,
        snngs,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::features::Descriptor;
    use crate::rag::build_rag;

    pub(crate) fn kp(x: f64, y: f64) -> Keypoint {
        Keypoint {
            x,
            y,
            scale: 2.0,
            orientation: 1.0,
            descriptor: Descriptor::zeros(),
        }
    }

    pub(crate) fn quadrant_map(size: usize) -> LabelMap {
        let half = size / 2;
        let labels = (0..size * size)
            .map(|i| 1 + u32::from(i % size >= half) + 2 * u32::from(i / size >= half))
            .collect();
        LabelMap::from_labels(size, size, labels).unwrap()
    }

    #[test]
    fn assignment_rules() {
        let lm = quadrant_map(10);
        let got = assign_keypoints(&lm, &[kp(7.0, 7.0), kp(9.4, 9.4), kp(4.4, 5.0), kp(0.0, 0.0)]).unwrap();
        assert_eq!(got, vec![3, 3, 2, 0]);
        let err = assign_keypoints(&lm, &[kp(10.0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::OutOfBounds { index: 0, .. }));
        assert!(assign_keypoints(&lm, &[kp(-0.1, 1.0)]).is_err());
    }

    #[test]
    fn quadrant_membership_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let lm = quadrant_map(20);
        let kps: Vec<_> = (0..10)
            .map(|_| kp(rng.random_range(0.0..19.4), rng.random_range(0.0..19.4)))
            .collect();
        let got = assign_keypoints(&lm, &kps).unwrap();
        for (k, r) in kps.iter().zip(got) {
            let expected = usize::from(k.x.round() >= 10.0) + 2 * usize::from(k.y.round() >= 10.0);
            assert_eq!(r, expected);
        }
    }

    #[test]
    fn region_based_has_no_leaf_edges() {
        let lm = quadrant_map(10);
        let g = build_arsrg("q", &lm, &build_rag(&lm), vec![kp(1.0, 1.0), kp(8.0, 2.0)], LeafConfig::RegionBased)
            .unwrap();
        assert!(g.leaf_edges().is_none());
        assert!(g.snngs().is_none());
        assert_eq!(g.leaf_region(), &[0, 1]);
        assert_eq!(g.region_leaves(1), &[1]);
    }

    #[test]
    fn sub_pixel_tau_gives_no_edges() {
        let lm = quadrant_map(10);
        let kps = vec![kp(1.0, 1.0), kp(2.0, 1.0), kp(1.0, 3.0)];
        let g = build_arsrg("q", &lm, &build_rag(&lm), kps, LeafConfig::RegionGraphBased { tau: 0.5 }).unwrap();
        assert_eq!(g.leaf_edges().unwrap(), vec![]);
    }

    #[test]
    fn three_close_leaves_per_quadrant() {
        let lm = quadrant_map(40);
        let mut kps = Vec::new();
        for (qx, qy) in [(5.0, 5.0), (25.0, 5.0), (5.0, 25.0), (25.0, 25.0)] {
            kps.extend([kp(qx, qy), kp(qx + 2.0, qy), kp(qx, qy + 2.0)]);
        }
        let g = build_arsrg("q", &lm, &build_rag(&lm), kps, LeafConfig::RegionGraphBased { tau: 4.0 }).unwrap();
        let snngs = g.snngs().unwrap();
        assert_eq!(snngs.len(), 4);
        for s in snngs {
            assert_eq!(s.members.len(), 3);
            assert_eq!(s.edges.len(), 3);
            for &(i, j) in &s.edges {
                assert_eq!(g.leaf_region()[i], g.leaf_region()[j]);
            }
        }
        assert_eq!(g.leaf_edges().unwrap().len(), 12);
        let m = g.sift_adjacency_matrix().unwrap();
        assert_eq!(m.iter().map(|&v| usize::from(v)).sum::<usize>(), 24);
    }

    #[test]
    fn rejects_inconsistent_inputs() {
        let lm = quadrant_map(10);
        let other = build_rag(&quadrant_map(12));
        assert!(build_arsrg("q", &lm, &other, vec![], LeafConfig::RegionBased).is_err());
    }
}

//! Region adjacency graph: the middle level of the image graph.

use crate::error::{Error, Result};
use crate::segmentation::LabelMap;

/// Undirected region graph with a dense binary adjacency matrix, per-region
/// pixel counts and centroids. Region `i` corresponds to label `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionGraph {
    num_regions: usize,
    adjacency: Vec<u8>,
    region_sizes: Vec<usize>,
    region_centroids: Vec<[f64; 2]>,
}

impl RegionGraph {
    /// Assemble from an edge list, validating symmetry-relevant invariants.
    pub fn from_parts(
        region_sizes: Vec<usize>,
        region_centroids: Vec<[f64; 2]>,
        edges: &[(usize, usize)],
    ) -> Result<Self> {
        let n = region_sizes.len();
        if region_centroids.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: region_centroids.len(),
            });
        }
        if let Some(i) = region_sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidParam(format!("region {i} has zero size")));
        }
        let mut adjacency = vec![0u8; n * n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidParam(format!("edge ({i}, {j}) out of range for {n} regions")));
            }
            if i == j {
                return Err(Error::InvalidParam(format!("self-loop on region {i}")));
            }
            adjacency[i * n + j] = 1;
            adjacency[j * n + i] = 1;
        }
        Ok(Self {
            num_regions: n,
            adjacency,
            region_sizes,
            region_centroids,
        })
    }

    pub fn num_regions(&self) -> usize {
        self.num_regions
    }

    /// Row-major `n x n` binary matrix.
    pub fn adjacency(&self) -> &[u8] {
        &self.adjacency
    }

    #[inline]
    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.num_regions + j] == 1
    }

    pub fn region_sizes(&self) -> &[usize] {
        &self.region_sizes
    }

    pub fn region_centroids(&self) -> &[[f64; 2]] {
        &self.region_centroids
    }

    /// Undirected edges as `(i, j)` with `i < j`, lexicographic.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.num_regions;
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.is_adjacent(i, j))
            .collect()
    }

    /// Neighbors of `region`, nearest centroid first (ties by index).
    pub fn neighbors(&self, region: usize) -> Vec<usize> {
        let c = self.region_centroids[region];
        let d = |j: usize| {
            let o = self.region_centroids[j];
            (o[0] - c[0]).hypot(o[1] - c[1])
        };
        let mut out: Vec<usize> = (0..self.num_regions)
            .filter(|&j| self.is_adjacent(region, j))
            .collect();
        out.sort_by(|&a, &b| d(a).total_cmp(&d(b)).then(a.cmp(&b)));
        out
    }
}

/// Two regions are adjacent when some pixel of one has a pixel of the other
/// in its 8-neighborhood. Neighborhoods are clipped at the image border.
pub fn build_rag(lm: &LabelMap) -> RegionGraph {
    let n = lm.num_regions();
    let (w, h) = (lm.width(), lm.height());
    let mut adjacency = vec![0u8; n * n];
    let mut sizes = vec![0usize; n];
    let mut sum_x = vec![0.0f64; n];
    let mut sum_y = vec![0.0f64; n];
    // Forward half of the 8-neighborhood; the other half is covered by symmetry.
    const FORWARD: [(isize, isize); 4] = [(1, 0), (-1, 1), (0, 1), (1, 1)];
    for y in 0..h {
        for x in 0..w {
            let a = lm.label_at(x, y) as usize - 1;
            sizes[a] += 1;
            sum_x[a] += x as f64;
            sum_y[a] += y as f64;
            for (dx, dy) in FORWARD {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let b = lm.label_at(nx as usize, ny as usize) as usize - 1;
                if a != b {
                    adjacency[a * n + b] = 1;
                    adjacency[b * n + a] = 1;
                }
            }
        }
    }
    let region_centroids = (0..n)
        .map(|i| [sum_x[i] / sizes[i] as f64, sum_y[i] / sizes[i] as f64])
        .collect();
    RegionGraph {
        num_regions: n,
        adjacency,
        region_sizes: sizes,
        region_centroids,
    }
}

/// `mask[i]` is true when region `i` has at least `min_size` pixels.
pub fn region_filter_mask(rg: &RegionGraph, min_size: usize) -> Vec<bool> {
    rg.region_sizes.iter().map(|&s| s >= min_size).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadrant_labels(size: usize) -> LabelMap {
        let half = size / 2;
        let labels = (0..size * size)
            .map(|i| {
                let (x, y) = (i % size, i / size);
                1 + u32::from(x >= half) + 2 * u32::from(y >= half)
            })
            .collect();
        LabelMap::from_labels(size, size, labels).unwrap()
    }

    #[test]
    fn quadrants_form_k4() {
        let rg = build_rag(&quadrant_labels(8));
        assert_eq!(rg.num_regions(), 4);
        assert_eq!(rg.edges(), vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(rg.region_sizes(), &[16, 16, 16, 16]);
        assert_eq!(rg.region_centroids()[0], [1.5, 1.5]);
    }

    #[test]
    fn single_region_has_no_edges() {
        let lm = LabelMap::from_labels(5, 5, vec![1; 25]).unwrap();
        let rg = build_rag(&lm);
        assert_eq!(rg.num_regions(), 1);
        assert!(rg.edges().is_empty());
        assert_eq!(rg.neighbors(0), Vec::<usize>::new());
    }

    #[test]
    fn two_stripes() {
        let (w, h) = (7, 6);
        let labels = (0..w * h).map(|i| if i / w < 2 { 1 } else { 2 }).collect();
        let rg = build_rag(&LabelMap::from_labels(w, h, labels).unwrap());
        assert_eq!(rg.edges(), vec![(0, 1)]);
        assert_eq!(rg.region_sizes(), &[14, 28]);
    }

    #[test]
    fn filter_mask_thresholds() {
        let rg = RegionGraph::from_parts(vec![5, 100, 200], vec![[0.0, 0.0]; 3], &[(0, 1)]).unwrap();
        assert_eq!(region_filter_mask(&rg, 0), vec![true; 3]);
        assert_eq!(region_filter_mask(&rg, 50), vec![false, true, true]);
        assert_eq!(region_filter_mask(&rg, 201), vec![false; 3]);
    }

    #[test]
    fn neighbors_sorted_by_centroid_distance() {
        let rg = RegionGraph::from_parts(
            vec![1, 1, 1, 1],
            vec![[0.0, 0.0], [10.0, 0.0], [2.0, 0.0], [5.0, 5.0]],
            &[(0, 1), (0, 2), (0, 3)],
        )
        .unwrap();
        assert_eq!(rg.neighbors(0), vec![2, 3, 1]);
    }

    #[test]
    fn from_parts_validation() {
        assert!(RegionGraph::from_parts(vec![1, 1], vec![[0.0; 2]; 2], &[(0, 0)]).is_err());
        assert!(RegionGraph::from_parts(vec![1, 1], vec![[0.0; 2]; 2], &[(0, 2)]).is_err());
        assert!(RegionGraph::from_parts(vec![0], vec![[0.0; 2]], &[]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn brute_force(lm: &LabelMap) -> Vec<(usize, usize)> {
            let (w, h) = (lm.width() as isize, lm.height() as isize);
            let mut edges = std::collections::BTreeSet::new();
            for y1 in 0..h {
                for x1 in 0..w {
                    for y2 in 0..h {
                        for x2 in 0..w {
                            if (x1 - x2).abs().max((y1 - y2).abs()) != 1 {
                                continue;
                            }
                            let a = lm.label_at(x1 as usize, y1 as usize) as usize - 1;
                            let b = lm.label_at(x2 as usize, y2 as usize) as usize - 1;
                            if a != b {
                                edges.insert((a.min(b), a.max(b)));
                            }
                        }
                    }
                }
            }
            edges.into_iter().collect()
        }

        fn label_map() -> impl Strategy<Value = LabelMap> {
            (1usize..9, 1usize..9, 1u32..6).prop_flat_map(|(w, h, k)| {
                proptest::collection::vec(1..=k, w * h).prop_map(move |raw| {
                    LabelMap::from_raw_unchecked(w, h, k as usize, raw).compacted()
                })
            })
        }

        proptest! {
            #[test]
            fn matches_brute_force(lm in label_map()) {
                let rg = build_rag(&lm);
                prop_assert_eq!(rg.edges(), brute_force(&lm));
                prop_assert_eq!(rg.region_sizes().iter().sum::<usize>(), lm.width() * lm.height());
                for i in 0..rg.num_regions() {
                    prop_assert!(!rg.is_adjacent(i, i));
                    for j in 0..rg.num_regions() {
                        prop_assert_eq!(rg.is_adjacent(i, j), rg.is_adjacent(j, i));
                    }
                }
            }

            #[test]
            fn border_padding_only_touches_new_region(lm in label_map()) {
                let (w, h) = (lm.width(), lm.height());
                let fresh = lm.num_regions() as u32 + 1;
                let mut labels = vec![fresh; (w + 2) * (h + 2)];
                for y in 0..h {
                    for x in 0..w {
                        labels[(y + 1) * (w + 2) + x + 1] = lm.label_at(x, y);
                    }
                }
                let padded = build_rag(&LabelMap::from_labels(w + 2, h + 2, labels).unwrap());
                let new = fresh as usize - 1;
                let inner: Vec<_> = padded.edges().into_iter().filter(|&(_, j)| j != new).collect();
                prop_assert_eq!(inner, build_rag(&lm).edges());
            }
        }
    }
}

use super::{Connectivity, LabelMap};
use crate::imaging::RasterImage;

/// Absorb every region smaller than `min_region_px` into the neighbor whose
/// mean color is closest (Euclidean RGB, ties to the lower label), repeating
/// until all regions are large enough or one region is left. Output labels
/// are compacted in raster-scan order.
///
/// Adjacency here follows `connectivity`, so merged regions stay connected
/// under the same neighborhood that produced them.
pub fn merge_small_regions(
    lm: &LabelMap,
    quantized: &RasterImage,
    min_region_px: usize,
    connectivity: Connectivity,
) -> LabelMap {
    assert_eq!(
        (lm.width(), lm.height()),
        (quantized.width(), quantized.height()),
        "label map and image dimensions differ"
    );
    let mut current = lm.compacted();
    loop {
        let n = current.num_regions();
        if n <= 1 {
            return current;
        }
        let sizes = current.region_sizes();
        if sizes.iter().all(|&s| s >= min_region_px) {
            return current;
        }
        let means = mean_colors(&current, quantized);
        let neighbors = neighbor_lists(&current, connectivity);

        let mut uf = UnionFind::new(n);
        let mut merged_any = false;
        for r in 0..n {
            if sizes[r] >= min_region_px {
                continue;
            }
            let best = neighbors[r].iter().copied().min_by(|&a, &b| {
                let da = color_dist2(&means[r], &means[a]);
                let db = color_dist2(&means[r], &means[b]);
                da.total_cmp(&db).then(a.cmp(&b))
            });
            if let Some(target) = best {
                merged_any |= uf.union(r, target);
            }
        }
        if !merged_any {
            return current;
        }
        let labels = current
            .labels()
            .iter()
            .map(|&l| uf.find(l as usize - 1) as u32 + 1)
            .collect();
        current = LabelMap::from_raw_unchecked(current.width(), current.height(), n, labels).compacted();
    }
}

fn mean_colors(lm: &LabelMap, img: &RasterImage) -> Vec<[f64; 3]> {
    let mut sums = vec![[0.0f64; 3]; lm.num_regions()];
    let mut counts = vec![0usize; lm.num_regions()];
    for y in 0..lm.height() {
        for x in 0..lm.width() {
            let r = lm.label_at(x, y) as usize - 1;
            let c = img.rgb(x, y);
            for ch in 0..3 {
                sums[r][ch] += f64::from(c[ch]);
            }
            counts[r] += 1;
        }
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, &n)| s.map(|v| v / n as f64))
        .collect()
}

fn color_dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Sorted, deduplicated neighbor region indices for each region.
pub(crate) fn neighbor_lists(lm: &LabelMap, connectivity: Connectivity) -> Vec<Vec<usize>> {
    let (w, h) = (lm.width() as isize, lm.height() as isize);
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); lm.num_regions()];
    for y in 0..h {
        for x in 0..w {
            let a = lm.label_at(x as usize, y as usize);
            for &(dx, dy) in connectivity.offsets() {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let b = lm.label_at(nx as usize, ny as usize);
                if a != b {
                    out[a as usize - 1].push(b as usize - 1);
                }
            }
        }
    }
    for list in &mut out {
        list.sort_unstable();
        list.dedup();
    }
    out
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        // keep the lower index as root so merged regions inherit deterministic ids
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

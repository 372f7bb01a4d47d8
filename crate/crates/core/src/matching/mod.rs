//! Asymmetric region-by-region graph comparison with ratio-test descriptor
//! matching, database ranking and retrieval metrics.

mod rank;
mod report;

pub use rank::{
    first_relevant_rank, mrr, precision_recall, rank_database, rank_database_with, write_rankings_csv, RankedEntry,
    RankedList,
};
pub use report::{parse_match_report, write_match_report};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Descriptor, DESCRIPTOR_LEN};
use crate::graph::Arsrg;
use crate::rag::region_filter_mask;

/// How query regions are paired with target regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionPairing {
    /// Every surviving query region is tried against every surviving target
    /// region; the target region with the most accepted pairs wins.
    #[default]
    AllCompatible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchParams {
    pub rho: f64,
    pub min_region_px: usize,
    pub region_pairing: RegionPairing,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            rho: 0.7,
            min_region_px: 50,
            region_pairing: RegionPairing::AllCompatible,
        }
    }
}

impl MatchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::InvalidParam(format!("rho must lie in (0, 1], got {}", self.rho)));
        }
        Ok(())
    }
}

/// One accepted leaf correspondence (leaf indices into each graph).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeafMatch {
    pub query: usize,
    pub target: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionMatch {
    pub query_region: usize,
    pub target_region: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub query_id: String,
    pub target_id: String,
    /// Sorted by query leaf; each query leaf appears at most once.
    pub pairs: Vec<LeafMatch>,
    pub per_region: Vec<RegionMatch>,
    pub surviving_query_leaves: usize,
    pub score: f64,
    pub params: MatchParams,
}

/// Euclidean distance between two 128-d descriptors.
pub fn descriptor_distance(a: &[f32], b: &[f32]) -> Result<f64> {
    for v in [a, b] {
        if v.len() != DESCRIPTOR_LEN {
            return Err(Error::DimensionMismatch {
                expected: DESCRIPTOR_LEN,
                actual: v.len(),
            });
        }
    }
    Ok(distance(a, b))
}

fn distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Nearest and second-nearest candidate among `candidates` given a distance
/// lookup. Nearest ties go to the earlier candidate.
fn two_nearest(candidates: &[usize], dist: impl Fn(usize) -> f64) -> Option<(usize, f64, f64)> {
    if candidates.len() < 2 {
        return None;
    }
    let (mut best, mut d1, mut d2) = (candidates[0], f64::INFINITY, f64::INFINITY);
    for &c in candidates {
        let d = dist(c);
        if d < d1 {
            d2 = d1;
            d1 = d;
            best = c;
        } else if d < d2 {
            d2 = d;
        }
    }
    Some((best, d1, d2))
}

/// Lowe ratio test: query descriptor `q` matches its nearest target when
/// `d1 < rho * d2`. Returns `(query index, target index, d1)`, ordered by query.
pub fn ratio_test_match(query: &[Descriptor], target: &[Descriptor], rho: f64) -> Vec<LeafMatch> {
    let candidates: Vec<usize> = (0..target.len()).collect();
    query
        .iter()
        .enumerate()
        .filter_map(|(qi, q)| {
            let (t, d1, d2) = two_nearest(&candidates, |t| distance(q.as_slice(), target[t].as_slice()))?;
            (d1 < rho * d2).then_some(LeafMatch {
                query: qi,
                target: t,
                distance: d1,
            })
        })
        .collect()
}

/// Compare `query` against `target`.
///
/// Regions smaller than `min_region_px` are removed on both sides. Each
/// surviving query region is ratio-matched against every surviving target
/// region and keeps the target region with the most accepted pairs (ties:
/// larger target region, then lower index). The score is the number of
/// accepted pairs over the number of surviving query leaves.
pub fn match_arsrg(query: &Arsrg, target: &Arsrg, params: &MatchParams) -> Result<MatchReport> {
    params.validate()?;
    let q_regions = surviving_regions(query, params.min_region_px);
    let surviving_query_leaves: usize = q_regions.iter().map(|&r| query.region_leaves(r).len()).sum();
    if surviving_query_leaves == 0 {
        return Err(Error::EmptyGraph(format!(
            "query `{}` has no keypoints in regions of at least {} px",
            query.image().id,
            params.min_region_px
        )));
    }
    let t_regions = surviving_regions(target, params.min_region_px);
    let t_sizes = target.regions().region_sizes();
    let (ql, tl) = (query.leaves(), target.leaves());

    let mut pairs = Vec::new();
    let mut per_region = Vec::new();
    for &qr in &q_regions {
        let q_members = query.region_leaves(qr);
        if q_members.is_empty() {
            continue;
        }
        // Distances from this region's leaves to every target leaf, computed once.
        let dists: Vec<Vec<f64>> = q_members
            .iter()
            .map(|&q| tl.iter().map(|t| distance(ql[q].descriptor.as_slice(), t.descriptor.as_slice())).collect())
            .collect();
        let mut best: Option<(usize, Vec<LeafMatch>)> = None;
        for &tr in &t_regions {
            let t_members = target.region_leaves(tr);
            let accepted: Vec<LeafMatch> = q_members
                .iter()
                .zip(&dists)
                .filter_map(|(&q, row)| {
                    let (t, d1, d2) = two_nearest(t_members, |t| row[t])?;
                    (d1 < params.rho * d2).then_some(LeafMatch {
                        query: q,
                        target: t,
                        distance: d1,
                    })
                })
                .collect();
            let better = match &best {
                None => !accepted.is_empty(),
                Some((b, b_pairs)) => {
                    accepted.len() > b_pairs.len() || (accepted.len() == b_pairs.len() && t_sizes[tr] > t_sizes[*b])
                }
            };
            if better {
                best = Some((tr, accepted));
            }
        }
        if let Some((tr, accepted)) = best {
            per_region.push(RegionMatch {
                query_region: qr,
                target_region: tr,
                count: accepted.len(),
            });
            pairs.extend(accepted);
        }
    }
    pairs.sort_by_key(|p| p.query);
    debug_assert!(pairs.windows(2).all(|w| w[0].query < w[1].query), "query leaf paired twice");
    Ok(MatchReport {
        query_id: query.image().id.clone(),
        target_id: target.image().id.clone(),
        score: pairs.len() as f64 / surviving_query_leaves.max(1) as f64,
        pairs,
        per_region,
        surviving_query_leaves,
        params: *params,
    })
}

fn surviving_regions(g: &Arsrg, min_region_px: usize) -> Vec<usize> {
    region_filter_mask(g.regions(), min_region_px)
        .into_iter()
        .enumerate()
        .filter_map(|(r, keep)| keep.then_some(r))
        .collect()
}

/// Number of leaves left after removing regions below `min_region_px`.
pub fn surviving_leaf_count(g: &Arsrg, min_region_px: usize) -> usize {
    surviving_regions(g, min_region_px).iter().map(|&r| g.region_leaves(r).len()).sum()
}

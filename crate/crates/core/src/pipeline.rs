//! Image -> graph composition used by the command-line tool, the benches and
//! the end-to-end tests.

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::features::{detect_and_describe_with, Keypoint, SiftParams};
use crate::graph::{build_arsrg, Arsrg, LeafConfig};
use crate::imaging::{resize_image, RasterImage};
use crate::rag::{build_rag, region_filter_mask};
use crate::segmentation::{segment, SegmentationParams};

/// Default SNNG threshold as a fraction of the image diagonal.
pub const DEFAULT_TAU_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LeafMode {
    #[default]
    Region,
    RegionGraph,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildParams {
    pub segmentation: SegmentationParams,
    pub sift: SiftParams,
    pub leaf_mode: LeafMode,
    /// Pixels; `None` means [`DEFAULT_TAU_FRACTION`] of the (resized) diagonal.
    pub tau: Option<f64>,
    pub resize: Option<(usize, usize)>,
}

impl Default for BuildParams {
    fn default() -> Self {
        Self {
            segmentation: SegmentationParams::default(),
            sift: SiftParams::default(),
            leaf_mode: LeafMode::Region,
            tau: None,
            resize: None,
        }
    }
}

impl BuildParams {
    pub fn leaf_config(&self, width: usize, height: usize) -> LeafConfig {
        match self.leaf_mode {
            LeafMode::Region => LeafConfig::RegionBased,
            LeafMode::RegionGraph => LeafConfig::RegionGraphBased {
                tau: self
                    .tau
                    .unwrap_or_else(|| DEFAULT_TAU_FRACTION * (width as f64).hypot(height as f64)),
            },
        }
    }
}

/// Segment, build the region graph, detect keypoints (unless `keypoints` is
/// given) and assemble the three-level graph.
///
/// Fails with `EmptyGraph` when no region reaches the minimum region size.
pub fn build_from_image(
    id: &str,
    img: &RasterImage,
    params: &BuildParams,
    keypoints: Option<Vec<Keypoint>>,
) -> Result<Arsrg> {
    let resized;
    let img = match params.resize {
        Some((w, h)) if (w, h) != (img.width(), img.height()) => {
            resized = resize_image(img, w, h)?;
            &resized
        }
        _ => img,
    };
    let lm = segment(img, &params.segmentation)?;
    let rg = build_rag(&lm);
    if !region_filter_mask(&rg, params.segmentation.min_region_px).contains(&true) {
        return Err(Error::EmptyGraph(format!(
            "`{id}`: no region of at least {} px in a {}x{} image",
            params.segmentation.min_region_px,
            img.width(),
            img.height()
        )));
    }
    let kps = match keypoints {
        Some(k) => k,
        None => detect_and_describe_with(img, &params.sift)?,
    };
    build_arsrg(id, &lm, &rg, kps, params.leaf_config(img.width(), img.height()))
}

/// [`build_from_image`] over many `(id, image)` pairs in input order.
pub fn build_batch(mode: ExecMode, items: &[(String, RasterImage)], params: &BuildParams) -> Result<Vec<Arsrg>> {
    exec::try_map_slice(mode, items, |(id, img)| build_from_image(id, img, params, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::shapes_image;

    #[test]
    fn default_tau_scales_with_diagonal() {
        let p = BuildParams {
            leaf_mode: LeafMode::RegionGraph,
            ..BuildParams::default()
        };
        assert_eq!(p.leaf_config(30, 40), LeafConfig::RegionGraphBased { tau: 5.0 });
        let fixed = BuildParams { tau: Some(25.0), ..p };
        assert_eq!(fixed.leaf_config(30, 40).tau(), Some(25.0));
    }

    #[test]
    fn oversized_filter_is_empty_graph() {
        let img = shapes_image(1, 32, 32);
        let mut p = BuildParams::default();
        p.segmentation.min_region_px = 32 * 32 + 1;
        assert!(matches!(build_from_image("x", &img, &p, None), Err(Error::EmptyGraph(_))));
    }

    #[test]
    fn resize_and_override() {
        let img = shapes_image(2, 64, 48);
        let p = BuildParams {
            resize: Some((32, 32)),
            ..BuildParams::default()
        };
        let g = build_from_image("x", &img, &p, Some(vec![])).unwrap();
        assert_eq!((g.image().width, g.image().height), (32, 32));
        assert!(g.leaves().is_empty());
    }
}

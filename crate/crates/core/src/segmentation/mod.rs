//! Region extraction: palette quantization, connected-component labeling and
//! absorption of undersized regions.

mod label;
mod label_map;
mod merge;
mod quantize;

pub use label::label_connected_components;
pub use label_map::LabelMap;
pub use merge::merge_small_regions;
pub use quantize::quantize_colors;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::RasterImage;

/// Pixel neighborhood used when growing regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    pub(crate) fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
        const EIGHT: [(isize, isize); 8] = [
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

impl TryFrom<u8> for Connectivity {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => Err(Error::InvalidParam(format!(
                "connectivity must be 4 or 8, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationParams {
    pub num_colors: usize,
    pub connectivity: Connectivity,
    pub min_region_px: usize,
    pub seed: u64,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            num_colors: 16,
            connectivity: Connectivity::Eight,
            min_region_px: 50,
            seed: 0,
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_colors < 2 {
            return Err(Error::InvalidParam(format!(
                "num_colors must be at least 2, got {}",
                self.num_colors
            )));
        }
        if self.min_region_px < 1 {
            return Err(Error::InvalidParam("min_region_px must be at least 1".into()));
        }
        Ok(())
    }
}

/// Quantize, label, then merge undersized regions.
pub fn segment(img: &RasterImage, params: &SegmentationParams) -> Result<LabelMap> {
    params.validate()?;
    let quantized = quantize_colors(img, params)?;
    let labels = label_connected_components(&quantized, params.connectivity);
    Ok(merge_small_regions(
        &labels,
        &quantized,
        params.min_region_px,
        params.connectivity,
    ))
}

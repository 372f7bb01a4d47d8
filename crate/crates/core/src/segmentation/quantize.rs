use std::collections::BTreeMap;

use super::SegmentationParams;
use crate::error::Result;
use crate::imaging::RasterImage;
use crate::kmeans::{kmeans, KMeansConfig};

const MAX_ITER: usize = 50;

/// Reduce an image to at most `params.num_colors` RGB palette entries.
///
/// Clustering runs over the color histogram (distinct colors weighted by
/// pixel count, in lexicographic order), so the result depends only on which
/// colors occur and how often, never on where. When the image already has no
/// more distinct colors than the palette size it is returned unchanged.
pub fn quantize_colors(img: &RasterImage, params: &SegmentationParams) -> Result<RasterImage> {
    params.validate()?;
    let rgb = img.to_rgb();
    let mut histogram: BTreeMap<[u8; 3], usize> = BTreeMap::new();
    for p in rgb.pixels().chunks_exact(3) {
        *histogram.entry([p[0], p[1], p[2]]).or_default() += 1;
    }
    if histogram.len() <= params.num_colors {
        return Ok(rgb);
    }

    let colors: Vec<[u8; 3]> = histogram.keys().copied().collect();
    let points: Vec<f64> = colors.iter().flat_map(|c| c.map(f64::from)).collect();
    let weights: Vec<f64> = histogram.values().map(|&n| n as f64).collect();
    let result = kmeans(
        &points,
        &weights,
        3,
        &KMeansConfig {
            k: params.num_colors,
            max_iter: MAX_ITER,
            tol: 1e-3,
            seed: params.seed,
        },
    );
    let palette: Vec<f64> = result.centers.iter().map(|v| v.round().clamp(0.0, 255.0)).collect();
    let mapping: BTreeMap<[u8; 3], [u8; 3]> = colors
        .iter()
        .zip(&result.assignment)
        .map(|(&c, &idx)| {
            let p = &palette[idx * 3..idx * 3 + 3];
            (c, [p[0] as u8, p[1] as u8, p[2] as u8])
        })
        .collect();

    let pixels = rgb
        .pixels()
        .chunks_exact(3)
        .flat_map(|p| mapping[&[p[0], p[1], p[2]]])
        .collect();
    RasterImage::new(rgb.width(), rgb.height(), 3, pixels)
}

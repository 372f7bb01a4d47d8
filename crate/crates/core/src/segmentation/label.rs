use super::{Connectivity, LabelMap};
use crate::imaging::RasterImage;

/// Label maximal same-color connected pixel sets.
///
/// Labels are handed out in raster-scan order of each component's first
/// pixel, starting at 1. Flood fill uses an explicit stack, so component area
/// is not bounded by call-stack depth.
pub fn label_connected_components(img: &RasterImage, connectivity: Connectivity) -> LabelMap {
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let px = img.pixels();
    let same = |a: usize, b: usize| px[a * c..a * c + c] == px[b * c..b * c + c];
    let offsets = connectivity.offsets();

    let mut labels = vec![0u32; w * h];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (x, y) = ((idx % w) as isize, (idx / w) as isize);
            for &(dx, dy) in offsets {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let n = ny as usize * w + nx as usize;
                if labels[n] == 0 && same(start, n) {
                    labels[n] = next;
                    stack.push(n);
                }
            }
        }
    }
    LabelMap::from_raw_unchecked(w, h, next as usize, labels)
}

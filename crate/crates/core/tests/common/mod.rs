#![allow(dead_code)]

use std::collections::VecDeque;

use arsrg_core::features::{Descriptor, Keypoint, DESCRIPTOR_LEN};
use arsrg_core::graph::{build_arsrg, Arsrg, LeafConfig};
use arsrg_core::imaging::RasterImage;
use arsrg_core::rag::build_rag;
use arsrg_core::segmentation::LabelMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn kp(x: f64, y: f64, descriptor: Descriptor) -> Keypoint {
    Keypoint {
        x,
        y,
        scale: 1.6,
        orientation: 0.0,
        descriptor,
    }
}

pub fn random_descriptor(rng: &mut ChaCha8Rng) -> Descriptor {
    let mut raw = [0.0f32; DESCRIPTOR_LEN];
    for v in raw.iter_mut() {
        *v = rng.random::<f32>();
    }
    Descriptor::normalized(raw)
}

/// Unit descriptor near `center`, perturbed by `radius` in random directions.
pub fn jittered(rng: &mut ChaCha8Rng, center: &Descriptor, radius: f32) -> Descriptor {
    let mut raw = [0.0f32; DESCRIPTOR_LEN];
    for (v, &c) in raw.iter_mut().zip(center.as_slice()) {
        *v = (c + rng.random_range(-radius..=radius)).max(0.0);
    }
    Descriptor::normalized(raw)
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, extent: f64) -> Vec<Keypoint> {
    (0..n)
        .map(|_| kp(rng.random_range(0.0..extent), rng.random_range(0.0..extent), Descriptor::zeros()))
        .collect()
}

/// `side x side` label map split into four quadrants (labels 1..=4).
pub fn quadrant_map(side: usize) -> LabelMap {
    let half = side / 2;
    let labels = (0..side * side)
        .map(|i| 1 + u32::from(i % side >= half) + 2 * u32::from(i / side >= half))
        .collect();
    LabelMap::from_labels(side, side, labels).unwrap()
}

/// Graph on a 32x32 quadrant map with random in-bounds leaves and descriptors.
pub fn random_graph(rng: &mut ChaCha8Rng, id: &str, n_leaves: usize, config: LeafConfig) -> Arsrg {
    let lm = quadrant_map(32);
    let kps = (0..n_leaves)
        .map(|_| {
            let d = random_descriptor(rng);
            kp(rng.random_range(0.0..31.0), rng.random_range(0.0..31.0), d)
        })
        .collect();
    build_arsrg(id, &lm, &build_rag(&lm), kps, config).unwrap()
}

/// Image with `palette` colors per pixel, drawn uniformly.
pub fn random_palette_image(rng: &mut ChaCha8Rng, w: usize, h: usize, palette: usize) -> RasterImage {
    let colors: Vec<[u8; 3]> = (0..palette).map(|i| [(i * 37) as u8, (i * 91) as u8, (255 - i * 13) as u8]).collect();
    let pixels = (0..w * h).flat_map(|_| colors[rng.random_range(0..palette)]).collect();
    RasterImage::new(w, h, 3, pixels).unwrap()
}

/// Breadth-first flood fill; labels in raster first-appearance order.
pub fn bfs_components(img: &RasterImage, eight: bool) -> Vec<u32> {
    let (w, h) = (img.width(), img.height());
    let mut labels = vec![0u32; w * h];
    let mut next = 0;
    for start in 0..w * h {
        if labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        let color = img.rgb(start % w, start / w);
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if (dx == 0 && dy == 0) || (!eight && dx != 0 && dy != 0) {
                        continue;
                    }
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if labels[j] == 0 && img.rgb(nx as usize, ny as usize) == color {
                        labels[j] = next;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    labels
}

/// Rename labels by first appearance in raster order.
pub fn canonical(labels: &[u32]) -> Vec<u32> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let n = map.len() as u32 + 1;
            *map.entry(l).or_insert(n)
        })
        .collect()
}

/// Brute-force SNNG edge set over all member pairs.
pub fn brute_force_edges(pts: &[Keypoint], members: &[usize], tau: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            let d = ((pts[i].x - pts[j].x).powi(2) + (pts[i].y - pts[j].y).powi(2)).sqrt();
            if d < tau {
                out.push((i.min(j), i.max(j)));
            }
        }
    }
    out.sort_unstable();
    out
}

/// Random label map: a few random rectangles painted over a background, relabelled into components.
pub fn random_label_map(rng: &mut ChaCha8Rng, w: usize, h: usize) -> LabelMap {
    let mut img = RasterImage::filled(w, h, &[0, 0, 0]).unwrap();
    for c in 1..rng.random_range(3..9u8) {
        let (x0, y0) = (rng.random_range(0..w), rng.random_range(0..h));
        let (x1, y1) = (rng.random_range(x0..w) + 1, rng.random_range(y0..h) + 1);
        for y in y0..y1 {
            for x in x0..x1 {
                img.pixel_mut(x, y).copy_from_slice(&[c * 30, c * 11, 255 - c * 20]);
            }
        }
    }
    let labels = bfs_components(&img, true);
    LabelMap::from_labels(w, h, labels).unwrap()
}

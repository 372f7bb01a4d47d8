//! Seeded generator of flat-colored shape scenes, used for fixtures,
//! benchmarks and the end-to-end retrieval checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imaging::{luma, RasterImage};

#[derive(Debug, Clone, Copy)]
enum Shape {
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64 },
    Triangle { p: [(f64, f64); 3] },
    Ring { cx: f64, cy: f64, r_in: f64, r_out: f64 },
    Cross { cx: f64, cy: f64, arm: f64, half: f64 },
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x < x1 && y >= y0 && y < y1,
            Shape::Ellipse { cx, cy, rx, ry } => ((x - cx) / rx).powi(2) + ((y - cy) / ry).powi(2) <= 1.0,
            Shape::Triangle { p } => {
                let cross = |a: (f64, f64), b: (f64, f64)| (b.0 - a.0) * (y - a.1) - (b.1 - a.1) * (x - a.0);
                let d = [cross(p[0], p[1]), cross(p[1], p[2]), cross(p[2], p[0])];
                d.iter().all(|&v| v >= 0.0) || d.iter().all(|&v| v <= 0.0)
            }
            Shape::Ring { cx, cy, r_in, r_out } => {
                let r = (x - cx).hypot(y - cy);
                r >= r_in && r <= r_out
            }
            Shape::Cross { cx, cy, arm, half } => {
                let (dx, dy) = ((x - cx).abs(), (y - cy).abs());
                (dx <= arm && dy <= half) || (dy <= arm && dx <= half)
            }
        }
    }
}

fn random_shape(rng: &mut ChaCha8Rng, w: f64, h: f64) -> Shape {
    let side = w.min(h);
    let cx = rng.random_range(0.15 * w..0.85 * w);
    let cy = rng.random_range(0.15 * h..0.85 * h);
    let size = rng.random_range(0.06 * side..0.16 * side);
    match rng.random_range(0..5) {
        0 => {
            let aspect = rng.random_range(0.5..1.6);
            Shape::Rect {
                x0: cx - size,
                y0: cy - size * aspect,
                x1: cx + size,
                y1: cy + size * aspect,
            }
        }
        1 => Shape::Ellipse {
            cx,
            cy,
            rx: size,
            ry: size * rng.random_range(0.5..1.0),
        },
        2 => {
            let rot = rng.random_range(0.0..std::f64::consts::TAU);
            let mut p = [(0.0, 0.0); 3];
            for (i, v) in p.iter_mut().enumerate() {
                let a = rot + i as f64 * std::f64::consts::TAU / 3.0 + rng.random_range(-0.4..0.4);
                let r = size * rng.random_range(1.0..1.5);
                *v = (cx + r * a.cos(), cy + r * a.sin());
            }
            Shape::Triangle { p }
        }
        3 => Shape::Ring {
            cx,
            cy,
            r_in: size * 0.5,
            r_out: size,
        },
        _ => Shape::Cross {
            cx,
            cy,
            arm: size,
            half: size * 0.35,
        },
    }
}

/// Color whose luma differs from every entry of `avoid` by at least `gap`.
fn contrasting_color(rng: &mut ChaCha8Rng, avoid: &[u8], gap: i32) -> [u8; 3] {
    for _ in 0..200 {
        let c = [rng.random::<u8>(), rng.random::<u8>(), rng.random::<u8>()];
        let l = i32::from(luma(c[0], c[1], c[2]));
        if avoid.iter().all(|&a| (i32::from(a) - l).abs() >= gap) {
            return c;
        }
    }
    let l = avoid.first().copied().unwrap_or(0);
    if l > 127 {
        [0, 0, 0]
    } else {
        [255, 255, 255]
    }
}

/// A uniform background with 5 to 8 overlapping solid shapes.
pub fn shapes_image(seed: u64, width: usize, height: usize) -> RasterImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let background = contrasting_color(&mut rng, &[], 0);
    let mut img = RasterImage::filled(width, height, &background).unwrap();
    let mut lumas = vec![luma(background[0], background[1], background[2])];
    let count = rng.random_range(5..=8);
    for _ in 0..count {
        let shape = random_shape(&mut rng, width as f64, height as f64);
        let mut color = contrasting_color(&mut rng, &lumas, 30);
        if (i32::from(luma(color[0], color[1], color[2])) - i32::from(lumas[0])).abs() < 60 {
            color = contrasting_color(&mut rng, &lumas[..1], 60);
        }
        lumas.push(luma(color[0], color[1], color[2]));
        for y in 0..height {
            for x in 0..width {
                if shape.contains(x as f64 + 0.5, y as f64 + 0.5) {
                    img.pixel_mut(x, y).copy_from_slice(&color);
                }
            }
        }
    }
    img
}

/// `n` scenes with seeds `seed, seed + 1, ...`.
pub fn shapes_corpus(n: usize, seed: u64, width: usize, height: usize) -> Vec<RasterImage> {
    (0..n as u64).map(|i| shapes_image(seed + i, width, height)).collect()
}

//! Difference-of-Gaussians keypoint detector with gradient-histogram
//! descriptors.
//!
//! Compact variant of Lowe's detector: no initial upsampling, fixed octave
//! count, 2x2 block averaging between octaves. Every stage is symmetric under
//! the dihedral group of the pixel grid, so on images whose sides are
//! multiples of `2^(octaves-1)` a 90 degree rotation of the input rotates the
//! keypoints exactly (up to float rounding).

use std::f64::consts::TAU;

use super::{Descriptor, Keypoint, DESCRIPTOR_LEN};
use crate::error::{Error, Result};
use crate::imaging::{to_gray, RasterImage};

pub const MIN_IMAGE_SIDE: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SiftParams {
    pub octaves: usize,
    pub scales_per_octave: usize,
    /// Blur of the first level of each octave, in octave pixels.
    pub base_sigma: f64,
    /// Blur already present in the input.
    pub input_sigma: f64,
    /// Minimum |DoG| at the interpolated extremum, intensities in [0, 1].
    pub contrast_threshold: f64,
    /// Maximum principal curvature ratio.
    pub edge_ratio: f64,
}

impl Default for SiftParams {
    fn default() -> Self {
        Self {
            octaves: 3,
            scales_per_octave: 3,
            base_sigma: 1.6,
            input_sigma: 0.5,
            contrast_threshold: 0.03,
            edge_ratio: 10.0,
        }
    }
}

const BORDER: usize = 5;
const MAX_INTERP_STEPS: usize = 5;
const ORI_BINS: usize = 36;
const ORI_SIGMA_FACTOR: f64 = 1.5;
const ORI_PEAK_RATIO: f32 = 0.8;
const DESC_WIDTH: usize = 4;
const DESC_BINS: usize = 8;
const DESC_SCALE_FACTOR: f64 = 3.0;
const DESC_CLAMP: f32 = 0.2;

/// Detect with default parameters.
pub fn detect_and_describe(img: &RasterImage) -> Result<Vec<Keypoint>> {
    detect_and_describe_with(img, &SiftParams::default())
}

pub fn detect_and_describe_with(img: &RasterImage, params: &SiftParams) -> Result<Vec<Keypoint>> {
    let (w, h) = (img.width(), img.height());
    if w.min(h) < MIN_IMAGE_SIDE {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min: MIN_IMAGE_SIDE,
        });
    }
    let gray = to_gray(img);
    let base = Plane {
        width: w,
        height: h,
        data: gray.pixels().iter().map(|&v| f32::from(v) / 255.0).collect(),
    };
    let pyramid = Pyramid::build(base, params);

    let mut located = Vec::new();
    for (o, octave) in pyramid.octaves.iter().enumerate() {
        for s in 1..=params.scales_per_octave {
            for c in octave.extrema(s, params) {
                located.push(Located::new(o, c, params, (w, h)));
            }
        }
    }
    let kept = suppress_duplicates(&located);

    let mut out = Vec::new();
    for i in kept {
        let loc = &located[i];
        pyramid.octaves[loc.octave].describe(loc, &mut out);
    }
    Ok(out)
}

/// A refined extremum mapped back to input-image coordinates.
struct Located {
    octave: usize,
    candidate: Candidate,
    x: f64,
    y: f64,
    /// Blur in octave pixels.
    local_sigma: f64,
    /// Blur in input pixels.
    sigma: f64,
}

impl Located {
    fn new(octave: usize, c: Candidate, params: &SiftParams, (img_w, img_h): (usize, usize)) -> Self {
        let local_sigma =
            params.base_sigma * 2f64.powf((c.scale as f64 + c.offset[2]) / params.scales_per_octave as f64);
        let factor = 2f64.powi(octave as i32);
        // octave pixel i covers input pixels [i * factor, (i + 1) * factor)
        let to_input = |v: f64| (v + 0.5) * factor - 0.5;
        Located {
            octave,
            candidate: c,
            x: to_input(c.x as f64 + c.offset[0]).clamp(0.0, (img_w - 1) as f64),
            y: to_input(c.y as f64 + c.offset[1]).clamp(0.0, (img_h - 1) as f64),
            local_sigma,
            sigma: local_sigma * factor,
        }
    }
}

/// Plateaus and octave boundaries make several grid extrema converge on the
/// same structure. Keep the strongest of each group (stable on ties) and
/// return survivors in detection order.
fn suppress_duplicates(located: &[Located]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..located.len()).collect();
    order.sort_by(|&a, &b| located[b].candidate.contrast.total_cmp(&located[a].candidate.contrast));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let a = &located[i];
        let duplicate = kept.iter().any(|&j| {
            let b = &located[j];
            let near = (a.x - b.x).hypot(a.y - b.y) < 0.5 * a.sigma.min(b.sigma);
            near && (a.sigma / b.sigma).log2().abs() < 0.5
        });
        if !duplicate {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

#[derive(Clone)]
struct Plane {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Plane {
    #[inline]
    fn at(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// Separable Gaussian blur, replicate border. The result is the mean of
    /// the row-first and column-first passes and taps are summed in mirrored
    /// pairs, which makes the float result exactly equivariant under flips
    /// and transposition of the grid.
    fn blur(&self, sigma: f64) -> Plane {
        let kernel = gaussian_kernel(sigma);
        let rows_first = self.convolve_cols(&kernel).convolve_rows(&kernel);
        let cols_first = self.convolve_rows(&kernel).convolve_cols(&kernel);
        Plane {
            width: self.width,
            height: self.height,
            data: rows_first
                .data
                .iter()
                .zip(&cols_first.data)
                .map(|(a, b)| (a + b) * 0.5)
                .collect(),
        }
    }

    fn convolve_rows(&self, kernel: &[f32]) -> Plane {
        let w = self.width as isize;
        let mut data = vec![0.0f32; self.data.len()];
        for (row, out) in self.data.chunks_exact(self.width).zip(data.chunks_exact_mut(self.width)) {
            for (x, slot) in out.iter_mut().enumerate() {
                *slot = symmetric_tap_sum(kernel, |offset| row[(x as isize + offset).clamp(0, w - 1) as usize]);
            }
        }
        Plane {
            width: self.width,
            height: self.height,
            data,
        }
    }

    fn convolve_cols(&self, kernel: &[f32]) -> Plane {
        let h = self.height as isize;
        let mut data = vec![0.0f32; self.data.len()];
        for y in 0..self.height {
            for x in 0..self.width {
                data[y * self.width + x] = symmetric_tap_sum(kernel, |offset| {
                    self.data[(y as isize + offset).clamp(0, h - 1) as usize * self.width + x]
                });
            }
        }
        Plane {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Average non-overlapping 2x2 blocks.
    fn halve(&self) -> Plane {
        let (w, h) = (self.width / 2, self.height / 2);
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                // diagonal pairs first, so the sum is rotation-exact
                let s = (self.at(2 * x, 2 * y) + self.at(2 * x + 1, 2 * y + 1))
                    + (self.at(2 * x + 1, 2 * y) + self.at(2 * x, 2 * y + 1));
                data.push(s * 0.25);
            }
        }
        Plane {
            width: w,
            height: h,
            data,
        }
    }

    fn diff(&self, other: &Plane) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// Central-difference gradient; caller keeps (x, y) off the border.
    #[inline]
    fn gradient(&self, x: usize, y: usize) -> (f32, f32) {
        (
            self.at(x + 1, y) - self.at(x - 1, y),
            self.at(x, y + 1) - self.at(x, y - 1),
        )
    }
}

/// `kernel` has odd length and is symmetric; `sample(offset)` reads the
/// input at a signed offset from the output position.
#[inline]
fn symmetric_tap_sum(kernel: &[f32], sample: impl Fn(isize) -> f32) -> f32 {
    let r = kernel.len() / 2;
    let mut acc = kernel[r] * sample(0);
    for k in 1..=r {
        acc += kernel[r + k] * (sample(-(k as isize)) + sample(k as isize));
    }
    acc
}

fn gaussian_kernel(sigma: f64) -> Vec<f32> {
    let r = (4.0 * sigma).ceil().max(1.0) as isize;
    let raw: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|v| (v / sum) as f32).collect()
}

struct Octave {
    gaussians: Vec<Plane>,
    dogs: Vec<Plane>,
}

struct Pyramid {
    octaves: Vec<Octave>,
}

impl Pyramid {
    fn build(base: Plane, params: &SiftParams) -> Pyramid {
        let s = params.scales_per_octave;
        let k = 2f64.powf(1.0 / s as f64);
        let sigmas: Vec<f64> = (0..s + 3).map(|i| params.base_sigma * k.powi(i as i32)).collect();
        let initial_blur = (params.base_sigma.powi(2) - params.input_sigma.powi(2)).max(0.01).sqrt();

        let mut octaves: Vec<Octave> = Vec::with_capacity(params.octaves);
        let mut first = base.blur(initial_blur);
        for o in 0..params.octaves {
            if o > 0 {
                let prev = &octaves[o - 1].gaussians[s];
                if prev.width < 2 * BORDER + 3 || prev.height < 2 * BORDER + 3 {
                    break;
                }
                first = prev.halve();
            }
            let mut gaussians = Vec::with_capacity(s + 3);
            gaussians.push(first.clone());
            for i in 1..s + 3 {
                let inc = (sigmas[i].powi(2) - sigmas[i - 1].powi(2)).sqrt();
                let next = gaussians[i - 1].blur(inc);
                gaussians.push(next);
            }
            let dogs = gaussians.windows(2).map(|p| p[1].diff(&p[0])).collect();
            octaves.push(Octave { gaussians, dogs });
        }
        Pyramid { octaves }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    x: usize,
    y: usize,
    scale: usize,
    offset: [f64; 3],
    /// |DoG| at the interpolated extremum.
    contrast: f64,
}

impl Octave {
    fn extrema(&self, s: usize, params: &SiftParams) -> Vec<Candidate> {
        let cur = &self.dogs[s];
        let (w, h) = (cur.width, cur.height);
        if w <= 2 * BORDER || h <= 2 * BORDER {
            return Vec::new();
        }
        let prefilter = (0.5 * params.contrast_threshold) as f32;
        let mut out = Vec::new();
        for y in BORDER..h - BORDER {
            for x in BORDER..w - BORDER {
                let v = cur.at(x, y);
                if v.abs() <= prefilter || !self.is_extremum(s, x, y, v) {
                    continue;
                }
                if let Some(c) = self.refine(s, x, y, params) {
                    out.push(c);
                }
            }
        }
        out
    }

    fn is_extremum(&self, s: usize, x: usize, y: usize, v: f32) -> bool {
        let maximum = v > 0.0;
        for ds in 0..3 {
            let plane = &self.dogs[s + ds - 1];
            for yy in y - 1..=y + 1 {
                for xx in x - 1..=x + 1 {
                    if ds == 1 && xx == x && yy == y {
                        continue;
                    }
                    let n = plane.at(xx, yy);
                    if (maximum && n > v) || (!maximum && n < v) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Quadratic fit in (x, y, scale); rejects low contrast and edge responses.
    fn refine(&self, mut s: usize, mut x: usize, mut y: usize, params: &SiftParams) -> Option<Candidate> {
        let (w, h) = (self.dogs[0].width, self.dogs[0].height);
        let last_scale = params.scales_per_octave;
        for _ in 0..MAX_INTERP_STEPS {
            let (g, hess) = self.derivatives(s, x, y);
            let offset = solve3(&hess, &g)?.map(|v| -v);
            if offset.iter().all(|v| v.abs() < 0.5) {
                let value = f64::from(self.dogs[s].at(x, y))
                    + 0.5 * (g[0] * offset[0] + g[1] * offset[1] + g[2] * offset[2]);
                if value.abs() < params.contrast_threshold {
                    return None;
                }
                let (dxx, dyy, dxy) = (hess[0][0], hess[1][1], hess[0][1]);
                let tr = dxx + dyy;
                let det = dxx * dyy - dxy * dxy;
                let r = params.edge_ratio;
                if det <= 0.0 || tr * tr * r >= (r + 1.0).powi(2) * det {
                    return None;
                }
                return Some(Candidate {
                    x,
                    y,
                    scale: s,
                    offset,
                    contrast: value.abs(),
                });
            }
            let step = |p: usize, d: f64| p as isize + d.round() as isize;
            let (nx, ny, ns) = (step(x, offset[0]), step(y, offset[1]), step(s, offset[2]));
            if ns < 1
                || ns > last_scale as isize
                || nx < BORDER as isize
                || ny < BORDER as isize
                || nx >= (w - BORDER) as isize
                || ny >= (h - BORDER) as isize
            {
                return None;
            }
            (x, y, s) = (nx as usize, ny as usize, ns as usize);
        }
        None
    }

    /// Gradient and Hessian of the DoG stack, ordered (x, y, scale).
    fn derivatives(&self, s: usize, x: usize, y: usize) -> ([f64; 3], [[f64; 3]; 3]) {
        let (prev, cur, next) = (&self.dogs[s - 1], &self.dogs[s], &self.dogs[s + 1]);
        let v = |p: &Plane, xx: usize, yy: usize| f64::from(p.at(xx, yy));
        let c = v(cur, x, y);
        let dx = (v(cur, x + 1, y) - v(cur, x - 1, y)) * 0.5;
        let dy = (v(cur, x, y + 1) - v(cur, x, y - 1)) * 0.5;
        let ds = (v(next, x, y) - v(prev, x, y)) * 0.5;
        let dxx = v(cur, x + 1, y) + v(cur, x - 1, y) - 2.0 * c;
        let dyy = v(cur, x, y + 1) + v(cur, x, y - 1) - 2.0 * c;
        let dss = v(next, x, y) + v(prev, x, y) - 2.0 * c;
        let dxy = (v(cur, x + 1, y + 1) - v(cur, x - 1, y + 1) - v(cur, x + 1, y - 1)
            + v(cur, x - 1, y - 1))
            * 0.25;
        let dxs = (v(next, x + 1, y) - v(next, x - 1, y) - v(prev, x + 1, y) + v(prev, x - 1, y)) * 0.25;
        let dys = (v(next, x, y + 1) - v(next, x, y - 1) - v(prev, x, y + 1) + v(prev, x, y - 1)) * 0.25;
        (
            [dx, dy, ds],
            [[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]],
        )
    }

    fn describe(&self, loc: &Located, out: &mut Vec<Keypoint>) {
        let c = loc.candidate;
        let plane = &self.gaussians[c.scale];
        for orientation in dominant_orientations(plane, c.x, c.y, loc.local_sigma) {
            out.push(Keypoint {
                x: loc.x,
                y: loc.y,
                scale: loc.sigma,
                orientation,
                descriptor: descriptor(plane, c.x, c.y, loc.local_sigma, orientation),
            });
        }
    }
}

/// Solve `a * v = b` by Cramer's rule.
fn solve3(a: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    if d.abs() < 1e-12 {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, slot) in out.iter_mut().enumerate() {
        let mut m = *a;
        for row in 0..3 {
            m[row][col] = b[row];
        }
        *slot = det(&m) / d;
    }
    Some(out)
}

fn dominant_orientations(plane: &Plane, cx: usize, cy: usize, sigma: f64) -> Vec<f64> {
    let win_sigma = ORI_SIGMA_FACTOR * sigma;
    let radius = (3.0 * win_sigma).round() as isize;
    let denom = 2.0 * win_sigma * win_sigma;
    let mut hist = [0.0f32; ORI_BINS];
    for j in -radius..=radius {
        for i in -radius..=radius {
            let (x, y) = (cx as isize + i, cy as isize + j);
            if x < 1 || y < 1 || x >= plane.width as isize - 1 || y >= plane.height as isize - 1 {
                continue;
            }
            let (gx, gy) = plane.gradient(x as usize, y as usize);
            let mag = (f64::from(gx).powi(2) + f64::from(gy).powi(2)).sqrt();
            if mag == 0.0 {
                continue;
            }
            let weight = (-((i * i + j * j) as f64) / denom).exp();
            let angle = f64::from(gy).atan2(f64::from(gx)).rem_euclid(TAU);
            let pos = angle * ORI_BINS as f64 / TAU;
            let b0 = pos.floor();
            let frac = pos - b0;
            let b0 = (b0 as usize) % ORI_BINS;
            let b1 = (b0 + 1) % ORI_BINS;
            hist[b0] += (mag * weight * (1.0 - frac)) as f32;
            hist[b1] += (mag * weight * frac) as f32;
        }
    }
    let smoothed: Vec<f32> = (0..ORI_BINS)
        .map(|b| {
            let at = |d: isize| hist[(b as isize + d).rem_euclid(ORI_BINS as isize) as usize];
            (at(-2) + at(2)) * (1.0 / 16.0) + (at(-1) + at(1)) * (4.0 / 16.0) + at(0) * (6.0 / 16.0)
        })
        .collect();
    let peak = smoothed.iter().copied().fold(0.0f32, f32::max);
    if peak <= 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for b in 0..ORI_BINS {
        let l = smoothed[(b + ORI_BINS - 1) % ORI_BINS];
        let r = smoothed[(b + 1) % ORI_BINS];
        let v = smoothed[b];
        if v > l && v > r && v >= ORI_PEAK_RATIO * peak {
            let shift = 0.5 * f64::from(l - r) / f64::from(l - 2.0 * v + r);
            let bin = b as f64 + shift;
            out.push((bin * TAU / ORI_BINS as f64).rem_euclid(TAU));
        }
    }
    out
}

fn descriptor(plane: &Plane, cx: usize, cy: usize, sigma: f64, orientation: f64) -> Descriptor {
    let d = DESC_WIDTH as f64;
    let cell = DESC_SCALE_FACTOR * sigma;
    let radius = (cell * std::f64::consts::SQRT_2 * (d + 1.0) * 0.5).round() as isize;
    let (cos_t, sin_t) = (orientation.cos(), orientation.sin());
    let weight_denom = 2.0 * (0.5 * d) * (0.5 * d);
    let mut hist = [0.0f64; (DESC_WIDTH + 2) * (DESC_WIDTH + 2) * (DESC_BINS + 1)];
    let idx = |r: usize, c: usize, o: usize| (r * (DESC_WIDTH + 2) + c) * (DESC_BINS + 1) + o;

    for j in -radius..=radius {
        for i in -radius..=radius {
            // offset expressed in the keypoint frame, in cell units
            let u = (cos_t * i as f64 + sin_t * j as f64) / cell;
            let v = (-sin_t * i as f64 + cos_t * j as f64) / cell;
            let cbin = u + 0.5 * d - 0.5;
            let rbin = v + 0.5 * d - 0.5;
            if rbin <= -1.0 || rbin >= d || cbin <= -1.0 || cbin >= d {
                continue;
            }
            let (x, y) = (cx as isize + i, cy as isize + j);
            if x < 1 || y < 1 || x >= plane.width as isize - 1 || y >= plane.height as isize - 1 {
                continue;
            }
            let (gx, gy) = plane.gradient(x as usize, y as usize);
            let mag = (f64::from(gx).powi(2) + f64::from(gy).powi(2)).sqrt();
            if mag == 0.0 {
                continue;
            }
            let angle = (f64::from(gy).atan2(f64::from(gx)) - orientation).rem_euclid(TAU);
            let obin = angle * DESC_BINS as f64 / TAU;
            let weight = (-(u * u + v * v) / weight_denom).exp();
            let value = mag * weight;

            let (r0, c0, o0) = (rbin.floor(), cbin.floor(), obin.floor());
            let (fr, fc, fo) = (rbin - r0, cbin - c0, obin - o0);
            // shift by one so the -1 cell lands on a padding slot
            let (r0, c0) = ((r0 + 1.0) as usize, (c0 + 1.0) as usize);
            let o0 = (o0 as usize) % DESC_BINS;
            for (dr, wr) in [(0, 1.0 - fr), (1, fr)] {
                for (dc, wc) in [(0, 1.0 - fc), (1, fc)] {
                    for (dob, wo) in [(0, 1.0 - fo), (1, fo)] {
                        hist[idx(r0 + dr, c0 + dc, o0 + dob)] += value * wr * wc * wo;
                    }
                }
            }
        }
    }

    let mut raw = [0.0f32; DESCRIPTOR_LEN];
    for r in 0..DESC_WIDTH {
        for c in 0..DESC_WIDTH {
            for o in 0..DESC_BINS {
                // wrap the extra orientation slot back onto bin 0
                let mut v = hist[idx(r + 1, c + 1, o)];
                if o == 0 {
                    v += hist[idx(r + 1, c + 1, DESC_BINS)];
                }
                raw[(r * DESC_WIDTH + c) * DESC_BINS + o] = v as f32;
            }
        }
    }
    Descriptor::normalized_clamped(raw, DESC_CLAMP)
}

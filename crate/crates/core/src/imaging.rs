//! Raster loading, grayscale conversion and bilinear resampling.

use std::path::Path;

use crate::error::{Error, Result};

/// An 8-bit raster, row-major with interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParam(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidParam(format!(
                "unsupported channel count {channels}"
            )));
        }
        if pixels.len() != width * height * channels {
            return Err(Error::DimensionMismatch {
                expected: width * height * channels,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    /// Image filled with a single gray level or RGB color.
    pub fn filled(width: usize, height: usize, color: &[u8]) -> Result<Self> {
        let pixels = color
            .iter()
            .copied()
            .cycle()
            .take(width * height * color.len())
            .collect();
        Self::new(width, height, color.len(), pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let start = (y * self.width + x) * self.channels;
        &self.pixels[start..start + self.channels]
    }

    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [u8] {
        let start = (y * self.width + x) * self.channels;
        &mut self.pixels[start..start + self.channels]
    }

    /// RGB triple of a pixel; gray pixels are replicated.
    pub fn rgb(&self, x: usize, y: usize) -> [u8; 3] {
        let p = self.pixel(x, y);
        if self.channels == 1 {
            [p[0]; 3]
        } else {
            [p[0], p[1], p[2]]
        }
    }

    /// Three-channel copy (identity for RGB input).
    pub fn to_rgb(&self) -> RasterImage {
        if self.channels == 3 {
            return self.clone();
        }
        let pixels = self.pixels.iter().flat_map(|&v| [v, v, v]).collect();
        RasterImage {
            width: self.width,
            height: self.height,
            channels: 3,
            pixels,
        }
    }

    /// Rotate by 90 degrees clockwise as displayed: pixel (x, y) moves to
    /// (height - 1 - y, x) and the output is `height` wide.
    pub fn rotate90(&self) -> RasterImage {
        let (w, h, c) = (self.width, self.height, self.channels);
        let mut out = vec![0u8; self.pixels.len()];
        for y in 0..h {
            for x in 0..w {
                let nx = h - 1 - y;
                let ny = x;
                let src = (y * w + x) * c;
                let dst = (ny * h + nx) * c;
                out[dst..dst + c].copy_from_slice(&self.pixels[src..src + c]);
            }
        }
        RasterImage {
            width: h,
            height: w,
            channels: c,
            pixels: out,
        }
    }
}

/// Decode a PNG, binary PPM (P6) or binary PGM (P5) file.
pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

/// Decode an in-memory PNG/PPM/PGM.
pub fn decode_image(bytes: &[u8]) -> Result<RasterImage> {
    let format = image::guess_format(bytes).map_err(|e| Error::Format(e.to_string()))?;
    if !matches!(format, image::ImageFormat::Png | image::ImageFormat::Pnm) {
        return Err(Error::Format(format!("unsupported image format {format:?}")));
    }
    let decoded = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| Error::Format(e.to_string()))?;
    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    let gray = matches!(
        decoded.color(),
        image::ColorType::L8 | image::ColorType::L16 | image::ColorType::La8 | image::ColorType::La16
    );
    if gray {
        RasterImage::new(width, height, 1, decoded.into_luma8().into_raw())
    } else {
        RasterImage::new(width, height, 3, decoded.into_rgb8().into_raw())
    }
}

/// Write an image; the format follows the extension (`.png`, `.pgm`, `.ppm`).
pub fn save_image(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let (w, h) = (img.width as u32, img.height as u32);
    match ext.as_str() {
        "pgm" | "ppm" => {
            let magic = if img.channels == 1 { "P5" } else { "P6" };
            let mut bytes = format!("{magic}\n{w} {h}\n255\n").into_bytes();
            bytes.extend_from_slice(&img.pixels);
            std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
        }
        "png" => {
            let color = if img.channels == 1 {
                image::ExtendedColorType::L8
            } else {
                image::ExtendedColorType::Rgb8
            };
            image::save_buffer_with_format(path, &img.pixels, w, h, color, image::ImageFormat::Png)
                .map_err(|e| match e {
                    image::ImageError::IoError(io) => Error::io(path, io),
                    other => Error::Format(other.to_string()),
                })
        }
        other => Err(Error::Format(format!("unsupported output extension `{other}`"))),
    }
}

/// BT.601 luma; identity on gray input.
pub fn to_gray(img: &RasterImage) -> RasterImage {
    if img.channels == 1 {
        return img.clone();
    }
    let pixels = img
        .pixels
        .chunks_exact(3)
        .map(|p| luma(p[0], p[1], p[2]))
        .collect();
    RasterImage {
        width: img.width,
        height: img.height,
        channels: 1,
        pixels,
    }
}

#[inline]
pub(crate) fn luma(r: u8, g: u8, b: u8) -> u8 {
    let v = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    v.round().clamp(0.0, 255.0) as u8
}

/// Bilinear resampling with pixel-center alignment. Identity when the
/// dimensions already match.
pub fn resize_image(img: &RasterImage, target_w: usize, target_h: usize) -> Result<RasterImage> {
    if target_w == 0 || target_h == 0 {
        return Err(Error::InvalidParam(format!(
            "resize target must be positive, got {target_w}x{target_h}"
        )));
    }
    if target_w == img.width && target_h == img.height {
        return Ok(img.clone());
    }
    let c = img.channels;
    let xs = sample_axis(img.width, target_w);
    let ys = sample_axis(img.height, target_h);
    let mut out = Vec::with_capacity(target_w * target_h * c);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            for ch in 0..c {
                let at = |x: usize, y: usize| f64::from(img.pixels[(y * img.width + x) * c + ch]);
                let top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
                let bottom = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
                let v = top * (1.0 - fy) + bottom * fy;
                out.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    RasterImage::new(target_w, target_h, c, out)
}

/// For each output coordinate: the two source taps and the weight of the second.
fn sample_axis(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let pos = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = pos.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, pos - i0 as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_minimal_pgm() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255, 255, 0]);
        let img = decode_image(&bytes).unwrap();
        assert_eq!(img, RasterImage::new(2, 2, 1, vec![0, 255, 255, 0]).unwrap());
    }

    #[test]
    fn png_round_trip_keeps_channels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgb.png");
        let pixels: Vec<u8> = (0..150 * 150 * 3).map(|i| (i % 251) as u8).collect();
        let img = RasterImage::new(150, 150, 3, pixels).unwrap();
        save_image(&img, &path).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back.channels(), 3);
        assert_eq!(back, img);
    }

    #[test]
    fn truncated_png_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        let img = RasterImage::filled(40, 40, &[10, 20, 30]).unwrap();
        save_image(&img, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let err = decode_image(&bytes[..bytes.len() / 2]).unwrap_err();
        assert!(matches!(err, Error::Format(_)), "{err:?}");
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_image("/nonexistent/definitely/not/here.png").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn jpeg_magic_is_rejected() {
        let err = decode_image(&[0xFF, 0xD8, 0xFF, 0xE0, 0, 0, 0, 0]).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }

    #[test]
    fn ppm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.ppm");
        let img = RasterImage::new(2, 1, 3, vec![1, 2, 3, 4, 5, 6]).unwrap();
        save_image(&img, &path).unwrap();
        assert_eq!(load_image(&path).unwrap(), img);
    }

    #[test]
    fn resize_identity_and_constant() {
        let pixels: Vec<u8> = (0..150 * 150).map(|i| (i * 7 % 256) as u8).collect();
        let img = RasterImage::new(150, 150, 1, pixels).unwrap();
        assert_eq!(resize_image(&img, 150, 150).unwrap(), img);

        let c = RasterImage::new(2, 2, 1, vec![7; 4]).unwrap();
        let up = resize_image(&c, 4, 4).unwrap();
        assert!(up.pixels().iter().all(|&v| v == 7));

        let big = RasterImage::filled(300, 300, &[1, 2, 3]).unwrap();
        let small = resize_image(&big, 150, 150).unwrap();
        assert_eq!((small.width(), small.height()), (150, 150));
        assert!(resize_image(&big, 0, 5).is_err());
    }

    #[test]
    fn halving_averages_blocks() {
        let img = RasterImage::new(2, 2, 1, vec![0, 10, 20, 30]).unwrap();
        let half = resize_image(&img, 1, 1).unwrap();
        assert_eq!(half.pixels(), &[15]);
    }

    #[test]
    fn gray_conversion() {
        let img = RasterImage::new(3, 1, 3, vec![255, 255, 255, 0, 0, 0, 100, 200, 50]).unwrap();
        let g = to_gray(&img);
        assert_eq!(g.pixels(), &[255, 0, 153]);
        assert_eq!(to_gray(&g), g);
    }

    #[test]
    fn rotate_four_times_is_identity() {
        let pixels: Vec<u8> = (0..5 * 3 * 3).map(|i| i as u8).collect();
        let img = RasterImage::new(5, 3, 3, pixels).unwrap();
        let r = img.rotate90();
        assert_eq!((r.width(), r.height()), (3, 5));
        assert_eq!(r.pixel(2, 0), img.pixel(0, 0));
        assert_eq!(r.rotate90().rotate90().rotate90(), img);
    }

    #[test]
    fn rejects_bad_buffers() {
        assert!(RasterImage::new(2, 2, 1, vec![0; 3]).is_err());
        assert!(RasterImage::new(0, 2, 1, vec![]).is_err());
        assert!(RasterImage::new(1, 1, 2, vec![0; 2]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small_image() -> impl Strategy<Value = RasterImage> {
            (1usize..12, 1usize..12, prop_oneof![Just(1usize), Just(3usize)]).prop_flat_map(
                |(w, h, c)| {
                    proptest::collection::vec(any::<u8>(), w * h * c)
                        .prop_map(move |px| RasterImage::new(w, h, c, px).unwrap())
                },
            )
        }

        proptest! {
            #[test]
            fn resize_is_idempotent(img in small_image(), tw in 1usize..20, th in 1usize..20) {
                let once = resize_image(&img, tw, th).unwrap();
                prop_assert_eq!(resize_image(&once, tw, th).unwrap(), once);
            }

            #[test]
            fn gray_is_idempotent(img in small_image()) {
                let g = to_gray(&img);
                prop_assert_eq!(to_gray(&g), g.clone());
                prop_assert_eq!(g.channels(), 1);
            }

            #[test]
            fn constant_stays_constant(v in any::<u8>(), w in 1usize..10, h in 1usize..10,
                                       tw in 1usize..25, th in 1usize..25) {
                let img = RasterImage::filled(w, h, &[v, v, v]).unwrap();
                let r = resize_image(&img, tw, th).unwrap();
                prop_assert!(r.pixels().iter().all(|&p| p == v));
                prop_assert!(to_gray(&r).pixels().iter().all(|&p| p == v));
            }
        }
    }
}

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const HEADER: &str = "ARSRG-LM 1";

/// Per-pixel region labels, row-major. Labels run `1..=num_regions` with no
/// gaps; region index `i` in the graph layers corresponds to label `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    num_regions: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    /// Validates that every label in `1..=max` occurs at least once.
    pub fn from_labels(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParam("label map must be non-empty".into()));
        }
        if labels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                actual: labels.len(),
            });
        }
        let max = labels.iter().copied().max().unwrap_or(0) as usize;
        let mut seen = vec![false; max + 1];
        for &l in &labels {
            if l == 0 {
                return Err(Error::InvalidParam("label 0 is reserved for unlabeled".into()));
            }
            seen[l as usize] = true;
        }
        if let Some(missing) = seen.iter().skip(1).position(|s| !s) {
            return Err(Error::InvalidParam(format!(
                "label set has a gap at {}",
                missing + 1
            )));
        }
        Ok(Self {
            width,
            height,
            num_regions: max,
            labels,
        })
    }

    pub(crate) fn from_raw_unchecked(width: usize, height: usize, num_regions: usize, labels: Vec<u32>) -> Self {
        debug_assert_eq!(labels.len(), width * height);
        Self {
            width,
            height,
            num_regions,
            labels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_regions(&self) -> usize {
        self.num_regions
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn label_at(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Pixel count per region index.
    pub fn region_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.num_regions];
        for &l in &self.labels {
            sizes[l as usize - 1] += 1;
        }
        sizes
    }

    /// Same rotation convention as [`crate::imaging::RasterImage::rotate90`];
    /// label values are kept.
    pub fn rotate90(&self) -> LabelMap {
        let (w, h) = (self.width, self.height);
        let mut out = vec![0u32; self.labels.len()];
        for y in 0..h {
            for x in 0..w {
                out[x * h + (h - 1 - y)] = self.labels[y * w + x];
            }
        }
        LabelMap {
            width: h,
            height: w,
            num_regions: self.num_regions,
            labels: out,
        }
    }

    /// Renumber labels in raster-scan order of first appearance.
    pub fn compacted(&self) -> LabelMap {
        let max = self.labels.iter().copied().max().unwrap_or(0) as usize;
        let mut remap = vec![0u32; max + 1];
        let mut next = 0u32;
        let labels = self
            .labels
            .iter()
            .map(|&l| {
                let slot = &mut remap[l as usize];
                if *slot == 0 {
                    next += 1;
                    *slot = next;
                }
                *slot
            })
            .collect();
        LabelMap::from_raw_unchecked(self.width, self.height, next as usize, labels)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.labels.len() * 3 + 32);
        let _ = writeln!(out, "{HEADER}");
        let _ = writeln!(out, "{} {} {}", self.width, self.height, self.num_regions);
        for row in self.labels.chunks_exact(self.width) {
            let line: Vec<String> = row.iter().map(u32::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim_end() == HEADER => {}
            _ => return Err(Error::Format(format!("expected header `{HEADER}`"))),
        }
        let mut tokens = lines.flat_map(str::split_whitespace);
        let mut next_num = |what: &str| -> Result<usize> {
            let tok = tokens
                .next()
                .ok_or_else(|| Error::Format(format!("missing {what}")))?;
            tok.parse::<usize>()
                .map_err(|_| Error::Format(format!("bad {what} `{tok}`")))
        };
        let width = next_num("width")?;
        let height = next_num("height")?;
        let n = next_num("num_regions")?;
        let mut labels = Vec::with_capacity(width * height);
        for _ in 0..width * height {
            let l = next_num("label")?;
            labels.push(u32::try_from(l).map_err(|_| Error::Format(format!("label {l} too large")))?);
        }
        if tokens.next().is_some() {
            return Err(Error::Format("trailing data after labels".into()));
        }
        let lm = LabelMap::from_labels(width, height, labels)?;
        if lm.num_regions != n {
            return Err(Error::Format(format!(
                "header declares {n} regions but labels use {}",
                lm.num_regions
            )));
        }
        Ok(lm)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

//! Leaf-level attributes: keypoints with 128-d gradient descriptors.

mod kpfile;
mod sift;

pub use kpfile::{load_keypoints, parse_keypoints, save_keypoints, write_keypoints};
pub use sift::{detect_and_describe, detect_and_describe_with, SiftParams, MIN_IMAGE_SIDE};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const DESCRIPTOR_LEN: usize = 128;

/// Non-negative 128-d descriptor with unit L2 norm, or all zeros for a
/// patch without gradient.
#[derive(Clone, PartialEq)]
pub struct Descriptor([f32; DESCRIPTOR_LEN]);

impl Descriptor {
    pub fn zeros() -> Self {
        Descriptor([0.0; DESCRIPTOR_LEN])
    }

    /// Wrap raw values without normalizing. Length must be 128.
    pub fn from_slice(values: &[f32]) -> Result<Self> {
        let arr: [f32; DESCRIPTOR_LEN] = values.try_into().map_err(|_| Error::DimensionMismatch {
            expected: DESCRIPTOR_LEN,
            actual: values.len(),
        })?;
        Ok(Descriptor(arr))
    }

    /// Scale to unit norm (zero vectors stay zero).
    pub fn normalized(mut values: [f32; DESCRIPTOR_LEN]) -> Self {
        normalize(&mut values);
        Descriptor(values)
    }

    /// Normalize, clamp every entry at `clamp`, normalize again.
    pub(crate) fn normalized_clamped(mut values: [f32; DESCRIPTOR_LEN], clamp: f32) -> Self {
        normalize(&mut values);
        for v in &mut values {
            *v = v.min(clamp);
        }
        normalize(&mut values);
        Descriptor(values)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt()
    }
}

fn normalize(values: &mut [f32; DESCRIPTOR_LEN]) {
    let n = values.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt();
    if n > 0.0 {
        for v in values.iter_mut() {
            *v = (f64::from(*v) / n) as f32;
        }
    }
}

impl std::fmt::Debug for Descriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Descriptor(|d|={:.6}, {:?}..)", self.norm(), &self.0[..4])
    }
}

impl Serialize for Descriptor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Descriptor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f32>::deserialize(d)?;
        Descriptor::from_slice(&v).map_err(serde::de::Error::custom)
    }
}

/// A detected (or imported) keypoint in input-image pixel coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub scale: f64,
    /// Radians in `[0, 2pi)`.
    pub orientation: f64,
    pub descriptor: Descriptor,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        let mut raw = [0.0f32; DESCRIPTOR_LEN];
        raw[0] = 3.0;
        raw[1] = 4.0;
        let d = Descriptor::normalized(raw);
        assert!((d.as_slice()[0] - 0.6).abs() < 1e-7);
        assert!((d.norm() - 1.0).abs() < 1e-6);
        assert_eq!(Descriptor::normalized([0.0; DESCRIPTOR_LEN]).norm(), 0.0);
    }

    #[test]
    fn clamping_caps_dominant_bins() {
        let mut raw = [0.0f32; DESCRIPTOR_LEN];
        raw[5] = 10.0;
        raw[6] = 1.0;
        let d = Descriptor::normalized_clamped(raw, 0.2);
        // (10, 1)/sqrt(101) -> clamp -> (0.2, 1/sqrt(101)) -> renormalize
        let b = 1.0 / 101f64.sqrt();
        let n = (0.04 + b * b).sqrt();
        assert!((f64::from(d.as_slice()[5]) - 0.2 / n).abs() < 1e-6);
        assert!((f64::from(d.as_slice()[6]) - b / n).abs() < 1e-6);
        assert!((d.norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn wrong_length_rejected() {
        assert!(matches!(
            Descriptor::from_slice(&[0.0; 127]),
            Err(Error::DimensionMismatch { expected: 128, actual: 127 })
        ));
    }
}

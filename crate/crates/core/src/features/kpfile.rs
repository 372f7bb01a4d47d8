//! `ARSRG-KP 1` keypoint interchange format.
//!
//! ```text
//! ARSRG-KP 1
//! <count>
//! x y scale orientation d0 ... d127
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::{Descriptor, Keypoint, DESCRIPTOR_LEN};
use crate::error::{Error, Result};

const HEADER: &str = "ARSRG-KP 1";
const COLUMNS: usize = 4 + DESCRIPTOR_LEN;
const NORM_TOLERANCE: f64 = 0.01;

pub fn write_keypoints(kps: &[Keypoint]) -> String {
    let mut out = String::with_capacity(32 + kps.len() * COLUMNS * 10);
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "{}", kps.len());
    for k in kps {
        let _ = write!(out, "{} {} {} {}", k.x, k.y, k.scale, k.orientation);
        for v in k.descriptor.as_slice() {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

pub fn save_keypoints(kps: &[Keypoint], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_keypoints(kps)).map_err(|e| Error::io(path, e))
}

pub fn load_keypoints(path: impl AsRef<Path>) -> Result<Vec<Keypoint>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_keypoints(&text)
}

pub fn parse_keypoints(text: &str) -> Result<Vec<Keypoint>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == HEADER => {}
        _ => return Err(Error::Format(format!("line 1: expected header `{HEADER}`"))),
    }
    let count: usize = match lines.next() {
        Some((_, l)) => l
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("line 2: bad keypoint count `{}`", l.trim())))?,
        None => return Err(Error::Format("line 2: missing keypoint count".into())),
    };
    let mut out = Vec::with_capacity(count);
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_row(line).map_err(|m| Error::Format(format!("line {}: {m}", idx + 1)))?);
    }
    if out.len() != count {
        return Err(Error::Format(format!(
            "header declares {count} keypoints, found {}",
            out.len()
        )));
    }
    Ok(out)
}

fn parse_row(line: &str) -> std::result::Result<Keypoint, String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != COLUMNS {
        return Err(format!("expected {COLUMNS} columns, found {}", fields.len()));
    }
    let num = |i: usize| -> std::result::Result<f64, String> {
        let v: f64 = fields[i]
            .parse()
            .map_err(|_| format!("column {}: not a number `{}`", i + 1, fields[i]))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("column {}: non-finite value", i + 1))
        }
    };
    let (x, y, scale, orientation) = (num(0)?, num(1)?, num(2)?, num(3)?);
    if x < 0.0 || y < 0.0 {
        return Err("negative keypoint coordinate".into());
    }
    if scale <= 0.0 {
        return Err(format!("scale must be positive, got {scale}"));
    }
    if !(0.0..std::f64::consts::TAU).contains(&orientation) {
        return Err(format!("orientation {orientation} outside [0, 2pi)"));
    }
    let mut desc = [0.0f32; DESCRIPTOR_LEN];
    for (i, slot) in desc.iter_mut().enumerate() {
        let v = num(4 + i)?;
        if !(0.0..=1.0).contains(&v) {
            return Err(format!("descriptor value {v} outside [0, 1]"));
        }
        *slot = v as f32;
    }
    let norm = desc.iter().map(|&v| f64::from(v).powi(2)).sum::<f64>().sqrt();
    if norm != 0.0 && (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(format!("descriptor norm {norm:.4} is not unit"));
    }
    Ok(Keypoint {
        x,
        y,
        scale,
        orientation,
        descriptor: Descriptor::normalized(desc),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kp(seed: u32) -> Keypoint {
        let mut raw = [0.0f32; DESCRIPTOR_LEN];
        for (i, v) in raw.iter_mut().enumerate() {
            *v = ((i as u32 * 31 + seed * 17) % 23) as f32;
        }
        Keypoint {
            x: 10.25 + f64::from(seed),
            y: 3.0 / 7.0,
            scale: 1.6 * f64::from(seed + 1),
            orientation: 0.1 * f64::from(seed),
            descriptor: Descriptor::normalized(raw),
        }
    }

    #[test]
    fn empty_list_has_header_only() {
        let text = write_keypoints(&[]);
        assert_eq!(text, "ARSRG-KP 1\n0\n");
        assert!(parse_keypoints(&text).unwrap().is_empty());
    }

    #[test]
    fn two_rows() {
        let text = write_keypoints(&[kp(1), kp(2)]);
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().nth(2).unwrap().split(' ').count(), COLUMNS);
    }

    #[test]
    fn file_round_trip_within_tolerance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k.kp");
        let kps: Vec<_> = (0..5).map(kp).collect();
        save_keypoints(&kps, &path).unwrap();
        let back = load_keypoints(&path).unwrap();
        assert_eq!(back.len(), kps.len());
        for (a, b) in kps.iter().zip(&back) {
            assert!((a.x - b.x).abs() < 1e-5 && (a.y - b.y).abs() < 1e-5);
            assert!((a.scale - b.scale).abs() < 1e-5);
            assert!((a.orientation - b.orientation).abs() < 1e-5);
            for (u, v) in a.descriptor.as_slice().iter().zip(b.descriptor.as_slice()) {
                assert!((u - v).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn single_valid_row() {
        let mut row = String::from("ARSRG-KP 1\n1\n1 2 1.5 0");
        row.push_str(" 1");
        row.push_str(&" 0".repeat(127));
        let kps = parse_keypoints(&row).unwrap();
        assert_eq!(kps.len(), 1);
        assert_eq!(kps[0].descriptor.as_slice()[0], 1.0);
    }

    #[test]
    fn malformed_inputs() {
        let short = format!("ARSRG-KP 1\n1\n1 2 1.5 0{}", " 0".repeat(127));
        assert!(matches!(parse_keypoints(&short), Err(Error::Format(m)) if m.contains("columns")));
        assert!(parse_keypoints("ARSRG-KP 2\n0\n").is_err());
        assert!(parse_keypoints("ARSRG-KP 1\n2\n").is_err());
        let non_unit = format!("ARSRG-KP 1\n1\n1 2 1.5 0{}", " 0.5".repeat(128));
        assert!(parse_keypoints(&non_unit).is_err());
        let neg = format!("ARSRG-KP 1\n1\n1 2 1.5 0 -0.1{}", " 0".repeat(127));
        assert!(parse_keypoints(&neg).is_err());
        let bad_ori = format!("ARSRG-KP 1\n1\n1 2 1.5 7{}", " 0".repeat(128));
        assert!(parse_keypoints(&bad_ori).is_err());
    }

    #[test]
    fn near_unit_descriptor_is_renormalized() {
        let row = format!("ARSRG-KP 1\n1\n0 0 1 0 0.995{}", " 0".repeat(127));
        let kps = parse_keypoints(&row).unwrap();
        assert!((kps[0].descriptor.norm() - 1.0).abs() < 1e-6);
    }
}

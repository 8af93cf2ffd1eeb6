//! Headerless planar YUV input with caller-supplied geometry.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::{FramePlane, FrameRate, VideoSequence};
use crate::error::{Error, Result};

/// Planar layouts accepted for raw input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelFormat {
    Gray { depth: u8 },
    Yuv420 { depth: u8 },
    Yuv422 { depth: u8 },
    Yuv444 { depth: u8 },
}

impl PixelFormat {
    pub fn depth(self) -> u8 {
        match self {
            PixelFormat::Gray { depth }
            | PixelFormat::Yuv420 { depth }
            | PixelFormat::Yuv422 { depth }
            | PixelFormat::Yuv444 { depth } => depth,
        }
    }

    fn bytes_per_sample(self) -> usize {
        if self.depth() > 8 {
            2
        } else {
            1
        }
    }

    pub(crate) fn luma_bytes(self, width: usize, height: usize) -> usize {
        width * height * self.bytes_per_sample()
    }

    pub(crate) fn frame_bytes(self, width: usize, height: usize) -> usize {
        let chroma = match self {
            PixelFormat::Gray { .. } => 0,
            PixelFormat::Yuv420 { .. } => 2 * width.div_ceil(2) * height.div_ceil(2),
            PixelFormat::Yuv422 { .. } => 2 * width.div_ceil(2) * height,
            PixelFormat::Yuv444 { .. } => 2 * width * height,
        };
        (width * height + chroma) * self.bytes_per_sample()
    }
}

impl FromStr for PixelFormat {
    type Err = Error;

    /// ffmpeg-style names: `gray`, `yuv420p`, `yuv422p10le`, ...
    fn from_str(s: &str) -> Result<Self> {
        let (base, depth) = match s.strip_suffix("le") {
            Some(b) => {
                let split = b.trim_end_matches(|c: char| c.is_ascii_digit());
                let depth: u8 = b[split.len()..]
                    .parse()
                    .map_err(|_| Error::Unsupported(format!("pixel format {s}")))?;
                (split, depth)
            }
            None => (s, 8),
        };
        if ![8, 10, 12, 16].contains(&depth) {
            return Err(Error::Unsupported(format!("pixel format {s}")));
        }
        Ok(match base {
            "gray" => PixelFormat::Gray { depth },
            "yuv420p" => PixelFormat::Yuv420 { depth },
            "yuv422p" => PixelFormat::Yuv422 { depth },
            "yuv444p" => PixelFormat::Yuv444 { depth },
            _ => return Err(Error::Unsupported(format!("pixel format {s}"))),
        })
    }
}

/// Geometry that a headerless file cannot carry itself.
#[derive(Debug, Clone, Copy)]
pub struct RawGeometry {
    pub width: usize,
    pub height: usize,
    pub fps: FrameRate,
    pub format: PixelFormat,
}

/// Converts packed luma samples to reals on the [0, 255] scale.
pub(crate) fn decode_luma(bytes: &[u8], depth: u8) -> Vec<f64> {
    if depth <= 8 {
        bytes.iter().map(|&b| f64::from(b)).collect()
    } else {
        let scale = 255.0 / f64::from((1u32 << depth) - 1);
        bytes
            .chunks_exact(2)
            .map(|c| f64::from(u16::from_le_bytes([c[0], c[1]])) * scale)
            .collect()
    }
}

pub fn read_raw_yuv(path: impl AsRef<Path>, geometry: RawGeometry) -> Result<VideoSequence> {
    let path = path.as_ref();
    let RawGeometry {
        width,
        height,
        fps,
        format,
    } = geometry;
    if width == 0 || height == 0 {
        return Err(Error::invalid("raw geometry needs positive width and height"));
    }
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    let frame_bytes = format.frame_bytes(width, height);
    let luma_bytes = format.luma_bytes(width, height);
    if data.len() % frame_bytes != 0 {
        return Err(Error::Truncated {
            frame: data.len() / frame_bytes,
        });
    }
    let frames: Vec<_> = data
        .chunks_exact(frame_bytes)
        .map(|f| FramePlane::from_raw_parts(width, height, decode_luma(&f[..luma_bytes], format.depth())))
        .collect();
    if frames.is_empty() {
        return Err(Error::NoFrames);
    }
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    VideoSequence::new(frames, fps, id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pixel_format_names() {
        assert_eq!("yuv420p".parse::<PixelFormat>().unwrap(), PixelFormat::Yuv420 { depth: 8 });
        assert_eq!(
            "yuv422p10le".parse::<PixelFormat>().unwrap(),
            PixelFormat::Yuv422 { depth: 10 }
        );
        assert_eq!("gray".parse::<PixelFormat>().unwrap(), PixelFormat::Gray { depth: 8 });
        assert!("nv12".parse::<PixelFormat>().is_err());
        assert!("yuv420p9le".parse::<PixelFormat>().is_err());
    }

    #[test]
    fn frame_sizes() {
        assert_eq!(PixelFormat::Yuv420 { depth: 8 }.frame_bytes(4, 4), 24);
        assert_eq!(PixelFormat::Yuv420 { depth: 8 }.frame_bytes(3, 3), 9 + 8);
        assert_eq!(PixelFormat::Yuv444 { depth: 10 }.frame_bytes(2, 2), 24);
    }

    #[test]
    fn reads_and_detects_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clip.yuv");
        let geom = RawGeometry {
            width: 4,
            height: 2,
            fps: FrameRate::integer(24),
            format: PixelFormat::Yuv420 { depth: 8 },
        };
        let mut bytes = Vec::new();
        for t in 0..3u8 {
            bytes.extend((0..8).map(|i| i * 10 + t));
            bytes.extend([128u8; 4]);
        }
        fs::write(&path, &bytes).unwrap();
        let v = read_raw_yuv(&path, geom).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v.frame(2).get(1, 0), 12.0);
        assert_eq!(v.content_id(), "clip");

        fs::write(&path, &bytes[..30]).unwrap();
        assert!(matches!(read_raw_yuv(&path, geom), Err(Error::Truncated { frame: 2 })));
        fs::write(&path, []).unwrap();
        assert!(matches!(read_raw_yuv(&path, geom), Err(Error::NoFrames)));
    }
}

//! YUV4MPEG2 reader/writer. Only the luma plane is kept; chroma is skipped.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::raw::{decode_luma, PixelFormat};
use super::{FramePlane, FrameRate, VideoSequence};
use crate::error::{Error, Result};

const MAGIC: &[u8] = b"YUV4MPEG2";
const FRAME_TAG: &[u8] = b"FRAME";

struct Header {
    width: usize,
    height: usize,
    fps: FrameRate,
    format: PixelFormat,
}

fn colorspace(tag: &str) -> Option<PixelFormat> {
    use PixelFormat::*;
    Some(match tag {
        "420" | "420jpeg" | "420paldv" | "420mpeg2" => Yuv420 { depth: 8 },
        "422" => Yuv422 { depth: 8 },
        "444" => Yuv444 { depth: 8 },
        "mono" => Gray { depth: 8 },
        "420p10" => Yuv420 { depth: 10 },
        "422p10" => Yuv422 { depth: 10 },
        "444p10" => Yuv444 { depth: 10 },
        "mono10" => Gray { depth: 10 },
        "420p12" => Yuv420 { depth: 12 },
        "422p12" => Yuv422 { depth: 12 },
        "444p12" => Yuv444 { depth: 12 },
        "mono12" => Gray { depth: 12 },
        "420p16" => Yuv420 { depth: 16 },
        "422p16" => Yuv422 { depth: 16 },
        "444p16" => Yuv444 { depth: 16 },
        "mono16" => Gray { depth: 16 },
        _ => return None,
    })
}

fn parse_header(data: &[u8]) -> Result<(Header, usize)> {
    if !data.starts_with(MAGIC) {
        return Err(Error::Header {
            offset: 0,
            reason: "missing YUV4MPEG2 signature".into(),
        });
    }
    let end = data
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Header {
            offset: data.len(),
            reason: "header line is not terminated".into(),
        })?;
    let line = &data[MAGIC.len()..end];
    let (mut width, mut height, mut fps, mut format) = (None, None, None, PixelFormat::Yuv420 { depth: 8 });

    let mut pos = MAGIC.len();
    for token in line.split(|&b| b == b' ') {
        let offset = pos;
        pos += token.len() + 1;
        if token.is_empty() {
            continue;
        }
        let bad = |reason: String| Error::Header { offset, reason };
        let text = std::str::from_utf8(token).map_err(|_| bad("non-ASCII parameter".into()))?;
        let (key, value) = text.split_at(1);
        match key {
            "W" => width = Some(value.parse::<usize>().map_err(|_| bad(format!("bad width {value:?}")))?),
            "H" => height = Some(value.parse::<usize>().map_err(|_| bad(format!("bad height {value:?}")))?),
            "F" => {
                let rate = value
                    .split_once(':')
                    .and_then(|(n, d)| Some((n.parse::<u64>().ok()?, d.parse::<u64>().ok()?)))
                    .ok_or_else(|| bad(format!("bad frame rate {value:?}")))?;
                fps = Some(FrameRate::new(rate.0, rate.1).map_err(|e| bad(e.to_string()))?);
            }
            "C" => {
                format = colorspace(value)
                    .ok_or_else(|| Error::Unsupported(format!("chroma format C{value}")))?;
            }
            // Interlacing, aspect ratio and extensions do not affect luma layout.
            "I" | "A" | "X" => {}
            _ => return Err(bad(format!("unknown parameter {text:?}"))),
        }
    }
    let missing = |what: &str| Error::Header {
        offset: end,
        reason: format!("missing {what}"),
    };
    let width = width.ok_or_else(|| missing("W"))?;
    let height = height.ok_or_else(|| missing("H"))?;
    let fps = fps.ok_or_else(|| missing("F"))?;
    if width == 0 || height == 0 {
        return Err(Error::Header {
            offset: MAGIC.len(),
            reason: format!("zero dimension {width}x{height}"),
        });
    }
    Ok((
        Header {
            width,
            height,
            fps,
            format,
        },
        end + 1,
    ))
}

/// Parses an in-memory Y4M stream.
pub fn parse_y4m(data: &[u8], content_id: &str) -> Result<VideoSequence> {
    let (header, mut pos) = parse_header(data)?;
    let frame_bytes = header.format.frame_bytes(header.width, header.height);
    let luma_bytes = header.format.luma_bytes(header.width, header.height);
    let mut frames = Vec::new();
    while pos < data.len() {
        let index = frames.len();
        let rest = &data[pos..];
        if rest.len() < FRAME_TAG.len() {
            return Err(Error::Truncated { frame: index });
        }
        if !rest.starts_with(FRAME_TAG) {
            return Err(Error::Header {
                offset: pos,
                reason: format!("expected FRAME marker for frame {index}"),
            });
        }
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or(Error::Truncated { frame: index })?;
        pos += nl + 1;
        if data.len() - pos < frame_bytes {
            return Err(Error::Truncated { frame: index });
        }
        let luma = decode_luma(&data[pos..pos + luma_bytes], header.format.depth());
        frames.push(FramePlane::from_raw_parts(header.width, header.height, luma));
        pos += frame_bytes;
    }
    if frames.is_empty() {
        return Err(Error::NoFrames);
    }
    VideoSequence::new(frames, header.fps, content_id)
}

/// Loads a Y4M file; the content id defaults to the file stem.
pub fn load_y4m(path: impl AsRef<Path>) -> Result<VideoSequence> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_y4m(&data, &id)
}

/// Writes 8-bit 4:2:0 Y4M with neutral chroma. Luma is rounded and clamped to [0, 255].
pub fn write_y4m_to(video: &VideoSequence, mut out: impl Write) -> std::io::Result<()> {
    let (w, h) = (video.width(), video.height());
    let fps = video.fps();
    writeln!(out, "YUV4MPEG2 W{w} H{h} F{}:{} Ip A1:1 C420jpeg", fps.num(), fps.den())?;
    let chroma = vec![128u8; 2 * w.div_ceil(2) * h.div_ceil(2)];
    let mut luma = vec![0u8; w * h];
    for frame in video.frames() {
        out.write_all(b"FRAME\n")?;
        for (dst, &v) in luma.iter_mut().zip(frame.samples()) {
            *dst = v.round().clamp(0.0, 255.0) as u8;
        }
        out.write_all(&luma)?;
        out.write_all(&chroma)?;
    }
    out.flush()
}

pub fn write_y4m(video: &VideoSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_y4m_to(video, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

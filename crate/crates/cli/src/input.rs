use std::path::Path;

use anyhow::{bail, Context, Result};
use greedvmaf::media::{load_y4m, read_raw_yuv, FrameRate, RawGeometry, VideoSequence};

use crate::args::RawArgs;

fn is_y4m(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("y4m"))
}

/// Loads the luma of a `.y4m` file, or of a raw planar file using the
/// geometry flags and `fps`.
pub fn load_video(path: &Path, fps: Option<FrameRate>, raw: &RawArgs) -> Result<VideoSequence> {
    if is_y4m(path) {
        let video = load_y4m(path)?;
        if let Some(f) = fps.filter(|f| *f != video.fps()) {
            log::warn!("{}: header says {} fps, ignoring {f}", path.display(), video.fps());
        }
        return Ok(video);
    }
    let (Some(width), Some(height)) = (raw.width, raw.height) else {
        // Surface a missing file before complaining about flags.
        std::fs::metadata(path).map_err(|e| greedvmaf::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        bail!("{}: raw input needs --width and --height", path.display());
    };
    let Some(fps) = fps else {
        bail!("{}: raw input needs a frame rate", path.display());
    };
    let geometry = RawGeometry {
        width,
        height,
        fps,
        format: raw.pix_fmt,
    };
    read_raw_yuv(path, geometry).with_context(|| format!("reading {}", path.display()))
}

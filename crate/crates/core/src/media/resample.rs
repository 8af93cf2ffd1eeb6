use std::cmp::Ordering;

use super::{FramePlane, FrameRate, VideoSequence};
use crate::error::{Error, Result};

/// Averages non-overlapping `2^s x 2^s` blocks; the remainder on the right and
/// bottom edges is dropped.
pub fn downscale(plane: &FramePlane, s: u32) -> Result<FramePlane> {
    let block = 1usize << s;
    let (w, h) = (plane.width(), plane.height());
    if w < block || h < block {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            block,
        });
    }
    let (ow, oh) = (w / block, h / block);
    let src = plane.samples();
    let mut out = vec![0.0; ow * oh];
    let mut row_acc = vec![0.0; ow];
    for oy in 0..oh {
        row_acc.iter_mut().for_each(|v| *v = 0.0);
        for y in oy * block..(oy + 1) * block {
            let row = &src[y * w..y * w + ow * block];
            for (acc, chunk) in row_acc.iter_mut().zip(row.chunks_exact(block)) {
                *acc += chunk.iter().sum::<f64>();
            }
        }
        let norm = 1.0 / (block * block) as f64;
        for (o, acc) in out[oy * ow..(oy + 1) * ow].iter_mut().zip(&row_acc) {
            *o = acc * norm;
        }
    }
    Ok(FramePlane::from_raw_parts(ow, oh, out))
}

pub fn downscale_video(video: &VideoSequence, s: u32) -> Result<VideoSequence> {
    video.map_frames(|p| downscale(p, s))
}

// len * to / from, floored, in exact integer arithmetic.
fn resampled_len(len: usize, from: FrameRate, to: FrameRate) -> usize {
    let num = len as u128 * to.num() as u128 * from.den() as u128;
    let den = to.den() as u128 * from.num() as u128;
    ((num / den) as usize).max(1)
}

/// Source index kept for output frame `t` when dropping from `from` to `to` fps:
/// `round(t * from / to)`, halves rounded up.
pub fn subsample_index(t: usize, from: FrameRate, to: FrameRate) -> usize {
    let a = from.num() as u128 * to.den() as u128;
    let b = from.den() as u128 * to.num() as u128;
    ((2 * t as u128 * a + b) / (2 * b)) as usize
}

/// Source index duplicated into output frame `t` when raising `from` to `to` fps:
/// `floor(t * from / to)`.
pub fn upsample_index(t: usize, from: FrameRate, to: FrameRate) -> usize {
    let a = from.num() as u128 * to.den() as u128;
    let b = from.den() as u128 * to.num() as u128;
    (t as u128 * a / b) as usize
}

/// Drops frames to reach `target` fps using nearest-index selection.
pub fn temporal_subsample(video: &VideoSequence, target: FrameRate) -> Result<VideoSequence> {
    if target.cmp_rate(video.fps()) == Ordering::Greater {
        return Err(Error::InvalidDirection(format!(
            "cannot subsample {} fps to higher rate {target}",
            video.fps()
        )));
    }
    let len = resampled_len(video.len(), video.fps(), target);
    let last = video.len() - 1;
    let frames = (0..len)
        .map(|t| video.frames()[subsample_index(t, video.fps(), target).min(last)].clone())
        .collect();
    VideoSequence::from_shared(frames, target, video.content_id())
}

/// Repeats frames to reach `target` fps.
pub fn temporal_upsample_duplicate(video: &VideoSequence, target: FrameRate) -> Result<VideoSequence> {
    if target.cmp_rate(video.fps()) == Ordering::Less {
        return Err(Error::InvalidDirection(format!(
            "cannot duplicate {} fps up to lower rate {target}",
            video.fps()
        )));
    }
    let len = resampled_len(video.len(), video.fps(), target);
    let last = video.len() - 1;
    let frames = (0..len)
        .map(|t| video.frames()[upsample_index(t, video.fps(), target).min(last)].clone())
        .collect();
    VideoSequence::from_shared(frames, target, video.content_id())
}

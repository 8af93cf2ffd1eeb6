//! Luma-only video containers, file readers and spatial/temporal resampling.

mod frame_rate;
mod raw;
mod resample;
mod y4m;

use std::sync::Arc;

use crate::error::{Error, Result};

pub use frame_rate::FrameRate;
pub use raw::{read_raw_yuv, PixelFormat, RawGeometry};
pub use resample::{
    downscale, downscale_video, subsample_index, temporal_subsample, temporal_upsample_duplicate,
    upsample_index,
};
pub use y4m::{load_y4m, parse_y4m, write_y4m, write_y4m_to};

/// One luma plane, row-major, values on the [0, 255] scale.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePlane {
    width: usize,
    height: usize,
    samples: Vec<f64>,
}

impl FramePlane {
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry(format!("empty plane {width}x{height}")));
        }
        if samples.len() != width * height {
            return Err(Error::Geometry(format!(
                "{} samples for a {width}x{height} plane",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds a plane by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self::new(width, height, samples)
    }

    // Skips validation; callers guarantee the invariants.
    pub(crate) fn from_raw_parts(width: usize, height: usize, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), width * height);
        Self {
            width,
            height,
            samples,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.samples[y * self.width + x]
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Applies `f` to every sample.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.samples.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn same_dims(&self, other: &FramePlane) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// An ordered run of equally sized luma frames at a fixed frame rate.
///
/// Frames are reference counted so that temporal resampling shares planes
/// instead of copying them.
#[derive(Debug, Clone)]
pub struct VideoSequence {
    frames: Vec<Arc<FramePlane>>,
    fps: FrameRate,
    content_id: String,
}

impl VideoSequence {
    pub fn new(frames: Vec<FramePlane>, fps: FrameRate, content_id: impl Into<String>) -> Result<Self> {
        Self::from_shared(frames.into_iter().map(Arc::new).collect(), fps, content_id)
    }

    pub fn from_shared(
        frames: Vec<Arc<FramePlane>>,
        fps: FrameRate,
        content_id: impl Into<String>,
    ) -> Result<Self> {
        let first = frames.first().ok_or(Error::NoFrames)?;
        let (w, h) = (first.width, first.height);
        if let Some(i) = frames.iter().position(|f| f.width != w || f.height != h) {
            return Err(Error::Geometry(format!(
                "frame {i} is {}x{}, expected {w}x{h}",
                frames[i].width, frames[i].height
            )));
        }
        Ok(Self {
            frames,
            fps,
            content_id: content_id.into(),
        })
    }

    pub fn frames(&self) -> &[Arc<FramePlane>] {
        &self.frames
    }

    pub fn frame(&self, t: usize) -> &FramePlane {
        &self.frames[t]
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    /// Always false; a sequence holds at least one frame.
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn fps(&self) -> FrameRate {
        self.fps
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }

    pub fn content_id(&self) -> &str {
        &self.content_id
    }

    pub fn with_content_id(mut self, id: impl Into<String>) -> Self {
        self.content_id = id.into();
        self
    }

    /// Applies a per-frame transform, keeping fps and content id.
    pub fn map_frames(&self, f: impl Fn(&FramePlane) -> Result<FramePlane> + Sync + Send) -> Result<Self> {
        let frames = crate::par::map(&self.frames, |p| f(p))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Self::new(frames, self.fps, self.content_id.clone())
    }

    pub fn same_geometry(&self, other: &VideoSequence) -> bool {
        self.len() == other.len() && self.width() == other.width() && self.height() == other.height()
    }

    pub(crate) fn check_same_geometry(&self, other: &VideoSequence, what: &str) -> Result<()> {
        if self.same_geometry(other) {
            Ok(())
        } else {
            Err(Error::Geometry(format!(
                "{what}: {}x{}x{} vs {}x{}x{}",
                self.width(),
                self.height(),
                self.len(),
                other.width(),
                other.height(),
                other.len()
            )))
        }
    }
}

//! Deterministic synthetic video content and distortion generators.
//!
//! Contents are continuous in space and time, so the same scene can be
//! rendered at any frame rate and compared across rates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::filters::{convolve_separable, gaussian_kernel};
use crate::media::{FramePlane, FrameRate, VideoSequence};

/// A drifting sum of oriented gratings with a 1/f amplitude spectrum, plus a
/// few moving discs.
#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    /// Pixels per second.
    pub velocity: (f64, f64),
    pub seed: u64,
}

struct Grating {
    fx: f64,
    fy: f64,
    phase: f64,
    amp: f64,
}

struct Disc {
    cx: f64,
    cy: f64,
    r: f64,
    vx: f64,
    vy: f64,
    level: f64,
}

impl SceneSpec {
    pub fn new(width: usize, height: usize, seed: u64) -> Self {
        Self {
            width,
            height,
            velocity: (240.0, 90.0),
            seed,
        }
    }

    /// Renders `frames` frames at `fps`, starting at time zero.
    pub fn render(&self, frames: usize, fps: FrameRate) -> Result<VideoSequence> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        // Log-uniform radial frequencies with amplitude falling as 1/f, the
        // usual power-law spectrum of natural images.
        let gratings: Vec<Grating> = (0..8)
            .map(|_| {
                let f = (rng.random_range((1.0f64 / 128.0).ln()..0.15f64.ln())).exp();
                let angle = rng.random_range(0.0..std::f64::consts::PI);
                Grating {
                    fx: f * angle.cos(),
                    fy: f * angle.sin(),
                    phase: rng.random_range(0.0..std::f64::consts::TAU),
                    amp: (0.25 / f).min(28.0) * rng.random_range(0.7..1.3),
                }
            })
            .collect();
        let discs: Vec<Disc> = (0..4)
            .map(|_| Disc {
                cx: rng.random_range(0.0..self.width as f64),
                cy: rng.random_range(0.0..self.height as f64),
                r: rng.random_range(6.0..24.0),
                vx: rng.random_range(-300.0..300.0),
                vy: rng.random_range(-300.0..300.0),
                level: rng.random_range(-60.0..60.0),
            })
            .collect();
        let (vx, vy) = self.velocity;
        let planes = (0..frames)
            .map(|t| {
                let time = t as f64 / fps.as_f64();
                FramePlane::from_fn(self.width, self.height, |x, y| {
                    let (px, py) = (x as f64 - vx * time, y as f64 - vy * time);
                    let mut v = 128.0;
                    for g in &gratings {
                        v += g.amp * (std::f64::consts::TAU * (g.fx * px + g.fy * py) + g.phase).sin();
                    }
                    for d in &discs {
                        let dx = x as f64 - (d.cx + d.vx * time).rem_euclid(self.width as f64);
                        let dy = y as f64 - (d.cy + d.vy * time).rem_euclid(self.height as f64);
                        if dx * dx + dy * dy < d.r * d.r {
                            v += d.level;
                        }
                    }
                    v.clamp(0.0, 255.0)
                })
            })
            .collect::<Result<Vec<_>>>()?;
        VideoSequence::new(planes, fps, format!("scene{}", self.seed))
    }
}

/// Gaussian blur of every frame; kernel radius `ceil(3 sigma)`.
pub fn blur(video: &VideoSequence, sigma: f64) -> Result<VideoSequence> {
    if sigma <= 0.0 {
        return Ok(video.clone());
    }
    let radius = (3.0 * sigma).ceil() as usize;
    let kernel = gaussian_kernel(2 * radius + 1, sigma);
    video.map_frames(|f| {
        FramePlane::new(
            f.width(),
            f.height(),
            convolve_separable(f.samples(), f.width(), f.height(), &kernel),
        )
    })
}

/// Adds i.i.d. Gaussian noise; frames are seeded independently so the result
/// does not depend on evaluation order.
pub fn add_noise(video: &VideoSequence, sigma: f64, seed: u64) -> Result<VideoSequence> {
    let normal = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
    let frames = video
        .frames()
        .iter()
        .enumerate()
        .map(|(t, f)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            f.map(|v| v + normal.sample(&mut rng))
        })
        .collect::<Result<Vec<_>>>()?;
    VideoSequence::new(frames, video.fps(), video.content_id())
}

/// Multiplies intensities around mid-gray.
pub fn scale_contrast(video: &VideoSequence, factor: f64) -> Result<VideoSequence> {
    video.map_frames(|f| f.map(|v| 128.0 + factor * (v - 128.0)))
}

/// A video of the same geometry where every sample is `level`.
pub fn flat_like(video: &VideoSequence, level: f64) -> Result<VideoSequence> {
    video.map_frames(|f| FramePlane::filled(f.width(), f.height(), level))
}

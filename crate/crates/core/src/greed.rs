//! Entropic-difference features between a reference, its pseudo-reference
//! (the reference dropped to the distorted frame rate) and the distorted video.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::bandpass::{spatial_ms_filter, temporal_wavelet_packet, FilterBankSpec, NUM_SUBBANDS};
use crate::error::{Error, Result};
use crate::ggd::{apply_neural_noise, fit_ggd_from_moments, sample_moments};
use crate::media::{downscale_video, subsample_index, temporal_subsample, FramePlane, VideoSequence};
use crate::par;

/// Patches whose variance falls at or below this (on the [0, 255] scale) get
/// a scaled entropy of exactly zero.
pub const DEGENERATE_VARIANCE: f64 = 1e-10;

/// Knobs for GREED feature extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedConfig {
    /// Downscale exponents; frames are block-averaged by `2^s` before filtering.
    pub scales: Vec<u32>,
    /// Side length of the square non-overlapping patches.
    pub patch_size: usize,
    /// Variance of the additive Gaussian channel.
    pub noise_variance: f64,
    /// Window of the spatial mean-subtraction filter.
    pub ms_window: usize,
    #[serde(skip, default)]
    pub filter_bank: FilterBankSpec,
}

impl Default for GreedConfig {
    fn default() -> Self {
        Self {
            scales: vec![4, 5],
            patch_size: 5,
            noise_variance: 0.1,
            ms_window: 7,
            filter_bank: FilterBankSpec::bior22(),
        }
    }
}

impl GreedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scales.is_empty() {
            return Err(Error::invalid("at least one scale is required"));
        }
        if self.patch_size == 0 {
            return Err(Error::invalid("patch size must be positive"));
        }
        if !(self.noise_variance >= 0.0) {
            return Err(Error::invalid("noise variance must be non-negative"));
        }
        if self.ms_window.is_multiple_of(2) {
            return Err(Error::invalid("MS window must be odd"));
        }
        Ok(())
    }
}

/// Scaled entropies indexed by `(frame, patch)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyMap {
    values: Vec<f64>,
    frames: usize,
    patches: usize,
    patch_size: usize,
}

impl EntropyMap {
    pub fn from_values(values: Vec<f64>, frames: usize, patches: usize, patch_size: usize) -> Result<Self> {
        if frames == 0 || patches == 0 || values.len() != frames * patches {
            return Err(Error::Geometry(format!(
                "{} entropies for {frames} frames x {patches} patches",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite scaled entropy"));
        }
        Ok(Self {
            values,
            frames,
            patches,
            patch_size,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn patches(&self) -> usize {
        self.patches
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.values[t * self.patches..(t + 1) * self.patches]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mean over patches of each frame.
    pub fn frame_means(&self) -> Vec<f64> {
        (0..self.frames)
            .map(|t| self.frame(t).iter().sum::<f64>() / self.patches as f64)
            .collect()
    }

    /// Picks frames by index, e.g. to align a full-rate map with a subsampled one.
    pub fn select_frames(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.patches);
        for &i in indices {
            if i >= self.frames {
                return Err(Error::Geometry(format!("frame {i} of {}", self.frames)));
            }
            values.extend_from_slice(self.frame(i));
        }
        Self::from_values(values, indices.len(), self.patches, self.patch_size)
    }

    fn same_geometry(&self, other: &EntropyMap) -> bool {
        self.frames == other.frames && self.patches == other.patches
    }
}

/// `log(1 + var) * h` for one patch after the noise channel. Degenerate
/// (near-constant) patches score zero.
pub fn scaled_entropy(samples: &[f64], noise_variance: f64) -> f64 {
    let (variance, kurtosis) = sample_moments(samples);
    if !(variance > DEGENERATE_VARIANCE) {
        return 0.0;
    }
    let clean = match fit_ggd_from_moments(variance, kurtosis) {
        Ok(p) => p,
        Err(_) => return 0.0,
    };
    let noisy = apply_neural_noise(&clean, noise_variance).expect("noise variance validated by caller");
    noisy.variance().ln_1p() * noisy.entropy()
}

fn patch_grid(plane: &FramePlane, patch_size: usize) -> Result<(usize, usize)> {
    let (nx, ny) = (plane.width() / patch_size, plane.height() / patch_size);
    if nx == 0 || ny == 0 {
        return Err(Error::TooSmall {
            width: plane.width(),
            height: plane.height(),
            block: patch_size,
        });
    }
    Ok((nx, ny))
}

fn frame_entropies(plane: &FramePlane, patch_size: usize, noise_variance: f64) -> Vec<f64> {
    let (nx, ny) = (plane.width() / patch_size, plane.height() / patch_size);
    let mut buf = Vec::with_capacity(patch_size * patch_size);
    let mut out = Vec::with_capacity(nx * ny);
    for py in 0..ny {
        for px in 0..nx {
            buf.clear();
            for y in py * patch_size..(py + 1) * patch_size {
                let row = &plane.samples()[y * plane.width()..];
                buf.extend_from_slice(&row[px * patch_size..(px + 1) * patch_size]);
            }
            out.push(scaled_entropy(&buf, noise_variance));
        }
    }
    out
}

/// Scaled entropy of every non-overlapping patch of every frame. Border
/// pixels that do not fill a whole patch are ignored.
pub fn scaled_entropy_map(frames: &[FramePlane], patch_size: usize, noise_variance: f64) -> Result<EntropyMap> {
    let first = frames.first().ok_or(Error::NoFrames)?;
    if patch_size == 0 {
        return Err(Error::invalid("patch size must be positive"));
    }
    if !(noise_variance >= 0.0) {
        return Err(Error::invalid("noise variance must be non-negative"));
    }
    let (nx, ny) = patch_grid(first, patch_size)?;
    if frames.iter().any(|f| !f.same_dims(first)) {
        return Err(Error::Geometry("frames differ in size".into()));
    }
    let per_frame = par::map(frames, |f| frame_entropies(f, patch_size, noise_variance));
    EntropyMap::from_values(per_frame.concat(), frames.len(), nx * ny, patch_size)
}

/// Temporal entropic difference for one subband, pooled by the mean over frames.
///
/// All three maps must already be frame-aligned (see [`EntropyMap::select_frames`]).
pub fn tgreed_subband(reference: &EntropyMap, pseudo: &EntropyMap, dist: &EntropyMap) -> Result<f64> {
    if !pseudo.same_geometry(dist) || !reference.same_geometry(pseudo) {
        return Err(Error::Geometry(format!(
            "entropy maps R {}x{}, PR {}x{}, D {}x{}",
            reference.frames, reference.patches, pseudo.frames, pseudo.patches, dist.frames, dist.patches
        )));
    }
    let per_frame: Vec<f64> = (0..pseudo.frames)
        .map(|t| {
            let sum: f64 = reference
                .frame(t)
                .iter()
                .zip(pseudo.frame(t))
                .zip(dist.frame(t))
                .map(|((&r, &pr), &d)| ((1.0 + (d - pr).abs()) * (r + 1.0) / (pr + 1.0) - 1.0).abs())
                .sum();
            sum / pseudo.patches as f64
        })
        .collect();
    Ok(per_frame.iter().sum::<f64>() / per_frame.len() as f64)
}

/// Mean absolute difference of spatial scaled entropies.
pub fn sgreed_from_maps(reference: &EntropyMap, dist: &EntropyMap) -> Result<f64> {
    if !reference.same_geometry(dist) {
        return Err(Error::Geometry(format!(
            "entropy maps {}x{} vs {}x{}",
            reference.frames, reference.patches, dist.frames, dist.patches
        )));
    }
    let per_frame: Vec<f64> = (0..reference.frames)
        .map(|t| {
            let sum: f64 = reference
                .frame(t)
                .iter()
                .zip(dist.frame(t))
                .map(|(r, d)| (d - r).abs())
                .sum();
            sum / reference.patches as f64
        })
        .collect();
    Ok(per_frame.iter().sum::<f64>() / per_frame.len() as f64)
}

/// Spatial scaled entropies of mean-subtracted frames.
pub fn spatial_entropy_map(
    video: &VideoSequence,
    patch_size: usize,
    noise_variance: f64,
    ms_window: usize,
) -> Result<EntropyMap> {
    let filtered = par::map(video.frames(), |f| spatial_ms_filter(f, ms_window))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    scaled_entropy_map(&filtered, patch_size, noise_variance)
}

/// Spatial entropic difference between two equally sized videos.
pub fn sgreed(
    reference: &VideoSequence,
    dist: &VideoSequence,
    patch_size: usize,
    noise_variance: f64,
    ms_window: usize,
) -> Result<f64> {
    reference.check_same_geometry(dist, "SGREED inputs")?;
    let r = spatial_entropy_map(reference, patch_size, noise_variance, ms_window)?;
    let d = spatial_entropy_map(dist, patch_size, noise_variance, ms_window)?;
    sgreed_from_maps(&r, &d)
}

/// TGREED per subband and SGREED, for each configured scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedFeatures {
    pub scales: Vec<u32>,
    /// `tgreed[scale][k - 1]`.
    pub tgreed: Vec<[f64; NUM_SUBBANDS]>,
    pub sgreed: Vec<f64>,
}

impl GreedFeatures {
    /// Flat order: every scale's T1..T7, then every scale's S.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.tgreed.iter().flat_map(|t| t.iter().copied()).collect();
        v.extend_from_slice(&self.sgreed);
        v
    }

    pub fn names(scales: &[u32]) -> Vec<String> {
        let mut names: Vec<String> = scales
            .iter()
            .flat_map(|s| (1..=NUM_SUBBANDS).map(move |k| format!("tgreed_s{s}_k{k}")))
            .collect();
        names.extend(scales.iter().map(|s| format!("sgreed_s{s}")));
        names
    }
}

/// Frame index of the full-rate reference paired with each pseudo-reference frame.
pub fn reference_alignment(reference: &VideoSequence, pseudo: &VideoSequence) -> Vec<usize> {
    let last = reference.len() - 1;
    (0..pseudo.len())
        .map(|t| subsample_index(t, reference.fps(), pseudo.fps()).min(last))
        .collect()
}

fn check_inputs(reference: &VideoSequence, dist: &VideoSequence) -> Result<VideoSequence> {
    if dist.fps().cmp_rate(reference.fps()) == Ordering::Greater {
        return Err(Error::InvalidDirection(format!(
            "distorted fps {} exceeds reference fps {}",
            dist.fps(),
            reference.fps()
        )));
    }
    let pseudo = temporal_subsample(reference, dist.fps())?;
    pseudo.check_same_geometry(dist, "pseudo-reference vs distorted")?;
    Ok(pseudo)
}

/// Computes every GREED feature for a (reference, distorted) pair. The
/// distorted frame rate may be lower than the reference's.
pub fn extract_greed_features(
    reference: &VideoSequence,
    dist: &VideoSequence,
    config: &GreedConfig,
) -> Result<GreedFeatures> {
    config.validate()?;
    check_inputs(reference, dist)?;
    let mut tgreed = Vec::with_capacity(config.scales.len());
    let mut sgreed_values = Vec::with_capacity(config.scales.len());
    for &s in &config.scales {
        let ref_s = downscale_video(reference, s)?;
        let pseudo_s = temporal_subsample(&ref_s, dist.fps())?;
        let dist_s = downscale_video(dist, s)?;
        let align = reference_alignment(&ref_s, &pseudo_s);

        let bands_r = temporal_wavelet_packet(&ref_s, &config.filter_bank)?;
        let bands_pr = temporal_wavelet_packet(&pseudo_s, &config.filter_bank)?;
        let bands_d = temporal_wavelet_packet(&dist_s, &config.filter_bank)?;
        let mut per_band = [0.0; NUM_SUBBANDS];
        for (k, slot) in per_band.iter_mut().enumerate() {
            let er = scaled_entropy_map(&bands_r[k].frames, config.patch_size, config.noise_variance)?
                .select_frames(&align)?;
            let epr = scaled_entropy_map(&bands_pr[k].frames, config.patch_size, config.noise_variance)?;
            let ed = scaled_entropy_map(&bands_d[k].frames, config.patch_size, config.noise_variance)?;
            *slot = tgreed_subband(&er, &epr, &ed)?;
        }
        tgreed.push(per_band);
        sgreed_values.push(sgreed(
            &pseudo_s,
            &dist_s,
            config.patch_size,
            config.noise_variance,
            config.ms_window,
        )?);
    }
    Ok(GreedFeatures {
        scales: config.scales.clone(),
        tgreed,
        sgreed: sgreed_values,
    })
}

/// Per-subband, per-frame mean scaled temporal entropy of one video at scale `s`.
/// Returned as `profile[k - 1][t]`.
pub fn temporal_entropy_profile(video: &VideoSequence, s: u32, config: &GreedConfig) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    let down = downscale_video(video, s)?;
    temporal_wavelet_packet(&down, &config.filter_bank)?
        .iter()
        .map(|b| Ok(scaled_entropy_map(&b.frames, config.patch_size, config.noise_variance)?.frame_means()))
        .collect()
}

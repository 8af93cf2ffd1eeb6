//! Temporal wavelet-packet band-pass filtering and spatial mean subtraction.
//!
//! The temporal transform is undecimated (à trous): at level `j` the filters
//! are dilated by `2^(j-1)` instead of decimating the signal, so every subband
//! keeps one coefficient per input frame. All filters are zero-phase and
//! symmetric, and signals are extended by half-sample mirroring, which makes
//! the extension commute with filtering and gives exact reconstruction on
//! finite signals.

use crate::error::{Error, Result};
use crate::media::{FramePlane, FrameRate, VideoSequence};
use crate::par;

/// Number of retained band-pass subbands for a 3-level packet tree.
pub const NUM_SUBBANDS: usize = 7;

/// Analysis/synthesis filter pair for the undecimated packet transform.
///
/// Filters are stored centered: tap `i` sits at offset `i - len/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBankSpec {
    name: String,
    analysis_lo: Vec<f64>,
    analysis_hi: Vec<f64>,
    synthesis_lo: Vec<f64>,
    synthesis_hi: Vec<f64>,
    levels: u32,
}

const PR_TOLERANCE: f64 = 1e-10;

impl FilterBankSpec {
    /// Biorthogonal 2.2 (CDF 5/3) with three packet levels.
    ///
    /// These are the usual `sqrt(2)`-normalized bior2.2 taps divided by
    /// `sqrt(2)`, so that lowpass analysis sums to one and the undecimated
    /// analysis/synthesis pair is the identity.
    pub fn bior22() -> Self {
        Self::new(
            "bior2.2",
            vec![-0.125, 0.25, 0.75, 0.25, -0.125],
            vec![0.25, -0.5, 0.25],
            vec![0.25, 0.5, 0.25],
            vec![0.125, 0.25, -0.75, 0.25, 0.125],
            3,
        )
        .expect("bior2.2 satisfies perfect reconstruction")
    }

    /// Custom zero-phase filter bank. Fails unless
    /// `H0 F0 + H1 F1 = 1` holds to 1e-10 and all filters are odd-length.
    pub fn new(
        name: impl Into<String>,
        analysis_lo: Vec<f64>,
        analysis_hi: Vec<f64>,
        synthesis_lo: Vec<f64>,
        synthesis_hi: Vec<f64>,
        levels: u32,
    ) -> Result<Self> {
        if levels == 0 {
            return Err(Error::invalid("filter bank needs at least one level"));
        }
        for f in [&analysis_lo, &analysis_hi, &synthesis_lo, &synthesis_hi] {
            if f.len() % 2 == 0 {
                return Err(Error::invalid("filters must be odd-length and centered"));
            }
        }
        let a = centered_convolve(&analysis_lo, &synthesis_lo);
        let b = centered_convolve(&analysis_hi, &synthesis_hi);
        let len = a.len().max(b.len());
        let (ca, cb) = ((len - a.len()) / 2, (len - b.len()) / 2);
        let mut sum = vec![0.0; len];
        for (i, v) in a.iter().enumerate() {
            sum[i + ca] += v;
        }
        for (i, v) in b.iter().enumerate() {
            sum[i + cb] += v;
        }
        let mid = len / 2;
        let err = sum
            .iter()
            .enumerate()
            .map(|(i, &v)| if i == mid { (v - 1.0).abs() } else { v.abs() })
            .fold(0.0, f64::max);
        if err > PR_TOLERANCE {
            return Err(Error::invalid(format!(
                "filter bank fails perfect reconstruction (error {err:e})"
            )));
        }
        Ok(Self {
            name: name.into(),
            analysis_lo,
            analysis_hi,
            synthesis_lo,
            synthesis_hi,
            levels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Minimum signal length accepted by the transform.
    pub fn min_len(&self) -> usize {
        1 << self.levels
    }

    pub fn num_leaves(&self) -> usize {
        1 << self.levels
    }
}

impl Default for FilterBankSpec {
    fn default() -> Self {
        Self::bior22()
    }
}

fn centered_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Half-sample symmetric index into `0..n`, period `2n`.
#[inline]
pub(crate) fn mirror(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let r = i.rem_euclid(period) as usize;
    if r < n {
        r
    } else {
        2 * n - 1 - r
    }
}

fn filter_dilated(x: &[f64], taps: &[f64], dilation: usize, out: &mut [f64]) {
    let n = x.len();
    let half = (taps.len() / 2) as isize;
    let d = dilation as isize;
    for (t, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (i, &h) in taps.iter().enumerate() {
            let k = i as isize - half;
            acc += h * x[mirror(t as isize - d * k, n)];
        }
        *o = acc;
    }
}

fn inverse_gray(g: usize) -> usize {
    let mut n = g;
    let mut shift = g >> 1;
    while shift != 0 {
        n ^= shift;
        shift >>= 1;
    }
    n
}

/// Full undecimated packet analysis of a 1-D signal.
///
/// Returns `2^levels` leaves in frequency order (leaf 0 is the all-lowpass
/// band), each the same length as `x`.
pub fn packet_analyze(x: &[f64], spec: &FilterBankSpec) -> Result<Vec<Vec<f64>>> {
    if x.len() < spec.min_len() {
        return Err(Error::TooFewFrames {
            min: spec.min_len(),
            got: x.len(),
        });
    }
    // Nodes in natural (Paley) order: the child of node p is 2p (lo) or 2p + 1 (hi).
    let mut nodes = vec![x.to_vec()];
    for level in 0..spec.levels {
        let dilation = 1usize << level;
        let mut next = Vec::with_capacity(nodes.len() * 2);
        for node in &nodes {
            let mut lo = vec![0.0; x.len()];
            let mut hi = vec![0.0; x.len()];
            filter_dilated(node, &spec.analysis_lo, dilation, &mut lo);
            filter_dilated(node, &spec.analysis_hi, dilation, &mut hi);
            next.push(lo);
            next.push(hi);
        }
        nodes = next;
    }
    // Highpass branches mirror the spectrum, so Paley index p holds frequency
    // band inverse_gray(p).
    let mut ordered = vec![Vec::new(); nodes.len()];
    for (p, node) in nodes.into_iter().enumerate() {
        ordered[inverse_gray(p)] = node;
    }
    Ok(ordered)
}

/// Inverse of [`packet_analyze`]; takes all leaves in frequency order.
pub fn packet_synthesize(leaves: &[Vec<f64>], spec: &FilterBankSpec) -> Result<Vec<f64>> {
    if leaves.len() != spec.num_leaves() {
        return Err(Error::invalid(format!(
            "expected {} leaves, got {}",
            spec.num_leaves(),
            leaves.len()
        )));
    }
    let n = leaves[0].len();
    if leaves.iter().any(|l| l.len() != n) {
        return Err(Error::invalid("leaves differ in length"));
    }
    let mut nodes = vec![Vec::new(); leaves.len()];
    for (p, node) in nodes.iter_mut().enumerate() {
        *node = leaves[inverse_gray(p)].clone();
    }
    for level in (0..spec.levels).rev() {
        let dilation = 1usize << level;
        let mut tmp = vec![0.0; n];
        nodes = nodes
            .chunks_exact(2)
            .map(|pair| {
                let mut parent = vec![0.0; n];
                filter_dilated(&pair[0], &spec.synthesis_lo, dilation, &mut parent);
                filter_dilated(&pair[1], &spec.synthesis_hi, dilation, &mut tmp);
                parent.iter_mut().zip(&tmp).for_each(|(p, t)| *p += t);
                parent
            })
            .collect();
    }
    Ok(nodes.pop().expect("root node"))
}

/// Band-pass response of one temporal subband, frame-aligned with its source.
#[derive(Debug, Clone)]
pub struct SubbandSequence {
    /// 1-based, frequency ordered; 1 is the lowest retained band.
    pub index: usize,
    pub frames: Vec<FramePlane>,
    pub source_fps: FrameRate,
}

/// Pixels per parallel work unit in the temporal transform.
const PIXEL_CHUNK: usize = 256;

fn decompose_pixels(video: &VideoSequence, spec: &FilterBankSpec) -> Result<Vec<Vec<Vec<f64>>>> {
    let (t_len, npix) = (video.len(), video.width() * video.height());
    if t_len < spec.min_len() {
        return Err(Error::TooFewFrames {
            min: spec.min_len(),
            got: t_len,
        });
    }
    let leaves = spec.num_leaves();
    let chunks = npix.div_ceil(PIXEL_CHUNK);
    // Per chunk: leaf-major buffers laid out as [leaf][t][pixel-in-chunk].
    let per_chunk = par::map_range(chunks, |c| {
        let start = c * PIXEL_CHUNK;
        let end = (start + PIXEL_CHUNK).min(npix);
        let width = end - start;
        let mut out = vec![vec![0.0; t_len * width]; leaves];
        let mut series = vec![0.0; t_len];
        for px in start..end {
            for (t, s) in series.iter_mut().enumerate() {
                *s = video.frame(t).samples()[px];
            }
            let bands = packet_analyze(&series, spec).expect("length checked above");
            for (leaf, band) in bands.iter().enumerate() {
                for (t, &v) in band.iter().enumerate() {
                    out[leaf][t * width + (px - start)] = v;
                }
            }
        }
        out
    });
    let mut result = vec![vec![vec![0.0; npix]; t_len]; leaves];
    for (c, chunk) in per_chunk.into_iter().enumerate() {
        let start = c * PIXEL_CHUNK;
        let width = chunk[0].len() / t_len;
        for (leaf, buf) in chunk.into_iter().enumerate() {
            for t in 0..t_len {
                result[leaf][t][start..start + width].copy_from_slice(&buf[t * width..(t + 1) * width]);
            }
        }
    }
    Ok(result)
}

/// Temporal packet decomposition of every pixel; the all-lowpass leaf is dropped.
pub fn temporal_wavelet_packet(video: &VideoSequence, spec: &FilterBankSpec) -> Result<Vec<SubbandSequence>> {
    let (w, h) = (video.width(), video.height());
    let leaves = decompose_pixels(video, spec)?;
    Ok(leaves
        .into_iter()
        .enumerate()
        .skip(1)
        .map(|(index, frames)| SubbandSequence {
            index,
            frames: frames
                .into_iter()
                .map(|s| FramePlane::from_raw_parts(w, h, s))
                .collect(),
            source_fps: video.fps(),
        })
        .collect())
}

/// Rebuilds a video from all packet leaves (lowpass included).
pub fn wavelet_packet_reconstruct(
    leaves: &[Vec<FramePlane>],
    spec: &FilterBankSpec,
    fps: FrameRate,
) -> Result<VideoSequence> {
    if leaves.len() != spec.num_leaves() || leaves[0].is_empty() {
        return Err(Error::invalid("reconstruction needs every leaf"));
    }
    let t_len = leaves[0].len();
    let (w, h) = (leaves[0][0].width(), leaves[0][0].height());
    let mut frames = vec![vec![0.0; w * h]; t_len];
    let mut series = vec![vec![0.0; t_len]; leaves.len()];
    for px in 0..w * h {
        for (leaf, s) in leaves.iter().zip(series.iter_mut()) {
            for (t, v) in s.iter_mut().enumerate() {
                *v = leaf[t].samples()[px];
            }
        }
        let x = packet_synthesize(&series, spec)?;
        for (t, v) in x.into_iter().enumerate() {
            frames[t][px] = v;
        }
    }
    VideoSequence::new(
        frames
            .into_iter()
            .map(|s| FramePlane::from_raw_parts(w, h, s))
            .collect(),
        fps,
        "reconstructed",
    )
}

/// All packet leaves of a video, lowpass first. Used for round-trip checks.
pub fn temporal_wavelet_packet_all(video: &VideoSequence, spec: &FilterBankSpec) -> Result<Vec<Vec<FramePlane>>> {
    let (w, h) = (video.width(), video.height());
    Ok(decompose_pixels(video, spec)?
        .into_iter()
        .map(|frames| frames.into_iter().map(|s| FramePlane::from_raw_parts(w, h, s)).collect())
        .collect())
}

fn box_filter_1d(src: &[f64], dst: &mut [f64], n: usize, stride: usize, count: usize, window: usize) {
    let half = (window / 2) as isize;
    let norm = 1.0 / window as f64;
    for line in 0..count {
        let base = line * if stride == 1 { n } else { 1 };
        for i in 0..n {
            let mut acc = 0.0;
            for k in -half..=half {
                acc += src[base + mirror(i as isize + k, n) * stride];
            }
            dst[base + i * stride] = acc * norm;
        }
    }
}

/// Local uniform mean over a `window x window` neighbourhood with mirrored borders.
pub fn local_mean(plane: &FramePlane, window: usize) -> Result<FramePlane> {
    let (w, h) = (plane.width(), plane.height());
    if window.is_multiple_of(2) || window == 0 {
        return Err(Error::invalid(format!("window {window} must be odd")));
    }
    if window > w.min(h) {
        return Err(Error::invalid(format!("window {window} exceeds plane {w}x{h}")));
    }
    let mut horiz = vec![0.0; w * h];
    box_filter_1d(plane.samples(), &mut horiz, w, 1, h, window);
    let mut out = vec![0.0; w * h];
    box_filter_1d(&horiz, &mut out, h, w, w, window);
    Ok(FramePlane::from_raw_parts(w, h, out))
}

/// Mean-subtracted coefficients: `x - local_mean(x)`.
pub fn spatial_ms_filter(plane: &FramePlane, window: usize) -> Result<FramePlane> {
    let mean = local_mean(plane, window)?;
    let out = plane
        .samples()
        .iter()
        .zip(mean.samples())
        .map(|(x, m)| x - m)
        .collect();
    Ok(FramePlane::from_raw_parts(plane.width(), plane.height(), out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_signal(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-100.0..100.0)).collect()
    }

    fn energy(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn bior22_passes_pr_check_and_bad_bank_fails() {
        let b = FilterBankSpec::bior22();
        assert_eq!(b.levels(), 3);
        assert_eq!(b.min_len(), 8);
        assert!(FilterBankSpec::new("bad", vec![0.5, 0.5, 0.0], vec![1.0], vec![1.0], vec![1.0], 3).is_err());
        assert!(FilterBankSpec::new("even", vec![0.5, 0.5], vec![1.0], vec![1.0], vec![1.0], 3).is_err());
    }

    #[test]
    fn mirror_indexing() {
        let idx: Vec<usize> = (-4..8).map(|i| mirror(i, 4)).collect();
        assert_eq!(idx, vec![3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0]);
        // reflections beyond one period
        assert_eq!(mirror(-9, 4), 0);
        assert_eq!(mirror(17, 2), 1);
    }

    #[test]
    fn perfect_reconstruction_length_64() {
        let spec = FilterBankSpec::bior22();
        for seed in 0..20 {
            let x = random_signal(64, seed);
            let leaves = packet_analyze(&x, &spec).unwrap();
            let back = packet_synthesize(&leaves, &spec).unwrap();
            let err = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "seed {seed}: {err}");
        }
    }

    #[test]
    fn dc_is_rejected_by_every_bandpass_leaf() {
        let spec = FilterBankSpec::bior22();
        let leaves = packet_analyze(&[42.0; 20], &spec).unwrap();
        for leaf in &leaves[1..] {
            assert!(leaf.iter().all(|v| v.abs() < 1e-10));
        }
        assert!(leaves[0].iter().all(|v| (v - 42.0).abs() < 1e-10));
    }

    #[test]
    fn leaves_are_frequency_ordered() {
        // Peak response frequency of each leaf, probed with pure tones.
        let spec = FilterBankSpec::bior22();
        let n = 512;
        let freqs: Vec<f64> = (1..=64).map(|i| 0.5 * i as f64 / 64.0).collect();
        let mut peak = [0.0; 8];
        let mut best = [0.0; 8];
        for &f in &freqs {
            let x: Vec<f64> = (0..n).map(|t| (2.0 * std::f64::consts::PI * f * t as f64).cos()).collect();
            let leaves = packet_analyze(&x, &spec).unwrap();
            for (k, leaf) in leaves.iter().enumerate() {
                // Interior only, away from the mirrored edges.
                let e = energy(&leaf[64..n - 64]);
                if e > best[k] {
                    best[k] = e;
                    peak[k] = f;
                }
            }
        }
        for k in 1..8 {
            assert!(peak[k] > peak[k - 1], "leaf peaks {peak:?}");
        }
    }

    #[test]
    fn near_nyquist_tone_lands_in_top_subband() {
        let spec = FilterBankSpec::bior22();
        let f = 0.48;
        let frames: Vec<FramePlane> = (0..64)
            .map(|t| FramePlane::filled(1, 1, (2.0 * std::f64::consts::PI * f * t as f64).cos()).unwrap())
            .collect();
        let v = VideoSequence::new(frames, FrameRate::integer(120), "tone").unwrap();
        let bands = temporal_wavelet_packet(&v, &spec).unwrap();
        assert_eq!(bands.len(), NUM_SUBBANDS);
        let energies: Vec<f64> = bands
            .iter()
            .map(|b| b.frames.iter().map(|f| f.get(0, 0).powi(2)).sum())
            .collect();
        let argmax = energies
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(bands[argmax].index, 7);
    }

    #[test]
    fn impulse_excites_all_bands() {
        let spec = FilterBankSpec::bior22();
        let frames: Vec<FramePlane> = (0..16)
            .map(|t| FramePlane::filled(2, 2, if t == 8 { 255.0 } else { 0.0 }).unwrap())
            .collect();
        let v = VideoSequence::new(frames, FrameRate::integer(60), "imp").unwrap();
        for band in temporal_wavelet_packet(&v, &spec).unwrap() {
            let e: f64 = band.frames.iter().map(|f| energy(f.samples())).sum();
            assert!(e > 0.0, "band {}", band.index);
        }
    }

    #[test]
    fn too_few_frames() {
        let frames: Vec<FramePlane> = (0..7).map(|_| FramePlane::filled(2, 2, 0.0).unwrap()).collect();
        let v = VideoSequence::new(frames, FrameRate::integer(60), "short").unwrap();
        assert!(matches!(
            temporal_wavelet_packet(&v, &FilterBankSpec::bior22()),
            Err(Error::TooFewFrames { min: 8, got: 7 })
        ));
    }

    #[test]
    fn linearity_and_shift_covariance() {
        let spec = FilterBankSpec::bior22();
        let (x1, x2) = (random_signal(64, 1), random_signal(64, 2));
        let (a, b) = (1.7, -0.3);
        let mix: Vec<f64> = x1.iter().zip(&x2).map(|(p, q)| a * p + b * q).collect();
        let (l1, l2, lm) = (
            packet_analyze(&x1, &spec).unwrap(),
            packet_analyze(&x2, &spec).unwrap(),
            packet_analyze(&mix, &spec).unwrap(),
        );
        for k in 0..8 {
            for t in 0..64 {
                assert!((lm[k][t] - (a * l1[k][t] + b * l2[k][t])).abs() < 1e-9);
            }
        }
        let long = random_signal(129, 3);
        let (l0, ls) = (
            packet_analyze(&long[..128], &spec).unwrap(),
            packet_analyze(&long[1..], &spec).unwrap(),
        );
        // Level-3 support reaches 8 + 4 + 2 + ... taps; stay 32 frames clear of both ends.
        for k in 0..8 {
            for t in 32..96 {
                assert!((ls[k][t] - l0[k][t + 1]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ms_filter_contracts() {
        let c = FramePlane::filled(9, 9, 77.0).unwrap();
        assert!(spatial_ms_filter(&c, 7).unwrap().samples().iter().all(|&v| v == 0.0));

        let v = 90.0;
        let imp = FramePlane::from_fn(9, 9, |x, y| if (x, y) == (4, 4) { v } else { 0.0 }).unwrap();
        let out = spatial_ms_filter(&imp, 3).unwrap();
        assert!((out.get(4, 4) - 8.0 * v / 9.0).abs() < 1e-12);
        assert!((out.get(3, 4) + v / 9.0).abs() < 1e-12);

        assert!(spatial_ms_filter(&imp, 4).is_err());
        assert!(spatial_ms_filter(&imp, 11).is_err());
    }

    #[test]
    fn ms_filter_is_zero_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (w, h) in [(16, 16), (23, 11), (40, 7)] {
            let p = FramePlane::from_fn(w, h, |_, _| rng.random_range(0.0..255.0)).unwrap();
            let out = spatial_ms_filter(&p, 7).unwrap();
            assert!(out.mean().abs() < 1e-10, "{w}x{h}: {}", out.mean());
        }
    }
}

//! Detail loss: decouple distorted wavelet coefficients into a restored part
//! (attenuated reference detail) and an additive part, weight by contrast
//! sensitivity and compare restored vs reference energy.

use std::f64::consts::PI;

use crate::bandpass::mirror;
use crate::error::{Error, Result};
use crate::media::{FramePlane, VideoSequence};
use crate::par;

const DB2_LO: [f64; 4] = [
    0.482_962_913_144_534_16,
    0.836_516_303_737_807_9,
    0.224_143_868_042_013_4,
    -0.129_409_522_551_260_37,
];
const DB2_HI: [f64; 4] = [
    -0.129_409_522_551_260_37,
    -0.224_143_868_042_013_4,
    0.836_516_303_737_807_9,
    -0.482_962_913_144_534_16,
];

// Luma DWT basis amplitudes per level and orientation (LL, H, D, V).
const BASIS_AMPLITUDES: [[f64; 4]; 6] = [
    [0.62171, 0.67234, 0.72709, 0.67234],
    [0.34537, 0.41317, 0.49428, 0.41317],
    [0.18004, 0.22727, 0.28688, 0.22727],
    [0.091401, 0.11792, 0.15214, 0.11792],
    [0.045943, 0.059758, 0.077727, 0.059758],
    [0.023013, 0.030018, 0.039156, 0.030018],
];

#[derive(Debug, Clone)]
pub struct DlmConfig {
    pub levels: usize,
    /// Angle below which the distorted detail is taken as-is, in degrees.
    pub angle_threshold_deg: f64,
    pub minkowski_exponent: f64,
    /// Border excluded from pooling, as a fraction of each band dimension.
    pub border_fraction: f64,
    /// Viewing distance in multiples of display height.
    pub view_distance: f64,
    pub display_height: f64,
}

impl Default for DlmConfig {
    fn default() -> Self {
        Self {
            levels: 4,
            angle_threshold_deg: 1.0,
            minkowski_exponent: 3.0,
            border_fraction: 1.0 / 16.0,
            view_distance: 3.0,
            display_height: 1080.0,
        }
    }
}

impl DlmConfig {
    /// Watson-model quantization step for `level` (0-based) and orientation
    /// `theta` (1 = horizontal/vertical, 2 = diagonal).
    fn quant_step(&self, level: usize, theta: usize) -> f64 {
        const A: f64 = 0.495;
        const K: f64 = 0.466;
        const F0: f64 = 0.401;
        const G: [f64; 4] = [1.501, 1.0, 0.534, 1.0];
        let r = self.view_distance * self.display_height * PI / 180.0;
        let t = (2f64.powi(level as i32 + 1) * F0 * G[theta] / r).log10();
        2.0 * A * 10f64.powf(K * t * t) / BASIS_AMPLITUDES[level.min(5)][theta]
    }

    /// Contrast sensitivity weights for (H, V, D) bands at `level`.
    fn csf_weights(&self, level: usize) -> [f64; 3] {
        let hv = 1.0 / self.quant_step(level, 1);
        let d = 1.0 / self.quant_step(level, 2);
        [hv, hv, d]
    }
}

struct Bands {
    w: usize,
    h: usize,
    approx: Vec<f64>,
    /// H, V, D detail bands.
    detail: [Vec<f64>; 3],
}

fn analyze_1d(x: &[f64], n: usize, stride: usize, taps: &[f64; 4], out: &mut [f64], out_stride: usize) {
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut acc = 0.0;
        for (k, &c) in taps.iter().enumerate() {
            acc += c * x[mirror(2 * i as isize + k as isize - 1, n) * stride];
        }
        out[i * out_stride] = acc;
    }
}

fn dwt2(src: &[f64], w: usize, h: usize) -> Bands {
    let (ow, oh) = (w.div_ceil(2), h.div_ceil(2));
    // Rows first: lo/hi along x.
    let mut lo_x = vec![0.0; ow * h];
    let mut hi_x = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        analyze_1d(row, w, 1, &DB2_LO, &mut lo_x[y * ow..], 1);
        analyze_1d(row, w, 1, &DB2_HI, &mut hi_x[y * ow..], 1);
    }
    let mut ll = vec![0.0; ow * oh];
    let mut band_h = vec![0.0; ow * oh];
    let mut band_v = vec![0.0; ow * oh];
    let mut band_d = vec![0.0; ow * oh];
    for x in 0..ow {
        analyze_1d(&lo_x[x..], h, ow, &DB2_LO, &mut ll[x..], ow);
        analyze_1d(&lo_x[x..], h, ow, &DB2_HI, &mut band_h[x..], ow);
        analyze_1d(&hi_x[x..], h, ow, &DB2_LO, &mut band_v[x..], ow);
        analyze_1d(&hi_x[x..], h, ow, &DB2_HI, &mut band_d[x..], ow);
    }
    Bands {
        w: ow,
        h: oh,
        approx: ll,
        detail: [band_h, band_v, band_d],
    }
}

fn pooled(band: &[f64], w: usize, h: usize, border_fraction: f64, p: f64) -> f64 {
    let bx = (w as f64 * border_fraction).round() as usize;
    let by = (h as f64 * border_fraction).round() as usize;
    let (bx, by) = if 2 * bx >= w || 2 * by >= h { (0, 0) } else { (bx, by) };
    let mut acc = 0.0;
    for y in by..h - by {
        for &v in &band[y * w + bx..y * w + w - bx] {
            acc += v.abs().powf(p);
        }
    }
    acc.powf(1.0 / p)
}

/// DLM of one frame; 1 means no detail was lost.
pub fn dlm_frame(reference: &FramePlane, dist: &FramePlane, cfg: &DlmConfig) -> Result<f64> {
    if !reference.same_dims(dist) {
        return Err(Error::Geometry("DLM frames differ in size".into()));
    }
    let min_side = 1 << cfg.levels;
    if reference.width() < min_side || reference.height() < min_side {
        return Err(Error::TooSmall {
            width: reference.width(),
            height: reference.height(),
            block: min_side,
        });
    }
    let cos_sq = cfg.angle_threshold_deg.to_radians().cos().powi(2);
    let (mut r_src, mut d_src) = (reference.samples().to_vec(), dist.samples().to_vec());
    let (mut w, mut h) = (reference.width(), reference.height());
    let (mut num, mut den) = (0.0, 0.0);
    for level in 0..cfg.levels {
        let o = dwt2(&r_src, w, h);
        let t = dwt2(&d_src, w, h);
        let n = o.w * o.h;
        let mut restored: [Vec<f64>; 3] = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for i in 0..n {
            let (oh, ov) = (o.detail[0][i], o.detail[1][i]);
            let (th, tv) = (t.detail[0][i], t.detail[1][i]);
            let dot = oh * th + ov * tv;
            let o_mag = oh * oh + ov * ov;
            let t_mag = th * th + tv * tv;
            let aligned = dot >= 0.0 && dot * dot >= cos_sq * o_mag * t_mag;
            for b in 0..3 {
                let (ob, tb) = (o.detail[b][i], t.detail[b][i]);
                restored[b][i] = if aligned {
                    tb
                } else {
                    let k = if ob == 0.0 { 1.0 } else { (tb / ob).clamp(0.0, 1.0) };
                    k * ob
                };
            }
        }
        let weights = cfg.csf_weights(level);
        for b in 0..3 {
            let rw: Vec<f64> = restored[b].iter().map(|v| v * weights[b]).collect();
            let ow: Vec<f64> = o.detail[b].iter().map(|v| v * weights[b]).collect();
            num += pooled(&rw, o.w, o.h, cfg.border_fraction, cfg.minkowski_exponent);
            den += pooled(&ow, o.w, o.h, cfg.border_fraction, cfg.minkowski_exponent);
        }
        (w, h) = (o.w, o.h);
        r_src = o.approx;
        d_src = t.approx;
    }
    Ok(if den > 0.0 { num / den } else { 1.0 })
}

/// Frame-averaged DLM.
pub fn dlm(reference: &VideoSequence, dist: &VideoSequence) -> Result<f64> {
    reference.check_same_geometry(dist, "DLM inputs")?;
    let cfg = DlmConfig::default();
    let frames = par::map_range(reference.len(), |t| dlm_frame(reference.frame(t), dist.frame(t), &cfg))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(frames.iter().sum::<f64>() / frames.len() as f64)
}

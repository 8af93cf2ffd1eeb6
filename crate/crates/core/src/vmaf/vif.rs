use crate::error::{Error, Result};
use crate::filters::{convolve_separable, decimate2, gaussian_kernel};
use crate::media::{FramePlane, VideoSequence};
use crate::par;

pub const VIF_SCALES: usize = 4;

const EPS: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct VifConfig {
    pub window: usize,
    /// Variance of the visual channel noise on the [0, 255] scale.
    pub noise_variance: f64,
}

impl Default for VifConfig {
    fn default() -> Self {
        Self {
            window: 9,
            noise_variance: 2.0,
        }
    }
}

struct ScaleStats {
    num: f64,
    den: f64,
}

fn scale_stats(r: &[f64], d: &[f64], w: usize, h: usize, kernel: &[f64], sigma_nsq: f64) -> ScaleStats {
    let mu1 = convolve_separable(r, w, h, kernel);
    let mu2 = convolve_separable(d, w, h, kernel);
    let rr: Vec<f64> = r.iter().map(|v| v * v).collect();
    let dd: Vec<f64> = d.iter().map(|v| v * v).collect();
    let rd: Vec<f64> = r.iter().zip(d).map(|(a, b)| a * b).collect();
    let e_rr = convolve_separable(&rr, w, h, kernel);
    let e_dd = convolve_separable(&dd, w, h, kernel);
    let e_rd = convolve_separable(&rd, w, h, kernel);

    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..w * h {
        let mut sigma1_sq = (e_rr[i] - mu1[i] * mu1[i]).max(0.0);
        let sigma2_sq = (e_dd[i] - mu2[i] * mu2[i]).max(0.0);
        let sigma12 = e_rd[i] - mu1[i] * mu2[i];

        let mut g = sigma12 / (sigma1_sq + EPS);
        let mut sv_sq = sigma2_sq - g * sigma12;
        if sigma1_sq < EPS {
            g = 0.0;
            sv_sq = sigma2_sq;
            sigma1_sq = 0.0;
        }
        if sigma2_sq < EPS {
            g = 0.0;
            sv_sq = 0.0;
        }
        if g < 0.0 {
            sv_sq = sigma2_sq;
            g = 0.0;
        }
        let sv_sq = sv_sq.max(EPS);
        num += (g * g * sigma1_sq / (sv_sq + sigma_nsq)).ln_1p();
        den += (sigma1_sq / sigma_nsq).ln_1p();
    }
    ScaleStats { num, den }
}

/// VIF at four dyadic scales for one frame, finest scale first.
pub fn vif_frame(reference: &FramePlane, dist: &FramePlane, cfg: &VifConfig) -> Result<[f64; VIF_SCALES]> {
    if !reference.same_dims(dist) {
        return Err(Error::Geometry("VIF frames differ in size".into()));
    }
    let min_side = 1 << VIF_SCALES;
    if reference.width() < min_side || reference.height() < min_side {
        return Err(Error::TooSmall {
            width: reference.width(),
            height: reference.height(),
            block: min_side,
        });
    }
    let kernel = gaussian_kernel(cfg.window, cfg.window as f64 / 6.0);
    // The statistics are offset invariant; removing the reference mean keeps
    // E[x^2] - mu^2 well conditioned.
    let offset = reference.mean();
    let mut r: Vec<f64> = reference.samples().iter().map(|v| v - offset).collect();
    let mut d: Vec<f64> = dist.samples().iter().map(|v| v - offset).collect();
    let (mut w, mut h) = (reference.width(), reference.height());
    let mut out = [0.0; VIF_SCALES];
    for (scale, slot) in out.iter_mut().enumerate() {
        if scale > 0 {
            let rs = convolve_separable(&r, w, h, &kernel);
            let ds = convolve_separable(&d, w, h, &kernel);
            let (rd, nw, nh) = decimate2(&rs, w, h);
            r = rd;
            d = decimate2(&ds, w, h).0;
            (w, h) = (nw, nh);
        }
        let s = scale_stats(&r, &d, w, h, &kernel, cfg.noise_variance);
        *slot = if s.den > 0.0 { s.num / s.den } else { 1.0 };
    }
    Ok(out)
}

/// Frame-averaged VIF per scale.
pub fn vif_per_scale(reference: &VideoSequence, dist: &VideoSequence) -> Result<[f64; VIF_SCALES]> {
    reference.check_same_geometry(dist, "VIF inputs")?;
    let cfg = VifConfig::default();
    let frames = par::map_range(reference.len(), |t| vif_frame(reference.frame(t), dist.frame(t), &cfg))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut acc = [0.0; VIF_SCALES];
    for f in &frames {
        for (a, v) in acc.iter_mut().zip(f) {
            *a += v;
        }
    }
    acc.iter_mut().for_each(|a| *a /= frames.len() as f64);
    Ok(acc)
}

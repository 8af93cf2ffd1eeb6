//! Separable 2-D filtering with half-sample mirrored borders.

use crate::bandpass::mirror;

/// Normalized sampled Gaussian of odd length `size`.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    assert!(size % 2 == 1, "kernel size must be odd");
    let half = (size / 2) as isize;
    let mut k: Vec<f64> = (-half..=half)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Convolves a `w x h` row-major image with `kernel` along both axes.
pub fn convolve_separable(src: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    debug_assert_eq!(src.len(), w * h);
    let half = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        let out = &mut tmp[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, &c) in kernel.iter().enumerate() {
                acc += c * row[mirror(x as isize + i as isize - half, w)];
            }
            *o = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let dst = &mut out[y * w..(y + 1) * w];
        for (i, &c) in kernel.iter().enumerate() {
            let sy = mirror(y as isize + i as isize - half, h);
            let src_row = &tmp[sy * w..(sy + 1) * w];
            for (d, &s) in dst.iter_mut().zip(src_row) {
                *d += c * s;
            }
        }
    }
    out
}

/// Keeps even rows and columns.
pub fn decimate2(src: &[f64], w: usize, h: usize) -> (Vec<f64>, usize, usize) {
    let (ow, oh) = (w.div_ceil(2), h.div_ceil(2));
    let mut out = Vec::with_capacity(ow * oh);
    for y in (0..h).step_by(2) {
        out.extend(src[y * w..(y + 1) * w].iter().step_by(2));
    }
    (out, ow, oh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let k = gaussian_kernel(9, 1.5);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for i in 0..4 {
            assert_eq!(k[i], k[8 - i]);
        }
    }

    #[test]
    fn constant_is_preserved() {
        let img = vec![3.0; 7 * 5];
        let out = convolve_separable(&img, 7, 5, &gaussian_kernel(9, 1.5));
        assert!(out.iter().all(|v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn decimation_dims() {
        let img: Vec<f64> = (0..15).map(f64::from).collect();
        let (d, w, h) = decimate2(&img, 5, 3);
        assert_eq!((w, h), (3, 2));
        assert_eq!(d, vec![0.0, 2.0, 4.0, 10.0, 12.0, 14.0]);
    }
}

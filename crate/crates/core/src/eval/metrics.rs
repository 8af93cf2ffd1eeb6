//! Rank and linear agreement between predictions and subjective scores.

use serde::{Deserialize, Serialize};

use super::logistic::{logistic_fit, LogisticFit, MIN_LOGISTIC_POINTS};
use crate::error::{Error, Result};
use crate::media::VideoSequence;

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Geometry(format!("{} predictions vs {} scores", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::Undefined(format!("need at least 2 points, got {}", a.len())));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Undefined("non-finite value".into()));
    }
    Ok(())
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Undefined("constant input".into()));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman correlation: Pearson on average ranks.
pub fn srocc(pred: &[f64], mos: &[f64]) -> Result<f64> {
    check_pair(pred, mos)?;
    pearson(&average_ranks(pred), &average_ranks(mos))
}

/// Kendall tau-b.
pub fn krocc(pred: &[f64], mos: &[f64]) -> Result<f64> {
    check_pair(pred, mos)?;
    let n = pred.len();
    let (mut concordant, mut discordant, mut ties_a, mut ties_b) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let da = (pred[i] - pred[j]).partial_cmp(&0.0).unwrap() as i64;
            let db = (mos[i] - mos[j]).partial_cmp(&0.0).unwrap() as i64;
            match (da, db) {
                (0, 0) => {
                    ties_a += 1;
                    ties_b += 1;
                }
                (0, _) => ties_a += 1,
                (_, 0) => ties_b += 1,
                _ if da == db => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let denom = (((n0 - ties_a) as f64) * ((n0 - ties_b) as f64)).sqrt();
    if denom == 0.0 {
        return Err(Error::Undefined("constant input".into()));
    }
    Ok((concordant - discordant) as f64 / denom)
}

pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    Ok((a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64).sqrt())
}

/// The four agreement criteria for one prediction set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlations {
    pub srocc: f64,
    pub krocc: f64,
    pub plcc: f64,
    pub rmse: f64,
}

/// Correlations plus the fitted mapping used for PLCC/RMSE.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub correlations: Correlations,
    pub mapping: Mapping,
}

/// How predictions were mapped onto the score scale before PLCC/RMSE.
#[derive(Debug, Clone)]
pub enum Mapping {
    Logistic(LogisticFit),
    /// Least-squares line, used when there are too few points for the logistic.
    Linear { slope: f64, intercept: f64 },
}

impl Mapping {
    pub fn logistic_params(&self) -> Option<[f64; 4]> {
        match self {
            Mapping::Logistic(f) => Some(f.params),
            Mapping::Linear { .. } => None,
        }
    }
}

fn linear_map(pred: &[f64], mos: &[f64]) -> (f64, f64, Vec<f64>) {
    let n = pred.len() as f64;
    let (mp, mm) = (pred.iter().sum::<f64>() / n, mos.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in pred.iter().zip(mos) {
        sxy += (x - mp) * (y - mm);
        sxx += (x - mp) * (x - mp);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = mm - slope * mp;
    (slope, intercept, pred.iter().map(|x| slope * x + intercept).collect())
}

/// SROCC and KROCC on raw predictions; PLCC and RMSE after the logistic mapping.
pub fn correlations(pred: &[f64], mos: &[f64]) -> Result<Evaluation> {
    let s = srocc(pred, mos)?;
    let k = krocc(pred, mos)?;
    let (mapped, mapping) = if pred.len() >= MIN_LOGISTIC_POINTS {
        let fit = logistic_fit(pred, mos)?;
        (fit.mapped.clone(), Mapping::Logistic(fit))
    } else {
        let (slope, intercept, mapped) = linear_map(pred, mos);
        (mapped, Mapping::Linear { slope, intercept })
    };
    Ok(Evaluation {
        correlations: Correlations {
            srocc: s,
            krocc: k,
            plcc: pearson(&mapped, mos)?,
            rmse: rmse(&mapped, mos)?,
        },
        mapping,
    })
}

/// Mean per-frame luma PSNR in dB; `f64::INFINITY` when any frame is identical.
pub fn psnr(reference: &VideoSequence, dist: &VideoSequence) -> Result<f64> {
    reference.check_same_geometry(dist, "PSNR inputs")?;
    let per_frame: Vec<f64> = reference
        .frames()
        .iter()
        .zip(dist.frames())
        .map(|(r, d)| {
            let mse = r
                .samples()
                .iter()
                .zip(d.samples())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / r.samples().len() as f64;
            if mse == 0.0 {
                f64::INFINITY
            } else {
                10.0 * (255.0 * 255.0 / mse).log10()
            }
        })
        .collect();
    Ok(per_frame.iter().sum::<f64>() / per_frame.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::{FramePlane, FrameRate};
    use proptest::prelude::*;

    #[test]
    fn rank_examples() {
        assert_eq!(srocc(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), 1.0);
        assert_eq!(krocc(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), 1.0);
        assert_eq!(srocc(&[1.0, 2.0, 3.0], &[30.0, 20.0, 10.0]).unwrap(), -1.0);
        assert_eq!(average_ranks(&[1.0, 2.0, 2.0, 3.0]), vec![1.0, 2.5, 2.5, 4.0]);
        // ranks (1, 2.5, 2.5, 4) vs (1, 2, 3, 4): cross sum 4.5, squared sums 4.5 and 5
        let expected = 4.5 / (4.5f64 * 5.0).sqrt();
        let s = srocc(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((s - expected).abs() < 1e-12);
        assert!((s - 0.9487).abs() < 1e-4);
    }

    #[test]
    fn tau_b_with_ties() {
        // Brute-force tau-b by definition on a small tied example.
        let a = [1.0, 2.0, 2.0, 3.0, 4.0];
        let b = [1.0, 3.0, 2.0, 2.0, 5.0];
        let (mut c, mut d, mut ta, mut tb) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for i in 0..5 {
            for j in i + 1..5 {
                let s = (a[i] - a[j]) * (b[i] - b[j]);
                if a[i] == a[j] {
                    ta += 1.0;
                }
                if b[i] == b[j] {
                    tb += 1.0;
                }
                if s > 0.0 {
                    c += 1.0;
                } else if s < 0.0 {
                    d += 1.0;
                }
            }
        }
        let expected = (c - d) / ((10.0 - ta) * (10.0 - tb)).sqrt();
        assert!((krocc(&a, &b).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn constant_inputs_are_undefined() {
        assert!(matches!(srocc(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::Undefined(_))));
        assert!(matches!(krocc(&[1.0, 2.0], &[5.0, 5.0]), Err(Error::Undefined(_))));
        assert!(matches!(pearson(&[1.0], &[1.0]), Err(Error::Undefined(_))));
    }

    #[test]
    fn psnr_examples() {
        let f = FramePlane::from_fn(8, 8, |x, y| ((x * 13 + y * 7) % 200) as f64).unwrap();
        let v = VideoSequence::new(vec![f.clone(); 3], FrameRate::integer(30), "a").unwrap();
        assert_eq!(psnr(&v, &v).unwrap(), f64::INFINITY);
        let off = v.map_frames(|p| p.map(|x| x + 16.0)).unwrap();
        let expected = 10.0 * (255.0f64 * 255.0 / 256.0).log10();
        assert!((psnr(&v, &off).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 24.05).abs() < 5e-3);

        let half = FramePlane::from_fn(8, 8, |x, _| if x < 4 { 0.0 } else { 255.0 }).unwrap();
        let inv = half.map(|x| 255.0 - x).unwrap();
        let a = VideoSequence::new(vec![half], FrameRate::integer(30), "h").unwrap();
        let b = VideoSequence::new(vec![inv], FrameRate::integer(30), "i").unwrap();
        assert!(psnr(&a, &b).unwrap().abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn rank_correlations_ignore_monotone_transforms(
            pairs in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40)
        ) {
            let (p, m): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            prop_assume!(srocc(&p, &m).is_ok());
            let q: Vec<f64> = p.iter().map(|x| (x / 40.0).exp() * 3.0 + 1.0).collect();
            prop_assert!((srocc(&p, &m).unwrap() - srocc(&q, &m).unwrap()).abs() < 1e-12);
            prop_assert!((krocc(&p, &m).unwrap() - krocc(&q, &m).unwrap()).abs() < 1e-12);
        }
    }
}

//! Four-parameter logistic mapping
//! `Q(x) = b2 + (b1 - b2) / (1 + exp(-(x - b3) / |b4|))`, fitted by
//! Levenberg-Marquardt.

use log::warn;

use crate::error::{Error, Result};

pub const MIN_LOGISTIC_POINTS: usize = 5;
const MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone)]
pub struct LogisticFit {
    /// `[b1, b2, b3, b4]`.
    pub params: [f64; 4],
    pub mapped: Vec<f64>,
    pub sse: f64,
    /// False if the iteration cap was hit; `params` is then the best seen.
    pub converged: bool,
}

pub fn logistic(params: &[f64; 4], x: f64) -> f64 {
    let [b1, b2, b3, b4] = *params;
    b2 + (b1 - b2) / (1.0 + (-(x - b3) / b4.abs()).exp())
}

fn sse(params: &[f64; 4], x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - logistic(params, xi);
            r * r
        })
        .sum()
}

// Solves the 4x4 system in place by Gaussian elimination with partial pivoting.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..4 {
            let f = a[r][col] / a[col][col];
            for c in col..4 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for r in (0..4).rev() {
        let s: f64 = (r + 1..4).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn levenberg_marquardt(x: &[f64], y: &[f64], start: [f64; 4]) -> ([f64; 4], f64, bool) {
    let mut p = start;
    if p[3] == 0.0 {
        p[3] = 1.0;
    }
    let mut cost = sse(&p, x, y);
    let mut lambda = 1e-3;
    for _ in 0..MAX_ITERATIONS {
        let [b1, b2, b3, b4] = p;
        let scale = b4.abs();
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        for (&xi, &yi) in x.iter().zip(y) {
            let u = (xi - b3) / scale;
            let s = 1.0 / (1.0 + (-u).exp());
            let ds = s * (1.0 - s);
            let amp = b1 - b2;
            let j = [
                s,
                1.0 - s,
                -amp * ds / scale,
                -amp * ds * u / b4,
            ];
            let r = yi - (b2 + amp * s);
            for a in 0..4 {
                jtr[a] += j[a] * r;
                for b in 0..4 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        let grad_norm = jtr.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if grad_norm < 1e-14 * (1.0 + cost) || cost < 1e-28 {
            return (p, cost, true);
        }
        loop {
            let mut damped = jtj;
            for (d, row) in damped.iter_mut().enumerate() {
                row[d] += lambda * jtj[d][d].max(1e-12);
            }
            let accepted = solve4(damped, jtr).and_then(|step| {
                let candidate = [p[0] + step[0], p[1] + step[1], p[2] + step[2], p[3] + step[3]];
                let c = sse(&candidate, x, y);
                (c.is_finite() && c < cost && candidate[3] != 0.0).then_some((candidate, c, step))
            });
            match accepted {
                Some((candidate, c, step)) => {
                    let rel = (cost - c) / cost.max(1e-300);
                    let small_step = step
                        .iter()
                        .zip(&candidate)
                        .all(|(s, v)| s.abs() <= 1e-13 * (1.0 + v.abs()));
                    p = candidate;
                    cost = c;
                    lambda = (lambda / 10.0).max(1e-15);
                    if rel < 1e-15 || small_step {
                        return (p, cost, true);
                    }
                    break;
                }
                None => {
                    lambda *= 10.0;
                    if lambda > 1e16 {
                        // No descent direction left: a (local) minimum.
                        return (p, cost, true);
                    }
                }
            }
        }
    }
    (p, cost, false)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Fits the logistic to `(pred, mos)`.
///
/// Two starts are tried and the lower-error fit kept: the conventional
/// initialization (`b1 = max mos`, `b2 = min mos`, `b3 = median pred`,
/// `b4 = std pred / 4`) and a wide, nearly linear member matching the
/// least-squares line, so the mapping never does worse than a linear fit.
pub fn logistic_fit(pred: &[f64], mos: &[f64]) -> Result<LogisticFit> {
    if pred.len() != mos.len() {
        return Err(Error::Geometry(format!("{} predictions vs {} scores", pred.len(), mos.len())));
    }
    if pred.len() < MIN_LOGISTIC_POINTS {
        return Err(Error::TooFewSamples {
            min: MIN_LOGISTIC_POINTS,
            got: pred.len(),
        });
    }
    let n = pred.len() as f64;
    let mean_p = pred.iter().sum::<f64>() / n;
    let std_p = (pred.iter().map(|v| (v - mean_p) * (v - mean_p)).sum::<f64>() / n).sqrt();
    if !(std_p > 0.0) {
        return Err(Error::Undefined("constant predictions".into()));
    }
    let mos_max = mos.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mos_min = mos.iter().copied().fold(f64::INFINITY, f64::min);
    let conventional = [mos_max, mos_min, median(pred), std_p / 4.0];

    let mean_m = mos.iter().sum::<f64>() / n;
    let slope = pred
        .iter()
        .zip(mos)
        .map(|(p, m)| (p - mean_p) * (m - mean_m))
        .sum::<f64>()
        / (n * std_p * std_p);
    let width = 20.0 * std_p;
    let half_span = 2.0 * slope * width;
    let near_linear = [
        mean_m + half_span,
        mean_m - half_span,
        mean_p,
        width,
    ];

    let (p1, c1, ok1) = levenberg_marquardt(pred, mos, conventional);
    let (p2, c2, ok2) = levenberg_marquardt(pred, mos, near_linear);
    let (params, cost, converged) = if c2 < c1 { (p2, c2, ok2) } else { (p1, c1, ok1) };
    if !converged {
        warn!("logistic fit hit {MAX_ITERATIONS} iterations; using best parameters found");
    }
    Ok(LogisticFit {
        params,
        mapped: pred.iter().map(|&x| logistic(&params, x)).collect(),
        sse: cost,
        converged,
    })
}

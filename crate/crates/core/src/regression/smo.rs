//! Sequential minimal optimization for the epsilon-SVR dual.
//!
//! The dual is written over `2n` variables `a = [alpha; alpha*]`:
//!
//! ```text
//! min 1/2 a' Q a + p' a   s.t.  y' a = 0,  0 <= a <= C
//! y_t = +1 (t < n), -1 (t >= n)
//! p_t = eps - label_t (t < n),  eps + label_{t-n} (t >= n)
//! Q_ts = y_t y_s K(t mod n, s mod n)
//! ```
//!
//! Working pairs are chosen by maximal KKT violation.

use log::warn;

pub(crate) struct SmoParams {
    pub c: f64,
    pub epsilon: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

pub(crate) struct SmoSolution {
    /// `alpha_i - alpha*_i` per training row.
    pub coef: Vec<f64>,
    /// Decision function is `sum coef_i K(x_i, x) + bias`.
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

const TAU: f64 = 1e-12;

/// `kernel` is the dense `n x n` Gram matrix, row-major.
pub(crate) fn solve(kernel: &[f64], labels: &[f64], params: &SmoParams) -> SmoSolution {
    let n = labels.len();
    debug_assert_eq!(kernel.len(), n * n);
    let l = 2 * n;
    let c = params.c;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let row = |t: usize| t % n;
    let q = |t: usize, s: usize| sign(t) * sign(s) * kernel[row(t) * n + row(s)];

    let mut alpha = vec![0.0; l];
    let mut grad: Vec<f64> = (0..l)
        .map(|t| {
            if t < n {
                params.epsilon - labels[t]
            } else {
                params.epsilon + labels[t - n]
            }
        })
        .collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iter {
        let (mut g_max, mut i_sel) = (f64::NEG_INFINITY, usize::MAX);
        let (mut g_min, mut j_sel) = (f64::INFINITY, usize::MAX);
        for t in 0..l {
            let yt = sign(t);
            let v = -yt * grad[t];
            let up = if yt > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            let low = if yt > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
            if up && v > g_max {
                g_max = v;
                i_sel = t;
            }
            if low && v < g_min {
                g_min = v;
                j_sel = t;
            }
        }
        if i_sel == usize::MAX || j_sel == usize::MAX || g_max - g_min < params.tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (qii, qjj, qij) = (q(i, i), q(j, j), q(i, j));

        if sign(i) != sign(j) {
            let quad = (qii + qjj + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qii + qjj - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        if di != 0.0 || dj != 0.0 {
            for (t, g) in grad.iter_mut().enumerate() {
                *g += q(t, i) * di + q(t, j) * dj;
            }
        }
    }
    if !converged {
        warn!("SMO stopped after {} iterations without reaching tolerance {}", iterations, params.tolerance);
    }

    // Offset from free variables, or the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free_count) = (0.0, 0usize);
    for t in 0..l {
        let yt = sign(t);
        let yg = yt * grad[t];
        if alpha[t] >= c {
            if yt < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if yt > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_count += 1;
            free_sum += yg;
        }
    }
    let rho = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        0.5 * (ub + lb)
    };
    SmoSolution {
        coef: (0..n).map(|i| alpha[i] - alpha[i + n]).collect(),
        bias: -rho,
        iterations,
        converged,
    }
}

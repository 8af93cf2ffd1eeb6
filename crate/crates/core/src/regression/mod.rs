//! Epsilon-SVR quality regressor with in-model z-score standardization.

mod smo;

use std::path::Path;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::metrics::srocc;
use crate::par;

/// Version written into (and required from) model documents.
pub const MODEL_FORMAT_VERSION: u32 = 1;

const KKT_TOLERANCE: f64 = 1e-3;
const MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf,
}

impl std::str::FromStr for KernelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(KernelKind::Linear),
            "rbf" => Ok(KernelKind::Rbf),
            _ => Err(Error::invalid(format!("unknown kernel {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    #[serde(rename = "C")]
    pub c: f64,
    pub epsilon: f64,
    /// RBF width; ignored by the linear kernel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl Hyperparams {
    pub fn linear(c: f64, epsilon: f64) -> Self {
        Self { c, epsilon, gamma: None }
    }

    pub fn rbf(c: f64, epsilon: f64, gamma: f64) -> Self {
        Self {
            c,
            epsilon,
            gamma: Some(gamma),
        }
    }

    fn validate(&self, kernel: KernelKind) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::invalid("C must be positive"));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::invalid("epsilon must be non-negative"));
        }
        if kernel == KernelKind::Rbf && !self.gamma.is_some_and(|g| g > 0.0) {
            return Err(Error::invalid("RBF kernel needs a positive gamma"));
        }
        Ok(())
    }
}

/// Default search grid: C in {0.1 .. 1000}, epsilon in {0.1, 0.5, 1},
/// gamma in {2^-6 .. 2^2} for RBF.
pub fn default_grid(kernel: KernelKind) -> Vec<Hyperparams> {
    let cs = [0.1, 1.0, 10.0, 100.0, 1000.0];
    let eps = [0.1, 0.5, 1.0];
    let mut grid = Vec::new();
    for &c in &cs {
        for &e in &eps {
            match kernel {
                KernelKind::Linear => grid.push(Hyperparams::linear(c, e)),
                KernelKind::Rbf => {
                    for p in -6..=2 {
                        grid.push(Hyperparams::rbf(c, e, 2f64.powi(p)));
                    }
                }
            }
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    fn fit(x: &[Vec<f64>], dims: usize) -> Self {
        let n = x.len() as f64;
        let mut mean = vec![0.0; dims];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dims];
        for row in x {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weights {
    Linear {
        coefficients: Vec<f64>,
        bias: f64,
    },
    Kernel {
        support_vectors: Vec<Vec<f64>>,
        dual_coefs: Vec<f64>,
        bias: f64,
    },
}

/// A trained regressor. Inputs to [`predict`] are raw (unstandardized)
/// features in `feature_names` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub format_version: u32,
    pub kernel: KernelKind,
    pub hyperparams: Hyperparams,
    pub standardization: Standardization,
    pub weights: Weights,
    pub feature_names: Vec<String>,
    /// Column visiting order (sorted by name) so that results do not depend
    /// on how the caller arranged the columns.
    #[serde(skip)]
    order: Vec<usize>,
}

fn canonical_order(names: &[String]) -> Result<Vec<usize>> {
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| names[a].cmp(&names[b]));
    if order.windows(2).any(|w| names[w[0]] == names[w[1]]) {
        return Err(Error::invalid("duplicate feature names"));
    }
    Ok(order)
}

fn dot(a: &[f64], b: &[f64], order: &[usize]) -> f64 {
    order.iter().map(|&i| a[i] * b[i]).sum()
}

fn sq_dist(a: &[f64], b: &[f64], order: &[usize]) -> f64 {
    order.iter().map(|&i| (a[i] - b[i]) * (a[i] - b[i])).sum()
}

fn kernel_value(kind: KernelKind, gamma: Option<f64>, a: &[f64], b: &[f64], order: &[usize]) -> f64 {
    match kind {
        KernelKind::Linear => dot(a, b, order),
        KernelKind::Rbf => (-gamma.unwrap_or(1.0) * sq_dist(a, b, order)).exp(),
    }
}

fn check_matrix(x: &[Vec<f64>], dims: usize) -> Result<()> {
    for (i, row) in x.iter().enumerate() {
        if row.len() != dims {
            return Err(Error::Geometry(format!("row {i} has {} columns, expected {dims}", row.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("row {i} has a non-finite feature")));
        }
    }
    Ok(())
}

/// Trains an epsilon-SVR. Deterministic for a fixed row order.
pub fn train_svr(
    x: &[Vec<f64>],
    y: &[f64],
    feature_names: &[String],
    kernel: KernelKind,
    hp: Hyperparams,
) -> Result<SvrModel> {
    hp.validate(kernel)?;
    let dims = feature_names.len();
    if x.len() != y.len() {
        return Err(Error::Geometry(format!("{} rows but {} targets", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::TooFewSamples { min: 2, got: x.len() });
    }
    check_matrix(x, dims)?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite target"));
    }
    let order = canonical_order(feature_names)?;
    let standardization = Standardization::fit(x, dims);
    let z: Vec<Vec<f64>> = x.iter().map(|r| standardization.apply(r)).collect();

    let mut model = SvrModel {
        format_version: MODEL_FORMAT_VERSION,
        kernel,
        hyperparams: hp,
        standardization,
        weights: Weights::Linear {
            coefficients: vec![0.0; dims],
            bias: y[0],
        },
        feature_names: feature_names.to_vec(),
        order,
    };
    if y.iter().all(|&v| v == y[0]) {
        warn!("constant training target {}; model predicts it everywhere", y[0]);
        if kernel == KernelKind::Rbf {
            model.weights = Weights::Kernel {
                support_vectors: vec![],
                dual_coefs: vec![],
                bias: y[0],
            };
        }
        return Ok(model);
    }

    let n = z.len();
    let order = &model.order;
    let gram: Vec<f64> = par::map_range(n, |i| {
        (0..n)
            .map(|j| kernel_value(kernel, hp.gamma, &z[i], &z[j], order))
            .collect::<Vec<_>>()
    })
    .concat();
    let sol = smo::solve(
        &gram,
        y,
        &smo::SmoParams {
            c: hp.c,
            epsilon: hp.epsilon,
            tolerance: KKT_TOLERANCE,
            max_iter: MAX_ITERATIONS,
        },
    );
    debug!("SMO: {} iterations, converged = {}", sol.iterations, sol.converged);

    model.weights = match kernel {
        KernelKind::Linear => {
            let mut w = vec![0.0; dims];
            for (row, &a) in z.iter().zip(&sol.coef) {
                if a != 0.0 {
                    for (wi, v) in w.iter_mut().zip(row) {
                        *wi += a * v;
                    }
                }
            }
            Weights::Linear {
                coefficients: w,
                bias: sol.bias,
            }
        }
        KernelKind::Rbf => {
            let (sv, coefs): (Vec<_>, Vec<_>) = z
                .into_iter()
                .zip(sol.coef)
                .filter(|(_, a)| *a != 0.0)
                .unzip();
            Weights::Kernel {
                support_vectors: sv,
                dual_coefs: coefs,
                bias: sol.bias,
            }
        }
    };
    Ok(model)
}

impl SvrModel {
    pub fn dims(&self) -> usize {
        self.feature_names.len()
    }

    fn validate_loaded(mut self) -> Result<Self> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported model version {} (expected {MODEL_FORMAT_VERSION})",
                self.format_version
            )));
        }
        let d = self.dims();
        if self.standardization.mean.len() != d || self.standardization.std.len() != d {
            return Err(Error::Model("standardization length mismatch".into()));
        }
        match &self.weights {
            Weights::Linear { coefficients, .. } if coefficients.len() != d => {
                return Err(Error::Model("coefficient length mismatch".into()))
            }
            Weights::Kernel {
                support_vectors,
                dual_coefs,
                ..
            } if support_vectors.len() != dual_coefs.len() || support_vectors.iter().any(|s| s.len() != d) => {
                return Err(Error::Model("support vector shape mismatch".into()))
            }
            _ => {}
        }
        self.hyperparams.validate(self.kernel).map_err(|e| Error::Model(e.to_string()))?;
        self.order = canonical_order(&self.feature_names)?;
        Ok(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: SvrModel = serde_json::from_str(text)?;
        model.validate_loaded()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        let z = self.standardization.apply(row);
        match &self.weights {
            Weights::Linear { coefficients, bias } => dot(coefficients, &z, &self.order) + bias,
            Weights::Kernel {
                support_vectors,
                dual_coefs,
                bias,
            } => {
                support_vectors
                    .iter()
                    .zip(dual_coefs)
                    .map(|(sv, a)| a * kernel_value(self.kernel, self.hyperparams.gamma, sv, &z, &self.order))
                    .sum::<f64>()
                    + bias
            }
        }
    }
}

/// Scores raw feature rows.
pub fn predict(model: &SvrModel, x: &[Vec<f64>]) -> Result<Vec<f64>> {
    check_matrix(x, model.dims())?;
    Ok(x.iter().map(|r| model.predict_row(r)).collect())
}

/// Training and validation data for [`grid_search`].
pub struct Dataset<'a> {
    pub x: &'a [Vec<f64>],
    pub y: &'a [f64],
}

/// Outcome of one grid point.
#[derive(Debug, Clone, Copy)]
pub struct GridPoint {
    pub hyperparams: Hyperparams,
    pub srocc: f64,
}

/// Exhaustive search for the hyperparameters with the best validation SROCC.
/// Ties go to the smaller C, then the smaller gamma, then the smaller epsilon.
pub fn grid_search(
    train: Dataset<'_>,
    val: Dataset<'_>,
    feature_names: &[String],
    kernel: KernelKind,
    grid: &[Hyperparams],
) -> Result<Hyperparams> {
    Ok(grid_search_detailed(train, val, feature_names, kernel, grid)?.0)
}

/// Like [`grid_search`] but also returns every evaluated point.
pub fn grid_search_detailed(
    train: Dataset<'_>,
    val: Dataset<'_>,
    feature_names: &[String],
    kernel: KernelKind,
    grid: &[Hyperparams],
) -> Result<(Hyperparams, Vec<GridPoint>)> {
    if grid.is_empty() {
        return Err(Error::invalid("empty hyperparameter grid"));
    }
    if val.x.len() < 2 {
        return Err(Error::TooFewSamples {
            min: 2,
            got: val.x.len(),
        });
    }
    let results = par::map(grid, |hp| -> Result<GridPoint> {
        let model = train_svr(train.x, train.y, feature_names, kernel, *hp)?;
        let pred = predict(&model, val.x)?;
        let score = srocc(&pred, val.y).unwrap_or(f64::NEG_INFINITY);
        Ok(GridPoint {
            hyperparams: *hp,
            srocc: score,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let key = |p: &GridPoint| (p.hyperparams.c, p.hyperparams.gamma.unwrap_or(0.0), p.hyperparams.epsilon);
    let best = results
        .iter()
        .copied()
        .reduce(|best, p| {
            let better = p.srocc > best.srocc
                || (p.srocc == best.srocc && key(&p).partial_cmp(&key(&best)) == Some(std::cmp::Ordering::Less));
            if better {
                p
            } else {
                best
            }
        })
        .expect("non-empty grid");
    Ok((best.hyperparams, results))
}

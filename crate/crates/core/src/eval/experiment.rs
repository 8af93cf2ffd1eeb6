//! Repeated train/test trials over content-disjoint splits.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use super::metrics::{correlations, Correlations};
use super::split::{all_content_splits, assert_content_disjoint, split_by_content, Split, SplitSpec};
use crate::error::{Error, Result};
use crate::media::FrameRate;
use crate::par;
use crate::regression::{default_grid, grid_search, predict, train_svr, Dataset, Hyperparams, KernelKind};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Feature matrix with one row per distorted video.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub features: Vec<Vec<f64>>,
    pub mos: Vec<f64>,
    pub content_ids: Vec<String>,
    pub fps_dist: Vec<FrameRate>,
    pub feature_names: Vec<String>,
}

impl ExperimentData {
    pub fn validate(&self) -> Result<()> {
        let n = self.features.len();
        if self.mos.len() != n || self.content_ids.len() != n || self.fps_dist.len() != n {
            return Err(Error::Geometry("experiment columns have different lengths".into()));
        }
        if n == 0 {
            return Err(Error::invalid("experiment has no rows"));
        }
        if let Some(i) = self.mos.iter().position(|m| !m.is_finite()) {
            return Err(Error::invalid(format!("row {i}: MOS is not finite")));
        }
        if let Some(i) = self.features.iter().position(|r| r.len() != self.feature_names.len()) {
            return Err(Error::Geometry(format!(
                "row {i} has {} features, expected {}",
                self.features[i].len(),
                self.feature_names.len()
            )));
        }
        Ok(())
    }

    fn rows(&self, idx: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>) {
        (
            idx.iter().map(|&i| self.features[i].clone()).collect(),
            idx.iter().map(|&i| self.mos[i]).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Protocol {
    /// Random content-disjoint splits, one per iteration.
    Random(SplitSpec),
    /// Every combination of training contents at the given fraction.
    AllSplits { train_fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kernel: KernelKind,
    /// Searched per iteration when the split has a validation part.
    pub grid: Vec<Hyperparams>,
    /// Used when there is no validation part.
    pub fixed: Hyperparams,
    /// Also report correlations for each distorted frame rate separately.
    pub by_fps: bool,
}

impl ModelConfig {
    pub fn new(kernel: KernelKind) -> Self {
        let fixed = match kernel {
            KernelKind::Linear => Hyperparams::linear(1.0, 0.1),
            KernelKind::Rbf => Hyperparams::rbf(10.0, 0.1, 2f64.powi(-4)),
        };
        Self {
            kernel,
            grid: default_grid(kernel),
            fixed,
            by_fps: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpsGroup {
    pub size: usize,
    /// Absent when the group is too small or constant.
    pub correlations: Option<Correlations>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationResult {
    pub iteration: usize,
    pub hyperparams: Hyperparams,
    pub test_size: usize,
    pub correlations: Correlations,
    /// `[b1, b2, b3, b4]`, or absent when a linear mapping was used.
    pub logistic_params: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub by_fps: BTreeMap<String, FpsGroup>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedIteration {
    pub iteration: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format_version: u32,
    pub protocol: Protocol,
    pub kernel: KernelKind,
    pub iterations: Vec<IterationResult>,
    pub skipped: Vec<SkippedIteration>,
    pub skipped_count: usize,
    /// Median of each criterion over the completed iterations.
    pub median: Option<Correlations>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub median_by_fps: BTreeMap<String, Correlations>,
}

/// Median of a sample; the mean of the middle pair for even sizes.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn median_correlations<'a>(items: impl Iterator<Item = &'a Correlations> + Clone) -> Option<Correlations> {
    let col = |f: fn(&Correlations) -> f64| median(&items.clone().map(f).collect::<Vec<_>>());
    Some(Correlations {
        srocc: col(|c| c.srocc)?,
        krocc: col(|c| c.krocc)?,
        plcc: col(|c| c.plcc)?,
        rmse: col(|c| c.rmse)?,
    })
}

enum Outcome {
    Done(IterationResult),
    Skipped(SkippedIteration),
}

fn is_degenerate(e: &Error) -> bool {
    matches!(e, Error::Undefined(_) | Error::TooFewSamples { .. } | Error::Degenerate)
}

fn run_iteration(data: &ExperimentData, config: &ModelConfig, iteration: usize, split: &Split) -> Result<Outcome> {
    assert_content_disjoint(&data.content_ids, split)?;
    let skip = |reason: String| {
        debug!("iteration {iteration} skipped: {reason}");
        Ok(Outcome::Skipped(SkippedIteration { iteration, reason }))
    };
    if split.test.len() < 2 {
        return skip(format!("test set has {} video(s)", split.test.len()));
    }
    let (train_x, train_y) = data.rows(&split.train);
    let hyperparams = match &split.val {
        Some(val) if val.len() >= 2 => {
            let (val_x, val_y) = data.rows(val);
            grid_search(
                Dataset { x: &train_x, y: &train_y },
                Dataset { x: &val_x, y: &val_y },
                &data.feature_names,
                config.kernel,
                &config.grid,
            )?
        }
        _ => config.fixed,
    };
    let model = match train_svr(&train_x, &train_y, &data.feature_names, config.kernel, hyperparams) {
        Ok(m) => m,
        Err(e) if is_degenerate(&e) => return skip(format!("training failed: {e}")),
        Err(e) => return Err(e),
    };
    let (test_x, test_y) = data.rows(&split.test);
    let pred = predict(&model, &test_x)?;
    let evaluation = match correlations(&pred, &test_y) {
        Ok(ev) => ev,
        Err(e) if is_degenerate(&e) => return skip(format!("test correlations undefined: {e}")),
        Err(e) => return Err(e),
    };

    let mut by_fps = BTreeMap::new();
    if config.by_fps {
        let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (pos, &row) in split.test.iter().enumerate() {
            groups.entry(data.fps_dist[row].to_string()).or_default().push(pos);
        }
        for (fps, members) in groups {
            let p: Vec<f64> = members.iter().map(|&i| pred[i]).collect();
            let m: Vec<f64> = members.iter().map(|&i| test_y[i]).collect();
            let corr = correlations(&p, &m).ok().map(|ev| ev.correlations);
            by_fps.insert(fps, FpsGroup { size: members.len(), correlations: corr });
        }
    }

    Ok(Outcome::Done(IterationResult {
        iteration,
        hyperparams,
        test_size: split.test.len(),
        logistic_params: evaluation.mapping.logistic_params(),
        correlations: evaluation.correlations,
        by_fps,
    }))
}

/// Runs the full protocol. Iterations execute in parallel; the report only
/// depends on the inputs and the master seed.
pub fn run_experiment(data: &ExperimentData, protocol: &Protocol, config: &ModelConfig) -> Result<ExperimentReport> {
    data.validate()?;
    if config.grid.is_empty() {
        return Err(Error::invalid("empty hyperparameter grid"));
    }
    let splits: Vec<Split> = match protocol {
        Protocol::Random(spec) => {
            spec.validate()?;
            (0..spec.iterations)
                .map(|i| split_by_content(&data.content_ids, spec, i))
                .collect::<Result<_>>()?
        }
        Protocol::AllSplits { train_fraction } => all_content_splits(&data.content_ids, *train_fraction)?,
    };
    info!("running {} iterations", splits.len());
    let outcomes = par::map_range(splits.len(), |i| run_iteration(data, config, i, &splits[i]))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut iterations = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Done(r) => iterations.push(r),
            Outcome::Skipped(s) => skipped.push(s),
        }
    }
    let median_all = median_correlations(iterations.iter().map(|r| &r.correlations));
    let mut median_by_fps = BTreeMap::new();
    if config.by_fps {
        let mut per: BTreeMap<&str, Vec<&Correlations>> = BTreeMap::new();
        for r in &iterations {
            for (fps, g) in &r.by_fps {
                if let Some(c) = &g.correlations {
                    per.entry(fps).or_default().push(c);
                }
            }
        }
        for (fps, cs) in per {
            if let Some(m) = median_correlations(cs.into_iter()) {
                median_by_fps.insert(fps.to_string(), m);
            }
        }
    }
    Ok(ExperimentReport {
        format_version: REPORT_FORMAT_VERSION,
        protocol: protocol.clone(),
        kernel: config.kernel,
        skipped_count: skipped.len(),
        iterations,
        skipped,
        median: median_all,
        median_by_fps,
    })
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Plain-text summary table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let row = |out: &mut String, label: &str, c: &Correlations| {
            let _ = writeln!(
                out,
                "{label:<12} {:>8.4} {:>8.4} {:>8.4} {:>9.4}",
                c.srocc, c.krocc, c.plcc, c.rmse
            );
        };
        let _ = writeln!(out, "{:<12} {:>8} {:>8} {:>8} {:>9}", "", "SROCC", "KROCC", "PLCC", "RMSE");
        match &self.median {
            Some(m) => row(&mut out, "median", m),
            None => out.push_str("median       (no completed iterations)\n"),
        }
        for (fps, m) in &self.median_by_fps {
            row(&mut out, &format!("{fps} fps"), m);
        }
        let _ = writeln!(
            out,
            "{} iteration(s) completed, {} skipped",
            self.iterations.len(),
            self.skipped_count
        );
        out
    }
}

use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use greedvmaf::eval::{
    psnr, run_experiment, split_by_content, DatasetManifest, ExperimentData, ExperimentReport, ModelConfig, Protocol,
    RowSource, SplitSpec,
};
use greedvmaf::features::{
    extract_features, feature_names, load_feature_csv, write_entropy_dump, write_feature_csv, FeatureRecord,
};
use greedvmaf::greed::GreedConfig;
use greedvmaf::media::FrameRate;
use greedvmaf::regression::{
    default_grid, grid_search, predict, train_svr, Dataset, Hyperparams, KernelKind, SvrModel,
};
use log::{info, warn};

use crate::args::{EvaluateArgs, ExtractionArgs, FeaturesArgs, ModelArgs, PairArgs, PredictArgs, TrainArgs};
use crate::cache::FeatureCache;
use crate::input::load_video;

/// Features for one pair, consulting the cache when one is configured.
fn pair_features(
    reference: &Path,
    dist: &Path,
    fps: (Option<FrameRate>, Option<FrameRate>),
    extraction: &ExtractionArgs,
    config: &GreedConfig,
) -> Result<FeatureRecord> {
    let names = feature_names(&config.scales);
    let fps_label = |f: Option<FrameRate>| f.map(|f| f.to_string()).unwrap_or_default();
    let cache = extraction.cache_dir.as_deref().map(FeatureCache::new).transpose()?;
    let key = cache.as_ref().map(|_| {
        FeatureCache::key(reference, dist, (fps_label(fps.0), fps_label(fps.1)), config, &extraction.raw)
    });
    if let (Some(c), Some(k)) = (&cache, &key) {
        if let Some(hit) = c.get(k, &names) {
            info!("cache hit for {}", dist.display());
            return Ok(hit);
        }
    }
    let r = load_video(reference, fps.0, &extraction.raw)?;
    let d = load_video(dist, fps.1, &extraction.raw)?;
    let fv = extract_features(&r, &d, config).with_context(|| format!("extracting features for {}", dist.display()))?;
    let record = FeatureRecord {
        reference: reference.display().to_string(),
        dist: dist.display().to_string(),
        fps_ref: r.fps(),
        fps_dist: d.fps(),
        values: fv.values(),
    };
    if let (Some(c), Some(k)) = (&cache, &key) {
        if let Err(e) = c.put(k, &names, &record) {
            warn!("could not write feature cache: {e:#}");
        }
    }
    Ok(record)
}

fn checked_config(extraction: &ExtractionArgs) -> Result<GreedConfig> {
    let config = extraction.greed_config();
    config.validate()?;
    Ok(config)
}

pub fn cmd_features(args: &FeaturesArgs) -> Result<()> {
    let config = checked_config(&args.extraction)?;
    let record = pair_features(
        &args.reference,
        &args.dist,
        (args.fps_ref, args.fps_dist),
        &args.extraction,
        &config,
    )?;
    let names = feature_names(&config.scales);
    match &args.output {
        Some(path) => {
            let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_feature_csv(file, &names, &[record])?;
        }
        None => write_feature_csv(std::io::stdout().lock(), &names, &[record])?,
    }
    if let Some(path) = &args.dump_entropies {
        let r = load_video(&args.reference, args.fps_ref, &args.extraction.raw)?;
        let d = load_video(&args.dist, args.fps_dist, &args.extraction.raw)?;
        let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_entropy_dump(std::io::BufWriter::new(file), &r, &d, &config)?;
    }
    Ok(())
}

/// One feature row per manifest row, extracted in parallel.
fn manifest_features(manifest: &DatasetManifest, extraction: &ExtractionArgs) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let config = checked_config(extraction)?;
    let names = feature_names(&config.scales);
    let rows = greedvmaf::par::map(&manifest.rows, |row| -> Result<Vec<f64>> {
        match &row.source {
            RowSource::Videos { reference, dist } => Ok(pair_features(
                reference,
                dist,
                (Some(row.fps_ref), Some(row.fps_dist)),
                extraction,
                &config,
            )?
            .values),
            RowSource::FeatureCsv(path) => {
                let (file_names, mut records) = load_feature_csv(path)?;
                if file_names != names {
                    bail!("{}: feature columns do not match the configured scales", path.display());
                }
                if records.len() != 1 {
                    bail!("{}: expected exactly one feature row, found {}", path.display(), records.len());
                }
                Ok(records.remove(0).values)
            }
        }
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((names, rows))
}

fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let manifest = DatasetManifest::load(path)?;
    if manifest.is_empty() {
        bail!("{}: manifest has no rows", path.display());
    }
    Ok(manifest)
}

fn fixed_hyperparams(model: &ModelArgs) -> Option<Hyperparams> {
    let c = model.c?;
    let epsilon = model.epsilon.unwrap_or(0.1);
    Some(match model.kernel {
        KernelKind::Linear => Hyperparams::linear(c, epsilon),
        KernelKind::Rbf => Hyperparams::rbf(c, epsilon, model.gamma.unwrap_or(2f64.powi(-4))),
    })
}

/// Searches hyperparameters on a content-disjoint train/validation split,
/// then fits the final model on every row.
pub fn cmd_train(args: &TrainArgs) -> Result<SvrModel> {
    let manifest = load_manifest(&args.manifest)?;
    let mos = manifest.mos()?;
    let (names, x) = manifest_features(&manifest, &args.extraction)?;
    let kernel = args.model.kernel;
    let hp = match fixed_hyperparams(&args.model) {
        Some(hp) => hp,
        None if manifest.distinct_contents() >= 2 => {
            if args.fractions.len() != 2 {
                bail!("--fractions for training takes two parts: train,validation");
            }
            let spec = SplitSpec::new(args.fractions.clone(), args.seed, 1)?;
            let split = split_by_content(&manifest.content_ids(), &spec, 0)?;
            let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<f64>) {
                (idx.iter().map(|&i| x[i].clone()).collect(), idx.iter().map(|&i| mos[i]).collect())
            };
            let (tx, ty) = pick(&split.train);
            let (vx, vy) = pick(&split.test);
            if vx.len() < 2 {
                warn!("validation split has fewer than 2 videos; using default hyperparameters");
                ModelConfig::new(kernel).fixed
            } else {
                let hp = grid_search(Dataset { x: &tx, y: &ty }, Dataset { x: &vx, y: &vy }, &names, kernel, &default_grid(kernel))?;
                info!("selected {hp:?}");
                hp
            }
        }
        None => {
            warn!("only one content in the manifest; using default hyperparameters");
            ModelConfig::new(kernel).fixed
        }
    };
    let model = train_svr(&x, &mos, &names, kernel, hp)?;
    model.save(&args.output)?;
    Ok(model)
}

fn check_model_names(model: &SvrModel, names: &[String]) -> Result<()> {
    if model.feature_names != names {
        bail!(
            "model expects features {:?}; extraction settings produce {:?}",
            model.feature_names,
            names
        );
    }
    Ok(())
}

pub fn cmd_predict(args: &PredictArgs) -> Result<Vec<f64>> {
    let model = SvrModel::load(&args.model)?;
    let scores = if let Some(path) = &args.manifest {
        let manifest = load_manifest(path)?;
        let (names, x) = manifest_features(&manifest, &args.extraction)?;
        check_model_names(&model, &names)?;
        predict(&model, &x)?
    } else {
        let (reference, dist) = args
            .reference
            .as_ref()
            .zip(args.dist.as_ref())
            .ok_or_else(|| anyhow!("--ref and --dist are required without --manifest"))?;
        let config = checked_config(&args.extraction)?;
        let names = feature_names(&config.scales);
        check_model_names(&model, &names)?;
        let rec = pair_features(reference, dist, (args.fps_ref, args.fps_dist), &args.extraction, &config)?;
        predict(&model, &[rec.values])?
    };
    let mut out = std::io::stdout().lock();
    for s in &scores {
        writeln!(out, "{s}")?;
    }
    Ok(scores)
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<ExperimentReport> {
    let manifest = load_manifest(&args.manifest)?;
    let mos = manifest.mos()?;
    let (names, features) = manifest_features(&manifest, &args.extraction)?;
    let data = ExperimentData {
        features,
        mos,
        content_ids: manifest.content_ids(),
        fps_dist: manifest.rows.iter().map(|r| r.fps_dist).collect(),
        feature_names: names,
    };
    let protocol = if args.all_splits {
        Protocol::AllSplits {
            train_fraction: args.train_fraction,
        }
    } else {
        Protocol::Random(SplitSpec::new(args.fractions.clone(), args.seed, args.iterations)?)
    };
    let mut config = ModelConfig::new(args.model.kernel);
    config.by_fps = args.by_fps;
    if let Some(hp) = fixed_hyperparams(&args.model) {
        config.fixed = hp;
        config.grid = vec![hp];
    }
    let report = run_experiment(&data, &protocol, &config)?;
    if let Some(path) = &args.report {
        std::fs::write(path, report.to_json()? + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    print!("{}", report.render_table());
    Ok(report)
}

pub fn cmd_psnr(args: &PairArgs) -> Result<f64> {
    let r = load_video(&args.reference, args.fps_ref, &args.raw)?;
    let d = load_video(&args.dist, args.fps_dist, &args.raw)?;
    let value = psnr(&r, &d)?;
    if value.is_infinite() {
        println!("inf");
    } else {
        println!("{value:.4}");
    }
    Ok(value)
}

/// Exit status for an error: 2 when an input file does not exist, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let not_found = err.chain().any(|cause| {
        if let Some(greedvmaf::Error::Io { source, .. }) = cause.downcast_ref::<greedvmaf::Error>() {
            return source.kind() == std::io::ErrorKind::NotFound;
        }
        cause
            .downcast_ref::<std::io::Error>()
            .is_some_and(|e| e.kind() == std::io::ErrorKind::NotFound)
    });
    if not_found {
        2
    } else {
        1
    }
}


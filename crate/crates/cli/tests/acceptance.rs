//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Run with `cargo test -p greedvmaf-cli --test acceptance`.

use std::path::Path;
use std::time::Instant;

use clap::Parser;
use greedvmaf::bandpass::{packet_analyze, packet_synthesize, temporal_wavelet_packet, FilterBankSpec};
use greedvmaf::eval::{
    logistic, logistic_fit, run_experiment, srocc, ExperimentData, ModelConfig, Protocol, SplitSpec,
};
use greedvmaf::features::{extract_features, feature_names};
use greedvmaf::ggd::{fit_ggd_kurtosis_match, ggd_entropy, ggd_kurtosis, GgdParams};
use greedvmaf::greed::{extract_greed_features, temporal_entropy_profile, GreedConfig};
use greedvmaf::media::{temporal_subsample, write_y4m, FramePlane, FrameRate, VideoSequence};
use greedvmaf::regression::{predict, train_svr, Hyperparams, KernelKind, SvrModel};
use greedvmaf::synth::{add_noise, blur, SceneSpec};
use greedvmaf::vmaf::{extract_vmaf_spatial, vif_per_scale};
use greedvmaf_cli::args::{Cli, Command};
use greedvmaf_cli::commands::cmd_evaluate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
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

fn scene(seed: u64, frames: usize, fps: u64) -> VideoSequence {
    SceneSpec::new(256, 256, seed)
        .render(frames, FrameRate::integer(fps))
        .expect("render")
}

fn ggd_closed_forms() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let alpha = 0.25 + 0.6 * i as f64;
        let gauss = ggd_entropy(&GgdParams::new(alpha, 2.0).map_err(|e| e.to_string())?);
        // Gaussian with variance alpha^2 / 2.
        let gauss_ref = 0.5 * (std::f64::consts::PI * std::f64::consts::E * alpha * alpha).ln();
        let lap = ggd_entropy(&GgdParams::new(alpha, 1.0).map_err(|e| e.to_string())?);
        let lap_ref = 1.0 + (2.0 * alpha).ln();
        worst = worst.max((gauss - gauss_ref).abs()).max((lap - lap_ref).abs());
    }
    ensure(worst < 1e-9, format!("entropy error {worst:e}"))?;
    let (k2, k1) = (ggd_kurtosis(2.0), ggd_kurtosis(1.0));
    ensure((k2 - 3.0).abs() < 1e-9 && (k1 - 6.0).abs() < 1e-9, format!("kurtosis {k2}, {k1}"))?;
    Ok(format!("20 entropies within {worst:.1e}; kurtosis 3 and 6"))
}

/// Draws GGD samples as `alpha * sign * G^(1/beta)` with `G ~ Gamma(1/beta, 1)`.
fn sample_ggd(alpha: f64, beta: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = Gamma::new(1.0 / beta, 1.0).expect("gamma");
    (0..n)
        .map(|_| {
            let g: f64 = gamma.sample(&mut rng);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            sign * alpha * g.powf(1.0 / beta)
        })
        .collect()
}

fn round_trip_hits(beta: f64, n: usize) -> Result<usize, String> {
    let mut hits = 0;
    for seed in 0..20 {
        let x = sample_ggd(1.3, beta, n, 1000 * seed + (beta * 10.0) as u64);
        let fit = fit_ggd_kurtosis_match(&x).map_err(|e| e.to_string())?;
        if ((fit.beta() - beta) / beta).abs() <= 0.05 {
            hits += 1;
        }
    }
    Ok(hits)
}

/// At beta = 0.5 the sample kurtosis of 1e5 draws has a standard deviation
/// of about 3.9 around 25.2, while the 5% beta window spans only 22.0..29.3,
/// so roughly 80% of seeds can succeed whatever the implementation. That
/// shape is checked at 1e6 draws; the 1e5 rate is reported alongside.
fn estimator_round_trip() -> Outcome {
    let start = Instant::now();
    let mut summary = Vec::new();
    for beta in [1.0, 2.0, 4.0] {
        let hits = round_trip_hits(beta, 100_000)?;
        summary.push(format!("beta {beta}: {hits}/20"));
        ensure(hits >= 19, format!("beta {beta}: only {hits}/20 seeds within 5%"))?;
    }
    let heavy = round_trip_hits(0.5, 1_000_000)?;
    let heavy_small = round_trip_hits(0.5, 100_000)?;
    summary.push(format!("beta 0.5: {heavy}/20 at n=1e6 ({heavy_small}/20 at n=1e5)"));
    ensure(heavy >= 19, format!("beta 0.5 at n=1e6: only {heavy}/20 seeds within 5%"))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 30.0, format!("took {secs:.1} s"))?;
    Ok(format!("{} in {secs:.1} s", summary.join(", ")))
}

fn identity_zeros() -> Outcome {
    let config = GreedConfig::default();
    let mut worst_greed: f64 = 0.0;
    let mut worst_vmaf: f64 = 0.0;
    for seed in [3, 17, 29] {
        let v = scene(seed, 16, 60);
        let greed = extract_greed_features(&v, &v, &config).map_err(|e| e.to_string())?;
        let values = greed.to_vec();
        ensure(values.len() == 16, "expected 16 GREED features")?;
        worst_greed = values.iter().fold(worst_greed, |m, v| m.max(v.abs()));
        let vmaf = extract_vmaf_spatial(&v, &v).map_err(|e| e.to_string())?;
        worst_vmaf = vmaf.to_vec().iter().fold(worst_vmaf, |m, v| m.max((v - 1.0).abs()));
    }
    ensure(worst_greed <= 1e-12, format!("GREED max |f| = {worst_greed:e}"))?;
    ensure(worst_vmaf <= 1e-6, format!("VIF/DLM max |f - 1| = {worst_vmaf:e}"))?;
    Ok(format!("GREED max {worst_greed:.1e}, VIF/DLM max deviation {worst_vmaf:.1e}"))
}

fn wavelet_correctness() -> Outcome {
    let spec = FilterBankSpec::bior22();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let x: Vec<f64> = (0..64).map(|_| rng.random_range(-100.0..100.0)).collect();
        let leaves = packet_analyze(&x, &spec).map_err(|e| e.to_string())?;
        let y = packet_synthesize(&leaves, &spec).map_err(|e| e.to_string())?;
        worst = x.iter().zip(&y).fold(worst, |m, (a, b)| m.max((a - b).abs()));
    }
    ensure(worst < 1e-8, format!("reconstruction error {worst:e}"))?;
    let frame = FramePlane::filled(32, 32, 117.0).map_err(|e| e.to_string())?;
    let flat = VideoSequence::new(vec![frame; 16], FrameRate::integer(30), "flat").map_err(|e| e.to_string())?;
    let bands = temporal_wavelet_packet(&flat, &spec).map_err(|e| e.to_string())?;
    ensure(bands.len() == 7, "expected 7 band-pass subbands")?;
    let peak = bands
        .iter()
        .flat_map(|b| b.frames.iter().flat_map(|f| f.samples().iter()))
        .fold(0.0f64, |m, v| m.max(v.abs()));
    ensure(peak < 1e-10, format!("constant video leaks {peak:e}"))?;
    Ok(format!("reconstruction error {worst:.1e}; constant video peak {peak:.1e}"))
}

fn mean_entropy(video: &VideoSequence, config: &GreedConfig) -> Result<f64, String> {
    let profile = temporal_entropy_profile(video, 4, config).map_err(|e| e.to_string())?;
    let all: Vec<f64> = profile.into_iter().flatten().collect();
    Ok(all.iter().sum::<f64>() / all.len() as f64)
}

fn frame_rate_bias() -> Outcome {
    let config = GreedConfig::default();
    let mut ratios = Vec::new();
    for seed in [1, 2, 3] {
        let hfr = scene(seed, 64, 120);
        let lfr = temporal_subsample(&hfr, FrameRate::integer(30)).map_err(|e| e.to_string())?;
        let mut per_rate = Vec::new();
        for video in [&hfr, &lfr] {
            let levels = [0.5, 1.0, 2.0]
                .iter()
                .map(|&s| mean_entropy(&blur(video, s).map_err(|e| e.to_string())?, &config))
                .collect::<Result<Vec<_>, _>>()?;
            per_rate.push(levels);
        }
        let separation = (0..3)
            .map(|i| (per_rate[0][i] - per_rate[1][i]).abs())
            .fold(f64::INFINITY, f64::min);
        let spread = per_rate
            .iter()
            .map(|l| {
                let hi = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = l.iter().copied().fold(f64::INFINITY, f64::min);
                hi - lo
            })
            .fold(0.0, f64::max);
        ratios.push(separation / spread);
    }
    let worst = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    ensure(worst > 2.0, format!("separation/spread ratios {ratios:.2?}"))?;
    Ok(format!("separation/spread ratios {ratios:.2?}"))
}

fn monotonicity() -> Outcome {
    let config = GreedConfig {
        scales: vec![4],
        ..GreedConfig::default()
    };
    let noise = [4.0, 8.0, 16.0, 32.0];
    let mut sgreed_runs: Vec<Vec<f64>> = vec![Vec::new(); noise.len()];
    let blurs = [0.75, 1.5, 3.0];
    let mut vif_runs: Vec<Vec<f64>> = vec![Vec::new(); blurs.len()];
    for seed in 0..5 {
        let v = scene(100 + seed, 16, 30);
        for (i, &sigma) in noise.iter().enumerate() {
            let d = add_noise(&v, sigma, seed).map_err(|e| e.to_string())?;
            let f = extract_greed_features(&v, &d, &config).map_err(|e| e.to_string())?;
            sgreed_runs[i].push(f.sgreed[0]);
        }
        let short = VideoSequence::from_shared(v.frames()[..2].to_vec(), v.fps(), "short").map_err(|e| e.to_string())?;
        for (i, &sigma) in blurs.iter().enumerate() {
            let d = blur(&short, sigma).map_err(|e| e.to_string())?;
            vif_runs[i].push(vif_per_scale(&short, &d).map_err(|e| e.to_string())?[0]);
        }
    }
    let sg: Vec<f64> = sgreed_runs.iter().map(|r| median(r)).collect();
    let vif: Vec<f64> = vif_runs.iter().map(|r| median(r)).collect();
    ensure(sg.windows(2).all(|w| w[1] > w[0]), format!("SGREED medians not increasing: {sg:.4?}"))?;
    ensure(vif.windows(2).all(|w| w[1] < w[0]), format!("VIF medians not decreasing: {vif:.4?}"))?;
    Ok(format!("SGREED {sg:.4?}; VIF s0 {vif:.4?}"))
}

fn regression_checks() -> Outcome {
    let x: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 * 0.37 - 4.0]).collect();
    let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0] + 1.0).collect();
    let names = vec!["x1".to_string()];
    let model = train_svr(&x, &y, &names, KernelKind::Linear, Hyperparams::linear(100.0, 0.01)).map_err(|e| e.to_string())?;
    let pred = predict(&model, &x).map_err(|e| e.to_string())?;
    let rmse = (pred.iter().zip(&y).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / y.len() as f64).sqrt();
    ensure(rmse < 0.02, format!("training RMSE {rmse}"))?;
    let back = SvrModel::from_json(&model.to_json().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let again = predict(&back, &x).map_err(|e| e.to_string())?;
    let drift = pred.iter().zip(&again).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    ensure(drift <= 1e-9, format!("JSON round trip drift {drift:e}"))?;
    Ok(format!("training RMSE {rmse:.2e}; round-trip drift {drift:.1e}"))
}

/// Synthetic dataset: 12 contents, each degraded by blur and frame dropping,
/// MOS falling linearly with the total injected strength.
fn synthetic_dataset(contents: u64) -> Result<ExperimentData, String> {
    let config = GreedConfig::default();
    let mut data = ExperimentData {
        features: vec![],
        mos: vec![],
        content_ids: vec![],
        fps_dist: vec![],
        feature_names: feature_names(&config.scales),
    };
    for c in 0..contents {
        let reference = scene(500 + c, 32, 120);
        for &sigma in &[0.5, 1.5, 3.0] {
            let blurred = blur(&reference, sigma).map_err(|e| e.to_string())?;
            for &fps in &[120u64, 30] {
                let dist = temporal_subsample(&blurred, FrameRate::integer(fps)).map_err(|e| e.to_string())?;
                let fv = extract_features(&reference, &dist, &config).map_err(|e| e.to_string())?;
                let strength = 20.0 * sigma + if fps < 120 { 15.0 } else { 0.0 };
                data.features.push(fv.values());
                data.mos.push(100.0 - strength);
                data.content_ids.push(format!("content{c:02}"));
                data.fps_dist.push(FrameRate::integer(fps));
            }
        }
    }
    Ok(data)
}

fn protocol_engine() -> Outcome {
    let truth = [100.0, 0.0, 50.0, 10.0];
    let xs: Vec<f64> = (0..80).map(|i| i as f64 * 100.0 / 79.0).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| logistic(&truth, x)).collect();
    let fit = logistic_fit(&xs, &ys).map_err(|e| e.to_string())?;
    let fit_rmse = (fit.sse / xs.len() as f64).sqrt();
    ensure(fit_rmse < 1e-6, format!("logistic self-consistency RMSE {fit_rmse:e}"))?;

    let hand = [
        (srocc(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), 1.0),
        (srocc(&[1.0, 2.0, 3.0], &[30.0, 20.0, 10.0]), -1.0),
        (srocc(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]), 0.9487),
    ];
    for (got, want) in hand {
        let got = got.map_err(|e| e.to_string())?;
        ensure((got - want).abs() < 1e-4, format!("SROCC {got} vs {want}"))?;
    }

    let start = Instant::now();
    let data = synthetic_dataset(12)?;
    let protocol = Protocol::Random(SplitSpec::new(vec![0.7, 0.15, 0.15], 2024, 50).map_err(|e| e.to_string())?);
    let report = run_experiment(&data, &protocol, &ModelConfig::new(KernelKind::Linear)).map_err(|e| e.to_string())?;
    let med = report.median.ok_or("no completed iterations")?.srocc;
    let secs = start.elapsed().as_secs_f64();
    ensure(med >= 0.8, format!("median test SROCC {med:.4}"))?;
    ensure(secs < 600.0, format!("took {secs:.0} s"))?;
    Ok(format!(
        "logistic RMSE {fit_rmse:.1e}; median SROCC {med:.4} over {} iterations ({} skipped) in {secs:.0} s",
        report.iterations.len(),
        report.skipped_count
    ))
}

fn evaluate_once(manifest: &Path, report: &Path) -> Result<Vec<u8>, String> {
    let cli = Cli::try_parse_from([
        "greedvmaf",
        "evaluate",
        "--manifest",
        manifest.to_str().unwrap(),
        "--iterations",
        "20",
        "--fractions",
        "0.6,0.2,0.2",
        "--by-fps",
        "--seed",
        "77",
        "--report",
        report.to_str().unwrap(),
    ])
    .map_err(|e| e.to_string())?;
    let Command::Evaluate(args) = &cli.command else {
        return Err("parsed the wrong subcommand".into());
    };
    cmd_evaluate(args).map_err(|e| format!("{e:#}"))?;
    std::fs::read(report).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut manifest = String::from("ref_path,dist_path,content_id,fps_ref,fps_dist,mos\n");
    for c in 0..5u64 {
        let reference = scene(900 + c, 16, 60);
        let ref_name = format!("ref{c}.y4m");
        write_y4m(&reference, dir.path().join(&ref_name)).map_err(|e| e.to_string())?;
        for (j, (sigma, fps)) in [(0.5, 60u64), (1.5, 30), (3.0, 30)].iter().enumerate() {
            let d = temporal_subsample(&blur(&reference, *sigma).map_err(|e| e.to_string())?, FrameRate::integer(*fps))
                .map_err(|e| e.to_string())?;
            let name = format!("dist{c}_{j}.y4m");
            write_y4m(&d, dir.path().join(&name)).map_err(|e| e.to_string())?;
            let mos = 90.0 - 15.0 * sigma - if *fps < 60 { 10.0 } else { 0.0 } + c as f64;
            manifest += &format!("{ref_name},{name},c{c},60,{fps},{mos}\n");
        }
    }
    let manifest_path = dir.path().join("manifest.csv");
    std::fs::write(&manifest_path, manifest).map_err(|e| e.to_string())?;
    let a = evaluate_once(&manifest_path, &dir.path().join("a.json"))?;
    let b = evaluate_once(&manifest_path, &dir.path().join("b.json"))?;
    ensure(!a.is_empty(), "empty report")?;
    ensure(a == b, "reports differ")?;
    Ok(format!("two reports of {} bytes are identical", a.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("GGD closed forms", ggd_closed_forms),
        ("estimator round trip", estimator_round_trip),
        ("identity zeros", identity_zeros),
        ("wavelet correctness", wavelet_correctness),
        ("frame-rate bias", frame_rate_bias),
        ("monotonicity", monotonicity),
        ("regression", regression_checks),
        ("protocol engine", protocol_engine),
        ("determinism", determinism),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {n} ({name}): {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {n} ({name}): {detail} [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

//! The fused 21-dimensional feature vector and its CSV form.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::greed::{extract_greed_features, reference_alignment, temporal_entropy_profile, GreedConfig, GreedFeatures};
use crate::media::{temporal_subsample, FrameRate, VideoSequence};
use crate::vmaf::{extract_vmaf_spatial, VmafSpatialFeatures};

pub const FEATURE_CSV_FORMAT_VERSION: u32 = 1;

/// Column names for the default scales {4, 5}.
pub const FEATURE_NAMES: [&str; 21] = [
    "vif_s0",
    "vif_s1",
    "vif_s2",
    "vif_s3",
    "dlm",
    "tgreed_s4_k1",
    "tgreed_s4_k2",
    "tgreed_s4_k3",
    "tgreed_s4_k4",
    "tgreed_s4_k5",
    "tgreed_s4_k6",
    "tgreed_s4_k7",
    "tgreed_s5_k1",
    "tgreed_s5_k2",
    "tgreed_s5_k3",
    "tgreed_s5_k4",
    "tgreed_s5_k5",
    "tgreed_s5_k6",
    "tgreed_s5_k7",
    "sgreed_s4",
    "sgreed_s5",
];

/// Names for an arbitrary scale set, in the same layout as [`FEATURE_NAMES`].
pub fn feature_names(scales: &[u32]) -> Vec<String> {
    let mut names: Vec<String> = VmafSpatialFeatures::NAMES.iter().map(|s| s.to_string()).collect();
    names.extend(GreedFeatures::names(scales));
    names
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub vmaf: VmafSpatialFeatures,
    pub greed: GreedFeatures,
}

impl FeatureVector {
    pub fn names(&self) -> Vec<String> {
        feature_names(&self.greed.scales)
    }

    pub fn values(&self) -> Vec<f64> {
        let mut v = self.vmaf.to_vec();
        v.extend(self.greed.to_vec());
        v
    }
}

/// VIF/DLM against the pseudo-reference plus every GREED feature.
pub fn extract_features(reference: &VideoSequence, dist: &VideoSequence, config: &GreedConfig) -> Result<FeatureVector> {
    let greed = extract_greed_features(reference, dist, config)?;
    let pseudo = temporal_subsample(reference, dist.fps())?;
    let vmaf = extract_vmaf_spatial(&pseudo, dist)?;
    Ok(FeatureVector { vmaf, greed })
}

/// One row of a feature CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub reference: String,
    pub dist: String,
    pub fps_ref: FrameRate,
    pub fps_dist: FrameRate,
    pub values: Vec<f64>,
}

/// Writes a header and one line per record. Floats use the shortest
/// representation that round-trips.
pub fn write_feature_csv<W: Write>(out: W, names: &[String], records: &[FeatureRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["format_version".to_string(), "ref".into(), "dist".into(), "fps_ref".into(), "fps_dist".into()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for r in records {
        if r.values.len() != names.len() {
            return Err(Error::Geometry(format!("{} values for {} columns", r.values.len(), names.len())));
        }
        let mut line = vec![
            FEATURE_CSV_FORMAT_VERSION.to_string(),
            r.reference.clone(),
            r.dist.clone(),
            r.fps_ref.to_string(),
            r.fps_dist.to_string(),
        ];
        line.extend(r.values.iter().map(|v| v.to_string()));
        w.write_record(&line)?;
    }
    w.flush().map_err(|e| Error::io("<feature csv>", e))?;
    Ok(())
}

/// Parses a feature CSV produced by [`write_feature_csv`].
pub fn read_feature_csv(text: &str) -> Result<(Vec<String>, Vec<FeatureRecord>)> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let fixed = ["format_version", "ref", "dist", "fps_ref", "fps_dist"];
    if header.len() <= fixed.len() || header[..fixed.len()] != fixed {
        return Err(Error::invalid(format!("feature CSV header must start with {}", fixed.join(","))));
    }
    let names = header[fixed.len()..].to_vec();
    let mut records = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::invalid(format!("feature CSV line {}: {what}", i + 2));
        let version: u32 = rec[0].parse().map_err(|_| bad("invalid format_version"))?;
        if version != FEATURE_CSV_FORMAT_VERSION {
            return Err(bad(&format!("unsupported format_version {version}")));
        }
        let values = rec
            .iter()
            .skip(fixed.len())
            .map(|v| v.parse::<f64>().map_err(|_| bad(&format!("invalid number {v:?}"))))
            .collect::<Result<Vec<_>>>()?;
        records.push(FeatureRecord {
            reference: rec[1].to_string(),
            dist: rec[2].to_string(),
            fps_ref: rec[3].parse().map_err(|_| bad("invalid fps_ref"))?,
            fps_dist: rec[4].parse().map_err(|_| bad("invalid fps_dist"))?,
            values,
        });
    }
    Ok((names, records))
}

pub fn load_feature_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<FeatureRecord>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_feature_csv(&text)
}

/// Per-frame mean temporal entropies of the reference, pseudo-reference and
/// distorted videos, as long-format CSV
/// (`video,scale,subband,frame,mean_entropy`). Reference rows carry the
/// frame index aligned to the pseudo-reference.
pub fn write_entropy_dump<W: Write>(
    out: W,
    reference: &VideoSequence,
    dist: &VideoSequence,
    config: &GreedConfig,
) -> Result<()> {
    let pseudo = temporal_subsample(reference, dist.fps())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["video", "scale", "subband", "frame", "mean_entropy"])?;
    for &s in &config.scales {
        let align = reference_alignment(reference, &pseudo);
        let sources: [(&str, &VideoSequence, bool); 3] =
            [("ref", reference, true), ("pseudo_ref", &pseudo, false), ("dist", dist, false)];
        for (label, video, aligned) in sources {
            let profile = temporal_entropy_profile(video, s, config)?;
            for (k, frames) in profile.iter().enumerate() {
                let pick: Vec<(usize, f64)> = if aligned {
                    align.iter().enumerate().map(|(t, &src)| (t, frames[src])).collect()
                } else {
                    frames.iter().copied().enumerate().collect()
                };
                for (t, v) in pick {
                    w.write_record([label.to_string(), s.to_string(), (k + 1).to_string(), t.to_string(), v.to_string()])?;
                }
            }
        }
    }
    w.flush().map_err(|e| Error::io("<entropy dump>", e))?;
    Ok(())
}

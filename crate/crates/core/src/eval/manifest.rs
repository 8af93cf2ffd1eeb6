//! Dataset manifests: one CSV row per distorted video.
//!
//! Columns: `ref_path,dist_path,content_id,fps_ref,fps_dist,mos`, where a
//! `feature_csv` column may replace the two paths when features were
//! extracted beforehand. Relative paths resolve against the manifest's
//! directory. `mos` may be left empty for prediction-only use.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::media::FrameRate;

#[derive(Debug, Clone, PartialEq)]
pub enum RowSource {
    Videos { reference: PathBuf, dist: PathBuf },
    FeatureCsv(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub source: RowSource,
    pub content_id: String,
    pub fps_ref: FrameRate,
    pub fps_dist: FrameRate,
    pub mos: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub rows: Vec<ManifestRow>,
}

#[derive(Deserialize)]
struct RawRow {
    #[serde(default)]
    ref_path: Option<String>,
    #[serde(default)]
    dist_path: Option<String>,
    #[serde(default)]
    feature_csv: Option<String>,
    content_id: String,
    fps_ref: String,
    fps_dist: String,
    #[serde(default)]
    mos: Option<String>,
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.map(|v| v.trim().to_string()).filter(|v| !v.is_empty())
}

impl DatasetManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let resolve = |p: String| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        };
        let mut rows = Vec::new();
        for (i, record) in reader.deserialize::<RawRow>().enumerate() {
            let raw = record?;
            let line = i + 2;
            let bad = |msg: &str| Error::invalid(format!("manifest line {line}: {msg}"));
            let source = match (non_empty(raw.ref_path), non_empty(raw.dist_path), non_empty(raw.feature_csv)) {
                (_, _, Some(f)) => RowSource::FeatureCsv(resolve(f)),
                (Some(r), Some(d), None) => RowSource::Videos {
                    reference: resolve(r),
                    dist: resolve(d),
                },
                _ => return Err(bad("needs ref_path and dist_path, or feature_csv")),
            };
            if raw.content_id.is_empty() {
                return Err(bad("empty content_id"));
            }
            let fps_ref: FrameRate = raw.fps_ref.parse().map_err(|_| bad("invalid fps_ref"))?;
            let fps_dist: FrameRate = raw.fps_dist.parse().map_err(|_| bad("invalid fps_dist"))?;
            let mos = match non_empty(raw.mos) {
                None => None,
                Some(m) => {
                    let v: f64 = m.parse().map_err(|_| bad("invalid mos"))?;
                    if !v.is_finite() {
                        return Err(bad("mos must be finite"));
                    }
                    Some(v)
                }
            };
            rows.push(ManifestRow {
                source,
                content_id: raw.content_id,
                fps_ref,
                fps_dist,
                mos,
            });
        }
        Ok(Self { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Scores of every row, failing if any is missing.
    pub fn mos(&self) -> Result<Vec<f64>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| r.mos.ok_or_else(|| Error::invalid(format!("manifest row {} has no mos", i + 1))))
            .collect()
    }

    pub fn content_ids(&self) -> Vec<String> {
        self.rows.iter().map(|r| r.content_id.clone()).collect()
    }

    pub fn distinct_contents(&self) -> usize {
        self.rows
            .iter()
            .map(|r| r.content_id.as_str())
            .collect::<std::collections::BTreeSet<_>>()
            .len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_video_and_feature_rows() {
        let text = "ref_path,dist_path,feature_csv,content_id,fps_ref,fps_dist,mos\n\
                    a/ref.y4m,a/d1.y4m,,A,120,60,71.5\n\
                    ,,feat/b.csv,B,120,30000/1001,\n\
                    /abs/r.y4m,/abs/d.y4m,,C,60,60,40\n";
        let m = DatasetManifest::parse(text, Path::new("/data")).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(
            m.rows[0].source,
            RowSource::Videos {
                reference: "/data/a/ref.y4m".into(),
                dist: "/data/a/d1.y4m".into()
            }
        );
        assert_eq!(m.rows[1].source, RowSource::FeatureCsv("/data/feat/b.csv".into()));
        assert_eq!(m.rows[1].fps_dist, FrameRate::new(30000, 1001).unwrap());
        assert_eq!(m.rows[1].mos, None);
        assert_eq!(m.rows[2].source, RowSource::Videos { reference: "/abs/r.y4m".into(), dist: "/abs/d.y4m".into() });
        assert!(m.mos().is_err());
        assert_eq!(m.distinct_contents(), 3);
    }

    #[test]
    fn rejects_bad_rows() {
        let base = Path::new(".");
        let header = "ref_path,dist_path,content_id,fps_ref,fps_dist,mos\n";
        assert!(DatasetManifest::parse(&format!("{header}r,d,,60,60,1\n"), base).is_err());
        assert!(DatasetManifest::parse(&format!("{header}r,,A,60,60,1\n"), base).is_err());
        assert!(DatasetManifest::parse(&format!("{header}r,d,A,sixty,60,1\n"), base).is_err());
        assert!(DatasetManifest::parse(&format!("{header}r,d,A,60,60,NaN\n"), base).is_err());
        assert!(DatasetManifest::parse(header, base).unwrap().is_empty());
    }
}

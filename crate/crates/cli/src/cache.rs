//! On-disk cache of feature rows keyed by the inputs and the extraction config.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use anyhow::Result;
use greedvmaf::features::{load_feature_csv, write_feature_csv, FeatureRecord};
use greedvmaf::greed::GreedConfig;
use sha2::{Digest, Sha256};

use crate::args::RawArgs;

fn file_stamp(path: &Path) -> String {
    let canonical = std::fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf());
    let meta = std::fs::metadata(path).ok();
    let len = meta.as_ref().map_or(0, |m| m.len());
    let mtime = meta
        .and_then(|m| m.modified().ok())
        .and_then(|t| t.duration_since(std::time::UNIX_EPOCH).ok())
        .map_or(0, |d| d.as_nanos());
    format!("{}|{len}|{mtime}", canonical.display())
}

static TMP_COUNTER: AtomicUsize = AtomicUsize::new(0);

pub struct FeatureCache {
    dir: PathBuf,
}

impl FeatureCache {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn key(reference: &Path, dist: &Path, fps: (String, String), config: &GreedConfig, raw: &RawArgs) -> String {
        let mut h = Sha256::new();
        h.update(file_stamp(reference));
        h.update([0]);
        h.update(file_stamp(dist));
        h.update([0]);
        h.update(format!("{}|{}", fps.0, fps.1));
        h.update(serde_json::to_string(config).unwrap_or_default());
        h.update(format!("{:?}|{:?}|{:?}", raw.width, raw.height, raw.pix_fmt));
        hex::encode(h.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.csv"))
    }

    pub fn get(&self, key: &str, names: &[String]) -> Option<FeatureRecord> {
        let (cached_names, mut rows) = load_feature_csv(self.path(key)).ok()?;
        (cached_names == names && rows.len() == 1).then(|| rows.remove(0))
    }

    pub fn put(&self, key: &str, names: &[String], record: &FeatureRecord) -> Result<()> {
        // Write then rename so concurrent readers never see a partial file.
        let n = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
        let tmp = self.dir.join(format!("{key}.{}.{n}.tmp", std::process::id()));
        let file = std::fs::File::create(&tmp)?;
        write_feature_csv(file, names, std::slice::from_ref(record))?;
        std::fs::rename(tmp, self.path(key))?;
        Ok(())
    }
}

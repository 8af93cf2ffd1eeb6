//! Spatial fidelity features: pixel-domain VIF at four scales and the
//! detail loss metric (DLM).

mod dlm;
mod vif;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::media::VideoSequence;
use crate::par;

pub use dlm::{dlm, dlm_frame, DlmConfig};
pub use vif::{vif_frame, vif_per_scale, VifConfig, VIF_SCALES};

/// VIF per scale (finest first) plus DLM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VmafSpatialFeatures {
    pub vif: [f64; VIF_SCALES],
    pub dlm: f64,
}

impl VmafSpatialFeatures {
    pub const NAMES: [&'static str; 5] = ["vif_s0", "vif_s1", "vif_s2", "vif_s3", "dlm"];

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.vif.to_vec();
        v.push(self.dlm);
        v
    }
}

/// VIF and DLM between the pseudo-reference and the distorted video at
/// native resolution.
pub fn extract_vmaf_spatial(pseudo: &VideoSequence, dist: &VideoSequence) -> Result<VmafSpatialFeatures> {
    pseudo.check_same_geometry(dist, "VIF/DLM inputs")?;
    let (vif_cfg, dlm_cfg) = (VifConfig::default(), DlmConfig::default());
    let per_frame = par::map_range(pseudo.len(), |t| -> Result<([f64; VIF_SCALES], f64)> {
        let (r, d) = (pseudo.frame(t), dist.frame(t));
        Ok((vif_frame(r, d, &vif_cfg)?, dlm_frame(r, d, &dlm_cfg)?))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let n = per_frame.len() as f64;
    let mut vif = [0.0; VIF_SCALES];
    let mut dlm_sum = 0.0;
    for (v, d) in &per_frame {
        for (acc, x) in vif.iter_mut().zip(v) {
            *acc += x;
        }
        dlm_sum += d;
    }
    vif.iter_mut().for_each(|v| *v /= n);
    Ok(VmafSpatialFeatures { vif, dlm: dlm_sum / n })
}

//! Model persistence: a self-describing versioned JSON artifact whose
//! round-trip reproduces predictions bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ToolError};
use crate::models::FittedModel;
use crate::transform::PowerTransformParams;

pub const FORMAT_VERSION: u32 = 1;

/// Training metadata carried inside an artifact. Deliberately free of
/// wall-clock values so retraining with the same inputs is byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub seed: u64,
    pub config_digest: String,
    /// Last feature timestamp of the training data, as the artifact's
    /// reproducible "trained at" marker.
    pub train_end: Option<chrono::NaiveDateTime>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub model: FittedModel,
    pub feature_names: Vec<String>,
    /// Feature transform, when the model was trained on transformed data.
    pub feature_transform: Option<PowerTransformParams>,
    /// Target transform, when predictions must be inverse-transformed back
    /// to kWh.
    pub target_transform: Option<crate::transform::ColumnTransform>,
    pub horizon_hours: u32,
    pub methodology: String,
    pub meta: ArtifactMeta,
}

/// Write-temp-then-rename so a crash never leaves a half-written file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|s| s.to_string_lossy()).unwrap_or_default()
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn save_artifact(artifact: &ModelArtifact, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(artifact)
        .map_err(|e| ToolError::Config(format!("artifact serialization failed: {e}")))?;
    atomic_write(path, json.as_bytes())
}

pub fn load_artifact(path: &Path) -> Result<ModelArtifact> {
    let text = std::fs::read_to_string(path)?;
    let artifact: ModelArtifact = serde_json::from_str(&text)
        .map_err(|e| ToolError::Schema(format!("{}: not a model artifact: {e}", path.display())))?;
    if artifact.format_version != FORMAT_VERSION {
        return Err(ToolError::Schema(format!(
            "{}: unsupported format version {}",
            path.display(),
            artifact.format_version
        )));
    }
    Ok(artifact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Matrix;
    use crate::models::gbm::GbmConfig;
    use crate::models::{FittedModel, ModelSpec};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_predictions_are_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let rows: Vec<Vec<f64>> = (0..120)
            .map(|_| (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        let x = Matrix::from_rows(&rows);
        let y: Vec<f64> = rows.iter().map(|r| r[0].max(0.0) * 2.0 + r[1].abs()).collect();

        let spec = ModelSpec::Xgboost(GbmConfig { n_stages: 10, seed: 7, ..Default::default() });
        let model = FittedModel::fit(&spec, &x, &y).unwrap();
        let artifact = ModelArtifact {
            format_version: FORMAT_VERSION,
            model,
            feature_names: (0..4).map(|j| format!("f{j}")).collect(),
            feature_transform: None,
            target_transform: None,
            horizon_hours: 24,
            methodology: "regular".into(),
            meta: ArtifactMeta { seed: 7, config_digest: "t".into(), train_end: None },
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_artifact(&artifact, &path).unwrap();
        let loaded = load_artifact(&path).unwrap();

        let probe = Matrix::from_rows(
            &(0..100).map(|_| (0..4).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect::<Vec<Vec<f64>>>(),
        );
        let a = artifact.model.predict(&probe).unwrap();
        let b = loaded.model.predict(&probe).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn wrong_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "{\"format_version\": 999}").unwrap();
        assert!(matches!(load_artifact(&path), Err(ToolError::Schema(_))));
    }
}

use std::path::Path;

use serde::Deserialize;

use aerolift_core::boxfit::UpAxisMode;
use aerolift_core::lifting::LiftParams;
use aerolift_core::pipeline::PipelineConfig;
use aerolift_core::tracking::TrackerParams;
use aerolift_core::viewpoint::QualityWeights;

use crate::CliError;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub threshold: Option<f64>,
}

/// Layout of the `--config` TOML file. Every section and field is optional.
#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub lift: LiftParams,
    pub tracker: TrackerParams,
    pub quality: QualityWeights,
    pub up_axis: UpAxisMode,
    pub eval: EvalSection,
}

impl Default for FileConfig {
    fn default() -> Self {
        let p = PipelineConfig::default();
        Self { lift: p.lift, tracker: p.tracker, quality: p.quality, up_axis: p.up_axis, eval: EvalSection::default() }
    }
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {}", path.display(), e.message())))
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig { lift: self.lift, tracker: self.tracker, quality: self.quality, up_axis: self.up_axis }
    }
}

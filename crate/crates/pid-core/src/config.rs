//! One JSON-serializable configuration bundle covering every stage, so a
//! whole run is reproducible from a single file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aggregate::RuleSet;
use crate::error::{Error, Result};
use crate::graph::GraphConfig;
use crate::lines::LineDetectConfig;
use crate::shapes::{BasicRules, ShapeConfig};
use crate::symbols::SymbolDetectConfig;
use crate::text::TextConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Sheets are upscaled to this width before processing; 0 keeps the
    /// input resolution.
    pub resize_width: u32,
    pub lines: LineDetectConfig,
    pub text: TextConfig,
    pub symbols: SymbolDetectConfig,
    pub shapes: ShapeConfig,
    pub basic_rules: BasicRules,
    pub graph: GraphConfig,
    pub rules: RuleSet,
    /// Candidate pool size when associating tag text with a symbol.
    pub k_text_neighbors: usize,
    pub text_max_dist: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            resize_width: 0,
            lines: LineDetectConfig::default(),
            text: TextConfig::default(),
            symbols: SymbolDetectConfig::default(),
            shapes: ShapeConfig::default(),
            basic_rules: BasicRules::default(),
            graph: GraphConfig::default(),
            rules: RuleSet::default(),
            k_text_neighbors: 5,
            text_max_dist: 150.0,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = PipelineConfig::default();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: PipelineConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.k_text_neighbors, 5);
        assert_eq!(back.rules.classes.len(), 32);
        assert_eq!(back.graph.cluster_min_pts, cfg.graph.cluster_min_pts);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: PipelineConfig = serde_json::from_str(r#"{"resize_width": 7168}"#).unwrap();
        assert_eq!(cfg.resize_width, 7168);
        assert_eq!(cfg.k_text_neighbors, 5);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        let cfg = PipelineConfig::default();
        cfg.save(&path).unwrap();
        let back = PipelineConfig::load(&path).unwrap();
        assert_eq!(back.text_max_dist, cfg.text_max_dist);
    }
}

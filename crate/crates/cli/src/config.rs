//! Optional default overrides from a config file.
//!
//! `HOTHAND_CONFIG` may point at a JSON file supplying defaults for the
//! flags below; explicit command-line flags always win.

use std::path::Path;

use anyhow::Context;
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defaults {
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub quad_order: Option<usize>,
    pub se_formula: Option<String>,
    pub h_max: Option<u32>,
    pub kalman_q: Option<String>,
}

pub const ENV_VAR: &str = "HOTHAND_CONFIG";

impl Defaults {
    pub fn from_env() -> anyhow::Result<Self> {
        match std::env::var_os(ENV_VAR) {
            None => Ok(Self::default()),
            Some(path) => Self::from_path(Path::new(&path)),
        }
    }

    fn from_path(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {ENV_VAR} file {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("parsing {ENV_VAR} file {}", path.display()))
    }
}

//! TOML run configuration.
//!
//! ```toml
//! [run]
//! benchmark = "custom"          # converge2d | converge3d | cantilever | unconfined | custom
//! res = [8]                     # resolutions; unconfined: [rings, layers]
//! delta = [1.0]
//! dt = 0.01
//! T = 0.5
//! out = "out/custom"            # relative to the config file
//! vtk_every = 10
//! threshold = 0.9
//! ramp = 0.0
//!
//! [mesh]                        # custom only
//! generator = "square"          # square | cube, with n = res[0]
//! # file = "bracket.mesh"       # or a porofem-mesh file, relative to the config file
//!
//! [material]                    # custom only
//! E = 1e5                       # with nu, or give lambda and mu directly
//! nu = 0.4
//! kappa = 1e-7
//! alpha = 0.93
//! c0 = 0.0
//! mode = "full_biot"            # full_biot | vector_laplacian
//!
//! [boundary]                    # custom only; tags refer to mesh markers
//! fixed = [1]                   # zero displacement
//! sealed = [1, 2, 3, 4]         # zero normal flux; other regions are drained (p = pressure)
//! traction_tags = [4]
//! traction = [0.0, -1.0, 0.0]
//! pressure = 0.0
//! body_force = [0.0, 0.0, 0.0]
//! source = 0.0
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub mesh: Option<MeshSection>,
    pub material: Option<MaterialSection>,
    pub boundary: Option<BoundarySection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub benchmark: String,
    pub res: Option<Vec<usize>>,
    pub delta: Option<Vec<f64>>,
    pub dt: Option<f64>,
    #[serde(rename = "T")]
    pub t_final: Option<f64>,
    pub out: Option<PathBuf>,
    pub vtk_every: Option<usize>,
    pub threshold: Option<f64>,
    pub ramp: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub generator: Option<String>,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    #[serde(rename = "E")]
    pub young: Option<f64>,
    pub nu: Option<f64>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default)]
    pub c0: f64,
    #[serde(default = "full_biot")]
    pub mode: String,
}

impl Default for MaterialSection {
    fn default() -> Self {
        MaterialSection {
            young: None,
            nu: None,
            lambda: None,
            mu: None,
            kappa: 1.0,
            alpha: 1.0,
            c0: 0.0,
            mode: full_biot(),
        }
    }
}

fn one() -> f64 {
    1.0
}

fn full_biot() -> String {
    "full_biot".into()
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    #[serde(default)]
    pub fixed: Vec<u32>,
    #[serde(default)]
    pub sealed: Vec<u32>,
    #[serde(default)]
    pub traction_tags: Vec<u32>,
    pub traction: Option<[f64; 3]>,
    #[serde(default)]
    pub pressure: f64,
    pub body_force: Option<[f64; 3]>,
    #[serde(default)]
    pub source: f64,
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<RunConfig, CliError> {
        toml::from_str(text).map_err(|source| CliError::Config {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = RunConfig::parse(&text, path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(out) = cfg.run.out.as_mut() {
            *out = base.join(&*out);
        }
        if let Some(file) = cfg.mesh.as_mut().and_then(|m| m.file.as_mut()) {
            *file = base.join(&*file);
        }
        Ok(cfg)
    }
}

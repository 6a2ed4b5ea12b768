//! Experiment configuration: a TOML file resolved into a fully checked plan.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mesh::catalog::resolve_gamma;
use crate::mesh::{Geometry, GeometryId};
pub use crate::verify::InputKind;
use crate::verify::RouteChoice;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    geometry: String,
    #[serde(default)]
    gamma: String,
    #[serde(default = "auto")]
    route: String,
    #[serde(default = "default_levels")]
    levels: Vec<u32>,
    #[serde(default = "default_level")]
    level: u32,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_out")]
    out: PathBuf,
    #[serde(default = "default_input")]
    input: InputKind,
    #[serde(default)]
    hx: RawHx,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHx {
    #[serde(default = "default_hx_levels")]
    levels: Vec<u32>,
    #[serde(default = "default_alpha")]
    alpha: Vec<f64>,
    #[serde(default)]
    jump_block: usize,
    #[serde(default = "one")]
    beta: f64,
    #[serde(default = "default_tol")]
    tol: f64,
    #[serde(default = "default_maxit")]
    maxit: usize,
}

impl Default for RawHx {
    fn default() -> Self {
        RawHx {
            levels: default_hx_levels(),
            alpha: default_alpha(),
            jump_block: 0,
            beta: 1.0,
            tol: default_tol(),
            maxit: default_maxit(),
        }
    }
}

fn auto() -> String {
    "auto".into()
}
fn default_levels() -> Vec<u32> {
    vec![1, 2, 3]
}
fn default_level() -> u32 {
    2
}
fn default_samples() -> usize {
    5
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_input() -> InputKind {
    InputKind::Random
}
fn default_hx_levels() -> Vec<u32> {
    vec![2, 3, 4]
}
fn default_alpha() -> Vec<f64> {
    vec![1.0, 1e2, 1e4, 1e6]
}
fn one() -> f64 {
    1.0
}
fn default_tol() -> f64 {
    1e-8
}
fn default_maxit() -> usize {
    2000
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HxOptions {
    pub levels: Vec<u32>,
    /// `α` on the jump block, one solve per entry; `α = 1` elsewhere.
    pub alpha: Vec<f64>,
    pub jump_block: usize,
    pub beta: f64,
    pub tol: f64,
    pub maxit: usize,
}

/// A resolved experiment plan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    #[serde(serialize_with = "ser_geometry")]
    pub geometry: GeometryId,
    /// Trace spec as written (catalog spec name or entity list).
    pub gamma_spec: String,
    /// Resolved coarse entity names.
    pub gamma: Vec<String>,
    #[serde(serialize_with = "ser_route")]
    pub route: RouteChoice,
    pub levels: Vec<u32>,
    pub level: u32,
    pub samples: usize,
    pub seed: u64,
    #[serde(skip)]
    pub out: PathBuf,
    pub input: InputKind,
    pub hx: HxOptions,
}

fn ser_geometry<S: serde::Serializer>(g: &GeometryId, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(g.as_str())
}

fn ser_route<S: serde::Serializer>(r: &RouteChoice, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(r.as_str())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let geometry: GeometryId = raw.geometry.parse()?;
        let geo = Geometry::get(geometry);
        let gamma = resolve_gamma(&geo, &raw.gamma);
        if let Some(bad) = gamma.iter().find(|g| geo.complex.entity(g).is_none()) {
            return Err(Error::UnknownEntity(bad.clone()));
        }
        let route = RouteChoice::parse(&raw.route)?;
        let mut levels = raw.levels;
        levels.sort_unstable();
        levels.dedup();
        let mut hx_levels = raw.hx.levels;
        hx_levels.sort_unstable();
        hx_levels.dedup();
        if raw.samples == 0 {
            return Err(Error::Config("samples must be positive".into()));
        }
        if levels.iter().chain(&hx_levels).chain([&raw.level]).any(|&k| k > 8) {
            return Err(Error::Config("levels above 8 are out of range".into()));
        }
        if raw.hx.alpha.is_empty() {
            return Err(Error::Config("hx.alpha is empty".into()));
        }
        if raw.hx.alpha.iter().chain([&raw.hx.beta]).any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(Error::Config("hx coefficients must be positive".into()));
        }
        if !(raw.hx.tol > 0.0) || raw.hx.maxit == 0 {
            return Err(Error::Config("hx.tol and hx.maxit must be positive".into()));
        }
        Ok(ExperimentConfig {
            geometry,
            gamma_spec: raw.gamma,
            gamma,
            route,
            levels,
            level: raw.level,
            samples: raw.samples,
            seed: raw.seed,
            out: raw.out,
            input: raw.input,
            hx: HxOptions {
                levels: hx_levels,
                alpha: raw.hx.alpha,
                jump_block: raw.hx.jump_block,
                beta: raw.hx.beta,
                tol: raw.hx.tol,
                maxit: raw.hx.maxit,
            },
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Hex SHA-256 of the resolved plan (output directory excluded).
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// File-name stem encoding geometry, trace, route and seed.
    pub fn stem(&self) -> String {
        let gamma = if self.gamma.is_empty() { "none".to_string() } else { self.gamma_spec.replace([',', ' '], "-") };
        format!("{}_{}_{}_s{}", self.geometry.as_str(), gamma, self.route.as_str(), self.seed)
    }
}

//! Run configuration: strict JSON with defaults filled in before echoing.

use std::path::Path;

use anyhow::{bail, Context, Result};
use ch_theta::ch::{ChConfig, DSpec, GridSpec, NodeKind, Preset};
use ch_theta::{Characteristics, QuadConfig, Sheet, SurfacePoint};
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    pub lambda: f64,
    pub sheet: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacteristicsConfig {
    pub b1: Vec<u8>,
    pub b2: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DConfig {
    Characteristics(CharacteristicsConfig),
    /// `[re, im]` pairs.
    Vector(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    Smooth,
    Cusped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKindName {
    #[default]
    Uniform,
    Chebyshev,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub y0: f64,
    pub y1: f64,
    pub ny: usize,
    pub t0: f64,
    pub t1: f64,
    pub nt: usize,
    #[serde(default)]
    pub node_kind: NodeKindName,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadSettings {
    #[serde(default = "default_quad_tol")]
    pub tol: f64,
    #[serde(default = "default_max_nodes")]
    pub max_nodes: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings { tol: default_quad_tol(), max_nodes: default_max_nodes() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub csv_path: String,
    pub meta_path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checks {
    #[serde(default)]
    pub fay: bool,
    #[serde(default)]
    pub pde: bool,
    /// Random real points for the Fay residuals.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for Checks {
    fn default() -> Self {
        Checks { fay: false, pde: false, samples: default_samples(), seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub branch_points: Vec<f64>,
    pub a: PointConfig,
    pub e_index: usize,
    /// Defaults to the preset's characteristics.
    #[serde(default)]
    pub d: Option<DConfig>,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default)]
    pub zeta_re: f64,
    pub preset: PresetName,
    pub grid: GridConfig,
    #[serde(default = "default_truncation_eps")]
    pub truncation_eps: f64,
    #[serde(default)]
    pub quad: QuadSettings,
    #[serde(default = "default_degeneracy_threshold")]
    pub degeneracy_threshold: f64,
    /// Defaults to `<config stem>.csv` and `<config stem>.json`.
    #[serde(default)]
    pub outputs: Option<Outputs>,
    #[serde(default)]
    pub checks: Checks,
}

fn default_quad_tol() -> f64 {
    QuadConfig::default().tol
}

fn default_max_nodes() -> usize {
    QuadConfig::default().max_nodes
}

fn default_samples() -> usize {
    100
}

fn default_k() -> f64 {
    1.0
}

fn default_truncation_eps() -> f64 {
    ch_theta::theta::DEFAULT_THETA_EPS
}

fn default_degeneracy_threshold() -> f64 {
    ch_theta::curve::DEFAULT_DEGENERACY_THRESHOLD
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        serde_json::from_str(text).context("invalid run configuration")
    }

    /// Reads a config and resolves defaulted outputs against the file stem.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = RunConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
        if cfg.outputs.is_none() {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
            cfg.outputs = Some(Outputs { csv_path: format!("{stem}.csv"), meta_path: format!("{stem}.json") });
        }
        Ok(cfg)
    }

    pub fn preset(&self) -> Preset {
        match self.preset {
            PresetName::Smooth => Preset::Smooth,
            PresetName::Cusped => Preset::Cusped,
        }
    }

    pub fn quad_config(&self) -> QuadConfig {
        QuadConfig { tol: self.quad.tol, max_nodes: self.quad.max_nodes, ..QuadConfig::default() }
    }

    pub fn grid_spec(&self) -> GridSpec {
        let g = &self.grid;
        GridSpec {
            y0: g.y0,
            y1: g.y1,
            ny: g.ny,
            t0: g.t0,
            t1: g.t1,
            nt: g.nt,
            node_kind: match g.node_kind {
                NodeKindName::Uniform => NodeKind::Uniform,
                NodeKindName::Chebyshev => NodeKind::Chebyshev,
            },
        }
    }

    pub fn d_spec(&self, genus: usize) -> Result<DSpec> {
        Ok(match &self.d {
            None => DSpec::Characteristics(self.preset().default_characteristics(genus)),
            Some(DConfig::Characteristics(c)) => DSpec::Characteristics(Characteristics::from_bits(&c.b1, &c.b2)?),
            Some(DConfig::Vector(v)) => DSpec::Vector(v.iter().map(|&[re, im]| C::new(re, im)).collect()),
        })
    }

    pub fn ch_config(&self, genus: usize) -> Result<ChConfig> {
        let sheet = match Sheet::from_index(self.a.sheet) {
            Some(s) => s,
            None => bail!("sheet of a must be 1 or 2, got {}", self.a.sheet),
        };
        Ok(ChConfig {
            a: SurfacePoint::real(self.a.lambda, sheet),
            e_index: self.e_index,
            d: self.d_spec(genus)?,
            k: self.k,
            zeta_re: self.zeta_re,
            preset: self.preset(),
            theta_eps: self.truncation_eps,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "branch_points": [0, 1, 2, 3],
        "a": {"lambda": -1, "sheet": 1},
        "e_index": 0,
        "preset": "smooth",
        "grid": {"y0": -1, "y1": 1, "ny": 3, "t0": 0, "t1": 1, "nt": 2}
    }"#;

    #[test]
    fn defaults_are_filled() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.k, 1.0);
        assert_eq!(c.zeta_re, 0.0);
        assert_eq!(c.quad, QuadSettings::default());
        assert_eq!(c.checks.samples, 100);
        assert_eq!(c.grid.node_kind, NodeKindName::Uniform);
        assert!(c.d.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MINIMAL.replace("\"e_index\"", "\"colour\": 1, \"e_index\"");
        assert!(RunConfig::from_json(&bad).is_err());
        let bad = MINIMAL.replace("\"ny\": 3", "\"ny\": 3, \"nz\": 4");
        assert!(RunConfig::from_json(&bad).is_err());
    }

    #[test]
    fn shift_forms() {
        let c = MINIMAL.replace("\"preset\"", "\"d\": {\"characteristics\": {\"b1\": [1], \"b2\": [0]}}, \"preset\"");
        let c = RunConfig::from_json(&c).unwrap();
        assert!(matches!(c.d_spec(1).unwrap(), DSpec::Characteristics(_)));
        let v = MINIMAL.replace("\"preset\"", "\"d\": {\"vector\": [[0.5, 2.5]]}, \"preset\"");
        let v = RunConfig::from_json(&v).unwrap();
        match v.d_spec(1).unwrap() {
            DSpec::Vector(d) => assert_eq!(d, vec![C::new(0.5, 2.5)]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trips_through_json() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn bad_sheet() {
        let c = RunConfig::from_json(&MINIMAL.replace("\"sheet\": 1", "\"sheet\": 3")).unwrap();
        assert!(c.ch_config(1).is_err());
    }
}

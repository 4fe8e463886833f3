//! Experiment configuration and its validation.

use std::path::{Path, PathBuf};

use quantnorm::filtration::FiltrationSpec;
use quantnorm::toric::{LatticePolytope, PolytopeSpec};
use serde::{Deserialize, Serialize};

use crate::expr::Potential;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Isometry,
    Geodesic,
    FiltrationSpectrum,
    Envelope,
    SubringDensity,
    BernsteinMarkov,
    Char,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Isometry => "isometry",
            Self::Geodesic => "geodesic",
            Self::FiltrationSpectrum => "filtration-spectrum",
            Self::Envelope => "envelope",
            Self::SubringDensity => "subring-density",
            Self::BernsteinMarkov => "bernstein-markov",
            Self::Char => "char",
        }
    }

    /// Number of metric models the experiment reads.
    pub fn models_needed(self) -> usize {
        match self {
            Self::Isometry | Self::Geodesic => 2,
            Self::SubringDensity => 0,
            _ => 1,
        }
    }
}

/// A metric: a potential expression or a CSV grid file of `φ` on a box.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_file: Option<PathBuf>,
    /// Half-width of the sampling box; automatic when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityName {
    Lebesgue,
    #[default]
    FubiniStudy,
}

/// Graded families for the `char` experiment: Ban log-weights, shifted by
/// `gauge·k`, or by `bump·√k`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    #[default]
    Ban,
    Gauge,
    Bump,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub k: Vec<u32>,
    #[serde(default)]
    pub t: Vec<f64>,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_moments")]
    pub moments: u32,
    #[serde(default)]
    pub density: DensityName,
    #[serde(default)]
    pub m: Vec<u32>,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub family: FamilyName,
    #[serde(default = "default_shift")]
    pub gauge: f64,
    #[serde(default = "default_shift")]
    pub bump: f64,
    /// Nodes per axis for both the box and the polytope grids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
}

fn default_p() -> f64 {
    2.0
}

fn default_bins() -> usize {
    32
}

fn default_moments() -> u32 {
    4
}

fn default_shift() -> f64 {
    0.5
}

impl Default for Params {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// File-name stem; the experiment name when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub polytope: PolytopeSpec,
    #[serde(default)]
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub params: Params,
    /// Kept as raw JSON so that schema errors become violations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filtration: Option<serde_json::Value>,
    #[serde(default)]
    pub output: OutputSpec,
}

/// A config read from disk, with the directory that relative paths in it
/// are resolved against.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
    pub raw: Vec<u8>,
}

impl LoadedConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

/// Reads and parses a config; a parse failure is reported as a single
/// violation.
pub fn load(path: &Path) -> Result<LoadedConfig, Vec<String>> {
    let raw =
        std::fs::read(path).map_err(|e| vec![format!("cannot read {}: {e}", path.display())])?;
    let config: ExperimentConfig = serde_json::from_slice(&raw)
        .map_err(|e| vec![format!("config does not match the schema: {e}")])?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig {
        config,
        base_dir,
        raw,
    })
}

impl ExperimentConfig {
    pub fn parse_filtration(&self) -> Result<FiltrationSpec, String> {
        let v = self
            .filtration
            .as_ref()
            .ok_or_else(|| "filtration: required for this experiment".to_string())?;
        serde_json::from_value(v.clone()).map_err(|e| format!("filtration: {e}"))
    }

    /// Every violated constraint, without running anything expensive.
    pub fn violations(&self, base_dir: &Path) -> Vec<String> {
        let mut out = Vec::new();
        let polytope = match self.polytope.build() {
            Ok(p) => Some(p),
            Err(e) => {
                out.push(format!("polytope: {e}"));
                None
            }
        };
        let dim = polytope.as_ref().map(LatticePolytope::dim);
        if let Some(d) = dim {
            if d > 2 {
                out.push(format!("polytope: dimension {d} is not supported (1 or 2)"));
            }
        }

        let kind = self.experiment;
        let need = kind.models_needed();
        if self.models.len() != need {
            out.push(format!(
                "models: {} needs exactly {need} model(s), found {}",
                kind.name(),
                self.models.len()
            ));
        }
        for (i, m) in self.models.iter().enumerate() {
            match (&m.potential, &m.grid_file) {
                (Some(_), Some(_)) | (None, None) => out.push(format!(
                    "models[{i}]: give exactly one of \"potential\" or \"grid_file\""
                )),
                (Some(src), None) => match Potential::parse(src) {
                    Ok(p) => {
                        if let (Some(pd), Some(d)) = (p.dim(), dim) {
                            if pd != d {
                                out.push(format!("models[{i}].potential: uses {pd} coordinates, polytope has {d}"));
                            }
                        }
                    }
                    Err(e) => out.push(format!("models[{i}].potential: {e}")),
                },
                (None, Some(f)) => {
                    let path = if f.is_absolute() {
                        f.clone()
                    } else {
                        base_dir.join(f)
                    };
                    if !path.is_file() {
                        out.push(format!(
                            "models[{i}].grid_file: {} does not exist",
                            path.display()
                        ));
                    }
                }
            }
            if let Some(r) = m.half_width {
                if !(r > 0.0 && r.is_finite()) {
                    out.push(format!("models[{i}].half_width: must be positive"));
                }
            }
        }

        let p = &self.params;
        if p.k.contains(&0) {
            out.push("params.k: k ≥ 1".to_string());
        }
        let needs_k = !matches!(kind, ExperimentKind::Envelope);
        if needs_k && p.k.is_empty() {
            out.push("params.k: at least one level is required".to_string());
        }
        if !(p.p >= 1.0) {
            out.push("params.p: p ≥ 1".to_string());
        }
        if p.t.iter().any(|t| !(0.0..=1.0).contains(t)) {
            out.push("params.t: every t must lie in [0, 1]".to_string());
        }
        if p.bins == 0 {
            out.push("params.bins: bins ≥ 1".to_string());
        }
        if let Some(g) = p.grid {
            if g < 2 {
                out.push("params.grid: grid ≥ 2".to_string());
            }
        }
        match kind {
            ExperimentKind::FiltrationSpectrum => {
                if p.moments == 0 {
                    out.push("params.moments: moments ≥ 1".to_string());
                }
                match self.parse_filtration() {
                    Ok(FiltrationSpec::MonomialLinear { vector, .. }) => {
                        if let Some(d) = dim {
                            if vector.len() != d {
                                out.push(format!(
                                    "filtration.vector: length {} but polytope has dimension {d}",
                                    vector.len()
                                ));
                            }
                        }
                    }
                    Ok(FiltrationSpec::Explicit { .. }) => {}
                    Err(e) => out.push(e),
                }
            }
            ExperimentKind::SubringDensity => {
                if p.m.is_empty() {
                    out.push("params.m: at least one degree is required".to_string());
                }
                if p.m.contains(&0) {
                    out.push("params.m: m ≥ 1".to_string());
                }
                if p.eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
                    out.push("params.eps: every ε must lie in (0, 1)".to_string());
                }
            }
            ExperimentKind::Char => {
                if let (Some(&top), false) = (p.k.iter().max(), p.k.is_empty()) {
                    if p.k.iter().any(|k| top % k != 0) {
                        out.push(
                            "params.k: char levels must all divide the largest level".to_string(),
                        );
                    }
                }
            }
            _ => {}
        }
        if self.filtration.is_some() && kind != ExperimentKind::FiltrationSpectrum {
            out.push(format!("filtration: not used by {}", kind.name()));
        }
        out
    }
}

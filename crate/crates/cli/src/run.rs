//! Runs a validated configuration and writes its artifacts.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use quantnorm::filtration::{concave_transform, filtration_spectrum_experiment, spectral_measure};
use quantnorm::quantize::{
    ban_family, ban_norm, bernstein_markov_gap, char_experiment, fit_rate,
    geodesic_quantization_experiment, isometry_experiment, perturbed_family, CharOptions, Density,
    ModelGrid, ToricBundleModel,
};
use quantnorm::subring::density_report;
use quantnorm::toric::{polytope_envelope, Domain, GridFunction, LatticePolytope, Measure1D};
use quantnorm::Error;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{DensityName, ExperimentConfig, ExperimentKind, FamilyName, LoadedConfig};
use crate::expr::Potential;

/// Command-line values that take precedence over the config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub threads: Option<usize>,
}

#[derive(Debug)]
pub enum RunError {
    Validation(Vec<String>),
    Library(Error),
    Io(String),
}

impl RunError {
    /// 2 for invalid input, 3 for numerical guards, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 2,
            Self::Library(e) if e.is_numerical_guard() => 3,
            Self::Library(e) if is_input_error(e) => 2,
            Self::Library(_) | Self::Io(_) => 1,
        }
    }
}

fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::DegeneratePolytope(_)
            | Error::InvalidParameter(_)
            | Error::Parse(_)
            | Error::DimensionMismatch { .. }
            | Error::LabelMismatch
            | Error::MissingLevel(_)
            | Error::NotSubmultiplicative { .. }
            | Error::Unbounded { .. }
            | Error::InconsistentFlag(_)
            | Error::GridMismatch(_)
            | Error::ZeroMass
    )
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Validation(v) => {
                writeln!(f, "invalid configuration:")?;
                for s in v {
                    writeln!(f, "  - {s}")?;
                }
                Ok(())
            }
            Self::Library(e) => write!(f, "{e}"),
            Self::Io(s) => write!(f, "{s}"),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        Self::Library(e)
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> RunError + '_ {
    move |e| RunError::Io(format!("{}: {e}", path.display()))
}

/// A CSV result: header plus rows of already formatted cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn grid_table(name: String, g: &GridFunction) -> Result<Table, RunError> {
    let mut buf = Vec::new();
    g.write_csv(&mut buf)?;
    let mut rd = csv::Reader::from_reader(buf.as_slice());
    let header: Vec<String> = rd
        .headers()
        .map_err(|e| RunError::Io(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = rd
        .records()
        .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()
        .map_err(|e| RunError::Io(e.to_string()))?;
    Ok(Table { name, header, rows })
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub grid: Option<usize>,
    pub threads: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputEntry>,
    pub summary: serde_json::Value,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub manifest_path: PathBuf,
    pub manifest: Manifest,
    pub tables: Vec<Table>,
}

/// Results of one experiment before anything is written.
#[derive(Clone, Debug)]
pub struct Computed {
    pub tables: Vec<Table>,
    pub summary: serde_json::Value,
}

/// Loads, validates, computes and writes; the manifest goes last.
pub fn run(config_path: &Path, ov: &Overrides) -> Result<RunOutcome, RunError> {
    let loaded = crate::config::load(config_path).map_err(RunError::Validation)?;
    let violations = loaded.config.violations(&loaded.base_dir);
    if !violations.is_empty() {
        return Err(RunError::Validation(violations));
    }
    if let Some(n) = ov.threads {
        // the global pool can only be set once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let start = Instant::now();
    let computed = compute(&loaded, ov)?;
    let wall = start.elapsed().as_secs_f64();

    let cfg = &loaded.config;
    let out_dir = ov
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(|d| loaded.resolve(d)))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
    let prefix = cfg
        .output
        .prefix
        .clone()
        .unwrap_or_else(|| cfg.experiment.name().to_string());

    let mut outputs = Vec::new();
    for t in &computed.tables {
        let file = format!("{prefix}{}.csv", t.name);
        let path = out_dir.join(&file);
        let body = t.to_csv();
        std::fs::write(&path, &body).map_err(io_err(&path))?;
        outputs.push(OutputEntry {
            file,
            sha256: hex::encode(Sha256::digest(&body)),
            rows: t.rows.len(),
        });
    }
    let manifest = Manifest {
        experiment: cfg.experiment.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: hex::encode(Sha256::digest(&loaded.raw)),
        seed: ov.seed.unwrap_or(cfg.params.seed),
        grid: ov.grid.or(cfg.params.grid),
        threads: rayon::current_num_threads(),
        wall_time_s: wall,
        outputs,
        summary: computed.summary,
    };
    let manifest_path = out_dir.join(format!("{prefix}.manifest.json"));
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| RunError::Io(e.to_string()))?;
    std::fs::write(&manifest_path, text).map_err(io_err(&manifest_path))?;
    Ok(RunOutcome {
        manifest_path,
        manifest,
        tables: computed.tables,
    })
}

fn model_grid(
    dim: usize,
    cfg: &ExperimentConfig,
    ov: &Overrides,
    half_width: Option<f64>,
) -> ModelGrid {
    let mut g = ModelGrid::default_for(dim);
    if let Some(n) = ov.grid.or(cfg.params.grid) {
        g.box_nodes = n;
        g.polytope_nodes = n;
    }
    g.half_width = half_width;
    g
}

fn build_models(
    loaded: &LoadedConfig,
    p: &LatticePolytope,
    ov: &Overrides,
) -> Result<Vec<ToricBundleModel>, RunError> {
    let cfg = &loaded.config;
    cfg.models
        .iter()
        .map(|m| {
            let grid = model_grid(p.dim(), cfg, ov, m.half_width);
            if let Some(src) = &m.potential {
                let phi =
                    Potential::parse(src).map_err(|e| RunError::Validation(vec![e.to_string()]))?;
                return Ok(ToricBundleModel::from_potential_fn(
                    p.clone(),
                    |x| phi.eval(x),
                    grid,
                )?);
            }
            let path = loaded.resolve(m.grid_file.as_deref().expect("validated"));
            let f = File::open(&path).map_err(io_err(&path))?;
            let phi = GridFunction::read_csv(BufReader::new(f), Domain::Box)?;
            Ok(ToricBundleModel::from_potential(
                p.clone(),
                phi,
                grid.polytope_nodes,
            )?)
        })
        .collect()
}

fn density(name: DensityName) -> Density {
    match name {
        DensityName::Lebesgue => Density::Lebesgue,
        DensityName::FubiniStudy => Density::FubiniStudy,
    }
}

fn measure_table(name: &str, mu: &Measure1D) -> Table {
    let mut t = Table::new(name, &["lo", "hi", "mass"]);
    for (x, w) in &mu.atoms {
        t.push(vec![num(*x), num(*x), num(*w)]);
    }
    if let Some(h) = &mu.density {
        for (lo, hi, w) in h.rows() {
            t.push(vec![num(lo), num(hi), num(w)]);
        }
    }
    t
}

/// Runs the experiment of a loaded, valid config without writing files.
pub fn compute(loaded: &LoadedConfig, ov: &Overrides) -> Result<Computed, RunError> {
    let cfg = &loaded.config;
    let p = cfg.polytope.build()?;
    let models = build_models(loaded, &p, ov)?;
    let prm = &cfg.params;
    let mut tables = Vec::new();
    let mut summary = json!({});

    match cfg.experiment {
        ExperimentKind::Isometry => {
            let rows = isometry_experiment(&models[0], &models[1], prm.p, &prm.k)?;
            let mut t = Table::new("", &["k", "value", "limit", "gap"]);
            for r in &rows {
                t.push(vec![
                    r.k.to_string(),
                    num(r.value),
                    num(r.limit),
                    num(r.gap),
                ]);
            }
            tables.push(t);
            if let Some(fit) = fit_rate(&rows) {
                summary =
                    json!({ "fit": { "a": fit.a, "b": fit.b, "rms_residual": fit.rms_residual } });
            }
        }
        ExperimentKind::Geodesic => {
            let ts = if prm.t.is_empty() {
                vec![0.25, 0.5, 0.75]
            } else {
                prm.t.clone()
            };
            let mut t = Table::new("", &["t", "k", "deviation"]);
            for &tt in &ts {
                for &k in &prm.k {
                    let d = geodesic_quantization_experiment(
                        &models[0],
                        &models[1],
                        k,
                        tt,
                        &density(prm.density),
                    )?;
                    t.push(vec![num(tt), k.to_string(), num(d)]);
                }
            }
            tables.push(t);
        }
        ExperimentKind::BernsteinMarkov => {
            let mut t = Table::new("", &["k", "gap"]);
            for &k in &prm.k {
                t.push(vec![
                    k.to_string(),
                    num(bernstein_markov_gap(&models[0], k, &density(prm.density))?),
                ]);
            }
            tables.push(t);
        }
        ExperimentKind::FiltrationSpectrum => {
            let f = cfg
                .parse_filtration()
                .map_err(|e| RunError::Validation(vec![e]))?;
            let rows = filtration_spectrum_experiment(&models[0], &f, &prm.k, prm.moments)?;
            let mut t = Table::new("", &["k", "moment", "value", "limit", "gap"]);
            for r in &rows {
                for j in 0..r.moments.len() {
                    t.push(vec![
                        r.k.to_string(),
                        (j + 1).to_string(),
                        num(r.moments[j]),
                        num(r.limit[j]),
                        num(r.gaps[j]),
                    ]);
                }
            }
            tables.push(t);
            let mu = spectral_measure(&models[0], &f, prm.bins)?;
            tables.push(measure_table("_spectral", &mu));
            let ct = concave_transform(&models[0], &f)?;
            summary = json!({ "spectral_mass": mu.total_mass(), "converged": ct.converged });
        }
        ExperimentKind::Envelope => {
            let m = &models[0];
            let env = polytope_envelope(m.potential(), &p, m.symplectic().grid().axis(0).len())?;
            tables.push(grid_table(String::new(), &env)?);
            let me = ToricBundleModel::from_potential(
                p.clone(),
                env,
                m.symplectic().grid().axis(0).len(),
            )?;
            let ks = if prm.k.is_empty() {
                vec![1, 2, 4, 8]
            } else {
                prm.k.clone()
            };
            let mut t = Table::new("_weights", &["k", "max_weight_diff"]);
            let mut worst = 0.0f64;
            for &k in &ks {
                let (a, b) = (ban_norm(m, k)?, ban_norm(&me, k)?);
                let d = a
                    .log_weights()
                    .iter()
                    .zip(b.log_weights())
                    .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
                worst = worst.max(d);
                t.push(vec![k.to_string(), num(d)]);
            }
            tables.push(t);
            summary = json!({ "max_weight_diff": worst });
        }
        ExperimentKind::SubringDensity => {
            let rep = density_report(&p, &prm.m, &prm.k, &prm.eps)?;
            let mut t = Table::new("", &["m", "k", "dim_subring", "dim_full", "ratio"]);
            for r in &rep.rows {
                t.push(vec![
                    r.m.to_string(),
                    r.k.to_string(),
                    r.dim_subring.to_string(),
                    r.dim_full.to_string(),
                    num(r.ratio),
                ]);
            }
            tables.push(t);
            let th: Vec<_> = rep
                .thresholds
                .iter()
                .map(|(e, m0)| json!({ "eps": e, "m0": m0 }))
                .collect();
            summary = json!({ "thresholds": th });
        }
        ExperimentKind::Char => {
            let m = &models[0];
            let fam = match prm.family {
                FamilyName::Ban => ban_family(m, &prm.k)?,
                FamilyName::Gauge => perturbed_family(m, &prm.k, prm.gauge, 0.0)?,
                FamilyName::Bump => perturbed_family(m, &prm.k, 0.0, prm.bump)?,
            };
            let res = char_experiment(
                &fam,
                &p,
                CharOptions {
                    p: prm.p,
                    ..Default::default()
                },
            )?;
            let mut t = Table::new("", &["k", "value"]);
            for r in &res.rows {
                t.push(vec![r.k.to_string(), num(r.value)]);
            }
            tables.push(t);
            tables.push(grid_table("_limit".into(), &res.limit)?);
        }
    }
    Ok(Computed { tables, summary })
}

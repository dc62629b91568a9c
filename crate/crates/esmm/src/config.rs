//! Run configuration: TOML parsing, command-line overrides, preset defaults
//! and validation.
//!
//! A configuration file has the sections `[problem]`, `[scheme]`, `[mesh]`,
//! `[monitor]` and `[output]`. Only `problem.id`, `scheme.kind` and
//! `scheme.order` are mandatory; everything else falls back to the preset.
//! The resolved [`SimulationConfig`] serialises to a file that parses back to
//! the same configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adapt::{MonitorParams, MonitorVariable};
use crate::dissipation::ScalingKind;
use crate::error::{Error, Result};
use crate::problems::{MeshMode, ProblemId, ProblemSetup};
use crate::state::{SignalBound, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Ec,
    Es,
}

impl SchemeKind {
    /// Half-order p for a nominal order.
    pub fn half_order(self, order: usize) -> Result<usize> {
        match (self, order) {
            (SchemeKind::Ec, 2 | 4 | 6) => Ok(order / 2),
            (SchemeKind::Es, 1 | 3 | 5) => Ok(order.div_ceil(2)),
            (SchemeKind::Ec, _) => Err(Error::Config(format!("EC order must be 2, 4 or 6 (got {order})"))),
            (SchemeKind::Es, _) => Err(Error::Config(format!("ES order must be 1, 3 or 5 (got {order})"))),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ec" => Some(SchemeKind::Ec),
            "es" => Some(SchemeKind::Es),
            _ => None,
        }
    }
}

/// Either one resolution (scaled to the preset's aspect ratio) or one per direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Resolution {
    Uniform(usize),
    PerDirection(Vec<usize>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldFormat {
    Vtk,
    Esmm1,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutLineSpec {
    pub name: String,
    pub from: Vec3,
    pub to: Vec3,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    201
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchlierenSpec {
    pub variable: MonitorVariable,
    pub k: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputPlan {
    /// Destination directory; nothing is written when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// Extra dump times besides the final one.
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default)]
    pub formats: Vec<FieldFormat>,
    #[serde(default)]
    pub cut_lines: Vec<CutLineSpec>,
    #[serde(default)]
    pub schlieren: Vec<SchlierenSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    id: ProblemId,
    n: Option<Resolution>,
    t_final: Option<f64>,
    gamma: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScheme {
    kind: SchemeKind,
    order: usize,
    cfl: Option<f64>,
    dt_power: Option<f64>,
    #[serde(default)]
    signal_bound: SignalBound,
    #[serde(default)]
    scaling: ScalingKind,
    max_steps: Option<usize>,
}

#[derive(Clone, Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    mode: Option<MeshMode>,
    adapt_stride: Option<usize>,
    initial_adapt: Option<usize>,
}

#[derive(Clone, Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawMonitor {
    variable: Option<MonitorVariable>,
    alpha: Option<f64>,
    laplacian_weight: Option<f64>,
    passes: Option<usize>,
    iterations: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: RawProblem,
    scheme: RawScheme,
    #[serde(default)]
    mesh: RawMesh,
    #[serde(default)]
    monitor: RawMonitor,
    #[serde(default)]
    output: OutputPlan,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub id: ProblemId,
    pub n: Vec<usize>,
    pub t_final: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub order: usize,
    pub cfl: f64,
    /// When set, dt is also capped by `cfl * dξ^dt_power`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_power: Option<f64>,
    pub signal_bound: SignalBound,
    pub scaling: ScalingKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub mode: MeshMode,
    /// Adapt the mesh every `adapt_stride` steps.
    pub adapt_stride: usize,
    /// Redistribution passes on the initial data before the first step
    /// (adaptive mode only).
    #[serde(default)]
    pub initial_adapt: usize,
}

/// Fully resolved configuration of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub problem: ProblemConfig,
    pub scheme: SchemeConfig,
    pub mesh: MeshConfig,
    pub monitor: MonitorParams,
    pub output: OutputPlan,
}

impl SimulationConfig {
    /// Preset defaults for a problem with the given scheme.
    pub fn preset(id: ProblemId, kind: SchemeKind, order: usize) -> Result<Self> {
        let raw = RawConfig {
            problem: RawProblem { id, n: None, t_final: None, gamma: None },
            scheme: RawScheme {
                kind,
                order,
                cfl: None,
                dt_power: None,
                signal_bound: SignalBound::default(),
                scaling: ScalingKind::default(),
                max_steps: None,
            },
            mesh: RawMesh::default(),
            monitor: RawMonitor::default(),
            output: OutputPlan::default(),
        };
        let cfg = resolve(raw)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(src: &str) -> Result<Self> {
        Self::from_toml_str_with_overrides(src, &[])
    }

    /// Parse a document after applying `key.path=value` overrides.
    pub fn from_toml_str_with_overrides(src: &str, overrides: &[String]) -> Result<Self> {
        let raw: RawConfig = if overrides.is_empty() {
            toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?
        } else {
            let mut doc: toml::Table = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
            for o in overrides {
                apply_override(&mut doc, o)?;
            }
            let text = toml::to_string(&doc).map_err(|e| Error::Config(e.to_string()))?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("after overrides: {e}")))?
        };
        let cfg = resolve(raw)?;
        cfg.validate().map_err(|e| match e {
            Error::Config(msg) => Error::Config(with_line_hint(src, &msg)),
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path, overrides: &[String]) -> Result<Self> {
        let src = std::fs::read_to_string(path)?;
        Self::from_toml_str_with_overrides(&src, overrides).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    pub fn setup(&self) -> ProblemSetup {
        let mut s = ProblemSetup::preset(self.problem.id);
        s.gamma = self.problem.gamma;
        s.t_final = self.problem.t_final;
        s
    }

    /// Half-order p of the flux stencils.
    pub fn half_order(&self) -> usize {
        self.scheme.kind.half_order(self.scheme.order).expect("validated")
    }

    pub fn resolution(&self) -> [usize; 3] {
        let mut n = [1; 3];
        n[..self.problem.n.len()].copy_from_slice(&self.problem.n);
        n
    }

    pub fn validate(&self) -> Result<()> {
        let setup = ProblemSetup::preset(self.problem.id);
        self.scheme.kind.half_order(self.scheme.order)?;
        let s = &self.scheme;
        if !(s.cfl > 0.0 && s.cfl <= 1.0) {
            return Err(Error::Config(format!("scheme.cfl must lie in (0, 1] (got {})", s.cfl)));
        }
        if let Some(pw) = s.dt_power {
            if !(pw > 0.0 && pw.is_finite()) {
                return Err(Error::Config(format!("scheme.dt_power must be positive (got {pw})")));
            }
        }
        if s.max_steps == Some(0) {
            return Err(Error::Config("scheme.max_steps must be positive".into()));
        }
        let p = &self.problem;
        if p.n.len() != setup.dim {
            return Err(Error::Config(format!("problem.n needs {} entries for {}", setup.dim, p.id.name())));
        }
        if let Some(&bad) = p.n.iter().find(|&&n| n < 6) {
            return Err(Error::Config(format!("problem.n entries must be at least 6 (got {bad})")));
        }
        if !(p.t_final > 0.0 && p.t_final.is_finite()) {
            return Err(Error::Config(format!("problem.t_final must be positive (got {})", p.t_final)));
        }
        if !(p.gamma > 1.0 && p.gamma <= 2.0) {
            return Err(Error::Config(format!("problem.gamma must lie in (1, 2] (got {})", p.gamma)));
        }
        if self.mesh.adapt_stride == 0 {
            return Err(Error::Config("mesh.adapt_stride must be positive".into()));
        }
        if self.mesh.mode == MeshMode::Prescribed && setup.motion.is_none() {
            return Err(Error::Config(format!("mesh.mode = \"prescribed\" has no motion for {}", p.id.name())));
        }
        let m = &self.monitor;
        if !(m.alpha >= 0.0 && m.laplacian_weight >= 0.0) {
            return Err(Error::Config("monitor.alpha and monitor.laplacian_weight must be non-negative".into()));
        }
        let times = &self.output.times;
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("output.times must be strictly increasing".into()));
        }
        if times.iter().any(|&t| !(0.0..=p.t_final).contains(&t)) {
            return Err(Error::Config(format!("output.times must lie in [0, {}]", p.t_final)));
        }
        for c in &self.output.cut_lines {
            if c.samples < 2 {
                return Err(Error::Config(format!("cut line {} needs at least 2 samples", c.name)));
            }
        }
        for s in &self.output.schlieren {
            if !(s.k > 0.0) {
                return Err(Error::Config("schlieren k must be positive".into()));
            }
        }
        Ok(())
    }
}

fn resolve(raw: RawConfig) -> Result<SimulationConfig> {
    let setup = ProblemSetup::preset(raw.problem.id);
    let n = match raw.problem.n {
        None => setup.default_n[..setup.dim].to_vec(),
        Some(Resolution::PerDirection(v)) => v,
        Some(Resolution::Uniform(n)) => (0..setup.dim)
            .map(|k| ((n * setup.default_n[k]) as f64 / setup.default_n[0] as f64).round() as usize)
            .collect(),
    };
    Ok(SimulationConfig {
        problem: ProblemConfig {
            id: raw.problem.id,
            n,
            t_final: raw.problem.t_final.unwrap_or(setup.t_final),
            gamma: raw.problem.gamma.unwrap_or(setup.gamma),
        },
        scheme: SchemeConfig {
            kind: raw.scheme.kind,
            order: raw.scheme.order,
            cfl: raw.scheme.cfl.unwrap_or(setup.cfl),
            dt_power: raw.scheme.dt_power,
            signal_bound: raw.scheme.signal_bound,
            scaling: raw.scheme.scaling,
            max_steps: raw.scheme.max_steps,
        },
        mesh: MeshConfig {
            mode: raw.mesh.mode.unwrap_or(setup.default_mesh),
            adapt_stride: raw.mesh.adapt_stride.unwrap_or(1),
            initial_adapt: raw.mesh.initial_adapt.unwrap_or(0),
        },
        monitor: MonitorParams {
            variable: raw.monitor.variable.unwrap_or(setup.monitor.variable),
            alpha: raw.monitor.alpha.unwrap_or(setup.monitor.alpha),
            laplacian_weight: raw.monitor.laplacian_weight.unwrap_or(setup.monitor.laplacian_weight),
            passes: raw.monitor.passes.unwrap_or(setup.monitor.passes),
            iterations: raw.monitor.iterations.unwrap_or(setup.monitor.iterations),
        },
        output: raw.output,
    })
}

/// Set `a.b.c = value` in a TOML table, creating intermediate tables.
pub fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, val) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{spec}' is not of the form key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override '{spec}' has an empty key segment")));
    }
    let val = val.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {val}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(val.to_string()),
    };
    let mut table = doc;
    for seg in &path[..path.len() - 1] {
        let entry = table.entry(seg.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override '{spec}': '{seg}' is not a table")))?;
    }
    table.insert(path[path.len() - 1].to_string(), value);
    Ok(())
}

/// Prefix a validation message with the line of the offending key, if found.
fn with_line_hint(src: &str, msg: &str) -> String {
    let key = msg.split_whitespace().next().unwrap_or("");
    let Some((section, field)) = key.split_once('.') else {
        return msg.to_string();
    };
    let mut current = "";
    for (ln, line) in src.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim();
        } else if current == section && t.split('=').next().map(str::trim) == Some(field) {
            return format!("line {}: {msg}", ln + 1);
        }
    }
    msg.to_string()
}

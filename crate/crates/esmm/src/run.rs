//! Whole-run drivers: a configured simulation with its outputs, and the
//! grid-refinement study on the vortex problems.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{FieldFormat, SchemeKind, SimulationConfig};
use crate::error::{Error, Result};
use crate::io::{self, CutLine, FieldDump};
use crate::problems::{MeshMode, ProblemId};
use crate::solver::{Solver, StepDiagnostics};

/// Everything a run produces before it is written to disk.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub config: SimulationConfig,
    pub series: Vec<StepDiagnostics>,
    /// Snapshots at the requested output times, the final state last.
    pub snapshots: Vec<FieldDump>,
    /// Cut-line name, snapshot index and samples.
    pub cuts: Vec<(String, usize, CutLine)>,
}

impl RunArtifacts {
    pub fn final_snapshot(&self) -> &FieldDump {
        self.snapshots.last().expect("a run always records its final state")
    }
}

fn snapshot(s: &Solver) -> FieldDump {
    let mut d = FieldDump::from_solver(s);
    for spec in &s.cfg.output.schlieren {
        let sigma: Vec<f64> = s.interior().iter().map(|&f| spec.variable.eval(&s.prim[f])).collect();
        let img = io::schlieren(&d, &sigma, spec.k);
        let name = format!("schlieren_{}", serde_plain_name(&spec.variable));
        d.fields.push((name, img));
    }
    d
}

fn serde_plain_name<T: Serialize>(v: &T) -> String {
    toml::Value::try_from(v).ok().and_then(|t| t.as_str().map(str::to_string)).unwrap_or_default()
}

/// Run the configured problem to its final time, collecting snapshots at the
/// output times. When the plan names a directory, a failed run leaves a
/// `failure.esmm` dump and the time series there before returning the error.
pub fn run_problem(cfg: &SimulationConfig) -> Result<RunArtifacts> {
    let mut s = Solver::new(cfg.clone())?;
    let mut stops: Vec<f64> = cfg.output.times.iter().copied().filter(|&t| t > 0.0 && t < cfg.problem.t_final).collect();
    stops.push(cfg.problem.t_final);
    let mut snapshots = Vec::new();
    if cfg.output.times.contains(&0.0) {
        snapshots.push(snapshot(&s));
    }
    for t in stops {
        if let Err(e) = s.advance_to(t, |_| {}) {
            if let Some(dir) = &cfg.output.dir {
                let dir = Path::new(dir);
                std::fs::create_dir_all(dir)?;
                io::write_esmm1(&dir.join("failure.esmm"), &FieldDump::from_solver(&s))?;
                io::write_time_series(&dir.join("series.csv"), &s.series)?;
                log::error!("run failed at t = {}; state dumped to {}", s.t, dir.display());
            }
            return Err(e);
        }
        snapshots.push(snapshot(&s));
    }
    let mut cuts = Vec::new();
    for spec in &cfg.output.cut_lines {
        for (k, snap) in snapshots.iter().enumerate() {
            cuts.push((spec.name.clone(), k, io::cut_line(snap, spec.from, spec.to, spec.samples)));
        }
    }
    Ok(RunArtifacts { config: cfg.clone(), series: std::mem::take(&mut s.series), snapshots, cuts })
}

/// Write a run's outputs into `dir`; returns the files written.
///
/// Always writes the effective configuration and the time series. Snapshots
/// are written in every requested format, and each cut line as its own CSV.
pub fn write_outputs(a: &RunArtifacts, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let cfg_path = dir.join("config.toml");
    std::fs::write(&cfg_path, a.config.to_toml())?;
    files.push(cfg_path);
    let series = dir.join("series.csv");
    io::write_time_series(&series, &a.series)?;
    files.push(series);
    for (k, snap) in a.snapshots.iter().enumerate() {
        for fmt in &a.config.output.formats {
            let path = match fmt {
                FieldFormat::Vtk => dir.join(format!("fields_{k:03}.vtk")),
                FieldFormat::Esmm1 => dir.join(format!("fields_{k:03}.esmm")),
            };
            match fmt {
                FieldFormat::Vtk => io::write_vtk(&path, snap)?,
                FieldFormat::Esmm1 => io::write_esmm1(&path, snap)?,
            }
            files.push(path);
        }
    }
    for (name, k, cut) in &a.cuts {
        let path = dir.join(format!("cut_{name}_{k:03}.csv"));
        cut.write_csv(&path)?;
        files.push(path);
    }
    Ok(files)
}

/// One row of a refinement table. Orders compare with the previous row.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L1_order")]
    pub l1_order: Option<f64>,
    #[serde(rename = "Linf")]
    pub linf: f64,
    #[serde(rename = "Linf_order")]
    pub linf_order: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slopes of −log(error) against log(N).
    pub l1_fit: Option<f64>,
    pub linf_fit: Option<f64>,
    /// Final-time entropy drift |S(t) − S(0)| of each run.
    pub entropy_drift: Vec<f64>,
    /// Time series of each run, in row order.
    pub series: Vec<Vec<StepDiagnostics>>,
}

impl ConvergenceTable {
    pub fn from_errors(ns: &[usize], errors: &[(f64, f64)]) -> Self {
        let mut rows: Vec<ConvergenceRow> = Vec::new();
        for (i, (&n, &(l1, linf))) in ns.iter().zip(errors).enumerate() {
            let order = |e: f64, prev: f64| (prev / e).ln() / (n as f64 / ns[i - 1] as f64).ln();
            rows.push(ConvergenceRow {
                n,
                l1,
                l1_order: (i > 0).then(|| order(l1, errors[i - 1].0)),
                linf,
                linf_order: (i > 0).then(|| order(linf, errors[i - 1].1)),
            });
        }
        let fit = |pick: fn(&ConvergenceRow) -> f64| {
            let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((r.n as f64).ln(), pick(r).ln())).collect();
            least_squares_slope(&pts).map(|s| -s)
        };
        ConvergenceTable {
            l1_fit: fit(|r| r.l1),
            linf_fit: fit(|r| r.linf),
            rows,
            entropy_drift: Vec::new(),
            series: Vec::new(),
        }
    }

    /// Order of the last pair of rows.
    pub fn finest_l1_order(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.l1_order)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        io::write_csv(path, &self.rows)
    }
}

fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Configuration used by [`convergence_study`] at resolution `n` (the
/// first direction; the others follow the preset aspect ratio).
///
/// EC runs use the prescribed mesh motion with `dt ∝ dξ²`; ES runs use the
/// adaptive mesh with `dt ∝ dξ^{5/3}`. Both keep the time error below the
/// spatial one at the usual resolutions.
pub fn convergence_config(problem: ProblemId, kind: SchemeKind, order: usize, n: usize) -> Result<SimulationConfig> {
    if !matches!(problem, ProblemId::Vortex2d | ProblemId::Vortex3d) {
        return Err(Error::Config(format!("no exact solution for {}", problem.name())));
    }
    let mut cfg = SimulationConfig::preset(problem, kind, order)?;
    let base = cfg.problem.n[0];
    cfg.problem.n = cfg.problem.n.iter().map(|&m| (m * n + base / 2) / base).collect();
    match kind {
        SchemeKind::Ec => {
            cfg.mesh.mode = MeshMode::Prescribed;
            cfg.scheme.dt_power = Some(2.0);
        }
        SchemeKind::Es => {
            cfg.mesh.mode = MeshMode::Adaptive;
            cfg.scheme.dt_power = Some(5.0 / 3.0);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Run the vortex at every resolution in `ns` and tabulate density errors
/// against the exact solution.
pub fn convergence_study(problem: ProblemId, kind: SchemeKind, order: usize, ns: &[usize]) -> Result<ConvergenceTable> {
    let mut errors = Vec::new();
    let mut drift = Vec::new();
    let mut series = Vec::new();
    for &n in ns {
        let cfg = convergence_config(problem, kind, order, n)?;
        let mut s = Solver::new(cfg.clone())?;
        s.advance_to(cfg.problem.t_final, |_| {})?;
        let e = s.density_errors().expect("vortex problems have exact solutions");
        log::info!("{} {:?} O{} N={}: L1 {:e} Linf {:e}", problem.name(), kind, order, n, e.0, e.1);
        errors.push(e);
        let s0 = s.series[0].entropy;
        drift.push((s.series.last().expect("non-empty").entropy - s0).abs());
        series.push(std::mem::take(&mut s.series));
    }
    let mut t = ConvergenceTable::from_errors(ns, &errors);
    t.entropy_drift = drift;
    t.series = series;
    Ok(t)
}

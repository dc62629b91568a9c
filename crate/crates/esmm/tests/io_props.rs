use esmm::adapt::MonitorVariable;
use esmm::config::{CutLineSpec, FieldFormat, SchemeKind, SchlierenSpec, SimulationConfig};
use esmm::io::*;
use esmm::problems::ProblemId;
use esmm::run::{run_problem, write_outputs};
use esmm::solver::Solver;
use esmm::state::Vec3;

/// Structured 2D dump on a smoothly distorted unit square.
fn distorted_dump(n: usize, field: impl Fn(Vec3) -> f64) -> FieldDump {
    let mut xs = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let (a, b) = (i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64);
            let s = (std::f64::consts::PI * a).sin() * (std::f64::consts::PI * b).sin();
            xs.push([a + 0.03 * s, b - 0.02 * s, 0.0]);
        }
    }
    let mut d = FieldDump { dim: 2, n: [n, n, 1], time: 0.25, fields: Vec::new() };
    for c in 0..3 {
        d.fields.push((format!("x{}", c + 1), xs.iter().map(|x| x[c]).collect()));
    }
    d.fields.push(("f".into(), xs.iter().map(|&x| field(x)).collect()));
    d
}

#[test]
fn constant_state_dump_roundtrips_bitwise() {
    let cfg = SimulationConfig::preset(ProblemId::Freestream3d, SchemeKind::Ec, 4).unwrap();
    let s = Solver::new(cfg).unwrap();
    let d = FieldDump::from_solver(&s);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.esmm");
    write_esmm1(&path, &d).unwrap();
    let back = read_esmm1(&path).unwrap();
    assert_eq!(back.dim, 3);
    assert_eq!(back.n, d.n);
    assert_eq!(back.time.to_bits(), d.time.to_bits());
    assert_eq!(back.fields.len(), d.fields.len());
    for ((na, va), (nb, vb)) in d.fields.iter().zip(&back.fields) {
        assert_eq!(na, nb);
        assert!(va.iter().zip(vb).all(|(a, b)| a.to_bits() == b.to_bits()), "{na}");
    }
    let names: Vec<&str> = d.fields.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["x1", "x2", "x3", "rho", "v1", "v2", "v3", "p", "B1", "B2", "B3", "J", "omega"]);
}

#[test]
fn esmm1_header_layout() {
    let d = FieldDump { dim: 1, n: [2, 1, 1], time: 1.5, fields: vec![("ab".into(), vec![1.0, -2.0])] };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.esmm");
    write_esmm1(&path, &d).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..5], b"ESMM1");
    assert_eq!(u32::from_le_bytes(bytes[5..9].try_into().unwrap()), 1);
    assert_eq!(u64::from_le_bytes(bytes[9..17].try_into().unwrap()), 2);
    assert_eq!(f64::from_le_bytes(bytes[33..41].try_into().unwrap()), 1.5);
    assert_eq!(u32::from_le_bytes(bytes[41..45].try_into().unwrap()), 1);
    assert_eq!(&bytes[49..51], b"ab");
    assert_eq!(f64::from_le_bytes(bytes[59..67].try_into().unwrap()), -2.0);
    assert_eq!(bytes.len(), 67);

    std::fs::write(&path, &bytes[..60]).unwrap();
    assert!(read_esmm1(&path).is_err());
    std::fs::write(&path, b"NOPE!").unwrap();
    assert!(read_esmm1(&path).is_err());
}

#[test]
fn vtk_has_structured_grid_with_full_precision() {
    let d = distorted_dump(5, |x| x[0].sin() + 1.0 / 3.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.vtk");
    write_vtk(&path, &d).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# vtk DataFile Version 3.0");
    assert_eq!(lines[3], "DATASET STRUCTURED_GRID");
    assert_eq!(lines[4], "DIMENSIONS 5 5 1");
    assert_eq!(lines[5], "POINTS 25 double");
    let first: Vec<f64> = lines[6].split(' ').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first, vec![d.field("x1").unwrap()[0], d.field("x2").unwrap()[0], 0.0]);
    let at = lines.iter().position(|l| *l == "SCALARS f double 1").unwrap();
    for (k, v) in d.field("f").unwrap().iter().enumerate() {
        assert_eq!(lines[at + 2 + k].parse::<f64>().unwrap(), *v);
    }
}

#[test]
fn vtk_groups_vector_triples() {
    let cfg = SimulationConfig::preset(ProblemId::Freestream2d, SchemeKind::Ec, 2).unwrap();
    let s = Solver::new(cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.vtk");
    write_vtk(&path, &FieldDump::from_solver(&s)).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    for tag in ["VECTORS v double", "VECTORS B double", "SCALARS rho double 1", "SCALARS p double 1", "SCALARS J double 1", "SCALARS omega double 1"] {
        assert!(text.contains(tag), "{tag}");
    }
    assert!(!text.contains("SCALARS v1"));
}

#[test]
fn schlieren_of_constant_field_is_one() {
    let d = distorted_dump(9, |_| 2.0);
    let img = schlieren(&d, d.field("f").unwrap(), 15.0);
    assert!(img.iter().all(|&v| v == 1.0));
}

#[test]
fn schlieren_darkens_steepest_gradient() {
    let d = distorted_dump(21, |x| (8.0 * (x[0] - 0.5)).tanh());
    let f = d.field("f").unwrap().to_vec();
    let img = schlieren(&d, &f, 10.0);
    let (imin, vmin) = img.iter().enumerate().fold((0, 2.0), |a, (i, &v)| if v < a.1 { (i, v) } else { a });
    assert!((vmin - (-10.0f64).exp()).abs() < 1e-12);
    assert!((d.coords(imin)[0] - 0.5).abs() < 0.1);
    assert!(img.iter().all(|&v| v > 0.0 && v <= 1.0));
}

#[test]
fn physical_gradient_of_linear_field_is_exact() {
    let d = distorted_dump(11, |x| 3.0 * x[0] - 2.0 * x[1]);
    let g = physical_gradient(&d, d.field("f").unwrap());
    for v in g {
        assert!((v[0] - 3.0).abs() < 1e-10 && (v[1] + 2.0).abs() < 1e-10, "{v:?}");
    }
}

#[test]
fn cut_line_reproduces_linear_field() {
    let d = distorted_dump(12, |x| 1.0 + 2.0 * x[0] + 0.5 * x[1]);
    let cut = cut_line(&d, [0.0, 0.0, 0.0], [1.0, 1.0, 0.0], 101);
    let f = cut.values("f").unwrap();
    for (x, v) in cut.x.iter().zip(f) {
        assert!((v - (1.0 + 2.0 * x[0] + 0.5 * x[1])).abs() < 1e-11, "{x:?} {v}");
    }
}

#[test]
fn diagonal_cut_of_radial_field_is_monotone() {
    let r2 = |x: Vec3| (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
    let d = distorted_dump(40, |x| (-8.0 * r2(x)).exp());
    let cut = cut_line(&d, [0.0, 0.0, 0.0], [1.0, 1.0, 0.0], 201);
    let f = cut.values("f").unwrap();
    assert!(f.iter().all(|v| v.is_finite()));
    for i in 1..f.len() {
        if cut.s[i] < 0.48 {
            assert!(f[i] > f[i - 1], "rise at s = {}", cut.s[i]);
        } else if cut.s[i - 1] > 0.52 {
            assert!(f[i] < f[i - 1], "fall at s = {}", cut.s[i]);
        }
    }
    assert!(overshoot_fraction(f) < 0.01);
}

#[test]
fn cut_outside_mesh_is_nan() {
    let d = distorted_dump(6, |x| x[0]);
    let cut = cut_line(&d, [1.5, 1.5, 0.0], [2.0, 2.0, 0.0], 3);
    assert!(cut.values("f").unwrap().iter().all(|v| v.is_nan()));
}

#[test]
fn overshoot_measure() {
    let step: Vec<f64> = (0..60).map(|i| if i < 30 { 1.0 } else { 0.1 }).collect();
    assert_eq!(overshoot_fraction(&step), 0.0);
    let mut spiky = step.clone();
    spiky[29] = 1.18;
    assert!((overshoot_fraction(&spiky) - 0.18 / 0.9 / (1.08 / 0.9)).abs() < 1e-12);
    // Smooth extrema are clipped only slightly by the median filter when
    // they are resolved by a dozen or more samples.
    let wave: Vec<f64> = (0..400).map(|i| (i as f64 * 0.05).sin()).collect();
    assert!(overshoot_fraction(&wave) < 0.01);
}

#[test]
fn time_series_csv_roundtrips_floats() {
    let cfg = SimulationConfig::preset(ProblemId::Freestream2d, SchemeKind::Ec, 2).unwrap();
    let mut s = Solver::new(cfg).unwrap();
    s.step(1.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ts.csv");
    write_time_series(&path, &s.series).unwrap();
    let mut r = csv::Reader::from_path(&path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(&header[..4], ["step", "time", "dt", "entropy"]);
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    let dt: f64 = rows[1][2].parse().unwrap();
    assert_eq!(dt.to_bits(), s.series[1].dt.to_bits());
    let ent: f64 = rows[1][3].parse().unwrap();
    assert_eq!(ent.to_bits(), s.series[1].entropy.to_bits());
}

fn small_run_config(dir: &std::path::Path) -> SimulationConfig {
    let mut cfg = SimulationConfig::preset(ProblemId::Riemann2, SchemeKind::Es, 3).unwrap();
    cfg.problem.n = vec![16, 16];
    cfg.problem.t_final = 0.02;
    cfg.output.dir = Some(dir.display().to_string());
    cfg.output.times = vec![0.0, 0.01];
    cfg.output.formats = vec![FieldFormat::Vtk, FieldFormat::Esmm1];
    cfg.output.cut_lines = vec![CutLineSpec { name: "diag".into(), from: [0.0; 3], to: [1.0, 1.0, 0.0], samples: 31 }];
    cfg.output.schlieren = vec![SchlierenSpec { variable: MonitorVariable::Rho, k: 20.0 }];
    cfg
}

#[test]
fn run_writes_all_planned_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_run_config(dir.path());
    let a = run_problem(&cfg).unwrap();
    assert_eq!(a.snapshots.len(), 3);
    assert!((a.snapshots[1].time - 0.01).abs() < 1e-15);
    assert!((a.final_snapshot().time - 0.02).abs() < 1e-15);
    assert!(a.final_snapshot().field("schlieren_rho").is_some());
    let files = write_outputs(&a, dir.path()).unwrap();
    let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    for want in ["config.toml", "series.csv", "fields_000.vtk", "fields_002.esmm", "cut_diag_002.csv"] {
        assert!(names.iter().any(|n| n == want), "{want} missing from {names:?}");
    }
    let cut = std::fs::read_to_string(dir.path().join("cut_diag_002.csv")).unwrap();
    assert!(cut.starts_with("s,x1,x2,x3,rho,"));
    assert_eq!(cut.lines().count(), 32);
}

#[test]
fn echoed_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_run_config(dir.path());
    let a = run_problem(&cfg).unwrap();
    write_outputs(&a, dir.path()).unwrap();
    let echoed = SimulationConfig::from_path(&dir.path().join("config.toml"), &[]).unwrap();
    assert_eq!(echoed, cfg);
    let b = run_problem(&echoed).unwrap();
    let (fa, fb) = (a.final_snapshot(), b.final_snapshot());
    assert!(fa.fields.iter().zip(&fb.fields).all(|(x, y)| x.1.iter().zip(&y.1).all(|(u, v)| u.to_bits() == v.to_bits())));
}

#[test]
fn output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_run_config(dir.path());
    cfg.output = Default::default();
    let go = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_problem(&cfg).unwrap())
    };
    let (a, b) = (go(1), go(3));
    let bits = |x: &esmm::run::RunArtifacts| -> Vec<u64> {
        x.final_snapshot().fields.iter().flat_map(|f| f.1.iter().map(|v| v.to_bits())).collect()
    };
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a.series.iter().map(|d| d.entropy.to_bits()).collect::<Vec<_>>(), b.series.iter().map(|d| d.entropy.to_bits()).collect::<Vec<_>>());
}

#[test]
fn failed_run_leaves_a_dump() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_run_config(dir.path());
    cfg.scheme.max_steps = Some(1);
    cfg.output.times.clear();
    assert!(run_problem(&cfg).is_err());
    let dump = read_esmm1(&dir.path().join("failure.esmm")).unwrap();
    assert!(dump.time > 0.0);
    assert!(dir.path().join("series.csv").exists());
}

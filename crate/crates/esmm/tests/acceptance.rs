//! Acceptance suite. Prints one PASS/FAIL line per criterion with the
//! measured quantities; details follow on indented lines.
//!
//! The process exits successfully even when a criterion is red, so that the
//! regular test run stays usable; read the summary line for the verdict.

use std::time::Instant;

use esmm::checks::{ec_contract_worst, freestream_deviation, scl_worst, FREESTREAM_SCHEMES};
use esmm::config::{SchemeKind, SimulationConfig};
use esmm::dissipation::{interface_dissipation, interp5_linear, DissipationParams, ScalingKind};
use esmm::ec_flux::{Metric, NodeVars};
use esmm::io::{cut_line, overshoot_fraction, FieldDump};
use esmm::problems::ProblemId;
use esmm::run::{convergence_study, ConvergenceTable};
use esmm::solver::{Solver, StepDiagnostics};
use esmm::state::{norm2, Physics, PrimState, SignalBound};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

struct Report {
    results: Vec<(String, bool)>,
}

impl Report {
    fn record(&mut self, name: &str, pass: bool, detail: String, secs: f64) {
        println!("{} {name}: {detail} [{secs:.1} s]", if pass { "PASS" } else { "FAIL" });
        self.results.push((name.to_string(), pass));
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t0 = Instant::now();
    let v = f();
    (v, t0.elapsed().as_secs_f64())
}

fn ec_contract(r: &mut Report) {
    let ((rhd, rmhd), secs) = timed(|| (ec_contract_worst(10_000, false, 101), ec_contract_worst(10_000, true, 102)));
    let pass = rhd <= 1e-10 && rmhd <= 1e-10 && secs < 5.0;
    r.record("EC flux contract", pass, format!("worst relative residual RHD {rhd:.2e}, RMHD {rmhd:.2e} (tol 1e-10)"), secs);
}

fn scl(r: &mut Report) {
    let (worst, secs) = timed(|| scl_worst(20, 103).expect("meshes build"));
    r.record("Discrete SCLs", worst <= 1e-12 && secs < 10.0, format!("max residual {worst:.2e} over 20 meshes, p = 1..3 (tol 1e-12)"), secs);
}

fn freestream(r: &mut Report) {
    let (devs, secs) = timed(|| {
        FREESTREAM_SCHEMES
            .iter()
            .map(|&(k, o)| (k, o, freestream_deviation(ProblemId::Freestream2d, k, o, 10).expect("free-stream run")))
            .collect::<Vec<_>>()
    });
    let worst = devs.iter().map(|d| d.2).fold(0.0, f64::max);
    r.record("Free-stream preservation", worst <= 1e-12 && secs < 30.0, format!("max deviation {worst:.2e} after 10 RK3 steps (tol 1e-12)"), secs);
    for (k, o, d) in devs {
        println!("    {k:?} order {o}: {d:.2e}");
    }
}

fn print_table(t: &ConvergenceTable) {
    for row in &t.rows {
        let o = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
        println!("    N = {:3}  L1 {:.3e} ({})  Linf {:.3e} ({})", row.n, row.l1, o(row.l1_order), row.linf, o(row.linf_order));
    }
}

fn vortex_convergence(r: &mut Report) -> (ConvergenceTable, ConvergenceTable) {
    let ((ec, es), secs) = timed(|| {
        let ns = [20, 40, 80];
        (
            convergence_study(ProblemId::Vortex2d, SchemeKind::Ec, 6, &ns).expect("EC vortex runs"),
            convergence_study(ProblemId::Vortex2d, SchemeKind::Es, 5, &ns).expect("ES vortex runs"),
        )
    });
    let (oec, oes) = (ec.finest_l1_order().unwrap(), es.finest_l1_order().unwrap());
    let pass = oec >= 5.5 && oes >= 4.5 && secs <= 900.0;
    r.record(
        "Convergence, 2D RMHD vortex",
        pass,
        format!("finest-pair L1(rho) order EC O6 {oec:.2} (need 5.5), ES O5 {oes:.2} (need 4.5)"),
        secs,
    );
    println!("    EC O6, prescribed motion, dt = CFL dxi^2:");
    print_table(&ec);
    println!("    ES O5, adaptive mesh, dt = CFL dxi^(5/3):");
    print_table(&es);
    (ec, es)
}

fn entropy(r: &mut Report, ec: &ConvergenceTable, es: &ConvergenceTable) {
    // The N = 80 runs of the convergence study are exactly the runs asked for.
    let t0 = Instant::now();
    let ec_series: &[StepDiagnostics] = ec.series.last().unwrap();
    let es_series: &[StepDiagnostics] = es.series.last().unwrap();
    let s0 = ec_series[0].entropy;
    let drift = ec_series.iter().map(|d| (d.entropy - s0).abs()).fold(0.0, f64::max);
    let rise = es_series.windows(2).map(|w| w[1].entropy - w[0].entropy).fold(f64::NEG_INFINITY, f64::max);
    let decay = es_series[0].entropy - es_series.last().unwrap().entropy;
    let pass = drift <= 1e-8 && rise <= 1e-12;
    r.record(
        "Entropy behaviour, 2D vortex N = 80",
        pass,
        format!("EC max |S(t) - S(0)| {drift:.2e} (tol 1e-8); ES largest step increase {rise:.2e} (slack 1e-12), total decay {decay:.2e}"),
        t0.elapsed().as_secs_f64(),
    );
}

fn all_steps_admissible(series: &[StepDiagnostics]) -> bool {
    series.iter().all(|d| d.min_rho > 0.0 && d.min_p > 0.0 && d.max_v < 1.0 && d.min_jacobian > 0.0)
}

fn riemann(r: &mut Report) {
    for id in [ProblemId::Riemann1, ProblemId::Riemann2, ProblemId::Riemann3] {
        let (res, secs) = timed(|| {
            let cfg = SimulationConfig::preset(id, SchemeKind::Es, 5).unwrap();
            let mut s = Solver::new(cfg).unwrap();
            let run = s.advance_to(0.4, |_| {});
            (run, s)
        });
        let (run, s) = res;
        let name = format!("Riemann problem {} (ES O5, N = 100, adaptive)", id.name());
        if let Err(e) = run {
            r.record(&name, false, format!("run failed at t = {}: {e}", s.t), secs);
            continue;
        }
        let dump = FieldDump::from_solver(&s);
        let cut = cut_line(&dump, [0.0, 0.0, 0.0], [1.0, 1.0, 0.0], 201);
        let mut nan_free = true;
        let mut worst: f64 = 0.0;
        for var in ["rho", "p"] {
            let v = cut.values(var).unwrap();
            nan_free &= v.iter().all(|x| x.is_finite());
            worst = worst.max(overshoot_fraction(v));
        }
        let ok = all_steps_admissible(&s.series);
        let min_j = s.series.iter().map(|d| d.min_jacobian).fold(f64::INFINITY, f64::min);
        let min_rho = s.series.iter().map(|d| d.min_rho).fold(f64::INFINITY, f64::min);
        let min_p = s.series.iter().map(|d| d.min_p).fold(f64::INFINITY, f64::min);
        let max_v = s.series.iter().map(|d| d.max_v).fold(0.0, f64::max);
        let pass = ok && nan_free && worst <= 0.1 && secs <= 600.0;
        r.record(
            &name,
            pass,
            format!(
                "{} steps; min rho {min_rho:.3e}, min p {min_p:.3e}, max |v| {max_v:.4}, min J {min_j:.3e}; diagonal cut NaN-free {nan_free}, overshoot {:.1}% (limit 10%)",
                s.steps,
                100.0 * worst
            ),
            secs,
        );
    }
}

fn three_d(r: &mut Report) {
    let t0 = Instant::now();
    let table = convergence_study(ProblemId::Vortex3d, SchemeKind::Ec, 6, &[10, 20]).expect("3D vortex runs");
    let order = table.finest_l1_order().unwrap();
    let fs = FREESTREAM_SCHEMES
        .iter()
        .map(|&(k, o)| freestream_deviation(ProblemId::Freestream3d, k, o, 10).expect("3D free-stream"))
        .fold(0.0, f64::max);
    let mut smoke = Vec::new();
    for (id, n) in [(ProblemId::Sphericalrp3d, 20), (ProblemId::Shockcloud3d, 21), (ProblemId::Shockbubble3d, 33)] {
        let mut cfg = SimulationConfig::preset(id, SchemeKind::Es, 5).unwrap();
        let base = cfg.problem.n[0];
        cfg.problem.n = cfg.problem.n.iter().map(|&m| (m * n + base / 2) / base).collect();
        let dims = cfg.problem.n.clone();
        let mut s = Solver::new(cfg.clone()).unwrap();
        let run = s.advance_to(cfg.problem.t_final, |_| {});
        let green = run.is_ok() && all_steps_admissible(&s.series);
        smoke.push((id, dims, s.steps, green, run.err().map(|e| e.to_string())));
    }
    let secs = t0.elapsed().as_secs_f64();
    let smoke_ok = smoke.iter().all(|s| s.3);
    let pass = order >= 5.0 && fs <= 1e-12 && smoke_ok && secs <= 900.0;
    r.record(
        "3D desk-scale",
        pass,
        format!("vortex EC O6 order {order:.2} on N = 10, 20 (need 5); free-stream max deviation {fs:.2e}; smoke runs green {smoke_ok}"),
        secs,
    );
    print_table(&table);
    for (id, dims, steps, green, err) in smoke {
        println!("    {} {dims:?}: {steps} steps, watchdog green {green}{}", id.name(), err.map_or(String::new(), |e| format!(" ({e})")));
    }
}

fn random_prim(rng: &mut StdRng, magnetized: bool) -> PrimState {
    let rho = 10f64.powf(rng.gen_range(-2.0..1.0));
    let p = 10f64.powf(rng.gen_range(-2.0..1.0));
    let mut v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let s = 0.9 * rng.gen_range(0.0..1.0f64) / norm2(&v).sqrt().max(1e-12);
    v.iter_mut().for_each(|c| *c *= s);
    let b = if magnetized { std::array::from_fn(|_| rng.gen_range(-1.0..1.0)) } else { [0.0; 3] };
    PrimState::new(rho, v, p, b, 5.0 / 3.0)
}

fn weno(r: &mut Report) {
    let ((poly_err, min_sign), secs) = timed(|| {
        let mut rng = StdRng::seed_from_u64(104);
        let mut poly_err = 0.0f64;
        for _ in 0..10_000 {
            let deg = rng.gen_range(0..=4);
            let c: Vec<f64> = (0..=deg).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let h = rng.gen_range(0.01..1.0);
            let x0 = rng.gen_range(-1.0..1.0);
            let poly = |x: f64| c.iter().rev().fold(0.0, |a, k| a * x + k);
            let f: [f64; 5] = std::array::from_fn(|j| poly(x0 + (j as f64 - 2.0) * h));
            let exact = poly(x0 + 0.5 * h);
            poly_err = poly_err.max((interp5_linear(&f) - exact).abs() / exact.abs().max(1.0));
        }
        let mut min_sign = f64::INFINITY;
        for it in 0..100_000 {
            let mag = it % 2 == 1;
            let prims: Vec<PrimState> = (0..6).map(|_| random_prim(&mut rng, mag)).collect();
            let nodes: Vec<NodeVars> = prims.iter().map(NodeVars::from_prim).collect();
            let mets: Vec<Metric> = (0..6)
                .map(|_| [rng.gen_range(-0.5..0.5), rng.gen_range(0.5..1.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)])
                .collect();
            let params = DissipationParams {
                physics: if mag { Physics::Rmhd } else { Physics::Rhd },
                bound: SignalBound::Light,
                scaling: ScalingKind::Cholesky,
                order: if it % 4 < 2 { 5 } else { 3 },
            };
            let d = interface_dissipation(&prims, &nodes, &mets, 2, &params).expect("admissible line");
            min_sign = min_sign.min(d.sign_quantity());
        }
        (poly_err, min_sign)
    });
    let pass = poly_err <= 1e-12 && min_sign >= 0.0 && secs < 5.0;
    r.record(
        "WENO exactness and sign property",
        pass,
        format!("quartic midpoint error {poly_err:.2e} (tol 1e-12); min jump_first.Y.jump_weno {min_sign:.3e} over 1e5 lines"),
        secs,
    );
}

fn main() {
    // Optional arguments select groups by substring, e.g. `-- riemann`.
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |group: &str| filters.is_empty() || filters.iter().any(|f| group.contains(f.as_str()));
    let mut r = Report { results: Vec::new() };
    if wanted("ec_contract") {
        ec_contract(&mut r);
    }
    if wanted("scl") {
        scl(&mut r);
    }
    if wanted("freestream") {
        freestream(&mut r);
    }
    if wanted("weno") {
        weno(&mut r);
    }
    if wanted("vortex_convergence") || wanted("entropy") {
        let (ec, es) = vortex_convergence(&mut r);
        entropy(&mut r, &ec, &es);
    }
    if wanted("three_d") {
        three_d(&mut r);
    }
    if wanted("riemann") {
        riemann(&mut r);
    }
    let passed = r.results.iter().filter(|x| x.1).count();
    println!("acceptance: {passed}/{} criteria passed", r.results.len());
    for (name, ok) in &r.results {
        if !ok {
            println!("    red: {name}");
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use esmm::checks;
use esmm::config::{SchemeKind, SimulationConfig};
use esmm::problems::ProblemId;
use esmm::run::{convergence_study, run_problem, write_outputs};
use esmm::Error;

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_IO: u8 = 1;

#[derive(Parser)]
#[command(name = "esmm", version, about = "Entropy-stable moving-mesh solver for relativistic (magneto)hydrodynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation described by a TOML configuration.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads; falls back to ESMM_THREADS, then to all cores.
        #[arg(long)]
        threads: Option<usize>,
        /// Replace one configuration value, e.g. `problem.n=[200,200]`.
        #[arg(long = "override", value_name = "KEY=VAL")]
        overrides: Vec<String>,
    },
    /// Grid-refinement study on a vortex problem; prints the table as CSV.
    Converge {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        order: usize,
        #[arg(long = "N", value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Write the table here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Quick property checks: EC contract, SCL residual, free-stream.
    Check {
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn exit_code(e: &Error) -> u8 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else if matches!(e, Error::Io(_) | Error::Csv(_) | Error::Format(_)) {
        EXIT_IO
    } else {
        EXIT_NUMERICAL
    }
}

fn init_threads(requested: Option<usize>) -> Result<(), Error> {
    let from_env = || -> Result<Option<usize>, Error> {
        match std::env::var("ESMM_THREADS") {
            Ok(v) => v.trim().parse().map(Some).map_err(|_| Error::Config(format!("ESMM_THREADS={v} is not a thread count"))),
            Err(_) => Ok(None),
        }
    };
    let threads = match requested {
        Some(n) => Some(n),
        None => from_env()?,
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn solve(config: PathBuf, threads: Option<usize>, overrides: Vec<String>) -> Result<(), Error> {
    init_threads(threads)?;
    let cfg = SimulationConfig::from_path(&config, &overrides)?;
    log::info!("running {} to t = {}", cfg.problem.id.name(), cfg.problem.t_final);
    let artifacts = run_problem(&cfg)?;
    let last = artifacts.series.last().expect("at least the initial record");
    println!(
        "{}: {} steps to t = {}, min rho {:e}, min p {:e}, max |v| {}",
        cfg.problem.id.name(),
        last.step,
        last.time,
        last.min_rho,
        last.min_p,
        last.max_v
    );
    if let Some(dir) = &cfg.output.dir {
        let files = write_outputs(&artifacts, std::path::Path::new(dir))?;
        println!("wrote {} files to {dir}", files.len());
    }
    Ok(())
}

fn converge(problem: &str, scheme: &str, order: usize, ns: &[usize], out: Option<PathBuf>, threads: Option<usize>) -> Result<(), Error> {
    init_threads(threads)?;
    let id = ProblemId::parse(problem).ok_or_else(|| Error::Config(format!("unknown problem {problem}")))?;
    let kind = SchemeKind::parse(scheme).ok_or_else(|| Error::Config(format!("unknown scheme {scheme}; expected ec or es")))?;
    kind.half_order(order)?;
    if ns.len() < 2 || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("--N needs at least two increasing resolutions".into()));
    }
    let table = convergence_study(id, kind, order, ns)?;
    match out {
        Some(path) => table.write_csv(&path)?,
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for r in &table.rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
    }
    let fmt = |o: Option<f64>| o.map_or("n/a".to_string(), |v| format!("{v:.3}"));
    eprintln!("least-squares order: L1 {}, Linf {}", fmt(table.l1_fit), fmt(table.linf_fit));
    Ok(())
}

fn check(threads: Option<usize>) -> Result<bool, Error> {
    init_threads(threads)?;
    let mut ok = true;
    for c in checks::fast_suite()? {
        let tag = if c.passed() { "ok  " } else { "FAIL" };
        println!("{tag} {:<32} {:.3e} (tolerance {:.0e})", c.name, c.value, c.tolerance);
        ok &= c.passed();
    }
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { config, threads, overrides } => solve(config, threads, overrides),
        Command::Converge { problem, scheme, order, n, out, threads } => converge(&problem, &scheme, order, &n, out, threads),
        Command::Check { threads } => match check(threads) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(EXIT_NUMERICAL),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

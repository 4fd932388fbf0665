use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sheath::fixpoint::{export_csv, run_fixed_point, write_snapshots, ExportKind, RunConfig, RunStatus};
use sheath::verify::{run_suite, seed_from_env, SUITES};
use sheath::Error;

#[derive(Parser)]
#[command(name = "sheath", version, about = "Free-boundary plasma sheath simulator")]
struct Cli {
    /// Worker threads for per-node and per-slice work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the fixed-point iteration and write snapshots and a report.
    Run {
        config_path: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; defaults to the config's `output`, then `run`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run one invariant battery, or `all`.
    Verify { suite: String },
    /// Emit CSV from a run directory.
    Export {
        run_dir: PathBuf,
        #[arg(long)]
        what: String,
        /// Destination file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn run(
    positional: Option<PathBuf>,
    flag: Option<PathBuf>,
    out: Option<PathBuf>,
    max_iters: Option<usize>,
    tol: Option<f64>,
) -> Result<ExitCode, Error> {
    let path = flag
        .or(positional)
        .ok_or_else(|| Error::Config("no configuration given (use `run <config.json>` or --config)".into()))?;
    let mut cfg = RunConfig::from_path(&path)?;
    if let Some(n) = max_iters {
        cfg.picard_max_iters = n;
    }
    if let Some(t) = tol {
        cfg.picard_tol = t;
    }
    cfg.validate()?;
    let dir = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("run"));
    let outcome = run_fixed_point(cfg)?;
    write_snapshots(&dir, &outcome)?;
    let r = &outcome.report;
    for m in &r.iterations {
        println!(
            "iter {:>3}  sup {:.3e}  c1 {:.3e}  ratio {}",
            m.iteration,
            m.sup_distance,
            m.c1_distance,
            m.ratio.map_or("-".into(), |x| format!("{x:.3e}"))
        );
    }
    for f in &r.flags {
        println!("{} {} = {:.6e}  [{}]", if f.holds { "ok  " } else { "warn" }, f.name, f.value, f.threshold);
    }
    let status = serde_json::to_string(&r.status)?;
    println!("status {}  written to {}", status.trim_matches('"'), dir.display());
    if r.status == RunStatus::NonContracting {
        println!("distances stopped decreasing; a smaller T may restore contraction");
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(suite: &str) -> Result<ExitCode, Error> {
    let seed = seed_from_env();
    let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite] };
    let mut ok = true;
    for name in names {
        let r = run_suite(name, seed)?;
        for c in &r.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            println!("[{tag}] {}/{}: {} (value {:.3e}, limit {:.3e})", r.suite, c.name, c.invariant, c.value, c.limit);
        }
        ok &= r.passed();
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn export(run_dir: PathBuf, what: &str, out: Option<PathBuf>) -> Result<ExitCode, Error> {
    let kind: ExportKind = what.parse()?;
    match out {
        Some(p) => export_csv(&run_dir, kind, std::fs::File::create(p)?)?,
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            export_csv(&run_dir, kind, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let res = match cli.command {
        Command::Run {
            config_path,
            config,
            out,
            max_iters,
            tol,
        } => run(config_path, config, out, max_iters, tol),
        Command::Verify { suite } => verify(&suite),
        Command::Export { run_dir, what, out } => export(run_dir, &what, out),
    };
    res.unwrap_or_else(|e| fail(&e))
}

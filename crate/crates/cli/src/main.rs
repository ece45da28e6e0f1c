use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use optigon::ccp::{self, CcpConfig, CcpResult, CcpStatus};
use optigon::geometry::{self, BoundsRecord, Polygon};
use optigon::reporting::{self, SvgOptions, TableFormat};
use optigon::verification::{self, StructureReport, TOL_FINAL};

#[derive(Parser, Debug)]
#[command(
    name = "optigon",
    version,
    about = "Largest small polygons by sequential convex optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Maximize the area of one unit-diameter n-gon.
    Solve {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        run: RunArgs,
        /// Write the final polygon as SVG to this path.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Solve every n in a range and print the results table.
    Sweep {
        #[arg(long, default_value_t = 6)]
        from: usize,
        #[arg(long, default_value_t = 128)]
        to: usize,
        #[arg(long, default_value_t = 2)]
        step: usize,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Check the structure of a polygon stored as JSON.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = TOL_FINAL)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Draw a polygon stored as JSON.
    Render {
        #[arg(long)]
        input: PathBuf,
        /// Output path; standard output when omitted.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        labels: bool,
    },
    /// Print the closed-form area columns for `N` or `FROM..TO` (even n only).
    Bounds {
        #[arg(long)]
        n: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
    #[arg(long = "solver-tol", default_value_t = 1e-9)]
    solver_tol: f64,
    /// Directory for polygon, trace, structure and SVG artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record per-iteration traces and log solver iterations.
    #[arg(long)]
    trace: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

impl From<Format> for TableFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => TableFormat::Text,
            Format::Csv => TableFormat::Csv,
            Format::Json => TableFormat::Json,
        }
    }
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<optigon::Error> for Failure {
    fn from(e: optigon::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OPTIGON_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Solve { n, run, svg } => solve(n, &run, svg),
        Command::Sweep {
            from,
            to,
            step,
            jobs,
            run,
        } => sweep(from, to, step, jobs, &run),
        Command::Verify { input, tol, format } => verify(&input, tol, format),
        Command::Render { input, svg, labels } => render(&input, svg, labels),
        Command::Bounds { n, format } => bounds(&n, format),
    }
}

fn check_n(n: usize) -> Result<(), Failure> {
    if n < 6 || !n.is_multiple_of(2) {
        return Err(Failure::Usage(format!("n must be even and ≥ 6 (got {n})")));
    }
    Ok(())
}

fn config(run: &RunArgs) -> Result<CcpConfig, Failure> {
    let mut cfg = CcpConfig {
        epsilon: run.eps,
        record_trace: run.trace || run.out.is_some(),
        ..CcpConfig::default()
    };
    cfg.solver.tol = run.solver_tol;
    cfg.solver.trace = run.trace;
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn status_word(status: CcpStatus) -> String {
    match status {
        CcpStatus::Converged => "converged".into(),
        CcpStatus::OuterLimit => "outer-limit".into(),
        CcpStatus::SubproblemFailure(s) => format!("subproblem-failure({s:?})"),
    }
}

fn structure_line(r: &StructureReport) -> String {
    format!(
        "structure: pendant_cycle={} pendant_vertex={} symmetric={} unit_equalities={} max_defect={:.3e}",
        r.has_pendant_cycle,
        r.pendant_vertex.map_or("-".to_string(), |v| v.to_string()),
        r.symmetric,
        r.unit_equalities_hold,
        r.max_defect
    )
}

fn solve(n: usize, run: &RunArgs, svg: Option<PathBuf>) -> Result<(), Failure> {
    check_n(n)?;
    let cfg = config(run)?;
    let result = ccp::maximize_area(n, &cfg, None)?;
    let structure = verification::structure_report(&result.polygon, TOL_FINAL)?;
    match run.format {
        Format::Text => {
            println!(
                "n={} area={:.10} k={} status={}",
                n,
                result.area,
                result.iterations,
                status_word(result.status)
            );
            println!("{}", structure_line(&structure));
        }
        Format::Csv => {
            println!("n,area,k,status,structure_passes");
            println!(
                "{},{:.10},{},{},{}",
                n,
                result.area,
                result.iterations,
                status_word(result.status),
                structure.passes
            );
        }
        Format::Json => {
            let value = serde_json::json!({
                "n": n,
                "area": result.area,
                "iterations": result.iterations,
                "status": status_word(result.status),
                "last_rel_step": result.last_rel_step,
                "structure": structure,
                "property_violations": result.property_violations,
            });
            println!("{}", serde_json::to_string_pretty(&value).expect("json"));
        }
    }
    if let (true, Some(trace)) = (run.trace, &result.trace) {
        eprint!("{}", trace.to_csv());
    }
    for v in &result.property_violations {
        eprintln!("warning: {v}");
    }
    write_artifacts(&result, run, svg)?;
    if !result.is_converged() {
        return Err(Failure::Run(format!(
            "solver did not converge: {}",
            status_word(result.status)
        )));
    }
    Ok(())
}

fn write_artifacts(result: &CcpResult, run: &RunArgs, svg: Option<PathBuf>) -> Result<(), Failure> {
    if let Some(dir) = &run.out {
        let files = reporting::export_run(result, dir)?;
        log::info!("wrote {}", files.polygon.display());
    }
    if let Some(path) = svg {
        let doc = reporting::render_svg(&result.polygon, &SvgOptions::default());
        std::fs::write(&path, doc).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn sweep(from: usize, to: usize, step: usize, jobs: usize, run: &RunArgs) -> Result<(), Failure> {
    if step == 0 || from > to {
        return Err(Failure::Usage(
            "empty range: need from ≤ to and step ≥ 1".into(),
        ));
    }
    let ns: Vec<usize> = (from..=to).step_by(step).collect();
    for &n in &ns {
        check_n(n)?;
    }
    let cfg = config(run)?;
    let entries = if jobs == 1 {
        ccp::run_sweep(&ns, &cfg)
    } else {
        ccp::run_sweep_parallel(&ns, &cfg, jobs)
    };
    let rows = reporting::sweep_rows(&entries);
    print!("{}", reporting::render_table(&rows, run.format.into()));
    if let Some(dir) = &run.out {
        reporting::export_sweep(&entries, dir)?;
    }
    let failures: Vec<String> = entries
        .iter()
        .filter_map(|e| {
            e.outcome
                .as_ref()
                .err()
                .map(|err| format!("n={}: {err}", e.n))
        })
        .collect();
    if failures.is_empty() {
        return Ok(());
    }
    eprintln!("{} of {} runs failed:", failures.len(), entries.len());
    for f in &failures {
        eprintln!("  {f}");
    }
    Err(Failure::Run("sweep had failures".into()))
}

fn read_polygon(path: &std::path::Path) -> Result<Polygon, Failure> {
    Polygon::read_json(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn verify(input: &std::path::Path, tol: f64, format: Format) -> Result<(), Failure> {
    let p = read_polygon(input)?;
    let report = verification::structure_report(&p, tol)?;
    match format {
        Format::Json => print!("{}", report.to_json()),
        Format::Csv => {
            println!("n,tol,pendant_cycle,symmetric,unit_equalities,max_defect,passes");
            println!(
                "{},{:e},{},{},{},{:e},{}",
                report.n,
                tol,
                report.has_pendant_cycle,
                report.symmetric,
                report.unit_equalities_hold,
                report.max_defect,
                report.passes
            );
        }
        Format::Text => {
            println!(
                "n={} area={:.10} diameter={:.10} passes={}",
                p.n(),
                geometry::area(&p),
                geometry::diameter(&p),
                report.passes
            );
            println!("{}", structure_line(&report));
        }
    }
    Ok(())
}

fn render(input: &std::path::Path, svg: Option<PathBuf>, labels: bool) -> Result<(), Failure> {
    let p = read_polygon(input)?;
    let opts = SvgOptions {
        labels,
        ..SvgOptions::default()
    };
    let doc = reporting::render_svg(&p, &opts);
    match svg {
        Some(path) => {
            std::fs::write(&path, doc).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{doc}");
            Ok(())
        }
    }
}

fn parse_range(spec: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::Usage(format!("expected N or FROM..TO, got {spec:?}"));
    let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let ns: Vec<usize> = match spec.split_once("..") {
        Some((a, b)) => (parse(a)?..=parse(b)?).step_by(2).collect(),
        None => vec![parse(spec)?],
    };
    if ns.is_empty() {
        return Err(bad());
    }
    for &n in &ns {
        check_n(n)?;
    }
    Ok(ns)
}

fn bounds(spec: &str, format: Format) -> Result<(), Failure> {
    let records = parse_range(spec)?
        .into_iter()
        .map(BoundsRecord::for_n)
        .collect::<optigon::Result<Vec<_>>>()?;
    let lit = |r: &BoundsRecord| {
        r.literature_lower_bound
            .map_or("--".to_string(), |a| format!("{a:.10}"))
    };
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&records).expect("json")),
        Format::Csv => {
            println!("n,A(R),A(R+),lit,A_bar");
            for r in &records {
                println!(
                    "{},{:.10},{:.10},{},{:.10}",
                    r.n,
                    r.area_regular,
                    r.area_pendant,
                    lit(r),
                    r.upper_bound
                );
            }
        }
        Format::Text => {
            println!(
                "{:>4} | {:>12} | {:>12} | {:>12} | {:>12}",
                "n", "A(R)", "A(R+)", "lit", "A_bar"
            );
            for r in &records {
                println!(
                    "{:>4} | {:>12.10} | {:>12.10} | {:>12} | {:>12.10}",
                    r.n,
                    r.area_regular,
                    r.area_pendant,
                    lit(r),
                    r.upper_bound
                );
            }
        }
    }
    Ok(())
}

//! Command-line front end: solve runs, verification suites, and parameter
//! sweeps.
//!
//! Exit codes (stable contract):
//!   0 success / converged
//!   1 internal numerical failure
//!   2 configuration error
//!   3 maximum step count reached
//!   4 time step collapsed below dt_min
//!   5 iterate left the guard bounds

mod config;

use std::io::Write as IoWrite;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chordflow::body::ConvexBody;
use chordflow::chord::{chord_integral, chord_integral_lines, variational_check, LineSampler};
use chordflow::error::{Error, Result};
use chordflow::flow::{run, DiagnosticsRow, FlowConfig, RunStatus};
use chordflow::grid::DirectionGrid;
use chordflow::util::fmt17;
use chordflow::verify::{ball_oracle, cross_check, CheckLine, CheckReport};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "chordflow",
    about = "Orlicz chord Minkowski problem solver via normalized Gauss curvature flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the curvature flow to a solution of the prescription equation
    Solve(SolveArgs),
    /// Run a verification suite: identities | ball | ellipse | variational | flow-invariants
    Verify(VerifyArgs),
    /// Run solve over a list of parameter values
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct SolveArgs {
    /// key=value config file; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    q: Option<f64>,
    /// phi descriptor: power:p=<p> | sum:<c,p;...> | table:<path>
    #[arg(long)]
    phi: Option<String>,
    /// data descriptor: const:<v> | fourier:<a0,c1,s1,...> | table:<path>
    #[arg(long)]
    f: Option<String>,
    /// initial body: disk:<R> | ellipse:<a,b> | table:<path>
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    dt0: Option<f64>,
    #[arg(long = "tol-rhs")]
    tol_rhs: Option<f64>,
    #[arg(long = "tol-res")]
    tol_res: Option<f64>,
    #[arg(long = "max-steps")]
    max_steps: Option<usize>,
    /// output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed for Monte Carlo oracles
    #[arg(long)]
    seed: Option<u64>,
    /// diagnostics row every this many steps
    #[arg(long)]
    stride: Option<usize>,
    /// convexify with the Wulff projection instead of failing when dt collapses
    #[arg(long = "project-on-reject")]
    project_on_reject: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// identities | ball | ellipse | variational | flow-invariants
    suite: String,
    #[arg(long, default_value_t = 256)]
    grid: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    solve: SolveArgs,
    /// parameter to sweep: p (power exponent of phi) or q
    #[arg(long)]
    param: String,
    /// comma-separated values
    #[arg(long)]
    values: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Sweep(args) => cmd_sweep(&args),
    };
    match code {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::NotPositive { .. }
        | Error::InvalidExponent { .. }
        | Error::InvalidResolution { .. }
        | Error::ShapeMismatch { .. }
        | Error::PsiDivergentAtZero { .. }
        | Error::Io(_) => 2,
        Error::MaxStepsExceeded { .. } => 3,
        Error::StepCollapse { .. } => 4,
        Error::DivergedBounds { .. } => 5,
        _ => 1,
    }
}

fn effective_config(args: &SolveArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = args.dim {
        cfg.dim = v;
    }
    if let Some(v) = args.grid {
        cfg.grid = v;
    }
    if let Some(v) = args.q {
        cfg.q = v;
    }
    if let Some(v) = &args.phi {
        cfg.phi = v.clone();
    }
    if let Some(v) = &args.f {
        cfg.f = v.clone();
    }
    if let Some(v) = &args.init {
        cfg.init = v.clone();
    }
    if let Some(v) = args.dt0 {
        cfg.dt0 = v;
    }
    if let Some(v) = args.tol_rhs {
        cfg.tol_rhs = v;
    }
    if let Some(v) = args.tol_res {
        cfg.tol_res = v;
    }
    if let Some(v) = args.max_steps {
        cfg.max_steps = v;
    }
    if let Some(v) = &args.out {
        cfg.out = v.clone();
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.stride {
        cfg.stride = v;
    }
    if args.project_on_reject {
        cfg.project_on_reject = true;
    }
    Ok(cfg)
}

fn write_svg(path: &Path, initial: &ConvexBody, fin: &ConvexBody) -> Result<()> {
    let outline = |b: &ConvexBody| -> Vec<[f64; 2]> {
        b.boundary_points().iter().map(|p| [p[0], p[1]]).collect()
    };
    let a = outline(initial);
    let b = outline(fin);
    let r = a
        .iter()
        .chain(&b)
        .map(|p| p[0].abs().max(p[1].abs()))
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let scale = 360.0 / r;
    let poly = |pts: &[[f64; 2]], color: &str| -> String {
        let coords: Vec<String> = pts
            .iter()
            .chain(pts.first())
            .map(|p| format!("{:.6},{:.6}", 400.0 + scale * p[0], 400.0 - scale * p[1]))
            .collect();
        format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            coords.join(" ")
        )
    };
    let mut svg = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 800\" \
         width=\"800\" height=\"800\">\n",
    );
    svg.push_str(&poly(&a, "#999999"));
    svg.push_str(&poly(&b, "#000000"));
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)?;
    Ok(())
}

struct SolveOutcome {
    exit: u8,
    converged: bool,
    c: f64,
    steps: usize,
    residual: f64,
}

fn solve_into(cfg: &RunConfig) -> Result<SolveOutcome> {
    std::fs::create_dir_all(&cfg.out)?;
    let grid = cfg.make_grid()?;
    let body = cfg.build_initial_body(grid.clone())?;
    let flow_cfg = cfg.build_flow_config(&grid)?;
    for w in flow_cfg.warnings() {
        eprintln!("warning: {w}");
    }
    std::fs::write(cfg.out.join("effective.config"), cfg.to_lines())?;

    let initial = ConvexBody::new(grid.clone(), body.h().to_vec())?;
    let result = run(body, &flow_cfg);

    // write diagnostics and solution even for hard failures when possible
    let (status_str, exit, result) = match result {
        Ok(r) => match r.status {
            RunStatus::Converged => ("converged", 0u8, r),
            RunStatus::MaxSteps => ("max_steps", 3u8, r),
        },
        Err(e) => {
            let code = exit_code_for(&e);
            let mut summary = String::new();
            summary.push_str(&format!("status=error\nerror={e}\nexit_code={code}\n"));
            std::fs::write(cfg.out.join("summary.txt"), summary)?;
            return Err(e);
        }
    };

    let mut diag = String::from(DiagnosticsRow::CSV_HEADER);
    diag.push('\n');
    for row in &result.trajectory {
        diag.push_str(&row.to_csv());
        diag.push('\n');
    }
    std::fs::write(cfg.out.join("diagnostics.csv"), diag)?;

    let mut sol = Vec::new();
    result.state.body.write_csv(&mut sol)?;
    std::fs::write(cfg.out.join("solution.csv"), sol)?;

    if cfg.dim == 2 {
        write_svg(&cfg.out.join("outline.svg"), &initial, &result.state.body)?;
    }

    let last = result.trajectory.last().expect("trajectory is nonempty");
    let first = result.trajectory.first().expect("trajectory is nonempty");
    let summary = config::summary_lines(&[
        ("status", status_str.to_string()),
        ("exit_code", exit.to_string()),
        ("c", fmt17(result.c)),
        ("theta_final", fmt17(result.state.theta())),
        ("steps", result.state.step_count.to_string()),
        ("t_final", fmt17(result.state.t)),
        ("rhs_sup", fmt17(last.rhs_sup)),
        ("ma_residual_sup", fmt17(last.ma_residual_sup)),
        ("i_q_initial", fmt17(first.i_q)),
        ("i_q_final", fmt17(last.i_q)),
        ("warnings", result.warnings.join("; ")),
    ]);
    std::fs::write(cfg.out.join("summary.txt"), summary)?;

    Ok(SolveOutcome {
        exit,
        converged: exit == 0,
        c: result.c,
        steps: result.state.step_count,
        residual: last.ma_residual_sup,
    })
}

fn cmd_solve(args: &SolveArgs) -> Result<ExitCode> {
    let cfg = effective_config(args)?;
    let outcome = solve_into(&cfg)?;
    println!(
        "status={} c={} steps={}",
        if outcome.converged { "converged" } else { "max_steps" },
        fmt17(outcome.c),
        outcome.steps
    );
    Ok(ExitCode::from(outcome.exit))
}

fn circle_support<F: Fn(f64) -> f64>(grid: std::sync::Arc<chordflow::grid::SphereGrid>, f: F) -> Result<ConvexBody> {
    let n = grid.len();
    let h = (0..n)
        .map(|i| f(2.0 * std::f64::consts::PI * i as f64 / n as f64))
        .collect();
    ConvexBody::new(grid, h)
}

fn print_report(rep: &CheckReport) {
    for line in &rep.lines {
        println!("{}", line.to_csv());
    }
}

fn cmd_verify(args: &VerifyArgs) -> Result<ExitCode> {
    let n = args.grid;
    let grid = std::sync::Arc::new(chordflow::grid::make_grid(2, n)?);
    let disk = circle_support(grid.clone(), |_| 1.0)?;
    let ellipse = circle_support(grid.clone(), |t| {
        ((2.0 * t.cos()).powi(2) + t.sin().powi(2)).sqrt()
    })?;
    println!("{}", CheckReport::CSV_HEADER);
    let mut lines: Vec<CheckLine> = Vec::new();
    match args.suite.as_str() {
        "identities" => {
            for (name, body) in [("disk", &disk), ("ellipse", &ellipse)] {
                let rep = cross_check(body, 2.0)?;
                for mut l in rep.lines {
                    l.quantity = format!("{name}:{}", l.quantity);
                    lines.push(l);
                }
            }
            // seeded Monte Carlo cross-check of the line pipeline
            let mc = chord_integral_lines(
                &disk,
                1.0,
                &LineSampler::MonteCarlo {
                    samples: 200_000,
                    seed: args.seed,
                },
            )?;
            lines.push(CheckLine::new(
                "disk:I_1 Monte Carlo",
                mc,
                std::f64::consts::PI,
                0.02,
            ));
        }
        "ball" => {
            let dirs = DirectionGrid::new(2, n.max(512))?;
            for r in [0.5, 1.0, 2.0] {
                let body = circle_support(std::sync::Arc::new(chordflow::grid::make_grid(
                    2,
                    n.max(512),
                )?), move |_| r)?;
                for q in [2.0, 3.0] {
                    let o = ball_oracle(r, q, 2)?;
                    let v = chordflow::chord::dual_quermass(&body, &dirs, [r, 0.0, 0.0], q - 1.0)?;
                    lines.push(CheckLine::new(
                        &format!("V~_{}(R={r})", q - 1.0),
                        v,
                        o.v_boundary,
                        1e-4,
                    ));
                }
            }
        }
        "ellipse" => {
            let dirs = DirectionGrid::from_grid(ellipse.grid());
            let i1 = chord_integral(&ellipse, &dirs, 1.0)?;
            lines.push(CheckLine::new(
                "ellipse I_1 = pi a b",
                i1,
                2.0 * std::f64::consts::PI,
                0.01,
            ));
            let rep = cross_check(&ellipse, 2.0)?;
            lines.extend(rep.lines);
        }
        "variational" => {
            let dirs = DirectionGrid::from_grid(grid.as_ref());
            for (name, body) in [("disk", &disk), ("ellipse", &ellipse)] {
                for q in [1.0, 2.0] {
                    let (fd, mi) = variational_check(body, &dirs, q, 1.0, 1e-4)?;
                    lines.push(CheckLine::new(
                        &format!("{name}:dI_{q} fd vs measure"),
                        fd,
                        mi,
                        0.02,
                    ));
                }
            }
        }
        "flow-invariants" => {
            let small = std::sync::Arc::new(chordflow::grid::make_grid(2, 128)?);
            let body = circle_support(small, |t| {
                ((1.2 * t.cos()).powi(2) + t.sin().powi(2)).sqrt()
            })?;
            let phi = chordflow::orlicz::OrliczPhi::power(2.0)?;
            let mut cfg = FlowConfig::new(2.0, phi, vec![1.0; 128])?;
            cfg.max_steps = 400;
            cfg.stride = 20;
            let res = run(body, &cfg)?;
            let i0 = res.trajectory[0].i_q;
            let max_drift = res
                .trajectory
                .iter()
                .map(|r| (r.i_q - i0).abs() / i0)
                .fold(0.0f64, f64::max);
            lines.push(CheckLine::new("I_q max rel drift", max_drift, 0.0, 1e-3));
            let mut max_rise = 0.0f64;
            for w in res.trajectory.windows(2) {
                max_rise = max_rise.max((w[1].phi_val - w[0].phi_val) / w[0].phi_val.abs());
            }
            lines.push(CheckLine::new("Phi max rel rise", max_rise, 0.0, 1e-8));
            let finite = res.trajectory.iter().all(|r| r.all_finite());
            lines.push(CheckLine::new(
                "diagnostics all finite",
                if finite { 1.0 } else { 0.0 },
                1.0,
                0.0,
            ));
        }
        other => {
            return Err(Error::Config(format!(
                "unknown suite {other:?} (identities | ball | ellipse | variational | flow-invariants)"
            )))
        }
    }
    let rep = CheckReport { lines };
    print_report(&rep);
    Ok(if rep.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_sweep(args: &SweepArgs) -> Result<ExitCode> {
    let values: Vec<f64> = args
        .values
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("bad sweep values {:?}", args.values)))?;
    if values.is_empty() {
        return Err(Error::Config("sweep needs a nonempty value list".into()));
    }
    let base = effective_config(&args.solve)?;
    let root = base.out.clone();
    std::fs::create_dir_all(&root)?;
    let mut aggregate = String::from("value,converged,c,steps,residual\n");
    let mut all_ok = true;
    for v in &values {
        let mut cfg = base.clone();
        match args.param.as_str() {
            "p" => cfg.phi = format!("power:p={v}"),
            "q" => cfg.q = *v,
            other => {
                return Err(Error::Config(format!(
                    "unknown sweep parameter {other:?} (p | q)"
                )))
            }
        }
        cfg.out = root.join(format!("{}={}", args.param, v));
        eprintln!("sweep: {}={}", args.param, v);
        match solve_into(&cfg) {
            Ok(outcome) => {
                all_ok &= outcome.converged;
                aggregate.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt17(*v),
                    outcome.converged,
                    fmt17(outcome.c),
                    outcome.steps,
                    fmt17(outcome.residual)
                ));
            }
            Err(e) => {
                all_ok = false;
                aggregate.push_str(&format!("{},error:{e},,,\n", fmt17(*v)));
            }
        }
    }
    let mut file = std::fs::File::create(root.join("sweep.csv"))?;
    file.write_all(aggregate.as_bytes())?;
    print!("{aggregate}");
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

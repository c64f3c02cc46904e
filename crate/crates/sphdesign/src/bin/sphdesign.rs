//! Command-line surface: verify, construct, diagnose, bounds.
//!
//! Exit codes: 0 certified design, 1 uncertified, 2 input error,
//! 3 precondition failure (N below the smallest certifiable size).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sphdesign::error::Error;
use sphdesign::geometry::{
    geodesic_distance, mesh_norm_estimate, mesh_ratio, separation_distance, PointSet,
};
use sphdesign::io::{
    build_report, read_points, report_certified, report_to_json, report_to_table, write_points,
};
use sphdesign::optimizer::{construct, ConstructOptions, Tolerances};
use sphdesign::special::{dgs_lower_bound, poly_space_dim, SphereDim};

const EXIT_CERTIFIED: u8 = 0;
const EXIT_UNCERTIFIED: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_PRECONDITION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "sphdesign",
    version,
    about = "Verify, construct, and diagnose spherical t-designs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct VerifyArgs {
    /// Point file: one point per line, d+1 coordinates
    points_file: PathBuf,
    /// Design strength to test
    t: usize,
    /// A_{N,t} zero tolerance
    #[arg(long, default_value_t = 1e-12)]
    tol_a: f64,
    /// D_{N,t} zero tolerance
    #[arg(long, default_value_t = 1e-12)]
    tol_d: f64,
    /// Relative numerical-rank tolerance (default scales with N)
    #[arg(long)]
    rank_tol: Option<f64>,
    /// Emit the report as JSON instead of a table
    #[arg(long)]
    json: bool,
    /// Mesh-norm estimation resolution
    #[arg(long, default_value_t = 4000)]
    resolution: usize,
}

#[derive(Args)]
struct ConstructArgs {
    /// Sphere dimension d (points live on S^d in R^{d+1})
    d: u32,
    /// Design strength
    t: usize,
    /// Number of points
    n: usize,
    /// RNG seed
    seed: u64,
    /// Gradient-descent iteration cap
    #[arg(long, default_value_t = 20000)]
    max_iter: usize,
    /// Stationarity tolerance on the gradient inf-norm
    #[arg(long, default_value_t = 1e-10)]
    grad_tol: f64,
    /// Seeded restarts before giving up
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    /// Write the final point set here
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit the report as JSON instead of a table
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct DiagnoseArgs {
    points_file: PathBuf,
    /// Mesh-norm estimation resolution
    #[arg(long, default_value_t = 4000)]
    resolution: usize,
}

#[derive(Args)]
struct BoundsArgs {
    /// Sphere dimension d
    d: u32,
    /// Design strength
    t: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Verify a point set as a spherical t-design
    Verify(VerifyArgs),
    /// Construct a spherical t-design by optimization
    Construct(ConstructArgs),
    /// Geometry diagnostics: separation, mesh norm, mesh ratio
    Diagnose(DiagnoseArgs),
    /// Print the DGS lower bound and the route thresholds d_t, d_{t+1}
    Bounds(BoundsArgs),
}

fn input_error(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_INPUT)
}

fn cmd_verify(args: &VerifyArgs) -> ExitCode {
    if args.t < 1 {
        eprintln!("error: t must be at least 1");
        return ExitCode::from(EXIT_INPUT);
    }
    let x = match read_points(&args.points_file) {
        Ok(x) => x,
        Err(e) => return input_error(&e),
    };
    let tolerances = Tolerances {
        tol_a: args.tol_a,
        tol_d: args.tol_d,
        rank_tol: args.rank_tol,
        ..Tolerances::default()
    };
    let report = match build_report(&x, args.t, &tolerances, args.resolution) {
        Ok(r) => r,
        Err(e) => return input_error(&e),
    };
    if args.json {
        println!("{}", report_to_json(&report));
    } else {
        print!("{}", report_to_table(&report));
    }
    if report_certified(&report) {
        ExitCode::from(EXIT_CERTIFIED)
    } else if report.verdict == "insufficient_points" {
        ExitCode::from(EXIT_PRECONDITION)
    } else {
        ExitCode::from(EXIT_UNCERTIFIED)
    }
}

fn cmd_construct(args: &ConstructArgs) -> ExitCode {
    if args.t < 1 {
        eprintln!("error: t must be at least 1");
        return ExitCode::from(EXIT_INPUT);
    }
    if args.n < 1 {
        eprintln!("error: n must be at least 1");
        return ExitCode::from(EXIT_INPUT);
    }
    let d = match SphereDim::new(args.d) {
        Ok(d) => d,
        Err(e) => return input_error(&e),
    };
    match dgs_lower_bound(d, args.t) {
        Ok(bound) if (args.n as u64) < bound => {
            eprintln!(
                "warning: n = {} is below the DGS lower bound {bound}; no {}-design exists at this size",
                args.n, args.t
            );
        }
        Ok(_) => {}
        Err(e) => return input_error(&e),
    }

    let opts = ConstructOptions {
        max_iter: args.max_iter,
        grad_tol: args.grad_tol,
        restarts: args.restarts,
        ..ConstructOptions::new(args.n, args.seed)
    };
    let outcome = match construct(d, args.t, &opts) {
        Ok(o) => o,
        Err(e) => return input_error(&e),
    };
    let x = &outcome.result.final_points;
    if let Some(path) = &args.out {
        if let Err(e) = write_points(path, x) {
            return input_error(&e);
        }
    }
    let report = match build_report(x, args.t, &opts.tolerances, 4000) {
        Ok(r) => r,
        Err(e) => return input_error(&e),
    };
    if args.json {
        println!("{}", report_to_json(&report));
    } else {
        print!("{}", report_to_table(&report));
        println!("attempts            {}", outcome.attempts);
        println!("a_final             {:.16e}", outcome.result.a_final);
    }
    if report_certified(&report) {
        ExitCode::from(EXIT_CERTIFIED)
    } else {
        ExitCode::from(EXIT_UNCERTIFIED)
    }
}

/// Per-point minimum pairwise angle, summarized as a five-number spread.
fn nearest_angle_summary(x: &PointSet<f64>) -> Option<(f64, f64, f64, f64, f64)> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mut mins = Vec::with_capacity(n);
    for i in 0..n {
        let mut best = f64::INFINITY;
        for j in 0..n {
            if i != j {
                let a = geodesic_distance(x.point(i), x.point(j)).ok()?;
                if a < best {
                    best = a;
                }
            }
        }
        mins.push(best);
    }
    mins.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| mins[(p * (n - 1) as f64).round() as usize];
    Some((mins[0], q(0.25), q(0.5), q(0.75), mins[n - 1]))
}

fn cmd_diagnose(args: &DiagnoseArgs) -> ExitCode {
    let x = match read_points(&args.points_file) {
        Ok(x) => x,
        Err(e) => return input_error(&e),
    };
    println!("d                   {}", x.dim().value());
    println!("n                   {}", x.len());
    match separation_distance(&x) {
        Ok(s) => {
            if s == 0.0 {
                println!("separation          0 (coincident points)");
            } else {
                println!("separation          {s:.16e}");
            }
        }
        Err(Error::DegenerateSeparation) => {
            println!("separation          0 (coincident points)")
        }
        Err(Error::TooFewPoints { .. }) => {
            println!("separation          (needs N >= 2)")
        }
        Err(e) => return input_error(&e),
    }
    let estimate = mesh_norm_estimate(&x, args.resolution);
    println!("mesh_norm_estimate  {:.16e}", estimate.lower_bound);
    match mesh_ratio(&x, args.resolution) {
        Ok(r) => println!("mesh_ratio          {r:.16e}"),
        Err(_) => println!("mesh_ratio          (undefined)"),
    }
    if let Some((min, q1, med, q3, max)) = nearest_angle_summary(&x) {
        println!("nearest-angle spread (radians)");
        println!("  min {min:.6}  q1 {q1:.6}  median {med:.6}  q3 {q3:.6}  max {max:.6}");
    }
    ExitCode::from(EXIT_CERTIFIED)
}

fn cmd_bounds(args: &BoundsArgs) -> ExitCode {
    if args.t < 1 {
        eprintln!("error: t must be at least 1");
        return ExitCode::from(EXIT_INPUT);
    }
    let d = match SphereDim::new(args.d) {
        Ok(d) => d,
        Err(e) => return input_error(&e),
    };
    let bound = match dgs_lower_bound(d, args.t) {
        Ok(b) => b,
        Err(e) => return input_error(&e),
    };
    let dt = match poly_space_dim(d, args.t) {
        Ok(v) => v,
        Err(e) => return input_error(&e),
    };
    let dt1 = match poly_space_dim(d, args.t + 1) {
        Ok(v) => v,
        Err(e) => return input_error(&e),
    };
    println!("dgs_lower_bound     {bound}");
    println!("dim P_t   (d_t)     {dt}   (nonlinear route needs N >= d_t)");
    println!("dim P_t+1 (d_t+1)   {dt1}   (variational route needs N >= d_t+1)");
    ExitCode::from(EXIT_CERTIFIED)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Verify(args) => cmd_verify(args),
        Command::Construct(args) => cmd_construct(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::Bounds(args) => cmd_bounds(args),
    }
}

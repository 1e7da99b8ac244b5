use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;

use droplet_core::config::{RunConfig, ShapeSpec};
use droplet_core::counterexample::{run_counterexample, TruncationStage, VerdictStatus};
use droplet_core::diagnostics::{self, format_sci, measure, Snapshot, TimeSeriesRow};
use droplet_core::evolution::run_observed;
use droplet_core::evolution::RunError;
use droplet_core::exact::{find_nonconvex_pair, EdgeVelocityProfile, TriangleOracle};
use droplet_core::geometry::{default_convexity_tol, is_convex};
use droplet_core::mobility::{check_assumption, default_probes, MobilityLaw};
use droplet_core::solver::solve_torsion;
use droplet_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "droplet",
    version,
    about = "Quasi-static droplet free-boundary simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the closed-form triangle solution and the mobility law.
    ExactCheck(ExactCheckArgs),
    /// Solve the torsion problem once and report mass, λ and flux.
    Solve(SolveArgs),
    /// Evolve a domain and write the time series and snapshots.
    Evolve(EvolveArgs),
    /// Run the convexity-breaking pipeline on a rounded triangle.
    Counterexample(CounterexampleArgs),
}

#[derive(Args, Debug)]
pub struct ExactCheckArgs {
    /// Half side length of the triangle.
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    /// Mobility law for the edge-velocity part of the table.
    #[arg(long, default_value = "p2")]
    pub law: String,
    /// Boundary sample count for the `v = 0` check.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Also write `edge_profile.csv` here [default: none, print only]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ShapeKind {
    Disk,
    Triangle,
    RoundedTriangle,
}

/// Flags shared by `solve` and `evolve`. Every flag overrides the config file.
#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// JSON run configuration; flags take precedence over its values [default: none]
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Initial shape [default: rounded-triangle, or config]
    #[arg(long, value_enum)]
    pub shape: Option<ShapeKind>,
    /// Disk radius [default: 1]
    #[arg(long)]
    pub radius: Option<f64>,
    /// Triangle half side length [default: 1]
    #[arg(long)]
    pub a: Option<f64>,
    /// Fillet radius of the rounded triangle [default: 0.02]
    #[arg(long)]
    pub fillet: Option<f64>,
    /// Marker count [default: 512]
    #[arg(long = "N", value_name = "N")]
    pub marker_count: Option<usize>,
    /// Output directory [default: none, print only]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Mobility law: p2, p3, p:<p>, linear, zero [default: p2]
    #[arg(long)]
    pub law: Option<String>,
    /// Largest time step [default: 1e-3]
    #[arg(long)]
    pub dt_max: Option<f64>,
    /// CFL number [default: 0.4]
    #[arg(long)]
    pub cfl: Option<f64>,
    /// Final time [default: 0.05]
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Snapshot spacing [default: every step]
    #[arg(long)]
    pub output_every: Option<f64>,
}

#[derive(Args, Debug)]
pub struct CounterexampleArgs {
    /// JSON run configuration; flags take precedence over its values [default: none]
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Mobility law: p2, p3, p:<p> [default: p2]
    #[arg(long)]
    pub law: Option<String>,
    /// Triangle half side length [default: 1]
    #[arg(long)]
    pub a: Option<f64>,
    /// Fillet radius [default: 0.02]
    #[arg(long)]
    pub fillet: Option<f64>,
    /// Marker count [default: 800]
    #[arg(long = "N", value_name = "N")]
    pub marker_count: Option<usize>,
    /// Largest time step [default: 2e-4]
    #[arg(long)]
    pub dt_max: Option<f64>,
    /// Final time [default: 0.02]
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Explicit pair `x0,x1` on the flat edge [default: scanned]
    #[arg(long, value_name = "X0,X1", value_parser = parse_pair)]
    pub pair: Option<(f64, f64)>,
    /// Output directory for report.json, gap.csv, series.csv and SVGs [default: none, print only]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (x0, x1) = s.split_once(',').ok_or("expected `x0,x1`")?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((num(x0)?, num(x1)?))
}

/// A run that completed but whose numbers are unusable.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct NumericalFailure(pub String);

/// Exit status: 1 for bad input, 2 for numerical failures.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err.chain().any(|e| {
        e.downcast_ref::<NumericalFailure>().is_some()
            || e.downcast_ref::<Error>().is_some_and(Error::is_numerical)
    });
    if numerical {
        2
    } else {
        1
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::ExactCheck(args) => exact_check(&args).context("exact-check"),
        Command::Solve(args) => solve(&args).context("solve"),
        Command::Evolve(args) => evolve(&args).context("evolve"),
        Command::Counterexample(args) => counterexample(&args).context("counterexample"),
    }
}

/// Config file, then flags.
fn load_config(path: Option<&Path>) -> anyhow::Result<RunConfig> {
    Ok(match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    })
}

fn apply_common(cfg: &mut RunConfig, args: &CommonArgs) {
    let (mut radius, mut a, mut fillet) = (1.0, 1.0, 0.02);
    match cfg.shape {
        ShapeSpec::Disk { radius: r } => radius = r,
        ShapeSpec::Triangle { a: s } => a = s,
        ShapeSpec::RoundedTriangle { a: s, fillet: f } => (a, fillet) = (s, f),
    }
    let kind = args.shape.unwrap_or(match cfg.shape {
        ShapeSpec::Disk { .. } => ShapeKind::Disk,
        ShapeSpec::Triangle { .. } => ShapeKind::Triangle,
        ShapeSpec::RoundedTriangle { .. } => ShapeKind::RoundedTriangle,
    });
    let radius = args.radius.unwrap_or(radius);
    let a = args.a.unwrap_or(a);
    let fillet = args.fillet.unwrap_or(fillet);
    cfg.shape = match kind {
        ShapeKind::Disk => ShapeSpec::Disk { radius },
        ShapeKind::Triangle => ShapeSpec::Triangle { a },
        ShapeKind::RoundedTriangle => ShapeSpec::RoundedTriangle { a, fillet },
    };
    if let Some(n) = args.marker_count {
        cfg.marker_count = n;
    }
    if let Some(dir) = &args.out {
        cfg.output.dir = Some(dir.display().to_string());
    }
}

fn out_dir(cfg: &RunConfig) -> anyhow::Result<Option<PathBuf>> {
    let Some(dir) = &cfg.output.dir else {
        return Ok(None);
    };
    let dir = PathBuf::from(dir);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(Some(dir))
}

fn exact_check(args: &ExactCheckArgs) -> anyhow::Result<()> {
    let oracle = TriangleOracle::new(args.a)?;
    let law = MobilityLaw::parse(&args.law)?;
    let id = oracle.check_identities(args.samples);

    println!(
        "triangle a = {}, c = {}",
        format_sci(oracle.a),
        format_sci(oracle.c)
    );
    println!(
        "{:<28} {:>20} {:>20} {:>12}",
        "identity", "computed", "expected", "error"
    );
    let rows = [
        ("integral of v", id.integral, 1.0, (id.integral - 1.0).abs(), 1e-8),
        (
            "max |v| on boundary",
            id.boundary_max_abs,
            0.0,
            id.boundary_max_abs / id.interior_max,
            1e-12,
        ),
        (
            "-lap v (rel. error)",
            oracle.lambda0 * (1.0 + id.laplacian_rel_error),
            oracle.lambda0,
            id.laplacian_rel_error,
            1e-5,
        ),
        (
            "v_y(0, 0)",
            oracle.gradient(droplet_core::geometry::Point2::new(0.0, 0.0)).y,
            oracle.edge_gradient(0.0),
            (oracle.gradient(droplet_core::geometry::Point2::new(0.0, 0.0)).y - oracle.edge_gradient(0.0))
                .abs(),
            1e-12 * oracle.edge_gradient(0.0),
        ),
    ];
    let mut failed = Vec::new();
    for (name, got, want, err, tol) in rows {
        println!(
            "{name:<28} {:>20} {:>20} {:>12.3e}{}",
            format_sci(got),
            format_sci(want),
            err,
            if err <= tol { "" } else { "  FAIL" }
        );
        if err > tol {
            failed.push(name);
        }
    }

    println!();
    match check_assumption(&law, f64::MIN_POSITIVE, &default_probes()) {
        Ok(report) => println!(
            "law {}: assumption {} (inf F''/F' over probes {})",
            law.name(),
            if report.satisfied {
                "satisfied"
            } else {
                "NOT satisfied"
            },
            format_sci(report.inf_ratio)
        ),
        Err(e) => println!("law {}: assumption check failed: {e}", law.name()),
    }
    let profile = EdgeVelocityProfile::new(oracle, law);
    match find_nonconvex_pair(&profile) {
        Ok(pair) => println!(
            "best midpoint pair on (0.02a, 0.98a): x0 = {:.6}, x1 = {:.6}, gap rate {}",
            pair.x0,
            pair.x1,
            format_sci(pair.gap)
        ),
        Err(e) => println!("no nonconvex pair: {e}"),
    }
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join("edge_profile.csv");
        let text = diagnostics::edge_profile_csv(&profile, 400)?;
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    if !failed.is_empty() {
        bail!(NumericalFailure(format!(
            "identities out of tolerance: {}",
            failed.join(", ")
        )));
    }
    Ok(())
}

fn solve(args: &SolveArgs) -> anyhow::Result<()> {
    let mut cfg = load_config(args.common.config.as_deref())?;
    apply_common(&mut cfg, &args.common);
    cfg.validate()?;
    let curve = cfg.build_curve()?;
    let sol = solve_torsion(&curve, &cfg.solver)?;
    let field = sol.normalize();
    let d = sol.diagnostics();
    let (lo, hi) = field
        .boundary_gradient
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &g| {
            (l.min(g), h.max(g))
        });
    println!("markers            {}", curve.len());
    println!("area               {}", format_sci(curve.signed_area()));
    println!("mass (int w)       {}", format_sci(sol.mass()));
    println!("lambda             {}", format_sci(field.lambda));
    println!("|Du| min / max     {} / {}", format_sci(lo), format_sci(hi));
    println!("linear solve       {:?}", d.method);
    println!("condition estimate {}", format_sci(d.condition_estimate));
    println!("boundary residual  {}", format_sci(d.boundary_residual));
    println!(
        "convex             {}",
        is_convex(&curve, default_convexity_tol(&curve))
    );
    if let Some(dir) = out_dir(&cfg)? {
        diagnostics::write_curve_csv(&dir.join("curve.csv"), &curve)?;
        std::fs::write(dir.join("flux.csv"), diagnostics::flux_csv(&sol)?)
            .with_context(|| format!("writing {}", dir.join("flux.csv").display()))?;
    }
    Ok(())
}

fn evolve(args: &EvolveArgs) -> anyhow::Result<()> {
    let mut cfg = load_config(args.common.config.as_deref())?;
    apply_common(&mut cfg, &args.common);
    if let Some(l) = &args.law {
        cfg.law = l.clone();
    }
    if let Some(v) = args.dt_max {
        cfg.dt_max = v;
    }
    if let Some(v) = args.cfl {
        cfg.cfl = v;
    }
    if let Some(v) = args.t_end {
        cfg.t_end = v;
    }
    if args.output_every.is_some() {
        cfg.output_every = args.output_every;
    }
    cfg.validate()?;
    let law = cfg.law()?;
    let curve = cfg.build_curve()?;
    let stepper = cfg.stepper();

    let mut rows: Vec<TimeSeriesRow> = Vec::new();
    let mut snapshots: Vec<Snapshot> = Vec::new();
    let outcome = run_observed(curve, &law, &stepper, |state| {
        let row = measure(state);
        snapshots.push(Snapshot {
            t: state.t,
            curve: state.curve().clone(),
            convex: row.convex,
        });
        rows.push(row);
    });
    let failure = match outcome {
        Ok(_) => None,
        Err(RunError::Setup(e)) => return Err(e.into()),
        Err(RunError::Step { error, last_state }) => {
            warn!("stopped at step {}", last_state.step);
            Some(error)
        }
    };

    let last = rows.last().cloned();
    if let Some(dir) = out_dir(&cfg)? {
        let picks = pick_evenly(snapshots.len(), cfg.output.snapshots);
        let chosen: Vec<Snapshot> = picks.iter().map(|&i| snapshots[i].clone()).collect();
        diagnostics::emit(&rows, &chosen, &dir)?;
        if let Some(s) = snapshots.last() {
            diagnostics::write_curve_csv(&dir.join("final_curve.csv"), &s.curve)?;
        }
    }
    if let Some(row) = last {
        println!(
            "t = {}  area = {}  lambda = {}  convex = {}  ({} rows)",
            format_sci(row.t),
            format_sci(row.area),
            format_sci(row.lambda),
            row.convex,
            rows.len()
        );
    }
    match failure {
        Some(e) => Err(e).context("time stepping"),
        None => Ok(()),
    }
}

fn pick_evenly(n: usize, k: usize) -> Vec<usize> {
    if n == 0 || k == 0 {
        return Vec::new();
    }
    if k == 1 {
        return vec![n - 1];
    }
    let mut v: Vec<usize> = (0..k).map(|j| j * (n - 1) / (k - 1)).collect();
    v.dedup();
    v
}

fn counterexample(args: &CounterexampleArgs) -> anyhow::Result<()> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => {
            let d = droplet_core::counterexample::CounterexampleConfig::default();
            RunConfig {
                shape: ShapeSpec::RoundedTriangle {
                    a: d.a,
                    fillet: d.fillet,
                },
                marker_count: d.stepper.marker_count,
                dt_max: d.stepper.dt_max,
                t_end: d.stepper.t_end,
                ..RunConfig::default()
            }
        }
    };
    let (mut a, mut fillet) = match cfg.shape {
        ShapeSpec::RoundedTriangle { a, fillet } => (a, fillet),
        _ => (1.0, 0.02),
    };
    a = args.a.unwrap_or(a);
    fillet = args.fillet.unwrap_or(fillet);
    cfg.shape = ShapeSpec::RoundedTriangle { a, fillet };
    if let Some(l) = &args.law {
        cfg.law = l.clone();
    }
    if let Some(n) = args.marker_count {
        cfg.marker_count = n;
    }
    if let Some(v) = args.dt_max {
        cfg.dt_max = v;
    }
    if let Some(v) = args.t_end {
        cfg.t_end = v;
    }
    if let Some((x0, x1)) = args.pair {
        cfg.pair = Some([x0, x1]);
    }
    if let Some(dir) = &args.out {
        cfg.output.dir = Some(dir.display().to_string());
    }
    cfg.validate()?;
    let law = cfg.law()?;
    let report = run_counterexample(&law, &cfg.counterexample()?)?;

    let v = &report.verdict;
    println!(
        "law {}  a = {}  fillet = {}  pair = ({:.6}, {:.6})",
        report.plan.law, report.plan.a, report.plan.fillet, report.plan.pair.x0, report.plan.pair.x1
    );
    println!("exact gap rate     {}", format_sci(report.plan.gap_rate));
    if let (Some(s), Some(e)) = (report.fitted_slope, report.slope_relative_error) {
        println!(
            "fitted slope       {} (relative error {:.3}, window t <= {})",
            format_sci(s),
            e,
            format_sci(report.slope_window)
        );
    }
    println!("gap tolerance      {}", format_sci(v.gap_tolerance));
    println!(
        "verdict            {}{}",
        match v.status {
            VerdictStatus::Broken => "broken",
            VerdictStatus::NotBroken => "not broken",
            VerdictStatus::Inconclusive => "inconclusive",
        },
        v.t_star
            .map(|t| format!(" at t* = {}", format_sci(t)))
            .unwrap_or_default()
    );
    println!(
        "certificates from  gap {:?}  curvature {:?}  chord {:?}  agree {}",
        v.gap_from, v.nonconvex_from, v.chord_outside_from, v.agree
    );
    if let Some(dir) = out_dir(&cfg)? {
        report.write(&dir)?;
    }
    if let Some(tr) = &report.truncated {
        if tr.numerical && tr.stage == TruncationStage::Evolution {
            bail!(NumericalFailure(format!("run truncated: {}", tr.reason)));
        }
        warn!("run truncated: {}", tr.reason);
    }
    Ok(())
}

//! `spinsqueeze` command-line front end.
//!
//! Exit codes: 0 success, 1 input error, 2 numerical failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use spinsqueeze::certify::{
    certify_depth, separability_bound, BoundMode, CertifyOptions, MarginPolicy,
};
use spinsqueeze::curves::{
    compute_curve_with, refine_to_x, validity_edge, CurveGrid, CurvePoint, CurveTable, ValidityEdge,
};
use spinsqueeze::dynamics::{ehrenfest_slope_check, evolve, HamiltonianSpec};
use spinsqueeze::io::{
    certificates_report, curve_csv_string, frontier_comparison, read_records, structured_report,
    write_frontier_csv, write_trajectory_csv, CurveCache, Header, StructuredFormat,
};
use spinsqueeze::variational::{
    locate_bifurcation, minimize_at_x, BifurcationOptions, BranchSample, SearchOptions,
};
use spinsqueeze::{squeezing_parameter, Error, Execution, Spin, SpinMoments, StateVector};

#[derive(Parser, Serialize)]
#[command(
    name = "spinsqueeze",
    version,
    about = "Optimal spin squeezing curves, squeezing dynamics and entanglement-depth certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the primary output here instead of stdout.
    #[arg(short, long, global = true)]
    #[serde(skip)]
    output: Option<PathBuf>,

    /// Omit the timestamp from the metadata block.
    #[arg(long, global = true)]
    #[serde(skip)]
    no_timestamp: bool,

    /// Curve cache directory (default: $SPINSQUEEZE_CACHE_DIR, else a
    /// directory under the system temp dir).
    #[arg(long, global = true)]
    #[serde(skip)]
    cache_dir: Option<PathBuf>,

    /// Disable data parallelism.
    #[arg(long, global = true)]
    #[serde(skip)]
    sequential: bool,

    /// Format for reports (curve and trajectory data are always CSV).
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Toml)]
    format: FormatArg,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum FormatArg {
    Toml,
    Json,
}

#[derive(Args, Serialize, Clone, Debug)]
#[group(required = true, multiple = false)]
struct SpinArg {
    /// Twice the spin (integer).
    #[arg(long = "two-j")]
    two_j: Option<u32>,
    /// Spin as `3/2`, `1` or `1.5`; normalized to 2J.
    #[arg(long, value_parser = parse_spin)]
    #[serde(skip)]
    spin: Option<u32>,
}

impl SpinArg {
    fn normalize(&mut self) {
        if let Some(t) = self.spin.take() {
            self.two_j = Some(t);
        }
    }

    fn spin(&self) -> Result<Spin, Error> {
        Spin::new(self.two_j.or(self.spin).unwrap_or(0))
    }
}

fn parse_spin(s: &str) -> Result<u32, String> {
    s.parse::<Spin>()
        .map(|s| s.two_j())
        .map_err(|e| e.to_string())
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ModeArg {
    Exact,
    Analytic,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum KindArg {
    OneAxis,
    TwoAxis,
    Adiabatic,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
enum Command {
    /// Tabulate the optimal squeezing curve F_J(x) as CSV.
    Curve {
        #[command(flatten)]
        spin: SpinArg,
        /// Number of adaptively placed points.
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Emit only refined points at these x values.
        #[arg(long = "x", num_args = 1.., allow_negative_numbers = true)]
        x: Vec<f64>,
        /// Half-integer spins: add this many variational points left of the
        /// bifurcation (upper-bound data).
        #[arg(long, requires = "branch_output")]
        branch_points: Option<usize>,
        /// File for the variational branch points.
        #[arg(long, requires = "branch_points")]
        #[serde(skip)]
        branch_output: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Separability bound on Var(Jx) for N particles of spin J.
    Bound {
        #[command(flatten)]
        spin: SpinArg,
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long = "n", default_value_t = 1)]
        num_particles: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
    },
    /// Locate the half-integer symmetry-breaking point.
    Bifurcation {
        #[command(flatten)]
        spin: SpinArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-3)]
        bracket_width: f64,
    },
    /// Evolve the coherent state |Jz = J⟩ and write the trajectory CSV.
    Dynamics {
        #[command(flatten)]
        spin: SpinArg,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Twisting strength (final χ for the adiabatic ramp; default 1, or 2 for a ramp).
        #[arg(long)]
        chi: Option<f64>,
        /// Coefficient of Jz (default 0, or -1 for a ramp).
        #[arg(long, allow_negative_numbers = true)]
        omega: Option<f64>,
        /// Final sample time (default: the ramp duration).
        #[arg(long)]
        tmax: Option<f64>,
        /// Ramp duration.
        #[arg(long = "T", alias = "duration")]
        duration: Option<f64>,
        /// Number of samples (default 201, or 25 per unit time for a ramp).
        #[arg(long)]
        samples: Option<usize>,
        /// Also write (x, scaled minimal variance, F_J envelope) to this file.
        #[arg(long)]
        #[serde(skip)]
        compare_frontier: Option<PathBuf>,
    },
    /// Certify entanglement depth from a JSON measurement record file.
    Certify {
        /// Record file: one object or an array of objects.
        #[arg(long, short = 'i')]
        input: PathBuf,
        /// Largest group size tried (default: N)
        #[arg(long)]
        max_k: Option<u64>,
        /// Standard errors subtracted from each violation (required when the
        /// records carry standard errors).
        #[arg(long)]
        z: Option<f64>,
        /// Use only the closed-form bound.
        #[arg(long)]
        analytic_only: bool,
        /// Largest 2kJ+1 for which exact tables are used.
        #[arg(long, default_value_t = 20_001)]
        dimension_cap: u64,
    },
    /// Ramsey squeezing parameter ξ = √(2J)·ΔJx/|⟨Jz⟩|.
    Xi {
        #[command(flatten)]
        spin: SpinArg,
        #[arg(long)]
        var_jx: f64,
        #[arg(long, allow_negative_numbers = true)]
        mean_jz: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Curve { .. } => "curve",
            Command::Bound { .. } => "bound",
            Command::Bifurcation { .. } => "bifurcation",
            Command::Dynamics { .. } => "dynamics",
            Command::Certify { .. } => "certify",
            Command::Xi { .. } => "xi",
        }
    }

    fn spin_arg(&mut self) -> Option<&mut SpinArg> {
        match self {
            Command::Curve { spin, .. }
            | Command::Bound { spin, .. }
            | Command::Bifurcation { spin, .. }
            | Command::Dynamics { spin, .. }
            | Command::Xi { spin, .. } => Some(spin),
            Command::Certify { .. } => None,
        }
    }
}

struct Ctx {
    header: Header,
    output: Option<PathBuf>,
    cache_dir: PathBuf,
    execution: Execution,
    format: StructuredFormat,
}

impl Ctx {
    fn emit(&self, text: &str) -> Result<(), Error> {
        match &self.output {
            Some(p) => write_file(p, text.as_bytes()),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())?;
                out.flush()?;
                Ok(())
            }
        }
    }

    fn cache(&self, grid: CurveGrid) -> CurveCache {
        CurveCache::new(&self.cache_dir, grid).with_execution(self.execution)
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    fs::write(path, bytes)
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

fn main() -> ExitCode {
    let mut cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(s) = cli.command.spin_arg() {
        s.normalize();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let mut header = Header::new(cli.command.name(), cli)?;
    if !cli.no_timestamp {
        header = header.stamped();
    }
    let ctx = Ctx {
        header,
        output: cli.output.clone(),
        cache_dir: CurveCache::resolve_dir(cli.cache_dir.as_deref()),
        execution: if cli.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        },
        format: match cli.format {
            FormatArg::Toml => StructuredFormat::Toml,
            FormatArg::Json => StructuredFormat::Json,
        },
    };
    match &cli.command {
        Command::Curve {
            spin,
            points,
            x,
            branch_points,
            branch_output,
            seed,
        } => run_curve(
            &ctx,
            spin.spin()?,
            *points,
            x,
            branch_points.zip(branch_output.as_deref()),
            *seed,
        ),
        Command::Bound {
            spin,
            x,
            num_particles,
            mode,
        } => run_bound(&ctx, spin.spin()?, *x, *num_particles, *mode),
        Command::Bifurcation {
            spin,
            seed,
            bracket_width,
        } => run_bifurcation(&ctx, spin.spin()?, *seed, *bracket_width),
        Command::Dynamics {
            spin,
            kind,
            chi,
            omega,
            tmax,
            duration,
            samples,
            compare_frontier,
        } => run_dynamics(
            &ctx,
            spin.spin()?,
            DynamicsArgs {
                kind: *kind,
                chi: *chi,
                omega: *omega,
                tmax: *tmax,
                duration: *duration,
                samples: *samples,
            },
            compare_frontier.as_deref(),
        ),
        Command::Certify {
            input,
            max_k,
            z,
            analytic_only,
            dimension_cap,
        } => run_certify(&ctx, input, *max_k, *z, *analytic_only, *dimension_cap),
        Command::Xi {
            spin,
            var_jx,
            mean_jz,
        } => run_xi(&ctx, spin.spin()?, *var_jx, *mean_jz),
    }
}

fn run_curve(
    ctx: &Ctx,
    spin: Spin,
    points: usize,
    xs: &[f64],
    branch: Option<(usize, &Path)>,
    seed: u64,
) -> Result<(), Error> {
    let edge = validity_edge(spin)?;
    let mut header = ctx.header.clone().with("two_j", spin.two_j());
    if spin.two_j() == 1 {
        eprintln!(
            "note: for J = 1/2 the exact table reduces to the coherent point; \
             F(x) = x^2/2 is reached by the variational search (use --branch-points)"
        );
    }
    if !spin.is_integer() {
        header = header
            .with("bifurcation_x", edge.point.x)
            .with("bifurcation_mean_jz", edge.point.x * spin.j())
            .with("bifurcation_mu", edge.mu);
    }
    let table = if xs.is_empty() {
        if points < 2 {
            return Err(Error::InvalidInput("--points must be at least 2".into()));
        }
        header = header.with("grid", format!("adaptive:{points}"));
        compute_curve_with(spin, &CurveGrid::Adaptive { points }, ctx.execution)?
    } else {
        refined_points(spin, xs, &edge)?
    };
    ctx.emit(&curve_csv_string(&table, &header)?)?;

    if let Some((n, path)) = branch {
        if spin.is_integer() {
            return Err(Error::InvalidInput(
                "variational branch points apply to half-integer spins only".into(),
            ));
        }
        let text = branch_csv(spin, n, edge.point.x, seed, ctx)?;
        write_file(path, text.as_bytes())?;
    }
    Ok(())
}

fn refined_points(spin: Spin, xs: &[f64], edge: &ValidityEdge) -> Result<CurveTable, Error> {
    let mut points: Vec<CurvePoint> = Vec::new();
    for &x in xs {
        let a = x.abs();
        if a.is_nan() || a > 1.0 {
            return Err(Error::Domain {
                x,
                lo: -1.0,
                hi: 1.0,
            });
        }
        let p = if a == 1.0 {
            CurvePoint::coherent(spin)
        } else if a < edge.point.x - 1e-12 {
            return Err(Error::Regime {
                two_j: spin.two_j(),
                x: a,
                valid_from: edge.point.x,
            });
        } else {
            refine_to_x(spin, a, edge.mu, 1e-10)?.point()
        };
        points.push(p);
    }
    points.sort_by(|a, b| a.x.total_cmp(&b.x));
    points.dedup_by(|a, b| a.x == b.x);
    Ok(CurveTable {
        spin,
        points,
        valid_from: edge.point.x,
    })
}

fn branch_csv(spin: Spin, n: usize, edge_x: f64, seed: u64, ctx: &Ctx) -> Result<String, Error> {
    let mut opts = SearchOptions::new(seed);
    opts.execution = ctx.execution;
    let mut text = ctx
        .header
        .clone()
        .with("two_j", spin.two_j())
        .with("data", "variational upper bound, not certification-grade")
        .lines();
    text.push_str("two_j,mu,x,f,mean_jx,functional\n");
    for i in 1..=n {
        let x = edge_x * i as f64 / (n + 1) as f64;
        let r = minimize_at_x(spin, x, &opts)?;
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            spin.two_j(),
            r.mu,
            r.x,
            r.f,
            r.mean_jx,
            r.functional_value
        ));
    }
    Ok(text)
}

#[derive(Serialize)]
struct BoundReport {
    two_j: u32,
    num_particles: u64,
    x: f64,
    mode: BoundMode,
    /// N·J·L(x)
    bound: f64,
    /// L(x)
    scaled: f64,
}

fn run_bound(ctx: &Ctx, spin: Spin, x: f64, n: u64, mode: ModeArg) -> Result<(), Error> {
    if n == 0 {
        return Err(Error::InvalidInput("--n must be positive".into()));
    }
    let mode = match mode {
        ModeArg::Exact => BoundMode::Exact,
        ModeArg::Analytic => BoundMode::Analytic,
    };
    let cache = ctx.cache(CurveGrid::default());
    let bound = separability_bound(spin, n, x, mode, &cache)?;
    let report = BoundReport {
        two_j: spin.two_j(),
        num_particles: n,
        x,
        mode,
        bound,
        scaled: bound / (n as f64 * spin.j()),
    };
    ctx.emit(&structured_report(
        &[report],
        false,
        "bound",
        &ctx.header,
        ctx.format,
    )?)
}

#[derive(Serialize)]
struct BifurcationOut {
    two_j: u32,
    x_critical: f64,
    mean_jz_critical: f64,
    bracket: (f64, f64),
    x_linear_instability: f64,
    converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: Option<String>,
    branch_samples: Vec<BranchSample>,
}

fn run_bifurcation(ctx: &Ctx, spin: Spin, seed: u64, bracket_width: f64) -> Result<(), Error> {
    if bracket_width.is_nan() || bracket_width <= 0.0 {
        return Err(Error::InvalidInput(
            "--bracket-width must be positive".into(),
        ));
    }
    let mut opts = BifurcationOptions::new(seed);
    opts.bracket_width = bracket_width;
    opts.search.execution = ctx.execution;
    let r = locate_bifurcation(spin, &opts)?;
    if let Some(w) = &r.warning {
        eprintln!("warning: {w}");
    }
    let out = BifurcationOut {
        two_j: spin.two_j(),
        x_critical: r.x_critical,
        mean_jz_critical: r.x_critical * spin.j(),
        bracket: r.bracket,
        x_linear_instability: r.x_linear_instability,
        converged: r.converged,
        warning: r.warning,
        branch_samples: r.branch_samples,
    };
    ctx.emit(&structured_report(
        &[out],
        false,
        "bifurcation",
        &ctx.header,
        ctx.format,
    )?)
}

struct DynamicsArgs {
    kind: KindArg,
    chi: Option<f64>,
    omega: Option<f64>,
    tmax: Option<f64>,
    duration: Option<f64>,
    samples: Option<usize>,
}

fn run_dynamics(
    ctx: &Ctx,
    spin: Spin,
    a: DynamicsArgs,
    frontier: Option<&Path>,
) -> Result<(), Error> {
    let (spec, tmax, default_samples) = match a.kind {
        KindArg::OneAxis | KindArg::TwoAxis => {
            if a.duration.is_some() {
                return Err(Error::InvalidInput(
                    "--T applies to --kind adiabatic only".into(),
                ));
            }
            let tmax = a
                .tmax
                .ok_or_else(|| Error::InvalidInput("--tmax is required for twisting".into()))?;
            let chi = a.chi.unwrap_or(1.0);
            let omega = a.omega.unwrap_or(0.0);
            let spec = match a.kind {
                KindArg::OneAxis => HamiltonianSpec::OneAxis { omega, chi },
                _ => HamiltonianSpec::TwoAxis { omega, chi },
            };
            (spec, tmax, 201)
        }
        KindArg::Adiabatic => {
            let duration = a.duration.unwrap_or(80.0);
            let mut spec = HamiltonianSpec::linear_ramp(a.chi.unwrap_or(2.0), duration);
            if let (Some(w), HamiltonianSpec::AdiabaticRamp { omega, .. }) = (a.omega, &mut spec) {
                *omega = w;
            }
            let tmax = a.tmax.unwrap_or(duration);
            (spec, tmax, (25.0 * tmax).ceil() as usize + 1)
        }
    };
    if !(tmax > 0.0 && tmax.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "final time must be positive, got {tmax}"
        )));
    }
    let n = a.samples.unwrap_or(default_samples);
    if n < 2 {
        return Err(Error::InvalidInput("--samples must be at least 2".into()));
    }
    let times: Vec<f64> = (0..n).map(|i| tmax * i as f64 / (n - 1) as f64).collect();
    let traj = evolve(&StateVector::coherent_up(spin), &spec, &times)?;

    let last = traj.samples.last().expect("at least two samples");
    let mut footer = vec![
        ("final_norm".to_string(), last.norm.to_string()),
        (
            "propagation_accuracy".to_string(),
            traj.achieved_accuracy.to_string(),
        ),
    ];
    if spec.is_ramp() {
        let chi_end = spec.chi_at(tmax);
        if chi_end != 0.0 {
            footer.push(("final_mu".into(), (spec.omega() / chi_end).to_string()));
        }
        if let Some(f) = last.ground_fidelity {
            footer.push(("final_fidelity".into(), f.to_string()));
        }
        footer.push(("ramp_step".into(), traj.step.to_string()));
        if traj.samples.len() >= 5 {
            let check = ehrenfest_slope_check(&spec, &traj)?;
            footer.push(("adiabatic".into(), check.adiabatic.to_string()));
            footer.push((
                "min_ground_fidelity".into(),
                check.min_ground_fidelity.to_string(),
            ));
            if let Some(d) = check.max_ratio_deviation {
                footer.push(("max_rate_ratio_deviation".into(), d.to_string()));
            }
            footer.push(("rate_ratio_tolerance".into(), check.tolerance.to_string()));
        }
    } else {
        let e0 = traj.samples[0].energy;
        let drift = traj
            .samples
            .iter()
            .map(|s| (s.energy - e0).abs())
            .fold(0.0, f64::max);
        footer.push(("max_energy_drift".into(), drift.to_string()));
    }

    let header = ctx.header.clone().with("two_j", spin.two_j());
    let mut buf = Vec::new();
    write_trajectory_csv(&traj, &header, &footer, &mut buf)?;
    ctx.emit(&String::from_utf8_lossy(&buf))?;

    if let Some(path) = frontier {
        let cache = ctx.cache(CurveGrid::default());
        let rows = frontier_comparison(&traj, &cache)?;
        let worst = rows.iter().map(|r| r.excess).fold(f64::INFINITY, f64::min);
        let mut buf = Vec::new();
        write_frontier_csv(&rows, &header.clone().with("min_excess", worst), &mut buf)?;
        write_file(path, &buf)?;
    }
    Ok(())
}

fn run_certify(
    ctx: &Ctx,
    input: &Path,
    max_k: Option<u64>,
    z: Option<f64>,
    analytic_only: bool,
    dimension_cap: u64,
) -> Result<(), Error> {
    let set = read_records(input).map_err(|e| match e {
        Error::Io(io) => Error::InvalidInput(format!("cannot read {}: {io}", input.display())),
        other => other,
    })?;
    if let Some(z) = z {
        if !(z >= 0.0 && z.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "--z must be finite and >= 0, got {z}"
            )));
        }
    }
    let opts = CertifyOptions {
        max_k,
        margin: z.map(|z| MarginPolicy { z }),
        analytic_only,
        dimension_cap,
        execution: ctx.execution,
    };
    let cache = ctx.cache(CurveGrid::default());
    let certs = set
        .records
        .iter()
        .map(|r| certify_depth(r, &opts, &cache))
        .collect::<Result<Vec<_>, _>>()?;
    let header = ctx.header.clone().with("input", input.display());
    ctx.emit(&certificates_report(
        &certs, set.array, &header, ctx.format,
    )?)
}

#[derive(Serialize)]
struct XiReport {
    two_j: u32,
    mean_jz: f64,
    var_jx: f64,
    xi: f64,
}

fn run_xi(ctx: &Ctx, spin: Spin, var_jx: f64, mean_jz: f64) -> Result<(), Error> {
    if !(var_jx >= 0.0 && var_jx.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "--var-jx must be finite and >= 0, got {var_jx}"
        )));
    }
    if mean_jz.abs() > spin.j() {
        return Err(Error::InvalidInput(format!(
            "|--mean-jz| exceeds J = {}",
            spin.j()
        )));
    }
    let m = SpinMoments {
        mean_jx: 0.0,
        mean_jy: 0.0,
        mean_jz,
        var_jx,
        var_jy: 0.0,
        var_jz: 0.0,
    };
    let xi = squeezing_parameter(&m, spin)?;
    let report = XiReport {
        two_j: spin.two_j(),
        mean_jz,
        var_jx,
        xi,
    };
    ctx.emit(&structured_report(
        &[report],
        false,
        "xi",
        &ctx.header,
        ctx.format,
    )?)
}

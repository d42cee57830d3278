//! `srj`: derive, inspect and run Scheduled Relaxation Jacobi schemes.
//!
//! Every CSV written here starts with `#`-prefixed metadata lines holding the
//! command line, the crate version and whatever choices (scheme source,
//! boundary treatment, forcing) are needed to repeat the run.

mod schemes;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use srj_core::catalog::{self, CatalogKey, Listing};
use srj_core::optimizer::derive_scheme;
use srj_core::pde::{build_1d, build_2d, AdvectionDiffusion1D, AdvectionDiffusion2D, Forcing};
use srj_core::solver::{run_jacobi, run_srj, InitialGuess, SolveConfig, SolveStatus};
use srj_core::spectral::{jacobi_eigenvalues, rank_schemes, spectral_radius};
use srj_core::sparse::{load_matrix_market, save_matrix_market, write_vector_market, CsrMatrix};
use srj_core::{Error, Ratio, Scheme};

use crate::schemes::{resolve_scheme, ResolvedScheme};

const EXIT_STAGNATED: u8 = 2;
const EXIT_DIVERGED: u8 = 3;
const EXIT_BUDGET: u8 = 4;
const EXIT_USAGE: u8 = 64;

const BOUNDARY_1D: &str = "u(0)=0 eliminated; u'(1)=0 via ghost node u_{n+1}=u_n folded into the last row";
const BOUNDARY_2D: &str = "u=0 on x=0 and y=0 (eliminated); zero normal derivative on x=1 and y=1 via ghost nodes";
const UPWINDING: &str = "first-order upwind; backward difference for positive velocity, forward for negative";

#[derive(Parser)]
#[command(name = "srj", version, about = "Scheduled Relaxation Jacobi schemes for nonsymmetric systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize the relaxation factors for (M, c) and write a scheme file.
    Derive(DeriveArgs),
    /// Solve the 1D advection-diffusion problem with an SRJ scheme.
    Solve1d(Solve1dArgs),
    /// Solve the 2D advection-diffusion problem with an SRJ scheme.
    Solve2d(Solve2dArgs),
    /// Jacobi spectrum of the 1D problem and the predicted SRJ spectral radii.
    Spectrum(SpectrumArgs),
    /// Slope of G_M at 1 for every bundled scheme, plus the Jacobi column.
    SlopeTable(OutArgs),
    /// Inspect or export bundled schemes.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Sample |G_M| on a rectangle of the complex plane.
    AmpGrid(AmpGridArgs),
}

#[derive(Args)]
struct OutArgs {
    /// Write CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DeriveArgs {
    #[arg(long)]
    m: u32,
    /// Ellipse ratio b/a as `p/q` or a decimal.
    #[arg(long)]
    c: Ratio,
    /// Scheme file to write; printed to standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Boundary preset. Only one combination is supported: Dirichlet at the
/// inflow sides, homogeneous Neumann at the outflow sides.
#[derive(Clone, Copy, ValueEnum)]
enum BcArg {
    DirichletNeumann,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Ones,
    Zeros,
}

#[derive(Args)]
struct SolveArgs {
    /// `catalog:M,c`, `legacy:M`, `jacobi:M`, `chebyshev:M` or a scheme file.
    #[arg(long)]
    scheme: String,
    /// Absolute tolerance on the residual 2-norm.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_cycles: usize,
    #[arg(long, value_enum, default_value = "ones")]
    init: InitArg,
    #[arg(long, default_value_t = 10)]
    stagnation_window: usize,
    #[arg(long, default_value_t = 1e30)]
    divergence_factor: f64,
    /// Per-iteration residual history CSV.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Write the assembled matrix in Matrix Market format.
    #[arg(long)]
    export_mm: Option<PathBuf>,
    /// Write the right-hand side in Matrix Market array format.
    #[arg(long)]
    export_rhs: Option<PathBuf>,
    /// Solve this Matrix Market matrix (with a zero right-hand side) instead
    /// of assembling one.
    #[arg(long)]
    import_mm: Option<PathBuf>,
}

#[derive(Args)]
struct Solve1dArgs {
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, default_value = "sin2pi")]
    forcing: Forcing,
    #[arg(long, value_enum, default_value = "dirichlet-neumann")]
    bc: BcArg,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Args)]
struct Solve2dArgs {
    #[arg(long, default_value_t = 256)]
    nx: usize,
    #[arg(long, default_value_t = 256)]
    ny: usize,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    ax: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    ay: f64,
    #[arg(long, default_value = "sin2pi")]
    forcing: Forcing,
    #[arg(long, value_enum, default_value = "dirichlet-neumann")]
    bc: BcArg,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    /// Advection speed: a value, a comma list, or `start:stop:step`.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    a: String,
    #[arg(long, value_enum, default_value = "dirichlet-neumann")]
    bc: BcArg,
    /// Candidate schemes (repeatable). Defaults to the M=5 grid plus jacobi:5.
    #[arg(long = "scheme")]
    schemes: Vec<String>,
    /// Analyse this Matrix Market matrix instead of the 1D problem.
    #[arg(long)]
    import_mm: Option<PathBuf>,
    /// Omit eigenvalue rows from the CSV.
    #[arg(long)]
    radii_only: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CatalogAction {
    /// One row per bundled scheme.
    List(OutArgs),
    /// Print a bundled scheme in scheme-file format.
    Show(CatalogKeyArgs),
    /// Write a bundled scheme to a scheme file.
    Export {
        #[command(flatten)]
        key: CatalogKeyArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct CatalogKeyArgs {
    /// `M,c`, e.g. `5,1/3`.
    key: String,
    /// Use the shorter real-axis listing instead of the full grid.
    #[arg(long)]
    legacy: bool,
}

#[derive(Args)]
struct AmpGridArgs {
    #[arg(long)]
    scheme: String,
    #[arg(long, default_value = "-1.2:1.2", allow_hyphen_values = true)]
    x: String,
    #[arg(long, default_value = "-1:1", allow_hyphen_values = true)]
    y: String,
    #[arg(long, default_value_t = 101)]
    resolution: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.chain().any(|c| {
                matches!(
                    c.downcast_ref::<Error>(),
                    Some(Error::Validation(_) | Error::InvalidArgument(_))
                )
            });
            ExitCode::from(if usage { EXIT_USAGE } else { 1 })
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Derive(args) => cmd_derive(args),
        Command::Solve1d(args) => cmd_solve1d(args),
        Command::Solve2d(args) => cmd_solve2d(args),
        Command::Spectrum(args) => cmd_spectrum(args),
        Command::SlopeTable(args) => cmd_slope_table(args),
        Command::Catalog { action } => cmd_catalog(action),
        Command::AmpGrid(args) => cmd_amp_grid(args),
    }
}

/// `#` lines shared by every CSV.
fn header(extra: &[(&str, String)]) -> String {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let mut out = format!(
        "# command: srj {}\n# version: srj-cli {}\n",
        argv.join(" "),
        env!("CARGO_PKG_VERSION")
    );
    for (k, v) in extra {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    out
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_derive(args: DeriveArgs) -> Result<u8> {
    if !(2..=32).contains(&args.m) {
        return Err(Error::Validation(format!("derive needs 2 <= M <= 32, got {}", args.m)).into());
    }
    if args.c > Ratio::new(1, 1) {
        return Err(Error::Validation(format!("c = {} must lie in [0, 1]", args.c)).into());
    }
    let result = derive_scheme(args.m, args.c)?;
    let text = catalog::format_scheme(&result.scheme, result.converged);
    match &args.out {
        Some(p) => fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    let report = |line: String| {
        if args.out.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    };
    report(format!("g_bar={:.10}", result.g_bar));
    report(format!(
        "converged={} iterations={} kkt={:.2e} max_violation={:.2e}",
        result.converged, result.iterations, result.kkt_residual, result.max_constraint_violation
    ));
    if let Ok(published) = catalog::lookup(CatalogKey::grid(args.m, args.c)) {
        let dev = result
            .scheme
            .sorted_factors()
            .iter()
            .zip(published.sorted_factors())
            .map(|(a, b)| ((a - b) / b).abs())
            .fold(0.0, f64::max);
        report(format!(
            "catalog M={},c={}: g_bar={:.10} max relative deviation (sorted factors)={dev:.3e}",
            args.m,
            args.c,
            published.g_bar().unwrap_or(f64::NAN)
        ));
    }
    if !result.converged {
        eprintln!("warning: optimizer did not converge; best iterate written with converged=false");
        return Ok(1);
    }
    Ok(0)
}

fn solve_config(args: &SolveArgs) -> SolveConfig {
    SolveConfig {
        tolerance: args.tol,
        max_cycles: args.max_cycles,
        initial_guess: match args.init {
            InitArg::Ones => InitialGuess::Ones,
            InitArg::Zeros => InitialGuess::Zeros,
        },
        stagnation_window: args.stagnation_window,
        divergence_factor: args.divergence_factor,
    }
}

fn export(args: &SolveArgs, a: &CsrMatrix, b: &[f64], comment: &str) -> Result<()> {
    if let Some(p) = &args.export_mm {
        save_matrix_market(a, Some(comment), p)?;
    }
    if let Some(p) = &args.export_rhs {
        let f = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
        write_vector_market(b, std::io::BufWriter::new(f))?;
    }
    Ok(())
}

fn exit_code(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::Converged => 0,
        SolveStatus::Stagnated => EXIT_STAGNATED,
        SolveStatus::Diverged => EXIT_DIVERGED,
        SolveStatus::BudgetExhausted => EXIT_BUDGET,
    }
}

/// Shared tail of `solve1d` and `solve2d`.
fn solve_and_report(
    args: &SolveArgs,
    a: &CsrMatrix,
    b: &[f64],
    scheme: &ResolvedScheme,
    mut meta: Vec<(&str, String)>,
) -> Result<u8> {
    let cfg = solve_config(args);
    let (_, history) = if scheme.scheme.m() == 1 && scheme.scheme.is_jacobi() {
        run_jacobi(a, b, &cfg)?
    } else {
        run_srj(a, b, &scheme.scheme, &cfg)?
    };
    println!(
        "status={} cycles={} iterations={} final_residual={:.6e}",
        history.status,
        history.cycles_used,
        history.iterations(),
        history.final_residual()
    );
    if let Some(p) = &args.history {
        meta.extend([
            ("scheme", scheme.scheme.label()),
            ("scheme_source", scheme.source.clone()),
            (
                "factors",
                scheme.scheme.factors().iter().map(|w| format!("{w:e}")).collect::<Vec<_>>().join(" "),
            ),
            ("tolerance", format!("{:e}", cfg.tolerance)),
            ("initial_guess", format!("{:?}", cfg.initial_guess).to_lowercase()),
            ("stagnation_window", cfg.stagnation_window.to_string()),
            ("divergence_factor", format!("{:e}", cfg.divergence_factor)),
            ("status", history.status.to_string()),
        ]);
        let csv = history.to_csv(scheme.scheme.m(), &[]);
        fs::write(p, header(&meta) + &csv).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(exit_code(history.status))
}

fn imported(path: &Path) -> Result<(CsrMatrix, Vec<f64>)> {
    let a = load_matrix_market(path)?;
    let n = a.n_rows();
    Ok((a, vec![0.0; n]))
}

fn cmd_solve1d(args: Solve1dArgs) -> Result<u8> {
    let scheme = resolve_scheme(&args.solve.scheme)?;
    let (a, b, meta) = match &args.solve.import_mm {
        Some(p) => {
            let (a, b) = imported(p)?;
            (a, b, vec![("matrix", format!("imported {}", p.display())), ("rhs", "zero".into())])
        }
        None => {
            let spec = AdvectionDiffusion1D {
                n: args.n,
                nu: args.nu,
                a: args.a,
                forcing: args.forcing,
            };
            let (a, b) = build_1d(&spec)?;
            let meta = vec![
                ("problem", format!("1d n={} nu={} a={} h=1/{}", args.n, args.nu, args.a, args.n)),
                ("boundary", BOUNDARY_1D.to_string()),
                ("advection", UPWINDING.to_string()),
                ("forcing", args.forcing.to_string()),
            ];
            (a, b, meta)
        }
    };
    export(&args.solve, &a, &b, "1d advection-diffusion")?;
    solve_and_report(&args.solve, &a, &b, &scheme, meta)
}

fn cmd_solve2d(args: Solve2dArgs) -> Result<u8> {
    let scheme = resolve_scheme(&args.solve.scheme)?;
    let (a, b, meta) = match &args.solve.import_mm {
        Some(p) => {
            let (a, b) = imported(p)?;
            (a, b, vec![("matrix", format!("imported {}", p.display())), ("rhs", "zero".into())])
        }
        None => {
            let spec = AdvectionDiffusion2D {
                nx: args.nx,
                ny: args.ny,
                nu: args.nu,
                ax: args.ax,
                ay: args.ay,
                forcing: args.forcing,
            };
            let (a, b) = build_2d(&spec)?;
            let meta = vec![
                (
                    "problem",
                    format!("2d nx={} ny={} nu={} ax={} ay={}", args.nx, args.ny, args.nu, args.ax, args.ay),
                ),
                ("ordering", "row-major, x index fastest".to_string()),
                ("boundary", BOUNDARY_2D.to_string()),
                ("advection", UPWINDING.to_string()),
                ("forcing", args.forcing.to_string()),
            ];
            (a, b, meta)
        }
    };
    export(&args.solve, &a, &b, "2d advection-diffusion")?;
    solve_and_report(&args.solve, &a, &b, &scheme, meta)
}

fn parse_sweep(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| -> Result<f64> { t.trim().parse().with_context(|| format!("bad number {t:?} in sweep {s:?}")) };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0) || stop < start {
                return Err(Error::InvalidArgument(format!("sweep {s:?} needs start <= stop and step > 0")).into());
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=count).map(|k| start + k as f64 * step).collect())
        }
        [_] => s.split(',').map(num).collect(),
        _ => Err(Error::InvalidArgument(format!("sweep {s:?} must be a value, a list, or start:stop:step")).into()),
    }
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| Error::InvalidArgument(format!("range {s:?} must look like lo:hi")))?;
    Ok((lo.trim().parse()?, hi.trim().parse()?))
}

fn default_candidates() -> Vec<String> {
    let mut v: Vec<String> = Ratio::grid().iter().map(|c| format!("catalog:5,{c}")).collect();
    v.push("jacobi:5".into());
    v
}

fn cmd_spectrum(args: SpectrumArgs) -> Result<u8> {
    let refs = if args.schemes.is_empty() { default_candidates() } else { args.schemes.clone() };
    let candidates: Vec<ResolvedScheme> = refs.iter().map(|r| resolve_scheme(r)).collect::<Result<_>>()?;
    let schemes: Vec<Scheme> = candidates.iter().map(|c| c.scheme.clone()).collect();

    let systems: Vec<(String, CsrMatrix)> = match &args.import_mm {
        Some(p) => vec![(format!("{}", p.display()), load_matrix_market(p)?)],
        None => parse_sweep(&args.a)?
            .into_iter()
            .map(|a| {
                let spec = AdvectionDiffusion1D::new(args.n, args.nu, a);
                Ok((format!("{a}"), build_1d(&spec)?.0))
            })
            .collect::<Result<_>>()?,
    };

    let mut meta = vec![
        ("candidates", refs.join(" ")),
        ("radius", "max over Jacobi eigenvalues of |G_M(lambda)|".to_string()),
    ];
    if args.import_mm.is_none() {
        meta.push(("problem", format!("1d n={} nu={}", args.n, args.nu)));
        meta.push(("boundary", BOUNDARY_1D.to_string()));
        meta.push(("advection", UPWINDING.to_string()));
    }
    let mut csv = header(&meta);
    csv.push_str("system,record,label,re,im,value,rank\n");
    let mut summary = Vec::new();
    for (name, a) in &systems {
        let eigs = jacobi_eigenvalues(a)?;
        let rho_j = spectral_radius(&eigs);
        if !args.radii_only {
            for z in &eigs {
                csv.push_str(&format!("{name},eigenvalue,,{:e},{:e},,\n", z.re, z.im));
            }
        }
        csv.push_str(&format!("{name},jacobi_radius,jacobi,,,{rho_j:e},\n"));
        let ranked = rank_schemes(&eigs, &schemes);
        for (rank, (s, rho)) in ranked.iter().enumerate() {
            csv.push_str(&format!("{name},scheme_radius,\"{}\",,,{rho:e},{}\n", s.label(), rank + 1));
        }
        let (best, best_rho) = ranked[0];
        let divergent: Vec<String> = ranked.iter().filter(|(_, r)| *r >= 1.0).map(|(s, _)| s.label()).collect();
        summary.push(format!(
            "system={name} jacobi_radius={rho_j:.6} best={} rho={best_rho:.6}{}",
            best.label(),
            if divergent.is_empty() { String::new() } else { format!(" divergent=[{}]", divergent.join(" ")) }
        ));
    }
    match &args.out {
        Some(p) => {
            fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?;
            for line in summary {
                println!("{line}");
            }
        }
        None => {
            print!("{csv}");
            for line in summary {
                eprintln!("{line}");
            }
        }
    }
    Ok(0)
}

fn cmd_slope_table(args: OutArgs) -> Result<u8> {
    let mut csv = header(&[("slope", "dG_M/dlambda at lambda=1, equal to the sum of the factors".into())]);
    let cols: Vec<String> = Ratio::grid().iter().map(|c| format!("c={c}")).collect();
    csv.push_str(&format!("M,{},jacobi\n", cols.join(",")));
    for row in catalog::slope_table() {
        let vals: Vec<String> = row.slopes.iter().map(|s| format!("{s:.6}")).collect();
        csv.push_str(&format!("{},{},{}\n", row.m, vals.join(","), row.jacobi));
    }
    emit(args.out.as_deref(), &csv)?;
    Ok(0)
}

fn catalog_key(args: &CatalogKeyArgs) -> Result<CatalogKey> {
    let key = args.key.strip_prefix("catalog:").unwrap_or(&args.key);
    let (m, c) = catalog::parse_key(key)?;
    Ok(CatalogKey {
        m,
        c,
        listing: if args.legacy { Listing::RealAxis } else { Listing::Grid },
    })
}

fn cmd_catalog(action: CatalogAction) -> Result<u8> {
    match action {
        CatalogAction::List(args) => {
            let mut csv = header(&[("g_bar", "recomputed as max |G_M| over the (M, c) test points".into())]);
            csv.push_str("listing,M,c,g_bar,slope\n");
            for key in catalog::keys() {
                let s = catalog::lookup(key)?;
                let listing = match key.listing {
                    Listing::Grid => "grid",
                    Listing::RealAxis => "legacy",
                };
                csv.push_str(&format!(
                    "{listing},{},{},{:.10},{:.6}\n",
                    key.m,
                    key.c,
                    s.g_bar().unwrap_or(f64::NAN),
                    s.slope_at_one()
                ));
            }
            emit(args.out.as_deref(), &csv)?;
        }
        CatalogAction::Show(args) => {
            let s = catalog::lookup(catalog_key(&args)?)?;
            print!("{}", catalog::format_scheme(&s, true));
        }
        CatalogAction::Export { key, out } => {
            let s = catalog::lookup(catalog_key(&key)?)?;
            catalog::save_scheme(&s, &out)?;
        }
    }
    Ok(0)
}

fn cmd_amp_grid(args: AmpGridArgs) -> Result<u8> {
    let scheme = resolve_scheme(&args.scheme)?;
    let grid = srj_core::amplification::amp_grid(&scheme.scheme, parse_range(&args.x)?, parse_range(&args.y)?, args.resolution)?;
    let mut csv = header(&[("scheme", scheme.scheme.label()), ("scheme_source", scheme.source)]);
    csv.push_str("re,im,abs_g\n");
    for (j, &y) in grid.ys.iter().enumerate() {
        for (i, &x) in grid.xs.iter().enumerate() {
            csv.push_str(&format!("{x:e},{y:e},{:e}\n", grid.at(i, j)));
        }
    }
    emit(args.out.as_deref(), &csv)?;
    Ok(0)
}

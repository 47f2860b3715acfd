//! `nonconc`: nonconcentration functionals, diagonal orders, densities,
//! covering estimates, and Radon-like operator checks, with JSON in and out.
//!
//! Exit codes: 0 success, 2 validation or parse error, 3 a verification
//! subcommand found a failing inequality.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use nonconc_core::density::{
    density_infimum, multisystem_density, positivity_criterion, CoordFrame, DensityOpts, VectorNorm,
};
use nonconc_core::diagonal::{order_of_vanishing, DiagonalReport};
use nonconc_core::functionals::{
    chebyshev_set, constant_sweep, int_functional, sup_functional, FunctionalOpts,
};
use nonconc_core::geometry::{build_phi_jacobian, build_phi_wedge, GammaSpec, PhiSpec};
use nonconc_core::hausdorff::{cover_upper, density_comparability_check};
use nonconc_core::radon::{lp_ratio_check, random_rectangle_union, RadonCase, RadonOpts};
use nonconc_core::sets::{Box as WindowBox, MeasureSpec, SetSpec};
use nonconc_core::{Provenance, SCHEMA_VERSION};

#[derive(Parser)]
#[command(name = "nonconc", version, about = "nonconcentration toolkit")]
struct Cli {
    /// Seed for every randomized estimator (falls back to NONCONC_SEED, then 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build Φ from a polynomial family γ.
    Phi(PhiArgs),
    /// Order of vanishing of Φ on the diagonal.
    Ord(OrdArgs),
    /// Density evaluation, positivity, and the multisystem variant.
    Density(DensityArgs),
    /// Nonconcentration functionals over sets and measures.
    Func(FuncArgs),
    /// Covering-based Hausdorff estimates.
    Haus(HausArgs),
    /// Radon-like operator verification.
    Radon(RadonArgs),
    /// Built-in example gallery.
    Gallery(GalleryArgs),
    /// Internal verification suite.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct PhiArgs {
    /// GammaSpec JSON file.
    #[arg(long)]
    gamma: PathBuf,
    /// Construction route.
    #[arg(long, default_value = "jacobian")]
    route: String,
}

#[derive(Args)]
struct OrdArgs {
    /// PhiSpec JSON file.
    #[arg(long)]
    phi: PathBuf,
    /// Freeze the parameter block at this point first.
    #[arg(long)]
    params: Option<String>,
}

#[derive(Args)]
struct DensityArgs {
    #[command(subcommand)]
    action: DensityAction,
}

#[derive(Subcommand)]
enum DensityAction {
    /// Evaluate the density upper estimate at a point.
    Eval(DensityEvalArgs),
    /// Newton-polytope positivity verdict at a point.
    Positivity(DensityEvalArgs),
    /// Restricted multisystem density.
    Multisys(MultisysArgs),
}

#[derive(Args)]
struct DensityEvalArgs {
    #[arg(long)]
    phi: PathBuf,
    /// Comma-separated diagonal point.
    #[arg(long)]
    point: String,
    /// Frozen parameter values, comma-separated.
    #[arg(long)]
    params: Option<String>,
    /// Order of vanishing; computed when omitted.
    #[arg(long)]
    q: Option<u32>,
    /// Optimizer restarts.
    #[arg(long, default_value_t = 64)]
    budget: usize,
    /// Nelder-Mead iterations per restart.
    #[arg(long, default_value_t = 500)]
    iterations: usize,
    /// Sampled orthogonal frames for the positivity criterion.
    #[arg(long, default_value_t = 200)]
    o_samples: usize,
    /// Norm on ℝ^m: max or euclidean.
    #[arg(long, default_value = "max")]
    norm: String,
}

#[derive(Args)]
struct MultisysArgs {
    #[arg(long)]
    phi: PathBuf,
    #[arg(long)]
    point: String,
    /// Exponent s (accepts a/b).
    #[arg(long)]
    s: String,
    /// Per-argument derivative cap N.
    #[arg(long, default_value_t = 2)]
    cap: usize,
    /// Extra coordinate frames, JSON list of CoordFrame.
    #[arg(long)]
    family: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    budget: usize,
    #[arg(long, default_value_t = 300)]
    iterations: usize,
}

#[derive(Args)]
struct FuncArgs {
    #[command(subcommand)]
    action: FuncAction,
}

#[derive(Subcommand)]
enum FuncAction {
    /// Lower bound for sup_{E^k} |Φ|.
    Sup(FuncSupArgs),
    /// Monte Carlo estimate of the integral functional.
    Int(FuncIntArgs),
    /// Constant sweep over a set family.
    Sweep(FuncSweepArgs),
    /// Constructive Chebyshev set on a discrete measure.
    Cheb(FuncChebArgs),
}

#[derive(Args)]
struct FuncSupArgs {
    #[arg(long)]
    phi: PathBuf,
    #[arg(long)]
    set: PathBuf,
    #[arg(long, default_value_t = 200_000)]
    budget: usize,
}

#[derive(Args)]
struct FuncIntArgs {
    #[arg(long)]
    phi: PathBuf,
    #[arg(long)]
    set: PathBuf,
    #[arg(long)]
    measure: PathBuf,
    #[arg(long, default_value_t = 1_000_000)]
    budget: usize,
}

#[derive(Args)]
struct FuncSweepArgs {
    #[arg(long)]
    phi: PathBuf,
    #[arg(long)]
    measure: PathBuf,
    /// JSON list of {label, set}.
    #[arg(long)]
    family: PathBuf,
    /// Exponent s (accepts a/b).
    #[arg(long)]
    s: String,
    #[arg(long, default_value_t = 100_000)]
    budget: usize,
}

#[derive(Args)]
struct FuncChebArgs {
    /// Discrete MeasureSpec JSON file.
    #[arg(long)]
    measure: PathBuf,
    #[arg(long, default_value_t = 2)]
    degree: u32,
    /// Threshold τ (accepts a/b).
    #[arg(long)]
    tau: String,
}

#[derive(Args)]
struct HausArgs {
    #[command(subcommand)]
    action: HausAction,
}

#[derive(Subcommand)]
enum HausAction {
    /// Dyadic covering upper estimate on a box.
    Cover(HausCoverArgs),
    /// Cover vs pointwise-density comparability ratio.
    Compare(HausCompareArgs),
}

#[derive(Args)]
struct HausCoverArgs {
    #[arg(long)]
    phi: PathBuf,
    #[arg(long)]
    sigma: String,
    #[arg(long)]
    lo: String,
    #[arg(long)]
    hi: String,
    #[arg(long, default_value_t = 4)]
    level: u32,
    #[arg(long, default_value_t = 256)]
    budget: usize,
}

#[derive(Args)]
struct HausCompareArgs {
    #[arg(long)]
    phi: PathBuf,
    #[arg(long)]
    q: u32,
    #[arg(long)]
    lo: String,
    #[arg(long)]
    hi: String,
    #[arg(long, default_value_t = 2)]
    level: u32,
}

#[derive(Args)]
struct RadonArgs {
    #[command(subcommand)]
    action: RadonAction,
}

#[derive(Subcommand)]
enum RadonAction {
    /// Verify the L^p ratio table for a case file.
    Check(RadonCheckArgs),
}

#[derive(Args)]
struct RadonCheckArgs {
    /// Case JSON file, or "builtin:line" for the line family.
    #[arg(long)]
    case: String,
    #[arg(long, default_value_t = 12)]
    f_samples: usize,
    #[arg(long, default_value_t = 32)]
    x_grid: usize,
    #[arg(long, default_value_t = 160)]
    quad_n: usize,
    #[arg(long, default_value_t = 20)]
    hypothesis_samples: usize,
}

#[derive(Args)]
struct GalleryArgs {
    #[command(subcommand)]
    action: GalleryAction,
}

#[derive(Subcommand)]
enum GalleryAction {
    /// List registered entries with their documented facts.
    List,
    /// Build one entry and emit its artifact.
    Build(GalleryBuildArgs),
}

#[derive(Args)]
struct GalleryBuildArgs {
    name: String,
    /// Entry parameter (dimension or generator count).
    #[arg(long)]
    param: Option<usize>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Run only the fast identity checks.
    #[arg(long)]
    quick: bool,
}

/// Anything that can stop a run.
enum CliError {
    /// Bad input: exit 2.
    Validation(String),
    /// A verification inequality failed: exit 3.
    CheckFailed(String),
}

impl From<nonconc_core::Error> for CliError {
    fn from(e: nonconc_core::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("io error: {e}"))
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Validation(format!(
            "malformed JSON in {} at line {} column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

fn parse_point(s: &str) -> Result<Vec<f64>, CliError> {
    if s.trim().is_empty() {
        return Ok(vec![]);
    }
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Validation(format!("bad coordinate {p:?}")))
        })
        .collect()
}

/// Parse "a/b" or a float literal into f64.
fn parse_ratio(s: &str) -> Result<f64, CliError> {
    if let Some((num, den)) = s.split_once('/') {
        let n: f64 = num
            .trim()
            .parse()
            .map_err(|_| CliError::Validation(format!("bad numerator {num:?}")))?;
        let d: f64 = den
            .trim()
            .parse()
            .map_err(|_| CliError::Validation(format!("bad denominator {den:?}")))?;
        if d == 0.0 {
            return Err(CliError::Validation("zero denominator".into()));
        }
        Ok(n / d)
    } else {
        s.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Validation(format!("bad number {s:?}")))
    }
}

fn parse_norm(s: &str) -> Result<VectorNorm, CliError> {
    match s {
        "max" => Ok(VectorNorm::Max),
        "euclidean" => Ok(VectorNorm::Euclidean),
        other => Err(CliError::Validation(format!("unknown norm {other:?}"))),
    }
}

fn emit<T: Serialize>(report: &T, output: &Option<PathBuf>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Validation(format!("serialization failed: {e}")))?;
    text.push('\n');
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn resolve_seed(cli_seed: Option<u64>) -> u64 {
    cli_seed
        .or_else(|| {
            std::env::var("NONCONC_SEED")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global();
    }
    let seed = resolve_seed(cli.seed);
    match run(cli.command, seed, &cli.output) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::CheckFailed(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(3)
        }
    }
}

#[derive(Serialize)]
struct PhiReport {
    schema_version: String,
    seed: u64,
    route: String,
    phi: PhiSpec,
}

#[derive(Serialize)]
struct SupReport {
    schema_version: String,
    seed: u64,
    s_estimate: f64,
    samples: usize,
}

#[derive(Serialize)]
struct IntReport {
    schema_version: String,
    seed: u64,
    a_estimate: f64,
    a_stderr: f64,
    samples: usize,
}

#[derive(Serialize)]
struct MultisysReport {
    schema_version: String,
    seed: u64,
    s: f64,
    cap: usize,
    value: f64,
    family_size: usize,
}

fn run(command: Command, seed: u64, output: &Option<PathBuf>) -> Result<(), CliError> {
    match command {
        Command::Phi(args) => {
            let gamma: GammaSpec = read_json(&args.gamma)?;
            gamma.validate()?;
            let phi = match args.route.as_str() {
                "wedge" => build_phi_wedge(&gamma)?,
                "jacobian" => build_phi_jacobian(&gamma)?,
                "graph" => {
                    return Err(CliError::Validation(
                        "graph route needs a gamma0 spec; use the library API".into(),
                    ))
                }
                other => {
                    return Err(CliError::Validation(format!(
                        "unknown route {other:?} (wedge | jacobian)"
                    )))
                }
            };
            emit(
                &PhiReport {
                    schema_version: SCHEMA_VERSION.into(),
                    seed,
                    route: args.route,
                    phi,
                },
                output,
            )
        }
        Command::Ord(args) => {
            let mut phi: PhiSpec = read_json(&args.phi)?;
            if let Some(params) = &args.params {
                let values = parse_point(params)?;
                let rats: Vec<nonconc_core::Rat> = values
                    .iter()
                    .map(|&v| {
                        nonconc_core::Rat::from_float(v)
                            .ok_or_else(|| CliError::Validation("non-finite parameter".into()))
                    })
                    .collect::<Result<_, _>>()?;
                phi = phi.freeze_params(&rats)?;
            }
            let expansion = order_of_vanishing(&phi)?;
            emit(&DiagonalReport::from_expansion(&expansion), output)
        }
        Command::Density(args) => run_density(args, seed, output),
        Command::Func(args) => run_func(args, seed, output),
        Command::Haus(args) => run_haus(args, seed, output),
        Command::Radon(args) => run_radon(args, seed, output),
        Command::Gallery(args) => run_gallery(args, seed, output),
        Command::Selftest(args) => run_selftest(args, seed, output),
    }
}

fn run_density(args: DensityArgs, seed: u64, output: &Option<PathBuf>) -> Result<(), CliError> {
    match args.action {
        DensityAction::Eval(a) => {
            let phi: PhiSpec = read_json(&a.phi)?;
            let point = parse_point(&a.point)?;
            let params = a
                .params
                .as_deref()
                .map(parse_point)
                .transpose()?
                .unwrap_or_default();
            let opts = DensityOpts {
                seed,
                starts: a.budget,
                iterations: a.iterations,
                o_samples: a.o_samples,
                norm: parse_norm(&a.norm)?,
            };
            let report = density_infimum(&phi, a.q, &point, &params, &opts)?;
            emit(&report, output)
        }
        DensityAction::Positivity(a) => {
            let phi: PhiSpec = read_json(&a.phi)?;
            let point = parse_point(&a.point)?;
            let params = a
                .params
                .as_deref()
                .map(parse_point)
                .transpose()?
                .unwrap_or_default();
            let opts = DensityOpts {
                seed,
                starts: a.budget,
                iterations: a.iterations,
                o_samples: a.o_samples,
                norm: parse_norm(&a.norm)?,
            };
            let (verdict, witness) = positivity_criterion(&phi, a.q, &point, &params, &opts)?;
            #[derive(Serialize)]
            struct PositivityReport {
                schema_version: String,
                seed: u64,
                positivity: nonconc_core::density::Positivity,
                #[serde(skip_serializing_if = "Option::is_none")]
                witness: Option<nonconc_core::density::HullWitness>,
                o_samples: usize,
            }
            emit(
                &PositivityReport {
                    schema_version: SCHEMA_VERSION.into(),
                    seed,
                    positivity: verdict,
                    witness,
                    o_samples: opts.o_samples,
                },
                output,
            )
        }
        DensityAction::Multisys(a) => {
            let phi: PhiSpec = read_json(&a.phi)?;
            let point = parse_point(&a.point)?;
            let s = parse_ratio(&a.s)?;
            let family: Vec<CoordFrame> = match &a.family {
                Some(path) => read_json(path)?,
                None => vec![],
            };
            let opts = DensityOpts {
                seed,
                starts: a.budget,
                iterations: a.iterations,
                o_samples: 1,
                norm: VectorNorm::Max,
            };
            let value = multisystem_density(&phi, s, a.cap, &family, &point, &opts)?;
            emit(
                &MultisysReport {
                    schema_version: SCHEMA_VERSION.into(),
                    seed,
                    s,
                    cap: a.cap,
                    value,
                    family_size: family.len() + 1,
                },
                output,
            )
        }
    }
}

fn run_func(args: FuncArgs, seed: u64, output: &Option<PathBuf>) -> Result<(), CliError> {
    match args.action {
        FuncAction::Sup(a) => {
            let phi: PhiSpec = read_json(&a.phi)?;
            let set: SetSpec = read_json(&a.set)?;
            let opts = FunctionalOpts {
                seed,
                sup_budget: a.budget,
                ..Default::default()
            };
            let s = sup_functional(&phi, &set, &opts)?;
            emit(
                &SupReport {
                    schema_version: SCHEMA_VERSION.into(),
                    seed,
                    s_estimate: s,
                    samples: a.budget,
                },
                output,
            )
        }
        FuncAction::Int(a) => {
            let phi: PhiSpec = read_json(&a.phi)?;
            let set: SetSpec = read_json(&a.set)?;
            let measure: MeasureSpec = read_json(&a.measure)?;
            let opts = FunctionalOpts {
                seed,
                int_budget: a.budget,
                ..Default::default()
            };
            let (est, err) = int_functional(&phi, &measure, &set, &opts)?;
            emit(
                &IntReport {
                    schema_version: SCHEMA_VERSION.into(),
                    seed,
                    a_estimate: est,
                    a_stderr: err,
                    samples: a.budget,
                },
                output,
            )
        }
        FuncAction::Sweep(a) => {
            let phi: PhiSpec = read_json(&a.phi)?;
            let measure: MeasureSpec = read_json(&a.measure)?;
            #[derive(serde::Deserialize)]
            struct FamilyEntry {
                label: String,
                set: SetSpec,
            }
            let family: Vec<FamilyEntry> = read_json(&a.family)?;
            let family: Vec<(String, SetSpec)> =
                family.into_iter().map(|f| (f.label, f.set)).collect();
            let s = parse_ratio(&a.s)?;
            let opts = FunctionalOpts {
                seed,
                sup_budget: a.budget,
                int_budget: a.budget * 5,
                ..Default::default()
            };
            let table = constant_sweep(&phi, &measure, &family, s, &opts)?;
            emit(&table, output)
        }
        FuncAction::Cheb(a) => {
            let measure: MeasureSpec = read_json(&a.measure)?;
            let MeasureSpec::Discrete { points, weights } = measure else {
                return Err(CliError::Validation(
                    "chebyshev needs a discrete measure".into(),
                ));
            };
            let tau = parse_ratio(&a.tau)?;
            let cheb = chebyshev_set(&points, &weights, a.degree, tau, seed)?;
            if !cheb.verified {
                emit(&cheb, output)?;
                return Err(CliError::CheckFailed(
                    "chebyshev verification failed".into(),
                ));
            }
            emit(&cheb, output)
        }
    }
}

fn run_haus(args: HausArgs, seed: u64, output: &Option<PathBuf>) -> Result<(), CliError> {
    match args.action {
        HausAction::Cover(a) => {
            let phi: PhiSpec = read_json(&a.phi)?;
            let e = WindowBox::new(parse_point(&a.lo)?, parse_point(&a.hi)?)?;
            let sigma = parse_ratio(&a.sigma)?;
            let opts = FunctionalOpts {
                seed,
                sup_budget: a.budget,
                shards: 1,
                ..Default::default()
            };
            let est = cover_upper(&phi, sigma, &e, a.level, &opts)?;
            emit(&est, output)
        }
        HausAction::Compare(a) => {
            let phi: PhiSpec = read_json(&a.phi)?;
            let e = WindowBox::new(parse_point(&a.lo)?, parse_point(&a.hi)?)?;
            let opts = FunctionalOpts {
                seed,
                sup_budget: 256,
                shards: 1,
                ..Default::default()
            };
            let d_opts = DensityOpts {
                seed,
                starts: 8,
                iterations: 200,
                o_samples: 8,
                ..Default::default()
            };
            let rep = density_comparability_check(&phi, a.q, &e, a.level, &opts, &d_opts)?;
            emit(&rep, output)
        }
    }
}

fn run_radon(args: RadonArgs, seed: u64, output: &Option<PathBuf>) -> Result<(), CliError> {
    match args.action {
        RadonAction::Check(a) => {
            let case: RadonCase = if a.case == "builtin:line" {
                nonconc_core::radon::line_family_case()
            } else {
                read_json(Path::new(&a.case))?
            };
            let mut rng = nonconc_core::rng::seeded(seed);
            let mut family = Vec::new();
            for i in 0..a.f_samples {
                family.push((
                    format!("f-{i}"),
                    random_rectangle_union(&WindowBox::unit(case.gamma.n1), 4, &mut rng),
                ));
            }
            let opts = RadonOpts {
                seed,
                x_grid: a.x_grid,
                quad_n: a.quad_n,
                hypothesis_samples: a.hypothesis_samples,
                int_budget: 40_000,
            };
            let report = lp_ratio_check(&case, &family, &opts)?;
            let pass = report.pass;
            emit(&report, output)?;
            if !pass {
                return Err(CliError::CheckFailed(format!(
                    "max rho {} vs cap {}, hypothesis failures {}",
                    report.max_rho, report.rho_cap, report.hypothesis_failures
                )));
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct GalleryBuildReport {
    schema_version: String,
    seed: u64,
    name: String,
    facts: Vec<nonconc_core::gallery::ExpectedFact>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi: Option<PhiSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<GammaSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matrices: Option<Vec<Vec<Vec<String>>>>,
}

fn run_gallery(args: GalleryArgs, seed: u64, output: &Option<PathBuf>) -> Result<(), CliError> {
    use nonconc_core::gallery;
    match args.action {
        GalleryAction::List => {
            #[derive(Serialize)]
            struct ListReport {
                schema_version: String,
                entries: Vec<gallery::GalleryEntry>,
            }
            emit(
                &ListReport {
                    schema_version: SCHEMA_VERSION.into(),
                    entries: gallery::registry(),
                },
                output,
            )
        }
        GalleryAction::Build(b) => {
            let entry = gallery::registry()
                .into_iter()
                .find(|e| e.name == b.name)
                .ok_or_else(|| CliError::Validation(format!("unknown entry {:?}", b.name)))?;
            let mut report = GalleryBuildReport {
                schema_version: SCHEMA_VERSION.into(),
                seed,
                name: entry.name.clone(),
                facts: entry.facts.clone(),
                phi: None,
                gamma: None,
                matrices: None,
            };
            match b.name.as_str() {
                "hausdorff-identity" => {
                    let n = b.param.unwrap_or(1);
                    report.phi = Some(gallery::phi_hausdorff(&gallery::identity_curve(n))?);
                }
                "determinantal" => {
                    report.phi = Some(gallery::phi_determinantal(b.param.unwrap_or(2))?);
                }
                "square-difference" => report.phi = Some(gallery::phi_square_difference()?),
                "mixed-degenerate" => report.phi = Some(gallery::phi_mixed_degenerate()?),
                "affine-parabola" => {
                    report.phi = Some(gallery::phi_affine(&gallery::parabola_curve(), 3)?);
                }
                "clifford" => {
                    let l = b.param.unwrap_or(2);
                    let ms = gallery::clifford_matrices(l)?;
                    report.matrices = Some(
                        ms.iter()
                            .map(|m| {
                                (0..m.nrows())
                                    .map(|i| {
                                        (0..m.ncols()).map(|j| m.get(i, j).to_string()).collect()
                                    })
                                    .collect()
                            })
                            .collect(),
                    );
                }
                "quadratic-identity" => {
                    let n = b.param.unwrap_or(2);
                    report.phi = Some(gallery::phi_quadratic(&gallery::identity_q(n))?);
                }
                "line-family" => report.gamma = Some(gallery::line_family()),
                other => {
                    return Err(CliError::Validation(format!(
                        "no builder wired for {other:?}"
                    )))
                }
            }
            emit(&report, output)
        }
    }
}

#[derive(Serialize)]
struct SelftestCheck {
    name: String,
    provenance: Provenance,
    pass: bool,
    detail: String,
}

#[derive(Serialize)]
struct SelftestReport {
    schema_version: String,
    seed: u64,
    quick: bool,
    checks: Vec<SelftestCheck>,
    passed: usize,
    failed: usize,
}

fn run_selftest(args: SelftestArgs, seed: u64, output: &Option<PathBuf>) -> Result<(), CliError> {
    use nonconc_core::gallery;
    let mut checks: Vec<SelftestCheck> = Vec::new();
    let mut push = |name: &str, provenance: Provenance, result: Result<String, String>| {
        let (pass, detail) = match result {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        checks.push(SelftestCheck {
            name: name.into(),
            provenance,
            pass,
            detail,
        });
    };

    // trivial suite
    push(
        "poly-cancellation",
        Provenance::Trivial,
        (|| -> Result<String, String> {
            let x = nonconc_core::Polynomial::var(2, 0);
            let y = nonconc_core::Polynomial::var(2, 1);
            let sum = &(&x + &y) + &(&x - &y);
            if sum == x.scale(&nonconc_core::poly::rat_int(2)) {
                Ok("(x+y)+(x−y) = 2x".into())
            } else {
                Err("polynomial cancellation failed".into())
            }
        })(),
    );
    push(
        "line-family-omega",
        Provenance::Derived,
        (|| -> Result<String, String> {
            let omega = nonconc_core::geometry::build_omega(&gallery::line_family())
                .map_err(|e| e.to_string())?;
            if omega.coefficients.len() == 2 {
                Ok("ω = −dx1 − t·dx2".into())
            } else {
                Err(format!("unexpected ω support {}", omega.coefficients.len()))
            }
        })(),
    );
    push(
        "wedge-equals-jacobian",
        Provenance::Derived,
        (|| -> Result<String, String> {
            let g = gallery::line_family();
            let w = build_phi_wedge(&g).map_err(|e| e.to_string())?;
            let j = build_phi_jacobian(&g).map_err(|e| e.to_string())?;
            if w.body == j.body {
                Ok("exact equality on the line family".into())
            } else {
                Err("wedge and Jacobian routes disagree".into())
            }
        })(),
    );
    push(
        "order-difference-map",
        Provenance::Paper,
        (|| -> Result<String, String> {
            let phi =
                gallery::phi_hausdorff(&gallery::identity_curve(1)).map_err(|e| e.to_string())?;
            let e = order_of_vanishing(&phi).map_err(|e| e.to_string())?;
            if e.q == 1 {
                Ok("q = 1".into())
            } else {
                Err(format!("q = {}", e.q))
            }
        })(),
    );
    push(
        "clifford-relations",
        Provenance::Trivial,
        (|| -> Result<String, String> {
            let ms = gallery::clifford_matrices(1).map_err(|e| e.to_string())?;
            let sq = ms[0].mul(&ms[0]).map_err(|e| e.to_string())?;
            if sq == nonconc_core::matrix::RatMat::identity(2) {
                Ok("M1² = I".into())
            } else {
                Err("generator relation failed".into())
            }
        })(),
    );
    push(
        "sup-single-point",
        Provenance::Trivial,
        (|| -> Result<String, String> {
            let phi =
                gallery::phi_hausdorff(&gallery::identity_curve(1)).map_err(|e| e.to_string())?;
            let e = SetSpec::Box {
                lo: vec![0.5],
                hi: vec![0.5],
            };
            let opts = FunctionalOpts {
                seed,
                sup_budget: 256,
                shards: 1,
                ..Default::default()
            };
            let s = sup_functional(&phi, &e, &opts).map_err(|e| e.to_string())?;
            if s == 0.0 {
                Ok("S({pt}) = 0".into())
            } else {
                Err(format!("S = {s}"))
            }
        })(),
    );

    if !args.quick {
        push(
            "order-determinantal",
            Provenance::Paper,
            (|| -> Result<String, String> {
                let phi = gallery::phi_determinantal(2).map_err(|e| e.to_string())?;
                let e = order_of_vanishing(&phi).map_err(|e| e.to_string())?;
                if e.q == 2 {
                    Ok("q = 2 for det(A1−A2) on 2x2".into())
                } else {
                    Err(format!("q = {}", e.q))
                }
            })(),
        );
        push(
            "order-mixed-degenerate",
            Provenance::Derived,
            (|| -> Result<String, String> {
                let phi = gallery::phi_mixed_degenerate().map_err(|e| e.to_string())?;
                let e = order_of_vanishing(&phi).map_err(|e| e.to_string())?;
                if e.q == 2 {
                    Ok("q = 2".into())
                } else {
                    Err(format!("q = {}", e.q))
                }
            })(),
        );
        push(
            "clifford-identity-l2",
            Provenance::Paper,
            (|| -> Result<String, String> {
                let ms = gallery::clifford_matrices(2).map_err(|e| e.to_string())?;
                let a1 = nonconc_core::poly::rat(3, 2);
                let a2 = nonconc_core::poly::rat(-1, 3);
                let mut combo = nonconc_core::matrix::RatMat::zero(4, 4);
                for i in 0..4 {
                    for j in 0..4 {
                        combo.set(i, j, ms[0].get(i, j) * &a1 + ms[1].get(i, j) * &a2);
                    }
                }
                let det = combo.det().map_err(|e| e.to_string())?;
                let norm = &a1 * &a1 + &a2 * &a2;
                if &det * &det == (&norm * &norm) * (&norm * &norm) {
                    Ok("det(a1M1+a2M2)² = (a1²+a2²)⁴".into())
                } else {
                    Err("clifford determinant identity failed".into())
                }
            })(),
        );
        push(
            "positivity-square-difference",
            Provenance::Derived,
            (|| -> Result<String, String> {
                let phi = gallery::phi_square_difference().map_err(|e| e.to_string())?;
                let opts = DensityOpts {
                    seed,
                    starts: 8,
                    iterations: 200,
                    o_samples: 24,
                    ..Default::default()
                };
                let (verdict, _) = positivity_criterion(&phi, Some(2), &[0.0, 0.0], &[], &opts)
                    .map_err(|e| e.to_string())?;
                if verdict == nonconc_core::density::Positivity::Zero {
                    Ok("zero with separating witness".into())
                } else {
                    Err(format!("verdict {verdict:?}"))
                }
            })(),
        );
        push(
            "integral-one-third",
            Provenance::Derived,
            (|| -> Result<String, String> {
                let phi = gallery::phi_hausdorff(&gallery::identity_curve(1))
                    .map_err(|e| e.to_string())?;
                let e = SetSpec::Box {
                    lo: vec![0.0],
                    hi: vec![1.0],
                };
                let mu = MeasureSpec::Lebesgue { support: e.clone() };
                let opts = FunctionalOpts {
                    seed,
                    int_budget: 200_000,
                    ..Default::default()
                };
                let (est, err) = int_functional(&phi, &mu, &e, &opts).map_err(|e| e.to_string())?;
                if (est - 1.0 / 3.0).abs() <= 3.0 * err + 1e-3 {
                    Ok(format!("∫∫|x−y| = {est:.5} ± {err:.5}"))
                } else {
                    Err(format!("estimate {est} ± {err} vs 1/3"))
                }
            })(),
        );
    }

    let passed = checks.iter().filter(|c| c.pass).count();
    let failed = checks.len() - passed;
    let report = SelftestReport {
        schema_version: SCHEMA_VERSION.into(),
        seed,
        quick: args.quick,
        checks,
        passed,
        failed,
    };
    emit(&report, output)?;
    if failed > 0 {
        return Err(CliError::CheckFailed(format!("{failed} selftest failures")));
    }
    Ok(())
}

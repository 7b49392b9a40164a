//! Command-line front end: argument handling, the subcommands and exit codes
//! (0 ok, 1 acceptance failure, 2 usage or configuration, 3 numerical failure).

pub mod output;
pub mod parse;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use std::path::PathBuf;

use slspectra::nevanlinna::{asymptotics, Slope};
use slspectra::problem::presets;
use slspectra::propagator::{phi_initial, propagate, psi_initial};
use slspectra::spectral::default_eps_schedule;
use slspectra::transform::{fourier_transform, reconstruct, spectral_function_for, uniform_convergence_profile};
use slspectra::verify::{run_all, VerifyOptions};
use slspectra::{
    build_spectral_function, classify_bc, find_eigenvalues, load_config, m_function, BoundaryParam, EtaRelation,
    SLProblem,
};

use output::{config_hash, num, result_args, OutDir};
use parse::{parse_complex, parse_function, parse_range, parse_schedule, parse_table, parse_window, FunctionArg};

#[derive(Debug, Parser)]
#[command(name = "slspectra", version, about = "Spectral functions of Sturm-Liouville problems with degenerating weight")]
pub struct Cli {
    /// Problem configuration (TOML). Defaults to -y'' = λy on [0, 1] with y'(0) = 0.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// ODE tolerance, overriding the configuration.
    #[arg(long, global = true)]
    pub ode_tol: Option<f64>,
    /// Quadrature tolerance (relative; absolute is 1/100 of it), overriding the configuration.
    #[arg(long, global = true)]
    pub quad_tol: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Real poles of the m-function in a range.
    Eig(EigArgs),
    /// Evaluate the m-function at one λ.
    Mfun(MfunArgs),
    /// Spectral function on a window: ac density and point masses.
    Spectral(SpectralArgs),
    /// Truncated inverse transforms of a test function along a schedule.
    Expand(ExpandArgs),
    /// Boundary-condition class of a boundary parameter.
    Classify(TauArg),
    /// Run the built-in acceptance suite.
    VerifyExample(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct TauArg {
    /// constant:θ | infinity | sqrt | lambda | mobius:a,b,c,d (default: the config's [boundary] tau)
    #[arg(long)]
    pub tau: Option<String>,
}

#[derive(Debug, Args)]
pub struct EigArgs {
    #[command(flatten)]
    pub tau: TauArg,
    /// LO..HI
    #[arg(long, allow_hyphen_values = true)]
    pub range: String,
    /// Keep at most this many.
    #[arg(long)]
    pub max: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MfunArgs {
    #[command(flatten)]
    pub tau: TauArg,
    /// e.g. -1, 2i, 1+2i, (1,2)
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: String,
    /// Also dump φ and ψ at the integrator's steps.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct SpectralArgs {
    #[command(flatten)]
    pub tau: TauArg,
    /// LO,HI
    #[arg(long, allow_hyphen_values = true)]
    pub window: String,
    /// Number of ac grid cells.
    #[arg(long, default_value_t = 64)]
    pub nodes: usize,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    #[command(flatten)]
    pub tau: TauArg,
    /// one | zero | quartic | square | cos:W | poly:C0,C1,... | table:PATH
    #[arg(long)]
    pub y: String,
    /// K:LO..HI,K:LO..HI,... (nested)
    #[arg(long, allow_hyphen_values = true)]
    pub schedule: String,
    /// Number of ac grid cells on the widest window.
    #[arg(long, default_value_t = 400)]
    pub nodes: usize,
    /// Points of the uniform t-grid.
    #[arg(long, default_value_t = 101)]
    pub t_points: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Point masses kept in the uniform-convergence schedule.
    #[arg(long, default_value_t = 40)]
    pub k_max: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] slspectra::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl From<parse::ParseError> for CliError {
    fn from(e: parse::ParseError) -> Self {
        CliError::Usage(e.0)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if !e.is_input_error() => 3,
            _ => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

struct Ctx {
    problem: SLProblem,
    config_tau: Option<String>,
    config_text: String,
}

impl Ctx {
    fn tau(&self, arg: &TauArg) -> CliResult<BoundaryParam> {
        let spec = arg
            .tau
            .as_deref()
            .or(self.config_tau.as_deref())
            .ok_or_else(|| CliError::Usage("no boundary parameter: pass --tau or set [boundary] tau".into()))?;
        Ok(BoundaryParam::parse(spec)?)
    }
}

fn context(cli: &Cli) -> CliResult<Ctx> {
    let (problem, config_tau, config_text) = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            let cfg = load_config(&text)?;
            (cfg.problem, cfg.tau, text)
        }
        None => (presets::unit_interval(), None, String::from("builtin:unit_interval")),
    };
    let mut q = *problem.quad();
    if let Some(t) = cli.ode_tol {
        q.ode_tol = t;
    }
    if let Some(t) = cli.quad_tol {
        q.rel_tol = t;
        q.abs_tol = t / 100.0;
    }
    let problem = problem.with_quad(q)?;
    Ok(Ctx {
        problem,
        config_tau,
        config_text,
    })
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let raw: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&raw) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let raw: Vec<String> = raw.iter().map(|s| s.to_string_lossy().into_owned()).collect();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return 2;
        }
        // Fails only if a pool already exists (in-process reruns); keep that one.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(&cli, &raw) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, raw: &[String]) -> CliResult<i32> {
    if let Command::VerifyExample(a) = &cli.command {
        return verify_example(cli, a, raw);
    }
    let ctx = context(cli)?;
    let hash = config_hash(&ctx.config_text, &result_args(raw));
    let mut out = OutDir::create(&cli.out)?;
    let name = match &cli.command {
        Command::Eig(a) => {
            eig(&ctx, a, &mut out)?;
            "eig"
        }
        Command::Mfun(a) => {
            mfun(&ctx, a, &mut out)?;
            "mfun"
        }
        Command::Spectral(a) => {
            spectral(&ctx, a, &mut out)?;
            "spectral"
        }
        Command::Expand(a) => {
            expand(&ctx, a, &mut out)?;
            "expand"
        }
        Command::Classify(a) => {
            classify(&ctx, a, &mut out)?;
            "classify"
        }
        Command::VerifyExample(_) => unreachable!(),
    };
    out.finish(name, hash)?;
    Ok(0)
}

#[derive(Serialize)]
struct ComplexOut {
    re: String,
    im: String,
}

impl From<Complex64> for ComplexOut {
    fn from(z: Complex64) -> Self {
        ComplexOut {
            re: num(z.re),
            im: num(z.im),
        }
    }
}

fn show(z: Complex64) -> String {
    if z.im.is_sign_negative() {
        format!("{} - {}i", z.re, -z.im)
    } else {
        format!("{} + {}i", z.re, z.im)
    }
}

fn eig(ctx: &Ctx, a: &EigArgs, out: &mut OutDir) -> CliResult<()> {
    let tau = ctx.tau(&a.tau)?;
    let range = parse_range(&a.range)?;
    let ev = find_eigenvalues(&ctx.problem, &tau, range, a.max.unwrap_or(usize::MAX))?;
    let rows: Vec<Vec<String>> = ev
        .iter()
        .enumerate()
        .map(|(k, &l)| vec![(k + 1).to_string(), num(l)])
        .collect();
    println!("k,lambda");
    for r in &rows {
        println!("{}", r.join(","));
    }
    out.table("eig.csv", &["k", "lambda"], &rows)?;
    Ok(())
}

fn mfun(ctx: &Ctx, a: &MfunArgs, out: &mut OutDir) -> CliResult<()> {
    let tau = ctx.tau(&a.tau)?;
    let lam = parse_complex(&a.lambda)?;
    let m = m_function(&ctx.problem, &tau, lam)?;
    println!("{}", show(m));
    #[derive(Serialize)]
    struct Doc {
        tau: String,
        lambda: ComplexOut,
        m: ComplexOut,
    }
    out.json(
        "mfun.json",
        &Doc {
            tau: tau.name(),
            lambda: lam.into(),
            m: m.into(),
        },
    )?;
    if a.trace {
        let p = &ctx.problem;
        for (name, init) in [("trace_phi.csv", phi_initial(p.alpha())), ("trace_psi.csv", psi_initial(p.alpha()))] {
            let tr = propagate(p, lam, init)?;
            let rows: Vec<Vec<String>> = tr
                .nodes()
                .iter()
                .map(|(t, s)| vec![num(*t), num(s.y.re), num(s.y.im), num(s.y1.re), num(s.y1.im)])
                .collect();
            out.table(name, &["t", "re_y", "im_y", "re_y1", "im_y1"], &rows)?;
        }
    }
    Ok(())
}

fn spectral(ctx: &Ctx, a: &SpectralArgs, out: &mut OutDir) -> CliResult<()> {
    let tau = ctx.tau(&a.tau)?;
    let window = parse_window(&a.window)?;
    let sf = build_spectral_function(&ctx.problem, &tau, window, a.nodes, &default_eps_schedule())?;
    let total_ac: f64 = sf.ac.iter().map(|n| n.rho * sf.weight(n)).sum();
    let total_masses: f64 = sf.masses.iter().map(|m| m.1).sum();
    #[derive(Serialize)]
    struct Doc {
        tau: String,
        window: [String; 2],
        ac: Vec<[String; 2]>,
        masses: Vec<[String; 2]>,
        total_ac: String,
        total_masses: String,
    }
    let doc = Doc {
        tau: tau.name(),
        window: [num(window.0), num(window.1)],
        ac: sf.ac.iter().map(|n| [num(n.u), num(n.rho)]).collect(),
        masses: sf.masses.iter().map(|m| [num(m.0), num(m.1)]).collect(),
        total_ac: num(total_ac),
        total_masses: num(total_masses),
    };
    out.json("spectral.json", &doc)?;
    let ac_rows: Vec<Vec<String>> = sf
        .ac
        .iter()
        .map(|n| vec![num(n.u), num(n.w), num(n.dw), num(n.rho)])
        .collect();
    out.table("spectral_ac.csv", &["u", "w", "dw", "rho"], &ac_rows)?;
    let m_rows: Vec<Vec<String>> = sf.masses.iter().map(|m| vec![num(m.0), num(m.1)]).collect();
    out.table("spectral_masses.csv", &["s", "jump"], &m_rows)?;
    println!(
        "{} point masses (total {}), ac mass {} on {} nodes",
        sf.masses.len(),
        total_masses + 0.0,
        total_ac + 0.0,
        sf.ac.len()
    );
    Ok(())
}

fn expand(ctx: &Ctx, a: &ExpandArgs, out: &mut OutDir) -> CliResult<()> {
    let tau = ctx.tau(&a.tau)?;
    let y = match parse_function(&a.y)? {
        FunctionArg::Spec(s) => s,
        FunctionArg::TablePath(p) => {
            let text =
                std::fs::read_to_string(&p).map_err(|e| CliError::Usage(format!("cannot read {p}: {e}")))?;
            parse_table(&text)?
        }
    };
    let sched = parse_schedule(&a.schedule)?;
    if a.t_points < 2 {
        return Err(CliError::Usage("--t-points must be at least 2".into()));
    }
    let p = &ctx.problem;
    let t_grid: Vec<f64> = (0..a.t_points)
        .map(|i| p.a() + (p.b() - p.a()) * i as f64 / (a.t_points - 1) as f64)
        .collect();
    let sigma = spectral_function_for(p, &tau, &sched, a.nodes, &default_eps_schedule())?;
    let f = |t: f64| Complex64::new(y.eval(t), 0.0);
    let yhat = fourier_transform(p, f, &sigma)?;
    let report = uniform_convergence_profile(p, &sigma, &yhat, f, &sched, &t_grid)?;
    let rec = reconstruct(p, &sigma, &yhat, &t_grid, &sched)?;
    for (i, vals) in rec.iter().enumerate() {
        let rows: Vec<Vec<String>> = vals
            .iter()
            .zip(&t_grid)
            .map(|(v, &t)| {
                let truth = y.eval(t);
                vec![num(t), num(truth), num(v.value.re), num((Complex64::new(truth, 0.0) - v.value).norm())]
            })
            .collect();
        out.table(
            &format!("expand_{i}.csv"),
            &["t", "y_true", "y_reconstructed", "abs_error"],
            &rows,
        )?;
    }
    #[derive(Serialize)]
    struct Entry {
        truncation: String,
        k_max: usize,
        ac_window: [String; 2],
        sup_error: String,
        max_bound: String,
    }
    #[derive(Serialize)]
    struct Doc {
        tau: String,
        truncations: Vec<Entry>,
        monotone_tail: bool,
    }
    let doc = Doc {
        tau: tau.name(),
        truncations: report
            .truncations
            .iter()
            .zip(&sched)
            .zip(&rec)
            .map(|(((d, e), tr), vals)| Entry {
                truncation: d.clone(),
                k_max: tr.k_max,
                ac_window: [num(tr.ac_window.0), num(tr.ac_window.1)],
                sup_error: num(*e),
                max_bound: num(vals.iter().map(|v| v.bound).fold(0.0, f64::max)),
            })
            .collect(),
        monotone_tail: report.monotone_tail,
    };
    out.json("expand.json", &doc)?;
    for (d, e) in &report.truncations {
        println!("{d}: sup error {e:e}");
    }
    Ok(())
}

fn classify(ctx: &Ctx, a: &TauArg, out: &mut OutDir) -> CliResult<()> {
    let tau = ctx.tau(a)?;
    let class = classify_bc(&tau)?;
    let eta = slspectra::eta_relation(&tau)?;
    #[derive(Serialize)]
    #[allow(non_snake_case)]
    struct Doc {
        tau: String,
        class: String,
        B: serde_json::Value,
        moment_finite: Option<bool>,
        D: Option<f64>,
        eta: &'static str,
    }
    let (b, moment) = match tau {
        BoundaryParam::Infinity => (serde_json::Value::Null, None),
        _ => {
            let asy = asymptotics(&tau)?;
            let b = match asy.b {
                Slope::Value(v) => serde_json::json!(v),
                Slope::NonzeroUnresolved => serde_json::json!("nonzero_unresolved"),
            };
            (b, Some(asy.moment_finite))
        }
    };
    let doc = Doc {
        tau: tau.name(),
        class: class.label.to_string(),
        B: b,
        moment_finite: moment,
        D: class.d_tau,
        eta: match eta {
            EtaRelation::FullRange => "full_range",
            EtaRelation::Graph { .. } => "graph",
            EtaRelation::Zero => "zero",
        },
    };
    println!("{}", serde_json::to_string(&doc).map_err(std::io::Error::from)?);
    out.json("classify.json", &doc)?;
    Ok(())
}

fn verify_example(cli: &Cli, a: &VerifyArgs, raw: &[String]) -> CliResult<i32> {
    let mut opts = VerifyOptions {
        k_max: a.k_max,
        ..VerifyOptions::default()
    };
    if let Some(t) = cli.ode_tol {
        opts.ode_tol = t;
    }
    opts.quad_tol = cli.quad_tol;
    opts.quad().validate()?;
    let hash = config_hash("builtin:verify-example", &result_args(raw));
    let mut out = OutDir::create(&cli.out)?;
    let results = run_all(&opts);
    for r in &results {
        println!("{r}");
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed}/{} criteria passed", results.len());
    out.json("verify.json", &results)?;
    out.finish("verify-example", hash)?;
    Ok(if passed == results.len() { 0 } else { 1 })
}

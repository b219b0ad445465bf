//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::expr::{parse_map_file, parse_map_with_dimension, ExprError, PolynomialMap, VarConvention};
use crate::fan::{simple_fan, simplicial_fan, validate_fan, Fan, FanError, RayTag};
use crate::geometry::NewtonPolyhedron;
use crate::nondegen::{
    check_compatibility, estimate_z_nonempty, falsify_nondegeneracy, find_compatible_homothety, verdict_json,
    SearchOptions, Verdict,
};
use crate::poles::{self, render_q, Mode, PoleError};
use crate::verify::{self, default_alphas};

pub const DEFAULT_SEED: u64 = 0xA11CE;
pub const THREADS_ENV: &str = "ARCHI_POLES_THREADS";

#[derive(Debug, Parser)]
#[command(name = "archi-poles", version, about = "Newton polyhedra and candidate poles of local zeta functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full pipeline: polyhedron, fans, poles, verdicts and a volume check.
    Analyze(AnalyzeArgs),
    /// Candidate poles with order bounds.
    Poles(PolesArgs),
    /// Simplicial or simple fan subordinated to the Newton polyhedron.
    Fan(FanArgs),
    /// Randomized non-degeneracy or compatibility checks.
    Check(CheckArgs),
    /// Exact monomial oracle and Monte Carlo estimates.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Components separated by `;`, e.g. "x^2 - y^3; x^2 - z^3".
    #[arg(long, conflicts_with = "file", required_unless_present = "file")]
    pub map: Option<String>,
    /// File with `n = ...` and `f1 = ...` lines.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Number of variables; defaults to the largest index used.
    #[arg(long)]
    pub n: Option<usize>,
    /// Variable naming; detected from the input by default.
    #[arg(long, value_enum)]
    pub vars: Option<VarsArg>,
    /// Emit JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VarsArg {
    Indexed,
    Named,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Full,
    Sharp,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum ZArg {
    Auto,
    True,
    False,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 64)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub root_tol: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub rank_tol: f64,
}

impl SearchArgs {
    fn options(&self) -> SearchOptions {
        SearchOptions {
            trials: self.trials.max(1),
            root_tol: self.root_tol,
            rank_tol: self.rank_tol,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct PolesArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "sharp")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 10)]
    pub kmax: usize,
    /// Whether f has zeros on the torus near the origin.
    #[arg(long, value_enum, default_value = "auto")]
    pub z_nonempty: ZArg,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args)]
pub struct FanArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Refine to a simple (unimodular) fan.
    #[arg(long)]
    pub simple: bool,
    /// Validate the fan axioms on this many random points.
    #[arg(long)]
    pub validate: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CheckKind {
    Nondegen,
    Compat,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(value_enum)]
    pub kind: CheckKind,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Use the exact criterion when n = l = 2.
    #[arg(long)]
    pub exact2d: bool,
    /// Check against the simple fan instead of the simplicial one.
    #[arg(long)]
    pub simple: bool,
    /// Search for a compatible homothety with this many attempts.
    #[arg(long)]
    pub homothety: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VerifyKind {
    Oracle,
    Volume,
    Integral,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub kind: VerifyKind,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Side of the box [0, eps]^n.
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    /// Sublevel thresholds, decreasing; half-decades from 1e-1 to 1e-4 by default.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alphas: Option<Vec<f64>>,
    /// Exponents for the integral estimate.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-0.5")]
    pub s: Vec<f64>,
    /// Emit CSV instead of text.
    #[arg(long, conflicts_with = "json")]
    pub csv: bool,
    /// Write two-column plot data to this file.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 10)]
    pub kmax: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, value_enum, default_value = "auto")]
    pub z_nonempty: ZArg,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl From<ExprError> for CliError {
    fn from(e: ExprError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<crate::geometry::GeometryError> for CliError {
    fn from(e: crate::geometry::GeometryError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<PoleError> for CliError {
    fn from(e: PoleError) -> Self {
        match e {
            PoleError::NotSimple => CliError::Internal(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<FanError> for CliError {
    fn from(e: FanError) -> Self {
        match e {
            FanError::Invariant(m) => CliError::Internal(m),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<verify::VerifyError> for CliError {
    fn from(e: verify::VerifyError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

struct Input {
    text: String,
    f: PolynomialMap,
    conv: VarConvention,
    gamma: NewtonPolyhedron,
}

fn load(args: &InputArgs) -> Result<Input, CliError> {
    let (text, f, conv) = match (&args.map, &args.file) {
        (Some(m), _) => {
            let conv = match args.vars {
                Some(VarsArg::Indexed) => VarConvention::Indexed,
                Some(VarsArg::Named) => VarConvention::Named,
                None => VarConvention::detect(m),
            };
            (m.clone(), parse_map_with_dimension(m, conv, args.n)?, conv)
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let (f, conv) = parse_map_file(&text)?;
            (text, f, conv)
        }
        (None, None) => return Err(CliError::Input("one of --map or --file is required".into())),
    };
    let gamma = NewtonPolyhedron::of_map(&f)?;
    Ok(Input { text, f, conv, gamma })
}

fn z_flag(arg: ZArg, input: &Input, opts: &SearchOptions) -> (bool, String) {
    match arg {
        ZArg::True => (true, "user-supplied".into()),
        ZArg::False => (false, "user-supplied".into()),
        ZArg::Auto => (
            estimate_z_nonempty(&input.f, &input.gamma, opts),
            format!(
                "estimated from real torus zeros of face restrictions (trials {}, seed {})",
                opts.trials, opts.seed
            ),
        ),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Internal(e.to_string()))
}

fn print_json(out: &mut dyn Write, v: &Value) -> Result<(), CliError> {
    writeln!(out, "{}", serde_json::to_string_pretty(v).map_err(|e| CliError::Internal(e.to_string()))?)?;
    Ok(())
}

fn fmt_vec(v: &[i64]) -> String {
    let parts: Vec<String> = v.iter().map(i64::to_string).collect();
    format!("({})", parts.join(","))
}

fn poles_text(out: &mut dyn Write, rep: &poles::PolesReport) -> Result<(), CliError> {
    writeln!(out, "gamma0 = {}", rep.gamma0)?;
    let origin = match &rep.lct.attained_by {
        poles::DataOrigin::Ray(r) => format!("ray {}", fmt_vec(r)),
        poles::DataOrigin::Exceptional => "exceptional divisor".to_string(),
    };
    writeln!(out, "lct candidate = {} ({origin})", rep.lct.value)?;
    writeln!(
        out,
        "largest pole = {} ({})",
        rep.largest_pole.value,
        if rep.largest_pole.guaranteed { "guaranteed" } else { "candidate only" }
    )?;
    writeln!(
        out,
        "Z nonempty = {} [{}]",
        rep.z_nonempty.value, rep.z_nonempty.provenance
    )?;
    if !rep.extra_rays.is_empty() {
        let rays: Vec<String> = rep.extra_rays.iter().map(|r| fmt_vec(r)).collect();
        writeln!(out, "extra rays: {}", rays.join(" "))?;
    }
    writeln!(
        out,
        "candidates ({}, k_max = {}, {}):",
        match rep.mode {
            Mode::Full => "full",
            Mode::Sharp => "sharp",
        }, rep.k_max, rep.field_scope
    )?;
    for c in &rep.candidates {
        let mut src: Vec<String> = c
            .sources
            .iter()
            .map(|s| format!("{} k={}", fmt_vec(&s.ray), s.k))
            .collect();
        if c.in_l_series {
            src.push("-(l+N)".into());
        }
        writeln!(out, "  {:>8}  order <= {}  from {}", c.value, c.order_bound, src.join(", "))?;
    }
    Ok(())
}

fn build_fan(gamma: &NewtonPolyhedron, simple: bool) -> Fan {
    let fan = simplicial_fan(gamma);
    if simple {
        simple_fan(&fan)
    } else {
        fan
    }
}

fn cmd_poles(args: &PolesArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let input = load(&args.input)?;
    let opts = args.search.options();
    let (z, prov) = z_flag(args.z_nonempty, &input, &opts);
    let mode = match args.mode {
        ModeArg::Full => Mode::Full,
        ModeArg::Sharp => Mode::Sharp,
    };
    let fan = (mode == Mode::Full).then(|| build_fan(&input.gamma, true));
    let rep = poles::poles_report(&input.gamma, input.f.l(), fan.as_ref(), mode, args.kmax, z, &prov)?;
    if args.input.json {
        print_json(out, &to_json(&rep)?)
    } else {
        poles_text(out, &rep)
    }
}

fn cmd_fan(args: &FanArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let input = load(&args.input)?;
    let fan = build_fan(&input.gamma, args.simple);
    let report = args
        .validate
        .map(|k| validate_fan(&fan, &input.gamma, k, args.seed));
    if let Some(r) = &report {
        if !r.passed() {
            return Err(CliError::Internal(format!(
                "fan validation failed: {}",
                serde_json::to_string(r).unwrap_or_default()
            )));
        }
    }
    if args.input.json {
        let mut v = to_json(&fan.to_json())?;
        v["gamma"] = to_json(&input.gamma.to_json())?;
        if let Some(r) = report {
            v["validation"] = to_json(&r)?;
        }
        return print_json(out, &v);
    }
    writeln!(out, "rays:")?;
    for (r, t) in fan.rays().iter().zip(fan.ray_tags()) {
        let tag = match t {
            RayTag::FacetNormal => "facet normal",
            RayTag::ExtraRay => "extra ray",
        };
        writeln!(out, "  {} {tag}", fmt_vec(r))?;
    }
    writeln!(out, "max cones:")?;
    for c in fan.max_cones() {
        let gens: Vec<String> = c.generators.iter().map(|g| fmt_vec(g)).collect();
        let idx = crate::fan::cone_index(&c).map_or("-".to_string(), |i| i.to_string());
        writeln!(out, "  <{}> index {}", gens.join(", "), idx)?;
    }
    if let Some(r) = report {
        writeln!(out, "validation: passed on {} samples", r.samples)?;
    }
    Ok(())
}

fn verdict_text(out: &mut dyn Write, label: &str, v: &Verdict) -> Result<(), CliError> {
    let status = if v.is_falsified() { "falsified" } else { "no_counterexample_found" };
    write!(out, "{label}: {status} (searches {}", v.budget_used)?;
    if v.exact {
        write!(out, ", exact")?;
    }
    writeln!(out, ")")?;
    if let Some(w) = &v.witness {
        writeln!(
            out,
            "  witness face {} point {:?} residual {:e} rank {} < {}",
            w.face, w.point, w.residual, w.jacobian_rank, w.required_rank
        )?;
        if let Some(s) = &w.sector {
            writeln!(out, "  sector I={:?} J={:?} K={:?}", s.i, s.j, s.k)?;
        }
    }
    Ok(())
}

fn cmd_check(args: &CheckArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let input = load(&args.input)?;
    let opts = args.search.options();
    match args.kind {
        CheckKind::Nondegen => {
            let v = falsify_nondegeneracy(&input.f, &input.gamma, &opts);
            if args.input.json {
                print_json(out, &verdict_json(&v, "nondegen"))
            } else {
                verdict_text(out, "non-degeneracy", &v)
            }
        }
        CheckKind::Compat => {
            let fan = build_fan(&input.gamma, args.simple);
            let rep = check_compatibility(&input.f, &fan, &opts, args.exact2d);
            let homothety = args
                .homothety
                .map(|k| find_compatible_homothety(&input.f, &fan, k, &opts, args.exact2d));
            if args.input.json {
                let mut v = to_json(&rep)?;
                v["check"] = json!("compat");
                if let Some(h) = &homothety {
                    v["homothety"] = match h {
                        Ok(h) => json!({"found": true, "b": h.b, "attempts": h.attempts}),
                        Err(k) => json!({"found": false, "attempts": k}),
                    };
                }
                return print_json(out, &v);
            }
            verdict_text(out, "compatibility", &rep.overall)?;
            match homothety {
                Some(Ok(h)) => writeln!(out, "compatible homothety b = {:?} after {} attempts", h.b, h.attempts)?,
                Some(Err(k)) => writeln!(out, "no compatible homothety in {k} attempts")?,
                None => {}
            }
            Ok(())
        }
    }
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let input = load(&args.input)?;
    let json_out = args.input.json;
    match args.kind {
        VerifyKind::Oracle => {
            let o = verify::monomial_zeta_oracle(&input.f)?;
            let poles: Vec<Value> = o
                .poles()
                .iter()
                .map(|(p, k)| json!({"value": render_q(p), "order": k}))
                .collect();
            if json_out {
                return print_json(out, &json!({"oracle": o.render(), "poles": poles}));
            }
            writeln!(out, "integral over [0,1]^n = {}", o.render())?;
            for (p, k) in o.poles() {
                writeln!(out, "  pole {} order {}", render_q(&p), k)?;
            }
            Ok(())
        }
        VerifyKind::Volume => {
            let alphas = args.alphas.clone().unwrap_or_else(default_alphas);
            let t = verify::mc_volume(&input.f, args.eps, &alphas, args.samples, args.seed)?;
            if let Some(path) = &args.plot_data {
                std::fs::write(path, t.plot_data())?;
            }
            if json_out {
                return print_json(out, &to_json(&t)?);
            }
            if args.csv {
                write!(out, "{}", t.to_csv())?;
                return Ok(());
            }
            for r in &t.rows {
                writeln!(out, "alpha {:e}  volume {:e} +- {:e}", r.alpha, r.estimate, r.stderr)?;
            }
            match &t.fit {
                Some(fit) => writeln!(
                    out,
                    "slope {:.4}, stderr {:.4}, 2 sigma interval [{:.4}, {:.4}] from {} rows",
                    fit.slope,
                    fit.stderr,
                    fit.lower,
                    fit.upper,
                    fit.rows_used
                )?,
                None => writeln!(out, "{}", t.note)?,
            }
            Ok(())
        }
        VerifyKind::Integral => {
            let t = verify::mc_integral(&input.f, &args.s, args.eps, args.samples, args.seed)?;
            if let Some(path) = &args.plot_data {
                std::fs::write(path, t.plot_data())?;
            }
            if json_out {
                return print_json(out, &to_json(&t)?);
            }
            if args.csv {
                write!(out, "{}", t.to_csv())?;
                return Ok(());
            }
            for r in &t.rows {
                writeln!(
                    out,
                    "s {}  integral {:e} +- {:e}{}",
                    r.s,
                    r.estimate,
                    r.stderr,
                    if r.unstable { "  (unstable)" } else { "" }
                )?;
            }
            writeln!(out, "monotone growth as s decreases: {}", t.monotone_growth)?;
            Ok(())
        }
    }
}

fn cmd_analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let input = load(&args.input)?;
    let opts = args.search.options();
    let l = input.f.l();
    let (z, prov) = z_flag(args.z_nonempty, &input, &opts);
    let simplicial = simplicial_fan(&input.gamma);
    let simple = simple_fan(&simplicial);
    let full = poles::poles_report(&input.gamma, l, Some(&simple), Mode::Full, args.kmax, z, &prov)?;
    let sharp = poles::poles_report(&input.gamma, l, None, Mode::Sharp, args.kmax, z, &prov)?;
    let data = poles::principal_numerical_data(&simple, l, z)?;
    let nondegen = falsify_nondegeneracy(&input.f, &input.gamma, &opts);
    let squares = input.f.sum_of_squares();
    let squares_gamma = NewtonPolyhedron::of_map(&squares)?;
    let squares_verdict = falsify_nondegeneracy(&squares, &squares_gamma, &opts);
    let compat = check_compatibility(&input.f, &simplicial, &opts, true);
    let oracle = verify::monomial_zeta_oracle(&input.f).ok();
    let volume = if args.samples >= 10_000 {
        Some(verify::mc_volume(&input.f, 1.0, &default_alphas(), args.samples, opts.seed)?)
    } else {
        None
    };

    if args.input.json {
        let v = json!({
            "schema": "analysis-v1",
            "version": env!("CARGO_PKG_VERSION"),
            "input": {"text": input.text, "n": input.f.n(), "l": l, "rendered": input.f.render(input.conv)},
            "seed": opts.seed,
            "trials": opts.trials,
            "samples": args.samples,
            "gamma": to_json(&input.gamma.to_json())?,
            "fan": {
                "simplicial_rays": simplicial.rays().len(),
                "simple_rays": simple.rays().len(),
                "extra_rays": simple.extra_rays(),
                "simple_max_cones": simple.max_cone_indices().len(),
            },
            "poles_full": to_json(&full)?,
            "poles_sharp": to_json(&sharp)?,
            "numerical_data": to_json(&data)?,
            "nondegeneracy": verdict_json(&nondegen, "nondegen"),
            "sum_of_squares_nondegeneracy": verdict_json(&squares_verdict, "nondegen"),
            "compatibility": to_json(&compat)?,
            "oracle": oracle.as_ref().map(|o| json!({
                "integral": o.render(),
                "poles": o.poles().iter().map(|(p, k)| json!({"value": render_q(p), "order": k})).collect::<Vec<_>>(),
            })),
            "volume": volume.as_ref().map(to_json).transpose()?,
        });
        return print_json(out, &v);
    }

    writeln!(out, "f = {}   (n = {}, l = {})", input.f.render(input.conv), input.f.n(), l)?;
    writeln!(out, "Newton polyhedron:")?;
    for fct in input.gamma.facets() {
        writeln!(out, "  facet normal {} offset {}", fmt_vec(&fct.normal), fct.offset)?;
    }
    writeln!(
        out,
        "fan: {} rays after simple refinement, {} extra",
        simple.rays().len(),
        simple.extra_rays().len()
    )?;
    poles_text(out, &sharp)?;
    writeln!(out, "full list has {} candidates", full.candidates.len())?;
    let entries: Vec<String> = data.entries.iter().map(|e| format!("({},{})", e.n, e.v)).collect();
    writeln!(out, "numerical data (N,v): {}", entries.join(" "))?;
    verdict_text(out, "non-degeneracy", &nondegen)?;
    verdict_text(out, "non-degeneracy of sum of squares", &squares_verdict)?;
    verdict_text(out, "compatibility", &compat.overall)?;
    if let Some(o) = oracle {
        writeln!(out, "oracle: {}", o.render())?;
    }
    if let Some(t) = volume {
        match t.fit {
            Some(fit) => writeln!(out, "volume exponent {:.4} +- {:.4}", fit.slope, 2.0 * fit.stderr)?,
            None => writeln!(out, "volume exponent: {}", t.note)?,
        }
    }
    writeln!(out, "seed {}", opts.seed)?;
    Ok(())
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Parses `argv` and runs the command, writing the report to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    return 0;
                }
                _ => 1,
            };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    configure_threads();
    let result = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a, out),
        Command::Poles(a) => cmd_poles(a, out),
        Command::Fan(a) => cmd_fan(a, out),
        Command::Check(a) => cmd_check(a, out),
        Command::Verify(a) => cmd_verify(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let (kind, msg) = match &e {
                CliError::Input(m) => ("input error", m),
                CliError::Internal(m) => ("internal error", m),
            };
            let _ = writeln!(err, "archi-poles: {kind}: {msg}");
            e.exit_code()
        }
    }
}

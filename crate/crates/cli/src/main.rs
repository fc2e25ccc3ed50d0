mod config;
mod output;
mod suite;

use std::path::PathBuf;
use std::process::ExitCode;

use bessel_pairs::bessel_weight::{verify_pair_equivalence, EquivalenceOutcome};
use bessel_pairs::inequality::{
    hardy_deficit, hardy_rellich_deficit, improved_rellich_deficit, one_dim_deficit,
    BesselPotential, DeficitReport, ImprovedParams, Variant,
};
use bessel_pairs::radial_ode::theta_with;
use bessel_pairs::special::mu_for_dimension;
use bessel_pairs::spectral::{
    constants_row, min_rayleigh, BoundaryCondition, GridParams, QuotientKind,
};
use bessel_pairs::{
    make_potential, shoot_from_origin, weight, Error, OdeDim, OdeProblem, PotentialSpec,
    RadialPotential, ShootOptions, WeightOptions,
};
use clap::{Args, Parser, Subcommand};
use log::{debug, info};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use output::{cell, emit, opt_cell, to_json, Format, Table, SCHEMA};

/// Environment variable holding the default worker count.
const THREADS_ENV: &str = "BESSEL_PAIRS_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "bessel-pairs",
    version,
    about = "Bessel pairs, optimal weights and Hardy-type inequalities on balls"
)]
#[command(args_override_self = true)]
struct Cli {
    /// TOML run file; replaces the subcommand and its flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Worker threads for `sweep` and `verify` (default: $BESSEL_PAIRS_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Integrate the radial equation from the origin.
    Shoot(ShootArgs),
    /// Optimal weight β(V, W; R).
    Weight(WeightArgs),
    /// Boundary ratio θ = V(R)φ'(R)/φ(R) at a given c.
    Theta(ThetaArgs),
    /// β over a grid of one parameter (CSV-friendly).
    Sweep(SweepArgs),
    /// Infimum of a Rayleigh quotient over spherical-harmonic modes.
    Rayleigh(RayleighArgs),
    /// Closed-form constants next to computed ones.
    Constants(ConstantsArgs),
    /// Evaluate an inequality on a suite of test functions.
    Verify(VerifyArgs),
    /// μ(n) with μJ₀'(μ)/J₀(μ) = -n/2.
    Mu(MuArgs),
}

#[derive(Args, Debug, Serialize)]
struct PairArgs {
    #[arg(long)]
    n: u32,
    /// Potential V (e.g. `one`, `power:0.5`, `logchain:1:10`, or a JSON record).
    #[serde(rename = "V")]
    #[arg(long = "V", default_value = "one")]
    v: String,
    #[serde(rename = "W")]
    #[arg(long = "W")]
    w: String,
    #[serde(rename = "R")]
    #[arg(long = "R", default_value_t = 1.0)]
    r: f64,
    /// First-order coefficient: `n-dim` ((n-1)/r) or `two-d` (1/r).
    #[arg(long, default_value = "n-dim")]
    ode_dim: OdeDim,
}

#[derive(Args, Debug, Serialize)]
struct ShootArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pair: PairArgs,
    #[arg(long)]
    c: f64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Largest step in log r.
    #[arg(long, default_value_t = 0.05)]
    max_step: f64,
    #[arg(long)]
    stop_at_zero: bool,
}

#[derive(Args, Debug, Serialize)]
struct WeightArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pair: PairArgs,
    #[arg(long, default_value_t = 1e-8)]
    rel_tol: f64,
    /// Bisect even where a closed form is known.
    #[arg(long)]
    no_closed_form: bool,
}

#[derive(Args, Debug, Serialize)]
struct ThetaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pair: PairArgs,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
}

#[derive(Args, Debug, Serialize)]
struct SweepArgs {
    #[arg(long)]
    n: u32,
    /// V template; `{}` is replaced by the swept value.
    #[serde(rename = "V")]
    #[arg(long = "V", default_value = "one")]
    v: String,
    /// W template; `{}` is replaced by the swept value.
    #[serde(rename = "W")]
    #[arg(long = "W")]
    w: String,
    #[serde(rename = "R")]
    #[arg(long = "R", default_value_t = 1.0)]
    r: f64,
    #[arg(long, default_value = "n-dim")]
    ode_dim: OdeDim,
    /// Name of the swept parameter (`n` also sets the dimension).
    #[arg(long)]
    param: String,
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    #[arg(long, default_value_t = 1e-8)]
    rel_tol: f64,
    #[arg(long)]
    no_closed_form: bool,
}

#[derive(Args, Debug, Serialize)]
struct GridArgs {
    #[arg(long, default_value_t = 400)]
    nodes: usize,
    /// Length of the log-radius interval.
    #[arg(long, default_value_t = 60.0)]
    span: f64,
}

impl GridArgs {
    fn grid(&self) -> GridParams {
        GridParams {
            nodes: self.nodes,
            span: self.span,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct RayleighArgs {
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    m: f64,
    /// `grad-over-grad` or `delta-over-u`.
    #[arg(long, default_value = "grad-over-grad")]
    kind: QuotientKind,
    /// `h2`, `h2-cap-h10` or `h20`.
    #[arg(long, default_value = "h2")]
    bc: BoundaryCondition,
    #[arg(long, default_value_t = 8)]
    k_max: u32,
    #[command(flatten)]
    #[serde(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug, Serialize)]
struct ConstantsArgs {
    #[arg(long)]
    n: u32,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0",
        allow_hyphen_values = true
    )]
    m: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    /// `hardy`, `hardy-rellich`, `equivalence`, `one-dim`, or an improved
    /// variant (`rellich`, `general-rellich`, `log-chain-rellich`,
    /// `two-potentials`, `h1-improved`, `gradient-improved`, `weighted-gradient`).
    #[arg(long)]
    ineq: String,
    #[arg(long)]
    n: u32,
    #[serde(rename = "V")]
    #[arg(long = "V", default_value = "one")]
    v: String,
    /// Weight (Hardy, Hardy–Rellich) or Bessel potential (improved variants).
    #[serde(rename = "W")]
    #[arg(long = "W")]
    w: String,
    /// Second Bessel potential of `two-potentials`.
    #[serde(rename = "W2")]
    #[arg(long = "W2")]
    w2: Option<String>,
    #[serde(rename = "R")]
    #[arg(long = "R", default_value_t = 1.0)]
    r: f64,
    /// Boundary coefficient; computed from (V, W) when absent.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// Multiplier of W for `equivalence`.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    m: f64,
    /// Exponent of the one-dimensional inequality (default n - 1).
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// `builtin`, `random:<count>`, or a TOML/JSON file of test functions.
    #[arg(long, default_value = "builtin")]
    suite: String,
    /// Seed for `random:<count>` suites.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct MuArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u32>,
}

enum Failure {
    /// Help or version was printed.
    Done,
    /// Usage error already reported by the parser.
    Usage,
    Config(String),
    Violation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.to_string())
    }
}

struct Ctx {
    format: Format,
    out: Option<PathBuf>,
}

impl Ctx {
    fn finish(&self, json_doc: serde_json::Value, table: Table) -> Result<(), Failure> {
        let text = match self.format {
            Format::Json => to_json(&json_doc),
            Format::Csv => table.render(),
        };
        emit(&text, self.out.as_ref())
            .map_err(|e| Failure::Config(format!("cannot write output: {e}")))
    }
}

fn potential(text: &str, r: f64) -> Result<RadialPotential, Failure> {
    let spec = if text.trim_start().starts_with('{') {
        serde_json::from_str::<PotentialSpec>(text)
            .map_err(|e| Failure::Config(format!("potential `{text}`: {e}")))?
    } else {
        PotentialSpec::parse(text)?
    };
    Ok(make_potential(&spec, r)?)
}

fn doc<T: Serialize>(command: &Command, result: T) -> serde_json::Value {
    json!({ "schema": SCHEMA, "version": env!("CARGO_PKG_VERSION"), "config": command, "result": result })
}

fn run_shoot(a: &ShootArgs, cmd: &Command, ctx: &Ctx) -> Result<(), Failure> {
    let p = &a.pair;
    let (v, w) = (potential(&p.v, p.r)?, potential(&p.w, p.r)?);
    let prob = OdeProblem::new(p.n, v, w, a.c, p.r, p.ode_dim)?;
    let opts = ShootOptions {
        tol: a.tol,
        max_step: a.max_step,
        stop_at_zero: a.stop_at_zero,
        ..ShootOptions::default()
    };
    let tr = shoot_from_origin(&prob, &opts)?;
    info!(
        "shoot: {} points, first zero {:?}",
        tr.grid.len(),
        tr.first_zero
    );
    let mut table = Table::new(&["r", "y", "yp"]);
    let mut points = Vec::with_capacity(tr.grid.len());
    for i in 0..tr.grid.len() {
        table.push(vec![cell(tr.grid[i]), cell(tr.y[i]), cell(tr.yp[i])]);
        points.push([tr.grid[i], tr.y[i], tr.yp[i]]);
    }
    let result =
        json!({ "summary": tr.summary(), "log_rescale": tr.log_rescale, "points": points });
    ctx.finish(doc(cmd, result), table)
}

const WEIGHT_COLUMNS: [&str; 11] = [
    "n",
    "R",
    "V",
    "W",
    "beta",
    "c_lo",
    "c_hi",
    "iterations",
    "theta_at_beta",
    "unbounded",
    "origin_limited",
];

fn weight_row(n: u32, r: f64, v: &str, w: &str, res: &bessel_pairs::WeightResult) -> Vec<String> {
    vec![
        n.to_string(),
        cell(r),
        v.to_string(),
        w.to_string(),
        cell(res.beta),
        cell(res.bracket.0),
        cell(res.bracket.1),
        res.iterations.to_string(),
        opt_cell(res.theta_at_beta),
        res.unbounded.to_string(),
        res.origin_limited.to_string(),
    ]
}

fn weight_options(rel_tol: f64, dim: OdeDim, no_closed_form: bool) -> WeightOptions {
    WeightOptions {
        rel_tol,
        convention: dim,
        closed_form_chains: !no_closed_form,
        ..WeightOptions::default()
    }
}

fn run_weight(a: &WeightArgs, cmd: &Command, ctx: &Ctx) -> Result<(), Failure> {
    let p = &a.pair;
    let (v, w) = (potential(&p.v, p.r)?, potential(&p.w, p.r)?);
    let res = weight(
        &v,
        &w,
        p.n,
        p.r,
        &weight_options(a.rel_tol, p.ode_dim, a.no_closed_form),
    )?;
    info!(
        "weight: beta = {} after {} iterations",
        res.beta, res.iterations
    );
    let mut table = Table::new(&WEIGHT_COLUMNS);
    table.push(weight_row(p.n, p.r, &p.v, &p.w, &res));
    ctx.finish(doc(cmd, &res), table)
}

fn run_theta(a: &ThetaArgs, cmd: &Command, ctx: &Ctx) -> Result<(), Failure> {
    let p = &a.pair;
    let (v, w) = (potential(&p.v, p.r)?, potential(&p.w, p.r)?);
    let prob = OdeProblem::new(p.n, v, w, a.c, p.r, p.ode_dim)?;
    let th = theta_with(&prob, &ShootOptions::default())?;
    let mut table = Table::new(&["n", "R", "V", "W", "c", "theta"]);
    table.push(vec![
        p.n.to_string(),
        cell(p.r),
        p.v.clone(),
        p.w.clone(),
        cell(a.c),
        cell(th),
    ]);
    ctx.finish(doc(cmd, json!({ "c": a.c, "theta": th })), table)
}

#[derive(Serialize)]
struct SweepRow {
    value: f64,
    n: u32,
    #[serde(rename = "V")]
    v: String,
    #[serde(rename = "W")]
    w: String,
    result: Option<bessel_pairs::WeightResult>,
    error: Option<String>,
}

fn run_sweep(a: &SweepArgs, cmd: &Command, ctx: &Ctx) -> Result<(), Failure> {
    // Validate the templates once before fanning out.
    let first = a.values.first().copied().unwrap_or(0.0);
    potential(&a.v.replace("{}", &first.to_string()), a.r)?;
    potential(&a.w.replace("{}", &first.to_string()), a.r)?;
    let opts = weight_options(a.rel_tol, a.ode_dim, a.no_closed_form);
    let rows: Vec<SweepRow> = a
        .values
        .par_iter()
        .map(|&x| {
            let s = x.to_string();
            let (vs, ws) = (a.v.replace("{}", &s), a.w.replace("{}", &s));
            let n = if a.param == "n" { x as u32 } else { a.n };
            let res = potential(&vs, a.r)
                .and_then(|v| Ok((v, potential(&ws, a.r)?)))
                .and_then(|(v, w)| weight(&v, &w, n, a.r, &opts).map_err(Failure::from));
            debug!(
                "sweep {}={x}: {:?}",
                a.param,
                res.as_ref().ok().map(|r| r.beta)
            );
            match res {
                Ok(r) => SweepRow {
                    value: x,
                    n,
                    v: vs,
                    w: ws,
                    result: Some(r),
                    error: None,
                },
                Err(Failure::Config(e)) => SweepRow {
                    value: x,
                    n,
                    v: vs,
                    w: ws,
                    result: None,
                    error: Some(e),
                },
                Err(_) => unreachable!("potential and weight errors are configuration errors"),
            }
        })
        .collect();
    let mut header = vec!["param", "value"];
    header.extend_from_slice(&WEIGHT_COLUMNS);
    header.push("error");
    let mut table = Table::new(&header);
    for row in &rows {
        let mut cells = vec![a.param.clone(), cell(row.value)];
        match &row.result {
            Some(r) => cells.extend(weight_row(row.n, a.r, &row.v, &row.w, r)),
            None => {
                cells.extend([row.n.to_string(), cell(a.r), row.v.clone(), row.w.clone()]);
                cells.extend((0..7).map(|_| String::new()));
            }
        }
        cells.push(row.error.clone().unwrap_or_default());
        table.push(cells);
    }
    ctx.finish(doc(cmd, json!({ "param": a.param, "rows": rows })), table)
}

fn run_rayleigh(a: &RayleighArgs, cmd: &Command, ctx: &Ctx) -> Result<(), Failure> {
    let res = min_rayleigh(a.n, a.m, a.kind, a.bc, a.k_max, &a.grid.grid())?;
    for row in &res.refinement {
        info!("rayleigh: {} nodes -> {}", row.nodes, row.value);
    }
    let mut table = Table::new(&["n", "m", "kind", "bc", "k", "coarse", "fine", "excluded"]);
    for mv in &res.modes {
        let (c, f) = mv.values.map_or((None, None), |(c, f)| (Some(c), Some(f)));
        table.push(vec![
            a.n.to_string(),
            cell(a.m),
            a.kind.to_string(),
            a.bc.to_string(),
            mv.k.to_string(),
            opt_cell(c),
            opt_cell(f),
            mv.excluded.clone().unwrap_or_default(),
        ]);
    }
    ctx.finish(doc(cmd, &res), table)
}

fn run_constants(a: &ConstantsArgs, cmd: &Command, ctx: &Ctx) -> Result<(), Failure> {
    let rows =
        a.m.iter()
            .map(|&m| constants_row(a.n, m, &a.grid.grid()))
            .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&[
        "n",
        "m",
        "a_closed",
        "a_computed",
        "h_closed",
        "h_computed",
        "c_n",
        "restrict_lo",
        "restrict_hi",
    ]);
    for r in &rows {
        table.push(vec![
            r.n.to_string(),
            cell(r.m),
            opt_cell(r.a_closed),
            opt_cell(r.a_computed),
            cell(r.h_closed),
            opt_cell(r.h_computed),
            opt_cell(r.c_n),
            cell(r.restrict.0),
            cell(r.restrict.1),
        ]);
    }
    ctx.finish(doc(cmd, &rows), table)
}

fn deficit_table(reports: &[DeficitReport]) -> Table {
    let mut table = Table::new(&[
        "inequality",
        "function",
        "n",
        "lhs",
        "rhs",
        "deficit",
        "quad_error",
        "holds",
        "notes",
    ]);
    for d in reports {
        table.push(vec![
            d.inequality.clone(),
            d.function.clone(),
            d.n.to_string(),
            cell(d.lhs),
            cell(d.rhs()),
            cell(d.deficit),
            cell(d.quad_error),
            d.holds(10.0).to_string(),
            d.notes.join("; "),
        ]);
    }
    table
}

fn run_verify(a: &VerifyArgs, cmd: &Command, ctx: &Ctx) -> Result<(), Failure> {
    let suite = suite::load(&a.suite, a.seed, a.r)?;
    let v = potential(&a.v, a.r)?;
    let w = potential(&a.w, a.r)?;
    let n = a.n;
    let boundary_theta = || -> Result<f64, Failure> {
        match a.theta {
            Some(t) => Ok(t),
            None => Ok(theta_with(
                &OdeProblem::new(n, v.clone(), w.clone(), 1.0, a.r, OdeDim::NDim)?,
                &ShootOptions::default(),
            )?),
        }
    };
    let mut extra = serde_json::Value::Null;
    let reports: Vec<DeficitReport> = match a.ineq.as_str() {
        "hardy" => {
            let th = boundary_theta()?;
            suite
                .par_iter()
                .map(|u| hardy_deficit(&v, &w, th, u, n))
                .collect::<Result<_, _>>()?
        }
        "hardy-rellich" => {
            let th = boundary_theta()?;
            suite
                .par_iter()
                .map(|u| hardy_rellich_deficit(&v, &w, u, n, th))
                .collect::<Result<_, _>>()?
        }
        "one-dim" => {
            let bp = BesselPotential::new(w.clone(), a.r, None)?;
            let alpha = a.alpha.unwrap_or(n as f64 - 1.0);
            suite
                .par_iter()
                .map(|u| one_dim_deficit(alpha, &bp, u))
                .collect::<Result<_, _>>()?
        }
        "equivalence" => {
            let rep =
                verify_pair_equivalence(&v, &w, n, a.r, a.c, &suite, &WeightOptions::default())?;
            extra = json!({ "pair": rep.pair, "theta": rep.theta, "theta_c": rep.theta_c, "outcome": rep.outcome, "violator": rep.violator });
            let reports = rep.reports.clone();
            let mut table = deficit_table(&reports);
            table
                .rows
                .iter_mut()
                .for_each(|r| r[7] = (rep.outcome != EquivalenceOutcome::Inconclusive).to_string());
            let result = json!({ "equivalence": extra, "reports": reports });
            ctx.finish(doc(cmd, result), table)?;
            // A violator for a non-pair is the expected outcome.
            return if rep.pair && rep.outcome != EquivalenceOutcome::Consistent {
                Err(Failure::Violation)
            } else {
                Ok(())
            };
        }
        name => {
            let variant: Variant = name.parse()?;
            let mut params = ImprovedParams::new(variant, n, a.m, w.clone(), a.r)?;
            if let Some(w2) = &a.w2 {
                params.w2 = Some(BesselPotential::new(potential(w2, a.r)?, a.r, None)?);
            }
            params.lambda = a.lambda;
            extra = json!({ "beta": params.w.beta, "coefficient": params.w.coefficient, "end_ratio": params.w.end_ratio, "limited": params.w.limited });
            suite
                .par_iter()
                .map(|u| improved_rellich_deficit(variant, u, &params))
                .collect::<Result<_, _>>()?
        }
    };
    let violated = reports.iter().any(|d| !d.holds(10.0));
    let result = json!({ "ineq": a.ineq, "potential": extra, "violations": reports.iter().filter(|d| !d.holds(10.0)).count(), "reports": reports });
    ctx.finish(doc(cmd, result), deficit_table(&reports))?;
    if violated {
        Err(Failure::Violation)
    } else {
        Ok(())
    }
}

fn run_mu(a: &MuArgs, cmd: &Command, ctx: &Ctx) -> Result<(), Failure> {
    let vals =
        a.n.iter()
            .map(|&n| mu_for_dimension(n))
            .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["n", "mu", "residual"]);
    for m in &vals {
        table.push(vec![m.n.to_string(), cell(m.mu), cell(m.residual)]);
    }
    let result = if vals.len() == 1 {
        serde_json::to_value(&vals[0])
    } else {
        serde_json::to_value(&vals)
    };
    ctx.finish(doc(cmd, result.expect("serializable")), table)
}

fn resolve() -> Result<(Cli, Command), Failure> {
    let cli = Cli::try_parse().map_err(|e| {
        let _ = e.print();
        match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                Failure::Done
            }
            _ => Failure::Usage,
        }
    })?;
    let Some(path) = cli.config.clone() else {
        return match cli.command {
            Some(_) => {
                let mut cli = cli;
                let cmd = cli.command.take().unwrap();
                Ok((cli, cmd))
            }
            None => Err(Failure::Config(
                "a subcommand or --config is required".into(),
            )),
        };
    };
    if cli.command.is_some() {
        return Err(Failure::Config(
            "give either a subcommand or --config, not both".into(),
        ));
    }
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let argv = config::config_to_argv("bessel-pairs", &text)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let mut file = Cli::try_parse_from(&argv)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    file.format = cli.format.or(file.format);
    file.out = cli.out.or(file.out);
    file.threads = cli.threads.or(file.threads);
    file.verbose = file.verbose.max(cli.verbose);
    let cmd = file
        .command
        .take()
        .ok_or_else(|| Failure::Config("run file has no command".into()))?;
    Ok((file, cmd))
}

fn run() -> Result<(), Failure> {
    let (cli, cmd) = resolve()?;
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let threads = match cli.threads {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(s) => Some(
                s.parse()
                    .map_err(|_| Failure::Config(format!("{THREADS_ENV} must be an integer")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    }
    let ctx = Ctx {
        format: cli.format.unwrap_or_default(),
        out: cli.out.clone(),
    };
    match &cmd {
        Command::Shoot(a) => run_shoot(a, &cmd, &ctx),
        Command::Weight(a) => run_weight(a, &cmd, &ctx),
        Command::Theta(a) => run_theta(a, &cmd, &ctx),
        Command::Sweep(a) => run_sweep(a, &cmd, &ctx),
        Command::Rayleigh(a) => run_rayleigh(a, &cmd, &ctx),
        Command::Constants(a) => run_constants(a, &cmd, &ctx),
        Command::Verify(a) => run_verify(a, &cmd, &ctx),
        Command::Mu(a) => run_mu(a, &cmd, &ctx),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation) => {
            eprintln!("inequality violated beyond quadrature error");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Usage) => ExitCode::from(2),
        Err(Failure::Done) => ExitCode::SUCCESS,
    }
}

//! Command-line front end.
//!
//! Every subcommand writes exactly one CSV table or one JSON document. Floats
//! are rounded to 9 significant digits: CSV cells use `{:.8e}`, JSON numbers
//! are the shortest representation of the rounded value. Warnings go to the
//! error stream as `WARN <code> <message>`.
//!
//! `--config FILE` reads a JSON object whose keys are long flag names; its
//! entries are inserted ahead of the explicit flags so the latter win.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::detector::{Constants, ForceLaw, TransitionSpec};
use crate::error::{Error, Result, Warning};
use crate::evaporation::{
    cascade_probability, comparison_form, discretize, mass_loss_rate, named_stream, trajectory, validity_check,
    EvaporationParams, PlanckSampler, ValidityPolicy,
};
use crate::oracle::{integral_p21, pole_sum_p21, transient_bound, QuadratureConfig};
use crate::transition::p21_closed_form;
use crate::wavepacket::{eval_exact, eval_semiclassical, PacketParams};

pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "recoil",
    version,
    about = "Accelerated-detector transition weights with recoil",
    args_override_self = true
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// unruh (constant force f) or blackhole (f = 1/4G)
    #[arg(long, value_enum, default_value_t = ModeArg::Unruh, global = true)]
    mode: ModeArg,
    #[arg(long, default_value_t = 1.0, global = true)]
    hbar: f64,
    /// Newton constant; required in blackhole mode
    #[arg(long = "G", global = true)]
    g: Option<f64>,
    /// Constant force; unruh mode only (default 1)
    #[arg(long, global = true)]
    f: Option<f64>,
    /// Output encoding; each subcommand has its own default
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// Write to this file instead of standard output
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Seed for the named random streams (fresh entropy if absent)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores); results do not depend on it
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON file of flag values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Proceed past validity-window rejections, with warnings
    #[arg(long, global = true)]
    force_invalid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Unruh,
    Blackhole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleMethod {
    Integral,
    Poles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PacketForm {
    Exact,
    Semiclassical,
}

#[derive(Debug, Args)]
struct TransitionArgs {
    /// Midpoint acceleration
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Acceleration change a2 − a1 (> 0 emission, < 0 absorption)
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.1)]
    da: f64,
    #[arg(long = "Q", default_value_t = 1.0)]
    q: f64,
    /// Proper-time window
    #[arg(long = "L", default_value_t = 1.0)]
    l: f64,
}

#[derive(Debug, Args)]
struct EvaporationArgs {
    #[arg(long, default_value_t = 1.0)]
    m0: f64,
    #[arg(long = "Q", default_value_t = 1.0)]
    q: f64,
    /// Infrared cutoff on x = βħω
    #[arg(long, default_value_t = 0.1)]
    xmin: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form single-transition weight
    #[command(args_override_self = true)]
    Prob(TransitionArgs),
    /// Numerical cross-check of the transition weight
    #[command(args_override_self = true)]
    Oracle {
        #[command(flatten)]
        t: TransitionArgs,
        #[arg(long, value_enum, default_value_t = OracleMethod::Integral)]
        method: OracleMethod,
        /// Decreasing regulators, comma separated
        #[arg(long, value_delimiter = ',', default_values_t = [1e-3, 5e-4, 2.5e-4])]
        eps_sweep: Vec<f64>,
        #[arg(long, default_value_t = 1e-5)]
        rel_tol: f64,
        #[arg(long, default_value_t = 1e-15)]
        abs_tol: f64,
        #[arg(long, default_value_t = 1_000_000)]
        n_max: usize,
    },
    /// Sample the evolved packet on a z grid
    #[command(args_override_self = true)]
    Wavepacket {
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Mass (default f/a)
        #[arg(long)]
        m: Option<f64>,
        /// Initial width
        #[arg(long, default_value_t = 0.1)]
        b: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        tau: f64,
        /// Grid start (default centre − 6 widths)
        #[arg(long, allow_hyphen_values = true)]
        zmin: Option<f64>,
        /// Grid end (default centre + 6 widths)
        #[arg(long, allow_hyphen_values = true)]
        zmax: Option<f64>,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long, value_enum, default_value_t = PacketForm::Exact)]
        form: PacketForm,
    },
    /// Mass and acceleration along the evaporation trajectory
    #[command(args_override_self = true)]
    Evaporate {
        #[command(flatten)]
        e: EvaporationArgs,
        #[arg(long, default_value_t = 11)]
        samples: usize,
        /// Last sample as a fraction of the decay time, in (0, 1)
        #[arg(long, default_value_t = 0.9)]
        until: f64,
    },
    /// N-quantum emission cascade along the trajectory
    #[command(args_override_self = true)]
    Cascade {
        #[command(flatten)]
        e: EvaporationArgs,
        #[arg(long = "L", default_value_t = 1.0)]
        l: f64,
        #[arg(long = "N", default_value_t = 5)]
        n: usize,
        /// Planck draws of x per step for the JSON summary (uses --seed)
        #[arg(long, default_value_t = 0)]
        draws: usize,
        /// Upper cutoff for the Planck draws
        #[arg(long, default_value_t = 50.0)]
        xmax: f64,
    },
    /// Check of the step-length window at one mass
    #[command(args_override_self = true)]
    Validity {
        #[command(flatten)]
        e: EvaporationArgs,
        /// Mass at which to check (default m0)
        #[arg(long)]
        m: Option<f64>,
        /// Override the mass-loss rate instead of deriving it
        #[arg(long, allow_hyphen_values = true)]
        mdot: Option<f64>,
        #[arg(long = "L", default_value_t = 1.0)]
        l: f64,
    },
}

/// Parse `argv` (program name first), run, and return the exit status.
pub fn run<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.global.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: thread pool: {e}");
            return EXIT_USAGE;
        }
    };
    let outcome = pool.install(|| execute(&cli));
    match outcome {
        Ok(out) => {
            for w in &out.warnings {
                let _ = writeln!(stderr, "WARN {} {}", w.code(), w);
            }
            let written = match &cli.global.output {
                Some(path) => fs::write(path, &out.body).map_err(|e| format!("{}: {e}", path.display())),
                None => stdout.write_all(out.body.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => 0,
                Err(msg) => {
                    let _ = writeln!(stderr, "error: cannot write output: {msg}");
                    1
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// Splice `--config` entries in after the subcommand name.
fn expand_config(argv: Vec<String>) -> std::result::Result<Vec<String>, String> {
    let mut path = None;
    let mut rest = Vec::with_capacity(argv.len());
    let mut it = argv.into_iter();
    while let Some(arg) = it.next() {
        if arg == "--config" {
            path = Some(it.next().ok_or("--config needs a file path")?);
        } else if let Some(p) = arg.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = fs::read_to_string(&path).map_err(|e| format!("config {path}: {e}"))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| format!("config {path}: {e}"))?;
    let Value::Object(map) = doc else {
        return Err(format!("config {path}: expected a JSON object"));
    };
    let mut tokens = Vec::new();
    for (key, value) in map {
        let flag = format!("--{key}");
        match value {
            Value::Bool(true) => tokens.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::String(s) => tokens.push(format!("{flag}={s}")),
            Value::Number(n) => tokens.push(format!("{flag}={n}")),
            Value::Array(items) => {
                let parts: Vec<String> = items
                    .iter()
                    .map(|v| match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect();
                tokens.push(format!("{flag}={}", parts.join(",")));
            }
            Value::Object(_) => return Err(format!("config {path}: key {key} has an object value")),
        }
    }
    // program name, then the subcommand if present, then config, then the rest
    let sub = rest.iter().skip(1).position(|a| !a.starts_with('-')).map(|i| i + 2);
    let at = sub.unwrap_or(rest.len()).min(rest.len());
    rest.splice(at..at, tokens);
    Ok(rest)
}

struct Output {
    body: String,
    warnings: Vec<Warning>,
}

fn constants(g: &GlobalArgs) -> Result<(Constants, ForceLaw)> {
    match g.mode {
        ModeArg::Unruh => {
            if g.g.is_some() {
                return Err(Error::Config("--G only applies in blackhole mode".into()));
            }
            let c = Constants::new(g.hbar)?;
            Ok((c, ForceLaw::new(g.f.unwrap_or(1.0))?))
        }
        ModeArg::Blackhole => {
            if g.f.is_some() {
                return Err(Error::Config("blackhole mode fixes f = 1/(4G); do not pass --f".into()));
            }
            let g_val = g.g.ok_or_else(|| Error::Config("blackhole mode requires --G".into()))?;
            let c = Constants::black_hole(g.hbar, g_val)?;
            let law = ForceLaw::black_hole(&c)?;
            Ok((c, law))
        }
    }
}

fn execute(cli: &Cli) -> Result<Output> {
    let g = &cli.global;
    let (c, law) = constants(g)?;
    let mut warnings = Vec::new();
    let body = match &cli.command {
        Command::Prob(t) => {
            let spec = TransitionSpec::on_force_law(&law, t.a, t.da, t.l, t.q)?;
            let r = p21_closed_form(&spec, &c, &law)?;
            warnings.extend(r.warnings.iter().cloned());
            let record = json!({
                "p21": r.p21, "x": r.x, "direction": r.direction.as_str(),
                "prefactor": r.prefactor, "temperature": r.temperature, "homega": r.homega,
            });
            match g.format.unwrap_or(Format::Json) {
                Format::Json => json_doc(record),
                Format::Csv => csv_table(
                    &["p21", "x", "direction", "prefactor", "temperature", "homega"],
                    [vec![
                        Cell::F(r.p21),
                        Cell::F(r.x),
                        Cell::S(r.direction.as_str().into()),
                        Cell::F(r.prefactor),
                        Cell::F(r.temperature),
                        Cell::F(r.homega),
                    ]],
                ),
            }
        }
        Command::Oracle { t, method, eps_sweep, rel_tol, abs_tol, n_max } => {
            let spec = TransitionSpec::on_force_law(&law, t.a, t.da, t.l, t.q)?;
            let q = QuadratureConfig {
                rel_tol: *rel_tol,
                abs_tol: *abs_tol,
                n_max: *n_max,
                eps_sweep: eps_sweep.clone(),
                override_validity: g.force_invalid,
                ..QuadratureConfig::default()
            };
            let r = match method {
                OracleMethod::Integral => integral_p21(&spec, &c, &law, &q)?,
                OracleMethod::Poles => pole_sum_p21(&spec, &c, &law, &q)?,
            };
            warnings.extend(r.warnings.iter().cloned());
            let closed = p21_closed_form(&spec, &c, &law)?.p21;
            let tb = transient_bound(&spec, &c, &law);
            let record = json!({
                "method": match method { OracleMethod::Integral => "integral", OracleMethod::Poles => "poles" },
                "value": r.value,
                "imag": r.imag,
                "estimated_error": r.estimated_error,
                "eps_used": r.eps_used,
                "converged": r.converged,
                "transient_estimate": r.transient_estimate,
                "window_status": tb.status,
                "closed_form": closed,
                "rel_deviation": (r.value - closed) / closed,
                "terms": r.terms,
                "sweep": r.sweep,
                "extrapolations": r.extrapolations,
            });
            match g.format.unwrap_or(Format::Json) {
                Format::Json => json_doc(record),
                Format::Csv => csv_table(
                    &["eps", "value", "imag", "error"],
                    r.sweep.iter().map(|s| vec![Cell::F(s.eps), Cell::F(s.value), Cell::F(s.imag), Cell::F(s.error)]),
                ),
            }
        }
        Command::Wavepacket { a, m, b, tau, zmin, zmax, points, form } => {
            let m = match m {
                Some(m) => *m,
                None => law.mass(*a)?,
            };
            let p = PacketParams::new(m, *a, *b, c.hbar())?;
            crate::error::require_finite("tau", *tau)?;
            if *points < 2 {
                return Err(Error::Domain("wavepacket needs at least 2 grid points".into()));
            }
            let centre = p.center(*tau);
            let width = p.exact_width(*tau).max(p.semiclassical_width(*tau));
            let lo = zmin.unwrap_or(centre - 6.0 * width);
            let hi = zmax.unwrap_or(centre + 6.0 * width);
            if !(hi > lo) {
                return Err(Error::Domain(format!("empty z grid [{lo}, {hi}]")));
            }
            let rows = (0..*points).map(|k| {
                let z = lo + (hi - lo) * k as f64 / (*points - 1) as f64;
                let psi = match form {
                    PacketForm::Exact => eval_exact(&p, z, *tau),
                    PacketForm::Semiclassical => eval_semiclassical(&p, z, *tau),
                };
                vec![Cell::F(z), Cell::F(psi.re), Cell::F(psi.im), Cell::F(psi.norm_sqr())]
            });
            match g.format.unwrap_or(Format::Csv) {
                Format::Csv => csv_table(&["z", "re", "im", "abs2"], rows),
                Format::Json => {
                    let rows: Vec<Value> =
                        rows.map(|r| Value::Array(r.into_iter().map(Cell::into_json).collect())).collect();
                    json_doc(json!({ "columns": ["z", "re", "im", "abs2"], "tau": tau, "rows": rows }))
                }
            }
        }
        Command::Evaporate { e, samples, until } => {
            let p = EvaporationParams::new(e.m0, &law, e.q, e.xmin, &c)?;
            let traj = trajectory(&p, *samples, *until)?;
            let rows = traj
                .samples
                .iter()
                .map(|s| vec![Cell::F(s.tau), Cell::F(s.m), Cell::F(s.a), Cell::F(traj.temperature_at(s.tau, &c))]);
            match g.format.unwrap_or(Format::Csv) {
                Format::Csv => csv_table(&["tau", "m", "a", "temperature"], rows),
                Format::Json => {
                    let rows: Vec<Value> =
                        rows.map(|r| Value::Array(r.into_iter().map(Cell::into_json).collect())).collect();
                    json_doc(json!({
                        "columns": ["tau", "m", "a", "temperature"],
                        "tau_d": traj.tau_d,
                        "mdot0": mass_loss_rate(p.m0, &p)?,
                        "rows": rows,
                    }))
                }
            }
        }
        Command::Cascade { e, l, n, draws, xmax } => {
            let p = EvaporationParams::new(e.m0, &law, e.q, e.xmin, &c)?;
            let traj = trajectory(&p, 2, 0.5)?;
            let policy = if g.force_invalid { ValidityPolicy::Override } else { ValidityPolicy::Enforce };
            let d = discretize(&traj, *l, *n, &c, policy)?;
            warnings.extend(d.warnings);
            let result = cascade_probability(&d.specs, &c, &law)?;
            warnings.extend(result.warnings.iter().cloned());
            match g.format.unwrap_or(Format::Csv) {
                Format::Csv => csv_table(
                    &["r", "a_mid", "da", "dm", "x", "P_r"],
                    result.steps.iter().map(|s| {
                        vec![Cell::U(s.r), Cell::F(s.a_mid), Cell::F(s.da), Cell::F(s.dm), Cell::F(s.x), Cell::F(s.p)]
                    }),
                ),
                Format::Json => {
                    let cmp = comparison_form(&result, &traj, *l);
                    let mut doc = json!({
                        "product_weight_log": result.log_product_weight,
                        "product_weight": result.product_weight,
                        "x_constancy": result.x_constancy,
                        "tau_d": traj.tau_d,
                        "mass_change": d.specs.iter().map(|s| s.dm()).sum::<f64>(),
                        "comparison_log_ratio": cmp.log_ratio,
                        "comparison_per_quantum_ratio": cmp.per_quantum_ratio,
                        "steps": result.steps,
                    });
                    if *draws > 0 {
                        let sampler = PlanckSampler::new(e.xmin, *xmax)?;
                        let seed = g.seed.unwrap_or_else(rand::random);
                        let mut rng = named_stream(seed, "cascade-planck");
                        let per_step: Vec<Value> = result
                            .steps
                            .iter()
                            .map(|s| {
                                let xs: Vec<f64> = (0..*draws).map(|_| sampler.sample_x(&mut rng)).collect();
                                let mean = xs.iter().sum::<f64>() / xs.len() as f64;
                                // ħω = x/β with β fixed by the step's midpoint temperature
                                let homega_per_x = law.f() * s.da / (s.a_mid * s.a_mid * s.x);
                                json!({ "r": s.r, "x_mean": mean, "homega_mean": mean * homega_per_x })
                            })
                            .collect();
                        doc["planck_draws"] = json!({ "seed": seed, "draws": draws, "x_max": xmax, "steps": per_step });
                    }
                    json_doc(doc)
                }
            }
        }
        Command::Validity { e, m, mdot, l } => {
            let p = EvaporationParams::new(e.m0, &law, e.q, e.xmin, &c)?;
            let m = m.unwrap_or(p.m0);
            let rate = match mdot {
                Some(r) => *r,
                None => mass_loss_rate(m, &p)?,
            };
            let r = validity_check(m, rate, law.f(), *l, &c);
            if !r.ok() && !r.violated() {
                warnings.push(Warning::ValidityMarginal {
                    detail: format!("contour ratio {:.4}, recoil ratio {:.4}", r.contour_ratio, r.recoil_ratio),
                });
            }
            let record = json!({
                "m": m, "mdot": rate, "L": l,
                "contour_ratio": r.contour_ratio, "recoil_ratio": r.recoil_ratio,
                "contour": r.contour, "recoil": r.recoil,
                "planck_regime": r.planck_regime,
                "window": r.window.map(|(lo, hi)| json!([lo, hi])),
            });
            match g.format.unwrap_or(Format::Json) {
                Format::Json => json_doc(record),
                Format::Csv => csv_table(
                    &["m", "mdot", "L", "contour_ratio", "recoil_ratio", "planck_regime"],
                    [vec![
                        Cell::F(m),
                        Cell::F(rate),
                        Cell::F(*l),
                        Cell::F(r.contour_ratio),
                        Cell::F(r.recoil_ratio),
                        Cell::S(r.planck_regime.to_string()),
                    ]],
                ),
            }
        }
    };
    Ok(Output { body, warnings })
}

enum Cell {
    F(f64),
    U(usize),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => format!("{v:.8e}"),
            Cell::U(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }

    fn into_json(self) -> Value {
        match self {
            Cell::F(v) => json!(round9(v)),
            Cell::U(v) => json!(v),
            Cell::S(s) => json!(s),
        }
    }
}

fn csv_table<R: IntoIterator<Item = Vec<Cell>>>(header: &[&str], rows: R) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(Cell::render).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Round to 9 significant digits.
pub fn round9(v: f64) -> f64 {
    if v.is_finite() {
        format!("{v:.8e}").parse().unwrap_or(v)
    } else {
        v
    }
}

fn round_tree(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                *v = json!(round9(x));
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_tree),
        Value::Object(map) => map.values_mut().for_each(round_tree),
        _ => {}
    }
}

fn json_doc<T: Serialize>(doc: T) -> String {
    let mut v = serde_json::to_value(doc).expect("plain data serializes");
    round_tree(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("plain data serializes");
    s.push('\n');
    s
}

//! Command-line frontend.
//!
//! ```text
//! crystab <command> <scenario.txt> [flags]
//!
//! commands
//!   steady      equilibrium profiles and scalars
//!   linearize   coefficient bundle of the linearized cooling system
//!   weights     Lyapunov density weights and their ODE residuals
//!   simulate    time-domain run (open or closed loop)
//!   verify      certificate pipeline (residuals, gain conditions, decay margin, rate fit)
//!   sweep       rerun the pipeline over a parameter list, one row per value
//!
//! shared flags
//!   -o FILE         write CSV output to FILE (otherwise CSV goes to stdout,
//!                   prefixed by `# key = value` summary comments)
//!   --grid N        override the scenario's n_cells
//!   --seed S        seed for randomized initial states (default 0)
//!   --strict        verify: exit 3 when a certificate fails
//!
//! simulate / sweep flags
//!   --closed        apply the feedback law (default for sweep)
//!   --open          constant-source control (default for simulate)
//!   --u VALUE       open-loop control value (default 0)
//!   --t-end T       simulation horizon (default 2)
//!   --cfl C         Courant number in (0, 1] (default 0.5)
//!   --stride K      record every K-th step (default 1)
//!   --amp A         amplitude of the seeded initial deviation (default 0.1)
//!   --nonlinear     nonlinear model variant (physical cooling / affine-kinetics enantiomer)
//!   --snapshots T1,T2,...   write profile snapshots (requires -o)
//!   --param NAME    sweep parameter: kappa | gamma | n_cells | cfl | h_scale
//!   --values A,B,C  sweep values
//! ```
//!
//! # Scenario document schema
//!
//! Plain text, one `key = value` per line; `#` starts a comment. Numbers are
//! plain floats; lists are `[a, b, c]`; piecewise functions take a full
//! breakpoint partition (starting at 0, ending at `length`) plus one
//! polynomial coefficient list per interval, low degree first (degree <= 3),
//! in the global coordinate. `name.breakpoints` may be omitted for a single
//! piece. Unknown keys are rejected. Evaluation at a breakpoint uses the
//! right-hand piece.
//!
//! Cooling model keys (defaults in parentheses):
//!
//! ```text
//! model = cooling
//! length (1.0)        n_cells (400)
//! k_g (1.0)  a_g (0.0)  k_b (1.0)  p_b (1.0)  c_sat (0.0)
//! rho0 (2.0)  v (1.0)  k_v (1.0)
//! cbar_target (1.0) | uf_target      # exactly one
//! gamma (1.0)  kappa (1.0)  rhobar (1.0)
//! psi.breakpoints / psi.coeffs   (psi = 0)
//! phi.breakpoints / phi.coeffs   (phi = 0)
//! h.breakpoints / h.coeffs       (h = 1), must stay positive
//! ```
//!
//! Enantiomer model keys (`k` is 1 or 2):
//!
//! ```text
//! model = enantiomer
//! length (1.0)  n_cells (400)  gamma (1.0)  kappa (1.0, must be positive)
//! gbar_k (1.0)  bbar_k (1.0)  g_k (1.0)  b_k (2.0)  rhobar_k (1.0)
//! h_k.breakpoints / h_k.coeffs   (h_k = 1), must stay positive
//! psi.breakpoints / psi.coeffs   (psi = 0)
//! ```
//!
//! Exit codes: 0 success, 1 scenario or usage error, 2 runtime abort
//! (unphysical state, CFL failure), 3 certificate failure under `--strict`.

use crate::control::check_stability_conditions;
use crate::equilibrium::{cooling_steady, enantiomer_steady};
use crate::error::{ModelError, SimError};
use crate::linearization::{enantiomer_alpha, linearize_cooling};
use crate::lyapunov::{cooling_weight, enantiomer_weight, lyapunov_v};
use crate::scenario::{check_sign_conditions, parse_scenario, Scenario, ScenarioError};
use crate::simulate::{
    random_cooling_state, random_enantiomer_state, simulate_cooling_linear,
    simulate_cooling_nonlinear, simulate_enantiomer, CoolingState, EnantiomerMode, SimTrace,
    TimeStepSpec,
};
use crate::verify::{
    assemble_closed_loop, decay_margin, enantiomer_steady_residual, enantiomer_weight_ode_residual,
    fit_decay, steady_residual, trace_rate_identity, weight_ode_residual, RateForm, VerifyError,
};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

enum CliError {
    Usage(String),
    Scenario(String),
    Io(String),
    Runtime(String),
    Certificate(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Scenario(_) | CliError::Io(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Certificate(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Scenario(m)
            | CliError::Io(m)
            | CliError::Runtime(m)
            | CliError::Certificate(m) => m,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Scenario(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Runs the CLI on `argv` (without the program name) and returns the exit code.
pub fn run<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let argv: Vec<String> = args.into_iter().collect();
    match execute(&argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

const USAGE: &str =
    "usage: crystab <steady|linearize|weights|simulate|verify|sweep> <scenario.txt> [flags]\n\
                     see the crate documentation for the flag list and the scenario schema";

struct Options {
    scenario_path: String,
    out: Option<String>,
    grid: Option<usize>,
    seed: u64,
    strict: bool,
    closed: Option<bool>,
    open_u: f64,
    t_end: f64,
    cfl: f64,
    stride: usize,
    amp: f64,
    nonlinear: bool,
    snapshots: Vec<f64>,
    param: Option<String>,
    values: Vec<f64>,
}

fn parse_f64(value: &str, flag: &str) -> Result<f64, CliError> {
    value
        .parse::<f64>()
        .map_err(|_| CliError::Usage(format!("{flag} expects a number, got `{value}`")))
}

fn parse_list(value: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    value
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| parse_f64(p.trim(), flag))
        .collect()
}

fn parse_options(args: &[String]) -> Result<Options, CliError> {
    let mut opts = Options {
        scenario_path: String::new(),
        out: None,
        grid: None,
        seed: 0,
        strict: false,
        closed: None,
        open_u: 0.0,
        t_end: 2.0,
        cfl: 0.5,
        stride: 1,
        amp: 0.1,
        nonlinear: false,
        snapshots: Vec::new(),
        param: None,
        values: Vec::new(),
    };
    let mut it = args.iter();
    let mut positional = Vec::new();
    while let Some(arg) = it.next() {
        let mut take = |flag: &str| -> Result<String, CliError> {
            it.next()
                .cloned()
                .ok_or_else(|| CliError::Usage(format!("{flag} expects an argument")))
        };
        match arg.as_str() {
            "-o" => opts.out = Some(take("-o")?),
            "--grid" => {
                let raw = take("--grid")?;
                opts.grid = Some(raw.parse::<usize>().map_err(|_| {
                    CliError::Usage(format!("--grid expects a positive integer, got `{raw}`"))
                })?);
            }
            "--seed" => {
                let raw = take("--seed")?;
                opts.seed = raw.parse::<u64>().map_err(|_| {
                    CliError::Usage(format!("--seed expects an integer, got `{raw}`"))
                })?;
            }
            "--strict" => opts.strict = true,
            "--closed" => opts.closed = Some(true),
            "--open" => opts.closed = Some(false),
            "--u" => opts.open_u = parse_f64(&take("--u")?, "--u")?,
            "--t-end" => opts.t_end = parse_f64(&take("--t-end")?, "--t-end")?,
            "--cfl" => opts.cfl = parse_f64(&take("--cfl")?, "--cfl")?,
            "--stride" => {
                let raw = take("--stride")?;
                opts.stride = raw.parse::<usize>().map_err(|_| {
                    CliError::Usage(format!("--stride expects a positive integer, got `{raw}`"))
                })?;
            }
            "--amp" => opts.amp = parse_f64(&take("--amp")?, "--amp")?,
            "--nonlinear" => opts.nonlinear = true,
            "--snapshots" => opts.snapshots = parse_list(&take("--snapshots")?, "--snapshots")?,
            "--param" => opts.param = Some(take("--param")?),
            "--values" => opts.values = parse_list(&take("--values")?, "--values")?,
            other if other.starts_with('-') => {
                return Err(CliError::Usage(format!("unknown flag `{other}`\n{USAGE}")));
            }
            _ => positional.push(arg.clone()),
        }
    }
    match positional.len() {
        0 => return Err(CliError::Usage(format!("missing scenario file\n{USAGE}"))),
        1 => opts.scenario_path = positional.remove(0),
        _ => {
            return Err(CliError::Usage(format!(
                "unexpected extra argument `{}`",
                positional[1]
            )))
        }
    }
    Ok(opts)
}

fn load_scenario(opts: &Options) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(&opts.scenario_path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", opts.scenario_path)))?;
    let scenario = parse_scenario(&text)?;
    match opts.grid {
        Some(n) => Ok(scenario.with_n_cells(n)?),
        None => Ok(scenario),
    }
}

/// Collected CSV plus `key = value` summary lines.
struct Output {
    summary: Vec<(String, String)>,
    csv: String,
}

impl Output {
    fn new() -> Self {
        Self {
            summary: Vec::new(),
            csv: String::new(),
        }
    }

    fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    fn emit(&self, out: &Option<String>) -> Result<(), CliError> {
        match out {
            Some(path) => {
                fs::write(path, &self.csv)
                    .map_err(|e| CliError::Io(format!("cannot write {path}: {e}")))?;
                for (k, v) in &self.summary {
                    println!("{k} = {v}");
                }
            }
            None => {
                for (k, v) in &self.summary {
                    println!("# {k} = {v}");
                }
                print!("{}", self.csv);
            }
        }
        Ok(())
    }
}

fn execute(argv: &[String]) -> Result<(), CliError> {
    let Some(command) = argv.first() else {
        return Err(CliError::Usage(USAGE.to_string()));
    };
    let opts = parse_options(&argv[1..])?;
    match command.as_str() {
        "steady" => cmd_steady(&opts),
        "linearize" => cmd_linearize(&opts),
        "weights" => cmd_weights(&opts),
        "simulate" => cmd_simulate(&opts),
        "verify" => cmd_verify(&opts),
        "sweep" => cmd_sweep(&opts),
        other => Err(CliError::Usage(format!(
            "unknown command `{other}`\n{USAGE}"
        ))),
    }
}

fn cmd_steady(opts: &Options) -> Result<(), CliError> {
    let scenario = load_scenario(opts)?;
    let mut out = Output::new();
    match &scenario {
        Scenario::Cooling(s) => {
            let ss = cooling_steady(s)?;
            out.kv("model", "cooling");
            out.kv("cbar", ss.cbar);
            out.kv("ubar_f", ss.ubar_f);
            out.kv("eps_bar", ss.eps_bar);
            out.kv("beta", ss.beta);
            out.csv.push_str("x,nbar,nbar_prime\n");
            for (i, x) in s.grid.nodes().iter().enumerate() {
                writeln!(out.csv, "{x},{},{}", ss.nbar[i], ss.nbar_prime[i]).unwrap();
            }
        }
        Scenario::Enantiomer(s) => {
            let ss = enantiomer_steady(s);
            out.kv("model", "enantiomer");
            out.kv("nbar_1_at_0", ss.nbar[0][0]);
            out.kv("nbar_2_at_0", ss.nbar[1][0]);
            out.csv.push_str("x,nbar_1,nbar_2\n");
            for (i, x) in s.grid.nodes().iter().enumerate() {
                writeln!(out.csv, "{x},{},{}", ss.nbar[0][i], ss.nbar[1][i]).unwrap();
            }
        }
    }
    out.emit(&opts.out)
}

fn cmd_linearize(opts: &Options) -> Result<(), CliError> {
    let scenario = load_scenario(opts)?;
    let mut out = Output::new();
    match &scenario {
        Scenario::Cooling(s) => {
            let ss = cooling_steady(s)?;
            let coeffs = linearize_cooling(s, &ss)?;
            out.kv("alpha", coeffs.alpha);
            out.kv("k0", coeffs.k0);
            out.kv("k1", coeffs.k1);
            out.kv("k2", coeffs.k2);
            out.kv("beta", coeffs.beta);
            out.kv("b", coeffs.b);
            out.kv("cbar", coeffs.cbar);
            out.kv("eps_bar", coeffs.eps_bar);
            let report = check_sign_conditions(&coeffs, s);
            out.kv(
                "sign_conditions",
                if report.all_satisfied { "pass" } else { "fail" },
            );
            for c in &report.conditions {
                out.kv(
                    &format!("sign[{}]", c.name),
                    format!(
                        "{} ({})",
                        if c.satisfied { "pass" } else { "fail" },
                        c.detail
                    ),
                );
            }
            out.csv.push_str("x,g,g_prime,g_c,theta,nbar_prime\n");
            for (i, x) in s.grid.nodes().iter().enumerate() {
                writeln!(
                    out.csv,
                    "{x},{},{},{},{},{}",
                    coeffs.g[i],
                    coeffs.g_prime[i],
                    coeffs.g_c[i],
                    coeffs.theta[i],
                    coeffs.nbar_prime[i]
                )
                .unwrap();
            }
        }
        Scenario::Enantiomer(s) => {
            for (i, sp) in s.species.iter().enumerate() {
                let alpha = enantiomer_alpha(sp.b_slope, sp.g_slope, sp.bbar, sp.gbar);
                out.kv(&format!("alpha_{}", i + 1), alpha);
                out.kv(&format!("h_floor_{}", i + 1), sp.h.min_on_domain());
            }
            out.kv("decay_rate", s.decay_rate());
        }
    }
    out.emit(&opts.out)
}

fn cmd_weights(opts: &Options) -> Result<(), CliError> {
    let scenario = load_scenario(opts)?;
    let mut out = Output::new();
    match &scenario {
        Scenario::Cooling(s) => {
            let ss = cooling_steady(s)?;
            let coeffs = linearize_cooling(s, &ss)?;
            let rho = cooling_weight(&coeffs, s.kinetics.v, &s.h, s.rho_bar, &s.grid)?;
            let residual =
                weight_ode_residual(&rho, &coeffs.growth, &s.kinetics.psi, &s.h, s.kinetics.v);
            out.kv("weight_ode_residual", format!("{residual:e}"));
            out.csv.push_str("x,rho,h\n");
            for (i, x) in s.grid.nodes().iter().enumerate() {
                writeln!(out.csv, "{x},{},{}", rho.samples[i], rho.h_samples[i]).unwrap();
            }
        }
        Scenario::Enantiomer(s) => {
            let mut weights = Vec::new();
            for sp in &s.species {
                weights.push(enantiomer_weight(
                    sp.gbar, &s.psi, &sp.h, sp.rho_bar, &s.grid,
                )?);
            }
            for (i, (sp, rho)) in s.species.iter().zip(&weights).enumerate() {
                let residual = enantiomer_weight_ode_residual(rho, sp.gbar, &s.psi, &sp.h);
                out.kv(
                    &format!("weight_ode_residual_{}", i + 1),
                    format!("{residual:e}"),
                );
            }
            out.csv.push_str("x,rho_1,h_1,rho_2,h_2\n");
            for (i, x) in s.grid.nodes().iter().enumerate() {
                writeln!(
                    out.csv,
                    "{x},{},{},{},{}",
                    weights[0].samples[i],
                    weights[0].h_samples[i],
                    weights[1].samples[i],
                    weights[1].h_samples[i]
                )
                .unwrap();
            }
        }
    }
    out.emit(&opts.out)
}

fn build_spec(opts: &Options, default_closed: bool) -> Result<TimeStepSpec, CliError> {
    let mut spec = TimeStepSpec::new(opts.t_end)?
        .with_cfl(opts.cfl)?
        .with_stride(opts.stride)?;
    let closed = opts.closed.unwrap_or(default_closed);
    spec = if closed {
        spec.closed()
    } else {
        spec.open(opts.open_u)
    };
    if !opts.snapshots.is_empty() {
        if opts.out.is_none() {
            return Err(CliError::Usage("--snapshots requires -o".into()));
        }
        spec = spec.with_snapshots(opts.snapshots.clone());
    }
    Ok(spec)
}

fn write_snapshots(
    trace: &SimTrace,
    nodes: &[f64],
    out_path: &str,
    scalar_name: &str,
    profile_names: &[&str],
) -> Result<(), CliError> {
    let stem = Path::new(out_path);
    let parent = stem.parent().map(|p| p.to_path_buf()).unwrap_or_default();
    let base = stem.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    for (i, snap) in trace.snapshots.iter().enumerate() {
        let mut csv = String::new();
        csv.push_str("t,x");
        for name in profile_names {
            csv.push(',');
            csv.push_str(name);
        }
        csv.push(',');
        csv.push_str(scalar_name);
        csv.push('\n');
        for (j, x) in nodes.iter().enumerate() {
            write!(csv, "{},{x}", snap.t).unwrap();
            for p in &snap.profiles {
                write!(csv, ",{}", p[j]).unwrap();
            }
            writeln!(csv, ",{}", snap.scalar).unwrap();
        }
        let path = parent.join(format!("{base}_snap{i}.csv"));
        fs::write(&path, csv)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_simulate(opts: &Options) -> Result<(), CliError> {
    let scenario = load_scenario(opts)?;
    let mut out = Output::new();
    match &scenario {
        Scenario::Cooling(s) => {
            let ss = cooling_steady(s)?;
            let coeffs = linearize_cooling(s, &ss)?;
            let spec = build_spec(opts, false)?;
            let x0 = random_cooling_state(&s.grid, coeffs.alpha, opts.seed, opts.amp);
            let trace = if opts.nonlinear {
                let physical = CoolingState {
                    w: x0.w.iter().zip(&ss.nbar).map(|(d, n)| n + d).collect(),
                    s: ss.cbar + x0.s,
                    t: 0.0,
                };
                simulate_cooling_nonlinear(s, &ss, &physical, &spec)?
            } else {
                let rho = cooling_weight(&coeffs, s.kinetics.v, &s.h, s.rho_bar, &s.grid)?;
                simulate_cooling_linear(&x0, &coeffs, &rho, s.gamma, s.kappa, &s.grid, &spec)?
            };
            out.kv("records", trace.len());
            out.kv("final_V", trace.lyapunov.last().unwrap());
            out.csv.push_str("t,V,s,u,norm_w\n");
            for j in 0..trace.len() {
                writeln!(
                    out.csv,
                    "{},{},{},{},{}",
                    trace.times[j],
                    trace.lyapunov[j],
                    trace.scalar[j],
                    trace.control[j],
                    trace.norms[0][j]
                )
                .unwrap();
            }
            if let Some(path) = &opts.out {
                write_snapshots(&trace, s.grid.nodes(), path, "s", &["w"])?;
            }
        }
        Scenario::Enantiomer(s) => {
            let ss = enantiomer_steady(s);
            let spec = build_spec(opts, false)?;
            let a1 = enantiomer_alpha(
                s.species[0].b_slope,
                s.species[0].g_slope,
                s.species[0].bbar,
                s.species[0].gbar,
            );
            let a2 = enantiomer_alpha(
                s.species[1].b_slope,
                s.species[1].g_slope,
                s.species[1].bbar,
                s.species[1].gbar,
            );
            let x0 = random_enantiomer_state(&s.grid, a1, a2, opts.seed, opts.amp);
            let mode = if opts.nonlinear {
                EnantiomerMode::Nonlinear
            } else {
                EnantiomerMode::Quasilinear
            };
            let trace = simulate_enantiomer(s, &ss, &x0, &spec, mode)?;
            out.kv("records", trace.len());
            out.kv("final_W", trace.lyapunov.last().unwrap());
            out.kv("decay_rate", s.decay_rate());
            out.csv.push_str("t,W,v,u,norm_w1,norm_w2\n");
            for j in 0..trace.len() {
                writeln!(
                    out.csv,
                    "{},{},{},{},{},{}",
                    trace.times[j],
                    trace.lyapunov[j],
                    trace.scalar[j],
                    trace.control[j],
                    trace.norms[0][j],
                    trace.norms[1][j]
                )
                .unwrap();
            }
            if let Some(path) = &opts.out {
                write_snapshots(&trace, s.grid.nodes(), path, "v", &["w1", "w2"])?;
            }
        }
    }
    out.emit(&opts.out)
}

fn cmd_verify(opts: &Options) -> Result<(), CliError> {
    let scenario = load_scenario(opts)?;
    let mut out = Output::new();
    let pass = match &scenario {
        Scenario::Cooling(s) => verify_cooling(s, opts, &mut out)?,
        Scenario::Enantiomer(s) => verify_enantiomer(s, opts, &mut out)?,
    };
    out.kv("certificate", if pass { "pass" } else { "fail" });
    out.emit(&opts.out)?;
    if opts.strict && !pass {
        return Err(CliError::Certificate(
            "certificate failed (strict mode)".into(),
        ));
    }
    Ok(())
}

fn verify_cooling(
    s: &crate::scenario::CoolingScenario,
    opts: &Options,
    out: &mut Output,
) -> Result<bool, CliError> {
    let ss = cooling_steady(s)?;
    let coeffs = linearize_cooling(s, &ss)?;
    let rho = cooling_weight(&coeffs, s.kinetics.v, &s.h, s.rho_bar, &s.grid)?;

    let r_steady = steady_residual(s, &ss);
    let r_weight = weight_ode_residual(&rho, &coeffs.growth, &s.kinetics.psi, &s.h, s.kinetics.v);
    out.kv("steady_residual", format!("{:e}", r_steady.max()));
    out.kv("weight_ode_residual", format!("{r_weight:e}"));

    let cert = check_stability_conditions(
        &coeffs,
        s.rho_bar,
        s.gamma,
        s.kappa,
        *coeffs.g.last().unwrap(),
        &rho.h_samples,
    );
    out.kv("kappa", s.kappa);
    out.kv("kappa_threshold", cert.kappa_threshold);
    out.kv("gain_conditions", if cert.passed { "pass" } else { "fail" });

    let op = assemble_closed_loop(&coeffs, &rho, s.gamma, s.kappa, &s.grid)?;
    let delta = decay_margin(&op)?;
    out.kv("decay_margin", delta);
    out.kv("certified_rate", delta / 2.0);

    // closed-loop trajectory check
    let x0 = random_cooling_state(&s.grid, coeffs.alpha, opts.seed, opts.amp);
    let horizon = (6.0 / (delta.abs().max(0.2))).min(40.0);
    let spec = TimeStepSpec::new(horizon)?.with_cfl(opts.cfl)?.closed();
    let trace = simulate_cooling_linear(&x0, &coeffs, &rho, s.gamma, s.kappa, &s.grid, &spec)?;
    let v0 = trace.lyapunov[0];
    let monotone = trace
        .lyapunov
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-12 * v0.max(1.0));
    out.kv("lyapunov_monotone", monotone);
    let norms: Vec<f64> = trace.lyapunov.iter().map(|v| (2.0 * v).sqrt()).collect();
    let fit = fit_decay(&trace.times, &norms)?;
    out.kv("fitted_rate", fit.rate);
    out.kv("fit_r_squared", fit.r_squared);

    let rate_ok = delta <= 0.0 || fit.rate >= 0.45 * delta;
    Ok(cert.passed
        && delta > 0.0
        && monotone
        && rate_ok
        && r_weight <= 1e-10
        && r_steady.max() <= 1e-8)
}

fn verify_enantiomer(
    s: &crate::scenario::EnantiomerScenario,
    opts: &Options,
    out: &mut Output,
) -> Result<bool, CliError> {
    let ss = enantiomer_steady(s);
    let r_steady = enantiomer_steady_residual(s, &ss);
    out.kv("steady_residual", format!("{:e}", r_steady.max()));
    let mut weight_ok = true;
    for (i, sp) in s.species.iter().enumerate() {
        let rho = enantiomer_weight(sp.gbar, &s.psi, &sp.h, sp.rho_bar, &s.grid)?;
        let r = enantiomer_weight_ode_residual(&rho, sp.gbar, &s.psi, &sp.h);
        out.kv(&format!("weight_ode_residual_{}", i + 1), format!("{r:e}"));
        weight_ok &= r <= 1e-10;
    }
    let omega = s.decay_rate();
    out.kv("decay_rate", omega);

    let a1 = enantiomer_alpha(
        s.species[0].b_slope,
        s.species[0].g_slope,
        s.species[0].bbar,
        s.species[0].gbar,
    );
    let a2 = enantiomer_alpha(
        s.species[1].b_slope,
        s.species[1].g_slope,
        s.species[1].bbar,
        s.species[1].gbar,
    );
    let x0 = random_enantiomer_state(&s.grid, a1, a2, opts.seed, opts.amp);
    let spec = TimeStepSpec::new(3.0 / omega)?
        .with_cfl(opts.cfl.min(0.4))?
        .closed()
        .recording_rate();
    let trace = simulate_enantiomer(s, &ss, &x0, &spec, EnantiomerMode::Quasilinear)?;

    let w0 = trace.lyapunov[0];
    let envelope = trace
        .times
        .iter()
        .zip(&trace.lyapunov)
        .all(|(t, w)| *w <= w0 * (-omega * t).exp() * 1.05);
    out.kv("envelope_within_5pct", envelope);
    let identity = trace_rate_identity(&trace, RateForm::Deviation)?;
    out.kv("rate_identity_error", identity);
    let fit = fit_decay(&trace.times, &trace.lyapunov)?;
    out.kv("fitted_rate", fit.rate);

    let fit_ok = fit.rate >= 0.95 * omega;
    Ok(envelope && identity <= 0.05 && fit_ok && weight_ok && r_steady.max() <= 1e-10)
}

fn cmd_sweep(opts: &Options) -> Result<(), CliError> {
    let base = load_scenario(opts)?;
    let param = opts
        .param
        .as_deref()
        .ok_or_else(|| CliError::Usage("sweep requires --param".into()))?;
    const SWEEPABLE: [&str; 5] = ["kappa", "gamma", "n_cells", "cfl", "h_scale"];
    if !SWEEPABLE.contains(&param) {
        return Err(CliError::Usage(format!(
            "unknown sweep parameter `{param}` (expected one of {})",
            SWEEPABLE.join(", ")
        )));
    }
    if opts.values.is_empty() {
        return Err(CliError::Usage(
            "sweep requires a nonempty --values list".into(),
        ));
    }

    let results: Vec<Result<SweepRow, String>> = std::thread::scope(|scope| {
        let handles: Vec<_> = opts
            .values
            .iter()
            .map(|&value| {
                let base = &base;
                let opts = &opts;
                scope.spawn(move || {
                    sweep_one(base, opts, param, value).map_err(|e| e.message().to_string())
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });

    let mut out = Output::new();
    out.csv.push_str("value,omega_hat,delta,pass\n");
    for (value, row) in opts.values.iter().zip(results) {
        let row = row.map_err(CliError::Runtime)?;
        writeln!(
            out.csv,
            "{value},{},{},{}",
            row.omega_hat, row.delta, row.pass
        )
        .unwrap();
    }
    out.emit(&opts.out)
}

struct SweepRow {
    omega_hat: f64,
    delta: f64,
    pass: bool,
}

fn apply_sweep_value(
    base: &Scenario,
    param: &str,
    value: f64,
) -> Result<(Scenario, Option<f64>), CliError> {
    let mut cfl = None;
    let mut scenario = base.clone();
    match (param, &mut scenario) {
        ("kappa", Scenario::Cooling(s)) => s.kappa = value,
        ("kappa", Scenario::Enantiomer(s)) => s.kappa = value,
        ("gamma", Scenario::Cooling(s)) => s.gamma = value,
        ("gamma", Scenario::Enantiomer(s)) => s.gamma = value,
        ("n_cells", _) => {
            if value.fract() != 0.0 || value < 2.0 {
                return Err(CliError::Usage(format!(
                    "n_cells sweep values must be integers >= 2, got {value}"
                )));
            }
            scenario = scenario.with_n_cells(value as usize)?;
        }
        ("cfl", _) => cfl = Some(value),
        ("h_scale", Scenario::Cooling(s)) => s.h = s.h.scaled(value),
        ("h_scale", Scenario::Enantiomer(s)) => {
            for sp in &mut s.species {
                sp.h = sp.h.scaled(value);
            }
        }
        _ => unreachable!("parameter validated above"),
    }
    // revalidate after mutation (h_scale can break positivity, kappa sign, ...)
    match &scenario {
        Scenario::Cooling(s) => s.validate()?,
        Scenario::Enantiomer(s) => s.validate()?,
    }
    Ok((scenario, cfl))
}

fn sweep_one(
    base: &Scenario,
    opts: &Options,
    param: &str,
    value: f64,
) -> Result<SweepRow, CliError> {
    let (scenario, cfl_override) = apply_sweep_value(base, param, value)?;
    let cfl = cfl_override.unwrap_or(opts.cfl);
    match &scenario {
        Scenario::Cooling(s) => {
            let ss = cooling_steady(s)?;
            let coeffs = linearize_cooling(s, &ss)?;
            let rho = cooling_weight(&coeffs, s.kinetics.v, &s.h, s.rho_bar, &s.grid)?;
            let cert = check_stability_conditions(
                &coeffs,
                s.rho_bar,
                s.gamma,
                s.kappa,
                *coeffs.g.last().unwrap(),
                &rho.h_samples,
            );
            let op = assemble_closed_loop(&coeffs, &rho, s.gamma, s.kappa, &s.grid)?;
            let delta = decay_margin(&op)?;
            let x0 = random_cooling_state(&s.grid, coeffs.alpha, opts.seed, opts.amp);
            let horizon = (6.0 / (delta.abs().max(0.2))).min(40.0);
            let spec = TimeStepSpec::new(horizon)?.with_cfl(cfl)?.closed();
            let trace =
                simulate_cooling_linear(&x0, &coeffs, &rho, s.gamma, s.kappa, &s.grid, &spec)?;
            let v0 = trace.lyapunov[0];
            let monotone = trace
                .lyapunov
                .windows(2)
                .all(|w| w[1] <= w[0] + 1e-12 * v0.max(1.0));
            let norms: Vec<f64> = trace.lyapunov.iter().map(|v| (2.0 * v).sqrt()).collect();
            let fit = fit_decay(&trace.times, &norms)?;
            Ok(SweepRow {
                omega_hat: fit.rate,
                delta,
                pass: cert.passed && delta > 0.0 && monotone,
            })
        }
        Scenario::Enantiomer(s) => {
            let ss = enantiomer_steady(s);
            let omega = s.decay_rate();
            let a1 = enantiomer_alpha(
                s.species[0].b_slope,
                s.species[0].g_slope,
                s.species[0].bbar,
                s.species[0].gbar,
            );
            let a2 = enantiomer_alpha(
                s.species[1].b_slope,
                s.species[1].g_slope,
                s.species[1].bbar,
                s.species[1].gbar,
            );
            let x0 = random_enantiomer_state(&s.grid, a1, a2, opts.seed, opts.amp);
            let spec = TimeStepSpec::new(3.0 / omega)?
                .with_cfl(cfl.min(0.4))?
                .closed();
            let trace = simulate_enantiomer(s, &ss, &x0, &spec, EnantiomerMode::Quasilinear)?;
            let w0 = trace.lyapunov[0];
            let envelope = trace
                .times
                .iter()
                .zip(&trace.lyapunov)
                .all(|(t, w)| *w <= w0 * (-omega * t).exp() * 1.05);
            let fit = fit_decay(&trace.times, &trace.lyapunov)?;
            Ok(SweepRow {
                omega_hat: fit.rate,
                delta: omega,
                pass: envelope,
            })
        }
    }
}

/// Recomputes the deviation functional from a snapshot file; used by the
/// round-trip checks on CSV output.
pub fn recompute_v_from_snapshot(snapshot_csv: &str, scenario: &Scenario) -> Result<f64, String> {
    let mut lines = snapshot_csv.lines();
    let header = lines.next().ok_or_else(|| "empty snapshot".to_string())?;
    let columns: Vec<&str> = header.split(',').collect();
    let mut profiles: Vec<Vec<f64>> = vec![Vec::new(); columns.len() - 3];
    let mut scalar = 0.0;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.parse::<f64>().map_err(|e| format!("bad field: {e}")))
            .collect::<Result<_, _>>()?;
        for (p, value) in profiles.iter_mut().zip(&fields[2..fields.len() - 1]) {
            p.push(*value);
        }
        scalar = *fields.last().unwrap();
    }
    let fail = |e: ModelError| e.to_string();
    match scenario {
        Scenario::Cooling(s) => {
            let ss = cooling_steady(s).map_err(fail)?;
            let coeffs = linearize_cooling(s, &ss).map_err(fail)?;
            let rho =
                cooling_weight(&coeffs, s.kinetics.v, &s.h, s.rho_bar, &s.grid).map_err(fail)?;
            Ok(lyapunov_v(&profiles[0], scalar, &rho, s.gamma))
        }
        Scenario::Enantiomer(s) => {
            let rho1 = enantiomer_weight(
                s.species[0].gbar,
                &s.psi,
                &s.species[0].h,
                s.species[0].rho_bar,
                &s.grid,
            )
            .map_err(fail)?;
            let rho2 = enantiomer_weight(
                s.species[1].gbar,
                &s.psi,
                &s.species[1].h,
                s.species[1].rho_bar,
                &s.grid,
            )
            .map_err(fail)?;
            Ok(crate::lyapunov::lyapunov_w(
                &profiles[0],
                &profiles[1],
                scalar,
                &rho1,
                &rho2,
                s.gamma,
            ))
        }
    }
}

//! Command-line front end. `run` returns the process exit status:
//! 0 on success, 2 on input errors, 3 on numeric degeneracy.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::dgp::{simulate_panel, Coefficient, DgpSpec};
use crate::empirical::{cross_mean, defactor, standardize};
use crate::error::{Error, Result};
use crate::estimators::{joint_estimate, marginal_alpha, select_tau};
use crate::inference::{confidence_interval, sigma_tau_sq_at};
use crate::io::{read_panel, write_panel, Orientation, PanelFile};
use crate::moments::acf;
use crate::montecarlo::{emit_table, run_mc, EstimatorSet, McConfig, TableFormat};
use crate::panel::{EstimateResult, Panel};

#[derive(Parser, Debug)]
#[command(name = "crossdep", version, about = "Estimate the cross-sectional dependence exponent of a panel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Joint (or, with --kappa, marginal) estimate with a confidence interval.
    Estimate(EstimateArgs),
    /// Draw a panel from a simulation design and write it as CSV.
    Simulate(SimulateArgs),
    /// Replicate a design and print the summary table.
    Montecarlo(MontecarloArgs),
    /// Autocorrelations of the cross-sectional mean.
    Acf(AcfArgs),
    /// Joint estimates over candidate lags and the selected lag.
    SelectTau(SelectTauArgs),
}

#[derive(Args, Debug)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    /// Sections stored as columns instead of rows.
    #[arg(long)]
    columns: bool,
    /// First record holds labels.
    #[arg(long)]
    header: bool,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// Standardize each section before anything else.
    #[arg(long)]
    standardize: bool,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 10)]
    tau: usize,
    /// Known kappa; switches to the marginal estimator.
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, default_value_t = 0.90)]
    level: f64,
    /// Truncation lag for the long-run variance.
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Md,
    Csv,
}

#[derive(Args, Debug)]
struct DesignArgs {
    /// `example1`, `example2`, `example3`, optionally `:alpha0`, or a JSON design file.
    #[arg(long)]
    spec: String,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    t: usize,
    /// Error scale for example2: a number, `inv-sqrt-n` or `inv-log-n`.
    #[arg(long, default_value = "inv-sqrt-n")]
    h: String,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long)]
    alpha0: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct MontecarloArgs {
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    taus: Vec<usize>,
    /// Candidates for lag selection (defaults to --taus).
    #[arg(long, value_delimiter = ',')]
    select_taus: Option<Vec<usize>>,
    /// One table block per value.
    #[arg(long, value_delimiter = ',')]
    alpha0: Option<Vec<f64>>,
    /// Replication r uses seed + r.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.90)]
    level: f64,
    #[arg(long, value_enum, default_value_t = Format::Md)]
    format: Format,
    #[arg(long)]
    no_marginal: bool,
    #[arg(long)]
    no_select: bool,
    #[arg(long)]
    serial: bool,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AcfArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    max_lag: usize,
    /// Standardize, regress on the cross-sectional mean, and also report the residual mean.
    #[arg(long)]
    defactor: bool,
}

#[derive(Args, Debug)]
struct SelectTauArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    taus: Vec<usize>,
    #[arg(long)]
    json: Option<PathBuf>,
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let out = match cli.command {
        Command::Estimate(a) => estimate(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Montecarlo(a) => montecarlo(&a),
        Command::Acf(a) => acf_cmd(&a),
        Command::SelectTau(a) => select_tau_cmd(&a),
    };
    match out {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numeric() {
        3
    } else {
        2
    }
}

fn load(a: &InputArgs) -> Result<Panel> {
    if !a.delimiter.is_ascii() {
        return Err(Error::InvalidSpec(format!("delimiter {:?} is not ASCII", a.delimiter)));
    }
    let file = PanelFile {
        path: a.input.clone(),
        orientation: if a.columns { Orientation::SectionsAsColumns } else { Orientation::SectionsAsRows },
        header: a.header,
        delimiter: a.delimiter as u8,
    };
    let panel = read_panel(&file)?;
    if a.standardize {
        standardize(&panel)
    } else {
        Ok(panel)
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn push_result(out: &mut String, r: &EstimateResult) {
    let method = match r.method {
        crate::panel::Method::Marginal => "marginal",
        crate::panel::Method::Joint => "joint",
    };
    let _ = writeln!(out, "method {method}");
    let _ = writeln!(out, "alpha {}", r.alpha);
    let _ = writeln!(out, "kappa {}", r.kappa);
    let _ = writeln!(out, "tau {}", r.tau);
    let _ = writeln!(out, "cutoff_n {}", r.cutoff_n);
    let _ = writeln!(out, "objective {}", r.objective_value);
    if r.diagnostics.out_of_range {
        let _ = writeln!(out, "out_of_range true");
    }
    if r.diagnostics.nonpositive_kappa {
        let _ = writeln!(out, "nonpositive_kappa true");
    }
    if r.diagnostics.perfect_fit {
        let _ = writeln!(out, "perfect_fit true");
    }
}

fn estimate(a: &EstimateArgs) -> Result<String> {
    let panel = load(&a.input)?;
    let r = match a.kappa {
        Some(k) => marginal_alpha(&panel, a.tau, k)?,
        None => joint_estimate(&panel, a.tau)?,
    };
    let var = sigma_tau_sq_at(&panel, r.cutoff_n, a.tau, a.ell);
    let ci = var
        .as_ref()
        .map_err(Clone::clone)
        .and_then(|v| confidence_interval(r.alpha, r.kappa, v.total, panel.n(), panel.t(), a.tau, a.level));

    let mut out = String::new();
    let _ = writeln!(out, "n {}", panel.n());
    let _ = writeln!(out, "t {}", panel.t());
    push_result(&mut out, &r);
    if let Ok(v) = &var {
        let _ = writeln!(out, "sigma_sq {}", v.total);
        let _ = writeln!(out, "sigma_part1 {}", v.part1);
        let _ = writeln!(out, "sigma_part2 {}", v.part2);
        let _ = writeln!(out, "ell {}", v.truncation_ell);
        let _ = writeln!(out, "v_nt {}", v.v_nt);
    }
    if let Ok(ci) = &ci {
        let _ = writeln!(out, "level {}", ci.level);
        let _ = writeln!(out, "z {}", ci.z_quantile);
        let _ = writeln!(out, "ci_lower {}", ci.lower);
        let _ = writeln!(out, "ci_upper {}", ci.upper);
        if let Some((lo, hi)) = ci.inverted {
            let _ = writeln!(out, "ci_inverted_lower {lo}");
            let _ = writeln!(out, "ci_inverted_upper {hi}");
        }
    }
    if let Some(path) = &a.json {
        let or_error = |v: std::result::Result<serde_json::Value, &Error>| match v {
            Ok(v) => v,
            Err(e) => json!({ "error": e.to_string() }),
        };
        let var_json = or_error(var.as_ref().map(|v| json!(v)));
        let ci_json = or_error(ci.as_ref().map(|c| json!(c)));
        write_json(
            path,
            &json!({ "n": panel.n(), "t": panel.t(), "estimate": r, "variance": var_json, "ci": ci_json }),
        )?;
    }
    match ci {
        Ok(_) => Ok(out),
        Err(e) => {
            // the point estimate stands; report what was computed, then fail
            print!("{out}");
            Err(e)
        }
    }
}

fn parse_h(s: &str) -> Result<Coefficient> {
    match s {
        "inv-sqrt-n" => Ok(Coefficient::InvSqrtN),
        "inv-log-n" => Ok(Coefficient::InvLogN),
        _ => s.parse::<f64>().map(Coefficient::Fixed).map_err(|_| Error::InvalidSpec(format!("bad --h value {s:?}"))),
    }
}

/// Resolves `--spec` to a design; an explicit alpha0 overrides the one in the spec string or file.
fn design(a: &DesignArgs, alpha0: Option<f64>) -> Result<DgpSpec> {
    let (name, inline) = match a.spec.split_once(':') {
        Some((n, v)) => {
            let v = v.parse::<f64>().map_err(|_| Error::InvalidSpec(format!("bad alpha0 in {:?}", a.spec)))?;
            (n, Some(v))
        }
        None => (a.spec.as_str(), None),
    };
    let alpha = alpha0.or(inline);
    let preset = |f: &dyn Fn(f64) -> DgpSpec| -> Result<DgpSpec> {
        let alpha = alpha.ok_or_else(|| Error::InvalidSpec("alpha0 is required for a preset design".into()))?;
        Ok(f(alpha))
    };
    let spec = match name {
        "example1" => preset(&|al| DgpSpec::example1(a.n, a.t, al, 0))?,
        "example2" => {
            let h = parse_h(&a.h)?;
            preset(&|al| DgpSpec::example2(a.n, a.t, al, h, 0))?
        }
        "example3" => preset(&|al| DgpSpec::example3(a.n, a.t, al, 0))?,
        path => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidSpec(format!("{path}: not a preset and not readable: {e}")))?;
            let mut spec: DgpSpec =
                serde_json::from_str(&text).map_err(|e| Error::InvalidSpec(format!("{path}: {e}")))?;
            if let Some(al) = alpha {
                spec.alpha0 = al;
            }
            spec
        }
    };
    spec.validate()?;
    Ok(spec)
}

fn simulate(a: &SimulateArgs) -> Result<String> {
    let spec = design(&a.design, a.alpha0)?.with_seed(a.seed);
    let draw = simulate_panel(&spec)?;
    write_panel(&draw.panel, &a.out)?;
    Ok(String::new())
}

fn montecarlo(a: &MontecarloArgs) -> Result<String> {
    let alphas: Vec<Option<f64>> = match &a.alpha0 {
        Some(v) => v.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut summaries = Vec::new();
    for alpha in alphas {
        let spec = design(&a.design, alpha)?;
        let mut cfg = McConfig::new(spec, a.taus.clone());
        cfg.replications = a.reps;
        cfg.base_seed = a.seed;
        cfg.ci_level = a.level;
        cfg.estimators = EstimatorSet { marginal: !a.no_marginal, joint: true, select_tau: !a.no_select };
        cfg.select_candidates = a.select_taus.clone();
        cfg.parallel = !a.serial;
        summaries.push(run_mc(&cfg)?);
    }
    if let Some(path) = &a.json {
        write_json(path, &json!(summaries))?;
    }
    let format = match a.format {
        Format::Md => TableFormat::Markdown,
        Format::Csv => TableFormat::Csv,
    };
    Ok(emit_table(&summaries, format))
}

fn acf_cmd(a: &AcfArgs) -> Result<String> {
    let panel = load(&a.input)?;
    let mut out = String::new();
    if !a.defactor {
        let xbar = cross_mean(&panel);
        for (k, v) in acf(xbar.as_slice().expect("contiguous"), a.max_lag)?.iter().enumerate() {
            let _ = writeln!(out, "{k} {v:?}");
        }
        return Ok(out);
    }
    let x = if a.input.standardize { panel } else { standardize(&panel)? };
    if a.max_lag + 2 > x.t() {
        return Err(Error::SeriesTooShort { len: x.t(), need: a.max_lag + 2 });
    }
    let (_, d) = defactor(&x, a.max_lag)?;
    let _ = writeln!(out, "# xbar");
    for (k, v) in d.acf_xbar.iter().enumerate() {
        let _ = writeln!(out, "{k} {v:?}");
    }
    let _ = writeln!(out, "\n# ubar");
    if d.ubar_vanishes {
        let _ = writeln!(out, "# residual cross-sectional mean is identically zero; no ACF");
    }
    for (k, v) in d.acf_ubar.iter().enumerate() {
        let _ = writeln!(out, "{k} {v:?}");
    }
    Ok(out)
}

fn select_tau_cmd(a: &SelectTauArgs) -> Result<String> {
    let panel = load(&a.input)?;
    let sel = select_tau(&panel, &a.taus)?;
    let mut out = String::new();
    let _ = writeln!(out, "tau alpha kappa objective ratio");
    for (r, ratio) in sel.results.iter().zip(&sel.ratios) {
        let _ = writeln!(out, "{} {} {} {} {}", r.tau, r.alpha, r.kappa, r.objective_value, ratio);
    }
    let best = sel.selected();
    let _ = writeln!(out, "tau_tilde {}", sel.tau);
    let _ = writeln!(out, "alpha_tilde {}", best.alpha);
    let _ = writeln!(out, "kappa_tilde {}", best.kappa);
    if sel.degenerate_fit {
        let _ = writeln!(out, "degenerate_fit true");
    }
    if let Some(path) = &a.json {
        write_json(path, &json!(sel))?;
    }
    Ok(out)
}

//! `bvmcorr` command line: analytic circular correlation reports, reference
//! tables, sampling, Monte Carlo validation, density grids and the
//! series-vs-quadrature oracle check for the bivariate von Mises sine and
//! cosine models.
//!
//! Output conventions: JSON for single reports, CSV for tabular and grid
//! data; machine outputs carry 17 significant digits, `--pretty` prints a
//! 2-significant-figure table. Angles are radians everywhere; `--degrees`
//! converts the mean-direction inputs on ingestion only. Every run emits
//! exactly one manifest: as a `<out>.manifest.json` sidecar when writing to
//! a file, on stderr when writing to stdout.
//!
//! Exit codes: 0 success, 2 usage or parameter error, 3 series
//! non-convergence, 4 I/O failure, 5 oracle mismatch.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use bvmcorr::{
    correlation_report, mc_validate, oracle_constant, oracle_moments, round_sig, sample_bivariate,
    series_bundle, CorrelationReport, Density, Error as CoreError, Family, GridSpec, ModelParams,
    SampleMethod, SamplerConfig, SeriesControl, TrigMoments,
};

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Oracle-check thresholds: report pass/fail at the tight bound, fail the
/// process only past the loose one.
const ORACLE_PASS: f64 = 1e-8;
const ORACLE_FAIL: f64 = 1e-6;

#[derive(Parser)]
#[command(
    name = "bvmcorr",
    version,
    about = "Circular correlations for bivariate von Mises sine/cosine models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Sine,
    Cosine,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::Sine => Family::Sine,
            FamilyArg::Cosine => Family::Cosine,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Gibbs,
    Rejection,
}

#[derive(Args)]
struct ModelArgs {
    /// Model family
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// First mean direction (radians unless --degrees)
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mu1: f64,
    /// Second mean direction
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mu2: f64,
    /// First concentration (>= 0)
    #[arg(long, allow_negative_numbers = true)]
    k1: f64,
    /// Second concentration (>= 0)
    #[arg(long, allow_negative_numbers = true)]
    k2: f64,
    /// Association parameter (lambda for sine, kappa3 for cosine)
    #[arg(long, allow_negative_numbers = true)]
    assoc: f64,
    /// Interpret mean directions as degrees
    #[arg(long)]
    degrees: bool,
}

impl ModelArgs {
    fn params(&self) -> Result<ModelParams, CliFailure> {
        let scale = if self.degrees {
            std::f64::consts::PI / 180.0
        } else {
            1.0
        };
        ModelParams::new(
            self.family.into(),
            self.mu1 * scale,
            self.mu2 * scale,
            self.k1,
            self.k2,
            self.assoc,
        )
        .map_err(CliFailure::from)
    }
}

#[derive(Args)]
struct ControlArgs {
    /// Series truncation tolerance
    #[arg(long, default_value_t = 1e-14)]
    rel_tol: f64,
    /// Consecutive small terms required before truncation
    #[arg(long, default_value_t = 3)]
    consecutive_small: usize,
    /// Series term cap
    #[arg(long, default_value_t = 20_000)]
    max_terms: usize,
}

impl ControlArgs {
    fn control(&self) -> SeriesControl {
        SeriesControl {
            rel_tol: self.rel_tol,
            consecutive_small: self.consecutive_small,
            max_terms: self.max_terms,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Analytic correlation/variance report as JSON
    Report {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        control: ControlArgs,
        /// Print a 2-significant-figure summary instead of full JSON
        #[arg(long)]
        pretty: bool,
        /// Write to a file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reference parameter grid (12 rows) with analytic columns, as CSV
    Table {
        /// Model family
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[command(flatten)]
        control: ControlArgs,
        /// Round values to 2 significant figures
        #[arg(long)]
        pretty: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a random sample and write it as CSV
    Sample {
        #[command(flatten)]
        model: ModelArgs,
        /// Number of angle pairs
        #[arg(long)]
        n: usize,
        /// RNG seed
        #[arg(long)]
        seed: u64,
        /// Sampling method
        #[arg(long, value_enum, default_value = "gibbs")]
        method: MethodArg,
        /// Gibbs burn-in sweeps
        #[arg(long, default_value_t = 1000)]
        burn_in: usize,
        /// Gibbs thinning stride
        #[arg(long, default_value_t = 1)]
        thin: usize,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo validation of the analytic values, as CSV rows
    McValidate {
        #[command(flatten)]
        model: ModelArgs,
        /// Sample size per replicate
        #[arg(long)]
        n: usize,
        /// Number of replicates
        #[arg(long)]
        replicates: usize,
        /// Master RNG seed (replicates use derived streams)
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Normalized density on a uniform grid, as CSV (theta,phi,density)
    DensityGrid {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        control: ControlArgs,
        /// Grid points per axis (>= 8)
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare series values against the quadrature oracle, as JSON
    OracleCheck {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        control: ControlArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure carrying the documented process exit code.
struct CliFailure {
    code: u8,
    message: String,
}

impl CliFailure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        CliFailure {
            code,
            message: message.into(),
        }
    }
}

impl From<CoreError> for CliFailure {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::SeriesNonConvergence { .. } => 3,
            CoreError::Io(_) => 4,
            _ => 2,
        };
        CliFailure::new(code, e.to_string())
    }
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    params: Option<&'a ModelParams>,
    control: Option<&'a SeriesControl>,
    sampler: Option<&'a SamplerConfig>,
    outputs: Vec<String>,
    tool_version: &'a str,
}

/// Deliver `content` to `out` (or stdout) and the manifest alongside it
/// (sidecar file, or stderr for stdout runs).
fn deliver(out: Option<&Path>, content: &str, mut manifest: RunManifest) -> Result<(), CliFailure> {
    match out {
        Some(path) => {
            let manifest_path = manifest_path_for(path);
            manifest.outputs = vec![path.display().to_string()];
            fs::write(path, content)
                .map_err(|e| CliFailure::new(4, format!("writing {}: {e}", path.display())))?;
            let mjson = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
            fs::write(&manifest_path, mjson).map_err(|e| {
                CliFailure::new(4, format!("writing {}: {e}", manifest_path.display()))
            })?;
        }
        None => {
            print!("{content}");
            let mjson = serde_json::to_string(&manifest).expect("manifest serializes");
            eprintln!("{mjson}");
        }
    }
    Ok(())
}

fn manifest_path_for(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

fn fmt_full(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_pretty(v: f64) -> String {
    format!("{}", round_sig(v, 2))
}

fn report_json(params: &ModelParams, report: &CorrelationReport) -> serde_json::Value {
    serde_json::json!({
        "family": params.family,
        "params": params,
        "rho_js": report.rho_js,
        "rho_fl": report.rho_fl,
        "var_theta": report.var_theta,
        "var_phi": report.var_phi,
        "delta": report.delta,
        "normal_approx": report.normal_approx,
        "series": {
            "terms_used": report.terms_used,
            "converged": report.converged,
        },
    })
}

fn cmd_report(
    model: &ModelArgs,
    control: &ControlArgs,
    pretty: bool,
    out: Option<&Path>,
) -> Result<(), CliFailure> {
    let params = model.params()?;
    let control = control.control();
    let report = correlation_report(&params, &control)?;
    let content = if pretty {
        let mut s = String::new();
        s.push_str(&format!("family      {}\n", params.family));
        s.push_str(&format!("rho_js      {}\n", fmt_pretty(report.rho_js)));
        s.push_str(&format!("rho_fl      {}\n", fmt_pretty(report.rho_fl)));
        s.push_str(&format!("var_theta   {}\n", fmt_pretty(report.var_theta)));
        s.push_str(&format!("var_phi     {}\n", fmt_pretty(report.var_phi)));
        s.push_str(&format!("delta       {}\n", fmt_pretty(report.delta)));
        if let Some(na) = report.normal_approx {
            s.push_str(&format!(
                "rho_approx  {} ({})\n",
                fmt_pretty(na.value),
                if na.valid {
                    "valid"
                } else {
                    "outside hypotheses"
                }
            ));
        }
        s
    } else {
        let mut s =
            serde_json::to_string_pretty(&report_json(&params, &report)).expect("serializes");
        s.push('\n');
        s
    };
    deliver(
        out,
        &content,
        RunManifest {
            command: "report",
            params: Some(&params),
            control: Some(&control),
            sampler: None,
            outputs: vec![],
            tool_version: TOOL_VERSION,
        },
    )
}

/// The published parameter grid: kappa in {1, 0.1, 10} with assoc in
/// {k/2, -k/2, 2k, -2k}.
fn table_grid() -> Vec<(f64, f64)> {
    let mut rows = Vec::with_capacity(12);
    for k in [1.0, 0.1, 10.0] {
        for assoc in [k / 2.0, -k / 2.0, 2.0 * k, -2.0 * k] {
            rows.push((k, assoc));
        }
    }
    rows
}

/// Normal-approximation column of the reference table. Unlike the report's
/// approximation (which requires both shifted factors positive), the table
/// prints the value whenever the product under the root is positive.
fn table_rho_approx(family: Family, k1: f64, k2: f64, assoc: f64) -> Option<f64> {
    let prod = match family {
        Family::Sine => k1 * k2,
        Family::Cosine => (k1 + assoc) * (k2 + assoc),
    };
    (prod > 0.0).then(|| assoc / prod.sqrt())
}

fn cmd_table(
    family: Family,
    control: &ControlArgs,
    pretty: bool,
    out: Option<&Path>,
) -> Result<(), CliFailure> {
    let control = control.control();
    let fmt: fn(f64) -> String = if pretty { fmt_pretty } else { fmt_full };
    let mut csv = String::from("kappa1,kappa2,assoc,rho_approx,rho_js,rho_fl,var\n");
    for (k, assoc) in table_grid() {
        let params = ModelParams::new(family, 0.0, 0.0, k, k, assoc)?;
        let report = correlation_report(&params, &control)?;
        let approx = table_rho_approx(family, k, k, assoc)
            .map(&fmt)
            .unwrap_or_default();
        csv.push_str(&format!(
            "{k},{k},{assoc},{approx},{},{},{}\n",
            fmt(report.rho_js),
            fmt(report.rho_fl),
            fmt(report.var_theta),
        ));
    }
    deliver(
        out,
        &csv,
        RunManifest {
            command: "table",
            params: None,
            control: Some(&control),
            sampler: None,
            outputs: vec![],
            tool_version: TOOL_VERSION,
        },
    )
}

fn cmd_sample(
    model: &ModelArgs,
    n: usize,
    seed: u64,
    method: MethodArg,
    burn_in: usize,
    thin: usize,
    out: &Path,
) -> Result<(), CliFailure> {
    let params = model.params()?;
    let mut config = SamplerConfig {
        seed,
        method: match method {
            MethodArg::Gibbs => SampleMethod::Gibbs,
            MethodArg::Rejection => SampleMethod::Rejection,
        },
        burn_in,
        thin,
        stream: 0,
    };
    if config.method == SampleMethod::Rejection {
        // exact i.i.d. draws: chain controls do not apply, keep the
        // manifest truthful
        config.burn_in = 0;
        config.thin = 1;
    }
    let samples = sample_bivariate(&params, n, &config)?;
    deliver(
        Some(out),
        &samples.to_csv(),
        RunManifest {
            command: "sample",
            params: Some(&params),
            control: None,
            sampler: Some(&config),
            outputs: vec![],
            tool_version: TOOL_VERSION,
        },
    )
}

fn cmd_mc_validate(
    model: &ModelArgs,
    n: usize,
    replicates: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliFailure> {
    let params = model.params()?;
    let rows = mc_validate(&params, n, replicates, seed)?;
    let mut csv = String::from(
        "quantity,analytic,estimate_mean,estimate_se,z_score,replicates,sample_size\n",
    );
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.quantity,
            fmt_full(r.analytic),
            fmt_full(r.estimate_mean),
            fmt_full(r.estimate_se),
            fmt_full(r.z_score),
            r.replicates,
            r.sample_size,
        ));
    }
    let sampler = SamplerConfig::gibbs(seed);
    deliver(
        out,
        &csv,
        RunManifest {
            command: "mc-validate",
            params: Some(&params),
            control: None,
            sampler: Some(&sampler),
            outputs: vec![],
            tool_version: TOOL_VERSION,
        },
    )
}

fn cmd_density_grid(
    model: &ModelArgs,
    control: &ControlArgs,
    resolution: usize,
    out: &Path,
) -> Result<(), CliFailure> {
    if !(8..=4096).contains(&resolution) {
        return Err(CliFailure::new(
            2,
            format!("resolution must be within 8..=4096, got {resolution}"),
        ));
    }
    let params = model.params()?;
    let control = control.control();
    let density = Density::new(&params, &control)?;
    let h = 2.0 * std::f64::consts::PI / resolution as f64;

    // streamed: a fine grid is far too large to assemble in memory
    let io_fail = |e: std::io::Error| CliFailure::new(4, format!("writing {}: {e}", out.display()));
    let mut writer = io::BufWriter::new(fs::File::create(out).map_err(io_fail)?);
    writer.write_all(b"theta,phi,density\n").map_err(io_fail)?;
    for i in 0..resolution {
        let theta = -std::f64::consts::PI + i as f64 * h;
        for j in 0..resolution {
            let phi = -std::f64::consts::PI + j as f64 * h;
            writeln!(
                writer,
                "{},{},{}",
                fmt_full(theta),
                fmt_full(phi),
                fmt_full(density.density(theta, phi))
            )
            .map_err(io_fail)?;
        }
    }
    writer.flush().map_err(io_fail)?;

    let manifest = RunManifest {
        command: "density-grid",
        params: Some(&params),
        control: Some(&control),
        sampler: None,
        outputs: vec![out.display().to_string()],
        tool_version: TOOL_VERSION,
    };
    let manifest_path = manifest_path_for(out);
    let mjson = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, mjson)
        .map_err(|e| CliFailure::new(4, format!("writing {}: {e}", manifest_path.display())))?;
    Ok(())
}

#[derive(Serialize)]
struct Discrepancy {
    quantity: &'static str,
    series: f64,
    quadrature: f64,
    discrepancy: f64,
}

fn relative_gap(series: f64, oracle: f64) -> f64 {
    let scale = oracle.abs().max(1.0);
    (series - oracle).abs() / scale
}

fn cmd_oracle_check(
    model: &ModelArgs,
    control: &ControlArgs,
    out: Option<&Path>,
) -> Result<(), CliFailure> {
    let params = model.params()?;
    if params.kappa1 > 50.0 || params.kappa2 > 50.0 || params.assoc.abs() > 50.0 {
        return Err(CliFailure::new(
            2,
            "oracle-check requires each parameter component at most 50 (quadrature practicality)",
        ));
    }
    let control = control.control();
    let bundle = series_bundle(&params, &control)?;
    let m = TrigMoments::from_bundle(&bundle);
    let grid = GridSpec::default();
    let oc = oracle_constant(&params, grid)?;
    let om = oracle_moments(&params, grid)?;

    let mut rows = vec![Discrepancy {
        quantity: "constant",
        series: bundle.constant(),
        quadrature: oc,
        discrepancy: (bundle.constant() - oc).abs() / oc.abs(),
    }];
    let mut push = |quantity: &'static str, series: f64, oracle: f64| {
        rows.push(Discrepancy {
            quantity,
            series,
            quadrature: oracle,
            discrepancy: relative_gap(series, oracle),
        });
    };
    push("e_cos_theta", m.e_cos_t, om.moments.e_cos_t);
    push("e_cos_phi", m.e_cos_p, om.moments.e_cos_p);
    push("e_cos2_theta", m.e_cos2_t, om.moments.e_cos2_t);
    push("e_cos2_phi", m.e_cos2_p, om.moments.e_cos2_p);
    push("e_sin_sin", m.e_ss, om.moments.e_ss);
    push("e_cos_cos", m.e_cc, om.moments.e_cc);
    push("e_sin_phi_cos_theta", 0.0, om.e_sin_phi_cos_theta);
    push("e_sin_theta_cos_phi", 0.0, om.e_sin_theta_cos_phi);

    let worst = rows.iter().map(|r| r.discrepancy).fold(0.0, f64::max);
    let pass = worst <= ORACLE_PASS;
    let json = serde_json::json!({
        "params": params,
        "quantities": rows,
        "max_discrepancy": worst,
        "pass_threshold": ORACLE_PASS,
        "fail_threshold": ORACLE_FAIL,
        "pass": pass,
    });
    let mut content = serde_json::to_string_pretty(&json).expect("serializes");
    content.push('\n');
    deliver(
        out,
        &content,
        RunManifest {
            command: "oracle-check",
            params: Some(&params),
            control: Some(&control),
            sampler: None,
            outputs: vec![],
            tool_version: TOOL_VERSION,
        },
    )?;
    if worst > ORACLE_FAIL {
        return Err(CliFailure::new(
            5,
            format!("series/quadrature discrepancy {worst:.3e} exceeds {ORACLE_FAIL:.0e}"),
        ));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliFailure> {
    match &cli.command {
        Command::Report {
            model,
            control,
            pretty,
            out,
        } => cmd_report(model, control, *pretty, out.as_deref()),
        Command::Table {
            family,
            control,
            pretty,
            out,
        } => cmd_table((*family).into(), control, *pretty, out.as_deref()),
        Command::Sample {
            model,
            n,
            seed,
            method,
            burn_in,
            thin,
            out,
        } => cmd_sample(model, *n, *seed, *method, *burn_in, *thin, out),
        Command::McValidate {
            model,
            n,
            replicates,
            seed,
            out,
        } => cmd_mc_validate(model, *n, *replicates, *seed, out.as_deref()),
        Command::DensityGrid {
            model,
            control,
            resolution,
            out,
        } => cmd_density_grid(model, control, *resolution, out),
        Command::OracleCheck {
            model,
            control,
            out,
        } => cmd_oracle_check(model, control, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

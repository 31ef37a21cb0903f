//! Batch front end: config ingestion, subcommands, machine-readable outputs.
//!
//! Exit codes: 0 success/exists, 2 config error, 3 inconclusive,
//! 4 degenerate parameter, 5 numerical failure.

use anyhow::Context;
use clap::{Parser, Subcommand};
use prescurv::critical::{self, Verdict};
use prescurv::energy::EnergyInput;
use prescurv::expansion;
use prescurv::fields::{PolyField, PolyFieldJson, SphereFunction};
use prescurv::geometry::{BallPoint, Dimension};
use prescurv::quadrature::QuadratureSpec;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

const EXIT_OK: i32 = 0;
const EXIT_CONFIG: i32 = 2;
const EXIT_INCONCLUSIVE: i32 = 3;
const EXIT_DEGENERATE: i32 = 4;
const EXIT_NUMERICAL: i32 = 5;

#[derive(Parser)]
#[command(name = "prescurv", about = "prescribed-curvature reduced-energy toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump the full constants table as JSON
    Constants(CommonArgs),
    /// Scan Γ over the configured (x₀, λ) grid; CSV output
    GammaScan(CommonArgs),
    /// Validate the small-λ expansion at the configured sphere points
    ExpansionCheck(CommonArgs),
    /// Run the existence certificate
    Certificate(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to the JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output path (JSON or CSV depending on the subcommand)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Deserialize)]
struct QuadratureConfig {
    #[serde(default = "default_rel_tol")]
    rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    abs_tol: f64,
    #[serde(default = "default_max_subdivisions")]
    max_subdivisions: usize,
}

fn default_rel_tol() -> f64 {
    1e-9
}
fn default_abs_tol() -> f64 {
    1e-12
}
fn default_max_subdivisions() -> usize {
    1_000_000
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: default_rel_tol(),
            abs_tol: default_abs_tol(),
            max_subdivisions: default_max_subdivisions(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct RunConfig {
    n: usize,
    #[serde(rename = "D")]
    d: f64,
    #[serde(default)]
    eps: f64,
    #[serde(rename = "K")]
    k: PolyFieldJson,
    #[serde(rename = "H")]
    h: PolyFieldJson,
    #[serde(default = "default_max_order")]
    max_order: usize,
    #[serde(default)]
    quadrature: Option<QuadratureConfig>,
    /// λ grid for scans and expansion checks
    #[serde(default)]
    lambdas: Vec<f64>,
    /// x₀ grid for scans (vectors of length n−1)
    #[serde(default)]
    x0_list: Vec<Vec<f64>>,
    /// sphere points for expansion checks (unit vectors of length n)
    #[serde(default)]
    xi_list: Vec<Vec<f64>>,
    /// radius for the Γ-limit comparison row of gamma-scan
    #[serde(default)]
    limit_radius: Option<f64>,
}

fn default_max_order() -> usize {
    expansion::DEFAULT_MAX_ORDER
}

struct Loaded {
    input: EnergyInput,
    spec: QuadratureSpec,
    config: RunConfig,
}

fn load(path: &Path) -> anyhow::Result<Loaded> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config: RunConfig = serde_json::from_str(&text).context("parsing config JSON")?;
    if !(2..=5).contains(&config.n) {
        anyhow::bail!("n must lie in [2, 5], got {}", config.n);
    }
    if !(config.d > 1.0) {
        anyhow::bail!("D must exceed 1, got {}", config.d);
    }
    if config.max_order > 6 {
        anyhow::bail!("max_order must be at most 6, got {}", config.max_order);
    }
    let n = Dimension::new(config.n).map_err(|e| anyhow::anyhow!("{e}"))?;
    let k = PolyField::from_json(&config.k).map_err(|e| anyhow::anyhow!("K: {e}"))?;
    let h = PolyField::from_json(&config.h).map_err(|e| anyhow::anyhow!("H: {e}"))?;
    if k.dim() != config.n || h.dim() != config.n {
        anyhow::bail!("K and H must be polynomials in n = {} variables", config.n);
    }
    let input = EnergyInput::new(n, config.d, config.eps, k, SphereFunction::new(h))
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let q = config.quadrature.as_ref().cloned_or_default();
    let spec = QuadratureSpec {
        rel_tol: q.rel_tol,
        abs_tol: q.abs_tol,
        max_subdivisions: q.max_subdivisions,
        ..Default::default()
    };
    Ok(Loaded { input, spec, config })
}

trait ClonedOrDefault {
    fn cloned_or_default(&self) -> QuadratureConfig;
}

impl ClonedOrDefault for Option<&QuadratureConfig> {
    fn cloned_or_default(&self) -> QuadratureConfig {
        match self {
            Some(q) => QuadratureConfig {
                rel_tol: q.rel_tol,
                abs_tol: q.abs_tol,
                max_subdivisions: q.max_subdivisions,
            },
            None => QuadratureConfig::default(),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Constants(args) => run_constants(args),
        Command::GammaScan(args) => run_gamma_scan(args),
        Command::ExpansionCheck(args) => run_expansion_check(args),
        Command::Certificate(args) => run_certificate(args),
    };
    std::process::exit(code);
}

fn config_error(e: anyhow::Error) -> i32 {
    eprintln!("config error: {e:#}");
    EXIT_CONFIG
}

fn numerical_error(e: impl std::fmt::Display) -> i32 {
    eprintln!("numerical failure: {e}");
    EXIT_NUMERICAL
}

fn write_out(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let mut f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(bytes)?;
    Ok(())
}

fn run_constants(args: &CommonArgs) -> i32 {
    let loaded = match load(&args.config) {
        Ok(l) => l,
        Err(e) => return config_error(e),
    };
    let tab = match expansion::constants_table(loaded.config.n, loaded.config.d, loaded.config.max_order, &loaded.spec) {
        Ok(t) => t,
        Err(e) => return numerical_error(e),
    };
    let json = serde_json::to_vec_pretty(&tab).expect("serializing constants table");
    match write_out(&args.out, &json) {
        Ok(()) => EXIT_OK,
        Err(e) => config_error(e),
    }
}

#[derive(Serialize)]
struct ScanSummary {
    rows: usize,
    limit_deviation: Option<f64>,
}

fn run_gamma_scan(args: &CommonArgs) -> i32 {
    let loaded = match load(&args.config) {
        Ok(l) => l,
        Err(e) => return config_error(e),
    };
    let cfg = &loaded.config;
    if cfg.lambdas.is_empty() || cfg.x0_list.is_empty() {
        return config_error(anyhow::anyhow!("gamma-scan requires nonempty `lambdas` and `x0_list` grids"));
    }
    let n = cfg.n;
    let mut csv = String::new();
    for i in 0..n - 1 {
        csv.push_str(&format!("x0_{i},"));
    }
    csv.push_str("lambda,gamma,error_estimate,flag\r\n");
    for x0 in &cfg.x0_list {
        if x0.len() != n - 1 {
            return config_error(anyhow::anyhow!("x0 entries must have length n−1 = {}", n - 1));
        }
        for &l in &cfg.lambdas {
            if !(l > 0.0) {
                return config_error(anyhow::anyhow!("λ values must be positive"));
            }
            let b = match prescurv::BubbleParams::new(loaded.input.n, cfg.d, x0.clone(), l) {
                Ok(b) => b,
                Err(e) => return config_error(anyhow::anyhow!("{e}")),
            };
            let (g, flag) = match prescurv::energy::gamma(&b, &loaded.input, &loaded.spec) {
                Ok(g) => (g, ""),
                Err(prescurv::energy::EnergyError::Quadrature(q)) => match q.partial_result() {
                    Some(r) => (r, "tolerance_not_reached"),
                    None => return numerical_error(q),
                },
                Err(e) => return numerical_error(e),
            };
            for c in x0 {
                csv.push_str(&format!("{c},"));
            }
            csv.push_str(&format!("{},{},{},{}\r\n", l, g.value, g.error_estimate, flag));
        }
    }
    // limit-row comparison against ψ(south pole)
    let mut limit_dev = None;
    if let Some(r) = cfg.limit_radius {
        match prescurv::energy::gamma_limit_check(&loaded.input, r, &loaded.spec) {
            Ok(dev) => {
                limit_dev = Some(dev);
                csv.push_str(&format!("limit_radius,{r},deviation,{dev},\r\n"));
            }
            Err(e) => return numerical_error(e),
        }
    }
    match write_out(&args.out, csv.as_bytes()) {
        Ok(()) => {
            let _ = ScanSummary { rows: cfg.x0_list.len() * cfg.lambdas.len(), limit_deviation: limit_dev };
            EXIT_OK
        }
        Err(e) => config_error(e),
    }
}

fn run_expansion_check(args: &CommonArgs) -> i32 {
    let loaded = match load(&args.config) {
        Ok(l) => l,
        Err(e) => return config_error(e),
    };
    let cfg = &loaded.config;
    if cfg.xi_list.is_empty() || cfg.lambdas.is_empty() {
        return config_error(anyhow::anyhow!("expansion-check requires nonempty `xi_list` and `lambdas`"));
    }
    let mut reports = Vec::new();
    for xi_raw in &cfg.xi_list {
        let xi = match BallPoint::new(xi_raw.clone()) {
            Ok(p) if p.is_on_sphere(1e-8) => p,
            _ => return config_error(anyhow::anyhow!("xi entries must be unit vectors of length n")),
        };
        match expansion::expansion_validate(&xi, &loaded.input, &cfg.lambdas, cfg.max_order, &loaded.spec) {
            Ok(rep) => reports.push(rep),
            Err(e @ expansion::ExpansionError::FitUnstable(_)) => return numerical_error(e),
            Err(e) => return numerical_error(e),
        }
    }
    let json = serde_json::to_vec_pretty(&reports).expect("serializing fit reports");
    match write_out(&args.out, &json) {
        Ok(()) => EXIT_OK,
        Err(e) => config_error(e),
    }
}

#[derive(Serialize)]
struct CertificateOutput {
    n: usize,
    #[serde(rename = "D")]
    d: f64,
    eps_informational: f64,
    certificate: critical::Certificate,
}

fn run_certificate(args: &CommonArgs) -> i32 {
    let loaded = match load(&args.config) {
        Ok(l) => l,
        Err(e) => return config_error(e),
    };
    let cfg = &loaded.config;
    let tab = match expansion::constants_table(cfg.n, cfg.d, cfg.max_order, &loaded.spec) {
        Ok(t) => t,
        Err(e) => return numerical_error(e),
    };
    let cert = match critical::certificate(&loaded.input, &tab, &loaded.spec, cfg.max_order) {
        Ok(c) => c,
        Err(critical::CriticalError::DegenerateD) => {
            eprintln!("degenerate parameter: D = 2/√3 is excluded in two dimensions");
            return EXIT_DEGENERATE;
        }
        Err(e) => return numerical_error(e),
    };
    let verdict = cert.verdict;
    let out = CertificateOutput { n: cfg.n, d: cfg.d, eps_informational: cfg.eps, certificate: cert };
    let json = serde_json::to_vec_pretty(&out).expect("serializing certificate");
    if let Err(e) = write_out(&args.out, &json) {
        return config_error(e);
    }
    match verdict {
        Verdict::Exists => EXIT_OK,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

//! Batch front end: experiment configs, subcommands and CSV/JSON output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::densities::{gaussian_class_params, lambda_min, raw_gaussian_log_kappa, ClassParams, ClassVariant, Density};
use crate::error::Error;
use crate::estimators::{mse_with_jackknife, EstimatorSpec, Mode};
use crate::geometry::ConvexBody;
use crate::integrand::Integrand;
use crate::linalg::cholesky;
use crate::quadrature::CompensatedSum;
use crate::rng::RandomStream;
use crate::schedules::schedule_for;
use crate::special::r_star;
use crate::validation::{run_suite, OracleReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ORACLE: i32 = 3;

/// κ above this is flagged as likely to overflow downstream arithmetic.
pub const KAPPA_OVERFLOW_PRONE: f64 = 1e30;

#[derive(Debug, Parser)]
#[command(name = "hitrun", version, about = "Hit-and-run integration of log-concave densities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads (defaults to the number of cores). Results do not
    /// depend on this.
    #[arg(long, global = true)]
    pub parallel: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run repeated estimates from an experiment config.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// CSV path; overrides the config's `out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the theorem schedule (n, n0) for a class parameter file.
    Schedule {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        eps: f64,
        /// bounded | average; overrides the file's variant.
        #[arg(long)]
        variant: Option<ClassVariant>,
    },
    /// Tabulate r*(d) for d = 1..d_max.
    Rstar {
        #[arg(long, default_value_t = 500)]
        d_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Class parameters of a centered Gaussian from its covariance.
    GaussianParams {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the oracle suite.
    Validate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Oracle(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Oracle(_) => EXIT_ORACLE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Oracle(m) => write!(f, "oracle failure: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence(_) | Error::NotLogConcave(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Burn-in given explicitly or derived from a theorem schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BurnIn {
    Steps(u64),
    FromTheorem { from_theorem: TheoremRef },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremRef {
    pub epsilon: f64,
    pub params: ClassParams,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub density: Density,
    /// Start set; uniform initial states are drawn from it.
    pub g: ConvexBody,
    pub integrand: Integrand,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    pub n: u64,
    pub n0: BurnIn,
    #[serde(default = "default_reps")]
    pub reps: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Known value of the integral, for the empirical MSE.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
}

fn default_mode() -> Mode {
    Mode::Multi
}

fn default_reps() -> u64 {
    1
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.reps == 0 {
            return Err(CliError::Config("reps must be at least 1".into()));
        }
        if cfg.g.dim() != cfg.density.dim() {
            return Err(CliError::Config(format!(
                "g has dimension {} but the density has dimension {}",
                cfg.g.dim(),
                cfg.density.dim()
            )));
        }
        cfg.integrand.check_dim(cfg.density.dim())?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Explicit burn-in, or the theorem schedule's when it is practical.
    pub fn resolve_n0(&self) -> CliResult<u64> {
        match &self.n0 {
            BurnIn::Steps(k) => Ok(*k),
            BurnIn::FromTheorem { from_theorem } => {
                if from_theorem.params.d != self.density.dim() {
                    return Err(CliError::Config("from_theorem params have the wrong dimension".into()));
                }
                let s = schedule_for(from_theorem.epsilon, &from_theorem.params)?;
                s.n0.as_u64().ok_or_else(|| {
                    CliError::Config(format!(
                        "n0.from_theorem: the theorem burn-in {:.3e} exceeds 2^63 - 1 steps; give n0 explicitly",
                        s.n0.value
                    ))
                })
            }
        }
    }
}

fn timing_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".timing.csv");
    PathBuf::from(s)
}

fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

/// Runs `reps` estimates; repetition i uses substream i of the master seed.
///
/// Writes the CSV `rep,value,n,n0,seed`, wall times to `<out>.timing.csv`
/// and a JSON summary next to the CSV. Returns the summary.
pub fn cmd_estimate(cfg: &ExperimentConfig, seed: Option<u64>, out: Option<&Path>) -> CliResult<serde_json::Value> {
    let seed = seed.unwrap_or(cfg.seed);
    let out = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("estimate.csv"));
    let n0 = cfg.resolve_n0()?;
    let spec = EstimatorSpec {
        density: &cfg.density,
        integrand: &cfg.integrand,
        g: &cfg.g,
        n: cfg.n,
        n0,
        mode: cfg.mode,
    };
    let master = RandomStream::new(seed);
    let mut csv = String::from("rep,value,n,n0,seed\n");
    let mut timing = String::from("rep,wall_time_ms\n");
    let mut values = Vec::with_capacity(cfg.reps as usize);
    let mut clamped = 0;
    for rep in 0..cfg.reps {
        let stream = master.substream(rep);
        let t = Instant::now();
        let res = spec.run(&stream)?;
        let ms = t.elapsed().as_secs_f64() * 1e3;
        writeln!(csv, "{rep},{},{},{},{}", res.value, res.n, res.n0, stream.seed()).unwrap();
        writeln!(timing, "{rep},{ms:.3}").unwrap();
        clamped += res.clamped;
        values.push(res.value);
    }
    let mean = values.iter().copied().collect::<CompensatedSum>().value() / values.len() as f64;
    let mut summary = json!({
        "mean": mean,
        "reps": cfg.reps,
        "n": cfg.n,
        "n0": n0,
        "mode": cfg.mode,
        "seed": seed,
        "clamped": clamped,
    });
    if let Some(reference) = cfg.reference {
        if values.len() >= 2 {
            let (mse, se) = mse_with_jackknife(&values, reference);
            summary["reference"] = json!(reference);
            summary["mse"] = json!(mse);
            summary["mse_jackknife_se"] = json!(se);
        }
    }
    write(&out, &csv)?;
    write(&timing_path(&out), &timing)?;
    write(&summary_path(&out), &(serde_json::to_string_pretty(&summary).unwrap() + "\n"))?;
    Ok(summary)
}

/// Schedule as JSON; the derivation trace is returned separately.
pub fn cmd_schedule(params_json: &str, eps: f64, variant: Option<ClassVariant>) -> CliResult<(String, Vec<String>)> {
    let mut params: ClassParams = serde_json::from_str(params_json).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(v) = variant {
        params.variant = v;
    }
    let s = schedule_for(eps, &params)?;
    let body = json!({
        "variant": params.variant,
        "epsilon": s.epsilon,
        "n": s.n,
        "n0": s.n0.value,
        "n0_impractical": s.n0.impractical,
        "cost": s.cost.value,
        "cost_impractical": s.cost.impractical,
        "mode": s.mode,
        "d": params.d,
        "r": params.r,
        "R": params.big_r,
        "log_kappa": params.log_kappa,
    });
    Ok((serde_json::to_string_pretty(&body).unwrap(), s.trace))
}

/// CSV `d,r_star` for d = 1..d_max.
pub fn cmd_rstar(d_max: usize) -> CliResult<String> {
    if d_max == 0 {
        return Err(CliError::Config("d_max must be at least 1".into()));
    }
    let mut out = String::from("d,r_star\n");
    for d in 1..=d_max {
        writeln!(out, "{d},{}", r_star(d)?.r_star).unwrap();
    }
    Ok(out)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SigmaFile {
    Wrapped { sigma: Vec<Vec<f64>> },
    Bare(Vec<Vec<f64>>),
}

/// `{r, R, kappa, log_kappa, kappa_overflow_prone}` for `exp(−½ xᵀΣ⁻¹x)`.
///
/// `log_kappa` is the unclamped value; `kappa` is what the class parameters
/// use (at least 3) and is `null` when it overflows.
pub fn cmd_gaussian_params(sigma_json: &str) -> CliResult<serde_json::Value> {
    let sigma = match serde_json::from_str::<SigmaFile>(sigma_json)
        .map_err(|e| CliError::Config(format!("expected {{\"sigma\": [[...]]}} or a bare matrix: {e}")))?
    {
        SigmaFile::Wrapped { sigma } | SigmaFile::Bare(sigma) => sigma,
    };
    let factor = cholesky(&sigma)?;
    let lmin = lambda_min(&factor)?;
    let raw = raw_gaussian_log_kappa(&factor, lmin);
    let p = gaussian_class_params(&factor)?;
    let kappa = p.kappa();
    Ok(json!({
        "d": p.d,
        "r": p.r,
        "R": p.big_r,
        "kappa": if kappa.is_finite() { json!(kappa) } else { serde_json::Value::Null },
        "log_kappa": raw,
        "kappa_overflow_prone": !(kappa <= KAPPA_OVERFLOW_PRONE),
        "lambda_min": lmin,
    }))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Oracle table as CSV.
pub fn reports_csv(reports: &[OracleReport]) -> String {
    let mut out = String::from("name,statistic,threshold,pass,detail\n");
    for r in reports {
        writeln!(out, "{},{:e},{:e},{},{}", r.name, r.statistic, r.threshold, r.pass, csv_field(&r.detail)).unwrap();
    }
    out
}

/// Runs the oracle suite, writing CSV and JSON tables when `out` is set.
pub fn cmd_validate(seed: u64, out: Option<&Path>) -> CliResult<Vec<OracleReport>> {
    let reports = run_suite(seed)?;
    if let Some(out) = out {
        write(out, &reports_csv(&reports))?;
        write(&out.with_extension("json"), &(serde_json::to_string_pretty(&reports).unwrap() + "\n"))?;
    }
    Ok(reports)
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Estimate { config, seed, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let summary = cmd_estimate(&cfg, seed, out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&summary).unwrap());
        }
        Command::Schedule { config, eps, variant } => {
            let text = fs::read_to_string(&config).map_err(|e| CliError::Config(format!("{}: {e}", config.display())))?;
            let (body, trace) = cmd_schedule(&text, eps, variant)?;
            for line in trace {
                eprintln!("{line}");
            }
            println!("{body}");
        }
        Command::Rstar { d_max, out } => {
            let table = cmd_rstar(d_max)?;
            match out {
                Some(p) => write(&p, &table)?,
                None => print!("{table}"),
            }
        }
        Command::GaussianParams { config } => {
            let text = fs::read_to_string(&config).map_err(|e| CliError::Config(format!("{}: {e}", config.display())))?;
            println!("{}", serde_json::to_string_pretty(&cmd_gaussian_params(&text)?).unwrap());
        }
        Command::Validate { seed, out } => {
            let reports = cmd_validate(seed, out.as_deref())?;
            print!("{}", reports_csv(&reports));
            let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
            if !failed.is_empty() {
                return Err(CliError::Oracle(failed.join(", ")));
            }
        }
    }
    Ok(())
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.parallel {
        if n == 0 {
            eprintln!("config error: --parallel must be at least 1");
            return EXIT_CONFIG;
        }
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HALFSPACE: &str = r#"{
        "density": {"type": "uniform", "body": {"type": "ball", "center": [0, 0], "radius": 1}},
        "g": {"type": "ball", "center": [0, 0], "radius": 1},
        "integrand": {"name": "halfspace", "a": [1, 0], "b": 0},
        "mode": "multi",
        "n": 200,
        "n0": 20,
        "reps": 50,
        "seed": 9,
        "reference": 0.5
    }"#;

    #[test]
    fn config_round_trip() {
        let cfg = ExperimentConfig::from_json(HALFSPACE).unwrap();
        let a = serde_json::to_value(&cfg).unwrap();
        let again = ExperimentConfig::from_json(&a.to_string()).unwrap();
        assert_eq!(serde_json::to_value(&again).unwrap(), a);
    }

    #[test]
    fn config_errors_name_the_problem() {
        let bad = HALFSPACE.replace("\"reps\"", "\"repz\"");
        match ExperimentConfig::from_json(&bad) {
            Err(CliError::Config(m)) => assert!(m.contains("repz") && m.contains("line"), "{m}"),
            other => panic!("{other:?}"),
        }
        let no_seed = HALFSPACE.replace("\"seed\": 9,", "");
        assert!(matches!(ExperimentConfig::from_json(&no_seed), Err(CliError::Config(_))));
    }

    #[test]
    fn theorem_burn_in_is_rejected_as_impractical() {
        let cfg = HALFSPACE.replace(
            "\"n0\": 20",
            r#""n0": {"from_theorem": {"epsilon": 0.1, "params": {"d": 2, "r": 0.5, "R": 1, "kappa": 3, "variant": "bounded"}}}"#,
        );
        let cfg = ExperimentConfig::from_json(&cfg).unwrap();
        let e = cfg.resolve_n0().unwrap_err();
        assert_eq!(e.exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn estimate_halfspace_and_constant() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::from_json(HALFSPACE).unwrap();
        let out = dir.path().join("h.csv");
        let s = cmd_estimate(&cfg, None, Some(&out)).unwrap();
        assert!((s["mean"].as_f64().unwrap() - 0.5).abs() < 0.02);
        assert!(s["mse"].as_f64().is_some());
        let first = fs::read(&out).unwrap();
        cmd_estimate(&cfg, None, Some(&out)).unwrap();
        assert_eq!(first, fs::read(&out).unwrap());
        assert!(timing_path(&out).exists() && summary_path(&out).exists());

        let constant = HALFSPACE.replace(r#"{"name": "halfspace", "a": [1, 0], "b": 0}"#, r#"{"name": "constant", "value": 1}"#);
        let cfg = ExperimentConfig::from_json(&constant).unwrap();
        let out = dir.path().join("c.csv");
        cmd_estimate(&cfg, None, Some(&out)).unwrap();
        let text = fs::read_to_string(&out).unwrap();
        for line in text.lines().skip(1) {
            assert_eq!(line.split(',').nth(1), Some("1"));
        }
    }

    #[test]
    fn schedule_command() {
        let params = r#"{"d": 3, "r": 1, "R": 2, "kappa": 100, "variant": "bounded"}"#;
        let (body, trace) = cmd_schedule(params, 0.1, None).unwrap();
        let v: serde_json::Value = serde_json::from_str(&body).unwrap();
        assert_eq!(v["n"], 100);
        assert!((v["n0"].as_f64().unwrap() / 6.528_122_630_598_571e31 - 1.0).abs() < 1e-12);
        assert!(!trace.is_empty());
        let (avg, _) = cmd_schedule(params, 0.1, Some(ClassVariant::Average)).unwrap();
        let w: serde_json::Value = serde_json::from_str(&avg).unwrap();
        assert!(w["n0"].as_f64().unwrap() > v["n0"].as_f64().unwrap());
        assert_eq!(cmd_schedule(params, 0.7, None).unwrap_err().exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn rstar_command() {
        let t = cmd_rstar(1).unwrap();
        assert_eq!(t.lines().count(), 2);
        let t = cmd_rstar(50).unwrap();
        let vals: Vec<f64> = t.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
        assert!((vals[1] - (8.0f64 / 7.0).ln()).abs() < 1e-9);
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
        assert!(cmd_rstar(0).is_err());
    }

    #[test]
    fn gaussian_params_command() {
        let v = cmd_gaussian_params(r#"{"sigma": [[1, 0], [0, 1]]}"#).unwrap();
        assert!((v["r"].as_f64().unwrap() - 0.365_419_474_884_033_3).abs() < 1e-9);
        assert!((v["R"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((v["kappa"].as_f64().unwrap() - 3.297_442_541_400_256).abs() < 1e-9);
        assert_eq!(v["kappa_overflow_prone"], false);

        let v = cmd_gaussian_params("[[4, 0], [0, 1]]").unwrap();
        assert!((v["R"].as_f64().unwrap() - 0.5 * 5f64.sqrt()).abs() < 1e-12);

        let eye: Vec<Vec<f64>> = (0..100).map(|i| (0..100).map(|j| (i == j) as u8 as f64).collect()).collect();
        let v = cmd_gaussian_params(&serde_json::to_string(&eye).unwrap()).unwrap();
        assert!((v["log_kappa"].as_f64().unwrap() - 183.635_125_979_770_3).abs() < 1e-9);
        assert_eq!(v["kappa_overflow_prone"], true);

        assert_eq!(cmd_gaussian_params("[[1, 2], [2, 1]]").unwrap_err().exit_code(), EXIT_CONFIG);
    }
}

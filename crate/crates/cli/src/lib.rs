//! Command dispatch for the `kyp-storage` binary.
//!
//! `run` never prints; it returns the exit code and the text destined for
//! standard output so the whole pipeline can be exercised in tests.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use kyp_core::format::{self, number};
use kyp_core::linalg::{self, CMat, CVec};
use kyp_core::system::hinf_norm_detailed;
use kyp_core::{
    compute_ha, compute_hr, dissipation_trace, kyp_gap, minimality_report, random, simulate, standard_brl,
    strict_brl_with, Error as CoreError, KypFlavor, StateSpaceSystem, StorageEvaluator, StorageOptions,
};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Environment variable that takes precedence over `--seed`.
pub const SEED_ENV: &str = "KYP_STORAGE_SEED";

const HINF_REL_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "kyp-storage", version, about = "Storage functions and KYP certificates for discrete-time systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stability, minimality and H-infinity norm.
    Analyze(Common),
    /// Extremal storage certificates and storage values at a state.
    Storage(StorageArgs),
    /// Check a user-supplied H against the KYP inequality.
    Kyp(KypArgs),
    /// Bounded Real Lemma decision, standard or strict.
    Brl(BrlArgs),
    /// Simulate a trajectory and write it as CSV.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// System description in JSON.
    pub system: PathBuf,
    /// Write the report here instead of standard output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CertChoice {
    Available,
    Required,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct StorageArgs {
    #[command(flatten)]
    pub common: Common,
    /// Emit the certificate matrices.
    #[arg(long)]
    pub matrix: bool,
    /// Evaluate S_a and S_r at this state: `0.5,-1` or a JSON array.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    #[arg(long, value_enum, default_value = "both")]
    pub cert: CertChoice,
    /// Truncation horizon for the x0 values; defaults to the certificate horizon.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Relative tolerance of the horizon-doubling loop.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct KypArgs {
    #[command(flatten)]
    pub common: Common,
    /// JSON file with H: a matrix, a certificate, or a storage report.
    #[arg(long = "h", value_name = "FILE")]
    pub h: PathBuf,
    /// Certificate to take from a storage report.
    #[arg(long, value_enum)]
    pub cert: Option<CertChoice>,
    #[arg(long, value_enum, default_value = "standard")]
    pub flavor: Flavor,
    /// Strictness margin; only meaningful with `--flavor strict`.
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Flavor {
    Standard,
    Strict,
    Adjoint,
}

impl From<Flavor> for KypFlavor {
    fn from(f: Flavor) -> Self {
        match f {
            Flavor::Standard => KypFlavor::Standard,
            Flavor::Strict => KypFlavor::Strict,
            Flavor::Adjoint => KypFlavor::Adjoint,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct BrlArgs {
    #[command(flatten)]
    pub common: Common,
    /// Strict lemma through epsilon-regularization.
    #[arg(long)]
    pub strict: bool,
    /// Target gap `1 - |F_eps|_inf` when choosing epsilon.
    #[arg(long, default_value_t = kyp_core::brl::DEFAULT_SAFETY)]
    pub safety: f64,
    /// Relative tolerance of the horizon-doubling loop.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Initial state; zero when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    /// Number of steps.
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    /// `zero`, `random` (uniform on [-1, 1]) or a CSV file with one input per row.
    #[arg(long, default_value = "zero")]
    pub input: String,
    /// Seed for `--input random`; KYP_STORAGE_SEED takes precedence.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Storage matrix whose dissipation residual is appended as a column.
    #[arg(long = "h", value_name = "FILE")]
    pub h: Option<PathBuf>,
    /// Strictness margin: the residual gains `delta * (|x|^2 + |u|^2)`.
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Analyze(c) => c,
            Command::Storage(a) => &a.common,
            Command::Kyp(a) => &a.common,
            Command::Brl(a) => &a.common,
            Command::Simulate(a) => &a.common,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Core(CoreError),
    Io { path: PathBuf, message: String },
    Usage(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Io { .. } => "io-error",
            CliError::Usage(_) => "usage-error",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, message } => write!(f, "{}: {message}", path.display()),
            CliError::Usage(m) => f.write_str(m),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Exit code plus the text for standard output. A report that was written
/// to `--output` leaves `stdout` empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
}

pub fn error_report(err: &CliError) -> String {
    let v = json!({ "error": { "code": err.code(), "message": err.to_string() } });
    format::to_canonical_string(&v)
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_owned(), message: e.to_string() })
}

pub fn parse_system_file(path: &Path) -> CliResult<StateSpaceSystem> {
    Ok(format::parse_system(&read(path)?)?)
}

/// A state vector from `1,-0.5` (reals) or a JSON array of numbers and
/// `[re, im]` pairs.
pub fn parse_vector(text: &str, name: &str) -> CliResult<CVec> {
    let text = text.trim();
    if text.starts_with('[') {
        return Ok(format::vector_from_value(&format::parse_json(text)?, name)?);
    }
    if text.is_empty() {
        return Ok(CVec::zeros(0));
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map(|x| Complex64::new(x, 0.0))
                .map_err(|e| CliError::Usage(format!("{name}: cannot parse {s:?}: {e}")))
        })
        .collect::<CliResult<Vec<_>>>()
        .map(CVec::from_vec)
}

/// `KYP_STORAGE_SEED` wins over `--seed`; zero when neither is given.
pub fn resolve_seed(flag: Option<u64>, env: Option<String>) -> CliResult<u64> {
    match env {
        Some(s) => s
            .trim()
            .parse()
            .map_err(|e| CliError::Usage(format!("{SEED_ENV}={s:?} is not an unsigned integer: {e}"))),
        None => Ok(flag.unwrap_or(0)),
    }
}

fn vector_value(v: &CVec) -> Value {
    let m = CMat::from_column_slice(v.len(), 1, v.as_slice()).transpose();
    match format::matrix_to_value(&m) {
        Value::Array(mut rows) if !rows.is_empty() => rows.swap_remove(0),
        _ => Value::Array(vec![]),
    }
}

fn json_only(common: &Common, what: &str) -> CliResult<()> {
    if common.format == Some(OutputFormat::Csv) {
        return Err(CliError::Usage(format!("{what} reports are JSON only")));
    }
    Ok(())
}

fn analyze(common: &Common) -> CliResult<(i32, String)> {
    json_only(common, "analyze")?;
    let sys = parse_system_file(&common.system)?;
    let report = minimality_report(&sys)?;
    let mut out = Map::new();
    out.insert("n".into(), Value::from(sys.n()));
    out.insert("m".into(), Value::from(sys.m()));
    out.insert("p".into(), Value::from(sys.p()));
    out.insert("spectral_radius".into(), number(report.spectral_radius));
    out.insert("controllable".into(), Value::from(report.controllable));
    out.insert("observable".into(), Value::from(report.observable));
    out.insert("minimal".into(), Value::from(report.minimal));
    match hinf_norm_detailed(&sys, HINF_REL_TOL) {
        Ok(est) => {
            out.insert("hinf".into(), number(est.norm));
            out.insert("hinf_theta".into(), number(est.theta));
        }
        // Poles on or outside the unit circle: the disk supremum is unbounded.
        Err(CoreError::Unstable { .. }) => {
            out.insert("hinf".into(), number(f64::INFINITY));
        }
        Err(e) => return Err(e.into()),
    }
    Ok((EXIT_OK, format::to_canonical_string(&Value::Object(out))))
}

fn storage(args: &StorageArgs) -> CliResult<(i32, String)> {
    json_only(&args.common, "storage")?;
    if !args.matrix && args.x0.is_none() {
        return Err(CliError::Usage("storage needs --matrix, --x0, or both".into()));
    }
    let sys = parse_system_file(&args.common.system)?;
    let x0 = args.x0.as_deref().map(|s| parse_vector(s, "x0")).transpose()?;
    if let Some(x) = &x0 {
        if x.len() != sys.n() {
            return Err(CoreError::DimensionMismatch {
                block: "x0".into(),
                expected: sys.n().to_string(),
                found: x.len().to_string(),
            }
            .into());
        }
    }
    let opts = StorageOptions::with_tol(args.tol);
    let want_a = args.cert != CertChoice::Required;
    let want_r = args.cert != CertChoice::Available;
    let need_certs = args.matrix || args.horizon.is_none();

    let mut out = Map::new();
    let ha = if want_a && need_certs { Some(compute_ha(&sys, &opts)?) } else { None };
    let hr = if want_r && need_certs { Some(compute_hr(&sys, &opts)?) } else { None };
    if args.matrix {
        if let Some(c) = &ha {
            out.insert("available".into(), format::certificate_to_value(c));
        }
        if let Some(c) = &hr {
            out.insert("required".into(), format::certificate_to_value(c));
        }
    }
    if let Some(x) = &x0 {
        out.insert("x0".into(), vector_value(x));
        if want_a {
            let horizon = args.horizon.or(ha.as_ref().map(|c| c.horizon)).expect("certificate computed");
            out.insert("S_a".into(), number(StorageEvaluator::new(&sys, horizon)?.available(x)?));
            out.insert("horizon_a".into(), Value::from(horizon));
        }
        if want_r {
            let horizon = args.horizon.or(hr.as_ref().map(|c| c.horizon)).expect("certificate computed");
            out.insert("S_r".into(), number(StorageEvaluator::new(&sys, horizon)?.required(x)?));
            out.insert("horizon_r".into(), Value::from(horizon));
        }
    }
    Ok((EXIT_OK, format::to_canonical_string(&Value::Object(out))))
}

/// Reads H from a bare matrix, a certificate object, or a storage report
/// holding `available` and/or `required` certificates.
fn load_h(path: &Path, choice: Option<CertChoice>) -> CliResult<CMat> {
    let v = format::parse_json(&read(path)?)?;
    let has = |key: &str| v.get(key).is_some_and(|c| c.get("H").is_some());
    let source = if has("available") || has("required") {
        let key = match choice {
            Some(CertChoice::Both) => return Err(CliError::Usage("--cert must name a single certificate".into())),
            Some(CertChoice::Required) => "required",
            Some(CertChoice::Available) => "available",
            None if has("available") => "available",
            None => "required",
        };
        v.get(key)
            .ok_or_else(|| CliError::Usage(format!("{} has no {key} certificate", path.display())))?
    } else {
        &v
    };
    Ok(format::certificate_from_value(source)?.h)
}

fn kyp(args: &KypArgs) -> CliResult<(i32, String)> {
    json_only(&args.common, "kyp")?;
    let sys = parse_system_file(&args.common.system)?;
    let h = load_h(&args.h, args.cert)?;
    let report = kyp_gap(&sys, &h, args.flavor.into(), args.delta)?;
    let code = if report.feasible { EXIT_OK } else { EXIT_NEGATIVE };
    Ok((code, format::to_canonical_string(&format::kyp_report_to_value(&report))))
}

fn brl(args: &BrlArgs) -> CliResult<(i32, String)> {
    json_only(&args.common, "brl")?;
    let sys = parse_system_file(&args.common.system)?;
    if args.strict {
        let opts = StorageOptions::with_tol(args.tol);
        return match strict_brl_with(&sys, args.safety, &opts) {
            Ok(cert) => {
                let mut v = format::strict_certificate_to_value(&cert);
                let obj = v.as_object_mut().expect("certificate is an object");
                obj.insert("strict".into(), Value::from(true));
                obj.insert("horizon".into(), Value::from(cert.horizon));
                obj.insert(
                    "hinf_bound".into(),
                    number(kyp_core::brl::norm_bound_from_margin(cert.delta)),
                );
                Ok((EXIT_OK, format::to_canonical_string(&v)))
            }
            // Not strictly contractive is a verdict, not a failure.
            Err(e @ CoreError::NotStrictSchur { hinf }) => {
                let v = json!({ "strict": false, "hinf": number(hinf), "reason": e.to_string() });
                Ok((EXIT_NEGATIVE, format::to_canonical_string(&v)))
            }
            Err(e) => Err(e.into()),
        };
    }
    let decision = standard_brl(&sys)?;
    let mut out = Map::new();
    out.insert("schur".into(), Value::from(decision.schur));
    out.insert("hinf".into(), number(decision.hinf));
    out.insert("reason".into(), Value::from(decision.reason.clone()));
    out.insert(
        "certificate".into(),
        decision.certificate.as_ref().map_or(Value::Null, format::certificate_to_value),
    );
    out.insert("kyp".into(), decision.kyp.as_ref().map_or(Value::Null, format::kyp_report_to_value));
    let code = if decision.schur { EXIT_OK } else { EXIT_NEGATIVE };
    Ok((code, format::to_canonical_string(&Value::Object(out))))
}

fn read_input_csv(path: &Path, m: usize, steps: usize) -> CliResult<Vec<CVec>> {
    let text = read(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut inputs = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Io { path: path.to_owned(), message: e.to_string() })?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let Ok(values) = parsed else {
            if line == 0 {
                continue; // header row
            }
            return Err(CliError::Core(CoreError::Parse(format!("{}: row {}: non-numeric entry", path.display(), line + 1))));
        };
        if values.len() != m {
            return Err(CoreError::DimensionMismatch {
                block: format!("input row {}", line + 1),
                expected: m.to_string(),
                found: values.len().to_string(),
            }
            .into());
        }
        inputs.push(CVec::from_iterator(m, values.into_iter().map(|x| Complex64::new(x, 0.0))));
        if inputs.len() == steps {
            break;
        }
    }
    if inputs.len() < steps {
        return Err(CliError::Usage(format!("{} holds {} inputs, {steps} requested", path.display(), inputs.len())));
    }
    Ok(inputs)
}

fn push_vector(header: &mut Vec<String>, prefix: &str, len: usize, complex: bool) {
    for i in 1..=len {
        if complex {
            header.push(format!("{prefix}{i}_re"));
            header.push(format!("{prefix}{i}_im"));
        } else {
            header.push(format!("{prefix}{i}"));
        }
    }
}

fn push_values(row: &mut Vec<String>, v: &CVec, complex: bool) {
    for z in v.iter() {
        row.push(z.re.to_string());
        if complex {
            row.push(z.im.to_string());
        }
    }
}

fn simulate_cmd(args: &SimulateArgs, seed_env: Option<String>) -> CliResult<(i32, String)> {
    let sys = parse_system_file(&args.common.system)?;
    let x0 = match &args.x0 {
        Some(s) => parse_vector(s, "x0")?,
        None => CVec::zeros(sys.n()),
    };
    let inputs = match args.input.as_str() {
        "zero" => vec![CVec::zeros(sys.m()); args.steps],
        "random" => random::uniform_inputs(resolve_seed(args.seed, seed_env)?, sys.m(), args.steps),
        path => read_input_csv(Path::new(path), sys.m(), args.steps)?,
    };
    let traj = simulate(&sys, &x0, &inputs, 0)?;
    let residuals = match &args.h {
        Some(path) => Some(dissipation_trace(&sys, &load_h(path, None)?, &traj, args.delta)?.residuals),
        None => None,
    };

    if args.common.format == Some(OutputFormat::Json) {
        let mut out = Map::new();
        out.insert("inputs".into(), Value::Array(traj.inputs.iter().map(vector_value).collect()));
        out.insert("states".into(), Value::Array(traj.states.iter().map(vector_value).collect()));
        out.insert("outputs".into(), Value::Array(traj.outputs.iter().map(vector_value).collect()));
        if let Some(r) = &residuals {
            out.insert("residual".into(), Value::Array(r.iter().copied().map(number).collect()));
        }
        return Ok((EXIT_OK, format::to_canonical_string(&Value::Object(out))));
    }

    let complex = !sys.is_real() || !linalg::is_real(&CMat::from_column_slice(x0.len(), 1, x0.as_slice()));
    let mut header = vec!["k".to_string()];
    push_vector(&mut header, "u", sys.m(), complex);
    push_vector(&mut header, "x", sys.n(), complex);
    push_vector(&mut header, "y", sys.p(), complex);
    if residuals.is_some() {
        header.push("residual".into());
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Io { path: PathBuf::from("<csv>"), message: e.to_string() };
    writer.write_record(&header).map_err(csv_err)?;
    for k in 0..traj.len() {
        let mut row = vec![k.to_string()];
        push_values(&mut row, &traj.inputs[k], complex);
        push_values(&mut row, &traj.states[k], complex);
        push_values(&mut row, &traj.outputs[k], complex);
        if let Some(r) = &residuals {
            row.push(r[k].to_string());
        }
        writer.write_record(&row).map_err(csv_err)?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::Io { path: PathBuf::from("<csv>"), message: e.to_string() })?;
    Ok((EXIT_OK, String::from_utf8(bytes).expect("csv output is UTF-8")))
}

fn dispatch(cli: &Cli, seed_env: Option<String>) -> CliResult<(i32, String)> {
    match &cli.command {
        Command::Analyze(c) => analyze(c),
        Command::Storage(a) => storage(a),
        Command::Kyp(a) => kyp(a),
        Command::Brl(a) => brl(a),
        Command::Simulate(a) => simulate_cmd(a, seed_env),
    }
}

/// Runs a parsed request. `seed_env` is the value of `KYP_STORAGE_SEED`.
pub fn run(cli: &Cli, seed_env: Option<String>) -> Outcome {
    match dispatch(cli, seed_env) {
        Ok((code, mut text)) => {
            if !text.ends_with('\n') {
                text.push('\n');
            }
            match &cli.command.common().output {
                Some(path) => match fs::write(path, &text) {
                    Ok(()) => Outcome { code, stdout: String::new() },
                    Err(e) => failure(&CliError::Io { path: path.clone(), message: e.to_string() }),
                },
                None => Outcome { code, stdout: text },
            }
        }
        Err(e) => failure(&e),
    }
}

fn failure(err: &CliError) -> Outcome {
    Outcome { code: EXIT_ERROR, stdout: error_report(err) + "\n" }
}

/// Parses `argv` and runs it; usage errors become error reports.
pub fn run_args<I, T>(argv: I, seed_env: Option<String>) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => run(&cli, seed_env),
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                Outcome { code: EXIT_OK, stdout: e.to_string() }
            }
            _ => failure(&CliError::Usage(e.to_string().trim_end().to_string())),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectors_parse_both_ways() {
        let v = parse_vector("0.5, -1", "x0").unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[1].re, -1.0);
        let v = parse_vector("[1, [0.5, 0.25]]", "x0").unwrap();
        assert_eq!(v[1], Complex64::new(0.5, 0.25));
        assert!(parse_vector("1,,2", "x0").is_err());
    }

    #[test]
    fn env_seed_overrides_flag() {
        assert_eq!(resolve_seed(Some(3), None).unwrap(), 3);
        assert_eq!(resolve_seed(Some(3), Some("11".into())).unwrap(), 11);
        assert_eq!(resolve_seed(None, None).unwrap(), 0);
        assert!(resolve_seed(None, Some("x".into())).is_err());
    }

    #[test]
    fn error_report_shape() {
        let text = error_report(&CliError::Usage("nope".into()));
        assert_eq!(text, r#"{"error":{"code":"usage-error","message":"nope"}}"#);
    }
}

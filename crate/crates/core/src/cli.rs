//! Command-line front end: `test`, `quantile` and `simulate`.
//!
//! Exit codes: 0 success, 2 data/parameter/configuration error, 3 numerical
//! failure, 4 usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::harness::{self, ExperimentConfig, Source, TableFormat, TestKind};
use crate::nulldist::{beta_product_model, NullCdf, NullMethod};
use crate::randomn::{truncated_weights, CountModel, MixtureLaw, DEFAULT_TAIL_EPS};
use crate::simgen::{CovarianceSpec, Family, ShiftSpec};
use crate::statistic::{lrt_statistic, GroupedSample};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_USAGE: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "circ-manova", version, about = "Circular-covariance LRT for high-dimensional MANOVA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the test on a data file (label followed by p values per row).
    Test(TestArgs),
    /// Critical value Λ_α of the null distribution.
    Quantile(QuantileArgs),
    /// Monte Carlo size/power tables from a key=value config file.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
struct TestArgs {
    path: PathBuf,
    /// exact, egig, cf or asymptotic.
    #[arg(long, default_value = "exact")]
    method: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Print full precision.
    #[arg(long)]
    raw: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum QuantileMethod {
    Exact,
    Asymptotic,
    Mixture,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CountKind {
    Poisson,
    Binomial,
    Negbin,
    Point,
}

#[derive(Args, Debug)]
struct QuantileArgs {
    /// Total sample size (ignored by --method mixture unless --count point).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    q: usize,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "exact")]
    method: QuantileMethod,
    /// Law of the random sample size for --method mixture.
    #[arg(long, value_enum)]
    count: Option<CountKind>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    successes: Option<u64>,
    #[arg(long)]
    prob: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TAIL_EPS)]
    tail_eps: f64,
    #[arg(long)]
    raw: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    config: PathBuf,
    /// Output file; the table goes to standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Base seed; overrides a `seed` key in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,
    /// Report progress on standard error.
    #[arg(long)]
    progress: bool,
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Test(a) => cmd_test(&a, out),
        Command::Quantile(a) => cmd_quantile(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_user_error() {
                EXIT_USER
            } else {
                EXIT_NUMERIC
            }
        }
    }
}

/// Six significant digits, or the shortest round-trip form with `raw`.
pub fn format_number(x: f64, raw: bool) -> String {
    if raw || !x.is_finite() || x == 0.0 {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..6).contains(&exp) {
        let s = format!("{:.*}", (5 - exp).max(0) as usize, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.5e}");
        let (m, e) = s.split_once('e').expect("scientific format");
        let m = if m.contains('.') { m.trim_end_matches('0').trim_end_matches('.') } else { m };
        format!("{m}e{e}")
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::InvalidInput(format!("cannot read {}: {e}", path.display()))
}

/// Parses a dataset: one observation per row, a group label followed by p
/// numbers, separated by commas or whitespace. Blank lines and lines
/// starting with '#' are skipped; groups are numbered by first appearance.
pub fn parse_dataset(text: &str) -> Result<GroupedSample> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut p = None;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = if line.contains(',') {
            line.split(',').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        let width = cells.len() - 1;
        if width == 0 {
            return Err(Error::InvalidInput(format!("line {}: no values after the label", ln + 1)));
        }
        match p {
            None => p = Some(width),
            Some(p) if p != width => {
                return Err(Error::InvalidInput(format!(
                    "line {}: ragged row with {width} values, expected {p}",
                    ln + 1
                )))
            }
            _ => {}
        }
        let label = cells[0].to_string();
        let k = match order.iter().position(|l| *l == label) {
            Some(k) => k,
            None => {
                order.push(label);
                order.len() - 1
            }
        };
        let row = groups.entry(k).or_default();
        for c in &cells[1..] {
            let v: f64 = c.parse().map_err(|_| {
                Error::InvalidInput(format!("line {}: non-numeric cell '{c}'", ln + 1))
            })?;
            row.push(v);
        }
    }
    let Some(p) = p else {
        return Err(Error::InvalidInput("no observations in data file".into()));
    };
    if order.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 distinct group labels, found {}",
            order.len()
        )));
    }
    let rows: Vec<Vec<f64>> = groups.into_values().collect();
    GroupedSample::from_rows(p, &rows)
}

fn cmd_test(a: &TestArgs, out: &mut dyn Write) -> Result<()> {
    let method: NullMethod = a.method.parse()?;
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(Error::InvalidParameters(format!("alpha must lie in (0,1), got {}", a.alpha)));
    }
    let text = std::fs::read_to_string(&a.path).map_err(|e| io_err(&a.path, e))?;
    let s = parse_dataset(&text)?;
    let r = lrt_statistic(&s)?;
    let model = beta_product_model(s.n(), s.q(), s.p())?;
    let law = NullCdf::resolve(&model, method)?;
    let pv = law.sf_w(r.w)?.clamp(0.0, 1.0);
    let f = |x| format_number(x, a.raw);
    let sizes: Vec<String> = s.group_sizes().iter().map(|n| n.to_string()).collect();
    let lines = [
        format!("n = {}, q = {}, p = {} (group sizes {})", s.n(), s.q(), s.p(), sizes.join(", ")),
        format!("Lambda = {}", f(r.lambda)),
        format!("W = {}", f(r.w)),
        format!("method = {}", law.method().name()),
        format!("p-value = {}", f(pv)),
        format!(
            "decision at alpha = {}: {}",
            f(a.alpha),
            if pv <= a.alpha { "reject" } else { "retain" }
        ),
    ];
    write_lines(out, &lines)
}

fn write_lines(out: &mut dyn Write, lines: &[String]) -> Result<()> {
    for l in lines {
        writeln!(out, "{l}").map_err(|e| Error::Internal(format!("write failed: {e}")))?;
    }
    Ok(())
}

fn count_model(a: &QuantileArgs) -> Result<CountModel> {
    let need = |what: &str| Error::InvalidParameters(format!("--count needs --{what}"));
    match a.count {
        None => Err(Error::InvalidParameters("--method mixture needs --count".into())),
        Some(CountKind::Poisson) => Ok(CountModel::Poisson { lambda: a.lambda.ok_or_else(|| need("lambda"))? }),
        Some(CountKind::Binomial) => Ok(CountModel::Binomial {
            trials: a.trials.ok_or_else(|| need("trials"))?,
            prob: a.prob.ok_or_else(|| need("prob"))?,
        }),
        Some(CountKind::Negbin) => Ok(CountModel::NegativeBinomial {
            successes: a.successes.ok_or_else(|| need("successes"))?,
            prob: a.prob.ok_or_else(|| need("prob"))?,
        }),
        Some(CountKind::Point) => Ok(CountModel::PointMass(a.n.ok_or_else(|| need("n"))? as u64)),
    }
}

fn cmd_quantile(a: &QuantileArgs, out: &mut dyn Write) -> Result<()> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(Error::InvalidParameters(format!("alpha must lie in (0,1), got {}", a.alpha)));
    }
    let (z, label, law_w) = match a.method {
        QuantileMethod::Mixture => {
            let cm = count_model(a)?;
            let tw = truncated_weights(&cm, a.q, a.tail_eps)?;
            let law = MixtureLaw::new(&tw, a.q, a.p, NullMethod::Exact)?;
            let z = law.quantile_lambda(a.alpha)?;
            let (lo, hi) = (tw.support[0], *tw.support.last().expect("nonempty"));
            (z, format!("mixture over n = {lo}..{hi}"), None)
        }
        m => {
            let n = a.n.ok_or_else(|| Error::InvalidParameters("--n is required".into()))?;
            let method = match m {
                QuantileMethod::Exact => NullMethod::Exact,
                _ => NullMethod::Asymptotic,
            };
            let law = NullCdf::resolve(&beta_product_model(n, a.q, a.p)?, method)?;
            let w = law.quantile_w(1.0 - a.alpha)?;
            ((-w).exp(), law.method().name().to_string(), Some(w))
        }
    };
    let w = law_w.unwrap_or(-z.ln());
    let f = |x| format_number(x, a.raw);
    let lines = [
        format!("alpha = {}", f(a.alpha)),
        format!("method = {label}"),
        format!("Lambda_alpha = {}", f(z)),
        format!("W threshold = {}", f(w)),
    ];
    write_lines(out, &lines)
}

/// Flat `key = value` simulation config; `#` starts a comment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationFile {
    pub base: ExperimentConfig,
    /// Shifts to run under H1, all sharing one H0 quantile bank.
    pub shifts: Vec<ShiftSpec>,
    pub format: TableFormat,
    /// Seed from the file, if any.
    pub seed: Option<u64>,
}

const CONFIG_KEYS: [&str; 16] = [
    "p", "q", "nk", "dist", "nu", "slant", "cov", "sigma", "shift", "alpha_list", "reps", "seed",
    "tests", "lrt_methods", "format", "rho",
];

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{key}: cannot parse '{}' as a number", s.trim())))
        })
        .collect()
}

fn scalar<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

pub fn parse_simulation_config(text: &str) -> Result<SimulationFile> {
    let mut kv: BTreeMap<String, String> = BTreeMap::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", ln + 1)))?;
        let k = k.trim().to_string();
        if !CONFIG_KEYS.contains(&k.as_str()) {
            return Err(Error::Config(format!("unknown key '{k}'")));
        }
        if kv.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("duplicate key '{k}'")));
        }
    }
    let get = |k: &str| kv.get(k).map(String::as_str);
    let required = |k: &str| get(k).ok_or_else(|| Error::Config(format!("missing key '{k}'")));

    let p: usize = scalar("p", required("p")?)?;
    let mut nk: Vec<usize> = required("nk")?
        .split(',')
        .map(|s| scalar("nk", s))
        .collect::<Result<_>>()?;
    if let Some(q) = get("q") {
        let q: usize = scalar("q", q)?;
        if nk.len() == 1 {
            nk = vec![nk[0]; q];
        } else if nk.len() != q {
            return Err(Error::Config(format!("q={q} but nk lists {} group sizes", nk.len())));
        }
    }
    let q = nk.len();

    let nu = get("nu").map(|v| scalar::<f64>("nu", v)).transpose()?;
    let slant = match get("slant") {
        None => None,
        Some(v) => {
            let s = list("slant", v)?;
            Some(if s.len() == 1 { vec![s[0]; p] } else { s })
        }
    };
    let need_nu = || nu.ok_or_else(|| Error::Config("dist needs key 'nu'".into()));
    let need_slant = || slant.clone().ok_or_else(|| Error::Config("dist needs key 'slant'".into()));
    let family = match get("dist").unwrap_or("normal") {
        "normal" => Family::Normal,
        "t" | "student_t" => Family::StudentT(need_nu()?),
        "cauchy" => Family::Cauchy,
        "skew_normal" => Family::SkewNormal(need_slant()?),
        "skew_t" => Family::SkewT { nu: need_nu()?, slant: need_slant()? },
        "skew_cauchy" => Family::SkewCauchy(need_slant()?),
        other => return Err(Error::Config(format!("dist: unknown family '{other}'"))),
    };

    let sigma = get("sigma").map(|v| list("sigma", v)).transpose()?;
    let cov = match get("cov").unwrap_or("circular") {
        "circular" => CovarianceSpec::Circular(
            sigma.ok_or_else(|| Error::Config("cov=circular needs key 'sigma'".into()))?,
        ),
        "cs" | "compound_symmetric" => {
            let rho: f64 = scalar("rho", get("rho").ok_or_else(|| Error::Config("cov=cs needs key 'rho'".into()))?)?;
            let s2 = sigma.map_or(Ok(1.0), |s| match s.as_slice() {
                [v] => Ok(*v),
                _ => Err(Error::Config("cov=cs takes a single sigma value".into())),
            })?;
            CovarianceSpec::CompoundSymmetric { sigma2: s2, rho }
        }
        "spherical" => CovarianceSpec::Spherical(match sigma.as_deref() {
            None => 1.0,
            Some([v]) => *v,
            Some(_) => return Err(Error::Config("cov=spherical takes a single sigma value".into())),
        }),
        "diagonal" => CovarianceSpec::Diagonal(
            sigma.ok_or_else(|| Error::Config("cov=diagonal needs key 'sigma'".into()))?,
        ),
        other => return Err(Error::Config(format!("cov: unknown structure '{other}'"))),
    };

    let shifts = match get("shift") {
        None => Vec::new(),
        Some(v) => v
            .split('|')
            .map(|s| list("shift", s).map(ShiftSpec))
            .collect::<Result<Vec<_>>>()?,
    };
    let seed = get("seed").map(|v| scalar::<u64>("seed", v)).transpose()?;
    let mut base = ExperimentConfig::new(p, nk, cov, seed.unwrap_or(0));
    base.family = family;
    if let Some(v) = get("alpha_list") {
        base.alphas = list("alpha_list", v)?;
    }
    if let Some(v) = get("reps") {
        base.reps = scalar("reps", v)?;
    }
    if let Some(v) = get("tests") {
        base.tests = v
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<TestKind>()
                    .map_err(|_| Error::Config(format!("tests: unknown test '{}'", s.trim())))
            })
            .collect::<Result<_>>()?;
    } else if q != 2 {
        base.tests.retain(|t| !matches!(t, TestKind::Competitor(c) if c.two_sample_only()));
    }
    if let Some(v) = get("lrt_methods") {
        base.lrt_sources = v
            .split(',')
            .map(|s| match s.trim() {
                "exact" => Ok(Source::Exact),
                "asymp" | "asymptotic" => Ok(Source::Asymp),
                other => Err(Error::Config(format!("lrt_methods: unknown method '{other}'"))),
            })
            .collect::<Result<_>>()?;
    }
    let format = get("format").map_or(Ok(TableFormat::Csv), str::parse)?;
    base.validate()?;
    for s in &shifts {
        s.vector(p)?;
    }
    Ok(SimulationFile {
        base,
        shifts,
        format,
        seed,
    })
}

/// The H0 table followed by one H1 table per nonzero shift, all H1 runs
/// sharing the H0 quantile bank. Runs on the current rayon pool.
pub fn run_simulation(sim: &SimulationFile, seed: u64, progress: bool) -> Result<Vec<harness::TableRow>> {
    let mut base = sim.base.clone();
    base.seed = seed;
    base.progress = progress;
    let h0 = harness::run_h0(&base)?;
    let mut rows = h0.rows;
    for s in &sim.shifts {
        if s.is_zero() {
            continue;
        }
        let mut c = base.clone();
        c.shift = Some(s.clone());
        rows.extend(harness::run_h1(&c, &h0.bank)?);
    }
    Ok(rows)
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| io_err(&a.config, e))?;
    let sim = parse_simulation_config(&text)?;
    let seed = a.seed.or(sim.seed).ok_or_else(|| {
        Error::Config("simulate needs a seed (--seed or a 'seed' key)".into())
    })?;
    let threads = a.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let rows = pool.install(|| run_simulation(&sim, seed, a.progress))?;
    let table = harness::emit_table(&rows, sim.format)?;
    match &a.output {
        Some(path) => {
            std::fs::write(path, &table).map_err(|e| {
                Error::InvalidInput(format!("cannot write {}: {e}", path.display()))
            })?;
            let mut scenarios: Vec<&str> = rows.iter().map(|r| r.scenario.as_str()).collect();
            scenarios.sort();
            scenarios.dedup();
            let lines: Vec<String> = scenarios.iter().map(|s| format!("scenario: {s}")).collect();
            write_lines(out, &lines)
        }
        None => write!(out, "{table}").map_err(|e| Error::Internal(format!("write failed: {e}"))),
    }
}

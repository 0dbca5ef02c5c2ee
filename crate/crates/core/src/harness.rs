//! Monte Carlo runner for size and power tables.
//!
//! Every statistic is oriented so that large values reject (the LRT enters
//! through W = −log Λ). Replication i draws all of its data from the stream
//! derived from (seed, i), so tables do not depend on the thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::competitors::{CompetitorName, Reference};
use crate::error::{Error, Result};
use crate::nulldist::{beta_product_model, NullCdf, NullMethod};
use crate::seed;
use crate::simgen::{apply_shift, CovarianceSpec, DistributionSpec, Family, Generator, ShiftSpec};
use crate::statistic::{build_u_matrix, lrt_statistic_with, GroupedSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TestKind {
    Lrt,
    Competitor(CompetitorName),
}

impl TestKind {
    pub fn name(&self) -> &'static str {
        match self {
            TestKind::Lrt => "lrt",
            TestKind::Competitor(c) => c.name(),
        }
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "lrt" {
            return Ok(TestKind::Lrt);
        }
        s.parse().map(TestKind::Competitor)
    }
}

/// Where a critical value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Exact,
    Asymp,
    /// Empirical quantile of the statistic under H0.
    Simul,
}

impl Source {
    pub fn name(&self) -> &'static str {
        match self {
            Source::Exact => "exact",
            Source::Asymp => "asymp",
            Source::Simul => "simul",
        }
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Source::Exact),
            "asymp" => Ok(Source::Asymp),
            "simul" => Ok(Source::Simul),
            other => Err(Error::Config(format!("unknown source '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub p: usize,
    pub nk: Vec<usize>,
    pub family: Family,
    pub cov: CovarianceSpec,
    pub shift: Option<ShiftSpec>,
    pub alphas: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    pub tests: Vec<TestKind>,
    /// Sources used for the LRT theoretical columns (exact and/or asymp).
    pub lrt_sources: Vec<Source>,
    pub progress: bool,
}

pub const DEFAULT_ALPHAS: [f64; 2] = [0.01, 0.05];
pub const DEFAULT_REPS: usize = 10_000;

impl ExperimentConfig {
    /// Normal data, all applicable tests, default α list and replication count.
    pub fn new(p: usize, nk: Vec<usize>, cov: CovarianceSpec, seed: u64) -> Self {
        let mut tests = vec![
            TestKind::Lrt,
            TestKind::Competitor(CompetitorName::Fujikoshi),
            TestKind::Competitor(CompetitorName::Schott),
        ];
        if nk.len() == 2 {
            tests.push(TestKind::Competitor(CompetitorName::ChenQin));
            tests.push(TestKind::Competitor(CompetitorName::Zhang));
        }
        ExperimentConfig {
            p,
            nk,
            family: Family::Normal,
            cov,
            shift: None,
            alphas: DEFAULT_ALPHAS.to_vec(),
            reps: DEFAULT_REPS,
            seed,
            tests,
            lrt_sources: vec![Source::Exact, Source::Asymp],
            progress: false,
        }
    }

    pub fn q(&self) -> usize {
        self.nk.len()
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.reps == 0 {
            return cfg("replication count must be at least 1".into());
        }
        if self.p == 0 {
            return cfg("p must be at least 1".into());
        }
        if self.nk.len() < 2 || self.nk.contains(&0) {
            return cfg(format!("need at least 2 non-empty groups, got {:?}", self.nk));
        }
        if self.nk.iter().sum::<usize>() <= self.q() {
            return cfg(format!(
                "total sample size must exceed the number of groups, got {:?}",
                self.nk
            ));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
            return cfg(format!("alpha values must lie in (0,1), got {:?}", self.alphas));
        }
        if self.tests.is_empty() {
            return cfg("no tests selected".into());
        }
        for t in &self.tests {
            if let TestKind::Competitor(c) = t {
                if c.two_sample_only() && self.q() != 2 {
                    return cfg(format!("{} requires q=2, got q={}", c.name(), self.q()));
                }
            }
        }
        if self.lrt_sources.contains(&Source::Simul) {
            return cfg("simul is not a theoretical LRT source".into());
        }
        if let Some(s) = &self.shift {
            s.vector(self.p)?;
        }
        Ok(())
    }

    fn distribution(&self) -> DistributionSpec {
        DistributionSpec {
            family: self.family.clone(),
            location: vec![0.0; self.p],
            scale: self.cov.clone(),
        }
    }

    /// Everything that must match between an H0 run and its H1 runs.
    fn null_key(&self) -> String {
        let nk: Vec<String> = self.nk.iter().map(|n| n.to_string()).collect();
        let tests: Vec<&str> = self.tests.iter().map(|t| t.name()).collect();
        format!(
            "p={} q={} nk={} dist={} cov={} tests={}",
            self.p,
            self.q(),
            nk.join(";"),
            self.family.describe(),
            self.cov.describe(),
            tests.join(";")
        )
    }

    /// Scenario descriptor written in every table row (no commas).
    pub fn scenario(&self) -> String {
        let nk: Vec<String> = self.nk.iter().map(|n| n.to_string()).collect();
        let shift = match &self.shift {
            None => "none".to_string(),
            Some(s) => format!("blocks{}", &s.describe()["shift".len()..]),
        };
        format!(
            "p={} q={} nk={} dist={} cov={} shift={}",
            self.p,
            self.q(),
            nk.join(";"),
            self.family.describe(),
            self.cov.describe(),
            shift
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub scenario: String,
    pub test: TestKind,
    pub source: Source,
    pub alpha: f64,
    pub rate: f64,
    pub se: f64,
    pub reps: usize,
    pub seed: u64,
}

fn binomial_se(rate: f64, reps: usize) -> f64 {
    (rate * (1.0 - rate) / reps as f64).sqrt()
}

/// Empirical H0 critical values, one per (test, α).
#[derive(Debug, Clone, PartialEq)]
pub struct NullBank {
    key: String,
    quantiles: BTreeMap<(TestKind, u64), f64>,
}

impl NullBank {
    pub fn quantile(&self, test: TestKind, alpha: f64) -> Option<f64> {
        self.quantiles.get(&(test, alpha.to_bits())).copied()
    }
}

/// Output of an H0 run.
#[derive(Debug, Clone)]
pub struct H0Run {
    pub rows: Vec<TableRow>,
    pub bank: NullBank,
    /// Statistic streams by test, in replication order (NaN when degenerate).
    pub streams: BTreeMap<TestKind, Vec<f64>>,
}

/// Critical value c such that exactly ⌈αR⌉ finite values are ≥ c (absent ties).
pub fn empirical_quantile(stream: &[f64], alpha: f64) -> f64 {
    let mut v: Vec<f64> = stream.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::INFINITY;
    }
    v.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let k = ((alpha * stream.len() as f64).ceil() as usize).clamp(1, v.len());
    v[k - 1]
}

/// Degenerate data in one replication yields NaN (never rejects); structural
/// problems abort the run.
fn soft<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::DegenerateScatter(_)) | Err(Error::EstimationDegenerate(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

struct Theoretical {
    /// LRT critical values of W by (source, α index). Competitor
    /// references are fitted per replication.
    lrt: BTreeMap<(Source, usize), f64>,
}

/// Per-replication output: the statistic of each test and, for
/// competitors, the reference law fitted to that replication.
struct Replication {
    stats: Vec<f64>,
    reference: Vec<Option<Reference>>,
}

struct Simulation<'a> {
    cfg: &'a ExperimentConfig,
    gen: Generator,
    u: DMatrix<f64>,
}

impl<'a> Simulation<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Simulation {
            cfg,
            gen: Generator::new(&cfg.distribution())?,
            u: build_u_matrix(cfg.p)?,
        })
    }

    fn data(&self, i: u64, shift: Option<&ShiftSpec>) -> Result<GroupedSample> {
        let mut rng = seed::stream(self.cfg.seed, i);
        let mut groups: Vec<DMatrix<f64>> =
            self.cfg.nk.iter().map(|&n| self.gen.sample(n, &mut rng)).collect();
        if let Some(s) = shift {
            groups = apply_shift(&groups, s)?;
        }
        GroupedSample::new(groups)
    }

    fn replicate(&self, i: u64, shift: Option<&ShiftSpec>) -> Result<Replication> {
        let s = self.data(i, shift)?;
        let mut stats = Vec::with_capacity(self.cfg.tests.len());
        let mut reference = Vec::with_capacity(self.cfg.tests.len());
        for t in &self.cfg.tests {
            match t {
                TestKind::Lrt => {
                    let r = soft(lrt_statistic_with(&self.u, &s))?;
                    stats.push(r.map_or(f64::NAN, |r| r.w));
                    reference.push(None);
                }
                TestKind::Competitor(c) => {
                    let r = soft(c.compute(&s))?;
                    stats.push(r.map_or(f64::NAN, |r| r.statistic));
                    reference.push(r.map(|r| r.reference));
                }
            }
        }
        Ok(Replication { stats, reference })
    }

    fn run(&self, shift: Option<&ShiftSpec>) -> Result<Vec<Replication>> {
        let total = self.cfg.reps;
        let done = AtomicUsize::new(0);
        let step = (total / 10).max(1);
        (0..total as u64)
            .into_par_iter()
            .map(|i| {
                let r = self.replicate(i, shift);
                if self.cfg.progress {
                    let d = done.fetch_add(1, Ordering::Relaxed) + 1;
                    if d.is_multiple_of(step) || d == total {
                        eprintln!("replications: {d}/{total}");
                    }
                }
                r
            })
            .collect()
    }

    fn theoretical(&self) -> Result<Theoretical> {
        let mut lrt = BTreeMap::new();
        if self.cfg.tests.contains(&TestKind::Lrt) {
            let model = beta_product_model(self.cfg.nk.iter().sum(), self.cfg.q(), self.cfg.p)?;
            for &src in &self.cfg.lrt_sources {
                let method = match src {
                    Source::Exact => NullMethod::Exact,
                    _ => NullMethod::Asymptotic,
                };
                let law = NullCdf::resolve(&model, method)?;
                for (k, &a) in self.cfg.alphas.iter().enumerate() {
                    lrt.insert((src, k), law.quantile_w(1.0 - a)?);
                }
            }
        }
        Ok(Theoretical { lrt })
    }

    /// Rows for the theoretical sources, plus simul rows against `bank`.
    fn rows(&self, reps: &[Replication], th: &Theoretical, bank: &NullBank) -> Vec<TableRow> {
        let cfg = self.cfg;
        let scenario = cfg.scenario();
        let row = |test, source, alpha, count: usize| {
            let rate = count as f64 / cfg.reps as f64;
            TableRow {
                scenario: scenario.clone(),
                test,
                source,
                alpha,
                rate,
                se: binomial_se(rate, cfg.reps),
                reps: cfg.reps,
                seed: cfg.seed,
            }
        };
        let mut rows = Vec::new();
        for (j, &t) in cfg.tests.iter().enumerate() {
            for (k, &a) in cfg.alphas.iter().enumerate() {
                let sources: Vec<Source> = match t {
                    TestKind::Lrt => cfg.lrt_sources.clone(),
                    TestKind::Competitor(_) => vec![Source::Asymp],
                };
                for src in sources {
                    let count = reps
                        .iter()
                        .filter(|r| match t {
                            TestKind::Lrt => r.stats[j] >= th.lrt[&(src, k)],
                            TestKind::Competitor(_) => r.reference[j]
                                .is_some_and(|rf| r.stats[j] >= rf.critical_value(a)),
                        })
                        .count();
                    rows.push(row(t, src, a, count));
                }
                let c = bank.quantile(t, a).expect("bank covers every test and alpha");
                let count = reps.iter().filter(|r| r.stats[j] >= c).count();
                rows.push(row(t, Source::Simul, a, count));
            }
        }
        sort_rows(&mut rows);
        rows
    }
}

/// Scenarios keep their first-appearance order; within one scenario rows
/// go by test, source, then α.
fn sort_rows(rows: &mut [TableRow]) {
    let mut seen: Vec<String> = Vec::new();
    for r in rows.iter() {
        if !seen.contains(&r.scenario) {
            seen.push(r.scenario.clone());
        }
    }
    let rank = |s: &str| seen.iter().position(|x| x == s).expect("collected above");
    rows.sort_by(|a, b| {
        (rank(&a.scenario), a.test, a.source)
            .cmp(&(rank(&b.scenario), b.test, b.source))
            .then(a.alpha.total_cmp(&b.alpha))
    });
}

/// Size table under H0, plus the empirical quantile bank for H1 runs.
pub fn run_h0(cfg: &ExperimentConfig) -> Result<H0Run> {
    if cfg.shift.as_ref().is_some_and(|s| !s.is_zero()) {
        return Err(Error::Config("an H0 run cannot have a nonzero shift".into()));
    }
    let sim = Simulation::new(cfg)?;
    let th = sim.theoretical()?;
    let reps = sim.run(None)?;
    let mut streams = BTreeMap::new();
    let mut quantiles = BTreeMap::new();
    for (j, &t) in cfg.tests.iter().enumerate() {
        let stream: Vec<f64> = reps.iter().map(|r| r.stats[j]).collect();
        for &a in &cfg.alphas {
            quantiles.insert((t, a.to_bits()), empirical_quantile(&stream, a));
        }
        streams.insert(t, stream);
    }
    let bank = NullBank {
        key: cfg.null_key(),
        quantiles,
    };
    let rows = sim.rows(&reps, &th, &bank);
    Ok(H0Run {
        rows,
        bank,
        streams,
    })
}

/// Power table under the configured shift, with simul columns taken from
/// `bank` (the H0 run of the same scenario).
pub fn run_h1(cfg: &ExperimentConfig, bank: &NullBank) -> Result<Vec<TableRow>> {
    let Some(shift) = &cfg.shift else {
        return Err(Error::Config("an H1 run needs a shift".into()));
    };
    let sim = Simulation::new(cfg)?;
    if bank.key != cfg.null_key() {
        return Err(Error::Pairing(format!(
            "null bank built for [{}], H1 scenario is [{}]",
            bank.key,
            cfg.null_key()
        )));
    }
    for &t in &cfg.tests {
        for &a in &cfg.alphas {
            if bank.quantile(t, a).is_none() {
                return Err(Error::Pairing(format!(
                    "null bank has no quantile for {} at alpha={a}",
                    t.name()
                )));
            }
        }
    }
    let th = sim.theoretical()?;
    let reps = sim.run(Some(shift))?;
    Ok(sim.rows(&reps, &th, bank))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Text,
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "text" | "aligned" => Ok(TableFormat::Text),
            other => Err(Error::Config(format!("unknown table format '{other}'"))),
        }
    }
}

pub const CSV_HEADER: &str = "scenario,test,source,alpha,rate,se,R,seed";

pub fn emit_table(rows: &[TableRow], format: TableFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyTable);
    }
    let mut rows = rows.to_vec();
    sort_rows(&mut rows);
    let mut out = String::new();
    match format {
        TableFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in &rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    r.scenario,
                    r.test.name(),
                    r.source.name(),
                    r.alpha,
                    r.rate,
                    r.se,
                    r.reps,
                    r.seed
                )
                .expect("write to string");
            }
        }
        TableFormat::Text => {
            let mut scenarios: Vec<&str> = rows.iter().map(|r| r.scenario.as_str()).collect();
            scenarios.dedup();
            for s in scenarios {
                writeln!(out, "# {s}").expect("write to string");
            }
            writeln!(
                out,
                "{:<10} {:<6} {:>6} {:>8} {:>8} {:>7} {:>20}",
                "test", "source", "alpha", "rate", "se", "R", "seed"
            )
            .expect("write to string");
            for r in &rows {
                writeln!(
                    out,
                    "{:<10} {:<6} {:>6} {:>8.4} {:>8.4} {:>7} {:>20}",
                    r.test.name(),
                    r.source.name(),
                    r.alpha,
                    r.rate,
                    r.se,
                    r.reps,
                    r.seed
                )
                .expect("write to string");
            }
        }
    }
    Ok(out)
}

/// Reads back a CSV table written by [`emit_table`].
pub fn parse_table(text: &str) -> Result<Vec<TableRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Config("missing or unexpected table header".into()));
    }
    let bad = |line: &str| Error::Config(format!("malformed table row '{line}'"));
    let mut rows = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(bad(line));
        }
        rows.push(TableRow {
            scenario: f[0].to_string(),
            test: f[1].parse().map_err(|_| bad(line))?,
            source: f[2].parse()?,
            alpha: f[3].parse().map_err(|_| bad(line))?,
            rate: f[4].parse().map_err(|_| bad(line))?,
            se: f[5].parse().map_err(|_| bad(line))?,
            reps: f[6].parse().map_err(|_| bad(line))?,
            seed: f[7].parse().map_err(|_| bad(line))?,
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyTable);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(6, vec![4, 4], CovarianceSpec::Circular(vec![1.0, 0.3, 0.1, 0.05]), 9);
        c.reps = 400;
        c
    }

    #[test]
    fn zero_reps_is_config_error() {
        let mut c = small();
        c.reps = 0;
        assert!(matches!(run_h0(&c), Err(Error::Config(_))));
    }

    #[test]
    fn two_sample_tests_need_q2() {
        let mut c = small();
        c.nk = vec![3, 3, 3];
        assert!(matches!(c.validate(), Err(Error::Config(m)) if m.contains("chen_qin")));
    }

    #[test]
    fn simul_rates_hit_alpha_on_h0_stream() {
        let run = run_h0(&small()).unwrap();
        for r in run.rows.iter().filter(|r| r.source == Source::Simul) {
            let expected = (r.alpha * r.reps as f64).ceil() / r.reps as f64;
            assert!((r.rate - expected).abs() <= 1.0 / r.reps as f64, "{r:?}");
        }
        for r in &run.rows {
            assert_eq!(r.se, binomial_se(r.rate, r.reps));
        }
    }

    #[test]
    fn ordering_and_shape() {
        let run = run_h0(&small()).unwrap();
        // lrt: exact, asymp, simul; competitors: asymp, simul
        assert_eq!(run.rows.len(), 2 * (3 + 4 * 2));
        let order: Vec<(&str, &str)> =
            run.rows.iter().map(|r| (r.test.name(), r.source.name())).collect();
        assert_eq!(order[0], ("lrt", "exact"));
        assert_eq!(order[2], ("lrt", "asymp"));
        assert_eq!(order[6], ("fujikoshi", "asymp"));
        assert_eq!(order.last().unwrap(), &("zhang", "simul"));
    }

    #[test]
    fn zero_shift_h1_equals_h0() {
        let c = small();
        let h0 = run_h0(&c).unwrap();
        let mut c1 = c.clone();
        c1.shift = Some(ShiftSpec(vec![0.0, 0.0]));
        let h1 = run_h1(&c1, &h0.bank).unwrap();
        let rates = |rows: &[TableRow]| rows.iter().map(|r| r.rate).collect::<Vec<_>>();
        assert_eq!(rates(&h0.rows), rates(&h1));
    }

    #[test]
    fn mismatched_bank_is_pairing_error() {
        let c = small();
        let h0 = run_h0(&c).unwrap();
        let mut c1 = c.clone();
        c1.p = 8;
        c1.cov = CovarianceSpec::Spherical(1.0);
        c1.shift = Some(ShiftSpec(vec![0.5]));
        assert!(matches!(run_h1(&c1, &h0.bank), Err(Error::Pairing(_))));
    }

    #[test]
    fn table_round_trip_and_errors() {
        let run = run_h0(&small()).unwrap();
        let csv = emit_table(&run.rows, TableFormat::Csv).unwrap();
        assert_eq!(parse_table(&csv).unwrap(), run.rows);
        assert_eq!(csv, emit_table(&run.rows, TableFormat::Csv).unwrap());
        let one = emit_table(&run.rows[..1], TableFormat::Csv).unwrap();
        assert_eq!(one.lines().count(), 2);
        assert!(!run.rows[0].scenario.contains(','));
        assert!(matches!(emit_table(&[], TableFormat::Csv), Err(Error::EmptyTable)));
        assert!(emit_table(&run.rows, TableFormat::Text).unwrap().starts_with("# p=6"));
    }

    #[test]
    fn empirical_quantile_order_statistic() {
        let s: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(empirical_quantile(&s, 0.05), 96.0);
        assert_eq!(empirical_quantile(&s, 0.001), 100.0);
    }
}

use std::path::Path;
use std::process::{Command, Output};

use statrs::distribution::{Beta, ContinuousCDF};
use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circ-manova"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    let prefix = format!("{key} = ");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no '{key}' in:\n{text}"))
        .parse()
        .unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn test_worked_example() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "d.csv", "a,0\na,2\nb,1\nb,3\n");
    let o = bin(&["test", &f]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(field(&out, "Lambda"), 0.8);
    let pv = field(&out, "p-value");
    assert!((0.0..=1.0).contains(&pv));
    // p = 1: Λ ~ Beta((n−q)/2, (q−1)/2), so the p-value is P(Λ ≤ 0.8)
    let beta = Beta::new(1.0, 0.5).unwrap();
    assert!((pv - beta.cdf(0.8)).abs() < 1e-5);
    let raw = stdout(&bin(&["test", &f, "--raw", "--method", "asymptotic"]));
    assert!(raw.contains("method = asymptotic"));
}

#[test]
fn test_data_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("single.csv", "a,1\na,2\na,3\n", "distinct group labels"),
        ("ragged.csv", "a,1,2\nb,3\n", "ragged"),
        ("text.csv", "a,1\nb,x\n", "non-numeric"),
        ("small.csv", "a,1\nb,2\n", "must exceed"),
    ];
    let mut messages = Vec::new();
    for (name, text, needle) in cases {
        let f = write(&dir, name, text);
        let o = bin(&["test", &f]);
        assert_eq!(o.status.code(), Some(2), "{name}");
        assert!(stderr(&o).contains(needle), "{name}: {}", stderr(&o));
        messages.push(stderr(&o));
    }
    let missing = dir.path().join("missing.csv");
    let o = bin(&["test", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cannot read"));
    messages.dedup();
    assert_eq!(messages.len(), 4);
}

#[test]
fn usage_errors_exit_4() {
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(4));
    assert_eq!(bin(&["quantile", "--q", "2"]).status.code(), Some(4));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}

#[test]
fn quantile_p1_matches_beta_quantile() {
    let o = bin(&["quantile", "--n", "9", "--q", "3", "--p", "1", "--alpha", "0.05", "--raw"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let z = field(&stdout(&o), "Lambda_alpha");
    let expected = Beta::new(3.0, 1.0).unwrap().inverse_cdf(0.05);
    assert!((z - expected).abs() < 1e-8, "{z} vs {expected}");
}

#[test]
fn quantile_median_round_trip() {
    use circ_manova::nulldist::{beta_product_model, NullCdf, NullMethod};
    let o = bin(&["quantile", "--n", "10", "--q", "3", "--p", "6", "--alpha", "0.5", "--raw"]);
    let z = field(&stdout(&o), "Lambda_alpha");
    let law = NullCdf::resolve(&beta_product_model(10, 3, 6).unwrap(), NullMethod::Exact).unwrap();
    assert!((law.cdf_lambda(z).unwrap() - 0.5).abs() < 1e-8);
}

#[test]
fn quantile_point_mass_mixture_equals_fixed_n() {
    let fixed = bin(&["quantile", "--n", "12", "--q", "3", "--p", "6", "--raw"]);
    let mix = bin(&[
        "quantile", "--q", "3", "--p", "6", "--method", "mixture", "--count", "point", "--n", "12",
        "--raw",
    ]);
    assert_eq!(mix.status.code(), Some(0), "{}", stderr(&mix));
    let a = field(&stdout(&fixed), "Lambda_alpha");
    let b = field(&stdout(&mix), "Lambda_alpha");
    assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    let poisson = bin(&[
        "quantile", "--q", "3", "--p", "6", "--method", "mixture", "--count", "poisson", "--lambda",
        "10",
    ]);
    assert_eq!(poisson.status.code(), Some(0));
}

#[test]
fn quantile_invalid_parameters_exit_2() {
    let o = bin(&["quantile", "--n", "3", "--q", "3", "--p", "4"]);
    assert_eq!(o.status.code(), Some(2));
    let o = bin(&["quantile", "--n", "10", "--q", "3", "--p", "4", "--alpha", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = bin(&["quantile", "--q", "3", "--p", "4", "--method", "mixture"]);
    assert_eq!(o.status.code(), Some(2));
}

const MINIMAL: &str = "p = 6\nnk = 4,4\nsigma = 1,0.3,0.1,0.05\nreps = 300\n";

fn simulate(dir: &TempDir, config: &str, extra: &[&str]) -> (Output, String) {
    let cfg = write(dir, "sim.cfg", config);
    let out = dir.path().join(format!("out{}.csv", extra.join("_")));
    let out_s = out.to_str().unwrap().to_string();
    let mut args = vec!["simulate", cfg.as_str(), "--output", out_s.as_str()];
    args.extend_from_slice(extra);
    let o = bin(&args);
    let table = if Path::new(&out).exists() {
        std::fs::read_to_string(&out).unwrap()
    } else {
        String::new()
    };
    (o, table)
}

#[test]
fn simulate_minimal_h0_shape() {
    let dir = TempDir::new().unwrap();
    let (o, table) = simulate(&dir, MINIMAL, &["--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("scenario: p=6 q=2"));
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "scenario,test,source,alpha,rate,se,R,seed");
    // lrt: exact, asymp, simul; four competitors: asymp, simul; two alphas
    assert_eq!(lines.len(), 1 + 2 * (3 + 4 * 2));
}

#[test]
fn simulate_is_deterministic_across_threads() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("{MINIMAL}shift = 0.5,0.5 | 1,-1\n");
    let (a, ta) = simulate(&dir, &cfg, &["--seed", "5", "--threads", "1"]);
    let (b, tb) = simulate(&dir, &cfg, &["--seed", "5", "--threads", "4"]);
    let (c, tc) = simulate(&dir, &cfg, &["--seed", "5", "--threads", "4", "--progress"]);
    for o in [&a, &b, &c] {
        assert_eq!(o.status.code(), Some(0), "{}", stderr(o));
    }
    assert_eq!(ta, tb);
    assert_eq!(tb, tc);
    assert!(ta.contains("shift=blocks(+1;-1)"));
}

#[test]
fn simulate_errors() {
    let dir = TempDir::new().unwrap();
    let (o, _) = simulate(&dir, MINIMAL, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"));

    let (o, _) = simulate(&dir, &format!("{MINIMAL}colour = red\n"), &["--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"));

    let cfg = "p = 6\nnk = 3,3,3\nsigma = 1,0.3,0.1,0.05\nreps = 10\ntests = lrt,chen_qin\n";
    let (o, _) = simulate(&dir, cfg, &["--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("chen_qin requires q=2"));

    let (o, _) = simulate(&dir, &MINIMAL.replace("300", "0"), &["--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

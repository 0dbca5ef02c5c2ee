use circ_manova::competitors::{CompetitorName, Reference};
use circ_manova::seed::derive_seed;
use circ_manova::simgen::{apply_shift, sample, CovarianceSpec, DistributionSpec, Family, ShiftSpec};
use circ_manova::statistic::GroupedSample;
use rayon::prelude::*;

const REPS: u64 = 10_000;

fn normal(p: usize) -> DistributionSpec {
    DistributionSpec {
        family: Family::Normal,
        location: vec![0.0; p],
        scale: CovarianceSpec::Spherical(1.0),
    }
}

fn two_groups(p: usize, n: usize, seed: u64, shift: Option<f64>) -> GroupedSample {
    let d = normal(p);
    let mut g = vec![
        sample(&d, n, derive_seed(seed, 0)).unwrap(),
        sample(&d, n, derive_seed(seed, 1)).unwrap(),
    ];
    if let Some(c) = shift {
        g = apply_shift(&g, &ShiftSpec(vec![c])).unwrap();
    }
    GroupedSample::new(g).unwrap()
}

/// (statistic, fitted reference) for every test over the H0 replications.
fn h0_bank(base: u64) -> Vec<Vec<(f64, Reference, f64)>> {
    (0..REPS)
        .into_par_iter()
        .map(|i| {
            let s = two_groups(20, 50, derive_seed(base, i), None);
            CompetitorName::ALL
                .iter()
                .map(|t| {
                    let r = t.compute(&s).unwrap();
                    (r.statistic, r.reference, r.p_value)
                })
                .collect()
        })
        .collect()
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap());
    let mut r = vec![0.0; x.len()];
    for (k, &i) in idx.iter().enumerate() {
        r[i] = k as f64;
    }
    r
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() as f64 - 1.0);
    cov / (va * vb).sqrt()
}

#[test]
fn h0_calibration_and_agreement() {
    let bank = h0_bank(2024);
    let col = |k: usize| bank.iter().map(|r| r[k].0).collect::<Vec<f64>>();
    let n = REPS as f64;
    for (k, name) in ["fujikoshi", "schott", "chen_qin"].iter().enumerate() {
        let (m, v) = mean_var(&col(k));
        let se = (v / n).sqrt();
        assert!(m.abs() < 3.0 * se, "{name}: mean {m} (se {se})");
        assert!((v - 1.0).abs() < 0.1, "{name}: variance {v}");
    }

    let rho = pearson(&ranks(&col(0)), &ranks(&col(1)));
    assert!(rho > 0.99, "spearman {rho}");

    // Zhang: uniform p-values and fitted mean d·β
    let mut pv: Vec<f64> = bank.iter().map(|r| r[3].2).collect();
    pv.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ks = pv
        .iter()
        .enumerate()
        .map(|(i, &u)| (u - i as f64 / n).abs().max((u - (i + 1) as f64 / n).abs()))
        .fold(0.0, f64::max);
    assert!(ks < 0.05, "zhang p-value KS {ks}");
    let fitted: Vec<f64> = bank
        .iter()
        .map(|r| match r[3].1 {
            Reference::ScaledChiSquare { d, beta } => d * beta,
            Reference::StandardNormal => unreachable!(),
        })
        .collect();
    let (mf, _) = mean_var(&fitted);
    let (mt, _) = mean_var(&col(3));
    assert!((mf / mt - 1.0).abs() < 0.05, "zhang fitted {mf} vs empirical {mt}");
}

#[test]
fn chen_qin_median_grows_with_shift() {
    let median = |shift: Option<f64>| {
        let mut v: Vec<f64> = (0..500)
            .into_par_iter()
            .map(|i| {
                let s = two_groups(20, 20, derive_seed(77, i), shift);
                CompetitorName::ChenQin.compute(&s).unwrap().statistic
            })
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[250]
    };
    let m0 = median(None);
    let m1 = median(Some(0.5));
    let m2 = median(Some(2.0));
    assert!(m0 < m1 && m1 < m2, "{m0} {m1} {m2}");
}

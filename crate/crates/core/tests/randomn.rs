use circ_manova::nulldist::{beta_product_model, mc_sample_w, NullCdf, NullMethod};
use circ_manova::randomn::{
    mixture_cdf_lambda, mixture_normal_pdf, truncated_weights, CountModel, MixtureLaw,
    DEFAULT_TAIL_EPS,
};
use rand::distr::weighted::WeightedIndex;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn poisson_mixture_matches_two_stage_draws() {
    let (q, p) = (3, 6);
    let tw = truncated_weights(&CountModel::Poisson { lambda: 10.0 }, q, DEFAULT_TAIL_EPS).unwrap();
    let law = MixtureLaw::new(&tw, q, p, NullMethod::Exact).unwrap();
    let draws = 1_000_000;
    // stage one: N; stage two: Λ | N, drawn per support point
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let idx = WeightedIndex::new(&tw.weights).unwrap();
    let mut counts = vec![0usize; tw.support.len()];
    for _ in 0..draws {
        counts[rng.sample(&idx)] += 1;
    }
    let mut lam = Vec::with_capacity(draws);
    for (i, (&n, &c)) in tw.support.iter().zip(&counts).enumerate() {
        if c > 0 {
            let m = beta_product_model(n, q, p).unwrap();
            lam.extend(mc_sample_w(&m, c, 1000 + i as u64).unwrap().into_iter().map(|w| (-w).exp()));
        }
    }
    lam.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nf = lam.len() as f64;
    let mut d: f64 = 0.0;
    for k in 1..1000 {
        let z = k as f64 / 1000.0;
        let f = law.cdf_lambda(z).unwrap();
        let below = lam.partition_point(|&v| v < z) as f64 / nf;
        let at = lam.partition_point(|&v| v <= z) as f64 / nf;
        d = d.max((f - below).abs()).max((f - at).abs());
    }
    assert!(d < 5e-3, "KS {d}");
}

#[test]
fn mixture_between_component_extremes() {
    let (q, p) = (3, 6);
    let tw = truncated_weights(&CountModel::Poisson { lambda: 10.0 }, q, DEFAULT_TAIL_EPS).unwrap();
    let median10 = circ_manova::nulldist::quantile_lambda(
        &beta_product_model(10, q, p).unwrap(),
        0.5,
        NullMethod::Exact,
    )
    .unwrap();
    for &z in &[0.05, median10, 0.6] {
        let comps: Vec<f64> = tw
            .support
            .iter()
            .map(|&n| {
                NullCdf::resolve(&beta_product_model(n, q, p).unwrap(), NullMethod::Exact)
                    .unwrap()
                    .cdf_lambda(z)
                    .unwrap()
            })
            .collect();
        let lo = comps.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = comps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let f = mixture_cdf_lambda(&tw, q, p, z, NullMethod::Exact).unwrap();
        assert!(f > lo && f < hi, "z={z}: {lo} < {f} < {hi}");
    }
}

#[test]
fn mixture_cdf_monotone() {
    let tw = truncated_weights(&CountModel::NegativeBinomial { successes: 5, prob: 0.4 }, 2, 1e-10)
        .unwrap();
    let law = MixtureLaw::new(&tw, 2, 5, NullMethod::Exact).unwrap();
    let mut prev = 0.0;
    for k in 1..200 {
        let f = law.cdf_lambda(k as f64 / 200.0).unwrap();
        assert!(f >= prev - 1e-12);
        prev = f;
    }
}

#[test]
fn mixture_quantile_round_trip_and_point_mass() {
    let tw = truncated_weights(&CountModel::Binomial { trials: 20, prob: 0.6 }, 3, 1e-10).unwrap();
    let law = MixtureLaw::new(&tw, 3, 8, NullMethod::Exact).unwrap();
    let z = law.quantile_lambda(0.05).unwrap();
    assert!((law.cdf_lambda(z).unwrap() - 0.05).abs() < 1e-8);

    let pm = truncated_weights(&CountModel::PointMass(12), 3, 1e-10).unwrap();
    let a = MixtureLaw::new(&pm, 3, 8, NullMethod::Exact).unwrap().quantile_lambda(0.05).unwrap();
    let b = circ_manova::nulldist::quantile_lambda(
        &beta_product_model(12, 3, 8).unwrap(),
        0.05,
        NullMethod::Exact,
    )
    .unwrap();
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn dropped_tail_grows_with_eps() {
    let cm = CountModel::Poisson { lambda: 25.0 };
    let mut prev = 0.0;
    for &eps in &[1e-14, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4] {
        let tw = truncated_weights(&cm, 4, eps).unwrap();
        assert!(tw.tail_mass_dropped < eps);
        assert!(tw.tail_mass_dropped >= prev);
        prev = tw.tail_mass_dropped;
    }
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

#[test]
fn normal_mixture_density_moments() {
    let (q, p) = (3, 6);
    let tw = truncated_weights(&CountModel::Poisson { lambda: 10.0 }, q, DEFAULT_TAIL_EPS).unwrap();
    let grid: Vec<f64> = (0..=40_000).map(|i| -20.0 + 60.0 * i as f64 / 40_000.0).collect();
    let dens = mixture_normal_pdf(&tw, q, p, &grid).unwrap();
    assert!((trapezoid(&grid, &dens) - 1.0).abs() < 1e-6);
    let xf: Vec<f64> = grid.iter().zip(&dens).map(|(x, f)| x * f).collect();
    let mean = trapezoid(&grid, &xf);
    let expected: f64 = tw
        .support
        .iter()
        .zip(&tw.weights)
        .map(|(&n, w)| w * beta_product_model(n, q, p).unwrap().normal_approx().mean)
        .sum();
    assert!((mean - expected).abs() < 1e-6, "{mean} vs {expected}");

    let pm = truncated_weights(&CountModel::PointMass(9), q, DEFAULT_TAIL_EPS).unwrap();
    let single = mixture_normal_pdf(&pm, q, p, &[1.0, 2.0]).unwrap();
    let na = beta_product_model(9, q, p).unwrap().normal_approx();
    assert_eq!(single, vec![na.pdf_w(1.0), na.pdf_w(2.0)]);
}

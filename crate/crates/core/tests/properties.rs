use elicit_core::active::{expected_information_gain, Discretization};
use elicit_core::distributions::{kl_numeric, Density, Distribution, Family};
use elicit_core::fitting::{fit_roulette, fit_variable_interval, reconcile_dirichlet};
use elicit_core::pooling::{linear_pool, log_pool, WeightedOpinions};
use elicit_core::predictive::{cmp_transform, find_model, prior_predictive_partition, CmpSpec, Link, BETA_BERNOULLI};
use elicit_core::records::{Answer, ElicitationDataset, Judgment, Query};
use elicit_core::supra_bayes::{posterior, AnalystPrior, ElicitationNoise, GridSpec, HyperPosterior};
use proptest::prelude::*;

fn family_and_params() -> impl Strategy<Value = Distribution> {
    prop_oneof![
        (-50.0f64..50.0, 0.05f64..20.0).prop_map(|(m, s)| Distribution::normal(m, s).unwrap()),
        (-3.0f64..3.0, 0.05f64..2.5).prop_map(|(m, s)| Distribution::lognormal(m, s).unwrap()),
        (0.3f64..60.0, 0.3f64..60.0).prop_map(|(a, b)| Distribution::beta(a, b).unwrap()),
        (0.3f64..60.0, 0.05f64..20.0).prop_map(|(k, r)| Distribution::gamma(k, r).unwrap()),
        (0.5f64..60.0, -10.0f64..10.0, 0.1f64..5.0).prop_map(|(n, l, s)| Distribution::student_t(n, l, s).unwrap()),
        (-10.0f64..10.0, 0.01f64..20.0).prop_map(|(a, w)| Distribution::uniform(a, a + w).unwrap()),
    ]
}

fn trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let inner: f64 = (1..n).map(|i| f(lo + h * i as f64)).sum();
    h * (0.5 * (f(lo) + f(hi)) + inner)
}

fn beta_noise() -> ElicitationNoise {
    ElicitationNoise::new(0.03, 40.0, 0.2).unwrap()
}

fn small_grid() -> GridSpec {
    GridSpec::with_ranges(vec![10, 10], vec![(0.5, 9.0), (0.5, 9.0)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quantile_inverts_cdf(d in family_and_params(), k in 1usize..100) {
        let p = k as f64 / 100.0;
        let x = d.quantile(p).unwrap();
        prop_assert!((d.cdf(x).unwrap() - p).abs() < 1e-8);
    }

    #[test]
    fn cdf_is_monotone(d in family_and_params(), a in 0.001f64..0.999, b in 0.001f64..0.999) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (x, y) = (d.quantile(lo).unwrap(), d.quantile(hi).unwrap());
        prop_assert!(x <= y);
        prop_assert!(d.cdf(x).unwrap() <= d.cdf(y).unwrap());
        prop_assert!(d.pdf(x).unwrap() >= 0.0);
    }

    #[test]
    fn sampling_is_reproducible(d in family_and_params(), seed in any::<u64>()) {
        let a = d.sample_scalar(64, seed).unwrap();
        let b = d.sample_scalar(64, seed).unwrap();
        prop_assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn kl_is_nonnegative(m1 in -3.0f64..3.0, s1 in 0.3f64..3.0, m2 in -3.0f64..3.0, s2 in 0.3f64..3.0) {
        let p = Distribution::normal(m1, s1).unwrap();
        let q = Distribution::normal(m2, s2).unwrap();
        let kl = kl_numeric(&p, &q, 4001).unwrap();
        // closed form for two normals
        let exact = (s2 / s1).ln() + (s1 * s1 + (m1 - m2).powi(2)) / (2.0 * s2 * s2) - 0.5;
        prop_assert!(kl >= -1e-9);
        prop_assert!((kl - exact).abs() < 1e-4 * exact.max(1.0));
    }

    #[test]
    fn normal_and_gamma_fits_are_idempotent(m in -20.0f64..20.0, s in 0.1f64..10.0, k in 0.5f64..30.0, r in 0.1f64..10.0) {
        for (family, d) in [(Family::Normal, Distribution::normal(m, s).unwrap()), (Family::Gamma, Distribution::gamma(k, r).unwrap())] {
            let tuples: Vec<(f64, f64)> = [0.25, 0.5, 0.75].iter().map(|&p| (p, d.quantile(p).unwrap())).collect();
            let fit = fit_variable_interval(&tuples, family, None).unwrap();
            for (got, want) in fit.distribution.params().iter().zip(d.params()) {
                prop_assert!((got - want).abs() / want.abs().max(1.0) < 1e-3, "{family:?} {:?} vs {:?}", fit.distribution.params(), d.params());
            }
        }
    }

    #[test]
    fn roulette_histogram_conserves_probability(chips in proptest::collection::vec(0u32..30, 2..12)) {
        prop_assume!(chips.iter().sum::<u32>() > 0);
        let edges: Vec<f64> = (0..=chips.len()).map(|i| i as f64).collect();
        let total: u32 = chips.iter().sum();
        let fit = fit_roulette(&edges, &chips, None).unwrap();
        let hist = &fit.distribution;
        prop_assert_eq!(hist.family(), Family::Histogram);
        for (p, c) in hist.params().iter().zip(&chips) {
            prop_assert_eq!(*p, *c as f64 / total as f64);
        }
    }

    #[test]
    fn reconciled_dirichlet_keeps_normalized_means(params in proptest::collection::vec((0.5f64..20.0, 0.5f64..20.0), 2..6)) {
        let margs: Vec<Distribution> = params.iter().map(|&(a, b)| Distribution::beta(a, b).unwrap()).collect();
        let dir = reconcile_dirichlet(&margs).unwrap();
        let means: Vec<f64> = params.iter().map(|(a, b)| a / (a + b)).collect();
        let total: f64 = means.iter().sum();
        let alpha = dir.params();
        let a0: f64 = alpha.iter().sum();
        for (a, m) in alpha.iter().zip(&means) {
            prop_assert!((a / a0 - m / total).abs() < 1e-12);
        }
    }

    #[test]
    fn pools_integrate_to_one_and_ignore_order(
        m1 in -2.0f64..2.0, s1 in 0.5f64..2.0, m2 in -2.0f64..2.0, s2 in 0.5f64..2.0, w in 0.05f64..0.95,
    ) {
        let a = Distribution::normal(m1, s1).unwrap();
        let b = Distribution::normal(m2, s2).unwrap();
        let fwd = WeightedOpinions::new(vec![a.clone(), b.clone()], vec![w, 1.0 - w]).unwrap();
        let rev = WeightedOpinions::new(vec![b.clone(), a.clone()], vec![1.0 - w, w]).unwrap();
        let (lin, lin_rev) = (linear_pool(&fwd).unwrap(), linear_pool(&rev).unwrap());
        let (lo, hi) = (m1.min(m2) - 12.0, m1.max(m2) + 12.0);
        prop_assert!((trapezoid(|x| lin.density(x), lo, hi, 20_000) - 1.0).abs() < 1e-6);
        for x in [-1.0, 0.0, 0.7] {
            prop_assert!((lin.density(x) - lin_rev.density(x)).abs() < 1e-15);
        }
        let (lg, lg_rev) = (log_pool(&fwd, 2001).unwrap(), log_pool(&rev, 2001).unwrap());
        // piecewise constant, so the integral is exact bin by bin
        let mass: f64 = lg.edges().windows(2).map(|e| (e[1] - e[0]) * lg.pdf(0.5 * (e[0] + e[1])).unwrap()).sum();
        prop_assert!((mass - 1.0).abs() < 1e-6);
        prop_assert_eq!(lg, lg_rev);
    }

    #[test]
    fn single_weight_linear_pool_is_the_first_prior(m in -3.0f64..3.0, x in -5.0f64..5.0) {
        let first = Distribution::normal(m, 1.0).unwrap();
        let w = WeightedOpinions::new(vec![first.clone(), Distribution::gamma(2.0, 1.0).unwrap()], vec![1.0, 0.0]).unwrap();
        prop_assert!((linear_pool(&w).unwrap().density(x) - first.pdf(x).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn predictive_probabilities_sum_to_one(a in 0.5f64..50.0, b in 0.5f64..50.0, s in 1usize..2000, seed in any::<u64>()) {
        let m = find_model(BETA_BERNOULLI).unwrap();
        let pp = prior_predictive_partition(&m, &[a, b], "y", s, seed).unwrap();
        let counts: Vec<f64> = pp.probs.iter().map(|p| (p * s as f64).round()).collect();
        prop_assert_eq!(counts.iter().sum::<f64>(), s as f64);
    }

    #[test]
    fn cmp_recovers_coefficients(b0 in proptest::collection::vec(-2.0f64..2.0, 2), off in -0.5f64..0.5) {
        let x = vec![vec![1.0, off], vec![off, 1.0]];
        for link in [Link::Identity, Link::Logit, Link::Log] {
            let means: Vec<f64> = x.iter().map(|row| {
                let eta = row[0] * b0[0] + row[1] * b0[1];
                match link {
                    Link::Identity => eta,
                    Link::Logit => 1.0 / (1.0 + (-eta).exp()),
                    Link::Log => eta.exp(),
                }
            }).collect();
            let spec = CmpSpec { design: x.clone(), link, means, mean_marginals: None };
            let b = cmp_transform(&spec, None, 0).unwrap().point;
            for (g, w) in b.iter().zip(&b0) {
                prop_assert!((g - w).abs() < 1e-10);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn posterior_ignores_statement_order(values in proptest::collection::vec(0.05f64..0.6, 3), rot in 0usize..3) {
        let m = find_model(BETA_BERNOULLI).unwrap();
        let js: Vec<Judgment> = values
            .iter()
            .zip([0.25, 0.5, 0.75])
            .enumerate()
            .map(|(i, (v, p))| Judgment::new(Query::quantile(format!("q{i}"), "theta", p), Answer::QuantileValue(*v)))
            .chain(std::iter::once(Judgment::new(Query::partition("y", "y"), Answer::SimplexVector(vec![0.6, 0.4]))))
            .collect();
        let mut rotated = js.clone();
        rotated.rotate_left(rot + 1);
        let build = |list: &[Judgment]| {
            let mut d = ElicitationDataset::new();
            for j in list {
                d.push(j.clone()).unwrap();
            }
            d
        };
        let run = |d: &ElicitationDataset| posterior(&m, d, &AnalystPrior::Uniform, &beta_noise(), &small_grid(), 300, 4).unwrap();
        prop_assert_eq!(run(&build(&js)), run(&build(&rotated)));
    }

    #[test]
    fn posterior_weights_ignore_constant_shift(lw in proptest::collection::vec(-30.0f64..0.0, 2..40), c in -500.0f64..500.0) {
        let points: Vec<Vec<f64>> = (0..lw.len()).map(|i| vec![1.0 + i as f64]).collect();
        let a = HyperPosterior::from_log_weights(points.clone(), lw.clone()).unwrap();
        let b = HyperPosterior::from_log_weights(points, lw.iter().map(|w| w + c).collect()).unwrap();
        let total: f64 = a.weights().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for (x, y) in a.weights().iter().zip(b.weights()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn gain_is_nonnegative(v in 0.05f64..0.7, p in 0.02f64..0.98) {
        let m = find_model(BETA_BERNOULLI).unwrap();
        let mut d = ElicitationDataset::new();
        d.push(Judgment::new(Query::quantile("seen", "theta", 0.5), Answer::QuantileValue(v))).unwrap();
        let hp = posterior(&m, &d, &AnalystPrior::Uniform, &beta_noise(), &small_grid(), 1, 0).unwrap();
        let eig = expected_information_gain(&m, &hp, &Query::quantile("next", "theta", p), &beta_noise(), &Discretization::default(), 200, 1).unwrap();
        prop_assert!(eig >= -1e-9);
    }
}

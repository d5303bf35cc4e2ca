//! Cross-module checks: simulated experts feeding the fitting and
//! supra-Bayesian routes, and query selection on the resulting posteriors.

use elicit_core::active::{expected_information_gain, select_next_query, CandidateSet, Discretization};
use elicit_core::distributions::{total_variation, Distribution};
use elicit_core::evaluation::{run_eval, simulated_answer, AnswerNoise, EvalOptions, Method, SimulatedExpert};
use elicit_core::fitting::{feedback_summaries, fit_variable_interval};
use elicit_core::predictive::{find_model, BETA_BERNOULLI, HIERARCHICAL_NORMAL, NORMAL_KNOWN_SIGMA};
use elicit_core::records::{validate_statement, Answer, ElicitationDataset, Judgment, Query, QueryKind, Space};
use elicit_core::supra_bayes::{
    elicited_prior, loglik_observable_space, posterior, smoothed_predictive, AnalystPrior, ElicitationNoise,
    ElicitedPriorMode, GridSpec,
};

fn noise() -> ElicitationNoise {
    ElicitationNoise::new(0.02, 50.0, 0.2).unwrap()
}

fn grid() -> GridSpec {
    GridSpec::with_ranges(vec![25, 25], vec![(0.4, 10.0), (0.4, 10.0)])
}

fn expert(lambda: Vec<f64>) -> SimulatedExpert {
    SimulatedExpert::new(BETA_BERNOULLI, lambda, AnswerNoise::default(), 3)
}

fn ask(e: &SimulatedExpert, levels: &[f64]) -> ElicitationDataset {
    let m = find_model(&e.model).unwrap();
    let mut d = ElicitationDataset::new();
    for (i, &p) in levels.iter().enumerate() {
        let q = Query::quantile(format!("q{i}"), "theta", p);
        let z = simulated_answer(e, &m, &q).unwrap();
        assert!(validate_statement(&q, &z, &d).is_empty());
        d.push(Judgment { query: q, statement: z }).unwrap();
    }
    d
}

#[test]
fn noiseless_quartiles_fit_back_to_the_truth() {
    let e = expert(vec![3.0, 7.0]);
    let data = ask(&e, &[0.25, 0.5, 0.75]);
    let tuples: Vec<(f64, f64)> = data
        .iter()
        .map(|j| match (&j.query.kind, &j.statement.answer) {
            (QueryKind::QuantileAt { p }, Answer::QuantileValue(v)) => (*p, *v),
            _ => unreachable!(),
        })
        .collect();
    let fit = fit_variable_interval(&tuples, elicit_core::distributions::Family::Beta, None).unwrap();
    let truth = Distribution::beta(3.0, 7.0).unwrap();
    let fb = feedback_summaries(&fit.distribution, &[0.05, 0.5, 0.95]).unwrap();
    for (p, v) in fb {
        assert!((v - truth.quantile(p).unwrap()).abs() < 1e-4);
    }
}

#[test]
fn supra_bayes_prior_is_close_to_truth() {
    let m = find_model(BETA_BERNOULLI).unwrap();
    let data = ask(&expert(vec![2.0, 5.0]), &[0.1, 0.5, 0.9]);
    let hp = posterior(&m, &data, &AnalystPrior::Uniform, &noise(), &grid(), 1, 0).unwrap();
    let truth = Distribution::beta(2.0, 5.0).unwrap();
    for mode in [ElicitedPriorMode::PlugInMean, ElicitedPriorMode::Mixture] {
        let prior = elicited_prior(&hp, &m, "theta", mode, 50).unwrap();
        let tv = total_variation(&truth, &prior, 4001).unwrap();
        assert!(tv < 0.1, "{mode:?}: tv {tv}");
    }
}

#[test]
fn parameter_only_data_ignores_observable_settings() {
    let m = find_model(BETA_BERNOULLI).unwrap();
    let data = ask(&expert(vec![2.0, 5.0]), &[0.25, 0.75]);
    let a = posterior(&m, &data, &AnalystPrior::Uniform, &noise(), &grid(), 1, 0).unwrap();
    let b = posterior(&m, &data, &AnalystPrior::Uniform, &noise(), &grid(), 5000, 77).unwrap();
    assert_eq!(a, b);
}

#[test]
fn matching_partition_answer_maximizes_loglik() {
    let m = find_model(BETA_BERNOULLI).unwrap();
    let (s, seed) = (4000, 12);
    let star = [2.0, 5.0];
    let rho = smoothed_predictive(&m, &star, "y", s, seed).unwrap();
    let j = Judgment::new(Query::partition("y", "y"), Answer::SimplexVector(rho.clone()));
    let at_star = loglik_observable_space(&m, &star, &j, &noise(), s, seed).unwrap();
    let pts = GridSpec::with_ranges(vec![10, 10], vec![(0.5, 9.5), (0.5, 9.5)]).points(&m).unwrap();
    for (i, l) in pts.iter().enumerate() {
        let pi = smoothed_predictive(&m, l, "y", s, i as u64).unwrap();
        let tv = 0.5 * pi.iter().zip(&rho).map(|(a, b)| (a - b).abs()).sum::<f64>();
        if tv > 0.02 {
            assert!(loglik_observable_space(&m, l, &j, &noise(), s, i as u64).unwrap() < at_star, "{l:?}");
        }
    }
}

#[test]
fn informative_query_beats_uninformative() {
    let m = find_model(BETA_BERNOULLI).unwrap();
    let pts = vec![vec![2.0, 2.0], vec![5.0, 5.0], vec![9.0, 9.0]];
    let hp = elicit_core::supra_bayes::HyperPosterior::from_log_weights(pts, vec![0.0; 3]).unwrap();
    // every Beta(c, c) has median 0.5
    let flat = Query::quantile("a-median", "theta", 0.5);
    let sharp = Query::quantile("b-tail", "theta", 0.95);
    let disc = Discretization::default();
    let eig = expected_information_gain(&m, &hp, &flat, &noise(), &disc, 100, 0).unwrap();
    assert!(eig.abs() < 1e-9);
    let cands = CandidateSet::new(vec![flat, sharp]).unwrap();
    let sel = select_next_query(&m, &hp, &cands, &noise(), 100, 0, &[]).unwrap();
    assert_eq!(sel.query.id, "b-tail");
    assert_eq!(sel.runner_up_eig.map(|g| g.abs() < 1e-9), Some(true));
}

#[test]
fn partition_and_interval_judgments_combine() {
    let m = find_model(NORMAL_KNOWN_SIGMA).unwrap();
    let e = SimulatedExpert::new(NORMAL_KNOWN_SIGMA, vec![1.0, 2.0], AnswerNoise::default(), 9);
    let queries = vec![
        Query::quantile("m", "theta", 0.5),
        Query {
            id: "iv".into(),
            space: Space::Parameter,
            target: "theta".into(),
            kind: QueryKind::IntervalProbability { lower: 0.0, upper: 2.0 },
        },
        Query::partition("y", "y"),
    ];
    let mut d = ElicitationDataset::new();
    for q in queries {
        let z = simulated_answer(&e, &m, &q).unwrap();
        d.push(Judgment { query: q, statement: z }).unwrap();
    }
    let g = GridSpec::with_ranges(vec![21, 21], vec![(-2.0, 4.0), (0.5, 4.0)]);
    let hp = posterior(&m, &d, &AnalystPrior::Uniform, &noise(), &g, 2000, 1).unwrap();
    let mean = hp.mean().unwrap();
    assert!((mean[0] - 1.0).abs() < 0.2 && (mean[1] - 2.0).abs() < 0.5, "{mean:?}");
}

#[test]
fn hierarchical_model_accepts_grid_posterior() {
    let m = find_model(HIERARCHICAL_NORMAL).unwrap();
    assert_eq!(m.dim(), 4);
    let mut d = ElicitationDataset::new();
    d.push(Judgment::new(Query::quantile("a50", "a", 0.5), Answer::QuantileValue(0.5))).unwrap();
    d.push(Judgment::new(Query::quantile("t50", "tau", 0.5), Answer::QuantileValue(1.0))).unwrap();
    let g = GridSpec::with_ranges(vec![5, 5, 5, 5], vec![(-2.0, 2.0), (0.5, 2.0), (1.0, 5.0), (1.0, 5.0)]);
    let hp = posterior(&m, &d, &AnalystPrior::Uniform, &ElicitationNoise::new(0.2, 20.0, 0.3).unwrap(), &g, 1, 0).unwrap();
    assert_eq!(hp.len(), 625);
    assert!((hp.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn fitting_eval_reports_are_finite_and_paired() {
    let mut e = expert(vec![2.0, 5.0]);
    e.answer_noise.quantile_noise = 0.01;
    let opts = EvalOptions::default();
    let a = run_eval(&e, Method::FitVariableInterval, 3, 3, 1, &opts).unwrap();
    let b = run_eval(&e, Method::FitVariableInterval, 3, 3, 1, &opts).unwrap();
    assert_eq!(a.validity_kl_per_repeat, b.validity_kl_per_repeat);
    for v in [a.validity_kl, a.validity_tv, a.responsiveness_tv] {
        assert!(v.is_finite() && v >= 0.0);
    }
    assert!(a.reliability_sd.iter().all(|s| s.is_finite() && *s >= 0.0));
}

//! Randomized invariants of the probability engine: normalization, scale
//! invariance, Luce-axiom compatibility, the Davidson and Luce special
//! cases, tie-probability maximization at equal strengths, agreement with
//! the natural-scale oracle, and gradient correctness.

mod common;

use std::collections::BTreeMap;

use common::oracle;
use davidson_luce::{
    davidson_pair_distribution, fisher_information, log_likelihood, log_weight,
    outcome_distribution, score, Contest, Dataset, ItemId, ModelParams, Universe, WinningSet,
};
use proptest::prelude::*;

fn universe_of(n: usize) -> Universe {
    let labels: Vec<String> = (0..n)
        .map(|i| char::from(b'A' + i as u8).to_string())
        .collect();
    Universe::from_labels(labels).unwrap()
}

fn ids_from_mask(mask: u32) -> Vec<ItemId> {
    (0..32)
        .filter(|&b| mask & (1 << b) != 0)
        .map(|b| ItemId(b as usize))
        .collect()
}

/// Parameters over n items with every tie order 2..=n stored, so any
/// outcome is admissible.
fn params_with_all_orders(lambdas: &[f64], gammas: &[f64]) -> ModelParams {
    let n = lambdas.len();
    let log_tie: BTreeMap<usize, f64> = (2..=n).zip(gammas.iter().copied()).collect();
    let mut params = ModelParams::new(n, ItemId(n - 1), log_tie).unwrap();
    for (i, &l) in lambdas.iter().enumerate() {
        params.set_log_strength(ItemId(i), l).unwrap();
    }
    params
}

/// Strategy: r in 2..=6 items with log-strengths in [-3,3] and log
/// tie-prevalences in [-3,3] for every order.
fn arb_full_model() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=6).prop_flat_map(|r| {
        (
            prop::collection::vec(-3.0..3.0f64, r),
            prop::collection::vec(-3.0..3.0f64, r - 1),
        )
    })
}

/// Strategy: a dataset over n in 3..=5 items with 1..=6 contests, plus
/// matching parameters storing every order.
fn arb_dataset_and_params() -> impl Strategy<Value = (Dataset, ModelParams)> {
    (3usize..=5)
        .prop_flat_map(|n| {
            let contest = (0u32..(1 << n), 0u32..(1 << n)).prop_filter(
                "need >= 2 items and a non-empty winning subset",
                move |&(items, winners)| items.count_ones() >= 2 && (items & winners) != 0,
            );
            (
                Just(n),
                prop::collection::vec(contest, 1..=6),
                prop::collection::vec(-3.0..3.0f64, n),
                prop::collection::vec(-3.0..3.0f64, n - 1),
            )
        })
        .prop_map(|(n, masks, lambdas, gammas)| {
            let u = universe_of(n);
            let contests = masks
                .into_iter()
                .map(|(items, winners)| {
                    Contest::new(&u, &ids_from_mask(items), &ids_from_mask(items & winners))
                        .unwrap()
                })
                .collect();
            let data = Dataset::new(u, contests).unwrap();
            let params = params_with_all_orders(&lambdas, &gammas);
            (data, params)
        })
}

fn full_space_distribution(
    universe: &Universe,
    params: &ModelParams,
) -> davidson_luce::OutcomeDistribution {
    let items: Vec<ItemId> = universe.ids().collect();
    let contest = Contest::new(universe, &items, &[items[0]]).unwrap();
    let space = davidson_luce::enumerate(&contest, params.t_max());
    outcome_distribution(&contest, &space, params).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn probabilities_normalize_to_one((lambdas, gammas) in arb_full_model()) {
        let params = params_with_all_orders(&lambdas, &gammas);
        let u = universe_of(lambdas.len());
        let dist = full_space_distribution(&u, &params);
        let total: f64 = dist.outcomes().iter().map(|(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() < 1e-12, "total {total}");
        prop_assert!(dist.outcomes().iter().all(|(_, p)| *p > 0.0));
    }

    #[test]
    fn shifting_all_strengths_changes_nothing(
        (lambdas, gammas) in arb_full_model(),
        shift in -10.0..10.0f64,
    ) {
        let u = universe_of(lambdas.len());
        let base = params_with_all_orders(&lambdas, &gammas);
        let shifted_lambdas: Vec<f64> = lambdas.iter().map(|l| l + shift).collect();
        let shifted = params_with_all_orders(&shifted_lambdas, &gammas);
        let p0 = full_space_distribution(&u, &base);
        let p1 = full_space_distribution(&u, &shifted);
        for ((_, a), (_, b)) in p0.outcomes().iter().zip(p1.outcomes()) {
            prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn single_winner_probabilities_follow_luce_conditionally(
        (lambdas, gammas) in arb_full_model(),
    ) {
        // Conditional on the outcome being an outright win, win
        // probabilities are alpha_i / sum alpha_k regardless of the ties.
        let u = universe_of(lambdas.len());
        let params = params_with_all_orders(&lambdas, &gammas);
        let dist = full_space_distribution(&u, &params);
        let single_total: f64 = dist
            .outcomes()
            .iter()
            .filter(|(set, _)| set.order() == 1)
            .map(|(_, p)| p)
            .sum();
        let alpha_total: f64 = lambdas.iter().map(|l| l.exp()).sum();
        for (set, p) in dist.outcomes() {
            if set.order() == 1 {
                let alpha = params.log_strength(set.members()[0]).exp();
                let conditional = p / single_total;
                let luce = alpha / alpha_total;
                prop_assert!((conditional - luce).abs() < 1e-12, "{conditional} vs {luce}");
            }
        }
    }

    #[test]
    fn luce_reduction_without_ties(lambdas in prop::collection::vec(-3.0..3.0f64, 2..=6)) {
        let n = lambdas.len();
        let u = universe_of(n);
        let mut params = ModelParams::new(n, ItemId(n - 1), BTreeMap::new()).unwrap();
        for (i, &l) in lambdas.iter().enumerate() {
            params.set_log_strength(ItemId(i), l).unwrap();
        }
        let dist = full_space_distribution(&u, &params);
        prop_assert_eq!(dist.outcomes().len(), n);
        let alpha_total: f64 = lambdas.iter().map(|l| l.exp()).sum();
        for (set, p) in dist.outcomes() {
            let luce = params.log_strength(set.members()[0]).exp() / alpha_total;
            prop_assert!((p - luce).abs() < 1e-14, "{p} vs {luce}");
        }
    }

    #[test]
    fn pair_distribution_is_the_r2_special_case(
        alpha_i in 0.05..20.0f64,
        alpha_j in 0.05..20.0f64,
        delta in 0.05..20.0f64,
    ) {
        // davidson_pair_distribution is defined by delegation, so the match
        // must be bit-exact.
        let (pi, pj, tie) = davidson_pair_distribution(alpha_i, alpha_j, delta).unwrap();
        let u = Universe::from_labels(["i", "j"]).unwrap();
        let mut params = ModelParams::new(
            2,
            ItemId(1),
            BTreeMap::from([(2, delta.ln())]),
        ).unwrap();
        params.set_log_strength(ItemId(0), alpha_i.ln()).unwrap();
        params.set_log_strength(ItemId(1), alpha_j.ln()).unwrap();
        let dist = full_space_distribution(&u, &params);
        prop_assert_eq!(dist.outcomes()[0].1, pi);
        prop_assert_eq!(dist.outcomes()[1].1, pj);
        prop_assert_eq!(dist.outcomes()[2].1, tie);
    }

    #[test]
    fn pair_tie_probability_peaks_at_equal_strengths(
        log_product in -4.0..4.0f64,
        gamma in -3.0..3.0f64,
        imbalance in 0.01..5.0f64,
    ) {
        // Fixed product alpha_i * alpha_j and fixed delta: the tie is most
        // probable when the strengths are equal.
        let tie_prob = |u: f64| {
            let mut params = ModelParams::new(
                2,
                ItemId(1),
                BTreeMap::from([(2, gamma)]),
            ).unwrap();
            params.set_log_strength(ItemId(0), log_product / 2.0 + u).unwrap();
            params.set_log_strength(ItemId(1), log_product / 2.0 - u).unwrap();
            let universe = universe_of(2);
            full_space_distribution(&universe, &params).outcomes()[2].1
        };
        prop_assert!(tie_prob(imbalance) < tie_prob(0.0));
        prop_assert!(tie_prob(-imbalance) < tie_prob(0.0));
    }

    #[test]
    fn full_tie_probability_peaks_at_equal_strengths(
        (lambdas, gammas) in arb_full_model(),
    ) {
        // Fixed product of strengths: the all-r-way tie is most probable
        // when every strength equals their geometric mean.
        let n = lambdas.len();
        let mean = lambdas.iter().sum::<f64>() / n as f64;
        let spread = lambdas.iter().map(|l| (l - mean).abs()).fold(0.0, f64::max);
        prop_assume!(spread > 1e-6);
        let u = universe_of(n);
        let full_tie = |ls: &[f64]| {
            let params = params_with_all_orders(ls, &gammas);
            let dist = full_space_distribution(&u, &params);
            dist.outcomes().last().unwrap().1
        };
        let equal = vec![mean; n];
        prop_assert!(full_tie(&lambdas) < full_tie(&equal));
    }

    #[test]
    fn agrees_with_the_natural_scale_oracle((data, params) in arb_dataset_and_params()) {
        for contest in data.contests() {
            let space = davidson_luce::enumerate(contest, params.t_max());
            let dist = outcome_distribution(contest, &space, &params).unwrap();
            let brute = oracle::brute_force_distribution(contest.items(), &params);
            prop_assert_eq!(dist.outcomes().len(), brute.len());
            for (set, p) in dist.outcomes() {
                let mut key: Vec<ItemId> = set.members().to_vec();
                key.sort();
                let q = brute
                    .iter()
                    .find(|(members, _)| members == &key)
                    .map(|(_, q)| *q)
                    .expect("oracle enumerated the same set");
                prop_assert!((p - q).abs() < 1e-10, "{p} vs {q}");
            }
        }
    }

    #[test]
    fn log_weight_matches_the_design_representation((data, params) in arb_dataset_and_params()) {
        // The log-weight of a candidate equals the inner product of its
        // expanded-row shares with the log-strengths plus its tie-order
        // indicator row with the log tie-prevalences.
        let rows = davidson_luce::expand_dataset(&data, params.t_max());
        for row in rows {
            let direct = log_weight(&row.set, &params).unwrap();
            let mut linear = 0.0;
            for item in data.universe().ids() {
                linear += row.item_share(item) * params.log_strength(item);
            }
            for t in params.stored_orders() {
                linear += row.tie_indicator(t) * params.log_tie(t).unwrap();
            }
            prop_assert!((direct - linear).abs() < 1e-14, "{direct} vs {linear}");
        }
    }

    #[test]
    fn information_diagonal_is_nonnegative((data, params) in arb_dataset_and_params()) {
        let info = fisher_information(&data, &params).unwrap();
        for j in 0..info.nrows() {
            prop_assert!(info[(j, j)] >= 0.0);
        }
        for i in 0..info.nrows() {
            for j in 0..i {
                prop_assert!((info[(i, j)] - info[(j, i)]).abs() < 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn score_matches_central_finite_differences(
        lambdas in prop::collection::vec(-2.0..2.0f64, 4),
        gammas in prop::collection::vec(-2.0..2.0f64, 2),
    ) {
        let data = common::triples_round_robin();
        let log_tie: BTreeMap<usize, f64> =
            [(2, gammas[0]), (3, gammas[1])].into_iter().collect();
        let mut params = ModelParams::new(4, ItemId(3), log_tie).unwrap();
        for (i, &l) in lambdas.iter().enumerate() {
            params.set_log_strength(ItemId(i), l).unwrap();
        }
        let analytic = score(&data, &params).unwrap();
        let numeric = oracle::numeric_gradient(&data, &params, 1e-5);
        prop_assert_eq!(analytic.len(), numeric.len());
        for (a, n) in analytic.iter().zip(&numeric) {
            let tolerance = 1e-6 * a.abs().max(1.0);
            prop_assert!((a - n).abs() < tolerance, "analytic {a} vs numeric {n}");
        }
    }

    #[test]
    fn score_is_observed_minus_expected_statistics((data, params) in arb_dataset_and_params()) {
        // Exponential-family identity, with expectations computed by the
        // natural-scale oracle.
        let n = params.n_items();
        let reference = params.reference();
        let orders: Vec<usize> = params.stored_orders().collect();
        let mut expected_scores = vec![0.0; n];
        let mut expected_ties = vec![0.0; orders.len()];
        for contest in data.contests() {
            for (members, p) in oracle::brute_force_distribution(contest.items(), &params) {
                let t = members.len();
                for &m in &members {
                    expected_scores[m.0] += p / t as f64;
                }
                if let Some(j) = orders.iter().position(|&o| o == t) {
                    expected_ties[j] += p;
                }
            }
        }
        let stats = davidson_luce::sufficient_statistics(&data);
        let analytic = score(&data, &params).unwrap();
        let mut idx = 0;
        for i in (0..n).map(ItemId) {
            if i == reference {
                continue;
            }
            let direct = stats.item_scores[i.0] - expected_scores[i.0];
            prop_assert!((analytic[idx] - direct).abs() < 1e-10);
            idx += 1;
        }
        for (j, &order) in orders.iter().enumerate() {
            let observed = *stats.tie_counts.get(&order).unwrap_or(&0) as f64;
            let direct = observed - expected_ties[j];
            prop_assert!((analytic[idx + j] - direct).abs() < 1e-10);
        }
    }
}

#[test]
fn uniform_weights_make_all_seven_outcomes_equally_likely() {
    // All-zero parameters on a 3-item contest: each of the 7 candidate
    // outcomes has weight 1.
    let u = universe_of(3);
    let params = params_with_all_orders(&[0.0; 3], &[0.0; 2]);
    let dist = full_space_distribution(&u, &params);
    assert_eq!(dist.outcomes().len(), 7);
    for (_, p) in dist.outcomes() {
        assert!((p - 1.0 / 7.0).abs() < 1e-15);
    }
}

#[test]
fn all_zero_parameters_give_minus_four_log_seven_on_the_round_robin() {
    let data = common::triples_round_robin();
    let params = params_with_all_orders(&[0.0; 4], &[0.0; 3]);
    // Every candidate outcome of a 3-item contest (3 + 3 + 1 = 7 of them)
    // has weight 1, so each observed outcome has probability 1/7.
    let ll = log_likelihood(&data, &params).unwrap();
    assert!((ll + 4.0 * 7f64.ln()).abs() < 1e-12, "{ll}");
}

#[test]
fn printed_mle_reproduces_the_fitted_log_likelihood() {
    let data = common::triples_round_robin();
    let params = common::triples_mle_params();
    let ll = log_likelihood(&data, &params).unwrap();
    assert!(
        (ll - common::TRIPLES_LOGLIK).abs() < 1e-5,
        "loglik at printed coefficients: {ll}"
    );
}

#[test]
fn deviance_identity_holds_at_printed_mle_and_elsewhere() {
    let data = common::triples_round_robin();
    for params in [
        common::triples_mle_params(),
        common::params_from(&[0.3, -1.2, 0.8, 0.0], &[(2, 0.4), (3, -0.7)]),
    ] {
        let (multinomial, poisson) = oracle::deviance_identity_check(&data, &params);
        assert!(
            (multinomial - poisson).abs() < 1e-8,
            "{multinomial} vs {poisson}"
        );
    }
    let (multinomial, _) = oracle::deviance_identity_check(&data, &common::triples_mle_params());
    assert!((multinomial - 11.35986).abs() < 1e-3);
}

#[test]
fn printed_mle_matches_the_frozen_fitted_probabilities() {
    // The four probabilities printed for contest {A,B,C} at 5 decimals.
    let data = common::triples_round_robin();
    let params = common::triples_mle_params();
    let contest = &data.contests()[3];
    let space = davidson_luce::enumerate(contest, params.t_max());
    let dist = outcome_distribution(contest, &space, &params).unwrap();
    let u = data.universe();
    let lookup = |label: &str| {
        dist.outcomes()
            .iter()
            .find(|(set, _)| set.label(u) == label)
            .map(|(_, p)| *p)
            .unwrap()
    };
    assert!((lookup("B") - 0.24096).abs() < 1e-3);
    assert!((lookup("A=B=C") - 0.25423).abs() < 1e-3);
}

#[test]
fn gradient_vanishes_at_the_printed_mle() {
    let data = common::triples_round_robin();
    let params = common::triples_mle_params();
    let analytic = score(&data, &params).unwrap();
    assert!(analytic.amax() < 1e-3, "score norm {}", analytic.amax());
    let numeric = oracle::numeric_gradient(&data, &params, 1e-5);
    for g in numeric {
        assert!(g.abs() < 1e-3);
    }
}

#[test]
fn oracle_overflow_guard_trips() {
    let u = universe_of(2);
    let mut params = ModelParams::new(2, ItemId(1), BTreeMap::new()).unwrap();
    params.set_log_strength(ItemId(0), 201.0).unwrap();
    let items: Vec<ItemId> = u.ids().collect();
    let result = std::panic::catch_unwind(|| oracle::brute_force_distribution(&items, &params));
    assert!(result.is_err());
}

#[test]
fn excluded_intermediate_order_gets_probability_zero() {
    // Orders {3} stored but not 2: pairs are structurally impossible.
    let u = universe_of(3);
    let mut params = ModelParams::new(3, ItemId(2), BTreeMap::from([(3, 0.5)])).unwrap();
    params.set_log_strength(ItemId(0), 0.7).unwrap();
    let items: Vec<ItemId> = u.ids().collect();
    let contest = Contest::new(&u, &items, &[ItemId(0)]).unwrap();
    let space = davidson_luce::enumerate(&contest, 3);
    let dist = outcome_distribution(&contest, &space, &params).unwrap();
    let mut pair_mass = 0.0;
    let mut total = 0.0;
    for (set, p) in dist.outcomes() {
        total += p;
        if set.order() == 2 {
            pair_mass += p;
        }
    }
    assert_eq!(pair_mass, 0.0);
    assert!((total - 1.0).abs() < 1e-12);
    // A pair can still be *scored* (log-weight is -inf), but a pair outcome
    // cannot be observed under these parameters.
    let pair = WinningSet::new(&u, &[ItemId(0), ItemId(1)]).unwrap();
    assert_eq!(log_weight(&pair, &params).unwrap(), f64::NEG_INFINITY);
}

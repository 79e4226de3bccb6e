//! Shared fixtures for the integration suites. Each test binary includes
//! this module separately, so not every binary uses every helper.
#![allow(dead_code)]

pub mod oracle;

use std::collections::BTreeMap;

use davidson_luce::{Contest, Dataset, ItemId, ModelParams, Universe};

/// The 4-contest round robin of triples over A, B, C, D used as the golden
/// dataset throughout: B beats C and D; A and C tie ahead of D; B and D tie
/// ahead of A; A, B, C all tie.
pub fn triples_round_robin() -> Dataset {
    let u = Universe::from_labels(["A", "B", "C", "D"]).unwrap();
    let (a, b, c, d) = (ItemId(0), ItemId(1), ItemId(2), ItemId(3));
    let contests = vec![
        Contest::new(&u, &[b, c, d], &[b]).unwrap(),
        Contest::new(&u, &[a, c, d], &[a, c]).unwrap(),
        Contest::new(&u, &[a, b, d], &[b, d]).unwrap(),
        Contest::new(&u, &[a, b, c], &[a, b, c]).unwrap(),
    ];
    Dataset::new(u, contests).unwrap()
}

/// The same dataset in the wide CSV table form.
pub const TRIPLES_WIDE_CSV: &str = "\
A,B,C,D
NA,1,0,0
1,NA,1,0
0,1,NA,1
1,1,1,NA
";

/// Maximum-likelihood coefficients for [`triples_round_robin`] at reference
/// item D, rounded to 4-5 significant figures (good to ~5e-5 of the exact
/// optimum): log-strengths for A, B, C and log tie-prevalences for orders
/// 2 and 3.
pub const TRIPLES_MLE: ([f64; 3], [f64; 2]) = ([2.0711, 6.8637, 2.0711], [2.3902, 3.2486]);

/// Fitted log-likelihood at the exact optimum of [`triples_round_robin`]
/// (deviance 11.359857...).
pub const TRIPLES_LOGLIK: f64 = -5.679928630;

/// Builds a parameter set over a fresh n-item universe with the given
/// log-strengths (reference = last item) and log tie-prevalences.
pub fn params_from(log_strengths: &[f64], log_ties: &[(usize, f64)]) -> ModelParams {
    let n = log_strengths.len();
    let log_tie: BTreeMap<usize, f64> = log_ties.iter().copied().collect();
    let mut params = ModelParams::new(n, ItemId(n - 1), log_tie).unwrap();
    for (i, &l) in log_strengths.iter().enumerate() {
        params.set_log_strength(ItemId(i), l).unwrap();
    }
    params
}

/// The printed MLE of the golden dataset as a ready-to-use parameter set.
pub fn triples_mle_params() -> ModelParams {
    let (strengths, ties) = TRIPLES_MLE;
    params_from(
        &[strengths[0], strengths[1], strengths[2], 0.0],
        &[(2, ties[0]), (3, ties[1])],
    )
}

/// One parameter-recovery experiment: draw generating parameters for a
/// three-item pairwise round robin, simulate `replications` rounds, refit,
/// and report whether every free coordinate (two log-strength contrasts
/// and the tie log-prevalence) landed within three estimated standard
/// errors of its generating value.
pub fn recovery_trial(trial: u64, replications: u64) -> bool {
    use davidson_luce::{fit, simulate_tournament, Design, FitConfig, SimConfig};
    use rand::{Rng, SeedableRng};

    let universe = Universe::from_labels(["A", "B", "C"]).unwrap();
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0x5EED_0000 + trial);
    let lambda = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
    let gamma = rng.random_range(-0.7..0.7);
    let generating = params_from(&[lambda[0], lambda[1], 0.0], &[(2, gamma)]);

    let config = SimConfig {
        seed: 0x00DD_BA5E + trial,
        design: Design::RoundRobin { subset_size: 2 },
        replications,
        params: generating,
    };
    let data = simulate_tournament(&universe, &config).unwrap();
    let report = fit(&data, &FitConfig::default()).unwrap();
    assert!(report.converged, "recovery trial {trial} did not converge");

    let mut ok = true;
    for (i, generating_value) in lambda.iter().enumerate() {
        let fitted = report.params.log_strength(ItemId(i));
        let se = report.std_errors.strengths[&ItemId(i)];
        ok &= (fitted - generating_value).abs() <= 3.0 * se;
    }
    let fitted_gamma = report.params.log_tie(2).unwrap();
    let se_gamma = report.std_errors.tie_prevalence[&2];
    ok && (fitted_gamma - gamma).abs() <= 3.0 * se_gamma
}

//! Deliberately slow, independent re-implementations used to cross-check
//! the library: direct probability enumeration in the alpha/delta scale,
//! finite-difference gradients, exhaustive grid-search maximum likelihood,
//! and the Poisson-representation deviance. None of them share probability
//! code with the library — agreement is evidence, not tautology.

use davidson_luce::{Dataset, ItemId, ModelParams, Universe};

/// Largest |log-parameter| the alpha-scale oracle accepts before direct
/// exponentiation risks overflow.
pub const OVERFLOW_GUARD: f64 = 200.0;

/// Outcome probabilities for a comparison set by direct enumeration:
/// weights delta_t * (prod alpha_i)^(1/t) computed in the natural scale and
/// normalized by their plain sum. Returns (members sorted by id, probability)
/// pairs; order of the pairs is unspecified.
///
/// Panics if any |log-parameter| exceeds [`OVERFLOW_GUARD`].
pub fn brute_force_distribution(items: &[ItemId], params: &ModelParams) -> Vec<(Vec<ItemId>, f64)> {
    for &i in items {
        assert!(
            params.log_strength(i).abs() <= OVERFLOW_GUARD,
            "oracle overflow guard: |lambda| > {OVERFLOW_GUARD}"
        );
    }
    for t in params.stored_orders() {
        assert!(
            params.log_tie(t).unwrap().abs() <= OVERFLOW_GUARD,
            "oracle overflow guard: |gamma| > {OVERFLOW_GUARD}"
        );
    }
    let r = items.len();
    let mut weighted: Vec<(Vec<ItemId>, f64)> = Vec::new();
    let mut total = 0.0;
    for mask in 1u32..(1 << r) {
        let t = mask.count_ones() as usize;
        if t > params.t_max() {
            continue;
        }
        let mut members = Vec::with_capacity(t);
        let mut product = 1.0;
        for (pos, &item) in items.iter().enumerate() {
            if mask & (1 << pos) != 0 {
                members.push(item);
                product *= params.log_strength(item).exp();
            }
        }
        let delta = if t == 1 {
            1.0
        } else {
            params.log_tie(t).map(f64::exp).unwrap_or(0.0)
        };
        let weight = delta * product.powf(1.0 / t as f64);
        members.sort();
        total += weight;
        weighted.push((members, weight));
    }
    assert!(total > 0.0, "all outcome weights vanished");
    weighted
        .into_iter()
        .map(|(members, w)| (members, w / total))
        .collect()
}

/// Probability of one winning set under the brute-force enumeration.
pub fn brute_force_prob(items: &[ItemId], params: &ModelParams, winners: &[ItemId]) -> f64 {
    let mut key = winners.to_vec();
    key.sort();
    brute_force_distribution(items, params)
        .into_iter()
        .find(|(members, _)| members == &key)
        .map(|(_, p)| p)
        .expect("winning set enumerated")
}

/// Free coordinates in the library's layout: non-reference items in
/// universe order, then stored tie orders ascending.
fn free_coordinates(params: &ModelParams) -> (Vec<ItemId>, Vec<usize>) {
    let items = (0..params.n_items())
        .map(ItemId)
        .filter(|&i| i != params.reference())
        .collect();
    (items, params.stored_orders().collect())
}

/// Central-difference gradient of the log-likelihood over the free
/// coordinates. `step` should sit in [1e-8, 1e-4].
pub fn numeric_gradient(data: &Dataset, params: &ModelParams, step: f64) -> Vec<f64> {
    let (free_items, free_orders) = free_coordinates(params);
    let mut gradient = Vec::with_capacity(free_items.len() + free_orders.len());
    let loglik = |p: &ModelParams| davidson_luce::log_likelihood(data, p).unwrap();
    for &item in &free_items {
        let mut plus = params.clone();
        plus.set_log_strength(item, params.log_strength(item) + step)
            .unwrap();
        let mut minus = params.clone();
        minus
            .set_log_strength(item, params.log_strength(item) - step)
            .unwrap();
        gradient.push((loglik(&plus) - loglik(&minus)) / (2.0 * step));
    }
    for &order in &free_orders {
        let gamma = params.log_tie(order).unwrap();
        let mut plus = params.clone();
        plus.set_log_tie(order, gamma + step).unwrap();
        let mut minus = params.clone();
        minus.set_log_tie(order, gamma - step).unwrap();
        gradient.push((loglik(&plus) - loglik(&minus)) / (2.0 * step));
    }
    gradient
}

/// Result of [`grid_search_mle`]: either an interior optimum or a signal
/// that the optimum sits on the +/- `GRID_HALF_WIDTH` boundary (widen the
/// bounds — in this model that means an estimate diverges).
pub enum GridOutcome {
    Interior(ModelParams),
    Boundary,
}

/// Half-width of the outermost search box on every free log-parameter.
pub const GRID_HALF_WIDTH: f64 = 8.0;

/// Exhaustive coarse-to-fine grid search for the maximum-likelihood
/// estimate, for models with at most 3 free parameters. Nine points per
/// axis per round, each round shrinking the box around the incumbent by a
/// factor of 4, until the spacing drops below `resolution`.
pub fn grid_search_mle(data: &Dataset, fixed_strengths: bool, resolution: f64) -> GridOutcome {
    let mut params = ModelParams::neutral_for(data, None).unwrap();
    let (free_items, free_orders) = if fixed_strengths {
        (Vec::new(), params.stored_orders().collect())
    } else {
        free_coordinates(&params)
    };
    let k = free_items.len() + free_orders.len();
    assert!(
        (1..=3).contains(&k),
        "grid search supports 1..=3 free parameters, got {k}"
    );

    let apply = |params: &mut ModelParams, theta: &[f64]| {
        for (j, &item) in free_items.iter().enumerate() {
            params.set_log_strength(item, theta[j]).unwrap();
        }
        for (j, &order) in free_orders.iter().enumerate() {
            params
                .set_log_tie(order, theta[free_items.len() + j])
                .unwrap();
        }
    };

    const POINTS: i64 = 9;
    let mut center = vec![0.0; k];
    let mut half_width = GRID_HALF_WIDTH;
    let mut best_theta = center.clone();
    loop {
        let step = 2.0 * half_width / (POINTS - 1) as f64;
        let mut best_ll = f64::NEG_INFINITY;
        // Odometer over the k-dimensional grid.
        let mut idx = vec![0i64; k];
        'grid: loop {
            let theta: Vec<f64> = idx
                .iter()
                .zip(&center)
                .map(|(&i, &c)| {
                    let v = c - half_width + i as f64 * step;
                    v.clamp(-GRID_HALF_WIDTH, GRID_HALF_WIDTH)
                })
                .collect();
            apply(&mut params, &theta);
            let ll = davidson_luce::log_likelihood(data, &params).unwrap();
            if ll > best_ll {
                best_ll = ll;
                best_theta = theta;
            }
            for digit in idx.iter_mut().take(k) {
                *digit += 1;
                if *digit < POINTS {
                    continue 'grid;
                }
                *digit = 0;
            }
            break;
        }
        center = best_theta.clone();
        if step <= resolution {
            break;
        }
        half_width = step;
    }
    if best_theta
        .iter()
        .any(|&v| v.abs() >= GRID_HALF_WIDTH - resolution)
    {
        return GridOutcome::Boundary;
    }
    apply(&mut params, &best_theta);
    GridOutcome::Interior(params)
}

/// Multinomial deviance (-2 sum of observed log-probabilities, via the
/// library) and the literal Poisson deviance of the expanded table with
/// means from the alpha-scale oracle. The two representations must agree.
pub fn deviance_identity_check(data: &Dataset, params: &ModelParams) -> (f64, f64) {
    let multinomial = -2.0 * davidson_luce::log_likelihood(data, params).unwrap();
    let mut poisson = 0.0;
    for contest in data.contests() {
        let dist = brute_force_distribution(contest.items(), params);
        let mut observed_key: Vec<ItemId> = contest.outcome().members().to_vec();
        observed_key.sort();
        for (members, mu) in dist {
            let y = if members == observed_key { 1.0 } else { 0.0 };
            // Poisson deviance term 2*(y ln(y/mu) - (y - mu)), with the
            // y = 0 limit 2*mu.
            poisson += if y > 0.0 {
                2.0 * (y * (y / mu).ln() - (y - mu))
            } else {
                2.0 * mu
            };
        }
    }
    (multinomial, poisson)
}

/// Looks up an item's probability-weighted label set in an oracle
/// distribution, converting to the universe's labels for error messages.
pub fn label_set(universe: &Universe, members: &[ItemId]) -> String {
    members
        .iter()
        .map(|&i| universe.label(i))
        .collect::<Vec<_>>()
        .join("=")
}

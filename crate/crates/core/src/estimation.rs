//! Maximum-likelihood fitting by Fisher scoring, with standard errors,
//! goodness-of-fit statistics, and estimate-existence diagnostics.
//!
//! The model is a full exponential family: the gradient of the
//! log-likelihood is observed-minus-expected sufficient statistics and the
//! Fisher information is the summed per-contest covariance of those
//! statistics, so the scoring update `theta <- theta + I^-1 * score` is
//! Newton's method on the expected Hessian. Contests sharing a comparison
//! set are aggregated into one multinomial block, which makes the
//! per-iteration cost depend on the number of distinct designs rather than
//! the number of contests.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::model::{self, Dataset, ItemId, ModelParams, ParamLayout, SufficientStats, WinningSet};
use crate::outcomes;

/// Stopping and constraint settings for [`fit`].
#[derive(Debug, Clone)]
pub struct FitConfig {
    /// Convergence threshold on the infinity norm of the score vector.
    pub tol: f64,
    /// Maximum number of scoring updates before giving up.
    pub max_iter: usize,
    /// Item whose log-strength is pinned at 0; defaults to the last item in
    /// universe order.
    pub reference_item: Option<ItemId>,
    /// Maximum number of times a step is halved when it fails to improve
    /// the log-likelihood.
    pub step_halving_max: usize,
    /// Constrain every log-strength to 0 and fit only the tie prevalences
    /// (the equal-strength null model).
    pub fixed_strengths: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            tol: 1e-8,
            max_iter: 100,
            reference_item: None,
            step_halving_max: 20,
            fixed_strengths: false,
        }
    }
}

/// Existence diagnostics for the maximum-likelihood estimate, after Ford's
/// conditions for paired comparisons: estimates are finite when the win/tie
/// digraph is strongly connected.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityReport {
    /// Whether the win/tie digraph on the whole item universe is strongly
    /// connected.
    pub strongly_connected: bool,
    /// Strongly connected components; a partition of the universe, each
    /// component sorted by item id, components ordered by their smallest
    /// member.
    pub components: Vec<Vec<ItemId>>,
    /// Items that participate in at least one contest but never appear in a
    /// winning set; their fitted strengths diverge to -infinity.
    pub never_winning_items: Vec<ItemId>,
}

/// Standard errors of the free parameters: square roots of the diagonal of
/// the inverse Fisher information.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardErrors {
    /// Per free (non-reference, non-fixed) item.
    pub strengths: BTreeMap<ItemId, f64>,
    /// Per stored tie order.
    pub tie_prevalence: BTreeMap<usize, f64>,
}

/// Everything [`fit`] produces: estimates, uncertainty, fit statistics, and
/// diagnostics.
#[derive(Debug, Clone)]
pub struct FitReport {
    /// Fitted parameters; the reference item's log-strength is exactly 0.
    pub params: ModelParams,
    pub std_errors: StandardErrors,
    /// Log-likelihood at the fitted parameters.
    pub loglik: f64,
    /// Multinomial deviance, -2 * loglik (each contest is one observed
    /// single-trial multinomial).
    pub deviance: f64,
    /// Pearson chi-squared over the expanded outcome rows.
    pub pearson_chi_sq: f64,
    /// Expanded rows minus contests minus free parameters. Rows whose tie
    /// order is structurally excluded (fitted probability exactly 0) do not
    /// count.
    pub residual_df: i64,
    /// Number of scoring updates applied.
    pub iterations: usize,
    /// Whether the score's infinity norm reached `tol`.
    pub converged: bool,
    pub connectivity: ConnectivityReport,
    pub sufficient_stats: SufficientStats,
    /// Log-likelihood after initialization and after each accepted update;
    /// non-decreasing up to the floating-point resolution of the
    /// log-likelihood (the step-halving line search accepts steps within
    /// rounding of no-change).
    pub loglik_trace: Vec<f64>,
}

/// Contests sharing a comparison set, collapsed to outcome counts over the
/// (shared) enumerated outcome space.
struct Group {
    space: Vec<WinningSet>,
    /// Observed multiplicity of each candidate outcome.
    counts: Vec<f64>,
    /// Number of contests in the group.
    total: f64,
    /// Sufficient statistic of each candidate under the active layout.
    stats: Vec<DVector<f64>>,
    /// Sum of counts-weighted statistics (the group's observed statistics).
    observed_stat: DVector<f64>,
}

fn group_contests(data: &Dataset, t_max: usize, layout: &ParamLayout) -> Vec<Group> {
    let mut index: HashMap<Vec<ItemId>, usize> = HashMap::new();
    let mut groups: Vec<Group> = Vec::new();
    for contest in data.contests() {
        let key = contest.items().to_vec();
        let gi = *index.entry(key).or_insert_with(|| {
            let space = outcomes::enumerate(contest, t_max);
            let stats: Vec<DVector<f64>> = space.iter().map(|s| layout.stat(s)).collect();
            groups.push(Group {
                counts: vec![0.0; space.len()],
                total: 0.0,
                observed_stat: DVector::zeros(layout.len()),
                space,
                stats,
            });
            groups.len() - 1
        });
        let group = &mut groups[gi];
        let oi = group
            .space
            .iter()
            .position(|s| s == contest.outcome())
            .expect("observed outcome is enumerated (order <= t_max)");
        group.counts[oi] += 1.0;
        group.total += 1.0;
    }
    // Assemble each group's observed statistic from the final counts (a
    // handful of products) rather than one contest at a time: with 10^4
    // replications the incremental sum accumulates enough rounding noise
    // to put the score's floor above a tight convergence tolerance.
    for group in &mut groups {
        for (o, &count) in group.counts.iter().enumerate() {
            if count > 0.0 {
                group.observed_stat += &group.stats[o] * count;
            }
        }
    }
    groups
}

fn group_log_weights(group: &Group, params: &ModelParams) -> Result<Vec<f64>> {
    group
        .space
        .iter()
        .map(|s| model::log_weight(s, params))
        .collect()
}

fn grouped_log_likelihood(groups: &[Group], params: &ModelParams) -> Result<f64> {
    let mut total = 0.0;
    for group in groups {
        let lw = group_log_weights(group, params)?;
        let lse = model::logsumexp(&lw);
        if !lse.is_finite() {
            return Err(Error::ZeroNormalizer);
        }
        for (o, &count) in group.counts.iter().enumerate() {
            if count > 0.0 {
                total += count * (lw[o] - lse);
            }
        }
    }
    Ok(total)
}

/// Score and Fisher information in one pass over the groups.
fn grouped_score_info(
    groups: &[Group],
    params: &ModelParams,
    k: usize,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let mut score = DVector::zeros(k);
    let mut info = DMatrix::zeros(k, k);
    for group in groups {
        let lw = group_log_weights(group, params)?;
        let lse = model::logsumexp(&lw);
        if !lse.is_finite() {
            return Err(Error::ZeroNormalizer);
        }
        let mut mean = DVector::zeros(k);
        let mut second = DMatrix::zeros(k, k);
        for (o, stat) in group.stats.iter().enumerate() {
            let p = (lw[o] - lse).exp();
            if p > 0.0 {
                mean += stat * p;
                second += stat * stat.transpose() * p;
            }
        }
        score += &group.observed_stat - &mean * group.total;
        info += (second - &mean * mean.transpose()) * group.total;
    }
    Ok((score, info))
}

fn singular_error(info: &DMatrix<f64>) -> Error {
    let eigen = SymmetricEigen::new(info.clone());
    let mut arg_min = 0;
    for (i, &v) in eigen.eigenvalues.iter().enumerate() {
        if v < eigen.eigenvalues[arg_min] {
            arg_min = i;
        }
    }
    let null_direction = eigen.eigenvectors.column(arg_min).iter().copied().collect();
    Error::SingularInformation { null_direction }
}

/// Cholesky factorization with an explicit rank guard: rounding can push an
/// exactly-singular matrix's zero pivot to a tiny positive value, so a
/// successful factorization whose pivot ratio is beyond ~1e7 (condition
/// number ~1e14) is still treated as singular.
fn checked_cholesky(info: &DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let chol = Cholesky::new(info.clone()).ok_or_else(|| singular_error(info))?;
    let diag = chol.l_dirty().diagonal();
    let max = diag.max();
    let min = diag.min();
    // Negated so that a NaN pivot fails the guard rather than passing it.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(min > max * 1e-7) {
        return Err(singular_error(info));
    }
    Ok(chol)
}

/// Fits the model to a dataset by Fisher scoring with step halving.
///
/// Starts from all-zero parameters (equal strengths, unit tie prevalences
/// for every observed tie order), iterates `theta <- theta + eta * I^-1 *
/// score` halving `eta` until the log-likelihood does not decrease, and
/// stops when the score's infinity norm falls below `config.tol`. The
/// returned report carries `converged = false` (not an error) when the
/// iteration budget runs out; singular information is an error, with the
/// null direction attached for diagnosis.
pub fn fit(data: &Dataset, config: &FitConfig) -> Result<FitReport> {
    if data.n_contests() == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut params = ModelParams::neutral_for(data, config.reference_item)?;
    let layout = if config.fixed_strengths {
        ParamLayout::ties_only(&params)
    } else {
        ParamLayout::default_for(&params)
    };
    let k = layout.len();
    let groups = group_contests(data, params.t_max(), &layout);

    let mut trace = vec![grouped_log_likelihood(&groups, &params)?];
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let (score, info) = grouped_score_info(&groups, &params, k)?;
        if k == 0 || score.amax() <= config.tol {
            converged = true;
            break;
        }
        if iterations >= config.max_iter {
            break;
        }
        let chol = checked_cholesky(&info)?;
        let direction = chol.solve(&score);
        let theta = layout.extract(&params);
        let current = *trace.last().expect("trace is seeded");
        // Near the optimum a genuine Newton improvement can be smaller
        // than the resolution of the log-likelihood itself; rejecting such
        // steps would strand the iterate with the score still above a
        // tight tolerance. Accept anything within rounding of no-change.
        let resolution = 4.0 * f64::EPSILON * (1.0 + current.abs());
        let mut eta = 1.0;
        let mut accepted = false;
        for _ in 0..=config.step_halving_max {
            let candidate = &theta + &direction * eta;
            let mut candidate_params = params.clone();
            layout.apply(&mut candidate_params, &candidate);
            let ll = grouped_log_likelihood(&groups, &candidate_params)?;
            if ll >= current - resolution {
                params = candidate_params;
                trace.push(ll);
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            // No ascent at any step length: numerically stuck short of tol.
            break;
        }
        iterations += 1;
    }

    params.normalize_to_reference();
    let loglik = *trace.last().expect("trace is seeded");
    let std_errors = standard_errors_for_layout(&groups, &params, &layout)?;
    let (pearson_chi_sq, supported_rows) = pearson_statistic(&groups, &params)?;
    let residual_df = supported_rows as i64 - data.n_contests() as i64 - k as i64;

    Ok(FitReport {
        std_errors,
        loglik,
        deviance: -2.0 * loglik,
        pearson_chi_sq,
        residual_df,
        iterations,
        converged,
        connectivity: check_connectivity(data),
        sufficient_stats: model::sufficient_statistics(data),
        loglik_trace: trace,
        params,
    })
}

/// Pearson chi-squared over the expanded rows, plus the number of rows with
/// nonzero fitted probability (candidates whose tie order the model
/// supports). Structurally excluded rows contribute nothing to either.
fn pearson_statistic(groups: &[Group], params: &ModelParams) -> Result<(f64, u64)> {
    let mut chi_sq = 0.0;
    let mut rows = 0u64;
    for group in groups {
        let lw = group_log_weights(group, params)?;
        let lse = model::logsumexp(&lw);
        if !lse.is_finite() {
            return Err(Error::ZeroNormalizer);
        }
        for (o, &count) in group.counts.iter().enumerate() {
            let p = (lw[o] - lse).exp();
            if p > 0.0 {
                rows += group.total as u64;
                // Sum over the group's contests of (y - p)^2 / p with y in
                // {0,1}: `count` ones and `total - count` zeroes.
                chi_sq += count * (1.0 - p) * (1.0 - p) / p + (group.total - count) * p;
            } else if count > 0.0 {
                return Err(Error::OutcomeOutsideSpace {
                    order: group.space[o].order(),
                    t_max: params.t_max(),
                });
            }
        }
    }
    Ok((chi_sq, rows))
}

fn standard_errors_for_layout(
    groups: &[Group],
    params: &ModelParams,
    layout: &ParamLayout,
) -> Result<StandardErrors> {
    let k = layout.len();
    let (_, info) = grouped_score_info(groups, params, k)?;
    let mut strengths = BTreeMap::new();
    let mut tie_prevalence = BTreeMap::new();
    if k > 0 {
        let cov = checked_cholesky(&info)?.inverse();
        for (j, &item) in layout.free_items.iter().enumerate() {
            strengths.insert(item, cov[(j, j)].sqrt());
        }
        for (j, &order) in layout.free_orders.iter().enumerate() {
            let jj = layout.free_items.len() + j;
            tie_prevalence.insert(order, cov[(jj, jj)].sqrt());
        }
    }
    Ok(StandardErrors {
        strengths,
        tie_prevalence,
    })
}

/// Standard errors at arbitrary parameters (usually the MLE) under the
/// default layout: every non-reference item free, every stored order free.
///
/// Errors with the information matrix's null direction when it is singular.
pub fn standard_errors(data: &Dataset, params: &ModelParams) -> Result<StandardErrors> {
    let layout = ParamLayout::default_for(params);
    let groups = group_contests(data, params.t_max(), &layout);
    standard_errors_for_layout(&groups, params, &layout)
}

/// Builds the win/tie digraph and reports its strong connectivity.
///
/// Edges: i -> j whenever some contest has i in the winning set and j
/// compared but not winning; co-tied winners get edges both ways. Ford's
/// conditions tie strong connectivity of this graph to existence and
/// finiteness of the maximum-likelihood estimate.
pub fn check_connectivity(data: &Dataset) -> ConnectivityReport {
    let n = data.universe().len();
    let mut graph: DiGraph<(), ()> = DiGraph::new();
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    let mut participates = vec![false; n];
    let mut wins = vec![false; n];
    for contest in data.contests() {
        let winners = contest.outcome().members();
        for &w in winners {
            wins[w.0] = true;
        }
        for &i in contest.items() {
            participates[i.0] = true;
            let i_won = contest.outcome().contains(i);
            for &w in winners {
                if w == i {
                    continue;
                }
                // winner -> non-winner, and both directions within a tie
                graph.update_edge(nodes[w.0], nodes[i.0], ());
                if i_won {
                    graph.update_edge(nodes[i.0], nodes[w.0], ());
                }
            }
        }
    }
    let mut components: Vec<Vec<ItemId>> = tarjan_scc(&graph)
        .into_iter()
        .map(|comp| {
            let mut items: Vec<ItemId> = comp.into_iter().map(|ix| ItemId(ix.index())).collect();
            items.sort();
            items
        })
        .collect();
    components.sort_by_key(|comp| comp[0]);
    let never_winning_items = (0..n)
        .map(ItemId)
        .filter(|i| participates[i.0] && !wins[i.0])
        .collect();
    ConnectivityReport {
        strongly_connected: components.len() == 1,
        components,
        never_winning_items,
    }
}

/// Expected shared points per item under the given parameters: each contest
/// awards `points_per_contest`, split evenly among the members of the
/// winning set. Returned in universe order; sums to `points_per_contest`
/// times the number of contests.
pub fn expected_points(
    data: &Dataset,
    params: &ModelParams,
    points_per_contest: f64,
) -> Result<Vec<f64>> {
    let mut points = vec![0.0; data.universe().len()];
    for contest in data.contests() {
        let space = outcomes::enumerate(contest, params.t_max());
        let dist = model::outcome_distribution(contest, &space, params)?;
        for (set, p) in dist.outcomes() {
            let share = points_per_contest / set.order() as f64;
            for &m in set.members() {
                points[m.0] += p * share;
            }
        }
    }
    Ok(points)
}

/// Observed shared points per item: `points_per_contest` split evenly among
/// the observed winning set of each contest. In universe order.
pub fn observed_points(data: &Dataset, points_per_contest: f64) -> Vec<f64> {
    model::sufficient_statistics(data)
        .item_scores
        .iter()
        .map(|s| s * points_per_contest)
        .collect()
}

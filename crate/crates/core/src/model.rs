//! Core probability engine for choices among r items with ties.
//!
//! A contest presents a comparison set S of r items; the observed outcome is
//! a non-empty winning subset T of S, where |T| = 1 is an outright win and
//! |T| = t >= 2 is a t-way tie. The weight of outcome T is
//!
//! ```text
//! p_T = delta_t * (prod_{i in T} alpha_i)^(1/t)
//! ```
//!
//! with delta_1 = 1, and probabilities are the weights normalized over all
//! admitted subsets of S. Everything here works on the log scale
//! (lambda_i = log alpha_i, gamma_t = log delta_t) so positivity is
//! structural, with log-sum-exp normalization.
//!
//! All reductions over contests run in dataset order, over outcome spaces in
//! enumeration order, and over items in universe order, so results are
//! reproducible bit for bit from run to run.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::outcomes;

/// Upper bound on comparison-set size; keeps the enumerated outcome space
/// from growing combinatorially out of hand.
pub const MAX_COMPARISON_ITEMS: usize = 20;

/// Dense index of an item within a [`Universe`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(pub usize);

/// The item universe of a dataset: labels in declaration order plus the
/// reverse lookup. Declaration order is the column order of the wide table
/// format and decides the default reference item (the last one).
#[derive(Debug, Clone)]
pub struct Universe {
    labels: Vec<String>,
    by_label: HashMap<String, ItemId>,
}

impl Universe {
    pub fn from_labels<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out = Universe {
            labels: Vec::new(),
            by_label: HashMap::new(),
        };
        for label in labels {
            let label = label.into();
            validate_label(&label)?;
            if out.by_label.contains_key(&label) {
                return Err(Error::DuplicateItem(label));
            }
            out.by_label.insert(label.clone(), ItemId(out.labels.len()));
            out.labels.push(label);
        }
        Ok(out)
    }

    pub fn id(&self, label: &str) -> Option<ItemId> {
        self.by_label.get(label).copied()
    }

    pub fn require(&self, label: &str) -> Result<ItemId> {
        self.id(label)
            .ok_or_else(|| Error::UnknownItem(label.to_string()))
    }

    pub fn label(&self, item: ItemId) -> &str {
        &self.labels[item.0]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ItemId> + '_ {
        (0..self.labels.len()).map(ItemId)
    }

    /// Sorts item ids lexicographically by their labels (byte order).
    pub fn sort_by_label(&self, items: &mut [ItemId]) {
        items.sort_by(|a, b| self.label(*a).cmp(self.label(*b)));
    }
}

fn validate_label(label: &str) -> Result<()> {
    if label.is_empty() {
        return Err(Error::InvalidLabel {
            label: label.to_string(),
            reason: "empty label",
        });
    }
    if label.eq_ignore_ascii_case("na") {
        return Err(Error::InvalidLabel {
            label: label.to_string(),
            reason: "`NA` is reserved for non-participation in the wide table format",
        });
    }
    if label.contains('=') || label.contains(',') {
        return Err(Error::InvalidLabel {
            label: label.to_string(),
            reason: "labels may not contain `=` or `,`",
        });
    }
    Ok(())
}

/// A candidate or observed winning subset. Members are kept sorted by label
/// so equal sets compare equal and printed labels are deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WinningSet {
    members: Vec<ItemId>,
}

impl WinningSet {
    pub fn new(universe: &Universe, members: &[ItemId]) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyWinningSet);
        }
        let mut sorted = members.to_vec();
        for &m in &sorted {
            if m.0 >= universe.len() {
                return Err(Error::ItemOutOfRange(m.0));
            }
        }
        universe.sort_by_label(&mut sorted);
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::DuplicateItem(universe.label(pair[0]).to_string()));
            }
        }
        Ok(WinningSet { members: sorted })
    }

    /// Members already sorted by label; used by the enumerator.
    pub(crate) fn from_sorted(members: Vec<ItemId>) -> Self {
        debug_assert!(!members.is_empty());
        WinningSet { members }
    }

    pub fn members(&self) -> &[ItemId] {
        &self.members
    }

    /// Tie order t = |T|.
    pub fn order(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.members.contains(&item)
    }

    /// Members joined by `=`, e.g. `A=B=C`.
    pub fn label(&self, universe: &Universe) -> String {
        let parts: Vec<&str> = self.members.iter().map(|&m| universe.label(m)).collect();
        parts.join("=")
    }
}

/// One comparison: the set of items compared and the observed winning subset.
#[derive(Debug, Clone, PartialEq)]
pub struct Contest {
    items: Vec<ItemId>,
    outcome: WinningSet,
}

impl Contest {
    pub fn new(universe: &Universe, items: &[ItemId], winners: &[ItemId]) -> Result<Self> {
        if items.len() < 2 {
            return Err(Error::ComparisonTooSmall(items.len()));
        }
        if items.len() > MAX_COMPARISON_ITEMS {
            return Err(Error::ComparisonTooLarge(items.len()));
        }
        let mut sorted = items.to_vec();
        for &i in &sorted {
            if i.0 >= universe.len() {
                return Err(Error::ItemOutOfRange(i.0));
            }
        }
        universe.sort_by_label(&mut sorted);
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::DuplicateItem(universe.label(pair[0]).to_string()));
            }
        }
        let outcome = WinningSet::new(universe, winners)?;
        for m in outcome.members() {
            if !sorted.contains(m) {
                return Err(Error::WinnerOutsideComparison(
                    universe.label(*m).to_string(),
                ));
            }
        }
        Ok(Contest {
            items: sorted,
            outcome,
        })
    }

    /// Comparison set, sorted by label.
    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn outcome(&self) -> &WinningSet {
        &self.outcome
    }

    /// Number of items compared (r).
    pub fn size(&self) -> usize {
        self.items.len()
    }
}

/// An ordered collection of contests over a shared item universe.
#[derive(Debug, Clone)]
pub struct Dataset {
    universe: Universe,
    contests: Vec<Contest>,
}

impl Dataset {
    pub fn new(universe: Universe, contests: Vec<Contest>) -> Result<Self> {
        for contest in &contests {
            for &i in contest.items() {
                if i.0 >= universe.len() {
                    return Err(Error::ItemOutOfRange(i.0));
                }
            }
        }
        Ok(Dataset { universe, contests })
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn contests(&self) -> &[Contest] {
        &self.contests
    }

    pub fn n_contests(&self) -> usize {
        self.contests.len()
    }

    /// Distinct tie orders (>= 2) observed among the outcomes.
    pub fn observed_tie_orders(&self) -> BTreeSet<usize> {
        self.contests
            .iter()
            .map(|c| c.outcome().order())
            .filter(|&t| t >= 2)
            .collect()
    }

    /// Largest observed outcome order; 1 when no outcome is a tie.
    pub fn max_observed_tie_order(&self) -> usize {
        self.contests
            .iter()
            .map(|c| c.outcome().order())
            .max()
            .unwrap_or(1)
    }
}

/// Model parameters on the log scale: per-item log-strengths lambda_i and
/// per-order log tie-prevalences gamma_t for the stored orders.
///
/// Tie orders that are not stored are structurally excluded: delta_t = 0, so
/// any outcome of that order has probability exactly zero. gamma_1 is not
/// stored; delta_1 is identically 1.
///
/// The reference item anchors the fit (its lambda is held at 0 during
/// estimation, since only relative strengths are identified). Parameter sets
/// built by hand may carry any log-strengths; estimation output always has
/// `log_strength(reference) == 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    log_strengths: Vec<f64>,
    log_tie: BTreeMap<usize, f64>,
    reference: ItemId,
    t_max: usize,
}

impl ModelParams {
    /// Parameters with all log-strengths zero and the given log
    /// tie-prevalences. `t_max` is the largest stored order, or 1 when no
    /// tie order is stored.
    pub fn new(n_items: usize, reference: ItemId, log_tie: BTreeMap<usize, f64>) -> Result<Self> {
        if reference.0 >= n_items {
            return Err(Error::ItemOutOfRange(reference.0));
        }
        if let Some(&t) = log_tie.keys().next() {
            if t < 2 {
                return Err(Error::InvalidTieOrder(t));
            }
        }
        let t_max = log_tie.keys().next_back().copied().unwrap_or(1);
        Ok(ModelParams {
            log_strengths: vec![0.0; n_items],
            log_tie,
            reference,
            t_max,
        })
    }

    /// Neutral starting point for a dataset: all strengths equal, gamma = 0
    /// for every observed tie order, reference defaulting to the last item
    /// in universe order.
    pub fn neutral_for(data: &Dataset, reference: Option<ItemId>) -> Result<Self> {
        let n = data.universe().len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let reference = reference.unwrap_or(ItemId(n - 1));
        let log_tie = data
            .observed_tie_orders()
            .into_iter()
            .map(|t| (t, 0.0))
            .collect();
        ModelParams::new(n, reference, log_tie)
    }

    pub fn n_items(&self) -> usize {
        self.log_strengths.len()
    }

    pub fn reference(&self) -> ItemId {
        self.reference
    }

    /// Maximum admitted tie order.
    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn log_strength(&self, item: ItemId) -> f64 {
        self.log_strengths[item.0]
    }

    pub fn log_strengths(&self) -> &[f64] {
        &self.log_strengths
    }

    pub fn set_log_strength(&mut self, item: ItemId, value: f64) -> Result<()> {
        if item.0 >= self.log_strengths.len() {
            return Err(Error::ItemOutOfRange(item.0));
        }
        self.log_strengths[item.0] = value;
        Ok(())
    }

    /// gamma_t for a stored order; `None` when the order is structurally
    /// excluded.
    pub fn log_tie(&self, order: usize) -> Option<f64> {
        self.log_tie.get(&order).copied()
    }

    pub fn set_log_tie(&mut self, order: usize, value: f64) -> Result<()> {
        match self.log_tie.get_mut(&order) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(Error::InvalidTieOrder(order)),
        }
    }

    /// Stored tie orders, ascending.
    pub fn stored_orders(&self) -> impl Iterator<Item = usize> + '_ {
        self.log_tie.keys().copied()
    }

    /// Shifts every log-strength so the reference item sits exactly at 0.
    /// Outcome probabilities are unchanged (strengths only matter through
    /// their relative values).
    pub fn normalize_to_reference(&mut self) {
        let shift = self.log_strengths[self.reference.0];
        for v in &mut self.log_strengths {
            *v -= shift;
        }
        self.log_strengths[self.reference.0] = 0.0;
    }
}

/// Per-contest outcome probabilities over an enumerated outcome space.
///
/// Probabilities are positive and sum to 1, except that outcomes whose tie
/// order is structurally excluded carry probability exactly 0.
#[derive(Debug, Clone)]
pub struct OutcomeDistribution {
    items: Vec<ItemId>,
    outcomes: Vec<(WinningSet, f64)>,
    log_normalizer: f64,
}

impl OutcomeDistribution {
    /// The contest's comparison set.
    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    /// Candidate sets with their probabilities, in enumeration order.
    pub fn outcomes(&self) -> &[(WinningSet, f64)] {
        &self.outcomes
    }

    pub fn prob_of(&self, set: &WinningSet) -> Option<f64> {
        self.outcomes
            .iter()
            .find(|(s, _)| s == set)
            .map(|(_, p)| *p)
    }

    /// log of the pre-normalization weight sum.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }
}

/// log p_T = gamma_t + (1/t) * sum_{i in T} lambda_i, with gamma_1 = 0.
///
/// Returns negative infinity when order t is admitted (t <= t_max) but has
/// no stored tie-prevalence: delta_t = 0 there, exactly.
pub fn log_weight(set: &WinningSet, params: &ModelParams) -> Result<f64> {
    let t = set.order();
    if t > params.t_max() {
        return Err(Error::TieOrderExceedsMax {
            order: t,
            t_max: params.t_max(),
        });
    }
    let mut sum = 0.0;
    for &m in set.members() {
        if m.0 >= params.n_items() {
            return Err(Error::ItemOutOfRange(m.0));
        }
        sum += params.log_strength(m);
    }
    let gamma = if t == 1 {
        0.0
    } else {
        params.log_tie(t).unwrap_or(f64::NEG_INFINITY)
    };
    Ok(gamma + sum / t as f64)
}

/// Stable log(sum(exp(xs))). Entries of negative infinity contribute zero.
pub(crate) fn logsumexp(xs: &[f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for &x in xs {
        if x > max {
            max = x;
        }
    }
    if !max.is_finite() {
        return max;
    }
    let mut sum = 0.0;
    for &x in xs {
        sum += (x - max).exp();
    }
    max + sum.ln()
}

/// Normalizes log-weights over the supplied outcome space.
///
/// `space` must be the enumeration produced by
/// [`outcomes::enumerate`](crate::outcomes::enumerate) for this contest.
pub fn outcome_distribution(
    contest: &Contest,
    space: &[WinningSet],
    params: &ModelParams,
) -> Result<OutcomeDistribution> {
    distribution_over(contest.items(), space, params)
}

/// As [`outcome_distribution`] but identified by the comparison set alone;
/// used for prediction where no outcome has been observed.
pub fn distribution_over(
    items: &[ItemId],
    space: &[WinningSet],
    params: &ModelParams,
) -> Result<OutcomeDistribution> {
    if space.is_empty() {
        return Err(Error::EmptyOutcomeSpace);
    }
    let mut log_weights = Vec::with_capacity(space.len());
    for set in space {
        log_weights.push(log_weight(set, params)?);
    }
    let log_normalizer = logsumexp(&log_weights);
    if !log_normalizer.is_finite() {
        return Err(Error::ZeroNormalizer);
    }
    let outcomes = space
        .iter()
        .zip(&log_weights)
        .map(|(set, &lw)| (set.clone(), (lw - log_normalizer).exp()))
        .collect();
    Ok(OutcomeDistribution {
        items: items.to_vec(),
        outcomes,
        log_normalizer,
    })
}

/// The three-outcome pair model: probabilities for (i wins, j wins, tie)
/// proportional to alpha_i, alpha_j, delta * sqrt(alpha_i * alpha_j).
///
/// A convenience special case of [`outcome_distribution`] with r = 2, which
/// it calls, so the two agree exactly.
// Validation comparisons are negated so that NaN arguments fail them.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn davidson_pair_distribution(
    alpha_i: f64,
    alpha_j: f64,
    delta: f64,
) -> Result<(f64, f64, f64)> {
    if !(alpha_i > 0.0) {
        return Err(Error::NonPositiveStrength(alpha_i));
    }
    if !(alpha_j > 0.0) {
        return Err(Error::NonPositiveStrength(alpha_j));
    }
    if !(delta >= 0.0) {
        return Err(Error::NegativeTiePrevalence(delta));
    }
    let universe = Universe::from_labels(["i", "j"])?;
    let (first, second) = (ItemId(0), ItemId(1));
    let mut log_tie = BTreeMap::new();
    if delta > 0.0 {
        log_tie.insert(2, delta.ln());
    }
    let mut params = ModelParams::new(2, second, log_tie)?;
    params.set_log_strength(first, alpha_i.ln())?;
    params.set_log_strength(second, alpha_j.ln())?;
    let contest = Contest::new(&universe, &[first, second], &[first])?;
    let space = outcomes::enumerate(&contest, params.t_max());
    let dist = outcome_distribution(&contest, &space, &params)?;
    let p = dist.outcomes();
    let p_i = p[0].1;
    let p_j = p[1].1;
    let p_tie = p.get(2).map(|(_, q)| *q).unwrap_or(0.0);
    Ok((p_i, p_j, p_tie))
}

fn contest_log_prob(contest: &Contest, params: &ModelParams) -> Result<f64> {
    let observed = contest.outcome();
    if observed.order() > params.t_max() {
        return Err(Error::OutcomeOutsideSpace {
            order: observed.order(),
            t_max: params.t_max(),
        });
    }
    let space = outcomes::enumerate(contest, params.t_max());
    let mut log_weights = Vec::with_capacity(space.len());
    let mut observed_lw = None;
    for set in &space {
        let lw = log_weight(set, params)?;
        if set == observed {
            observed_lw = Some(lw);
        }
        log_weights.push(lw);
    }
    let observed_lw = observed_lw.ok_or(Error::OutcomeOutsideSpace {
        order: observed.order(),
        t_max: params.t_max(),
    })?;
    Ok(observed_lw - logsumexp(&log_weights))
}

/// Sum over contests of the log-probability of the observed outcome.
/// Empty datasets give 0. An observed outcome whose tie order is admitted
/// but structurally excluded gives negative infinity.
pub fn log_likelihood(data: &Dataset, params: &ModelParams) -> Result<f64> {
    let mut total = 0.0;
    for contest in data.contests() {
        total += contest_log_prob(contest, params)?;
    }
    Ok(total)
}

/// Which coordinates are free during estimation: non-reference items in
/// universe order, then stored tie orders ascending.
#[derive(Debug, Clone)]
pub(crate) struct ParamLayout {
    pub free_items: Vec<ItemId>,
    pub free_orders: Vec<usize>,
}

impl ParamLayout {
    pub fn default_for(params: &ModelParams) -> Self {
        let free_items = (0..params.n_items())
            .map(ItemId)
            .filter(|&i| i != params.reference())
            .collect();
        ParamLayout {
            free_items,
            free_orders: params.stored_orders().collect(),
        }
    }

    pub fn ties_only(params: &ModelParams) -> Self {
        ParamLayout {
            free_items: Vec::new(),
            free_orders: params.stored_orders().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.free_items.len() + self.free_orders.len()
    }

    /// Sufficient-statistic vector of a winning set: share 1/t for each free
    /// member, then tie-order indicators.
    pub fn stat(&self, set: &WinningSet) -> DVector<f64> {
        let mut out = DVector::zeros(self.len());
        let t = set.order();
        let share = 1.0 / t as f64;
        for (k, &item) in self.free_items.iter().enumerate() {
            if set.contains(item) {
                out[k] = share;
            }
        }
        for (k, &order) in self.free_orders.iter().enumerate() {
            if t == order {
                out[self.free_items.len() + k] = 1.0;
            }
        }
        out
    }

    pub fn extract(&self, params: &ModelParams) -> DVector<f64> {
        let mut theta = DVector::zeros(self.len());
        for (k, &item) in self.free_items.iter().enumerate() {
            theta[k] = params.log_strength(item);
        }
        for (k, &order) in self.free_orders.iter().enumerate() {
            theta[self.free_items.len() + k] = params.log_tie(order).unwrap_or(0.0);
        }
        theta
    }

    pub fn apply(&self, params: &mut ModelParams, theta: &DVector<f64>) {
        for (k, &item) in self.free_items.iter().enumerate() {
            params
                .set_log_strength(item, theta[k])
                .expect("item in layout");
        }
        for (k, &order) in self.free_orders.iter().enumerate() {
            params
                .set_log_tie(order, theta[self.free_items.len() + k])
                .expect("order in layout");
        }
    }
}

pub(crate) fn score_for_layout(
    data: &Dataset,
    params: &ModelParams,
    layout: &ParamLayout,
) -> Result<DVector<f64>> {
    let mut grad = DVector::zeros(layout.len());
    for contest in data.contests() {
        let space = outcomes::enumerate(contest, params.t_max());
        let dist = outcome_distribution(contest, &space, params)?;
        let observed = contest.outcome();
        if dist.prob_of(observed).is_none() {
            return Err(Error::OutcomeOutsideSpace {
                order: observed.order(),
                t_max: params.t_max(),
            });
        }
        grad += layout.stat(observed);
        for (set, p) in dist.outcomes() {
            grad -= layout.stat(set) * *p;
        }
    }
    Ok(grad)
}

pub(crate) fn information_for_layout(
    data: &Dataset,
    params: &ModelParams,
    layout: &ParamLayout,
) -> Result<DMatrix<f64>> {
    let k = layout.len();
    let mut info = DMatrix::zeros(k, k);
    for contest in data.contests() {
        let space = outcomes::enumerate(contest, params.t_max());
        let dist = outcome_distribution(contest, &space, params)?;
        let mut mean = DVector::zeros(k);
        let mut second = DMatrix::zeros(k, k);
        for (set, p) in dist.outcomes() {
            let s = layout.stat(set);
            mean += &s * *p;
            second += &s * s.transpose() * *p;
        }
        info += second - &mean * mean.transpose();
    }
    Ok(info)
}

/// Gradient of the log-likelihood over the free parameters: observed minus
/// expected sufficient statistics. Coordinates are the non-reference items
/// in universe order followed by the stored tie orders ascending.
pub fn score(data: &Dataset, params: &ModelParams) -> Result<DVector<f64>> {
    score_for_layout(data, params, &ParamLayout::default_for(params))
}

/// Fisher information over the free parameters: the summed per-contest
/// covariance of the sufficient statistics. Same coordinate order as
/// [`score`].
pub fn fisher_information(data: &Dataset, params: &ModelParams) -> Result<DMatrix<f64>> {
    information_for_layout(data, params, &ParamLayout::default_for(params))
}

/// Observed sufficient statistics of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    /// Per item, in universe order: outright wins plus 1/t of each t-way
    /// tied win. Sums to the number of contests.
    pub item_scores: Vec<f64>,
    /// Number of observed ties of each order >= 2.
    pub tie_counts: BTreeMap<usize, u64>,
}

pub fn sufficient_statistics(data: &Dataset) -> SufficientStats {
    let mut item_scores = vec![0.0; data.universe().len()];
    let mut tie_counts = BTreeMap::new();
    for contest in data.contests() {
        let outcome = contest.outcome();
        let t = outcome.order();
        let share = 1.0 / t as f64;
        for &m in outcome.members() {
            item_scores[m.0] += share;
        }
        if t >= 2 {
            *tie_counts.entry(t).or_insert(0) += 1;
        }
    }
    SufficientStats {
        item_scores,
        tie_counts,
    }
}

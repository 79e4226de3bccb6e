//! Rankings with ties, decomposed into sequences of contests.
//!
//! A ranking orders disjoint groups of items best-first; items inside a
//! group are tied at that rank. Stage j of the decomposition is a contest
//! whose comparison set is everything not yet ranked and whose outcome is
//! the j-th group — so ranking likelihoods are ordinary dataset likelihoods
//! and ranking data feeds [`estimation::fit`](crate::estimation::fit)
//! unchanged.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{Contest, Dataset, ItemId, Universe};

/// An ordered partition of (part of) an item pool: `groups[0]` beats
/// `groups[1]` beats ... Items in the same group are tied.
///
/// The pool may be larger than the union of the groups: trailing unranked
/// items are treated as censored (the chain of choices simply stops after
/// the last explicit group).
#[derive(Debug, Clone, PartialEq)]
pub struct TiedRanking {
    pool: Vec<ItemId>,
    groups: Vec<Vec<ItemId>>,
}

impl TiedRanking {
    /// Builds and validates a ranking of `groups` over `pool`. Groups must
    /// be non-empty, pairwise disjoint, and drawn from the pool.
    pub fn new(universe: &Universe, pool: &[ItemId], groups: &[Vec<ItemId>]) -> Result<Self> {
        let mut sorted_pool = pool.to_vec();
        for &i in &sorted_pool {
            if i.0 >= universe.len() {
                return Err(Error::ItemOutOfRange(i.0));
            }
        }
        universe.sort_by_label(&mut sorted_pool);
        for pair in sorted_pool.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::DuplicateItem(universe.label(pair[0]).to_string()));
            }
        }
        if groups.is_empty() {
            return Err(Error::EmptyRankingGroup);
        }
        let pool_set: BTreeSet<ItemId> = sorted_pool.iter().copied().collect();
        let mut seen: BTreeSet<ItemId> = BTreeSet::new();
        let mut sorted_groups = Vec::with_capacity(groups.len());
        for group in groups {
            if group.is_empty() {
                return Err(Error::EmptyRankingGroup);
            }
            let mut sorted_group = group.clone();
            universe.sort_by_label(&mut sorted_group);
            for &member in &sorted_group {
                if !pool_set.contains(&member) {
                    return Err(Error::RankedItemOutsidePool(
                        universe.label(member).to_string(),
                    ));
                }
                if !seen.insert(member) {
                    return Err(Error::OverlappingRankingGroups(
                        universe.label(member).to_string(),
                    ));
                }
            }
            sorted_groups.push(sorted_group);
        }
        Ok(TiedRanking {
            pool: sorted_pool,
            groups: sorted_groups,
        })
    }

    /// A complete ranking: the pool is exactly the union of the groups.
    pub fn complete(universe: &Universe, groups: &[Vec<ItemId>]) -> Result<Self> {
        // Deduplicate the derived pool so an item repeated across groups is
        // reported as an overlap, not as a malformed pool.
        let pool: Vec<ItemId> = groups
            .iter()
            .flatten()
            .copied()
            .collect::<BTreeSet<ItemId>>()
            .into_iter()
            .collect();
        TiedRanking::new(universe, &pool, groups)
    }

    /// Ranked universe of this ranking, sorted by label.
    pub fn pool(&self) -> &[ItemId] {
        &self.pool
    }

    /// Tie groups, best first; members sorted by label.
    pub fn groups(&self) -> &[Vec<ItemId>] {
        &self.groups
    }

    /// The sequence of contests this ranking is equivalent to: at each
    /// stage the not-yet-ranked items compete and the stage's group wins.
    ///
    /// A final stage whose comparison set is a single item is dropped — a
    /// one-item "choice" carries probability 1 and is not a contest.
    pub fn decompose(&self, universe: &Universe) -> Result<Vec<Contest>> {
        let mut remaining = self.pool.clone();
        let mut contests = Vec::new();
        for group in &self.groups {
            if remaining.len() == 1 {
                // Sole remaining item ranks itself; nothing to model.
                debug_assert_eq!(group, &remaining);
                break;
            }
            contests.push(Contest::new(universe, &remaining, group)?);
            remaining.retain(|i| !group.contains(i));
        }
        Ok(contests)
    }
}

/// Decomposes every ranking and concatenates the stages, in ranking order
/// then stage order, into one dataset over the given universe.
pub fn rankings_to_dataset(universe: &Universe, rankings: &[TiedRanking]) -> Result<Dataset> {
    let mut contests = Vec::new();
    for ranking in rankings {
        contests.extend(ranking.decompose(universe)?);
    }
    Dataset::new(universe.clone(), contests)
}

/// Joint log-likelihood of a collection of rankings: exactly the dataset
/// log-likelihood of their decomposed stages.
pub fn ranking_log_likelihood(
    universe: &Universe,
    rankings: &[TiedRanking],
    params: &crate::model::ModelParams,
) -> Result<f64> {
    let data = rankings_to_dataset(universe, rankings)?;
    crate::model::log_likelihood(&data, params)
}

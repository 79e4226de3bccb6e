//! Enumeration of contest outcome spaces and the row-per-outcome expansion
//! used for fitting diagnostics.
//!
//! The outcome space of a contest with comparison set S is every non-empty
//! subset of S with at most `min(|S|, t_max)` members. Enumeration order is
//! fixed: by cardinality (singletons first), then lexicographically by item
//! label within a cardinality. All downstream reductions — normalizers,
//! expected statistics, sampling — walk this order.

use crate::model::{Contest, Dataset, ItemId, Universe, WinningSet};

/// All candidate winning sets for a comparison set, in enumeration order.
/// `items` must be sorted by label (as [`Contest::items`] guarantees).
pub fn enumerate_items(items: &[ItemId], t_max: usize) -> Vec<WinningSet> {
    let r = items.len();
    let cap = t_max.min(r);
    let mut space = Vec::new();
    for k in 1..=cap {
        push_combinations(items, k, &mut space);
    }
    space
}

/// Outcome space of a contest: [`enumerate_items`] over its comparison set.
pub fn enumerate(contest: &Contest, t_max: usize) -> Vec<WinningSet> {
    enumerate_items(contest.items(), t_max)
}

/// Appends all k-subsets of `items` in lexicographic index order. Since
/// `items` is label-sorted, index order is label order.
fn push_combinations(items: &[ItemId], k: usize, out: &mut Vec<WinningSet>) {
    let n = items.len();
    debug_assert!(k >= 1 && k <= n);
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(WinningSet::from_sorted(
            idx.iter().map(|&i| items[i]).collect(),
        ));
        // advance to the next combination, rightmost index first
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            if idx[pos] != pos + n - k {
                idx[pos] += 1;
                for j in pos + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
            if pos == 0 {
                return;
            }
        }
    }
}

/// One row of the expanded representation: a candidate outcome of one
/// contest, with a 0/1 count for whether it was the observed outcome.
///
/// A dataset expands to one block of rows per contest; each block is a
/// single-trial multinomial whose cell probabilities are the contest's
/// outcome distribution. This is the representation behind the deviance and
/// Pearson diagnostics and the expanded CSV export.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRow {
    /// 0-based index of the contest this row belongs to.
    pub contest_index: usize,
    /// The candidate winning set.
    pub set: WinningSet,
    /// 1 if this candidate was the observed outcome, else 0.
    pub count: u8,
}

impl OutcomeRow {
    /// Item's fractional share of this candidate: 1/t when the item is a
    /// member (t the candidate's order), else 0. These are the per-item
    /// columns of the expanded design.
    pub fn item_share(&self, item: ItemId) -> f64 {
        if self.set.contains(item) {
            1.0 / self.set.order() as f64
        } else {
            0.0
        }
    }

    /// 1 when this candidate is a tie of exactly the given order, else 0.
    pub fn tie_indicator(&self, order: usize) -> f64 {
        if self.set.order() == order {
            1.0
        } else {
            0.0
        }
    }

    /// Row label: 1-based contest index, colon, members joined by `=`
    /// (e.g. `1: B=C`).
    pub fn label(&self, universe: &Universe) -> String {
        format!("{}: {}", self.contest_index + 1, self.set.label(universe))
    }
}

/// Expands every contest of a dataset into its outcome-space rows, in
/// dataset order then enumeration order. `t_max` bounds the candidate tie
/// orders, exactly as in [`enumerate`].
pub fn expand_dataset(data: &Dataset, t_max: usize) -> Vec<OutcomeRow> {
    let mut rows = Vec::new();
    for (contest_index, contest) in data.contests().iter().enumerate() {
        for set in enumerate(contest, t_max) {
            let count = u8::from(&set == contest.outcome());
            rows.push(OutcomeRow {
                contest_index,
                set,
                count,
            });
        }
    }
    rows
}

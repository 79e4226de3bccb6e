//! Choice models for comparisons among r items where any subset may tie.
//!
//! Each contest presents a comparison set of items; the outcome is a
//! non-empty winning subset — a single winner or a tie of any order up to a
//! configured maximum. Outcome weights combine per-item strengths with
//! per-order tie prevalences; see [`model`] for the functional form.
//!
//! The crate covers the full workflow:
//!
//! * [`model`] — domain types and exact outcome probabilities, likelihood,
//!   score, and Fisher information, all on the log scale;
//! * [`outcomes`] — deterministic enumeration of outcome spaces and the
//!   row-per-outcome expansion;
//! * [`estimation`] — maximum-likelihood fitting by Fisher scoring, standard
//!   errors, goodness-of-fit diagnostics, and connectivity checks;
//! * [`rankings`] — tied rankings as sequences of contests;
//! * [`simulate`] — outcome sampling and tournament simulation;
//! * [`formats`] — the wide CSV table, contests JSON, rankings JSONL, and
//!   fit-report JSON formats shared with the command-line tool.
//!
//! Reduction order is fixed everywhere — contests in dataset order, outcomes
//! in enumeration order, items in universe order — so identical inputs give
//! bit-identical results.

pub mod cli;
pub mod error;
pub mod estimation;
pub mod formats;
pub mod model;
pub mod outcomes;
pub mod rankings;
pub mod simulate;

pub use error::{Error, Result};
pub use estimation::{
    check_connectivity, expected_points, fit, observed_points, standard_errors, ConnectivityReport,
    FitConfig, FitReport, StandardErrors,
};
pub use model::{
    davidson_pair_distribution, distribution_over, fisher_information, log_likelihood, log_weight,
    outcome_distribution, score, sufficient_statistics, Contest, Dataset, ItemId, ModelParams,
    OutcomeDistribution, SufficientStats, Universe, WinningSet, MAX_COMPARISON_ITEMS,
};
pub use outcomes::{enumerate, enumerate_items, expand_dataset, OutcomeRow};
pub use rankings::{ranking_log_likelihood, rankings_to_dataset, TiedRanking};
pub use simulate::{sample_outcome, simulate_tournament, Design, SimConfig, RNG_NAME};

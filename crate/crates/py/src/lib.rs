//! Python bindings for the davidson-luce library: load contest or ranking
//! data, fit the model by maximum likelihood, predict outcome
//! probabilities for a comparison set, and simulate round-robin
//! tournaments.
//!
//! Parameter dictionaries map item labels to log-strengths and tie orders
//! to log tie-prevalences, matching the CLI's JSON report schema. Where a
//! universe is built from a dictionary, items are ordered by label and the
//! last one is the reference.

use std::collections::BTreeMap;

use davidson_luce as dl;
use davidson_luce::formats;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(err: dl::Error) -> PyErr {
    PyValueError::new_err(err.to_string())
}

/// Builds a universe (labels in sorted order) and parameters from the
/// dictionary form used throughout these bindings.
fn params_from_dicts(
    strengths: &BTreeMap<String, f64>,
    tie_prevalence: &BTreeMap<usize, f64>,
) -> PyResult<(dl::Universe, dl::ModelParams)> {
    if strengths.is_empty() {
        return Err(PyValueError::new_err("strengths dictionary is empty"));
    }
    let universe = dl::Universe::from_labels(strengths.keys().cloned()).map_err(value_error)?;
    let reference = dl::ItemId(universe.len() - 1);
    let mut params = dl::ModelParams::new(universe.len(), reference, tie_prevalence.clone())
        .map_err(value_error)?;
    for (label, &value) in strengths {
        let id = universe.require(label).map_err(value_error)?;
        params.set_log_strength(id, value).map_err(value_error)?;
    }
    Ok((universe, params))
}

/// A set of contests over a common universe of items.
#[pyclass]
struct Dataset {
    inner: dl::Dataset,
}

#[pymethods]
impl Dataset {
    /// Parses the wide CSV table format: a header row of item labels, one
    /// row per contest, cells NA (not compared), 0 (compared), or 1 (in
    /// the winning set).
    #[staticmethod]
    fn from_wide_csv(text: &str) -> PyResult<Self> {
        let inner = formats::read_wide_csv(text.as_bytes()).map_err(value_error)?;
        Ok(Dataset { inner })
    }

    /// Builds a dataset from (items, winners) label pairs; the universe is
    /// the items in order of first appearance.
    #[staticmethod]
    fn from_contests(contests: Vec<(Vec<String>, Vec<String>)>) -> PyResult<Self> {
        let mut labels: Vec<String> = Vec::new();
        for (items, _) in &contests {
            for label in items {
                if !labels.contains(label) {
                    labels.push(label.clone());
                }
            }
        }
        let universe = dl::Universe::from_labels(labels).map_err(value_error)?;
        let mut built = Vec::with_capacity(contests.len());
        for (items, winners) in &contests {
            let items: Vec<dl::ItemId> = items
                .iter()
                .map(|l| universe.require(l))
                .collect::<Result<_, _>>()
                .map_err(value_error)?;
            let winners: Vec<dl::ItemId> = winners
                .iter()
                .map(|l| universe.require(l))
                .collect::<Result<_, _>>()
                .map_err(value_error)?;
            built.push(dl::Contest::new(&universe, &items, &winners).map_err(value_error)?);
        }
        let inner = dl::Dataset::new(universe, built).map_err(value_error)?;
        Ok(Dataset { inner })
    }

    /// Builds a dataset from ranking decompositions: each ranking is a
    /// list of tied groups of labels, best first.
    #[staticmethod]
    fn from_rankings(rankings: Vec<Vec<Vec<String>>>) -> PyResult<Self> {
        let mut labels: Vec<String> = Vec::new();
        for ranking in &rankings {
            for group in ranking {
                for label in group {
                    if !labels.contains(label) {
                        labels.push(label.clone());
                    }
                }
            }
        }
        let universe = dl::Universe::from_labels(labels).map_err(value_error)?;
        let mut built = Vec::with_capacity(rankings.len());
        for ranking in &rankings {
            let groups: Vec<Vec<dl::ItemId>> = ranking
                .iter()
                .map(|group| {
                    group
                        .iter()
                        .map(|l| universe.require(l))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<_, _>>()
                .map_err(value_error)?;
            built.push(dl::TiedRanking::complete(&universe, &groups).map_err(value_error)?);
        }
        let inner = dl::rankings_to_dataset(&universe, &built).map_err(value_error)?;
        Ok(Dataset { inner })
    }

    /// Item labels in universe order.
    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.universe().labels().to_vec()
    }

    #[getter]
    fn n_contests(&self) -> usize {
        self.inner.n_contests()
    }

    /// Observed points per item (in label order), awarding
    /// points_per_contest split evenly within a tied winning set.
    #[pyo3(signature = (points_per_contest = 6.0))]
    fn observed_points(&self, points_per_contest: f64) -> Vec<f64> {
        dl::observed_points(&self.inner, points_per_contest)
    }

    /// Estimate-existence diagnostics: whether the win/tie digraph is
    /// strongly connected, its strongly connected components, and items
    /// that participate but never win.
    fn connectivity<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let report = dl::check_connectivity(&self.inner);
        let universe = self.inner.universe();
        let label = |id: &dl::ItemId| universe.label(*id).to_owned();
        let dict = PyDict::new(py);
        dict.set_item("strongly_connected", report.strongly_connected)?;
        dict.set_item(
            "components",
            report
                .components
                .iter()
                .map(|c| c.iter().map(label).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        )?;
        dict.set_item(
            "never_winning_items",
            report
                .never_winning_items
                .iter()
                .map(label)
                .collect::<Vec<_>>(),
        )?;
        Ok(dict)
    }

    /// The dataset in wide CSV form.
    fn to_wide_csv(&self) -> PyResult<String> {
        let mut out = Vec::new();
        formats::write_wide_csv(&mut out, &self.inner, None).map_err(value_error)?;
        Ok(String::from_utf8(out).expect("CSV output is UTF-8"))
    }

    fn __len__(&self) -> usize {
        self.inner.n_contests()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset({} items, {} contests)",
            self.inner.universe().len(),
            self.inner.n_contests()
        )
    }
}

/// A fitted model: estimates, standard errors, and diagnostics.
#[pyclass]
struct FitResult {
    report: dl::FitReport,
    universe: dl::Universe,
}

#[pymethods]
impl FitResult {
    /// Log-strength per item label (reference item at 0).
    #[getter]
    fn strengths(&self) -> BTreeMap<String, f64> {
        self.universe
            .ids()
            .map(|id| {
                (
                    self.universe.label(id).to_owned(),
                    self.report.params.log_strength(id),
                )
            })
            .collect()
    }

    /// Log tie-prevalence per observed tie order.
    #[getter]
    fn tie_prevalence(&self) -> BTreeMap<usize, f64> {
        self.report
            .params
            .stored_orders()
            .map(|t| (t, self.report.params.log_tie(t).unwrap()))
            .collect()
    }

    /// Standard errors: {"strengths": {label: se}, "tie_prevalence":
    /// {order: se}} for the free parameters only.
    #[getter]
    fn std_errors<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let dict = PyDict::new(py);
        let strengths: BTreeMap<String, f64> = self
            .report
            .std_errors
            .strengths
            .iter()
            .map(|(id, se)| (self.universe.label(*id).to_owned(), *se))
            .collect();
        dict.set_item("strengths", strengths)?;
        dict.set_item(
            "tie_prevalence",
            self.report.std_errors.tie_prevalence.clone(),
        )?;
        Ok(dict)
    }

    #[getter]
    fn reference_item(&self) -> String {
        self.universe
            .label(self.report.params.reference())
            .to_owned()
    }

    #[getter]
    fn loglik(&self) -> f64 {
        self.report.loglik
    }

    #[getter]
    fn deviance(&self) -> f64 {
        self.report.deviance
    }

    #[getter]
    fn pearson_chi_sq(&self) -> f64 {
        self.report.pearson_chi_sq
    }

    #[getter]
    fn residual_df(&self) -> i64 {
        self.report.residual_df
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.report.iterations
    }

    #[getter]
    fn converged(&self) -> bool {
        self.report.converged
    }

    #[getter]
    fn strongly_connected(&self) -> bool {
        self.report.connectivity.strongly_connected
    }

    /// Expected points per item under the fitted model, comparable with
    /// Dataset.observed_points.
    #[pyo3(signature = (dataset, points_per_contest = 6.0))]
    fn expected_points(&self, dataset: &Dataset, points_per_contest: f64) -> PyResult<Vec<f64>> {
        dl::expected_points(&dataset.inner, &self.report.params, points_per_contest)
            .map_err(value_error)
    }

    /// The full report in the CLI's versioned JSON schema.
    fn to_json(&self) -> String {
        let value = formats::fit_report_to_json(&self.universe, &self.report);
        serde_json::to_string_pretty(&value).expect("report serializes")
    }

    fn __repr__(&self) -> String {
        format!(
            "FitResult(converged={}, loglik={:.6}, deviance={:.5}, df={})",
            self.report.converged,
            self.report.loglik,
            self.report.deviance,
            self.report.residual_df
        )
    }
}

/// Fits the model to a dataset by Fisher scoring.
#[pyfunction]
#[pyo3(signature = (dataset, ref_item = None, equal_strengths = false, tol = 1e-8, max_iter = 100))]
fn fit(
    dataset: &Dataset,
    ref_item: Option<&str>,
    equal_strengths: bool,
    tol: f64,
    max_iter: usize,
) -> PyResult<FitResult> {
    let reference_item = ref_item
        .map(|label| dataset.inner.universe().require(label))
        .transpose()
        .map_err(value_error)?;
    let config = dl::FitConfig {
        tol,
        max_iter,
        reference_item,
        fixed_strengths: equal_strengths,
        ..dl::FitConfig::default()
    };
    let report = dl::fit(&dataset.inner, &config).map_err(value_error)?;
    Ok(FitResult {
        report,
        universe: dataset.inner.universe().clone(),
    })
}

/// Exact outcome probabilities for one comparison set, keyed by the
/// winning-set label convention ("A", "A=B", ...).
#[pyfunction]
fn outcome_probabilities(
    strengths: BTreeMap<String, f64>,
    tie_prevalence: BTreeMap<usize, f64>,
    items: Vec<String>,
) -> PyResult<BTreeMap<String, f64>> {
    let (universe, params) = params_from_dicts(&strengths, &tie_prevalence)?;
    let mut ids: Vec<dl::ItemId> = items
        .iter()
        .map(|l| universe.require(l))
        .collect::<Result<_, _>>()
        .map_err(value_error)?;
    if ids.len() < 2 {
        return Err(value_error(dl::Error::ComparisonTooSmall(ids.len())));
    }
    if ids.len() > dl::MAX_COMPARISON_ITEMS {
        return Err(value_error(dl::Error::ComparisonTooLarge(ids.len())));
    }
    universe.sort_by_label(&mut ids);
    for pair in ids.windows(2) {
        if pair[0] == pair[1] {
            return Err(value_error(dl::Error::DuplicateItem(
                universe.label(pair[0]).to_owned(),
            )));
        }
    }
    let space = dl::enumerate_items(&ids, params.t_max());
    let dist = dl::distribution_over(&ids, &space, &params).map_err(value_error)?;
    Ok(dist
        .outcomes()
        .iter()
        .map(|(set, p)| (set.label(&universe), *p))
        .collect())
}

/// Simulates a balanced round robin over all size-`subset_size` comparison
/// sets, `replications` times, deterministically from the seed.
#[pyfunction]
fn simulate_round_robin(
    strengths: BTreeMap<String, f64>,
    tie_prevalence: BTreeMap<usize, f64>,
    subset_size: usize,
    replications: u64,
    seed: u64,
) -> PyResult<Dataset> {
    let (universe, params) = params_from_dicts(&strengths, &tie_prevalence)?;
    let config = dl::SimConfig {
        seed,
        design: dl::Design::RoundRobin { subset_size },
        replications,
        params,
    };
    let inner = dl::simulate_tournament(&universe, &config).map_err(value_error)?;
    Ok(Dataset { inner })
}

#[pymodule]
fn davidson_luce_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<FitResult>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(outcome_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_round_robin, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

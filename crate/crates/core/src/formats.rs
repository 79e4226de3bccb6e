//! File formats: the wide contest table (CSV), contests JSON, rankings
//! JSONL, parameter/fit-report JSON, and the expanded outcome table (CSV).
//!
//! All readers take `io::Read`, all writers take `io::Write`, so the same
//! code serves files, pipes, and in-memory buffers. Malformed input is
//! reported with 1-based line numbers where the underlying format makes
//! them available.
//!
//! # Wide contest table
//!
//! A CSV whose header row names the items (this order becomes the item
//! universe, and its last column the default reference item). Each
//! subsequent row is one contest: `NA` (case-insensitive) or an empty cell
//! means the item was not in the comparison set, `1` means it belongs to
//! the winning set, `0` means it was compared but did not win. Lines
//! starting with `#` are comments; simulated files carry their seed and
//! design in such comments.
//!
//! # Contests JSON
//!
//! Either a bare array of `{"items": [...], "winners": [...]}` objects or
//! an object `{"metadata": {...}, "contests": [...]}`. Item labels are
//! collected into the universe in order of first appearance.
//!
//! # Rankings JSONL
//!
//! One JSON object per line: `{"groups": [["A","B"],["C"]]}`, groups
//! ordered best-first, with an optional `"items"` array naming the full
//! pool when the ranking is partial (unranked trailing items are censored,
//! not tied).
//!
//! # Parameters / fit reports
//!
//! Fit reports are JSON with a `"schema": 1` marker; `"strengths"` and
//! `"tie_prevalence"` hold the fitted coefficients **on the log scale**
//! (log-strengths λ and log tie-prevalences γ), keyed by item label and
//! tie order respectively. A parameter file for `predict`/`simulate` is
//! any JSON object with those two keys — in particular a fit report.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::estimation::FitReport;
use crate::model::{Contest, Dataset, ItemId, ModelParams, OutcomeDistribution, Universe};
use crate::outcomes;
use crate::rankings::{rankings_to_dataset, TiedRanking};
use crate::simulate::SimMetadata;

/// The dataset formats the command-line tool can ingest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    WideCsv,
    ContestsJson,
    RankingsJsonl,
}

/// Reads a dataset file in the given format.
pub fn read_dataset_file(path: &Path, format: DataFormat) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    match format {
        DataFormat::WideCsv => read_wide_csv(reader),
        DataFormat::ContestsJson => read_contests_json(reader),
        DataFormat::RankingsJsonl => read_rankings_jsonl(reader),
    }
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::parse(line, format!("{other:?}")),
    }
}

/// Parses the wide contest table. See the module docs for the cell
/// conventions.
pub fn read_wide_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = csv_reader.headers().map_err(csv_error)?.clone();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(Error::Format("missing header row of item labels".into()));
    }
    let universe = Universe::from_labels(headers.iter().map(str::to_string))?;
    let mut contests = Vec::new();
    for record in csv_reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != universe.len() {
            return Err(Error::parse(
                line,
                format!(
                    "expected {} cells (one per item), found {}",
                    universe.len(),
                    record.len()
                ),
            ));
        }
        let mut items = Vec::new();
        let mut winners = Vec::new();
        for (idx, cell) in record.iter().enumerate() {
            let item = ItemId(idx);
            if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
                continue;
            }
            match cell {
                "0" => items.push(item),
                "1" => {
                    items.push(item);
                    winners.push(item);
                }
                other => {
                    return Err(Error::parse(
                        line,
                        format!(
                            "cell for item {} must be NA, 0, or 1, found {other:?}",
                            universe.label(item)
                        ),
                    ));
                }
            }
        }
        let contest = Contest::new(&universe, &items, &winners)
            .map_err(|e| Error::parse(line, e.to_string()))?;
        contests.push(contest);
    }
    Dataset::new(universe, contests)
}

/// Writes the wide contest table, with optional simulation metadata as `#`
/// comment lines above the header.
pub fn write_wide_csv<W: Write>(
    mut writer: W,
    data: &Dataset,
    metadata: Option<&SimMetadata>,
) -> Result<()> {
    if let Some(meta) = metadata {
        write_metadata_comments(&mut writer, meta)?;
    }
    let mut csv_writer = csv::Writer::from_writer(writer);
    let universe = data.universe();
    csv_writer
        .write_record(universe.labels())
        .map_err(csv_error)?;
    for contest in data.contests() {
        let record: Vec<&str> = universe
            .ids()
            .map(|item| {
                if contest.outcome().contains(item) {
                    "1"
                } else if contest.items().contains(&item) {
                    "0"
                } else {
                    "NA"
                }
            })
            .collect();
        csv_writer.write_record(&record).map_err(csv_error)?;
    }
    csv_writer.flush()?;
    Ok(())
}

fn write_metadata_comments<W: Write>(writer: &mut W, meta: &SimMetadata) -> Result<()> {
    writeln!(writer, "# rng: {}", meta.rng)?;
    writeln!(writer, "# seed: {}", meta.seed)?;
    writeln!(writer, "# design: {}", meta.design)?;
    writeln!(writer, "# replications: {}", meta.replications)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct ContestRecord {
    items: Vec<String>,
    winners: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ContestsDocument {
    Bare(Vec<ContestRecord>),
    Wrapped {
        #[serde(default)]
        #[allow(dead_code)]
        metadata: Option<SimMetadata>,
        contests: Vec<ContestRecord>,
    },
}

/// Parses contests JSON (bare array or `{"metadata", "contests"}` object).
pub fn read_contests_json<R: Read>(reader: R) -> Result<Dataset> {
    let document: ContestsDocument = serde_json::from_reader(reader)?;
    let records = match document {
        ContestsDocument::Bare(records) => records,
        ContestsDocument::Wrapped { contests, .. } => contests,
    };
    let mut labels: Vec<String> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for record in &records {
        for label in &record.items {
            if seen.insert(label.clone()) {
                labels.push(label.clone());
            }
        }
    }
    let universe = Universe::from_labels(labels)?;
    let mut contests = Vec::new();
    for record in &records {
        let items: Vec<ItemId> = record
            .items
            .iter()
            .map(|l| universe.require(l))
            .collect::<Result<_>>()?;
        let winners: Vec<ItemId> = record
            .winners
            .iter()
            .map(|l| universe.require(l))
            .collect::<Result<_>>()?;
        contests.push(Contest::new(&universe, &items, &winners)?);
    }
    Dataset::new(universe, contests)
}

/// Writes contests JSON: a bare array without metadata, a wrapped object
/// with it.
pub fn write_contests_json<W: Write>(
    mut writer: W,
    data: &Dataset,
    metadata: Option<&SimMetadata>,
) -> Result<()> {
    let universe = data.universe();
    let records: Vec<ContestRecord> = data
        .contests()
        .iter()
        .map(|contest| ContestRecord {
            items: contest
                .items()
                .iter()
                .map(|&i| universe.label(i).to_string())
                .collect(),
            winners: contest
                .outcome()
                .members()
                .iter()
                .map(|&i| universe.label(i).to_string())
                .collect(),
        })
        .collect();
    let value = match metadata {
        Some(meta) => json!({ "metadata": meta, "contests": records }),
        None => serde_json::to_value(&records)?,
    };
    serde_json::to_writer_pretty(&mut writer, &value)?;
    writeln!(writer)?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct RankingRecord {
    groups: Vec<Vec<String>>,
    #[serde(default)]
    items: Option<Vec<String>>,
}

/// Parses rankings JSONL into the equivalent contest dataset. Blank lines
/// and `#` comment lines are skipped.
pub fn read_rankings_jsonl<R: Read>(reader: R) -> Result<Dataset> {
    let buffered = BufReader::new(reader);
    let mut records: Vec<(u64, RankingRecord)> = Vec::new();
    for (index, line) in buffered.lines().enumerate() {
        let line_no = index as u64 + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let record: RankingRecord =
            serde_json::from_str(trimmed).map_err(|e| Error::parse(line_no, e.to_string()))?;
        records.push((line_no, record));
    }
    let mut labels: Vec<String> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (_, record) in &records {
        let pool_labels = record.items.iter().flatten();
        let group_labels = record.groups.iter().flatten();
        for label in pool_labels.chain(group_labels) {
            if seen.insert(label.clone()) {
                labels.push(label.clone());
            }
        }
    }
    let universe = Universe::from_labels(labels)?;
    let mut rankings = Vec::with_capacity(records.len());
    for (line_no, record) in &records {
        let to_ids = |labels: &[String]| -> Result<Vec<ItemId>> {
            labels.iter().map(|l| universe.require(l)).collect()
        };
        let groups: Vec<Vec<ItemId>> = record
            .groups
            .iter()
            .map(|g| to_ids(g))
            .collect::<Result<_>>()?;
        let ranking = match &record.items {
            Some(pool_labels) => {
                let pool = to_ids(pool_labels)?;
                TiedRanking::new(&universe, &pool, &groups)
            }
            None => TiedRanking::complete(&universe, &groups),
        }
        .map_err(|e| Error::parse(*line_no, e.to_string()))?;
        rankings.push(ranking);
    }
    rankings_to_dataset(&universe, &rankings)
}

fn strengths_map(universe: &Universe, params: &ModelParams) -> Map<String, Value> {
    universe
        .ids()
        .map(|i| (universe.label(i).to_string(), json!(params.log_strength(i))))
        .collect()
}

fn tie_map(params: &ModelParams) -> Map<String, Value> {
    params
        .stored_orders()
        .map(|t| (t.to_string(), json!(params.log_tie(t).unwrap())))
        .collect()
}

/// JSON form of a parameter set: `{"strengths": {...}, "tie_prevalence":
/// {...}, "reference_item": ...}` on the log scale.
pub fn params_to_json(universe: &Universe, params: &ModelParams) -> Value {
    json!({
        "strengths": strengths_map(universe, params),
        "tie_prevalence": tie_map(params),
        "reference_item": universe.label(params.reference()),
    })
}

/// Reads a parameter file: any JSON object carrying `"strengths"` and
/// (optionally) `"tie_prevalence"` objects, such as a fit report. Returns
/// the universe in the file's key order together with the parameters.
pub fn read_params_json<R: Read>(reader: R) -> Result<(Universe, ModelParams)> {
    let value: Value = serde_json::from_reader(reader)?;
    let object = value
        .as_object()
        .ok_or_else(|| Error::Format("parameter file must be a JSON object".into()))?;
    let strengths = object
        .get("strengths")
        .and_then(Value::as_object)
        .ok_or_else(|| Error::Format("missing \"strengths\" object".into()))?;
    if strengths.is_empty() {
        return Err(Error::Format(
            "\"strengths\" must name at least one item".into(),
        ));
    }
    let universe = Universe::from_labels(strengths.keys().cloned())?;
    let mut log_tie = std::collections::BTreeMap::new();
    if let Some(ties) = object.get("tie_prevalence") {
        let ties = ties
            .as_object()
            .ok_or_else(|| Error::Format("\"tie_prevalence\" must be an object".into()))?;
        for (key, val) in ties {
            let order: usize = key.parse().map_err(|_| {
                Error::Format(format!("tie order {key:?} is not a positive integer"))
            })?;
            let gamma = val.as_f64().ok_or_else(|| {
                Error::Format(format!("tie prevalence for order {order} is not a number"))
            })?;
            log_tie.insert(order, gamma);
        }
    }
    let reference = match object.get("reference_item") {
        Some(Value::String(label)) => universe.require(label)?,
        Some(other) => {
            return Err(Error::Format(format!(
                "\"reference_item\" must be an item label, found {other}"
            )))
        }
        None => ItemId(universe.len() - 1),
    };
    let mut params = ModelParams::new(universe.len(), reference, log_tie)?;
    for (idx, (label, val)) in strengths.iter().enumerate() {
        let lambda = val
            .as_f64()
            .ok_or_else(|| Error::Format(format!("strength for {label:?} is not a number")))?;
        params.set_log_strength(ItemId(idx), lambda)?;
    }
    Ok((universe, params))
}

fn connectivity_json(universe: &Universe, report: &FitReport) -> Value {
    let conn = &report.connectivity;
    let components: Vec<Vec<&str>> = conn
        .components
        .iter()
        .map(|comp| comp.iter().map(|&i| universe.label(i)).collect())
        .collect();
    let never_winning: Vec<&str> = conn
        .never_winning_items
        .iter()
        .map(|&i| universe.label(i))
        .collect();
    json!({
        "strongly_connected": conn.strongly_connected,
        "components": components,
        "never_winning_items": never_winning,
    })
}

/// The versioned fit-report JSON document (`"schema": 1`).
pub fn fit_report_to_json(universe: &Universe, report: &FitReport) -> Value {
    let se_strengths: Map<String, Value> = report
        .std_errors
        .strengths
        .iter()
        .map(|(&i, &se)| (universe.label(i).to_string(), json!(se)))
        .collect();
    let se_ties: Map<String, Value> = report
        .std_errors
        .tie_prevalence
        .iter()
        .map(|(&t, &se)| (t.to_string(), json!(se)))
        .collect();
    json!({
        "schema": 1,
        "strengths": strengths_map(universe, &report.params),
        "tie_prevalence": tie_map(&report.params),
        "std_errors": { "strengths": se_strengths, "tie_prevalence": se_ties },
        "reference_item": universe.label(report.params.reference()),
        "loglik": report.loglik,
        "deviance": report.deviance,
        "pearson": report.pearson_chi_sq,
        "df": report.residual_df,
        "converged": report.converged,
        "iterations": report.iterations,
        "connectivity": connectivity_json(universe, report),
    })
}

pub fn write_fit_report<W: Write>(
    mut writer: W,
    universe: &Universe,
    report: &FitReport,
) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, &fit_report_to_json(universe, report))?;
    writeln!(writer)?;
    Ok(())
}

/// Outcome probabilities for one comparison set, keyed by the `=`-joined
/// set labels in enumeration order.
pub fn predictions_to_json(universe: &Universe, dist: &OutcomeDistribution) -> Value {
    let items: Vec<&str> = dist.items().iter().map(|&i| universe.label(i)).collect();
    let probabilities: Map<String, Value> = dist
        .outcomes()
        .iter()
        .map(|(set, p)| (set.label(universe), json!(p)))
        .collect();
    json!({ "items": items, "probabilities": probabilities })
}

/// Writes the expanded outcome table as CSV: one row per candidate outcome
/// of every contest. Columns: `comparison` (the `<index>: <set>` label),
/// one share column per item in universe order, `delta2..delta{t_max}`
/// indicators, and the 0/1 `outcome` flag.
pub fn write_expanded_csv<W: Write>(writer: W, data: &Dataset, t_max: usize) -> Result<()> {
    let universe = data.universe();
    let mut csv_writer = csv::Writer::from_writer(writer);
    let mut header = vec!["comparison".to_string()];
    header.extend(universe.labels().iter().cloned());
    for t in 2..=t_max {
        header.push(format!("delta{t}"));
    }
    header.push("outcome".to_string());
    csv_writer.write_record(&header).map_err(csv_error)?;
    for row in outcomes::expand_dataset(data, t_max) {
        let mut record = vec![row.label(universe)];
        for item in universe.ids() {
            record.push(format_share(row.item_share(item)));
        }
        for t in 2..=t_max {
            record.push(format_share(row.tie_indicator(t)));
        }
        record.push(row.count.to_string());
        csv_writer.write_record(&record).map_err(csv_error)?;
    }
    csv_writer.flush()?;
    Ok(())
}

fn format_share(v: f64) -> String {
    format!("{v}")
}

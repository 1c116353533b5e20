//! Evaluation machinery: field-by-field scoring of system output
//! against a gold key, accuracy and precision in the exact form used by
//! the evaluation tables, the rules-disabled lower bound, and
//! chance-corrected inter-annotator agreement (kappa).
//!
//! Scoring is a straight field-by-field comparison of the ten-slot
//! Temporal Unit vectors: information must not only be right, it has to
//! be in the right place. A "Monday" resolved to the right day but
//! recorded as an ending rather than a starting time contributes three
//! errors of omission and three of commission, with no credit for
//! recognizing the date.

use serde::{Deserialize, Serialize};

use crate::engine::{resolve_dialog, EngineConfig};
use crate::error::{Error, Result};
use crate::format::{DialogFile, KeyFile, OutputFile};
use crate::tu::{FieldName, TemporalUnit};

/// Tallies for one scored field.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRow {
    /// System and key agree on a non-null value.
    pub correct: u64,
    /// System and key differ on non-null values.
    pub incorrect: u64,
    /// System has a null value for a non-null key.
    pub missing: u64,
    /// System has a non-null value for a null key.
    pub extra: u64,
    /// Both system and key give a null answer.
    pub null_agree: u64,
}

impl CountRow {
    pub fn total(&self) -> u64 {
        self.correct + self.incorrect + self.missing + self.extra + self.null_agree
    }

    pub fn add(&mut self, other: &CountRow) {
        self.correct += other.correct;
        self.incorrect += other.incorrect;
        self.missing += other.missing;
        self.extra += other.extra;
        self.null_agree += other.null_agree;
    }
}

/// Percentage of key values matched correctly:
/// (Correct + Null) / (Correct + Incorrect + Missing + Null).
/// Extra answers do not enter the denominator. `None` when undefined.
pub fn accuracy(c: &CountRow) -> Option<f64> {
    let den = c.correct + c.incorrect + c.missing + c.null_agree;
    (den > 0).then(|| (c.correct + c.null_agree) as f64 / den as f64)
}

/// Percentage of system answers matching the key:
/// (Correct + Null) / (Correct + Incorrect + Extra + Null).
/// Missing answers do not enter the denominator. `None` when undefined.
pub fn precision(c: &CountRow) -> Option<f64> {
    let den = c.correct + c.incorrect + c.extra + c.null_agree;
    (den > 0).then(|| (c.correct + c.null_agree) as f64 / den as f64)
}

/// Per-field tallies across a scored corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldCounts {
    rows: [CountRow; 10],
}

impl FieldCounts {
    pub fn get(&self, field: FieldName) -> &CountRow {
        &self.rows[field as usize]
    }

    pub fn get_mut(&mut self, field: FieldName) -> &mut CountRow {
        &mut self.rows[field as usize]
    }

    /// Sum over all ten fields.
    pub fn overall(&self) -> CountRow {
        let mut total = CountRow::default();
        for row in &self.rows {
            total.add(row);
        }
        total
    }

    pub fn add(&mut self, other: &FieldCounts) {
        for field in FieldName::ALL {
            self.get_mut(field).add(other.get(field));
        }
    }
}

/// Pair system units with key units by mention order, padding the
/// shorter side with all-null units. Always yields at least one pair, so
/// temporally empty utterances still contribute null-agreement counts.
pub fn align_tus(system: &[TemporalUnit], key: &[TemporalUnit]) -> Vec<(TemporalUnit, TemporalUnit)> {
    let n = system.len().max(key.len()).max(1);
    (0..n)
        .map(|i| {
            (
                system.get(i).copied().unwrap_or_default(),
                key.get(i).copied().unwrap_or_default(),
            )
        })
        .collect()
}

/// Score aligned pairs field by field.
pub fn score_counts(pairs: &[(TemporalUnit, TemporalUnit)]) -> FieldCounts {
    let mut counts = FieldCounts::default();
    for (system, key) in pairs {
        for field in FieldName::ALL {
            let row = counts.get_mut(field);
            match (system.get(field), key.get(field)) {
                (Some(s), Some(k)) if s == k => row.correct += 1,
                (Some(_), Some(_)) => row.incorrect += 1,
                (None, Some(_)) => row.missing += 1,
                (Some(_), None) => row.extra += 1,
                (None, None) => row.null_agree += 1,
            }
        }
    }
    counts
}

/// Score one system output file against its key. Every record must have
/// a key row and vice versa.
pub fn score_output(output: &OutputFile, key: &KeyFile) -> Result<FieldCounts> {
    if output.dialog_id != key.dialog_id {
        return Err(Error::schema(
            "key file",
            format!(
                "dialog_id mismatch: system {:?} vs key {:?}",
                output.dialog_id, key.dialog_id
            ),
        ));
    }
    let mut counts = FieldCounts::default();
    for record in &output.records {
        let key_tus = key
            .tus_for(record.utterance_id)
            .ok_or_else(|| {
                Error::schema(
                    format!("utterance {}", record.utterance_id),
                    "no key row for this utterance",
                )
            })?;
        let system_tus: Vec<TemporalUnit> = record.tus.iter().map(|t| t.tu).collect();
        counts.add(&score_counts(&align_tus(&system_tus, key_tus)));
    }
    for row in &key.keys {
        if !output.records.iter().any(|r| r.utterance_id == row.utterance_id) {
            return Err(Error::schema(
                format!("utterance {}", row.utterance_id),
                "key row has no matching system record",
            ));
        }
    }
    Ok(counts)
}

/// Aggregate scores over a corpus of (output, key) pairs.
pub fn score_corpus(pairs: &[(OutputFile, KeyFile)]) -> Result<FieldCounts> {
    let mut counts = FieldCounts::default();
    for (output, key) in pairs {
        counts.add(&score_output(output, key)?);
    }
    Ok(counts)
}

/// Evaluation lower bound: disable all the rules and score the
/// normalized input as is (first-ranked parse only). Since null is the
/// most frequent value everywhere, this matches a naive most-frequent-
/// value baseline.
pub fn lower_bound(corpus: &[(DialogFile, KeyFile)], config: &EngineConfig) -> Result<FieldCounts> {
    let disabled = EngineConfig { rules_enabled: false, ..config.clone() };
    let mut counts = FieldCounts::default();
    for (dialog, key) in corpus {
        let ailts = resolve_dialog(dialog, &disabled)?;
        let output = crate::format::output_from_ailts(dialog, &ailts);
        counts.add(&score_output(&output, key)?);
    }
    Ok(counts)
}

// ---------------------------------------------------------------------------
// Inter-annotator agreement
// ---------------------------------------------------------------------------

/// Items-by-raters matrix of categorical labels for one field. Null
/// answers must appear as an explicit label (e.g. `"null"`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementTable {
    pub raters: Vec<String>,
    /// One row per item; row length equals the number of raters.
    pub items: Vec<Vec<String>>,
}

/// How the observed-agreement numerator is computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PaMode {
    /// Mean over items of the per-item agreeing-pair proportion.
    #[default]
    Item,
    /// Agreeing pairs pooled over all decisions. Coincides with the
    /// item mean when every item has the same number of raters.
    Pooled,
}

impl AgreementTable {
    pub fn validate(&self) -> Result<()> {
        if self.raters.len() < 2 {
            return Err(Error::schema("agreement table", "need at least 2 raters"));
        }
        if self.items.is_empty() {
            return Err(Error::schema("agreement table", "need at least 1 item"));
        }
        for (i, row) in self.items.iter().enumerate() {
            if row.len() != self.raters.len() {
                return Err(Error::schema(
                    format!("item {i}"),
                    format!("has {} labels for {} raters", row.len(), self.raters.len()),
                ));
            }
            if row.iter().any(|cell| cell.is_empty()) {
                return Err(Error::schema(format!("item {i}"), "empty cell"));
            }
        }
        Ok(())
    }

    fn rater_index(&self, name: &str) -> Result<usize> {
        self.raters
            .iter()
            .position(|r| r == name)
            .ok_or_else(|| Error::schema("agreement table", format!("no rater named {name:?}")))
    }

    fn column(&self, idx: usize) -> Vec<&str> {
        self.items.iter().map(|row| row[idx].as_str()).collect()
    }
}

fn pairs2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Observed agreement: proportion of agreeing rater pairs. The two
/// modes coincide when every item carries the same number of raters,
/// which the table shape enforces; both are kept so the choice is
/// explicit and auditable.
pub fn observed_agreement(table: &AgreementTable, mode: PaMode) -> Result<f64> {
    table.validate()?;
    let r = table.raters.len() as u64;
    let agree_per_item: Vec<u64> = table
        .items
        .iter()
        .map(|row| {
            let mut sorted: Vec<&str> = row.iter().map(String::as_str).collect();
            sorted.sort_unstable();
            let mut agree = 0u64;
            let mut i = 0;
            while i < sorted.len() {
                let j = sorted[i..].iter().take_while(|s| **s == sorted[i]).count();
                agree += pairs2(j as u64);
                i += j;
            }
            agree
        })
        .collect();
    let n = agree_per_item.len() as f64;
    Ok(match mode {
        PaMode::Item => {
            agree_per_item.iter().map(|&a| a as f64 / pairs2(r) as f64).sum::<f64>() / n
        }
        PaMode::Pooled => {
            agree_per_item.iter().sum::<u64>() as f64 / (n * pairs2(r) as f64)
        }
    })
}

/// Chance agreement from pooled category proportions: sum of squared
/// marginals over all decisions.
pub fn chance_agreement(table: &AgreementTable) -> Result<f64> {
    table.validate()?;
    let mut counts: std::collections::BTreeMap<&str, u64> = Default::default();
    let mut total = 0u64;
    for row in &table.items {
        for cell in row {
            *counts.entry(cell.as_str()).or_default() += 1;
            total += 1;
        }
    }
    Ok(counts
        .values()
        .map(|&c| {
            let p = c as f64 / total as f64;
            p * p
        })
        .sum())
}

/// Kappa from already-computed agreement rates: (Pa - Pe) / (1 - Pe).
/// Zero when agreement matches chance, one when agreement is exact.
pub fn kappa_from_rates(pa: f64, pe: f64) -> Result<f64> {
    if pe >= 1.0 {
        return Err(Error::Undefined("kappa: chance agreement is 1"));
    }
    Ok((pa - pe) / (1.0 - pe))
}

/// Multi-rater kappa with pooled-marginal chance agreement.
pub fn kappa(table: &AgreementTable, mode: PaMode) -> Result<f64> {
    kappa_from_rates(observed_agreement(table, mode)?, chance_agreement(table)?)
}

/// Two-rater kappa with per-rater marginals (Cohen's form).
pub fn cohen_kappa(a: &[&str], b: &[&str]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::schema("cohen", "label sequences must be non-empty and equal length"));
    }
    let n = a.len() as f64;
    let po = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let mut ca: std::collections::BTreeMap<&str, u64> = Default::default();
    let mut cb: std::collections::BTreeMap<&str, u64> = Default::default();
    for (&x, &y) in a.iter().zip(b) {
        *ca.entry(x).or_default() += 1;
        *cb.entry(y).or_default() += 1;
    }
    let pe: f64 = ca
        .iter()
        .map(|(label, &count_a)| {
            let count_b = cb.get(label).copied().unwrap_or(0);
            (count_a as f64 / n) * (count_b as f64 / n)
        })
        .sum();
    kappa_from_rates(po, pe)
}

/// Mean pairwise kappa of each coder against a designated expert column.
pub fn pairwise_expert_kappa(table: &AgreementTable, expert: &str) -> Result<f64> {
    table.validate()?;
    let expert_idx = table.rater_index(expert)?;
    let expert_col = table.column(expert_idx);
    let mut sum = 0.0;
    let mut n = 0usize;
    for idx in 0..table.raters.len() {
        if idx == expert_idx {
            continue;
        }
        sum += cohen_kappa(&table.column(idx), &expert_col)?;
        n += 1;
    }
    if n == 0 {
        return Err(Error::schema("agreement table", "no coders besides the expert"));
    }
    Ok(sum / n as f64)
}

// ---------------------------------------------------------------------------
// Table rendering
// ---------------------------------------------------------------------------

/// One row of the rendered evaluation table, also used as the
/// machine-readable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub correct: u64,
    pub incorrect: u64,
    pub missing: u64,
    pub extra: u64,
    pub null_agree: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acc_lb: Option<f64>,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
}

fn table_row(label: &str, c: &CountRow, lb: Option<&CountRow>) -> TableRow {
    TableRow {
        label: label.to_string(),
        correct: c.correct,
        incorrect: c.incorrect,
        missing: c.missing,
        extra: c.extra,
        null_agree: c.null_agree,
        acc_lb: lb.and_then(accuracy),
        accuracy: accuracy(c),
        precision: precision(c),
    }
}

/// Machine-readable rows in the evaluation-table layout: five start
/// fields, five end fields, then the overall row. `lower_bound`, when
/// supplied, fills the AccLB column.
pub fn table_rows(counts: &FieldCounts, lower_bound: Option<&FieldCounts>) -> Vec<TableRow> {
    let mut rows = Vec::with_capacity(11);
    for field in FieldName::ALL {
        rows.push(table_row(field.label(), counts.get(field), lower_bound.map(|lb| lb.get(field))));
    }
    let overall = counts.overall();
    let lb_overall = lower_bound.map(|lb| lb.overall());
    rows.push(table_row("overall", &overall, lb_overall.as_ref()));
    rows
}

fn fmt_metric(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.3}"),
        None => "-".to_string(),
    }
}

/// Render counts as an aligned text table in the standard column layout
/// (Label, Cor, Inc, Mis, Ext, Nul, AccLB, Acc, Prec). The AccLB column
/// appears only when a lower bound is supplied.
pub fn render_table(counts: &FieldCounts, lower_bound: Option<&FieldCounts>) -> String {
    let rows = table_rows(counts, lower_bound);
    let with_lb = lower_bound.is_some();
    let mut out = String::new();
    let header = if with_lb {
        format!(
            "{:<8} {:>5} {:>5} {:>5} {:>5} {:>5} {:>6} {:>6} {:>6}\n",
            "Label", "Cor", "Inc", "Mis", "Ext", "Nul", "AccLB", "Acc", "Prec"
        )
    } else {
        format!(
            "{:<8} {:>5} {:>5} {:>5} {:>5} {:>5} {:>6} {:>6}\n",
            "Label", "Cor", "Inc", "Mis", "Ext", "Nul", "Acc", "Prec"
        )
    };
    out.push_str(&header);
    for (i, row) in rows.iter().enumerate() {
        if i == 0 {
            out.push_str("start\n");
        } else if i == 5 {
            out.push_str("end\n");
        }
        let mut line = format!(
            "{:<8} {:>5} {:>5} {:>5} {:>5} {:>5}",
            row.label, row.correct, row.incorrect, row.missing, row.extra, row.null_agree
        );
        if with_lb {
            line.push_str(&format!(" {:>6}", fmt_metric(row.acc_lb)));
        }
        line.push_str(&format!(
            " {:>6} {:>6}\n",
            fmt_metric(row.accuracy),
            fmt_metric(row.precision)
        ));
        out.push_str(&line);
    }
    out
}

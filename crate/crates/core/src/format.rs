//! File formats: dialog input, gold key, resolver output, and the
//! engine configuration. All UTF-8 JSON with field names mirroring the
//! ten-slot vector (`start_month`, `end_hour_minute`, ...). Dates carry
//! an explicit year even though units score without one, because the
//! calendar arithmetic needs it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calendar::CalendarDate;
use crate::engine::{Ailt, EngineConfig, RuleTrace};
use crate::error::{Error, Result};
use crate::normalize::{SurfaceExpr, SurfaceIlt, Tense};
use crate::tu::{Endpoint, HourMinute, Month, TemporalUnit, TimeOfDay, Weekday};

// ---------------------------------------------------------------------------
// Temporal Unit wire form
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Serialize, Deserialize)]
struct TuFlat {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start_month: Option<Month>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start_date: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start_weekday: Option<Weekday>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start_hour_minute: Option<HourMinute>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start_time_of_day: Option<TimeOfDay>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    end_month: Option<Month>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    end_date: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    end_weekday: Option<Weekday>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    end_hour_minute: Option<HourMinute>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    end_time_of_day: Option<TimeOfDay>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    year: Option<i32>,
}

impl From<&TemporalUnit> for TuFlat {
    fn from(tu: &TemporalUnit) -> TuFlat {
        TuFlat {
            start_month: tu.start.month,
            start_date: tu.start.date,
            start_weekday: tu.start.weekday,
            start_hour_minute: tu.start.hour_minute,
            start_time_of_day: tu.start.time_of_day,
            end_month: tu.end.month,
            end_date: tu.end.date,
            end_weekday: tu.end.weekday,
            end_hour_minute: tu.end.hour_minute,
            end_time_of_day: tu.end.time_of_day,
            year: tu.year,
        }
    }
}

impl From<TuFlat> for TemporalUnit {
    fn from(f: TuFlat) -> TemporalUnit {
        TemporalUnit {
            start: Endpoint {
                month: f.start_month,
                date: f.start_date,
                weekday: f.start_weekday,
                hour_minute: f.start_hour_minute,
                time_of_day: f.start_time_of_day,
            },
            end: Endpoint {
                month: f.end_month,
                date: f.end_date,
                weekday: f.end_weekday,
                hour_minute: f.end_hour_minute,
                time_of_day: f.end_time_of_day,
            },
            year: f.year,
        }
    }
}

impl Serialize for TemporalUnit {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TuFlat::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for TemporalUnit {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let flat = TuFlat::deserialize(d)?;
        for (label, date) in [("start_date", flat.start_date), ("end_date", flat.end_date)] {
            if let Some(v) = date {
                if !(1..=31).contains(&v) {
                    return Err(serde::de::Error::custom(format!("{label} out of range: {v}")));
                }
            }
        }
        Ok(flat.into())
    }
}

// ---------------------------------------------------------------------------
// Dialog input
// ---------------------------------------------------------------------------

/// One alternative parse of one utterance, as stored on disk. The parser
/// this format replaces ranks its alternatives; rank 1 is preferred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alternative {
    pub parse_rank: u32,
    /// Unknown tense tokens load as `other` with a warning rather than
    /// failing the dialog.
    #[serde(default, deserialize_with = "tense_lenient")]
    pub tense: TenseField,
    #[serde(default)]
    pub expressions: Vec<SurfaceExpr>,
}

/// Tense plus the raw token it came from when unrecognized.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "String")]
pub enum TenseField {
    Known(Tense),
    Unknown(String),
}

impl Default for TenseField {
    fn default() -> TenseField {
        TenseField::Known(Tense::Other)
    }
}

impl TenseField {
    pub fn tense(&self) -> Tense {
        match self {
            TenseField::Known(t) => *t,
            TenseField::Unknown(_) => Tense::Other,
        }
    }
}

impl From<TenseField> for String {
    fn from(t: TenseField) -> String {
        match t {
            TenseField::Known(t) => serde_json::to_value(t)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_else(|| "other".to_string()),
            TenseField::Unknown(s) => s,
        }
    }
}

fn tense_lenient<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> std::result::Result<TenseField, D::Error> {
    let raw = String::deserialize(d)?;
    match serde_json::from_value::<Tense>(serde_json::Value::String(raw.clone())) {
        Ok(t) => Ok(TenseField::Known(t)),
        Err(_) => Ok(TenseField::Unknown(raw)),
    }
}

/// One utterance with its parser alternatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub utterance_id: u32,
    pub speaker: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_text: Option<String>,
    pub alternatives: Vec<Alternative>,
}

impl Utterance {
    /// Surface records for this utterance, one per alternative.
    pub fn surface_ilts(&self) -> Vec<SurfaceIlt> {
        self.alternatives
            .iter()
            .map(|alt| SurfaceIlt {
                utterance_id: self.utterance_id,
                speaker: self.speaker.clone(),
                expressions: alt.expressions.clone(),
                tense: alt.tense.tense(),
                parse_rank: alt.parse_rank,
            })
            .collect()
    }
}

/// A dialog: header plus ordered utterances. The dialog date anchors
/// every non-anaphoric resolution, so it is mandatory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogFile {
    pub dialog_id: String,
    pub dialog_date: CalendarDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locale: Option<String>,
    pub utterances: Vec<Utterance>,
}

impl DialogFile {
    /// Structural checks beyond what the JSON shape enforces. Returns
    /// warnings (e.g. unknown tense tokens) for the caller to surface.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        let mut prev_id: Option<u32> = None;
        for utt in &self.utterances {
            let loc = format!("utterance {}", utt.utterance_id);
            if let Some(prev) = prev_id {
                if utt.utterance_id <= prev {
                    return Err(Error::schema(
                        &loc,
                        format!("utterance_ids must be strictly increasing (previous {prev})"),
                    ));
                }
            }
            prev_id = Some(utt.utterance_id);
            if utt.alternatives.is_empty() {
                return Err(Error::schema(&loc, "needs at least one alternative"));
            }
            let mut ranks: Vec<u32> = utt.alternatives.iter().map(|a| a.parse_rank).collect();
            ranks.sort_unstable();
            ranks.dedup();
            if ranks.len() != utt.alternatives.len() {
                return Err(Error::schema(&loc, "parse_rank values must be unique"));
            }
            for alt in &utt.alternatives {
                if let TenseField::Unknown(token) = &alt.tense {
                    warnings.push(format!(
                        "{loc}: unknown tense token {token:?}, treated as \"other\""
                    ));
                }
            }
        }
        Ok(warnings)
    }
}

/// Load and validate a dialog file. A missing `dialog_date` is a hard
/// error naming the field; other schema violations report the utterance
/// they occur in.
pub fn load_dialog(path: &Path) -> Result<(DialogFile, Vec<String>)> {
    let text = std::fs::read_to_string(path)?;
    let dialog: DialogFile = serde_json::from_str(&text)?;
    let warnings = dialog.validate()?;
    Ok((dialog, warnings))
}

// ---------------------------------------------------------------------------
// Gold key
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyRow {
    pub utterance_id: u32,
    #[serde(default)]
    pub tus: Vec<TemporalUnit>,
}

/// Gold Temporal Units per utterance. Every utterance of the dialog has
/// a row, possibly with no units (the all-null answer).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyFile {
    pub dialog_id: String,
    pub keys: Vec<KeyRow>,
}

impl KeyFile {
    pub fn tus_for(&self, utterance_id: u32) -> Option<&[TemporalUnit]> {
        self.keys
            .iter()
            .find(|row| row.utterance_id == utterance_id)
            .map(|row| row.tus.as_slice())
    }
}

pub fn load_key(path: &Path) -> Result<KeyFile> {
    let text = std::fs::read_to_string(path)?;
    let key: KeyFile = serde_json::from_str(&text)?;
    let mut ids: Vec<u32> = key.keys.iter().map(|k| k.utterance_id).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() != key.keys.len() {
        return Err(Error::schema("key file", "duplicate utterance_id rows"));
    }
    Ok(key)
}

// ---------------------------------------------------------------------------
// Resolver output
// ---------------------------------------------------------------------------

/// One resolved unit in the output: the chosen vector, its certainty,
/// and the rule/antecedent trace that produced it (the trace is what
/// anaphoric-chain analysis reads).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuRecord {
    pub tu: TemporalUnit,
    pub certainty: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rules: Vec<RuleTrace>,
}

/// Per-utterance output record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AiltRecord {
    pub utterance_id: u32,
    pub parse_rank: u32,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub suppressed: bool,
    pub certainty: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tus: Vec<TuRecord>,
}

/// Resolver output for one dialog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub dialog_id: String,
    pub dialog_date: CalendarDate,
    pub records: Vec<AiltRecord>,
}

/// Assemble the output file for a resolved dialog. Suppressed and
/// temporally empty utterances produce records with no units; the
/// evaluator pads those to the all-null vector.
pub fn output_from_ailts(dialog: &DialogFile, ailts: &[Ailt]) -> OutputFile {
    OutputFile {
        dialog_id: dialog.dialog_id.clone(),
        dialog_date: dialog.dialog_date,
        records: ailts
            .iter()
            .map(|a| AiltRecord {
                utterance_id: a.utterance_id,
                parse_rank: a.parse_rank,
                suppressed: a.suppressed,
                certainty: a.certainty,
                tus: a
                    .tus
                    .iter()
                    .map(|r| TuRecord {
                        tu: r.tu,
                        certainty: r.certainty,
                        rules: r.rules.clone(),
                    })
                    .collect(),
            })
            .collect(),
    }
}

/// Serialize an output file; pretty-printed, stable field order,
/// trailing newline. Byte-identical across runs for identical input.
pub fn emit_output(output: &OutputFile) -> Result<String> {
    let mut text = serde_json::to_string_pretty(output)?;
    text.push('\n');
    Ok(text)
}

pub fn load_output(path: &Path) -> Result<OutputFile> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Load an engine configuration; missing fields take their defaults.
pub fn load_config(path: &Path) -> Result<EngineConfig> {
    let text = std::fs::read_to_string(path)?;
    let config: EngineConfig = serde_json::from_str(&text)?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tu::{FieldName, FieldValue};

    #[test]
    fn tu_round_trips_through_json() {
        let tu = TemporalUnit::default()
            .with(FieldName::StartMonth, FieldValue::Month(Month::Aug))
            .with(FieldName::StartDate, FieldValue::Date(19))
            .with(FieldName::StartWeekday, FieldValue::Weekday(Weekday::Thu))
            .with(
                FieldName::StartHourMinute,
                FieldValue::HourMinute(HourMinute::from_hm(14, 0).unwrap()),
            )
            .with(FieldName::StartTimeOfDay, FieldValue::TimeOfDay(TimeOfDay::Pm))
            .with_year(1993);
        let json = serde_json::to_string(&tu).unwrap();
        assert!(json.contains("\"start_month\":\"aug\""));
        assert!(json.contains("\"start_hour_minute\":\"14:00\""));
        assert!(!json.contains("end_month"));
        let back: TemporalUnit = serde_json::from_str(&json).unwrap();
        assert_eq!(back, tu);
    }

    #[test]
    fn all_null_tu_serializes_to_empty_object() {
        let json = serde_json::to_string(&TemporalUnit::default()).unwrap();
        assert_eq!(json, "{}");
        let back: TemporalUnit = serde_json::from_str("{}").unwrap();
        assert!(back.is_all_null());
    }

    #[test]
    fn tu_rejects_out_of_range_date() {
        let err = serde_json::from_str::<TemporalUnit>("{\"start_date\": 32}");
        assert!(err.is_err());
    }

    fn dialog_json() -> String {
        r#"{
            "dialog_id": "demo",
            "dialog_date": "1993-08-16",
            "utterances": [
                {
                    "utterance_id": 1,
                    "speaker": "s1",
                    "raw_text": "On Thursday",
                    "alternatives": [
                        {"parse_rank": 1, "tense": "present",
                         "expressions": [{"weekday": "thu"}]}
                    ]
                },
                {
                    "utterance_id": 2,
                    "speaker": "s2",
                    "alternatives": [
                        {"parse_rank": 1, "tense": "present", "expressions": []}
                    ]
                },
                {
                    "utterance_id": 3,
                    "speaker": "s1",
                    "alternatives": [
                        {"parse_rank": 1, "tense": "subjunctive", "expressions": []}
                    ]
                }
            ]
        }"#
        .to_string()
    }

    #[test]
    fn dialog_parses_and_warns_on_unknown_tense() {
        let dialog: DialogFile = serde_json::from_str(&dialog_json()).unwrap();
        let warnings = dialog.validate().unwrap();
        assert_eq!(dialog.utterances.len(), 3);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("subjunctive"));
        assert_eq!(dialog.utterances[2].alternatives[0].tense.tense(), Tense::Other);
    }

    #[test]
    fn dialog_without_date_errors_naming_the_field() {
        let json = r#"{"dialog_id": "x", "utterances": []}"#;
        let err = serde_json::from_str::<DialogFile>(json).unwrap_err();
        assert!(err.to_string().contains("dialog_date"));
    }

    #[test]
    fn dialog_validation_rejects_disorder_and_duplicates() {
        let mut dialog: DialogFile = serde_json::from_str(&dialog_json()).unwrap();
        dialog.utterances[1].utterance_id = 1;
        assert!(dialog.validate().is_err());

        let mut dialog: DialogFile = serde_json::from_str(&dialog_json()).unwrap();
        dialog.utterances[0].alternatives.clear();
        assert!(dialog.validate().is_err());

        let mut dialog: DialogFile = serde_json::from_str(&dialog_json()).unwrap();
        let dup = dialog.utterances[0].alternatives[0].clone();
        dialog.utterances[0].alternatives.push(dup);
        assert!(dialog.validate().is_err());
    }

    #[test]
    fn output_round_trips() {
        let output = OutputFile {
            dialog_id: "demo".into(),
            dialog_date: CalendarDate::from_ymd_opt(1993, 8, 16).unwrap(),
            records: vec![AiltRecord {
                utterance_id: 1,
                parse_rank: 1,
                suppressed: false,
                certainty: 1.3,
                tus: vec![TuRecord {
                    tu: TemporalUnit::default()
                        .with(FieldName::StartMonth, FieldValue::Month(Month::Aug)),
                    certainty: 1.3,
                    rules: vec![RuleTrace {
                        rule: crate::rules::RuleId::A1,
                        antecedent_utterance: Some(1),
                        antecedent_mention: Some(0),
                    }],
                }],
            }],
        };
        let text = emit_output(&output).unwrap();
        let back: OutputFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, output);
    }

    #[test]
    fn config_round_trips_with_defaults() {
        let config: EngineConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(config, EngineConfig::default());
        let config: EngineConfig =
            serde_json::from_str(r#"{"beam": 4, "critics": {"end_before_start": null}}"#).unwrap();
        assert_eq!(config.beam, 4);
        assert_eq!(config.critics.end_before_start, None);
        assert_eq!(config.critics.before_dialog_date, Some(-0.3));
    }
}

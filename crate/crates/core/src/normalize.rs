//! Step 1 of the pipeline: map per-utterance surface temporal records
//! into normalized Temporal Unit skeletons.
//!
//! The surface format is the system boundary — it stands in for the
//! semantic parser that produced the original per-utterance records. A
//! surface record may split information about one time across several
//! expressions; normalization groups co-referential expressions into a
//! single unit, resolves bare clock hours to concrete minutes via the
//! am/pm policy, applies trivial inference, and applies the tense filter
//! that heuristically screens subdialog times.

use serde::{Deserialize, Serialize};

use crate::calendar::{infer_trivial, CalendarDate, DeicticTerm};
use crate::tu::{Endpoint, HourMinute, Month, TemporalUnit, TimeOfDay, Weekday};

/// Tense of the utterance evoking a time, as reported by the parser.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tense {
    Present,
    Future,
    SimplePast,
    PastPerfect,
    #[default]
    Other,
}

/// Which endpoint an expression describes. Unspecified expressions are
/// taken as starting information, the unmarked case in scheduling talk.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotHint {
    #[default]
    Unspecified,
    Start,
    End,
}

/// One surface temporal expression: whatever fragment of a time the
/// parser recovered from one phrase.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SurfaceExpr {
    #[serde(default, skip_serializing_if = "is_default_slot")]
    pub slot: SlotHint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub month: Option<Month>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weekday: Option<Weekday>,
    /// Surface clock hour 1-12, as spoken.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock_hour: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minutes: Option<u8>,
    /// Explicit am/pm, when the utterance carries one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meridiem: Option<TimeOfDay>,
    /// A part-of-day word such as "morning".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_of_day_word: Option<TimeOfDay>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deictic: Option<DeicticTerm>,
}

fn is_default_slot(s: &SlotHint) -> bool {
    *s == SlotHint::Unspecified
}

/// Per-utterance surface record: one alternative parse of one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceIlt {
    pub utterance_id: u32,
    pub speaker: String,
    pub expressions: Vec<SurfaceExpr>,
    pub tense: Tense,
    /// Rank among the parser's alternatives for this utterance; rank 1 is
    /// the parser's preferred reading.
    pub parse_rank: u32,
}

/// Policy for resolving a bare clock hour to am or pm.
///
/// Scheduling talk is business-hours talk: hours from `morning_start` up
/// to 11 read as am, 12 reads as noon, and 1-7 read as pm. A part-of-day
/// word on the expression overrides the default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AmPmPolicy {
    pub morning_start: u8,
}

impl Default for AmPmPolicy {
    fn default() -> Self {
        AmPmPolicy { morning_start: 8 }
    }
}

impl AmPmPolicy {
    /// Resolve (hour, minutes, explicit signals) to concrete clock time
    /// plus the time-of-day label to record.
    fn resolve(
        &self,
        hour: u8,
        minutes: u8,
        meridiem: Option<TimeOfDay>,
        word: Option<TimeOfDay>,
    ) -> (HourMinute, TimeOfDay) {
        let effective = meridiem
            .or(word)
            .unwrap_or(if hour != 12 && hour >= self.morning_start {
                TimeOfDay::Am
            } else {
                TimeOfDay::Pm
            });
        let is_am = matches!(effective, TimeOfDay::Am | TimeOfDay::Morning);
        let h24 = match (hour, is_am) {
            (12, true) => 0,
            (12, false) => 12,
            (h, true) => h as u16,
            (h, false) => h as u16 + 12,
        };
        let label = word.or(meridiem).unwrap_or(if is_am { TimeOfDay::Am } else { TimeOfDay::Pm });
        (HourMinute::from_hm(h24, minutes as u16).unwrap(), label)
    }
}

/// One normalized unit: the Temporal Unit skeleton plus the deictic term
/// attached to it, if any. The unresolved surface form stays here — the
/// unit itself only ever carries resolved values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NormalizedTu {
    pub tu: TemporalUnit,
    pub deictic: Option<DeicticTerm>,
}

impl NormalizedTu {
    /// True when the unit carries no temporal content at all (no fields,
    /// no deictic term).
    pub fn is_empty(&self) -> bool {
        self.tu.is_all_null() && self.deictic.is_none()
    }
}

/// Normalized form of one utterance alternative.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NormalizedIlt {
    pub utterance_id: u32,
    pub parse_rank: u32,
    pub tense: Tense,
    /// Tense-filter verdict: a suppressed time is neither resolved
    /// against the focus list nor pushed onto it.
    pub suppressed: bool,
    pub tus: Vec<NormalizedTu>,
    /// Per-utterance input errors. A malformed expression empties the
    /// unit list but never aborts the dialog.
    pub errors: Vec<String>,
}

/// True iff a time evoked under this tense should be ignored. Times in
/// the simple past or past perfect are taken to belong to subdialogs
/// (reports about earlier exchanges), not to the ongoing negotiation.
pub fn tense_filter(tense: Tense) -> bool {
    matches!(tense, Tense::SimplePast | Tense::PastPerfect)
}

fn expr_error(expr: &SurfaceExpr) -> Option<String> {
    if let Some(d) = expr.date {
        if !(1..=31).contains(&d) {
            return Some(format!("day-of-month out of range: {d}"));
        }
        if let Some(m) = expr.month {
            if d > days_in_month_max(m) {
                return Some(format!("day {d} never occurs in {m:?}"));
            }
        }
    }
    if let Some(h) = expr.clock_hour {
        if !(1..=12).contains(&h) {
            return Some(format!("clock hour out of range (want 1-12): {h}"));
        }
    }
    if let Some(m) = expr.minutes {
        if m > 59 {
            return Some(format!("minutes out of range: {m}"));
        }
        if expr.clock_hour.is_none() {
            return Some("minutes given without a clock hour".to_string());
        }
    }
    if matches!(expr.meridiem, Some(TimeOfDay::Morning | TimeOfDay::Afternoon | TimeOfDay::Evening))
    {
        return Some("meridiem must be am or pm".to_string());
    }
    if matches!(expr.time_of_day_word, Some(TimeOfDay::Am | TimeOfDay::Pm)) {
        return Some("time_of_day_word must be a part-of-day word".to_string());
    }
    None
}

fn days_in_month_max(m: Month) -> u8 {
    match m {
        Month::Jan | Month::Mar | Month::May | Month::Jul | Month::Aug | Month::Oct
        | Month::Dec => 31,
        Month::Apr | Month::Jun | Month::Sep | Month::Nov => 30,
        Month::Feb => 29,
    }
}

/// Field patch one expression contributes to an endpoint.
#[derive(Debug, Default, PartialEq)]
struct Patch {
    month: Option<Month>,
    date: Option<u8>,
    weekday: Option<Weekday>,
    hour_minute: Option<HourMinute>,
    time_of_day: Option<TimeOfDay>,
}

fn patch_of(expr: &SurfaceExpr, policy: &AmPmPolicy) -> Patch {
    let mut p = Patch {
        month: expr.month,
        date: expr.date,
        weekday: expr.weekday,
        hour_minute: None,
        time_of_day: expr.time_of_day_word,
    };
    if let Some(h) = expr.clock_hour {
        let (hm, tod) =
            policy.resolve(h, expr.minutes.unwrap_or(0), expr.meridiem, expr.time_of_day_word);
        p.hour_minute = Some(hm);
        p.time_of_day = Some(tod);
    } else if let Some(m) = expr.meridiem {
        p.time_of_day = expr.time_of_day_word.or(Some(m));
    }
    p
}

fn conflicts(ep: &Endpoint, p: &Patch) -> bool {
    fn clash<T: PartialEq + Copy>(a: Option<T>, b: Option<T>) -> bool {
        matches!((a, b), (Some(x), Some(y)) if x != y)
    }
    clash(ep.month, p.month)
        || clash(ep.date, p.date)
        || clash(ep.weekday, p.weekday)
        || clash(ep.hour_minute, p.hour_minute)
        || clash(ep.time_of_day, p.time_of_day)
}

fn apply(ep: &mut Endpoint, p: &Patch) {
    ep.month = ep.month.or(p.month);
    ep.date = ep.date.or(p.date);
    ep.weekday = ep.weekday.or(p.weekday);
    ep.hour_minute = ep.hour_minute.or(p.hour_minute);
    ep.time_of_day = ep.time_of_day.or(p.time_of_day);
}

/// Normalize one surface record into Temporal Unit skeletons.
///
/// Consecutive expressions are folded into one unit; a new unit opens
/// when an expression re-fills an already-filled slot field with a
/// different value, restates a deictic term, or supplies starting
/// information after the current unit's end is already populated (a new
/// interval is being laid down). After grouping, bare hours are already
/// resolved per the am/pm policy and trivial inference runs once.
pub fn normalize(ilt: &SurfaceIlt, dialog_date: CalendarDate, policy: &AmPmPolicy) -> NormalizedIlt {
    let mut out = NormalizedIlt {
        utterance_id: ilt.utterance_id,
        parse_rank: ilt.parse_rank,
        tense: ilt.tense,
        suppressed: tense_filter(ilt.tense),
        tus: Vec::new(),
        errors: Vec::new(),
    };

    let mut cur = NormalizedTu::default();
    for (i, expr) in ilt.expressions.iter().enumerate() {
        if let Some(msg) = expr_error(expr) {
            out.errors.push(format!(
                "utterance {} expression {}: {msg}",
                ilt.utterance_id, i
            ));
            out.tus.clear();
            return out;
        }

        let patch = patch_of(expr, policy);
        let target_is_end = expr.slot == SlotHint::End;
        let slot = if target_is_end { &cur.tu.end } else { &cur.tu.start };

        let restated_deictic =
            matches!((cur.deictic, expr.deictic), (Some(a), Some(b)) if a != b);
        let new_interval = !target_is_end && !cur.tu.end.is_all_null() && patch != Patch::default();

        if (conflicts(slot, &patch) || restated_deictic || new_interval) && !cur.is_empty() {
            out.tus.push(std::mem::take(&mut cur));
        }

        let slot = if target_is_end { &mut cur.tu.end } else { &mut cur.tu.start };
        apply(slot, &patch);
        if expr.deictic.is_some() && cur.deictic.is_none() {
            cur.deictic = expr.deictic;
        }
    }
    if !cur.is_empty() {
        out.tus.push(cur);
    }

    for ntu in &mut out.tus {
        ntu.tu = infer_trivial(&ntu.tu, dialog_date);
    }
    out
}

//! The Temporal Unit data model: a ten-field start/end interval record,
//! the specificity ordering over its fields, the merge algebra used by
//! every resolution rule, and the recency-ordered focus list.
//!
//! A Temporal Unit records a calendar interval as two five-slot tuples
//! (month, day-of-month, weekday, hour&minute, time-of-day), one for the
//! starting point and one for the ending point. Any slot may be null; the
//! all-null unit is the legal representation of "no temporal content".
//! Point times carry identical start and end tuples.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Calendar month. Serialized with three-letter lowercase names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Month {
    Jan,
    Feb,
    Mar,
    Apr,
    May,
    Jun,
    Jul,
    Aug,
    Sep,
    Oct,
    Nov,
    Dec,
}

impl Month {
    pub const ALL: [Month; 12] = [
        Month::Jan,
        Month::Feb,
        Month::Mar,
        Month::Apr,
        Month::May,
        Month::Jun,
        Month::Jul,
        Month::Aug,
        Month::Sep,
        Month::Oct,
        Month::Nov,
        Month::Dec,
    ];

    /// 1-based month number.
    pub fn number(self) -> u32 {
        Month::ALL.iter().position(|&m| m == self).unwrap() as u32 + 1
    }

    pub fn from_number(n: u32) -> Option<Month> {
        Month::ALL.get(n.checked_sub(1)? as usize).copied()
    }
}

/// Day of week. Serialized with three-letter lowercase names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weekday {
    Mon,
    Tue,
    Wed,
    Thu,
    Fri,
    Sat,
    Sun,
}

impl Weekday {
    pub const ALL: [Weekday; 7] = [
        Weekday::Mon,
        Weekday::Tue,
        Weekday::Wed,
        Weekday::Thu,
        Weekday::Fri,
        Weekday::Sat,
        Weekday::Sun,
    ];

    /// Days since Monday, 0-6.
    pub fn from_monday(self) -> u32 {
        Weekday::ALL.iter().position(|&w| w == self).unwrap() as u32
    }

    pub fn from_chrono(w: chrono::Weekday) -> Weekday {
        Weekday::ALL[w.num_days_from_monday() as usize]
    }

    pub fn to_chrono(self) -> chrono::Weekday {
        use chrono::Weekday as C;
        [C::Mon, C::Tue, C::Wed, C::Thu, C::Fri, C::Sat, C::Sun][self.from_monday() as usize]
    }
}

/// Coarse part-of-day label. `Am`/`Pm` come from explicit or defaulted
/// meridiems; the word forms come straight from the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeOfDay {
    Am,
    Pm,
    Morning,
    Afternoon,
    Evening,
}

/// Clock time as minutes since midnight (0-1439).
///
/// Surface forms like "2" are resolved to a concrete minute count during
/// normalization; the unit itself only ever holds the resolved value.
/// Serialized as an `"HH:MM"` string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HourMinute(u16);

impl HourMinute {
    pub const MAX: u16 = 1439;

    pub fn new(minutes_since_midnight: u16) -> Option<HourMinute> {
        (minutes_since_midnight <= Self::MAX).then_some(HourMinute(minutes_since_midnight))
    }

    pub fn from_hm(hour: u16, minute: u16) -> Option<HourMinute> {
        if hour > 23 || minute > 59 {
            return None;
        }
        Some(HourMinute(hour * 60 + minute))
    }

    pub fn minutes(self) -> u16 {
        self.0
    }

    pub fn hour(self) -> u16 {
        self.0 / 60
    }

    pub fn minute(self) -> u16 {
        self.0 % 60
    }
}

impl fmt::Display for HourMinute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.hour(), self.minute())
    }
}

impl std::str::FromStr for HourMinute {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (h, m) = s
            .split_once(':')
            .ok_or_else(|| format!("expected HH:MM, got {s:?}"))?;
        let hour: u16 = h.parse().map_err(|_| format!("bad hour in {s:?}"))?;
        let minute: u16 = m.parse().map_err(|_| format!("bad minute in {s:?}"))?;
        HourMinute::from_hm(hour, minute).ok_or_else(|| format!("out of range: {s:?}"))
    }
}

impl Serialize for HourMinute {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HourMinute {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Specificity rank of a field. Weekday and day-of-month are mutually
/// incomparable in the underlying partial order but share one rank here:
/// every rule comparison only needs `<`/`>=` between levels, and no rule
/// distinguishes the two branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpecLevel {
    Month = 0,
    Day = 1,
    TimeOfDay = 2,
    HourMinute = 3,
}

/// One of the ten scored slots of a Temporal Unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldName {
    StartMonth,
    StartDate,
    StartWeekday,
    StartHourMinute,
    StartTimeOfDay,
    EndMonth,
    EndDate,
    EndWeekday,
    EndHourMinute,
    EndTimeOfDay,
}

impl FieldName {
    pub const ALL: [FieldName; 10] = [
        FieldName::StartMonth,
        FieldName::StartDate,
        FieldName::StartWeekday,
        FieldName::StartHourMinute,
        FieldName::StartTimeOfDay,
        FieldName::EndMonth,
        FieldName::EndDate,
        FieldName::EndWeekday,
        FieldName::EndHourMinute,
        FieldName::EndTimeOfDay,
    ];

    pub fn level(self) -> SpecLevel {
        use FieldName::*;
        match self {
            StartMonth | EndMonth => SpecLevel::Month,
            StartDate | EndDate | StartWeekday | EndWeekday => SpecLevel::Day,
            StartTimeOfDay | EndTimeOfDay => SpecLevel::TimeOfDay,
            StartHourMinute | EndHourMinute => SpecLevel::HourMinute,
        }
    }

    pub fn is_start(self) -> bool {
        use FieldName::*;
        matches!(
            self,
            StartMonth | StartDate | StartWeekday | StartHourMinute | StartTimeOfDay
        )
    }

    /// Row label used in evaluation tables.
    pub fn label(self) -> &'static str {
        use FieldName::*;
        match self {
            StartMonth | EndMonth => "Month",
            StartDate | EndDate => "Date",
            StartWeekday | EndWeekday => "WeekDay",
            StartHourMinute | EndHourMinute => "HourMin",
            StartTimeOfDay | EndTimeOfDay => "TimeDay",
        }
    }
}

/// Value held by one slot; used for generic field access and scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldValue {
    Month(Month),
    Date(u8),
    Weekday(Weekday),
    HourMinute(HourMinute),
    TimeOfDay(TimeOfDay),
}

/// One endpoint (start or end) of a Temporal Unit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Endpoint {
    pub month: Option<Month>,
    pub date: Option<u8>,
    pub weekday: Option<Weekday>,
    pub hour_minute: Option<HourMinute>,
    pub time_of_day: Option<TimeOfDay>,
}

impl Endpoint {
    pub fn is_all_null(&self) -> bool {
        self.month.is_none()
            && self.date.is_none()
            && self.weekday.is_none()
            && self.hour_minute.is_none()
            && self.time_of_day.is_none()
    }
}

/// The basic representational unit: a start tuple, an end tuple, and an
/// optional year carried for calendar arithmetic. The year is not one of
/// the ten scored fields.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct TemporalUnit {
    pub start: Endpoint,
    pub end: Endpoint,
    pub year: Option<i32>,
}

impl TemporalUnit {
    pub fn get(&self, field: FieldName) -> Option<FieldValue> {
        use FieldName::*;
        let ep = if field.is_start() { &self.start } else { &self.end };
        match field {
            StartMonth | EndMonth => ep.month.map(FieldValue::Month),
            StartDate | EndDate => ep.date.map(FieldValue::Date),
            StartWeekday | EndWeekday => ep.weekday.map(FieldValue::Weekday),
            StartHourMinute | EndHourMinute => ep.hour_minute.map(FieldValue::HourMinute),
            StartTimeOfDay | EndTimeOfDay => ep.time_of_day.map(FieldValue::TimeOfDay),
        }
    }

    pub fn set(&mut self, field: FieldName, value: Option<FieldValue>) {
        use FieldName::*;
        let ep = if field.is_start() { &mut self.start } else { &mut self.end };
        match (field, value) {
            (StartMonth | EndMonth, Some(FieldValue::Month(v))) => ep.month = Some(v),
            (StartMonth | EndMonth, None) => ep.month = None,
            (StartDate | EndDate, Some(FieldValue::Date(v))) => ep.date = Some(v),
            (StartDate | EndDate, None) => ep.date = None,
            (StartWeekday | EndWeekday, Some(FieldValue::Weekday(v))) => ep.weekday = Some(v),
            (StartWeekday | EndWeekday, None) => ep.weekday = None,
            (StartHourMinute | EndHourMinute, Some(FieldValue::HourMinute(v))) => {
                ep.hour_minute = Some(v)
            }
            (StartHourMinute | EndHourMinute, None) => ep.hour_minute = None,
            (StartTimeOfDay | EndTimeOfDay, Some(FieldValue::TimeOfDay(v))) => {
                ep.time_of_day = Some(v)
            }
            (StartTimeOfDay | EndTimeOfDay, None) => ep.time_of_day = None,
            (f, Some(v)) => panic!("field/value kind mismatch: {f:?} <- {v:?}"),
        }
    }

    /// Chainable setter, mostly for building units in tests and rules.
    pub fn with(mut self, field: FieldName, value: FieldValue) -> TemporalUnit {
        self.set(field, Some(value));
        self
    }

    pub fn with_year(mut self, year: i32) -> TemporalUnit {
        self.year = Some(year);
        self
    }

    /// True when every scored field is null. A unit carrying only a year
    /// has no temporal content of its own.
    pub fn is_all_null(&self) -> bool {
        self.start.is_all_null() && self.end.is_all_null()
    }

    /// Specificity of the most specific non-null field, start and end
    /// slots pooled. `None` for the all-null unit ("no temporal content").
    pub fn specificity(&self) -> Option<SpecLevel> {
        FieldName::ALL
            .iter()
            .filter(|f| self.get(**f).is_some())
            .map(|f| f.level())
            .max()
    }

    /// The start-slot fields holding non-null values.
    pub fn starting_fields(&self) -> BTreeSet<FieldName> {
        FieldName::ALL
            .iter()
            .copied()
            .filter(|f| f.is_start() && self.get(*f).is_some())
            .collect()
    }

    /// Slot-wise union of two units. Succeeds when, for every slot, the
    /// two values are equal or at least one is null; a conflicting filler
    /// yields `None` (rule failure, not a fault). Purely symbolic: a
    /// weekday/date pair that is calendar-inconsistent still merges, and
    /// is left for the engine critics to judge.
    pub fn merge(&self, other: &TemporalUnit) -> Option<TemporalUnit> {
        let mut out = TemporalUnit::default();
        for field in FieldName::ALL {
            let v = match (self.get(field), other.get(field)) {
                (Some(a), Some(b)) if a != b => return None,
                (Some(a), _) => Some(a),
                (None, b) => b,
            };
            out.set(field, v);
        }
        out.year = match (self.year, other.year) {
            (Some(a), Some(b)) if a != b => return None,
            (Some(a), _) => Some(a),
            (None, b) => b,
        };
        Some(out)
    }

    /// Like [`merge`](Self::merge), but first drops every field of `self`
    /// that is strictly more specific than the most specific field of
    /// `other` (pooled over both slots). Fields of both endpoints are
    /// filtered, each judged by its own level. Returns `None` on conflict
    /// or when `other` is all-null (callers must not ask for an upper
    /// merge against nothing).
    pub fn merge_upper(&self, other: &TemporalUnit) -> Option<TemporalUnit> {
        let threshold = other.specificity()?;
        let mut filtered = TemporalUnit { year: self.year, ..TemporalUnit::default() };
        for field in FieldName::ALL {
            if field.level() <= threshold {
                filtered.set(field, self.get(field));
            }
        }
        filtered.merge(other)
    }
}

/// A resolved Temporal Unit on the focus list, tagged with the utterance
/// that evoked it and its rank among units evoked by the same utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscourseEntity {
    pub tu: TemporalUnit,
    pub utterance_index: u32,
    pub mention_index: u32,
}

/// Recency-ordered list of every time mentioned so far in a dialog.
/// Append-only: entries are never deleted, and there is no restriction
/// on how far back a rule may reach.
#[derive(Debug, Clone, Default)]
pub struct FocusList {
    entities: Vec<DiscourseEntity>,
}

impl FocusList {
    pub fn new() -> FocusList {
        FocusList::default()
    }

    /// Append one discourse entity per non-all-null unit, in order of
    /// mention. All-null units contribute nothing. `utterance_index` must
    /// not precede any index already on the list.
    pub fn push_focus(&mut self, utterance_index: u32, tus: &[TemporalUnit]) {
        debug_assert!(
            self.entities.last().is_none_or(|e| e.utterance_index < utterance_index),
            "focus list must grow in utterance order"
        );
        let mut mention_index = 0;
        for tu in tus {
            if tu.is_all_null() {
                continue;
            }
            self.entities.push(DiscourseEntity { tu: *tu, utterance_index, mention_index });
            mention_index += 1;
        }
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn entities(&self) -> &[DiscourseEntity] {
        &self.entities
    }

    /// Entities most-recent-first, each paired with its distance from the
    /// end of the list (0 = most recent).
    pub fn iter_recent(&self) -> impl Iterator<Item = (usize, &DiscourseEntity)> {
        self.entities.iter().rev().enumerate()
    }

    /// Distance of `de` from the most recent entry, or `None` if the
    /// entity is not on the list.
    pub fn distance_of(&self, de: &DiscourseEntity) -> Option<usize> {
        self.iter_recent()
            .find(|(_, e)| {
                e.utterance_index == de.utterance_index && e.mention_index == de.mention_index
            })
            .map(|(k, _)| k)
    }
}

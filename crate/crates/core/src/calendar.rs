//! Calendar arithmetic: forward search from a reference frame, deictic
//! resolution against the dialog date, and the trivial-inference pass
//! that completes obviously derivable fields (e.g. the weekday implied
//! by a month and day-of-month).
//!
//! Resolution is forward-only: scheduling dialogs talk about upcoming
//! times, and the corpora this design follows show almost no tense
//! variation that would motivate backward calculation.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tu::{Endpoint, Month, TemporalUnit, Weekday};

/// A concrete Gregorian date. The dialog date ("today" for a session)
/// is one of these.
pub type CalendarDate = NaiveDate;

/// Gregorian weekday of a date.
pub fn day_of_week(d: CalendarDate) -> Weekday {
    Weekday::from_chrono(d.weekday())
}

/// The kind of value `next` can search for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeValue {
    Weekday(Weekday),
    /// Day of month, 1-31.
    DayOfMonth(u8),
    Month(Month),
}

/// Earliest calendar date strictly after `rf` matching `value`.
///
/// Weekdays land within 7 days. A day-of-month is found by forward scan,
/// normally within a month or two (a 29/30/31 may skip short months); the
/// search gives up after twelve months. A month resolves to its first day
/// next time it comes around; if `rf` already lies inside the requested
/// month the following day is returned, since the month is still current.
pub fn next(value: TimeValue, rf: CalendarDate) -> Result<CalendarDate> {
    match value {
        TimeValue::Weekday(w) => {
            let ahead =
                (w.from_monday() + 7 - day_of_week(rf).from_monday() - 1) % 7 + 1;
            Ok(rf + Days::new(ahead as u64))
        }
        TimeValue::DayOfMonth(d) => {
            if !(1..=31).contains(&d) {
                return Err(Error::Calendar(format!("day-of-month out of range: {d}")));
            }
            let mut cur = rf;
            for _ in 0..400 {
                cur = cur + Days::new(1);
                if cur.day() == d as u32 {
                    return Ok(cur);
                }
            }
            Err(Error::Calendar(format!(
                "no day-of-month {d} within twelve months of {rf}"
            )))
        }
        TimeValue::Month(m) => {
            if rf.month() == m.number() {
                let tomorrow = rf + Days::new(1);
                if tomorrow.month() == m.number() {
                    return Ok(tomorrow);
                }
                return first_of(rf.year() + 1, m);
            }
            let this_year = first_of(rf.year(), m)?;
            if this_year > rf {
                Ok(this_year)
            } else {
                first_of(rf.year() + 1, m)
            }
        }
    }
}

fn first_of(year: i32, month: Month) -> Result<CalendarDate> {
    NaiveDate::from_ymd_opt(year, month.number(), 1)
        .ok_or_else(|| Error::Calendar(format!("bad year/month: {year}/{month:?}")))
}

/// Deictic time expression, resolved relative to a reference date. The
/// lexicon is a closed enumeration; adding a term is a code change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeicticTerm {
    Today,
    Tomorrow,
    DayAfterTomorrow,
    Yesterday,
    ThisWeek,
    NextWeek,
    LastWeek,
    ThisMonth,
    NextMonth,
    ThisWeekday(Weekday),
    NextWeekday(Weekday),
}

impl fmt::Display for DeicticTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeicticTerm::Today => write!(f, "today"),
            DeicticTerm::Tomorrow => write!(f, "tomorrow"),
            DeicticTerm::DayAfterTomorrow => write!(f, "day_after_tomorrow"),
            DeicticTerm::Yesterday => write!(f, "yesterday"),
            DeicticTerm::ThisWeek => write!(f, "this_week"),
            DeicticTerm::NextWeek => write!(f, "next_week"),
            DeicticTerm::LastWeek => write!(f, "last_week"),
            DeicticTerm::ThisMonth => write!(f, "this_month"),
            DeicticTerm::NextMonth => write!(f, "next_month"),
            DeicticTerm::ThisWeekday(w) => write!(f, "this_{}", weekday_name(*w)),
            DeicticTerm::NextWeekday(w) => write!(f, "next_{}", weekday_name(*w)),
        }
    }
}

fn weekday_name(w: Weekday) -> &'static str {
    ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"]
        [w.from_monday() as usize]
}

fn weekday_from_name(s: &str) -> Option<Weekday> {
    ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"]
        .iter()
        .position(|n| *n == s)
        .map(|i| Weekday::ALL[i])
}

impl FromStr for DeicticTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<DeicticTerm> {
        let term = match s {
            "today" => DeicticTerm::Today,
            "tomorrow" => DeicticTerm::Tomorrow,
            "day_after_tomorrow" => DeicticTerm::DayAfterTomorrow,
            "yesterday" => DeicticTerm::Yesterday,
            "this_week" => DeicticTerm::ThisWeek,
            "next_week" => DeicticTerm::NextWeek,
            "last_week" => DeicticTerm::LastWeek,
            "this_month" => DeicticTerm::ThisMonth,
            "next_month" => DeicticTerm::NextMonth,
            other => {
                if let Some(rest) = other.strip_prefix("this_") {
                    DeicticTerm::ThisWeekday(
                        weekday_from_name(rest)
                            .ok_or_else(|| Error::UnknownDeictic(other.to_string()))?,
                    )
                } else if let Some(rest) = other.strip_prefix("next_") {
                    DeicticTerm::NextWeekday(
                        weekday_from_name(rest)
                            .ok_or_else(|| Error::UnknownDeictic(other.to_string()))?,
                    )
                } else {
                    return Err(Error::UnknownDeictic(other.to_string()));
                }
            }
        };
        Ok(term)
    }
}

impl Serialize for DeicticTerm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DeicticTerm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Monday of the week containing `d`. Weeks run Monday-Sunday.
pub fn week_start(d: CalendarDate) -> CalendarDate {
    d - Days::new(day_of_week(d).from_monday() as u64)
}

fn fill_endpoint(ep: &mut Endpoint, d: CalendarDate) {
    ep.month = Some(Month::from_number(d.month()).unwrap());
    ep.date = Some(d.day() as u8);
    ep.weekday = Some(day_of_week(d));
}

/// Unit whose start tuple names the given day (month, date, weekday, year).
pub fn day_unit(d: CalendarDate) -> TemporalUnit {
    let mut tu = TemporalUnit { year: Some(d.year()), ..TemporalUnit::default() };
    fill_endpoint(&mut tu.start, d);
    tu
}

fn span_unit(first: CalendarDate, last: CalendarDate) -> TemporalUnit {
    let mut tu = day_unit(first);
    fill_endpoint(&mut tu.end, last);
    tu
}

fn last_of_month(d: CalendarDate) -> CalendarDate {
    let next_month = if d.month() == 12 {
        NaiveDate::from_ymd_opt(d.year() + 1, 1, 1)
    } else {
        NaiveDate::from_ymd_opt(d.year(), d.month() + 1, 1)
    };
    next_month.unwrap() - Days::new(1)
}

/// Resolve a deictic term against the reference date. Single-day terms
/// fill month/date/weekday on the start tuple only; week and month terms
/// fill both endpoints of the span.
pub fn resolve_deictic(dt: DeicticTerm, rf: CalendarDate) -> TemporalUnit {
    match dt {
        DeicticTerm::Today => day_unit(rf),
        DeicticTerm::Tomorrow => day_unit(rf + Days::new(1)),
        DeicticTerm::DayAfterTomorrow => day_unit(rf + Days::new(2)),
        DeicticTerm::Yesterday => day_unit(rf - Days::new(1)),
        DeicticTerm::ThisWeek => {
            let mon = week_start(rf);
            span_unit(mon, mon + Days::new(6))
        }
        DeicticTerm::NextWeek => {
            let mon = week_start(rf) + Days::new(7);
            span_unit(mon, mon + Days::new(6))
        }
        DeicticTerm::LastWeek => {
            let mon = week_start(rf) - Days::new(7);
            span_unit(mon, mon + Days::new(6))
        }
        DeicticTerm::ThisMonth => {
            let first = NaiveDate::from_ymd_opt(rf.year(), rf.month(), 1).unwrap();
            span_unit(first, last_of_month(first))
        }
        DeicticTerm::NextMonth => {
            let first = if rf.month() == 12 {
                NaiveDate::from_ymd_opt(rf.year() + 1, 1, 1).unwrap()
            } else {
                NaiveDate::from_ymd_opt(rf.year(), rf.month() + 1, 1).unwrap()
            };
            span_unit(first, last_of_month(first))
        }
        // this_<wd>: the weekday of the current Monday-Sunday week;
        // next_<wd>: the same weekday one week later.
        DeicticTerm::ThisWeekday(w) => {
            day_unit(week_start(rf) + Days::new(w.from_monday() as u64))
        }
        DeicticTerm::NextWeekday(w) => {
            day_unit(week_start(rf) + Days::new(7 + w.from_monday() as u64))
        }
    }
}

/// First date on or after `on_or_after` with the given month and
/// day-of-month. `None` only for day/month pairs that never occur
/// (e.g. Feb 30).
pub fn next_occurrence(month: Month, date: u8, on_or_after: CalendarDate) -> Option<CalendarDate> {
    // up to 8 years covers the leap-year gap around century boundaries
    for year in on_or_after.year()..=on_or_after.year() + 8 {
        if let Some(d) = NaiveDate::from_ymd_opt(year, month.number(), date as u32) {
            if d >= on_or_after {
                return Some(d);
            }
        }
    }
    None
}

/// Concrete date named by an endpoint's month/date pair, if any. With no
/// stated year the next occurrence on or after `on_or_after` is taken,
/// matching the forward orientation of meeting scheduling.
pub fn endpoint_date(
    ep: &Endpoint,
    year: Option<i32>,
    on_or_after: CalendarDate,
) -> Option<CalendarDate> {
    let (month, date) = (ep.month?, ep.date?);
    match year {
        Some(y) => NaiveDate::from_ymd_opt(y, month.number(), date as u32),
        None => next_occurrence(month, date, on_or_after),
    }
}

/// Highly accurate, obvious inference over one unit:
///
/// * a known month and day-of-month yield the weekday (and pin the year
///   to the next occurrence on or after the dialog date);
/// * a stated end clock time with no end date inherits the start's
///   month, date, and weekday ("from 2 to 4 on Wednesday the 19th").
///
/// Never overwrites a non-null field, and never invents an end time from
/// a start time. A stated weekday that contradicts the calendar is left
/// untouched for the critics to flag. Idempotent.
pub fn infer_trivial(tu: &TemporalUnit, dialog_date: CalendarDate) -> TemporalUnit {
    let mut out = *tu;

    let start_date = fill_weekday_for(&mut out.start, &mut out.year, dialog_date);

    // copy the start day over to an end that only states a clock time
    if out.end.month.is_none()
        && out.end.date.is_none()
        && out.end.hour_minute.is_some()
        && !out.start.is_all_null()
    {
        out.end.month = out.start.month;
        out.end.date = out.start.date;
        if out.end.weekday.is_none() {
            out.end.weekday = out.start.weekday;
        }
    }

    let end_ref = start_date.unwrap_or(dialog_date);
    let mut end_year = out.year;
    fill_weekday_for(&mut out.end, &mut end_year, end_ref);
    if out.year.is_none() {
        out.year = end_year;
    }

    out
}

/// Fill the weekday (and missing year) for one endpoint when its month
/// and date determine them. Returns the resolved date when consistent.
fn fill_weekday_for(
    ep: &mut Endpoint,
    year: &mut Option<i32>,
    on_or_after: CalendarDate,
) -> Option<CalendarDate> {
    let resolved = endpoint_date(ep, *year, on_or_after)?;
    let computed = day_of_week(resolved);
    match ep.weekday {
        None => {
            ep.weekday = Some(computed);
            year.get_or_insert(resolved.year());
            Some(resolved)
        }
        Some(stated) if stated == computed => {
            year.get_or_insert(resolved.year());
            Some(resolved)
        }
        // stated weekday contradicts the calendar: leave for critics
        Some(_) => None,
    }
}

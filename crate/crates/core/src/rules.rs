//! The temporal resolution rules. Each rule maps the current unit plus
//! context (dialog date, focus list) to a partial interpretation with a
//! certainty factor, or declines.
//!
//! Non-anaphoric rules resolve against the dialog date; anaphoric rules
//! scan the focus list strictly most-recent-first and use only the most
//! recent antecedent for which their relationship can be established.
//! Anaphoric certainties are discounted by focus-list distance. Base
//! certainties order the rules NA1 > A1 > A3 > A2 = A4 > NA2.

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::calendar::{
    day_unit, endpoint_date, next, resolve_deictic, CalendarDate, TimeValue,
};
use crate::error::{Error, Result};
use crate::normalize::NormalizedTu;
use crate::tu::{
    DiscourseEntity, FieldName, FocusList, TemporalUnit,
};

/// Identifier of the rule that produced a partial interpretation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RuleId {
    Na1,
    Na2,
    A1,
    A2,
    A3,
    A4,
}

impl std::fmt::Display for RuleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            RuleId::Na1 => "NA1",
            RuleId::Na2 => "NA2",
            RuleId::A1 => "A1",
            RuleId::A2 => "A2",
            RuleId::A3 => "A3",
            RuleId::A4 => "A4",
        };
        f.write_str(name)
    }
}

impl RuleId {
    /// A priori preference for the relation the rule establishes.
    pub fn base_certainty(self) -> f64 {
        match self {
            RuleId::Na1 => 0.9,
            RuleId::A1 => 0.8,
            RuleId::A3 => 0.6,
            RuleId::A2 | RuleId::A4 => 0.5,
            RuleId::Na2 => 0.4,
        }
    }

    /// Fixed order used as the last tie-break when interpretations score
    /// equal: NA1, A1, A3, A2, A4, NA2.
    pub fn tie_rank(self) -> usize {
        match self {
            RuleId::Na1 => 0,
            RuleId::A1 => 1,
            RuleId::A3 => 2,
            RuleId::A2 => 3,
            RuleId::A4 => 4,
            RuleId::Na2 => 5,
        }
    }
}

/// Discount applied per step of focus-list distance, with a cap that
/// keeps every anaphoric certainty positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistancePenalty {
    pub per_position: f64,
    pub cap: f64,
}

impl Default for DistancePenalty {
    fn default() -> Self {
        DistancePenalty { per_position: 0.05, cap: 0.3 }
    }
}

impl DistancePenalty {
    pub fn validate(&self) -> Result<()> {
        if self.per_position < 0.0 {
            return Err(Error::Internal("distance per_position must be >= 0".into()));
        }
        if !(0.0..0.5).contains(&self.cap) {
            return Err(Error::Internal("distance cap must be in [0, 0.5)".into()));
        }
        Ok(())
    }

    pub fn at(&self, positions_back: usize) -> f64 {
        (self.per_position * positions_back as f64).min(self.cap)
    }
}

/// Discount for an antecedent `de` on focus list `fl`: capped
/// per-position penalty, zero for the most recent entity. The entity
/// must be on the list.
pub fn distance_factor(de: &DiscourseEntity, fl: &FocusList, p: &DistancePenalty) -> Result<f64> {
    fl.distance_of(de)
        .map(|k| p.at(k))
        .ok_or_else(|| Error::Internal("distance_factor: entity not on focus list".into()))
}

/// Partial interpretation produced by one rule: a Temporal Unit fragment
/// plus the certainty the rule assigns to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Pailt {
    pub when: TemporalUnit,
    pub certainty: f64,
    pub rule: RuleId,
    /// (utterance_index, mention_index) of the antecedent used, if any.
    pub antecedent: Option<(u32, u32)>,
    /// Focus-list distance of that antecedent (0 = most recent).
    pub antecedent_distance: Option<usize>,
}

/// Context shared by every rule application for one utterance.
#[derive(Debug, Clone, Copy)]
pub struct RuleContext<'a> {
    pub dialog_date: CalendarDate,
    pub focus: &'a FocusList,
    pub distance: DistancePenalty,
}

/// The most specific non-null starting field strictly below the
/// time-of-day level, i.e. the field `next` can search for. Preference
/// within the shared day level goes to the day-of-month, which pins the
/// day more tightly than a weekday; a stated weekday still has to agree
/// through the merge check.
fn forward_field(tu: &TemporalUnit) -> Option<(FieldName, TimeValue)> {
    if let Some(d) = tu.start.date {
        return Some((FieldName::StartDate, TimeValue::DayOfMonth(d)));
    }
    if let Some(w) = tu.start.weekday {
        return Some((FieldName::StartWeekday, TimeValue::Weekday(w)));
    }
    if let Some(m) = tu.start.month {
        return Some((FieldName::StartMonth, TimeValue::Month(m)));
    }
    None
}

/// Frame unit for a found calendar date. Month-granular searches yield a
/// month-granular frame (no day fields); day-granular searches yield the
/// full day.
fn frame_unit(field: FieldName, found: CalendarDate) -> TemporalUnit {
    if field == FieldName::StartMonth {
        let mut tu = TemporalUnit { year: Some(found.year()), ..TemporalUnit::default() };
        tu.start.month = crate::tu::Month::from_number(found.month());
        tu
    } else {
        day_unit(found)
    }
}

/// Rule NA1: deictic reference. A unit carrying a deictic term resolves
/// against the dialog date and keeps its other fields.
pub fn rule_na1(ntu: &NormalizedTu, ctx: &RuleContext) -> Option<Pailt> {
    let dt = ntu.deictic?;
    let when = resolve_deictic(dt, ctx.dialog_date).merge(&ntu.tu)?;
    Some(Pailt {
        when,
        certainty: RuleId::Na1.base_certainty(),
        rule: RuleId::Na1,
        antecedent: None,
        antecedent_distance: None,
    })
}

/// Rule NA2: forward time from the dialog date. Requires some starting
/// field below the time-of-day level; the next such value after the
/// dialog date is taken, augmented with the unit's remaining fields
/// (clock time and part of day ride along through the merge).
pub fn rule_na2(ntu: &NormalizedTu, ctx: &RuleContext) -> Option<Pailt> {
    let (field, value) = forward_field(&ntu.tu)?;
    let found = next(value, ctx.dialog_date).ok()?;
    let when = frame_unit(field, found).merge(&ntu.tu)?;
    Some(Pailt {
        when,
        certainty: RuleId::Na2.base_certainty(),
        rule: RuleId::Na2,
        antecedent: None,
        antecedent_distance: None,
    })
}

fn anaphoric(rule: RuleId, when: TemporalUnit, k: usize, de: &DiscourseEntity, ctx: &RuleContext) -> Pailt {
    Pailt {
        when,
        certainty: rule.base_certainty() - ctx.distance.at(k),
        rule,
        antecedent: Some((de.utterance_index, de.mention_index)),
        antecedent_distance: Some(k),
    }
}

/// Rule A1: same time, or the current utterance is more specific. The
/// most recent antecedent no more specific than the current unit that
/// merges cleanly contributes its whole content.
pub fn rule_a1(ntu: &NormalizedTu, ctx: &RuleContext) -> Option<Pailt> {
    let cur_spec = ntu.tu.specificity()?;
    for (k, de) in ctx.focus.iter_recent() {
        let Some(de_spec) = de.tu.specificity() else { continue };
        if de_spec <= cur_spec {
            if let Some(when) = de.tu.merge(&ntu.tu) {
                return Some(anaphoric(RuleId::A1, when, k, de, ctx));
            }
        }
    }
    None
}

/// Rule A2: the current utterance evokes a larger, less specific time
/// that includes the previous one. The antecedent contributes only its
/// fields at or above the current unit's specificity.
pub fn rule_a2(ntu: &NormalizedTu, ctx: &RuleContext) -> Option<Pailt> {
    let cur_spec = ntu.tu.specificity()?;
    for (k, de) in ctx.focus.iter_recent() {
        let Some(de_spec) = de.tu.specificity() else { continue };
        if de_spec > cur_spec {
            if let Some(when) = de.tu.merge_upper(&ntu.tu) {
                return Some(anaphoric(RuleId::A2, when, k, de, ctx));
            }
        }
    }
    None
}

/// Rule A3: forward time from a previous time instead of the dialog
/// date. The antecedent is the most recent entity at most as specific as
/// the current unit that names a concrete start day. When the antecedent
/// is a multi-day span the result must fall inside it; a result outside
/// the span, or one inconsistent with the current unit, fails the rule
/// rather than continuing the scan.
pub fn rule_a3(ntu: &NormalizedTu, ctx: &RuleContext) -> Option<Pailt> {
    let (field, value) = forward_field(&ntu.tu)?;
    let cur_spec = ntu.tu.specificity()?;
    for (k, de) in ctx.focus.iter_recent() {
        let Some(de_spec) = de.tu.specificity() else { continue };
        if cur_spec < de_spec {
            continue;
        }
        let Some(rf) = endpoint_date(&de.tu.start, de.tu.year, ctx.dialog_date) else {
            // no usable frame of reference; the relationship cannot be
            // established with this entity
            continue;
        };
        let found = next(value, rf).ok()?;
        if let Some(span_end) = endpoint_date(&de.tu.end, de.tu.year, rf) {
            if found > span_end {
                return None;
            }
        }
        let when = frame_unit(field, found).merge(&ntu.tu)?;
        return Some(anaphoric(RuleId::A3, when, k, de, ctx));
    }
    None
}

/// Rule A4: modification of a previous time. The times agree above some
/// level X (the current unit's most specific level) and differ at X; the
/// antecedent contributes its fields above X, the current unit its
/// fields at and below X. Both endpoints are nulled at the affected
/// levels. Entities whose remainder conflicts are scanned past.
pub fn rule_a4(ntu: &NormalizedTu, ctx: &RuleContext) -> Option<Pailt> {
    let cur_spec = ntu.tu.specificity()?;
    for (k, de) in ctx.focus.iter_recent() {
        let Some(de_spec) = de.tu.specificity() else { continue };
        if de_spec > cur_spec {
            continue;
        }
        let mut temp = de.tu;
        for field in FieldName::ALL {
            if field.level() >= cur_spec {
                temp.set(field, None);
            }
        }
        if let Some(when) = temp.merge(&ntu.tu) {
            return Some(anaphoric(RuleId::A4, when, k, de, ctx));
        }
    }
    None
}

/// Convenience: fire every rule against one unit, in fixed order.
pub fn fire_all(ntu: &NormalizedTu, ctx: &RuleContext) -> Vec<Pailt> {
    [rule_na1, rule_na2, rule_a1, rule_a2, rule_a3, rule_a4]
        .iter()
        .filter_map(|rule| rule(ntu, ctx))
        .collect()
}

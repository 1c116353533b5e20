//! Steps 2-4 of the pipeline: apply every rule to the normalized input,
//! form all maximal compatible mergings of the partial interpretations,
//! apply plausibility critics, select the best interpretation, update
//! the focus list, and resolve input ambiguity in batches.
//!
//! Merging follows the production-system-with-a-twist architecture:
//! rather than picking the single best-firing rule, compatible rule
//! results are merged. Compatibility is a graph over the partial
//! interpretations; its maximal cliques are the maximal mergings, and
//! each merging's certainty is the sum of its members' certainties.

use serde::{Deserialize, Serialize};

use crate::calendar::{day_of_week, endpoint_date, infer_trivial, CalendarDate};
use crate::error::{Error, Result};
use crate::format::DialogFile;
use crate::normalize::{normalize, AmPmPolicy, NormalizedIlt, NormalizedTu};
use crate::rules::{self, DistancePenalty, Pailt, RuleContext, RuleId};
use crate::tu::{FocusList, TemporalUnit};

/// Plausibility critics and their (non-positive) certainty penalties.
/// `None` disables a critic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CriticConfig {
    /// Interval whose end determinately precedes its start.
    pub end_before_start: Option<f64>,
    /// Resolved date (year known) strictly before the dialog date.
    pub before_dialog_date: Option<f64>,
    /// Stated weekday inconsistent with the month/date per the calendar.
    pub weekday_mismatch: Option<f64>,
}

impl Default for CriticConfig {
    fn default() -> Self {
        CriticConfig {
            end_before_start: Some(-0.5),
            before_dialog_date: Some(-0.3),
            weekday_mismatch: Some(-0.4),
        }
    }
}

/// Which critic fired; carried on candidates for tracing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticId {
    EndBeforeStart,
    BeforeDialogDate,
    WeekdayMismatch,
}

/// Engine parameters. Loadable from a JSON config file; every field has
/// a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub distance: DistancePenalty,
    /// Best path prefixes kept per utterance while resolving ambiguity.
    pub beam: usize,
    /// Cap on partial interpretations fed to clique enumeration.
    pub pailt_limit: usize,
    /// Disabling the rules gives the evaluation lower bound: the
    /// normalized input is scored as is, first parse only.
    pub rules_enabled: bool,
    pub tense_filter_enabled: bool,
    pub am_pm: AmPmPolicy,
    pub critics: CriticConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            distance: DistancePenalty::default(),
            beam: 8,
            pailt_limit: 32,
            rules_enabled: true,
            tense_filter_enabled: true,
            am_pm: AmPmPolicy::default(),
            critics: CriticConfig::default(),
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        self.distance.validate()?;
        if self.beam == 0 {
            return Err(Error::Internal("beam must be at least 1".into()));
        }
        if self.pailt_limit == 0 || self.pailt_limit > 32 {
            return Err(Error::Internal("pailt_limit must be in 1..=32".into()));
        }
        for (name, p) in [
            ("end_before_start", self.critics.end_before_start),
            ("before_dialog_date", self.critics.before_dialog_date),
            ("weekday_mismatch", self.critics.weekday_mismatch),
        ] {
            if let Some(p) = p {
                if p > 0.0 {
                    return Err(Error::Internal(format!("critic penalty {name} must be <= 0")));
                }
            }
        }
        Ok(())
    }
}

/// Per-dialog session state. One writer per dialog; the date is fixed
/// for the whole session.
#[derive(Debug, Clone)]
pub struct DialogState {
    pub dialog_date: CalendarDate,
    pub focus: FocusList,
    pub config: EngineConfig,
}

impl DialogState {
    pub fn new(dialog_date: CalendarDate, config: EngineConfig) -> DialogState {
        DialogState { dialog_date, focus: FocusList::new(), config }
    }

    fn rule_context(&self) -> RuleContext<'_> {
        RuleContext {
            dialog_date: self.dialog_date,
            focus: &self.focus,
            distance: self.config.distance,
        }
    }
}

/// One maximal merging of partial interpretations, merged with the
/// normalized input unit: a candidate final interpretation.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub when: TemporalUnit,
    pub certainty: f64,
    /// Indices into the partial-interpretation set this merging used.
    pub members: Vec<usize>,
    pub rules: Vec<RuleId>,
    /// Closest antecedent distance among members, for tie-breaking.
    pub antecedent_distance: Option<usize>,
    pub critics_fired: Vec<CriticId>,
}

/// Apply every rule to one normalized unit. Empty when the rules are
/// disabled or the unit carries no temporal content.
pub fn apply_all_rules(ntu: &NormalizedTu, state: &DialogState) -> Vec<Pailt> {
    if !state.config.rules_enabled || ntu.is_empty() {
        return Vec::new();
    }
    rules::fire_all(ntu, &state.rule_context())
}

/// Two partial interpretations are compatible iff their units merge.
pub fn compatible(p1: &Pailt, p2: &Pailt) -> bool {
    p1.when.merge(&p2.when).is_some()
}

/// All maximal cliques of the graph on `0..n` whose edges are given by
/// `adjacent`. Bron-Kerbosch with pivoting; deterministic output order
/// (each clique ascending, cliques sorted lexicographically).
pub fn maximal_cliques(n: usize, adjacent: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    assert!(n <= 64, "clique enumeration is sized for small rule sets");
    if n == 0 {
        return Vec::new();
    }
    let adj: Vec<u64> = (0..n)
        .map(|i| {
            let mut m = 0u64;
            for j in 0..n {
                if i != j && adjacent(i, j) {
                    m |= 1 << j;
                }
            }
            m
        })
        .collect();

    fn bits(mut m: u64) -> impl Iterator<Item = usize> {
        std::iter::from_fn(move || {
            if m == 0 {
                return None;
            }
            let v = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(v)
        })
    }

    fn expand(adj: &[u64], r: u64, mut p: u64, mut x: u64, out: &mut Vec<u64>) {
        if p == 0 && x == 0 {
            out.push(r);
            return;
        }
        let pivot = bits(p | x)
            .max_by_key(|&v| (p & adj[v]).count_ones())
            .expect("p | x is non-empty");
        for v in bits(p & !adj[pivot]).collect::<Vec<_>>() {
            let bit = 1u64 << v;
            expand(adj, r | bit, p & adj[v], x & adj[v], out);
            p &= !bit;
            x |= bit;
        }
    }

    let mut masks = Vec::new();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    expand(&adj, 0, full, 0, &mut masks);

    let mut cliques: Vec<Vec<usize>> = masks.into_iter().map(|m| bits(m).collect()).collect();
    cliques.sort();
    cliques
}

/// Form every maximal merging of the partial interpretations and merge
/// each with the normalized input unit. Pairwise compatibility is what
/// the clique edges encode; a clique whose joint merge nevertheless
/// fails is discarded. Sets larger than `limit` are trimmed to the
/// highest-certainty members first (`truncated` reports this).
pub fn maximal_mergings(
    pailts: &[Pailt],
    input: &TemporalUnit,
    limit: usize,
) -> (Vec<Candidate>, bool) {
    let mut kept: Vec<usize> = (0..pailts.len()).collect();
    let truncated = pailts.len() > limit;
    if truncated {
        kept.sort_by(|&a, &b| {
            pailts[b]
                .certainty
                .total_cmp(&pailts[a].certainty)
                .then(a.cmp(&b))
        });
        kept.truncate(limit);
        kept.sort();
    }

    let cliques = maximal_cliques(kept.len(), |i, j| {
        compatible(&pailts[kept[i]], &pailts[kept[j]])
    });

    let mut out = Vec::new();
    'clique: for clique in cliques {
        let members: Vec<usize> = clique.iter().map(|&i| kept[i]).collect();
        let mut when = *input;
        for &m in &members {
            match when.merge(&pailts[m].when) {
                Some(merged) => when = merged,
                None => continue 'clique,
            }
        }
        out.push(Candidate {
            when,
            certainty: members.iter().map(|&m| pailts[m].certainty).sum(),
            rules: members.iter().map(|&m| pailts[m].rule).collect(),
            antecedent_distance: members
                .iter()
                .filter_map(|&m| pailts[m].antecedent_distance)
                .min(),
            members,
            critics_fired: Vec::new(),
        });
    }
    (out, truncated)
}

fn month_day(ep: &crate::tu::Endpoint) -> Option<(u32, u8)> {
    Some((ep.month?.number(), ep.date?))
}

fn end_before_start(tu: &TemporalUnit) -> bool {
    // compare dates when both endpoints state month+date
    if let (Some(s), Some(e)) = (month_day(&tu.start), month_day(&tu.end)) {
        if e != s {
            return e < s; // same-year reading
        }
        // same day: fall through to clock comparison
    } else {
        // dates not jointly determinable: clocks compare only when the end
        // names no day of its own (same-day reading)
        if tu.end.month.is_some() || tu.end.date.is_some() {
            return false;
        }
    }
    match (tu.start.hour_minute, tu.end.hour_minute) {
        (Some(s), Some(e)) => e < s,
        _ => false,
    }
}

fn weekday_mismatch(tu: &TemporalUnit, dialog_date: CalendarDate) -> bool {
    let check = |ep: &crate::tu::Endpoint| -> bool {
        let Some(stated) = ep.weekday else { return false };
        let Some(resolved) = endpoint_date(ep, tu.year, dialog_date) else { return false };
        day_of_week(resolved) != stated
    };
    check(&tu.start) || check(&tu.end)
}

/// Apply the critics to one candidate, lowering its certainty for each
/// implausibility found.
pub fn apply_critics(mut candidate: Candidate, state: &DialogState) -> Candidate {
    let critics = &state.config.critics;
    if let Some(penalty) = critics.end_before_start {
        if end_before_start(&candidate.when) {
            candidate.certainty += penalty;
            candidate.critics_fired.push(CriticId::EndBeforeStart);
        }
    }
    if let Some(penalty) = critics.before_dialog_date {
        if candidate.when.year.is_some() {
            if let Some(resolved) =
                endpoint_date(&candidate.when.start, candidate.when.year, state.dialog_date)
            {
                if resolved < state.dialog_date {
                    candidate.certainty += penalty;
                    candidate.critics_fired.push(CriticId::BeforeDialogDate);
                }
            }
        }
    }
    if let Some(penalty) = critics.weekday_mismatch {
        if weekday_mismatch(&candidate.when, state.dialog_date) {
            candidate.certainty += penalty;
            candidate.critics_fired.push(CriticId::WeekdayMismatch);
        }
    }
    candidate
}

/// Pick the interpretation with the highest certainty. Ties fall to the
/// candidate with fewer constituent rules, then the most recent
/// antecedent, then the fixed rule order.
pub fn select_best(mut candidates: Vec<Candidate>) -> Option<Candidate> {
    candidates.sort_by(|a, b| {
        b.certainty
            .total_cmp(&a.certainty)
            .then_with(|| a.members.len().cmp(&b.members.len()))
            .then_with(|| {
                let da = a.antecedent_distance.unwrap_or(usize::MAX);
                let db = b.antecedent_distance.unwrap_or(usize::MAX);
                da.cmp(&db)
            })
            .then_with(|| {
                let ra: Vec<usize> = {
                    let mut r: Vec<usize> = a.rules.iter().map(|r| r.tie_rank()).collect();
                    r.sort();
                    r
                };
                let rb: Vec<usize> = {
                    let mut r: Vec<usize> = b.rules.iter().map(|r| r.tie_rank()).collect();
                    r.sort();
                    r
                };
                ra.cmp(&rb)
            })
    });
    candidates.into_iter().next()
}

/// Trace of one rule contribution in the chosen interpretation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleTrace {
    pub rule: RuleId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antecedent_utterance: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antecedent_mention: Option<u32>,
}

/// One resolved Temporal Unit of the final interpretation.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedTu {
    pub tu: TemporalUnit,
    pub certainty: f64,
    pub rules: Vec<RuleTrace>,
    pub critics_fired: Vec<CriticId>,
}

/// Final interpretation of one utterance (the augmented record): the
/// resolved units and the summed certainty of their interpretations.
#[derive(Debug, Clone, PartialEq)]
pub struct Ailt {
    pub utterance_id: u32,
    pub parse_rank: u32,
    pub suppressed: bool,
    pub certainty: f64,
    pub tus: Vec<ResolvedTu>,
    /// Input errors from the chosen alternative (fail-soft: a malformed
    /// expression empties the utterance's units, never the dialog).
    pub input_errors: Vec<String>,
}

fn resolve_tu(ntu: &NormalizedTu, state: &DialogState, pailts: &[Pailt]) -> ResolvedTu {
    let (candidates, _truncated) =
        maximal_mergings(pailts, &ntu.tu, state.config.pailt_limit);
    let candidates: Vec<Candidate> =
        candidates.into_iter().map(|c| apply_critics(c, state)).collect();

    let best = select_best(candidates).unwrap_or(Candidate {
        // no rule fired: pass the normalized input through
        when: ntu.tu,
        certainty: 0.0,
        members: Vec::new(),
        rules: Vec::new(),
        antecedent_distance: None,
        critics_fired: Vec::new(),
    });

    let traces = best
        .members
        .iter()
        .map(|&m| RuleTrace {
            rule: pailts[m].rule,
            antecedent_utterance: pailts[m].antecedent.map(|(u, _)| u),
            antecedent_mention: pailts[m].antecedent.map(|(_, m)| m),
        })
        .collect();

    ResolvedTu {
        // merging may have opened new obvious inferences; run them again
        tu: infer_trivial(&best.when, state.dialog_date),
        certainty: best.certainty,
        rules: traces,
        critics_fired: best.critics_fired,
    }
}

/// Resolve one normalized utterance: apply the rules to each of its
/// units, merge and select, re-run trivial inference, and push the
/// resolved units onto the focus list. Suppressed utterances bypass both
/// the rules and the focus update.
pub fn resolve_utterance(ntu: &NormalizedIlt, state: &mut DialogState) -> Ailt {
    let suppressed = ntu.suppressed && state.config.tense_filter_enabled;
    if suppressed {
        return Ailt {
            utterance_id: ntu.utterance_id,
            parse_rank: ntu.parse_rank,
            suppressed: true,
            certainty: 0.0,
            tus: Vec::new(),
            input_errors: ntu.errors.clone(),
        };
    }

    let mut resolved = Vec::new();
    for unit in &ntu.tus {
        let pailts = apply_all_rules(unit, state);
        resolved.push(resolve_tu(unit, state, &pailts));
    }

    let tus: Vec<TemporalUnit> = resolved.iter().map(|r| r.tu).collect();
    state.focus.push_focus(ntu.utterance_id, &tus);

    Ailt {
        utterance_id: ntu.utterance_id,
        parse_rank: ntu.parse_rank,
        suppressed: false,
        certainty: resolved.iter().map(|r| r.certainty).sum(),
        tus: resolved,
        input_errors: ntu.errors.clone(),
    }
}

/// One alternative-combination path through the dialog.
#[derive(Debug, Clone)]
struct Path {
    state: DialogState,
    ailts: Vec<Ailt>,
    score: f64,
    ranks: Vec<u32>,
}

/// Resolve a whole dialog, choosing among per-utterance parse
/// alternatives in batches. Each path resolves greedily per utterance;
/// a path's score is the sum of its chosen certainties, and the best
/// `beam` prefixes survive per step. Equal scores prefer lower parse
/// ranks. With the rules disabled only the first-ranked alternative is
/// considered (the lower-bound mode).
pub fn resolve_dialog(dialog: &DialogFile, config: &EngineConfig) -> Result<Vec<Ailt>> {
    config.validate()?;

    let mut paths = vec![Path {
        state: DialogState::new(dialog.dialog_date, config.clone()),
        ailts: Vec::new(),
        score: 0.0,
        ranks: Vec::new(),
    }];

    for utterance in &dialog.utterances {
        let mut alternatives: Vec<NormalizedIlt> = utterance
            .surface_ilts()
            .iter()
            .map(|ilt| normalize(ilt, dialog.dialog_date, &config.am_pm))
            .collect();
        alternatives.sort_by_key(|n| n.parse_rank);
        if !config.rules_enabled {
            alternatives.truncate(1);
        }

        let mut next_paths = Vec::with_capacity(paths.len() * alternatives.len());
        for path in &paths {
            for alt in &alternatives {
                let mut state = path.state.clone();
                let ailt = resolve_utterance(alt, &mut state);
                let mut ranks = path.ranks.clone();
                ranks.push(alt.parse_rank);
                let mut ailts = path.ailts.clone();
                let score = path.score + ailt.certainty;
                ailts.push(ailt);
                next_paths.push(Path { state, ailts, score, ranks });
            }
        }
        next_paths.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.ranks.cmp(&b.ranks)));
        next_paths.truncate(config.beam);
        paths = next_paths;
    }

    Ok(paths.into_iter().next().map(|p| p.ailts).unwrap_or_default())
}

//! Property suites: merge algebra laws, calendar invariants against
//! independent oracles, normalization conservation, scoring symmetry,
//! and agreement-statistic invariances.

use chrono::{Datelike, Days, NaiveDate};
use proptest::prelude::*;

use tempora_core::calendar::{self, CalendarDate, TimeValue};
use tempora_core::engine;
use tempora_core::eval;
use tempora_core::normalize::{self, AmPmPolicy, SlotHint, SurfaceExpr, SurfaceIlt, Tense};
use tempora_core::rules::{self, DistancePenalty, RuleContext};
use tempora_core::tu::{
    Endpoint, FieldName, FocusList, HourMinute, Month, SpecLevel, TemporalUnit, TimeOfDay, Weekday,
};

// ---------------------------------------------------------------------------
// Independent calendar oracles (no chrono arithmetic)
// ---------------------------------------------------------------------------

/// Sakamoto's day-of-week algorithm, kept deliberately separate from the
/// implementation path under test.
fn sakamoto(y: i32, m: u32, d: u32) -> Weekday {
    const T: [i32; 12] = [0, 3, 2, 5, 0, 3, 5, 1, 4, 6, 2, 4];
    let y = if m < 3 { y - 1 } else { y };
    // Sakamoto yields 0 = Sunday
    let dow = (y + y / 4 - y / 100 + y / 400 + T[(m - 1) as usize] + d as i32).rem_euclid(7);
    [
        Weekday::Sun,
        Weekday::Mon,
        Weekday::Tue,
        Weekday::Wed,
        Weekday::Thu,
        Weekday::Fri,
        Weekday::Sat,
    ][dow as usize]
}

/// Day-by-day scan for the next date with the wanted weekday.
fn scan_next_weekday(w: Weekday, rf: CalendarDate) -> CalendarDate {
    let mut cur = rf + Days::new(1);
    while calendar::day_of_week(cur) != w {
        cur = cur + Days::new(1);
    }
    cur
}

proptest! {
    #[test]
    fn day_of_week_matches_sakamoto(y in 1900i32..=2100, ord in 0u32..365) {
        let d = NaiveDate::from_ymd_opt(y, 1, 1).unwrap() + Days::new(ord as u64);
        prop_assert_eq!(calendar::day_of_week(d), sakamoto(d.year(), d.month(), d.day()));
    }

    #[test]
    fn next_weekday_matches_linear_scan(y in 1900i32..=2100, ord in 0u32..365, w in 0usize..7) {
        let rf = NaiveDate::from_ymd_opt(y, 1, 1).unwrap() + Days::new(ord as u64);
        let w = Weekday::ALL[w];
        let got = calendar::next(TimeValue::Weekday(w), rf).unwrap();
        prop_assert_eq!(got, scan_next_weekday(w, rf));
        prop_assert!(got > rf);
        prop_assert!(got <= rf + Days::new(7));
        prop_assert_eq!(calendar::day_of_week(got), w);
    }

    #[test]
    fn next_day_of_month_is_minimal_and_bounded(y in 1900i32..=2100, ord in 0u32..365, d in 1u8..=31) {
        let rf = NaiveDate::from_ymd_opt(y, 1, 1).unwrap() + Days::new(ord as u64);
        let got = calendar::next(TimeValue::DayOfMonth(d), rf).unwrap();
        prop_assert!(got > rf);
        prop_assert_eq!(got.day(), d as u32);
        // minimality: nothing between rf and the result matches
        let mut cur = rf + Days::new(1);
        while cur < got {
            prop_assert_ne!(cur.day(), d as u32);
            cur = cur + Days::new(1);
        }
        // a 29/30/31 may skip short months, but never more than ~2 of them
        prop_assert!(got <= rf + Days::new(92));
    }

    #[test]
    fn next_month_is_forward_and_right(y in 1900i32..=2099, ord in 0u32..365, m in 0usize..12) {
        let rf = NaiveDate::from_ymd_opt(y, 1, 1).unwrap() + Days::new(ord as u64);
        let m = Month::ALL[m];
        let got = calendar::next(TimeValue::Month(m), rf).unwrap();
        prop_assert!(got > rf);
        prop_assert_eq!(got.month(), m.number());
        prop_assert!(got <= rf + Days::new(366));
    }
}

// ---------------------------------------------------------------------------
// Merge algebra
// ---------------------------------------------------------------------------

fn endpoint_strategy() -> impl Strategy<Value = Endpoint> {
    (
        prop::option::of((0usize..12).prop_map(|i| Month::ALL[i])),
        prop::option::of(1u8..=28),
        prop::option::of((0usize..7).prop_map(|i| Weekday::ALL[i])),
        prop::option::of((0u16..1440).prop_map(|m| HourMinute::new(m).unwrap())),
        prop::option::of(prop::sample::select(vec![
            TimeOfDay::Am,
            TimeOfDay::Pm,
            TimeOfDay::Morning,
            TimeOfDay::Afternoon,
            TimeOfDay::Evening,
        ])),
    )
        .prop_map(|(month, date, weekday, hour_minute, time_of_day)| Endpoint {
            month,
            date,
            weekday,
            hour_minute,
            time_of_day,
        })
}

fn tu_strategy() -> impl Strategy<Value = TemporalUnit> {
    (endpoint_strategy(), endpoint_strategy(), prop::option::of(1990i32..2100))
        .prop_map(|(start, end, year)| TemporalUnit { start, end, year })
}

proptest! {
    #[test]
    fn merge_is_commutative(a in tu_strategy(), b in tu_strategy()) {
        prop_assert_eq!(a.merge(&b), b.merge(&a));
    }

    #[test]
    fn merge_is_idempotent_with_identity(a in tu_strategy()) {
        prop_assert_eq!(a.merge(&a), Some(a));
        prop_assert_eq!(a.merge(&TemporalUnit::default()), Some(a));
    }

    #[test]
    fn merge_specificity_is_monotone(a in tu_strategy(), b in tu_strategy()) {
        if let Some(c) = a.merge(&b) {
            prop_assert_eq!(c.specificity(), a.specificity().max(b.specificity()));
        }
    }

    #[test]
    fn merge_upper_respects_specificity_bound(a in tu_strategy(), b in tu_strategy()) {
        if let Some(threshold) = b.specificity() {
            if let Some(c) = a.merge_upper(&b) {
                for field in FieldName::ALL {
                    if c.get(field).is_some() {
                        prop_assert!(field.level() <= threshold);
                    }
                }
            }
        } else {
            prop_assert_eq!(a.merge_upper(&b), None);
        }
    }

    #[test]
    fn focus_list_counts_non_null_mentions(units in prop::collection::vec(tu_strategy(), 0..6)) {
        let mut fl = FocusList::new();
        fl.push_focus(1, &units);
        let expected = units.iter().filter(|t| !t.is_all_null()).count();
        prop_assert_eq!(fl.len(), expected);
    }

    #[test]
    fn infer_trivial_is_idempotent_and_conservative(a in tu_strategy(), ord in 0u32..365) {
        let date = NaiveDate::from_ymd_opt(1993, 1, 1).unwrap() + Days::new(ord as u64);
        let once = calendar::infer_trivial(&a, date);
        prop_assert_eq!(calendar::infer_trivial(&once, date), once);
        for field in FieldName::ALL {
            if let Some(v) = a.get(field) {
                prop_assert_eq!(once.get(field), Some(v));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

fn expr_strategy() -> impl Strategy<Value = SurfaceExpr> {
    (
        prop::option::of((0usize..12).prop_map(|i| Month::ALL[i])),
        prop::option::of(1u8..=28),
        prop::option::of((0usize..7).prop_map(|i| Weekday::ALL[i])),
        prop::option::of((1u8..=12, 0u8..60)),
        prop::option::of(prop::sample::select(vec![TimeOfDay::Am, TimeOfDay::Pm])),
        prop::option::of(prop::sample::select(vec![
            TimeOfDay::Morning,
            TimeOfDay::Afternoon,
            TimeOfDay::Evening,
        ])),
    )
        .prop_map(|(month, date, weekday, clock, meridiem, word)| SurfaceExpr {
            slot: SlotHint::Start,
            month,
            date,
            weekday,
            clock_hour: clock.map(|(h, _)| h),
            minutes: clock.map(|(_, m)| m),
            meridiem,
            time_of_day_word: word,
            deictic: None,
        })
}

proptest! {
    #[test]
    fn normalization_preserves_surface_information(expr in expr_strategy()) {
        let ilt = SurfaceIlt {
            utterance_id: 1,
            speaker: "s1".into(),
            expressions: vec![expr.clone()],
            tense: Tense::Present,
            parse_rank: 1,
        };
        let date = NaiveDate::from_ymd_opt(1993, 8, 16).unwrap();
        let n = normalize::normalize(&ilt, date, &AmPmPolicy::default());
        prop_assert!(n.errors.is_empty());
        let empty_surface = expr == SurfaceExpr { slot: SlotHint::Start, ..Default::default() };
        if empty_surface {
            prop_assert!(n.tus.is_empty());
            return Ok(());
        }
        let tu = &n.tus[0].tu;
        if let Some(m) = expr.month { prop_assert_eq!(tu.start.month, Some(m)); }
        if let Some(d) = expr.date { prop_assert_eq!(tu.start.date, Some(d)); }
        if let Some(w) = expr.weekday {
            // a stated weekday is never overwritten, even when inconsistent
            prop_assert_eq!(tu.start.weekday, Some(w));
        }
        if let Some(h) = expr.clock_hour {
            let hm = tu.start.hour_minute.expect("clock hour must survive");
            prop_assert_eq!(hm.minute(), expr.minutes.unwrap_or(0) as u16);
            prop_assert_eq!(hm.hour() % 12, (h % 12) as u16);
            prop_assert!(tu.start.time_of_day.is_some());
        }

        // determinism
        let again = normalize::normalize(&ilt, date, &AmPmPolicy::default());
        prop_assert_eq!(n, again);
    }
}

// ---------------------------------------------------------------------------
// Scoring and agreement
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn score_counts_swap_symmetry(a in tu_strategy(), b in tu_strategy()) {
        let fwd = eval::score_counts(&[(a, b)]).overall();
        let rev = eval::score_counts(&[(b, a)]).overall();
        prop_assert_eq!(fwd.correct, rev.correct);
        prop_assert_eq!(fwd.incorrect, rev.incorrect);
        prop_assert_eq!(fwd.missing, rev.extra);
        prop_assert_eq!(fwd.extra, rev.missing);
        prop_assert_eq!(fwd.null_agree, rev.null_agree);
        prop_assert_eq!(fwd.total(), 10);
    }

    #[test]
    fn accuracy_precision_bounds(c in (0u64..50, 0u64..50, 0u64..50, 0u64..50, 0u64..50)) {
        let row = eval::CountRow {
            correct: c.0, incorrect: c.1, missing: c.2, extra: c.3, null_agree: c.4,
        };
        for v in [eval::accuracy(&row), eval::precision(&row)].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        if row.incorrect == 0 && row.missing == 0 && row.extra == 0 && row.total() > 0 {
            prop_assert_eq!(eval::accuracy(&row), Some(1.0));
            prop_assert_eq!(eval::precision(&row), Some(1.0));
        }
    }

    #[test]
    fn kappa_is_invariant_under_relabeling(
        labels in prop::collection::vec((0u8..4, 0u8..4, 0u8..4), 2..40),
        perm in Just([3u8, 0, 2, 1]),
    ) {
        let names = ["w", "x", "y", "z"];
        let table = eval::AgreementTable {
            raters: vec!["a".into(), "b".into(), "c".into()],
            items: labels.iter()
                .map(|(r1, r2, r3)| vec![
                    names[*r1 as usize].to_string(),
                    names[*r2 as usize].to_string(),
                    names[*r3 as usize].to_string(),
                ])
                .collect(),
        };
        let relabeled = eval::AgreementTable {
            raters: table.raters.clone(),
            items: labels.iter()
                .map(|(r1, r2, r3)| vec![
                    names[perm[*r1 as usize] as usize].to_string(),
                    names[perm[*r2 as usize] as usize].to_string(),
                    names[perm[*r3 as usize] as usize].to_string(),
                ])
                .collect(),
        };
        match (eval::kappa(&table, eval::PaMode::Item), eval::kappa(&relabeled, eval::PaMode::Item)) {
            (Ok(k1), Ok(k2)) => prop_assert!((k1 - k2).abs() < 1e-12),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "definedness differs: {a:?} vs {b:?}"),
        }
    }

    #[test]
    fn two_rater_cohen_matches_confusion_matrix(
        labels in prop::collection::vec((0u8..3, 0u8..3), 2..60),
    ) {
        let names = ["x", "y", "z"];
        let a: Vec<&str> = labels.iter().map(|(i, _)| names[*i as usize]).collect();
        let b: Vec<&str> = labels.iter().map(|(_, j)| names[*j as usize]).collect();
        // oracle: explicit 3x3 confusion matrix
        let n = labels.len() as f64;
        let mut matrix = [[0u64; 3]; 3];
        for (i, j) in &labels {
            matrix[*i as usize][*j as usize] += 1;
        }
        let po: f64 = (0..3).map(|i| matrix[i][i] as f64).sum::<f64>() / n;
        let pe: f64 = (0..3)
            .map(|i| {
                let row: u64 = (0..3).map(|j| matrix[i][j]).sum();
                let col: u64 = (0..3).map(|j| matrix[j][i]).sum();
                (row as f64 / n) * (col as f64 / n)
            })
            .sum();
        match eval::cohen_kappa(&a, &b) {
            Ok(k) => prop_assert!((k - (po - pe) / (1.0 - pe)).abs() < 1e-9),
            Err(_) => prop_assert!((1.0 - pe).abs() < 1e-9),
        }
    }
}

// ---------------------------------------------------------------------------
// Rule and engine properties
// ---------------------------------------------------------------------------

#[test]
fn closer_antecedents_never_score_lower() {
    let antecedent = TemporalUnit {
        start: Endpoint {
            month: Some(Month::Aug),
            date: Some(19),
            weekday: Some(Weekday::Thu),
            ..Default::default()
        },
        ..Default::default()
    };
    // fillers clash with the current unit's clock time, so A1 skips them
    let filler = TemporalUnit {
        start: Endpoint {
            month: Some(Month::Sep),
            date: Some(2),
            weekday: Some(Weekday::Thu),
            hour_minute: HourMinute::from_hm(15, 0),
            time_of_day: Some(TimeOfDay::Pm),
        },
        ..Default::default()
    };
    let cur = normalize::NormalizedTu {
        tu: TemporalUnit {
            start: Endpoint {
                hour_minute: HourMinute::from_hm(14, 0),
                time_of_day: Some(TimeOfDay::Pm),
                ..Default::default()
            },
            ..Default::default()
        },
        deictic: None,
    };
    let date = NaiveDate::from_ymd_opt(1993, 8, 16).unwrap();

    let mut last_cf = f64::INFINITY;
    for fillers in 0..8u32 {
        // the eligible antecedent sits behind `fillers` ineligible entities
        let mut fl = FocusList::new();
        fl.push_focus(1, &[antecedent]);
        for k in 0..fillers {
            fl.push_focus(2 + k, &[filler]);
        }
        let ctx = RuleContext { dialog_date: date, focus: &fl, distance: DistancePenalty::default() };
        let p = rules::rule_a1(&cur, &ctx).unwrap();
        assert_eq!(p.antecedent, Some((1, 0)), "must reach past the fillers");
        assert!(p.certainty <= last_cf, "distance {fillers}: {} > {last_cf}", p.certainty);
        last_cf = p.certainty;
    }
}

#[test]
#[allow(clippy::needless_range_loop)]
fn maximal_cliques_match_bruteforce_on_random_graphs() {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for _ in 0..200 {
        let n = rng.gen_range(0..=8);
        let mut adj = [[false; 8]; 8];
        for i in 0..n {
            for j in (i + 1)..n {
                let edge = rng.gen_bool(0.5);
                adj[i][j] = edge;
                adj[j][i] = edge;
            }
        }
        let got = engine::maximal_cliques(n, |i, j| adj[i][j]);
        let expected = bruteforce_maximal_cliques(n, &adj);
        assert_eq!(got, expected);
    }
}

fn bruteforce_maximal_cliques(n: usize, adj: &[[bool; 8]; 8]) -> Vec<Vec<usize>> {
    let is_clique = |mask: u32| {
        let members: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        members
            .iter()
            .enumerate()
            .all(|(a, &i)| members[a + 1..].iter().all(|&j| adj[i][j]))
    };
    let mut cliques = Vec::new();
    for mask in 1u32..(1 << n) {
        if !is_clique(mask) {
            continue;
        }
        let extendable = (0..n).any(|v| mask & (1 << v) == 0 && is_clique(mask | (1 << v)));
        if !extendable {
            cliques.push((0..n).filter(|i| mask & (1 << i) != 0).collect::<Vec<_>>());
        }
    }
    cliques.sort();
    cliques
}

#[test]
fn specificity_levels_are_totally_ordered() {
    assert!(SpecLevel::Month < SpecLevel::Day);
    assert!(SpecLevel::Day < SpecLevel::TimeOfDay);
    assert!(SpecLevel::TimeOfDay < SpecLevel::HourMinute);
    // ten fields, two slots of five, at four levels
    assert_eq!(FieldName::ALL.len(), 10);
    assert_eq!(FieldName::ALL.iter().filter(|f| f.is_start()).count(), 5);
    for f in FieldName::ALL {
        assert!(matches!(
            f.level(),
            SpecLevel::Month | SpecLevel::Day | SpecLevel::TimeOfDay | SpecLevel::HourMinute
        ));
    }
}

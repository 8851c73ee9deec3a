//! Relative-cost threshold against formation flicker.
//!
//! Walking a team's segments in order, the best template of each segment (the
//! candidate) replaces the currently adopted one (the incumbent) only when
//!
//! ```text
//! (incumbent_cost - candidate_cost) / candidate_cost > epsilon
//! ```
//!
//! where both costs are measured on the current segment: the incumbent is
//! re-fitted to the current positions so the two numbers describe the same
//! data. A zero candidate cost adopts whenever the incumbent costs anything.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::PlayerId;
use crate::matcher::{MatchResult, Matcher, TeamObservation};
use crate::segmentation::Segment;
use crate::templates::PositionLabel;

/// Re-evaluates a named formation on an observation.
pub trait Refit {
    /// `Ok(None)` when the formation cannot hold this many players.
    fn refit(&self, obs: &TeamObservation, formation: &str) -> Result<Option<MatchResult>>;
}

impl Refit for Matcher<'_> {
    fn refit(&self, obs: &TeamObservation, formation: &str) -> Result<Option<MatchResult>> {
        self.fit(obs, formation)
    }
}

/// One segment's best match, ready for filtering.
#[derive(Clone, Debug)]
pub struct SegmentMatch {
    pub segment: Segment,
    pub observation: TeamObservation,
    pub best: MatchResult,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimelineEntry {
    pub segment: Segment,
    /// Best template on this segment.
    pub candidate: MatchResult,
    /// The incumbent formation re-fitted to this segment, if there was one.
    pub incumbent: Option<MatchResult>,
    pub adopted_candidate: bool,
    /// The adopted formation differs from the previous entry's.
    pub changed: bool,
    /// The incumbent was cleared by a possession change before this entry.
    pub reset: bool,
}

impl TimelineEntry {
    fn adopted(&self) -> &MatchResult {
        if self.adopted_candidate {
            &self.candidate
        } else {
            self.incumbent.as_ref().expect("kept incumbent")
        }
    }

    pub fn adopted_formation(&self) -> &str {
        &self.adopted().formation
    }

    pub fn adopted_labels(&self) -> &BTreeMap<PlayerId, PositionLabel> {
        &self.adopted().labels
    }

    pub fn adopted_result(&self) -> &MatchResult {
        self.adopted()
    }

    /// C_t: the candidate's cost on this segment.
    pub fn candidate_cost(&self) -> f64 {
        self.candidate.cost
    }

    /// C_{t-1}: the incumbent's cost re-fitted on this segment.
    pub fn incumbent_cost(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|m| m.cost)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Timeline {
    pub entries: Vec<TimelineEntry>,
}

impl Timeline {
    pub fn formation_changes(&self) -> usize {
        self.entries.iter().filter(|e| e.changed).count()
    }

    pub fn adopted_formations(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.adopted_formation()).collect()
    }
}

/// True when the candidate beats the incumbent by more than `epsilon`, relative
/// to the candidate's cost.
pub fn improves(incumbent_cost: f64, candidate_cost: f64, epsilon: f64) -> bool {
    if candidate_cost > 0.0 {
        (incumbent_cost - candidate_cost) / candidate_cost > epsilon
    } else {
        incumbent_cost > candidate_cost
    }
}

pub fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::config(format!("change threshold must be >= 0, got {epsilon}")));
    }
    Ok(())
}

/// Folds one team-phase stream of segment matches into a timeline.
pub fn stabilize<R: Refit>(
    matches: Vec<SegmentMatch>,
    refit: &R,
    epsilon: f64,
    reset_on_possession_change: bool,
) -> Result<Timeline> {
    check_epsilon(epsilon)?;
    let mut entries: Vec<TimelineEntry> = Vec::with_capacity(matches.len());
    for m in matches {
        let previous = entries.last();
        let reset = match previous {
            Some(prev) => reset_on_possession_change && m.segment.spells.0 != prev.segment.spells.1,
            None => false,
        };
        let incumbent_name = previous.filter(|_| !reset).map(|p| p.adopted_formation().to_owned());

        let incumbent = match &incumbent_name {
            Some(name) if *name == m.best.formation => Some(m.best.clone()),
            Some(name) => refit.refit(&m.observation, name)?,
            None => None,
        };
        let adopted_candidate = match &incumbent {
            Some(inc) => inc.formation == m.best.formation || improves(inc.cost, m.best.cost, epsilon),
            None => true,
        };
        let adopted =
            if adopted_candidate { &m.best.formation } else { &incumbent.as_ref().expect("incumbent").formation };
        let changed = previous.is_some_and(|p| p.adopted_formation() != adopted);

        entries.push(TimelineEntry {
            segment: m.segment,
            candidate: m.best,
            incumbent,
            adopted_candidate,
            changed,
            reset,
        });
    }
    Ok(Timeline { entries })
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use proptest::prelude::*;

    use super::*;
    use crate::geometry::Position;
    use crate::segmentation::Phase;

    /// Costs per (segment index, formation), looked up by the segment's first frame.
    struct Table(HashMap<(u64, String), f64>);

    impl Refit for Table {
        fn refit(&self, obs: &TeamObservation, formation: &str) -> Result<Option<MatchResult>> {
            let seg = obs.players()[0].1.x as u64;
            Ok(self.0.get(&(seg, formation.to_owned())).map(|&cost| result(formation, cost)))
        }
    }

    fn result(formation: &str, cost: f64) -> MatchResult {
        MatchResult {
            formation: formation.to_owned(),
            labels: BTreeMap::from([(PlayerId::from("p"), PositionLabel::from(formation))]),
            slots: BTreeMap::new(),
            cost,
            scale: None,
        }
    }

    fn seg(i: u64, spell: u64) -> Segment {
        Segment {
            team_id: "a".into(),
            phase: Phase::Attacking,
            period: 1,
            window: i as usize,
            frame_range: (i, i),
            time_range: (i as f64, i as f64),
            frame_count: 1,
            mean_positions: BTreeMap::new(),
            player_frames: BTreeMap::new(),
            spells: (spell, spell),
        }
    }

    /// `costs[t]` lists every formation's cost on segment t.
    fn feed(costs: &[&[(&str, f64)]]) -> (Vec<SegmentMatch>, Table) {
        feed_with_spells(costs, &vec![0; costs.len()])
    }

    fn feed_with_spells(costs: &[&[(&str, f64)]], spells: &[u64]) -> (Vec<SegmentMatch>, Table) {
        let mut table = HashMap::new();
        let mut matches = Vec::new();
        for (t, row) in costs.iter().enumerate() {
            let mut best: Option<(&str, f64)> = None;
            for &(name, c) in row.iter() {
                table.insert((t as u64, name.to_owned()), c);
                if best.is_none_or(|b| c < b.1) {
                    best = Some((name, c));
                }
            }
            let (name, c) = best.unwrap();
            matches.push(SegmentMatch {
                segment: seg(t as u64, spells[t]),
                observation: TeamObservation::new(vec![("p".into(), Position::new(t as f64, 0.0))]).unwrap(),
                best: result(name, c),
            });
        }
        (matches, Table(table))
    }

    /// Four segments whose argmin runs 31222, 424, 4222, 2422 with small gaps
    /// on the second and fourth.
    const SWITCHING: [&[(&str, f64)]; 4] = [
        &[("31222", 10.0), ("424", 30.0), ("4222", 40.0), ("2422", 50.0)],
        &[("31222", 21.0), ("424", 20.0), ("4222", 40.0), ("2422", 50.0)],
        &[("31222", 40.0), ("424", 35.0), ("4222", 10.0), ("2422", 30.0)],
        &[("31222", 40.0), ("424", 45.0), ("4222", 20.5), ("2422", 20.0)],
    ];

    #[test]
    fn zero_threshold_follows_argmin() {
        let (m, table) = feed(&SWITCHING);
        let tl = stabilize(m, &table, 0.0, false).unwrap();
        assert_eq!(tl.adopted_formations(), vec!["31222", "424", "4222", "2422"]);
        assert_eq!(tl.formation_changes(), 3);
    }

    #[test]
    fn ten_percent_threshold_holds_through_small_gaps() {
        let (m, table) = feed(&SWITCHING);
        let tl = stabilize(m, &table, 0.1, false).unwrap();
        assert_eq!(tl.adopted_formations(), vec!["31222", "31222", "4222", "4222"]);
        assert_eq!(tl.formation_changes(), 1);
        // labels follow the kept template
        assert_eq!(tl.entries[1].adopted_labels()[&PlayerId::from("p")].as_str(), "31222");
        assert_eq!(tl.entries[1].incumbent_cost(), Some(21.0));
        assert_eq!(tl.entries[1].candidate_cost(), 20.0);
        assert!(!tl.entries[1].adopted_candidate);
    }

    #[test]
    fn threshold_is_strict() {
        // (5 - 4) / 4 == 0.25 exactly
        let rows: [&[(&str, f64)]; 2] = [&[("A", 1.0), ("B", 2.0)], &[("A", 5.0), ("B", 4.0)]];
        let (m, table) = feed(&rows);
        assert_eq!(stabilize(m.clone(), &table, 0.25, false).unwrap().adopted_formations(), vec!["A", "A"]);
        assert_eq!(stabilize(m, &table, 0.2499, false).unwrap().adopted_formations(), vec!["A", "B"]);
        assert!(!improves(11.0, 10.0, 0.1));
    }

    #[test]
    fn larger_threshold_can_add_changes() {
        // Only the comparison against epsilon = 0 is monotone. Here 0.1 moves
        // to B early and then sits on it, while 0.2 holds A, jumps to C, then B.
        let rows: [&[(&str, f64)]; 4] = [
            &[("A", 1.0), ("B", 2.0), ("C", 2.0)],
            &[("A", 1.15), ("B", 1.0), ("C", 2.0)],
            &[("A", 1.3), ("B", 1.05), ("C", 1.0)],
            &[("A", 1.3), ("B", 1.0), ("C", 1.3)],
        ];
        let (m, table) = feed(&rows);
        let low = stabilize(m.clone(), &table, 0.1, false).unwrap();
        let high = stabilize(m, &table, 0.2, false).unwrap();
        assert_eq!(low.adopted_formations(), vec!["A", "B", "B", "B"]);
        assert_eq!(high.adopted_formations(), vec!["A", "A", "C", "B"]);
        assert!(high.formation_changes() > low.formation_changes());
    }

    #[test]
    fn zero_cost_candidate() {
        assert!(improves(0.5, 0.0, 1e9));
        assert!(!improves(0.0, 0.0, 0.0));
    }

    #[test]
    fn negative_epsilon_rejected() {
        let (m, table) = feed(&SWITCHING);
        assert!(matches!(stabilize(m.clone(), &table, -0.1, false), Err(Error::Config(_))));
        assert!(matches!(stabilize(m, &table, f64::NAN, false), Err(Error::Config(_))));
    }

    #[test]
    fn possession_change_resets_incumbent() {
        let (m, table) = feed_with_spells(&SWITCHING, &[0, 1, 1, 2]);
        let tl = stabilize(m, &table, 0.1, true).unwrap();
        assert_eq!(tl.adopted_formations(), vec!["31222", "424", "4222", "2422"]);
        assert_eq!(tl.entries.iter().map(|e| e.reset).collect::<Vec<_>>(), vec![false, true, false, true]);
        assert!(tl.entries[1].incumbent.is_none());
    }

    #[test]
    fn unfittable_incumbent_yields_to_candidate() {
        // the incumbent is missing from the table on segment 1, as if a red card
        // changed the player count
        let rows: [&[(&str, f64)]; 2] = [&[("A", 1.0)], &[("B", 4.0)]];
        let (m, table) = feed(&rows);
        let tl = stabilize(m, &table, 10.0, false).unwrap();
        assert_eq!(tl.adopted_formations(), vec!["A", "B"]);
    }

    fn random_feed() -> impl Strategy<Value = Vec<Vec<(String, f64)>>> {
        let names = ["A", "B", "C", "D"];
        proptest::collection::vec(proptest::collection::vec(1u32..1000, 4), 1..12).prop_map(move |rows| {
            rows.into_iter()
                .map(|r| r.into_iter().enumerate().map(|(i, c)| (names[i].to_owned(), f64::from(c))).collect())
                .collect()
        })
    }

    fn as_rows(f: &[Vec<(String, f64)>]) -> Vec<Vec<(&str, f64)>> {
        f.iter().map(|r| r.iter().map(|(n, c)| (n.as_str(), *c)).collect()).collect()
    }

    proptest! {
        #[test]
        fn changes_satisfy_threshold(f in random_feed(), eps in 0.0f64..0.5) {
            let rows = as_rows(&f);
            let refs: Vec<&[(&str, f64)]> = rows.iter().map(|r| r.as_slice()).collect();
            let (m, table) = feed(&refs);
            let tl = stabilize(m, &table, eps, false).unwrap();
            prop_assert!(!tl.entries[0].changed && tl.entries[0].adopted_candidate);
            for e in &tl.entries[1..] {
                if e.changed {
                    prop_assert!(improves(e.incumbent_cost().unwrap(), e.candidate_cost(), eps));
                    prop_assert_eq!(e.adopted_formation(), e.candidate.formation.as_str());
                }
                prop_assert_eq!(e.adopted_candidate, e.adopted_formation() == e.candidate.formation);
            }
        }

        #[test]
        fn zero_threshold_without_ties_is_argmin(f in random_feed()) {
            let rows = as_rows(&f);
            let no_ties = rows.iter().all(|r| {
                let mut c: Vec<f64> = r.iter().map(|x| x.1).collect();
                c.sort_by(f64::total_cmp);
                c.windows(2).all(|w| w[0] < w[1])
            });
            prop_assume!(no_ties);
            let refs: Vec<&[(&str, f64)]> = rows.iter().map(|r| r.as_slice()).collect();
            let (m, table) = feed(&refs);
            let argmin: Vec<String> = m.iter().map(|x| x.best.formation.clone()).collect();
            let tl = stabilize(m, &table, 0.0, false).unwrap();
            prop_assert_eq!(tl.adopted_formations(), argmin.iter().map(String::as_str).collect::<Vec<_>>());
        }

        #[test]
        fn positive_threshold_never_adds_changes(f in random_feed(), eps in 0.0f64..1.0) {
            let rows = as_rows(&f);
            let refs: Vec<&[(&str, f64)]> = rows.iter().map(|r| r.as_slice()).collect();
            let (m, table) = feed(&refs);
            let base = stabilize(m.clone(), &table, 0.0, false).unwrap().formation_changes();
            prop_assert!(stabilize(m, &table, eps, false).unwrap().formation_changes() <= base);
        }
    }
}

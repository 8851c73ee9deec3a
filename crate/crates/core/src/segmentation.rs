//! Splitting a match into segments and averaging player positions over them.
//!
//! A policy cuts each period into windows (single frames, possession runs, the
//! whole period, or fixed-length windows anchored at the period start). Each
//! window yields one segment per team, or with phase splitting up to two: the
//! frames where the team had the ball and the frames where the opponent did.
//! Frames without a possession team are left out of phase-split segments.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PlayerId, Position, TeamId};
use crate::ingest::FrameRecord;
use crate::matcher::TeamObservation;

/// Full-strength outfield count.
pub const OUTFIELD_LIMIT: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Attacking,
    Defending,
    /// Phase splitting disabled.
    All,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Attacking => "attacking",
            Phase::Defending => "defending",
            Phase::All => "all",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SegmentPolicy {
    Frame,
    Possession,
    Period,
    /// Fixed window length in whole seconds.
    Duration(u32),
}

impl FromStr for SegmentPolicy {
    type Err = Error;

    /// Accepts `frame`, `possession`, `period`, or `<integer><s|m>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frame" => return Ok(SegmentPolicy::Frame),
            "possession" => return Ok(SegmentPolicy::Possession),
            "period" => return Ok(SegmentPolicy::Period),
            _ => {}
        }
        let bad =
            || Error::config(format!("bad segment policy {s:?}: expected frame, possession, period, or <n>s / <n>m"));
        let (digits, unit) = s.split_at(s.len().saturating_sub(1));
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let n: u32 = digits.parse().map_err(|_| bad())?;
        let seconds = match unit {
            "s" => Some(n),
            "m" => n.checked_mul(60),
            _ => None,
        }
        .ok_or_else(bad)?;
        if seconds == 0 {
            return Err(Error::config("segment duration must be positive"));
        }
        Ok(SegmentPolicy::Duration(seconds))
    }
}

impl fmt::Display for SegmentPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SegmentPolicy::Frame => f.write_str("frame"),
            SegmentPolicy::Possession => f.write_str("possession"),
            SegmentPolicy::Period => f.write_str("period"),
            SegmentPolicy::Duration(s) if s % 60 == 0 => write!(f, "{}m", s / 60),
            SegmentPolicy::Duration(s) => write!(f, "{s}s"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub team_id: TeamId,
    pub phase: Phase,
    pub period: u32,
    /// Window index within the period.
    pub window: usize,
    /// First and last frame id included.
    pub frame_range: (u64, u64),
    pub time_range: (f64, f64),
    /// Number of distinct frames included.
    pub frame_count: usize,
    pub mean_positions: BTreeMap<PlayerId, Position>,
    /// Frames in which each player appears.
    pub player_frames: BTreeMap<PlayerId, usize>,
    /// Possession spell counter at the first and last included frame. The
    /// counter advances whenever the team in possession changes.
    pub spells: (u64, u64),
}

impl Segment {
    /// Observation of the `kept` players, in player-id order.
    pub fn observation(&self, kept: &BTreeSet<PlayerId>) -> Result<TeamObservation> {
        let players = kept
            .iter()
            .map(|id| {
                self.mean_positions
                    .get(id)
                    .map(|p| (id.clone(), *p))
                    .ok_or_else(|| Error::invalid(format!("player {id} is not in the segment")))
            })
            .collect::<Result<Vec<_>>>()?;
        TeamObservation::new(players)
    }
}

/// Mean of a player's positions over the frames of a segment.
pub fn mean_position(positions: &[Position]) -> Result<Position> {
    if positions.is_empty() {
        return Err(Error::invalid("mean of an empty position list"));
    }
    let n = positions.len() as f64;
    let (sx, sy) = positions.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Ok(Position::new(sx / n, sy / n))
}

struct FrameGroup<'a> {
    period: u32,
    frame_id: u64,
    timestamp: f64,
    possession: Option<&'a TeamId>,
    spell: u64,
    records: &'a [FrameRecord],
}

fn group_frames(records: &[FrameRecord]) -> Result<Vec<FrameGroup<'_>>> {
    let mut groups: Vec<FrameGroup<'_>> = Vec::new();
    let mut start = 0;
    let mut spell = 0u64;
    let mut last_owner: Option<&TeamId> = None;
    while start < records.len() {
        let head = &records[start];
        let len =
            records[start..].iter().take_while(|r| r.period == head.period && r.frame_id == head.frame_id).count();
        if let Some(prev) = groups.last() {
            if (prev.period, prev.frame_id) > (head.period, head.frame_id) {
                return Err(Error::invalid("frames must be sorted by period and frame id"));
            }
            if prev.period != head.period {
                spell += 1;
                last_owner = None;
            }
        }
        let possession = records[start..start + len].iter().find_map(|r| r.possession.as_ref());
        if let Some(owner) = possession {
            if last_owner.is_some_and(|o| o != owner) {
                spell += 1;
            }
            last_owner = Some(owner);
        }
        groups.push(FrameGroup {
            period: head.period,
            frame_id: head.frame_id,
            timestamp: head.timestamp,
            possession,
            spell,
            records: &records[start..start + len],
        });
        start += len;
    }
    Ok(groups)
}

#[derive(Default)]
struct Accumulator {
    frames: usize,
    first: Option<(u64, f64, u64)>,
    last: (u64, f64, u64),
    sums: BTreeMap<PlayerId, (f64, f64, usize)>,
}

impl Accumulator {
    fn add(&mut self, group: &FrameGroup<'_>, team: &TeamId) {
        let mut any = false;
        for r in group.records.iter().filter(|r| &r.team_id == team) {
            let e = self.sums.entry(r.player_id.clone()).or_insert((0.0, 0.0, 0));
            e.0 += r.x;
            e.1 += r.y;
            e.2 += 1;
            any = true;
        }
        if any {
            self.frames += 1;
            let here = (group.frame_id, group.timestamp, group.spell);
            self.first.get_or_insert(here);
            self.last = here;
        }
    }

    fn finish(self, team_id: TeamId, phase: Phase, period: u32, window: usize) -> Option<Segment> {
        let first = self.first?;
        let mut mean_positions = BTreeMap::new();
        let mut player_frames = BTreeMap::new();
        for (id, (sx, sy, n)) in self.sums {
            mean_positions.insert(id.clone(), Position::new(sx / n as f64, sy / n as f64));
            player_frames.insert(id, n);
        }
        Some(Segment {
            team_id,
            phase,
            period,
            window,
            frame_range: (first.0, self.last.0),
            time_range: (first.1, self.last.1),
            frame_count: self.frames,
            mean_positions,
            player_frames,
            spells: (first.2, self.last.2),
        })
    }
}

/// Window key of a frame under `policy`; consecutive equal keys share a window.
fn window_key(policy: SegmentPolicy, g: &FrameGroup<'_>, index: usize, run: usize) -> (u32, i64) {
    match policy {
        SegmentPolicy::Frame => (g.period, index as i64),
        SegmentPolicy::Possession => (g.period, run as i64),
        SegmentPolicy::Period => (g.period, 0),
        SegmentPolicy::Duration(secs) => (g.period, (g.timestamp / f64::from(secs)).floor() as i64),
    }
}

/// Cuts sorted frame records into segments ordered by team, then time, then
/// phase (attacking before defending).
pub fn segment(records: &[FrameRecord], policy: SegmentPolicy, split_phase: bool) -> Result<Vec<Segment>> {
    let groups = group_frames(records)?;
    let needs_possession = split_phase || policy == SegmentPolicy::Possession;
    if needs_possession && !groups.is_empty() && groups.iter().all(|g| g.possession.is_none()) {
        return Err(Error::config(format!(
            "segmenting by {policy}{} needs possession data, but the tracking data has none",
            if split_phase { " with phase splitting" } else { "" }
        )));
    }
    let teams: BTreeSet<&TeamId> = records.iter().map(|r| &r.team_id).collect();

    // windows as ranges of frame groups
    let mut windows: Vec<(usize, std::ops::Range<usize>)> = Vec::new();
    let mut run = 0usize;
    let mut prev_key = None;
    for (i, g) in groups.iter().enumerate() {
        if i > 0 {
            let prev = &groups[i - 1];
            if prev.period != g.period || prev.possession != g.possession {
                run += 1;
            }
        }
        let key = window_key(policy, g, i, run);
        if prev_key == Some(key) {
            windows.last_mut().expect("open window").1.end = i + 1;
        } else {
            let index = match windows.last() {
                Some((w, r)) if groups[r.start].period == g.period => w + 1,
                _ => 0,
            };
            windows.push((index, i..i + 1));
            prev_key = Some(key);
        }
    }

    let phases: &[Phase] = if split_phase { &[Phase::Attacking, Phase::Defending] } else { &[Phase::All] };
    let mut out = Vec::new();
    for team in teams {
        for (index, range) in &windows {
            for &phase in phases {
                let mut acc = Accumulator::default();
                for g in &groups[range.clone()] {
                    let include = match phase {
                        Phase::All => true,
                        Phase::Attacking => g.possession == Some(team),
                        Phase::Defending => g.possession.is_some_and(|p| p != team),
                    };
                    if include {
                        acc.add(g, team);
                    }
                }
                out.extend(acc.finish(team.clone(), phase, groups[range.start].period, *index));
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubstitutionMode {
    /// Keep the players seen in the most frames.
    #[default]
    Drop,
}

impl FromStr for SubstitutionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drop" => Ok(SubstitutionMode::Drop),
            other => Err(Error::config(format!("unknown substitution mode {other:?}; only \"drop\" is supported"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Roster {
    pub kept: BTreeSet<PlayerId>,
    pub dropped: BTreeSet<PlayerId>,
    /// Fewer than `limit` players were present.
    pub under_manned: bool,
}

/// Keeps the `limit` players with the most frames; ties go to the lower id.
pub fn resolve_substitutions(player_frames: &BTreeMap<PlayerId, usize>, limit: usize) -> Roster {
    let mut ranked: Vec<(&PlayerId, usize)> = player_frames.iter().map(|(id, n)| (id, *n)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let under_manned = ranked.len() < limit;
    let split = ranked.len().min(limit);
    Roster {
        kept: ranked[..split].iter().map(|(id, _)| (*id).clone()).collect(),
        dropped: ranked[split..].iter().map(|(id, _)| (*id).clone()).collect(),
        under_manned,
    }
}

//! Tracking-file parsing and orientation.
//!
//! The tracking file is delimited text with a header row and one row per
//! player per frame:
//!
//! ```text
//! period,frame_id,timestamp,team_id,player_id,x,y,possession_team_id
//! 1,0,0.0,home,7,-12.5,3.25,home
//! ```
//!
//! `possession_team_id` may be empty (dead ball). Coordinates are metres; the
//! match metadata says whether the origin is the pitch centre or a corner.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PlayerId, TeamId};

/// One player in one frame. Coordinates are centre-origin metres.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameRecord {
    pub period: u32,
    pub frame_id: u64,
    /// Seconds from the start of the period.
    pub timestamp: f64,
    pub team_id: TeamId,
    pub player_id: PlayerId,
    pub x: f64,
    pub y: f64,
    pub possession: Option<TeamId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttackDirection {
    /// Toward +x.
    #[serde(rename = "left-to-right")]
    LeftToRight,
    #[serde(rename = "right-to-left")]
    RightToLeft,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    #[default]
    Center,
    /// Bottom-left corner; x in [0, length], y in [0, width].
    Corner,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeamMeta {
    pub id: TeamId,
    #[serde(default)]
    pub goalkeepers: BTreeSet<PlayerId>,
    /// Attack direction keyed by period number.
    pub attack: BTreeMap<String, AttackDirection>,
}

impl TeamMeta {
    pub fn direction(&self, period: u32) -> Option<AttackDirection> {
        self.attack.get(&period.to_string()).copied()
    }
}

/// Match metadata document (TOML):
///
/// ```toml
/// pitch_length = 105.0
/// pitch_width = 68.0
/// origin = "center"
///
/// [[teams]]
/// id = "home"
/// goalkeepers = ["1"]
/// attack = { 1 = "left-to-right", 2 = "right-to-left" }
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchMeta {
    pub pitch_length: f64,
    pub pitch_width: f64,
    #[serde(default)]
    pub origin: Origin,
    pub teams: Vec<TeamMeta>,
}

impl MatchMeta {
    pub fn from_toml(text: &str) -> Result<Self> {
        let meta: MatchMeta = toml::from_str(text).map_err(|e| Error::invalid(format!("metadata: {e}")))?;
        meta.validate()?;
        Ok(meta)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("metadata serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pitch_length > 0.0 && self.pitch_width > 0.0) {
            return Err(Error::invalid("pitch dimensions must be positive"));
        }
        let [a, b] = &self.teams[..] else {
            return Err(Error::invalid(format!("metadata must list exactly two teams, found {}", self.teams.len())));
        };
        if a.id == b.id {
            return Err(Error::invalid(format!("team {} listed twice", a.id)));
        }
        for team in &self.teams {
            for key in team.attack.keys() {
                if key.parse::<u32>().map_or(true, |p| p == 0) {
                    return Err(Error::invalid(format!("team {}: bad period key {key:?}", team.id)));
                }
            }
        }
        let periods: BTreeSet<&String> = a.attack.keys().chain(b.attack.keys()).collect();
        for p in periods {
            match (a.attack.get(p), b.attack.get(p)) {
                (Some(da), Some(db)) if da != db => {}
                (Some(_), Some(_)) => {
                    return Err(Error::invalid(format!("both teams attack the same way in period {p}")));
                }
                _ => return Err(Error::invalid(format!("period {p} has an attack direction for only one team"))),
            }
        }
        Ok(())
    }

    pub fn team(&self, id: &TeamId) -> Option<&TeamMeta> {
        self.teams.iter().find(|t| &t.id == id)
    }

    pub fn opponent(&self, id: &TeamId) -> Option<&TeamId> {
        self.teams.iter().map(|t| &t.id).find(|t| *t != id)
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct Row {
    period: u32,
    frame_id: u64,
    timestamp: f64,
    team_id: String,
    player_id: String,
    x: f64,
    y: f64,
    #[serde(default)]
    possession_team_id: String,
}

/// Reads a tracking file, dropping goalkeepers and sorting by (period, frame).
pub fn parse<R: Read>(input: R, meta: &MatchMeta) -> Result<Vec<FrameRecord>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let (dx, dy) = match meta.origin {
        Origin::Center => (0.0, 0.0),
        Origin::Corner => (-0.5 * meta.pitch_length, -0.5 * meta.pitch_width),
    };
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    let headers = reader.headers().map_err(|e| Error::parse(1, e.to_string()))?.clone();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let row: Row = record.deserialize(Some(&headers)).map_err(|e| Error::parse(line, e.to_string()))?;
        let team_id = TeamId::new(row.team_id);
        let Some(team) = meta.team(&team_id) else {
            return Err(Error::parse(line, format!("unknown team {team_id}")));
        };
        let possession = match row.possession_team_id.as_str() {
            "" => None,
            id => {
                let id = TeamId::from(id);
                if meta.team(&id).is_none() {
                    return Err(Error::parse(line, format!("unknown possession team {id}")));
                }
                Some(id)
            }
        };
        if row.period == 0 {
            return Err(Error::parse(line, "period numbers start at 1"));
        }
        if !(row.x.is_finite() && row.y.is_finite() && row.timestamp.is_finite()) {
            return Err(Error::parse(line, "non-finite value"));
        }
        let player_id = PlayerId::new(row.player_id);
        if !seen.insert((row.period, row.frame_id, team_id.clone(), player_id.clone())) {
            return Err(Error::parse(line, format!("duplicate row for player {player_id} in frame {}", row.frame_id)));
        }
        if team.goalkeepers.contains(&player_id) {
            continue;
        }
        records.push(FrameRecord {
            period: row.period,
            frame_id: row.frame_id,
            timestamp: row.timestamp,
            team_id,
            player_id,
            x: row.x + dx,
            y: row.y + dy,
            possession,
        });
    }
    records.sort_by_key(|r| (r.period, r.frame_id));
    Ok(records)
}

/// Writes records in the tracking-file format with centre-origin coordinates.
pub fn write_records<W: Write>(records: &[FrameRecord], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for r in records {
        writer
            .serialize(Row {
                period: r.period,
                frame_id: r.frame_id,
                timestamp: r.timestamp,
                team_id: r.team_id.to_string(),
                player_id: r.player_id.to_string(),
                x: r.x,
                y: r.y,
                possession_team_id: r.possession.as_ref().map(|t| t.to_string()).unwrap_or_default(),
            })
            .map_err(|e| Error::Io(e.into()))?;
    }
    writer.flush()?;
    Ok(())
}

/// Rotates every team-period that attacks right-to-left by 180 degrees so
/// all records attack toward +x.
pub fn normalize_orientation(mut records: Vec<FrameRecord>, meta: &MatchMeta) -> Result<Vec<FrameRecord>> {
    for r in &mut records {
        let team = meta.team(&r.team_id).ok_or_else(|| Error::config(format!("no metadata for team {}", r.team_id)))?;
        match team.direction(r.period) {
            Some(AttackDirection::LeftToRight) => {}
            Some(AttackDirection::RightToLeft) => {
                r.x = -r.x;
                r.y = -r.y;
            }
            None => {
                return Err(Error::config(format!("no attack direction for team {} in period {}", r.team_id, r.period)))
            }
        }
    }
    Ok(records)
}

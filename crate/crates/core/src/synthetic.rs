//! Seeded synthetic matches for demos, benchmarks and end-to-end tests.
//!
//! Each team moves between an attacking and a defending shape taken from the
//! template registry, depending on who has the ball, with per-player sway and
//! jitter. Raw coordinates follow the metadata attack directions (teams swap
//! ends at half time) and include goalkeepers, so the output exercises the
//! full ingest path.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{PlayerId, Position, TeamId};
use crate::ingest::{AttackDirection, FrameRecord, MatchMeta, Origin, TeamMeta};
use crate::templates::Registry;

#[derive(Clone, Debug, PartialEq)]
pub struct TeamShape {
    pub id: String,
    pub attacking: String,
    pub defending: String,
    /// First shirt number; the goalkeeper takes it, outfielders follow.
    pub first_number: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub periods: u32,
    pub period_seconds: u32,
    pub fps: u32,
    pub home: TeamShape,
    pub away: TeamShape,
    /// In the last period, replace one home outfielder at this fraction of the period.
    pub substitution_at: Option<f64>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 2022,
            periods: 2,
            period_seconds: 6 * 60,
            fps: 1,
            home: TeamShape { id: "home".into(), attacking: "3421".into(), defending: "541".into(), first_number: 1 },
            away: TeamShape { id: "away".into(), attacking: "433".into(), defending: "4411".into(), first_number: 31 },
            substitution_at: Some(0.6),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticMatch {
    pub meta: MatchMeta,
    /// Raw records: goalkeepers included, sorted by (period, frame).
    pub records: Vec<FrameRecord>,
}

struct TeamPlan {
    id: TeamId,
    keeper: PlayerId,
    outfield: Vec<PlayerId>,
    attacking: Vec<Position>,
    defending: Vec<Position>,
    sway: Vec<(f64, f64)>,
}

fn shape(registry: &Registry, name: &str) -> Result<Vec<Position>> {
    let t = registry.get(name).ok_or_else(|| Error::config(format!("unknown formation {name:?}")))?;
    if t.outfielder_count() != 10 {
        return Err(Error::config(format!("synthetic teams need 10 outfielders, {name} has {}", t.outfielder_count())));
    }
    Ok(t.slots().iter().map(|s| s.position).collect())
}

fn plan(registry: &Registry, team: &TeamShape, rng: &mut ChaCha8Rng) -> Result<TeamPlan> {
    let bounds = registry.bounds();
    let (cx, cy) = (0.5 * (bounds.min_x + bounds.max_x), 0.5 * (bounds.min_y + bounds.max_y));
    let place = |pts: Vec<Position>, shift: f64, sx: f64, sy: f64| -> Vec<Position> {
        pts.into_iter().map(|p| Position::new(shift + (p.x - cx) * sx, (p.y - cy) * sy)).collect()
    };
    Ok(TeamPlan {
        id: TeamId::new(team.id.clone()),
        keeper: PlayerId::new(team.first_number.to_string()),
        outfield: (1..=10).map(|i| PlayerId::new((team.first_number + i).to_string())).collect(),
        attacking: place(shape(registry, &team.attacking)?, 8.0, 0.6, 0.85),
        defending: place(shape(registry, &team.defending)?, -16.0, 0.42, 0.62),
        sway: (0..10).map(|_| (rng.random_range(0.0..std::f64::consts::TAU), rng.random_range(0.05..0.2))).collect(),
    })
}

/// Possession spells: alternating owners with occasional dead-ball gaps.
fn possession_script(rng: &mut ChaCha8Rng, frames: u64, fps: u32, teams: [&TeamId; 2]) -> Vec<Option<TeamId>> {
    let mut out = Vec::with_capacity(frames as usize);
    let mut owner = rng.random_range(0..2usize);
    while (out.len() as u64) < frames {
        let spell = u64::from(rng.random_range(4..20u32) * fps);
        for _ in 0..spell {
            out.push(Some(teams[owner].clone()));
        }
        if rng.random_bool(0.3) {
            for _ in 0..fps {
                out.push(None);
            }
        }
        owner = 1 - owner;
    }
    out.truncate(frames as usize);
    out
}

pub fn generate(config: &SyntheticConfig, registry: &Registry) -> Result<SyntheticMatch> {
    if config.periods == 0 || config.period_seconds == 0 || config.fps == 0 {
        return Err(Error::config("synthetic match needs positive periods, duration and frame rate"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let jitter = Normal::new(0.0, 0.6).expect("valid sigma");
    let teams = [plan(registry, &config.home, &mut rng)?, plan(registry, &config.away, &mut rng)?];
    let direction = |team: usize, period: u32| {
        if (team + period as usize) % 2 == 1 {
            AttackDirection::LeftToRight
        } else {
            AttackDirection::RightToLeft
        }
    };
    let substitute = PlayerId::new((config.home.first_number + 11).to_string());

    let frames_per_period = u64::from(config.period_seconds) * u64::from(config.fps);
    let mut records = Vec::new();
    let mut frame_id = 0u64;
    for period in 1..=config.periods {
        let script = possession_script(&mut rng, frames_per_period, config.fps, [&teams[0].id, &teams[1].id]);
        let sub_frame =
            config.substitution_at.filter(|_| period == config.periods).map(|f| (f * frames_per_period as f64) as u64);
        for (f, owner) in script.iter().enumerate() {
            let f = f as u64;
            let t = f as f64 / f64::from(config.fps);
            for (ti, team) in teams.iter().enumerate() {
                let flip = match direction(ti, period) {
                    AttackDirection::LeftToRight => 1.0,
                    AttackDirection::RightToLeft => -1.0,
                };
                let attacking = owner.as_ref() == Some(&team.id);
                let dead = owner.is_none();
                let mut push = |player: &PlayerId, p: Position| {
                    records.push(FrameRecord {
                        period,
                        frame_id,
                        timestamp: t,
                        team_id: team.id.clone(),
                        player_id: player.clone(),
                        x: flip * p.x,
                        y: flip * p.y,
                        possession: owner.clone(),
                    });
                };
                push(&team.keeper, Position::new(-47.0 + jitter.sample(&mut rng), jitter.sample(&mut rng)));
                for (i, player) in team.outfield.iter().enumerate() {
                    let target = match (attacking, dead) {
                        (_, true) => Position::new(
                            0.5 * (team.attacking[i].x + team.defending[i].x),
                            0.5 * (team.attacking[i].y + team.defending[i].y),
                        ),
                        (true, false) => team.attacking[i],
                        (false, false) => team.defending[i],
                    };
                    let (phase, speed) = team.sway[i];
                    let p = Position::new(
                        target.x + 2.0 * (phase + speed * t).sin() + jitter.sample(&mut rng),
                        target.y + 1.5 * (phase + 0.7 * speed * t).cos() + jitter.sample(&mut rng),
                    );
                    let id = if ti == 0 && i == 6 && sub_frame.is_some_and(|s| f >= s) { &substitute } else { player };
                    push(id, p);
                }
            }
            frame_id += 1;
        }
    }

    let meta = MatchMeta {
        pitch_length: 105.0,
        pitch_width: 68.0,
        origin: Origin::Center,
        teams: teams
            .iter()
            .enumerate()
            .map(|(ti, team)| TeamMeta {
                id: team.id.clone(),
                goalkeepers: BTreeSet::from([team.keeper.clone()]),
                attack: (1..=config.periods).map(|p| (p.to_string(), direction(ti, p))).collect::<BTreeMap<_, _>>(),
            })
            .collect(),
    };
    meta.validate()?;
    Ok(SyntheticMatch { meta, records })
}

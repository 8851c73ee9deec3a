//! Minimum-cost formation matching.
//!
//! Observed positions are optionally scaled onto the registry's bounding box,
//! every candidate template of the right size is solved as a linear sum
//! assignment over Euclidean distances, and the cheapest template wins.
//! Equal costs resolve to the template that comes first in the registry.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::geometry::{PlayerId, Position};
use crate::lsa::{self, CostMatrix};
use crate::templates::{FormationTemplate, PositionLabel, Registry, TemplateBounds};

/// Outfield positions of one team, attacking toward +x. Goalkeepers excluded.
#[derive(Clone, Debug, PartialEq)]
pub struct TeamObservation {
    players: Vec<(PlayerId, Position)>,
}

impl TeamObservation {
    pub fn new(players: Vec<(PlayerId, Position)>) -> Result<Self> {
        if players.is_empty() {
            return Err(Error::invalid("observation has no players"));
        }
        let mut seen = HashSet::new();
        for (id, p) in &players {
            if !seen.insert(id) {
                return Err(Error::invalid(format!("player {id} appears twice in one observation")));
            }
            if !p.is_finite() {
                return Err(Error::invalid(format!("player {id} has a non-finite position")));
            }
        }
        Ok(TeamObservation { players })
    }

    pub fn players(&self) -> &[(PlayerId, Position)] {
        &self.players
    }

    pub fn len(&self) -> usize {
        self.players.len()
    }

    pub fn is_empty(&self) -> bool {
        self.players.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = Position> + '_ {
        self.players.iter().map(|(_, p)| *p)
    }

    fn with_positions(&self, positions: impl Iterator<Item = Position>) -> Self {
        TeamObservation { players: self.players.iter().map(|(id, _)| id.clone()).zip(positions).collect() }
    }
}

/// Affine map of one axis from an observed interval onto a target interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisMap {
    src_min: f64,
    src_max: f64,
    dst_min: f64,
    dst_max: f64,
}

impl AxisMap {
    fn fit(values: impl Iterator<Item = f64>, dst_min: f64, dst_max: f64) -> Self {
        let (src_min, src_max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        AxisMap { src_min, src_max, dst_min, dst_max }
    }

    pub fn is_degenerate(&self) -> bool {
        self.src_min == self.src_max
    }

    pub fn apply(&self, v: f64) -> f64 {
        if self.is_degenerate() {
            return 0.5 * (self.dst_min + self.dst_max);
        }
        self.dst_min + (v - self.src_min) / (self.src_max - self.src_min) * (self.dst_max - self.dst_min)
    }

    /// Maps a target-space value back to observation space. A degenerate axis
    /// collapses onto the observed constant.
    pub fn invert(&self, v: f64) -> f64 {
        if self.is_degenerate() || self.dst_min == self.dst_max {
            return self.src_min;
        }
        self.src_min + (v - self.dst_min) / (self.dst_max - self.dst_min) * (self.src_max - self.src_min)
    }
}

/// Per-axis map sending an observation's bounding box onto template bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleMap {
    pub x: AxisMap,
    pub y: AxisMap,
}

impl ScaleMap {
    pub fn fit(obs: &TeamObservation, target: &TemplateBounds) -> Result<Self> {
        if obs.len() < 2 {
            return Err(Error::invalid("scaling needs at least two players"));
        }
        Ok(ScaleMap {
            x: AxisMap::fit(obs.positions().map(|p| p.x), target.min_x, target.max_x),
            y: AxisMap::fit(obs.positions().map(|p| p.y), target.min_y, target.max_y),
        })
    }

    pub fn apply(&self, p: Position) -> Position {
        Position::new(self.x.apply(p.x), self.y.apply(p.y))
    }

    pub fn invert(&self, p: Position) -> Position {
        Position::new(self.x.invert(p.x), self.y.invert(p.y))
    }
}

/// Maps the observation's tight bounding box onto `target`, axis by axis.
pub fn scale_positions(obs: &TeamObservation, target: &TemplateBounds) -> Result<TeamObservation> {
    let map = ScaleMap::fit(obs, target)?;
    Ok(obs.with_positions(obs.positions().map(|p| map.apply(p))))
}

/// Entry (i, j) is the distance from player i to slot j.
pub fn build_cost_matrix(obs: &TeamObservation, template: &FormationTemplate) -> Result<CostMatrix> {
    let n = obs.len();
    if template.outfielder_count() != n {
        return Err(Error::invalid(format!(
            "{n} players cannot be assigned to the {} slots of {}",
            template.outfielder_count(),
            template.name()
        )));
    }
    let entries = obs.positions().flat_map(|p| template.slots().iter().map(move |s| p.distance(&s.position))).collect();
    CostMatrix::from_entries(n, entries)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scaling {
    #[default]
    Enabled,
    Disabled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchResult {
    pub formation: String,
    pub labels: BTreeMap<PlayerId, PositionLabel>,
    /// Template-space position of the slot each player was assigned to.
    pub slots: BTreeMap<PlayerId, Position>,
    pub cost: f64,
    /// The observation-to-template map, when scaling was applied.
    pub scale: Option<ScaleMap>,
}

impl MatchResult {
    pub fn scaled(&self) -> bool {
        self.scale.is_some()
    }
}

/// Template registry plus the options that stay fixed across a run.
#[derive(Clone, Debug)]
pub struct Matcher<'a> {
    registry: &'a Registry,
    allowed: Option<Vec<usize>>,
    scaling: Scaling,
}

struct Prepared {
    obs: TeamObservation,
    scale: Option<ScaleMap>,
}

impl<'a> Matcher<'a> {
    pub fn new(registry: &'a Registry, scaling: Scaling) -> Self {
        Matcher { registry, allowed: None, scaling }
    }

    /// Restricts candidates to `names`. Unknown names are a configuration error.
    pub fn restricted<S: AsRef<str>>(registry: &'a Registry, names: &[S], scaling: Scaling) -> Result<Self> {
        let mut allowed = names
            .iter()
            .map(|n| {
                registry
                    .position(n.as_ref())
                    .ok_or_else(|| Error::config(format!("unknown formation {:?}", n.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        allowed.sort_unstable();
        allowed.dedup();
        Ok(Matcher { registry, allowed: Some(allowed), scaling })
    }

    pub fn registry(&self) -> &'a Registry {
        self.registry
    }

    fn candidates(&self, n: usize) -> impl Iterator<Item = &'a FormationTemplate> + '_ {
        let registry = self.registry;
        registry
            .templates()
            .iter()
            .enumerate()
            .filter(move |(i, _)| self.allowed.as_ref().is_none_or(|a| a.binary_search(i).is_ok()))
            .map(|(_, t)| t)
            .filter(move |t| t.outfielder_count() == n)
    }

    fn prepare(&self, obs: &TeamObservation) -> Result<Prepared> {
        match self.scaling {
            Scaling::Enabled => {
                let map = ScaleMap::fit(obs, &self.registry.bounds())?;
                Ok(Prepared { obs: obs.with_positions(obs.positions().map(|p| map.apply(p))), scale: Some(map) })
            }
            Scaling::Disabled => Ok(Prepared { obs: obs.clone(), scale: None }),
        }
    }

    fn solve(&self, prepared: &Prepared, template: &FormationTemplate) -> Result<MatchResult> {
        let costs = build_cost_matrix(&prepared.obs, template)?;
        let assignment = lsa::solve(&costs);
        let mut labels = BTreeMap::new();
        let mut slots = BTreeMap::new();
        for ((id, _), &col) in prepared.obs.players().iter().zip(&assignment.mapping) {
            let slot = &template.slots()[col];
            labels.insert(id.clone(), slot.label.clone());
            slots.insert(id.clone(), slot.position);
        }
        Ok(MatchResult {
            formation: template.name().to_owned(),
            labels,
            slots,
            cost: assignment.total_cost,
            scale: prepared.scale,
        })
    }

    /// The minimum-cost template for `obs` among the allowed candidates.
    pub fn best(&self, obs: &TeamObservation) -> Result<MatchResult> {
        let prepared = self.prepare(obs)?;
        let mut best: Option<MatchResult> = None;
        for template in self.candidates(obs.len()) {
            let result = self.solve(&prepared, template)?;
            if best.as_ref().is_none_or(|b| result.cost < b.cost) {
                best = Some(result);
            }
        }
        best.ok_or(Error::NoTemplate(obs.len()))
    }

    /// Assignment of `obs` to one named template, or `None` if the template
    /// has a different number of slots.
    pub fn fit(&self, obs: &TeamObservation, formation: &str) -> Result<Option<MatchResult>> {
        let template =
            self.registry.get(formation).ok_or_else(|| Error::config(format!("unknown formation {formation:?}")))?;
        if template.outfielder_count() != obs.len() {
            return Ok(None);
        }
        let prepared = self.prepare(obs)?;
        self.solve(&prepared, template).map(Some)
    }
}

pub fn match_formation(obs: &TeamObservation, registry: &Registry, scaling: Scaling) -> Result<MatchResult> {
    Matcher::new(registry, scaling).best(obs)
}

pub fn match_restricted<S: AsRef<str>>(
    obs: &TeamObservation,
    registry: &Registry,
    allowed: &[S],
    scaling: Scaling,
) -> Result<MatchResult> {
    Matcher::restricted(registry, allowed, scaling)?.best(obs)
}

//! Segments -> substitutions -> matching -> stability, per team and phase.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::TeamId;
use crate::ingest::FrameRecord;
use crate::matcher::{Matcher, Scaling};
use crate::segmentation::{
    self, resolve_substitutions, Phase, Segment, SegmentPolicy, SubstitutionMode, OUTFIELD_LIMIT,
};
use crate::stability::{self, SegmentMatch, Timeline};
use crate::templates::{Registry, OUTFIELDER_COUNTS};

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub policy: SegmentPolicy,
    pub split_phase: bool,
    pub substitutions: SubstitutionMode,
    pub epsilon: f64,
    pub change_after_possession: bool,
    pub scaling: Scaling,
    /// Segments with fewer frames are reported as skipped.
    pub min_frames: usize,
    /// Restrict matching to these formations; `None` uses the whole registry.
    pub formations: Option<Vec<String>>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            policy: SegmentPolicy::Duration(300),
            split_phase: true,
            substitutions: SubstitutionMode::Drop,
            epsilon: 0.0,
            change_after_possession: false,
            scaling: Scaling::Enabled,
            min_frames: 1,
            formations: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkippedSegment {
    pub segment: Segment,
    pub reason: String,
}

/// Timeline of one team in one phase.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamTimeline {
    pub team_id: TeamId,
    pub phase: Phase,
    pub timeline: Timeline,
    pub skipped: Vec<SkippedSegment>,
}

impl<'a> PipelineConfig {
    pub fn matcher(&self, registry: &'a Registry) -> Result<Matcher<'a>> {
        match &self.formations {
            Some(names) => Matcher::restricted(registry, names, self.scaling),
            None => Ok(Matcher::new(registry, self.scaling)),
        }
    }
}

fn process_stream(
    team_id: TeamId,
    phase: Phase,
    segments: Vec<Segment>,
    matcher: &Matcher<'_>,
    config: &PipelineConfig,
) -> Result<StreamTimeline> {
    let mut matches = Vec::with_capacity(segments.len());
    let mut skipped = Vec::new();
    for segment in segments {
        if segment.frame_count < config.min_frames {
            skipped.push(SkippedSegment { reason: format!("only {} frames", segment.frame_count), segment });
            continue;
        }
        let roster = match config.substitutions {
            SubstitutionMode::Drop => resolve_substitutions(&segment.player_frames, OUTFIELD_LIMIT),
        };
        if roster.kept.len() < OUTFIELDER_COUNTS[0] {
            skipped.push(SkippedSegment { reason: format!("only {} outfield players", roster.kept.len()), segment });
            continue;
        }
        let observation = segment.observation(&roster.kept)?;
        match matcher.best(&observation) {
            Ok(best) => matches.push(SegmentMatch { segment, observation, best }),
            Err(Error::NoTemplate(n)) => skipped
                .push(SkippedSegment { reason: format!("no allowed template for {n} outfield players"), segment }),
            Err(e) => return Err(e),
        }
    }
    let timeline = stability::stabilize(matches, matcher, config.epsilon, config.change_after_possession)?;
    Ok(StreamTimeline { team_id, phase, timeline, skipped })
}

/// Runs the whole chain on orientation-normalized records. Streams are
/// processed in parallel; output order is by team, then phase.
pub fn run(records: &[FrameRecord], registry: &Registry, config: &PipelineConfig) -> Result<Vec<StreamTimeline>> {
    stability::check_epsilon(config.epsilon)?;
    let matcher = config.matcher(registry)?;
    let segments = segmentation::segment(records, config.policy, config.split_phase)?;

    let mut streams: BTreeMap<(TeamId, Phase), Vec<Segment>> = BTreeMap::new();
    for s in segments {
        streams.entry((s.team_id.clone(), s.phase)).or_default().push(s);
    }
    streams.into_par_iter().map(|((team, phase), segs)| process_stream(team, phase, segs, &matcher, config)).collect()
}

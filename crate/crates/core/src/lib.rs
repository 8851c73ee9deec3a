//! Formation recognition and per-player position labelling from football
//! tracking data.
//!
//! Observed outfield positions are scaled into a shared template frame and
//! matched against a registry of static formation templates with an exact
//! linear sum assignment solver. The cheapest template wins and supplies the
//! position labels. Matching can run on single frames or on positions averaged
//! over segments (frames, possessions, periods, fixed windows), and a relative
//! cost threshold keeps the adopted formation from flickering between
//! near-identical templates.

pub mod error;
pub mod geometry;
pub mod ingest;
pub mod lsa;
pub mod matcher;
pub mod pipeline;
pub mod render;
pub mod segmentation;
pub mod stability;
pub mod synthetic;
pub mod templates;

pub use error::{Error, Result};
pub use geometry::{PlayerId, Position, TeamId};
pub use ingest::{AttackDirection, FrameRecord, MatchMeta, TeamMeta};
pub use lsa::{Assignment, CostMatrix};
pub use matcher::{MatchResult, Matcher, ScaleMap, Scaling, TeamObservation};
pub use pipeline::{PipelineConfig, StreamTimeline};
pub use render::{RenderSpec, ShowFlags};
pub use segmentation::{Phase, Roster, Segment, SegmentPolicy, SubstitutionMode};
pub use stability::{Timeline, TimelineEntry};
pub use templates::{FormationTemplate, PositionLabel, Registry, TemplateBounds};

//! Static SVG pitch diagrams of a matched segment.
//!
//! Drawn in pitch metres with the centre at the origin and +y up. Template
//! slots are mapped back from template space through the inverse of the
//! scaling map, so they sit where the template "expects" each player.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::Position;
use crate::matcher::MatchResult;
use crate::segmentation::Segment;

const MARGIN: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShowFlags {
    pub players: bool,
    pub slots: bool,
    pub lines: bool,
    pub labels: bool,
}

impl ShowFlags {
    pub const ALL: ShowFlags = ShowFlags { players: true, slots: true, lines: true, labels: true };
    pub const NONE: ShowFlags = ShowFlags { players: false, slots: false, lines: false, labels: false };
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderSpec {
    pub pitch_length: f64,
    pub pitch_width: f64,
    pub show: ShowFlags,
}

impl RenderSpec {
    pub fn new(pitch_length: f64, pitch_width: f64, show: ShowFlags) -> Result<Self> {
        if !(pitch_length > 0.0 && pitch_width > 0.0 && pitch_length.is_finite() && pitch_width.is_finite()) {
            return Err(Error::invalid("pitch dimensions must be positive"));
        }
        Ok(RenderSpec { pitch_length, pitch_width, show })
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Renders the labelled players of `result` at their segment positions.
/// Segment players without a label (dropped substitutes) are not drawn.
pub fn render_match(segment: &Segment, result: &MatchResult, spec: &RenderSpec) -> Result<String> {
    let mut players = Vec::with_capacity(result.labels.len());
    for (id, label) in &result.labels {
        let pos = segment
            .mean_positions
            .get(id)
            .ok_or_else(|| Error::invalid(format!("labelled player {id} is not in the segment")))?;
        let slot =
            result.slots.get(id).ok_or_else(|| Error::invalid(format!("player {id} has a label but no slot")))?;
        let slot = match &result.scale {
            Some(map) => map.invert(*slot),
            None => *slot,
        };
        players.push((id, label, *pos, slot));
    }

    let (hl, hw) = (spec.pitch_length / 2.0, spec.pitch_width / 2.0);
    // svg y grows downward
    let pt = |p: Position| (p.x, -p.y);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{:.2} {:.2} {:.2} {:.2}" data-formation="{}">"#,
        -hl - MARGIN,
        -hw - MARGIN,
        spec.pitch_length + 2.0 * MARGIN,
        spec.pitch_width + 2.0 * MARGIN,
        escape(&result.formation)
    );
    let _ = writeln!(
        svg,
        r##"<g class="pitch" fill="none" stroke="#5a5a5a" stroke-width="0.3"><rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/><line x1="0" y1="{:.2}" x2="0" y2="{:.2}"/><circle cx="0" cy="0" r="9.15"/></g>"##,
        -hl, -hw, spec.pitch_length, spec.pitch_width, -hw, hw
    );

    if spec.show.lines {
        let _ = writeln!(svg, r##"<g class="assignments" stroke="#999999" stroke-width="0.25">"##);
        for (_, _, pos, slot) in &players {
            let (x1, y1) = pt(*pos);
            let (x2, y2) = pt(*slot);
            let _ = writeln!(svg, r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}"/>"#);
        }
        let _ = writeln!(svg, "</g>");
    }
    if spec.show.slots {
        let _ = writeln!(svg, r##"<g class="slots" fill="none" stroke="#1f77b4" stroke-width="0.3">"##);
        for (_, label, _, slot) in &players {
            let (x, y) = pt(*slot);
            let _ = writeln!(
                svg,
                r#"<circle class="slot" data-label="{}" cx="{x:.2}" cy="{y:.2}" r="1.6"/>"#,
                escape(label.as_str())
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    if spec.show.players {
        let _ = writeln!(svg, r##"<g class="players" fill="#d62728" stroke="#000000" stroke-width="0.15">"##);
        for (id, _, pos, _) in &players {
            let (x, y) = pt(*pos);
            let _ = writeln!(
                svg,
                r#"<circle class="player" data-player="{}" cx="{x:.2}" cy="{y:.2}" r="1.2"/>"#,
                escape(id.as_str())
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    if spec.show.labels {
        let _ = writeln!(
            svg,
            r##"<g class="labels" font-family="sans-serif" font-size="2.2" text-anchor="middle" fill="#000000">"##
        );
        for (_, label, pos, _) in &players {
            let (x, y) = pt(*pos);
            let _ =
                writeln!(svg, r#"<text class="label" x="{x:.2}" y="{:.2}">{}</text>"#, y - 1.8, escape(label.as_str()));
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use formfit_core::ingest::write_records;
use formfit_core::lsa::{self, CostMatrix};
use formfit_core::{FrameRecord, Position, Registry};

pub const META: &str = r#"pitch_length = 105.0
pitch_width = 68.0

[[teams]]
id = "home"
goalkeepers = ["1"]
attack = { 1 = "left-to-right", 2 = "right-to-left" }

[[teams]]
id = "away"
goalkeepers = ["31"]
attack = { 1 = "right-to-left", 2 = "left-to-right" }
"#;

pub fn formfit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_formfit")).args(args).output().expect("formfit binary runs")
}

pub fn slots(name: &str) -> Vec<Position> {
    Registry::bundled()
        .get(name)
        .unwrap_or_else(|| panic!("no template {name}"))
        .slots()
        .iter()
        .map(|s| s.position)
        .collect()
}

/// `(1 - alpha) * a + alpha * b`, pairing each slot of `a` with the slot of
/// `b` it is assigned to by an optimal assignment between the two shapes.
pub fn blend(a: &str, b: &str, alpha: f64) -> Vec<Position> {
    let (pa, pb) = (slots(a), slots(b));
    let rows: Vec<Vec<f64>> = pa.iter().map(|p| pb.iter().map(|q| p.distance(q)).collect()).collect();
    let pairing = lsa::solve(&CostMatrix::from_rows(&rows).unwrap());
    pa.iter()
        .zip(&pairing.mapping)
        .map(|(p, &j)| Position::new((1.0 - alpha) * p.x + alpha * pb[j].x, (1.0 - alpha) * p.y + alpha * pb[j].y))
        .collect()
}

/// Home outfielders `2..` at `positions` (already in attacking orientation),
/// one frame per second starting at `first_frame`, with home in possession.
pub fn hold(first_frame: u64, seconds: u64, positions: &[Position]) -> Vec<FrameRecord> {
    let mut out = Vec::new();
    for f in first_frame..first_frame + seconds {
        for (i, p) in positions.iter().enumerate() {
            out.push(FrameRecord {
                period: 1,
                frame_id: f,
                timestamp: f as f64,
                team_id: "home".into(),
                player_id: (i + 2).to_string().into(),
                x: p.x * 0.6,
                y: p.y * 0.6,
                possession: Some("home".into()),
            });
        }
    }
    out
}

pub const BLEND: f64 = 0.52;

/// 24 seconds in four 6-second phases. The first and third are exact
/// templates, the others lean just past the middle toward a neighbour.
pub fn stability_fixture() -> Vec<FrameRecord> {
    let phases = [slots("31222"), blend("31222", "424", BLEND), slots("4222"), blend("4222", "2422", BLEND)];
    phases.iter().enumerate().flat_map(|(i, p)| hold(6 * i as u64, 6, p)).collect()
}

pub fn write_match(dir: &Path, records: &[FrameRecord]) -> (PathBuf, PathBuf) {
    let tracking = dir.join("tracking.csv");
    let meta = dir.join("meta.toml");
    let mut buf = Vec::new();
    write_records(records, &mut buf).unwrap();
    fs::write(&tracking, buf).unwrap();
    fs::write(&meta, META).unwrap();
    (tracking, meta)
}

/// Data rows of a CSV file, split on commas (fixtures never quote).
pub fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

pub fn bundled_match() -> (PathBuf, PathBuf) {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic");
    (root.join("tracking.csv"), root.join("meta.toml"))
}

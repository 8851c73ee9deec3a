//! Seeded inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use formfit_core::synthetic::{self, SyntheticConfig};
use formfit_core::{ingest, CostMatrix, FrameRecord, PlayerId, Position, Registry, TeamObservation};

pub fn random_matrix(n: usize, seed: u64) -> CostMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = (0..n * n).map(|_| rng.random_range(0.0..100.0)).collect();
    CostMatrix::from_entries(n, entries).expect("valid matrix")
}

/// A template's slots with uniform jitter of up to `spread` on each axis.
pub fn jittered(formation: &str, spread: f64, seed: u64) -> TeamObservation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let template = Registry::bundled().get(formation).expect("bundled formation");
    let players = template
        .slots()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let p = Position::new(
                s.position.x + rng.random_range(-spread..spread),
                s.position.y + rng.random_range(-spread..spread),
            );
            (PlayerId::new(format!("p{i:02}")), p)
        })
        .collect();
    TeamObservation::new(players).expect("distinct ids")
}

/// Orientation-normalized records of a synthetic match.
pub fn synthetic_match(minutes: u32) -> Vec<FrameRecord> {
    let config = SyntheticConfig { period_seconds: minutes * 60, ..SyntheticConfig::default() };
    let m = synthetic::generate(&config, Registry::bundled()).expect("synthetic match");
    let mut buf = Vec::new();
    ingest::write_records(&m.records, &mut buf).expect("in-memory write");
    let records = ingest::parse(&buf[..], &m.meta).expect("own output parses");
    ingest::normalize_orientation(records, &m.meta).expect("directions present")
}

//! Deterministic inputs shared by the benchmarks.

use gskor_core::gexp::{simulate_path, GBMPath, ScenarioControl, VolatilityBounds};
use gskor_core::rng::StreamId;
use gskor_core::{make_band_pair, ConstraintPair, SampledPath, TimeGrid};

pub fn grid(steps: usize) -> TimeGrid {
    TimeGrid::new(1.0, steps).expect("valid grid")
}

/// A rough oscillating input of amplitude about 3.
pub fn input(grid: TimeGrid) -> SampledPath {
    SampledPath::from_fn(grid, |t| 2.0 * (40.0 * t).sin() + (517.0 * t).cos() + t).expect("finite input")
}

pub fn band(grid: TimeGrid, half_width: f64) -> ConstraintPair {
    make_band_pair(
        SampledPath::constant(grid, -half_width).expect("finite"),
        SampledPath::constant(grid, half_width).expect("finite"),
    )
    .expect("separated band")
}

pub fn driver(grid: TimeGrid, seed: u64) -> GBMPath {
    let bounds = VolatilityBounds::new(0.25, 1.0).expect("valid bounds");
    let ctrl = ScenarioControl::constant(&grid, 1.0, &bounds).expect("admissible control");
    simulate_path(&ctrl, &grid, StreamId::new(seed, 0, 0)).expect("simulated path")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_consistent() {
        let g = grid(64);
        assert_eq!(input(g).len(), 65);
        assert_eq!(band(g, 1.0).gap(), 2.0);
        assert_eq!(driver(g, 1), driver(g, 1));
    }
}

//! Reflected paths between nonlinear, time-dependent constraints, and
//! reflected SDEs driven by G-Brownian motion.
//!
//! * [`path_core`]: grids, sampled paths and running envelopes
//! * [`constraints`]: constraint functions and their effective obstacles
//! * [`skorokhod`]: the two-sided Skorokhod map
//! * [`gexp`]: G-Brownian motion by volatility scenarios, sublinear expectation
//! * [`gsde`]: reflected G-SDEs by Picard iteration
//! * [`verify`]: randomized property campaigns

pub mod constraints;
pub mod error;
pub mod gexp;
pub mod gsde;
pub mod io;
pub mod path_core;
pub mod rng;
pub mod skorokhod;
pub mod verify;

pub use constraints::{
    inverse_at_zero, make_band_pair, make_rho_pair, validate_separation, ConstraintFunction,
    ConstraintPair, Profile,
};
pub use error::{Error, Result};
pub use path_core::{make_grid, MonotonePath, SampledPath, TimeGrid};
pub use skorokhod::{solve, solve_oracle, SkorokhodSolution};
pub use gexp::{
    scenario_family, simulate_path, sublinear_expectation, FamilySpec, GBMPath, QvMode, ScenarioControl,
    SublinearEstimate, VolatilityBounds,
};
pub use gsde::{
    ensemble_solve, solve_reflected, solve_unreflected, Coefficient, PicardOptions, ReflectedSDESolution,
    SDECoefficients,
};
pub use verify::{PropertyReport, Suite, Verdict};

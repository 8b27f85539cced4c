//! Randomized property campaigns.
//!
//! Every suite draws its trials from counter-based substreams keyed by
//! `(seed, suite, trial)`, runs them in parallel, and reduces in trial order,
//! so a report is a pure function of its arguments. Random inputs that must
//! satisfy a hypothesis are built to satisfy it (orderings are imposed by
//! adding nonnegative fields), never filtered.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::constraints::{make_band_pair, make_rho_pair, ConstraintFunction, ConstraintPair, Profile};
use crate::error::{Error, Result};
use crate::gexp::{
    scenario_family, simulate_path, sublinear_expectation, FamilySpec, GBMPath, ScenarioControl,
    VolatilityBounds,
};
use crate::gsde::{
    solve_reflected, solve_unreflected, well_formedness, Coefficient, PicardOptions, ReflectedSDESolution,
    SDECoefficients, WellFormedness,
};
use crate::path_core::{
    dual_envelope, gamma_envelope, gamma_envelope_coarse, reference, sup_distance_slices, SampledPath, TimeGrid,
};
use crate::rng::StreamId;
use crate::skorokhod::{solve, solve_oracle, SkorokhodSolution};

pub const STABILITY_SLACK: f64 = 1e-12;
pub const MONOTONICITY_SLACK: f64 = 1e-12;
pub const SDE_SLACK: f64 = 1e-8;
pub const ORACLE_TOLERANCE: f64 = 1e-9;
pub const ENVELOPE_TOLERANCE: f64 = 1e-12;
pub const SENTINEL_TOLERANCE: f64 = 1e-10;
pub const LINEAR_ITO_TOLERANCE: f64 = 1e-10;
pub const ITO_RATIO: f64 = 0.75;

const PATH_STEPS: usize = 256;
const ORACLE_STEPS: usize = 1 << 10;
const SDE_STEPS: usize = 1 << 12;
const GAMMA_FINE_LOG2: u32 = 14;
const GAMMA_LADDER_LOG2: std::ops::RangeInclusive<u32> = 4..=12;
const ITO_LADDER_LOG2: std::ops::RangeInclusive<u32> = 8..=13;
const COMPARISON_PAIRS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub property_id: String,
    pub trials: usize,
    pub failures: usize,
    /// Smallest margin by which an assertion held (negative when violated).
    pub worst_slack: f64,
    /// Seed, trial index and parameters of the worst trial.
    pub witness: Value,
    pub verdict: Verdict,
    /// Suite-specific measurements that are reported but not asserted.
    pub diagnostics: Value,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// A number stored in `diagnostics` under a JSON pointer.
    pub fn diagnostic(&self, pointer: &str) -> Option<f64> {
        self.diagnostics.pointer(pointer).and_then(Value::as_f64)
    }
}

struct Outcome {
    slack: f64,
    witness: Value,
}

impl Outcome {
    fn failed(&self) -> bool {
        !(self.slack >= 0.0)
    }

    fn error(witness: Value, err: &Error) -> Self {
        let mut witness = witness;
        witness["error"] = json!(err.to_string());
        Outcome {
            slack: f64::NEG_INFINITY,
            witness,
        }
    }
}

fn reduce(property_id: &str, outcomes: &[Outcome], diagnostics: Value) -> PropertyReport {
    let failures = outcomes.iter().filter(|o| o.failed()).count();
    let worst = outcomes
        .iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |best, (i, o)| match best {
            Some((_, s)) if !(o.slack < s) => best,
            _ => Some((i, o.slack)),
        });
    let (worst_slack, witness) = match worst {
        Some((i, s)) => (s, outcomes[i].witness.clone()),
        None => (f64::INFINITY, Value::Null),
    };
    PropertyReport {
        property_id: property_id.to_string(),
        trials: outcomes.len(),
        failures,
        worst_slack,
        witness,
        verdict: if failures == 0 { Verdict::Pass } else { Verdict::Fail },
        diagnostics,
    }
}

fn run_trials(trials: usize, f: impl Fn(usize) -> Outcome + Sync + Send) -> Vec<Outcome> {
    (0..trials).into_par_iter().map(f).collect()
}

/// Shorthand for folding a fallible trial body into an outcome.
fn settle(witness: Value, body: impl FnOnce(&mut Value) -> Result<f64>) -> Outcome {
    let mut w = witness;
    match body(&mut w) {
        Ok(slack) => Outcome { slack, witness: w },
        Err(e) => Outcome::error(w, &e),
    }
}

mod gen {
    use super::*;

    pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
        StandardNormal.sample(rng)
    }

    /// `start + vol W_t` sampled on the grid.
    pub fn walk(rng: &mut ChaCha8Rng, grid: &TimeGrid, start: f64, vol: f64) -> Vec<f64> {
        let sd = vol * grid.dt().sqrt();
        let mut v = Vec::with_capacity(grid.len());
        let mut acc = start;
        v.push(acc);
        for _ in 0..grid.steps() {
            acc += sd * normal(rng);
            v.push(acc);
        }
        v
    }

    /// A walk with start and volatility drawn uniformly from the ranges.
    pub fn random_walk(
        rng: &mut ChaCha8Rng,
        grid: &TimeGrid,
        start: std::ops::Range<f64>,
        vol: std::ops::Range<f64>,
    ) -> Vec<f64> {
        let (start, vol) = (rng.random_range(start), rng.random_range(vol));
        walk(rng, grid, start, vol)
    }

    /// A random field with values in `[0, 1]`.
    pub fn unit_field(rng: &mut ChaCha8Rng, grid: &TimeGrid) -> Vec<f64> {
        let start = rng.random_range(-1.5..1.5);
        walk(rng, grid, start, 1.5)
            .into_iter()
            .map(|w| 0.5 * (1.0 + w.tanh()))
            .collect()
    }

    /// Nondecreasing from 0: a random drift, an optional linear part and a
    /// few jumps.
    pub fn nondecreasing(rng: &mut ChaCha8Rng, grid: &TimeGrid) -> (Vec<f64>, &'static str) {
        let kind = rng.random_range(0..4);
        let n = grid.len();
        let mut v = vec![0.0; n];
        match kind {
            0 => return (v, "zero"),
            1 => {
                for (i, t) in grid.nodes().enumerate() {
                    v[i] = t;
                }
                return (v, "linear");
            }
            _ => {}
        }
        let rate = rng.random_range(0.0..2.0);
        let jumps = rng.random_range(0..4);
        let jump_at: Vec<usize> = (0..jumps).map(|_| rng.random_range(1..n)).collect();
        let dt = grid.dt();
        for i in 1..n {
            let mut inc = rate * normal(rng).abs() * dt;
            if jump_at.contains(&i) {
                inc += rng.random_range(0.0..0.5);
            }
            v[i] = v[i - 1] + inc;
        }
        (v, if kind == 2 { "drift" } else { "drift+jumps" })
    }

    #[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
    #[serde(rename_all = "lowercase")]
    pub enum Kind {
        Band,
        Rho,
        Cubic,
    }

    pub fn kind(rng: &mut ChaCha8Rng, allow_cubic: bool) -> Kind {
        match rng.random_range(0..if allow_cubic { 3 } else { 2 }) {
            0 => Kind::Band,
            1 => Kind::Rho,
            _ => Kind::Cubic,
        }
    }

    /// Builds the pair `r = p(x) − α_t`, `l = p(x) − β_t` for the profile `p`
    /// of `kind`.
    pub fn pair(kind: Kind, grid: &TimeGrid, alpha: Vec<f64>, beta: Vec<f64>) -> Result<ConstraintPair> {
        let alpha = SampledPath::new(*grid, alpha)?;
        let beta = SampledPath::new(*grid, beta)?;
        match kind {
            Kind::Band => make_band_pair(alpha, beta),
            Kind::Rho => make_rho_pair(alpha, beta),
            Kind::Cubic => ConstraintPair::from_functions(
                ConstraintFunction::shifted(Profile::Cubic, alpha)?,
                ConstraintFunction::shifted(Profile::Cubic, beta)?,
            ),
        }
    }

    /// Parameters `(α, β)` with `β − α ≥ gap > 0`.
    pub fn separated(rng: &mut ChaCha8Rng, grid: &TimeGrid) -> (Vec<f64>, Vec<f64>) {
        let centre = rng.random_range(-1.0..0.5);
        let vol = rng.random_range(0.0..1.0);
        let alpha = walk(rng, grid, centre, vol);
        let base = rng.random_range(0.3..1.5);
        let spread = walk(rng, grid, 0.0, 0.5);
        let beta = alpha
            .iter()
            .zip(&spread)
            .map(|(a, s)| a + base + s.abs())
            .collect();
        (alpha, beta)
    }

    pub fn min_gap(alpha: &[f64], beta: &[f64]) -> f64 {
        alpha
            .iter()
            .zip(beta)
            .map(|(a, b)| b - a)
            .fold(f64::INFINITY, f64::min)
    }

    /// A smooth, time-dependent obstacle parameter.
    pub fn wave(rng: &mut ChaCha8Rng, grid: &TimeGrid, centre: f64, amplitude: f64) -> Vec<f64> {
        let freq = rng.random_range(0.5..3.0);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        grid.nodes()
            .map(|t| centre + amplitude * (std::f64::consts::TAU * freq * t + phase).sin())
            .collect()
    }

    pub fn control(rng: &mut ChaCha8Rng, grid: &TimeGrid, bounds: &VolatilityBounds) -> Result<ScenarioControl> {
        if rng.random_bool(0.5) {
            let v = rng.random_range(bounds.sigma2_min()..=bounds.sigma2_max());
            ScenarioControl::constant(grid, v, bounds)
        } else {
            let switches = rng.random_range(1..8);
            let fam = scenario_family(bounds, FamilySpec::BangBang { switches }, grid)?;
            Ok(fam[rng.random_range(0..2)].clone())
        }
    }
}

fn default_bounds() -> VolatilityBounds {
    VolatilityBounds::new(0.25, 1.0).expect("valid bounds")
}

fn grid(steps: usize) -> TimeGrid {
    TimeGrid::new(1.0, steps).expect("valid grid")
}

fn trial_rng(seed: u64, suite: Suite, trial: usize) -> ChaCha8Rng {
    StreamId::new(seed, suite as usize, trial).rng()
}

fn shifted(s: &[f64], c: f64) -> Vec<f64> {
    s.iter().map(|v| v + c).collect()
}

/// `sup|k¹ − k²| ≤ sup|s¹ − s²| + sup_t (|Δlower_t| ∨ |Δupper_t|)`.
pub fn check_stability(trials: usize, seed: u64) -> PropertyReport {
    let g = grid(PATH_STEPS);
    let outcomes = run_trials(trials, |trial| {
        let mut rng = trial_rng(seed, Suite::Stability, trial);
        settle(json!({"seed": seed, "trial": trial}), |w| {
            let s1 = gen::random_walk(&mut rng, &g, -1.5..1.5, 0.5..3.0);
            let mode = rng.random_range(0..3);
            let s2 = match mode {
                0 => s1.clone(),
                1 => shifted(&s1, rng.random_range(-0.5..0.5)),
                _ => {
                    let start = rng.random_range(-0.3..0.3);
                    let d = gen::walk(&mut rng, &g, start, 0.5);
                    s1.iter().zip(&d).map(|(a, b)| a + b).collect()
                }
            };
            let (a1, b1) = gen::separated(&mut rng, &g);
            let third = gen::min_gap(&a1, &b1) / 3.0;
            let (a2, b2) = if mode == 0 && rng.random_bool(0.5) {
                (a1.clone(), b1.clone())
            } else {
                let da = gen::unit_field(&mut rng, &g);
                let db = gen::unit_field(&mut rng, &g);
                (
                    a1.iter().zip(&da).map(|(a, u)| a + third * (2.0 * u - 1.0)).collect(),
                    b1.iter().zip(&db).map(|(b, u)| b + third * (2.0 * u - 1.0)).collect(),
                )
            };
            let (k1, k2) = (gen::kind(&mut rng, true), gen::kind(&mut rng, true));
            *w = json!({"seed": seed, "trial": trial, "mode": mode, "kinds": [k1, k2]});
            let p1 = gen::pair(k1, &g, a1, b1)?;
            let p2 = gen::pair(k2, &g, a2, b2)?;
            let x1 = solve(&SampledPath::new(g, s1.clone())?, &p1)?;
            let x2 = solve(&SampledPath::new(g, s2.clone())?, &p2)?;
            let lhs = sup_distance_slices(x1.k.values(), x2.k.values());
            let obstacle = sup_distance_slices(p1.lower().values(), p2.lower().values())
                .max(sup_distance_slices(p1.upper().values(), p2.upper().values()));
            let rhs = sup_distance_slices(&s1, &s2) + obstacle;
            w["lhs"] = json!(lhs);
            w["rhs"] = json!(rhs);
            Ok(rhs + STABILITY_SLACK - lhs)
        })
    });
    reduce("stability", &outcomes, json!({"steps": PATH_STEPS, "slack": STABILITY_SLACK}))
}

/// Tighter obstacles (`lower¹ ≤ lower²`, `upper¹ ≥ upper²`) never push less:
/// `k_r² ≥ k_r¹` and `k_l² ≥ k_l¹`.
pub fn check_constraint_monotonicity(trials: usize, seed: u64) -> PropertyReport {
    let g = grid(PATH_STEPS);
    let outcomes = run_trials(trials, |trial| {
        let mut rng = trial_rng(seed, Suite::ConstraintMonotonicity, trial);
        settle(json!({"seed": seed, "trial": trial}), |w| {
            let s = gen::random_walk(&mut rng, &g, -1.5..1.5, 0.5..3.0);
            let (a1, b1) = gen::separated(&mut rng, &g);
            let third = gen::min_gap(&a1, &b1) / 3.0;
            let identical = rng.random_bool(0.1);
            let (a2, b2): (Vec<f64>, Vec<f64>) = if identical {
                (a1.clone(), b1.clone())
            } else {
                let ua = gen::unit_field(&mut rng, &g);
                let ub = gen::unit_field(&mut rng, &g);
                (
                    a1.iter().zip(&ua).map(|(a, u)| a + third * u).collect(),
                    b1.iter().zip(&ub).map(|(b, u)| b - third * u).collect(),
                )
            };
            let kind = gen::kind(&mut rng, true);
            *w = json!({"seed": seed, "trial": trial, "kind": kind, "identical": identical});
            let s = SampledPath::new(g, s)?;
            let x1 = solve(&s, &gen::pair(kind, &g, a1, b1)?)?;
            let x2 = solve(&s, &gen::pair(kind, &g, a2, b2)?)?;
            let slack = ordered_slack(x1.k_r.values(), x2.k_r.values())
                .min(ordered_slack(x1.k_l.values(), x2.k_l.values()));
            Ok(slack + MONOTONICITY_SLACK)
        })
    });
    reduce(
        "constraint-monotonicity",
        &outcomes,
        json!({"steps": PATH_STEPS, "slack": MONOTONICITY_SLACK}),
    )
}

/// `min_i (hi_i − lo_i)`.
fn ordered_slack(lo: &[f64], hi: &[f64]) -> f64 {
    lo.iter().zip(hi).map(|(l, h)| h - l).fold(f64::INFINITY, f64::min)
}

/// Both sandwich chains for `s¹ = s² + ν` with starting values `c₀¹`, `c₀²`:
///
/// ```text
/// k_r¹ − (c₀² − c₀¹)⁺ ≤ k_r² ≤ k_r¹ + ν + (c₀¹ − c₀²)⁺
/// k_l² − (c₀² − c₀¹)⁺ ≤ k_l¹ ≤ k_l² + ν + (c₀¹ − c₀²)⁺
/// ```
pub fn check_input_monotonicity(trials: usize, seed: u64) -> PropertyReport {
    let g = grid(PATH_STEPS);
    let outcomes = run_trials(trials, |trial| {
        let mut rng = trial_rng(seed, Suite::InputMonotonicity, trial);
        settle(json!({"seed": seed, "trial": trial}), |w| {
            let vol = rng.random_range(0.5..3.0);
            let s2 = gen::walk(&mut rng, &g, 0.0, vol);
            let (nu, nu_kind) = gen::nondecreasing(&mut rng, &g);
            let s1: Vec<f64> = s2.iter().zip(&nu).map(|(a, b)| a + b).collect();
            let c1 = rng.random_range(-2.0..2.0);
            let c2 = if rng.random_bool(0.2) { c1 } else { rng.random_range(-2.0..2.0) };
            let (a, b) = gen::separated(&mut rng, &g);
            let kind = gen::kind(&mut rng, true);
            *w = json!({"seed": seed, "trial": trial, "kind": kind, "nu": nu_kind, "c1": c1, "c2": c2});
            let pair = gen::pair(kind, &g, a, b)?;
            let x1 = solve(&SampledPath::new(g, shifted(&s1, c1))?, &pair)?;
            let x2 = solve(&SampledPath::new(g, shifted(&s2, c2))?, &pair)?;
            Ok(input_chain_slack(&x1, &x2, &nu, c1, c2) + MONOTONICITY_SLACK)
        })
    });
    reduce(
        "input-monotonicity",
        &outcomes,
        json!({"steps": PATH_STEPS, "slack": MONOTONICITY_SLACK}),
    )
}

fn input_chain_slack(x1: &SkorokhodSolution, x2: &SkorokhodSolution, nu: &[f64], c1: f64, c2: f64) -> f64 {
    let down = (c2 - c1).max(0.0);
    let up = (c1 - c2).max(0.0);
    let (r1, r2) = (x1.k_r.values(), x2.k_r.values());
    let (l1, l2) = (x1.k_l.values(), x2.k_l.values());
    let mut slack = f64::INFINITY;
    for i in 0..nu.len() {
        slack = slack
            .min(r2[i] - (r1[i] - down))
            .min(r1[i] + nu[i] + up - r2[i])
            .min(l1[i] - (l2[i] - down))
            .min(l2[i] + nu[i] + up - l1[i]);
    }
    slack
}

/// `solve` against the projection oracle on random walks and random bands.
pub fn check_oracle_equivalence(trials: usize, seed: u64) -> PropertyReport {
    let g = grid(ORACLE_STEPS);
    let outcomes = run_trials(trials, |trial| {
        let mut rng = trial_rng(seed, Suite::OracleEquivalence, trial);
        settle(json!({"seed": seed, "trial": trial}), |_| {
            let s = gen::random_walk(&mut rng, &g, -2.0..2.0, 0.5..4.0);
            let (a, b) = gen::separated(&mut rng, &g);
            let pair = gen::pair(gen::Kind::Band, &g, a, b)?;
            let s = SampledPath::new(g, s)?;
            let fast = solve(&s, &pair)?;
            let slow = solve_oracle(&s, &pair)?;
            let d = sup_distance_slices(fast.x.values(), slow.x.values())
                .max(sup_distance_slices(fast.k.values(), slow.k.values()))
                .max(sup_distance_slices(fast.k_r.values(), slow.k_r.values()))
                .max(sup_distance_slices(fast.k_l.values(), slow.k_l.values()));
            Ok(ORACLE_TOLERANCE - d)
        })
    });
    reduce(
        "oracle-equivalence",
        &outcomes,
        json!({"steps": ORACLE_STEPS, "tolerance": ORACLE_TOLERANCE}),
    )
}

/// Production envelopes against the direct quadratic constructions.
pub fn check_envelope_equivalence(trials: usize, seed: u64) -> PropertyReport {
    let g = grid(PATH_STEPS);
    let outcomes = run_trials(trials, |trial| {
        let mut rng = trial_rng(seed, Suite::EnvelopeEquivalence, trial);
        settle(json!({"seed": seed, "trial": trial}), |_| {
            let s = gen::random_walk(&mut rng, &g, -1.0..1.0, 0.5..4.0);
            let (a, b) = gen::separated(&mut rng, &g);
            let phi = SampledPath::new(g, b.iter().zip(&s).map(|(u, v)| u - v).collect())?;
            let psi = SampledPath::new(g, a.iter().zip(&s).map(|(u, v)| u - v).collect())?;
            let (a, b) = (SampledPath::new(g, a)?, SampledPath::new(g, b)?);
            let factor = 1 << rng.random_range(0..6);
            let d = sup_distance_slices(
                dual_envelope(&phi, &psi)?.values(),
                reference::dual_envelope_direct(&phi, &psi)?.values(),
            )
            .max(sup_distance_slices(
                gamma_envelope(&a, &b)?.values(),
                reference::gamma_envelope_direct(&a, &b)?.values(),
            ))
            .max(sup_distance_slices(
                gamma_envelope_coarse(&a, &b, factor)?.values(),
                reference::gamma_envelope_coarse_direct(&a, &b, factor)?.values(),
            ));
            Ok(ENVELOPE_TOLERANCE - d)
        })
    });
    reduce(
        "envelope-equivalence",
        &outcomes,
        json!({"steps": PATH_STEPS, "tolerance": ENVELOPE_TOLERANCE}),
    )
}

/// Well-formedness tallies carried by the SDE suites.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct WellFormedTally {
    pub reflected_paths: usize,
    pub ill_formed: usize,
    pub max_containment: f64,
    pub max_flat_off: f64,
    pub max_equation_residual: f64,
    pub max_fixed_point_distance: f64,
    pub max_iterations: usize,
    pub max_distance_increase: f64,
}

impl WellFormedTally {
    fn add(&mut self, w: &WellFormedness) {
        self.reflected_paths += 1;
        if !w.ok() {
            self.ill_formed += 1;
        }
        self.max_containment = self.max_containment.max(w.containment);
        self.max_flat_off = self.max_flat_off.max(w.flat_off.0).max(w.flat_off.1);
        self.max_equation_residual = self.max_equation_residual.max(w.equation_residual);
        self.max_fixed_point_distance = self.max_fixed_point_distance.max(w.fixed_point_distance);
        self.max_iterations = self.max_iterations.max(w.iterations);
        self.max_distance_increase = self.max_distance_increase.max(w.worst_distance_increase);
    }

    fn merge(mut self, other: &Self) -> Self {
        self.reflected_paths += other.reflected_paths;
        self.ill_formed += other.ill_formed;
        self.max_containment = self.max_containment.max(other.max_containment);
        self.max_flat_off = self.max_flat_off.max(other.max_flat_off);
        self.max_equation_residual = self.max_equation_residual.max(other.max_equation_residual);
        self.max_fixed_point_distance = self.max_fixed_point_distance.max(other.max_fixed_point_distance);
        self.max_iterations = self.max_iterations.max(other.max_iterations);
        self.max_distance_increase = self.max_distance_increase.max(other.max_distance_increase);
        self
    }
}

/// One reflected problem with its own parameters.
struct SdeProblem {
    x0: f64,
    coeffs: SDECoefficients,
    pair: ConstraintPair,
}

impl SdeProblem {
    fn solve(&self, path: &GBMPath, tally: &mut WellFormedTally) -> Result<ReflectedSDESolution> {
        let sol = solve_reflected(self.x0, &self.coeffs, &self.pair, path, &PicardOptions::default())?;
        tally.add(&well_formedness(&sol, self.x0, &self.coeffs, &self.pair, path)?);
        Ok(sol)
    }
}

/// Ordered obstacle parameters: `α¹ ≤ α²`, `β¹ ≤ β²`, both pairs separated.
fn ordered_obstacles(
    rng: &mut ChaCha8Rng,
    g: &TimeGrid,
    kind: gen::Kind,
    identical: bool,
) -> Result<(ConstraintPair, ConstraintPair, Value)> {
    let (centre, amplitude) = (rng.random_range(-1.0..-0.4), rng.random_range(0.0..0.3));
    let a1 = gen::wave(rng, g, centre, amplitude);
    let width = rng.random_range(0.8..1.6);
    let amplitude = rng.random_range(0.0..0.2);
    let b1: Vec<f64> = gen::wave(rng, g, 0.0, amplitude)
        .iter()
        .zip(&a1)
        .map(|(w, a)| a + width + w.max(0.0))
        .collect();
    let half = gen::min_gap(&a1, &b1) / 2.0;
    let (a2, b2): (Vec<f64>, Vec<f64>) = if identical {
        (a1.clone(), b1.clone())
    } else {
        let ua = gen::unit_field(rng, g);
        let ub = gen::unit_field(rng, g);
        let lift = rng.random_range(0.0..0.5);
        (
            a1.iter().zip(&ua).map(|(a, u)| a + half * u).collect(),
            b1.iter().zip(&ub).map(|(b, u)| b + lift * u).collect(),
        )
    };
    let info = json!({"kind": kind, "width": width});
    Ok((gen::pair(kind, g, a1, b1)?, gen::pair(kind, g, a2, b2)?, info))
}

fn affine(a: f64, b: f64) -> Coefficient {
    Coefficient::Affine { a, b }
}

/// `x¹ ≤ x²`, `f¹ ≤ f²`, `h¹ ≤ h²`, same diffusion, `α¹ ≤ α²`, `β¹ ≤ β²`
/// imply `X¹ ≤ X²`. Each trial is one driving path shared by
/// several parameter pairs.
pub fn check_comparison(trials: usize, seed: u64) -> PropertyReport {
    let g = grid(SDE_STEPS);
    let bounds = default_bounds();
    let results: Vec<(Vec<Outcome>, WellFormedTally)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, Suite::Comparison, trial);
            let mut tally = WellFormedTally::default();
            let path = gen::control(&mut rng, &g, &bounds)
                .and_then(|c| simulate_path(&c, &g, StreamId::new(seed, Suite::Comparison as usize + 64, trial)));
            let path = match path {
                Ok(p) => p,
                Err(e) => return (vec![Outcome::error(json!({"seed": seed, "trial": trial}), &e)], tally),
            };
            let outcomes = (0..COMPARISON_PAIRS)
                .map(|pair_idx| {
                    let w = json!({"seed": seed, "trial": trial, "pair": pair_idx});
                    settle(w, |w| {
                        let identical = pair_idx == 0;
                        let (p1, p2) = comparison_problems(&mut rng, &g, identical, w)?;
                        let x1 = p1.solve(&path, &mut tally)?;
                        let x2 = p2.solve(&path, &mut tally)?;
                        Ok(ordered_slack(x1.x.values(), x2.x.values()) + SDE_SLACK)
                    })
                })
                .collect();
            (outcomes, tally)
        })
        .collect();
    let (outcomes, tally) = flatten(results);
    reduce(
        "comparison",
        &outcomes,
        json!({"steps": SDE_STEPS, "pairs_per_path": COMPARISON_PAIRS, "slack": SDE_SLACK, "well_formedness": tally}),
    )
}

fn flatten(results: Vec<(Vec<Outcome>, WellFormedTally)>) -> (Vec<Outcome>, WellFormedTally) {
    let mut tally = WellFormedTally::default();
    let mut outcomes = Vec::new();
    for (o, t) in results {
        outcomes.extend(o);
        tally = tally.merge(&t);
    }
    (outcomes, tally)
}

fn comparison_problems(
    rng: &mut ChaCha8Rng,
    g: &TimeGrid,
    identical: bool,
    witness: &mut Value,
) -> Result<(SdeProblem, SdeProblem)> {
    let x1 = rng.random_range(-0.5..0.5);
    let (af, bf): (f64, f64) = (rng.random_range(-0.5..0.5), rng.random_range(-1.0..1.0));
    let (ah, bh): (f64, f64) = (rng.random_range(-0.4..0.4), rng.random_range(-1.0..1.0));
    let (ag, bg) = (rng.random_range(-0.5..0.5), rng.random_range(0.5..1.5));
    let (dx, df, dh) = if identical {
        (0.0, 0.0, 0.0)
    } else {
        (rng.random_range(0.0..0.3), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0))
    };
    let kind = gen::kind(rng, false);
    let (pair1, pair2, info) = ordered_obstacles(rng, g, kind, identical)?;
    *witness = json!({
        "seed": witness["seed"], "trial": witness["trial"], "pair": witness["pair"],
        "x0": [x1, x1 + dx], "f": [af, bf, df], "h": [ah, bh, dh], "g": [ag, bg], "obstacles": info,
    });
    let lip = af.abs() + ah.abs();
    let g_coef = Coefficient::TimeLinear { a: ag, b: bg };
    let c1 = SDECoefficients::new(affine(af, bf), affine(ah, bh), g_coef.clone(), lip, g.horizon())?;
    let c2 = SDECoefficients::new(affine(af, bf + df), affine(ah, bh + dh), g_coef, lip, g.horizon())?;
    Ok((
        SdeProblem { x0: x1, coeffs: c1, pair: pair1 },
        SdeProblem { x0: x1 + dx, coeffs: c2, pair: pair2 },
    ))
}

/// With nondecreasing `f²`, `h²` and a state-independent diffusion,
///
/// ```text
/// A_l¹ ≤ A_l² ≤ A_l¹ + X̂ + (x² − x¹)
/// A_r² ≤ A_r¹ ≤ A_r² + X̂ + (x² − x¹)
/// ```
///
/// where `X̂_t = ∫ f²(X²) − f¹(X¹) dt + ∫ h²(X²) − h¹(X¹) d⟨B⟩` (left sums).
pub fn check_sde_constraining_monotonicity(trials: usize, seed: u64) -> PropertyReport {
    let g = grid(SDE_STEPS);
    let bounds = default_bounds();
    let results: Vec<(Vec<Outcome>, WellFormedTally)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, Suite::SdeMonotonicity, trial);
            let mut tally = WellFormedTally::default();
            let outcome = settle(json!({"seed": seed, "trial": trial}), |w| {
                let ctrl = gen::control(&mut rng, &g, &bounds)?;
                let path = simulate_path(&ctrl, &g, StreamId::new(seed, Suite::SdeMonotonicity as usize + 64, trial))?;
                let identical = rng.random_bool(0.1);
                let (p1, p2) = sde_monotone_problems(&mut rng, &g, identical, w)?;
                let s1 = p1.solve(&path, &mut tally)?;
                let s2 = p2.solve(&path, &mut tally)?;
                let hat = x_hat(&p1.coeffs, &p2.coeffs, &s1, &s2, &path);
                let dx = p2.x0 - p1.x0;
                let (l1, l2) = (s1.a_l.values(), s2.a_l.values());
                let (r1, r2) = (s1.a_r.values(), s2.a_r.values());
                let mut slack = f64::INFINITY;
                for i in 0..g.len() {
                    slack = slack
                        .min(l2[i] - l1[i])
                        .min(l1[i] + hat[i] + dx - l2[i])
                        .min(r1[i] - r2[i])
                        .min(r2[i] + hat[i] + dx - r1[i]);
                }
                Ok(slack + SDE_SLACK)
            });
            (vec![outcome], tally)
        })
        .collect();
    let (outcomes, tally) = flatten(results);
    reduce(
        "sde-monotonicity",
        &outcomes,
        json!({"steps": SDE_STEPS, "slack": SDE_SLACK, "well_formedness": tally}),
    )
}

fn sde_monotone_problems(
    rng: &mut ChaCha8Rng,
    g: &TimeGrid,
    identical: bool,
    witness: &mut Value,
) -> Result<(SdeProblem, SdeProblem)> {
    let x1 = rng.random_range(-0.5..0.5);
    let (af, bf) = (rng.random_range(0.0..0.4), rng.random_range(-1.0..1.0));
    let (ah, bh) = (rng.random_range(0.0..0.3), rng.random_range(-1.0..1.0));
    let (ag, bg) = (rng.random_range(-0.5..0.5), rng.random_range(0.5..1.5));
    let (dx, df, dh) = if identical {
        (0.0, 0.0, 0.0)
    } else {
        (rng.random_range(0.0..0.3), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0))
    };
    // f¹ = f² − df − c (1 + sin(w x)) / 2 ≤ f², not monotone itself
    let (c, w) = if identical { (0.0, 1.0) } else { (rng.random_range(0.0..0.2), rng.random_range(0.5..2.0)) };
    let kind = gen::kind(rng, false);
    let (pair, _, info) = ordered_obstacles(rng, g, kind, true)?;
    *witness = json!({
        "seed": witness["seed"], "trial": witness["trial"],
        "x0": [x1, x1 + dx], "f": [af, bf, df, c, w], "h": [ah, bh, dh], "g": [ag, bg], "obstacles": info,
    });
    let g_coef = Coefficient::TimeLinear { a: ag, b: bg };
    let f1 = if c == 0.0 {
        affine(af, bf - df)
    } else {
        Coefficient::custom(move |_, x| af * x + bf - df - c * (1.0 + (w * x).sin()) / 2.0)
    };
    let lip1 = af + c * w / 2.0 + ah;
    let c1 = SDECoefficients::new(f1, affine(ah, bh - dh), g_coef.clone(), lip1, g.horizon())?;
    let c2 = SDECoefficients::new(affine(af, bf), affine(ah, bh), g_coef, af + ah, g.horizon())?;
    Ok((
        SdeProblem { x0: x1, coeffs: c1, pair: pair.clone() },
        SdeProblem { x0: x1 + dx, coeffs: c2, pair },
    ))
}

fn x_hat(
    c1: &SDECoefficients,
    c2: &SDECoefficients,
    s1: &ReflectedSDESolution,
    s2: &ReflectedSDESolution,
    path: &GBMPath,
) -> Vec<f64> {
    let g = path.grid();
    let q = path.qv.values();
    let (x1, x2) = (s1.x.values(), s2.x.values());
    let mut out = Vec::with_capacity(g.len());
    let mut acc = 0.0;
    out.push(acc);
    for i in 0..g.steps() {
        let t = g.node(i);
        acc += (c2.f.eval(t, x2[i]) - c1.f.eval(t, x1[i])) * g.dt()
            + (c2.h.eval(t, x2[i]) - c1.h.eval(t, x1[i])) * (q[i + 1] - q[i]);
        out.push(acc);
    }
    out
}

/// Largest oscillation `max − min` of `v` over the cells of the coarse
/// partition with `factor` fine steps per cell.
fn cell_oscillation(v: &[f64], factor: usize) -> f64 {
    let mut worst: f64 = 0.0;
    let mut start = 0;
    while start + 1 < v.len() {
        let end = (start + factor).min(v.len() - 1);
        let cell = &v[start..=end];
        let hi = cell.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = cell.iter().copied().fold(f64::INFINITY, f64::min);
        worst = worst.max(hi - lo);
        start = end;
    }
    worst
}

/// Discretized envelopes `γⁿ` on a doubling ladder of coarse grids approach
/// `γ` monotonically, and each error stays below the coarse-cell
/// oscillation of the inputs.
pub fn check_gamma_convergence(trials: usize, seed: u64) -> PropertyReport {
    let g = grid(1 << GAMMA_FINE_LOG2);
    let ladder: Vec<usize> = GAMMA_LADDER_LOG2.map(|k| 1usize << k).collect();
    let errors: Vec<(Outcome, Vec<f64>)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, Suite::GammaConvergence, trial);
            let mut errs = Vec::new();
            let outcome = settle(json!({"seed": seed, "trial": trial}), |w| {
                let a = gen::walk(&mut rng, &g, -0.5, 1.0);
                let b = gen::walk(&mut rng, &g, 0.5, 1.0);
                let (ap, bp) = (SampledPath::new(g, a.clone())?, SampledPath::new(g, b.clone())?);
                let exact = gamma_envelope(&ap, &bp)?;
                let mut slack = f64::INFINITY;
                for &n in &ladder {
                    let factor = g.steps() / n;
                    let coarse = gamma_envelope_coarse(&ap, &bp, factor)?;
                    let err = sup_distance_slices(exact.values(), coarse.values());
                    let bound = cell_oscillation(&a, factor).max(cell_oscillation(&b, factor));
                    slack = slack.min(bound - err);
                    if let Some(&prev) = errs.last() {
                        slack = slack.min(prev - err);
                    }
                    errs.push(err);
                }
                w["errors"] = json!(errs);
                Ok(slack)
            });
            (outcome, errs)
        })
        .collect();
    let rungs = ladder.len();
    let mut mean = vec![0.0; rungs];
    for (_, e) in &errors {
        for (m, v) in mean.iter_mut().zip(e) {
            *m += v / trials.max(1) as f64;
        }
    }
    let outcomes: Vec<Outcome> = errors.into_iter().map(|(o, _)| o).collect();
    reduce(
        "gamma-convergence",
        &outcomes,
        json!({"fine_steps": g.steps(), "ladder": ladder, "mean_error": mean}),
    )
}

/// Test functions for the Itô residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ItoFunction {
    #[serde(rename = "x")]
    Linear,
    #[serde(rename = "x^2")]
    Square,
    #[serde(rename = "x^3")]
    Cube,
}

impl ItoFunction {
    const ALL: [ItoFunction; 3] = [ItoFunction::Linear, ItoFunction::Square, ItoFunction::Cube];

    fn phi(self, x: f64) -> f64 {
        match self {
            ItoFunction::Linear => x,
            ItoFunction::Square => x * x,
            ItoFunction::Cube => x * x * x,
        }
    }

    fn d1(self, x: f64) -> f64 {
        match self {
            ItoFunction::Linear => 1.0,
            ItoFunction::Square => 2.0 * x,
            ItoFunction::Cube => 3.0 * x * x,
        }
    }

    fn d2(self, x: f64) -> f64 {
        match self {
            ItoFunction::Linear => 0.0,
            ItoFunction::Square => 2.0,
            ItoFunction::Cube => 6.0 * x,
        }
    }
}

/// `Φ(X_T) − Φ(X_0)` minus the left-endpoint sums of every term on the
/// right-hand side of the Itô formula for reflected dynamics.
pub fn ito_residual(
    phi: ItoFunction,
    sol: &ReflectedSDESolution,
    coeffs: &SDECoefficients,
    path: &GBMPath,
) -> f64 {
    let g = path.grid();
    let (x, a) = (sol.x.values(), sol.a.values());
    let (b, q) = (path.b.values(), path.qv.values());
    let mut rhs = 0.0;
    for i in 0..g.steps() {
        let t = g.node(i);
        let (f, h, gd) = (coeffs.f.eval(t, x[i]), coeffs.h.eval(t, x[i]), coeffs.g.eval(t, x[i]));
        let dq = q[i + 1] - q[i];
        let d1 = phi.d1(x[i]);
        rhs += d1 * f * g.dt()
            + d1 * h * dq
            + d1 * gd * (b[i + 1] - b[i])
            + d1 * (a[i + 1] - a[i])
            + 0.5 * phi.d2(x[i]) * gd * gd * dq;
    }
    phi.phi(x[g.steps()]) - phi.phi(x[0]) - rhs
}

/// Itô residuals on nested grids `2⁸ … 2¹³` for `Φ = x, x², x³`. The linear
/// residual must vanish on every path; for the others the mean absolute
/// residual over paths must shrink by at least `0.75` per doubling.
pub fn check_ito_residual(paths: usize, seed: u64) -> PropertyReport {
    let ladder: Vec<usize> = ITO_LADDER_LOG2.map(|k| 1usize << k).collect();
    let fine = grid(*ladder.last().expect("nonempty ladder"));
    let bounds = default_bounds();
    let family = scenario_family(&bounds, FamilySpec::Constant { m: 5 }, &fine).expect("valid family");
    let coeffs = SDECoefficients::new(affine(-1.0, 0.0), Coefficient::Zero, Coefficient::Constant(1.0), 1.0, 1.0)
        .expect("valid coefficients");
    let opts = PicardOptions {
        tol: 1e-13,
        ..Default::default()
    };
    let per_path: Vec<Result<Vec<[f64; 3]>>> = (0..paths)
        .into_par_iter()
        .map(|p| {
            let ctrl = &family[p % family.len()];
            let driver = simulate_path(ctrl, &fine, StreamId::new(seed, Suite::ItoResidual as usize, p))?;
            ladder
                .iter()
                .map(|&n| {
                    let path = driver.coarsen(fine.steps() / n)?;
                    let pair = make_band_pair(
                        SampledPath::constant(*path.grid(), -0.6)?,
                        SampledPath::constant(*path.grid(), 0.6)?,
                    )?;
                    let sol = solve_reflected(0.0, &coeffs, &pair, &path, &opts)?;
                    Ok(ItoFunction::ALL.map(|phi| ito_residual(phi, &sol, &coeffs, &path)))
                })
                .collect()
        })
        .collect();

    let mut outcomes = Vec::new();
    let mut mean = vec![[0.0; 3]; ladder.len()];
    let mut ok_paths = 0usize;
    for (p, r) in per_path.iter().enumerate() {
        let w = json!({"seed": seed, "path": p, "check": "linear"});
        match r {
            Ok(levels) => {
                ok_paths += 1;
                let worst = levels.iter().map(|l| l[0].abs()).fold(0.0, f64::max);
                outcomes.push(Outcome {
                    slack: LINEAR_ITO_TOLERANCE - worst,
                    witness: w,
                });
                for (m, l) in mean.iter_mut().zip(levels) {
                    for k in 0..3 {
                        m[k] += l[k].abs();
                    }
                }
            }
            Err(e) => outcomes.push(Outcome::error(w, e)),
        }
    }
    for m in &mut mean {
        for v in m.iter_mut() {
            *v /= ok_paths.max(1) as f64;
        }
    }
    let mut ratios = json!({});
    for (k, phi) in ItoFunction::ALL.iter().enumerate().skip(1) {
        let r: Vec<f64> = mean.windows(2).map(|w| w[1][k] / w[0][k]).collect();
        for (rung, ratio) in r.iter().enumerate() {
            outcomes.push(Outcome {
                slack: ITO_RATIO - ratio,
                witness: json!({"seed": seed, "function": phi, "from_steps": ladder[rung], "ratio": ratio}),
            });
        }
        ratios[serde_json::to_value(phi).expect("serializable").as_str().expect("string")] = json!(r);
    }
    let means: Vec<Value> = ladder
        .iter()
        .zip(&mean)
        .map(|(n, m)| json!({"steps": n, "x": m[0], "x^2": m[1], "x^3": m[2]}))
        .collect();
    reduce(
        "ito-residual",
        &outcomes,
        json!({"paths": paths, "ladder": ladder, "mean_abs_residual": means, "ratios": ratios, "max_ratio": ITO_RATIO}),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GMomentsConfig {
    pub sigma2_min: f64,
    pub sigma2_max: f64,
    pub horizon: f64,
    pub steps: usize,
    pub m: usize,
    pub paths: usize,
    pub seed: u64,
}

impl Default for GMomentsConfig {
    fn default() -> Self {
        Self {
            sigma2_min: 0.25,
            sigma2_max: 1.0,
            horizon: 1.0,
            steps: 16,
            m: 5,
            paths: 100_000,
            seed: 20_240_601,
        }
    }
}

/// Closed-form G-moments within three standard errors:
/// `Ê[B_T²] = σ̄²T`, `−Ê[−B_T²] = σ̲²T`, `Ê[B_T⁺] = σ̄√T/√(2π)`, `Ê[±B_T] = 0`.
pub fn check_g_moments(cfg: &GMomentsConfig) -> PropertyReport {
    let body = || -> Result<(Vec<Outcome>, Value)> {
        let bounds = VolatilityBounds::new(cfg.sigma2_min, cfg.sigma2_max)?;
        let g = TimeGrid::new(cfg.horizon, cfg.steps)?;
        let fam = scenario_family(&bounds, FamilySpec::Constant { m: cfg.m }, &g)?;
        let t = cfg.horizon;
        let sq = sublinear_expectation(|p| Ok(p.b.last().powi(2)), &fam, &g, cfg.paths, cfg.seed)?;
        let pos = sublinear_expectation(|p| Ok(p.b.last().max(0.0)), &fam, &g, cfg.paths, cfg.seed)?;
        let lin = sublinear_expectation(|p| Ok(p.b.last()), &fam, &g, cfg.paths, cfg.seed)?;
        let positive_part = (cfg.sigma2_max * t).sqrt() / (2.0 * std::f64::consts::PI).sqrt();
        let check = |name: &str, value: f64, target: f64, se: f64| Outcome {
            slack: 3.0 * se - (value - target).abs(),
            witness: json!({"seed": cfg.seed, "check": name, "value": value, "target": target, "stderr": se}),
        };
        let outcomes = vec![
            check("upper B_T^2", sq.value, cfg.sigma2_max * t, sq.value_stderr()),
            check("lower B_T^2", sq.lower_value, cfg.sigma2_min * t, sq.lower_stderr()),
            check("upper (B_T)+", pos.value, positive_part, pos.value_stderr()),
            check("upper B_T", lin.value, 0.0, lin.value_stderr()),
            check("lower B_T", lin.lower_value, 0.0, lin.lower_stderr()),
            Outcome {
                slack: (sq.value - sq.lower_value).min(pos.value - pos.lower_value).min(lin.value - lin.lower_value),
                witness: json!({"seed": cfg.seed, "check": "upper >= lower"}),
            },
        ];
        let diagnostics = json!({
            "config": cfg,
            "upper_b2": sq.value, "upper_b2_stderr": sq.value_stderr(), "argmax_b2": sq.argmax,
            "lower_b2": sq.lower_value, "lower_b2_stderr": sq.lower_stderr(),
            "upper_positive_part": pos.value, "upper_positive_part_stderr": pos.value_stderr(),
            "upper_b": lin.value, "lower_b": lin.lower_value,
        });
        Ok((outcomes, diagnostics))
    };
    match body() {
        Ok((outcomes, diagnostics)) => reduce("g-moments", &outcomes, diagnostics),
        Err(e) => reduce(
            "g-moments",
            &[Outcome::error(json!({"seed": cfg.seed}), &e)],
            json!({"config": cfg}),
        ),
    }
}

/// Reflected solutions across a mix of coefficients and obstacles:
/// containment, flat-off, equation residual, fixed point, and Picard
/// distances that do not grow after the first step.
pub fn check_well_formedness(trials: usize, seed: u64) -> PropertyReport {
    let g = grid(SDE_STEPS);
    let bounds = default_bounds();
    let results: Vec<(Vec<Outcome>, WellFormedTally)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, Suite::WellFormedness, trial);
            let mut tally = WellFormedTally::default();
            let outcome = settle(json!({"seed": seed, "trial": trial}), |w| {
                let ctrl = gen::control(&mut rng, &g, &bounds)?;
                let path = simulate_path(&ctrl, &g, StreamId::new(seed, Suite::WellFormedness as usize + 64, trial))?;
                let setting = trial % 4;
                let (x0, coeffs, pair) = match setting {
                    0 => (
                        0.0,
                        SDECoefficients::new(affine(-1.0, 0.0), Coefficient::Zero, Coefficient::Constant(1.0), 1.0, 1.0)?,
                        gen::pair(gen::Kind::Band, &g, vec![-5.0; g.len()], vec![5.0; g.len()])?,
                    ),
                    1 => (
                        rng.random_range(-1.0..1.0),
                        SDECoefficients::new(affine(-0.5, 0.2), Coefficient::Zero, Coefficient::Constant(1.0), 0.5, 1.0)?,
                        gen::pair(gen::Kind::Band, &g, vec![-0.3; g.len()], vec![0.4; g.len()])?,
                    ),
                    2 => {
                        let (p, _, _) = ordered_obstacles(&mut rng, &g, gen::Kind::Rho, true)?;
                        (
                            rng.random_range(-1.0..1.0),
                            SDECoefficients::new(
                                Coefficient::Sine { a: 0.5, w: 1.0 },
                                affine(0.3, 0.0),
                                Coefficient::TimeLinear { a: 1.0, b: 0.5 },
                                0.8,
                                1.0,
                            )?,
                            p,
                        )
                    }
                    _ => {
                        let (p, _, _) = ordered_obstacles(&mut rng, &g, gen::Kind::Cubic, true)?;
                        (
                            rng.random_range(-2.0..2.0),
                            SDECoefficients::new(affine(0.4, 1.0), affine(-0.4, 0.0), Coefficient::Constant(1.5), 0.8, 1.0)?,
                            p,
                        )
                    }
                };
                w["setting"] = json!(setting);
                let problem = SdeProblem { x0, coeffs, pair };
                let sol = problem.solve(&path, &mut tally)?;
                let wf = well_formedness(&sol, x0, &problem.coeffs, &problem.pair, &path)?;
                w["well_formedness"] = json!(wf);
                Ok(if wf.ok() { 0.0 } else { -1.0 })
            });
            (vec![outcome], tally)
        })
        .collect();
    let (outcomes, tally) = flatten(results);
    reduce(
        "well-formedness",
        &outcomes,
        json!({"steps": SDE_STEPS, "well_formedness": tally}),
    )
}

/// Reflection between the sentinel obstacles `±1e30` reproduces the plain
/// Euler scheme.
pub fn check_sentinel(trials: usize, seed: u64) -> PropertyReport {
    let g = grid(SDE_STEPS);
    let bounds = default_bounds();
    let pair = ConstraintPair::unconstrained(g).expect("sentinel pair");
    let outcomes = run_trials(trials, |trial| {
        let mut rng = trial_rng(seed, Suite::Sentinel, trial);
        settle(json!({"seed": seed, "trial": trial}), |w| {
            let ctrl = gen::control(&mut rng, &g, &bounds)?;
            let path = simulate_path(&ctrl, &g, StreamId::new(seed, Suite::Sentinel as usize + 64, trial))?;
            let x0 = rng.random_range(-2.0..2.0);
            let coeffs = SDECoefficients::new(
                affine(-1.0, 0.5),
                Coefficient::Sine { a: 0.3, w: 1.0 },
                Coefficient::TimeLinear { a: 0.5, b: 0.5 },
                1.3,
                1.0,
            )?;
            let sol = solve_reflected(x0, &coeffs, &pair, &path, &PicardOptions::default())?;
            let free = solve_unreflected(x0, &coeffs, &path)?;
            let d = sup_distance_slices(sol.x.values(), free.values());
            w["distance"] = json!(d);
            Ok(SENTINEL_TOLERANCE - d)
        })
    });
    reduce(
        "sentinel",
        &outcomes,
        json!({"steps": SDE_STEPS, "tolerance": SENTINEL_TOLERANCE}),
    )
}

/// The property suites, by the name used on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Stability = 1,
    ConstraintMonotonicity = 2,
    InputMonotonicity = 3,
    Comparison = 4,
    SdeMonotonicity = 5,
    GammaConvergence = 6,
    ItoResidual = 7,
    GMoments = 8,
    OracleEquivalence = 9,
    WellFormedness = 10,
    Sentinel = 11,
    EnvelopeEquivalence = 12,
}

impl Suite {
    pub const ALL: [Suite; 12] = [
        Suite::EnvelopeEquivalence,
        Suite::Stability,
        Suite::ConstraintMonotonicity,
        Suite::InputMonotonicity,
        Suite::OracleEquivalence,
        Suite::Comparison,
        Suite::SdeMonotonicity,
        Suite::WellFormedness,
        Suite::Sentinel,
        Suite::GammaConvergence,
        Suite::ItoResidual,
        Suite::GMoments,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Stability => "stability",
            Suite::ConstraintMonotonicity => "constraint-monotonicity",
            Suite::InputMonotonicity => "input-monotonicity",
            Suite::Comparison => "comparison",
            Suite::SdeMonotonicity => "sde-monotonicity",
            Suite::GammaConvergence => "gamma-convergence",
            Suite::ItoResidual => "ito-residual",
            Suite::GMoments => "g-moments",
            Suite::OracleEquivalence => "oracle-equivalence",
            Suite::WellFormedness => "well-formedness",
            Suite::Sentinel => "sentinel",
            Suite::EnvelopeEquivalence => "envelope-equivalence",
        }
    }

    /// Trial count used when none is given.
    pub fn default_trials(self) -> usize {
        match self {
            Suite::Stability | Suite::ConstraintMonotonicity | Suite::InputMonotonicity => 1000,
            Suite::OracleEquivalence => 1000,
            Suite::EnvelopeEquivalence => 200,
            Suite::Comparison | Suite::SdeMonotonicity => 200,
            Suite::WellFormedness | Suite::Sentinel => 100,
            Suite::GammaConvergence | Suite::ItoResidual => 50,
            Suite::GMoments => GMomentsConfig::default().paths,
        }
    }

    /// Runs the suite. For `g-moments`, `trials` is the number of paths per
    /// scenario.
    pub fn run(self, trials: Option<usize>, seed: u64) -> PropertyReport {
        let n = trials.unwrap_or_else(|| self.default_trials());
        match self {
            Suite::Stability => check_stability(n, seed),
            Suite::ConstraintMonotonicity => check_constraint_monotonicity(n, seed),
            Suite::InputMonotonicity => check_input_monotonicity(n, seed),
            Suite::OracleEquivalence => check_oracle_equivalence(n, seed),
            Suite::Comparison => check_comparison(n, seed),
            Suite::SdeMonotonicity => check_sde_constraining_monotonicity(n, seed),
            Suite::WellFormedness => check_well_formedness(n, seed),
            Suite::Sentinel => check_sentinel(n, seed),
            Suite::EnvelopeEquivalence => check_envelope_equivalence(n, seed),
            Suite::GammaConvergence => check_gamma_convergence(n, seed),
            Suite::ItoResidual => check_ito_residual(n, seed),
            Suite::GMoments => check_g_moments(&GMomentsConfig {
                paths: n,
                seed,
                ..Default::default()
            }),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
                Error::InvalidArgument(format!("unknown suite `{s}`; expected all or one of {}", names.join(", ")))
            })
    }
}

/// Combined well-formedness tally over reports that carry one.
pub fn well_formedness_total(reports: &[PropertyReport]) -> WellFormedTally {
    reports
        .iter()
        .filter_map(|r| r.diagnostics.get("well_formedness"))
        .filter_map(|v| {
            Some(WellFormedTally {
                reflected_paths: v.get("reflected_paths")?.as_u64()? as usize,
                ill_formed: v.get("ill_formed")?.as_u64()? as usize,
                max_containment: v.get("max_containment")?.as_f64()?,
                max_flat_off: v.get("max_flat_off")?.as_f64()?,
                max_equation_residual: v.get("max_equation_residual")?.as_f64()?,
                max_fixed_point_distance: v.get("max_fixed_point_distance")?.as_f64()?,
                max_iterations: v.get("max_iterations")?.as_u64()? as usize,
                max_distance_increase: v.get("max_distance_increase")?.as_f64()?,
            })
        })
        .fold(WellFormedTally::default(), |acc, t| acc.merge(&t))
}

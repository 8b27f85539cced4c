//! Reflected G-SDEs
//!
//! ```text
//! X_t = x₀ + ∫ f(s,X_s) ds + ∫ h(s,X_s) d⟨B⟩_s + ∫ g(s,X_s) dB_s + A_t
//! ```
//!
//! solved pathwise by Picard iteration: starting from `X⁰`, each iterate is
//! the Skorokhod reflection of the left-endpoint Euler sums along the
//! previous one.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::constraints::ConstraintPair;
use crate::error::{Error, Result};
use crate::gexp::{simulate_path, GBMPath, ScenarioControl};
use crate::path_core::{sup_distance_slices, MonotonePath, SampledPath, TimeGrid};
use crate::rng::StreamId;
use crate::skorokhod::{self, containment_violation};

const LIPSCHITZ_PROBES: usize = 256;
const PROBE_RANGE: f64 = 10.0;

/// A scalar coefficient `c(t, x)`.
#[derive(Clone)]
pub enum Coefficient {
    Zero,
    Constant(f64),
    /// `a x + b`
    Affine { a: f64, b: f64 },
    /// `a sin(w x)`
    Sine { a: f64, w: f64 },
    /// `a t + b`, independent of the state
    TimeLinear { a: f64, b: f64 },
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Zero => f.write_str("Zero"),
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Affine { a, b } => write!(f, "Affine {{ a: {a}, b: {b} }}"),
            Coefficient::Sine { a, w } => write!(f, "Sine {{ a: {a}, w: {w} }}"),
            Coefficient::TimeLinear { a, b } => write!(f, "TimeLinear {{ a: {a}, b: {b} }}"),
            Coefficient::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Coefficient {
    pub fn custom(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Custom(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        match self {
            Coefficient::Zero => 0.0,
            Coefficient::Constant(c) => *c,
            Coefficient::Affine { a, b } => a * x + b,
            Coefficient::Sine { a, w } => a * (w * x).sin(),
            Coefficient::TimeLinear { a, b } => a * t + b,
            Coefficient::Custom(f) => f(t, x),
        }
    }

    /// True when the value cannot depend on `x`.
    pub fn is_state_independent(&self) -> bool {
        matches!(
            self,
            Coefficient::Zero | Coefficient::Constant(_) | Coefficient::TimeLinear { .. }
        ) || matches!(self, Coefficient::Affine { a, .. } | Coefficient::Sine { a, .. } if *a == 0.0)
    }
}

/// `f` (drift in `dt`), `h` (drift in `d⟨B⟩`) and `g` (diffusion), with a
/// declared Lipschitz constant `L` for `|Δf| + |Δh| + |Δg| ≤ L |x − y|`.
#[derive(Debug, Clone)]
pub struct SDECoefficients {
    pub f: Coefficient,
    pub h: Coefficient,
    pub g: Coefficient,
    lipschitz: f64,
}

impl SDECoefficients {
    /// Spot-checks finiteness and the declared constant on random probes
    /// with `t ∈ [0, horizon]` and `x, y ∈ [−10, 10]`.
    pub fn new(f: Coefficient, h: Coefficient, g: Coefficient, lipschitz: f64, horizon: f64) -> Result<Self> {
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Lipschitz constant must be finite and nonnegative, got {lipschitz}"
            )));
        }
        let c = Self { f, h, g, lipschitz };
        c.probe(horizon)?;
        Ok(c)
    }

    pub fn zero() -> Self {
        Self {
            f: Coefficient::Zero,
            h: Coefficient::Zero,
            g: Coefficient::Zero,
            lipschitz: 0.0,
        }
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn probe(&self, horizon: f64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6c697073);
        for _ in 0..LIPSCHITZ_PROBES {
            let t = rng.random_range(0.0..=horizon.max(0.0));
            let x = rng.random_range(-PROBE_RANGE..PROBE_RANGE);
            let y = rng.random_range(-PROBE_RANGE..PROBE_RANGE);
            let at_x = self.eval_checked(t, x)?;
            let at_y = self.eval_checked(t, y)?;
            let diff = (at_x.0 - at_y.0).abs() + (at_x.1 - at_y.1).abs() + (at_x.2 - at_y.2).abs();
            let gap = (x - y).abs();
            if diff > self.lipschitz * gap * (1.0 + 1e-9) + 1e-12 {
                return Err(Error::LipschitzViolation {
                    declared: self.lipschitz,
                    observed: diff / gap,
                    t,
                    x,
                    y,
                });
            }
        }
        Ok(())
    }

    /// `(f, h, g)` at `(t, x)`, or the first non-finite one.
    pub fn eval_checked(&self, t: f64, x: f64) -> Result<(f64, f64, f64)> {
        let check = |which: &'static str, v: f64| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NumericFailure { which, t, x })
            }
        };
        Ok((
            check("f", self.f.eval(t, x))?,
            check("h", self.h.eval(t, x))?,
            check("g", self.g.eval(t, x))?,
        ))
    }
}

/// `S_0 = x₀`, `S_{i+1} = S_i + f(t_i,X_i) Δt + h(t_i,X_i) Δ⟨B⟩_i + g(t_i,X_i) ΔB_i`.
pub fn euler_functional(coeffs: &SDECoefficients, x: &SampledPath, path: &GBMPath, x0: f64) -> Result<SampledPath> {
    x.grid().ensure_same(path.grid())?;
    Ok(SampledPath::from_parts_unchecked(
        *x.grid(),
        euler_sums(coeffs, x.values(), path, x0)?,
    ))
}

fn euler_sums(coeffs: &SDECoefficients, x: &[f64], path: &GBMPath, x0: f64) -> Result<Vec<f64>> {
    let grid = path.grid();
    let dt = grid.dt();
    let (b, q) = (path.b.values(), path.qv.values());
    let mut s = Vec::with_capacity(x.len());
    let mut acc = x0;
    s.push(acc);
    for i in 0..grid.steps() {
        let t = grid.node(i);
        let (f, h, g) = coeffs.eval_checked(t, x[i])?;
        acc += f * dt + h * (q[i + 1] - q[i]) + g * (b[i + 1] - b[i]);
        if !acc.is_finite() {
            return Err(Error::NumericFailure { which: "euler", t, x: x[i] });
        }
        s.push(acc);
    }
    Ok(s)
}

/// Plain Euler scheme without reflection.
pub fn solve_unreflected(x0: f64, coeffs: &SDECoefficients, path: &GBMPath) -> Result<SampledPath> {
    let grid = path.grid();
    let dt = grid.dt();
    let (b, q) = (path.b.values(), path.qv.values());
    let mut x = Vec::with_capacity(grid.len());
    let mut acc = x0;
    x.push(acc);
    for i in 0..grid.steps() {
        let t = grid.node(i);
        let (f, h, g) = coeffs.eval_checked(t, acc)?;
        acc += f * dt + h * (q[i + 1] - q[i]) + g * (b[i + 1] - b[i]);
        if !acc.is_finite() {
            return Err(Error::NumericFailure { which: "euler", t, x: acc });
        }
        x.push(acc);
    }
    SampledPath::new(*grid, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PicardInit {
    /// `X⁰ ≡ 0`
    #[default]
    Zero,
    /// `X⁰_i = clamp(x₀, lower_i, upper_i)`
    ClampedStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardOptions {
    pub tol: f64,
    /// Largest number of iterates, counting `X⁰`.
    pub max_iter: usize,
    pub init: PicardInit,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            init: PicardInit::Zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectedSDESolution {
    pub x: SampledPath,
    /// `A = A_r − A_l`
    pub a: SampledPath,
    pub a_r: MonotonePath,
    pub a_l: MonotonePath,
    /// Euler sums along the previous iterate, `X = S + A`.
    pub s: SampledPath,
    /// Number of iterates, counting `X⁰` and the returned one.
    pub iterations: usize,
    /// Last Picard distance `sup|X^{n+1} − X^n|`.
    pub picard_residual: f64,
    /// `sup|X − S(X) − A|` with `S(X)` recomputed along the returned `X`.
    pub equation_residual: f64,
    /// `d_n = sup|X^{n+1} − X^n|` for every step taken.
    pub distances: Vec<f64>,
    pub flat_off: (f64, f64),
}

/// Solves the reflected equation on one driving path.
pub fn solve_reflected(
    x0: f64,
    coeffs: &SDECoefficients,
    pair: &ConstraintPair,
    path: &GBMPath,
    opts: &PicardOptions,
) -> Result<ReflectedSDESolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Picard tolerance must be positive, got {}",
            opts.tol
        )));
    }
    if opts.max_iter < 2 {
        return Err(Error::InvalidArgument(format!(
            "Picard needs at least 2 iterates, got max_iter = {}",
            opts.max_iter
        )));
    }
    if !x0.is_finite() {
        return Err(Error::InvalidArgument(format!("initial value {x0} is not finite")));
    }
    path.grid().ensure_same(pair.grid())?;
    let grid = *path.grid();
    let mut x: Vec<f64> = match opts.init {
        PicardInit::Zero => vec![0.0; grid.len()],
        PicardInit::ClampedStart => pair
            .lower()
            .values()
            .iter()
            .zip(pair.upper().values())
            .map(|(&lo, &up)| x0.max(lo).min(up))
            .collect(),
    };
    let mut distances = Vec::new();
    loop {
        let prev = SampledPath::from_parts_unchecked(grid, x);
        let s = euler_functional(coeffs, &prev, path, x0)?;
        let sol = skorokhod::solve(&s, pair)?;
        let d = sup_distance_slices(sol.x.values(), prev.values());
        distances.push(d);
        let iterations = distances.len() + 1;
        if d <= opts.tol {
            let residual = sup_distance_slices(
                &euler_sums(coeffs, sol.x.values(), path, x0)?
                    .iter()
                    .zip(sol.k.values())
                    .map(|(s, a)| s + a)
                    .collect::<Vec<_>>(),
                sol.x.values(),
            );
            return Ok(ReflectedSDESolution {
                x: sol.x,
                a: sol.k,
                a_r: sol.k_r,
                a_l: sol.k_l,
                s,
                iterations,
                picard_residual: d,
                equation_residual: residual,
                distances,
                flat_off: sol.flat_off,
            });
        }
        if iterations >= opts.max_iter || !d.is_finite() {
            return Err(Error::NoConvergence {
                iterations,
                residual: d,
                distances,
            });
        }
        x = sol.x.into_values();
    }
}

/// Diagnostics for one reflected solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WellFormedness {
    pub containment: f64,
    pub flat_off: (f64, f64),
    pub equation_residual: f64,
    pub fixed_point_distance: f64,
    pub iterations: usize,
    /// Largest `d_{n+1} − d_n` over `n ≥ 1` (≤ 0 when nonincreasing).
    pub worst_distance_increase: f64,
}

impl WellFormedness {
    pub const CONTAINMENT: f64 = 1e-9;
    pub const FLAT_OFF: f64 = 1e-8;
    pub const EQUATION: f64 = 1e-8;
    pub const FIXED_POINT: f64 = 1e-10;
    pub const DISTANCE_SLACK: f64 = 1e-12;
    pub const MAX_ITERATIONS: usize = 50;

    pub fn ok(&self) -> bool {
        self.containment <= Self::CONTAINMENT
            && self.flat_off.0 <= Self::FLAT_OFF
            && self.flat_off.1 <= Self::FLAT_OFF
            && self.equation_residual <= Self::EQUATION
            && self.fixed_point_distance <= Self::FIXED_POINT
            && self.iterations <= Self::MAX_ITERATIONS
            && self.worst_distance_increase <= Self::DISTANCE_SLACK
    }
}

/// Re-checks a solution: containment, flat-off, the equation itself, that
/// reflecting `S(X)` reproduces `(X, A)`, and that the Picard distances do
/// not grow after the first step.
pub fn well_formedness(
    sol: &ReflectedSDESolution,
    x0: f64,
    coeffs: &SDECoefficients,
    pair: &ConstraintPair,
    path: &GBMPath,
) -> Result<WellFormedness> {
    let s = euler_functional(coeffs, &sol.x, path, x0)?;
    let again = skorokhod::solve(&s, pair)?;
    let fixed_point_distance = sup_distance_slices(again.x.values(), sol.x.values())
        .max(sup_distance_slices(again.k.values(), sol.a.values()));
    let worst_distance_increase = sol
        .distances
        .windows(2)
        .skip(1)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(WellFormedness {
        containment: containment_violation(sol.x.values(), pair),
        flat_off: sol.flat_off,
        equation_residual: sol.equation_residual,
        fixed_point_distance,
        iterations: sol.iterations,
        worst_distance_increase,
    })
}

/// Obstacles for an ensemble: one pair for every path, or one per path.
#[derive(Clone, Copy)]
pub enum Obstacles<'a> {
    Fixed(&'a ConstraintPair),
    PerPath(&'a (dyn Fn(&GBMPath, usize, usize) -> Result<ConstraintPair> + Sync)),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub p: f64,
    /// `max_j mean_j sup_t |X_t|^p`
    pub moment_x: f64,
    /// `max_j mean_j sup_t |A_t|^p`
    pub moment_a: f64,
    /// Per-scenario `(mean sup|X|^p, mean sup|A|^p)`.
    pub per_scenario: Vec<(f64, f64)>,
    /// Right-hand side drivers of the moment bound: `|x₀|^p`, the
    /// coefficients at zero and the obstacle sizes, maximized over scenarios.
    pub drivers: f64,
    /// `(moment_x + moment_a) / drivers`, an empirical lower bound on the
    /// constant of the moment estimate.
    pub apriori_ratio: Option<f64>,
    pub max_iterations: usize,
}

impl fmt::Debug for Obstacles<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Obstacles::Fixed(p) => f.debug_tuple("Fixed").field(p).finish(),
            Obstacles::PerPath(_) => f.write_str("PerPath(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleRun {
    pub scenario: usize,
    pub path: usize,
    pub driver: GBMPath,
    pub pair: Option<ConstraintPair>,
    pub solution: ReflectedSDESolution,
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub runs: Vec<EnsembleRun>,
    pub summary: EnsembleSummary,
}

#[derive(Debug, Clone, Copy)]
pub struct EnsembleSpec<'a> {
    pub x0: f64,
    pub coeffs: &'a SDECoefficients,
    pub obstacles: Obstacles<'a>,
    pub family: &'a [ScenarioControl],
    pub grid: &'a TimeGrid,
    pub paths_per_scenario: usize,
    pub base_seed: u64,
    pub picard: PicardOptions,
    pub p: f64,
}

/// Solves every `(scenario, path)` pair; runs are ordered by scenario, then
/// path, whatever the thread count.
pub fn ensemble_solve(spec: &EnsembleSpec<'_>) -> Result<Ensemble> {
    if spec.family.is_empty() || spec.paths_per_scenario == 0 {
        return Err(Error::InvalidArgument(
            "ensemble needs at least one scenario and one path".into(),
        ));
    }
    if !(spec.p >= 1.0) {
        return Err(Error::InvalidArgument(format!("moment order p must be >= 1, got {}", spec.p)));
    }
    let jobs: Vec<(usize, usize)> = (0..spec.family.len())
        .flat_map(|j| (0..spec.paths_per_scenario).map(move |k| (j, k)))
        .collect();
    let runs: Vec<(EnsembleRun, f64)> = jobs
        .into_par_iter()
        .map(|(j, k)| run_one(spec, j, k).map_err(|e| e.at_path(j, k)))
        .collect::<Result<_>>()?;
    let p = spec.p;
    let m = spec.paths_per_scenario as f64;
    let mut per_scenario = Vec::with_capacity(spec.family.len());
    let mut drivers: f64 = 0.0;
    for chunk in runs.chunks(spec.paths_per_scenario) {
        let (mut mx, mut ma, mut dr) = (0.0, 0.0, 0.0);
        for (run, obstacle_term) in chunk {
            mx += run.solution.x.max_abs().powf(p);
            ma += run.solution.a.max_abs().powf(p);
            dr += obstacle_term;
        }
        per_scenario.push((mx / m, ma / m));
        drivers = drivers.max(dr / m);
    }
    drivers += coefficient_drivers(spec);
    let moment_x = per_scenario.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
    let moment_a = per_scenario.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let max_iterations = runs.iter().map(|(r, _)| r.solution.iterations).max().unwrap_or(0);
    Ok(Ensemble {
        summary: EnsembleSummary {
            p,
            moment_x,
            moment_a,
            per_scenario,
            drivers,
            apriori_ratio: (drivers > 0.0).then(|| (moment_x + moment_a) / drivers),
            max_iterations,
        },
        runs: runs.into_iter().map(|(r, _)| r).collect(),
    })
}

fn run_one(spec: &EnsembleSpec<'_>, j: usize, k: usize) -> Result<(EnsembleRun, f64)> {
    let driver = simulate_path(&spec.family[j], spec.grid, StreamId::new(spec.base_seed, j, k))?;
    let owned = match spec.obstacles {
        Obstacles::Fixed(_) => None,
        Obstacles::PerPath(make) => Some(make(&driver, j, k)?),
    };
    let pair = match (&owned, spec.obstacles) {
        (Some(p), _) => p,
        (None, Obstacles::Fixed(p)) => p,
        (None, Obstacles::PerPath(_)) => unreachable!(),
    };
    let solution = solve_reflected(spec.x0, spec.coeffs, pair, &driver, &spec.picard)?;
    let obstacle_term = pair.lower().max_abs().powf(spec.p) + pair.upper().max_abs().powf(spec.p);
    Ok((
        EnsembleRun {
            scenario: j,
            path: k,
            driver,
            pair: owned,
            solution,
        },
        obstacle_term,
    ))
}

/// `|x₀|^p + ∫|f(t,0)|^p dt + ∫|h(t,0)|^p dt + (∫ g(t,0)² dt)^{p/2}` by left sums.
fn coefficient_drivers(spec: &EnsembleSpec<'_>) -> f64 {
    let g = spec.grid;
    let p = spec.p;
    let dt = g.dt();
    let (mut f, mut h, mut q) = (0.0, 0.0, 0.0);
    for i in 0..g.steps() {
        let t = g.node(i);
        f += spec.coeffs.f.eval(t, 0.0).abs().powf(p) * dt;
        h += spec.coeffs.h.eval(t, 0.0).abs().powf(p) * dt;
        q += spec.coeffs.g.eval(t, 0.0).powi(2) * dt;
    }
    spec.x0.abs().powf(p) + f + h + q.powf(p / 2.0)
}

//! G-Brownian motion by volatility scenarios and sublinear expectations.
//!
//! A scenario is a piecewise-constant variance rate `v_i ∈ [σ̲², σ̄²]`. Under a
//! scenario, `ΔB_i = √(v_i Δt) Z_i` and `Δ⟨B⟩_i = v_i Δt`. The sublinear
//! expectation `Ê[ξ]` is estimated as the largest Monte Carlo mean over a
//! finite family of scenarios.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path_core::{MonotonePath, SampledPath, TimeGrid};
use crate::rng::StreamId;

/// Variance-rate interval `[σ̲², σ̄²]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolatilityBounds {
    sigma2_min: f64,
    sigma2_max: f64,
}

impl VolatilityBounds {
    /// Requires `0 ≤ σ̲² ≤ σ̄² < ∞`. Equal bounds give classical Brownian motion.
    pub fn new(sigma2_min: f64, sigma2_max: f64) -> Result<Self> {
        if !(sigma2_min >= 0.0 && sigma2_min <= sigma2_max && sigma2_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "volatility bounds must satisfy 0 <= sigma2_min <= sigma2_max, got ({sigma2_min}, {sigma2_max})"
            )));
        }
        Ok(Self {
            sigma2_min,
            sigma2_max,
        })
    }

    pub fn sigma2_min(&self) -> f64 {
        self.sigma2_min
    }

    pub fn sigma2_max(&self) -> f64 {
        self.sigma2_max
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.sigma2_min && v <= self.sigma2_max
    }
}

/// Per-step variance rates `v_0, …, v_{n−1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioControl {
    rates: Vec<f64>,
}

impl ScenarioControl {
    pub fn new(rates: Vec<f64>, bounds: &VolatilityBounds) -> Result<Self> {
        for (step, &rate) in rates.iter().enumerate() {
            if !bounds.contains(rate) {
                return Err(Error::ControlOutOfBounds {
                    step,
                    rate,
                    min: bounds.sigma2_min,
                    max: bounds.sigma2_max,
                });
            }
        }
        Ok(Self { rates })
    }

    pub fn constant(grid: &TimeGrid, rate: f64, bounds: &VolatilityBounds) -> Result<Self> {
        Self::new(vec![rate; grid.steps()], bounds)
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn steps(&self) -> usize {
        self.rates.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    /// `m ≥ 2` constant rates spaced evenly over `[σ̲², σ̄²]`.
    Constant { m: usize },
    /// Rates alternating between the two extremes at `switches` evenly
    /// spaced change points, in both phases.
    BangBang { switches: usize },
}

/// Finite family of scenarios approximating the set of volatility laws.
pub fn scenario_family(
    bounds: &VolatilityBounds,
    spec: FamilySpec,
    grid: &TimeGrid,
) -> Result<Vec<ScenarioControl>> {
    let (lo, hi) = (bounds.sigma2_min, bounds.sigma2_max);
    let n = grid.steps();
    match spec {
        FamilySpec::Constant { m } => {
            if m < 2 {
                return Err(Error::InvalidArgument(format!(
                    "a constant family needs m >= 2, got {m}"
                )));
            }
            (0..m)
                .map(|j| {
                    let v = if j == m - 1 {
                        hi
                    } else {
                        lo + j as f64 * (hi - lo) / (m - 1) as f64
                    };
                    ScenarioControl::constant(grid, v, bounds)
                })
                .collect()
        }
        FamilySpec::BangBang { switches } => {
            if switches == 0 || switches >= n {
                return Err(Error::InvalidArgument(format!(
                    "bang-bang switches must be in 1..{n}, got {switches}"
                )));
            }
            let segments = switches + 1;
            (0..2)
                .map(|phase| {
                    let rates = (0..n)
                        .map(|i| {
                            let seg = i * segments / n;
                            if (seg + phase) % 2 == 0 {
                                lo
                            } else {
                                hi
                            }
                        })
                        .collect();
                    ScenarioControl::new(rates, bounds)
                })
                .collect()
        }
    }
}

/// How `⟨B⟩` increments are produced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QvMode {
    /// `v_i Δt`; respects `σ̲² t ≤ ⟨B⟩_t ≤ σ̄² t` exactly.
    #[default]
    Compensator,
    /// `(ΔB_i)²`, for diagnostics.
    Realized,
}

/// A simulated G-Brownian path and its quadratic variation.
#[derive(Debug, Clone, PartialEq)]
pub struct GBMPath {
    pub b: SampledPath,
    pub qv: MonotonePath,
}

impl GBMPath {
    pub fn grid(&self) -> &TimeGrid {
        self.b.grid()
    }

    /// Keeps every `factor`-th node, so coarse and fine paths are nested.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        Ok(Self {
            b: self.b.subsample(factor)?,
            qv: MonotonePath::new(self.qv.path().subsample(factor)?)?,
        })
    }
}

pub fn simulate_path(ctrl: &ScenarioControl, grid: &TimeGrid, stream: StreamId) -> Result<GBMPath> {
    simulate_path_with(ctrl, grid, stream, QvMode::Compensator)
}

pub fn simulate_path_with(
    ctrl: &ScenarioControl,
    grid: &TimeGrid,
    stream: StreamId,
    mode: QvMode,
) -> Result<GBMPath> {
    if ctrl.steps() != grid.steps() {
        return Err(Error::LengthMismatch {
            expected: grid.steps(),
            found: ctrl.steps(),
        });
    }
    let dt = grid.dt();
    let mut rng = stream.rng();
    let mut db = Vec::with_capacity(grid.steps());
    let mut dq = Vec::with_capacity(grid.steps());
    for &v in ctrl.rates() {
        let z: f64 = StandardNormal.sample(&mut rng);
        let inc = (v * dt).sqrt() * z;
        db.push(inc);
        dq.push(match mode {
            QvMode::Compensator => v * dt,
            QvMode::Realized => inc * inc,
        });
    }
    Ok(GBMPath {
        b: SampledPath::from_increments(*grid, 0.0, &db)?,
        qv: MonotonePath::from_nonnegative_steps(*grid, 0.0, &dq),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScenarioMoments {
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SublinearEstimate {
    /// `max_j mean_j`.
    pub value: f64,
    /// First scenario attaining `value`.
    pub argmax: usize,
    pub argmax_control: ScenarioControl,
    /// `−Ê[−ξ] = min_j mean_j`.
    pub lower_value: f64,
    pub argmin: usize,
    pub per_scenario: Vec<ScenarioMoments>,
    pub paths_per_scenario: usize,
}

impl SublinearEstimate {
    pub fn value_stderr(&self) -> f64 {
        self.per_scenario[self.argmax].stderr
    }

    pub fn lower_stderr(&self) -> f64 {
        self.per_scenario[self.argmin].stderr
    }
}

/// `Ê[ξ] ≈ max_j (1/N) Σ_p ξ(path_{j,p})`, with path `(j, p)` drawn from the
/// substream `(seed, j, p)`. Sums run in path order, so the result does not
/// depend on the thread count.
pub fn sublinear_expectation<F>(
    functional: F,
    family: &[ScenarioControl],
    grid: &TimeGrid,
    paths_per_scenario: usize,
    base_seed: u64,
) -> Result<SublinearEstimate>
where
    F: Fn(&GBMPath) -> Result<f64> + Sync,
{
    if family.is_empty() {
        return Err(Error::InvalidArgument("scenario family is empty".into()));
    }
    if paths_per_scenario < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 paths per scenario, got {paths_per_scenario}"
        )));
    }
    let mut per_scenario = Vec::with_capacity(family.len());
    for (j, ctrl) in family.iter().enumerate() {
        let samples: Vec<f64> = (0..paths_per_scenario)
            .into_par_iter()
            .map(|p| {
                let path = simulate_path(ctrl, grid, StreamId::new(base_seed, j, p))
                    .map_err(|e| e.at_path(j, p))?;
                let v = functional(&path).map_err(|e| e.at_path(j, p))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Functional(format!("functional returned {v}")).at_path(j, p))
                }
            })
            .collect::<Result<_>>()?;
        per_scenario.push(moments(&samples));
    }
    let mut argmax = 0;
    let mut argmin = 0;
    for (j, m) in per_scenario.iter().enumerate() {
        if m.mean > per_scenario[argmax].mean {
            argmax = j;
        }
        if m.mean < per_scenario[argmin].mean {
            argmin = j;
        }
    }
    Ok(SublinearEstimate {
        value: per_scenario[argmax].mean,
        argmax,
        argmax_control: family[argmax].clone(),
        lower_value: per_scenario[argmin].mean,
        argmin,
        per_scenario,
        paths_per_scenario,
    })
}

pub(crate) fn moments(samples: &[f64]) -> ScenarioMoments {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    ScenarioMoments {
        mean,
        stderr: (var / n).sqrt(),
    }
}

/// `Ê[ξ]` for constant families of growing size.
pub fn family_sensitivity<F>(
    functional: F,
    bounds: &VolatilityBounds,
    sizes: &[usize],
    grid: &TimeGrid,
    paths_per_scenario: usize,
    base_seed: u64,
) -> Result<Vec<(usize, f64)>>
where
    F: Fn(&GBMPath) -> Result<f64> + Sync,
{
    sizes
        .iter()
        .map(|&m| {
            let family = scenario_family(bounds, FamilySpec::Constant { m }, grid)?;
            let est = sublinear_expectation(&functional, &family, grid, paths_per_scenario, base_seed)?;
            Ok((m, est.value))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QvBoundsReport {
    pub paths: usize,
    /// Nodes where `⟨B⟩` leaves `[σ̲² t, σ̄² t]`.
    pub violations: usize,
    /// Nodes with `σ̲² t < ⟨B⟩_t < σ̄² t` strictly.
    pub strictly_inside: usize,
    /// Largest gap between the discrete clocks `Σ σ² Δt` and `σ² t`.
    pub clock_rounding: f64,
}

/// Checks `σ̲² t ≤ ⟨B⟩_t ≤ σ̄² t` node-wise on every path of every scenario.
///
/// The bounds are the clocks of the constant extreme controls, accumulated
/// in the same order as the paths themselves, so the comparison is exact.
pub fn quadratic_variation_bounds_check(
    bounds: &VolatilityBounds,
    family: &[ScenarioControl],
    grid: &TimeGrid,
    paths_per_scenario: usize,
    base_seed: u64,
    mode: QvMode,
) -> Result<QvBoundsReport> {
    let clock = |v: f64| {
        MonotonePath::from_nonnegative_steps(*grid, 0.0, &vec![v * grid.dt(); grid.steps()])
    };
    let (lo, hi) = (clock(bounds.sigma2_min), clock(bounds.sigma2_max));
    let clock_rounding = grid
        .nodes()
        .enumerate()
        .map(|(i, t)| {
            (lo.values()[i] - bounds.sigma2_min * t)
                .abs()
                .max((hi.values()[i] - bounds.sigma2_max * t).abs())
        })
        .fold(0.0, f64::max);
    let mut report = QvBoundsReport {
        paths: 0,
        violations: 0,
        strictly_inside: 0,
        clock_rounding,
    };
    for (j, ctrl) in family.iter().enumerate() {
        let counts: Vec<(usize, usize)> = (0..paths_per_scenario)
            .into_par_iter()
            .map(|p| {
                let path = simulate_path_with(ctrl, grid, StreamId::new(base_seed, j, p), mode)?;
                let mut c = (0, 0);
                for ((&q, &l), &h) in path.qv.values().iter().zip(lo.values()).zip(hi.values()) {
                    if q < l || q > h {
                        c.0 += 1;
                    } else if q > l && q < h {
                        c.1 += 1;
                    }
                }
                Ok(c)
            })
            .collect::<Result<_>>()?;
        for (v, s) in counts {
            report.paths += 1;
            report.violations += v;
            report.strictly_inside += s;
        }
    }
    Ok(report)
}

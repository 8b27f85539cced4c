//! Time-dependent constraint functions and their effective obstacles.
//!
//! A constraint `c(t, x)` is strictly increasing in `x`. The reflected state
//! must satisfy `l(t, X_t) ≤ 0 ≤ r(t, X_t)`, so the only thing the Skorokhod
//! solver ever needs are the roots `r⁻¹(t, 0)` (lower obstacle) and
//! `l⁻¹(t, 0)` (upper obstacle). The functions themselves are kept around for
//! the flat-off residuals.

use std::fmt;
use std::sync::Arc;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::path_core::{SampledPath, TimeGrid};

/// Obstacle value standing in for `±∞` in one-sided problems.
pub const SENTINEL: f64 = 1e30;

pub const DEFAULT_BRACKET_HALF_WIDTH: f64 = 10.0;
pub const DEFAULT_INVERSE_TOLERANCE: f64 = 1e-12;
/// The bracket may double at most this many times.
pub const MAX_BRACKET_DOUBLINGS: u32 = 20;
const MONOTONICITY_PROBES: usize = 64;
const SMALL_GAP_WARNING: f64 = 1e-6;

/// `ρ(x) = sign(x) √|x|`.
pub fn rho(x: f64) -> f64 {
    x.signum() * x.abs().sqrt()
}

/// `ρ⁻¹(x) = sign(x) x²`.
pub fn rho_inverse(x: f64) -> f64 {
    x.signum() * x * x
}

/// A constraint evaluated at grid node `node` (time `t`).
pub trait ConstraintEvaluator: Send + Sync + fmt::Debug {
    fn eval(&self, node: usize, t: f64, x: f64) -> f64;

    /// Closed-form root of `x ↦ eval(node, t, x)`, when one is known.
    fn inverse_at_zero(&self, _node: usize, _t: f64) -> Option<f64> {
        None
    }
}

/// Strictly increasing profiles `p` used by [`Shifted`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// `p(x) = x`
    Identity,
    /// `p(x) = sign(x) √|x|`
    Rho,
    /// `p(x) = x³ + x`, inverted numerically
    Cubic,
}

impl Profile {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Profile::Identity => x,
            Profile::Rho => rho(x),
            Profile::Cubic => x * x * x + x,
        }
    }

    fn inverse(self, y: f64) -> Option<f64> {
        match self {
            Profile::Identity => Some(y),
            Profile::Rho => Some(rho_inverse(y)),
            Profile::Cubic => None,
        }
    }
}

/// `c(t_i, x) = p(x) − offset_i`.
#[derive(Debug, Clone)]
pub struct Shifted {
    pub profile: Profile,
    pub offset: SampledPath,
}

impl ConstraintEvaluator for Shifted {
    fn eval(&self, node: usize, _t: f64, x: f64) -> f64 {
        self.profile.apply(x) - self.offset.values()[node]
    }

    fn inverse_at_zero(&self, node: usize, _t: f64) -> Option<f64> {
        self.profile.inverse(self.offset.values()[node])
    }
}

/// Wraps a closure `(t, x) ↦ c(t, x)`; roots are found by bisection.
pub struct FnConstraint<F>(pub F);

impl<F> fmt::Debug for FnConstraint<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnConstraint(..)")
    }
}

impl<F> ConstraintEvaluator for FnConstraint<F>
where
    F: Fn(f64, f64) -> f64 + Send + Sync,
{
    fn eval(&self, _node: usize, t: f64, x: f64) -> f64 {
        (self.0)(t, x)
    }
}

/// A constraint bound to a grid, with its root-finding settings.
#[derive(Clone)]
pub struct ConstraintFunction {
    evaluator: Arc<dyn ConstraintEvaluator>,
    grid: TimeGrid,
    half_width: f64,
    tolerance: f64,
    center: f64,
}

impl fmt::Debug for ConstraintFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConstraintFunction")
            .field("evaluator", &self.evaluator)
            .field("steps", &self.grid.steps())
            .field("half_width", &self.half_width)
            .field("tolerance", &self.tolerance)
            .finish()
    }
}

impl ConstraintFunction {
    /// Builds a constraint and spot-checks strict increase in `x` on random
    /// `(t_i, x < y)` probes inside the initial bracket.
    pub fn new(evaluator: Arc<dyn ConstraintEvaluator>, grid: TimeGrid) -> Result<Self> {
        Self::with_settings(
            evaluator,
            grid,
            DEFAULT_BRACKET_HALF_WIDTH,
            DEFAULT_INVERSE_TOLERANCE,
            0.0,
        )
    }

    pub fn with_settings(
        evaluator: Arc<dyn ConstraintEvaluator>,
        grid: TimeGrid,
        half_width: f64,
        tolerance: f64,
        center: f64,
    ) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bracket half-width must be positive, got {half_width}"
            )));
        }
        if !(tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "inverse tolerance must be positive, got {tolerance}"
            )));
        }
        let c = Self {
            evaluator,
            grid,
            half_width,
            tolerance,
            center,
        };
        c.probe_monotonicity()?;
        Ok(c)
    }

    /// `p(x) − offset_t`. The built-in profiles are increasing by
    /// construction, so no probing is done.
    pub fn shifted(profile: Profile, offset: SampledPath) -> Result<Self> {
        let grid = *offset.grid();
        Ok(Self {
            evaluator: Arc::new(Shifted { profile, offset }),
            grid,
            half_width: DEFAULT_BRACKET_HALF_WIDTH,
            tolerance: DEFAULT_INVERSE_TOLERANCE,
            center: 0.0,
        })
    }

    fn probe_monotonicity(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6d6f6e6f);
        for _ in 0..MONOTONICITY_PROBES {
            let node = rng.random_range(0..self.grid.len());
            let t = self.grid.node(node);
            let lo = self.center - self.half_width;
            let hi = self.center + self.half_width;
            let mut x = rng.random_range(lo..hi);
            let mut y = rng.random_range(lo..hi);
            if x > y {
                std::mem::swap(&mut x, &mut y);
            }
            if x == y {
                continue;
            }
            let (cx, cy) = (self.eval(node, x), self.eval(node, y));
            if !(cx < cy) {
                return Err(Error::NotIncreasing { t, x, y, cx, cy });
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn eval(&self, node: usize, x: f64) -> f64 {
        self.evaluator.eval(node, self.grid.node(node), x)
    }

    /// Root at one node: closed form when available, otherwise bisection
    /// started around `center`.
    fn root(&self, node: usize, center: f64) -> Result<f64> {
        let t = self.grid.node(node);
        let root = match self.evaluator.inverse_at_zero(node, t) {
            Some(x) => x,
            None => self.bisect(node, center)?,
        };
        let residual = self.eval(node, root).abs();
        if !(residual <= self.tolerance) {
            return Err(Error::InverseTolerance {
                node,
                residual,
                tolerance: self.tolerance,
            });
        }
        Ok(root)
    }

    fn bisect(&self, node: usize, center: f64) -> Result<f64> {
        let cap = self.half_width * f64::from(1u32 << MAX_BRACKET_DOUBLINGS);
        let mut w = self.half_width;
        let (mut lo, mut hi) = loop {
            let (lo, hi) = (center - w, center + w);
            if self.eval(node, lo) <= 0.0 && self.eval(node, hi) >= 0.0 {
                break (lo, hi);
            }
            w *= 2.0;
            if w > cap {
                return Err(Error::RootNotFound {
                    node,
                    half_width: w / 2.0,
                });
            }
        };
        for _ in 0..2048 {
            let mid = lo + 0.5 * (hi - lo);
            if mid <= lo || mid >= hi {
                break;
            }
            let v = self.eval(node, mid);
            if v.abs() <= self.tolerance {
                return Ok(mid);
            }
            if v < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (vl, vh) = (self.eval(node, lo).abs(), self.eval(node, hi).abs());
        Ok(if vl <= vh { lo } else { hi })
    }
}

/// Roots `c⁻¹(t_i, 0)` at every node of the constraint's grid.
///
/// Bisection brackets start at `[x₀ − W, x₀ + W]`, where `x₀` is the root at
/// the previous node (the configured center at node 0), and double up to
/// `2²⁰ W` before giving up.
pub fn inverse_at_zero(c: &ConstraintFunction) -> Result<SampledPath> {
    let mut values = Vec::with_capacity(c.grid.len());
    let mut center = c.center;
    for node in 0..c.grid.len() {
        let x = c.root(node, center)?;
        values.push(x);
        center = x;
    }
    SampledPath::new(c.grid, values)
}

/// A lower-pusher `r` and an upper-puller `l` with cached obstacles
/// `lower_i = r⁻¹(t_i, 0)` and `upper_i = l⁻¹(t_i, 0)`.
#[derive(Debug, Clone)]
pub struct ConstraintPair {
    r: ConstraintFunction,
    l: ConstraintFunction,
    lower: SampledPath,
    upper: SampledPath,
    gap: f64,
}

impl ConstraintPair {
    /// Inverts both constraints and checks separation.
    pub fn from_functions(r: ConstraintFunction, l: ConstraintFunction) -> Result<Self> {
        r.grid.ensure_same(&l.grid)?;
        let lower = inverse_at_zero(&r)?;
        let upper = inverse_at_zero(&l)?;
        Self::assemble(r, l, lower, upper)
    }

    fn assemble(
        r: ConstraintFunction,
        l: ConstraintFunction,
        lower: SampledPath,
        upper: SampledPath,
    ) -> Result<Self> {
        let gap = separation(&lower, &upper)?;
        Ok(Self {
            r,
            l,
            lower,
            upper,
            gap,
        })
    }

    /// Reflection inside `[lower, upper]` with no upper constraint
    /// (`upper ≡ +SENTINEL`).
    pub fn one_sided_lower(lower: SampledPath) -> Result<Self> {
        let upper = SampledPath::constant(*lower.grid(), SENTINEL)?;
        make_band_pair(lower, upper)
    }

    /// Reflection with no lower constraint (`lower ≡ −SENTINEL`).
    pub fn one_sided_upper(upper: SampledPath) -> Result<Self> {
        let lower = SampledPath::constant(*upper.grid(), -SENTINEL)?;
        make_band_pair(lower, upper)
    }

    /// Both obstacles at the sentinels: the reflection is inactive.
    pub fn unconstrained(grid: TimeGrid) -> Result<Self> {
        make_band_pair(
            SampledPath::constant(grid, -SENTINEL)?,
            SampledPath::constant(grid, SENTINEL)?,
        )
    }

    pub fn lower(&self) -> &SampledPath {
        &self.lower
    }

    pub fn upper(&self) -> &SampledPath {
        &self.upper
    }

    pub fn r(&self) -> &ConstraintFunction {
        &self.r
    }

    pub fn l(&self) -> &ConstraintFunction {
        &self.l
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn grid(&self) -> &TimeGrid {
        self.lower.grid()
    }
}

fn separation(lower: &SampledPath, upper: &SampledPath) -> Result<f64> {
    lower.grid().ensure_same(upper.grid())?;
    let (mut gap, mut node) = (f64::INFINITY, 0);
    for (i, (lo, up)) in lower.values().iter().zip(upper.values()).enumerate() {
        let g = up - lo;
        if g < gap {
            gap = g;
            node = i;
        }
    }
    if !(gap > 0.0) {
        return Err(Error::SeparationViolation { gap, node });
    }
    if gap < SMALL_GAP_WARNING {
        warn!("obstacles are nearly touching: minimum gap {gap:e} at node {node}");
    }
    Ok(gap)
}

/// Linear constraints `r(t,x) = x − α_t`, `l(t,x) = x − β_t`.
pub fn make_band_pair(alpha: SampledPath, beta: SampledPath) -> Result<ConstraintPair> {
    alpha.grid().ensure_same(beta.grid())?;
    separation(&alpha, &beta)?;
    let r = ConstraintFunction::shifted(Profile::Identity, alpha.clone())?;
    let l = ConstraintFunction::shifted(Profile::Identity, beta.clone())?;
    ConstraintPair::assemble(r, l, alpha, beta)
}

/// `r(t,x) = ρ(x) − α_t`, `l(t,x) = ρ(x) − β_t`, with obstacles `ρ⁻¹(α)`, `ρ⁻¹(β)`.
pub fn make_rho_pair(alpha: SampledPath, beta: SampledPath) -> Result<ConstraintPair> {
    alpha.grid().ensure_same(beta.grid())?;
    separation(&alpha, &beta)?;
    let lower = alpha.map(rho_inverse)?;
    let upper = beta.map(rho_inverse)?;
    let r = ConstraintFunction::shifted(Profile::Rho, alpha)?;
    let l = ConstraintFunction::shifted(Profile::Rho, beta)?;
    ConstraintPair::assemble(r, l, lower, upper)
}

/// Minimum gap `min_i (upper_i − lower_i)`; an error if it is not positive.
pub fn validate_separation(pair: &ConstraintPair) -> Result<f64> {
    separation(&pair.lower, &pair.upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(1.0, n).unwrap()
    }

    fn constant(n: usize, v: f64) -> SampledPath {
        SampledPath::constant(grid(n), v).unwrap()
    }

    #[test]
    fn linear_shift_inverse() {
        let c = ConstraintFunction::new(Arc::new(FnConstraint(|_t, x| x - 1.0)), grid(8)).unwrap();
        let inv = inverse_at_zero(&c).unwrap();
        for v in inv.values() {
            assert!((v - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn rho_shift_inverse_closed_form_and_bisection() {
        let closed = ConstraintFunction::shifted(Profile::Rho, constant(4, 2.0)).unwrap();
        assert!(inverse_at_zero(&closed).unwrap().values().iter().all(|&v| v == 4.0));

        let numeric =
            ConstraintFunction::new(Arc::new(FnConstraint(|_t, x| rho(x) - 2.0)), grid(4)).unwrap();
        for v in inverse_at_zero(&numeric).unwrap().values() {
            assert!((v - 4.0).abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn cubic_inverse_at_time_zero() {
        let c = ConstraintFunction::new(
            Arc::new(FnConstraint(|t, x| x * x * x + x - (t + 1.0))),
            grid(10),
        )
        .unwrap();
        let inv = inverse_at_zero(&c).unwrap();
        let x0 = inv.values()[0];
        assert!((x0 - 0.682_327_8).abs() < 1e-7, "{x0}");
        for (i, &x) in inv.values().iter().enumerate() {
            assert!(c.eval(i, x).abs() <= 1e-12);
        }
    }

    #[test]
    fn bracket_expands_to_distant_roots() {
        let c = ConstraintFunction::new(Arc::new(FnConstraint(|_t, x| x - 5000.0)), grid(2)).unwrap();
        let inv = inverse_at_zero(&c).unwrap();
        assert!((inv.values()[0] - 5000.0).abs() < 1e-9);
    }

    #[test]
    fn root_not_found_reports_node() {
        // always positive, so no sign change ever appears
        let c = ConstraintFunction::new(
            Arc::new(FnConstraint(|t: f64, x: f64| if t > 0.4 { x.atan() + 10.0 } else { x })),
            grid(4),
        )
        .unwrap();
        match inverse_at_zero(&c) {
            Err(Error::RootNotFound { node, .. }) => assert_eq!(node, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn decreasing_constraint_rejected() {
        let err = ConstraintFunction::new(Arc::new(FnConstraint(|_t: f64, x: f64| -x)), grid(4)).unwrap_err();
        assert!(matches!(err, Error::NotIncreasing { .. }));
    }

    #[test]
    fn band_pair_examples() {
        let p = make_band_pair(constant(4, -1.0), constant(4, 1.0)).unwrap();
        assert_eq!(p.gap(), 2.0);
        assert!(p.lower().values().iter().all(|&v| v == -1.0));
        assert!(p.upper().values().iter().all(|&v| v == 1.0));

        let g = grid(100);
        let alpha = SampledPath::from_fn(g, f64::sin).unwrap();
        let beta = SampledPath::from_fn(g, |t| t.sin() + 0.5).unwrap();
        let p = make_band_pair(alpha, beta).unwrap();
        assert!((p.gap() - 0.5).abs() < 1e-15);

        let err = make_band_pair(constant(4, 0.0), constant(4, 0.0)).unwrap_err();
        assert!(matches!(err, Error::SeparationViolation { gap, .. } if gap == 0.0));
    }

    #[test]
    fn rho_pair_examples() {
        let rho_pair = make_rho_pair(constant(4, -1.0), constant(4, 1.0)).unwrap();
        let band = make_band_pair(constant(4, -1.0), constant(4, 1.0)).unwrap();
        assert_eq!(rho_pair.lower(), band.lower());
        assert_eq!(rho_pair.upper(), band.upper());

        let p = make_rho_pair(constant(4, 1.0), constant(4, 2.0)).unwrap();
        assert!(p.lower().values().iter().all(|&v| v == 1.0));
        assert!(p.upper().values().iter().all(|&v| v == 4.0));

        let p = make_rho_pair(constant(4, -2.0), constant(4, -1.0)).unwrap();
        assert!(p.lower().values().iter().all(|&v| v == -4.0));
        assert!(p.upper().values().iter().all(|&v| v == -1.0));
        assert_eq!(p.gap(), 3.0);
    }

    #[test]
    fn separation_checks() {
        let p = make_band_pair(constant(4, -1.0), constant(4, 1.0)).unwrap();
        assert_eq!(validate_separation(&p).unwrap(), 2.0);
        let tight = make_band_pair(constant(4, 0.0), constant(4, 1e-9)).unwrap();
        assert_eq!(validate_separation(&tight).unwrap(), 1e-9);
        let g = grid(4);
        let crossing = make_band_pair(
            SampledPath::from_fn(g, |t| t).unwrap(),
            SampledPath::from_fn(g, |t| 0.5 - t).unwrap(),
        );
        assert!(matches!(crossing, Err(Error::SeparationViolation { node: 4, .. })));
    }

    #[test]
    fn pair_from_nonlinear_functions() {
        let g = grid(16);
        let r = ConstraintFunction::new(
            Arc::new(FnConstraint(|t, x| x * x * x + x + 1.0 + t)),
            g,
        )
        .unwrap();
        let l = ConstraintFunction::new(Arc::new(FnConstraint(|t, x| x * x * x + x - 2.0 - t)), g).unwrap();
        let pair = ConstraintPair::from_functions(r, l).unwrap();
        for i in 0..g.len() {
            assert!(pair.r().eval(i, pair.lower().values()[i]).abs() <= 1e-12);
            assert!(pair.l().eval(i, pair.upper().values()[i]).abs() <= 1e-12);
        }
        assert!(pair.gap() > 0.0);
    }

    #[test]
    fn sentinel_pairs() {
        let p = ConstraintPair::unconstrained(grid(3)).unwrap();
        assert_eq!(p.lower().values()[0], -SENTINEL);
        assert_eq!(p.upper().values()[0], SENTINEL);
    }

    proptest! {
        #[test]
        fn inverse_reverses_pointwise_order(shift in 0.0f64..5.0, base in -5.0f64..5.0, slope in -3.0f64..3.0) {
            let g = grid(8);
            let c1 = ConstraintFunction::new(
                Arc::new(FnConstraint(move |t, x| x * x * x + x - base - slope * t)), g).unwrap();
            let c2 = ConstraintFunction::new(
                Arc::new(FnConstraint(move |t, x| x * x * x + x - base - slope * t + shift)), g).unwrap();
            let i1 = inverse_at_zero(&c1).unwrap();
            let i2 = inverse_at_zero(&c2).unwrap();
            for (a, b) in i1.values().iter().zip(i2.values()) {
                prop_assert!(*a >= *b - 3e-12);
            }
            for (i, &x) in i1.values().iter().enumerate() {
                prop_assert!(c1.eval(i, x).abs() <= 1e-12);
            }
        }
    }
}

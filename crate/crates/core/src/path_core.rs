//! Uniform-grid sampled paths and the running-envelope machinery.
//!
//! All sup/inf operations treat a path as piecewise constant in the node
//! index: a supremum over `[s, t]` is the maximum over the grid nodes in
//! `[s, t]`. Every envelope below is therefore exact at grid level, and the
//! production algorithms agree bit for bit with the definition-direct
//! evaluations kept in [`reference`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform partition `t_i = i T / n` of `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument(
                "step count must be at least 1".into(),
            ));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of nodes, `n + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.steps {
            self.horizon
        } else {
            i as f64 * self.horizon / self.steps as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }

    /// Grid with `steps / factor` steps over the same horizon.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.steps % factor != 0 {
            return Err(Error::InvalidArgument(format!(
                "cannot coarsen {} steps by factor {factor}",
                self.steps
            )));
        }
        Self::new(self.horizon, self.steps / factor)
    }

    pub(crate) fn ensure_same(&self, other: &TimeGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left_horizon: self.horizon,
                left_steps: self.steps,
                right_horizon: other.horizon,
                right_steps: other.steps,
            })
        }
    }
}

/// Convenience constructor mirroring [`TimeGrid::new`].
pub fn make_grid(horizon: f64, steps: usize) -> Result<TimeGrid> {
    TimeGrid::new(horizon, steps)
}

/// A real-valued function sampled at every node of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl SampledPath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(t_i)` at every node. Fails if `f` produces a non-finite value.
    pub fn from_fn(grid: TimeGrid, f: impl FnMut(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().map(f).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: TimeGrid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()])
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Cumulative sum of `increments` starting from `start`.
    pub fn from_increments(grid: TimeGrid, start: f64, increments: &[f64]) -> Result<Self> {
        if increments.len() != grid.steps() {
            return Err(Error::LengthMismatch {
                expected: grid.steps(),
                found: increments.len(),
            });
        }
        let mut values = Vec::with_capacity(grid.len());
        let mut acc = start;
        values.push(acc);
        for d in increments {
            acc += d;
            values.push(acc);
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| w[1] - w[0])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Node-wise map. The result must stay finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Node-wise combination of two paths on the same grid.
    pub fn zip_with(&self, other: &SampledPath, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.grid, values)
    }

    /// Keeps every `factor`-th node.
    pub fn subsample(&self, factor: usize) -> Result<Self> {
        let grid = self.grid.coarsen(factor)?;
        let values = self.values.iter().step_by(factor).copied().collect();
        Self::new(grid, values)
    }

    pub(crate) fn from_parts_unchecked(grid: TimeGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }
}

/// A sampled path that is nondecreasing node to node (exactly, no tolerance).
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonePath(SampledPath);

impl MonotonePath {
    pub fn new(path: SampledPath) -> Result<Self> {
        for (i, w) in path.values.windows(2).enumerate() {
            if w[1] < w[0] {
                return Err(Error::NotMonotone {
                    node: i + 1,
                    previous: w[0],
                    value: w[1],
                });
            }
        }
        Ok(Self(path))
    }

    /// Cumulative sum of nonnegative node increments, with `initial` at node 0.
    pub(crate) fn from_nonnegative_steps(grid: TimeGrid, initial: f64, steps: &[f64]) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        let mut acc = initial;
        values.push(acc);
        for &d in steps {
            debug_assert!(d >= 0.0);
            acc += d;
            values.push(acc);
        }
        Self(SampledPath::from_parts_unchecked(grid, values))
    }

    pub fn path(&self) -> &SampledPath {
        &self.0
    }

    pub fn into_path(self) -> SampledPath {
        self.0
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }

    pub fn grid(&self) -> &TimeGrid {
        self.0.grid()
    }

    pub fn last(&self) -> f64 {
        self.0.last()
    }
}

pub fn running_sup(p: &SampledPath) -> SampledPath {
    let mut acc = f64::NEG_INFINITY;
    let values = p
        .values
        .iter()
        .map(|&v| {
            acc = acc.max(v);
            acc
        })
        .collect();
    SampledPath::from_parts_unchecked(p.grid, values)
}

pub fn running_inf(p: &SampledPath) -> SampledPath {
    let mut acc = f64::INFINITY;
    let values = p
        .values
        .iter()
        .map(|&v| {
            acc = acc.min(v);
            acc
        })
        .collect();
    SampledPath::from_parts_unchecked(p.grid, values)
}

/// `γ_t = sup_{s ≤ t} [a_s ∧ inf_{r ∈ [s,t]} b_r]`.
///
/// Extending the window from `t_i` to `t_{i+1}` lowers every existing inner
/// term to at most `b_{i+1}` and adds the term `a_{i+1} ∧ b_{i+1}`, so
///
/// ```text
/// γ_{i+1} = (γ_i ∨ a_{i+1}) ∧ b_{i+1},    γ_0 = a_0 ∧ b_0.
/// ```
///
/// Only `min`/`max` are involved, so the result is bitwise identical to the
/// quadratic definition.
pub fn gamma_envelope(a: &SampledPath, b: &SampledPath) -> Result<SampledPath> {
    a.grid.ensure_same(&b.grid)?;
    Ok(SampledPath::from_parts_unchecked(
        a.grid,
        gamma_recursion(&a.values, &b.values),
    ))
}

fn gamma_recursion(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len());
    let mut g = f64::NEG_INFINITY;
    for (&ai, &bi) in a.iter().zip(b) {
        g = g.max(ai).min(bi);
        out.push(g);
    }
    out
}

/// `D_t = inf_{s ≤ t} [φ_s ∨ sup_{r ∈ [s,t]} ψ_r]`, the mirror image of
/// [`gamma_envelope`]:
///
/// ```text
/// D_{i+1} = (D_i ∧ φ_{i+1}) ∨ ψ_{i+1},    D_0 = φ_0 ∨ ψ_0.
/// ```
///
/// One pass, constant work per node.
pub fn dual_envelope(phi: &SampledPath, psi: &SampledPath) -> Result<SampledPath> {
    phi.grid.ensure_same(&psi.grid)?;
    Ok(SampledPath::from_parts_unchecked(
        phi.grid,
        dual_recursion(&phi.values, &psi.values),
    ))
}

pub(crate) fn dual_recursion(phi: &[f64], psi: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phi.len());
    let mut d = f64::INFINITY;
    for (&p, &q) in phi.iter().zip(psi) {
        d = d.min(p).max(q);
        out.push(d);
    }
    out
}

/// Discretized envelope `γⁿ` evaluated at every node of the fine grid.
///
/// The coarse partition takes every `factor`-th fine node. For a fine node
/// `t ∈ [t_k, t_{k+1})` of the coarse partition,
///
/// ```text
/// γⁿ_t = ∨_{j ≤ k} [a_{t_j} ∧ (∧_{i=j..k} b_{t_i}) ∧ b_t]  ∨  [a_t ∧ b_t]
///      = (G_k ∨ a_t) ∧ b_t,
/// ```
///
/// where `G_k` is the envelope of the coarse samples up to `t_k`.
pub fn gamma_envelope_coarse(a: &SampledPath, b: &SampledPath, factor: usize) -> Result<SampledPath> {
    a.grid.ensure_same(&b.grid)?;
    a.grid.coarsen(factor)?;
    let mut out = Vec::with_capacity(a.len());
    let mut coarse = f64::NEG_INFINITY;
    for (i, (&ai, &bi)) in a.values.iter().zip(&b.values).enumerate() {
        if i % factor == 0 {
            coarse = coarse.max(ai).min(bi);
            out.push(coarse);
        } else {
            out.push(coarse.max(ai).min(bi));
        }
    }
    Ok(SampledPath::from_parts_unchecked(a.grid, out))
}

/// Left-endpoint Riemann–Stieltjes sum `Σ x_{t_i} (k_{t_{i+1}} − k_{t_i})`.
pub fn stieltjes_integral(x: &SampledPath, k: &MonotonePath) -> Result<f64> {
    x.grid.ensure_same(k.grid())?;
    Ok(x
        .values
        .iter()
        .zip(k.values().windows(2))
        .map(|(&xi, w)| xi * (w[1] - w[0]))
        .sum())
}

/// Integral against a regulator that jumps at the grid nodes.
///
/// Here `k` is read as the piecewise-constant càdlàg path that jumps by
/// `k_i − k_{i−1}` at `t_i`, with `k_{0−} = 0`. The Lebesgue–Stieltjes
/// integral then charges each jump to the integrand at the jump time:
/// `Σ_i x_{t_i} (k_{t_i} − k_{t_{i−1}})`, including the time-zero jump `k_0`.
pub fn jump_stieltjes_integral(x: &SampledPath, k: &MonotonePath) -> Result<f64> {
    x.grid.ensure_same(k.grid())?;
    let kv = k.values();
    let mut prev = 0.0;
    let mut total = 0.0;
    for (&xi, &ki) in x.values.iter().zip(kv) {
        total += xi * (ki - prev);
        prev = ki;
    }
    Ok(total)
}

pub fn sup_distance(p: &SampledPath, q: &SampledPath) -> Result<f64> {
    p.grid.ensure_same(&q.grid)?;
    Ok(sup_distance_slices(&p.values, &q.values))
}

pub(crate) fn sup_distance_slices(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

/// Definition-direct quadratic evaluations of the envelopes.
///
/// Slow on purpose. They exist to cross-check the one-pass recursions and
/// are written straight from the double sup/inf definitions.
pub mod reference {
    use super::SampledPath;
    use crate::error::Result;

    pub fn gamma_envelope_direct(a: &SampledPath, b: &SampledPath) -> Result<SampledPath> {
        a.grid().ensure_same(b.grid())?;
        let (a, bv) = (a.values(), b.values());
        let n = a.len();
        let mut out = vec![0.0; n];
        for (t, slot) in out.iter_mut().enumerate() {
            let mut best = f64::NEG_INFINITY;
            for s in 0..=t {
                let mut inner = f64::INFINITY;
                for &r in &bv[s..=t] {
                    inner = inner.min(r);
                }
                best = best.max(a[s].min(inner));
            }
            *slot = best;
        }
        SampledPath::new(*b.grid(), out)
    }

    pub fn dual_envelope_direct(phi: &SampledPath, psi: &SampledPath) -> Result<SampledPath> {
        phi.grid().ensure_same(psi.grid())?;
        let (p, q) = (phi.values(), psi.values());
        let n = p.len();
        let mut out = vec![0.0; n];
        for (t, slot) in out.iter_mut().enumerate() {
            let mut best = f64::INFINITY;
            for s in 0..=t {
                let mut inner = f64::NEG_INFINITY;
                for &r in &q[s..=t] {
                    inner = inner.max(r);
                }
                best = best.min(p[s].max(inner));
            }
            *slot = best;
        }
        SampledPath::new(*phi.grid(), out)
    }

    /// `γⁿ` straight from `∨_{j=0}^{n} [a_{t∧t_j} ∧ (∧_{i=j}^{n} b_{t∧t_i})]`.
    pub fn gamma_envelope_coarse_direct(
        a: &SampledPath,
        b: &SampledPath,
        factor: usize,
    ) -> Result<SampledPath> {
        a.grid().ensure_same(b.grid())?;
        let coarse_steps = a.grid().coarsen(factor)?.steps();
        let (av, bv) = (a.values(), b.values());
        let mut out = Vec::with_capacity(av.len());
        for t in 0..av.len() {
            let clip = |j: usize| (j * factor).min(t);
            let mut best = f64::NEG_INFINITY;
            for j in 0..=coarse_steps {
                let mut inner = f64::INFINITY;
                for i in j..=coarse_steps {
                    inner = inner.min(bv[clip(i)]);
                }
                best = best.max(av[clip(j)].min(inner));
            }
            out.push(best);
        }
        SampledPath::new(*a.grid(), out)
    }
}

#[cfg(test)]
mod tests {
    use super::reference::*;
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(1.0, n).unwrap()
    }

    fn path(values: &[f64]) -> SampledPath {
        SampledPath::new(grid(values.len() - 1), values.to_vec()).unwrap()
    }

    fn random_walk(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> SampledPath {
        let mut x = rng.random_range(-1.0..1.0);
        let mut v = vec![x];
        for _ in 0..n {
            x += scale * rng.random_range(-1.0..1.0);
            v.push(x);
        }
        SampledPath::new(grid(n), v).unwrap()
    }

    #[test]
    fn grid_nodes() {
        let g = make_grid(1.0, 4).unwrap();
        assert_eq!(g.nodes().collect::<Vec<_>>(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = make_grid(2.0, 1).unwrap();
        assert_eq!(g.nodes().collect::<Vec<_>>(), vec![0.0, 2.0]);
        assert_eq!(g.dt(), 2.0);
    }

    #[test]
    fn grid_rejects_bad_arguments() {
        assert!(matches!(make_grid(1.0, 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(make_grid(0.0, 4), Err(Error::InvalidArgument(_))));
        assert!(matches!(make_grid(-1.0, 4), Err(Error::InvalidArgument(_))));
        assert!(matches!(make_grid(f64::NAN, 4), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn path_validation() {
        let g = grid(2);
        assert!(matches!(
            SampledPath::new(g, vec![0.0, 1.0]),
            Err(Error::LengthMismatch { expected: 3, found: 2 })
        ));
        assert!(matches!(
            SampledPath::new(g, vec![0.0, f64::INFINITY, 1.0]),
            Err(Error::NonFinite { node: 1 })
        ));
        assert!(matches!(
            MonotonePath::new(path(&[0.0, 1.0, 0.5])),
            Err(Error::NotMonotone { node: 2, .. })
        ));
    }

    #[test]
    fn running_extrema() {
        assert_eq!(running_sup(&path(&[0.0, 2.0, 1.0])).values(), &[0.0, 2.0, 2.0]);
        assert_eq!(running_inf(&path(&[3.0, 1.0, 2.0])).values(), &[3.0, 1.0, 1.0]);
        let c = SampledPath::constant(grid(5), 1.5).unwrap();
        assert_eq!(running_sup(&c), c);
        assert_eq!(running_inf(&c), c);
    }

    #[test]
    fn gamma_simple_cases() {
        let g = grid(100);
        let a = SampledPath::from_fn(g, |t| t).unwrap();
        let b = SampledPath::constant(g, 1.0).unwrap();
        let gamma = gamma_envelope(&a, &b).unwrap();
        assert_eq!(gamma.values(), a.values());

        let a = SampledPath::constant(g, 2.0).unwrap();
        let gamma = gamma_envelope(&a, &b).unwrap();
        assert!(gamma.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn dual_simple_cases() {
        let g = grid(100);
        let phi = SampledPath::from_fn(g, |t| 1.0 - 2.0 * t).unwrap();
        let psi = SampledPath::from_fn(g, |t| -1.0 - 2.0 * t).unwrap();
        let d = dual_envelope(&phi, &psi).unwrap();
        for (v, t) in d.values().iter().zip(g.nodes()) {
            assert_eq!(*v, 1.0 - 2.0 * t);
        }
        assert_eq!(d, dual_envelope_direct(&phi, &psi).unwrap());

        let phi = SampledPath::constant(g, 1.0).unwrap();
        let psi = SampledPath::constant(g, -1.0).unwrap();
        let d = dual_envelope(&phi, &psi).unwrap();
        assert!(d.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn envelopes_match_direct_on_random_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_walk(&mut rng, 64, 0.3);
            let b = random_walk(&mut rng, 64, 0.3);
            assert_eq!(gamma_envelope(&a, &b).unwrap(), gamma_envelope_direct(&a, &b).unwrap());

            let phi = random_walk(&mut rng, 256, 0.3);
            let psi = phi.map(|v| v - 2.0).unwrap();
            assert_eq!(dual_envelope(&phi, &psi).unwrap(), dual_envelope_direct(&phi, &psi).unwrap());
        }
    }

    #[test]
    fn coarse_gamma_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for factor in [1, 2, 4, 8, 64] {
            let a = random_walk(&mut rng, 64, 0.4);
            let b = random_walk(&mut rng, 64, 0.4);
            assert_eq!(
                gamma_envelope_coarse(&a, &b, factor).unwrap(),
                gamma_envelope_coarse_direct(&a, &b, factor).unwrap()
            );
        }
        let a = random_walk(&mut rng, 64, 0.4);
        let b = random_walk(&mut rng, 64, 0.4);
        // factor 1 is the full-resolution envelope
        assert_eq!(gamma_envelope_coarse(&a, &b, 1).unwrap(), gamma_envelope(&a, &b).unwrap());
        assert!(gamma_envelope_coarse(&a, &b, 3).is_err());
    }

    #[test]
    fn gamma_nondecreasing_for_nondecreasing_a_and_constant_b() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inc: Vec<f64> = (0..128).map(|_| rng.random_range(0.0..0.1)).collect();
        let a = SampledPath::from_increments(grid(128), -1.0, &inc).unwrap();
        let b = SampledPath::constant(grid(128), 2.0).unwrap();
        assert!(MonotonePath::new(gamma_envelope(&a, &b).unwrap()).is_ok());
    }

    #[test]
    fn grid_mismatch_detected() {
        let a = SampledPath::zeros(grid(4));
        let b = SampledPath::zeros(grid(8));
        assert!(matches!(gamma_envelope(&a, &b), Err(Error::GridMismatch { .. })));
        assert!(matches!(dual_envelope(&a, &b), Err(Error::GridMismatch { .. })));
        assert!(matches!(sup_distance(&a, &b), Err(Error::GridMismatch { .. })));
        let k = MonotonePath::new(SampledPath::zeros(grid(8))).unwrap();
        assert!(matches!(stieltjes_integral(&a, &k), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn stieltjes_examples() {
        let g = grid(1000);
        let one = SampledPath::constant(g, 1.0).unwrap();
        let zero = SampledPath::zeros(g);
        let k = MonotonePath::new(SampledPath::from_fn(g, |t| t).unwrap()).unwrap();
        assert!((stieltjes_integral(&one, &k).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(stieltjes_integral(&zero, &k).unwrap(), 0.0);
        let x = SampledPath::from_fn(g, |t| t).unwrap();
        let v = stieltjes_integral(&x, &k).unwrap();
        assert!((v - 0.5).abs() <= g.dt());
        // left sum of ∫ t dt is exactly 1/2 − Δt/2
        assert!((v - (0.5 - g.dt() / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn jump_stieltjes_counts_time_zero_jump() {
        let g = grid(2);
        let x = path(&[2.0, 3.0, 5.0]);
        let k = MonotonePath::new(path(&[1.0, 1.0, 4.0])).unwrap();
        assert_eq!(jump_stieltjes_integral(&x, &k).unwrap(), 2.0 + 15.0);
        assert_eq!(stieltjes_integral(&x, &k).unwrap(), 9.0);
        let _ = g;
    }

    #[test]
    fn sup_distance_examples() {
        let p = path(&[0.0, 1.0]);
        assert_eq!(sup_distance(&p, &p).unwrap(), 0.0);
        let z = SampledPath::zeros(grid(1));
        let three = SampledPath::constant(grid(1), 3.0).unwrap();
        assert_eq!(sup_distance(&z, &three).unwrap(), 3.0);
        assert_eq!(sup_distance(&p, &path(&[0.0, -2.0])).unwrap(), 3.0);
    }

    fn values_strategy() -> impl Strategy<Value = Vec<f64>> {
        (1usize..40).prop_flat_map(|n| prop::collection::vec(-10.0f64..10.0, n + 1))
    }

    proptest! {
        #[test]
        fn running_sup_dominates(v in values_strategy()) {
            let p = path(&v);
            let hi = running_sup(&p);
            let lo = running_inf(&p);
            for i in 0..v.len() {
                prop_assert!(hi.values()[i] >= v[i] && v[i] >= lo.values()[i]);
            }
        }

        #[test]
        fn stieltjes_linear_and_additive(
            v in prop::collection::vec(-5.0f64..5.0, 17),
            w in prop::collection::vec(-5.0f64..5.0, 17),
            d1 in prop::collection::vec(0.0f64..1.0, 16),
            d2 in prop::collection::vec(0.0f64..1.0, 16),
            lambda in -3.0f64..3.0,
        ) {
            let g = grid(16);
            let x = path(&v);
            let y = path(&w);
            let k1 = MonotonePath::new(SampledPath::from_increments(g, 0.0, &d1).unwrap()).unwrap();
            let k2 = MonotonePath::new(SampledPath::from_increments(g, 0.0, &d2).unwrap()).unwrap();
            let sum_inc: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| a + b).collect();
            let k12 = MonotonePath::new(SampledPath::from_increments(g, 0.0, &sum_inc).unwrap()).unwrap();
            let comb = x.zip_with(&y, |a, b| lambda * a + b).unwrap();
            let lhs = stieltjes_integral(&comb, &k1).unwrap();
            let rhs = lambda * stieltjes_integral(&x, &k1).unwrap() + stieltjes_integral(&y, &k1).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9);
            let lhs = stieltjes_integral(&x, &k12).unwrap();
            let rhs = stieltjes_integral(&x, &k1).unwrap() + stieltjes_integral(&x, &k2).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }

        #[test]
        fn envelopes_equal_direct(a in values_strategy(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b: Vec<f64> = a.iter().map(|_| rng.random_range(-10.0..10.0)).collect();
            let (pa, pb) = (path(&a), path(&b));
            prop_assert_eq!(gamma_envelope(&pa, &pb).unwrap(), gamma_envelope_direct(&pa, &pb).unwrap());
            prop_assert_eq!(dual_envelope(&pa, &pb).unwrap(), dual_envelope_direct(&pa, &pb).unwrap());
        }
    }
}

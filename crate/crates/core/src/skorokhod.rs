//! Two-sided Skorokhod problem with nonlinear constraints.
//!
//! With `φ_t = l⁻¹(t,0) − s_t` and `ψ_t = r⁻¹(t,0) − s_t` the regulator is
//!
//! ```text
//! k_t = min( [−φ₀⁻] ∨ sup_{r ≤ t} ψ_r ,  inf_{s ≤ t} [φ_s ∨ sup_{r ∈ [s,t]} ψ_r] )
//! ```
//!
//! and the reflected path is `x = s + k`. [`solve`] evaluates this with the
//! one-pass envelopes from [`crate::path_core`]; [`solve_oracle`] is an
//! independent step-by-step projection used to cross-check it.

use log::warn;

use crate::constraints::ConstraintPair;
use crate::error::Result;
use crate::path_core::{dual_recursion, jump_stieltjes_integral, MonotonePath, SampledPath};

#[derive(Debug, Clone, PartialEq)]
pub struct SkorokhodSolution {
    /// Reflected path, `x = s + k`.
    pub x: SampledPath,
    /// Regulator, `k = k_r − k_l`.
    pub k: SampledPath,
    /// Upward pushes off the lower obstacle.
    pub k_r: MonotonePath,
    /// Downward pulls off the upper obstacle.
    pub k_l: MonotonePath,
    /// `(∫|r(t,x_t)| dk_r, ∫|l(t,x_t)| dk_l)`.
    pub flat_off: (f64, f64),
}

impl SkorokhodSolution {
    /// Largest amount by which `x` leaves `[lower, upper]` (0 when contained).
    pub fn containment_violation(&self, pair: &ConstraintPair) -> f64 {
        containment_violation(self.x.values(), pair)
    }
}

pub(crate) fn containment_violation(x: &[f64], pair: &ConstraintPair) -> f64 {
    x.iter()
        .zip(pair.lower().values())
        .zip(pair.upper().values())
        .fold(0.0, |m, ((&x, &lo), &up)| m.max(lo - x).max(x - up))
}

/// Solves `SP(s)` for the pair's obstacles via the explicit representation.
pub fn solve(s: &SampledPath, pair: &ConstraintPair) -> Result<SkorokhodSolution> {
    s.grid().ensure_same(pair.grid())?;
    warn_on_large_increments(s, pair);
    let k = regulator(s.values(), pair.lower().values(), pair.upper().values());
    assemble(s, pair, &k)
}

/// The regulator formula on raw slices (no validation).
pub(crate) fn regulator(s: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    let phi: Vec<f64> = upper.iter().zip(s).map(|(u, s)| u - s).collect();
    let psi: Vec<f64> = lower.iter().zip(s).map(|(l, s)| l - s).collect();
    let dual = dual_recursion(&phi, &psi);
    let start = phi[0].min(0.0);
    let mut psi_max = f64::NEG_INFINITY;
    psi.iter()
        .zip(&dual)
        .map(|(&p, &d)| {
            psi_max = psi_max.max(p);
            start.max(psi_max).min(d)
        })
        .collect()
}

/// Splits `k` into its minimal increasing parts and rebuilds `k = k_r − k_l`
/// and `x = s + k` from them, so both identities hold exactly.
///
/// Each increment is taken against the rebuilt previous value, so rounding
/// does not accumulate along the path.
pub(crate) fn decompose(k: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = k.len();
    let (mut up, mut down, mut rebuilt) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut kr, mut kl) = (0.0, 0.0);
    let mut prev = 0.0;
    for &ki in k {
        let d = ki - prev;
        if d > 0.0 {
            kr += d;
        } else {
            kl -= d;
        }
        prev = kr - kl;
        up.push(kr);
        down.push(kl);
        rebuilt.push(prev);
    }
    (up, down, rebuilt)
}

fn assemble(s: &SampledPath, pair: &ConstraintPair, k: &[f64]) -> Result<SkorokhodSolution> {
    let grid = *s.grid();
    let (up, down, k) = decompose(k);
    let x: Vec<f64> = s.values().iter().zip(&k).map(|(s, k)| s + k).collect();
    let k_r = MonotonePath::new(SampledPath::new(grid, up)?)?;
    let k_l = MonotonePath::new(SampledPath::new(grid, down)?)?;
    let mut sol = SkorokhodSolution {
        x: SampledPath::new(grid, x)?,
        k: SampledPath::new(grid, k)?,
        k_r,
        k_l,
        flat_off: (0.0, 0.0),
    };
    sol.flat_off = flat_off_residuals(&sol, pair)?;
    Ok(sol)
}

fn warn_on_large_increments(s: &SampledPath, pair: &ConstraintPair) {
    let largest = s.increments().fold(0.0, |m: f64, d| m.max(d.abs()));
    if largest > pair.gap() / 2.0 {
        warn!(
            "input increment {largest:e} exceeds half the obstacle gap {:e}; \
             the path is far from continuous at this resolution",
            pair.gap()
        );
    }
}

/// Step-by-step projection: `x_i = clamp(x_{i−1} + Δs_i, lower_i, upper_i)`,
/// with the clamp corrections accumulated into `k_r` and `k_l`.
pub fn solve_oracle(s: &SampledPath, pair: &ConstraintPair) -> Result<SkorokhodSolution> {
    s.grid().ensure_same(pair.grid())?;
    let grid = *s.grid();
    let (sv, lo, up) = (s.values(), pair.lower().values(), pair.upper().values());
    let n = sv.len();
    let (mut x, mut kr, mut kl) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut acc_r, mut acc_l) = (0.0, 0.0);
    let mut prev_x = 0.0;
    for i in 0..n {
        let y = if i == 0 { sv[0] } else { prev_x + (sv[i] - sv[i - 1]) };
        acc_r += (lo[i] - y).max(0.0);
        acc_l += (y - up[i]).max(0.0);
        let xi = y.max(lo[i]).min(up[i]);
        x.push(xi);
        kr.push(acc_r);
        kl.push(acc_l);
        prev_x = xi;
    }
    let k: Vec<f64> = x.iter().zip(sv).map(|(x, s)| x - s).collect();
    let mut sol = SkorokhodSolution {
        x: SampledPath::new(grid, x)?,
        k: SampledPath::new(grid, k)?,
        k_r: MonotonePath::new(SampledPath::new(grid, kr)?)?,
        k_l: MonotonePath::new(SampledPath::new(grid, kl)?)?,
        flat_off: (0.0, 0.0),
    };
    sol.flat_off = flat_off_residuals(&sol, pair)?;
    Ok(sol)
}

/// `(∫|r(t,x_t)| dk_r, ∫|l(t,x_t)| dk_l)`, re-evaluating the constraint
/// functions along `x`. Each regulator jump is charged to the state right
/// after the jump, including the jump at time zero.
pub fn flat_off_residuals(sol: &SkorokhodSolution, pair: &ConstraintPair) -> Result<(f64, f64)> {
    sol.x.grid().ensure_same(pair.grid())?;
    let grid = *sol.x.grid();
    let xv = sol.x.values();
    let r_abs = SampledPath::new(
        grid,
        xv.iter().enumerate().map(|(i, &x)| pair.r().eval(i, x).abs()).collect(),
    )?;
    let l_abs = SampledPath::new(
        grid,
        xv.iter().enumerate().map(|(i, &x)| pair.l().eval(i, x).abs()).collect(),
    )?;
    Ok((
        jump_stieltjes_integral(&r_abs, &sol.k_r)?,
        jump_stieltjes_integral(&l_abs, &sol.k_l)?,
    ))
}

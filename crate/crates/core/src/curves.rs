//! Optimal squeezing frontier F_J(x): the minimum of Var(Jx)/J over states
//! with ⟨Jz⟩/J = x.
//!
//! Points on the frontier are ground states of μJz + Jx². In the Jz basis
//! that operator couples m only to m and m ± 2, so it splits into two
//! independent symmetric tridiagonal parity blocks. Each ground state gives
//! one tabulated point `(x, f)` with tangent slope −μ.
//!
//! For half-integer spins the symmetric ground state stops being the
//! minimizer below a critical x, where two symmetry-broken states with
//! ⟨Jx⟩ ≠ 0 take over. The table for such spins only covers x above that
//! point, located here by the onset of a linear instability of the
//! symmetric state (see [`susceptibility`]).

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Execution;
use crate::spin::{moments, Spin, StateVector};
use crate::tolerances;
use crate::tridiag::SymTridiagonal;

/// Largest |μ| probed when bracketing x targets close to 1.
const MU_MAX_ABS: f64 = 1e14;
/// Smallest |μ| probed when bracketing x targets close to 0.
const MU_MIN_ABS: f64 = 1e-14;
/// Points closer than this in x are treated as duplicates.
const DUPLICATE_X: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub mu: f64,
    pub x: f64,
    pub f: f64,
    pub slope: f64,
    pub ground_energy: f64,
}

impl CurvePoint {
    /// The coherent state |Jz = J⟩, reached as μ → −∞.
    pub fn coherent(spin: Spin) -> CurvePoint {
        CurvePoint {
            mu: f64::NEG_INFINITY,
            x: 1.0,
            f: 0.5,
            slope: f64::INFINITY,
            ground_energy: f64::NEG_INFINITY,
        }
        .with_energy(spin)
    }

    pub(crate) fn with_energy(mut self, spin: Spin) -> CurvePoint {
        self.ground_energy = if self.mu.is_finite() {
            spin.j() * (self.mu * self.x + self.f)
        } else {
            f64::NEG_INFINITY
        };
        self
    }

    /// Value of the tangent line through this point at `x`.
    pub fn tangent_at(&self, x: f64) -> f64 {
        if x == self.x {
            self.f
        } else if self.slope.is_infinite() {
            f64::NEG_INFINITY
        } else {
            self.f + self.slope * (x - self.x)
        }
    }
}

/// How the μ values of a table are chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CurveGrid {
    /// Logarithmic sweep of −μ over `[neg_mu_min, neg_mu_max]`.
    MuSweep {
        neg_mu_min: f64,
        neg_mu_max: f64,
        per_decade: u32,
    },
    /// μ refined by bisection until x lands within 1e-6 of each target.
    XTargets(Vec<f64>),
    /// `points` tangency points placed by chord-slope refinement, which
    /// splits the interval with the largest envelope gap first. Integer
    /// spins also get a geometric ladder near x = 0, where F ~ x² and an
    /// absolute gap criterion would leave the envelope at 0.
    Adaptive { points: usize },
}

impl Default for CurveGrid {
    fn default() -> Self {
        CurveGrid::MuSweep {
            neg_mu_min: 1e-6,
            neg_mu_max: 1e4,
            per_decade: 50,
        }
    }
}

impl CurveGrid {
    /// Stable textual key used for cache file names.
    pub fn key(&self) -> String {
        match self {
            CurveGrid::MuSweep {
                neg_mu_min,
                neg_mu_max,
                per_decade,
            } => format!("sweep:{neg_mu_min:e}:{neg_mu_max:e}:{per_decade}"),
            CurveGrid::XTargets(xs) => {
                let parts: Vec<String> = xs.iter().map(|x| format!("{x:e}")).collect();
                format!("x:{}", parts.join(","))
            }
            CurveGrid::Adaptive { points } => format!("adaptive:{points}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveTable {
    pub spin: Spin,
    /// Strictly increasing in x.
    pub points: Vec<CurvePoint>,
    /// The table is a valid description of F_J for |x| ≥ `valid_from`.
    pub valid_from: f64,
}

// ---------------------------------------------------------------------------
// Ground states.

/// The two parity blocks of μJz + Jx² (even and odd basis indices).
struct Blocks {
    even: SymTridiagonal,
    odd: SymTridiagonal,
}

fn blocks(spin: Spin, mu: f64) -> Blocks {
    let d = spin.dim();
    let off = spin.jx_offdiag();
    // (Jx²)_{ii} and (Jx²)_{i,i+2} from the product of the tridiagonal Jx
    let diag_full: Vec<f64> = (0..d)
        .map(|i| {
            let l = if i > 0 { off[i - 1] * off[i - 1] } else { 0.0 };
            let r = if i + 1 < d { off[i] * off[i] } else { 0.0 };
            l + r + mu * spin.m(i)
        })
        .collect();
    let make = |start: usize| {
        let idx: Vec<usize> = (start..d).step_by(2).collect();
        let diag = idx.iter().map(|&i| diag_full[i]).collect();
        let o = idx.windows(2).map(|w| off[w[0]] * off[w[0] + 1]).collect();
        SymTridiagonal::new(diag, o)
    };
    Blocks {
        even: make(0),
        odd: make(1),
    }
}

/// A ground state of μJz + Jx² with diagnostics.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub mu: f64,
    pub state: StateVector,
    pub energy: f64,
    pub residual: f64,
    /// 0 if the state lives on even basis indices (contains m = J), else 1.
    pub parity: usize,
    pub x: f64,
    pub f: f64,
    pub mean_jx: f64,
    pub mean_jy: f64,
    /// 4⟨Jxψ|(H − E)⁻¹|Jxψ⟩ on the opposite parity block; values ≥ 1 mean
    /// the symmetric state is unstable against acquiring ⟨Jx⟩ ≠ 0.
    pub susceptibility: f64,
}

impl GroundState {
    pub fn point(&self) -> CurvePoint {
        CurvePoint {
            mu: self.mu,
            x: self.x,
            f: self.f,
            slope: -self.mu,
            ground_energy: self.energy,
        }
    }
}

fn scatter(spin: Spin, parity: usize, v: &[f64]) -> Vec<Complex64> {
    let mut amps = vec![Complex64::new(0.0, 0.0); spin.dim()];
    for (k, &a) in v.iter().enumerate() {
        amps[parity + 2 * k] = Complex64::new(a, 0.0);
    }
    amps
}

/// x = ⟨Jz⟩/J and f = ⟨Jx²⟩/J of a real single-parity vector.
fn block_observables(spin: Spin, parity: usize, v: &[f64]) -> (f64, f64) {
    let off = spin.jx_offdiag();
    let d = spin.dim();
    let j = spin.j();
    // 1 − x accumulated directly keeps precision near the coherent state
    let deficit: f64 = v
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let i = parity + 2 * k;
            (i as f64) * a * a
        })
        .sum();
    let x = 1.0 - deficit / j;
    let mut jx2 = 0.0;
    // ‖Jx ψ‖²: Jxψ lives on the other parity
    let mut i = 1 - parity;
    while i < d {
        let mut acc = 0.0;
        if i > 0 && (i - 1) % 2 == parity {
            acc += off[i - 1] * v[(i - 1 - parity) / 2];
        }
        if i + 1 < d && (i + 1) % 2 == parity {
            acc += off[i] * v[(i + 1 - parity) / 2];
        }
        jx2 += acc * acc;
        i += 2;
    }
    (x, jx2 / j)
}

/// Jx v mapped from block `parity` into the opposite block's coordinates.
fn jx_to_other(spin: Spin, parity: usize, v: &[f64]) -> Vec<f64> {
    let off = spin.jx_offdiag();
    let d = spin.dim();
    let other = 1 - parity;
    (other..d)
        .step_by(2)
        .map(|i| {
            let mut acc = 0.0;
            if i > 0 {
                acc += off[i - 1] * v[(i - 1 - parity) / 2];
            }
            if i + 1 < d {
                acc += off[i] * v[(i + 1 - parity) / 2];
            }
            acc
        })
        .collect()
}

fn solve_ground(spin: Spin, mu: f64) -> Result<GroundState> {
    if !mu.is_finite() {
        return Err(Error::InvalidInput(format!("mu must be finite, got {mu}")));
    }
    let b = blocks(spin, mu);
    let even = b.even.lowest_eigenpair()?;
    let odd = if b.odd.is_empty() {
        None
    } else {
        Some(b.odd.lowest_eigenpair()?)
    };
    let (parity, pair, other_block) = match odd {
        Some(o) if o.value < even.value => (1, o, &b.even),
        _ => (0, even, &b.odd),
    };
    let (x, f) = block_observables(spin, parity, &pair.vector);
    let state = StateVector::normalized(spin, scatter(spin, parity, &pair.vector))?;
    let m = moments(&state)?;

    let susceptibility = if other_block.is_empty() {
        0.0
    } else {
        let v = jx_to_other(spin, parity, &pair.vector);
        match other_block.solve_shifted_positive(pair.value, &v) {
            Some(y) => 4.0 * v.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>(),
            None => f64::INFINITY,
        }
    };

    Ok(GroundState {
        mu,
        state,
        energy: pair.value,
        residual: pair.residual,
        parity,
        x,
        f,
        mean_jx: m.mean_jx,
        mean_jy: m.mean_jy,
        susceptibility,
    })
}

/// Lowest eigenpair of μJz + Jx² (parity-block tridiagonal solve).
pub fn ground_state_of(mu: f64, spin: Spin) -> Result<(StateVector, f64)> {
    let g = solve_ground(spin, mu)?;
    Ok((g.state, g.energy))
}

/// Ground state with per-point diagnostics.
pub fn ground_state_detailed(mu: f64, spin: Spin) -> Result<GroundState> {
    solve_ground(spin, mu)
}

/// Linear-response instability measure of the symmetric ground state at μ.
pub fn susceptibility(mu: f64, spin: Spin) -> Result<f64> {
    Ok(solve_ground(spin, mu)?.susceptibility)
}

fn verify_symmetric(g: &GroundState, check_stability: bool) -> Result<()> {
    let tol = tolerances::GROUND_STATE_SYMMETRY;
    if g.mean_jx.abs() > tol
        || g.mean_jy.abs() > tol
        || (check_stability && g.susceptibility >= 1.0)
    {
        return Err(Error::SymmetryBreaking {
            mu: g.mu,
            mean_jx: g.mean_jx,
            mean_jy: g.mean_jy,
            susceptibility: g.susceptibility,
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Validity edge.

/// Where the symmetric branch stops being the minimizer.
#[derive(Clone, Debug)]
pub struct ValidityEdge {
    /// μ at the edge (0 for integer spins).
    pub mu: f64,
    pub point: CurvePoint,
}

/// μ at which the susceptibility of a half-integer spin crosses 1, found by
/// bisection in ln(−μ). Returned on the stable (more negative) side.
pub fn instability_threshold(spin: Spin) -> Result<f64> {
    if spin.is_integer() {
        return Err(Error::InvalidInput(
            "integer spins have no symmetry-breaking threshold".into(),
        ));
    }
    let s = |t: f64| -> Result<f64> { susceptibility(-t.exp(), spin) };
    // scan from the stable (large −μ) side towards μ → 0
    let mut t_hi = 40.0f64;
    if s(t_hi)? >= 1.0 {
        return Err(Error::Bracket(format!(
            "spin {spin}: symmetric state unstable even at mu = {}",
            -t_hi.exp()
        )));
    }
    let mut t_lo = None;
    let mut t = t_hi;
    while t > -40.0 {
        let next = t - 0.5;
        if s(next)? >= 1.0 {
            t_lo = Some(next);
            break;
        }
        t_hi = next;
        t = next;
    }
    let mut t_lo = t_lo
        .ok_or_else(|| Error::Bracket(format!("spin {spin}: no instability for -mu >= e^-40")))?;
    for _ in 0..200 {
        let mid = 0.5 * (t_lo + t_hi);
        if mid <= t_lo || mid >= t_hi {
            break;
        }
        if s(mid)? >= 1.0 {
            t_lo = mid;
        } else {
            t_hi = mid;
        }
    }
    Ok(-t_hi.exp())
}

pub fn validity_edge(spin: Spin) -> Result<ValidityEdge> {
    if spin.is_integer() {
        let g = solve_ground(spin, 0.0)?;
        verify_symmetric(&g, true)?;
        let mut p = g.point();
        // ⟨Jz⟩ vanishes exactly in the Jx = 0 eigenstate
        if p.x.abs() < 1e-12 {
            p.x = 0.0;
        }
        Ok(ValidityEdge { mu: 0.0, point: p })
    } else {
        let mu = instability_threshold(spin)?;
        let g = solve_ground(spin, mu)?;
        verify_symmetric(&g, false)?;
        Ok(ValidityEdge {
            mu,
            point: g.point(),
        })
    }
}

// ---------------------------------------------------------------------------
// Refinement towards an x target.

/// Solves for the ground state whose x is within `tol` of `target`, with
/// μ restricted to `(mu_edge_exclusive, 0]` side of the edge.
pub fn refine_to_x(spin: Spin, target: f64, mu_edge: f64, tol: f64) -> Result<GroundState> {
    let x_of = |t: f64| -> Result<GroundState> { solve_ground(spin, -t.exp()) };
    let t_edge = if mu_edge < 0.0 {
        (-mu_edge).ln()
    } else {
        MU_MIN_ABS.ln()
    };
    let mut lo = t_edge; // small −μ: small x
    let mut hi = MU_MAX_ABS.ln();
    let g_lo = x_of(lo)?;
    if (g_lo.x - target).abs() <= tol {
        return Ok(g_lo);
    }
    if g_lo.x > target {
        return Err(Error::Bracket(format!(
            "x target {target} below reachable x {} at mu = {}",
            g_lo.x,
            -lo.exp()
        )));
    }
    let g_hi = x_of(hi)?;
    if g_hi.x < target - tol {
        return Err(Error::Bracket(format!(
            "x target {target} above reachable x {} at mu = {}",
            g_hi.x,
            -hi.exp()
        )));
    }
    let mut best = if (g_hi.x - target).abs() < (g_lo.x - target).abs() {
        g_hi
    } else {
        g_lo
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g = x_of(mid)?;
        let done = (g.x - target).abs() <= tol;
        let above = g.x > target;
        if (g.x - target).abs() < (best.x - target).abs() {
            best = g;
        }
        if done {
            break;
        }
        if above {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if (best.x - target).abs() > tol {
        return Err(Error::NumericalFailure {
            context: format!("refining mu towards x = {target}"),
            residual: (best.x - target).abs(),
        });
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Tables.

pub fn compute_curve(spin: Spin, grid: &CurveGrid) -> Result<CurveTable> {
    compute_curve_with(spin, grid, Execution::default())
}

pub fn compute_curve_with(spin: Spin, grid: &CurveGrid, exec: Execution) -> Result<CurveTable> {
    let edge = validity_edge(spin)?;
    let check_stability = spin.is_integer();
    let coherent = CurvePoint::coherent(spin);
    let mut points = vec![edge.point, coherent];

    // a half-integer table can degenerate to the coherent point (J = 1/2)
    let degenerate = edge.point.x >= 1.0 - DUPLICATE_X;

    match grid {
        CurveGrid::MuSweep {
            neg_mu_min,
            neg_mu_max,
            per_decade,
        } => {
            if !(*neg_mu_min > 0.0 && neg_mu_max > neg_mu_min && *per_decade > 0) {
                return Err(Error::InvalidInput(format!(
                    "bad sweep grid {}",
                    grid.key()
                )));
            }
            let decades = (neg_mu_max / neg_mu_min).log10();
            let n = (decades * *per_decade as f64).round() as usize + 1;
            let mus: Vec<f64> = (0..n)
                .map(|k| -neg_mu_min * 10f64.powf(k as f64 / *per_decade as f64))
                .filter(|&mu| mu < edge.mu)
                .collect();
            let solved = exec.try_map(&mus, |&mu| {
                let g = solve_ground(spin, mu)?;
                verify_symmetric(&g, check_stability)?;
                Ok::<_, Error>(g.point())
            })?;
            points.extend(solved);
        }
        CurveGrid::XTargets(targets) => {
            let lo = edge.point.x;
            for &t in targets {
                if t.is_nan() || t.abs() > 1.0 {
                    return Err(Error::Domain {
                        x: t,
                        lo: -1.0,
                        hi: 1.0,
                    });
                }
                if t.abs() < lo - tolerances::X_REFINE {
                    return Err(Error::Regime {
                        two_j: spin.two_j(),
                        x: t.abs(),
                        valid_from: lo,
                    });
                }
            }
            let inner: Vec<f64> = targets
                .iter()
                .map(|t| t.abs())
                .filter(|&t| {
                    t > lo + tolerances::X_REFINE && t < 1.0 - tolerances::X_REFINE && !degenerate
                })
                .collect();
            let solved = exec.try_map(&inner, |&t| {
                let g = refine_to_x(spin, t, edge.mu, tolerances::X_REFINE)?;
                verify_symmetric(&g, check_stability)?;
                Ok::<_, Error>(g.point())
            })?;
            points.extend(solved);
        }
        CurveGrid::Adaptive { points: n } => {
            if !degenerate && spin.is_integer() {
                let room = n.saturating_sub(points.len()).min(SMALL_X_LADDER);
                let mus: Vec<f64> = (0..room).map(|k| -1e-6 * 3f64.powi(k as i32)).collect();
                let solved = exec.try_map(&mus, |&mu| {
                    let g = solve_ground(spin, mu)?;
                    verify_symmetric(&g, check_stability)?;
                    Ok::<_, Error>(g.point())
                })?;
                points.extend(solved);
            }
            if !degenerate {
                adaptive_fill(spin, &mut points, *n, check_stability, exec)?;
            }
        }
    }

    let points = finalize(points);
    Ok(CurveTable {
        spin,
        valid_from: edge.point.x.min(1.0),
        points,
    })
}

/// μ = −1e-6·3^k, k < 11: x steps by about 3 up to |μ| ≈ 0.06.
const SMALL_X_LADDER: usize = 11;

/// Sort by x and collapse duplicates, keeping the smaller f.
fn finalize(mut points: Vec<CurvePoint>) -> Vec<CurvePoint> {
    points.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.f.total_cmp(&b.f)));
    let mut out: Vec<CurvePoint> = Vec::with_capacity(points.len());
    for p in points {
        match out.last_mut() {
            Some(last) if (p.x - last.x).abs() <= DUPLICATE_X => {
                // the coherent point is exact; keep it
                if last.x == 1.0 {
                    continue;
                }
                if p.x == 1.0 || p.f < last.f {
                    *last = p;
                }
            }
            _ => out.push(p),
        }
    }
    out
}

/// Height of the gap between the chord and the tangent envelope on one
/// interval, and the chord slope at which to split it.
fn interval_gap(a: &CurvePoint, b: &CurvePoint) -> (f64, f64) {
    let dx = b.x - a.x;
    if dx <= DUPLICATE_X {
        return (0.0, 0.0);
    }
    let chord = (b.f - a.f) / dx;
    if b.slope.is_infinite() {
        // the vertical tangent at b only touches x = b.x
        return ((b.f - (a.f + a.slope * dx)).max(0.0), chord);
    }
    let xs = if (a.slope - b.slope).abs() < f64::EPSILON {
        0.5 * (a.x + b.x)
    } else {
        ((b.f - a.f) + a.slope * a.x - b.slope * b.x) / (a.slope - b.slope)
    };
    let xs = xs.clamp(a.x, b.x);
    let env = a.tangent_at(xs).max(b.tangent_at(xs));
    let chord_val = a.f + chord * (xs - a.x);
    ((chord_val - env).max(0.0), chord)
}

fn adaptive_fill(
    spin: Spin,
    points: &mut Vec<CurvePoint>,
    target: usize,
    check_stability: bool,
    exec: Execution,
) -> Result<()> {
    points.sort_by(|a, b| a.x.total_cmp(&b.x));
    while points.len() < target {
        let gaps: Vec<(usize, f64, f64)> = points
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (g, s) = interval_gap(&w[0], &w[1]);
                (i, g, s)
            })
            .collect();
        let max_gap = gaps.iter().map(|g| g.1).fold(0.0, f64::max);
        if max_gap <= 1e-15 {
            break;
        }
        let mut split: Vec<(usize, f64, f64)> =
            gaps.into_iter().filter(|g| g.1 >= 0.5 * max_gap).collect();
        split.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        split.truncate(target - points.len());
        let mus: Vec<f64> = split.iter().map(|g| -g.2).collect();
        let solved = exec.try_map(&mus, |&mu| {
            let g = solve_ground(spin, mu)?;
            verify_symmetric(&g, check_stability)?;
            Ok::<_, Error>(g.point())
        })?;
        let before = points.len();
        points.extend(solved);
        let merged = finalize(std::mem::take(points));
        *points = merged;
        if points.len() == before {
            break;
        }
    }
    Ok(())
}

impl CurveTable {
    pub fn domain(&self) -> (f64, f64) {
        (self.valid_from, 1.0)
    }

    pub fn contains(&self, x: f64) -> bool {
        let a = x.abs();
        a <= 1.0 + 1e-12 && a >= self.valid_from - 1e-12
    }

    /// Certified lower bound on F_J(x): the larger of the tangent envelope
    /// and the closed-form bound. The closed form only takes over between
    /// the last finite tangency point and x = 1, where F_J has infinite
    /// slope and no tangent can follow it. Negative x uses F_J(−x) = F_J(x).
    pub fn lower_envelope(&self, x: f64) -> Result<f64> {
        Ok(self.envelope_with_slope(x)?.0)
    }

    /// [`lower_envelope`](Self::lower_envelope) with the slope of the active piece.
    pub fn envelope_with_slope(&self, x: f64) -> Result<(f64, f64)> {
        let (t, ts) = self.tangent_envelope_with_slope(x)?;
        let a = analytic_bound(self.spin, x)?;
        if a > t {
            Ok((a, analytic_bound_slope(self.spin, x)?))
        } else {
            Ok((t, ts))
        }
    }

    /// Upper envelope of the tabulated tangent lines alone, clamped at 0.
    pub fn tangent_envelope(&self, x: f64) -> Result<f64> {
        Ok(self.tangent_envelope_with_slope(x)?.0)
    }

    pub fn tangent_envelope_with_slope(&self, x: f64) -> Result<(f64, f64)> {
        if !self.contains(x) {
            return Err(Error::Domain {
                x,
                lo: self.valid_from,
                hi: 1.0,
            });
        }
        let a = x.abs().min(1.0);
        let mut best = f64::NEG_INFINITY;
        let mut slope = 0.0;
        for p in &self.points {
            let v = p.tangent_at(a);
            if v > best {
                best = v;
                slope = if p.slope.is_finite() { p.slope } else { 0.0 };
            }
        }
        let sign = if x < 0.0 { -1.0 } else { 1.0 };
        if best < 0.0 {
            return Ok((0.0, 0.0));
        }
        Ok((best, sign * slope))
    }

    /// Largest x with a finite tangent; beyond it only x = 1 is tabulated.
    pub fn last_finite_x(&self) -> f64 {
        self.points
            .iter()
            .rev()
            .find(|p| p.slope.is_finite())
            .map_or(self.valid_from, |p| p.x)
    }

    /// Minimum second divided difference of f over consecutive triples.
    pub fn min_second_difference(&self) -> f64 {
        self.points
            .windows(3)
            .map(|w| {
                let s1 = (w[1].f - w[0].f) / (w[1].x - w[0].x);
                let s2 = (w[2].f - w[1].f) / (w[2].x - w[1].x);
                2.0 * (s2 - s1) / (w[2].x - w[0].x)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest chord/tangent gap of the envelope over the table; a bound on
    /// how far the envelope can sit below F_J between tabulated points.
    pub fn max_envelope_gap(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| interval_gap(&w[0], &w[1]).0)
            .fold(0.0, f64::max)
    }

    /// Drops points so consecutive x differ by at least `min_dx`; the
    /// envelope stays a valid lower bound because only tangents are removed.
    pub fn thinned(&self, min_dx: f64) -> CurveTable {
        let mut kept: Vec<CurvePoint> = Vec::new();
        for p in self.points.iter().rev() {
            match kept.last() {
                Some(last) if last.x - p.x < min_dx => {}
                _ => kept.push(*p),
            }
        }
        // always keep the lower edge of the domain
        if let (Some(first), Some(last)) = (self.points.first(), kept.last()) {
            if last.x != first.x {
                if kept.len() > 1 && kept[kept.len() - 1].x - first.x < min_dx {
                    kept.pop();
                }
                kept.push(*first);
            }
        }
        kept.reverse();
        CurveTable {
            spin: self.spin,
            points: kept,
            valid_from: self.valid_from,
        }
    }
}

pub fn lower_envelope_eval(table: &CurveTable, x: f64) -> Result<f64> {
    table.lower_envelope(x)
}

// ---------------------------------------------------------------------------
// Closed forms.

/// Analytic lower bound on Var(Jx)/J from the Casimir inequality and the
/// Heisenberg relation. Always valid, not tight.
pub fn analytic_bound(spin: Spin, x: f64) -> Result<f64> {
    if x.is_nan() || x.abs() > 1.0 {
        return Err(Error::Domain {
            x,
            lo: -1.0,
            hi: 1.0,
        });
    }
    let j = spin.j();
    let jz = x * j;
    let a = spin.casimir() - jz * jz;
    let rad = a * a - jz * jz;
    if rad < -1e-12 * a.abs().max(1.0).powi(2) {
        return Err(Error::Domain {
            x,
            lo: -1.0,
            hi: 1.0,
        });
    }
    let root = rad.max(0.0).sqrt();
    // (a − √(a² − jz²))/2 written without cancellation
    let var = if jz == 0.0 {
        0.0
    } else {
        jz * jz / (2.0 * (a + root))
    };
    Ok(var / j)
}

/// d/dx of [`analytic_bound`] by central differences clipped to [−1, 1].
pub fn analytic_bound_slope(spin: Spin, x: f64) -> Result<f64> {
    let h = 1e-7;
    let lo = (x - h).max(-1.0);
    let hi = (x + h).min(1.0);
    Ok((analytic_bound(spin, hi)? - analytic_bound(spin, lo)?) / (hi - lo))
}

/// F_{1/2}(x) = x²/2: for spin 1/2, Var(Jx) ≥ ⟨Jz⟩² with equality on real states.
pub fn spin_half_frontier(x: f64) -> f64 {
    0.5 * x * x
}

/// F_1(x) = (1 − √(1 − x²))/2.
pub fn spin_one_frontier(x: f64) -> f64 {
    let s = (1.0 - x * x).max(0.0).sqrt();
    // (1 − s)/2 = x²/(2(1 + s))
    x * x / (2.0 * (1.0 + s))
}

/// Shared handle used by callers that cache tables.
pub type SharedTable = Arc<CurveTable>;

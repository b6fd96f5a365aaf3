//! Monte Carlo variational minimization of μ⟨Jz⟩ + Var(Jx) over pure states.
//!
//! The variance is quartic in the amplitudes, so for half-integer spins the
//! minimizer is not an eigenvector of any fixed operator. The search here is
//! greedy random descent: one amplitude at a time is perturbed, the vector is
//! renormalized and the move is kept only if the functional strictly drops.
//!
//! All quadratic forms (norm, ⟨Jz⟩, ⟨Jx⟩, ⟨Jx²⟩) are updated incrementally,
//! so a proposal costs O(1) regardless of the spin.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::curves::{ground_state_detailed, refine_to_x};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::spin::{moments, Spin, StateVector};

/// Annealed perturbation schedule. The generator seed is required.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub seed: u64,
    pub initial_scale: f64,
    /// Scale multiplier applied after `patience` consecutive rejections.
    pub shrink: f64,
    pub patience: u32,
    /// Converged once the scale falls below this.
    pub min_scale: f64,
    pub max_iterations: u64,
    /// Search over complex amplitudes instead of real ones.
    pub complex: bool,
    /// Keep the functional value after every accepted move.
    pub record_trace: bool,
}

impl Schedule {
    pub fn new(seed: u64) -> Self {
        Schedule {
            seed,
            initial_scale: 0.1,
            shrink: 0.9,
            patience: 100,
            min_scale: 1e-9,
            max_iterations: 20_000_000,
            complex: false,
            record_trace: false,
        }
    }

    fn for_restart(&self, index: u64) -> Schedule {
        Schedule {
            seed: self
                .seed
                .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug)]
pub struct VariationalResult {
    pub mu: f64,
    pub state: StateVector,
    pub x: f64,
    /// Var(Jx)/J.
    pub f: f64,
    pub mean_jx: f64,
    /// μ⟨Jz⟩ + Var(Jx), recomputed from `state`.
    pub functional_value: f64,
    pub iterations: u64,
    pub accepted: u64,
    pub converged: bool,
    /// The state was improved by [`polish`] after the random descent.
    pub polished: bool,
    /// Functional after each accepted move (empty unless requested).
    pub trace: Vec<f64>,
}

/// Incrementally maintained quadratic forms of an unnormalized vector.
struct Walker {
    spin: Spin,
    mu: f64,
    off: Vec<f64>,
    psi: Vec<Complex64>,
    /// Jx ψ
    u: Vec<Complex64>,
    norm: f64,
    sz: f64,
    sx: f64,
    sxx: f64,
}

impl Walker {
    fn new(spin: Spin, mu: f64, psi: Vec<Complex64>) -> Self {
        let off = spin.jx_offdiag();
        let mut w = Walker {
            spin,
            mu,
            off,
            u: vec![Complex64::new(0.0, 0.0); psi.len()],
            psi,
            norm: 0.0,
            sz: 0.0,
            sx: 0.0,
            sxx: 0.0,
        };
        w.recompute();
        w
    }

    fn recompute(&mut self) {
        crate::spin::apply_jx(&self.off, &self.psi, &mut self.u);
        self.norm = self.psi.iter().map(|a| a.norm_sqr()).sum();
        self.sz = self
            .psi
            .iter()
            .enumerate()
            .map(|(i, a)| self.spin.m(i) * a.norm_sqr())
            .sum();
        self.sx = self
            .psi
            .iter()
            .zip(&self.u)
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        self.sxx = self.u.iter().map(|b| b.norm_sqr()).sum();
    }

    fn functional_of(&self, norm: f64, sz: f64, sx: f64, sxx: f64) -> f64 {
        let mx = sx / norm;
        self.mu * sz / norm + sxx / norm - mx * mx
    }

    /// Rounding level of the functional; smaller "improvements" are noise.
    fn guard(&self, norm: f64, sz: f64, sx: f64, sxx: f64) -> f64 {
        let mx = sx / norm;
        8.0 * f64::EPSILON * ((self.mu * sz / norm).abs() + sxx / norm + mx * mx)
    }

    fn functional(&self) -> f64 {
        self.functional_of(self.norm, self.sz, self.sx, self.sxx)
    }

    /// (Jx² ψ)_i = (Jx u)_i
    fn jx2_psi(&self, i: usize) -> Complex64 {
        let d = self.psi.len();
        let mut acc = Complex64::new(0.0, 0.0);
        if i > 0 {
            acc += self.u[i - 1] * self.off[i - 1];
        }
        if i + 1 < d {
            acc += self.u[i + 1] * self.off[i];
        }
        acc
    }

    fn jx2_diag(&self, i: usize) -> f64 {
        let d = self.psi.len();
        let l = if i > 0 { self.off[i - 1].powi(2) } else { 0.0 };
        let r = if i + 1 < d { self.off[i].powi(2) } else { 0.0 };
        l + r
    }

    /// Sums after adding `delta` to amplitude `i`.
    fn propose(&self, i: usize, delta: Complex64) -> (f64, f64, f64, f64) {
        let old = self.psi[i];
        let new = old + delta;
        let dn = new.norm_sqr() - old.norm_sqr();
        let norm = self.norm + dn;
        let sz = self.sz + self.spin.m(i) * dn;
        // ΔS = 2 Re(δ̄ (Aψ)_i) + |δ|² A_ii for real symmetric A
        let sx = self.sx + 2.0 * (delta.conj() * self.u[i]).re;
        let sxx = self.sxx
            + 2.0 * (delta.conj() * self.jx2_psi(i)).re
            + delta.norm_sqr() * self.jx2_diag(i);
        (norm, sz, sx, sxx)
    }

    fn accept(&mut self, i: usize, delta: Complex64, sums: (f64, f64, f64, f64)) {
        self.psi[i] += delta;
        let d = self.psi.len();
        if i > 0 {
            self.u[i - 1] += delta * self.off[i - 1];
        }
        if i + 1 < d {
            self.u[i + 1] += delta * self.off[i];
        }
        (self.norm, self.sz, self.sx, self.sxx) = sums;
        // exact power-of-two rescaling keeps every ratio bit-identical
        if !(0.25..=4.0).contains(&self.norm) {
            let k = (self.norm.log2() / 2.0).round() as i32;
            let s = 2f64.powi(-k);
            let s2 = s * s;
            self.psi.iter_mut().for_each(|a| *a *= s);
            self.u.iter_mut().for_each(|a| *a *= s);
            self.norm *= s2;
            self.sz *= s2;
            self.sx *= s2;
            self.sxx *= s2;
        }
    }
}

fn prepare_seed(seed_state: &StateVector, complex: bool) -> Result<Vec<Complex64>> {
    if complex {
        return Ok(seed_state.amplitudes().to_vec());
    }
    if !seed_state.is_real_up_to_phase(1e-12) {
        return Err(Error::InvalidInput(
            "seed has complex amplitudes; enable complex mode".into(),
        ));
    }
    Ok(seed_state
        .real_amplitudes()
        .into_iter()
        .map(|a| Complex64::new(a, 0.0))
        .collect())
}

fn finish(
    spin: Spin,
    mu: f64,
    psi: Vec<Complex64>,
    iterations: u64,
    accepted: u64,
    converged: bool,
    trace: Vec<f64>,
) -> Result<VariationalResult> {
    let state = StateVector::normalized(spin, psi)?;
    let m = moments(&state)?;
    let j = spin.j();
    Ok(VariationalResult {
        mu,
        x: m.mean_jz / j,
        f: m.var_jx / j,
        mean_jx: m.mean_jx,
        functional_value: mu * m.mean_jz + m.var_jx,
        state,
        iterations,
        accepted,
        converged,
        polished: false,
        trace,
    })
}

/// Greedy stochastic descent from `seed_state`. The result is a local
/// minimum; near-Jx-eigenstates are stationary, so use [`minimize_at_mu`]
/// for the global problem. Hitting the iteration cap
/// before the scale anneals below `min_scale` gives `converged = false`.
pub fn variational_minimize(
    spin: Spin,
    mu: f64,
    seed_state: &StateVector,
    schedule: &Schedule,
) -> Result<VariationalResult> {
    if seed_state.spin() != spin {
        return Err(Error::InvalidInput(format!(
            "seed spin {} does not match {spin}",
            seed_state.spin()
        )));
    }
    if !mu.is_finite() {
        return Err(Error::InvalidInput(format!("mu must be finite, got {mu}")));
    }
    let d = spin.dim();
    let mut walker = Walker::new(spin, mu, prepare_seed(seed_state, schedule.complex)?);
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut current = walker.functional();
    let mut scale = schedule.initial_scale;
    let mut rejections = 0u32;
    let mut iterations = 0u64;
    let mut accepted = 0u64;
    let mut trace = Vec::new();
    let coords = if schedule.complex { 2 * d } else { d };

    while scale >= schedule.min_scale && iterations < schedule.max_iterations {
        iterations += 1;
        let c = rng.random_range(0..coords);
        let step = scale * rng.random_range(-1.0..1.0);
        let (i, delta) = if c < d {
            (c, Complex64::new(step, 0.0))
        } else {
            (c - d, Complex64::new(0.0, step))
        };
        let sums = walker.propose(i, delta);
        let value = walker.functional_of(sums.0, sums.1, sums.2, sums.3);
        let guard = walker.guard(sums.0, sums.1, sums.2, sums.3);
        if value < current - guard && sums.0 > 0.0 {
            walker.accept(i, delta, sums);
            current = value;
            accepted += 1;
            rejections = 0;
            if schedule.record_trace {
                trace.push(value);
            }
        } else {
            rejections += 1;
            if rejections >= schedule.patience {
                scale *= schedule.shrink;
                rejections = 0;
            }
        }
    }
    let converged = scale < schedule.min_scale;
    finish(spin, mu, walker.psi, iterations, accepted, converged, trace)
}

// ---------------------------------------------------------------------------
// Restarts and the constrained problem.

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub schedule: Schedule,
    /// Rotation angle about y used to tilt the symmetric seed towards ±Jx;
    /// `None` picks min(0.2, 0.3/J), which keeps ⟨Jx⟩ of the seed O(1).
    pub tilt: Option<f64>,
    /// Accuracy of the outer μ search on x.
    pub x_tol: f64,
    /// Follow every random descent with [`polish`].
    pub polish: bool,
    pub execution: Execution,
}

impl SearchOptions {
    pub fn new(seed: u64) -> Self {
        SearchOptions {
            schedule: Schedule::new(seed),
            tilt: None,
            x_tol: 2e-5,
            polish: true,
            execution: Execution::default(),
        }
    }

    pub fn tilt_for(&self, spin: Spin) -> f64 {
        self.tilt.unwrap_or_else(|| (0.3 / spin.j()).min(0.2))
    }
}

/// Lowest eigenpair of μJz + (Jx − a)² (dense).
///
/// Var(Jx) = min_a ⟨(Jx − a)²⟩, so the minimum of μ⟨Jz⟩ + Var(Jx) over
/// states equals the minimum over a of this ground energy.
pub fn shifted_ground(spin: Spin, mu: f64, a: f64) -> Result<(StateVector, f64)> {
    let d = spin.dim();
    let off = spin.jx_offdiag();
    let mut shifted = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        shifted[(i, i)] = -a;
        if i + 1 < d {
            shifted[(i, i + 1)] = off[i];
            shifted[(i + 1, i)] = off[i];
        }
    }
    let mut h = &shifted * &shifted;
    for i in 0..d {
        h[(i, i)] += mu * spin.m(i);
    }
    let e = nalgebra::SymmetricEigen::new(h);
    let (k, value) = e
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("non-empty spectrum");
    let v: Vec<f64> = e.eigenvectors.column(k).iter().copied().collect();
    Ok((StateVector::from_real(spin, &v)?, value))
}

/// Descends further from a random-descent result by alternating
/// a ← ⟨Jx⟩ and ψ ← ground state of μJz + (Jx − a)², solved as the root of
/// ⟨Jx⟩(a) = a nearest the input. Each alternation step never increases
/// the functional; the input is returned unchanged if nothing improves.
pub fn polish(spin: Spin, r: VariationalResult) -> Result<VariationalResult> {
    let mu = r.mu;
    let a0 = r.mean_jx;
    if a0.abs() < 1e-9 {
        return Ok(r);
    }
    let sign = a0.signum();
    let eval = |b: f64| -> Result<(f64, StateVector)> {
        let (st, _) = shifted_ground(spin, mu, sign * b)?;
        let m = crate::spin::moments(&st)?;
        Ok((sign * m.mean_jx - b, st))
    };
    let j = spin.j();
    let mut b1 = a0.abs();
    let (mut h1, mut s1) = eval(b1)?;
    let mut b2 = b1;
    let (mut h2, mut s2) = (h1, s1.clone());
    let mut found = h1 == 0.0;
    for _ in 0..60 {
        if found {
            break;
        }
        b2 = if h1 > 0.0 {
            (b2 * 2.0).min(j)
        } else {
            b2 * 0.5
        };
        (h2, s2) = eval(b2)?;
        if h2 == 0.0 || (h1 > 0.0) != (h2 > 0.0) {
            found = true;
        } else if b2 >= j || b2 < 1e-9 {
            break;
        } else {
            b1 = b2;
            h1 = h2;
            s1 = s2.clone();
        }
    }
    if !found {
        return Ok(r);
    }
    let tol = 1e-13 * j.max(1.0);
    let root = if h1 == 0.0 {
        s1
    } else if h2 == 0.0 {
        s2
    } else {
        solve_root_bracketed((b1, (h1, s1)), (b2, (h2, s2)), |p| p.0, tol, eval)
            .or_else(|_| -> Result<(f64, StateVector)> {
                // accept the closer end if the bracket collapsed first
                Ok(if h1.abs() < h2.abs() {
                    eval(b1)?
                } else {
                    eval(b2)?
                })
            })?
            .1
    };
    let m = crate::spin::moments(&root)?;
    let value = mu * m.mean_jz + m.var_jx;
    if value >= r.functional_value {
        return Ok(r);
    }
    Ok(VariationalResult {
        x: m.mean_jz / j,
        f: m.var_jx / j,
        mean_jx: m.mean_jx,
        functional_value: value,
        state: root,
        polished: true,
        ..r
    })
}

/// exp(−iθJy)·ψ; real for real ψ because −iJy is real antisymmetric.
pub fn rotate_about_y(state: &StateVector, theta: f64) -> Result<StateVector> {
    let spin = state.spin();
    let d = spin.dim();
    // −iθJy = θ(J₋ − J₊)/2
    let mut k = DMatrix::<f64>::zeros(d, d);
    for i in 0..d - 1 {
        let e = 0.5 * theta * spin.raising_element(i);
        k[(i, i + 1)] = -e;
        k[(i + 1, i)] = e;
    }
    let r = k.exp();
    let amps: Vec<Complex64> = (0..d)
        .map(|row| {
            (0..d)
                .map(|col| state.amplitudes()[col] * r[(row, col)])
                .sum()
        })
        .collect();
    StateVector::normalized(spin, amps)
}

/// The three deterministic seeds at μ: the symmetric ground state and the
/// same state tilted by ±`tilt` about y.
pub fn restart_seeds(spin: Spin, mu: f64, tilt: f64) -> Result<Vec<StateVector>> {
    let g = ground_state_detailed(mu, spin)?;
    Ok(vec![
        rotate_about_y(&g.state, tilt)?,
        rotate_about_y(&g.state, -tilt)?,
        g.state,
    ])
}

/// Runs every seed at μ and returns all results in seed order.
pub fn minimize_restarts(
    spin: Spin,
    mu: f64,
    seeds: &[StateVector],
    opts: &SearchOptions,
) -> Result<Vec<VariationalResult>> {
    let indexed: Vec<(u64, &StateVector)> = seeds
        .iter()
        .enumerate()
        .map(|(i, s)| (i as u64, s))
        .collect();
    opts.execution.try_map(&indexed, |(i, s)| {
        let r = variational_minimize(spin, mu, s, &opts.schedule.for_restart(*i))?;
        if opts.polish {
            polish(spin, r)
        } else {
            Ok(r)
        }
    })
}

fn best_of(results: Vec<VariationalResult>) -> VariationalResult {
    results
        .into_iter()
        .reduce(|a, b| {
            if b.functional_value < a.functional_value {
                b
            } else {
                a
            }
        })
        .expect("at least one restart")
}

/// Best of the three restarts at fixed μ.
pub fn minimize_at_mu(spin: Spin, mu: f64, opts: &SearchOptions) -> Result<VariationalResult> {
    let seeds = restart_seeds(spin, mu, opts.tilt_for(spin))?;
    Ok(best_of(minimize_restarts(spin, mu, &seeds, opts)?))
}

/// Minimum of Var(Jx) at ⟨Jz⟩/J = `x_target`: outer root-find on μ, inner
/// multi-start variational search.
pub fn minimize_at_x(spin: Spin, x_target: f64, opts: &SearchOptions) -> Result<VariationalResult> {
    if !(0.0..1.0).contains(&x_target) {
        return Err(Error::Domain {
            x: x_target,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let eval = |mu: f64| minimize_at_mu(spin, mu, opts);
    let at_zero = eval(0.0)?;
    if (at_zero.x - x_target).abs() <= opts.x_tol {
        return Ok(at_zero);
    }
    if at_zero.x > x_target {
        return Err(Error::Bracket(format!(
            "x target {x_target} below x = {} reached at mu = 0",
            at_zero.x
        )));
    }
    // expand until the strongly negative end overshoots the target
    let mut lo_mu = -1.0;
    let mut lo = eval(lo_mu)?;
    let mut expansions = 0;
    while lo.x < x_target {
        expansions += 1;
        if expansions > 40 {
            return Err(Error::Bracket(format!(
                "x target {x_target} not reached for mu down to {lo_mu}"
            )));
        }
        lo_mu *= 4.0;
        lo = eval(lo_mu)?;
    }
    if (lo.x - x_target).abs() <= opts.x_tol {
        return Ok(lo);
    }
    solve_root_bracketed(
        (lo_mu, lo),
        (0.0, at_zero),
        |r: &VariationalResult| r.x - x_target,
        opts.x_tol,
        eval,
    )
}

/// Illinois-modified regula falsi on a bracketed root of `residual(eval(μ))`.
/// The endpoints carry their evaluated payloads so nothing is recomputed.
fn solve_root_bracketed<T, R, E>(
    a: (f64, T),
    b: (f64, T),
    residual: R,
    tol: f64,
    eval: E,
) -> Result<T>
where
    R: Fn(&T) -> f64,
    E: Fn(f64) -> Result<T>,
{
    let (mut xa, mut pa) = a;
    let (mut xb, mut pb) = b;
    let mut fa = residual(&pa);
    let mut fb = residual(&pb);
    if fa * fb > 0.0 {
        return Err(Error::Bracket(format!(
            "no sign change between mu = {xa} and mu = {xb}"
        )));
    }
    let mut side = 0i8;
    for iter in 0..200 {
        // fall back to bisection every few steps to guard against stalls
        let mut xm = if iter % 4 == 3 {
            0.5 * (xa + xb)
        } else {
            (xa * fb - xb * fa) / (fb - fa)
        };
        if !xm.is_finite() || xm <= xa.min(xb) || xm >= xa.max(xb) {
            xm = 0.5 * (xa + xb);
        }
        let pm = eval(xm)?;
        let fm = residual(&pm);
        if fm.abs() <= tol {
            return Ok(pm);
        }
        if fm * fb > 0.0 {
            xb = xm;
            pb = pm;
            fb = fm;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            xa = xm;
            pa = pm;
            fa = fm;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (xb - xa).abs() <= 1e-15 * xa.abs().max(xb.abs()).max(1e-300) {
            break;
        }
    }
    let p = if residual(&pa).abs() < residual(&pb).abs() {
        pa
    } else {
        pb
    };
    let r = residual(&p);
    if r.abs() <= tol {
        Ok(p)
    } else {
        Err(Error::NumericalFailure {
            context: "root search on mu".into(),
            residual: r.abs(),
        })
    }
}

// ---------------------------------------------------------------------------
// Bifurcation.

#[derive(Clone, Debug, Serialize)]
pub struct BranchSample {
    pub x_probe: f64,
    pub mu: f64,
    pub symmetric_functional: f64,
    /// (x, ⟨Jx⟩, Var(Jx)/J, functional) of the +tilt and −tilt branches.
    pub plus: (f64, f64, f64, f64),
    pub minus: (f64, f64, f64, f64),
    pub broken: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BifurcationReport {
    pub spin: Spin,
    pub x_critical: f64,
    pub bracket: (f64, f64),
    pub branch_samples: Vec<BranchSample>,
    /// x where the symmetric state becomes linearly unstable (cross-check).
    pub x_linear_instability: f64,
    pub converged: bool,
    pub warning: Option<String>,
}

/// Minimum functional drop that counts as a genuinely broken branch.
pub const BRANCH_SPLIT: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct BifurcationOptions {
    pub search: SearchOptions,
    pub bracket_width: f64,
}

impl BifurcationOptions {
    pub fn new(seed: u64) -> Self {
        BifurcationOptions {
            search: SearchOptions::new(seed),
            bracket_width: 1e-3,
        }
    }
}

fn probe(spin: Spin, x: f64, opts: &BifurcationOptions) -> Result<BranchSample> {
    let sym = refine_to_x(spin, x, 0.0, 1e-10)?;
    let seeds = vec![
        rotate_about_y(&sym.state, opts.search.tilt_for(spin))?,
        rotate_about_y(&sym.state, -opts.search.tilt_for(spin))?,
    ];
    let r = minimize_restarts(spin, sym.mu, &seeds, &opts.search)?;
    let broken_value = r[0].functional_value.min(r[1].functional_value);
    let pack = |v: &VariationalResult| (v.x, v.mean_jx, v.f, v.functional_value);
    Ok(BranchSample {
        x_probe: sym.x,
        mu: sym.mu,
        symmetric_functional: sym.energy,
        plus: pack(&r[0]),
        minus: pack(&r[1]),
        broken: sym.energy - broken_value > BRANCH_SPLIT,
    })
}

/// Locates the x below which symmetry-broken states beat the symmetric
/// ground state, by bisection on x comparing both at the same μ.
pub fn locate_bifurcation(spin: Spin, opts: &BifurcationOptions) -> Result<BifurcationReport> {
    if spin.is_integer() {
        return Err(Error::InvalidInput(format!(
            "spin {spin} is integer; the bifurcation exists only for half-integer spins"
        )));
    }
    let edge = crate::curves::validity_edge(spin)?;
    if spin.two_j() == 1 {
        // every symmetric ground state of J = 1/2 is the coherent state
        return Ok(BifurcationReport {
            spin,
            x_critical: 1.0,
            bracket: (1.0, 1.0),
            branch_samples: Vec::new(),
            x_linear_instability: edge.point.x,
            converged: true,
            warning: None,
        });
    }
    // the symmetric branch only reaches down to its μ → 0⁻ limit
    let floor = ground_state_detailed(-1e-6, spin)?.x;
    let mut lo = (floor + 0.01).max(0.6);
    let mut hi = 0.99;
    let mut samples = Vec::new();

    let s_lo = probe(spin, lo, opts)?;
    let s_hi = probe(spin, hi, opts)?;
    let (lo_broken, hi_broken) = (s_lo.broken, s_hi.broken);
    samples.push(s_lo);
    samples.push(s_hi);
    if !lo_broken || hi_broken {
        return Ok(BifurcationReport {
            spin,
            x_critical: 0.5 * (lo + hi),
            bracket: (lo, hi),
            branch_samples: samples,
            x_linear_instability: edge.point.x,
            converged: false,
            warning: Some(format!(
                "branches indistinguishable over the probe interval (broken at {lo}: {lo_broken}, at {hi}: {hi_broken})"
            )),
        });
    }
    while hi - lo > opts.bracket_width {
        let mid = 0.5 * (lo + hi);
        let s = probe(spin, mid, opts)?;
        if s.broken {
            lo = mid;
        } else {
            hi = mid;
        }
        samples.push(s);
    }
    samples.sort_by(|a, b| a.x_probe.total_cmp(&b.x_probe));
    Ok(BifurcationReport {
        spin,
        x_critical: 0.5 * (lo + hi),
        bracket: (lo, hi),
        branch_samples: samples,
        x_linear_instability: edge.point.x,
        converged: true,
        warning: None,
    })
}

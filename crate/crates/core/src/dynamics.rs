//! Unitary evolution under one-axis twisting, two-axis twisting and the
//! adiabatic ramp ωJz + χ(t)Jx².
//!
//! Every Hamiltonian here is a real symmetric matrix in the Jz basis. Constant
//! ones are diagonalized once. The ramp is integrated with a fourth-order
//! commutator-free Magnus scheme whose step is halved until the sampled
//! moments stop moving.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curves::ground_state_of;
use crate::error::{Error, Result};
use crate::spin::{covariance_xy, moments_of, Spin, SpinMoments, StateVector};

/// Change in any sampled moment tolerated when the step is halved.
pub const STEP_CONVERGENCE: f64 = 1e-8;
const MAX_HALVINGS: u32 = 14;
/// Largest number of Magnus steps attempted in one propagation.
pub const MAX_RAMP_STEPS: f64 = 5e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Ramp {
    /// χ(t) = χ_max·t/T, held at χ_max after T.
    Linear { chi_max: f64, duration: f64 },
    /// (t, χ) knots starting at (0, 0), linear in between, held after the last.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

impl Ramp {
    fn knots(&self) -> Vec<(f64, f64)> {
        match self {
            Ramp::Linear { chi_max, duration } => vec![(0.0, 0.0), (*duration, *chi_max)],
            Ramp::PiecewiseLinear { knots } => knots.clone(),
        }
    }

    pub fn duration(&self) -> f64 {
        self.knots().last().map_or(0.0, |k| k.0)
    }

    pub fn chi(&self, t: f64) -> f64 {
        let k = self.knots();
        if t <= k[0].0 {
            return k[0].1;
        }
        for w in k.windows(2) {
            let ((t0, c0), (t1, c1)) = (w[0], w[1]);
            if t <= t1 {
                return c0 + (c1 - c0) * (t - t0) / (t1 - t0);
            }
        }
        k[k.len() - 1].1
    }

    fn validate(&self) -> Result<()> {
        let k = self.knots();
        let bad = |msg: &str| Err(Error::InvalidHamiltonian(msg.into()));
        if k.len() < 2 {
            return bad("ramp needs at least two knots");
        }
        if k.iter().any(|(t, c)| !t.is_finite() || !c.is_finite()) {
            return bad("ramp knots must be finite");
        }
        if k[0] != (0.0, 0.0) {
            return bad("ramp must start at t = 0 with chi = 0");
        }
        if k.windows(2).any(|w| w[1].0 <= w[0].0) {
            return bad("ramp knot times must increase strictly");
        }
        if k.windows(2).any(|w| w[1].1 < w[0].1) {
            return bad("chi(t) must be nondecreasing");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HamiltonianSpec {
    /// ωJz + χJx²
    OneAxis { omega: f64, chi: f64 },
    /// ωJz + χ(Jx² − Jy²)
    TwoAxis { omega: f64, chi: f64 },
    /// ωJz + χ(t)Jx² with ω < 0
    AdiabaticRamp { omega: f64, ramp: Ramp },
}

impl HamiltonianSpec {
    pub fn one_axis(chi: f64) -> Self {
        HamiltonianSpec::OneAxis { omega: 0.0, chi }
    }

    pub fn two_axis(chi: f64) -> Self {
        HamiltonianSpec::TwoAxis { omega: 0.0, chi }
    }

    /// Default ramp shape: linear in t with ω = −1.
    pub fn linear_ramp(chi_max: f64, duration: f64) -> Self {
        HamiltonianSpec::AdiabaticRamp {
            omega: -1.0,
            ramp: Ramp::Linear { chi_max, duration },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            HamiltonianSpec::OneAxis { omega, chi } | HamiltonianSpec::TwoAxis { omega, chi } => {
                if !omega.is_finite() || !chi.is_finite() {
                    return Err(Error::InvalidHamiltonian(
                        "coefficients must be finite".into(),
                    ));
                }
                Ok(())
            }
            HamiltonianSpec::AdiabaticRamp { omega, ramp } => {
                if !(omega.is_finite() && *omega < 0.0) {
                    return Err(Error::InvalidHamiltonian(format!(
                        "adiabatic ramp needs omega < 0, got {omega}"
                    )));
                }
                ramp.validate()
            }
        }
    }

    pub fn is_ramp(&self) -> bool {
        matches!(self, HamiltonianSpec::AdiabaticRamp { .. })
    }

    /// Coefficient of Jx² at time t (of Jx² − Jy² for two-axis).
    pub fn chi_at(&self, t: f64) -> f64 {
        match self {
            HamiltonianSpec::OneAxis { chi, .. } | HamiltonianSpec::TwoAxis { chi, .. } => *chi,
            HamiltonianSpec::AdiabaticRamp { ramp, .. } => ramp.chi(t),
        }
    }

    pub fn omega(&self) -> f64 {
        match self {
            HamiltonianSpec::OneAxis { omega, .. }
            | HamiltonianSpec::TwoAxis { omega, .. }
            | HamiltonianSpec::AdiabaticRamp { omega, .. } => *omega,
        }
    }

    /// H(t) as a dense real symmetric matrix.
    pub fn matrix(&self, spin: Spin, t: f64) -> DMatrix<f64> {
        let ops = RealOps::new(spin);
        self.matrix_with(&ops, t)
    }

    fn matrix_with(&self, ops: &RealOps, t: f64) -> DMatrix<f64> {
        let omega = self.omega();
        let chi = self.chi_at(t);
        match self {
            HamiltonianSpec::TwoAxis { .. } => &ops.jz * omega + &ops.twist2 * chi,
            _ => &ops.jz * omega + &ops.jx2 * chi,
        }
    }
}

/// Real matrices of the generators in the Jz basis.
struct RealOps {
    jz: DMatrix<f64>,
    jx2: DMatrix<f64>,
    /// Jx² − Jy² = (J₊² + J₋²)/2
    twist2: DMatrix<f64>,
}

impl RealOps {
    fn new(spin: Spin) -> Self {
        let d = spin.dim();
        let mut jp = DMatrix::<f64>::zeros(d, d);
        for i in 0..d - 1 {
            jp[(i, i + 1)] = spin.raising_element(i);
        }
        let jm = jp.transpose();
        let jx = (&jp + &jm) * 0.5;
        let jp2 = &jp * &jp;
        RealOps {
            jz: DMatrix::from_diagonal(&DVector::from_fn(d, |i, _| spin.m(i))),
            jx2: &jx * &jx,
            twist2: (&jp2 + jp2.transpose()) * 0.5,
        }
    }
}

/// exp(−iHτ) for a fixed real symmetric H.
struct Propagator {
    vectors: DMatrix<f64>,
    values: DVector<f64>,
}

impl Propagator {
    fn new(h: DMatrix<f64>) -> Self {
        let e = SymmetricEigen::new(h);
        Propagator {
            vectors: e.eigenvectors,
            values: e.eigenvalues,
        }
    }

    fn apply(&self, tau: f64, psi: &[Complex64]) -> Vec<Complex64> {
        let v = &self.vectors;
        let d = psi.len();
        let mut c = vec![Complex64::new(0.0, 0.0); d];
        for (k, ck) in c.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, p) in psi.iter().enumerate() {
                acc += p * v[(i, k)];
            }
            *ck = acc * Complex64::from_polar(1.0, -self.values[k] * tau);
        }
        (0..d)
            .map(|i| (0..d).map(|k| c[k] * v[(i, k)]).sum())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub moments: SpinMoments,
    pub min_transverse_variance: f64,
    pub optimal_angle: f64,
    pub norm: f64,
    /// ⟨H(t)⟩
    pub energy: f64,
    /// Overlap with the instantaneous ground state (ramps only).
    pub ground_fidelity: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub spin: Spin,
    pub spec: HamiltonianSpec,
    pub samples: Vec<Sample>,
    pub final_state: StateVector,
    /// Largest moment change seen in the last step-halving comparison
    /// (zero for spectral propagation).
    pub achieved_accuracy: f64,
    /// Final ramp step (zero for spectral propagation).
    pub step: f64,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }
}

/// Minimum of Var(cos φ·Jx + sin φ·Jy) over φ and the minimizing φ ∈ (−π/2, π/2].
pub fn min_transverse_variance(state: &StateVector) -> Result<(f64, f64)> {
    let m = moments_of(state.spin(), state.amplitudes())?;
    Ok(transverse_minimum(state, &m))
}

fn transverse_minimum(state: &StateVector, m: &SpinMoments) -> (f64, f64) {
    let c = covariance_xy(state, m);
    let half_diff = 0.5 * (m.var_jx - m.var_jy);
    let radius = half_diff.hypot(c);
    let mean = 0.5 * (m.var_jx + m.var_jy);
    let scale = mean.abs().max(1.0);
    if radius <= 1e-12 * scale {
        return (mean, 0.0);
    }
    let mut angle = 0.5 * (-c).atan2(-half_diff);
    if angle <= -std::f64::consts::FRAC_PI_2 {
        angle += std::f64::consts::PI;
    }
    (mean - radius, angle)
}

fn sample(
    spin: Spin,
    spec: &HamiltonianSpec,
    ops: &RealOps,
    t: f64,
    psi: &[Complex64],
) -> Result<Sample> {
    let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NumericalFailure {
            context: format!("norm drift at t = {t}"),
            residual: (norm - 1.0).abs(),
        });
    }
    // moments_of demands unit norm at structural precision
    let state = StateVector::normalized(spin, psi.to_vec())?;
    let m = moments_of(spin, state.amplitudes())?;
    let (mtv, angle) = transverse_minimum(&state, &m);
    let h = spec.matrix_with(ops, t);
    let energy = expectation_real(&h, psi);
    let ground_fidelity = match spec {
        HamiltonianSpec::AdiabaticRamp { omega, ramp } => {
            let chi = ramp.chi(t);
            let g = if chi > 0.0 {
                ground_state_of(omega / chi, spin)?.0
            } else {
                StateVector::coherent_up(spin)
            };
            Some(g.fidelity(&state))
        }
        _ => None,
    };
    Ok(Sample {
        t,
        moments: m,
        min_transverse_variance: mtv,
        optimal_angle: angle,
        norm,
        energy,
        ground_fidelity,
    })
}

fn expectation_real(h: &DMatrix<f64>, psi: &[Complex64]) -> f64 {
    let d = psi.len();
    let mut acc = 0.0;
    for i in 0..d {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..d {
            row += psi[j] * h[(i, j)];
        }
        acc += (psi[i].conj() * row).re;
    }
    acc
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidInput("no sample times".into()));
    }
    if times.iter().any(|t| !t.is_finite()) || times[0] < 0.0 {
        return Err(Error::InvalidInput(
            "sample times must be finite and >= 0".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "sample times must increase strictly".into(),
        ));
    }
    Ok(())
}

/// Evolves `initial` from t = 0 and records a sample at every entry of `times`.
pub fn evolve(initial: &StateVector, spec: &HamiltonianSpec, times: &[f64]) -> Result<Trajectory> {
    spec.validate()?;
    check_times(times)?;
    let spin = initial.spin();
    let ops = RealOps::new(spin);
    let (states, achieved_accuracy, step) = if spec.is_ramp() {
        ramp_states(initial, spec, &ops, times)?
    } else {
        let p = Propagator::new(spec.matrix_with(&ops, 0.0));
        let states = times
            .iter()
            .map(|&t| p.apply(t, initial.amplitudes()))
            .collect();
        (states, 0.0, 0.0)
    };
    let samples = times
        .iter()
        .zip(&states)
        .map(|(&t, psi)| sample(spin, spec, &ops, t, psi))
        .collect::<Result<Vec<_>>>()?;
    let final_state = StateVector::normalized(spin, states.last().cloned().unwrap_or_default())?;
    Ok(Trajectory {
        spin,
        spec: spec.clone(),
        samples,
        final_state,
        achieved_accuracy,
        step,
    })
}

// Commutator-free fourth-order Magnus: two exponentials per step at the
// Gauss–Legendre nodes.
const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // √3/6
const CF4_A1: f64 = -0.038_675_134_594_812_88; // (3 − 2√3)/12
const CF4_A2: f64 = 0.538_675_134_594_812_9; // (3 + 2√3)/12

fn cf4_step(
    spec: &HamiltonianSpec,
    ops: &RealOps,
    t: f64,
    h: f64,
    psi: &[Complex64],
) -> Vec<Complex64> {
    let h1 = spec.matrix_with(ops, t + (0.5 - GAUSS_OFFSET) * h);
    let h2 = spec.matrix_with(ops, t + (0.5 + GAUSS_OFFSET) * h);
    let first = Propagator::new(&h1 * CF4_A2 + &h2 * CF4_A1);
    let second = Propagator::new(&h1 * CF4_A1 + &h2 * CF4_A2);
    second.apply(h, &first.apply(h, psi))
}

fn propagate_ramp(
    initial: &StateVector,
    spec: &HamiltonianSpec,
    ops: &RealOps,
    breakpoints: &[f64],
    times: &[f64],
    duration: f64,
    h: f64,
) -> Vec<Vec<Complex64>> {
    let mut psi = initial.amplitudes().to_vec();
    let mut out = Vec::with_capacity(times.len());
    let mut next_sample = 0;
    let mut t = 0.0;
    let mut hold: Option<Propagator> = None;
    while next_sample < times.len() && times[next_sample] <= 0.0 {
        out.push(psi.clone());
        next_sample += 1;
    }
    for &b in breakpoints {
        if b <= t {
            continue;
        }
        if t >= duration {
            // χ is constant from here on: exact spectral step
            let p = hold.get_or_insert_with(|| Propagator::new(spec.matrix_with(ops, duration)));
            psi = p.apply(b - t, &psi);
        } else {
            let n = ((b - t) / h).ceil().max(1.0) as usize;
            let dt = (b - t) / n as f64;
            for s in 0..n {
                psi = cf4_step(spec, ops, t + s as f64 * dt, dt, &psi);
            }
        }
        t = b;
        while next_sample < times.len() && times[next_sample] <= t {
            out.push(psi.clone());
            next_sample += 1;
        }
    }
    out
}

fn ramp_states(
    initial: &StateVector,
    spec: &HamiltonianSpec,
    ops: &RealOps,
    times: &[f64],
) -> Result<(Vec<Vec<Complex64>>, f64, f64)> {
    let HamiltonianSpec::AdiabaticRamp { omega, ramp } = spec else {
        unreachable!("ramp_states called on a constant Hamiltonian");
    };
    let spin = initial.spin();
    let duration = ramp.duration();
    let t_end = *times.last().expect("times checked non-empty");
    let mut breakpoints: Vec<f64> = times.to_vec();
    breakpoints.extend(
        ramp.knots()
            .iter()
            .map(|k| k.0)
            .filter(|&k| k > 0.0 && k < t_end),
    );
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();

    let chi_max = ramp.knots().iter().map(|k| k.1).fold(0.0, f64::max);
    let j = spin.j();
    let norm = omega.abs() * j + chi_max * j * (j + 1.0);
    let mut h = 1.0 / norm.max(1e-3);

    let budget = |h: f64| -> Result<()> {
        if t_end / h > MAX_RAMP_STEPS {
            return Err(Error::NumericalFailure {
                context: format!("ramp needs more than {MAX_RAMP_STEPS:e} steps of size {h:e}"),
                residual: f64::NAN,
            });
        }
        Ok(())
    };
    let moments_at = |states: &[Vec<Complex64>]| -> Result<Vec<SpinMoments>> {
        states
            .iter()
            .map(|psi| {
                let s = StateVector::normalized(spin, psi.clone())?;
                moments_of(spin, s.amplitudes())
            })
            .collect()
    };
    budget(h)?;
    let mut coarse = propagate_ramp(initial, spec, ops, &breakpoints, times, duration, h);
    let mut coarse_m = moments_at(&coarse)?;
    let mut change = f64::INFINITY;
    for _ in 0..MAX_HALVINGS {
        h *= 0.5;
        budget(h)?;
        let fine = propagate_ramp(initial, spec, ops, &breakpoints, times, duration, h);
        let fine_m = moments_at(&fine)?;
        change = coarse_m
            .iter()
            .zip(&fine_m)
            .map(|(a, b)| moment_distance(a, b))
            .fold(0.0, f64::max);
        coarse = fine;
        coarse_m = fine_m;
        if change < STEP_CONVERGENCE {
            return Ok((coarse, change, h));
        }
    }
    Err(Error::NumericalFailure {
        context: format!("ramp step control did not reach {STEP_CONVERGENCE:e} (step {h:e})"),
        residual: change,
    })
}

fn moment_distance(a: &SpinMoments, b: &SpinMoments) -> f64 {
    [
        a.mean_jx - b.mean_jx,
        a.mean_jy - b.mean_jy,
        a.mean_jz - b.mean_jz,
        a.var_jx - b.var_jx,
        a.var_jy - b.var_jy,
        a.var_jz - b.var_jz,
    ]
    .iter()
    .fold(0.0, |acc, d| acc.max(d.abs()))
}

// ---------------------------------------------------------------------------
// Rate-ratio check along a ramp.

/// Minimum instantaneous ground-state fidelity for a ramp to count as adiabatic.
pub const ADIABATIC_FIDELITY: f64 = 0.99;

#[derive(Clone, Debug, Serialize)]
pub struct EhrenfestReport {
    pub adiabatic: bool,
    pub min_ground_fidelity: f64,
    /// max |ratio/(−ω/χ) − 1| over checked points; `None` when flagged.
    /// Needs sampling fine enough to resolve the residual oscillation at
    /// the level gaps (about ten samples per unit time for small J).
    pub max_ratio_deviation: Option<f64>,
    pub tolerance: f64,
    pub points_checked: usize,
    /// Largest |d⟨Jz⟩/dt| where χ = 0 on the whole stencil.
    pub max_jz_rate_without_chi: Option<f64>,
    pub passed: bool,
}

/// Weights of the first derivative at `at` from values on `nodes`
/// (Fornberg's recursion).
fn derivative_weights(nodes: &[f64], at: f64) -> Vec<f64> {
    let n = nodes.len();
    // c[j][k]: weight of node j for derivative order k
    let mut c = vec![[0.0f64; 2]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - at;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - at;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// Checks d⟨Jx²⟩/dt ÷ d⟨Jz⟩/dt = −ω/χ(t) on the sampled trajectory, using
/// five-point derivatives. Points where the Jz rate is tiny compared with
/// its largest value are skipped since the ratio is ill-conditioned there.
pub fn ehrenfest_slope_check(spec: &HamiltonianSpec, traj: &Trajectory) -> Result<EhrenfestReport> {
    let HamiltonianSpec::AdiabaticRamp { omega, ramp } = spec else {
        return Err(Error::InvalidInput(
            "rate-ratio check needs an adiabatic ramp".into(),
        ));
    };
    let s = &traj.samples;
    if s.len() < 5 {
        return Err(Error::InvalidInput("need at least five samples".into()));
    }
    let min_fid = s
        .iter()
        .filter_map(|x| x.ground_fidelity)
        .fold(1.0, f64::min);
    let jx2 = |x: &Sample| x.moments.var_jx + x.moments.mean_jx.powi(2);
    let mut rates = Vec::new();
    let mut chi_zero_rate: Option<f64> = None;
    let mut max_dt: f64 = 0.0;
    for i in 2..s.len() - 2 {
        let w = &s[i - 2..=i + 2];
        let nodes: Vec<f64> = w.iter().map(|x| x.t).collect();
        let wt = derivative_weights(&nodes, s[i].t);
        let djz: f64 = w.iter().zip(&wt).map(|(x, c)| c * x.moments.mean_jz).sum();
        let djx2: f64 = w.iter().zip(&wt).map(|(x, c)| c * jx2(x)).sum();
        max_dt = max_dt.max(nodes[4] - nodes[0]);
        if ramp.chi(nodes[4]) == 0.0 {
            let r = chi_zero_rate.get_or_insert(0.0);
            *r = r.max(djz.abs());
            continue;
        }
        // a kink in χ inside the stencil spoils the polynomial fit
        let kinked = ramp
            .knots()
            .iter()
            .any(|k| k.0 > nodes[0] && k.0 < nodes[4]);
        if !kinked {
            rates.push((ramp.chi(s[i].t), djz, djx2));
        }
    }
    let max_rate = rates.iter().fold(0.0f64, |m, r| m.max(r.1.abs()));
    let mut max_dev: f64 = 0.0;
    let mut checked = 0;
    for &(chi, djz, djx2) in &rates {
        if chi <= 0.0
            || djz.abs() < RATE_FLOOR * max_rate
            || djz.abs() * max_dt < 1e3 * STEP_CONVERGENCE
        {
            continue;
        }
        let expected = -omega / chi;
        max_dev = max_dev.max((djx2 / djz / expected - 1.0).abs());
        checked += 1;
    }
    let adiabatic = min_fid >= ADIABATIC_FIDELITY;
    let tolerance = (1e-2 * RAMP_REFERENCE / ramp.duration()).clamp(1e-4, 1e-2);
    Ok(EhrenfestReport {
        adiabatic,
        min_ground_fidelity: min_fid,
        max_ratio_deviation: adiabatic.then_some(max_dev),
        tolerance,
        points_checked: checked,
        max_jz_rate_without_chi: chi_zero_rate,
        passed: adiabatic && checked > 0 && max_dev <= tolerance,
    })
}

/// Ramps at least this long get a tolerance below 1e-2, falling as 1/T.
pub const RAMP_REFERENCE: f64 = 10.0;

/// Jz rates below this fraction of the largest one are not used for the ratio.
pub const RATE_FLOOR: f64 = 0.05;

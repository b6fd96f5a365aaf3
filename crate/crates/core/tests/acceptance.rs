//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line per criterion and fails if any criterion fails.
//!
//! `cargo test -p spinsqueeze --test acceptance` (add `-- 4 10` to run only
//! some criteria).

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use spinsqueeze::certify::{certify_depth, CertifyOptions, InMemoryTables, MeasurementRecord};
use spinsqueeze::curves::{
    analytic_bound, compute_curve, refine_to_x, spin_half_frontier, spin_one_frontier,
    validity_edge, CurveGrid, CurveTable,
};
use spinsqueeze::dynamics::{evolve, HamiltonianSpec};
use spinsqueeze::variational::{
    locate_bifurcation, minimize_at_x, BifurcationOptions, SearchOptions,
};
use spinsqueeze::{check_heisenberg, ground_state_of, moments, Spin, StateVector};

type Outcome = Result<String, String>;

fn spin(two_j: u32) -> Spin {
    Spin::new(two_j).unwrap()
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit_s {
        Ok(())
    } else {
        Err(format!(
            "took {:.1} s, limit {limit_s} s",
            elapsed.as_secs_f64()
        ))
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Curve set of the figure (J = 1/2 is the closed form x²/2 and has no
/// table), plus J = 100 for convexity.
const FIGURE_SET: [u32; 7] = [2, 3, 4, 6, 8, 10, 20];
const LARGE: u32 = 200;

/// Every set spin on the default μ sweep, then on the 200-point adaptive grid.
fn tables() -> (Vec<CurveTable>, Vec<CurveTable>) {
    let on = |grid: CurveGrid| -> Vec<CurveTable> {
        FIGURE_SET
            .iter()
            .chain([LARGE].iter())
            .map(|&t| compute_curve(spin(t), &grid).unwrap())
            .collect()
    };
    (
        on(CurveGrid::default()),
        on(CurveGrid::Adaptive { points: 200 }),
    )
}

fn c1_spin_one_closed_form() -> Outcome {
    let t0 = Instant::now();
    let table =
        compute_curve(spin(2), &CurveGrid::Adaptive { points: 200 }).map_err(|e| e.to_string())?;
    let elapsed = t0.elapsed();
    ensure(table.points.len() == 200, || {
        format!("{} points", table.points.len())
    })?;
    let worst = table
        .points
        .iter()
        .map(|p| (p.f - spin_one_frontier(p.x)).abs())
        .fold(0.0, f64::max);
    ensure(worst < 1e-9, || {
        format!("max |f − closed form| = {worst:e}")
    })?;
    within(elapsed, 1.0)?;
    Ok(format!(
        "200 points, max |Δf| = {worst:.1e}, {:.3} s",
        elapsed.as_secs_f64()
    ))
}

fn c2_spin_half_relation() -> Outcome {
    let t0 = Instant::now();
    let s = spin(1);
    let mut worst = 0.0f64;
    for i in 1..=9 {
        let x = i as f64 / 10.0;
        let r = minimize_at_x(s, x, &SearchOptions::new(i)).map_err(|e| e.to_string())?;
        let jz = r.x * s.j();
        let var = r.f * s.j();
        worst = worst.max((var - jz * jz).abs());
        ensure((r.x - x).abs() < 1e-4, || {
            format!("x = {} for target {x}", r.x)
        })?;
    }
    ensure(worst < 1e-4, || {
        format!("max |Var(Jx) − <Jz>²| = {worst:e}")
    })?;
    within(t0.elapsed(), 30.0)?;
    Ok(format!(
        "x = 0.1..0.9, max |Var(Jx) − <Jz>²| = {worst:.1e}, {:.1} s",
        t0.elapsed().as_secs_f64()
    ))
}

fn c3_bifurcation_three_halves() -> Outcome {
    let t0 = Instant::now();
    let r = locate_bifurcation(spin(3), &BifurcationOptions::new(1)).map_err(|e| e.to_string())?;
    let jz = r.x_critical * 1.5;
    ensure((jz - 1.32).abs() <= 0.02, || format!("<Jz>_c = {jz}"))?;
    within(t0.elapsed(), 60.0)?;
    Ok(format!(
        "<Jz>_c = {jz:.4} (x_c = {:.5}), {:.1} s",
        r.x_critical,
        t0.elapsed().as_secs_f64()
    ))
}

fn c4_bifurcation_interval() -> Outcome {
    let t0 = Instant::now();
    let mut found = Vec::new();
    for two_j in [5, 7, 11, 21, 99] {
        let r = locate_bifurcation(spin(two_j), &BifurcationOptions::new(1))
            .map_err(|e| e.to_string())?;
        ensure(r.x_critical > 0.83 && r.x_critical < 0.88, || {
            format!("2J = {two_j}: x_c = {}", r.x_critical)
        })?;
        found.push(format!("{two_j}/2: {:.4}", r.x_critical));
    }
    within(t0.elapsed(), 600.0)?;
    Ok(format!(
        "{}, {:.1} s",
        found.join(", "),
        t0.elapsed().as_secs_f64()
    ))
}

fn c5_convexity(tables: &[CurveTable]) -> Outcome {
    let mut worst = f64::INFINITY;
    for t in tables {
        let d = t.min_second_difference();
        ensure(d >= -1e-7, || {
            format!("2J = {}: second difference {d:e}", t.spin.two_j())
        })?;
        worst = worst.min(d);
    }
    Ok(format!(
        "J in {{1, 3/2, 2, 3, 4, 5, 10, 100}} on two grids, min second difference {worst:.3e}"
    ))
}

fn c6_bound_dominance(sweep: &[CurveTable], adaptive: &[CurveTable]) -> Outcome {
    let tol = 1e-9;
    let mut checked = 0usize;
    // attained values above the closed form on every grid
    for t in sweep.iter().chain(adaptive) {
        for p in &t.points {
            let a = analytic_bound(t.spin, p.x).map_err(|e| e.to_string())?;
            ensure(a <= p.f + tol, || {
                format!(
                    "2J = {}, x = {}: closed form {a} > f {}",
                    t.spin.two_j(),
                    p.x,
                    p.f
                )
            })?;
            let env = t.lower_envelope(p.x).map_err(|e| e.to_string())?;
            ensure(env <= p.f + tol, || {
                format!("2J = {}: envelope above its own node", t.spin.two_j())
            })?;
            checked += 1;
        }
    }
    let tables = sweep;
    // closed-form bound below the tangent envelope, on table nodes and
    // between them, up to the last finite tangency point
    let mut sliver = 0.0f64;
    for t in tables {
        let last = t.last_finite_x();
        let mut xs: Vec<f64> = t.points.iter().map(|p| p.x).collect();
        xs.extend(t.points.windows(2).map(|w| 0.5 * (w[0].x + w[1].x)));
        for x in xs.into_iter().filter(|&x| x <= last) {
            let env = t.tangent_envelope(x).map_err(|e| e.to_string())?;
            let a = analytic_bound(t.spin, x).map_err(|e| e.to_string())?;
            ensure(a <= env + tol, || {
                format!(
                    "2J = {}, x = {x}: closed form {a} > envelope {env}",
                    t.spin.two_j()
                )
            })?;
            checked += 1;
        }
        // beyond it no tangent can follow the infinite slope at x = 1
        for frac in [0.25, 0.5, 0.75] {
            let x = last + frac * (1.0 - last);
            let gap = analytic_bound(t.spin, x).map_err(|e| e.to_string())?
                - t.tangent_envelope(x).map_err(|e| e.to_string())?;
            sliver = sliver.max(gap);
        }
    }
    // envelope below independent variational results
    let mut var_checked = 0usize;
    for t in tables.iter().filter(|t| t.spin.two_j() <= 8) {
        let lo = t.valid_from.max(0.05);
        for i in 0..4 {
            let x = lo + (0.97 - lo) * (i as f64 + 0.5) / 4.0;
            let r =
                minimize_at_x(t.spin, x, &SearchOptions::new(7 + i)).map_err(|e| e.to_string())?;
            let env = t.lower_envelope(r.x).map_err(|e| e.to_string())?;
            let a = analytic_bound(t.spin, r.x).map_err(|e| e.to_string())?;
            ensure(a <= env + tol && env <= r.f + tol, || {
                format!(
                    "2J = {}, x = {}: closed form {a}, envelope {env}, variational {}",
                    t.spin.two_j(),
                    r.x,
                    r.f
                )
            })?;
            var_checked += 1;
        }
    }
    // half-integer spins left of the edge: only the closed form applies
    for two_j in [3, 5] {
        for x in [0.3, 0.6] {
            let r =
                minimize_at_x(spin(two_j), x, &SearchOptions::new(3)).map_err(|e| e.to_string())?;
            let a = analytic_bound(spin(two_j), r.x).map_err(|e| e.to_string())?;
            ensure(a <= r.f + tol, || {
                format!(
                    "2J = {two_j}, x = {x}: closed form {a} > variational {}",
                    r.f
                )
            })?;
            var_checked += 1;
        }
    }
    Ok(format!(
        "{checked} table checks on two grids, {var_checked} variational points; closed form leads the sweep tangents by at most {sliver:.1e} above the last finite tangency"
    ))
}

fn c7_ordering(tables: &[CurveTable]) -> Outcome {
    let tol = 1e-9;
    let figure: Vec<&CurveTable> = tables
        .iter()
        .filter(|t| FIGURE_SET.contains(&t.spin.two_j()))
        .collect();
    let mut comparisons = 0usize;
    // J = 1/2 against every larger spin
    for big in &figure {
        for p in big.points.iter().filter(|p| big.contains(p.x)) {
            ensure(p.f <= spin_half_frontier(p.x) + tol, || {
                format!("2J = {} above J = 1/2 at x = {}", big.spin.two_j(), p.x)
            })?;
            comparisons += 1;
        }
    }
    for (i, small) in figure.iter().enumerate() {
        for big in figure[i + 1..]
            .iter()
            .filter(|b| b.spin.two_j() > small.spin.two_j())
        {
            // attained values of the larger spin against the lower envelope of the
            // smaller, or its exact value where the envelope is too loose
            let edge = validity_edge(small.spin).map_err(|e| e.to_string())?;
            for p in big
                .points
                .iter()
                .filter(|p| small.contains(p.x) && big.contains(p.x))
            {
                let mut bound = small.lower_envelope(p.x).map_err(|e| e.to_string())?;
                if p.f > bound + tol && p.x < 1.0 {
                    bound = refine_to_x(small.spin, p.x, edge.mu, 1e-13)
                        .map_err(|e| e.to_string())?
                        .point()
                        .f;
                }
                ensure(p.f <= bound + tol, || {
                    format!(
                        "2J = {} exceeds 2J = {} at x = {}: {} > {bound}",
                        big.spin.two_j(),
                        small.spin.two_j(),
                        p.x,
                        p.f
                    )
                })?;
                comparisons += 1;
            }
        }
    }
    Ok(format!("{comparisons} pointwise comparisons"))
}

fn c8_coherent_anchor(tables: &[CurveTable]) -> Outcome {
    for t in tables {
        let last = t.points.last().unwrap();
        ensure(last.x == 1.0 && (last.f - 0.5).abs() < 1e-9, || {
            format!("2J = {}: f(1) = {}", t.spin.two_j(), last.f)
        })?;
        let env = t.lower_envelope(1.0).map_err(|e| e.to_string())?;
        ensure((env - 0.5).abs() < 1e-9, || {
            format!("2J = {}: envelope(1) = {env}", t.spin.two_j())
        })?;
    }
    for two_j in 1..=200 {
        let s = spin(two_j);
        let a = analytic_bound(s, 1.0).map_err(|e| e.to_string())?;
        ensure(a == 0.5 && a * s.j() == s.j() / 2.0, || {
            format!("2J = {two_j}: closed form at x = 1 is {a}")
        })?;
    }
    Ok("f(1) = 1/2 on every table; closed form exactly 1/2 for 2J = 1..200".into())
}

// --- small explicit many-qubit states ---------------------------------------

type CMat = DMatrix<Complex64>;

fn qubit_ops() -> (CMat, CMat) {
    let h = Complex64::new(0.5, 0.0);
    let z = Complex64::new(0.0, 0.0);
    let sx = CMat::from_row_slice(2, 2, &[z, h, h, z]);
    let sz = CMat::from_row_slice(2, 2, &[h, z, z, -h]);
    (sx, sz)
}

/// Collective Jx, Jz on `n` qubits.
fn collective(n: usize) -> (CMat, CMat) {
    let (sx, sz) = qubit_ops();
    let id = CMat::identity(2, 2);
    let dim = 1 << n;
    let mut jx = CMat::zeros(dim, dim);
    let mut jz = CMat::zeros(dim, dim);
    for site in 0..n {
        let mut ox = CMat::identity(1, 1);
        let mut oz = CMat::identity(1, 1);
        for k in 0..n {
            ox = ox.kronecker(if k == site { &sx } else { &id });
            oz = oz.kronecker(if k == site { &sz } else { &id });
        }
        jx += ox;
        jz += oz;
    }
    (jx, jz)
}

fn random_pure(dim: usize, rng: &mut ChaCha8Rng) -> CMat {
    let v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    CMat::from_iterator(dim, 1, v.into_iter().map(|c| c / n))
}

fn projector(psi: &CMat) -> CMat {
    psi * psi.adjoint()
}

/// Qubit state biased towards the +z pole, where the bound is tightest.
fn random_qubit(rng: &mut ChaCha8Rng) -> CMat {
    if rng.random_bool(0.5) {
        random_pure(2, rng)
    } else {
        let theta: f64 = rng.random_range(0.0..1.2);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        CMat::from_column_slice(
            2,
            1,
            &[
                Complex64::new((theta / 2.0).cos(), 0.0),
                Complex64::from_polar((theta / 2.0).sin(), phi),
            ],
        )
    }
}

/// Optimally squeezed spin-1 state embedded in the symmetric two-qubit space.
fn squeezed_pair(rng: &mut ChaCha8Rng) -> CMat {
    let mu: f64 = -(10f64).powf(rng.random_range(-1.0..1.5));
    let (g, _) = ground_state_of(mu, spin(2)).unwrap();
    let a = g.amplitudes();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut psi = CMat::zeros(4, 1);
    // |11> = m=+1, (|10>+|01>)/√2 = m=0, |00> = m=−1 with |1> = up
    psi[(0, 0)] = a[0];
    psi[(1, 0)] = a[1] * r;
    psi[(2, 0)] = a[1] * r;
    psi[(3, 0)] = a[2];
    let noise = random_pure(4, rng) * Complex64::new(rng.random_range(0.0..0.05), 0.0);
    let psi = psi + noise;
    let n = psi.norm();
    psi / Complex64::new(n, 0.0)
}

fn weights(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn expect(rho: &CMat, op: &CMat) -> f64 {
    (rho * op).trace().re
}

fn c9_separability_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    // qubits ordered with |up> first, so the basis index of |↑↑> is 0
    let (jx2, jz2) = collective(2);
    let jx2sq = &jx2 * &jx2;
    let mut worst2 = f64::INFINITY;
    for _ in 0..10_000 {
        let terms = rng.random_range(1..=3);
        let w = weights(terms, &mut rng);
        let mut rho = CMat::zeros(4, 4);
        for p in w {
            let a = projector(&random_qubit(&mut rng));
            let b = projector(&random_qubit(&mut rng));
            rho += a.kronecker(&b) * Complex64::new(p, 0.0);
        }
        let jz = expect(&rho, &jz2);
        let var = expect(&rho, &jx2sq) - expect(&rho, &jx2).powi(2);
        // N = 2, J = 1/2: Var(Jx) ≥ NJ·F(<Jz>/NJ)
        let slack = var - spin_half_frontier(jz);
        worst2 = worst2.min(slack);
        ensure(slack >= -1e-9, || {
            format!("separable state violates the bound by {slack:e}")
        })?;
    }

    let (jx4, jz4) = collective(4);
    let jx4sq = &jx4 * &jx4;
    let tables = InMemoryTables::default();
    let mut worst4 = f64::INFINITY;
    let mut deepest = 0;
    for i in 0..1_000 {
        let terms = if i % 2 == 0 {
            1
        } else {
            rng.random_range(2..=3)
        };
        let w = weights(terms, &mut rng);
        let mut rho = CMat::zeros(16, 16);
        for p in w {
            let mut pair = || {
                if rng.random_bool(0.5) {
                    projector(&squeezed_pair(&mut rng))
                } else {
                    projector(&random_pure(4, &mut rng))
                }
            };
            let a = pair();
            let b = pair();
            rho += a.kronecker(&b) * Complex64::new(p, 0.0);
        }
        let jz = expect(&rho, &jz4);
        let var = expect(&rho, &jx4sq) - expect(&rho, &jx4).powi(2);
        // pairs as spin 1, N → N/2: Var(Jx) ≥ 2·F_1(<Jz>/2)
        let slack = var - 2.0 * spin_one_frontier(jz / 2.0);
        worst4 = worst4.min(slack);
        ensure(slack >= -1e-9, || {
            format!("pair product violates the grouped bound by {slack:e}")
        })?;
        let rec = MeasurementRecord::new(4, spin(1), jz, var.max(0.0));
        let cert =
            certify_depth(&rec, &CertifyOptions::default(), &tables).map_err(|e| e.to_string())?;
        deepest = deepest.max(cert.certified_depth);
        ensure(cert.certified_depth <= 2, || {
            format!(
                "pair product certified with depth {} (x = {}, v = {})",
                cert.certified_depth, cert.x, cert.v
            )
        })?;
    }
    within(t0.elapsed(), 60.0)?;
    Ok(format!(
        "10^4 separable 2-qubit states (min slack {worst2:.1e}), 10^3 pair products (min slack {worst4:.1e}, max depth {deepest}), {:.1} s",
        t0.elapsed().as_secs_f64()
    ))
}

fn c10_bec_depth() -> Outcome {
    let t0 = Instant::now();
    let n = 100_000u64;
    let rec = MeasurementRecord::new(n, spin(1), 0.99 * n as f64 / 2.0, (n as f64 / 4.0) / 1000.0);
    let opts = CertifyOptions {
        analytic_only: true,
        ..CertifyOptions::default()
    };
    let cert = certify_depth(&rec, &opts, &InMemoryTables::default()).map_err(|e| e.to_string())?;
    let d = cert.certified_depth as f64;
    ensure((2e4 / 3.0..=6e4).contains(&d), || format!("depth {d}"))?;
    within(t0.elapsed(), 10.0)?;
    Ok(format!(
        "depth {} (ratio {:.2} to 2·10^4), {:.2} s",
        cert.certified_depth,
        d / 2e4,
        t0.elapsed().as_secs_f64()
    ))
}

fn c11_one_axis_near_optimal() -> Outcome {
    let t0 = Instant::now();
    let s = spin(20);
    let times: Vec<f64> = (0..=400).map(|i| 0.25 * i as f64 / 400.0).collect();
    let traj = evolve(
        &StateVector::coherent_up(s),
        &HamiltonianSpec::one_axis(1.0),
        &times,
    )
    .map_err(|e| e.to_string())?;
    let edge = validity_edge(s).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut count = 0;
    for smp in &traj.samples {
        let x = smp.moments.mean_jz / s.j();
        if x < 0.95 {
            continue;
        }
        let scaled = smp.min_transverse_variance / s.j();
        let f = if x >= 1.0 - 1e-12 {
            0.5
        } else {
            refine_to_x(s, x, edge.mu, 1e-12)
                .map_err(|e| e.to_string())?
                .point()
                .f
        };
        ensure(scaled >= f - 1e-7, || {
            format!("x = {x}: trajectory {scaled} below optimum {f}")
        })?;
        ensure(scaled <= 1.2 * f, || {
            format!("x = {x}: ratio {}", scaled / f)
        })?;
        worst = worst.max(scaled / f);
        count += 1;
    }
    ensure(count > 10, || {
        format!("only {count} samples with x >= 0.95")
    })?;
    within(t0.elapsed(), 10.0)?;
    Ok(format!(
        "{count} samples with x >= 0.95, worst ratio {worst:.4}, {:.2} s",
        t0.elapsed().as_secs_f64()
    ))
}

fn c12_adiabatic_tracking() -> Outcome {
    let chi = 2.0;
    let mut lines = Vec::new();
    for two_j in [4, 8] {
        let s = spin(two_j);
        let (target, _) = ground_state_of(-1.0 / chi, s).map_err(|e| e.to_string())?;
        let mut prev = 0.0;
        let mut last = 0.0;
        for t in [10.0, 20.0, 40.0, 80.0, 160.0] {
            let spec = HamiltonianSpec::linear_ramp(chi, t);
            let traj = evolve(&StateVector::coherent_up(s), &spec, &[0.0, t])
                .map_err(|e| e.to_string())?;
            let f = traj.final_state.fidelity(&target);
            ensure(f >= prev - 1e-9, || {
                format!("2J = {two_j}: fidelity fell to {f} at T = {t} from {prev}")
            })?;
            prev = f;
            last = f;
        }
        if two_j == 8 {
            ensure(last >= 0.999, || format!("J = 4: final fidelity {last}"))?;
        }
        lines.push(format!("2J = {two_j}: F(T=160) = {last:.5}"));
    }
    Ok(format!("monotone in T over 10..160; {}", lines.join(", ")))
}

fn c13_heisenberg() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = f64::INFINITY;
    for two_j in [1, 2, 7, 20] {
        let s = spin(two_j);
        for i in 0..10_000 {
            let state = if i % 4 == 3 {
                // minimum-uncertainty candidates
                let mu = -(10f64).powf(rng.random_range(-2.0..2.0));
                ground_state_of(mu, s).map_err(|e| e.to_string())?.0
            } else {
                StateVector::random(s, &mut rng)
            };
            let m = moments(&state).map_err(|e| e.to_string())?;
            let r = check_heisenberg(&m);
            worst = worst.min(r.min_product());
            ensure(r.min_product() >= -1e-9, || {
                format!("2J = {two_j}: product {:e}", r.min_product())
            })?;
        }
    }
    Ok(format!(
        "4 x 10^4 states, min uncertainty product {worst:.1e}"
    ))
}

fn main() {
    let filter: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let wanted = |n: u32| filter.is_empty() || filter.contains(&n);
    let needs_tables = [5, 6, 7, 8].iter().any(|&n| wanted(n));
    let (sweep, adaptive) = if needs_tables {
        tables()
    } else {
        Default::default()
    };
    let both: Vec<CurveTable> = sweep.iter().chain(&adaptive).cloned().collect();

    type Check<'a> = (u32, &'a str, Box<dyn Fn() -> Outcome + 'a>);
    let checks: Vec<Check> = vec![
        (1, "J=1 closed form", Box::new(c1_spin_one_closed_form)),
        (2, "J=1/2 relation", Box::new(c2_spin_half_relation)),
        (
            3,
            "bifurcation J=3/2",
            Box::new(c3_bifurcation_three_halves),
        ),
        (4, "bifurcation interval", Box::new(c4_bifurcation_interval)),
        (5, "convexity", Box::new(|| c5_convexity(&both))),
        (
            6,
            "bound dominance",
            Box::new(|| c6_bound_dominance(&sweep, &adaptive)),
        ),
        (7, "curve ordering", Box::new(|| c7_ordering(&both))),
        (8, "coherent anchor", Box::new(|| c8_coherent_anchor(&both))),
        (9, "separability oracle", Box::new(c9_separability_oracle)),
        (10, "BEC depth", Box::new(c10_bec_depth)),
        (
            11,
            "one-axis near-optimality",
            Box::new(c11_one_axis_near_optimal),
        ),
        (12, "adiabatic tracking", Box::new(c12_adiabatic_tracking)),
        (13, "Heisenberg suite", Box::new(c13_heisenberg)),
    ];

    let mut failed = Vec::new();
    for (n, name, check) in &checks {
        if !wanted(*n) {
            continue;
        }
        match check() {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(why) => {
                println!("criterion {n:>2} FAIL  {name}: {why}");
                failed.push(*n);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

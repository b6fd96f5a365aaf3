//! Entanglement-depth certificates from collective spin moments.
//!
//! A separable state of N spin-J particles obeys
//! Var(𝒥x) ≥ NJ·F_J(⟨𝒥z⟩/NJ). Grouping k particles into an effective spin
//! kJ gives the same inequality with F_{kJ}. A record that violates the
//! bound for groups of size k therefore has entanglement among more than k
//! particles.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::curves::{
    analytic_bound, analytic_bound_slope, compute_curve, refine_to_x, spin_half_frontier,
    CurveGrid, SharedTable,
};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::spin::Spin;
use crate::tolerances;

/// Collective moments measured on an ensemble of `num_particles` spins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementRecord {
    pub num_particles: u64,
    #[serde(rename = "two_j")]
    pub spin: Spin,
    pub mean_jz: f64,
    pub var_jx: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se_mean_jz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se_var_jx: Option<f64>,
}

impl MeasurementRecord {
    pub fn new(num_particles: u64, spin: Spin, mean_jz: f64, var_jx: f64) -> Self {
        MeasurementRecord {
            num_particles,
            spin,
            mean_jz,
            var_jx,
            se_mean_jz: None,
            se_var_jx: None,
        }
    }

    pub fn has_errors(&self) -> bool {
        self.se_mean_jz.is_some() || self.se_var_jx.is_some()
    }

    /// N·J.
    pub fn total_spin(&self) -> f64 {
        self.num_particles as f64 * self.spin.j()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: String| {
            Err(Error::InvalidRecord {
                field: field.into(),
                reason,
            })
        };
        if self.num_particles == 0 {
            return bad("num_particles", "must be positive".into());
        }
        if !self.mean_jz.is_finite() {
            return bad("mean_jz", "must be finite".into());
        }
        let nj = self.total_spin();
        if self.mean_jz.abs() > nj * (1.0 + 1e-12) {
            return bad("mean_jz", format!("|{}| exceeds N·J = {nj}", self.mean_jz));
        }
        if !self.var_jx.is_finite() || self.var_jx < 0.0 {
            return bad(
                "var_jx",
                format!("must be finite and >= 0, got {}", self.var_jx),
            );
        }
        for (name, se) in [
            ("se_mean_jz", self.se_mean_jz),
            ("se_var_jx", self.se_var_jx),
        ] {
            if let Some(s) = se {
                if !s.is_finite() || s < 0.0 {
                    return bad(name, format!("must be finite and >= 0, got {s}"));
                }
            }
        }
        Ok(())
    }

    /// Scaled point (x, v) = (⟨𝒥z⟩/NJ, Var(𝒥x)/NJ).
    pub fn scaled(&self) -> (f64, f64) {
        let nj = self.total_spin();
        ((self.mean_jz / nj).clamp(-1.0, 1.0), self.var_jx / nj)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    /// Tangent envelope of the diagonalization curve; valid regimes only.
    Exact,
    /// Casimir/Heisenberg closed form; valid everywhere.
    Analytic,
}

/// Supplies curve tables, possibly from a cache.
pub trait TableProvider: Sync {
    fn table(&self, spin: Spin) -> Result<SharedTable>;
}

/// Computes tables on first use and keeps them for the life of the value.
pub struct InMemoryTables {
    grid: CurveGrid,
    tables: Mutex<HashMap<Spin, SharedTable>>,
}

impl InMemoryTables {
    pub fn new(grid: CurveGrid) -> Self {
        InMemoryTables {
            grid,
            tables: Mutex::new(HashMap::new()),
        }
    }
}

impl Default for InMemoryTables {
    fn default() -> Self {
        InMemoryTables::new(CurveGrid::default())
    }
}

impl TableProvider for InMemoryTables {
    fn table(&self, spin: Spin) -> Result<SharedTable> {
        if let Some(t) = self.tables.lock().expect("table cache poisoned").get(&spin) {
            return Ok(t.clone());
        }
        let t = SharedTable::new(compute_curve(spin, &self.grid)?);
        self.tables
            .lock()
            .expect("table cache poisoned")
            .entry(spin)
            .or_insert(t.clone());
        Ok(t)
    }
}

/// Certified lower bound on F_J at x with its slope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LowerBound {
    pub value: f64,
    pub slope: f64,
    pub method: BoundMode,
}

fn analytic_lower(spin: Spin, x: f64) -> Result<LowerBound> {
    Ok(LowerBound {
        value: analytic_bound(spin, x)?,
        slope: analytic_bound_slope(spin, x)?,
        method: BoundMode::Analytic,
    })
}

/// Exact-mode lower bound: the better of the table envelope and the
/// supporting line of a ground state refined to x. Fails with a regime
/// error where the diagonalization curve is not F_J.
pub fn exact_lower(spin: Spin, x: f64, tables: &dyn TableProvider) -> Result<LowerBound> {
    if spin.two_j() == 1 {
        return Ok(LowerBound {
            value: spin_half_frontier(x),
            slope: x,
            method: BoundMode::Exact,
        });
    }
    let table = tables.table(spin)?;
    if !table.contains(x) {
        return Err(Error::Regime {
            two_j: spin.two_j(),
            x,
            valid_from: table.valid_from,
        });
    }
    let (mut value, mut slope) = table.envelope_with_slope(x)?;
    let a = x.abs();
    if a < 1.0 && a > table.valid_from {
        let edge_mu = table.points.first().map_or(0.0, |p| p.mu.min(0.0));
        if let Ok(g) = refine_to_x(spin, a, edge_mu, 1e-9) {
            let p = g.point();
            let t = p.tangent_at(a);
            if t > value {
                value = t;
                slope = if x < 0.0 { -p.slope } else { p.slope };
            }
        }
    }
    Ok(LowerBound {
        value,
        slope,
        method: BoundMode::Exact,
    })
}

/// NJ·L(x): the separability bound on Var(𝒥x) for N spin-J particles.
pub fn separability_bound(
    spin: Spin,
    num_particles: u64,
    x: f64,
    mode: BoundMode,
    tables: &dyn TableProvider,
) -> Result<f64> {
    if x.is_nan() || x.abs() > 1.0 {
        return Err(Error::Domain {
            x,
            lo: -1.0,
            hi: 1.0,
        });
    }
    let l = match mode {
        BoundMode::Exact => exact_lower(spin, x, tables)?,
        BoundMode::Analytic => analytic_lower(spin, x)?,
    };
    Ok(num_particles as f64 * spin.j() * l.value)
}

/// Subtract z standard errors from every bound violation before it counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginPolicy {
    pub z: f64,
}

impl Default for MarginPolicy {
    fn default() -> Self {
        MarginPolicy { z: 3.0 }
    }
}

#[derive(Clone, Debug)]
pub struct CertifyOptions {
    /// Largest group size tried; defaults to N.
    pub max_k: Option<u64>,
    pub margin: Option<MarginPolicy>,
    /// Use only the closed-form bound.
    pub analytic_only: bool,
    /// Exact tables are used while 2kJ + 1 stays at or below this.
    pub dimension_cap: u64,
    pub execution: Execution,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            max_k: None,
            margin: None,
            analytic_only: false,
            dimension_cap: 20_001,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupTest {
    pub k: u64,
    /// L_{kJ}(x), scaled like v.
    pub bound: f64,
    pub method: BoundMode,
    /// bound − v; the k-grouped bound counts as violated once this exceeds
    /// the moment tolerance (1e-9) and z·sigma.
    pub margin: f64,
    /// Standard error of the margin.
    pub sigma: f64,
    pub violated_raw: bool,
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthCertificate {
    pub certified_depth: u64,
    /// Depth with no allowance for statistical error.
    pub raw_depth: u64,
    pub x: f64,
    pub v: f64,
    pub num_particles: u64,
    pub two_j: u32,
    pub max_k: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    /// Every k up to `max_k` violates its bound; the depth is capped.
    pub saturated: bool,
    /// "exponential" or "linear" (used if the bounds were not monotone in k).
    pub scan: String,
    pub per_k: Vec<GroupTest>,
}

struct Scanner<'a> {
    record: &'a MeasurementRecord,
    opts: &'a CertifyOptions,
    tables: &'a dyn TableProvider,
    x: f64,
    v: f64,
    se_x: f64,
    se_v: f64,
    z: f64,
    tests: BTreeMap<u64, GroupTest>,
}

impl Scanner<'_> {
    fn bound_for(&self, k: u64) -> Result<LowerBound> {
        let spin = self.record.spin.scaled(k)?;
        let dim = spin.two_j() as u64 + 1;
        if self.opts.analytic_only || dim > self.opts.dimension_cap {
            return analytic_lower(spin, self.x);
        }
        match exact_lower(spin, self.x, self.tables) {
            // half-integer effective spin left of its bifurcation
            Err(Error::Regime { .. }) => analytic_lower(spin, self.x),
            other => other,
        }
    }

    fn test(&self, k: u64) -> Result<GroupTest> {
        let b = self.bound_for(k)?;
        let margin = b.value - self.v;
        let sigma = self.se_v.hypot(b.slope * self.se_x);
        Ok(GroupTest {
            k,
            bound: b.value,
            method: b.method,
            margin,
            sigma,
            violated_raw: margin > tolerances::MOMENT,
            violated: margin > tolerances::MOMENT.max(self.z * sigma),
        })
    }

    /// Evaluates the missing tests among `ks` (concurrently).
    fn ensure(&mut self, ks: &[u64]) -> Result<()> {
        let todo: Vec<u64> = ks
            .iter()
            .copied()
            .filter(|k| !self.tests.contains_key(k))
            .collect();
        let this: &Scanner = self;
        let done = this.opts.execution.try_map(&todo, |&k| this.test(k))?;
        for t in done {
            self.tests.insert(t.k, t);
        }
        Ok(())
    }

    fn monotone(&self) -> bool {
        self.tests
            .values()
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[1].bound <= w[0].bound + 1e-12)
    }
}

/// Largest k with every k' ≤ k passing `pass`, assuming monotonicity, from
/// tests already stored for a ladder and its bisection.
fn depth_from(tests: &BTreeMap<u64, GroupTest>, pass: impl Fn(&GroupTest) -> bool) -> u64 {
    let mut last = 0;
    for (k, t) in tests {
        if !pass(t) {
            break;
        }
        last = *k;
    }
    last
}

/// Minimum entanglement depth implied by the record.
pub fn certify_depth(
    record: &MeasurementRecord,
    opts: &CertifyOptions,
    tables: &dyn TableProvider,
) -> Result<DepthCertificate> {
    record.validate()?;
    if record.has_errors() && opts.margin.is_none() {
        return Err(Error::MarginPolicyRequired);
    }
    let n = record.num_particles;
    let max_k = opts.max_k.unwrap_or(n);
    if max_k == 0 || max_k > n {
        return Err(Error::InvalidInput(format!(
            "max_k must lie in 1..={n}, got {max_k}"
        )));
    }
    let nj = record.total_spin();
    let (x, v) = record.scaled();
    let mut s = Scanner {
        record,
        opts,
        tables,
        x,
        v,
        se_x: record.se_mean_jz.unwrap_or(0.0) / nj,
        se_v: record.se_var_jx.unwrap_or(0.0) / nj,
        z: opts.margin.map_or(0.0, |m| m.z),
        tests: BTreeMap::new(),
    };

    // exponential ladder, a few rungs at a time
    let mut ladder = Vec::new();
    let mut k = 1u64;
    while k < max_k {
        ladder.push(k);
        k = k.saturating_mul(2);
    }
    ladder.push(max_k);
    let batch = 4;
    for chunk in ladder.chunks(batch) {
        s.ensure(chunk)?;
        if chunk.iter().any(|k| !s.tests[k].violated_raw) {
            break;
        }
    }

    // bisect between the last violated rung and the first passing one, for
    // both the raw and the margin-adjusted test
    for use_margin in [false, true] {
        let pass = |t: &GroupTest| {
            if use_margin {
                t.violated
            } else {
                t.violated_raw
            }
        };
        loop {
            let lo = depth_from(&s.tests, pass);
            let hi = s.tests.range(lo + 1..).next().map(|(k, _)| *k);
            match hi {
                Some(hi) if hi > lo + 1 => {
                    let mid = lo + (hi - lo) / 2;
                    s.ensure(&[mid])?;
                }
                _ => break,
            }
        }
    }

    let mut scan = "exponential".to_string();
    if !s.monotone() {
        // ordering in k failed somewhere: test every k in turn
        scan = "linear".to_string();
        let mut k = 1;
        while k <= max_k {
            let chunk: Vec<u64> = (k..=max_k.min(k + 15)).collect();
            s.ensure(&chunk)?;
            if chunk.iter().any(|k| !s.tests[k].violated_raw) {
                break;
            }
            k += 16;
        }
    }
    let raw = depth_from(&s.tests, |t| t.violated_raw);
    let adjusted = depth_from(&s.tests, |t| t.violated);
    let depth = |last: u64| (last + 1).min(max_k);
    Ok(DepthCertificate {
        certified_depth: depth(adjusted),
        raw_depth: depth(raw),
        x,
        v,
        num_particles: n,
        two_j: record.spin.two_j(),
        max_k,
        z: opts.margin.map(|m| m.z),
        saturated: raw >= max_k,
        scan,
        per_k: s.tests.into_values().collect(),
    })
}

/// Whether the record violates the single-particle separability bound, and
/// v − L_J(x) (negative when it does).
pub fn is_entangled(
    record: &MeasurementRecord,
    opts: &CertifyOptions,
    tables: &dyn TableProvider,
) -> Result<(bool, f64)> {
    let one = CertifyOptions {
        max_k: Some(1.min(record.num_particles)),
        ..opts.clone()
    };
    let cert = certify_depth(record, &one, tables)?;
    let t = &cert.per_k[0];
    Ok((t.violated, -t.margin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::spin_one_frontier;

    fn spin(two_j: u32) -> Spin {
        Spin::new(two_j).unwrap()
    }

    fn half_record(n: u64, x: f64, v: f64) -> MeasurementRecord {
        let nj = n as f64 * 0.5;
        MeasurementRecord::new(n, spin(1), x * nj, v * nj)
    }

    #[test]
    fn coherent_bound_for_spin_half() {
        let t = InMemoryTables::default();
        for mode in [BoundMode::Exact, BoundMode::Analytic] {
            let b = separability_bound(spin(1), 10, 1.0, mode, &t).unwrap();
            assert!((b - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn spin_one_bounds_at_0_6() {
        let t = InMemoryTables::default();
        let exact = separability_bound(spin(2), 1, 0.6, BoundMode::Exact, &t).unwrap();
        let analytic = separability_bound(spin(2), 1, 0.6, BoundMode::Analytic, &t).unwrap();
        assert!((exact - 0.1).abs() < 1e-9);
        assert!((analytic - 0.0569).abs() < 1e-4);
        assert!(analytic <= exact);
    }

    #[test]
    fn exact_mode_refuses_left_of_bifurcation() {
        let t = InMemoryTables::default();
        let e = separability_bound(spin(3), 4, 0.6, BoundMode::Exact, &t).unwrap_err();
        assert!(matches!(e, Error::Regime { two_j: 3, .. }));
        assert!(separability_bound(spin(3), 4, 0.6, BoundMode::Analytic, &t).is_ok());
    }

    #[test]
    fn coherent_ensemble_is_depth_one() {
        let t = InMemoryTables::default();
        let c = certify_depth(&half_record(100, 1.0, 0.5), &CertifyOptions::default(), &t).unwrap();
        assert_eq!(c.certified_depth, 1);
        let (ent, margin) =
            is_entangled(&half_record(100, 1.0, 0.5), &CertifyOptions::default(), &t).unwrap();
        assert!(!ent);
        assert!(margin.abs() < 1e-9);
    }

    #[test]
    fn between_spin_half_and_spin_one_is_depth_two() {
        let t = InMemoryTables::default();
        assert!(0.30 < spin_half_frontier(0.9) && 0.30 > spin_one_frontier(0.9));
        let c =
            certify_depth(&half_record(100, 0.9, 0.30), &CertifyOptions::default(), &t).unwrap();
        assert_eq!(c.certified_depth, 2);
        assert_eq!(c.raw_depth, 2);
        assert_eq!(c.per_k[0].method, BoundMode::Exact);
    }

    #[test]
    fn squeezing_below_coherent_noise_is_not_enough() {
        let t = InMemoryTables::default();
        let x = 0.9;
        let v = 0.5 * (spin_half_frontier(x) + 0.5);
        let (ent, margin) =
            is_entangled(&half_record(50, x, v), &CertifyOptions::default(), &t).unwrap();
        assert!(!ent);
        assert!(margin > 0.0);
    }

    #[test]
    fn xi_below_one_near_full_polarization_is_entangled() {
        // ξ² = N·Var/⟨𝒥z⟩² for spin 1/2, so Var = ξ²⟨𝒥z⟩²/N
        let n = 1000u64;
        let jz = 0.98 * n as f64 * 0.5;
        let var = 0.8f64.powi(2) * jz * jz / (n as f64 * 0.5 * 2.0);
        let r = MeasurementRecord::new(n, spin(1), jz, var);
        let (ent, margin) =
            is_entangled(&r, &CertifyOptions::default(), &InMemoryTables::default()).unwrap();
        assert!(ent);
        assert!(margin < 0.0);
    }

    #[test]
    fn standard_errors_need_a_policy() {
        let mut r = half_record(100, 0.9, 0.30);
        r.se_var_jx = Some(0.1);
        let t = InMemoryTables::default();
        assert!(matches!(
            certify_depth(&r, &CertifyOptions::default(), &t),
            Err(Error::MarginPolicyRequired)
        ));
        let opts = CertifyOptions {
            margin: Some(MarginPolicy::default()),
            ..Default::default()
        };
        let c = certify_depth(&r, &opts, &t).unwrap();
        assert_eq!(c.raw_depth, 2);
        assert!(c.certified_depth <= c.raw_depth);
    }

    #[test]
    fn invalid_records() {
        let t = InMemoryTables::default();
        let o = CertifyOptions::default();
        let mut r = half_record(10, 0.5, 0.1);
        r.var_jx = -1.0;
        assert!(matches!(
            certify_depth(&r, &o, &t),
            Err(Error::InvalidRecord { .. })
        ));
        let r = MeasurementRecord::new(10, spin(1), 6.0, 1.0);
        assert!(matches!(
            certify_depth(&r, &o, &t),
            Err(Error::InvalidRecord { .. })
        ));
    }

    #[test]
    fn less_variance_never_lowers_depth() {
        let t = InMemoryTables::default();
        let o = CertifyOptions::default();
        let mut prev = 0;
        for k in (1..=40).rev() {
            let v = 0.01 * k as f64;
            let d = certify_depth(&half_record(200, 0.8, v), &o, &t)
                .unwrap()
                .certified_depth;
            assert!(d >= prev, "v={v}");
            prev = d;
        }
        assert!(prev > 2);
    }

    #[test]
    fn duplicating_the_ensemble_keeps_the_tests() {
        let t = InMemoryTables::default();
        let o = CertifyOptions {
            max_k: Some(64),
            ..Default::default()
        };
        let a = MeasurementRecord::new(100, spin(2), 80.0, 3.0);
        let b = MeasurementRecord::new(200, spin(2), 160.0, 6.0);
        let ca = certify_depth(&a, &o, &t).unwrap();
        let cb = certify_depth(&b, &o, &t).unwrap();
        assert_eq!(ca.certified_depth, cb.certified_depth);
        assert_eq!((ca.x, ca.v), (cb.x, cb.v));
        assert_eq!(ca.per_k, cb.per_k);
    }

    #[test]
    fn analytic_mode_is_never_deeper() {
        let t = InMemoryTables::default();
        for (x, v) in [(0.95, 0.2), (0.8, 0.05), (0.9, 0.1), (0.99, 0.01)] {
            let r = half_record(500, x, v);
            let exact = certify_depth(&r, &CertifyOptions::default(), &t).unwrap();
            let analytic = certify_depth(
                &r,
                &CertifyOptions {
                    analytic_only: true,
                    ..Default::default()
                },
                &t,
            )
            .unwrap();
            assert!(
                analytic.certified_depth <= exact.certified_depth,
                "x={x} v={v}"
            );
        }
    }

    #[test]
    fn record_json_roundtrip() {
        let json =
            r#"{"num_particles": 4, "two_j": 1, "mean_jz": 1.5, "var_jx": 0.2, "se_var_jx": 0.01}"#;
        let r: MeasurementRecord = serde_json::from_str(json).unwrap();
        assert_eq!(r.spin, spin(1));
        assert_eq!(r.se_var_jx, Some(0.01));
        assert!(serde_json::from_str::<MeasurementRecord>(
            r#"{"num_particles": 4, "two_j": 0, "mean_jz": 0, "var_jx": 0}"#
        )
        .is_err());
    }
}

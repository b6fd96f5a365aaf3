//! Angular-momentum operators in the |J,m⟩ basis and moment diagnostics.
//!
//! Basis ordering is fixed throughout the crate: index `i` holds `m = J - i`,
//! so index 0 is the coherent state |Jz = J⟩.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerances;

/// A spin quantum number, stored as 2J so half-integers are exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Spin {
    two_j: u32,
}

impl Spin {
    pub fn new(two_j: u32) -> Result<Self> {
        if two_j == 0 {
            return Err(Error::InvalidSpin { two_j });
        }
        Ok(Spin { two_j })
    }

    pub fn two_j(self) -> u32 {
        self.two_j
    }

    pub fn j(self) -> f64 {
        self.two_j as f64 / 2.0
    }

    /// Dimension 2J + 1 of the representation.
    pub fn dim(self) -> usize {
        self.two_j as usize + 1
    }

    pub fn is_integer(self) -> bool {
        self.two_j.is_multiple_of(2)
    }

    /// J(J+1).
    pub fn casimir(self) -> f64 {
        let j = self.j();
        j * (j + 1.0)
    }

    /// Jz eigenvalue at basis index `i`.
    pub fn m(self, i: usize) -> f64 {
        (self.two_j as f64 - 2.0 * i as f64) / 2.0
    }

    /// ⟨m_i|J₊|m_{i+1}⟩ = √(J(J+1) − m(m+1)) with m = m_{i+1}, for i in 0..2J.
    pub fn raising_element(self, i: usize) -> f64 {
        // J(J+1) - m(m+1) = (J - m)(J + m + 1); integer arithmetic on 2J, 2m.
        let two_m = self.two_j as i64 - 2 * (i as i64 + 1);
        let a = self.two_j as i64 - two_m;
        let b = self.two_j as i64 + two_m + 2;
        ((a * b) as f64 / 4.0).sqrt()
    }

    /// Off-diagonal entries of the real symmetric tridiagonal Jx.
    pub fn jx_offdiag(self) -> Vec<f64> {
        (0..self.two_j as usize)
            .map(|i| 0.5 * self.raising_element(i))
            .collect()
    }

    /// Spin obtained by grouping `k` particles of this spin.
    pub fn scaled(self, k: u64) -> Result<Spin> {
        let two_j = (self.two_j as u64)
            .checked_mul(k)
            .and_then(|v| u32::try_from(v).ok())
            .ok_or_else(|| Error::InvalidInput(format!("group spin {k}·J overflows")))?;
        Spin::new(two_j)
    }
}

impl TryFrom<u32> for Spin {
    type Error = Error;
    fn try_from(two_j: u32) -> Result<Self> {
        Spin::new(two_j)
    }
}

impl From<Spin> for u32 {
    fn from(s: Spin) -> u32 {
        s.two_j
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.two_j / 2)
        } else {
            write!(f, "{}/2", self.two_j)
        }
    }
}

/// Parses `"3/2"`, `"2"` or `"1.5"`.
impl FromStr for Spin {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("cannot parse spin `{s}`"));
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let num: u32 = num.trim().parse().map_err(|_| bad())?;
            match den.trim() {
                "1" => Spin::new(num.checked_mul(2).ok_or_else(bad)?),
                "2" => Spin::new(num),
                _ => Err(bad()),
            }
        } else if let Ok(n) = s.parse::<u32>() {
            Spin::new(n.checked_mul(2).ok_or_else(bad)?)
        } else {
            let v: f64 = s.parse().map_err(|_| bad())?;
            let twice = 2.0 * v;
            if twice.fract() != 0.0 || twice < 1.0 || twice > u32::MAX as f64 {
                return Err(bad());
            }
            Spin::new(twice as u32)
        }
    }
}

/// Complex amplitudes over |J,m⟩, m = J … −J, normalized to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    spin: Spin,
    amplitudes: Vec<Complex64>,
}

fn norm_sqr(amplitudes: &[Complex64]) -> f64 {
    amplitudes.iter().map(|a| a.norm_sqr()).sum()
}

fn check_normalized(spin: Spin, amplitudes: &[Complex64]) -> Result<()> {
    if amplitudes.len() != spin.dim() {
        return Err(Error::DimensionMismatch {
            expected: spin.dim(),
            got: amplitudes.len(),
        });
    }
    let n = norm_sqr(amplitudes);
    if !n.is_finite() || (n - 1.0).abs() > tolerances::STRUCTURAL {
        return Err(Error::NotNormalized { norm_sqr: n });
    }
    Ok(())
}

impl StateVector {
    /// Wraps amplitudes that must already be normalized within 1e-12.
    pub fn new(spin: Spin, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_normalized(spin, &amplitudes)?;
        Ok(StateVector { spin, amplitudes })
    }

    /// Normalizes arbitrary non-zero amplitudes.
    pub fn normalized(spin: Spin, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != spin.dim() {
            return Err(Error::DimensionMismatch {
                expected: spin.dim(),
                got: amplitudes.len(),
            });
        }
        let n = norm_sqr(&amplitudes);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NotNormalized { norm_sqr: n });
        }
        let s = n.sqrt().recip();
        amplitudes.iter_mut().for_each(|a| *a *= s);
        Ok(StateVector { spin, amplitudes })
    }

    pub fn from_real(spin: Spin, amplitudes: &[f64]) -> Result<Self> {
        Self::normalized(
            spin,
            amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
        )
    }

    /// Basis state |J, m = J − index⟩.
    pub fn basis(spin: Spin, index: usize) -> Result<Self> {
        if index >= spin.dim() {
            return Err(Error::InvalidInput(format!(
                "basis index {index} out of range for spin {spin}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); spin.dim()];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector { spin, amplitudes })
    }

    /// The coherent state |Jz = J⟩.
    pub fn coherent_up(spin: Spin) -> Self {
        Self::basis(spin, 0).expect("index 0 always exists")
    }

    /// Haar-random pure state.
    pub fn random<R: Rng + ?Sized>(spin: Spin, rng: &mut R) -> Self {
        loop {
            let amps: Vec<Complex64> = (0..spin.dim())
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            if let Ok(s) = Self::normalized(spin, amps) {
                return s;
            }
        }
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// |⟨self|other⟩|².
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn with_global_phase(&self, phase: f64) -> StateVector {
        let p = Complex64::from_polar(1.0, phase);
        StateVector {
            spin: self.spin,
            amplitudes: self.amplitudes.iter().map(|a| a * p).collect(),
        }
    }

    /// True when every amplitude is real up to a common global phase.
    pub fn is_real_up_to_phase(&self, tol: f64) -> bool {
        let Some(pivot) = self
            .amplitudes
            .iter()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        else {
            return true;
        };
        let phase = pivot.conj() / pivot.norm();
        self.amplitudes.iter().all(|a| (a * phase).im.abs() <= tol)
    }

    /// Real amplitudes after removing the global phase of the largest one.
    pub fn real_amplitudes(&self) -> Vec<f64> {
        let pivot = self
            .amplitudes
            .iter()
            .copied()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
            .unwrap_or(Complex64::new(1.0, 0.0));
        let phase = pivot.conj() / pivot.norm();
        self.amplitudes.iter().map(|a| (a * phase).re).collect()
    }
}

// ---------------------------------------------------------------------------
// O(d) operator actions built from the ladder elements.

/// out = Jx ψ, with Jx tridiagonal and `off[i] = ⟨i|Jx|i+1⟩`.
pub(crate) fn apply_jx(off: &[f64], psi: &[Complex64], out: &mut [Complex64]) {
    let d = psi.len();
    for i in 0..d {
        let mut acc = Complex64::new(0.0, 0.0);
        if i > 0 {
            acc += psi[i - 1] * off[i - 1];
        }
        if i + 1 < d {
            acc += psi[i + 1] * off[i];
        }
        out[i] = acc;
    }
}

/// out = Jy ψ. ⟨i|Jy|i+1⟩ = −i·off[i] (raising part), ⟨i+1|Jy|i⟩ = +i·off[i].
pub(crate) fn apply_jy(off: &[f64], psi: &[Complex64], out: &mut [Complex64]) {
    let d = psi.len();
    let i_unit = Complex64::new(0.0, 1.0);
    for i in 0..d {
        let mut acc = Complex64::new(0.0, 0.0);
        if i > 0 {
            acc += i_unit * psi[i - 1] * off[i - 1];
        }
        if i + 1 < d {
            acc -= i_unit * psi[i + 1] * off[i];
        }
        out[i] = acc;
    }
}

// ---------------------------------------------------------------------------
// Dense operator matrices.

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    spin: Spin,
    entries: DMatrix<Complex64>,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(spin: Spin, entries: DMatrix<Complex64>, hermitian: bool) -> Result<Self> {
        let d = spin.dim();
        if entries.nrows() != d || entries.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: entries.nrows(),
            });
        }
        let op = OperatorMatrix {
            spin,
            entries,
            hermitian,
        };
        if hermitian && op.hermiticity_defect() > tolerances::STRUCTURAL {
            return Err(Error::InvalidInput(
                "matrix flagged hermitian is not".into(),
            ));
        }
        Ok(op)
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    /// max |A − A†| entrywise.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.entries.nrows();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.entries[(r, c)] - self.entries[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn product(&self, other: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix {
            spin: self.spin,
            entries: &self.entries * &other.entries,
            hermitian: false,
        }
    }

    pub fn commutator(&self, other: &OperatorMatrix) -> DMatrix<Complex64> {
        &self.entries * &other.entries - &other.entries * &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn expectation(&self, state: &StateVector) -> Complex64 {
        let psi = nalgebra::DVector::from_column_slice(state.amplitudes());
        (psi.adjoint() * &self.entries * &psi)[(0, 0)]
    }

    /// Real part of the entries, for operators known to be real.
    pub fn real_entries(&self) -> DMatrix<f64> {
        self.entries.map(|z| z.re)
    }
}

/// Jx, Jy, Jz and Jx² for one spin.
#[derive(Clone, Debug)]
pub struct SpinOperators {
    pub jx: OperatorMatrix,
    pub jy: OperatorMatrix,
    pub jz: OperatorMatrix,
    pub jx2: OperatorMatrix,
}

/// Builds the Cartesian operators from J± ladder elements; Jx² is the matrix
/// square of Jx.
pub fn build_operators(spin: Spin) -> SpinOperators {
    let d = spin.dim();
    let zero = Complex64::new(0.0, 0.0);
    let mut jplus = DMatrix::from_element(d, d, zero);
    for i in 0..d - 1 {
        jplus[(i, i + 1)] = Complex64::new(spin.raising_element(i), 0.0);
    }
    let jminus = jplus.adjoint();
    let jx = (&jplus + &jminus) * Complex64::new(0.5, 0.0);
    // (J+ − J−)/2i
    let jy = (&jplus - &jminus) * Complex64::new(0.0, -0.5);
    let jz = DMatrix::from_fn(d, d, |r, c| {
        if r == c {
            Complex64::new(spin.m(r), 0.0)
        } else {
            zero
        }
    });
    let jx2 = &jx * &jx;
    SpinOperators {
        jx: OperatorMatrix {
            spin,
            entries: jx,
            hermitian: true,
        },
        jy: OperatorMatrix {
            spin,
            entries: jy,
            hermitian: true,
        },
        jz: OperatorMatrix {
            spin,
            entries: jz,
            hermitian: true,
        },
        jx2: OperatorMatrix {
            spin,
            entries: jx2,
            hermitian: true,
        },
    }
}

// ---------------------------------------------------------------------------
// Moments.

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinMoments {
    pub mean_jx: f64,
    pub mean_jy: f64,
    pub mean_jz: f64,
    pub var_jx: f64,
    pub var_jy: f64,
    pub var_jz: f64,
}

fn real_part_checked(z: Complex64, scale: f64, what: &str) -> Result<f64> {
    if z.im.abs() > tolerances::IMAGINARY_RESIDUE * scale {
        return Err(Error::NumericalFailure {
            context: format!("imaginary part of {what}"),
            residual: z.im.abs(),
        });
    }
    Ok(z.re)
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Moments of a raw amplitude vector; fails unless it is normalized.
pub fn moments_of(spin: Spin, amplitudes: &[Complex64]) -> Result<SpinMoments> {
    check_normalized(spin, amplitudes)?;
    let scale = spin.casimir().max(1.0);
    let d = spin.dim();
    let off = spin.jx_offdiag();

    let mean_jz: f64 = amplitudes
        .iter()
        .enumerate()
        .map(|(i, a)| spin.m(i) * a.norm_sqr())
        .sum();
    let var_jz: f64 = amplitudes
        .iter()
        .enumerate()
        .map(|(i, a)| (spin.m(i) - mean_jz).powi(2) * a.norm_sqr())
        .sum();

    let mut buf = vec![Complex64::new(0.0, 0.0); d];
    apply_jx(&off, amplitudes, &mut buf);
    let mean_jx = real_part_checked(dot(amplitudes, &buf), scale, "<Jx>")?;
    let var_jx: f64 = buf
        .iter()
        .zip(amplitudes)
        .map(|(u, a)| (u - a * mean_jx).norm_sqr())
        .sum();

    apply_jy(&off, amplitudes, &mut buf);
    let mean_jy = real_part_checked(dot(amplitudes, &buf), scale, "<Jy>")?;
    let var_jy: f64 = buf
        .iter()
        .zip(amplitudes)
        .map(|(u, a)| (u - a * mean_jy).norm_sqr())
        .sum();

    Ok(SpinMoments {
        mean_jx,
        mean_jy,
        mean_jz,
        var_jx,
        var_jy,
        var_jz,
    })
}

pub fn moments(state: &StateVector) -> Result<SpinMoments> {
    moments_of(state.spin, &state.amplitudes)
}

/// Symmetrized covariance ⟨{Jx,Jy}⟩/2 − ⟨Jx⟩⟨Jy⟩.
pub fn covariance_xy(state: &StateVector, m: &SpinMoments) -> f64 {
    let spin = state.spin;
    let off = spin.jx_offdiag();
    let d = spin.dim();
    let mut u = vec![Complex64::new(0.0, 0.0); d];
    let mut w = vec![Complex64::new(0.0, 0.0); d];
    apply_jx(&off, &state.amplitudes, &mut u);
    apply_jy(&off, &state.amplitudes, &mut w);
    // ⟨JxJy + JyJx⟩/2 = Re⟨Jxψ|Jyψ⟩
    dot(&u, &w).re - m.mean_jx * m.mean_jy
}

/// Ramsey squeezing factor ξ = √(2J)·ΔJx / |⟨Jz⟩|.
pub fn squeezing_parameter(moments: &SpinMoments, spin: Spin) -> Result<f64> {
    if moments.mean_jz == 0.0 {
        return Err(Error::UndefinedSqueezing);
    }
    Ok((2.0 * spin.j()).sqrt() * moments.var_jx.max(0.0).sqrt() / moments.mean_jz.abs())
}

/// Cyclic uncertainty products Var(a)·Var(b) − ⟨c⟩²/4 for (a,b,c) in
/// (x,y,z), (y,z,x), (z,x,y).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeisenbergReport {
    pub products: [f64; 3],
    pub violated: [bool; 3],
    pub saturated: [bool; 3],
}

impl HeisenbergReport {
    pub fn holds(&self) -> bool {
        !self.violated.iter().any(|&v| v)
    }

    pub fn min_product(&self) -> f64 {
        self.products.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn check_heisenberg(m: &SpinMoments) -> HeisenbergReport {
    let products = [
        m.var_jx * m.var_jy - m.mean_jz * m.mean_jz / 4.0,
        m.var_jy * m.var_jz - m.mean_jx * m.mean_jx / 4.0,
        m.var_jz * m.var_jx - m.mean_jy * m.mean_jy / 4.0,
    ];
    let tol = tolerances::MOMENT;
    HeisenbergReport {
        products,
        violated: products.map(|p| p < -tol),
        saturated: products.map(|p| p.abs() <= tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn spin_parsing() {
        assert_eq!("3/2".parse::<Spin>().unwrap().two_j(), 3);
        assert_eq!("2".parse::<Spin>().unwrap().two_j(), 4);
        assert_eq!("2.5".parse::<Spin>().unwrap().two_j(), 5);
        assert_eq!("4/1".parse::<Spin>().unwrap().two_j(), 8);
        assert!("0".parse::<Spin>().is_err());
        assert!("1/3".parse::<Spin>().is_err());
        assert!("0.7".parse::<Spin>().is_err());
        assert!(Spin::new(0).is_err());
        assert!(Spin::new(2).unwrap().is_integer());
        assert!(!Spin::new(3).unwrap().is_integer());
        assert_eq!(Spin::new(3).unwrap().to_string(), "3/2");
    }

    #[test]
    fn spin_half_matrices() {
        let ops = build_operators(Spin::new(1).unwrap());
        assert_eq!(ops.jx.get(0, 1), c(0.5));
        assert_eq!(ops.jx.get(1, 0), c(0.5));
        assert_eq!(ops.jx.get(0, 0), c(0.0));
        assert_eq!(ops.jz.get(0, 0), c(0.5));
        assert_eq!(ops.jz.get(1, 1), c(-0.5));
        // Jy purely imaginary antisymmetric
        assert_eq!(ops.jy.get(0, 1), Complex64::new(0.0, -0.5));
        assert_eq!(ops.jy.get(1, 0), Complex64::new(0.0, 0.5));
    }

    #[test]
    fn spin_one_ladder_element() {
        let ops = build_operators(Spin::new(2).unwrap());
        let v = ops.jx.get(0, 1);
        assert!((v.re - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn commutators_and_casimir() {
        let i = Complex64::new(0.0, 1.0);
        for two_j in [1u32, 2, 3, 4, 7, 20, 51, 100, 201, 400] {
            let spin = Spin::new(two_j).unwrap();
            let o = build_operators(spin);
            let d = spin.dim();
            let cxy = o.jx.commutator(&o.jy) - o.jz.entries() * i;
            let cyz = o.jy.commutator(&o.jz) - o.jx.entries() * i;
            let czx = o.jz.commutator(&o.jx) - o.jy.entries() * i;
            for m in [&cxy, &cyz, &czx] {
                let worst = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
                assert!(
                    worst <= 1e-12 * spin.casimir().max(1.0),
                    "2J={two_j}: {worst}"
                );
            }
            let cas =
                o.jx2.entries() + o.jy.product(&o.jy).entries() + o.jz.product(&o.jz).entries();
            for r in 0..d {
                for cc in 0..d {
                    let want = if r == cc { spin.casimir() } else { 0.0 };
                    let err = (cas[(r, cc)] - c(want)).norm();
                    assert!(
                        err <= tolerances::CASIMIR * spin.casimir().max(1.0),
                        "2J={two_j}"
                    );
                }
            }
            let tr = o.jx2.trace() + o.jy.product(&o.jy).trace() + o.jz.product(&o.jz).trace();
            assert!((tr.re - d as f64 * spin.casimir()).abs() < 1e-9 * d as f64 * spin.casimir());
            for op in [&o.jx, &o.jy, &o.jz, &o.jx2] {
                assert!(op.hermiticity_defect() <= tolerances::STRUCTURAL);
            }
            // Jx, Jz real symmetric; Jy purely imaginary
            assert!(o.jx.entries().iter().all(|z| z.im == 0.0));
            assert!(o.jz.entries().iter().all(|z| z.im == 0.0));
            assert!(o.jy.entries().iter().all(|z| z.re == 0.0));
        }
    }

    #[test]
    fn coherent_state_moments() {
        for two_j in [1u32, 2, 3, 10, 57] {
            let spin = Spin::new(two_j).unwrap();
            let m = moments(&StateVector::coherent_up(spin)).unwrap();
            let j = spin.j();
            assert!((m.mean_jz - j).abs() < 1e-14);
            assert!((m.var_jx - j / 2.0).abs() < 1e-12);
            assert!((m.var_jy - j / 2.0).abs() < 1e-12);
            assert!(m.var_jz.abs() < 1e-14);
            let rep = check_heisenberg(&m);
            assert!(rep.holds());
            assert!(rep.saturated[0], "x-y product saturates");
            let xi = squeezing_parameter(&m, spin).unwrap();
            assert!((xi - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn jx_eigenstate_spin_half() {
        let spin = Spin::new(1).unwrap();
        let s = StateVector::from_real(spin, &[1.0, 1.0]).unwrap();
        let m = moments(&s).unwrap();
        assert!((m.mean_jx - 0.5).abs() < 1e-15);
        assert!(m.var_jx.abs() < 1e-15);
    }

    #[test]
    fn squeezing_parameter_substitution() {
        let spin = Spin::new(20).unwrap();
        let m = SpinMoments {
            mean_jx: 0.0,
            mean_jy: 0.0,
            mean_jz: 10.0,
            var_jx: 10.0 / 8.0,
            var_jy: 0.0,
            var_jz: 0.0,
        };
        assert!((squeezing_parameter(&m, spin).unwrap() - 0.5).abs() < 1e-15);
        let zero = SpinMoments { mean_jz: 0.0, ..m };
        assert!(matches!(
            squeezing_parameter(&zero, spin),
            Err(Error::UndefinedSqueezing)
        ));
    }

    #[test]
    fn non_normalized_is_rejected() {
        let spin = Spin::new(2).unwrap();
        let amps = vec![c(1.0), c(1.0), c(0.0)];
        assert!(matches!(
            moments_of(spin, &amps),
            Err(Error::NotNormalized { .. })
        ));
        assert!(StateVector::new(spin, amps).is_err());
        assert!(matches!(
            moments_of(spin, &[c(1.0)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ladder_actions_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for two_j in [1u32, 4, 9] {
            let spin = Spin::new(two_j).unwrap();
            let o = build_operators(spin);
            let s = StateVector::random(spin, &mut rng);
            let m = moments(&s).unwrap();
            let ex = |op: &OperatorMatrix| op.expectation(&s).re;
            assert!((m.mean_jx - ex(&o.jx)).abs() < 1e-12);
            assert!((m.mean_jy - ex(&o.jy)).abs() < 1e-12);
            assert!((m.mean_jz - ex(&o.jz)).abs() < 1e-12);
            let vx = ex(&o.jx2) - ex(&o.jx).powi(2);
            let vy = ex(&o.jy.product(&o.jy)) - ex(&o.jy).powi(2);
            assert!((m.var_jx - vx).abs() < 1e-10);
            assert!((m.var_jy - vy).abs() < 1e-10);
            let sym = o.jx.product(&o.jy).entries() + o.jy.product(&o.jx).entries();
            let psi = nalgebra::DVector::from_column_slice(s.amplitudes());
            let want = (psi.adjoint() * sym * &psi)[(0, 0)].re / 2.0 - m.mean_jx * m.mean_jy;
            assert!((covariance_xy(&s, &m) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn global_phase_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spin = Spin::new(7).unwrap();
        let s = StateVector::random(spin, &mut rng);
        let a = moments(&s).unwrap();
        let b = moments(&s.with_global_phase(1.234)).unwrap();
        for (x, y) in [
            (a.mean_jx, b.mean_jx),
            (a.mean_jy, b.mean_jy),
            (a.mean_jz, b.mean_jz),
            (a.var_jx, b.var_jx),
            (a.var_jy, b.var_jy),
            (a.var_jz, b.var_jz),
        ] {
            assert!((x - y).abs() < 1e-13);
        }
    }
}

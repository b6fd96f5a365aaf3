//! Numerical tolerances shared across modules.

/// Structural identities of exactly built matrices (commutators, hermiticity,
/// state normalization).
pub const STRUCTURAL: f64 = 1e-12;

/// Casimir identity on dense matrices; allows accumulation over a matrix product.
pub const CASIMIR: f64 = 1e-10;

/// Moment inequalities (Heisenberg products, frontier bounds).
pub const MOMENT: f64 = 1e-9;

/// Imaginary residue allowed on an expectation value of a Hermitian operator,
/// relative to max(1, J(J+1)).
pub const IMAGINARY_RESIDUE: f64 = 1e-10;

/// Eigen-residual of a ground state, relative to max(1, ‖H‖∞).
pub const EIGEN_RESIDUAL: f64 = 1e-10;

/// |<Jx>|, |<Jy>| allowed in a symmetric ground state.
pub const GROUND_STATE_SYMMETRY: f64 = 1e-8;

/// Second divided differences of a tabulated curve.
pub const CONVEXITY: f64 = 1e-7;

/// Accuracy of μ refinement towards a requested x.
pub const X_REFINE: f64 = 1e-6;

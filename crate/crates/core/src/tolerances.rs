//! Centralized tolerance constants.

/// Orthonormality / projection identities.
pub const ORTHO: f64 = 1e-10;

/// Relative threshold below which a column counts as rank deficient.
pub const RANK: f64 = 1e-10;

/// Membership tolerance for "y lies in V".
pub const MEMBERSHIP: f64 = 1e-8;

/// Orthogonal-row conservation after gradient training.
pub const CONSERVATION: f64 = 1e-8;

/// Absolute quadrature error for the expected-maximum integral.
pub const QUADRATURE: f64 = 1e-9;

//! Exact diagonalization of the one-dimensional Hubbard ring threaded by a
//! magnetic flux.
//!
//! The Hamiltonian acts on `L` sites arranged in a ring, with per-bond complex
//! hopping amplitudes, an on-site two-body coupling that may be set to
//! positive infinity per site (excluding double occupancy there), and an
//! optional per-site, per-spin one-body potential. The total flux through the
//! ring is the sum of the bond phases, and the ground-state energy depends on
//! the bond phases only through that sum.
//!
//! The crate builds the sparse Hamiltonian in a fixed-particle-number Fock
//! sector, computes ground states either densely or with a Lanczos iteration,
//! scans the ground energy as a function of flux to locate optimal flux
//! values, measures total spin content, and analyzes the hopping graph of the
//! many-body basis: cycle fluxes, minimal flux-carrying circuits, and
//! unitary equivalence to the Hamiltonian with all hopping entries negative.

pub mod analysis;
pub mod basis;
pub mod cli;
pub mod config;
pub mod hamiltonian;
pub mod hopgraph;
pub mod model;
pub mod solver;
pub mod suite;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FluxRingError {
    #[error("ring length {0} is below the minimum of 3")]
    RingTooSmall(usize),
    #[error("ring length {0} exceeds the 63-site bit budget")]
    RingTooLarge(usize),
    #[error("bond index {bond} out of range for ring length {ring_len}")]
    BondOutOfRange { bond: usize, ring_len: usize },
    #[error("sector ({n_up} up, {n_down} down) does not fit on {ring_len} sites")]
    SectorTooLarge {
        n_up: usize,
        n_down: usize,
        ring_len: usize,
    },
    #[error("sector is empty: no Fock state satisfies the occupancy projection")]
    EmptySector,
    #[error("per-site array has length {got}, expected ring length {expected}")]
    ArrayLengthMismatch { got: usize, expected: usize },
    #[error("vector length {got} does not match basis dimension {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("state {state:?} is not a member of the basis")]
    StateNotInBasis { state: String },
    #[error("Lanczos failed to converge: residual {residual:.3e} after {restarts} restarts (target {target:.3e})")]
    NoConvergence {
        residual: f64,
        target: f64,
        restarts: usize,
    },
    #[error("dimension {dim} exceeds the dense-solver cap {cap} required for this computation")]
    DenseCapExceeded { dim: usize, cap: usize },
    #[error("dense eigensolver failed: {0}")]
    DenseSolver(String),
    #[error("hopping graph dimension {dim} exceeds the cap {cap}")]
    GraphTooLarge { dim: usize, cap: usize },
    #[error("{0}")]
    InapplicableSector(String),
    #[error("vector is not normalized: |norm - 1| = {0:.3e}")]
    NotNormalized(f64),
    #[error("hole-particle map requires spin-independent hopping")]
    SpinDependentHopping,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("flux scan aborted at phi = {phi}: {source}")]
    ScanAborted {
        phi: f64,
        #[source]
        source: Box<FluxRingError>,
    },
}

pub type Result<T> = std::result::Result<T, FluxRingError>;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Reduce an angle to the half-open interval [0, 2pi).
pub fn mod_2pi(x: f64) -> f64 {
    let mut r = x % TWO_PI;
    if r < 0.0 {
        r += TWO_PI;
    }
    // x % 2pi can round to exactly 2pi for x slightly below a multiple.
    if r >= TWO_PI {
        r -= TWO_PI;
    }
    r
}

/// Distance between two angles on the circle, in [0, pi].
pub fn circ_dist(a: f64, b: f64) -> f64 {
    let d = mod_2pi(a - b);
    d.min(TWO_PI - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn mod_2pi_reduces_into_half_open_interval() {
        assert_eq!(mod_2pi(0.0), 0.0);
        assert!((mod_2pi(7.0 * PI) - PI).abs() < 1e-12);
        assert!((mod_2pi(-PI / 2.0) - 1.5 * PI).abs() < 1e-12);
        let r = mod_2pi(-1e-18);
        assert!((0.0..TWO_PI).contains(&r));
    }

    #[test]
    fn circ_dist_wraps_around_zero() {
        assert!((circ_dist(0.1, TWO_PI - 0.1) - 0.2).abs() < 1e-12);
        assert!((circ_dist(PI, 0.0) - PI).abs() < 1e-12);
        assert_eq!(circ_dist(1.25, 1.25), 0.0);
    }
}

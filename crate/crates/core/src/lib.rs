//! Closed-form endpoint actions for the hierarchy of even-power
//! oscillators `V(y) = k2n y^(2n) / (2n)`, together with the
//! harmonic-oscillator linearization map and a numerical harness that
//! certifies the Hamilton-Jacobi identities at machine precision.
//!
//! The pieces fit together as follows. `oscillator` defines the family and
//! its point functions; `integrate` produces dense high-accuracy solutions
//! of Newton's equation; `extremals` labels orbits by their constants of
//! motion (y_max, t_max, E), solves two-point boundary value problems by
//! shooting, and evaluates the equivalent endpoint and amplitude-phase
//! representations; `action` evaluates the closed-form on-shell action and
//! its brute-force quadrature oracle; `hj` differentiates the closed form
//! through the boundary value solver and checks the Hamilton-Jacobi system;
//! `linearize` implements the coordinate and time deformations connecting
//! the harmonic member to every other member.

pub mod action;
pub mod error;
pub mod extremals;
pub mod hj;
pub mod integrate;
pub mod linearize;
pub mod oscillator;
pub mod quadrature;
pub mod rootfind;
pub mod sampling;

pub use action::{
    action_closed_form, action_harmonic_feynman, action_harmonic_new, action_numeric_oracle,
    action_quartic, ActionForm, ActionValue,
};
pub use error::{Error, Result};
pub use extremals::{gamma, harmonic_endpoint_form, EndpointData, Extremal, PhaseIntegral};
pub use hj::{energy_identity, energy_identity_terms, hj_residuals, HJReport};
pub use integrate::{integrate, integrate_span, Trajectory, DEFAULT_TOL};
pub use linearize::{coord_forward, coord_inverse, time_reparam, HarmonicCoords, MappedSolution, TimeMap};
pub use oscillator::{period, OscillatorParams, State};

/// Local error tolerances, exposed as configuration everywhere an
/// integration or quadrature happens.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Local tolerance of the initial value integrator.
    pub ivp: f64,
    /// Absolute tolerance of adaptive quadratures.
    pub quad: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { ivp: DEFAULT_TOL, quad: DEFAULT_TOL }
    }
}

impl Tolerances {
    /// Tight settings used by the verification suites; boundary value
    /// re-solves at this accuracy keep finite-difference noise near 1e-7.
    pub fn verification() -> Self {
        Self { ivp: 1e-12, quad: 1e-12 }
    }
}

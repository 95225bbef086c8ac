//! The even-power oscillator family: parameters, point functions of the
//! dynamics, and the exact period of bounded motion.
//!
//! Member `n` of the hierarchy has potential `V(y) = k2n * y^(2n) / (2n)`
//! and Newton equation `m * y'' = -k2n * y^(2n-1)`. An auxiliary harmonic
//! oscillator with spring constant `k2 = m * omega^2` tags along; it only
//! enters through ratios that cancel in observable quantities.

use crate::error::{Error, Result};
use crate::quadrature;
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillatorParams {
    n: u32,
    mass: f64,
    k2n: f64,
    omega: f64,
    /// Derived, always `mass * omega^2`. Never set independently.
    k2: f64,
}

impl OscillatorParams {
    /// `n >= 1` selects the member (1 = harmonic, 2 = quartic), `k2n` is its
    /// spring constant, `omega` the auxiliary harmonic frequency.
    pub fn new(n: u32, mass: f64, k2n: f64, omega: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidInput("hierarchy index n must be >= 1".into()));
        }
        for (name, v) in [("mass", mass), ("k2n", k2n), ("omega", omega)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        Ok(Self {
            n,
            mass,
            k2n,
            omega,
            k2: mass * omega * omega,
        })
    }

    /// The n = 1 member with `k2n` equal to the auxiliary spring constant.
    pub fn harmonic(mass: f64, omega: f64) -> Result<Self> {
        Self::new(1, mass, mass * omega * omega, omega)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn nf(&self) -> f64 {
        f64::from(self.n)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn k2n(&self) -> f64 {
        self.k2n
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn k2(&self) -> f64 {
        self.k2
    }

    /// `V(y) = k2n * y^(2n) / (2n)`; even in `y`.
    pub fn potential(&self, y: f64) -> f64 {
        self.k2n * (y * y).powi(self.n as i32) / (2.0 * self.nf())
    }

    /// `-dV/dy = -k2n * y^(2n-1)`, with the odd power taken as
    /// `sign(y) * |y|^(2n-1)` so negative bases never hit `powf`.
    pub fn force(&self, y: f64) -> f64 {
        -self.k2n * y.signum() * y.abs().powi(2 * self.n as i32 - 1)
    }

    /// `d(force)/dy = -k2n * (2n-1) * |y|^(2n-2)`.
    pub fn force_slope(&self, y: f64) -> f64 {
        -self.k2n * (2.0 * self.nf() - 1.0) * y.abs().powi(2 * self.n as i32 - 2)
    }

    pub fn lagrangian(&self, y: f64, ydot: f64) -> f64 {
        0.5 * self.mass * ydot * ydot - self.potential(y)
    }

    pub fn hamiltonian(&self, y: f64, p: f64) -> f64 {
        p * p / (2.0 * self.mass) + self.potential(y)
    }

    /// Turning amplitude at energy `E`: the positive root of `V(y) = E`.
    pub fn amplitude_for_energy(&self, energy: f64) -> Result<f64> {
        if !(energy > 0.0) {
            return Err(Error::NonpositiveEnergy(energy));
        }
        Ok((2.0 * self.nf() * energy / self.k2n).powf(1.0 / (2.0 * self.nf())))
    }

    pub fn energy_for_amplitude(&self, y_max: f64) -> f64 {
        self.potential(y_max)
    }
}

/// Canonical state: `p = m * dy/dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct State {
    pub t: f64,
    pub y: f64,
    pub p: f64,
}

/// Exact period of the bounded orbit with energy `E > 0`.
///
/// The turning-point integral `4 * int_0^{y_max} dy / sqrt(2(E - V)/m)` is
/// evaluated after the substitution `y = y_max * sin(theta)`, which cancels
/// the inverse-square-root endpoint singularity analytically:
/// the integrand becomes `1 / sqrt(sum_{j<n} sin^{2j} theta)`, smooth on
/// [0, pi/2]. For n = 1 this reduces to `2 pi sqrt(m / k2n)`.
pub fn period(params: &OscillatorParams, energy: f64) -> Result<f64> {
    let y_max = params.amplitude_for_energy(energy)?;
    let n = params.n;
    let f = |theta: f64| {
        let s2 = theta.sin().powi(2);
        let mut denom = 0.0;
        let mut pow = 1.0;
        for _ in 0..n {
            denom += pow;
            pow *= s2;
        }
        1.0 / denom.sqrt()
    };
    let i = quadrature::adaptive(&f, 0.0, FRAC_PI_2, 1e-14)?;
    Ok(4.0 * y_max * (params.mass / (2.0 * energy)).sqrt() * i)
}

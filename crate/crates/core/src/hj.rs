//! Numerical certification of the Hamilton-Jacobi system: the endpoint
//! derivatives of the closed-form action must reproduce the endpoint
//! momenta and the conserved energy,
//! `dS/dy_b = p_b`, `dS/dt_b = -E`, `dS/dy_a = -p_a`, `dS/dt_a = +E`.
//!
//! Each derivative is a Richardson-extrapolated central difference in which
//! every perturbed evaluation re-solves the boundary value problem, because
//! the extremal itself depends on the endpoint data. Re-solves run at
//! tolerance 1e-12 and are warm-started from the base momentum, which puts
//! the finite-difference noise floor near 1e-7.

use crate::action::{action_closed_form, action_numeric_oracle};
use crate::error::Result;
use crate::extremals::{EndpointData, Extremal};
use crate::oscillator::OscillatorParams;
use crate::Tolerances;
use serde::Serialize;

/// Relative finite-difference residuals of the four identities for one
/// endpoint configuration, plus the closed-form vs. quadrature gap.
#[derive(Debug, Clone, Serialize)]
pub struct HJReport {
    pub ep: EndpointData,
    pub n: u32,
    pub residual_py_b: f64,
    pub residual_e_b: f64,
    pub residual_py_a: f64,
    pub residual_e_a: f64,
    /// Base space step; time steps scale with the interval length.
    pub fd_step: f64,
    /// Order of the extrapolated difference (two step sizes, ratio 2).
    pub fd_order: u32,
    pub oracle_gap: f64,
    /// Extrapolated derivatives, for sign checks and triangulation.
    pub ds_dyb: f64,
    pub ds_dtb: f64,
    pub ds_dya: f64,
    pub ds_dta: f64,
    /// Closed-form targets.
    pub p_b: f64,
    pub p_a: f64,
    pub energy: f64,
}

fn relative(gap: f64, target: f64) -> f64 {
    gap.abs() / (1.0 + target.abs())
}

/// Closed-form action at perturbed endpoint data. The extremal is re-solved
/// from scratch by momentum continuation from the base solution: the
/// interior turning count may legitimately change when a perturbed endpoint
/// crosses a turning point, while the solution family stays smooth.
fn action_at(
    params: &OscillatorParams,
    ep: &EndpointData,
    tol: Tolerances,
    p_a_guess: f64,
) -> Result<f64> {
    let ext = Extremal::solve_endpoint_bvp_continuation(params, ep, tol, p_a_guess)?;
    Ok(action_closed_form(&ext, ep)?.value)
}

/// Central difference with one Richardson level (steps h and h/2, ratio 2),
/// i.e. an O(h^4) derivative of S along one endpoint coordinate.
fn richardson_derivative(
    mut s_of: impl FnMut(f64) -> Result<f64>,
    x0: f64,
    h: f64,
) -> Result<f64> {
    let d_h = (s_of(x0 + h)? - s_of(x0 - h)?) / (2.0 * h);
    let d_h2 = (s_of(x0 + 0.5 * h)? - s_of(x0 - 0.5 * h)?) / h;
    Ok((4.0 * d_h2 - d_h) / 3.0)
}

/// Assemble the report for one endpoint configuration.
///
/// `fd_step` of `None` uses `1e-5 * (1 + |y|)` in space and
/// `1e-5 * (t_b - t_a)` in time.
pub fn hj_residuals(
    params: &OscillatorParams,
    ep: &EndpointData,
    fd_step: Option<f64>,
    branch: u32,
) -> Result<HJReport> {
    let tol = Tolerances::verification();
    let base = Extremal::solve_endpoint_bvp(params, ep, branch, tol)?;
    // a vanishing full-interval phase sine marks a conjugate-point
    // configuration: the solution family folds there and differentiating
    // through the solver is ill posed
    let phi_ab = base.phase(ep.t_a, ep.t_b)?.value;
    if phi_ab.sin().abs() < 1e-10 {
        return Err(crate::Error::PhaseSingularity {
            sin_phi: phi_ab.sin().abs(),
            threshold: 1e-10,
        });
    }
    let p_a_base = base.trajectory().p_at(ep.t_a)?;
    let energy = base.energy();
    let p_b = base.momentum_endpoint_b(ep.t_b)?;
    let p_a = base.momentum_endpoint_a(ep.t_a)?;

    let s_closed = action_closed_form(&base, ep)?.value;
    let s_oracle = action_numeric_oracle(&base, ep)?.value;
    let oracle_gap = relative(s_closed - s_oracle, s_oracle);

    let h_yb = fd_step.unwrap_or(1e-5 * (1.0 + ep.y_b.abs()));
    let h_ya = fd_step.unwrap_or(1e-5 * (1.0 + ep.y_a.abs()));
    let h_t = fd_step.unwrap_or(1e-5 * (ep.t_b - ep.t_a));

    let ds_dyb = richardson_derivative(
        |yb| action_at(params, &EndpointData::new(ep.t_a, ep.y_a, ep.t_b, yb)?, tol, p_a_base),
        ep.y_b,
        h_yb,
    )?;
    let ds_dya = richardson_derivative(
        |ya| action_at(params, &EndpointData::new(ep.t_a, ya, ep.t_b, ep.y_b)?, tol, p_a_base),
        ep.y_a,
        h_ya,
    )?;
    let ds_dtb = richardson_derivative(
        |tb| action_at(params, &EndpointData::new(ep.t_a, ep.y_a, tb, ep.y_b)?, tol, p_a_base),
        ep.t_b,
        h_t,
    )?;
    let ds_dta = richardson_derivative(
        |ta| action_at(params, &EndpointData::new(ta, ep.y_a, ep.t_b, ep.y_b)?, tol, p_a_base),
        ep.t_a,
        h_t,
    )?;

    Ok(HJReport {
        ep: *ep,
        n: params.n(),
        residual_py_b: relative(ds_dyb - p_b, p_b),
        residual_e_b: relative(ds_dtb + energy, energy),
        residual_py_a: relative(ds_dya + p_a, p_a),
        residual_e_a: relative(ds_dta - energy, energy),
        fd_step: h_yb,
        fd_order: 4,
        oracle_gap,
        ds_dyb,
        ds_dtb,
        ds_dya,
        ds_dta,
        p_b,
        p_a,
        energy,
    })
}

impl HJReport {
    pub fn max_residual(&self) -> f64 {
        self.residual_py_b
            .max(self.residual_e_b)
            .max(self.residual_py_a)
            .max(self.residual_e_a)
    }
}

/// The two routes to `dS/dt_b` at a turning-amplitude level:
/// `-k2n y_max^(2n) / (n+1) + (n-1)/(n+1) * k2n y_max^(2n) / (2n)` versus
/// `-E`. Both reduce to `-k2n y_max^(2n) / (2n)`.
pub fn energy_identity_terms(params: &OscillatorParams, y_max: f64) -> (f64, f64) {
    let nf = params.nf();
    let y2n = y_max.powi(2 * params.n() as i32);
    let lhs = -params.k2n() * y2n / (nf + 1.0)
        + (nf - 1.0) / (nf + 1.0) * params.k2n() * y2n / (2.0 * nf);
    let rhs = -params.energy_for_amplitude(y_max);
    (lhs, rhs)
}

/// `energy_identity_terms` evaluated on an extremal's amplitude.
pub fn energy_identity(ext: &Extremal) -> (f64, f64) {
    energy_identity_terms(ext.params(), ext.y_max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn tight() -> Tolerances {
        Tolerances { ivp: 1e-12, quad: 1e-12 }
    }

    #[test]
    fn harmonic_residuals_against_analytic_action() {
        // y = sin t through (0,0) -> (pi/2, 1); derivatives of the textbook
        // harmonic action give p_b = 0, p_a = 1, E = 1/2
        let params = OscillatorParams::harmonic(1.0, 1.0).unwrap();
        let ep = EndpointData::new(0.0, 0.0, FRAC_PI_2, 1.0).unwrap();
        let report = hj_residuals(&params, &ep, None, 0).unwrap();
        assert!(report.max_residual() < 1e-6, "residuals {report:?}");
        assert_relative_eq!(report.ds_dyb, 0.0, epsilon = 1e-6);
        assert_relative_eq!(report.ds_dya, -1.0, epsilon = 1e-6);
        assert_relative_eq!(report.ds_dtb, -0.5, epsilon = 1e-6);
        assert_relative_eq!(report.ds_dta, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn quartic_residuals() {
        let params = OscillatorParams::new(2, 1.0, 1.0, 1.0).unwrap();
        let ep = EndpointData::new(0.0, 0.2, 1.0, 0.5).unwrap();
        let report = hj_residuals(&params, &ep, None, 0).unwrap();
        assert!(report.max_residual() < 1e-5, "residuals {report:?}");
        // sign structure of an autonomous bounded system
        assert!(report.ds_dtb < 0.0);
        assert!(report.ds_dta > 0.0);
        // formula-free triangulation of dS/dy_b against the trajectory
        let base = Extremal::solve_endpoint_bvp(&params, &ep, 0, tight()).unwrap();
        let m_ydot = base.trajectory().p_at(ep.t_b).unwrap();
        assert!((report.ds_dyb - m_ydot).abs() < 1e-5);
    }

    #[test]
    fn time_translation_invariance() {
        // shifting both endpoint times leaves S unchanged, so the two
        // energy derivatives cancel
        let params = OscillatorParams::new(2, 1.0, 1.0, 1.0).unwrap();
        let ep = EndpointData::new(0.0, 0.2, 1.0, 0.5).unwrap();
        let report = hj_residuals(&params, &ep, None, 0).unwrap();
        assert!(
            (report.ds_dta + report.ds_dtb).abs() < 1e-6,
            "dS/dta + dS/dtb = {}",
            report.ds_dta + report.ds_dtb
        );

        let shifted = EndpointData::new(5.0, 0.2, 6.0, 0.5).unwrap();
        let r2 = hj_residuals(&params, &shifted, None, 0).unwrap();
        assert!((r2.ds_dtb - report.ds_dtb).abs() < 1e-6);
    }

    #[test]
    fn energy_identity_examples() {
        // quartic: -k4 y^4 / 3 + k4 y^4 / 12 = -k4 y^4 / 4
        let p = OscillatorParams::new(2, 1.0, 2.0, 1.0).unwrap();
        let (lhs, rhs) = energy_identity_terms(&p, 1.3);
        assert_relative_eq!(lhs, rhs, epsilon = 1e-15, max_relative = 1e-14);
        assert_relative_eq!(lhs, -2.0 * 1.3f64.powi(4) / 4.0, max_relative = 1e-14);

        // harmonic: -k2 y^2 / 2 + 0
        let p = OscillatorParams::harmonic(1.0, 1.0).unwrap();
        let (lhs, rhs) = energy_identity_terms(&p, 0.9);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-14);

        // sextic with k6 = 6, y_max = 1: -6/4 + (2/4) = -1 = -E
        let p = OscillatorParams::new(3, 1.0, 6.0, 1.0).unwrap();
        let (lhs, rhs) = energy_identity_terms(&p, 1.0);
        assert_relative_eq!(lhs, -1.0, max_relative = 1e-14);
        assert_relative_eq!(rhs, -1.0, max_relative = 1e-14);
    }
}

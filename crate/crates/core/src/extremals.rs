//! Extremals of the oscillator hierarchy labeled by their constants of
//! motion, plus the two equivalent endpoint representations.
//!
//! A bounded orbit is fixed by the turning amplitude `y_max` and a time
//! `t_max` at which `y = +y_max`. Phase integrals `Phi = omega * int gamma dt`
//! with `gamma = sqrt(n k2n / k2) |y|^(n-1)` play the role that elapsed time
//! plays for the harmonic member: the deformed coordinate
//! `u(y) = y |y|^(n-1)` evolves as `u_max cos Phi` along every extremal.

use crate::error::{Error, Result};
use crate::integrate::{integrate, integrate_span, Trajectory};
use crate::oscillator::{period, OscillatorParams, State};
use crate::rootfind;
use crate::Tolerances;
use serde::Serialize;

/// Boundary data the on-shell action is a function of.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndpointData {
    pub t_a: f64,
    pub y_a: f64,
    pub t_b: f64,
    pub y_b: f64,
}

impl EndpointData {
    /// Requires `t_b >= t_a`; the degenerate equal-time case is allowed so
    /// that zero-length actions evaluate to zero.
    pub fn new(t_a: f64, y_a: f64, t_b: f64, y_b: f64) -> Result<Self> {
        for (name, v) in [("t_a", t_a), ("y_a", y_a), ("t_b", t_b), ("y_b", y_b)] {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("{name} must be finite")));
            }
        }
        if t_b < t_a {
            return Err(Error::InvalidInput(format!(
                "t_b = {t_b} must not precede t_a = {t_a}"
            )));
        }
        Ok(Self { t_a, y_a, t_b, y_b })
    }
}

/// `omega * int gamma dt` between two times, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseIntegral {
    pub value: f64,
}

/// `gamma(y) = sqrt(n k2n / k2) * |y|^(n-1)`; constant for n = 1.
pub fn gamma(params: &OscillatorParams, y: f64) -> f64 {
    (params.nf() * params.k2n() / params.k2()).sqrt() * y.abs().powi(params.n() as i32 - 1)
}

/// `u(y) = y * |y|^(n-1)`, the odd deformed coordinate.
fn signed_power(y: f64, n: u32) -> f64 {
    y * y.abs().powi(n as i32 - 1)
}

/// Interpolating endpoint solution of the harmonic oscillator:
/// `x(t) = [x_b sin w(t - t_a) + x_a sin w(t_b - t)] / sin w(t_b - t_a)`.
pub fn harmonic_endpoint_form(
    x_a: f64,
    t_hat_a: f64,
    x_b: f64,
    t_hat_b: f64,
    omega: f64,
    t_hat: f64,
) -> Result<f64> {
    let s_ab = (omega * (t_hat_b - t_hat_a)).sin();
    if s_ab.abs() < 1e-12 {
        return Err(Error::ConjugatePoints(format!(
            "|sin omega (t_b - t_a)| = {:.3e} below 1e-12",
            s_ab.abs()
        )));
    }
    Ok((x_b * (omega * (t_hat - t_hat_a)).sin() + x_a * (omega * (t_hat_b - t_hat)).sin()) / s_ab)
}

/// An extremal together with a dense numerical realization.
#[derive(Debug, Clone)]
pub struct Extremal {
    params: OscillatorParams,
    y_max: f64,
    t_max: f64,
    energy: f64,
    period: f64,
    t_ref: f64,
    traj: Trajectory,
    tol: Tolerances,
}

impl Extremal {
    /// Build the extremal with amplitude `y_max > 0` and maximum at `t_max`,
    /// realized densely over at least `[cover_lo, cover_hi]`.
    pub fn from_turning_point(
        params: &OscillatorParams,
        y_max: f64,
        t_max: f64,
        cover_lo: f64,
        cover_hi: f64,
        tol: Tolerances,
    ) -> Result<Self> {
        if !(y_max > 0.0) || !y_max.is_finite() {
            return Err(Error::InvalidInput(format!(
                "y_max must be positive and finite, got {y_max}"
            )));
        }
        let energy = params.energy_for_amplitude(y_max);
        let t_period = period(params, energy)?;
        let lo = cover_lo.min(t_max);
        let hi = cover_hi.max(t_max);
        let traj = integrate_span(
            params,
            State { t: t_max, y: y_max, p: 0.0 },
            lo,
            hi,
            tol.ivp,
        )?;
        Ok(Self {
            params: *params,
            y_max,
            t_max,
            energy,
            period: t_period,
            t_ref: t_max,
            traj,
            tol,
        })
    }

    /// Build the extremal through an arbitrary initial state, covering
    /// `[cover_lo, cover_hi]`. The representative maximum is the one nearest
    /// the middle of the cover window.
    pub fn from_initial(
        params: &OscillatorParams,
        initial: State,
        cover_lo: f64,
        cover_hi: f64,
        tol: Tolerances,
    ) -> Result<Self> {
        let energy = params.hamiltonian(initial.y, initial.p);
        let y_max = params.amplitude_for_energy(energy)?;
        let t_period = period(params, energy)?;
        let lo = cover_lo.min(initial.t) - 0.75 * t_period;
        let hi = cover_hi.max(initial.t) + 0.75 * t_period;
        let traj = integrate_span(params, initial, lo, hi, tol.ivp)?;
        let t_mid = 0.5 * (cover_lo + cover_hi);
        let t_max = nearest_maximum(&traj, t_mid)?;
        let ext = Self {
            params: *params,
            y_max,
            t_max,
            energy,
            period: t_period,
            t_ref: t_mid - 0.5 * t_period,
            traj,
            tol,
        };
        ext.check_touch()?;
        Ok(ext)
    }

    /// Solve the two-point boundary value problem by shooting on the initial
    /// momentum. `branch` is the requested number of interior turning points
    /// (0 = principal extremal).
    ///
    /// The scan brackets the shooting residual over momenta drawn from
    /// energies in `[V(max(|y_a|,|y_b|)), 10x]`, doubling the upper bound
    /// until a sign change appears; brackets are polished by a safeguarded
    /// secant iteration. When several momenta reproduce the endpoints on the
    /// requested branch the smallest `|p_a|` wins.
    pub fn solve_endpoint_bvp(
        params: &OscillatorParams,
        ep: &EndpointData,
        branch: u32,
        tol: Tolerances,
    ) -> Result<Self> {
        Self::solve_bvp_impl(params, ep, branch, tol, None)
    }

    /// Same as `solve_endpoint_bvp` but seeded with a momentum guess; the
    /// scan is skipped when plain secant from the guess converges onto the
    /// requested branch. Used when differentiating through the solver.
    pub fn solve_endpoint_bvp_warm(
        params: &OscillatorParams,
        ep: &EndpointData,
        branch: u32,
        tol: Tolerances,
        p_a_guess: f64,
    ) -> Result<Self> {
        Self::solve_bvp_impl(params, ep, branch, tol, Some(p_a_guess))
    }

    /// Re-solve at nearby endpoint data following the solution family
    /// continuously from a momentum guess, regardless of how the interior
    /// turning count changes. Endpoint derivatives of the action are taken
    /// along this continuous family; the count jumps exactly when an
    /// endpoint crosses a turning point, where the family itself is smooth.
    pub fn solve_endpoint_bvp_continuation(
        params: &OscillatorParams,
        ep: &EndpointData,
        tol: Tolerances,
        p_a_guess: f64,
    ) -> Result<Self> {
        if ep.t_b <= ep.t_a {
            return Err(Error::InvalidInput("endpoint solve needs t_b > t_a".into()));
        }
        let g_scale = 1.0 + ep.y_b.abs();
        if let Some(p) = plain_secant(params, ep, tol, p_a_guess, 2e-13 * g_scale, 1e-9 * g_scale)
        {
            return Self::build_from_momentum(params, ep, p, tol);
        }
        Err(Error::RootFind(format!(
            "continuation from p_a = {p_a_guess} did not converge"
        )))
    }

    fn solve_bvp_impl(
        params: &OscillatorParams,
        ep: &EndpointData,
        branch: u32,
        tol: Tolerances,
        guess: Option<f64>,
    ) -> Result<Self> {
        if ep.t_b <= ep.t_a {
            return Err(Error::InvalidInput(
                "endpoint solve needs t_b > t_a".into(),
            ));
        }
        let g_scale = 1.0 + ep.y_b.abs();
        let f_accept = 1e-9 * g_scale;
        let f_target = 1e-12 * g_scale;

        if let Some(p0) = guess {
            if let Some(p) = warm_secant(params, ep, branch, tol, p0, f_target, f_accept) {
                return Self::build_from_momentum(params, ep, p, tol);
            }
        }

        let e_req = params.potential(ep.y_a.abs().max(ep.y_b.abs()));
        let e_floor = params.potential(1.0);
        let mut e_hi = 10.0 * e_req.max(e_floor);
        let mut matching: Vec<f64> = Vec::new();
        let mut last_spread = f64::INFINITY;
        let mut last_gmin = f64::INFINITY;

        for _ in 0..=14 {
            let grid = momentum_grid(params, ep, e_req, e_hi, 121);
            let shots: Vec<(f64, Option<(f64, u32)>)> = grid
                .iter()
                .map(|&p| (p, shoot(params, ep, p, tol.ivp).ok()))
                .collect();

            let valid: Vec<(f64, f64, u32)> = shots
                .iter()
                .filter_map(|(p, s)| s.map(|(g, c)| (*p, g, c)))
                .collect();
            if let Some((lo, hi)) = valid
                .iter()
                .map(|v| v.1)
                .fold(None, |acc: Option<(f64, f64)>, g| {
                    Some(acc.map_or((g, g), |(lo, hi)| (lo.min(g), hi.max(g))))
                })
            {
                last_spread = hi - lo;
                last_gmin = lo.abs().min(hi.abs());
            }

            // near-zero residuals straight off the grid (degenerate data can
            // make the residual flat in p_a)
            for &(p, g, c) in &valid {
                if g.abs() <= 1e-8 * g_scale && c == branch {
                    matching.push(p);
                }
            }

            // sign-change brackets, polished by secant
            for w in valid.windows(2) {
                let (pl, gl, _) = w[0];
                let (ph, gh, _) = w[1];
                if gl * gh < 0.0 {
                    let mut f = |p: f64| shoot(params, ep, p, tol.ivp).map(|(g, _)| g);
                    if let Ok((root, g_root)) = rootfind::refine_bracketed(
                        &mut f,
                        pl,
                        ph,
                        gl,
                        gh,
                        1e-14 * (1.0 + pl.abs().max(ph.abs())),
                        f_target,
                        90,
                    ) {
                        if g_root.abs() <= f_accept {
                            if let Ok((_, c)) = shoot(params, ep, root, tol.ivp) {
                                if c == branch {
                                    matching.push(root);
                                }
                            }
                        }
                    }
                }
            }

            if !matching.is_empty() {
                matching.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
                return Self::build_from_momentum(params, ep, matching[0], tol);
            }
            e_hi *= 2.0;
        }

        // a flat residual bounded away from zero marks a degenerate
        // (conjugate) configuration rather than a missing branch
        if last_spread <= 1e-8 * g_scale && last_gmin > f_accept {
            return Err(Error::ConjugatePoints(format!(
                "shooting residual is flat (spread {last_spread:.2e}) but nonzero ({last_gmin:.2e})"
            )));
        }
        Err(Error::NoSuchBranch { requested: branch })
    }

    fn build_from_momentum(
        params: &OscillatorParams,
        ep: &EndpointData,
        p_a: f64,
        tol: Tolerances,
    ) -> Result<Self> {
        let energy = params.hamiltonian(ep.y_a, p_a);
        if energy <= 0.0 {
            return Err(Error::NonpositiveEnergy(energy));
        }
        let y_max = params.amplitude_for_energy(energy)?;
        let t_period = period(params, energy)?;
        let margin = 0.75 * t_period;
        let traj = integrate_span(
            params,
            State { t: ep.t_a, y: ep.y_a, p: p_a },
            ep.t_a - margin,
            ep.t_b + margin,
            tol.ivp,
        )?;
        let t_mid = 0.5 * (ep.t_a + ep.t_b);
        let t_max = nearest_maximum(&traj, t_mid)?;
        let ext = Self {
            params: *params,
            y_max,
            t_max,
            energy,
            period: t_period,
            t_ref: t_mid - 0.5 * t_period,
            traj,
            tol,
        };
        ext.check_touch()?;
        Ok(ext)
    }

    /// The trajectory must actually touch `+y_max` with zero momentum at the
    /// chosen `t_max`.
    fn check_touch(&self) -> Result<()> {
        let y = self.traj.y_at(self.t_max)?;
        let p = self.traj.p_at(self.t_max)?;
        let p_scale = (2.0 * self.params.mass() * self.energy).sqrt();
        if (y - self.y_max).abs() > 1e-8 * (1.0 + self.y_max)
            || p.abs() > 1e-8 * (1.0 + p_scale)
        {
            return Err(Error::RootFind(format!(
                "turning point mismatch at t_max: y = {y}, p = {p}, y_max = {}",
                self.y_max
            )));
        }
        Ok(())
    }

    pub fn params(&self) -> &OscillatorParams {
        &self.params
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Start of the one-period window the representative `t_max` was
    /// normalized into.
    pub fn t_ref(&self) -> f64 {
        self.t_ref
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.traj
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    /// Interior turning points of the realization between `lo` and `hi`.
    pub fn interior_turning_points(&self, lo: f64, hi: f64) -> u32 {
        self.traj.interior_turning_points(lo, hi)
    }

    /// Oriented phase integral `omega * int_{t1}^{t2} gamma(y(t)) dt`.
    ///
    /// Antisymmetric in its arguments. The integrand has a kink wherever y
    /// crosses zero (for n = 2), so the quadrature splits there.
    pub fn phase(&self, t1: f64, t2: f64) -> Result<PhaseIntegral> {
        Ok(PhaseIntegral { value: self.phi(t1, t2)? })
    }

    fn phi(&self, t1: f64, t2: f64) -> Result<f64> {
        if t1 == t2 {
            return Ok(0.0);
        }
        let params = self.params;
        let splits = if params.n() >= 2 {
            self.traj.zeros_of_y(t1.min(t2), t1.max(t2))
        } else {
            Vec::new()
        };
        let atol = self.tol.quad * (1.0 + (t2 - t1).abs());
        let v = self
            .traj
            .integrate_observable(t1, t2, |s| gamma(&params, s.y), &splits, atol)?;
        Ok(params.omega() * v)
    }

    /// Phase from the reference maximum to `t`.
    pub fn phi_from_max(&self, t: f64) -> Result<f64> {
        self.phi(self.t_max, t)
    }

    /// Amplitude-phase representation: the signed y with
    /// `u(y) = u(y_max) cos Phi(t_max, t)`.
    pub fn amplitude_phase_form(&self, t: f64) -> Result<f64> {
        let c = self.phi_from_max(t)?.cos();
        let n = self.params.nf();
        Ok(self.y_max * c.signum() * c.abs().powf(1.0 / n))
    }

    /// Residual of the integral equation
    /// `u(y(t)) - u(y_max) cos Phi(t_max, t)`, with y(t) taken from the
    /// integrated trajectory. Near zero on every extremal.
    pub fn residual_integral_equation(&self, t: f64) -> Result<f64> {
        let n = self.params.n();
        let y = self.traj.y_at(t)?;
        let c = self.phi_from_max(t)?.cos();
        Ok(signed_power(y, n) - signed_power(self.y_max, n) * c)
    }

    /// The pair `(|y(t)|^(n-1), y_max^(n-1) |cos Phi|^((n-1)/n))`; equal on
    /// extremals.
    pub fn amplitude_relation(&self, t: f64) -> Result<(f64, f64)> {
        let n = self.params.n() as i32;
        let nf = self.params.nf();
        let y = self.traj.y_at(t)?;
        let c = self.phi_from_max(t)?.cos();
        let lhs = y.abs().powi(n - 1);
        let rhs = self.y_max.powi(n - 1) * c.abs().powf((nf - 1.0) / nf);
        Ok((lhs, rhs))
    }

    /// Endpoint representation of the extremal: solves
    /// `u(y(t)) = [u(y_b) sin Phi(t_a,t) + u(y_a) sin Phi(t,t_b)] / sin Phi(t_a,t_b)`
    /// for the signed y(t). Degenerates when the full-interval phase sine
    /// vanishes.
    pub fn endpoint_form(&self, ep: &EndpointData, t: f64) -> Result<f64> {
        let n = self.params.n();
        let s_ab = self.phi(ep.t_a, ep.t_b)?.sin();
        if s_ab.abs() < 1e-12 {
            return Err(Error::ConjugatePoints(format!(
                "|sin Phi(t_a, t_b)| = {:.3e} below 1e-12",
                s_ab.abs()
            )));
        }
        let u = (signed_power(ep.y_b, n) * self.phi(ep.t_a, t)?.sin()
            + signed_power(ep.y_a, n) * self.phi(t, ep.t_b)?.sin())
            / s_ab;
        Ok(u.signum() * u.abs().powf(1.0 / self.params.nf()))
    }

    /// Closed-form momentum at the b endpoint. The phase is measured from
    /// the reference maximum, which makes the value equal the mechanical
    /// momentum `m * dy/dt` at the endpoint; the time-reversed a-endpoint
    /// representation is minus this value.
    pub fn momentum_endpoint_b(&self, t_b: f64) -> Result<f64> {
        self.endpoint_momentum(t_b)
    }

    /// Closed-form momentum at the a endpoint, same orientation convention
    /// as `momentum_endpoint_b` (equals `m * dy/dt` at `t_a`).
    pub fn momentum_endpoint_a(&self, t_a: f64) -> Result<f64> {
        self.endpoint_momentum(t_a)
    }

    fn endpoint_momentum(&self, t_e: f64) -> Result<f64> {
        let n = self.params.n();
        let y_e = self.traj.y_at(t_e)?;
        let phi = self.phi_from_max(t_e)?;
        let s = phi.sin();
        let pf = self.params.mass() * self.params.omega()
            * (self.params.k2n() / (self.params.nf() * self.params.k2())).sqrt();
        let u_e = signed_power(y_e, n);
        let u_max = signed_power(self.y_max, n);
        if s.abs() < 1e-12 {
            // an endpoint on a turning point is the removable case: on shell
            // u_e = u_max cos(phi), so the numerator is -u_max sin^2(phi)
            // and the momentum limit is -u_max sin(phi), i.e. zero
            if (u_e - u_max * phi.cos()).abs() <= 1e-6 * (1.0 + u_max) {
                return Ok(pf * (-u_max * s));
            }
            return Err(Error::PhaseSingularity { sin_phi: s.abs(), threshold: 1e-12 });
        }
        Ok(pf * (u_e * phi.cos() - u_max) / s)
    }
}

fn nearest_maximum(traj: &Trajectory, t_mid: f64) -> Result<f64> {
    let (lo, hi) = traj.span();
    traj.maxima(lo, hi)
        .into_iter()
        .min_by(|a, b| {
            (a - t_mid)
                .abs()
                .partial_cmp(&(b - t_mid).abs())
                .unwrap()
        })
        .ok_or_else(|| Error::RootFind("no maximum found inside the covered span".into()))
}

/// One shot of the BVP residual: integrate from (t_a, y_a, p_a) to t_b and
/// return the terminal mismatch together with the interior turning count.
fn shoot(
    params: &OscillatorParams,
    ep: &EndpointData,
    p_a: f64,
    tol_ivp: f64,
) -> Result<(f64, u32)> {
    let traj = integrate(
        params,
        State { t: ep.t_a, y: ep.y_a, p: p_a },
        ep.t_b,
        tol_ivp,
    )?;
    let y_end = traj.nodes().last().unwrap().y;
    let turns = traj.interior_turning_points(ep.t_a, ep.t_b);
    Ok((y_end - ep.y_b, turns))
}

fn momentum_grid(
    params: &OscillatorParams,
    ep: &EndpointData,
    e_req: f64,
    e_hi: f64,
    count: usize,
) -> Vec<f64> {
    let m = params.mass();
    let v_a = params.potential(ep.y_a);
    let p_hi = (2.0 * m * (e_hi - v_a).max(0.0)).sqrt();
    let p_req = (2.0 * m * (e_req - v_a).max(0.0)).sqrt();
    let mut grid: Vec<f64> = (0..count)
        .map(|i| -p_hi + 2.0 * p_hi * (i as f64) / ((count - 1) as f64))
        .collect();
    grid.push(p_req);
    grid.push(-p_req);
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-15 * (1.0 + p_hi));
    grid
}

/// Plain secant on the shooting residual from a seed momentum.
fn plain_secant(
    params: &OscillatorParams,
    ep: &EndpointData,
    tol: Tolerances,
    p0: f64,
    f_target: f64,
    f_accept: f64,
) -> Option<f64> {
    let eval = |p: f64| shoot(params, ep, p, tol.ivp).ok();
    let p_cap = 10.0 * (1.0 + p0.abs());
    let (mut x0, mut x1) = (p0, p0 + 1e-7 * (1.0 + p0.abs()));
    let (mut f0, _) = eval(x0)?;
    let (mut f1, _) = eval(x1)?;
    let mut best = if f0.abs() < f1.abs() { (x0, f0) } else { (x1, f1) };
    for _ in 0..50 {
        if best.1.abs() <= f_target {
            break;
        }
        let denom = f1 - f0;
        if denom == 0.0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / denom;
        if !x2.is_finite() || x2.abs() > p_cap {
            break;
        }
        let (f2, _) = eval(x2)?;
        if f2.abs() < best.1.abs() {
            best = (x2, f2);
        }
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
    }
    if best.1.abs() > f_accept {
        return None;
    }
    Some(best.0)
}

/// Secant from a seed momentum, accepted only if the converged root lands
/// on the requested branch.
fn warm_secant(
    params: &OscillatorParams,
    ep: &EndpointData,
    branch: u32,
    tol: Tolerances,
    p0: f64,
    f_target: f64,
    f_accept: f64,
) -> Option<f64> {
    let p = plain_secant(params, ep, tol, p0, f_target, f_accept)?;
    let (_, turns) = shoot(params, ep, p, tol.ivp).ok()?;
    if turns == branch {
        Some(p)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn tight() -> Tolerances {
        Tolerances { ivp: 1e-12, quad: 1e-12 }
    }

    fn harmonic() -> OscillatorParams {
        OscillatorParams::harmonic(1.0, 1.0).unwrap()
    }

    fn quartic() -> OscillatorParams {
        OscillatorParams::new(2, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn gamma_examples() {
        let p = OscillatorParams::new(1, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(gamma(&p, 0.37), 1.0);
        let p = OscillatorParams::new(2, 1.0, 0.5, 1.0).unwrap(); // k4 = k2/2
        assert_relative_eq!(gamma(&p, 1.0), 1.0, epsilon = 1e-15);
        let p = OscillatorParams::new(2, 1.0, 2.0, 1.0).unwrap(); // k4 = 2 k2
        assert_relative_eq!(gamma(&p, 3.0), 6.0, epsilon = 1e-14);
    }

    #[test]
    fn phase_examples() {
        let ext = Extremal::from_turning_point(&harmonic(), 1.0, 0.0, -1.0, 7.0, tight()).unwrap();
        assert_relative_eq!(ext.phase(0.0, PI).unwrap().value, PI, epsilon = 1e-10);
        assert_eq!(ext.phase(1.3, 1.3).unwrap().value, 0.0);
        // antisymmetry
        let f = ext.phase(0.2, 1.7).unwrap().value;
        let b = ext.phase(1.7, 0.2).unwrap().value;
        assert_relative_eq!(f, -b, epsilon = 1e-13);
    }

    #[test]
    fn quartic_phase_over_one_period_is_two_pi() {
        let p = quartic();
        let e = p.energy_for_amplitude(1.0);
        let t_period = period(&p, e).unwrap();
        let ext = Extremal::from_turning_point(&p, 1.0, 0.0, -0.5, t_period + 0.5, tight()).unwrap();
        assert_relative_eq!(
            ext.phase(0.0, t_period).unwrap().value,
            2.0 * PI,
            epsilon = 1e-8
        );
    }

    #[test]
    fn harmonic_endpoint_form_examples() {
        let v = harmonic_endpoint_form(0.0, 0.0, 1.0, FRAC_PI_2, 1.0, FRAC_PI_2 / 2.0).unwrap();
        assert_relative_eq!(v, (2.0f64).sqrt() / 2.0, epsilon = 1e-14);
        let v = harmonic_endpoint_form(0.3, 0.1, 0.9, 1.4, 1.0, 0.1).unwrap();
        assert_relative_eq!(v, 0.3, epsilon = 1e-14);
        assert!(matches!(
            harmonic_endpoint_form(0.0, 0.0, 1.0, PI, 1.0, 0.5),
            Err(Error::ConjugatePoints(_))
        ));
    }

    #[test]
    fn harmonic_endpoint_form_equals_amplitude_form_on_shell() {
        let (omega, x_max, t_max) = (1.3f64, 0.8f64, 0.4f64);
        let (ta, tb) = (0.9f64, 2.1f64);
        let xa = x_max * (omega * (ta - t_max)).cos();
        let xb = x_max * (omega * (tb - t_max)).cos();
        for i in 0..100 {
            let t = ta + (tb - ta) * (i as f64) / 99.0;
            let lhs = harmonic_endpoint_form(xa, ta, xb, tb, omega, t).unwrap();
            let rhs = x_max * (omega * (t - t_max)).cos();
            assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn harmonic_integral_equation_is_exact() {
        let ext = Extremal::from_turning_point(&harmonic(), 1.0, 0.0, -1.0, 7.0, tight()).unwrap();
        for t in [0.0, 0.7, 2.2, 5.9] {
            assert!(ext.residual_integral_equation(t).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn amplitude_phase_form_examples() {
        let p = quartic();
        let e = p.energy_for_amplitude(1.2);
        let t_period = period(&p, e).unwrap();
        let ext = Extremal::from_turning_point(&p, 1.2, 0.5, 0.5 - t_period, 0.5 + t_period, tight()).unwrap();
        // at t_max the form returns y_max
        assert_relative_eq!(ext.amplitude_phase_form(0.5).unwrap(), 1.2, epsilon = 1e-12);
        // at the half period the form returns -y_max
        let t_half = 0.5 + 0.5 * t_period;
        assert_relative_eq!(ext.amplitude_phase_form(t_half).unwrap(), -1.2, epsilon = 1e-7);
        // a quarter phase gives zero
        let t_quarter = 0.5 + 0.25 * t_period;
        assert!(ext.amplitude_phase_form(t_quarter).unwrap().abs() < 1e-4);
        assert!(ext.trajectory().y_at(t_quarter).unwrap().abs() < 1e-7);
        assert_relative_eq!(ext.residual_integral_equation(0.5).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn amplitude_phase_form_satisfies_newton() {
        // differentiating the amplitude-phase representation twice in time
        // reproduces the equation of motion
        for n in 2..=3u32 {
            let p = OscillatorParams::new(n, 1.0, 1.0, 1.0).unwrap();
            let ext = Extremal::from_turning_point(&p, 1.1, 0.4, -4.0, 8.0, tight()).unwrap();
            let h = 1e-2;
            for i in 0..20 {
                let t = 0.5 + 5.0 * (i as f64) / 19.0;
                let y = |t: f64| ext.amplitude_phase_form(t).unwrap();
                let ydd =
                    (-y(t - 2.0 * h) + 16.0 * y(t - h) - 30.0 * y(t) + 16.0 * y(t + h)
                        - y(t + 2.0 * h))
                        / (12.0 * h * h);
                let residual = p.mass() * ydd - p.force(y(t));
                assert!(residual.abs() < 1e-5, "n={n} t={t}: residual {residual}");
            }
        }
    }

    #[test]
    fn integral_equation_residual_along_two_periods() {
        let p = quartic();
        let e = p.energy_for_amplitude(1.0);
        let t_period = period(&p, e).unwrap();
        let ext = Extremal::from_turning_point(&p, 1.0, 0.0, -0.1, 2.0 * t_period + 0.1, tight()).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..50 {
            let t = 2.0 * t_period * (i as f64) / 49.0;
            worst = worst.max(ext.residual_integral_equation(t).unwrap().abs());
        }
        assert!(worst < 1e-7, "max residual {worst}");
    }

    #[test]
    fn amplitude_relation_holds() {
        let p = quartic();
        let ext = Extremal::from_turning_point(&p, 1.1, 0.3, -3.0, 9.0, tight()).unwrap();
        for t in [0.3, 0.9, 1.7, 2.4, 4.4] {
            let (lhs, rhs) = ext.amplitude_relation(t).unwrap();
            assert!((lhs - rhs).abs() < 1e-8, "t={t}: {lhs} vs {rhs}");
        }
        // n = 1 is trivially (1, 1)
        let h = Extremal::from_turning_point(&harmonic(), 1.0, 0.0, -1.0, 4.0, tight()).unwrap();
        let (lhs, rhs) = h.amplitude_relation(1.0).unwrap();
        assert_eq!((lhs, rhs), (1.0, 1.0));
    }

    #[test]
    fn bvp_harmonic_sine() {
        let ep = EndpointData::new(0.0, 0.0, FRAC_PI_2, 1.0).unwrap();
        let ext = Extremal::solve_endpoint_bvp(&harmonic(), &ep, 0, tight()).unwrap();
        assert_relative_eq!(ext.energy(), 0.5, epsilon = 1e-8);
        assert_relative_eq!(ext.y_max(), 1.0, epsilon = 1e-8);
        assert_relative_eq!(ext.t_max(), FRAC_PI_2, epsilon = 1e-8);
    }

    #[test]
    fn bvp_harmonic_cosine_at_conjugate_length() {
        // t_b - t_a = pi is a degenerate configuration; the principal branch
        // still exists (zero initial momentum) and must be found.
        let ep = EndpointData::new(0.0, 1.0, PI, -1.0).unwrap();
        let ext = Extremal::solve_endpoint_bvp(&harmonic(), &ep, 0, tight()).unwrap();
        assert_relative_eq!(ext.y_max(), 1.0, epsilon = 1e-8);
        assert_relative_eq!(ext.energy(), 0.5, epsilon = 1e-8);
        assert!(ext.t_max().abs() < 1e-8, "t_max = {}", ext.t_max());
    }

    #[test]
    fn bvp_conjugate_data_with_no_solution_is_detected() {
        // same degenerate interval but inconsistent endpoint values
        let ep = EndpointData::new(0.0, 1.0, PI, -0.5).unwrap();
        let err = Extremal::solve_endpoint_bvp(&harmonic(), &ep, 0, tight()).unwrap_err();
        assert!(matches!(err, Error::ConjugatePoints(_)), "got {err:?}");
    }

    #[test]
    fn bvp_quartic_example() {
        let ep = EndpointData::new(0.0, 0.2, 1.0, 0.5).unwrap();
        let ext = Extremal::solve_endpoint_bvp(&quartic(), &ep, 0, tight()).unwrap();
        // endpoints reproduced
        assert!((ext.trajectory().y_at(0.0).unwrap() - 0.2).abs() < 1e-8);
        assert!((ext.trajectory().y_at(1.0).unwrap() - 0.5).abs() < 1e-8);
        // the solved momentum lies in the bracket of an independent scan
        let p_solved = ext.trajectory().p_at(0.0).unwrap();
        let mut bracket = None;
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..400 {
            let p = -2.0 + 4.0 * (i as f64) / 399.0;
            let traj = integrate(&quartic(), State { t: 0.0, y: 0.2, p }, 1.0, 1e-10).unwrap();
            let g = traj.nodes().last().unwrap().y - 0.5;
            if let Some((pp, gg)) = prev {
                if gg * g < 0.0 {
                    bracket = Some((pp, p));
                    break;
                }
            }
            prev = Some((p, g));
        }
        let (lo, hi) = bracket.expect("scan oracle found no bracket");
        assert!(p_solved >= lo && p_solved <= hi, "{p_solved} not in [{lo}, {hi}]");
        // integral equation certified along the extremal
        for i in 0..50 {
            let t = (i as f64) / 49.0;
            assert!(ext.residual_integral_equation(t).unwrap().abs() < 1e-7);
        }
    }

    #[test]
    fn bvp_branches_are_distinct_for_the_quartic() {
        // the residual is linear in p_a for the harmonic member, so its BVP
        // solution is unique; branch structure appears from n = 2 on, where
        // the period depends on amplitude
        let ep = EndpointData::new(0.0, 0.3, 4.5, 0.4).unwrap();
        let hb = Extremal::solve_endpoint_bvp(&harmonic(), &ep, 9, tight());
        assert!(matches!(hb, Err(Error::NoSuchBranch { requested: 9 })), "got {hb:?}");

        let ep = EndpointData::new(0.0, 0.2, 3.0, 0.3).unwrap();
        let mut found = Vec::new();
        for branch in 0..4u32 {
            if let Ok(ext) = Extremal::solve_endpoint_bvp(&quartic(), &ep, branch, tight()) {
                assert_eq!(ext.interior_turning_points(0.0, 3.0), branch);
                assert!((ext.trajectory().y_at(3.0).unwrap() - 0.3).abs() < 1e-8);
                found.push((branch, ext.energy()));
            }
        }
        assert!(found.len() >= 2, "expected several branches, found {found:?}");
        for w in found.windows(2) {
            assert!(w[1].1 > w[0].1, "energy should grow with branch: {found:?}");
        }
    }

    #[test]
    fn momentum_endpoint_examples() {
        // quarter period after the maximum: p_b = -1 for the unit harmonic
        let ext = Extremal::from_turning_point(&harmonic(), 1.0, 0.0, -1.0, 4.0, tight()).unwrap();
        let p_b = ext.momentum_endpoint_b(FRAC_PI_2).unwrap();
        assert_relative_eq!(p_b, -1.0, epsilon = 1e-12);
        // generic phase: p_b = -m omega y_max sin(phi)
        for t in [0.3, 0.8, 2.0] {
            let phi = ext.phi_from_max(t).unwrap();
            assert_relative_eq!(
                ext.momentum_endpoint_b(t).unwrap(),
                -phi.sin(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn momentum_formulas_match_trajectory_momentum() {
        let ep = EndpointData::new(0.0, 0.2, 1.0, 0.5).unwrap();
        let ext = Extremal::solve_endpoint_bvp(&quartic(), &ep, 0, tight()).unwrap();
        let p_b = ext.momentum_endpoint_b(1.0).unwrap();
        let p_a = ext.momentum_endpoint_a(0.0).unwrap();
        assert_relative_eq!(p_b, ext.trajectory().p_at(1.0).unwrap(), epsilon = 1e-7);
        assert_relative_eq!(p_a, ext.trajectory().p_at(0.0).unwrap(), epsilon = 1e-7);
    }

    #[test]
    fn momentum_at_a_turning_point_is_zero() {
        // sin(phi) = 0 with the endpoint on shell: the removable limit
        let ext = Extremal::from_turning_point(&harmonic(), 1.0, 0.0, -4.0, 4.0, tight()).unwrap();
        let p_b = ext.momentum_endpoint_b(0.0).unwrap();
        assert!(p_b.abs() < 1e-12, "p_b = {p_b}");
    }

    #[test]
    fn endpoint_form_matches_amplitude_form_for_quartic() {
        let p = quartic();
        let ext = Extremal::from_turning_point(&p, 1.0, 0.9, -4.0, 6.0, tight()).unwrap();
        let (ta, tb) = (0.1, 2.4);
        let ep = EndpointData::new(
            ta,
            ext.trajectory().y_at(ta).unwrap(),
            tb,
            ext.trajectory().y_at(tb).unwrap(),
        )
        .unwrap();
        for i in 0..40 {
            let t = ta + (tb - ta) * (i as f64) / 39.0;
            let lhs = ext.endpoint_form(&ep, t).unwrap();
            let rhs = ext.amplitude_phase_form(t).unwrap();
            assert!((lhs - rhs).abs() < 1e-7, "t={t}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn t_max_is_normalized_into_the_reference_window() {
        let ep = EndpointData::new(0.0, 0.2, 1.0, 0.5).unwrap();
        let ext = Extremal::solve_endpoint_bvp(&quartic(), &ep, 0, tight()).unwrap();
        let off = ext.t_max() - ext.t_ref();
        assert!((0.0..ext.period()).contains(&off));
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 12, .. ProptestConfig::default() })]

        #[test]
        fn phase_is_antisymmetric_and_additive(
            t1 in 0.2f64..1.4,
            t2 in 1.6f64..3.0,
            t3 in 3.2f64..4.4,
        ) {
            let p = quartic();
            let ext = Extremal::from_turning_point(&p, 1.0, 0.0, -0.5, 5.0, tight()).unwrap();
            let a = ext.phase(t1, t2).unwrap().value;
            let b = ext.phase(t2, t3).unwrap().value;
            let c = ext.phase(t1, t3).unwrap().value;
            prop_assert!((a + b - c).abs() < 1e-11);
            prop_assert!((ext.phase(t2, t1).unwrap().value + a).abs() < 1e-12);
        }
    }
}

//! The on-shell action as a function of endpoint data.
//!
//! `action_closed_form` evaluates the master endpoint formula for any
//! member of the hierarchy; `action_quartic` and `action_harmonic_new` are
//! its n = 2 and n = 1 instantiations written out with literal exponents,
//! `action_harmonic_feynman` is the textbook harmonic result, and
//! `action_numeric_oracle` integrates the Lagrangian along the dense
//! trajectory as the independent reference.
//!
//! Each endpoint contributes a bracket divided by the sine of the phase
//! accumulated between the reference maximum and that endpoint; the bracket
//! terms cancel strongly near turning points, so they are accumulated in
//! compensated summation. The factor `(cos^2 Phi)^((n+1)/2n) / cos Phi` is
//! evaluated in its removable form `sign(cos Phi) |cos Phi|^(1/n)`.

use crate::error::{Error, Result};
use crate::extremals::{EndpointData, Extremal};
use serde::Serialize;

/// Phase sines below this threshold make the closed form ill-conditioned;
/// evaluation refuses rather than extrapolating.
pub const PHASE_SIN_MIN: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ActionForm {
    ClosedForm2n,
    Quartic,
    HarmonicFeynman,
    HarmonicTwoBracket,
    NumericOracle,
}

/// An action value tagged with the formula that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionValue {
    pub value: f64,
    pub form: ActionForm,
}

/// Neumaier-compensated sum; the bracket terms are O(1/sin Phi) and cancel
/// to O(sin Phi) near turning points.
fn compensated_sum(terms: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for &x in terms {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

/// `sign(cos) |cos|^(1/n)`, the removable form of
/// `(cos^2)^((n+1)/2n) / cos`.
fn removable_cos_power(c: f64, n: u32) -> f64 {
    if n == 1 {
        c
    } else {
        c.signum() * c.abs().powf(1.0 / f64::from(n))
    }
}

struct Phases {
    phi_b: f64,
    phi_a: f64,
}

fn endpoint_phases(ext: &Extremal, ep: &EndpointData) -> Result<Phases> {
    Ok(Phases {
        phi_b: ext.phase(ext.t_max(), ep.t_b)?.value,
        phi_a: ext.phase(ep.t_a, ext.t_max())?.value,
    })
}

/// Is the endpoint on shell at a turning point? There the phase sine and
/// the bracket vanish together and the term has a finite limit.
fn on_shell_at_turning_point(n: u32, y_e: f64, y_max: f64, phi: f64) -> bool {
    let u_e = y_e * y_e.abs().powi(n as i32 - 1);
    let u_max = y_max.powi(n as i32);
    (u_e - u_max * phi.cos()).abs() <= 1e-6 * (1.0 + u_max)
}

/// Below this the bracket is evaluated in its regrouped on-shell form.
const STABLE_SIN_SWITCH: f64 = 1e-3;

/// The cos-power factor `sign(cos) |cos|^(1/n)` entering the third bracket
/// term. Its derivative in `cos` diverges at a quarter phase, where phase
/// quadrature error would be amplified by `|cos|^(1/n - 1)`; but on shell
/// the factor equals `y_e / y_max` exactly, so near the quarter phase the
/// endpoint datum supplies it with no amplification.
fn cos_power_factor(n: u32, y_e: f64, y_max: f64, c: f64) -> f64 {
    if n > 1 && c.abs() <= 1e-3 {
        let q_data = y_e / y_max;
        let c_data = q_data.signum() * q_data.abs().powi(n as i32);
        if (c_data - c).abs() <= 1e-6 {
            return q_data;
        }
    }
    removable_cos_power(c, n)
}

/// The bracket divided by sin(phi), regrouped around the on-shell point
/// `w* = y_max * sign(cos) |cos|^(1/n)` where the direct sum cancels
/// catastrophically. Expanding `|y_e|^(n+1)` binomially in
/// `e = |y_e| - |w*|` gives the exact identity
///
///   bracket = -y_max^(n+1) q sin^2(phi) - (n+1) y_max^n d sin^2(phi)
///             + cos(phi) * sum_{k=2}^{n+1} C(n+1,k) |w*|^(n+1-k) e^k,
///
/// with `q = sign(cos)|cos|^(1/n)` and `d = y_e - w*`. Every term is small
/// near the turning configuration, so no O(1) cancellation survives the
/// division by sin(phi). Requires `y_e` on the same side as `w*`.
fn bracket_term_stable(n: u32, y_e: f64, y_max: f64, s: f64, c: f64) -> f64 {
    let nf = f64::from(n);
    let q = removable_cos_power(c, n);
    let w_star = y_max * q;
    let d = y_e - w_star;
    let e = y_e.abs() - w_star.abs();

    let mut tail = 0.0;
    let mut binom = 1.0; // C(n+1, k), built incrementally from k = 0
    let mut e_pow = 1.0;
    let npo = n as i32 + 1;
    for k in 0..=npo {
        if k >= 2 {
            tail += binom * w_star.abs().powi(npo - k) * e_pow * e * e;
        }
        binom *= f64::from(npo - k) / f64::from(k + 1);
        if k >= 2 {
            e_pow *= e;
        }
    }
    let tail_term = if s == 0.0 { 0.0 } else { c * tail / s };
    -s * (y_max.powi(npo) * q + (nf + 1.0) * y_max.powi(n as i32) * d) + tail_term
}

/// One endpoint contribution `bracket / sin(phi)`.
///
/// Near phase zeros the regrouped form takes over; exactly at a zero only
/// the on-shell (turning point) limit is defined and anything else is a
/// genuine pole, reported as `PhaseSingularity`.
fn bracket_term(n: u32, y_e: f64, y_max: f64, phi: f64) -> Result<f64> {
    let nf = f64::from(n);
    let s = phi.sin();
    let c = phi.cos();
    let w_star = y_max * removable_cos_power(c, n);
    let same_side = y_e == 0.0 || w_star == 0.0 || y_e.signum() == w_star.signum();
    if s.abs() < PHASE_SIN_MIN {
        if on_shell_at_turning_point(n, y_e, y_max, phi) && same_side {
            return Ok(bracket_term_stable(n, y_e, y_max, s, c));
        }
        return Err(Error::PhaseSingularity { sin_phi: s.abs(), threshold: PHASE_SIN_MIN });
    }
    if s.abs() < STABLE_SIN_SWITCH && same_side {
        return Ok(bracket_term_stable(n, y_e, y_max, s, c));
    }
    let bracket = compensated_sum(&[
        y_e.abs().powi(n as i32 + 1) * c,
        -(nf + 1.0) * y_e * y_max.powi(n as i32),
        nf * y_max.powi(n as i32 + 1) * cos_power_factor(n, y_e, y_max, c),
    ]);
    Ok(bracket / s)
}

/// Master endpoint formula for the on-shell action of member n.
///
/// Both phases are oriented away from the reference maximum, which keeps the
/// formula valid when `t_max` falls outside `[t_a, t_b]`. The trailing term
/// is `(n-1)/(n+1) * k2n/(2n) * y_max^(2n) * (t_b - t_a)`.
pub fn action_closed_form(ext: &Extremal, ep: &EndpointData) -> Result<ActionValue> {
    let value = closed_form_value(ext, ep)?;
    Ok(ActionValue { value, form: ActionForm::ClosedForm2n })
}

fn closed_form_value(ext: &Extremal, ep: &EndpointData) -> Result<f64> {
    let params = ext.params();
    let n = params.n();
    let nf = params.nf();
    let y_max = ext.y_max();
    let ph = endpoint_phases(ext, ep)?;

    let prefactor = params.mass() * params.omega() / (nf + 1.0)
        * (params.k2n() / (nf * params.k2())).sqrt();
    let endpoint_part =
        bracket_term(n, ep.y_b, y_max, ph.phi_b)? + bracket_term(n, ep.y_a, y_max, ph.phi_a)?;
    let trailing = (nf - 1.0) / (nf + 1.0) * params.k2n() / (2.0 * nf)
        * y_max.powi(2 * n as i32)
        * (ep.t_b - ep.t_a);
    Ok(prefactor * endpoint_part + trailing)
}

/// The quartic specialization with its exponents written out: prefactor
/// `m omega / 3 * sqrt(k4 / 2 k2)`, brackets in `|y|^3` and `|cos|^(1/2)`,
/// trailing term `k4 y_max^4 (t_b - t_a) / 12`. Identical algebra to
/// `action_closed_form` at n = 2.
pub fn action_quartic(ext: &Extremal, ep: &EndpointData) -> Result<ActionValue> {
    let params = ext.params();
    if params.n() != 2 {
        return Err(Error::WrongHierarchy { expected: 2, actual: params.n() });
    }
    let y_max = ext.y_max();
    let ph = endpoint_phases(ext, ep)?;

    let quartic_term = |y_e: f64, phi: f64| -> Result<f64> {
        let s = phi.sin();
        let c: f64 = phi.cos();
        let w_star = y_max * c.signum() * c.abs().sqrt();
        let same_side = y_e == 0.0 || y_e.signum() == w_star.signum();
        if s.abs() < PHASE_SIN_MIN {
            if on_shell_at_turning_point(2, y_e, y_max, phi) && same_side {
                return Ok(bracket_term_stable(2, y_e, y_max, s, c));
            }
            return Err(Error::PhaseSingularity { sin_phi: s.abs(), threshold: PHASE_SIN_MIN });
        }
        if s.abs() < STABLE_SIN_SWITCH && same_side {
            return Ok(bracket_term_stable(2, y_e, y_max, s, c));
        }
        let bracket = compensated_sum(&[
            y_e.abs().powi(3) * c,
            -3.0 * y_e * y_max * y_max,
            2.0 * y_max.powi(3) * cos_power_factor(2, y_e, y_max, c),
        ]);
        Ok(bracket / s)
    };

    let prefactor =
        params.mass() * params.omega() / 3.0 * (params.k2n() / (2.0 * params.k2())).sqrt();
    let value = prefactor * (quartic_term(ep.y_b, ph.phi_b)? + quartic_term(ep.y_a, ph.phi_a)?)
        + params.k2n() * y_max.powi(4) * (ep.t_b - ep.t_a) / 12.0;
    Ok(ActionValue { value, form: ActionForm::Quartic })
}

/// Textbook harmonic action
/// `m omega [(x_b^2 + x_a^2) cos omega T - 2 x_b x_a] / (2 sin omega T)`.
pub fn action_harmonic_feynman(ep: &EndpointData, mass: f64, omega: f64) -> Result<ActionValue> {
    let t = ep.t_b - ep.t_a;
    let s = (omega * t).sin();
    if s.abs() < 1e-12 {
        return Err(Error::ConjugatePoints(format!(
            "|sin omega (t_b - t_a)| = {:.3e} below 1e-12",
            s.abs()
        )));
    }
    let c = (omega * t).cos();
    let value = mass * omega * ((ep.y_b * ep.y_b + ep.y_a * ep.y_a) * c - 2.0 * ep.y_b * ep.y_a)
        / (2.0 * s);
    Ok(ActionValue { value, form: ActionForm::HarmonicFeynman })
}

/// The two-bracket harmonic form, i.e. the n = 1 member of the master
/// formula. Equal on shell to `action_harmonic_feynman`.
pub fn action_harmonic_new(ext: &Extremal, ep: &EndpointData) -> Result<ActionValue> {
    let params = ext.params();
    if params.n() != 1 {
        return Err(Error::WrongHierarchy { expected: 1, actual: params.n() });
    }
    let x_max = ext.y_max();
    let ph = endpoint_phases(ext, ep)?;

    let harmonic_term = |x_e: f64, phi: f64| -> Result<f64> {
        let s = phi.sin();
        let c = phi.cos();
        let w_star = x_max * c;
        let same_side = x_e == 0.0 || x_e.signum() == w_star.signum();
        if s.abs() < PHASE_SIN_MIN {
            if on_shell_at_turning_point(1, x_e, x_max, phi) && same_side {
                return Ok(bracket_term_stable(1, x_e, x_max, s, c));
            }
            return Err(Error::PhaseSingularity { sin_phi: s.abs(), threshold: PHASE_SIN_MIN });
        }
        if s.abs() < STABLE_SIN_SWITCH && same_side {
            return Ok(bracket_term_stable(1, x_e, x_max, s, c));
        }
        let bracket = compensated_sum(&[x_e * x_e * c, -2.0 * x_e * x_max, x_max * x_max * c]);
        Ok(bracket / s)
    };

    let prefactor = 0.5 * params.mass() * params.omega() * (params.k2n() / params.k2()).sqrt();
    let value = prefactor * (harmonic_term(ep.y_b, ph.phi_b)? + harmonic_term(ep.y_a, ph.phi_a)?);
    Ok(ActionValue { value, form: ActionForm::HarmonicTwoBracket })
}

/// Brute-force reference: adaptive quadrature of the Lagrangian along the
/// dense trajectory, split at the reference maximum.
pub fn action_numeric_oracle(ext: &Extremal, ep: &EndpointData) -> Result<ActionValue> {
    let params = *ext.params();
    let traj = ext.trajectory();
    let lagrangian = |s: &crate::oscillator::State| params.lagrangian(s.y, s.p / params.mass());
    let tol = ext.tolerances().quad;
    // oriented split at t_max keeps the two pieces aligned with the
    // endpoint brackets of the closed form
    let part_b = traj.integrate_observable(ext.t_max(), ep.t_b, lagrangian, &[], tol)?;
    let part_a = traj.integrate_observable(ep.t_a, ext.t_max(), lagrangian, &[], tol)?;
    Ok(ActionValue { value: part_b + part_a, form: ActionForm::NumericOracle })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillator::{period, OscillatorParams};
    use crate::Tolerances;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
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

    fn quartic_example() -> (Extremal, EndpointData) {
        let ep = EndpointData::new(0.0, 0.2, 1.0, 0.5).unwrap();
        let ext = Extremal::solve_endpoint_bvp(&quartic(), &ep, 0, tight()).unwrap();
        (ext, ep)
    }

    #[test]
    fn harmonic_reduction_gives_feynman_value() {
        // x = sin t through (0,0) -> (pi/2, 1); the Feynman value is 0
        let ep = EndpointData::new(0.0, 0.0, FRAC_PI_2, 1.0).unwrap();
        let ext = Extremal::solve_endpoint_bvp(&harmonic(), &ep, 0, tight()).unwrap();
        let closed = action_closed_form(&ext, &ep).unwrap().value;
        let new_form = action_harmonic_new(&ext, &ep).unwrap().value;
        let feynman = action_harmonic_feynman(&ep, 1.0, 1.0).unwrap().value;
        assert_relative_eq!(feynman, 0.0, epsilon = 1e-15);
        assert!((closed - feynman).abs() < 1e-12);
        assert!((new_form - feynman).abs() < 1e-12);
    }

    #[test]
    fn feynman_examples() {
        let ep = EndpointData::new(0.0, 1.0, FRAC_PI_2, 1.0).unwrap();
        assert_relative_eq!(
            action_harmonic_feynman(&ep, 1.0, 1.0).unwrap().value,
            -1.0,
            epsilon = 1e-14
        );
        let ep = EndpointData::new(0.0, 0.0, PI, 1.0).unwrap();
        assert!(matches!(
            action_harmonic_feynman(&ep, 1.0, 1.0),
            Err(Error::ConjugatePoints(_))
        ));
    }

    #[test]
    fn quartic_closed_form_matches_oracle() {
        let (ext, ep) = quartic_example();
        let closed = action_closed_form(&ext, &ep).unwrap().value;
        let oracle = action_numeric_oracle(&ext, &ep).unwrap().value;
        let gap = (closed - oracle).abs() / (1.0 + oracle.abs());
        assert!(gap < 1e-6, "gap {gap}");
        let q = action_quartic(&ext, &ep).unwrap().value;
        let gap_q = (q - oracle).abs() / (1.0 + oracle.abs());
        assert!(gap_q < 1e-6, "gap {gap_q}");
    }

    #[test]
    fn quartic_specialization_is_identical_algebra() {
        let p = quartic();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 0.0;
        let mut tested = 0;
        while tested < 100 {
            let y_max = rng.gen_range(0.6..1.4);
            let t_max = rng.gen_range(-1.0..1.0);
            let t_period = period(&p, p.energy_for_amplitude(y_max)).unwrap();
            let ta = t_max + rng.gen_range(-0.6..0.2) * t_period;
            let tb = ta + rng.gen_range(0.15..0.7) * t_period;
            let ext = Extremal::from_turning_point(
                &p, y_max, t_max, ta.min(t_max) - 0.1, tb.max(t_max) + 0.1, tight(),
            )
            .unwrap();
            let ep = EndpointData::new(
                ta,
                ext.trajectory().y_at(ta).unwrap(),
                tb,
                ext.trajectory().y_at(tb).unwrap(),
            )
            .unwrap();
            let (Ok(a), Ok(b)) = (action_closed_form(&ext, &ep), action_quartic(&ext, &ep)) else {
                continue;
            };
            worst = worst.max((a.value - b.value).abs());
            tested += 1;
        }
        assert!(worst < 1e-13, "max |closed - quartic| = {worst}");
    }

    #[test]
    fn zero_length_interval_has_zero_action() {
        let p = quartic();
        let ext = Extremal::from_turning_point(&p, 1.0, 0.0, -1.0, 3.0, tight()).unwrap();
        let y1 = ext.trajectory().y_at(1.0).unwrap();
        let ep = EndpointData::new(1.0, y1, 1.0, y1).unwrap();
        let closed = action_closed_form(&ext, &ep).unwrap().value;
        assert!(closed.abs() < 1e-12, "S = {closed}");
        let oracle = action_numeric_oracle(&ext, &ep).unwrap().value;
        assert_eq!(oracle, 0.0);
    }

    #[test]
    fn harmonic_action_over_full_period_is_zero() {
        let ext = Extremal::from_turning_point(&harmonic(), 1.3, 0.0, -0.5, 2.0 * PI + 0.5, tight()).unwrap();
        let ep = EndpointData::new(
            0.1,
            ext.trajectory().y_at(0.1).unwrap(),
            0.1 + 2.0 * PI,
            ext.trajectory().y_at(0.1 + 2.0 * PI).unwrap(),
        )
        .unwrap();
        let oracle = action_numeric_oracle(&ext, &ep).unwrap().value;
        assert!(oracle.abs() < 1e-9, "S = {oracle}");
    }

    #[test]
    fn additivity_on_a_shared_extremal() {
        let p = quartic();
        let ext = Extremal::from_turning_point(&p, 1.1, 0.4, -3.0, 6.0, tight()).unwrap();
        let y = |t: f64| ext.trajectory().y_at(t).unwrap();
        let (ta, tc, tb) = (0.1, 1.2, 2.3);
        let s_ab = action_closed_form(&ext, &EndpointData::new(ta, y(ta), tb, y(tb)).unwrap())
            .unwrap()
            .value;
        let s_ac = action_closed_form(&ext, &EndpointData::new(ta, y(ta), tc, y(tc)).unwrap())
            .unwrap()
            .value;
        let s_cb = action_closed_form(&ext, &EndpointData::new(tc, y(tc), tb, y(tb)).unwrap())
            .unwrap()
            .value;
        assert!((s_ac + s_cb - s_ab).abs() < 1e-8);
    }

    #[test]
    fn substitution_of_the_on_shell_relation_is_value_neutral() {
        // replacing y_b by its amplitude-phase reconstruction leaves the
        // closed form unchanged
        let (ext, ep) = quartic_example();
        let s0 = action_closed_form(&ext, &ep).unwrap().value;
        let y_b_reconstructed = ext.amplitude_phase_form(ep.t_b).unwrap();
        let ep_sub = EndpointData::new(ep.t_a, ep.y_a, ep.t_b, y_b_reconstructed).unwrap();
        let s1 = action_closed_form(&ext, &ep_sub).unwrap().value;
        assert!((s0 - s1).abs() < 1e-10, "substitution moved S by {}", (s0 - s1).abs());
    }

    #[test]
    fn phase_singularity_is_refused_off_shell() {
        let ext = Extremal::from_turning_point(&harmonic(), 1.0, 0.0, -4.0, 4.0, tight()).unwrap();
        // t_b at the maximum with y_b off the turning value: a genuine pole
        let ep = EndpointData::new(-1.0, ext.trajectory().y_at(-1.0).unwrap(), 0.0, 0.5).unwrap();
        assert!(matches!(
            action_closed_form(&ext, &ep),
            Err(Error::PhaseSingularity { .. })
        ));
    }

    #[test]
    fn turning_point_endpoint_takes_the_removable_limit() {
        // endpoint exactly on the maximum: the term's on-shell limit is zero
        let ext = Extremal::from_turning_point(&harmonic(), 1.0, 0.0, -4.0, 4.0, tight()).unwrap();
        let ep = EndpointData::new(-1.0, ext.trajectory().y_at(-1.0).unwrap(), 0.0, 1.0).unwrap();
        let s = action_closed_form(&ext, &ep).unwrap().value;
        let oracle = action_numeric_oracle(&ext, &ep).unwrap().value;
        assert!((s - oracle).abs() < 1e-9, "S = {s}, oracle = {oracle}");
    }

    #[test]
    fn feynman_equals_its_turning_point_representation() {
        // on shell, m w [(x_b^2+x_a^2) cos wT - 2 x_b x_a] / (2 sin wT)
        // equals -(m w / 2) [x_max x_b sin w(t_b - t_max)
        //                    + x_max x_a sin w(t_max - t_a)]
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let (m, omega): (f64, f64) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
            let x_max: f64 = rng.gen_range(0.4..1.6);
            let t_max: f64 = rng.gen_range(0.0..3.0);
            let ta = t_max + rng.gen_range(-2.0..1.0) / omega;
            let tb = ta + rng.gen_range(0.3..2.7) / omega;
            if (omega * (tb - ta)).sin().abs() < 0.05 {
                continue;
            }
            let x = |t: f64| x_max * (omega * (t - t_max)).cos();
            let ep = EndpointData::new(ta, x(ta), tb, x(tb)).unwrap();
            let lhs = action_harmonic_feynman(&ep, m, omega).unwrap().value;
            let rhs = -0.5
                * m
                * omega
                * (x_max * x(tb) * (omega * (tb - t_max)).sin()
                    + x_max * x(ta) * (omega * (t_max - ta)).sin());
            assert!((lhs - rhs).abs() < 1e-12, "lhs {lhs} rhs {rhs}");
        }
    }

    #[test]
    fn symmetric_interval_doubles_one_bracket() {
        // t_b - t_max = t_max - t_a makes the two endpoint terms equal
        let ext = Extremal::from_turning_point(&harmonic(), 1.2, 1.0, -3.0, 5.0, tight()).unwrap();
        let y = |t: f64| ext.trajectory().y_at(t).unwrap();
        let (ta, tb) = (0.3, 1.7);
        let full = action_harmonic_new(&ext, &EndpointData::new(ta, y(ta), tb, y(tb)).unwrap())
            .unwrap()
            .value;
        // with the b endpoint on the maximum only the a bracket remains,
        // and by symmetry it carries exactly half of the full value
        let half = action_harmonic_new(&ext, &EndpointData::new(ta, y(ta), 1.0, y(1.0)).unwrap())
            .unwrap()
            .value;
        assert!((full - 2.0 * half).abs() < 1e-10, "full {full} vs 2 x half {half}");
        // equality of the two terms shows up as evenness of S in the mirror
        let mirrored =
            action_harmonic_new(&ext, &EndpointData::new(2.0 - tb, y(2.0 - tb), 2.0 - ta, y(2.0 - ta)).unwrap())
                .unwrap()
                .value;
        assert!((full - mirrored).abs() < 1e-12);
    }

    #[test]
    fn time_mirrored_data_gives_the_same_action() {
        // L is even in velocity, so running the motion backwards through
        // mirrored endpoints reproduces the action value
        let ep = EndpointData::new(0.0, 0.2, 1.0, 0.5).unwrap();
        let ext = Extremal::solve_endpoint_bvp(&quartic(), &ep, 0, tight()).unwrap();
        let s = action_closed_form(&ext, &ep).unwrap().value;
        let ep_m = EndpointData::new(-1.0, 0.5, 0.0, 0.2).unwrap();
        let ext_m = Extremal::solve_endpoint_bvp(&quartic(), &ep_m, 0, tight()).unwrap();
        let s_m = action_closed_form(&ext_m, &ep_m).unwrap().value;
        assert!((s - s_m).abs() < 1e-9, "{s} vs {s_m}");
    }

    #[test]
    fn compensated_sum_beats_naive_on_cancelling_terms() {
        let big = 1e16;
        let terms = [big, 1.0, -big];
        assert_eq!(compensated_sum(&terms), 1.0);
    }
}

//! The invertible change of space and time variables connecting the
//! harmonic oscillator to member n of the hierarchy.
//!
//! Space: `x = sqrt(k2n / n k2) * y |y|^(n-1)` with inverse
//! `y = (n k2 / k2n)^(1/2n) * x |x|^((1-n)/n)`, both odd and defined at the
//! origin by continuity. Time: `dt/dthat = c * |x(that)|^(-(n-1)/n)`, a
//! quadrature whose integrand diverges integrably wherever x vanishes; the
//! map removes the singularity with the local substitution
//! `that = z +/- s^n` around each zero z.
//!
//! Near a zero the integrand cannot be fed interpolated x values: the
//! absolute interpolation error makes `|x|^(-alpha)` meaningless once x is
//! smaller than it, and the singular integral shifts by (zero error)^(1/n).
//! The harmonic motion is locally sinusoidal, so within a window around
//! each polished zero x is evaluated by exact propagation
//! `x = p_z/(m w) sin(w (that - z))`, which both the quadrature and the
//! mapped solution share.

use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::oscillator::OscillatorParams;
use crate::quadrature;

/// Forward coordinate deformation `x(y)`; odd in y, identity for the n = 1
/// member with `k2n = k2`.
pub fn coord_forward(params: &OscillatorParams, y: f64) -> f64 {
    let scale = (params.k2n() / (params.nf() * params.k2())).sqrt();
    scale * y.signum() * y.abs().powi(params.n() as i32)
}

/// Inverse coordinate deformation `y(x)`; exact inverse of `coord_forward`
/// including the removable point x = 0.
pub fn coord_inverse(params: &OscillatorParams, x: f64) -> f64 {
    let n = params.nf();
    let scale = (n * params.k2() / params.k2n()).powf(1.0 / (2.0 * n));
    if params.n() == 1 {
        return scale * x;
    }
    scale * x.signum() * x.abs().powf(1.0 / n)
}

/// A point of the harmonic motion in its own variables: time `t_hat` and
/// space coordinate `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicCoords {
    pub t_hat: f64,
    pub x: f64,
}

/// A zero of x(that) with the data needed to propagate the harmonic motion
/// analytically across it.
#[derive(Debug, Clone, Copy)]
struct ZeroAnchor {
    that: f64,
    /// Momentum of the harmonic trajectory at the zero.
    p: f64,
    /// Half-width of the window in which propagation replaces interpolation.
    window: f64,
}

/// Monotone map t(that) from harmonic time to member-n time, anchored so
/// that a chosen harmonic instant maps to a chosen target instant
/// (by default the harmonic maximum maps to the numerically equal time).
#[derive(Debug, Clone)]
pub struct TimeMap {
    params: OscillatorParams,
    harmonic: Trajectory,
    /// Dynamic frequency of the harmonic input, sqrt(k2n_h / m).
    omega_h: f64,
    coef: f64,
    alpha: f64,
    /// Segment boundaries in harmonic time: span edges plus zeros of x.
    bounds: Vec<f64>,
    /// Which boundaries carry an integrable singularity (x = 0 there).
    singular: Vec<bool>,
    zeros: Vec<ZeroAnchor>,
    /// Ladder of (that, t) pairs used for bracketing; includes boundaries.
    ladder: Vec<(f64, f64)>,
}

/// Build the time reparametrization for `params` over the span of a
/// harmonic trajectory `x(that)`.
///
/// `anchor` is `(that0, t0)` with `t(that0) = t0`; `None` anchors the
/// harmonic maximum nearest the span center to the identical numeric time.
pub fn time_reparam(
    params: &OscillatorParams,
    harmonic: &Trajectory,
    anchor: Option<(f64, f64)>,
) -> Result<TimeMap> {
    if harmonic.params().n() != 1 {
        return Err(Error::WrongHierarchy { expected: 1, actual: harmonic.params().n() });
    }
    let n = params.nf();
    let mass = harmonic.params().mass();
    let omega_h = (harmonic.params().k2n() / mass).sqrt();
    let coef =
        n.powf(-(2.0 * n - 1.0) / (2.0 * n)) * (params.k2() / params.k2n()).powf(1.0 / (2.0 * n));
    let alpha = (n - 1.0) / n;

    let (lo, hi) = harmonic.span();
    let x_amp = (2.0 * harmonic.energy() / harmonic.params().k2n()).sqrt();

    // zeros of x, Newton-polished so the propagated sine vanishes exactly
    // at the stored anchor; span ends sitting on a zero count as singular
    let mut zero_times: Vec<f64> = Vec::new();
    if params.n() >= 2 {
        for z in harmonic.zeros_of_y(lo, hi) {
            zero_times.push(z);
        }
        for end in [lo, hi] {
            let near_end = zero_times.iter().any(|z| (z - end).abs() < 1e-9);
            if !near_end && harmonic.y_at(end)?.abs() < 1e-7 * x_amp {
                zero_times.push(end);
            }
        }
        zero_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }

    let mut zeros = Vec::with_capacity(zero_times.len());
    for (i, &z_raw) in zero_times.iter().enumerate() {
        let mut z = z_raw;
        // one Newton step on the interpolant pushes the residual to roundoff
        for _ in 0..2 {
            let x = harmonic.y_at(z.clamp(lo, hi))?;
            let xdot = harmonic.p_at(z.clamp(lo, hi))? / mass;
            if xdot != 0.0 {
                z -= x / xdot;
            }
        }
        z = z.clamp(lo, hi);
        let p = harmonic.p_at(z)?;
        let gap_prev = if i == 0 { f64::INFINITY } else { z - zero_times[i - 1] };
        let gap_next = if i + 1 == zero_times.len() {
            f64::INFINITY
        } else {
            zero_times[i + 1] - z
        };
        let window = (0.2 / omega_h).min(0.45 * gap_prev).min(0.45 * gap_next);
        zeros.push(ZeroAnchor { that: z, p, window });
    }

    let mut bounds = vec![lo];
    let mut singular = vec![zeros.iter().any(|z| (z.that - lo).abs() < 1e-9)];
    for z in &zeros {
        if z.that > lo + 1e-12 && z.that < hi - 1e-12 {
            bounds.push(z.that);
            singular.push(true);
        }
    }
    bounds.push(hi);
    singular.push(zeros.iter().any(|z| (z.that - hi).abs() < 1e-9));

    let (that0, t0) = match anchor {
        Some(a) => a,
        None => {
            let mid = 0.5 * (lo + hi);
            let t_hat_max = harmonic
                .maxima(lo, hi)
                .into_iter()
                .min_by(|a, b| (a - mid).abs().partial_cmp(&(b - mid).abs()).unwrap())
                .ok_or_else(|| {
                    Error::InvalidInput(
                        "no harmonic maximum in span; pass an explicit anchor".into(),
                    )
                })?;
            (t_hat_max, t_hat_max)
        }
    };
    if that0 < lo || that0 > hi {
        return Err(Error::OutsideTrajectory { t: that0, lo, hi });
    }

    let mut map = TimeMap {
        params: *params,
        harmonic: harmonic.clone(),
        omega_h,
        coef,
        alpha,
        bounds,
        singular,
        zeros,
        ladder: Vec::new(),
    };
    map.build_ladder(that0, t0)?;
    Ok(map)
}

impl TimeMap {
    /// The harmonic coordinate as one consistent function: exact sinusoidal
    /// propagation inside each zero window, dense interpolation elsewhere.
    pub fn x_at(&self, that: f64) -> Result<f64> {
        for z in &self.zeros {
            let u = that - z.that;
            if u.abs() <= z.window {
                return Ok(z.p / (self.harmonic.params().mass() * self.omega_h)
                    * (self.omega_h * u).sin());
            }
        }
        self.harmonic.y_at(that)
    }

    /// Integrand dt/dthat; diverges integrably where x vanishes (n > 1).
    fn g(&self, that: f64) -> f64 {
        let x = self
            .x_at(that)
            .expect("time map evaluation inside harmonic span");
        self.coef * x.abs().powf(-self.alpha)
    }

    /// Integrand near the zero anchored at `z`, with the deviation `u`
    /// carried exactly. Forming `z + u` and subtracting again would round
    /// the deviation away once `u` drops below eps * |z|, so the propagated
    /// sine takes `u` directly.
    fn g_dev(&self, z: &ZeroAnchor, u: f64) -> f64 {
        if u.abs() <= z.window {
            let x = z.p / (self.harmonic.params().mass() * self.omega_h)
                * (self.omega_h * u).sin();
            self.coef * x.abs().powf(-self.alpha)
        } else {
            self.g(z.that + u)
        }
    }

    fn anchor_at(&self, that: f64) -> Option<&ZeroAnchor> {
        self.zeros.iter().find(|z| (z.that - that).abs() < 1e-9)
    }

    /// Span of the map in harmonic time.
    pub fn span_that(&self) -> (f64, f64) {
        (self.bounds[0], *self.bounds.last().unwrap())
    }

    /// Span of the map in member-n time.
    pub fn span_t(&self) -> (f64, f64) {
        (self.ladder[0].1, self.ladder[self.ladder.len() - 1].1)
    }

    fn build_ladder(&mut self, that0: f64, t0: f64) -> Result<()> {
        // boundaries plus, in each segment half, points whose distance to
        // the end follows s^n (clusters where the integrand is steep)
        const PER_HALF: usize = 24;
        let mut grid = Vec::new();
        let nf = self.params.nf();
        for i in 0..self.bounds.len() - 1 {
            let (a, b) = (self.bounds[i], self.bounds[i + 1]);
            let mid = 0.5 * (a + b);
            grid.push(a);
            for j in 1..PER_HALF {
                let frac = (j as f64) / (PER_HALF as f64);
                let d = (mid - a) * frac.powf(nf);
                grid.push(a + d);
                let d = (b - mid) * frac.powf(nf);
                grid.push(b - d);
            }
            grid.push(mid);
        }
        grid.push(*self.bounds.last().unwrap());
        grid.sort_by(|p, q| p.partial_cmp(q).unwrap());
        grid.dedup_by(|p, q| (*p - *q).abs() < 1e-15);

        let mut ladder = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        ladder.push((grid[0], 0.0));
        for w in 0..grid.len() - 1 {
            acc += self.integrate_piece(grid[w], grid[w + 1])?;
            ladder.push((grid[w + 1], acc));
        }

        // shift so that t(that0) = t0
        let t_at_anchor = {
            let i = ladder.partition_point(|&(th, _)| th <= that0).saturating_sub(1);
            ladder[i].1 + self.integrate_piece_oriented(ladder[i].0, that0)?
        };
        for pair in &mut ladder {
            pair.1 += t0 - t_at_anchor;
        }
        self.ladder = ladder;
        Ok(())
    }

    /// Integral of g over [u, v] inside one inter-zero segment, u <= v.
    /// Singular ends go through the s^n substitution; window edges of the
    /// zero anchors become explicit breakpoints so every quadrature panel
    /// sees a smooth integrand.
    fn integrate_piece(&self, u: f64, v: f64) -> Result<f64> {
        if u == v {
            return Ok(0.0);
        }
        let seg = self.segment_of(0.5 * (u + v));
        let (a, b) = (self.bounds[seg], self.bounds[seg + 1]);
        let mid = 0.5 * (a + b);
        let nf = self.params.nf();
        let tol = 2e-14 * (1.0 + (v - u).abs());
        let singular_left = self.singular[seg] && self.params.n() >= 2;
        let singular_right = self.singular[seg + 1] && self.params.n() >= 2;
        let mut total = 0.0;

        // breakpoints inside [lo, hi] of a smooth stretch
        let smooth = |f_lo: f64, f_hi: f64, tol: f64| -> Result<f64> {
            if f_hi <= f_lo {
                return Ok(0.0);
            }
            let mut pts = vec![f_lo];
            for z in &self.zeros {
                for edge in [z.that - z.window, z.that + z.window] {
                    if edge > f_lo && edge < f_hi {
                        pts.push(edge);
                    }
                }
            }
            pts.push(f_hi);
            pts.sort_by(|p, q| p.partial_cmp(q).unwrap());
            quadrature::adaptive_with_splits(&|th| self.g(th), &pts, tol)
        };

        // left half [u, min(v, mid)]: singularity sits at a
        if u < mid {
            let hi = v.min(mid);
            match (singular_left, self.anchor_at(a)) {
                (true, Some(z)) => {
                    let s_lo = (u - a).max(0.0).powf(1.0 / nf);
                    let s_hi = (hi - a).powf(1.0 / nf);
                    let window_s = z.window.powf(1.0 / nf);
                    let f = |s: f64| self.g_dev(z, s.powf(nf)) * nf * s.powf(nf - 1.0);
                    let cut = window_s.clamp(s_lo, s_hi);
                    total += quadrature::adaptive(&f, s_lo, cut, tol)?;
                    total += smooth(a + cut.powf(nf), hi, tol)?;
                }
                _ => total += smooth(u, hi, tol)?,
            }
        }
        // right half [max(u, mid), v]: singularity sits at b
        if v > mid {
            let lo = u.max(mid);
            match (singular_right, self.anchor_at(b)) {
                (true, Some(z)) => {
                    let s_hi = (b - lo).powf(1.0 / nf);
                    let s_lo = (b - v).max(0.0).powf(1.0 / nf);
                    let window_s = z.window.powf(1.0 / nf);
                    let f = |s: f64| self.g_dev(z, -s.powf(nf)) * nf * s.powf(nf - 1.0);
                    let cut = window_s.clamp(s_lo, s_hi);
                    total += quadrature::adaptive(&f, s_lo, cut, tol)?;
                    total += smooth(lo, b - cut.powf(nf), tol)?;
                }
                _ => total += smooth(lo, v, tol)?,
            }
        }
        Ok(total)
    }

    fn integrate_piece_oriented(&self, u: f64, v: f64) -> Result<f64> {
        if u <= v {
            self.integrate_piece(u, v)
        } else {
            Ok(-self.integrate_piece(v, u)?)
        }
    }

    fn segment_of(&self, that: f64) -> usize {
        self.bounds
            .partition_point(|&b| b <= that)
            .saturating_sub(1)
            .min(self.bounds.len() - 2)
    }

    /// Map a harmonic time to member-n time.
    pub fn t_of(&self, that: f64) -> Result<f64> {
        let (lo, hi) = self.span_that();
        if that < lo || that > hi {
            return Err(Error::OutsideTrajectory { t: that, lo, hi });
        }
        let i = self
            .ladder
            .partition_point(|&(th, _)| th <= that)
            .saturating_sub(1);
        let (th_i, t_i) = self.ladder[i];
        let (th_near, t_near) = if i + 1 < self.ladder.len()
            && (self.ladder[i + 1].0 - that).abs() < (that - th_i).abs()
        {
            self.ladder[i + 1]
        } else {
            (th_i, t_i)
        };
        Ok(t_near + self.integrate_piece_oriented(th_near, that)?)
    }

    /// Analytic dt/dthat, infinite at zeros of x for n > 1.
    pub fn dt_dthat(&self, that: f64) -> f64 {
        self.g(that)
    }

    /// Analytic dthat/dt expressed in the target coordinate:
    /// `sqrt(n) (k2n/k2)^(1/2) |y|^(n-1)`, which equals `gamma(y)`.
    pub fn dthat_dt(&self, y: f64) -> f64 {
        crate::extremals::gamma(&self.params, y)
    }

    /// Invert the map: the harmonic time whose image is `t`.
    pub fn t_hat_of(&self, t: f64) -> Result<f64> {
        let (t_lo, t_hi) = self.span_t();
        if t < t_lo || t > t_hi {
            return Err(Error::OutsideTrajectory { t, lo: t_lo, hi: t_hi });
        }
        let i = self
            .ladder
            .partition_point(|&(_, tt)| tt <= t)
            .saturating_sub(1)
            .min(self.ladder.len() - 2);
        let (mut lo, t_at_lo) = self.ladder[i];
        let (mut hi, _) = self.ladder[i + 1];
        let mut acc_lo = t_at_lo;
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let t_mid = acc_lo + self.integrate_piece_oriented(lo, mid)?;
            if t_mid <= t {
                lo = mid;
                acc_lo = t_mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// A harmonic extremal pushed through the full map: evaluate y(t) of the
/// member-n motion by inverting the time map and deforming the coordinate.
#[derive(Debug, Clone)]
pub struct MappedSolution {
    params: OscillatorParams,
    map: TimeMap,
}

impl MappedSolution {
    pub fn new(params: &OscillatorParams, map: TimeMap) -> Self {
        Self { params: *params, map }
    }

    pub fn map(&self) -> &TimeMap {
        &self.map
    }

    /// The harmonic point whose image under the map is the instant `t`.
    pub fn preimage(&self, t: f64) -> Result<HarmonicCoords> {
        let t_hat = self.map.t_hat_of(t)?;
        let x = self.map.x_at(t_hat)?;
        Ok(HarmonicCoords { t_hat, x })
    }

    pub fn y_at(&self, t: f64) -> Result<f64> {
        let pre = self.preimage(t)?;
        Ok(coord_inverse(&self.params, pre.x))
    }

    /// Residual of Newton's equation `m y'' + k2n y^(2n-1)` at `t`, the
    /// second derivative taken by a five-point stencil of width `h`.
    pub fn newton_residual(&self, t: f64, h: f64) -> Result<f64> {
        let y_m2 = self.y_at(t - 2.0 * h)?;
        let y_m1 = self.y_at(t - h)?;
        let y_0 = self.y_at(t)?;
        let y_p1 = self.y_at(t + h)?;
        let y_p2 = self.y_at(t + 2.0 * h)?;
        let ydd = (-y_m2 + 16.0 * y_m1 - 30.0 * y_0 + 16.0 * y_p1 - y_p2) / (12.0 * h * h);
        Ok(self.params.mass() * ydd - self.params.force(y_0))
    }
}

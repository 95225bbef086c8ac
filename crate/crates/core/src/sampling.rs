//! Seeded sampling of non-degenerate endpoint configurations, shared by
//! the verification suites and the CLI sweeps.

use crate::error::{Error, Result};
use crate::extremals::{EndpointData, Extremal};
use crate::oscillator::OscillatorParams;
use crate::Tolerances;
use rand::Rng;

/// Controls for the rejection sampler.
#[derive(Debug, Clone, Copy)]
pub struct SampleOptions {
    pub y_max_range: (f64, f64),
    /// Endpoint offset of t_a from t_max, in periods. Negative values put
    /// the maximum after t_a; the range deliberately straddles both cases.
    pub offset_range: (f64, f64),
    /// Interval length in periods.
    pub span_range: (f64, f64),
    /// Lower bound on |sin| of all three phase combinations.
    pub min_sin: f64,
    pub tol: Tolerances,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            y_max_range: (0.6, 1.4),
            offset_range: (-0.70, 0.20),
            span_range: (0.15, 0.80),
            min_sin: 0.12,
            tol: Tolerances { ivp: 1e-12, quad: 1e-12 },
        }
    }
}

/// One sampled configuration: the generating extremal, endpoint data read
/// off its trajectory, and the interior turning count of the interval.
#[derive(Debug, Clone)]
pub struct SampledConfig {
    pub ext: Extremal,
    pub ep: EndpointData,
    pub branch: u32,
}

/// Draw an extremal and an endpoint pair on it such that none of the three
/// phase sines (a-side, b-side, full interval) is small. The endpoint data
/// is exactly on shell, so re-solving the BVP at `(ep, branch)` recovers
/// the same extremal.
pub fn sample_config<R: Rng>(
    params: &OscillatorParams,
    rng: &mut R,
    opts: &SampleOptions,
) -> Result<SampledConfig> {
    for _ in 0..200 {
        let y_max = rng.gen_range(opts.y_max_range.0..opts.y_max_range.1);
        let energy = params.energy_for_amplitude(y_max);
        let t_period = crate::oscillator::period(params, energy)?;
        let t_max = rng.gen_range(0.0..t_period);
        let t_a = t_max + rng.gen_range(opts.offset_range.0..opts.offset_range.1) * t_period;
        let t_b = t_a + rng.gen_range(opts.span_range.0..opts.span_range.1) * t_period;

        let ext = Extremal::from_turning_point(
            params,
            y_max,
            t_max,
            t_a - 0.1 * t_period,
            t_b + 0.1 * t_period,
            opts.tol,
        )?;
        let phi_b = ext.phase(t_max, t_b)?.value;
        let phi_a = ext.phase(t_a, t_max)?.value;
        let phi_ab = phi_a + phi_b;
        if phi_b.sin().abs() < opts.min_sin
            || phi_a.sin().abs() < opts.min_sin
            || phi_ab.sin().abs() < opts.min_sin
        {
            continue;
        }
        let ep = EndpointData::new(
            t_a,
            ext.trajectory().y_at(t_a)?,
            t_b,
            ext.trajectory().y_at(t_b)?,
        )?;
        let branch = ext.interior_turning_points(t_a, t_b);

        // the boundary value problem may have several roots on this branch;
        // a usable configuration is one where the solver's selection rule
        // recovers the generating extremal, otherwise the draw is discarded
        match Extremal::solve_endpoint_bvp(params, &ep, branch, opts.tol) {
            Ok(solved)
                if (solved.energy() - ext.energy()).abs() <= 1e-6 * (1.0 + ext.energy()) =>
            {
                return Ok(SampledConfig { ext, ep, branch });
            }
            _ => continue,
        }
    }
    Err(Error::InvalidInput(
        "rejection sampling failed to find a non-degenerate configuration".into(),
    ))
}

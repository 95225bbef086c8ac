//! Implementations of the six subcommands.

use crate::config::{run_indexed, OutputFormat, Resolved};
use crate::output::{ensure_finite, fmt_f64, write_csv_row, CliError, Sink};
use crate::CommonOpts;
use hj_action::action::{
    action_closed_form, action_harmonic_feynman, action_harmonic_new, action_numeric_oracle,
    action_quartic,
};
use hj_action::extremals::{EndpointData, Extremal};
use hj_action::hj::{hj_residuals, HJReport};
use hj_action::integrate::integrate_span;
use hj_action::linearize::{coord_forward, coord_inverse, time_reparam, MappedSolution};
use hj_action::oscillator::{period, OscillatorParams, State};
use hj_action::sampling::{sample_config, SampleOptions, SampledConfig};
use hj_action::Tolerances;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::io::Write;

const DEFAULT_NS: [u32; 3] = [1, 2, 3];

/// Deterministic per-task generator: one seed, one stream per (member, index).
fn task_rng(seed: u64, n: u32, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(n) << 32) | index as u64);
    rng
}

fn params_with_n(base: &OscillatorParams, n: u32) -> Result<OscillatorParams, CliError> {
    Ok(OscillatorParams::new(n, base.mass(), base.k2n(), base.omega())?)
}

pub fn trajectory(
    common: &CommonOpts,
    p0: Option<f64>,
    rows: Option<usize>,
) -> Result<i32, CliError> {
    let cfg = Resolved::from_opts(common)?;
    let params = cfg.params;
    let t_a = cfg.ta.unwrap_or(0.0);
    let y_a = cfg.ya.unwrap_or(1.0);
    let p_0 = p0.unwrap_or(cfg.p0);
    let initial = State { t: t_a, y: y_a, p: p_0 };
    let energy = params.hamiltonian(y_a, p_0);

    // default span: one period (or one auxiliary period for the rest state)
    let t_b = match cfg.tb {
        Some(tb) => tb,
        None => {
            let span = if energy > 0.0 {
                period(&params, energy)?
            } else {
                2.0 * std::f64::consts::PI / params.omega()
            };
            t_a + span
        }
    };
    let n_rows = if t_b == t_a { 1 } else { rows.or(cfg.rows).unwrap_or(1001).max(2) };

    let (lo, hi) = (t_a.min(t_b), t_a.max(t_b));
    // the phase column needs a reference maximum; a rest trajectory has
    // no turning point and its phase is identically zero
    let ext = if energy > 0.0 {
        Some(Extremal::from_initial(&params, initial, lo, hi, cfg.tol)?)
    } else {
        None
    };

    let mut sink = Sink::open(&cfg.out)?;
    let format = cfg.format_or(OutputFormat::Csv);
    if format == OutputFormat::Csv {
        writeln!(sink, "t,y,p,E,phase")?;
    }
    for i in 0..n_rows {
        let t = if n_rows == 1 {
            t_a
        } else {
            t_a + (t_b - t_a) * (i as f64) / ((n_rows - 1) as f64)
        };
        let (y, p, phase) = match &ext {
            Some(ext) => {
                let s = ext.trajectory().state_at(t)?;
                (s.y, s.p, ext.phase(ext.t_max(), t)?.value)
            }
            None => (y_a, p_0, 0.0),
        };
        let e = params.hamiltonian(y, p);
        let row = [t, y, p, e, phase];
        ensure_finite("trajectory row", &row)?;
        match format {
            OutputFormat::Csv => write_csv_row(&mut sink, &row)?,
            OutputFormat::Json => writeln!(
                sink,
                "{{\"t\":{},\"y\":{},\"p\":{},\"E\":{},\"phase\":{}}}",
                fmt_f64(t),
                fmt_f64(y),
                fmt_f64(p),
                fmt_f64(e),
                fmt_f64(phase)
            )?,
        }
    }
    sink.finish()?;
    Ok(0)
}

#[derive(Serialize)]
struct ExtremalSummary {
    n: u32,
    mass: f64,
    k2n: f64,
    omega: f64,
    t_a: f64,
    y_a: f64,
    t_b: f64,
    y_b: f64,
    branch: u32,
    p_a: f64,
    energy: f64,
    y_max: f64,
    t_max: f64,
    period: f64,
    endpoint_residual: f64,
    max_integral_eq_residual: f64,
}

fn summarize(params: &OscillatorParams, ep: &EndpointData, branch: u32, ext: &Extremal)
    -> Result<ExtremalSummary, CliError>
{
    let mut worst_ie: f64 = 0.0;
    for i in 0..50 {
        let t = ep.t_a + (ep.t_b - ep.t_a) * (i as f64) / 49.0;
        worst_ie = worst_ie.max(ext.residual_integral_equation(t)?.abs());
    }
    Ok(ExtremalSummary {
        n: params.n(),
        mass: params.mass(),
        k2n: params.k2n(),
        omega: params.omega(),
        t_a: ep.t_a,
        y_a: ep.y_a,
        t_b: ep.t_b,
        y_b: ep.y_b,
        branch,
        p_a: ext.trajectory().p_at(ep.t_a)?,
        energy: ext.energy(),
        y_max: ext.y_max(),
        t_max: ext.t_max(),
        period: ext.period(),
        endpoint_residual: (ext.trajectory().y_at(ep.t_b)? - ep.y_b).abs(),
        max_integral_eq_residual: worst_ie,
    })
}

fn emit_json<T: Serialize>(sink: &mut Sink, value: &T) -> Result<(), CliError> {
    let line = serde_json::to_string(value)
        .map_err(|e| CliError::Numeric(format!("serialization failed: {e}")))?;
    writeln!(sink, "{line}")?;
    Ok(())
}

pub fn extremal(common: &CommonOpts) -> Result<i32, CliError> {
    let cfg = Resolved::from_opts(common)?;
    let ep = cfg.endpoints()?;
    let ext = Extremal::solve_endpoint_bvp(&cfg.params, &ep, cfg.branch, cfg.tol)?;
    let summary = summarize(&cfg.params, &ep, cfg.branch, &ext)?;
    ensure_finite(
        "extremal summary",
        &[summary.p_a, summary.energy, summary.y_max, summary.t_max],
    )?;

    let mut sink = Sink::open(&cfg.out)?;
    match cfg.format_or(OutputFormat::Json) {
        OutputFormat::Json => emit_json(&mut sink, &summary)?,
        OutputFormat::Csv => {
            writeln!(
                sink,
                "n,mass,k2n,omega,t_a,y_a,t_b,y_b,branch,p_a,energy,y_max,t_max,period,endpoint_residual,max_integral_eq_residual"
            )?;
            writeln!(
                sink,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                summary.n,
                fmt_f64(summary.mass),
                fmt_f64(summary.k2n),
                fmt_f64(summary.omega),
                fmt_f64(summary.t_a),
                fmt_f64(summary.y_a),
                fmt_f64(summary.t_b),
                fmt_f64(summary.y_b),
                summary.branch,
                fmt_f64(summary.p_a),
                fmt_f64(summary.energy),
                fmt_f64(summary.y_max),
                fmt_f64(summary.t_max),
                fmt_f64(summary.period),
                fmt_f64(summary.endpoint_residual),
                fmt_f64(summary.max_integral_eq_residual),
            )?;
        }
    }
    sink.finish()?;
    Ok(0)
}

#[derive(Serialize)]
struct ActionReport {
    n: u32,
    t_a: f64,
    y_a: f64,
    t_b: f64,
    y_b: f64,
    branch: u32,
    energy: f64,
    y_max: f64,
    t_max: f64,
    s_closed: f64,
    s_oracle: f64,
    rel_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    s_quartic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    s_harmonic_new: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    s_harmonic_feynman: Option<f64>,
    p_a: f64,
    p_b: f64,
}

pub fn action(common: &CommonOpts) -> Result<i32, CliError> {
    let cfg = Resolved::from_opts(common)?;
    let ep = cfg.endpoints()?;
    let params = cfg.params;
    let ext = Extremal::solve_endpoint_bvp(&params, &ep, cfg.branch, cfg.tol)?;

    let s_closed = action_closed_form(&ext, &ep)?.value;
    let s_oracle = action_numeric_oracle(&ext, &ep)?.value;
    let rel_gap = (s_closed - s_oracle).abs() / (1.0 + s_oracle.abs());
    let report = ActionReport {
        n: params.n(),
        t_a: ep.t_a,
        y_a: ep.y_a,
        t_b: ep.t_b,
        y_b: ep.y_b,
        branch: cfg.branch,
        energy: ext.energy(),
        y_max: ext.y_max(),
        t_max: ext.t_max(),
        s_closed,
        s_oracle,
        rel_gap,
        s_quartic: (params.n() == 2)
            .then(|| action_quartic(&ext, &ep).map(|v| v.value))
            .transpose()?,
        s_harmonic_new: (params.n() == 1)
            .then(|| action_harmonic_new(&ext, &ep).map(|v| v.value))
            .transpose()?,
        s_harmonic_feynman: (params.n() == 1 && params.k2n() == params.k2())
            .then(|| action_harmonic_feynman(&ep, params.mass(), params.omega()).map(|v| v.value))
            .transpose()?,
        p_a: ext.momentum_endpoint_a(ep.t_a)?,
        p_b: ext.momentum_endpoint_b(ep.t_b)?,
    };
    ensure_finite("action report", &[report.s_closed, report.s_oracle, report.p_a, report.p_b])?;

    let mut sink = Sink::open(&cfg.out)?;
    match cfg.format_or(OutputFormat::Json) {
        OutputFormat::Json => emit_json(&mut sink, &report)?,
        OutputFormat::Csv => {
            writeln!(sink, "n,t_a,y_a,t_b,y_b,branch,energy,y_max,t_max,s_closed,s_oracle,rel_gap,p_a,p_b")?;
            writeln!(
                sink,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                report.n,
                fmt_f64(report.t_a),
                fmt_f64(report.y_a),
                fmt_f64(report.t_b),
                fmt_f64(report.y_b),
                report.branch,
                fmt_f64(report.energy),
                fmt_f64(report.y_max),
                fmt_f64(report.t_max),
                fmt_f64(report.s_closed),
                fmt_f64(report.s_oracle),
                fmt_f64(report.rel_gap),
                fmt_f64(report.p_a),
                fmt_f64(report.p_b),
            )?;
        }
    }
    sink.finish()?;
    Ok(0)
}

#[derive(Serialize)]
struct HjLine {
    index: usize,
    #[serde(flatten)]
    report: HJReport,
}

pub fn verify_hj(
    common: &CommonOpts,
    ns: Option<Vec<u32>>,
    count: Option<usize>,
    threshold: Option<f64>,
) -> Result<i32, CliError> {
    let cfg = Resolved::from_opts(common)?;
    let threshold = threshold.or(cfg.threshold).unwrap_or(1e-5);
    let mut sink = Sink::open(&cfg.out)?;
    let format = cfg.format_or(OutputFormat::Json);

    let explicit = cfg.ta.is_some() || cfg.ya.is_some() || cfg.tb.is_some() || cfg.yb.is_some();
    let reports: Vec<Result<HJReport, hj_action::Error>> = if explicit {
        let ep = cfg.endpoints()?;
        vec![hj_residuals(&cfg.params, &ep, cfg.fd_step, cfg.branch)]
    } else {
        let ns = ns.or_else(|| cfg.ns.clone()).unwrap_or_else(|| DEFAULT_NS.to_vec());
        let count = count.or(cfg.count).unwrap_or(25);
        let tasks: Vec<(u32, usize)> = ns
            .iter()
            .flat_map(|&n| (0..count).map(move |i| (n, i)))
            .collect();
        let base = cfg.params;
        let fd_step = cfg.fd_step;
        let seed = cfg.seed;
        run_indexed(tasks.len(), |k| {
            let (n, i) = tasks[k];
            let params = OscillatorParams::new(n, base.mass(), base.k2n(), base.omega())?;
            let mut rng = task_rng(seed, n, i);
            let sample = sample_config(&params, &mut rng, &SampleOptions::default())?;
            hj_residuals(&params, &sample.ep, fd_step, sample.branch)
        })
    };

    if format == OutputFormat::Csv {
        writeln!(
            sink,
            "index,n,t_a,y_a,t_b,y_b,residual_py_b,residual_e_b,residual_py_a,residual_e_a,fd_step,oracle_gap"
        )?;
    }
    let mut worst: f64 = 0.0;
    for (index, rep) in reports.into_iter().enumerate() {
        let rep = rep?; // any solver failure ends the run with exit 3
        let vals = [
            rep.residual_py_b,
            rep.residual_e_b,
            rep.residual_py_a,
            rep.residual_e_a,
            rep.oracle_gap,
        ];
        ensure_finite("hj report", &vals)?;
        worst = worst.max(rep.max_residual());
        match format {
            OutputFormat::Json => emit_json(&mut sink, &HjLine { index, report: rep })?,
            OutputFormat::Csv => writeln!(
                sink,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                index,
                rep.n,
                fmt_f64(rep.ep.t_a),
                fmt_f64(rep.ep.y_a),
                fmt_f64(rep.ep.t_b),
                fmt_f64(rep.ep.y_b),
                fmt_f64(rep.residual_py_b),
                fmt_f64(rep.residual_e_b),
                fmt_f64(rep.residual_py_a),
                fmt_f64(rep.residual_e_a),
                fmt_f64(rep.fd_step),
                fmt_f64(rep.oracle_gap),
            )?,
        }
    }
    sink.finish()?;
    if worst > threshold {
        return Err(CliError::Threshold(format!(
            "max Hamilton-Jacobi residual {worst:.3e} exceeds {threshold:.3e}"
        )));
    }
    Ok(0)
}

#[derive(Serialize)]
struct MapLine {
    n: u32,
    roundtrip_max: f64,
    chainrule_max: f64,
    transport_max: f64,
}

pub fn verify_map(common: &CommonOpts, ns: Option<Vec<u32>>) -> Result<i32, CliError> {
    let cfg = Resolved::from_opts(common)?;
    let ns = ns.or_else(|| cfg.ns.clone()).unwrap_or_else(|| DEFAULT_NS.to_vec());
    let mut sink = Sink::open(&cfg.out)?;
    let format = cfg.format_or(OutputFormat::Json);
    if format == OutputFormat::Csv {
        writeln!(sink, "n,roundtrip_max,chainrule_max,transport_max")?;
    }

    let (rt_threshold, cr_threshold, tp_threshold) = (1e-12, 1e-10, 1e-6);
    let mut failed = false;
    for &n in &ns {
        let params = params_with_n(&cfg.params, n)?;
        let harmonic = OscillatorParams::harmonic(params.mass(), params.omega())?;

        let mut roundtrip_max: f64 = 0.0;
        for i in 0..=400 {
            let y = -3.0 + 6.0 * (i as f64) / 400.0;
            let rt = coord_inverse(&params, coord_forward(&params, y));
            roundtrip_max = roundtrip_max.max((rt - y).abs());
        }

        let span = 2.0 * std::f64::consts::PI / harmonic.omega();
        let traj = integrate_span(
            &harmonic,
            State { t: 0.0, y: 1.0, p: 0.0 },
            -0.05 * span,
            span,
            cfg.tol.ivp.min(1e-12),
        )?;
        let map = time_reparam(&params, &traj, None)?;

        let mut chainrule_max: f64 = 0.0;
        for i in 0..=40 {
            let that = 0.9 * span * (i as f64) / 40.0;
            let x = map.x_at(that)?;
            if x.abs() < 0.1 {
                continue; // the product is 0 * infinity at zeros of x
            }
            let y = coord_inverse(&params, x);
            chainrule_max = chainrule_max.max((map.dt_dthat(that) * map.dthat_dt(y) - 1.0).abs());
        }

        let sol = MappedSolution::new(&params, map);
        let (t_lo, t_hi) = sol.map().span_t();
        let h = 0.0075;
        let mut transport_max: f64 = 0.0;
        for i in 0..=60 {
            let t = (t_lo + 3.0 * h) + (t_hi - t_lo - 6.0 * h) * (i as f64) / 60.0;
            transport_max = transport_max.max(sol.newton_residual(t, h)?.abs());
        }

        let line = MapLine { n, roundtrip_max, chainrule_max, transport_max };
        ensure_finite("map report", &[roundtrip_max, chainrule_max, transport_max])?;
        match format {
            OutputFormat::Json => emit_json(&mut sink, &line)?,
            OutputFormat::Csv => writeln!(
                sink,
                "{},{},{},{}",
                n,
                fmt_f64(roundtrip_max),
                fmt_f64(chainrule_max),
                fmt_f64(transport_max)
            )?,
        }
        if roundtrip_max > rt_threshold
            || chainrule_max > cr_threshold
            || transport_max > tp_threshold
        {
            failed = true;
        }
    }
    sink.finish()?;
    if failed {
        return Err(CliError::Threshold(
            "linearization residuals exceed thresholds (round trip 1e-12, chain rule 1e-10, transport 1e-6)".into(),
        ));
    }
    Ok(0)
}

#[derive(Serialize)]
struct SweepLine {
    index: usize,
    n: u32,
    t_a: f64,
    y_a: f64,
    t_b: f64,
    y_b: f64,
    branch: u32,
    energy: f64,
    y_max: f64,
    t_max: f64,
    s_closed: f64,
    s_oracle: f64,
    rel_gap: f64,
    p_b_formula: f64,
    p_b_trajectory: f64,
    p_a_formula: f64,
    p_a_trajectory: f64,
}

pub fn sweep(
    common: &CommonOpts,
    ns: Option<Vec<u32>>,
    count: Option<usize>,
    threshold: Option<f64>,
) -> Result<i32, CliError> {
    let cfg = Resolved::from_opts(common)?;
    let ns = ns.or_else(|| cfg.ns.clone()).unwrap_or_else(|| DEFAULT_NS.to_vec());
    let count = count.or(cfg.count).unwrap_or(100);
    let threshold = threshold.or(cfg.threshold).unwrap_or(1e-6);

    let tasks: Vec<(u32, usize)> = ns
        .iter()
        .flat_map(|&n| (0..count).map(move |i| (n, i)))
        .collect();
    let base = cfg.params;
    let seed = cfg.seed;
    let tol = Tolerances { ivp: cfg.tol.ivp.min(1e-12), quad: cfg.tol.quad.min(1e-12) };
    let results: Vec<Result<SweepLine, hj_action::Error>> = run_indexed(tasks.len(), |k| {
        let (n, i) = tasks[k];
        let params = OscillatorParams::new(n, base.mass(), base.k2n(), base.omega())?;
        let mut rng = task_rng(seed, n, i);
        let opts = SampleOptions { tol, ..SampleOptions::default() };
        let SampledConfig { ext, ep, branch } = sample_config(&params, &mut rng, &opts)?;
        let s_closed = action_closed_form(&ext, &ep)?.value;
        let s_oracle = action_numeric_oracle(&ext, &ep)?.value;
        Ok(SweepLine {
            index: k,
            n,
            t_a: ep.t_a,
            y_a: ep.y_a,
            t_b: ep.t_b,
            y_b: ep.y_b,
            branch,
            energy: ext.energy(),
            y_max: ext.y_max(),
            t_max: ext.t_max(),
            s_closed,
            s_oracle,
            rel_gap: (s_closed - s_oracle).abs() / (1.0 + s_oracle.abs()),
            p_b_formula: ext.momentum_endpoint_b(ep.t_b)?,
            p_b_trajectory: ext.trajectory().p_at(ep.t_b)?,
            p_a_formula: ext.momentum_endpoint_a(ep.t_a)?,
            p_a_trajectory: ext.trajectory().p_at(ep.t_a)?,
        })
    });

    let mut sink = Sink::open(&cfg.out)?;
    let format = cfg.format_or(OutputFormat::Json);
    if format == OutputFormat::Csv {
        writeln!(
            sink,
            "index,n,t_a,y_a,t_b,y_b,branch,energy,y_max,t_max,s_closed,s_oracle,rel_gap,p_b_formula,p_b_trajectory,p_a_formula,p_a_trajectory"
        )?;
    }
    let mut worst: f64 = 0.0;
    for line in results {
        let line = line?;
        ensure_finite("sweep row", &[line.s_closed, line.s_oracle, line.rel_gap])?;
        worst = worst.max(line.rel_gap);
        match format {
            OutputFormat::Json => emit_json(&mut sink, &line)?,
            OutputFormat::Csv => writeln!(
                sink,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                line.index,
                line.n,
                fmt_f64(line.t_a),
                fmt_f64(line.y_a),
                fmt_f64(line.t_b),
                fmt_f64(line.y_b),
                line.branch,
                fmt_f64(line.energy),
                fmt_f64(line.y_max),
                fmt_f64(line.t_max),
                fmt_f64(line.s_closed),
                fmt_f64(line.s_oracle),
                fmt_f64(line.rel_gap),
                fmt_f64(line.p_b_formula),
                fmt_f64(line.p_b_trajectory),
                fmt_f64(line.p_a_formula),
                fmt_f64(line.p_a_trajectory),
            )?,
        }
    }
    sink.finish()?;
    if worst > threshold {
        return Err(CliError::Threshold(format!(
            "max closed-form vs oracle gap {worst:.3e} exceeds {threshold:.3e}"
        )));
    }
    Ok(0)
}

//! Option resolution: command-line flags override config-file values, which
//! override built-in defaults.

use crate::output::CliError;
use crate::CommonOpts;
use hj_action::{OscillatorParams, Tolerances};
use serde::Deserialize;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Config-file schema; every field optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    n: Option<u32>,
    mass: Option<f64>,
    k2n: Option<f64>,
    omega: Option<f64>,
    ta: Option<f64>,
    ya: Option<f64>,
    tb: Option<f64>,
    yb: Option<f64>,
    branch: Option<u32>,
    tol_ivp: Option<f64>,
    tol_quad: Option<f64>,
    fd_step: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
    p0: Option<f64>,
    rows: Option<usize>,
    ns: Option<Vec<u32>>,
    count: Option<usize>,
    threshold: Option<f64>,
}

/// Fully resolved run configuration.
pub struct Resolved {
    pub params: OscillatorParams,
    pub ta: Option<f64>,
    pub ya: Option<f64>,
    pub tb: Option<f64>,
    pub yb: Option<f64>,
    pub branch: u32,
    pub tol: Tolerances,
    pub fd_step: Option<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub p0: f64,
    pub rows: Option<usize>,
    pub ns: Option<Vec<u32>>,
    pub count: Option<usize>,
    pub threshold: Option<f64>,
}

impl Resolved {
    pub fn from_opts(opts: &CommonOpts) -> Result<Self, CliError> {
        let file: FileConfig = match &opts.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read config {path:?}: {e}")))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("bad config {path:?}: {e}")))?
            }
            None => FileConfig::default(),
        };

        let n = opts.n.or(file.n).unwrap_or(1);
        let mass = opts.mass.or(file.mass).unwrap_or(1.0);
        let omega = opts.omega.or(file.omega).unwrap_or(1.0);
        // unless stated, the spring constant matches the auxiliary one
        let k2n = opts.k2n.or(file.k2n).unwrap_or(mass * omega * omega);
        let params = OscillatorParams::new(n, mass, k2n, omega)
            .map_err(|e| CliError::Usage(e.to_string()))?;

        let tol = Tolerances {
            ivp: opts.tol_ivp.or(file.tol_ivp).unwrap_or(hj_action::DEFAULT_TOL),
            quad: opts.tol_quad.or(file.tol_quad).unwrap_or(hj_action::DEFAULT_TOL),
        };
        if !(tol.ivp > 0.0) || !(tol.quad > 0.0) {
            return Err(CliError::Usage("tolerances must be positive".into()));
        }

        Ok(Self {
            params,
            ta: opts.ta.or(file.ta),
            ya: opts.ya.or(file.ya),
            tb: opts.tb.or(file.tb),
            yb: opts.yb.or(file.yb),
            branch: opts.branch.or(file.branch).unwrap_or(0),
            tol,
            fd_step: opts.fd_step.or(file.fd_step),
            seed: opts.seed.or(file.seed).unwrap_or(0),
            out: opts.out.clone().or(file.out),
            format: opts.format.or(file.format),
            p0: file.p0.unwrap_or(0.0),
            rows: file.rows,
            ns: file.ns,
            count: file.count,
            threshold: file.threshold,
        })
    }

    /// Endpoint data, required by the solve-style commands.
    pub fn endpoints(&self) -> Result<hj_action::EndpointData, CliError> {
        match (self.ta, self.ya, self.tb, self.yb) {
            (Some(ta), Some(ya), Some(tb), Some(yb)) => {
                hj_action::EndpointData::new(ta, ya, tb, yb)
                    .map_err(|e| CliError::Usage(e.to_string()))
            }
            _ => Err(CliError::Usage(
                "this command needs --ta --ya --tb --yb (or config-file values)".into(),
            )),
        }
    }

    pub fn format_or(&self, default: OutputFormat) -> OutputFormat {
        self.format.unwrap_or(default)
    }
}

/// Worker cap for the embarrassingly parallel suites.
pub fn thread_cap() -> usize {
    std::env::var("HJ_ACTION_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// Run `f` over `0..count` on a capped worker pool; results come back in
/// index order regardless of scheduling, so output bytes are deterministic.
pub fn run_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = thread_cap().min(count.max(1));
    if threads <= 1 {
        return (0..count).map(f).collect();
    }
    use std::sync::atomic::{AtomicUsize, Ordering};
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|_| {
                scope.spawn(|| {
                    let mut local = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= count {
                            break;
                        }
                        local.push((i, f(i)));
                    }
                    local
                })
            })
            .collect();
        for handle in handles {
            for (i, v) in handle.join().expect("worker panicked") {
                slots[i] = Some(v);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("missing slot")).collect()
}

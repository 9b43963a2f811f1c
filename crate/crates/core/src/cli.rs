//! Batch runs driven by a JSON configuration.
//!
//! A run builds one registered example, executes one command against it and
//! writes its artifacts (trajectory CSVs, envelope tables, a JSON report and
//! a JSON manifest) into the output directory. Nothing written depends on
//! the clock or on thread scheduling, so a rerun with the same configuration
//! reproduces every file byte for byte.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::compfn::FnSpec;
use crate::error::{Error, Result};
use crate::examples::{
    build_example, sample_ensemble, Certificate, CertificateOutcome, CheckContext, ExampleBundle,
};
use crate::history::{HistorySegment, SegmentWire};
use crate::lyapunov::Tolerance;
use crate::rng;
use crate::signals::{DomainBox, PiecewiseSignal, SignalSpec};
use crate::simulator::{integrate, CheckVerdict, Trajectory, TrajectoryStatus};
use crate::verify::{fit_kl_envelope, max_state_norm, verify_ios_envelope, verify_rgaos_envelope};

/// Exit status on success.
pub const EXIT_PASS: i32 = 0;
/// Exit status when a certificate fails or a counterexample is found.
pub const EXIT_FAIL: i32 = 1;
/// Exit status on configuration and I/O errors.
pub const EXIT_ERROR: i32 = 2;

const SALT_CALIBRATION: u64 = 1;
const SALT_VALIDATION: u64 = 2;
const SALT_U: u64 = 3;
const SALT_D: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Integrate one solution.
    Simulate,
    /// Check the selected certificates (all by default).
    Check,
    /// Check the sampled decay inequalities only.
    Falsify,
    /// Check every certificate with the example's defaults.
    Reproduce,
    /// Fit a KL output envelope and validate it on fresh solutions.
    Envelope,
}

impl Command {
    pub const ALL: [Command; 5] = [
        Command::Simulate,
        Command::Check,
        Command::Falsify,
        Command::Reproduce,
        Command::Envelope,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Check => "check",
            Command::Falsify => "falsify",
            Command::Reproduce => "reproduce",
            Command::Envelope => "envelope",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownName(s.to_string()))
    }
}

/// Registered example and its parameter overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemRef {
    pub name: String,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// Initial segment of `simulate`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    #[default]
    Zero,
    Constant {
        value: Vec<f64>,
    },
    Segment {
        segment: SegmentWire<f64>,
    },
}

/// Input or disturbance of `simulate`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalConfig {
    /// The value of the box closest to zero.
    #[default]
    Nominal,
    Constant {
        value: Vec<f64>,
    },
    Piecewise {
        switch_times: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
    /// Renewal switching with exponential dwell times, values uniform in
    /// the box; the seed is derived from the run seed.
    Random {
        mean_dwell: f64,
    },
}

/// Settings of `envelope`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvelopeConfig {
    /// Weight of `‖x₀‖_r` in the KL argument.
    pub beta: FnSpec,
    /// With `gamma`, the envelope is validated on solutions with sampled
    /// inputs against the IOS estimate; without it, with nominal inputs
    /// against the RGAOS estimate.
    pub gamma: Option<FnSpec>,
    pub delta: Option<FnSpec>,
    /// Rows (`s`) and columns (`t`) of the exported table.
    pub s_points: usize,
    pub t_points: usize,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        Self {
            beta: FnSpec::Constant { c: 1.0 },
            gamma: None,
            delta: None,
            s_points: 9,
            t_points: 51,
        }
    }
}

/// Everything a run depends on. The JSON form mirrors the fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub system: Option<SystemRef>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Certificate indices for `check`; all when absent.
    pub certificates: Option<Vec<usize>>,
    /// Absolute residual tolerance of the sampled checks.
    pub tolerance: Option<f64>,
    /// Samples per sampled check.
    pub samples: Option<usize>,
    /// Solutions per simulated ensemble.
    pub trajectories: Option<usize>,
    pub step: Option<f64>,
    pub horizon: Option<f64>,
    pub t0: f64,
    pub initial: InitialConfig,
    pub u: SignalConfig,
    pub d: SignalConfig,
    pub envelope: EnvelopeConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            system: None,
            seed: 0,
            out: None,
            certificates: None,
            tolerance: None,
            samples: None,
            trajectories: None,
            step: None,
            horizon: None,
            t0: 0.0,
            initial: InitialConfig::Zero,
            u: SignalConfig::Nominal,
            d: SignalConfig::Nominal,
            envelope: EnvelopeConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("run configuration: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        Self::from_json(&text)
    }

    fn command(&self) -> Result<Command> {
        self.command
            .ok_or_else(|| Error::Config("no command given".into()))
    }

    fn system(&self) -> Result<&SystemRef> {
        self.system
            .as_ref()
            .ok_or_else(|| Error::Config("no system given".into()))
    }

    /// The example's default context with this run's overrides applied.
    fn context(&self, bundle: &ExampleBundle<f64>) -> Result<CheckContext> {
        let mut ctx = bundle.context.clone();
        if let Some(tol) = self.tolerance {
            if !(tol >= 0.0 && tol.is_finite()) {
                return Err(Error::Config(format!(
                    "tolerance must be finite and nonnegative, got {tol}"
                )));
            }
            ctx.sampler.tolerance = Some(Tolerance::absolute(tol));
        }
        if let Some(n) = self.samples {
            ctx.sampler.samples = n;
        }
        if let Some(n) = self.trajectories {
            if n == 0 {
                return Err(Error::Config("trajectories must be positive".into()));
            }
            ctx.trajectories = n;
        }
        if let Some(h) = self.step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::Config(format!("step must be positive, got {h}")));
            }
            ctx.integrate.step = h;
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::Config(format!("horizon must be positive, got {h}")));
            }
            ctx.horizon = h;
        }
        ctx.sampler.seed = self.seed;
        ctx.sampler.validate()?;
        Ok(ctx)
    }
}

/// One file written by a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Reproducibility record written last as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub system: String,
    /// Parameters of the example after defaults were filled in.
    pub params: std::collections::BTreeMap<String, f64>,
    pub seed: u64,
    /// Sampling, tolerance and integration settings actually used.
    pub context: CheckContext,
    /// The configuration as run, without the output directory.
    pub config: RunConfig,
    pub pass: bool,
    pub artifacts: Vec<Artifact>,
}

/// What a run did.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub command: Command,
    pub system: String,
    pub pass: bool,
    /// One line per certificate or check, for the console.
    pub lines: Vec<String>,
    pub out_dir: PathBuf,
    pub manifest: Manifest,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

struct Writer {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, content).map_err(|e| io_error(&path, e))?;
        self.artifacts.push(Artifact {
            file: name.into(),
            bytes: content.len(),
            sha256: format!("{:x}", Sha256::digest(content.as_bytes())),
        });
        Ok(())
    }

    fn json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Config(format!("encoding {name}: {e}")))?;
        text.push('\n');
        self.write(name, &text)
    }
}

fn signal(
    cfg: &SignalConfig,
    domain: &DomainBox<f64>,
    horizon: f64,
    seed: u64,
) -> Result<PiecewiseSignal<f64>> {
    match cfg {
        SignalConfig::Nominal => Ok(PiecewiseSignal::nominal(domain.clone())),
        SignalConfig::Constant { value } => {
            PiecewiseSignal::constant(value.clone(), domain.clone())
        }
        SignalConfig::Piecewise {
            switch_times,
            values,
        } => PiecewiseSignal::new(switch_times.clone(), values.clone(), domain.clone()),
        SignalConfig::Random { mean_dwell } => {
            if domain.dim() == 0 {
                return Ok(PiecewiseSignal::nominal(domain.clone()));
            }
            Ok(SignalSpec::new(domain.clone(), horizon, *mean_dwell, seed)?.sample())
        }
    }
}

fn initial(cfg: &InitialConfig, delay: f64, dim: usize) -> Result<HistorySegment<f64>> {
    match cfg {
        InitialConfig::Zero => HistorySegment::zeros(delay, dim),
        InitialConfig::Constant { value } => {
            if value.len() != dim {
                return Err(Error::Dimension {
                    what: "initial value",
                    expected: dim,
                    got: value.len(),
                });
            }
            HistorySegment::constant(delay, value)
        }
        InitialConfig::Segment { segment } => {
            let seg = HistorySegment::try_from(segment.clone())?;
            if seg.dim() != dim {
                return Err(Error::Dimension {
                    what: "initial segment",
                    expected: dim,
                    got: seg.dim(),
                });
            }
            if (seg.delay() - delay).abs() > 1e-12 * (1.0 + delay) {
                return Err(Error::Config(format!(
                    "initial segment has delay {}, the system {delay}",
                    seg.delay()
                )));
            }
            Ok(seg)
        }
    }
}

fn status_name(s: TrajectoryStatus) -> String {
    match s {
        TrajectoryStatus::Completed => "completed".into(),
        TrajectoryStatus::BlewUp { t } => format!("blew up at t = {t}"),
        TrajectoryStatus::StepFailure { t } => format!("step failure at t = {t}"),
    }
}

fn outcome_line(o: &CertificateOutcome) -> String {
    format!(
        "[{}] #{} {}: {} (expected {}) {}",
        if o.pass { "PASS" } else { "FAIL" },
        o.index,
        o.checker,
        o.observed,
        o.expected,
        o.label
    )
}

/// Executes `cfg`, writing artifacts under `cfg.out` (or `out_dir` when
/// given, which takes precedence).
pub fn run(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<RunSummary> {
    let command = cfg.command()?;
    let sys_ref = cfg.system()?;
    let bundle: ExampleBundle<f64> = build_example(&sys_ref.name, &sys_ref.params)?;
    let ctx = cfg.context(&bundle)?;
    if let Some(sel) = &cfg.certificates {
        if let Some(bad) = sel.iter().find(|i| **i >= bundle.certificates.len()) {
            return Err(Error::Config(format!(
                "certificate index {bad} out of range for `{}` ({} certificates)",
                bundle.name,
                bundle.certificates.len()
            )));
        }
    }
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("rfde-out"));
    let mut w = Writer::new(&dir)?;
    let (pass, lines) = match command {
        Command::Simulate => simulate(cfg, &bundle, &ctx, &mut w)?,
        Command::Check | Command::Falsify | Command::Reproduce => {
            certificates(cfg, command, &bundle, &ctx, &mut w)?
        }
        Command::Envelope => envelope(cfg, &bundle, &ctx, &mut w)?,
    };
    let manifest = Manifest {
        tool: "rfde".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
        system: bundle.name.clone(),
        params: bundle.params.clone(),
        seed: cfg.seed,
        context: ctx,
        config: RunConfig {
            out: None,
            ..cfg.clone()
        },
        pass,
        artifacts: w.artifacts.clone(),
    };
    w.json("manifest.json", &manifest)?;
    Ok(RunSummary {
        command,
        system: bundle.name,
        pass,
        lines,
        out_dir: dir,
        manifest,
    })
}

fn simulate(
    cfg: &RunConfig,
    bundle: &ExampleBundle<f64>,
    ctx: &CheckContext,
    w: &mut Writer,
) -> Result<(bool, Vec<String>)> {
    let sys = &bundle.system;
    let t_end = cfg.t0 + ctx.horizon;
    let x0 = initial(&cfg.initial, sys.delay(), sys.dim())?;
    let u = signal(&cfg.u, sys.u_box(), t_end, rng::derive(cfg.seed, SALT_U))?;
    let d = signal(&cfg.d, sys.d_box(), t_end, rng::derive(cfg.seed, SALT_D))?;
    let tr = integrate(sys, cfg.t0, &x0, &u, &d, t_end, &ctx.integrate)?;
    w.write("trajectory.csv", &tr.to_csv())?;
    let peak = tr.output_norms().iter().copied().fold(0.0, f64::max);
    let report = serde_json::json!({
        "system": bundle.name,
        "t0": cfg.t0,
        "t_end": t_end,
        "nodes": tr.len(),
        "last_time": tr.last_time(),
        "status": tr.status(),
        "max_state_norm": max_state_norm(&tr),
        "max_output_norm": peak,
        "input": u,
        "disturbance": d,
    });
    w.json("report.json", &report)?;
    let pass = tr.completed();
    let line = format!(
        "[{}] simulate {} on [{}, {}]: {} nodes, {}, max |x| = {}",
        if pass { "PASS" } else { "FAIL" },
        bundle.name,
        cfg.t0,
        t_end,
        tr.len(),
        status_name(tr.status()),
        max_state_norm(&tr)
    );
    Ok((pass, vec![line]))
}

fn certificates(
    cfg: &RunConfig,
    command: Command,
    bundle: &ExampleBundle<f64>,
    ctx: &CheckContext,
    w: &mut Writer,
) -> Result<(bool, Vec<String>)> {
    let selected: Vec<usize> = match command {
        Command::Falsify => (0..bundle.certificates.len())
            .filter(|&i| bundle.certificates[i].is_sampled())
            .filter(|i| cfg.certificates.as_ref().is_none_or(|s| s.contains(i)))
            .collect(),
        Command::Check => cfg
            .certificates
            .clone()
            .unwrap_or_else(|| (0..bundle.certificates.len()).collect()),
        _ => (0..bundle.certificates.len()).collect(),
    };
    if selected.is_empty() {
        return Err(Error::Config(format!(
            "no certificate of `{}` selected for {command}",
            bundle.name
        )));
    }
    let outcomes = selected
        .iter()
        .map(|&i| bundle.check(i, ctx, cfg.seed))
        .collect::<Result<Vec<_>>>()?;
    if command == Command::Reproduce {
        for (i, cert) in bundle.certificates.iter().enumerate() {
            let (scenario, t_end) = match cert {
                Certificate::Divergence { scenario, by, .. } => (scenario, *by),
                Certificate::IosEnvelope { extra: Some(s), .. } => (s, ctx.horizon),
                _ => continue,
            };
            let tr = scenario.run(&bundle.system, t_end, &ctx.integrate)?;
            w.write(&format!("scenario_{i}.csv"), &tr.to_csv())?;
        }
    }
    let pass = outcomes.iter().all(|o| o.pass);
    let report = serde_json::json!({
        "system": bundle.name,
        "params": bundle.params,
        "notes": bundle.notes,
        "pass": pass,
        "certificates": outcomes,
    });
    w.json("report.json", &report)?;
    Ok((pass, outcomes.iter().map(outcome_line).collect()))
}

fn envelope(
    cfg: &RunConfig,
    bundle: &ExampleBundle<f64>,
    ctx: &CheckContext,
    w: &mut Writer,
) -> Result<(bool, Vec<String>)> {
    let sys = &bundle.system;
    let ec = &cfg.envelope;
    if ec.s_points < 2 || ec.t_points < 2 {
        return Err(Error::Config(
            "envelope tables need at least 2 points per axis".into(),
        ));
    }
    let beta = ec.beta.build::<f64>();
    let calib = sample_ensemble(sys, ctx, rng::derive(cfg.seed, SALT_CALIBRATION), false)?;
    let sigma = fit_kl_envelope(&calib, &beta)?;
    let with_inputs = ec.gamma.is_some();
    let valid: Vec<Trajectory<f64>> = sample_ensemble(
        sys,
        ctx,
        rng::derive(cfg.seed, SALT_VALIDATION),
        with_inputs,
    )?;
    let check = match &ec.gamma {
        Some(g) => {
            let delta = ec
                .delta
                .clone()
                .unwrap_or(FnSpec::Constant { c: 1.0 })
                .build::<f64>();
            verify_ios_envelope(&valid, &sigma, &beta, &g.build(), &delta)
        }
        None => verify_rgaos_envelope(&valid, &sigma, &beta, None),
    };
    let s_max = calib
        .iter()
        .map(|tr| beta.eval(tr.t0()) * tr.initial().sup_norm())
        .fold(0.0, f64::max);
    let s_grid: Vec<f64> = (0..ec.s_points)
        .map(|j| s_max * j as f64 / (ec.s_points - 1) as f64)
        .collect();
    let t_grid: Vec<f64> = (0..ec.t_points)
        .map(|j| ctx.horizon * j as f64 / (ec.t_points - 1) as f64)
        .collect();
    w.write("envelope.csv", &sigma.to_csv(&s_grid, &t_grid))?;
    let pass = check.verdict == CheckVerdict::Pass;
    let report = serde_json::json!({
        "system": bundle.name,
        "calibration_trajectories": calib.len(),
        "validation_trajectories": valid.len(),
        "estimate": if with_inputs { "ios" } else { "rgaos" },
        "check": check,
    });
    w.json("report.json", &report)?;
    let line = format!(
        "[{}] envelope {} ({} estimate, {} validation solutions): worst slack {}",
        if pass { "PASS" } else { "FAIL" },
        bundle.name,
        if with_inputs { "IOS" } else { "RGAOS" },
        valid.len(),
        check.worst_slack
    );
    Ok((pass, vec![line]))
}

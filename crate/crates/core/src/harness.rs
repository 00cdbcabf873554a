//! Reproducible experiment runs and batches.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{Certifier, ConvergenceCertificate};
use crate::control::{delta, u_beta, UBetaParams};
use crate::error::{Error, Result};
use crate::model::{advance, apply_command, ModelParams, SwarmState};
use crate::scenario::{generate_scenario, ScenarioSpec, RNG_IDENTITY};
use crate::trajectory::TrajectoryWriter;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ControlMode {
    #[default]
    None,
    UBeta {
        beta: f64,
    },
    /// Only meaningful in a live session; headless runs reject it.
    Manual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    pub dir: PathBuf,
}

impl OutputPaths {
    pub fn trajectory(&self) -> PathBuf {
        self.dir.join("trajectory.csv")
    }

    pub fn summary(&self) -> PathBuf {
        self.dir.join("summary.json")
    }

    pub fn delta_series(&self) -> PathBuf {
        self.dir.join("delta.csv")
    }
}

fn default_max_ticks() -> u64 {
    50_000
}

fn default_sync_tolerance() -> f64 {
    1e-3
}

fn default_record_every() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    pub model: ModelParams,
    #[serde(default)]
    pub control: ControlMode,
    #[serde(default = "default_max_ticks")]
    pub max_ticks: u64,
    #[serde(default = "default_sync_tolerance")]
    pub sync_tolerance: f64,
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    /// Window threshold for certification; defaults to `10 * sync_tolerance`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_paths: Option<OutputPaths>,
}

impl RunConfig {
    pub fn new(scenario: ScenarioSpec, model: ModelParams, control: ControlMode) -> Self {
        Self {
            scenario,
            model,
            control,
            max_ticks: default_max_ticks(),
            sync_tolerance: default_sync_tolerance(),
            record_every: default_record_every(),
            epsilon: None,
            output_paths: None,
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref())?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(10.0 * self.sync_tolerance)
    }

    pub fn ubeta(&self) -> Option<Result<UBetaParams>> {
        match self.control {
            ControlMode::UBeta { beta } => Some(UBetaParams::new(beta)),
            _ => None,
        }
    }

    /// Thinning stride actually used; certified runs keep every tick. The
    /// final snapshot is always recorded.
    pub fn effective_record_every(&self) -> u64 {
        if self.ubeta().is_some() {
            1
        } else {
            self.record_every
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.scenario.validate()?;
        let s = &self.scenario;
        if s.n != self.model.n || s.r != self.model.r || s.v != self.model.v {
            return Err(Error::Config(format!(
                "scenario (n={}, r={}, v={}) disagrees with model (n={}, r={}, v={})",
                s.n, s.r, s.v, self.model.n, self.model.r, self.model.v
            )));
        }
        if self.max_ticks == 0 || self.record_every == 0 {
            return Err(Error::Config("max_ticks and record_every must be at least 1".into()));
        }
        if !(self.sync_tolerance.is_finite() && self.sync_tolerance > 0.0) {
            return Err(Error::Config(format!("sync_tolerance must be positive, got {}", self.sync_tolerance)));
        }
        match &self.control {
            ControlMode::None => {}
            ControlMode::Manual => {
                return Err(Error::Config("manual control needs a live session (serve)".into()));
            }
            ControlMode::UBeta { beta } => {
                UBetaParams::new(*beta).map_err(|e| Error::Config(e.to_string()))?;
                if self.model.n < 2 {
                    return Err(Error::Config("u_beta certification needs n >= 2".into()));
                }
                let eps = self.epsilon();
                if !(eps > 0.0 && eps < std::f64::consts::PI) {
                    return Err(Error::Config(format!("epsilon must lie in (0, pi), got {eps}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub rng: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<ConvergenceCertificate>,
    pub ticks_executed: u64,
    pub sync_time: Option<u64>,
    pub final_delta: Option<f64>,
    /// Degenerate neighbor sums reported by the stepper over the whole run.
    pub degenerate_events: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_series: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<PathBuf>,
    /// Kept out of `summary.json` so identical configs give identical files.
    #[serde(skip)]
    pub wall_time: Duration,
    #[serde(skip)]
    pub deltas: Vec<f64>,
}

/// Runs `config`, writing artifacts when `output_paths` is set.
pub fn run_simulation(config: &RunConfig) -> Result<RunSummary> {
    run_observed(config, |_| {})
}

/// Like [`run_simulation`] but also returns the recorded (thinned) states.
pub fn run_collect(config: &RunConfig) -> Result<(RunSummary, Vec<SwarmState>)> {
    let mut states = Vec::new();
    let summary = run_observed(config, |s| states.push(s.clone()))?;
    Ok((summary, states))
}

/// Core run loop. `observe` sees every recorded snapshot, each carrying the
/// shill as it acts on that tick.
pub fn run_observed(config: &RunConfig, mut observe: impl FnMut(&SwarmState)) -> Result<RunSummary> {
    config.validate()?;
    let started = Instant::now();
    let ubeta = config.ubeta().transpose()?;
    let params = &config.model;
    let stride = config.effective_record_every();

    let mut certifier = match ubeta {
        Some(b) => Some(Certifier::new(params, b, config.epsilon(), config.sync_tolerance)?),
        None => None,
    };
    let out = config.output_paths.as_ref();
    if let Some(out) = out {
        fs::create_dir_all(&out.dir)?;
    }
    let mut writer = out.map(|o| TrajectoryWriter::create(o.trajectory())).transpose()?;

    let mut record = |s: &SwarmState, certifier: &mut Option<Certifier>, last: bool| -> Result<()> {
        if !s.t.is_multiple_of(stride) && !last {
            return Ok(());
        }
        if let Some(c) = certifier.as_mut() {
            c.push(s)?;
        }
        if let Some(w) = writer.as_mut() {
            w.write_state(s)?;
        }
        observe(s);
        Ok(())
    };

    let mut state = generate_scenario(&config.scenario)?;
    state.check_well_formed(params).map_err(|e| Error::Config(e.to_string()))?;
    let mut deltas = Vec::new();
    let mut sync_time = None;
    let mut degenerate_events = 0u64;
    let mut ticks = 0u64;
    let mut recorded = 0usize;
    let window = params.n + 1;

    loop {
        if ubeta.is_some() {
            let d = delta(&state)?;
            deltas.push(d);
            if d < config.sync_tolerance && sync_time.is_none() {
                sync_time = Some(state.t);
            }
        }
        // a certified run keeps going until one full window is on record
        let synced = sync_time.is_some() && recorded >= window;
        if ticks >= config.max_ticks || synced {
            record(&state, &mut certifier, true)?;
            break;
        }
        let command = ubeta.map(|b| u_beta(&state, b)).transpose()?;
        let acting = apply_command(&state, command.as_ref());
        record(&acting, &mut certifier, false)?;
        recorded += 1;
        let outcome = advance(&acting, params);
        degenerate_events += outcome.degenerate.len() as u64;
        state = outcome.state;
        ticks += 1;
    }

    let certificate = certifier.map(Certifier::finish).transpose()?;
    if let Some(w) = writer {
        w.finish()?;
    }

    let mut summary = RunSummary {
        config: config.clone(),
        rng: RNG_IDENTITY.to_string(),
        certificate,
        ticks_executed: ticks,
        sync_time,
        final_delta: deltas.last().copied(),
        degenerate_events,
        delta_series: None,
        trajectory: None,
        wall_time: started.elapsed(),
        deltas,
    };
    if let Some(out) = out {
        if ubeta.is_some() {
            write_delta_series(&out.delta_series(), &summary.deltas)?;
            summary.delta_series = Some(out.delta_series());
        }
        summary.trajectory = Some(out.trajectory());
        let mut f = BufWriter::new(File::create(out.summary())?);
        serde_json::to_writer_pretty(&mut f, &summary)?;
        f.write_all(b"\n")?;
        f.flush()?;
    }
    tracing::info!(ticks, wall_ms = summary.wall_time.as_millis() as u64, "run finished");
    Ok(summary)
}

fn write_delta_series(path: &Path, deltas: &[f64]) -> Result<()> {
    let mut csv = csv::Writer::from_path(path)?;
    csv.write_record(["tick", "delta"])?;
    for (t, d) in deltas.iter().enumerate() {
        csv.write_record([t.to_string(), format!("{d:.16e}")])?;
    }
    csv.flush()?;
    Ok(())
}

/// One row of the batch aggregate table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchRow {
    pub index: usize,
    pub status: &'static str,
    pub error: String,
    pub ticks_executed: Option<u64>,
    pub sync_time: Option<u64>,
    pub final_delta: Option<f64>,
    pub monotone_ok: Option<bool>,
    pub lemma2_ok: Option<bool>,
    pub degenerate_events: Option<u64>,
}

pub struct BatchReport {
    pub results: Vec<Result<RunSummary>>,
}

impl BatchReport {
    pub fn rows(&self) -> Vec<BatchRow> {
        self.results
            .iter()
            .enumerate()
            .map(|(index, r)| match r {
                Ok(s) => BatchRow {
                    index,
                    status: "ok",
                    error: String::new(),
                    ticks_executed: Some(s.ticks_executed),
                    sync_time: s.sync_time,
                    final_delta: s.final_delta,
                    monotone_ok: s.certificate.as_ref().map(|c| c.monotone_ok),
                    lemma2_ok: s.certificate.as_ref().map(|c| c.lemma2_ok),
                    degenerate_events: Some(s.degenerate_events),
                },
                Err(e) => BatchRow {
                    index,
                    status: "error",
                    error: e.to_string(),
                    ticks_executed: None,
                    sync_time: None,
                    final_delta: None,
                    monotone_ok: None,
                    lemma2_ok: None,
                    degenerate_events: None,
                },
            })
            .collect()
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut csv = csv::Writer::from_writer(out);
        let rows = self.rows();
        if rows.is_empty() {
            csv.write_record([
                "index",
                "status",
                "error",
                "ticks_executed",
                "sync_time",
                "final_delta",
                "monotone_ok",
                "lemma2_ok",
                "degenerate_events",
            ])?;
        }
        for row in rows {
            csv.serialize(row)?;
        }
        csv.flush()?;
        Ok(())
    }
}

/// Runs every config on a pool of `parallelism` workers. Results keep input
/// order and do not depend on the worker count.
pub fn run_batch(configs: &[RunConfig], parallelism: usize) -> Result<BatchReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let results = pool.install(|| configs.par_iter().map(run_simulation).collect());
    Ok(BatchReport { results })
}

//! Seeded experiments: configuration, the run loop, metrics and network
//! summaries.

pub mod config;
pub mod metrics;

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::PathBuf;

use thiserror::Error;

use crate::env::Environment;
use crate::infomath::reward_argmax;
use crate::network::{ConceptKind, Depository, NetworkError, SnapshotError, TickReport};

pub use config::{ConfigError, RunConfig};
use metrics::{mean, surviving_devs, WindowTotals};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: io::Error },
    #[error("metrics output failed: {0}")]
    Metrics(#[from] io::Error),
}

impl RunError {
    /// Whether the failure is the caller's configuration rather than the
    /// run itself.
    pub fn is_config(&self) -> bool {
        matches!(self, RunError::Config(_))
    }
}

/// End-of-run totals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSummary {
    pub ticks: u64,
    pub concepts: usize,
    pub codelet_concepts: usize,
    pub actions: usize,
    pub executions: u64,
    pub explorations: u64,
    pub pruned: u64,
    /// Mean `|p - 1/e|` over surviving codelet concepts with outcomes.
    pub surviving_dev: Option<f64>,
    /// Mean `|p - 1/e|` over every pruned concept that had outcomes.
    pub pruned_dev: Option<f64>,
    /// Window probabilities of surviving codelet concepts, by id.
    pub surviving_p: Vec<f64>,
}

impl std::fmt::Display for RunSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
        writeln!(f, "ticks {}", self.ticks)?;
        writeln!(
            f,
            "concepts {} ({} codelets)",
            self.concepts, self.codelet_concepts
        )?;
        writeln!(f, "actions {}", self.actions)?;
        writeln!(f, "executions {}", self.executions)?;
        writeln!(f, "explorations {}", self.explorations)?;
        writeln!(f, "pruned {}", self.pruned)?;
        writeln!(f, "surviving mean |p - 1/e| {}", opt(self.surviving_dev))?;
        write!(f, "pruned mean |p - 1/e| {}", opt(self.pruned_dev))
    }
}

/// An engine wired to its environment.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: RunConfig,
    dep: Depository,
    env: Environment,
    window: WindowTotals,
    totals: WindowTotals,
}

impl Experiment {
    pub fn new(config: &RunConfig) -> Result<Self, RunError> {
        config.check()?;
        let env = config
            .environment()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let mut dep =
            Depository::with_sensors(config.engine_params(), config.seed, env.channels() as u16)?;
        dep.set_workers(config.workers)?;
        Ok(Experiment {
            config: config.clone(),
            dep,
            env,
            window: WindowTotals::default(),
            totals: WindowTotals::default(),
        })
    }

    /// Continues from a snapshot; the environment comes from `config`.
    pub fn resume(config: &RunConfig, snapshot: &[u8]) -> Result<Self, RunError> {
        let mut exp = Experiment::new(config)?;
        exp.dep = Depository::restore(snapshot)?;
        exp.dep.set_workers(config.workers)?;
        Ok(exp)
    }

    pub fn depository(&self) -> &Depository {
        &self.dep
    }

    pub fn depository_mut(&mut self) -> &mut Depository {
        &mut self.dep
    }

    pub fn environment(&self) -> &Environment {
        &self.env
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn step(&mut self) -> Result<TickReport, RunError> {
        let frame = self.env.frame(self.dep.current_tick() + 1);
        let report = self.dep.tick(&frame)?;
        let target = reward_argmax().value();
        for w in [&mut self.window, &mut self.totals] {
            w.executions += report.executions.len() as u64;
            w.explorations += report.explorations.len() as u64;
            w.prunes += report.pruned.len() as u64;
            w.pruned_devs.extend(
                report
                    .pruned
                    .iter()
                    .filter_map(|c| c.p)
                    .map(|p| (p - target).abs()),
            );
        }
        Ok(report)
    }

    /// Runs `ticks` steps, writing a sample every `cadence` ticks to
    /// `metrics` when given.
    pub fn run_ticks(
        &mut self,
        ticks: u64,
        mut metrics: Option<&mut dyn Write>,
    ) -> Result<(), RunError> {
        for _ in 0..ticks {
            self.step()?;
            if self.dep.current_tick().is_multiple_of(self.config.cadence) {
                if let Some(out) = metrics.as_deref_mut() {
                    metrics::write_sample(out, &self.dep, &self.window)?;
                }
                self.window = WindowTotals::default();
            }
        }
        Ok(())
    }

    pub fn summary(&self) -> RunSummary {
        let surviving_p: Vec<f64> = self
            .dep
            .concepts()
            .filter(|c| c.codelet().is_some())
            .filter_map(|c| c.probability())
            .collect();
        RunSummary {
            ticks: self.dep.current_tick(),
            concepts: self.dep.concept_count(),
            codelet_concepts: self
                .dep
                .concepts()
                .filter(|c| c.codelet().is_some())
                .count(),
            actions: self.dep.action_count(),
            executions: self.totals.executions,
            explorations: self.totals.explorations,
            pruned: self.totals.prunes,
            surviving_dev: mean(&surviving_devs(&self.dep)),
            pruned_dev: mean(&self.totals.pruned_devs),
            surviving_p,
        }
    }
}

/// Everything a run produces, held in memory.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub metrics: Vec<u8>,
    pub snapshot: Vec<u8>,
}

pub fn run_to_vec(config: &RunConfig) -> Result<RunOutput, RunError> {
    let mut exp = Experiment::new(config)?;
    let mut metrics = Vec::new();
    metrics::write_header(&mut metrics, config)?;
    exp.run_ticks(config.ticks, Some(&mut metrics))?;
    Ok(RunOutput {
        summary: exp.summary(),
        metrics,
        snapshot: exp.dep.snapshot(),
    })
}

/// Runs the configured experiment and writes the metrics and snapshot files
/// that are configured.
pub fn run(config: &RunConfig) -> Result<RunSummary, RunError> {
    let out = run_to_vec(config)?;
    let write = |path: &Option<PathBuf>, bytes: &[u8]| match path {
        Some(p) => std::fs::write(p, bytes).map_err(|source| RunError::Output {
            path: p.clone(),
            source,
        }),
        None => Ok(()),
    };
    write(&config.metrics_out, &out.metrics)?;
    write(&config.snapshot_out, &out.snapshot)?;
    Ok(out.summary)
}

/// Text listing of a network, ordered by id.
pub fn inspect(dep: &Depository) -> String {
    let mut out = String::new();
    let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6}"));
    let _ = writeln!(out, "tick {}", dep.current_tick());
    let _ = writeln!(out, "concepts {}", dep.concept_count());
    let _ = writeln!(out, "actions {}", dep.action_count());
    let _ = writeln!(out, "\nid kind level p samples avg_steps in out");
    for c in dep.concepts() {
        let kind = match &c.kind {
            ConceptKind::Sensory { channel } => format!("sensory:{channel}"),
            ConceptKind::Codelet(code) => format!("codelet:{}", code.len()),
            ConceptKind::Actuator => "actuator".to_string(),
        };
        let _ = writeln!(
            out,
            "{} {kind} {} {} {} {} {} {}",
            c.id,
            c.level,
            opt(c.probability()),
            c.window.len(),
            opt(c.timing.avg_steps()),
            dep.in_degree(c.id),
            dep.out_degree(c.id),
        );
    }
    let _ = writeln!(out, "\ntail head slot q");
    for a in dep.actions() {
        let _ = writeln!(out, "{} {} {} {:.6}", a.tail, a.head, a.slot, a.q);
    }
    out
}

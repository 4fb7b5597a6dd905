//! Timing harness: engine initialization, mean time per tick and total
//! time of a run, averaged over recorded runs after warm-up runs.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::engine::{Engine, EngineConfig, EngineError, Mode, Outcome, Strategy};
use crate::model::LarsProgram;
use crate::scenario::{generate, Schedule, Setup};

pub const CSV_HEADER: [&str; 7] = ["setup", "strategy", "n", "tp", "t_init", "t_tick", "t_total"];

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub setup: Setup,
    pub strategy: Strategy,
    pub n: u64,
    pub tp: u64,
    pub seed: u64,
    pub runs: usize,
    pub warmup: usize,
    pub gc: bool,
}

impl BenchConfig {
    pub fn new(setup: Setup, strategy: Strategy, n: u64, tp: u64) -> Self {
        BenchConfig {
            setup,
            strategy,
            n,
            tp,
            seed: 1,
            runs: 5,
            warmup: 2,
            gc: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub setup: Setup,
    pub strategy: Strategy,
    pub n: u64,
    pub tp: u64,
    pub seed: u64,
    pub runs: usize,
    /// Seconds.
    pub t_init: f64,
    pub t_tick: f64,
    pub t_total: f64,
    pub ticks: usize,
    /// Some evaluation ended without a definite answer.
    pub flagged: bool,
}

impl BenchReport {
    pub fn csv_record(&self) -> [String; 7] {
        let strategy = match self.strategy {
            Strategy::OneShot => "oneshot",
            Strategy::Incremental => "incremental",
        };
        [
            self.setup.to_string(),
            strategy.to_string(),
            self.n.to_string(),
            self.tp.to_string(),
            format!("{:.6}", self.t_init),
            format!("{:.9}", self.t_tick),
            format!("{:.6}", self.t_total),
        ]
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("at least one recorded run is required")]
    NoRuns,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Timings of one run.
#[derive(Clone, Copy, Debug)]
pub struct RunTimes {
    pub init: Duration,
    pub total: Duration,
    pub ticks: usize,
    pub flagged: bool,
}

/// Feeds `schedule` through a push-mode engine, evaluating at every time
/// point.
pub fn run_once(p: &LarsProgram, schedule: &Schedule, strategy: Strategy, gc: bool) -> Result<RunTimes, EngineError> {
    let start = Instant::now();
    let mut e = Engine::create(EngineConfig::new(p.clone()).strategy(strategy).mode(Mode::Push).gc(gc))?;
    let init = start.elapsed();
    let mut flagged = false;
    for (t, atoms) in schedule.points.iter().enumerate() {
        e.append(t as u64, atoms.iter().cloned())?;
        let r = e.evaluate(t as u64)?;
        flagged |= matches!(r.outcome, Outcome::Unknown(_));
    }
    Ok(RunTimes {
        init,
        total: start.elapsed(),
        ticks: schedule.points.len() + schedule.signals(),
        flagged,
    })
}

pub fn benchmark(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    if cfg.runs == 0 {
        return Err(BenchError::NoRuns);
    }
    let (p, schedule) = generate(cfg.setup, cfg.n, cfg.tp, cfg.seed);
    for _ in 0..cfg.warmup {
        run_once(&p, &schedule, cfg.strategy, cfg.gc)?;
    }
    let mut init = 0.0;
    let mut total = 0.0;
    let mut tick = 0.0;
    let mut flagged = false;
    let mut ticks = 0;
    for _ in 0..cfg.runs {
        let r = run_once(&p, &schedule, cfg.strategy, cfg.gc)?;
        init += r.init.as_secs_f64();
        total += r.total.as_secs_f64();
        tick += (r.total - r.init).as_secs_f64() / r.ticks as f64;
        flagged |= r.flagged;
        ticks = r.ticks;
    }
    let k = cfg.runs as f64;
    Ok(BenchReport {
        setup: cfg.setup,
        strategy: cfg.strategy,
        n: cfg.n,
        tp: cfg.tp,
        seed: cfg.seed,
        runs: cfg.runs,
        t_init: init / k,
        t_tick: tick / k,
        t_total: total / k,
        ticks,
        flagged,
    })
}

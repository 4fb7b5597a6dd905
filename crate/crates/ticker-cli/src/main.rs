use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::process::ExitCode;

use clap::{CommandFactory, Parser, ValueEnum};

use ticker::bench::{benchmark, BenchConfig, CSV_HEADER};
use ticker::encode::one_shot_program;
use ticker::engine::{Engine, EngineConfig, Mode, Strategy};
use ticker::incremental::{pre_ground, IncrementalState};
use ticker::model::{validate_program, Atom, LarsProgram, TickStream};
use ticker::parser::{parse_program, parse_signal};
use ticker::scenario::Setup;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Oneshot,
    Incremental,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Oneshot => Strategy::OneShot,
            StrategyArg::Incremental => Strategy::Incremental,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Push,
    Pull,
}

/// Stream reasoning over plain LARS programs.
///
/// Streaming: reads `<time> <atom>` signal lines and prints the model at
/// `--until` (or at every time point with `--every`).
/// Benchmark: `--bench A|B --setup A1|A2|B1|B2` prints CSV rows
/// `setup,strategy,n,tp,t_init,t_tick,t_total`.
#[derive(Parser, Debug)]
#[command(name = "ticker", version)]
struct Cli {
    /// Program file.
    #[arg(long)]
    program: Option<String>,
    /// Omit to benchmark both strategies.
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    #[arg(long, value_enum, default_value = "push")]
    mode: ModeArg,
    /// Signal file, `-` for stdin.
    #[arg(long)]
    input: Option<String>,
    /// Last time point; defaults to the last signal time.
    #[arg(long)]
    until: Option<u64>,
    /// Print a model at every time point up to `--until`.
    #[arg(long)]
    every: bool,
    /// Forget data outside every window.
    #[arg(long)]
    gc_cutoff: bool,
    /// Print the encoding of the program and stream at `--until`.
    #[arg(long)]
    dump_encoding: bool,
    /// Reject window variables not bound by background guards.
    #[arg(long)]
    strict_guards: bool,
    /// Solver step budget.
    #[arg(long)]
    budget: Option<u64>,

    /// Scenario to benchmark: A or B.
    #[arg(long)]
    bench: Option<String>,
    #[arg(long)]
    setup: Option<Setup>,
    /// Window sizes, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "20")]
    window: Vec<u64>,
    /// Numbers of time points, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "100")]
    timepoints: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    runs: usize,
    #[arg(long, default_value_t = 2)]
    warmup: usize,
    /// CSV output file; stdout if omitted.
    #[arg(long)]
    csv: Option<String>,
}

fn main() -> ExitCode {
    if std::env::args().len() <= 1 {
        let _ = Cli::command().print_help();
        return ExitCode::from(2);
    }
    let cli = Cli::parse();
    let res = if cli.bench.is_some() {
        run_bench(&cli)
    } else {
        run_stream(&cli)
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

type Res = Result<(), Box<dyn std::error::Error>>;

fn read_source(path: &str) -> io::Result<String> {
    if path == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path)
    }
}

/// Signals grouped by time, in arrival order.
fn read_signals(text: &str, p: &LarsProgram) -> Result<BTreeMap<u64, Vec<Atom>>, Box<dyn std::error::Error>> {
    let mut out: BTreeMap<u64, Vec<Atom>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('%').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let s = parse_signal(line, p).map_err(|e| format!("input line {}: {e}", i + 1))?;
        out.entry(s.time).or_default().push(s.atom);
    }
    Ok(out)
}

fn run_stream(cli: &Cli) -> Res {
    let path = cli.program.as_deref().ok_or("--program is required")?;
    let p = parse_program(&fs::read_to_string(path)?)?;
    let report = validate_program(&p);
    if !report.is_ok() {
        return Err(format!("invalid program:\n{report}").into());
    }
    let signals = match &cli.input {
        Some(f) => read_signals(&read_source(f)?, &p)?,
        None => BTreeMap::new(),
    };
    let until = cli
        .until
        .unwrap_or_else(|| signals.keys().next_back().copied().unwrap_or(0));
    if let Some(t) = signals.keys().find(|t| **t > until) {
        return Err(format!("signal at time {t} is after --until {until}").into());
    }
    let strategy: Strategy = cli.strategy.map(Into::into).unwrap_or_default();
    let mut out = io::stdout().lock();

    if cli.dump_encoding {
        let mut d = TickStream::new();
        for (t, atoms) in &signals {
            d.advance(*t, atoms.iter().cloned());
        }
        d.advance(until, []);
        match strategy {
            Strategy::OneShot => writeln!(out, "{}", one_shot_program(&p, &d, until))?,
            Strategy::Incremental => {
                let mut s = IncrementalState::new(&p, &pre_ground(&p, cli.strict_guards)?);
                s.feed(&d)?;
                writeln!(out, "{}", s.dump_rules())?;
            }
        }
    }

    let mut cfg = EngineConfig::new(p)
        .strategy(strategy)
        .mode(match cli.mode {
            ModeArg::Push => Mode::Push,
            ModeArg::Pull => Mode::Pull,
        })
        .gc(cli.gc_cutoff)
        .strict_guards(cli.strict_guards);
    if let Some(b) = cli.budget {
        cfg = cfg.budget(b);
    }
    let mut e = Engine::create(cfg)?;
    for t in 0..=until {
        if let Some(atoms) = signals.get(&t) {
            e.append(t, atoms.iter().cloned())?;
        }
        if cli.every || t == until {
            writeln!(out, "{}", e.evaluate(t)?)?;
        }
    }
    Ok(())
}

fn run_bench(cli: &Cli) -> Res {
    let scenario = cli.bench.as_deref().unwrap_or_default().to_ascii_uppercase();
    let setup = cli.setup.ok_or("--setup is required with --bench")?;
    if !setup.to_string().starts_with(&scenario) {
        return Err(format!("setup {setup} does not belong to scenario {scenario}").into());
    }
    let strategies = match cli.strategy {
        Some(s) => vec![s.into()],
        None => vec![Strategy::OneShot, Strategy::Incremental],
    };
    let sink: Box<dyn Write> = match &cli.csv {
        Some(f) => Box::new(fs::File::create(f)?),
        None => Box::new(io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(CSV_HEADER)?;
    for &tp in &cli.timepoints {
        for &n in &cli.window {
            for &strategy in &strategies {
                let mut cfg = BenchConfig::new(setup, strategy, n, tp);
                cfg.seed = cli.seed;
                cfg.runs = cli.runs;
                cfg.warmup = cli.warmup;
                let r = benchmark(&cfg)?;
                if r.flagged {
                    eprintln!("warning: {setup} {strategy:?} n={n} tp={tp}: some evaluations were unknown");
                }
                w.write_record(r.csv_record())?;
                w.flush()?;
            }
        }
    }
    Ok(())
}

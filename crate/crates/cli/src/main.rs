use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use memgoi::corpus::declared_backend;
use memgoi::engine::{Engine, EngineError, Memory, Outcome, RunConfig};
use memgoi::memory::{Backend, GateSet};

/// Default seed of the pseudorandom policy used by `--check-diamond`.
const DEFAULT_SEED: u64 = 7;

const EXIT_DIAMOND: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_TYPE: u8 = 3;
const EXIT_DISAGREE: u8 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Pcf,
    Net,
    Msiam,
    All,
}

impl EngineArg {
    fn engines(self) -> Vec<Engine> {
        match self {
            EngineArg::Pcf => vec![Engine::Pcf],
            EngineArg::Net => vec![Engine::Net],
            EngineArg::Msiam => vec![Engine::Msiam],
            EngineArg::All => Engine::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Int,
    Prob,
    Quantum,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Backend {
        match b {
            BackendArg::Int => Backend::Int,
            BackendArg::Prob => Backend::Prob,
            BackendArg::Quantum => Backend::Quantum,
        }
    }
}

fn positive_count(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(format!("`{s}` is not a positive integer")),
    }
}

fn positive_real(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("`{s}` is not a positive real")),
    }
}

/// Evaluates a linear PCF program with a memory by abstract machine, by
/// program net reduction and by the multi-token machine.
#[derive(Parser, Debug)]
#[command(name = "memgoi", version)]
struct Cli {
    /// Program file.
    file: PathBuf,

    /// Evaluator to run.
    #[arg(long, value_enum, default_value = "all")]
    engine: EngineArg,

    /// Memory backend. Defaults to the `-- backend:` line of the file, then
    /// to `quantum`.
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,

    /// Maximum number of rounds, each performing at most one memory test.
    #[arg(long, default_value = "200", value_parser = positive_count)]
    horizon: usize,

    /// Stop once the non-terminal mass is below this bound. Also the largest
    /// accepted difference between engines.
    #[arg(long, default_value = "1e-9", value_parser = positive_real)]
    tol: f64,

    /// Maximum number of deterministic steps within a round.
    #[arg(long, default_value = "10000", value_parser = positive_count)]
    fuel: usize,

    /// Gate definitions added to the built-in quantum gates.
    #[arg(long, value_name = "FILE")]
    gates: Option<PathBuf>,

    /// Print the transitions of the multi-token machine.
    #[arg(long)]
    trace: bool,

    /// Print the proof net of the program.
    #[arg(long)]
    dump_net: bool,

    /// Compare leftmost and seeded reduction for this many steps. The seed
    /// is read from `MSIAM_SEED`.
    #[arg(long, value_name = "DEPTH")]
    check_diamond: Option<usize>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Failure {
        Failure { code, message: message.into() }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Failure {
        let code = match e {
            EngineError::Parse(_) => EXIT_INPUT,
            EngineError::Type(_) | EngineError::Translate(_) => EXIT_TYPE,
        };
        Failure::new(code, e.to_string())
    }
}

fn seed_from_env() -> Result<u64, Failure> {
    match std::env::var("MSIAM_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Failure::new(EXIT_INPUT, format!("MSIAM_SEED `{s}` is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn write_outcome(out: &mut String, o: &Outcome) {
    writeln!(out, "engine: {}", o.engine).unwrap();
    writeln!(out, "probability: {:.12}", o.probability).unwrap();
    writeln!(out, "rounds: {}", o.rounds).unwrap();
    writeln!(out, "truncated: {}", o.reached_horizon).unwrap();
    writeln!(out, "outcomes: {}", o.readings.len()).unwrap();
    for (r, p) in &o.readings {
        let shown = if r.is_empty() { "()" } else { r };
        writeln!(out, "  {p:.12}  {shown}").unwrap();
    }
}

fn run(cli: &Cli) -> Result<(String, u8), Failure> {
    let source = std::fs::read_to_string(&cli.file)
        .map_err(|e| Failure::new(EXIT_INPUT, format!("cannot read {}: {e}", cli.file.display())))?;
    let gates = match &cli.gates {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::new(EXIT_INPUT, format!("cannot read {}: {e}", path.display())))?;
            GateSet::parse_config(&text).map_err(|e| Failure::new(EXIT_INPUT, format!("{}: {e}", path.display())))?
        }
        None => GateSet::builtin(),
    };
    let backend = cli.backend.map(Backend::from).or_else(|| declared_backend(&source)).unwrap_or(Backend::Quantum);
    let mem = Memory::new(backend, &gates);
    let term = mem.parse(&source).map_err(EngineError::from)?;
    let ty = mem.typecheck(&term).map_err(EngineError::from)?;

    let mut out = String::new();
    writeln!(out, "file: {}", cli.file.display()).unwrap();
    writeln!(out, "backend: {backend}").unwrap();
    writeln!(out, "type: {ty}").unwrap();
    writeln!(out, "horizon: {}", cli.horizon).unwrap();
    writeln!(out, "tol: {:e}", cli.tol).unwrap();

    if cli.dump_net {
        writeln!(out, "net:").unwrap();
        for line in mem.net(&term)?.dump().lines() {
            writeln!(out, "  {line}").unwrap();
        }
    }
    if cli.trace {
        writeln!(out, "trace:").unwrap();
        for line in mem.trace(&term, cli.fuel)? {
            writeln!(out, "  {line}").unwrap();
        }
    }

    let engines = cli.engine.engines();
    let cfg = RunConfig { horizon: cli.horizon, tol: cli.tol, fuel: cli.fuel, ..RunConfig::default() };
    let mut outcomes = Vec::new();
    for e in &engines {
        let o = mem.run(*e, &term, &cfg)?;
        writeln!(out).unwrap();
        write_outcome(&mut out, &o);
        outcomes.push(o);
    }

    let mut code = 0;
    if outcomes.len() > 1 {
        writeln!(out).unwrap();
        let mut worst = 0.0f64;
        for (i, a) in outcomes.iter().enumerate() {
            for b in &outcomes[i + 1..] {
                let d = (a.probability - b.probability).abs();
                worst = worst.max(d);
                writeln!(out, "delta {}-{}: {d:.3e}", a.engine, b.engine).unwrap();
            }
        }
        let agree = worst <= cli.tol;
        writeln!(out, "agree: {agree}").unwrap();
        if !agree {
            code = EXIT_DISAGREE;
        }
    }

    if let Some(depth) = cli.check_diamond {
        let seed = seed_from_env()?;
        writeln!(out).unwrap();
        writeln!(out, "diamond depth: {depth}").unwrap();
        writeln!(out, "diamond seed: {seed}").unwrap();
        for e in &engines {
            let r = mem.check_diamond(*e, &term, depth, seed)?;
            let verdict = if r.passed { "pass" } else { "fail" };
            writeln!(
                out,
                "diamond {e}: {verdict} ({} compared, {} divergences, {} inconclusive)",
                r.compared_steps, r.divergences, r.inconclusive
            )
            .unwrap();
            if let Some(why) = &r.failure {
                writeln!(out, "diamond {e} failure: {why}").unwrap();
            }
            if !r.passed && code == 0 {
                code = EXIT_DIAMOND;
            }
        }
    }
    Ok((out, code))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((report, code)) => {
            print!("{report}");
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

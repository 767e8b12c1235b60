//! `rlab`: run colourings, single rendezvous scenarios, sweeps and the
//! verification suite.
//!
//! Exit codes: 0 pass, 1 property or bound failure, 2 usage/config error.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rlab_core::colouring::{default_max_rounds, run_local, ColouringError, Topology, TERMINATION_SLACK};
use rlab_core::line::{load_label_file, LabelGenSpec, Orientation, Position};
use rlab_core::numerics::{log_star, Natural};
use rlab_core::simulator::{run_rendezvous, AlgorithmKind, Outcome};
use rlab_core::sweep::{run_params, run_sweep, CellRow, GenParam, RunError, RunReport, ScenarioParams, SweepSpec};
use rlab_core::verify::{self, colouring_instance, Scale, VerifyConfig};

/// Seed used when none is given, so every command is reproducible by default.
const DEFAULT_SEED: u64 = 1;

#[derive(Parser)]
#[command(name = "rlab", version, about = "Rendezvous on labelled lines: simulator and bound checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Three-colour a path or cycle and check termination times.
    Colour(ColourArgs),
    /// Run one two-agent scenario and compare against its bound.
    Rendezvous(RendezvousArgs),
    /// Run a grid of scenarios; one CSV row per cell.
    Sweep(SweepArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ColourArgs {
    /// File with one label per line (blank lines and `#` comments ignored).
    #[arg(long, conflicts_with_all = ["labels", "random"])]
    labels_file: Option<PathBuf>,
    /// Comma-separated labels in path order.
    #[arg(long, conflicts_with = "random")]
    labels: Option<String>,
    /// Generate this many random distinct labels in [2, 2^64].
    #[arg(long)]
    random: Option<usize>,
    /// With --random: draw labels with 65536 or 65537 bits instead.
    #[arg(long, requires = "random")]
    tower_labels: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// path or cycle.
    #[arg(long, default_value = "path")]
    topology: String,
    /// Round budget; defaults to log*(max label) + 70.
    #[arg(long)]
    max_rounds: Option<u64>,
}

#[derive(Args, Default)]
struct RendezvousArgs {
    /// key=value file; any flag given on the command line wins over it.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// canon, knownD or noD.
    #[arg(long)]
    algorithm: Option<String>,
    /// canonical, random, random:<bits>, huge4, huge5. Implied by --labels or --labels-file.
    #[arg(long)]
    generator: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    start_a: Option<Position>,
    #[arg(long, allow_hyphen_values = true)]
    start_b: Option<Position>,
    /// Sets start-b to start-a + D.
    #[arg(long)]
    distance: Option<u64>,
    #[arg(long)]
    wake_a: Option<u64>,
    #[arg(long)]
    wake_b: Option<u64>,
    /// Wakes agent a in round 1 and agent b this many rounds later.
    #[arg(long)]
    delay: Option<u64>,
    /// +1 or -1.
    #[arg(long, allow_hyphen_values = true)]
    orient_a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    orient_b: Option<String>,
    #[arg(long)]
    kappa: Option<u64>,
    /// Comma-separated explicit labels; labels[k] sits at k + origin-offset.
    #[arg(long, conflicts_with = "labels_file")]
    labels: Option<String>,
    #[arg(long)]
    labels_file: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    origin_offset: Option<Position>,
    /// Defaults to four times the bound.
    #[arg(long)]
    max_rounds: Option<u64>,
    /// Write the per-round trace CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    algorithm: String,
    /// Distances: `a..b`, `a..b:step` or a comma list.
    #[arg(long, default_value = "1..16")]
    d: String,
    /// Delays, same syntax as --d.
    #[arg(long, default_value = "0,1,2,3")]
    delays: String,
    /// Comma-separated generator names.
    #[arg(long)]
    generators: Option<String>,
    /// Comma-separated orientation pairs from ++, +-, -+, --.
    #[arg(long, default_value = "++,+-")]
    orientations: String,
    #[arg(long, default_value_t = 6)]
    trials: u32,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    kappa: Option<u64>,
    #[arg(long)]
    max_rounds: Option<u64>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Small slice of every grid.
    #[arg(long)]
    quick: bool,
    /// Force this round budget on every simulated run.
    #[arg(long)]
    max_rounds: Option<u64>,
    /// Comma-separated criterion numbers.
    #[arg(long)]
    only: Option<String>,
}

enum Failure {
    Usage(String),
    Property,
}

type CmdResult = Result<(), Failure>;

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

fn kappa(flag: Option<u64>) -> Result<u64, Failure> {
    match flag {
        Some(0) => Err(usage("kappa must be at least 1")),
        Some(k) => Ok(k),
        None => verify::kappa_from_env().map_err(usage),
    }
}

fn parse_labels(s: &str) -> Result<Vec<Natural>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<Natural>().map_err(|e| usage(format!("bad label {t:?}: {e}"))))
        .collect()
}

fn read_plain_labels(path: &PathBuf) -> Result<Vec<Natural>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#') && !l.starts_with("origin_offset="))
        .map(|t| t.parse::<Natural>().map_err(|e| usage(format!("bad label {t:?}: {e}"))))
        .collect()
}

fn cmd_colour(a: ColourArgs) -> CmdResult {
    let topology = match a.topology.as_str() {
        "path" => Topology::Path,
        "cycle" => Topology::Cycle,
        t => return Err(usage(format!("unknown topology {t:?}"))),
    };
    let labels = match (&a.labels_file, &a.labels, a.random) {
        (Some(p), _, _) => read_plain_labels(p)?,
        (_, Some(l), _) => parse_labels(l)?,
        (_, _, Some(n)) => colouring_instance(n, a.seed, a.tower_labels),
        _ => return Err(usage("give --labels, --labels-file or --random")),
    };
    let budget = a.max_rounds.unwrap_or_else(|| default_max_rounds(&labels));
    let result = match run_local(&labels, topology, budget) {
        Ok(r) => r,
        Err(
            e @ (ColouringError::TooFewNodes(_)
            | ColouringError::LabelTooSmall(_)
            | ColouringError::DuplicateLabel(_)),
        ) => return Err(usage(e)),
        Err(e) => {
            eprintln!("colouring failed: {e}");
            return Err(Failure::Property);
        }
    };
    let mut out = String::from("node,label,colour,termination_round,limit\n");
    let mut late = Vec::new();
    for (i, (label, (&c, &t))) in labels.iter().zip(result.colours.iter().zip(&result.termination_rounds)).enumerate() {
        let limit = u64::from(log_star(label)) + TERMINATION_SLACK;
        if t > limit {
            late.push(i);
        }
        out.push_str(&format!("{i},{label},{c},{t},{limit}\n"));
    }
    print!("{out}");
    if late.is_empty() {
        Ok(())
    } else {
        eprintln!("nodes terminating past log*(ID)+{TERMINATION_SLACK}: {late:?}");
        Err(Failure::Property)
    }
}

fn read_scenario_file(path: &PathBuf) -> Result<HashMap<String, String>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("{}:{}: expected key=value", path.display(), no + 1)))?;
        map.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(map)
}

/// Looks a key up in the scenario file and parses it.
struct FileValues(HashMap<String, String>);

impl FileValues {
    fn take<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, Failure>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.remove(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| usage(format!("scenario key {key}: {e}"))),
        }
    }
}

fn merge<T: std::str::FromStr>(flag: Option<T>, file: &mut FileValues, key: &str) -> Result<Option<T>, Failure>
where
    T::Err: std::fmt::Display,
{
    let from_file = file.take(key)?;
    Ok(flag.or(from_file))
}

fn orientation(s: &str) -> Result<Orientation, Failure> {
    match s {
        "+1" | "1" | "+" => Ok(Orientation::Agree),
        "-1" | "-" => Ok(Orientation::Flip),
        _ => Err(usage(format!("orientation must be +1 or -1, got {s:?}"))),
    }
}

fn build_params(a: RendezvousArgs) -> Result<ScenarioParams, Failure> {
    let mut file = FileValues(match &a.scenario {
        Some(p) => read_scenario_file(p)?,
        None => HashMap::new(),
    });
    let algorithm_name = merge(a.algorithm, &mut file, "algorithm")?.ok_or_else(|| usage("--algorithm is required"))?;
    let algorithm = AlgorithmKind::parse(&algorithm_name)
        .ok_or_else(|| usage(format!("unknown algorithm {algorithm_name:?} (canon, knownD, noD)")))?;
    let seed = merge(a.seed, &mut file, "seed")?.unwrap_or(DEFAULT_SEED);
    let labels_text: Option<String> = merge(a.labels, &mut file, "labels")?;
    let labels_file: Option<PathBuf> = merge(a.labels_file, &mut file, "labels-file")?;
    let origin_offset: Option<Position> = merge(a.origin_offset, &mut file, "origin-offset")?;
    let generator_name: Option<String> = merge(a.generator, &mut file, "generator")?;
    let generator = if let Some(path) = labels_file {
        match load_label_file(&path).map_err(usage)? {
            LabelGenSpec::Explicit { labels, origin_offset: o } => {
                GenParam::Explicit { labels, origin_offset: origin_offset.unwrap_or(o) }
            }
            _ => unreachable!("label files are explicit"),
        }
    } else if let Some(text) = labels_text {
        GenParam::Explicit { labels: parse_labels(&text)?, origin_offset: origin_offset.unwrap_or(0) }
    } else {
        let name = generator_name.unwrap_or_else(|| {
            if algorithm == AlgorithmKind::Canon { "canonical".into() } else { "random".into() }
        });
        GenParam::parse(&name).ok_or_else(|| usage(format!("unknown generator {name:?}")))?
    };
    let start_a = merge(a.start_a, &mut file, "start-a")?.unwrap_or(0);
    let distance: Option<u64> = merge(a.distance, &mut file, "distance")?;
    let start_b = match (merge(a.start_b, &mut file, "start-b")?, distance) {
        (Some(b), None) => b,
        (None, Some(d)) => start_a + d as i64,
        (Some(b), Some(d)) if b - start_a == d as i64 => b,
        (Some(_), Some(_)) => return Err(usage("--start-b and --distance disagree")),
        (None, None) => return Err(usage("give --start-b or --distance")),
    };
    let delay: Option<u64> = merge(a.delay, &mut file, "delay")?;
    let wake_a = merge(a.wake_a, &mut file, "wake-a")?.unwrap_or(1);
    let wake_b = match (merge(a.wake_b, &mut file, "wake-b")?, delay) {
        (Some(w), None) => w,
        (None, Some(d)) => wake_a + d,
        (None, None) => wake_a,
        (Some(_), Some(_)) => return Err(usage("give --wake-b or --delay, not both")),
    };
    let orient_a = orientation(&merge(a.orient_a, &mut file, "orient-a")?.unwrap_or_else(|| "+1".into()))?;
    let orient_b = orientation(&merge(a.orient_b, &mut file, "orient-b")?.unwrap_or_else(|| "+1".into()))?;
    let kappa = kappa(merge(a.kappa, &mut file, "kappa")?)?;
    let max_rounds = merge(a.max_rounds, &mut file, "max-rounds")?;
    if let Some(k) = file.0.keys().next() {
        return Err(usage(format!("unknown scenario key {k:?}")));
    }
    Ok(ScenarioParams {
        algorithm,
        generator,
        seed,
        start_a,
        start_b,
        wake_a,
        wake_b,
        orient_a,
        orient_b,
        kappa,
        max_rounds,
    })
}

fn report_failure(report: &RunReport) {
    match report.outcome {
        Outcome::Timeout { limit } => eprintln!("timeout: no meeting within {limit} rounds (bound {})", report.bound),
        Outcome::Met { elapsed, .. } => eprintln!("bound violated: elapsed {elapsed} > {}", report.bound),
    }
    eprintln!("reproduce: {}", report.params.repro());
}

fn cmd_rendezvous(mut a: RendezvousArgs) -> CmdResult {
    let trace_path = a.trace.take();
    let params = build_params(a)?;
    let report = match run_params(&params) {
        Ok(r) => r,
        Err(RunError::Config(m)) => return Err(usage(m)),
        Err(e) => {
            eprintln!("{e}");
            eprintln!("reproduce: {}", params.repro());
            return Err(Failure::Property);
        }
    };
    if let Some(path) = trace_path {
        let scenario = params.scenario().map_err(usage)?;
        let (_, trace) = run_rendezvous(&scenario).map_err(usage)?;
        fs::write(&path, trace.to_csv()).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    println!("{}", RunReport::csv_header());
    println!("{}", report.csv_row());
    if report.ok() {
        Ok(())
    } else {
        report_failure(&report);
        Err(Failure::Property)
    }
}

fn parse_u64_set(s: &str) -> Result<Vec<u64>, Failure> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, rest)) = part.split_once("..") {
            let (hi, step) = rest.split_once(':').unwrap_or((rest, "1"));
            let parse = |t: &str| t.trim().parse::<u64>().map_err(|e| usage(format!("bad range {part:?}: {e}")));
            let (lo, hi, step) = (parse(lo)?, parse(hi)?, parse(step)?);
            if step == 0 || lo > hi {
                return Err(usage(format!("bad range {part:?}")));
            }
            out.extend((lo..=hi).step_by(step as usize));
        } else {
            out.push(part.parse().map_err(|e| usage(format!("bad value {part:?}: {e}")))?);
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn cmd_sweep(a: SweepArgs) -> CmdResult {
    let algorithm = AlgorithmKind::parse(&a.algorithm)
        .ok_or_else(|| usage(format!("unknown algorithm {:?} (canon, knownD, noD)", a.algorithm)))?;
    let generators = match &a.generators {
        Some(list) => list
            .split(',')
            .map(|g| GenParam::parse(g.trim()).ok_or_else(|| usage(format!("unknown generator {g:?}"))))
            .collect::<Result<Vec<_>, _>>()?,
        None if algorithm == AlgorithmKind::Canon => vec![GenParam::Canonical],
        None => vec![GenParam::Random { bits: 64 }],
    };
    let orientations = a
        .orientations
        .split(',')
        .map(|p| {
            let p = p.trim();
            let mut cs = p.chars().map(|c| orientation(&c.to_string()));
            match (cs.next(), cs.next(), cs.next()) {
                (Some(x), Some(y), None) => Ok((x?, y?)),
                _ => Err(usage(format!("bad orientation pair {p:?}"))),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let spec = SweepSpec {
        algorithm,
        d_values: parse_u64_set(&a.d)?,
        delays: parse_u64_set(&a.delays)?,
        generators,
        orientations,
        trials: a.trials,
        seed: a.seed,
        kappa: kappa(a.kappa)?,
        max_rounds: a.max_rounds,
    };
    spec.validate().map_err(usage)?;
    let rows = match run_sweep(&spec) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return Err(Failure::Property);
        }
    };
    let mut csv = format!("{}\n", CellRow::csv_header());
    for r in &rows {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    match &a.out {
        Some(p) => fs::write(p, &csv).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        None => {
            let _ = std::io::stdout().write_all(csv.as_bytes());
        }
    }
    match rows.iter().find(|r| !r.ok) {
        None => Ok(()),
        Some(bad) => {
            let failing = rows.iter().filter(|r| !r.ok).count();
            eprintln!("{failing} cell(s) failed; first failure: D={} delay={} generator={}", bad.key.d, bad.key.delay, bad.key.generator);
            if let Some(cmd) = &bad.first_failure {
                eprintln!("reproduce: {cmd}");
            }
            Err(Failure::Property)
        }
    }
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    let only = match &a.only {
        Some(s) => {
            let ids = parse_u64_set(s)?;
            if ids.iter().any(|&i| i == 0 || i > u64::from(verify::CRITERIA)) {
                return Err(usage(format!("criteria are numbered 1..={}", verify::CRITERIA)));
            }
            Some(ids.into_iter().map(|i| i as u32).collect())
        }
        None => None,
    };
    let cfg = VerifyConfig {
        kappa: kappa(None)?,
        max_rounds: a.max_rounds,
        scale: if a.quick { Scale::Quick } else { Scale::Full },
        only,
    };
    let reports = verify::run_with(&cfg, |r| {
        println!("{}", r.line());
        for f in &r.failures {
            println!("    {f}");
        }
        if r.failure_count > r.failures.len() {
            println!("    ... and {} more", r.failure_count - r.failures.len());
        }
    });
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| r.id.to_string()).collect();
    if failed.is_empty() {
        println!("all {} criteria passed", reports.len());
        Ok(())
    } else {
        println!("failed criteria: {}", failed.join(", "));
        Err(Failure::Property)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Colour(a) => cmd_colour(a),
        Command::Rendezvous(a) => cmd_rendezvous(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Property) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

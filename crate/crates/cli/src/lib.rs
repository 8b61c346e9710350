//! Command-line front end: benchmarks, error measurement and graph dumps.
//!
//! Exit codes: 0 on success, 1 on a usage error, 2 when the run itself fails.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use odss::harness::{
    bench_query, bench_update, error_protocol, write_csv, BenchOptions, BenchRecord, Distribution, HarnessError,
    Method, WorkloadSpec,
};
use odss::{DynamicGraph, RandomSource, RowRepr, Scaling};

#[derive(Parser, Debug)]
#[command(name = "odss", version, about = "Dynamic subset sampling benchmarks and graph sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Time queries for one method on a generated workload.
    BenchQuery(BenchArgs),
    /// Time insertions and deletions for one method.
    BenchUpdate(BenchArgs),
    /// Maximum absolute error of empirical inclusion rates after updates.
    ErrorTest(BenchArgs),
    /// Query and update timings for several methods.
    Tradeoff(TradeoffArgs),
    /// Dump possible worlds of an edge-list graph.
    World(GraphArgs),
    /// Dump reverse-reachable sets of an edge-list graph.
    Rrset(GraphArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads for independent cells.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,
    #[arg(long, value_enum, default_value_t = Repr::Cdf)]
    row_repr: Repr,
}

#[derive(Args, Debug, Clone)]
struct Workload {
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    mu: f64,
    #[arg(long, value_enum, default_value_t = Dist::Exponential)]
    dist: Dist,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Odss)]
    method: MethodArg,
    #[command(flatten)]
    workload: Workload,
    /// Queries per timed batch, or total queries for error-test.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    repeats: u64,
    /// Insertions (and as many deletions) per batch or before error-test.
    #[arg(long, default_value_t = 1000)]
    updates: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TradeoffArgs {
    /// Methods to run; repeat the flag or separate with commas.
    #[arg(long = "method", value_enum, value_delimiter = ',', default_values_t = [MethodArg::Naive, MethodArg::Hybrid, MethodArg::Odss, MethodArg::Basic])]
    methods: Vec<MethodArg>,
    #[command(flatten)]
    workload: Workload,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    repeats: u64,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    updates: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct GraphArgs {
    /// Edge list with `u v p` lines.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
    #[arg(long, value_enum, default_value_t = Scale::None)]
    scale: Scale,
    #[command(flatten)]
    common: Common,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Lines,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Repr {
    Dense,
    Cdf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
#[value(rename_all = "snake_case")]
enum Scale {
    None,
    OutSum1,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
#[value(rename_all = "snake_case")]
enum Dist {
    Normal,
    HalfNormal,
    Exponential,
    LogNormal,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodArg {
    Naive,
    Hybrid,
    Odss,
    Basic,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Naive => Method::Naive,
            MethodArg::Hybrid => Method::Hybrid,
            MethodArg::Odss => Method::Odss,
            MethodArg::Basic => Method::Basic,
        }
    }
}

impl std::fmt::Display for MethodArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(Method::from(*self).as_str())
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

impl Workload {
    fn spec(&self, seed: u64) -> WorkloadSpec {
        let dist = match self.dist {
            Dist::Normal => Distribution::Normal,
            Dist::HalfNormal => Distribution::HalfNormal,
            Dist::Exponential => Distribution::Exponential,
            Dist::LogNormal => Distribution::LogNormal,
        };
        WorkloadSpec::new(dist, self.n as usize, self.mu, seed)
    }
}

impl Common {
    fn bench_options(&self) -> BenchOptions {
        BenchOptions {
            row_repr: match self.row_repr {
                Repr::Dense => RowRepr::Dense,
                Repr::Cdf => RowRepr::Cdf,
            },
            ..BenchOptions::default()
        }
    }
}

type Failure = Box<dyn std::error::Error>;

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    match execute(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

fn with_output(common: &Common, stdout: &mut dyn Write, body: impl FnOnce(&mut dyn Write) -> Result<(), Failure>) -> Result<(), Failure> {
    match &common.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            body(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => {
            body(stdout)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn emit_records(common: &Common, records: &[BenchRecord], stdout: &mut dyn Write) -> Result<(), Failure> {
    let format = common.format.unwrap_or(Format::Csv);
    with_output(common, stdout, |w| {
        match format {
            Format::Csv => write_csv(w, records)?,
            Format::Lines => {
                for r in records {
                    writeln!(w, "{} {}", r.metric, odss::harness::format_g6(r.value))?;
                }
            }
        }
        Ok(())
    })
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<(), Failure> {
    match cli.command {
        Command::BenchQuery(a) => {
            let spec = a.workload.spec(a.common.seed);
            let records = bench_query(a.method.into(), &spec, a.repeats as usize, &a.common.bench_options())?;
            emit_records(&a.common, &records, stdout)
        }
        Command::BenchUpdate(a) => {
            let spec = a.workload.spec(a.common.seed);
            let records = bench_update(a.method.into(), &spec, a.updates.max(1) as usize, &a.common.bench_options())?;
            emit_records(&a.common, &records, stdout)
        }
        Command::ErrorTest(a) => {
            let spec = a.workload.spec(a.common.seed);
            let method: Method = a.method.into();
            let updates = if method.supports_updates() { a.updates as usize } else { 0 };
            let repr = a.common.bench_options().row_repr;
            let err = error_protocol(method, &spec, updates, &[a.repeats], repr)?[0];
            let record = BenchRecord::new(method.as_str(), spec.n, spec.mu, "max_abs_error", err, spec.seed);
            emit_records(&a.common, &[record], stdout)
        }
        Command::Tradeoff(a) => {
            let records = tradeoff(&a)?;
            emit_records(&a.common, &records, stdout)
        }
        Command::World(a) => graph_dump(&a, stdout, false),
        Command::Rrset(a) => graph_dump(&a, stdout, true),
    }
}

fn tradeoff(a: &TradeoffArgs) -> Result<Vec<BenchRecord>, HarnessError> {
    let spec = a.workload.spec(a.common.seed);
    let opts = a.common.bench_options();
    let cell = |m: MethodArg| -> Result<Vec<BenchRecord>, HarnessError> {
        let method: Method = m.into();
        let mut records = bench_query(method, &spec, a.repeats as usize, &opts)?;
        if method.supports_updates() {
            records.extend(bench_update(method, &spec, a.updates as usize, &opts)?);
        }
        Ok(records)
    };
    let jobs = (a.common.jobs as usize).min(a.methods.len()).max(1);
    let mut results: Vec<Option<Result<Vec<BenchRecord>, HarnessError>>> = a.methods.iter().map(|_| None).collect();
    std::thread::scope(|scope| {
        for (worker, chunk) in results.chunks_mut(a.methods.len().div_ceil(jobs)).enumerate() {
            let offset = worker * a.methods.len().div_ceil(jobs);
            let cell = &cell;
            let methods = &a.methods;
            scope.spawn(move || {
                for (i, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(cell(methods[offset + i]));
                }
            });
        }
    });
    let mut records = Vec::new();
    for r in results {
        records.extend(r.expect("every cell runs")?);
    }
    Ok(records)
}

fn graph_dump(a: &GraphArgs, stdout: &mut dyn Write, reverse: bool) -> Result<(), Failure> {
    let scaling = match a.scale {
        Scale::None => Scaling::None,
        Scale::OutSum1 => Scaling::OutSum1,
    };
    let mut graph = DynamicGraph::load_edge_list(&a.graph, scaling)?;
    if reverse && graph.node_count() == 0 {
        return Err("the graph has no nodes".into());
    }
    let mut src = RandomSource::new(a.common.seed);
    let format = a.common.format.unwrap_or(Format::Lines);
    with_output(&a.common, stdout, |w| {
        if format == Format::Csv {
            writeln!(w, "{}", if reverse { "sample,node" } else { "sample,u,v" })?;
        }
        for sample in 0..a.count {
            if reverse {
                let set = graph.rr_set(&mut src)?;
                match format {
                    Format::Lines => writeln!(w, "{}", join(set.iter()))?,
                    Format::Csv => {
                        for v in set {
                            writeln!(w, "{sample},{v}")?;
                        }
                    }
                }
            } else {
                let world = graph.possible_world(&mut src);
                match format {
                    Format::Lines => writeln!(w, "{}", join(world.iter().map(|(u, v)| format!("{u}:{v}"))))?,
                    Format::Csv => {
                        for (u, v) in world {
                            writeln!(w, "{sample},{u},{v}")?;
                        }
                    }
                }
            }
        }
        Ok(())
    })
}

fn join<T: ToString>(items: impl Iterator<Item = T>) -> String {
    items.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Entry point used by the binary.
pub fn main_with_std() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

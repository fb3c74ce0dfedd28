use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ramexp::arith::{build_table, cache, ArithTables, TableKind, TableValues};
use ramexp::asympt::{run_suite, Suite, DEFAULT_GRID};
use ramexp::parseval::{run_experiment, ExperimentConfig, PairSpec, DEFAULT_TAIL_TARGET};
use ramexp::ramanujan::{ramanujan_sum_divisor, ramanujan_sum_holder};
use ramexp::report;

mod config;

use config::{check_desk_scale, parse_config, parse_grid, usage, UsageError};

/// Default table limit for `verify`, `table` and `crn`.
const DEFAULT_TABLE_LIMIT: u64 = 2_000_000;

#[derive(Parser)]
#[command(
    name = "ramexp",
    version,
    about = "Ramanujan sums, expansions and Parseval-type convolution checks"
)]
struct Cli {
    /// Worker threads (default: one per core). Results do not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..=1024))]
    threads: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the Ramanujan sum c_r(n).
    Crn {
        /// Modulus r ≥ 1.
        r: u64,
        /// Argument n ≥ 0.
        n: u64,
    },
    /// Compare Σ f(n)g(n+h) with its predicted main term over a grid of N.
    Parseval(ParsevalArgs),
    /// Run a verification suite with its gates.
    Verify(VerifyArgs),
    /// Build an arithmetic-function table and write it to a file.
    Table(TableArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Pair {
    Sigma,
    Jordan,
    Custom,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct ParsevalArgs {
    /// Pair under test: sigma_s(n)/n^s, phi_s(n)/n^s, or a coefficient file.
    #[arg(long, value_enum)]
    pair: Option<Pair>,
    /// Parameter of f (sigma and jordan pairs) [default: 1]
    #[arg(long)]
    s: Option<f64>,
    /// Parameter of g (sigma and jordan pairs) [default: 1]
    #[arg(long)]
    t: Option<f64>,
    /// Shift h [default: 0]
    #[arg(long)]
    h: Option<u64>,
    /// Comma-separated, strictly increasing N values; scientific notation
    /// is accepted [default: 1e4,1e5,1e6]
    #[arg(long)]
    grid: Option<String>,
    /// JSON coefficient file for --pair custom.
    #[arg(long)]
    pair_file: Option<PathBuf>,
    /// Scale of the per-N series tail target (times shape(N)/N) [default: 1e-9]
    #[arg(long)]
    tail_target: Option<f64>,
    /// TOML file with any of: pair, s, t, h, grid, tail_target, pair_file,
    /// allow_large. Flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Permit grid values above 10^7.
    #[arg(long)]
    allow_large: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Lemma1,
    Phi,
    Mertens,
    Dk,
    Weighted,
    Ingham,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_enum)]
    suite: SuiteArg,
    /// Comma-separated grid [default: 1e4,1e5,1e6]
    #[arg(long)]
    grid: Option<String>,
    /// Directory for CSV and JSON reports.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Largest table the suites may build.
    #[arg(long, default_value_t = DEFAULT_TABLE_LIMIT)]
    table_limit: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableArg {
    Mobius,
    Phi,
    Divisor,
    Sigma,
    Jordan,
    Mertens,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    /// Binary cache readable by the library.
    Bin,
    Csv,
}

#[derive(Args)]
struct TableArgs {
    #[arg(value_enum)]
    kind: TableArg,
    /// Tabulate n = 1..=limit.
    #[arg(long)]
    limit: u64,
    /// k for the divisor function d_k.
    #[arg(long, default_value_t = 2)]
    k: u32,
    /// s for sigma_s and J_s.
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "bin")]
    format: TableFormat,
    /// Permit limits above the default table limit.
    #[arg(long)]
    allow_large: bool,
}

fn open_output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_crn(r: u64, n: u64) -> anyhow::Result<bool> {
    if r == 0 {
        bail!(usage("modulus r must be at least 1"));
    }
    if r > DEFAULT_TABLE_LIMIT {
        bail!(usage(format!(
            "modulus r must not exceed {DEFAULT_TABLE_LIMIT}"
        )));
    }
    let tables = ArithTables::new(r as usize)?;
    let a = ramanujan_sum_divisor(r, n, &tables)?;
    let b = ramanujan_sum_holder(r, n, &tables)?;
    if a != b {
        bail!("formulas disagree for c_{r}({n}): divisor sum {a}, closed form {b}");
    }
    println!("{a}");
    Ok(true)
}

fn cmd_parseval(args: ParsevalArgs) -> anyhow::Result<bool> {
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            parse_config(&path.display().to_string(), &text)?
        }
        None => Default::default(),
    };
    let pair = match args.pair {
        Some(p) => p,
        None => match file.pair.as_deref() {
            Some("jordan") => Pair::Jordan,
            Some("custom") => Pair::Custom,
            _ => Pair::Sigma,
        },
    };
    let s = args.s.or(file.s).unwrap_or(1.0);
    let t = args.t.or(file.t).unwrap_or(1.0);
    let h = args.h.or(file.h).unwrap_or(0);
    let grid = match &args.grid {
        Some(text) => parse_grid(text).map_err(|e| usage(format!("--grid: {e}")))?,
        None => file.grid.clone().unwrap_or_else(|| DEFAULT_GRID.to_vec()),
    };
    check_desk_scale(&grid, args.allow_large || file.allow_large.unwrap_or(false))?;
    let pair = match pair {
        Pair::Sigma | Pair::Jordan => {
            if !(s > 0.0 && t > 0.0 && s.is_finite() && t.is_finite()) {
                bail!(usage(format!(
                    "s and t must be positive, got s = {s}, t = {t}"
                )));
            }
            if pair == Pair::Sigma {
                PairSpec::Sigma { s, t }
            } else {
                PairSpec::Jordan { s, t }
            }
        }
        Pair::Custom => {
            let path = args
                .pair_file
                .as_ref()
                .or(file.pair_file.as_ref())
                .ok_or_else(|| usage("--pair custom needs --pair-file"))?;
            PairSpec::from_json_file(path).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
    };
    let mut cfg = ExperimentConfig::new(pair, h, grid);
    cfg.tail_target = args
        .tail_target
        .or(file.tail_target)
        .unwrap_or(DEFAULT_TAIL_TARGET);
    cfg.validate()?;

    let run = run_experiment(&cfg)?;
    let mut out = open_output(args.output.as_deref())?;
    match args.format {
        Format::Csv => report::write_experiment_csv(&run, &mut out)?,
        Format::Json => report::write_json(&report::experiment_json(&run)?, &mut out)?,
    }
    out.flush()?;
    drop(out);

    let mut passed = true;
    if !run.growth.passed {
        eprintln!(
            "FAIL normalized error grows across the grid: {:?}",
            run.growth.normalized
        );
        passed = false;
    }
    if let Some(c) = &run.cross_check {
        let status = if c.passed { "PASS" } else { "FAIL" };
        eprintln!(
            "{status} series value {} vs {} = {} (difference {:.3e}, tolerance {:.3e})",
            report::fmt_num(c.series_value),
            c.reference_name,
            report::fmt_num(c.reference),
            c.difference,
            c.tolerance
        );
        passed &= c.passed;
    }
    if let Some(fit) = &run.fit {
        eprintln!(
            "fitted error exponent {:.4} ({} points dropped)",
            fit.slope, fit.dropped
        );
    }
    if run.reports.iter().any(|r| r.capped) {
        eprintln!("note: series truncation hit the 2^26 cap; tails are reported per row");
    }
    Ok(passed)
}

fn suites(arg: SuiteArg) -> Vec<Suite> {
    match arg {
        SuiteArg::All => Suite::ALL.to_vec(),
        SuiteArg::Lemma1 => vec![Suite::Lemma1],
        SuiteArg::Phi => vec![Suite::Phi],
        SuiteArg::Mertens => vec![Suite::Mertens],
        SuiteArg::Dk => vec![Suite::Dk],
        SuiteArg::Weighted => vec![Suite::Weighted],
        SuiteArg::Ingham => vec![Suite::Ingham],
    }
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<bool> {
    let grid = match &args.grid {
        Some(text) => parse_grid(text).map_err(|e| usage(format!("--grid: {e}")))?,
        None => DEFAULT_GRID.to_vec(),
    };
    // the shifted divisor sum reads one entry past the grid
    let top = grid[grid.len() - 1] + 1;
    if top > args.table_limit {
        bail!(usage(format!(
            "grid needs tables up to {top}, above the table limit {}; raise --table-limit",
            args.table_limit
        )));
    }
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let mut passed = true;
    for suite in suites(args.suite) {
        let outcome = run_suite(suite, &grid)?;
        for v in &outcome.verdicts {
            let status = if v.passed { "PASS" } else { "FAIL" };
            println!("{status} {suite}: {} ({})", v.name, v.detail);
        }
        passed &= outcome.passed();
        if let Some(dir) = &args.out_dir {
            for check in &outcome.checks {
                let path = dir.join(format!("{}.csv", check.label));
                report::write_asympt_csv(check, open_output(Some(&path))?)?;
            }
            if let Some(l) = &outcome.lemma1 {
                report::write_lemma1_csv(l, open_output(Some(&dir.join("lemma1.csv")))?)?;
            }
            let path = dir.join(format!("{suite}.json"));
            report::write_json(&report::suite_json(&outcome)?, open_output(Some(&path))?)?;
        }
    }
    Ok(passed)
}

fn cmd_table(args: TableArgs) -> anyhow::Result<bool> {
    if args.limit > DEFAULT_TABLE_LIMIT && !args.allow_large {
        bail!(usage(format!(
            "limit {} exceeds {DEFAULT_TABLE_LIMIT}; pass --allow-large to build it anyway",
            args.limit
        )));
    }
    let kind = match args.kind {
        TableArg::Mobius => TableKind::Mobius,
        TableArg::Phi => TableKind::Phi,
        TableArg::Divisor => TableKind::DivisorK { k: args.k },
        TableArg::Sigma => TableKind::SigmaS { s: args.s },
        TableArg::Jordan => TableKind::JordanS { s: args.s },
        TableArg::Mertens => TableKind::Mertens,
    };
    let table = build_table(kind, args.limit as usize)?;
    let mut out = open_output(Some(&args.output))?;
    match args.format {
        TableFormat::Bin => cache::write_table(&table, &mut out)?,
        TableFormat::Csv => {
            writeln!(out, "n,value")?;
            match table.values() {
                TableValues::Int(v) => {
                    for (i, x) in v.iter().enumerate() {
                        writeln!(out, "{},{x}", i + 1)?;
                    }
                }
                TableValues::Real(v) => {
                    for (i, x) in v.iter().enumerate() {
                        writeln!(out, "{},{}", i + 1, report::fmt_num(*x))?;
                    }
                }
            }
        }
    }
    out.flush()?;
    Ok(true)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Crn { r, n } => cmd_crn(r, n),
        Command::Parseval(args) => cmd_parseval(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Table(args) => cmd_table(args),
    }
}

fn is_usage(err: &anyhow::Error) -> bool {
    err.downcast_ref::<UsageError>().is_some()
        || matches!(
            err.downcast_ref::<ramexp::Error>(),
            Some(ramexp::Error::InvalidArgument(_) | ramexp::Error::OutOfRange { .. })
        )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build()
            .map_err(anyhow::Error::from)
            .and_then(|pool| pool.install(|| run(cli))),
        None => run(cli),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if is_usage(&err) { 2 } else { 1 })
        }
    }
}

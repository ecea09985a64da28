use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use relaynet::sim::{self, overhead, scenarios, RunReport, ScenarioConfig};

#[derive(Parser)]
#[command(name = "relaynet", version, about = "Simulate fair relayed content delivery")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and report its verdicts.
    Run {
        /// Scenario file, or the name of a bundled scenario.
        #[arg(long)]
        config: String,
        /// Overrides the seed in the scenario.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for trace.jsonl and metrics.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the full report as JSON instead of a summary.
        #[arg(long)]
        json: bool,
    },
    /// Byte overhead table, closed form against a measured run.
    Overhead {
        /// Hop count or inclusive range, e.g. `10` or `1-10`.
        #[arg(long, default_value = "1-10")]
        hops: String,
        #[arg(long, value_delimiter = ',', default_value = "2048,65536")]
        chunk_sizes: Vec<usize>,
        #[arg(long, default_value_t = 8)]
        chunk_count: u32,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Skip the measured runs.
        #[arg(long)]
        analytic_only: bool,
    },
    /// Run every scenario of a suite and summarize.
    Matrix {
        /// Directory of scenario files, or `bundled`.
        #[arg(long, default_value = "bundled")]
        suite: String,
        /// Run scenarios in parallel.
        #[arg(long)]
        parallel: bool,
        /// Write the summary as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Command::Run { config, seed, out, json } => cmd_run(&config, seed, out.as_deref(), json),
        Command::Overhead {
            hops,
            chunk_sizes,
            chunk_count,
            csv,
            analytic_only,
        } => cmd_overhead(&hops, &chunk_sizes, chunk_count, csv.as_deref(), analytic_only),
        Command::Matrix { suite, parallel, out } => cmd_matrix(&suite, parallel, out.as_deref()),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load(config: &str) -> Result<ScenarioConfig> {
    let path = Path::new(config);
    if path.exists() {
        return Ok(ScenarioConfig::load(path)?);
    }
    match scenarios::bundled(config) {
        Some(cfg) => Ok(cfg?),
        None => bail!(
            "no file `{config}` and no bundled scenario of that name (bundled: {})",
            scenarios::names().collect::<Vec<_>>().join(", ")
        ),
    }
}

fn cmd_run(config: &str, seed: Option<u64>, out: Option<&Path>, json: bool) -> Result<bool> {
    let cfg = load(config)?;
    let rep = match seed {
        Some(s) => sim::run_seeded(&cfg, s),
        None => sim::run(&cfg),
    }
    .with_context(|| format!("running {}", cfg.name))?;

    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let trace = dir.join("trace.jsonl");
        sim::write_jsonl(&rep.trace, BufWriter::new(File::create(&trace)?))
            .with_context(|| format!("writing {}", trace.display()))?;
        fs::write(dir.join("metrics.json"), serde_json::to_vec_pretty(&rep)?)?;
    }

    if json {
        serde_json::to_writer_pretty(io::stdout().lock(), &rep)?;
        println!();
    } else {
        print_report(&rep);
    }
    Ok(rep.verdicts.all_hold())
}

fn print_report(rep: &RunReport) {
    println!("scenario {} (seed {})", rep.name, rep.seed);
    println!("outcome  {}  rounds {}  content {}", rep.outcome.as_str(), rep.metrics.rounds, if rep.content_ok { "ok" } else { "missing" });
    println!("judge    {}", judge_summary(rep));
    let deltas: Vec<String> = rep.metrics.balance_deltas.iter().map(|(p, d)| format!("{p} {d:+}")).collect();
    println!("balances {}", deltas.join(", "));
    for (who, a) in &rep.aborts {
        println!("abort    {who} in round {}: {}", a.round, a.reason);
    }
    for (name, v) in rep.verdicts.all() {
        let tag = match (v.applicable, v.holds) {
            (false, _) => "n/a ",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        println!("{tag} {name}: {}", v.detail);
    }
}

/// Accepted judge operations, e.g. `enforce:1 log:3`, or `none`.
fn judge_summary(rep: &RunReport) -> String {
    let mut ops = std::collections::BTreeMap::<&str, u32>::new();
    for per in rep.metrics.judge.values() {
        for (op, c) in per {
            *ops.entry(op.as_str()).or_default() += c.calls;
        }
    }
    if ops.is_empty() {
        return "none".into();
    }
    ops.iter().map(|(o, n)| format!("{o}:{n}")).collect::<Vec<_>>().join(" ")
}

fn parse_range(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s.split_once('-').unwrap_or((s, s));
    let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
    if a == 0 || a > b {
        bail!("hop range `{s}` must be ascending and start at 1");
    }
    Ok((a, b))
}

fn cmd_overhead(hops: &str, sizes: &[usize], count: u32, csv: Option<&Path>, analytic_only: bool) -> Result<bool> {
    let (lo, hi) = parse_range(hops)?;
    if count == 0 || sizes.contains(&0) {
        bail!("chunk size and count must be positive");
    }
    let mut rows = Vec::new();
    let mut all_match = true;
    for &size in sizes {
        for h in lo..=hi {
            let model = overhead::analytic(h, size, count);
            let agrees = if analytic_only {
                None
            } else {
                let m = overhead::measured(h, size, count)?;
                Some(m == model)
            };
            all_match &= agrees.unwrap_or(true);
            rows.push((model, agrees));
        }
    }

    println!(
        "{:>4} {:>7} {:>10} {:>9} {:>10} {:>10} {:>9}  measured",
        "hops", "chunk", "B/chunk", "last %", "setup B", "payment B", "total %"
    );
    for (r, agrees) in &rows {
        println!(
            "{:>4} {:>7} {:>10} {:>9.3} {:>10} {:>10} {:>9.3}  {}",
            r.hops,
            r.chunk_size,
            r.per_chunk_at_customer,
            100.0 * r.last_link_ratio,
            r.setup_bytes,
            r.payment_bytes,
            100.0 * r.total_ratio,
            match agrees {
                None => "-",
                Some(true) => "match",
                Some(false) => "MISMATCH",
            }
        );
    }
    if let Some(path) = csv {
        let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        writeln!(w, "hops,chunk_size,chunk_count,per_chunk_at_customer,setup_bytes,delivery_overhead,payment_bytes,total_bytes,payload_bytes,total_ratio,last_link_ratio,measured_match")?;
        for (r, agrees) in &rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{:.6},{:.6},{}",
                r.hops,
                r.chunk_size,
                r.chunk_count,
                r.per_chunk_at_customer,
                r.setup_bytes,
                r.delivery_overhead,
                r.payment_bytes,
                r.total_bytes,
                r.payload_bytes,
                r.total_ratio,
                r.last_link_ratio,
                agrees.map_or(String::new(), |b| b.to_string())
            )?;
        }
    }
    Ok(all_match)
}

#[derive(Serialize)]
struct MatrixRow {
    name: String,
    outcome: Option<&'static str>,
    judge_ops: String,
    passed: bool,
    failures: Vec<String>,
    trace_digest: Option<String>,
}

fn suite(spec: &str) -> Result<Vec<ScenarioConfig>> {
    if spec == "bundled" {
        return Ok(scenarios::all());
    }
    let mut files: Vec<PathBuf> = fs::read_dir(spec)
        .with_context(|| format!("reading suite {spec}"))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("suite {spec} has no .toml scenarios");
    }
    files
        .iter()
        .map(|p| ScenarioConfig::load(p).with_context(|| format!("loading {}", p.display())))
        .collect()
}

fn matrix_row(cfg: &ScenarioConfig) -> MatrixRow {
    match sim::run(cfg) {
        Ok(rep) => MatrixRow {
            name: cfg.name.clone(),
            outcome: Some(rep.outcome.as_str()),
            judge_ops: judge_summary(&rep),
            passed: rep.verdicts.all_hold(),
            failures: rep
                .verdicts
                .all()
                .iter()
                .filter(|(_, v)| !v.passed())
                .map(|(n, v)| format!("{n}: {}", v.detail))
                .collect(),
            trace_digest: Some(rep.trace_digest),
        },
        Err(e) => MatrixRow {
            name: cfg.name.clone(),
            outcome: None,
            judge_ops: "-".into(),
            passed: false,
            failures: vec![e.to_string()],
            trace_digest: None,
        },
    }
}

fn cmd_matrix(spec: &str, parallel: bool, out: Option<&Path>) -> Result<bool> {
    let cfgs = suite(spec)?;
    let rows: Vec<MatrixRow> = if parallel {
        cfgs.par_iter().map(matrix_row).collect()
    } else {
        cfgs.iter().map(matrix_row).collect()
    };
    println!("{:<20} {:<24} {:<28} verdicts", "scenario", "outcome", "judge ops");
    for r in &rows {
        println!(
            "{:<20} {:<24} {:<28} {}",
            r.name,
            r.outcome.unwrap_or("error"),
            r.judge_ops,
            if r.passed { "pass" } else { "FAIL" }
        );
        for f in &r.failures {
            println!("    {f}");
        }
    }
    let ok = rows.iter().all(|r| r.passed);
    println!("{}/{} scenarios pass", rows.iter().filter(|r| r.passed).count(), rows.len());
    if let Some(path) = out {
        fs::write(path, serde_json::to_vec_pretty(&rows)?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ok)
}

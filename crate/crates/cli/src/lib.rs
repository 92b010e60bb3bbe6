//! Command-line front end: single runs, parameter sweeps, bound verification
//! and side-by-side comparisons.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use masquerade::analysis::{validate_params, verify_run, BoundParams, BoundsReport};
use masquerade::engine::{run_phased_epochs, run_scenario, EpochBoundary, Mode, ScenarioConfig, World};
use masquerade::io::{self, load_config_map, summarize, ConfigMap, SummaryStats, NUMERIC_KEYS};
use masquerade::{Currency, Error, Fixed4};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "masquerade", version, about = "Seeded simulator of token-ordered MEV transactions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Scenario config file (flat key=value).
    #[arg(long)]
    config: PathBuf,
    /// Directory for output files. Nothing is written without it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Run one scenario per value of a numeric key.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        key: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Replicates per value, seeded `seed ^ i`.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
    },
    /// Check the analytic wealth bounds on the phased engine.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 30)]
        epochs: u32,
        #[arg(long, default_value_t = 1)]
        seeds: u64,
    },
    /// Run several modes on the same opportunity stream.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "masquerade,status-quo,ideal")]
        modes: Vec<String>,
        /// Epochs listed when continuous and phased runs are compared.
        #[arg(long, default_value_t = 20)]
        epochs: u32,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_config_error() { EXIT_CONFIG } else { EXIT_IO };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: EXIT_IO, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code. Reports go to `out`, errors to `err`.
pub fn dispatch_to<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Run { common } => cmd_run(&common, out),
        Command::Sweep { common, key, values, seeds } => cmd_sweep(&common, &key, &values, seeds, out),
        Command::Verify { common, epochs, seeds } => cmd_verify(&common, epochs, seeds, out),
        Command::Compare { common, modes, epochs } => cmd_compare(&common, &modes, epochs, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

/// [`dispatch_to`] on the process's stdout and stderr.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    dispatch_to(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

fn load(common: &Common) -> Result<(ConfigMap, ScenarioConfig), Failure> {
    let map = load_config_map(&common.config)?;
    let mut config = map.build()?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok((map, config))
}

fn out_dir(common: &Common) -> Result<Option<&Path>, Failure> {
    match &common.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            Ok(Some(dir.as_path()))
        }
        None => Ok(None),
    }
}

/// One line of a summary table.
#[derive(Clone, Debug)]
pub struct SummaryRow {
    pub label: String,
    pub seed: u64,
    pub stats: SummaryStats<Fixed4>,
}

const TABLE_HEADER: [&str; 10] = [
    "label",
    "mode",
    "seed",
    "user_initial",
    "user_final",
    "adversary_initial",
    "adversary_final",
    "mev_rounds",
    "frontrun_pct",
    "backrun_pct",
];

fn table_cells(row: &SummaryRow) -> [String; 10] {
    let s = &row.stats;
    [
        row.label.clone(),
        s.mode.to_string(),
        row.seed.to_string(),
        s.initial.user.to_string(),
        s.final_wealth.user.to_string(),
        s.initial.adversary.to_string(),
        s.final_wealth.adversary.to_string(),
        s.mev_rounds.to_string(),
        format!("{:.2}", s.frontrun_pct),
        format!("{:.2}", s.backrun_pct),
    ]
}

/// Summary table as CSV.
pub fn table_csv(rows: &[SummaryRow]) -> String {
    let mut s = TABLE_HEADER.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&table_cells(r).join(","));
        s.push('\n');
    }
    s
}

/// Summary table as right-aligned text columns.
pub fn table_text(rows: &[SummaryRow]) -> String {
    let header: Vec<String> = TABLE_HEADER.iter().map(|h| h.to_string()).collect();
    let body: Vec<Vec<String>> = rows.iter().map(|r| table_cells(r).to_vec()).collect();
    aligned(&header, &body)
}

fn aligned(header: &[String], body: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in body {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut s = String::new();
    for row in std::iter::once(header).chain(body.iter().map(Vec::as_slice)) {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(s, "{}", cells.join("  ").trim_end());
    }
    s
}

fn emit_table(rows: &[SummaryRow], dir: Option<&Path>, out: &mut dyn Write) -> Result<(), Failure> {
    let text = table_text(rows);
    write!(out, "{text}")?;
    if let Some(dir) = dir {
        fs::write(dir.join("summary.csv"), table_csv(rows))?;
        fs::write(dir.join("summary.txt"), text)?;
    }
    Ok(())
}

fn cmd_run(common: &Common, out: &mut dyn Write) -> Result<i32, Failure> {
    let (_, config) = load(common)?;
    let dir = out_dir(common)?;
    let series = match config.mode {
        Mode::Masquerade => {
            let run = World::<Fixed4>::new(&config)?.run()?;
            if let Some(dir) = dir {
                io::write_epochs(&run.epochs(), &dir.join("epochs.csv"))?;
            }
            run.series
        }
        _ => run_scenario::<Fixed4>(&config)?,
    };
    if let Some(dir) = dir {
        io::write_metrics(&series, &dir.join("metrics.csv"))?;
    }
    let row = SummaryRow { label: "run".into(), seed: config.seed, stats: summarize(&series) };
    emit_table(&[row], dir, out)?;
    Ok(EXIT_OK)
}

fn cmd_sweep(common: &Common, key: &str, values: &[String], seeds: u64, out: &mut dyn Write) -> Result<i32, Failure> {
    if !NUMERIC_KEYS.contains(&key) {
        return Err(usage(format!("`{key}` is not a numeric config key")));
    }
    if seeds == 0 {
        return Err(usage("--seeds must be positive"));
    }
    let (map, base) = load(common)?;
    let dir = out_dir(common)?;

    let mut jobs = Vec::new();
    for v in values {
        let mut m = map.clone();
        m.set(key, v.trim())?;
        // a swept token price also moves a threshold that was left to default
        if key == "y" && map.get("tau").is_none() {
            m.set("tau", v.trim())?;
        }
        let mut config = m.build()?;
        config.seed = base.seed;
        for s in 0..seeds {
            jobs.push((format!("{key}={}", v.trim()), config.for_scenario(s)));
        }
    }

    let results: Vec<Result<(String, u64, masquerade::MetricsSeries), Error>> = jobs
        .into_par_iter()
        .map(|(label, config)| run_scenario::<Fixed4>(&config).map(|series| (label, config.seed, series)))
        .collect();

    let mut rows = Vec::new();
    for r in results {
        let (label, seed, series) = r?;
        if let Some(dir) = dir {
            io::write_metrics(&series, &dir.join(format!("metrics_{label}_seed{seed}.csv")))?;
        }
        rows.push(SummaryRow { label, seed, stats: summarize(&series) });
    }
    emit_table(&rows, dir, out)?;
    Ok(EXIT_OK)
}

fn cmd_verify(common: &Common, epochs: u32, seeds: u64, out: &mut dyn Write) -> Result<i32, Failure> {
    let (_, config) = load(common)?;
    let dir = out_dir(common)?;
    let params = BoundParams::from_config(&config)
        .ok_or_else(|| Failure { code: EXIT_CONFIG, message: "bounds need a constant opportunity value".into() })?;
    if let Err(failed) = validate_params(&params) {
        writeln!(out, "parameters violate {} precondition(s):", failed.len())?;
        for c in failed {
            writeln!(out, "  {c}")?;
        }
        return Ok(EXIT_VIOLATION);
    }

    let phased = ScenarioConfig { mode: Mode::Phased, ..config.clone() };
    let reports: Vec<Result<BoundsReport<f64>, Error>> = (0..seeds.max(1))
        .into_par_iter()
        .map(|i| {
            let boundaries: Vec<EpochBoundary<f64>> = run_phased_epochs(&phased.for_scenario(i), epochs as usize + 1)?;
            Ok(verify_run(&boundaries, &params).expect("parameters already validated"))
        })
        .collect();

    let mut total = 0usize;
    let mut proof_total = 0usize;
    for (i, r) in reports.into_iter().enumerate() {
        let report = r?;
        total += report.violations.len();
        proof_total += report.proof_invariant_violations.len();
        let seed = phased.seed ^ i as u64;
        writeln!(
            out,
            "seed {seed}: {} epochs, {} bound violation(s), {} proof-invariant violation(s)",
            report.rows.len(),
            report.violations.len(),
            report.proof_invariant_violations.len()
        )?;
        for v in &report.violations {
            writeln!(out, "  epoch {}: {}", v.epoch, v.kind.as_str())?;
        }
        if let Some(dir) = dir {
            io::write_bounds_report(&report, &dir.join(format!("bounds_seed{seed}.csv")))?;
        }
    }
    writeln!(out, "total: {total} bound violation(s), {proof_total} proof-invariant violation(s)")?;
    Ok(if total == 0 { EXIT_OK } else { EXIT_VIOLATION })
}

fn cmd_compare(common: &Common, modes: &[String], epochs: u32, out: &mut dyn Write) -> Result<i32, Failure> {
    let (_, config) = load(common)?;
    let modes: Vec<Mode> =
        modes.iter().map(|m| m.trim().parse::<Mode>()).collect::<Result<_, _>>().map_err(|e| usage(e.to_string()))?;
    if modes.is_empty() {
        return Err(usage("--modes is empty"));
    }
    let dir = out_dir(common)?;

    let runs: Vec<Result<masquerade::MetricsSeries, Error>> =
        modes.par_iter().map(|&mode| run_scenario::<Fixed4>(&ScenarioConfig { mode, ..config.clone() })).collect();
    let mut rows = Vec::new();
    for (mode, r) in modes.iter().zip(runs) {
        let series = r?;
        if let Some(dir) = dir {
            io::write_metrics(&series, &dir.join(format!("metrics_{mode}.csv")))?;
        }
        rows.push(SummaryRow { label: mode.to_string(), seed: config.seed, stats: summarize(&series) });
    }
    emit_table(&rows, dir, out)?;

    if modes.contains(&Mode::Masquerade) && modes.contains(&Mode::Phased) {
        let cont = World::<Fixed4>::new(&ScenarioConfig { mode: Mode::Masquerade, ..config.clone() })?.run()?.epochs();
        let phased =
            run_phased_epochs::<f64>(&ScenarioConfig { mode: Mode::Phased, ..config.clone() }, epochs as usize + 1)?;
        let header: Vec<String> = ["epoch", "continuous_w_u", "phased_w_u", "difference"].map(String::from).to_vec();
        let body: Vec<Vec<String>> = cont
            .iter()
            .filter(|e| !e.terminal)
            .zip(&phased)
            .map(|(c, p)| {
                let cu = c.user_wealth.as_f64();
                vec![
                    c.index.to_string(),
                    format!("{cu:.4}"),
                    format!("{:.4}", p.user_wealth),
                    format!("{:.4}", p.user_wealth - cu),
                ]
            })
            .collect();
        writeln!(out)?;
        write!(out, "{}", aligned(&header, &body))?;
        if let Some(dir) = dir {
            let mut csv = header.join(",");
            csv.push('\n');
            for row in &body {
                csv.push_str(&row.join(","));
                csv.push('\n');
            }
            fs::write(dir.join("phase_compare.csv"), csv)?;
        }
    }
    Ok(EXIT_OK)
}

//! Config files, opportunity-value traces, and metrics output.

mod config;

use std::fs::File;
use std::io::Write;
use std::path::Path;

pub use config::{load_config, load_config_map, ConfigMap, CONFIG_KEYS, NUMERIC_KEYS};

use crate::analysis::BoundsReport;
use crate::engine::{EpochBoundary, MetricsSeries, Mode, RoundRecord};
use crate::error::{Error, Result};
use crate::num::Currency;
use crate::protocol::ByParty;

/// Opportunity values read from a trace file, in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceFile {
    pub values: Vec<f64>,
}

/// Reads a CSV trace with a `value` column. Other columns, such as `round`,
/// are ignored. Rows are numbered from 1, not counting the header.
pub fn load_trace(path: &Path) -> Result<TraceFile> {
    let mut reader = csv::Reader::from_path(path)?;
    let column = reader
        .headers()?
        .iter()
        .position(|h| h.trim() == "value")
        .ok_or_else(|| Error::MalformedRow { row: 0, reason: "missing `value` column".into() })?;
    let mut values = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::MalformedRow { row, reason: e.to_string() })?;
        let field = rec.get(column).unwrap_or("").trim();
        let v: f64 =
            field.parse().map_err(|_| Error::MalformedRow { row, reason: format!("`{field}` is not a number") })?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::MalformedRow { row, reason: format!("value {v} must be positive") });
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::EmptyTrace(path.to_path_buf()));
    }
    Ok(TraceFile { values })
}

/// Header of the per-round metrics CSV.
pub const METRICS_HEADER: [&str; 11] = [
    "round",
    "w_u_liquid",
    "w_u_total",
    "w_a_liquid",
    "w_a_total",
    "mev_made",
    "frontrun",
    "backrun",
    "tokens_bought_u",
    "tokens_bought_a",
    "epoch",
];

fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

fn record_row<C: Currency>(r: &RoundRecord<C>) -> Vec<String> {
    vec![
        r.round.to_string(),
        r.w_u_liquid.to_string(),
        r.w_u_total.to_string(),
        r.w_a_liquid.to_string(),
        r.w_a_total.to_string(),
        flag(r.mev_made),
        flag(r.frontrun),
        flag(r.backrun),
        r.tokens_bought_u.to_string(),
        r.tokens_bought_a.to_string(),
        r.epoch.to_string(),
    ]
}

/// Writes per-round records to any writer.
pub fn write_metrics_to<C: Currency, W: Write>(series: &MetricsSeries<C>, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for r in &series.records {
        w.write_record(record_row(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the metrics CSV. The `fatal` flag is not part of the format.
pub fn write_metrics<C: Currency>(series: &MetricsSeries<C>, path: &Path) -> Result<()> {
    write_metrics_to(series, File::create(path)?)
}

/// Reads records written by [`write_metrics`].
pub fn read_metrics<C: Currency>(path: &Path) -> Result<Vec<RoundRecord<C>>> {
    let mut reader = csv::Reader::from_path(path)?;
    if reader.headers()?.iter().ne(METRICS_HEADER) {
        return Err(Error::MalformedRow { row: 0, reason: "unexpected metrics header".into() });
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let bad = |col: &str| Error::MalformedRow { row, reason: format!("bad `{col}`") };
        let field = |k: usize| rec.get(k).unwrap_or("");
        let int = |k: usize| field(k).parse::<u128>().map_err(|_| bad(METRICS_HEADER[k]));
        let money = |k: usize| field(k).parse::<C>().map_err(|_| bad(METRICS_HEADER[k]));
        let boolean = |k: usize| match field(k) {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(bad(METRICS_HEADER[k])),
        };
        out.push(RoundRecord {
            round: int(0)?,
            w_u_liquid: money(1)?,
            w_u_total: money(2)?,
            w_a_liquid: money(3)?,
            w_a_total: money(4)?,
            mev_made: boolean(5)?,
            frontrun: boolean(6)?,
            backrun: boolean(7)?,
            fatal: false,
            tokens_bought_u: int(8)?,
            tokens_bought_a: int(9)?,
            epoch: int(10)? as u64,
        });
    }
    Ok(out)
}

/// Headline numbers of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryStats<C> {
    pub mode: Mode,
    pub initial: ByParty<C>,
    pub final_wealth: ByParty<C>,
    pub mev_rounds: u128,
    /// Share of MEV rounds in which the user was frontrun, in percent.
    pub frontrun_pct: f64,
    pub backrun_pct: f64,
}

fn pct(count: u128, total: u128) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

/// Recomputes the summary from the per-round records.
pub fn summarize<C: Currency>(series: &MetricsSeries<C>) -> SummaryStats<C> {
    let mev: Vec<_> = series.records.iter().filter(|r| r.mev_made).collect();
    let n = mev.len() as u128;
    let frontrun = mev.iter().filter(|r| r.frontrun).count() as u128;
    let backrun = mev.iter().filter(|r| r.backrun).count() as u128;
    SummaryStats {
        mode: series.mode,
        initial: series.initial,
        final_wealth: series.final_wealth(),
        mev_rounds: n,
        frontrun_pct: pct(frontrun, n),
        backrun_pct: pct(backrun, n),
    }
}

/// Summary from the running counters, without scanning the records.
pub fn summarize_counters<C: Currency>(series: &MetricsSeries<C>) -> SummaryStats<C> {
    let c = series.counters;
    SummaryStats {
        mode: series.mode,
        initial: series.initial,
        final_wealth: series.final_wealth(),
        mev_rounds: c.mev,
        frontrun_pct: pct(c.frontrun, c.mev),
        backrun_pct: pct(c.backrun, c.mev),
    }
}

pub const EPOCHS_HEADER: [&str; 9] = [
    "epoch",
    "start_round",
    "end_round",
    "user_tokens",
    "adversary_tokens",
    "w_u_total",
    "w_a_total",
    "frontrun_fraction",
    "terminal",
];

pub fn write_epochs<C: Currency>(epochs: &[EpochBoundary<C>], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(EPOCHS_HEADER)?;
    for e in epochs {
        w.write_record([
            e.index.to_string(),
            e.start_round.to_string(),
            e.end_round.to_string(),
            e.user_tokens.len().to_string(),
            e.adversary_tokens.len().to_string(),
            e.user_wealth.to_string(),
            e.adversary_wealth.to_string(),
            e.frontrun_fraction().to_string(),
            flag(e.terminal),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const BOUNDS_HEADER: [&str; 10] = [
    "epoch",
    "w_a",
    "w_a_upper",
    "w_a_lower",
    "w_u",
    "w_u_lower",
    "frontrun_fraction",
    "fraction_bound",
    "balanced",
    "violations",
];

/// Writes a bounds report, one row per epoch. The last column lists the
/// violated bounds of that epoch separated by `;`.
pub fn write_bounds_report(report: &BoundsReport<f64>, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(BOUNDS_HEADER)?;
    for r in &report.rows {
        let violated: Vec<&str> = report
            .violations
            .iter()
            .chain(&report.proof_invariant_violations)
            .filter(|v| v.epoch == r.epoch)
            .map(|v| v.kind.as_str())
            .collect();
        w.write_record([
            r.epoch.to_string(),
            format!("{:e}", r.adversary_wealth),
            format!("{:e}", r.adversary_upper),
            format!("{:e}", r.adversary_lower),
            format!("{:e}", r.user_wealth),
            format!("{:e}", r.user_lower),
            format!("{:e}", r.frontrun_fraction),
            r.fraction_bound.map(|b| format!("{b:e}")).unwrap_or_default(),
            flag(r.balanced),
            violated.join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}
